use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use msae_core::bands::BandPlan;
use msae_core::masking::{enhance, reconstruct, OracleKind, OracleMask};
use msae_core::metrics::{
    activity_flags, activity_weights, mse, pmse, reconstruction_error_db, segmental_snr_db, snr_db,
    weighted_pmse,
};
use msae_core::msae::{encode, magnitude, Magnitude};
use msae_core::signal_io::{read_wav, split_frames, write_wav, WavEncoding, Waveform};
use msae_core::synth::{mix_at_snr, pink_noise, speech_shaped, white_noise};
use msae_core::targets::wiener_target;
use msae_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Command, ConfigArgs, MaskKind, NoiseKind, SpecFormat};

pub fn dispatch(cmd: Command, out: &mut (dyn Write + Send)) -> Result<()> {
    match cmd {
        Command::DesignBands { cfg } => design_bands(&cfg, out),
        Command::Analyze {
            input,
            out: path,
            format,
            cfg,
        } => analyze(&input, &path, format, &cfg, out),
        Command::Reconstruct {
            input,
            output,
            report,
            encoding,
            cfg,
        } => run_reconstruct(&input, &output, report, encoding.into(), &cfg, out),
        Command::EnhanceOracle {
            noisy,
            target,
            mask,
            out: path,
            metrics,
            encoding,
            cfg,
        } => enhance_oracle(
            &noisy,
            &target,
            mask,
            &path,
            metrics.as_deref(),
            encoding.into(),
            &cfg,
            out,
        ),
        Command::MakeTarget {
            clean,
            reverb,
            out: path,
            encoding,
            cfg,
        } => make_target(&clean, &reverb, &path, encoding.into(), &cfg, out),
        Command::Eval {
            reference,
            est,
            cfg,
        } => eval(&reference, &est, &cfg, out),
        Command::Mix {
            clean,
            clean_out,
            noisy_out,
            snr_db,
            noise,
            seconds,
            seed,
            level,
            encoding,
            cfg,
        } => mix(
            MixArgs {
                clean: clean.as_deref(),
                clean_out: clean_out.as_deref(),
                noisy_out: &noisy_out,
                snr_db,
                noise,
                seconds,
                seed,
                level,
            },
            encoding.into(),
            &cfg,
            out,
        ),
    }
}

/// Prefixes I/O and format errors with the file they concern.
fn at(path: &Path) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        Error::Unsupported(m) => Error::Unsupported(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn read_at(path: &Path, rate: u32) -> Result<Waveform> {
    let w = read_wav(path).map_err(at(path))?;
    w.require_rate(rate).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(w)
}

fn save(path: &Path, w: &Waveform, encoding: WavEncoding) -> Result<()> {
    write_wav(path, w, encoding).map_err(at(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| at(path)(e.into()))?,
    ))
}

fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

#[derive(Serialize)]
struct BandReport {
    branches: usize,
    quality_factor: Option<f64>,
    sample_rate: u32,
    edges: Vec<f64>,
    edges_hz: Vec<f64>,
    measured_q: Vec<f64>,
}

fn design_bands(args: &ConfigArgs, out: &mut dyn Write) -> Result<()> {
    let rc = args.resolve()?;
    let plan = if rc.branches == 1 {
        BandPlan::uniform(1)?
    } else {
        BandPlan::constant_q(rc.branches, rc.quality_factor)?
    };
    let measured_q = (1..=plan.num_bands())
        .map(|b| plan.measured_q(b))
        .collect::<Result<_>>()?;
    write_json(
        &BandReport {
            branches: plan.num_bands(),
            quality_factor: plan.quality_factor(),
            sample_rate: rc.sample_rate,
            edges: plan.edges().to_vec(),
            edges_hz: plan.edges_hz(rc.sample_rate),
            measured_q,
        },
        out,
    )
}

fn analyze(
    input: &Path,
    path: &Path,
    format: Option<SpecFormat>,
    args: &ConfigArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let format = match format {
        Some(f) => f,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => SpecFormat::Csv,
            Some("pgm") => SpecFormat::Pgm,
            _ => {
                return Err(Error::Unsupported(format!(
                    "cannot infer spectrogram format from {}; use .csv, .pgm or --format",
                    path.display()
                )))
            }
        },
    };
    let rc = args.resolve()?;
    let cfg = rc.validate()?;
    let x = read_at(input, rc.sample_rate)?;
    let frames = split_frames(&x, rc.frame_len, 0.5)?;
    let mags: Vec<Magnitude> = frames
        .par_iter()
        .map(|f| Ok(magnitude(&encode(&f.payload, &cfg)?)))
        .collect::<Result<_>>()?;
    let rows: usize = mags.iter().map(|m| m.frames).sum();
    let cols = cfg.total_bins();

    let mut w = create(path)?;
    match format {
        SpecFormat::Csv => {
            for m in &mags {
                for t in 0..m.frames {
                    let line: Vec<String> = m.row(t).iter().map(|v| v.to_string()).collect();
                    writeln!(w, "{}", line.join(","))?;
                }
            }
        }
        SpecFormat::Pgm => {
            let level = |v: f64| v.ln_1p() / std::f64::consts::LN_10;
            let peak = mags
                .iter()
                .flat_map(|m| &m.data)
                .map(|v| level(*v))
                .fold(0.0, f64::max);
            write!(w, "P5\n{cols} {rows}\n255\n")?;
            let pixels: Vec<u8> = mags
                .iter()
                .flat_map(|m| &m.data)
                .map(|v| {
                    if peak > 0.0 {
                        (255.0 * level(*v) / peak).round() as u8
                    } else {
                        0
                    }
                })
                .collect();
            w.write_all(&pixels)?;
        }
    }
    w.flush()?;
    writeln!(
        out,
        "processing_frames={} rows={rows} cols={cols}",
        frames.len()
    )?;
    Ok(())
}

fn run_reconstruct(
    input: &Path,
    output: &Path,
    report: bool,
    encoding: WavEncoding,
    args: &ConfigArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let rc = args.resolve()?;
    let cfg = rc.validate()?;
    let x = read_at(input, rc.sample_rate)?;
    let y = reconstruct(&x, &cfg, rc.frame_len)?;
    save(output, &y, encoding)?;
    let err = reconstruction_error_db(x.samples(), y.samples())?;
    writeln!(out, "reconstruction_error_db={err:.4}")?;
    if report {
        let block = (rc.sample_rate / 50) as usize;
        let seg = segmental_snr_db(x.samples(), y.samples(), block)?;
        writeln!(out, "segmental_snr_db={seg:.4}")?;
        writeln!(out, "samples={}", x.len())?;
    }
    Ok(())
}

/// Fixed-key summary written by `enhance-oracle`.
#[derive(Debug, Serialize)]
pub struct EnhanceMetrics {
    pub mask: &'static str,
    pub floor_db: f64,
    pub samples: usize,
    pub frames: usize,
    pub degenerate_bins: usize,
    pub input_snr_db: f64,
    pub output_snr_db: f64,
    pub snr_improvement_db: f64,
    pub input_pmse: f64,
    pub output_pmse: f64,
    pub output_weighted_pmse: f64,
    pub reconstruction_error_db: f64,
}

#[allow(clippy::too_many_arguments)]
fn enhance_oracle(
    noisy: &Path,
    target: &Path,
    mask: MaskKind,
    path: &Path,
    metrics: Option<&Path>,
    encoding: WavEncoding,
    args: &ConfigArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let rc = args.resolve()?;
    let cfg = rc.validate()?;
    let p = rc.pmse_params()?;
    let x = read_at(noisy, rc.sample_rate)?;
    let s = read_at(target, rc.sample_rate)?;
    let (kind, name) = match mask {
        MaskKind::Wiener => (OracleKind::Wiener, "wiener"),
        MaskKind::Iram => (OracleKind::Amplitude, "iram"),
    };
    let result = enhance(
        &x,
        Some(&s),
        &OracleMask(kind),
        &cfg,
        rc.floor()?,
        rc.frame_len,
    )?;
    let y = &result.waveform;
    save(path, y, encoding)?;

    let ae = reconstruct(&x, &cfg, rc.frame_len)?;
    let flags = activity_flags(s.samples(), rc.sample_rate);
    let weights = activity_weights(&flags, rc.activity_prior)?.per_sample(&flags);
    let input_snr_db = snr_db(s.samples(), x.samples())?;
    let output_snr_db = snr_db(s.samples(), y.samples())?;
    let m = EnhanceMetrics {
        mask: name,
        floor_db: rc.floor_db,
        samples: x.len(),
        frames: result.frames,
        degenerate_bins: result.stats.degenerate_bins,
        input_snr_db,
        output_snr_db,
        snr_improvement_db: output_snr_db - input_snr_db,
        input_pmse: pmse(s.samples(), x.samples(), p)?,
        output_pmse: pmse(s.samples(), y.samples(), p)?,
        output_weighted_pmse: weighted_pmse(s.samples(), y.samples(), p, &weights)?,
        reconstruction_error_db: reconstruction_error_db(x.samples(), ae.samples())?,
    };
    match metrics {
        Some(mp) => {
            let mut f = create(mp)?;
            write_json(&m, &mut f)?;
            f.flush()?;
            writeln!(
                out,
                "input_snr_db={input_snr_db:.4} output_snr_db={output_snr_db:.4}"
            )?;
        }
        None => write_json(&m, out)?,
    }
    Ok(())
}

fn make_target(
    clean: &Path,
    reverb: &Path,
    path: &Path,
    encoding: WavEncoding,
    args: &ConfigArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let rc = args.resolve()?;
    let s = read_at(clean, rc.sample_rate)?;
    let v = read_at(reverb, rc.sample_rate)?;
    let (target, stats) = wiener_target(s.samples(), v.samples(), rc.stft_win)?;
    save(path, &Waveform::new(target, rc.sample_rate)?, encoding)?;
    writeln!(
        out,
        "zero_bins={} total_bins={}",
        stats.zero_bins, stats.total_bins
    )?;
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    mse: f64,
    pmse: f64,
    snr_db: f64,
}

fn eval(reference: &Path, est: &Path, args: &ConfigArgs, out: &mut dyn Write) -> Result<()> {
    let rc = args.resolve()?;
    let p = rc.pmse_params()?;
    let r = read_at(reference, rc.sample_rate)?;
    let e = read_at(est, rc.sample_rate)?;
    write_json(
        &EvalReport {
            mse: mse(r.samples(), e.samples())?,
            pmse: pmse(r.samples(), e.samples(), p)?,
            snr_db: snr_db(r.samples(), e.samples())?,
        },
        out,
    )
}

struct MixArgs<'a> {
    clean: Option<&'a Path>,
    clean_out: Option<&'a Path>,
    noisy_out: &'a Path,
    snr_db: f64,
    noise: NoiseKind,
    seconds: f64,
    seed: u64,
    level: f64,
}

fn mix(
    a: MixArgs<'_>,
    encoding: WavEncoding,
    args: &ConfigArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let rc = args.resolve()?;
    let rate = rc.sample_rate;
    let clean = match a.clean {
        Some(p) => read_at(p, rate)?.into_samples(),
        None => {
            if !(a.seconds > 0.0 && a.seconds.is_finite()) {
                return Err(Error::Domain(format!(
                    "--seconds must be positive, got {}",
                    a.seconds
                )));
            }
            let len = (a.seconds * rate as f64).round() as usize;
            speech_shaped(len, a.seed)
                .into_iter()
                .map(|v| v * a.level)
                .collect()
        }
    };
    let noise_seed = a.seed.wrapping_add(1);
    let noise = match a.noise {
        NoiseKind::White => white_noise(clean.len(), noise_seed),
        NoiseKind::Pink => pink_noise(clean.len(), noise_seed),
    };
    let noisy = mix_at_snr(&clean, &noise, a.snr_db)?;
    let peak = noisy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if encoding == WavEncoding::Pcm16 && peak > 1.0 {
        return Err(Error::Domain(format!(
            "mixture peaks at {peak:.3} and would clip; lower --level"
        )));
    }
    if let Some(p) = a.clean_out {
        save(p, &Waveform::new(clean.clone(), rate)?, encoding)?;
    }
    save(a.noisy_out, &Waveform::new(noisy, rate)?, encoding)?;
    writeln!(out, "samples={} snr_db={}", clean.len(), a.snr_db)?;
    Ok(())
}
