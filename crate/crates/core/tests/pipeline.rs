use std::f64::consts::PI;

use msae_core::masking::{enhance, reconstruct, GainFloor, OracleKind, OracleMask};
use msae_core::msae::{decode, decode_branch, encode, magnitude, MsaeConfig};
use msae_core::signal_io::{rms, Waveform};
use msae_core::synth::{mix_at_snr, speech_shaped, white_noise};
use msae_core::Error;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

fn default_cfg() -> MsaeConfig {
    MsaeConfig::from_tuple(5, 2.0, 2.5, 1.0, 16_000).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    rms(&d) / rms(a)
}

#[test]
fn twice_magnitude_is_the_dft_modulus() {
    let n = 32;
    let d = 128;
    let cfg = MsaeConfig::from_tuple(1, 2.0, n as f64 / 16.0, 1.0, 16_000).unwrap();
    let x = white_noise(d, 11);
    let m = magnitude(&encode(&x, &cfg).unwrap());
    assert_eq!((m.frames, m.bins), (2 * d / n, n / 2 + 1));
    for t in 0..m.frames {
        for k in 0..m.bins {
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..n {
                let h = (PI * j as f64 / n as f64).sin();
                let v = h * x[(t * n / 2 + j) % d];
                let ph = 2.0 * PI * (k * j) as f64 / n as f64;
                re += v * ph.cos();
                im -= v * ph.sin();
            }
            let modulus = re.hypot(im) / (n as f64).sqrt();
            assert!((2.0 * m.get(t, k) - modulus).abs() < 1e-12, "t={t} k={k}");
        }
    }
}

#[test]
fn second_pass_error_within_twice_the_first() {
    let cfg = default_cfg();
    let x = speech_shaped(20_480, 3);
    let y = decode(&encode(&x, &cfg).unwrap(), &cfg, x.len()).unwrap();
    let y2 = decode(&encode(&y, &cfg).unwrap(), &cfg, y.len()).unwrap();
    let first = rel_err(&x, &y);
    assert!(
        rel_err(&y, &y2) <= 2.0 * first,
        "{} vs {first}",
        rel_err(&y, &y2)
    );
}

fn in_band_fraction(y: &[f64], lo: f64, hi: f64) -> f64 {
    let len = y.len();
    let mut buf: Vec<Complex<f64>> = y.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, c) in buf.iter().enumerate().take(len / 2 + 1) {
        let f = 2.0 * i as f64 / len as f64;
        let e = c.norm_sqr();
        total += e;
        if f >= lo && f <= hi {
            inside += e;
        }
    }
    inside / total
}

#[test]
fn branch_outputs_are_band_limited() {
    let cfg = default_cfg();
    let x = white_noise(20_480, 5);
    let z = encode(&x, &cfg).unwrap();
    for (b, br) in cfg.branches().iter().enumerate() {
        let y = decode_branch(&z, &cfg, b + 1, x.len()).unwrap();
        let (lo, hi) = br.band();
        let frac = in_band_fraction(&y, lo, hi);
        assert!(frac >= 0.75, "branch {} keeps {frac:.3} in band", b + 1);
    }
}

#[test]
fn decode_homogeneity_at_default_config() {
    let cfg = default_cfg();
    let x = speech_shaped(20_480, 9);
    let z = encode(&x, &cfg).unwrap();
    let base = decode(&z, &cfg, x.len()).unwrap();
    for alpha in [0.0, 0.25, 3.0] {
        let scaled = z.with_tensor(z.tensor().scaled(alpha)).unwrap();
        let y = decode(&scaled, &cfg, x.len()).unwrap();
        let expect: Vec<f64> = base.iter().map(|v| alpha * v).collect();
        let err = rms(&y
            .iter()
            .zip(&expect)
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>());
        assert!(err <= 1e-6 * rms(&base), "alpha={alpha}");
    }
}

#[test]
fn raising_the_floor_approaches_the_autoencoder() {
    let cfg = default_cfg();
    let d = 20_480;
    let s = speech_shaped(2 * d, 1);
    let x = mix_at_snr(&s, &white_noise(2 * d, 2), 0.0).unwrap();
    let xw = Waveform::new(x, 16_000).unwrap();
    let sw = Waveform::new(s, 16_000).unwrap();
    let ae = reconstruct(&xw, &cfg, d).unwrap();
    let mut last = f64::INFINITY;
    for db in [-50.0, -20.0, -10.0, 0.0] {
        let out = enhance(
            &xw,
            Some(&sw),
            &OracleMask(OracleKind::Wiener),
            &cfg,
            GainFloor::from_db(db).unwrap(),
            d,
        )
        .unwrap();
        assert_eq!(out.waveform.len(), xw.len());
        let dist = rms(&out
            .waveform
            .samples()
            .iter()
            .zip(ae.samples())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>());
        assert!(dist <= last, "floor {db} dB moved away: {dist} > {last}");
        last = dist;
    }
    assert!(last < 1e-12);
}

#[test]
fn silence_passes_through() {
    let cfg = default_cfg();
    let x = Waveform::new(vec![0.0; 30_000], 16_000).unwrap();
    let y = reconstruct(&x, &cfg, 20_480).unwrap();
    assert!(y.samples().iter().all(|v| *v == 0.0));
}

#[test]
fn mismatched_target_is_rejected() {
    let cfg = default_cfg();
    let x = Waveform::new(white_noise(20_480, 1), 16_000).unwrap();
    let s = Waveform::new(white_noise(20_000, 1), 16_000).unwrap();
    let err = enhance(
        &x,
        Some(&s),
        &OracleMask(OracleKind::Amplitude),
        &cfg,
        GainFloor::unity(),
        20_480,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Consistency(_)));
    let err = enhance(
        &x,
        None,
        &OracleMask(OracleKind::Wiener),
        &cfg,
        GainFloor::unity(),
        20_480,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Consistency(_)));
}

#[test]
fn frame_length_must_fit_the_branch_grid() {
    let cfg = default_cfg();
    let x = Waveform::new(white_noise(4_000, 1), 16_000).unwrap();
    let err = reconstruct(&x, &cfg, 1_000).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("640"));
}
