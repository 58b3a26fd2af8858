//! Multipath application checked against an exact frequency-domain delay.

use std::f64::consts::TAU;

use num_complex::Complex64;
use otfs_prach::channel::apply_channel;
use otfs_prach::{ChannelRealization64, ChannelTap64, Waveform64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

const LEN: usize = 1024;
const FS: f64 = 1.0e6;
/// Occupied band as a fraction of the sample rate, centred on DC.
const BAND: f64 = 0.6;
/// Samples at each end excluded from the comparison.
const GUARD: usize = 80;

/// Periodic band-limited test signal with random in-band spectrum.
fn band_limited(seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (BAND * LEN as f64 / 2.0) as usize;
    let mut spec = vec![Complex64::new(0.0, 0.0); LEN];
    for k in 0..LEN {
        let signed = if k < LEN / 2 { k } else { LEN - k };
        if signed <= half {
            spec[k] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    FftPlanner::new().plan_fft_inverse(LEN).process(&mut spec);
    spec.iter().map(|s| s / LEN as f64).collect()
}

/// Circular delay by `tau` seconds through a linear phase ramp, then Doppler.
fn oracle(x: &[Complex64], taps: &[(Complex64, f64, f64)]) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let mut spec = x.to_vec();
    planner.plan_fft_forward(LEN).process(&mut spec);
    let mut out = vec![Complex64::new(0.0, 0.0); LEN];
    for &(gain, tau, nu) in taps {
        let mut s: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let f = if k < LEN / 2 { k as f64 } else { k as f64 - LEN as f64 } * FS / LEN as f64;
                v * Complex64::from_polar(1.0, -TAU * f * tau)
            })
            .collect();
        planner.plan_fft_inverse(LEN).process(&mut s);
        for (n, (o, v)) in out.iter_mut().zip(&s).enumerate() {
            let t = n as f64 / FS;
            *o += gain * Complex64::from_polar(1.0, TAU * nu * (t - tau)) * v / LEN as f64;
        }
    }
    out
}

fn run(x: &[Complex64], taps: &[(Complex64, f64, f64)]) -> Vec<Complex64> {
    let w = Waveform64 {
        samples: x.to_vec(),
        sample_rate: FS,
        n_dft: LEN,
        cp_len: 0,
    };
    let taps = taps
        .iter()
        .map(|&(g, d, nu)| ChannelTap64::new(g, d, nu).unwrap())
        .collect();
    let ch = ChannelRealization64::new(taps, 0, 0.0, 6.0).unwrap();
    apply_channel(&w, &ch).unwrap().samples
}

/// Interior RMS error relative to interior RMS of the oracle.
fn relative_error(got: &[Complex64], want: &[Complex64], max_delay_samples: usize) -> f64 {
    let range = GUARD + max_delay_samples..LEN - GUARD;
    let err: f64 = range.clone().map(|n| (got[n] - want[n]).norm_sqr()).sum();
    let sig: f64 = range.map(|n| want[n].norm_sqr()).sum();
    (err / sig).sqrt()
}

#[test]
fn integer_delay_is_an_exact_shift() {
    let x = band_limited(1);
    let y = run(&x, &[(Complex64::new(1.0, 0.0), 7.0 / FS, 0.0)]);
    for n in 0..LEN {
        let want = if n >= 7 { x[n - 7] } else { Complex64::new(0.0, 0.0) };
        assert!((y[n] - want).norm() < 1e-12, "sample {n}");
    }
}

#[test]
fn three_tap_channel_matches_oracle() {
    let x = band_limited(2);
    let taps = [
        (Complex64::new(0.9, 0.1), 3.25 / FS, 120.0),
        (Complex64::new(-0.2, 0.4), 11.6 / FS, -640.0),
        (Complex64::new(0.05, -0.3), 20.9 / FS, 35.0),
    ];
    let e = relative_error(&run(&x, &taps), &oracle(&x, &taps), 21);
    assert!(e < 1e-3, "relative error {e:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fractional_delay_matches_oracle(
        seed in 0u64..1000,
        delay in 0.0f64..30.0,
        nu in -2000.0f64..2000.0,
        phase in 0.0f64..TAU,
    ) {
        let x = band_limited(seed);
        let taps = [(Complex64::from_polar(1.0, phase), delay / FS, nu)];
        let e = relative_error(&run(&x, &taps), &oracle(&x, &taps), 31);
        prop_assert!(e < 1e-3, "relative error {:e}", e);
    }
}
