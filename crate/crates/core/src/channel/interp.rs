//! Kaiser-windowed sinc fractional delay.

use num_complex::Complex;

use crate::scalar::{lit, Real};

pub const HALF_WIDTH: i64 = 32;
const KAISER_BETA: f64 = 8.0;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half_sq / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn windowed_sinc(t: f64) -> f64 {
    let hw = HALF_WIDTH as f64;
    if t.abs() >= hw {
        return 0.0;
    }
    let sinc = if t == 0.0 {
        1.0
    } else {
        let pt = std::f64::consts::PI * t;
        pt.sin() / pt
    };
    let r = t / hw;
    sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA)
}

/// Delay filter for a non-negative delay in samples.
///
/// `x(s − D) ≈ Σ_j taps[j] · x[s − offset − j]` with `j` running from
/// `first` upwards.
#[derive(Debug, Clone)]
pub struct FractionalDelay<T> {
    pub offset: i64,
    pub first: i64,
    pub taps: Vec<T>,
}

impl<T: Real> FractionalDelay<T> {
    pub fn new(delay_samples: f64) -> Self {
        let nearest = delay_samples.round();
        if (delay_samples - nearest).abs() < 1e-9 {
            return Self {
                offset: nearest as i64,
                first: 0,
                taps: vec![T::one()],
            };
        }
        let offset = delay_samples.floor();
        let mu = delay_samples - offset;
        let first = -HALF_WIDTH + 1;
        let taps = (first..=HALF_WIDTH)
            .map(|j| lit::<T>(windowed_sinc(j as f64 - mu)))
            .collect();
        Self {
            offset: offset as i64,
            first,
            taps,
        }
    }

    /// Value of the delayed signal at integer index `s`; samples outside the
    /// input are treated as zero.
    #[inline]
    pub fn sample(&self, x: &[Complex<T>], s: usize) -> Complex<T> {
        let len = x.len() as i64;
        let base = s as i64 - self.offset;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (i, c) in self.taps.iter().enumerate() {
            let idx = base - (self.first + i as i64);
            if idx >= 0 && idx < len {
                acc = acc + x[idx as usize] * *c;
            }
        }
        acc
    }
}
