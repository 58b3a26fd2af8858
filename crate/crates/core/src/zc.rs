//! Zadoff-Chu preamble sequences and circular correlation.
//!
//! Lag convention: `values[l]` compares the received sequence against the
//! reference delayed by `l` samples, so a channel delay of `d` samples shows
//! up as `peak_lag == d`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Real};

/// Sequence lengths used by short and long PRACH preamble formats.
pub const STANDARD_LENGTHS: [usize; 2] = [139, 839];

/// Constant-amplitude zero-autocorrelation sequence `exp(-j2π q n(n+1)/2 / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZcSequence<T> {
    root: usize,
    samples: Vec<Complex<T>>,
    warning: Option<String>,
}

impl<T: Real> ZcSequence<T> {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    /// Set when the length is not prime, in which case the zero
    /// autocorrelation property is not guaranteed.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub(crate) fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Generates the root-`q` Zadoff-Chu sequence of length `n_zc`.
pub fn generate_zc<T: Real>(q: usize, n_zc: usize) -> Result<ZcSequence<T>> {
    if n_zc < 3 {
        return Err(Error::invalid(format!("ZC length {n_zc} must be at least 3")));
    }
    if q == 0 || q >= n_zc {
        return Err(Error::invalid(format!("ZC root {q} outside 1..{n_zc}")));
    }
    if gcd(q, n_zc) != 1 {
        return Err(Error::invalid(format!(
            "ZC root {q} is not coprime with length {n_zc}"
        )));
    }
    let warning = (!STANDARD_LENGTHS.contains(&n_zc) && !is_prime(n_zc)).then(|| {
        format!("ZC length {n_zc} is not prime; zero autocorrelation is not guaranteed")
    });

    let n_big = n_zc as u128;
    let two_pi_over_n = T::TAU() / from_usize::<T>(n_zc);
    let samples = (0..n_zc)
        .map(|n| {
            // Reduce the exponent modulo N in integers so large n stays exact.
            let n = n as u128;
            let e = (q as u128 * (n * (n + 1) / 2)) % n_big;
            let phase = -two_pi_over_n * T::from_u128(e).unwrap();
            Complex::from_polar(T::one(), phase)
        })
        .collect();
    Ok(ZcSequence {
        root: q,
        samples,
        warning,
    })
}

/// Power delay profile over all circular lags.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile<T> {
    values: Vec<T>,
    peak_lag: usize,
    mean_power: T,
}

impl<T: Real> CorrelationProfile<T> {
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty correlation profile"));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= T::zero())) {
            return Err(Error::invalid(format!("negative or NaN profile value {bad}")));
        }
        let mut peak_lag = 0;
        for (l, v) in values.iter().enumerate() {
            if *v > values[peak_lag] {
                peak_lag = l;
            }
        }
        let mean_power = values.iter().copied().sum::<T>() / from_usize(values.len());
        Ok(Self {
            values,
            peak_lag,
            mean_power,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First lag attaining the maximum.
    pub fn peak_lag(&self) -> usize {
        self.peak_lag
    }

    pub fn peak_value(&self) -> T {
        self.values[self.peak_lag]
    }

    /// Average power over all lags (`m_tot`).
    pub fn mean_power(&self) -> T {
        self.mean_power
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::from_values(self.values.iter().map(|v| *v * c).collect())
    }
}

/// Frequency-domain circular correlator against a fixed reference.
///
/// Holds the conjugated reference spectrum so repeated correlations (one per
/// Doppler row or OFDM symbol) only cost one forward and one inverse FFT.
pub struct Correlator<T: Real> {
    ref_spectrum_conj: Vec<Complex<T>>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Correlator<T> {
    pub fn new(x_ref: &[Complex<T>]) -> Result<Self> {
        if x_ref.is_empty() {
            return Err(Error::invalid("empty correlation reference"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(x_ref.len());
        let inverse = planner.plan_fft_inverse(x_ref.len());
        let mut spec = x_ref.to_vec();
        forward.process(&mut spec);
        spec.iter_mut().for_each(|c| *c = c.conj());
        Ok(Self {
            ref_spectrum_conj: spec,
            forward,
            inverse,
        })
    }

    pub fn len(&self) -> usize {
        self.ref_spectrum_conj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ref_spectrum_conj.is_empty()
    }

    /// `FFT(y)·conj(FFT(x_ref))`, whose inverse DFT is the correlation at
    /// every lag.
    pub fn cross_spectrum(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if y.len() != self.len() {
            return Err(Error::invalid(format!(
                "correlation length mismatch: reference {}, input {}",
                self.len(),
                y.len()
            )));
        }
        let mut buf = y.to_vec();
        self.forward.process(&mut buf);
        for (b, r) in buf.iter_mut().zip(&self.ref_spectrum_conj) {
            *b = *b * *r;
        }
        Ok(buf)
    }

    /// Adds `|Σ_n y(n)·conj(x_ref((n − l) mod L))|²` into `acc[l]`.
    pub fn accumulate(&self, y: &[Complex<T>], acc: &mut [T]) -> Result<()> {
        let l = self.len();
        if acc.len() != l {
            return Err(Error::invalid(format!(
                "accumulator length {} does not match reference {l}",
                acc.len()
            )));
        }
        let mut buf = self.cross_spectrum(y)?;
        self.inverse.process(&mut buf);
        let scale = T::one() / from_usize::<T>(l);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a = *a + (*z * scale).norm_sqr();
        }
        Ok(())
    }

    pub fn profile(&self, y: &[Complex<T>]) -> Result<CorrelationProfile<T>> {
        let mut acc = vec![T::zero(); self.len()];
        self.accumulate(y, &mut acc)?;
        CorrelationProfile::from_values(acc)
    }
}

/// Non-coherent correlation power at a fractional lag `tau`, band-limited
/// interpolation of the integer-lag profile built from the same cross spectra:
/// `Σ_r |(1/L) Σ_m Z_r[m]·e^{j2π m τ / L}|²`.
pub fn fractional_lag_power<T: Real>(cross_spectra: &[Vec<Complex<T>>], tau: T) -> T {
    cross_spectra
        .iter()
        .map(|z| {
            let l = from_usize::<T>(z.len());
            let step = T::TAU() * tau / l;
            let sum = z
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (m, v)| {
                    acc + *v * Complex::from_polar(T::one(), step * from_usize(m))
                });
            (sum / l).norm_sqr()
        })
        .sum()
}

/// Circular cross-correlation power of `y` against `x_ref` at every lag.
pub fn circular_correlation<T: Real>(
    y: &[Complex<T>],
    x_ref: &[Complex<T>],
) -> Result<CorrelationProfile<T>> {
    if y.len() != x_ref.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            y.len(),
            x_ref.len()
        )));
    }
    Correlator::new(x_ref)?.profile(y)
}
