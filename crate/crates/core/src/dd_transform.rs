//! Delay-Doppler <-> time-frequency transforms and the CP-OFDM (Heisenberg /
//! Wigner) modem underneath them.
//!
//! Both symplectic transforms use the unitary `1/√(MN)` scaling so that they
//! are exact inverses and preserve energy. The time-domain modem uses a
//! rectangular pulse per symbol with a cyclic prefix and unitary DFTs.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Real};

/// Symbols on the delay-Doppler lattice, `M` delay bins by `N` Doppler bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDopplerGrid<T> {
    m: usize,
    n: usize,
    // Doppler-row major: data[k * m + l].
    data: Vec<Complex<T>>,
}

impl<T: Real> DelayDopplerGrid<T> {
    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        Ok(Self {
            m,
            n,
            data: vec![Complex::new(T::zero(), T::zero()); m * n],
        })
    }

    /// Builds a grid from Doppler rows, each holding `m` delay bins.
    pub fn from_rows(m: usize, n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        check_dims(m, n)?;
        if data.len() != m * n {
            return Err(Error::invalid(format!(
                "grid data has {} entries, expected {}",
                data.len(),
                m * n
            )));
        }
        Ok(Self { m, n, data })
    }

    pub fn delay_bins(&self) -> usize {
        self.m
    }

    pub fn doppler_bins(&self) -> usize {
        self.n
    }

    pub fn get(&self, l: usize, k: usize) -> Complex<T> {
        self.data[k * self.m + l]
    }

    pub fn set(&mut self, l: usize, k: usize, v: Complex<T>) {
        self.data[k * self.m + l] = v;
    }

    /// Delay profile of Doppler row `k`.
    pub fn row(&self, k: usize) -> &[Complex<T>] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn energy(&self) -> T {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Symbols on the time-frequency lattice, `N` OFDM symbols by `M` subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrequencyGrid<T> {
    m: usize,
    n: usize,
    // Symbol major: data[n * m + subcarrier].
    data: Vec<Complex<T>>,
    subcarrier_spacing: T,
}

impl<T: Real> TimeFrequencyGrid<T> {
    pub fn from_symbols(m: usize, n: usize, data: Vec<Complex<T>>, delta_f: T) -> Result<Self> {
        check_dims(m, n)?;
        if data.len() != m * n {
            return Err(Error::invalid(format!(
                "grid data has {} entries, expected {}",
                data.len(),
                m * n
            )));
        }
        if !(delta_f > T::zero()) || !delta_f.is_finite() {
            return Err(Error::invalid(format!("subcarrier spacing {delta_f} must be > 0")));
        }
        Ok(Self {
            m,
            n,
            data,
            subcarrier_spacing: delta_f,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.m
    }

    pub fn symbols(&self) -> usize {
        self.n
    }

    pub fn subcarrier_spacing(&self) -> T {
        self.subcarrier_spacing
    }

    /// Useful symbol duration `T = 1/Δf` (critically sampled lattice).
    pub fn symbol_interval(&self) -> T {
        T::one() / self.subcarrier_spacing
    }

    pub fn get(&self, n: usize, m: usize) -> Complex<T> {
        self.data[n * self.m + m]
    }

    pub fn symbol(&self, n: usize) -> &[Complex<T>] {
        &self.data[n * self.m..(n + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn energy(&self) -> T {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Complex baseband samples of a CP-OFDM frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub samples: Vec<Complex<T>>,
    /// `Δf · n_dft`, in Hz.
    pub sample_rate: T,
    pub n_dft: usize,
    pub cp_len: usize,
}

impl<T: Real> Waveform<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn symbol_len(&self) -> usize {
        self.n_dft + self.cp_len
    }

    pub fn energy(&self) -> T {
        self.samples.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        self.energy() / from_usize(self.samples.len())
    }

    /// Frame duration in seconds.
    pub fn duration(&self) -> T {
        from_usize::<T>(self.samples.len()) / self.sample_rate
    }

    pub fn with_samples(&self, samples: Vec<Complex<T>>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            n_dft: self.n_dft,
            cp_len: self.cp_len,
        }
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m < 1 || n < 1 {
        return Err(Error::invalid(format!("grid dimensions {m}x{n} must be positive")));
    }
    Ok(())
}

/// DFT bin carrying logical subcarrier `m` out of `m_total`, with the active
/// block centred on DC.
pub fn subcarrier_bin(m: usize, m_total: usize, n_dft: usize) -> usize {
    (m + n_dft - m_total / 2) % n_dft
}

/// Planned FFTs for the symplectic transform pair at one grid size.
pub struct SymplecticFft<T: Real> {
    m: usize,
    n: usize,
    delay_fwd: Arc<dyn Fft<T>>,
    delay_inv: Arc<dyn Fft<T>>,
    doppler_fwd: Arc<dyn Fft<T>>,
    doppler_inv: Arc<dyn Fft<T>>,
}

impl<T: Real> SymplecticFft<T> {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        check_dims(m, n)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            m,
            n,
            delay_fwd: planner.plan_fft_forward(m),
            delay_inv: planner.plan_fft_inverse(m),
            doppler_fwd: planner.plan_fft_forward(n),
            doppler_inv: planner.plan_fft_inverse(n),
        })
    }

    fn check(&self, m: usize, n: usize) -> Result<()> {
        if (m, n) != (self.m, self.n) {
            return Err(Error::invalid(format!(
                "grid {m}x{n} does not match planned {}x{}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// `X[n,m] = (1/√(MN)) Σ_{l,k} x[l,k] e^{j2π(nk/N − ml/M)}`.
    pub fn isfft(&self, dd: &DelayDopplerGrid<T>, delta_f: T) -> Result<TimeFrequencyGrid<T>> {
        self.check(dd.m, dd.n)?;
        let mut data = dd.data.clone();
        self.apply(&mut data, &self.delay_fwd, &self.doppler_inv);
        TimeFrequencyGrid::from_symbols(self.m, self.n, data, delta_f)
    }

    /// `x[l,k] = (1/√(MN)) Σ_{n,m} X[n,m] e^{−j2π(nk/N − ml/M)}`.
    pub fn sfft(&self, tf: &TimeFrequencyGrid<T>) -> Result<DelayDopplerGrid<T>> {
        self.check(tf.m, tf.n)?;
        let mut data = tf.data.clone();
        self.apply(&mut data, &self.delay_inv, &self.doppler_fwd);
        DelayDopplerGrid::from_rows(self.m, self.n, data)
    }

    // Rows along the delay/subcarrier axis, columns along Doppler/symbol.
    fn apply(&self, data: &mut [Complex<T>], along_rows: &Arc<dyn Fft<T>>, along_cols: &Arc<dyn Fft<T>>) {
        let (m, n) = (self.m, self.n);
        for row in data.chunks_exact_mut(m) {
            along_rows.process(row);
        }
        let mut col = vec![Complex::new(T::zero(), T::zero()); n];
        for c in 0..m {
            for r in 0..n {
                col[r] = data[r * m + c];
            }
            along_cols.process(&mut col);
            for r in 0..n {
                data[r * m + c] = col[r];
            }
        }
        let scale = T::one() / from_usize::<T>(m * n).sqrt();
        data.iter_mut().for_each(|v| *v = *v * scale);
    }
}

pub fn isfft<T: Real>(dd: &DelayDopplerGrid<T>, delta_f: T) -> Result<TimeFrequencyGrid<T>> {
    SymplecticFft::new(dd.m, dd.n)?.isfft(dd, delta_f)
}

pub fn sfft<T: Real>(tf: &TimeFrequencyGrid<T>) -> Result<DelayDopplerGrid<T>> {
    SymplecticFft::new(tf.m, tf.n)?.sfft(tf)
}

/// CP-OFDM modulator/demodulator with a fixed DFT size and prefix length.
pub struct OfdmModem<T: Real> {
    n_dft: usize,
    cp_len: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> OfdmModem<T> {
    pub fn new(n_dft: usize, cp_len: usize) -> Result<Self> {
        if n_dft < 1 {
            return Err(Error::invalid("n_dft must be positive"));
        }
        if cp_len > n_dft {
            return Err(Error::invalid(format!(
                "cyclic prefix {cp_len} longer than symbol {n_dft}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n_dft,
            cp_len,
            fwd: planner.plan_fft_forward(n_dft),
            inv: planner.plan_fft_inverse(n_dft),
        })
    }

    /// Heisenberg transform: per-symbol IDFT of the mapped subcarriers, with
    /// the last `cp_len` samples prepended.
    pub fn modulate(&self, tf: &TimeFrequencyGrid<T>) -> Result<Waveform<T>> {
        let (m, n_dft, cp) = (tf.m, self.n_dft, self.cp_len);
        if n_dft < m {
            return Err(Error::invalid(format!(
                "n_dft {n_dft} smaller than subcarrier count {m}"
            )));
        }
        let scale = T::one() / from_usize::<T>(n_dft).sqrt();
        let zero = Complex::new(T::zero(), T::zero());
        let mut samples = Vec::with_capacity(tf.n * (n_dft + cp));
        let mut buf = vec![zero; n_dft];
        for sym in 0..tf.n {
            buf.iter_mut().for_each(|b| *b = zero);
            for (sc, v) in tf.symbol(sym).iter().enumerate() {
                buf[subcarrier_bin(sc, m, n_dft)] = *v;
            }
            self.inv.process(&mut buf);
            buf.iter_mut().for_each(|b| *b = *b * scale);
            samples.extend_from_slice(&buf[n_dft - cp..]);
            samples.extend_from_slice(&buf);
        }
        Ok(Waveform {
            samples,
            sample_rate: tf.subcarrier_spacing * from_usize(n_dft),
            n_dft,
            cp_len: cp,
        })
    }

    /// Wigner transform: strips each prefix, DFTs the symbol and reads back
    /// the `m` mapped subcarriers.
    pub fn demodulate(&self, w: &Waveform<T>, m: usize, n: usize) -> Result<TimeFrequencyGrid<T>> {
        let (n_dft, cp) = (self.n_dft, self.cp_len);
        if w.n_dft != n_dft || w.cp_len != cp {
            return Err(Error::Framing(format!(
                "waveform numerology ({}, cp {}) does not match modem ({n_dft}, cp {cp})",
                w.n_dft, w.cp_len
            )));
        }
        if w.samples.len() != n * (n_dft + cp) {
            return Err(Error::Framing(format!(
                "waveform has {} samples, expected {} for {n} symbols",
                w.samples.len(),
                n * (n_dft + cp)
            )));
        }
        if n_dft < m {
            return Err(Error::invalid(format!(
                "n_dft {n_dft} smaller than subcarrier count {m}"
            )));
        }
        let scale = T::one() / from_usize::<T>(n_dft).sqrt();
        let mut data = Vec::with_capacity(m * n);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n_dft];
        for frame in w.samples.chunks_exact(n_dft + cp) {
            buf.copy_from_slice(&frame[cp..]);
            self.fwd.process(&mut buf);
            data.extend((0..m).map(|sc| buf[subcarrier_bin(sc, m, n_dft)] * scale));
        }
        let delta_f = w.sample_rate / from_usize(n_dft);
        TimeFrequencyGrid::from_symbols(m, n, data, delta_f)
    }
}

pub fn heisenberg_modulate<T: Real>(
    tf: &TimeFrequencyGrid<T>,
    n_dft: usize,
    cp_len: usize,
) -> Result<Waveform<T>> {
    if n_dft < tf.m {
        return Err(Error::invalid(format!(
            "n_dft {n_dft} smaller than subcarrier count {}",
            tf.m
        )));
    }
    OfdmModem::new(n_dft, cp_len)?.modulate(tf)
}

pub fn wigner_demodulate<T: Real>(w: &Waveform<T>, m: usize, n: usize) -> Result<TimeFrequencyGrid<T>> {
    OfdmModem::new(w.n_dft, w.cp_len)?.demodulate(w, m, n)
}
