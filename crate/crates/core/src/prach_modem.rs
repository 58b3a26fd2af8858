//! PRACH preamble transmit and receive chains with correlation-based
//! time-of-arrival estimation.
//!
//! The preamble is a Zadoff-Chu sequence laid along the delay axis and
//! repeated on every Doppler row. The OTFS chain precodes it with the ISFFT
//! before the CP-OFDM modulator; the OFDM baseline puts the same content
//! straight onto subcarriers (one symbol per row). Both receivers correlate
//! against the sequence per row/symbol and sum the resulting power delay
//! profiles non-coherently.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::dd_transform::{DelayDopplerGrid, OfdmModem, SymplecticFft, TimeFrequencyGrid, Waveform};
use crate::error::{Error, Result};
use crate::scalar::{dbm_to_watts, from_usize, lit, Real};
use crate::zc::{fractional_lag_power, generate_zc, CorrelationProfile, Correlator, ZcSequence};
use crate::SPEED_OF_LIGHT;

pub const DEFAULT_TARGET_PFA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Otfs,
    Ofdm,
}

impl Modulation {
    pub const ALL: [Modulation; 2] = [Modulation::Otfs, Modulation::Ofdm];

    pub fn as_str(self) -> &'static str {
        match self {
            Modulation::Otfs => "OTFS",
            Modulation::Ofdm => "OFDM",
        }
    }
}

/// Sub-bin delay estimation applied to the profile peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakRefinement {
    /// Report the peak bin (distance quantised to `c/(Δf·N_DFT)` multiples).
    #[default]
    None,
    /// Three-point parabolic fit around the peak.
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformParams<T> {
    /// Subcarrier spacing Δf, Hz.
    pub delta_f: T,
    pub n_dft: usize,
    /// Subcarriers, equivalently delay bins.
    pub m: usize,
    /// Symbols, equivalently Doppler bins.
    pub n: usize,
    pub n_zc: usize,
    pub root: usize,
    pub cp_len: usize,
    pub modulation: Modulation,
    /// Mean transmit power, W.
    pub tx_power_w: T,
}

impl<T: Real> Default for WaveformParams<T> {
    /// 139-long root-1 preamble, 1024 of 2048 subcarriers at 15 kHz, 23 dBm.
    fn default() -> Self {
        Self {
            delta_f: lit(15e3),
            n_dft: 2048,
            m: 1024,
            n: 4,
            n_zc: 139,
            root: 1,
            cp_len: 2048 / 8,
            modulation: Modulation::Otfs,
            tx_power_w: dbm_to_watts(lit(23.0)),
        }
    }
}

impl<T: Real> WaveformParams<T> {
    /// Small numerology for fast tests: 16 of 32 subcarriers, 4 symbols,
    /// length-13 sequence.
    pub fn toy() -> Self {
        Self {
            n_dft: 32,
            m: 16,
            n: 4,
            n_zc: 13,
            cp_len: 8,
            ..Self::default()
        }
    }

    pub fn with_modulation(self, modulation: Modulation) -> Self {
        Self { modulation, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_f > T::zero()) || !self.delta_f.is_finite() {
            return Err(Error::invalid(format!("delta_f {} must be > 0", self.delta_f)));
        }
        if self.m < 2 || self.n < 1 {
            return Err(Error::invalid(format!("grid {}x{} too small", self.m, self.n)));
        }
        if self.n_dft < self.m || self.n_dft % self.m != 0 {
            return Err(Error::invalid(format!(
                "n_dft {} must be a multiple of the subcarrier count {}",
                self.n_dft, self.m
            )));
        }
        if self.n_zc > self.m {
            return Err(Error::invalid(format!(
                "sequence length {} exceeds {} delay bins",
                self.n_zc, self.m
            )));
        }
        if self.cp_len > self.n_dft {
            return Err(Error::invalid(format!("cp_len {} exceeds n_dft", self.cp_len)));
        }
        if !(self.tx_power_w > T::zero()) {
            return Err(Error::invalid("transmit power must be > 0"));
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> T {
        self.delta_f * from_usize(self.n_dft)
    }

    /// Samples per delay bin.
    pub fn bin_stride(&self) -> usize {
        self.n_dft / self.m
    }

    /// Distance per sample, `c/(Δf·N_DFT)`.
    pub fn distance_quantum(&self) -> T {
        range_from_toa(T::one(), self.delta_f, self.n_dft)
    }

    pub fn frame_len(&self) -> usize {
        self.n * (self.n_dft + self.cp_len)
    }
}

/// Sequence on the first `n_zc` delay bins of every Doppler row.
pub fn build_preamble_grid<T: Real>(zc: &ZcSequence<T>, params: &WaveformParams<T>) -> Result<DelayDopplerGrid<T>> {
    if zc.len() > params.m {
        return Err(Error::invalid(format!(
            "sequence length {} exceeds {} delay bins",
            zc.len(),
            params.m
        )));
    }
    let mut grid = DelayDopplerGrid::zeros(params.m, params.n)?;
    for k in 0..params.n {
        for (l, s) in zc.samples().iter().enumerate() {
            grid.set(l, k, *s);
        }
    }
    Ok(grid)
}

/// `T_total = T_TH · m_tot` with `T_TH = −ln(1 − (1 − P_fa)^(1/L))`, the
/// level an exponentially distributed noise-only maximum over `L` lags
/// exceeds with probability `P_fa`.
pub fn detection_threshold<T: Real>(profile: &CorrelationProfile<T>, target_pfa: T) -> Result<T> {
    if !(target_pfa > T::zero() && target_pfa < T::one()) {
        return Err(Error::invalid(format!("false-alarm probability {target_pfa} outside (0, 1)")));
    }
    if !(profile.mean_power() > T::zero()) {
        return Err(Error::NotDetectable("all-zero correlation profile".into()));
    }
    let per_lag = (-target_pfa).ln_1p() / from_usize(profile.len());
    let t_th = -(-per_lag.exp_m1()).ln();
    Ok(t_th * profile.mean_power())
}

/// `d = c·k/(Δf·N_DFT)`.
pub fn range_from_toa<T: Real>(k: T, delta_f: T, n_dft: usize) -> T {
    lit::<T>(SPEED_OF_LIGHT) * k / (delta_f * from_usize(n_dft))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToaEstimate<T> {
    pub detected: bool,
    /// Peak position in `N_DFT`-rate samples.
    pub sample_delay: usize,
    /// Equal to `sample_delay` unless peak refinement is enabled.
    pub refined_delay: T,
    pub threshold: T,
    pub profile: CorrelationProfile<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangingResult<T> {
    pub estimated_distance: T,
    pub true_distance: T,
    /// `true_distance − estimated_distance`.
    pub error: T,
    pub detected: bool,
}

impl<T: Real> RangingResult<T> {
    pub fn new(estimated_distance: T, true_distance: T, detected: bool) -> Self {
        Self {
            estimated_distance,
            true_distance,
            error: true_distance - estimated_distance,
            detected,
        }
    }
}

/// Transmit/receive chain for one numerology, with FFT plans and the
/// correlation reference prepared once.
pub struct PrachModem<T: Real> {
    params: WaveformParams<T>,
    preamble: DelayDopplerGrid<T>,
    reference: Vec<Complex<T>>,
    symplectic: SymplecticFft<T>,
    ofdm: OfdmModem<T>,
    correlator: Correlator<T>,
    delay_ifft: Arc<dyn Fft<T>>,
}

impl<T: Real> PrachModem<T> {
    pub fn new(params: WaveformParams<T>) -> Result<Self> {
        params.validate()?;
        let zc = generate_zc(params.root, params.n_zc)?;
        let preamble = build_preamble_grid(&zc, &params)?;
        let reference = preamble.row(0).to_vec();
        Ok(Self {
            symplectic: SymplecticFft::new(params.m, params.n)?,
            ofdm: OfdmModem::new(params.n_dft, params.cp_len)?,
            correlator: Correlator::new(&reference)?,
            delay_ifft: FftPlanner::new().plan_fft_inverse(params.m),
            params,
            preamble,
            reference,
        })
    }

    pub fn params(&self) -> &WaveformParams<T> {
        &self.params
    }

    pub fn preamble(&self) -> &DelayDopplerGrid<T> {
        &self.preamble
    }

    /// Baseband frame with mean power `P_t`.
    pub fn transmit(&self) -> Result<Waveform<T>> {
        let p = &self.params;
        let tf = match p.modulation {
            Modulation::Otfs => self.symplectic.isfft(&self.preamble, p.delta_f)?,
            Modulation::Ofdm => {
                TimeFrequencyGrid::from_symbols(p.m, p.n, self.preamble.as_slice().to_vec(), p.delta_f)?
            }
        };
        let mut w = self.ofdm.modulate(&tf)?;
        let scale = (p.tx_power_w / w.mean_power()).sqrt();
        w.samples.iter_mut().for_each(|s| *s = *s * scale);
        Ok(w)
    }

    /// Per row (OTFS) or symbol (OFDM) cross spectrum against the sequence;
    /// the inverse DFT of each is that row's correlation over delay bins.
    fn cross_spectra(&self, rx: &Waveform<T>) -> Result<Vec<Vec<Complex<T>>>> {
        let p = &self.params;
        if rx.sample_rate != p.sample_rate() {
            return Err(Error::Framing(format!(
                "waveform sampled at {} Hz, numerology expects {} Hz",
                rx.sample_rate,
                p.sample_rate()
            )));
        }
        let tf = self.ofdm.demodulate(rx, p.m, p.n)?;
        match p.modulation {
            Modulation::Otfs => {
                let dd = self.symplectic.sfft(&tf)?;
                (0..p.n).map(|k| self.correlator.cross_spectrum(dd.row(k))).collect()
            }
            Modulation::Ofdm => Ok((0..p.n)
                .map(|sym| {
                    tf.symbol(sym)
                        .iter()
                        .zip(&self.reference)
                        .map(|(y, r)| *y * r.conj())
                        .collect()
                })
                .collect()),
        }
    }

    fn profile_from_spectra(&self, spectra: &[Vec<Complex<T>>]) -> Result<CorrelationProfile<T>> {
        let m = self.params.m;
        let scale = T::one() / from_usize::<T>(m);
        let mut acc = vec![T::zero(); m];
        let mut buf = Vec::with_capacity(m);
        for z in spectra {
            buf.clear();
            buf.extend_from_slice(z);
            self.delay_ifft.process(&mut buf);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a = *a + (*c * scale).norm_sqr();
            }
        }
        CorrelationProfile::from_values(acc)
    }

    /// Combined power delay profile over all rows/symbols, indexed by delay bin.
    pub fn delay_profile(&self, rx: &Waveform<T>) -> Result<CorrelationProfile<T>> {
        self.profile_from_spectra(&self.cross_spectra(rx)?)
    }

    pub fn receive(&self, rx: &Waveform<T>, target_pfa: T, refinement: PeakRefinement) -> Result<ToaEstimate<T>> {
        let spectra = self.cross_spectra(rx)?;
        let profile = self.profile_from_spectra(&spectra)?;
        let (detected, threshold) = match detection_threshold(&profile, target_pfa) {
            Ok(t) => (profile.peak_value() >= t, t),
            Err(Error::NotDetectable(_)) => (false, T::zero()),
            Err(e) => return Err(e),
        };
        let stride = self.params.bin_stride();
        let lag = profile.peak_lag();
        let fine_lag = match refinement {
            PeakRefinement::None => from_usize(lag),
            PeakRefinement::Parabolic => {
                (from_usize::<T>(lag) + parabolic_offset(&spectra, lag, profile.peak_value())).max(T::zero())
            }
        };
        Ok(ToaEstimate {
            detected,
            sample_delay: lag * stride,
            refined_delay: fine_lag * from_usize(stride),
            threshold,
            profile,
        })
    }

    /// Estimated distance for a received frame.
    pub fn range(
        &self,
        rx: &Waveform<T>,
        true_distance: T,
        target_pfa: T,
        refinement: PeakRefinement,
    ) -> Result<(ToaEstimate<T>, RangingResult<T>)> {
        let toa = self.receive(rx, target_pfa, refinement)?;
        let d = range_from_toa(toa.refined_delay, self.params.delta_f, self.params.n_dft);
        let r = RangingResult::new(d, true_distance, toa.detected);
        Ok((toa, r))
    }
}

/// Vertex offset of the parabola through the correlation power at the peak
/// and half a bin either side. The profile is critically sampled, so the
/// integer-lag neighbours of an on-bin peak carry almost no signal; the
/// half-bin points keep the fit in the signal-dominated regime.
fn parabolic_offset<T: Real>(spectra: &[Vec<Complex<T>>], peak: usize, peak_power: T) -> T {
    let half = lit::<T>(0.5);
    let centre = from_usize::<T>(peak);
    let a = fractional_lag_power(spectra, centre - half);
    let c = fractional_lag_power(spectra, centre + half);
    let denom = a - lit::<T>(2.0) * peak_power + c;
    if !(denom < T::zero()) {
        return T::zero();
    }
    (half * half * (a - c) / denom).max(-half).min(half)
}

pub fn transmit<T: Real>(params: &WaveformParams<T>) -> Result<Waveform<T>> {
    PrachModem::new(*params)?.transmit()
}

pub fn receive_and_estimate_toa<T: Real>(
    rx: &Waveform<T>,
    params: &WaveformParams<T>,
    target_pfa: T,
) -> Result<ToaEstimate<T>> {
    PrachModem::new(*params)?.receive(rx, target_pfa, PeakRefinement::None)
}
