//! Delay-Doppler tapped channel, additive noise, link budget and tap-file
//! ingestion.

mod interp;
pub mod link;
pub mod synth;
pub mod taps;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dd_transform::Waveform;
use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, from_usize, lit, to_f64, Real};

pub use interp::FractionalDelay;
pub use link::{channel_gain, received_power, received_power_with, GainLaw, LinkBudget};
pub use synth::{synthesize_scenario_channel, LinkContext, NlosSpec};
pub use taps::{load_taps, read_taps, save_taps, write_taps};

/// Strongest-echo margin (dB) below which a point is tagged NLoS.
pub const DEFAULT_LOS_MARGIN_DB: f64 = 6.0;

const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LosTag {
    Los,
    Nlos,
}

impl LosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LosTag::Los => "LoS",
            LosTag::Nlos => "NLoS",
        }
    }
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTap<T> {
    /// Complex amplitude.
    pub gain: Complex<T>,
    /// Seconds.
    pub delay: T,
    /// Hz.
    pub doppler: T,
}

impl<T: Real> ChannelTap<T> {
    pub fn new(gain: Complex<T>, delay: T, doppler: T) -> Result<Self> {
        let tap = Self { gain, delay, doppler };
        tap.validate()?;
        Ok(tap)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delay >= T::zero()) || !self.delay.is_finite() {
            return Err(Error::Validation(format!("tap delay {} must be >= 0", self.delay)));
        }
        if !self.gain.re.is_finite() || !self.gain.im.is_finite() || !self.doppler.is_finite() {
            return Err(Error::Validation("tap gain and Doppler must be finite".into()));
        }
        Ok(())
    }

    pub fn power(&self) -> T {
        self.gain.norm_sqr()
    }
}

/// Taps seen from one trajectory point, sorted by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    taps: Vec<ChannelTap<T>>,
    pub los_tag: LosTag,
    pub trajectory_index: usize,
    /// Metres.
    pub true_distance: T,
}

impl<T: Real> ChannelRealization<T> {
    /// Sorts taps by delay and tags the point NLoS when any later tap comes
    /// within `los_margin_db` of the first-arriving one.
    pub fn new(
        mut taps: Vec<ChannelTap<T>>,
        trajectory_index: usize,
        true_distance: T,
        los_margin_db: T,
    ) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::Validation("channel realization needs at least one tap".into()));
        }
        for t in &taps {
            t.validate()?;
        }
        taps.sort_by(|a, b| a.delay.partial_cmp(&b.delay).expect("validated delays"));
        let los_tag = classify(&taps, los_margin_db);
        Ok(Self {
            taps,
            los_tag,
            trajectory_index,
            true_distance,
        })
    }

    pub fn taps(&self) -> &[ChannelTap<T>] {
        &self.taps
    }

    pub fn max_delay(&self) -> T {
        self.taps.last().map(|t| t.delay).unwrap_or_else(T::zero)
    }
}

fn classify<T: Real>(taps: &[ChannelTap<T>], margin_db: T) -> LosTag {
    let first = taps[0].power();
    let strongest_echo = taps[1..].iter().map(|t| t.power()).fold(T::zero(), T::max);
    if taps.len() > 1 && strongest_echo * db_to_linear(margin_db) >= first {
        LosTag::Nlos
    } else {
        LosTag::Los
    }
}

/// `y(t) = Σ_i α_i e^{j2πν_i(t − τ_i)} x(t − τ_i)` at the sample instants.
/// Sub-sample delays use windowed-sinc interpolation; the output keeps the
/// input length.
pub fn apply_channel<T: Real>(w: &Waveform<T>, ch: &ChannelRealization<T>) -> Result<Waveform<T>> {
    let fs = w.sample_rate;
    let duration = w.duration();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; w.len()];
    for tap in ch.taps() {
        if tap.delay >= duration {
            return Err(Error::invalid(format!(
                "tap delay {} s exceeds frame duration {} s",
                tap.delay, duration
            )));
        }
        let filter = FractionalDelay::<T>::new(to_f64(tap.delay * fs));
        let omega = T::TAU() * tap.doppler / fs;
        let phase0 = -T::TAU() * tap.doppler * tap.delay;
        for (s, y) in out.iter_mut().enumerate() {
            let delayed = filter.sample(&w.samples, s);
            if delayed == zero {
                continue;
            }
            let rot = Complex::from_polar(T::one(), omega * from_usize(s) + phase0);
            *y = *y + tap.gain * rot * delayed;
        }
    }
    Ok(w.with_samples(out))
}

/// Adds circular complex Gaussian noise of total variance `noise_power`.
pub fn add_noise_power<T: Real, R: Rng>(w: &Waveform<T>, noise_power: T, rng: &mut R) -> Waveform<T> {
    let sigma = (to_f64(noise_power) / 2.0).sqrt();
    let samples = w
        .samples
        .iter()
        .map(|s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s + Complex::new(lit::<T>(re * sigma), lit::<T>(im * sigma))
        })
        .collect();
    w.with_samples(samples)
}

/// Adds noise at `snr_db` relative to the measured signal power.
/// `f64::INFINITY` returns the input unchanged.
pub fn add_awgn<T: Real>(w: &Waveform<T>, snr_db: T, seed: u64) -> Result<Waveform<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_awgn_with(w, snr_db, &mut rng)
}

pub fn add_awgn_with<T: Real, R: Rng>(w: &Waveform<T>, snr_db: T, rng: &mut R) -> Result<Waveform<T>> {
    if snr_db.is_infinite() && snr_db > T::zero() {
        return Ok(w.clone());
    }
    let p = w.mean_power();
    if !(p > T::zero()) {
        return Err(Error::invalid("cannot set SNR on a zero-power signal"));
    }
    Ok(add_noise_power(w, p / db_to_linear(snr_db), rng))
}

/// Thermal noise power `k·T·B·F` in watts.
pub fn thermal_noise_power<T: Real>(noise_figure_db: T, bandwidth_hz: T, temperature_k: T) -> T {
    lit::<T>(BOLTZMANN) * temperature_k * bandwidth_hz * db_to_linear(noise_figure_db)
}
