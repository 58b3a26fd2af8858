//! Synthetic air-to-ground channels standing in for ray-traced tap exports.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::link::{received_power_with, GainLaw};
use super::{ChannelRealization, ChannelTap};
use crate::error::{Error, Result};
use crate::scalar::{deg_to_rad, lit, Real};
use crate::uav::{antenna_gain, gain_towards_target, AntennaConfig, TrajectoryPoint};
use crate::SPEED_OF_LIGHT;

/// Scattered paths added on top of the direct path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlosSpec<T> {
    pub count: usize,
    /// Extra path length over the direct path, metres.
    pub excess_delay_m: (T, T),
    /// Power relative to a free-space path of the same length, dB.
    pub relative_power_db: (T, T),
}

impl<T: Real> NlosSpec<T> {
    pub fn none() -> Self {
        Self {
            count: 0,
            excess_delay_m: (T::zero(), T::zero()),
            relative_power_db: (T::zero(), T::zero()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d0, d1) = self.excess_delay_m;
        let (p0, p1) = self.relative_power_db;
        if !(d0 >= T::zero() && d1 >= d0) {
            return Err(Error::invalid(format!("excess delay range [{d0}, {d1}] invalid")));
        }
        if !(p1 >= p0) {
            return Err(Error::invalid(format!("relative power range [{p0}, {p1}] invalid")));
        }
        Ok(())
    }
}

/// Radio parameters shared by every point of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkContext<T> {
    pub carrier_hz: T,
    pub tx_power_w: T,
    pub g_t_db: T,
    /// `None` for an omnidirectional receive antenna at 0 dBi.
    pub antenna: Option<AntennaConfig<T>>,
    /// Antenna tilt below the horizontal, degrees.
    pub tilt_deg: T,
    pub gain_law: GainLaw,
    pub los_margin_db: T,
}

impl<T: Real> LinkContext<T> {
    pub fn wavelength(&self) -> T {
        lit::<T>(SPEED_OF_LIGHT) / self.carrier_hz
    }

    fn rx_gain_db(&self, direction_deg: T) -> T {
        match &self.antenna {
            Some(a) => antenna_gain(T::zero(), direction_deg, self.tilt_deg, a),
            None => T::zero(),
        }
    }

    /// Amplitude of a free-space path of length `d` arriving from `direction_deg`.
    fn path_amplitude(&self, d: T, rx_gain_db: T) -> Result<T> {
        let p_r = received_power_with(
            self.tx_power_w,
            self.wavelength(),
            d,
            self.g_t_db,
            rx_gain_db,
            self.gain_law,
        )?;
        Ok((p_r / self.tx_power_w).sqrt())
    }
}

/// Direct path from the trajectory geometry plus `nlos.count` scattered paths
/// with random excess length, power, phase and arrival direction.
pub fn synthesize_scenario_channel<T: Real>(
    point: &TrajectoryPoint<T>,
    link: &LinkContext<T>,
    nlos: &NlosSpec<T>,
    seed: u64,
) -> Result<ChannelRealization<T>> {
    nlos.validate()?;
    let c = lit::<T>(SPEED_OF_LIGHT);
    let d = point.distance();
    let lambda = link.wavelength();
    let doppler_scale = point.speed / lambda;

    let los_gain_db = match &link.antenna {
        Some(a) => gain_towards_target(point, link.tilt_deg, a),
        None => T::zero(),
    };
    let los_phase = -T::TAU() * (d / lambda).fract();
    let mut taps = vec![ChannelTap::new(
        Complex::from_polar(link.path_amplitude(d, los_gain_db)?, los_phase),
        d / c,
        point.radial_speed() / lambda,
    )?];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..nlos.count {
        let excess = uniform(&mut rng, nlos.excess_delay_m);
        let rel_db = uniform(&mut rng, nlos.relative_power_db);
        let direction = uniform(&mut rng, (T::zero(), lit(180.0)));
        let phase = uniform(&mut rng, (T::zero(), T::TAU()));
        let path = d + excess;
        let amp = link.path_amplitude(path, link.rx_gain_db(direction))?
            * lit::<T>(10.0).powf(rel_db / lit(20.0));
        taps.push(ChannelTap::new(
            Complex::from_polar(amp, phase),
            path / c,
            doppler_scale * deg_to_rad(direction).cos(),
        )?);
    }
    ChannelRealization::new(taps, point.index, d, link.los_margin_db)
}

fn uniform<T: Real, R: Rng>(rng: &mut R, (lo, hi): (T, T)) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * lit(u)
}
