//! Free-space link budget and channel power gain.

use crate::error::{Error, Result};
use crate::scalar::{db_to_linear, lit, Real};

/// How antenna gains enter the received power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainLaw {
    /// `P_r = P_t (λ/4πd)² [G_t G_r]²`.
    #[default]
    SquaredProduct,
    /// Conventional Friis, `P_r = P_t (λ/4πd)² G_t G_r`.
    Friis,
}

/// Received power in watts with the gain product squared.
pub fn received_power<T: Real>(p_t: T, wavelength: T, d: T, g_t_db: T, g_r_db: T) -> Result<T> {
    received_power_with(p_t, wavelength, d, g_t_db, g_r_db, GainLaw::SquaredProduct)
}

pub fn received_power_with<T: Real>(
    p_t: T,
    wavelength: T,
    d: T,
    g_t_db: T,
    g_r_db: T,
    law: GainLaw,
) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::invalid(format!("distance {d} must be > 0")));
    }
    let spreading = (wavelength / (lit::<T>(4.0) * T::PI() * d)).powi(2);
    let gains = db_to_linear(g_t_db) * db_to_linear(g_r_db);
    let gains = match law {
        GainLaw::SquaredProduct => gains * gains,
        GainLaw::Friis => gains,
    };
    Ok(p_t * spreading * gains)
}

/// Powers in dBm, gains and losses in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub p_t: T,
    pub p_r: T,
    pub g_tmax: T,
    pub g_rmax: T,
    pub extra_loss: T,
}

impl<T: Real> LinkBudget<T> {
    /// `Pg = P_r − P_t − G_rmax − G_tmax + LS` in dB.
    pub fn path_gain_db(&self) -> T {
        self.p_r - self.p_t - self.g_rmax - self.g_tmax + self.extra_loss
    }
}

/// `|h|² = 10^(Pg/10)`.
pub fn channel_gain<T: Real>(lb: &LinkBudget<T>) -> T {
    db_to_linear(lb.path_gain_db())
}
