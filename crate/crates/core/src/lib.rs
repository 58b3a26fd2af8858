//! Delay-Doppler PRACH ranging for UAV-to-ground links.
//!
//! The core is generic over the floating-point scalar (`f32` or `f64`);
//! `f64` aliases are provided at the crate root for convenience.

pub mod channel;
pub mod dd_transform;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod prach_modem;
pub mod scalar;
pub mod uav;
pub mod zc;

pub use error::{Error, Result};
pub use scalar::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type ZcSequence64 = zc::ZcSequence<f64>;
pub type CorrelationProfile64 = zc::CorrelationProfile<f64>;
pub type DelayDopplerGrid64 = dd_transform::DelayDopplerGrid<f64>;
pub type TimeFrequencyGrid64 = dd_transform::TimeFrequencyGrid<f64>;
pub type Waveform64 = dd_transform::Waveform<f64>;
pub type WaveformParams64 = prach_modem::WaveformParams<f64>;
pub type PrachModem64 = prach_modem::PrachModem<f64>;
pub type ToaEstimate64 = prach_modem::ToaEstimate<f64>;
pub type ChannelTap64 = channel::ChannelTap<f64>;
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
pub type TrajectoryPoint64 = uav::TrajectoryPoint<f64>;
pub type ErrorSample64 = metrics::ErrorSample<f64>;
