//! TOML experiment description. Keys carry their units; unknown keys are
//! rejected so that typos surface as configuration errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{GainLaw, LinkContext, NlosSpec, DEFAULT_LOS_MARGIN_DB};
use crate::error::{Error, Result};
use crate::prach_modem::{Modulation, PeakRefinement, WaveformParams, DEFAULT_TARGET_PFA};
use crate::scalar::{dbm_to_watts, watts_to_dbm};
use crate::uav::{AirframeConfig, AntennaConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_pfa")]
    pub target_pfa: f64,
    #[serde(default)]
    pub peak_refinement: Refinement,
    pub waveform: WaveformSection,
    pub scenario: ScenarioSection,
    pub channel: ChannelSource,
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

fn default_pfa() -> f64 {
    DEFAULT_TARGET_PFA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "OTFS")]
    Otfs,
    #[serde(rename = "OFDM")]
    Ofdm,
}

impl From<Scheme> for Modulation {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Otfs => Modulation::Otfs,
            Scheme::Ofdm => Modulation::Ofdm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    #[default]
    None,
    Parabolic,
}

impl From<Refinement> for PeakRefinement {
    fn from(r: Refinement) -> Self {
        match r {
            Refinement::None => PeakRefinement::None,
            Refinement::Parabolic => PeakRefinement::Parabolic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSection {
    pub delta_f_hz: f64,
    pub n_dft: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    pub n_zc: usize,
    pub root: usize,
    pub cp_len: usize,
    pub tx_power_dbm: f64,
}

impl Default for WaveformSection {
    fn default() -> Self {
        let p = WaveformParams::<f64>::default();
        Self {
            delta_f_hz: p.delta_f,
            n_dft: p.n_dft,
            subcarriers: p.m,
            symbols: p.n,
            n_zc: p.n_zc,
            root: p.root,
            cp_len: p.cp_len,
            tx_power_dbm: watts_to_dbm(p.tx_power_w),
        }
    }
}

impl WaveformSection {
    pub fn params(&self, scheme: Scheme, delta_f_hz: f64) -> WaveformParams<f64> {
        WaveformParams {
            delta_f: delta_f_hz,
            n_dft: self.n_dft,
            m: self.subcarriers,
            n: self.symbols,
            n_zc: self.n_zc,
            root: self.root,
            cp_len: self.cp_len,
            modulation: scheme.into(),
            tx_power_w: dbm_to_watts(self.tx_power_dbm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub trajectory: TrajectorySection,
    pub antenna: AntennaSection,
    #[serde(default)]
    pub airframe: AirframeSection,
    pub link: LinkSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub height_m: f64,
    pub spacing_m: f64,
    pub count: usize,
    pub speed_mps: f64,
    #[serde(default)]
    pub target_m: [f64; 3],
    /// Simulate every `point_stride`-th point only.
    #[serde(default = "one")]
    pub point_stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSection {
    /// Use a 0 dBi isotropic receive antenna and ignore the pattern below.
    #[serde(default)]
    pub omnidirectional: bool,
    pub g_rmax_db: f64,
    pub gamma_3db_deg: f64,
    pub theta_3db_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fnb_deg: Option<f64>,
    /// Fixed tilt; derived from the pitch angle at the flight speed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt_deg: Option<f64>,
}

impl AntennaSection {
    pub fn pattern(&self) -> Result<AntennaConfig<f64>> {
        AntennaConfig::new(self.g_rmax_db, self.gamma_3db_deg, self.theta_3db_deg, self.fnb_deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirframeSection {
    pub mass_kg: f64,
    pub gravity_mps2: f64,
    pub air_density_kgpm3: f64,
    pub drag_coefficient: f64,
    pub swept_area_m2: f64,
    pub blade_profile_power_w: f64,
    pub induced_power_w: f64,
    pub tip_speed_mps: f64,
    pub induced_velocity_mps: f64,
    pub fuselage_drag_ratio: f64,
    pub rotor_solidity: f64,
    pub disc_area_m2: f64,
    pub consistent_v_squared: bool,
}

impl Default for AirframeSection {
    fn default() -> Self {
        let a = AirframeConfig::<f64>::default();
        Self {
            mass_kg: a.mass,
            gravity_mps2: a.g,
            air_density_kgpm3: a.rho,
            drag_coefficient: a.c_d,
            swept_area_m2: a.a_swept,
            blade_profile_power_w: a.w0,
            induced_power_w: a.wi,
            tip_speed_mps: a.u_tip,
            induced_velocity_mps: a.v0,
            fuselage_drag_ratio: a.d0,
            rotor_solidity: a.s,
            disc_area_m2: a.a_disc,
            consistent_v_squared: a.consistent_v_squared,
        }
    }
}

impl AirframeSection {
    pub fn airframe(&self) -> AirframeConfig<f64> {
        AirframeConfig {
            mass: self.mass_kg,
            g: self.gravity_mps2,
            rho: self.air_density_kgpm3,
            c_d: self.drag_coefficient,
            a_swept: self.swept_area_m2,
            w0: self.blade_profile_power_w,
            wi: self.induced_power_w,
            u_tip: self.tip_speed_mps,
            v0: self.induced_velocity_mps,
            d0: self.fuselage_drag_ratio,
            s: self.rotor_solidity,
            a_disc: self.disc_area_m2,
            consistent_v_squared: self.consistent_v_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub carrier_hz: f64,
    #[serde(default)]
    pub g_t_db: f64,
    /// Use the conventional first power of the gain product.
    #[serde(default)]
    pub friis_gains: bool,
    #[serde(default = "default_margin")]
    pub los_margin_db: f64,
}

fn default_margin() -> f64 {
    DEFAULT_LOS_MARGIN_DB
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSource {
    TapsFile { path: PathBuf },
    Synthetic(SyntheticSection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub nlos_count: usize,
    #[serde(default)]
    pub excess_delay_m: [f64; 2],
    #[serde(default)]
    pub relative_power_db: [f64; 2],
}

impl SyntheticSection {
    pub fn nlos(&self) -> NlosSpec<f64> {
        NlosSpec {
            count: self.nlos_count,
            excess_delay_m: (self.excess_delay_m[0], self.excess_delay_m[1]),
            relative_power_db: (self.relative_power_db[0], self.relative_power_db[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    /// Noise power relative to the received signal power; `inf` disables noise.
    Snr { snr_db: f64 },
    /// Absolute thermal floor over the sampling bandwidth.
    Thermal { noise_figure_db: f64, temperature_k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    DeltaFHz(Vec<f64>),
    SpeedMps(Vec<f64>),
    TiltDeg(Vec<f64>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::DeltaFHz(_) => "delta_f_hz",
            Sweep::SpeedMps(_) => "speed_mps",
            Sweep::TiltDeg(_) => "tilt_deg",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::DeltaFHz(v) | Sweep::SpeedMps(v) | Sweep::TiltDeg(v) => v,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default();
            Error::config("<document>", format!("{}{span}", e.message()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // Tap files are resolved relative to the configuration file.
        if let ChannelSource::TapsFile { path: taps } = &mut cfg.channel {
            if taps.is_relative() {
                if let Some(dir) = path.parent() {
                    *taps = dir.join(&*taps);
                }
            }
        }
        Ok(cfg)
    }

    /// Canonical TOML form.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |path: &str, msg: String| Err(Error::config(path, msg));
        if self.trials < 1 {
            return fail("trials", "must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return fail("schemes", "at least one of OTFS, OFDM required".into());
        }
        let mut seen = self.schemes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.schemes.len() {
            return fail("schemes", "duplicate entries".into());
        }
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return fail("target_pfa", format!("{} outside (0, 1)", self.target_pfa));
        }

        let w = &self.waveform;
        let mut delta_fs = vec![w.delta_f_hz];
        if let Some(Sweep::DeltaFHz(v)) = &self.sweep {
            delta_fs.extend(v);
        }
        for df in delta_fs {
            if let Err(e) = w.params(Scheme::Otfs, df).validate() {
                return fail("waveform", inner_message(e));
            }
        }
        if !w.tx_power_dbm.is_finite() {
            return fail("waveform.tx_power_dbm", "must be finite".into());
        }

        let t = &self.scenario.trajectory;
        if !(t.height_m > 0.0) {
            return fail("scenario.trajectory.height_m", format!("{} must be > 0", t.height_m));
        }
        if !(t.spacing_m > 0.0) {
            return fail("scenario.trajectory.spacing_m", format!("{} must be > 0", t.spacing_m));
        }
        if t.count < 1 {
            return fail("scenario.trajectory.count", "must be at least 1".into());
        }
        if !(t.speed_mps >= 0.0) {
            return fail("scenario.trajectory.speed_mps", format!("{} must be >= 0", t.speed_mps));
        }
        if t.point_stride < 1 {
            return fail("scenario.trajectory.point_stride", "must be at least 1".into());
        }
        let a = &self.scenario.antenna;
        if !a.omnidirectional {
            if let Err(e) = a.pattern() {
                return fail("scenario.antenna", inner_message(e));
            }
        }
        if let Some(tilt) = a.tilt_deg {
            if !(0.0..90.0).contains(&tilt) {
                return fail("scenario.antenna.tilt_deg", format!("{tilt} outside [0, 90)"));
            }
        }
        if let Err(e) = self.scenario.airframe.airframe().validate() {
            return fail("scenario.airframe", inner_message(e));
        }
        let l = &self.scenario.link;
        if !(l.carrier_hz > 0.0) {
            return fail("scenario.link.carrier_hz", format!("{} must be > 0", l.carrier_hz));
        }
        if !l.los_margin_db.is_finite() {
            return fail("scenario.link.los_margin_db", "must be finite".into());
        }

        match &self.channel {
            ChannelSource::Synthetic(s) => {
                if let Err(e) = s.nlos().validate() {
                    return fail("channel.synthetic", inner_message(e));
                }
            }
            ChannelSource::TapsFile { .. } => {
                if matches!(self.sweep, Some(Sweep::SpeedMps(_)) | Some(Sweep::TiltDeg(_))) {
                    return fail(
                        "sweep",
                        "speed and tilt sweeps regenerate the channel and need a synthetic source".into(),
                    );
                }
            }
        }
        match self.noise {
            NoiseSection::Snr { snr_db } if snr_db.is_nan() || snr_db == f64::NEG_INFINITY => {
                return fail("noise.snr.snr_db", format!("{snr_db} is not a usable SNR"));
            }
            NoiseSection::Thermal {
                noise_figure_db,
                temperature_k,
            } if !noise_figure_db.is_finite() || !(temperature_k > 0.0) => {
                return fail("noise.thermal", "noise figure must be finite and temperature > 0".into());
            }
            _ => {}
        }

        if let Some(sweep) = &self.sweep {
            let path = format!("sweep.{}", sweep.name());
            let values = sweep.values();
            if values.is_empty() {
                return fail(&path, "needs at least one value".into());
            }
            let ok = match sweep {
                Sweep::DeltaFHz(_) => values.iter().all(|v| *v > 0.0),
                Sweep::SpeedMps(_) => values.iter().all(|v| *v >= 0.0),
                Sweep::TiltDeg(_) => values.iter().all(|v| (0.0..90.0).contains(v)),
            };
            if !ok {
                return fail(&path, format!("values {values:?} out of range"));
            }
        }
        Ok(())
    }

    pub fn link_context(&self, tilt_deg: f64) -> Result<LinkContext<f64>> {
        let s = &self.scenario;
        Ok(LinkContext {
            carrier_hz: s.link.carrier_hz,
            tx_power_w: dbm_to_watts(self.waveform.tx_power_dbm),
            g_t_db: s.link.g_t_db,
            antenna: if s.antenna.omnidirectional { None } else { Some(s.antenna.pattern()?) },
            tilt_deg,
            gain_law: if s.link.friis_gains { GainLaw::Friis } else { GainLaw::SquaredProduct },
            los_margin_db: s.link.los_margin_db,
        })
    }

    /// Scaled-down defaults: default radio settings, a 140-point track at
    /// 30 m and three scatterers per point.
    pub fn example() -> Self {
        Self {
            seed: 1,
            trials: 4,
            schemes: vec![Scheme::Otfs, Scheme::Ofdm],
            target_pfa: DEFAULT_TARGET_PFA,
            peak_refinement: Refinement::None,
            waveform: WaveformSection::default(),
            scenario: ScenarioSection {
                trajectory: TrajectorySection {
                    height_m: 30.0,
                    spacing_m: 0.5,
                    count: 140,
                    speed_mps: 10.0,
                    target_m: [0.0; 3],
                    point_stride: 1,
                },
                antenna: AntennaSection {
                    omnidirectional: false,
                    g_rmax_db: 8.0,
                    gamma_3db_deg: 65.0,
                    theta_3db_deg: 45.0,
                    fnb_deg: None,
                    tilt_deg: None,
                },
                airframe: AirframeSection::default(),
                link: LinkSection {
                    carrier_hz: 1775e6,
                    g_t_db: 0.0,
                    friis_gains: false,
                    los_margin_db: DEFAULT_LOS_MARGIN_DB,
                },
            },
            channel: ChannelSource::Synthetic(SyntheticSection {
                nlos_count: 3,
                excess_delay_m: [5.0, 60.0],
                relative_power_db: [-12.0, -3.0],
            }),
            noise: NoiseSection::Snr { snr_db: 5.0 },
            sweep: None,
        }
    }
}

fn inner_message(e: Error) -> String {
    match e {
        Error::InvalidArgument(m) | Error::Validation(m) | Error::Domain(m) => m,
        other => other.to_string(),
    }
}
