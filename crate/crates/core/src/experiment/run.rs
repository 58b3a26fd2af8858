use std::borrow::Cow;
use std::fs::{self, File};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ChannelSource, ExperimentConfig, NoiseSection, Scheme};
use super::seed::{derive_seed, Stream};
use crate::channel::{
    add_awgn, add_noise_power, apply_channel, load_taps, synthesize_scenario_channel, thermal_noise_power,
    ChannelRealization, LinkContext, LosTag, NlosSpec,
};
use crate::dd_transform::Waveform;
use crate::error::{Error, Result};
use crate::metrics::{abs_error_cdf, mean_abs_error, split_rmse, ErrorSample};
use crate::prach_modem::PrachModem;
use crate::uav::{
    build_trajectory, last_los_index, los_point_count, overhead_index, pitch_angle, propulsion_power,
    within_first_null, TrajectoryPoint,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool. Output never depends on it.
    pub threads: Option<usize>,
}

/// One received frame: a (point, trial, scheme) triple under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub speed_mps: f64,
    pub tilt_deg: f64,
    pub point_index: usize,
    pub trial: usize,
    pub los_tag: LosTag,
    pub true_d_m: f64,
    pub est_d_m: f64,
    pub error_m: f64,
    pub detected: bool,
}

impl ResultRow {
    pub fn sample(&self) -> ErrorSample<f64> {
        ErrorSample {
            trajectory_index: self.point_index,
            error: self.error_m,
            los_tag: self.los_tag,
        }
    }
}

/// Per-scheme statistics for one condition. Error statistics use detected
/// frames only and are absent when nothing was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub speed_mps: f64,
    pub tilt_deg: f64,
    pub samples: usize,
    pub detected: usize,
    pub rmse_m: Option<f64>,
    pub rmse_los_m: Option<f64>,
    pub rmse_nlos_m: Option<f64>,
    pub mean_abs_error_m: Option<f64>,
}

impl SummaryRow {
    pub fn detection_rate(&self) -> f64 {
        self.detected as f64 / self.samples as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl SimulationOutput {
    pub fn summary_for(&self, scheme: Scheme, delta_f_hz: f64) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.scheme == scheme && s.delta_f_hz == delta_f_hz)
    }

    /// Writes `results.csv` and `summary.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv_writer(&dir.join("results.csv"))?;
        w.write_record([
            "scheme",
            "delta_f_hz",
            "speed_mps",
            "point_index",
            "los_tag",
            "true_d_m",
            "est_d_m",
            "error_m",
            "detected",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                scheme_name(r.scheme).to_string(),
                r.delta_f_hz.to_string(),
                r.speed_mps.to_string(),
                r.point_index.to_string(),
                r.los_tag.as_str().to_string(),
                r.true_d_m.to_string(),
                r.est_d_m.to_string(),
                r.error_m.to_string(),
                r.detected.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;

        let mut w = csv_writer(&dir.join("summary.csv"))?;
        w.write_record([
            "scheme",
            "delta_f_hz",
            "speed_mps",
            "tilt_deg",
            "samples",
            "detected",
            "detection_rate",
            "rmse_m",
            "rmse_los_m",
            "rmse_nlos_m",
            "mean_abs_error_m",
        ])
        .map_err(csv_err)?;
        for s in &self.summary {
            w.write_record([
                scheme_name(s.scheme).to_string(),
                s.delta_f_hz.to_string(),
                s.speed_mps.to_string(),
                s.tilt_deg.to_string(),
                s.samples.to_string(),
                s.detected.to_string(),
                s.detection_rate().to_string(),
                opt(s.rmse_m),
                opt(s.rmse_los_m),
                opt(s.rmse_nlos_m),
                opt(s.mean_abs_error_m),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfRow {
    pub scheme: Scheme,
    pub delta_f_hz: f64,
    pub abs_error_m: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfSweepOutput {
    pub simulation: SimulationOutput,
    pub cdf: Vec<CdfRow>,
}

impl CdfSweepOutput {
    /// Writes the simulation files plus `cdf.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.simulation.write(dir)?;
        let mut w = csv_writer(&dir.join("cdf.csv"))?;
        w.write_record(["scheme", "delta_f_hz", "abs_error_m", "probability"])
            .map_err(csv_err)?;
        for r in &self.cdf {
            w.write_record([
                scheme_name(r.scheme).to_string(),
                r.delta_f_hz.to_string(),
                r.abs_error_m.to_string(),
                r.probability.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub speed_mps: f64,
    pub tilt_deg: f64,
    pub rmse_otfs_m: Option<f64>,
    pub rmse_ofdm_m: Option<f64>,
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffOutput {
    pub simulation: SimulationOutput,
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffOutput {
    /// Writes the simulation files plus `tradeoff.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.simulation.write(dir)?;
        let mut w = csv_writer(&dir.join("tradeoff.csv"))?;
        w.write_record(["speed_mps", "tilt_deg", "rmse_otfs_m", "rmse_ofdm_m", "power_w"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.speed_mps.to_string(),
                r.tilt_deg.to_string(),
                opt(r.rmse_otfs_m),
                opt(r.rmse_ofdm_m),
                r.power_w.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltRow {
    pub tilt_deg: f64,
    /// Closed-form last LoS index; absent outside its angular validity window
    /// or with an omnidirectional antenna.
    pub los_point_count: Option<usize>,
    /// Last LoS index found by walking the trajectory.
    pub walked_los_index: Option<usize>,
    pub rmse_otfs_m: Option<f64>,
    pub rmse_ofdm_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltOutput {
    pub simulation: SimulationOutput,
    pub rows: Vec<TiltRow>,
}

impl TiltOutput {
    /// Writes the simulation files plus `tilt.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.simulation.write(dir)?;
        let mut w = csv_writer(&dir.join("tilt.csv"))?;
        w.write_record([
            "tilt_deg",
            "los_point_count",
            "walked_los_index",
            "rmse_otfs_m",
            "rmse_ofdm_m",
        ])
        .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.tilt_deg.to_string(),
                r.los_point_count.map(|v| v.to_string()).unwrap_or_default(),
                r.walked_los_index.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.rmse_otfs_m),
                opt(r.rmse_ofdm_m),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    crate::prach_modem::Modulation::from(s).as_str()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(File::create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Validation(format!("{other:?}")),
    }
}

#[derive(Debug, Clone, Copy)]
struct Condition {
    delta_f_hz: f64,
    speed_mps: f64,
    tilt_deg: f64,
}

enum Source {
    Synthetic(NlosSpec<f64>),
    Taps(Vec<ChannelRealization<f64>>),
}

impl Source {
    fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match &cfg.channel {
            ChannelSource::Synthetic(s) => Source::Synthetic(s.nlos()),
            ChannelSource::TapsFile { path } => Source::Taps(load_taps(path, cfg.scenario.link.los_margin_db)?),
        })
    }
}

fn tilt_for_speed(cfg: &ExperimentConfig, speed: f64) -> Result<f64> {
    pitch_angle(speed, &cfg.scenario.airframe.airframe())
        .map(|p| p.theta_v)
        .map_err(|e| Error::config("scenario.airframe", e.to_string()))
}

fn base_condition(cfg: &ExperimentConfig) -> Result<Condition> {
    let speed = cfg.scenario.trajectory.speed_mps;
    let tilt_deg = match cfg.scenario.antenna.tilt_deg {
        Some(t) => t,
        None => tilt_for_speed(cfg, speed)?,
    };
    Ok(Condition {
        delta_f_hz: cfg.waveform.delta_f_hz,
        speed_mps: speed,
        tilt_deg,
    })
}

struct Site<'a> {
    point: TrajectoryPoint<f64>,
    fixed: Option<&'a ChannelRealization<f64>>,
}

struct Chain {
    scheme: Scheme,
    modem: PrachModem<f64>,
    tx: Waveform<f64>,
}

fn evaluate(cfg: &ExperimentConfig, source: &Source, cond: Condition) -> Result<Vec<ResultRow>> {
    let t = &cfg.scenario.trajectory;
    let track = build_trajectory(t.height_m, t.spacing_m, t.count, cond.speed_mps, t.target_m)?;
    let link = cfg.link_context(cond.tilt_deg)?;
    let sites: Vec<Site> = match source {
        Source::Synthetic(_) => track
            .iter()
            .step_by(t.point_stride)
            .map(|p| Site { point: *p, fixed: None })
            .collect(),
        Source::Taps(realizations) => realizations
            .iter()
            .step_by(t.point_stride)
            .map(|r| {
                let point = track.get(r.trajectory_index).copied().ok_or_else(|| {
                    Error::Validation(format!(
                        "tap file point {} lies beyond the {}-point trajectory",
                        r.trajectory_index, t.count
                    ))
                })?;
                Ok(Site { point, fixed: Some(r) })
            })
            .collect::<Result<_>>()?,
    };
    let chains: Vec<Chain> = cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let modem = PrachModem::new(cfg.waveform.params(scheme, cond.delta_f_hz))?;
            let tx = modem.transmit()?;
            Ok(Chain { scheme, modem, tx })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..sites.len())
        .flat_map(|p| (0..cfg.trials).map(move |trial| (p, trial)))
        .collect();
    let per_job: Vec<Vec<ResultRow>> = jobs
        .par_iter()
        .map(|&(p, trial)| run_job(cfg, source, &link, &chains, &sites[p], trial, cond))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(per_job.len() * chains.len());
    for s in 0..chains.len() {
        rows.extend(per_job.iter().map(|job| job[s].clone()));
    }
    Ok(rows)
}

fn run_job(
    cfg: &ExperimentConfig,
    source: &Source,
    link: &LinkContext<f64>,
    chains: &[Chain],
    site: &Site,
    trial: usize,
    cond: Condition,
) -> Result<Vec<ResultRow>> {
    let idx = site.point.index as u64;
    let ch = match (site.fixed, source) {
        (Some(r), _) => Cow::Borrowed(r),
        (None, Source::Synthetic(nlos)) => {
            let seed = derive_seed(cfg.seed, Stream::Channel, &[idx, trial as u64]);
            Cow::Owned(synthesize_scenario_channel(&site.point, link, nlos, seed)?)
        }
        (None, Source::Taps(_)) => unreachable!("tap-file sites always carry a realization"),
    };
    // Geometric LoS (direct path inside the first null) intersected with the
    // tap-power tag.
    let geometric_los = link
        .antenna
        .as_ref()
        .is_none_or(|a| within_first_null(&site.point, cond.tilt_deg, a.fnb));
    let los_tag = if geometric_los && ch.los_tag == LosTag::Los {
        LosTag::Los
    } else {
        LosTag::Nlos
    };

    chains
        .iter()
        .map(|chain| {
            let faded = apply_channel(&chain.tx, &ch)?;
            let seed = derive_seed(cfg.seed, Stream::Noise, &[idx, trial as u64, chain.scheme as u64]);
            let rx = match cfg.noise {
                NoiseSection::Snr { snr_db } if snr_db == f64::INFINITY => faded,
                NoiseSection::Snr { snr_db } => add_awgn(&faded, snr_db, seed)?,
                NoiseSection::Thermal {
                    noise_figure_db,
                    temperature_k,
                } => {
                    let power = thermal_noise_power(noise_figure_db, faded.sample_rate, temperature_k);
                    add_noise_power(&faded, power, &mut ChaCha8Rng::seed_from_u64(seed))
                }
            };
            let (_, r) = chain
                .modem
                .range(&rx, ch.true_distance, cfg.target_pfa, cfg.peak_refinement.into())?;
            Ok(ResultRow {
                scheme: chain.scheme,
                delta_f_hz: cond.delta_f_hz,
                speed_mps: cond.speed_mps,
                tilt_deg: cond.tilt_deg,
                point_index: site.point.index,
                trial,
                los_tag,
                true_d_m: r.true_distance,
                est_d_m: r.estimated_distance,
                error_m: r.error,
                detected: r.detected,
            })
        })
        .collect()
}

fn summarize(rows: &[ResultRow], schemes: &[Scheme], cond: Condition) -> Result<Vec<SummaryRow>> {
    schemes
        .iter()
        .map(|&scheme| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
            let hits: Vec<ErrorSample<f64>> = mine.iter().filter(|r| r.detected).map(|r| r.sample()).collect();
            let split = if hits.is_empty() { None } else { Some(split_rmse(&hits)?) };
            Ok(SummaryRow {
                scheme,
                delta_f_hz: cond.delta_f_hz,
                speed_mps: cond.speed_mps,
                tilt_deg: cond.tilt_deg,
                samples: mine.len(),
                detected: hits.len(),
                rmse_m: split.map(|s| s.total),
                rmse_los_m: split.and_then(|s| s.los),
                rmse_nlos_m: split.and_then(|s| s.nlos),
                mean_abs_error_m: mean_abs_error(&hits).ok(),
            })
        })
        .collect()
}

fn with_pool<R: Send>(opts: &RunOptions, f: impl FnOnce() -> R + Send) -> Result<R> {
    match opts.threads {
        None => Ok(f()),
        Some(0) => Err(Error::invalid("thread count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn simulate_conditions(cfg: &ExperimentConfig, opts: &RunOptions, conds: &[Condition]) -> Result<SimulationOutput> {
    cfg.validate()?;
    let source = Source::prepare(cfg)?;
    with_pool(opts, || {
        let mut out = SimulationOutput {
            rows: Vec::new(),
            summary: Vec::new(),
        };
        for &cond in conds {
            let rows = evaluate(cfg, &source, cond)?;
            out.summary.extend(summarize(&rows, &cfg.schemes, cond)?);
            out.rows.extend(rows);
        }
        Ok(out)
    })?
}

fn sweep_values<'a>(cfg: &'a ExperimentConfig, want: &str) -> Result<&'a [f64]> {
    match &cfg.sweep {
        Some(s) if s.name() == want && s.values().len() >= 2 => Ok(s.values()),
        Some(s) if s.name() == want => Err(Error::config(format!("sweep.{want}"), "needs at least two values")),
        _ => Err(Error::config("sweep", format!("this run needs a `{want}` sweep"))),
    }
}

/// Every configured scheme over the trajectory at the configured speed and
/// subcarrier spacing.
pub fn run_simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SimulationOutput> {
    cfg.validate()?;
    simulate_conditions(cfg, opts, &[base_condition(cfg)?])
}

/// Absolute-error CDFs per scheme and subcarrier spacing.
pub fn run_cdf_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<CdfSweepOutput> {
    cfg.validate()?;
    let base = base_condition(cfg)?;
    let conds: Vec<Condition> = sweep_values(cfg, "delta_f_hz")?
        .iter()
        .map(|&delta_f_hz| Condition { delta_f_hz, ..base })
        .collect();
    let simulation = simulate_conditions(cfg, opts, &conds)?;
    let mut cdf = Vec::new();
    for cond in &conds {
        for &scheme in &cfg.schemes {
            let errors: Vec<f64> = simulation
                .rows
                .iter()
                .filter(|r| r.scheme == scheme && r.delta_f_hz == cond.delta_f_hz && r.detected)
                .map(|r| r.error_m)
                .collect();
            if errors.is_empty() {
                continue;
            }
            for &(x, p) in abs_error_cdf(errors)?.points() {
                cdf.push(CdfRow {
                    scheme,
                    delta_f_hz: cond.delta_f_hz,
                    abs_error_m: x,
                    probability: p,
                });
            }
        }
    }
    Ok(CdfSweepOutput { simulation, cdf })
}

/// RMSE per scheme and propulsion power against flight speed, with the antenna
/// tilt following the pitch angle.
pub fn run_tradeoff(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<TradeoffOutput> {
    cfg.validate()?;
    let base = base_condition(cfg)?;
    let airframe = cfg.scenario.airframe.airframe();
    let conds: Vec<Condition> = sweep_values(cfg, "speed_mps")?
        .iter()
        .map(|&speed_mps| {
            Ok(Condition {
                speed_mps,
                tilt_deg: tilt_for_speed(cfg, speed_mps)?,
                ..base
            })
        })
        .collect::<Result<_>>()?;
    let simulation = simulate_conditions(cfg, opts, &conds)?;
    let rows = conds
        .iter()
        .map(|c| {
            Ok(TradeoffRow {
                speed_mps: c.speed_mps,
                tilt_deg: c.tilt_deg,
                rmse_otfs_m: scheme_rmse(&simulation, Scheme::Otfs, |s| s.speed_mps == c.speed_mps),
                rmse_ofdm_m: scheme_rmse(&simulation, Scheme::Ofdm, |s| s.speed_mps == c.speed_mps),
                power_w: propulsion_power(c.speed_mps, &airframe)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TradeoffOutput { simulation, rows })
}

/// RMSE per scheme against a fixed antenna tilt, with the LoS extent.
pub fn run_tilt_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<TiltOutput> {
    cfg.validate()?;
    let base = base_condition(cfg)?;
    let conds: Vec<Condition> = sweep_values(cfg, "tilt_deg")?
        .iter()
        .map(|&tilt_deg| Condition { tilt_deg, ..base })
        .collect();
    let simulation = simulate_conditions(cfg, opts, &conds)?;
    let t = &cfg.scenario.trajectory;
    let track = build_trajectory(t.height_m, t.spacing_m, t.count, base.speed_mps, t.target_m)?;
    let fnb = if cfg.scenario.antenna.omnidirectional {
        None
    } else {
        Some(cfg.scenario.antenna.pattern()?.fnb)
    };
    let rows = conds
        .iter()
        .map(|c| TiltRow {
            tilt_deg: c.tilt_deg,
            los_point_count: fnb.and_then(|f| {
                los_point_count(t.height_m, t.spacing_m, f, c.tilt_deg, overhead_index(t.count)).ok()
            }),
            walked_los_index: fnb.and_then(|f| last_los_index(&track, c.tilt_deg, f)),
            rmse_otfs_m: scheme_rmse(&simulation, Scheme::Otfs, |s| s.tilt_deg == c.tilt_deg),
            rmse_ofdm_m: scheme_rmse(&simulation, Scheme::Ofdm, |s| s.tilt_deg == c.tilt_deg),
        })
        .collect();
    Ok(TiltOutput { simulation, rows })
}

fn scheme_rmse(sim: &SimulationOutput, scheme: Scheme, pick: impl Fn(&SummaryRow) -> bool) -> Option<f64> {
    sim.summary
        .iter()
        .find(|s| s.scheme == scheme && pick(s))
        .and_then(|s| s.rmse_m)
}
