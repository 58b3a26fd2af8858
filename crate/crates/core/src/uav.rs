//! UAV flight geometry and airframe physics: trajectory sampling, the on-board
//! directional antenna pattern, forward-flight tilt, line-of-sight point
//! counting and rotary-wing propulsion power.
//!
//! Angles are degrees at every public interface.

use crate::error::{Error, Result};
use crate::scalar::{deg_to_rad, from_usize, lit, rad_to_deg, Real};

/// One sampled UAV position relative to a ground target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub index: usize,
    pub position: [T; 3],
    pub height: T,
    /// Signed along-track offset from the overhead point; negative while the
    /// target is still ahead of the UAV.
    pub horizontal_offset: T,
    pub speed: T,
    /// Elevation of the UAV seen from the target, `atan(h / |x|)`; 90° overhead.
    pub elevation_angle_to_target: T,
}

impl<T: Real> TrajectoryPoint<T> {
    /// 3-D UAV to target distance.
    pub fn distance(&self) -> T {
        self.height.hypot(self.horizontal_offset)
    }

    /// Angle of the target direction measured from the forward horizontal,
    /// in the vertical plane containing the track. Equals the elevation angle
    /// while approaching and `180° − elevation` once past the overhead point.
    pub fn direction_angle(&self) -> T {
        if self.horizontal_offset <= T::zero() {
            self.elevation_angle_to_target
        } else {
            lit::<T>(180.0) - self.elevation_angle_to_target
        }
    }

    /// Radial velocity towards the target (positive when closing).
    pub fn radial_speed(&self) -> T {
        self.speed * deg_to_rad(self.direction_angle()).cos()
    }
}

/// Straight track at constant height passing over `target`, sampled every
/// `dp` metres. The overhead point is index `count / 2`.
pub fn build_trajectory<T: Real>(
    height: T,
    dp: T,
    count: usize,
    speed: T,
    target: [T; 3],
) -> Result<Vec<TrajectoryPoint<T>>> {
    if count < 1 {
        return Err(Error::invalid("trajectory needs at least one point"));
    }
    if !(dp > T::zero()) {
        return Err(Error::invalid(format!("point spacing {dp} must be > 0")));
    }
    if !(height > T::zero()) {
        return Err(Error::invalid(format!("height {height} must be > 0")));
    }
    if speed < T::zero() {
        return Err(Error::invalid(format!("speed {speed} must be >= 0")));
    }
    let p0 = overhead_index(count);
    Ok((0..count)
        .map(|n| {
            let x = (from_usize::<T>(n) - from_usize::<T>(p0)) * dp;
            TrajectoryPoint {
                index: n,
                position: [target[0] + x, target[1], target[2] + height],
                height,
                horizontal_offset: x,
                speed,
                elevation_angle_to_target: rad_to_deg(height.atan2(x.abs())),
            }
        })
        .collect())
}

pub fn overhead_index(count: usize) -> usize {
    count / 2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaConfig<T> {
    pub g_rmax_db: T,
    pub gamma_3db: T,
    pub theta_3db: T,
    pub fnb: T,
}

impl<T: Real> AntennaConfig<T> {
    /// First-null beamwidth defaults to 2.5 × the vertical 3 dB beamwidth.
    pub fn new(g_rmax_db: T, gamma_3db: T, theta_3db: T, fnb: Option<T>) -> Result<Self> {
        let cfg = Self {
            g_rmax_db,
            gamma_3db,
            theta_3db,
            fnb: fnb.unwrap_or(theta_3db * lit(2.5)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_3db", self.gamma_3db),
            ("theta_3db", self.theta_3db),
            ("fnb", self.fnb),
        ] {
            if !(v > T::zero()) {
                return Err(Error::invalid(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Directional gain in dB: `G_max − 12(γ/γ₃)² − 12((θ − θ_v)/θ₃)²`, unclamped.
pub fn antenna_gain<T: Real>(gamma: T, theta: T, theta_v: T, cfg: &AntennaConfig<T>) -> T {
    let twelve = lit::<T>(12.0);
    let a_h = -twelve * (gamma / cfg.gamma_3db).powi(2);
    let a_v = -twelve * ((theta - theta_v) / cfg.theta_3db).powi(2);
    a_h + a_v + cfg.g_rmax_db
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirframeConfig<T> {
    pub mass: T,
    pub g: T,
    pub rho: T,
    pub c_d: T,
    pub a_swept: T,
    pub w0: T,
    pub wi: T,
    pub u_tip: T,
    pub v0: T,
    pub d0: T,
    pub s: T,
    pub a_disc: T,
    /// Use `v²` in both drag terms of the pitch relation. When false the
    /// relation is evaluated with `v²` in the first term and `v` in the second.
    pub consistent_v_squared: bool,
}

impl<T: Real> Default for AirframeConfig<T> {
    /// Small quadrotor with commonly used rotary-wing power constants.
    fn default() -> Self {
        Self {
            mass: lit(4.0),
            g: lit(9.81),
            rho: lit(1.225),
            c_d: lit(0.5),
            a_swept: lit(0.2),
            w0: lit(80.0),
            wi: lit(88.6),
            u_tip: lit(120.0),
            v0: lit(4.03),
            d0: lit(0.6),
            s: lit(0.05),
            a_disc: lit(0.503),
            consistent_v_squared: true,
        }
    }
}

impl<T: Real> AirframeConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("g", self.g),
            ("rho", self.rho),
            ("c_d", self.c_d),
            ("a_swept", self.a_swept),
            ("w0", self.w0),
            ("wi", self.wi),
            ("u_tip", self.u_tip),
            ("v0", self.v0),
            ("d0", self.d0),
            ("s", self.s),
            ("a_disc", self.a_disc),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::invalid(format!("airframe {name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchAngle<T> {
    /// Angle between the x-axis and the yaw axis.
    pub theta_xi: T,
    /// Antenna tilt below the horizontal, `90° − θ_ξ`.
    pub theta_v: T,
}

/// Forward-flight attitude at horizontal speed `v_x`.
pub fn pitch_angle<T: Real>(v_x: T, cfg: &AirframeConfig<T>) -> Result<PitchAngle<T>> {
    if v_x < T::zero() {
        return Err(Error::invalid(format!("speed {v_x} must be >= 0")));
    }
    let ninety = lit::<T>(90.0);
    if v_x == T::zero() {
        return Ok(PitchAngle {
            theta_xi: ninety,
            theta_v: T::zero(),
        });
    }
    let weight_over_drag = cfg.mass * cfg.g / (cfg.rho * cfg.c_d * cfg.a_swept);
    let x2 = weight_over_drag / (v_x * v_x);
    let arg = if cfg.consistent_v_squared {
        // √(x² + 1) − x without cancellation for large x.
        T::one() / ((x2 * x2 + T::one()).sqrt() + x2)
    } else {
        let x1 = weight_over_drag / v_x;
        (x2 * x2 + T::one()).sqrt() - x1
    };
    if !(arg >= -T::one() && arg <= T::one()) {
        return Err(Error::Domain(format!(
            "pitch relation argument {arg} outside [-1, 1] at v = {v_x}"
        )));
    }
    let theta_xi = rad_to_deg(arg.acos());
    Ok(PitchAngle {
        theta_xi,
        theta_v: ninety - theta_xi,
    })
}

/// Rotary-wing propulsion power (W) at forward speed `v_x`.
pub fn propulsion_power<T: Real>(v_x: T, cfg: &AirframeConfig<T>) -> Result<T> {
    if v_x < T::zero() {
        return Err(Error::invalid(format!("speed {v_x} must be >= 0")));
    }
    let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
    let v2 = v_x * v_x;
    let blade = cfg.w0
        * (T::one()
            + three * v2 / (cfg.u_tip * cfg.u_tip)
            + cfg.d0 * cfg.rho * cfg.s * cfg.a_disc * v2 * v_x / (two * cfg.w0));
    // √(1 + y²) − y with y = v²/(2v₀²), written to avoid cancellation.
    let y = v2 / (two * cfg.v0 * cfg.v0);
    let induced = cfg.wi * (T::one() / ((T::one() + y * y).sqrt() + y)).sqrt();
    Ok(blade + induced)
}

/// Index of the last trajectory point whose direct path stays within the
/// first-null beamwidth once the UAV has passed overhead:
/// `⌊h / (dp · tan(180° − FNB − θ_v))⌋ + p0`.
pub fn los_point_count<T: Real>(h: T, dp: T, fnb: T, theta_v: T, p0: usize) -> Result<usize> {
    if !(h > T::zero()) || !(dp > T::zero()) {
        return Err(Error::invalid("height and spacing must be > 0"));
    }
    let alpha = lit::<T>(180.0) - fnb - theta_v;
    if !(alpha > T::zero() && alpha < lit(90.0)) {
        return Err(Error::Domain(format!(
            "180 - FNB - tilt = {alpha} deg outside (0, 90)"
        )));
    }
    let beyond = (h / (dp * deg_to_rad(alpha).tan())).floor();
    let beyond = beyond
        .to_usize()
        .ok_or_else(|| Error::Domain(format!("LoS extent {beyond} not representable")))?;
    Ok(beyond + p0)
}

/// Off-boresight angle of the direct path in the vertical plane.
pub fn off_axis_angle<T: Real>(point: &TrajectoryPoint<T>, theta_v: T) -> T {
    point.direction_angle() - theta_v
}

/// Direct path lies inside the first-null beamwidth (`θ_a ≤ FNB`).
pub fn within_first_null<T: Real>(point: &TrajectoryPoint<T>, theta_v: T, fnb: T) -> bool {
    off_axis_angle(point, theta_v).abs() <= fnb
}

/// Receive antenna gain (dB) towards the target from this trajectory point.
pub fn gain_towards_target<T: Real>(point: &TrajectoryPoint<T>, theta_v: T, cfg: &AntennaConfig<T>) -> T {
    antenna_gain(T::zero(), point.direction_angle(), theta_v, cfg)
}

/// Last index at or beyond the overhead point whose direct path stays inside
/// the first-null beamwidth, found by walking the trajectory.
pub fn last_los_index<T: Real>(points: &[TrajectoryPoint<T>], theta_v: T, fnb: T) -> Option<usize> {
    let p0 = overhead_index(points.len());
    points[p0..]
        .iter()
        .take_while(|p| within_first_null(p, theta_v, fnb))
        .last()
        .map(|p| p.index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AntennaConfig<f64> {
        AntennaConfig::new(10.0, 60.0, 30.0, None).unwrap()
    }

    #[test]
    fn boresight_and_half_power_points() {
        let c = cfg();
        assert_eq!(antenna_gain(0.0, 20.0, 20.0, &c), 10.0);
        assert!((antenna_gain(60.0, 20.0, 20.0, &c) - (10.0 - 12.0)).abs() < 1e-12);
        assert!((antenna_gain(30.0, 35.0, 20.0, &c) - (10.0 - 6.0)).abs() < 1e-12);
        assert_eq!(c.fnb, 75.0);
    }

    #[test]
    fn gain_peaks_at_tilt() {
        let c = cfg();
        let tilt = 17.0;
        let best = (0..=1800)
            .map(|i| i as f64 * 0.1)
            .max_by(|a, b| antenna_gain(5.0, *a, tilt, &c).total_cmp(&antenna_gain(5.0, *b, tilt, &c)))
            .unwrap();
        assert!((best - tilt).abs() < 1e-9);
    }

    #[test]
    fn hover_has_no_tilt() {
        let a = AirframeConfig::<f64>::default();
        let p = pitch_angle(0.0, &a).unwrap();
        assert_eq!((p.theta_xi, p.theta_v), (90.0, 0.0));
        assert!(pitch_angle(1e-4, &a).unwrap().theta_v < 1e-6);
    }

    #[test]
    fn tilt_monotone_in_speed() {
        let a = AirframeConfig::<f64>::default();
        let mut prev = -1.0;
        for i in 1..=60 {
            let v = 0.5 * i as f64;
            let t = pitch_angle(v, &a).unwrap().theta_v;
            assert!(t > prev && t < 90.0);
            prev = t;
        }
    }

    #[test]
    fn pitch_double_evaluation() {
        let a = AirframeConfig {
            mass: 4.0,
            g: 9.81,
            rho: 1.225,
            c_d: 0.5,
            a_swept: 0.2,
            ..AirframeConfig::default()
        };
        // Naive scalar form, well conditioned at this speed.
        let x = 4.0 * 9.81 / (1.225 * 0.5 * 0.2 * 100.0);
        let expected = 90.0 - ((x * x + 1.0_f64).sqrt() - x).acos().to_degrees();
        let got = pitch_angle(10.0, &a).unwrap().theta_v;
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        assert!((got - 8.7697).abs() < 1e-4);
    }

    #[test]
    fn printed_pitch_form_reports_domain_error() {
        let a = AirframeConfig {
            consistent_v_squared: false,
            ..AirframeConfig::<f64>::default()
        };
        assert!(matches!(pitch_angle(10.0, &a), Err(Error::Domain(_))));
    }

    #[test]
    fn hover_power_is_sum_of_constants() {
        let a = AirframeConfig::<f64>::default();
        assert_eq!(propulsion_power(0.0, &a).unwrap(), a.w0 + a.wi);
    }

    #[test]
    fn power_has_interior_minimum() {
        let a = AirframeConfig::<f64>::default();
        let (v_star, w_star) = (1..=2500)
            .map(|i| i as f64 * 0.01)
            .map(|v| (v, propulsion_power(v, &a).unwrap()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert!(v_star > 1.0 && v_star < 25.0, "v* = {v_star}");
        assert!(w_star < a.w0 + a.wi);
    }

    #[test]
    fn parasite_term_dominates_at_high_speed() {
        let a = AirframeConfig::<f64>::default();
        let v = 1e4;
        let ratio = propulsion_power(2.0 * v, &a).unwrap() / propulsion_power(v, &a).unwrap();
        assert!((ratio - 8.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn los_count_reference_case() {
        assert_eq!(los_point_count(30.0, 0.5, 100.0, 10.0, 0).unwrap(), 21);
        assert_eq!(los_point_count(30.0, 0.5, 100.0, 10.0, 40).unwrap(), 61);
        assert!(matches!(los_point_count(30.0, 0.5, 60.0, 0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(los_point_count(30.0, 0.5, 30.0, 10.0, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn los_count_grows_with_tilt() {
        let mut prev = 0;
        for i in 0..40 {
            let tilt = i as f64;
            let n = los_point_count(30.0, 0.5, 120.0, tilt, 0).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn trajectory_geometry() {
        let pts = build_trajectory(30.0_f64, 0.5, 140, 10.0, [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(pts.len(), 140);
        let span = pts[139].horizontal_offset - pts[0].horizontal_offset;
        assert!((span - 69.5).abs() < 1e-12);
        let p0 = overhead_index(140);
        assert_eq!(pts[p0].horizontal_offset, 0.0);
        assert_eq!(pts[p0].distance(), 30.0);
        assert_eq!(pts[p0].elevation_angle_to_target, 90.0);
        for j in 1..70 {
            assert!((pts[p0 - j].distance() - pts[p0 + j].distance()).abs() < 1e-12);
        }
        assert!(pts[p0 - 10].radial_speed() > 0.0);
        assert!(pts[p0 + 10].radial_speed() < 0.0);
    }

    #[test]
    fn walked_los_extent_agrees_with_closed_form() {
        let pts = build_trajectory(30.0, 0.5, 400, 10.0, [0.0; 3]).unwrap();
        for tilt in [0.0, 5.0, 12.0] {
            let walked = last_los_index(&pts, tilt, 112.5).unwrap();
            let closed = los_point_count(30.0, 0.5, 112.5, tilt, overhead_index(400)).unwrap();
            assert!(walked.abs_diff(closed) <= 1, "{walked} vs {closed}");
        }
    }
}
