//! Ranging error statistics.

use std::collections::BTreeMap;

use crate::channel::LosTag;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample<T> {
    pub trajectory_index: usize,
    /// Signed error `d − d_ext`, metres.
    pub error: T,
    pub los_tag: LosTag,
}

impl<T: Real> ErrorSample<T> {
    /// NLoS indicator: 0 for LoS points, 1 otherwise.
    pub fn gamma(&self) -> u8 {
        match self.los_tag {
            LosTag::Los => 0,
            LosTag::Nlos => 1,
        }
    }
}

fn rmse_of<T: Real>(errors: impl Iterator<Item = T>) -> Option<T> {
    let (n, sum) = errors.fold((0usize, T::zero()), |(n, s), e| (n + 1, s + e * e));
    (n > 0).then(|| (sum / from_usize(n)).sqrt())
}

/// `√((1/N) Σ ε²)`.
pub fn rmse<T: Real>(samples: &[ErrorSample<T>]) -> Result<T> {
    rmse_of(samples.iter().map(|s| s.error)).ok_or_else(|| Error::invalid("RMSE of an empty sample set"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRmse<T> {
    pub los: Option<T>,
    pub nlos: Option<T>,
    pub total: T,
}

/// RMSE over the LoS subset, the NLoS subset and everything. An empty subset
/// is reported as `None`.
pub fn split_rmse<T: Real>(samples: &[ErrorSample<T>]) -> Result<SplitRmse<T>> {
    let total = rmse(samples)?;
    let subset = |tag| rmse_of(samples.iter().filter(|s| s.los_tag == tag).map(|s| s.error));
    Ok(SplitRmse {
        los: subset(LosTag::Los),
        nlos: subset(LosTag::Nlos),
        total,
    })
}

/// `√(6 / (4π·M·K·(M² − 1)·P_t) · 1/|h|²)`.
pub fn rmse_los_bound<T: Real>(m: usize, k: usize, p_t: T, h2: T) -> Result<T> {
    if m < 2 {
        return Err(Error::invalid(format!("bound needs at least 2 subcarriers, got {m}")));
    }
    if k < 1 || !(p_t > T::zero()) || !(h2 > T::zero()) {
        return Err(Error::invalid("symbols, power and channel gain must be positive"));
    }
    let (mf, kf) = (from_usize::<T>(m), from_usize::<T>(k));
    let denom = lit::<T>(4.0) * T::PI() * mf * kf * (mf * mf - T::one()) * p_t;
    Ok((lit::<T>(6.0) / denom / h2).sqrt())
}

/// Empirical CDF of absolute errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<T> {
    /// Distinct abscissae ascending, with `P(|ε| ≤ x)`.
    points: Vec<(T, T)>,
}

impl<T: Real> EmpiricalCdf<T> {
    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, x: T) -> T {
        let idx = self.points.partition_point(|(a, _)| *a <= x);
        if idx == 0 {
            T::zero()
        } else {
            self.points[idx - 1].1
        }
    }
}

pub fn error_cdf<T: Real>(samples: &[ErrorSample<T>]) -> Result<EmpiricalCdf<T>> {
    abs_error_cdf(samples.iter().map(|s| s.error))
}

pub fn abs_error_cdf<T: Real>(errors: impl IntoIterator<Item = T>) -> Result<EmpiricalCdf<T>> {
    let mut abs: Vec<T> = errors.into_iter().map(|e| e.abs()).collect();
    if abs.is_empty() {
        return Err(Error::invalid("CDF of an empty sample set"));
    }
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = from_usize::<T>(abs.len());
    let mut points: Vec<(T, T)> = Vec::new();
    for (i, x) in abs.iter().enumerate() {
        let p = from_usize::<T>(i + 1) / n;
        match points.last_mut() {
            Some(last) if last.0 == *x => last.1 = p,
            _ => points.push((*x, p)),
        }
    }
    Ok(EmpiricalCdf { points })
}

/// One CDF per key; samples with different keys never mix.
pub fn grouped_cdfs<K: Ord, T: Real>(
    samples: impl IntoIterator<Item = (K, ErrorSample<T>)>,
) -> Result<BTreeMap<K, EmpiricalCdf<T>>> {
    let mut groups: BTreeMap<K, Vec<T>> = BTreeMap::new();
    for (k, s) in samples {
        groups.entry(k).or_default().push(s.error);
    }
    groups
        .into_iter()
        .map(|(k, errs)| Ok((k, abs_error_cdf(errs)?)))
        .collect()
}

pub fn mean_abs_error<T: Real>(samples: &[ErrorSample<T>]) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::invalid("mean of an empty sample set"));
    }
    Ok(samples.iter().map(|s| s.error.abs()).sum::<T>() / from_usize(samples.len()))
}
