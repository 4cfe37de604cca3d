//! Quantities derived from pairs of walk records: occupation ratios against a
//! detector-free baseline, their late-time saturation values, the largest
//! removal time that still enhances the detector site, correlation ratios and
//! log-log power-law fits.

use std::collections::BTreeMap;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{WalkError, WalkResult};
use crate::lattice::InitialCondition;
use crate::measurement::{run_quenched_with, DetectorSchedule, RecordOptions, WalkRecord};

/// Pointwise ratios are undefined where the baseline falls below this.
pub const F0_FLOOR: f64 = 1e-12;

/// Which occupation measure enters the numerator of a ratio.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// `f(x, t)`, the surviving probability.
    #[default]
    Average,
    /// `f̃(x, t) = f(x, t) / S(t)`, conditioned on survival.
    Normalized,
    /// Probability reaching `x` before the detector acts: `f(x, t) + d_t` at
    /// the detector site, `f(x, t)` elsewhere.
    Arrival,
}

/// `true` when the walker can occupy `x` at time `t`.
pub fn parity_valid(x: i64, origin: i64, t: usize) -> bool {
    (x - origin + t as i64).rem_euclid(2) == 0
}

/// Time series of `f(x, t)/f0(x, t)` at a fixed site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub site: i64,
    pub measure: Measure,
    /// `(t, ratio)` on parity-valid times where the baseline exceeds [`F0_FLOOR`].
    pub values: Vec<(usize, f64)>,
}

impl RatioSeries {
    pub fn at(&self, t: usize) -> Option<f64> {
        self.values
            .binary_search_by_key(&t, |&(s, _)| s)
            .ok()
            .map(|i| self.values[i].1)
    }
}

fn numerator(record: &WalkRecord, x: i64, t: usize, measure: Measure) -> WalkResult<Option<f64>> {
    let f = record
        .f(x, t)
        .ok_or(WalkError::SiteNotRecorded { site: x })?;
    Ok(match measure {
        Measure::Average => Some(f),
        Measure::Normalized => record.survival(t).filter(|&s| s > 0.0).map(|s| f / s),
        Measure::Arrival => record.f_arrival(x, t),
    })
}

fn pointwise_ratio(
    record: &WalkRecord,
    baseline: &WalkRecord,
    x: i64,
    t: usize,
    measure: Measure,
) -> WalkResult<Option<f64>> {
    let f0 = baseline
        .f(x, t)
        .ok_or(WalkError::SiteNotRecorded { site: x })?;
    if f0 < F0_FLOOR {
        return Ok(None);
    }
    Ok(numerator(record, x, t, measure)?.map(|f| f / f0))
}

/// `f(x, t)/f0(x, t)` (or `f̃/f0`) over every parity-valid `t`.
pub fn ratio_series(
    record: &WalkRecord,
    baseline: &WalkRecord,
    x: i64,
    measure: Measure,
) -> WalkResult<RatioSeries> {
    record.comparable(baseline)?;
    let origin = record.origin();
    let mut values = Vec::new();
    for t in (0..=record.t_max).filter(|&t| parity_valid(x, origin, t)) {
        if let Some(v) = pointwise_ratio(record, baseline, x, t, measure)? {
            values.push((t, v));
        }
    }
    Ok(RatioSeries {
        site: x,
        measure,
        values,
    })
}

/// How late-time saturation values are extracted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationPolicy {
    /// The tail window is `[tail_start·t_max, t_max]`.
    pub tail_start: f64,
    /// Largest relative change between the two halves of the tail window.
    pub tolerance: f64,
    /// Number of times `t_max` may be doubled while unconverged.
    pub max_extensions: u32,
    /// Overrides [`SaturationPolicy::default_t_max`] when set.
    pub t_max: Option<usize>,
}

impl Default for SaturationPolicy {
    fn default() -> Self {
        Self {
            tail_start: 0.8,
            tolerance: 0.02,
            max_extensions: 2,
            t_max: None,
        }
    }
}

impl SaturationPolicy {
    /// `max(20·t_R, 20·x_D², 2000)`
    pub fn default_t_max(x_d: i64, t_r: usize) -> usize {
        let xd2 = (x_d.unsigned_abs() as usize).pow(2);
        (20 * t_r).max(20 * xd2).max(2000)
    }

    pub fn t_max_for(&self, x_d: i64, t_r: usize) -> usize {
        self.t_max.unwrap_or_else(|| Self::default_t_max(x_d, t_r))
    }

    pub fn validate(&self) -> WalkResult<()> {
        if !(0.0..1.0).contains(&self.tail_start) {
            return Err(WalkError::invalid("tail_start", "must lie in [0, 1)"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(WalkError::invalid("tolerance", "must be positive"));
        }
        Ok(())
    }

    fn window(&self, t_max: usize) -> (usize, usize) {
        (
            ((self.tail_start * t_max as f64).ceil() as usize).min(t_max),
            t_max,
        )
    }
}

/// Late-time value of `f/f0` at one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationEstimate {
    /// `Σ f / Σ f0` over the tail window.
    pub value: f64,
    pub window: (usize, usize),
    pub converged: bool,
    /// Relative change between the two halves of the window.
    pub relative_spread: f64,
}

/// Ratio of window sums over `series[t]`, `t ∈ window`. Both slices are indexed by time.
fn tail_estimate(
    f: &[f64],
    f0: &[f64],
    t_max: usize,
    policy: &SaturationPolicy,
) -> WalkResult<SaturationEstimate> {
    let (lo, hi) = policy.window(t_max);
    let mid = lo + (hi - lo) / 2;
    let sum = |s: &[f64], a: usize, b: usize| -> f64 { s[a..=b].iter().sum() };
    let ratio = |a: usize, b: usize| -> WalkResult<f64> {
        let den = sum(f0, a, b);
        if den <= 0.0 {
            return Err(WalkError::invalid(
                "site",
                "baseline vanishes on the tail window",
            ));
        }
        Ok(sum(f, a, b) / den)
    };
    let value = ratio(lo, hi)?;
    let relative_spread = if hi - lo < 3 {
        0.0
    } else {
        let (first, second) = (ratio(lo, mid)?, ratio(mid + 1, hi)?);
        let change = (second - first).abs();
        if value != 0.0 {
            change / value.abs()
        } else {
            change
        }
    };
    Ok(SaturationEstimate {
        value,
        window: (lo, hi),
        converged: relative_spread <= policy.tolerance,
        relative_spread,
    })
}

fn site_series(record: &WalkRecord, x: i64) -> WalkResult<Vec<f64>> {
    (0..=record.t_max)
        .map(|t| record.f(x, t).ok_or(WalkError::SiteNotRecorded { site: x }))
        .collect()
}

/// Tail-window saturation of `f(x, ·)/f0(x, ·)` for two finished records.
pub fn saturation_ratio(
    record: &WalkRecord,
    baseline: &WalkRecord,
    x: i64,
    policy: &SaturationPolicy,
) -> WalkResult<SaturationEstimate> {
    policy.validate()?;
    record.comparable(baseline)?;
    tail_estimate(
        &site_series(record, x)?,
        &site_series(baseline, x)?,
        record.t_max,
        policy,
    )
}

/// Saturation estimates at the detector site for one `x_D`, sharing a single
/// detector-free baseline across removal times.
pub struct SaturationProbe {
    ic: InitialCondition,
    x_d: i64,
    policy: SaturationPolicy,
    baseline: RwLock<Vec<f64>>,
}

impl SaturationProbe {
    pub fn new(ic: InitialCondition, x_d: i64, policy: SaturationPolicy) -> WalkResult<Self> {
        ic.validate()?;
        policy.validate()?;
        Ok(Self {
            ic,
            x_d,
            policy,
            baseline: RwLock::new(Vec::new()),
        })
    }

    pub fn site(&self) -> i64 {
        self.x_d
    }

    pub fn policy(&self) -> &SaturationPolicy {
        &self.policy
    }

    fn series(&self, sched: &DetectorSchedule, t_max: usize) -> WalkResult<Vec<f64>> {
        let rec = run_quenched_with(&self.ic, sched, t_max, &RecordOptions::site(self.x_d))?;
        site_series(&rec, self.x_d)
    }

    /// Detector-free `f0(x_D, t)` for `t ≤ t_max`.
    fn baseline(&self, t_max: usize) -> WalkResult<Vec<f64>> {
        {
            let cached = self.baseline.read().expect("baseline lock");
            if cached.len() > t_max {
                return Ok(cached[..=t_max].to_vec());
            }
        }
        let fresh = self.series(&DetectorSchedule::absent(), t_max)?;
        let mut cached = self.baseline.write().expect("baseline lock");
        if fresh.len() > cached.len() {
            *cached = fresh.clone();
        }
        Ok(fresh)
    }

    /// Precomputes the baseline up to `t_max`.
    pub fn warm(&self, t_max: usize) -> WalkResult<()> {
        self.baseline(t_max).map(|_| ())
    }

    /// Saturation ratio at `x_D` for removal time `t_r`, doubling `t_max`
    /// while the estimate is unconverged and extensions remain.
    pub fn estimate(&self, t_r: usize) -> WalkResult<SaturationEstimate> {
        let sched = DetectorSchedule::step_quench(self.x_d, t_r);
        let mut t_max = self.policy.t_max_for(self.x_d, t_r).max(t_r + 1);
        let mut extensions = 0;
        loop {
            let f0 = self.baseline(t_max)?;
            let f = self.series(&sched, t_max)?;
            let est = tail_estimate(&f, &f0, t_max, &self.policy)?;
            if est.converged || extensions >= self.policy.max_extensions {
                return Ok(est);
            }
            extensions += 1;
            t_max *= 2;
        }
    }

    /// Estimates for every removal time, in input order.
    pub fn sweep(&self, t_rs: &[usize]) -> WalkResult<Vec<(usize, SaturationEstimate)>> {
        if let Some(&largest) = t_rs.iter().max() {
            self.warm(self.policy.t_max_for(self.x_d, largest).max(largest + 1))?;
        }
        t_rs.par_iter()
            .map(|&t_r| self.estimate(t_r).map(|e| (t_r, e)))
            .collect()
    }
}

/// Largest removal time whose saturation ratio exceeds one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrLimScan {
    pub x_d: i64,
    pub t_r_lim: usize,
    /// Every removal time evaluated, with its saturation value.
    pub evaluated: BTreeMap<usize, f64>,
}

/// Scans `grid` (ascending removal times), takes the largest grid point with
/// saturation ratio above one and bisects towards its right neighbour down to
/// unit resolution.
pub fn find_tr_lim(
    ic: &InitialCondition,
    x_d: i64,
    grid: &[usize],
    policy: &SaturationPolicy,
) -> WalkResult<TrLimScan> {
    if grid.len() < 2 {
        return Err(WalkError::invalid(
            "grid",
            "needs at least two removal times",
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(WalkError::invalid(
            "grid",
            "removal times must be strictly increasing",
        ));
    }
    let probe = SaturationProbe::new(*ic, x_d, policy.clone())?;
    let mut evaluated: BTreeMap<usize, f64> = probe
        .sweep(grid)?
        .into_iter()
        .map(|(t_r, e)| (t_r, e.value))
        .collect();

    let above = grid
        .iter()
        .rposition(|t| evaluated[t] > 1.0)
        .ok_or_else(|| {
            WalkError::NoCrossing(format!(
                "x_D = {x_d}: saturation ratio below one on the whole grid"
            ))
        })?;
    if above + 1 == grid.len() {
        return Err(WalkError::NoCrossing(format!(
            "x_D = {x_d}: saturation ratio still above one at t_R = {}",
            grid[above]
        )));
    }
    let (mut lo, mut hi) = (grid[above], grid[above + 1]);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = probe.estimate(mid)?.value;
        evaluated.insert(mid, v);
        if v > 1.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    Ok(TrLimScan {
        x_d,
        t_r_lim: lo,
        evaluated,
    })
}

/// Least-squares fit of `ln y = slope·ln x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// `max |y_fit − y| / y` over the points.
    pub max_relative_residual: f64,
}

impl ScalingFit {
    /// `exp(intercept)·x^slope`
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

pub fn loglog_fit(points: &[(f64, f64)]) -> WalkResult<ScalingFit> {
    if points.len() < 3 {
        return Err(WalkError::invalid(
            "points",
            format!("need at least 3, got {}", points.len()),
        ));
    }
    if let Some(p) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(WalkError::invalid(
            "points",
            format!("coordinates must be positive and finite, got {p:?}"),
        ));
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(WalkError::invalid("points", "abscissae are all equal"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut fit = ScalingFit {
        points: points.to_vec(),
        slope,
        intercept,
        max_relative_residual: 0.0,
    };
    fit.max_relative_residual = points
        .iter()
        .map(|&(x, y)| ((fit.predict(x) - y) / y).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

/// Per-point `k = sat·t_R / x_D²` for the `sat ≈ k·x_D²/t_R` collapse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEstimate {
    /// `(x_D, t_R, sat, k)`
    pub points: Vec<(i64, usize, f64, f64)>,
    pub mean: f64,
    /// `max |k − mean| / mean`
    pub relative_spread: f64,
}

pub fn scaling_collapse_k(points: &[(i64, usize, f64)]) -> WalkResult<CollapseEstimate> {
    if points.is_empty() {
        return Err(WalkError::invalid("grid", "empty"));
    }
    if points.iter().any(|&(x, t, _)| x == 0 || t == 0) {
        return Err(WalkError::invalid("grid", "x_D and t_R must be nonzero"));
    }
    let points: Vec<_> = points
        .iter()
        .map(|&(x_d, t_r, sat)| (x_d, t_r, sat, sat * t_r as f64 / (x_d * x_d) as f64))
        .collect();
    let mean = points.iter().map(|p| p.3).sum::<f64>() / points.len() as f64;
    let relative_spread = points
        .iter()
        .map(|p| ((p.3 - mean) / mean).abs())
        .fold(0.0, f64::max);
    Ok(CollapseEstimate {
        points,
        mean,
        relative_spread,
    })
}

/// Runs the saturation estimate on every `(x_D, t_R)` cell, then collapses.
pub fn collapse_grid(
    ic: &InitialCondition,
    x_ds: &[i64],
    t_rs: &[usize],
    policy: &SaturationPolicy,
) -> WalkResult<CollapseEstimate> {
    if x_ds.is_empty() || t_rs.is_empty() {
        return Err(WalkError::invalid("grid", "empty"));
    }
    let cells: Vec<(i64, usize, f64)> = x_ds
        .par_iter()
        .map(|&x_d| -> WalkResult<Vec<(i64, usize, f64)>> {
            let probe = SaturationProbe::new(*ic, x_d, policy.clone())?;
            Ok(probe
                .sweep(t_rs)?
                .into_iter()
                .map(|(t_r, e)| (x_d, t_r, e.value))
                .collect())
        })
        .collect::<WalkResult<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    scaling_collapse_k(&cells)
}

/// `g/g0` at separation `r` from the detector site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub x_d: i64,
    pub r: i64,
    /// `(t, g/g0)` on times where `x_D + r` is parity-valid.
    pub values: Vec<(usize, f64)>,
}

impl CorrelationSeries {
    pub fn at(&self, t: usize) -> Option<f64> {
        self.values
            .binary_search_by_key(&t, |&(s, _)| s)
            .ok()
            .map(|i| self.values[i].1)
    }

    /// Mean of `g/g0 − 1` over `t_lo < t ≤ t_hi`.
    pub fn mean_deviation(&self, t_lo: usize, t_hi: usize) -> Option<f64> {
        let window: Vec<f64> = self
            .values
            .iter()
            .filter(|(t, _)| *t > t_lo && *t <= t_hi)
            .map(|(_, v)| v - 1.0)
            .collect();
        (!window.is_empty()).then(|| window.iter().sum::<f64>() / window.len() as f64)
    }
}

/// Time at which the detector-site factor is sampled when pairing with `t`.
///
/// For odd `r` the two sites are never occupied at the same step, so the
/// detector-site ratio is taken one step earlier.
pub fn partner_time(x_d: i64, origin: i64, t: usize) -> Option<usize> {
    if parity_valid(x_d, origin, t) {
        Some(t)
    } else {
        t.checked_sub(1)
    }
}

/// `g/g0 = [f(x_D + r)/f0(x_D + r)]·[f(x_D)/f0(x_D)]`.
pub fn correlation_ratio(
    record: &WalkRecord,
    baseline: &WalkRecord,
    x_d: i64,
    r: i64,
    measure: Measure,
) -> WalkResult<CorrelationSeries> {
    let probe = ratio_series(record, baseline, x_d + r, measure)?;
    let detector = ratio_series(record, baseline, x_d, measure)?;
    let origin = record.origin();
    let values = probe
        .values
        .iter()
        .filter_map(|&(t, a)| {
            let b = detector.at(partner_time(x_d, origin, t)?)?;
            Some((t, a * b))
        })
        .collect();
    Ok(CorrelationSeries { x_d, r, values })
}

/// `f(x_D + r, t)/f0(x_D + r, t)` against `r` at a fixed time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialProfile {
    pub x_d: i64,
    pub t: usize,
    /// `(r, ratio)`; `None` where the baseline is below [`F0_FLOOR`].
    pub values: Vec<(i64, Option<f64>)>,
}

impl SpatialProfile {
    pub fn at(&self, r: i64) -> Option<f64> {
        self.values
            .iter()
            .find(|(s, _)| *s == r)
            .and_then(|(_, v)| *v)
    }
}

/// Profile over every parity-valid site of the support at time `t`.
pub fn spatial_ratio_profile(
    record: &WalkRecord,
    baseline: &WalkRecord,
    x_d: i64,
    t: usize,
    measure: Measure,
) -> WalkResult<SpatialProfile> {
    record.comparable(baseline)?;
    if t > record.t_max {
        return Err(WalkError::invalid(
            "t",
            format!("{t} beyond t_max = {}", record.t_max),
        ));
    }
    let origin = record.origin();
    let reach = t as i64;
    let mut values = Vec::new();
    for x in (origin - reach..=origin + reach).filter(|&x| parity_valid(x, origin, t)) {
        values.push((x - x_d, pointwise_ratio(record, baseline, x, t, measure)?));
    }
    Ok(SpatialProfile { x_d, t, values })
}

/// Power-law fit of `S(t) − S(t_max)` for a permanent detector at `x_D`,
/// over `t ∈ [t_lo, t_hi]`. Diagnostic only.
pub fn siw_survival_decay(
    ic: &InitialCondition,
    x_d: i64,
    t_lo: usize,
    t_hi: usize,
    t_max: usize,
) -> WalkResult<ScalingFit> {
    if !(t_lo < t_hi && t_hi < t_max) {
        return Err(WalkError::invalid("window", "need t_lo < t_hi < t_max"));
    }
    let rec = run_quenched_with(
        ic,
        &DetectorSchedule::permanent(x_d),
        t_max,
        &RecordOptions::site(x_d),
    )?;
    let s_inf = rec.survival(t_max).unwrap();
    let points: Vec<(f64, f64)> = (t_lo..=t_hi)
        .filter_map(|t| {
            let excess = rec.survival(t)? - s_inf;
            (excess > 0.0 && rec.entry(t)?.detected > 0.0).then_some((t as f64, excess))
        })
        .collect();
    loglog_fit(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Occupation;
    use crate::measurement::{run_free, run_quenched, run_siw, StepEntry};
    use approx::assert_abs_diff_eq;

    fn sym() -> InitialCondition {
        InitialCondition::symmetric()
    }

    #[test]
    fn fit_exact_power_laws() {
        let sq: Vec<_> = (1..=10)
            .map(|x| (x as f64, 7.0 * (x as f64).powi(2)))
            .collect();
        let fit = loglog_fit(&sq).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept.exp(), 7.0, epsilon = 1e-10);
        let inv: Vec<_> = (1..=10).map(|x| (x as f64, 3.0 / x as f64)).collect();
        assert_abs_diff_eq!(loglog_fit(&inv).unwrap().slope, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(loglog_fit(&[(1.0, 1.0)]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(loglog_fit(&[(-1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
        assert!(loglog_fit(&[(2.0, 1.0), (2.0, 3.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn ratio_is_one_before_contact() {
        let base = run_free(&sym(), 60).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 30), 60).unwrap();
        let series = ratio_series(&q, &base, 10, Measure::Average).unwrap();
        for &(t, v) in series.values.iter().filter(|(t, _)| *t < 10) {
            assert_eq!(v, 1.0, "t = {t}");
        }
    }

    #[test]
    fn ratio_decreases_while_detector_present() {
        let base = run_free(&sym(), 200).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 100), 200).unwrap();
        let series = ratio_series(&q, &base, 10, Measure::Arrival).unwrap();
        let early: Vec<f64> = series
            .values
            .iter()
            .filter(|(t, _)| (20..40).contains(t))
            .map(|p| p.1)
            .collect();
        let late: Vec<f64> = series
            .values
            .iter()
            .filter(|(t, _)| (80..100).contains(t))
            .map(|p| p.1)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&late) < mean(&early));
        assert!(late.iter().all(|&v| v < 1.0));
    }

    #[test]
    fn mismatched_records_rejected() {
        let a = run_free(&sym(), 20).unwrap();
        let b = run_free(&sym(), 21).unwrap();
        assert!(matches!(
            ratio_series(&a, &b, 0, Measure::Average),
            Err(WalkError::Mismatch(_))
        ));
    }

    #[test]
    fn normalized_ratio_is_average_over_survival() {
        let base = run_free(&sym(), 300).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 50), 300).unwrap();
        let avg = ratio_series(&q, &base, 10, Measure::Average).unwrap();
        let norm = ratio_series(&q, &base, 10, Measure::Normalized).unwrap();
        let s = q.survival(50).unwrap();
        for (&(t, a), &(t2, n)) in avg
            .values
            .iter()
            .zip(&norm.values)
            .filter(|((t, _), _)| *t > 50)
        {
            assert_eq!(t, t2);
            assert_abs_diff_eq!(n, a / s, epsilon = 1e-12 * n.abs().max(1.0));
        }
    }

    fn constant_ratio_record(base: &WalkRecord, c: f64) -> WalkRecord {
        let entries = base
            .entries()
            .iter()
            .map(|e| StepEntry {
                occupation: Occupation::new(
                    e.occupation.lo(),
                    e.occupation.values().iter().map(|v| v * c).collect(),
                ),
                ..e.clone()
            })
            .collect();
        WalkRecord::from_parts(
            base.schedule.clone(),
            base.initial,
            base.options.clone(),
            entries,
        )
        .unwrap()
    }

    #[test]
    fn saturation_of_constant_ratio() {
        let base = run_free(&sym(), 400).unwrap();
        for c in [0.37, 1.0, 2.5] {
            let rec = constant_ratio_record(&base, c);
            let est = saturation_ratio(&rec, &base, 6, &SaturationPolicy::default()).unwrap();
            assert_abs_diff_eq!(est.value, c, epsilon = 1e-12);
            assert!(est.converged);
            assert_eq!(est.window, (320, 400));
        }
    }

    #[test]
    fn saturation_of_free_run_is_one() {
        let probe = SaturationProbe::new(sym(), 10, SaturationPolicy::default()).unwrap();
        let est = probe.estimate(0).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(est.converged);
    }

    #[test]
    fn small_removal_time_enhances() {
        let probe = SaturationProbe::new(sym(), 10, SaturationPolicy::default()).unwrap();
        let est = probe.estimate(20).unwrap();
        assert!(est.converged && est.value > 1.0, "{est:?}");
    }

    #[test]
    fn tr_lim_errors_outside_grid() {
        let policy = SaturationPolicy::default();
        // Entirely past the crossing.
        let err = find_tr_lim(&sym(), 5, &[40, 60, 80], &policy).unwrap_err();
        assert!(matches!(err, WalkError::NoCrossing(_)));
        // Crossing beyond the last grid point.
        let err = find_tr_lim(&sym(), 5, &[6, 7], &policy).unwrap_err();
        assert!(matches!(err, WalkError::NoCrossing(_)));
        assert!(find_tr_lim(&sym(), 5, &[7], &policy).is_err());
        assert!(find_tr_lim(&sym(), 5, &[9, 7], &policy).is_err());
    }

    #[test]
    fn tr_lim_for_small_detector_distance() {
        let scan = find_tr_lim(
            &sym(),
            5,
            &[2, 4, 6, 8, 10, 15, 20, 30],
            &SaturationPolicy::default(),
        )
        .unwrap();
        assert!(scan.evaluated[&scan.t_r_lim] > 1.0);
        assert!(scan.evaluated[&(scan.t_r_lim + 1)] <= 1.0);
        assert!((8..=20).contains(&scan.t_r_lim), "{scan:?}");
    }

    #[test]
    fn collapse_identity() {
        let est = scaling_collapse_k(&[(10, 500, 0.1), (20, 500, 0.4), (10, 1000, 0.05)]).unwrap();
        assert_abs_diff_eq!(est.mean, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(est.relative_spread, 0.0, epsilon = 1e-15);
        assert!(scaling_collapse_k(&[]).is_err());
    }

    #[test]
    fn correlation_factorizes() {
        let base = run_free(&sym(), 300).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 50), 300).unwrap();
        for r in [-5, -2, 3, 4] {
            let g = correlation_ratio(&q, &base, 10, r, Measure::Average).unwrap();
            let a = ratio_series(&q, &base, 10 + r, Measure::Average).unwrap();
            let b = ratio_series(&q, &base, 10, Measure::Average).unwrap();
            assert!(!g.values.is_empty());
            for &(t, v) in &g.values {
                let tp = partner_time(10, 0, t).unwrap();
                assert_eq!(v, a.at(t).unwrap() * b.at(tp).unwrap());
            }
        }
    }

    #[test]
    fn profile_is_one_without_detector() {
        let base = run_free(&sym(), 100).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 0), 100).unwrap();
        let p = spatial_ratio_profile(&q, &base, 10, 100, Measure::Average).unwrap();
        assert!(p.values.iter().filter_map(|(_, v)| *v).all(|v| v == 1.0));
    }

    #[test]
    fn profile_vanishes_right_of_detector_for_siw() {
        let base = run_free(&sym(), 100).unwrap();
        let q = run_siw(&sym(), 10, 100).unwrap();
        let p = spatial_ratio_profile(&q, &base, 10, 100, Measure::Average).unwrap();
        assert!(p
            .values
            .iter()
            .filter(|(r, _)| *r >= 0)
            .all(|(_, v)| v.is_none_or(|v| v == 0.0)));
    }

    #[test]
    fn siw_survival_decay_is_a_power_law() {
        let fit = siw_survival_decay(&sym(), 5, 200, 2000, 4000).unwrap();
        assert!(fit.slope < 0.0, "{fit:?}");
    }
}
