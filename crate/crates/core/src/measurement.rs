//! Projective detection at a single site under a time schedule.
//!
//! A run alternates a unitary step with an optional detection at the detector
//! site: after the step to time `t`, if the schedule is active at `t`, a
//! fraction `β` of the probability at the site is removed and booked as the
//! detection increment `d_t`. The remaining amplitudes describe the surviving
//! part of the ensemble, so `Σ_x f(x, t)` decays to the survival probability
//! `S(t) = 1 − D(t)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{WalkError, WalkResult};
use crate::lattice::{InitialCondition, Occupation, Scratch, WalkState};

/// When the detector is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Lifetime {
    /// Present for `1 ≤ t ≤ t_R`, removed afterwards. `Until(0)` is no detector at all.
    Until(usize),
    /// Never removed.
    Always,
    /// Per-step strength multipliers in `[0, 1]` for `t = 1, 2, ...`; zero past the end.
    Profile(Vec<f64>),
}

/// Detector site, strength and presence schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSchedule {
    pub site: i64,
    pub beta: f64,
    pub lifetime: Lifetime,
}

impl DetectorSchedule {
    /// Perfect detector (`β = 1`) removed after step `t_r`.
    pub fn step_quench(site: i64, t_r: usize) -> Self {
        Self {
            site,
            beta: 1.0,
            lifetime: Lifetime::Until(t_r),
        }
    }

    /// Perfect detector that is never removed.
    pub fn permanent(site: i64) -> Self {
        Self {
            site,
            beta: 1.0,
            lifetime: Lifetime::Always,
        }
    }

    /// No detection at any time.
    pub fn absent() -> Self {
        Self::step_quench(0, 0)
    }

    pub fn with_beta(mut self, beta: f64) -> WalkResult<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> WalkResult<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(WalkError::invalid(
                "beta",
                format!("{} not in [0, 1]", self.beta),
            ));
        }
        if let Lifetime::Profile(p) = &self.lifetime {
            if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(WalkError::invalid(
                    "profile",
                    format!("strength {bad} not in [0, 1]"),
                ));
            }
        }
        Ok(())
    }

    /// Removal step, `None` for a detector that is never removed.
    /// Profiles report the last step with nonzero strength.
    pub fn removal(&self) -> Option<usize> {
        match &self.lifetime {
            Lifetime::Until(t_r) => Some(*t_r),
            Lifetime::Always => None,
            Lifetime::Profile(p) => Some(p.iter().rposition(|&v| v > 0.0).map_or(0, |i| i + 1)),
        }
    }

    /// Detection probability applied after the step to time `t`.
    pub fn strength(&self, t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        match &self.lifetime {
            Lifetime::Until(t_r) if t <= *t_r => self.beta,
            Lifetime::Until(_) => 0.0,
            Lifetime::Always => self.beta,
            Lifetime::Profile(p) => p.get(t - 1).map_or(0.0, |v| v * self.beta),
        }
    }

    /// Whether the detector is in place at time `t`.
    pub fn active(&self, t: usize) -> bool {
        match &self.lifetime {
            Lifetime::Profile(_) => self.strength(t) > 0.0,
            Lifetime::Until(t_r) => (1..=*t_r).contains(&t),
            Lifetime::Always => t >= 1,
        }
    }
}

/// Removes the detected fraction at the detector site and returns it.
///
/// The increment is `β·(|l|² + |r|²)` at the site; the site amplitudes are
/// scaled by `√(1 − β)` and every other site is left untouched.
pub fn apply_detector(state: &mut WalkState, site: i64, beta: f64) -> f64 {
    match state.amplitude_mut(site) {
        Some(s) => {
            let p = s.norm_sqr();
            if p == 0.0 || beta == 0.0 {
                return 0.0;
            }
            *s = if beta == 1.0 {
                crate::lattice::Spinor::ZERO
            } else {
                s.scale((1.0 - beta).sqrt())
            };
            beta * p
        }
        None => 0.0,
    }
}

/// Which sites a run keeps per step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum SiteWindow {
    /// The whole support `[origin − t, origin + t]` at every step.
    #[default]
    Full,
    /// Inclusive site range `[lo, hi]`, clipped to the support.
    Range(i64, i64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordOptions {
    pub window: SiteWindow,
    /// Times at which the full occupation is kept regardless of `window`.
    pub snapshots: Vec<usize>,
    pub origin: i64,
}

impl RecordOptions {
    /// Keep only `[lo, hi]` per step.
    pub fn range(lo: i64, hi: i64) -> Self {
        Self {
            window: SiteWindow::Range(lo, hi),
            ..Self::default()
        }
    }

    /// Keep a single site per step.
    pub fn site(x: i64) -> Self {
        Self::range(x, x)
    }

    pub fn with_snapshots(mut self, times: impl IntoIterator<Item = usize>) -> Self {
        self.snapshots = times.into_iter().collect();
        self
    }
}

/// Bookkeeping for a single time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub t: usize,
    /// Retained part of `f(·, t)`.
    pub occupation: Occupation,
    /// `Σ_x f(x, t)` over the whole lattice.
    pub total: f64,
    /// Detection increment `d_t`.
    pub detected: f64,
    /// `S(t) = 1 − D(t)`
    pub survival: f64,
}

/// Per-step record of one walk under one schedule, from `t = 0` to `t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub schedule: DetectorSchedule,
    pub initial: InitialCondition,
    pub t_max: usize,
    pub options: RecordOptions,
    entries: Vec<StepEntry>,
    snapshots: BTreeMap<usize, Occupation>,
}

impl WalkRecord {
    /// Assembles a record from precomputed entries; entry `k` must hold `t = k`.
    pub fn from_parts(
        schedule: DetectorSchedule,
        initial: InitialCondition,
        options: RecordOptions,
        entries: Vec<StepEntry>,
    ) -> WalkResult<Self> {
        if entries.is_empty() {
            return Err(WalkError::invalid(
                "entries",
                "record needs at least the t = 0 entry",
            ));
        }
        if let Some((k, _)) = entries.iter().enumerate().find(|(k, e)| e.t != *k) {
            return Err(WalkError::invalid(
                "entries",
                format!("entry {k} is out of sequence"),
            ));
        }
        Ok(Self {
            schedule,
            initial,
            t_max: entries.len() - 1,
            options,
            entries,
            snapshots: BTreeMap::new(),
        })
    }

    pub fn entries(&self) -> &[StepEntry] {
        &self.entries
    }

    pub fn entry(&self, t: usize) -> Option<&StepEntry> {
        self.entries.get(t)
    }

    pub fn origin(&self) -> i64 {
        self.options.origin
    }

    /// `f(x, t)`; `None` when `x` was not retained at `t`.
    pub fn f(&self, x: i64, t: usize) -> Option<f64> {
        let e = self.entries.get(t)?;
        if e.occupation.covers(x) {
            return Some(e.occupation.get(x));
        }
        if let Some(snap) = self.snapshots.get(&t) {
            return Some(snap.get(x));
        }
        // Sites outside the support carry no amplitude.
        let reach = (x - self.origin()).unsigned_abs() as usize;
        let retained = match self.options.window {
            SiteWindow::Full => true,
            SiteWindow::Range(lo, hi) => x >= lo && x <= hi,
        };
        (retained || reach > t).then_some(0.0)
    }

    /// `f̃(x, t) = f(x, t) / S(t)`; `None` when undefined (`S(t) = 0`) or not retained.
    pub fn f_normalized(&self, x: i64, t: usize) -> Option<f64> {
        let s = self.survival(t)?;
        if s <= 0.0 {
            return None;
        }
        self.f(x, t).map(|f| f / s)
    }

    /// Probability at `x` just before detection at step `t`: `f(x, t) + d_t`
    /// on the detector site, `f(x, t)` elsewhere.
    pub fn f_arrival(&self, x: i64, t: usize) -> Option<f64> {
        let f = self.f(x, t)?;
        Some(if x == self.schedule.site {
            f + self.entries[t].detected
        } else {
            f
        })
    }

    pub fn survival(&self, t: usize) -> Option<f64> {
        self.entries.get(t).map(|e| e.survival)
    }

    /// `D(t) = Σ_{τ ≤ t} d_τ`
    pub fn detected_total(&self, t: usize) -> Option<f64> {
        self.survival(t).map(|s| 1.0 - s)
    }

    /// Full occupation at `t`, from a snapshot or a full-window entry.
    pub fn snapshot(&self, t: usize) -> Option<&Occupation> {
        self.snapshots
            .get(&t)
            .or_else(|| match self.options.window {
                SiteWindow::Full => self.entries.get(t).map(|e| &e.occupation),
                SiteWindow::Range(..) => None,
            })
    }

    /// Sum of `f(x, t)` over `t ∈ [t_lo, t_hi]`.
    pub fn window_sum(&self, x: i64, t_lo: usize, t_hi: usize) -> WalkResult<f64> {
        (t_lo..=t_hi.min(self.t_max)).try_fold(0.0, |acc, t| {
            self.f(x, t)
                .map(|f| acc + f)
                .ok_or(WalkError::SiteNotRecorded { site: x })
        })
    }

    /// Whether `other` describes the same initial condition, origin and length.
    pub fn comparable(&self, other: &Self) -> WalkResult<()> {
        if self.t_max != other.t_max {
            return Err(WalkError::Mismatch(format!(
                "t_max {} vs {}",
                self.t_max, other.t_max
            )));
        }
        if self.initial != other.initial {
            return Err(WalkError::Mismatch("initial conditions differ".into()));
        }
        if self.origin() != other.origin() {
            return Err(WalkError::Mismatch("origins differ".into()));
        }
        Ok(())
    }
}

fn retained(state: &WalkState, window: &SiteWindow) -> Occupation {
    match *window {
        SiteWindow::Full => state.occupation(),
        SiteWindow::Range(lo, hi) => {
            let (slo, shi) = state.support();
            let (lo, hi) = (lo.max(slo), hi.min(shi));
            if lo > hi {
                Occupation::new(lo, Vec::new())
            } else {
                state.occupation_between(lo, hi)
            }
        }
    }
}

/// Unitary step then, when the schedule is active, detection; `t = 1..=t_max`.
pub fn run_quenched_with(
    ic: &InitialCondition,
    sched: &DetectorSchedule,
    t_max: usize,
    options: &RecordOptions,
) -> WalkResult<WalkRecord> {
    if t_max < 1 {
        return Err(WalkError::invalid("t_max", "must be at least 1"));
    }
    sched.validate()?;
    if let SiteWindow::Range(lo, hi) = options.window {
        if lo > hi {
            return Err(WalkError::invalid(
                "window",
                format!("empty range [{lo}, {hi}]"),
            ));
        }
    }
    let mut state = WalkState::with_capacity(ic, options.origin, t_max)?;
    let mut scratch = Scratch::new();
    let mut entries = Vec::with_capacity(t_max + 1);
    let mut snapshots = BTreeMap::new();
    let mut detected_total = 0.0;

    entries.push(StepEntry {
        t: 0,
        occupation: retained(&state, &options.window),
        total: state.norm(),
        detected: 0.0,
        survival: 1.0,
    });
    if options.snapshots.contains(&0) {
        snapshots.insert(0, state.occupation());
    }
    for t in 1..=t_max {
        state.advance(&mut scratch);
        let beta = sched.strength(t);
        let detected = if beta > 0.0 {
            apply_detector(&mut state, sched.site, beta)
        } else {
            0.0
        };
        detected_total += detected;
        entries.push(StepEntry {
            t,
            occupation: retained(&state, &options.window),
            total: state.norm(),
            detected,
            survival: 1.0 - detected_total,
        });
        if options.snapshots.contains(&t) {
            snapshots.insert(t, state.occupation());
        }
    }
    Ok(WalkRecord {
        schedule: sched.clone(),
        initial: *ic,
        t_max,
        options: options.clone(),
        entries,
        snapshots,
    })
}

/// [`run_quenched_with`] keeping the full support at every step.
pub fn run_quenched(
    ic: &InitialCondition,
    sched: &DetectorSchedule,
    t_max: usize,
) -> WalkResult<WalkRecord> {
    run_quenched_with(ic, sched, t_max, &RecordOptions::default())
}

/// Infinite walk: no detector.
pub fn run_free(ic: &InitialCondition, t_max: usize) -> WalkResult<WalkRecord> {
    run_quenched(ic, &DetectorSchedule::absent(), t_max)
}

/// Semi-infinite walk: detector at `site` for all `t ≥ 1`.
pub fn run_siw(ic: &InitialCondition, site: i64, t_max: usize) -> WalkResult<WalkRecord> {
    run_quenched(ic, &DetectorSchedule::permanent(site), t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{evolve, initial_state};
    use approx::assert_abs_diff_eq;

    fn sym() -> InitialCondition {
        InitialCondition::symmetric()
    }

    #[test]
    fn detector_after_two_steps() {
        let mut s = evolve(&initial_state(&sym(), 0).unwrap(), 2);
        let d = apply_detector(&mut s, 2, 1.0);
        assert_abs_diff_eq!(d, 0.25, epsilon = 1e-15);
        assert_eq!(s.probability(2), 0.0);
        assert_abs_diff_eq!(s.norm(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn zero_beta_and_out_of_support_are_noops() {
        let s0 = evolve(&initial_state(&sym(), 0).unwrap(), 4);
        let mut s = s0.clone();
        assert_eq!(apply_detector(&mut s, 2, 0.0), 0.0);
        assert_eq!(s, s0);
        assert_eq!(apply_detector(&mut s, 9, 1.0), 0.0);
        assert_eq!(s, s0);
    }

    #[test]
    fn partial_detection_scales_site() {
        let mut s = evolve(&initial_state(&sym(), 0).unwrap(), 2);
        let before = s.probability(0);
        let d = apply_detector(&mut s, 0, 0.25);
        assert_abs_diff_eq!(d, 0.25 * before, epsilon = 1e-15);
        assert_abs_diff_eq!(s.probability(0), 0.75 * before, epsilon = 1e-15);
    }

    #[test]
    fn detector_idempotent_at_full_strength() {
        let mut s = evolve(&initial_state(&sym(), 0).unwrap(), 6);
        apply_detector(&mut s, 2, 1.0);
        let once = s.clone();
        assert_eq!(apply_detector(&mut s, 2, 1.0), 0.0);
        assert_eq!(s, once);
    }

    #[test]
    fn schedule_activity() {
        let q = DetectorSchedule::step_quench(10, 3);
        assert_eq!(
            (0..6).map(|t| q.active(t)).collect::<Vec<_>>(),
            [false, true, true, true, false, false]
        );
        assert!(!DetectorSchedule::absent().active(1));
        assert!(DetectorSchedule::permanent(1).active(100_000));
        assert!(DetectorSchedule::step_quench(1, 2).with_beta(1.5).is_err());
        let p = DetectorSchedule {
            site: 1,
            beta: 0.5,
            lifetime: Lifetime::Profile(vec![1.0, 0.5, 0.0]),
        };
        assert_eq!(p.strength(1), 0.5);
        assert_eq!(p.strength(2), 0.25);
        assert_eq!(p.strength(3), 0.0);
        assert_eq!(p.removal(), Some(2));
    }

    #[test]
    fn free_run_has_unit_survival() {
        let rec = run_free(&sym(), 50).unwrap();
        assert!(rec
            .entries()
            .iter()
            .all(|e| e.survival == 1.0 && e.detected == 0.0));
    }

    #[test]
    fn siw_first_detection_at_site_one() {
        let rec = run_siw(&sym(), 1, 5).unwrap();
        assert_abs_diff_eq!(rec.entry(1).unwrap().detected, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn t_r_zero_matches_free_run() {
        let free = run_free(&sym(), 200).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 0), 200).unwrap();
        assert_eq!(free.entries(), q.entries());
    }

    #[test]
    fn quench_agrees_with_siw_until_removal() {
        let siw = run_siw(&sym(), 10, 120).unwrap();
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 50), 120).unwrap();
        assert_eq!(&siw.entries()[..=50], &q.entries()[..=50]);
        assert_ne!(siw.entries()[60], q.entries()[60]);
    }

    #[test]
    fn spill_out_after_removal() {
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(10, 50), 100).unwrap();
        let snap = q.snapshot(100).unwrap();
        assert!(snap.iter().any(|(x, p)| x > 10 && p > 0.0));
        let siw = run_siw(&sym(), 10, 100).unwrap();
        assert!(siw
            .snapshot(100)
            .unwrap()
            .iter()
            .all(|(x, p)| x <= 10 || p == 0.0));
    }

    #[test]
    fn normalized_measure_sums_to_one() {
        let q = run_quenched(&sym(), &DetectorSchedule::step_quench(4, 30), 60).unwrap();
        for t in 0..=60 {
            let sum: f64 = q
                .snapshot(t)
                .unwrap()
                .iter()
                .map(|(x, _)| q.f_normalized(x, t).unwrap())
                .sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn windowed_record_matches_full() {
        let sched = DetectorSchedule::step_quench(5, 12);
        let full = run_quenched(&sym(), &sched, 40).unwrap();
        let win = run_quenched_with(
            &sym(),
            &sched,
            40,
            &RecordOptions::range(3, 7).with_snapshots([40]),
        )
        .unwrap();
        for t in 0..=40 {
            for x in 3..=7 {
                assert_eq!(full.f(x, t), win.f(x, t));
            }
            assert_eq!(full.survival(t), win.survival(t));
        }
        assert_eq!(win.f(20, 10), Some(0.0));
        assert_eq!(win.f(2, 10), None);
        assert_eq!(win.snapshot(40), full.snapshot(40));
    }

    #[test]
    fn rejects_zero_length_run() {
        assert!(run_free(&sym(), 0).is_err());
    }
}
