//! Two-component walker amplitudes on the one-dimensional integer lattice.
//!
//! One step of the walk applies a 2×2 unitary coin at every site and then
//! shifts the left-chirality component one site to the left and the
//! right-chirality component one site to the right. The Hadamard coin is the
//! default; any other unitary can be plugged in through [`Coin`].

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{WalkError, WalkResult};

/// Amplitude pair `(left, right)` at a single site.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Spinor {
    pub l: C64,
    pub r: C64,
}

impl Spinor {
    pub const ZERO: Self = Self {
        l: C64::new(0.0, 0.0),
        r: C64::new(0.0, 0.0),
    };

    pub fn new(l: C64, r: C64) -> Self {
        Self { l, r }
    }

    /// `|l|² + |r|²`
    pub fn norm_sqr(&self) -> f64 {
        self.l.norm_sqr() + self.r.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.l.is_finite() && self.r.is_finite()
    }

    pub fn scale(self, k: f64) -> Self {
        Self {
            l: self.l * k,
            r: self.r * k,
        }
    }
}

impl Add for Spinor {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            l: self.l + rhs.l,
            r: self.r + rhs.r,
        }
    }
}

impl Mul<C64> for Spinor {
    type Output = Self;

    fn mul(self, k: C64) -> Self {
        Self {
            l: self.l * k,
            r: self.r * k,
        }
    }
}

/// A single-site unitary acting on the chirality degree of freedom.
pub trait Coin: Send + Sync {
    fn apply(&self, s: Spinor) -> Spinor;
}

/// `H = [[1, 1], [1, -1]] / √2`
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct Hadamard;

impl Coin for Hadamard {
    #[inline(always)]
    fn apply(&self, s: Spinor) -> Spinor {
        coin(s)
    }
}

/// Arbitrary 2×2 unitary coin, stored row-major.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct UnitaryCoin([[C64; 2]; 2]);

impl UnitaryCoin {
    /// Checks `U†U = I` to within `1e-12`.
    pub fn new(m: [[C64; 2]; 2]) -> WalkResult<Self> {
        for i in 0..2 {
            for j in 0..2 {
                let uu: C64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (uu - target).norm() > 1e-12 {
                    return Err(WalkError::invalid("coin", "matrix is not unitary"));
                }
            }
        }
        Ok(Self(m))
    }
}

impl Coin for UnitaryCoin {
    fn apply(&self, s: Spinor) -> Spinor {
        let m = &self.0;
        Spinor {
            l: m[0][0] * s.l + m[0][1] * s.r,
            r: m[1][0] * s.l + m[1][1] * s.r,
        }
    }
}

/// Hadamard coin: `((l + r)/√2, (l − r)/√2)`.
#[inline(always)]
pub fn coin(s: Spinor) -> Spinor {
    Spinor {
        l: (s.l + s.r) * FRAC_1_SQRT_2,
        r: (s.l - s.r) * FRAC_1_SQRT_2,
    }
}

/// Chirality amplitudes placed on the starting site.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub a0: C64,
    pub b0: C64,
}

impl InitialCondition {
    pub const NORM_TOLERANCE: f64 = 1e-9;

    pub fn new(a0: C64, b0: C64) -> WalkResult<Self> {
        let ic = Self { a0, b0 };
        ic.validate()?;
        Ok(ic)
    }

    /// `a0 = 1/√2`, `b0 = i/√2`: the left-right symmetric walker.
    pub fn symmetric() -> Self {
        Self {
            a0: C64::new(FRAC_1_SQRT_2, 0.0),
            b0: C64::new(0.0, FRAC_1_SQRT_2),
        }
    }

    pub fn validate(&self) -> WalkResult<()> {
        let norm = self.a0.norm_sqr() + self.b0.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(WalkError::invalid(
                "initial condition",
                format!("|a0|^2 + |b0|^2 = {norm}, expected 1"),
            ));
        }
        Ok(())
    }
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::symmetric()
    }
}

/// Per-site probabilities over a contiguous run of sites starting at `lo`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    lo: i64,
    values: Vec<f64>,
}

impl Occupation {
    pub fn new(lo: i64, values: Vec<f64>) -> Self {
        Self { lo, values }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Last site covered, or `lo - 1` when empty.
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn covers(&self, x: i64) -> bool {
        x >= self.lo && x <= self.hi()
    }

    /// Probability at `x`; sites outside the covered run read as zero.
    pub fn get(&self, x: i64) -> f64 {
        if self.covers(x) {
            self.values[(x - self.lo) as usize]
        } else {
            0.0
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &p)| (self.lo + k as i64, p))
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Site of the largest probability; ties resolve to the leftmost site.
    pub fn argmax(&self) -> Option<i64> {
        let mut best: Option<(i64, f64)> = None;
        for (x, p) in self.iter() {
            if best.is_none_or(|(_, q)| p > q) {
                best = Some((x, p));
            }
        }
        best.map(|(x, _)| x)
    }

    /// Nonzero entries as an ordered map.
    pub fn to_map(&self) -> BTreeMap<i64, f64> {
        self.iter().filter(|&(_, p)| p != 0.0).collect()
    }
}

/// Amplitudes with `|l|² + |r|²` below this are flushed to zero at the edges
/// of the occupied range. Keeps the light-cone tails out of subnormal range.
pub const FLUSH_NORM_SQR: f64 = 1e-280;

/// Walker amplitudes at integer time `t`.
///
/// Storage is a contiguous buffer over `[origin - radius, origin + radius]`
/// with one zero guard cell on each side. Sites outside the buffer hold zero
/// amplitude. The buffer only grows when the support would leave it.
/// Amplitudes are nonzero only inside the active offset range
/// `[active.0, active.1] ⊆ [-t, t]`; stepping touches only that range.
#[derive(Clone, Debug)]
pub struct WalkState {
    t: usize,
    origin: i64,
    radius: usize,
    active: (i64, i64),
    amps: Vec<Spinor>,
}

impl PartialEq for WalkState {
    fn eq(&self, other: &Self) -> bool {
        let (lo, hi) = self.support();
        self.t == other.t
            && self.origin == other.origin
            && (lo..=hi).all(|x| self.amplitude(x) == other.amplitude(x))
    }
}

impl WalkState {
    /// `initial_state` with room for `capacity` steps preallocated.
    pub fn with_capacity(ic: &InitialCondition, origin: i64, capacity: usize) -> WalkResult<Self> {
        ic.validate()?;
        let mut amps = vec![Spinor::ZERO; 2 * capacity + 3];
        amps[capacity + 1] = Spinor::new(ic.a0, ic.b0);
        Ok(Self {
            t: 0,
            origin,
            radius: capacity,
            active: (0, 0),
            amps,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// Sites `origin ± t` bounding the support.
    pub fn support(&self) -> (i64, i64) {
        (self.origin - self.t as i64, self.origin + self.t as i64)
    }

    /// Sites bounding the range that may hold nonzero amplitude.
    pub fn occupied(&self) -> (i64, i64) {
        (self.origin + self.active.0, self.origin + self.active.1)
    }

    #[inline]
    fn index(&self, x: i64) -> Option<usize> {
        let off = x - self.origin;
        if off.unsigned_abs() as usize <= self.radius {
            Some((off + self.radius as i64 + 1) as usize)
        } else {
            None
        }
    }

    #[inline]
    fn offset_index(&self, off: i64) -> usize {
        (off + self.radius as i64 + 1) as usize
    }

    pub fn amplitude(&self, x: i64) -> Spinor {
        self.index(x).map_or(Spinor::ZERO, |i| self.amps[i])
    }

    /// Mutable access to a site inside the current support.
    pub fn amplitude_mut(&mut self, x: i64) -> Option<&mut Spinor> {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return None;
        }
        let off = x - self.origin;
        self.active = (self.active.0.min(off), self.active.1.max(off));
        let i = self.index(x)?;
        Some(&mut self.amps[i])
    }

    /// Replaces every amplitude inside the support by `f(x, amplitude)`.
    pub fn map_amplitudes(&mut self, mut f: impl FnMut(i64, Spinor) -> Spinor) {
        let (lo, hi) = self.support();
        for x in lo..=hi {
            let i = self.index(x).expect("support inside buffer");
            self.amps[i] = f(x, self.amps[i]);
        }
        self.active = (-(self.t as i64), self.t as i64);
    }

    /// `|l(x)|² + |r(x)|²`
    pub fn probability(&self, x: i64) -> f64 {
        self.amplitude(x).norm_sqr()
    }

    /// Occupation over the support `[origin - t, origin + t]`.
    pub fn occupation(&self) -> Occupation {
        let (lo, hi) = self.support();
        self.occupation_between(lo, hi)
    }

    /// Occupation restricted to `[lo, hi]`.
    pub fn occupation_between(&self, lo: i64, hi: i64) -> Occupation {
        if hi < lo {
            return Occupation::new(lo, Vec::new());
        }
        Occupation::new(lo, (lo..=hi).map(|x| self.probability(x)).collect())
    }

    /// Total probability carried by the amplitudes.
    pub fn norm(&self) -> f64 {
        let (a, b) = (
            self.offset_index(self.active.0),
            self.offset_index(self.active.1),
        );
        self.amps[a..=b].iter().map(Spinor::norm_sqr).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(Spinor::is_finite)
    }

    /// One coin-and-shift step, in place. `scratch` is reused across calls.
    pub fn advance_with<C: Coin + ?Sized>(&mut self, c: &C, scratch: &mut Scratch) {
        let next_t = self.t + 1;
        if next_t > self.radius {
            self.grow(next_t.max(2 * self.radius));
        }
        let (lo_off, hi_off) = (self.active.0 - 1, self.active.1 + 1);
        let (lo, hi) = (self.offset_index(lo_off), self.offset_index(hi_off));
        let buf = scratch.prepare(self.amps.len(), lo, hi);
        let src = &self.amps[lo - 1..=hi + 1];
        let dst = &mut buf[lo..=hi];
        for k in 0..dst.len() {
            let (a, b) = (src[k + 2], src[k]);
            dst[k] = Spinor {
                l: c.apply(a).l,
                r: c.apply(b).r,
            };
        }
        std::mem::swap(&mut self.amps, &mut scratch.buf);
        scratch.dirty = self
            .active
            .0
            .unsigned_abs()
            .max(self.active.1.unsigned_abs()) as usize;
        self.t = next_t;
        self.active = (lo_off, hi_off);
        self.trim();
    }

    /// Hadamard step, in place.
    pub fn advance(&mut self, scratch: &mut Scratch) {
        self.advance_with(&Hadamard, scratch)
    }

    fn trim(&mut self) {
        let (mut lo, mut hi) = self.active;
        while lo < hi {
            let i = self.offset_index(lo);
            if self.amps[i].norm_sqr() >= FLUSH_NORM_SQR {
                break;
            }
            self.amps[i] = Spinor::ZERO;
            lo += 1;
        }
        while hi > lo {
            let i = self.offset_index(hi);
            if self.amps[i].norm_sqr() >= FLUSH_NORM_SQR {
                break;
            }
            self.amps[i] = Spinor::ZERO;
            hi -= 1;
        }
        self.active = (lo, hi);
    }

    fn grow(&mut self, radius: usize) {
        let mut amps = vec![Spinor::ZERO; 2 * radius + 3];
        let shift = radius - self.radius;
        amps[shift..shift + self.amps.len()].copy_from_slice(&self.amps);
        self.amps = amps;
        self.radius = radius;
    }

    /// Superposition `α·self + β·other` of two states at the same time and origin.
    pub fn superpose(&self, alpha: C64, other: &Self, beta: C64) -> WalkResult<Self> {
        if self.t != other.t || self.origin != other.origin {
            return Err(WalkError::Mismatch(
                "superposed states differ in time or origin".into(),
            ));
        }
        let radius = self.radius.max(other.radius);
        let full = (-(self.t as i64), self.t as i64);
        let mut out = Self {
            t: self.t,
            origin: self.origin,
            radius,
            active: full,
            amps: vec![Spinor::ZERO; 2 * radius + 3],
        };
        let (lo, hi) = self.support();
        for x in lo..=hi {
            let i = out.index(x).unwrap();
            out.amps[i] = self.amplitude(x) * alpha + other.amplitude(x) * beta;
        }
        Ok(out)
    }

    /// State at time `t` built from explicit amplitudes; sites outside the
    /// support bound `|x - origin| <= t` are rejected.
    pub fn from_amplitudes(
        t: usize,
        origin: i64,
        sites: impl IntoIterator<Item = (i64, Spinor)>,
    ) -> WalkResult<Self> {
        let full = (-(t as i64), t as i64);
        let mut out = Self {
            t,
            origin,
            radius: t,
            active: full,
            amps: vec![Spinor::ZERO; 2 * t + 3],
        };
        for (x, s) in sites {
            let slot = out.amplitude_mut(x).ok_or_else(|| {
                WalkError::invalid("site", format!("{x} outside support at t = {t}"))
            })?;
            *slot = s;
        }
        Ok(out)
    }
}

/// Reusable step buffer for [`WalkState::advance`].
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    buf: Vec<Spinor>,
    // Half-width (about the buffer centre) of the region that may be nonzero.
    dirty: usize,
}

impl Scratch {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, len: usize, lo: usize, hi: usize) -> &mut [Spinor] {
        if self.buf.len() != len {
            self.buf.clear();
            self.buf.resize(len, Spinor::ZERO);
        } else {
            let centre = (len - 1) / 2;
            let (dlo, dhi) = (
                centre.saturating_sub(self.dirty),
                (centre + self.dirty).min(len - 1),
            );
            for i in (dlo..lo).chain(hi + 1..=dhi) {
                self.buf[i] = Spinor::ZERO;
            }
        }
        &mut self.buf
    }
}

/// Walker at `t = 0` holding `(a0, b0)` on `origin`.
pub fn initial_state(ic: &InitialCondition, origin: i64) -> WalkResult<WalkState> {
    WalkState::with_capacity(ic, origin, 0)
}

/// One Hadamard step.
pub fn step(state: &WalkState) -> WalkState {
    let mut next = state.clone();
    next.advance(&mut Scratch::new());
    next
}

/// `n` Hadamard steps; `evolve(s, 0) == s`.
pub fn evolve(state: &WalkState, n: usize) -> WalkState {
    let mut next = state.clone();
    if n > 0 && next.t + n > next.radius {
        next.grow(next.t + n);
    }
    let mut scratch = Scratch::new();
    for _ in 0..n {
        next.advance(&mut scratch);
    }
    next
}

/// Per-site `|l|² + |r|²` over the support.
pub fn occupation(state: &WalkState) -> Occupation {
    state.occupation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn basis() -> InitialCondition {
        InitialCondition::new(c(1.0, 0.0), c(0.0, 0.0)).unwrap()
    }

    #[test]
    fn symmetric_initial_state() {
        let s = initial_state(&InitialCondition::symmetric(), 0).unwrap();
        assert_eq!(s.t(), 0);
        let occ = s.occupation().to_map();
        assert_eq!(occ.keys().copied().collect::<Vec<_>>(), vec![0]);
        assert_abs_diff_eq!(occ[&0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_initial_state() {
        let s = initial_state(&basis(), 0).unwrap();
        assert_eq!(s.amplitude(0), Spinor::new(c(1.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn rejects_unnormalized_initial_condition() {
        let err = InitialCondition::new(c(0.9, 0.0), c(0.1, 0.0)).unwrap_err();
        assert!(matches!(err, WalkError::Invalid { .. }));
    }

    #[test]
    fn coin_examples() {
        let h = FRAC_1_SQRT_2;
        let out = coin(Spinor::new(c(1.0, 0.0), c(0.0, 0.0)));
        assert_abs_diff_eq!(out.l.re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(out.r.re, h, epsilon = 1e-15);

        let out = coin(Spinor::new(c(h, 0.0), c(h, 0.0)));
        assert_abs_diff_eq!((out.l - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.r.norm(), 0.0, epsilon = 1e-15);

        // H (1, i)/√2 = ((1+i)/2, (1-i)/2)
        let out = coin(Spinor::new(c(h, 0.0), c(0.0, h)));
        assert_abs_diff_eq!((out.l - c(0.5, 0.5)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((out.r - c(0.5, -0.5)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn one_and_two_steps_from_basis() {
        let s1 = step(&initial_state(&basis(), 0).unwrap());
        assert_abs_diff_eq!(s1.probability(-1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.probability(1), 0.5, epsilon = 1e-15);
        let s2 = step(&s1);
        let occ = s2.occupation();
        assert_abs_diff_eq!(occ.get(-2), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(occ.get(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(occ.get(2), 0.25, epsilon = 1e-15);
        assert_eq!(occ.to_map().len(), 3);
    }

    #[test]
    fn one_step_symmetric() {
        let s1 = step(&initial_state(&InitialCondition::symmetric(), 0).unwrap());
        assert_abs_diff_eq!(s1.probability(-1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.probability(1), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            (s1.amplitude(1).r - c(0.5, -0.5)).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn evolve_zero_is_identity() {
        let s = evolve(
            &initial_state(&InitialCondition::symmetric(), 3).unwrap(),
            7,
        );
        assert_eq!(evolve(&s, 0), s);
    }

    #[test]
    fn ballistic_peak_at_t_over_sqrt2() {
        let s = evolve(
            &initial_state(&InitialCondition::symmetric(), 0).unwrap(),
            100,
        );
        let peak = s.occupation().argmax().unwrap().abs() as f64;
        assert!(
            (peak - 100.0 * FRAC_1_SQRT_2).abs() <= 3.0,
            "peak at {peak}"
        );
    }

    #[test]
    fn long_run_norm() {
        let s = evolve(
            &initial_state(&InitialCondition::symmetric(), 0).unwrap(),
            10_000,
        );
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.occupation().sum(), 1.0, epsilon = 1e-9);
        assert!(s.is_finite());
    }

    #[test]
    fn nonzero_origin_is_translation() {
        let a = evolve(
            &initial_state(&InitialCondition::symmetric(), 0).unwrap(),
            20,
        );
        let b = evolve(
            &initial_state(&InitialCondition::symmetric(), -4).unwrap(),
            20,
        );
        for x in -20..=20 {
            assert_eq!(a.amplitude(x), b.amplitude(x - 4));
        }
    }

    #[test]
    fn unitary_coin_matches_hadamard() {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let u = UnitaryCoin::new([[h, h], [h, -h]]).unwrap();
        let s0 = initial_state(&InitialCondition::symmetric(), 0).unwrap();
        let mut a = s0.clone();
        let mut b = s0;
        let mut scratch = Scratch::new();
        for _ in 0..30 {
            a.advance(&mut scratch);
            b.advance_with(&u, &mut scratch);
        }
        for x in -30..=30 {
            assert_abs_diff_eq!(
                (a.amplitude(x).l - b.amplitude(x).l).norm(),
                0.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                (a.amplitude(x).r - b.amplitude(x).r).norm(),
                0.0,
                epsilon = 1e-14
            );
        }
        assert!(UnitaryCoin::new([[h, h], [h, h]]).is_err());
    }

    #[test]
    fn from_amplitudes_rejects_out_of_support() {
        let s = Spinor::new(c(1.0, 0.0), c(0.0, 0.0));
        assert!(WalkState::from_amplitudes(2, 0, [(3, s)]).is_err());
        assert!(WalkState::from_amplitudes(2, 0, [(-2, s)]).is_ok());
    }
}
