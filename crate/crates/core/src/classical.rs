//! Simple symmetric random walk (±1 with probability 1/2) for comparison with
//! the quantum walk: free occupation, first passage to a site, survival of an
//! absorbing site present for a finite time, and the ratios built from them.

use serde::{Deserialize, Serialize};

use crate::error::{WalkError, WalkResult};
use crate::lattice::Occupation;

/// Classical occupation at time `t` plus the probability absorbed so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDistribution {
    pub t: usize,
    pub probs: Occupation,
    pub absorbed: f64,
}

impl ClassicalDistribution {
    pub fn surviving(&self) -> f64 {
        self.probs.sum()
    }
}

/// `F_c(x_D, t)` for `t = 1..=t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstPassageSeries {
    pub x_d: i64,
    /// `values[t - 1] = F_c(x_D, t)`
    pub values: Vec<f64>,
}

impl FirstPassageSeries {
    pub fn at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.values.get(t - 1).copied().unwrap_or(0.0)
        }
    }

    /// `Σ_{τ ≤ t} F_c(x_D, τ)`
    pub fn cumulative(&self, t: usize) -> f64 {
        self.values.iter().take(t).sum()
    }
}

/// Absorbing-site propagation over `[-t_max, t_max]`, the absorber active at
/// steps `1..=absorb_until`. Returns the distribution at every step.
fn propagate(x_d: i64, absorb_until: usize, t_max: usize) -> Vec<ClassicalDistribution> {
    let n = t_max as i64;
    let width = (2 * n + 3) as usize;
    let idx = |x: i64| (x + n + 1) as usize;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[idx(0)] = 1.0;
    let mut absorbed = 0.0;
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(ClassicalDistribution {
        t: 0,
        probs: Occupation::new(0, vec![1.0]),
        absorbed,
    });
    for t in 1..=t_max {
        let reach = t as i64;
        for x in -reach..=reach {
            next[idx(x)] = 0.5 * (cur[idx(x) - 1] + cur[idx(x) + 1]);
        }
        std::mem::swap(&mut cur, &mut next);
        if t <= absorb_until && x_d.abs() <= reach {
            absorbed += cur[idx(x_d)];
            cur[idx(x_d)] = 0.0;
        }
        let probs = Occupation::new(-reach, cur[idx(-reach)..=idx(reach)].to_vec());
        out.push(ClassicalDistribution { t, probs, absorbed });
    }
    out
}

/// Binomial occupation of the free walk at time `t`.
pub fn classical_free(t: usize) -> ClassicalDistribution {
    propagate(0, 0, t).pop().expect("at least t = 0")
}

/// First passage to `x_d ≥ 1`, from the absorbed increment of a permanently
/// absorbing site.
pub fn first_passage(x_d: i64, t_max: usize) -> WalkResult<FirstPassageSeries> {
    if x_d < 1 {
        return Err(WalkError::invalid("x_D", "first passage needs x_D >= 1"));
    }
    // Only sites left of the absorber matter: propagate on [-t_max, x_d - 1].
    let n = t_max as i64;
    let width = (n + x_d + 2) as usize;
    let idx = |x: i64| (x + n + 1) as usize;
    let mut cur = vec![0.0; width];
    let mut next = vec![0.0; width];
    cur[idx(0)] = 1.0;
    let mut values = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let reach = t as i64;
        values.push(0.5 * cur[idx(x_d - 1)]);
        for x in -reach..x_d.min(reach + 1) {
            next[idx(x)] =
                0.5 * (cur[idx(x) - 1] + if x + 1 < x_d { cur[idx(x) + 1] } else { 0.0 });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(FirstPassageSeries { x_d, values })
}

/// Closed form `F(x, t) = (x/t)·C(t, (t+x)/2)·2^{-t}` for `t = 1..=t_max`,
/// evaluated with a two-step multiplicative recurrence in `t`.
pub fn first_passage_closed_form(x_d: i64, t_max: usize) -> WalkResult<FirstPassageSeries> {
    if x_d < 1 {
        return Err(WalkError::invalid("x_D", "first passage needs x_D >= 1"));
    }
    let x = x_d as usize;
    let mut values = vec![0.0; t_max];
    if x > t_max {
        return Ok(FirstPassageSeries { x_d, values });
    }
    // b = C(t, (t+x)/2)/2^t, starting at t = x where it equals 2^{-x}.
    let mut b = 0.5f64.powi(x as i32);
    let mut t = x;
    loop {
        values[t - 1] = x as f64 / t as f64 * b;
        if t + 2 > t_max {
            break;
        }
        let k = (t + x) / 2; // successes
        let m = (t - x) / 2; // failures
        b *= ((t + 1) * (t + 2)) as f64 / (4 * (k + 1) * (m + 1)) as f64;
        t += 2;
    }
    Ok(FirstPassageSeries { x_d, values })
}

/// Persistence `1 − Σ_{t ≤ t_R} F_c(x_D, t)`, which equals `f_c/f_c0` for the
/// quenched classical walk.
pub fn classical_ratio(x_d: i64, t_r: usize) -> WalkResult<f64> {
    if x_d < 1 {
        return Err(WalkError::invalid("x_D", "classical ratio needs x_D >= 1"));
    }
    Ok(1.0 - first_passage_closed_form(x_d, t_r)?.cumulative(t_r))
}

/// `g_c/g_c0`, the square of the persistence.
pub fn classical_correlation_ratio(x_d: i64, t_r: usize) -> WalkResult<f64> {
    classical_ratio(x_d, t_r).map(|p| p * p)
}

/// Factorized quenched occupation `f_c(x, t) = f_c0(x, t)·persistence(t_R)`.
pub fn classical_factorized(x: i64, t: usize, x_d: i64, t_r: usize) -> WalkResult<(f64, f64)> {
    let free = classical_free(t).probs.get(x);
    Ok((free * classical_ratio(x_d, t_r)?, free))
}

/// Exact distribution with the absorbing site active for `1 ≤ t ≤ t_R`.
pub fn classical_quenched_exact(
    x_d: i64,
    t_r: usize,
    t_max: usize,
) -> WalkResult<Vec<ClassicalDistribution>> {
    if x_d < 1 {
        return Err(WalkError::invalid("x_D", "needs x_D >= 1"));
    }
    Ok(propagate(x_d, t_r, t_max))
}

/// Largest `|f_c^exact/f_c0 − persistence|` over sites with `f_c0 > floor` at
/// time `t`: how far the exact conditioned walk departs from the factorized model.
pub fn factorization_discrepancy(x_d: i64, t_r: usize, t: usize) -> WalkResult<f64> {
    let exact = classical_quenched_exact(x_d, t_r, t)?
        .pop()
        .expect("t = 0 entry");
    let free = classical_free(t);
    let persistence = classical_ratio(x_d, t_r)?;
    Ok(free
        .probs
        .iter()
        .filter(|&(_, p)| p > 1e-12)
        .map(|(x, p)| (exact.probs.get(x) / p - persistence).abs())
        .fold(0.0, f64::max))
}
