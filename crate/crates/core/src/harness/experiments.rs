//! Experiment registry: each [`ExperimentKind`] turns a validated config into
//! one plot-ready [`ResultTable`] with a fixed column set.

use std::time::Instant;

use crate::classical::{classical_correlation_ratio, classical_ratio, first_passage_closed_form};
use crate::error::WalkResult;
use crate::harness::config::{ExperimentConfig, ExperimentKind, WalkKind};
use crate::harness::table::{format_real, Cell, Column, ResultTable};
use crate::measurement::{run_quenched_with, DetectorSchedule, RecordOptions, WalkRecord};
use crate::observables::{
    correlation_ratio, find_tr_lim, loglog_fit, parity_valid, ratio_series, scaling_collapse_k,
    spatial_ratio_profile, Measure, SaturationProbe,
};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

impl ExperimentKind {
    /// Column set of the table each experiment emits.
    pub fn columns(self) -> Vec<Column> {
        match self {
            Self::Snapshot => vec![
                Column::int("t"),
                Column::int("x"),
                Column::real("f"),
                Column::real("f_normalized"),
                Column::real("survival"),
            ],
            Self::RatioSeries => vec![
                Column::int("t_r"),
                Column::int("x"),
                Column::int("t"),
                Column::real("ratio"),
                Column::real("ratio_normalized"),
                Column::real("ratio_arrival"),
                Column::real("survival"),
            ],
            Self::SaturationSweep => vec![
                Column::int("x_d"),
                Column::int("t_r"),
                Column::int("t_max"),
                Column::real("sat"),
                Column::real("relative_spread"),
                Column::int("converged"),
            ],
            Self::TrlimScan => vec![
                Column::int("x_d"),
                Column::int("t_r_lim"),
                Column::real("sat_at_lim"),
                Column::real("sat_after_lim"),
                Column::int("evaluations"),
            ],
            Self::Collapse => {
                vec![
                    Column::int("x_d"),
                    Column::int("t_r"),
                    Column::real("sat"),
                    Column::real("k"),
                ]
            }
            Self::Profile => vec![
                Column::int("t_r"),
                Column::int("t"),
                Column::int("r"),
                Column::real("ratio"),
            ],
            Self::Correlation => vec![
                Column::int("t_r"),
                Column::int("r"),
                Column::int("t"),
                Column::real("g_ratio"),
            ],
            Self::ClassicalCompare => vec![
                Column::int("x_d"),
                Column::int("t_r"),
                Column::real("first_passage"),
                Column::real("persistence"),
                Column::real("correlation_ratio"),
            ],
        }
    }
}

fn schedule_for(walk: WalkKind, x_d: i64, t_r: usize) -> DetectorSchedule {
    match walk {
        WalkKind::Iw => DetectorSchedule::absent(),
        WalkKind::Siw => DetectorSchedule::permanent(x_d),
        WalkKind::Qqw => DetectorSchedule::step_quench(x_d, t_r),
    }
}

fn pair(
    cfg: &ExperimentConfig,
    sched: &DetectorSchedule,
    t_max: usize,
    opts: &RecordOptions,
) -> WalkResult<(WalkRecord, WalkRecord)> {
    let rec = run_quenched_with(&cfg.initial, sched, t_max, opts)?;
    let base = run_quenched_with(&cfg.initial, &DetectorSchedule::absent(), t_max, opts)?;
    Ok((rec, base))
}

fn snapshot(cfg: &ExperimentConfig, table: &mut ResultTable) -> WalkResult<()> {
    let t_max = cfg.effective_t_max();
    let x_d = cfg.x_d.first().copied().unwrap_or(0);
    let t_r = cfg.t_r.first().copied().unwrap_or(0);
    let sched = schedule_for(cfg.walk, x_d, t_r);
    let mut times = cfg.t.clone();
    times.sort_unstable();
    times.dedup();
    let opts = RecordOptions::range(0, 0).with_snapshots(times.iter().copied());
    let rec = run_quenched_with(&cfg.initial, &sched, t_max, &opts)?;
    let origin = rec.origin();
    for &t in &times {
        let snap = rec.snapshot(t).expect("snapshot requested");
        let survival = rec.survival(t).unwrap_or(f64::NAN);
        for (x, f) in snap.iter().filter(|&(x, _)| parity_valid(x, origin, t)) {
            table.push(vec![
                t.into(),
                x.into(),
                f.into(),
                rec.f_normalized(x, t).into(),
                survival.into(),
            ]);
        }
    }
    Ok(())
}

fn ratio_table(cfg: &ExperimentConfig, table: &mut ResultTable) -> WalkResult<()> {
    let t_max = cfg.effective_t_max();
    let x_d = cfg.x_d[0];
    let probe = x_d + cfg.r.first().copied().unwrap_or(0);
    for &t_r in &cfg.t_r {
        let (rec, base) = pair(
            cfg,
            &DetectorSchedule::step_quench(x_d, t_r),
            t_max,
            &RecordOptions::site(probe),
        )?;
        let avg = ratio_series(&rec, &base, probe, Measure::Average)?;
        let norm = ratio_series(&rec, &base, probe, Measure::Normalized)?;
        let arrival = ratio_series(&rec, &base, probe, Measure::Arrival)?;
        for &(t, v) in &avg.values {
            table.push(vec![
                t_r.into(),
                probe.into(),
                t.into(),
                v.into(),
                norm.at(t).into(),
                arrival.at(t).into(),
                rec.survival(t).into(),
            ]);
        }
    }
    Ok(())
}

fn profile_table(cfg: &ExperimentConfig, table: &mut ResultTable) -> WalkResult<()> {
    let t_max = cfg.effective_t_max();
    let x_d = cfg.x_d[0];
    let mut times = cfg.t.clone();
    times.sort_unstable();
    times.dedup();
    for &t_r in &cfg.t_r {
        let opts = RecordOptions::range(x_d, x_d).with_snapshots(times.iter().copied());
        let (rec, base) = pair(cfg, &DetectorSchedule::step_quench(x_d, t_r), t_max, &opts)?;
        for &t in &times {
            for (r, v) in spatial_ratio_profile(&rec, &base, x_d, t, cfg.measure)?.values {
                table.push(vec![t_r.into(), t.into(), r.into(), v.into()]);
            }
        }
    }
    Ok(())
}

fn correlation_table(cfg: &ExperimentConfig, table: &mut ResultTable) -> WalkResult<()> {
    let t_max = cfg.effective_t_max();
    let x_d = cfg.x_d[0];
    let lo = cfg.r.iter().map(|r| x_d + r).min().unwrap().min(x_d);
    let hi = cfg.r.iter().map(|r| x_d + r).max().unwrap().max(x_d);
    for &t_r in &cfg.t_r {
        let (rec, base) = pair(
            cfg,
            &DetectorSchedule::step_quench(x_d, t_r),
            t_max,
            &RecordOptions::range(lo, hi),
        )?;
        for &r in &cfg.r {
            for (t, v) in correlation_ratio(&rec, &base, x_d, r, cfg.measure)?.values {
                table.push(vec![t_r.into(), r.into(), t.into(), v.into()]);
            }
        }
    }
    Ok(())
}

fn saturation_rows(cfg: &ExperimentConfig, x_d: i64, table: &mut ResultTable) -> WalkResult<()> {
    let probe = SaturationProbe::new(cfg.initial, x_d, cfg.saturation.clone())?;
    for (t_r, est) in probe.sweep(&cfg.t_r)? {
        let row: Vec<Cell> = match cfg.experiment {
            ExperimentKind::Collapse => {
                vec![
                    x_d.into(),
                    t_r.into(),
                    est.value.into(),
                    (est.value * t_r as f64 / (x_d * x_d) as f64).into(),
                ]
            }
            _ => vec![
                x_d.into(),
                t_r.into(),
                est.window.1.into(),
                est.value.into(),
                est.relative_spread.into(),
                est.converged.into(),
            ],
        };
        table.push(row);
    }
    Ok(())
}

fn trlim_rows(cfg: &ExperimentConfig, x_d: i64, table: &mut ResultTable) -> WalkResult<()> {
    let scan = find_tr_lim(&cfg.initial, x_d, &cfg.t_r, &cfg.saturation)?;
    let at = scan.evaluated.get(&scan.t_r_lim).copied();
    let after = scan
        .evaluated
        .range(scan.t_r_lim + 1..)
        .next()
        .map(|(_, v)| *v);
    table.push(vec![
        x_d.into(),
        scan.t_r_lim.into(),
        at.into(),
        after.into(),
        scan.evaluated.len().into(),
    ]);
    Ok(())
}

fn classical_rows(cfg: &ExperimentConfig, x_d: i64, table: &mut ResultTable) -> WalkResult<()> {
    let max_tr = cfg.t_r.iter().copied().max().unwrap_or(0);
    let fp = first_passage_closed_form(x_d, max_tr)?;
    for &t_r in &cfg.t_r {
        table.push(vec![
            x_d.into(),
            t_r.into(),
            fp.at(t_r).into(),
            classical_ratio(x_d, t_r)?.into(),
            classical_correlation_ratio(x_d, t_r)?.into(),
        ]);
    }
    Ok(())
}

/// Experiments whose grid splits into one independent cell per detector site.
pub fn is_grid(kind: ExperimentKind) -> bool {
    matches!(
        kind,
        ExperimentKind::SaturationSweep
            | ExperimentKind::TrlimScan
            | ExperimentKind::Collapse
            | ExperimentKind::ClassicalCompare
    )
}

/// Splits a config into independent cells, one per `x_d` for grid
/// experiments and a single cell otherwise.
pub fn split_cells(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    if !is_grid(cfg.experiment) {
        return vec![cfg.clone()];
    }
    cfg.x_d
        .iter()
        .map(|&x| ExperimentConfig {
            x_d: vec![x],
            output: None,
            workers: 1,
            ..cfg.clone()
        })
        .collect()
}

/// Empty table with the header metadata for `cfg`.
pub fn table_for(cfg: &ExperimentConfig) -> WalkResult<ResultTable> {
    let kind = cfg.experiment;
    let mut table = ResultTable::new(kind.name(), kind.columns());
    table.meta("engine_version", ENGINE_VERSION);
    let echo = ExperimentConfig {
        output: None,
        workers: 1,
        ..cfg.clone()
    };
    table.meta("config", echo.to_toml()?);
    Ok(table)
}

/// Grid-level metadata computed from the merged rows: power-law slopes for
/// sweeps and scans, mean and spread of `k` for the collapse.
pub fn finalize(table: &mut ResultTable) -> WalkResult<()> {
    let col = |t: &ResultTable, n: &str| t.column(n);
    match ExperimentKind::parse(&table.experiment)? {
        ExperimentKind::SaturationSweep => {
            let (xs, ts, sats) = (col(table, "x_d")?, col(table, "t_r")?, col(table, "sat")?);
            let mut sites: Vec<i64> = xs.iter().map(|&x| x as i64).collect();
            sites.dedup();
            for x_d in sites {
                let points: Vec<(f64, f64)> = (0..xs.len())
                    .filter(|&k| xs[k] as i64 == x_d && ts[k] > 0.0 && sats[k] > 0.0)
                    .map(|k| (ts[k], sats[k]))
                    .collect();
                if let Ok(fit) = loglog_fit(&points) {
                    table.meta(&format!("fit_slope_x_d_{x_d}"), format_real(fit.slope));
                }
            }
        }
        ExperimentKind::TrlimScan => {
            let points: Vec<(f64, f64)> = col(table, "x_d")?
                .into_iter()
                .zip(col(table, "t_r_lim")?)
                .collect();
            if let Ok(fit) = loglog_fit(&points) {
                table.meta("fit_slope", format_real(fit.slope));
            }
        }
        ExperimentKind::Collapse => {
            let (xs, ts, sats) = (col(table, "x_d")?, col(table, "t_r")?, col(table, "sat")?);
            let cells: Vec<(i64, usize, f64)> = (0..xs.len())
                .map(|k| (xs[k] as i64, ts[k] as usize, sats[k]))
                .collect();
            if !cells.is_empty() {
                let est = scaling_collapse_k(&cells)?;
                table.meta("k_mean", format_real(est.mean));
                table.meta("k_relative_spread", format_real(est.relative_spread));
            }
        }
        _ => {}
    }
    Ok(())
}

fn fill(cfg: &ExperimentConfig, table: &mut ResultTable) -> WalkResult<()> {
    match cfg.experiment {
        ExperimentKind::Snapshot => snapshot(cfg, table),
        ExperimentKind::RatioSeries => ratio_table(cfg, table),
        ExperimentKind::Profile => profile_table(cfg, table),
        ExperimentKind::Correlation => correlation_table(cfg, table),
        kind => {
            for &x_d in &cfg.x_d {
                match kind {
                    ExperimentKind::TrlimScan => trlim_rows(cfg, x_d, table)?,
                    ExperimentKind::ClassicalCompare => classical_rows(cfg, x_d, table)?,
                    _ => saturation_rows(cfg, x_d, table)?,
                }
            }
            Ok(())
        }
    }
}

/// Rows of one cell, without grid-level metadata.
pub fn run_cell(cfg: &ExperimentConfig) -> WalkResult<ResultTable> {
    cfg.validate()?;
    let start = Instant::now();
    let mut table = table_for(cfg)?;
    fill(cfg, &mut table)?;
    table.wall_time = start.elapsed().as_secs_f64();
    Ok(table)
}

/// Runs one experiment sequentially. Unconverged saturation estimates are
/// flagged in the `converged` column; the run itself still succeeds.
pub fn run_experiment(cfg: &ExperimentConfig) -> WalkResult<ResultTable> {
    let mut table = run_cell(cfg)?;
    finalize(&mut table)?;
    Ok(table)
}
