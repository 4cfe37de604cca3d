mod args;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use quenchwalk::harness::{
    run_experiment, run_grid, Column, ExperimentConfig, ExperimentKind, ResultTable, RunManifest,
    SweepCache, WalkKind,
};
use quenchwalk::observables::{loglog_fit, Measure};
use quenchwalk::WalkError;

use args::{Cli, Command, Common, FitArgs, MeasureArg};

/// Exit code for rejected input; runtime failures exit with 1.
const EXIT_INVALID: u8 = 2;

fn build_config(common: &Common, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    if let Some(v) = &common.xd {
        cfg.x_d = v.clone();
    }
    if let Some(v) = &common.tr {
        cfg.t_r = v.clone();
    }
    if let Some(v) = common.tmax {
        cfg.t_max = Some(v);
    }
    if let Some(v) = &common.t {
        cfg.t = v.clone();
    }
    if let Some(v) = &common.r {
        cfg.r = v.clone();
    }
    if let Some(v) = &common.out {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = common.workers {
        cfg.workers = v;
    }
    if let Some(m) = common.measure {
        cfg.measure = match m {
            MeasureArg::Average => Measure::Average,
            MeasureArg::Normalized => Measure::Normalized,
            MeasureArg::Arrival => Measure::Arrival,
        };
    }
    Ok(cfg)
}

/// Experiment id for a subcommand; `--experiment` may only pick among the
/// ids the subcommand serves.
fn resolve_kind(
    command: &str,
    requested: Option<&str>,
    file_kind: Option<ExperimentKind>,
) -> Result<ExperimentKind> {
    let allowed: &[ExperimentKind] = match command {
        "sweep" => &[
            ExperimentKind::SaturationSweep,
            ExperimentKind::TrlimScan,
            ExperimentKind::Collapse,
        ],
        "evolve" | "siw" => &[ExperimentKind::Snapshot],
        "quench" => &[ExperimentKind::RatioSeries],
        "profile" => &[ExperimentKind::Profile],
        "correlate" => &[ExperimentKind::Correlation],
        _ => &[ExperimentKind::ClassicalCompare],
    };
    let kind = match requested {
        Some(name) => ExperimentKind::parse(name)?,
        None => file_kind
            .filter(|k| allowed.contains(k))
            .unwrap_or(allowed[0]),
    };
    if !allowed.contains(&kind) {
        bail!(WalkError::Config(format!(
            "experiment '{}' is not available from `{command}`",
            kind.name()
        )));
    }
    Ok(kind)
}

fn emit(
    manifest: &mut RunManifest,
    table: &ResultTable,
    cfg: &ExperimentConfig,
    path: Option<&Path>,
) -> Result<()> {
    match path {
        Some(p) => manifest.write_table(p, table, cfg)?,
        None => std::io::stdout()
            .lock()
            .write_all(table.to_csv().as_bytes())?,
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}-{suffix}.csv"))
}

fn run(command: &str, common: &Common) -> Result<()> {
    let file_kind = match &common.config {
        Some(p) => Some(
            ExperimentConfig::load(p)
                .with_context(|| format!("reading {}", p.display()))?
                .experiment,
        ),
        None => None,
    };
    let kind = resolve_kind(command, common.experiment.as_deref(), file_kind)?;
    let mut cfg = build_config(common, kind)?;
    match command {
        "evolve" => cfg.walk = WalkKind::Iw,
        "siw" => cfg.walk = WalkKind::Siw,
        _ => {}
    }
    cfg.validate()?;
    let mut manifest = RunManifest::new(command);
    let out = cfg.output.clone();

    match command {
        "quench" => {
            let series = run_experiment(&cfg)?;
            let snap_cfg = ExperimentConfig {
                experiment: ExperimentKind::Snapshot,
                walk: WalkKind::Qqw,
                t_max: None,
                ..cfg.clone()
            };
            snap_cfg.validate()?;
            let snaps = run_experiment(&snap_cfg)?;
            match &out {
                Some(p) => {
                    emit(
                        &mut manifest,
                        &series,
                        &cfg,
                        Some(&with_suffix(p, "series")),
                    )?;
                    emit(
                        &mut manifest,
                        &snaps,
                        &snap_cfg,
                        Some(&with_suffix(p, "snapshot")),
                    )?;
                }
                None => {
                    emit(&mut manifest, &series, &cfg, None)?;
                    println!();
                    emit(&mut manifest, &snaps, &snap_cfg, None)?;
                }
            }
        }
        "sweep" => {
            let grid = run_grid(&cfg, &mut SweepCache::new())?;
            for (cell, err) in &grid.failures {
                eprintln!("warning: cell x_d={:?} failed: {err}", cell.x_d);
                manifest.failures.push(format!("x_d={:?}: {err}", cell.x_d));
            }
            if grid.table.rows.is_empty() {
                bail!("every sweep cell failed");
            }
            emit(&mut manifest, &grid.table, &cfg, out.as_deref())?;
        }
        _ => {
            let table = run_experiment(&cfg)?;
            emit(&mut manifest, &table, &cfg, out.as_deref())?;
        }
    }
    if let Some(p) = &out {
        manifest.save(&RunManifest::sidecar_for(p))?;
    }
    Ok(())
}

fn fit(args: &FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let table = ResultTable::from_csv(&text)?;
    let xs = table.column(&args.x)?;
    let ys = table.column(&args.y)?;
    let keep: Vec<bool> = match &args.filter {
        Some(expr) => {
            let (name, value) = expr.split_once('=').ok_or_else(|| {
                WalkError::Config(format!("--where expects column=value, got '{expr}'"))
            })?;
            let value: f64 = value
                .parse()
                .map_err(|_| WalkError::Config(format!("bad value in '{expr}'")))?;
            table
                .column(name)?
                .into_iter()
                .map(|v| v == value)
                .collect()
        }
        None => vec![true; xs.len()],
    };
    let points: Vec<(f64, f64)> = (0..xs.len())
        .filter(|&k| keep[k])
        .filter(|&k| args.min.is_none_or(|m| xs[k] >= m) && args.max.is_none_or(|m| xs[k] <= m))
        .map(|k| (xs[k], ys[k]))
        .collect();
    let fit = loglog_fit(&points)?;
    let mut out = ResultTable::new(
        "fit",
        vec![
            Column::int("points"),
            Column::real("slope"),
            Column::real("intercept"),
            Column::real("max_relative_residual"),
        ],
    );
    out.meta("input", args.input.display());
    out.meta("columns", format!("{} vs {}", args.y, args.x));
    out.push(vec![
        points.len().into(),
        fit.slope.into(),
        fit.intercept.into(),
        fit.max_relative_residual.into(),
    ]);
    match &args.out {
        Some(p) => out.write_csv(p)?,
        None => print!("{}", out.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evolve(c) => run("evolve", c),
        Command::Quench(c) => run("quench", c),
        Command::Siw(c) => run("siw", c),
        Command::Sweep(c) => run("sweep", c),
        Command::Profile(c) => run("profile", c),
        Command::Correlate(c) => run("correlate", c),
        Command::Classical(c) => run("classical", c),
        Command::Fit(a) => fit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let invalid = matches!(
                e.downcast_ref::<WalkError>(),
                Some(WalkError::Invalid { .. } | WalkError::Config(_) | WalkError::NoCrossing(_))
            );
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(if invalid { EXIT_INVALID } else { 1 })
        }
    }
}
