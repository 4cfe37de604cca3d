use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{WalkError, WalkResult};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiments::{finalize, run_cell, split_cells, table_for};
use crate::harness::table::ResultTable;

/// Finished cells keyed by [`ExperimentConfig::content_hash`].
#[derive(Debug, Default)]
pub struct SweepCache {
    tables: HashMap<String, ResultTable>,
}

impl SweepCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn get(&self, cfg: &ExperimentConfig) -> Option<&ResultTable> {
        self.tables.get(&cfg.content_hash())
    }
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub config: ExperimentConfig,
    pub result: Result<ResultTable, String>,
    pub cached: bool,
}

/// Runs independent cells on up to `workers` threads. Results come back in
/// input order; a failing cell is reported in its slot and the rest still run.
pub fn run_sweep(
    configs: &[ExperimentConfig],
    workers: usize,
    cache: &mut SweepCache,
) -> WalkResult<Vec<CellOutcome>> {
    if configs.is_empty() {
        return Err(WalkError::invalid("grid", "sweep has no cells"));
    }
    if workers == 0 {
        return Err(WalkError::invalid("workers", "must be at least 1"));
    }
    let hashes: Vec<String> = configs.iter().map(ExperimentConfig::content_hash).collect();
    let mut pending: Vec<usize> = Vec::new();
    for (k, h) in hashes.iter().enumerate() {
        if !cache.tables.contains_key(h) && !pending.iter().any(|&j| hashes[j] == *h) {
            pending.push(k);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| WalkError::invalid("workers", e.to_string()))?;
    let fresh: Vec<(usize, Result<ResultTable, String>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&k| (k, run_cell(&configs[k]).map_err(|e| e.to_string())))
            .collect()
    });

    let mut failed: HashMap<&str, String> = HashMap::new();
    let mut computed = Vec::with_capacity(fresh.len());
    for (k, res) in fresh {
        match res {
            Ok(table) => {
                cache.tables.insert(hashes[k].clone(), table);
                computed.push(k);
            }
            Err(e) => {
                failed.insert(hashes[k].as_str(), e);
            }
        }
    }
    Ok(configs
        .iter()
        .zip(&hashes)
        .enumerate()
        .map(|(k, (cfg, h))| {
            let result = match failed.get(h.as_str()) {
                Some(e) => Err(e.clone()),
                None => Ok(cache.tables[h].clone()),
            };
            CellOutcome {
                config: cfg.clone(),
                result,
                cached: !computed.contains(&k) && !failed.contains_key(h.as_str()),
            }
        })
        .collect())
}

/// Merged table of a gridded experiment plus the cells that failed.
#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub table: ResultTable,
    pub failures: Vec<(ExperimentConfig, String)>,
}

/// Splits `cfg` into cells, runs them with `cfg.workers` threads and merges
/// the rows in cell order, so the table does not depend on the worker count.
pub fn run_grid(cfg: &ExperimentConfig, cache: &mut SweepCache) -> WalkResult<GridOutcome> {
    cfg.validate()?;
    let cells = split_cells(cfg);
    let outcomes = run_sweep(&cells, cfg.workers, cache)?;
    let mut table = table_for(cfg)?;
    let mut failures = Vec::new();
    for cell in outcomes {
        match cell.result {
            Ok(part) => {
                table.wall_time += part.wall_time;
                table.rows.extend(part.rows);
            }
            Err(e) => failures.push((cell.config, e)),
        }
    }
    finalize(&mut table)?;
    Ok(GridOutcome { table, failures })
}
