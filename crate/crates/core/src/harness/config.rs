use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{WalkError, WalkResult};
use crate::lattice::InitialCondition;
use crate::observables::{Measure, SaturationPolicy};

/// Registered experiments. Each maps to a fixed column set, see
/// [`ExperimentKind::columns`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Snapshot,
    RatioSeries,
    SaturationSweep,
    TrlimScan,
    Collapse,
    Profile,
    Correlation,
    ClassicalCompare,
}

impl ExperimentKind {
    pub const ALL: [Self; 8] = [
        Self::Snapshot,
        Self::RatioSeries,
        Self::SaturationSweep,
        Self::TrlimScan,
        Self::Collapse,
        Self::Profile,
        Self::Correlation,
        Self::ClassicalCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Snapshot => "snapshot",
            Self::RatioSeries => "ratio-series",
            Self::SaturationSweep => "saturation-sweep",
            Self::TrlimScan => "trlim-scan",
            Self::Collapse => "collapse",
            Self::Profile => "profile",
            Self::Correlation => "correlation",
            Self::ClassicalCompare => "classical-compare",
        }
    }

    pub fn parse(s: &str) -> WalkResult<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| WalkError::invalid("experiment", format!("unknown experiment '{s}'")))
    }
}

/// Which walk a snapshot shows.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    /// No detector.
    Iw,
    /// Detector never removed.
    Siw,
    /// Detector removed after `t_r`.
    #[default]
    Qqw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub initial: InitialCondition,
    pub walk: WalkKind,
    pub measure: Measure,
    /// Detector site(s); grid experiments take several.
    pub x_d: Vec<i64>,
    /// Removal time(s).
    pub t_r: Vec<usize>,
    /// Observation time(s) for snapshots and profiles.
    pub t: Vec<usize>,
    pub t_max: Option<usize>,
    /// Offsets from the detector site.
    pub r: Vec<i64>,
    pub saturation: SaturationPolicy,
    pub output: Option<PathBuf>,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Snapshot,
            initial: InitialCondition::symmetric(),
            walk: WalkKind::default(),
            measure: Measure::Average,
            x_d: vec![10],
            t_r: vec![50],
            t: vec![100],
            t_max: None,
            r: Vec::new(),
            saturation: SaturationPolicy::default(),
            output: None,
            workers: 1,
        }
    }
}

fn nonempty<T>(field: &'static str, v: &[T]) -> WalkResult<()> {
    if v.is_empty() {
        return Err(WalkError::invalid(field, "grid is empty"));
    }
    Ok(())
}

fn within(field: &'static str, x: i64, bound: usize) -> WalkResult<()> {
    if x.unsigned_abs() as usize > bound {
        return Err(WalkError::invalid(
            field,
            format!("site {x} outside the lattice bound {bound}"),
        ));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> WalkResult<Self> {
        toml::from_str(text).map_err(|e| WalkError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> WalkResult<String> {
        toml::to_string(self).map_err(|e| WalkError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> WalkResult<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Walk length used by experiments that run a fixed window.
    pub fn effective_t_max(&self) -> usize {
        if let Some(t) = self.t_max {
            return t;
        }
        let max_tr = self.t_r.iter().copied().max().unwrap_or(0);
        let max_t = self.t.iter().copied().max().unwrap_or(0);
        match self.experiment {
            ExperimentKind::Snapshot | ExperimentKind::Profile => max_t,
            ExperimentKind::RatioSeries => (4 * max_tr).max(200),
            ExperimentKind::Correlation => (10 * max_tr).max(500),
            ExperimentKind::SaturationSweep
            | ExperimentKind::TrlimScan
            | ExperimentKind::Collapse
            | ExperimentKind::ClassicalCompare => 0,
        }
    }

    /// Field-level checks for the selected experiment.
    pub fn validate(&self) -> WalkResult<()> {
        use ExperimentKind::*;
        self.initial.validate()?;
        self.saturation.validate()?;
        if self.workers == 0 {
            return Err(WalkError::invalid("workers", "must be at least 1"));
        }
        if !matches!(self.experiment, Snapshot) || self.walk != WalkKind::Iw {
            nonempty("x_d", &self.x_d)?;
        }
        let t_max = self.effective_t_max();
        match self.experiment {
            Snapshot | Profile => {
                nonempty("t", &self.t)?;
                if self.t.contains(&0) {
                    return Err(WalkError::invalid(
                        "t",
                        "observation times must be positive",
                    ));
                }
                if self.t.iter().any(|&t| t > t_max) {
                    return Err(WalkError::invalid("t", "observation time beyond t_max"));
                }
                if self.walk == WalkKind::Qqw || matches!(self.experiment, Profile) {
                    nonempty("t_r", &self.t_r)?;
                }
            }
            RatioSeries | Correlation => {
                nonempty("t_r", &self.t_r)?;
                if self.t_r.iter().any(|&t| t > t_max) {
                    return Err(WalkError::invalid(
                        "t_max",
                        format!("{t_max} is shorter than a removal time"),
                    ));
                }
                if matches!(self.experiment, Correlation) {
                    nonempty("r", &self.r)?;
                }
            }
            SaturationSweep | Collapse | ClassicalCompare => nonempty("t_r", &self.t_r)?,
            TrlimScan => {
                if self.t_r.len() < 2 {
                    return Err(WalkError::invalid(
                        "t_r",
                        "scan grid needs at least two removal times",
                    ));
                }
                if self.t_r.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(WalkError::invalid(
                        "t_r",
                        "scan grid must be strictly increasing",
                    ));
                }
            }
        }
        if matches!(self.experiment, ClassicalCompare) && self.x_d.iter().any(|&x| x < 1) {
            return Err(WalkError::invalid(
                "x_d",
                "classical comparison needs x_d >= 1",
            ));
        }
        if t_max > 0 {
            for &x in &self.x_d {
                within("x_d", x, t_max)?;
                for &r in &self.r {
                    within("r", x + r, t_max)?;
                }
            }
        }
        Ok(())
    }

    /// Hash of everything that affects the numbers (output path and worker count excluded).
    pub fn content_hash(&self) -> String {
        let canonical = Self {
            output: None,
            workers: 1,
            ..self.clone()
        };
        let text = canonical
            .to_toml()
            .unwrap_or_else(|_| format!("{canonical:?}"));
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Correlation);
        cfg.r = vec![-5, 5];
        cfg.t_max = Some(800);
        cfg.output = Some("out/corr.csv".into());
        cfg.saturation.tolerance = 0.015;
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "experiment = \"trlim-scan\"\nx_d = [5]\nt_r = [2, 4, 8]\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::TrlimScan);
        assert_eq!(cfg.initial, InitialCondition::symmetric());
        cfg.validate().unwrap();
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn validation_messages_name_the_field() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::SaturationSweep);
        cfg.t_r.clear();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("t_r"), "{err}");

        let mut cfg = ExperimentConfig::new(ExperimentKind::RatioSeries);
        cfg.t_max = Some(20);
        assert!(cfg.validate().unwrap_err().to_string().contains("t_max"));

        let mut cfg = ExperimentConfig::new(ExperimentKind::Profile);
        cfg.x_d = vec![500];
        assert!(cfg.validate().unwrap_err().to_string().contains("x_d"));
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a = ExperimentConfig::new(ExperimentKind::Collapse);
        let b = ExperimentConfig {
            output: Some("x.csv".into()),
            workers: 8,
            ..a.clone()
        };
        assert_eq!(a.content_hash(), b.content_hash());
        let c = ExperimentConfig {
            t_r: vec![51],
            ..a.clone()
        };
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
