use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{WalkError, WalkResult};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Real,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnType,
}

impl Column {
    pub fn int(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: ColumnType::Integer,
        }
    }

    pub fn real(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: ColumnType::Real,
        }
    }
}

/// One CSV cell. `Real(NaN)` marks an undefined value.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn undefined() -> Self {
        Self::Real(f64::NAN)
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Self::Int(v) => v as f64,
            Self::Real(v) => v,
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Self::Real(v.unwrap_or(f64::NAN))
    }
}

/// 17 significant digits, which round-trips every finite `f64`.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Named, typed columns plus rows and `#`-prefixed metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub experiment: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Written into the CSV header, in key order.
    pub metadata: BTreeMap<String, String>,
    /// Seconds spent computing; kept out of the CSV so output stays reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl ResultTable {
    pub fn new(experiment: &str, columns: Vec<Column>) -> Self {
        Self {
            experiment: experiment.into(),
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
            wall_time: 0.0,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Values of one column as `f64`.
    pub fn column(&self, name: &str) -> WalkResult<Vec<f64>> {
        let k = self
            .column_index(name)
            .ok_or_else(|| WalkError::invalid("column", format!("no column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", self.experiment);
        for (k, v) in &self.metadata {
            for line in v.lines().filter(|l| !l.trim().is_empty()) {
                let _ = writeln!(out, "# {k}: {line}");
            }
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(out, "{}", header.join(","));
        let types: Vec<&str> = self
            .columns
            .iter()
            .map(|c| match c.kind {
                ColumnType::Integer => "integer",
                ColumnType::Real => "real",
            })
            .collect();
        let _ = writeln!(out, "# types: {}", types.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match *c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Real(v) => format_real(v),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> WalkResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Parses the CSV layout produced by [`ResultTable::to_csv`]. Plain CSV
    /// with a header row and no `#` lines is accepted too; columns are then
    /// typed as real.
    pub fn from_csv(text: &str) -> WalkResult<Self> {
        let mut experiment = String::new();
        let mut metadata = BTreeMap::new();
        let mut header: Option<Vec<String>> = None;
        let mut types: Option<Vec<ColumnType>> = None;
        let mut raw_rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim_start();
                if let Some((k, v)) = rest.split_once(": ") {
                    match k {
                        "experiment" => experiment = v.to_string(),
                        "types" => {
                            types = Some(
                                v.split(',')
                                    .map(|t| {
                                        if t == "integer" {
                                            ColumnType::Integer
                                        } else {
                                            ColumnType::Real
                                        }
                                    })
                                    .collect(),
                            )
                        }
                        _ => {
                            metadata
                                .entry(k.to_string())
                                .and_modify(|s: &mut String| {
                                    s.push('\n');
                                    s.push_str(v)
                                })
                                .or_insert_with(|| v.to_string());
                        }
                    }
                }
                continue;
            }
            if header.is_none() {
                header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            } else {
                raw_rows.push((n + 1, line.to_string()));
            }
        }
        let header = header.ok_or_else(|| WalkError::invalid("csv", "missing header row"))?;
        let types = types.unwrap_or_else(|| vec![ColumnType::Real; header.len()]);
        if types.len() != header.len() {
            return Err(WalkError::invalid("csv", "type line does not match header"));
        }
        let columns: Vec<Column> = header
            .iter()
            .zip(&types)
            .map(|(name, &kind)| Column {
                name: name.clone(),
                kind,
            })
            .collect();
        let mut rows = Vec::with_capacity(raw_rows.len());
        for (n, line) in raw_rows {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != columns.len() {
                return Err(WalkError::invalid(
                    "csv",
                    format!("line {n}: expected {} fields", columns.len()),
                ));
            }
            let row = fields
                .iter()
                .zip(&columns)
                .map(|(f, c)| match c.kind {
                    ColumnType::Integer => {
                        f.parse::<i64>().map(Cell::Int).map_err(|e| e.to_string())
                    }
                    ColumnType::Real => f.parse::<f64>().map(Cell::Real).map_err(|e| e.to_string()),
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| WalkError::invalid("csv", format!("line {n}: {e}")))?;
            rows.push(row);
        }
        Ok(Self {
            experiment,
            columns,
            rows,
            metadata,
            wall_time: 0.0,
        })
    }
}
