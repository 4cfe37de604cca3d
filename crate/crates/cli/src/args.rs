use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "quenchwalk",
    version,
    about = "Quantum walk with a temporarily present detector"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Occupation snapshots of the detector-free walk
    Evolve(Common),
    /// One quenched run: ratio series at the detector site plus snapshots
    Quench(Common),
    /// Snapshots with a detector that is never removed
    Siw(Common),
    /// Saturation sweep, t_R^lim scan or collapse grid
    Sweep(Common),
    /// f/f0 against distance from the detector at fixed t
    Profile(Common),
    /// g/g0 time series
    Correlate(Common),
    /// Classical first passage, persistence and correlation ratio
    Classical(Common),
    /// Log-log least-squares fit over two columns of a CSV table
    Fit(FitArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum MeasureArg {
    Average,
    Normalized,
    Arrival,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Detector site(s), comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub xd: Option<Vec<i64>>,

    /// Removal time(s), comma separated
    #[arg(long, value_delimiter = ',')]
    pub tr: Option<Vec<usize>>,

    /// Walk length
    #[arg(long)]
    pub tmax: Option<usize>,

    /// Observation time(s), comma separated
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<usize>>,

    /// Offsets from the detector site, comma separated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub r: Option<Vec<i64>>,

    /// Output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps
    #[arg(long)]
    pub workers: Option<usize>,

    /// Experiment id (sweep: saturation-sweep, trlim-scan or collapse)
    #[arg(long)]
    pub experiment: Option<String>,

    #[arg(long, value_enum)]
    pub measure: Option<MeasureArg>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV table to read
    pub input: PathBuf,

    #[arg(long, default_value = "t_r")]
    pub x: String,

    #[arg(long, default_value = "sat")]
    pub y: String,

    /// Keep only rows where this integer column equals the given value, e.g. `x_d=10`
    #[arg(long = "where")]
    pub filter: Option<String>,

    /// Lower bound on the x column
    #[arg(long)]
    pub min: Option<f64>,

    /// Upper bound on the x column
    #[arg(long)]
    pub max: Option<f64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}
