use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "nqs-bell",
    version,
    about = "Neural-network variational search for many-body Bell violations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an RBM on a Bell operator; writes curve.jsonl, checkpoint.json and summary.json.
    Train(CommonArgs),
    /// Exact minimum eigenvalue of the Bell operator; writes ed.json and the eigenvector.
    Ed(CommonArgs),
    /// Classical bound from the formula and, where possible, by brute force.
    Bound(CommonArgs),
    /// Repeat train (and ed when it fits) over a grid; writes scan.csv.
    Scan(ScanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IneqKind {
    I1,
    I2,
    I3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SchemeName {
    Dense,
    ShortRange,
    PermSymmetric,
    PartialSymmetric,
}

#[derive(Clone, Debug, Default, Args)]
#[command(allow_negative_numbers = true)]
pub struct CommonArgs {
    /// Which inequality: i1 (XXZ-type), i2 (all-to-all two-body), i3 (two settings per party).
    #[arg(long, value_enum)]
    pub ineq: Option<IneqKind>,
    /// Number of parties (spins).
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimerization δ of i1.
    #[arg(long, value_parser = parse_number, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Anisotropy Δ of i1.
    #[arg(long = "Delta", value_parser = parse_number, allow_hyphen_values = true)]
    pub big_delta: Option<f64>,
    /// Measurement angle θ in radians (i2, i3); accepts forms like `2pi/3`.
    #[arg(long, value_parser = parse_number, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Half-width ε of the random angle window of i2, in radians.
    #[arg(long, value_parser = parse_number, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Parameter-tying scheme of the RBM.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeName>,
    /// Hidden-unit density α (M = α·N for the symmetric schemes).
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Coupling range R of the short-range scheme.
    #[arg(long)]
    pub range: Option<usize>,
    /// Training iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Monte Carlo samples per iteration.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Markov chains.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Global seed (network initialization, chains, random settings).
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "NQS_BELL_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScanAxis {
    #[value(name = "Delta")]
    Delta,
    #[value(name = "theta")]
    Theta,
    #[value(name = "N")]
    N,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Delta => "Delta",
            ScanAxis::Theta => "theta",
            ScanAxis::N => "N",
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Quantity varied across the scan.
    #[arg(long, value_enum)]
    pub axis: ScanAxis,
    /// Comma-separated values, or `start:stop:count` for evenly spaced points.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Grid,
    /// Skip training; only exact diagonalization per point.
    #[arg(long)]
    pub ed_only: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Parses a real number, optionally written as a multiple of π: `pi`, `-pi/2`, `2pi/3`, `0.5*pi`.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read {s:?} as a number");
    let Some(pos) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let head = t[..pos].trim_end_matches('*');
    let coeff = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let tail = &t[pos + 2..];
    let div = match tail.strip_prefix('/') {
        None if tail.is_empty() => 1.0,
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    if div == 0.0 {
        return Err(bad());
    }
    Ok(coeff * std::f64::consts::PI / div)
}

/// Parses a scan grid.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [list] => list
            .split(',')
            .map(parse_number)
            .collect::<Result<Vec<_>, _>>()?,
        [a, b, count] => {
            let (a, b) = (parse_number(a)?, parse_number(b)?);
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| format!("bad point count {count:?}"))?;
            match count {
                0 => Vec::new(),
                1 => vec![a],
                c => (0..c)
                    .map(|i| a + (b - a) * i as f64 / (c - 1) as f64)
                    .collect(),
            }
        }
        _ => {
            return Err(format!(
                "cannot read grid {s:?}; use a,b,c or start:stop:count"
            ))
        }
    };
    if values.is_empty() {
        return Err("the scan grid is empty".into());
    }
    Ok(Grid(values))
}
