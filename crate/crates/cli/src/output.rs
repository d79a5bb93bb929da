//! File formats. Floats in CSV files use `{:.16e}` (17 significant digits,
//! round-trip exact); JSON uses serde_json's shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use aklab::solver::{NegativityEvent, NegativityReport, Trajectory};
use aklab::Field;
use serde::Serialize;

use crate::scenario::{Regime, Scenario};
use crate::{CliError, CliResult};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const META_FILE: &str = "meta.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Rows `t,theta,K`, ordered by time and then by node.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "t,theta,K").map_err(io)?;
    for (&t, state) in traj.times.iter().zip(&traj.states) {
        let grid = state.grid();
        for (i, k) in state.values().iter().enumerate() {
            writeln!(w, "{t:.16e},{:.16e},{k:.16e}", grid.node(i)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Two-column CSV `theta,<name>`.
pub fn write_field(path: &Path, name: &str, field: &Field) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(w, "theta,{name}").map_err(io)?;
    let grid = field.grid();
    for (i, v) in field.values().iter().enumerate() {
        writeln!(w, "{:.16e},{v:.16e}", grid.node(i)).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a headed two-column numeric CSV.
pub fn read_two_columns(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(CliError::Validation(format!(
                "{}: row {} has {} columns, expected 2",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| {
                CliError::Validation(format!("{}: row {}: {s:?}: {e}", path.display(), line + 1))
            })
        };
        xs.push(parse(&record[0])?);
        ys.push(parse(&record[1])?);
    }
    Ok((xs, ys))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| CliError::io(path, e);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Validation(format!("serializing {}: {e}", path.display())))?;
    writeln!(w).map_err(io)?;
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateSeries {
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    /// `max_t |⟨K(t),b₀⟩ - ⟨K₀,b₀⟩ e^{g t}| / |⟨K₀,b₀⟩|`
    pub max_rel_error: f64,
}

impl AggregateSeries {
    pub fn new(traj: &Trajectory, g: f64) -> Self {
        let start = traj.aggregate[0];
        let max_rel_error = traj
            .times
            .iter()
            .zip(&traj.aggregate)
            .map(|(&t, &m)| (m - start * (g * t).exp()).abs() / start.abs())
            .fold(0.0, f64::max);
        Self {
            t: traj.times.clone(),
            value: traj.aggregate.clone(),
            max_rel_error,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub scenario: Scenario,
    pub regime: Regime,
    pub rho: f64,
    pub lambda0: f64,
    pub alpha: f64,
    pub g: f64,
    /// `∫ ψ b₀`, which should equal `(ρ - λ₀(1-γ)) / γ`.
    pub psi_b0_integral: f64,
    pub steps: usize,
    pub step_size: f64,
    pub min_k: f64,
    /// First step (not only snapshot) where `min K < -neg_tol`.
    pub first_negativity: Option<NegativityEvent>,
    pub negativity: NegativityReport,
    pub aggregate: AggregateSeries,
}

/// Small sidecar for plotting: the resolved parameters in flat form.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub name: String,
    pub regime: Regime,
    pub n: usize,
    pub sigma: f64,
    pub rho: f64,
    pub gamma: f64,
    pub q: f64,
    pub k_bar: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub neg_tol: f64,
    pub columns: [&'static str; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, files: &[&str]) -> Self {
        Self {
            tool: "aklab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            files: files.iter().map(|s| s.to_string()).collect(),
            notes: Vec::new(),
        }
    }
}
