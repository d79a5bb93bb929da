//! Scenario documents: one JSON file per run.
//!
//! ```json
//! {
//!   "name": "fig2-kbar10",
//!   "model": { "sigma": "0.01", "rho": "0.03", "gamma": "0.5", "q": 1,
//!              "A": { "constant": "0.01" }, "eta": { "constant": "0.01" } },
//!   "n": 256,
//!   "initial": { "bump": { "R": 0.25, "eps": 0.1, "k_bar": 10 } },
//!   "sim": { "t_end": 1, "dt": 1e-4, "snapshot_every": 100 }
//! }
//! ```
//!
//! Numbers may be JSON numbers or decimal strings; strings are echoed back
//! verbatim so that diagnostics reproduce the input byte for byte.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use aklab::certify::Setting;
use aklab::counterexample::{build_counterexample, nonneg_witness, scaled_initial, BumpSpec, WitnessSpec};
use aklab::model::{ModelParams, PolicyConstants, DEFAULT_RHO};
use aklab::solver::{Scheme, SimConfig};
use aklab::spectral::{principal_eigenpair, EigenOptions, EigenPair};
use aklab::{Field, TorusGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{CliError, CliResult};

/// A number read from JSON or from a decimal string, remembering its spelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Num<T> {
    value: T,
    text: Option<String>,
}

impl<T: Copy> Num<T> {
    pub fn new(value: T) -> Self {
        Self { value, text: None }
    }

    pub fn get(&self) -> T {
        self.value
    }
}

impl<T: Copy> From<T> for Num<T> {
    fn from(value: T) -> Self {
        Self::new(value)
    }
}

impl<T: Serialize> Serialize for Num<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.text {
            Some(text) => s.serialize_str(text),
            None => self.value.serialize(s),
        }
    }
}

impl<'de, T> Deserialize<'de> for Num<T>
where
    T: DeserializeOwned + FromStr,
    T::Err: fmt::Display,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Value(T),
            Text(String),
        }
        match Raw::<T>::deserialize(d)? {
            Raw::Value(value) => Ok(Self { value, text: None }),
            Raw::Text(text) => {
                let value = text
                    .trim()
                    .parse::<T>()
                    .map_err(|e| serde::de::Error::custom(format!("bad number {text:?}: {e}")))?;
                Ok(Self {
                    value,
                    text: Some(text),
                })
            }
        }
    }
}

/// Spatial profile of `A` or `η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant(Num<f64>),
    /// `mean + amplitude · cos(2π(θ + phase))`
    Cosine {
        mean: Num<f64>,
        amplitude: Num<f64>,
        #[serde(default = "zero")]
        phase: Num<f64>,
    },
    /// Periodic piecewise-linear interpolation through `(theta, value)` pairs.
    Table {
        theta: Vec<Num<f64>>,
        value: Vec<Num<f64>>,
    },
}

fn zero() -> Num<f64> {
    Num::new(0.0)
}

impl Profile {
    pub fn sample(&self, grid: TorusGrid) -> CliResult<Field> {
        match self {
            Profile::Constant(c) => Ok(grid.constant(c.get())?),
            Profile::Cosine {
                mean,
                amplitude,
                phase,
            } => {
                let (m, a, p) = (mean.get(), amplitude.get(), phase.get());
                Ok(grid.sample(|t| m + a * (2.0 * PI * (t + p)).cos())?)
            }
            Profile::Table { theta, value } => {
                let theta: Vec<f64> = theta.iter().map(Num::get).collect();
                let value: Vec<f64> = value.iter().map(Num::get).collect();
                periodic_interpolate(&theta, &value, grid)
            }
        }
    }
}

/// Samples the periodic linear interpolant through `(theta, value)` on `grid`.
pub fn periodic_interpolate(theta: &[f64], value: &[f64], grid: TorusGrid) -> CliResult<Field> {
    if theta.is_empty() || theta.len() != value.len() {
        return Err(CliError::Validation(format!(
            "table needs matching nonempty theta/value columns, got {} and {}",
            theta.len(),
            value.len()
        )));
    }
    let mut pts: Vec<(f64, f64)> = theta
        .iter()
        .map(|t| t.rem_euclid(1.0))
        .zip(value.iter().copied())
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(CliError::Validation("table has repeated theta values".into()));
    }
    let m = pts.len();
    Ok(grid.sample(|t| {
        // first knot strictly after t, cyclically
        let j = pts.partition_point(|p| p.0 <= t);
        let (lo, hi) = if j == 0 || j == m {
            (pts[m - 1], (pts[0].0 + 1.0, pts[0].1))
        } else {
            (pts[j - 1], pts[j])
        };
        let t = if j == 0 { t + 1.0 } else { t };
        lo.1 + (hi.1 - lo.1) * (t - lo.0) / (hi.0 - lo.0)
    })?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: Num<f64>,
    /// Discount rate; Table 1 leaves it open, so it is always written out.
    #[serde(default = "default_rho")]
    pub rho: Num<f64>,
    pub gamma: Num<f64>,
    pub q: Num<f64>,
    #[serde(rename = "A")]
    pub a: Profile,
    pub eta: Profile,
}

fn default_rho() -> Num<f64> {
    Num::new(DEFAULT_RHO)
}

impl ModelSection {
    pub fn table1() -> Self {
        Self {
            sigma: Num::new(0.01),
            rho: default_rho(),
            gamma: Num::new(0.5),
            q: Num::new(1.0),
            a: Profile::Constant(Num::new(0.01)),
            eta: Profile::Constant(Num::new(0.01)),
        }
    }

    pub fn params(&self, grid: TorusGrid) -> CliResult<ModelParams> {
        Ok(ModelParams::new(
            self.sigma.get(),
            self.rho.get(),
            self.gamma.get(),
            self.q.get(),
            self.a.sample(grid)?,
            self.eta.sample(grid)?,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSection {
    #[serde(rename = "R")]
    pub r: Num<f64>,
    pub eps: Num<f64>,
    pub k_bar: Num<f64>,
}

impl BumpSection {
    pub fn new(r: f64, eps: f64, k_bar: f64) -> Self {
        Self {
            r: r.into(),
            eps: eps.into(),
            k_bar: k_bar.into(),
        }
    }

    pub fn spec(&self) -> CliResult<BumpSpec> {
        Ok(BumpSpec::new(self.r.get(), self.eps.get(), self.k_bar.get())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Bump(BumpSection),
    Witness {
        setting: Setting,
        delta: Num<f64>,
        big_c: Num<f64>,
    },
    NonnegWitness {
        delta: Num<f64>,
        big_c: Num<f64>,
    },
    /// CSV with a header and columns `theta,K`, interpolated periodically.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "one")]
    pub t_end: Num<f64>,
    #[serde(default = "default_dt")]
    pub dt: Num<f64>,
    #[serde(default = "default_snapshot")]
    pub snapshot_every: Num<usize>,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "zero")]
    pub neg_tol: Num<f64>,
}

fn one() -> Num<f64> {
    Num::new(1.0)
}

fn default_dt() -> Num<f64> {
    Num::new(SimConfig::default().dt)
}

fn default_snapshot() -> Num<usize> {
    Num::new(SimConfig::default().snapshot_every)
}

fn default_scheme() -> Scheme {
    Scheme::ImexCn
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            t_end: one(),
            dt: default_dt(),
            snapshot_every: default_snapshot(),
            scheme: default_scheme(),
            neg_tol: zero(),
        }
    }
}

impl SimSection {
    pub fn config(&self) -> SimConfig {
        SimConfig {
            t_end: self.t_end.get(),
            dt: self.dt.get(),
            snapshot_every: self.snapshot_every.get(),
            scheme: self.scheme,
            neg_tol: self.neg_tol.get(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelSection,
    #[serde(default = "default_n")]
    pub n: Num<usize>,
    pub initial: Initial,
    #[serde(default)]
    pub sim: SimSection,
    /// Directory used to resolve a relative `initial.file`.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_n() -> Num<usize> {
    Num::new(256)
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "table1",
    "fig2-kbar10",
    "fig2-kbar100",
    "fig3-sigma0",
    "nonneg-witness",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Finite-difference PDE integration.
    Pde,
    /// `σ = 0`: closed-form per-node ODE solution.
    Ode,
}

/// A scenario with every model quantity computed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ModelParams,
    pub eig: EigenPair,
    pub pc: PolicyConstants,
    pub k0: Field,
    pub sim: SimConfig,
    pub regime: Regime,
    /// The witness behind a `witness` or `nonneg_witness` initial state.
    pub witness: Option<WitnessSpec>,
}

impl Scenario {
    pub fn bump(name: &str, sigma: f64, k_bar: f64) -> Self {
        let mut model = ModelSection::table1();
        model.sigma = Num::new(sigma);
        Self {
            name: name.into(),
            model,
            n: default_n(),
            initial: Initial::Bump(BumpSection::new(0.25, 0.1, k_bar)),
            sim: SimSection::default(),
            base_dir: None,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "table1" | "fig2-kbar10" => Some(Self::bump(name, 0.01, 10.0)),
            "fig2-kbar100" => Some(Self::bump(name, 0.01, 100.0)),
            "fig3-sigma0" => Some(Self::bump(name, 0.0, 10.0)),
            "nonneg-witness" => Some(Self {
                initial: Initial::NonnegWitness {
                    delta: Num::new(0.1),
                    big_c: Num::new(50.0),
                },
                ..Self::bump(name, 0.01, 1.0)
            }),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut scenario = Self::from_json(&text)?;
        scenario.base_dir = path.parent().map(Path::to_path_buf);
        Ok(scenario)
    }

    /// Loads `config` if given, else the named built-in (default `table1`).
    pub fn select(config: Option<&Path>, builtin: Option<&str>) -> CliResult<Self> {
        match (config, builtin) {
            (Some(_), Some(_)) => Err(CliError::Validation(
                "give either --config or --scenario, not both".into(),
            )),
            (Some(path), None) => Self::load(path),
            (None, name) => {
                let name = name.unwrap_or("table1");
                Self::builtin(name).ok_or_else(|| {
                    CliError::Validation(format!(
                        "unknown scenario {name:?}; built-ins are {}",
                        BUILTIN_NAMES.join(", ")
                    ))
                })
            }
        }
    }

    pub fn with_overrides(mut self, n: Option<usize>, dt: Option<f64>, rho: Option<f64>) -> Self {
        if let Some(n) = n {
            self.n = Num::new(n);
        }
        if let Some(dt) = dt {
            self.sim.dt = Num::new(dt);
        }
        if let Some(rho) = rho {
            self.model.rho = Num::new(rho);
        }
        self
    }

    pub fn k_bar(&self) -> Option<f64> {
        match &self.initial {
            Initial::Bump(b) => Some(b.k_bar.get()),
            _ => None,
        }
    }

    pub fn grid(&self) -> CliResult<TorusGrid> {
        Ok(TorusGrid::new(self.n.get())?)
    }

    /// Model, eigenpair, and policy constants, without the initial state.
    pub fn resolve_model(&self) -> CliResult<(ModelParams, EigenPair, PolicyConstants, Regime)> {
        let grid = self.grid()?;
        let params = self.model.params(grid)?;
        let (eig, regime) = if params.sigma() == 0.0 {
            let (a, _) = params.constant_coefficients().ok_or_else(|| {
                CliError::Validation("sigma = 0 needs constant A and eta".into())
            })?;
            (EigenPair::constant(grid, a), Regime::Ode)
        } else {
            (principal_eigenpair(&params, EigenOptions::default())?, Regime::Pde)
        };
        let pc = PolicyConstants::new(&params, &eig)?;
        Ok((params, eig, pc, regime))
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        let (params, eig, pc, regime) = self.resolve_model()?;
        let grid = params.grid();
        let sim = self.sim.config();
        sim.validate(grid, params.sigma())?;
        let (k0, witness) = match &self.initial {
            Initial::Bump(b) => (scaled_initial(&b.spec()?, grid)?, None),
            Initial::Witness {
                setting,
                delta,
                big_c,
            } => {
                let (spec, _) = build_counterexample(*setting, delta.get(), big_c.get(), &pc, &params)?;
                (spec.sample(grid)?, Some(spec))
            }
            Initial::NonnegWitness { delta, big_c } => {
                let (spec, field) = nonneg_witness(delta.get(), big_c.get(), &pc, &params)?;
                (field, Some(spec))
            }
            Initial::File(path) => {
                let path = match &self.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let (theta, k) = crate::output::read_two_columns(&path)?;
                (periodic_interpolate(&theta, &k, grid)?, None)
            }
        };
        Ok(Resolved {
            params,
            eig,
            pc,
            k0,
            sim,
            regime,
            witness,
        })
    }
}
