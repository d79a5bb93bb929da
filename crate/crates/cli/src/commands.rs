//! Subcommand implementations. Each writes into its own output directory and
//! returns a serializable summary that `main` prints to stdout.

use std::path::{Path, PathBuf};

use aklab::certify::{l2_certificate, sup_certificate, CertificateReport, Setting};
use aklab::counterexample::{build_counterexample, WitnessSpec};
use aklab::solver::{negativity_report, simulate, simulate_sigma_zero, Trajectory};
use aklab::{Field, TorusGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{
    self, AggregateSeries, Diagnostics, Manifest, Meta, DIAGNOSTICS_FILE, MANIFEST_FILE, META_FILE,
    TRAJECTORY_FILE,
};
use crate::scenario::{Initial, Num, Regime, Scenario};
use crate::{CliError, CliResult};

pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub diagnostics: Diagnostics,
}

impl RunOutcome {
    pub fn brief(&self) -> RunBrief {
        let d = &self.diagnostics;
        RunBrief {
            name: d.scenario.name.clone(),
            regime: d.regime,
            k_bar: d.scenario.k_bar(),
            sigma: d.scenario.model.sigma.get(),
            min_k: d.min_k,
            any_negative: d.first_negativity.is_some(),
            first_negativity_time: d.first_negativity.map(|e| e.time),
            aggregate_end: *d.aggregate.value.last().expect("nonempty series"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunBrief {
    pub name: String,
    pub regime: Regime,
    pub k_bar: Option<f64>,
    pub sigma: f64,
    pub min_k: f64,
    pub any_negative: bool,
    pub first_negativity_time: Option<f64>,
    pub aggregate_end: f64,
}

/// Simulates one scenario and writes trajectory, diagnostics, meta, and manifest.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> CliResult<RunOutcome> {
    let r = scenario.resolve()?;
    let trajectory = match r.regime {
        Regime::Ode => simulate_sigma_zero(&r.params, &r.pc, &r.k0, &r.sim)?,
        Regime::Pde => simulate(&r.params, &r.eig, &r.pc, &r.k0, &r.sim)?,
    };
    let diagnostics = Diagnostics {
        scenario: scenario.clone(),
        regime: r.regime,
        rho: r.params.rho(),
        lambda0: r.eig.lambda0,
        alpha: r.pc.alpha,
        g: r.pc.g,
        psi_b0_integral: r.pc.psi.inner(&r.eig.b0)?,
        steps: r.sim.steps(),
        step_size: r.sim.step_size(),
        min_k: trajectory.global_min(),
        first_negativity: trajectory.first_negativity,
        negativity: negativity_report(&trajectory, r.sim.neg_tol),
        aggregate: AggregateSeries::new(&trajectory, r.pc.g),
    };
    let meta = Meta {
        name: scenario.name.clone(),
        regime: r.regime,
        n: r.params.grid().n(),
        sigma: r.params.sigma(),
        rho: r.params.rho(),
        gamma: r.params.gamma(),
        q: r.params.q(),
        k_bar: scenario.k_bar(),
        t_end: r.sim.t_end,
        dt: r.sim.step_size(),
        neg_tol: r.sim.neg_tol,
        columns: ["t", "theta", "K"],
    };
    output::write_trajectory(&out.join(TRAJECTORY_FILE), &trajectory)?;
    output::write_json(&out.join(DIAGNOSTICS_FILE), &diagnostics)?;
    output::write_json(&out.join(META_FILE), &meta)?;
    let files = [TRAJECTORY_FILE, DIAGNOSTICS_FILE, META_FILE];
    output::write_json(&out.join(MANIFEST_FILE), &Manifest::new("simulate", &files))?;
    Ok(RunOutcome {
        trajectory,
        diagnostics,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub name: String,
    pub regime: Regime,
    pub n: usize,
    pub rho: f64,
    pub lambda0: f64,
    pub alpha: f64,
    pub g: f64,
    pub psi_b0_integral: f64,
    pub admissibility_bound: f64,
    pub b0_min: f64,
    pub b0_max: f64,
}

pub fn eigen(scenario: &Scenario, out: &Path) -> CliResult<EigenSummary> {
    let (params, eig, pc, regime) = scenario.resolve_model()?;
    let summary = EigenSummary {
        name: scenario.name.clone(),
        regime,
        n: params.grid().n(),
        rho: params.rho(),
        lambda0: eig.lambda0,
        alpha: pc.alpha,
        g: pc.g,
        psi_b0_integral: pc.psi.inner(&eig.b0)?,
        admissibility_bound: params.admissibility_bound(eig.lambda0),
        b0_min: eig.b0.min(),
        b0_max: eig.b0.max(),
    };
    output::write_json(&out.join("eigen.json"), &summary)?;
    output::write_field(&out.join("b0.csv"), "b0", &eig.b0)?;
    output::write_field(&out.join("psi.csv"), "psi", &pc.psi)?;
    let files = ["eigen.json", "b0.csv", "psi.csv"];
    output::write_json(&out.join(MANIFEST_FILE), &Manifest::new("eigen", &files))?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Axis {
    Sigma,
    #[value(name = "k_bar")]
    #[serde(rename = "k_bar")]
    KBar,
    Rho,
    Eps,
    #[value(name = "R")]
    #[serde(rename = "R")]
    R,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Sigma => "sigma",
            Axis::KBar => "k_bar",
            Axis::Rho => "rho",
            Axis::Eps => "eps",
            Axis::R => "R",
        }
    }

    pub fn apply(self, base: &Scenario, value: f64) -> CliResult<Scenario> {
        let mut s = base.clone();
        s.name = format!("{}-{}={value}", base.name, self.name());
        match self {
            Axis::Sigma => s.model.sigma = Num::new(value),
            Axis::Rho => s.model.rho = Num::new(value),
            Axis::KBar | Axis::Eps | Axis::R => {
                let Initial::Bump(bump) = &mut s.initial else {
                    return Err(CliError::Validation(format!(
                        "sweeping {} needs a bump initial state",
                        self.name()
                    )));
                };
                let slot = match self {
                    Axis::KBar => &mut bump.k_bar,
                    Axis::Eps => &mut bump.eps,
                    _ => &mut bump.r,
                };
                *slot = Num::new(value);
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub min_k: Option<f64>,
    pub first_negativity_time: Option<f64>,
    pub aggregate_end: Option<f64>,
    pub error: Option<String>,
}

/// One run per value, in parallel, each in `out/run-<i>`; failures become rows.
pub fn sweep(base: &Scenario, axis: Axis, values: &[f64], out: &Path) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Validation("sweep needs at least one value".into()));
    }
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let run = axis
                .apply(base, value)
                .and_then(|s| run_scenario(&s, &out.join(format!("run-{i}"))));
            match run {
                Ok(outcome) => {
                    let b = outcome.brief();
                    SweepRow {
                        value,
                        min_k: Some(b.min_k),
                        first_negativity_time: b.first_negativity_time,
                        aggregate_end: Some(b.aggregate_end),
                        error: None,
                    }
                }
                Err(err) => SweepRow {
                    value,
                    min_k: None,
                    first_negativity_time: None,
                    aggregate_end: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();
    write_sweep_summary(&out.join("summary.csv"), &rows)?;
    let mut manifest = Manifest::new("sweep", &["summary.csv"]);
    manifest.files.extend((0..values.len()).map(|i| format!("run-{i}/")));
    manifest.notes.push(format!("axis = {}", axis.name()));
    output::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(rows)
}

fn write_sweep_summary(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let opt = |v: Option<f64>, missing: &str| v.map_or(missing.to_string(), |x| format!("{x:.16e}"));
    let mut text = String::from("value,min_K,first_negativity_time,aggregate_end,error\n");
    for r in rows {
        let failed = r.error.is_some();
        text.push_str(&format!(
            "{:.16e},{},{},{},{}\n",
            r.value,
            opt(r.min_k, ""),
            opt(r.first_negativity_time, if failed { "" } else { "none" }),
            opt(r.aggregate_end, ""),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        ));
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleOutput {
    pub witness: WitnessSpec,
    pub junction_residual: f64,
    pub certificate: CertificateReport,
}

pub fn counterexample(
    scenario: &Scenario,
    setting: Setting,
    delta: f64,
    big_c: f64,
    out: &Path,
) -> CliResult<CounterexampleOutput> {
    let (params, _, pc, _) = scenario.resolve_model()?;
    let (witness, certificate) = build_counterexample(setting, delta, big_c, &pc, &params)?;
    let result = CounterexampleOutput {
        junction_residual: witness.junction_residual(),
        witness,
        certificate,
    };
    output::write_json(&out.join("witness.json"), &result.witness)?;
    output::write_json(&out.join("certificate.json"), &result.certificate)?;
    output::write_field(&out.join("witness.csv"), "f", &result.witness.sample(params.grid())?)?;
    let files = ["witness.json", "certificate.json", "witness.csv"];
    output::write_json(&out.join(MANIFEST_FILE), &Manifest::new("counterexample", &files))?;
    Ok(result)
}

pub enum CertifyInput {
    /// A saved `witness.json`; setting, δ and C come from the file.
    Witness(PathBuf),
    /// Build the canonical witness.
    Build { setting: Setting, delta: f64, big_c: f64 },
    /// A `theta,f` CSV on a uniform grid `theta_i = i/n`.
    Field {
        path: PathBuf,
        setting: Setting,
        delta: f64,
        big_c: f64,
    },
}

pub fn certify(scenario: &Scenario, input: &CertifyInput, argmax_tol: f64) -> CliResult<CertificateReport> {
    match input {
        CertifyInput::Witness(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let spec: WitnessSpec = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let (params, _, pc, _) = scenario.resolve_model()?;
            Ok(spec.certify(&pc, &params, argmax_tol)?)
        }
        CertifyInput::Build {
            setting,
            delta,
            big_c,
        } => {
            let (params, _, pc, _) = scenario.resolve_model()?;
            let (spec, _) = build_counterexample(*setting, *delta, *big_c, &pc, &params)?;
            Ok(spec.certify(&pc, &params, argmax_tol)?)
        }
        CertifyInput::Field {
            path,
            setting,
            delta,
            big_c,
        } => {
            let f = read_grid_field(path)?;
            let scenario = scenario.clone().with_overrides(Some(f.len()), None, None);
            let (params, _, pc, _) = scenario.resolve_model()?;
            Ok(match setting {
                Setting::L2 => l2_certificate(&f, *big_c, *delta, &pc, &params)?,
                Setting::Sup => sup_certificate(&f, *big_c, *delta, &pc, &params, argmax_tol)?,
            })
        }
    }
}

fn read_grid_field(path: &Path) -> CliResult<Field> {
    let (theta, values) = output::read_two_columns(path)?;
    let grid = TorusGrid::new(values.len())?;
    if let Some(i) = (0..theta.len()).find(|&i| (theta[i] - grid.node(i)).abs() > 1e-9) {
        return Err(CliError::Validation(format!(
            "{}: row {} has theta = {}, expected the uniform node {}",
            path.display(),
            i + 1,
            theta[i],
            grid.node(i)
        )));
    }
    Ok(Field::new(grid, values)?)
}

pub const FIG2_NOTE: &str = "The closed-loop dynamics are linear in K, so scaling K0 by K_bar \
scales K(t) by the same factor: the sign pattern of K(t, theta) is identical for K_bar = 10 \
and K_bar = 100. The published figure's K_bar-dependent sign change is not reproduced; see \
the linearity check in this manifest.";

#[derive(Debug, Clone, Serialize)]
pub struct LinearityCheck {
    pub factor: f64,
    /// `max_t sup_θ |K_big(t) - factor · K_small(t)|`
    pub max_abs_gap: f64,
    pub max_rel_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub same_sign_pattern: bool,
}

pub fn linearity_check(small: &Trajectory, big: &Trajectory, factor: f64, tolerance: f64) -> CliResult<LinearityCheck> {
    let (mut abs, mut scale, mut same_sign) = (0.0f64, 0.0f64, true);
    if small.times != big.times {
        return Err(CliError::Validation("runs have different snapshot times".into()));
    }
    for (s, b) in small.states.iter().zip(&big.states) {
        abs = abs.max(b.sub(&s.scale(factor))?.norm_sup());
        scale = scale.max(b.norm_sup());
        same_sign &= s
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| (*x < 0.0) == (*y < 0.0));
    }
    Ok(LinearityCheck {
        factor,
        max_abs_gap: abs,
        max_rel_gap: abs / scale.max(f64::MIN_POSITIVE),
        tolerance,
        pass: abs <= tolerance,
        same_sign_pattern: same_sign,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Report {
    pub runs: Vec<RunBrief>,
    pub linearity: LinearityCheck,
    pub note: &'static str,
}

pub fn reproduce_fig2(n: Option<usize>, dt: Option<f64>, rho: Option<f64>, out: &Path) -> CliResult<Fig2Report> {
    let names = ["fig2-kbar10", "fig2-kbar100"];
    let outcomes = names
        .par_iter()
        .map(|name| {
            let s = Scenario::builtin(name)
                .expect("built-in")
                .with_overrides(n, dt, rho);
            run_scenario(&s, &out.join(name))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let linearity = linearity_check(&outcomes[0].trajectory, &outcomes[1].trajectory, 10.0, 1e-8)?;
    let report = Fig2Report {
        runs: outcomes.iter().map(RunOutcome::brief).collect(),
        linearity,
        note: FIG2_NOTE,
    };
    let mut manifest = Manifest::new("reproduce fig2", &["fig2-kbar10/", "fig2-kbar100/", "report.json"]);
    manifest.notes.push(FIG2_NOTE.into());
    output::write_json(&out.join("report.json"), &report)?;
    output::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(report)
}

pub const FIG3_SIGMAS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, Serialize)]
pub struct SigmaRun {
    pub run: RunBrief,
    /// `sup_θ |K_σ(T) - K_0(T)|`
    pub distance_to_ode: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Report {
    pub ode: RunBrief,
    pub runs: Vec<SigmaRun>,
    /// Distances decrease strictly as σ decreases.
    pub monotone: bool,
    /// The smallest-σ run has the same negativity verdict as `σ = 0`.
    pub smallest_sigma_matches_ode: bool,
}

pub fn reproduce_fig3(n: Option<usize>, dt: Option<f64>, rho: Option<f64>, out: &Path) -> CliResult<Fig3Report> {
    let base = Scenario::builtin("fig3-sigma0")
        .expect("built-in")
        .with_overrides(n, dt, rho);
    let ode = run_scenario(&base, &out.join("sigma-0"))?;
    let runs = FIG3_SIGMAS
        .par_iter()
        .map(|&sigma| {
            let mut s = Axis::Sigma.apply(&base, sigma)?;
            s.name = format!("fig3-sigma-{sigma:e}");
            let outcome = run_scenario(&s, &out.join(format!("sigma-{sigma:e}")))?;
            let distance_to_ode = outcome
                .trajectory
                .final_state()
                .sub(ode.trajectory.final_state())?
                .norm_sup();
            Ok(SigmaRun {
                run: outcome.brief(),
                distance_to_ode,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let ode = ode.brief();
    let report = Fig3Report {
        monotone: runs
            .windows(2)
            .all(|w| w[1].distance_to_ode < w[0].distance_to_ode),
        smallest_sigma_matches_ode: runs.last().expect("three runs").run.any_negative == ode.any_negative,
        ode,
        runs,
    };
    let mut files = vec!["sigma-0/".to_string()];
    files.extend(FIG3_SIGMAS.iter().map(|s| format!("sigma-{s:e}/")));
    files.push("report.json".into());
    let mut manifest = Manifest::new("reproduce fig3", &[]);
    manifest.files = files;
    output::write_json(&out.join("report.json"), &report)?;
    output::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(report)
}
