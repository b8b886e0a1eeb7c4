//! Scenario configs and the pipeline that runs them.
//!
//! A scenario fixes a system, an initial packet, a time grid and a spatial
//! grid, and selects which tasks to run. Running it produces a trajectory,
//! per-sample invariant records, Wigner snapshots and an [`InvariantReport`]
//! whose pass/fail flags are decided only by the chosen [`Tolerances`].

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{solve_lambda, uniform_grid, IntegratorOptions, Trajectory};
use crate::exec::Execution;
use crate::grid::{phase_aligned_l2_distance, Axis, Warning};
use crate::invariants::{
    det_as_ermakov, energy_partition, ermakov_invariant, frozen_width_det_expected, frozen_width_matrix, transform_matrix,
    uncertainty_dynamics_residuals, DET_TOLERANCE,
};
use crate::kernels::{apply_kernel_with, Direction, TdKernel, TdKernelParams};
use crate::oracle::{compare_states, grid_moments, split_step, Comparison, GridState};
use crate::packet::{evaluate_wavefunction, moments_from_lambda, propagate_analytic, GaussianPacket, Moments};
use crate::system::{validate_packet, Constants, FrequencyLaw, InitialPacket, SystemSpec};
use crate::wigner::{phase_space_axes, wigner_gaussian, wigner_numeric_with, wigner_pointmap, PhaseSpaceGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Evolve,
    Wigner,
    KernelCheck,
    Invariants,
    OracleCompare,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub sample_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridConfig {
    pub fn axis(&self) -> Result<Axis> {
        Axis::span(self.x_min, self.x_max, self.n_points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpaceConfig {
    pub nx: usize,
    pub np: usize,
    pub span_sigmas: f64,
}

impl Default for PhaseSpaceConfig {
    fn default() -> Self {
        PhaseSpaceConfig {
            nx: 256,
            np: 256,
            span_sigmas: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "custom")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub constants: Constants,
    pub system: FrequencyLaw,
    pub packet: InitialPacket,
    pub time: TimeConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub phase_space_grid: PhaseSpaceConfig,
    /// Times at which grids are sampled; clipped to `[0, t_end]` and snapped
    /// to the time grid. Defaults to `[0, 1]`.
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Step of the split-operator oracle; defaults to `time.dt`.
    #[serde(default)]
    pub oracle_dt: Option<f64>,
    /// Also evaluate the frozen-width matrix (free motion only).
    #[serde(default)]
    pub frozen_width_diagnostic: bool,
}

fn custom() -> String {
    "custom".into()
}

impl ScenarioConfig {
    /// Parses and validates a JSON config. Errors carry the line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        SystemSpec::new(self.constants, self.system.clone())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |field: &str, msg: String| Error::Config(format!("{field}: {msg}"));
        let t = &self.time;
        if !(t.t_end.is_finite() && t.t_end > 0.0) {
            return Err(cfg("time.t_end", format!("must be positive, got {}", t.t_end)));
        }
        if !(t.dt.is_finite() && t.dt > 0.0 && t.dt <= t.t_end) {
            return Err(cfg("time.dt", format!("must be in (0, t_end], got {}", t.dt)));
        }
        if t.sample_every == 0 {
            return Err(cfg("time.sample_every", "must be at least 1".into()));
        }
        let g = &self.grid;
        if g.n_points < 64 || !g.n_points.is_power_of_two() {
            return Err(cfg("grid.n_points", format!("must be a power of two >= 64, got {}", g.n_points)));
        }
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max > g.x_min) {
            return Err(cfg("grid", format!("need x_min < x_max, got [{}, {}]", g.x_min, g.x_max)));
        }
        let ps = &self.phase_space_grid;
        if ps.nx < 2 || ps.np < 2 {
            return Err(cfg("phase_space_grid", "nx and np must be at least 2".into()));
        }
        if !(ps.span_sigmas.is_finite() && ps.span_sigmas > 0.0) {
            return Err(cfg("phase_space_grid.span_sigmas", "must be positive".into()));
        }
        if self.tasks.is_empty() {
            return Err(cfg("tasks", "must not be empty".into()));
        }
        if let Some(dt) = self.oracle_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(cfg("oracle_dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(ts) = &self.snapshot_times {
            if ts.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(cfg("snapshot_times", "must be finite and non-negative".into()));
            }
        }
        if self.frozen_width_diagnostic && self.system != FrequencyLaw::Free {
            return Err(Error::Capability("frozen_width_diagnostic needs a free system".into()));
        }
        self.constants.validate().map_err(|e| cfg("constants", e.to_string()))?;
        self.system.validate().map_err(|e| cfg("system", e.to_string()))?;
        validate_packet(&self.packet, &self.constants).map_err(|e| cfg("packet", e.to_string()))?;
        Ok(())
    }

    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    /// Snapshot sample indices, ascending and unique.
    pub fn snapshot_indices(&self) -> Vec<usize> {
        let times = self.snapshot_times.clone().unwrap_or_else(|| vec![0.0, 1.0]);
        let n = (self.time.t_end / self.time.dt).round() as usize;
        let mut idx: Vec<usize> = times
            .iter()
            .filter(|t| **t <= self.time.t_end + 0.5 * self.time.dt)
            .map(|t| ((t / self.time.dt).round() as usize).min(n))
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

const BUILTINS: &[(&str, &str)] = &[
    ("free-spread", include_str!("../scenarios/free-spread.json")),
    ("ho-constant-width", include_str!("../scenarios/ho-constant-width.json")),
    ("ho-breathing", include_str!("../scenarios/ho-breathing.json")),
    ("omega-ramp", include_str!("../scenarios/omega-ramp.json")),
    ("omega-modulated", include_str!("../scenarios/omega-modulated.json")),
    ("frozen-width-demo", include_str!("../scenarios/frozen-width-demo.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

pub fn builtin_json(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, j)| *j)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let text = builtin_json(name)
        .ok_or_else(|| Error::Config(format!("unknown scenario `{name}`; known: {}", builtin_names().join(", "))))?;
    ScenarioConfig::from_json(text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceProfile {
    #[default]
    Default,
    Strict,
}

impl FromStr for ToleranceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(ToleranceProfile::Default),
            "strict" => Ok(ToleranceProfile::Strict),
            other => Err(Error::Config(format!("unknown tolerance profile `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub det_drift: f64,
    pub ermakov_rel_drift: f64,
    pub det_identity: f64,
    pub uncertainty: f64,
    pub p_phi: f64,
    /// On `|residual| / (1 + φ̇²α)`, which is `O(dt²)`.
    pub width_residual: f64,
    pub frozen_det: f64,
    pub kernel_l2: f64,
    pub oracle_l2: f64,
    pub oracle_moments: f64,
    pub wigner_max_abs: f64,
    pub wigner_marginal: f64,
}

impl Tolerances {
    pub fn for_profile(profile: ToleranceProfile) -> Self {
        let base = Tolerances {
            det_drift: 1e-9,
            ermakov_rel_drift: 1e-8,
            det_identity: 1e-9,
            uncertainty: 1e-10,
            p_phi: 1e-10,
            width_residual: 1e-5,
            frozen_det: 1e-12,
            kernel_l2: 1e-5,
            oracle_l2: 1e-5,
            oracle_moments: 1e-6,
            wigner_max_abs: 1e-5,
            wigner_marginal: 1e-5,
        };
        match profile {
            ToleranceProfile::Default => base,
            ToleranceProfile::Strict => Tolerances {
                det_drift: base.det_drift / 10.0,
                ermakov_rel_drift: base.ermakov_rel_drift / 10.0,
                det_identity: base.det_identity / 10.0,
                uncertainty: base.uncertainty / 10.0,
                p_phi: base.p_phi / 10.0,
                width_residual: base.width_residual / 10.0,
                frozen_det: base.frozen_det / 10.0,
                kernel_l2: base.kernel_l2 / 10.0,
                oracle_l2: base.oracle_l2 / 10.0,
                oracle_moments: base.oracle_moments / 10.0,
                wigner_max_abs: base.wigner_max_abs / 10.0,
                wigner_marginal: base.wigner_marginal / 10.0,
            },
        }
    }
}

/// One row of the trajectory table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Record {
    pub t: f64,
    pub eta: f64,
    pub eta_dot: f64,
    pub alpha: f64,
    pub alpha_dot: f64,
    pub phi: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub corr: f64,
    pub det_m: f64,
    pub i_l: f64,
    pub p_phi: f64,
    pub invariant_uncertainty_product: f64,
    pub e_cl: f64,
    pub e_tilde: f64,
    /// `2(m/α₀p₀)² I_L`; only defined for `x₀ = 0`, `p₀ ≠ 0`.
    pub det_as_ermakov: Option<f64>,
    pub residual_phi: Option<f64>,
    pub residual_alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub max_det_drift: f64,
    pub max_ermakov_rel_drift: f64,
    pub max_det_identity_error: Option<f64>,
    pub max_uncertainty_error: f64,
    pub max_p_phi_error: f64,
    pub max_residual_phi: f64,
    pub max_residual_alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrozenSample {
    pub t: f64,
    pub det: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrozenWidthReport {
    pub label: &'static str,
    pub canonical: bool,
    pub alpha0: f64,
    pub det_at_t1: Option<f64>,
    pub samples: Vec<FrozenSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WignerSummary {
    pub peak: f64,
    pub min: f64,
    pub max_abs_vs_closed_form: f64,
    pub max_abs_vs_pointmap: f64,
    pub marginal_x_error: f64,
    pub marginal_p_error: f64,
    pub normalization_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SnapshotReport {
    pub id: usize,
    pub t: f64,
    pub kernel_vs_analytic_l2: Option<f64>,
    pub oracle_vs_analytic: Option<Comparison>,
    pub oracle_vs_lambda_moments: Option<f64>,
    pub oracle_vs_kernel_l2: Option<f64>,
    pub wigner: Option<WignerSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportWarning {
    pub context: String,
    pub warning: Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub scenario: String,
    pub tolerance_profile: ToleranceProfile,
    pub tolerances: Tolerances,
    pub passed: bool,
    pub summary: Summary,
    pub checks: Vec<Check>,
    pub frozen_width: Option<FrozenWidthReport>,
    pub snapshots: Vec<SnapshotReport>,
    pub warnings: Vec<ReportWarning>,
    pub records: Vec<Record>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerSnapshot {
    pub id: usize,
    pub t: f64,
    pub grid: PhaseSpaceGrid,
}

#[derive(Clone, Debug)]
pub struct ScenarioResults {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    pub report: InvariantReport,
    pub wigner: Vec<WignerSnapshot>,
}

pub fn run_scenario(config: &ScenarioConfig, profile: ToleranceProfile) -> Result<ScenarioResults> {
    run_scenario_with(Execution::default(), config, profile)
}

pub fn run_scenario_with(exec: Execution, config: &ScenarioConfig, profile: ToleranceProfile) -> Result<ScenarioResults> {
    config.validate()?;
    let tol = Tolerances::for_profile(profile);
    let system = config.system_spec()?;
    let packet = config.packet;
    let c = config.constants;
    let dt = config.time.dt;
    let grid = uniform_grid(config.time.t_end, dt)?;
    let traj = solve_lambda(&system, &packet, &grid, IntegratorOptions { dt })?;

    let records = build_records(&traj, config.time.sample_every)?;
    let summary = summarize(&records, &c);
    let mut checks = Vec::new();
    if config.has(Task::Invariants) {
        checks.push(Check::new("det_M_drift", summary.max_det_drift, tol.det_drift));
        checks.push(Check::new("ermakov_relative_drift", summary.max_ermakov_rel_drift, tol.ermakov_rel_drift));
        if let Some(e) = summary.max_det_identity_error {
            checks.push(Check::new("det_M_vs_ermakov", e, tol.det_identity));
        }
        checks.push(Check::new("uncertainty_product", summary.max_uncertainty_error, tol.uncertainty));
        checks.push(Check::new("p_phi", summary.max_p_phi_error, tol.p_phi));
        checks.push(Check::new("width_residual_phi", summary.max_residual_phi, tol.width_residual));
        checks.push(Check::new("width_residual_alpha", summary.max_residual_alpha, tol.width_residual));
    }

    let frozen_width = if config.frozen_width_diagnostic {
        let fw = frozen_report(&system, packet.alpha0, &records, config.time.t_end)?;
        let worst = fw.samples.iter().map(|s| (s.det / s.expected - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::new("frozen_width_det_relative", worst, tol.frozen_det));
        Some(fw)
    } else {
        None
    };

    let mut warnings = Vec::new();
    let mut snapshots = Vec::new();
    let mut wigner = Vec::new();
    let needs_grids = config.has(Task::Wigner) || config.has(Task::KernelCheck) || config.has(Task::OracleCompare);
    if needs_grids {
        let axis = config.grid.axis()?;
        let initial = GaussianPacket::initial(&packet, &c)?;
        let psi0 = evaluate_wavefunction(&initial, axis);
        for w in &psi0.warnings {
            warnings.push(ReportWarning { context: "initial packet".into(), warning: w.clone() });
        }
        let psi0 = psi0.value;
        let oracle_dt = config.oracle_dt.unwrap_or(dt);
        let mut oracle_state = GridState { grid: psi0.clone(), t: 0.0 };
        let (v0x, v0p) = validate_packet(&packet, &c)?;
        let w0 = wigner_gaussian(Moments { var_x: v0x, var_p: v0p, corr: 0.0 }, packet.x0, packet.p0, &c)?;

        for (id, index) in config.snapshot_indices().into_iter().enumerate() {
            let sample = &traj.samples[index];
            let t = sample.t();
            let ctx = format!("snapshot {id} (t = {t})");
            let mut snap = SnapshotReport { id, t, ..Default::default() };
            let analytic = evaluate_wavefunction(&propagate_analytic(&traj, index)?, axis);
            for w in &analytic.warnings {
                warnings.push(ReportWarning { context: format!("{ctx}: analytic packet"), warning: w.clone() });
            }
            let analytic = analytic.value;
            let moments = moments_from_lambda(&sample.lambda, &c);
            let (mean_x, mean_p) = (sample.classical.eta, c.mass * sample.classical.eta_dot);

            let mut kernel_state = None;
            if config.has(Task::KernelCheck) && index > 0 {
                let params = TdKernelParams::from_state(&sample.lambda, packet.alpha0, Direction::Forward)?;
                let kernel = TdKernel::new(params, c)?;
                let out = apply_kernel_with(exec, &kernel, &psi0, axis);
                for w in &out.warnings {
                    warnings.push(ReportWarning { context: format!("{ctx}: kernel"), warning: w.clone() });
                }
                let (d, _) = phase_aligned_l2_distance(&out.value, &analytic)?;
                snap.kernel_vs_analytic_l2 = Some(d);
                checks.push(Check::new(format!("kernel_vs_analytic[t={t}]"), d, tol.kernel_l2));
                kernel_state = Some(out.value);
            }

            if config.has(Task::OracleCompare) {
                let gap = t - oracle_state.t;
                let steps = (gap / oracle_dt).round() as usize;
                if (steps as f64 * oracle_dt - gap).abs() > 1e-9 * t.max(1.0) {
                    return Err(Error::Config(format!("oracle_dt = {oracle_dt} does not divide the snapshot interval {gap}")));
                }
                let out = split_step(&oracle_state, &system, oracle_dt, steps)?;
                for w in &out.warnings {
                    warnings.push(ReportWarning { context: format!("{ctx}: oracle"), warning: w.clone() });
                }
                oracle_state = GridState { grid: out.value.grid, t };
                let cmp = compare_states(&oracle_state.grid, &analytic, &c)?;
                let q = grid_moments(&oracle_state.grid, &c);
                let lam = [
                    (q.mean_x - mean_x).abs(),
                    (q.mean_p - mean_p).abs(),
                    (q.moments.var_x - moments.var_x).abs(),
                    (q.moments.var_p - moments.var_p).abs(),
                    (q.moments.corr - moments.corr).abs(),
                ]
                .into_iter()
                .fold(0.0, f64::max);
                checks.push(Check::new(format!("oracle_vs_analytic[t={t}]"), cmp.phase_aligned_l2, tol.oracle_l2));
                checks.push(Check::new(format!("oracle_moments[t={t}]"), lam, tol.oracle_moments));
                snap.oracle_vs_analytic = Some(cmp);
                snap.oracle_vs_lambda_moments = Some(lam);
                if let Some(k) = &kernel_state {
                    let (d, _) = phase_aligned_l2_distance(&oracle_state.grid, k)?;
                    checks.push(Check::new(format!("oracle_vs_kernel[t={t}]"), d, tol.kernel_l2));
                    snap.oracle_vs_kernel_l2 = Some(d);
                }
            }

            if config.has(Task::Wigner) {
                let ps = &config.phase_space_grid;
                let (xa, pa) = phase_space_axes(mean_x, mean_p, &moments, ps.nx, ps.np, ps.span_sigmas)?;
                let num = wigner_numeric_with(exec, &analytic, xa, pa, &c)?;
                for w in &num.warnings {
                    warnings.push(ReportWarning { context: format!("{ctx}: wigner"), warning: w.clone() });
                }
                let num = num.value;
                let closed = wigner_gaussian(moments, mean_x, mean_p, &c)?;
                let matrix = transform_matrix(&sample.lambda, packet.alpha0);
                if (matrix.det() - 1.0).abs() > DET_TOLERANCE {
                    return Err(Error::Validation(format!("det M = {} at t = {t}", matrix.det())));
                }
                let transported = PhaseSpaceGrid::from_fn_with(exec, xa, pa, |x, p| {
                    wigner_pointmap(|x, p| w0.eval(x, p), &matrix, &c, x, p).expect("matrix checked above")
                });
                let s = summarize_wigner(&num, &closed.sample(xa, pa), &transported, &moments, mean_x, mean_p)?;
                checks.push(Check::new(format!("wigner_vs_closed_form[t={t}]"), s.max_abs_vs_closed_form, tol.wigner_max_abs));
                checks.push(Check::new(format!("wigner_vs_pointmap[t={t}]"), s.max_abs_vs_pointmap, tol.wigner_max_abs));
                checks.push(Check::new(
                    format!("wigner_marginals[t={t}]"),
                    s.marginal_x_error.max(s.marginal_p_error),
                    tol.wigner_marginal,
                ));
                checks.push(Check::new(format!("wigner_normalization[t={t}]"), s.normalization_error, tol.wigner_marginal));
                snap.wigner = Some(s);
                wigner.push(WignerSnapshot { id, t, grid: num });
            }
            snapshots.push(snap);
        }
    }

    let report = InvariantReport {
        scenario: config.name.clone(),
        tolerance_profile: profile,
        tolerances: tol,
        passed: checks.iter().all(|c| c.passed),
        summary,
        checks,
        frozen_width,
        snapshots,
        warnings,
        records,
    };
    Ok(ScenarioResults {
        config: config.clone(),
        trajectory: traj,
        report,
        wigner,
    })
}

fn build_records(traj: &Trajectory, every: usize) -> Result<Vec<Record>> {
    let c = &traj.system.constants;
    let p = &traj.packet;
    let identity = p.x0 == 0.0 && p.p0 != 0.0;
    let n = traj.samples.len();
    (0..n)
        .step_by(every)
        .map(|i| {
            let s = &traj.samples[i];
            let (l, cl) = (&s.lambda, &s.classical);
            let m = moments_from_lambda(l, c);
            let e = energy_partition(cl, l, &traj.system)?;
            let (residual_phi, residual_alpha) = if i > 0 && i + 1 < n {
                let r = uncertainty_dynamics_residuals(traj, i)?;
                let scale = 1.0 + l.phi_dot * l.phi_dot * l.alpha;
                (Some(r.lagrangian_res_phi), Some(r.lagrangian_res_alpha / scale))
            } else {
                (None, None)
            };
            Ok(Record {
                t: s.t(),
                eta: cl.eta,
                eta_dot: cl.eta_dot,
                alpha: l.alpha,
                alpha_dot: l.alpha_dot,
                phi: l.phi,
                var_x: m.var_x,
                var_p: m.var_p,
                corr: m.corr,
                det_m: transform_matrix(l, p.alpha0).det(),
                i_l: ermakov_invariant(cl.eta, cl.eta_dot, l.alpha, l.alpha_dot)?,
                p_phi: 0.5 * c.hbar * l.alpha * l.alpha * l.phi_dot,
                invariant_uncertainty_product: m.determinant(),
                e_cl: e.e_cl,
                e_tilde: e.e_tilde,
                det_as_ermakov: if identity { Some(det_as_ermakov(cl, l, p.alpha0, p.p0, c.mass)?) } else { None },
                residual_phi,
                residual_alpha,
            })
        })
        .collect()
}

fn summarize(records: &[Record], c: &Constants) -> Summary {
    let quarter = 0.25 * c.hbar * c.hbar;
    let il0 = records[0].i_l;
    let mut s = Summary {
        max_det_identity_error: records[0].det_as_ermakov.map(|_| 0.0),
        ..Default::default()
    };
    for r in records {
        s.max_det_drift = s.max_det_drift.max((r.det_m - 1.0).abs());
        if il0 > 0.0 {
            s.max_ermakov_rel_drift = s.max_ermakov_rel_drift.max(((r.i_l - il0) / il0).abs());
        }
        if let (Some(e), Some(d)) = (s.max_det_identity_error.as_mut(), r.det_as_ermakov) {
            *e = e.max((d - r.det_m).abs());
        }
        s.max_uncertainty_error = s.max_uncertainty_error.max((r.invariant_uncertainty_product - quarter).abs());
        s.max_p_phi_error = s.max_p_phi_error.max((r.p_phi - 0.5 * c.hbar).abs());
        s.max_residual_phi = s.max_residual_phi.max(r.residual_phi.map_or(0.0, f64::abs));
        s.max_residual_alpha = s.max_residual_alpha.max(r.residual_alpha.map_or(0.0, f64::abs));
    }
    s
}

fn frozen_report(system: &SystemSpec, alpha0: f64, records: &[Record], t_end: f64) -> Result<FrozenWidthReport> {
    let samples = records
        .iter()
        .map(|r| {
            Ok(FrozenSample {
                t: r.t,
                det: frozen_width_matrix(system, alpha0, r.t)?.det(),
                expected: frozen_width_det_expected(alpha0, r.t),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let det_at_t1 = if t_end >= 1.0 { Some(frozen_width_matrix(system, alpha0, 1.0)?.det()) } else { None };
    Ok(FrozenWidthReport {
        label: "NON-CANONICAL",
        canonical: false,
        alpha0,
        det_at_t1,
        samples,
    })
}

fn gaussian_density(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn summarize_wigner(
    num: &PhaseSpaceGrid,
    closed: &PhaseSpaceGrid,
    transported: &PhaseSpaceGrid,
    m: &Moments,
    mean_x: f64,
    mean_p: f64,
) -> Result<WignerSummary> {
    let mx = num.marginal_x();
    let mp = num.marginal_p();
    let marginal_x_error = mx
        .iter()
        .enumerate()
        .map(|(i, v)| (v - gaussian_density(num.x.point(i), mean_x, m.var_x)).abs())
        .fold(0.0, f64::max);
    let marginal_p_error = mp
        .iter()
        .enumerate()
        .map(|(j, v)| (v - gaussian_density(num.p.point(j), mean_p, m.var_p)).abs())
        .fold(0.0, f64::max);
    Ok(WignerSummary {
        peak: num.max(),
        min: num.min(),
        max_abs_vs_closed_form: num.max_abs_diff(closed)?,
        max_abs_vs_pointmap: num.max_abs_diff(transported)?,
        marginal_x_error,
        marginal_p_error,
        normalization_error: (num.integral() - 1.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_validate() {
        for name in builtin_names() {
            let cfg = builtin(name).unwrap();
            assert_eq!(cfg.name, name);
            assert_eq!(cfg.packet.x0, 0.0);
            assert_eq!(cfg.snapshot_indices(), vec![0, 1000]);
        }
        assert!(matches!(builtin("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn config_errors_name_the_problem() {
        let base = builtin_json("free-spread").unwrap();
        let e = ScenarioConfig::from_json(&base.replace("\"n_points\": 1024", "\"n_points\": 1000")).unwrap_err();
        assert!(e.to_string().contains("grid.n_points"));
        let e = ScenarioConfig::from_json(&base.replace("\"sample_every\"", "\"sample_evry\"")).unwrap_err();
        assert!(e.to_string().contains("line 19"), "{e}");
        let e = ScenarioConfig::from_json(&base.replace("\"t_end\": 10.0", "\"t_end\": -1.0")).unwrap_err();
        assert!(e.to_string().contains("time.t_end"));
        let no_tasks = serde_json::from_str::<serde_json::Value>(base).map(|mut v| {
            v["tasks"] = serde_json::json!([]);
            v.to_string()
        });
        assert!(ScenarioConfig::from_json(&no_tasks.unwrap()).is_err());
        let ho = builtin_json("ho-constant-width").unwrap().replace("\"tasks\"", "\"frozen_width_diagnostic\": true, \"tasks\"");
        assert!(matches!(ScenarioConfig::from_json(&ho), Err(Error::Capability(_))));
    }

    #[test]
    fn config_round_trips() {
        let cfg = builtin("omega-ramp").unwrap();
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    fn quick(name: &str, tasks: Vec<Task>) -> ScenarioConfig {
        let mut cfg = builtin(name).unwrap();
        cfg.time.t_end = 2.0;
        cfg.grid.n_points = 512;
        cfg.phase_space_grid = PhaseSpaceConfig { nx: 64, np: 64, span_sigmas: 8.0 };
        cfg.tasks = tasks;
        cfg
    }

    #[test]
    fn free_spread_records() {
        let r = run_scenario(&quick("free-spread", vec![Task::Evolve, Task::Invariants]), ToleranceProfile::Default).unwrap();
        let rec = &r.report.records;
        assert_eq!(rec.len(), 21);
        assert_eq!(rec[0].var_x, 0.5);
        assert_eq!(rec[0].corr, 0.0);
        assert!((rec[10].t - 1.0).abs() < 1e-15);
        assert!((rec[10].var_x / rec[0].var_x - 2.0).abs() < 1e-9);
        assert!((rec[10].var_p - 0.5).abs() < 1e-12);
        assert!((rec[10].corr - 1.0).abs() < 1e-9);
        assert!(r.report.passed, "{:?}", r.report.checks);
        assert!(r.report.snapshots.is_empty());
    }

    #[test]
    fn full_pipeline_passes() {
        let all = vec![Task::Evolve, Task::Wigner, Task::KernelCheck, Task::Invariants, Task::OracleCompare];
        for name in ["ho-breathing", "frozen-width-demo"] {
            let r = run_scenario(&quick(name, all.clone()), ToleranceProfile::Default).unwrap();
            assert!(r.report.passed, "{name}: {:#?}", r.report.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
            assert_eq!(r.wigner.len(), 2);
            assert!((r.wigner[0].grid.max() - 1.0 / std::f64::consts::PI).abs() < 1e-9);
            assert!(r.report.snapshots[0].kernel_vs_analytic_l2.is_none());
            assert!(r.report.snapshots[1].kernel_vs_analytic_l2.is_some());
        }
        let fw = run_scenario(&quick("frozen-width-demo", vec![Task::Evolve]), ToleranceProfile::Default).unwrap();
        let fw = fw.report.frozen_width.unwrap();
        assert_eq!(fw.det_at_t1, Some(2.0));
        assert_eq!(fw.label, "NON-CANONICAL");
    }

    #[test]
    fn delta_limit_surfaces_as_error() {
        let mut cfg = quick("ho-constant-width", vec![Task::KernelCheck]);
        cfg.time.dt = std::f64::consts::PI / 1000.0;
        cfg.time.t_end = std::f64::consts::PI;
        cfg.snapshot_times = Some(vec![std::f64::consts::PI]);
        assert!(matches!(run_scenario(&cfg, ToleranceProfile::Default), Err(Error::DeltaLimit { .. })));
    }

    #[test]
    fn offset_packet_skips_identity() {
        let mut cfg = quick("ho-breathing", vec![Task::Invariants]);
        cfg.packet.x0 = 0.5;
        let r = run_scenario(&cfg, ToleranceProfile::Default).unwrap();
        assert!(r.report.summary.max_det_identity_error.is_none());
        assert!(r.report.records.iter().all(|r| r.det_as_ermakov.is_none()));
        assert!(r.report.passed);
    }
}
