//! Invariant checks over many `(system, packet)` cases at once.

use serde::Serialize;

use crate::error::Result;
use crate::evolution::{solve_lambda, uniform_grid, IntegratorOptions};
use crate::exec::Execution;
use crate::invariants::{det_as_ermakov, ermakov_invariant, transform_matrix};
use crate::packet::moments_from_lambda;
use crate::system::{InitialPacket, SystemSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepCase {
    pub system: SystemSpec,
    pub packet: InitialPacket,
    pub t_end: f64,
    pub dt: f64,
}

/// Worst-case deviations over one trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub max_det_drift: f64,
    pub max_ermakov_rel_drift: f64,
    /// `None` unless `x₀ = 0` and `p₀ ≠ 0`.
    pub max_det_identity_error: Option<f64>,
    pub max_uncertainty_error: f64,
    pub max_p_phi_error: f64,
}

pub fn run_case(case: &SweepCase) -> Result<SweepResult> {
    let grid = uniform_grid(case.t_end, case.dt)?;
    let traj = solve_lambda(&case.system, &case.packet, &grid, IntegratorOptions { dt: case.dt })?;
    let c = &case.system.constants;
    let p = &case.packet;
    let quarter = 0.25 * c.hbar * c.hbar;
    let identity = p.x0 == 0.0 && p.p0 != 0.0;
    let first = &traj.samples[0];
    let il0 = ermakov_invariant(first.classical.eta, first.classical.eta_dot, first.lambda.alpha, first.lambda.alpha_dot)?;

    let mut out = SweepResult {
        max_det_drift: 0.0,
        max_ermakov_rel_drift: 0.0,
        max_det_identity_error: identity.then_some(0.0),
        max_uncertainty_error: 0.0,
        max_p_phi_error: 0.0,
    };
    for s in &traj.samples {
        let (l, cl) = (&s.lambda, &s.classical);
        let det = transform_matrix(l, p.alpha0).det();
        out.max_det_drift = out.max_det_drift.max((det - 1.0).abs());
        let il = ermakov_invariant(cl.eta, cl.eta_dot, l.alpha, l.alpha_dot)?;
        if il0 > 0.0 {
            out.max_ermakov_rel_drift = out.max_ermakov_rel_drift.max(((il - il0) / il0).abs());
        }
        if let Some(e) = out.max_det_identity_error.as_mut() {
            *e = e.max((det_as_ermakov(cl, l, p.alpha0, p.p0, c.mass)? - det).abs());
        }
        let m = moments_from_lambda(l, c);
        out.max_uncertainty_error = out.max_uncertainty_error.max((m.determinant() - quarter).abs());
        let p_phi = 0.5 * c.hbar * l.alpha * l.alpha * l.phi_dot;
        out.max_p_phi_error = out.max_p_phi_error.max((p_phi - 0.5 * c.hbar).abs());
    }
    Ok(out)
}

pub fn invariant_sweep(cases: &[SweepCase]) -> Vec<Result<SweepResult>> {
    invariant_sweep_with(Execution::default(), cases)
}

pub fn invariant_sweep_with(exec: Execution, cases: &[SweepCase]) -> Vec<Result<SweepResult>> {
    exec.map_slice(cases, run_case)
}
