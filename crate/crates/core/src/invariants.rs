//! Conserved quantities of the coupled classical/width dynamics.
//!
//! The transformation matrix `M = (ż −ẑ; −u̇ û)` maps `(x, p/m)` at time `t`
//! back to the scaled initial point `(x'/α₀, α₀p'/m)`. Its determinant is the
//! Wronskian of λ, and when written through `η, η̇, α, α̇` it is, up to the
//! factor `(m/α₀p₀)²`, twice the Ermakov invariant.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::evolution::{ClassicalState, LambdaState, Trajectory};
use crate::packet::Moments;
use crate::system::{omega_at, Constants, FrequencyLaw, SystemSpec};

/// Tolerance on `|det M − 1|` for matrices built from a trajectory.
pub const DET_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
    pub alpha0: f64,
    pub t: f64,
    /// False for the frozen-width construction, which is not a canonical map.
    pub canonical: bool,
}

impl TransformMatrix {
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(&self, x: f64, v: f64) -> (f64, f64) {
        (self.m11 * x + self.m12 * v, self.m21 * x + self.m22 * v)
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }
}

/// `M = (ż −ẑ; −u̇ û)` without checking its determinant.
pub fn transform_matrix(state: &LambdaState, alpha0: f64) -> TransformMatrix {
    TransformMatrix {
        m11: state.z_hat_dot(),
        m12: -state.z_hat(),
        m21: -state.u_hat_dot(),
        m22: state.u_hat(),
        alpha0,
        t: state.t,
        canonical: true,
    }
}

/// [`transform_matrix`], rejecting `|det M − 1| > DET_TOLERANCE`.
pub fn matrix_from_state(state: &LambdaState, alpha0: f64) -> Result<TransformMatrix> {
    if !(alpha0 > 0.0) {
        return Err(invalid("alpha0", "must be positive"));
    }
    let m = transform_matrix(state, alpha0);
    let det = m.det();
    if (det - 1.0).abs() > DET_TOLERANCE {
        return Err(Error::Validation(format!("det M = {det} at t = {} is not 1", state.t)));
    }
    Ok(m)
}

/// The free-motion matrix with the width held at `α₀`. Not canonical:
/// `det = 1 + (t/α₀²)²`.
pub fn frozen_width_matrix(system: &SystemSpec, alpha0: f64, t: f64) -> Result<TransformMatrix> {
    if system.frequency_law != FrequencyLaw::Free {
        return Err(Error::Capability("the frozen-width matrix is defined for free motion only".into()));
    }
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(invalid("alpha0", "must be positive"));
    }
    Ok(TransformMatrix {
        m11: 1.0 / alpha0,
        m12: -t / alpha0,
        m21: t / alpha0.powi(3),
        m22: alpha0,
        alpha0,
        t,
        canonical: false,
    })
}

pub fn frozen_width_det_expected(alpha0: f64, t: f64) -> f64 {
    1.0 + (t / (alpha0 * alpha0)).powi(2)
}

/// `I_L = ½[(η̇α − ηα̇)² + (η/α)²]`
pub fn ermakov_invariant(eta: f64, eta_dot: f64, alpha: f64, alpha_dot: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(0.5 * ((eta_dot * alpha - eta * alpha_dot).powi(2) + (eta / alpha).powi(2)))
}

fn ermakov_scale(alpha0: f64, p0: f64, mass: f64) -> Result<f64> {
    if p0 == 0.0 || !p0.is_finite() {
        return Err(Error::Singularity("the scale m/(α₀p₀) needs p₀ ≠ 0".into()));
    }
    if !(alpha0 > 0.0) {
        return Err(invalid("alpha0", "must be positive"));
    }
    Ok(mass / (alpha0 * p0))
}

/// The transformation matrix written through the classical trajectory and
/// the width, `(m/α₀p₀)·(η̇, −η; −η̇α̇α + η(α̇² + 1/α²), η̇α² − ηα̇α)`.
///
/// It coincides with [`matrix_from_state`] when `ẑ ∝ η`, i.e. for `x₀ = 0`.
pub fn ermakov_matrix(cl: &ClassicalState, st: &LambdaState, alpha0: f64, p0: f64, mass: f64) -> Result<TransformMatrix> {
    let s = ermakov_scale(alpha0, p0, mass)?;
    let (eta, v, a, ad) = (cl.eta, cl.eta_dot, st.alpha, st.alpha_dot);
    let m = TransformMatrix {
        m11: s * v,
        m12: -s * eta,
        m21: s * (-v * ad * a + eta * (ad * ad + 1.0 / (a * a))),
        m22: s * (v * a * a - eta * ad * a),
        alpha0,
        t: st.t,
        canonical: true,
    };
    Ok(m)
}

/// Determinant of [`ermakov_matrix`].
pub fn det_as_ermakov(cl: &ClassicalState, st: &LambdaState, alpha0: f64, p0: f64, mass: f64) -> Result<f64> {
    Ok(ermakov_matrix(cl, st, alpha0, p0, mass)?.det())
}

/// `(m/α₀p₀)²[(η̇α − α̇η)² + (η/α)²]` written out directly.
pub fn det_as_ermakov_closed(eta: f64, eta_dot: f64, alpha: f64, alpha_dot: f64, alpha0: f64, p0: f64, mass: f64) -> Result<f64> {
    let s = ermakov_scale(alpha0, p0, mass)?;
    Ok(s * s * 2.0 * ermakov_invariant(eta, eta_dot, alpha, alpha_dot)?)
}

/// `⟨x̃²⟩⟨p̃²⟩ − ¼⟨[x̃,p̃]₊⟩²`; equals `ħ²/4` for every state evolved here.
pub fn invariant_uncertainty_product(m: &Moments) -> f64 {
    m.determinant()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyPartition {
    pub e_cl: f64,
    pub e_tilde: f64,
}

impl EnergyPartition {
    pub fn total(&self) -> f64 {
        self.e_cl + self.e_tilde
    }
}

/// Splits `⟨H⟩` into the classical part and the fluctuation part.
pub fn energy_partition(cl: &ClassicalState, st: &LambdaState, system: &SystemSpec) -> Result<EnergyPartition> {
    let w = omega_at(system, st.t)?;
    let (hbar, m) = (system.constants.hbar, system.constants.mass);
    Ok(EnergyPartition {
        e_cl: 0.5 * m * cl.eta_dot * cl.eta_dot + 0.5 * m * w * w * cl.eta * cl.eta,
        e_tilde: 0.25 * hbar * (st.alpha_dot.powi(2) + (st.alpha * st.phi_dot).powi(2) + (w * st.alpha).powi(2)),
    })
}

/// Canonical pair `(α, p_α)`, `(φ, p_φ)` of the width dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyCanonical {
    pub alpha: f64,
    pub p_alpha: f64,
    pub phi: f64,
    pub p_phi: f64,
}

impl UncertaintyCanonical {
    pub fn from_state(st: &LambdaState, c: &Constants) -> Self {
        UncertaintyCanonical {
            alpha: st.alpha,
            p_alpha: 0.5 * c.hbar * st.alpha_dot,
            phi: st.phi,
            p_phi: 0.5 * c.hbar * st.alpha * st.alpha * st.phi_dot,
        }
    }

    /// `p_α²/ħ + p_φ²/(ħα²) + (ħ/4)ω²α²`
    pub fn hamiltonian(&self, omega: f64, c: &Constants) -> f64 {
        self.p_alpha * self.p_alpha / c.hbar
            + self.p_phi * self.p_phi / (c.hbar * self.alpha * self.alpha)
            + 0.25 * c.hbar * (omega * self.alpha).powi(2)
    }

    /// `p_φ² + (αp_α)²`, which equals `⟨x̃²⟩⟨p̃²⟩`.
    pub fn uncertainty_product(&self) -> f64 {
        self.p_phi * self.p_phi + (self.alpha * self.p_alpha).powi(2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DynamicsResiduals {
    /// `d/dt[(ħ/2)α²φ̇]`
    pub lagrangian_res_phi: f64,
    /// `α̈ + ω²α − φ̇²α`
    pub lagrangian_res_alpha: f64,
    pub p_phi: f64,
}

/// Euler–Lagrange residuals of the width Lagrangian at an interior sample,
/// using centred differences over the neighbouring samples.
pub fn uncertainty_dynamics_residuals(traj: &Trajectory, index: usize) -> Result<DynamicsResiduals> {
    let n = traj.samples.len();
    if index == 0 || index + 1 >= n {
        return Err(invalid("index", format!("{index} must be an interior sample of {n}")));
    }
    let c = &traj.system.constants;
    let (prev, cur, next) = (&traj.samples[index - 1].lambda, &traj.samples[index].lambda, &traj.samples[index + 1].lambda);
    let h = cur.t - prev.t;
    if ((next.t - cur.t) - h).abs() > 1e-9 * h {
        return Err(invalid("t_grid", "centred differences need locally uniform samples"));
    }
    let p_phi = |s: &LambdaState| UncertaintyCanonical::from_state(s, c).p_phi;
    let w = omega_at(&traj.system, cur.t)?;
    let alpha_ddot = (next.alpha - 2.0 * cur.alpha + prev.alpha) / (h * h);
    Ok(DynamicsResiduals {
        lagrangian_res_phi: (p_phi(next) - p_phi(prev)) / (2.0 * h),
        lagrangian_res_alpha: alpha_ddot + w * w * cur.alpha - cur.phi_dot * cur.phi_dot * cur.alpha,
        p_phi: p_phi(cur),
    })
}
