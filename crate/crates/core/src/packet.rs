//! Analytic Gaussian wave packets.
//!
//! At time `t` the packet is
//! `ψ(x,t) = (m/πħ)^{1/4} λ^{-1/2} exp{ (i/ħ)[ (m/2)(λ̇/λ) x̃² + ⟨p⟩ x̃ + S(t) ] }`
//! with `x̃ = x − ⟨x⟩`, `⟨x⟩ = η`, `⟨p⟩ = mη̇` and `S` the classical action.
//! The square root `λ^{-1/2} = α^{-1/2} e^{-iφ/2}` uses the unwrapped phase,
//! so the global phase is continuous in time.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::evolution::{LambdaState, Sample, Trajectory};
use crate::grid::{Axis, Checked, ComplexGrid, Warning};
use crate::system::{validate_packet, Constants, InitialPacket};

/// Mass allowed to fall outside a sampled grid before a coverage warning.
pub const COVERAGE_LIMIT: f64 = 1e-6;

/// Second moments `⟨x̃²⟩`, `⟨p̃²⟩` and `⟨[x̃,p̃]₊⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub var_x: f64,
    pub var_p: f64,
    pub corr: f64,
}

impl Moments {
    /// `⟨x̃²⟩⟨p̃²⟩ − ¼⟨[x̃,p̃]₊⟩²`
    pub fn determinant(&self) -> f64 {
        self.var_x * self.var_p - 0.25 * self.corr * self.corr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianPacket {
    pub t: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    /// `(2ħ/m) y = λ̇/λ`
    pub y_complex: Complex64,
    /// Global prefactor: normalization times the continuous phase.
    pub norm_phase: Complex64,
    pub constants: Constants,
}

impl GaussianPacket {
    pub fn from_sample(sample: &Sample, constants: &Constants) -> Result<Self> {
        let l = &sample.lambda;
        if !(l.alpha > 0.0) || !l.alpha.is_finite() {
            return Err(Error::Singularity(format!("width parameter alpha = {} at t = {}", l.alpha, l.t)));
        }
        let (hbar, m) = (constants.hbar, constants.mass);
        let y_complex = l.lambda_dot / l.lambda;
        let amplitude = (m / (PI * hbar)).powf(0.25) / l.alpha.sqrt();
        let phase = -0.5 * l.phi + sample.classical.action / hbar;
        Ok(GaussianPacket {
            t: l.t,
            mean_x: sample.classical.eta,
            mean_p: m * sample.classical.eta_dot,
            y_complex,
            norm_phase: Complex64::from_polar(amplitude, phase),
            constants: *constants,
        })
    }

    /// The minimum-uncertainty packet at `t = 0`.
    pub fn initial(packet: &InitialPacket, constants: &Constants) -> Result<Self> {
        validate_packet(packet, constants)?;
        let a0 = packet.alpha0;
        let sample = Sample {
            lambda: LambdaState::new(0.0, Complex64::new(a0, 0.0), Complex64::new(0.0, 1.0 / a0), 0.0)?,
            classical: crate::evolution::ClassicalState {
                t: 0.0,
                eta: packet.x0,
                eta_dot: packet.p0 / constants.mass,
                action: 0.0,
            },
        };
        Self::from_sample(&sample, constants)
    }

    pub fn psi(&self, x: f64) -> Complex64 {
        let (hbar, m) = (self.constants.hbar, self.constants.mass);
        let xt = x - self.mean_x;
        let exponent = Complex64::i() / hbar * (0.5 * m * self.y_complex * xt * xt + self.mean_p * xt);
        self.norm_phase * exponent.exp()
    }

    pub fn var_x(&self) -> f64 {
        self.constants.hbar / (2.0 * self.constants.mass * self.y_complex.im)
    }

    /// Mass of `|ψ|²` outside `[lo, hi]`.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> f64 {
        let s = (2.0 * self.var_x()).sqrt();
        0.5 * erfc((self.mean_x - lo) / s) + 0.5 * erfc((hi - self.mean_x) / s)
    }
}

/// The analytic packet at sample `index` of a trajectory.
pub fn propagate_analytic(traj: &Trajectory, index: usize) -> Result<GaussianPacket> {
    let sample = traj
        .samples
        .get(index)
        .ok_or_else(|| invalid("index", format!("{index} >= {} samples", traj.samples.len())))?;
    GaussianPacket::from_sample(sample, &traj.system.constants)
}

/// Samples `ψ` on `axis`; warns when more than [`COVERAGE_LIMIT`] of the
/// probability lies outside the grid.
pub fn evaluate_wavefunction(packet: &GaussianPacket, axis: Axis) -> Checked<ComplexGrid> {
    let grid = ComplexGrid::from_fn(axis, |x| packet.psi(x));
    let lost = packet.mass_outside(axis.min, axis.max());
    let mut out = Checked::clean(grid);
    if lost > COVERAGE_LIMIT {
        out.warnings.push(Warning::Coverage {
            lost_mass: lost,
            limit: COVERAGE_LIMIT,
        });
    }
    out
}

pub fn moments_from_lambda(state: &LambdaState, c: &Constants) -> Moments {
    let (hbar, m) = (c.hbar, c.mass);
    Moments {
        var_x: hbar / (2.0 * m) * state.lambda.norm_sqr(),
        var_p: hbar * m / 2.0 * state.lambda_dot.norm_sqr(),
        corr: hbar * state.alpha_dot * state.alpha,
    }
}
