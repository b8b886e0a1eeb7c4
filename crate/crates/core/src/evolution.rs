//! Integration of the complex Newtonian equation `λ̈ + ω²(t)λ = 0` together
//! with the classical trajectory `η̈ + ω²(t)η = 0`.
//!
//! `λ = û + iẑ` starts from `λ(0) = α₀`, `λ̇(0) = i/α₀`, which fixes the
//! Wronskian `żû − u̇ẑ` to 1 and reproduces the minimum-uncertainty packet at
//! `t = 0`. The polar phase `φ` is obtained by integrating `φ̇ = 1/α²`
//! alongside the state, so it is continuous across branch cuts of `arg λ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::system::{omega_at, FrequencyLaw, InitialPacket, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaState {
    pub t: f64,
    pub lambda: Complex64,
    pub lambda_dot: Complex64,
    pub alpha: f64,
    pub alpha_dot: f64,
    /// Unwrapped phase of `λ`.
    pub phi: f64,
    pub phi_dot: f64,
}

impl LambdaState {
    pub fn new(t: f64, lambda: Complex64, lambda_dot: Complex64, phi: f64) -> Result<Self> {
        let alpha = lambda.norm();
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Singularity(format!("|lambda| = {alpha} at t = {t}")));
        }
        let cross = lambda.conj() * lambda_dot;
        Ok(LambdaState {
            t,
            lambda,
            lambda_dot,
            alpha,
            alpha_dot: cross.re / alpha,
            phi,
            phi_dot: cross.im / (alpha * alpha),
        })
    }

    pub fn u_hat(&self) -> f64 {
        self.lambda.re
    }

    pub fn z_hat(&self) -> f64 {
        self.lambda.im
    }

    pub fn u_hat_dot(&self) -> f64 {
        self.lambda_dot.re
    }

    pub fn z_hat_dot(&self) -> f64 {
        self.lambda_dot.im
    }

    /// `żû − u̇ẑ`; equal to 1 along every exact solution.
    pub fn wronskian(&self) -> f64 {
        self.z_hat_dot() * self.u_hat() - self.u_hat_dot() * self.z_hat()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassicalState {
    pub t: f64,
    pub eta: f64,
    pub eta_dot: f64,
    /// Classical action `∫ L dt` accumulated from `t = 0`; carries the
    /// dynamical phase of the packet.
    pub action: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub lambda: LambdaState,
    pub classical: ClassicalState,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.lambda.t
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub system: SystemSpec,
    pub packet: InitialPacket,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(Sample::t)
    }

    /// Largest `|żû − u̇ẑ − 1|` over the samples.
    pub fn max_wronskian_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.lambda.wronskian() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    /// Upper bound on the RK4 step; gaps in the time grid are split into
    /// equal substeps no longer than this.
    pub dt: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions { dt: 1e-3 }
    }
}

/// `[0, dt, 2dt, …, n·dt]` with `n = round(t_end/dt)`.
pub fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(invalid("t_end", format!("must be finite and >= 0, got {t_end}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let n = (t_end / dt).round() as usize;
    Ok((0..=n).map(|i| i as f64 * dt).collect())
}

const DIM: usize = 8;
type State = [f64; DIM];

// Layout: Re λ, Im λ, Re λ̇, Im λ̇, η, η̇, φ, S
fn rhs(y: &State, omega: f64, mass: f64) -> State {
    let w2 = omega * omega;
    let a2 = y[0] * y[0] + y[1] * y[1];
    [
        y[2],
        y[3],
        -w2 * y[0],
        -w2 * y[1],
        y[5],
        -w2 * y[4],
        1.0 / a2,
        0.5 * mass * (y[5] * y[5] - w2 * y[4] * y[4]),
    ]
}

fn axpy(y: &State, h: f64, k: &State) -> State {
    let mut out = *y;
    for i in 0..DIM {
        out[i] += h * k[i];
    }
    out
}

fn rk4_step(system: &SystemSpec, y: &State, t: f64, t_next: f64) -> Result<State> {
    let h = t_next - t;
    let m = system.constants.mass;
    let w0 = omega_at(system, t)?;
    let wm = omega_at(system, t + 0.5 * h)?;
    let w1 = omega_at(system, t_next)?;
    let k1 = rhs(y, w0, m);
    let k2 = rhs(&axpy(y, 0.5 * h, &k1), wm, m);
    let k3 = rhs(&axpy(y, 0.5 * h, &k2), wm, m);
    let k4 = rhs(&axpy(y, h, &k3), w1, m);
    let mut out = *y;
    for i in 0..DIM {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { t: t_next });
    }
    Ok(out)
}

fn to_sample(y: &State, t: f64) -> Result<Sample> {
    let lambda = LambdaState::new(t, Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]), y[6])?;
    Ok(Sample {
        lambda,
        classical: ClassicalState {
            t,
            eta: y[4],
            eta_dot: y[5],
            action: y[7],
        },
    })
}

/// Integrates λ, η, φ and the classical action over `t_grid` with the
/// classic fourth-order Runge–Kutta scheme.
pub fn solve_lambda(
    system: &SystemSpec,
    packet: &InitialPacket,
    t_grid: &[f64],
    opts: IntegratorOptions,
) -> Result<Trajectory> {
    packet.validate()?;
    if !(opts.dt.is_finite() && opts.dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {}", opts.dt)));
    }
    if t_grid.first() != Some(&0.0) {
        return Err(invalid("t_grid", "must be non-empty and start at 0"));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("t_grid", "must be finite and strictly increasing"));
    }
    if let FrequencyLaw::Tabulated { points } = &system.frequency_law {
        let last = *t_grid.last().unwrap();
        let (start, end) = (points[0].0, points[points.len() - 1].0);
        if start > 0.0 || end < last {
            return Err(Error::OutOfRange { t: if start > 0.0 { 0.0 } else { last }, start, end });
        }
    }

    let a0 = packet.alpha0;
    let mut y: State = [a0, 0.0, 0.0, 1.0 / a0, packet.x0, packet.p0 / system.constants.mass, 0.0, 0.0];
    let mut samples = Vec::with_capacity(t_grid.len());
    samples.push(to_sample(&y, 0.0)?);
    for w in t_grid.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let n = ((tb - ta) / opts.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (tb - ta) / n as f64;
        let mut t = ta;
        for j in 1..=n {
            let t_next = if j == n { tb } else { ta + j as f64 * h };
            y = rk4_step(system, &y, t, t_next)?;
            t = t_next;
        }
        samples.push(to_sample(&y, tb)?);
    }
    Ok(Trajectory {
        system: system.clone(),
        packet: *packet,
        samples,
    })
}

/// Exact λ(t) for `Free` and `ConstantOmega`.
pub fn closed_form_lambda(system: &SystemSpec, packet: &InitialPacket, t: f64) -> Result<LambdaState> {
    let omega = constant_omega(system)?;
    let a0 = packet.alpha0;
    if omega == 0.0 {
        let lambda = Complex64::new(a0, t / a0);
        let lambda_dot = Complex64::new(0.0, 1.0 / a0);
        return LambdaState::new(t, lambda, lambda_dot, (t / (a0 * a0)).atan());
    }
    let theta = omega * t;
    let (s, c) = theta.sin_cos();
    let lambda = Complex64::new(a0 * c, s / (a0 * omega));
    let lambda_dot = Complex64::new(-a0 * omega * s, c / a0);
    // arg λ and ωt agree at every multiple of π/2, and differ by less than π/2
    // in between, so the nearest branch to ωt is the continuous one.
    let principal = lambda.arg();
    let phi = theta + wrap_pi(principal - theta);
    LambdaState::new(t, lambda, lambda_dot, phi)
}

/// Exact classical state (including the action) for `Free` and `ConstantOmega`.
pub fn closed_form_classical(system: &SystemSpec, packet: &InitialPacket, t: f64) -> Result<ClassicalState> {
    let omega = constant_omega(system)?;
    let m = system.constants.mass;
    let (x0, v0) = (packet.x0, packet.p0 / m);
    if omega == 0.0 {
        return Ok(ClassicalState {
            t,
            eta: x0 + v0 * t,
            eta_dot: v0,
            action: 0.5 * m * v0 * v0 * t,
        });
    }
    let (s, c) = (omega * t).sin_cos();
    let (s2, c2) = (2.0 * omega * t).sin_cos();
    let action = 0.5 * m * ((v0 * v0 - omega * omega * x0 * x0) * s2 / (2.0 * omega) + x0 * v0 * (c2 - 1.0));
    Ok(ClassicalState {
        t,
        eta: x0 * c + v0 / omega * s,
        eta_dot: -x0 * omega * s + v0 * c,
        action,
    })
}

fn constant_omega(system: &SystemSpec) -> Result<f64> {
    system
        .frequency_law
        .constant_omega()
        .ok_or_else(|| Error::Capability("closed-form solutions exist only for Free and ConstantOmega".into()))
}

fn wrap_pi(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// `|α̈ + ω²α − 1/α³|` with `α̈` reconstructed from `λ̈ = −ω²λ`.
pub fn ermakov_residual(state: &LambdaState, omega: f64) -> f64 {
    let a = state.alpha;
    let lambda_ddot = -omega * omega * state.lambda;
    let alpha_ddot = (state.lambda_dot.norm_sqr() + (lambda_ddot * state.lambda.conj()).re) / a
        - state.alpha_dot * state.alpha_dot / a;
    (alpha_ddot + omega * omega * a - 1.0 / (a * a * a)).abs()
}
