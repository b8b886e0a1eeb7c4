//! Wigner functions: direct transform of a sampled wave function, the
//! closed Gaussian form, and transport of an initial Wigner function along
//! the linear phase-space map.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::grid::{wavenumbers, Axis, Checked, ComplexGrid, Fourier, Warning};
use crate::invariants::TransformMatrix;
use crate::packet::Moments;
use crate::system::Constants;

/// Allowed `|‖ψ‖² − 1|` for the direct transform.
pub const NORM_TOLERANCE: f64 = 1e-6;
/// Spectral mass of `ψ` above half its Nyquist wavenumber that triggers an
/// aliasing warning.
pub const SPECTRAL_LIMIT: f64 = 1e-10;

/// Real values on an `x × p` grid, stored row-major with one row per `p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub x: Axis,
    pub p: Axis,
    pub values: Vec<f64>,
}

impl PhaseSpaceGrid {
    pub fn from_fn(x: Axis, p: Axis, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        Self::from_fn_with(Execution::default(), x, p, f)
    }

    pub fn from_fn_with(exec: Execution, x: Axis, p: Axis, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let rows = exec.map(p.len, |j| {
            let pj = p.point(j);
            (0..x.len).map(|i| f(x.point(i), pj)).collect::<Vec<_>>()
        });
        PhaseSpaceGrid { x, p, values: rows.concat() }
    }

    pub fn get(&self, ix: usize, ip: usize) -> f64 {
        self.values[ip * self.x.len + ix]
    }

    pub fn row(&self, ip: usize) -> &[f64] {
        &self.values[ip * self.x.len..(ip + 1) * self.x.len]
    }

    /// `∬ W dx dp` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.x.step * self.p.step
    }

    /// `∫ W dp` at each `x`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len];
        for ip in 0..self.p.len {
            for (o, v) in out.iter_mut().zip(self.row(ip)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v *= self.p.step);
        out
    }

    /// `∫ W dx` at each `p`.
    pub fn marginal_p(&self) -> Vec<f64> {
        (0..self.p.len).map(|ip| self.row(ip).iter().sum::<f64>() * self.x.step).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest pointwise difference; errors if the grids differ.
    pub fn max_abs_diff(&self, other: &PhaseSpaceGrid) -> Result<f64> {
        if self.x != other.x || self.p != other.p {
            return Err(Error::Shape("phase-space grids differ".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Axes centred on `(mean_x, mean_p)` spanning `±span_sigmas` standard
/// deviations in each direction.
pub fn phase_space_axes(mean_x: f64, mean_p: f64, m: &Moments, nx: usize, np: usize, span_sigmas: f64) -> Result<(Axis, Axis)> {
    if !(span_sigmas > 0.0) {
        return Err(invalid("span_sigmas", "must be positive"));
    }
    Ok((
        Axis::centered(mean_x, span_sigmas * m.var_x.sqrt(), nx)?,
        Axis::centered(mean_p, span_sigmas * m.var_p.sqrt(), np)?,
    ))
}

/// `W(x,p) = (1/πħ) ∫ ψ*(x+y) ψ(x−y) e^{2ipy/ħ} dy`, evaluated directly on
/// the sample points of `ψ`.
///
/// Output abscissae that fall between samples are handled by shifting the
/// whole of `ψ` by the fractional offset through its Fourier series, so the
/// result is exact for band-limited `ψ`. Momenta beyond `πħ/2h` alias and
/// raise a warning.
pub fn wigner_numeric(psi: &ComplexGrid, x_axis: Axis, p_axis: Axis, c: &Constants) -> Result<Checked<PhaseSpaceGrid>> {
    wigner_numeric_with(Execution::default(), psi, x_axis, p_axis, c)
}

pub fn wigner_numeric_with(exec: Execution, psi: &ComplexGrid, x_axis: Axis, p_axis: Axis, c: &Constants) -> Result<Checked<PhaseSpaceGrid>> {
    c.validate()?;
    let norm = psi.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Validation(format!("wave function norm² = {norm}, expected 1")));
    }
    let n = psi.len();
    let h = psi.dx;
    let hbar = c.hbar;

    let mut warnings = Vec::new();
    let p_nyquist = PI * hbar / (2.0 * h);
    let p_max = p_axis.min.abs().max(p_axis.max().abs());
    let fft = Fourier::new(n);
    let mut spectrum = psi.values.clone();
    fft.forward(&mut spectrum);
    let k = wavenumbers(n, h);
    let total: f64 = spectrum.iter().map(|v| v.norm_sqr()).sum();
    let high: f64 = spectrum.iter().zip(&k).filter(|(_, k)| k.abs() > 0.5 * PI / h).map(|(v, _)| v.norm_sqr()).sum();
    if p_max > p_nyquist || high > SPECTRAL_LIMIT * total {
        warnings.push(Warning::Aliasing { p_max, p_nyquist });
    }

    let scale = h / (PI * hbar);
    let columns = exec.map(x_axis.len, |ix| {
        let xi = x_axis.point(ix);
        let pos = (xi - psi.x_min) / h;
        let mut base = pos.round();
        let mut delta = pos - base;
        if delta.abs() < 1e-12 {
            delta = 0.0;
        } else if delta < 0.0 {
            base -= 1.0;
            delta += 1.0;
        }
        if base < 0.0 || base > (n - 1) as f64 {
            return vec![0.0; p_axis.len];
        }
        let centre = base as usize;
        let shifted: Vec<Complex64> = if delta == 0.0 {
            psi.values.clone()
        } else {
            let mut buf: Vec<Complex64> = spectrum.iter().zip(&k).map(|(v, k)| v * Complex64::from_polar(1.0, k * delta * h)).collect();
            fft.inverse(&mut buf);
            buf
        };
        let reach = centre.min(n - 1 - centre);
        let products: Vec<Complex64> = (1..=reach).map(|j| shifted[centre + j].conj() * shifted[centre - j]).collect();
        let diag = shifted[centre].norm_sqr();
        (0..p_axis.len)
            .map(|ip| {
                let step = Complex64::from_polar(1.0, 2.0 * p_axis.point(ip) * h / hbar);
                let mut phase = step;
                let mut acc = 0.0;
                for q in &products {
                    acc += (phase * q).re;
                    phase *= step;
                }
                scale * (diag + 2.0 * acc)
            })
            .collect::<Vec<_>>()
    });

    let mut values = vec![0.0; x_axis.len * p_axis.len];
    for (ix, col) in columns.iter().enumerate() {
        for (ip, v) in col.iter().enumerate() {
            values[ip * x_axis.len + ix] = *v;
        }
    }
    Ok(Checked {
        value: PhaseSpaceGrid { x: x_axis, p: p_axis, values },
        warnings,
    })
}

/// Relative tolerance on `⟨x̃²⟩⟨p̃²⟩ − ¼⟨[x̃,p̃]₊⟩² = ħ²/4`.
pub const GAUSSIAN_DET_TOLERANCE: f64 = 1e-6;

/// `W = (1/πħ) exp{−(2/ħ²)[⟨p̃²⟩x̃² − ⟨[x̃,p̃]₊⟩x̃p̃ + ⟨x̃²⟩p̃²]}`
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianWigner {
    pub moments: Moments,
    pub mean_x: f64,
    pub mean_p: f64,
    pub constants: Constants,
}

impl GaussianWigner {
    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let hbar = self.constants.hbar;
        let (xt, pt) = (x - self.mean_x, p - self.mean_p);
        let m = &self.moments;
        let q = m.var_p * xt * xt - m.corr * xt * pt + m.var_x * pt * pt;
        (-2.0 * q / (hbar * hbar)).exp() / (PI * hbar)
    }

    pub fn sample(&self, x: Axis, p: Axis) -> PhaseSpaceGrid {
        PhaseSpaceGrid::from_fn(x, p, |x, p| self.eval(x, p))
    }
}

pub fn wigner_gaussian(moments: Moments, mean_x: f64, mean_p: f64, c: &Constants) -> Result<GaussianWigner> {
    c.validate()?;
    if !(moments.var_x > 0.0 && moments.var_p > 0.0) {
        return Err(invalid("moments", "variances must be positive"));
    }
    let target = 0.25 * c.hbar * c.hbar;
    let det = moments.determinant();
    if ((det - target) / target).abs() > GAUSSIAN_DET_TOLERANCE {
        return Err(Error::Validation(format!("moment determinant {det} differs from ħ²/4 = {target}")));
    }
    Ok(GaussianWigner { moments, mean_x, mean_p, constants: *c })
}

/// Initial phase-space point in scaled form: `xi = x'/α₀`, `pi = −α₀p'/m`.
///
/// The negative sign on the momentum component is a storage convention only;
/// [`ScaledPhasePoint::to_physical`] undoes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledPhasePoint {
    pub xi: f64,
    pub pi: f64,
}

impl ScaledPhasePoint {
    /// Image of `(x, p)` under `M`, which acts on `(x, p/m)` and returns
    /// `(x'/α₀, α₀p'/m)`.
    pub fn from_matrix(matrix: &TransformMatrix, x: f64, p: f64, mass: f64) -> Self {
        let (xi, scaled_p) = matrix.apply(x, p / mass);
        ScaledPhasePoint { xi, pi: -scaled_p }
    }

    pub fn to_physical(&self, alpha0: f64, mass: f64) -> (f64, f64) {
        (alpha0 * self.xi, -mass * self.pi / alpha0)
    }
}

/// `W(x,p,t) = W₀(x', p')` with `(x', p')` the preimage of `(x, p)` under
/// the canonical map encoded by `matrix`.
pub fn wigner_pointmap(w0: impl Fn(f64, f64) -> f64, matrix: &TransformMatrix, c: &Constants, x: f64, p: f64) -> Result<f64> {
    if !matrix.canonical {
        return Err(Error::Validation("point transport needs a canonical transformation".into()));
    }
    let det = matrix.det();
    if (det - 1.0).abs() > crate::invariants::DET_TOLERANCE {
        return Err(Error::Validation(format!("det M = {det}, transport is only defined for det = 1")));
    }
    let (xp, pp) = ScaledPhasePoint::from_matrix(matrix, x, p, c.mass).to_physical(matrix.alpha0, c.mass);
    Ok(w0(xp, pp))
}
