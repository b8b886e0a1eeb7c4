//! Brute-force split-operator propagation on a periodic grid, used as an
//! independent check on the analytic and kernel pathways.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{phase_aligned_l2_distance, l2_distance, spectral_derivative, trapezoid_weights, wavenumbers, Checked, ComplexGrid, Fourier, Warning};
use crate::packet::Moments;
use crate::system::{omega_at, Constants, SystemSpec};

/// Mass allowed outside the central half of the domain.
pub const CENTRAL_COVERAGE_LIMIT: f64 = 1e-10;
/// Spectral mass allowed in the top fifth of the wavenumber band.
pub const SPECTRAL_LIMIT: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub grid: ComplexGrid,
    pub t: f64,
}

fn check_resolution(grid: &ComplexGrid, fft: &Fourier) -> Result<()> {
    let mut spec = grid.values.clone();
    fft.forward(&mut spec);
    let k = wavenumbers(grid.len(), grid.dx);
    let k_max = std::f64::consts::PI / grid.dx;
    let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
    let high: f64 = spec.iter().zip(&k).filter(|(_, k)| k.abs() > 0.8 * k_max).map(|(v, _)| v.norm_sqr()).sum();
    if high > SPECTRAL_LIMIT * total {
        return Err(Error::Resolution(format!(
            "momentum content reaches the grid Nyquist limit (fraction {:.3e} above 0.8 k_max)",
            high / total
        )));
    }
    Ok(())
}

/// Strang splitting `e^{−iVdt/2ħ} e^{−iTdt/ħ} e^{−iVdt/2ħ}` with the
/// kinetic factor applied in Fourier space and `ω` taken at each step's
/// midpoint.
pub fn split_step(state: &GridState, system: &SystemSpec, dt: f64, steps: usize) -> Result<Checked<GridState>> {
    system.constants.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    let n = state.grid.len();
    if n < 2 {
        return Err(Error::Shape("the grid needs at least two points".into()));
    }
    if steps == 0 {
        return Ok(coverage(state.clone()));
    }
    let fft = Fourier::new(n);
    check_resolution(&state.grid, &fft)?;

    let (hbar, m) = (system.constants.hbar, system.constants.mass);
    let kinetic: Vec<Complex64> = wavenumbers(n, state.grid.dx)
        .iter()
        .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * m)))
        .collect();
    let xs: Vec<f64> = (0..n).map(|i| state.grid.x(i)).collect();
    let mut psi = state.grid.values.clone();
    let mut half = vec![Complex64::new(1.0, 0.0); n];
    for step in 0..steps {
        let t_mid = state.t + (step as f64 + 0.5) * dt;
        let w = omega_at(system, t_mid)?;
        let c = -0.25 * m * w * w * dt / hbar;
        for (h, x) in half.iter_mut().zip(&xs) {
            *h = Complex64::from_polar(1.0, c * x * x);
        }
        psi.iter_mut().zip(&half).for_each(|(v, h)| *v *= h);
        fft.forward(&mut psi);
        psi.iter_mut().zip(&kinetic).for_each(|(v, k)| *v *= k);
        fft.inverse(&mut psi);
        psi.iter_mut().zip(&half).for_each(|(v, h)| *v *= h);
        if !psi.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Divergence { t: state.t + (step + 1) as f64 * dt });
        }
    }
    let out = GridState {
        grid: ComplexGrid::new(state.grid.x_min, state.grid.dx, psi)?,
        t: state.t + steps as f64 * dt,
    };
    check_resolution(&out.grid, &fft)?;
    Ok(coverage(out))
}

fn coverage(state: GridState) -> Checked<GridState> {
    let lost = state.grid.edge_mass(0.25);
    let mut out = Checked::clean(state);
    if lost > CENTRAL_COVERAGE_LIMIT {
        out.warnings.push(Warning::Coverage {
            lost_mass: lost,
            limit: CENTRAL_COVERAGE_LIMIT,
        });
    }
    out
}

/// Quadrature moments of a sampled state; momenta use spectral derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridMoments {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub moments: Moments,
}

pub fn grid_moments(grid: &ComplexGrid, c: &Constants) -> GridMoments {
    let n = grid.len();
    let fft = Fourier::new(n);
    let d = spectral_derivative(&grid.values, grid.dx, &fft);
    let w = trapezoid_weights(n);
    let (mut s0, mut sx, mut sxx) = (0.0, 0.0, 0.0);
    let (mut sp, mut spp, mut sxp) = (Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0));
    let mi = Complex64::new(0.0, -c.hbar);
    for i in 0..n {
        let (x, v, dv, wi) = (grid.x(i), grid.values[i], d[i], w[i]);
        let rho = wi * v.norm_sqr();
        s0 += rho;
        sx += x * rho;
        sxx += x * x * rho;
        let pv = v.conj() * mi * dv * wi;
        sp += pv;
        sxp += pv * x;
        spp += wi * c.hbar * c.hbar * dv.norm_sqr();
    }
    let norm = s0 * grid.dx;
    let mean_x = sx * grid.dx / norm;
    let mean_p = sp.re * grid.dx / norm;
    GridMoments {
        norm,
        mean_x,
        mean_p,
        moments: Moments {
            var_x: sxx * grid.dx / norm - mean_x * mean_x,
            var_p: spp * grid.dx / norm - mean_p * mean_p,
            corr: 2.0 * (sxp.re * grid.dx / norm - mean_x * mean_p),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentErrors {
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub corr: f64,
}

impl MomentErrors {
    pub fn max(&self) -> f64 {
        [self.mean_x, self.mean_p, self.var_x, self.var_p, self.corr].into_iter().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub l2: f64,
    pub phase_aligned_l2: f64,
    pub moment_errors: MomentErrors,
}

pub fn compare_states(a: &ComplexGrid, b: &ComplexGrid, c: &Constants) -> Result<Comparison> {
    let l2 = l2_distance(a, b)?;
    let (aligned, _) = phase_aligned_l2_distance(a, b)?;
    let (ma, mb) = (grid_moments(a, c), grid_moments(b, c));
    Ok(Comparison {
        l2,
        phase_aligned_l2: aligned,
        moment_errors: MomentErrors {
            mean_x: (ma.mean_x - mb.mean_x).abs(),
            mean_p: (ma.mean_p - mb.mean_p).abs(),
            var_x: (ma.moments.var_x - mb.moments.var_x).abs(),
            var_p: (ma.moments.var_p - mb.moments.var_p).abs(),
            corr: (ma.moments.corr - mb.moments.corr).abs(),
        },
    })
}
