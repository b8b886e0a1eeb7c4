//! Uniform sampling grids for wavefunctions, FFT helpers and the warning
//! metadata attached to gridded results.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Uniform axis `min + i·step`, `i < len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn new(min: f64, step: f64, len: usize) -> Result<Self> {
        if !(min.is_finite() && step.is_finite() && step > 0.0) {
            return Err(invalid("axis", format!("need finite min and positive step, got ({min}, {step})")));
        }
        if len == 0 {
            return Err(invalid("axis", "length must be non-zero"));
        }
        Ok(Axis { min, step, len })
    }

    /// Half-open span `[min, max)` split into `len` cells.
    pub fn span(min: f64, max: f64, len: usize) -> Result<Self> {
        if !(max > min) || len == 0 {
            return Err(invalid("axis", format!("empty span [{min}, {max}) with {len} points")));
        }
        Self::new(min, (max - min) / len as f64, len)
    }

    /// `len` points covering `[center − half_width, center + half_width)`;
    /// for even `len` the centre itself is the point with index `len/2`.
    pub fn centered(center: f64, half_width: f64, len: usize) -> Result<Self> {
        Self::span(center - half_width, center + half_width, len)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    pub fn max(&self) -> f64 {
        self.point(self.len - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexGrid {
    pub x_min: f64,
    pub dx: f64,
    pub values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(x_min: f64, dx: f64, values: Vec<Complex64>) -> Result<Self> {
        Axis::new(x_min, dx, values.len())?;
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(invalid("values", "grid contains non-finite samples"));
        }
        Ok(ComplexGrid { x_min, dx, values })
    }

    pub fn from_fn(axis: Axis, f: impl Fn(f64) -> Complex64) -> Self {
        ComplexGrid {
            x_min: axis.min,
            dx: axis.step,
            values: (0..axis.len).map(|i| f(axis.point(i))).collect(),
        }
    }

    pub fn axis(&self) -> Axis {
        Axis {
            min: self.x_min,
            step: self.dx,
            len: self.values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// `∫|ψ|² dx` by the trapezoid rule.
    pub fn norm_sqr(&self) -> f64 {
        let w = trapezoid_weights(self.len());
        self.values.iter().zip(&w).map(|(v, w)| w * v.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn same_axis(&self, other: &ComplexGrid) -> bool {
        self.len() == other.len()
            && (self.x_min - other.x_min).abs() <= 1e-12 * (1.0 + self.x_min.abs())
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }

    pub fn check_same_axis(&self, other: &ComplexGrid) -> Result<()> {
        if self.same_axis(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grids differ: ({}, {}, {}) vs ({}, {}, {})",
                self.x_min,
                self.dx,
                self.len(),
                other.x_min,
                other.dx,
                other.len()
            )))
        }
    }

    /// Probability mass in the outer `fraction` of the grid on each side.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n / 2);
        let edge: f64 = self.values[..k]
            .iter()
            .chain(&self.values[n - k..])
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.dx;
        edge / self.norm_sqr().max(f64::MIN_POSITIVE)
    }
}

/// Trapezoid weights `(½, 1, …, 1, ½)`.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    if n > 1 {
        w[0] = 0.5;
        w[n - 1] = 0.5;
    }
    w
}

/// Non-fatal diagnostics attached to a gridded result.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Probability mass estimated to lie outside the usable part of a grid.
    Coverage { lost_mass: f64, limit: f64 },
    /// The requested momentum range exceeds what the position sampling resolves.
    Aliasing { p_max: f64, p_nyquist: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn clean(value: T) -> Self {
        Checked {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn has_warnings(&self) -> bool {
        !self.warnings.is_empty()
    }
}

/// Angular wavenumbers matching the FFT output ordering.
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|j| {
            let j = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            j * dk
        })
        .collect()
}

/// In-place FFT wrapper; `inverse` includes the `1/n` normalization.
pub struct Fourier {
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    n: usize,
}

impl Fourier {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fourier {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Samples `ψ(x_j + shift)` by band-limited (Fourier) interpolation.
pub fn fourier_shift(values: &[Complex64], dx: f64, shift: f64, fft: &Fourier) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    fft.forward(&mut buf);
    for (v, k) in buf.iter_mut().zip(wavenumbers(values.len(), dx)) {
        *v *= Complex64::from_polar(1.0, k * shift);
    }
    fft.inverse(&mut buf);
    buf
}

/// `dψ/dx` by spectral differentiation.
pub fn spectral_derivative(values: &[Complex64], dx: f64, fft: &Fourier) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    fft.forward(&mut buf);
    for (v, k) in buf.iter_mut().zip(wavenumbers(values.len(), dx)) {
        *v *= Complex64::new(0.0, k);
    }
    fft.inverse(&mut buf);
    buf
}

/// `‖a − b‖` with trapezoid weights.
pub fn l2_distance(a: &ComplexGrid, b: &ComplexGrid) -> Result<f64> {
    a.check_same_axis(b)?;
    let w = trapezoid_weights(a.len());
    let s: f64 = a.values.iter().zip(&b.values).zip(&w).map(|((x, y), w)| w * (x - y).norm_sqr()).sum();
    Ok((s * a.dx).sqrt())
}

/// `min_θ ‖a − e^{iθ} b‖` together with the optimal `e^{iθ}`.
pub fn phase_aligned_l2_distance(a: &ComplexGrid, b: &ComplexGrid) -> Result<(f64, Complex64)> {
    a.check_same_axis(b)?;
    let w = trapezoid_weights(a.len());
    let overlap: Complex64 = a.values.iter().zip(&b.values).zip(&w).map(|((x, y), w)| y.conj() * x * *w).sum();
    let rot = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
    let s: f64 = a.values.iter().zip(&b.values).zip(&w).map(|((x, y), w)| w * (x - rot * y).norm_sqr()).sum();
    Ok(((s * a.dx).sqrt(), rot))
}
