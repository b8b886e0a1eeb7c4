//! Physical constants, the Hamiltonian family and the initial packet.
//!
//! Every Hamiltonian handled by the crate has the form
//! `H = p²/2m + m ω(t)² x²/2`, so a system is fully described by `ħ`, `m`
//! and the frequency law `ω(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl Constants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = Constants { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(invalid("hbar", format!("must be positive and finite, got {}", self.hbar)));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(invalid("mass", format!("must be positive and finite, got {}", self.mass)));
        }
        Ok(())
    }
}

/// Time dependence of the oscillator frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "parameters", rename_all = "snake_case")]
pub enum FrequencyLaw {
    Free,
    ConstantOmega { omega: f64 },
    /// `ω(t) = omega0 + slope·t`
    RampOmega { omega0: f64, slope: f64 },
    /// `ω(t) = omega0·(1 + epsilon·cos(gamma·t))`
    ModulatedOmega { omega0: f64, epsilon: f64, gamma: f64 },
    /// Piecewise-linear interpolation through `(t, ω)` pairs.
    Tabulated { points: Vec<(f64, f64)> },
}

impl FrequencyLaw {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite, got {v}")))
            }
        };
        match self {
            FrequencyLaw::Free => Ok(()),
            FrequencyLaw::ConstantOmega { omega } => {
                finite("omega", *omega)?;
                if *omega < 0.0 {
                    return Err(invalid("omega", format!("must be >= 0, got {omega}")));
                }
                Ok(())
            }
            FrequencyLaw::RampOmega { omega0, slope } => {
                finite("omega0", *omega0)?;
                finite("slope", *slope)
            }
            FrequencyLaw::ModulatedOmega {
                omega0,
                epsilon,
                gamma,
            } => {
                finite("omega0", *omega0)?;
                finite("epsilon", *epsilon)?;
                finite("gamma", *gamma)
            }
            FrequencyLaw::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(invalid("points", "a table needs at least two entries"));
                }
                for &(t, w) in points {
                    finite("points", t)?;
                    finite("points", w)?;
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(invalid("points", "table times must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    /// True when `ω` does not depend on time (energy is then conserved).
    pub fn is_time_independent(&self) -> bool {
        match self {
            FrequencyLaw::Free | FrequencyLaw::ConstantOmega { .. } => true,
            FrequencyLaw::RampOmega { slope, .. } => *slope == 0.0,
            FrequencyLaw::ModulatedOmega { epsilon, gamma, .. } => *epsilon == 0.0 || *gamma == 0.0,
            FrequencyLaw::Tabulated { points } => points.iter().all(|p| p.1 == points[0].1),
        }
    }

    /// The constant frequency of `Free` / `ConstantOmega`, if the law is one of those.
    pub fn constant_omega(&self) -> Option<f64> {
        match self {
            FrequencyLaw::Free => Some(0.0),
            FrequencyLaw::ConstantOmega { omega } => Some(*omega),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub constants: Constants,
    pub frequency_law: FrequencyLaw,
}

impl SystemSpec {
    pub fn new(constants: Constants, frequency_law: FrequencyLaw) -> Result<Self> {
        constants.validate()?;
        frequency_law.validate()?;
        Ok(SystemSpec {
            constants,
            frequency_law,
        })
    }

    pub fn free(constants: Constants) -> Self {
        SystemSpec {
            constants,
            frequency_law: FrequencyLaw::Free,
        }
    }

    pub fn oscillator(constants: Constants, omega: f64) -> Result<Self> {
        Self::new(constants, FrequencyLaw::ConstantOmega { omega })
    }

    pub fn omega_at(&self, t: f64) -> Result<f64> {
        omega_at(self, t)
    }
}

/// Evaluates `ω(t)` for the system's frequency law.
pub fn omega_at(system: &SystemSpec, t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(invalid("t", format!("must be finite, got {t}")));
    }
    let w = match &system.frequency_law {
        FrequencyLaw::Free => 0.0,
        FrequencyLaw::ConstantOmega { omega } => *omega,
        FrequencyLaw::RampOmega { omega0, slope } => omega0 + slope * t,
        FrequencyLaw::ModulatedOmega {
            omega0,
            epsilon,
            gamma,
        } => omega0 * (1.0 + epsilon * (gamma * t).cos()),
        FrequencyLaw::Tabulated { points } => interpolate(points, t)?,
    };
    Ok(w)
}

fn interpolate(points: &[(f64, f64)], t: f64) -> Result<f64> {
    let (start, end) = (points[0].0, points[points.len() - 1].0);
    if t < start || t > end {
        return Err(Error::OutOfRange { t, start, end });
    }
    // index of the first knot strictly greater than t, clamped to the last segment
    let hi = points.partition_point(|p| p.0 <= t).clamp(1, points.len() - 1);
    let (t0, w0) = points[hi - 1];
    let (t1, w1) = points[hi];
    let s = (t - t0) / (t1 - t0);
    Ok(w0 + s * (w1 - w0))
}

/// Minimum-uncertainty Gaussian at `t = 0`.
///
/// `alpha0` is the dimensionless width, `alpha0² = 2m⟨x̃²⟩₀/ħ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialPacket {
    pub x0: f64,
    pub p0: f64,
    pub alpha0: f64,
}

impl InitialPacket {
    pub fn new(x0: f64, p0: f64, alpha0: f64) -> Result<Self> {
        let p = InitialPacket { x0, p0, alpha0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0.is_finite() && self.p0.is_finite()) {
            return Err(invalid("x0/p0", "initial means must be finite"));
        }
        if !(self.alpha0.is_finite() && self.alpha0 > 0.0) {
            return Err(invalid("alpha0", format!("must be positive and finite, got {}", self.alpha0)));
        }
        Ok(())
    }

    /// Normalization prefactor parameter of the initial packet, `β₀ = 1/α₀²`.
    pub fn beta0(&self) -> f64 {
        1.0 / (self.alpha0 * self.alpha0)
    }
}

/// Initial variances `(⟨x̃²⟩₀, ⟨p̃²⟩₀)` of the packet.
pub fn validate_packet(packet: &InitialPacket, c: &Constants) -> Result<(f64, f64)> {
    packet.validate()?;
    c.validate()?;
    let a2 = packet.alpha0 * packet.alpha0;
    Ok((c.hbar * a2 / (2.0 * c.mass), c.hbar * c.mass / (2.0 * a2)))
}
