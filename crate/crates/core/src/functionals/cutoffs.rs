//! Smooth cutoffs localizing near the critical curve and below the split height.

use crate::error::{contract, Result};

/// Smooth nonincreasing transition: `1` for `q ≤ r1`, `0` for `q ≥ r2`.
///
/// Built from `e^{−1/s}`, so every derivative vanishes at both ends.
pub fn smooth_step_down(q: f64, r1: f64, r2: f64) -> f64 {
    if q <= r1 {
        return 1.0;
    }
    if q >= r2 {
        return 0.0;
    }
    let s = (q - r1) / (r2 - r1);
    let rise = (-1.0 / s).exp();
    let fall = (-1.0 / (1.0 - s)).exp();
    fall / (rise + fall)
}

/// Lower bound `(1+y)^σ |ω| ≥ δ` enforced where `ψ < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VorticityFloor {
    pub delta: f64,
    pub sigma: f64,
}

/// Parameters of `χ(p)`, `ψ(y)` and of the exclusion band around the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoffs {
    /// `χ = 1` for `|p| ≤ chi_r1`.
    pub chi_r1: f64,
    /// `χ = 0` for `|p| ≥ chi_r2`.
    pub chi_r2: f64,
    /// `ψ = 1` below `y_split + psi_edge`, `0` above `y_split + 2·psi_edge`.
    pub psi_edge: f64,
    pub y_split: f64,
    /// Half-width of the band around the curve skipped by the reconstruction.
    pub exclusion_band: f64,
    /// When set, `g_j` rejects vorticity below half of this floor where `ψ < 1`.
    pub floor: Option<VorticityFloor>,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self {
            chi_r1: 0.25,
            chi_r2: 0.5,
            psi_edge: 0.5,
            y_split: 3.0,
            exclusion_band: 0.125,
            floor: None,
        }
    }
}

impl Cutoffs {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi_r1 > 0.0 && self.chi_r2 > self.chi_r1) {
            return contract(format!(
                "χ radii must satisfy 0 < r1 < r2, got {} and {}",
                self.chi_r1, self.chi_r2
            ));
        }
        if !(self.psi_edge > 0.0 && self.y_split > 0.0) {
            return contract("ψ edge and split height must be positive");
        }
        if !(self.exclusion_band > 0.0 && self.exclusion_band < self.chi_r1) {
            return contract(format!(
                "exclusion band {} must lie in (0, r1)",
                self.exclusion_band
            ));
        }
        if let Some(f) = self.floor {
            if !(f.delta > 0.0 && f.sigma >= 0.0) {
                return contract("vorticity floor needs δ > 0 and σ ≥ 0");
            }
        }
        Ok(())
    }

    /// `χ(p)`.
    pub fn chi(&self, p: f64) -> f64 {
        smooth_step_down(p.abs(), self.chi_r1, self.chi_r2)
    }

    /// `ψ(y)`.
    pub fn psi(&self, y: f64) -> f64 {
        smooth_step_down(y, self.y_split + self.psi_edge, self.y_split + 2.0 * self.psi_edge)
    }

    /// Cutoff equal to one on `|p| ≤ ε/2` and vanishing for `|p| ≥ ε`.
    pub fn chi_eps(&self, p: f64, eps: f64) -> f64 {
        smooth_step_down(p.abs(), 0.5 * eps, eps)
    }
}
