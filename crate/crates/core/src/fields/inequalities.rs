//! Hardy and Sobolev inequalities evaluated on discrete data.

use ndarray::{Array2, ArrayView1};

use crate::calibration::C_SOB;
use crate::error::{contract, Error, Result};
use crate::grid::SpectralGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyVariant {
    /// `‖(1+y)^λ f‖ ≤ 2/(2λ+1) ‖(1+y)^{λ+1} f′‖`, `λ > −1/2`, `f(∞) = 0`.
    Decaying,
    /// `‖(1+y)^λ f‖ ≤ √(−1/(2λ+1)) |f(0)| − 2/(2λ+1) ‖(1+y)^{λ+1} f′‖`, `λ < −1/2`.
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    pub variant: HardyVariant,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Both sides of the Hardy inequality with exponent `lambda` for a y-profile.
///
/// `holds` is `lhs ≤ rhs (1 + tol)`.
pub fn hardy_check(grid: &SpectralGrid, f: ArrayView1<f64>, lambda: f64, tol: f64) -> Result<HardyReport> {
    if lambda == -0.5 {
        return Err(Error::Unsupported("λ = −1/2: the Hardy constant is infinite".into()));
    }
    if !lambda.is_finite() {
        return contract(format!("λ = {lambda} must be finite"));
    }
    let ny = grid.ny();
    if f.len() != ny {
        return contract(format!("profile length {} does not match ny = {ny}", f.len()));
    }
    let df = grid.dy_profile(f, 1)?;
    let lhs = grid.profile_l2(f, Some(&grid.one_plus_y_pow(lambda)));
    let grad = grid.profile_l2(df.view(), Some(&grid.one_plus_y_pow(lambda + 1.0)));
    let c = 2.0 / (2.0 * lambda + 1.0);
    let (variant, rhs) = if lambda > -0.5 {
        if f[ny - 1].abs() >= 1e-8 {
            return contract(format!(
                "decaying Hardy inequality needs f(L_y) ≈ 0, got {:e}",
                f[ny - 1]
            ));
        }
        (HardyVariant::Decaying, c * grad)
    } else {
        let trace = (-1.0 / (2.0 * lambda + 1.0)).sqrt() * f[0].abs();
        (HardyVariant::Trace, trace - c * grad)
    };
    Ok(HardyReport {
        variant,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevReport {
    /// Grid maximum of `|f|`.
    pub sup: f64,
    /// `‖f‖ + ‖∂ₓf‖ + ‖∂_y f‖ + ‖∂_y∂ₓ f‖`.
    pub rhs: f64,
    /// `sup / rhs`, zero for the zero field.
    pub ratio: f64,
    /// `ratio ≤ C_sob`.
    pub holds: bool,
}

/// Measures the anisotropic Sobolev embedding constant on a field.
pub fn sobolev_check(grid: &SpectralGrid, f: &Array2<f64>) -> Result<SobolevReport> {
    grid.check_shape(&f.view())?;
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let fx = grid.dx(f, 1)?;
    let fy = grid.dy(f, 1)?;
    let fxy = grid.dy(&fx, 1)?;
    let rhs = grid.l2_norm(f) + grid.l2_norm(&fx) + grid.l2_norm(&fy) + grid.l2_norm(&fxy);
    let ratio = if sup == 0.0 { 0.0 } else { sup / rhs };
    Ok(SobolevReport {
        sup,
        rhs,
        ratio,
        holds: ratio <= C_SOB,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(&GridConfig {
            nx: 32,
            ny: 513,
            ..GridConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn exponential_profile() {
        let g = grid();
        let f = g.tabulate_y(|y| (-y).exp());
        let r = hardy_check(&g, f.view(), 0.0, 1e-10).unwrap();
        assert!((r.lhs - 0.5f64.sqrt()).abs() < 1e-6);
        // 2 ‖(1+y) e^{−y}‖ = 2 √(5/4).
        assert!((r.rhs - 2.0 * 1.25f64.sqrt()).abs() < 1e-6);
        assert!(r.holds);
    }

    #[test]
    fn zero_profile_is_equality() {
        let g = grid();
        let z = ndarray::Array1::zeros(g.ny());
        let r = hardy_check(&g, z.view(), 0.3, 0.0).unwrap();
        assert_eq!((r.lhs, r.rhs, r.holds), (0.0, 0.0, true));
    }

    #[test]
    fn shifted_power_profile() {
        let g = grid();
        let l = g.y_max();
        let f = g.tabulate_y(|y| (1.0 + y).powi(-2) - (1.0 + l).powi(-2));
        let r = hardy_check(&g, f.view(), 0.3, 1e-10).unwrap();
        assert!(r.holds && r.lhs > 0.0);
    }

    #[test]
    fn trace_variant_and_errors() {
        let g = grid();
        let f = g.tabulate_y(|y| 1.0 / (1.0 + y));
        let r = hardy_check(&g, f.view(), -1.0, 1e-10).unwrap();
        assert_eq!(r.variant, HardyVariant::Trace);
        assert!(r.holds);
        assert!(matches!(hardy_check(&g, f.view(), -0.5, 0.0), Err(Error::Unsupported(_))));
        assert!(hardy_check(&g, f.view(), 0.5, 0.0).is_err());
    }

    #[test]
    fn sobolev_ratio() {
        let g = grid();
        assert_eq!(sobolev_check(&g, &g.zeros()).unwrap().ratio, 0.0);
        for k in [1.0, 8.0] {
            let f = g.tabulate(|x, y| (k * x).sin() * (-y).exp());
            let r = sobolev_check(&g, &f).unwrap();
            assert!(r.holds, "k = {k}: ratio {}", r.ratio);
        }
    }
}
