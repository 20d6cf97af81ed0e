//! Weighted Sobolev norms `H^s_γ` and the anisotropic norms `𝓗ʲ_γ`.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::error::{contract, Result};
use crate::grid::SpectralGrid;

/// Deepest y-derivative taken by repeated finite differences.
pub const MAX_Y_ORDER: usize = 12;

fn check_params(s: usize, gamma: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return contract(format!("weight exponent γ = {gamma} must be nonnegative"));
    }
    if s > MAX_Y_ORDER {
        return contract(format!("y-derivative order {s} exceeds the stencil depth {MAX_Y_ORDER}"));
    }
    Ok(())
}

/// `‖g‖_{H^s_γ}` of a y-profile.
pub fn sobolev_weighted_norm_profile(grid: &SpectralGrid, g: ArrayView1<f64>, s: usize, gamma: f64) -> Result<f64> {
    check_params(s, gamma)?;
    let mut d = g.to_owned();
    let mut acc = 0.0;
    for k in 0..=s {
        if k > 0 {
            d = grid.dy_profile(d.view(), 1)?;
        }
        let rho = grid.one_plus_y_pow(gamma + k as f64);
        acc += grid.profile_l2(d.view(), Some(&rho)).powi(2);
    }
    Ok(acc.sqrt())
}

/// `‖g‖_{H^s_γ}` of a field on `T × (0, L_y)`.
pub fn sobolev_weighted_norm(grid: &SpectralGrid, g: &Array2<f64>, s: usize, gamma: f64) -> Result<f64> {
    check_params(s, gamma)?;
    grid.check_shape(&g.view())?;
    let mut d = g.clone();
    let mut acc = 0.0;
    for k in 0..=s {
        if k > 0 {
            d = grid.dy(&d, 1)?;
        }
        let rho = grid.one_plus_y_pow(gamma + k as f64);
        acc += grid.weighted_l2_norm(&d, Some(&rho)).powi(2);
    }
    Ok(acc.sqrt())
}

/// Fourier spectra of `∂_y^k f` for `k = 0..=k_max`, shared by every
/// anisotropic norm evaluated on the same field.
pub struct YDerivatives<'g> {
    grid: &'g SpectralGrid,
    fields: Vec<Array2<f64>>,
    spectra: Vec<Array2<Complex64>>,
}

impl<'g> YDerivatives<'g> {
    pub fn new(grid: &'g SpectralGrid, f: &Array2<f64>, k_max: usize) -> Result<Self> {
        if k_max > MAX_Y_ORDER + 1 {
            return contract(format!("y-derivative order {k_max} exceeds the stencil depth"));
        }
        let mut fields = vec![f.clone()];
        for k in 1..=k_max {
            let next = grid.dy(&fields[k - 1], 1)?;
            fields.push(next);
        }
        let spectra = fields.iter().map(|d| grid.forward(d)).collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, fields, spectra })
    }

    pub fn k_max(&self) -> usize {
        self.spectra.len() - 1
    }

    /// `∂_y^k f` in physical space.
    pub fn field(&self, k: usize) -> &Array2<f64> {
        &self.fields[k]
    }

    pub fn spectrum(&self, k: usize) -> &Array2<Complex64> {
        &self.spectra[k]
    }

    /// `Σ_{j₂} ‖(1+y)^{γ+j₂} ∂ₓ^{j−j₂} ∂_y^{j₂+shift} f‖²` over
    /// `j₂ ∈ [lo, min(j, s)]`, with `lo = 1` in homogeneous mode.
    pub fn calh_sq(&self, j: usize, gamma: f64, s: usize, homogeneous: bool, shift: usize) -> Result<f64> {
        self.calh_sq_masked(j, gamma, s, homogeneous, shift, None)
    }

    /// [`calh_sq`](Self::calh_sq) with the y-integrand multiplied by `mask`.
    pub fn calh_sq_masked(
        &self,
        j: usize,
        gamma: f64,
        s: usize,
        homogeneous: bool,
        shift: usize,
        mask: Option<&Array1<f64>>,
    ) -> Result<f64> {
        let lo = usize::from(homogeneous);
        let hi = j.min(s);
        if hi + shift > self.k_max() {
            return contract(format!(
                "need ∂_y^{} but only {} y-derivatives were prepared",
                hi + shift,
                self.k_max()
            ));
        }
        let mut acc = 0.0;
        for j2 in lo..=hi {
            let dens = self.grid.spectral_density(&self.spectra[j2 + shift], j - j2);
            let mut rho2 = self.grid.one_plus_y_pow(2.0 * (gamma + j2 as f64));
            if let Some(m) = mask {
                rho2 *= m;
            }
            acc += self.grid.integrate_density(&dens, Some(&rho2));
        }
        Ok(acc)
    }

    /// `∫ ρ² |∂ₓ^j ∂_y^k f|²` by Parseval.
    pub fn x_derivative_sq(&self, k: usize, j: usize, rho2: Option<&Array1<f64>>) -> f64 {
        let dens = self.grid.spectral_density(&self.spectra[k], j);
        self.grid.integrate_density(&dens, rho2)
    }
}

/// `‖ω‖_{𝓗ʲ_γ}`, or `‖ω‖_{𝓗̇ʲ_γ}` when `homogeneous` (which omits `j₂ = 0`).
pub fn calh_norm(grid: &SpectralGrid, omega: &Array2<f64>, j: usize, gamma: f64, s: usize, homogeneous: bool) -> Result<f64> {
    check_params(s, gamma)?;
    grid.check_shape(&omega.view())?;
    if homogeneous && j == 0 {
        return Ok(0.0);
    }
    let table = YDerivatives::new(grid, omega, j.min(s))?;
    Ok(table.calh_sq(j, gamma, s, homogeneous, 0)?.sqrt())
}
