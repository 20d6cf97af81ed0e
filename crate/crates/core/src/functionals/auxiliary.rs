//! Auxiliary quantities `h_j`, `g_j`, `g̃_j`, `ḡ_k`, `ĝ_k`, the coefficients
//! `C_j`, and the reconstruction of `∂ₓʲu` from `g_j`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use super::curve::CriticalCurve;
use super::cutoffs::Cutoffs;
use crate::error::{contract, Error, Result};
use crate::grid::stencil::lagrange_basis;
use crate::grid::SpectralGrid;

/// Order of the x-derivative inside `g̃_j`.
pub const TILDE_SHIFT: usize = 5;

/// Interpolation width of the quadrature used by the reconstruction.
const RECON_WIDTH: usize = 8;

/// Spectra of `ω` and `u` plus `∂_yω`, shared by every `j` of one snapshot.
pub struct FieldSpectra<'g> {
    grid: &'g SpectralGrid,
    pub omega: Array2<f64>,
    pub u: Array2<f64>,
    pub omega_y: Array2<f64>,
    omega_hat: Array2<Complex64>,
    u_hat: Array2<Complex64>,
}

impl<'g> FieldSpectra<'g> {
    pub fn new(grid: &'g SpectralGrid, omega: &Array2<f64>, u: &Array2<f64>) -> Result<Self> {
        grid.check_shape(&omega.view())?;
        grid.check_shape(&u.view())?;
        Ok(Self {
            grid,
            omega: omega.clone(),
            u: u.clone(),
            omega_y: grid.dy(omega, 1)?,
            omega_hat: grid.forward(omega)?,
            u_hat: grid.forward(u)?,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.grid
    }

    fn derivative(&self, hat: &Array2<Complex64>, j: usize) -> Array2<f64> {
        let mut s = hat.clone();
        self.grid.spectral_dx(&mut s, j);
        self.grid.inverse(&s)
    }

    /// `∂ₓʲω`.
    pub fn dxj_omega(&self, j: usize) -> Array2<f64> {
        if j == 0 {
            return self.omega.clone();
        }
        self.derivative(&self.omega_hat, j)
    }

    /// `∂ₓʲu`.
    pub fn dxj_u(&self, j: usize) -> Array2<f64> {
        if j == 0 {
            return self.u.clone();
        }
        self.derivative(&self.u_hat, j)
    }

    /// `ω ∂ₓᵏω − ∂_yω ∂ₓᵏu`.
    pub fn bar_g(&self, k: usize) -> Array2<f64> {
        let dw = self.dxj_omega(k);
        let du = self.dxj_u(k);
        &self.omega * &dw - &self.omega_y * &du
    }

    /// Spectrum of `ḡ₅`, the seed of every `g̃_j`.
    pub fn tilde_seed(&self) -> Result<Array2<Complex64>> {
        self.grid.forward(&self.bar_g(TILDE_SHIFT))
    }

    /// `g̃_j` from the spectrum returned by [`Self::tilde_seed`].
    pub fn tilde_from_seed(&self, seed: &Array2<Complex64>, j: usize) -> Array2<f64> {
        if j < TILDE_SHIFT {
            return self.grid.zeros();
        }
        self.derivative(seed, j - TILDE_SHIFT)
    }

    /// `h_j` given `∂ₓʲω`.
    pub fn hj_from(&self, dxj_omega: &Array2<f64>, curve: &CriticalCurve, cutoffs: &Cutoffs) -> Result<Array2<f64>> {
        let grid = self.grid;
        let mut h = grid.zeros();
        if !curve.valid {
            return Ok(h);
        }
        if curve.a.len() != grid.nx() {
            return contract("critical curve does not match the grid");
        }
        if curve.min_height() - cutoffs.chi_r2 <= 0.0 || curve.max_height() + cutoffs.chi_r2 >= cutoffs.y_split {
            return Err(Error::Hypothesis(format!(
                "χ(y − a) is not supported inside (0, {}): a ∈ [{}, {}], radius {}",
                cutoffs.y_split,
                curve.min_height(),
                curve.max_height(),
                cutoffs.chi_r2
            )));
        }
        let y = grid.y_nodes();
        for i in 0..grid.nx() {
            let a = curve.a[i];
            for (j, &yj) in y.iter().enumerate() {
                let chi = cutoffs.chi(yj - a);
                if chi == 0.0 {
                    continue;
                }
                let wy = self.omega_y[[i, j]];
                if !(wy > 0.0) {
                    return Err(Error::Hypothesis(format!(
                        "cutoff too wide: ∂_yω = {wy:e} ≤ 0 at node (x = {}, y = {yj}) inside supp χ(y − a)",
                        grid.x_nodes()[i]
                    )));
                }
                h[[i, j]] = chi * dxj_omega[[i, j]] / wy.sqrt();
            }
        }
        Ok(h)
    }

    /// `g_j` given `∂ₓʲω` and `∂ₓʲu`, in the form without division near the curve.
    pub fn gj_from(&self, dxj_omega: &Array2<f64>, dxj_u: &Array2<f64>, cutoffs: &Cutoffs) -> Result<Array2<f64>> {
        let grid = self.grid;
        let y = grid.y_nodes();
        let psi: Vec<f64> = y.iter().map(|&v| cutoffs.psi(v)).collect();
        let mut g = grid.zeros();
        for i in 0..grid.nx() {
            for (j, &yj) in y.iter().enumerate() {
                let w = self.omega[[i, j]];
                let wy = self.omega_y[[i, j]];
                let dw = dxj_omega[[i, j]];
                let du = dxj_u[[i, j]];
                let p = psi[j];
                let mut v = p * (w * dw - wy * du);
                if p < 1.0 {
                    if let Some(f) = cutoffs.floor {
                        let bound = 0.5 * f.delta / (1.0 + yj).powf(f.sigma);
                        if !(w.abs() >= bound) {
                            return Err(Error::Hypothesis(format!(
                                "lower bound violated: |ω| = {:e} < δ/(2(1+y)^σ) = {bound:e} at (x = {}, y = {yj})",
                                w.abs(),
                                grid.x_nodes()[i]
                            )));
                        }
                    } else if w == 0.0 && du != 0.0 {
                        return Err(Error::Degenerate(format!(
                            "ω vanishes at (x = {}, y = {yj}) where ψ < 1",
                            grid.x_nodes()[i]
                        )));
                    }
                    let transport = if du == 0.0 { 0.0 } else { wy / w * du };
                    v += (1.0 - p) * (dw - transport);
                }
                g[[i, j]] = v;
            }
        }
        Ok(g)
    }
}

/// `h_j = χ(y − a) ∂ₓʲω / √(∂_yω)`; identically zero when the curve is absent.
pub fn compute_hj(
    grid: &SpectralGrid,
    omega: &Array2<f64>,
    j: usize,
    curve: &CriticalCurve,
    cutoffs: &Cutoffs,
) -> Result<Array2<f64>> {
    let fs = FieldSpectra::new(grid, omega, omega)?;
    fs.hj_from(&fs.dxj_omega(j), curve, cutoffs)
}

/// `g_j = (ψω + 1 − ψ)(∂ₓʲω − (∂_yω/ω) ∂ₓʲu)`.
pub fn compute_gj(
    grid: &SpectralGrid,
    omega: &Array2<f64>,
    u: &Array2<f64>,
    j: usize,
    cutoffs: &Cutoffs,
) -> Result<Array2<f64>> {
    let fs = FieldSpectra::new(grid, omega, u)?;
    fs.gj_from(&fs.dxj_omega(j), &fs.dxj_u(j), cutoffs)
}

/// `g̃_j = ∂ₓ^{j−5}(ω ∂ₓ⁵ω − ∂_yω ∂ₓ⁵u)`, zero for `j < 5`.
pub fn compute_tilde_gj(grid: &SpectralGrid, omega: &Array2<f64>, u: &Array2<f64>, j: usize) -> Result<Array2<f64>> {
    if j < TILDE_SHIFT {
        grid.check_shape(&omega.view())?;
        grid.check_shape(&u.view())?;
        return Ok(grid.zeros());
    }
    let fs = FieldSpectra::new(grid, omega, u)?;
    let seed = fs.tilde_seed()?;
    Ok(fs.tilde_from_seed(&seed, j))
}

/// The pair `(ḡ_k, ĝ_k)` with `ĝ_k = ω ∂ₓ^{k−1}∂_yω − ∂_yω ∂ₓ^{k−1}ω`, for `1 ≤ k ≤ 5`.
pub fn compute_bar_hat_g(
    grid: &SpectralGrid,
    omega: &Array2<f64>,
    u: &Array2<f64>,
    k: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if !(1..=TILDE_SHIFT).contains(&k) {
        return contract(format!("k = {k} outside 1..=5"));
    }
    let fs = FieldSpectra::new(grid, omega, u)?;
    let bar = fs.bar_g(k);
    let dxw = fs.dxj_omega(k - 1);
    let dxwy = if k == 1 { fs.omega_y.clone() } else { grid.dx(&fs.omega_y, k - 1)? };
    let hat = &fs.omega * &dxwy - &fs.omega_y * &dxw;
    Ok((bar, hat))
}

/// `C_j = −∂ₓʲu(x, y_split) / ω(x, y_split)` by cubic interpolation in y.
pub fn compute_cj(grid: &SpectralGrid, omega: &Array2<f64>, u: &Array2<f64>, j: usize, y_split: f64) -> Result<Array1<f64>> {
    let du = grid.dx(u, j)?;
    cj_from(grid, omega, &du, y_split)
}

pub(crate) fn cj_from(grid: &SpectralGrid, omega: &Array2<f64>, dxj_u: &Array2<f64>, y_split: f64) -> Result<Array1<f64>> {
    let w = grid.interp_at(omega, y_split, 4)?;
    let du = grid.interp_at(dxj_u, y_split, 4)?;
    let mut c = Array1::zeros(grid.nx());
    for i in 0..grid.nx() {
        if !(w[i].abs() >= 1e-10) {
            return Err(Error::Degenerate(format!(
                "|ω| = {:e} at y = {y_split}, x-node {i}",
                w[i].abs()
            )));
        }
        c[i] = -du[i] / w[i];
    }
    Ok(c)
}

/// Rebuilds `∂ₓʲu` from `g_j` column by column.
///
/// Below the curve `∂ₓʲu = ω ∫₀ʸ G`, above it `∂ₓʲu = ω ∫_{y_split}^y G − C_j ω`,
/// where `G = g_j / (ω (ψω + 1 − ψ))`. Nodes within the exclusion band around
/// the curve are filled by cubic interpolation across the band. Without a
/// critical curve the integral runs from 0 over the whole column.
pub fn reconstruct_dxju(
    grid: &SpectralGrid,
    gj: &Array2<f64>,
    omega: &Array2<f64>,
    curve: &CriticalCurve,
    cutoffs: &Cutoffs,
    cj: &Array1<f64>,
) -> Result<Array2<f64>> {
    grid.check_shape(&gj.view())?;
    grid.check_shape(&omega.view())?;
    let (nx, ny) = grid.shape();
    if curve.valid && (curve.a.len() != nx || cj.len() != nx) {
        return contract("curve or C_j does not match the grid");
    }
    let y = grid.y_nodes();
    let psi: Vec<f64> = y.iter().map(|&v| cutoffs.psi(v)).collect();
    let mut out = grid.zeros();
    for i in 0..nx {
        let w = omega.row(i);
        let lower_end = if curve.valid {
            let a = curve.a[i];
            y.iter().take_while(|&&v| v < a - cutoffs.exclusion_band).count()
        } else {
            ny
        };
        let upper_start = if curve.valid {
            let a = curve.a[i];
            y.iter().take_while(|&&v| v <= a + cutoffs.exclusion_band).count()
        } else {
            ny
        };
        let mut integrand = vec![0.0; ny];
        for j in (0..lower_end).chain(upper_start..ny) {
            let wj = w[j];
            let denom = wj * (psi[j] * wj + 1.0 - psi[j]);
            if denom == 0.0 {
                return Err(Error::Degenerate(format!(
                    "ω vanishes away from the curve at x-node {i}, y = {}",
                    y[j]
                )));
            }
            integrand[j] = gj[[i, j]] / denom;
        }
        if lower_end < 2 {
            return Err(Error::Hypothesis(format!("curve too close to the wall at x-node {i}")));
        }
        let low = grid.cumulative_segment_width(&integrand, 0, lower_end - 1, 0.0, RECON_WIDTH)?;
        for j in 0..lower_end {
            out[[i, j]] = w[j] * low[j];
        }
        if !curve.valid {
            continue;
        }
        if upper_start + 2 > ny || y[upper_start] > cutoffs.y_split {
            return Err(Error::Hypothesis(format!(
                "curve at x-node {i} leaves no room below y = {}",
                cutoffs.y_split
            )));
        }
        let high = grid.cumulative_segment_width(&integrand, upper_start, ny - 1, cutoffs.y_split, RECON_WIDTH)?;
        for j in upper_start..ny {
            out[[i, j]] = w[j] * (high[j - upper_start] - cj[i]);
        }
        if lower_end < 2 || upper_start + 2 > ny {
            continue;
        }
        let nodes = [y[lower_end - 2], y[lower_end - 1], y[upper_start], y[upper_start + 1]];
        let vals = [
            out[[i, lower_end - 2]],
            out[[i, lower_end - 1]],
            out[[i, upper_start]],
            out[[i, upper_start + 1]],
        ];
        for j in lower_end..upper_start {
            let l = lagrange_basis(&nodes, y[j]);
            out[[i, j]] = l.iter().zip(vals.iter()).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::curve::find_critical_curve;
    use crate::grid::GridConfig;

    fn grid(nx: usize, ny: usize) -> SpectralGrid {
        SpectralGrid::new(&GridConfig {
            nx,
            ny,
            ..GridConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn hj_for_linear_vorticity() {
        let g = grid(8, 257);
        let w = g.tabulate(|_, y| y - 1.0);
        let curve = find_critical_curve(&g, &w, 3.0).unwrap();
        let cut = Cutoffs::default();
        let h = compute_hj(&g, &w, 0, &curve, &cut).unwrap();
        for ((_, j), &v) in h.indexed_iter() {
            let y = g.y_nodes()[j];
            if (y - 1.0).abs() < 0.25 {
                assert!((v - (y - 1.0)).abs() < 1e-12);
            }
            if v != 0.0 {
                assert!(y > 0.0 && y < 3.0);
            }
        }
    }

    #[test]
    fn hj_rejects_nonpositive_slope_in_support() {
        let g = grid(8, 257);
        let w = g.tabulate(|_, y| (y - 1.0) * (1.8 - y));
        let curve = CriticalCurve {
            a: Array1::from_elem(8, 1.0),
            dy_omega_on_curve: Array1::from_elem(8, 0.2),
            valid: true,
        };
        let r = compute_hj(&g, &w, 0, &curve, &Cutoffs::default());
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn hj_zero_without_curve() {
        let g = grid(8, 65);
        let w = g.tabulate(|x, y| (1.0 + 0.1 * x.sin()) * (-y).exp());
        let h = compute_hj(&g, &w, 2, &CriticalCurve::absent(), &Cutoffs::default()).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn g0_in_psi_region() {
        let g = grid(8, 257);
        let w = g.tabulate(|_, y| y);
        let u = g.tabulate(|_, y| 0.5 * y * y);
        let cut = Cutoffs::default();
        let g0 = compute_gj(&g, &w, &u, 0, &cut).unwrap();
        for ((_, j), &v) in g0.indexed_iter() {
            let y = g.y_nodes()[j];
            if y < 3.5 {
                assert!((v - 0.5 * y * y).abs() < 1e-9, "y = {y}");
            }
        }
    }

    #[test]
    fn tilde_g_conventions() {
        let g = grid(16, 65);
        let w = g.tabulate(|x, y| (y - 1.0 - 0.2 * x.sin()) * (-y).exp());
        let u = g.tabulate(|x, y| x.cos() * y * (-y).exp());
        assert!(compute_tilde_gj(&g, &w, &u, 4).unwrap().iter().all(|&v| v == 0.0));
        let t5 = compute_tilde_gj(&g, &w, &u, 5).unwrap();
        let (bar5, _) = compute_bar_hat_g(&g, &w, &u, 5).unwrap();
        let diff = (&t5 - &bar5).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v));
        assert!(diff < 1e-9, "{diff}");
        let wf = g.tabulate(|_, y| (y - 1.0) * (-y).exp());
        let uf = g.tabulate(|_, y| y * (-y).exp());
        let t7 = compute_tilde_gj(&g, &wf, &uf, 7).unwrap();
        assert!(t7.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn hat_g_one_vanishes_exactly() {
        let g = grid(16, 65);
        let w = g.tabulate(|x, y| (y - 1.0 - 0.2 * x.sin()) * (-y).exp());
        let u = g.tabulate(|x, y| x.cos() * y * (-y).exp());
        let (_, hat) = compute_bar_hat_g(&g, &w, &u, 1).unwrap();
        assert!(hat.iter().all(|&v| v == 0.0));
        assert!(compute_bar_hat_g(&g, &w, &u, 6).is_err());
        assert!(compute_bar_hat_g(&g, &w, &u, 0).is_err());
    }

    #[test]
    fn cj_simple_values() {
        let g = grid(8, 129);
        let w = g.tabulate(|x, y| 2.0 + x.sin() + y);
        assert!(compute_cj(&g, &w, &g.zeros(), 2, 3.0).unwrap().iter().all(|&v| v == 0.0));
        let c = compute_cj(&g, &w, &w, 0, 3.0).unwrap();
        assert!(c.iter().all(|&v| (v + 1.0).abs() < 1e-12));
        assert!(matches!(
            compute_cj(&g, &g.zeros(), &w, 0, 3.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn reconstruction_round_trip_on_smooth_data() {
        let g = grid(16, 1025);
        let a = |x: f64| 1.5 + 0.3 * x.sin();
        let w = g.tabulate(|x, y| (y - a(x)) * (1.0 + y).powi(-5));
        let u = g.cumulative_y(&w, 0.0).unwrap();
        let cut = Cutoffs::default();
        let curve = find_critical_curve(&g, &w, 3.0).unwrap();
        for j in [0usize, 1, 3] {
            let fs = FieldSpectra::new(&g, &w, &u).unwrap();
            let du = fs.dxj_u(j);
            let gj = fs.gj_from(&fs.dxj_omega(j), &du, &cut).unwrap();
            let cj = cj_from(&g, &w, &du, 3.0).unwrap();
            let rec = reconstruct_dxju(&g, &gj, &w, &curve, &cut, &cj).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for ((i, k), &v) in du.indexed_iter() {
                if (g.y_nodes()[k] - curve.a[i]).abs() > 0.2 {
                    num += g.y_weights()[k] * (rec[[i, k]] - v).powi(2);
                    den += g.y_weights()[k] * v * v;
                }
            }
            let rel = (num / den).sqrt();
            assert!(rel < 1e-7, "j = {j}: {rel:e}");
        }
    }
}
