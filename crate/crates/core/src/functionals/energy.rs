//! Gevrey-weighted energies and dissipations of one snapshot.
//!
//! Every family below is a `τ`-independent sequence indexed by `j`; the
//! energies at a given radius are weighted `l²(τ)` sums of these sequences,
//! so one snapshot can be re-evaluated along any `τ` schedule.

use ndarray::Array2;
use rayon::prelude::*;

use super::auxiliary::{cj_from, FieldSpectra};
use super::curve::CriticalCurve;
use super::cutoffs::Cutoffs;
use crate::error::{contract, Error, Result};
use crate::fields::{State, YDerivatives, MAX_Y_ORDER};
use crate::gevrey::{dtau_lp2, l2_tau_squared, GevreySeq, GevreyWeight, MIN_J_MAX};
use crate::grid::SpectralGrid;

/// Truncation and Sobolev parameters of the energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Polynomial weight exponent `γ`.
    pub gamma: f64,
    /// Number of y-derivatives `s` in `𝓗ʲ_γ`.
    pub s: usize,
    pub j_max: usize,
    /// Norms integrate over `0 ≤ y ≤ y_window`, away from the truncation boundary.
    pub y_window: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            s: 8,
            j_max: 48,
            y_window: 30.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return contract(format!("γ = {} must be nonnegative", self.gamma));
        }
        if self.s + 1 > MAX_Y_ORDER {
            return contract(format!("s = {} exceeds the y-derivative depth", self.s));
        }
        if !(self.y_window > 0.0) {
            return contract(format!("y_window = {} must be positive", self.y_window));
        }
        if self.j_max < MIN_J_MAX {
            return contract(format!("j_max = {} below {MIN_J_MAX}", self.j_max));
        }
        Ok(())
    }
}

/// Per-`j` norms of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyFamilies {
    pub t: f64,
    /// `‖ω‖_{𝓗ʲ_γ}`.
    pub calh: GevreySeq,
    /// `‖ω‖_{𝓗̇ʲ_γ}`.
    pub calh_dot: GevreySeq,
    /// `‖(1+y)^γ ∂ₓʲω‖`, the part of `𝓗ʲ_γ` missing from `𝓗̇ʲ_γ`.
    pub x_part: GevreySeq,
    /// `‖∂_yω‖_{𝓗̇ʲ_γ}`.
    pub d_dot_omega: GevreySeq,
    /// `‖h_j‖`.
    pub h: GevreySeq,
    /// `‖∂_y h_j‖`.
    pub d_h: GevreySeq,
    /// `‖(1+y)^γ g_j‖`.
    pub g1: GevreySeq,
    /// `‖(1+y)^γ ∂_y g_j‖`.
    pub d_g1: GevreySeq,
    /// `(j+1)^{3/4} ‖g̃_j‖`.
    pub g2: GevreySeq,
    /// `j^{3/4} ‖∂_y g̃_j‖`.
    pub d_g2: GevreySeq,
    /// `‖∂ₓʲω‖`.
    pub dxj_omega: GevreySeq,
    /// `‖g_j‖_{L²(y ≤ y_split)}`.
    pub g_low: GevreySeq,
    /// `‖g̃_j‖_{L²(y ≤ y_split)}`.
    pub tilde_low: GevreySeq,
    /// `‖∂_y^l g̃_j‖` for `l = 0, 1, 2`.
    pub tilde_dy: [GevreySeq; 3],
    /// `‖√χ^{ε,a} ∂_y(g̃_j − g_j)‖`, with `ε = chi_r2`.
    pub tilde_gap: GevreySeq,
    /// `‖C_j‖_{L²(T)}` and `‖∂ₓC_j‖_{L²(T)}`, absent when `ω(·, y_split)` vanishes.
    pub cj: Option<(GevreySeq, GevreySeq)>,
}

#[derive(Default, Clone, Copy)]
struct Row {
    calh: f64,
    calh_dot: f64,
    x_part: f64,
    d_dot_omega: f64,
    h: f64,
    d_h: f64,
    g1: f64,
    d_g1: f64,
    g2: f64,
    d_g2: f64,
    dxj_omega: f64,
    g_low: f64,
    tilde_low: f64,
    tilde_dy: [f64; 3],
    tilde_gap: f64,
    cj: Option<(f64, f64)>,
}

impl Row {
    fn named(&self) -> [(&'static str, f64); 17] {
        [
            ("calH", self.calh),
            ("calH_dot", self.calh_dot),
            ("x_part", self.x_part),
            ("D_dot_omega", self.d_dot_omega),
            ("h", self.h),
            ("D_h", self.d_h),
            ("g1", self.g1),
            ("D_g1", self.d_g1),
            ("g2", self.g2),
            ("D_g2", self.d_g2),
            ("dxj_omega", self.dxj_omega),
            ("g_low", self.g_low),
            ("tilde_low", self.tilde_low),
            ("tilde_dy0", self.tilde_dy[0]),
            ("tilde_dy1", self.tilde_dy[1]),
            ("tilde_dy2", self.tilde_dy[2]),
            ("tilde_gap", self.tilde_gap),
        ]
    }
}

/// `(Σ w_k ρ_k² f_ik²)^{1/2}` with a per-node weight `rho2`.
fn masked_norm(grid: &SpectralGrid, f: &Array2<f64>, rho2: &Array2<f64>) -> f64 {
    let w = grid.y_weights();
    let mut acc = 0.0;
    for ((i, j), &v) in f.indexed_iter() {
        acc += w[j] * rho2[[i, j]] * v * v;
    }
    (acc * grid.x_period() / grid.nx() as f64).sqrt()
}

impl EnergyFamilies {
    /// Evaluates every family on `state` for `j = 0..=j_max`.
    pub fn compute(state: &State, curve: &CriticalCurve, cutoffs: &Cutoffs, params: &EnergyParams) -> Result<Self> {
        params.validate()?;
        cutoffs.validate()?;
        let grid: &SpectralGrid = &state.grid;
        let fs = FieldSpectra::new(grid, &state.omega, &state.u)?;
        let ytab = YDerivatives::new(grid, &state.omega, params.s + 1)?;
        let seed = fs.tilde_seed()?;
        let (nx, ny) = grid.shape();
        let y = grid.y_nodes();
        let win = y.mapv(|v| if v <= params.y_window { 1.0 } else { 0.0 });
        let rho_g = grid.one_plus_y_pow(params.gamma) * &win;
        let rho2_g = rho_g.mapv(|r| r * r);
        let low_mask = y.mapv(|v| if v <= cutoffs.y_split { 1.0 } else { 0.0 });
        let chi_eps = Array2::from_shape_fn((nx, ny), |(i, j)| {
            if curve.valid {
                cutoffs.chi_eps(y[j] - curve.a[i], cutoffs.chi_r2)
            } else {
                0.0
            }
        });
        let gamma = params.gamma;
        let s = params.s;

        let rows: Vec<Result<Row>> = (0..=params.j_max)
            .into_par_iter()
            .map(|j| -> Result<Row> {
                let mut r = Row {
                    calh: ytab.calh_sq_masked(j, gamma, s, false, 0, Some(&win))?.sqrt(),
                    x_part: ytab.x_derivative_sq(0, j, Some(&rho2_g)).sqrt(),
                    ..Row::default()
                };
                if j > 0 {
                    r.calh_dot = ytab.calh_sq_masked(j, gamma, s, true, 0, Some(&win))?.sqrt();
                    r.d_dot_omega = ytab.calh_sq_masked(j, gamma, s, true, 1, Some(&win))?.sqrt();
                }
                let dw = fs.dxj_omega(j);
                let du = fs.dxj_u(j);
                r.dxj_omega = grid.weighted_l2_norm(&dw, Some(&win));

                let h = fs.hj_from(&dw, curve, cutoffs)?;
                r.h = grid.weighted_l2_norm(&h, Some(&win));
                r.d_h = grid.weighted_l2_norm(&grid.dy(&h, 1)?, Some(&win));

                let g = fs.gj_from(&dw, &du, cutoffs)?;
                let gy = grid.dy(&g, 1)?;
                r.g1 = grid.weighted_l2_norm(&g, Some(&rho_g));
                r.d_g1 = grid.weighted_l2_norm(&gy, Some(&rho_g));
                r.g_low = grid.weighted_l2_norm(&g, Some(&low_mask));

                let gt = fs.tilde_from_seed(&seed, j);
                let gty = grid.dy(&gt, 1)?;
                let gtyy = grid.dy(&gt, 2)?;
                let jf = j as f64;
                r.g2 = (jf + 1.0).powf(0.75) * grid.weighted_l2_norm(&gt, Some(&win));
                r.d_g2 = jf.powf(0.75) * grid.weighted_l2_norm(&gty, Some(&win));
                r.tilde_low = grid.weighted_l2_norm(&gt, Some(&low_mask));
                r.tilde_dy = [grid.weighted_l2_norm(&gt, Some(&win)), grid.weighted_l2_norm(&gty, Some(&win)), grid.weighted_l2_norm(&gtyy, Some(&win))];
                r.tilde_gap = masked_norm(grid, &(&gty - &gy), &chi_eps);

                r.cj = match cj_from(grid, &state.omega, &du, cutoffs.y_split) {
                    Ok(c) => {
                        let dc = grid.dx_line(c.view(), 1)?;
                        Some((grid.x_l2(c.view()), grid.x_l2(dc.view())))
                    }
                    Err(Error::Degenerate(_)) => None,
                    Err(e) => return Err(e),
                };

                for (family, v) in r.named() {
                    if !v.is_finite() {
                        return Err(Error::NonFinite { family, j });
                    }
                }
                if let Some((a, b)) = r.cj {
                    if !a.is_finite() {
                        return Err(Error::NonFinite { family: "C_j", j });
                    }
                    if !b.is_finite() {
                        return Err(Error::NonFinite { family: "dx_C_j", j });
                    }
                }
                Ok(r)
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<Row>>>()?;

        let seq = |f: &dyn Fn(&Row) -> f64| GevreySeq::new(rows.iter().map(f).collect());
        let cj = if rows.iter().all(|r| r.cj.is_some()) {
            Some((
                seq(&|r| r.cj.expect("checked").0)?,
                seq(&|r| r.cj.expect("checked").1)?,
            ))
        } else {
            None
        };
        Ok(Self {
            t: state.t,
            calh: seq(&|r| r.calh)?,
            calh_dot: seq(&|r| r.calh_dot)?,
            x_part: seq(&|r| r.x_part)?,
            d_dot_omega: seq(&|r| r.d_dot_omega)?,
            h: seq(&|r| r.h)?,
            d_h: seq(&|r| r.d_h)?,
            g1: seq(&|r| r.g1)?,
            d_g1: seq(&|r| r.d_g1)?,
            g2: seq(&|r| r.g2)?,
            d_g2: seq(&|r| r.d_g2)?,
            dxj_omega: seq(&|r| r.dxj_omega)?,
            g_low: seq(&|r| r.g_low)?,
            tilde_low: seq(&|r| r.tilde_low)?,
            tilde_dy: [
                seq(&|r| r.tilde_dy[0])?,
                seq(&|r| r.tilde_dy[1])?,
                seq(&|r| r.tilde_dy[2])?,
            ],
            tilde_gap: seq(&|r| r.tilde_gap)?,
            cj,
        })
    }
}

/// All energies, dissipations and exact `∂_τ` values at one `(t, τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    pub tau: f64,
    pub alpha: f64,
    pub e_omega: f64,
    pub e_dot_omega: f64,
    /// `E_ω − Ė_ω`, summed directly from its own family.
    pub e_x: f64,
    pub e_h: f64,
    pub e_g1: f64,
    pub e_g2: f64,
    /// `𝓔(α) = Ė_ω + E_h + E¹_g + α E²_g`.
    pub cal_e: f64,
    pub d_dot_omega: f64,
    pub d_h: f64,
    pub d_g1: f64,
    pub d_g2: f64,
    pub dtau_e_omega: f64,
    pub dtau_e_dot_omega: f64,
    pub dtau_e_x: f64,
    pub dtau_e_h: f64,
    pub dtau_e_g1: f64,
    pub dtau_e_g2: f64,
    pub dtau_cal_e: f64,
    /// Maximum-principle slack, filled in by trajectory monitors.
    pub lower_margin: Option<f64>,
    pub upper_margin: Option<f64>,
}

impl EnergyReport {
    pub fn from_families(fam: &EnergyFamilies, w: &GevreyWeight, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return contract(format!("α = {alpha} must be nonnegative"));
        }
        let e = |s: &GevreySeq| l2_tau_squared(s, w);
        let dt = |s: &GevreySeq| dtau_lp2(s, w).map(|r| r.exact);
        let r = Self {
            t: fam.t,
            tau: w.tau,
            alpha,
            e_omega: e(&fam.calh),
            e_dot_omega: e(&fam.calh_dot),
            e_x: e(&fam.x_part),
            e_h: e(&fam.h),
            e_g1: e(&fam.g1),
            e_g2: e(&fam.g2),
            cal_e: e(&fam.calh_dot) + e(&fam.h) + e(&fam.g1) + alpha * e(&fam.g2),
            d_dot_omega: e(&fam.d_dot_omega),
            d_h: e(&fam.d_h),
            d_g1: e(&fam.d_g1),
            d_g2: e(&fam.d_g2),
            dtau_e_omega: dt(&fam.calh)?,
            dtau_e_dot_omega: dt(&fam.calh_dot)?,
            dtau_e_x: dt(&fam.x_part)?,
            dtau_e_h: dt(&fam.h)?,
            dtau_e_g1: dt(&fam.g1)?,
            dtau_e_g2: dt(&fam.g2)?,
            dtau_cal_e: dt(&fam.calh_dot)? + dt(&fam.h)? + dt(&fam.g1)? + alpha * dt(&fam.g2)?,
            lower_margin: None,
            upper_margin: None,
        };
        let checks = [
            ("E_omega", r.e_omega),
            ("E_dot_omega", r.e_dot_omega),
            ("E_h", r.e_h),
            ("E_g1", r.e_g1),
            ("E_g2", r.e_g2),
            ("calE", r.cal_e),
            ("dtau_calE", r.dtau_cal_e),
        ];
        for (family, v) in checks {
            if !v.is_finite() {
                return Err(Error::NonFinite { family, j: 0 });
            }
        }
        Ok(r)
    }
}

/// Energies of `state` at radius `w.tau`.
pub fn energies(
    state: &State,
    curve: &CriticalCurve,
    cutoffs: &Cutoffs,
    w: &GevreyWeight,
    alpha: f64,
    params: &EnergyParams,
) -> Result<EnergyReport> {
    let fam = EnergyFamilies::compute(state, curve, cutoffs, params)?;
    EnergyReport::from_families(&fam, w, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_initial_data, InitialDataSpec};
    use crate::functionals::find_critical_curve;
    use crate::grid::GridConfig;
    use std::sync::Arc;

    fn small_grid() -> Arc<SpectralGrid> {
        Arc::new(
            SpectralGrid::new(&GridConfig {
                nx: 16,
                ny: 129,
                ..GridConfig::default()
            })
            .unwrap(),
        )
    }

    fn params() -> EnergyParams {
        EnergyParams {
            j_max: 12,
            ..EnergyParams::default()
        }
    }

    #[test]
    fn zero_state_has_zero_energies() {
        let g = small_grid();
        let st = State::zero(g);
        let c = CriticalCurve::absent();
        let w = GevreyWeight::standard(1.0).unwrap();
        let r = energies(&st, &c, &Cutoffs::default(), &w, 0.1, &params()).unwrap();
        assert_eq!(r.e_omega, 0.0);
        assert_eq!(r.cal_e, 0.0);
        assert_eq!(r.dtau_cal_e, 0.0);
        assert_eq!(r.d_h, 0.0);
    }

    #[test]
    fn generated_data_energies() {
        let g = small_grid();
        let st = make_initial_data(g.clone(), &InitialDataSpec::default()).unwrap();
        let c = find_critical_curve(&g, &st.omega, 3.0).unwrap();
        let w = GevreyWeight::standard(1.0).unwrap();
        let fam = EnergyFamilies::compute(&st, &c, &Cutoffs::default(), &params()).unwrap();
        let r = EnergyReport::from_families(&fam, &w, 0.1).unwrap();
        assert!(r.e_dot_omega < r.e_omega);
        assert!(r.e_h > 0.0 && r.e_g1 > 0.0 && r.e_g2 > 0.0);
        assert!(((r.e_omega - r.e_dot_omega) - r.e_x).abs() <= 1e-10 * r.e_omega);
        let parts = r.dtau_e_dot_omega + r.dtau_e_h + r.dtau_e_g1 + 0.1 * r.dtau_e_g2;
        assert!((r.dtau_cal_e - parts).abs() <= 1e-12 * r.dtau_cal_e);
        assert!(fam.cj.is_some());
    }

    #[test]
    fn monotone_data_has_no_hydrostatic_energy() {
        let g = small_grid();
        let spec = InitialDataSpec {
            monotone: true,
            ..InitialDataSpec::default()
        };
        let st = make_initial_data(g.clone(), &spec).unwrap();
        let c = find_critical_curve(&g, &st.omega, 3.0).unwrap();
        let w = GevreyWeight::standard(1.0).unwrap();
        let r = energies(&st, &c, &Cutoffs::default(), &w, 0.1, &params()).unwrap();
        assert_eq!(r.e_h, 0.0);
        assert!(r.e_g1 > 0.0 && r.e_dot_omega > 0.0);
    }

    #[test]
    fn hydrostatic_energy_ignores_far_field() {
        let g = small_grid();
        let st = make_initial_data(g.clone(), &InitialDataSpec::default()).unwrap();
        let c = find_critical_curve(&g, &st.omega, 3.0).unwrap();
        let mut far = st.clone();
        let bump = g.tabulate_y(|y| if y > 4.0 { 0.3 * (1.0 - (-(y - 4.0)).exp()) } else { 0.0 });
        for mut row in far.omega.outer_iter_mut() {
            for (v, b) in row.iter_mut().zip(bump.iter()) {
                *v *= 1.0 + b;
            }
        }
        let cut = Cutoffs::default();
        let a = EnergyFamilies::compute(&st, &c, &cut, &params()).unwrap();
        let b = EnergyFamilies::compute(&far, &c, &cut, &params()).unwrap();
        assert_eq!(a.h, b.h);
    }
}
