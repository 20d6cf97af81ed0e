//! Discrete state `(u, v, ω)`, recovery of `v` from incompressibility,
//! weighted Sobolev norms, functional inequalities and initial data.

mod inequalities;
mod initial;
mod norms;

use std::sync::Arc;

use ndarray::{s, Array2};

pub use inequalities::{hardy_check, sobolev_check, HardyReport, HardyVariant, SobolevReport};
pub use initial::{
    bound_quantities, make_initial_data, random_family_spec, BoundQuantities, InitialDataSpec,
};
pub use norms::{calh_norm, sobolev_weighted_norm, sobolev_weighted_norm_profile, YDerivatives, MAX_Y_ORDER};

use crate::error::{contract, Result};
use crate::grid::SpectralGrid;

/// Velocity and vorticity on the grid at one time.
#[derive(Debug, Clone)]
pub struct State {
    pub t: f64,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub omega: Array2<f64>,
    pub grid: Arc<SpectralGrid>,
    /// Value of `u` imposed at `y = L_y` (zero unless the outer flow is nonzero).
    pub far_field: f64,
}

/// Size of each state invariant on a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics {
    pub wall_u: f64,
    pub wall_v: f64,
    /// `max |u(·, L_y) − far_field|`.
    pub top_u: f64,
    /// `‖∂_y u − ω‖ / max(‖ω‖, 1)`.
    pub omega_mismatch: f64,
    /// `‖∂ₓu + ∂_y v‖ / max(‖∂ₓu‖, 1)`.
    pub divergence: f64,
}

impl State {
    /// Builds a state from `u` alone: walls are enforced, `ω = ∂_y u` and `v` recovered.
    pub fn from_u(grid: Arc<SpectralGrid>, t: f64, mut u: Array2<f64>, far_field: f64) -> Result<Self> {
        grid.check_shape(&u.view())?;
        let ny = grid.ny();
        u.slice_mut(s![.., 0]).fill(0.0);
        u.slice_mut(s![.., ny - 1]).fill(far_field);
        let omega = grid.dy(&u, 1)?;
        let v = recover_v(&grid, &u)?;
        Ok(Self {
            t,
            u,
            v,
            omega,
            grid,
            far_field,
        })
    }

    /// Builds a state from a consistent pair `(u, ω)`.
    pub fn from_parts(
        grid: Arc<SpectralGrid>,
        t: f64,
        mut u: Array2<f64>,
        omega: Array2<f64>,
        far_field: f64,
    ) -> Result<Self> {
        grid.check_shape(&u.view())?;
        grid.check_shape(&omega.view())?;
        u.slice_mut(s![.., 0]).fill(0.0);
        let v = recover_v(&grid, &u)?;
        Ok(Self {
            t,
            u,
            v,
            omega,
            grid,
            far_field,
        })
    }

    /// The zero state.
    pub fn zero(grid: Arc<SpectralGrid>) -> Self {
        let z = grid.zeros();
        Self {
            t: 0.0,
            u: z.clone(),
            v: z.clone(),
            omega: z,
            grid,
            far_field: 0.0,
        }
    }

    pub fn diagnostics(&self) -> Result<StateDiagnostics> {
        let g = &self.grid;
        let ny = g.ny();
        let maxabs = |it: ndarray::ArrayView1<f64>, shift: f64| it.iter().fold(0.0f64, |m, v| m.max((v - shift).abs()));
        let dyu = g.dy(&self.u, 1)?;
        let mismatch = g.l2_norm(&(&dyu - &self.omega)) / g.l2_norm(&self.omega).max(1.0);
        let dxu = g.dx(&self.u, 1)?;
        let div = g.l2_norm(&(&dxu + &g.dy(&self.v, 1)?)) / g.l2_norm(&dxu).max(1.0);
        Ok(StateDiagnostics {
            wall_u: maxabs(self.u.column(0), 0.0),
            wall_v: maxabs(self.v.column(0), 0.0),
            top_u: maxabs(self.u.column(ny - 1), self.far_field),
            omega_mismatch: mismatch,
            divergence: div,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(self.omega.iter()).all(|v| v.is_finite())
    }
}

/// `v = −∫₀ʸ ∂ₓu dy'`, with `v(·, 0) = 0` exactly.
pub fn recover_v(grid: &SpectralGrid, u: &Array2<f64>) -> Result<Array2<f64>> {
    grid.check_shape(&u.view())?;
    if u.column(0).iter().any(|&v| v != 0.0) {
        return contract("recover_v needs u = 0 at the wall");
    }
    let dxu = grid.dx(u, 1)?;
    let mut v = grid.cumulative_y(&dxu, 0.0)?;
    v.mapv_inplace(|x| -x);
    v.slice_mut(s![.., 0]).fill(0.0);
    Ok(v)
}
