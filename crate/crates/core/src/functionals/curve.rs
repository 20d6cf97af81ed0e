//! The critical curve `a(x)` where the vorticity changes sign.

use ndarray::{Array1, Array2};

use crate::error::{contract, Error, Result};
use crate::grid::SpectralGrid;

/// Interpolation width used for root finding and derivatives on the curve.
const ROOT_WIDTH: usize = 6;

/// Smallest `|∂_yω|` on the curve accepted by the curve ODE.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// Zero set of `ω` in `y`, one height per x node.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCurve {
    pub a: Array1<f64>,
    pub dy_omega_on_curve: Array1<f64>,
    /// False for data without a sign change; `a` is then empty.
    pub valid: bool,
}

impl CriticalCurve {
    pub fn absent() -> Self {
        Self {
            a: Array1::zeros(0),
            dy_omega_on_curve: Array1::zeros(0),
            valid: false,
        }
    }

    pub fn min_height(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_height(&self) -> f64 {
        self.a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Root of the local interpolant of `f` in `[y[p], y[p+1]]` by bisection.
fn bisect_root(grid: &SpectralGrid, f: ndarray::ArrayView1<f64>, p: usize) -> Result<f64> {
    let y = grid.y_nodes();
    let (mut lo, mut hi) = (y[p], y[p + 1]);
    let mut f_lo = f[p];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v, _) = grid.interp_profile(f, mid, ROOT_WIDTH)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if (v < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = v;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the single sign change of every column of `omega` below `y_split`.
pub fn find_critical_curve(grid: &SpectralGrid, omega: &Array2<f64>, y_split: f64) -> Result<CriticalCurve> {
    grid.check_shape(&omega.view())?;
    let y = grid.y_nodes();
    let top = y.iter().take_while(|&&v| v <= y_split).count();
    if top < 2 {
        return contract(format!("y_split = {y_split} leaves fewer than two nodes below it"));
    }
    let nx = grid.nx();
    let mut roots: Vec<Option<(usize, usize)>> = Vec::with_capacity(nx);
    for (i, col) in omega.outer_iter().enumerate() {
        let mut found = None;
        let mut count = 0;
        let mut last: Option<usize> = None;
        for q in 0..top {
            if col[q] == 0.0 {
                continue;
            }
            if let Some(l) = last {
                if (col[l] < 0.0) != (col[q] < 0.0) {
                    count += 1;
                    found.get_or_insert((l, q));
                }
            }
            last = Some(q);
        }
        if count > 1 {
            return Err(Error::Hypothesis(format!(
                "column {i} has {count} sign changes below y = {y_split}"
            )));
        }
        roots.push(found);
    }
    let with_root = roots.iter().filter(|r| r.is_some()).count();
    if with_root == 0 {
        return Ok(CriticalCurve::absent());
    }
    if with_root < nx {
        return Err(Error::Hypothesis(format!(
            "{with_root} of {nx} columns have a critical point"
        )));
    }
    let mut a = Array1::zeros(nx);
    let mut dy = Array1::zeros(nx);
    for (i, col) in omega.outer_iter().enumerate() {
        let (l, q) = roots[i].expect("every column has a root");
        let r = if q == l + 1 { bisect_root(grid, col, l)? } else { y[l + 1] };
        a[i] = r;
        dy[i] = grid.interp_profile(col, r, ROOT_WIDTH)?.1;
    }
    Ok(CriticalCurve {
        a,
        dy_omega_on_curve: dy,
        valid: true,
    })
}

/// One Heun step of `∂_t a = −∂_tω(a) / ∂_yω(a)`.
///
/// `dt_omega` is the time derivative of `omega` over the step; the predictor
/// stage evaluates `∂_yω` on `ω + dt·∂_tω`.
pub fn evolve_critical_curve(
    grid: &SpectralGrid,
    curve: &CriticalCurve,
    omega: &Array2<f64>,
    dt_omega: &Array2<f64>,
    dt: f64,
) -> Result<CriticalCurve> {
    if !curve.valid {
        return contract("cannot evolve an absent critical curve");
    }
    grid.check_shape(&omega.view())?;
    grid.check_shape(&dt_omega.view())?;
    if curve.a.len() != grid.nx() {
        return contract("critical curve does not match the grid");
    }
    let ahead = omega + &(dt_omega * dt);
    let nx = grid.nx();
    let mut a = Array1::zeros(nx);
    let mut dy = Array1::zeros(nx);
    for i in 0..nx {
        let a0 = curve.a[i];
        let w_now = omega.row(i);
        let w_next = ahead.row(i);
        let wt = dt_omega.row(i);
        let slope = |w: ndarray::ArrayView1<f64>, z: f64| -> Result<f64> {
            let d = grid.interp_profile(w, z, ROOT_WIDTH)?.1;
            if !(d.abs() >= DEGENERACY_THRESHOLD) {
                return Err(Error::Degenerate(format!(
                    "∂_yω = {d:e} on the critical curve at x-node {i}"
                )));
            }
            Ok(d)
        };
        let k1 = -grid.interp_profile(wt, a0, ROOT_WIDTH)?.0 / slope(w_now, a0)?;
        let a_star = a0 + dt * k1;
        let k2 = -grid.interp_profile(wt, a_star, ROOT_WIDTH)?.0 / slope(w_next, a_star)?;
        a[i] = a0 + 0.5 * dt * (k1 + k2);
        dy[i] = slope(w_next, a[i])?;
    }
    Ok(CriticalCurve {
        a,
        dy_omega_on_curve: dy,
        valid: true,
    })
}
