//! Initial vorticity profiles with a single non-degenerate critical curve
//! and polynomial decay.
//!
//! For a critical height `a = a₀(x)` the profile is
//! `ω₀ = A (y − a) φ(y/ℓ)` with `φ = exp(g)` and
//! `g(η) = −(m/4) ln(1 + η⁴) + b₁ (1 − e^{−η}) + b₃ η³ e^{−η} / 6`, `m = σ + 1`.
//! `b₁` makes `∂_yω₀` vanish at the wall, `b₃` matches `∂³_yω₀ = ω₀∂ₓω₀`
//! there, and the scale `ℓ(x)` is the root that makes `u₀ = ∫₀ʸ ω₀` vanish
//! at `y = L_y`. Monotone data drops the critical factor, uses `ℓ = a₀(x)`
//! and is normalized column by column to the outer velocity `u₀(L_y) = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use super::State;
use crate::error::{Error, Result};
use crate::functionals::find_critical_curve;
use crate::grid::stencil::GAUSS8;
use crate::grid::SpectralGrid;

/// Parameters of the generated initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSpec {
    /// Mean critical height.
    pub a0_mean: f64,
    /// Amplitude of the sinusoidal modulation of the critical height.
    pub a0_amp: f64,
    pub a0_mode: u32,
    pub a0_phase: f64,
    /// Decay rate: `|ω₀| ∼ (1+y)^{−σ}`.
    pub sigma: f64,
    /// Margin in the pointwise vorticity bounds.
    pub delta: f64,
    pub gamma: f64,
    pub s: usize,
    /// Positive vorticity without a critical curve.
    pub monotone: bool,
    /// Height above which the pointwise bounds are imposed.
    pub y_split: f64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            a0_mean: 1.5,
            a0_amp: 0.25,
            a0_mode: 1,
            a0_phase: 0.0,
            sigma: 3.0,
            delta: 1e-4,
            gamma: 1.0,
            s: 8,
            monotone: false,
            y_split: 3.0,
        }
    }
}

impl InitialDataSpec {
    /// Checks `s ≥ 8` even, `γ ≥ 1`, `σ ≥ γ + 1/2`, `δ > 0` and `0 < a₀ < y_split`.
    pub fn validate(&self) -> Result<()> {
        if self.s < 8 || self.s % 2 != 0 {
            return Err(Error::Range(format!("s = {} must be even and at least 8", self.s)));
        }
        if !(self.gamma >= 1.0) {
            return Err(Error::Range(format!("gamma = {} must be at least 1", self.gamma)));
        }
        if !(self.sigma >= self.gamma + 0.5) {
            return Err(Error::Range(format!(
                "sigma = {} violates sigma ≥ gamma + 1/2 = {}",
                self.sigma,
                self.gamma + 0.5
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Range(format!("delta = {} must be positive", self.delta)));
        }
        if !(self.y_split > 0.0) {
            return Err(Error::Range(format!("y_split = {} must be positive", self.y_split)));
        }
        let lo = self.a0_mean - self.a0_amp.abs();
        let hi = self.a0_mean + self.a0_amp.abs();
        if !(lo > 0.0 && hi < self.y_split) {
            return Err(Error::Range(format!(
                "critical height range [{lo}, {hi}] must lie inside (0, {})",
                self.y_split
            )));
        }
        if self.a0_mode == 0 && self.a0_amp != 0.0 {
            return Err(Error::Range("a0_mode must be positive when a0_amp ≠ 0".into()));
        }
        Ok(())
    }

    /// Critical height `a₀(x)`.
    pub fn a0(&self, x: f64) -> f64 {
        self.a0_mean + self.a0_amp * (self.a0_mode as f64 * x + self.a0_phase).sin()
    }

    pub fn a0_prime(&self, x: f64) -> f64 {
        let k = self.a0_mode as f64;
        self.a0_amp * k * (k * x + self.a0_phase).cos()
    }

    /// Overall amplitude `A = 1 / a0_mean`.
    pub fn amplitude(&self) -> f64 {
        1.0 / self.a0_mean
    }
}

#[derive(Debug, Clone, Copy)]
struct Profile {
    a: f64,
    ell: f64,
    b1: f64,
    b3: f64,
    m: f64,
    amp: f64,
    monotone: bool,
}

impl Profile {
    fn new(spec: &InitialDataSpec, x: f64, ell: f64) -> Self {
        let a = spec.a0(x);
        let amp = spec.amplitude();
        let (b1, b3) = if spec.monotone {
            (0.0, 0.0)
        } else {
            let b1 = ell / a;
            (b1, ell.powi(3) * (2.0 / a.powi(3) - amp * spec.a0_prime(x)) - b1)
        };
        Self {
            a,
            ell,
            b1,
            b3,
            m: spec.sigma + 1.0,
            amp,
            monotone: spec.monotone,
        }
    }

    fn phi(&self, y: f64) -> f64 {
        let e = y / self.ell;
        let en = (-e).exp();
        let g = -0.25 * self.m * (e.powi(4)).ln_1p() + self.b1 * (1.0 - en) + self.b3 * e.powi(3) / 6.0 * en;
        g.exp()
    }

    fn omega(&self, y: f64) -> f64 {
        if self.monotone {
            self.amp * self.phi(y)
        } else {
            self.amp * (y - self.a) * self.phi(y)
        }
    }

    /// `∫_{y_i}^{y_{i+1}} ω` on each grid interval (eight-point Gauss rule).
    fn interval_integrals(&self, y: &[f64]) -> Vec<f64> {
        y.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let half = 0.5 * (w[1] - w[0]);
                GAUSS8.iter().map(|&(g, gw)| gw * half * self.omega(mid + half * g)).sum()
            })
            .collect()
    }

    fn far_field(&self, y: &[f64]) -> f64 {
        self.interval_integrals(y).iter().sum()
    }
}

/// Scale `ℓ` making `∫₀^{L_y} ω₀ = 0` in the column at `x`.
fn solve_scale(spec: &InitialDataSpec, x: f64, y: &[f64]) -> Result<f64> {
    let f = |ell: f64| Profile::new(spec, x, ell).far_field(y);
    let n = 160;
    let (lo, hi): (f64, f64) = (0.3, 30.0);
    let grid: Vec<f64> = (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&e| f(e)).collect();
    let brackets: Vec<usize> = (0..n)
        .filter(|&i| vals[i].is_finite() && vals[i + 1].is_finite() && vals[i] * vals[i + 1] < 0.0)
        .collect();
    if brackets.len() != 1 {
        return Err(Error::Generation(format!(
            "far-field condition u(L_y) = 0 has {} scale roots at x = {x:.4}",
            brackets.len()
        )));
    }
    let (mut a, mut b) = (grid[brackets[0]], grid[brackets[0] + 1]);
    let mut fa = vals[brackets[0]];
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Extremes of the weighted vorticity bounds on `{y > y_split}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuantities {
    /// `min (1+y)^σ |ω|`.
    pub lower_min: f64,
    /// `max (1+y)^{σ+α₂} |∂^α ω|` for each multi-index in [`BoundQuantities::ALPHAS`].
    pub upper_max: [f64; 6],
}

impl BoundQuantities {
    /// Multi-indices `(α₁, α₂)` (x-order, y-order) with `|α| ≤ 2`.
    pub const ALPHAS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
}

/// Evaluates the weighted pointwise bounds of `ω` above `y_split`.
pub fn bound_quantities(grid: &SpectralGrid, omega: &Array2<f64>, sigma: f64, y_split: f64) -> Result<BoundQuantities> {
    grid.check_shape(&omega.view())?;
    let y = grid.y_nodes();
    let above: Vec<usize> = (0..grid.ny()).filter(|&j| y[j] > y_split).collect();
    let wx = grid.dx(omega, 1)?;
    let derivs = [
        omega.clone(),
        wx.clone(),
        grid.dy(omega, 1)?,
        grid.dx(omega, 2)?,
        grid.dy(&wx, 1)?,
        grid.dy(omega, 2)?,
    ];
    let mut lower_min = f64::INFINITY;
    let mut upper_max = [0.0f64; 6];
    for &j in &above {
        let w0 = (1.0 + y[j]).powf(sigma);
        for i in 0..grid.nx() {
            lower_min = lower_min.min(w0 * omega[[i, j]].abs());
            for (k, &(_, a2)) in BoundQuantities::ALPHAS.iter().enumerate() {
                let wk = (1.0 + y[j]).powf(sigma + a2 as f64);
                upper_max[k] = upper_max[k].max(wk * derivs[k][[i, j]].abs());
            }
        }
    }
    Ok(BoundQuantities { lower_min, upper_max })
}

/// Builds the state at `t = 0` and verifies the structural hypotheses on it.
pub fn make_initial_data(grid: Arc<SpectralGrid>, spec: &InitialDataSpec) -> Result<State> {
    spec.validate()?;
    let y: Vec<f64> = grid.y_nodes().to_vec();
    let x = grid.x_nodes().clone();
    let (nx, ny) = grid.shape();
    let mut u = Array2::zeros((nx, ny));
    let mut omega = Array2::zeros((nx, ny));
    let mut far = Array1::zeros(nx);
    for i in 0..nx {
        let ell = if spec.monotone { spec.a0(x[i]) } else { solve_scale(spec, x[i], &y)? };
        let p = Profile::new(spec, x[i], ell);
        let mut pieces = p.interval_integrals(&y);
        let scale = if spec.monotone { 1.0 / pieces.iter().sum::<f64>() } else { 1.0 };
        pieces.iter_mut().for_each(|v| *v *= scale);
        let mut acc = 0.0;
        for j in 0..ny {
            omega[[i, j]] = scale * p.omega(y[j]);
            if j > 0 {
                acc += pieces[j - 1];
            }
            u[[i, j]] = acc;
        }
        far[i] = acc;
    }
    let far_field = if spec.monotone {
        let mean = far.mean().unwrap_or(0.0);
        if far.iter().any(|v| (v - mean).abs() > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::Generation("monotone data must share one outer velocity".into()));
        }
        mean
    } else {
        let worst = far.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst >= 1e-8 {
            return Err(Error::Generation(format!("far-field velocity {worst:e} is not negligible")));
        }
        0.0
    };
    u.column_mut(ny - 1).fill(far_field);
    let state = State::from_parts(grid.clone(), 0.0, u, omega, far_field)?;

    let curve = find_critical_curve(&grid, &state.omega, spec.y_split)?;
    if spec.monotone == curve.valid {
        return Err(Error::Generation(if spec.monotone {
            "monotone data has a critical curve".into()
        } else {
            "no critical curve found".into()
        }));
    }
    if curve.valid {
        if let Some(v) = curve.dy_omega_on_curve.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::Generation(format!("degenerate critical point: ∂_yω = {v:e}")));
        }
    }

    let q = bound_quantities(&grid, &state.omega, spec.sigma, spec.y_split)?;
    if !(q.lower_min >= 2.0 * spec.delta) {
        return Err(Error::Generation(format!(
            "lower bound (1+y)^σ|ω| ≥ 2δ fails: min = {:e}, 2δ = {:e}",
            q.lower_min,
            2.0 * spec.delta
        )));
    }
    for (k, &(a1, a2)) in BoundQuantities::ALPHAS.iter().enumerate() {
        if !(q.upper_max[k] <= 0.5 / spec.delta) {
            return Err(Error::Generation(format!(
                "upper bound on ∂ₓ^{a1}∂_y^{a2}ω fails: max (1+y)^(σ+{a2})|∂^αω| = {:e} > 1/(2δ) = {:e}",
                q.upper_max[k],
                0.5 / spec.delta
            )));
        }
    }
    Ok(state)
}

/// A random member of the critical-curve family around `base`.
pub fn random_family_spec<R: Rng + ?Sized>(rng: &mut R, base: &InitialDataSpec) -> InitialDataSpec {
    let mean = Uniform::new(1.3, 1.7).expect("valid range").sample(rng);
    let amp = Uniform::new(0.0, 0.3).expect("valid range").sample(rng);
    let phase = Uniform::new(0.0, 2.0 * PI).expect("valid range").sample(rng);
    let mode = if rng.random_bool(0.5) { 1 } else { 2 };
    InitialDataSpec {
        a0_mean: mean,
        a0_amp: amp,
        a0_mode: mode,
        a0_phase: phase,
        monotone: false,
        ..base.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;

    fn grid(nx: usize, ny: usize) -> Arc<SpectralGrid> {
        Arc::new(
            SpectralGrid::new(&GridConfig {
                nx,
                ny,
                ..GridConfig::default()
            })
            .unwrap(),
        )
    }

    #[test]
    fn rejects_parameters_outside_admissible_set() {
        let base = InitialDataSpec::default();
        for bad in [
            InitialDataSpec { s: 6, ..base.clone() },
            InitialDataSpec { s: 9, ..base.clone() },
            InitialDataSpec { gamma: 0.5, ..base.clone() },
            InitialDataSpec { sigma: -1.0, ..base.clone() },
            InitialDataSpec { delta: 0.0, ..base.clone() },
            InitialDataSpec { a0_mean: 2.9, ..base.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Range(_))), "{bad:?}");
        }
        assert!(base.validate().is_ok());
    }

    #[test]
    fn constant_height_single_root() {
        let g = grid(8, 257);
        let spec = InitialDataSpec {
            a0_mean: 1.0,
            a0_amp: 0.0,
            sigma: 2.0,
            ..InitialDataSpec::default()
        };
        let st = make_initial_data(g.clone(), &spec).unwrap();
        let curve = find_critical_curve(&g, &st.omega, 3.0).unwrap();
        assert!(curve.valid);
        assert!(curve.a.iter().all(|a| (a - 1.0).abs() < 1e-6));
        assert!(curve.dy_omega_on_curve.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn wall_compatibility() {
        let g = grid(32, 1025);
        let spec = InitialDataSpec::default();
        let st = make_initial_data(g.clone(), &spec).unwrap();
        let wy = g.dy(&st.omega, 1).unwrap();
        assert!(wy.column(0).iter().all(|v| v.abs() < 1e-4));
        let d = st.diagnostics().unwrap();
        assert!(d.top_u < 1e-8 && d.omega_mismatch < 1e-6, "{d:?}");
    }

    #[test]
    fn monotone_flagged() {
        let g = grid(8, 257);
        let spec = InitialDataSpec {
            monotone: true,
            ..InitialDataSpec::default()
        };
        let st = make_initial_data(g.clone(), &spec).unwrap();
        assert!(st.omega.iter().all(|&w| w > 0.0));
        assert!(!find_critical_curve(&g, &st.omega, 3.0).unwrap().valid);
        assert!(st.far_field > 0.0);
    }

    #[test]
    fn bounds_hold_with_margin() {
        let g = grid(32, 257);
        let spec = InitialDataSpec::default();
        let st = make_initial_data(g.clone(), &spec).unwrap();
        let q = bound_quantities(&g, &st.omega, spec.sigma, spec.y_split).unwrap();
        assert!(q.lower_min >= 2.0 * spec.delta);
        assert!(q.upper_max.iter().all(|&v| v <= 0.5 / spec.delta));
    }
}
