//! Trajectory diagnostics: energy decay along a shrinking Gevrey radius,
//! pointwise vorticity margins, and the gap between two nearby runs.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{contract, Error, Result};
use crate::fields::State;
use crate::functionals::{find_critical_curve, Cutoffs, EnergyFamilies, EnergyParams, EnergyReport};
use crate::gevrey::GevreyWeight;
use crate::grid::SpectralGrid;
use crate::solver::{Integrator, Observer, SolverConfig};

/// Upper end of the minimal-`C` search.
pub const C_SEARCH_MAX: f64 = 64.0;
/// Bisection steps of the minimal-`C` search.
pub const C_SEARCH_ITERATIONS: usize = 20;
/// Per-sample relative slack in the non-increase test.
pub const DECAY_SLACK: f64 = 1e-6;

/// Linearly shrinking radius `τ(t) = τ̃₀ − C t`, floored at `tau_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSchedule {
    pub tau0: f64,
    pub c: f64,
    pub tau_min: f64,
}

impl TauSchedule {
    /// Schedule with the default floor `τ̃₀/2`.
    pub fn new(tau0: f64, c: f64) -> Result<Self> {
        let s = Self {
            tau0,
            c,
            tau_min: 0.5 * tau0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return Err(Error::Range(format!("tau0 = {} must be positive", self.tau0)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::Range(format!("shrink rate C = {} must be nonnegative", self.c)));
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau0) {
            return Err(Error::Range(format!("tau_min = {} must lie in (0, tau0]", self.tau_min)));
        }
        Ok(())
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.tau0 - self.c * t
    }

    /// Last time at which `τ(t) ≥ tau_min`.
    pub fn floor_time(&self) -> f64 {
        if self.c == 0.0 {
            f64::INFINITY
        } else {
            (self.tau0 - self.tau_min) / self.c
        }
    }

    /// Run length `min(t_end, (τ̃₀ − tau_min)/C)`.
    pub fn horizon(&self, t_end: f64) -> f64 {
        t_end.min(self.floor_time())
    }
}

/// Observer that stores the energy families of every sample.
pub struct FamilyRecorder {
    pub cutoffs: Cutoffs,
    pub params: EnergyParams,
    pub families: Vec<EnergyFamilies>,
}

impl FamilyRecorder {
    pub fn new(cutoffs: Cutoffs, params: EnergyParams) -> Self {
        Self {
            cutoffs,
            params,
            families: Vec::new(),
        }
    }
}

impl Observer for FamilyRecorder {
    fn observe(&mut self, state: &State) -> Result<()> {
        let curve = find_critical_curve(&state.grid, &state.omega, self.cutoffs.y_split)?;
        self.families
            .push(EnergyFamilies::compute(state, &curve, &self.cutoffs, &self.params)?);
        Ok(())
    }
}

/// `𝓔(α)` of each sample at the radius the schedule assigns to it.
pub fn scheduled_series(families: &[EnergyFamilies], schedule: &TauSchedule, base: &GevreyWeight, alpha: f64) -> Result<Vec<EnergyReport>> {
    families
        .iter()
        .filter(|f| f.t <= schedule.floor_time() * (1.0 + 1e-12))
        .map(|f| EnergyReport::from_families(f, &base.with_tau(schedule.tau(f.t))?, alpha))
        .collect()
}

fn non_increasing(series: &[EnergyReport]) -> bool {
    series
        .windows(2)
        .all(|w| w[1].cal_e <= w[0].cal_e + DECAY_SLACK * w[0].cal_e.abs())
}

/// Outcome of the minimal-`C` search.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTrace {
    /// Smallest `C` found, `None` if even `C = 64` fails.
    pub minimal_c: Option<f64>,
    /// `𝓔` along the schedule with the minimal `C` (or `C = 64`).
    pub series: Vec<EnergyReport>,
}

impl DecayTrace {
    pub fn decay_ok(&self) -> bool {
        self.minimal_c.is_some()
    }
}

/// Bisects for the smallest `C ∈ [0, 64]` making `𝓔(α, t, τ̃₀ − Ct)` non-increasing.
pub fn decay_trace(families: &[EnergyFamilies], tau0: f64, base: &GevreyWeight, alpha: f64) -> Result<DecayTrace> {
    if families.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay trace needs at least 3 samples, got {}",
            families.len()
        )));
    }
    if families.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return contract("samples must be ordered in time");
    }
    let eval = |c: f64| -> Result<(bool, Vec<EnergyReport>)> {
        let s = scheduled_series(families, &TauSchedule::new(tau0, c)?, base, alpha)?;
        Ok((non_increasing(&s), s))
    };
    let (ok0, s0) = eval(0.0)?;
    if ok0 {
        return Ok(DecayTrace {
            minimal_c: Some(0.0),
            series: s0,
        });
    }
    let (ok_max, s_max) = eval(C_SEARCH_MAX)?;
    if !ok_max {
        return Ok(DecayTrace {
            minimal_c: None,
            series: s_max,
        });
    }
    let (mut lo, mut hi) = (0.0, C_SEARCH_MAX);
    let mut best = s_max;
    for _ in 0..C_SEARCH_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let (ok, s) = eval(mid)?;
        if ok {
            hi = mid;
            best = s;
        } else {
            lo = mid;
        }
    }
    Ok(DecayTrace {
        minimal_c: Some(hi),
        series: best,
    })
}

/// Slack in the weighted pointwise bounds on `ω` above `y_split`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundMargins {
    /// `min (1+y)^σ|ω| − δ`.
    pub lower_margin: f64,
    /// `min 1/(δ(1+y)^{σ+α₂}) − |∂^αω|` for each multi-index of [`BOUND_ALPHAS`].
    pub upper_margins: [f64; 6],
}

/// Multi-indices `(α₁, α₂)` with `|α| ≤ 2`.
pub const BOUND_ALPHAS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

impl BoundMargins {
    pub fn min_upper(&self) -> f64 {
        self.upper_margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn all_positive(&self) -> bool {
        self.lower_margin > 0.0 && self.min_upper() > 0.0
    }
}

/// Evaluates the margins on the nodes with `y_split < y ≤ y_window`.
pub fn bound_margins(state: &State, delta: f64, sigma: f64, y_split: f64, y_window: f64) -> Result<BoundMargins> {
    let g = &state.grid;
    let w = &state.omega;
    let wx = g.dx(w, 1)?;
    let derivs = [w.clone(), wx.clone(), g.dy(w, 1)?, g.dx(w, 2)?, g.dy(&wx, 1)?, g.dy(w, 2)?];
    let y = g.y_nodes();
    let mut lower = f64::INFINITY;
    let mut upper = [f64::INFINITY; 6];
    for j in (0..g.ny()).filter(|&j| y[j] > y_split && y[j] <= y_window) {
        let base = (1.0 + y[j]).powf(sigma);
        for i in 0..g.nx() {
            lower = lower.min(base * w[[i, j]].abs() - delta);
            for (k, &(_, a2)) in BOUND_ALPHAS.iter().enumerate() {
                let cap = 1.0 / (delta * (1.0 + y[j]).powf(sigma + a2 as f64));
                upper[k] = upper[k].min(cap - derivs[k][[i, j]].abs());
            }
        }
    }
    Ok(BoundMargins {
        lower_margin: lower,
        upper_margins: upper,
    })
}

/// Observer recording [`bound_margins`] of every sample.
pub struct MarginRecorder {
    pub delta: f64,
    pub sigma: f64,
    pub y_split: f64,
    pub y_window: f64,
    pub margins: Vec<(f64, BoundMargins)>,
}

impl MarginRecorder {
    pub fn new(delta: f64, sigma: f64, y_split: f64, y_window: f64) -> Self {
        Self {
            delta,
            sigma,
            y_split,
            y_window,
            margins: Vec::new(),
        }
    }

    pub fn all_positive(&self) -> bool {
        self.margins.iter().all(|(_, m)| m.all_positive())
    }
}

impl Observer for MarginRecorder {
    fn observe(&mut self, state: &State) -> Result<()> {
        let m = bound_margins(state, self.delta, self.sigma, self.y_split, self.y_window)?;
        self.margins.push((state.t, m));
        Ok(())
    }
}

/// Smooth bump `B(x, y)` supported in `4 < y < 8`, with `‖B‖_{L²} = 1`, and `∂_y B`.
pub fn divergence_bump(grid: &SpectralGrid) -> Result<(Array2<f64>, Array2<f64>)> {
    if grid.y_max() <= 8.0 {
        return contract("the perturbation bump needs y_max > 8");
    }
    let prof = |y: f64| -> (f64, f64) {
        let q = (y - 6.0) / 2.0;
        if q.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let d = 1.0 - q * q;
        let b = (1.0 - 1.0 / d).exp();
        (b, b * (-2.0 * q / (d * d)) * 0.5)
    };
    let shape = |x: f64| 1.0 + 0.5 * x.cos();
    let b = grid.tabulate(|x, y| shape(x) * prof(y).0);
    let by = grid.tabulate(|x, y| shape(x) * prof(y).1);
    let n = grid.l2_norm(&b);
    Ok((b / n, by / n))
}

/// Gap between two runs started `η` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub eta: f64,
    pub times: Vec<f64>,
    /// `‖u¹ − u²‖_{L²}` at each sample.
    pub gaps: Vec<f64>,
    /// Least-squares slope of `ln gap` against `t`; `None` when a gap vanishes.
    pub slope: Option<f64>,
}

impl DivergenceReport {
    pub fn final_gap(&self) -> f64 {
        self.gaps.last().copied().unwrap_or(0.0)
    }

    /// Gap bound `gap(t₀)·e^{Λ(t − t₀)}`; the measured `gap(t₀)` equals `η` up to round-off.
    pub fn bound(&self, lambda: f64, t: f64) -> f64 {
        let t0 = self.times.first().copied().unwrap_or(0.0);
        let g0 = self.gaps.first().copied().unwrap_or(self.eta);
        g0 * (lambda * (t - t0)).exp()
    }

    /// `gap(t) ≤ gap(t₀)·e^{Λ(t − t₀)}` at every sample.
    pub fn within(&self, lambda: f64) -> bool {
        self.times.iter().zip(&self.gaps).all(|(&t, &g)| g <= self.bound(lambda, t))
    }
}

struct Snapshots(Vec<(f64, Array2<f64>)>);

impl Observer for Snapshots {
    fn observe(&mut self, state: &State) -> Result<()> {
        self.0.push((state.t, state.u.clone()));
        Ok(())
    }
}

/// Runs from `state0` and from `state0 + η·B`, and measures the gap.
pub fn two_run_divergence(state0: &State, eta: f64, cfg: &SolverConfig) -> Result<DivergenceReport> {
    if !(eta == 0.0 || (1e-12..=1e-6).contains(&eta)) {
        return Err(Error::Range(format!("perturbation size η = {eta} must be 0 or lie in [1e-12, 1e-6]")));
    }
    let grid: Arc<SpectralGrid> = state0.grid.clone();
    let (b, by) = divergence_bump(&grid)?;
    let second = State::from_parts(
        grid.clone(),
        state0.t,
        &state0.u + &(&b * eta),
        &state0.omega + &(&by * eta),
        state0.far_field,
    )?;
    let go = |s: &State| -> Result<Vec<(f64, Array2<f64>)>> {
        let mut snaps = Snapshots(Vec::new());
        Integrator::new(grid.clone(), cfg)?.run(s, &mut [&mut snaps])?;
        Ok(snaps.0)
    };
    let (a, c) = rayon::join(|| go(state0), || go(&second));
    let (a, c) = (a?, c?);
    let times: Vec<f64> = a.iter().map(|(t, _)| *t).collect();
    let gaps: Vec<f64> = a.iter().zip(&c).map(|((_, u1), (_, u2))| grid.l2_norm(&(u1 - u2))).collect();
    let slope = if gaps.len() >= 2 && gaps.iter().all(|&g| g > 0.0) {
        let n = gaps.len() as f64;
        let lg: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
        let mt = times.iter().sum::<f64>() / n;
        let ml = lg.iter().sum::<f64>() / n;
        let sxy: f64 = times.iter().zip(&lg).map(|(t, l)| (t - mt) * (l - ml)).sum();
        let sxx: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(DivergenceReport { eta, times, gaps, slope })
}
