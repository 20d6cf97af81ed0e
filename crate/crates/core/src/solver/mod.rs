//! Time integration of the regularized, Galerkin-truncated Prandtl equation
//! `∂_t u + u∂ₓu + v∂_y u − ∂²_y u − ε∂²ₓu = 0`.
//!
//! Diffusion is Crank–Nicolson with the sixth-order y-stencils of the grid,
//! solved as one banded system per Fourier mode; advection is second-order
//! Adams–Bashforth, started by a half step. Within a step the order is:
//! nonlinear term, projection onto `|k| ≤ n`, implicit solve, boundary values.

pub mod banded;

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{contract, Error, Result};
use crate::fields::State;
use crate::grid::SpectralGrid;
pub use banded::BandedLu;

/// Advective CFL bound `dt · max|u| · max|k| < CFL_LIMIT`.
pub const CFL_LIMIT: f64 = 0.5;
/// `max|ω|` beyond which a run is declared blown up.
pub const BLOW_UP_VORTICITY: f64 = 1e8;

/// Parameters of the time integration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Tangential diffusion `ε ≥ 0`.
    pub epsilon: f64,
    /// Largest retained Fourier mode `n`.
    pub n_galerkin: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Observers see every `sample_every`-th step.
    pub sample_every: usize,
    /// Also truncate at `nx/3` (two-thirds rule).
    pub dealias: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            n_galerkin: 21,
            dt: 1e-3,
            t_end: 0.05,
            sample_every: 5,
            dealias: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, grid: &SpectralGrid) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Range(format!("epsilon = {} must be nonnegative", self.epsilon)));
        }
        if self.n_galerkin < 1 || self.n_galerkin > grid.nx() / 2 {
            return Err(Error::Range(format!(
                "n_galerkin = {} must lie in [1, nx/2 = {}]",
                self.n_galerkin,
                grid.nx() / 2
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Range(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Range(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::Range("sample_every must be positive".into()));
        }
        Ok(())
    }

    /// Mode cutoff after the optional two-thirds truncation.
    pub fn cutoff(&self, grid: &SpectralGrid) -> usize {
        if self.dealias {
            self.n_galerkin.min(grid.nx() / 3)
        } else {
            self.n_galerkin
        }
    }
}

/// Per-mode factorizations of `I − (h/2)(∂²_y − εk²)` with Dirichlet rows.
struct ImplicitOperator {
    h: f64,
    lu: Vec<Option<BandedLu>>,
}

impl ImplicitOperator {
    fn new(grid: &SpectralGrid, epsilon: f64, cutoff: usize, h: f64) -> Result<Self> {
        let ny = grid.ny();
        let rows = grid.dy_stencils(2)?;
        let half_width = rows.iter().enumerate().map(|(i, r)| i.abs_diff(r.start).max(r.start + r.w.len() - 1 - i)).max().unwrap_or(0);
        let lu = (0..grid.nx())
            .map(|i| -> Result<Option<BandedLu>> {
                if grid.mode(i).unsigned_abs() as usize > cutoff {
                    return Ok(None);
                }
                let k2 = grid.wavenumbers()[i].powi(2);
                let mut m = BandedLu::zeros(ny, half_width, half_width);
                m.set(0, 0, 1.0)?;
                m.set(ny - 1, ny - 1, 1.0)?;
                for (r, st) in rows.iter().enumerate().take(ny - 1).skip(1) {
                    for (q, &w) in st.w.iter().enumerate() {
                        let c = st.start + q;
                        let mut v = -0.5 * h * w;
                        if c == r {
                            v += 1.0 + 0.5 * h * epsilon * k2;
                        }
                        m.set(r, c, v)?;
                    }
                }
                Ok(Some(m.factor()?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { h, lu })
    }
}

/// Stateful integrator carrying the Adams–Bashforth history.
pub struct Integrator {
    grid: Arc<SpectralGrid>,
    cfg: SolverConfig,
    dt: f64,
    n_steps: usize,
    cutoff: usize,
    full: ImplicitOperator,
    half: Option<ImplicitOperator>,
    previous: Option<Array2<Complex64>>,
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: State,
    pub steps: usize,
    pub samples: usize,
}

/// Read-only consumer of sampled states.
pub trait Observer {
    fn observe(&mut self, state: &State) -> Result<()>;
}

impl<F: FnMut(&State) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &State) -> Result<()> {
        self(state)
    }
}

impl Integrator {
    /// Prepares the factorizations; the step is shrunk so that it divides `t_end`.
    pub fn new(grid: Arc<SpectralGrid>, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate(&grid)?;
        let n_steps = if cfg.t_end == 0.0 { 0 } else { (cfg.t_end / cfg.dt - 1e-9).ceil().max(1.0) as usize };
        let dt = if n_steps == 0 { cfg.dt } else { cfg.t_end / n_steps as f64 };
        let cutoff = cfg.cutoff(&grid);
        let full = ImplicitOperator::new(&grid, cfg.epsilon, cutoff, dt)?;
        Ok(Self {
            grid,
            cfg: cfg.clone(),
            dt,
            n_steps,
            cutoff,
            full,
            half: None,
            previous: None,
        })
    }

    /// Effective step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.cutoff as f64 * 2.0 * std::f64::consts::PI / self.grid.x_period()
    }

    /// Forgets the Adams–Bashforth history; the next step bootstraps again.
    pub fn reset(&mut self) {
        self.previous = None;
    }

    fn check_cfl(&self, state: &State, h: f64) -> Result<()> {
        let umax = state.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let c = h * umax * self.max_wavenumber();
        if !(c < CFL_LIMIT) {
            return Err(Error::StepRejected {
                t: state.t,
                reason: format!("CFL number {c:.4} ≥ {CFL_LIMIT}"),
            });
        }
        Ok(())
    }

    /// Projected spectrum of `u∂ₓu + v∂_y u`.
    fn nonlinear(&self, state: &State) -> Result<Array2<Complex64>> {
        let g = &self.grid;
        let ux = g.dx(&state.u, 1)?;
        let n = &state.u * &ux + &state.v * &state.omega;
        let mut hat = g.forward(&n)?;
        g.truncate_spectrum(&mut hat, self.cutoff);
        Ok(hat)
    }

    /// One Crank–Nicolson diffusion step of size `op.h` with explicit forcing `−nl`,
    /// solved for the increment so rounding scales with the update.
    fn implicit(&self, state: &State, nl: &Array2<Complex64>, op: &ImplicitOperator) -> Result<State> {
        let g = &self.grid;
        let (nx, ny) = g.shape();
        let h = op.h;
        let uh = g.forward(&state.u)?;
        let d2h = g.forward(&g.dy(&state.u, 2)?)?;
        let eps = self.cfg.epsilon;
        let top = Complex64::new(state.far_field * nx as f64, 0.0);
        let columns: Vec<Option<(Vec<f64>, Vec<f64>)>> = (0..nx)
            .into_par_iter()
            .map(|i| -> Result<Option<(Vec<f64>, Vec<f64>)>> {
                let Some(lu) = &op.lu[i] else {
                    return Ok(None);
                };
                let k2 = g.wavenumbers()[i].powi(2);
                let mut re = vec![0.0; ny];
                let mut im = vec![0.0; ny];
                for j in 1..ny - 1 {
                    let v = ((d2h[[i, j]] - uh[[i, j]] * (eps * k2)) - nl[[i, j]]) * h;
                    re[j] = v.re;
                    im[j] = v.im;
                }
                let wall = -uh[[i, 0]];
                let lid = if i == 0 { top } else { Complex64::new(0.0, 0.0) } - uh[[i, ny - 1]];
                (re[0], im[0], re[ny - 1], im[ny - 1]) = (wall.re, wall.im, lid.re, lid.im);
                lu.solve(&mut re)?;
                lu.solve(&mut im)?;
                for j in 0..ny {
                    re[j] += uh[[i, j]].re;
                    im[j] += uh[[i, j]].im;
                }
                Ok(Some((re, im)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut spec = Array2::<Complex64>::zeros((nx, ny));
        for (i, col) in columns.into_iter().enumerate() {
            if let Some((re, im)) = col {
                for j in 0..ny {
                    spec[[i, j]] = Complex64::new(re[j], im[j]);
                }
            }
        }
        let u = g.inverse(&spec);
        let next = State::from_u(g.clone(), state.t + h, u, state.far_field)?;
        let wmax = next.omega.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !next.is_finite() || !(wmax <= BLOW_UP_VORTICITY) {
            return Err(Error::BlowUp {
                t: next.t,
                reason: if next.is_finite() {
                    format!("max |ω| = {wmax:e} exceeds {BLOW_UP_VORTICITY:e}")
                } else {
                    "non-finite values".into()
                },
            });
        }
        Ok(next)
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &State) -> Result<State> {
        if !Arc::ptr_eq(&state.grid, &self.grid) && *state.grid != *self.grid {
            return contract("state lives on a different grid");
        }
        self.check_cfl(state, self.dt)?;
        let now = self.nonlinear(state)?;
        let next = match self.previous.take() {
            Some(prev) => {
                let forcing = now.mapv(|v| v * 1.5) - prev.mapv(|v| v * 0.5);
                self.implicit(state, &forcing, &self.full)?
            }
            None => {
                if self.half.is_none() {
                    self.half = Some(ImplicitOperator::new(&self.grid, self.cfg.epsilon, self.cutoff, 0.5 * self.dt)?);
                }
                let half_op = self.half.as_ref().expect("built above");
                let mid = self.implicit(state, &now, half_op)?;
                let mid_nl = self.nonlinear(&mid)?;
                self.implicit(state, &mid_nl, &self.full)?
            }
        };
        self.previous = Some(now);
        Ok(next)
    }

    /// Advances to `t_end`, sampling every `sample_every` steps and at the end.
    pub fn run(&mut self, state0: &State, observers: &mut [&mut dyn Observer]) -> Result<RunSummary> {
        let mut samples = 0;
        let mut sample = |s: &State, obs: &mut [&mut dyn Observer]| -> Result<()> {
            for o in obs.iter_mut() {
                o.observe(s)?;
            }
            samples += 1;
            Ok(())
        };
        sample(state0, observers)?;
        let mut state = state0.clone();
        for n in 1..=self.n_steps {
            state = self.step(&state)?;
            if n % self.cfg.sample_every == 0 || n == self.n_steps {
                sample(&state, observers)?;
            }
        }
        Ok(RunSummary {
            final_state: state,
            steps: self.n_steps,
            samples,
        })
    }
}

/// One bootstrapped step from `state`.
pub fn step(state: &State, cfg: &SolverConfig) -> Result<State> {
    let one = SolverConfig {
        t_end: cfg.dt,
        ..cfg.clone()
    };
    Integrator::new(state.grid.clone(), &one)?.step(state)
}

/// Runs from `state0` to `cfg.t_end` with the given observers.
pub fn run(state0: &State, cfg: &SolverConfig, observers: &mut [&mut dyn Observer]) -> Result<RunSummary> {
    Integrator::new(state0.grid.clone(), cfg)?.run(state0, observers)
}

/// Wall residuals of a solution: `max_x |∂_yω|` and `max_x |∂³_yω − ω∂ₓω|` at `y = 0`.
///
/// Both vanish for smooth solutions; on a discrete run they
/// measure consistency of the scheme at the wall.
pub fn wall_residuals(state: &State) -> Result<(f64, f64)> {
    let g = &state.grid;
    let wy = g.dy(&state.omega, 1)?;
    let w3 = g.dy_n(&state.omega, 3)?;
    let wx = g.dx(&state.omega, 1)?;
    let nx = g.nx();
    let first = (0..nx).map(|i| wy[[i, 0]].abs()).fold(0.0, f64::max);
    let third = (0..nx)
        .map(|i| (w3[[i, 0]] - state.omega[[i, 0]] * wx[[i, 0]]).abs())
        .fold(0.0, f64::max);
    Ok((first, third))
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
    fn zero_state_is_fixed() {
        let g = grid(16, 65);
        let st = State::zero(g);
        let cfg = SolverConfig {
            n_galerkin: 5,
            t_end: 0.01,
            ..SolverConfig::default()
        };
        let out = run(&st, &cfg, &mut []).unwrap();
        assert!(out.final_state.u.iter().all(|&v| v == 0.0));
        assert_eq!(out.steps, 10);
    }

    #[test]
    fn zero_horizon_returns_input() {
        let g = grid(8, 33);
        let st = State::from_u(g.clone(), 0.0, g.tabulate(|_, y| y * (-y).exp()), 0.0).unwrap();
        let cfg = SolverConfig {
            n_galerkin: 4,
            t_end: 0.0,
            ..SolverConfig::default()
        };
        let out = run(&st, &cfg, &mut []).unwrap();
        assert_eq!(out.final_state.u, st.u);
        assert_eq!(out.samples, 1);
    }

    #[test]
    fn heat_equation_for_shear_data() {
        let g = grid(4, 257);
        let exact = |t: f64, y: f64| y * (1.0 + t).powf(-1.5) * (-y * y / (4.0 * (1.0 + t))).exp();
        let st = State::from_u(g.clone(), 0.0, g.tabulate(|_, y| exact(0.0, y)), 0.0).unwrap();
        let cfg = SolverConfig {
            n_galerkin: 2,
            dt: 1e-3,
            t_end: 0.05,
            ..SolverConfig::default()
        };
        let out = run(&st, &cfg, &mut []).unwrap();
        let err = out
            .final_state
            .u
            .indexed_iter()
            .fold(0.0f64, |m, ((_, j), &v)| m.max((v - exact(0.05, g.y_nodes()[j])).abs()));
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn cfl_violation_rejected() {
        let g = grid(16, 65);
        let st = State::from_u(g.clone(), 0.0, g.tabulate(|x, y| 50.0 * (1.0 + x.sin()) * y * (-y).exp()), 0.0).unwrap();
        let cfg = SolverConfig {
            n_galerkin: 8,
            dt: 0.01,
            t_end: 0.02,
            ..SolverConfig::default()
        };
        assert!(matches!(run(&st, &cfg, &mut []), Err(Error::StepRejected { .. })));
    }

    #[test]
    fn observers_see_every_sample() {
        let g = grid(8, 65);
        let st = State::from_u(g.clone(), 0.0, g.tabulate(|x, y| 0.1 * x.cos() * y * (-y).exp()), 0.0).unwrap();
        let cfg = SolverConfig {
            n_galerkin: 3,
            dt: 1e-3,
            t_end: 0.01,
            sample_every: 3,
            ..SolverConfig::default()
        };
        let mut times = Vec::new();
        let mut obs = |s: &State| -> Result<()> {
            times.push(s.t);
            Ok(())
        };
        let out = run(&st, &cfg, &mut [&mut obs]).unwrap();
        assert_eq!(out.samples, 5);
        assert_eq!(times.len(), 5);
        assert!((times[4] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn small_data_norm_decays() {
        let g = grid(16, 129);
        let st = State::from_u(g.clone(), 0.0, g.tabulate(|x, y| 0.01 * (1.0 + x.sin()) * y * (-y).exp()), 0.0).unwrap();
        let cfg = SolverConfig {
            epsilon: 0.1,
            n_galerkin: 8,
            dt: 1e-3,
            t_end: 0.05,
            sample_every: 1,
            ..SolverConfig::default()
        };
        let mut norms = Vec::new();
        let mut obs = |s: &State| -> Result<()> {
            norms.push(s.grid.l2_norm(&s.u));
            Ok(())
        };
        run(&st, &cfg, &mut [&mut obs]).unwrap();
        assert!(norms.windows(2).all(|w| w[1] <= w[0]));
    }
}
