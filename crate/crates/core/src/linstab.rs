//! Linear stability of shear flows `u = (U_s(y), 0)`.
//!
//! The linearized equation `∂_t u + U_s∂ₓu + U_s′v − ∂²_y u = 0` has
//! x-independent coefficients, so each Fourier mode `k` evolves on its own:
//! `∂_t û = −ikU_s û + ikU_s′ ∫₀ʸ û − ∂²_y û` with `û = 0` at both ends.
//! Growth rates come from time-marching this system and fitting the log-norm.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{contract, Error, Result};
use crate::grid::SpectralGrid;
use crate::solver::BLOW_UP_VORTICITY;

/// Amplitude `A` of the reference profile `A·y·e^{−y²/2}`.
pub const REFERENCE_AMPLITUDE: f64 = 300.0;
/// Wavenumbers of the growth sweep.
pub const KX_SWEEP: [usize; 7] = [8, 12, 16, 24, 32, 48, 64];
/// Least `r²` of an accepted log-norm fit.
pub const MIN_GROWTH_R2: f64 = 0.99;

/// Tabulated shear profile with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    pub us: Array1<f64>,
    pub dus: Array1<f64>,
    pub d2us: Array1<f64>,
    pub monotone: bool,
    /// Point `a` with `U_s′(a) = 0` for non-monotone profiles.
    pub critical_y: Option<f64>,
    /// Speed of the frame in which modes are marched.
    pub frame_speed: f64,
}

impl ShearProfile {
    /// Tabulates `U_s` and its derivatives; the critical point is located by bisection.
    pub fn from_fn(
        grid: &SpectralGrid,
        u: impl Fn(f64) -> f64,
        du: impl Fn(f64) -> f64,
        d2u: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let us = grid.tabulate_y(&u);
        let dus = grid.tabulate_y(&du);
        let d2us = grid.tabulate_y(&d2u);
        if us[0].abs() > 1e-14 {
            return contract(format!("shear profile must vanish at the wall, U_s(0) = {}", us[0]));
        }
        let y = grid.y_nodes();
        let change = (1..y.len()).find(|&j| dus[j - 1] > 0.0 && dus[j] <= 0.0);
        let (monotone, critical_y, frame_speed) = match change {
            None => (true, None, us[y.len() - 1]),
            Some(j) => {
                let (mut lo, mut hi) = (y[j - 1], y[j]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if du(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let a = 0.5 * (lo + hi);
                if d2u(a) == 0.0 {
                    return Err(Error::Hypothesis(format!("U_s''(a) vanishes at the critical point a = {a}")));
                }
                (false, Some(a), u(a))
            }
        };
        Ok(Self {
            us,
            dus,
            d2us,
            monotone,
            critical_y,
            frame_speed,
        })
    }

    /// `U_s = A·y·e^{−y²/2}`, critical at `y = 1`.
    pub fn reference(grid: &SpectralGrid) -> Result<Self> {
        let a = REFERENCE_AMPLITUDE;
        Self::from_fn(
            grid,
            |y| a * y * (-0.5 * y * y).exp(),
            |y| a * (1.0 - y * y) * (-0.5 * y * y).exp(),
            |y| a * y * (y * y - 3.0) * (-0.5 * y * y).exp(),
        )
    }

    /// `U_max·tanh(y/ℓ)` with the sup-norm and wall shear of [`reference`](Self::reference).
    pub fn monotone_contrast(grid: &SpectralGrid) -> Result<Self> {
        let umax = REFERENCE_AMPLITUDE * (-0.5f64).exp();
        let ell = umax / REFERENCE_AMPLITUDE;
        Self::from_fn(
            grid,
            |y| umax * (y / ell).tanh(),
            |y| REFERENCE_AMPLITUDE / (y / ell).cosh().powi(2),
            |y| -2.0 * REFERENCE_AMPLITUDE / ell * (y / ell).tanh() / (y / ell).cosh().powi(2),
        )
    }

    /// `U_s ≡ 0`.
    pub fn zero(grid: &SpectralGrid) -> Self {
        let z = Array1::zeros(grid.ny());
        Self {
            us: z.clone(),
            dus: z.clone(),
            d2us: z,
            monotone: true,
            critical_y: None,
            frame_speed: 0.0,
        }
    }

    fn check(&self, grid: &SpectralGrid) -> Result<()> {
        if self.us.len() != grid.ny() || self.dus.len() != grid.ny() {
            return contract("shear profile does not match the grid");
        }
        Ok(())
    }
}

/// `σ = U_s′(y₀)·kx/ky − ky²` from coefficients frozen at `y₀`.
pub fn frozen_dispersion(dus_at_y0: f64, kx: f64, ky: f64) -> Result<f64> {
    if ky == 0.0 {
        return contract("frozen dispersion needs ky ≠ 0");
    }
    Ok(dus_at_y0 * kx / ky - ky * ky)
}

/// Interior generator of mode `k` in a frame moving at speed `c`.
fn mode_generator(grid: &SpectralGrid, profile: &ShearProfile, ik: Complex64, c: f64) -> Result<DMatrix<Complex64>> {
    let ny = grid.ny();
    let n = ny - 2;
    let rows = grid.dy_stencils(2)?;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for r in 1..ny - 1 {
        let st = &rows[r];
        for (q, &w) in st.w.iter().enumerate() {
            let col = st.start + q;
            if col >= 1 && col < ny - 1 {
                m[(r - 1, col - 1)] += Complex64::new(w, 0.0);
            }
        }
        m[(r - 1, r - 1)] -= ik * (profile.us[r] - c);
    }
    if ik != Complex64::new(0.0, 0.0) && profile.dus.iter().any(|&d| d != 0.0) {
        let mut unit = Array1::<f64>::zeros(ny);
        for col in 1..ny - 1 {
            unit.fill(0.0);
            unit[col] = 1.0;
            let w = grid.cumulative_profile(unit.view(), 0.0)?;
            for r in 1..ny - 1 {
                m[(r - 1, col - 1)] += ik * profile.dus[r] * w[r];
            }
        }
    }
    Ok(m)
}

/// Crank–Nicolson propagator `(I − dt/2 M)^{-1}(I + dt/2 M)`.
fn cn_propagator(m: &DMatrix<Complex64>, dt: f64) -> Result<DMatrix<Complex64>> {
    let n = m.nrows();
    let half = Complex64::new(0.5 * dt, 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let lhs = &id - m * half;
    let rhs = &id + m * half;
    lhs.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("singular Crank–Nicolson operator".into()))
}

/// One Crank–Nicolson step of the linearized equation, mode by mode.
pub fn linearized_step(grid: &SpectralGrid, pert_u: &Array2<f64>, profile: &ShearProfile, dt: f64) -> Result<Array2<f64>> {
    grid.check_shape(&pert_u.view())?;
    profile.check(grid)?;
    if !(dt > 0.0) {
        return Err(Error::Range(format!("dt = {dt} must be positive")));
    }
    let (nx, ny) = grid.shape();
    if pert_u.column(0).iter().any(|&v| v != 0.0) {
        return contract("perturbation must vanish at the wall");
    }
    let spec = grid.forward(pert_u)?;
    let cols = (0..nx)
        .into_par_iter()
        .map(|i| -> Result<Vec<Complex64>> {
            let row = spec.row(i);
            if row.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                return Ok(vec![Complex64::new(0.0, 0.0); ny]);
            }
            let m = mode_generator(grid, profile, grid.dx_multiplier(i, 1), 0.0)?;
            let p = cn_propagator(&m, dt)?;
            let x = DVector::from_iterator(ny - 2, row.iter().skip(1).take(ny - 2).copied());
            let y = p * x;
            let mut out = vec![Complex64::new(0.0, 0.0); ny];
            out[1..ny - 1].copy_from_slice(y.as_slice());
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut next = Array2::<Complex64>::zeros((nx, ny));
    for (i, c) in cols.into_iter().enumerate() {
        next.row_mut(i).assign(&Array1::from(c));
    }
    let out = grid.inverse(&next);
    let amax = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(amax <= BLOW_UP_VORTICITY) {
        return Err(Error::BlowUp {
            t: dt,
            reason: format!("linearized perturbation reached {amax:e}"),
        });
    }
    Ok(out)
}

/// Settings of [`growth_rate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_seeds: usize,
    pub seed: u64,
    /// Trailing fraction of the horizon used in the fit.
    pub fit_window: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            horizon: 1.5,
            dt: 5e-4,
            n_seeds: 2,
            seed: 20240607,
            fit_window: 0.5,
        }
    }
}

impl GrowthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt < self.horizon) {
            return Err(Error::Range(format!("need 0 < dt = {} < horizon = {}", self.dt, self.horizon)));
        }
        if self.n_seeds == 0 {
            return Err(Error::Range("n_seeds must be positive".into()));
        }
        if !(self.fit_window > 0.0 && self.fit_window <= 1.0) {
            return Err(Error::Range(format!("fit_window = {} must lie in (0, 1]", self.fit_window)));
        }
        Ok(())
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r²)`.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Fitted growth of one wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    pub kx: usize,
    /// Largest slope over seeds.
    pub rate: f64,
    /// `r²` of the fit that produced `rate`.
    pub r2: f64,
}

/// Dominant growth rate of mode `kx` by power iteration from random seeds.
///
/// Fails with [`Error::Inconclusive`] if the best fit has `r² < 0.99`.
pub fn growth_rate(grid: &SpectralGrid, profile: &ShearProfile, kx: usize, cfg: &GrowthConfig) -> Result<GrowthEstimate> {
    cfg.validate()?;
    profile.check(grid)?;
    let k = kx as f64 * 2.0 * std::f64::consts::PI / grid.x_period();
    let m = mode_generator(grid, profile, Complex64::new(0.0, k), profile.frame_speed)?;
    let p = cn_propagator(&m, cfg.dt)?;
    let n = m.nrows();
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let mut x = DMatrix::<Complex64>::zeros(n, cfg.n_seeds);
    for s in 0..cfg.n_seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(s as u64 * 1000 + kx as u64);
        for r in 0..n {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            x[(r, s)] = Complex64::new(re, im);
        }
    }
    let mut logs = vec![vec![0.0; steps + 1]; cfg.n_seeds];
    for s in 0..cfg.n_seeds {
        let nr = x.column(s).norm();
        x.column_mut(s).unscale_mut(nr);
        logs[s][0] = nr.ln();
    }
    for step in 1..=steps {
        x = &p * &x;
        for s in 0..cfg.n_seeds {
            let nr = x.column(s).norm();
            if !nr.is_finite() || nr == 0.0 {
                return Err(Error::BlowUp {
                    t: step as f64 * cfg.dt,
                    reason: format!("mode {kx} norm became {nr}"),
                });
            }
            x.column_mut(s).unscale_mut(nr);
            logs[s][step] = logs[s][step - 1] + nr.ln();
        }
    }
    let first = ((1.0 - cfg.fit_window) * steps as f64).floor() as usize;
    let t: Vec<f64> = (first..=steps).map(|i| i as f64 * cfg.dt).collect();
    let best = logs
        .iter()
        .map(|l| line_fit(&t, &l[first..]))
        .fold((f64::NEG_INFINITY, 0.0), |b, (slope, _, r2)| if slope > b.0 { (slope, r2) } else { b });
    if best.1 < MIN_GROWTH_R2 {
        return Err(Error::Inconclusive(format!(
            "log-norm fit for kx = {kx} has r² = {:.4} < {MIN_GROWTH_R2}",
            best.1
        )));
    }
    Ok(GrowthEstimate {
        kx,
        rate: best.0,
        r2: best.1,
    })
}

/// Per-wavenumber growth estimates, ordered by `kx`; failures are kept per entry.
pub fn growth_sweep(
    grid: &SpectralGrid,
    profile: &ShearProfile,
    kxs: &[usize],
    cfg: &GrowthConfig,
) -> BTreeMap<usize, Result<GrowthEstimate>> {
    let est: Vec<_> = kxs.par_iter().map(|&k| (k, growth_rate(grid, profile, k, cfg))).collect();
    est.into_iter().collect()
}

/// Rates of the sweep entries whose fits converged.
pub fn conclusive_rates(sweep: &BTreeMap<usize, Result<GrowthEstimate>>) -> BTreeMap<usize, f64> {
    sweep
        .iter()
        .filter_map(|(&k, r)| r.as_ref().ok().map(|e| (k, e.rate)))
        .collect()
}

/// Power law `σ ≈ δ·kx^slope` fitted in log–log coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    /// `ln δ`.
    pub intercept: f64,
    pub r2: f64,
    /// Wavenumbers with positive rates that entered the fit.
    pub used: Vec<usize>,
}

/// Fits `ln σ` against `ln kx` over the positive rates; needs at least four.
pub fn fit_growth_exponent(rates: &BTreeMap<usize, f64>) -> Result<ExponentFit> {
    let used: Vec<usize> = rates.iter().filter(|(&k, &r)| k > 0 && r > 0.0 && r.is_finite()).map(|(&k, _)| k).collect();
    if used.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} positive growth rates, at least 4 needed",
            used.len()
        )));
    }
    let x: Vec<f64> = used.iter().map(|&k| (k as f64).ln()).collect();
    let y: Vec<f64> = used.iter().map(|k| rates[k].ln()).collect();
    let (slope, intercept, r2) = line_fit(&x, &y);
    Ok(ExponentFit {
        slope,
        intercept,
        r2,
        used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(nx: usize, ny: usize) -> SpectralGrid {
        SpectralGrid::new(&GridConfig {
            nx,
            ny,
            ..GridConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(frozen_dispersion(1.0, 4.0, 2.0).unwrap(), -2.0);
        assert_eq!(frozen_dispersion(3.0, 0.0, 1.5).unwrap(), -2.25);
        assert!(frozen_dispersion(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn frozen_maximum_grows_with_kx() {
        let best = |kx: f64| (1..2000).map(|i| frozen_dispersion(1.0, kx, i as f64 * 0.005).unwrap()).fold(f64::MIN, f64::max);
        let vals: Vec<f64> = [8.0, 16.0, 32.0, 64.0].iter().map(|&k| best(k)).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    proptest! {
        #[test]
        fn dispersion_odd_up_to_shift(d in -5.0f64..5.0, kx in -50.0f64..50.0, ky in 0.1f64..10.0) {
            let s = frozen_dispersion(d, kx, ky).unwrap() + frozen_dispersion(d, -kx, ky).unwrap();
            prop_assert!((s + 2.0 * ky * ky).abs() <= 1e-12 * (1.0 + (d * kx / ky).abs()));
        }
    }

    #[test]
    fn reference_profile_structure() {
        let g = grid(8, 257);
        let p = ShearProfile::reference(&g).unwrap();
        assert!(!p.monotone);
        assert!((p.critical_y.unwrap() - 1.0).abs() < 1e-12);
        let m = ShearProfile::monotone_contrast(&g).unwrap();
        assert!(m.monotone);
        assert!((p.frame_speed - m.frame_speed).abs() < 1e-9 * p.frame_speed);
        assert!((p.dus[0] - m.dus[0]).abs() < 1e-9 * p.dus[0]);
    }

    #[test]
    fn zero_perturbation_stays_zero() {
        let g = grid(8, 65);
        let p = ShearProfile::reference(&g).unwrap();
        let out = linearized_step(&g, &g.zeros(), &p, 1e-3).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modes_stay_decoupled() {
        let g = grid(16, 65);
        let p = ShearProfile::reference(&g).unwrap();
        let bump = |y: f64| y * y * (-y).exp();
        let a = g.tabulate(|x, y| (3.0 * x).cos() * bump(y));
        let b = g.tabulate(|x, y| (5.0 * x).sin() * bump(y));
        let sa = linearized_step(&g, &a, &p, 1e-3).unwrap();
        let sb = linearized_step(&g, &b, &p, 1e-3).unwrap();
        let sab = linearized_step(&g, &(&a + &b), &p, 1e-3).unwrap();
        let diff = (&sab - &sa - &sb).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-12, "{diff:e}");
        let spec = g.forward(&sa).unwrap();
        for i in 0..16 {
            let e = spec.row(i).iter().map(|c| c.norm()).fold(0.0, f64::max);
            if g.mode(i).abs() != 3 {
                assert!(e < 1e-10, "mode {} has {e:e}", g.mode(i));
            }
        }
    }

    #[test]
    fn zero_profile_is_heat_flow() {
        let g = grid(4, 257);
        let exact = |t: f64, y: f64| y * (1.0 + t).powf(-1.5) * (-y * y / (4.0 * (1.0 + t))).exp();
        let mut u = g.tabulate(|_, y| exact(0.0, y));
        let p = ShearProfile::zero(&g);
        let dt = 1e-3;
        for _ in 0..20 {
            u = linearized_step(&g, &u, &p, dt).unwrap();
        }
        let err = u.indexed_iter().fold(0.0f64, |m, ((_, j), &v)| m.max((v - exact(0.02, g.y_nodes()[j])).abs()));
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn zero_profile_decays_at_lowest_dirichlet_rate() {
        let y_max = 4.0;
        let g = SpectralGrid::new(&GridConfig {
            nx: 8,
            ny: 129,
            y_max,
            ..GridConfig::default()
        })
        .unwrap();
        let p = ShearProfile::zero(&g);
        let cfg = GrowthConfig {
            horizon: 6.0,
            dt: 1e-3,
            ..GrowthConfig::default()
        };
        let r = growth_rate(&g, &p, 8, &cfg).unwrap();
        let lowest = -(PI / y_max).powi(2);
        assert!((r.rate - lowest).abs() < 1e-2 * lowest.abs(), "{} vs {lowest}", r.rate);
    }

    #[test]
    fn synthetic_exponents() {
        let sq: BTreeMap<usize, f64> = KX_SWEEP.iter().map(|&k| (k, 2.0 * (k as f64).sqrt())).collect();
        let f = fit_growth_exponent(&sq).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 2f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let lin: BTreeMap<usize, f64> = KX_SWEEP.iter().map(|&k| (k, 3.0 * k as f64)).collect();
        assert!((fit_growth_exponent(&lin).unwrap().slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn few_positive_rates_are_insufficient() {
        let r: BTreeMap<usize, f64> = [(8, 1.0), (12, -1.0), (16, 2.0), (24, 0.0), (32, 3.0)].into_iter().collect();
        assert!(matches!(fit_growth_exponent(&r), Err(Error::InsufficientData(_))));
    }
}
