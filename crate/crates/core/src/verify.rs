//! Seeded sweeps over generated data.
//!
//! The same sweeps serve two purposes: measuring the constants committed in
//! [`crate::calibration`], and re-checking data against those constants.
//! Every sweep draws from `ChaCha8` streams keyed by a 64-bit seed and a
//! per-cell stream number, so results do not depend on thread scheduling.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::calibration;
use crate::error::{Error, Result};
use crate::fields::{hardy_check, make_initial_data, random_family_spec, sobolev_check, InitialDataSpec, State};
use crate::functionals::auxiliary::{cj_from, reconstruct_dxju, FieldSpectra};
use crate::functionals::{
    appendix_lemma_suite, find_critical_curve, relations_check, Cutoffs, EnergyFamilies, EnergyParams, EnergyReport,
    LemmaBounds, RatioReport, RelationsReport,
};
use crate::gevrey::{
    binom_convolution_check, multinom_convolution_check, random_gevrey_sequence, GevreyWeight, Side, MAX_SHIFT,
};
use crate::grid::{GridConfig, SpectralGrid};
use crate::monitor::two_run_divergence;
use crate::solver::SolverConfig;

/// Seed of the frozen calibration family.
pub const CALIBRATION_SEED: u64 = 0x7072_616e_6474_6c31;

/// Radii at which the convolution bounds are measured.
pub const CONVOLUTION_TAUS: [f64; 3] = [0.5, 1.0, 2.0];
pub const CONVOLUTION_TRIALS: usize = 1000;
/// Length of the random sequences in the convolution sweep.
pub const CONVOLUTION_J_MAX: usize = 30;
/// Number of sequences in the multinomial sweep; all shifts equal `m`.
pub const MULTINOM_N: usize = 3;

/// Exponents of the decaying Hardy inequality.
pub const HARDY_LAMBDAS: [f64; 3] = [0.0, 0.5, 1.0];
/// Exponents of the trace variant.
pub const HARDY_TRACE_LAMBDAS: [f64; 2] = [-1.0, -2.0];
pub const HARDY_PROFILES: usize = 100;
pub const HARDY_SLACK: f64 = 1e-10;

pub const SOBOLEV_FIELDS: usize = 100;
pub const FAMILY_SIZE: usize = 20;
pub const DECOMPO_SETS: usize = 10;
pub const DECOMPO_J_MAX: usize = 8;
/// Half-width of the band around the curve left out of the round-trip error.
pub const DECOMPO_BAND: f64 = 0.2;
pub const DIVERGENCE_MEMBERS: usize = 4;
/// `(nx, ny)` of the grids in the two-run calibration.
pub const DIVERGENCE_GRIDS: [(usize, usize); 4] = [(32, 257), (32, 513), (64, 257), (64, 513)];

/// Radius and weight of the energies used in the family sweeps.
pub const FAMILY_TAU: f64 = 1.0;
pub const FAMILY_ALPHA: f64 = 0.1;

/// A `ChaCha8` generator on stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rounds `x` up in its fourth significant digit.
pub fn round_up_4(x: f64) -> f64 {
    if !(x.is_finite() && x != 0.0) {
        return x;
    }
    let near: f64 = format!("{x:.3e}").parse().expect("formatted float");
    if near >= x {
        return near;
    }
    let unit = 10f64.powi(x.abs().log10().floor() as i32 - 3);
    format!("{:.3e}", near + unit).parse().expect("formatted float")
}

/// Maximum convolution ratios, indexed `[m][τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTable {
    pub binom_low: [[f64; 3]; MAX_SHIFT + 1],
    pub binom_high: [[f64; 3]; MAX_SHIFT + 1],
    pub multinom: [[f64; 3]; MAX_SHIFT + 1],
}

impl ConvolutionTable {
    /// The committed table.
    pub fn committed() -> Self {
        Self {
            binom_low: calibration::BINOM_LOW,
            binom_high: calibration::BINOM_HIGH,
            multinom: calibration::MULTINOM,
        }
    }

    fn cells(&self) -> impl Iterator<Item = (&'static str, usize, usize, f64)> + '_ {
        let tables = [
            ("binom low", &self.binom_low),
            ("binom high", &self.binom_high),
            ("multinom", &self.multinom),
        ];
        tables.into_iter().flat_map(|(name, t)| {
            (0..=MAX_SHIFT).flat_map(move |m| (0..3).map(move |k| (name, m, k, t[m][k])))
        })
    }

    /// Cells of `self` that exceed `bound`, as `(table, m, τ, value, bound)`.
    pub fn exceedances(&self, bound: &Self) -> Vec<(&'static str, usize, f64, f64, f64)> {
        self.cells()
            .zip(bound.cells())
            .filter(|((_, _, _, v), (_, _, _, b))| !(v <= b))
            .map(|((name, m, k, v), (_, _, _, b))| (name, m, CONVOLUTION_TAUS[k], v, b))
            .collect()
    }

    /// Every cell rounded up in the fourth significant digit.
    pub fn rounded_up(&self) -> Self {
        let r = |t: &[[f64; 3]; MAX_SHIFT + 1]| t.map(|row| row.map(round_up_4));
        Self {
            binom_low: r(&self.binom_low),
            binom_high: r(&self.binom_high),
            multinom: r(&self.multinom),
        }
    }
}

/// Maximum binomial and multinomial ratios over `trials` random sequences per `(m, τ)`.
pub fn convolution_sweep(seed: u64, trials: usize) -> Result<ConvolutionTable> {
    let cells: Vec<(usize, usize)> = (0..=MAX_SHIFT).flat_map(|m| (0..3).map(move |k| (m, k))).collect();
    let maxima = cells
        .par_iter()
        .map(|&(m, k)| -> Result<[f64; 3]> {
            let w = GevreyWeight::standard(CONVOLUTION_TAUS[k])?;
            let mut rng = stream_rng(seed, (m * 3 + k) as u64);
            let mut best = [0.0f64; 3];
            for _ in 0..trials {
                let a = random_gevrey_sequence(&mut rng, CONVOLUTION_J_MAX, &w)?;
                let b = random_gevrey_sequence(&mut rng, CONVOLUTION_J_MAX, &w)?;
                let c = random_gevrey_sequence(&mut rng, CONVOLUTION_J_MAX, &w)?;
                let low = binom_convolution_check(&a, &b, m, &w, Side::Low)?.ratio;
                let high = binom_convolution_check(&a, &b, m, &w, Side::High)?.ratio;
                let multi = multinom_convolution_check(&[a, b, c], &[m; MULTINOM_N - 1], &w)?.ratio;
                for (slot, v) in best.iter_mut().zip([low, high, multi]) {
                    *slot = slot.max(v);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = ConvolutionTable {
        binom_low: [[0.0; 3]; MAX_SHIFT + 1],
        binom_high: [[0.0; 3]; MAX_SHIFT + 1],
        multinom: [[0.0; 3]; MAX_SHIFT + 1],
    };
    for (&(m, k), best) in cells.iter().zip(maxima) {
        t.binom_low[m][k] = best[0];
        t.binom_high[m][k] = best[1];
        t.multinom[m][k] = best[2];
    }
    Ok(t)
}

/// `Σ_l c_l (1+y)^{−p_l} e^{−b_l y}` with three random terms.
pub fn random_decaying_profile<R: Rng + ?Sized>(grid: &SpectralGrid, rng: &mut R) -> Array1<f64> {
    let p_dist = Uniform::new(1.0, 4.0).expect("valid range");
    let b_dist = Uniform::new(0.4, 3.0).expect("valid range");
    let terms: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (StandardNormal.sample(rng), p_dist.sample(rng), b_dist.sample(rng)))
        .collect();
    grid.y_nodes().mapv(|y| {
        terms
            .iter()
            .map(|&(c, p, b)| c * (1.0 + y).powf(-p) * (-b * y).exp())
            .sum()
    })
}

/// Tally of one inequality suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteTally {
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen.
    pub worst_ratio: f64,
}

impl SuiteTally {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst_ratio: 0.0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, holds: bool) {
        self.checked += 1;
        self.violations += usize::from(!holds);
        let r = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
        if lhs > 0.0 {
            self.worst_ratio = self.worst_ratio.max(r);
        }
    }

    pub fn passed(&self) -> bool {
        self.checked > 0 && self.violations == 0
    }
}

/// Hardy inequalities on `n_profiles` random decaying profiles.
///
/// Returns the decaying-variant tally over [`HARDY_LAMBDAS`] and the trace
/// tally over [`HARDY_TRACE_LAMBDAS`].
pub fn hardy_suite(grid: &SpectralGrid, seed: u64, n_profiles: usize, slack: f64) -> Result<(SuiteTally, SuiteTally)> {
    let mut rng = stream_rng(seed, 100);
    let (mut decay, mut trace) = (SuiteTally::new(), SuiteTally::new());
    for _ in 0..n_profiles {
        let f = random_decaying_profile(grid, &mut rng);
        for &l in &HARDY_LAMBDAS {
            let r = hardy_check(grid, f.view(), l, slack)?;
            decay.record(r.lhs, r.rhs, r.holds);
        }
        for &l in &HARDY_TRACE_LAMBDAS {
            let r = hardy_check(grid, f.view(), l, slack)?;
            trace.record(r.lhs, r.rhs, r.holds);
        }
    }
    Ok((decay, trace))
}

/// Largest Sobolev ratio over `n_fields` random fields with x-modes up to 8.
pub fn sobolev_sweep(grid: &SpectralGrid, seed: u64, n_fields: usize) -> Result<f64> {
    let mut rng = stream_rng(seed, 200);
    let mut worst = 0.0f64;
    for _ in 0..n_fields {
        let k = rng.random_range(0..=8u32) as f64;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let prof = random_decaying_profile(grid, &mut rng);
        let x = grid.x_nodes();
        let f = Array2::from_shape_fn(grid.shape(), |(i, j)| (k * x[i] + phase).cos() * prof[j]);
        worst = worst.max(sobolev_check(grid, &f)?.ratio);
    }
    Ok(worst)
}

/// `n` members of the generated critical-curve family around `base`.
pub fn generated_family(grid: Arc<SpectralGrid>, base: &InitialDataSpec, seed: u64, n: usize) -> Result<Vec<State>> {
    let mut rng = stream_rng(seed, 300);
    let specs: Vec<InitialDataSpec> = (0..n).map(|_| random_family_spec(&mut rng, base)).collect();
    specs.par_iter().map(|s| make_initial_data(grid.clone(), s)).collect()
}

/// Worst relative `L²` error of the reconstruction of `∂ₓʲu`, `j ≤ j_max`,
/// outside the band `|y − a(x)| ≤ band`.
pub fn decompo_round_trip(state: &State, cutoffs: &Cutoffs, j_max: usize, band: f64) -> Result<f64> {
    let g = &state.grid;
    let curve = find_critical_curve(g, &state.omega, cutoffs.y_split)?;
    if !curve.valid {
        return Err(Error::Hypothesis("round trip needs a critical curve".into()));
    }
    let fs = FieldSpectra::new(g, &state.omega, &state.u)?;
    let y = g.y_nodes();
    let wts = g.y_weights();
    let mut worst = 0.0f64;
    for j in 0..=j_max {
        let du = fs.dxj_u(j);
        let gj = fs.gj_from(&fs.dxj_omega(j), &du, cutoffs)?;
        let cj = cj_from(g, &state.omega, &du, cutoffs.y_split)?;
        let rec = reconstruct_dxju(g, &gj, &state.omega, &curve, cutoffs, &cj)?;
        let (mut num, mut den) = (0.0, 0.0);
        for ((i, k), &v) in du.indexed_iter() {
            if (y[k] - curve.a[i]).abs() > band {
                num += wts[k] * (rec[[i, k]] - v).powi(2);
                den += wts[k] * v * v;
            }
        }
        if den > 0.0 {
            worst = worst.max((num / den).sqrt());
        }
    }
    Ok(worst)
}

fn family_energies(state: &State, cutoffs: &Cutoffs, params: &EnergyParams) -> Result<(EnergyFamilies, EnergyReport)> {
    let curve = find_critical_curve(&state.grid, &state.omega, cutoffs.y_split)?;
    let fam = EnergyFamilies::compute(state, &curve, cutoffs, params)?;
    let rep = EnergyReport::from_families(&fam, &GevreyWeight::standard(FAMILY_TAU)?, FAMILY_ALPHA)?;
    Ok((fam, rep))
}

/// Relations ratios and auxiliary-bound ratios on each family member.
pub fn family_ratios(
    states: &[State],
    cutoffs: &Cutoffs,
    params: &EnergyParams,
    c_rel: f64,
    bounds: &LemmaBounds,
) -> Result<Vec<(RelationsReport, Vec<RatioReport>)>> {
    let w = GevreyWeight::standard(FAMILY_TAU)?;
    states
        .par_iter()
        .map(|s| {
            let (fam, rep) = family_energies(s, cutoffs, params)?;
            Ok((relations_check(&rep, c_rel), appendix_lemma_suite(&fam, &rep, &w, bounds)?))
        })
        .collect()
}

/// Largest relations ratio across `reports`; `None` if any ratio is indeterminate.
pub fn max_relations_ratio(reports: &[RelationsReport]) -> Option<f64> {
    reports.iter().try_fold(0.0f64, |m, r| {
        r.within()?;
        r.max_ratio().map(|v| m.max(v))
    })
}

/// Largest ratio per lemma name pattern, in the order of the first member's suite.
pub fn lemma_maxima(suites: &[Vec<RatioReport>]) -> Vec<(String, f64)> {
    let Some(first) = suites.first() else {
        return Vec::new();
    };
    first
        .iter()
        .enumerate()
        .map(|(k, r0)| {
            let name = r0.name.split(" (j = ").next().unwrap_or(&r0.name).to_string();
            let m = suites
                .iter()
                .filter_map(|s| s.get(k).and_then(|r| r.ratio))
                .fold(0.0f64, f64::max);
            (name, m)
        })
        .collect()
}

/// Largest exponent `ln(gap(t)/gap(t₀))/(t − t₀)` over two-run tests on
/// `states` with perturbation size `eta`.
pub fn divergence_rate_sweep(states: &[State], eta: f64, cfg: &SolverConfig) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for s in states {
        let rep = two_run_divergence(s, eta, cfg)?;
        let (t0, g0) = (rep.times[0], rep.gaps[0]);
        for (&t, &gap) in rep.times.iter().zip(&rep.gaps) {
            if t > t0 && gap > 0.0 {
                worst = worst.max((gap / g0).ln() / (t - t0));
            }
        }
    }
    Ok(worst)
}

/// Grid, data and solver settings shared by the calibration sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub grid: GridConfig,
    /// Grid of the decompo round trip; few x-modes keep `∂ₓ⁸` round-off small.
    pub decompo_grid: GridConfig,
    pub data: InitialDataSpec,
    pub cutoffs: Cutoffs,
    pub energy: EnergyParams,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig {
                nx: 32,
                ny: 513,
                ..GridConfig::default()
            },
            decompo_grid: GridConfig {
                nx: 16,
                ny: 1025,
                ..GridConfig::default()
            },
            data: InitialDataSpec::default(),
            cutoffs: Cutoffs::default(),
            energy: EnergyParams::default(),
            seed: CALIBRATION_SEED,
        }
    }
}

impl VerifyConfig {
    /// Solver settings of the two-run calibration: `t ∈ [0, 0.05]`, `η = 1e−10`.
    pub fn divergence_solver(&self) -> SolverConfig {
        SolverConfig {
            n_galerkin: self.grid.nx / 3,
            t_end: 0.05,
            ..SolverConfig::default()
        }
    }
}

/// Perturbation size of the two-run calibration.
pub const DIVERGENCE_ETA: f64 = 1e-10;

/// Raw sweep maxima, before rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub sobolev: f64,
    pub relations: Option<f64>,
    pub lemmas: Vec<(String, f64)>,
    pub convolution: ConvolutionTable,
    pub lambda: f64,
}

/// Runs every calibration sweep on the frozen family of `cfg`.
pub fn measure_calibration(cfg: &VerifyConfig) -> Result<Calibration> {
    let grid = Arc::new(SpectralGrid::new(&cfg.grid)?);
    let sobolev = sobolev_sweep(&grid, cfg.seed, SOBOLEV_FIELDS)?;
    let family = generated_family(grid.clone(), &cfg.data, cfg.seed, FAMILY_SIZE)?;
    let ratios = family_ratios(&family, &cfg.cutoffs, &cfg.energy, f64::INFINITY, &LemmaBounds::unbounded())?;
    let (rel, suites): (Vec<_>, Vec<_>) = ratios.into_iter().unzip();
    let convolution = convolution_sweep(cfg.seed, CONVOLUTION_TRIALS)?;
    let mut lambda = f64::NEG_INFINITY;
    for (nx, ny) in DIVERGENCE_GRIDS {
        let gcfg = GridConfig { nx, ny, ..cfg.grid.clone() };
        let g = Arc::new(SpectralGrid::new(&gcfg)?);
        let mut div = vec![make_initial_data(g.clone(), &cfg.data)?];
        div.extend(generated_family(g, &cfg.data, cfg.seed, DIVERGENCE_MEMBERS)?);
        let solver = VerifyConfig { grid: gcfg, ..cfg.clone() }.divergence_solver();
        lambda = lambda.max(divergence_rate_sweep(&div, DIVERGENCE_ETA, &solver)?);
    }
    Ok(Calibration {
        sobolev,
        relations: max_relations_ratio(&rel),
        lemmas: lemma_maxima(&suites),
        convolution,
        lambda,
    })
}

/// Pass/fail outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Decompo round-trip tolerance.
pub const DECOMPO_TOL: f64 = 1e-7;

/// Inequality suites on the generated families, checked against the committed constants.
pub fn verify_suite(cfg: &VerifyConfig) -> Result<Vec<Verdict>> {
    let grid = Arc::new(SpectralGrid::new(&cfg.grid)?);
    let mut out = Vec::new();

    let (decay, trace) = hardy_suite(&grid, cfg.seed, HARDY_PROFILES, HARDY_SLACK)?;
    for (name, t) in [("hardy", decay), ("hardy trace", trace)] {
        out.push(Verdict::new(
            name,
            t.passed(),
            format!("{} violations in {} checks, worst ratio {:.6}", t.violations, t.checked, t.worst_ratio),
        ));
    }

    let sob = sobolev_sweep(&grid, cfg.seed, SOBOLEV_FIELDS)?;
    out.push(Verdict::new(
        "sobolev",
        sob <= calibration::C_SOB,
        format!("max ratio {sob:.6} vs C_sob = {}", calibration::C_SOB),
    ));

    let dgrid = Arc::new(SpectralGrid::new(&cfg.decompo_grid)?);
    let errs = generated_family(dgrid, &cfg.data, cfg.seed, DECOMPO_SETS)?
        .par_iter()
        .map(|s| decompo_round_trip(s, &cfg.cutoffs, DECOMPO_J_MAX, DECOMPO_BAND))
        .collect::<Result<Vec<f64>>>()?;
    let worst = errs.iter().copied().fold(0.0f64, f64::max);
    out.push(Verdict::new(
        "decompo",
        worst < DECOMPO_TOL,
        format!("max relative error {worst:.3e} over {} data sets, j ≤ {DECOMPO_J_MAX}", errs.len()),
    ));

    let family = generated_family(grid.clone(), &cfg.data, cfg.seed, FAMILY_SIZE)?;
    let ratios = family_ratios(&family, &cfg.cutoffs, &cfg.energy, calibration::C_REL, &LemmaBounds::calibrated())?;
    let rel: Vec<RelationsReport> = ratios.iter().map(|(r, _)| r.clone()).collect();
    let rel_ok = rel.iter().all(|r| r.within() == Some(true));
    out.push(Verdict::new(
        "relations",
        rel_ok,
        match max_relations_ratio(&rel) {
            Some(m) => format!("max ratio {m:.6} vs C_rel = {}", calibration::C_REL),
            None => "indeterminate ratio".to_string(),
        },
    ));
    let failing: Vec<String> = ratios
        .iter()
        .flat_map(|(_, suite)| suite.iter().filter(|r| r.within() == Some(false)).map(|r| r.name.clone()))
        .collect();
    out.push(Verdict::new(
        "auxiliary bounds",
        failing.is_empty(),
        if failing.is_empty() {
            format!("{} members within bounds", ratios.len())
        } else {
            format!("exceeded: {}", failing.join(", "))
        },
    ));

    let conv = convolution_sweep(cfg.seed, CONVOLUTION_TRIALS)?;
    let over = conv.exceedances(&ConvolutionTable::committed());
    out.push(Verdict::new(
        "convolution",
        over.is_empty(),
        if over.is_empty() {
            format!("{CONVOLUTION_TRIALS} trials per cell within the committed table")
        } else {
            over.iter()
                .map(|(n, m, t, v, b)| format!("{n} m = {m} τ = {t}: {v:e} > {b:e}"))
                .collect::<Vec<_>>()
                .join("; ")
        },
    ));
    Ok(out)
}
