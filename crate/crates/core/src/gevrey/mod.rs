//! Gevrey weights `α_j(τ) = τ^j (j!)^{−m} (j+1)^p` and the weighted sequence
//! spaces `l^p(τ)` built on them.
//!
//! Weights are handled in log space; linear-scale values only appear inside
//! max-shifted sums.

mod convolution;

pub use convolution::{
    binom_convolution, binom_convolution_check, multinom_convolution,
    multinom_convolution_check, random_gevrey_sequence, ConvolutionReport, Side, MAX_SHIFT,
};

use crate::error::{contract, Result};

/// Default Gevrey index.
pub const GEVREY_M: f64 = 1.75;
/// Default Sobolev-correction exponent.
pub const P_CORR: f64 = 10.0;
/// Correction exponent of the weaker norm used for uniqueness.
pub const P_CORR_UNIQUENESS: f64 = 8.0;

/// `ln(j!)` through the log-gamma function.
pub fn ln_factorial(j: usize) -> f64 {
    libm::lgamma(j as f64 + 1.0)
}

/// `ln C(j, k)`.
pub fn ln_binomial(j: usize, k: usize) -> f64 {
    debug_assert!(k <= j);
    ln_factorial(j) - ln_factorial(k) - ln_factorial(j - k)
}

/// Gevrey weight parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevreyWeight {
    pub tau: f64,
    pub m: f64,
    pub p_corr: f64,
}

impl GevreyWeight {
    pub fn new(tau: f64, m: f64, p_corr: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return contract(format!("Gevrey radius τ = {tau} must be positive"));
        }
        if !(m > 0.0 && m.is_finite() && p_corr.is_finite()) {
            return contract(format!("invalid Gevrey index m = {m} or exponent p = {p_corr}"));
        }
        Ok(Self { tau, m, p_corr })
    }

    /// `m = 7/4`, `p = 10`.
    pub fn standard(tau: f64) -> Result<Self> {
        Self::new(tau, GEVREY_M, P_CORR)
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(tau, self.m, self.p_corr)
    }

    /// `λ_j(τ) = j ln τ − m ln j! + p ln(j+1)`.
    pub fn log_weight(&self, j: usize) -> f64 {
        j as f64 * self.tau.ln() - self.m * ln_factorial(j) + self.p_corr * ((j + 1) as f64).ln()
    }

    /// `α_j(τ)` in linear scale; may underflow to zero for large `j`.
    pub fn linear(&self, j: usize) -> f64 {
        self.log_weight(j).exp()
    }
}

/// Log-weight `λ_j(τ)`.
pub fn weight(j: usize, w: &GevreyWeight) -> Result<f64> {
    if !(w.tau > 0.0) {
        return contract(format!("Gevrey radius τ = {} must be positive", w.tau));
    }
    Ok(w.log_weight(j))
}

/// Nonnegative finite sequence `a_0, …, a_{J_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GevreySeq {
    values: Vec<f64>,
}

/// Smallest admissible truncation index.
pub const MIN_J_MAX: usize = 5;

impl GevreySeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_J_MAX + 1 {
            return contract(format!(
                "sequence has J_max = {}, need at least {MIN_J_MAX}",
                values.len() as isize - 1
            ));
        }
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return contract(format!("sequence entry a_{j} = {v} is not a finite nonnegative real"));
        }
        Ok(Self { values })
    }

    pub fn zeros(j_max: usize) -> Result<Self> {
        Self::new(vec![0.0; j_max + 1])
    }

    pub fn j_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a_j`, with the convention `a_j = 0` beyond the truncation.
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or(0.0)
    }

    /// Entry-wise product with a fixed factor sequence `f(j)`.
    pub fn scaled(&self, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(self.values.iter().enumerate().map(|(j, v)| v * f(j)).collect())
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `ln Σ exp(t_i)`, with `−∞` for an empty or all-`−∞` input.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let shifted: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    max + pairwise_sum(&shifted).ln()
}

fn weighted_log_terms(seq: &GevreySeq, w: &GevreyWeight, p: f64, extra: impl Fn(usize) -> f64) -> Vec<f64> {
    seq.values
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let e = extra(j);
            if a == 0.0 || e == 0.0 {
                f64::NEG_INFINITY
            } else {
                2.0 * w.log_weight(j) + p * a.ln() + e.ln()
            }
        })
        .collect()
}

/// `‖a‖_{l^p(τ)} = (Σ α_j(τ)² |a_j|^p)^{1/p}`.
pub fn lp_tau_norm(seq: &GevreySeq, w: &GevreyWeight, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return contract(format!("l^p exponent p = {p} must be at least 1"));
    }
    let lse = log_sum_exp(&weighted_log_terms(seq, w, p, |_| 1.0));
    Ok((lse / p).exp())
}

/// `‖a‖²_{l²(τ)}`, the energy carried by a family.
pub fn l2_tau_squared(seq: &GevreySeq, w: &GevreyWeight) -> f64 {
    log_sum_exp(&weighted_log_terms(seq, w, 2.0, |_| 1.0)).exp()
}

/// The τ-derivative of a squared `l²(τ)` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtauReport {
    /// `Σ (2j/τ) α_j² a_j²`.
    pub exact: f64,
    /// `‖j^{1/2} a_j‖²_{l²(τ)}`, equal to `τ/2 · exact`.
    pub surrogate: f64,
}

/// Exact `∂_τ ‖a‖²_{l²(τ)}` together with the `‖j^{1/2} a‖²` surrogate.
pub fn dtau_lp2(seq: &GevreySeq, w: &GevreyWeight) -> Result<DtauReport> {
    if !(w.tau > 0.0) {
        return contract(format!("Gevrey radius τ = {} must be positive", w.tau));
    }
    let tau = w.tau;
    let exact = log_sum_exp(&weighted_log_terms(seq, w, 2.0, |j| 2.0 * j as f64 / tau)).exp();
    let surrogate = log_sum_exp(&weighted_log_terms(seq, w, 2.0, |j| j as f64)).exp();
    Ok(DtauReport { exact, surrogate })
}
