//! Ratio tests of the comparison inequalities between energy functionals.
//!
//! The constants in these inequalities are not explicit, so each check
//! reports `lhs / rhs` and compares it against a bound measured on a frozen
//! family of generated data (see [`crate::calibration`]).

use super::energy::{EnergyFamilies, EnergyReport};
use crate::calibration;
use crate::error::Result;
use crate::gevrey::{l2_tau_squared, GevreySeq, GevreyWeight};

/// Denominators below this are reported as indeterminate.
pub const INDETERMINATE_BELOW: f64 = 1e-300;

/// One inequality `lhs ≤ C · rhs` evaluated on a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when `rhs` is numerically zero.
    pub ratio: Option<f64>,
    pub bound: f64,
}

impl RatioReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, bound: f64) -> Self {
        let ratio = (rhs >= INDETERMINATE_BELOW).then(|| lhs / rhs);
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            bound,
        }
    }

    /// `Some(ratio ≤ bound)`, or `None` when indeterminate.
    pub fn within(&self) -> Option<bool> {
        self.ratio.map(|r| r <= self.bound)
    }

    /// Keeps the report with the larger ratio.
    fn worst(self, other: Self) -> Self {
        match (self.ratio, other.ratio) {
            (_, None) => self,
            (None, Some(_)) => other,
            (Some(a), Some(b)) => {
                if b > a {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Two-sided comparison of `E_ω − Ė_ω` with `E¹_g + E_h`, and of their `∂_τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationsReport {
    /// `(E_ω − Ė_ω) / (E¹_g + E_h)`.
    pub r1: Option<f64>,
    /// `(E¹_g + E_h) / (E_ω − Ė_ω)`.
    pub r2: Option<f64>,
    pub dtau_r1: Option<f64>,
    pub dtau_r2: Option<f64>,
    pub c_rel: f64,
}

impl RelationsReport {
    /// Largest of the four ratios, ignoring indeterminate ones.
    pub fn max_ratio(&self) -> Option<f64> {
        [self.r1, self.r2, self.dtau_r1, self.dtau_r2]
            .into_iter()
            .flatten()
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    }

    /// `Some(true)` when every ratio lies in `[1/C_rel, C_rel]`; `None` if any is indeterminate.
    pub fn within(&self) -> Option<bool> {
        let all = [self.r1, self.r2, self.dtau_r1, self.dtau_r2];
        if all.iter().any(Option::is_none) {
            return None;
        }
        let lo = 1.0 / self.c_rel;
        Some(all.iter().flatten().all(|&r| r >= lo && r <= self.c_rel))
    }
}

fn quotient(num: f64, den: f64) -> Option<f64> {
    (den >= INDETERMINATE_BELOW && num >= INDETERMINATE_BELOW).then(|| num / den)
}

/// Compares `E_ω − Ė_ω` against `E¹_g + E_h` at one radius.
pub fn relations_check(report: &EnergyReport, c_rel: f64) -> RelationsReport {
    let lhs = report.e_x;
    let rhs = report.e_g1 + report.e_h;
    let dlhs = report.dtau_e_x;
    let drhs = report.dtau_e_g1 + report.dtau_e_h;
    RelationsReport {
        r1: quotient(lhs, rhs),
        r2: quotient(rhs, lhs),
        dtau_r1: quotient(dlhs, drhs),
        dtau_r2: quotient(drhs, dlhs),
        c_rel,
    }
}

/// Calibrated constants of the auxiliary-function inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaBounds {
    pub cj: f64,
    pub dx_cj: f64,
    pub g_low: f64,
    /// Indexed like [`TILDE_GJ_GJ_ALPHAS`].
    pub tilde_gj_gj: [f64; 2],
    /// Indexed by `l` then like [`TILDE_GJ_ALPHAS`].
    pub tilde_gj: [[f64; 2]; 3],
    pub dy_tilde: f64,
}

/// Exponents `α` at which `‖j^{α/4} g_j‖ ≲ ‖j^{α/4} g̃_j‖ + ‖j^{(α−3)/4}‖ω‖_{𝓗ʲ_γ}‖` is tested.
pub const TILDE_GJ_GJ_ALPHAS: [f64; 2] = [0.0, 5.0];
/// Exponents `α` at which `‖j^α ∂_y^l g̃_{j−l}‖ ≲ ‖j^α ‖ω‖_{𝓗ʲ_γ}‖` is tested.
pub const TILDE_GJ_ALPHAS: [f64; 2] = [0.0, 0.75];

impl LemmaBounds {
    pub fn calibrated() -> Self {
        Self {
            cj: calibration::C_LEMMA_CJ,
            dx_cj: calibration::C_LEMMA_DX_CJ,
            g_low: calibration::C_LEMMA_G_LOW,
            tilde_gj_gj: calibration::C_LEMMA_TILDE_GJ_GJ,
            tilde_gj: calibration::C_LEMMA_TILDE_GJ,
            dy_tilde: calibration::C_LEMMA_DY_TILDE,
        }
    }

    /// Bounds that accept every ratio, used while measuring constants.
    pub fn unbounded() -> Self {
        let inf = f64::INFINITY;
        Self {
            cj: inf,
            dx_cj: inf,
            g_low: inf,
            tilde_gj_gj: [inf; 2],
            tilde_gj: [[inf; 2]; 3],
            dy_tilde: inf,
        }
    }
}

fn jpow(j: usize, p: f64) -> f64 {
    (j.max(1) as f64).powf(p)
}

fn scaled(seq: &GevreySeq, f: impl Fn(usize, f64) -> f64) -> Result<GevreySeq> {
    GevreySeq::new(seq.values().iter().enumerate().map(|(j, &v)| f(j, v)).collect())
}

fn l2(seq: &GevreySeq, w: &GevreyWeight) -> f64 {
    l2_tau_squared(seq, w).sqrt()
}

/// Worst per-`j` ratio of `lhs[j] ≤ C rhs[j]`.
fn per_j(name: &str, lhs: &[f64], rhs: &[f64], bound: f64) -> RatioReport {
    lhs.iter()
        .zip(rhs)
        .enumerate()
        .map(|(j, (&l, &r))| RatioReport::new(format!("{name} (j = {j})"), l, r, bound))
        .reduce(RatioReport::worst)
        .unwrap_or_else(|| RatioReport::new(name, 0.0, 0.0, bound))
}

/// Evaluates the auxiliary-function inequalities on one snapshot at radius `w.tau`.
pub fn appendix_lemma_suite(fam: &EnergyFamilies, report: &EnergyReport, w: &GevreyWeight, bounds: &LemmaBounds) -> Result<Vec<RatioReport>> {
    let mut out = Vec::new();
    let dxw = fam.dxj_omega.values();
    if let Some((c, dc)) = &fam.cj {
        out.push(per_j("C_j vs d_x^j omega", c.values(), dxw, bounds.cj));
        let n = dxw.len() - 1;
        let rhs: Vec<f64> = (0..n).map(|j| dxw[j + 1] + dxw[j]).collect();
        out.push(per_j("d_x C_j vs d_x^(j+1) omega", &dc.values()[..n], &rhs, bounds.dx_cj));
    }
    out.push(per_j("g_j below split vs d_x^j omega", fam.g_low.values(), dxw, bounds.g_low));

    for (k, &alpha) in TILDE_GJ_GJ_ALPHAS.iter().enumerate() {
        let lhs = scaled(&fam.g_low, |j, v| jpow(j, alpha / 4.0) * v)?;
        let t = scaled(&fam.tilde_low, |j, v| jpow(j, alpha / 4.0) * v)?;
        let o = scaled(&fam.calh, |j, v| jpow(j, (alpha - 3.0) / 4.0) * v)?;
        out.push(RatioReport::new(
            format!("g_j vs tilde g_j (alpha = {alpha})"),
            l2(&lhs, w),
            l2(&t, w) + l2(&o, w),
            bounds.tilde_gj_gj[k],
        ));
    }

    for (l, family) in fam.tilde_dy.iter().enumerate() {
        for (k, &alpha) in TILDE_GJ_ALPHAS.iter().enumerate() {
            let lhs = GevreySeq::new(
                (0..=fam.calh.j_max())
                    .map(|j| if j < l { 0.0 } else { (j as f64).powf(alpha) * family.get(j - l) })
                    .collect(),
            )?;
            let rhs = scaled(&fam.calh, |j, v| (j as f64).powf(alpha) * v)?;
            out.push(RatioReport::new(
                format!("d_y^{l} tilde g_(j-{l}) vs calH (alpha = {alpha})"),
                l2(&lhs, w),
                l2(&rhs, w),
                bounds.tilde_gj[l][k],
            ));
        }
    }

    let gap = scaled(&fam.tilde_gap, |j, v| (j as f64).powf(0.75) * v)?;
    out.push(RatioReport::new(
        "d_y(tilde g_j - g_j) near the curve vs D_h + E_omega",
        l2_tau_squared(&gap, w),
        report.d_h + report.e_omega,
        bounds.dy_tilde,
    ));
    Ok(out)
}
