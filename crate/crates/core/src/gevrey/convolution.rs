//! Binomial and multinomial convolution bounds in `l²(τ)`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::{ln_binomial, ln_factorial, log_sum_exp, lp_tau_norm, GevreySeq, GevreyWeight};
use crate::error::{contract, Error, Result};

/// Largest index shift covered by the convolution lemmas.
pub const MAX_SHIFT: usize = 5;

/// Which half of the binomial sum is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `Σ_{k ≤ ⌊j/2⌋} C(j,k) a_{k+m} b_{j−k}`.
    Low,
    /// `Σ_{⌊j/2⌋ ≤ k ≤ j} C(j,k) a_k b_{j−k+m}`.
    High,
}

/// Outcome of a convolution-bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionReport {
    /// `l²(τ)` norm of the convolved sequence.
    pub lhs: f64,
    /// Product of the `l²(τ)` norms of the inputs.
    pub rhs_product: f64,
    /// `lhs / rhs_product`, zero when `lhs` vanishes.
    pub ratio: f64,
    /// False when a shift exceeds the lemma's range; the numbers are still reported.
    pub hypothesis_ok: bool,
}

fn ln_entry(s: &GevreySeq, j: usize) -> f64 {
    let v = s.get(j);
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn to_seq(terms: Vec<f64>) -> Result<GevreySeq> {
    if let Some(j) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            family: "convolution",
            j,
        });
    }
    GevreySeq::new(terms)
}

/// The half binomial convolution of `a` and `b` with index shift `m`.
pub fn binom_convolution(a: &GevreySeq, b: &GevreySeq, m: usize, side: Side) -> Result<GevreySeq> {
    let j_max = a.j_max().min(b.j_max());
    let out = (0..=j_max)
        .map(|j| {
            let range = match side {
                Side::Low => 0..=j / 2,
                Side::High => j / 2..=j,
            };
            let terms: Vec<f64> = range
                .map(|k| {
                    let (ia, ib) = match side {
                        Side::Low => (k + m, j - k),
                        Side::High => (k, j - k + m),
                    };
                    ln_binomial(j, k) + ln_entry(a, ia) + ln_entry(b, ib)
                })
                .collect();
            log_sum_exp(&terms).exp()
        })
        .collect();
    to_seq(out)
}

fn report(c: &GevreySeq, inputs: &[&GevreySeq], w: &GevreyWeight, ok: bool) -> Result<ConvolutionReport> {
    let lhs = lp_tau_norm(c, w, 2.0)?;
    let mut rhs_product = 1.0;
    for s in inputs {
        rhs_product *= lp_tau_norm(s, w, 2.0)?;
    }
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_product };
    Ok(ConvolutionReport {
        lhs,
        rhs_product,
        ratio,
        hypothesis_ok: ok,
    })
}

/// Evaluates both sides of the binomial convolution bound.
pub fn binom_convolution_check(
    a: &GevreySeq,
    b: &GevreySeq,
    m: usize,
    w: &GevreyWeight,
    side: Side,
) -> Result<ConvolutionReport> {
    let c = binom_convolution(a, b, m, side)?;
    report(&c, &[a, b], w, m <= MAX_SHIFT)
}

fn compositions(rem: usize, parts: usize, prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(rem);
        visit(prefix);
        prefix.pop();
        return;
    }
    for k in 0..=rem {
        prefix.push(k);
        compositions(rem - k, parts - 1, prefix, visit);
        prefix.pop();
    }
}

/// `Σ_{K₁(j)} j!/∏k_l! · a¹_{k₁} ∏_{l≥2} a^l_{k_l+m_l}`, where `K₁(j)` holds
/// the compositions of `j` into `N` parts with `k₁ ≥ j/N`.
pub fn multinom_convolution(seqs: &[GevreySeq], shifts: &[usize]) -> Result<GevreySeq> {
    let n = seqs.len();
    if n < 2 {
        return contract(format!("multinomial convolution needs N ≥ 2 sequences, got {n}"));
    }
    if shifts.len() != n - 1 {
        return contract(format!("expected {} shifts, got {}", n - 1, shifts.len()));
    }
    let j_max = seqs.iter().map(GevreySeq::j_max).min().unwrap_or(0);
    let out = (0..=j_max)
        .map(|j| {
            let k1_min = j.div_ceil(n);
            let mut terms = Vec::new();
            let mut prefix = Vec::with_capacity(n);
            for k1 in k1_min..=j {
                let head = ln_factorial(j) - ln_factorial(k1) + ln_entry(&seqs[0], k1);
                if head == f64::NEG_INFINITY {
                    continue;
                }
                compositions(j - k1, n - 1, &mut prefix, &mut |rest: &[usize]| {
                    let mut t = head;
                    for (l, &k) in rest.iter().enumerate() {
                        t += ln_entry(&seqs[l + 1], k + shifts[l]) - ln_factorial(k);
                    }
                    terms.push(t);
                });
            }
            log_sum_exp(&terms).exp()
        })
        .collect();
    to_seq(out)
}

/// Evaluates both sides of the multinomial convolution bound.
pub fn multinom_convolution_check(
    seqs: &[GevreySeq],
    shifts: &[usize],
    w: &GevreyWeight,
) -> Result<ConvolutionReport> {
    let c = multinom_convolution(seqs, shifts)?;
    let inputs: Vec<&GevreySeq> = seqs.iter().collect();
    report(&c, &inputs, w, shifts.iter().all(|&m| m <= MAX_SHIFT))
}

/// A random member of the log-normal Gevrey family
/// `a_j = exp(Z_j) (j+1)^{−q} / α_j(τ)`, `Z_j ~ N(0,1)`, `q ~ U[1,3]`.
pub fn random_gevrey_sequence<R: Rng + ?Sized>(rng: &mut R, j_max: usize, w: &GevreyWeight) -> Result<GevreySeq> {
    let q: f64 = Uniform::new(1.0, 3.0).expect("valid range").sample(rng);
    let v = (0..=j_max)
        .map(|j| {
            let z: f64 = StandardNormal.sample(rng);
            (z - w.log_weight(j) - q * ((j + 1) as f64).ln()).exp()
        })
        .collect();
    GevreySeq::new(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(j_max: usize) -> GevreySeq {
        let mut v = vec![0.0; j_max + 1];
        v[0] = 1.0;
        GevreySeq::new(v).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_ratio() {
        let w = GevreyWeight::standard(1.0).unwrap();
        let z = GevreySeq::zeros(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_gevrey_sequence(&mut rng, 10, &w).unwrap();
        for side in [Side::Low, Side::High] {
            let r = binom_convolution_check(&a, &z, 2, &w, side).unwrap();
            assert_eq!((r.lhs, r.ratio), (0.0, 0.0));
        }
        let r = multinom_convolution_check(&[a.clone(), z, a], &[1, 1], &w).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn unit_sequences_give_unit_ratio() {
        let w = GevreyWeight::standard(0.7).unwrap();
        let e = unit(12);
        let r = binom_convolution_check(&e, &e, 0, &w, Side::Low).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-15);
        let c = binom_convolution(&e, &e, 0, Side::Low).unwrap();
        assert!(c.values()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shift_beyond_range_is_reported() {
        let w = GevreyWeight::standard(1.0).unwrap();
        let e = unit(8);
        assert!(!binom_convolution_check(&e, &e, 6, &w, Side::High).unwrap().hypothesis_ok);
        assert!(binom_convolution_check(&e, &e, 5, &w, Side::High).unwrap().hypothesis_ok);
    }

    #[test]
    fn binom_matches_direct_sum() {
        let a = GevreySeq::new(vec![1.0, 0.5, 0.25, 2.0, 0.1, 0.3, 0.7, 0.9]).unwrap();
        let b = GevreySeq::new(vec![0.2, 1.5, 0.4, 0.1, 0.6, 0.3, 0.2, 0.05]).unwrap();
        let choose = |n: usize, k: usize| -> f64 { (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product() };
        let low = binom_convolution(&a, &b, 2, Side::Low).unwrap();
        let high = binom_convolution(&a, &b, 1, Side::High).unwrap();
        for j in 0..=7 {
            let l: f64 = (0..=j / 2).map(|k| choose(j, k) * a.get(k + 2) * b.get(j - k)).sum();
            let h: f64 = (j / 2..=j).map(|k| choose(j, k) * a.get(k) * b.get(j - k + 1)).sum();
            assert!((low.get(j) - l).abs() <= 1e-13 * l.max(1.0));
            assert!((high.get(j) - h).abs() <= 1e-13 * h.max(1.0));
        }
    }

    #[test]
    fn multinom_two_sequences_is_low_half_binom() {
        let w = GevreyWeight::standard(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 0..=5 {
            let a = random_gevrey_sequence(&mut rng, 20, &w).unwrap();
            let b = random_gevrey_sequence(&mut rng, 20, &w).unwrap();
            let low = binom_convolution(&a, &b, m, Side::Low).unwrap();
            let multi = multinom_convolution(&[b.clone(), a.clone()], &[m]).unwrap();
            for j in 0..=20 {
                let (x, y) = (low.get(j), multi.get(j));
                assert!((x - y).abs() <= 1e-12 * x.max(y), "j = {j}, m = {m}");
            }
        }
    }

    #[test]
    fn multinom_three_matches_brute_force() {
        let s: Vec<GevreySeq> = (0..3)
            .map(|l| GevreySeq::new((0..9).map(|j| 1.0 / (1.0 + (j * (l + 1)) as f64)).collect()).unwrap())
            .collect();
        let c = multinom_convolution(&s, &[1, 2]).unwrap();
        let fact = |n: usize| -> f64 { (1..=n).map(|v| v as f64).product() };
        for j in 0..=8 {
            let mut direct = 0.0;
            for k1 in 0..=j {
                if 3 * k1 < j {
                    continue;
                }
                for k2 in 0..=j - k1 {
                    let k3 = j - k1 - k2;
                    direct += fact(j) / (fact(k1) * fact(k2) * fact(k3))
                        * s[0].get(k1)
                        * s[1].get(k2 + 1)
                        * s[2].get(k3 + 2);
                }
            }
            assert!((c.get(j) - direct).abs() <= 1e-12 * direct.max(1e-300));
        }
    }
}
