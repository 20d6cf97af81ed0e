//! Finite-difference and interpolation weights on nonuniform nodes.

/// Weights for derivatives `0..=max_order` at `z` from values at `x`.
///
/// `w[d][i]` multiplies `f(x[i])` in the approximation of `f^{(d)}(z)`.
/// This is Fornberg's recursion, exact for polynomials of degree `< x.len()`.
pub fn fornberg(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A row of a banded operator: `sum_k w[k] * f[start + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub w: Vec<f64>,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, f: &[f64]) -> f64 {
        self.w
            .iter()
            .zip(&f[self.start..self.start + self.w.len()])
            .map(|(w, v)| w * v)
            .sum()
    }
}

/// Index of the first node of a `width`-point window centred on `i`, clamped to `[lo, hi]`.
pub fn window_start(i: usize, width: usize, lo: usize, hi: usize) -> usize {
    let half = (width - 1) / 2;
    let s = i.saturating_sub(half).max(lo);
    s.min(hi + 1 - width)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (four points, exact to degree 7).
pub const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Eight-point Gauss–Legendre rule on `[-1, 1]`.
pub const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Values of the Lagrange basis polynomials on `nodes` at `z`.
pub fn lagrange_basis(nodes: &[f64], z: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, &xk)| (z - xk) / (nodes[i] - xk))
                .product()
        })
        .collect()
}

/// Weights `w` with `sum w[i] f(nodes[i]) = ∫_a^b p(y) dy`, `p` the interpolant of `f`.
pub fn interpolant_integral_weights(nodes: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    for &(g, gw) in GAUSS4.iter() {
        let basis = lagrange_basis(nodes, mid + half * g);
        for (wi, li) in w.iter_mut().zip(basis) {
            *wi += gw * half * li;
        }
    }
    w
}
