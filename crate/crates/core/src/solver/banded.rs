//! LU factorization with partial pivoting for banded real matrices.

use crate::error::{contract, Error, Result};

/// Banded matrix with `kl` sub- and `ku` super-diagonals, factored in place.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Zero matrix with room for the fill-in of pivoting.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            a: vec![0.0; n * width],
            piv: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.kl + self.ku && j < self.n
    }

    /// Sets entry `(i, j)`, which must lie within the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if !(i < self.n && j + self.kl >= i && j <= i + self.ku && j < self.n) {
            return contract(format!("entry ({i}, {j}) outside the band"));
        }
        let k = self.idx(i, j);
        self.a[k] = v;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && self.in_band(i, j) {
            self.a[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Gaussian elimination with row pivoting inside the band.
    pub fn factor(mut self) -> Result<Self> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.a[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.a[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) {
                return Err(Error::Degenerate(format!("singular banded matrix at row {k}")));
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for c in k..=last_col {
                    let (ik, ip) = (self.idx(k, c), self.idx(p, c));
                    self.a.swap(ik, ip);
                }
            }
            let d = self.a[self.idx(k, k)];
            for r in k + 1..=last_row {
                let irk = self.idx(r, k);
                let l = self.a[irk] / d;
                self.a[irk] = l;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let (irc, ikc) = (self.idx(r, c), self.idx(k, c));
                    self.a[irc] -= l * self.a[ikc];
                }
            }
        }
        self.piv = piv;
        Ok(self)
    }

    /// Solves `A x = b` in place; requires a prior [`factor`](Self::factor).
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        if self.piv.len() != n || b.len() != n {
            return contract("banded solve needs a factored matrix and a matching right-hand side");
        }
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + kl).min(n - 1) {
                    b[r] -= self.a[self.idx(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.a[self.idx(k, c)] * b[c];
            }
            b[k] = s / self.a[self.idx(k, k)];
        }
        Ok(())
    }
}
