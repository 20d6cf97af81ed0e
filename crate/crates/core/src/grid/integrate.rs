//! y-integration by exact integration of local degree-5 interpolants.

use ndarray::{Array1, Array2, ArrayView1};

use super::stencil::{interpolant_integral_weights, Stencil};
use super::SpectralGrid;
use crate::error::{contract, Error, Result};

const WIDTH: usize = 6;

/// First node of the interpolation window for interval `[i, i+1]` inside `[lo, hi]`.
fn interval_start(i: usize, width: usize, lo: usize, hi: usize) -> usize {
    let s = i.saturating_sub(width / 2 - 1).max(lo);
    s.min(hi + 1 - width)
}

/// Rule for `∫_a^b f dy` with `[a, b] ⊂ [y_i, y_{i+1}]`, using nodes in `[lo, hi]`.
pub(super) fn interval_rule(y: &[f64], i: usize, lo: usize, hi: usize, a: f64, b: f64) -> Stencil {
    interval_rule_width(y, i, lo, hi, a, b, WIDTH)
}

fn interval_rule_width(y: &[f64], i: usize, lo: usize, hi: usize, a: f64, b: f64, width: usize) -> Stencil {
    let width = width.min(hi - lo + 1);
    let start = interval_start(i, width, lo, hi);
    Stencil {
        start,
        w: interpolant_integral_weights(&y[start..start + width], a, b),
    }
}

impl SpectralGrid {
    fn y_slice(&self) -> &[f64] {
        self.y_nodes.as_slice().expect("contiguous nodes")
    }

    fn check_limit(&self, z: f64) -> Result<()> {
        let tol = 1e-12 * self.cfg.y_max;
        if z >= -tol && z <= self.cfg.y_max + tol {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "integration limit {z} outside [0, {}]",
                self.cfg.y_max
            )))
        }
    }

    fn full_rule(&self, i: usize, lo: usize, hi: usize, width: usize) -> Stencil {
        if lo == 0 && hi == self.cfg.ny - 1 && width == WIDTH {
            self.rules[i].clone()
        } else {
            let y = self.y_slice();
            interval_rule_width(y, i, lo, hi, y[i], y[i + 1], width)
        }
    }

    /// Running integral `∫_{y_from}^{y_k} f` at every node `k ∈ [lo, hi]`, with
    /// interpolation windows confined to that node range.
    ///
    /// `f` holds the profile on the full grid; only `f[lo..=hi]` is read.
    pub fn cumulative_segment(&self, f: &[f64], lo: usize, hi: usize, y_from: f64) -> Result<Vec<f64>> {
        self.cumulative_segment_width(f, lo, hi, y_from, WIDTH)
    }

    /// As [`Self::cumulative_segment`] with interpolants on `width` nodes.
    pub fn cumulative_segment_width(
        &self,
        f: &[f64],
        lo: usize,
        hi: usize,
        y_from: f64,
        width: usize,
    ) -> Result<Vec<f64>> {
        if width < 2 {
            return contract(format!("interpolation width {width} too small"));
        }
        let ny = self.cfg.ny;
        if f.len() != ny || lo >= hi || hi >= ny {
            return contract(format!("invalid segment [{lo}, {hi}] for ny = {ny}"));
        }
        let y = self.y_slice();
        let tol = 1e-12 * self.cfg.y_max;
        if !(y_from >= y[lo] - tol && y_from <= y[hi] + tol) {
            return Err(Error::Range(format!(
                "y_from = {y_from} outside segment [{}, {}]",
                y[lo], y[hi]
            )));
        }
        let y_from = y_from.clamp(y[lo], y[hi]);
        let p = (y.partition_point(|&v| v <= y_from).saturating_sub(1)).clamp(lo, hi - 1);
        let mut out = vec![0.0; hi - lo + 1];
        let up = interval_rule_width(y, p, lo, hi, y_from, y[p + 1], width);
        out[p + 1 - lo] = up.apply(f);
        for i in p + 1..hi {
            out[i + 1 - lo] = out[i - lo] + self.full_rule(i, lo, hi, width).apply(f);
        }
        let down = interval_rule_width(y, p, lo, hi, y[p], y_from, width);
        out[p - lo] = -down.apply(f);
        for i in (lo..p).rev() {
            out[i - lo] = out[i + 1 - lo] - self.full_rule(i, lo, hi, width).apply(f);
        }
        Ok(out)
    }

    /// Running integral of a profile from `y_from` to each node.
    pub fn cumulative_profile(&self, f: ArrayView1<f64>, y_from: f64) -> Result<Array1<f64>> {
        self.check_limit(y_from)?;
        let line = f.to_vec();
        Ok(Array1::from(self.cumulative_segment(&line, 0, self.cfg.ny - 1, y_from)?))
    }

    /// Column-wise running integral `∫_{y_from}^{y} f(x, y') dy'` at every node.
    pub fn cumulative_y(&self, f: &Array2<f64>, y_from: f64) -> Result<Array2<f64>> {
        self.check_shape(&f.view())?;
        self.check_limit(y_from)?;
        let mut out = self.zeros();
        for (col, mut o) in f.outer_iter().zip(out.outer_iter_mut()) {
            let c = self.cumulative_segment(&col.to_vec(), 0, self.cfg.ny - 1, y_from)?;
            o.assign(&Array1::from(c));
        }
        Ok(out)
    }

    /// `∫_a^b f dy` for a profile.
    pub fn integrate_profile(&self, f: ArrayView1<f64>, a: f64, b: f64) -> Result<f64> {
        self.check_limit(a)?;
        self.check_limit(b)?;
        if f.len() != self.cfg.ny {
            return contract("profile length does not match ny");
        }
        let line = f.to_vec();
        let y = self.y_slice();
        let (lo_v, hi_v, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let ny = self.cfg.ny;
        let pa = self.locate(lo_v)?;
        let pb = self.locate(hi_v)?;
        let total = if pa == pb {
            interval_rule(y, pa, 0, ny - 1, lo_v, hi_v).apply(&line)
        } else {
            let mut s = interval_rule(y, pa, 0, ny - 1, lo_v, y[pa + 1]).apply(&line);
            for i in pa + 1..pb {
                s += self.rules[i].apply(&line);
            }
            s + interval_rule(y, pb, 0, ny - 1, y[pb], hi_v).apply(&line)
        };
        Ok(sign * total)
    }

    /// Per-column definite integrals `∫_{y_from}^{y_to[i]} f(x_i, y) dy`.
    ///
    /// A single entry in `y_to` is broadcast to every column.
    pub fn integrate_y(&self, f: &Array2<f64>, y_from: f64, y_to: &[f64]) -> Result<Array1<f64>> {
        self.check_shape(&f.view())?;
        let nx = self.cfg.nx;
        if y_to.len() != 1 && y_to.len() != nx {
            return contract(format!("y_to has {} entries, expected 1 or {nx}", y_to.len()));
        }
        f.outer_iter()
            .enumerate()
            .map(|(i, col)| {
                let b = if y_to.len() == 1 { y_to[0] } else { y_to[i] };
                self.integrate_profile(col, y_from, b)
            })
            .collect()
    }
}
