//! Periodic-in-x, graded-in-y tensor grid with spectral x-derivatives,
//! sixth-order finite differences in y and high-order y-quadrature.
//!
//! Fields are stored as `Array2<f64>` of shape `(nx, ny)`: the first index
//! runs over x collocation points, the second over y nodes.

mod integrate;
pub mod stencil;

use std::borrow::Cow;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{contract, Error, Result};
use stencil::{fornberg, window_start, Stencil};

/// Parameters of a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub x_period: f64,
    pub y_max: f64,
    /// Clustering strength `c` of the map `y = L sinh(c s) / sinh(c)`.
    pub grading: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 257,
            x_period: 2.0 * PI,
            y_max: 40.0,
            grading: 4.0,
        }
    }
}

/// Tensor grid on `T × [0, L_y]`.
#[derive(Clone)]
pub struct SpectralGrid {
    cfg: GridConfig,
    x_nodes: Array1<f64>,
    y_nodes: Array1<f64>,
    y_weights: Array1<f64>,
    wavenumbers: Array1<f64>,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
    rules: Vec<Stencil>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid").field("cfg", &self.cfg).finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg
    }
}

fn map_y(s: f64, y_max: f64, c: f64) -> (f64, f64) {
    if c.abs() < 1e-12 {
        (y_max * s, y_max)
    } else {
        let sc = c.sinh();
        (y_max * (c * s).sinh() / sc, y_max * c * (c * s).cosh() / sc)
    }
}

impl SpectralGrid {
    pub fn new(cfg: &GridConfig) -> Result<Self> {
        let GridConfig {
            nx,
            ny,
            x_period,
            y_max,
            grading,
        } = *cfg;
        if nx < 4 || !nx.is_power_of_two() {
            return Err(Error::Range(format!("nx = {nx} must be a power of two ≥ 4")));
        }
        if ny < 8 {
            return Err(Error::Range(format!("ny = {ny} must be at least 8")));
        }
        if !(x_period > 0.0 && x_period.is_finite()) {
            return Err(Error::Range(format!("x_period = {x_period} must be positive")));
        }
        if !(y_max > 0.0 && y_max.is_finite()) {
            return Err(Error::Range(format!("y_max = {y_max} must be positive")));
        }
        if !(grading >= 0.0 && grading <= 20.0) {
            return Err(Error::Range(format!("grading_c = {grading} must lie in [0, 20]")));
        }

        let x_nodes = Array1::from_iter((0..nx).map(|i| x_period * i as f64 / nx as f64));
        let ds = 1.0 / (ny - 1) as f64;
        let mut y = Vec::with_capacity(ny);
        let mut jac = Vec::with_capacity(ny);
        for j in 0..ny {
            let (yj, dj) = map_y(j as f64 * ds, y_max, grading);
            y.push(yj);
            jac.push(dj);
        }
        y[0] = 0.0;
        y[ny - 1] = y_max;

        // Fourth-order end-corrected trapezoid in the uniform coordinate.
        let ends = [17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0];
        let mut w: Vec<f64> = (0..ny)
            .map(|j| {
                let e = if j < 4 {
                    ends[j]
                } else if j >= ny - 4 {
                    ends[ny - 1 - j]
                } else {
                    1.0
                };
                e * ds * jac[j]
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v *= y_max / total);

        let d1 = (0..ny)
            .map(|j| {
                let start = window_start(j, 7, 0, ny - 1);
                Stencil {
                    start,
                    w: fornberg(y[j], &y[start..start + 7], 1)[1].clone(),
                }
            })
            .collect();
        let d2 = (0..ny)
            .map(|j| {
                let (start, width) = if j < 3 {
                    (0, 8)
                } else if j + 3 >= ny {
                    (ny - 8, 8)
                } else {
                    (j - 3, 7)
                };
                Stencil {
                    start,
                    w: fornberg(y[j], &y[start..start + width], 2)[2].clone(),
                }
            })
            .collect();
        let rules = (0..ny - 1)
            .map(|i| integrate::interval_rule(&y, i, 0, ny - 1, y[i], y[i + 1]))
            .collect();

        let wavenumbers = Array1::from_iter(
            (0..nx).map(|i| 2.0 * PI / x_period * mode_of(i, nx) as f64),
        );
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nx);
        let ifft = planner.plan_fft_inverse(nx);

        Ok(Self {
            cfg: cfg.clone(),
            x_nodes,
            y_nodes: Array1::from(y),
            y_weights: Array1::from(w),
            wavenumbers,
            d1,
            d2,
            rules,
            fft,
            ifft,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }
    pub fn nx(&self) -> usize {
        self.cfg.nx
    }
    pub fn ny(&self) -> usize {
        self.cfg.ny
    }
    pub fn x_period(&self) -> f64 {
        self.cfg.x_period
    }
    pub fn y_max(&self) -> f64 {
        self.cfg.y_max
    }
    pub fn grading(&self) -> f64 {
        self.cfg.grading
    }
    pub fn x_nodes(&self) -> &Array1<f64> {
        &self.x_nodes
    }
    pub fn y_nodes(&self) -> &Array1<f64> {
        &self.y_nodes
    }
    pub fn y_weights(&self) -> &Array1<f64> {
        &self.y_weights
    }
    /// Scaled wavenumber `2π k / x_period` of each FFT slot.
    pub fn wavenumbers(&self) -> &Array1<f64> {
        &self.wavenumbers
    }
    /// Integer mode number `k ∈ {−nx/2+1, …, nx/2}` of FFT slot `i`.
    pub fn mode(&self, i: usize) -> i64 {
        mode_of(i, self.cfg.nx)
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.cfg.nx, self.cfg.ny)
    }
    pub fn zeros(&self) -> Array2<f64> {
        Array2::zeros(self.shape())
    }

    /// Evaluates `f(x, y)` at every node.
    pub fn tabulate(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.x_nodes[i], self.y_nodes[j]))
    }

    /// Evaluates `f(y)` at every y node.
    pub fn tabulate_y(&self, f: impl Fn(f64) -> f64) -> Array1<f64> {
        self.y_nodes.mapv(f)
    }

    pub fn check_shape(&self, f: &ArrayView2<f64>) -> Result<()> {
        if f.dim() != self.shape() {
            return contract(format!(
                "field shape {:?} does not match grid {:?}",
                f.dim(),
                self.shape()
            ));
        }
        Ok(())
    }

    fn check_profile(&self, f: &ArrayView1<f64>) -> Result<()> {
        if f.len() != self.cfg.ny {
            return contract(format!(
                "profile length {} does not match ny = {}",
                f.len(),
                self.cfg.ny
            ));
        }
        Ok(())
    }

    /// Discrete Fourier transform along x; the result has shape `(nx, ny)`.
    pub fn forward(&self, f: &Array2<f64>) -> Result<Array2<Complex64>> {
        self.check_shape(&f.view())?;
        let (nx, ny) = self.shape();
        let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny];
        for ((i, j), &v) in f.indexed_iter() {
            buf[j * nx + i] = Complex64::new(v, 0.0);
        }
        self.fft.process(&mut buf);
        Ok(Array2::from_shape_fn((nx, ny), |(i, j)| buf[j * nx + i]))
    }

    /// Inverse of [`forward`](Self::forward), keeping the real part.
    pub fn inverse(&self, spec: &Array2<Complex64>) -> Array2<f64> {
        let (nx, ny) = self.shape();
        let mut buf = vec![Complex64::new(0.0, 0.0); nx * ny];
        for ((i, j), &v) in spec.indexed_iter() {
            buf[j * nx + i] = v;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / nx as f64;
        Array2::from_shape_fn((nx, ny), |(i, j)| buf[j * nx + i].re * scale)
    }

    /// Fourier multiplier of `∂ₓ^order` in slot `i`; the Nyquist slot is
    /// dropped for odd orders so that real fields stay real.
    pub fn dx_multiplier(&self, i: usize, order: usize) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let nx = self.cfg.nx;
        if order % 2 == 1 && i == nx / 2 {
            return Complex64::new(0.0, 0.0);
        }
        let mag = self.wavenumbers[i].powi(order as i32);
        match order % 4 {
            0 => Complex64::new(mag, 0.0),
            1 => Complex64::new(0.0, mag),
            2 => Complex64::new(-mag, 0.0),
            _ => Complex64::new(0.0, -mag),
        }
    }

    /// Applies `∂ₓ^order` to a spectrum in place.
    pub fn spectral_dx(&self, spec: &mut Array2<Complex64>, order: usize) {
        if order == 0 {
            return;
        }
        let mult: Vec<Complex64> = (0..self.cfg.nx).map(|i| self.dx_multiplier(i, order)).collect();
        for ((i, _), v) in spec.indexed_iter_mut() {
            *v *= mult[i];
        }
    }

    /// Spectral x-derivative of order `order`; `order = 0` returns a copy.
    pub fn dx(&self, f: &Array2<f64>, order: usize) -> Result<Array2<f64>> {
        self.check_shape(&f.view())?;
        if order == 0 {
            return Ok(f.clone());
        }
        let mut spec = self.forward(f)?;
        self.spectral_dx(&mut spec, order);
        Ok(self.inverse(&spec))
    }

    /// Spectral derivative of a function of x sampled at the x nodes.
    pub fn dx_line(&self, g: ArrayView1<f64>, order: usize) -> Result<Array1<f64>> {
        let nx = self.cfg.nx;
        if g.len() != nx {
            return contract(format!("line has {} samples, expected {nx}", g.len()));
        }
        if order == 0 {
            return Ok(g.to_owned());
        }
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= self.dx_multiplier(i, order);
        }
        self.ifft.process(&mut buf);
        Ok(buf.iter().map(|v| v.re / nx as f64).collect())
    }

    /// Zeroes every Fourier mode with `|k| > n`.
    pub fn project(&self, f: &Array2<f64>, n: usize) -> Result<Array2<f64>> {
        let mut spec = self.forward(f)?;
        self.truncate_spectrum(&mut spec, n);
        Ok(self.inverse(&spec))
    }

    pub fn truncate_spectrum(&self, spec: &mut Array2<Complex64>, n: usize) {
        for ((i, _), v) in spec.indexed_iter_mut() {
            if self.mode(i).unsigned_abs() as usize > n {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Finite-difference rows of `∂_y^order`, one per y node.
    pub fn dy_stencils(&self, order: usize) -> Result<&[Stencil]> {
        match order {
            1 => Ok(&self.d1),
            2 => Ok(&self.d2),
            _ => contract(format!("dy order {order} not in {{1, 2}}")),
        }
    }

    /// Sixth-order finite-difference y-derivative (order 1 or 2).
    pub fn dy(&self, f: &Array2<f64>, order: usize) -> Result<Array2<f64>> {
        self.check_shape(&f.view())?;
        let rows = self.dy_stencils(order)?;
        let mut out = self.zeros();
        for (fi, mut oi) in f.outer_iter().zip(out.outer_iter_mut()) {
            let line = fi
                .as_slice()
                .map(Cow::Borrowed)
                .unwrap_or_else(|| Cow::Owned(fi.to_vec()));
            for (o, st) in oi.iter_mut().zip(rows) {
                *o = st.apply(&line);
            }
        }
        Ok(out)
    }

    /// `∂_y^n f` by repeated first differences, `n = 0` returning a copy.
    pub fn dy_n(&self, f: &Array2<f64>, n: usize) -> Result<Array2<f64>> {
        let mut out = f.clone();
        for _ in 0..n {
            out = self.dy(&out, 1)?;
        }
        Ok(out)
    }

    /// y-derivative of a single profile.
    pub fn dy_profile(&self, f: ArrayView1<f64>, order: usize) -> Result<Array1<f64>> {
        self.check_profile(&f)?;
        let rows = self.dy_stencils(order)?;
        let line = f.to_vec();
        Ok(rows.iter().map(|st| st.apply(&line)).collect())
    }

    /// Interval index `p` with `y[p] ≤ z ≤ y[p+1]`.
    pub fn locate(&self, z: f64) -> Result<usize> {
        let y = self.y_nodes.as_slice().expect("contiguous nodes");
        let tol = 1e-12 * self.cfg.y_max;
        if !(z >= -tol && z <= self.cfg.y_max + tol) {
            return Err(Error::Range(format!(
                "y = {z} outside [0, {}]",
                self.cfg.y_max
            )));
        }
        let p = y.partition_point(|&v| v <= z).saturating_sub(1);
        Ok(p.min(y.len() - 2))
    }

    /// Value and first derivative at `z` of the degree-`width − 1` local
    /// interpolant of a profile.
    pub fn interp_profile(&self, f: ArrayView1<f64>, z: f64, width: usize) -> Result<(f64, f64)> {
        self.check_profile(&f)?;
        let ny = self.cfg.ny;
        if width < 2 || width > ny {
            return contract(format!("interpolation width {width} invalid"));
        }
        let p = self.locate(z)?;
        let start = window_start(p, width, 0, ny - 1).min(ny - width);
        let y = self.y_nodes.as_slice().expect("contiguous nodes");
        let w = fornberg(z, &y[start..start + width], 1);
        let vals = f.slice(ndarray::s![start..start + width]);
        let v: f64 = w[0].iter().zip(vals.iter()).map(|(a, b)| a * b).sum();
        let d: f64 = w[1].iter().zip(vals.iter()).map(|(a, b)| a * b).sum();
        Ok((v, d))
    }

    /// Values of every column interpolated at height `z`.
    pub fn interp_at(&self, f: &Array2<f64>, z: f64, width: usize) -> Result<Array1<f64>> {
        self.check_shape(&f.view())?;
        f.outer_iter()
            .map(|col| self.interp_profile(col, z, width).map(|(v, _)| v))
            .collect()
    }

    /// `‖f‖_{L²(T × (0, L_y))}`.
    pub fn l2_norm(&self, f: &Array2<f64>) -> f64 {
        self.weighted_l2_norm(f, None)
    }

    /// `‖ρ(y) f‖_{L²}` with an optional y-weight `ρ`.
    pub fn weighted_l2_norm(&self, f: &Array2<f64>, rho: Option<&Array1<f64>>) -> f64 {
        let mut acc = 0.0;
        for row in f.outer_iter() {
            for (j, &v) in row.iter().enumerate() {
                let r = rho.map_or(1.0, |r| r[j]);
                acc += self.y_weights[j] * (r * v) * (r * v);
            }
        }
        (acc * self.cfg.x_period / self.cfg.nx as f64).sqrt()
    }

    /// `‖ρ f‖_{L²(0, L_y)}` for a profile.
    pub fn profile_l2(&self, f: ArrayView1<f64>, rho: Option<&Array1<f64>>) -> f64 {
        f.iter()
            .enumerate()
            .map(|(j, &v)| {
                let r = rho.map_or(1.0, |r| r[j]);
                self.y_weights[j] * (r * v) * (r * v)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `‖g‖_{L²(T)}` of a function of x sampled at the x nodes.
    pub fn x_l2(&self, g: ArrayView1<f64>) -> f64 {
        (g.iter().map(|v| v * v).sum::<f64>() * self.cfg.x_period / self.cfg.nx as f64).sqrt()
    }

    /// Per-y density `∫_T |∂ₓ^order f|² dx` computed from a spectrum by Parseval.
    pub fn spectral_density(&self, spec: &Array2<Complex64>, order: usize) -> Array1<f64> {
        let nx = self.cfg.nx;
        let mult: Vec<f64> = (0..nx).map(|i| self.dx_multiplier(i, order).norm_sqr()).collect();
        let scale = self.cfg.x_period / (nx * nx) as f64;
        let mut out = Array1::zeros(self.cfg.ny);
        for ((i, j), v) in spec.indexed_iter() {
            out[j] += mult[i] * v.norm_sqr();
        }
        out.mapv_inplace(|v| v * scale);
        out
    }

    /// `∫_0^{L_y} ρ² d dy` for a nonnegative y-density `d`.
    pub fn integrate_density(&self, d: &Array1<f64>, rho2: Option<&Array1<f64>>) -> f64 {
        d.iter()
            .enumerate()
            .map(|(j, &v)| self.y_weights[j] * rho2.map_or(1.0, |r| r[j]) * v)
            .sum()
    }

    /// The weight profile `(1 + y)^p`.
    pub fn one_plus_y_pow(&self, p: f64) -> Array1<f64> {
        self.y_nodes.mapv(|y| (1.0 + y).powf(p))
    }
}

fn mode_of(i: usize, nx: usize) -> i64 {
    if i <= nx / 2 {
        i as i64
    } else {
        i as i64 - nx as i64
    }
}
