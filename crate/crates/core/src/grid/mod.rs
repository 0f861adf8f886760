//! Periodic sampling grids, the `exp(-2 pi i <x, xi>)` Fourier convention and
//! exact circular convolution.
//!
//! Samples are stored row-major in wrapped (FFT) order: index `k` along an axis
//! corresponds to the signed integer `k` for `k < N/2` and `k - N` otherwise, so
//! the origin sits at index 0. Physical points are `m * L / N`, dual lattice
//! points are `m / L`.

mod fft;
pub mod symbol;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilation::DilationGroup;
use crate::error::{Error, Result};

pub use symbol::{FrequencySymbol, SymbolArg, SymbolMeta, SymbolRule};

pub const DEFAULT_SIDE_LENGTH: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Physical,
    Frequency,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Physical => "physical",
            Side::Frequency => "frequency",
        }
    }
}

/// A periodic box `[-L/2, L/2)^n` sampled with `N` points per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    side_length: f64,
    samples: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize, side_length: f64, samples: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Dimension(format!("grid dimension must be 1, 2 or 3, got {n}")));
        }
        if samples < 2 || samples % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "samples per axis must be even and at least 2, got {samples}"
            )));
        }
        if !(side_length > 0.0 && side_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "side length must be positive, got {side_length}"
            )));
        }
        Ok(Self {
            n,
            side_length,
            samples,
        })
    }

    /// `L = 16` with 256 samples per axis (64 in three dimensions).
    pub fn default_for(n: usize) -> Result<Self> {
        let samples = if n == 3 { 64 } else { 256 };
        Self::new(n, DEFAULT_SIDE_LENGTH, samples)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn samples_per_axis(&self) -> usize {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.side_length / self.samples as f64
    }

    /// Quadrature weight `(L/N)^n` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn signed(&self, k: usize) -> i64 {
        if k < self.samples / 2 {
            k as i64
        } else {
            k as i64 - self.samples as i64
        }
    }

    pub fn wrap(&self, m: i64) -> usize {
        m.rem_euclid(self.samples as i64) as usize
    }

    pub fn multi_index(&self, idx: usize, out: &mut [usize]) {
        let mut rest = idx;
        for a in (0..self.n).rev() {
            out[a] = rest % self.samples;
            rest /= self.samples;
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.samples + k)
    }

    /// Signed lattice coordinates `m` of flat index `idx`.
    pub fn lattice_coords(&self, idx: usize, out: &mut [i64]) {
        let mut rest = idx;
        for a in (0..self.n).rev() {
            out[a] = self.signed(rest % self.samples);
            rest /= self.samples;
        }
    }

    /// Physical point `m * L / N`.
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut m = [0i64; 3];
        self.lattice_coords(idx, &mut m[..self.n]);
        for a in 0..self.n {
            out[a] = m[a] as f64 * h;
        }
    }

    /// Dual lattice point `m / L`.
    pub fn frequency(&self, idx: usize, out: &mut [f64]) {
        let mut m = [0i64; 3];
        self.lattice_coords(idx, &mut m[..self.n]);
        for a in 0..self.n {
            out[a] = m[a] as f64 / self.side_length;
        }
    }

    /// True when some coordinate sits on the Nyquist index `N/2`.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let mut rest = idx;
        for _ in 0..self.n {
            if rest % self.samples == self.samples / 2 {
                return true;
            }
            rest /= self.samples;
        }
        false
    }

    /// Flat index of the lattice point `-m`.
    pub fn negated(&self, idx: usize) -> usize {
        let mut multi = [0usize; 3];
        self.multi_index(idx, &mut multi[..self.n]);
        for k in multi[..self.n].iter_mut() {
            *k = (self.samples - *k) % self.samples;
        }
        self.flat_index(&multi[..self.n])
    }

    /// Same grid with twice the samples per axis.
    pub fn refined(&self) -> Self {
        Self {
            samples: self.samples * 2,
            ..self.clone()
        }
    }

    pub(crate) fn ensure_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Complex samples on a [`PeriodicGrid`], tagged with the side they live on.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: PeriodicGrid,
    side: Side,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: PeriodicGrid, side: Side, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Self {
            grid,
            side,
            samples,
        })
    }

    pub fn zeros(grid: &PeriodicGrid, side: Side) -> Self {
        Self {
            grid: grid.clone(),
            side,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at the physical points (or dual points for the frequency side).
    pub fn from_fn<F>(grid: &PeriodicGrid, side: Side, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let n = grid.dim();
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let mut x = [0.0; 3];
                match side {
                    Side::Physical => grid.point(idx, &mut x[..n]),
                    Side::Frequency => grid.frequency(idx, &mut x[..n]),
                }
                f(&x[..n])
            })
            .collect();
        Self {
            grid: grid.clone(),
            side,
            samples,
        }
    }

    pub fn from_real_fn<F>(grid: &PeriodicGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Self::from_fn(grid, Side::Physical, |x| Complex64::new(f(x), 0.0))
    }

    pub fn from_real(grid: &PeriodicGrid, values: &[f64]) -> Result<Self> {
        Self::new(
            grid.clone(),
            Side::Physical,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn re(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|z| *z *= c);
        out
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        self.ensure_side(other.side)?;
        let mut out = self.clone();
        out.samples
            .iter_mut()
            .zip(&other.samples)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Pointwise product on the same side.
    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        self.ensure_side(other.side)?;
        let mut out = self.clone();
        out.samples
            .iter_mut()
            .zip(&other.samples)
            .for_each(|(a, b)| *a *= b);
        Ok(out)
    }

    /// Physical to frequency: `f^(xi_m) ~ (L/N)^n sum_x f(x) exp(-2 pi i <x, xi_m>)`.
    pub fn transform(&self) -> Result<GridFunction> {
        self.ensure_side(Side::Physical)?;
        let mut samples = self.samples.clone();
        fft::fft_nd(&mut samples, self.grid.dim(), self.grid.samples_per_axis(), false);
        let w = self.grid.cell_volume();
        samples.iter_mut().for_each(|z| *z *= w);
        Ok(Self {
            grid: self.grid.clone(),
            side: Side::Frequency,
            samples,
        })
    }

    /// Frequency to physical: `f(x) = L^-n sum_m f^(xi_m) exp(2 pi i <x, xi_m>)`.
    pub fn inverse_transform(&self) -> Result<GridFunction> {
        self.ensure_side(Side::Frequency)?;
        let mut samples = self.samples.clone();
        fft::fft_nd(&mut samples, self.grid.dim(), self.grid.samples_per_axis(), true);
        let w = self.grid.side_length().powi(-(self.grid.dim() as i32));
        samples.iter_mut().for_each(|z| *z *= w);
        Ok(Self {
            grid: self.grid.clone(),
            side: Side::Physical,
            samples,
        })
    }

    pub fn to_frequency(&self) -> GridFunction {
        match self.side {
            Side::Frequency => self.clone(),
            Side::Physical => self.transform().expect("side checked"),
        }
    }

    pub fn to_physical(&self) -> GridFunction {
        match self.side {
            Side::Physical => self.clone(),
            Side::Frequency => self.inverse_transform().expect("side checked"),
        }
    }

    /// Lattice translate `x -> f(x - shift * L/N)` (physical side).
    pub fn translated(&self, shift: &[i64]) -> Result<GridFunction> {
        self.ensure_side(Side::Physical)?;
        let n = self.grid.dim();
        if shift.len() != n {
            return Err(Error::Dimension(format!("shift has {} entries, expected {n}", shift.len())));
        }
        let mut out = self.clone();
        let mut multi = [0usize; 3];
        for idx in 0..self.grid.len() {
            self.grid.multi_index(idx, &mut multi[..n]);
            for a in 0..n {
                multi[a] = self.grid.wrap(multi[a] as i64 + shift[a]);
            }
            out.samples[self.grid.flat_index(&multi[..n])] = self.samples[idx];
        }
        Ok(out)
    }

    /// Zeroes every sample on a Nyquist row.
    pub fn clear_nyquist(&mut self) {
        let grid = self.grid.clone();
        for (idx, z) in self.samples.iter_mut().enumerate() {
            if grid.is_nyquist(idx) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub(crate) fn ensure_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::SideMismatch {
                expected: side.name(),
                found: self.side.name(),
            });
        }
        Ok(())
    }
}

/// Circular convolution `(f * g)(x) ~ (L/N)^n sum_y f(y) g(x - y)`; the result is physical.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.grid.ensure_same(&g.grid)?;
    f.to_frequency().mul(&g.to_frequency())?.inverse_transform()
}

/// Riemann-sum quasi-norm `((L/N)^n sum |f|^p w)^(1/p)`.
pub fn lp_norm(f: &GridFunction, p: f64, weight: Option<&[f64]>) -> Result<f64> {
    f.ensure_side(Side::Physical)?;
    lp_norm_values(f.grid(), &f.abs(), p, weight)
}

/// [`lp_norm`] on precomputed nonnegative values.
pub fn lp_norm_values(grid: &PeriodicGrid, values: &[f64], p: f64, weight: Option<&[f64]>) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::NonPositiveExponent(p));
    }
    if values.len() != grid.len() {
        return Err(Error::GridMismatch("value count does not match grid".into()));
    }
    let sum: f64 = match weight {
        Some(w) => {
            if w.len() != values.len() {
                return Err(Error::GridMismatch("weight length does not match grid".into()));
            }
            values.iter().zip(w).map(|(v, w)| v.powf(p) * w).sum()
        }
        None => values.iter().map(|v| v.powf(p)).sum(),
    };
    Ok((grid.cell_volume() * sum).powf(1.0 / p))
}

/// A grid paired with a dilation group, caching `rho` on the physical lattice
/// and `rho^*` on the dual lattice.
#[derive(Clone, Debug)]
pub struct Geometry {
    grid: PeriodicGrid,
    group: DilationGroup,
    rho: Vec<f64>,
    rho_star: Vec<f64>,
}

impl Geometry {
    pub fn new(grid: &PeriodicGrid, group: &DilationGroup) -> Result<Self> {
        if grid.dim() != group.dim() {
            return Err(Error::Dimension(format!(
                "grid dimension {} does not match group dimension {}",
                grid.dim(),
                group.dim()
            )));
        }
        let n = grid.dim();
        let rho = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let mut x = [0.0; 3];
                grid.point(idx, &mut x[..n]);
                group.rho(&x[..n], false)
            })
            .collect();
        let rho_star = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let mut xi = [0.0; 3];
                grid.frequency(idx, &mut xi[..n]);
                group.rho(&xi[..n], true)
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            group: group.clone(),
            rho,
            rho_star,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn group(&self) -> &DilationGroup {
        &self.group
    }

    /// `rho(x)` at each physical lattice point (wrapped coordinates).
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `rho^*(xi)` at each dual lattice point.
    pub fn rho_star(&self) -> &[f64] {
        &self.rho_star
    }

    /// Smallest positive and largest `rho^*` over the dual lattice.
    pub fn rho_star_range(&self) -> (f64, f64) {
        self.rho_star
            .iter()
            .filter(|&&r| r > 0.0)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }

    pub fn refined(&self) -> Result<Self> {
        Self::new(&self.grid.refined(), &self.group)
    }
}
