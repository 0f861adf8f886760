//! Anisotropic dilation groups `A_t = exp((ln t) P)` and their homogeneous norms.
//!
//! A matrix `P` is admissible when `<Px, x> >= <x, x>` for every `x`, i.e. the
//! symmetric part of `P` has all eigenvalues at least one. For such `P` the map
//! `t -> |A_t x|` is strictly increasing, so the homogeneous norm
//! `rho(x)` (the unique `t` with `|A_{1/t} x| = 1`) is well defined and can be
//! found by bracketing and bisection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative accuracy target of the matrix exponential.
pub const EXP_TOLERANCE: f64 = 1e-12;

const ADMISSIBILITY_SLACK: f64 = 1e-12;
const EIGEN_CONDITION_LIMIT: f64 = 1e6;
const RHO_TOLERANCE: f64 = 1e-12;
const TINY_NORM: f64 = 1e-300;

/// Route used to evaluate `A_t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpMethod {
    Diagonal,
    Eigen,
    ScalingSquaring,
}

#[derive(Clone, Debug)]
enum Exponential {
    Diagonal(Vec<f64>),
    Eigen {
        values: Vec<Complex64>,
        vectors: DMatrix<Complex64>,
        inverse: DMatrix<Complex64>,
    },
    Series(DMatrix<f64>),
}

/// A validated one-parameter dilation group `{A_t}`.
#[derive(Clone, Debug)]
pub struct DilationGroup {
    p: DMatrix<f64>,
    gamma: f64,
    kappa: f64,
    exp_tolerance: f64,
    forward: Exponential,
    adjoint: Exponential,
}

impl DilationGroup {
    /// Validates `p` and prepares the exponential evaluators.
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != p.ncols() {
            return Err(Error::Dimension(format!(
                "matrix must be square, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if p.nrows() == 0 {
            return Err(Error::Dimension("matrix must be non-empty".into()));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("matrix entries must be finite".into()));
        }

        let sym = (&p + p.transpose()) * 0.5;
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < 1.0 - ADMISSIBILITY_SLACK {
            return Err(Error::Admissibility { min_eig });
        }

        let gamma = p.trace();
        let spectrum = spectrum(&p);
        let max_re = spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let kappa = max_re.max(1.0);

        let (forward, adjoint) = build_exponentials(&p, &spectrum);
        Ok(Self {
            p,
            gamma,
            kappa,
            exp_tolerance: EXP_TOLERANCE,
            forward,
            adjoint,
        })
    }

    /// Builds a group from a row-major list of `n * n` entries.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("matrix must be square".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
        Self::from_row_major(n, &flat)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is admissible")
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Homogeneous dimension `trace P`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Growth exponent `max(1, max Re spec P)`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn exp_tolerance(&self) -> f64 {
        self.exp_tolerance
    }

    pub fn method(&self) -> ExpMethod {
        match self.forward {
            Exponential::Diagonal(_) => ExpMethod::Diagonal,
            Exponential::Eigen { .. } => ExpMethod::Eigen,
            Exponential::Series(_) => ExpMethod::ScalingSquaring,
        }
    }

    /// Returns `A_t`, or `A_t^*` when `adjoint` is set.
    pub fn dilate(&self, t: f64, adjoint: bool) -> Result<DMatrix<f64>> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveScale(t));
        }
        let n = self.dim();
        let ln_t = t.ln();
        Ok(match self.exponential(adjoint) {
            Exponential::Diagonal(d) => {
                DMatrix::from_diagonal(&DVector::from_iterator(n, d.iter().map(|p| (p * ln_t).exp())))
            }
            Exponential::Eigen {
                values,
                vectors,
                inverse,
            } => {
                let mut scaled = vectors.clone();
                for (k, lambda) in values.iter().enumerate() {
                    let f = (lambda * ln_t).exp();
                    scaled.column_mut(k).iter_mut().for_each(|v| *v *= f);
                }
                (scaled * inverse).map(|z| z.re)
            }
            Exponential::Series(m) => expm_scaling_squaring(&(m * ln_t)),
        })
    }

    /// Writes `A_t x` (or `A_t^* x`) into `out`. `t` must be positive.
    pub fn apply_into(&self, t: f64, x: &[f64], adjoint: bool, out: &mut [f64]) {
        debug_assert!(t > 0.0);
        let ln_t = t.ln();
        match self.exponential(adjoint) {
            Exponential::Diagonal(d) => {
                for ((o, xi), p) in out.iter_mut().zip(x).zip(d) {
                    *o = xi * (p * ln_t).exp();
                }
            }
            Exponential::Eigen {
                values,
                vectors,
                inverse,
            } => {
                let n = x.len();
                let mut z = [Complex64::new(0.0, 0.0); 8];
                let mut zbuf;
                let z: &mut [Complex64] = if n <= 8 {
                    &mut z[..n]
                } else {
                    zbuf = vec![Complex64::new(0.0, 0.0); n];
                    &mut zbuf
                };
                for (k, zk) in z.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, xl) in x.iter().enumerate() {
                        acc += inverse[(k, l)] * xl;
                    }
                    *zk = acc * (values[k] * ln_t).exp();
                }
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, zk) in z.iter().enumerate() {
                        acc += (vectors[(r, k)] * zk).re;
                    }
                    *o = acc;
                }
            }
            Exponential::Series(m) => {
                let a = expm_scaling_squaring(&(m * ln_t));
                for (r, o) in out.iter_mut().enumerate() {
                    *o = (0..x.len()).map(|c| a[(r, c)] * x[c]).sum();
                }
            }
        }
    }

    /// Convenience wrapper around [`apply_into`](Self::apply_into).
    pub fn apply(&self, t: f64, x: &[f64], adjoint: bool) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(t, x, adjoint, &mut out);
        out
    }

    /// `<P y, y>`; identical for `P` and `P^T`.
    pub fn quadratic_form(&self, y: &[f64]) -> f64 {
        let n = y.len();
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += self.p[(r, c)] * y[c] * y[r];
            }
        }
        acc
    }

    /// Homogeneous norm `rho(x)`, or `rho^*(x)` when `dual` is set.
    pub fn rho(&self, x: &[f64], dual: bool) -> f64 {
        let norm = euclid(x);
        if !(norm > TINY_NORM) {
            return 0.0;
        }
        let mut buf = vec![0.0; x.len()];
        let orbit_sq = |u: f64, buf: &mut [f64]| {
            self.apply_into((-u).exp(), x, dual, buf);
            buf.iter().map(|v| v * v).sum::<f64>()
        };

        // orbit_sq is strictly decreasing in u; bracket the root of orbit_sq = 1.
        let u0 = norm.ln();
        let v0 = orbit_sq(u0, &mut buf);
        if v0 == 1.0 {
            return norm;
        }
        let (mut lo, mut hi);
        let mut step = 1.0;
        if v0 > 1.0 {
            lo = u0;
            hi = u0 + step;
            while orbit_sq(hi, &mut buf) > 1.0 {
                lo = hi;
                step *= 2.0;
                hi += step;
            }
        } else {
            hi = u0;
            lo = u0 - step;
            while orbit_sq(lo, &mut buf) < 1.0 {
                hi = lo;
                step *= 2.0;
                lo -= step;
            }
        }

        while hi - lo > 0.5 * RHO_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if orbit_sq(mid, &mut buf) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        // Newton polish: d/du |A_{e^-u} x|^2 = -2 <P y, y>.
        let mut u = 0.5 * (lo + hi);
        let f = orbit_sq(u, &mut buf) - 1.0;
        let slope = 2.0 * self.quadratic_form(&buf);
        if slope > 0.0 {
            let next = u + f / slope;
            if next >= lo && next <= hi {
                u = next;
            }
        }
        u.exp()
    }

    /// Monte-Carlo and deterministic checks of the norm axioms on random samples.
    pub fn check_norm_properties(&self, sample_count: usize, seed: u64) -> NormPropertyReport {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = NormPropertyReport::new(sample_count.max(1));
        let mut tmp = vec![0.0; n];

        for i in 0..sample_count.max(1) {
            // Alternate between a wide log-uniform magnitude range and the unit shell.
            let (lo, hi) = if i % 2 == 0 { (1e-2, 1e2) } else { (0.5, 2.0) };
            let x = random_point(&mut rng, n, lo, hi);
            let y = random_point(&mut rng, n, lo, hi);
            let rx = self.rho(&x, false);
            let ry = self.rho(&y, false);
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let rs = self.rho(&sum, false);
            report.triangle = report.triangle.max((rs - rx - ry) / (1.0 + rx + ry));

            let nx = euclid(&x);
            let unit_violation = if nx <= 1.0 { rx - 1.0 } else { 1.0 - rx };
            report.unit_ball = report.unit_ball.max(unit_violation);
            if nx <= 1.0 {
                report.small_norm = report.small_norm.max(nx - rx);
            } else {
                report.large_norm = report.large_norm.max(rx - nx);
            }

            let t_expand = (rng.gen_range(0.0f64..(100.0f64).ln())).exp();
            self.apply_into(t_expand, &x, false, &mut tmp);
            let scale = (t_expand * nx).max(1.0);
            report.expanding = report.expanding.max((t_expand * nx - euclid(&tmp)) / scale);

            let t_contract = (-rng.gen_range(0.0f64..(100.0f64).ln())).exp();
            self.apply_into(t_contract, &x, false, &mut tmp);
            let scale = (t_contract * nx).max(1.0);
            report.contracting = report.contracting.max((euclid(&tmp) - t_contract * nx) / scale);

            let t = (rng.gen_range((1e-2f64).ln()..(1e2f64).ln())).exp();
            self.apply_into(t, &x, false, &mut tmp);
            let rt = self.rho(&tmp, false);
            report.homogeneity = report.homogeneity.max(((rt - t * rx) / (t * rx)).abs());
        }
        report
    }

    fn exponential(&self, adjoint: bool) -> &Exponential {
        if adjoint {
            &self.adjoint
        } else {
            &self.forward
        }
    }
}

/// Worst observed violation for each norm property; non-positive means it holds.
#[derive(Clone, Debug, Serialize)]
pub struct NormPropertyReport {
    pub samples: usize,
    /// (P.1) `(rho(x+y) - rho(x) - rho(y)) / (1 + rho(x) + rho(y))`.
    pub triangle: f64,
    /// (P.2) `rho(x) <= 1` iff `|x| <= 1`.
    pub unit_ball: f64,
    /// (P.3) `|x| - rho(x)` for `|x| <= 1`.
    pub small_norm: f64,
    /// (P.4) `rho(x) - |x|` for `|x| >= 1`.
    pub large_norm: f64,
    /// (P.5) `(t|x| - |A_t x|) / max(1, t|x|)` for `t >= 1`.
    pub expanding: f64,
    /// (P.6) `(|A_t x| - t|x|) / max(1, t|x|)` for `t <= 1`.
    pub contracting: f64,
    /// `max |rho(A_t x) - t rho(x)| / (t rho(x))`.
    pub homogeneity: f64,
}

impl NormPropertyReport {
    fn new(samples: usize) -> Self {
        Self {
            samples,
            triangle: f64::NEG_INFINITY,
            unit_ball: f64::NEG_INFINITY,
            small_norm: f64::NEG_INFINITY,
            large_norm: f64::NEG_INFINITY,
            expanding: f64::NEG_INFINITY,
            contracting: f64::NEG_INFINITY,
            homogeneity: 0.0,
        }
    }

    /// True when every property holds within `tol` (homogeneity is compared to `tol` too).
    pub fn holds(&self, tol: f64) -> bool {
        [
            self.triangle,
            self.unit_ball,
            self.small_norm,
            self.large_norm,
            self.expanding,
            self.contracting,
            self.homogeneity,
        ]
        .iter()
        .all(|&v| v <= tol)
    }
}

/// Lebesgue measure of the Euclidean unit ball, which equals `|{rho < 1}|`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    std::f64::consts::PI.powf(half) / libm::tgamma(half + 1.0)
}

pub fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = euclid(&v);
        if norm > 1e-3 && norm <= 1.0 {
            let r = rng.gen_range(lo.ln()..hi.ln()).exp();
            return v.into_iter().map(|c| c / norm * r).collect();
        }
    }
}

fn spectrum(p: &DMatrix<f64>) -> Vec<Complex64> {
    if p.nrows() == 1 {
        return vec![Complex64::new(p[(0, 0)], 0.0)];
    }
    p.clone().complex_eigenvalues().iter().cloned().collect()
}

fn is_diagonal(p: &DMatrix<f64>) -> bool {
    let n = p.nrows();
    (0..n).all(|r| (0..n).all(|c| r == c || p[(r, c)] == 0.0))
}

fn build_exponentials(p: &DMatrix<f64>, spectrum: &[Complex64]) -> (Exponential, Exponential) {
    if is_diagonal(p) {
        let d: Vec<f64> = p.diagonal().iter().cloned().collect();
        return (Exponential::Diagonal(d.clone()), Exponential::Diagonal(d));
    }
    match eigen_decomposition(p, spectrum) {
        Some((values, vectors, inverse)) => {
            // P^T = V^{-T} diag(values) V^T
            let adj = Exponential::Eigen {
                values: values.clone(),
                vectors: inverse.transpose(),
                inverse: vectors.transpose(),
            };
            (
                Exponential::Eigen {
                    values,
                    vectors,
                    inverse,
                },
                adj,
            )
        }
        None => (
            Exponential::Series(p.clone()),
            Exponential::Series(p.transpose()),
        ),
    }
}

/// Eigendecomposition `P = V diag(values) V^{-1}` when the eigenvalues are
/// well separated and `V` is well conditioned.
fn eigen_decomposition(
    p: &DMatrix<f64>,
    spectrum: &[Complex64],
) -> Option<(Vec<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = p.nrows();
    let scale = p.norm().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (spectrum[i] - spectrum[j]).norm() < 1e-6 * scale {
                return None;
            }
        }
    }
    let pc = p.map(|v| Complex64::new(v, 0.0));
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (k, lambda) in spectrum.iter().enumerate() {
        let shifted = &pc - DMatrix::<Complex64>::identity(n, n) * *lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t?;
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
        let mut col: Vec<Complex64> = v_t.row(imin).iter().map(|z| z.conj()).collect();
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col.iter_mut().for_each(|z| *z /= norm);
        vectors.set_column(k, &DVector::from_vec(col));
    }
    let inverse = vectors.clone().try_inverse()?;
    let cond = vectors.norm() * inverse.norm();
    if !cond.is_finite() || cond > EIGEN_CONDITION_LIMIT {
        return None;
    }
    let mut recon = vectors.clone();
    for (k, lambda) in spectrum.iter().enumerate() {
        recon.column_mut(k).iter_mut().for_each(|v| *v *= lambda);
    }
    let recon = recon * &inverse;
    let err = (recon - pc).norm();
    if err > 1e-13 * scale * cond {
        return None;
    }
    Some((spectrum.to_vec(), vectors, inverse))
}

/// Matrix exponential by argument scaling, a truncated Taylor series and
/// repeated squaring.
pub fn expm_scaling_squaring(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = m / 2f64.powi(squarings);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=30 {
        term = &term * &x / k as f64;
        sum += &term;
        if term.norm() <= f64::EPSILON * 1e-3 * sum.norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rotation() -> DilationGroup {
        DilationGroup::from_row_major(2, &[1.0, 1.0, -1.0, 1.0]).unwrap()
    }

    #[test]
    fn validates_examples() {
        let id = DilationGroup::identity(2);
        assert_eq!(id.gamma(), 2.0);
        let d = DilationGroup::diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(d.gamma(), 3.0);
        assert_eq!(d.kappa(), 2.0);
        let bad = DilationGroup::diagonal(&[0.5, 1.0]);
        assert!(matches!(bad, Err(Error::Admissibility { .. })));
        let nonsquare = DilationGroup::new(DMatrix::zeros(2, 3));
        assert!(matches!(nonsquare, Err(Error::Dimension(_))));
    }

    #[test]
    fn rotation_uses_eigen_path() {
        let g = rotation();
        assert_eq!(g.method(), ExpMethod::Eigen);
        assert_eq!(g.gamma(), 2.0);
        assert_relative_eq!(g.kappa(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jordan_block_falls_back_to_series() {
        let g = DilationGroup::from_row_major(2, &[1.5, 1.0, 0.0, 1.5]).unwrap();
        assert_eq!(g.method(), ExpMethod::ScalingSquaring);
        let a = g.dilate(std::f64::consts::E, false).unwrap();
        // exp([[1.5,1],[0,1.5]]) = e^1.5 [[1,1],[0,1]]
        let e = 1.5f64.exp();
        assert_relative_eq!(a[(0, 0)], e, max_relative = 1e-13);
        assert_relative_eq!(a[(0, 1)], e, max_relative = 1e-13);
        assert!(a[(1, 0)].abs() < 1e-14);
    }

    #[test]
    fn dilate_examples() {
        let id = DilationGroup::identity(2);
        let a = id.dilate(4.0, false).unwrap();
        assert_relative_eq!(a, DMatrix::identity(2, 2) * 4.0, max_relative = 1e-15);

        let d = DilationGroup::diagonal(&[1.0, 2.0]).unwrap();
        let a = d.dilate(3.0, true).unwrap();
        assert_relative_eq!(a[(0, 0)], 3.0, max_relative = 1e-15);
        assert_relative_eq!(a[(1, 1)], 9.0, max_relative = 1e-14);

        assert!(matches!(d.dilate(0.0, false), Err(Error::NonPositiveScale(_))));
        assert!(matches!(d.dilate(-1.0, false), Err(Error::NonPositiveScale(_))));
    }

    #[test]
    fn rotation_scaling_closed_form() {
        let g = rotation();
        let e = std::f64::consts::E;
        let a = g.dilate(e, false).unwrap();
        let (s, c) = 1f64.sin_cos();
        let expected = DMatrix::from_row_slice(2, 2, &[e * c, e * s, -e * s, e * c]);
        assert!((&a - &expected).norm() <= 1e-12 * expected.norm());
        let oracle = expm_scaling_squaring(g.matrix());
        assert!((&a - &oracle).norm() <= 1e-12 * oracle.norm());
        let adj = g.dilate(e, true).unwrap();
        assert!((adj - expected.transpose()).norm() <= 1e-12 * e);
    }

    #[test]
    fn rho_examples() {
        let id = DilationGroup::identity(2);
        assert_relative_eq!(id.rho(&[3.0, 4.0], false), 5.0, max_relative = 1e-13);
        let d = DilationGroup::diagonal(&[1.0, 2.0]).unwrap();
        let expected = ((9.0 + 145f64.sqrt()) / 2.0).sqrt();
        assert_relative_eq!(d.rho(&[3.0, 4.0], false), expected, max_relative = 1e-12);
        assert_eq!(d.rho(&[0.0, 0.0], false), 0.0);
        assert_eq!(d.rho(&[1e-301, 0.0], true), 0.0);
    }

    #[test]
    fn rho_on_unit_sphere_is_one() {
        for g in [DilationGroup::diagonal(&[1.0, 2.0]).unwrap(), rotation()] {
            for k in 0..16 {
                let a = k as f64 * 0.39;
                let x = [a.cos(), a.sin()];
                assert_relative_eq!(g.rho(&x, false), 1.0, max_relative = 1e-12);
                assert_relative_eq!(g.rho(&x, true), 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_group() {
        let g = DilationGroup::from_row_major(1, &[2.0]).unwrap();
        assert_relative_eq!(g.rho(&[9.0], false), 3.0, max_relative = 1e-12);
        assert_relative_eq!(g.rho(&[-0.25], false), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(
            unit_ball_volume(3),
            4.0 * std::f64::consts::PI / 3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn euclidean_properties_hold() {
        let r = DilationGroup::identity(2).check_norm_properties(1000, 7);
        assert!(r.holds(1e-12), "{r:?}");
    }
}
