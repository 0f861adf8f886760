//! `(p, inf)` atoms and the empirical comparison of `||g(f)||_p` with the grand
//! maximal quasi-norm.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dilation::{unit_ball_volume, DilationGroup};
use crate::error::{Error, Result};
use crate::grid::{FrequencySymbol, Geometry, GridFunction, PeriodicGrid, Side};
use crate::lp_transform::{analyze, g_discrete, g_norm, window_for, ScaleWindow};
use crate::maximal::{hp_quasinorm, peetre_max_at, Offsets};
use crate::partition::PartitionOfUnity;
use crate::util::smoothstep;

pub const SUP_SAFETY: f64 = 0.99;
pub const DILATION_MIN_POINTS: usize = 200;

/// Moment order `floor(gamma (1/p - 1))`.
pub fn moment_order(gamma: f64, p: f64) -> usize {
    (gamma * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as usize
}

/// Multi-indices with `|alpha| <= m` in graded lexicographic order.
pub fn multi_indices(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=m {
        let mut cur = vec![0; n];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, axis: usize, left: usize) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[axis] = k;
        fill(out, cur, axis + 1, left - k);
    }
}

fn monomial(y: &[f64], alpha: &[usize]) -> f64 {
    y.iter().zip(alpha).map(|(v, &a)| v.powi(a as i32)).product()
}

/// `|B| = r^gamma |{rho < 1}|`.
pub fn ball_volume(group: &DilationGroup, radius: f64) -> f64 {
    radius.powf(group.gamma()) * unit_ball_volume(group.dim())
}

/// Residuals of the three atom conditions.
#[derive(Clone, Debug, Serialize)]
pub struct AtomReport {
    /// Largest `|a|` outside the ball.
    pub outside_max: f64,
    /// `sup |a| / |B|^{-1/p}`.
    pub sup_ratio: f64,
    /// Largest `|int a (x - c)^alpha dx|` over `|alpha| <= M`.
    pub moment_residual: f64,
    pub support_ok: bool,
    pub sup_ok: bool,
    pub moments_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub p: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub moment_order: usize,
    pub samples: GridFunction,
    pub report: AtomReport,
}

/// Physical coordinates `x - c` for every grid point (unwrapped box coordinates).
fn centered(grid: &PeriodicGrid, idx: usize, c: &[f64], out: &mut [f64]) {
    grid.point(idx, out);
    for (o, ci) in out.iter_mut().zip(c) {
        *o -= ci;
    }
}

pub const MOMENT_TOLERANCE: f64 = 1e-10;

pub fn validate_atom(atom: &Atom, geom: &Geometry) -> AtomReport {
    validate_samples(&atom.samples, atom.p, &atom.center, atom.radius, atom.moment_order, geom)
}

pub fn validate_samples(a: &GridFunction, p: f64, center: &[f64], radius: f64, m: usize, geom: &Geometry) -> AtomReport {
    let grid = geom.grid();
    let group = geom.group();
    let n = grid.dim();
    let bound = ball_volume(group, radius).powf(-1.0 / p);
    let alphas = multi_indices(n, m);
    let mut outside_max = 0.0f64;
    let mut sup = 0.0f64;
    let mut moments = vec![0.0; alphas.len()];
    let mut y = vec![0.0; n];
    for (idx, z) in a.samples().iter().enumerate() {
        let v = z.norm();
        sup = sup.max(v);
        centered(grid, idx, center, &mut y);
        if group.rho(&y, false) >= radius {
            outside_max = outside_max.max(v);
        }
        if v != 0.0 {
            for (mo, alpha) in moments.iter_mut().zip(&alphas) {
                *mo += z.re * monomial(&y, alpha);
            }
        }
    }
    let w = grid.cell_volume();
    let moment_residual = moments.iter().map(|v| (v * w).abs()).fold(0.0, f64::max);
    let support_ok = outside_max <= 1e-13;
    let sup_ok = sup <= bound * (1.0 + 1e-10);
    let moments_ok = moment_residual <= MOMENT_TOLERANCE;
    AtomReport {
        outside_max,
        sup_ratio: sup / bound,
        moment_residual,
        support_ok,
        sup_ok,
        moments_ok,
        pass: support_ok && sup_ok && moments_ok,
    }
}

/// Random smooth `(p, inf)` atom on the ball `{rho(x - center) < radius}`.
pub fn make_atom(seed: u64, center: &[f64], radius: f64, p: f64, geom: &Geometry) -> Result<Atom> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("atom exponent must lie in (0, 1], got {p}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
    }
    let grid = geom.grid();
    let group = geom.group();
    let n = grid.dim();
    if center.len() != n {
        return Err(Error::Dimension(format!("center has {} entries, expected {n}", center.len())));
    }
    let m = moment_order(group.gamma(), p);
    let alphas = multi_indices(n, m);

    // Normalised coordinates z = A_{1/r}(x - c); the ball is |z| < 1.
    let inv = group.dilate(1.0 / radius, false)?;
    let edge = grid.side_length() / 2.0 - 2.0 * grid.spacing();
    let mut inside: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut y = vec![0.0; n];
    for idx in 0..grid.len() {
        centered(grid, idx, center, &mut y);
        let z: Vec<f64> = (0..n).map(|r| (0..n).map(|c| inv[(r, c)] * y[c]).sum()).collect();
        let q: f64 = z.iter().map(|v| v * v).sum();
        if q < 1.0 {
            let mut x = vec![0.0; n];
            grid.point(idx, &mut x);
            if x.iter().any(|v| v.abs() >= edge) {
                return Err(Error::InvalidParameter("ball does not fit inside the box with margin".into()));
            }
            inside.push((idx, z));
        }
    }
    if inside.len() < alphas.len() + 1 {
        return Err(Error::DegenerateBall {
            points: inside.len(),
            constraints: alphas.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(Vec<f64>, f64, f64)> = (0..6)
        .map(|_| {
            let k: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            (k, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.5..1.0))
        })
        .collect();
    let bump: Vec<f64> = inside
        .iter()
        .map(|(_, z)| {
            let q: f64 = z.iter().map(|v| v * v).sum();
            (-1.0 / (1.0 - q)).exp()
        })
        .collect();
    let mut vals: Vec<f64> = inside
        .iter()
        .zip(&bump)
        .map(|((_, z), b)| {
            let field: f64 = waves
                .iter()
                .map(|(k, phase, amp)| {
                    let dot: f64 = k.iter().zip(z).map(|(a, b)| a * b).sum();
                    amp * (PI * dot + phase).cos()
                })
                .sum();
            b * field
        })
        .collect();

    // Remove the bump-weighted polynomial part so that every discrete moment vanishes.
    let basis: Vec<Vec<f64>> = alphas
        .iter()
        .map(|a| inside.iter().map(|(_, z)| monomial(z, a)).collect())
        .collect();
    let k = alphas.len();
    let gram = DMatrix::from_fn(k, k, |r, c| {
        bump.iter()
            .zip(&basis[r])
            .zip(&basis[c])
            .map(|((b, u), v)| b * u * v)
            .sum::<f64>()
    });
    let lu = gram.lu();
    for _ in 0..3 {
        let rhs = DVector::from_fn(k, |r, _| vals.iter().zip(&basis[r]).map(|(v, u)| v * u).sum::<f64>());
        let coef = lu
            .solve(&rhs)
            .ok_or(Error::DegenerateBall {
                points: inside.len(),
                constraints: k,
            })?;
        for (i, v) in vals.iter_mut().enumerate() {
            let poly: f64 = (0..k).map(|a| coef[a] * basis[a][i]).sum();
            *v -= bump[i] * poly;
        }
    }

    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::DegenerateBall {
            points: inside.len(),
            constraints: k,
        });
    }
    let scale = SUP_SAFETY * ball_volume(group, radius).powf(-1.0 / p) / top;
    let mut samples = vec![Complex64::new(0.0, 0.0); grid.len()];
    for ((idx, _), v) in inside.iter().zip(&vals) {
        samples[*idx] = Complex64::new(v * scale, 0.0);
    }
    let samples = GridFunction::new(grid.clone(), Side::Physical, samples)?;
    let mut atom = Atom {
        p,
        center: center.to_vec(),
        radius,
        moment_order: m,
        samples,
        report: AtomReport {
            outside_max: 0.0,
            sup_ratio: 0.0,
            moment_residual: 0.0,
            support_ok: false,
            sup_ok: false,
            moments_ok: false,
            pass: false,
        },
    };
    atom.report = validate_atom(&atom, geom);
    Ok(atom)
}

impl Atom {
    /// Lattice translate by `shift` grid steps.
    pub fn translated(&self, shift: &[i64]) -> Result<Atom> {
        let h = self.samples.grid().spacing();
        Ok(Atom {
            center: self.center.iter().zip(shift).map(|(c, s)| c + *s as f64 * h).collect(),
            samples: self.samples.translated(shift)?,
            ..self.clone()
        })
    }
}

/// Largest radius `r` such that the ball of radius `2r` about the origin stays inside `frac` of the half box.
pub fn dilation_test_radius(geom: &Geometry, frac: f64) -> Result<f64> {
    let half = frac * geom.grid().side_length() / 2.0;
    let extent = |r: f64| -> Result<f64> { Ok(geom.group().dilate(r, false)?.singular_values().max()) };
    let (mut lo, mut hi) = (1e-3f64, 1e3f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if extent(2.0 * mid)? <= half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `(sum_x chi(rho(x) / radius) g(x)^p h^n)^{1/p}` for `g = g(f)` over `window`, with `chi` a smooth
/// cutoff equal to 1 below 1/2 and 0 above 1.
fn g_norm_on_ball(f: &GridFunction, sym: &FrequencySymbol, geom: &Geometry, window: ScaleWindow, p: f64, radius: f64) -> Result<f64> {
    let g = g_discrete(&analyze(f, sym, geom, window)?).re();
    let total: f64 = g
        .iter()
        .zip(geom.rho())
        .map(|(v, r)| smoothstep(2.0 - 2.0 * r / radius) * v.powf(p))
        .sum();
    Ok((total * geom.grid().cell_volume()).powf(1.0 / p))
}

/// Relative change of the normalised `L^p` norm of `g(a)` under `A_2`. The atom lives on `B(0, R/2)` and the norm is
/// taken over `B(0, R)`; the dilate is the atom from the same seed on `B(0, R)`, measured over `B(0, 2R)`,
/// which equals `2^{-gamma/p} a(A_{1/2} x)` up to sampling. `R` is the largest radius with `B(0, 2R)` in the box.
/// The grid is refined until the smaller ball holds at least [`DILATION_MIN_POINTS`] samples
/// (at most 512 per axis).
pub fn dilation_change(sym: &FrequencySymbol, geom: &Geometry, window: ScaleWindow, p: f64, seed: u64) -> Result<f64> {
    let big = dilation_test_radius(geom, 0.9)?;
    let mut fine = geom.refined()?;
    while fine.rho().iter().filter(|&&r| r < big / 2.0).count() < DILATION_MIN_POINTS
        && fine.grid().samples_per_axis() < 512
    {
        fine = fine.refined()?;
    }
    let geom = &fine;
    let center = vec![0.0; geom.grid().dim()];
    let small = make_atom(seed, &center, big / 2.0, p, geom)?;
    let large = make_atom(seed, &center, big, p, geom)?;
    let window = ScaleWindow::new(window.b, window.j_min - 1, window.j_max + 2, window.substeps)?;
    // ||a||_2 |B|^{1/p - 1/2} is A_2-invariant and avoids the sampled maximum.
    let scale = |a: &Atom| -> Result<f64> {
        Ok(crate::grid::lp_norm(&a.samples, 2.0, None)? * ball_volume(geom.group(), a.radius).powf(1.0 / p - 0.5))
    };
    let ws = g_norm_on_ball(&small.samples, sym, geom, window, p, big)? / scale(&small)?;
    let wl = g_norm_on_ball(&large.samples, sym, geom, window, p, 2.0 * big)? / scale(&large)?;
    Ok((wl - ws).abs() / ws)
}

/// Square-function window covering every lattice frequency for `sym`.
pub fn default_g_window(sym: &FrequencySymbol, geom: &Geometry, b: f64) -> Result<ScaleWindow> {
    window_for(sym, geom, b, 1, 1e-8)
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomExperimentReport {
    pub p: f64,
    pub count: usize,
    pub g_norms: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub coefficient_of_variation: f64,
    pub all_valid: bool,
    /// Largest relative change of `||g(a)||_p` under a lattice translation.
    pub translation_deviation: f64,
    /// Relative change under `A_2` for an atom built from the first seed, if that atom fits the box.
    pub dilation_change: Option<f64>,
    pub atoms: Vec<AtomSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AtomSummary {
    pub seed: u64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub moment_order: usize,
    pub g_norm: f64,
    pub translated_g_norm: f64,
    pub report: AtomReport,
}

/// Random atoms with random centres and radii; `||g(a)||_p` statistics.
pub fn atom_gbound_experiment(
    sym: &FrequencySymbol,
    geom: &Geometry,
    pou: &PartitionOfUnity,
    p: f64,
    count: usize,
    seed: u64,
) -> Result<AtomExperimentReport> {
    if count == 0 {
        return Err(Error::InvalidParameter("count must be at least 1".into()));
    }
    let grid = geom.grid();
    let n = grid.dim();
    let window = default_g_window(sym, geom, pou.b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(u64, Vec<f64>, f64, Vec<i64>)> = (0..count)
        .map(|_| {
            let h = grid.spacing();
            let quarter = grid.side_length() / 4.0;
            let c: Vec<f64> = (0..n).map(|_| (rng.gen_range(-quarter..quarter) / h).round() * h).collect();
            let r = rng.gen_range(0.8..1.6);
            let shift: Vec<i64> = (0..n).map(|_| rng.gen_range(-8..=8)).collect();
            (rng.gen(), c, r, shift)
        })
        .collect();
    let atoms: Vec<AtomSummary> = specs
        .iter()
        .map(|(s, c, r, shift)| {
            let a = make_atom(*s, c, *r, p, geom)?;
            let v = g_norm(&a.samples, sym, geom, window, p, None)?;
            let moved = a.translated(shift)?;
            let w = g_norm(&moved.samples, sym, geom, window, p, None)?;
            Ok(AtomSummary {
                seed: *s,
                center: c.clone(),
                radius: *r,
                moment_order: a.moment_order,
                g_norm: v,
                translated_g_norm: w,
                report: a.report,
            })
        })
        .collect::<Result<_>>()?;
    let results: Vec<(f64, f64, bool)> = atoms
        .iter()
        .map(|a| (a.g_norm, (a.translated_g_norm - a.g_norm).abs() / a.g_norm, a.report.pass))
        .collect();
    let g_norms: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean = g_norms.iter().sum::<f64>() / count as f64;
    let var = g_norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;

    let dilation_change = dilation_change(sym, geom, window, p, specs[0].0).ok();
    Ok(AtomExperimentReport {
        p,
        count,
        max: g_norms.iter().copied().fold(0.0, f64::max),
        min: g_norms.iter().copied().fold(f64::INFINITY, f64::min),
        coefficient_of_variation: var.sqrt() / mean,
        all_valid: results.iter().all(|r| r.2),
        translation_deviation: results.iter().map(|r| r.1).fold(0.0, f64::max),
        g_norms,
        dilation_change,
        atoms,
    })
}

/// A member of the test family, defined independently of the grid resolution.
#[derive(Clone, Debug, Serialize)]
pub enum TestFunction {
    /// `d/dx_k` of `exp(-pi |R^T (x - c)|^2 / s^2)` with per-axis widths.
    GaussianDerivative { center: Vec<f64>, widths: Vec<f64>, angle: f64, axis: usize },
    /// Laplacian of the same anisotropic Gaussian.
    GaussianLaplacian { center: Vec<f64>, widths: Vec<f64>, angle: f64 },
    /// Frequency-side packet `bump((rho^*(xi) - r0) / w) (1 + a cos(k arg xi)) e^{-2 pi i <c, xi>}`.
    AnnulusPacket { center: Vec<f64>, r0: f64, width: f64, lobes: u32, lobe_weight: f64 },
}

impl TestFunction {
    pub fn kind(&self) -> &'static str {
        match self {
            TestFunction::GaussianDerivative { .. } => "gaussian-derivative",
            TestFunction::GaussianLaplacian { .. } => "gaussian-laplacian",
            TestFunction::AnnulusPacket { .. } => "annulus-packet",
        }
    }

    /// Samples on `geom`'s grid.
    pub fn sample(&self, geom: &Geometry) -> Result<GridFunction> {
        let grid = geom.grid();
        let n = grid.dim();
        match self {
            TestFunction::GaussianDerivative { center, widths, angle, axis } => {
                let (ca, sa) = (angle.cos(), angle.sin());
                Ok(GridFunction::from_real_fn(grid, |x| {
                    let (u, grad) = rotated_gaussian(x, center, widths, ca, sa, n);
                    u * grad[*axis]
                }))
            }
            TestFunction::GaussianLaplacian { center, widths, angle } => {
                let (ca, sa) = (angle.cos(), angle.sin());
                Ok(GridFunction::from_real_fn(grid, |x| gaussian_laplacian(x, center, widths, ca, sa, n)))
            }
            TestFunction::AnnulusPacket { center, r0, width, lobes, lobe_weight } => {
                let rs = geom.rho_star();
                let mut hat = vec![Complex64::new(0.0, 0.0); grid.len()];
                let mut xi = [0.0; 3];
                for (idx, h) in hat.iter_mut().enumerate() {
                    if grid.is_nyquist(idx) {
                        continue;
                    }
                    let u = (rs[idx] - r0) / width;
                    if u.abs() >= 1.0 {
                        continue;
                    }
                    grid.frequency(idx, &mut xi[..n]);
                    let ang = xi[1 % n].atan2(xi[0]);
                    let amp = (1.0 - 1.0 / (1.0 - u * u)).exp() * (1.0 + lobe_weight * (*lobes as f64 * ang).cos());
                    let phase: f64 = -2.0 * PI * (0..n).map(|k| center[k] * xi[k]).sum::<f64>();
                    *h = Complex64::from_polar(amp, phase);
                }
                // Real part of the inverse transform.
                let f = GridFunction::new(grid.clone(), Side::Frequency, hat)?.inverse_transform()?;
                GridFunction::from_real(grid, &f.re())
            }
        }
    }
}

/// Value and `grad log` factor of the rotated Gaussian: returns `(g, d/dx_k g / g)`.
fn rotated_gaussian(x: &[f64], c: &[f64], s: &[f64], ca: f64, sa: f64, n: usize) -> (f64, [f64; 3]) {
    let y: Vec<f64> = (0..n).map(|k| x[k] - c[k]).collect();
    let mut rot = [0.0; 3];
    rot[..n].copy_from_slice(&y);
    if n >= 2 {
        rot[0] = ca * y[0] + sa * y[1];
        rot[1] = -sa * y[0] + ca * y[1];
    }
    let q: f64 = (0..n).map(|k| rot[k] * rot[k] / (s[k] * s[k])).sum();
    let g = (-PI * q).exp();
    // d/dy of -pi sum rot_k^2 / s_k^2.
    let mut dr = [0.0; 3];
    for k in 0..n {
        dr[k] = -2.0 * PI * rot[k] / (s[k] * s[k]);
    }
    let mut grad = dr;
    if n >= 2 {
        grad[0] = ca * dr[0] - sa * dr[1];
        grad[1] = sa * dr[0] + ca * dr[1];
    }
    (g, grad)
}

fn gaussian_laplacian(x: &[f64], c: &[f64], s: &[f64], ca: f64, sa: f64, n: usize) -> f64 {
    let (g, grad) = rotated_gaussian(x, c, s, ca, sa, n);
    // Laplacian is rotation invariant: sum over rotated axes of (dr_k^2 - 2 pi / s_k^2) g.
    let lap_log: f64 = (0..n).map(|k| -2.0 * PI / (s[k] * s[k])).sum();
    let grad_sq: f64 = (0..n).map(|k| grad[k] * grad[k]).sum();
    g * (grad_sq + lap_log)
}

/// Seeded family of 10 Gaussian derivatives, 10 Gaussian Laplacians and 10 annulus packets.
pub fn default_family(n: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(30);
    let center = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect() };
    for k in 0..10 {
        let c = center(&mut rng);
        let widths = (0..n).map(|_| rng.gen_range(1.0..1.6)).collect();
        out.push(TestFunction::GaussianDerivative {
            center: c,
            widths,
            angle: rng.gen_range(0.0..PI),
            axis: k % n,
        });
    }
    for _ in 0..10 {
        let c = center(&mut rng);
        let widths = (0..n).map(|_| rng.gen_range(1.0..1.6)).collect();
        out.push(TestFunction::GaussianLaplacian {
            center: c,
            widths,
            angle: rng.gen_range(0.0..PI),
        });
    }
    for _ in 0..10 {
        let c = center(&mut rng);
        out.push(TestFunction::AnnulusPacket {
            center: c,
            r0: rng.gen_range(0.7..1.1),
            width: rng.gen_range(0.25..0.45),
            lobes: rng.gen_range(1..4),
            lobe_weight: rng.gen_range(0.0..0.5),
        });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRow {
    pub function_id: usize,
    pub kind: String,
    pub p: f64,
    pub hp_quasinorm: f64,
    pub g_norm: f64,
    pub ratio: f64,
    pub resolution: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    /// Functions dropped because the quasi-norm vanished.
    pub excluded: Vec<usize>,
    pub c1: f64,
    pub c2: f64,
    pub spread: f64,
    /// `|r_fine / r_coarse - 1|` per function.
    pub drift: Vec<f64>,
    pub max_drift: f64,
}

/// Geometric scale grid `b^{j + k/K}` covering `window`.
pub fn s_grid_for(window: &ScaleWindow, substeps: usize) -> Vec<f64> {
    window.with_substeps(substeps).nodes()
}

/// Ratios `||g(f)||_p / ||f||_{H^p}` at each resolution in `resolutions`, same box.
pub fn equivalence_experiment(
    sym: &FrequencySymbol,
    mollifier: &FrequencySymbol,
    group: &DilationGroup,
    b: f64,
    p: f64,
    family: &[TestFunction],
    side_length: f64,
    resolutions: &[usize],
    s_substeps: usize,
) -> Result<EquivalenceReport> {
    if family.is_empty() || resolutions.is_empty() {
        return Err(Error::InvalidParameter("family and resolutions must be nonempty".into()));
    }
    let n = group.dim();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    let coarse = Geometry::new(&PeriodicGrid::new(n, side_length, resolutions[0])?, group)?;
    let s_window = default_g_window(sym, &coarse, b)?;
    let s_grid = s_grid_for(&s_window, s_substeps);
    for &res in resolutions {
        let geom = if res == resolutions[0] {
            coarse.clone()
        } else {
            Geometry::new(&PeriodicGrid::new(n, side_length, res)?, group)?
        };
        let window = default_g_window(sym, &geom, b)?;
        let out: Vec<Result<Option<EquivalenceRow>>> = family
            .par_iter()
            .enumerate()
            .map(|(id, tf)| {
                let f = tf.sample(&geom)?;
                let hp = hp_quasinorm(&f, mollifier, &geom, p, &s_grid)?;
                if hp < 1e-14 {
                    return Ok(None);
                }
                let g = g_norm(&f, sym, &geom, window, p, None)?;
                Ok(Some(EquivalenceRow {
                    function_id: id,
                    kind: tf.kind().to_string(),
                    p,
                    hp_quasinorm: hp,
                    g_norm: g,
                    ratio: g / hp,
                    resolution: res,
                }))
            })
            .collect();
        for (id, r) in out.into_iter().enumerate() {
            match r? {
                Some(row) => rows.push(row),
                None => {
                    if !excluded.contains(&id) {
                        excluded.push(id)
                    }
                }
            }
        }
    }
    rows.retain(|r| !excluded.contains(&r.function_id));
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let c1 = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = ratios.iter().copied().fold(0.0, f64::max);
    let first = resolutions[0];
    let last = *resolutions.last().expect("nonempty");
    let drift: Vec<f64> = rows
        .iter()
        .filter(|r| r.resolution == first)
        .filter_map(|r0| {
            rows.iter()
                .find(|r| r.resolution == last && r.function_id == r0.function_id)
                .map(|r1| (r1.ratio / r0.ratio - 1.0).abs())
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::ZeroQuasinorm(0.0));
    }
    Ok(EquivalenceReport {
        c1,
        c2,
        spread: c2 / c1,
        max_drift: drift.iter().copied().fold(0.0, f64::max),
        drift,
        rows,
        excluded,
    })
}

/// Fitted constant `max sup_s |Phi_s * psi_t * f| / (eta_t * f)**_{N, 1/t}` over nodes and points,
/// where `eta` equals 1 on the support of `psi^`.
pub fn plateau_majorant_constant(
    f: &GridFunction,
    psi: &FrequencySymbol,
    eta: &FrequencySymbol,
    mollifier: &FrequencySymbol,
    geom: &Geometry,
    t_nodes: &[f64],
    s_grid: &[f64],
    big_n: f64,
    points: &[usize],
) -> Result<f64> {
    let f_hat = f.to_frequency();
    let offsets = Offsets::new(geom);
    let mut worst = 0.0f64;
    for &t in t_nodes {
        let pt = psi.sample_dilated(geom, t)?.mul(&f_hat)?;
        let mut lhs = vec![0.0f64; points.len()];
        for &s in s_grid {
            let v = mollifier.sample_dilated(geom, s)?.mul(&pt)?.inverse_transform()?;
            for (l, &i) in lhs.iter_mut().zip(points) {
                *l = l.max(v.samples()[i].norm());
            }
        }
        let et = eta.sample_dilated(geom, t)?.mul(&f_hat)?.inverse_transform()?.abs();
        let rhs = peetre_max_at(&et, geom, &offsets, big_n, 1.0 / t, points);
        for (l, r) in lhs.iter().zip(&rhs) {
            if *r > 0.0 {
                worst = worst.max(l / r);
            }
        }
    }
    Ok(worst)
}
