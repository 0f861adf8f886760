//! Partition of unity adapted to a dilation group.
//!
//! Given a non-degenerate symbol `phi^`, [`find_interval_cover`] finds scale intervals
//! on which `|phi^(A_t^* omega)|^2` stays large for every sphere direction `omega`,
//! and [`build_partition`] turns the cover into a dual filter `eta^` with
//! `sum_j phi^(A_{b^j}^* xi) eta^(A_{b^j}^* xi) = 1` for `xi != 0`, together with the
//! low-pass complement `zeta^`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dilation::DilationGroup;
use crate::error::{Error, Result};
use crate::grid::{FrequencySymbol, Geometry, GridFunction, Side, SymbolArg, SymbolMeta};
use crate::util::smoothstep;

/// Number of sphere directions used by default for dimension `n`.
pub fn default_sphere_samples(n: usize) -> usize {
    match n {
        1 => 2,
        2 => 256,
        _ => 1024,
    }
}

/// Unit vectors: `+-1` for `n = 1`, equally spaced angles for `n = 2`, a Fibonacci lattice for `n = 3`.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}

/// Log-uniform scale grid `2^{k/per_octave}` for `|k| <= octaves * per_octave`.
pub fn log_t_grid(octaves: u32, per_octave: u32) -> Vec<f64> {
    let m = (octaves * per_octave) as i64;
    (-m..=m).map(|k| 2f64.powf(k as f64 / per_octave as f64)).collect()
}

pub fn default_t_grid() -> Vec<f64> {
    log_t_grid(20, 16)
}

/// Finite family of scale intervals with a uniform lower bound on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalCover {
    pub intervals: Vec<(f64, f64)>,
    /// Safety-scaled lower bound `c`.
    pub lower_bound: f64,
    /// Measured `inf_omega max_h min_{t in I_h} |phi^(A_t^* omega)|^2` before the safety factor.
    pub measured: f64,
    pub directions: usize,
}

impl IntervalCover {
    /// `max_h a_h / b_h`.
    pub fn b0(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| a / b).fold(0.0, f64::max)
    }

    /// Hull `[m, H]` of the intervals.
    pub fn hull(&self) -> (f64, f64) {
        self.intervals
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(m, h), &(a, b)| (m.min(a), h.max(b)))
    }
}

pub const COVER_SAFETY: f64 = 0.9;

/// Greedy interval cover of the unit sphere.
pub fn find_interval_cover(
    sym: &FrequencySymbol,
    group: &DilationGroup,
    sphere_samples: usize,
    t_grid: &[f64],
) -> Result<IntervalCover> {
    let n = group.dim();
    if t_grid.len() < 3 || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !(t_grid[0] > 0.0) {
        return Err(Error::InvalidParameter("t grid must be positive, increasing, with at least 3 points".into()));
    }
    let dirs = sphere_directions(n, sphere_samples);
    let profiles: Vec<Vec<f64>> = dirs
        .par_iter()
        .map(|w| {
            let mut buf = vec![0.0; n];
            // rho^* = 1 on the Euclidean unit sphere.
            t_grid
                .iter()
                .map(|&t| sym.eval_dilated(group, t, w, 1.0, &mut buf).norm_sqr())
                .collect()
        })
        .collect();

    let last = t_grid.len() - 1;
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    let mut own = Vec::with_capacity(dirs.len());
    let mut peaks = Vec::with_capacity(dirs.len());
    for (d, v) in profiles.iter().enumerate() {
        let (k, &peak) = v
            .iter()
            .enumerate()
            .fold((0, &v[0]), |best, (k, x)| if *x > *best.1 { (k, x) } else { best });
        if !(peak > 0.0) {
            return Err(Error::CoverFailure(format!(
                "symbol vanishes along the whole orbit of direction {:?}",
                dirs[d]
            )));
        }
        if k == 0 || k == last {
            return Err(Error::CoverFailure(format!(
                "profile peak of direction {:?} sits at the edge of the t grid",
                dirs[d]
            )));
        }
        let mut lo = k;
        while lo > 0 && v[lo - 1] >= 0.5 * peak {
            lo -= 1;
        }
        let mut hi = k;
        while hi < last && v[hi + 1] >= 0.5 * peak {
            hi += 1;
        }
        if lo == hi {
            lo = lo.saturating_sub(1);
            hi = (hi + 1).min(last);
        }
        let idx = match candidates.iter().position(|&c| c == (lo, hi)) {
            Some(i) => i,
            None => {
                candidates.push((lo, hi));
                candidates.len() - 1
            }
        };
        own.push(idx);
        peaks.push(peak);
    }

    let floor = |c: usize, d: usize| -> f64 {
        let (lo, hi) = candidates[c];
        profiles[d][lo..=hi].iter().copied().fold(f64::INFINITY, f64::min)
    };
    let covers: Vec<Vec<bool>> = (0..candidates.len())
        .map(|c| {
            (0..dirs.len())
                .map(|d| own[d] == c || floor(c, d) >= 0.25 * peaks[d])
                .collect()
        })
        .collect();

    let mut uncovered = vec![true; dirs.len()];
    let mut chosen: Vec<usize> = Vec::new();
    while uncovered.iter().any(|&u| u) {
        let (best, gain) = covers
            .iter()
            .enumerate()
            .map(|(c, cov)| (c, cov.iter().zip(&uncovered).filter(|(a, b)| **a && **b).count()))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        debug_assert!(gain > 0);
        chosen.push(best);
        for (u, &c) in uncovered.iter_mut().zip(&covers[best]) {
            if c {
                *u = false;
            }
        }
    }
    chosen.sort_by(|&a, &b| candidates[a].cmp(&candidates[b]));

    let measured = (0..dirs.len())
        .map(|d| chosen.iter().map(|&c| floor(c, d)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min);
    if !(measured > 0.0) {
        return Err(Error::CoverFailure(format!("no positive lower bound (measured {measured:e})")));
    }
    Ok(IntervalCover {
        intervals: chosen
            .iter()
            .map(|&c| (t_grid[candidates[c].0], t_grid[candidates[c].1]))
            .collect(),
        lower_bound: COVER_SAFETY * measured,
        measured,
        directions: dirs.len(),
    })
}

/// Shared evaluation core captured by the dual and low-pass symbols.
#[derive(Debug)]
struct Core {
    group: DilationGroup,
    phi: FrequencySymbol,
    b: f64,
    m: f64,
    h: f64,
}

impl Core {
    fn theta(&self, s: f64) -> f64 {
        let (m, h) = (self.m, self.h);
        if s <= 0.5 * m || s >= 2.0 * h {
            0.0
        } else if s < m {
            smoothstep((s - 0.5 * m) / (0.5 * m))
        } else if s <= h {
            1.0
        } else {
            smoothstep((2.0 * h - s) / h)
        }
    }

    /// Indices `j` with `b^j r` inside `(lo, hi)`, possibly with one extra at each end.
    fn span(&self, r: f64, lo: f64, hi: f64) -> (i32, i32) {
        let lb = self.b.ln();
        let a = ((hi / r).ln() / lb).floor() as i32;
        let z = ((lo / r).ln() / lb).ceil() as i32;
        (a, z)
    }

    fn psi(&self, xi: &[f64], r: f64, buf: &mut [f64]) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let (a, z) = self.span(r, 0.5 * self.m, 2.0 * self.h);
        let mut sum = 0.0;
        for j in a..=z {
            let t = self.b.powi(j);
            let th = self.theta(t * r);
            if th > 0.0 {
                sum += th * self.phi.eval_dilated(&self.group, t, xi, r, buf).norm_sqr();
            }
        }
        sum
    }

    fn eta(&self, xi: &[f64], r: f64) -> Complex64 {
        let th = self.theta(r);
        if th == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut buf = [0.0; 8];
        let n = xi.len();
        let psi = self.psi(xi, r, &mut buf[..n]);
        let phi = self.phi.eval(SymbolArg { xi, rho_star: r });
        if psi > 0.0 {
            th * phi.conj() / psi
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// `sum_{j in [j_lo, j_hi]} phi^ eta^ (A_{b^j}^* xi)`.
    fn partial_sum(&self, xi: &[f64], r: f64, j_lo: i32, j_hi: i32) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        if !(r > 0.0) {
            return acc;
        }
        let (a, z) = self.span(r, 0.5 * self.m, 2.0 * self.h);
        let n = xi.len();
        let mut buf = [0.0; 8];
        for j in a.max(j_lo)..=z.min(j_hi) {
            let t = self.b.powi(j);
            let tr = t * r;
            if self.theta(tr) == 0.0 {
                continue;
            }
            self.group.apply_into(t, xi, true, &mut buf[..n]);
            let zeta = &buf[..n];
            let p = self.phi.eval(SymbolArg { xi: zeta, rho_star: tr });
            acc += p * self.eta(zeta, tr);
        }
        acc
    }
}

/// Dual filter, low-pass complement and their parameters.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    core: Arc<Core>,
    pub b: f64,
    pub b0: f64,
    pub theta_m: f64,
    pub theta_h: f64,
    pub r1: f64,
    pub r2: f64,
    pub c: f64,
    pub psi_floor: f64,
    pub cover: IntervalCover,
    pub eta_hat: FrequencySymbol,
    pub zeta_hat: FrequencySymbol,
}

/// Base used when none is requested: `max(1/2, b0)`.
pub fn default_base(cover: &IntervalCover) -> f64 {
    cover.b0().max(0.5)
}

pub fn build_partition(
    sym: &FrequencySymbol,
    group: &DilationGroup,
    cover: &IntervalCover,
    b: Option<f64>,
) -> Result<PartitionOfUnity> {
    let b0 = cover.b0();
    let b = b.unwrap_or_else(|| default_base(cover));
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidBase(b));
    }
    if b < b0 {
        return Err(Error::BaseTooSmall { b, b0 });
    }
    let (m, h) = cover.hull();
    let core = Arc::new(Core {
        group: group.clone(),
        phi: sym.clone(),
        b,
        m,
        h,
    });
    let (r1, r2) = (0.5 * m, 2.0 * h);

    let eta_core = core.clone();
    let eta_hat = FrequencySymbol::custom(
        format!("eta[{}]", sym.id()),
        SymbolMeta {
            decay: Some(f64::INFINITY),
            annulus: Some((r1, r2)),
            cancellation: true,
        },
        move |arg: SymbolArg<'_>| eta_core.eta(arg.xi, arg.rho_star),
    );
    let zeta_core = core.clone();
    let zeta_hat = FrequencySymbol::custom(
        format!("zeta[{}]", sym.id()),
        SymbolMeta {
            decay: None,
            annulus: Some((0.0, r2)),
            cancellation: false,
        },
        move |arg: SymbolArg<'_>| {
            Complex64::new(1.0, 0.0) - zeta_core.partial_sum(arg.xi, arg.rho_star, 0, i32::MAX)
        },
    );

    // Psi is invariant under xi -> A_b^* xi, so a shell 1 <= rho^* < 1/b sees every value.
    let n = group.dim();
    let dirs = sphere_directions(n, default_sphere_samples(n));
    let shell: Vec<f64> = (0..32).map(|k| b.powf(-(k as f64) / 32.0)).collect();
    let psi_floor = dirs
        .par_iter()
        .map(|w| {
            let mut xi = vec![0.0; n];
            let mut buf = vec![0.0; n];
            shell
                .iter()
                .map(|&s| {
                    group.apply_into(s, w, true, &mut xi);
                    core.psi(&xi, s, &mut buf)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if !(psi_floor > 0.0) {
        return Err(Error::PsiFloor(psi_floor));
    }

    Ok(PartitionOfUnity {
        core,
        b,
        b0,
        theta_m: m,
        theta_h: h,
        r1,
        r2,
        c: cover.lower_bound,
        psi_floor,
        cover: cover.clone(),
        eta_hat,
        zeta_hat,
    })
}

/// Cover with default sampling followed by [`build_partition`].
pub fn partition_for(sym: &FrequencySymbol, group: &DilationGroup, b: Option<f64>) -> Result<PartitionOfUnity> {
    let cover = find_interval_cover(sym, group, default_sphere_samples(group.dim()), &default_t_grid())?;
    build_partition(sym, group, &cover, b)
}

/// Summary of [`PartitionOfUnity::residual_on`].
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub j_min: i32,
    pub j_max: i32,
    pub covered: (f64, f64),
    pub points: usize,
    pub max_residual: f64,
    pub psi_min: f64,
}

impl PartitionOfUnity {
    pub fn phi(&self) -> &FrequencySymbol {
        &self.core.phi
    }

    pub fn group(&self) -> &DilationGroup {
        &self.core.group
    }

    pub fn theta(&self, s: f64) -> f64 {
        self.core.theta(s)
    }

    /// `Psi(xi) = sum_j theta(b^j rho^*) |phi^(A_{b^j}^* xi)|^2`.
    pub fn psi(&self, xi: &[f64], rho_star: f64) -> f64 {
        let mut buf = vec![0.0; xi.len()];
        self.core.psi(xi, rho_star, &mut buf)
    }

    /// `sum_{j_lo <= j <= j_hi} phi^ eta^ (A_{b^j}^* xi)`.
    pub fn partial_sum(&self, xi: &[f64], rho_star: f64, j_lo: i32, j_hi: i32) -> Complex64 {
        self.core.partial_sum(xi, rho_star, j_lo, j_hi)
    }

    /// Scales `j` with `eta^(A_{b^j}^* xi)` possibly nonzero when `rho^*(xi) = r`.
    pub fn active_scales(&self, r: f64) -> (i32, i32) {
        self.core.span(r, self.r1, self.r2)
    }

    /// Smallest scale window containing every active scale of every nonzero lattice frequency.
    pub fn lattice_window(&self, geom: &Geometry) -> (i32, i32) {
        let (lo, hi) = geom.rho_star_range();
        (self.active_scales(lo).0, self.active_scales(hi).1)
    }

    /// `rho^*` range on which the window `[j_min, j_max]` contains every active scale.
    pub fn covered_range(&self, j_min: i32, j_max: i32) -> (f64, f64) {
        let b = self.b;
        (self.r2 * b.powi(1 - j_min), self.r1 * b.powi(-j_max - 1))
    }

    /// Maximal `|sum_j phi^ eta^ - 1|` over non-Nyquist lattice points in the covered range.
    pub fn residual_on(&self, geom: &Geometry, window: Option<(i32, i32)>) -> ResidualReport {
        let (j_min, j_max) = window.unwrap_or_else(|| self.lattice_window(geom));
        let covered = self.covered_range(j_min, j_max);
        let grid = geom.grid();
        let n = grid.dim();
        let rs = geom.rho_star();
        let (points, max_residual, psi_min) = (0..grid.len())
            .into_par_iter()
            .filter(|&idx| !grid.is_nyquist(idx) && rs[idx] > 0.0 && rs[idx] >= covered.0 && rs[idx] <= covered.1)
            .map(|idx| {
                let mut xi = [0.0; 3];
                grid.frequency(idx, &mut xi[..n]);
                let s = self.partial_sum(&xi[..n], rs[idx], j_min, j_max);
                (1usize, (s - 1.0).norm(), self.psi(&xi[..n], rs[idx]))
            })
            .reduce(
                || (0, 0.0, f64::INFINITY),
                |a, b| (a.0 + b.0, a.1.max(b.1), a.2.min(b.2)),
            );
        ResidualReport {
            j_min,
            j_max,
            covered,
            points,
            max_residual,
            psi_min,
        }
    }

    /// First scale of the window `{j : b^j <= r2}` used for transition constants.
    pub fn constants_start(&self) -> i32 {
        (self.r2.ln() / self.b.ln()).ceil() as i32
    }
}

pub const DEFAULT_CONSTANT_SCALES: i32 = 16;

/// `C(psi, j, L) = int (1 + rho(x))^L |F^{-1}[psi^(A_{b^-j}^* .) eta^](x)| dx` by grid quadrature.
pub fn transition_constant(
    psi: &FrequencySymbol,
    pou: &PartitionOfUnity,
    geom: &Geometry,
    j: i32,
    lw: f64,
) -> Result<f64> {
    let lo = pou.constants_start();
    let hi = lo + DEFAULT_CONSTANT_SCALES - 1;
    if j < lo || j > hi {
        return Err(Error::Window { j, lo, hi });
    }
    let a = psi.sample_dilated(geom, pou.b.powi(-j))?;
    let e = pou.eta_hat.sample(geom)?;
    weighted_l1(&a.mul(&e)?, geom, lw)
}

/// `D(Xi_k, L) = int (1 + rho(x))^L |F^{-1}[zeta^ Xi_k](x)| dx` with `Xi_k = 2 pi i xi_k`.
pub fn lowpass_constant(pou: &PartitionOfUnity, geom: &Geometry, k: usize, lw: f64) -> Result<f64> {
    if k >= geom.grid().dim() {
        return Err(Error::Dimension(format!("coordinate index {k} out of range")));
    }
    let sym = pou.zeta_hat.product(&FrequencySymbol::coordinate_derivative(k), "zeta*xi_k");
    weighted_l1(&sym.sample(geom)?, geom, lw)
}

fn weighted_l1(hat: &GridFunction, geom: &Geometry, lw: f64) -> Result<f64> {
    if !(lw >= 0.0) {
        return Err(Error::InvalidParameter(format!("weight exponent must be nonnegative, got {lw}")));
    }
    let f = hat.inverse_transform()?;
    let sum: f64 = f
        .samples()
        .iter()
        .zip(geom.rho())
        .map(|(z, r)| (1.0 + r).powf(lw) * z.norm())
        .sum();
    Ok(sum * geom.grid().cell_volume())
}

/// Numerical probe of the admissibility conditions for a symbol.
#[derive(Clone, Debug, Serialize)]
pub struct ClassBReport {
    /// `|phi^(0)|`.
    pub value_at_origin: f64,
    pub cancellation: bool,
    /// Smallest log-log slope of `|phi^(s omega)|` near `s = 0` (infinite if it vanishes there).
    pub epsilon: f64,
    pub small_decay: bool,
    /// For each `tau`, `(tau, sup |phi^| rho^*^tau over the tail probe, value at the outermost radius)`.
    pub tail: Vec<(f64, f64, f64)>,
    pub rapid_decay: bool,
    /// Smallest `sup_t |phi^(A_t^* omega)|` over sphere directions.
    pub min_orbit_sup: f64,
    pub nondegenerate: bool,
    pub pass: bool,
}

pub fn check_class_b(
    sym: &FrequencySymbol,
    group: &DilationGroup,
    sphere_samples: usize,
    t_grid: &[f64],
) -> ClassBReport {
    let n = group.dim();
    let dirs = sphere_directions(n, sphere_samples);
    let origin = vec![0.0; n];
    let value_at_origin = sym.eval(SymbolArg {
        xi: &origin,
        rho_star: 0.0,
    })
    .norm();
    let cancellation = value_at_origin <= 1e-14;

    let at = |w: &[f64], s: f64| -> f64 {
        let xi: Vec<f64> = w.iter().map(|v| v * s).collect();
        sym.eval_at(group, &xi).norm()
    };
    let (s1, s2) = (1e-4, 1e-3);
    let epsilon = dirs
        .iter()
        .map(|w| {
            let (a, b) = (at(w, s1), at(w, s2));
            if a == 0.0 && b == 0.0 {
                f64::INFINITY
            } else if a == 0.0 {
                f64::INFINITY
            } else {
                (b / a).ln() / (s2 / s1).ln()
            }
        })
        .fold(f64::INFINITY, f64::min);
    let small_decay = epsilon > 1e-3;

    let radii: Vec<f64> = (0..=24).map(|k| 10f64.powf(1.0 + k as f64 / 8.0)).collect();
    let tail: Vec<(f64, f64, f64)> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&tau| {
            let mut sup = 0.0f64;
            let mut end = 0.0f64;
            for w in &dirs {
                for (i, &s) in radii.iter().enumerate() {
                    let xi: Vec<f64> = w.iter().map(|v| v * s).collect();
                    let r = group.rho(&xi, true);
                    let v = sym.eval(SymbolArg { xi: &xi, rho_star: r }).norm() * r.powf(tau);
                    sup = sup.max(v);
                    if i + 1 == radii.len() {
                        end = end.max(v);
                    }
                }
            }
            (tau, sup, end)
        })
        .collect();
    let rapid_decay = tail
        .iter()
        .all(|&(_, sup, end)| sup.is_finite() && (sup == 0.0 || end <= 0.5 * sup));

    let min_orbit_sup = dirs
        .iter()
        .map(|w| {
            let mut buf = vec![0.0; n];
            t_grid
                .iter()
                .map(|&t| sym.eval_dilated(group, t, w, 1.0, &mut buf).norm())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    let nondegenerate = min_orbit_sup > 1e-12;

    ClassBReport {
        value_at_origin,
        cancellation,
        epsilon,
        small_decay,
        tail,
        rapid_decay,
        min_orbit_sup,
        nondegenerate,
        pass: cancellation && small_decay && rapid_decay && nondegenerate,
    }
}

/// Physical-side kernel `eta_{b^j}` on a grid (used by synthesis).
pub fn eta_scaled(pou: &PartitionOfUnity, geom: &Geometry, j: i32) -> Result<GridFunction> {
    let e = pou.eta_hat.sample_dilated(geom, pou.b.powi(j))?;
    debug_assert_eq!(e.side(), Side::Frequency);
    Ok(e)
}
