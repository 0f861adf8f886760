//! Scale decompositions: coefficients `f * phi_{b^j}`, square functions, Calderon
//! normalisation, synthesis through a partition of unity and the truncated
//! reproducing kernel.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dilation::DilationGroup;
use crate::error::{Error, Result};
use crate::grid::{lp_norm_values, FrequencySymbol, Geometry, GridFunction, PeriodicGrid, Side, SymbolArg, SymbolMeta};
use crate::partition::{default_sphere_samples, sphere_directions, PartitionOfUnity};
use crate::util::composite_gauss;

pub const DEFAULT_SUBSTEPS: usize = 8;

/// Composite Gauss rule in `u = ln s` with panels of width at most 0.1.
fn log_scale_rule(u0: f64, u1: f64) -> (Vec<f64>, Vec<f64>) {
    let panels = (((u1 - u0) / 0.1).ceil() as usize).max(1);
    composite_gauss(u0, u1, panels, 8)
}

/// Scales `b^j`, `j_min <= j <= j_max`, each split into `substeps` log-uniform nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub b: f64,
    pub j_min: i32,
    pub j_max: i32,
    pub substeps: usize,
}

impl ScaleWindow {
    pub fn new(b: f64, j_min: i32, j_max: i32, substeps: usize) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidBase(b));
        }
        if j_min > j_max {
            return Err(Error::InvalidParameter(format!("empty scale window [{j_min}, {j_max}]")));
        }
        if substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be at least 1".into()));
        }
        Ok(Self {
            b,
            j_min,
            j_max,
            substeps,
        })
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn scale(&self, j: i32) -> f64 {
        self.b.powi(j)
    }

    /// Continuous-t nodes `b^{j + k/K}`.
    pub fn nodes(&self) -> Vec<f64> {
        crate::util::geometric_grid(self.b, self.j_min, self.j_max, self.substeps)
    }

    /// `ln(1/b) / K`, the `dt/t` weight of one node.
    pub fn node_weight(&self) -> f64 {
        (1.0 / self.b).ln() / self.substeps as f64
    }

    /// Same window with the indices shifted by `k`.
    pub fn shifted(&self, k: i32) -> Self {
        Self {
            j_min: self.j_min + k,
            j_max: self.j_max + k,
            ..*self
        }
    }

    pub fn with_substeps(&self, substeps: usize) -> Self {
        Self { substeps, ..*self }
    }
}

/// Scale range `[t_lo, t_hi]` outside which `|phi^(A_t^* omega)| < tol * peak` on the sphere.
pub fn symbol_scale_support(sym: &FrequencySymbol, group: &DilationGroup, tol: f64) -> (f64, f64) {
    if let Some((a1, a2)) = sym.meta().annulus {
        return (a1, a2);
    }
    let n = group.dim();
    let dirs = sphere_directions(n, default_sphere_samples(n).min(64));
    let ts: Vec<f64> = (-40 * 16..=40 * 16).map(|k| 2f64.powf(k as f64 / 16.0)).collect();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut buf = vec![0.0; n];
    for w in &dirs {
        let v: Vec<f64> = ts.iter().map(|&t| sym.eval_dilated(group, t, w, 1.0, &mut buf).norm()).collect();
        let peak = v.iter().copied().fold(0.0, f64::max);
        for (k, &x) in v.iter().enumerate() {
            if x >= tol * peak {
                lo = lo.min(ts[k.saturating_sub(1)]);
                hi = hi.max(ts[(k + 1).min(ts.len() - 1)]);
            }
        }
    }
    (lo, hi)
}

/// Window containing every scale at which `phi^(A_{b^j}^* xi)` is significant for a nonzero lattice frequency.
pub fn window_for(sym: &FrequencySymbol, geom: &Geometry, b: f64, substeps: usize, tol: f64) -> Result<ScaleWindow> {
    let (t_lo, t_hi) = symbol_scale_support(sym, geom.group(), tol);
    let (r_lo, r_hi) = geom.rho_star_range();
    let lb = b.ln();
    // b^j rho^* in [t_lo, t_hi]
    let j_min = ((t_hi / r_lo).ln() / lb).floor() as i32;
    let j_max = ((t_lo / r_hi).ln() / lb).ceil() as i32;
    ScaleWindow::new(b, j_min, j_max, substeps)
}

/// Per-scale convolutions `c_j = f * phi_{b^j}`.
#[derive(Clone, Debug)]
pub struct LPCoefficients {
    pub window: ScaleWindow,
    pub coeffs: Vec<GridFunction>,
    pub symbol_id: String,
    pub grid: PeriodicGrid,
}

impl LPCoefficients {
    pub fn get(&self, j: i32) -> Option<&GridFunction> {
        if j < self.window.j_min || j > self.window.j_max {
            return None;
        }
        self.coeffs.get((j - self.window.j_min) as usize)
    }
}

fn check_grid(f: &GridFunction, geom: &Geometry) -> Result<()> {
    if f.grid() != geom.grid() {
        return Err(Error::GridMismatch("function and geometry use different grids".into()));
    }
    Ok(())
}

/// `f^ . phi^(A_t^* .)` inverted to the physical side, for each `t`.
fn filtered(f_hat: &GridFunction, sym: &FrequencySymbol, geom: &Geometry, scales: &[f64]) -> Result<Vec<GridFunction>> {
    scales
        .par_iter()
        .map(|&t| sym.sample_dilated(geom, t)?.mul(f_hat)?.inverse_transform())
        .collect()
}

pub fn analyze(f: &GridFunction, sym: &FrequencySymbol, geom: &Geometry, window: ScaleWindow) -> Result<LPCoefficients> {
    f.ensure_side(Side::Physical)?;
    check_grid(f, geom)?;
    let f_hat = f.transform()?;
    let scales: Vec<f64> = window.indices().map(|j| window.scale(j)).collect();
    Ok(LPCoefficients {
        window,
        coeffs: filtered(&f_hat, sym, geom, &scales)?,
        symbol_id: sym.id().to_string(),
        grid: geom.grid().clone(),
    })
}

/// `(sum_j |c_j|^2)^{1/2}` pointwise.
pub fn g_discrete(coeffs: &LPCoefficients) -> GridFunction {
    let len = coeffs.grid.len();
    let mut acc = vec![0.0; len];
    for c in &coeffs.coeffs {
        for (a, z) in acc.iter_mut().zip(c.samples()) {
            *a += z.norm_sqr();
        }
    }
    GridFunction::from_real(&coeffs.grid, &acc.iter().map(|v| v.sqrt()).collect::<Vec<_>>())
        .expect("length matches grid")
}

/// `(int |f * phi_t|^2 dt/t)^{1/2}` by the log-uniform product rule on the window nodes.
pub fn g_continuous(f: &GridFunction, sym: &FrequencySymbol, geom: &Geometry, window: ScaleWindow) -> Result<GridFunction> {
    f.ensure_side(Side::Physical)?;
    check_grid(f, geom)?;
    let f_hat = f.transform()?;
    let nodes = window.nodes();
    let w = window.node_weight();
    // Chunked so the memory footprint stays at one chunk of filtered copies.
    let mut acc = vec![0.0; geom.grid().len()];
    for chunk in nodes.chunks(16) {
        for c in filtered(&f_hat, sym, geom, chunk)? {
            for (a, z) in acc.iter_mut().zip(c.samples()) {
                *a += z.norm_sqr();
            }
        }
    }
    GridFunction::from_real(geom.grid(), &acc.iter().map(|v| (w * v).sqrt()).collect::<Vec<_>>())
}

/// Measure on the scale axis used for Calderon normalisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalderonMeasure {
    /// `int_0^inf |psi^(A_t^* xi)|^2 dt/t`.
    LogUniform,
    /// `sum_{j in Z} |psi^(A_{b^j}^* xi)|^2`, matching the discrete square function.
    Counting,
}

/// Orbit-relative scale integral or sum of `|psi^|^2` through `xi`.
#[derive(Clone, Debug)]
pub struct CalderonIntegral {
    sym: FrequencySymbol,
    group: DilationGroup,
    measure: CalderonMeasure,
    b: f64,
    s_range: (f64, f64),
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CalderonIntegral {
    pub fn new(sym: &FrequencySymbol, group: &DilationGroup, b: f64, measure: CalderonMeasure) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidBase(b));
        }
        let s_range = sym.meta().annulus.unwrap_or_else(|| symbol_scale_support(sym, group, 1e-9));
        let (u0, u1) = (s_range.0.ln(), s_range.1.ln());
        let (nodes, weights) = log_scale_rule(u0, u1);
        Ok(Self {
            sym: sym.clone(),
            group: group.clone(),
            measure,
            b,
            s_range,
            nodes,
            weights,
        })
    }

    pub fn measure(&self) -> CalderonMeasure {
        self.measure
    }

    /// Value at `xi` with `rho^*(xi) = r`.
    pub fn eval(&self, xi: &[f64], r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let mut buf = [0.0; 8];
        let buf = &mut buf[..xi.len()];
        match self.measure {
            CalderonMeasure::LogUniform => self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&u, &w)| w * self.sym.eval_dilated(&self.group, u.exp() / r, xi, r, buf).norm_sqr())
                .sum(),
            CalderonMeasure::Counting => {
                let lb = self.b.ln();
                let a = ((self.s_range.1 / r).ln() / lb).floor() as i32;
                let z = ((self.s_range.0 / r).ln() / lb).ceil() as i32;
                (a..=z)
                    .map(|j| self.sym.eval_dilated(&self.group, self.b.powi(j), xi, r, buf).norm_sqr())
                    .sum()
            }
        }
    }

    pub fn eval_at(&self, xi: &[f64]) -> f64 {
        self.eval(xi, self.group.rho(xi, true))
    }
}

pub const DEGENERATE_ORBIT: f64 = 1e-14;

/// Divides `sym` by the square root of its scale integral so that the integral becomes 1.
///
/// Every orbit through the probe shell `1 <= rho^* < 1/b` must carry integral at least `1e-14`.
pub fn unit_calderon(
    sym: &FrequencySymbol,
    group: &DilationGroup,
    window: &ScaleWindow,
    measure: CalderonMeasure,
) -> Result<FrequencySymbol> {
    let integral = Arc::new(CalderonIntegral::new(sym, group, window.b, measure)?);
    let n = group.dim();
    let dirs = sphere_directions(n, default_sphere_samples(n));
    let shell: Vec<f64> = (0..16).map(|k| window.b.powf(-(k as f64) / 16.0)).collect();
    let mut xi = vec![0.0; n];
    for w in &dirs {
        for &s in &shell {
            group.apply_into(s, w, true, &mut xi);
            let v = integral.eval(&xi, s);
            if v < DEGENERATE_ORBIT {
                return Err(Error::DegenerateOrbit { value: v });
            }
        }
    }
    let base = sym.clone();
    let meta = SymbolMeta {
        decay: sym.meta().decay,
        annulus: sym.meta().annulus,
        cancellation: sym.meta().cancellation,
    };
    let id = format!("unit[{}]", sym.id());
    Ok(FrequencySymbol::custom(id, meta, move |arg: SymbolArg<'_>| {
        let v = base.eval(arg);
        if v.norm() == 0.0 {
            return v;
        }
        let i = integral.eval(arg.xi, arg.rho_star);
        if i > 0.0 {
            v / i.sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// `sum_j c_j * eta_{b^j}`.
pub fn synthesize(coeffs: &LPCoefficients, pou: &PartitionOfUnity, geom: &Geometry) -> Result<GridFunction> {
    if coeffs.symbol_id != pou.phi().id() {
        return Err(Error::ProvenanceMismatch(format!(
            "coefficients use symbol {}, partition uses {}",
            coeffs.symbol_id,
            pou.phi().id()
        )));
    }
    if coeffs.window.b != pou.b {
        return Err(Error::ProvenanceMismatch(format!(
            "coefficients use b = {}, partition uses b = {}",
            coeffs.window.b, pou.b
        )));
    }
    if &coeffs.grid != geom.grid() {
        return Err(Error::GridMismatch("coefficients and geometry use different grids".into()));
    }
    let parts: Vec<GridFunction> = coeffs
        .window
        .indices()
        .zip(&coeffs.coeffs)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(j, c)| pou.eta_hat.sample_dilated(geom, pou.b.powi(*j))?.mul(&c.transform()?))
        .collect::<Result<_>>()?;
    let mut acc = GridFunction::zeros(geom.grid(), Side::Frequency);
    for p in &parts {
        acc = acc.add(p)?;
    }
    acc.inverse_transform()
}

/// Multiplier `int_eps^{1/eps} |psi^(A_t^* xi)|^2 dt/t` at `xi` with `rho^*(xi) = r`.
pub fn truncated_kernel(psi: &FrequencySymbol, group: &DilationGroup, eps: f64, xi: &[f64], r: f64) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    // Substituting s = t r: the integrand only depends on A_s^* of the unit-sphere point.
    let (mut s0, mut s1) = (eps * r, r / eps);
    if let Some((a1, a2)) = psi.meta().annulus {
        s0 = s0.max(a1);
        s1 = s1.min(a2);
    }
    if !(s1 > s0) {
        return 0.0;
    }
    let (u0, u1) = (s0.ln(), s1.ln());
    let (nodes, weights) = log_scale_rule(u0, u1);
    let mut buf = vec![0.0; xi.len()];
    nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| w * psi.eval_dilated(group, u.exp() / r, xi, r, &mut buf).norm_sqr())
        .sum()
}

/// `f` filtered by the truncated reproducing kernel.
pub fn reproduce_eps(f: &GridFunction, psi: &FrequencySymbol, geom: &Geometry, eps: f64) -> Result<GridFunction> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    check_grid(f, geom)?;
    let grid = geom.grid();
    let n = grid.dim();
    let rs = geom.rho_star();
    let multiplier: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if grid.is_nyquist(idx) {
                return Complex64::new(0.0, 0.0);
            }
            let mut xi = [0.0; 3];
            grid.frequency(idx, &mut xi[..n]);
            Complex64::new(truncated_kernel(psi, geom.group(), eps, &xi[..n], rs[idx]), 0.0)
        })
        .collect();
    let m = GridFunction::new(grid.clone(), Side::Frequency, multiplier)?;
    f.to_frequency().mul(&m)?.inverse_transform()
}

/// Power weight `(reg + rho(x))^a` on the lattice.
pub fn power_weight(geom: &Geometry, exponent: f64, regularizer: f64) -> Vec<f64> {
    geom.rho().iter().map(|r| (regularizer + r).powf(exponent)).collect()
}

/// Weighted `L^p` norm of the discrete square function of `f` for `sym`.
pub fn g_norm(f: &GridFunction, sym: &FrequencySymbol, geom: &Geometry, window: ScaleWindow, p: f64, weight: Option<&[f64]>) -> Result<f64> {
    let g = g_discrete(&analyze(f, sym, geom, window)?);
    lp_norm_values(geom.grid(), &g.re(), p, weight)
}

/// Ratios `||g_psi f||_{p,w} / ||g_phi f||_{p,w}` over a family; reported, never asserted.
pub fn weighted_ratio_report(
    family: &[GridFunction],
    psi: &FrequencySymbol,
    phi: &FrequencySymbol,
    geom: &Geometry,
    window_psi: ScaleWindow,
    window_phi: ScaleWindow,
    p: f64,
    weight: Option<&[f64]>,
) -> Result<Vec<f64>> {
    family
        .iter()
        .map(|f| {
            let a = g_norm(f, psi, geom, window_psi, p, weight)?;
            let b = g_norm(f, phi, geom, window_phi, p, weight)?;
            Ok(a / b)
        })
        .collect()
}

/// Random function with frequency support in `lo <= rho^*(xi) <= hi`, real-valued, unit `L^2` norm.
pub fn band_limited_random(geom: &Geometry, lo: f64, hi: f64, seed: u64) -> GridFunction {
    use rand::{Rng, SeedableRng};
    let grid = geom.grid();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rs = geom.rho_star();
    let mut hat = vec![Complex64::new(0.0, 0.0); grid.len()];
    for idx in 0..grid.len() {
        let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if grid.is_nyquist(idx) || !(rs[idx] >= lo && rs[idx] <= hi) {
            continue;
        }
        hat[idx] = amp;
    }
    // Hermitian symmetrisation makes the physical function real.
    let sym: Vec<Complex64> = (0..grid.len())
        .map(|idx| 0.5 * (hat[idx] + hat[grid.negated(idx)].conj()))
        .collect();
    let f = GridFunction::new(grid.clone(), Side::Frequency, sym)
        .expect("length matches grid")
        .inverse_transform()
        .expect("frequency side");
    let mut re = f.re();
    let norm = lp_norm_values(grid, &re.iter().map(|v| v.abs()).collect::<Vec<_>>(), 2.0, None).expect("p > 0");
    if norm > 0.0 {
        re.iter_mut().for_each(|v| *v /= norm);
    }
    GridFunction::from_real(grid, &re).expect("length matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{convolve, lp_norm};
    use crate::partition::partition_for;
    use approx::assert_relative_eq;

    fn diag12() -> DilationGroup {
        DilationGroup::diagonal(&[1.0, 2.0]).unwrap()
    }

    fn geom(n_samples: usize, group: &DilationGroup) -> Geometry {
        Geometry::new(&PeriodicGrid::new(2, 16.0, n_samples).unwrap(), group).unwrap()
    }

    #[test]
    fn window_validation_and_nodes() {
        assert!(ScaleWindow::new(1.0, 0, 1, 1).is_err());
        assert!(ScaleWindow::new(0.5, 2, 1, 1).is_err());
        assert!(ScaleWindow::new(0.5, 0, 1, 0).is_err());
        let w = ScaleWindow::new(0.5, -1, 1, 4).unwrap();
        assert_eq!(w.nodes().len(), 12);
        assert_relative_eq!(w.node_weight(), 2f64.ln() / 4.0);
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let group = diag12();
        let g = geom(32, &group);
        let w = ScaleWindow::new(0.5, -3, 3, 2).unwrap();
        let f = GridFunction::zeros(g.grid(), Side::Physical);
        let c = analyze(&f, &FrequencySymbol::heat(), &g, w).unwrap();
        assert!(c.coeffs.iter().all(|c| c.max_abs() == 0.0));
        assert_eq!(g_discrete(&c).max_abs(), 0.0);
        assert_eq!(g_continuous(&f, &FrequencySymbol::heat(), &g, w).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn single_scale_matches_convolution_with_kernel() {
        let group = diag12();
        let g = geom(16, &group);
        let f = band_limited_random(&g, 0.0, 10.0, 4);
        let sym = FrequencySymbol::heat();
        let w = ScaleWindow::new(0.5, 1, 1, 1).unwrap();
        let c = analyze(&f, &sym, &g, w).unwrap();
        let kernel = sym.sample_dilated(&g, 0.5).unwrap().inverse_transform().unwrap();
        let direct = convolve(&f, &kernel).unwrap();
        for (a, b) in c.coeffs[0].samples().iter().zip(direct.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_nonzero_scale_gives_modulus() {
        let group = diag12();
        let g = geom(32, &group);
        let f = band_limited_random(&g, 1.0, 2.0, 3);
        let w = ScaleWindow::new(0.5, 0, 0, 1).unwrap();
        let c = analyze(&f, &FrequencySymbol::annulus(), &g, w).unwrap();
        let gd = g_discrete(&c);
        for (a, b) in gd.samples().iter().zip(c.coeffs[0].samples()) {
            assert!((a.re - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn band_limited_annulus_sees_only_overlapping_scales() {
        let group = diag12();
        let g = geom(64, &group);
        let f = band_limited_random(&g, 1.0, 2.0, 5);
        let w = ScaleWindow::new(0.5, -4, 4, 1).unwrap();
        let c = analyze(&f, &FrequencySymbol::annulus(), &g, w).unwrap();
        for (j, cj) in w.indices().zip(&c.coeffs) {
            // b^j rho^* in (1, 2) with rho^* in [1, 2] forces j = 0.
            let expected_nonzero = j == 0;
            assert_eq!(cj.max_abs() > 1e-14, expected_nonzero, "j = {j}");
        }
    }

    #[test]
    fn g_discrete_is_homogeneous() {
        let group = diag12();
        let g = geom(32, &group);
        let f = band_limited_random(&g, 0.5, 3.0, 8);
        let w = ScaleWindow::new(0.5, -3, 3, 1).unwrap();
        let a = g_discrete(&analyze(&f, &FrequencySymbol::heat(), &g, w).unwrap());
        let f2 = f.scaled(Complex64::new(-2.5, 0.0));
        let b = g_discrete(&analyze(&f2, &FrequencySymbol::heat(), &g, w).unwrap());
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((2.5 * x.re - y.re).abs() <= 1e-13 * (1.0 + y.re));
        }
    }

    #[test]
    fn heat_calderon_integral_is_one_eighth() {
        let group = diag12();
        let ci = CalderonIntegral::new(&FrequencySymbol::heat(), &group, 0.5, CalderonMeasure::LogUniform).unwrap();
        for xi in [[0.3, 0.1], [2.0, -5.0]] {
            assert_relative_eq!(ci.eval_at(&xi), 0.125, max_relative = 1e-9);
        }
    }

    #[test]
    fn poisson_g_function_is_an_isometry_up_to_a_half() {
        let group = DilationGroup::identity(2);
        let g = geom(64, &group);
        let sym = FrequencySymbol::poisson();
        let w = window_for(&sym, &g, 0.5, 8, 1e-7).unwrap();
        for seed in 0..3 {
            let f = band_limited_random(&g, 0.2, 1.5, seed);
            let gc = g_continuous(&f, &sym, &g, w).unwrap();
            let ratio = lp_norm(&gc, 2.0, None).unwrap() / lp_norm(&f, 2.0, None).unwrap();
            assert!((ratio - 0.5).abs() < 0.005, "{ratio}");
        }
    }

    #[test]
    fn unit_calderon_counting_gives_plancherel() {
        let group = diag12();
        let g = geom(64, &group);
        let b = 0.75;
        let w = ScaleWindow::new(b, -6, 6, 1).unwrap();
        let psi = unit_calderon(&FrequencySymbol::annulus(), &group, &w, CalderonMeasure::Counting).unwrap();
        let f = band_limited_random(&g, 0.8, 2.5, 1);
        let gd = g_discrete(&analyze(&f, &psi, &g, w).unwrap());
        let ratio = lp_norm(&gd, 2.0, None).unwrap() / lp_norm(&f, 2.0, None).unwrap();
        assert!((ratio - 1.0).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn unit_calderon_orbit_invariance_and_fixed_point() {
        let group = diag12();
        let w = ScaleWindow::new(0.5, -6, 6, 8).unwrap();
        let psi = unit_calderon(&FrequencySymbol::annulus(), &group, &w, CalderonMeasure::LogUniform).unwrap();
        let raw = CalderonIntegral::new(&FrequencySymbol::annulus(), &group, 0.5, CalderonMeasure::LogUniform).unwrap();
        let norm = CalderonIntegral::new(&psi, &group, 0.5, CalderonMeasure::LogUniform).unwrap();
        for xi in [[0.3, 0.9], [-1.0, 2.0], [4.0, 0.1]] {
            for s in [0.3, 1.7, 5.0] {
                let moved = group.apply(s, &xi, true);
                assert_relative_eq!(raw.eval_at(&moved), raw.eval_at(&xi), max_relative = 1e-8);
            }
            assert!((norm.eval_at(&xi) - 1.0).abs() < 1e-8);
        }
        // With b = 1/2 the counting sum misses orbits through rho^* = 2^k.
        assert!(matches!(
            unit_calderon(&FrequencySymbol::annulus(), &group, &w, CalderonMeasure::Counting),
            Err(Error::DegenerateOrbit { .. })
        ));
    }

    #[test]
    fn synthesis_reconstructs_band_limited_input() {
        let group = diag12();
        let g = geom(64, &group);
        let pou = partition_for(&FrequencySymbol::heat(), &group, None).unwrap();
        let (j_min, j_max) = pou.lattice_window(&g);
        let w = ScaleWindow::new(pou.b, j_min, j_max, 1).unwrap();
        let f = band_limited_random(&g, 0.3, 2.5, 2);
        let c = analyze(&f, pou.phi(), &g, w).unwrap();
        let back = synthesize(&c, &pou, &g).unwrap();
        let err = lp_norm(&back.sub(&f).unwrap(), 2.0, None).unwrap() / lp_norm(&f, 2.0, None).unwrap();
        assert!(err < 1e-6, "{err}");

        let other = analyze(&f, &FrequencySymbol::annulus(), &g, w).unwrap();
        assert!(matches!(synthesize(&other, &pou, &g), Err(Error::ProvenanceMismatch(_))));
    }

    #[test]
    fn truncated_window_misses_lowpass_part() {
        let group = diag12();
        let g = geom(64, &group);
        let pou = partition_for(&FrequencySymbol::heat(), &group, None).unwrap();
        let (j_min, j_max) = pou.lattice_window(&g);
        // Dropping the coarse scales j < 0 leaves exactly the zeta-filtered part.
        let w = ScaleWindow::new(pou.b, 0.max(j_min), j_max, 1).unwrap();
        let f = band_limited_random(&g, 0.0, 3.0, 6);
        let back = synthesize(&analyze(&f, pou.phi(), &g, w).unwrap(), &pou, &g).unwrap();
        let low = f.to_frequency().mul(&pou.zeta_hat.sample(&g).unwrap()).unwrap().inverse_transform().unwrap();
        let resid = f.sub(&back).unwrap();
        let err = lp_norm(&resid.sub(&low).unwrap(), 2.0, None).unwrap();
        assert!(err < 1e-8 * lp_norm(&f, 2.0, None).unwrap(), "{err}");
    }

    #[test]
    fn reproduce_eps_examples() {
        let group = diag12();
        let g = geom(32, &group);
        let w = ScaleWindow::new(0.5, -6, 6, 8).unwrap();
        let psi = unit_calderon(&FrequencySymbol::annulus(), &group, &w, CalderonMeasure::LogUniform).unwrap();
        let f = band_limited_random(&g, 0.5, 2.7, 9);
        let out = reproduce_eps(&f, &psi, &g, 0.05).unwrap();
        let err = lp_norm(&out.sub(&f).unwrap(), 2.0, None).unwrap();
        assert!(err < 1e-6, "{err}");
        let mut xi = [0.0; 2];
        for idx in 0..g.grid().len() {
            g.grid().frequency(idx, &mut xi);
            let v = truncated_kernel(&psi, &group, 0.9, &xi, g.rho_star()[idx]);
            assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
        let z = GridFunction::zeros(g.grid(), Side::Physical);
        assert_eq!(reproduce_eps(&z, &psi, &g, 0.5).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn refining_substeps_converges() {
        let group = diag12();
        let g = geom(32, &group);
        let sym = FrequencySymbol::heat();
        let w = window_for(&sym, &g, 0.5, 8, 1e-6).unwrap();
        let f = band_limited_random(&g, 0.3, 2.0, 3);
        let a = g_continuous(&f, &sym, &g, w).unwrap();
        let b = g_continuous(&f, &sym, &g, w.with_substeps(16)).unwrap();
        let rel = lp_norm(&a.sub(&b).unwrap(), 2.0, None).unwrap() / lp_norm(&b, 2.0, None).unwrap();
        assert!(rel < 0.01, "{rel}");
    }
}
