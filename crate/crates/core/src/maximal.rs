//! Maximal operators on the torus: Peetre, centred Hardy-Littlewood relative to
//! `rho`, and the grand maximal function; Muckenhoupt constants.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{lp_norm_values, FrequencySymbol, Geometry, GridFunction, PeriodicGrid, Side, SymbolArg};
use crate::util::ExactSum;

/// Lattice offsets sorted by increasing `rho`, with their signed coordinates.
#[derive(Clone, Debug)]
pub struct Offsets {
    shifts: Vec<[i64; 3]>,
    rho: Vec<f64>,
}

impl Offsets {
    pub fn new(geom: &Geometry) -> Self {
        let grid = geom.grid();
        let mut order: Vec<usize> = (0..grid.len()).collect();
        let rho = geom.rho();
        order.sort_by(|&a, &b| rho[a].total_cmp(&rho[b]).then(a.cmp(&b)));
        let n = grid.dim();
        let shifts = order
            .iter()
            .map(|&idx| {
                let mut m = [0i64; 3];
                grid.lattice_coords(idx, &mut m[..n]);
                m
            })
            .collect();
        Self {
            shifts,
            rho: order.iter().map(|&i| rho[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Number of offsets with `rho < r`.
    pub fn count_below(&self, r: f64) -> usize {
        self.rho.partition_point(|&v| v < r)
    }

    /// Smallest positive offset norm.
    pub fn min_positive(&self) -> f64 {
        self.rho.iter().copied().find(|&r| r > 0.0).unwrap_or(0.0)
    }
}

/// Flat index of `x - m` on the torus.
fn shifted_index(grid: &PeriodicGrid, x: &[usize], m: &[i64; 3]) -> usize {
    let mut idx = 0usize;
    for a in 0..grid.dim() {
        idx = idx * grid.samples_per_axis() + grid.wrap(x[a] as i64 - m[a]);
    }
    idx
}

/// `sup_y |F(x - y)| / (1 + R rho(y))^N` at the listed points.
pub fn peetre_max_at(values: &[f64], geom: &Geometry, offsets: &Offsets, big_n: f64, r: f64, points: &[usize]) -> Vec<f64> {
    let grid = geom.grid();
    let n = grid.dim();
    let top = values.iter().copied().fold(0.0, f64::max);
    points
        .par_iter()
        .map(|&x| {
            let mut multi = [0usize; 3];
            grid.multi_index(x, &mut multi[..n]);
            let mut best = 0.0f64;
            for (m, &rho) in offsets.shifts.iter().zip(&offsets.rho) {
                let w = (1.0 + r * rho).powf(-big_n);
                // Offsets are sorted by decreasing weight.
                if w * top <= best {
                    break;
                }
                let v = values[shifted_index(grid, &multi[..n], m)] * w;
                if v > best {
                    best = v;
                }
            }
            best
        })
        .collect()
}

/// Peetre maximal function `F**_{N,R}` of `|F|` on the whole grid.
pub fn peetre_max(f: &GridFunction, geom: &Geometry, big_n: f64, r: f64) -> Result<GridFunction> {
    f.ensure_side(Side::Physical)?;
    if !(big_n > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter(format!("N and R must be positive, got {big_n}, {r}")));
    }
    let offsets = Offsets::new(geom);
    let all: Vec<usize> = (0..geom.grid().len()).collect();
    GridFunction::from_real(geom.grid(), &peetre_max_at(&f.abs(), geom, &offsets, big_n, r, &all))
}

/// Centred maximal averages `max_r avg_{rho(x-y) < r} v(y)` at the listed points.
///
/// Sums are correctly rounded, so the result is independent of summation order.
pub fn hl_max_at(values: &[f64], geom: &Geometry, offsets: &Offsets, radii: &[f64], points: &[usize]) -> Vec<f64> {
    let grid = geom.grid();
    let n = grid.dim();
    let mut sorted: Vec<f64> = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let counts: Vec<usize> = sorted.iter().map(|&r| offsets.count_below(r)).collect();
    let reach = counts.last().copied().unwrap_or(0);
    points
        .par_iter()
        .map(|&x| {
            let mut multi = [0usize; 3];
            grid.multi_index(x, &mut multi[..n]);
            let mut acc = ExactSum::new();
            let mut best = 0.0f64;
            let mut next = 0;
            for k in 0..=reach {
                while next < counts.len() && counts[next] == k {
                    if k > 0 {
                        best = best.max(acc.value() / k as f64);
                    }
                    next += 1;
                }
                if k == reach {
                    break;
                }
                acc.add(values[shifted_index(grid, &multi[..n], &offsets.shifts[k])]);
            }
            best
        })
        .collect()
}

/// Centred Hardy-Littlewood maximal function of `|f|` over `rho`-balls with the given radii.
pub fn hl_max(f: &GridFunction, geom: &Geometry, radii: &[f64]) -> Result<GridFunction> {
    f.ensure_side(Side::Physical)?;
    if radii.is_empty() {
        return Err(Error::EmptyRadii);
    }
    let offsets = Offsets::new(geom);
    let all: Vec<usize> = (0..geom.grid().len()).collect();
    GridFunction::from_real(geom.grid(), &hl_max_at(&f.abs(), geom, &offsets, radii, &all))
}

/// Geometric radii `b^{-k}` times `r0`, `k = 0..count`.
pub fn radii_grid(r0: f64, b: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| r0 * b.powi(-(k as i32))).collect()
}

pub const MASS_TOLERANCE: f64 = 1e-8;

/// `sup_s |Phi_s * f|` over `s_grid`.
pub fn grand_max(f: &GridFunction, phi: &FrequencySymbol, geom: &Geometry, s_grid: &[f64]) -> Result<GridFunction> {
    f.ensure_side(Side::Physical)?;
    let zero = vec![0.0; geom.grid().dim()];
    let mass = phi.eval(SymbolArg { xi: &zero, rho_star: 0.0 }).re;
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Mass(mass));
    }
    if s_grid.is_empty() {
        return Err(Error::EmptyRadii);
    }
    let f_hat = f.transform()?;
    let mut best = vec![0.0f64; geom.grid().len()];
    for chunk in s_grid.chunks(8) {
        let parts: Vec<Vec<f64>> = chunk
            .par_iter()
            .map(|&s| Ok(phi.sample_dilated(geom, s)?.mul(&f_hat)?.inverse_transform()?.abs()))
            .collect::<Result<_>>()?;
        for p in parts {
            for (b, v) in best.iter_mut().zip(p) {
                *b = b.max(v);
            }
        }
    }
    GridFunction::from_real(geom.grid(), &best)
}

/// `||f^*||_p`.
pub fn hp_quasinorm(f: &GridFunction, phi: &FrequencySymbol, geom: &Geometry, p: f64, s_grid: &[f64]) -> Result<f64> {
    let g = grand_max(f, phi, geom, s_grid)?;
    lp_norm_values(geom.grid(), &g.re(), p, None)
}

/// Positive weight samples on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct Weight {
    pub samples: Vec<f64>,
    pub exponent: f64,
    pub measured: Option<f64>,
}

impl Weight {
    pub fn new(samples: Vec<f64>, exponent: f64) -> Result<Self> {
        if let Some(v) = samples.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("weights must be positive and finite, got {v}")));
        }
        Ok(Self {
            samples,
            exponent,
            measured: None,
        })
    }

    /// `(reg + rho(x))^a`.
    pub fn power(geom: &Geometry, a: f64, regularizer: f64, exponent: f64) -> Result<Self> {
        Self::new(geom.rho().iter().map(|r| (regularizer + r).powf(a)).collect(), exponent)
    }
}

/// `max_B (avg_B w)(avg_B w^{-1/(p-1)})^{p-1}` over centred balls at every lattice point.
/// A lower bound for the true constant.
pub fn ap_constant(w: &Weight, p: f64, geom: &Geometry, radii: &[f64]) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::NonAdmissibleExponent(p));
    }
    if radii.is_empty() {
        return Err(Error::EmptyRadii);
    }
    if w.samples.len() != geom.grid().len() {
        return Err(Error::GridMismatch("weight length does not match grid".into()));
    }
    let grid = geom.grid();
    let n = grid.dim();
    let offsets = Offsets::new(geom);
    let dual: Vec<f64> = w.samples.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect();
    let mut counts: Vec<usize> = radii.iter().map(|&r| offsets.count_below(r)).filter(|&c| c > 0).collect();
    counts.sort_unstable();
    counts.dedup();
    let reach = counts.last().copied().unwrap_or(0);
    let best = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let mut multi = [0usize; 3];
            grid.multi_index(x, &mut multi[..n]);
            let (mut sw, mut sd) = (0.0, 0.0);
            let mut best = 0.0f64;
            let mut next = 0;
            for k in 0..reach {
                let y = shifted_index(grid, &multi[..n], &offsets.shifts[k]);
                sw += w.samples[y];
                sd += dual[y];
                if counts[next] == k + 1 {
                    let c = (k + 1) as f64;
                    best = best.max((sw / c) * (sd / c).powf(p - 1.0));
                    next += 1;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Spectral gradient magnitude `|grad F|`.
pub fn gradient_magnitude(f: &GridFunction, geom: &Geometry) -> Result<Vec<f64>> {
    let f_hat = f.to_frequency();
    let n = geom.grid().dim();
    let mut acc = vec![0.0; geom.grid().len()];
    for k in 0..n {
        let d = FrequencySymbol::coordinate_derivative(k).sample(geom)?;
        let dk = d.mul(&f_hat)?.inverse_transform()?;
        for (a, z) in acc.iter_mut().zip(dk.samples()) {
            *a += z.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Worst ratio `F**_{N,1} / [delta^{-N} M(|F|^r)^{1/r} + delta |grad F|**_{N,1}]` over `deltas` and `points`.
#[derive(Clone, Debug, Serialize)]
pub struct PeetreDiagnostic {
    pub r: f64,
    pub big_n: f64,
    pub per_delta: Vec<(f64, f64)>,
    pub max_ratio: f64,
}

pub fn peetre_gradient_diagnostic(
    f: &GridFunction,
    geom: &Geometry,
    r: f64,
    deltas: &[f64],
    radii: &[f64],
    points: &[usize],
) -> Result<PeetreDiagnostic> {
    let gamma = geom.group().gamma();
    let big_n = gamma / r;
    let offsets = Offsets::new(geom);
    let abs = f.abs();
    let lhs = peetre_max_at(&abs, geom, &offsets, big_n, 1.0, points);
    let powered: Vec<f64> = abs.iter().map(|v| v.powf(r)).collect();
    let m = hl_max_at(&powered, geom, &offsets, radii, points);
    let grad = gradient_magnitude(f, geom)?;
    let gp = peetre_max_at(&grad, geom, &offsets, big_n, 1.0, points);
    let per_delta: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| {
            let worst = (0..points.len())
                .map(|i| lhs[i] / (d.powf(-big_n) * m[i].powf(1.0 / r) + d * gp[i]))
                .fold(0.0, f64::max);
            (d, worst)
        })
        .collect();
    let max_ratio = per_delta.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(PeetreDiagnostic {
        r,
        big_n,
        per_delta,
        max_ratio,
    })
}

/// Fitted constant `max_x [int (F_t**_{N,1/t})^q dt/t] / [int M(|F_t|^r)^{q/r} dt/t]`.
pub fn square_maximal_constant(
    f: &GridFunction,
    phi: &FrequencySymbol,
    geom: &Geometry,
    nodes: &[f64],
    q: f64,
    big_n: f64,
    radii: &[f64],
    points: &[usize],
) -> Result<f64> {
    let r = geom.group().gamma() / big_n;
    let offsets = Offsets::new(geom);
    let f_hat = f.to_frequency();
    let mut lhs = vec![0.0; points.len()];
    let mut rhs = vec![0.0; points.len()];
    for &t in nodes {
        let ft = phi.sample_dilated(geom, t)?.mul(&f_hat)?.inverse_transform()?.abs();
        let pm = peetre_max_at(&ft, geom, &offsets, big_n, 1.0 / t, points);
        let powered: Vec<f64> = ft.iter().map(|v| v.powf(r)).collect();
        let m = hl_max_at(&powered, geom, &offsets, radii, points);
        for i in 0..points.len() {
            lhs[i] += pm[i].powf(q);
            rhs[i] += m[i].powf(q / r);
        }
    }
    Ok(lhs
        .iter()
        .zip(&rhs)
        .filter(|(_, r)| **r > 0.0)
        .map(|(l, r)| l / r)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::DilationGroup;
    use crate::util::exact_sum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(samples: usize) -> Geometry {
        let grid = PeriodicGrid::new(2, 8.0, samples).unwrap();
        Geometry::new(&grid, &DilationGroup::diagonal(&[1.0, 2.0]).unwrap()).unwrap()
    }

    fn random(geom: &Geometry, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..geom.grid().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridFunction::from_real(geom.grid(), &v).unwrap()
    }

    fn hl_oracle(f: &[f64], geom: &Geometry, radii: &[f64]) -> Vec<f64> {
        let grid = geom.grid();
        let group = geom.group();
        let h = grid.spacing();
        let mut out = vec![0.0; grid.len()];
        let (mut a, mut b) = ([0usize; 2], [0usize; 2]);
        for x in 0..grid.len() {
            grid.multi_index(x, &mut a);
            for &r in radii {
                let mut vals = Vec::new();
                for y in 0..grid.len() {
                    grid.multi_index(y, &mut b);
                    let d = [
                        grid.signed(grid.wrap(a[0] as i64 - b[0] as i64)) as f64 * h,
                        grid.signed(grid.wrap(a[1] as i64 - b[1] as i64)) as f64 * h,
                    ];
                    if group.rho(&d, false) < r {
                        vals.push(f[y].abs());
                    }
                }
                if !vals.is_empty() {
                    out[x] = f64::max(out[x], exact_sum(vals.iter().copied()) / vals.len() as f64);
                }
            }
        }
        out
    }

    #[test]
    fn hl_max_matches_double_loop_oracle() {
        let geom = setup(16);
        let f = random(&geom, 1);
        let radii = [0.3, 0.7, 1.2, 2.0];
        let fast = hl_max(&f, &geom, &radii).unwrap();
        let slow = hl_oracle(&f.re(), &geom, &radii);
        assert_eq!(fast.re(), slow);
        assert!(matches!(hl_max(&f, &geom, &[]), Err(Error::EmptyRadii)));
    }

    #[test]
    fn constants_are_fixed_points() {
        let geom = setup(16);
        let c = GridFunction::from_real_fn(geom.grid(), |_| 2.5);
        for v in hl_max(&c, &geom, &[0.5, 1.0]).unwrap().re() {
            assert!((v - 2.5).abs() < 1e-15);
        }
        for v in peetre_max(&c, &geom, 3.0, 1.0).unwrap().re() {
            assert_eq!(v, 2.5);
        }
        let s = [0.25, 0.5, 1.0, 2.0];
        for phi in [FrequencySymbol::gaussian(0.35), FrequencySymbol::bump()] {
            for v in grand_max(&c, &phi, &geom, &s).unwrap().re() {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn peetre_spike_closed_form_and_monotonicity() {
        let geom = setup(16);
        let mut spike = GridFunction::zeros(geom.grid(), Side::Physical);
        spike.samples_mut()[0] = 1.0.into();
        let out = peetre_max(&spike, &geom, 2.0, 1.5).unwrap();
        for (v, r) in out.re().iter().zip(geom.rho()) {
            assert!((v - (1.0 + 1.5 * r).powf(-2.0)).abs() < 1e-15);
        }
        let f = random(&geom, 4);
        let a = peetre_max(&f, &geom, 1.0, 1.0).unwrap().re();
        let b = peetre_max(&f, &geom, 2.0, 1.0).unwrap().re();
        for ((x, y), z) in a.iter().zip(&b).zip(f.abs()) {
            assert!(y <= x && *y >= z);
        }
    }

    #[test]
    fn mass_is_checked() {
        let geom = setup(16);
        let f = random(&geom, 2);
        assert!(matches!(
            grand_max(&f, &FrequencySymbol::constant(2.0), &geom, &[1.0]),
            Err(Error::Mass(_))
        ));
        assert_eq!(grand_max(&GridFunction::zeros(geom.grid(), Side::Physical), &FrequencySymbol::bump(), &geom, &[1.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ap_constant_examples() {
        let geom = setup(32);
        let radii = radii_grid(0.2, 0.5, 5);
        let one = Weight::new(vec![1.0; geom.grid().len()], 2.0).unwrap();
        assert!((ap_constant(&one, 2.0, &geom, &radii).unwrap() - 1.0).abs() < 1e-14);
        let w = Weight::power(&geom, 0.3, 1e-3, 2.0).unwrap();
        let a = ap_constant(&w, 2.0, &geom, &radii).unwrap();
        assert!(a >= 1.0 && a.is_finite());
        let w2 = Weight::new(w.samples.iter().map(|v| 2.0 * v).collect(), 2.0).unwrap();
        assert!((ap_constant(&w2, 2.0, &geom, &radii).unwrap() - a).abs() < 1e-12 * a);
        assert!(matches!(ap_constant(&w, 1.0, &geom, &radii), Err(Error::NonAdmissibleExponent(_))));
        assert!(Weight::new(vec![0.0], 2.0).is_err());
    }

    #[test]
    fn hp_quasinorm_basic_invariances() {
        let geom = setup(32);
        let f = crate::lp_transform::band_limited_random(&geom, 0.5, 2.0, 3);
        let phi = FrequencySymbol::gaussian(0.35);
        let s = radii_grid(0.25, 0.5, 6);
        let a = hp_quasinorm(&f, &phi, &geom, 1.0, &s).unwrap();
        let b = hp_quasinorm(&f.translated(&[3, -2]).unwrap(), &phi, &geom, 1.0, &s).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let c = hp_quasinorm(&f.scaled((-3.0).into()), &phi, &geom, 1.0, &s).unwrap();
        assert!((c - 3.0 * a).abs() < 1e-12 * c);
    }
}
