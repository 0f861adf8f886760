//! Frequency-side kernels. A symbol is evaluated from a dual point `xi` together
//! with `rho^*(xi)`, which lets dilated evaluation reuse `rho^*(A_t^* xi) = t rho^*(xi)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Geometry, GridFunction, PeriodicGrid, Side};
use crate::dilation::{euclid, DilationGroup};
use crate::error::{Error, Result};
use crate::util::{composite_gauss, flat_exp, smoothstep};

/// Evaluation point of a symbol.
#[derive(Clone, Copy, Debug)]
pub struct SymbolArg<'a> {
    pub xi: &'a [f64],
    pub rho_star: f64,
}

/// User-defined symbol rules.
pub trait SymbolRule: Send + Sync {
    fn eval(&self, arg: SymbolArg<'_>) -> Complex64;
}

impl<F> SymbolRule for F
where
    F: Fn(SymbolArg<'_>) -> Complex64 + Send + Sync,
{
    fn eval(&self, arg: SymbolArg<'_>) -> Complex64 {
        self(arg)
    }
}

/// Declared properties of a symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolMeta {
    /// Exponent in `|phi^(xi)| <= C |xi|^eps` near 0; infinite when the symbol vanishes near 0.
    pub decay: Option<f64>,
    /// `(a1, a2)` with the symbol zero whenever `rho^*(xi)` lies outside `[a1, a2]`.
    pub annulus: Option<(f64, f64)>,
    /// Symbol vanishes at the origin.
    pub cancellation: bool,
}

#[derive(Clone)]
enum Rule {
    Poisson,
    Heat,
    IsoHeat,
    Annulus,
    Plateau,
    Constant(f64),
    Gaussian(f64),
    Bump,
    Dynamic(Arc<dyn SymbolRule>),
}

/// A named frequency-side kernel `phi^`.
#[derive(Clone)]
pub struct FrequencySymbol {
    id: String,
    rule: Rule,
    meta: SymbolMeta,
}

impl fmt::Debug for FrequencySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencySymbol")
            .field("id", &self.id)
            .field("meta", &self.meta)
            .finish()
    }
}

/// Radius of the Gaussian mollifier used by default.
pub const GAUSSIAN_SIGMA: f64 = 0.35;

/// Identifiers accepted by [`FrequencySymbol::builtin`].
pub const BUILTIN_IDS: &[&str] = &[
    "poisson", "heat", "iso-heat", "annulus", "plateau", "constant", "gaussian", "bump",
];

impl FrequencySymbol {
    /// `-2 pi |xi| e^{-2 pi |xi|}`, the transform of the radial derivative of the Poisson kernel.
    pub fn poisson() -> Self {
        Self::with_rule("poisson", Rule::Poisson, Some(1.0), None, true)
    }

    /// `rho^*(xi)^2 e^{-rho^*(xi)^2}`.
    pub fn heat() -> Self {
        Self::with_rule("heat", Rule::Heat, None, None, true)
    }

    /// `|xi|^2 e^{-|xi|^2}`.
    pub fn iso_heat() -> Self {
        Self::with_rule("iso-heat", Rule::IsoHeat, Some(2.0), None, true)
    }

    /// Smooth bump supported in `1 <= rho^* <= 2`, peak 1 at `rho^* = 3/2`.
    pub fn annulus() -> Self {
        Self::with_rule("annulus", Rule::Annulus, Some(f64::INFINITY), Some((1.0, 2.0)), true)
    }

    /// Equal to 1 on `1 <= rho^* <= 2`, supported in `1/2 <= rho^* <= 4`.
    pub fn plateau() -> Self {
        Self::with_rule("plateau", Rule::Plateau, Some(f64::INFINITY), Some((0.5, 4.0)), true)
    }

    pub fn constant(value: f64) -> Self {
        Self::with_rule("constant", Rule::Constant(value), Some(0.0), None, value == 0.0)
    }

    /// `e^{-pi sigma^2 |xi|^2}`, transform of a unit-mass Gaussian of width `sigma`.
    pub fn gaussian(sigma: f64) -> Self {
        Self::with_rule("gaussian", Rule::Gaussian(sigma), Some(0.0), None, false)
    }

    /// Transform of the unit-mass radial bump `C exp(-1/(1-|x|^2))` on `|x| < 1`.
    /// Only available for `n <= 3`; evaluation uses a cached table of the Hankel transform.
    pub fn bump() -> Self {
        Self::with_rule("bump", Rule::Bump, Some(0.0), None, false)
    }

    /// Looks up a built-in by id. `params` may carry `value` (constant) or `sigma` (gaussian).
    pub fn builtin(id: &str, params: &serde_json::Map<String, serde_json::Value>) -> Result<Self> {
        let num = |key: &str, default: f64| -> Result<f64> {
            match params.get(key) {
                None => Ok(default),
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| Error::InvalidParameter(format!("symbol parameter {key} must be a number"))),
            }
        };
        let allowed: &[&str] = match id {
            "constant" => &["value"],
            "gaussian" => &["sigma"],
            _ => &[],
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown parameter {k} for symbol {id}")));
        }
        Ok(match id {
            "poisson" => Self::poisson(),
            "heat" => Self::heat(),
            "iso-heat" => Self::iso_heat(),
            "annulus" => Self::annulus(),
            "plateau" => Self::plateau(),
            "constant" => Self::constant(num("value", 1.0)?),
            "gaussian" => {
                let sigma = num("sigma", GAUSSIAN_SIGMA)?;
                if !(sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
                }
                Self::gaussian(sigma)
            }
            "bump" => Self::bump(),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown symbol {other}; expected one of {}",
                    BUILTIN_IDS.join(", ")
                )))
            }
        })
    }

    /// Wraps an arbitrary rule.
    pub fn custom<R: SymbolRule + 'static>(id: impl Into<String>, meta: SymbolMeta, rule: R) -> Self {
        Self {
            id: id.into(),
            rule: Rule::Dynamic(Arc::new(rule)),
            meta,
        }
    }

    fn with_rule(id: &str, rule: Rule, decay: Option<f64>, annulus: Option<(f64, f64)>, cancellation: bool) -> Self {
        Self {
            id: id.to_string(),
            rule,
            meta: SymbolMeta {
                decay,
                annulus,
                cancellation,
            },
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn meta(&self) -> &SymbolMeta {
        &self.meta
    }

    /// Same rule under a different id.
    pub fn renamed(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn eval(&self, arg: SymbolArg<'_>) -> Complex64 {
        let re = |v: f64| Complex64::new(v, 0.0);
        let r = arg.rho_star;
        match &self.rule {
            Rule::Poisson => {
                let a = 2.0 * PI * euclid(arg.xi);
                re(-a * (-a).exp())
            }
            Rule::Heat => re(r * r * (-r * r).exp()),
            Rule::IsoHeat => {
                let s: f64 = arg.xi.iter().map(|v| v * v).sum();
                re(s * (-s).exp())
            }
            Rule::Annulus => {
                if r <= 1.0 || r >= 2.0 {
                    re(0.0)
                } else {
                    let u = 2.0 * r - 3.0;
                    re((1.0 - 1.0 / (1.0 - u * u)).exp())
                }
            }
            Rule::Plateau => re(plateau(r)),
            Rule::Constant(c) => re(*c),
            Rule::Gaussian(sigma) => {
                let s: f64 = arg.xi.iter().map(|v| v * v).sum();
                re((-PI * sigma * sigma * s).exp())
            }
            Rule::Bump => re(bump_table(arg.xi.len()).eval(euclid(arg.xi))),
            Rule::Dynamic(rule) => rule.eval(arg),
        }
    }

    /// Evaluates at `xi`, computing `rho^*` from `group`.
    pub fn eval_at(&self, group: &DilationGroup, xi: &[f64]) -> Complex64 {
        self.eval(SymbolArg {
            xi,
            rho_star: group.rho(xi, true),
        })
    }

    /// `phi^(A_t^* xi)` given `rho^*(xi)`; `buf` must have the dimension of `xi`.
    pub fn eval_dilated(&self, group: &DilationGroup, t: f64, xi: &[f64], rho_star: f64, buf: &mut [f64]) -> Complex64 {
        group.apply_into(t, xi, true, buf);
        self.eval(SymbolArg {
            xi: buf,
            rho_star: t * rho_star,
        })
    }

    /// Samples `phi^(A_t^* xi)` on the dual lattice; Nyquist rows are zeroed.
    pub fn sample_dilated(&self, geom: &Geometry, t: f64) -> Result<GridFunction> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveScale(t));
        }
        let grid = geom.grid();
        let n = grid.dim();
        let group = geom.group();
        let rho_star = geom.rho_star();
        let samples: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                if grid.is_nyquist(idx) {
                    return Complex64::new(0.0, 0.0);
                }
                let mut xi = [0.0; 3];
                let mut buf = [0.0; 3];
                grid.frequency(idx, &mut xi[..n]);
                self.eval_dilated(group, t, &xi[..n], rho_star[idx], &mut buf[..n])
            })
            .collect();
        GridFunction::new(grid.clone(), Side::Frequency, samples)
    }

    pub fn sample(&self, geom: &Geometry) -> Result<GridFunction> {
        self.sample_dilated(geom, 1.0)
    }

    /// Pointwise product of two symbols.
    pub fn product(&self, other: &FrequencySymbol, id: impl Into<String>) -> FrequencySymbol {
        let (a, b) = (self.clone(), other.clone());
        let annulus = match (self.meta.annulus, other.meta.annulus) {
            (Some((a1, a2)), Some((b1, b2))) => Some((a1.max(b1), a2.min(b2))),
            (Some(x), None) | (None, Some(x)) => Some(x),
            _ => None,
        };
        let meta = SymbolMeta {
            decay: match (self.meta.decay, other.meta.decay) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            },
            annulus,
            cancellation: self.meta.cancellation || other.meta.cancellation,
        };
        Self::custom(id, meta, move |arg: SymbolArg<'_>| a.eval(arg) * b.eval(arg))
    }

    /// `2 pi i xi_k`, the symbol of `d/dx_k`.
    pub fn coordinate_derivative(k: usize) -> FrequencySymbol {
        let meta = SymbolMeta {
            decay: Some(1.0),
            annulus: None,
            cancellation: true,
        };
        Self::custom(format!("d{}", k + 1), meta, move |arg: SymbolArg<'_>| {
            Complex64::new(0.0, 2.0 * PI * arg.xi[k])
        })
    }
}

/// Convenience wrapper matching the module-level operation.
pub fn sample_dilated_symbol(sym: &FrequencySymbol, geom: &Geometry, t: f64) -> Result<GridFunction> {
    sym.sample_dilated(geom, t)
}

/// Samples on a bare grid, building the geometry on the fly.
pub fn sample_dilated_on_grid(
    sym: &FrequencySymbol,
    group: &DilationGroup,
    t: f64,
    grid: &PeriodicGrid,
) -> Result<GridFunction> {
    sym.sample_dilated(&Geometry::new(grid, group)?, t)
}

fn plateau(r: f64) -> f64 {
    if r <= 0.5 || r >= 4.0 {
        0.0
    } else if r < 1.0 {
        smoothstep(2.0 * (r - 0.5))
    } else if r <= 2.0 {
        1.0
    } else {
        smoothstep((4.0 - r) / 2.0)
    }
}

/// Unnormalized radial bump profile `exp(-1/(1-r^2))`.
pub fn bump_profile(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        flat_exp(1.0 - r * r)
    }
}

const BUMP_K_MAX: f64 = 48.0;
const BUMP_STEPS_PER_UNIT: usize = 256;

/// Tabulated radial transform of the unit-mass bump with cubic Hermite interpolation.
pub struct BumpTable {
    values: Vec<f64>,
    slopes: Vec<f64>,
    step: f64,
    mass: f64,
}

impl BumpTable {
    fn build(n: usize) -> Self {
        let (r, w) = composite_gauss(0.0, 1.0, 80, 12);
        // Radial measure: |S^{n-1}| r^{n-1} dr (n = 1 integrates over [-1, 1]).
        let shell = match n {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        };
        let weights: Vec<f64> = r
            .iter()
            .zip(&w)
            .map(|(&r, &w)| w * shell * r.powi(n as i32 - 1) * bump_profile(r))
            .collect();
        let mass: f64 = weights.iter().sum();
        let count = (BUMP_K_MAX * BUMP_STEPS_PER_UNIT as f64) as usize + 1;
        let step = 1.0 / BUMP_STEPS_PER_UNIT as f64;
        let rows: Vec<(f64, f64)> = (0..count)
            .into_par_iter()
            .map(|i| {
                let k = i as f64 * step;
                let mut v = 0.0;
                let mut d = 0.0;
                for (&ri, &wi) in r.iter().zip(&weights) {
                    let z = 2.0 * PI * k * ri;
                    let (f, df) = radial_kernel(n, z);
                    v += wi * f;
                    d += wi * df * 2.0 * PI * ri;
                }
                (v / mass, d / mass)
            })
            .collect();
        Self {
            values: rows.iter().map(|r| r.0).collect(),
            slopes: rows.iter().map(|r| r.1).collect(),
            step,
            mass,
        }
    }

    /// Integral of the unnormalized profile over the unit ball.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn eval(&self, k: f64) -> f64 {
        let pos = k / self.step;
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let s = pos - i as f64;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }
}

/// Angular average of `e^{-2 pi i <x, xi>}` over the sphere as a function of `z = 2 pi |xi| r`,
/// and its derivative in `z`.
fn radial_kernel(n: usize, z: f64) -> (f64, f64) {
    match n {
        1 => (z.cos(), -z.sin()),
        2 => (libm::j0(z), -libm::j1(z)),
        _ => {
            if z.abs() < 1e-3 {
                let z2 = z * z;
                (1.0 - z2 / 6.0 + z2 * z2 / 120.0, -z / 3.0 + z2 * z / 30.0)
            } else {
                let (s, c) = z.sin_cos();
                (s / z, (z * c - s) / (z * z))
            }
        }
    }
}

/// Lazily built bump transform table for dimension `n` (1..=3).
pub fn bump_table(n: usize) -> &'static BumpTable {
    static TABLES: [OnceLock<BumpTable>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let n = n.clamp(1, 3);
    TABLES[n - 1].get_or_init(|| BumpTable::build(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arg(xi: &[f64], r: f64) -> SymbolArg<'_> {
        SymbolArg { xi, rho_star: r }
    }

    #[test]
    fn poisson_value() {
        let q = FrequencySymbol::poisson().eval(arg(&[1.0, 0.0], 1.0));
        assert!((q.re - (-2.0 * PI * (-2.0 * PI).exp())).abs() < 1e-15);
        assert!((q.re + 0.011733).abs() < 1e-6);
        assert_eq!(FrequencySymbol::poisson().eval(arg(&[0.0, 0.0], 0.0)).re, 0.0);
    }

    #[test]
    fn annulus_support_and_peak() {
        let s = FrequencySymbol::annulus();
        assert_eq!(s.eval(arg(&[0.0], 1.0)).re, 0.0);
        assert_eq!(s.eval(arg(&[0.0], 2.0)).re, 0.0);
        assert!((s.eval(arg(&[0.0], 1.5)).re - 1.0).abs() < 1e-15);
        assert!(s.eval(arg(&[0.0], 1.01)).re > 0.0);
    }

    #[test]
    fn plateau_shape() {
        let s = FrequencySymbol::plateau();
        for r in [1.0, 1.3, 2.0] {
            assert_eq!(s.eval(arg(&[0.0], r)).re, 1.0);
        }
        for r in [0.0, 0.5, 4.0, 5.0] {
            assert_eq!(s.eval(arg(&[0.0], r)).re, 0.0);
        }
        assert!(s.eval(arg(&[0.0], 0.75)).re > 0.0 && s.eval(arg(&[0.0], 3.0)).re < 1.0);
    }

    #[test]
    fn builtin_lookup() {
        let empty = serde_json::Map::new();
        for id in BUILTIN_IDS {
            assert_eq!(FrequencySymbol::builtin(id, &empty).unwrap().id(), *id);
        }
        assert!(FrequencySymbol::builtin("nope", &empty).is_err());
        let mut bad = serde_json::Map::new();
        bad.insert("width".into(), 1.0.into());
        assert!(FrequencySymbol::builtin("heat", &bad).is_err());
    }

    #[test]
    fn cancellation_flags_hold_at_origin() {
        for id in BUILTIN_IDS {
            let s = FrequencySymbol::builtin(id, &serde_json::Map::new()).unwrap();
            if s.meta().cancellation {
                assert_eq!(s.eval(arg(&[0.0, 0.0], 0.0)).norm(), 0.0, "{id}");
            }
        }
    }

    #[test]
    fn dilation_at_identity_scale_is_plain_sampling() {
        let grid = PeriodicGrid::new(2, 8.0, 16).unwrap();
        let group = DilationGroup::diagonal(&[1.0, 2.0]).unwrap();
        let geom = Geometry::new(&grid, &group).unwrap();
        let s = FrequencySymbol::heat();
        let a = s.sample_dilated(&geom, 1.0).unwrap();
        let mut xi = [0.0; 2];
        for idx in 0..grid.len() {
            grid.frequency(idx, &mut xi);
            let expected = if grid.is_nyquist(idx) { 0.0 } else { s.eval_at(&group, &xi).re };
            assert!((a.samples()[idx].re - expected).abs() < 1e-14);
        }
        assert!(s.sample_dilated(&geom, 0.0).is_err());
    }

    #[test]
    fn isotropic_dilation_scales_argument() {
        let grid = PeriodicGrid::new(2, 8.0, 16).unwrap();
        let group = DilationGroup::identity(2);
        let geom = Geometry::new(&grid, &group).unwrap();
        let q = FrequencySymbol::poisson();
        let a = q.sample_dilated(&geom, 2.0).unwrap();
        let mut xi = [0.0; 2];
        for idx in 0..grid.len() {
            if grid.is_nyquist(idx) {
                continue;
            }
            grid.frequency(idx, &mut xi);
            let expected = q.eval(arg(&[2.0 * xi[0], 2.0 * xi[1]], 0.0)).re;
            assert!((a.samples()[idx].re - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_table_matches_fft_of_sampled_bump() {
        for n in [1usize, 2] {
            let grid = PeriodicGrid::new(n, 4.0, if n == 1 { 4096 } else { 256 }).unwrap();
            let mass = bump_table(n).mass();
            let f = GridFunction::from_real_fn(&grid, |x| bump_profile(euclid(x)) / mass);
            let fh = f.transform().unwrap();
            let mut xi = [0.0; 2];
            let mut worst = 0.0f64;
            for idx in 0..grid.len() {
                grid.frequency(idx, &mut xi[..n]);
                if euclid(&xi[..n]) > 20.0 {
                    continue;
                }
                let expected = bump_table(n).eval(euclid(&xi[..n]));
                worst = worst.max((fh.samples()[idx].re - expected).abs());
            }
            assert!(worst < 1e-7, "n = {n}: {worst}");
        }
        assert!((bump_table(3).eval(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_mollifier_has_unit_mass() {
        assert_eq!(FrequencySymbol::gaussian(GAUSSIAN_SIGMA).eval(arg(&[0.0, 0.0], 0.0)).re, 1.0);
    }
}
