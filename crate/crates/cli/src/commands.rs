use plp_core::hardy::{atom_gbound_experiment, default_family, default_g_window, dilation_test_radius, equivalence_experiment};
use plp_core::lp_transform::{analyze, band_limited_random, g_continuous, g_discrete, g_norm, power_weight, synthesize, window_for, DEFAULT_SUBSTEPS};
use plp_core::maximal::{ap_constant, grand_max, hl_max, peetre_max, radii_grid};
use plp_core::partition::{
    check_class_b, default_sphere_samples, default_t_grid, lowpass_constant, partition_for, transition_constant,
    DEFAULT_CONSTANT_SCALES,
};
use plp_core::{lp_norm, DilationGroup, FrequencySymbol, Geometry, GridFunction, PartitionOfUnity, PeriodicGrid, ScaleWindow, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{num, Out, Provenance};
use crate::CliError;

pub const COMMANDS: [&str; 10] = [
    "validate",
    "rho-table",
    "partition",
    "transform",
    "reconstruct",
    "gfunc",
    "maximal",
    "atoms",
    "equivalence",
    "constants",
];

pub const NORM_TOLERANCE: f64 = 1e-9;
pub const PARTITION_TOLERANCE: f64 = 1e-8;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-6;
pub const TRANSLATION_TOLERANCE: f64 = 1e-10;
pub const DILATION_TOLERANCE: f64 = 0.01;
pub const DRIFT_TOLERANCE: f64 = 0.05;
pub const DEFAULT_ATOMS: usize = 50;

/// Numerical checks that did not meet their tolerance; reported with exit status 3.
#[derive(Default)]
pub struct Checks(pub Vec<String>);

impl Checks {
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.0.push(what.into());
        }
    }
}

pub struct Context {
    pub cfg: RunConfig,
    pub seed: u64,
    pub group: DilationGroup,
    pub geom: Geometry,
    pub sym: FrequencySymbol,
}

impl Context {
    pub fn new(cfg: RunConfig, seed: u64) -> Result<Self, CliError> {
        let group = DilationGroup::from_row_major(cfg.grid.n, &cfg.matrix)?;
        let grid = PeriodicGrid::new(cfg.grid.n, cfg.grid.side_length, cfg.grid.samples)?;
        let geom = Geometry::new(&grid, &group)?;
        let sym = FrequencySymbol::builtin(&cfg.symbol.id, &cfg.symbol.params)?;
        Ok(Context { cfg, seed, group, geom, sym })
    }

    fn grid_tag(&self) -> String {
        let g = &self.cfg.grid;
        format!("n={};L={};N={}", g.n, num(g.side_length), g.samples)
    }

    fn provenance(&self, b: Option<f64>, window: Option<ScaleWindow>) -> Provenance {
        Provenance {
            symbol: self.sym.id().to_string(),
            b: b.or(self.cfg.b).map(num).unwrap_or_else(|| "auto".into()),
            window: match window {
                Some(w) => format!("{}..{}/{}", w.j_min, w.j_max, w.substeps),
                None => match self.cfg.window {
                    Some(w) => format!("{}..{}/{}", w.j_min, w.j_max, w.substeps.unwrap_or(1)),
                    None => "auto".into(),
                },
            },
            grid: self.grid_tag(),
        }
    }

    fn partition(&self) -> Result<PartitionOfUnity, CliError> {
        Ok(partition_for(&self.sym, &self.group, self.cfg.b)?)
    }

    fn p(&self) -> f64 {
        self.cfg.exponents.map(|e| e.p).unwrap_or(1.0)
    }

    fn substeps(&self) -> usize {
        self.cfg.window.and_then(|w| w.substeps).unwrap_or(DEFAULT_SUBSTEPS)
    }

    /// Reconstruction window: the configured one, or every active scale of the lattice.
    fn synthesis_window(&self, pou: &PartitionOfUnity) -> Result<ScaleWindow, CliError> {
        let (lo, hi) = match self.cfg.window {
            Some(w) => (w.j_min, w.j_max),
            None => pou.lattice_window(&self.geom),
        };
        Ok(ScaleWindow::new(pou.b, lo, hi, 1)?)
    }

    /// Square-function window: the configured one, or the scales where the symbol is visible on the lattice.
    fn g_window(&self, b: f64) -> Result<ScaleWindow, CliError> {
        match self.cfg.window {
            Some(w) => Ok(ScaleWindow::new(b, w.j_min, w.j_max, self.substeps())?),
            None => Ok(window_for(&self.sym, &self.geom, b, self.substeps(), 1e-8)?),
        }
    }

    /// Seeded real test function supported in `rho^* in [lo, hi]`.
    fn test_function(&self, lo: f64, hi: f64) -> GridFunction {
        band_limited_random(&self.geom, lo, hi, self.seed)
    }

    fn weight_samples(&self) -> Option<Vec<f64>> {
        self.cfg
            .weight
            .map(|w| power_weight(&self.geom, w.a, w.regularizer.unwrap_or(1.0)))
    }
}

pub fn run(name: &str, ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    match name {
        "validate" => validate(ctx, out),
        "rho-table" => rho_table(ctx, out),
        "partition" => partition(ctx, out),
        "transform" => transform(ctx, out),
        "reconstruct" => reconstruct(ctx, out),
        "gfunc" => gfunc(ctx, out),
        "maximal" => maximal(ctx, out),
        "atoms" => atoms(ctx, out),
        "equivalence" => equivalence(ctx, out),
        "constants" => constants(ctx, out),
        other => Err(CliError::validation(format!("unknown command {other}"))),
    }
}

fn validate(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let mut checks = Checks::default();
    let norms = ctx.group.check_norm_properties(10_000, ctx.seed);
    checks.require(norms.holds(NORM_TOLERANCE), "homogeneous norm properties exceed 1e-9");
    let class_b = check_class_b(&ctx.sym, &ctx.group, default_sphere_samples(ctx.group.dim()), &default_t_grid());
    let pou = if class_b.pass { Some(ctx.partition()) } else { None };
    out.json(
        "validate.json",
        &json!({
            "gamma": ctx.group.gamma(),
            "kappa": ctx.group.kappa(),
            "exp_method": ctx.group.method(),
            "norm_properties": norms,
            "class_b": class_b,
            "partition": pou.as_ref().map(|p| match p {
                Ok(p) => json!({"b": p.b, "b0": p.b0, "c": p.c, "psi_floor": p.psi_floor}),
                Err(e) => json!({"error": e.message}),
            }),
            "provenance": ctx.provenance(None, None),
        }),
    )?;
    if !class_b.pass {
        return Err(CliError::validation(format!("symbol {} fails the admissibility probe", ctx.sym.id())));
    }
    if let Some(Err(e)) = pou {
        return Err(e);
    }
    Ok(checks)
}

fn rho_table(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let n = ctx.group.dim();
    let points = match &ctx.cfg.points {
        Some(p) => p.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let half = ctx.cfg.grid.side_length / 2.0;
            let mut pts: Vec<Vec<f64>> = (0..n)
                .map(|k| (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
                .collect();
            pts.extend((0..32).map(|_| (0..n).map(|_| rng.gen_range(-half..half)).collect::<Vec<f64>>()));
            pts
        }
    };
    let mut header: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    header.push("rho".into());
    header.push("rho_star".into());
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|x| {
            let mut r: Vec<String> = x.iter().map(|v| num(*v)).collect();
            r.push(num(ctx.group.rho(x, false)));
            r.push(num(ctx.group.rho(x, true)));
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("rho_table.csv", &header, &rows, &ctx.provenance(None, None))?;
    Ok(Checks::default())
}

fn partition(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let window = ctx.cfg.window.map(|w| (w.j_min, w.j_max));
    let rep = pou.residual_on(&ctx.geom, window);
    let mut checks = Checks::default();
    checks.require(
        rep.max_residual <= PARTITION_TOLERANCE,
        format!("partition residual {:e} exceeds {PARTITION_TOLERANCE:e}", rep.max_residual),
    );
    checks.require(
        rep.points == 0 || rep.psi_min >= 0.9 * pou.c,
        format!("min Psi {} below 0.9 c = {}", rep.psi_min, 0.9 * pou.c),
    );
    let sw = ScaleWindow::new(pou.b, rep.j_min, rep.j_max, 1)?;
    let grid = ctx.geom.grid();
    let n = grid.dim();
    let rs = ctx.geom.rho_star();
    let mut xi = [0.0; 3];
    let sums: Vec<f64> = (0..grid.len())
        .map(|idx| {
            grid.frequency(idx, &mut xi[..n]);
            pou.partial_sum(&xi[..n], rs[idx], rep.j_min, rep.j_max).re
        })
        .collect();
    let prov = ctx.provenance(Some(pou.b), Some(sw));
    out.gfa_with_sidecar(
        "partition_sum",
        &GridFunction::from_real(grid, &sums)?,
        false,
        &json!({"side": "frequency", "quantity": "sum_j phi^(A*_{b^j} xi) eta^(A*_{b^j} xi)", "provenance": prov}),
    )?;
    out.json(
        "partition.json",
        &json!({
            "b": pou.b,
            "b0": pou.b0,
            "c": pou.c,
            "r1": pou.r1,
            "r2": pou.r2,
            "theta_m": pou.theta_m,
            "theta_h": pou.theta_h,
            "psi_floor": pou.psi_floor,
            "cover": pou.cover,
            "residual": rep,
            "provenance": prov,
        }),
    )?;
    Ok(checks)
}

fn reconstruction_input(ctx: &Context, pou: &PartitionOfUnity, w: &ScaleWindow) -> Result<GridFunction, CliError> {
    let (lo, hi) = pou.covered_range(w.j_min, w.j_max);
    let (rmin, rmax) = ctx.geom.rho_star_range();
    let (lo, hi) = (lo.max(rmin), hi.min(rmax));
    if lo > hi {
        return Err(CliError::validation(format!(
            "window {}..{} covers no lattice frequency",
            w.j_min, w.j_max
        )));
    }
    Ok(ctx.test_function(lo, hi))
}

fn transform(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let w = ctx.synthesis_window(&pou)?;
    let f = reconstruction_input(ctx, &pou, &w)?;
    let coeffs = analyze(&f, pou.phi(), &ctx.geom, w)?;
    let prov = ctx.provenance(Some(pou.b), Some(w));
    out.gfa_with_sidecar("input", &f, false, &json!({"side": "physical", "seed": ctx.seed, "provenance": prov}))?;
    let mut energies = Vec::new();
    for (j, c) in w.indices().zip(&coeffs.coeffs) {
        out.gfa(&format!("coeff_{j}.gfa"), c, true)?;
        energies.push(json!({"j": j, "l2": lp_norm(c, 2.0, None)?}));
    }
    out.json(
        "transform.json",
        &json!({"window": w, "coefficients": energies, "side": "physical", "provenance": prov}),
    )?;
    Ok(Checks::default())
}

fn reconstruct(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let w = ctx.synthesis_window(&pou)?;
    let f = reconstruction_input(ctx, &pou, &w)?;
    let back = synthesize(&analyze(&f, pou.phi(), &ctx.geom, w)?, &pou, &ctx.geom)?;
    let err = lp_norm(&back.sub(&f)?, 2.0, None)? / lp_norm(&f, 2.0, None)?;
    let prov = ctx.provenance(Some(pou.b), Some(w));
    out.gfa("reconstructed.gfa", &back, false)?;
    out.json(
        "reconstruct.json",
        &json!({"relative_l2_error": err, "tolerance": RECONSTRUCTION_TOLERANCE, "window": w, "seed": ctx.seed, "provenance": prov}),
    )?;
    let mut checks = Checks::default();
    checks.require(err <= RECONSTRUCTION_TOLERANCE, format!("reconstruction error {err:e} exceeds 1e-6"));
    Ok(checks)
}

fn gfunc(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let w = ctx.g_window(pou.b)?;
    let (rmin, rmax) = ctx.geom.rho_star_range();
    let f = ctx.test_function(rmin, rmax);
    let gd = g_discrete(&analyze(&f, &ctx.sym, &ctx.geom, w.with_substeps(1))?).re();
    let gc = g_continuous(&f, &ctx.sym, &ctx.geom, w)?.re();
    let rows: Vec<Vec<String>> = gd
        .iter()
        .zip(&gc)
        .enumerate()
        .map(|(i, (d, c))| vec![i.to_string(), num(*d), num(*c)])
        .collect();
    let prov = ctx.provenance(Some(pou.b), Some(w));
    out.csv("gfunc.csv", &["point_id", "g_discrete", "g_continuous"], &rows, &prov)?;
    let p = ctx.p();
    let weight = ctx.weight_samples();
    out.json(
        "gfunc.json",
        &json!({
            "p": p,
            "f_lp": lp_norm(&f, p, weight.as_deref())?,
            "g_discrete_lp": g_norm(&f, &ctx.sym, &ctx.geom, w.with_substeps(1), p, weight.as_deref())?,
            "weighted": weight.is_some(),
            "seed": ctx.seed,
            "provenance": prov,
        }),
    )?;
    Ok(Checks::default())
}

fn maximal(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let (rmin, rmax) = ctx.geom.rho_star_range();
    let f = ctx.test_function(rmin, rmax.min(4.0 * rmin.max(0.25)));
    let gamma = ctx.group.gamma();
    let p = ctx.p();
    let big_n = gamma / p.min(1.0) + 1.0;
    let r = 1.0;
    let pm = peetre_max(&f, &ctx.geom, big_n, r)?;
    let h = ctx.geom.grid().spacing();
    // Radii double from the grid step up to half the largest rho-ball inside the box.
    let r_cap = dilation_test_radius(&ctx.geom, 1.0)?;
    let count = ((r_cap / h).log2().floor().max(0.0) as usize) + 1;
    let radii = radii_grid(h, 0.5, count);
    let hl = hl_max(&f, &ctx.geom, &radii)?;
    let mollifier = FrequencySymbol::bump();
    let s_window = default_g_window(&ctx.sym, &ctx.geom, 0.5)?;
    let s_grid = s_window.with_substeps(2).nodes();
    let gm = grand_max(&f, &mollifier, &ctx.geom, &s_grid)?;
    let prov = ctx.provenance(None, Some(s_window.with_substeps(2)));
    let mut checks = Checks::default();
    let dominated = f.samples().iter().zip(pm.samples()).all(|(a, b)| b.re >= a.norm() * (1.0 - 1e-12));
    checks.require(dominated, "Peetre maximal function below |F|");
    let ap = match ctx.cfg.weight {
        Some(w) => {
            let weight = Weight::power(&ctx.geom, w.a, w.regularizer.unwrap_or(1.0), p.max(1.0 + 1e-9))?;
            Some(ap_constant(&weight, weight.exponent, &ctx.geom, &radii)?)
        }
        None => None,
    };
    out.gfa("peetre.gfa", &pm, false)?;
    out.gfa("hardy_littlewood.gfa", &hl, false)?;
    out.gfa("grand.gfa", &gm, false)?;
    out.json(
        "maximal.json",
        &json!({
            "peetre": {"N": big_n, "R": r, "lp": lp_norm(&pm, p, None)?},
            "hardy_littlewood": {"radii": radii, "lp": lp_norm(&hl, p, None)?},
            "grand": {"mollifier": mollifier.id(), "s_count": s_grid.len(), "lp": lp_norm(&gm, p, None)?},
            "f_lp": lp_norm(&f, p, None)?,
            "ap_constant": ap,
            "p": p,
            "seed": ctx.seed,
            "provenance": prov,
        }),
    )?;
    Ok(checks)
}

fn atoms(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let count = ctx.cfg.count.unwrap_or(DEFAULT_ATOMS);
    let exps: Vec<f64> = match ctx.cfg.exponents {
        Some(e) => vec![e.p],
        None => vec![1.0, 2.0 / 3.0],
    };
    let window = default_g_window(&ctx.sym, &ctx.geom, pou.b)?;
    let prov = ctx.provenance(Some(pou.b), Some(window));
    let mut checks = Checks::default();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (k, &p) in exps.iter().enumerate() {
        let rep = atom_gbound_experiment(&ctx.sym, &ctx.geom, &pou, p, count, ctx.seed.wrapping_add(k as u64))?;
        checks.require(rep.all_valid, format!("an atom with p = {p} fails validation"));
        checks.require(
            rep.translation_deviation <= TRANSLATION_TOLERANCE,
            format!("translation changes ||g(a)||_p by {:e}", rep.translation_deviation),
        );
        if let Some(d) = rep.dilation_change {
            checks.require(d <= DILATION_TOLERANCE, format!("dilation changes the normalised norm by {d:e}"));
        }
        for (i, a) in rep.atoms.iter().enumerate() {
            let center: Vec<String> = a.center.iter().map(|v| num(*v)).collect();
            rows.push(vec![
                i.to_string(),
                num(p),
                a.seed.to_string(),
                center.join(";"),
                num(a.radius),
                a.moment_order.to_string(),
                num(a.g_norm),
                num(a.translated_g_norm),
                num(a.report.sup_ratio),
                num(a.report.moment_residual),
                num(a.report.outside_max),
                a.report.pass.to_string(),
            ]);
        }
        summaries.push(json!({
            "p": p,
            "count": rep.count,
            "max": rep.max,
            "min": rep.min,
            "coefficient_of_variation": rep.coefficient_of_variation,
            "all_valid": rep.all_valid,
            "translation_deviation": rep.translation_deviation,
            "dilation_change": rep.dilation_change,
        }));
    }
    out.csv(
        "atoms.csv",
        &[
            "atom_id",
            "p",
            "seed",
            "center",
            "radius",
            "moment_order",
            "g_norm",
            "translated_g_norm",
            "sup_ratio",
            "moment_residual",
            "outside_max",
            "pass",
        ],
        &rows,
        &prov,
    )?;
    out.json("atoms.json", &json!({"experiments": summaries, "seed": ctx.seed, "provenance": prov}))?;
    Ok(checks)
}

fn equivalence(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let p = ctx.p();
    let family = default_family(ctx.group.dim(), ctx.seed);
    let n0 = ctx.cfg.grid.samples;
    let rep = equivalence_experiment(
        &ctx.sym,
        &FrequencySymbol::bump(),
        &ctx.group,
        pou.b,
        p,
        &family,
        ctx.cfg.grid.side_length,
        &[n0, 2 * n0],
        2,
    )?;
    let prov = ctx.provenance(Some(pou.b), None);
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.function_id.to_string(),
                num(r.p),
                num(r.hp_quasinorm),
                num(r.g_norm),
                num(r.ratio),
                r.resolution.to_string(),
                r.kind.clone(),
            ]
        })
        .collect();
    out.csv(
        "equivalence.csv",
        &["function_id", "p", "hp_quasinorm", "g_norm", "ratio", "resolution", "kind"],
        &rows,
        &prov,
    )?;
    out.json(
        "equivalence.json",
        &json!({
            "c1": rep.c1,
            "c2": rep.c2,
            "spread": rep.spread,
            "max_drift": rep.max_drift,
            "drift": rep.drift,
            "excluded": rep.excluded,
            "family": family,
            "seed": ctx.seed,
            "provenance": prov,
        }),
    )?;
    let mut checks = Checks::default();
    checks.require(
        rep.c1 > 0.0 && rep.c1.is_finite() && rep.c2.is_finite(),
        format!("ratio bounds degenerate: c1 = {}, c2 = {}", rep.c1, rep.c2),
    );
    checks.require(
        rep.max_drift <= DRIFT_TOLERANCE,
        format!("resolution drift {} exceeds 5%", rep.max_drift),
    );
    Ok(checks)
}

fn constants(ctx: &Context, out: &mut Out) -> Result<Checks, CliError> {
    let pou = ctx.partition()?;
    let lw = ctx.cfg.weight.map(|w| w.a).unwrap_or(0.0);
    let j0 = pou.constants_start();
    let mut rows = Vec::new();
    let mut sup = 0.0f64;
    let mut finite = true;
    for j in j0..j0 + DEFAULT_CONSTANT_SCALES {
        let c = transition_constant(&ctx.sym, &pou, &ctx.geom, j, lw)?;
        let bj = pou.b.powi(-j);
        let prod = c * bj;
        finite &= prod.is_finite();
        sup = sup.max(prod);
        rows.push(vec![j.to_string(), num(c), num(bj), num(prod)]);
    }
    let window = ScaleWindow::new(pou.b, j0, j0 + DEFAULT_CONSTANT_SCALES - 1, 1)?;
    let prov = ctx.provenance(Some(pou.b), Some(window));
    out.csv("constants.csv", &["j", "C_psi_j_L", "b_pow_neg_j", "product"], &rows, &prov)?;
    let lowpass: Vec<f64> = (0..ctx.group.dim())
        .map(|k| lowpass_constant(&pou, &ctx.geom, k, lw))
        .collect::<Result<_, _>>()?;
    finite &= lowpass.iter().all(|v| v.is_finite());
    out.json(
        "constants.json",
        &json!({"L": lw, "sup_product": sup, "lowpass_D": lowpass, "provenance": prov}),
    )?;
    let mut checks = Checks::default();
    checks.require(finite, "a constant is not finite");
    Ok(checks)
}
