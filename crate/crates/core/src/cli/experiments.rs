use std::f64::consts::PI;
use std::fmt::Display;
use std::io::Write;

use super::{Check, CliError, Experiment, ExperimentConfig, Outcome, Plot, Series};
use crate::bangbang::fixtures::{self, CIRCLE_RADIUS, LEVEL_SET_FIXTURES, STATIONARY_FIXTURES};
use crate::bangbang::{
    extract_zero_level_set, fonc_residual, growth_inequality_probe, quadratic_growth_scan, random_differences,
    ssc_verdict, ControlField, LevelSetMesh, ScanConfig, ScanReport, Sampler, StationaryPoint,
};
use crate::bessel::{
    bessel_kernel, dual_norm, kernel_half_nodes, wolff_functional, BesselSpec, DualNormOperator, EnergyEvaluator,
    RadiusRule,
};
use crate::error::Error;
use crate::field::{random_measures, AtomicMeasure, DomainMask, GridFunction, UniformGrid};
use crate::pde::{gradient_pairing, hessian_form, objective, solve_state, Forcing, Nonlinearity, PDEProblem};
use crate::rng::{seeded, Rng};
use crate::transport::{pushforward_dual_check, LipschitzMap};

/// Kernel closed-form tolerance and total-mass tolerance.
const KERNEL_MAX_ERR: f64 = 1e-3;
const KERNEL_MASS_ERR: f64 = 1e-6;
/// Largest increase along a kernel ray, relative to the peak.
const KERNEL_MONOTONICITY: f64 = 1e-3;
const ENERGY_REL_DIFF: f64 = 0.02;
const HOMOGENEITY_DRIFT: f64 = 1e-9;
/// Spread implied by the frozen Wolff ratio band `[2.5e4, 1e6]`.
const WOLFF_SPREAD: f64 = 40.0;
const CONTRACTION_SLACK: f64 = 1e-6;
const CONVERGENCE_BAND: (f64, f64) = (3.5, 4.5);
const FD_GRADIENT_REL: f64 = 1e-5;
const FD_HESSIAN_REL: f64 = 1e-4;
const FD_CASES: usize = 20;
const LEVEL_SET_REL: f64 = 0.01;
const FONC_TOL: f64 = 1e-12;
const FONC_SAMPLES: usize = 20;
const GROWTH_DUAL_SPREAD: f64 = 4.0;
const GROWTH_L2_DECAY: f64 = 4.0;
/// Scan ratios below this count as a failure of quadratic growth.
const SCAN_NEGATIVE_TOL: f64 = 1e-8;

fn config_err(field: &str) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

fn run_err(exp: Experiment) -> impl Fn(Error) -> CliError {
    move |e| CliError::Config(format!("{exp}: {e}"))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn positive(field: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{field}: {v} must be positive")))
    }
}

fn nonzero(field: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        Err(CliError::Config(format!("{field}: must be positive")))
    } else {
        Ok(v)
    }
}

/// Accumulates CSV text, metrics and checks for one run.
struct Builder {
    experiment: Experiment,
    report: Vec<u8>,
    metrics: Vec<(String, f64)>,
    checks: Vec<Check>,
    plot: Option<Plot>,
}

impl Builder {
    fn new(experiment: Experiment) -> Self {
        Self { experiment, report: Vec::new(), metrics: Vec::new(), checks: Vec::new(), plot: None }
    }

    fn row(&mut self, cells: &[&dyn Display]) {
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(self.report, "{}", line.join(","));
    }

    fn metric(&mut self, name: impl Into<String>, v: f64) {
        self.metrics.push((name.into(), v));
    }

    /// `value <= limit`, recorded under `name`.
    fn at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check::new(name, value <= limit, format!("{name} = {value:e} exceeds {limit:e}")));
    }

    fn at_least(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check::new(name, value >= limit, format!("{name} = {value:e} is below {limit:e}")));
    }

    fn holds(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check::new(name, pass, detail));
    }

    fn finish(self) -> Outcome {
        Outcome {
            experiment: self.experiment,
            report: self.report,
            plot: self.plot,
            metrics: self.metrics,
            checks: self.checks,
        }
    }
}

pub(super) fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    match cfg.experiment {
        Experiment::KernelCheck => kernel_check(cfg),
        Experiment::DualNorm => dual_norm_experiment(cfg, seed),
        Experiment::Wolff => wolff(cfg, seed),
        Experiment::Pushforward => pushforward(cfg, seed),
        Experiment::PdeVerify => pde_verify(cfg, seed),
        Experiment::StationaryFixture => stationary_fixture(cfg, seed),
        Experiment::GrowthProbe => growth_probe(cfg, seed),
        Experiment::Ssc => ssc(cfg),
        Experiment::GrowthScan => growth_scan(cfg, seed),
    }
}

fn spec_of(cfg: &ExperimentConfig, dim: usize, alpha: f64, p: f64) -> Result<BesselSpec, CliError> {
    let alpha = cfg.alpha.unwrap_or(alpha);
    let p = cfg.p.unwrap_or(p);
    let dim = cfg.dim.unwrap_or(dim);
    BesselSpec::new(alpha, p, dim).map_err(|e| match e {
        Error::BadAlpha(_) => CliError::Config(format!("alpha: {e}")),
        Error::BadIntegrability(_) => CliError::Config(format!("p: {e}")),
        _ => CliError::Config(format!("dim: {e}")),
    })
}

/// Lattice with the given spacing covering `[lo, hi]^d` plus the kernel
/// radius, as required by [`dual_norm`].
fn dual_grid(spec: &BesselSpec, spacing: f64, lo: f64, hi: f64) -> Result<UniformGrid, CliError> {
    let r = kernel_half_nodes(spec.alpha, spec.dim, spacing) as f64 * spacing + spacing;
    let d = spec.dim;
    UniformGrid::covering(d, &vec![lo - r; d], &vec![hi + r; d], spacing).map_err(config_err("spacing"))
}

fn family(cfg: &ExperimentConfig, dim: usize, count: usize, rng: &mut Rng) -> Result<Vec<AtomicMeasure>, CliError> {
    let count = nonzero("family.count", cfg.family.count.unwrap_or(count))?;
    let max_atoms = nonzero("family.max_atoms", cfg.family.max_atoms.unwrap_or(20))?;
    random_measures(dim, count, max_atoms, rng).map_err(config_err("family"))
}

fn kernel_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::KernelCheck;
    let spec = spec_of(cfg, 1, 2.0, 2.0)?;
    let h = positive("spacing", cfg.spacing.unwrap_or(0.01))?;
    let m = kernel_half_nodes(spec.alpha, spec.dim, h);
    let grid = UniformGrid::symmetric(spec.dim, m, h).map_err(config_err("spacing"))?;
    let k = bessel_kernel(&spec, &grid).map_err(run_err(exp))?;
    let closed_form = spec.dim == 1 && spec.alpha == 2.0;
    let exact = |x: f64| 0.5 * (-x.abs()).exp();

    let mut b = Builder::new(exp);
    b.row(&[&"x", &"value", &"exact"]);
    let ray = k.axis_ray(0);
    let mut max_err: f64 = 0.0;
    let mut sampled = Vec::with_capacity(ray.len());
    let mut reference = Vec::new();
    for (j, &v) in ray.iter().enumerate() {
        let x = j as f64 * h;
        sampled.push((x, v));
        if closed_form {
            let e = exact(x);
            max_err = max_err.max((v - e).abs());
            reference.push((x, e));
            b.row(&[&x, &v, &e]);
        } else {
            b.row(&[&x, &v, &""]);
        }
    }
    let mass_err = (k.discrete_integral() - 1.0).abs();
    let defect = k.monotonicity_defect();
    let (clamped, most_negative) = k.clamp_report();
    b.metric("peak", k.peak());
    b.metric("half_nodes", m as f64);
    b.metric("mass_err", mass_err);
    b.metric("monotonicity_defect", defect);
    b.metric("clamped", clamped as f64);
    b.metric("most_negative", most_negative);
    if closed_form {
        b.metric("max_err", max_err);
        b.at_most("max_err", max_err, KERNEL_MAX_ERR);
    }
    b.at_most("mass_err", mass_err, KERNEL_MASS_ERR);
    b.at_most("monotonicity_defect", defect, KERNEL_MONOTONICITY);

    let mut series = vec![Series { name: "sampled".into(), points: sampled }];
    if closed_form {
        series.push(Series { name: "exp(-|x|)/2".into(), points: reference });
    }
    b.plot = Some(Plot {
        title: format!("Bessel kernel, d = {}, alpha = {}", spec.dim, spec.alpha),
        x_label: "x".into(),
        y_label: "g_alpha".into(),
        log_x: false,
        log_y: false,
        series,
    });
    Ok(b.finish())
}

fn dual_norm_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::DualNorm;
    let spec = spec_of(cfg, 2, 0.75, 2.0)?;
    let h = positive("spacing", cfg.spacing.unwrap_or(1.0 / 32.0))?;
    let grid = dual_grid(&spec, h, 0.0, 1.0)?;
    let mut rng = seeded(seed);
    let fam = family(cfg, spec.dim, 50, &mut rng)?;
    let energy = if spec.p == 2.0 {
        Some(EnergyEvaluator::new(spec.alpha, spec.dim, h).map_err(run_err(exp))?)
    } else {
        None
    };

    let mut b = Builder::new(exp);
    b.row(&[&"sample_id", &"atoms", &"mass", &"dual_norm", &"energy_norm", &"rel_diff"]);
    let mut worst: f64 = 0.0;
    let mut norms = Vec::with_capacity(fam.len());
    for (id, mu) in fam.iter().enumerate() {
        let n = dual_norm(mu, &spec, &grid).map_err(run_err(exp))?;
        norms.push(n);
        match &energy {
            Some(ev) => {
                let e = ev.norm(mu).map_err(run_err(exp))?;
                let rel = if n > 0.0 { (n - e).abs() / n } else { 0.0 };
                worst = worst.max(rel);
                b.row(&[&id, &mu.len(), &mu.total_mass(), &n, &e, &rel]);
            }
            None => b.row(&[&id, &mu.len(), &mu.total_mass(), &n, &"", &""]),
        }
    }
    let mu = &fam[0];
    let doubled = dual_norm(&mu.scaled(2.0).map_err(run_err(exp))?, &spec, &grid).map_err(run_err(exp))?;
    let drift = if norms[0] > 0.0 { (doubled / (2.0 * norms[0]) - 1.0).abs() } else { 0.0 };
    b.metric("measures", fam.len() as f64);
    b.metric("min_norm", norms.iter().copied().fold(f64::INFINITY, f64::min));
    b.metric("max_norm", norms.iter().copied().fold(0.0, f64::max));
    b.metric("homogeneity_drift", drift);
    b.at_most("homogeneity_drift", drift, HOMOGENEITY_DRIFT);
    if energy.is_some() {
        b.metric("max_rel_diff", worst);
        b.at_most("max_rel_diff", worst, ENERGY_REL_DIFF);
    }
    Ok(b.finish())
}

fn wolff(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::Wolff;
    let spec = spec_of(cfg, 2, 1.0, 4.0 / 3.0)?;
    if !spec.wolff_valid || spec.is_critical() {
        return Err(CliError::Config(format!(
            "p: (alpha, p) = ({}, {}) needs alpha p < d = {}",
            spec.alpha, spec.p, spec.dim
        )));
    }
    let h = positive("spacing", cfg.spacing.unwrap_or(1.0 / 32.0))?;
    let grid = dual_grid(&spec, h, 0.0, 1.0)?;
    let rule = RadiusRule::default();
    let mut rng = seeded(seed);
    let fam = family(cfg, spec.dim, 50, &mut rng)?;
    let ratio_of = |mu: &AtomicMeasure| -> Result<(f64, f64, f64), CliError> {
        let w = wolff_functional(mu, &spec, &rule).map_err(run_err(exp))?;
        let n = dual_norm(mu, &spec, &grid).map_err(run_err(exp))?;
        Ok((w, n, w / n.powf(spec.p_conj)))
    };

    let mut b = Builder::new(exp);
    b.row(&[&"sample_id", &"atoms", &"mass", &"wolff", &"dual_norm", &"ratio"]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (id, mu) in fam.iter().enumerate() {
        let (w, n, r) = ratio_of(mu)?;
        if mu.total_mass() > 0.0 {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        b.row(&[&id, &mu.len(), &mu.total_mass(), &w, &n, &r]);
    }
    let base = ratio_of(&fam[0])?.2;
    let mut drift: f64 = 0.0;
    for t in [2.0, 5.0] {
        let r = ratio_of(&fam[0].scaled(t).map_err(run_err(exp))?)?.2;
        drift = drift.max((r / base - 1.0).abs());
    }
    b.metric("ratio_min", lo);
    b.metric("ratio_max", hi);
    b.metric("spread", hi / lo);
    b.metric("homogeneity_drift", drift);
    b.at_most("spread", hi / lo, WOLFF_SPREAD);
    b.at_most("homogeneity_drift", drift, HOMOGENEITY_DRIFT);
    Ok(b.finish())
}

fn pushforward(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::Pushforward;
    let spec = spec_of(cfg, 2, 1.0, 2.0)?;
    let h = positive("spacing", cfg.spacing.unwrap_or(1.0 / 16.0))?;
    let scales = cfg.family.scales.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.9]);
    let mut maps = Vec::new();
    for &s in &scales {
        let s = positive("family.scales", s)?;
        maps.push((format!("scale_{s}"), LipschitzMap::scaling(spec.dim, s).map_err(config_err("family.scales"))?));
    }
    if spec.dim >= 2 {
        maps.push(("project_axis0".into(), LipschitzMap::projection(spec.dim, &[0]).map_err(run_err(exp))?));
    }
    let reach = scales.iter().copied().fold(1.0, f64::max);
    let grid = dual_grid(&spec, h, 0.0, reach)?;
    let mut rng = seeded(seed);
    let fam = family(cfg, spec.dim, 20, &mut rng)?;

    let mut b = Builder::new(exp);
    b.row(&[&"map", &"declared_l", &"sample_id", &"lhs", &"rhs", &"ratio", &"energy_ratio"]);
    let mut violations = 0usize;
    let (mut max_contraction, mut max_grid, mut max_any) = (0.0f64, 0.0f64, 0.0f64);
    for (name, t) in &maps {
        for (id, mu) in fam.iter().enumerate() {
            let r = pushforward_dual_check(mu, t, &spec, &grid).map_err(run_err(exp))?;
            let energy: &dyn Display = match &r.energy {
                Some(e) => &e.ratio,
                None => &"",
            };
            b.row(&[name, &t.declared_l(), &id, &r.grid.lhs, &r.grid.rhs, &r.grid.ratio, energy]);
            max_any = max_any.max(r.ratio());
            if t.declared_l() <= 1.0 {
                max_contraction = max_contraction.max(r.ratio());
                max_grid = max_grid.max(r.grid.ratio);
                if r.ratio() > 1.0 + CONTRACTION_SLACK {
                    violations += 1;
                }
            }
        }
    }
    b.metric("maps", maps.len() as f64);
    b.metric("max_ratio", max_any);
    b.metric("max_contraction_ratio", max_contraction);
    b.metric("max_grid_ratio", max_grid);
    b.metric("contraction_violations", violations as f64);
    if spec.p == 2.0 {
        b.holds(
            "contraction_violations",
            violations == 0,
            format!("contraction_violations = {violations}; max ratio {max_contraction}"),
        );
    }
    Ok(b.finish())
}

/// `-Delta y + y = u` with `y = prod sin(pi x_k)` on `16 2^l` cells per axis;
/// returns `(cells, max nodal error)` per level.
fn convergence(dim: usize, levels: usize) -> Result<Vec<(usize, f64)>, Error> {
    let mut out = Vec::with_capacity(levels);
    for l in 0..levels {
        let cells = 16usize << l;
        let g = UniformGrid::unit_box(dim, cells + 1)?;
        let mask = DomainMask::box_interior(g)?;
        let prob = PDEProblem::new(mask.clone(), Nonlinearity::linear(1.0), GridFunction::zeros(g))?;
        let exact = GridFunction::from_fn(g, |x| (0..dim).map(|k| (PI * x[k]).sin()).product());
        let u = exact.scaled(dim as f64 * PI * PI + 1.0);
        let y = solve_state(&prob, &u)?.y;
        let err = mask.interior_nodes().map(|i| (y.values()[i] - exact.values()[i]).abs()).fold(0.0, f64::max);
        out.push((cells, err));
    }
    Ok(out)
}

fn random_field(g: UniformGrid, amp: f64, rng: &mut Rng) -> GridFunction {
    use rand::Rng as _;
    let v = (0..g.node_count()).map(|_| rng.gen_range(-amp..amp)).collect();
    GridFunction::new(g, v).expect("node count matches")
}

/// Largest relative mismatch of the gradient and Hessian forms against
/// central differences, for `a(y) = y^3` on random data in d = 1 and 2.
fn derivative_checks(cases: usize, rng: &mut Rng) -> Result<(f64, f64), Error> {
    let eps = 1e-4;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
    let (mut grad, mut hess) = (0.0f64, 0.0f64);
    for case in 0..cases {
        let dim = 1 + case % 2;
        let g = UniformGrid::unit_box(dim, if dim == 1 { 33 } else { 17 })?;
        let y_d = random_field(g, 0.5, rng);
        let prob = PDEProblem::new(DomainMask::box_interior(g)?, Nonlinearity::cubic(), y_d)?;
        let u = random_field(g, 1.0, rng);
        let h1 = random_field(g, 1.0, rng);
        let h2 = random_field(g, 1.0, rng);
        let shifted = |h: &GridFunction, t: f64| u.zip_with(h, |a, b| a + t * b);
        let fd = (objective(&prob, &shifted(&h1, eps)?)? - objective(&prob, &shifted(&h1, -eps)?)?) / (2.0 * eps);
        grad = grad.max(rel(gradient_pairing(&prob, &u, &h1)?, fd));
        let fd2 = (gradient_pairing(&prob, &shifted(&h2, eps)?, &h1)?
            - gradient_pairing(&prob, &shifted(&h2, -eps)?, &h1)?)
            / (2.0 * eps);
        hess = hess.max(rel(hessian_form(&prob, &u, Forcing::Density(&h1), Forcing::Density(&h2))?, fd2));
    }
    Ok((grad, hess))
}

fn pde_verify(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::PdeVerify;
    let levels = cfg.family.levels.unwrap_or(3);
    if levels < 2 {
        return Err(CliError::Config(format!("family.levels: {levels} levels give no factor")));
    }
    let dims: Vec<usize> = match cfg.dim {
        Some(d) if d <= 2 => vec![d],
        Some(d) => return Err(CliError::Config(format!("dim: {d}; the convergence study runs in d = 1, 2"))),
        None => vec![1, 2],
    };
    let mut b = Builder::new(exp);
    b.row(&[&"dim", &"level", &"nodes", &"h", &"max_err", &"factor"]);
    let mut series = Vec::new();
    let (mut fmin, mut fmax) = (f64::INFINITY, 0.0f64);
    for &d in &dims {
        let errs = convergence(d, levels).map_err(run_err(exp))?;
        let mut points = Vec::new();
        for (l, &(cells, err)) in errs.iter().enumerate() {
            let h = 1.0 / cells as f64;
            points.push((h, err));
            if l == 0 {
                b.row(&[&d, &l, &(cells + 1), &h, &err, &""]);
            } else {
                let f = errs[l - 1].1 / err;
                fmin = fmin.min(f);
                fmax = fmax.max(f);
                b.row(&[&d, &l, &(cells + 1), &h, &err, &f]);
            }
        }
        series.push(Series { name: format!("d = {d}"), points });
    }
    let mut rng = seeded(seed);
    let (grad, hess) = derivative_checks(FD_CASES, &mut rng).map_err(run_err(exp))?;
    b.metric("factor_min", fmin);
    b.metric("factor_max", fmax);
    b.metric("gradient_fd_rel", grad);
    b.metric("hessian_fd_rel", hess);
    b.at_least("factor_min", fmin, CONVERGENCE_BAND.0);
    b.at_most("factor_max", fmax, CONVERGENCE_BAND.1);
    b.at_most("gradient_fd_rel", grad, FD_GRADIENT_REL);
    b.at_most("hessian_fd_rel", hess, FD_HESSIAN_REL);
    b.plot = Some(Plot {
        title: "manufactured solution, -Delta y + y = u".into(),
        x_label: "h".into(),
        y_label: "max nodal error".into(),
        log_x: true,
        log_y: true,
        series,
    });
    Ok(b.finish())
}

fn fixture_name(cfg: &ExperimentConfig, allowed: &[&str]) -> Result<String, CliError> {
    let name = cfg.fixture.clone().unwrap_or_else(|| "manufactured".into());
    if !allowed.contains(&name.as_str()) {
        return Err(CliError::Config(format!("fixture: `{name}` is not one of {}", allowed.join(", "))));
    }
    Ok(name)
}

fn load_stationary(cfg: &ExperimentConfig) -> Result<StationaryPoint, CliError> {
    let name = fixture_name(cfg, &STATIONARY_FIXTURES)?;
    let n = cfg.grid.unwrap_or(128);
    fixtures::stationary_fixture(&name, n).map_err(|e| CliError::Config(format!("fixture: {name}: {e}")))
}

fn mesh_metrics(b: &mut Builder, mesh: &LevelSetMesh) {
    b.metric("facets", mesh.facets.len() as f64);
    b.metric("total_surface", mesh.total_surface);
    b.metric("min_gradient", mesh.min_gradient());
    b.metric("max_gradient", mesh.max_gradient());
    b.metric("kappa", mesh.kappa);
    b.metric("zero_nodes", mesh.zero_nodes as f64);
}

fn stationary_fixture(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::StationaryFixture;
    let mut b = Builder::new(exp);
    let name = cfg.fixture.clone().unwrap_or_else(|| "manufactured".into());
    if LEVEL_SET_FIXTURES.contains(&name.as_str()) {
        let n = cfg.grid.unwrap_or(257);
        let (phi, mask) =
            fixtures::level_set_fixture(&name, n).map_err(|e| CliError::Config(format!("fixture: {name}: {e}")))?;
        phi.write_csv(&mut b.report).map_err(io_err)?;
        let mesh = extract_zero_level_set(&phi, &mask, None);
        if name == "degenerate" {
            let raised = matches!(mesh, Err(Error::StructuralAssumptionViolated { .. }));
            b.metric("structural_violation_raised", if raised { 1.0 } else { 0.0 });
            b.holds("structural_violation_raised", raised, format!("level-set extraction returned {mesh:?}"));
            return Ok(b.finish());
        }
        let mesh = mesh.map_err(run_err(exp))?;
        mesh_metrics(&mut b, &mesh);
        let (surface, gradient) = match name.as_str() {
            "circle" => (2.0 * PI * CIRCLE_RADIUS, 2.0 * CIRCLE_RADIUS),
            _ => (1.0, 1.0),
        };
        let surface_err = (mesh.total_surface - surface).abs() / surface;
        let gradient_err =
            (mesh.min_gradient() - gradient).abs().max((mesh.max_gradient() - gradient).abs()) / gradient;
        b.metric("surface_rel_err", surface_err);
        b.metric("gradient_rel_err", gradient_err);
        b.at_most("surface_rel_err", surface_err, LEVEL_SET_REL);
        b.at_most("gradient_rel_err", gradient_err, LEVEL_SET_REL);
        return Ok(b.finish());
    }

    let sp = load_stationary(cfg)?;
    sp.phibar().write_csv(&mut b.report).map_err(io_err)?;
    b.metric("objective", sp.objective());
    b.metric("zero_count", sp.zero_count() as f64);
    b.metric("phibar_max", sp.phibar().max_abs());
    let mut rng = seeded(seed);
    let diffs = random_differences(&sp, FONC_SAMPLES, &mut rng).map_err(run_err(exp))?;
    let (mut min_signed, mut max_gap) = (f64::INFINITY, 0.0f64);
    for v in &diffs {
        let u = sp.ubar().field().zip_with(v, |a, b| a + b).map_err(run_err(exp))?;
        let u = ControlField::new(u).map_err(run_err(exp))?;
        let r = fonc_residual(sp.phibar(), sp.ubar(), &u).map_err(run_err(exp))?;
        min_signed = min_signed.min(r.signed);
        max_gap = max_gap.max((r.absolute - r.signed).abs());
    }
    b.metric("fonc_min_signed", min_signed);
    b.metric("fonc_max_gap", max_gap);
    b.at_least("fonc_min_signed", min_signed, -FONC_TOL);
    b.at_most("fonc_max_gap", max_gap, FONC_TOL);
    match extract_zero_level_set(sp.phibar(), sp.mask(), None) {
        Ok(mesh) => {
            mesh_metrics(&mut b, &mesh);
            b.holds("structural_assumption", true, String::new());
        }
        Err(e @ Error::StructuralAssumptionViolated { .. }) => {
            b.holds("structural_assumption", false, e.to_string());
        }
        Err(e) => return Err(run_err(exp)(e)),
    }
    Ok(b.finish())
}

fn dual_operator(cfg: &ExperimentConfig, spec: BesselSpec) -> Result<DualNormOperator, CliError> {
    let h = positive("spacing", cfg.spacing.unwrap_or(1.0 / 32.0))?;
    let cells = (1.0 / h).round();
    if cells < 2.0 || ((cells * h) - 1.0).abs() > 1e-9 {
        return Err(CliError::Config(format!("spacing: {h} must divide the unit square")));
    }
    let source = UniformGrid::unit_box(spec.dim, cells as usize + 1).map_err(config_err("spacing"))?;
    DualNormOperator::new(spec, source).map_err(config_err("spacing"))
}

fn growth_spec(cfg: &ExperimentConfig) -> Result<BesselSpec, CliError> {
    if let Some(d) = cfg.dim.filter(|&d| d != 2) {
        return Err(CliError::Config(format!("dim: {d}; the stationary fixtures are two-dimensional")));
    }
    let spec = spec_of(cfg, 2, 1.0, 4.0 / 3.0)?;
    spec.require_growth_valid().map_err(config_err("p"))?;
    Ok(spec)
}

/// `u - ubar` for `u` equal to `-ubar` on `{|phibar| <= w max |phibar|}`.
fn band_flip(sp: &StationaryPoint, w: f64) -> GridFunction {
    let cut = w * sp.phibar().max_abs();
    let mut v = GridFunction::zeros(*sp.mask().grid());
    for i in sp.mask().interior_nodes() {
        if sp.phibar().values()[i].abs() <= cut {
            v.values_mut()[i] = -2.0 * sp.ubar().field().values()[i];
        }
    }
    v
}

fn growth_probe(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::GrowthProbe;
    let spec = growth_spec(cfg)?;
    let sp = load_stationary(cfg)?;
    let op = dual_operator(cfg, spec)?;
    let widths = cfg.family.widths.clone().unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
    if widths.len() < 2 {
        return Err(CliError::Config("family.widths: need at least two band widths".into()));
    }
    for &w in &widths {
        positive("family.widths", w)?;
    }
    let count = cfg.family.count.unwrap_or(50);

    let mut b = Builder::new(exp);
    b.row(&[&"width", &"c_dual", &"c_l1", &"c_l2"]);
    let (mut dual_pts, mut l1_pts, mut l2_pts) = (Vec::new(), Vec::new(), Vec::new());
    for &w in &widths {
        let v = band_flip(&sp, w);
        if v.max_abs() == 0.0 {
            return Err(CliError::Config(format!("family.widths: band {w} contains no node")));
        }
        let r = growth_inequality_probe(sp.phibar(), sp.mask(), &op, &[v]).map_err(run_err(exp))?;
        b.row(&[&w, &r.c_dual, &r.c_l1, &r.c_l2]);
        b.metric(format!("c_dual_band_{w}"), r.c_dual);
        b.metric(format!("c_l2_band_{w}"), r.c_l2);
        dual_pts.push((w, r.c_dual));
        l1_pts.push((w, r.c_l1));
        l2_pts.push((w, r.c_l2));
    }
    let mut c_dual = dual_pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    if count > 0 {
        let mut rng = seeded(seed);
        let fam = random_differences(&sp, count, &mut rng).map_err(run_err(exp))?;
        let r = growth_inequality_probe(sp.phibar(), sp.mask(), &op, &fam).map_err(run_err(exp))?;
        b.metric("c_dual_random", r.c_dual);
        c_dual = c_dual.min(r.c_dual);
    }
    let band_max = dual_pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let band_min = dual_pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let spread = band_max / band_min;
    let decay = l2_pts[0].1 / l2_pts[l2_pts.len() - 1].1;
    b.metric("c_dual", c_dual);
    b.metric("dual_spread", spread);
    b.metric("l2_decay", decay);
    b.holds("c_dual", c_dual > 0.0, format!("c_dual = {c_dual:e} is not positive"));
    b.at_most("dual_spread", spread, GROWTH_DUAL_SPREAD);
    b.at_least("l2_decay", decay, GROWTH_L2_DECAY);
    b.plot = Some(Plot {
        title: format!("growth constants, alpha = {}, p = {}", spec.alpha, spec.p),
        x_label: "band width / max |phibar|".into(),
        y_label: "constant".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series { name: "dual".into(), points: dual_pts },
            Series { name: "L1".into(), points: l1_pts },
            Series { name: "L2".into(), points: l2_pts },
        ],
    });
    Ok(b.finish())
}

fn basis_error(e: Error) -> CliError {
    match e {
        Error::BasisTooLarge { .. } => CliError::Config(format!("family.basis_size: {e}")),
        _ => CliError::Config(format!("{}: {e}", Experiment::Ssc)),
    }
}

fn ssc(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let exp = Experiment::Ssc;
    let sp = load_stationary(cfg)?;
    let basis = cfg.family.basis_size.unwrap_or(64);
    let mesh = extract_zero_level_set(sp.phibar(), sp.mask(), None).map_err(config_err("fixture"))?;
    let v = ssc_verdict(&sp, &mesh, basis).map_err(basis_error)?;

    let mut b = Builder::new(exp);
    b.row(&[&"facet_id", &"x_0", &"x_1", &"weight", &"gradient"]);
    for (id, f) in mesh.facets.iter().enumerate() {
        b.row(&[&id, &f.centroid[0], &f.centroid[1], &f.weight, &f.gradient]);
    }
    mesh_metrics(&mut b, &mesh);
    b.metric("basis_size", v.basis_size as f64);
    b.metric("min_rayleigh", v.min_rayleigh);
    b.metric("min_surface_weight", v.min_surface_weight);
    b.metric("positive", if v.positive { 1.0 } else { 0.0 });
    b.holds("positive", v.positive, format!("min_rayleigh = {:e} is not positive", v.min_rayleigh));
    Ok(b.finish())
}

fn growth_scan(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let exp = Experiment::GrowthScan;
    let spec = growth_spec(cfg)?;
    let sp = load_stationary(cfg)?;
    let op = dual_operator(cfg, spec)?;
    let radii = cfg.family.radii.clone().unwrap_or_else(|| vec![0.05, 0.2]);
    if radii.is_empty() {
        return Err(CliError::Config("family.radii: need at least one radius".into()));
    }
    let samples = nonzero("family.samples", cfg.family.samples.unwrap_or(200))?;
    let basis = cfg.family.basis_size.unwrap_or(64);
    let mesh = extract_zero_level_set(sp.phibar(), sp.mask(), None).map_err(config_err("fixture"))?;
    let verdict = ssc_verdict(&sp, &mesh, basis).map_err(basis_error)?;

    let mut b = Builder::new(exp);
    let mut rng = seeded(seed);
    let mut all = Vec::new();
    let mut c_dual = f64::INFINITY;
    for (k, &radius) in radii.iter().enumerate() {
        let radius = positive("family.radii", radius)?;
        let sc = ScanConfig { n_samples: samples, radius, samplers: Sampler::ALL.to_vec() };
        let r = quadratic_growth_scan(&sp, &op, &sc, &mut rng).map_err(config_err("family.radii"))?;
        b.metric(format!("c_dual_radius_{radius}"), r.c_dual);
        b.metric(format!("c_l2_radius_{radius}"), r.c_l2);
        c_dual = c_dual.min(r.c_dual);
        all.extend(r.records.into_iter().map(|mut rec| {
            rec.sample_id += k * samples;
            rec
        }));
    }
    let min_by = |f: fn(&crate::bangbang::ScanRecord) -> f64| all.iter().map(f).fold(f64::INFINITY, f64::min);
    let report = ScanReport {
        c_dual,
        c_l1: min_by(|r| r.ratio_l1),
        c_l2: min_by(|r| r.ratio_l2),
        worst_sample: all.iter().find(|r| r.ratio_dual == c_dual).map_or(0, |r| r.sample_id),
        records: all,
    };
    report.write_csv(&mut b.report).map_err(io_err)?;
    b.metric("c_dual", report.c_dual);
    b.metric("c_l1", report.c_l1);
    b.metric("c_l2", report.c_l2);
    b.metric("worst_sample", report.worst_sample as f64);
    b.metric("min_rayleigh", verdict.min_rayleigh);
    b.metric("ssc_positive", if verdict.positive { 1.0 } else { 0.0 });
    if verdict.positive {
        b.holds("c_dual", c_dual > 0.0, format!("ssc holds but c_dual = {c_dual:e} is not positive"));
    } else {
        b.holds(
            "c_dual",
            c_dual < SCAN_NEGATIVE_TOL,
            format!("ssc fails (min_rayleigh = {:e}) but no sample ratio fell below {SCAN_NEGATIVE_TOL:e}; c_dual = {c_dual:e}", verdict.min_rayleigh),
        );
    }
    Ok(b.finish())
}
