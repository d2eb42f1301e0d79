//! Finite-difference solver for `-Delta y + a(y) = u` with homogeneous
//! Dirichlet data, its linearization, the adjoint state and the derivatives
//! of the tracking objective `F(u) = 1/2 ||S(u) - y_d||^2`.
//!
//! Unknowns live on the interior nodes of a [`DomainMask`]; all integrals
//! over Omega are `sum_i w_i f_i` over those nodes, so the discrete gradient
//! and Hessian below are the exact derivatives of the discrete objective.

use std::fmt;
use std::sync::Arc;

use crate::bessel::{BesselSpec, DualNormOperator};
use crate::error::{Error, Result};
use crate::field::{lp_norm, DomainMask, GridFunction, SignedMeasure, UniformGrid};
use crate::linalg::{SpdSolver, Stencil};

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `a` with its first two derivatives.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    /// `Some(c)` when `a(y) = c y`.
    affine: Option<f64>,
    a: Scalar,
    a_prime: Scalar,
    a_dprime: Scalar,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity").field("name", &self.name).finish()
    }
}

impl Nonlinearity {
    pub fn new(
        name: impl Into<String>,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a_dprime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            affine: None,
            a: Arc::new(a),
            a_prime: Arc::new(a_prime),
            a_dprime: Arc::new(a_dprime),
        }
    }

    pub fn zero() -> Self {
        Self { affine: Some(0.0), ..Self::new("zero", |_| 0.0, |_| 0.0, |_| 0.0) }
    }

    /// `a(y) = c y`, `c >= 0`.
    pub fn linear(c: f64) -> Self {
        Self { affine: Some(c), ..Self::new(format!("linear({c})"), move |y| c * y, move |_| c, |_| 0.0) }
    }

    pub fn is_affine(&self) -> bool {
        self.affine.is_some()
    }

    /// `a(y) = y^3`.
    pub fn cubic() -> Self {
        Self::new("cubic", |y| y * y * y, |y| 3.0 * y * y, |y| 6.0 * y)
    }

    /// `a(y) = k e tanh(y / e)`: increasing with `a''(y) y < 0`, so the
    /// curvature term `-a''(y) phi` can dominate near small states.
    pub fn saturating(k: f64, e: f64) -> Self {
        Self::new(
            format!("saturating({k},{e})"),
            move |y| k * e * (y / e).tanh(),
            move |y| {
                let s = 1.0 / (y / e).cosh();
                k * s * s
            },
            move |y| {
                let s = 1.0 / (y / e).cosh();
                -2.0 * k / e * s * s * (y / e).tanh()
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn a(&self, t: f64) -> f64 {
        (self.a)(t)
    }

    pub fn a_prime(&self, t: f64) -> f64 {
        (self.a_prime)(t)
    }

    pub fn a_dprime(&self, t: f64) -> f64 {
        (self.a_dprime)(t)
    }

    /// Checks `a' >= 0` at `probes`, and that `a'` and `a''` are the
    /// derivatives of `a` and `a'`: central differences must converge at
    /// third order, which a wrong derivative breaks.
    pub fn check(&self, probes: &[f64]) -> Result<()> {
        for &t in probes {
            let ap = self.a_prime(t);
            if ap < 0.0 {
                return Err(Error::InvalidArgument(format!("a'({t}) = {ap} < 0")));
            }
            if !central_consistent(&*self.a, &*self.a_prime, t) {
                return Err(Error::InvalidArgument(format!("a' inconsistent with a at {t}")));
            }
            if !central_consistent(&*self.a_prime, &*self.a_dprime, t) {
                return Err(Error::InvalidArgument(format!("a'' inconsistent with a' at {t}")));
            }
        }
        Ok(())
    }
}

fn central_consistent(f: &dyn Fn(f64) -> f64, fp: &dyn Fn(f64) -> f64, t: f64) -> bool {
    let err = |h: f64| (f(t + h) - f(t - h) - 2.0 * h * fp(t)).abs();
    let (e1, e2) = (err(1e-3), err(5e-4));
    let floor = 1e-12 * (1.0 + f(t).abs() + fp(t).abs());
    e2 <= 0.25 * e1 + floor
}

/// Problem data: domain, nonlinearity and desired state.
#[derive(Debug, Clone)]
pub struct PDEProblem {
    mask: DomainMask,
    nonlinearity: Nonlinearity,
    y_d: GridFunction,
    stencil: Arc<Stencil>,
    /// Factorization shared by every solve when `a` is affine.
    affine_solver: Option<Arc<SpdSolver>>,
}

/// Probe states used to validate a nonlinearity.
const PROBES: [f64; 9] = [-2.0, -1.0, -0.3, -0.01, 0.0, 0.01, 0.3, 1.0, 2.0];

impl PDEProblem {
    pub fn new(mask: DomainMask, nonlinearity: Nonlinearity, y_d: GridFunction) -> Result<Self> {
        if y_d.grid() != mask.grid() {
            return Err(Error::InvalidArgument("y_d and mask live on different grids".into()));
        }
        if mask.interior_nodes().any(|i| !y_d.values()[i].is_finite()) {
            return Err(Error::InvalidArgument("y_d is not finite on the domain".into()));
        }
        nonlinearity.check(&PROBES)?;
        let stencil = Arc::new(Stencil::new(&mask));
        let affine_solver = match nonlinearity.affine {
            Some(c) => Some(Arc::new(SpdSolver::new(&stencil, &vec![c; stencil.len()])?)),
            None => None,
        };
        Ok(Self { mask, nonlinearity, y_d, stencil, affine_solver })
    }

    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }

    pub fn grid(&self) -> &UniformGrid {
        self.mask.grid()
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn y_d(&self) -> &GridFunction {
        &self.y_d
    }

    /// Same domain and nonlinearity with another desired state.
    pub fn with_desired_state(&self, y_d: GridFunction) -> Result<Self> {
        if y_d.grid() != self.grid() {
            return Err(Error::InvalidArgument("y_d lives on another grid".into()));
        }
        Ok(Self { y_d, ..self.clone() })
    }

    /// `(-Delta_h + a'(y)) f` on the interior nodes, zero elsewhere.
    pub fn apply_linearized(&self, y: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
        let c: Vec<f64> = self.gather(y)?.iter().map(|&t| self.nonlinearity.a_prime(t)).collect();
        Ok(self.scatter(&self.stencil.apply(&c, &self.gather(f)?)))
    }

    fn solver_at(&self, yk: &[f64]) -> Result<Arc<SpdSolver>> {
        if let Some(s) = &self.affine_solver {
            return Ok(s.clone());
        }
        let c: Vec<f64> = yk.iter().map(|&t| self.nonlinearity.a_prime(t)).collect();
        Ok(Arc::new(SpdSolver::new(&self.stencil, &c)?))
    }

    /// `int_Omega f g` with the interior-node rule.
    pub fn inner(&self, f: &GridFunction, g: &GridFunction) -> f64 {
        let grid = self.grid();
        self.stencil.nodes.iter().map(|&i| f.values()[i] * g.values()[i] * grid.node_weight(i)).sum()
    }

    fn gather(&self, f: &GridFunction) -> Result<Vec<f64>> {
        if f.grid() != self.grid() {
            return Err(Error::InvalidArgument("field lives on another grid".into()));
        }
        Ok(self.stencil.nodes.iter().map(|&i| f.values()[i]).collect())
    }

    fn scatter(&self, x: &[f64]) -> GridFunction {
        let mut v = vec![0.0; self.grid().node_count()];
        for (&i, &xi) in self.stencil.nodes.iter().zip(x) {
            v[i] = xi;
        }
        GridFunction::new(*self.grid(), v).expect("node count matches")
    }

    fn load(&self, h: &Forcing<'_>) -> Result<Vec<f64>> {
        match h {
            Forcing::Density(f) => self.gather(f),
            Forcing::Atoms(mu) => {
                if mu.dim != self.grid().dim() {
                    return Err(Error::DimensionMismatch { expected: self.grid().dim(), got: mu.dim });
                }
                let g = self.grid();
                let mut out = vec![0.0; self.stencil.len()];
                for a in &mu.atoms {
                    let idx = g.nearest_node(&a.location).ok_or(Error::AtomOutsideBox { location: a.location })?;
                    let flat = g.flat_index(idx);
                    if let Some(k) = self.stencil.unknown(flat) {
                        out[k] += a.weight / g.node_weight(flat);
                    }
                }
                Ok(out)
            }
        }
    }

    fn residual(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let a = &self.nonlinearity;
        let zero = vec![0.0; x.len()];
        let mut r = self.stencil.apply(&zero, x);
        for k in 0..x.len() {
            r[k] += a.a(x[k]) - u[k];
        }
        r
    }

    /// State, adjoint and a factorization of the linearized operator at `u`.
    pub fn linearize(&self, u: &GridFunction) -> Result<Linearization<'_>> {
        let state = solve_state(self, u)?;
        Linearization::at_state(self, state)
    }
}

/// Right-hand side of a linearized solve: a density on the grid, or signed
/// atoms moved to their nearest node.
#[derive(Debug, Clone, Copy)]
pub enum Forcing<'a> {
    Density(&'a GridFunction),
    Atoms(&'a SignedMeasure),
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub y: GridFunction,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITERS: usize = 50;
const DAMPING_FLOOR: f64 = 1.0 / (1u64 << 20) as f64;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton for `-Delta_h y + a(y) = u` from `y = 0`. After the residual
/// drops below 1e-10, steps continue while they still halve it, so results
/// sit at rounding level.
pub fn solve_state(prob: &PDEProblem, u: &GridFunction) -> Result<StateSolution> {
    let uk = prob.gather(u)?;
    if uk.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("control is not finite on the domain".into()));
    }
    let st = &prob.stencil;
    let mut x = vec![0.0; st.len()];
    let mut r = prob.residual(&x, &uk);
    let mut res = sup(&r);
    let mut iters = 0;
    while res > 0.0 {
        if iters == NEWTON_MAX_ITERS {
            if res <= NEWTON_TOL {
                break;
            }
            return Err(Error::NewtonDiverged { iterations: iters, residual: res });
        }
        let solver = prob.solver_at(&x)?;
        let step = solver.solve(st, &r)?;
        let polishing = res <= NEWTON_TOL;
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, di)| xi - t * di).collect();
            let rt = prob.residual(&trial, &uk);
            let rn = sup(&rt);
            let enough = if polishing { rn <= 0.5 * res } else { rn <= (1.0 - 1e-4 * t) * res };
            if enough {
                break Some((trial, rt, rn));
            }
            if polishing {
                break None;
            }
            t *= 0.5;
            if t < DAMPING_FLOOR {
                return Err(Error::NewtonDiverged { iterations: iters, residual: res });
            }
        };
        iters += 1;
        match accepted {
            Some((nx, nr, nres)) => {
                x = nx;
                r = nr;
                res = nres;
            }
            None => break,
        }
    }
    Ok(StateSolution { y: prob.scatter(&x), newton_iters: iters, residual_norm: res })
}

/// Everything needed for derivatives of `F` at one control.
#[derive(Debug, Clone)]
pub struct Linearization<'a> {
    prob: &'a PDEProblem,
    state: StateSolution,
    adjoint: GridFunction,
    /// `1 - a''(y) phi` per unknown.
    curvature: Vec<f64>,
    solver: Arc<SpdSolver>,
}

impl<'a> Linearization<'a> {
    pub fn at_state(prob: &'a PDEProblem, state: StateSolution) -> Result<Self> {
        let a = &prob.nonlinearity;
        let yk = prob.gather(&state.y)?;
        let solver = prob.solver_at(&yk)?;
        let rhs: Vec<f64> = prob.stencil.nodes.iter().map(|&i| state.y.values()[i] - prob.y_d.values()[i]).collect();
        let phi = solver.solve(&prob.stencil, &rhs)?;
        let curvature = yk.iter().zip(&phi).map(|(&y, &p)| 1.0 - a.a_dprime(y) * p).collect();
        Ok(Self { prob, adjoint: prob.scatter(&phi), state, curvature, solver })
    }

    pub fn problem(&self) -> &PDEProblem {
        self.prob
    }

    pub fn state(&self) -> &StateSolution {
        &self.state
    }

    /// Adjoint state, the Riesz representative of `F'(u)`.
    pub fn adjoint(&self) -> &GridFunction {
        &self.adjoint
    }

    /// `1 - a''(y) phi` on the grid (zero off the interior).
    pub fn curvature(&self) -> GridFunction {
        self.prob.scatter(&self.curvature)
    }

    pub fn objective(&self) -> f64 {
        let d = self.state.y.zip_with(&self.prob.y_d, |a, b| a - b).expect("same grid");
        0.5 * self.prob.inner(&d, &d)
    }

    /// `z = S'(u) h`.
    pub fn solve(&self, h: Forcing<'_>) -> Result<GridFunction> {
        let f = self.prob.load(&h)?;
        Ok(self.prob.scatter(&self.solver.solve(&self.prob.stencil, &f)?))
    }

    pub fn gradient_pairing(&self, h: &GridFunction) -> Result<f64> {
        if h.grid() != self.prob.grid() {
            return Err(Error::InvalidArgument("direction lives on another grid".into()));
        }
        Ok(self.prob.inner(&self.adjoint, h))
    }

    /// `int (1 - a''(y) phi) z1 z2` for already linearized directions.
    pub fn hessian_of_solutions(&self, z1: &GridFunction, z2: &GridFunction) -> f64 {
        let g = self.prob.grid();
        self.prob
            .stencil
            .nodes
            .iter()
            .zip(&self.curvature)
            .map(|(&i, &c)| c * z1.values()[i] * z2.values()[i] * g.node_weight(i))
            .sum()
    }

    pub fn hessian(&self, h1: Forcing<'_>, h2: Forcing<'_>) -> Result<f64> {
        let z1 = self.solve(h1)?;
        let z2 = self.solve(h2)?;
        Ok(self.hessian_of_solutions(&z1, &z2))
    }
}

/// Solves `(-Delta_h + a'(y)) z = h` with `z = 0` off the interior.
pub fn solve_linearized(prob: &PDEProblem, y: &GridFunction, h: Forcing<'_>) -> Result<GridFunction> {
    let solver = prob.solver_at(&prob.gather(y)?)?;
    let f = prob.load(&h)?;
    Ok(prob.scatter(&solver.solve(&prob.stencil, &f)?))
}

/// Adjoint state `phi` solving `-Delta phi + a'(y) phi = y - y_d`.
pub fn solve_adjoint(prob: &PDEProblem, y: &GridFunction) -> Result<GridFunction> {
    let rhs = y.zip_with(&prob.y_d, |a, b| a - b)?;
    solve_linearized(prob, y, Forcing::Density(&rhs))
}

pub fn objective(prob: &PDEProblem, u: &GridFunction) -> Result<f64> {
    let s = solve_state(prob, u)?;
    let d = s.y.zip_with(&prob.y_d, |a, b| a - b)?;
    Ok(0.5 * prob.inner(&d, &d))
}

/// `F'(u) h = int phi h`.
pub fn gradient_pairing(prob: &PDEProblem, u: &GridFunction, h: &GridFunction) -> Result<f64> {
    prob.linearize(u)?.gradient_pairing(h)
}

/// `F''(u)[h1, h2] = int (1 - a''(y) phi) z1 z2`.
pub fn hessian_form(prob: &PDEProblem, u: &GridFunction, h1: Forcing<'_>, h2: Forcing<'_>) -> Result<f64> {
    prob.linearize(u)?.hessian(h1, h2)
}

/// Integrability exponents for the linearized solution operator on dual
/// Bessel spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityExponents {
    pub tau: f64,
    /// `1 / tau` when `tau > 0`, else infinity. Open bound.
    pub r_max: f64,
    /// `0 <= alpha <= 1` and `1/2 < 1/p + (1 - alpha)/d <= 1`.
    pub hypothesis_ok: bool,
}

pub fn regularity_exponents(spec: &BesselSpec) -> RegularityExponents {
    let d = spec.dim as f64;
    let tau = 1.0 - 1.0 / spec.p - (2.0 - spec.alpha) / d;
    let r_max = if tau > 0.0 { 1.0 / tau } else { f64::INFINITY };
    let s = 1.0 / spec.p + (1.0 - spec.alpha) / d;
    let hypothesis_ok = spec.alpha <= 1.0 && s > 0.5 && s <= 1.0 + 1e-12;
    RegularityExponents { tau, r_max, hypothesis_ok }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorNormReport {
    pub ratios: Vec<f64>,
    pub sup: f64,
}

/// `max_h ||S'(u) h||_{L^r} / ||h||_*` over `family`, with the dual norm
/// taken by `dual` (whose source box must cover Omega).
pub fn operator_norm_probe(
    lin: &Linearization<'_>,
    dual: &DualNormOperator,
    family: &[GridFunction],
    r: f64,
) -> Result<OperatorNormReport> {
    let ex = regularity_exponents(dual.spec());
    if ex.r_max.is_finite() && r >= ex.r_max {
        return Err(Error::InvalidArgument(format!("r = {r} must stay below r_max = {}", ex.r_max)));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily("operator norm family".into()));
    }
    let mask = lin.problem().mask();
    let mut ratios = Vec::with_capacity(family.len());
    for h in family {
        let z = lin.solve(Forcing::Density(h))?;
        let num = lp_norm(&z, r)?;
        let den = dual.norm_of_density(h, mask)?;
        if !(den > 0.0) {
            return Err(Error::InvalidArgument("family member with zero dual norm".into()));
        }
        ratios.push(num / den);
    }
    let sup = ratios.iter().copied().fold(0.0, f64::max);
    Ok(OperatorNormReport { ratios, sup })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(n: usize, a: Nonlinearity) -> PDEProblem {
        let g = UniformGrid::unit_box(1, n).unwrap();
        PDEProblem::new(DomainMask::box_interior(g).unwrap(), a, GridFunction::zeros(g)).unwrap()
    }

    #[test]
    fn poisson_with_unit_load() {
        let p = interval(101, Nonlinearity::zero());
        let u = GridFunction::constant(*p.grid(), 1.0);
        let s = solve_state(&p, &u).unwrap();
        let h = 0.01;
        for i in 0..101 {
            let x = p.grid().node(i)[0];
            assert!((s.y.values()[i] - x * (1.0 - x) / 2.0).abs() <= h * h);
        }
        assert_eq!(s.y.values()[0], 0.0);
        assert_eq!(s.y.values()[100], 0.0);
        let f = objective(&p, &u).unwrap();
        assert!((f - 1.0 / 240.0).abs() <= 2.0 * h * h);
    }

    #[test]
    fn zero_control_gives_zero_state() {
        let p = interval(33, Nonlinearity::cubic());
        let s = solve_state(&p, &GridFunction::zeros(*p.grid())).unwrap();
        assert!(s.y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_decreasing_nonlinearity() {
        let g = UniformGrid::unit_box(1, 11).unwrap();
        let bad = Nonlinearity::new("neg", |y| -y, |_| -1.0, |_| 0.0);
        let r = PDEProblem::new(DomainMask::box_interior(g).unwrap(), bad, GridFunction::zeros(g));
        assert!(r.is_err());
    }

    #[test]
    fn rejects_wrong_derivative() {
        let g = UniformGrid::unit_box(1, 11).unwrap();
        let bad = Nonlinearity::new("bad", |y| y * y * y, |y| 2.0 * y * y, |y| 6.0 * y);
        let r = PDEProblem::new(DomainMask::box_interior(g).unwrap(), bad, GridFunction::zeros(g));
        assert!(r.is_err());
    }

    #[test]
    fn saturating_nonlinearity_is_consistent() {
        Nonlinearity::saturating(3.0, 0.02).check(&PROBES).unwrap();
    }

    #[test]
    fn exponents() {
        let e = regularity_exponents(&BesselSpec::new(1.0, 4.0 / 3.0, 2).unwrap());
        assert!((e.tau + 0.25).abs() < 1e-15);
        assert_eq!(e.r_max, f64::INFINITY);
        let e = regularity_exponents(&BesselSpec::new(1.0, 1.6, 4).unwrap());
        assert!((e.tau - 0.125).abs() < 1e-15);
        assert!((e.r_max - 8.0).abs() < 1e-12);
    }
}
