//! Bang-bang structure: sign controls, stationarity, the adjoint zero set,
//! growth inequalities and the second-order condition.
//!
//! Sign convention: `phibar` is the negative adjoint, `phibar = -F'(ubar)`,
//! so a stationary control is `ubar = sign(phibar)` and the first-order
//! residual `int phibar (ubar - u) = F'(ubar)(u - ubar)` is nonnegative for
//! every feasible `u`.

pub mod fixtures;
mod growth;
mod levelset;
mod scan;
mod second_order;

pub use growth::{growth_inequality_probe, one_dimensional_growth_check, GrowthReport};
pub use levelset::{
    default_kappa, extract_zero_level_set, gradient_field, measure_bound_constant, Facet, LevelSetMesh,
    MeasureBound,
};
pub use scan::{quadratic_growth_scan, random_differences, ScanConfig, ScanRecord, ScanReport, Sampler, SCAN_CSV_HEADER};
pub use second_order::{
    second_order_form, second_order_form_at, ssc_verdict, subderivative_quotient, surface_term, SecondOrderValue, SscVerdict, SurfaceDensity,
};

use crate::error::{Error, Result};
use crate::field::{DomainMask, GridFunction};
use crate::pde::{Linearization, PDEProblem};

/// Feasibility slack for `|u| <= 1`.
const FEASIBILITY_TOL: f64 = 1e-12;

/// A grid function with `|u| <= 1` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    u: GridFunction,
}

impl ControlField {
    pub fn new(u: GridFunction) -> Result<Self> {
        if let Some((node, &value)) =
            u.values().iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0 + FEASIBILITY_TOL))
        {
            return Err(Error::InfeasibleControl { node, value });
        }
        Ok(Self { u })
    }

    pub fn field(&self) -> &GridFunction {
        &self.u
    }

    pub fn into_field(self) -> GridFunction {
        self.u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignControl {
    pub control: ControlField,
    /// Nodes where `phibar` is exactly zero (assigned `+1`).
    pub zero_count: usize,
}

/// `+1` where `phibar >= 0`, `-1` where `phibar < 0`.
pub fn sign_control(phibar: &GridFunction) -> SignControl {
    let zero_count = phibar.values().iter().filter(|&&v| v == 0.0).count();
    let u = phibar.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
    SignControl { control: ControlField { u }, zero_count }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoncResidual {
    /// `int phibar (ubar - u)`.
    pub signed: f64,
    /// `int |phibar (ubar - u)|`.
    pub absolute: f64,
}

pub fn fonc_residual(phibar: &GridFunction, ubar: &ControlField, u: &ControlField) -> Result<FoncResidual> {
    let g = phibar.grid();
    if ubar.field().grid() != g || u.field().grid() != g {
        return Err(Error::InvalidArgument("controls and adjoint live on different grids".into()));
    }
    let (mut signed, mut absolute) = (0.0, 0.0);
    for (i, ((&p, &ub), &uu)) in
        phibar.values().iter().zip(ubar.field().values()).zip(u.field().values()).enumerate()
    {
        let t = p * (ub - uu) * g.node_weight(i);
        signed += t;
        absolute += t.abs();
    }
    Ok(FoncResidual { signed, absolute })
}

/// A control with its problem, state and negative adjoint, checked to satisfy
/// `ubar = sign(phibar)` wherever `phibar` is not negligible.
#[derive(Debug, Clone)]
pub struct StationaryPoint {
    problem: PDEProblem,
    ubar: ControlField,
    phibar: GridFunction,
    objective: f64,
    zero_count: usize,
}

impl StationaryPoint {
    pub fn new(problem: PDEProblem, ubar: ControlField) -> Result<Self> {
        let lin = problem.linearize(ubar.field())?;
        let phibar = lin.adjoint().scaled(-1.0);
        let objective = lin.objective();
        let scale = phibar.max_abs();
        let mask = problem.mask();
        for i in mask.interior_nodes() {
            let p = phibar.values()[i];
            let u = ubar.field().values()[i];
            if p.abs() > 1e-9 * scale && (u - p.signum()).abs() > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "control is not stationary at node {i}: phibar = {p:e}, u = {u}"
                )));
            }
        }
        let zero_count = mask.interior_nodes().filter(|&i| phibar.values()[i] == 0.0).count();
        Ok(Self { problem, ubar, phibar, objective, zero_count })
    }

    pub fn problem(&self) -> &PDEProblem {
        &self.problem
    }

    pub fn mask(&self) -> &DomainMask {
        self.problem.mask()
    }

    pub fn ubar(&self) -> &ControlField {
        &self.ubar
    }

    pub fn phibar(&self) -> &GridFunction {
        &self.phibar
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    pub fn linearize(&self) -> Result<Linearization<'_>> {
        self.problem.linearize(self.ubar.field())
    }
}
