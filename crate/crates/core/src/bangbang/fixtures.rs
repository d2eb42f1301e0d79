//! Named adjoints and stationary points used by tests, the CLI and the demo.

use super::{sign_control, StationaryPoint};
use crate::error::{Error, Result};
use crate::field::{DomainMask, GridFunction, UniformGrid};
use crate::pde::{solve_state, Nonlinearity, PDEProblem};

/// Names accepted by [`level_set_fixture`].
pub const LEVEL_SET_FIXTURES: [&str; 3] = ["line", "circle", "degenerate"];
/// Names accepted by [`stationary_fixture`].
pub const STATIONARY_FIXTURES: [&str; 2] = ["manufactured", "rigged"];

/// Radius of the circle fixture.
pub const CIRCLE_RADIUS: f64 = 0.3;
/// Default amplitude of the manufactured adjoint.
pub const MANUFACTURED_AMPLITUDE: f64 = 4.0;
/// Rigged fixture: adjoint amplitude and interface slope, then strength and
/// width of the saturating nonlinearity.
pub const RIGGED_AMPLITUDE: f64 = 40.0;
pub const RIGGED_DELTA: f64 = 0.004;
pub const RIGGED_K: f64 = 100.0;
pub const RIGGED_EPS: f64 = 0.004;

/// `x1 - 1/2` on the unit square with `n` nodes per axis.
pub fn line(n: usize) -> Result<(GridFunction, DomainMask)> {
    let g = UniformGrid::unit_box(2, n)?;
    Ok((GridFunction::from_fn(g, |x| x[0] - 0.5), DomainMask::box_interior(g)?))
}

/// `|x - c|^2 - r^2` centred at `c = (1/2, 1/2)` on the unit square.
pub fn circle(n: usize, r: f64) -> Result<(GridFunction, DomainMask)> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::InvalidArgument(format!("radius {r} does not fit in the unit square")));
    }
    let g = UniformGrid::unit_box(2, n)?;
    let phi = GridFunction::from_fn(g, |x| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - r * r);
    Ok((phi, DomainMask::box_interior(g)?))
}

/// `x1^2` on `[-1, 1]^2`; odd `n` puts nodes on the zero set.
pub fn degenerate(n: usize) -> Result<(GridFunction, DomainMask)> {
    let g = UniformGrid::cube(2, -1.0, 1.0, n)?;
    Ok((GridFunction::from_fn(g, |x| x[0] * x[0]), DomainMask::box_interior(g)?))
}

pub fn level_set_fixture(name: &str, n: usize) -> Result<(GridFunction, DomainMask)> {
    match name {
        "line" => line(n),
        "circle" => circle(n, CIRCLE_RADIUS),
        "degenerate" => degenerate(n),
        _ => Err(Error::InvalidArgument(format!("unknown level-set fixture `{name}`"))),
    }
}

/// `A (x1 - 1/2) sin(pi x1) sin(pi x2)` on the unit square.
pub fn manufactured_adjoint(grid: UniformGrid, amplitude: f64) -> GridFunction {
    use std::f64::consts::PI;
    GridFunction::from_fn(grid, |x| amplitude * (x[0] - 0.5) * (PI * x[0]).sin() * (PI * x[1]).sin())
}

/// Stationary point whose negative adjoint is `phibar` on the interior:
/// `ubar = sign(phibar)`, `y = S(ubar)` and the desired state is chosen so
/// that `-phibar` solves the discrete adjoint equation at `y`.
pub fn stationary_from_adjoint(
    mask: DomainMask,
    nonlinearity: Nonlinearity,
    phibar: &GridFunction,
) -> Result<StationaryPoint> {
    let g = *mask.grid();
    if phibar.grid() != &g {
        return Err(Error::InvalidArgument("adjoint lives on another grid".into()));
    }
    let ubar = sign_control(phibar).control;
    let prob = PDEProblem::new(mask, nonlinearity, GridFunction::zeros(g))?;
    let y = solve_state(&prob, ubar.field())?.y;
    let l_phi = prob.apply_linearized(&y, &phibar.scaled(-1.0))?;
    let y_d = y.zip_with(&l_phi, |a, b| a - b)?;
    StationaryPoint::new(prob.with_desired_state(y_d)?, ubar)
}

/// `a = 0` and [`manufactured_adjoint`] on `n` nodes per axis; use even `n`
/// so the interface misses the nodes.
pub fn manufactured(n: usize, amplitude: f64) -> Result<StationaryPoint> {
    let g = UniformGrid::unit_box(2, n)?;
    let phi = manufactured_adjoint(g, amplitude);
    stationary_from_adjoint(DomainMask::box_interior(g)?, Nonlinearity::zero(), &phi)
}

/// `A q (delta + q^2) sin(pi x1) sin(pi x2)` with `q = |x - c|^2 - R^2`,
/// `c = (1/2, 1/2)`, `R = 0.3`: a closed interface with slope of order
/// `A delta`, growing cubically away from it.
pub fn rigged_adjoint(grid: UniformGrid, amplitude: f64, delta: f64) -> GridFunction {
    use std::f64::consts::PI;
    let r2 = CIRCLE_RADIUS * CIRCLE_RADIUS;
    GridFunction::from_fn(grid, |x| {
        let q = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) - r2;
        amplitude * q * (delta + q * q) * (PI * x[0]).sin() * (PI * x[1]).sin()
    })
}

/// [`rigged_adjoint`] with `a(y) = k eps tanh(y / eps)`. Near the interface
/// `a''(y) phi` is large and positive, so `F''` is strongly negative there
/// while the surface term stays of order `A delta`.
pub fn rigged(n: usize, amplitude: f64, delta: f64, k: f64, eps: f64) -> Result<StationaryPoint> {
    let g = UniformGrid::unit_box(2, n)?;
    let phi = rigged_adjoint(g, amplitude, delta);
    stationary_from_adjoint(DomainMask::box_interior(g)?, Nonlinearity::saturating(k, eps), &phi)
}

pub fn stationary_fixture(name: &str, n: usize) -> Result<StationaryPoint> {
    match name {
        "manufactured" => manufactured(n, MANUFACTURED_AMPLITUDE),
        "rigged" => rigged(n, RIGGED_AMPLITUDE, RIGGED_DELTA, RIGGED_K, RIGGED_EPS),
        _ => Err(Error::InvalidArgument(format!("unknown stationary fixture `{name}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_adjoint_is_recovered() {
        let sp = manufactured(32, 1.0).unwrap();
        let target = manufactured_adjoint(*sp.mask().grid(), 1.0);
        for i in sp.mask().interior_nodes() {
            assert!((sp.phibar().values()[i] - target.values()[i]).abs() < 1e-10);
        }
        assert_eq!(sp.zero_count(), 0);
    }

    #[test]
    fn nonlinear_adjoint_is_recovered() {
        let sp = rigged(24, 1.0, 0.05, 5.0, 0.1).unwrap();
        let target = rigged_adjoint(*sp.mask().grid(), 1.0, 0.05);
        for i in sp.mask().interior_nodes() {
            assert!((sp.phibar().values()[i] - target.values()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(level_set_fixture("square", 9).is_err());
        assert!(stationary_fixture("square", 9).is_err());
    }
}
