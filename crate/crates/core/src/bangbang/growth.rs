use super::levelset::extract_zero_level_set;
use crate::bessel::DualNormOperator;
use crate::error::{Error, Result};
use crate::field::{lp_norm, DomainMask, GridFunction};

fn weighted_abs_product(a: &GridFunction, b: &GridFunction) -> f64 {
    let g = a.grid();
    a.values().iter().zip(b.values()).enumerate().map(|(i, (x, y))| (x * y).abs() * g.node_weight(i)).sum()
}

/// Checks `||v||_inf int |psi v| >= (k/8) ||v||_1^2` on an interval and
/// returns the smallest ratio of the two sides over the nonzero members of
/// `v_family` (infinity when all vanish). The hypothesis
/// `|psi(t)| >= k |t - gamma|` is verified at every node first.
pub fn one_dimensional_growth_check(
    psi: &GridFunction,
    k: f64,
    gamma: f64,
    v_family: &[GridFunction],
) -> Result<f64> {
    let g = psi.grid();
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: g.dim() });
    }
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
    }
    let (a, b) = (g.origin()[0], g.upper()[0]);
    if !(gamma > a && gamma < b) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} outside ({a}, {b})")));
    }
    for i in 0..g.node_count() {
        let t = g.node(i)[0];
        let need = k * (t - gamma).abs();
        if psi.values()[i].abs() < need * (1.0 - 1e-12) - 1e-14 {
            return Err(Error::HypothesisViolated { t });
        }
    }
    let mut min = f64::INFINITY;
    for v in v_family {
        if v.grid() != g {
            return Err(Error::InvalidArgument("family member on another grid".into()));
        }
        let l1 = lp_norm(v, 1.0)?;
        if l1 == 0.0 {
            continue;
        }
        let lhs = v.max_abs() * weighted_abs_product(psi, v);
        min = min.min(lhs / (k / 8.0 * l1 * l1));
    }
    Ok(min)
}

/// Growth constants `||v||_inf int |phibar v| / N(v)^2` over a family, for the
/// split dual norm bound `N^2 = 2(||v+||^2 + ||v-||^2)`, for `L^1` and for
/// `L^2`. Minima skip members that vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub dual: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub c_dual: f64,
    pub c_l1: f64,
    pub c_l2: f64,
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min)
}

pub fn growth_inequality_probe(
    phibar: &GridFunction,
    mask: &DomainMask,
    dual: &DualNormOperator,
    v_family: &[GridFunction],
) -> Result<GrowthReport> {
    dual.spec().require_growth_valid()?;
    extract_zero_level_set(phibar, mask, None)?;
    let (mut rd, mut r1, mut r2) = (Vec::new(), Vec::new(), Vec::new());
    for v in v_family {
        if v.grid() != phibar.grid() {
            return Err(Error::InvalidArgument("family member on another grid".into()));
        }
        let num = v.max_abs() * weighted_abs_product(phibar, v);
        let l1 = lp_norm(v, 1.0)?;
        if l1 == 0.0 {
            rd.push(f64::NAN);
            r1.push(f64::NAN);
            r2.push(f64::NAN);
            continue;
        }
        let l2 = lp_norm(v, 2.0)?;
        rd.push(num / dual.split_bound_sq(v, mask)?);
        r1.push(num / (l1 * l1));
        r2.push(num / (l2 * l2));
    }
    if rd.iter().all(|x| x.is_nan()) {
        return Err(Error::EmptyFamily("growth family has no nonzero member".into()));
    }
    Ok(GrowthReport { c_dual: min_of(&rd), c_l1: min_of(&r1), c_l2: min_of(&r2), dual: rd, l1: r1, l2: r2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::UniformGrid;

    #[test]
    fn lemma_examples() {
        let g = UniformGrid::cube(1, -1.0, 1.0, 2001).unwrap();
        let psi = GridFunction::from_fn(g, |x| x[0]);
        let one = GridFunction::constant(g, 1.0);
        let r = one_dimensional_growth_check(&psi, 1.0, 0.0, &[one]).unwrap();
        assert!((r - 2.0).abs() < 1e-5, "{r}");
        let band = GridFunction::from_fn(g, |x| if x[0].abs() <= 0.1 + 1e-12 { 1.0 } else { 0.0 });
        let r = one_dimensional_growth_check(&psi, 1.0, 0.0, &[band, GridFunction::zeros(g)]).unwrap();
        assert!((r - 2.0).abs() < 0.03, "{r}");
        let r = one_dimensional_growth_check(&psi, 1.0, 0.0, &[GridFunction::zeros(g)]).unwrap();
        assert_eq!(r, f64::INFINITY);
    }

    #[test]
    fn hypothesis_is_checked() {
        let g = UniformGrid::cube(1, -1.0, 1.0, 201).unwrap();
        let psi = GridFunction::from_fn(g, |x| x[0] * x[0]);
        assert!(matches!(
            one_dimensional_growth_check(&psi, 1.0, 0.0, &[GridFunction::constant(g, 1.0)]),
            Err(Error::HypothesisViolated { .. })
        ));
    }
}
