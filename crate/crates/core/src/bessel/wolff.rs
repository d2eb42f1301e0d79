use super::dual::dual_norm;
use super::BesselSpec;
use crate::error::{Error, Result};
use crate::field::{distance, AtomicMeasure, UniformGrid};

/// Log-spaced radius panels on `[r_min, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRule {
    nodes: Vec<f64>,
}

impl RadiusRule {
    pub fn log_spaced(r_min: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min <= 1e-4) {
            return Err(Error::BadRadiusRule(format!("r_min = {r_min} must lie in (0, 1e-4]")));
        }
        if count < 64 {
            return Err(Error::BadRadiusRule(format!("{count} nodes; need at least 64")));
        }
        let l0 = r_min.ln();
        let nodes = (0..count)
            .map(|i| if i + 1 == count { 1.0 } else { (l0 * (1.0 - i as f64 / (count - 1) as f64)).exp() })
            .collect::<Vec<_>>();
        let mut nodes = nodes;
        nodes[0] = r_min;
        Ok(Self { nodes })
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

impl Default for RadiusRule {
    fn default() -> Self {
        Self::log_spaced(1e-4, 128).expect("valid default rule")
    }
}

/// `int_a^b r^(-s-1) dr`.
fn power_panel(a: f64, b: f64, s: f64) -> f64 {
    if s == 0.0 {
        (b / a).ln()
    } else {
        (a.powf(-s) - b.powf(-s)) / s
    }
}

/// `sum_x w_x int_{r_min}^1 (mu(B_r(x)) / r^(d - alpha p))^(p'-1) dr / r`.
///
/// For atomic measures `mu(B_r(x))` is a step function of `r`; each panel of
/// the rule is split at the jump radii and integrated in closed form. At
/// `alpha p = d` any positive atom makes the integral diverge like
/// `log(1/r)` at the origin, which is reported as `+inf`.
pub fn wolff_functional(mu: &AtomicMeasure, spec: &BesselSpec, rule: &RadiusRule) -> Result<f64> {
    spec.require_wolff_valid()?;
    if mu.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: mu.dim() });
    }
    if spec.is_critical() && mu.atoms().iter().any(|a| a.weight > 0.0) {
        return Ok(f64::INFINITY);
    }
    let d = spec.dim as f64;
    let s = (d - spec.alpha * spec.p) * (spec.p_conj - 1.0);
    let e = spec.p_conj - 1.0;
    let nodes = rule.nodes();
    let r_min = rule.r_min();

    let mut total = 0.0;
    let mut jumps: Vec<(f64, f64)> = Vec::with_capacity(mu.len());
    for x in mu.atoms() {
        if x.weight == 0.0 {
            continue;
        }
        jumps.clear();
        jumps.extend(mu.atoms().iter().map(|y| (distance(&x.location, &y.location), y.weight)));
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut j = 0;
        let mut mass = 0.0;
        while j < jumps.len() && jumps[j].0 <= r_min {
            mass += jumps[j].1;
            j += 1;
        }
        let mut inner = 0.0;
        for panel in nodes.windows(2) {
            let (mut a, b) = (panel[0], panel[1]);
            while j < jumps.len() && jumps[j].0 <= b {
                let r = jumps[j].0;
                if r > a {
                    inner += mass.powf(e) * power_panel(a, r, s);
                    a = r;
                }
                mass += jumps[j].1;
                j += 1;
            }
            if b > a {
                inner += mass.powf(e) * power_panel(a, b, s);
            }
        }
        total += x.weight * inner;
    }
    Ok(total)
}

/// Ratios `Wolff(mu) / ||mu||^{p'}` over a family of measures.
#[derive(Debug, Clone, PartialEq)]
pub struct WolffReport {
    pub ratios: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl WolffReport {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

pub fn wolff_equivalence_report(
    family: &[AtomicMeasure],
    spec: &BesselSpec,
    grid: &UniformGrid,
    rule: &RadiusRule,
) -> Result<WolffReport> {
    spec.require_wolff_valid()?;
    if spec.is_critical() {
        return Err(Error::InvalidArgument("equivalence report needs alpha p < d".into()));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily("wolff family".into()));
    }
    let mut ratios = Vec::with_capacity(family.len());
    for mu in family {
        let w = wolff_functional(mu, spec, rule)?;
        let n = dual_norm(mu, spec, grid)?;
        let r = w / n.powf(spec.p_conj);
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!("non-positive or non-finite ratio {r}")));
        }
        ratios.push(r);
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(WolffReport { ratios, min, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Atom;

    fn spec() -> BesselSpec {
        BesselSpec::new(1.0, 4.0 / 3.0, 2).unwrap()
    }

    #[test]
    fn single_atom_closed_form() {
        // int_{r_min}^1 w^{p'-1} r^{-s-1} dr times w, s = (d - alpha p)(p' - 1).
        let s = spec();
        let rule = RadiusRule::default();
        let w: f64 = 0.7;
        let mu = AtomicMeasure::dirac(2, [0.3, 0.4, 0.0], w).unwrap();
        let sexp = (2.0 - s.alpha * s.p) * (s.p_conj - 1.0);
        let expect = w.powf(s.p_conj) * (rule.r_min().powf(-sexp) - 1.0) / sexp;
        let got = wolff_functional(&mu, &s, &rule).unwrap();
        assert!(((got - expect) / expect).abs() < 1e-3);
    }

    #[test]
    fn two_atoms_match_brute_force_quadrature() {
        let s = spec();
        let rule = RadiusRule::default();
        let mu = AtomicMeasure::new(
            2,
            vec![
                Atom { location: [0.0, 0.0, 0.0], weight: 0.5 },
                Atom { location: [0.3, 0.0, 0.0], weight: 0.25 },
            ],
        )
        .unwrap();
        // Brute force: midpoint rule in log r with direct ball counting.
        let n = 400_000;
        let (l0, l1) = (rule.r_min().ln(), 0.0);
        let dl = (l1 - l0) / n as f64;
        let d_minus = 2.0 - s.alpha * s.p;
        let mut brute = 0.0;
        for x in mu.atoms() {
            let mut inner = 0.0;
            for i in 0..n {
                let r = (l0 + (i as f64 + 0.5) * dl).exp();
                inner += (mu.ball_mass(&x.location, r) / r.powf(d_minus)).powf(s.p_conj - 1.0) * dl;
            }
            brute += x.weight * inner;
        }
        let got = wolff_functional(&mu, &s, &rule).unwrap();
        assert!(((got - brute) / brute).abs() < 1e-4, "{got} vs {brute}");
    }

    #[test]
    fn homogeneity_of_degree_p_conj() {
        let s = spec();
        let rule = RadiusRule::default();
        let mu = AtomicMeasure::new(
            2,
            vec![
                Atom { location: [0.1, 0.2, 0.0], weight: 0.3 },
                Atom { location: [0.15, 0.2, 0.0], weight: 0.9 },
                Atom { location: [0.7, 0.6, 0.0], weight: 0.4 },
            ],
        )
        .unwrap();
        let base = wolff_functional(&mu, &s, &rule).unwrap();
        for t in [0.5, 2.0, 7.0] {
            let scaled = wolff_functional(&mu.scaled(t).unwrap(), &s, &rule).unwrap();
            assert!((scaled / (t.powf(s.p_conj) * base) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn critical_exponent_diverges() {
        let s = BesselSpec::new(1.0, 2.0, 2).unwrap();
        let mu = AtomicMeasure::dirac(2, [0.0; 3], 1.0).unwrap();
        assert_eq!(wolff_functional(&mu, &s, &RadiusRule::default()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let s = BesselSpec::new(2.0, 2.0, 1).unwrap();
        let mu = AtomicMeasure::dirac(1, [0.0; 3], 1.0).unwrap();
        assert!(matches!(
            wolff_functional(&mu, &s, &RadiusRule::default()),
            Err(Error::SpecNotWolffValid { .. })
        ));
    }

    #[test]
    fn radius_rule_validation() {
        assert!(RadiusRule::log_spaced(1e-3, 128).is_err());
        assert!(RadiusRule::log_spaced(1e-5, 10).is_err());
        let r = RadiusRule::log_spaced(1e-5, 64).unwrap();
        assert_eq!(r.nodes().len(), 64);
        assert_eq!(r.nodes()[63], 1.0);
        assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
    }
}
