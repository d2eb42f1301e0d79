//! Pushforwards of atomic measures under Lipschitz maps and the dual-norm
//! comparison `||mu|| <= C ||T#mu||`.

use std::fmt;
use std::sync::Arc;

use rand::Rng as _;

use crate::bessel::{dual_norm, energy_dual_norm_p2, BesselSpec};
use crate::error::{Error, Result};
use crate::field::{distance, Atom, AtomicMeasure, Point, UniformGrid};
use crate::rng::seeded;

/// Relative slack allowed between sampled and declared Lipschitz constants.
const LIPSCHITZ_SLACK: f64 = 1e-9;
/// Size and seed of the cloud every map is checked on at construction.
const CLOUD_POINTS: usize = 64;
const CLOUD_SEED: u64 = 0x5eed;

type MapFn = dyn Fn(&Point) -> Point + Send + Sync;

/// A map `R^d -> R^d` with a declared Lipschitz constant, spot-checked on a
/// point cloud.
#[derive(Clone)]
pub struct LipschitzMap {
    dim: usize,
    declared_l: f64,
    map: Arc<MapFn>,
}

impl fmt::Debug for LipschitzMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzMap").field("dim", &self.dim).field("declared_l", &self.declared_l).finish()
    }
}

impl LipschitzMap {
    /// Wraps `map` and checks it against `declared_l` on a fixed cloud of
    /// points in `[-1, 2]^d`.
    pub fn new(dim: usize, declared_l: f64, map: impl Fn(&Point) -> Point + Send + Sync + 'static) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dim {dim}")));
        }
        if !(declared_l > 0.0 && declared_l.is_finite()) {
            return Err(Error::InvalidArgument(format!("declared_L = {declared_l} must be positive")));
        }
        let t = Self { dim, declared_l, map: Arc::new(map) };
        t.verify(&default_cloud(dim))?;
        Ok(t)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(dim, 1.0, |x| *x)
    }

    /// `x -> lambda x`.
    pub fn scaling(dim: usize, lambda: f64) -> Result<Self> {
        Self::new(dim, lambda.abs().max(f64::MIN_POSITIVE), move |x| x.map(|v| lambda * v))
    }

    /// `x -> x + tau`.
    pub fn translation(dim: usize, tau: Point) -> Result<Self> {
        Self::new(dim, 1.0, move |x| {
            let mut y = *x;
            for k in 0..dim {
                y[k] += tau[k];
            }
            y
        })
    }

    /// Orthogonal projection that zeroes the coordinates not in `keep`.
    pub fn projection(dim: usize, keep: &[usize]) -> Result<Self> {
        let mut mask = [false; 3];
        for &k in keep {
            if k >= dim {
                return Err(Error::InvalidArgument(format!("axis {k} out of range for dim {dim}")));
            }
            mask[k] = true;
        }
        Self::new(dim, 1.0, move |x| {
            let mut y = [0.0; 3];
            for k in 0..3 {
                if mask[k] {
                    y[k] = x[k];
                }
            }
            y
        })
    }

    /// `self o inner`, with constant `L_self L_inner`.
    pub fn compose(&self, inner: &LipschitzMap) -> Result<Self> {
        if self.dim != inner.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: inner.dim });
        }
        let (outer, inner_f) = (self.map.clone(), inner.map.clone());
        Self::new(self.dim, self.declared_l * inner.declared_l, move |x| outer(&inner_f(x)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_l(&self) -> f64 {
        self.declared_l
    }

    pub fn apply(&self, x: &Point) -> Point {
        let mut y = (self.map)(x);
        for v in y.iter_mut().skip(self.dim) {
            *v = 0.0;
        }
        y
    }

    /// Largest `|T(x) - T(y)| / |x - y|` over pairs of `cloud`; errors when it
    /// exceeds the declared constant.
    pub fn verify(&self, cloud: &[Point]) -> Result<f64> {
        let images: Vec<Point> = cloud.iter().map(|x| self.apply(x)).collect();
        let mut sampled: f64 = 0.0;
        for i in 0..cloud.len() {
            for j in 0..i {
                let dx = distance(&cloud[i], &cloud[j]);
                if dx > 0.0 {
                    sampled = sampled.max(distance(&images[i], &images[j]) / dx);
                }
            }
        }
        if !(sampled <= self.declared_l * (1.0 + LIPSCHITZ_SLACK)) {
            return Err(Error::LipschitzViolated { declared: self.declared_l, sampled });
        }
        Ok(sampled)
    }
}

fn default_cloud(dim: usize) -> Vec<Point> {
    let mut rng = seeded(CLOUD_SEED);
    (0..CLOUD_POINTS)
        .map(|_| {
            let mut p = [0.0; 3];
            for v in p.iter_mut().take(dim) {
                *v = rng.gen_range(-1.0..2.0);
            }
            p
        })
        .collect()
}

/// `T#mu`: every atom `(x, w)` becomes `(T(x), w)`. Atoms whose images
/// coincide are kept separately, so their masses add in every ball.
pub fn pushforward(mu: &AtomicMeasure, t: &LipschitzMap) -> Result<AtomicMeasure> {
    if mu.dim() != t.dim() {
        return Err(Error::DimensionMismatch { expected: t.dim(), got: mu.dim() });
    }
    let atoms = mu.atoms().iter().map(|a| Atom { location: t.apply(&a.location), weight: a.weight }).collect();
    AtomicMeasure::new(mu.dim(), atoms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormPair {
    /// `||mu||`.
    pub lhs: f64,
    /// `||T#mu||`.
    pub rhs: f64,
    pub ratio: f64,
}

impl NormPair {
    fn new(lhs: f64, rhs: f64) -> Result<Self> {
        if rhs == 0.0 && lhs != 0.0 {
            return Err(Error::DegenerateImage);
        }
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Ok(Self { lhs, rhs, ratio })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardReport {
    pub declared_l: f64,
    /// Both norms evaluated on the grid lattice.
    pub grid: NormPair,
    /// Pairwise energy norms, present for `p = 2`.
    pub energy: Option<NormPair>,
}

impl PushforwardReport {
    /// The `p = 2` energy ratio when available, the grid ratio otherwise.
    pub fn ratio(&self) -> f64 {
        self.energy.map_or(self.grid.ratio, |e| e.ratio)
    }
}

/// Compares `||mu||` with `||T#mu||` in `(L^{alpha,p})*`. For `p = 2` the
/// pairwise energy path runs as well, with the kernel sampled at the grid
/// spacing.
pub fn pushforward_dual_check(
    mu: &AtomicMeasure,
    t: &LipschitzMap,
    spec: &BesselSpec,
    grid: &UniformGrid,
) -> Result<PushforwardReport> {
    let p2 = spec.p == 2.0;
    if !p2 {
        spec.require_wolff_valid()?;
    }
    let image = pushforward(mu, t)?;
    let grid_pair = NormPair::new(dual_norm(mu, spec, grid)?, dual_norm(&image, spec, grid)?)?;
    let energy = if p2 {
        let h = grid.spacing()[0];
        Some(NormPair::new(
            energy_dual_norm_p2(mu, spec.alpha, h)?,
            energy_dual_norm_p2(&image, spec.alpha, h)?,
        )?)
    } else {
        None
    };
    Ok(PushforwardReport { declared_l: t.declared_l(), grid: grid_pair, energy })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms(delta: f64) -> AtomicMeasure {
        AtomicMeasure::new(
            1,
            vec![Atom { location: [-delta, 0.0, 0.0], weight: 1.0 }, Atom { location: [delta, 0.0, 0.0], weight: 2.0 }],
        )
        .unwrap()
    }

    #[test]
    fn identity_is_exact() {
        let mu = two_atoms(0.3);
        assert_eq!(pushforward(&mu, &LipschitzMap::identity(1).unwrap()).unwrap(), mu);
    }

    #[test]
    fn understated_constant_is_caught() {
        let err = LipschitzMap::new(2, 1.0, |x| x.map(|v| 2.0 * v)).unwrap_err();
        assert!(matches!(err, Error::LipschitzViolated { declared, sampled } if declared == 1.0 && sampled > 1.9));
    }

    #[test]
    fn collapsing_atoms_add_mass() {
        let mu = two_atoms(1e-3);
        let t = LipschitzMap::new(1, 1.0, |_| [0.0; 3]).unwrap();
        let img = pushforward(&mu, &t).unwrap();
        assert_eq!(img.ball_mass(&[0.0; 3], 0.0), 3.0);
    }

    #[test]
    fn halving_does_not_increase_the_p2_norm() {
        let spec = BesselSpec::new(1.0, 2.0, 1).unwrap();
        let grid = UniformGrid::cube(1, -30.0, 30.0, 6001).unwrap();
        let t = LipschitzMap::scaling(1, 0.5).unwrap();
        let r = pushforward_dual_check(&two_atoms(0.5), &t, &spec, &grid).unwrap();
        let e = r.energy.unwrap();
        assert!(e.ratio <= 1.0 + 1e-6, "{e:?}");
        assert!(r.grid.ratio <= 1.0 + 1e-3, "{r:?}");
    }
}
