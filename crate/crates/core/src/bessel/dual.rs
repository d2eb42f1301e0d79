use super::conv::{splat_nearest, ConvPlan};
use super::kernel::{bessel_kernel, kernel_half_nodes, SampledKernel};
use super::BesselSpec;
use crate::error::{Error, Result};
use crate::field::{distance, AtomicMeasure, DomainMask, GridFunction, SignedMeasure, UniformGrid};

/// Evaluates `||mu||_{(L^{alpha,p})*} = ||g_alpha * mu||_{L^p'(R^d)}` for
/// measures carried by a fixed source box. Atoms are moved to their nearest
/// node of the source grid, which mollifies point masses at the grid scale.
#[derive(Debug, Clone)]
pub struct DualNormOperator {
    spec: BesselSpec,
    source: UniformGrid,
    kernel: SampledKernel,
    plan: ConvPlan,
}

impl DualNormOperator {
    pub fn new(spec: BesselSpec, source: UniformGrid) -> Result<Self> {
        if source.dim() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: source.dim() });
        }
        let h = source.spacing()[0];
        if (0..source.dim()).any(|k| (source.spacing()[k] - h).abs() > 1e-12 * h) {
            return Err(Error::InvalidGrid("dual norms need equal spacing on all axes".into()));
        }
        let m = kernel_half_nodes(spec.alpha, spec.dim, h);
        let kernel = bessel_kernel(&spec, &UniformGrid::symmetric(spec.dim, m, h)?)?;
        let plan = ConvPlan::new(&source, &kernel)?;
        Ok(Self { spec, source, kernel, plan })
    }

    pub fn spec(&self) -> &BesselSpec {
        &self.spec
    }

    pub fn source(&self) -> &UniformGrid {
        &self.source
    }

    pub fn kernel(&self) -> &SampledKernel {
        &self.kernel
    }

    /// Radius of the kernel box.
    pub fn margin(&self) -> f64 {
        self.kernel.half_nodes() as f64 * self.kernel.spacing()
    }

    fn norm_of_masses(&self, masses: &[f64]) -> f64 {
        let out = self.plan.apply(masses);
        let q = self.spec.p_conj;
        let vol = self.source.cell_volume();
        let s: f64 = out.iter().map(|v| v.abs().powf(q)).sum();
        (s * vol).powf(1.0 / q)
    }

    pub fn norm(&self, mu: &AtomicMeasure) -> Result<f64> {
        if mu.is_empty() {
            return Ok(0.0);
        }
        let masses = splat_nearest(mu.atoms(), &self.source)?;
        Ok(self.norm_of_masses(&masses))
    }

    /// Norm of a signed measure, `||g * (mu+ - mu-)||_{p'}`.
    pub fn norm_signed(&self, mu: &SignedMeasure) -> Result<f64> {
        let masses = splat_nearest(mu.atoms.iter(), &self.source)?;
        Ok(self.norm_of_masses(&masses))
    }

    /// Norm of the density `v` on Omega (extended by zero), `v` given on the
    /// source grid.
    pub fn norm_of_density(&self, v: &GridFunction, mask: &DomainMask) -> Result<f64> {
        self.norm_signed(&SignedMeasure::from_density(v, mask))
    }

    /// Returns `2 (||v+||^2 + ||v-||^2)`, the bound on `||v||^2` obtained by
    /// splitting `v` into its positive and negative parts.
    pub fn split_bound_sq(&self, v: &GridFunction, mask: &DomainMask) -> Result<f64> {
        let (pos, neg) = SignedMeasure::from_density(v, mask).split();
        let a = self.norm(&pos)?;
        let b = self.norm(&neg)?;
        Ok(2.0 * (a * a + b * b))
    }
}

/// Dual norm of `mu` with the convolution evaluated on `grid`'s lattice.
/// Every atom must keep the kernel radius to the box boundary.
pub fn dual_norm(mu: &AtomicMeasure, spec: &BesselSpec, grid: &UniformGrid) -> Result<f64> {
    if mu.dim() != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: mu.dim() });
    }
    let Some((lo, hi)) = mu.bounding_box() else {
        return Ok(0.0);
    };
    let h = grid.spacing()[0];
    let radius = kernel_half_nodes(spec.alpha, spec.dim, h) as f64 * h;
    let up = grid.upper();
    let org = grid.origin();
    for a in mu.atoms() {
        for k in 0..grid.dim() {
            let x = a.location[k];
            if x < org[k] + radius || x > up[k] - radius {
                return Err(Error::AtomOutsideBox { location: a.location });
            }
        }
    }
    let d = grid.dim();
    let lo_idx = grid.nearest_node(&lo).ok_or(Error::AtomOutsideBox { location: lo })?;
    let hi_idx = grid.nearest_node(&hi).ok_or(Error::AtomOutsideBox { location: hi })?;
    let origin: Vec<f64> = (0..d).map(|k| org[k] + lo_idx[k] as f64 * grid.spacing()[k]).collect();
    let n: Vec<usize> = (0..d).map(|k| (hi_idx[k] - lo_idx[k] + 1).max(3)).collect();
    let extent: Vec<f64> = (0..d).map(|k| (n[k] - 1) as f64 * grid.spacing()[k]).collect();
    let source = UniformGrid::new(d, &origin, &extent, &n)?;
    DualNormOperator::new(*spec, source)?.norm(mu)
}

/// Pairwise evaluation of `sum_x sum_y w_x w_y g_{2 alpha}(x - y)` with a
/// radial profile of `g_{2 alpha}` sampled once along the grid diagonal.
#[derive(Debug, Clone)]
pub struct EnergyEvaluator {
    alpha: f64,
    dim: usize,
    step: f64,
    profile: Vec<f64>,
}

impl EnergyEvaluator {
    pub fn new(alpha: f64, dim: usize, spacing: f64) -> Result<Self> {
        let spec = BesselSpec::new(2.0 * alpha, 2.0, dim)?;
        let m = kernel_half_nodes(spec.alpha, dim, spacing);
        let kernel = bessel_kernel(&spec, &UniformGrid::symmetric(dim, m, spacing)?)?;
        let mut profile = kernel.diagonal_ray();
        // Radial monotone envelope; removes rounding-level wiggles only.
        for i in 1..profile.len() {
            profile[i] = profile[i].min(profile[i - 1]);
        }
        Ok(Self { alpha, dim, step: spacing * (dim as f64).sqrt(), profile })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `g_{2 alpha}(r)` by linear interpolation of the radial profile; zero past
    /// the kernel box.
    pub fn kernel_at(&self, r: f64) -> f64 {
        let t = r / self.step;
        let i = t.floor() as usize;
        if i + 1 >= self.profile.len() {
            return 0.0;
        }
        let f = t - i as f64;
        self.profile[i] * (1.0 - f) + self.profile[i + 1] * f
    }

    pub fn energy(&self, mu: &SignedMeasure) -> Result<f64> {
        if mu.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: mu.dim });
        }
        let mut e = 0.0;
        for a in &mu.atoms {
            for b in &mu.atoms {
                e += a.weight * b.weight * self.kernel_at(distance(&a.location, &b.location));
            }
        }
        Ok(e)
    }

    pub fn norm(&self, mu: &AtomicMeasure) -> Result<f64> {
        Ok(self.energy(&SignedMeasure::from(mu))?.max(0.0).sqrt())
    }
}

/// `sqrt(integral g_{2 alpha} * mu dmu)`, the `p = 2` dual norm without any
/// grid snapping of the atoms. `spacing` sets the kernel sampling.
pub fn energy_dual_norm_p2(mu: &AtomicMeasure, alpha: f64, spacing: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::BadAlpha(alpha));
    }
    if mu.is_empty() {
        return Ok(0.0);
    }
    EnergyEvaluator::new(alpha, mu.dim(), spacing)?.norm(mu)
}
