use nalgebra::{DMatrix, SymmetricEigen};

use super::levelset::LevelSetMesh;
use super::{fonc_residual, ControlField, StationaryPoint};
use crate::error::{Error, Result};
use crate::field::{distance, Atom, GridFunction, SignedMeasure};
use crate::pde::{Forcing, Linearization};

/// Piecewise constant density on the facets of a [`LevelSetMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceDensity {
    pub values: Vec<f64>,
}

impl SurfaceDensity {
    pub fn constant(mesh: &LevelSetMesh, c: f64) -> Self {
        Self { values: vec![c; mesh.facets.len()] }
    }

    pub fn l2_norm(&self, mesh: &LevelSetMesh) -> f64 {
        mesh.facets.iter().zip(&self.values).map(|(f, h)| f.weight * h * h).sum::<f64>().sqrt()
    }

    /// Atoms at the facet centroids with weights `weight * h`.
    pub fn as_measure(&self, mesh: &LevelSetMesh) -> SignedMeasure {
        let atoms = mesh
            .facets
            .iter()
            .zip(&self.values)
            .filter(|(_, &h)| h != 0.0)
            .map(|(f, &h)| Atom { location: f.centroid, weight: f.weight * h })
            .collect();
        SignedMeasure { dim: mesh.dim, atoms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderValue {
    /// `F''(ubar) mu_h^2`.
    pub hessian: f64,
    /// `int |grad phibar| / 2 h^2 dH^{d-1}`.
    pub surface: f64,
    pub total: f64,
}

fn check_density(mesh: &LevelSetMesh, h: &SurfaceDensity) -> Result<()> {
    if h.values.len() != mesh.facets.len() {
        return Err(Error::InvalidArgument(format!(
            "surface density has {} values for {} facets",
            h.values.len(),
            mesh.facets.len()
        )));
    }
    Ok(())
}

/// `int |grad phibar| / 2 h^2 dH^{d-1}` alone.
pub fn surface_term(mesh: &LevelSetMesh, h: &SurfaceDensity) -> Result<f64> {
    check_density(mesh, h)?;
    Ok(mesh.facets.iter().zip(&h.values).map(|(f, v)| f.weight * 0.5 * f.gradient * v * v).sum())
}

/// `Q(h) = F''(ubar) mu_h^2 + int |grad phibar| / 2 h^2 dH^{d-1}`.
pub fn second_order_form_at(lin: &Linearization<'_>, mesh: &LevelSetMesh, h: &SurfaceDensity) -> Result<SecondOrderValue> {
    let surface = surface_term(mesh, h)?;
    let mu = h.as_measure(mesh);
    let hessian = if mu.atoms.is_empty() { 0.0 } else { lin.hessian(Forcing::Atoms(&mu), Forcing::Atoms(&mu))? };
    Ok(SecondOrderValue { hessian, surface, total: hessian + surface })
}

pub fn second_order_form(sp: &StationaryPoint, mesh: &LevelSetMesh, h: &SurfaceDensity) -> Result<SecondOrderValue> {
    second_order_form_at(&sp.linearize()?, mesh, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SscVerdict {
    pub min_rayleigh: f64,
    pub positive: bool,
    pub basis_size: usize,
    pub facets: usize,
    /// Smallest `|grad phibar| / 2` over the facets.
    pub min_surface_weight: f64,
}

/// Facet indices chained by nearest centroids, starting from the
/// lexicographically smallest one, so contiguous runs are connected pieces.
fn chain_order(mesh: &LevelSetMesh) -> Vec<usize> {
    let n = mesh.facets.len();
    let c: Vec<_> = mesh.facets.iter().map(|f| f.centroid).collect();
    let mut start = 0;
    for i in 1..n {
        if c[i].partial_cmp(&c[start]) == Some(std::cmp::Ordering::Less) {
            start = i;
        }
    }
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    for _ in 0..n {
        used[cur] = true;
        order.push(cur);
        let mut best = None;
        let mut bd = f64::INFINITY;
        for j in 0..n {
            if !used[j] {
                let dj = distance(&c[cur], &c[j]);
                if dj < bd {
                    bd = dj;
                    best = Some(j);
                }
            }
        }
        match best {
            Some(j) => cur = j,
            None => break,
        }
    }
    order
}

/// Smallest eigenvalue of `Q` on the span of `basis_size` indicator
/// densities of contiguous facet groups, each normalized in
/// `L^2(H^{d-1})`. The basis is orthonormal, so this is the minimal Rayleigh
/// quotient `Q(h) / ||h||^2` over the span.
pub fn ssc_verdict(sp: &StationaryPoint, mesh: &LevelSetMesh, basis_size: usize) -> Result<SscVerdict> {
    let nf = mesh.facets.len();
    if basis_size == 0 {
        return Err(Error::InvalidArgument("basis_size must be positive".into()));
    }
    if basis_size > nf {
        return Err(Error::BasisTooLarge { basis_size, facets: nf });
    }
    let lin = sp.linearize()?;
    let order = chain_order(mesh);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); basis_size];
    for (pos, &f) in order.iter().enumerate() {
        groups[pos * basis_size / nf].push(f);
    }
    let mut zs = Vec::with_capacity(basis_size);
    let mut diag = Vec::with_capacity(basis_size);
    for g in &groups {
        let w: f64 = g.iter().map(|&f| mesh.facets[f].weight).sum();
        let scale = 1.0 / w.sqrt();
        let atoms = g
            .iter()
            .map(|&f| Atom { location: mesh.facets[f].centroid, weight: mesh.facets[f].weight * scale })
            .collect();
        let mu = SignedMeasure { dim: mesh.dim, atoms };
        zs.push(lin.solve(Forcing::Atoms(&mu))?);
        diag.push(g.iter().map(|&f| mesh.facets[f].weight * 0.5 * mesh.facets[f].gradient).sum::<f64>() / w);
    }
    let mut q = DMatrix::<f64>::zeros(basis_size, basis_size);
    for i in 0..basis_size {
        for j in 0..=i {
            let v = lin.hessian_of_solutions(&zs[i], &zs[j]);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
        q[(i, i)] += diag[i];
    }
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_rayleigh = SymmetricEigen::new(q).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let min_surface_weight = mesh.facets.iter().map(|f| 0.5 * f.gradient).fold(f64::INFINITY, f64::min);
    Ok(SscVerdict {
        min_rayleigh,
        positive: min_rayleigh > 1e-9 * (1.0 + scale),
        basis_size,
        facets: nf,
        min_surface_weight,
    })
}

/// `(2 / t^2) int |phibar t h|` when `ubar + t h` is feasible, infinity
/// otherwise.
pub fn subderivative_quotient(phibar: &GridFunction, ubar: &ControlField, t: f64, h: &GridFunction) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    let moved = ubar.field().zip_with(h, |u, v| u + t * v)?;
    let Ok(u) = ControlField::new(moved) else {
        return Ok(f64::INFINITY);
    };
    let r = fonc_residual(phibar, ubar, &u)?;
    Ok(2.0 * r.absolute / (t * t))
}
