//! Uniform grids on boxes, scalar grid functions, atomic measures and the
//! shared quadrature rule.
//!
//! Grids are node-centred with inclusive endpoints. Every node owns the part
//! of its dual cell (the box of side `spacing` centred at the node) that lies
//! inside the grid box, so edge nodes carry half weight per clipped axis. All
//! integrals in the crate use these node weights, which makes the constant
//! function integrate exactly to the box volume.

use std::io::{BufRead, Write};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A point in R^d stored in three slots; unused trailing slots are zero.
pub type Point = [f64; 3];

pub const MAX_DIM: usize = 3;

pub fn distance(a: &Point, b: &Point) -> f64 {
    let mut s = 0.0;
    for k in 0..MAX_DIM {
        let d = a[k] - b[k];
        s += d * d;
    }
    s.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    dim: usize,
    origin: Point,
    spacing: [f64; 3],
    n: [usize; 3],
}

impl UniformGrid {
    /// Grid with `n[k]` nodes spanning `[origin[k], origin[k] + extent[k]]`.
    pub fn new(dim: usize, origin: &[f64], extent: &[f64], n: &[usize]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dim {dim} not in 1..=3")));
        }
        if origin.len() != dim || extent.len() != dim || n.len() != dim {
            return Err(Error::InvalidGrid(
                "origin, extent and n must all have length dim".into(),
            ));
        }
        let mut o = [0.0; 3];
        let mut h = [0.0; 3];
        let mut nn = [1usize; 3];
        for k in 0..dim {
            if n[k] < 3 {
                return Err(Error::InvalidGrid(format!("axis {k}: need n >= 3, got {}", n[k])));
            }
            if !(extent[k] > 0.0) || !extent[k].is_finite() || !origin[k].is_finite() {
                return Err(Error::InvalidGrid(format!("axis {k}: bad extent {}", extent[k])));
            }
            o[k] = origin[k];
            nn[k] = n[k];
            h[k] = extent[k] / (n[k] - 1) as f64;
        }
        Ok(Self { dim, origin: o, spacing: h, n: nn })
    }

    /// `[0,1]^dim` with `n` nodes per axis.
    pub fn unit_box(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, &vec![0.0; dim], &vec![1.0; dim], &vec![n; dim])
    }

    /// Box `[lo, hi]^dim` with `n` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(dim, &vec![lo; dim], &vec![hi - lo; dim], &vec![n; dim])
    }

    /// Grid with the given spacing covering `[lo_k, hi_k]` per axis, with the
    /// origin snapped to an integer multiple of the spacing so that grids built
    /// this way with equal spacing share nodes.
    pub fn covering(dim: usize, lo: &[f64], hi: &[f64], spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing {spacing}")));
        }
        let mut origin = vec![0.0; dim];
        let mut extent = vec![0.0; dim];
        let mut n = vec![0usize; dim];
        for k in 0..dim {
            let i0 = (lo[k] / spacing).floor();
            let i1 = (hi[k] / spacing).ceil();
            let cells = ((i1 - i0) as usize).max(2);
            origin[k] = i0 * spacing;
            n[k] = cells + 1;
            extent[k] = cells as f64 * spacing;
        }
        Self::new(dim, &origin, &extent, &n)
    }

    /// Grid symmetric about the origin with `2 m + 1` nodes per axis.
    pub fn symmetric(dim: usize, half_nodes: usize, spacing: f64) -> Result<Self> {
        let m = half_nodes.max(1);
        let ext = 2.0 * m as f64 * spacing;
        Self::new(dim, &vec![-(m as f64) * spacing; dim], &vec![ext; dim], &vec![2 * m + 1; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn shape(&self) -> [usize; 3] {
        self.n
    }

    pub fn extent(&self) -> [f64; 3] {
        let mut e = [0.0; 3];
        for k in 0..self.dim {
            e[k] = self.spacing[k] * (self.n[k] - 1) as f64;
        }
        e
    }

    pub fn upper(&self) -> Point {
        let e = self.extent();
        let mut u = [0.0; 3];
        for k in 0..self.dim {
            u[k] = self.origin[k] + e[k];
        }
        u
    }

    pub fn node_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Volume of a full cell, `prod h_k`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.extent()[..self.dim].iter().product()
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        idx[0] + self.n[0] * (idx[1] + self.n[1] * idx[2])
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let i0 = flat % self.n[0];
        let r = flat / self.n[0];
        [i0, r % self.n[1], r / self.n[1]]
    }

    pub fn node(&self, flat: usize) -> Point {
        self.node_at(self.multi_index(flat))
    }

    pub fn node_at(&self, idx: [usize; 3]) -> Point {
        let mut p = [0.0; 3];
        for k in 0..self.dim {
            p[k] = self.origin[k] + idx[k] as f64 * self.spacing[k];
        }
        p
    }

    /// Quadrature weight of a node: its dual cell clipped to the box.
    pub fn node_weight(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let mut w = 1.0;
        for k in 0..self.dim {
            let edge = idx[k] == 0 || idx[k] + 1 == self.n[k];
            w *= if edge { 0.5 * self.spacing[k] } else { self.spacing[k] };
        }
        w
    }

    pub fn is_box_edge(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim).any(|k| idx[k] == 0 || idx[k] + 1 == self.n[k])
    }

    /// Nearest node to `p`, or `None` when `p` lies more than half a cell
    /// outside the box.
    pub fn nearest_node(&self, p: &Point) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for k in 0..self.dim {
            let t = ((p[k] - self.origin[k]) / self.spacing[k]).round();
            if t < 0.0 || t > (self.n[k] - 1) as f64 {
                return None;
            }
            idx[k] = t as usize;
        }
        Some(idx)
    }

    pub fn contains(&self, p: &Point) -> bool {
        let up = self.upper();
        (0..self.dim).all(|k| p[k] >= self.origin[k] && p[k] <= up[k])
    }

    /// Flat indices of the axis neighbours of a node that exist on the grid.
    pub fn neighbors(&self, flat: usize) -> impl Iterator<Item = usize> + '_ {
        let idx = self.multi_index(flat);
        (0..self.dim).flat_map(move |k| {
            let mut out = [None, None];
            if idx[k] > 0 {
                let mut j = idx;
                j[k] -= 1;
                out[0] = Some(self.flat_index(j));
            }
            if idx[k] + 1 < self.n[k] {
                let mut j = idx;
                j[k] += 1;
                out[1] = Some(self.flat_index(j));
            }
            out.into_iter().flatten()
        })
    }

    /// Flat indices of all nodes within one step in every axis (the node
    /// itself included).
    pub fn box_neighbors(&self, flat: usize) -> Vec<usize> {
        let idx = self.multi_index(flat);
        let mut out = vec![idx];
        for k in 0..self.dim {
            let prev = std::mem::take(&mut out);
            for j in prev {
                for delta in [-1i64, 0, 1] {
                    let v = j[k] as i64 + delta;
                    if v >= 0 && (v as usize) < self.n[k] {
                        let mut jj = j;
                        jj[k] = v as usize;
                        out.push(jj);
                    }
                }
            }
        }
        out.into_iter().map(|j| self.flat_index(j)).collect()
    }

    pub fn same_spacing(&self, other: &UniformGrid) -> bool {
        self.dim == other.dim
            && (0..self.dim).all(|k| {
                (self.spacing[k] - other.spacing[k]).abs() <= 1e-12 * self.spacing[k]
            })
    }
}

/// Scalar values attached to every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        Self { grid, values: vec![0.0; grid.node_count()] }
    }

    pub fn constant(grid: UniformGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.node_count()] }
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.node_count()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("grid functions live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    /// `sum_i w_i f_i` with the shared node weights.
    pub fn integral(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| v * self.grid.node_weight(i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes `index_0,...,index_{d-1},value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.grid.dim();
        let header: Vec<String> = (0..d).map(|k| format!("index_{k}")).collect();
        writeln!(w, "{},value", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let idx = self.grid.multi_index(i);
            for k in 0..d {
                write!(w, "{},", idx[k])?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`GridFunction::write_csv`] onto `grid`.
    /// Nodes absent from the file are zero.
    pub fn read_csv<R: BufRead>(grid: UniformGrid, r: R) -> Result<Self> {
        let d = grid.dim();
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty csv".into()))?
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let expected: Vec<String> =
            (0..d).map(|k| format!("index_{k}")).chain(std::iter::once("value".into())).collect();
        if header.trim() != expected.join(",") {
            return Err(Error::InvalidArgument(format!("unexpected header {header:?}")));
        }
        let mut f = GridFunction::zeros(grid);
        for line in lines {
            let line = line.map_err(|e| Error::InvalidArgument(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != d + 1 {
                return Err(Error::InvalidArgument(format!("bad row {line:?}")));
            }
            let mut idx = [0usize; 3];
            for k in 0..d {
                idx[k] = cols[k]
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad index in {line:?}")))?;
                if idx[k] >= grid.shape()[k] {
                    return Err(Error::InvalidArgument(format!("index out of range in {line:?}")));
                }
            }
            let v: f64 = cols[d]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value in {line:?}")))?;
            let flat = grid.flat_index(idx);
            f.values[flat] = v;
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Point,
    pub weight: f64,
}

/// Finite nonnegative measure made of weighted point atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dim {dim}")));
        }
        for a in &atoms {
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(Error::NegativeWeight(a.weight));
            }
        }
        Ok(Self { dim, atoms })
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, atoms: Vec::new() }
    }

    pub fn dirac(dim: usize, location: Point, weight: f64) -> Result<Self> {
        Self::new(dim, vec![Atom { location, weight }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `t * mu` for `t >= 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.atoms.iter().map(|a| Atom { location: a.location, weight: t * a.weight }).collect(),
        )
    }

    /// Sum of two measures (atoms concatenated).
    pub fn plus(&self, other: &AtomicMeasure) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        Ok(Self { dim: self.dim, atoms })
    }

    pub fn translated(&self, shift: &Point) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                let mut p = a.location;
                for k in 0..self.dim {
                    p[k] += shift[k];
                }
                Atom { location: p, weight: a.weight }
            })
            .collect();
        Self { dim: self.dim, atoms }
    }

    /// Axis-aligned bounding box of the atom locations.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let first = self.atoms.first()?;
        let mut lo = first.location;
        let mut hi = first.location;
        for a in &self.atoms {
            for k in 0..self.dim {
                lo[k] = lo[k].min(a.location[k]);
                hi[k] = hi[k].max(a.location[k]);
            }
        }
        Some((lo, hi))
    }

    /// Mass of the closed ball `B_r(x)`.
    pub fn ball_mass(&self, x: &Point, r: f64) -> f64 {
        self.atoms.iter().filter(|a| distance(&a.location, x) <= r).map(|a| a.weight).sum()
    }
}

/// `count` measures with `1..=max_atoms` atoms each, locations uniform in
/// `[0, 1]^dim` and weights uniform in `[0, 1)`. Per measure the draws are:
/// atom count, then per atom the coordinates followed by the weight.
pub fn random_measures(dim: usize, count: usize, max_atoms: usize, rng: &mut Rng) -> Result<Vec<AtomicMeasure>> {
    if max_atoms == 0 {
        return Err(Error::InvalidArgument("max_atoms must be positive".into()));
    }
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_atoms);
            let atoms = (0..n)
                .map(|_| {
                    let mut location = [0.0; 3];
                    for v in location.iter_mut().take(dim) {
                        *v = rng.gen_range(0.0..1.0);
                    }
                    Atom { location, weight: rng.gen_range(0.0..1.0) }
                })
                .collect();
            AtomicMeasure::new(dim, atoms)
        })
        .collect()
}

/// Signed point masses; used for directions and differences of measures.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    pub dim: usize,
    pub atoms: Vec<Atom>,
}

impl SignedMeasure {
    pub fn from_density(f: &GridFunction, mask: &DomainMask) -> Self {
        let g = f.grid();
        let atoms = (0..g.node_count())
            .filter(|&i| mask.in_closure(i))
            .map(|i| Atom { location: g.node(i), weight: f.values()[i] * g.node_weight(i) })
            .collect();
        Self { dim: g.dim(), atoms }
    }

    /// Splits into `(mu_plus, mu_minus)` with `self = mu_plus - mu_minus`.
    pub fn split(&self) -> (AtomicMeasure, AtomicMeasure) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for a in &self.atoms {
            if a.weight > 0.0 {
                pos.push(*a);
            } else if a.weight < 0.0 {
                neg.push(Atom { location: a.location, weight: -a.weight });
            }
        }
        (AtomicMeasure { dim: self.dim, atoms: pos }, AtomicMeasure { dim: self.dim, atoms: neg })
    }
}

impl From<&AtomicMeasure> for SignedMeasure {
    fn from(m: &AtomicMeasure) -> Self {
        Self { dim: m.dim, atoms: m.atoms.clone() }
    }
}

/// Omega as a set of interior nodes inside a box grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: UniformGrid,
    inside: Vec<bool>,
    closure: Vec<bool>,
}

impl DomainMask {
    pub fn new(grid: UniformGrid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.node_count() {
            return Err(Error::InvalidMask("flag count differs from node count".into()));
        }
        if !inside.iter().any(|&b| b) {
            return Err(Error::InvalidMask("no interior node".into()));
        }
        for (i, &b) in inside.iter().enumerate() {
            if b && grid.is_box_edge(i) {
                return Err(Error::InvalidMask(format!("interior node {i} lies on the box edge")));
            }
        }
        let mut closure = inside.clone();
        for (i, &b) in inside.iter().enumerate() {
            if b {
                for j in grid.box_neighbors(i) {
                    closure[j] = true;
                }
            }
        }
        Ok(Self { grid, inside, closure })
    }

    /// Every node off the box edge is interior.
    pub fn box_interior(grid: UniformGrid) -> Result<Self> {
        let inside = (0..grid.node_count()).map(|i| !grid.is_box_edge(i)).collect();
        Self::new(grid, inside)
    }

    pub fn from_predicate(grid: UniformGrid, pred: impl Fn(&Point) -> bool) -> Result<Self> {
        let inside =
            (0..grid.node_count()).map(|i| !grid.is_box_edge(i) && pred(&grid.node(i))).collect();
        Self::new(grid, inside)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn is_inside(&self, i: usize) -> bool {
        self.inside[i]
    }

    /// Node of a grid cell that has an interior vertex.
    pub fn in_closure(&self, i: usize) -> bool {
        self.closure[i]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn interior_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }
}

/// One atom per node of the closure of Omega with weight `f(node) * w_node`.
pub fn measure_from_density(f: &GridFunction, mask: &DomainMask) -> Result<AtomicMeasure> {
    if f.grid() != mask.grid() {
        return Err(Error::InvalidArgument("density and mask on different grids".into()));
    }
    let g = f.grid();
    let mut atoms = Vec::with_capacity(g.node_count());
    for i in 0..g.node_count() {
        if !mask.in_closure(i) {
            continue;
        }
        let v = f.values()[i];
        if v < 0.0 {
            return Err(Error::NegativeDensity { node: i, value: v });
        }
        atoms.push(Atom { location: g.node(i), weight: v * g.node_weight(i) });
    }
    AtomicMeasure::new(g.dim(), atoms)
}

/// Discrete `L^q` norm with the shared node weights; `q = f64::INFINITY`
/// gives the max norm.
pub fn lp_norm(f: &GridFunction, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::BadExponent(q));
    }
    if q.is_infinite() {
        return Ok(f.max_abs());
    }
    let g = f.grid();
    let s: f64 = f.values().iter().enumerate().map(|(i, v)| v.abs().powf(q) * g.node_weight(i)).sum();
    Ok(s.powf(1.0 / q))
}

/// `sum_i w_i f_i g_i` over the whole grid.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::InvalidArgument("grid functions live on different grids".into()));
    }
    let grid = f.grid();
    Ok(f.values().iter().zip(g.values()).enumerate().map(|(i, (a, b))| a * b * grid.node_weight(i)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_has_zero_mass() {
        let g = UniformGrid::unit_box(2, 11).unwrap();
        let mask = DomainMask::box_interior(g).unwrap();
        let mu = measure_from_density(&GridFunction::zeros(g), &mask).unwrap();
        assert_eq!(mu.total_mass(), 0.0);
    }

    #[test]
    fn constant_density_mass_is_box_volume() {
        let g = UniformGrid::unit_box(2, 11).unwrap();
        let mask = DomainMask::box_interior(g).unwrap();
        let mu = measure_from_density(&GridFunction::constant(g, 1.0), &mask).unwrap();
        assert!((mu.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn linear_density_on_interval() {
        let g = UniformGrid::unit_box(1, 101).unwrap();
        let mask = DomainMask::box_interior(g).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0]);
        let mu = measure_from_density(&f, &mask).unwrap();
        assert!((mu.total_mass() - 0.5).abs() <= 1e-4);
    }

    #[test]
    fn negative_density_is_rejected() {
        let g = UniformGrid::unit_box(1, 11).unwrap();
        let mask = DomainMask::box_interior(g).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] - 0.5);
        assert!(matches!(measure_from_density(&f, &mask), Err(Error::NegativeDensity { .. })));
    }

    #[test]
    fn lp_norm_examples() {
        let g = UniformGrid::unit_box(2, 21).unwrap();
        let c = GridFunction::constant(g, -3.0);
        for q in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&c, q).unwrap() - 3.0).abs() < 1e-12);
        }
        let g1 = UniformGrid::unit_box(1, 101).unwrap();
        let f = GridFunction::from_fn(g1, |x| x[0] - 0.5);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 0.5);
        let g2 = UniformGrid::unit_box(1, 201).unwrap();
        let s = GridFunction::from_fn(g2, |x| (std::f64::consts::PI * x[0]).sin());
        assert!((lp_norm(&s, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-4);
        assert_eq!(lp_norm(&s, 0.5), Err(Error::BadExponent(0.5)));
    }

    #[test]
    fn grid_rejects_too_few_nodes() {
        assert!(UniformGrid::unit_box(2, 2).is_err());
        assert!(UniformGrid::unit_box(4, 5).is_err());
    }

    #[test]
    fn node_positions_are_exact() {
        let g = UniformGrid::new(2, &[-1.0, 2.0], &[2.0, 1.0], &[5, 3]).unwrap();
        let p = g.node_at([4, 2, 0]);
        assert_eq!(p, [1.0, 3.0, 0.0]);
        assert_eq!(g.multi_index(g.flat_index([3, 1, 0])), [3, 1, 0]);
    }

    #[test]
    fn mask_rejects_edge_nodes() {
        let g = UniformGrid::unit_box(1, 5).unwrap();
        assert!(DomainMask::new(g, vec![true, true, true, true, false]).is_err());
        assert!(DomainMask::new(g, vec![false; 5]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let g = UniformGrid::unit_box(2, 4).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * 3.0 - x[1] / 7.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index_0,index_1,value\n"));
        let back = GridFunction::read_csv(g, &buf[..]).unwrap();
        assert_eq!(back, f);
    }
}
