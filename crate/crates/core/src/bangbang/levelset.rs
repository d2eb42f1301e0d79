use crate::error::{Error, Result};
use crate::field::{DomainMask, GridFunction, Point, UniformGrid};

/// One piece of the polygonized zero set: a point (d = 1), segment (d = 2) or
/// triangle (d = 3).
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub centroid: Point,
    /// `H^{d-1}` measure: 1 for points, length, or area.
    pub weight: f64,
    /// Unit normal pointing towards increasing `phibar`.
    pub normal: Point,
    /// `|grad phibar|` at the centroid.
    pub gradient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetMesh {
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub total_surface: f64,
    /// Structural threshold the mesh was checked against.
    pub kappa: f64,
    /// Interior nodes where `phibar` is exactly zero.
    pub zero_nodes: usize,
}

impl LevelSetMesh {
    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn min_gradient(&self) -> f64 {
        self.facets.iter().map(|f| f.gradient).fold(f64::INFINITY, f64::min)
    }

    pub fn max_gradient(&self) -> f64 {
        self.facets.iter().map(|f| f.gradient).fold(0.0, f64::max)
    }
}

fn diff(f: &GridFunction, idx: [usize; 3], axis: usize) -> f64 {
    let g = f.grid();
    let n = g.shape()[axis];
    let h = g.spacing()[axis];
    let at = |k: usize| {
        let mut j = idx;
        j[axis] = k;
        f.values()[g.flat_index(j)]
    };
    let i = idx[axis];
    if i == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if i + 1 == n {
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    }
}

/// Nodal gradients: central differences, second-order one-sided ones on the
/// box edge.
pub fn gradient_field(f: &GridFunction) -> Vec<Point> {
    let g = f.grid();
    (0..g.node_count())
        .map(|i| {
            let idx = g.multi_index(i);
            let mut p = [0.0; 3];
            for (k, pk) in p.iter_mut().enumerate().take(g.dim()) {
                *pk = diff(f, idx, k);
            }
            p
        })
        .collect()
}

/// Ten times the largest central-difference truncation estimate
/// `h^2 |f'''| / 6` (third differences), plus `1e-10 max |grad f|`.
pub fn default_kappa(f: &GridFunction) -> f64 {
    let g = f.grid();
    let grads = gradient_field(f);
    let gmax = grads.iter().map(norm).fold(0.0, f64::max);
    let mut trunc: f64 = 0.0;
    for i in 0..g.node_count() {
        let idx = g.multi_index(i);
        for k in 0..g.dim() {
            let n = g.shape()[k];
            if idx[k] < 2 || idx[k] + 2 >= n {
                continue;
            }
            let at = |o: i64| {
                let mut j = idx;
                j[k] = (idx[k] as i64 + o) as usize;
                f.values()[g.flat_index(j)]
            };
            let h = g.spacing()[k];
            let third = (at(2) - 2.0 * at(1) + 2.0 * at(-1) - at(-2)) / (2.0 * h * h * h);
            trunc = trunc.max(h * h * third.abs() / 6.0);
        }
    }
    10.0 * trunc + 1e-10 * gmax
}

fn norm(p: &Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Crossing of the zero level on the edge between two cell vertices; `at`
/// records the vertex when the crossing coincides with one.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    point: Point,
    at: Option<usize>,
}

struct Cell<'a> {
    grid: &'a UniformGrid,
    values: &'a [f64],
    grads: &'a [Point],
    /// Flat index of the lower corner.
    base: [usize; 3],
}

impl Cell<'_> {
    fn vertex(&self, bits: usize) -> usize {
        let mut j = self.base;
        for (k, jk) in j.iter_mut().enumerate().take(self.grid.dim()) {
            *jk += (bits >> k) & 1;
        }
        self.grid.flat_index(j)
    }

    fn crossing(&self, a: usize, b: usize) -> Crossing {
        let (fa, fb) = (self.values[a], self.values[b]);
        let t = fa / (fa - fb);
        let (pa, pb) = (self.grid.node(a), self.grid.node(b));
        let mut point = [0.0; 3];
        for k in 0..3 {
            point[k] = pa[k] + t * (pb[k] - pa[k]);
        }
        let at = if t == 0.0 {
            Some(a)
        } else if t == 1.0 {
            Some(b)
        } else {
            None
        };
        Crossing { point, at }
    }

    /// Multilinear interpolation of nodal gradients at `x`.
    fn gradient_at(&self, x: &Point) -> Point {
        let d = self.grid.dim();
        let o = self.grid.node(self.grid.flat_index(self.base));
        let h = self.grid.spacing();
        let s: Vec<f64> = (0..d).map(|k| ((x[k] - o[k]) / h[k]).clamp(0.0, 1.0)).collect();
        let mut out = [0.0; 3];
        for bits in 0..(1 << d) {
            let mut w = 1.0;
            for (k, sk) in s.iter().enumerate() {
                w *= if (bits >> k) & 1 == 1 { *sk } else { 1.0 - sk };
            }
            let gv = self.grads[self.vertex(bits)];
            for k in 0..3 {
                out[k] += w * gv[k];
            }
        }
        out
    }
}

fn cells_in_closure(mask: &DomainMask) -> Vec<[usize; 3]> {
    let g = mask.grid();
    let d = g.dim();
    let n = g.shape();
    let mut out = Vec::new();
    for i in 0..g.node_count() {
        let idx = g.multi_index(i);
        if (0..d).any(|k| idx[k] + 1 >= n[k]) {
            continue;
        }
        let any_inside = (0..1usize << d).any(|bits| {
            let mut j = idx;
            for (k, jk) in j.iter_mut().enumerate().take(d) {
                *jk += (bits >> k) & 1;
            }
            mask.is_inside(g.flat_index(j))
        });
        if any_inside {
            out.push(idx);
        }
    }
    out
}

/// Six tetrahedra of a cube sharing its main diagonal, as vertex bit masks.
const KUHN: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

/// Polygonizes `{phibar = 0}` over the cells touching the interior of the
/// mask, with `0` classified as positive. Pieces lying entirely on
/// non-interior nodes (the Dirichlet boundary) are dropped. Every facet
/// gradient, and the gradient at every interior node where `phibar` vanishes
/// exactly, must reach `kappa` (default [`default_kappa`]).
pub fn extract_zero_level_set(
    phibar: &GridFunction,
    mask: &DomainMask,
    kappa: Option<f64>,
) -> Result<LevelSetMesh> {
    let g = phibar.grid();
    if g != mask.grid() {
        return Err(Error::InvalidArgument("adjoint and mask live on different grids".into()));
    }
    let d = g.dim();
    let kappa = kappa.unwrap_or_else(|| default_kappa(phibar));
    let grads = gradient_field(phibar);
    let values = phibar.values();
    let boundary = |c: &Crossing| c.at.is_some_and(|v| !mask.is_inside(v));
    let mut facets = Vec::new();

    let mut push = |cell: &Cell<'_>, pts: &[Crossing]| {
        if pts.iter().all(boundary) {
            return;
        }
        let (centroid, weight, geo_normal) = match d {
            1 => (pts[0].point, 1.0, [1.0, 0.0, 0.0]),
            2 => {
                let (a, b) = (pts[0].point, pts[1].point);
                let t = sub(&b, &a);
                let len = norm(&t);
                ([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, 0.0], len, [-t[1], t[0], 0.0])
            }
            _ => {
                let (a, b, c) = (pts[0].point, pts[1].point, pts[2].point);
                let n = cross(&sub(&b, &a), &sub(&c, &a));
                let mut m = [0.0; 3];
                for k in 0..3 {
                    m[k] = (a[k] + b[k] + c[k]) / 3.0;
                }
                (m, 0.5 * norm(&n), n)
            }
        };
        if !(weight > 0.0) {
            return;
        }
        let grad = cell.gradient_at(&centroid);
        let mut normal = geo_normal;
        let nn = norm(&normal);
        for v in normal.iter_mut() {
            *v /= nn;
        }
        if dot(&normal, &grad) < 0.0 {
            for v in normal.iter_mut() {
                *v = -*v;
            }
        }
        facets.push(Facet { centroid, weight, normal, gradient: norm(&grad) });
    };

    for base in cells_in_closure(mask) {
        let cell = Cell { grid: g, values, grads: &grads, base };
        let pos = |v: usize| values[v] >= 0.0;
        match d {
            1 => {
                let (a, b) = (cell.vertex(0), cell.vertex(1));
                if pos(a) != pos(b) {
                    push(&cell, &[cell.crossing(a, b)]);
                }
            }
            2 => {
                let v = [cell.vertex(0), cell.vertex(1), cell.vertex(3), cell.vertex(2)];
                let edges = [(v[0], v[1]), (v[1], v[2]), (v[2], v[3]), (v[3], v[0])];
                let cut: Vec<usize> = (0..4).filter(|&e| pos(edges[e].0) != pos(edges[e].1)).collect();
                let x = |e: usize| cell.crossing(edges[e].0, edges[e].1);
                match cut.len() {
                    2 => push(&cell, &[x(cut[0]), x(cut[1])]),
                    4 => {
                        let centre = 0.25 * v.iter().map(|&i| values[i]).sum::<f64>();
                        if (centre >= 0.0) == pos(v[0]) {
                            push(&cell, &[x(0), x(1)]);
                            push(&cell, &[x(2), x(3)]);
                        } else {
                            push(&cell, &[x(3), x(0)]);
                            push(&cell, &[x(1), x(2)]);
                        }
                    }
                    _ => {}
                }
            }
            _ => {
                for tet in KUHN {
                    let v: Vec<usize> = tet.iter().map(|&b| cell.vertex(b)).collect();
                    let (p, n): (Vec<usize>, Vec<usize>) = v.iter().partition(|&&i| pos(i));
                    match (p.len(), n.len()) {
                        (1, 3) | (3, 1) => {
                            let (lone, rest) = if p.len() == 1 { (p[0], &n) } else { (n[0], &p) };
                            let pts: Vec<Crossing> = rest.iter().map(|&r| cell.crossing(lone, r)).collect();
                            push(&cell, &pts);
                        }
                        (2, 2) => {
                            let (a, b, c, e) = (p[0], p[1], n[0], n[1]);
                            let (ac, ae, be, bc) =
                                (cell.crossing(a, c), cell.crossing(a, e), cell.crossing(b, e), cell.crossing(b, c));
                            push(&cell, &[ac, ae, be]);
                            push(&cell, &[ac, be, bc]);
                        }
                        _ => {}
                    }
                }
            }
        }
    }

    for f in &facets {
        if f.gradient < kappa {
            return Err(Error::StructuralAssumptionViolated { location: f.centroid, gradient: f.gradient, kappa });
        }
    }
    let mut zero_nodes = 0;
    for i in mask.interior_nodes() {
        if values[i] == 0.0 {
            zero_nodes += 1;
            let gr = norm(&grads[i]);
            if gr < kappa {
                return Err(Error::StructuralAssumptionViolated { location: g.node(i), gradient: gr, kappa });
            }
        }
    }
    let total_surface = facets.iter().map(|f| f.weight).sum();
    Ok(LevelSetMesh { dim: d, facets, total_surface, kappa, zero_nodes })
}

/// Fraction of a simplex where a linear function is `<= c`, from its vertex
/// values.
fn sublevel_fraction(vals: &[f64], c: f64) -> f64 {
    let (lo, hi): (Vec<f64>, Vec<f64>) = vals.iter().partition(|&&v| v <= c);
    let d = vals.len() - 1;
    if hi.is_empty() {
        return 1.0;
    }
    if lo.is_empty() {
        return 0.0;
    }
    let corner = |apex: f64, others: &[f64]| others.iter().map(|&o| (c - apex) / (o - apex)).product::<f64>();
    match (d, lo.len()) {
        (1, _) => (c - lo[0]) / (hi[0] - lo[0]),
        (_, 1) => corner(lo[0], &hi),
        (2, 2) | (3, 3) => 1.0 - corner(hi[0], &lo),
        _ => {
            // Tetrahedron with two vertices on each side: the sublevel set is a
            // wedge, split into three tetrahedra in reference coordinates.
            let ref_pts: [Point; 4] = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            let order: Vec<usize> = {
                let mut below: Vec<usize> = (0..4).filter(|&i| vals[i] <= c).collect();
                let above: Vec<usize> = (0..4).filter(|&i| vals[i] > c).collect();
                below.extend(above);
                below
            };
            let (a, b, p, q) = (order[0], order[1], order[2], order[3]);
            let cut = |i: usize, j: usize| {
                let t = (c - vals[i]) / (vals[j] - vals[i]);
                let mut x = [0.0; 3];
                for k in 0..3 {
                    x[k] = ref_pts[i][k] + t * (ref_pts[j][k] - ref_pts[i][k]);
                }
                x
            };
            let (ap, aq, bp, bq) = (cut(a, p), cut(a, q), cut(b, p), cut(b, q));
            let (pa, pb) = (ref_pts[a], ref_pts[b]);
            let vol = |w: Point, x: Point, y: Point, z: Point| dot(&sub(&x, &w), &cross(&sub(&y, &w), &sub(&z, &w))).abs();
            vol(pa, ap, aq, pb) + vol(ap, aq, pb, bq) + vol(ap, pb, bp, bq)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureBound {
    pub eps: Vec<f64>,
    /// `lambda^d({|phibar| <= eps}) / eps` per entry of `eps`.
    pub ratios: Vec<f64>,
    /// Largest ratio.
    pub constant: f64,
}

/// `max_eps lambda^d(closure(Omega) cap {|phibar| <= eps}) / eps`, with the
/// band measured exactly for the piecewise-linear interpolant of `phibar`
/// on a simplicial split of the cells touching the interior.
pub fn measure_bound_constant(phibar: &GridFunction, mask: &DomainMask, eps: &[f64]) -> Result<MeasureBound> {
    let g = phibar.grid();
    if g != mask.grid() {
        return Err(Error::InvalidArgument("adjoint and mask live on different grids".into()));
    }
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("eps list must be nonempty and positive".into()));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("eps list must be decreasing".into()));
    }
    let d = g.dim();
    let vol = g.cell_volume();
    let simplices: Vec<Vec<usize>> = match d {
        1 => vec![vec![0, 1]],
        2 => vec![vec![0, 1, 3], vec![0, 2, 3]],
        _ => KUHN.iter().map(|t| t.to_vec()).collect(),
    };
    let simplex_vol = vol / simplices.len() as f64;
    let cells = cells_in_closure(mask);
    let mut ratios = Vec::with_capacity(eps.len());
    for &e in eps {
        let mut area = 0.0;
        for &base in &cells {
            let cell = Cell { grid: g, values: phibar.values(), grads: &[], base };
            for s in &simplices {
                let vals: Vec<f64> = s.iter().map(|&b| phibar.values()[cell.vertex(b)]).collect();
                area += simplex_vol * (sublevel_fraction(&vals, e) - sublevel_fraction(&vals, -e));
            }
        }
        ratios.push(area / e);
    }
    let constant = ratios.iter().copied().fold(0.0, f64::max);
    Ok(MeasureBound { eps: eps.to_vec(), ratios, constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sublevel_fraction_matches_sampling() {
        let cases: [&[f64]; 4] = [&[0.0, 1.0], &[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0, 3.0], &[3.0, -1.0, 0.5, 2.0]];
        for vals in cases {
            let d = vals.len() - 1;
            for c in [-0.5, 0.25, 0.75, 1.5, 2.5] {
                // Monte Carlo-free check: fine barycentric lattice.
                let m = 60;
                let (mut hit, mut tot) = (0.0, 0.0);
                let mut visit = |b: &[f64]| {
                    let f: f64 = b.iter().zip(vals.iter()).map(|(x, v)| x * v).sum();
                    tot += 1.0;
                    if f <= c {
                        hit += 1.0;
                    }
                };
                for i in 0..m {
                    for j in 0..(if d >= 2 { m - i } else { 1 }) {
                        for k in 0..(if d >= 3 { m - i - j } else { 1 }) {
                            let x = (i as f64 + 0.25) / m as f64;
                            let y = if d >= 2 { (j as f64 + 0.25) / m as f64 } else { 0.0 };
                            let z = if d >= 3 { (k as f64 + 0.25) / m as f64 } else { 0.0 };
                            let w0 = 1.0 - x - y - z;
                            let b = [w0, x, y, z];
                            if w0 >= 0.0 {
                                visit(&b[..=d]);
                            }
                        }
                    }
                }
                let exact = sublevel_fraction(vals, c);
                assert!((hit / tot - exact).abs() < 0.06, "{vals:?} c={c}: {} vs {exact}", hit / tot);
            }
        }
    }

    #[test]
    fn tetra_fractions_are_complementary() {
        let vals = [0.3, -0.7, 1.1, 0.05];
        for c in [-0.2, 0.1, 0.2, 0.6] {
            let lo = sublevel_fraction(&vals, c);
            let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
            let hi = sublevel_fraction(&neg, -c);
            assert!((lo + hi - 1.0).abs() < 1e-12, "{c}: {lo} + {hi}");
        }
    }
}
