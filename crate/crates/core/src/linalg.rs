//! Sparse symmetric systems on the interior nodes of a domain mask.

use crate::error::{Error, Result};
use crate::field::DomainMask;

const NONE: usize = usize::MAX;

/// Interior-node numbering and the 3/5/7-point negative Laplacian with
/// homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    /// Grid flat index of each unknown.
    pub nodes: Vec<usize>,
    /// Unknown index of each grid node, `NONE` off the interior.
    index: Vec<usize>,
    /// Interior neighbours of each unknown with their (negative) coupling.
    pub nbrs: Vec<Vec<(usize, f64)>>,
    /// Laplacian diagonal `sum_k 2 / h_k^2`.
    pub diag: f64,
    /// Largest `|i - j|` over coupled unknowns.
    pub bandwidth: usize,
}

impl Stencil {
    pub fn new(mask: &DomainMask) -> Self {
        let g = mask.grid();
        let nodes: Vec<usize> = mask.interior_nodes().collect();
        let mut index = vec![NONE; g.node_count()];
        for (k, &i) in nodes.iter().enumerate() {
            index[i] = k;
        }
        let sp = g.spacing();
        let diag: f64 = (0..g.dim()).map(|k| 2.0 / (sp[k] * sp[k])).sum();
        let mut bandwidth = 0;
        let nbrs = nodes
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let idx = g.multi_index(i);
                let mut out = Vec::with_capacity(2 * g.dim());
                for ax in 0..g.dim() {
                    let c = -1.0 / (sp[ax] * sp[ax]);
                    for up in [false, true] {
                        let mut j = idx;
                        j[ax] = if up { j[ax] + 1 } else { j[ax] - 1 };
                        let u = index[g.flat_index(j)];
                        if u != NONE {
                            bandwidth = bandwidth.max(k.abs_diff(u));
                            out.push((u, c));
                        }
                    }
                }
                out
            })
            .collect();
        Self { nodes, index, nbrs, diag, bandwidth }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn unknown(&self, flat: usize) -> Option<usize> {
        let u = self.index[flat];
        (u != NONE).then_some(u)
    }

    /// `(-Delta_h + diag(c)) x`.
    pub fn apply(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let mut s = (self.diag + c[k]) * x[k];
                for &(j, w) in &self.nbrs[k] {
                    s += w * x[j];
                }
                s
            })
            .collect()
    }
}

/// Cholesky factor of a symmetric banded matrix, rows stored with `b + 1`
/// entries ending on the diagonal.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    n: usize,
    b: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    fn factor(st: &Stencil, c: &[f64]) -> Result<Self> {
        let n = st.len();
        let b = st.bandwidth;
        let w = b + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            l[i * w + b] = st.diag + c[i];
            for &(j, v) in &st.nbrs[i] {
                if j < i {
                    l[i * w + b - (i - j)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let kmin = lo.max(j.saturating_sub(b));
                let mut s = l[i * w + b - (i - j)];
                let ri = i * w + b - i;
                let rj = j * w + b - j;
                for k in kmin..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::LinearSolveFailed(format!("matrix not positive definite at row {i}")));
                    }
                    l[i * w + b] = s.sqrt();
                } else {
                    l[i * w + b - (i - j)] = s / l[j * w + b];
                }
            }
        }
        Ok(Self { n, b, l })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let mut s = x[i];
            for k in lo..i {
                s -= self.l[i * w + b - (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w + b];
        }
        for i in (0..n).rev() {
            let hi = (i + b).min(n - 1);
            let mut s = x[i];
            for k in i + 1..=hi {
                s -= self.l[k * w + b - (k - i)] * x[k];
            }
            x[i] = s / self.l[i * w + b];
        }
        x
    }
}

/// Band Cholesky work above which conjugate gradients are used instead.
const BAND_WORK_LIMIT: f64 = 2e9;

/// Solver for `(-Delta_h + diag(c)) x = f` with `c >= 0`.
#[derive(Debug, Clone)]
pub(crate) enum SpdSolver {
    Band(BandCholesky),
    Cg { c: Vec<f64> },
}

impl SpdSolver {
    pub fn new(st: &Stencil, c: &[f64]) -> Result<Self> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolveFailed("non-finite potential".into()));
        }
        let work = st.len() as f64 * (st.bandwidth as f64 + 1.0).powi(2);
        if work <= BAND_WORK_LIMIT {
            Ok(Self::Band(BandCholesky::factor(st, c)?))
        } else {
            Ok(Self::Cg { c: c.to_vec() })
        }
    }

    pub fn solve(&self, st: &Stencil, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Band(f) => Ok(f.solve(rhs)),
            Self::Cg { c } => pcg(st, c, rhs),
        }
    }
}

/// Jacobi-preconditioned conjugate gradients to relative residual 1e-13.
fn pcg(st: &Stencil, c: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = st.len();
    let bnorm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let dinv: Vec<f64> = c.iter().map(|ci| 1.0 / (st.diag + ci)).collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..10 * n + 100 {
        let ap = st.apply(c, &p);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= 1e-13 * bnorm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] * dinv[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::LinearSolveFailed("conjugate gradients did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::UniformGrid;

    #[test]
    fn band_and_cg_agree() {
        let g = UniformGrid::unit_box(2, 12).unwrap();
        let mask = DomainMask::box_interior(g).unwrap();
        let st = Stencil::new(&mask);
        let c: Vec<f64> = (0..st.len()).map(|k| (k % 7) as f64).collect();
        let f: Vec<f64> = (0..st.len()).map(|k| ((k * 31) % 11) as f64 - 5.0).collect();
        let band = BandCholesky::factor(&st, &c).unwrap().solve(&f);
        let cg = pcg(&st, &c, &f).unwrap();
        for (a, b) in band.iter().zip(&cg) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
        let back = st.apply(&c, &band);
        for (a, b) in back.iter().zip(&f) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
