use rustfft::num_complex::Complex;

use super::fft::{fast_len, fftn};
use super::kernel::SampledKernel;
use crate::error::{Error, Result};
use crate::field::{Atom, AtomicMeasure, GridFunction, UniformGrid};

/// Zero-padded linear convolution of node masses on a fixed source box with a
/// sampled kernel. The kernel spectrum is computed once per plan.
#[derive(Debug, Clone)]
pub(crate) struct ConvPlan {
    dim: usize,
    src_shape: [usize; 3],
    out_shape: [usize; 3],
    fft_shape: [usize; 3],
    kernel_hat: Vec<Complex<f64>>,
}

impl ConvPlan {
    pub(crate) fn new(src: &UniformGrid, kernel: &SampledKernel) -> Result<Self> {
        if !src.same_spacing(kernel.grid()) {
            return Err(Error::SpacingMismatch(src.spacing(), kernel.grid().spacing()));
        }
        let d = src.dim();
        let m = kernel.half_nodes();
        let mut src_shape = [1usize; 3];
        let mut out_shape = [1usize; 3];
        let mut fft_shape = [1usize; 3];
        for k in 0..d {
            src_shape[k] = src.shape()[k];
            out_shape[k] = src_shape[k] + 2 * m;
            fft_shape[k] = fast_len(out_shape[k]);
        }
        let total: usize = fft_shape.iter().product();
        let mut kernel_hat = vec![Complex::new(0.0, 0.0); total];
        let kg = kernel.grid();
        for (flat, &v) in kernel.values().iter().enumerate() {
            let idx = kg.multi_index(flat);
            let pos = idx[0] + fft_shape[0] * (idx[1] + fft_shape[1] * idx[2]);
            kernel_hat[pos] = Complex::new(v, 0.0);
        }
        fftn(&mut kernel_hat, fft_shape, d, false);
        Ok(Self { dim: d, src_shape, out_shape, fft_shape, kernel_hat })
    }

    /// Full linear convolution `out[q] = sum_i src[i] k[q - i]`, shape
    /// `src + 2m` per axis, axis 0 fastest.
    pub(crate) fn apply(&self, src: &[f64]) -> Vec<f64> {
        let f = self.fft_shape;
        let total: usize = f.iter().product();
        let mut buf = vec![Complex::new(0.0, 0.0); total];
        let s = self.src_shape;
        for i2 in 0..s[2] {
            for i1 in 0..s[1] {
                let row = s[0] * (i1 + s[1] * i2);
                let dst = f[0] * (i1 + f[1] * i2);
                for i0 in 0..s[0] {
                    buf[dst + i0] = Complex::new(src[row + i0], 0.0);
                }
            }
        }
        fftn(&mut buf, f, self.dim, false);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        fftn(&mut buf, f, self.dim, true);
        let scale = 1.0 / total as f64;
        let o = self.out_shape;
        let mut out = Vec::with_capacity(o.iter().product());
        for i2 in 0..o[2] {
            for i1 in 0..o[1] {
                let base = f[0] * (i1 + f[1] * i2);
                for i0 in 0..o[0] {
                    out.push(buf[base + i0].re * scale);
                }
            }
        }
        out
    }
}

/// Masses of `atoms` accumulated at their nearest nodes of `grid`.
pub fn splat_nearest<'a>(
    atoms: impl IntoIterator<Item = &'a Atom>,
    grid: &UniformGrid,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.node_count()];
    for a in atoms {
        let idx = grid.nearest_node(&a.location).ok_or(Error::AtomOutsideBox { location: a.location })?;
        out[grid.flat_index(idx)] += a.weight;
    }
    Ok(out)
}

/// Grid of the full convolution output: the source box widened by the
/// kernel half-width on every side.
pub(crate) fn extended_grid(src: &UniformGrid, m: usize) -> Result<UniformGrid> {
    let d = src.dim();
    let h = src.spacing();
    let origin: Vec<f64> = (0..d).map(|k| src.origin()[k] - m as f64 * h[k]).collect();
    let n: Vec<usize> = (0..d).map(|k| src.shape()[k] + 2 * m).collect();
    let extent: Vec<f64> = (0..d).map(|k| (n[k] - 1) as f64 * h[k]).collect();
    UniformGrid::new(d, &origin, &extent, &n)
}

/// `g * (node masses on src)` over its whole support.
pub fn full_convolution(src: &UniformGrid, masses: &[f64], kernel: &SampledKernel) -> Result<GridFunction> {
    if masses.len() != src.node_count() {
        return Err(Error::InvalidArgument("mass count differs from node count".into()));
    }
    let plan = ConvPlan::new(src, kernel)?;
    let out = plan.apply(masses);
    GridFunction::new(extended_grid(src, kernel.half_nodes())?, out)
}

fn crop_to_source(src: &UniformGrid, full: &GridFunction, m: usize) -> Result<GridFunction> {
    let fg = full.grid();
    let values = (0..src.node_count())
        .map(|i| {
            let idx = src.multi_index(i);
            let mut j = idx;
            for (k, jk) in j.iter_mut().enumerate().take(src.dim()) {
                *jk = idx[k] + m;
            }
            full.values()[fg.flat_index(j)]
        })
        .collect();
    GridFunction::new(*src, values)
}

/// `(g * f)(x_n) = sum_j f_j k(x_n - x_j) h^d`, evaluated on the grid of `f`.
pub fn convolve_field(f: &GridFunction, kernel: &SampledKernel) -> Result<GridFunction> {
    let g = f.grid();
    let vol = g.cell_volume();
    let masses: Vec<f64> = f.values().iter().map(|v| v * vol).collect();
    let full = full_convolution(g, &masses, kernel)?;
    crop_to_source(g, &full, kernel.half_nodes())
}

/// `(g * mu)(x_n) = sum_a w_a k(x_n - snap(x_a))` on `target`, atoms snapped
/// to their nearest node of `target`.
pub fn convolve_measure(mu: &AtomicMeasure, kernel: &SampledKernel, target: &UniformGrid) -> Result<GridFunction> {
    if mu.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), got: mu.dim() });
    }
    let masses = splat_nearest(mu.atoms(), target)?;
    let full = full_convolution(target, &masses, kernel)?;
    crop_to_source(target, &full, kernel.half_nodes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{bessel_kernel, kernel_half_nodes, BesselSpec};

    fn kernel(alpha: f64, dim: usize, h: f64) -> SampledKernel {
        let spec = BesselSpec::new(alpha, 2.0, dim).unwrap();
        let m = kernel_half_nodes(alpha, dim, h);
        bessel_kernel(&spec, &UniformGrid::symmetric(dim, m, h).unwrap()).unwrap()
    }

    #[test]
    fn unit_atom_reproduces_kernel() {
        let k = kernel(1.5, 1, 0.05);
        let target = *k.grid();
        let mu = AtomicMeasure::dirac(1, [0.0; 3], 1.0).unwrap();
        let out = convolve_measure(&mu, &k, &target).unwrap();
        for (a, b) in out.values().iter().zip(k.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_maps_to_one_in_the_middle() {
        let k = kernel(1.0, 1, 0.05);
        let g = UniformGrid::cube(1, -60.0, 60.0, 2401).unwrap();
        let out = convolve_field(&GridFunction::constant(g, 1.0), &k).unwrap();
        let mid = out.values()[1200];
        assert!((mid - 1.0).abs() < 1e-5, "{mid}");
    }

    #[test]
    fn spacing_mismatch_is_rejected() {
        let k = kernel(1.0, 1, 0.05);
        let g = UniformGrid::cube(1, 0.0, 1.0, 11).unwrap();
        assert!(matches!(convolve_field(&GridFunction::zeros(g), &k), Err(Error::SpacingMismatch(..))));
    }
}
