use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use statrs::function::gamma::gamma;

use super::fft::{fast_len, fftn, signed_index};
use super::BesselSpec;
use crate::error::{Error, Result};
use crate::field::UniformGrid;

/// Kernel tails at the box edge must stay below this fraction of the peak.
pub const TAIL_RELATIVE_LIMIT: f64 = 1e-8;

/// Fourier symbol `(1 + |xi|^2)^(-alpha/2)`.
pub fn symbol(alpha: f64, xi_sq: f64) -> f64 {
    (1.0 + xi_sq).powf(-0.5 * alpha)
}

/// Large-|x| asymptote of `g_alpha`: `c sqrt(pi/2) r^((alpha-d-1)/2) e^(-r)` with
/// `c = 1 / (2^((d+alpha-2)/2) pi^(d/2) Gamma(alpha/2))`, from
/// `g_alpha = c K_{(d-alpha)/2}(r) r^((alpha-d)/2)`.
pub fn tail_bound(alpha: f64, dim: usize, r: f64) -> f64 {
    let d = dim as f64;
    let c = 1.0 / (2f64.powf(0.5 * (d + alpha - 2.0)) * PI.powf(0.5 * d) * gamma(0.5 * alpha));
    c * (0.5 * PI).sqrt() * r.powf(0.5 * (alpha - d - 1.0)) * (-r).exp()
}

/// `(2 pi)^-d` times the symbol integrated over the band `[-pi/h, pi/h]^d`,
/// i.e. the value at the origin of the band-limited kernel.
pub fn sampled_peak_estimate(alpha: f64, dim: usize, spacing: f64) -> f64 {
    let k = match dim {
        1 => 4096,
        2 => 256,
        _ => 48,
    };
    let band = PI / spacing;
    let dxi = 2.0 * band / k as f64;
    let mids: Vec<f64> = (0..k).map(|i| -band + (i as f64 + 0.5) * dxi).collect();
    let mut sum = 0.0;
    match dim {
        1 => {
            for a in &mids {
                sum += symbol(alpha, a * a);
            }
        }
        2 => {
            for a in &mids {
                for b in &mids {
                    sum += symbol(alpha, a * a + b * b);
                }
            }
        }
        _ => {
            for a in &mids {
                for b in &mids {
                    for c in &mids {
                        sum += symbol(alpha, a * a + b * b + c * c);
                    }
                }
            }
        }
    }
    sum * (dxi / (2.0 * PI)).powi(dim as i32)
}

/// Half-width in nodes of a kernel box whose edge satisfies the tail bound.
pub fn kernel_half_nodes(alpha: f64, dim: usize, spacing: f64) -> usize {
    let peak = sampled_peak_estimate(alpha, dim, spacing);
    let limit = 0.5 * TAIL_RELATIVE_LIMIT * peak;
    let mut r: f64 = 1.0;
    while tail_bound(alpha, dim, r) >= limit {
        r += 0.25;
    }
    (r / spacing).ceil() as usize
}

/// Samples of `g_alpha` on a grid symmetric about the origin.
#[derive(Debug, Clone)]
pub struct SampledKernel {
    grid: UniformGrid,
    values: Vec<f64>,
    alpha: f64,
    half_nodes: usize,
    peak: f64,
    clamped: usize,
    most_negative: f64,
}

impl SampledKernel {
    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()[0]
    }

    /// `m` such that the kernel box holds offsets `-m..=m` per axis.
    pub fn half_nodes(&self) -> usize {
        self.half_nodes
    }

    /// Value at the origin.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// Number of negative ringing samples set to zero, and the most negative
    /// raw sample (0 when none).
    pub fn clamp_report(&self) -> (usize, f64) {
        (self.clamped, self.most_negative)
    }

    /// Value at integer node offset from the origin; zero outside the box.
    pub fn at_offset(&self, off: [i64; 3]) -> f64 {
        let m = self.half_nodes as i64;
        let mut idx = [0usize; 3];
        for k in 0..self.dim() {
            let j = off[k] + m;
            if j < 0 || j > 2 * m {
                return 0.0;
            }
            idx[k] = j as usize;
        }
        self.values[self.grid.flat_index(idx)]
    }

    /// `sum values * h^d`.
    pub fn discrete_integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Samples along the positive half of coordinate axis `axis`.
    pub fn axis_ray(&self, axis: usize) -> Vec<f64> {
        (0..=self.half_nodes as i64)
            .map(|j| {
                let mut off = [0i64; 3];
                off[axis] = j;
                self.at_offset(off)
            })
            .collect()
    }

    /// Samples along the main diagonal `(j, j, ..., j)`, at radii `j h sqrt(d)`.
    pub fn diagonal_ray(&self) -> Vec<f64> {
        let d = self.dim();
        (0..=self.half_nodes as i64)
            .map(|j| {
                let mut off = [0i64; 3];
                for o in off.iter_mut().take(d) {
                    *o = j;
                }
                self.at_offset(off)
            })
            .collect()
    }

    /// Largest increase along any axis or diagonal ray, relative to the peak.
    pub fn monotonicity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut rays: Vec<Vec<f64>> = (0..self.dim()).map(|k| self.axis_ray(k)).collect();
        rays.push(self.diagonal_ray());
        for ray in rays {
            for w in ray.windows(2) {
                worst = worst.max(w[1] - w[0]);
            }
        }
        worst / self.peak
    }
}

/// Band-limited samples of `g_alpha` on a symmetric grid, obtained as the
/// inverse DFT of the symbol at the exact dual frequencies `2 pi k / (N h)`
/// of a transform padded to at least twice the box. Negative ringing is set
/// to zero and reported.
pub fn bessel_kernel(spec: &BesselSpec, grid: &UniformGrid) -> Result<SampledKernel> {
    if !(spec.alpha > 0.0) {
        return Err(Error::BadAlpha(spec.alpha));
    }
    let d = grid.dim();
    if d != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: d });
    }
    let h = grid.spacing()[0];
    let n = grid.shape()[0];
    for k in 0..d {
        let hk = grid.spacing()[k];
        if (hk - h).abs() > 1e-12 * h || grid.shape()[k] != n {
            return Err(Error::InvalidGrid("kernel grid must be a cube with equal spacing".into()));
        }
    }
    if n.is_multiple_of(2) {
        return Err(Error::InvalidGrid("kernel grid needs an odd node count".into()));
    }
    let m = (n - 1) / 2;
    for k in 0..d {
        let expect = -(m as f64) * h;
        if (grid.origin()[k] - expect).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::InvalidGrid("kernel grid must be symmetric about 0".into()));
        }
    }

    let len = fast_len(2 * n);
    let mut shape = [1usize; 3];
    for s in shape.iter_mut().take(d) {
        *s = len;
    }
    let total: usize = shape.iter().product();
    let freq: Vec<f64> =
        (0..len).map(|j| 2.0 * PI * signed_index(j, len) as f64 / (len as f64 * h)).collect();
    let mut data = vec![Complex::new(0.0, 0.0); total];
    for (flat, c) in data.iter_mut().enumerate() {
        let i0 = flat % shape[0];
        let i1 = (flat / shape[0]) % shape[1];
        let i2 = flat / (shape[0] * shape[1]);
        let mut xi2 = freq[i0] * freq[i0];
        if d > 1 {
            xi2 += freq[i1] * freq[i1];
        }
        if d > 2 {
            xi2 += freq[i2] * freq[i2];
        }
        *c = Complex::new(symbol(spec.alpha, xi2), 0.0);
    }
    fftn(&mut data, shape, d, true);
    let scale = 1.0 / (len as f64 * h).powi(d as i32);

    let mut values = vec![0.0; grid.node_count()];
    let mut clamped = 0;
    let mut most_negative: f64 = 0.0;
    for (flat, v) in values.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        let mut src = 0usize;
        let mut stride = 1usize;
        for k in 0..d {
            let off = idx[k] as i64 - m as i64;
            let wrapped = if off < 0 { (off + len as i64) as usize } else { off as usize };
            src += wrapped * stride;
            stride *= len;
        }
        let raw = data[src].re * scale;
        if raw < 0.0 {
            clamped += 1;
            most_negative = most_negative.min(raw);
            *v = 0.0;
        } else {
            *v = raw;
        }
    }
    let center = grid.flat_index([m, if d > 1 { m } else { 0 }, if d > 2 { m } else { 0 }]);
    let peak = values[center];
    let radius = m as f64 * h;
    let tail = tail_bound(spec.alpha, d, radius);
    let limit = TAIL_RELATIVE_LIMIT * peak;
    if !(tail < limit) {
        return Err(Error::BoxTooSmall { radius, tail, limit });
    }
    Ok(SampledKernel { grid: *grid, values, alpha: spec.alpha, half_nodes: m, peak, clamped, most_negative })
}
