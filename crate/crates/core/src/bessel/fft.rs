//! Small helpers around `rustfft` for 1-3 dimensional transforms.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Smallest `m >= n` whose prime factors are all in {2, 3, 5, 7}.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// In-place unnormalised transform of an array laid out with axis 0 fastest.
pub fn fftn(data: &mut [Complex<f64>], shape: [usize; 3], dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let strides = [1, shape[0], shape[0] * shape[1]];
    for axis in 0..dim {
        let len = shape[axis];
        if len <= 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let stride = strides[axis];
        if axis == 0 {
            fft.process(data);
            continue;
        }
        let mut line = vec![Complex::new(0.0, 0.0); len];
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let outer = data.len() / (len * stride);
        for o in 0..outer {
            let base_outer = o * len * stride;
            for inner in 0..stride {
                let base = base_outer + inner;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, c) in line.iter().enumerate() {
                    data[base + j * stride] = *c;
                }
            }
        }
    }
}

/// Signed DFT frequency index for position `j` of an `n`-point transform.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_len_is_smooth() {
        assert_eq!(fast_len(1), 1);
        assert_eq!(fast_len(11), 12);
        assert_eq!(fast_len(97), 98);
        assert_eq!(fast_len(1024), 1024);
    }

    #[test]
    fn forward_inverse_roundtrip_2d() {
        let shape = [6, 5, 1];
        let orig: Vec<Complex<f64>> =
            (0..30).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut d = orig.clone();
        fftn(&mut d, shape, 2, false);
        fftn(&mut d, shape, 2, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / 30.0 - b).norm() < 1e-12);
        }
    }
}
