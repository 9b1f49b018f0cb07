//! Unitary multidimensional DFT between image space and k-space.
//!
//! Both directions are scaled by `1/sqrt(N)` with `N` the element count, so
//! the transform preserves the Frobenius norm. Arbitrary lengths are handled
//! by rustfft's mixed-radix and Bluestein plans.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::tensor::DenseTensor;

/// Image space to k-space.
pub fn fft_forward(t: &DenseTensor) -> DenseTensor {
    transform(t, FftDirection::Forward)
}

/// k-space to image space.
pub fn fft_inverse(t: &DenseTensor) -> DenseTensor {
    transform(t, FftDirection::Inverse)
}

fn transform(t: &DenseTensor, direction: FftDirection) -> DenseTensor {
    let dims = t.dims().to_vec();
    let strides = t.shape().strides();
    let total = t.data().len();
    let mut out = t.clone();
    let mut planner = FftPlanner::<f64>::new();
    let mut lanes = vec![Complex64::new(0.0, 0.0); total];

    for (&len, &stride) in dims.iter().zip(&strides) {
        if len == 1 {
            continue;
        }
        let fft = planner.plan_fft(len, direction);
        let outer = total / (len * stride);
        let data = out.data_mut();

        // Gather every lane of this axis into contiguous chunks of `len`.
        let mut k = 0;
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * len * stride + inner;
                for j in 0..len {
                    lanes[k] = data[base + j * stride];
                    k += 1;
                }
            }
        }
        fft.process(&mut lanes);
        let mut k = 0;
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * len * stride + inner;
                for j in 0..len {
                    data[base + j * stride] = lanes[k];
                    k += 1;
                }
            }
        }
    }

    let scale = 1.0 / (total as f64).sqrt();
    out.data_mut().iter_mut().for_each(|z| *z *= scale);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn pseudo_random(dims: &[usize], seed: u64) -> DenseTensor {
        let shape = Shape::new(dims.to_vec()).unwrap();
        let mut x = seed;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DenseTensor::from_fn(shape, |_| Complex64::new(next(), next()))
    }

    /// Direct O(N^2) DFT with unitary scaling, used as an independent oracle.
    fn naive_dft(t: &DenseTensor) -> DenseTensor {
        let shape = t.shape().clone();
        let n = shape.numel();
        let idx: Vec<Vec<usize>> = (0..n).map(|o| shape.index_of(o).unwrap().0).collect();
        DenseTensor::from_fn(shape.clone(), |k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, coords) in idx.iter().enumerate() {
                let phase: f64 = coords
                    .iter()
                    .zip(&idx[k])
                    .zip(shape.dims())
                    .map(|((&a, &b), &d)| (a * b) as f64 / d as f64)
                    .sum();
                acc += t.data()[j] * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
            }
            acc / (n as f64).sqrt()
        })
    }

    #[test]
    fn constant_maps_to_dc() {
        let shape = Shape::new(vec![3, 5, 2]).unwrap();
        let c = Complex64::new(1.5, -0.5);
        let t = DenseTensor::from_fn(shape, |_| c);
        let f = fft_forward(&t);
        let n = 30f64;
        assert!((f.data()[0] - c * n.sqrt()).norm() < 1e-12);
        assert!(f.data()[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn matches_naive_dft_on_odd_sizes() {
        let t = pseudo_random(&[3, 5, 7], 11);
        let fast = fft_forward(&t);
        let slow = naive_dft(&t);
        assert!((&fast - &slow).frobenius_norm() < 1e-12 * slow.frobenius_norm());
    }

    #[test]
    fn roundtrip_and_parseval() {
        let t = pseudo_random(&[6, 10, 4], 3);
        let f = fft_forward(&t);
        let back = fft_inverse(&f);
        let norm = t.frobenius_norm();
        assert!((&back - &t).frobenius_norm() < 1e-12 * norm);
        assert!((f.frobenius_norm() - norm).abs() < 1e-12 * norm);
    }
}
