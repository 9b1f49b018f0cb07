use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft::fft_forward;
use crate::tensor::{DenseTensor, Matrix, Shape};

#[derive(Clone, Debug, PartialEq)]
pub struct PhantomSpec {
    pub shape: Shape,
    pub tucker_ranks: Vec<usize>,
    /// Fraction of image elements that receive an additive spike.
    pub sparse_fraction: f64,
    /// Standard deviation of the complex white noise (`E|n|^2 = sigma^2`).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn low_rank(shape: Shape, tucker_ranks: Vec<usize>, seed: u64) -> Self {
        Self { shape, tucker_ranks, sparse_fraction: 0.0, noise_sigma: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.shape.dims();
        if self.tucker_ranks.len() != dims.len()
            || self.tucker_ranks.iter().zip(dims).any(|(&r, &d)| r == 0 || r > d)
        {
            return Err(Error::InvalidParameter(format!(
                "tucker ranks {:?} must satisfy 1 <= r_k <= I_k for shape {:?}",
                self.tucker_ranks, dims
            )));
        }
        if !(0.0..1.0).contains(&self.sparse_fraction) {
            return Err(Error::InvalidParameter(format!("sparse_fraction {} not in [0, 1)", self.sparse_fraction)));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("noise_sigma {} must be >= 0", self.noise_sigma)));
        }
        Ok(())
    }
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix with orthonormal columns (Q factor of a complex
/// Gaussian matrix).
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let g = Matrix::from_fn(rows, cols, |_, _| complex_normal(rng));
    g.qr().q()
}

/// `core x_1 U_1 x_2 U_2 ... x_n U_n`.
pub fn tucker_product(core: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let mut t = core.clone();
    for (k, u) in factors.iter().enumerate() {
        if u.ncols() != t.dims()[k] {
            return Err(Error::ShapeMismatch { expected: vec![t.dims()[k]], found: vec![u.ncols()] });
        }
        let mut dims = t.dims().to_vec();
        dims[k] = u.nrows();
        let product = u * t.unfold(k)?;
        t = DenseTensor::fold(&product, k, &Shape::new(dims)?)?;
    }
    Ok(t)
}

/// Returns `(image, kspace)`. The low-rank part is a Gaussian Tucker core
/// contracted with random orthonormal factors, rescaled to unit RMS
/// magnitude; spikes of magnitude 3 with random phase and white noise are
/// then added, and the k-space tensor is its unitary FFT.
pub fn synth_ground_truth(spec: &PhantomSpec) -> Result<(DenseTensor, DenseTensor)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let core_shape = Shape::new(spec.tucker_ranks.clone())?;
    let core = DenseTensor::from_fn(core_shape, |_| complex_normal(&mut rng));
    let factors: Vec<Matrix> = spec
        .shape
        .dims()
        .iter()
        .zip(&spec.tucker_ranks)
        .map(|(&d, &r)| random_orthonormal(d, r, &mut rng))
        .collect();
    let low_rank = tucker_product(&core, &factors)?;
    let n = spec.shape.numel();
    let rms = (low_rank.squared_norm() / n as f64).sqrt();
    let mut image = low_rank.scale(1.0 / rms);

    let spikes = (spec.sparse_fraction * n as f64).round() as usize;
    if spikes > 0 {
        let picks = index::sample(&mut rng, n, spikes);
        for o in picks {
            let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            image.data_mut()[o] += Complex64::from_polar(3.0, phase);
        }
    }
    if spec.noise_sigma > 0.0 {
        for z in image.data_mut() {
            *z += complex_normal(&mut rng) * spec.noise_sigma;
        }
    }
    let kspace = fft_forward(&image);
    Ok((image, kspace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn rank_one_phantom_has_rank_one_unfoldings() {
        let spec = PhantomSpec::low_rank(Shape::new(vec![6, 5, 4]).unwrap(), vec![1, 1, 1], 5);
        let (image, _) = synth_ground_truth(&spec).unwrap();
        for k in 0..3 {
            let s = linalg::svd(&image.unfold(k).unwrap()).unwrap().sigma;
            assert!(s[1] / s[0] < 1e-10, "mode {k}: {:?}", s);
        }
    }

    #[test]
    fn seeded_and_scaled() {
        let spec = PhantomSpec {
            shape: Shape::new(vec![5, 4, 3]).unwrap(),
            tucker_ranks: vec![2, 2, 2],
            sparse_fraction: 0.1,
            noise_sigma: 0.01,
            seed: 9,
        };
        let (a, ka) = synth_ground_truth(&spec).unwrap();
        let (b, kb) = synth_ground_truth(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(ka, kb);
        let other = synth_ground_truth(&PhantomSpec { seed: 10, ..spec.clone() }).unwrap().0;
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_specs() {
        let shape = Shape::new(vec![3, 3]).unwrap();
        assert!(synth_ground_truth(&PhantomSpec::low_rank(shape.clone(), vec![4, 1], 0)).is_err());
        assert!(synth_ground_truth(&PhantomSpec::low_rank(shape.clone(), vec![1], 0)).is_err());
        let mut s = PhantomSpec::low_rank(shape, vec![1, 1], 0);
        s.sparse_fraction = 1.0;
        assert!(s.validate().is_err());
    }
}
