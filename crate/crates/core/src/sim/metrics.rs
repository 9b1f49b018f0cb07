use crate::error::{Error, Result};
use crate::fft::fft_inverse;
use crate::tensor::DenseTensor;

/// Relative squared k-space error `||M - T||^2 / ||T||^2`.
pub fn k_test(m: &DenseTensor, truth: &DenseTensor) -> Result<f64> {
    m.ensure_same_shape(truth)?;
    let denom = truth.squared_norm();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((m - truth).squared_norm() / denom)
}

fn magnitude_errors<'a>(res: &'a DenseTensor, full: &'a DenseTensor) -> Result<impl Iterator<Item = f64> + 'a> {
    res.ensure_same_shape(full)?;
    Ok(res.data().iter().zip(full.data()).map(|(a, b)| a.norm() - b.norm()))
}

/// Signal-to-error ratio in dB on magnitude images:
/// `-10 log10(||I_res - I_full|| / ||I_full||)` (unsquared ratio).
/// Identical images give `+inf`.
pub fn ser(res: &DenseTensor, full: &DenseTensor) -> Result<f64> {
    let err = magnitude_errors(res, full)?.map(|d| d * d).sum::<f64>().sqrt();
    let reference = full.frobenius_norm();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(-10.0 * (err / reference).log10())
}

/// Peak signal-to-noise ratio in dB: `20 log10(max|I_res| / sqrt(MSE))`
/// with MSE over magnitudes. Zero error gives `+inf`.
pub fn psnr(res: &DenseTensor, full: &DenseTensor) -> Result<f64> {
    let n = res.data().len() as f64;
    let mse = magnitude_errors(res, full)?.map(|d| d * d).sum::<f64>() / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = res.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(20.0 * (peak / mse.sqrt()).log10())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub k_test: f64,
    pub ser_db: f64,
    pub psnr_db: f64,
}

/// k-space error plus image-space SER/PSNR after the inverse FFT.
pub fn evaluate(recon_kspace: &DenseTensor, truth_kspace: &DenseTensor) -> Result<Metrics> {
    let k = k_test(recon_kspace, truth_kspace)?;
    let (res, full) = (fft_inverse(recon_kspace), fft_inverse(truth_kspace));
    Ok(Metrics { k_test: k, ser_db: ser(&res, &full)?, psnr_db: psnr(&res, &full)? })
}
