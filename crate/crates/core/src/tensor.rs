//! Dense complex tensors and mode-k matricization.
//!
//! Elements are stored in lexicographic order of their multi-index with the
//! last index varying fastest. Mode-k unfolding follows the Kolda–Bader
//! convention: row `i_k`, column `sum_{m != k} i_m * J_m` where
//! `J_m = prod_{l < m, l != k} I_l`, so among the remaining modes the first
//! one varies fastest along a row. All indices in this crate are 0-based.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major complex matrix used for unfoldings.
pub type Matrix = nalgebra::DMatrix<Complex64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    /// A tensor shape with at least two modes, every one non-empty.
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.len() < 2 {
            return Err(Error::InvalidShape { dims, reason: "at least two modes are required" });
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape { dims, reason: "every dimension must be positive" });
        }
        if dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(Error::InvalidShape { dims, reason: "element count overflows" });
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn numel(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides (last mode has stride 1).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for m in (0..self.dims.len() - 1).rev() {
            strides[m] = strides[m + 1] * self.dims[m + 1];
        }
        strides
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.ndim() {
            return Err(Error::InvalidMode { mode, ndim: self.ndim() });
        }
        Ok(())
    }

    /// `(I_k, prod_{m != k} I_m)`.
    pub fn unfolded_dims(&self, mode: usize) -> Result<(usize, usize)> {
        self.check_mode(mode)?;
        let rows = self.dims[mode];
        Ok((rows, self.numel() / rows))
    }

    pub fn offset(&self, index: &MultiIndex) -> Result<usize> {
        let coords = index.coords();
        if coords.len() != self.ndim() || coords.iter().zip(&self.dims).any(|(&c, &d)| c >= d) {
            return Err(Error::IndexOutOfRange { index: coords.to_vec(), dims: self.dims.clone() });
        }
        Ok(coords.iter().zip(&self.dims).fold(0, |acc, (&c, &d)| acc * d + c))
    }

    pub fn index_of(&self, offset: usize) -> Result<MultiIndex> {
        let len = self.numel();
        if offset >= len {
            return Err(Error::OffsetOutOfRange { offset, len });
        }
        let mut coords = vec![0; self.ndim()];
        let mut rest = offset;
        for m in (0..self.ndim()).rev() {
            coords[m] = rest % self.dims[m];
            rest /= self.dims[m];
        }
        Ok(MultiIndex(coords))
    }

    /// For every tensor offset, the column-major position of that element in
    /// the mode-`mode` unfolding.
    pub fn unfolding_map(&self, mode: usize) -> Result<Vec<usize>> {
        let (rows, _) = self.unfolded_dims(mode)?;
        let n = self.ndim();
        // Step in the matrix buffer when coordinate m advances by one.
        let mut step = vec![0usize; n];
        let mut col_stride = 1usize;
        for (m, (st, &d)) in step.iter_mut().zip(&self.dims).enumerate() {
            if m == mode {
                *st = 1;
            } else {
                *st = rows * col_stride;
                col_stride *= d;
            }
        }
        let total = self.numel();
        let mut map = Vec::with_capacity(total);
        let mut coords = vec![0usize; n];
        let mut pos = 0usize;
        for _ in 0..total {
            map.push(pos);
            for m in (0..n).rev() {
                coords[m] += 1;
                if coords[m] < self.dims[m] {
                    pos += step[m];
                    break;
                }
                coords[m] = 0;
                pos -= (self.dims[m] - 1) * step[m];
            }
        }
        Ok(map)
    }
}

/// 0-based multi-index `(i_1, ..., i_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[usize; N]> for MultiIndex {
    fn from(v: [usize; N]) -> Self {
        Self(v.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<Complex64>,
}

impl DenseTensor {
    pub fn zeros(shape: Shape) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); shape.numel()];
        Self { shape, data }
    }

    pub fn from_vec(shape: Shape, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::InvalidParameter(format!(
                "data length {} does not match {} elements of shape {:?}",
                data.len(),
                shape.numel(),
                shape.dims()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize) -> Complex64) -> Self {
        let data = (0..shape.numel()).map(&mut f).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, index: &MultiIndex) -> Result<Complex64> {
        Ok(self.data[self.shape.offset(index)?])
    }

    pub fn set(&mut self, index: &MultiIndex, value: Complex64) -> Result<()> {
        let o = self.shape.offset(index)?;
        self.data[o] = value;
        Ok(())
    }

    pub fn ensure_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                expected: self.dims().to_vec(),
                found: other.dims().to_vec(),
            });
        }
        Ok(())
    }

    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        let (rows, cols) = self.shape.unfolded_dims(mode)?;
        let map = self.shape.unfolding_map(mode)?;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for (&v, &p) in self.data.iter().zip(&map) {
            buf[p] = v;
        }
        Ok(Matrix::from_vec(rows, cols, buf))
    }

    pub fn fold(matrix: &Matrix, mode: usize, shape: &Shape) -> Result<Self> {
        let (rows, cols) = shape.unfolded_dims(mode)?;
        if matrix.nrows() != rows || matrix.ncols() != cols {
            return Err(Error::ShapeMismatch {
                expected: vec![rows, cols],
                found: vec![matrix.nrows(), matrix.ncols()],
            });
        }
        let map = shape.unfolding_map(mode)?;
        let src = matrix.as_slice();
        let data = map.iter().map(|&p| src[p]).collect();
        Ok(Self { shape: shape.clone(), data })
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn hadamard(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn zip_with(
        &self,
        other: &DenseTensor,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|z| z * c)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &DenseTensor) -> Result<()> {
        self.ensure_same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * c;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Copy of `self` with every observed entry replaced by its measured value.
    pub fn scatter_observed(&self, omega: &ObservationSet) -> Result<Self> {
        let mut out = self.clone();
        out.scatter_observed_in_place(omega)?;
        Ok(out)
    }

    pub fn scatter_observed_in_place(&mut self, omega: &ObservationSet) -> Result<()> {
        if omega.shape() != &self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.dims().to_vec(),
                found: omega.shape().dims().to_vec(),
            });
        }
        for (o, v) in omega.iter() {
            self.data[o] = v;
        }
        Ok(())
    }
}

fn binary(a: &DenseTensor, b: &DenseTensor, f: impl Fn(Complex64, Complex64) -> Complex64) -> DenseTensor {
    a.zip_with(b, f).expect("tensor arithmetic on mismatched shapes")
}

/// Elementwise operators panic on shape mismatch; use [`DenseTensor::zip_with`]
/// for a fallible variant.
impl Add for &DenseTensor {
    type Output = DenseTensor;
    fn add(self, rhs: &DenseTensor) -> DenseTensor {
        binary(self, rhs, |a, b| a + b)
    }
}

impl Sub for &DenseTensor {
    type Output = DenseTensor;
    fn sub(self, rhs: &DenseTensor) -> DenseTensor {
        binary(self, rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &DenseTensor {
    type Output = DenseTensor;
    fn mul(self, rhs: f64) -> DenseTensor {
        self.scale(rhs)
    }
}

/// Observed multi-indices and their measured values, kept in element order.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    shape: Shape,
    mask: Vec<bool>,
    entries: BTreeMap<usize, Complex64>,
}

impl ObservationSet {
    pub fn new(shape: Shape) -> Self {
        let mask = vec![false; shape.numel()];
        Self { shape, mask, entries: BTreeMap::new() }
    }

    /// Observes every element of `t`.
    pub fn full(t: &DenseTensor) -> Self {
        let mut omega = Self::new(t.shape().clone());
        omega.mask.iter_mut().for_each(|m| *m = true);
        omega.entries = t.data().iter().copied().enumerate().collect();
        omega
    }

    /// Observes the given offsets of `t`.
    pub fn from_offsets(t: &DenseTensor, offsets: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut omega = Self::new(t.shape().clone());
        for o in offsets {
            let len = t.data().len();
            let v = *t.data().get(o).ok_or(Error::OffsetOutOfRange { offset: o, len })?;
            omega.insert_offset(o, v)?;
        }
        Ok(omega)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn insert(&mut self, index: &MultiIndex, value: Complex64) -> Result<()> {
        let o = self.shape.offset(index)?;
        self.insert_offset(o, value)
    }

    pub fn insert_offset(&mut self, offset: usize, value: Complex64) -> Result<()> {
        let len = self.mask.len();
        match self.mask.get(offset) {
            None => Err(Error::OffsetOutOfRange { offset, len }),
            Some(true) => Err(Error::DuplicateObservation(offset)),
            Some(false) => {
                self.mask[offset] = true;
                self.entries.insert(offset, value);
                Ok(())
            }
        }
    }

    pub fn contains_offset(&self, offset: usize) -> bool {
        self.mask.get(offset).copied().unwrap_or(false)
    }

    pub fn contains(&self, index: &MultiIndex) -> bool {
        self.shape.offset(index).map(|o| self.mask[o]).unwrap_or(false)
    }

    pub fn value_at(&self, offset: usize) -> Option<Complex64> {
        self.entries.get(&offset).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.len() as f64 / self.shape.numel() as f64
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `(offset, value)` pairs in ascending element order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.entries.iter().map(|(&o, &v)| (o, v))
    }

    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        self.entries.keys().map(|&o| self.shape.index_of(o).expect("stored offsets are valid"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ramp(dims: &[usize]) -> DenseTensor {
        let shape = Shape::new(dims.to_vec()).unwrap();
        DenseTensor::from_fn(shape, |i| c(i as f64, -(i as f64) * 0.5))
    }

    #[test]
    fn shape_rejects_bad_dims() {
        assert!(Shape::new(vec![3]).is_err());
        assert!(Shape::new(vec![3, 0]).is_err());
        assert!(Shape::new(vec![usize::MAX, 2]).is_err());
        assert!(Shape::new(vec![1, 1]).is_ok());
    }

    #[test]
    fn offsets_roundtrip() {
        let s = Shape::new(vec![2, 3, 4]).unwrap();
        for o in 0..s.numel() {
            assert_eq!(s.offset(&s.index_of(o).unwrap()).unwrap(), o);
        }
        assert_eq!(s.offset(&MultiIndex::from([1, 2, 3])).unwrap(), 23);
        assert!(s.offset(&MultiIndex::from([2, 0, 0])).is_err());
        assert!(s.index_of(24).is_err());
    }

    #[test]
    fn unfold_matrix_mode0_is_identity() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let t = DenseTensor::from_vec(s, vec![c(1., 0.), c(2., 0.), c(3., 0.), c(4., 0.)]).unwrap();
        let m = t.unfold(0).unwrap();
        assert_eq!(m[(0, 0)], c(1., 0.));
        assert_eq!(m[(0, 1)], c(2., 0.));
        assert_eq!(m[(1, 0)], c(3., 0.));
        assert_eq!(m[(1, 1)], c(4., 0.));
        let back = DenseTensor::fold(&m, 0, t.shape()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn unfold_mode1_matches_index_arithmetic() {
        let t = ramp(&[2, 3, 4]);
        let m = t.unfold(1).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (3, 8));
        // Independent brute force over all 24 elements: column = i0 + 2 * i2.
        for i0 in 0..2 {
            for i1 in 0..3 {
                for i2 in 0..4 {
                    let v = t.get(&MultiIndex::from([i0, i1, i2])).unwrap();
                    assert_eq!(m[(i1, i0 + 2 * i2)], v);
                }
            }
        }
    }

    #[test]
    fn fold_rejects_wrong_dims() {
        let s = Shape::new(vec![2, 3]).unwrap();
        let m = Matrix::zeros(3, 2);
        assert!(matches!(DenseTensor::fold(&m, 0, &s), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(DenseTensor::fold(&m, 2, &s), Err(Error::InvalidMode { .. })));
        assert!(ramp(&[2, 2]).unfold(5).is_err());
    }

    #[test]
    fn fold_unfold_mode2_roundtrip() {
        let t = ramp(&[3, 4, 5]);
        let back = DenseTensor::fold(&t.unfold(2).unwrap(), 2, t.shape()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn norms_and_hadamard() {
        let s = Shape::new(vec![1, 1]).unwrap();
        let t = DenseTensor::from_vec(s.clone(), vec![c(3., 4.)]).unwrap();
        assert_eq!(t.frobenius_norm(), 5.0);
        assert_eq!(DenseTensor::zeros(s.clone()).frobenius_norm(), 0.0);
        let a = DenseTensor::from_vec(s.clone(), vec![c(2., 1.)]).unwrap();
        let b = DenseTensor::from_vec(s, vec![c(2., -1.)]).unwrap();
        assert_eq!(a.hadamard(&b).unwrap().data()[0], c(5., 0.));

        let r = ramp(&[2, 3]);
        let ones = r.map(|_| c(1., 0.));
        assert_eq!(r.hadamard(&ones).unwrap(), r);
        assert_eq!(r.hadamard(&r.scale(0.0)).unwrap().frobenius_norm(), 0.0);
        assert!(r.hadamard(&ramp(&[3, 2])).is_err());
    }

    #[test]
    fn scatter_cases() {
        let t = ramp(&[2, 3]);
        let empty = ObservationSet::new(t.shape().clone());
        assert_eq!(t.scatter_observed(&empty).unwrap(), t);

        let truth = t.scale(-2.0);
        let full = ObservationSet::full(&truth);
        assert_eq!(t.scatter_observed(&full).unwrap(), truth);

        let omega = ObservationSet::from_offsets(&truth, [1, 4]).unwrap();
        let z = DenseTensor::zeros(t.shape().clone()).scatter_observed(&omega).unwrap();
        assert_eq!(z.data().iter().filter(|v| v.norm() > 0.0).count(), 2);
        assert_eq!(z.scatter_observed(&omega).unwrap(), z);

        let other = ObservationSet::new(Shape::new(vec![3, 2]).unwrap());
        assert!(t.scatter_observed(&other).is_err());
    }

    #[test]
    fn observation_set_rejects_duplicates() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let mut omega = ObservationSet::new(s);
        omega.insert(&MultiIndex::from([0, 1]), c(1., 0.)).unwrap();
        assert!(matches!(
            omega.insert(&MultiIndex::from([0, 1]), c(1., 0.)),
            Err(Error::DuplicateObservation(1))
        ));
        assert!(omega.insert(&MultiIndex::from([2, 0]), c(1., 0.)).is_err());
        assert_eq!(omega.len(), 1);
        assert_eq!(omega.sampling_ratio(), 0.25);
        assert_eq!(omega.indices().collect::<Vec<_>>(), vec![MultiIndex::from([0, 1])]);
    }
}
