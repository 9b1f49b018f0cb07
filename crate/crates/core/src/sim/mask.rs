use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampling::Pattern;
use crate::tensor::{DenseTensor, MultiIndex, ObservationSet, Shape};

/// Initial Cartesian mask: a fully sampled centre block of readout lines
/// plus uniformly random lines elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSpec {
    pub shape: Shape,
    /// Mode along which every acquired line runs (0-based).
    pub readout_mode: usize,
    /// Fraction of all lines in the centre block.
    pub center_fraction: f64,
    /// Fraction of the non-centre lines drawn at random.
    pub random_line_fraction: f64,
    pub seed: u64,
}

impl MaskSpec {
    pub fn validate(&self) -> Result<()> {
        self.shape.check_mode(self.readout_mode)?;
        let unit = 0.0..=1.0;
        if !unit.contains(&self.center_fraction) || !unit.contains(&self.random_line_fraction) {
            return Err(Error::InvalidParameter("mask fractions must lie in [0, 1]".into()));
        }
        if self.center_fraction + self.random_line_fraction > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "center_fraction + random_line_fraction = {} exceeds the available lines",
                self.center_fraction + self.random_line_fraction
            )));
        }
        Ok(())
    }
}

/// One representative index per readout line (readout coordinate zero), in
/// lexicographic order. A line's position in this list is its pattern id.
pub fn transverse_lines(shape: &Shape, readout_mode: usize) -> Result<Vec<MultiIndex>> {
    shape.check_mode(readout_mode)?;
    let mut dims = shape.dims().to_vec();
    dims[readout_mode] = 1;
    let count: usize = dims.iter().product();
    let mut lines = Vec::with_capacity(count);
    let mut coords = vec![0usize; dims.len()];
    for _ in 0..count {
        lines.push(MultiIndex(coords.clone()));
        for m in (0..dims.len()).rev() {
            coords[m] += 1;
            if coords[m] < dims[m] {
                break;
            }
            coords[m] = 0;
        }
    }
    Ok(lines)
}

/// Squared distance of a line from the k-space centre, each transverse
/// coordinate scaled by its dimension.
fn centre_distance(line: &MultiIndex, shape: &Shape, readout_mode: usize) -> f64 {
    line.coords()
        .iter()
        .zip(shape.dims())
        .enumerate()
        .filter(|&(m, _)| m != readout_mode)
        .map(|(_, (&c, &d))| {
            let off = (c as f64 - (d as f64 - 1.0) / 2.0) / d as f64;
            off * off
        })
        .sum()
}

fn line_offsets(shape: &Shape, readout_mode: usize, line: &MultiIndex) -> Result<Vec<usize>> {
    Ok(Pattern::fiber(0, shape, readout_mode, line)?.elements)
}

/// Observes `round(cf * L)` lines closest to the centre (ties by line order)
/// and `round(rf * (L - centre))` further lines chosen uniformly by seed.
pub fn init_cartesian_mask(spec: &MaskSpec, truth: &DenseTensor) -> Result<ObservationSet> {
    spec.validate()?;
    if truth.shape() != &spec.shape {
        return Err(Error::ShapeMismatch { expected: spec.shape.dims().to_vec(), found: truth.dims().to_vec() });
    }
    let lines = transverse_lines(&spec.shape, spec.readout_mode)?;
    let total = lines.len();
    let n_center = (spec.center_fraction * total as f64).round() as usize;
    let mut order: Vec<usize> = (0..total).collect();
    let dist: Vec<f64> = lines.iter().map(|l| centre_distance(l, &spec.shape, spec.readout_mode)).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));

    let mut chosen: Vec<usize> = order[..n_center].to_vec();
    let mut rest: Vec<usize> = order[n_center..].to_vec();
    rest.sort_unstable();
    let n_random = (spec.random_line_fraction * rest.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    chosen.extend(index::sample(&mut rng, rest.len(), n_random).into_iter().map(|i| rest[i]));
    chosen.sort_unstable();

    let mut omega = ObservationSet::new(spec.shape.clone());
    for id in chosen {
        for o in line_offsets(&spec.shape, spec.readout_mode, &lines[id])? {
            omega.insert_offset(o, truth.data()[o])?;
        }
    }
    Ok(omega)
}

/// One fiber pattern per readout line with no observed element.
pub fn enumerate_fiber_patterns(shape: &Shape, readout_mode: usize, omega: &ObservationSet) -> Result<Vec<Pattern>> {
    if omega.shape() != shape {
        return Err(Error::ShapeMismatch { expected: shape.dims().to_vec(), found: omega.shape().dims().to_vec() });
    }
    let mut out = Vec::new();
    for (id, line) in transverse_lines(shape, readout_mode)?.iter().enumerate() {
        let p = Pattern::fiber(id, shape, readout_mode, line)?;
        if p.elements.iter().all(|&o| !omega.contains_offset(o)) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Adds every element of `batch` to Ω with its value from `truth`.
pub fn acquire(truth: &DenseTensor, omega: &ObservationSet, batch: &[Pattern]) -> Result<ObservationSet> {
    if truth.shape() != omega.shape() {
        return Err(Error::ShapeMismatch { expected: omega.shape().dims().to_vec(), found: truth.dims().to_vec() });
    }
    let mut grown = omega.clone();
    for p in batch {
        for &o in &p.elements {
            let len = truth.data().len();
            let v = *truth.data().get(o).ok_or(Error::OffsetOutOfRange { offset: o, len })?;
            grown.insert_offset(o, v).map_err(|e| match e {
                Error::DuplicateObservation(_) => Error::PatternOverlap(p.id),
                other => other,
            })?;
        }
    }
    Ok(grown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn truth(dims: &[usize]) -> DenseTensor {
        DenseTensor::from_fn(Shape::new(dims.to_vec()).unwrap(), |i| Complex64::new(1.0 + i as f64, 0.5))
    }

    fn spec(dims: &[usize], cf: f64, rf: f64) -> MaskSpec {
        MaskSpec {
            shape: Shape::new(dims.to_vec()).unwrap(),
            readout_mode: 0,
            center_fraction: cf,
            random_line_fraction: rf,
            seed: 4,
        }
    }

    #[test]
    fn extreme_fractions() {
        let t = truth(&[4, 4, 2]);
        assert_eq!(init_cartesian_mask(&spec(&[4, 4, 2], 1.0, 0.0), &t).unwrap().len(), 32);
        assert!(init_cartesian_mask(&spec(&[4, 4, 2], 0.0, 0.0), &t).unwrap().is_empty());
        assert!(init_cartesian_mask(&spec(&[4, 4, 2], 0.7, 0.5), &t).is_err());
    }

    #[test]
    fn counts_follow_rounding_rule() {
        let t = truth(&[16, 16, 4]);
        let omega = init_cartesian_mask(&spec(&[16, 16, 4], 0.25, 0.25), &t).unwrap();
        let center = (0.25f64 * 64.0).round();
        let lines = center + (0.25 * (64.0 - center)).round();
        assert_eq!(omega.len(), lines as usize * 16);
        for (o, v) in omega.iter() {
            assert_eq!(v, t.data()[o]);
        }
    }

    #[test]
    fn centre_block_is_centred() {
        let t = truth(&[4, 8, 1]);
        let omega = init_cartesian_mask(&spec(&[4, 8, 1], 0.25, 0.0), &t).unwrap();
        // 2 of 8 lines: the two middle ky rows 3 and 4.
        let rows: std::collections::BTreeSet<usize> = omega.indices().map(|i| i.0[1]).collect();
        assert_eq!(rows.into_iter().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn patterns_exclude_observed_lines() {
        let s = Shape::new(vec![4, 4]).unwrap();
        let empty = ObservationSet::new(s.clone());
        let pats = enumerate_fiber_patterns(&s, 0, &empty).unwrap();
        assert_eq!(pats.len(), 4);
        assert!(pats.iter().all(|p| p.len() == 4));

        let t = truth(&[4, 4]);
        assert!(enumerate_fiber_patterns(&s, 0, &ObservationSet::full(&t)).unwrap().is_empty());

        let mut partial = ObservationSet::new(s.clone());
        partial.insert_offset(1, Complex64::new(0.0, 0.0)).unwrap();
        let ids: Vec<_> = enumerate_fiber_patterns(&s, 0, &partial).unwrap().iter().map(|p| p.id).collect();
        assert_eq!(ids, vec![0, 2, 3]);
    }

    #[test]
    fn acquire_grows_and_rejects_overlap() {
        let t = truth(&[8, 3]);
        let s = t.shape().clone();
        let omega = ObservationSet::new(s.clone());
        assert_eq!(acquire(&t, &omega, &[]).unwrap(), omega);
        let pats = enumerate_fiber_patterns(&s, 0, &omega).unwrap();
        let one = acquire(&t, &omega, &pats[..1]).unwrap();
        assert_eq!(one.len(), 8);
        assert!(matches!(acquire(&t, &one, &pats[..1]), Err(Error::PatternOverlap(0))));
        let all = acquire(&t, &omega, &pats).unwrap();
        assert_eq!(all.len(), 24);
    }
}
