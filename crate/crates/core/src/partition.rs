//! Behavior-space partitioning: fixed uniform grids, binary-feature maps, and
//! sliding-boundary grids whose bins follow the observed distribution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionError {
    #[error("descriptor entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("descriptor has {got} dimensions, grid has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("axis {axis}: {reason}")]
    InvalidAxis { axis: usize, reason: String },
    #[error("grid needs at least one axis")]
    NoAxes,
    #[error("cannot place boundaries from an empty buffer")]
    EmptyBuffer,
    #[error("operation requires a {expected:?} grid, got {got:?}")]
    WrongKind { expected: GridKind, got: GridKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Uniform,
    Binary,
    Sliding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, resolution: usize) -> Self {
        Self { lo, hi, resolution }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn uniform(axes: Vec<Axis>) -> Self {
        Self {
            kind: GridKind::Uniform,
            axes,
        }
    }

    pub fn sliding(axes: Vec<Axis>) -> Self {
        Self {
            kind: GridKind::Sliding,
            axes,
        }
    }

    /// `dims` on/off features, `2^dims` cells.
    pub fn binary(dims: usize) -> Self {
        Self {
            kind: GridKind::Binary,
            axes: vec![Axis::new(0.0, 1.0, 2); dims],
        }
    }

    pub fn validate(&self) -> Result<(), PartitionError> {
        if self.axes.is_empty() {
            return Err(PartitionError::NoAxes);
        }
        for (axis, a) in self.axes.iter().enumerate() {
            let bad = |reason: &str| {
                Err(PartitionError::InvalidAxis {
                    axis,
                    reason: reason.to_string(),
                })
            };
            if a.resolution == 0 {
                return bad("resolution must be at least 1");
            }
            if !(a.lo.is_finite() && a.hi.is_finite() && a.lo < a.hi) {
                return bad("bounds must be finite with lo < hi");
            }
            if self.kind == GridKind::Binary && (a.resolution != 2 || a.lo != 0.0 || a.hi != 1.0) {
                return bad("binary axes have resolution 2 over [0, 1]");
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn resolutions(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.resolution).collect()
    }

    pub fn total_cells(&self) -> usize {
        self.axes.iter().map(|a| a.resolution).product()
    }

    /// Evenly spaced interior boundaries, the starting point of a sliding grid.
    pub fn even_boundaries(&self) -> BoundarySet {
        BoundarySet(
            self.axes
                .iter()
                .map(|a| {
                    (1..a.resolution)
                        .map(|j| a.lo + (a.hi - a.lo) * j as f64 / a.resolution as f64)
                        .collect()
                })
                .collect(),
        )
    }
}

/// Integer coordinates of one map cell.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellIndex(pub Vec<usize>);

impl CellIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn is_within(&self, resolutions: &[usize]) -> bool {
        self.0.len() == resolutions.len() && self.0.iter().zip(resolutions).all(|(c, r)| c < r)
    }

    /// Every cell of a grid with the given resolutions, in lexicographic order.
    pub fn enumerate(resolutions: &[usize]) -> Vec<CellIndex> {
        let mut cells = vec![CellIndex(Vec::new())];
        for &r in resolutions {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    (0..r).map(move |i| {
                        let mut v = c.0.clone();
                        v.push(i);
                        CellIndex(v)
                    })
                })
                .collect();
        }
        cells
    }
}

impl std::fmt::Display for CellIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Per dimension, the sorted interior boundaries of a sliding grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundarySet(pub Vec<Vec<f64>>);

impl BoundarySet {
    pub fn dimension(&self, i: usize) -> &[f64] {
        &self.0[i]
    }

    pub fn resolutions(&self) -> Vec<usize> {
        self.0.iter().map(|b| b.len() + 1).collect()
    }
}

fn check_finite(descriptor: &[f64]) -> Result<(), PartitionError> {
    match descriptor.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        Some((index, &value)) => Err(PartitionError::NonFinite { index, value }),
        None => Ok(()),
    }
}

/// Uniform binning. Values at or above `hi` land in the last bin, values below
/// `lo` in the first.
pub fn cell_of_uniform(descriptor: &[f64], spec: &GridSpec) -> Result<CellIndex, PartitionError> {
    check_finite(descriptor)?;
    if descriptor.len() != spec.dims() {
        return Err(PartitionError::DimensionMismatch {
            expected: spec.dims(),
            got: descriptor.len(),
        });
    }
    Ok(CellIndex(
        descriptor
            .iter()
            .zip(&spec.axes)
            .map(|(&d, a)| {
                let scaled = ((d - a.lo) / (a.hi - a.lo) * a.resolution as f64).floor();
                if scaled <= 0.0 {
                    0
                } else {
                    (scaled as usize).min(a.resolution - 1)
                }
            })
            .collect(),
    ))
}

pub fn cell_of_binary(flags: &[bool]) -> CellIndex {
    CellIndex(flags.iter().map(|&f| usize::from(f)).collect())
}

/// Nearest-rank percentile boundaries: for `j = 1..R`, the value of rank
/// `ceil(j·B/R)` among the `B` sorted buffer values.
pub fn recompute_boundaries<'a, I>(buffer: I, spec: &GridSpec) -> Result<BoundarySet, PartitionError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if spec.kind != GridKind::Sliding {
        return Err(PartitionError::WrongKind {
            expected: GridKind::Sliding,
            got: spec.kind,
        });
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); spec.dims()];
    for d in buffer {
        check_finite(d)?;
        if d.len() != spec.dims() {
            return Err(PartitionError::DimensionMismatch {
                expected: spec.dims(),
                got: d.len(),
            });
        }
        for (col, &v) in columns.iter_mut().zip(d) {
            col.push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(PartitionError::EmptyBuffer);
    }
    Ok(BoundarySet(
        columns
            .into_iter()
            .zip(&spec.axes)
            .map(|(mut col, axis)| {
                col.sort_by(f64::total_cmp);
                let b = col.len();
                let r = axis.resolution;
                (1..r)
                    .map(|j| {
                        let rank = (j * b).div_ceil(r).max(1);
                        col[rank - 1]
                    })
                    .collect()
            })
            .collect(),
    ))
}

/// Bin per dimension = number of boundaries strictly below the value.
pub fn cell_of_sliding(descriptor: &[f64], boundaries: &BoundarySet) -> CellIndex {
    CellIndex(
        descriptor
            .iter()
            .zip(&boundaries.0)
            .map(|(&d, b)| b.partition_point(|&x| x < d))
            .collect(),
    )
}

/// A grid plus its current boundaries; resolves descriptors to cells for any
/// partitioning kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    spec: GridSpec,
    boundaries: Option<BoundarySet>,
}

impl Partition {
    pub fn new(spec: GridSpec) -> Result<Self, PartitionError> {
        spec.validate()?;
        let boundaries = (spec.kind == GridKind::Sliding).then(|| spec.even_boundaries());
        Ok(Self { spec, boundaries })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn boundaries(&self) -> Option<&BoundarySet> {
        self.boundaries.as_ref()
    }

    pub fn total_cells(&self) -> usize {
        self.spec.total_cells()
    }

    pub fn resolutions(&self) -> Vec<usize> {
        self.spec.resolutions()
    }

    pub fn cell_of(&self, descriptor: &[f64]) -> Result<CellIndex, PartitionError> {
        match self.spec.kind {
            GridKind::Uniform => cell_of_uniform(descriptor, &self.spec),
            GridKind::Binary => {
                check_finite(descriptor)?;
                if descriptor.len() != self.spec.dims() {
                    return Err(PartitionError::DimensionMismatch {
                        expected: self.spec.dims(),
                        got: descriptor.len(),
                    });
                }
                let flags: Vec<bool> = descriptor.iter().map(|&v| v >= 0.5).collect();
                Ok(cell_of_binary(&flags))
            }
            GridKind::Sliding => {
                check_finite(descriptor)?;
                if descriptor.len() != self.spec.dims() {
                    return Err(PartitionError::DimensionMismatch {
                        expected: self.spec.dims(),
                        got: descriptor.len(),
                    });
                }
                Ok(cell_of_sliding(
                    descriptor,
                    self.boundaries.as_ref().expect("sliding grid has boundaries"),
                ))
            }
        }
    }

    /// Replaces the boundaries of a sliding grid from a descriptor buffer.
    pub fn recompute<'a, I>(&mut self, buffer: I) -> Result<(), PartitionError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        self.boundaries = Some(recompute_boundaries(buffer, &self.spec)?);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square4() -> GridSpec {
        GridSpec::uniform(vec![Axis::new(0.0, 1.0, 4); 2])
    }

    #[test]
    fn uniform_edges() {
        let s = square4();
        assert_eq!(cell_of_uniform(&[0.0, 0.0], &s).unwrap().0, vec![0, 0]);
        assert_eq!(cell_of_uniform(&[1.0, 1.0], &s).unwrap().0, vec![3, 3]);
        assert_eq!(cell_of_uniform(&[0.26, 0.74], &s).unwrap().0, vec![1, 2]);
        assert_eq!(cell_of_uniform(&[-3.0, 7.0], &s).unwrap().0, vec![0, 3]);
    }

    #[test]
    fn uniform_rejects_non_finite() {
        assert!(matches!(
            cell_of_uniform(&[f64::INFINITY, 0.0], &square4()),
            Err(PartitionError::NonFinite { index: 0, .. })
        ));
        assert!(cell_of_uniform(&[0.1], &square4()).is_err());
    }

    #[test]
    fn binary_map() {
        let spec = GridSpec::binary(8);
        assert_eq!(spec.total_cells(), 256);
        assert_eq!(cell_of_binary(&[false; 8]).0, vec![0; 8]);
        assert_eq!(cell_of_binary(&[true; 8]).0, vec![1; 8]);
        assert_eq!(cell_of_binary(&[true, false, true]).0, vec![1, 0, 1]);
        let p = Partition::new(GridSpec::binary(3)).unwrap();
        assert_eq!(p.cell_of(&[1.0, 0.0, 1.0]).unwrap().0, vec![1, 0, 1]);
    }

    #[test]
    fn binary_axes_validated() {
        let mut spec = GridSpec::binary(2);
        spec.axes[1].resolution = 3;
        assert!(spec.validate().is_err());
        assert!(GridSpec::uniform(vec![]).validate().is_err());
        assert!(GridSpec::uniform(vec![Axis::new(1.0, 0.0, 2)]).validate().is_err());
    }

    fn sliding1(r: usize) -> GridSpec {
        GridSpec::sliding(vec![Axis::new(0.0, 10.0, r)])
    }

    #[test]
    fn nearest_rank_quartiles() {
        let buf: Vec<Vec<f64>> = (1..=8).map(|v| vec![v as f64]).collect();
        let b = recompute_boundaries(buf.iter().map(Vec::as_slice), &sliding1(4)).unwrap();
        assert_eq!(b.0, vec![vec![2.0, 4.0, 6.0]]);
        let mut counts = [0; 4];
        for v in &buf {
            counts[cell_of_sliding(v, &b).0[0]] += 1;
        }
        assert_eq!(counts, [2, 2, 2, 2]);
    }

    #[test]
    fn degenerate_sliding_cases() {
        let buf = [vec![3.0], vec![1.0]];
        let b = recompute_boundaries(buf.iter().map(Vec::as_slice), &sliding1(1)).unwrap();
        assert!(b.0[0].is_empty());
        assert_eq!(cell_of_sliding(&[99.0], &b).0, vec![0]);

        let same = vec![vec![5.0]; 10];
        let b = recompute_boundaries(same.iter().map(Vec::as_slice), &sliding1(4)).unwrap();
        assert_eq!(b.0[0], vec![5.0; 3]);
        assert!(same.iter().all(|v| cell_of_sliding(v, &b).0 == vec![0]));

        let empty: Vec<Vec<f64>> = vec![];
        assert_eq!(
            recompute_boundaries(empty.iter().map(Vec::as_slice), &sliding1(4)),
            Err(PartitionError::EmptyBuffer)
        );
    }

    #[test]
    fn sliding_bins() {
        let b = BoundarySet(vec![vec![2.0, 4.0, 6.0]]);
        assert_eq!(cell_of_sliding(&[3.0], &b).0, vec![1]);
        assert_eq!(cell_of_sliding(&[-1.0], &b).0, vec![0]);
        assert_eq!(cell_of_sliding(&[100.0], &b).0, vec![3]);
    }

    #[test]
    fn enumerate_cells() {
        let cells = CellIndex::enumerate(&[2, 3]);
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[4].0, vec![1, 1]);
    }

    proptest! {
        #[test]
        fn uniform_is_total_and_monotone(
            a in prop::collection::vec(-2.0f64..3.0, 3),
            b in prop::collection::vec(-2.0f64..3.0, 3),
            res in prop::collection::vec(1usize..9, 3),
        ) {
            let spec = GridSpec::uniform(res.iter().map(|&r| Axis::new(0.0, 1.0, r)).collect());
            let ca = cell_of_uniform(&a, &spec).unwrap();
            prop_assert!(ca.is_within(&res));
            let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            let ch = cell_of_uniform(&hi, &spec).unwrap();
            prop_assert!(ca.0.iter().zip(&ch.0).all(|(x, y)| x <= y));
        }

        #[test]
        fn sliding_balance(
            raw in prop::collection::btree_set(-1000i64..1000, 1..200),
            r in 1usize..12,
        ) {
            let vals: Vec<Vec<f64>> = raw.iter().map(|&v| vec![v as f64 / 7.0]).collect();
            let spec = sliding1(r);
            let b = recompute_boundaries(vals.iter().map(Vec::as_slice), &spec).unwrap();
            prop_assert!(b.0[0].windows(2).all(|w| w[0] <= w[1]));
            let mut counts = vec![0usize; r];
            for v in &vals {
                let c = cell_of_sliding(v, &b);
                prop_assert!(c.is_within(&[r]));
                counts[c.0[0]] += 1;
            }
            let n = vals.len();
            let slack = n.div_ceil(r) - n / r + 1;
            let spread = counts.iter().max().unwrap() - counts.iter().min().unwrap();
            prop_assert!(spread <= slack);
        }
    }
}
