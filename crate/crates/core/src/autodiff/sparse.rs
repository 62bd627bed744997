use std::sync::Arc;

use ndarray::{Array2, ArrayView2};

use super::{Real, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::Adjacency;

/// Constant CSR matrix with its transpose precomputed for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    fwd: Csr<T>,
    bwd: Csr<T>,
}

#[derive(Debug, Clone, PartialEq)]
struct Csr<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Real> Csr<T> {
    fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(u32, u32, T)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        for &(r, _, _) in &trip {
            indptr[r as usize + 1] += 1;
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let (indices, values) = trip.into_iter().map(|(_, c, v)| (c, v)).unzip();
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                trip.push((self.indices[k], r as u32, self.values[k]));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, trip)
    }

    fn mul_dense(&self, x: ArrayView2<T>) -> Array2<T> {
        let d = x.ncols();
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let mut out = Array2::<T>::zeros((self.nrows, d));
        let os = out.as_slice_mut().expect("fresh array");
        for r in 0..self.nrows {
            let orow = &mut os[r * d..(r + 1) * d];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k] as usize;
                let w = self.values[k];
                let xrow = &xs[c * d..(c + 1) * d];
                for (o, &xv) in orow.iter_mut().zip(xrow) {
                    *o += w * xv;
                }
            }
        }
        out
    }
}

impl<T: Real> SparseMatrix<T> {
    /// Builds from `(row, col, value)` triplets. Repeated coordinates are kept
    /// as separate entries and therefore summed by every product.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: Vec<(u32, u32, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = trip
            .iter()
            .find(|&&(r, c, _)| r as usize >= nrows || c as usize >= ncols)
        {
            return Err(Error::IndexOutOfRange(format!(
                "entry ({r}, {c}) in a {nrows}x{ncols} sparse matrix"
            )));
        }
        let fwd = Csr::from_triplets(nrows, ncols, trip);
        let bwd = fwd.transpose();
        Ok(Self { fwd, bwd })
    }

    /// Row-normalized aggregation matrix of a relation: row `i` averages the
    /// in-neighbors of destination `i` (weight `1 / in_degree(i)`); rows of
    /// nodes without in-neighbors are empty.
    pub fn mean_aggregation(adjacency: &Adjacency, n_src: usize, n_dst: usize) -> Result<Self> {
        if adjacency.num_sources() > n_src {
            return Err(Error::IndexOutOfRange(format!(
                "adjacency has {} sources, feature matrix has {n_src} rows",
                adjacency.num_sources()
            )));
        }
        if let Some(&v) = adjacency.targets().iter().find(|&&v| v as usize >= n_dst) {
            return Err(Error::IndexOutOfRange(format!(
                "destination {v} with only {n_dst} destination nodes"
            )));
        }
        let deg = adjacency.in_degrees(n_dst);
        let trip = adjacency
            .iter()
            .map(|(u, v)| (v, u, T::one() / T::from_usize(deg[v as usize]).unwrap()))
            .collect();
        Self::from_triplets(n_dst, n_src, trip)
    }

    /// `D^{-1/2} (A + I) D^{-1/2}` for a square adjacency, degrees taken from
    /// `A + I`.
    pub fn gcn_normalized(adjacency: &Adjacency, n: usize) -> Result<Self> {
        let mut deg = vec![1usize; n];
        for (u, _) in adjacency.iter() {
            deg[u as usize] += 1;
        }
        let inv_sqrt: Vec<T> = deg
            .iter()
            .map(|&d| T::one() / T::from_usize(d).unwrap().sqrt())
            .collect();
        let mut trip: Vec<(u32, u32, T)> = adjacency
            .iter()
            .map(|(u, v)| (u, v, inv_sqrt[u as usize] * inv_sqrt[v as usize]))
            .collect();
        trip.extend((0..n as u32).map(|i| (i, i, inv_sqrt[i as usize] * inv_sqrt[i as usize])));
        Self::from_triplets(n, n, trip)
    }

    pub fn nrows(&self) -> usize {
        self.fwd.nrows
    }

    pub fn ncols(&self) -> usize {
        self.fwd.ncols
    }

    pub fn nnz(&self) -> usize {
        self.fwd.values.len()
    }

    pub fn mul_dense(&self, x: ArrayView2<T>) -> Array2<T> {
        self.fwd.mul_dense(x)
    }

    pub fn transpose_mul_dense(&self, x: ArrayView2<T>) -> Array2<T> {
        self.bwd.mul_dense(x)
    }

    /// Dense copy, for reference computations.
    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.nrows(), self.ncols()));
        for r in 0..self.fwd.nrows {
            for k in self.fwd.indptr[r]..self.fwd.indptr[r + 1] {
                out[[r, self.fwd.indices[k] as usize]] += self.fwd.values[k];
            }
        }
        out
    }
}

/// Row `i` of the result is the mean of the `features` rows of `i`'s
/// in-neighbors under the relation (zero when it has none).
pub fn relation_mean_aggregate<T: Real>(
    tape: &mut Tape<T>,
    features: Var,
    adjacency: &Adjacency,
    n_dst: usize,
) -> Result<Var> {
    let n_src = tape.shape(features).0;
    let s = SparseMatrix::mean_aggregation(adjacency, n_src, n_dst)?;
    tape.spmm(Arc::new(s), features)
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::autodiff::{grad_check, GradCheckConfig};

    #[test]
    fn mean_of_two_neighbors() {
        let adj = Adjacency::from_sorted_unique(3, vec![(0, 2), (1, 2)]);
        let mut t = Tape::<f64>::new();
        let x = t.leaf_array(array![[1.0, 0.0], [0.0, 1.0], [9.0, 9.0]]);
        let y = relation_mean_aggregate(&mut t, x, &adj, 3).unwrap();
        assert_eq!(t.value(y).row(2).to_vec(), vec![0.5, 0.5]);
        // no in-neighbors
        assert_eq!(t.value(y).row(0).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn self_edges_give_identity() {
        let adj = Adjacency::from_sorted_unique(4, (0..4).map(|i| (i, i)).collect());
        let mut t = Tape::<f64>::new();
        let x = t.leaf_array(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]);
        let y = relation_mean_aggregate(&mut t, x, &adj, 4).unwrap();
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn out_of_range_destination_is_an_error() {
        let adj = Adjacency::from_sorted_unique(2, vec![(0, 5)]);
        let mut t = Tape::<f32>::new();
        let x = t.leaf_array(Array2::zeros((2, 2)));
        assert!(matches!(
            relation_mean_aggregate(&mut t, x, &adj, 3),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut pairs = std::collections::BTreeSet::new();
        while pairs.len() < 12 {
            pairs.insert((rng.random_range(0..6u32), rng.random_range(0..6u32)));
        }
        let adj = Adjacency::from_sorted_unique(6, pairs.into_iter().collect());
        let x = Array2::from_shape_simple_fn((6, 3), || rng.random_range(-1.0..1.0));
        let report = grad_check(
            |t, p| {
                let y = relation_mean_aggregate(t, p[0], &adj, 6)?;
                let y = t.sigmoid(y);
                Ok(t.sum(y))
            },
            &[x],
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed);
        assert!(report.max_rel_error() < 1e-3);
    }

    #[test]
    fn gcn_normalization_of_an_edge() {
        let adj = Adjacency::from_sorted_unique(2, vec![(0, 1), (1, 0)]);
        let s = SparseMatrix::<f64>::gcn_normalized(&adj, 2).unwrap();
        let d = s.to_dense();
        for v in d.iter() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }
}
