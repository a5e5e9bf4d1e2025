//! Uniform rectangular grids over the relative state space and the value
//! field stored on them.
//!
//! Storage order: the first state dimension varies fastest, i.e. the flat
//! index of `(i0, i1, i2, i3)` is `i0 + n0 * (i1 + n1 * (i2 + n2 * i3))`.

use serde::{Deserialize, Serialize};

use crate::dynamics::STATE_NAMES;
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub counts: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Grid {
    pub fn new(counts: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let grid = Self { counts, lo, hi };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.counts.len();
        if dim != 2 && dim != 4 {
            return Err(Error::invalid("grid.counts", format!("grid must be 2D or 4D, got {dim} dimensions")));
        }
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(Error::invalid("grid", "counts, lo and hi must have the same length"));
        }
        for i in 0..dim {
            if self.counts[i] < 3 {
                return Err(Error::invalid(format!("grid.counts[{i}]"), "need at least 3 nodes per dimension"));
            }
            let (lo, hi) = (self.lo[i], self.hi[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("grid.lo[{i}]"), format!("need finite lo < hi, got [{lo}, {hi}]")));
            }
        }
        self.counts
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::invalid("grid.counts", "node count overflows"))?;
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn spacing(&self, d: usize) -> f64 {
        (self.hi[d] - self.lo[d]) / (self.counts[d] - 1) as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|d| self.spacing(d)).collect()
    }

    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut strides = [0; MAX_DIM];
        let mut s = 1;
        for (d, &n) in self.counts.iter().enumerate() {
            strides[d] = s;
            s *= n;
        }
        strides
    }

    /// Coordinate of node `i` along dimension `d`; the last node is exactly `hi`.
    #[inline]
    pub fn coordinate(&self, d: usize, i: usize) -> f64 {
        if i + 1 == self.counts[d] {
            self.hi[d]
        } else {
            self.lo[d] + i as f64 * self.spacing(d)
        }
    }

    pub fn axis(&self, d: usize) -> Vec<f64> {
        (0..self.counts[d]).map(|i| self.coordinate(d, i)).collect()
    }

    #[inline]
    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for (d, &n) in self.counts.iter().enumerate() {
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for d in (0..self.dim()).rev() {
            flat = flat * self.counts[d] + idx[d];
        }
        flat
    }

    /// Node coordinates padded with zeros to four entries.
    #[inline]
    pub fn node_coords(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut z = [0.0; MAX_DIM];
        for d in 0..self.dim() {
            z[d] = self.coordinate(d, idx[d]);
        }
        z
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() >= self.dim() && (0..self.dim()).all(|d| z[d] >= self.lo[d] && z[d] <= self.hi[d])
    }

    /// Lower cell corner and local coordinate in `[0, 1]` per dimension.
    /// Points within 1e-9 cells of a node snap onto it so that queries at
    /// node coordinates reproduce nodal values exactly.
    pub fn locate(&self, z: &[f64]) -> Result<([usize; MAX_DIM], [f64; MAX_DIM])> {
        if z.len() != self.dim() {
            return Err(Error::invalid("state", format!("expected {} coordinates, got {}", self.dim(), z.len())));
        }
        let mut cell = [0; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for d in 0..self.dim() {
            let x = z[d];
            if !x.is_finite() || x < self.lo[d] || x > self.hi[d] {
                return Err(Error::OutOfDomain {
                    state: z.to_vec(),
                    reason: format!("{} = {x} not in [{}, {}]", STATE_NAMES[d], self.lo[d], self.hi[d]),
                });
            }
            let mut t = (x - self.lo[d]) / self.spacing(d);
            let nearest = t.round();
            if (t - nearest).abs() < 1e-9 {
                t = nearest;
            }
            let last = self.counts[d] - 1;
            let mut i = (t.floor() as usize).min(last);
            if i == last {
                i = last - 1;
            }
            cell[d] = i;
            frac[d] = (t - i as f64).clamp(0.0, 1.0);
        }
        Ok((cell, frac))
    }
}

/// Discretised value function.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub grid: Grid,
    pub values: Vec<f64>,
    /// Accumulated backward horizon (s).
    pub tau: f64,
    pub iterations: usize,
}

impl ValueField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("grid has {} nodes but {} values were given", grid.len(), values.len()),
            ));
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite value at node {n}")));
        }
        Ok(Self { grid, values, tau: 0.0, iterations: 0 })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|n| f(&grid.node_coords(n)[..dim])).collect();
        Self::new(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_first_dimension_fastest() {
        let g = Grid::new(vec![3, 4, 5, 6], vec![0.0; 4], vec![1.0; 4]).unwrap();
        assert_eq!(g.len(), 360);
        assert_eq!(g.flat_index(&[1, 0, 0, 0]), 1);
        assert_eq!(g.flat_index(&[0, 1, 0, 0]), 3);
        assert_eq!(g.flat_index(&[2, 3, 4, 5]), 359);
        for n in [0, 17, 200, 359] {
            assert_eq!(g.flat_index(&g.multi_index(n)), n);
        }
        assert_eq!(g.strides(), [1, 3, 12, 60]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(vec![2, 5], vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Grid::new(vec![5, 5, 5], vec![0.0; 3], vec![1.0; 3]).is_err());
        assert!(Grid::new(vec![5, 5], vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn axis_endpoints_are_exact() {
        let g = Grid::new(vec![161, 161], vec![-5.0, -12.5], vec![45.0, 12.5]).unwrap();
        let ax = g.axis(1);
        assert_eq!(ax[0], -12.5);
        assert_eq!(ax[160], 12.5);
        assert_eq!(g.spacing(0), 50.0 / 160.0);
    }

    #[test]
    fn locate_snaps_to_nodes_and_rejects_outside() {
        let g = Grid::new(vec![11, 11], vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let (cell, frac) = g.locate(&[0.3, 1.0]).unwrap();
        assert_eq!((cell[0], frac[0]), (3, 0.0));
        assert_eq!((cell[1], frac[1]), (9, 1.0));
        assert!(matches!(g.locate(&[1.01, 0.0]), Err(Error::OutOfDomain { .. })));
    }
}
