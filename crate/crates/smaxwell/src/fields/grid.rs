use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic lattice on the box `[-L, L)^n`.
///
/// `n` must be even so the coordinate axes pair into 2-planes, and `m` must be
/// even so quarter-turn rotations of each 2-plane map the lattice onto itself.
/// Sites along each axis sit at `-L + j*h`, `j = 0..m`, with spacing `h = 2L/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    m: usize,
    half_extent: f64,
}

impl GridSpec {
    pub fn new(n: usize, m: usize, half_extent: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be even and at least 2, got {n}"
            )));
        }
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "sites per axis must be even and at least 2, got {m}"
            )));
        }
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half extent must be positive and finite, got {half_extent}"
            )));
        }
        // Guard against absurd site counts before allocating anything.
        let sites = (m as u128).checked_pow(n as u32);
        match sites {
            Some(s) if s <= 1 << 24 => Ok(Self { n, m, half_extent }),
            _ => Err(Error::InvalidGrid(format!(
                "lattice {m}^{n} exceeds the supported site budget"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sites_per_axis(&self) -> usize {
        self.m
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.m as f64
    }

    pub fn site_count(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    /// Quadrature weight of one cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn block_count(&self) -> usize {
        self.n / 2
    }

    /// Stride of `axis` in the flat row-major layout (last axis fastest).
    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow((self.n - 1 - axis) as u32)
    }

    /// Per-axis lattice index of a flat site index.
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.m
    }

    pub fn coordinate_of_index(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.spacing()
    }

    /// Writes the physical coordinates of `flat` into `out[..n]`.
    pub fn coordinates(&self, flat: usize, out: &mut [f64]) {
        debug_assert!(out.len() >= self.n);
        for axis in 0..self.n {
            out[axis] = self.coordinate_of_index(self.axis_index(flat, axis));
        }
    }

    /// Flat index from per-axis indices.
    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.n);
        let mut flat = 0;
        for (axis, &j) in idx.iter().enumerate() {
            debug_assert!(j < self.m);
            flat += j * self.stride(axis);
        }
        flat
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 8, 1.0).is_err());
        assert!(GridSpec::new(0, 8, 1.0).is_err());
        assert!(GridSpec::new(4, 7, 1.0).is_err());
        assert!(GridSpec::new(4, 8, 0.0).is_err());
        assert!(GridSpec::new(4, 8, f64::NAN).is_err());
        assert!(GridSpec::new(4, 8, 1.0).is_ok());
    }

    #[test]
    fn indexing_round_trips() {
        let g = GridSpec::new(4, 6, 1.5).unwrap();
        assert_eq!(g.site_count(), 1296);
        for flat in [0usize, 1, 5, 6, 35, 1295] {
            let idx: Vec<usize> = (0..4).map(|a| g.axis_index(flat, a)).collect();
            assert_eq!(g.flatten(&idx), flat);
        }
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coordinate_of_index(0), -1.5);
        assert_eq!(g.coordinate_of_index(3), 0.0);
    }
}
