use rand::Rng;

use super::grid::GridSpec;

/// 0-form: one real value per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    pub values: Vec<f64>,
}

/// 1-form: `n` component arrays over the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    grid: GridSpec,
    pub comps: Vec<Vec<f64>>,
}

/// 2-form: one array per index pair `i < j`, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm {
    grid: GridSpec,
    pub comps: Vec<Vec<f64>>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.site_count()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.site_count());
        Self { grid, values }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.site_count()];
        let mut x = vec![0.0; grid.dim()];
        for (flat, v) in values.iter_mut().enumerate() {
            grid.coordinates(flat, &mut x);
            *v = f(&x);
        }
        Self { grid, values }
    }

    pub fn random(grid: GridSpec, rng: &mut impl Rng) -> Self {
        let values = (0..grid.site_count())
            .map(|_| standard_normal(rng))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += s * o;
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
    }

    /// `h^n`-weighted L2 inner product.
    pub fn l2_inner(&self, other: &Self) -> f64 {
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        dot * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.abs()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl OneForm {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.site_count()]; grid.dim()],
        }
    }

    pub fn from_comps(grid: GridSpec, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), grid.dim());
        for c in &comps {
            assert_eq!(c.len(), grid.site_count());
        }
        Self { grid, comps }
    }

    /// Builds the form componentwise from physical coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let mut comps = vec![vec![0.0; grid.site_count()]; grid.dim()];
        let mut x = vec![0.0; grid.dim()];
        for flat in 0..grid.site_count() {
            grid.coordinates(flat, &mut x);
            for (i, comp) in comps.iter_mut().enumerate() {
                comp[flat] = f(&x, i);
            }
        }
        Self { grid, comps }
    }

    pub fn random(grid: GridSpec, rng: &mut impl Rng) -> Self {
        let comps = (0..grid.dim())
            .map(|_| {
                (0..grid.site_count())
                    .map(|_| standard_normal(rng))
                    .collect()
            })
            .collect();
        Self { grid, comps }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            for v in c {
                *v *= s;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn add_scaled(&mut self, s: f64, other: &Self) {
        for (c, oc) in self.comps.iter_mut().zip(&other.comps) {
            for (v, o) in c.iter_mut().zip(oc) {
                *v += s * o;
            }
        }
    }

    pub fn l2_inner(&self, other: &Self) -> f64 {
        let mut dot = 0.0;
        for (c, oc) in self.comps.iter().zip(&other.comps) {
            for (a, b) in c.iter().zip(oc) {
                dot += a * b;
            }
        }
        dot * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Pointwise Euclidean magnitude `|A(x)|` per site.
    pub fn magnitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.site_count()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        for o in &mut out {
            *o = o.sqrt();
        }
        out
    }

    /// Pointwise squared magnitude `|A(x)|^2` per site.
    pub fn squared_magnitudes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.site_count()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }
}

impl TwoForm {
    pub fn zeros(grid: GridSpec) -> Self {
        let pairs = grid.dim() * (grid.dim() - 1) / 2;
        Self {
            grid,
            comps: vec![vec![0.0; grid.site_count()]; pairs],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Position of the pair `(i, j)`, `i < j`, in the component list.
    pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        // pairs (0,1),(0,2),...,(0,n-1),(1,2),...
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn component(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[Self::pair_index(self.grid.dim(), i, j)]
    }

    pub fn l2_inner(&self, other: &Self) -> f64 {
        let mut dot = 0.0;
        for (c, oc) in self.comps.iter().zip(&other.comps) {
            for (a, b) in c.iter().zip(oc) {
                dot += a * b;
            }
        }
        dot * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }
}

/// Box-Muller normal deviate; keeps the crate independent of rand_distr.
pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.gen::<f64>();
        if u > f64::MIN_POSITIVE {
            let v: f64 = rng.gen::<f64>();
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}
