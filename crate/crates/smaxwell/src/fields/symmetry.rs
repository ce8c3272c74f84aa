use serde::{Deserialize, Serialize};

use super::calculus::Calculus;
use super::grid::GridSpec;
use super::types::{OneForm, ScalarField};
use crate::error::{Error, Result};

/// One lattice symmetry: a signed axis permutation.
///
/// The element maps basis vector `e_i` to `sign[i] * e_{perm[i]}`. Per
/// coordinate 2-plane only quarter-turn rotations are used. Reflections are
/// deliberately excluded: the rotational generator fields
/// `a_i (x_{2i-1} dx^{2i} - x_{2i} dx^{2i-1})` change sign under a planar
/// reflection, so averaging over a group containing reflections would
/// annihilate every such field and empty the divergence-free symmetric
/// subspace the solver works in.
struct GroupElement {
    perm: Vec<usize>,
    sign: Vec<f64>,
    /// site_map[s] = flat index of g·x_s.
    site_map: Vec<u32>,
}

/// Group averaging over the lattice rotation group: the product over
/// coordinate 2-planes of the cyclic group of quarter turns
/// (order `4^(n/2)` in total). Averaging is an idempotent, L2-orthogonal
/// projection onto the equivariant subspace.
pub struct Symmetrizer {
    grid: GridSpec,
    elements: Vec<GroupElement>,
}

impl Symmetrizer {
    pub fn new(grid: GridSpec) -> Result<Self> {
        if grid.sites_per_axis() % 2 != 0 {
            return Err(Error::InvalidGrid(
                "lattice symmetrization requires an even number of sites per axis".into(),
            ));
        }
        let blocks = grid.block_count();
        let n = grid.dim();
        let mut elements = Vec::with_capacity(4usize.pow(blocks as u32));
        let mut counters = vec![0usize; blocks];
        loop {
            // Assemble the signed permutation for this tuple of rotations.
            let mut perm = vec![0usize; n];
            let mut sign = vec![1.0f64; n];
            for (b, &r) in counters.iter().enumerate() {
                let (x, y) = (2 * b, 2 * b + 1);
                match r {
                    0 => {
                        perm[x] = x;
                        perm[y] = y;
                    }
                    1 => {
                        // e_x -> e_y, e_y -> -e_x
                        perm[x] = y;
                        perm[y] = x;
                        sign[y] = -1.0;
                    }
                    2 => {
                        perm[x] = x;
                        perm[y] = y;
                        sign[x] = -1.0;
                        sign[y] = -1.0;
                    }
                    _ => {
                        // e_x -> -e_y, e_y -> e_x
                        perm[x] = y;
                        perm[y] = x;
                        sign[x] = -1.0;
                    }
                }
            }
            elements.push(GroupElement::new(grid, perm, sign));

            // Odometer over rotation counts.
            let mut done = true;
            for c in counters.iter_mut() {
                *c += 1;
                if *c < 4 {
                    done = false;
                    break;
                }
                *c = 0;
            }
            if done {
                break;
            }
        }
        Ok(Self { grid, elements })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn group_order(&self) -> usize {
        self.elements.len()
    }

    /// Average of `w(g x)` over the group.
    pub fn scalar(&self, w: &ScalarField) -> ScalarField {
        let sites = self.grid.site_count();
        let mut out = vec![0.0; sites];
        for g in &self.elements {
            for (s, o) in out.iter_mut().enumerate() {
                *o += w.values[g.site_map[s] as usize];
            }
        }
        let norm = 1.0 / self.elements.len() as f64;
        for o in &mut out {
            *o *= norm;
        }
        ScalarField::from_values(self.grid, out)
    }

    /// Average of `g^{-1} A(g x)` over the group.
    pub fn one_form(&self, a: &OneForm) -> OneForm {
        let n = self.grid.dim();
        let sites = self.grid.site_count();
        let mut out = vec![vec![0.0; sites]; n];
        for g in &self.elements {
            for i in 0..n {
                // (g^{-1} A(gx))_i = sign[i] * A_{perm[i]}(gx)
                let src = &a.comps[g.perm[i]];
                let si = g.sign[i];
                let dst = &mut out[i];
                for (s, o) in dst.iter_mut().enumerate() {
                    *o += si * src[g.site_map[s] as usize];
                }
            }
        }
        let norm = 1.0 / self.elements.len() as f64;
        for c in &mut out {
            for o in c.iter_mut() {
                *o *= norm;
            }
        }
        OneForm::from_comps(self.grid, out)
    }

    /// Max-norm distance of `a` from its group average.
    pub fn equivariance_residual(&self, a: &OneForm) -> f64 {
        let mut avg = self.one_form(a);
        avg.add_scaled(-1.0, a);
        avg.linf_norm()
    }

    pub fn invariance_residual(&self, w: &ScalarField) -> f64 {
        let mut avg = self.scalar(w);
        avg.add_scaled(-1.0, w);
        avg.linf_norm()
    }

    /// Applies a single group element to a 1-form (for invariance tests).
    pub fn apply_element(&self, k: usize, a: &OneForm) -> OneForm {
        let g = &self.elements[k];
        let n = self.grid.dim();
        let sites = self.grid.site_count();
        let mut out = vec![vec![0.0; sites]; n];
        for i in 0..n {
            let src = &a.comps[g.perm[i]];
            let si = g.sign[i];
            for (s, o) in out[i].iter_mut().enumerate() {
                *o = si * src[g.site_map[s] as usize];
            }
        }
        OneForm::from_comps(self.grid, out)
    }
}

impl GroupElement {
    fn new(grid: GridSpec, perm: Vec<usize>, sign: Vec<f64>) -> Self {
        let n = grid.dim();
        let m = grid.sites_per_axis();
        let sites = grid.site_count();
        let mut site_map = vec![0u32; sites];
        let mut src_idx = vec![0usize; n];
        for (s,al) in site_map.iter_mut().enumerate() {
            // Index vector of g·x: coordinate at axis perm[i] is sign[i]*x_i,
            // and coordinate negation is the index map j -> (m - j) mod m.
            for i in 0..n {
                let j = grid.axis_index(s, i);
                src_idx[perm[i]] = if sign[i] > 0.0 { j } else { (m - j) % m };
            }
            *al = grid.flatten(&src_idx) as u32;
        }
        Self {
            perm,
            sign,
            site_map,
        }
    }
}

/// Radial bump amplitudes for the rotational generator form
/// `Σ_b a_b (x_{2b} dx^{2b+1} - x_{2b+1} dx^{2b})` (0-indexed axes).
///
/// Each `a_b` is `amplitudes[b]` times a product over all 2-planes of a
/// smooth bump in the in-plane radius, so the coefficients are invariant
/// under every planar rotation and the form is compactly supported inside
/// the box.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedProfile {
    pub amplitudes: Vec<f64>,
    pub support_radius: f64,
}

impl SeedProfile {
    pub fn bump(&self, r: f64) -> f64 {
        let t = r / self.support_radius;
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }
}

/// Samples the rotational generator field, then projects it onto the
/// divergence-free subspace. The sampled field is exactly equivariant; the
/// projection removes the O(h^k) spectral divergence of the sampled bump
/// while commuting with the group action.
pub fn seed_form(
    grid: GridSpec,
    profile: &SeedProfile,
    calc: &Calculus,
    sym: &Symmetrizer,
) -> Result<OneForm> {
    let blocks = grid.block_count();
    if profile.amplitudes.len() != blocks {
        return Err(Error::InvalidProfile(format!(
            "expected {} block amplitudes, got {}",
            blocks,
            profile.amplitudes.len()
        )));
    }
    if !(profile.support_radius > 0.0) || !profile.support_radius.is_finite() {
        return Err(Error::InvalidProfile(
            "support radius must be positive and finite".into(),
        ));
    }
    if profile.support_radius >= grid.half_extent() {
        return Err(Error::InvalidProfile(format!(
            "support radius {} touches the box boundary (half extent {})",
            profile.support_radius,
            grid.half_extent()
        )));
    }

    let sampled = sample_seed(grid, profile);
    let projected = calc.leray_project(&sym.one_form(&sampled));

    let amp = projected.linf_norm();
    if amp > 0.0 {
        let div_res = calc.divergence(&projected).linf_norm();
        if div_res > 1e-10 * (1.0 + amp) {
            return Err(Error::InvalidProfile(format!(
                "divergence residual {div_res:e} after projection"
            )));
        }
        let eq_res = sym.equivariance_residual(&projected);
        if eq_res > 1e-12 * (1.0 + amp) {
            return Err(Error::InvalidProfile(format!(
                "equivariance residual {eq_res:e} after projection"
            )));
        }
    }
    Ok(projected)
}

/// Raw lattice sample of the rotational generator (before projection).
pub fn sample_seed(grid: GridSpec, profile: &SeedProfile) -> OneForm {
    let blocks = grid.block_count();
    OneForm::from_fn(grid, |x, i| {
        let mut envelope = 1.0;
        for b in 0..blocks {
            let r = (x[2 * b] * x[2 * b] + x[2 * b + 1] * x[2 * b + 1]).sqrt();
            envelope *= profile.bump(r);
        }
        if envelope == 0.0 {
            return 0.0;
        }
        let b = i / 2;
        let a = profile.amplitudes[b] * envelope;
        if i % 2 == 0 {
            -a * x[2 * b + 1]
        } else {
            a * x[2 * b]
        }
    })
}
