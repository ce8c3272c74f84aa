use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::GridSpec;

/// Fourier transforms and derivative multipliers for one grid.
///
/// Wavenumbers follow the usual FFT layout `0, 1, ..., m/2-1, m/2, -m/2+1, ..., -1`
/// scaled by `pi/L`. The Nyquist column `m/2` gets a zero first-derivative
/// multiplier, which keeps derivatives of real fields real and every
/// first-order operator exactly skew-adjoint on the lattice. The Laplacian
/// multiplier is built from the same table, so `d`, `div`, `grad` and the
/// Laplacian satisfy their composition identities to rounding.
///
/// Per-axis frequency tables and line offsets are precomputed; they dominate
/// the cost of the small per-line transforms otherwise.
pub struct SpectralOps {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    freqs: Vec<f64>,
    /// freq_axis[axis][flat] = derivative multiplier along `axis` at `flat`.
    freq_axis: Vec<Vec<f64>>,
    /// freq_sq[flat] = sum over axes of the squared multipliers.
    freq_sq: Vec<f64>,
    /// line_bases[axis] = flat indices with zero coordinate along `axis`.
    line_bases: Vec<Vec<u32>>,
    /// Radix-2 twiddles (forward, inverse) when `m` is a power of two; the
    /// slab transform below then runs all lines of an axis at once.
    twiddles: Option<(Vec<Complex<f64>>, Vec<Complex<f64>>)>,
    bit_reverse: Vec<usize>,
}

pub type Spectrum = Vec<Complex<f64>>;

impl SpectralOps {
    pub fn new(grid: GridSpec) -> Self {
        let m = grid.sites_per_axis();
        let n = grid.dim();
        let sites = grid.site_count();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scale = PI / grid.half_extent();
        let freqs: Vec<f64> = (0..m)
            .map(|k| {
                if k < m / 2 {
                    k as f64 * scale
                } else if k == m / 2 {
                    0.0
                } else {
                    (k as f64 - m as f64) * scale
                }
            })
            .collect();

        let mut freq_axis = vec![vec![0.0; sites]; n];
        let mut freq_sq = vec![0.0; sites];
        for axis in 0..n {
            let stride = grid.stride(axis);
            let table = &mut freq_axis[axis];
            for (flat, slot) in table.iter_mut().enumerate() {
                let w = freqs[(flat / stride) % m];
                *slot = w;
                freq_sq[flat] += w * w;
            }
        }

        let mut line_bases = Vec::with_capacity(n);
        for axis in 0..n {
            let stride = grid.stride(axis);
            let block = stride * m;
            let mut bases = Vec::with_capacity(sites / m);
            let mut base_hi = 0;
            while base_hi < sites {
                for base_lo in 0..stride {
                    bases.push((base_hi + base_lo) as u32);
                }
                base_hi += block;
            }
            line_bases.push(bases);
        }

        let twiddles = m.is_power_of_two().then(|| {
            let fwd: Vec<Complex<f64>> = (0..m / 2)
                .map(|k| Complex::from_polar(1.0, -2.0 * PI * k as f64 / m as f64))
                .collect();
            let inv: Vec<Complex<f64>> = fwd.iter().map(|c| c.conj()).collect();
            (fwd, inv)
        });
        let mut bit_reverse = vec![0usize; m];
        if m.is_power_of_two() {
            let bits = m.trailing_zeros();
            for (j, slot) in bit_reverse.iter_mut().enumerate() {
                *slot = (j.reverse_bits() >> (usize::BITS - bits)) & (m - 1);
            }
        }

        Self {
            grid,
            forward,
            inverse,
            freqs,
            freq_axis,
            freq_sq,
            line_bases,
            twiddles,
            bit_reverse,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn freq(&self, k: usize) -> f64 {
        self.freqs[k]
    }

    pub fn axis_multiplier(&self, axis: usize) -> &[f64] {
        &self.freq_axis[axis]
    }

    fn transform_axis(&self, data: &mut [Complex<f64>], axis: usize, fwd: bool) {
        if self.twiddles.is_some() {
            self.transform_axis_slab(data, axis, fwd);
            return;
        }
        let m = self.grid.sites_per_axis();
        let stride = self.grid.stride(axis);
        let mut line = vec![Complex::new(0.0, 0.0); m];
        let plan = if fwd { &self.forward } else { &self.inverse };
        for &base in &self.line_bases[axis] {
            let base = base as usize;
            for (k, l) in line.iter_mut().enumerate() {
                *l = data[base + k * stride];
            }
            plan.process(&mut line);
            for (k, l) in line.iter().enumerate() {
                data[base + k * stride] = *l;
            }
        }
    }

    /// Radix-2 transform applied to every line of an axis at once. Each
    /// butterfly touches two slabs of `stride` contiguous elements per
    /// block, so the inner loops vectorize and there is no per-line
    /// dispatch.
    fn transform_axis_slab(&self, data: &mut [Complex<f64>], axis: usize, fwd: bool) {
        let m = self.grid.sites_per_axis();
        let stride = self.grid.stride(axis);
        let block = stride * m;
        let total = data.len();
        let tw = {
            let (f, i) = self.twiddles.as_ref().unwrap();
            if fwd {
                f
            } else {
                i
            }
        };

        // Bit-reversal permutation of the axis coordinate, slab by slab.
        for (j, &jr) in self.bit_reverse.iter().enumerate() {
            if j < jr {
                let mut base = 0;
                while base < total {
                    let (head, tail) = data.split_at_mut(base + jr * stride);
                    let lo = &mut head[base + j * stride..base + j * stride + stride];
                    let hi = &mut tail[..stride];
                    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                        std::mem::swap(x, y);
                    }
                    base += block;
                }
            }
        }

        let mut len = 2;
        while len <= m {
            let half = len / 2;
            let twiddle_step = m / len;
            for j0 in (0..m).step_by(len) {
                for k in 0..half {
                    let w = tw[k * twiddle_step];
                    let mut base = 0;
                    while base < total {
                        let split = base + (j0 + k + half) * stride;
                        let (head, tail) = data.split_at_mut(split);
                        let lo_start = base + (j0 + k) * stride;
                        let lo = &mut head[lo_start..lo_start + stride];
                        let hi = &mut tail[..stride];
                        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                            let a = *x;
                            let b = Complex::new(
                                y.re * w.re - y.im * w.im,
                                y.re * w.im + y.im * w.re,
                            );
                            *x = a + b;
                            *y = a - b;
                        }
                        base += block;
                    }
                }
            }
            len *= 2;
        }
    }

    pub fn forward(&self, real: &[f64]) -> Spectrum {
        debug_assert_eq!(real.len(), self.grid.site_count());
        let mut spec: Spectrum = real.iter().map(|&v| Complex::new(v, 0.0)).collect();
        for axis in 0..self.grid.dim() {
            self.transform_axis(&mut spec, axis, true);
        }
        spec
    }

    pub fn inverse(&self, mut spec: Spectrum) -> Vec<f64> {
        for axis in 0..self.grid.dim() {
            self.transform_axis(&mut spec, axis, false);
        }
        let norm = 1.0 / self.grid.site_count() as f64;
        spec.iter().map(|c| c.re * norm).collect()
    }

    /// Multiplies the spectrum in place by `i * omega_axis(k)`.
    pub fn apply_derivative(&self, spec: &mut Spectrum, axis: usize) {
        for (c, &w) in spec.iter_mut().zip(&self.freq_axis[axis]) {
            *c = Complex::new(-c.im * w, c.re * w);
        }
    }

    /// Sum of squared derivative multipliers at a flat mode index.
    pub fn mode_freq_sq(&self, flat: usize) -> f64 {
        self.freq_sq[flat]
    }

    /// Applies the positive Laplacian multiplier `|omega|^2` in place,
    /// i.e. computes the spectrum of `-Δ f`.
    pub fn apply_minus_laplacian(&self, spec: &mut Spectrum) {
        for (c, &s) in spec.iter_mut().zip(&self.freq_sq) {
            *c *= s;
        }
    }

    /// Spectrum of the zero-mean solution of `Δ w = rhs`. Modes in the kernel
    /// of the discrete gradient (mean and pure-Nyquist) are set to zero.
    pub fn apply_inverse_laplacian(&self, spec: &mut Spectrum) {
        for (c, &s) in spec.iter_mut().zip(&self.freq_sq) {
            if s > 0.0 {
                *c /= -s;
            } else {
                *c = Complex::new(0.0, 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_round_trip() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let ops = SpectralOps::new(g);
        let data: Vec<f64> = (0..g.site_count()).map(|i| (i as f64).sin()).collect();
        let spec = ops.forward(&data);
        let back = ops.inverse(spec);
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_resolved_mode_is_exact() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let ops = SpectralOps::new(g);
        let l = g.half_extent();
        let mut data = vec![0.0; g.site_count()];
        let mut x = vec![0.0; 2];
        for (flat, v) in data.iter_mut().enumerate() {
            g.coordinates(flat, &mut x);
            *v = (PI * x[0] / l).sin();
        }
        let mut spec = ops.forward(&data);
        ops.apply_derivative(&mut spec, 0);
        let deriv = ops.inverse(spec);
        for (flat, d) in deriv.iter().enumerate() {
            g.coordinates(flat, &mut x);
            let expect = (PI / l) * (PI * x[0] / l).cos();
            assert!((d - expect).abs() < 1e-12, "got {d}, want {expect}");
        }
    }

    #[test]
    fn nyquist_derivative_vanishes() {
        let g = GridSpec::new(2, 4, 1.0).unwrap();
        let ops = SpectralOps::new(g);
        // Highest oscillation along axis 0: alternating +1/-1.
        let mut data = vec![0.0; g.site_count()];
        for (flat, v) in data.iter_mut().enumerate() {
            let j = g.axis_index(flat, 0);
            *v = if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        let mut spec = ops.forward(&data);
        ops.apply_derivative(&mut spec, 0);
        let deriv = ops.inverse(spec);
        for d in deriv {
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn tables_match_direct_computation() {
        let g = GridSpec::new(4, 6, 1.3).unwrap();
        let ops = SpectralOps::new(g);
        for flat in [0usize, 1, 7, 100, 1295] {
            let mut s = 0.0;
            for axis in 0..4 {
                let k = g.axis_index(flat, axis);
                let w = ops.freq(k);
                assert_eq!(ops.axis_multiplier(axis)[flat], w);
                s += w * w;
            }
            assert!((ops.mode_freq_sq(flat) - s).abs() < 1e-15);
        }
    }
}
