//! The two-branch power nonlinearity and numerical certificates for its
//! growth, superlinearity and convexity-gap properties.
//!
//! The model takes the squared magnitude `s = <A, A>` and reads
//!
//! ```text
//! f(s) = a s^(p/2) + b   for s > 1,
//! f(s) = c s^(q/2)       for s <= 1,
//! ```
//!
//! with `2 < p < 2n/(n-2) < q` and coefficients solving `a + b = c`,
//! `a p = c q`, which makes `f` C1 across the knot at `s = 1`. The companion
//! magnitude form `F(x) = f(x^2)` has plain powers `p`, `q` and is what the
//! one-dimensional inequalities below are phrased in.
//!
//! The gap constant `c1` and the derivative growth constant `c2` exist by
//! construction but have no closed form; they are *measured* here as extrema
//! over structured sample sweeps and the measured values feed the energy
//! estimates downstream.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::types::standard_normal;
use crate::thread_cap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NonlinearityParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub r_threshold: f64,
}

/// Solves `a + b = c`, `a p = c q` for the branch coefficients.
pub fn solve_coefficients(p: f64, q: f64, c: f64) -> Result<(f64, f64)> {
    if !(p > 2.0) || !(q > p) || !p.is_finite() || !q.is_finite() {
        return Err(Error::InvalidParams(format!(
            "need 2 < p < q, got p={p}, q={q}"
        )));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParams(format!("need c > 0, got c={c}")));
    }
    let a = c * q / p;
    let b = c - a;
    Ok((a, b))
}

impl NonlinearityParams {
    pub fn new(n: usize, p: f64, q: f64, c: f64, alpha: f64, r_threshold: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "dimension must be even and at least 2, got {n}"
            )));
        }
        let (a, b) = solve_coefficients(p, q, c)?;
        // Critical-exponent window; for n = 2 the upper Sobolev bound is +inf
        // and only 2 < p < q is required.
        if n > 2 {
            let crit = 2.0 * n as f64 / (n as f64 - 2.0);
            if !(p < crit && crit < q) {
                return Err(Error::InvalidParams(format!(
                    "need p < 2n/(n-2) < q, got p={p}, q={q}, 2n/(n-2)={crit}"
                )));
            }
        }
        if !(alpha > 2.0) {
            return Err(Error::InvalidParams(format!(
                "need alpha > 2, got {alpha}"
            )));
        }
        if !(r_threshold >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "need R >= 0, got {r_threshold}"
            )));
        }
        let out = Self {
            n,
            p,
            q,
            a,
            b,
            c,
            alpha,
            r_threshold,
        };
        out.check_consistency()?;
        Ok(out)
    }

    /// Validates explicitly supplied coefficients (e.g. parsed from JSON).
    pub fn check_consistency(&self) -> Result<()> {
        if (self.a + self.b - self.c).abs() > 1e-12 * (1.0 + self.c.abs()) {
            return Err(Error::InvalidParams(format!(
                "a + b = {} but c = {}",
                self.a + self.b,
                self.c
            )));
        }
        if (self.a * self.p - self.c * self.q).abs() > 1e-12 * (1.0 + (self.c * self.q).abs()) {
            return Err(Error::InvalidParams(format!(
                "a p = {} but c q = {}",
                self.a * self.p,
                self.c * self.q
            )));
        }
        if !(self.a > 0.0) {
            return Err(Error::InvalidParams(format!("need a > 0, got {}", self.a)));
        }
        Ok(())
    }

    /// n=4, p=3, q=6, c=1, giving a=2, b=-1; alpha=p and R=0.1 are the
    /// certified superlinearity parameters.
    pub fn defaults() -> Self {
        Self::new(4, 3.0, 6.0, 1.0, 3.0, 0.1).expect("default parameters are valid")
    }

    /// `f(s)` with `s` the squared magnitude.
    pub fn value(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0, "f takes a squared magnitude, got {s}");
        if s > 1.0 {
            self.a * s.powf(0.5 * self.p) + self.b
        } else {
            self.c * s.powf(0.5 * self.q)
        }
    }

    /// `f'(s)`.
    pub fn derivative(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0, "f' takes a squared magnitude, got {s}");
        if s > 1.0 {
            0.5 * self.a * self.p * s.powf(0.5 * self.p - 1.0)
        } else {
            0.5 * self.c * self.q * s.powf(0.5 * self.q - 1.0)
        }
    }

    pub fn checked_value(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "argument must be a nonnegative squared magnitude, got {s}"
            )));
        }
        Ok(self.value(s))
    }

    pub fn checked_derivative(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "argument must be a nonnegative squared magnitude, got {s}"
            )));
        }
        Ok(self.derivative(s))
    }

    /// Magnitude form `F(x) = f(x^2)` (even in `x`).
    pub fn value_magnitude(&self, x: f64) -> f64 {
        self.value(x * x)
    }

    /// `F'(x) = 2 x f'(x^2)` (odd in `x`).
    pub fn derivative_magnitude(&self, x: f64) -> f64 {
        2.0 * x * self.derivative(x * x)
    }

    /// Left/right values and derivatives at the knot `s = 1`.
    pub fn knot_residuals(&self) -> (f64, f64) {
        let value_gap = (self.a + self.b) - self.c;
        let slope_gap = 0.5 * self.a * self.p - 0.5 * self.c * self.q;
        (value_gap.abs(), slope_gap.abs())
    }

    /// Convexity gap of `ξ -> f(|ξ|^2)` between two points of R^n, paired
    /// with the reference bound `min(|x-y|^p, |x-y|^q)`.
    pub fn convexity_gap(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), y.len());
        let mut xx = 0.0;
        let mut yy = 0.0;
        let mut y_dot_diff = 0.0;
        let mut dd = 0.0;
        for (&xi, &yi) in x.iter().zip(y) {
            xx += xi * xi;
            yy += yi * yi;
            let d = xi - yi;
            y_dot_diff += yi * d;
            dd += d * d;
        }
        let gap = self.value(xx) - self.value(yy) - 2.0 * self.derivative(yy) * y_dot_diff;
        let dist = dd.sqrt();
        let bound = dist.powf(self.p).min(dist.powf(self.q));
        (gap, bound)
    }

    /// Supremum of `f'(t) / min(t^{p/2-1}, t^{q/2-1})` over a log grid.
    pub fn measure_derivative_growth_constant(&self, sample_count: usize) -> f64 {
        self.measure_derivative_growth_on(sample_count, 1e-6, 1e6)
    }

    pub fn measure_derivative_growth_on(&self, sample_count: usize, lo: f64, hi: f64) -> f64 {
        assert!(sample_count >= 2 && lo > 0.0 && hi > lo);
        let mut sup = 0.0f64;
        for i in 0..sample_count {
            let t = log_grid(i, sample_count, lo, hi);
            let envelope = t.powf(0.5 * self.p - 1.0).min(t.powf(0.5 * self.q - 1.0));
            sup = sup.max(self.derivative(t) / envelope);
        }
        sup
    }

    /// Extrema of `f(s) / min(s^{p/2}, s^{q/2})` over a log grid:
    /// the measured growth-envelope constants (lower, upper).
    pub fn measure_growth_envelope(&self, sample_count: usize) -> (f64, f64) {
        assert!(sample_count >= 2);
        let mut inf = f64::INFINITY;
        let mut sup = 0.0f64;
        for i in 0..sample_count {
            let s = log_grid(i, sample_count, 1e-6, 1e6);
            let envelope = s.powf(0.5 * self.p).min(s.powf(0.5 * self.q));
            let ratio = self.value(s) / envelope;
            inf = inf.min(ratio);
            sup = sup.max(ratio);
        }
        (inf, sup)
    }

    /// Checks `alpha/2 * f(t) <= f'(t) t` and `f(t) > 0` on a log grid of
    /// `t >= r_min`. Returns the verdict and the worst margin
    /// `min f'(t) t - alpha/2 f(t)`.
    pub fn certify_superlinear_growth(
        &self,
        alpha: f64,
        r_min: f64,
        sample_count: usize,
    ) -> (bool, f64) {
        assert!(alpha > 2.0 && r_min > 0.0 && sample_count >= 2);
        let mut margin = f64::INFINITY;
        let mut ok = true;
        for i in 0..sample_count {
            let t = log_grid(i, sample_count, r_min, 1e6);
            let m = self.derivative(t) * t - 0.5 * alpha * self.value(t);
            margin = margin.min(m);
            if m < -1e-12 || !(self.value(t) > 0.0) {
                ok = false;
            }
        }
        (ok, margin)
    }

    /// Knot blow-up ratio of the magnitude form:
    /// `(F(x) - F(y) - F'(y)(x - y)) / |x - y|^q` on `x > 1 >= y > 0`.
    pub fn knot_gap_ratio(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 1.0) || !(y > 0.0 && y <= 1.0) || x == y {
            return Err(Error::InvalidParams(format!(
                "need x > 1 and 0 < y <= 1, got x={x}, y={y}"
            )));
        }
        let gap = self.value_magnitude(x) - self.value_magnitude(y)
            - self.derivative_magnitude(y) * (x - y);
        Ok(gap / (x - y).abs().powf(self.q))
    }

    /// `f(sqrt(a+b)) >= f(sqrt(a)) + f(sqrt(b))` for nonnegative arguments,
    /// within a 1e-12 slack.
    pub fn superadditivity_check(&self, a_val: f64, b_val: f64) -> bool {
        assert!(a_val >= 0.0 && b_val >= 0.0);
        self.value(a_val + b_val) - self.value(a_val) - self.value(b_val) >= -1e-12
    }

    /// Structured sweep measuring the convexity-gap constant
    /// `c1 = inf gap / bound`. The sweep stresses both branches, the knot
    /// window, antipodal, collinear and orthogonally-decomposed pairs.
    /// Fails with the offending pair if any gap is negative.
    pub fn measure_convexity_gap_constant(
        &self,
        sample_count: usize,
        near_knot_fraction: f64,
        rng_seed: u64,
        mut sample_sink: Option<&mut dyn Write>,
    ) -> Result<GapSweepReport> {
        assert!((0.0..=1.0).contains(&near_knot_fraction));
        let shards = 16usize;
        let per_shard = sample_count.div_ceil(shards);
        let threads = thread_cap().min(shards).max(1);

        let mut results: Vec<Result<ShardResult>> = Vec::with_capacity(shards);
        if threads <= 1 {
            for shard in 0..shards {
                results.push(self.gap_sweep_shard(
                    shard,
                    per_shard,
                    near_knot_fraction,
                    rng_seed,
                    &mut sample_sink,
                ));
            }
        } else {
            // Seed-per-shard keeps the sweep deterministic for any thread
            // count; shard results merge in index order. The CSV sink is
            // only supported single-threaded.
            assert!(
                sample_sink.is_none(),
                "sample sink requires SMAXWELL_THREADS=1"
            );
            let mut slots: Vec<Option<Result<ShardResult>>> = (0..shards).map(|_| None).collect();
            std::thread::scope(|scope| {
                let chunk = shards.div_ceil(threads);
                for (t, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
                    let base = t * chunk;
                    scope.spawn(move || {
                        for (off, slot) in slot_chunk.iter_mut().enumerate() {
                            *slot = Some(self.gap_sweep_shard(
                                base + off,
                                per_shard,
                                near_knot_fraction,
                                rng_seed,
                                &mut None,
                            ));
                        }
                    });
                }
            });
            results.extend(slots.into_iter().map(|s| s.expect("shard ran")));
        }

        let mut report = GapSweepReport {
            c1: f64::INFINITY,
            min_gap: f64::INFINITY,
            samples: 0,
            worst_x: Vec::new(),
            worst_y: Vec::new(),
        };
        for r in results {
            let shard = r?;
            report.samples += shard.samples;
            report.min_gap = report.min_gap.min(shard.min_gap);
            if shard.c1 < report.c1 {
                report.c1 = shard.c1;
                report.worst_x = shard.worst_x;
                report.worst_y = shard.worst_y;
            }
        }
        Ok(report)
    }

    fn gap_sweep_shard(
        &self,
        shard: usize,
        per_shard: usize,
        near_knot_fraction: f64,
        rng_seed: u64,
        sink: &mut Option<&mut dyn Write>,
    ) -> Result<ShardResult> {
        let dim = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (shard as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let mut out = ShardResult {
            c1: f64::INFINITY,
            min_gap: f64::INFINITY,
            samples: 0,
            worst_x: vec![0.0; dim],
            worst_y: vec![0.0; dim],
        };
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        for i in 0..per_shard {
            draw_pair(
                &mut rng,
                i % 8,
                near_knot_fraction,
                &mut x,
                &mut y,
            );
            let (gap, bound) = self.convexity_gap(&x, &y);
            // Pairs too close to coincident carry only cancellation noise and
            // are never the infimum (the gap is quadratic, the bound is a
            // higher power of the separation there).
            let sep: f64 = x
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = x.iter().chain(y.iter()).fold(1.0, |m, v| m.max(v.abs()));
            if sep < 1e-6 * scale {
                continue;
            }
            out.samples += 1;
            out.min_gap = out.min_gap.min(gap);
            if gap < -1e-9 * (1.0 + self.value(scale * scale).abs()) {
                return Err(Error::GapViolation {
                    gap,
                    x: x.clone(),
                    y: y.clone(),
                });
            }
            if bound < 1e-280 {
                continue;
            }
            let ratio = gap / bound;
            if let Some(w) = sink.as_deref_mut() {
                writeln!(w, "{},{},{},{}", out.samples, gap, bound, ratio)?;
            }
            if ratio < out.c1 {
                out.c1 = ratio;
                out.worst_x.copy_from_slice(&x);
                out.worst_y.copy_from_slice(&y);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct GapSweepReport {
    /// Measured infimum of gap / bound.
    pub c1: f64,
    /// Most negative raw gap seen (should be >= -1e-9 scale noise).
    pub min_gap: f64,
    pub samples: usize,
    pub worst_x: Vec<f64>,
    pub worst_y: Vec<f64>,
}

struct ShardResult {
    c1: f64,
    min_gap: f64,
    samples: usize,
    worst_x: Vec<f64>,
    worst_y: Vec<f64>,
}

/// Sharp remainder constant of the power expansion:
/// `inf over u != 0 of (|1+u|^r - 1 - r u) / |u|^r`, positive for `r > 2`.
pub fn power_remainder_constant(r: f64) -> Result<f64> {
    if !(r > 2.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("need r > 2, got {r}")));
    }
    let ratio = |u: f64| ((1.0 + u).abs().powf(r) - 1.0 - r * u) / u.abs().powf(r);
    let mut best = f64::INFINITY;
    let mut best_u = 1.0;
    // Coarse log sweep over both signs, then golden-section refinement
    // around the grid minimizer.
    let per_side = 4000;
    for side in [-1.0, 1.0] {
        for i in 0..per_side {
            let u = side * log_grid(i, per_side, 1e-6, 1e6);
            let v = ratio(u);
            if v < best {
                best = v;
                best_u = u;
            }
        }
    }
    let (lo, hi) = if best_u > 0.0 {
        (best_u / 1.3, best_u * 1.3)
    } else {
        (best_u * 1.3, best_u / 1.3)
    };
    let refined = golden_min(ratio, lo, hi, 300);
    Ok(best.min(refined))
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = 0.618_033_988_749_894_8;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

fn log_grid(i: usize, count: usize, lo: f64, hi: f64) -> f64 {
    let t = i as f64 / (count - 1) as f64;
    lo * (hi / lo).powf(t)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let t: f64 = rng.gen();
    lo * (hi / lo).powf(t)
}

fn unit_direction(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        let mut norm = 0.0;
        for o in out.iter_mut() {
            *o = standard_normal(rng);
            norm += *o * *o;
        }
        let norm = norm.sqrt();
        if norm > 1e-12 {
            for o in out.iter_mut() {
                *o /= norm;
            }
            return;
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, out: &mut [f64], magnitude: f64) {
    unit_direction(rng, out);
    for o in out.iter_mut() {
        *o *= magnitude;
    }
}

fn draw_pair(
    rng: &mut ChaCha8Rng,
    class: usize,
    near_knot_fraction: f64,
    x: &mut [f64],
    y: &mut [f64],
) {
    let dim = x.len();
    let knot = rng.gen::<f64>() < near_knot_fraction;
    let (lo, hi) = if knot { (0.85, 1.18) } else { (1e-4, 1e4) };
    match class {
        1 => {
            // both inside the unit ball
            let (lo, hi) = if knot { (0.85, 1.0) } else { (1e-4, 1.0) };
            let (mx, my) = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi));
            random_vec(rng, x, mx);
            random_vec(rng, y, my);
        }
        2 => {
            // both outside
            let (lo, hi) = if knot { (1.0, 1.18) } else { (1.0, 1e4) };
            let (mx, my) = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi));
            random_vec(rng, x, mx);
            random_vec(rng, y, my);
        }
        3 => {
            // straddling the knot
            let (llo, lhi) = if knot { (0.85, 1.0) } else { (1e-4, 1.0) };
            let (hlo, hhi) = if knot { (1.0, 1.18) } else { (1.0, 1e4) };
            let (mx, my) = (log_uniform(rng, hlo, hhi), log_uniform(rng, llo, lhi));
            random_vec(rng, x, mx);
            random_vec(rng, y, my);
        }
        4 => {
            // knot window regardless of the fraction
            let (mx, my) = (log_uniform(rng, 0.85, 1.18), log_uniform(rng, 0.85, 1.18));
            random_vec(rng, x, mx);
            random_vec(rng, y, my);
        }
        5 => {
            // antipodal
            let m = log_uniform(rng, lo, hi);
            random_vec(rng, x, m);
            for (yi, xi) in y.iter_mut().zip(x.iter()) {
                *yi = -*xi;
            }
        }
        6 => {
            // collinear
            let m = log_uniform(rng, lo, hi);
            random_vec(rng, y, m);
            let t = -2.0 + 4.0 * rng.gen::<f64>();
            for (xi, yi) in x.iter_mut().zip(y.iter()) {
                *xi = t * *yi;
            }
        }
        7 => {
            // x = parallel part + orthogonal part relative to y
            let m = log_uniform(rng, lo, hi);
            random_vec(rng, y, m);
            let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut e_perp = vec![0.0; dim];
            unit_direction(rng, &mut e_perp);
            let dot: f64 = e_perp.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            let mut norm = 0.0;
            for (e, yi) in e_perp.iter_mut().zip(y.iter()) {
                *e -= dot * yi / (ynorm * ynorm);
                norm += *e * *e;
            }
            norm = norm.sqrt().max(1e-12);
            let par = (-2.0 + 4.0 * rng.gen::<f64>()) * log_uniform(rng, lo, hi);
            let perp = log_uniform(rng, lo, hi);
            for ((xi, yi), e) in x.iter_mut().zip(y.iter()).zip(e_perp.iter()) {
                *xi = par * *yi / ynorm + perp * *e / norm;
            }
        }
        _ => {
            // unstructured log-uniform pair
            let (mx, my) = (log_uniform(rng, lo, hi), log_uniform(rng, lo, hi));
            random_vec(rng, x, mx);
            random_vec(rng, y, my);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults() -> NonlinearityParams {
        NonlinearityParams::defaults()
    }

    #[test]
    fn coefficients_solve_the_linear_system() {
        assert_eq!(solve_coefficients(3.0, 6.0, 1.0).unwrap(), (2.0, -1.0));
        let (a, b) = solve_coefficients(2.5, 5.0, 2.0).unwrap();
        assert_eq!((a, b), (4.0, -2.0));
        // Substitute back into both equations.
        assert!((a + b - 2.0).abs() < 1e-12);
        assert!((a * 2.5 - 2.0 * 5.0).abs() < 1e-12);

        assert!(solve_coefficients(3.0, 3.0, 1.0).is_err());
        assert!(solve_coefficients(5.0, 3.0, 1.0).is_err());
        assert!(solve_coefficients(3.0, 6.0, 0.0).is_err());
        assert!(solve_coefficients(3.0, 6.0, -1.0).is_err());
    }

    #[test]
    fn exponent_window_enforced() {
        // For n=4 the window is 2 < p < 4 < q.
        assert!(NonlinearityParams::new(4, 3.0, 6.0, 1.0, 3.0, 0.1).is_ok());
        assert!(NonlinearityParams::new(4, 4.5, 6.0, 1.0, 3.0, 0.1).is_err());
        assert!(NonlinearityParams::new(4, 3.0, 3.5, 1.0, 3.0, 0.1).is_err());
        // n=2 relaxes the window to 2 < p < q.
        assert!(NonlinearityParams::new(2, 5.0, 9.0, 1.0, 3.0, 0.1).is_ok());
        assert!(NonlinearityParams::new(4, 3.0, 6.0, 1.0, 2.0, 0.1).is_err());
    }

    #[test]
    fn frozen_values_on_default_parameters() {
        let f = defaults();
        assert_eq!(f.value(0.0), 0.0);
        assert!((f.value(1.0) - 1.0).abs() < 1e-15);
        // s = 4 on the outer branch: 2 * 4^1.5 - 1 = 15.
        assert!((f.value(4.0) - 15.0).abs() < 1e-12);
        assert_eq!(f.derivative(0.0), 0.0);
        // C1 matching at the knot: a p / 2 = c q / 2 = 3.
        assert!((f.derivative(1.0) - 3.0).abs() < 1e-15);
        // s = 4: 3 * sqrt(4) = 6.
        assert!((f.derivative(4.0) - 6.0).abs() < 1e-12);
        let (v, s) = f.knot_residuals();
        assert!(v <= 1e-12 && s <= 1e-12);
    }

    #[test]
    fn checked_accessors_reject_negative_arguments() {
        let f = defaults();
        assert!(f.checked_value(-0.5).is_err());
        assert!(f.checked_derivative(-1e-9).is_err());
        assert!(f.checked_value(0.0).is_ok());
    }

    #[test]
    fn derivative_growth_constant_is_the_knot_slope() {
        let f = defaults();
        let c2 = f.measure_derivative_growth_constant(5000);
        // For the default exponents the ratio is identically a p / 2 = 3.
        assert!(c2 >= 3.0 - 1e-9);
        assert!(c2 <= 3.0 + 1e-9);
        // Sup over a sub-range cannot exceed the global sup but stays >= the
        // knot value.
        let local = f.measure_derivative_growth_on(1000, 0.9, 1.1);
        assert!(local >= 0.5 * f.a * f.p - 1e-9);
        assert!(local <= c2 + 1e-9);
    }

    #[test]
    fn superlinearity_certificate() {
        let f = defaults();
        let (ok, margin) = f.certify_superlinear_growth(3.0, 0.1, 10_000);
        assert!(ok, "margin {margin}");
        assert!(margin > 0.0);
        // Barely-above-2 alpha is implied by the alpha = 3 certificate.
        let (ok2, _) = f.certify_superlinear_growth(2.000001, 1.0, 10_000);
        assert!(ok2);
        // alpha = 2p overshoots the asymptotic ratio p and must fail for
        // thresholds that include large t.
        let (bad, margin_bad) = f.certify_superlinear_growth(2.0 * f.p, 1.0, 10_000);
        assert!(!bad);
        assert!(margin_bad < 0.0);
    }

    #[test]
    fn growth_envelope_brackets_f() {
        let f = defaults();
        let (lo, hi) = f.measure_growth_envelope(5000);
        // Defaults: f / min-envelope ranges over [1, 2).
        assert!(lo >= 1.0 - 1e-9 && lo <= 1.0 + 1e-9);
        assert!(hi <= 2.0 + 1e-9 && hi >= 2.0 - 1e-3);
    }

    #[test]
    fn convexity_gap_frozen_cases() {
        let f = defaults();
        let (gap, bound) = f.convexity_gap(&[0.5, 0.0, 0.0, 0.0], &[0.5, 0.0, 0.0, 0.0]);
        assert_eq!(gap, 0.0);
        assert_eq!(bound, 0.0);
        // x = 0: gap = -f(|y|^2) + 2 f'(|y|^2) |y|^2 >= 0 on both branches.
        for mag in [0.3, 0.9, 1.0, 1.7, 4.0] {
            let y = [mag, 0.0, 0.0, 0.0];
            let (gap, _) = f.convexity_gap(&[0.0; 4], &y);
            assert!(gap >= 0.0, "mag {mag}: gap {gap}");
        }
    }

    #[test]
    fn gap_sweep_measures_positive_constant() {
        let f = defaults();
        let report = f
            .measure_convexity_gap_constant(20_000, 0.25, 7, None)
            .unwrap();
        assert!(report.c1 > 0.0, "c1 = {}", report.c1);
        assert!(report.c1.is_finite());
        assert!(report.min_gap >= -1e-12);
        assert!(report.samples > 15_000);

        // Antipodal pairs respect the measured constant.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let y: Vec<f64> = (0..4).map(|_| standard_normal(&mut rng)).collect();
            let x: Vec<f64> = y.iter().map(|v| -v).collect();
            let (gap, bound) = f.convexity_gap(&x, &y);
            assert!(gap >= report.c1 * bound - 1e-10 * (1.0 + gap.abs()));
        }
    }

    #[test]
    fn power_remainder_constant_matches_analytic_value() {
        // r = 3: the infimum is 2 - sqrt(2), attained at u = -2 - sqrt(2).
        let c = power_remainder_constant(3.0).unwrap();
        assert!((c - (2.0 - 2.0f64.sqrt())).abs() < 1e-6, "got {c}");
        assert!(c > 0.0);
        assert!(power_remainder_constant(2.0).is_err());
        // Large-|u| tails approach 1 from below/above; constant stays < 1.
        let c6 = power_remainder_constant(6.0).unwrap();
        assert!(c6 > 0.0 && c6 < 1.0);
    }

    #[test]
    fn knot_gap_ratio_blows_up_at_the_knot() {
        let f = defaults();
        let h = f.knot_gap_ratio(1.1, 0.9).unwrap();
        assert!(h > 0.0);
        // 2 * 8 - 1 - 1 - 6 = hand value for (2, 1):
        // F(2)=2*8-1=15, F(1)=1, F'(1)=6, gap = 15 - 1 - 6 = 8, ratio 8.
        let h2 = f.knot_gap_ratio(2.0, 1.0).unwrap();
        assert!((h2 - 8.0).abs() < 1e-12);
        // Squeezing toward the knot increases the ratio monotonically.
        let seq: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|k| f.knot_gap_ratio(1.0 + 1.0 / k, 1.0 - 1.0 / k).unwrap())
            .collect();
        assert!(seq[0] < seq[1] && seq[1] < seq[2], "{seq:?}");
        assert!(f.knot_gap_ratio(0.9, 0.5).is_err());
        assert!(f.knot_gap_ratio(1.5, 0.0).is_err());
    }

    #[test]
    fn superadditivity_on_a_grid() {
        let f = defaults();
        assert!(f.superadditivity_check(0.0, 2.3));
        assert!(f.superadditivity_check(1.0, 1.0));
        for i in 0..40 {
            for j in 0..40 {
                let a = i as f64 * 0.25;
                let b = j as f64 * 0.25;
                assert!(f.superadditivity_check(a, b), "failed at ({a}, {b})");
            }
        }
    }

    proptest! {
        #[test]
        fn knot_stays_c1_for_random_parameters(
            p in 2.05f64..3.95,
            dq in 0.1f64..6.0,
            c in 0.05f64..20.0,
        ) {
            let q = 4.0 + dq;
            let f = NonlinearityParams::new(4, p, q, c, 3.0, 0.1).unwrap();
            let (v, s) = f.knot_residuals();
            prop_assert!(v <= 1e-12 * (1.0 + c));
            prop_assert!(s <= 1e-12 * (1.0 + c * q));
            // One-sided evaluations agree across the knot.
            let eps = 1e-9;
            prop_assert!((f.value(1.0 + eps) - f.value(1.0 - eps)).abs() < 1e-7 * (1.0 + c));
        }

        #[test]
        fn derivative_is_nonnegative(s in 0.0f64..1e5) {
            let f = NonlinearityParams::defaults();
            prop_assert!(f.derivative(s) >= 0.0);
        }

        #[test]
        fn squared_composition_is_strictly_convex(
            xi in proptest::array::uniform4(-3.0f64..3.0),
            psi in proptest::array::uniform4(-3.0f64..3.0),
            lambda in 0.05f64..0.95,
        ) {
            let f = NonlinearityParams::defaults();
            let dist2: f64 = xi.iter().zip(&psi).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assume!(dist2 > 1e-4);
            let mix: Vec<f64> = xi
                .iter()
                .zip(&psi)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
            let lhs = lambda * f.value(sq(&xi)) + (1.0 - lambda) * f.value(sq(&psi));
            let rhs = f.value(sq(&mix));
            prop_assert!(lhs - rhs > 0.0, "convexity defect {}", lhs - rhs);
        }

        #[test]
        fn gap_respects_min_power_bound(
            x in proptest::array::uniform4(-5.0f64..5.0),
            y in proptest::array::uniform4(-5.0f64..5.0),
        ) {
            let f = NonlinearityParams::defaults();
            let (gap, bound) = f.convexity_gap(&x, &y);
            let sep: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assume!(sep > 1e-6);
            prop_assert!(gap >= 0.0);
            // Very conservative positive floor: the measured constant on the
            // default parameters sits well above 0.05.
            prop_assert!(gap >= 0.05 * bound);
        }
    }
}
