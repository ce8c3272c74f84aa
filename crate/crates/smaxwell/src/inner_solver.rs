//! The inner problem: for a fixed divergence-free `u`, minimize the strictly
//! convex nonlinear energy `F_u(w) = ∫ f(|u + ∇w|^2) dx` over zero-mean,
//! rotation-invariant scalar potentials, and the companion problem that
//! minimizes the `L^p + L^q` norm of `u + ∇w` instead.
//!
//! Both solvers are projected gradient descent with Barzilai-Borwein trial
//! steps guarded by an Armijo backtracking line search, so the objective is
//! strictly decreasing until convergence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Calculus, OneForm, ScalarField, Symmetrizer};
use crate::nonlinearity::NonlinearityParams;
use crate::orlicz::{self, OrliczPair};
use crate::trace::ConvergenceTrace;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InnerConfig {
    /// Stop when the L2 norm of the reduced gradient falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub ls_shrink: f64,
    pub ls_slope: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            grad_tol: 2e-7,
            max_iter: 8000,
            ls_shrink: 0.5,
            ls_slope: 1e-4,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.ls_shrink > 0.0 && self.ls_shrink < 1.0) {
            return Err(Error::InvalidParams(format!(
                "ls_shrink must be in (0, 1), got {}",
                self.ls_shrink
            )));
        }
        if !(self.ls_slope > 0.0 && self.ls_slope < 0.5) {
            return Err(Error::InvalidParams(format!(
                "ls_slope must be in (0, 0.5), got {}",
                self.ls_slope
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PotentialMin {
    pub w: ScalarField,
    pub objective: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone)]
pub struct PotentialNormMin {
    pub w: ScalarField,
    /// `|u + ∇w|` in the `L^p + L^q` norm at the minimizer.
    pub norm: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub trace: ConvergenceTrace,
}

#[derive(Debug, Clone)]
pub struct NormFloor {
    /// Minimal `|u + ∇Φ_γ(u)|^γ` over the sampled unit sphere of the span.
    pub value: f64,
    pub worst_coefficients: Vec<f64>,
}

pub struct InnerSolver<'a> {
    pub params: &'a NonlinearityParams,
    pub calc: &'a Calculus,
    pub sym: &'a Symmetrizer,
    pub cfg: InnerConfig,
}

/// Limited-memory quasi-Newton state over the zero-mean invariant scalars,
/// seeded with the inverse-Laplacian metric. Produces descent directions for
/// the Armijo-backtracked line search; curvature pairs with nonpositive
/// products are dropped.
struct LbfgsState {
    pairs: std::collections::VecDeque<(ScalarField, ScalarField, f64)>,
    memory: usize,
}

impl LbfgsState {
    fn new(memory: usize) -> Self {
        Self {
            pairs: std::collections::VecDeque::new(),
            memory,
        }
    }

    fn push(&mut self, s: ScalarField, y: ScalarField) {
        // Degenerate flat directions produce near-orthogonal (s, y) pairs
        // whose reciprocal curvature would poison the recursion; skip them.
        let sy = s.l2_inner(&y);
        if sy > 1e-10 * s.l2_norm() * y.l2_norm() && sy > 1e-300 {
            if self.pairs.len() == self.memory {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    fn direction(&self, calc: &Calculus, g: &ScalarField) -> ScalarField {
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let alpha = rho * s.l2_inner(&q);
            q.add_scaled(-alpha, y);
            alphas.push(alpha);
        }
        let mut r = calc.inverse_minus_laplacian(&q);
        // Scale the seed metric by the most recent curvature estimate
        // measured against the same metric.
        if let Some((_s, y, rho)) = self.pairs.back() {
            let y_metric = calc.inverse_minus_laplacian(y);
            let yy = y.l2_inner(&y_metric);
            if yy > 1e-300 {
                r.scale(1.0 / (rho * yy));
            }
        }
        for ((s, y, rho), alpha) in self.pairs.iter().zip(alphas.iter().rev()) {
            let beta = rho * y.l2_inner(&r);
            r.add_scaled(alpha - beta, s);
        }
        r
    }
}

impl<'a> InnerSolver<'a> {
    pub fn new(
        params: &'a NonlinearityParams,
        calc: &'a Calculus,
        sym: &'a Symmetrizer,
        cfg: InnerConfig,
    ) -> Self {
        Self {
            params,
            calc,
            sym,
            cfg,
        }
    }

    /// `F(A) = ∫ f(|A|^2) dx`. Compensated summation keeps the evaluation
    /// noise below the line-search decrease thresholds near the minimizer.
    pub fn f_total(&self, a: &OneForm) -> f64 {
        let w = a.grid().cell_volume();
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for &s in &a.squared_magnitudes() {
            let term = self.params.value(s) - carry;
            let next = sum + term;
            carry = (next - sum) - term;
            sum = next;
        }
        sum * w
    }

    /// Density `2 f'(|A|^2) A`; its L2 pairing realizes the differential
    /// of `f_total`.
    pub fn df_field(&self, a: &OneForm) -> OneForm {
        let sq = a.squared_magnitudes();
        let mut out = a.clone();
        for c in &mut out.comps {
            for (v, &s) in c.iter_mut().zip(&sq) {
                *v *= 2.0 * self.params.derivative(s);
            }
        }
        out
    }

    /// Integrated superlinearity excess `∫ [f'(|v|^2)|v|^2 - α/2 f(|v|^2)]`.
    pub fn superlinearity_excess(&self, v: &OneForm) -> f64 {
        let w = v.grid().cell_volume();
        v.squared_magnitudes()
            .iter()
            .map(|&s| self.params.derivative(s) * s - 0.5 * self.params.alpha * self.params.value(s))
            .sum::<f64>()
            * w
    }

    /// L2 representative of the `w`-gradient of `F_u`, projected onto the
    /// zero-mean invariant subspace: `-div(2 f'(|v|^2) v)` with `v = u + ∇w`.
    pub fn reduced_gradient(&self, u: &OneForm, w: &ScalarField) -> ScalarField {
        let mut v = self.calc.gradient(w);
        v.add_scaled(1.0, u);
        self.reduced_gradient_at(&v)
    }

    fn reduced_gradient_at(&self, v: &OneForm) -> ScalarField {
        let density = self.df_field(v);
        let mut g = self.calc.divergence(&density);
        g.scale(-1.0);
        self.project_scalar(g)
    }

    /// Zero-mean, group-invariant projection of a scalar field.
    pub fn project_scalar(&self, mut w: ScalarField) -> ScalarField {
        w.subtract_mean();
        self.sym.scalar(&w)
    }

    /// Minimizer of `F_u` over the admissible potentials. Starts from the
    /// better of `w0` and 0, so the value never exceeds `F_u(0) = F(u)`.
    ///
    /// The search direction is the symmetrized inverse-Laplacian
    /// preconditioned gradient, and because `u + ∇w` is affine in `w` the
    /// line search updates the field by a pointwise axpy instead of fresh
    /// transforms. The iterate is fully re-projected periodically to scrub
    /// rounding drift out of the invariant subspace.
    pub fn minimize_potential(&self, u: &OneForm, w0: Option<&ScalarField>) -> PotentialMin {
        let grid = u.grid();
        let field_at = |w: &ScalarField| -> OneForm {
            let mut v = self.calc.gradient(w);
            v.add_scaled(1.0, u);
            v
        };

        let mut w = ScalarField::zeros(grid);
        let mut v = u.clone();
        let mut obj = self.f_total(&v);
        if let Some(candidate) = w0 {
            let projected = self.project_scalar(candidate.clone());
            let v_c = field_at(&projected);
            let obj_c = self.f_total(&v_c);
            if obj_c < obj {
                w = projected;
                v = v_c;
                obj = obj_c;
            }
        }

        let mut trace = ConvergenceTrace::default();
        let mut lbfgs = LbfgsState::new(10);
        let mut prev: Option<(ScalarField, ScalarField)> = None;
        let mut converged = false;
        let mut grad_norm = f64::INFINITY;
        let mut last_step = 0.0;
        let mut stagnant = 0usize;

        for it in 0..self.cfg.max_iter {
            if it % 32 == 31 {
                w = self.project_scalar(w);
                v = field_at(&w);
            }
            let g = self.reduced_gradient_at(&v);
            grad_norm = g.l2_norm();
            trace.push(it, obj, grad_norm, last_step);
            if grad_norm <= self.cfg.grad_tol {
                converged = true;
                break;
            }
            if let Some((w_prev, g_prev)) = prev.take() {
                let mut s = w.clone();
                s.add_scaled(-1.0, &w_prev);
                let mut y = g.clone();
                y.add_scaled(-1.0, &g_prev);
                lbfgs.push(s, y);
            }
            prev = Some((w.clone(), g.clone()));

            let mut d = self.project_scalar(lbfgs.direction(self.calc, &g));
            let mut slope0 = g.l2_inner(&d);
            if slope0 <= 0.0 {
                // Fall back to the plain preconditioned gradient.
                d = self.project_scalar(self.calc.inverse_minus_laplacian(&g));
                slope0 = g.l2_inner(&d);
                if slope0 <= 0.0 {
                    break;
                }
            }
            let gd = self.calc.gradient(&d);

            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut v_try = v.clone();
                v_try.add_scaled(-step, &gd);
                let obj_try = self.f_total(&v_try);
                if obj_try.is_finite() && obj_try <= obj - self.cfg.ls_slope * step * slope0 {
                    stagnant = if obj - obj_try <= 1e-15 * (1.0 + obj.abs()) {
                        stagnant + 1
                    } else {
                        0
                    };
                    w.add_scaled(-step, &d);
                    v = v_try;
                    obj = obj_try;
                    last_step = step;
                    accepted = true;
                    break;
                }
                step *= self.cfg.ls_shrink;
            }
            // Give up once progress sits at the floating-point floor.
            if !accepted || stagnant > 50 {
                break;
            }
        }

        let w = self.project_scalar(w);
        PotentialMin {
            w,
            objective: obj,
            grad_norm,
            converged,
            trace,
        }
    }

    /// Minimizer of `w -> |u + ∇w|` in the `L^p + L^q` norm (the monotone
    /// power γ > 1 does not move the argmin, so the norm itself is
    /// minimized). The envelope gradient uses the minimizing split.
    pub fn minimize_potential_norm(
        &self,
        u: &OneForm,
        pair: OrliczPair,
        w0: Option<&ScalarField>,
    ) -> PotentialNormMin {
        let grid = u.grid();
        let wcell = grid.cell_volume();
        let norm_tol = (self.cfg.grad_tol * 1e-2).max(1e-13);
        let mut split_cache: Option<Vec<f64>> = None;

        // Warm-started, non-thorough inner evaluations keep the line search
        // cheap; the final reported norm is recomputed thoroughly below.
        let eval = |w: &ScalarField, cache: &mut Option<Vec<f64>>| -> (f64, OneForm) {
            let mut v = self.calc.gradient(w);
            v.add_scaled(1.0, u);
            let mags = v.magnitudes();
            let res = orlicz::norm_exact_warm(
                &mags,
                wcell,
                pair,
                norm_tol,
                20_000,
                cache.as_deref(),
                false,
            );
            *cache = Some(res.split.fractions.clone());
            (res.value, v)
        };

        let zero = ScalarField::zeros(grid);
        let mut w = match w0 {
            Some(candidate) => self.project_scalar(candidate.clone()),
            None => zero.clone(),
        };
        let (mut obj, mut v) = eval(&w, &mut split_cache);
        {
            let mut no_w_cache = None;
            let (obj_zero, _) = eval(&zero, &mut no_w_cache);
            if obj_zero < obj {
                w = zero;
                let refreshed = eval(&w, &mut split_cache);
                obj = refreshed.0;
                v = refreshed.1;
            }
        }

        let mut trace = ConvergenceTrace::default();
        let mut prev: Option<(ScalarField, ScalarField)> = None;
        let mut converged = false;
        let mut grad_norm = f64::INFINITY;
        let mut last_step = 0.0;

        let norm_of = |v: &OneForm, cache: &mut Option<Vec<f64>>| -> f64 {
            let res = orlicz::norm_exact_warm(
                &v.magnitudes(),
                wcell,
                pair,
                norm_tol,
                20_000,
                cache.as_deref(),
                false,
            );
            *cache = Some(res.split.fractions.clone());
            res.value
        };

        let mut lbfgs = LbfgsState::new(10);
        for it in 0..self.cfg.max_iter {
            let g = self.norm_envelope_gradient(&v, pair, split_cache.as_ref().unwrap(), wcell);
            grad_norm = g.l2_norm();
            trace.push(it, obj, grad_norm, last_step);
            if grad_norm <= self.cfg.grad_tol {
                converged = true;
                break;
            }
            if let Some((w_prev, g_prev)) = prev.take() {
                let mut s = w.clone();
                s.add_scaled(-1.0, &w_prev);
                let mut y = g.clone();
                y.add_scaled(-1.0, &g_prev);
                lbfgs.push(s, y);
            }
            prev = Some((w.clone(), g.clone()));

            let mut d = self.project_scalar(lbfgs.direction(self.calc, &g));
            let mut slope0 = g.l2_inner(&d);
            if slope0 <= 0.0 {
                d = self.project_scalar(self.calc.inverse_minus_laplacian(&g));
                slope0 = g.l2_inner(&d);
                if slope0 <= 0.0 {
                    break;
                }
            }
            let gd = self.calc.gradient(&d);

            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut v_try = v.clone();
                v_try.add_scaled(-step, &gd);
                let obj_try = norm_of(&v_try, &mut split_cache);
                if obj_try.is_finite() && obj_try <= obj - self.cfg.ls_slope * step * slope0 {
                    w.add_scaled(-step, &d);
                    v = v_try;
                    obj = obj_try;
                    last_step = step;
                    accepted = true;
                    break;
                }
                step *= self.cfg.ls_shrink;
            }
            if !accepted {
                converged = grad_norm <= self.cfg.grad_tol * 100.0;
                break;
            }
        }
        let w = self.project_scalar(w);

        let final_norm = {
            let mut v = self.calc.gradient(&w);
            v.add_scaled(1.0, u);
            orlicz::norm_exact_warm(
                &v.magnitudes(),
                wcell,
                pair,
                norm_tol,
                20_000,
                split_cache.as_deref(),
                true,
            )
            .value
        };
        PotentialNormMin {
            w,
            norm: final_norm.min(obj),
            grad_norm,
            converged,
            trace,
        }
    }

    /// Envelope gradient of `w -> |u + ∇w|` at the minimizing split: the
    /// split fractions are stationary, so only the explicit `v` dependence
    /// contributes. The result is `-div(η)/h^n` with the dual density `η`.
    fn norm_envelope_gradient(
        &self,
        v: &OneForm,
        pair: OrliczPair,
        fractions: &[f64],
        wcell: f64,
    ) -> ScalarField {
        let mags = v.magnitudes();
        let mut pn_sum = 0.0;
        let mut qn_sum = 0.0;
        for (&s, &t) in mags.iter().zip(fractions) {
            pn_sum += orlicz::fast_pow(t * s, pair.p());
            qn_sum += orlicz::fast_pow((1.0 - t) * s, pair.q());
        }
        let pn = orlicz::fast_pow(pn_sum * wcell, 1.0 / pair.p());
        let qn = orlicz::fast_pow(qn_sum * wcell, 1.0 / pair.q());
        let floor = 1e-12 * (1.0 + mags.iter().fold(0.0f64, |m, &s| m.max(s)));

        // eta_i = w [ t^p s^{p-2} / P^{p-1} + (1-t)^q s^{q-2} / Q^{q-1} ] v_i
        let mut eta = v.clone();
        let pden = if pn > floor {
            orlicz::fast_pow(pn, pair.p() - 1.0)
        } else {
            f64::INFINITY
        };
        let qden = if qn > floor {
            orlicz::fast_pow(qn, pair.q() - 1.0)
        } else {
            f64::INFINITY
        };
        let coeffs: Vec<f64> = mags
            .iter()
            .zip(fractions)
            .map(|(&s, &t)| {
                let cp = orlicz::fast_pow(t, pair.p())
                    * orlicz::fast_pow(s, pair.p() - 2.0)
                    / pden;
                let cq = orlicz::fast_pow(1.0 - t, pair.q())
                    * orlicz::fast_pow(s, pair.q() - 2.0)
                    / qden;
                (cp + cq) * wcell
            })
            .collect();
        for c in &mut eta.comps {
            for (val, coeff) in c.iter_mut().zip(&coeffs) {
                *val *= coeff;
            }
        }
        let mut g = self.calc.divergence(&eta);
        g.scale(-1.0 / wcell);
        self.project_scalar(g)
    }

    /// Minimal composite norm power over the unit D-sphere of a span:
    /// `min |u + ∇Φ_γ(u)|^γ` over sampled `u` with unit Dirichlet norm.
    /// One-dimensional spans are evaluated exactly (evenness halves the
    /// sphere to a single direction).
    pub fn subspace_norm_floor(
        &self,
        basis: &[OneForm],
        pair: OrliczPair,
        gamma: f64,
        sphere_samples: usize,
        rng_seed: u64,
    ) -> NormFloor {
        assert!(!basis.is_empty());
        assert!(gamma > 1.0);
        // D-orthonormalize the basis.
        let mut ortho: Vec<OneForm> = Vec::new();
        for b in basis {
            let mut v = b.clone();
            for o in &ortho {
                let coef = self.calc.d_inner(&v, o);
                v.add_scaled(-coef, o);
            }
            let norm = self.calc.d_norm(&v);
            if norm > 1e-12 {
                v.scale(1.0 / norm);
                ortho.push(v);
            }
        }
        assert!(!ortho.is_empty(), "basis spans only the zero form");

        let dim = ortho.len();
        let directions: Vec<Vec<f64>> = if dim == 1 {
            vec![vec![1.0]]
        } else {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
            (0..sphere_samples.max(2))
                .map(|_| {
                    let mut coefs: Vec<f64> = (0..dim)
                        .map(|_| crate::fields::types::standard_normal(&mut rng))
                        .collect();
                    let norm = coefs.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
                    for c in &mut coefs {
                        *c /= norm;
                    }
                    coefs
                })
                .collect()
        };

        let mut best = f64::INFINITY;
        let mut worst_coefs = directions[0].clone();
        for coefs in &directions {
            let mut u = OneForm::zeros(self.calc.grid());
            for (c, b) in coefs.iter().zip(&ortho) {
                u.add_scaled(*c, b);
            }
            let min = self.minimize_potential_norm(&u, pair, None);
            let val = min.norm.powf(gamma);
            if val < best {
                best = val;
                worst_coefs = coefs.clone();
            }
        }
        NormFloor {
            value: best,
            worst_coefficients: worst_coefs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{seed_form, GridSpec, SeedProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Ctx {
        params: NonlinearityParams,
        calc: Calculus,
        sym: Symmetrizer,
    }

    impl Ctx {
        fn new(n: usize, m: usize) -> Self {
            let grid = GridSpec::new(n, m, 1.0).unwrap();
            Self {
                params: if n == 4 {
                    NonlinearityParams::defaults()
                } else {
                    NonlinearityParams::new(n, 3.0, 6.0, 1.0, 3.0, 0.1).unwrap()
                },
                calc: Calculus::new(grid),
                sym: Symmetrizer::new(grid).unwrap(),
            }
        }

        fn solver(&self, cfg: InnerConfig) -> InnerSolver<'_> {
            InnerSolver::new(&self.params, &self.calc, &self.sym, cfg)
        }

        fn grid(&self) -> GridSpec {
            self.calc.grid()
        }
    }

    fn random_div_free(ctx: &Ctx, seed: u64, scale: f64) -> OneForm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = OneForm::random(ctx.grid(), &mut rng);
        let smooth = ctx.calc.smooth_one_form(&raw, 0.02);
        let mut u = ctx.calc.leray_project(&ctx.sym.one_form(&smooth));
        let norm = ctx.calc.d_norm(&u);
        if norm > 0.0 {
            u.scale(scale / norm);
        }
        u
    }

    #[test]
    fn config_validation() {
        assert!(InnerConfig::default().validate().is_ok());
        assert!(InnerConfig {
            grad_tol: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(InnerConfig {
            ls_shrink: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(InnerConfig {
            ls_slope: 0.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn f_total_frozen_single_site() {
        let ctx = Ctx::new(4, 8);
        let solver = ctx.solver(InnerConfig::default());
        let mut a = OneForm::zeros(ctx.grid());
        a.comps[0][5] = 2.0;
        // h^4 * f(4) = 15 h^4 on the defaults.
        let h4 = ctx.grid().cell_volume();
        assert!((solver.f_total(&a) - 15.0 * h4).abs() < 1e-12);
        assert_eq!(solver.f_total(&OneForm::zeros(ctx.grid())), 0.0);
        // Growth envelope brackets the energy with the measured constants.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = OneForm::random(ctx.grid(), &mut rng);
        let (c_lo, c_hi) = ctx.params.measure_growth_envelope(2000);
        let envelope: f64 = b
            .squared_magnitudes()
            .iter()
            .map(|&s| s.powf(1.5).min(s.powf(3.0)))
            .sum::<f64>()
            * h4;
        let f = solver.f_total(&b);
        assert!(f >= c_lo * envelope * (1.0 - 1e-9));
        assert!(f <= c_hi * envelope * (1.0 + 1e-9));
    }

    #[test]
    fn df_field_matches_central_differences() {
        let ctx = Ctx::new(2, 4);
        let solver = ctx.solver(InnerConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = OneForm::random(ctx.grid(), &mut rng);
        let dir = OneForm::random(ctx.grid(), &mut rng);
        let density = solver.df_field(&a);
        let pairing = density.l2_inner(&dir);
        let mut best = f64::INFINITY;
        for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
            let mut ap = a.clone();
            ap.add_scaled(eps, &dir);
            let mut am = a.clone();
            am.add_scaled(-eps, &dir);
            let fd = (solver.f_total(&ap) - solver.f_total(&am)) / (2.0 * eps);
            best = best.min((fd - pairing).abs() / (1.0 + pairing.abs()));
        }
        assert!(best < 1e-6, "relative error {best}");
        assert_eq!(
            solver.df_field(&OneForm::zeros(ctx.grid())).linf_norm(),
            0.0
        );
    }

    #[test]
    fn integrated_gap_ties_energy_to_pointwise_convexity() {
        let ctx = Ctx::new(2, 4);
        let solver = ctx.solver(InnerConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = OneForm::random(ctx.grid(), &mut rng);
        let b = OneForm::random(ctx.grid(), &mut rng);
        let mut diff = a.clone();
        diff.add_scaled(-1.0, &b);
        let lhs = solver.f_total(&a) - solver.f_total(&b) - solver.df_field(&b).l2_inner(&diff);
        // Pointwise gap integral.
        let n = ctx.grid().dim();
        let mut gap_sum = 0.0;
        for s in 0..ctx.grid().site_count() {
            let x: Vec<f64> = (0..n).map(|i| a.comps[i][s]).collect();
            let y: Vec<f64> = (0..n).map(|i| b.comps[i][s]).collect();
            gap_sum += ctx.params.convexity_gap(&x, &y).0;
        }
        gap_sum *= ctx.grid().cell_volume();
        assert!((lhs - gap_sum).abs() < 1e-9 * (1.0 + lhs.abs()));
        assert!(lhs >= 0.0);
    }

    #[test]
    fn reduced_gradient_matches_central_differences() {
        let ctx = Ctx::new(2, 4);
        let solver = ctx.solver(InnerConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_div_free(&ctx, 60, 1.0);
        let w = solver.project_scalar(ScalarField::random(ctx.grid(), &mut rng));
        let dir = solver.project_scalar(ScalarField::random(ctx.grid(), &mut rng));
        let g = solver.reduced_gradient(&u, &w);
        let pairing = g.l2_inner(&dir);
        let f_u = |w: &ScalarField| {
            let mut v = ctx.calc.gradient(w);
            v.add_scaled(1.0, &u);
            solver.f_total(&v)
        };
        let mut best = f64::INFINITY;
        for eps in [1e-3, 1e-4, 1e-5] {
            let mut wp = w.clone();
            wp.add_scaled(eps, &dir);
            let mut wm = w.clone();
            wm.add_scaled(-eps, &dir);
            let fd = (f_u(&wp) - f_u(&wm)) / (2.0 * eps);
            best = best.min((fd - pairing).abs() / (1.0 + pairing.abs()));
        }
        assert!(best < 1e-6, "relative error {best}");
    }

    #[test]
    fn potential_minimization_zero_and_certificates() {
        let ctx = Ctx::new(4, 8);
        let solver = ctx.solver(InnerConfig::default());
        // u = 0 keeps w = 0.
        let zero = solver.minimize_potential(&OneForm::zeros(ctx.grid()), None);
        assert!(zero.converged);
        assert_eq!(zero.w.linf_norm(), 0.0);

        let u = {
            let profile = SeedProfile {
                amplitudes: vec![2.0, 2.0],
                support_radius: 0.8,
            };
            seed_form(ctx.grid(), &profile, &ctx.calc, &ctx.sym).unwrap()
        };
        let min = solver.minimize_potential(&u, None);
        assert!(min.converged, "grad norm {}", min.grad_norm);
        assert!(min.objective <= solver.f_total(&u) + 1e-12);
        // Invariant, zero-mean minimizer.
        assert!(min.w.mean().abs() < 1e-12);
        assert!(ctx.sym.invariance_residual(&min.w) < 1e-12 * (1.0 + min.w.linf_norm()));
        // Gradient at the minimizer meets the tolerance.
        let g = solver.reduced_gradient(&u, &min.w);
        assert!(g.l2_norm() <= solver.cfg.grad_tol * 1.0001);

        // Minimality certificate against random probes.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f_u = |w: &ScalarField| {
            let mut v = ctx.calc.gradient(w);
            v.add_scaled(1.0, &u);
            solver.f_total(&v)
        };
        for k in 0..100 {
            let mut probe = solver.project_scalar(ScalarField::random(ctx.grid(), &mut rng));
            probe.scale(10.0_f64.powi(-(k % 5) as i32));
            let mut w_probe = min.w.clone();
            w_probe.add_scaled(1.0, &probe);
            assert!(f_u(&w_probe) >= min.objective - 1e-10 * (1.0 + min.objective));
        }

        // Stationarity transfers: the density pairs to zero with gradients.
        let mut v = ctx.calc.gradient(&min.w);
        v.add_scaled(1.0, &u);
        let density = solver.df_field(&v);
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let wb = solver.project_scalar(ScalarField::random(ctx.grid(), &mut rng));
            let pairing = density.l2_inner(&ctx.calc.gradient(&wb));
            assert!(
                pairing.abs() <= 20.0 * solver.cfg.grad_tol * (1.0 + wb.l2_norm()),
                "pairing {pairing}"
            );
        }
    }

    #[test]
    fn restarts_agree_and_tightening_is_monotone() {
        let ctx = Ctx::new(2, 6);
        let cfg = InnerConfig {
            grad_tol: 1e-10,
            max_iter: 20_000,
            ..Default::default()
        };
        let solver = ctx.solver(cfg);
        let u = random_div_free(&ctx, 61, 2.0);
        let reference = solver.minimize_potential(&u, None);
        assert!(reference.converged);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let w0 = solver.project_scalar(ScalarField::random(ctx.grid(), &mut rng));
            let run = solver.minimize_potential(&u, Some(&w0));
            assert!(run.converged);
            assert!(
                (run.objective - reference.objective).abs()
                    <= 1e-8 * (1.0 + reference.objective.abs())
            );
            let mut dw = run.w.clone();
            dw.add_scaled(-1.0, &reference.w);
            assert!(dw.l2_norm() < 1e-4, "minimizer spread {}", dw.l2_norm());
        }

        // Tighter tolerance can only lower the objective.
        let loose = ctx
            .solver(InnerConfig {
                grad_tol: 1e-4,
                ..Default::default()
            })
            .minimize_potential(&u, None);
        assert!(reference.objective <= loose.objective + 1e-12);
    }

    #[test]
    fn descent_is_strictly_monotone() {
        let ctx = Ctx::new(2, 6);
        let solver = ctx.solver(InnerConfig::default());
        let u = random_div_free(&ctx, 62, 2.0);
        let min = solver.minimize_potential(&u, None);
        let objs: Vec<f64> = min.trace.rows.iter().map(|r| r.objective).collect();
        for w in objs.windows(2) {
            assert!(w[1] < w[0] + 1e-15, "objective rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn norm_potential_gamma_invariance_and_feasibility() {
        let ctx = Ctx::new(2, 4);
        let cfg = InnerConfig {
            grad_tol: 1e-9,
            max_iter: 8000,
            ..Default::default()
        };
        let solver = ctx.solver(cfg);
        let pair = OrliczPair::new(3.0, 6.0).unwrap();
        let u = random_div_free(&ctx, 63, 1.5);

        let zero_u = solver.minimize_potential_norm(&OneForm::zeros(ctx.grid()), pair, None);
        assert_eq!(zero_u.norm, 0.0);

        let min = solver.minimize_potential_norm(&u, pair, None);
        // Feasibility of w = 0: the minimum cannot exceed the norm of u.
        let u_norm = orlicz::norm_exact(&u.magnitudes(), ctx.grid().cell_volume(), pair, 1e-11);
        assert!(min.norm <= u_norm.value + 1e-9);

        // The argmin does not depend on the monotone power applied on top;
        // rerunning from a perturbed start lands on the same minimizer.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w0 = solver.project_scalar(ScalarField::random(ctx.grid(), &mut rng));
        let again = solver.minimize_potential_norm(&u, pair, Some(&w0));
        assert!(
            (again.norm - min.norm).abs() <= 1e-6 * (1.0 + min.norm),
            "{} vs {}",
            again.norm,
            min.norm
        );
    }

    #[test]
    fn norm_floor_positive_and_homogeneous() {
        let ctx = Ctx::new(2, 4);
        let cfg = InnerConfig {
            grad_tol: 1e-8,
            max_iter: 6000,
            ..Default::default()
        };
        let solver = ctx.solver(cfg);
        let pair = OrliczPair::new(3.0, 6.0).unwrap();
        let seed = seed_form(
            ctx.grid(),
            &SeedProfile {
                amplitudes: vec![1.0],
                support_radius: 0.8,
            },
            &ctx.calc,
            &ctx.sym,
        )
        .unwrap();
        let basis = vec![seed.clone()];
        let gamma = pair.p();
        let floor = solver.subspace_norm_floor(&basis, pair, gamma, 8, 77);
        assert!(floor.value > 0.0, "floor {}", floor.value);

        // Scaling law on random span elements.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let scale: f64 = 0.2 + 3.0 * rng.gen::<f64>();
            let u = seed.scaled(scale / ctx.calc.d_norm(&seed));
            let min = solver.minimize_potential_norm(&u, pair, None);
            let lhs = min.norm.powf(gamma);
            let rhs = floor.value * ctx.calc.d_norm(&u).powf(gamma);
            assert!(lhs >= rhs * (1.0 - 1e-6), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn energy_is_continuous_along_converging_fields() {
        // F(z_k) -> F(z) with the gap controlled by the pointwise convexity
        // estimate on each difference.
        let ctx = Ctx::new(2, 4);
        let solver = ctx.solver(InnerConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let z = OneForm::random(ctx.grid(), &mut rng);
        let dirn = OneForm::random(ctx.grid(), &mut rng);
        let f_z = solver.f_total(&z);
        let df_z = solver.df_field(&z);
        let c1 = 0.05; // conservative floor for the measured constant
        let mut prev_gap = f64::INFINITY;
        for k in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let mut zk = z.clone();
            zk.add_scaled(1.0 / k, &dirn);
            let mut diff = zk.clone();
            diff.add_scaled(-1.0, &z);
            let gap = solver.f_total(&zk) - f_z - df_z.l2_inner(&diff);
            // Lower bound by the split power integrals of the difference.
            let wcell = ctx.grid().cell_volume();
            let lower: f64 = diff
                .magnitudes()
                .iter()
                .map(|&d| if d > 1.0 { d.powi(3) } else { d.powi(6) })
                .sum::<f64>()
                * wcell;
            assert!(gap >= c1 * lower - 1e-12);
            assert!(gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
    }
}
