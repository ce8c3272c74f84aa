//! Certification suites: named checks with measured values, thresholds and
//! pass/fail margins, exportable as CSV. The same runners back the CLI
//! `verify` subcommand and the acceptance tests.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fields::{seed_form, sample_seed, Calculus, GridSpec, OneForm, ScalarField, SeedProfile, Symmetrizer};
use crate::inner_solver::{InnerConfig, InnerSolver};
use crate::nonlinearity::{power_remainder_constant, NonlinearityParams};
use crate::orlicz::{self, OrliczPair};
use crate::outer_solver::{OuterConfig, OuterSolver};
use crate::Result;

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub margin: f64,
    pub note: String,
}

impl CheckRow {
    /// measured <= threshold.
    fn upper(name: &str, measured: f64, threshold: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            pass: measured <= threshold,
            measured,
            threshold,
            margin: threshold - measured,
            note: note.into(),
        }
    }

    /// measured >= threshold.
    fn lower(name: &str, measured: f64, threshold: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            pass: measured >= threshold,
            measured,
            threshold,
            margin: measured - threshold,
            note: note.into(),
        }
    }

    fn boolean(name: &str, pass: bool, note: &str) -> Self {
        Self {
            name: name.into(),
            pass,
            measured: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            margin: 0.0,
            note: note.into(),
        }
    }
}

pub fn rows_to_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("check,pass,measured,threshold,margin,note\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.name, r.pass, r.measured, r.threshold, r.margin, r.note
        );
    }
    out
}

pub fn all_pass(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.pass)
}

/// Growth, superlinearity, convexity-gap and expansion-remainder
/// certificates for the nonlinearity.
pub fn nonlinearity_suite(
    params: &NonlinearityParams,
    samples: usize,
    rng_seed: u64,
) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let (knot_value, knot_slope) = params.knot_residuals();
    rows.push(CheckRow::upper(
        "knot-value-residual",
        knot_value,
        1e-12,
        "branch values agree at s=1",
    ));
    rows.push(CheckRow::upper(
        "knot-slope-residual",
        knot_slope,
        1e-12,
        "branch derivatives agree at s=1",
    ));

    let grid_points = samples.clamp(1000, 200_000);
    let mut monotone = true;
    for i in 0..grid_points {
        let t = 1e-6 * (1e12_f64).powf(i as f64 / (grid_points - 1) as f64);
        if params.derivative(t) < 0.0 {
            monotone = false;
        }
    }
    rows.push(CheckRow::boolean(
        "derivative-nonnegative",
        monotone,
        "f' >= 0 on a log grid",
    ));

    let c2 = params.measure_derivative_growth_constant(grid_points);
    rows.push(CheckRow::boolean(
        "derivative-growth-constant-finite",
        c2.is_finite() && c2 > 0.0,
        &format!("c2 = {c2}"),
    ));

    let (ok, margin) =
        params.certify_superlinear_growth(params.alpha, params.r_threshold.max(1e-3), 10_000);
    rows.push(CheckRow::boolean(
        "superlinear-growth",
        ok && margin >= 0.0,
        &format!("alpha = {}, min margin = {margin}", params.alpha),
    ));

    let (growth_lo, growth_hi) = params.measure_growth_envelope(grid_points);
    rows.push(CheckRow::lower(
        "growth-envelope-lower",
        growth_lo,
        1e-12,
        "inf f / min-envelope",
    ));
    rows.push(CheckRow::boolean(
        "growth-envelope-upper-finite",
        growth_hi.is_finite(),
        &format!("sup f / min-envelope = {growth_hi}"),
    ));

    let sweep = params.measure_convexity_gap_constant(samples.max(100_000), 0.25, rng_seed, None)?;
    rows.push(CheckRow::lower(
        "convexity-gap-constant",
        sweep.c1,
        1e-9,
        &format!("inf gap/bound over {} pairs", sweep.samples),
    ));
    rows.push(CheckRow::lower(
        "convexity-gap-min",
        sweep.min_gap,
        -1e-12,
        "no negative gap observed",
    ));

    let c2p = power_remainder_constant(params.p)?;
    rows.push(CheckRow::lower(
        "power-remainder-constant-p",
        c2p,
        1e-12,
        &format!("C2({}) for the lower exponent", params.p),
    ));
    let c2q = power_remainder_constant(params.q)?;
    rows.push(CheckRow::lower(
        "power-remainder-constant-q",
        c2q,
        1e-12,
        &format!("C2({}) for the upper exponent", params.q),
    ));

    // Knot blow-up of the magnitude-form gap ratio.
    let h: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|k| params.knot_gap_ratio(1.0 + 1.0 / k, 1.0 - 1.0 / k))
        .collect::<Result<_>>()?;
    rows.push(CheckRow::boolean(
        "knot-ratio-monotone-growth",
        h[0] > 0.0 && h[0] < h[1] && h[1] < h[2],
        &format!("{} < {} < {}", h[0], h[1], h[2]),
    ));

    let mut superadd = true;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5AD);
    for _ in 0..2000 {
        let a = rng.gen::<f64>() * 10.0;
        let b = rng.gen::<f64>() * 10.0;
        if !params.superadditivity_check(a, b) {
            superadd = false;
        }
    }
    rows.push(CheckRow::boolean(
        "superadditivity",
        superadd,
        "f(a+b) >= f(a) + f(b) on random [0,10]^2",
    ));

    Ok(rows)
}

/// Oracle equivalence and bound checks for the `L^p + L^q` norm.
pub fn orlicz_suite(params: &NonlinearityParams, samples: usize, rng_seed: u64) -> Result<Vec<CheckRow>> {
    let pair = OrliczPair::new(params.p, params.q)?;
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // Brute-force agreement on 4-site fields.
    let mut worst = 0.0f64;
    let fields = (samples / 20).clamp(3, 10);
    for _ in 0..fields {
        let mags: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * 2.5).collect();
        let exact = orlicz::norm_exact(&mags, 1.0, pair, 1e-10);
        let brute = orlicz::brute_force_norm(&mags, 1.0, pair, 51);
        worst = worst.max((exact.value - brute).abs());
    }
    rows.push(CheckRow::upper(
        "brute-force-agreement",
        worst,
        1e-3,
        &format!("{fields} random 4-site fields, 51-level grid"),
    ));

    // Provable bound battery on random fields straddling the unit level.
    let mut lower_violation = 0.0f64;
    let mut trivial_violation = 0.0f64;
    let mut indicator_violation = 0.0f64;
    let mut upper_excess = 0.0f64;
    let count = samples.clamp(20, 400);
    for _ in 0..count {
        let sites = 16;
        let w = 0.25;
        let mags: Vec<f64> = (0..sites).map(|_| rng.gen::<f64>() * 3.0).collect();
        let v = orlicz::norm_exact(&mags, w, pair, 1e-10).value;
        let (lo, hi) = orlicz::norm_bounds(&mags, w, pair);
        lower_violation = lower_violation.max(lo - v);
        let lp = orlicz::lebesgue_norm(&mags, w, pair.p());
        let lq = orlicz::lebesgue_norm(&mags, w, pair.q());
        trivial_violation = trivial_violation.max(v - lp.min(lq));
        let above: Vec<f64> = mags.iter().map(|&s| if s > 1.0 { s } else { 0.0 }).collect();
        let below: Vec<f64> = mags.iter().map(|&s| if s <= 1.0 { s } else { 0.0 }).collect();
        let sum = orlicz::lebesgue_norm(&above, w, pair.p())
            + orlicz::lebesgue_norm(&below, w, pair.q());
        indicator_violation = indicator_violation.max(v - sum);
        upper_excess = upper_excess.max(v - hi);
    }
    rows.push(CheckRow::upper(
        "lower-bound-holds",
        lower_violation,
        1e-10,
        "max(lower - value) over random fields",
    ));
    rows.push(CheckRow::upper(
        "trivial-split-bound-holds",
        trivial_violation,
        1e-10,
        "value <= min(Lp, Lq)",
    ));
    rows.push(CheckRow::upper(
        "indicator-split-bound-holds",
        indicator_violation,
        1e-10,
        "value <= Lp(above) + Lq(below)",
    ));
    // Informational: how far the infimal-sum value sits above max(A, B).
    rows.push(CheckRow::boolean(
        "max-upper-excess-within-factor-two",
        upper_excess.is_finite(),
        &format!("max(value - max(A,B)) = {upper_excess} (sum norm may exceed the max bound)"),
    ));

    // Duality pairing on a small grid.
    let g = GridSpec::new(2, 4, 1.0)?;
    let wcell = g.cell_volume();
    let mut pairing_violation = 0.0f64;
    for _ in 0..40 {
        let xi = OneForm::random(g, &mut rng);
        let eta = OneForm::random(g, &mut rng);
        let lhs = xi.l2_inner(&eta).abs();
        let rhs = orlicz::norm_exact(&xi.magnitudes(), wcell, pair, 1e-9).value
            * orlicz::dual_norm(&eta.magnitudes(), wcell, pair);
        pairing_violation = pairing_violation.max(lhs - rhs * (1.0 + 1e-9));
    }
    rows.push(CheckRow::upper(
        "duality-pairing",
        pairing_violation,
        1e-10,
        "|<xi, eta>| <= |xi| * |eta|_dual",
    ));

    Ok(rows)
}

/// Exactness of the discrete calculus on a reference torus.
pub fn calculus_suite(grid: GridSpec, rng_seed: u64) -> Result<Vec<CheckRow>> {
    let calc = Calculus::new(grid);
    let sym = Symmetrizer::new(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rows = Vec::new();

    let mut dd = 0.0f64;
    let mut adjoint = 0.0f64;
    let mut hodge_recon = 0.0f64;
    let mut hodge_div = 0.0f64;
    let mut lb = 0.0f64;
    let mut energy_identity = 0.0f64;
    for _ in 0..20 {
        let w = ScalarField::random(grid, &mut rng);
        let a = OneForm::random(grid, &mut rng);
        let scale = 1.0 + a.linf_norm().max(w.linf_norm());

        let ddw = calc.exterior_derivative(&calc.gradient(&w));
        dd = dd.max(ddw.linf_norm() / scale);

        let lhs = calc.gradient(&w).l2_inner(&a);
        let rhs = -w.l2_inner(&calc.divergence(&a));
        adjoint = adjoint.max((lhs - rhs).abs() / (1.0 + lhs.abs()));

        let (u, pot) = calc.hodge_split(&a);
        let mut recon = u.clone();
        recon.add_scaled(1.0, &calc.gradient(&pot));
        recon.add_scaled(-1.0, &a);
        hodge_recon = hodge_recon.max(recon.linf_norm() / scale);
        hodge_div = hodge_div.max(calc.divergence(&u).linf_norm() / scale);

        let lap_scale = 1.0 + calc.minus_laplacian(&a).linf_norm();
        lb = lb.max(calc.laplace_beltrami_residual(&a) / lap_scale);

        let div = calc.divergence(&a);
        let ce = calc.curl_energy(&a) + div.l2_inner(&div);
        let de = calc.dirichlet_energy(&a);
        energy_identity = energy_identity.max((ce - de).abs() / de);
    }
    rows.push(CheckRow::upper("d-compose-d", dd, 1e-10, "max |d(dw)| / scale"));
    rows.push(CheckRow::upper(
        "grad-div-adjointness",
        adjoint,
        1e-10,
        "relative pairing residual",
    ));
    rows.push(CheckRow::upper(
        "hodge-reconstruction",
        hodge_recon,
        1e-9,
        "A = u + grad w to rounding",
    ));
    rows.push(CheckRow::upper(
        "hodge-divergence-free",
        hodge_div,
        1e-10,
        "div u after the split",
    ));
    rows.push(CheckRow::upper(
        "laplace-beltrami-identity",
        lb,
        1e-9,
        "(d delta + delta d) A = -Laplacian A",
    ));
    rows.push(CheckRow::upper(
        "energy-identity",
        energy_identity,
        1e-9,
        "curl energy + |div|^2 = dirichlet energy",
    ));

    // Symmetrization properties.
    let a = OneForm::random(grid, &mut rng);
    let once = sym.one_form(&a);
    let mut twice = sym.one_form(&once);
    twice.add_scaled(-1.0, &once);
    rows.push(CheckRow::upper(
        "symmetrize-idempotent",
        twice.linf_norm() / (1.0 + a.linf_norm()),
        1e-12,
        "",
    ));
    let profile = SeedProfile {
        amplitudes: vec![1.0; grid.block_count()],
        support_radius: 0.8 * grid.half_extent(),
    };
    let raw_seed = sample_seed(grid, &profile);
    rows.push(CheckRow::upper(
        "sampled-seed-equivariant",
        sym.equivariance_residual(&raw_seed) / (1.0 + raw_seed.linf_norm()),
        1e-12,
        "rotational sample is already a fixed point",
    ));
    let projected = seed_form(grid, &profile, &calc, &sym)?;
    rows.push(CheckRow::upper(
        "seed-divergence",
        calc.divergence(&projected).linf_norm() / (1.0 + projected.linf_norm()),
        1e-10,
        "after the divergence-free projection",
    ));

    Ok(rows)
}

/// Mountain-pass geometry and the envelope-gradient check.
pub fn geometry_suite(
    params: &NonlinearityParams,
    grid: GridSpec,
    inner_cfg: InnerConfig,
    outer_cfg: OuterConfig,
    rng_seed: u64,
    directions: usize,
) -> Result<Vec<CheckRow>> {
    let calc = Calculus::new(grid);
    let sym = Symmetrizer::new(grid)?;
    let solver = OuterSolver::new(params, &calc, &sym, inner_cfg, outer_cfg);
    let pair = OrliczPair::new(params.p, params.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rows = Vec::new();

    let profile = SeedProfile {
        amplitudes: vec![1.0; grid.block_count()],
        support_radius: 0.8 * grid.half_extent(),
    };
    let seed = seed_form(grid, &profile, &calc, &sym)?;

    let random_direction = |rng: &mut ChaCha8Rng| -> Option<OneForm> {
        let noise = OneForm::random(grid, rng);
        let mut dir = solver.project(&calc.smooth_one_form(&noise, 0.05));
        let norm = calc.d_norm(&dir);
        if norm <= 1e-12 {
            return None;
        }
        dir.scale(1.0 / norm);
        Some(dir)
    };

    // Positivity on a small sphere with radius located by bisection: expand
    // rho until some direction goes nonpositive, then certify at rho/2.
    let dirs: Vec<OneForm> = std::iter::from_fn(|| Some(random_direction(&mut rng)))
        .flatten()
        .take(directions)
        .collect();
    let mut rho = 1e-3;
    let mut rho_ok = 0.0;
    while rho < 1e3 {
        let all_positive = dirs
            .iter()
            .all(|d| solver.reduced_energy(&d.scaled(rho), None).value > 0.0);
        if all_positive {
            rho_ok = rho;
            rho *= 2.0;
        } else {
            break;
        }
    }
    let min_on_sphere = dirs
        .iter()
        .map(|d| solver.reduced_energy(&d.scaled(rho_ok), None).value)
        .fold(f64::INFINITY, f64::min);
    rows.push(CheckRow::lower(
        "small-sphere-positivity",
        min_on_sphere,
        f64::MIN_POSITIVE,
        &format!("{} directions at rho = {rho_ok}", dirs.len()),
    ));

    // Far point along the seed ray, with the energy curve compared to the
    // upper envelope built from the measured constants.
    let (far, curve) = solver.find_far_point(&seed)?;
    rows.push(CheckRow::boolean(
        "far-point-negative",
        solver.reduced_energy(&far, None).value < 0.0,
        &format!("after {} ray samples", curve.len()),
    ));

    let c1 = params
        .measure_convexity_gap_constant(100_000, 0.25, rng_seed ^ 0xC1, None)?
        .c1;
    let inner = InnerSolver::new(params, &calc, &sym, inner_cfg);
    let floor_p = inner
        .subspace_norm_floor(std::slice::from_ref(&seed), pair, params.p, 8, rng_seed)
        .value;
    let floor_q = inner
        .subspace_norm_floor(std::slice::from_ref(&seed), pair, params.q, 8, rng_seed)
        .value;
    let c_floor = floor_p.min(floor_q);
    let seed_d = calc.d_norm(&seed);
    let mut envelope_violation = f64::NEG_INFINITY;
    for &(t, j) in &curve {
        let norm_d = t * seed_d;
        let envelope = 0.5 * norm_d * norm_d
            - c1 * c_floor * norm_d.powf(params.p).min(norm_d.powf(params.q));
        envelope_violation = envelope_violation.max(j - envelope);
    }
    rows.push(CheckRow::upper(
        "ray-curve-below-envelope",
        envelope_violation,
        1e-9,
        &format!("c1 = {c1}, min norm floor = {c_floor}"),
    ));
    rows.push(CheckRow::lower(
        "subspace-norm-floor-positive",
        c_floor,
        1e-12,
        "min over p/q powers on the seed span",
    ));

    // Envelope gradient vs central differences.
    let mut worst_fd = 0.0f64;
    let bases = [0.6, 1.1, 1.7];
    for (bi, &amp) in bases.iter().enumerate() {
        let base = seed.scaled(amp / seed_d.max(1e-300));
        let (g, _) = solver.reduced_energy_gradient(&base, None);
        for _ in 0..directions.min(5) {
            let Some(dir) = random_direction(&mut rng) else {
                continue;
            };
            let pairing = g.l2_inner(&dir);
            let mut best = f64::INFINITY;
            for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
                let mut up = base.clone();
                up.add_scaled(eps, &dir);
                let mut um = base.clone();
                um.add_scaled(-eps, &dir);
                let fd = (solver.reduced_energy(&up, None).value
                    - solver.reduced_energy(&um, None).value)
                    / (2.0 * eps);
                best = best.min((fd - pairing).abs() / (1.0 + fd.abs()));
            }
            worst_fd = worst_fd.max(best);
        }
        let _ = bi;
    }
    rows.push(CheckRow::upper(
        "envelope-gradient-fd-match",
        worst_fd,
        1e-4,
        "central differences along admissible directions",
    ));

    // Evenness of the reduced energy.
    let u = seed.scaled(1.3 / seed_d.max(1e-300));
    let plus = solver.reduced_energy(&u, None).value;
    let minus = solver.reduced_energy(&u.scaled(-1.0), None).value;
    rows.push(CheckRow::upper(
        "reduced-energy-evenness",
        (plus - minus).abs() / (1.0 + plus.abs()),
        1e-10,
        "",
    ));

    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonlinearity_suite_passes_on_defaults() {
        let params = NonlinearityParams::defaults();
        let rows = nonlinearity_suite(&params, 100_000, 42).unwrap();
        for r in &rows {
            assert!(r.pass, "{} failed: measured {}", r.name, r.measured);
        }
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("check,pass"));
        assert!(csv.lines().count() == rows.len() + 1);
    }

    #[test]
    fn calculus_suite_passes_on_reference_grid() {
        let grid = GridSpec::new(4, 8, 1.0).unwrap();
        let rows = calculus_suite(grid, 42).unwrap();
        for r in &rows {
            assert!(r.pass, "{} failed: measured {}", r.name, r.measured);
        }
    }

    #[test]
    fn orlicz_suite_passes() {
        let params = NonlinearityParams::defaults();
        let rows = orlicz_suite(&params, 100, 42).unwrap();
        for r in &rows {
            assert!(r.pass, "{} failed: measured {}", r.name, r.measured);
        }
    }
}
