use smaxwell::fields::{seed_form, Calculus, GridSpec, SeedProfile, Symmetrizer};
use smaxwell::inner_solver::{InnerConfig, InnerSolver};
use smaxwell::NonlinearityParams;

fn main() {
    let t0 = std::time::Instant::now();
    let grid = GridSpec::new(4, 8, 1.0).unwrap();
    let params = NonlinearityParams::defaults();
    let calc = Calculus::new(grid);
    let sym = Symmetrizer::new(grid).unwrap();
    let cfg = InnerConfig { grad_tol: 2e-7, max_iter: 8000, ..Default::default() };
    let solver = InnerSolver::new(&params, &calc, &sym, cfg);
    let u = seed_form(grid, &SeedProfile { amplitudes: vec![2.0, 2.0], support_radius: 0.8 }, &calc, &sym).unwrap();
    let min = solver.minimize_potential(&u, None);
    println!("elapsed={:?}", t0.elapsed());
    println!("converged={} iters={} grad={:e} obj={:.15}", min.converged, min.trace.rows.len(), min.grad_norm, min.objective);
    let rows = &min.trace.rows;
    for r in rows.iter().rev().take(3).collect::<Vec<_>>().iter().rev() {
        println!("it={} obj={:.16} g={:e} step={:e}", r.iter, r.objective, r.grad_norm, r.step);
    }
    // distribution of f' over the grid at the minimizer
    let mut v = calc.gradient(&min.w);
    v.add_scaled(1.0, &u);
    let sq = v.squared_magnitudes();
    let mut fp: Vec<f64> = sq.iter().map(|&s| params.derivative(s)).collect();
    fp.sort_by(f64::total_cmp);
    println!("f' quantiles: min={:e} q25={:e} med={:e} q75={:e} max={:e}",
        fp[0], fp[fp.len()/4], fp[fp.len()/2], fp[3*fp.len()/4], fp[fp.len()-1]);
}

// min-gradient tracking
