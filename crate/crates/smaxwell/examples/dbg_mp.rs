use smaxwell::fields::{seed_form, Calculus, GridSpec, SeedProfile, Symmetrizer};
use smaxwell::inner_solver::InnerConfig;
use smaxwell::outer_solver::{OuterConfig, OuterSolver};
use smaxwell::NonlinearityParams;

fn main() {
    let grid = GridSpec::new(2, 4, 1.0).unwrap();
    let params = NonlinearityParams::new(2, 3.0, 6.0, 1.0, 3.0, 0.1).unwrap();
    let calc = Calculus::new(grid);
    let sym = Symmetrizer::new(grid).unwrap();
    let inner = InnerConfig { grad_tol: 1e-9, max_iter: 8000, ..Default::default() };
    let outer_cfg = OuterConfig { path_points: 8, deform_steps: 3, mp_tol_rel: 1e-3, max_sweeps: 400, ..Default::default() };
    let solver = OuterSolver::new(&params, &calc, &sym, inner, outer_cfg);
    let seed = seed_form(grid, &SeedProfile { amplitudes: vec![1.0], support_radius: 0.8 }, &calc, &sym).unwrap();
    println!("seed d-norm {}", calc.d_norm(&seed));
    let (far, curve) = solver.find_far_point(&seed).unwrap();
    println!("far point: t-curve {:?}", curve);
    println!("far d-norm {}", calc.d_norm(&far));
    let outcome = solver.mountain_pass(&seed, 99).unwrap();
    for r in outcome.trace.rows.iter().rev().take(25).collect::<Vec<_>>().iter().rev().cloned() {
        println!("sweep {} max_j {:.6e} grad {:.3e} u_d {:.4e} idx {}", r.sweep, r.path_max, r.grad_norm, r.u_d_norm, r.maximizer_index);
    }
    println!("report: {:?}", outcome.report);
}
