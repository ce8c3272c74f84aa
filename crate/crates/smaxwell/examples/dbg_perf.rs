use smaxwell::fields::{Calculus, GridSpec, OneForm, ScalarField};
use std::time::Instant;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let grid = GridSpec::new(4, 8, 1.0).unwrap();
    let calc = Calculus::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = ScalarField::random(grid, &mut rng);
    let a = OneForm::random(grid, &mut rng);

    let t = Instant::now();
    let n = 2000;
    for _ in 0..n { std::hint::black_box(calc.spectral().forward(&w.values)); }
    println!("forward (4 axis passes): {:?}/call", t.elapsed() / n);

    let t = Instant::now();
    for _ in 0..n { std::hint::black_box(calc.gradient(&w)); }
    println!("gradient: {:?}/call", t.elapsed() / n);

    let t = Instant::now();
    for _ in 0..n { std::hint::black_box(calc.divergence(&a)); }
    println!("divergence: {:?}/call", t.elapsed() / n);

    let t = Instant::now();
    for _ in 0..n { std::hint::black_box(calc.poisson_zero_mean(&w)); }
    println!("poisson: {:?}/call", t.elapsed() / n);
}
