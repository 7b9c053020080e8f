// Map the knuckle stress landscape: how much improvement is available?
use rand_chacha::rand_core::SeedableRng;
use surfopt::geometry::LatentVector;
use surfopt::optimizer::{latin_hypercube, Simulate};
use surfopt::tasks::knuckle2d_task;

fn main() {
    let task = knuckle2d_task::<f64>().unwrap();
    let bounds = task.bounds.clone();
    let d = bounds.len();
    let hi = bounds[0].1;

    // Uniform all-control sweeps.
    for t in [-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0] {
        let z = LatentVector::new(vec![t * hi; d], bounds.clone()).unwrap();
        match task.simulate(&z) {
            Ok(s) => println!("uniform {t:+.2}: max vm {:.4e}", s.performance),
            Err(e) => println!("uniform {t:+.2}: FAILED {e}"),
        }
    }
    // Per-control single activations at +hi.
    for c in 0..d {
        let mut v = vec![0.0; d];
        v[c] = hi;
        let z = LatentVector::new(v, bounds.clone()).unwrap();
        match task.simulate(&z) {
            Ok(s) => println!("control {c} +hi: {:.4e}", s.performance),
            Err(e) => println!("control {c} +hi: FAILED {e}"),
        }
    }
    // Initial-design statistics (as BO would see them).
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let design = latin_hypercube(&bounds, 200, &mut rng);
    let mut vals: Vec<f64> = design.iter().filter_map(|z| task.simulate(z).ok()).map(|s| s.performance).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "LHS 200: min {:.4e} p10 {:.4e} median {:.4e} max {:.4e} (ok {})",
        vals[0],
        vals[vals.len() / 10],
        vals[vals.len() / 2],
        vals[vals.len() - 1],
        vals.len()
    );
    // Random search over 2000 points for a cheap global floor estimate.
    let design2 = latin_hypercube(&bounds, 2000, &mut rng);
    let best2000 = design2
        .iter()
        .filter_map(|z| task.simulate(z).ok())
        .map(|s| s.performance)
        .fold(f64::INFINITY, f64::min);
    println!("best of 2000 random: {best2000:.4e}");
    println!("needed for criterion: initial best * 0.95 = {:.4e}", vals[0] * 0.95);
}
