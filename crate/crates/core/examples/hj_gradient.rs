//! Hamilton–Jacobi form: solve for the primitive, differentiate and compare
//! with the conservation-law solution and the gradient bound.
//!
//! `cargo run --release --example hj_gradient`

use viscid::analysis::{certify_a, primitive};
use viscid::grid::Grid;
use viscid::initial_data::{dirac, mollify, Mollifier};
use viscid::solver::hj::trajectory_gradient;
use viscid::solver::{run_fv, run_hj, SolverConfig};
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    let (p, eps, m) = (2.0, 0.02, 1.0);
    let flux = FluxSpec::power(p)?;
    let grid = Grid::new(-2.0, 4.0, 2400)?;
    let u0 = mollify(&dirac(m, 0.0)?, 0.05, &grid, Mollifier::Bump)?;
    let cfg = SolverConfig::new(eps, grid, 1.0, SolverConfig::log_snapshots(0.05, 1.0, 8));
    let hj = run_hj(&cfg, &flux, &primitive(&u0))?;
    let fv = run_fv(&cfg, &flux, &u0)?;
    let a = certify_a(&flux, p)?.expect("power law certifies");
    for (k, u) in fv.snapshots.iter().enumerate() {
        let g = trajectory_gradient(&hj, Some(k));
        let t = u.time.expect("timed");
        let gap = g.values.iter().zip(&u.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let ratio = g.max() * (a * t).powf(1.0 / p) / m.powf(1.0 / p);
        println!("t = {t:.4}: max v_x (at)^(1/p) / M^(1/p) = {ratio:.4}, |v_x − u|∞ = {gap:.2e}");
    }
    Ok(())
}
