//! Viscous Burgers from a point mass, seeded with the exact solution at a
//! small time and compared with it at `t = 1`, for both solvers.
//!
//! `cargo run --release --example burgers_source`

use viscid::analysis::norms::distance;
use viscid::grid::Grid;
use viscid::solver::{oracle, run, Scheme, SolverConfig};
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    let (eps, m, t0) = (0.1, 1.0, 0.05);
    let grid = Grid::new(-6.0, 8.0, 4096)?;
    let flux = FluxSpec::power(2.0)?;
    let u0 = oracle::sample(grid, t0, |x| oracle::burgers_viscous(m, eps, x, t0))?;
    let exact = oracle::sample(grid, 1.0, |x| oracle::burgers_viscous(m, eps, x, 1.0))?;
    let mut finals = Vec::new();
    for scheme in [Scheme::Fv, Scheme::Duhamel] {
        let cfg = SolverConfig::new(eps, grid, 1.0, vec![1.0]).with_scheme(scheme).with_t_start(t0);
        let tr = run(&cfg, &flux, &u0)?;
        let err = distance(tr.last(), &exact, f64::INFINITY)? / exact.max();
        println!("{scheme:?}: relative L∞ error at t = 1: {err:.3e}");
        finals.push(tr.last().clone());
    }
    println!("cross-solver L∞ gap: {:.3e}", distance(&finals[0], &finals[1], f64::INFINITY)?);
    Ok(())
}
