//! Heat equation from a unit point mass, mollified at width 0.03: both
//! solvers against `M G_ε`.
//!
//! `cargo run --release --example heat_oracle`

use viscid::grid::Grid;
use viscid::initial_data::{dirac, mollify, Mollifier};
use viscid::solver::{oracle, run, Scheme, SolverConfig};
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    let (eps, m) = (1.0, 1.0);
    let grid = Grid::new(-20.0, 20.0, 4096)?;
    let times = vec![0.1, 1.0];
    for scheme in [Scheme::Fv, Scheme::Duhamel] {
        let cfg = SolverConfig::new(eps, grid, 1.0, times.clone()).with_scheme(scheme);
        let u0 = mollify(&dirac(m, 0.0)?, 0.03, &grid, Mollifier::Bump)?;
        let start = std::time::Instant::now();
        let tr = run(&cfg, &FluxSpec::zero(), &u0)?;
        for s in &tr.snapshots {
            let t = s.time.expect("snapshots carry times");
            let exact = oracle::sample(grid, t, |x| oracle::heat(m, eps, x, t))?;
            let err = s.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            println!("{scheme:?} t = {t}: relative L∞ error {:.3e}", err / exact.max());
        }
        println!("{scheme:?}: {} steps in {:.2?}", tr.diagnostics.steps, start.elapsed());
    }
    Ok(())
}
