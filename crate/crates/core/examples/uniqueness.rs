//! Mollification independence: primitives from shrinking mollifiers of a
//! point mass converge, and swapping the mollifier shape moves little.
//!
//! `cargo run --release --example uniqueness`

use viscid::analysis::uniqueness_probe;
use viscid::grid::Grid;
use viscid::initial_data::dirac;
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    let h = [0.2, 0.1, 0.05, 0.025];
    let eps = 0.01;
    let grid = Grid::with_spacing(-1.5, 3.0, eps / 4.0)?;
    let rep = uniqueness_probe(&dirac(1.0, 0.0)?, &h, &FluxSpec::power(2.0)?, eps, grid, 0.5)?;
    for (i, j, d) in &rep.pairwise {
        println!("h = {:<6} vs {:<6}: ‖U_i − U_j‖∞ = {d:.4e}", h[*i], h[*j]);
    }
    for (h, d) in &rep.shape_swap {
        println!("h = {h:<6}: bump vs raised cosine {d:.4e}");
    }
    println!(
        "order {:.3}, shape pass {}, sup ratio {:.4}, pass {}",
        rep.order, rep.shape_pass, rep.sup_ratio, rep.pass
    );
    Ok(())
}
