//! Vanishing viscosity: L¹ distance to the N-wave as ε decreases.
//!
//! `cargo run --release --example inviscid_limit`

use viscid::analysis::{inviscid_limit, nash_corpus_constant};

fn main() -> viscid::Result<()> {
    let eps = [0.1, 0.03, 0.01, 0.003, 0.001];
    let rep = inviscid_limit(1.0, 2.0, &eps, 1.0, nash_corpus_constant()?)?;
    for r in &rep.rows {
        println!("ε = {:<6} cells {:>6}  ‖u − N‖₁ = {:.4e}  sup {:.4}", r.eps, r.n, r.l1_error, r.sup_norm);
    }
    println!(
        "monotone {}, final error {:.4e}, sup ratio {:.4}, pass {}",
        rep.monotone, rep.final_error, rep.sup_ratio, rep.pass
    );
    Ok(())
}
