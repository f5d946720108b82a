//! Decay estimates and fitted exponents for one power-law run.
//!
//! `cargo run --release --example decay_fit -- 3 0.003`

use viscid::analysis::drivers::sweep_width;
use viscid::analysis::{check_decay_bounds, default_window, fit_decay, nash_corpus_constant, DecayContext, DecayKind};
use viscid::initial_data::{dirac, mollify, Mollifier};
use viscid::solver::{auto_grid, run_fv, sweep_spacing, SolverConfig};
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("numeric arguments")).collect();
    let p = args.first().copied().unwrap_or(2.0);
    let eps = args.get(1).copied().unwrap_or(0.003);
    let (m, t_end) = (1.0, 1.0);
    let flux = FluxSpec::power(p)?;
    let data = dirac(m, 0.0)?;
    let h = sweep_width(eps);
    let grid = auto_grid((-h, h), m, eps, t_end, &flux, sweep_spacing(eps, h))?;
    let window = default_window(h, eps, t_end);
    let cfg = SolverConfig::new(eps, grid, t_end, SolverConfig::log_snapshots(window.0, t_end, 24));
    let tr = run_fv(&cfg, &flux, &mollify(&data, h, &grid, Mollifier::Bump)?)?;
    let ctx = DecayContext::certify(&flux, m, eps, nash_corpus_constant()?)?;
    println!("p = {p}, ε = {eps}, {} cells, certified a = {:?}", grid.n, ctx.a);
    for kind in DecayKind::ALL {
        let c = check_decay_bounds(&tr, kind, &ctx)?;
        println!("{:<12} {:?} max ratio {:.4}", kind.id(), c.verdict, c.lhs_max_ratio);
    }
    let sup = fit_decay(&tr, f64::INFINITY, window)?;
    let l2 = fit_decay(&tr, 2.0, window)?;
    println!("sup exponent {:.4} (theory {:.4})", sup.exponent, -1.0 / p);
    println!("L² exponent  {:.4} (theory {:.4})", l2.exponent, -0.5 / p);
    Ok(())
}
