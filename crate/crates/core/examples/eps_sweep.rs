//! Sweep the viscosity for a power-law flux and report the p-condition
//! sup-norm ratio, its trend in log ε and the fitted decay exponents.
//!
//! `cargo run --release --example eps_sweep -- 2 0.1,0.01,0.001`

use viscid::analysis::{eps_sweep, nash_corpus_constant, DecayKind, SweepBase};
use viscid::initial_data::dirac;
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: f64 = args.first().map_or(Ok(2.0), |s| s.parse()).expect("p must be a number");
    let eps: Vec<f64> = args
        .get(1)
        .map_or("0.1,0.03,0.01", String::as_str)
        .split(',')
        .map(|s| s.trim().parse().expect("eps list must be numbers"))
        .collect();
    let base = SweepBase::new(FluxSpec::power(p)?, dirac(1.0, 0.0)?, 1.0, nash_corpus_constant()?);
    let rep = eps_sweep(&base, &eps, DecayKind::PcondLinf)?;
    println!("p = {p}");
    println!("{:>8} {:>7} {:>10} {:>10} {:>10}", "eps", "n", "ratio", "sup_exp", "l2_exp");
    for r in &rep.rows {
        let e = |f: &Option<viscid::analysis::DecayFit>| f.as_ref().map_or(f64::NAN, |f| f.exponent);
        println!(
            "{:>8.1e} {:>7} {:>10.5} {:>10.5} {:>10.5}",
            r.eps,
            r.n,
            r.ratio(DecayKind::PcondLinf).unwrap_or(f64::NAN),
            e(&r.sup_fit),
            e(&r.l2_fit)
        );
    }
    println!("trend slope {:.4}, max ratio {:.4}, pass {}", rep.trend_slope, rep.max_ratio, rep.pass);
    println!("targets: sup {:.4}, l2 {:.4}", -1.0 / p, -0.5 / p);
    Ok(())
}
