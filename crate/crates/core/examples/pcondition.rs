//! Certify the p-condition of power-law fluxes and show the negative
//! control `a = p` failing.
//!
//! `cargo run --release --example pcondition`

use viscid::analysis::certify_a;
use viscid::flux::{find_slack, verify_p_condition, PCondParams};
use viscid::FluxSpec;

fn main() -> viscid::Result<()> {
    println!("{:>5} {:>9} {:>12} {:>6} {:>8} {:>14}", "p", "a", "b", "γ", "verdict", "control a = p");
    for p in [1.25, 1.5, 2.0, 3.0, 4.0] {
        let flux = FluxSpec::power(p)?;
        let a = certify_a(&flux, p)?.expect("power laws certify");
        let probe = PCondParams::new(p, a, 0.0, p);
        let slack = find_slack(&flux, p, a, probe.r_range, probe.eta_range, 240, 16)?.expect("slack exists");
        let rep = verify_p_condition(&flux, &PCondParams::new(p, a, slack.b, slack.gamma), 240, 16)?;
        let control = find_slack(&flux, p, p, probe.r_range, probe.eta_range, 240, 16)?
            .map(|s| verify_p_condition(&flux, &PCondParams::new(p, p, s.b, s.gamma), 240, 16))
            .transpose()?
            .is_some_and(|r| r.pass);
        println!(
            "{p:>5} {a:>9.5} {:>12.4e} {:>6} {:>8} {:>14}",
            slack.b,
            slack.gamma,
            if rep.pass { "pass" } else { "FAIL" },
            if control { "passes (!)" } else { "fails" }
        );
    }
    Ok(())
}
