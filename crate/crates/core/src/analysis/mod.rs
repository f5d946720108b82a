//! Norms, the primitive transform, decay fitting and estimate checks.

pub mod checks;
pub mod drivers;
pub mod fit;
pub mod norms;

pub use checks::{
    certify_a, check_decay_bounds, check_nash, check_spacetime, check_structural, nash_corpus_constant, CheckRow,
    DecayContext, DecayKind, EstimateCheck, Verdict, ESTIMATE_TOL, STRUCTURAL_TOL,
};
pub use drivers::{eps_sweep, inviscid_limit, uniqueness_probe, SweepBase};
pub use fit::{default_window, fit_decay, DecayFit};
pub use norms::{hj_residual, norm, primitive};
