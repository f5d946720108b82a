//! Time integrators: finite volume, Duhamel fixed point and viscous
//! Hamilton–Jacobi, plus closed-form oracles and domain sizing.

pub mod config;
pub mod duhamel;
pub mod fv;
pub mod hj;
pub mod oracle;
pub mod trajectory;

pub use config::{FvVariant, Scheme, SolverConfig};
pub use duhamel::run_duhamel;
pub use fv::{run_fv, run_fv_lockstep};
pub use hj::run_hj;
pub use trajectory::{Diagnostics, PicardBlock, Provenance, Trajectory};

use crate::error::Result;
use crate::flux::FluxSpec;
use crate::grid::{Grid, GridFunction};

/// Dispatch on `cfg.scheme`.
pub fn run(cfg: &SolverConfig, flux: &FluxSpec, u0: &GridFunction) -> Result<Trajectory> {
    match cfg.scheme {
        Scheme::Fv => run_fv(cfg, flux, u0),
        Scheme::Duhamel => run_duhamel(cfg, flux, u0),
    }
}

/// Diffusive tail width, in units of `√(ε t)`, added on both sides.
pub const TAIL_WIDTHS: f64 = 12.0;

/// Interval that keeps a solution with data supported in `support` and
/// mass `mass` negligible at the boundary up to `t_end`: the support plus
/// the inviscid front travel plus diffusive tails.
pub fn auto_domain(support: (f64, f64), mass: f64, eps: f64, t_end: f64, flux: &FluxSpec) -> (f64, f64) {
    let tail = TAIL_WIDTHS * (eps * t_end).sqrt();
    let front = match flux.natural_exponent() {
        Some(p) if !flux.is_zero() && mass > 0.0 => oracle::power_front(mass, p, t_end),
        _ => 0.0,
    };
    (support.0 - tail, support.1 + front + tail)
}

/// Grid spacing used by sweeps: `min(ε/4, h/8)`.
pub fn sweep_spacing(eps: f64, h: f64) -> f64 {
    (0.25 * eps).min(h / 8.0)
}

/// [`auto_domain`] gridded at `dx`.
pub fn auto_grid(support: (f64, f64), mass: f64, eps: f64, t_end: f64, flux: &FluxSpec, dx: f64) -> Result<Grid> {
    let (lo, hi) = auto_domain(support, mass, eps, t_end, flux);
    Grid::with_spacing(lo, hi, dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_domain_contains_front_and_tails() {
        let f = FluxSpec::power(2.0).unwrap();
        let (lo, hi) = auto_domain((-0.1, 0.1), 1.0, 0.01, 1.0, &f);
        assert!((lo - (-0.1 - 1.2)).abs() < 1e-12);
        assert!((hi - (0.1 + 2.0 + 1.2)).abs() < 1e-12);
        let (lo0, hi0) = auto_domain((-0.1, 0.1), 1.0, 0.01, 1.0, &FluxSpec::zero());
        assert!((hi0 + lo0).abs() < 1e-12);
        assert_eq!(sweep_spacing(1e-3, 0.005), 2.5e-4);
    }
}
