//! Duhamel fixed-point integrator.
//!
//! On each block `[t_m, t_m + δ]` the iterate
//! `w ← G(δ)⋆u(t_m) − ∫_0^δ ∂_xG(δ − s)⋆f(u(t_m + s)) ds`
//! is evaluated in Fourier space on a zero-padded periodic extension of the
//! grid; the time integral uses the midpoint value `f((u(t_m) + w)/2)` with
//! the kernel integrated exactly. Blocks satisfy
//! `2 C₁ ‖∫_0^δ ∂_xG‖_1 < 1/2`, i.e. `δ < πε/(64 C₁²)` with `C₁ = max|f'|`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flux::FluxSpec;
use crate::grid::GridFunction;
use crate::kernel::SpectralPropagator;

use super::config::SolverConfig;
use super::fv::{check_initial, check_leakage, check_state, grid_data_id, max_of};
use super::trajectory::{Diagnostics, PicardBlock, Provenance, Trajectory};

/// Safety factor applied to the contraction-window bound.
const BLOCK_SAFETY: f64 = 0.9;

/// Longest block for which the Picard map contracts with factor below 1/2.
pub fn contraction_window(eps: f64, c1: f64) -> f64 {
    if c1 > 0.0 {
        PI * eps / (64.0 * c1 * c1)
    } else {
        f64::INFINITY
    }
}

pub fn run_duhamel(cfg: &SolverConfig, flux: &FluxSpec, u0: &GridFunction) -> Result<Trajectory> {
    cfg.validate()?;
    check_initial(cfg, u0)?;
    let grid = cfg.grid;
    let n = grid.n;
    let dx = grid.dx();
    let mut sp = SpectralPropagator::new(cfg.eps, n, dx, 2)?;
    let size = sp.size();

    let mut u = u0.values.clone();
    u.resize(size, 0.0);
    let scale = u0.max().max(0.0);
    let mut diag = Diagnostics::default();
    let mut snaps = Vec::with_capacity(cfg.snapshot_times.len());
    let mut t = cfg.t_start;
    let mut step = 0usize;
    let linear = flux.is_zero();

    for &t_snap in &cfg.snapshot_times {
        while t < t_snap {
            let c1 = flux.max_abs_slope(max_of(&u));
            let mut dt = BLOCK_SAFETY * contraction_window(cfg.eps, c1);
            if let Some(cap) = cfg.dt_max {
                dt = dt.min(cap);
            }
            let remaining = t_snap - t;
            let last = dt >= remaining;
            if last {
                dt = remaining;
            }
            step += 1;
            let t_new = if last { t_snap } else { t + dt };

            let base: Vec<Complex64> = {
                let mut s = sp.forward(&u);
                for (c, e) in s.iter_mut().zip(sp.heat_factors(dt)) {
                    *c *= e;
                }
                s
            };
            let (next, block) = if linear {
                let w = sp.inverse(base);
                (w, PicardBlock { t0: t, t1: t_new, iterations: 1, residual: 0.0 })
            } else {
                picard(cfg, flux, &mut sp, &u, base, dt, t, t_new)?
            };
            u = next;
            diag.picard.push(block);
            diag.record_dt(dt);
            check_state(&u[..n], scale, step, t_new, &mut diag)?;
            t = t_new;
        }
        let leak = dx * u[n..].iter().sum::<f64>();
        snaps.push(GridFunction { grid, values: u[..n].to_vec(), time: Some(t_snap) });
        diag.leakage_at_snapshots.push(leak);
        diag.leakage = leak;
    }
    check_leakage(cfg, diag.leakage, u0.mass())?;

    Ok(Trajectory {
        initial: u0.clone().at_time(cfg.t_start),
        snapshots: snaps,
        provenance: Provenance {
            solver: "duhamel".into(),
            config: cfg.clone(),
            flux_id: flux.id(),
            data_id: grid_data_id(u0),
        },
        diagnostics: diag,
    })
}

#[allow(clippy::too_many_arguments)]
fn picard(
    cfg: &SolverConfig,
    flux: &FluxSpec,
    sp: &mut SpectralPropagator,
    u: &[f64],
    base: Vec<Complex64>,
    dt: f64,
    t0: f64,
    t1: f64,
) -> Result<(Vec<f64>, PicardBlock)> {
    let duh = sp.duhamel_factors(dt);
    let mut w = u.to_vec();
    let mut prev_res = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=cfg.picard_max_iter {
        let f_mid: Vec<f64> = u.iter().zip(&w).map(|(a, b)| flux.value(0.5 * (a + b))).collect();
        let fh = sp.forward(&f_mid);
        let spec: Vec<Complex64> = base.iter().zip(fh.iter().zip(&duh)).map(|(b, (f, d))| b - d * f).collect();
        let next = sp.inverse(spec);
        let res = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        if !res.is_finite() {
            break;
        }
        if res < cfg.picard_tol {
            return Ok((w, PicardBlock { t0, t1, iterations: it, residual: res }));
        }
        if res >= prev_res {
            growth += 1;
            if growth >= 3 {
                return Err(Error::NonContraction { t0, t1, iterations: it, residual: res });
            }
        }
        prev_res = res;
    }
    Err(Error::NonContraction { t0, t1, iterations: cfg.picard_max_iter, residual: prev_res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::kernel::HeatKernel;
    use crate::solver::config::Scheme;
    use crate::solver::{fv, oracle};

    #[test]
    fn linear_run_is_one_iteration_and_equals_heat_convolution() {
        let grid = Grid::new(-15.0, 15.0, 1024).unwrap();
        let g = GridFunction::from_fn(grid, |x| (-(x - 0.5) * (x - 0.5)).exp() * (1.0 + 0.2 * x.cos()));
        let cfg = SolverConfig::new(0.5, grid, 1.0, vec![0.3, 1.0]).with_scheme(Scheme::Duhamel);
        let tr = run_duhamel(&cfg, &FluxSpec::zero(), &g).unwrap();
        assert!(tr.diagnostics.picard.iter().all(|b| b.iterations == 1));
        let conv = HeatKernel::new(0.5).unwrap().convolve(&g, 1.0, 0).unwrap();
        let diff = conv.values.iter().zip(&tr.last().values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10 * g.max(), "{diff}");
    }

    #[test]
    fn burgers_agrees_with_oracle_and_fv() {
        let (eps, t0) = (0.1, 0.1);
        let grid = Grid::new(-5.0, 7.0, 1024).unwrap();
        let u0 = oracle::sample(grid, t0, |x| oracle::burgers_viscous(1.0, eps, x, t0)).unwrap();
        let flux = FluxSpec::power(2.0).unwrap();
        let cfg = SolverConfig::new(eps, grid, 1.0, vec![0.5, 1.0]).with_t_start(t0);
        let du = run_duhamel(&cfg, &flux, &u0).unwrap();
        let fvr = fv::run_fv(&cfg, &flux, &u0).unwrap();
        let exact = oracle::sample(grid, 1.0, |x| oracle::burgers_viscous(1.0, eps, x, 1.0)).unwrap();
        let peak = exact.max();
        let linf = |a: &GridFunction, b: &GridFunction| {
            a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        assert!(linf(du.last(), &exact) / peak < 2e-3, "{}", linf(du.last(), &exact) / peak);
        assert!(linf(du.last(), fvr.last()) < 5e-3);
        let d = &du.diagnostics;
        assert!(d.picard.iter().all(|b| b.residual < cfg.picard_tol && b.iterations <= cfg.picard_max_iter));
        assert!(((du.last().mass() + d.leakage) - u0.mass()).abs() < 1e-11);
    }

    #[test]
    fn oversized_blocks_are_reported() {
        let grid = Grid::new(-5.0, 7.0, 256).unwrap();
        let u0 = oracle::sample(grid, 0.1, |x| oracle::burgers_viscous(20.0, 0.01, x, 0.1)).unwrap();
        let mut cfg = SolverConfig::new(0.01, grid, 0.2, vec![0.2]).with_t_start(0.1);
        cfg.picard_max_iter = 2;
        let r = run_duhamel(&cfg, &FluxSpec::power(2.0).unwrap(), &u0);
        assert!(matches!(r, Err(Error::NonContraction { .. })), "{r:?}");
    }
}
