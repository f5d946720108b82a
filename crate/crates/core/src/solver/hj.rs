//! Viscous Hamilton–Jacobi solver for `v_t + f(v_x) = ε v_xx`.
//!
//! `v` lives at the right cell edges (the [`Grid::staggered`] grid). The
//! Hamiltonian at node `j` is the finite-volume interface flux evaluated on
//! the one-sided slopes `(D⁻v_j, D⁺v_j)`, so `D⁻v` evolves by exactly the
//! finite-volume update. Ghost nodes hold the initial end values.
//!
//! [`Grid::staggered`]: crate::grid::Grid::staggered

use crate::error::{config, Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Grid, GridFunction};

use super::config::{FvVariant, SolverConfig};
use super::fv::{check_state, max_of, Stencil};
use super::trajectory::{Diagnostics, Provenance, Trajectory};

/// Backward differences `(v_j − v_{j−1})/dx` on the cell grid whose right
/// edges carry `v`; the node left of the first is `left`.
pub fn gradient(v: &GridFunction, left: f64) -> GridFunction {
    let dx = v.dx();
    let values = (0..v.grid.n)
        .map(|j| {
            let prev = if j == 0 { left } else { v.values[j - 1] };
            (v.values[j] - prev) / dx
        })
        .collect();
    let h = 0.5 * dx;
    GridFunction { grid: Grid { x_lo: v.grid.x_lo - h, x_hi: v.grid.x_hi - h, n: v.grid.n }, values, time: v.time }
}

/// Gradient of snapshot `k` (or of the initial data for `None`), using the
/// fixed left ghost value of the run.
pub fn trajectory_gradient(traj: &Trajectory, k: Option<usize>) -> GridFunction {
    let left = traj.initial.values[0];
    match k {
        Some(k) => gradient(&traj.snapshots[k], left),
        None => gradient(&traj.initial, left),
    }
}

/// `cfg.grid` is the cell grid; `phi0` must live on its staggered grid and
/// be nondecreasing.
pub fn run_hj(cfg: &SolverConfig, flux: &FluxSpec, phi0: &GridFunction) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.fv_variant != FvVariant::Blended {
        return Err(Error::Unsupported("the HJ solver uses the blended explicit scheme only".into()));
    }
    let grid = cfg.grid;
    if !phi0.grid.same_as(&grid.staggered()) {
        return Err(config("phi0 must live on the staggered grid of the solver grid"));
    }
    let n = grid.n;
    let dx = grid.dx();
    let (left, right) = (phi0.values[0], phi0.values[n - 1]);
    let mut w = gradient(phi0, left).values;
    if let Some(j) = w.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Precondition(format!("phi0 must be finite and nondecreasing; slope {} at node {j}", w[j])));
    }
    let scale = max_of(&w);
    let mut v = phi0.values.clone();
    let mut stencil = Stencil::new(flux, cfg.eps, dx, n);
    let mut fl = vec![0.0; n + 1];
    let mut diag = Diagnostics::default();
    let mut snaps = Vec::new();
    let mut t = cfg.t_start;
    let mut step = 0;

    for &t_snap in &cfg.snapshot_times {
        while t < t_snap {
            let (theta, a) = stencil.theta(max_of(&w));
            let mut dt = stencil.blended_dt(cfg.cfl, theta, a);
            if let Some(cap) = cfg.dt_max {
                dt = dt.min(cap);
            }
            let remaining = t_snap - t;
            let last = dt >= remaining;
            if last {
                dt = remaining;
            }
            step += 1;
            let right_slope = (right - v[n - 1]) / dx;
            stencil.fluxes(&w, 0.0, right_slope, theta, true, &mut fl);
            for j in 0..n {
                v[j] -= dt * fl[j + 1];
            }
            for j in 0..n {
                let prev = if j == 0 { left } else { v[j - 1] };
                w[j] = (v[j] - prev) / dx;
            }
            let t_new = if last { t_snap } else { t + dt };
            diag.record_dt(dt);
            check_state(&w, scale, step, t_new, &mut diag)?;
            t = t_new;
        }
        snaps.push(GridFunction { grid: phi0.grid, values: v.clone(), time: Some(t_snap) });
        diag.leakage_at_snapshots.push(0.0);
    }

    Ok(Trajectory {
        initial: phi0.clone().at_time(cfg.t_start),
        snapshots: snaps,
        provenance: Provenance {
            solver: "hj".into(),
            config: cfg.clone(),
            flux_id: flux.id(),
            data_id: format!("staggered(n={n}, left={left:.16e}, right={right:.16e})"),
        },
        diagnostics: diag,
    })
}
