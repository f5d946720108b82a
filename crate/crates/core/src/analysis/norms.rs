use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Grid, GridFunction};
use crate::solver::Trajectory;

/// `(dx Σ|g|^p)^{1/p}`, or `max|g|` for `p = ∞`.
pub fn norm(g: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(domain(format!("norm exponent must be at least 1, got {p}")));
    }
    Ok(lp(&g.values, g.dx(), p))
}

pub(crate) fn lp(values: &[f64], dx: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        dx * values.iter().map(|v| v.abs()).sum::<f64>()
    } else if p == 2.0 {
        (dx * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    } else {
        (dx * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// `‖a − b‖_p` for functions on the same grid.
pub fn distance(a: &GridFunction, b: &GridFunction, p: f64) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::Precondition("distance needs a common grid".into()));
    }
    let d: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
    if !(p >= 1.0) {
        return Err(domain(format!("norm exponent must be at least 1, got {p}")));
    }
    Ok(lp(&d, a.dx(), p))
}

/// Piecewise-linear interpolation of cell values; zero outside the grid.
pub fn interpolate(g: &GridFunction, x: f64) -> f64 {
    let dx = g.dx();
    let s = (x - g.grid.x_lo) / dx - 0.5;
    let n = g.grid.n;
    if s < -0.5 || s > n as f64 - 0.5 {
        return 0.0;
    }
    let s = s.clamp(0.0, (n - 1) as f64);
    let j = (s.floor() as usize).min(n - 2);
    let w = s - j as f64;
    (1.0 - w) * g.values[j] + w * g.values[j + 1]
}

/// `‖a − b‖_1` for functions on possibly different grids, by linear
/// interpolation of both onto a grid twice as fine as the finer one.
pub fn l1_distance_resampled(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let lo = a.grid.x_lo.min(b.grid.x_lo);
    let hi = a.grid.x_hi.max(b.grid.x_hi);
    let dx = 0.5 * a.dx().min(b.dx());
    let common = Grid::with_spacing(lo, hi, dx)?;
    let d: f64 = common.centers().iter().map(|x| (interpolate(a, *x) - interpolate(b, *x)).abs()).sum();
    Ok(d * common.dx())
}

/// `U_j = dx Σ_{i≤j} g_i`, the primitive at the right edge of cell `j`, on
/// the staggered grid. Nondecreasing for `g ≥ 0`; the last value is
/// `mass(g)` exactly.
pub fn primitive(g: &GridFunction) -> GridFunction {
    let dx = g.dx();
    let mut acc = 0.0;
    let values = g
        .values
        .iter()
        .map(|v| {
            acc += v;
            dx * acc
        })
        .collect();
    GridFunction { grid: g.grid.staggered(), values, time: g.time }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HjResidual {
    /// `max |U_t + f(U_x) − εU_xx|` over interior nodes and snapshots.
    pub max_residual: f64,
    /// Expected size of the same quantity from time and space truncation.
    pub truncation_scale: f64,
    /// Residual per interior snapshot.
    pub per_snapshot: Vec<(f64, f64)>,
    /// Residual above the truncation scale.
    pub flagged: bool,
}

/// Residual of the Hamilton–Jacobi equation on the primitives of the
/// snapshots, by centred differences in `x` and three-point differences in `t`.
pub fn hj_residual(traj: &Trajectory, flux: &FluxSpec, eps: f64) -> Result<HjResidual> {
    let snaps = &traj.snapshots;
    if snaps.len() < 3 {
        return Err(Error::Precondition(format!("the residual needs at least 3 snapshots, got {}", snaps.len())));
    }
    let prims: Vec<GridFunction> = snaps.iter().map(primitive).collect();
    let ts = traj.times();
    let dx = snaps[0].dx();
    let n = snaps[0].grid.n;
    let mut max_residual = 0.0f64;
    let mut scale = 0.0f64;
    let mut per_snapshot = Vec::new();
    for k in 1..snaps.len() - 1 {
        let (h1, h2) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
        let (c0, c1, c2) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        let (ua, ub, uc) = (&prims[k - 1].values, &prims[k].values, &prims[k + 1].values);
        let mut worst = 0.0f64;
        let mut ut_max = 0.0f64;
        for j in 1..n - 1 {
            let ut = c0 * ua[j] + c1 * ub[j] + c2 * uc[j];
            let ux = (ub[j + 1] - ub[j - 1]) / (2.0 * dx);
            let uxx = (ub[j + 1] - 2.0 * ub[j] + ub[j - 1]) / (dx * dx);
            worst = worst.max((ut + flux.value(ux) - eps * uxx).abs());
            ut_max = ut_max.max(ut.abs());
        }
        // derivative sizes from a 4-cell stencil, insensitive to single-cell defects
        let u = &snaps[k].values;
        let w = 4usize;
        let hw = w as f64 * dx;
        let (mut d2, mut d3) = (0.0f64, 0.0f64);
        for j in 2 * w..n.saturating_sub(2 * w) {
            d2 = d2.max((u[j + w] - 2.0 * u[j] + u[j - w]).abs() / (hw * hw));
            d3 = d3.max((u[j + 2 * w] - 2.0 * u[j + w] + 2.0 * u[j - w] - u[j - 2 * w]).abs() / (2.0 * hw.powi(3)));
        }
        let a = flux.max_abs_slope(snaps[k].max());
        let s = h1 * h2 / (ts[k] * ts[k]) * ut_max + dx * dx * (a * d2 / 6.0 + eps * d3 / 12.0);
        scale = scale.max(10.0 * s);
        max_residual = max_residual.max(worst);
        per_snapshot.push((ts[k], worst));
    }
    Ok(HjResidual { max_residual, truncation_scale: scale, per_snapshot, flagged: max_residual > scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{dirac, mollify, Mollifier};
    use crate::solver::{oracle, run_fv, SolverConfig};
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        let g = GridFunction::from_fn(Grid::new(0.0, 1.0, 64).unwrap(), |_| 1.0);
        assert!((norm(&g, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(norm(&g, f64::INFINITY).unwrap(), 1.0);
        assert!((norm(&g, 3.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(norm(&g, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous_and_interpolates(
            vals in prop::collection::vec(0.0f64..10.0, 8..64),
            c in 0.0f64..5.0,
            p in 2.5f64..6.0,
        ) {
            let grid = Grid::new(0.0, 1.0, vals.len()).unwrap();
            let g = GridFunction::new(grid, vals).unwrap();
            for q in [1.0, 2.0, p, f64::INFINITY] {
                let a = norm(&g.scaled(c), q).unwrap();
                let b = c * norm(&g, q).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
            }
            let lhs = norm(&g, p / 2.0).unwrap_or(0.0);
            if p / 2.0 >= 1.0 {
                let rhs = norm(&g, p).unwrap().powf((p - 2.0) / (p - 1.0))
                    * norm(&g, 1.0).unwrap().powf(1.0 / (p - 1.0));
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
            }
        }
    }

    #[test]
    fn primitive_examples() {
        let grid = Grid::new(-2.0, 2.0, 400).unwrap();
        let z = primitive(&GridFunction::zeros(grid));
        assert!(z.values.iter().all(|v| *v == 0.0));
        let g = mollify(&dirac(2.5, 0.0).unwrap(), 0.3, &grid, Mollifier::Bump).unwrap();
        let u = primitive(&g);
        assert_eq!(*u.values.last().unwrap(), g.mass());
        assert!(u.values.windows(2).all(|w| w[1] >= w[0]));
        assert!(u.values[100] == 0.0 && (u.values[300] - 2.5).abs() < 1e-12);
        let slope = u.values.windows(2).map(|w| (w[1] - w[0]) / g.dx()).fold(0.0, f64::max);
        assert!((slope - g.max()).abs() < 1e-9 * g.max());
    }

    #[test]
    fn primitive_then_difference_is_identity() {
        let grid = Grid::new(-3.0, 3.0, 300).unwrap();
        let g = GridFunction::from_fn(grid, |x| (-x * x).exp());
        let u = primitive(&g);
        let back = crate::solver::hj::gradient(&u, 0.0);
        let err = back.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    fn heat_run() -> Trajectory {
        let grid = Grid::new(-10.0, 10.0, 800).unwrap();
        let t0 = 0.1;
        let u0 = oracle::sample(grid, t0, |x| oracle::heat(1.0, 1.0, x, t0)).unwrap();
        let ts = SolverConfig::log_snapshots(0.2, 1.0, 30);
        let cfg = SolverConfig::new(1.0, grid, 1.0, ts).with_t_start(t0);
        run_fv(&cfg, &FluxSpec::zero(), &u0).unwrap()
    }

    #[test]
    fn residual_is_small_for_clean_runs_and_flags_corruption() {
        let tr = heat_run();
        let r = hj_residual(&tr, &FluxSpec::zero(), 1.0).unwrap();
        assert!(!r.flagged, "{} vs {}", r.max_residual, r.truncation_scale);
        let mut bad = tr.clone();
        let k = 12;
        let j = bad.snapshots[k].values.len() / 2 + 7;
        bad.snapshots[k].values[j] *= 1.1;
        let rb = hj_residual(&bad, &FluxSpec::zero(), 1.0).unwrap();
        assert!(rb.flagged, "{} vs {}", rb.max_residual, rb.truncation_scale);
        let short = Trajectory { snapshots: tr.snapshots[..2].to_vec(), ..tr };
        assert!(hj_residual(&short, &FluxSpec::zero(), 1.0).is_err());
    }

    #[test]
    fn residual_is_small_for_burgers_runs() {
        let (eps, t0) = (0.1, 0.1);
        let grid = Grid::new(-5.0, 7.0, 1200).unwrap();
        let u0 = oracle::sample(grid, t0, |x| oracle::burgers_viscous(1.0, eps, x, t0)).unwrap();
        let ts = SolverConfig::log_snapshots(0.2, 1.0, 30);
        let cfg = SolverConfig::new(eps, grid, 1.0, ts).with_t_start(t0);
        let f = FluxSpec::power(2.0).unwrap();
        let tr = run_fv(&cfg, &f, &u0).unwrap();
        let r = hj_residual(&tr, &f, eps).unwrap();
        assert!(!r.flagged, "{} vs {}", r.max_residual, r.truncation_scale);
    }

    #[test]
    fn resampled_distance_matches_same_grid_distance() {
        let g1 = Grid::new(-3.0, 3.0, 600).unwrap();
        let a = GridFunction::from_fn(g1, |x| (-x * x).exp());
        let b = GridFunction::from_fn(g1, |x| (-(x - 0.1) * (x - 0.1)).exp());
        let d = distance(&a, &b, 1.0).unwrap();
        let r = l1_distance_resampled(&a, &b).unwrap();
        assert!((d - r).abs() < 1e-3 * d);
    }
}
