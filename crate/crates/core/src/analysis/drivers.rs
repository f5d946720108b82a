//! Multi-run studies: viscosity sweeps, the inviscid limit and the
//! mollification-independence probe. Runs execute in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::flux::FluxSpec;
use crate::grid::{Grid, GridFunction};
use crate::initial_data::{mollify, MeasureData, Mollifier};
use crate::solver::{auto_grid, oracle, run_fv, sweep_spacing, SolverConfig, Trajectory};

use super::checks::{check_decay_bounds, DecayContext, DecayKind, EstimateCheck, ESTIMATE_TOL};
use super::fit::{default_window, fit_decay, fit_power_law, DecayFit};
use super::norms::{distance, l1_distance_resampled, norm, primitive};

/// Mollifier width used for viscosity `ε` in sweeps:
/// `min(0.05, 5ε, 0.15√ε)`. The last cap keeps the default fitting window
/// `[10h²/ε, t_end]` nonempty down to `t_end ≈ 0.25`.
pub fn sweep_width(eps: f64) -> f64 {
    (5.0 * eps).min(0.05).min(0.15 * eps.sqrt())
}

/// Shared setup of a sweep over viscosities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub flux: FluxSpec,
    pub measure: MeasureData,
    pub t_end: f64,
    pub n_snapshots: usize,
    /// Mollifier width; `None` selects [`sweep_width`].
    pub h: Option<f64>,
    /// Grid spacing; `None` selects [`sweep_spacing`]. Must not exceed `ε/4`.
    pub dx: Option<f64>,
    pub nash_c: f64,
}

impl SweepBase {
    pub fn new(flux: FluxSpec, measure: MeasureData, t_end: f64, nash_c: f64) -> Self {
        Self { flux, measure, t_end, n_snapshots: 24, h: None, dx: None, nash_c }
    }

    /// Mollified data, grid and snapshot schedule for one viscosity. The
    /// snapshots are log-spaced over the default fitting window.
    pub fn setup(&self, eps: f64) -> Result<(SolverConfig, GridFunction, f64)> {
        let h = self.h.unwrap_or_else(|| sweep_width(eps));
        let dx = self.dx.unwrap_or_else(|| sweep_spacing(eps, h));
        if dx > 0.25 * eps * (1.0 + 1e-12) {
            return Err(config(format!("under-resolved: dx = {dx:.3e} exceeds ε/4 = {:.3e}", 0.25 * eps)));
        }
        let (lo, hi) = self.measure.support();
        let m = self.measure.mass();
        let grid = auto_grid((lo - h, hi + h), m, eps, self.t_end, &self.flux, dx)?;
        let u0 = mollify(&self.measure, h, &grid, Mollifier::Bump)?;
        let (w0, w1) = default_window(h, eps, self.t_end);
        let ts = SolverConfig::log_snapshots(w0.min(0.5 * w1), w1, self.n_snapshots);
        Ok((SolverConfig::new(eps, grid, self.t_end, ts), u0, h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub h: f64,
    pub dx: f64,
    pub n: usize,
    pub checks: Vec<EstimateCheck>,
    pub sup_fit: Option<DecayFit>,
    pub l2_fit: Option<DecayFit>,
}

impl SweepRow {
    pub fn ratio(&self, kind: DecayKind) -> Option<f64> {
        self.checks.iter().find(|c| c.name == kind.id()).map(|c| c.lhs_max_ratio)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: DecayKind,
    pub rows: Vec<SweepRow>,
    /// Slope of the `kind` ratio against `log10 ε`.
    pub trend_slope: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Slope band for ε-independence.
pub const TREND_BAND: f64 = 0.1;

/// For each `ε` run from mollified data and evaluate every decay check;
/// pass iff the `kind` ratios stay within tolerance with a flat trend.
pub fn eps_sweep(base: &SweepBase, eps_list: &[f64], kind: DecayKind) -> Result<SweepReport> {
    if eps_list.len() < 2 {
        return Err(config("a sweep needs at least two viscosities"));
    }
    let setups = eps_list.iter().map(|&e| base.setup(e)).collect::<Result<Vec<_>>>()?;
    let rows = setups
        .into_par_iter()
        .map(|(cfg, u0, h)| -> Result<SweepRow> {
            let eps = cfg.eps;
            let tr = run_fv(&cfg, &base.flux, &u0)?;
            let ctx = DecayContext::certify(&base.flux, base.measure.mass(), eps, base.nash_c)?;
            let checks =
                DecayKind::ALL.iter().map(|k| check_decay_bounds(&tr, *k, &ctx)).collect::<Result<Vec<_>>>()?;
            let window = default_window(h, eps, base.t_end);
            let (sup_fit, l2_fit) = match ctx.p {
                Some(p) => (
                    fit_decay(&tr, f64::INFINITY, window).ok().map(|f| f.with_theory(-1.0 / p, None)),
                    fit_decay(&tr, 2.0, window).ok().map(|f| f.with_theory(-0.5 / p, None)),
                ),
                None => (None, None),
            };
            Ok(SweepRow { eps, h, dx: cfg.grid.dx(), n: cfg.grid.n, checks, sup_fit, l2_fit })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.ratio(kind).map(|v| (r.eps.log10(), v))).collect();
    let trend_slope = slope(&pairs);
    let max_ratio = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    let pass = max_ratio <= 1.0 + ESTIMATE_TOL && trend_slope.abs() <= TREND_BAND;
    Ok(SweepReport { kind, rows, trend_slope, max_ratio, pass })
}

fn slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return 0.0;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InviscidRow {
    pub eps: f64,
    pub n: usize,
    /// L¹ distance to the N-wave (`q = 2`) or to the next-smaller-ε run.
    pub l1_error: f64,
    pub sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InviscidReport {
    pub q: f64,
    pub mass: f64,
    pub t_probe: f64,
    pub rows: Vec<InviscidRow>,
    pub monotone: bool,
    pub final_error: f64,
    /// Smallest-ε sup norm over the inviscid peak `(M/((q−1)t))^{1/q}`.
    pub sup_ratio: f64,
    pub decay_checks: Vec<EstimateCheck>,
    pub pass: bool,
}

/// Final-error threshold for the N-wave comparison.
pub const INVISCID_FINAL_TOL: f64 = 0.02;

/// Vanishing-viscosity study for `f(u) = u^q` from `M δ_0`. For `q = 2`
/// errors are measured against the N-wave; otherwise consecutive runs are
/// compared (Cauchy test) and the last entry has no successor.
pub fn inviscid_limit(mass: f64, q: f64, eps_seq: &[f64], t_probe: f64, nash_c: f64) -> Result<InviscidReport> {
    if eps_seq.len() < 2 || eps_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config("eps sequence must decrease and hold at least two values"));
    }
    let flux = FluxSpec::power(q)?;
    let measure = crate::initial_data::dirac(mass, 0.0)?;
    let mut base = SweepBase::new(flux.clone(), measure, t_probe, nash_c);
    base.n_snapshots = 12;
    let runs: Vec<(Trajectory, f64)> = eps_seq
        .par_iter()
        .map(|&eps| {
            let (cfg, u0, h) = base.setup(eps)?;
            Ok((run_fv(&cfg, &flux, &u0)?, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let exact = q == 2.0;
    let mut rows = Vec::new();
    for (i, (tr, _)) in runs.iter().enumerate() {
        let u = tr.at(t_probe)?;
        let l1_error = if exact {
            l1_to_n_wave(u, mass, t_probe)
        } else if i + 1 < runs.len() {
            l1_distance_resampled(u, runs[i + 1].0.at(t_probe)?)?
        } else {
            f64::NAN
        };
        rows.push(InviscidRow { eps: tr.eps(), n: u.grid.n, l1_error, sup_norm: norm(u, f64::INFINITY)? });
    }
    let errs: Vec<f64> = rows.iter().map(|r| r.l1_error).filter(|e| e.is_finite()).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let final_error = *errs.last().unwrap_or(&f64::NAN);
    let peak = (mass / ((q - 1.0) * t_probe)).powf(1.0 / q);
    let sup_ratio = rows.last().map(|r| r.sup_norm / peak).unwrap_or(f64::NAN);
    let (last, _) = runs.last().expect("nonempty");
    let ctx = DecayContext::certify(&flux, mass, last.eps(), nash_c)?;
    let decay_checks = [DecayKind::PcondLinf, DecayKind::L2Powerlaw]
        .iter()
        .map(|k| check_decay_bounds(last, *k, &ctx))
        .collect::<Result<Vec<_>>>()?;
    let pass = monotone
        && (!exact || final_error <= INVISCID_FINAL_TOL)
        && sup_ratio <= 1.0 + ESTIMATE_TOL
        && decay_checks.iter().all(|c| c.pass());
    Ok(InviscidReport { q, mass, t_probe, rows, monotone, final_error, sup_ratio, decay_checks, pass })
}

/// `‖u − N‖_1` with the N-wave integrated exactly over each cell.
pub fn l1_to_n_wave(u: &GridFunction, mass: f64, t: f64) -> f64 {
    let dx = u.dx();
    // sub-cell quadrature resolves the jump at the front and the kink at 0
    let sub = 16;
    let mut total = 0.0;
    for (j, v) in u.values.iter().enumerate() {
        let x0 = u.grid.x_lo + j as f64 * dx;
        for k in 0..sub {
            let x = x0 + (k as f64 + 0.5) * dx / sub as f64;
            let target = oracle::burgers_inviscid(mass, x, t).unwrap_or(0.0);
            total += (v - target).abs();
        }
    }
    total * dx / sub as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub h_list: Vec<f64>,
    pub t_probe: f64,
    /// `(i, j, ‖U_{h_i} − U_{h_j}‖_∞)` for `i < j`.
    pub pairwise: Vec<(usize, usize, f64)>,
    /// Slope of `log ‖U_{h_i} − U_{h_{i+1}}‖_∞` against `log h_i`.
    pub order: f64,
    /// `(h, ‖U_bump − U_cosine‖_∞)` at each width.
    pub shape_swap: Vec<(f64, f64)>,
    pub shape_pass: bool,
    /// Largest `‖u_h(t)‖_∞ (at)^{1/p} / M^{1/p}` over widths and snapshots.
    pub sup_ratio: f64,
    pub pass: bool,
}

/// Order threshold for the probe.
pub const UNIQUENESS_MIN_ORDER: f64 = 0.8;

/// Solve from each mollification of `measure` on `grid` and compare the
/// primitives at `t_probe`.
pub fn uniqueness_probe(
    measure: &MeasureData,
    h_list: &[f64],
    flux: &FluxSpec,
    eps: f64,
    grid: Grid,
    t_probe: f64,
) -> Result<UniquenessReport> {
    if h_list.len() < 2 || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(config("h_list must decrease and hold at least two widths"));
    }
    let h_min = *h_list.last().expect("nonempty");
    if grid.dx() > h_min {
        return Err(Error::Precondition(format!(
            "grid spacing {:.3e} is coarser than the smallest width {h_min:.3e}",
            grid.dx()
        )));
    }
    let ts = SolverConfig::log_snapshots(0.1 * t_probe, t_probe, 8);
    let cfg = SolverConfig::new(eps, grid, t_probe, ts);
    let jobs: Vec<(f64, Mollifier)> =
        h_list.iter().flat_map(|&h| [(h, Mollifier::Bump), (h, Mollifier::RaisedCosine)]).collect();
    let runs = jobs
        .par_iter()
        .map(|&(h, shape)| run_fv(&cfg, flux, &mollify(measure, h, &grid, shape)?))
        .collect::<Result<Vec<_>>>()?;
    let prim = |k: usize| -> Result<_> { Ok(primitive(runs[k].at(t_probe)?)) };
    let mut bump = Vec::new();
    let mut shape_swap = Vec::new();
    for (i, &h) in h_list.iter().enumerate() {
        let (b, c) = (prim(2 * i)?, prim(2 * i + 1)?);
        shape_swap.push((h, distance(&b, &c, f64::INFINITY)?));
        bump.push(b);
    }
    let mut pairwise = Vec::new();
    for i in 0..bump.len() {
        for j in i + 1..bump.len() {
            pairwise.push((i, j, distance(&bump[i], &bump[j], f64::INFINITY)?));
        }
    }
    let consecutive: Vec<f64> =
        (0..bump.len() - 1).map(|i| distance(&bump[i], &bump[i + 1], f64::INFINITY)).collect::<Result<_>>()?;
    let order = fit_power_law(&h_list[..h_list.len() - 1], &consecutive).map(|(b, _, _)| b).unwrap_or(f64::NAN);
    // a shape swap at width h must not move U more than refining h to h/2 does
    let shape_pass = consecutive.iter().zip(&shape_swap).all(|(d, (_, s))| *s <= 2.0 * d);
    let mut sup_ratio = 0.0f64;
    if !flux.is_zero() && flux.natural_exponent().is_some() {
        let ctx = DecayContext::certify(flux, measure.mass(), eps, 0.0)?;
        for (k, tr) in runs.iter().enumerate() {
            if k % 2 == 0 {
                let c = check_decay_bounds(tr, DecayKind::PcondLinf, &ctx)?;
                sup_ratio = sup_ratio.max(c.lhs_max_ratio);
            }
        }
    }
    let pass = order >= UNIQUENESS_MIN_ORDER && shape_pass && sup_ratio <= 1.0 + ESTIMATE_TOL;
    Ok(UniquenessReport { h_list: h_list.to_vec(), t_probe, pairwise, order, shape_swap, shape_pass, sup_ratio, pass })
}
