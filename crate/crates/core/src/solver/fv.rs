//! Monotone conservative finite-volume solver with homogeneous Dirichlet
//! ghost cells and a boundary-flux ledger.
//!
//! The default ([`FvVariant::Blended`]) interface flux is
//! `(1 − θ) F_EO(u_j, u_{j+1}) + θ (f(u_j) + f(u_{j+1}))/2 − ε (u_{j+1} − u_j)/dx`
//! with `θ = min(1, 2ε/(dx·A))` and `A = max|f'|` over `[0, max u]`. For
//! `dt ≤ cfl / ((1 − θ)A/dx + 2ε/dx²)` every updated value is a nonnegative
//! combination of old values, so the scheme is monotone.

use crate::error::{config, Error, Result};
use crate::flux::{FluxKind, FluxSpec};
use crate::grid::GridFunction;
use crate::tridiag;

use super::config::{FvVariant, SolverConfig};
use super::trajectory::{Diagnostics, Provenance, Trajectory};

/// Relative undershoot tolerated before a run is declared unstable.
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// Shared flux evaluation for the finite-volume and Hamilton–Jacobi solvers.
pub(crate) struct Stencil<'a> {
    pub flux: &'a FluxSpec,
    pub eps: f64,
    pub dx: f64,
    split: bool,
    f: Vec<f64>,
    fp: Vec<f64>,
}

impl<'a> Stencil<'a> {
    pub fn new(flux: &'a FluxSpec, eps: f64, dx: f64, n: usize) -> Self {
        let split = matches!(flux.kind(), FluxKind::Tabulated(_));
        Self { flux, eps, dx, split, f: vec![0.0; n + 2], fp: vec![0.0; if split { n + 2 } else { 0 }] }
    }

    /// Blending weight and largest wave speed for states in `[0, max_u]`.
    pub fn theta(&self, max_u: f64) -> (f64, f64) {
        let a = self.flux.max_abs_slope(max_u);
        let theta = if a > 0.0 { (2.0 * self.eps / (self.dx * a)).min(1.0) } else { 1.0 };
        (theta, a)
    }

    /// Largest stable explicit step of the blended scheme.
    pub fn blended_dt(&self, cfl: f64, theta: f64, a: f64) -> f64 {
        let rate = (1.0 - theta) * a / self.dx + 2.0 * self.eps / (self.dx * self.dx);
        cfl / rate
    }

    /// Interface fluxes `out[i]` between states `w[i−1]` and `w[i]` for
    /// `i = 0..=n`, with ghost states `left` and `right`. `diffusive`
    /// includes the central viscous flux.
    pub fn fluxes(&mut self, w: &[f64], left: f64, right: f64, theta: f64, diffusive: bool, out: &mut [f64]) {
        let n = w.len();
        let state = |i: usize| -> f64 {
            if i == 0 {
                left
            } else if i == n + 1 {
                right
            } else {
                w[i - 1]
            }
        };
        for i in 0..n + 2 {
            let s = state(i);
            self.f[i] = self.flux.value(s);
            if self.split {
                self.fp[i] = self.flux.positive_part(s);
            }
        }
        let visc = if diffusive { self.eps / self.dx } else { 0.0 };
        // interface i sits between padded states i and i + 1
        for (i, o) in out.iter_mut().enumerate().take(n + 1) {
            let (fa, fb) = (self.f[i], self.f[i + 1]);
            let eo = if self.split { self.fp[i] + (fb - self.fp[i + 1]) } else { fa };
            let central = 0.5 * (fa + fb);
            *o = (1.0 - theta) * eo + theta * central - visc * (state(i + 1) - state(i));
        }
    }
}

/// Single-trajectory run.
pub fn run_fv(cfg: &SolverConfig, flux: &FluxSpec, u0: &GridFunction) -> Result<Trajectory> {
    let mut out = run_fv_lockstep(cfg, flux, std::slice::from_ref(u0))?;
    Ok(out.pop().expect("one member"))
}

/// Evolve several initial data with one shared sequence of time steps and
/// blending weights, so pairwise structural properties (contraction,
/// order) are inherited exactly from the monotone update.
pub fn run_fv_lockstep(cfg: &SolverConfig, flux: &FluxSpec, data: &[GridFunction]) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(config("no initial data"));
    }
    for u0 in data {
        check_initial(cfg, u0)?;
    }
    let grid = cfg.grid;
    let n = grid.n;
    let dx = grid.dx();
    let mut stencil = Stencil::new(flux, cfg.eps, dx, n);
    let mut fl = vec![0.0; n + 1];

    struct Member {
        u: Vec<f64>,
        leak: f64,
        scale: f64,
        mass0: f64,
        diag: Diagnostics,
        snaps: Vec<GridFunction>,
    }
    let mut members: Vec<Member> = data
        .iter()
        .map(|u0| Member {
            u: u0.values.clone(),
            leak: 0.0,
            scale: u0.max().max(0.0),
            mass0: u0.mass(),
            diag: Diagnostics::default(),
            snaps: Vec::new(),
        })
        .collect();

    let mut t = cfg.t_start;
    let mut step = 0usize;
    for &t_snap in &cfg.snapshot_times {
        while t < t_snap {
            let max_u = members.iter().map(|m| max_of(&m.u)).fold(0.0, f64::max);
            let (theta, a) = stencil.theta(max_u);
            let mut dt = match cfg.fv_variant {
                FvVariant::Blended => stencil.blended_dt(cfg.cfl, theta, a),
                FvVariant::UpwindImplicit if a > 0.0 => cfg.cfl * dx / a,
                FvVariant::UpwindImplicit => f64::INFINITY,
            };
            if let Some(cap) = cfg.dt_max {
                dt = dt.min(cap);
            }
            let remaining = t_snap - t;
            let last = dt >= remaining;
            if last {
                dt = remaining;
            }
            step += 1;
            for m in members.iter_mut() {
                match cfg.fv_variant {
                    FvVariant::Blended => {
                        stencil.fluxes(&m.u, 0.0, 0.0, theta, true, &mut fl);
                        apply(&mut m.u, &fl, dt / dx);
                        m.leak += dt * (fl[n] - fl[0]);
                    }
                    FvVariant::UpwindImplicit => {
                        stencil.fluxes(&m.u, 0.0, 0.0, 0.0, false, &mut fl);
                        apply(&mut m.u, &fl, dt / dx);
                        m.leak += dt * (fl[n] - fl[0]);
                        m.u = implicit_diffusion(&m.u, cfg.eps * dt / (dx * dx))?;
                        m.leak += dt * cfg.eps / dx * (m.u[0] + m.u[n - 1]);
                    }
                }
                m.diag.record_dt(dt);
                let t_new = if last { t_snap } else { t + dt };
                check_state(&m.u, m.scale, step, t_new, &mut m.diag)?;
            }
            t = if last { t_snap } else { t + dt };
        }
        for m in members.iter_mut() {
            m.snaps.push(GridFunction { grid, values: m.u.clone(), time: Some(t_snap) });
            m.diag.leakage_at_snapshots.push(m.leak);
        }
    }

    members
        .into_iter()
        .zip(data)
        .map(|(mut m, u0)| {
            m.diag.leakage = m.leak;
            check_leakage(cfg, m.leak, m.mass0)?;
            Ok(Trajectory {
                initial: u0.clone().at_time(cfg.t_start),
                snapshots: m.snaps,
                provenance: Provenance {
                    solver: "fv".into(),
                    config: cfg.clone(),
                    flux_id: flux.id(),
                    data_id: grid_data_id(u0),
                },
                diagnostics: m.diag,
            })
        })
        .collect()
}

fn apply(u: &mut [f64], fl: &[f64], lambda: f64) {
    for (j, v) in u.iter_mut().enumerate() {
        *v -= lambda * (fl[j + 1] - fl[j]);
    }
}

/// Backward-Euler step of `u_t = ε u_xx` with zero Dirichlet ghosts;
/// `lambda = ε dt / dx²`.
fn implicit_diffusion(u: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = u.len();
    let lower = vec![-lambda; n];
    let upper = vec![-lambda; n];
    let diag = vec![1.0 + 2.0 * lambda; n];
    tridiag::solve(&lower, &diag, &upper, u)
}

pub(crate) fn max_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(0.0, f64::max)
}

pub(crate) fn check_initial(cfg: &SolverConfig, u0: &GridFunction) -> Result<()> {
    if !u0.grid.same_as(&cfg.grid) {
        return Err(config("initial data grid differs from the solver grid"));
    }
    if let Some(j) = u0.values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Precondition(format!(
            "initial data must be finite and nonnegative; cell {j} holds {}",
            u0.values[j]
        )));
    }
    Ok(())
}

/// NaN and undershoot assertion; updates boundary and minimum diagnostics.
pub(crate) fn check_state(u: &[f64], scale: f64, step: usize, t: f64, diag: &mut Diagnostics) -> Result<()> {
    let mut lo = 0.0f64;
    for (j, v) in u.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Instability { step, t, detail: format!("non-finite value in cell {j}") });
        }
        lo = lo.min(*v);
    }
    if lo < -NEGATIVITY_TOL * scale {
        return Err(Error::Instability {
            step,
            t,
            detail: format!("undershoot {lo:.3e} below -{NEGATIVITY_TOL:e}·{scale:.3e}"),
        });
    }
    diag.min_value = diag.min_value.min(lo);
    let n = u.len();
    diag.boundary_max = diag.boundary_max.max(u[0].abs()).max(u[n - 1].abs());
    Ok(())
}

pub(crate) fn check_leakage(cfg: &SolverConfig, leak: f64, mass0: f64) -> Result<()> {
    if leak.abs() > cfg.leakage_tol * mass0 {
        let msg = format!("boundary leakage {leak:.3e} exceeds {:.1e} of the mass {mass0:.6e}", cfg.leakage_tol);
        if cfg.strict {
            return Err(Error::DomainTooSmall(msg));
        }
        log::warn!("{msg}");
    }
    Ok(())
}

pub(crate) fn grid_data_id(u0: &GridFunction) -> String {
    format!("grid(n={}, mass={:.16e}, max={:.16e})", u0.grid.n, u0.mass(), u0.max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::initial_data::{dirac, mollify, Mollifier};
    use crate::solver::oracle;

    fn setup(eps: f64, p: Option<f64>, n: usize) -> (SolverConfig, FluxSpec, GridFunction) {
        let grid = Grid::new(-4.0, 6.0, n).unwrap();
        let u0 = mollify(&dirac(1.0, 0.0).unwrap(), 0.3, &grid, Mollifier::Bump).unwrap();
        let flux = match p {
            Some(p) => FluxSpec::power(p).unwrap(),
            None => FluxSpec::zero(),
        };
        (SolverConfig::new(eps, grid, 1.0, vec![0.25, 0.5, 1.0]), flux, u0)
    }

    #[test]
    fn mass_is_conserved_and_values_stay_in_range() {
        for variant in [FvVariant::Blended, FvVariant::UpwindImplicit] {
            let (mut cfg, flux, u0) = setup(0.05, Some(2.0), 800);
            cfg.fv_variant = variant;
            let tr = run_fv(&cfg, &flux, &u0).unwrap();
            assert_eq!(tr.times(), vec![0.25, 0.5, 1.0]);
            for (s, leak) in tr.snapshots.iter().zip(&tr.diagnostics.leakage_at_snapshots) {
                assert!(((s.mass() + leak) / u0.mass() - 1.0).abs() < 1e-12);
                assert!(s.max() <= u0.max() * (1.0 + 1e-12));
                assert!(s.min() >= -1e-12 * u0.max());
            }
            assert!(tr.diagnostics.leakage.abs() < 1e-12);
        }
    }

    #[test]
    fn heat_run_matches_kernel() {
        let grid = Grid::new(-12.0, 12.0, 1200).unwrap();
        let eps = 1.0;
        // seed from the exact kernel at t = 0.05 to remove mollification error
        let u0 = GridFunction::from_fn(grid, |x| oracle::heat(1.0, eps, x, 0.05).unwrap());
        let cfg = SolverConfig::new(eps, grid, 1.0, vec![0.5, 1.0]).with_t_start(0.05);
        let tr = run_fv(&cfg, &FluxSpec::zero(), &u0).unwrap();
        let s = tr.at(1.0).unwrap();
        let peak = oracle::heat(1.0, eps, 0.0, 1.0).unwrap();
        let err = grid
            .centers()
            .iter()
            .zip(&s.values)
            .map(|(x, v)| (v - oracle::heat(1.0, eps, *x, 1.0).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err / peak < 1e-3, "{}", err / peak);
    }

    #[test]
    fn lockstep_pairs_contract_and_stay_ordered() {
        let (cfg, flux, u0) = setup(0.02, Some(3.0), 600);
        let v0 = u0.scaled(2.0);
        let w0 = u0.shifted_cells(17);
        let tr = run_fv_lockstep(&cfg, &flux, &[u0.clone(), v0, w0]).unwrap();
        let mut prev_d = f64::INFINITY;
        let d0: f64 = u0.values.iter().zip(&tr[2].initial.values).map(|(a, b)| (a - b).abs()).sum();
        prev_d = prev_d.min(d0);
        for k in 0..3 {
            let (u, v, w) = (&tr[0].snapshots[k], &tr[1].snapshots[k], &tr[2].snapshots[k]);
            assert!(u.values.iter().zip(&v.values).all(|(a, b)| *a <= *b + 1e-10));
            let d: f64 = u.values.iter().zip(&w.values).map(|(a, b)| (a - b).abs()).sum();
            assert!(d <= prev_d * (1.0 + 1e-12));
            prev_d = d;
        }
    }

    #[test]
    fn strict_mode_rejects_leaky_domains() {
        let grid = Grid::new(-1.0, 1.0, 200).unwrap();
        let u0 = mollify(&dirac(1.0, 0.0).unwrap(), 0.2, &grid, Mollifier::Bump).unwrap();
        let cfg = SolverConfig::new(1.0, grid, 1.0, vec![1.0]).strict(true);
        assert!(matches!(run_fv(&cfg, &FluxSpec::zero(), &u0), Err(Error::DomainTooSmall(_))));
        let cfg = cfg.strict(false);
        let tr = run_fv(&cfg, &FluxSpec::zero(), &u0).unwrap();
        let s = tr.last();
        assert!((s.mass() + tr.diagnostics.leakage - 1.0).abs() < 1e-12);
        assert!(tr.diagnostics.leakage > 0.1);
    }

    #[test]
    fn rejects_negative_data_and_wrong_grid() {
        let (cfg, flux, u0) = setup(0.05, Some(2.0), 100);
        let mut bad = u0.clone();
        bad.values[3] = -1.0;
        assert!(matches!(run_fv(&cfg, &flux, &bad), Err(Error::Precondition(_))));
        let other = GridFunction::zeros(Grid::new(0.0, 1.0, 100).unwrap());
        assert!(run_fv(&cfg, &flux, &other).is_err());
    }

    #[test]
    fn constant_zero_data_stays_zero() {
        let (cfg, flux, u0) = setup(0.05, Some(2.0), 100);
        let z = GridFunction::zeros(u0.grid);
        let tr = run_fv(&cfg, &flux, &z).unwrap();
        assert!(tr.last().values.iter().all(|v| *v == 0.0));
    }
}
