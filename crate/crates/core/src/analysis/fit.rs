use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::solver::Trajectory;

use super::norms::norm;

/// Snapshots a fitting window must contain.
pub const MIN_FIT_POINTS: usize = 8;

/// Least-squares power law `‖u(t)‖_p ≈ constant · t^{exponent}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `f64::INFINITY` for the sup norm.
    pub norm_p: f64,
    pub window: (f64, f64),
    pub exponent: f64,
    pub constant: f64,
    pub r2: f64,
    pub n_points: usize,
    pub theoretical_exponent: Option<f64>,
    pub theoretical_constant_bound: Option<f64>,
}

impl DecayFit {
    pub fn with_theory(mut self, exponent: f64, constant_bound: Option<f64>) -> Self {
        self.theoretical_exponent = Some(exponent);
        self.theoretical_constant_bound = constant_bound;
        self
    }

    /// `|exponent − theoretical| ≤ band`; false without a reference.
    pub fn within(&self, band: f64) -> bool {
        self.theoretical_exponent.is_some_and(|e| (self.exponent - e).abs() <= band)
    }
}

/// Default window `[10 h²/ε, t_end]`: past the diffusive resolution time
/// of a mollifier of width `h`.
pub fn default_window(h: f64, eps: f64, t_end: f64) -> (f64, f64) {
    (10.0 * h * h / eps, t_end)
}

/// Fit `log y = log c + β log t`; returns `(β, c, r²)`.
pub fn fit_power_law(ts: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if ts.len() != ys.len() || ts.len() < 2 {
        return Err(domain("need at least two matched samples"));
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0)) {
        return Err(domain(format!("norms must be positive to fit, got {y}")));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return Err(domain(format!("times must be positive to fit, got {t}")));
    }
    let n = ts.len() as f64;
    let lx: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("fit needs at least two distinct times"));
    }
    let beta = sxy / sxx;
    let c = (my - beta * mx).exp();
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - my - beta * (x - mx)).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok((beta, c, r2))
}

/// Fit the decay of `‖u(t)‖_p` over the snapshots inside `window`.
pub fn fit_decay(traj: &Trajectory, norm_p: f64, window: (f64, f64)) -> Result<DecayFit> {
    if !(window.0 < window.1) {
        return Err(domain(format!("empty window [{}, {}]", window.0, window.1)));
    }
    let tol = 1e-12 * window.1.abs().max(1.0);
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for s in &traj.snapshots {
        let t = s.time.unwrap_or(f64::NAN);
        if t >= window.0 - tol && t <= window.1 + tol {
            ts.push(t);
            ys.push(norm(s, norm_p)?);
        }
    }
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::Precondition(format!(
            "window [{:.4e}, {:.4e}] holds {} snapshots; at least {MIN_FIT_POINTS} are required",
            window.0,
            window.1,
            ts.len()
        )));
    }
    let (exponent, constant, r2) = fit_power_law(&ts, &ys)?;
    Ok(DecayFit {
        norm_p,
        window,
        exponent,
        constant,
        r2,
        n_points: ts.len(),
        theoretical_exponent: None,
        theoretical_constant_bound: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxSpec;
    use crate::grid::Grid;
    use crate::solver::{oracle, run_fv, SolverConfig};

    #[test]
    fn exact_power_law_is_recovered() {
        let ts: Vec<f64> = (1..20).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t.powf(-0.37)).collect();
        let (b, c, r2) = fit_power_law(&ts, &ys).unwrap();
        assert!((b + 0.37).abs() < 1e-10);
        assert!((c - 3.0).abs() < 1e-10);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!(fit_power_law(&ts[..3], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn heat_sup_norm_decays_like_inverse_square_root() {
        let grid = Grid::new(-12.0, 12.0, 960).unwrap();
        let t0 = 0.05;
        let u0 = oracle::sample(grid, t0, |x| oracle::heat(1.0, 1.0, x, t0)).unwrap();
        let ts = SolverConfig::log_snapshots(0.1, 1.0, 12);
        let cfg = SolverConfig::new(1.0, grid, 1.0, ts).with_t_start(t0);
        let tr = run_fv(&cfg, &FluxSpec::zero(), &u0).unwrap();
        let fit = fit_decay(&tr, f64::INFINITY, (0.1, 1.0)).unwrap().with_theory(-0.5, None);
        assert!(fit.within(0.02), "{fit:?}");
        assert_eq!(fit.n_points, 12);
        assert!(fit_decay(&tr, 2.0, (0.5, 1.0)).is_err());
    }
}
