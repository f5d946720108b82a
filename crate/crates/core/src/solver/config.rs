use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Fv,
    Duhamel,
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fv" => Ok(Self::Fv),
            "duhamel" => Ok(Self::Duhamel),
            _ => Err(config(format!("unknown scheme {s:?}; expected fv or duhamel"))),
        }
    }
}

/// Finite-volume time discretization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FvVariant {
    /// Explicit; Engquist–Osher flux blended towards the central flux where
    /// the cell Péclet number allows, central diffusion.
    #[default]
    Blended,
    /// Explicit Engquist–Osher convection followed by a backward-Euler
    /// diffusion solve.
    UpwindImplicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub scheme: Scheme,
    pub grid: Grid,
    /// Time carried by the initial data.
    pub t_start: f64,
    pub t_end: f64,
    /// Strictly increasing, inside `(t_start, t_end]`.
    pub snapshot_times: Vec<f64>,
    /// Convective CFL number in `(0, 1]`.
    pub cfl: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub fv_variant: FvVariant,
    /// Optional cap on every time step.
    pub dt_max: Option<f64>,
    /// Escalate boundary leakage above `leakage_tol · mass` to an error.
    pub strict: bool,
    pub leakage_tol: f64,
}

impl SolverConfig {
    /// Defaults: FV, `t_start = 0`, `cfl = 0.9`, `picard_tol = 1e-10`,
    /// `picard_max_iter = 50`, leakage tolerance `1e-8`.
    pub fn new(eps: f64, grid: Grid, t_end: f64, snapshot_times: Vec<f64>) -> Self {
        Self {
            eps,
            scheme: Scheme::Fv,
            grid,
            t_start: 0.0,
            t_end,
            snapshot_times,
            cfl: 0.9,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            fv_variant: FvVariant::Blended,
            dt_max: None,
            strict: false,
            leakage_tol: 1e-8,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_t_start(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    /// `n` snapshot times evenly spaced on a log scale over `[t_lo, t_end]`.
    pub fn log_snapshots(t_lo: f64, t_end: f64, n: usize) -> Vec<f64> {
        let mut ts = crate::flux::log_grid(t_lo, t_end, n);
        if let Some(last) = ts.last_mut() {
            *last = t_end;
        }
        ts
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.t_start >= 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(config(format!("need 0 <= t_start < t_end, got [{}, {}]", self.t_start, self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.snapshot_times.is_empty() {
            return Err(config("at least one snapshot time is required"));
        }
        let mut prev = self.t_start;
        for &t in &self.snapshot_times {
            if !(t > prev && t <= self.t_end) {
                return Err(config(format!(
                    "snapshot times must increase strictly inside ({}, {}]; offending value {t}",
                    self.t_start, self.t_end
                )));
            }
            prev = t;
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return Err(config("picard_tol and picard_max_iter must be positive"));
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0) {
                return Err(config("dt_max must be positive"));
            }
        }
        if !(self.leakage_tol >= 0.0) {
            return Err(config("leakage_tol must be nonnegative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SolverConfig {
        SolverConfig::new(0.1, Grid::new(-1.0, 1.0, 10).unwrap(), 1.0, vec![0.5, 1.0])
    }

    #[test]
    fn validation() {
        assert!(base().validate().is_ok());
        let mut c = base();
        c.snapshot_times = vec![0.5, 0.5];
        assert!(c.validate().is_err());
        let mut c = base();
        c.snapshot_times = vec![1.5];
        assert!(c.validate().is_err());
        let mut c = base();
        c.cfl = 1.5;
        assert!(c.validate().is_err());
        let mut c = base();
        c.eps = 0.0;
        assert!(c.validate().is_err());
        let c = base().with_t_start(0.6);
        assert!(c.validate().is_err());
    }

    #[test]
    fn log_snapshots_end_exactly() {
        let ts = SolverConfig::log_snapshots(0.01, 2.5, 12);
        assert_eq!(ts.len(), 12);
        assert_eq!(*ts.last().unwrap(), 2.5);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }
}
