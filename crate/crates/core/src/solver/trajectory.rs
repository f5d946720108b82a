use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

use super::config::SolverConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `"fv"`, `"duhamel"` or `"hj"`.
    pub solver: String,
    pub config: SolverConfig,
    pub flux_id: String,
    pub data_id: String,
}

/// One Picard block of the Duhamel integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardBlock {
    pub t0: f64,
    pub t1: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    /// Every accepted time step, in order.
    #[serde(skip)]
    pub dt_history: Vec<f64>,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Net mass that left the grid, accumulated at each snapshot time.
    pub leakage_at_snapshots: Vec<f64>,
    /// Net mass that left the grid by `t_end`.
    pub leakage: f64,
    /// Largest value seen in the two boundary cells.
    pub boundary_max: f64,
    /// Most negative value seen anywhere (0 when none).
    pub min_value: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub picard: Vec<PicardBlock>,
}

impl Diagnostics {
    pub(crate) fn record_dt(&mut self, dt: f64) {
        if self.steps == 0 {
            self.dt_min = dt;
            self.dt_max = dt;
        } else {
            self.dt_min = self.dt_min.min(dt);
            self.dt_max = self.dt_max.max(dt);
        }
        self.steps += 1;
        self.dt_history.push(dt);
    }

    pub fn max_picard_iterations(&self) -> usize {
        self.picard.iter().map(|b| b.iterations).max().unwrap_or(0)
    }
}

/// Snapshots of one run. Snapshot times are strictly increasing; every
/// snapshot passed the nonnegativity assertion of its solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: GridFunction,
    pub snapshots: Vec<GridFunction>,
    pub provenance: Provenance,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn eps(&self) -> f64 {
        self.provenance.config.eps
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time.unwrap_or(f64::NAN)).collect()
    }

    /// Snapshot whose time is within `1e-12` relative of `t`.
    pub fn at(&self, t: f64) -> Result<&GridFunction> {
        self.snapshots
            .iter()
            .find(|s| s.time.is_some_and(|st| (st - t).abs() <= 1e-12 * t.abs().max(1.0)))
            .ok_or_else(|| Error::Precondition(format!("no snapshot at t = {t}")))
    }

    pub fn last(&self) -> &GridFunction {
        self.snapshots.last().expect("trajectories carry at least one snapshot")
    }

    /// Initial mass.
    pub fn mass0(&self) -> f64 {
        self.initial.mass()
    }
}
