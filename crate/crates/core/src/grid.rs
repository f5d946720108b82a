use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Uniform cell-centred grid on `[x_lo, x_hi]` with `n` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_hi > x_lo) {
            return Err(config(format!("invalid grid interval [{x_lo}, {x_hi}]")));
        }
        if n < 3 {
            return Err(config(format!("grid needs at least 3 cells, got {n}")));
        }
        Ok(Self { x_lo, x_hi, n })
    }

    /// Grid with spacing at most `dx` covering `[x_lo, x_hi]`.
    pub fn with_spacing(x_lo: f64, x_hi: f64, dx: f64) -> Result<Self> {
        let n = ((x_hi - x_lo) / dx).ceil() as usize;
        Self::new(x_lo, x_hi, n.max(3))
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.n as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_lo + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.center(j)).collect()
    }

    /// The grid whose cell centres are this grid's right cell edges. Node
    /// values of a primitive live there; its last centre is `x_hi`.
    pub fn staggered(&self) -> Self {
        let h = 0.5 * self.dx();
        Self { x_lo: self.x_lo + h, x_hi: self.x_hi + h, n: self.n }
    }

    pub fn contains(&self, lo: f64, hi: f64) -> bool {
        self.x_lo <= lo && hi <= self.x_hi
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.x_lo - other.x_lo).abs() <= 1e-12 * (1.0 + self.x_lo.abs())
            && (self.x_hi - other.x_hi).abs() <= 1e-12 * (1.0 + self.x_hi.abs())
    }
}

/// Cell values of a function on a [`Grid`], optionally time-stamped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: Option<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(config(format!("expected {} values, got {}", grid.n, values.len())));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at cell {j}")));
        }
        Ok(Self { grid, values, time: None })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n], time: None }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.centers().into_iter().map(f).collect(), time: None }
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    /// `dx · Σ values`.
    pub fn mass(&self) -> f64 {
        self.dx() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| c * v).collect(), time: self.time }
    }

    /// Cell-wise shift by an integer number of cells, filling with zeros.
    pub fn shifted_cells(&self, k: isize) -> Self {
        let n = self.grid.n as isize;
        let values = (0..n)
            .map(|j| {
                let src = j - k;
                if (0..n).contains(&src) {
                    self.values[src as usize]
                } else {
                    0.0
                }
            })
            .collect();
        Self { grid: self.grid, values, time: self.time }
    }

    /// Write as a two-column CSV with header `x,u`; numbers carry 17
    /// significant digits, so values reload exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u"])?;
        for (x, u) in self.grid.centers().iter().zip(&self.values) {
            w.write_record([fmt17(*x), fmt17(*u)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reload a snapshot CSV; the grid is rebuilt from the `x` column, so its
    /// endpoints may move by rounding.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (xs, us) = read_two_columns(input)?;
        if xs.len() < 3 {
            return Err(config("snapshot CSV needs at least 3 rows"));
        }
        let n = xs.len();
        let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let grid = Grid::new(xs[0] - 0.5 * dx, xs[n - 1] + 0.5 * dx, n)?;
        GridFunction::new(grid, us)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Read a headed two-column numeric CSV.
pub fn read_two_columns<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(config("expected two columns"));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| config(format!("not a number: {s:?}")));
        xs.push(parse(&rec[0])?);
        ys.push(parse(&rec[1])?);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_examples() {
        let g = Grid::new(0.0, 1.0, 100).unwrap();
        assert_eq!(GridFunction::zeros(g).mass(), 0.0);
        let one = GridFunction::from_fn(g, |_| 1.0);
        assert!((one.mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Grid::new(-3.0, 5.0, 257).unwrap();
        let f = GridFunction::from_fn(g, |x| (-(x * x)).exp() / 3.0 + 1e-300);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, f.values);
        assert!(back.grid.same_as(&f.grid));
    }

    #[test]
    fn staggered_grid_ends_at_right_edge() {
        let g = Grid::new(-1.0, 1.0, 10).unwrap();
        let s = g.staggered();
        assert!((s.center(9) - 1.0).abs() < 1e-15);
        assert!((s.center(0) - (g.x_lo + g.dx())).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1.0, 0.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 2).is_err());
        let g = Grid::new(0.0, 1.0, 4).unwrap();
        assert!(GridFunction::new(g, vec![0.0; 3]).is_err());
        assert!(GridFunction::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
