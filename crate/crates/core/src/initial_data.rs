//! Nonnegative finite measures (atoms plus a piecewise-polynomial density)
//! and their mollified projections onto a grid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
pub use crate::grid::{Grid, GridFunction};
use crate::quadrature::gauss_legendre;

/// `∫_{-1}^{1} exp(-1/(1-x²)) dx`, frozen from a high-order quadrature.
pub const BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub mass: f64,
}

/// One polynomial piece `Σ c_i (x − lo)^i` on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return 0.0;
        }
        let s = x - self.lo;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn integral(&self) -> f64 {
        let w = self.hi - self.lo;
        self.coeffs.iter().enumerate().map(|(i, c)| c * w.powi(i as i32 + 1) / (i as f64 + 1.0)).sum()
    }
}

/// Compactly supported nonnegative piecewise-polynomial density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pieces: Vec<Piece>,
}

impl Density {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(domain("density needs at least one piece"));
        }
        for p in &pieces {
            if !(p.lo.is_finite() && p.hi.is_finite() && p.hi > p.lo) {
                return Err(domain(format!("bad density piece [{}, {}]", p.lo, p.hi)));
            }
            if p.coeffs.is_empty() || p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(domain("density coefficients must be finite"));
            }
            // sampled nonnegativity check
            for k in 0..=256 {
                let x = p.lo + (p.hi - p.lo) * k as f64 / 256.0;
                if p.eval(x) < -1e-14 * p.coeffs.iter().map(|c| c.abs()).sum::<f64>() {
                    return Err(domain(format!("density is negative at x = {x}")));
                }
            }
        }
        Ok(Self { pieces })
    }

    /// Uniform density `value` on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(vec![Piece { lo, hi, coeffs: vec![value] }])
    }

    /// Piecewise-linear density through samples `(x_k, u_k)`.
    pub fn from_samples(xs: &[f64], us: &[f64]) -> Result<Self> {
        if xs.len() < 2 || xs.len() != us.len() {
            return Err(domain("density samples need at least two (x, u) pairs"));
        }
        let pieces = xs
            .windows(2)
            .zip(us.windows(2))
            .map(|(x, u)| Piece { lo: x[0], hi: x[1], coeffs: vec![u[0], (u[1] - u[0]) / (x[1] - x[0])] })
            .collect();
        Self::new(pieces)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let (xs, us) = crate::grid::read_two_columns(std::fs::File::open(path)?)?;
        Self::from_samples(&xs, &us)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces.iter().map(|p| p.eval(x)).sum()
    }

    pub fn mass(&self) -> f64 {
        self.pieces.iter().map(Piece::integral).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self.pieces.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min);
        let hi = self.pieces.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }
}

/// Nonnegative finite measure with bounded support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureData {
    pub atoms: Vec<Atom>,
    pub density: Option<Density>,
}

/// `M δ_{x0}`.
pub fn dirac(mass: f64, x0: f64) -> Result<MeasureData> {
    MeasureData::new(vec![Atom { x: x0, mass }], None)
}

impl MeasureData {
    pub fn new(atoms: Vec<Atom>, density: Option<Density>) -> Result<Self> {
        for a in &atoms {
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(domain(format!("atom mass must be positive, got {}", a.mass)));
            }
            if !a.x.is_finite() {
                return Err(domain("atom position must be finite"));
            }
        }
        let m = Self { atoms, density };
        if !(m.mass() > 0.0) {
            return Err(domain("measure must have positive total mass"));
        }
        Ok(m)
    }

    pub fn with_atom(mut self, mass: f64, x: f64) -> Result<Self> {
        self.atoms.push(Atom { x, mass });
        Self::new(self.atoms, self.density)
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.density.as_ref().map_or(0.0, Density::mass)
    }

    pub fn support(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.x);
            hi = hi.max(a.x);
        }
        if let Some(d) = &self.density {
            let (a, b) = d.support();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// `∫ ζ du_0`.
    pub fn integrate(&self, zeta: impl Fn(f64) -> f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * zeta(a.x)).sum();
        let dens = self
            .density
            .as_ref()
            .map_or(0.0, |d| d.pieces().iter().map(|p| gauss_legendre(|x| p.eval(x) * zeta(x), p.lo, p.hi, 32)).sum());
        atoms + dens
    }

    /// Short identifier for provenance records.
    pub fn id(&self) -> String {
        let mut parts: Vec<String> = self.atoms.iter().map(|a| format!("{}@{}", a.mass, a.x)).collect();
        if let Some(d) = &self.density {
            parts.push(format!("density[{} pieces]", d.pieces().len()));
        }
        format!("measure:{}", parts.join(","))
    }
}

/// Compactly supported mollifier kernels of half-width `h`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mollifier {
    /// `c exp(−1/(1 − (x/h)²))` on `|x| < h`.
    #[default]
    Bump,
    /// `(1 + cos(πx/h)) / 2h` on `|x| < h`.
    RaisedCosine,
}

impl Mollifier {
    pub fn eval(self, x: f64, h: f64) -> f64 {
        let s = x / h;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            Mollifier::Bump => (-1.0 / (1.0 - s * s)).exp() / (BUMP_INTEGRAL * h),
            Mollifier::RaisedCosine => (1.0 + (std::f64::consts::PI * s).cos()) / (2.0 * h),
        }
    }
}

/// Width of the `k`-th member of a halving sequence: `h_0 2^{−k}`.
pub fn mollifier_width(h0: f64, k: u32) -> f64 {
    h0 * 0.5f64.powi(k as i32)
}

/// Convolve the measure with the mollifier of half-width `h`, sample at
/// cell centres and rescale so the discrete mass equals the total mass.
pub fn mollify(measure: &MeasureData, h: f64, grid: &Grid, shape: Mollifier) -> Result<GridFunction> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(domain(format!("mollifier width must be positive, got {h}")));
    }
    if h < grid.dx() {
        return Err(config(format!("mollifier width {h} is below the grid spacing {}", grid.dx())));
    }
    let (lo, hi) = measure.support();
    if !grid.contains(lo - h, hi + h) {
        return Err(config(format!(
            "grid [{}, {}] does not contain the fattened support [{}, {}]",
            grid.x_lo,
            grid.x_hi,
            lo - h,
            hi + h
        )));
    }
    let mut values = vec![0.0; grid.n];
    for (j, v) in values.iter_mut().enumerate() {
        let x = grid.center(j);
        for a in &measure.atoms {
            *v += a.mass * shape.eval(x - a.x, h);
        }
        if let Some(d) = &measure.density {
            for p in d.pieces() {
                let a = p.lo.max(x - h);
                let b = p.hi.min(x + h);
                if b > a {
                    *v += gauss_legendre(|y| p.eval(y) * shape.eval(x - y, h), a, b, 4);
                }
            }
        }
    }
    renormalized(grid, values, measure.mass())
}

/// Debug projection: each atom becomes `M/dx` in its cell; the density is
/// sampled at cell centres. Mass is rescaled as in [`mollify`].
pub fn spike(measure: &MeasureData, grid: &Grid) -> Result<GridFunction> {
    let (lo, hi) = measure.support();
    if !grid.contains(lo, hi) {
        return Err(config("grid does not contain the support of the measure"));
    }
    let dx = grid.dx();
    let mut values: Vec<f64> =
        grid.centers().iter().map(|&x| measure.density.as_ref().map_or(0.0, |d| d.eval(x))).collect();
    for a in &measure.atoms {
        let j = (((a.x - grid.x_lo) / dx).floor() as usize).min(grid.n - 1);
        values[j] += a.mass / dx;
    }
    renormalized(grid, values, measure.mass())
}

fn renormalized(grid: &Grid, values: Vec<f64>, target: f64) -> Result<GridFunction> {
    let g = GridFunction::new(*grid, values)?;
    let m = g.mass();
    if !(m > 0.0) {
        return Err(config("projection has zero discrete mass; refine the grid"));
    }
    let mut out = g.scaled(target / m);
    out.time = Some(0.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_examples() {
        let d = dirac(1.0, 0.0).unwrap();
        assert_eq!(d.atoms, vec![Atom { x: 0.0, mass: 1.0 }]);
        assert_eq!(d.mass(), 1.0);
        let d2 = dirac(2.5, -1.0).unwrap();
        assert_eq!(d2.atoms[0], Atom { x: -1.0, mass: 2.5 });
        assert_eq!(d2.mass(), 2.5);
        assert_eq!(d2.support(), (-1.0, -1.0));
        let two = dirac(1.0, 0.0).unwrap().with_atom(1.0, 1.0).unwrap();
        assert_eq!(two.mass(), 2.0);
        assert!(dirac(0.0, 0.0).is_err());
        assert!(dirac(-1.0, 0.0).is_err());
    }

    #[test]
    fn bump_constant_normalises_kernel() {
        // independent check with a fine midpoint rule
        let n = 200_000;
        let s: f64 = (0..n)
            .map(|i| {
                let x = -1.0 + (i as f64 + 0.5) * 2.0 / n as f64;
                (-1.0 / (1.0 - x * x)).exp()
            })
            .sum::<f64>()
            * 2.0
            / n as f64;
        assert!((s - BUMP_INTEGRAL).abs() < 1e-10);
        for shape in [Mollifier::Bump, Mollifier::RaisedCosine] {
            let h = 0.3;
            let m = gauss_legendre(|x| shape.eval(x, h), -h, h, 64);
            assert!((m - 1.0).abs() < 1e-12, "{shape:?}");
        }
    }

    #[test]
    fn mollified_dirac_has_exact_mass_and_peak_scaling() {
        let grid = Grid::new(-2.0, 2.0, 4000).unwrap();
        let mut peaks = Vec::new();
        for k in 0..4 {
            let h = mollifier_width(0.4, k);
            let g = mollify(&dirac(3.0, 0.0).unwrap(), h, &grid, Mollifier::Bump).unwrap();
            assert!((g.mass() - 3.0).abs() < 1e-13);
            assert!(g.is_nonnegative());
            peaks.push(g.max());
        }
        // peak ~ c/h: doubling ratio close to 2
        for w in peaks.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 0.02);
        }
    }

    #[test]
    fn mollified_indicator_is_close_to_indicator_away_from_edges() {
        let grid = Grid::new(-1.0, 2.0, 6000).unwrap();
        let m = MeasureData::new(vec![], Some(Density::uniform(0.0, 1.0, 1.0).unwrap())).unwrap();
        let h = 0.01;
        let g = mollify(&m, h, &grid, Mollifier::Bump).unwrap();
        for (x, u) in grid.centers().iter().zip(&g.values) {
            let target = if *x > 0.0 && *x < 1.0 { 1.0 } else { 0.0 };
            if (x - 0.0).abs() > h && (x - 1.0).abs() > h {
                assert!((u - target).abs() < 1e-3, "x={x} u={u}");
            }
        }
    }

    #[test]
    fn support_is_fattened_by_h_only() {
        let grid = Grid::new(-1.0, 1.0, 2000).unwrap();
        let h = 0.1;
        let g = mollify(&dirac(1.0, 0.2).unwrap(), h, &grid, Mollifier::Bump).unwrap();
        for (x, u) in grid.centers().iter().zip(&g.values) {
            if (x - 0.2).abs() >= h {
                assert_eq!(*u, 0.0);
            }
        }
    }

    #[test]
    fn grid_must_contain_fattened_support() {
        let grid = Grid::new(-1.0, 1.0, 200).unwrap();
        let r = mollify(&dirac(1.0, 0.95).unwrap(), 0.1, &grid, Mollifier::Bump);
        assert!(matches!(r, Err(crate::Error::Config(_))));
        let r = mollify(&dirac(1.0, 0.0).unwrap(), 0.001, &grid, Mollifier::Bump);
        assert!(matches!(r, Err(crate::Error::Config(_))));
    }

    #[test]
    fn weak_convergence_against_test_functions() {
        let grid = Grid::new(-3.0, 3.0, 24_000).unwrap();
        let measure = MeasureData::new(
            vec![Atom { x: -0.7, mass: 1.5 }, Atom { x: 0.4, mass: 0.5 }],
            Some(Density::new(vec![Piece { lo: 0.5, hi: 1.5, coeffs: vec![0.2, 0.3, -0.2] }]).unwrap()),
        )
        .unwrap();
        let zetas: Vec<Box<dyn Fn(f64) -> f64>> = vec![
            Box::new(|x: f64| (1.0 - x * x / 4.0).max(0.0).powi(2)),
            Box::new(|x: f64| if x.abs() < 2.0 { (2.0 - x.abs()).powi(3) * (1.0 + x) } else { 0.0 }),
        ];
        for zeta in &zetas {
            let exact = measure.integrate(zeta);
            let mut prev = f64::INFINITY;
            for k in 0..5 {
                let h = mollifier_width(0.4, k);
                let g = mollify(&measure, h, &grid, Mollifier::Bump).unwrap();
                let approx: f64 =
                    grid.centers().iter().zip(&g.values).map(|(x, u)| u * zeta(*x)).sum::<f64>() * grid.dx();
                let err = (approx - exact).abs();
                assert!(err < prev + 1e-12, "k={k}: {err} vs {prev}");
                prev = err;
            }
            assert!(prev < 5e-3);
        }
    }

    #[test]
    fn spike_places_mass_in_one_cell() {
        let grid = Grid::new(-1.0, 1.0, 20).unwrap();
        let g = spike(&dirac(2.0, 0.01).unwrap(), &grid).unwrap();
        assert!((g.mass() - 2.0).abs() < 1e-14);
        assert_eq!(g.values.iter().filter(|v| **v > 0.0).count(), 1);
    }

    #[test]
    fn density_validation() {
        assert!(Density::uniform(0.0, 1.0, -1.0).is_err());
        assert!(Density::new(vec![]).is_err());
        let d = Density::from_samples(&[0.0, 1.0, 2.0], &[0.0, 2.0, 0.0]).unwrap();
        assert!((d.mass() - 2.0).abs() < 1e-15);
    }
}
