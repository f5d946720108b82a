//! Heat kernel `G_ε(x,t) = (4πεt)^{−1/2} exp(−x²/4εt)`, its derivatives and
//! norms, and convolution with grid functions.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::gauss_legendre;

/// `‖∂_x G‖_1 · (εt)^{1/2} = π^{−1/2}`.
pub const GX_L1_CONST: f64 = 0.564_189_583_547_756_3;
/// `‖∂_x G‖_∞ · εt = (8π)^{−1/2} e^{−1/2}`.
pub const GX_LINF_CONST: f64 = 0.120_985_362_259_571_6;
/// `‖∂_x² G‖_1 · εt = 2 (2πe)^{−1/2}`.
pub const GXX_L1_CONST: f64 = 0.483_941_449_038_286_7;

/// Relative kernel mass allowed outside the truncation radius.
pub const TAIL_TOL: f64 = 1e-14;

/// Above this many cells [`HeatKernel::convolve`] switches to the FFT path.
pub const DIRECT_CONVOLUTION_MAX_N: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelOrder {
    Value,
    Dx,
    Dxx,
    Dt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelNorm {
    GL1,
    GxL1,
    GxLinf,
    GxxL1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernel {
    eps: f64,
}

impl HeatKernel {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(domain(format!("viscosity must be positive, got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn check_t(t: f64) -> Result<()> {
        if t > 0.0 && t.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("time must be positive, got {t}")))
        }
    }

    pub fn eval(&self, x: f64, t: f64, order: KernelOrder) -> Result<f64> {
        Self::check_t(t)?;
        Ok(self.eval_unchecked(x, t, order))
    }

    pub(crate) fn eval_unchecked(&self, x: f64, t: f64, order: KernelOrder) -> f64 {
        let et = self.eps * t;
        let g = (-x * x / (4.0 * et)).exp() / (4.0 * PI * et).sqrt();
        match order {
            KernelOrder::Value => g,
            KernelOrder::Dx => -x / (2.0 * et) * g,
            KernelOrder::Dxx => (x * x / (4.0 * et * et) - 1.0 / (2.0 * et)) * g,
            KernelOrder::Dt => (x * x / (4.0 * self.eps * t * t) - 1.0 / (2.0 * t)) * g,
        }
    }

    /// Exact analytic norms of the kernel and its derivatives.
    pub fn norm(&self, t: f64, which: KernelNorm) -> Result<f64> {
        Self::check_t(t)?;
        let et = self.eps * t;
        Ok(match which {
            KernelNorm::GL1 => 1.0,
            KernelNorm::GxL1 => GX_L1_CONST / et.sqrt(),
            KernelNorm::GxLinf => GX_LINF_CONST / et,
            KernelNorm::GxxL1 => GXX_L1_CONST / et,
        })
    }

    /// `∫ |∂_x G(x + h, t) − ∂_x G(x, t)| dx` by quadrature.
    pub fn shift_difference_l1(&self, t: f64, h: f64) -> Result<f64> {
        Self::check_t(t)?;
        let sigma = (2.0 * self.eps * t).sqrt();
        let half = 12.0 * sigma + h.abs();
        let f = |x: f64| {
            (self.eval_unchecked(x + h, t, KernelOrder::Dx) - self.eval_unchecked(x, t, KernelOrder::Dx)).abs()
        };
        Ok(gauss_legendre(f, -half, half, 4000))
    }

    /// Truncation radius beyond which the Gaussian carries less than
    /// [`TAIL_TOL`] of its mass.
    pub fn truncation_radius(&self, dt: f64) -> f64 {
        let sigma = (2.0 * self.eps * dt).sqrt();
        sigma * (2.0 * (1.0 / TAIL_TOL).ln()).sqrt()
    }

    fn weights(&self, dx: f64, dt: f64, order: u8) -> (Vec<f64>, usize) {
        let m = (self.truncation_radius(dt) / dx).ceil() as usize;
        let kind = if order == 0 { KernelOrder::Value } else { KernelOrder::Dx };
        let mut w: Vec<f64> = (0..=2 * m)
            .map(|i| {
                let x = (i as f64 - m as f64) * dx;
                dx * self.eval_unchecked(x, dt, kind)
            })
            .collect();
        if order == 0 {
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        (w, m)
    }

    fn check_domain(&self, g: &GridFunction, dt: f64) -> Result<()> {
        let reach = (self.truncation_radius(dt) / g.dx()).ceil() as usize;
        let scale = g.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return Ok(());
        }
        let n = g.grid.n;
        let edge = reach.min(n);
        let bad = g.values[..edge].iter().chain(&g.values[n - edge..]).any(|v| v.abs() > TAIL_TOL * scale);
        if bad {
            return Err(Error::DomainTooSmall(format!(
                "data within {:.3e} of the boundary is not negligible for dt = {dt:.3e}",
                self.truncation_radius(dt)
            )));
        }
        Ok(())
    }

    /// Discrete convolution with `G(·, dt)` (order 0) or `∂_x G(·, dt)`
    /// (order 1) on the same grid. Direct summation for small grids, FFT
    /// beyond [`DIRECT_CONVOLUTION_MAX_N`].
    pub fn convolve(&self, g: &GridFunction, dt: f64, order: u8) -> Result<GridFunction> {
        if g.grid.n <= DIRECT_CONVOLUTION_MAX_N {
            self.convolve_direct(g, dt, order)
        } else {
            self.convolve_fft(g, dt, order)
        }
    }

    pub fn convolve_direct(&self, g: &GridFunction, dt: f64, order: u8) -> Result<GridFunction> {
        let (w, m) = self.prepare(g, dt, order)?;
        let n = g.grid.n;
        let mut out = vec![0.0; n];
        for (j, o) in out.iter_mut().enumerate() {
            let lo = j.saturating_sub(m);
            let hi = (j + m).min(n - 1);
            *o = (lo..=hi).map(|i| g.values[i] * w[j + m - i]).sum();
        }
        Ok(self.wrap(g, out, dt))
    }

    pub fn convolve_fft(&self, g: &GridFunction, dt: f64, order: u8) -> Result<GridFunction> {
        let (w, m) = self.prepare(g, dt, order)?;
        let n = g.grid.n;
        let size = (n + 2 * m + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut a = vec![Complex64::new(0.0, 0.0); size];
        let mut b = vec![Complex64::new(0.0, 0.0); size];
        for (i, v) in g.values.iter().enumerate() {
            a[i].re = *v;
        }
        // kernel offset o = i - m stored at index o mod size
        for (i, v) in w.iter().enumerate() {
            let idx = (i as isize - m as isize).rem_euclid(size as isize) as usize;
            b[idx].re = *v;
        }
        fwd.process(&mut a);
        fwd.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= *y;
        }
        inv.process(&mut a);
        let scale = 1.0 / size as f64;
        let out = a[..n].iter().map(|c| c.re * scale).collect();
        Ok(self.wrap(g, out, dt))
    }

    fn prepare(&self, g: &GridFunction, dt: f64, order: u8) -> Result<(Vec<f64>, usize)> {
        Self::check_t(dt)?;
        if order > 1 {
            return Err(domain("convolution order must be 0 or 1"));
        }
        self.check_domain(g, dt)?;
        Ok(self.weights(g.dx(), dt, order))
    }

    fn wrap(&self, g: &GridFunction, values: Vec<f64>, dt: f64) -> GridFunction {
        GridFunction { grid: g.grid, values, time: g.time.map(|t| t + dt) }
    }
}

/// Fourier-space heat propagation on a zero-padded periodic extension of a
/// grid. Used by the Duhamel integrator.
pub struct SpectralPropagator {
    eps: f64,
    size: usize,
    wavenumbers: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl SpectralPropagator {
    /// Periodic extension of `n` cells of width `dx` to at least `pad · n` points.
    pub fn new(eps: f64, n: usize, dx: f64, pad: usize) -> Result<Self> {
        HeatKernel::new(eps)?;
        let size = (n * pad.max(1)).next_power_of_two();
        let length = size as f64 * dx;
        let wavenumbers = (0..size)
            .map(|m| {
                let m = if m <= size / 2 { m as f64 } else { m as f64 - size as f64 };
                2.0 * PI * m / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Ok(Self { eps, size, wavenumbers, fwd, inv, scratch: vec![Complex64::new(0.0, 0.0); scratch_len] })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn forward(&mut self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        buf.resize(self.size, Complex64::new(0.0, 0.0));
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }

    pub fn inverse(&mut self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process_with_scratch(&mut spec, &mut self.scratch);
        let s = 1.0 / self.size as f64;
        spec.into_iter().map(|c| c.re * s).collect()
    }

    /// `e^{−εk²τ}` for each mode.
    pub fn heat_factors(&self, tau: f64) -> Vec<f64> {
        self.wavenumbers.iter().map(|k| (-self.eps * k * k * tau).exp()).collect()
    }

    /// Multiplier of `∫_0^τ ∂_x G(·, s) ds ⋆ (·)`: `ik (1 − e^{−εk²τ}) / (εk²)`.
    /// The Nyquist mode is dropped so real data stay real.
    pub fn duhamel_factors(&self, tau: f64) -> Vec<Complex64> {
        let nyquist = self.size / 2;
        self.wavenumbers
            .iter()
            .enumerate()
            .map(|(m, &k)| {
                if k == 0.0 || m == nyquist {
                    return Complex64::new(0.0, 0.0);
                }
                let a = self.eps * k * k;
                let integral = -(-a * tau).exp_m1() / a;
                Complex64::new(0.0, k * integral)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    /// Composite Simpson rule on a uniform grid; independent of the module's quadrature.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn point_values() {
        let k = HeatKernel::new(1.0).unwrap();
        let t = 1.0 / (4.0 * PI);
        assert!((k.eval(0.0, t, KernelOrder::Value).unwrap() - 1.0).abs() < 1e-15);
        for eps in [0.01, 1.0, 7.0] {
            let k = HeatKernel::new(eps).unwrap();
            assert_eq!(k.eval(0.0, 0.3, KernelOrder::Dx).unwrap(), 0.0);
        }
        for (x, t) in [(1.0, 1.0), (0.3, 0.02), (-2.0, 5.0)] {
            let gt = k.eval(x, t, KernelOrder::Dt).unwrap();
            let gxx = k.eval(x, t, KernelOrder::Dxx).unwrap();
            assert!((gt - gxx).abs() <= 1e-15 * gt.abs().max(1.0));
        }
        assert!(k.eval(0.0, 0.0, KernelOrder::Value).is_err());
        assert!(HeatKernel::new(0.0).is_err());
    }

    #[test]
    fn frozen_constants_match_quadrature_oracle() {
        let k = HeatKernel::new(1.0).unwrap();
        let t = 1.0;
        let span = 40.0;
        let g1 = simpson(|x| k.eval_unchecked(x, t, KernelOrder::Value), -span, span, 400_000);
        let gx1 = simpson(|x| k.eval_unchecked(x, t, KernelOrder::Dx).abs(), -span, span, 400_000);
        let gxx1 = simpson(|x| k.eval_unchecked(x, t, KernelOrder::Dxx).abs(), -span, span, 400_000);
        let gxinf =
            (0..400_000).map(|i| k.eval_unchecked(i as f64 * 1e-5, t, KernelOrder::Dx).abs()).fold(0.0, f64::max);
        assert!((g1 - 1.0).abs() < 1e-10);
        assert!((gx1 - GX_L1_CONST).abs() < 1e-8);
        assert!((gxx1 - GXX_L1_CONST).abs() < 1e-6);
        assert!((gxinf - GX_LINF_CONST).abs() < 1e-10);
        assert!((GX_L1_CONST - 0.564190).abs() < 1e-6);
        assert!((GX_LINF_CONST - 0.120985).abs() < 1e-6);
    }

    #[test]
    fn norms_scale_with_eps_t() {
        for i in 0..9 {
            let et = 10f64.powf(-2.0 + 0.5 * i as f64);
            for eps in [0.01, 1.0] {
                let k = HeatKernel::new(eps).unwrap();
                let t = et / eps;
                let n1 = k.norm(t, KernelNorm::GxL1).unwrap();
                let ni = k.norm(t, KernelNorm::GxLinf).unwrap();
                let n2 = k.norm(t, KernelNorm::GxxL1).unwrap();
                assert!((n1 * et.sqrt() / GX_L1_CONST - 1.0).abs() < 1e-14);
                assert!((ni * et / GX_LINF_CONST - 1.0).abs() < 1e-14);
                assert!((n2 * et / GXX_L1_CONST - 1.0).abs() < 1e-14);
                assert_eq!(k.norm(t, KernelNorm::GL1).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn shift_difference_interpolation_bound() {
        let k = HeatKernel::new(0.5).unwrap();
        for t in [0.1, 1.0] {
            let c0 = 2.0 * k.norm(t, KernelNorm::GxL1).unwrap();
            let c1 = k.norm(t, KernelNorm::GxxL1).unwrap();
            for h in [1e-3, 0.05, 0.5, 3.0] {
                let d = k.shift_difference_l1(t, h).unwrap();
                // α = 0, α = 1 and the α = 1/2 interpolant
                assert!(d <= c0 * (1.0 + 1e-7), "t={t} h={h}: {d} vs {c0}");
                assert!(d <= c1 * h * (1.0 + 1e-7), "t={t} h={h}: {d} vs {}", c1 * h);
                assert!(d <= (c0 * c1 * h).sqrt() * (1.0 + 1e-7));
            }
        }
    }

    fn smooth_bump(grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| (-(x - 0.3) * (x - 0.3) * 4.0).exp() * (1.0 + 0.3 * x.sin()))
    }

    #[test]
    fn convolution_preserves_mass_and_semigroup() {
        let grid = Grid::new(-15.0, 15.0, 1500).unwrap();
        let k = HeatKernel::new(0.7).unwrap();
        let g = smooth_bump(grid);
        let a = k.convolve(&g, 0.3, 0).unwrap();
        assert!((a.mass() - g.mass()).abs() <= 1e-12 * g.mass());
        let ab = k.convolve(&a, 0.5, 0).unwrap();
        let c = k.convolve(&g, 0.8, 0).unwrap();
        let l1: f64 = ab.values.iter().zip(&c.values).map(|(x, y)| (x - y).abs()).sum::<f64>() * grid.dx();
        assert!(l1 <= 1e-8 * c.mass(), "{l1}");
        let d = k.convolve(&g, 0.3, 1).unwrap();
        assert!(d.mass().abs() < 1e-12);
    }

    #[test]
    fn chapman_kolmogorov_on_sampled_kernel() {
        let grid = Grid::new(-20.0, 20.0, 4000).unwrap();
        let k = HeatKernel::new(1.0).unwrap();
        let (s, dt) = (0.2, 0.3);
        let g = GridFunction::from_fn(grid, |x| k.eval_unchecked(x, s, KernelOrder::Value));
        let out = k.convolve(&g, dt, 0).unwrap();
        let err = grid
            .centers()
            .iter()
            .zip(&out.values)
            .map(|(x, v)| (v - k.eval_unchecked(*x, s + dt, KernelOrder::Value)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn direct_and_fft_paths_agree() {
        let grid = Grid::new(-20.0, 20.0, 4096).unwrap();
        let k = HeatKernel::new(0.2).unwrap();
        let g = smooth_bump(grid);
        for order in [0, 1] {
            let a = k.convolve_direct(&g, 0.4, order).unwrap();
            let b = k.convolve_fft(&g, 0.4, order).unwrap();
            let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff <= 1e-10 * scale, "order {order}: {diff}");
        }
    }

    #[test]
    fn refuses_data_near_the_boundary() {
        let grid = Grid::new(-1.0, 1.0, 200).unwrap();
        let k = HeatKernel::new(1.0).unwrap();
        let g = GridFunction::from_fn(grid, |_| 1.0);
        assert!(matches!(k.convolve(&g, 0.1, 0), Err(Error::DomainTooSmall(_))));
    }

    #[test]
    fn spectral_heat_step_matches_closed_form() {
        let grid = Grid::new(-10.0, 10.0, 1024).unwrap();
        let k = HeatKernel::new(0.5).unwrap();
        let g: Vec<f64> = grid.centers().iter().map(|x| k.eval_unchecked(*x, 0.2, KernelOrder::Value)).collect();
        let mut sp = SpectralPropagator::new(0.5, grid.n, grid.dx(), 2).unwrap();
        let mut spec = sp.forward(&g);
        for (c, f) in spec.iter_mut().zip(sp.heat_factors(0.6)) {
            *c *= f;
        }
        let out = sp.inverse(spec);
        let err = grid
            .centers()
            .iter()
            .zip(&out)
            .map(|(x, v)| (v - k.eval_unchecked(*x, 0.8, KernelOrder::Value)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
}
