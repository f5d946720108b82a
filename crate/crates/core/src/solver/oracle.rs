//! Closed-form source solutions: the heat kernel, the viscous Burgers
//! source solution for `f(u) = u²` and its inviscid N-wave limit.

use std::f64::consts::PI;

use libm::erfc;

use crate::error::{domain, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernel::{HeatKernel, KernelOrder};

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be positive, got {t}")))
    }
}

/// `M · G_ε(x, t)`.
pub fn heat(mass: f64, eps: f64, x: f64, t: f64) -> Result<f64> {
    Ok(mass * HeatKernel::new(eps)?.eval(x, t, KernelOrder::Value)?)
}

/// Scaled complementary error function `e^{z²} erfc(z)` for `z ≥ 0`.
pub fn erfcx(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z < 26.0 {
        erfc(z) * (z * z).exp()
    } else {
        let w = 1.0 / (z * z);
        (1.0 - 0.5 * w * (1.0 - 1.5 * w * (1.0 - 2.5 * w * (1.0 - 3.5 * w)))) / (z * PI.sqrt())
    }
}

/// Source solution of `u_t + (u²)_x = ε u_xx` with data `M δ_0`:
/// with `z = x/√(4εt)` and `R = M/ε`,
/// `u = √(ε/(πt)) (1 − e^{−R}) e^{−z²} / (erfc(z) + e^{−R} erfc(−z))`.
pub fn burgers_viscous(mass: f64, eps: f64, x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    if !(eps > 0.0) {
        return Err(domain(format!("viscosity must be positive, got {eps}")));
    }
    if !(mass >= 0.0) {
        return Err(domain(format!("mass must be nonnegative, got {mass}")));
    }
    let r = mass / eps;
    let z = x / (4.0 * eps * t).sqrt();
    let pref = (eps / (PI * t)).sqrt() * (-(-r).exp_m1());
    let v = if z >= 0.0 {
        // divide through by e^{−z²}; the second term may overflow to +∞, giving 0
        pref / (erfcx(z) + erfc(-z) * (z * z - r).exp())
    } else {
        pref * (-z * z).exp() / (erfc(z) + (-r).exp() * erfc(-z))
    };
    Ok(v)
}

/// Inviscid N-wave `x/(2t)` on `(0, 2√(Mt))`, zero elsewhere.
pub fn burgers_inviscid(mass: f64, x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    let s = 2.0 * (mass * t).sqrt();
    Ok(if x > 0.0 && x < s { x / (2.0 * t) } else { 0.0 })
}

/// Inviscid source solution of `u_t + (u^p)_x = 0`: `u = (x/(pt))^{1/(p−1)}`
/// on `(0, s(t))` with `s = p t^{1/p} (M/(p−1))^{(p−1)/p}` fixed by the mass.
pub fn power_inviscid(mass: f64, p: f64, x: f64, t: f64) -> Result<f64> {
    check_t(t)?;
    let s = power_front(mass, p, t);
    Ok(if x > 0.0 && x < s { (x / (p * t)).powf(1.0 / (p - 1.0)) } else { 0.0 })
}

/// Front position of [`power_inviscid`].
pub fn power_front(mass: f64, p: f64, t: f64) -> f64 {
    p * t.powf(1.0 / p) * (mass / (p - 1.0)).powf((p - 1.0) / p)
}

/// Cell-centre samples of `f(x)` on `grid`, stamped with time `t`.
pub fn sample(grid: Grid, t: f64, f: impl Fn(f64) -> Result<f64>) -> Result<GridFunction> {
    let values = grid.centers().into_iter().map(f).collect::<Result<Vec<_>>>()?;
    Ok(GridFunction::new(grid, values)?.at_time(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn heat_examples() {
        assert!((heat(1.0, 1.0, 0.0, 1.0 / (4.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
        let a = heat(1.0, 0.3, 0.7, 2.0).unwrap();
        assert!((heat(2.0, 0.3, 0.7, 2.0).unwrap() - 2.0 * a).abs() < 1e-16);
        assert!(heat(1.0, 1.0, 0.0, 0.0).is_err());
        // peak ∝ t^{-1/2}
        let r = heat(1.0, 1.0, 0.0, 4.0).unwrap() / heat(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn erfcx_is_continuous_at_the_switch() {
        let a = erfc(25.999) * (25.999f64 * 25.999).exp();
        let b = erfcx(26.0);
        assert!((a / b - 1.0).abs() < 1e-3 * 0.01 + 1e-4);
        assert!((erfcx(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn viscous_burgers_mass_is_m() {
        for &(m, eps, t) in &[(1.0f64, 0.1, 1.0f64), (1.0, 0.01, 0.5), (3.0, 1.0, 0.2), (0.5, 0.05, 2.0)] {
            let span = 2.0 * (m * t).sqrt() + 30.0 * (eps * t).sqrt();
            let mass = gauss_legendre(|x| burgers_viscous(m, eps, x, t).unwrap(), -span, span, 4000);
            assert!((mass / m - 1.0).abs() < 1e-9, "m={m} eps={eps} t={t}: {mass}");
        }
    }

    #[test]
    fn viscous_burgers_satisfies_the_pde() {
        let (m, eps) = (1.0, 0.1);
        let u = |x: f64, t: f64| burgers_viscous(m, eps, x, t).unwrap();
        let (hx, ht) = (2e-4, 2e-5);
        let mut worst: f64 = 0.0;
        for i in 0..60 {
            let x = -2.0 + 0.08 * i as f64;
            for &t in &[0.3, 1.0] {
                let ut = (u(x, t + ht) - u(x, t - ht)) / (2.0 * ht);
                let fx = (u(x + hx, t).powi(2) - u(x - hx, t).powi(2)) / (2.0 * hx);
                let uxx = (u(x + hx, t) - 2.0 * u(x, t) + u(x - hx, t)) / (hx * hx);
                worst = worst.max((ut + fx - eps * uxx).abs());
            }
        }
        assert!(worst < 2e-5, "{worst}");
    }

    #[test]
    fn viscous_burgers_frozen_values() {
        // 40-digit evaluations of −ε ∂ₓ log w with w the heat evolution of
        // the step 1 → e^{−M/ε}
        #[allow(clippy::excessive_precision)]
        let cases = [
            ((1.0, 0.1, 0.5, 1.0), 0.362_221_566_385_093_87),
            ((1.0, 0.1, -0.3, 1.0), 0.095_119_110_593_875_215),
            ((1.0, 0.01, 1.0, 1.0), 0.509_635_002_743_184_08),
            ((2.0, 0.05, 1.5, 0.5), 1.531_993_328_206_580_1),
            ((1.0, 0.1, 2.5, 1.0), 3.216_328_562_829_462e-4),
        ];
        for ((m, eps, x, t), want) in cases {
            let got = burgers_viscous(m, eps, x, t).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "({m}, {eps}, {x}, {t}): {got} vs {want}");
        }
    }

    #[test]
    fn small_mass_limit_is_the_heat_kernel() {
        let (eps, t) = (0.2, 1.0);
        for &x in &[-1.0, 0.0, 0.4, 2.0] {
            let m = 1e-7;
            let b = burgers_viscous(m, eps, x, t).unwrap();
            let h = heat(m, eps, x, t).unwrap();
            assert!((b / h - 1.0).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn vanishing_viscosity_recovers_the_n_wave() {
        let (m, t) = (1.0, 1.0);
        for &x in &[0.3, 1.0, 1.7] {
            let target = burgers_inviscid(m, x, t).unwrap();
            let e1 = (burgers_viscous(m, 1e-2, x, t).unwrap() - target).abs();
            let e2 = (burgers_viscous(m, 1e-3, x, t).unwrap() - target).abs();
            assert!(e2 < e1 && e2 < 2e-2, "x={x}: {e1} {e2}");
        }
        // far tails are finite and vanish
        assert_eq!(burgers_viscous(m, 1e-3, 50.0, t).unwrap(), 0.0);
        assert!(burgers_viscous(m, 1e-3, -50.0, t).unwrap() >= 0.0);
    }

    #[test]
    fn n_wave_examples() {
        assert_eq!(burgers_inviscid(1.0, 2.5, 1.0).unwrap(), 0.0);
        assert!((burgers_inviscid(1.0, 2.0 - 1e-12, 1.0).unwrap() - 1.0).abs() < 1e-11);
        assert_eq!(burgers_inviscid(1.0, -0.1, 1.0).unwrap(), 0.0);
        for &(m, t) in &[(1.0f64, 1.0f64), (2.0, 0.3)] {
            let s = 2.0 * (m * t).sqrt();
            let mass = gauss_legendre(|x| burgers_inviscid(m, x, t).unwrap(), 0.0, s, 10);
            assert!((mass - m).abs() < 1e-12);
        }
        // the general power-law profile reduces to the N-wave at p = 2
        for &x in &[0.1, 1.0, 1.9] {
            assert!((power_inviscid(1.0, 2.0, x, 1.0).unwrap() - burgers_inviscid(1.0, x, 1.0).unwrap()).abs() < 1e-14);
        }
        for &p in &[1.5, 3.0] {
            let s = power_front(1.0, p, 0.7);
            let mass = gauss_legendre(|x| power_inviscid(1.0, p, x, 0.7).unwrap(), 0.0, s, 400);
            assert!((mass - 1.0).abs() < 1e-6, "p={p}: {mass}");
        }
    }
}
