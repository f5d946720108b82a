//! Composite Gauss–Legendre quadrature.

const NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
#[allow(clippy::excessive_precision)]
const WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// 10-point Gauss–Legendre rule on each of `panels` equal sub-intervals of `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * w;
        let half = 0.5 * w;
        let mut s = 0.0;
        for (x, wt) in NODES.iter().zip(WEIGHTS.iter()) {
            s += wt * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = gauss_legendre(|x| x.powi(19) + 3.0 * x * x, -1.0, 2.0, 1);
        let exact = (2f64.powi(20) - 1.0) / 20.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn gaussian_integral() {
        let v = gauss_legendre(|x| (-x * x).exp(), -8.0, 8.0, 16);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
