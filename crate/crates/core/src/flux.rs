//! Flux functions `f` with `f(0) = f'(0) = 0`, the approximating family
//! `Φ_η` used by the p-condition, and grid certification of that condition.
//!
//! Three kinds are supported: a pure power `r^p`, a positive combination
//! `Σ μ_k r^{p_k}` and a tabulated C¹ flux interpolated by a monotone
//! piecewise cubic. The first two carry the canonical family
//! `Φ_η(r) = (r + η²)^{p/2} − η^p` (summed termwise); tabulated fluxes have
//! no canonical family and the p-condition is reported as unsupported.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Relative tolerance used when certifying the p-condition on a grid.
pub const PCOND_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FluxKind {
    PowerLaw {
        p: f64,
    },
    /// `Σ μ_k r^{p_k}`; an empty list is the zero flux.
    PolySum {
        terms: Vec<(f64, f64)>,
    },
    Tabulated(Table),
}

/// Immutable flux description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    kind: FluxKind,
}

/// Cubic Hermite table on `[0, r_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    r: Vec<f64>,
    f: Vec<f64>,
    slopes: Vec<f64>,
    /// `∫_0^{r_k} max(f', 0)` at every knot.
    positive_part: Vec<f64>,
    /// User-declared Hölder exponent of `f'`; diagnostics only.
    pub holder_hint: Option<f64>,
}

impl FluxSpec {
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(domain(format!("power-law exponent must exceed 1, got {p}")));
        }
        Ok(Self { kind: FluxKind::PowerLaw { p } })
    }

    pub fn poly_sum(terms: Vec<(f64, f64)>) -> Result<Self> {
        for &(mu, p) in &terms {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(domain(format!("coefficient must be positive, got {mu}")));
            }
            if !(p.is_finite() && p > 1.0) {
                return Err(domain(format!("exponent must exceed 1, got {p}")));
            }
        }
        Ok(Self { kind: FluxKind::PolySum { terms } })
    }

    /// `f ≡ 0`: the heat equation.
    pub fn zero() -> Self {
        Self { kind: FluxKind::PolySum { terms: Vec::new() } }
    }

    /// Tabulated flux from samples of `f`; slopes come from the
    /// Fritsch–Carlson monotone cubic rule with `f'(0)` clamped to zero.
    pub fn tabulated(r: Vec<f64>, f: Vec<f64>, holder_hint: Option<f64>) -> Result<Self> {
        let slopes = monotone_slopes(&r, &f)?;
        Self::tabulated_with_slopes(r, f, slopes, holder_hint)
    }

    /// Tabulated flux from samples of `f` and `f'`.
    pub fn tabulated_with_slopes(r: Vec<f64>, f: Vec<f64>, slopes: Vec<f64>, holder_hint: Option<f64>) -> Result<Self> {
        validate_table(&r, &f)?;
        if slopes.len() != r.len() || slopes.iter().any(|s| !s.is_finite()) {
            return Err(domain("slope samples must be finite and match the knots"));
        }
        if slopes[0] != 0.0 {
            return Err(domain("tabulated flux must satisfy f'(0) = 0"));
        }
        let mut table = Table { r, f, slopes, positive_part: Vec::new(), holder_hint };
        table.positive_part = table.cumulative_positive_part();
        Ok(Self { kind: FluxKind::Tabulated(table) })
    }

    pub fn kind(&self) -> &FluxKind {
        &self.kind
    }

    /// Short identifier used in provenance records, e.g. `power:2`.
    pub fn id(&self) -> String {
        match &self.kind {
            FluxKind::PowerLaw { p } => format!("power:{p}"),
            FluxKind::PolySum { terms } if terms.is_empty() => "zero".to_string(),
            FluxKind::PolySum { terms } => {
                let parts: Vec<String> = terms.iter().map(|(mu, p)| format!("{mu}@{p}")).collect();
                format!("polysum:{}", parts.join(","))
            }
            FluxKind::Tabulated(t) => format!("table:{}pts:rmax={}", t.r.len(), t.r_max()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.kind, FluxKind::PolySum { terms } if terms.is_empty())
    }

    /// The exponent the flux naturally satisfies the p-condition with:
    /// `p` for a power law, `max p_k` for a sum.
    pub fn natural_exponent(&self) -> Option<f64> {
        match &self.kind {
            FluxKind::PowerLaw { p } => Some(*p),
            FluxKind::PolySum { terms } => terms.iter().map(|t| t.1).reduce(f64::max),
            FluxKind::Tabulated(_) => None,
        }
    }

    /// Whether `f(ξ)/ξ` is C¹ near zero, the regularity needed by the sharp
    /// heat-kernel sup-norm bound. `None` when it cannot be decided.
    pub fn quotient_is_c1(&self) -> Option<bool> {
        match &self.kind {
            FluxKind::PowerLaw { p } => Some(*p >= 2.0),
            FluxKind::PolySum { terms } => Some(terms.iter().all(|t| t.1 >= 2.0)),
            FluxKind::Tabulated(_) => None,
        }
    }

    /// `f(r)` with argument checks.
    pub fn eval(&self, r: f64) -> Result<f64> {
        self.check_arg(r)?;
        Ok(self.value(r))
    }

    /// `f'(r)` with argument checks.
    pub fn eval_deriv(&self, r: f64) -> Result<f64> {
        self.check_arg(r)?;
        Ok(self.slope(r))
    }

    fn check_arg(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) {
            return Err(domain(format!("flux argument must be nonnegative, got {r}")));
        }
        if let FluxKind::Tabulated(t) = &self.kind {
            if r > t.r_max() {
                return Err(Error::Extrapolation { r, r_max: t.r_max() });
            }
        }
        Ok(())
    }

    /// Unchecked `f(r)`. Negative arguments (roundoff undershoots) are
    /// evaluated at zero; tables saturate at `r_max`.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match &self.kind {
            FluxKind::PowerLaw { p } => pow(r, *p),
            FluxKind::PolySum { terms } => terms.iter().map(|(mu, p)| mu * pow(r, *p)).sum(),
            FluxKind::Tabulated(t) => t.value(r),
        }
    }

    /// Unchecked `f'(r)`, same clamping as [`FluxSpec::value`].
    pub fn slope(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match &self.kind {
            FluxKind::PowerLaw { p } => power_slope(r, *p),
            FluxKind::PolySum { terms } => terms.iter().map(|(mu, p)| mu * power_slope(r, *p)).sum(),
            FluxKind::Tabulated(t) => t.slope(r),
        }
    }

    /// Nondecreasing part `f⁺(r) = ∫_0^r max(f', 0)` of the Engquist–Osher splitting.
    pub fn positive_part(&self, r: f64) -> f64 {
        match &self.kind {
            FluxKind::Tabulated(t) => t.positive_part_at(r.max(0.0)),
            _ => self.value(r),
        }
    }

    /// `max |f'|` over `[0, upper]`.
    pub fn max_abs_slope(&self, upper: f64) -> f64 {
        let upper = upper.max(0.0);
        match &self.kind {
            // f' is nonnegative and nondecreasing for every exponent > 1.
            FluxKind::PowerLaw { .. } | FluxKind::PolySum { .. } => self.slope(upper),
            FluxKind::Tabulated(t) => t.max_abs_slope(upper),
        }
    }

    /// The approximating family `Φ_η(r)`.
    pub fn phi_eta(&self, r: f64, eta: f64) -> Result<f64> {
        let terms = self.phi_terms()?;
        check_phi_args(r, eta)?;
        Ok(terms.iter().map(|&(mu, p)| mu * phi_power(r, eta, p)).sum())
    }

    /// `Θ_η(r) = 2 r Φ'_η(r) − Φ_η(r)`.
    pub fn theta_eta(&self, r: f64, eta: f64) -> Result<f64> {
        let terms = self.phi_terms()?;
        check_phi_args(r, eta)?;
        Ok(terms
            .iter()
            .map(|&(mu, p)| {
                let s = r + eta * eta;
                let dphi = 0.5 * p * s.powf(0.5 * p - 1.0);
                mu * (2.0 * r * dphi - phi_power(r, eta, p))
            })
            .sum())
    }

    fn phi_terms(&self) -> Result<Vec<(f64, f64)>> {
        match &self.kind {
            FluxKind::PowerLaw { p } => Ok(vec![(1.0, *p)]),
            FluxKind::PolySum { terms } => Ok(terms.clone()),
            FluxKind::Tabulated(_) => Err(Error::Unsupported("tabulated fluxes have no canonical Φ_η family".into())),
        }
    }
}

/// `r^p` with exact small-integer fast paths; the solvers call this per cell per step.
fn pow(r: f64, p: f64) -> f64 {
    if p == 2.0 {
        r * r
    } else if p == 1.0 {
        r
    } else if p == 3.0 {
        r * r * r
    } else {
        r.powf(p)
    }
}

fn power_slope(r: f64, p: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        p * pow(r, p - 1.0)
    }
}

/// `(r + η²)^{p/2} − η^p` without cancellation for `r ≪ η²`.
fn phi_power(r: f64, eta: f64, p: f64) -> f64 {
    let e2 = eta * eta;
    eta.powf(p) * (0.5 * p * (r / e2).ln_1p()).exp_m1()
}

fn check_phi_args(r: f64, eta: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(domain(format!("r must be nonnegative, got {r}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(domain(format!("η must be positive, got {eta}")));
    }
    Ok(())
}

fn validate_table(r: &[f64], f: &[f64]) -> Result<()> {
    if r.len() < 2 || r.len() != f.len() {
        return Err(domain("a flux table needs at least two (r, f) samples"));
    }
    if r.iter().chain(f).any(|v| !v.is_finite()) {
        return Err(domain("flux table contains non-finite samples"));
    }
    if r[0] != 0.0 || f[0] != 0.0 {
        return Err(domain("flux table must start at r = 0 with f(0) = 0"));
    }
    if r.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("flux table abscissae must be strictly increasing"));
    }
    Ok(())
}

/// Fritsch–Carlson slopes (Fritsch–Butland weighting), with the left slope
/// clamped to zero.
fn monotone_slopes(r: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    validate_table(r, f)?;
    let n = r.len();
    let h: Vec<f64> = r.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (f[k + 1] - f[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    if n == 2 {
        m[1] = delta[0];
    } else {
        // three-point end formula, limited as in PCHIP
        let (h0, h1) = (h[n - 2], h[n - 3]);
        let (d0, d1) = (delta[n - 2], delta[n - 3]);
        let mut end = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if end * d0 <= 0.0 {
            end = 0.0;
        } else if d0 * d1 <= 0.0 && end.abs() > 3.0 * d0.abs() {
            end = 3.0 * d0;
        }
        m[n - 1] = end;
    }
    m[0] = 0.0;
    Ok(m)
}

impl Table {
    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("non-empty table")
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.r, &self.f)
    }

    fn locate(&self, r: f64) -> usize {
        match self.r.binary_search_by(|x| x.partial_cmp(&r).expect("finite knots")) {
            Ok(k) => k.min(self.r.len() - 2),
            Err(k) => k.saturating_sub(1).min(self.r.len() - 2),
        }
    }

    fn value(&self, r: f64) -> f64 {
        let r = r.min(self.r_max());
        let k = self.locate(r);
        let h = self.r[k + 1] - self.r[k];
        let t = (r - self.r[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.f[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.f[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1]
    }

    /// Coefficients of `h·f'` as a quadratic `a t² + b t + c` on interval `k`.
    fn slope_poly(&self, k: usize) -> (f64, f64, f64) {
        let h = self.r[k + 1] - self.r[k];
        let (f0, f1, m0, m1) = (self.f[k], self.f[k + 1], self.slopes[k], self.slopes[k + 1]);
        let a = 6.0 * f0 + 3.0 * h * m0 - 6.0 * f1 + 3.0 * h * m1;
        let b = -6.0 * f0 - 4.0 * h * m0 + 6.0 * f1 - 2.0 * h * m1;
        let c = h * m0;
        (a, b, c)
    }

    fn slope(&self, r: f64) -> f64 {
        let r = r.min(self.r_max());
        let k = self.locate(r);
        let h = self.r[k + 1] - self.r[k];
        let t = (r - self.r[k]) / h;
        let (a, b, c) = self.slope_poly(k);
        (a * t * t + b * t + c) / h
    }

    /// Points in `(0, 1)` where the slope on interval `k` changes sign.
    fn sign_changes(&self, k: usize) -> Vec<f64> {
        let (a, b, c) = self.slope_poly(k);
        let mut roots = Vec::new();
        if a.abs() < 1e-300 {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc > 0.0 {
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                roots.push(q / a);
                if q != 0.0 {
                    roots.push(c / q);
                }
            }
        }
        roots.retain(|t| *t > 0.0 && *t < 1.0);
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots
    }

    /// `∫_{r_k}^{r} max(f', 0)` for `r` inside interval `k`; exact because the
    /// slope has constant sign between consecutive roots.
    fn positive_part_within(&self, k: usize, r: f64) -> f64 {
        let h = self.r[k + 1] - self.r[k];
        let t_end = ((r - self.r[k]) / h).clamp(0.0, 1.0);
        let mut acc = 0.0;
        let mut prev = 0.0;
        let mut cuts = self.sign_changes(k);
        cuts.retain(|t| *t < t_end);
        cuts.push(t_end);
        for t in cuts {
            let df = self.value(self.r[k] + t * h) - self.value(self.r[k] + prev * h);
            acc += df.max(0.0);
            prev = t;
        }
        acc
    }

    fn cumulative_positive_part(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.r.len()];
        for k in 0..self.r.len() - 1 {
            out[k + 1] = out[k] + self.positive_part_within(k, self.r[k + 1]);
        }
        out
    }

    fn positive_part_at(&self, r: f64) -> f64 {
        let r = r.min(self.r_max());
        let k = self.locate(r);
        self.positive_part[k] + self.positive_part_within(k, r)
    }

    fn max_abs_slope(&self, upper: f64) -> f64 {
        let upper = upper.min(self.r_max());
        let last = self.locate(upper);
        let mut best: f64 = 0.0;
        for k in 0..=last {
            let h = self.r[k + 1] - self.r[k];
            let t_hi = if k == last { (upper - self.r[k]) / h } else { 1.0 };
            let (a, b, c) = self.slope_poly(k);
            let q = |t: f64| ((a * t * t + b * t + c) / h).abs();
            best = best.max(q(0.0)).max(q(t_hi));
            if a != 0.0 {
                let tv = -b / (2.0 * a);
                if tv > 0.0 && tv < t_hi {
                    best = best.max(q(tv));
                }
            }
        }
        best
    }
}

/// Parameters of a p-condition certification: `Θ_η(r) ≥ a r^{p/2} − b η^γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCondParams {
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub eta_range: (f64, f64),
    pub r_range: (f64, f64),
}

impl PCondParams {
    /// Default certification window: `r ∈ [1e-6, 1e3]`, `η ∈ [1e-4, 1e-1]`.
    pub fn new(p: f64, a: f64, b: f64, gamma: f64) -> Self {
        Self { p, a, b, gamma, eta_range: (1e-4, 1e-1), r_range: (1e-6, 1e3) }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(domain(format!("p must lie in (1, ∞), got {}", self.p)));
        }
        if !(self.a > 0.0) || !(self.b >= 0.0) || !(self.gamma > 0.0) {
            return Err(domain("require a > 0, b ≥ 0, γ > 0"));
        }
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi > lo && hi.is_finite();
        if !ok(self.eta_range) || !ok(self.r_range) {
            return Err(domain("tested r and η ranges must be positive intervals"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCondReport {
    pub params: PCondParams,
    /// `min [Θ_η(r) − a r^{p/2} + b η^γ]` over the grid.
    pub min_margin: f64,
    pub worst_r: f64,
    pub worst_eta: f64,
    pub pass: bool,
    /// Largest `a` for which the inequality holds with `b = 0` at the
    /// smallest tested `η`.
    pub best_a_without_slack: f64,
    pub n_r: usize,
    pub n_eta: usize,
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Certify the p-condition for user-supplied `(a, b, γ)` on a log-spaced
/// `(r, η)` grid.
pub fn verify_p_condition(flux: &FluxSpec, params: &PCondParams, n_r: usize, n_eta: usize) -> Result<PCondReport> {
    params.validate()?;
    if n_r < 2 || n_eta < 1 {
        return Err(domain("need at least two r points and one η point"));
    }
    let rs = log_grid(params.r_range.0, params.r_range.1, n_r);
    let etas = log_grid(params.eta_range.0, params.eta_range.1, n_eta);
    let half_p = 0.5 * params.p;

    let mut min_margin = f64::INFINITY;
    let (mut worst_r, mut worst_eta) = (f64::NAN, f64::NAN);
    let mut pass = true;
    for &eta in &etas {
        let slack = params.b * eta.powf(params.gamma);
        for &r in &rs {
            let theta = flux.theta_eta(r, eta)?;
            let target = params.a * r.powf(half_p);
            let margin = theta - target + slack;
            let scale = theta.abs() + target + slack;
            if margin < -PCOND_REL_TOL * scale {
                pass = false;
            }
            if margin < min_margin {
                min_margin = margin;
                worst_r = r;
                worst_eta = eta;
            }
        }
    }

    let eta_min = etas[0];
    let mut best_a = f64::INFINITY;
    for &r in &rs {
        best_a = best_a.min(flux.theta_eta(r, eta_min)? / r.powf(half_p));
    }

    Ok(PCondReport {
        params: params.clone(),
        min_margin,
        worst_r,
        worst_eta,
        pass,
        best_a_without_slack: best_a,
        n_r,
        n_eta,
    })
}

/// Slack `(b, γ)` found for a given `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub b: f64,
    pub gamma: f64,
}

/// Find the smallest slack `b` (with `γ = p`, the homogeneity of the
/// deficit under `r = η²ρ`) making the p-condition hold on the grid.
///
/// Returns `None` when the deficit `a r^{p/2} − Θ_η(r)` is still positive at
/// the top of the `r` range: no `r`-uniform slack exists there.
pub fn find_slack(
    flux: &FluxSpec,
    p: f64,
    a: f64,
    r_range: (f64, f64),
    eta_range: (f64, f64),
    n_r: usize,
    n_eta: usize,
) -> Result<Option<Slack>> {
    find_slack_with_gamma(flux, p, a, p, r_range, eta_range, n_r, n_eta)
}

/// [`find_slack`] for a prescribed exponent `γ`. On a bounded `η` range
/// any `γ > 0` admits a finite `b`.
#[allow(clippy::too_many_arguments)]
pub fn find_slack_with_gamma(
    flux: &FluxSpec,
    p: f64,
    a: f64,
    gamma: f64,
    r_range: (f64, f64),
    eta_range: (f64, f64),
    n_r: usize,
    n_eta: usize,
) -> Result<Option<Slack>> {
    PCondParams { p, a, b: 0.0, gamma, eta_range, r_range }.validate()?;
    let rs = log_grid(r_range.0, r_range.1, n_r);
    let etas = log_grid(eta_range.0, eta_range.1, n_eta);
    let mut b: f64 = 0.0;
    for &eta in &etas {
        let scale = eta.powf(gamma);
        for (i, &r) in rs.iter().enumerate() {
            let target = a * r.powf(0.5 * p);
            let theta = flux.theta_eta(r, eta)?;
            let deficit = target - theta;
            if i + 1 == rs.len() && deficit > PCOND_REL_TOL * (target + theta.abs()) {
                return Ok(None);
            }
            b = b.max(deficit / scale);
        }
    }
    // headroom so the certification is not decided by the last ulp
    Ok(Some(Slack { b: b * (1.0 + 1e-9), gamma }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub p: f64,
    pub r_max: f64,
    /// `max |f'(r)| / (1 + r^{p-1})` over the samples.
    pub c_hat: f64,
    pub pass: bool,
}

/// Estimate the constant in `|f'(r)| ≤ C (1 + r^{p-1})` on `n` log-spaced
/// samples of `(0, r_max]`.
pub fn verify_growth(flux: &FluxSpec, p: f64, r_max: f64, n: usize) -> Result<GrowthReport> {
    if !(r_max > 0.0) || n < 2 {
        return Err(domain("growth check needs r_max > 0 and n ≥ 2"));
    }
    let lo = (r_max * 1e-8).min(1e-6);
    let mut c_hat: f64 = 0.0;
    for r in log_grid(lo, r_max, n) {
        c_hat = c_hat.max(flux.eval_deriv(r)?.abs() / (1.0 + r.powf(p - 1.0)));
    }
    Ok(GrowthReport { p, r_max, c_hat, pass: c_hat.is_finite() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn power_law_values() {
        let f = FluxSpec::power(2.0).unwrap();
        assert_eq!(f.eval(3.0).unwrap(), 9.0);
        assert_eq!(f.eval(0.0).unwrap(), 0.0);
        let f3 = FluxSpec::power(3.0).unwrap();
        assert_eq!(f3.eval_deriv(2.0).unwrap(), 12.0);
        let f15 = FluxSpec::power(1.5).unwrap();
        assert_eq!(f15.eval_deriv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn poly_sum_values() {
        let f = FluxSpec::poly_sum(vec![(1.0, 1.5), (2.0, 3.0)]).unwrap();
        assert!(close(f.eval(1.0).unwrap(), 3.0, 1e-15));
        let g = FluxSpec::poly_sum(vec![(1.0, 2.0), (1.0, 4.0)]).unwrap();
        assert!(close(g.eval_deriv(1.0).unwrap(), 6.0, 1e-15));
    }

    #[test]
    fn rejects_bad_construction_and_arguments() {
        assert!(FluxSpec::power(1.0).is_err());
        assert!(FluxSpec::power(0.5).is_err());
        assert!(FluxSpec::poly_sum(vec![(0.0, 2.0)]).is_err());
        assert!(FluxSpec::poly_sum(vec![(1.0, 0.9)]).is_err());
        let f = FluxSpec::power(2.0).unwrap();
        assert!(matches!(f.eval(-1.0), Err(Error::Domain(_))));
        assert!(matches!(f.eval_deriv(-1e-3), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_and_theta_examples() {
        let p2 = FluxSpec::power(2.0).unwrap();
        assert!(close(p2.phi_eta(5.0, 0.3).unwrap(), 5.0, 1e-14));
        assert!(close(p2.theta_eta(4.0, 0.1).unwrap(), 4.0, 1e-14));
        let p4 = FluxSpec::power(4.0).unwrap();
        assert_eq!(p4.phi_eta(0.0, 0.1).unwrap(), 0.0);
        let p3 = FluxSpec::power(3.0).unwrap();
        let expected = 1.25f64.powf(1.5) - 0.125;
        assert!(close(p3.phi_eta(1.0, 0.5).unwrap(), expected, 1e-14));
        assert!(close(expected, 1.27254, 1e-5));
        assert_eq!(p3.theta_eta(0.0, 0.2).unwrap(), 0.0);
        // η → 0⁺ limit is (p − 1) r^{p/2}
        assert!(close(p3.theta_eta(1.0, 1e-6).unwrap(), 2.0, 1e-9));
    }

    #[test]
    fn theta_matches_independent_closed_form() {
        for &p in &[1.25, 1.5, 2.0, 3.0, 4.0] {
            let f = FluxSpec::power(p).unwrap();
            for &eta in &[1e-4, 1e-2, 0.3] {
                for &r in &[1e-6, 1e-3, 0.5, 7.0, 1e3] {
                    let s: f64 = r + eta * eta;
                    let closed = p * r * s.powf(0.5 * p - 1.0) - s.powf(0.5 * p) + eta.powf(p);
                    let got = f.theta_eta(r, eta).unwrap();
                    let scale = (p * r * s.powf(0.5 * p - 1.0)).abs() + s.powf(0.5 * p);
                    assert!((got - closed).abs() <= 1e-13 * scale, "p={p} r={r} η={eta}");
                }
            }
        }
    }

    #[test]
    fn phi_vanishes_at_zero_and_converges_uniformly() {
        for &p in &[1.25, 1.5, 2.0, 3.0, 4.0] {
            let f = FluxSpec::power(p).unwrap();
            let mut prev = f64::INFINITY;
            let mut eta = 0.4;
            for _ in 0..10 {
                assert_eq!(f.phi_eta(0.0, eta).unwrap(), 0.0);
                assert_eq!(f.theta_eta(0.0, eta).unwrap(), 0.0);
                let err = (0..=200)
                    .map(|i| {
                        let r = 2.0 * i as f64 / 200.0;
                        (f.phi_eta(r * r, eta).unwrap() - f.value(r)).abs()
                    })
                    .fold(0.0, f64::max);
                assert!(err < prev || err < 1e-13, "p={p}: {err} !< {prev}");
                prev = err;
                eta *= 0.5;
            }
            assert!(prev < 1e-3);
        }
    }

    #[test]
    fn tabulated_rejects_bad_tables_and_extrapolation() {
        assert!(FluxSpec::tabulated(vec![0.0, 1.0], vec![0.1, 1.0], None).is_err());
        assert!(FluxSpec::tabulated(vec![0.0, 0.0], vec![0.0, 1.0], None).is_err());
        let t = FluxSpec::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0], None).unwrap();
        assert!(matches!(t.eval(2.5), Err(Error::Extrapolation { .. })));
        assert!(matches!(t.phi_eta(1.0, 0.1), Err(Error::Unsupported(_))));
        assert_eq!(t.eval_deriv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn tabulated_reproduces_knots_and_tracks_smooth_flux() {
        let r: Vec<f64> = (0..=200).map(|i| i as f64 * 0.02).collect();
        let f: Vec<f64> = r.iter().map(|x| x * x).collect();
        let t = FluxSpec::tabulated(r.clone(), f.clone(), Some(1.0)).unwrap();
        for (x, y) in r.iter().zip(&f) {
            assert!(close(t.eval(*x).unwrap(), *y, 1e-14));
        }
        for i in 0..390 {
            let x = 0.013 + i as f64 * 0.01;
            assert!((t.eval(x).unwrap() - x * x).abs() < 1e-4);
            assert!((t.eval_deriv(x).unwrap() - 2.0 * x).abs() < 2e-2);
        }
        // nondecreasing data ⇒ the splitting has no negative part
        for i in 0..400 {
            let x = i as f64 * 0.01;
            assert!(close(t.positive_part(x), t.value(x), 1e-12));
        }
    }

    #[test]
    fn tabulated_positive_part_splits_nonmonotone_flux() {
        // f rises to 1 then falls back to 0.5
        let t = FluxSpec::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.5], None).unwrap();
        let plus = t.positive_part(2.0);
        assert!(plus >= t.value(1.0) - 1e-12);
        // f⁺ is nondecreasing, f⁻ = f − f⁺ is nonincreasing
        let mut prev_plus = 0.0;
        let mut prev_minus = 0.0;
        for i in 0..=200 {
            let x = 2.0 * i as f64 / 200.0;
            let p = t.positive_part(x);
            let m = t.value(x) - p;
            assert!(p >= prev_plus - 1e-14);
            assert!(m <= prev_minus + 1e-14);
            prev_plus = p;
            prev_minus = m;
        }
        let sampled = (0..=2000).map(|i| t.slope(2.0 * i as f64 / 2000.0).abs()).fold(0.0, f64::max);
        assert!(t.max_abs_slope(2.0) >= sampled - 1e-12);
    }

    #[test]
    fn derivative_matches_centered_differences() {
        let fluxes = vec![
            FluxSpec::power(1.5).unwrap(),
            FluxSpec::power(3.0).unwrap(),
            FluxSpec::poly_sum(vec![(0.5, 1.25), (2.0, 2.5)]).unwrap(),
        ];
        for f in &fluxes {
            for &r in &[0.01f64, 0.3, 1.0, 4.0, 30.0] {
                let h = 1e-6 * r.max(1.0);
                let fd = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
                let exact = f.slope(r);
                assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{} at {r}", f.id());
            }
        }
    }

    #[test]
    fn p_condition_examples() {
        let p2 = FluxSpec::power(2.0).unwrap();
        let rep = verify_p_condition(&p2, &PCondParams::new(2.0, 1.0, 0.0, 1.0), 200, 20).unwrap();
        assert!(rep.pass);
        assert!(rep.min_margin.abs() < 1e-9);

        let p3 = FluxSpec::power(3.0).unwrap();
        let rep = verify_p_condition(&p3, &PCondParams::new(3.0, 2.0, 0.0, 1.0), 200, 20).unwrap();
        assert!(rep.pass, "{rep:?}");

        let rep = verify_p_condition(&p2, &PCondParams::new(2.0, 1.5, 0.0, 1.0), 200, 20).unwrap();
        assert!(!rep.pass);
        assert!(rep.min_margin < 0.0);
    }

    #[test]
    fn p_condition_with_found_slack_for_half_optimal_a() {
        for &p in &[1.25, 1.5, 2.0, 3.0, 4.0] {
            let f = FluxSpec::power(p).unwrap();
            let a = 0.5 * (p - 1.0);
            let slack = find_slack(&f, p, a, (1e-6, 1e3), (1e-4, 1e-1), 240, 16).unwrap().expect("slack exists");
            let rep = verify_p_condition(&f, &PCondParams::new(p, a, slack.b, slack.gamma), 240, 16).unwrap();
            assert!(rep.pass, "p={p}: {rep:?}");
            // the best slack-free constant approaches p − 1 from the grid
            assert!(rep.best_a_without_slack <= (p - 1.0) * (1.0 + 1e-6), "{}", rep.best_a_without_slack);
            // negative control
            assert!(find_slack(&f, p, p, (1e-6, 1e3), (1e-4, 1e-1), 240, 16).unwrap().is_none());
        }
    }

    #[test]
    fn growth_constant_examples() {
        let p2 = FluxSpec::power(2.0).unwrap();
        let g = verify_growth(&p2, 2.0, 100.0, 400).unwrap();
        // sup over (0, 100] of 2r/(1+r) is attained at r = 100
        assert!(close(g.c_hat, 200.0 / 101.0, 1e-12) && g.c_hat < 2.0 && g.pass);
        let p3 = FluxSpec::power(3.0).unwrap();
        let g3 = verify_growth(&p3, 3.0, 10.0, 400).unwrap();
        assert!(close(g3.c_hat, 300.0 / 101.0, 1e-12));
        let single = FluxSpec::poly_sum(vec![(1.0, 2.0)]).unwrap();
        assert_eq!(verify_growth(&single, 2.0, 100.0, 400).unwrap().c_hat, g.c_hat);
    }
}
