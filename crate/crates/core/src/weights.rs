//! Boltzmann weight sequences and the critical offspring law they induce.
//!
//! A weight sequence `q = (q_k)_{k≥1}` defines the generating series
//! `g(x) = Σ_{k≥0} x^k C(2k-1, k-1) q_k` with `q_0 = 1`. The sequence is
//! admissible and critical exactly when the graph of `g` is tangent to the
//! diagonal; the tangency point `Z` then yields the mean-one offspring law
//! `μ(k) = Z^{k-1} C(2k-1, k-1) q_k`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default number of explicitly summed terms for rule-generated tails.
pub const DEFAULT_K_MAX: usize = 200_000;

/// Tolerance on total mass and mean accepted for offspring laws.
pub const LAW_TOL: f64 = 1e-9;

const OVERFLOW: f64 = 1e300;

/// Largest `k` for which `C(2k-1, k-1)` is computed with exact integers.
const EXACT_BINOMIAL_MAX: usize = 30;

fn binomial_exact(k: usize) -> u128 {
    debug_assert!(k >= 1 && k <= EXACT_BINOMIAL_MAX);
    let (n, r) = ((2 * k - 1) as u128, (k - 1) as u128);
    let mut c: u128 = 1;
    for i in 0..r {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// `ln C(2k-1, k-1)`, the log-cardinality of the bridge set of length `k`
/// (with the convention `C(-1, -1) = 1` at `k = 0`).
pub fn ln_bridge_count(k: usize) -> f64 {
    match k {
        0 => 0.0,
        k if k <= EXACT_BINOMIAL_MAX => (binomial_exact(k) as f64).ln(),
        k => {
            let k = k as f64;
            ln_gamma(2.0 * k) - ln_gamma(k) - ln_gamma(k + 1.0)
        }
    }
}

/// `C(2k-1, k-1)` as a float.
pub fn bridge_count(k: usize) -> f64 {
    match k {
        0 => 1.0,
        k if k <= EXACT_BINOMIAL_MAX => binomial_exact(k) as f64,
        k => ln_bridge_count(k).exp(),
    }
}

/// `Σ_{j ≥ a} j^{-s}` for `s > 1`, `a ≥ 1` (Euler–Maclaurin beyond a short direct sum).
pub fn zeta_tail(s: f64, a: u64) -> f64 {
    assert!(s > 1.0, "zeta tail diverges for s <= 1");
    assert!(a >= 1);
    const SWITCH: u64 = 16;
    let mut sum = 0.0;
    let mut j = a;
    while j < SWITCH {
        sum += (j as f64).powf(-s);
        j += 1;
    }
    let x = j as f64;
    let mut em = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    const BERNOULLI: [f64; 4] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    const FACTORIAL: [f64; 4] = [2.0, 24.0, 720.0, 40320.0];
    let mut rising = s;
    let mut power = x.powf(-s - 1.0);
    for p in 0..4 {
        em += BERNOULLI[p] / FACTORIAL[p] * rising * power;
        let p = p as f64;
        rising *= (s + 2.0 * p + 1.0) * (s + 2.0 * p + 2.0);
        power /= x * x;
    }
    sum + em
}

/// Exact power tail `P(ξ ≥ j) = constant · j^{-alpha}` for every `j ≥ start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub start: usize,
    pub alpha: f64,
    pub constant: f64,
}

impl PowerTail {
    fn validate(&self) -> Result<()> {
        if self.start == 0 || !(self.alpha > 0.0) || !(self.constant > 0.0) {
            return Err(Error::InvalidWeights(format!(
                "power tail needs start >= 1, alpha > 0, constant > 0 (got {self:?})"
            )));
        }
        if self.constant * (self.start as f64).powf(-self.alpha) > 1.0 + LAW_TOL {
            return Err(Error::InvalidWeights(
                "power tail carries more than unit mass".into(),
            ));
        }
        Ok(())
    }

    /// `P(ξ ≥ j)`, valid for `j ≥ start`.
    pub fn survival(&self, j: u64) -> f64 {
        self.constant * (j as f64).powf(-self.alpha)
    }

    /// `P(ξ = k)`, valid for `k ≥ start`.
    pub fn mass(&self, k: u64) -> f64 {
        let k = k as f64;
        self.constant * (k.powf(-self.alpha) - (k + 1.0).powf(-self.alpha))
    }

    /// `E[ξ; ξ ≥ start]`, infinite when `alpha ≤ 1`.
    pub fn partial_mean(&self) -> f64 {
        if self.alpha <= 1.0 {
            return f64::INFINITY;
        }
        let s = self.start as f64;
        self.constant * (s.powf(1.0 - self.alpha) + zeta_tail(self.alpha, self.start as u64 + 1))
    }
}

/// Rule-generated weights for `k ≥ start`:
/// `q_k = constant · (k^{-α} - (k+1)^{-α}) · radius^{1-k} / C(2k-1, k-1)`.
///
/// The induced series has radius of convergence `radius`, and when the
/// sequence is critical at `Z = radius` the offspring law has the exact
/// power tail `P(ξ ≥ j) = constant · j^{-α}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTail {
    pub start: usize,
    pub alpha: f64,
    pub constant: f64,
    pub radius: f64,
}

impl WeightTail {
    fn unit(&self, k: usize) -> f64 {
        let k = k as f64;
        k.powf(-self.alpha) - (k + 1.0).powf(-self.alpha)
    }

    /// Sum over `k > last` of the order-`order` derivative terms at `y = 1`,
    /// in units of `constant`.
    fn remainder_at_radius(&self, last: usize, order: u32) -> f64 {
        let a = self.alpha;
        let next = (last + 1) as f64;
        match order {
            0 => next.powf(-a),
            1 if a > 1.0 => next.powf(1.0 - a) + zeta_tail(a, last as u64 + 2),
            _ => f64::INFINITY,
        }
    }
}

/// A Boltzmann weight sequence `(q_k)_{k≥1}`; `q_0 = 1` is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSeq {
    entries: BTreeMap<usize, f64>,
    tail: Option<WeightTail>,
    k_max: usize,
}

impl WeightSeq {
    /// Finitely supported weights given as `(k, q_k)` pairs.
    pub fn finite(entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        Self::build(entries.into_iter().collect(), None)
    }

    /// Finite entries below `tail.start` plus a rule-generated tail.
    pub fn with_tail(
        entries: impl IntoIterator<Item = (usize, f64)>,
        tail: WeightTail,
    ) -> Result<Self> {
        Self::build(entries.into_iter().collect(), Some(tail))
    }

    fn build(entries: BTreeMap<usize, f64>, tail: Option<WeightTail>) -> Result<Self> {
        for (&k, &q) in &entries {
            if k == 0 {
                return Err(Error::InvalidWeights("q_0 = 1 is implicit".into()));
            }
            if !(q >= 0.0) || !q.is_finite() {
                return Err(Error::InvalidWeights(format!("q_{k} = {q} is not a non-negative number")));
            }
        }
        if let Some(t) = &tail {
            if t.start == 0 || !(t.alpha > 0.0) || !(t.constant > 0.0) || !(t.radius > 0.0) {
                return Err(Error::InvalidWeights(format!("malformed tail rule {t:?}")));
            }
            if let Some((&k, _)) = entries.range(t.start..).next() {
                return Err(Error::InvalidWeights(format!(
                    "explicit entry q_{k} overlaps the tail rule starting at {}",
                    t.start
                )));
            }
        }
        Ok(Self { entries, tail, k_max: DEFAULT_K_MAX })
    }

    /// Sets the number of explicitly summed terms used for the tail rule.
    pub fn with_truncation(mut self, k_max: usize) -> Self {
        self.k_max = k_max.max(1);
        self
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn entries(&self) -> &BTreeMap<usize, f64> {
        &self.entries
    }

    pub fn tail(&self) -> Option<&WeightTail> {
        self.tail.as_ref()
    }

    /// `q_k`.
    pub fn q(&self, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some(&q) = self.entries.get(&k) {
            return q;
        }
        match &self.tail {
            Some(t) if k >= t.start => {
                let ln = t.constant.ln() + t.unit(k).ln() + (1.0 - k as f64) * t.radius.ln()
                    - ln_bridge_count(k);
                ln.exp()
            }
            _ => 0.0,
        }
    }

    /// Radius of convergence of `g`; infinite for finitely supported weights.
    pub fn radius(&self) -> f64 {
        self.tail.as_ref().map_or(f64::INFINITY, |t| t.radius)
    }

    /// Whether some `q_k` with `k ≥ 3` is positive (excludes the degenerate
    /// quadrangulation-only and polygon-free families).
    pub fn is_nontrivial(&self) -> bool {
        self.entries.iter().any(|(&k, &q)| k >= 3 && q > 0.0)
            || self.tail.is_some()
    }

    /// The `order`-th derivative of `g` at `x` (orders 0, 1, 2).
    pub fn series(&self, x: f64, order: u32) -> Result<SeriesValue> {
        if !(x >= 0.0) {
            return Err(Error::Precondition(format!("series evaluated at x = {x} < 0")));
        }
        let d = order as usize;
        let mut value = if d == 0 { 1.0 } else { 0.0 };
        for (&k, &q) in &self.entries {
            if k < d || q == 0.0 {
                continue;
            }
            let falling: f64 = (0..d).map(|i| (k - i) as f64).product();
            let term = if k == d {
                bridge_count(k) * q * falling
            } else if x == 0.0 {
                0.0
            } else {
                (ln_bridge_count(k) + q.ln() + falling.ln() + (k - d) as f64 * x.ln()).exp()
            };
            value += term;
            if !(value <= OVERFLOW) {
                return Err(Error::BeyondRadius { x });
            }
        }
        let mut bound = 0.0;
        if let Some(t) = &self.tail {
            if x > t.radius * (1.0 + 1e-12) {
                return Err(Error::BeyondRadius { x });
            }
            let y = (x / t.radius).min(1.0);
            let scale = t.radius.powi(1 - order as i32) * t.constant;
            let mut partial = 0.0;
            let mut last = t.start - 1;
            let mut y_pow = if t.start >= d { y.powi((t.start - d) as i32) } else { 0.0 };
            for k in t.start..=t.k_max_for(self.k_max) {
                let falling: f64 = (0..d).map(|i| (k as f64) - i as f64).product();
                partial += t.unit(k) * falling * y_pow;
                last = k;
                if k + 1 > d {
                    y_pow *= y;
                }
                if y < 1.0 && y_pow < 1e-30 {
                    break;
                }
            }
            value += scale * partial;
            let rem = t.remainder_at_radius(last, order);
            if y >= 1.0 {
                value += scale * rem;
                bound = scale * partial.abs() * f64::EPSILON * 4.0;
            } else {
                let geometric = if rem.is_finite() {
                    rem * y.powi((last + 1).saturating_sub(d) as i32)
                } else {
                    t.alpha * y.powi(last.saturating_sub(1) as i32) / (1.0 - y)
                };
                bound = scale * geometric;
            }
            if !value.is_finite() && order < 2 {
                return Err(Error::BeyondRadius { x });
            }
        }
        Ok(SeriesValue { value, error_bound: bound })
    }
}

impl WeightTail {
    fn k_max_for(&self, k_max: usize) -> usize {
        self.start.max(k_max)
    }
}

/// A truncated series value together with a bound on the neglected terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
}

/// `g_q(x)`.
pub fn eval_g(q: &WeightSeq, x: f64) -> Result<SeriesValue> {
    q.series(x, 0)
}

/// `g_q'(x)`.
pub fn eval_g_prime(q: &WeightSeq, x: f64) -> Result<SeriesValue> {
    q.series(x, 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Critical,
    SubcriticalAdmissible,
    NonAdmissible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub classification: Classification,
    /// The (smallest) fixed point of `g`, when one exists.
    pub z: Option<f64>,
    /// `|g(Z) - Z|`.
    pub fixed_point_residual: f64,
    /// `|g'(Z) - 1|`.
    pub slope_residual: f64,
    /// Truncation bound of the series evaluations at `Z`.
    pub truncation_bound: f64,
    pub tolerance: f64,
}

impl CriticalityReport {
    pub fn is_critical(&self) -> bool {
        self.classification == Classification::Critical
    }
}

/// Decides admissibility and criticality of `q` from the fixed points of `g`.
///
/// `h(x) = g(x) - x` is convex with `h(0) = 1`, so its minimiser `x*` is the
/// root of `g' = 1` (or the radius of convergence when `g' ≤ 1` there). The
/// sequence is critical when `h(x*)` vanishes, subcritical when `h(x*) < 0`
/// (the smaller root is reported), and non-admissible otherwise.
pub fn classify(q: &WeightSeq, tol: f64) -> Result<CriticalityReport> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let g = |x: f64| q.series(x, 0).map(|v| v.value);
    let gp = |x: f64| q.series(x, 1).map(|v| v.value);
    let gpp = |x: f64| q.series(x, 2).map(|v| v.value);

    let radius = q.radius();
    let minimiser = if radius.is_finite() && gp(radius)? <= 1.0 + tol {
        Some(radius)
    } else {
        // Bracket the root of g' = 1.
        let mut hi = if radius.is_finite() { radius } else { 1.0 };
        let mut found = radius.is_finite();
        if !found {
            for _ in 0..1100 {
                match gp(hi) {
                    Ok(v) if v > 1.0 => {
                        found = true;
                        break;
                    }
                    Ok(_) => hi *= 2.0,
                    Err(Error::BeyondRadius { .. }) => {
                        found = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if !found {
            None
        } else {
            let mut lo = 0.0;
            for _ in 0..2000 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                match gp(mid) {
                    Ok(v) if v > 1.0 => hi = mid,
                    Ok(_) => lo = mid,
                    Err(Error::BeyondRadius { .. }) => hi = mid,
                    Err(e) => return Err(e),
                }
                if hi - lo <= 1e-12 * hi.max(1.0) {
                    break;
                }
            }
            let mut x = 0.5 * (lo + hi);
            // Newton polish on g'(x) = 1, kept inside the bracket.
            for _ in 0..8 {
                let (Ok(d1), Ok(d2)) = (gp(x), gpp(x)) else { break };
                if !(d2 > 0.0) || !d2.is_finite() {
                    break;
                }
                let next = x - (d1 - 1.0) / d2;
                if !(next >= lo && next <= hi) || next == x {
                    break;
                }
                x = next;
            }
            Some(x)
        }
    };

    let non_admissible = |residual: f64| CriticalityReport {
        classification: Classification::NonAdmissible,
        z: None,
        fixed_point_residual: residual,
        slope_residual: f64::NAN,
        truncation_bound: 0.0,
        tolerance: tol,
    };

    let Some(xs) = minimiser else {
        return Ok(non_admissible(f64::NAN));
    };
    let h_min = g(xs)? - xs;
    if h_min > tol {
        return Ok(non_admissible(h_min));
    }
    let slope_at_min = gp(xs)?;
    let (classification, z) = if h_min.abs() <= tol && (slope_at_min - 1.0).abs() <= tol {
        (Classification::Critical, xs)
    } else {
        // Smaller root of h on [0, x*].
        let (mut lo, mut hi) = (0.0, xs);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid)? - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..8 {
            let h = g(x)? - x;
            let dh = gp(x)? - 1.0;
            if dh >= 0.0 {
                break;
            }
            let next = x - h / dh;
            if !(next >= lo && next <= hi) || next == x {
                break;
            }
            x = next;
        }
        (Classification::SubcriticalAdmissible, x)
    };
    let gz = q.series(z, 0)?;
    let gpz = q.series(z, 1)?;
    let truncation_bound = gz.error_bound.max(gpz.error_bound);
    if truncation_bound > tol {
        return Err(Error::Truncation { bound: truncation_bound, tol });
    }
    Ok(CriticalityReport {
        classification,
        z: Some(z),
        fixed_point_residual: (gz.value - z).abs(),
        slope_residual: (gpz.value - 1.0).abs(),
        truncation_bound,
        tolerance: tol,
    })
}

/// Offspring distribution on `ℤ₊`: an explicit table on `0..body.len()`,
/// optionally continued by an exact power tail.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringLaw {
    body: Vec<f64>,
    tail: Option<PowerTail>,
    mean: f64,
    variance: f64,
    alpha: f64,
}

impl OffspringLaw {
    /// Finitely supported law from its probability table.
    pub fn from_pmf(mut pmf: Vec<f64>) -> Result<Self> {
        while pmf.len() > 1 && pmf.last() == Some(&0.0) {
            pmf.pop();
        }
        check_masses(&pmf)?;
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > LAW_TOL {
            return Err(Error::InconsistentWeights(format!("total mass {total} != 1")));
        }
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let second: f64 = pmf.iter().enumerate().map(|(k, p)| (k * k) as f64 * p).sum();
        Ok(Self { body: pmf, tail: None, mean, variance: second - mean * mean, alpha: 2.0 })
    }

    /// Law equal to `body` on `0..tail.start` and to the power tail beyond.
    pub fn with_power_tail(mut body: Vec<f64>, tail: PowerTail) -> Result<Self> {
        tail.validate()?;
        if body.len() > tail.start {
            return Err(Error::InvalidInput("body overlaps the power tail".into()));
        }
        body.resize(tail.start, 0.0);
        check_masses(&body)?;
        let total: f64 = body.iter().sum::<f64>() + tail.survival(tail.start as u64);
        if (total - 1.0).abs() > LAW_TOL {
            return Err(Error::InconsistentWeights(format!("total mass {total} != 1")));
        }
        let mean = body.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>()
            + tail.partial_mean();
        let alpha = tail.alpha;
        Ok(Self { body, tail: Some(tail), mean, variance: f64::INFINITY, alpha })
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match (self.body.get(k as usize), &self.tail) {
            (Some(&p), _) => p,
            (None, Some(t)) => t.mass(k),
            (None, None) => 0.0,
        }
    }

    /// `P(ξ ≥ j)`.
    pub fn survival(&self, j: u64) -> f64 {
        match &self.tail {
            Some(t) if j as usize >= t.start => t.survival(j),
            tail => {
                let below: f64 = self.body.iter().take(j as usize).sum();
                let beyond = tail.as_ref().map_or(0.0, |t| t.survival(t.start as u64));
                let body_rest: f64 = self.body.iter().skip(j as usize).sum();
                // Prefer the direct sum of the remaining masses; it is exact for small tails.
                if tail.is_some() || body_rest > 0.5 {
                    body_rest + beyond
                } else {
                    (1.0 - below).max(0.0).min(body_rest + beyond).max(body_rest)
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Variance, infinite for power tails with index at most 2.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Stable index of the law's domain of attraction.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn body(&self) -> &[f64] {
        &self.body
    }

    pub fn tail(&self) -> Option<&PowerTail> {
        self.tail.as_ref()
    }

    /// Largest point of the support, if finite.
    pub fn support_max(&self) -> Option<u64> {
        if self.tail.is_some() {
            return None;
        }
        self.body.iter().rposition(|&p| p > 0.0).map(|k| k as u64)
    }

    /// `(offset, span)` such that the support lies in `offset + span·ℤ`.
    pub fn lattice(&self) -> (u64, u64) {
        if self.tail.is_some() {
            let offset = self.body.iter().position(|&p| p > 0.0).unwrap_or(0) as u64;
            return (offset, 1);
        }
        let mut support = self.body.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(k, _)| k as u64);
        let offset = support.next().unwrap_or(0);
        let span = support.fold(0, |g, k| gcd(g, k - offset));
        (offset, span)
    }

    /// `Var(ξ · 1{ξ ≤ x})`.
    pub fn truncated_variance(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let top = x.floor() as u64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for k in 1..=top {
            let p = self.pmf(k);
            m1 += k as f64 * p;
            m2 += (k as f64) * (k as f64) * p;
        }
        m2 - m1 * m1
    }

    pub fn sampler(&self) -> OffspringSampler {
        OffspringSampler::new(self)
    }
}

fn check_masses(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidInput("empty probability table".into()));
    }
    if let Some((k, p)) = pmf.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidInput(format!("mass at {k} is {p}")));
    }
    Ok(())
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// `μ(k) = Z^{k-1} C(2k-1, k-1) q_k` for a critical sequence.
pub fn offspring_law(q: &WeightSeq, report: &CriticalityReport) -> Result<OffspringLaw> {
    if !report.is_critical() {
        return Err(Error::NotCritical(report.classification));
    }
    let z = report.z.expect("critical report carries Z");
    let ln_z = z.ln();
    let mass = |k: usize, qk: f64| -> f64 {
        if qk == 0.0 {
            0.0
        } else {
            ((k as f64 - 1.0) * ln_z + ln_bridge_count(k) + qk.ln()).exp()
        }
    };
    let explicit_top = q.entries().keys().next_back().copied().unwrap_or(0);
    let mut body = vec![0.0; explicit_top + 1];
    body[0] = 1.0 / z;
    for (&k, &qk) in q.entries() {
        body[k] = mass(k, qk);
    }
    let law = match q.tail() {
        None => OffspringLaw::from_pmf(body),
        Some(t) if (z - t.radius).abs() <= LAW_TOL * t.radius => {
            let tail = PowerTail { start: t.start, alpha: t.alpha, constant: t.constant };
            OffspringLaw::with_power_tail(body, tail)
        }
        Some(t) => {
            // Critical strictly inside the radius: geometrically damped tail.
            body.resize(t.start, 0.0);
            let ratio = z / t.radius;
            let mut k = t.start;
            loop {
                let m = t.constant * t.unit(k) * ratio.powi(k as i32 - 1);
                body.push(m);
                if m < 1e-20 || k > q.k_max() {
                    break;
                }
                k += 1;
            }
            OffspringLaw::from_pmf(body)
        }
    };
    let law = law.map_err(|e| match e {
        Error::InconsistentWeights(msg) => Error::InconsistentWeights(msg),
        other => other,
    })?;
    if (law.mean() - 1.0).abs() > LAW_TOL {
        return Err(Error::InconsistentWeights(format!("mean {} != 1", law.mean())));
    }
    Ok(law)
}

/// Inverse of [`offspring_law`]: `q_k = μ(k) Z^{1-k} / C(2k-1, k-1)`.
///
/// `Z` must equal `1/μ(0)`, the only value for which `Z` is a fixed point of
/// the resulting series.
pub fn weights_from_offspring(law: &OffspringLaw, z: f64) -> Result<WeightSeq> {
    if (law.mean() - 1.0).abs() > LAW_TOL {
        return Err(Error::Precondition(format!("offspring mean {} != 1", law.mean())));
    }
    if !(z > 1.0) {
        return Err(Error::Precondition(format!("Z = {z} must exceed 1")));
    }
    if (z * law.pmf(0) - 1.0).abs() > LAW_TOL {
        return Err(Error::Precondition(format!(
            "Z = {z} is not a fixed point; it must equal 1/μ(0) = {}",
            1.0 / law.pmf(0)
        )));
    }
    let ln_z = z.ln();
    let entries = law
        .body()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &p)| p > 0.0)
        .map(|(k, &p)| (k, (p.ln() + (1.0 - k as f64) * ln_z - ln_bridge_count(k)).exp()));
    match law.tail() {
        None => WeightSeq::finite(entries),
        Some(t) => WeightSeq::with_tail(
            entries,
            WeightTail { start: t.start, alpha: t.alpha, constant: t.constant, radius: z },
        ),
    }
}

/// Mean-one offspring law in the domain of attraction of an `alpha`-stable law.
///
/// For `alpha < 2` the law has the exact tail `P(ξ ≥ j) = c j^{-alpha}` for
/// `j ≥ cutoff`, no mass on `1..cutoff`, and `μ(0)` absorbs the rest; `c`
/// is fixed by the mean constraint. For `alpha = 2` the law is supported on
/// `{0} ∪ [2, cutoff]` with `μ(k) ∝ k^{-3}`; `cutoff = 2` gives the
/// quadrangulation law `μ(0) = μ(2) = 1/2`.
pub fn make_stable_offspring(alpha: f64, cutoff: usize) -> Result<OffspringLaw> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} must lie in (1, 2]")));
    }
    if alpha == 2.0 {
        if cutoff < 2 {
            return Err(Error::Precondition("finite-variance law needs cutoff >= 2".into()));
        }
        let inv_sq: f64 = (2..=cutoff).map(|k| (k as f64).powi(-2)).sum();
        let c = 1.0 / inv_sq;
        let mut pmf = vec![0.0; cutoff + 1];
        for (k, p) in pmf.iter_mut().enumerate().skip(2) {
            *p = c * (k as f64).powi(-3);
        }
        pmf[0] = 1.0 - pmf.iter().sum::<f64>();
        if pmf[0] <= 0.0 {
            return Err(Error::Precondition("mean cannot be tuned to 1".into()));
        }
        return OffspringLaw::from_pmf(pmf);
    }
    if cutoff < 1 {
        return Err(Error::Precondition("tail must start at j >= 1".into()));
    }
    let j0 = cutoff as f64;
    let c = 1.0 / (j0.powf(1.0 - alpha) + zeta_tail(alpha, cutoff as u64 + 1));
    let tail = PowerTail { start: cutoff, alpha, constant: c };
    let mut body = vec![0.0; cutoff];
    body[0] = 1.0 - tail.survival(cutoff as u64);
    if body[0] <= 0.0 {
        return Err(Error::Precondition("mean cannot be tuned to 1".into()));
    }
    OffspringLaw::with_power_tail(body, tail)
}

/// Normalising sequence `B_n` of the centred sums of i.i.d. offspring variables.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalizer {
    /// `B_n = (n σ² / 2)^{1/2}`.
    FiniteVariance { sigma2: f64 },
    /// `B_n = inf{x : P(ξ > x) ≤ 1/n}`; of order `n^{1/α}` with a
    /// convention-dependent constant.
    TailQuantile { alpha: f64, law: OffspringLaw },
}

impl Normalizer {
    pub fn alpha(&self) -> f64 {
        match self {
            Normalizer::FiniteVariance { .. } => 2.0,
            Normalizer::TailQuantile { alpha, .. } => *alpha,
        }
    }

    /// `B_n`, with `B_0 = 0`.
    pub fn b(&self, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self {
            Normalizer::FiniteVariance { sigma2 } => (n as f64 * sigma2 / 2.0).sqrt(),
            Normalizer::TailQuantile { law, .. } => {
                let level = 1.0 / n as f64;
                let start = law.tail().map_or(law.body().len(), |t| t.start) as u64;
                for j in 1..=start {
                    if law.survival(j) <= level {
                        return (j - 1) as f64;
                    }
                }
                let t = law.tail().expect("quantile rule needs a tail");
                let mut x = ((t.constant * n as f64).powf(1.0 / t.alpha).ceil() as u64).max(start) - 1;
                while x > start && t.survival(x) <= level {
                    x -= 1;
                }
                while t.survival(x + 1) > level {
                    x += 1;
                }
                x as f64
            }
        }
    }
}

pub fn normalizer(law: &OffspringLaw) -> Normalizer {
    if law.variance().is_finite() {
        Normalizer::FiniteVariance { sigma2: law.variance() }
    } else {
        Normalizer::TailQuantile { alpha: law.alpha(), law: law.clone() }
    }
}

/// Exact sampler for an [`OffspringLaw`]: alias table on the body, inverse
/// transform on the power tail.
#[derive(Clone, Debug)]
pub struct OffspringSampler {
    body: WeightedAliasIndex<f64>,
    tail: Option<PowerTail>,
    tail_mass: f64,
}

impl OffspringSampler {
    pub fn new(law: &OffspringLaw) -> Self {
        let tail_mass = law.tail().map_or(0.0, |t| t.survival(t.start as u64));
        let body = WeightedAliasIndex::new(law.body().to_vec())
            .expect("offspring law has positive body mass");
        Self { body, tail: law.tail().cloned(), tail_mass }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if let Some(t) = &self.tail {
            let u: f64 = rng.random();
            if u < self.tail_mass {
                if u == 0.0 {
                    return u64::MAX;
                }
                // P(ξ ≥ j | tail) = P(u ≤ c j^{-α}) / P(tail).
                let x = (t.constant / u).powf(1.0 / t.alpha).floor();
                return if x >= u64::MAX as f64 { u64::MAX } else { (x as u64).max(t.start as u64) };
            }
        }
        self.body.sample(rng) as u64
    }
}
