//! Reference samplers for the continuum limits: the Brownian excursion with
//! its snake head when `α = 2`, and a random-walk proxy with the jump-series
//! label field when `α < 2`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trees::{height_process, lukasiewicz, sample_conditioned, ConditioningSpec, OffspringSet};
use crate::weights::{normalizer, OffspringLaw};

/// Largest grid the dense factorisation accepts.
pub const MAX_DENSE_GRID: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactGaussian,
    WalkProxy,
}

/// Paths sampled on the uniform grid `{0, 1/m, …, 1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumPath {
    pub grid: Vec<f64>,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    /// Label field, zero until one of the label samplers fills it.
    pub l: Vec<f64>,
    pub alpha: f64,
    pub provenance: Provenance,
}

impl ContinuumPath {
    pub fn m(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn label_range(&self) -> f64 {
        let max = self.l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.l.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

fn uniform_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

/// Standard Brownian bridge from 0 to 0 on `{0, 1/m, …, 1}`.
pub fn brownian_bridge<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let sd = (1.0 / m as f64).sqrt();
    let mut walk = Vec::with_capacity(m + 1);
    let mut s = 0.0;
    walk.push(0.0);
    for _ in 0..m {
        s += sd * rng.sample::<f64, _>(StandardNormal);
        walk.push(s);
    }
    let end = walk[m];
    for (i, w) in walk.iter_mut().enumerate() {
        *w -= end * i as f64 / m as f64;
    }
    walk[m] = 0.0;
    walk
}

/// Cyclic shift of a bridge `b_0, …, b_m` (with `b_m = b_0`) started at its
/// first minimum, so that the result is nonnegative and vanishes at both ends.
pub fn vervaat(bridge: &[f64]) -> Vec<f64> {
    let m = bridge.len() - 1;
    let k = (0..m).fold(0, |best, i| if bridge[i] < bridge[best] { i } else { best });
    (0..=m).map(|i| if i == m { 0.0 } else { bridge[(k + i) % m] - bridge[k] }).collect()
}

/// `√2` times a standard Brownian excursion; `X = H`.
pub fn brownian_excursion<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<ContinuumPath> {
    if m < 2 {
        return Err(Error::Precondition("grid needs m >= 2".into()));
    }
    let x: Vec<f64> = vervaat(&brownian_bridge(m, rng)).into_iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    Ok(ContinuumPath {
        grid: uniform_grid(m),
        h: x.clone(),
        l: vec![0.0; m + 1],
        x,
        alpha: 2.0,
        provenance: Provenance::ExactGaussian,
    })
}

/// `(2/3) min_{[s ∧ t, s ∨ t]} H` on grid indices.
pub fn snake_covariance(h: &[f64]) -> DMatrix<f64> {
    let m = h.len();
    let mut c = DMatrix::zeros(m, m);
    for s in 0..m {
        let mut low = h[s];
        for t in s..m {
            low = low.min(h[t]);
            c[(s, t)] = 2.0 / 3.0 * low;
            c[(t, s)] = 2.0 / 3.0 * low;
        }
    }
    c
}

/// Snake head over `h` by dense Cholesky factorisation of the covariance.
/// Entries with zero variance are exactly zero.
pub fn snake_head<R: Rng + ?Sized>(h: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_height(h)?;
    if h.len() > MAX_DENSE_GRID + 1 {
        return Err(Error::Unsupported(format!("dense snake head is capped at m = {MAX_DENSE_GRID}")));
    }
    let m = h.len();
    let cov = snake_covariance(h);
    let trace = cov.trace();
    if trace == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let mut jitter = 1e-12 * trace / m as f64;
    let factor = loop {
        let mut a = cov.clone();
        for i in 0..m {
            a[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(a) {
            break ch;
        }
        jitter *= 100.0;
        if jitter > 1e-4 * trace / m as f64 {
            return Err(Error::Numeric(format!(
                "covariance not positive semidefinite up to jitter {jitter:e} (trace {trace:e}, m = {m})"
            )));
        }
    };
    let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let l = factor.l() * z;
    Ok(l.iter().zip(h).map(|(&v, &hh)| if hh == 0.0 { 0.0 } else { v }).collect())
}

/// Same law as [`snake_head`], sampled in `O(m)` by running a Brownian motion
/// along the branches of the tree coded by `h`.
pub fn snake_head_sequential<R: Rng + ?Sized>(h: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_height(h)?;
    let var = 2.0 / 3.0;
    let mut out = Vec::with_capacity(h.len());
    out.push(0.0);
    // Ancestral line of the current point: (height, value), heights increasing.
    let mut spine: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for i in 1..h.len() {
        let branch = h[i - 1].min(h[i]);
        let mut above = None;
        while spine.last().unwrap().0 > branch {
            above = spine.pop();
        }
        let &(h1, v1) = spine.last().unwrap();
        if h1 < branch {
            // Bridge between the two surrounding spine points.
            let (h2, v2) = above.expect("spine ends at the previous height");
            let f = (branch - h1) / (h2 - h1);
            let sd = (var * (branch - h1) * (h2 - branch) / (h2 - h1)).sqrt();
            let v = v1 + f * (v2 - v1) + sd * rng.sample::<f64, _>(StandardNormal);
            spine.push((branch, v));
        }
        let base = spine.last().unwrap().1;
        let v = if h[i] > branch {
            let v = base + (var * (h[i] - branch)).sqrt() * rng.sample::<f64, _>(StandardNormal);
            spine.push((h[i], v));
            v
        } else {
            base
        };
        out.push(v);
    }
    Ok(out)
}

fn check_height(h: &[f64]) -> Result<()> {
    if h.is_empty() || h[0] != 0.0 || h.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Precondition("height path must be nonnegative and start at 0".into()));
    }
    Ok(())
}

/// Rescaled Łukasiewicz path of a size-conditioned tree with `m` edges,
/// standing in for the normalised stable excursion.
pub fn stable_proxy_excursion<R: Rng + ?Sized>(
    law: &OffspringLaw,
    m: usize,
    max_attempts: u64,
    rng: &mut R,
) -> Result<ContinuumPath> {
    if law.alpha() >= 2.0 {
        return Err(Error::Precondition("the walk proxy is meant for alpha < 2".into()));
    }
    let spec = ConditioningSpec::new(OffspringSet::All, m + 1).with_max_attempts(max_attempts);
    let tree = sample_conditioned(law, &spec, rng)?;
    let b = normalizer(law).b(m as u64);
    let w = lukasiewicz(&tree);
    let height = height_process(&tree);
    Ok(ContinuumPath {
        grid: uniform_grid(m),
        x: w.values[..=m].iter().map(|&v| v as f64 / b).collect(),
        h: height.values.iter().map(|&v| v as f64 * b / m as f64).collect(),
        l: vec![0.0; m + 1],
        alpha: law.alpha(),
        provenance: Provenance::WalkProxy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LabelField {
    pub l: Vec<f64>,
    /// Grid steps `i → i + 1` carrying the jumps used, largest first.
    pub jumps: Vec<usize>,
    /// Sum of the positive increments left out of the series.
    pub tail_bound: f64,
    pub warning: Option<String>,
}

/// Jump-series label field over a walk-proxy path: the `k_max` largest
/// increments above `threshold` each carry an independent Brownian bridge.
pub fn stable_label_field<R: Rng + ?Sized>(
    path: &ContinuumPath,
    k_max: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<LabelField> {
    if k_max == 0 {
        return Err(Error::Precondition("at least one jump is needed".into()));
    }
    let x = &path.x;
    let m = x.len() - 1;
    let mut steps: Vec<(usize, f64)> = (0..m).map(|i| (i, x[i + 1] - x[i])).filter(|&(_, d)| d > 0.0).collect();
    steps.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let used = steps.iter().take(k_max).take_while(|s| s.1 > threshold).count();
    let tail_bound = steps[used..].iter().map(|s| s.1).sum();
    let mut l = vec![0.0; m + 1];
    let mut jumps = Vec::with_capacity(used);
    // The infimum of X after a jump, in units of the jump size, runs from 1
    // down to 0 through a lattice of spacing `unit`.
    let unit = x.windows(2).map(|w| (w[0] - w[1]).abs()).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    for &(i, dx) in &steps[..used] {
        jumps.push(i);
        let before = x[i];
        let levels = ((dx / unit).round() as usize).max(1);
        let bridge = brownian_bridge(levels, rng);
        let mut inf = f64::INFINITY;
        for j in i + 1..=m {
            inf = inf.min(x[j]);
            if inf < before - 1e-12 * dx {
                break;
            }
            let arg = ((inf - before) / dx).clamp(0.0, 1.0);
            let value = interpolate(&bridge, arg);
            l[j] += std::f64::consts::SQRT_2 * dx.sqrt() * value;
        }
    }
    let warning = (used == 0).then(|| "no jump above the threshold; the label field is zero".to_string());
    Ok(LabelField { l, jumps, tail_bound, warning })
}

fn interpolate(values: &[f64], s: f64) -> f64 {
    let m = values.len() - 1;
    let t = s * m as f64;
    let i = (t.floor() as usize).min(m - 1);
    let f = t - i as f64;
    (1.0 - f) * values[i] + f * values[i + 1]
}
