//! Uniform bridges with no negative jump and the labelled trees built from them.

use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trees::{LatticePath, PathKind, PlaneTree};

/// Partial sums `x_1, …, x_k` of increments `≥ -1`, with `x_k = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bridge {
    pub values: Vec<i64>,
}

impl Bridge {
    pub fn is_valid(&self) -> bool {
        let mut prev = 0;
        for &x in &self.values {
            if x - prev < -1 {
                return false;
            }
            prev = x;
        }
        self.values.last() == Some(&0)
    }
}

/// Reusable sampler of uniform elements of the bridge set of length `k`.
///
/// A bridge is a weak composition `t_1 + … + t_k = k` shifted by one, and
/// compositions are stars and bars: `k - 1` bars among `2k - 1` slots.
#[derive(Clone, Debug, Default)]
pub struct BridgeSampler {
    slots: Vec<u32>,
    is_bar: Vec<bool>,
}

impl BridgeSampler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes `x_1..x_k` into `out` (cleared first).
    pub fn sample_into<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R, out: &mut Vec<i64>) {
        assert!(k >= 1, "bridges have length at least 1");
        out.clear();
        let slots = 2 * k - 1;
        self.slots.clear();
        self.slots.extend(0..slots as u32);
        self.is_bar.clear();
        self.is_bar.resize(slots, false);
        for i in 0..k - 1 {
            let j = rng.random_range(i..slots);
            self.slots.swap(i, j);
            self.is_bar[self.slots[i] as usize] = true;
        }
        let mut x = 0i64;
        let mut stars = 0i64;
        for &bar in &self.is_bar {
            if bar {
                x += stars - 1;
                out.push(x);
                stars = 0;
            } else {
                stars += 1;
            }
        }
        x += stars - 1;
        out.push(x);
        debug_assert_eq!(x, 0);
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Bridge {
        let mut values = Vec::with_capacity(k);
        self.sample_into(k, rng, &mut values);
        Bridge { values }
    }
}

/// Uniform element of the bridge set of length `k`.
pub fn sample_bridge<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Bridge {
    BridgeSampler::new().sample(k, rng)
}

/// Every bridge of length `k`, in lexicographic order of increments.
pub fn all_bridges(k: usize) -> Vec<Bridge> {
    fn extend(prefix: &mut Vec<i64>, k: usize, out: &mut Vec<Bridge>) {
        let x = prefix.last().copied().unwrap_or(0);
        if prefix.len() == k {
            if x == 0 {
                out.push(Bridge { values: prefix.clone() });
            }
            return;
        }
        // The walk must be able to return to 0 in the remaining steps.
        let remaining = (k - prefix.len()) as i64;
        for step in -1..=(remaining - 1 - x).max(-1) {
            let next = x + step;
            if next <= remaining - 1 {
                prefix.push(next);
                extend(prefix, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), k, &mut out);
    out
}

/// Variance `2j(k-j)/(k+1)` of the `j`-th coordinate of a uniform bridge of length `k`.
pub fn bridge_marginal_variance(k: usize, j: usize) -> Rational64 {
    assert!(1 <= j && j <= k);
    let (k, j) = (k as i64, j as i64);
    Rational64::new(2 * j * (k - j), k + 1)
}

/// Plane tree with integer labels in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelledTree {
    pub tree: PlaneTree,
    pub labels: Vec<i64>,
}

impl LabelledTree {
    /// Checks the root label and that every sibling group is a bridge.
    pub fn new(tree: PlaneTree, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != tree.vertex_count() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} vertices",
                labels.len(),
                tree.vertex_count()
            )));
        }
        if labels[0] != 0 {
            return Err(Error::InvalidInput("root label must be 0".into()));
        }
        let idx = tree.index();
        for u in 0..tree.vertex_count() {
            let mut prev = labels[u];
            for c in idx.children_of(u) {
                if labels[c] - prev < -1 {
                    return Err(Error::InvalidInput(format!("label drop below -1 among the children of {u}")));
                }
                prev = labels[c];
            }
            if tree.k(u) > 0 && prev != labels[u] {
                return Err(Error::InvalidInput(format!("last child of {u} does not carry its label")));
            }
        }
        Ok(Self { tree, labels })
    }

    pub fn min_label(&self) -> i64 {
        *self.labels.iter().min().unwrap()
    }

    pub fn max_label(&self) -> i64 {
        *self.labels.iter().max().unwrap()
    }
}

/// Root label 0 and independent uniform bridges for every sibling group.
pub fn label_tree<R: Rng + ?Sized>(tree: &PlaneTree, rng: &mut R) -> LabelledTree {
    let idx = tree.index();
    let mut labels = vec![0i64; tree.vertex_count()];
    let mut sampler = BridgeSampler::new();
    let mut bridge = Vec::new();
    // Parents precede their children in lexicographic order.
    for u in 0..tree.vertex_count() {
        let k = tree.k(u);
        if k == 0 {
            continue;
        }
        sampler.sample_into(k, rng, &mut bridge);
        for (c, x) in idx.children_of(u).zip(&bridge) {
            labels[c] = labels[u] + x;
        }
    }
    LabelledTree { tree: tree.clone(), labels }
}

/// Every admissible labelling of `tree`.
pub fn all_labellings(tree: &PlaneTree) -> Vec<LabelledTree> {
    let idx = tree.index();
    let internal: Vec<usize> = (0..tree.vertex_count()).filter(|&u| tree.k(u) > 0).collect();
    let choices: Vec<Vec<Bridge>> = internal.iter().map(|&u| all_bridges(tree.k(u))).collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; internal.len()];
    loop {
        let mut labels = vec![0i64; tree.vertex_count()];
        for (slot, &u) in internal.iter().enumerate() {
            let b = &choices[slot][pick[slot]];
            for (c, x) in idx.children_of(u).zip(&b.values) {
                labels[c] = labels[u] + x;
            }
        }
        out.push(LabelledTree { tree: tree.clone(), labels });
        // Odometer over the bridge choices.
        let mut slot = 0;
        loop {
            if slot == pick.len() {
                return out;
            }
            pick[slot] += 1;
            if pick[slot] < choices[slot].len() {
                break;
            }
            pick[slot] = 0;
            slot += 1;
        }
    }
}

/// `L(j) = ℓ(u_j)`.
pub fn label_process(lt: &LabelledTree) -> LatticePath {
    LatticePath { values: lt.labels.clone(), kind: PathKind::Label }
}
