//! Plane trees stored as children counts in lexicographic order, their path
//! encodings, and exact samplers for size-conditioned Galton–Watson trees.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{gcd, OffspringLaw, OffspringSampler};

/// Default vertex budget of an unconditioned Galton–Watson draw.
pub const DEFAULT_SIZE_CAP: usize = 100_000_000;

/// Ordered rooted tree given by the children counts `k_{u_0}, …, k_{u_N}`
/// of its vertices in lexicographic (depth-first) order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PlaneTree {
    children: Vec<usize>,
}

impl TryFrom<Vec<usize>> for PlaneTree {
    type Error = Error;
    fn try_from(children: Vec<usize>) -> Result<Self> {
        PlaneTree::from_children(children)
    }
}

impl From<PlaneTree> for Vec<usize> {
    fn from(t: PlaneTree) -> Self {
        t.children
    }
}

impl PlaneTree {
    pub fn from_children(children: Vec<usize>) -> Result<Self> {
        if children.is_empty() {
            return Err(Error::InvalidEncoding("a tree has at least one vertex".into()));
        }
        let mut w: i64 = 0;
        for (j, &k) in children.iter().enumerate() {
            w += k as i64 - 1;
            let last = j + 1 == children.len();
            if (!last && w < 0) || (last && w != -1) {
                return Err(Error::InvalidEncoding(format!(
                    "children counts do not form a tree (walk at {w} after vertex {j})"
                )));
            }
        }
        Ok(Self { children })
    }

    /// The single-vertex tree.
    pub fn singleton() -> Self {
        Self { children: vec![0] }
    }

    pub fn children(&self) -> &[usize] {
        &self.children
    }

    /// Number of children of the `j`-th vertex in lexicographic order.
    pub fn k(&self, j: usize) -> usize {
        self.children[j]
    }

    pub fn vertex_count(&self) -> usize {
        self.children.len()
    }

    /// `ζ(T)`, the number of edges.
    pub fn edge_count(&self) -> usize {
        self.children.len() - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.children.iter().filter(|&&k| k == 0).count()
    }

    pub fn internal_count(&self) -> usize {
        self.vertex_count() - self.leaf_count()
    }

    pub fn count(&self, set: OffspringSet) -> usize {
        self.children.iter().filter(|&&k| set.contains(k)).count()
    }

    pub fn index(&self) -> TreeIndex {
        TreeIndex::new(self)
    }
}

/// Parent, depth and subtree-size tables of a [`PlaneTree`].
#[derive(Clone, Debug)]
pub struct TreeIndex {
    pub parent: Vec<usize>,
    pub depth: Vec<usize>,
    pub subtree_size: Vec<usize>,
    children: Vec<usize>,
}

impl TreeIndex {
    pub const NO_PARENT: usize = usize::MAX;

    fn new(tree: &PlaneTree) -> Self {
        let n = tree.vertex_count();
        let mut parent = vec![Self::NO_PARENT; n];
        let mut depth = vec![0; n];
        // Open vertices with their number of children still to be visited.
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for u in 0..n {
            if let Some(top) = stack.last_mut() {
                parent[u] = top.0;
                depth[u] = depth[top.0] + 1;
                top.1 -= 1;
                if top.1 == 0 {
                    stack.pop();
                }
            }
            if tree.children[u] > 0 {
                stack.push((u, tree.children[u]));
            }
        }
        let mut subtree_size = vec![1; n];
        for u in (1..n).rev() {
            subtree_size[parent[u]] += subtree_size[u];
        }
        Self { parent, depth, subtree_size, children: tree.children.clone() }
    }

    /// Children of `u` from left to right.
    pub fn children_of(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let mut next = u + 1;
        (0..self.children[u]).map(move |_| {
            let c = next;
            next += self.subtree_size[c];
            c
        })
    }

    pub fn last_child(&self, u: usize) -> Option<usize> {
        self.children_of(u).last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    /// Step function.
    Lukasiewicz,
    /// Linear interpolation.
    Height,
    /// Linear interpolation.
    Label,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    pub values: Vec<i64>,
    pub kind: PathKind,
}

impl LatticePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at real time `t ∈ [0, len-1]`, interpolated according to the kind.
    pub fn at(&self, t: f64) -> f64 {
        let last = self.values.len() - 1;
        let t = t.clamp(0.0, last as f64);
        let i = (t.floor() as usize).min(last);
        match self.kind {
            PathKind::Lukasiewicz => self.values[i] as f64,
            _ if i == last => self.values[last] as f64,
            _ => {
                let f = t - i as f64;
                (1.0 - f) * self.values[i] as f64 + f * self.values[i + 1] as f64
            }
        }
    }

    pub fn min(&self) -> i64 {
        self.values.iter().copied().min().unwrap_or(0)
    }

    pub fn max(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }
}

/// `W(0) = 0`, `W(j+1) = W(j) + k_{u_j} - 1`; length `N + 2`, ends at `-1`.
pub fn lukasiewicz(tree: &PlaneTree) -> LatticePath {
    let mut values = Vec::with_capacity(tree.vertex_count() + 1);
    let mut w = 0i64;
    values.push(0);
    for &k in tree.children() {
        w += k as i64 - 1;
        values.push(w);
    }
    LatticePath { values, kind: PathKind::Lukasiewicz }
}

pub fn tree_from_lukasiewicz(path: &LatticePath) -> Result<PlaneTree> {
    let v = &path.values;
    if v.len() < 2 || v[0] != 0 {
        return Err(Error::InvalidEncoding("path must start at 0 and have at least one step".into()));
    }
    let children = v
        .windows(2)
        .map(|w| {
            let step = w[1] - w[0];
            if step < -1 {
                Err(Error::InvalidEncoding(format!("step {step} below -1")))
            } else {
                Ok((step + 1) as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PlaneTree::from_children(children)
}

/// `H(j) = |u_j|`.
pub fn height_process(tree: &PlaneTree) -> LatticePath {
    let idx = tree.index();
    LatticePath { values: idx.depth.iter().map(|&d| d as i64).collect(), kind: PathKind::Height }
}

/// Vertices counted by a size conditioning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffspringSet {
    /// Every vertex.
    All,
    /// Vertices with no child.
    Leaves,
    /// Vertices with at least one child.
    Internal,
}

impl OffspringSet {
    pub fn contains(self, k: usize) -> bool {
        match self {
            OffspringSet::All => true,
            OffspringSet::Leaves => k == 0,
            OffspringSet::Internal => k > 0,
        }
    }

    /// `μ(A)`.
    pub fn mass(self, law: &OffspringLaw) -> f64 {
        match self {
            OffspringSet::All => 1.0,
            OffspringSet::Leaves => law.pmf(0),
            OffspringSet::Internal => 1.0 - law.pmf(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rejection,
    Vervaat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditioningSpec {
    pub set: OffspringSet,
    pub n: usize,
    pub method: Method,
    pub max_attempts: u64,
}

impl ConditioningSpec {
    pub const DEFAULT_MAX_ATTEMPTS: u64 = 10_000_000;

    pub fn new(set: OffspringSet, n: usize) -> Self {
        Self { set, n, method: Method::Vervaat, max_attempts: Self::DEFAULT_MAX_ATTEMPTS }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Precondition(format!("conditioning size n = {} must be >= 2", self.n)));
        }
        if self.max_attempts == 0 {
            return Err(Error::Precondition("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// Result of an unconditioned draw.
#[derive(Clone, Debug, PartialEq)]
pub enum BgwOutcome {
    Tree(PlaneTree),
    /// The tree exceeded the vertex budget after `generated` vertices.
    Overflow { generated: usize },
}

/// Unconditioned Galton–Watson tree, generated depth first.
pub fn sample_bgw<R: Rng + ?Sized>(law: &OffspringLaw, rng: &mut R, size_cap: usize) -> BgwOutcome {
    let sampler = law.sampler();
    match grow(&sampler, rng, size_cap, |_| false) {
        Grown::Tree(children) => BgwOutcome::Tree(PlaneTree { children }),
        Grown::Overflow(generated) | Grown::Aborted(generated) => BgwOutcome::Overflow { generated },
    }
}

enum Grown {
    Tree(Vec<usize>),
    Overflow(usize),
    Aborted(usize),
}

fn grow<R: Rng + ?Sized>(
    sampler: &OffspringSampler,
    rng: &mut R,
    size_cap: usize,
    mut abort: impl FnMut(usize) -> bool,
) -> Grown {
    let mut children = Vec::new();
    let mut open: u64 = 1;
    while open > 0 {
        if children.len() >= size_cap {
            return Grown::Overflow(children.len());
        }
        let k = sampler.sample(rng);
        if k >= size_cap as u64 {
            return Grown::Overflow(children.len() + 1);
        }
        let k = k as usize;
        children.push(k);
        if abort(k) {
            return Grown::Aborted(children.len());
        }
        open = open - 1 + k as u64;
    }
    Grown::Tree(children)
}

/// Exact sample of the tree conditioned to have `spec.n` vertices in `spec.set`.
pub fn sample_conditioned<R: Rng + ?Sized>(
    law: &OffspringLaw,
    spec: &ConditioningSpec,
    rng: &mut R,
) -> Result<PlaneTree> {
    spec.validate()?;
    if (law.mean() - 1.0).abs() > crate::weights::LAW_TOL {
        return Err(Error::Precondition(format!("offspring mean {} != 1", law.mean())));
    }
    check_lattice(law, spec)?;
    match spec.method {
        Method::Rejection => rejection(law, spec, rng),
        Method::Vervaat => vervaat(law, spec, rng),
    }
}

fn check_lattice(law: &OffspringLaw, spec: &ConditioningSpec) -> Result<()> {
    let n = spec.n as u64;
    match spec.set {
        OffspringSet::All => {
            // Σ ξ_i = n - 1 with every ξ_i in offset + span·ℤ.
            let (offset, span) = law.lattice();
            let target = n - 1;
            let feasible = target >= n * offset
                && (span == 0 && target == n * offset || span > 0 && (target - n * offset) % span == 0)
                && law.support_max().is_none_or(|m| n * m >= target);
            if !feasible {
                return Err(Error::LatticeInfeasible(format!(
                    "no tree with {n} vertices has all offspring counts in {offset} + {span}ℤ"
                )));
            }
        }
        OffspringSet::Leaves | OffspringSet::Internal => {
            if law.pmf(0) <= 0.0 || law.pmf(0) >= 1.0 {
                return Err(Error::LatticeInfeasible("degenerate leaf mass".into()));
            }
            if spec.set == OffspringSet::Leaves {
                // Σ (ξ - 1) over internal vertices = n - 1.
                let span = match law.support_max() {
                    None => 1,
                    Some(m) => (2..=m).filter(|&k| law.pmf(k) > 0.0).fold(0, |g, k| gcd(g, k - 1)),
                };
                if span == 0 || (n - 1) % span != 0 {
                    return Err(Error::LatticeInfeasible(format!(
                        "no tree with {n} leaves has all internal offspring counts in 1 + {span}ℤ"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn exhausted(attempts: u64, accepted: u64) -> Error {
    Error::AttemptsExhausted { attempts, accepted, rate: accepted as f64 / attempts.max(1) as f64 }
}

fn rejection<R: Rng + ?Sized>(law: &OffspringLaw, spec: &ConditioningSpec, rng: &mut R) -> Result<PlaneTree> {
    let sampler = law.sampler();
    let n = spec.n;
    let set = spec.set;
    // A tree with n vertices in A has at most this many vertices in total.
    let cap = match set {
        OffspringSet::All => n,
        _ => DEFAULT_SIZE_CAP,
    };
    for _ in 0..spec.max_attempts {
        let mut count = 0;
        let grown = grow(&sampler, rng, cap, |k| {
            count += set.contains(k) as usize;
            count > n
        });
        if let Grown::Tree(children) = grown {
            if count == n {
                return Ok(PlaneTree { children });
            }
        }
    }
    Err(exhausted(spec.max_attempts, 0))
}

/// Cyclic-shift construction.
///
/// A step sequence `ξ_i - 1` is drawn i.i.d. and cut so that it holds exactly
/// `n` vertices of `A` and is anchored at one of them (ending on the n-th one
/// for `A ∈ {all, leaves}`, starting on the first one for `A = internal`).
/// Conditioned on total sum `-1`, exactly one rotation is a Łukasiewicz
/// excursion, and it is anchored the same way; each tree has exactly `n`
/// equally likely anchored preimages, so the output has the conditioned law.
fn vervaat<R: Rng + ?Sized>(law: &OffspringLaw, spec: &ConditioningSpec, rng: &mut R) -> Result<PlaneTree> {
    let sampler = law.sampler();
    let n = spec.n;
    let set = spec.set;
    let mut steps: Vec<usize> = Vec::with_capacity(n);
    'attempt: for _ in 0..spec.max_attempts {
        steps.clear();
        let mut sum: i64 = 0;
        let mut in_set = 0usize;
        match set {
            OffspringSet::All | OffspringSet::Leaves => {
                while in_set < n {
                    let k = sampler.sample(rng);
                    if k > (i64::MAX / 4) as u64 {
                        continue 'attempt;
                    }
                    let k = k as usize;
                    in_set += set.contains(k) as usize;
                    sum += k as i64 - 1;
                    steps.push(k);
                    // Each remaining vertex of A lowers the walk by at most one.
                    if sum - (n - in_set) as i64 > -1 {
                        continue 'attempt;
                    }
                }
            }
            OffspringSet::Internal => {
                let first = loop {
                    let k = sampler.sample(rng);
                    if k > 0 {
                        break k;
                    }
                };
                if first > (i64::MAX / 4) as u64 {
                    continue 'attempt;
                }
                steps.push(first as usize);
                sum += first as i64 - 1;
                in_set = 1;
                loop {
                    let k = sampler.sample(rng);
                    if k > 0 {
                        if in_set == n {
                            break;
                        }
                        in_set += 1;
                    }
                    if k > (i64::MAX / 4) as u64 {
                        continue 'attempt;
                    }
                    steps.push(k as usize);
                    sum += k as i64 - 1;
                }
            }
        }
        if sum != -1 {
            continue;
        }
        return Ok(PlaneTree { children: vervaat_shift(&steps) });
    }
    Err(exhausted(spec.max_attempts, 0))
}

/// Rotates a children-count sequence with walk sum `-1` to start right
/// after the first time its partial sums reach their overall minimum.
pub fn vervaat_shift(children: &[usize]) -> Vec<usize> {
    let mut w = 0i64;
    let (mut min, mut argmin) = (i64::MAX, 0);
    for (j, &k) in children.iter().enumerate() {
        w += k as i64 - 1;
        if w < min {
            min = w;
            argmin = j;
        }
    }
    let cut = (argmin + 1) % children.len();
    let mut out = Vec::with_capacity(children.len());
    out.extend_from_slice(&children[cut..]);
    out.extend_from_slice(&children[..cut]);
    out
}

/// Leaf positions and the leaf counting function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafIndex {
    /// `g(i)`: lexicographic index of the `(i+1)`-th leaf.
    pub positions: Vec<usize>,
    /// `Λ(j)`: number of leaves among `u_0, …, u_j`, for `0 ≤ j ≤ N`.
    pub counts: Vec<usize>,
}

impl LeafIndex {
    pub fn leaf_count(&self) -> usize {
        self.positions.len()
    }

    /// `max_j |Λ(j)/λ - j/ζ|`, the deviation from a uniform spread of leaves.
    pub fn homogeneity_sup(&self) -> f64 {
        let lambda = self.leaf_count() as f64;
        let zeta = (self.counts.len() - 1).max(1) as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(j, &c)| (c as f64 / lambda - j as f64 / zeta).abs())
            .fold(0.0, f64::max)
    }
}

pub fn leaf_index_map(tree: &PlaneTree) -> LeafIndex {
    let mut positions = Vec::new();
    let mut counts = Vec::with_capacity(tree.vertex_count());
    for (j, &k) in tree.children().iter().enumerate() {
        if k == 0 {
            positions.push(j);
        }
        counts.push(positions.len());
    }
    LeafIndex { positions, counts }
}

/// Every plane tree with `edges` edges, in lexicographic order of their
/// children sequences.
pub fn all_trees(edges: usize) -> Vec<PlaneTree> {
    fn extend(prefix: &mut Vec<usize>, open: usize, left: usize, out: &mut Vec<PlaneTree>) {
        if open == 0 {
            if left == 0 {
                out.push(PlaneTree { children: prefix.clone() });
            }
            return;
        }
        for k in 0..=left {
            if open - 1 + k == 0 && left - k > 0 {
                continue;
            }
            prefix.push(k);
            extend(prefix, open - 1 + k, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), 1, edges, &mut out);
    out
}
