//! Graph distances on sampled maps: radius, profile, two-point bounds,
//! rescaled encodings and exponent sweeps.

use std::collections::VecDeque;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::bijection::{Adjacency, UNREACHED};
use crate::bijection::{tree_to_map_with_links, PointedMap, TreeLinks};
use crate::error::Result;
use crate::labels::{label_process, label_tree, LabelledTree};
use crate::seed::{rng_for, Stage};
use crate::stats::log_log_slope_bootstrap;
use crate::trees::{height_process, lukasiewicz, sample_conditioned, ConditioningSpec, OffspringSet};
use crate::weights::OffspringLaw;

/// Graph distances from `source`.
pub fn bfs(map: &PointedMap, source: usize) -> Vec<u64> {
    map.adjacency().bfs(source)
}

/// `ρ(k)`: number of vertices at distance `k` from `⋆`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileMeasure {
    pub counts: Vec<u64>,
}

impl ProfileMeasure {
    pub fn from_distances(dist: &[u64]) -> Self {
        let r = dist.iter().copied().filter(|&d| d != UNREACHED).max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; r + 1];
        for &d in dist.iter().filter(|&&d| d != UNREACHED) {
            counts[d as usize] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn radius(&self) -> usize {
        self.counts.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusProfile {
    pub radius: u64,
    /// Larger distance to `⋆` of the two root extremities.
    pub delta: u64,
    pub profile: ProfileMeasure,
}

/// Radius, root distance and profile, measured by BFS from `⋆`.
pub fn radius_delta_profile(map: &PointedMap) -> RadiusProfile {
    let dist = bfs(map, map.star);
    let profile = ProfileMeasure::from_distances(&dist);
    let delta = dist[map.origin[map.root]].max(dist[map.target(map.root)]);
    RadiusProfile { radius: profile.radius() as u64, delta, profile }
}

/// `R = max ℓ - min ℓ + 1` and `Δ = 1 - min ℓ`.
pub fn matches_label_extremes(lt: &LabelledTree, rp: &RadiusProfile) -> bool {
    let (lo, hi) = (lt.min_label(), lt.max_label());
    rp.radius as i64 == hi - lo + 1 && rp.delta as i64 == 1 - lo
}

/// `(1/V) Σ_k φ(k / √B) ρ(k)`.
pub fn profile_functional(profile: &ProfileMeasure, phi: impl Fn(f64) -> f64, b: f64) -> f64 {
    let scale = b.sqrt();
    let sum: f64 = profile.counts.iter().enumerate().map(|(k, &c)| phi(k as f64 / scale) * c as f64).sum();
    sum / profile.total() as f64
}

/// Sparse table answering range minima in O(1).
struct RangeMin {
    levels: Vec<Vec<i64>>,
}

impl RangeMin {
    fn new(values: &[i64]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next = (0..prev.len() - width).map(|i| prev[i].min(prev[i + width])).collect();
            levels.push(next);
            width *= 2;
        }
        Self { levels }
    }

    /// Minimum over the closed range `[a, b]`.
    fn min(&self, a: usize, b: usize) -> i64 {
        let len = b - a + 1;
        let lvl = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let row = &self.levels[lvl];
        row[a].min(row[b + 1 - (1 << lvl)])
    }
}

/// `D_L(i, j)` on integer times of the label process.
pub struct LabelPseudoDistance {
    labels: Vec<i64>,
    table: RangeMin,
}

impl LabelPseudoDistance {
    pub fn new(lt: &LabelledTree) -> Self {
        Self { labels: lt.labels.clone(), table: RangeMin::new(&lt.labels) }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        let (a, b) = (i.min(j), i.max(j));
        let last = self.labels.len() - 1;
        let inner = self.table.min(a, b);
        let outer = self.table.min(0, a).min(self.table.min(b, last));
        self.labels[i] + self.labels[j] - 2 * inner.max(outer)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DlBoundReport {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `d(i, j) - D_L(i, j)` seen; at most 2 when the bound holds.
    pub max_excess: i64,
}

impl DlBoundReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Graph distances between the map vertices of tree vertices `u_i`, `u_j`,
/// one BFS per distinct source.
pub fn pair_distances(map: &PointedMap, links: &TreeLinks, pairs: &[(usize, usize)]) -> Vec<u64> {
    let adj = map.adjacency();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by_key(|&p| links.vertex_of[pairs[p].0]);
    let mut out = vec![0; pairs.len()];
    let mut dist = vec![UNREACHED; map.vertex_count];
    let mut queue = VecDeque::new();
    let mut current = None;
    for p in order {
        let (i, j) = pairs[p];
        let src = links.vertex_of[i];
        if current != Some(src) {
            adj.bfs_into(src, &mut dist, &mut queue);
            current = Some(src);
        }
        out[p] = dist[links.vertex_of[j]];
    }
    out
}

/// Checks `d(u_i, u_j) ≤ D_L(i, j) + 2` on every pair.
pub fn dl_bound_check(lt: &LabelledTree, map: &PointedMap, links: &TreeLinks, pairs: &[(usize, usize)]) -> DlBoundReport {
    let dl = LabelPseudoDistance::new(lt);
    let d = pair_distances(map, links, pairs);
    let mut report = DlBoundReport { pairs: pairs.len(), violations: 0, max_excess: i64::MIN };
    for (&(i, j), &dij) in pairs.iter().zip(&d) {
        let excess = dij as i64 - dl.get(i, j);
        report.max_excess = report.max_excess.max(excess);
        if excess > 2 {
            report.violations += 1;
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescaledProcesses {
    pub grid: Vec<f64>,
    /// `(B/ζ) H(ζt)`.
    pub height: Vec<f64>,
    /// `B^{-1/2} L(ζt)`.
    pub label: Vec<f64>,
    /// `W(⌊ζt⌋) / B`.
    pub walk: Vec<f64>,
    pub b: f64,
}

/// Encodings of `lt` rescaled by `b` on the grid `{0, 1/m, …, 1}`.
pub fn rescaled_processes(lt: &LabelledTree, b: f64, m: usize) -> RescaledProcesses {
    let zeta = lt.tree.edge_count() as f64;
    let h = height_process(&lt.tree);
    let l = label_process(lt);
    let w = lukasiewicz(&lt.tree);
    let grid: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    RescaledProcesses {
        height: grid.iter().map(|&t| b / zeta * h.at(zeta * t)).collect(),
        label: grid.iter().map(|&t| l.at(zeta * t) / b.sqrt()).collect(),
        walk: grid.iter().map(|&t| w.at((zeta * t).floor()) / b).collect(),
        grid,
        b,
    }
}

/// `E|λ⁻¹ / mean(λ⁻¹) - 1|` over a sample of leaf counts.
pub fn pointed_bias_statistic(leaf_counts: &[usize]) -> f64 {
    let inv: Vec<f64> = leaf_counts.iter().map(|&l| 1.0 / l as f64).collect();
    let mean = inv.iter().sum::<f64>() / inv.len() as f64;
    let s = inv.iter().map(|x| (x / mean - 1.0).abs()).sum::<f64>() / inv.len() as f64;
    if s < 1e-15 {
        0.0
    } else {
        s
    }
}

/// Monte Carlo estimate of the pointed bias over `samples` conditioned trees.
pub fn pointed_bias(law: &OffspringLaw, spec: &ConditioningSpec, samples: usize, seed: u64) -> Result<f64> {
    let leaves = (0..samples as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rng_for(seed, spec.n as u64, rep, Stage::Tree);
            sample_conditioned(law, spec, &mut rng).map(|t| t.leaf_count())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pointed_bias_statistic(&leaves))
}

/// One replicate of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub replicate: u64,
    pub seed: u64,
    /// Edge count.
    pub zeta: usize,
    pub radius: u64,
    pub delta: u64,
    /// Leaf count, i.e. vertices of the map other than `⋆`.
    pub leaves: usize,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Log-log slope of mean radius against `n`.
    pub slope: f64,
    pub slope_se: f64,
    /// Set when some grid point has fewer than 100 replicates.
    pub few_replicates: bool,
}

/// Samples one labelled tree and its map for `(seed, n, rep)`.
pub fn sample_replicate(
    law: &OffspringLaw,
    spec: &ConditioningSpec,
    seed: u64,
    rep: u64,
) -> Result<(LabelledTree, PointedMap, TreeLinks)> {
    let n = spec.n as u64;
    let tree = sample_conditioned(law, spec, &mut rng_for(seed, n, rep, Stage::Tree))?;
    let lt = label_tree(&tree, &mut rng_for(seed, n, rep, Stage::Labels));
    let (map, links) = tree_to_map_with_links(&lt)?;
    Ok((lt, map, links))
}

pub fn sweep_row(law: &OffspringLaw, spec: &ConditioningSpec, seed: u64, rep: u64) -> Result<SweepRow> {
    let start = Instant::now();
    let (lt, map, _) = sample_replicate(law, spec, seed, rep)?;
    let rp = radius_delta_profile(&map);
    Ok(SweepRow {
        n: spec.n,
        replicate: rep,
        seed,
        zeta: lt.tree.edge_count(),
        radius: rp.radius,
        delta: rp.delta,
        leaves: lt.tree.leaf_count(),
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Radius exponent across `ns`, `replicates` maps per size, on the current
/// rayon pool.
pub fn scaling_sweep(
    law: &OffspringLaw,
    set: OffspringSet,
    ns: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<SweepResult> {
    let cells: Vec<(usize, u64)> = ns.iter().flat_map(|&n| (0..replicates as u64).map(move |r| (n, r))).collect();
    let rows = cells
        .par_iter()
        .map(|&(n, rep)| sweep_row(law, &ConditioningSpec::new(set, n), seed, rep))
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| rows.iter().filter(|r| r.n == n).map(|r| r.radius as f64).collect())
        .collect();
    let sizes: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut rng = rng_for(seed, 0, 0, Stage::Bootstrap);
    let (slope, slope_se) = log_log_slope_bootstrap(&sizes, &groups, 1000, &mut rng);
    Ok(SweepResult { rows, slope, slope_se, few_replicates: replicates < 100 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bijection::{tree_to_map, tree_to_map_with_links};
    use crate::labels::all_labellings;
    use crate::trees::{all_trees, PlaneTree};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lt(k: &[usize], labels: &[i64]) -> LabelledTree {
        LabelledTree::new(PlaneTree::from_children(k.to_vec()).unwrap(), labels.to_vec()).unwrap()
    }

    fn quadrangulation() -> OffspringLaw {
        crate::weights::make_stable_offspring(2.0, 2).unwrap()
    }

    #[test]
    fn bfs_on_two_edge_path() {
        // Root with two leaves labelled -1, 0: the map is a path ⋆ - a - b.
        let t = lt(&[2, 0, 0], &[0, -1, 0]);
        let map = tree_to_map(&t).unwrap();
        let mut d = bfs(&map, map.star);
        d.sort();
        assert_eq!(d, vec![0, 1, 2]);
        for v in 0..map.vertex_count {
            assert_eq!(bfs(&map, v)[v], 0);
        }
    }

    #[test]
    fn path_radius_and_profile() {
        let t = lt(&[2, 0, 0], &[0, -1, 0]);
        let map = tree_to_map(&t).unwrap();
        let rp = radius_delta_profile(&map);
        assert_eq!(rp.radius, 2);
        assert_eq!(rp.delta, 2);
        assert_eq!(rp.profile.counts, vec![1, 1, 1]);
        assert!(matches_label_extremes(&t, &rp));
        let x = profile_functional(&rp.profile, |x| x, 1.0);
        assert!((x - 1.0).abs() < 1e-15);
        assert!((profile_functional(&rp.profile, |_| 1.0, 7.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_map() {
        let t = lt(&[1, 0], &[0, 0]);
        let rp = radius_delta_profile(&tree_to_map(&t).unwrap());
        assert_eq!(rp.radius, 1);
        assert_eq!(rp.profile.counts, vec![1, 1]);
    }

    #[test]
    fn dl_bound_exhaustive_small_trees() {
        for edges in 1..=4 {
            for tree in all_trees(edges) {
                for t in all_labellings(&tree) {
                    let (map, links) = tree_to_map_with_links(&t).unwrap();
                    let n = tree.vertex_count();
                    let pairs: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
                    let rep = dl_bound_check(&t, &map, &links, &pairs);
                    assert!(rep.holds(), "{t:?}: {rep:?}");
                    let rp = radius_delta_profile(&map);
                    assert!(matches_label_extremes(&t, &rp));
                }
            }
        }
    }

    #[test]
    fn diagonal_pairs_are_zero() {
        let t = lt(&[2, 0, 0], &[0, -1, 0]);
        let dl = LabelPseudoDistance::new(&t);
        for i in 0..3 {
            assert_eq!(dl.get(i, i), 0);
        }
    }

    #[test]
    fn rescaled_processes_at_zero_and_scaling() {
        let law = quadrangulation();
        let (t, _, _) = sample_replicate(&law, &ConditioningSpec::new(OffspringSet::All, 501), 1, 0).unwrap();
        let a = rescaled_processes(&t, 4.0, 100);
        let b = rescaled_processes(&t, 8.0, 100);
        assert_eq!((a.height[0], a.label[0], a.walk[0]), (0.0, 0.0, 0.0));
        for (x, y) in a.walk.iter().zip(&b.walk) {
            assert!((x - 2.0 * y).abs() < 1e-12);
        }
        // u_N is a leaf, so W(ζ) = W(ζ + 1) + 1 = 0.
        assert_eq!(*a.walk.last().unwrap(), 0.0);
    }

    #[test]
    fn pointed_bias_degenerate_cases() {
        assert_eq!(pointed_bias_statistic(&[7]), 0.0);
        assert_eq!(pointed_bias_statistic(&[5, 5, 5]), 0.0);
        let law = quadrangulation();
        let spec = ConditioningSpec::new(OffspringSet::Leaves, 50);
        assert_eq!(pointed_bias(&law, &spec, 100, 3).unwrap(), 0.0);
    }

    #[test]
    fn pointed_bias_decays() {
        let law = OffspringLaw::from_pmf(vec![0.25, 0.5, 0.25]).unwrap();
        let small = pointed_bias(&law, &ConditioningSpec::new(OffspringSet::All, 100), 300, 5).unwrap();
        let large = pointed_bias(&law, &ConditioningSpec::new(OffspringSet::All, 3000), 300, 5).unwrap();
        assert!(small > 0.0);
        assert!(large < small, "{large} vs {small}");
    }

    #[test]
    fn sweep_is_deterministic() {
        let law = quadrangulation();
        let a = scaling_sweep(&law, OffspringSet::All, &[51, 101], 8, 11).unwrap();
        let b = scaling_sweep(&law, OffspringSet::All, &[51, 101], 8, 11).unwrap();
        let strip = |r: &SweepResult| r.rows.iter().map(|x| (x.n, x.zeta, x.radius, x.delta, x.leaves)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.slope, b.slope);
        assert!(a.few_replicates);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_maps_satisfy_bounds(seed in any::<u64>(), half in 1usize..400) {
            // The quadrangulation law only produces trees of odd size.
            let n = 2 * half + 1;
            let law = quadrangulation();
            let (t, map, links) = sample_replicate(&law, &ConditioningSpec::new(OffspringSet::All, n), seed, 0).unwrap();
            let rp = radius_delta_profile(&map);
            prop_assert!(matches_label_extremes(&t, &rp));
            prop_assert_eq!(rp.profile.total() as usize, map.vertex_count);
            prop_assert_eq!(rp.profile.counts[0], 1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<_> = (0..200).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
            let rep = dl_bound_check(&t, &map, &links, &pairs);
            prop_assert!(rep.holds(), "{:?}", rep);
            // Symmetry of graph distances.
            let rev: Vec<_> = pairs.iter().map(|&(i, j)| (j, i)).collect();
            prop_assert_eq!(pair_distances(&map, &links, &pairs), pair_distances(&map, &links, &rev));
        }
    }
}
