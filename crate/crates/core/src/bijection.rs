//! Labelled trees ↔ negative pointed bipartite maps.
//!
//! Forward direction: list the tree vertices `u_0, …, u_N` lexicographically
//! and repeat the list cyclically. For every `i < N` draw an edge from `u_i`
//! to the first later vertex whose label is one less (or to an extra vertex
//! `⋆` when `u_i` has minimal label), then merge every internal vertex with
//! its last child. Map vertices are therefore the leaves of the tree plus `⋆`,
//! and labels shifted by `1 - min ℓ` are distances to `⋆`.
//!
//! Corners: the vertices `u_0, …, u_{N-1}` are the corners of the merged
//! vertices in contour order (`u_N` shares its corner with `u_0`). Within a
//! corner the incoming edges are ordered innermost first and the outgoing
//! edge comes last; the rotation of a merged vertex concatenates its corners
//! in lexicographic order.
//!
//! Half-edges: edge `i` is made of half-edge `2i`, leaving the corner of
//! `u_i`, and its twin `2i + 1`. `rotation[h]` is the clockwise successor of
//! `h` around its origin and faces are the orbits of `h ↦ rotation[twin(h)]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelledTree;
use crate::trees::PlaneTree;

pub const UNREACHED: u64 = u64::MAX;

#[inline]
pub fn twin(h: usize) -> usize {
    h ^ 1
}

/// Half-edge representation of a pointed planar map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointedMap {
    pub vertex_count: usize,
    /// The distinguished vertex `⋆`.
    pub star: usize,
    /// Origin vertex of every half-edge; half-edges `2i` and `2i + 1` form edge `i`.
    pub origin: Vec<usize>,
    /// Clockwise successor of each half-edge around its origin.
    pub rotation: Vec<usize>,
    /// Root half-edge, oriented from `e_+` to `e_-`.
    pub root: usize,
    /// Distance to `⋆` of every vertex as recorded at construction.
    pub dist: Vec<u64>,
}

/// Face orbits of a map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Faces {
    /// Face of each half-edge; faces are numbered by their smallest half-edge.
    pub face_of: Vec<usize>,
    pub degrees: Vec<usize>,
}

impl Faces {
    pub fn count(&self) -> usize {
        self.degrees.len()
    }
}

impl PointedMap {
    pub fn edge_count(&self) -> usize {
        self.origin.len() / 2
    }

    pub fn target(&self, h: usize) -> usize {
        self.origin[twin(h)]
    }

    /// Next half-edge along the face containing `h`.
    pub fn face_next(&self, h: usize) -> usize {
        self.rotation[twin(h)]
    }

    pub fn faces(&self) -> Faces {
        let m = self.origin.len();
        let mut face_of = vec![usize::MAX; m];
        let mut degrees = Vec::new();
        for start in 0..m {
            if face_of[start] != usize::MAX {
                continue;
            }
            let id = degrees.len();
            let mut h = start;
            let mut deg = 0;
            while face_of[h] == usize::MAX {
                face_of[h] = id;
                deg += 1;
                h = self.face_next(h);
            }
            degrees.push(deg);
        }
        Faces { face_of, degrees }
    }

    /// The face to the right of the root edge.
    pub fn root_face(&self, faces: &Faces) -> usize {
        faces.face_of[twin(self.root)]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.origin.iter().filter(|&&o| o == v).count()
    }

    /// Whether the root points towards `⋆` according to `dist`.
    pub fn is_negative(&self) -> bool {
        self.dist[self.target(self.root)] + 1 == self.dist[self.origin[self.root]]
    }

    /// The same map with the root edge reversed (turns negative into positive).
    pub fn reversed_root(&self) -> Self {
        Self { root: twin(self.root), ..self.clone() }
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::new(self)
    }

    /// Relabels half-edges in breadth-first order from the root; two rooted
    /// pointed maps are isomorphic exactly when their codes agree.
    pub fn canonical_code(&self) -> Vec<u64> {
        let m = self.origin.len();
        let mut new_id = vec![usize::MAX; m];
        let mut order = Vec::with_capacity(m);
        let mut queue = VecDeque::new();
        new_id[self.root] = 0;
        order.push(self.root);
        queue.push_back(self.root);
        while let Some(h) = queue.pop_front() {
            for g in [self.rotation[h], twin(h)] {
                if new_id[g] == usize::MAX {
                    new_id[g] = order.len();
                    order.push(g);
                    queue.push_back(g);
                }
            }
        }
        let mut code = Vec::with_capacity(3 * m);
        for &h in &order {
            code.push(new_id[self.rotation[h]] as u64);
            code.push(new_id[twin(h)] as u64);
            code.push((self.origin[h] == self.star) as u64);
        }
        code
    }
}

/// Compressed adjacency lists for repeated breadth-first searches.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    pub fn new(map: &PointedMap) -> Self {
        let n = map.vertex_count;
        let mut offsets = vec![0usize; n + 1];
        for &o in &map.origin {
            offsets[o + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; map.origin.len()];
        for (h, &o) in map.origin.iter().enumerate() {
            targets[fill[o]] = map.target(h);
            fill[o] += 1;
        }
        Self { offsets, targets }
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Distances from `source`; unreachable vertices get [`UNREACHED`].
    pub fn bfs(&self, source: usize) -> Vec<u64> {
        let mut dist = vec![UNREACHED; self.vertex_count()];
        let mut queue = VecDeque::new();
        self.bfs_into(source, &mut dist, &mut queue);
        dist
    }

    pub fn bfs_into(&self, source: usize, dist: &mut [u64], queue: &mut VecDeque<usize>) {
        dist.fill(UNREACHED);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let d = dist[v] + 1;
            for &w in self.neighbours(v) {
                if dist[w] == UNREACHED {
                    dist[w] = d;
                    queue.push_back(w);
                }
            }
        }
    }
}

/// Correspondence between a labelled tree and the map built from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeLinks {
    /// Map vertex of every tree vertex (its merged leaf class).
    pub vertex_of: Vec<usize>,
    /// Face of every internal tree vertex (`None` for leaves).
    pub face_of: Vec<Option<usize>>,
    pub faces: Faces,
}

/// Builds the negative pointed map of a labelled tree with at least one edge.
pub fn tree_to_map(lt: &LabelledTree) -> Result<PointedMap> {
    tree_to_map_with_links(lt).map(|(m, _)| m)
}

pub fn tree_to_map_with_links(lt: &LabelledTree) -> Result<(PointedMap, TreeLinks)> {
    let tree = &lt.tree;
    let labels = &lt.labels;
    let n = tree.edge_count();
    if n == 0 {
        return Err(Error::InvalidInput("the bijection needs a tree with at least one edge".into()));
    }
    if labels.len() != tree.vertex_count() || labels[0] != 0 {
        return Err(Error::InvalidInput("labels do not match the tree".into()));
    }
    let idx = tree.index();

    // Leaf class of every vertex: the end of its rightmost descending path.
    let mut class = vec![0usize; n + 1];
    for v in (0..=n).rev() {
        class[v] = match idx.last_child(v) {
            Some(c) => class[c],
            None => v,
        };
    }
    let mut vertex_of_leaf = vec![usize::MAX; n + 1];
    let mut leaves = 0;
    for v in 0..=n {
        if tree.k(v) == 0 {
            vertex_of_leaf[v] = leaves;
            leaves += 1;
        }
    }
    let star = leaves;
    let vertex_of: Vec<usize> = class.iter().map(|&c| vertex_of_leaf[c]).collect();

    let min = *labels.iter().min().unwrap();
    let max = *labels.iter().max().unwrap();
    let corner_of = |v: usize| if v == n { 0 } else { v };

    // Successor corners by a backward scan of the doubled sequence.
    let width = (max - min + 1) as usize;
    let mut next_pos = vec![usize::MAX; width];
    let mut successor = vec![usize::MAX; n];
    for p in (0..=2 * n + 1).rev() {
        let v = if p <= n { p } else { p - n - 1 };
        let l = labels[v];
        if p < n && l > min {
            let q = next_pos[(l - 1 - min) as usize];
            if q == usize::MAX {
                return Err(Error::InvalidInput("labels skip a value".into()));
            }
            let t = if q <= n { q } else { q - n - 1 };
            successor[p] = corner_of(t);
        }
        next_pos[(l - min) as usize] = p;
    }

    // Incoming edges per corner, innermost first.
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for q in 0..n {
        if successor[q] != usize::MAX {
            incoming[successor[q]].push(q);
        }
    }
    let mut origin = vec![0usize; 2 * n];
    let mut rotation = vec![0usize; 2 * n];
    let mut around: Vec<Vec<usize>> = vec![Vec::new(); leaves + 1];
    for c in 0..n {
        let w = vertex_of[c];
        let inc = &mut incoming[c];
        inc.sort_by_key(|&q| (c + n - q) % n);
        for &q in inc.iter() {
            origin[2 * q + 1] = w;
            around[w].push(2 * q + 1);
        }
        origin[2 * c] = w;
        around[w].push(2 * c);
    }
    for c in (0..n).rev() {
        if successor[c] == usize::MAX {
            origin[2 * c + 1] = star;
            around[star].push(2 * c + 1);
        }
    }
    for list in &around {
        for (j, &h) in list.iter().enumerate() {
            rotation[h] = list[(j + 1) % list.len()];
        }
    }
    let mut dist = vec![0u64; leaves + 1];
    for v in 0..=n {
        dist[vertex_of[v]] = (labels[v] - min + 1) as u64;
    }
    dist[star] = 0;
    let map = PointedMap { vertex_count: leaves + 1, star, origin, rotation, root: 0, dist };
    let faces = map.faces();
    let face_of = (0..=n).map(|u| (tree.k(u) > 0).then(|| faces.face_of[2 * u + 1])).collect();
    Ok((map, TreeLinks { vertex_of, face_of, faces }))
}

/// Inverse of [`tree_to_map`] on negative maps.
///
/// Distances to `⋆` are recomputed. Every half-edge `g` stepping down towards
/// `⋆` marks the corner that follows it clockwise around its origin; the face
/// of that corner gets a new vertex joined to all of its marked corners. The
/// resulting two-type tree is unfolded into the plane tree, each face vertex
/// becoming an internal vertex whose last child carries its label.
pub fn map_to_tree(map: &PointedMap) -> Result<LabelledTree> {
    let m = map.origin.len();
    if m == 0 || m % 2 != 0 || map.rotation.len() != m {
        return Err(Error::Unsupported("map lacks a complete rotation system".into()));
    }
    let dist = map.adjacency().bfs(map.star);
    if dist.contains(&UNREACHED) {
        return Err(Error::InvalidInput("map is not connected".into()));
    }
    let up = map.origin[map.root];
    if dist[map.target(map.root)] + 1 != dist[up] {
        return Err(Error::PositiveMap);
    }
    let faces = map.faces();
    let down = |g: usize| dist[map.target(g)] + 1 == dist[map.origin[g]];

    // Down half-edges around every vertex, clockwise.
    let mut downs_at: Vec<Vec<usize>> = vec![Vec::new(); map.vertex_count];
    let mut pos_at = vec![usize::MAX; m];
    let mut visited = vec![false; m];
    for start in 0..m {
        if visited[start] {
            continue;
        }
        let v = map.origin[start];
        let mut h = start;
        while !visited[h] {
            visited[h] = true;
            if down(h) {
                pos_at[h] = downs_at[v].len();
                downs_at[v].push(h);
            }
            h = map.rotation[h];
        }
    }
    // Marked corners of every face, in face order.
    let mut downs_of_face: Vec<Vec<usize>> = vec![Vec::new(); faces.count()];
    let mut pos_in_face = vec![usize::MAX; m];
    let mut seen = vec![false; faces.count()];
    for start in 0..m {
        let f = faces.face_of[start];
        if seen[f] {
            continue;
        }
        seen[f] = true;
        let mut h = start;
        loop {
            let g = twin(h);
            if down(g) {
                pos_in_face[g] = downs_of_face[f].len();
                downs_of_face[f].push(g);
            }
            h = map.face_next(h);
            if h == start {
                break;
            }
        }
    }

    let mut children: Vec<usize> = Vec::with_capacity(m / 2 + 1);
    let mut labels: Vec<i64> = Vec::with_capacity(m / 2 + 1);
    let base = dist[up] as i64;
    // Stack of (white vertex, its blacks starting after the edge to its parent, position).
    struct Frame {
        white: usize,
        start: usize,
        len: usize,
        t: usize,
    }
    let frame_for = |g_parent: Option<usize>, white: usize, first: usize| -> Frame {
        let deg = downs_at[white].len();
        match g_parent {
            None => Frame { white, start: first, len: deg, t: 0 },
            Some(g) => Frame { white, start: pos_at[g] + 1, len: deg - 1, t: 0 },
        }
    };
    // Depth-first emission in lexicographic order: a pending item is either a
    // chain node (frame) or a white reached through a black.
    enum Item {
        Node(Frame),
        White(usize),
    }
    let mut stack = vec![Item::Node(frame_for(None, up, pos_at[map.root]))];
    while let Some(item) = stack.pop() {
        let frame = match item {
            Item::Node(f) => f,
            Item::White(g) => frame_for(Some(g), map.origin[g], 0),
        };
        labels.push(dist[frame.white] as i64 - base);
        if frame.t == frame.len {
            children.push(0);
            continue;
        }
        let list = &downs_at[frame.white];
        let g = list[(frame.start + frame.t) % list.len()];
        let f = faces.face_of[twin(g)];
        let around_black = &downs_of_face[f];
        let k = around_black.len();
        children.push(k);
        let at = pos_in_face[g];
        // Children in order: whites after g around the black, then the next chain node.
        stack.push(Item::Node(Frame { t: frame.t + 1, ..frame }));
        for j in (1..k).rev() {
            stack.push(Item::White(around_black[(at + k - j) % k]));
        }
    }
    let tree = PlaneTree::from_children(children)
        .map_err(|e| Error::InvalidInput(format!("map does not unfold into a tree: {e}")))?;
    LabelledTree::new(tree, labels)
}

/// One named check of a validation report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, name: &'static str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name, passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Structural checks of a pointed map: rotation system, genus 0, bipartite
/// faces, handshake identity, distances, and root orientation.
pub fn validate_map(map: &PointedMap) -> Report {
    let mut r = Report::default();
    let m = map.origin.len();
    let e = m / 2;
    let mut is_perm = map.rotation.len() == m && m % 2 == 0;
    if is_perm {
        let mut hit = vec![false; m];
        for &h in &map.rotation {
            if h >= m || hit[h] {
                is_perm = false;
                break;
            }
            hit[h] = true;
        }
    }
    let bad_origin = (0..m).find(|&h| is_perm && map.origin[map.rotation[h]] != map.origin[h]);
    r.push(
        "rotation system",
        is_perm && bad_origin.is_none() && map.origin.iter().all(|&o| o < map.vertex_count),
        match bad_origin {
            Some(h) => format!("half-edge {h} rotates to another vertex"),
            None if is_perm => String::new(),
            None => "rotation is not a permutation of the half-edges".into(),
        },
    );
    if !is_perm {
        return r;
    }
    let faces = map.faces();
    let chi = map.vertex_count as i64 - e as i64 + faces.count() as i64;
    r.push("euler", chi == 2, format!("V - E + F = {} - {} + {} = {chi}", map.vertex_count, e, faces.count()));
    let odd = faces.degrees.iter().position(|d| d % 2 == 1);
    r.push("even faces", odd.is_none(), odd.map_or(String::new(), |f| format!("face {f} has degree {}", faces.degrees[f])));
    let total: usize = faces.degrees.iter().sum();
    r.push("degree sum", total == 2 * e, format!("sum of face degrees {total}, 2E = {}", 2 * e));
    let bad_step = (0..e).find(|&i| map.dist[map.origin[2 * i]].abs_diff(map.dist[map.origin[2 * i + 1]]) != 1);
    r.push("unit label steps", bad_step.is_none(), bad_step.map_or(String::new(), |i| format!("edge {i}")));
    let bfs = map.adjacency().bfs(map.star);
    let bad_dist = (0..map.vertex_count).find(|&v| bfs[v] != map.dist[v]);
    r.push(
        "distances",
        bad_dist.is_none(),
        bad_dist.map_or(String::new(), |v| format!("vertex {v}: recorded {} but graph distance {}", map.dist[v], bfs[v])),
    );
    r.push("negative root", map.is_negative(), "");
    r
}

/// Checks that a map built from `lt` has the announced correspondences:
/// leaves ↔ non-distinguished vertices, internal vertices ↔ faces with
/// degree twice the number of children, equal edge counts, root face ↔ root.
pub fn validate_correspondence(lt: &LabelledTree, map: &PointedMap, links: &TreeLinks) -> Report {
    let tree = &lt.tree;
    let mut r = Report::default();
    r.push("edges", map.edge_count() == tree.edge_count(), format!("{} vs {}", map.edge_count(), tree.edge_count()));
    r.push(
        "vertices",
        map.vertex_count == tree.leaf_count() + 1,
        format!("{} vs {} leaves + 1", map.vertex_count, tree.leaf_count()),
    );
    r.push(
        "faces",
        links.faces.count() == tree.internal_count(),
        format!("{} vs {} internal vertices", links.faces.count(), tree.internal_count()),
    );
    let mut used = vec![false; links.faces.count()];
    let mut bad = None;
    for u in 0..tree.vertex_count() {
        if let Some(f) = links.face_of[u] {
            if links.faces.degrees[f] != 2 * tree.k(u) || std::mem::replace(&mut used[f], true) {
                bad = Some(u);
                break;
            }
        }
    }
    r.push("face degrees", bad.is_none(), bad.map_or(String::new(), |u| format!("internal vertex {u}")));
    r.push(
        "root face",
        links.face_of[0] == Some(map.root_face(&links.faces)),
        "",
    );
    r.push("distance identity", label_distance_identity(lt, map, links), "");
    r
}

/// `ℓ(u) - min ℓ + 1` equals the graph distance from `u`'s vertex to `⋆`, for every leaf.
pub fn label_distance_identity(lt: &LabelledTree, map: &PointedMap, links: &TreeLinks) -> bool {
    let bfs = map.adjacency().bfs(map.star);
    let min = lt.min_label();
    (0..lt.tree.vertex_count())
        .filter(|&u| lt.tree.k(u) == 0)
        .all(|u| bfs[links.vertex_of[u]] as i64 == lt.labels[u] - min + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{all_labellings, label_tree};
    use crate::trees::{all_trees, sample_conditioned, ConditioningSpec, OffspringSet};
    use crate::weights::OffspringLaw;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn lt(k: &[usize], labels: &[i64]) -> LabelledTree {
        LabelledTree::new(PlaneTree::from_children(k.to_vec()).unwrap(), labels.to_vec()).unwrap()
    }

    fn check_all(lt: &LabelledTree) -> PointedMap {
        let (map, links) = tree_to_map_with_links(lt).unwrap();
        let report = validate_map(&map);
        assert!(report.passed(), "{lt:?}: {:?}", report.failures().collect::<Vec<_>>());
        let report = validate_correspondence(lt, &map, &links);
        assert!(report.passed(), "{lt:?}: {:?}", report.failures().collect::<Vec<_>>());
        assert_eq!(map_to_tree(&map).unwrap(), *lt);
        map
    }

    #[test]
    fn single_edge() {
        let t = lt(&[1, 0], &[0, 0]);
        let map = check_all(&t);
        assert_eq!((map.vertex_count, map.edge_count(), map.faces().degrees.clone()), (2, 1, vec![2]));
        assert_eq!(map.dist[0], 1);
    }

    #[test]
    fn two_edge_path() {
        let t = lt(&[2, 0, 0], &[0, -1, 0]);
        let map = check_all(&t);
        assert_eq!(map.vertex_count, 3);
        assert_eq!(map.faces().degrees, vec![4]);
        // Vertex 0 is the first leaf u_1, vertex 1 is the class of the root.
        assert_eq!(map.dist, vec![1, 2, 0]);
        let bfs = map.adjacency().bfs(map.star);
        assert_eq!(bfs, vec![1, 2, 0]);
    }

    #[test]
    fn singleton_is_rejected() {
        let t = lt(&[0], &[0]);
        assert!(matches!(tree_to_map(&t), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn exhaustive_round_trip_and_injectivity() {
        for edges in 1..=4 {
            let mut codes = HashSet::new();
            let mut count = 0;
            for t in all_trees(edges) {
                for l in all_labellings(&t) {
                    let map = check_all(&l);
                    assert!(codes.insert(map.canonical_code()), "two trees share a map: {l:?}");
                    count += 1;
                }
            }
            assert_eq!(codes.len(), count);
        }
    }

    #[test]
    fn positive_map_needs_reversal() {
        let t = lt(&[2, 0, 0], &[0, -1, 0]);
        let map = tree_to_map(&t).unwrap();
        let positive = map.reversed_root();
        assert!(!positive.is_negative());
        assert!(matches!(map_to_tree(&positive), Err(Error::PositiveMap)));
        assert_eq!(map_to_tree(&positive.reversed_root()).unwrap(), t);
    }

    #[test]
    fn removing_an_edge_breaks_euler() {
        let t = lt(&[2, 0, 0], &[0, -1, 0]);
        let mut map = tree_to_map(&t).unwrap();
        // Drop the last edge from the rotation system and the edge list.
        let last = map.edge_count() - 1;
        for h in [2 * last, 2 * last + 1] {
            if let Some(prev) = (0..map.rotation.len()).find(|&g| g != h && map.rotation[g] == h) {
                map.rotation[prev] = map.rotation[h];
            }
        }
        map.origin.truncate(2 * last);
        map.rotation.truncate(2 * last);
        let report = validate_map(&map);
        assert!(report.get("rotation system").unwrap().passed);
        assert!(!report.get("euler").unwrap().passed);
        assert!(report.get("degree sum").unwrap().passed);
    }

    #[test]
    fn canonical_code_ignores_half_edge_names() {
        let t = lt(&[3, 0, 1, 0, 0], &[0, 1, 0, 0, 0]);
        let map = tree_to_map(&t).unwrap();
        // Swap the names of edges 0 and 1.
        let m = map.origin.len();
        let rename = |h: usize| match h / 2 {
            0 => h + 2,
            1 => h - 2,
            _ => h,
        };
        let mut other = map.clone();
        for h in 0..m {
            other.origin[rename(h)] = map.origin[h];
            other.rotation[rename(h)] = rename(map.rotation[h]);
        }
        other.root = rename(map.root);
        assert_eq!(other.canonical_code(), map.canonical_code());
        assert_eq!(map_to_tree(&other).unwrap(), t);
    }

    fn random_labelled(n: usize, seed: u64) -> LabelledTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let law = OffspringLaw::from_pmf(vec![0.45, 0.25, 0.2, 0.05, 0.05]).unwrap();
        let t = sample_conditioned(&law, &ConditioningSpec::new(OffspringSet::All, n), &mut rng).unwrap();
        label_tree(&t, &mut rng)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_round_trip(n in 2usize..600, seed: u64) {
            let l = random_labelled(n, seed);
            let (map, links) = tree_to_map_with_links(&l).unwrap();
            prop_assert!(validate_map(&map).passed());
            prop_assert!(validate_correspondence(&l, &map, &links).passed());
            prop_assert_eq!(map_to_tree(&map).unwrap(), l);
        }
    }
}
