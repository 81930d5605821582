//! Complete-linkage agglomerative clustering of station positions.
//!
//! The merge tree is built once; any distance threshold is then a prefix of
//! its merge sequence, so a sweep over many thresholds costs one build.
//!
//! Clusters are labelled by their smallest leaf index. At every step the
//! pair `(a, b)`, `a < b`, with the smallest complete-linkage distance is
//! merged; ties go to the smallest `a`, then the smallest `b`. Since the
//! merged cluster keeps label `a`, which is also its smallest leaf, this
//! order is the lexicographic order on minimum leaf ids.
//!
//! Construction follows the generic priority-queue scheme: each row `i`
//! caches its nearest neighbour among larger labels. Complete-linkage
//! distances only grow under merging, so a cached value is always a lower
//! bound on the row's true minimum and stale rows can be refreshed lazily
//! when they reach the top of the queue.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::geo::{distance, PlanePoint};

/// Station count above which [`TreeBuilder`] stops materializing the
/// pairwise distance matrix and recomputes cluster distances from member
/// positions instead.
pub const DEFAULT_MATRIX_LIMIT: usize = 16_384;

/// One agglomeration step: clusters `a` and `b` (labels, `a < b`) merge at
/// `distance` into a cluster of `size` leaves labelled `a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

/// Full complete-linkage dendrogram over `leaves` points.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeTree {
    leaves: usize,
    merges: Vec<Merge>,
}

impl MergeTree {
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// Merges in application order; distances are non-decreasing.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Applies every merge with `distance <= d_max`.
    pub fn cut(&self, d_max: f64) -> Partition {
        cut_at_threshold(self, d_max)
    }
}

/// Disjoint clusters of leaf indices covering every leaf.
///
/// Members are sorted within a cluster and clusters are sorted by their
/// smallest member, so two partitions of the same leaves compare equal iff
/// they group leaves identically.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub d_max: f64,
    pub clusters: Vec<Vec<usize>>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn leaves(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Mean number of leaves per cluster.
    pub fn mean_cluster_size(&self) -> f64 {
        if self.clusters.is_empty() {
            0.0
        } else {
            self.leaves() as f64 / self.clusters.len() as f64
        }
    }

    /// Builds the canonical form from arbitrary groups.
    pub fn from_groups(d_max: f64, mut clusters: Vec<Vec<usize>>) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.retain(|c| !c.is_empty());
        clusters.sort_unstable_by_key(|c| c[0]);
        Self { d_max, clusters }
    }
}

/// Builder for [`MergeTree`] with a configurable memory strategy.
#[derive(Clone, Copy, Debug)]
pub struct TreeBuilder {
    /// Above this many points, cluster distances are recomputed on the fly
    /// (O(n) memory) instead of kept in an n(n-1)/2 matrix.
    pub matrix_limit: usize,
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self {
            matrix_limit: DEFAULT_MATRIX_LIMIT,
        }
    }
}

impl TreeBuilder {
    pub fn build(&self, points: &[PlanePoint]) -> MergeTree {
        if points.len() <= self.matrix_limit {
            build_with(points, CondensedDistances::new(points))
        } else {
            build_with(points, MemberDistances::new(points))
        }
    }
}

/// Builds the complete-linkage merge tree over `points` with default
/// settings.
pub fn build_merge_tree(points: &[PlanePoint]) -> MergeTree {
    TreeBuilder::default().build(points)
}

/// Partition obtained by applying, in order, every merge whose distance is
/// at most `d_max`. `d_max = 0` keeps coincident points together only;
/// `d_max = inf` yields a single cluster.
pub fn cut_at_threshold(tree: &MergeTree, d_max: f64) -> Partition {
    let mut uf = UnionFind::new(tree.leaves);
    for m in tree.merges.iter().take_while(|m| m.distance <= d_max) {
        uf.union_into(m.a, m.b);
    }
    let mut groups: Vec<Vec<usize>> = alloc::vec![Vec::new(); tree.leaves];
    for leaf in 0..tree.leaves {
        groups[uf.find(leaf)].push(leaf);
    }
    Partition::from_groups(d_max, groups)
}

/// Distance oracle between active clusters.
trait ClusterDistances {
    /// Complete-linkage distance between active clusters `i` and `j`.
    /// `bound` permits early exit: if the result exceeds `bound` any value
    /// greater than `bound` may be returned.
    fn get(&self, i: usize, j: usize, bound: f64) -> f64;
    /// Merges `b` into `a` (`a < b`).
    fn merge(&mut self, a: usize, b: usize, active: &[bool]);
}

struct CondensedDistances {
    n: usize,
    d: Vec<f64>,
}

impl CondensedDistances {
    fn new(points: &[PlanePoint]) -> Self {
        let n = points.len();
        let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                d.push(distance(points[i], points[j]));
            }
        }
        Self { n, d }
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }
}

impl ClusterDistances for CondensedDistances {
    fn get(&self, i: usize, j: usize, _bound: f64) -> f64 {
        self.d[self.index(i, j)]
    }

    fn merge(&mut self, a: usize, b: usize, active: &[bool]) {
        // Lance-Williams update for complete linkage
        for (k, &live) in active.iter().enumerate().take(self.n) {
            if k == a || k == b || !live {
                continue;
            }
            let ia = self.index(a, k);
            let ib = self.index(b, k);
            if self.d[ib] > self.d[ia] {
                self.d[ia] = self.d[ib];
            }
        }
    }
}

struct MemberDistances<'a> {
    points: &'a [PlanePoint],
    members: Vec<Vec<usize>>,
}

impl<'a> MemberDistances<'a> {
    fn new(points: &'a [PlanePoint]) -> Self {
        Self {
            points,
            members: (0..points.len()).map(|i| alloc::vec![i]).collect(),
        }
    }
}

impl ClusterDistances for MemberDistances<'_> {
    fn get(&self, i: usize, j: usize, bound: f64) -> f64 {
        let mut worst = 0.0f64;
        for &p in &self.members[i] {
            for &q in &self.members[j] {
                let d = distance(self.points[p], self.points[q]);
                if d > worst {
                    worst = d;
                    if worst > bound {
                        return worst;
                    }
                }
            }
        }
        worst
    }

    fn merge(&mut self, a: usize, b: usize, _active: &[bool]) {
        let moved = core::mem::take(&mut self.members[b]);
        self.members[a].extend(moved);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    distance: f64,
    row: usize,
    version: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.row.cmp(&other.row))
            .then(self.version.cmp(&other.version))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Smallest `(distance, j)` over active `j > i`.
fn row_minimum<D: ClusterDistances>(dist: &D, active: &[bool], i: usize) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (j, &live) in active.iter().enumerate().skip(i + 1) {
        if !live {
            continue;
        }
        let bound = best.map_or(f64::INFINITY, |b| b.0);
        let d = dist.get(i, j, bound);
        if best.is_none_or(|b| d < b.0) {
            best = Some((d, j));
        }
    }
    best
}

fn build_with<D: ClusterDistances>(points: &[PlanePoint], mut dist: D) -> MergeTree {
    let n = points.len();
    let mut active = alloc::vec![true; n];
    let mut sizes = alloc::vec![1usize; n];
    let mut version = alloc::vec![0u32; n];
    let mut heap: BinaryHeap<Reverse<Candidate>> = BinaryHeap::with_capacity(n);
    for i in 0..n {
        if let Some((d, _)) = row_minimum(&dist, &active, i) {
            heap.push(Reverse(Candidate {
                distance: d,
                row: i,
                version: 0,
            }));
        }
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while merges.len() + 1 < n {
        let Reverse(top) = heap.pop().expect("an active pair remains");
        let i = top.row;
        if !active[i] || version[i] != top.version {
            continue;
        }
        let Some((d, j)) = row_minimum(&dist, &active, i) else {
            continue;
        };
        if d > top.distance {
            // stale lower bound; requeue with the true row minimum
            heap.push(Reverse(Candidate {
                distance: d,
                row: i,
                version: top.version,
            }));
            continue;
        }

        dist.merge(i, j, &active);
        active[j] = false;
        sizes[i] += sizes[j];
        if let Some(last) = merges.last() {
            let last: &Merge = last;
            assert!(
                d >= last.distance,
                "complete-linkage merge distances must be non-decreasing"
            );
        }
        merges.push(Merge {
            a: i,
            b: j,
            distance: d,
            size: sizes[i],
        });

        version[i] += 1;
        if let Some((d, _)) = row_minimum(&dist, &active, i) {
            heap.push(Reverse(Candidate {
                distance: d,
                row: i,
                version: version[i],
            }));
        }
    }

    MergeTree { leaves: n, merges }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union_into(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[rb] = ra;
        }
    }
}
