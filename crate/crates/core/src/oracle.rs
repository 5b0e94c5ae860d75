//! Exact policy optimization over complete fixed-depth decision trees.
//!
//! Given contexts `x_i`, score rows `γ_i ∈ R^d` and non-negative weights
//! `w_i`, [`solve_opo`] returns
//!
//! ```text
//! argmax_π Σ_i w_i · γ_i(π(x_i))
//! ```
//!
//! over all complete depth-`k` trees whose thresholds come from the candidate
//! set: the `-inf` sentinel plus midpoints between consecutive distinct
//! observed values of each feature. Weights are folded into the score rows
//! up front and the search runs on the scaled rows.
//!
//! Depth 1 is a sort-then-sweep over each feature. Deeper trees enumerate
//! root splits in sorted order, moving one point at a time from the right
//! child to the left, and recurse; for depth 2 this costs
//! `O(p² n² d + p n log n)`.
//!
//! Ties are broken by lowest action index at leaves, then lowest feature
//! index, then smallest threshold at splits.

use std::collections::HashSet;

use crate::data::{TreeNode, TreePolicy};
use crate::error::{Error, Result};
use crate::par;

/// Contexts, score rows and per-example weights fed to the oracle.
#[derive(Debug, Clone)]
pub struct WeightedExamples {
    contexts: Vec<f64>,
    context_dim: usize,
    scores: Vec<f64>,
    action_count: usize,
    weights: Vec<f64>,
}

impl WeightedExamples {
    pub fn new(
        contexts: Vec<f64>,
        context_dim: usize,
        scores: Vec<f64>,
        action_count: usize,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = weights.len();
        if context_dim == 0 || action_count == 0 {
            return Err(Error::invalid("context dimension and action count must be positive"));
        }
        if contexts.len() != n * context_dim {
            return Err(Error::DimensionMismatch {
                expected: n * context_dim,
                actual: contexts.len(),
            });
        }
        if scores.len() != n * action_count {
            return Err(Error::DimensionMismatch {
                expected: n * action_count,
                actual: scores.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!(
                "weight {} at example {i} is not finite and non-negative",
                weights[i]
            )));
        }
        if contexts.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("NaN context value"));
        }
        Ok(Self {
            contexts,
            context_dim,
            scores,
            action_count,
            weights,
        })
    }

    /// Unit weights.
    pub fn unweighted(
        contexts: Vec<f64>,
        context_dim: usize,
        scores: Vec<f64>,
        action_count: usize,
    ) -> Result<Self> {
        let n = scores.len() / action_count.max(1);
        Self::new(contexts, context_dim, scores, action_count, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn contexts(&self) -> &[f64] {
        &self.contexts
    }

    #[inline]
    pub fn context(&self, i: usize) -> &[f64] {
        &self.contexts[i * self.context_dim..(i + 1) * self.context_dim]
    }

    #[inline]
    pub fn score_row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.action_count..(i + 1) * self.action_count]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Score rows multiplied by their weights, row-major `N × d`.
    pub fn scaled_scores(&self) -> Vec<f64> {
        let d = self.action_count;
        let mut out = self.scores.clone();
        for (row, &w) in out.chunks_exact_mut(d).zip(&self.weights) {
            for g in row {
                *g *= w;
            }
        }
        out
    }

    /// `Σ_i w_i γ_i(π(x_i))`, summed in example order.
    pub fn objective(&self, policy: &TreePolicy) -> f64 {
        let d = self.action_count;
        let mut total = 0.0;
        for i in 0..self.len() {
            let a = policy.act(self.context(i));
            total += self.weights[i] * self.scores[i * d + a];
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub policy: TreePolicy,
    pub objective: f64,
}

/// Per-feature candidate thresholds and ranks, shared by the sweep search,
/// the naive search and enumeration.
#[derive(Debug)]
struct FeatureIndex {
    /// Example indices sorted by `(x_ij, i)`.
    order: Vec<Vec<u32>>,
    /// `rank[j][i]`: position of `x_ij` among the distinct values of feature `j`.
    rank: Vec<Vec<u32>>,
    /// `cuts[j][r]`: threshold separating distinct values `r` and `r + 1`.
    cuts: Vec<Vec<f64>>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    if a <= m && m < b {
        m
    } else {
        a
    }
}

impl FeatureIndex {
    fn build(contexts: &[f64], n: usize, p: usize) -> Self {
        let mut order = Vec::with_capacity(p);
        let mut rank = Vec::with_capacity(p);
        let mut cuts = Vec::with_capacity(p);
        for j in 0..p {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| {
                contexts[a as usize * p + j]
                    .total_cmp(&contexts[b as usize * p + j])
                    .then(a.cmp(&b))
            });
            let mut rk = vec![0u32; n];
            let mut cut = Vec::new();
            let mut r = 0u32;
            for w in 0..idx.len() {
                let i = idx[w] as usize;
                if w > 0 {
                    let prev = contexts[idx[w - 1] as usize * p + j];
                    let cur = contexts[i * p + j];
                    if cur > prev {
                        cut.push(midpoint(prev, cur));
                        r += 1;
                    }
                }
                rk[i] = r;
            }
            order.push(idx);
            rank.push(rk);
            cuts.push(cut);
        }
        Self { order, rank, cuts }
    }
}

fn argmax(v: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for a in 1..v.len() {
        if v[a] > v[best] {
            best = a;
        }
    }
    (best, v[best])
}

/// Subtree in level order plus its (sweep-computed) value.
#[derive(Debug, Clone)]
struct Subtree {
    value: f64,
    nodes: Vec<TreeNode>,
}

/// Level-order layout of a tree from its root and two subtrees of equal depth.
fn join(root: TreeNode, left: &[TreeNode], right: &[TreeNode]) -> Vec<TreeNode> {
    let mut nodes = Vec::with_capacity(1 + left.len() + right.len());
    nodes.push(root);
    let mut start = 0;
    let mut width = 1;
    while start < left.len() {
        nodes.extend_from_slice(&left[start..start + width]);
        nodes.extend_from_slice(&right[start..start + width]);
        start += width;
        width *= 2;
    }
    nodes
}

/// Depth-1 tree found by a sweep.
#[derive(Debug, Clone, Copy)]
struct Stump {
    value: f64,
    feature: usize,
    threshold: f64,
    left: usize,
    right: usize,
}

impl Stump {
    fn nodes(&self) -> [TreeNode; 3] {
        [
            TreeNode::Split {
                feature: self.feature,
                threshold: self.threshold,
            },
            TreeNode::Leaf { action: self.left },
            TreeNode::Leaf { action: self.right },
        ]
    }
}

fn depth2_subtree(j: usize, (value, threshold, [l, r]): (f64, f64, [Stump; 2])) -> Subtree {
    Subtree {
        value,
        nodes: join(TreeNode::Split { feature: j, threshold }, &l.nodes(), &r.nodes()),
    }
}

/// One feature's sweep order over a subset.
struct SortedFeature {
    idx: Vec<u32>,
    rank: Vec<u32>,
    /// Score rows in sweep order.
    g: Vec<f64>,
}

struct Search<'a> {
    /// Candidates must beat the incumbent by more than this to replace it, so
    /// that equal partitions reached through different summation orders keep
    /// the earliest candidate.
    tol: f64,
    n: usize,
    p: usize,
    d: usize,
    g: &'a [f64],
    index: &'a FeatureIndex,
}

impl Search<'_> {
    fn improves(&self, value: f64, incumbent: f64) -> bool {
        value > incumbent + self.tol
    }

    fn totals(&self, mask: &[bool]) -> Vec<f64> {
        let mut t = vec![0.0; self.d];
        for i in (0..self.n).filter(|&i| mask[i]) {
            for (ta, ga) in t.iter_mut().zip(&self.g[i * self.d..(i + 1) * self.d]) {
                *ta += ga;
            }
        }
        t
    }

    fn leaf(&self, mask: &[bool]) -> Subtree {
        let (a, v) = argmax(&self.totals(mask));
        Subtree {
            value: v,
            nodes: vec![TreeNode::Leaf { action: a }],
        }
    }

    fn best(&self, mask: &[bool], depth: usize) -> Subtree {
        match depth {
            0 => self.leaf(mask),
            1 => self.stump(mask),
            2 => self.depth2(mask),
            _ => {
                let mut best: Option<Subtree> = None;
                for j in 0..self.p {
                    let cand = self.best_for_feature(mask, depth, j);
                    if best.as_ref().is_none_or(|b| self.improves(cand.value, b.value)) {
                        best = Some(cand);
                    }
                }
                best.expect("p >= 1")
            }
        }
    }

    /// Best depth-1 tree on the masked subset.
    fn stump(&self, mask: &[bool]) -> Subtree {
        let d = self.d;
        let total = self.totals(mask);
        let (right0, v0) = argmax(&total);
        // -inf sentinel on feature 0: empty left leaf takes action 0
        let mut best_value = v0;
        let mut best = (0usize, f64::NEG_INFINITY, 0usize, right0);
        let mut prefix = vec![0.0; d];
        let mut rest = vec![0.0; d];
        for j in 0..self.p {
            prefix.iter_mut().for_each(|v| *v = 0.0);
            let order = &self.index.order[j];
            let rank = &self.index.rank[j];
            let mut pending: Option<usize> = None;
            for &i in order {
                let i = i as usize;
                if !mask[i] {
                    continue;
                }
                if let Some(prev) = pending {
                    if rank[i] > rank[prev] {
                        for a in 0..d {
                            rest[a] = total[a] - prefix[a];
                        }
                        let (la, lv) = argmax(&prefix);
                        let (ra, rv) = argmax(&rest);
                        let v = lv + rv;
                        if self.improves(v, best_value) {
                            best_value = v;
                            best = (j, self.index.cuts[j][rank[prev] as usize], la, ra);
                        }
                    }
                }
                for (pa, ga) in prefix.iter_mut().zip(&self.g[i * d..(i + 1) * d]) {
                    *pa += ga;
                }
                pending = Some(i);
            }
        }
        Subtree {
            value: best_value,
            nodes: vec![
                TreeNode::Split {
                    feature: best.0,
                    threshold: best.1,
                },
                TreeNode::Leaf { action: best.2 },
                TreeNode::Leaf { action: best.3 },
            ],
        }
    }

    /// Per-feature orders restricted to the masked subset, with ranks and
    /// scores gathered into sweep order.
    fn subset_orders(&self, mask: &[bool]) -> Vec<SortedFeature> {
        let d = self.d;
        self.index
            .order
            .iter()
            .zip(&self.index.rank)
            .map(|(o, rank)| {
                let idx: Vec<u32> = o.iter().copied().filter(|&i| mask[i as usize]).collect();
                let ranks = idx.iter().map(|&i| rank[i as usize]).collect();
                let g = idx
                    .iter()
                    .flat_map(|&i| &self.g[i as usize * d..(i as usize + 1) * d])
                    .copied()
                    .collect();
                SortedFeature { idx, rank: ranks, g }
            })
            .collect()
    }

    fn side_totals(&self, side: &[u8], which: u8) -> Vec<f64> {
        let mut t = vec![0.0; self.d];
        for i in (0..self.n).filter(|&i| side[i] == which) {
            for (ta, ga) in t.iter_mut().zip(&self.g[i * self.d..(i + 1) * self.d]) {
                *ta += ga;
            }
        }
        t
    }

    /// Best stumps on both sides of a root split in one sweep per feature.
    /// `side[i]` is 1 for left and 2 for right for every point in `orders`.
    fn stump_pair(&self, orders: &[SortedFeature], side: &[u8]) -> [Stump; 2] {
        match self.d {
            2 => self.stump_pair_fixed::<2>(orders, side),
            3 => self.stump_pair_fixed::<3>(orders, side),
            4 => self.stump_pair_fixed::<4>(orders, side),
            _ => self.stump_pair_dyn(orders, side),
        }
    }

    fn stump_pair_fixed<const D: usize>(&self, orders: &[SortedFeature], side: &[u8]) -> [Stump; 2] {
        let totals: [[f64; D]; 2] = [1, 2].map(|w| {
            let mut t = [0.0; D];
            t.copy_from_slice(&self.side_totals(side, w));
            t
        });
        let mut best = totals.map(|t| {
            let (a, v) = argmax(&t);
            Stump {
                value: v,
                feature: 0,
                threshold: f64::NEG_INFINITY,
                left: 0,
                right: a,
            }
        });
        for (f, sorted) in orders.iter().enumerate() {
            let cuts = &self.index.cuts[f];
            let g: &[[f64; D]] = sorted.g.as_chunks::<D>().0;
            let mut prefix = [[0.0; D]; 2];
            let mut last = [u32::MAX; 2];
            for ((&i, &r), gi) in sorted.idx.iter().zip(&sorted.rank).zip(g) {
                let s = (side[i as usize] - 1) as usize;
                if r > last[s] {
                    let pre = &prefix[s];
                    let mut rest = [0.0; D];
                    for a in 0..D {
                        rest[a] = totals[s][a] - pre[a];
                    }
                    let (la, lv) = argmax(pre);
                    let (ra, rv) = argmax(&rest);
                    let v = lv + rv;
                    if self.improves(v, best[s].value) {
                        best[s] = Stump {
                            value: v,
                            feature: f,
                            threshold: cuts[last[s] as usize],
                            left: la,
                            right: ra,
                        };
                    }
                }
                for a in 0..D {
                    prefix[s][a] += gi[a];
                }
                last[s] = r;
            }
        }
        best
    }

    fn stump_pair_dyn(&self, orders: &[SortedFeature], side: &[u8]) -> [Stump; 2] {
        let d = self.d;
        let mut totals = self.side_totals(side, 1);
        totals.extend(self.side_totals(side, 2));
        let mut best = [0, 1].map(|s| {
            let (a, v) = argmax(&totals[s * d..(s + 1) * d]);
            Stump {
                value: v,
                feature: 0,
                threshold: f64::NEG_INFINITY,
                left: 0,
                right: a,
            }
        });
        // both sides' prefix sums, side-major
        let mut prefix = vec![0.0; 2 * d];
        let mut rest = vec![0.0; d];
        for (f, sorted) in orders.iter().enumerate() {
            let cuts = &self.index.cuts[f];
            prefix.iter_mut().for_each(|v| *v = 0.0);
            let mut last = [u32::MAX; 2];
            for ((&i, &r), gi) in sorted.idx.iter().zip(&sorted.rank).zip(sorted.g.chunks_exact(d)) {
                let s = (side[i as usize] - 1) as usize;
                let pre = &mut prefix[s * d..(s + 1) * d];
                if r > last[s] {
                    for ((x, t), p) in rest.iter_mut().zip(&totals[s * d..(s + 1) * d]).zip(pre.iter()) {
                        *x = t - p;
                    }
                    let (la, lv) = argmax(pre);
                    let (ra, rv) = argmax(&rest);
                    let v = lv + rv;
                    if self.improves(v, best[s].value) {
                        best[s] = Stump {
                            value: v,
                            feature: f,
                            threshold: cuts[last[s] as usize],
                            left: la,
                            right: ra,
                        };
                    }
                }
                for (pa, ga) in pre.iter_mut().zip(gi) {
                    *pa += ga;
                }
                last[s] = r;
            }
        }
        best
    }

    /// Best depth-2 tree on a subset whose root splits on feature `j`.
    fn depth2_root(&self, orders: &[SortedFeature], j: usize) -> (f64, f64, [Stump; 2]) {
        let rank = &self.index.rank[j];
        let mut side = vec![0u8; self.n];
        for &i in &orders[j].idx {
            side[i as usize] = 2;
        }
        let pair = self.stump_pair(orders, &side);
        let mut best = (pair[0].value + pair[1].value, f64::NEG_INFINITY, pair);
        let mut pending: Option<usize> = None;
        for &i in &orders[j].idx {
            let i = i as usize;
            if let Some(prev) = pending {
                if rank[i] > rank[prev] {
                    let pair = self.stump_pair(orders, &side);
                    let v = pair[0].value + pair[1].value;
                    if self.improves(v, best.0) {
                        best = (v, self.index.cuts[j][rank[prev] as usize], pair);
                    }
                }
            }
            side[i] = 1;
            pending = Some(i);
        }
        best
    }

    fn depth2(&self, mask: &[bool]) -> Subtree {
        let orders = self.subset_orders(mask);
        let mut best: Option<(usize, (f64, f64, [Stump; 2]))> = None;
        for j in 0..self.p {
            let cand = self.depth2_root(&orders, j);
            if best.as_ref().is_none_or(|b| self.improves(cand.0, b.1 .0)) {
                best = Some((j, cand));
            }
        }
        let (j, found) = best.expect("p >= 1");
        depth2_subtree(j, found)
    }

    /// Best tree of depth `depth >= 2` whose root splits on feature `j`.
    fn best_for_feature(&self, mask: &[bool], depth: usize, j: usize) -> Subtree {
        let order = &self.index.order[j];
        let rank = &self.index.rank[j];
        let mut left = vec![false; self.n];
        let mut right = mask.to_vec();
        let eval = |left: &[bool], right: &[bool], threshold: f64| {
            let l = self.best(left, depth - 1);
            let r = self.best(right, depth - 1);
            Subtree {
                value: l.value + r.value,
                nodes: join(TreeNode::Split { feature: j, threshold }, &l.nodes, &r.nodes),
            }
        };
        let mut best = eval(&left, &right, f64::NEG_INFINITY);
        let mut pending: Option<usize> = None;
        for &i in order {
            let i = i as usize;
            if !mask[i] {
                continue;
            }
            if let Some(prev) = pending {
                if rank[i] > rank[prev] {
                    let cand = eval(&left, &right, self.index.cuts[j][rank[prev] as usize]);
                    if self.improves(cand.value, best.value) {
                        best = cand;
                    }
                }
            }
            left[i] = true;
            right[i] = false;
            pending = Some(i);
        }
        best
    }
}

/// Relative slack used when comparing candidate values.
fn tie_tolerance(g: &[f64]) -> f64 {
    1e-12 * g.iter().map(|v| v.abs()).sum::<f64>()
}

fn check_examples(examples: &WeightedExamples) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::invalid("oracle needs at least one example"));
    }
    let d = examples.action_count;
    if let Some(k) = examples.scores.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            source_id: "<oracle>".into(),
            row: k / d,
            action: k % d,
        });
    }
    Ok(())
}

/// Exact maximizer of the weighted score objective over depth-`depth` trees.
///
/// The reported objective is recomputed from the returned policy with
/// [`WeightedExamples::objective`].
pub fn solve_opo(examples: &WeightedExamples, depth: usize) -> Result<OracleSolution> {
    check_examples(examples)?;
    let n = examples.len();
    let p = examples.context_dim;
    let g = examples.scaled_scores();
    let index = FeatureIndex::build(&examples.contexts, n, p);
    let search = Search {
        tol: tie_tolerance(&g),
        n,
        p,
        d: examples.action_count,
        g: &g,
        index: &index,
    };
    let all = vec![true; n];
    let tree = if depth == 2 {
        let orders = search.subset_orders(&vec![true; n]);
        let per_feature = par::map_range(p, |j| search.depth2_root(&orders, j));
        let mut best = (0, per_feature[0]);
        for (j, cand) in per_feature.into_iter().enumerate().skip(1) {
            if search.improves(cand.0, best.1 .0) {
                best = (j, cand);
            }
        }
        depth2_subtree(best.0, best.1)
    } else if depth > 2 {
        // root features searched in parallel, reduced in feature order
        let per_feature = par::map_range(p, |j| search.best_for_feature(&all, depth, j));
        let mut best = per_feature[0].clone();
        for cand in per_feature.into_iter().skip(1) {
            if search.improves(cand.value, best.value) {
                best = cand;
            }
        }
        best
    } else {
        search.best(&all, depth)
    };
    let policy = TreePolicy::new(depth, tree.nodes).expect("search builds complete trees");
    let objective = examples.objective(&policy);
    Ok(OracleSolution { policy, objective })
}

/// Reference search that re-partitions by full scans at every candidate.
/// Same candidate set and tie-breaking as [`solve_opo`]; `O(p^k n^(k+1) d)`.
pub fn solve_opo_naive(examples: &WeightedExamples, depth: usize) -> Result<OracleSolution> {
    check_examples(examples)?;
    let n = examples.len();
    let p = examples.context_dim;
    let d = examples.action_count;
    let g = examples.scaled_scores();
    let index = FeatureIndex::build(&examples.contexts, n, p);

    let tol = tie_tolerance(&g);

    #[allow(clippy::too_many_arguments)]
    fn rec(
        tol: f64,
        subset: &[usize],
        depth: usize,
        p: usize,
        d: usize,
        g: &[f64],
        index: &FeatureIndex,
    ) -> Subtree {
        let sums = |set: &[usize]| {
            let mut t = vec![0.0; d];
            for &i in set {
                for a in 0..d {
                    t[a] += g[i * d + a];
                }
            }
            t
        };
        if depth == 0 {
            let (a, v) = argmax(&sums(subset));
            return Subtree {
                value: v,
                nodes: vec![TreeNode::Leaf { action: a }],
            };
        }
        let mut best: Option<Subtree> = None;
        for j in 0..p {
            let mut ranks: Vec<u32> = subset.iter().map(|&i| index.rank[j][i]).collect();
            ranks.sort_unstable();
            ranks.dedup();
            let mut thresholds = vec![(f64::NEG_INFINITY, None)];
            for r in ranks.iter().take(ranks.len().saturating_sub(1)) {
                thresholds.push((index.cuts[j][*r as usize], Some(*r)));
            }
            for (threshold, cut_rank) in thresholds {
                let (left, right): (Vec<usize>, Vec<usize>) = subset
                    .iter()
                    .partition(|&&i| cut_rank.is_some_and(|r| index.rank[j][i] <= r));
                let l = rec(tol, &left, depth - 1, p, d, g, index);
                let r = rec(tol, &right, depth - 1, p, d, g, index);
                let value = l.value + r.value;
                if best.as_ref().is_none_or(|b| value > b.value + tol) {
                    best = Some(Subtree {
                        value,
                        nodes: join(TreeNode::Split { feature: j, threshold }, &l.nodes, &r.nodes),
                    });
                }
            }
        }
        best.expect("p >= 1")
    }

    let all: Vec<usize> = (0..n).collect();
    let tree = rec(tol, &all, depth, p, d, &g, &index);
    let policy = TreePolicy::new(depth, tree.nodes).expect("complete tree");
    let objective = examples.objective(&policy);
    Ok(OracleSolution { policy, objective })
}

/// Number of syntactically distinct depth-`depth` trees over the candidate
/// thresholds of `contexts`; saturates at `u128::MAX`.
pub fn policy_count(contexts: &[f64], p: usize, d: usize, depth: usize) -> u128 {
    let n = contexts.len() / p.max(1);
    let index = FeatureIndex::build(contexts, n, p);
    let splits: u128 = index.cuts.iter().map(|c| c.len() as u128 + 1).sum();
    let internal = (1u32 << depth) - 1;
    let leaves = 1u32 << depth;
    let mut count: u128 = 1;
    for _ in 0..internal {
        count = count.saturating_mul(splits);
    }
    for _ in 0..leaves {
        count = count.saturating_mul(d as u128);
    }
    count
}

/// One representative tree per distinct action pattern on `contexts`,
/// found by enumerating every complete depth-`depth` tree over the candidate
/// thresholds. Fails when that enumeration would exceed `budget` trees.
pub fn enumerate_policies(
    contexts: &[f64],
    p: usize,
    d: usize,
    depth: usize,
    budget: u128,
) -> Result<Vec<TreePolicy>> {
    if p == 0 || contexts.len() % p != 0 {
        return Err(Error::invalid("contexts must be a non-empty N × p matrix"));
    }
    let required = policy_count(contexts, p, d, depth);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let n = contexts.len() / p;
    let index = FeatureIndex::build(contexts, n, p);
    let mut splits = Vec::new();
    for j in 0..p {
        splits.push((j, f64::NEG_INFINITY));
        splits.extend(index.cuts[j].iter().map(|&t| (j, t)));
    }
    let internal = (1usize << depth) - 1;
    let leaves = 1usize << depth;

    // structures first: distinct leaf partitions of the contexts
    let mut structures: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut partitions: HashSet<Vec<u16>> = HashSet::new();
    let mut choice = vec![0usize; internal];
    loop {
        let nodes: Vec<TreeNode> = choice
            .iter()
            .map(|&c| TreeNode::Split {
                feature: splits[c].0,
                threshold: splits[c].1,
            })
            .chain((0..leaves).map(|_| TreeNode::Leaf { action: 0 }))
            .collect();
        let tree = TreePolicy::new(depth, nodes).expect("complete");
        let part: Vec<u16> = contexts
            .chunks_exact(p)
            .map(|x| tree.leaf_index(x) as u16)
            .collect();
        if partitions.insert(part) {
            structures.push(choice.iter().map(|&c| splits[c]).collect());
        }
        // odometer increment
        let mut k = 0;
        while k < internal {
            choice[k] += 1;
            if choice[k] < splits.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == internal {
            break;
        }
    }

    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut out = Vec::new();
    for structure in &structures {
        let mut actions = vec![0usize; leaves];
        loop {
            let nodes: Vec<TreeNode> = structure
                .iter()
                .map(|&(feature, threshold)| TreeNode::Split { feature, threshold })
                .chain(actions.iter().map(|&action| TreeNode::Leaf { action }))
                .collect();
            let tree = TreePolicy::new(depth, nodes).expect("complete");
            let behavior: Vec<u8> = contexts.chunks_exact(p).map(|x| tree.act(x) as u8).collect();
            if seen.insert(behavior) {
                out.push(tree);
            }
            let mut k = 0;
            while k < leaves {
                actions[k] += 1;
                if actions[k] < d {
                    break;
                }
                actions[k] = 0;
                k += 1;
            }
            if k == leaves {
                break;
            }
        }
    }
    Ok(out)
}
