//! Shared domain types: multi-source datasets, tree policies, mixture weights,
//! plus CSV and JSON I/O for them.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on `Σ λ_s = 1`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Logged bandit feedback from one source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceData {
    pub source_id: String,
    /// Row-major `n_s × p`.
    contexts: Vec<f64>,
    context_dim: usize,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub logged_propensities: Option<Vec<f64>>,
}

impl SourceData {
    pub fn new(
        source_id: impl Into<String>,
        contexts: Vec<f64>,
        context_dim: usize,
        actions: Vec<usize>,
        rewards: Vec<f64>,
        logged_propensities: Option<Vec<f64>>,
    ) -> Result<Self> {
        let source_id = source_id.into();
        if context_dim == 0 {
            return Err(Error::invalid("context dimension must be positive"));
        }
        let n = actions.len();
        if n == 0 {
            return Err(Error::invalid(format!("source `{source_id}` has no rows")));
        }
        if contexts.len() != n * context_dim {
            return Err(Error::DimensionMismatch {
                expected: n * context_dim,
                actual: contexts.len(),
            });
        }
        if rewards.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: rewards.len(),
            });
        }
        if let Some((i, _)) = contexts.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "source `{source_id}`: non-finite context in row {}",
                i / context_dim
            )));
        }
        if let Some(i) = rewards.iter().position(|y| !y.is_finite()) {
            return Err(Error::invalid(format!(
                "source `{source_id}`: non-finite reward in row {i}"
            )));
        }
        if let Some(props) = &logged_propensities {
            if props.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: props.len(),
                });
            }
            if let Some(i) = props.iter().position(|&e| !(e > 0.0 && e <= 1.0)) {
                return Err(Error::invalid(format!(
                    "source `{source_id}`: propensity {} in row {i} is outside (0, 1]",
                    props[i]
                )));
            }
        }
        Ok(Self {
            source_id,
            contexts,
            context_dim,
            actions,
            rewards,
            logged_propensities,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    #[inline]
    pub fn context(&self, i: usize) -> &[f64] {
        &self.contexts[i * self.context_dim..(i + 1) * self.context_dim]
    }

    pub fn contexts(&self) -> &[f64] {
        &self.contexts
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.contexts.chunks_exact(self.context_dim)
    }
}

/// All sources, sharing context dimension `p` and action count `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationalDataset {
    pub sources: Vec<SourceData>,
    context_dim: usize,
    action_count: usize,
}

impl ObservationalDataset {
    pub fn new(sources: Vec<SourceData>, action_count: usize) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::invalid("dataset has no sources"));
        }
        if action_count < 2 {
            return Err(Error::invalid("action count must be at least 2"));
        }
        let context_dim = sources[0].context_dim;
        for s in &sources {
            if s.context_dim != context_dim {
                return Err(Error::DimensionMismatch {
                    expected: context_dim,
                    actual: s.context_dim,
                });
            }
            if let Some(i) = s.actions.iter().position(|&a| a >= action_count) {
                return Err(Error::invalid(format!(
                    "source `{}`: action {} in row {i} is out of range [0, {action_count})",
                    s.source_id, s.actions[i]
                )));
            }
        }
        let mut seen = HashMap::new();
        for (k, s) in sources.iter().enumerate() {
            if seen.insert(s.source_id.as_str(), k).is_some() {
                return Err(Error::invalid(format!("duplicate source id `{}`", s.source_id)));
            }
        }
        Ok(Self {
            sources,
            context_dim,
            action_count,
        })
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn total_len(&self) -> usize {
        self.sources.iter().map(SourceData::len).sum()
    }

    pub fn source_sizes(&self) -> Vec<usize> {
        self.sources.iter().map(SourceData::len).collect()
    }

    /// Empirical distribution of samples across sources, `n̄ = (n_s / n)_s`.
    pub fn sample_distribution(&self) -> MixtureWeights {
        let n = self.total_len() as f64;
        MixtureWeights::new_unchecked(
            self.sources.iter().map(|s| s.len() as f64 / n).collect(),
        )
    }

    pub fn source_index(&self, id: &str) -> Result<usize> {
        self.sources
            .iter()
            .position(|s| s.source_id == id)
            .ok_or_else(|| Error::UnknownSource(id.to_string()))
    }

    pub fn has_propensities(&self) -> bool {
        self.sources.iter().all(|s| s.logged_propensities.is_some())
    }
}

/// A point of the probability simplex over sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("mixture weights are empty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(format!(
                "mixture weights must be finite and non-negative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "mixture weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub(crate) fn new_unchecked(weights: Vec<f64>) -> Self {
        debug_assert!(Self::new(weights.clone()).is_ok());
        Self(weights)
    }

    /// Vertex `e_s` of the simplex over `k` sources.
    pub fn vertex(s: usize, k: usize) -> Self {
        let mut w = vec![0.0; k];
        w[s] = 1.0;
        Self(w)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl TryFrom<Vec<f64>> for MixtureWeights {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MixtureWeights> for Vec<f64> {
    fn from(w: MixtureWeights) -> Self {
        w.0
    }
}

impl std::ops::Index<usize> for MixtureWeights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One node of a complete tree in level order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        #[serde(with = "threshold_serde")]
        threshold: f64,
    },
    Leaf {
        action: usize,
    },
}

/// Complete axis-aligned decision tree of fixed depth.
///
/// Nodes are stored in level order: node `i` has children `2i+1` and `2i+2`.
/// A context goes left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreePolicyRepr", into = "TreePolicyRepr")]
pub struct TreePolicy {
    depth: usize,
    nodes: Vec<TreeNode>,
}

#[derive(Serialize, Deserialize)]
struct TreePolicyRepr {
    depth: usize,
    nodes: Vec<TreeNode>,
}

impl TryFrom<TreePolicyRepr> for TreePolicy {
    type Error = Error;

    fn try_from(r: TreePolicyRepr) -> Result<Self> {
        TreePolicy::new(r.depth, r.nodes)
    }
}

impl From<TreePolicy> for TreePolicyRepr {
    fn from(t: TreePolicy) -> Self {
        TreePolicyRepr {
            depth: t.depth,
            nodes: t.nodes,
        }
    }
}

impl TreePolicy {
    pub fn new(depth: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        if depth > 20 {
            return Err(Error::invalid(format!("tree depth {depth} is too large")));
        }
        let internal = (1usize << depth) - 1;
        let total = (1usize << (depth + 1)) - 1;
        if nodes.len() != total {
            return Err(Error::invalid(format!(
                "a complete depth-{depth} tree has {total} nodes, got {}",
                nodes.len()
            )));
        }
        for (i, node) in nodes.iter().enumerate() {
            match (i < internal, node) {
                (true, TreeNode::Split { threshold, .. }) => {
                    if threshold.is_nan() {
                        return Err(Error::invalid(format!("node {i}: NaN threshold")));
                    }
                }
                (false, TreeNode::Leaf { .. }) => {}
                (true, TreeNode::Leaf { .. }) => {
                    return Err(Error::invalid(format!("node {i} must be a split")));
                }
                (false, TreeNode::Split { .. }) => {
                    return Err(Error::invalid(format!("node {i} must be a leaf")));
                }
            }
        }
        Ok(Self { depth, nodes })
    }

    pub fn constant(action: usize) -> Self {
        Self {
            depth: 0,
            nodes: vec![TreeNode::Leaf { action }],
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Largest feature index used, if any split exists.
    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    pub fn max_action(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { action } => Some(*action),
                TreeNode::Split { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Leaf index in `0..2^depth` reached by `x`. No bounds checking.
    #[inline]
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        for _ in 0..self.depth {
            i = match self.nodes[i] {
                TreeNode::Split { feature, threshold } => {
                    if x[feature] <= threshold {
                        2 * i + 1
                    } else {
                        2 * i + 2
                    }
                }
                TreeNode::Leaf { .. } => unreachable!("validated complete tree"),
            };
        }
        i - ((1 << self.depth) - 1)
    }

    /// Action chosen for `x`, assuming `x` has at least `max_feature + 1` entries.
    #[inline]
    pub fn act(&self, x: &[f64]) -> usize {
        let leaf = self.leaf_index(x) + (1 << self.depth) - 1;
        match self.nodes[leaf] {
            TreeNode::Leaf { action } => action,
            TreeNode::Split { .. } => unreachable!("validated complete tree"),
        }
    }

    /// Checked evaluation against a context of dimension `p`.
    pub fn evaluate(&self, x: &[f64]) -> Result<usize> {
        if let Some(f) = self.max_feature() {
            if f >= x.len() {
                return Err(Error::DimensionMismatch {
                    expected: f + 1,
                    actual: x.len(),
                });
            }
        }
        Ok(self.act(x))
    }

    /// Check feature indices against `p` and actions against `d`.
    pub fn validate_for(&self, p: usize, d: usize) -> Result<()> {
        if let Some(f) = self.max_feature() {
            if f >= p {
                return Err(Error::invalid(format!(
                    "policy uses feature {f}, contexts have dimension {p}"
                )));
            }
        }
        if self.max_action() >= d {
            return Err(Error::invalid(format!(
                "policy uses action {}, only {d} actions exist",
                self.max_action()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Thresholds are plain JSON numbers; the `-inf` sentinel split (everything
/// goes right) is written as the string `"-inf"`.
mod threshold_serde {
    use super::*;

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if t.is_finite() {
            s.serialize_f64(*t)
        } else if *t < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) => match s.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                other => Err(serde::de::Error::custom(format!("bad threshold `{other}`"))),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// CSV I/O

/// Load a dataset, inferring the action count as `max(max action + 1, 2)`.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<ObservationalDataset> {
    load_dataset_impl(path.as_ref(), None)
}

/// Load a dataset with a known action count; actions `>= d` are rejected.
pub fn load_dataset_with_actions(
    path: impl AsRef<Path>,
    action_count: usize,
) -> Result<ObservationalDataset> {
    load_dataset_impl(path.as_ref(), Some(action_count))
}

fn load_dataset_impl(path: &Path, action_count: Option<usize>) -> Result<ObservationalDataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, path, action_count)
}

struct SourceBuilder {
    id: String,
    contexts: Vec<f64>,
    actions: Vec<usize>,
    rewards: Vec<f64>,
    props: Vec<f64>,
}

pub(crate) fn read_dataset<R: Read>(
    reader: R,
    path: &Path,
    action_count: Option<usize>,
) -> Result<ObservationalDataset> {
    let parse_err = |row: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let has_props = header.last().map(String::as_str) == Some("propensity");
    let tail = if has_props { 3 } else { 2 };
    if header.len() < 2 + tail || header[0] != "source" {
        return Err(parse_err(
            0,
            "header must be `source,x0,...,x{p-1},action,reward[,propensity]`".into(),
        ));
    }
    let p = header.len() - 1 - tail;
    for (j, name) in header[1..=p].iter().enumerate() {
        if name != &format!("x{j}") {
            return Err(parse_err(0, format!("expected column `x{j}`, found `{name}`")));
        }
    }
    if header[p + 1] != "action" || header[p + 2] != "reward" {
        return Err(parse_err(0, "expected `action,reward` after context columns".into()));
    }

    let mut builders: Vec<SourceBuilder> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut max_action = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() != header.len() {
            return Err(parse_err(
                row,
                format!(
                    "expected {} fields (context dimension {p}), found {}",
                    header.len(),
                    record.len()
                ),
            ));
        }
        let num = |j: usize, what: &str| -> Result<f64> {
            let v: f64 = record[j]
                .parse()
                .map_err(|_| parse_err(row, format!("{what}: cannot parse `{}`", &record[j])))?;
            if !v.is_finite() {
                return Err(parse_err(row, format!("{what} is not finite")));
            }
            Ok(v)
        };
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_err(row, "empty source id".into()));
        }
        let k = *index.entry(id.clone()).or_insert_with(|| {
            builders.push(SourceBuilder {
                id: id.clone(),
                contexts: Vec::new(),
                actions: Vec::new(),
                rewards: Vec::new(),
                props: Vec::new(),
            });
            builders.len() - 1
        });
        let mut ctx = Vec::with_capacity(p);
        for j in 0..p {
            ctx.push(num(1 + j, &format!("x{j}"))?);
        }
        let action: usize = record[p + 1]
            .parse()
            .map_err(|_| parse_err(row, format!("action `{}` is not a non-negative integer", &record[p + 1])))?;
        if let Some(d) = action_count {
            if action >= d {
                return Err(parse_err(row, format!("action {action} out of range [0, {d})")));
            }
        }
        max_action = max_action.max(action);
        let reward = num(p + 2, "reward")?;
        let b = &mut builders[k];
        if has_props {
            let e = num(p + 3, "propensity")?;
            if !(e > 0.0 && e <= 1.0) {
                return Err(parse_err(row, format!("propensity {e} is outside (0, 1]")));
            }
            b.props.push(e);
        }
        b.contexts.extend(ctx);
        b.actions.push(action);
        b.rewards.push(reward);
    }
    if builders.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    let d = action_count.unwrap_or((max_action + 1).max(2));
    let sources = builders
        .into_iter()
        .map(|b| {
            SourceData::new(
                b.id,
                b.contexts,
                p,
                b.actions,
                b.rewards,
                has_props.then_some(b.props),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationalDataset::new(sources, d)
}

pub fn save_dataset(dataset: &ObservationalDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}

pub(crate) fn write_dataset<W: Write>(dataset: &ObservationalDataset, writer: W) -> Result<()> {
    let p = dataset.context_dim();
    let with_props = dataset.has_propensities();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["source".to_string()];
    header.extend((0..p).map(|j| format!("x{j}")));
    header.push("action".into());
    header.push("reward".into());
    if with_props {
        header.push("propensity".into());
    }
    w.write_record(&header)?;
    for s in &dataset.sources {
        for i in 0..s.len() {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(s.source_id.clone());
            rec.extend(s.context(i).iter().map(|x| x.to_string()));
            rec.push(s.actions[i].to_string());
            rec.push(s.rewards[i].to_string());
            if let (true, Some(props)) = (with_props, &s.logged_propensities) {
                rec.push(props[i].to_string());
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(feature: usize, threshold: f64) -> TreeNode {
        TreeNode::Split { feature, threshold }
    }

    fn leaf(action: usize) -> TreeNode {
        TreeNode::Leaf { action }
    }

    #[test]
    fn constant_policy() {
        let t = TreePolicy::constant(1);
        assert_eq!(t.evaluate(&[3.0, -2.0]).unwrap(), 1);
        assert_eq!(t.evaluate(&[]).unwrap(), 1);
    }

    #[test]
    fn boundary_routes_left() {
        let t = TreePolicy::new(1, vec![split(0, 0.5), leaf(0), leaf(1)]).unwrap();
        assert_eq!(t.evaluate(&[0.2]).unwrap(), 0);
        assert_eq!(t.evaluate(&[0.5]).unwrap(), 0);
        assert_eq!(t.evaluate(&[0.5000001]).unwrap(), 1);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let t = TreePolicy::new(1, vec![split(2, 0.0), leaf(0), leaf(1)]).unwrap();
        assert!(matches!(
            t.evaluate(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn incomplete_tree_rejected() {
        assert!(TreePolicy::new(1, vec![split(0, 0.0), leaf(0)]).is_err());
        assert!(TreePolicy::new(1, vec![leaf(0), leaf(0), leaf(1)]).is_err());
    }

    #[test]
    fn policy_json_level_order_and_sentinel() {
        let t = TreePolicy::new(
            2,
            vec![
                split(0, 0.25),
                split(1, f64::NEG_INFINITY),
                split(0, 0.75),
                leaf(0),
                leaf(1),
                leaf(1),
                leaf(0),
            ],
        )
        .unwrap();
        let js = serde_json::to_value(&t).unwrap();
        assert_eq!(js["depth"], 2);
        assert_eq!(js["nodes"][0]["feature"], 0);
        assert_eq!(js["nodes"][1]["threshold"], "-inf");
        assert_eq!(js["nodes"][6]["action"], 0);
        let back = TreePolicy::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn mixture_weights_validation() {
        assert!(MixtureWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(MixtureWeights::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(MixtureWeights::new(vec![0.5, 0.6]).is_err());
        assert!(MixtureWeights::new(vec![1.1, -0.1]).is_err());
        assert!(MixtureWeights::new(vec![]).is_err());
    }

    #[test]
    fn read_minimal_two_sources() {
        let csv = "source,x0,action,reward\nA,0.5,0,1.0\nB,-0.5,1,2.0\n";
        let ds = read_dataset(csv.as_bytes(), Path::new("t.csv"), Some(2)).unwrap();
        assert_eq!(ds.num_sources(), 2);
        assert_eq!(ds.total_len(), 2);
        assert_eq!(ds.context_dim(), 1);
        assert_eq!(ds.sources[1].source_id, "B");
    }

    #[test]
    fn first_appearance_order() {
        let csv = "source,x0,action,reward\nZ,0,0,1\nA,0,1,1\nZ,1,1,0\n";
        let ds = read_dataset(csv.as_bytes(), Path::new("t.csv"), None).unwrap();
        let ids: Vec<_> = ds.sources.iter().map(|s| s.source_id.as_str()).collect();
        assert_eq!(ids, ["Z", "A"]);
        assert_eq!(ds.sources[0].len(), 2);
    }

    #[test]
    fn zero_propensity_names_row() {
        let mut csv = String::from("source,x0,action,reward,propensity\n");
        for _ in 0..4 {
            csv.push_str("A,0.1,0,1.0,0.5\n");
        }
        csv.push_str("A,0.1,1,1.0,0.0\n");
        let err = read_dataset(csv.as_bytes(), Path::new("t.csv"), None).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 5),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn action_out_of_range_and_bad_width() {
        let csv = "source,x0,action,reward\nA,0,2,1\n";
        let err = read_dataset(csv.as_bytes(), Path::new("t.csv"), Some(2)).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
        let csv = "source,x0,action,reward\nA,0,1,1\nA,0,0.5,1,1\n";
        let err = read_dataset(csv.as_bytes(), Path::new("t.csv"), None).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
        let csv = "source,x0,action,reward\nA,0,-1,1\n";
        assert!(read_dataset(csv.as_bytes(), Path::new("t.csv"), None).is_err());
    }
}
