use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node in preorder layout. The left child of a split at position `i` is
/// at `i + 1`; the right child is at `right`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, right: usize },
    Leaf { value: f64 },
}

/// Squared-error regression tree; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
pub struct TreeParams<'a> {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Candidate features; a node examines all of them or a sample of size `per_node`.
    pub features: &'a [usize],
    pub per_node: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, right } => {
                    i = if x[feature] <= threshold { i + 1 } else { right };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> (usize, usize) {
            // (depth below i, index after subtree)
            match nodes[i] {
                Node::Leaf { .. } => (0, i + 1),
                Node::Split { right, .. } => {
                    let (l, _) = walk(nodes, i + 1);
                    let (r, end) = walk(nodes, right);
                    (1 + l.max(r), end)
                }
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0).0
        }
    }

    /// Structural check used when loading persisted trees.
    pub fn validate(&self, dims: usize) -> Result<()> {
        fn walk(nodes: &[Node], i: usize, dims: usize) -> Option<usize> {
            match nodes.get(i)? {
                Node::Leaf { value } => value.is_finite().then_some(i + 1),
                Node::Split { feature, threshold, right } => {
                    if *feature >= dims || !threshold.is_finite() {
                        return None;
                    }
                    let left_end = walk(nodes, i + 1, dims)?;
                    if left_end != *right {
                        return None;
                    }
                    walk(nodes, *right, dims)
                }
            }
        }
        match walk(&self.nodes, 0, dims) {
            Some(end) if end == self.nodes.len() => Ok(()),
            _ => Err(Error::invalid("malformed regression tree")),
        }
    }

    /// Grows a tree on `rows` (indices into `x`, repeats allowed).
    pub fn fit<R: Rng>(x: &[Vec<f64>], y: &[f64], rows: &[usize], params: &TreeParams<'_>, rng: &mut R) -> Self {
        let mut tree = RegressionTree { nodes: Vec::new() };
        let mut rows = rows.to_vec();
        grow(&mut tree.nodes, x, y, &mut rows, params, 0, rng);
        tree
    }
}

fn leaf_value(y: &[f64], rows: &[usize]) -> f64 {
    let v0 = y[rows[0]];
    let (mut lo, mut hi, mut dev) = (v0, v0, 0.0);
    for &r in rows {
        lo = lo.min(y[r]);
        hi = hi.max(y[r]);
        dev += y[r] - v0;
    }
    (v0 + dev / rows.len() as f64).clamp(lo, hi)
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn grow<R: Rng>(
    nodes: &mut Vec<Node>,
    x: &[Vec<f64>],
    y: &[f64],
    rows: &mut [usize],
    params: &TreeParams<'_>,
    depth: usize,
    rng: &mut R,
) {
    let n = rows.len();
    let pure = rows.iter().all(|&r| y[r] == y[rows[0]]);
    let depth_ok = params.max_depth.is_none_or(|d| depth < d);
    if pure || !depth_ok || n < 2 * params.min_leaf.max(1) {
        nodes.push(Node::Leaf { value: leaf_value(y, rows) });
        return;
    }
    let candidates: Vec<usize> = if params.per_node >= params.features.len() {
        params.features.to_vec()
    } else {
        let mut picked: Vec<usize> = rand::seq::index::sample(rng, params.features.len(), params.per_node)
            .into_iter()
            .map(|i| params.features[i])
            .collect();
        picked.sort_unstable();
        picked
    };
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    // maximise S_l²/n_l + S_r²/n_r, equivalent to minimising the children's SSE
    let parent = total * total / n as f64;
    let min_leaf = params.min_leaf.max(1);
    let mut best: Option<Best> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for &f in &candidates {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let mut left = 0.0;
        for i in 0..n - 1 {
            left += y[order[i]];
            let (a, b) = (x[order[i]][f], x[order[i + 1]][f]);
            let nl = i + 1;
            if a == b || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right = total - left;
            let score = left * left / nl as f64 + right * right / (n - nl) as f64;
            if score > parent && best.as_ref().is_none_or(|bst| score > bst.score) {
                let mut threshold = a + (b - a) / 2.0;
                if threshold >= b {
                    threshold = a;
                }
                best = Some(Best { feature: f, threshold, score });
            }
        }
    }
    let Some(best) = best else {
        nodes.push(Node::Leaf { value: leaf_value(y, rows) });
        return;
    };
    let mut split = 0;
    for i in 0..n {
        if x[rows[i]][best.feature] <= best.threshold {
            rows.swap(i, split);
            split += 1;
        }
    }
    // keep each side in ascending row order so the layout is independent of swaps
    let (l, r) = rows.split_at_mut(split);
    l.sort_unstable();
    r.sort_unstable();
    let me = nodes.len();
    nodes.push(Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        right: 0,
    });
    grow(nodes, x, y, l, params, depth + 1, rng);
    let right_at = nodes.len();
    if let Node::Split { right, .. } = &mut nodes[me] {
        *right = right_at;
    }
    grow(nodes, x, y, r, params, depth + 1, rng);
}
