use super::ModelError;
use crate::imaging::{DualEnergySlice, FeatureIndex, ImageGrid, TrainingRow};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters for the reduced-error-pruning regression tree. Defaults match
/// the WEKA REPTree defaults; no tuning is applied anywhere in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct RepTreeParams {
    /// Minimum number of rows on each side of a split.
    pub min_instances: usize,
    /// Stop splitting once node variance falls below this fraction of the
    /// root variance.
    pub min_variance_proportion: f64,
    /// `None` grows until the other stopping rules fire.
    pub max_depth: Option<usize>,
    /// Rows are shuffled into this many folds; fold 1 becomes the pruning
    /// hold-out, the rest grow the tree.
    pub num_folds: usize,
    pub seed: u64,
}

impl Default for RepTreeParams {
    fn default() -> Self {
        Self {
            min_instances: 2,
            min_variance_proportion: 1e-3,
            max_depth: None,
            num_folds: 3,
            seed: 1,
        }
    }
}

impl RepTreeParams {
    fn validate(&self) -> Result<(), ModelError> {
        if self.min_instances < 1 {
            return Err(ModelError::InvalidParams {
                detail: "min_instances must be at least 1".into(),
            });
        }
        if self.num_folds < 2 {
            return Err(ModelError::InvalidParams {
                detail: "num_folds must be at least 2".into(),
            });
        }
        if !(self.min_variance_proportion > 0.0 && self.min_variance_proportion < 1.0) {
            return Err(ModelError::InvalidParams {
                detail: format!(
                    "min_variance_proportion must lie in (0, 1), got {}",
                    self.min_variance_proportion
                ),
            });
        }
        Ok(())
    }
}

/// Binary regression tree with axis-aligned splits and leaf means.
/// Rows with `feature < threshold` route left, everything else right.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: FeatureIndex,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        mean: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    root: usize,
}

impl RegressionTree {
    pub(crate) fn from_arena(nodes: Vec<TreeNode>, root: usize) -> Self {
        Self { nodes, root }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    #[inline]
    pub fn predict(&self, low: f64, high: f64) -> f64 {
        let mut id = self.root;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { mean, .. } => return *mean,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let value = match feature {
                        FeatureIndex::Low => low,
                        FeatureIndex::High => high,
                    };
                    id = if value < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Sum of leaf counts, which must equal the growing-set size.
    pub fn total_leaf_rows(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                TreeNode::Leaf { count, .. } => *count,
                _ => 0,
            })
            .sum()
    }

    pub fn depth(&self) -> usize {
        fn depth_of(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + depth_of(nodes, *left).max(depth_of(nodes, *right))
                }
            }
        }
        depth_of(&self.nodes, self.root)
    }
}

/// Deterministic fold assignment: indices 0..n are shuffled with a seeded
/// generator, then dealt round-robin; fold 1 is the pruning hold-out and the
/// remaining folds form the growing set.
pub fn split_folds(n: usize, num_folds: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut growing = Vec::with_capacity(n - n / num_folds);
    let mut pruning = Vec::with_capacity(n / num_folds + 1);
    for (position, index) in order.into_iter().enumerate() {
        if position % num_folds == 0 {
            pruning.push(index);
        } else {
            growing.push(index);
        }
    }
    (growing, pruning)
}

/// Result of a detailed fit: the pruned tree plus the grown tree and the
/// split sizes, for logging and for pruning-effect checks.
#[derive(Debug, Clone)]
pub struct RepTreeFit {
    pub tree: RegressionTree,
    pub unpruned: RegressionTree,
    pub growing_rows: usize,
    pub pruning_rows: usize,
}

/// Fit a reduced-error-pruning regression tree. See [`fit_rep_tree_detailed`]
/// for the variant that also returns the unpruned tree.
pub fn fit_rep_tree(rows: &[TrainingRow], params: &RepTreeParams) -> Result<RegressionTree, ModelError> {
    fit_rep_tree_detailed(rows, params).map(|fit| fit.tree)
}

/// Grow greedily by variance reduction, then prune bottom-up against the
/// hold-out fold. Deterministic given (rows, params): ties in the split
/// search resolve to the first feature and the lowest threshold.
pub fn fit_rep_tree_detailed(
    rows: &[TrainingRow],
    params: &RepTreeParams,
) -> Result<RepTreeFit, ModelError> {
    params.validate()?;
    if rows.len() < params.num_folds {
        return Err(ModelError::TooFewRows {
            needed: params.num_folds,
            got: rows.len(),
        });
    }

    let (growing_idx, pruning_idx) = split_folds(rows.len(), params.num_folds, params.seed);
    let growing: Vec<TrainingRow> = growing_idx.iter().map(|&i| rows[i]).collect();
    let pruning: Vec<TrainingRow> = pruning_idx.iter().map(|&i| rows[i]).collect();

    let grown = grow_tree(&growing, params);
    let unpruned = emit(&grown, grown.len() - 1, &mut Vec::new());
    let pruned = prune(&grown, &pruning);

    Ok(RepTreeFit {
        tree: pruned,
        unpruned,
        growing_rows: growing.len(),
        pruning_rows: pruning.len(),
    })
}

/// Route a slice through the tree pixel by pixel.
pub fn predict_tree(tree: &RegressionTree, slice: &DualEnergySlice) -> ImageGrid {
    slice
        .low()
        .zip_map(slice.high(), |l, h| tree.predict(l, h))
        .expect("slice images share a shape by construction")
}

// --- growing ----------------------------------------------------------------

struct GrownNode {
    mean: f64,
    count: usize,
    kind: GrownKind,
}

enum GrownKind {
    Leaf,
    Split {
        feature: FeatureIndex,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

struct SumStats {
    count: usize,
    sum: f64,
    sum_sq: f64,
}

impl SumStats {
    fn over(rows: &[TrainingRow], order: &[u32]) -> Self {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for &i in order {
            let t = rows[i as usize].target;
            sum += t;
            sum_sq += t * t;
        }
        Self {
            count: order.len(),
            sum,
            sum_sq,
        }
    }

    fn sse(&self) -> f64 {
        (self.sum_sq - self.sum * self.sum / self.count as f64).max(0.0)
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

fn grow_tree(rows: &[TrainingRow], params: &RepTreeParams) -> Vec<GrownNode> {
    // Pre-sort one index array per feature; partitions below are stable, so
    // both stay sorted all the way down without re-sorting.
    let mut by_low: Vec<u32> = (0..rows.len() as u32).collect();
    let mut by_high = by_low.clone();
    by_low.sort_by(|&a, &b| {
        rows[a as usize]
            .low
            .partial_cmp(&rows[b as usize].low)
            .unwrap()
            .then(a.cmp(&b))
    });
    by_high.sort_by(|&a, &b| {
        rows[a as usize]
            .high
            .partial_cmp(&rows[b as usize].high)
            .unwrap()
            .then(a.cmp(&b))
    });

    let root_stats = SumStats::over(rows, &by_low);
    let root_variance = root_stats.sse() / root_stats.count as f64;

    let mut grower = Grower {
        rows,
        params,
        root_variance,
        nodes: Vec::new(),
    };
    grower.grow(by_low, by_high, 0);
    grower.nodes
}

struct Grower<'a> {
    rows: &'a [TrainingRow],
    params: &'a RepTreeParams,
    root_variance: f64,
    nodes: Vec<GrownNode>,
}

struct BestSplit {
    gain: f64,
    feature: FeatureIndex,
    threshold: f64,
}

impl Grower<'_> {
    fn grow(&mut self, by_low: Vec<u32>, by_high: Vec<u32>, depth: usize) -> usize {
        let stats = SumStats::over(self.rows, &by_low);
        let mean = stats.mean();
        let count = stats.count;
        let node_sse = stats.sse();
        let variance = node_sse / count as f64;

        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        let too_small = count < 2 * self.params.min_instances;
        let variance_stop =
            variance <= 0.0 || variance < self.params.min_variance_proportion * self.root_variance;

        let best = if too_small || depth_capped || variance_stop {
            None
        } else {
            self.best_split(&by_low, &by_high, &stats)
        };

        match best {
            None => self.push_leaf(mean, count),
            Some(split) => {
                let goes_left = |i: &u32| {
                    self.rows[*i as usize].feature(split.feature) < split.threshold
                };
                let (left_low, right_low): (Vec<u32>, Vec<u32>) =
                    by_low.iter().partition(|i| goes_left(i));
                let (left_high, right_high): (Vec<u32>, Vec<u32>) =
                    by_high.iter().partition(|i| goes_left(i));
                // Keep peak memory proportional to the row count, not to
                // row count times depth.
                drop(by_low);
                drop(by_high);

                let left = self.grow(left_low, left_high, depth + 1);
                let right = self.grow(right_low, right_high, depth + 1);
                self.nodes.push(GrownNode {
                    mean,
                    count,
                    kind: GrownKind::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right,
                    },
                });
                self.nodes.len() - 1
            }
        }
    }

    fn push_leaf(&mut self, mean: f64, count: usize) -> usize {
        self.nodes.push(GrownNode {
            mean,
            count,
            kind: GrownKind::Leaf,
        });
        self.nodes.len() - 1
    }

    /// Scan candidate thresholds (midpoints between consecutive distinct
    /// sorted values) on both features; keep the first candidate with the
    /// strictly largest variance reduction.
    fn best_split(
        &self,
        by_low: &[u32],
        by_high: &[u32],
        node: &SumStats,
    ) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        for feature in FeatureIndex::ALL {
            let order = match feature {
                FeatureIndex::Low => by_low,
                FeatureIndex::High => by_high,
            };
            self.scan_feature(feature, order, node, &mut best);
        }
        best
    }

    fn scan_feature(
        &self,
        feature: FeatureIndex,
        order: &[u32],
        node: &SumStats,
        best: &mut Option<BestSplit>,
    ) {
        let min = self.params.min_instances;
        let count = node.count;
        let node_sse = node.sse();

        let mut left_sum = 0.0;
        let mut left_sum_sq = 0.0;
        for (i, &row_id) in order[..count - 1].iter().enumerate() {
            let row = &self.rows[row_id as usize];
            left_sum += row.target;
            left_sum_sq += row.target * row.target;

            let value = row.feature(feature);
            let next = self.rows[order[i + 1] as usize].feature(feature);
            if next <= value {
                continue; // not a boundary between distinct values
            }

            let n_left = i + 1;
            let n_right = count - n_left;
            if n_left < min || n_right < min {
                continue;
            }

            let sse_left = (left_sum_sq - left_sum * left_sum / n_left as f64).max(0.0);
            let right_sum = node.sum - left_sum;
            let right_sum_sq = node.sum_sq - left_sum_sq;
            let sse_right = (right_sum_sq - right_sum * right_sum / n_right as f64).max(0.0);
            let gain = node_sse - sse_left - sse_right;

            if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                // Midpoint, nudged up to `next` if rounding collapsed it onto
                // `value`, so `< threshold` reproduces this exact partition.
                let mut threshold = 0.5 * (value + next);
                if threshold <= value {
                    threshold = next;
                }
                *best = Some(BestSplit {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }
}

// --- pruning ----------------------------------------------------------------

/// Reduced-error pruning: replace a subtree by a leaf (the mean of its
/// growing rows) whenever that does not increase squared error on the
/// pruning fold. Applied bottom-up, so the hold-out error never increases.
fn prune(grown: &[GrownNode], pruning: &[TrainingRow]) -> RegressionTree {
    let root = grown.len() - 1;
    let mut collapse = vec![false; grown.len()];
    let all_rows: Vec<u32> = (0..pruning.len() as u32).collect();
    decide(grown, root, pruning, all_rows, &mut collapse);
    emit_with_collapse(grown, root, &collapse)
}

fn decide(
    grown: &[GrownNode],
    id: usize,
    pruning: &[TrainingRow],
    row_ids: Vec<u32>,
    collapse: &mut [bool],
) -> f64 {
    let node = &grown[id];
    let leaf_sse = sse_against(pruning, &row_ids, node.mean);
    match &node.kind {
        GrownKind::Leaf => leaf_sse,
        GrownKind::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let (left_ids, right_ids): (Vec<u32>, Vec<u32>) = row_ids
                .iter()
                .partition(|&&i| pruning[i as usize].feature(*feature) < *threshold);
            drop(row_ids);
            let subtree_sse = decide(grown, *left, pruning, left_ids, collapse)
                + decide(grown, *right, pruning, right_ids, collapse);
            if leaf_sse <= subtree_sse {
                collapse[id] = true;
                leaf_sse
            } else {
                subtree_sse
            }
        }
    }
}

fn sse_against(rows: &[TrainingRow], ids: &[u32], mean: f64) -> f64 {
    let mut sse = 0.0;
    for &i in ids {
        let d = rows[i as usize].target - mean;
        sse += d * d;
    }
    sse
}

fn emit_with_collapse(grown: &[GrownNode], root: usize, collapse: &[bool]) -> RegressionTree {
    fn walk(grown: &[GrownNode], id: usize, collapse: &[bool], out: &mut Vec<TreeNode>) -> usize {
        let node = &grown[id];
        match &node.kind {
            GrownKind::Split {
                feature,
                threshold,
                left,
                right,
            } if !collapse[id] => {
                let left = walk(grown, *left, collapse, out);
                let right = walk(grown, *right, collapse, out);
                out.push(TreeNode::Split {
                    feature: *feature,
                    threshold: *threshold,
                    left,
                    right,
                });
            }
            _ => out.push(TreeNode::Leaf {
                mean: node.mean,
                count: node.count,
            }),
        }
        out.len() - 1
    }
    let mut out = Vec::new();
    let root = walk(grown, root, collapse, &mut out);
    RegressionTree::from_arena(out, root)
}

/// Emit a grown subtree verbatim (no pruning applied).
fn emit(grown: &[GrownNode], root: usize, _scratch: &mut Vec<TreeNode>) -> RegressionTree {
    let collapse = vec![false; grown.len()];
    emit_with_collapse(grown, root, &collapse)
}
