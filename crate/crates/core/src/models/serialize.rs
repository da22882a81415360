use super::tree::{RegressionTree, TreeNode};
use super::{LinearPixelModel, ModelError};
use crate::imaging::FeatureIndex;
use std::fmt::Write as _;

/// Either model kind, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Linear(LinearPixelModel),
    Tree(RegressionTree),
}

/// Versioned plain-text encoding. Linear models are three labeled decimal
/// coefficients; trees are indented `SPLIT feature threshold` /
/// `LEAF mean count` lines (pre-order, left child first). Floats use the
/// shortest representation that parses back exactly, so files are stable
/// golden-test fixtures.
pub fn write_model(model: &SavedModel) -> String {
    let mut out = String::new();
    match model {
        SavedModel::Linear(m) => {
            out.push_str("linear v1\n");
            let _ = writeln!(out, "w_low {}", m.w_low);
            let _ = writeln!(out, "w_high {}", m.w_high);
            let _ = writeln!(out, "intercept {}", m.intercept);
        }
        SavedModel::Tree(tree) => {
            out.push_str("reptree v1\n");
            write_node(&mut out, tree, tree.root(), 0);
        }
    }
    out
}

fn write_node(out: &mut String, tree: &RegressionTree, id: usize, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    match &tree.nodes()[id] {
        TreeNode::Leaf { mean, count } => {
            let _ = writeln!(out, "LEAF {mean} {count}");
        }
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let _ = writeln!(out, "SPLIT {feature} {threshold}");
            write_node(out, tree, *left, depth + 1);
            write_node(out, tree, *right, depth + 1);
        }
    }
}

pub fn parse_model(text: &str) -> Result<SavedModel, ModelError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty model file"))?;
    match header.trim() {
        "linear v1" => parse_linear_impl(lines),
        "reptree v1" => parse_tree_impl(lines),
        other => Err(malformed(1, format!("unknown model header {other:?}"))),
    }
}

fn malformed(line: usize, detail: impl Into<String>) -> ModelError {
    ModelError::MalformedModel {
        line,
        detail: detail.into(),
    }
}

fn parse_f64(line_no: usize, token: &str) -> Result<f64, ModelError> {
    token
        .parse::<f64>()
        .map_err(|e| malformed(line_no, format!("bad number {token:?}: {e}")))
}

fn parse_linear_impl<'a>(
    mut lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<SavedModel, ModelError> {
    let mut read = |name: &str| -> Result<f64, ModelError> {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| malformed(0, format!("missing {name} line")))?;
        let line_no = idx + 1;
        let mut parts = line.split_whitespace();
        let label = parts.next().unwrap_or("");
        if label != name {
            return Err(malformed(line_no, format!("expected {name:?}, found {label:?}")));
        }
        let value = parts
            .next()
            .ok_or_else(|| malformed(line_no, format!("{name} has no value")))?;
        parse_f64(line_no, value)
    };
    let w_low = read("w_low")?;
    let w_high = read("w_high")?;
    let intercept = read("intercept")?;
    Ok(SavedModel::Linear(LinearPixelModel {
        w_low,
        w_high,
        intercept,
    }))
}

fn parse_tree_impl<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<SavedModel, ModelError> {
    struct Parsed {
        depth: usize,
        line_no: usize,
        node: ParsedNode,
    }
    enum ParsedNode {
        Split { feature: FeatureIndex, threshold: f64 },
        Leaf { mean: f64, count: usize },
    }

    let mut items = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let indent = raw.len() - raw.trim_start_matches(' ').len();
        if indent % 2 != 0 {
            return Err(malformed(line_no, "odd indentation"));
        }
        let mut parts = raw.split_whitespace();
        let node = match parts.next() {
            Some("SPLIT") => {
                let feature = match parts.next() {
                    Some("low") => FeatureIndex::Low,
                    Some("high") => FeatureIndex::High,
                    other => return Err(malformed(line_no, format!("bad feature {other:?}"))),
                };
                let threshold = parse_f64(
                    line_no,
                    parts
                        .next()
                        .ok_or_else(|| malformed(line_no, "SPLIT missing threshold"))?,
                )?;
                ParsedNode::Split { feature, threshold }
            }
            Some("LEAF") => {
                let mean = parse_f64(
                    line_no,
                    parts.next().ok_or_else(|| malformed(line_no, "LEAF missing mean"))?,
                )?;
                let count = parts
                    .next()
                    .ok_or_else(|| malformed(line_no, "LEAF missing count"))?
                    .parse::<usize>()
                    .map_err(|e| malformed(line_no, format!("bad count: {e}")))?;
                ParsedNode::Leaf { mean, count }
            }
            other => return Err(malformed(line_no, format!("unknown node kind {other:?}"))),
        };
        items.push(Parsed {
            depth: indent / 2,
            line_no,
            node,
        });
    }
    if items.is_empty() {
        return Err(malformed(2, "tree body is empty"));
    }

    // Pre-order with explicit depths; rebuild recursively.
    fn build(
        items: &[Parsed],
        pos: &mut usize,
        depth: usize,
        nodes: &mut Vec<TreeNode>,
    ) -> Result<usize, ModelError> {
        let item = items
            .get(*pos)
            .ok_or_else(|| malformed(0, "tree ended unexpectedly"))?;
        if item.depth != depth {
            return Err(malformed(
                item.line_no,
                format!("expected indent {depth}, found {}", item.depth),
            ));
        }
        *pos += 1;
        match &item.node {
            ParsedNode::Leaf { mean, count } => {
                nodes.push(TreeNode::Leaf {
                    mean: *mean,
                    count: *count,
                });
                Ok(nodes.len() - 1)
            }
            ParsedNode::Split { feature, threshold } => {
                let left = build(items, pos, depth + 1, nodes)?;
                let right = build(items, pos, depth + 1, nodes)?;
                nodes.push(TreeNode::Split {
                    feature: *feature,
                    threshold: *threshold,
                    left,
                    right,
                });
                Ok(nodes.len() - 1)
            }
        }
    }

    let mut nodes = Vec::new();
    let mut pos = 0usize;
    let root = build(&items, &mut pos, 0, &mut nodes)?;
    if pos != items.len() {
        return Err(malformed(items[pos].line_no, "trailing nodes after tree root"));
    }
    Ok(SavedModel::Tree(RegressionTree::from_arena(nodes, root)))
}
