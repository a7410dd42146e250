use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rows with `x[column] < threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        column: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// One regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    column,
                    threshold,
                    left,
                    right,
                } => at = if row[*column] < *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn split_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { column, .. } => Some(*column),
            Node::Leaf { .. } => None,
        })
    }
}

/// Growth parameters shared by every tree of one training run.
pub(crate) struct GrowParams {
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2: f64,
    pub shrinkage: f64,
}

/// Training data in the layout the split search wants: per-row nonzero
/// lists plus optional allowed thresholds per column.
pub(crate) struct TrainData {
    pub row_nz: Vec<Vec<(usize, f64)>>,
    /// Sorted candidate thresholds per column when histogram binning is on.
    pub edges: Option<Vec<Vec<f64>>>,
}

impl TrainData {
    pub fn new(data: &[f64], n_rows: usize, n_cols: usize, bins: Option<usize>) -> Self {
        let row_nz: Vec<Vec<(usize, f64)>> = (0..n_rows)
            .map(|i| {
                data[i * n_cols..(i + 1) * n_cols]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        let edges = bins.map(|b| {
            (0..n_cols)
                .map(|j| {
                    let mut vals: Vec<f64> = (0..n_rows).map(|i| data[i * n_cols + j]).collect();
                    vals.sort_by(f64::total_cmp);
                    vals.dedup();
                    let mids: Vec<f64> = vals.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                    if mids.len() < b.max(2) {
                        mids
                    } else {
                        // evenly spaced picks over the distinct-value boundaries
                        let step = mids.len() as f64 / (b - 1) as f64;
                        let mut picked: Vec<f64> = (0..b - 1).map(|k| mids[(k as f64 * step) as usize]).collect();
                        picked.dedup();
                        picked
                    }
                })
                .collect()
        });
        Self { row_nz, edges }
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    gain: f64,
    column: usize,
    threshold: f64,
}

fn better(a: &Split, b: &Split) -> bool {
    a.gain > b.gain || (a.gain == b.gain && (a.column, a.threshold) < (b.column, b.threshold))
}

fn score(g: f64, h: f64, l2: f64) -> f64 {
    g * g / (h + l2)
}

struct Leaf {
    node: usize,
    rows: Vec<usize>,
    g: f64,
    h: f64,
    best: Option<Split>,
}

/// Reusable per-column buckets for the split search.
pub(crate) struct Scratch {
    buckets: Vec<Vec<(f64, f64, f64)>>,
}

impl Scratch {
    pub fn new(n_cols: usize) -> Self {
        Self {
            buckets: vec![Vec::new(); n_cols],
        }
    }
}

fn column_best(
    col: usize,
    entries: &mut [(f64, f64, f64)],
    totals: (f64, f64, usize),
    params: &GrowParams,
    edges: Option<&[f64]>,
) -> Option<Split> {
    let (g_all, h_all, n_all) = totals;
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_zero = n_all - entries.len();
    let (g_nz, h_nz) = entries.iter().fold((0.0, 0.0), |acc, e| (acc.0 + e.1, acc.1 + e.2));
    // Distinct-value groups in ascending order, the implicit zeros included.
    let mut groups: Vec<(f64, f64, f64, usize)> = Vec::new();
    let push = |v: f64, g: f64, h: f64, n: usize, groups: &mut Vec<(f64, f64, f64, usize)>| match groups.last_mut() {
        Some(last) if last.0 == v => {
            last.1 += g;
            last.2 += h;
            last.3 += n;
        }
        _ => groups.push((v, g, h, n)),
    };
    let split_at = entries.partition_point(|e| e.0 < 0.0);
    for e in &entries[..split_at] {
        push(e.0, e.1, e.2, 1, &mut groups);
    }
    if n_zero > 0 {
        push(0.0, g_all - g_nz, h_all - h_nz, n_zero, &mut groups);
    }
    for e in &entries[split_at..] {
        push(e.0, e.1, e.2, 1, &mut groups);
    }
    if groups.len() < 2 {
        return None;
    }
    let parent = score(g_all, h_all, params.l2);
    let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
    let mut best: Option<Split> = None;
    for w in groups.windows(2) {
        gl += w[0].1;
        hl += w[0].2;
        nl += w[0].3;
        let nr = n_all - nl;
        if nl < params.min_samples_leaf || nr < params.min_samples_leaf {
            continue;
        }
        let threshold = match edges {
            None => 0.5 * (w[0].0 + w[1].0),
            Some(edges) => {
                let k = edges.partition_point(|&e| e <= w[0].0);
                match edges.get(k) {
                    Some(&e) if e <= w[1].0 => e,
                    _ => continue,
                }
            }
        };
        let gain = score(gl, hl, params.l2) + score(g_all - gl, h_all - hl, params.l2) - parent;
        if gain > 1e-12 && best.is_none_or(|b| gain > b.gain) {
            best = Some(Split {
                gain,
                column: col,
                threshold,
            });
        }
    }
    best
}

fn find_split(
    data: &TrainData,
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    allowed: &[bool],
    params: &GrowParams,
    scratch: &mut Scratch,
) -> Option<Split> {
    if rows.len() < 2 * params.min_samples_leaf.max(1) {
        return None;
    }
    let mut touched = Vec::new();
    for &r in rows {
        for &(c, v) in &data.row_nz[r] {
            if !allowed[c] {
                continue;
            }
            let b = &mut scratch.buckets[c];
            if b.is_empty() {
                touched.push(c);
            }
            b.push((v, grad[r], hess[r]));
        }
    }
    let g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h: f64 = rows.iter().map(|&r| hess[r]).sum();
    let totals = (g, h, rows.len());
    let mut work: Vec<(usize, Vec<(f64, f64, f64)>)> =
        touched.iter().map(|&c| (c, std::mem::take(&mut scratch.buckets[c]))).collect();
    let best = work
        .par_iter_mut()
        .filter_map(|(c, entries)| {
            column_best(*c, entries, totals, params, data.edges.as_ref().map(|e| e[*c].as_slice()))
        })
        .reduce_with(|a, b| if better(&a, &b) { a } else { b });
    for (c, mut entries) in work {
        entries.clear();
        scratch.buckets[c] = entries;
    }
    best
}

fn value_of(data: &TrainData, row: usize, col: usize) -> f64 {
    let nz = &data.row_nz[row];
    match nz.binary_search_by(|e| e.0.cmp(&col)) {
        Ok(k) => nz[k].1,
        Err(_) => 0.0,
    }
}

/// Grows one tree leaf-wise on gradient statistics: the leaf with the largest
/// positive gain is split until `max_leaves` is reached or no split gains.
/// Leaf values are Newton steps `-G / (H + l2)` scaled by the shrinkage.
pub(crate) fn grow_tree(
    data: &TrainData,
    rows: Vec<usize>,
    grad: &[f64],
    hess: &[f64],
    allowed: &[bool],
    params: &GrowParams,
    scratch: &mut Scratch,
) -> Tree {
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let stats = |rows: &[usize]| -> (f64, f64) {
        (rows.iter().map(|&r| grad[r]).sum(), rows.iter().map(|&r| hess[r]).sum())
    };
    let (g, h) = stats(&rows);
    let best = find_split(data, &rows, grad, hess, allowed, params, scratch);
    let mut leaves = vec![Leaf {
        node: 0,
        rows,
        g,
        h,
        best,
    }];
    while leaves.len() < params.max_leaves {
        let mut pick: Option<usize> = None;
        for (i, leaf) in leaves.iter().enumerate() {
            if let Some(s) = &leaf.best {
                let replace = match pick {
                    None => true,
                    Some(p) => s.gain > leaves[p].best.as_ref().map_or(f64::NEG_INFINITY, |b| b.gain),
                };
                if replace {
                    pick = Some(i);
                }
            }
        }
        let Some(p) = pick else { break };
        let leaf = leaves.swap_remove(p);
        let split = leaf.best.expect("picked leaves have a split");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = leaf
            .rows
            .iter()
            .partition(|&&r| value_of(data, r, split.column) < split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            column: split.column,
            threshold: split.threshold,
            left,
            right: left + 1,
        };
        for (node, rows) in [(left, left_rows), (left + 1, right_rows)] {
            let (g, h) = stats(&rows);
            let best = find_split(data, &rows, grad, hess, allowed, params, scratch);
            leaves.push(Leaf { node, rows, g, h, best });
        }
        // keep the pick order independent of swap_remove
        leaves.sort_by_key(|l| l.node);
    }
    for leaf in leaves {
        nodes[leaf.node] = Node::Leaf {
            value: -leaf.g / (leaf.h + params.l2) * params.shrinkage,
        };
    }
    Tree { nodes }
}
