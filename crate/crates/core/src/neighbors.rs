//! Per-item neighbor overlap with a reference encoder and the items whose
//! overlap changes most between two prompt conditions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_same_shape, shared_neighbor_counts, NeighborIndex};
use crate::store::DatasetManifest;

/// `|N_llm(i) ∩ N_ref(i)|` for every item `i`, in item order.
pub fn overlap_per_item(llm: &NeighborIndex, reference: &NeighborIndex) -> Result<Vec<usize>> {
    shared_neighbor_counts(llm, reference)
}

/// `sum(overlaps) / (n * k)`; identical to the mutual-kNN alignment value.
pub fn mean_overlap_fraction(overlaps: &[usize], k: usize) -> f64 {
    let total: usize = overlaps.iter().sum();
    total as f64 / (overlaps.len() * k) as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub item_index: usize,
    pub item_id: String,
    pub caption: String,
    pub overlap_a: usize,
    pub overlap_b: usize,
    /// `overlap_b - overlap_a`.
    pub delta: i64,
    pub neighbors_a: Vec<String>,
    pub neighbors_b: Vec<String>,
    pub neighbors_ref: Vec<String>,
}

/// Items ranked by the gain in shared reference neighbors from condition `a`
/// to condition `b`: descending delta, ties by ascending item index,
/// truncated to `top_m`.
pub fn overlap_delta_ranking(
    cond_a: &NeighborIndex,
    cond_b: &NeighborIndex,
    reference: &NeighborIndex,
    top_m: usize,
    manifest: &DatasetManifest,
) -> Result<Vec<OverlapRecord>> {
    check_same_shape(cond_a, cond_b)?;
    check_same_shape(cond_a, reference)?;
    let n = cond_a.n();
    if top_m > n {
        return Err(Error::InvalidArgument(format!("top_m={top_m} exceeds n={n}")));
    }
    if manifest.n_items() < n {
        return Err(Error::InvalidArgument(format!(
            "unknown item index {}: manifest has {} items",
            manifest.n_items(),
            manifest.n_items()
        )));
    }
    if manifest.n_items() != n {
        return Err(Error::RowCountMismatch { expected: manifest.n_items(), found: n });
    }
    let over_a = overlap_per_item(cond_a, reference)?;
    let over_b = overlap_per_item(cond_b, reference)?;

    let mut order: Vec<usize> = (0..n).collect();
    let delta = |i: usize| over_b[i] as i64 - over_a[i] as i64;
    order.sort_by(|&i, &j| delta(j).cmp(&delta(i)).then(i.cmp(&j)));
    order.truncate(top_m);

    let ids = |list: &[usize]| -> Vec<String> {
        list.iter().map(|&j| manifest.items[j].item_id.clone()).collect()
    };
    Ok(order
        .into_iter()
        .map(|i| OverlapRecord {
            item_index: i,
            item_id: manifest.items[i].item_id.clone(),
            caption: manifest.items[i].caption.clone(),
            overlap_a: over_a[i],
            overlap_b: over_b[i],
            delta: delta(i),
            neighbors_a: ids(cond_a.neighbors(i)),
            neighbors_b: ids(cond_b.neighbors(i)),
            neighbors_ref: ids(reference.neighbors(i)),
        })
        .collect())
}

/// One JSON object per line, UTF-8.
pub fn write_jsonl<W: Write>(records: &[OverlapRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
