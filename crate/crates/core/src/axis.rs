//! Visual-auditory axis fit on SEE/HEAR embeddings, projections onto it, and
//! the separation statistics of the projected conditions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stats::{auroc, cohens_d, mean, DensityCurve, GaussianKde};
use crate::store::EmbeddingMatrix;

pub const SEE: &str = "see";
pub const HEAR: &str = "hear";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensoryAxis {
    /// Unit vector along `mu_see - mu_hear`.
    pub direction: Vec<f64>,
    pub mu_see: Vec<f64>,
    pub mu_hear: Vec<f64>,
    /// `|mu_see - mu_hear|`.
    pub delta_norm: f64,
}

impl SensoryAxis {
    pub fn dim(&self) -> usize {
        self.direction.len()
    }
}

fn column_means(x: &EmbeddingMatrix) -> Vec<f64> {
    let mut acc = vec![0.0f64; x.cols()];
    for row in x.iter_rows() {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += f64::from(v);
        }
    }
    let n = x.rows() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn check_finite(x: &EmbeddingMatrix) -> Result<()> {
    match x.first_non_finite() {
        Some((row, col)) => Err(Error::NonFinite { row, col }),
        None => Ok(()),
    }
}

pub fn fit_axis(see: &EmbeddingMatrix, hear: &EmbeddingMatrix) -> Result<SensoryAxis> {
    if see.cols() != hear.cols() {
        return Err(Error::DimensionMismatch { expected: see.cols(), found: hear.cols() });
    }
    if see.rows() == 0 {
        return Err(Error::Empty("SEE embeddings"));
    }
    if hear.rows() == 0 {
        return Err(Error::Empty("HEAR embeddings"));
    }
    check_finite(see)?;
    check_finite(hear)?;
    let mu_see = column_means(see);
    let mu_hear = column_means(hear);
    let diff: Vec<f64> = mu_see.iter().zip(&mu_hear).map(|(a, b)| a - b).collect();
    let delta_norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    if delta_norm == 0.0 {
        return Err(Error::Degenerate("degenerate axis: SEE and HEAR means coincide".into()));
    }
    let direction = diff.into_iter().map(|v| v / delta_norm).collect();
    Ok(SensoryAxis {
        direction,
        mu_see,
        mu_hear,
        delta_norm,
    })
}

/// `s_i = x_i · v` for every row, in row order.
pub fn project(x: &EmbeddingMatrix, axis: &SensoryAxis) -> Result<Vec<f64>> {
    if x.cols() != axis.dim() {
        return Err(Error::DimensionMismatch { expected: axis.dim(), found: x.cols() });
    }
    check_finite(x)?;
    Ok(x.iter_rows()
        .map(|r| r.iter().zip(&axis.direction).map(|(&a, b)| f64::from(a) * b).sum())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    /// `mean(s_see) - mean(s_hear)`.
    pub delta_mu: f64,
    pub cohens_d: f64,
    /// SEE is the positive class.
    pub auroc: f64,
    pub axis_norm: f64,
    pub projections: BTreeMap<String, Vec<f64>>,
    pub curves: BTreeMap<String, DensityCurve>,
}

/// Fits the axis on SEE and HEAR only, projects every condition onto it, and
/// summarizes SEE-vs-HEAR separation.
///
/// The axis is fit in-sample, so even identically distributed SEE and HEAR
/// rows separate by roughly `sqrt(2 * cols / rows)` standard deviations.
/// Compare against a shuffled-label baseline when `cols` is large.
pub fn separation_report(
    see: &EmbeddingMatrix,
    hear: &EmbeddingMatrix,
    extra: &BTreeMap<String, EmbeddingMatrix>,
    grid_points: usize,
) -> Result<SeparationReport> {
    for name in extra.keys() {
        if name == SEE || name == HEAR {
            return Err(Error::InvalidArgument(format!(
                "extra condition name {name:?} is reserved"
            )));
        }
    }
    let axis = fit_axis(see, hear)?;
    let mut projections = BTreeMap::new();
    projections.insert(SEE.to_string(), project(see, &axis)?);
    projections.insert(HEAR.to_string(), project(hear, &axis)?);
    for (name, m) in extra {
        projections.insert(name.clone(), project(m, &axis)?);
    }

    let s_see = &projections[SEE];
    let s_hear = &projections[HEAR];
    let delta_mu = mean(s_see) - mean(s_hear);
    let d = cohens_d(s_see, s_hear)?;
    let area = auroc(s_see, s_hear)?;

    let mut curves = BTreeMap::new();
    for (name, s) in &projections {
        let curve = GaussianKde::new(s, None)?.curve(grid_points, Execution::default())?;
        curves.insert(name.clone(), curve);
    }

    Ok(SeparationReport {
        delta_mu,
        cohens_d: d,
        auroc: area,
        axis_norm: axis.delta_norm,
        projections,
        curves,
    })
}
