//! Embedding matrices, dataset manifests, and the `EMB1` container.
//!
//! Layout of an `EMB1` file (all integers little-endian):
//!
//! ```text
//! "EMB1" | u32 version | u64 rows | u64 cols | u32 meta_len | meta JSON | rows*cols f32
//! ```
//!
//! The payload is row-major. Metadata travels inside the file so a matrix
//! stays self-describing when copied between machines.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EMB1";
pub const FORMAT_VERSION: u32 = 1;
/// Bytes before the metadata block: magic, version, rows, cols, meta_len.
pub const FIXED_HEADER_LEN: usize = 4 + 4 + 8 + 8 + 4;

/// Sensory cue given to the language model.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cue {
    None,
    See,
    Hear,
    Custom(String),
}

/// Rewrite applied to a prompt or generation before embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Ablated,
    RedirectedToSee,
    RedirectedToHear,
    CaptionPlusVisualWords,
    VisualWordsOnly,
}

impl Transform {
    fn as_str(self) -> &'static str {
        match self {
            Transform::Ablated => "ablated",
            Transform::RedirectedToSee => "redirected-to-see",
            Transform::RedirectedToHear => "redirected-to-hear",
            Transform::CaptionPlusVisualWords => "caption-plus-visual-words",
            Transform::VisualWordsOnly => "visual-words-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditionTag {
    pub cue: Cue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verb: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
}

impl ConditionTag {
    pub fn new(cue: Cue) -> Self {
        ConditionTag {
            cue,
            verb: None,
            transform: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        !matches!(&self.cue, Cue::Custom(s) if s.trim().is_empty())
    }
}

impl Default for ConditionTag {
    fn default() -> Self {
        ConditionTag::new(Cue::None)
    }
}

impl fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cue {
            Cue::None => f.write_str("none")?,
            Cue::See => f.write_str("see")?,
            Cue::Hear => f.write_str("hear")?,
            Cue::Custom(s) => write!(f, "custom:{s}")?,
        }
        if let Some(verb) = &self.verb {
            write!(f, "/{verb}")?;
        }
        if let Some(t) = self.transform {
            write!(f, "+{}", t.as_str())?;
        }
        Ok(())
    }
}

/// Which hidden layers were averaged to form each row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerPolicy {
    #[default]
    MeanAllLayers,
    SingleLayer(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub model_id: String,
    #[serde(default)]
    pub condition: ConditionTag,
    #[serde(default)]
    pub layer_policy: LayerPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_budget: Option<u32>,
}

impl MatrixMeta {
    pub fn new(model_id: impl Into<String>, condition: ConditionTag) -> Self {
        MatrixMeta {
            model_id: model_id.into(),
            condition,
            layer_policy: LayerPolicy::MeanAllLayers,
            token_budget: None,
        }
    }

    /// Human-readable problems with the metadata; empty when complete.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.model_id.trim().is_empty() {
            out.push("missing model_id".to_string());
        }
        if !self.condition.is_valid() {
            out.push("custom cue must carry a nonempty string".to_string());
        }
        if self.token_budget == Some(0) {
            out.push("token_budget must be >= 1".to_string());
        }
        out
    }
}

/// An `rows x cols` matrix of embeddings stored row-major as `f32`.
///
/// Construction only checks the shape. Value invariants (finite, no zero
/// rows) are checked by [`EmbeddingMatrix::check`], on load, and by every
/// consumer that needs them.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
    pub meta: MatrixMeta,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>, meta: MatrixMeta) -> Result<Self> {
        if cols == 0 {
            return Err(Error::Shape("matrix must have at least one column".into()));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Shape("rows * cols overflows".into()))?;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(EmbeddingMatrix {
            rows,
            cols,
            data,
            meta,
        })
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], meta: MatrixMeta) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data, meta)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    /// Returns a copy whose rows are `self.row(indices[0]), self.row(indices[1]), ...`.
    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
            meta: self.meta.clone(),
        }
    }

    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        self.iter_rows()
            .enumerate()
            .filter(|(_, r)| r.iter().all(|&v| v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// Checks the value invariants: every entry finite, no all-zero row.
    pub fn check(&self) -> Result<()> {
        if let Some((row, col)) = self.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        if let Some(&i) = self.zero_rows().first() {
            return Err(Error::ZeroRow(i));
        }
        Ok(())
    }
}

/// Serializes `matrix` into the `EMB1` byte layout.
pub fn encode_matrix(matrix: &EmbeddingMatrix) -> Result<Vec<u8>> {
    if let Some((row, col)) = matrix.first_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    let meta = serde_json::to_vec(&matrix.meta).map_err(|e| Error::Metadata(e.to_string()))?;
    let meta_len = u32::try_from(meta.len())
        .map_err(|_| Error::Metadata("metadata block exceeds u32::MAX bytes".into()))?;
    let mut buf = Vec::with_capacity(FIXED_HEADER_LEN + meta.len() + 4 * matrix.data.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(matrix.rows as u64).to_le_bytes());
    buf.extend_from_slice(&(matrix.cols as u64).to_le_bytes());
    buf.extend_from_slice(&meta_len.to_le_bytes());
    buf.extend_from_slice(&meta);
    for v in &matrix.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, len: usize) -> Result<&'a [u8]> {
    let end = pos.checked_add(len).ok_or(Error::TruncatedHeader)?;
    let out = bytes.get(*pos..end).ok_or(Error::TruncatedHeader)?;
    *pos = end;
    Ok(out)
}

/// Parses an `EMB1` byte buffer and checks the matrix invariants.
pub fn decode_matrix(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut pos = 0;
    let magic = take(bytes, &mut pos, 4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            found: magic.try_into().expect("4 bytes"),
        });
    }
    let version = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let rows = u64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(take(bytes, &mut pos, 8)?.try_into().expect("8 bytes"));
    let meta_len = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().expect("4 bytes"));
    let meta_bytes = take(bytes, &mut pos, meta_len as usize)?;
    let meta: MatrixMeta =
        serde_json::from_slice(meta_bytes).map_err(|e| Error::Metadata(e.to_string()))?;

    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Shape(format!("{rows}x{cols} overflows")))?;
    let found = (bytes.len() - pos) as u64;
    if found < expected {
        return Err(Error::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes(found - expected));
    }
    let data: Vec<f32> = bytes[pos..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let matrix = EmbeddingMatrix::new(rows as usize, cols as usize, data, meta)?;
    matrix.check()?;
    Ok(matrix)
}

pub fn write_matrix(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_matrix(matrix)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path)?;
    decode_matrix(&bytes)
}

/// Total size of the encoded file for a matrix with the given metadata.
pub fn encoded_len(matrix: &EmbeddingMatrix) -> Result<usize> {
    let meta = serde_json::to_vec(&matrix.meta).map_err(|e| Error::Metadata(e.to_string()))?;
    Ok(FIXED_HEADER_LEN + meta.len() + 4 * matrix.rows * matrix.cols)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub item_id: String,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_ref: Option<String>,
}

/// Ordered list of paired items; fixes row order for every matrix of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn new(dataset_id: impl Into<String>, items: Vec<ManifestItem>) -> Result<Self> {
        let m = DatasetManifest {
            dataset_id: dataset_id.into(),
            items,
        };
        m.check()?;
        Ok(m)
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn check(&self) -> Result<()> {
        if self.items.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "manifest needs at least 2 items, has {}",
                self.items.len()
            )));
        }
        let mut seen = HashSet::with_capacity(self.items.len());
        for item in &self.items {
            if !seen.insert(item.item_id.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate item_id {:?}",
                    item.item_id
                )));
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path)?;
    let m: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
    m.check()?;
    Ok(m)
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCheck {
    pub index: usize,
    pub model_id: String,
    pub condition: String,
    pub rows: usize,
    pub cols: usize,
    pub row_count_ok: bool,
    pub zero_rows: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_finite: Option<(usize, usize)>,
    pub metadata_problems: Vec<String>,
    pub violations: Vec<String>,
}

impl MatrixCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dataset_id: String,
    pub n_items: usize,
    pub matrices: Vec<MatrixCheck>,
    pub passed: bool,
}

/// Checks that every matrix is well formed and row-aligned with `manifest`.
///
/// Violations are collected rather than returned as errors. Column counts may
/// differ between matrices.
pub fn validate_cell_set(manifest: &DatasetManifest, matrices: &[EmbeddingMatrix]) -> ValidationReport {
    let n = manifest.n_items();
    let checks: Vec<MatrixCheck> = matrices
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let row_count_ok = m.rows() == n;
            let zero_rows = m.zero_rows();
            let non_finite = m.first_non_finite();
            let metadata_problems = m.meta.problems();
            let mut violations = Vec::new();
            if !row_count_ok {
                violations.push(format!("row count mismatch ({}\u{2260}{n})", m.rows()));
            }
            if !zero_rows.is_empty() {
                let list: Vec<String> = zero_rows.iter().map(|r| r.to_string()).collect();
                violations.push(format!("zero rows at [{}]", list.join(", ")));
            }
            if let Some((r, c)) = non_finite {
                violations.push(format!("non-finite value at row {r}, column {c}"));
            }
            violations.extend(metadata_problems.iter().map(|p| format!("metadata: {p}")));
            MatrixCheck {
                index,
                model_id: m.meta.model_id.clone(),
                condition: m.meta.condition.to_string(),
                rows: m.rows(),
                cols: m.cols(),
                row_count_ok,
                zero_rows,
                non_finite,
                metadata_problems,
                violations,
            }
        })
        .collect();
    let passed = !checks.is_empty() && checks.iter().all(MatrixCheck::passed);
    ValidationReport {
        dataset_id: manifest.dataset_id.clone(),
        n_items: n,
        matrices: checks,
        passed,
    }
}
