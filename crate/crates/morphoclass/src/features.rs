//! Feature construction: standardization, MF, and MCF matrices.
//!
//! Each subject contributes an `R x 4` block of regional measures. After
//! per-column z-scoring these become:
//!
//! * **MF** — the standardized measures themselves, one column per
//!   (region, measure), `4R` columns, region-major / measure-minor order.
//! * **MCF** — the Euclidean distance between two regions' standardized
//!   4-measure profiles, one column per unordered region pair `(i, j)` with
//!   `i < j` in lexicographic order, `R(R-1)/2` columns.
//!
//! Distances are computed on *standardized* measures: raw volume is three
//! to four orders of magnitude larger than mean curvature, and an
//! unstandardized distance would be a volume difference in disguise.

use crate::atlas::Atlas;
use crate::error::{Error, Result};
use crate::ingest::{CohortDataset, Measure};
use ndarray::{Array2, Array3, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Which subjects a standardizer (or a selection) was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScope {
    /// Fit on the training split only; applied unchanged to the test split.
    #[default]
    TrainOnly,
    /// Fit on every subject in the experiment band.
    FullCohort,
}

impl FitScope {
    pub fn name(self) -> &'static str {
        match self {
            FitScope::TrainOnly => "train_only",
            FitScope::FullCohort => "full_cohort",
        }
    }
}

/// Per-column mean/sd pairs for z-scoring, one per (region, measure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub scope: FitScope,
    /// Number of subjects the parameters were fitted on.
    pub n_fit: usize,
    /// Row-major over regions, 4 entries per region.
    pub mean: Vec<f64>,
    /// Sample standard deviation (n-1); exactly 0.0 flags a constant column.
    pub sd: Vec<f64>,
}

impl StandardizationParams {
    pub fn n_regions(&self) -> usize {
        self.mean.len() / 4
    }

    /// Column indices whose fitted sd was zero.
    pub fn constant_columns(&self) -> Vec<usize> {
        self.sd
            .iter()
            .enumerate()
            .filter(|(_, sd)| **sd == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Fit per-column mean and sample sd over the masked subjects.
pub fn fit_standardizer(
    dataset: &CohortDataset,
    subject_rows: &[usize],
    scope: FitScope,
) -> Result<StandardizationParams> {
    if subject_rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    if subject_rows.len() < 2 {
        return Err(Error::InsufficientSubjects(subject_rows.len()));
    }
    let r = dataset.atlas.len();
    let n = subject_rows.len() as f64;
    let mut mean = vec![0.0; 4 * r];
    let mut sd = vec![0.0; 4 * r];
    for col in 0..4 * r {
        let (region, measure) = (col / 4, col % 4);
        let mut sum = 0.0;
        for &row in subject_rows {
            sum += dataset.morphometry[row].values[[region, measure]];
        }
        let m = sum / n;
        let mut ss = 0.0;
        for &row in subject_rows {
            let d = dataset.morphometry[row].values[[region, measure]] - m;
            ss += d * d;
        }
        mean[col] = m;
        sd[col] = (ss / (n - 1.0)).sqrt();
    }
    Ok(StandardizationParams {
        scope,
        n_fit: subject_rows.len(),
        mean,
        sd,
    })
}

/// Apply fitted parameters to every subject: z = (x - mean) / sd.
/// Constant columns (sd = 0) map to 0 — such features are uninformative,
/// not invalid. Returns an (N, R, 4) tensor.
pub fn apply_standardizer(
    params: &StandardizationParams,
    dataset: &CohortDataset,
) -> Result<Array3<f64>> {
    let r = dataset.atlas.len();
    if params.n_regions() != r {
        return Err(Error::AtlasMismatch {
            expected: params.n_regions(),
            found: r,
        });
    }
    let n = dataset.len();
    let mut out = Array3::<f64>::zeros((n, r, 4));
    for (s, record) in dataset.morphometry.iter().enumerate() {
        for region in 0..r {
            for measure in 0..4 {
                let col = region * 4 + measure;
                let sd = params.sd[col];
                out[[s, region, measure]] = if sd == 0.0 {
                    0.0
                } else {
                    (record.values[[region, measure]] - params.mean[col]) / sd
                };
            }
        }
    }
    Ok(out)
}

/// MF or MCF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Mf,
    Mcf,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mf => "mf",
            FeatureKind::Mcf => "mcf",
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Identity of one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDescriptor {
    /// A single standardized regional measure.
    Mf { region: usize, measure: Measure },
    /// Distance between two regions' profiles; always i < j.
    Mcf { i: usize, j: usize },
}

impl FeatureDescriptor {
    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureDescriptor::Mf { .. } => FeatureKind::Mf,
            FeatureDescriptor::Mcf { .. } => FeatureKind::Mcf,
        }
    }

    /// Column name in CSV exports, e.g. `MF:lh_G_front_sup__thickness` or
    /// `MCF:lh_G_front_sup__rh_G_front_sup`.
    pub fn name(&self, atlas: &Atlas) -> String {
        match self {
            FeatureDescriptor::Mf { region, measure } => {
                format!("MF:{}__{}", atlas.region(*region).name, measure.suffix())
            }
            FeatureDescriptor::Mcf { i, j } => format!(
                "MCF:{}__{}",
                atlas.region(*i).name,
                atlas.region(*j).name
            ),
        }
    }

    /// Inverse of [`FeatureDescriptor::name`].
    pub fn parse_name(name: &str, atlas: &Atlas) -> Result<FeatureDescriptor> {
        let bad = || Error::InvalidParam(format!("bad feature descriptor {name:?}"));
        if let Some(rest) = name.strip_prefix("MF:") {
            let (region_name, suffix) = rest.rsplit_once("__").ok_or_else(bad)?;
            let region = atlas.index_of(region_name).ok_or_else(bad)?;
            let measure = Measure::parse_suffix(suffix).ok_or_else(bad)?;
            Ok(FeatureDescriptor::Mf { region, measure })
        } else if let Some(rest) = name.strip_prefix("MCF:") {
            // region names never contain a double underscore, so the first
            // split is unambiguous
            let (a, b) = rest.split_once("__").ok_or_else(bad)?;
            let i = atlas.index_of(a).ok_or_else(bad)?;
            let j = atlas.index_of(b).ok_or_else(bad)?;
            if i >= j {
                return Err(bad());
            }
            Ok(FeatureDescriptor::Mcf { i, j })
        } else {
            Err(bad())
        }
    }
}

/// Subjects x features value matrix with typed column descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub subject_ids: Vec<String>,
    pub descriptors: Vec<FeatureDescriptor>,
    pub values: Array2<f64>,
    /// The standardization that produced the underlying tensor.
    pub standardization: StandardizationParams,
}

impl FeatureMatrix {
    pub fn n_subjects(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }
}

/// MF descriptor list for an atlas: region-major, measure-minor.
pub fn mf_descriptors(r: usize) -> Vec<FeatureDescriptor> {
    (0..r)
        .flat_map(|region| {
            Measure::ALL
                .into_iter()
                .map(move |measure| FeatureDescriptor::Mf { region, measure })
        })
        .collect()
}

/// MCF descriptor list for an atlas: all pairs i < j, lexicographic.
pub fn mcf_descriptors(r: usize) -> Vec<FeatureDescriptor> {
    let mut out = Vec::with_capacity(r * (r.saturating_sub(1)) / 2);
    for i in 0..r {
        for j in (i + 1)..r {
            out.push(FeatureDescriptor::Mcf { i, j });
        }
    }
    out
}

/// Flatten the standardized tensor into the 4R-column MF matrix.
pub fn build_mf(
    tensor: &Array3<f64>,
    dataset: &CohortDataset,
    params: &StandardizationParams,
) -> FeatureMatrix {
    let (n, r, _) = tensor.dim();
    let values = tensor
        .to_shape((n, 4 * r))
        .expect("tensor is contiguous")
        .to_owned();
    FeatureMatrix {
        kind: FeatureKind::Mf,
        subject_ids: dataset.subject_ids(),
        descriptors: mf_descriptors(r),
        values,
        standardization: params.clone(),
    }
}

/// Euclidean distance between two 4-measure region profiles.
pub fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput("euclidean"));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Pairwise-distance MCF matrix: one column per region pair (i < j).
/// Rows are computed in parallel per subject; the output does not depend
/// on the schedule.
pub fn build_mcf(
    tensor: &Array3<f64>,
    dataset: &CohortDataset,
    params: &StandardizationParams,
) -> FeatureMatrix {
    let (n, r, _) = tensor.dim();
    let n_pairs = r * (r.saturating_sub(1)) / 2;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let profiles = tensor.index_axis(ndarray::Axis(0), s);
            let mut row = Vec::with_capacity(n_pairs);
            for i in 0..r {
                let pi = profiles.index_axis(ndarray::Axis(0), i);
                for j in (i + 1)..r {
                    let pj = profiles.index_axis(ndarray::Axis(0), j);
                    let d: f64 = pi
                        .iter()
                        .zip(pj.iter())
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    row.push(d.sqrt());
                }
            }
            row
        })
        .collect();
    let mut values = Array2::<f64>::zeros((n, n_pairs));
    for (s, row) in rows.into_iter().enumerate() {
        for (c, v) in row.into_iter().enumerate() {
            values[[s, c]] = v;
        }
    }
    FeatureMatrix {
        kind: FeatureKind::Mcf,
        subject_ids: dataset.subject_ids(),
        descriptors: mcf_descriptors(r),
        values,
        standardization: params.clone(),
    }
}

/// CSV export: header `SUB_ID` + descriptor names, shortest-round-trip values.
pub fn write_feature_csv_string(matrix: &FeatureMatrix, atlas: &Atlas) -> String {
    let mut out = String::from("SUB_ID");
    for d in &matrix.descriptors {
        out.push(',');
        out.push_str(&d.name(atlas));
    }
    out.push('\n');
    for (s, id) in matrix.subject_ids.iter().enumerate() {
        out.push_str(id);
        for c in 0..matrix.n_features() {
            out.push(',');
            out.push_str(&format!("{}", matrix.values[[s, c]]));
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_csv(matrix: &FeatureMatrix, atlas: &Atlas, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_feature_csv_string(matrix, atlas))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parse a feature CSV produced by [`write_feature_csv`]. The standardization
/// provenance is not stored in CSV; the returned matrix carries a placeholder
/// marked with `n_fit = 0`.
pub fn parse_feature_csv_str(text: &str, atlas: &Atlas, origin: &str) -> Result<FeatureMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: origin.to_string(),
            source: e,
        })?
        .clone();
    if headers.is_empty() || &headers[0] != "SUB_ID" {
        return Err(Error::ColumnMismatch {
            path: origin.to_string(),
            index: 0,
            expected: "SUB_ID".to_string(),
            found: headers.get(0).unwrap_or("").to_string(),
        });
    }
    let descriptors: Vec<FeatureDescriptor> = headers
        .iter()
        .skip(1)
        .map(|name| FeatureDescriptor::parse_name(name, atlas))
        .collect::<Result<_>>()?;
    if descriptors.is_empty() {
        return Err(Error::EmptyFeatureSet);
    }
    let kind = descriptors[0].kind();
    if descriptors.iter().any(|d| d.kind() != kind) {
        return Err(Error::InvalidParam(format!(
            "{origin}: mixed MF/MCF columns in one matrix"
        )));
    }
    let mut subject_ids = Vec::new();
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: origin.to_string(),
            source: e,
        })?;
        if record.len() != descriptors.len() + 1 {
            return Err(Error::ColumnCount {
                path: origin.to_string(),
                expected: descriptors.len() + 1,
                found: record.len(),
            });
        }
        let id = record[0].to_string();
        for (c, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonFiniteValue {
                subject: id.clone(),
                column: headers[c + 1].to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    subject: id.clone(),
                    column: headers[c + 1].to_string(),
                });
            }
            data.push(v);
        }
        subject_ids.push(id);
    }
    let n = subject_ids.len();
    let values = Array2::from_shape_vec((n, descriptors.len()), data).expect("shape checked");
    Ok(FeatureMatrix {
        kind,
        subject_ids,
        descriptors,
        values,
        standardization: StandardizationParams {
            scope: FitScope::TrainOnly,
            n_fit: 0,
            mean: Vec::new(),
            sd: Vec::new(),
        },
    })
}

pub fn parse_feature_csv(path: impl AsRef<Path>, atlas: &Atlas) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_feature_csv_str(&text, atlas, &path.display().to_string())
}

const CACHE_MAGIC: &[u8; 4] = b"MCFC";
const CACHE_VERSION: u32 = 1;

/// Binary cache of a feature matrix, keyed to an atlas digest.
///
/// Layout (all integers little-endian): magic `MCFC`, version u32, atlas
/// SHA-256 (32 bytes), kind u8, scope u8, n_fit u64, standardization
/// mean/sd pairs (u64 count + f64 pairs), subject ids (u64 count, each
/// u32 length + UTF-8 bytes), then n_features u64 and the dense f64 value
/// block. Descriptors are not stored — they are a pure function of
/// (kind, atlas), which the digest pins.
pub fn write_feature_cache(
    matrix: &FeatureMatrix,
    atlas: &Atlas,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?,
    );
    let io_err = |e| Error::io(path.display().to_string(), e);

    file.write_all(CACHE_MAGIC).map_err(io_err)?;
    file.write_all(&CACHE_VERSION.to_le_bytes()).map_err(io_err)?;
    file.write_all(&atlas.sha256()).map_err(io_err)?;
    file.write_all(&[match matrix.kind {
        FeatureKind::Mf => 0u8,
        FeatureKind::Mcf => 1u8,
    }])
    .map_err(io_err)?;
    file.write_all(&[match matrix.standardization.scope {
        FitScope::TrainOnly => 0u8,
        FitScope::FullCohort => 1u8,
    }])
    .map_err(io_err)?;
    file.write_all(&(matrix.standardization.n_fit as u64).to_le_bytes())
        .map_err(io_err)?;
    file.write_all(&(matrix.standardization.mean.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    for (m, s) in matrix
        .standardization
        .mean
        .iter()
        .zip(&matrix.standardization.sd)
    {
        file.write_all(&m.to_le_bytes()).map_err(io_err)?;
        file.write_all(&s.to_le_bytes()).map_err(io_err)?;
    }
    file.write_all(&(matrix.subject_ids.len() as u64).to_le_bytes())
        .map_err(io_err)?;
    for id in &matrix.subject_ids {
        file.write_all(&(id.len() as u32).to_le_bytes()).map_err(io_err)?;
        file.write_all(id.as_bytes()).map_err(io_err)?;
    }
    file.write_all(&(matrix.n_features() as u64).to_le_bytes())
        .map_err(io_err)?;
    for v in matrix.values.iter() {
        file.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

/// Load a binary cache, refusing it when the atlas digest differs.
pub fn read_feature_cache(path: impl AsRef<Path>, atlas: &Atlas) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut file = std::io::BufReader::new(
        std::fs::File::open(path).map_err(|e| Error::io(display.clone(), e))?,
    );
    let bad = |reason: &str| Error::BadCache {
        path: display.clone(),
        reason: reason.to_string(),
    };

    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != CACHE_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    file.read_exact(&mut u32buf).map_err(|_| bad("truncated version"))?;
    if u32::from_le_bytes(u32buf) != CACHE_VERSION {
        return Err(bad("unsupported version"));
    }
    let mut digest = [0u8; 32];
    file.read_exact(&mut digest).map_err(|_| bad("truncated digest"))?;
    if digest != atlas.sha256() {
        return Err(Error::CacheInvalid);
    }

    let mut byte = [0u8; 1];
    file.read_exact(&mut byte).map_err(|_| bad("truncated kind"))?;
    let kind = match byte[0] {
        0 => FeatureKind::Mf,
        1 => FeatureKind::Mcf,
        _ => return Err(bad("bad kind byte")),
    };
    file.read_exact(&mut byte).map_err(|_| bad("truncated scope"))?;
    let scope = match byte[0] {
        0 => FitScope::TrainOnly,
        1 => FitScope::FullCohort,
        _ => return Err(bad("bad scope byte")),
    };
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |file: &mut dyn Read, what: &str| -> Result<u64> {
        file.read_exact(&mut u64buf)
            .map_err(|_| Error::BadCache {
                path: display.clone(),
                reason: format!("truncated {what}"),
            })?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let n_fit = read_u64(&mut file, "n_fit")? as usize;
    let n_params = read_u64(&mut file, "param count")? as usize;
    let mut mean = Vec::with_capacity(n_params);
    let mut sd = Vec::with_capacity(n_params);
    let mut f64buf = [0u8; 8];
    for _ in 0..n_params {
        file.read_exact(&mut f64buf).map_err(|_| bad("truncated params"))?;
        mean.push(f64::from_le_bytes(f64buf));
        file.read_exact(&mut f64buf).map_err(|_| bad("truncated params"))?;
        sd.push(f64::from_le_bytes(f64buf));
    }
    let n_subjects = read_u64(&mut file, "subject count")? as usize;
    let mut subject_ids = Vec::with_capacity(n_subjects);
    for _ in 0..n_subjects {
        file.read_exact(&mut u32buf).map_err(|_| bad("truncated id length"))?;
        let len = u32::from_le_bytes(u32buf) as usize;
        let mut buf = vec![0u8; len];
        file.read_exact(&mut buf).map_err(|_| bad("truncated id"))?;
        subject_ids.push(String::from_utf8(buf).map_err(|_| bad("id is not utf-8"))?);
    }
    let n_features = read_u64(&mut file, "feature count")? as usize;
    let descriptors = match kind {
        FeatureKind::Mf => mf_descriptors(atlas.len()),
        FeatureKind::Mcf => mcf_descriptors(atlas.len()),
    };
    if descriptors.len() != n_features {
        return Err(bad("feature count does not match atlas"));
    }
    let mut data = Vec::with_capacity(n_subjects * n_features);
    for _ in 0..n_subjects * n_features {
        file.read_exact(&mut f64buf).map_err(|_| bad("truncated values"))?;
        data.push(f64::from_le_bytes(f64buf));
    }
    let values =
        Array2::from_shape_vec((n_subjects, n_features), data).expect("shape checked above");
    Ok(FeatureMatrix {
        kind,
        subject_ids,
        descriptors,
        values,
        standardization: StandardizationParams {
            scope,
            n_fit,
            mean,
            sd,
        },
    })
}
