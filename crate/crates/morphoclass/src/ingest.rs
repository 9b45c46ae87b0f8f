//! Input parsing: phenotype tables, morphometry matrices, and the cohort join.
//!
//! The canonical exchange format is the *wide* morphometry CSV: one row per
//! subject, `4R` value columns named `{region}__{measure}` in atlas order.
//! FreeSurfer stats tables can be imported with [`parse_freesurfer_stats`],
//! which converts them into the same in-memory representation; everything
//! downstream consumes only the validated wide form.

use crate::atlas::{Atlas, Hemisphere};
use crate::error::{Error, Result};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

/// Subject sex as recorded in the phenotype table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

/// Diagnostic group: the binary class label of the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Td,
    Asd,
}

impl Group {
    /// Fixed label order used by models and reports: TD first, ASD second.
    /// ASD is the positive class for precision/recall.
    pub const LABEL_ORDER: [Group; 2] = [Group::Td, Group::Asd];

    pub fn name(self) -> &'static str {
        match self {
            Group::Td => "TD",
            Group::Asd => "ASD",
        }
    }

    /// Position in [`Group::LABEL_ORDER`].
    pub fn class_index(self) -> usize {
        match self {
            Group::Td => 0,
            Group::Asd => 1,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of the phenotype table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeRecord {
    pub subject_id: String,
    pub site_id: String,
    /// Age at scan in years.
    pub age: f64,
    pub sex: Sex,
    pub group: Group,
    /// Full-scale IQ; absent when the source column is empty.
    pub fiq: Option<f64>,
}

/// The four regional measures, in fixed column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    Area,
    Thickness,
    Volume,
    MeanCurv,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Area,
        Measure::Thickness,
        Measure::Volume,
        Measure::MeanCurv,
    ];

    /// Column suffix in the wide CSV.
    pub fn suffix(self) -> &'static str {
        match self {
            Measure::Area => "area",
            Measure::Thickness => "thickness",
            Measure::Volume => "volume",
            Measure::MeanCurv => "meancurv",
        }
    }

    pub fn parse_suffix(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.suffix() == s)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

/// Per-subject R x 4 morphometry matrix in atlas index order.
/// Columns: area mm^2, thickness mm, volume mm^3, mean curvature mm^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphometryRecord {
    pub subject_id: String,
    pub values: Array2<f64>,
}

/// Joined phenotype + morphometry cohort, sorted by subject id.
#[derive(Debug, Clone)]
pub struct CohortDataset {
    pub atlas: Atlas,
    pub phenotypes: Vec<PhenotypeRecord>,
    pub morphometry: Vec<MorphometryRecord>,
}

impl CohortDataset {
    pub fn len(&self) -> usize {
        self.phenotypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phenotypes.is_empty()
    }

    pub fn subject_ids(&self) -> Vec<String> {
        self.phenotypes.iter().map(|p| p.subject_id.clone()).collect()
    }

    pub fn labels(&self) -> Vec<Group> {
        self.phenotypes.iter().map(|p| p.group).collect()
    }
}

/// How [`build_cohort`] treats subjects present in only one input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinMode {
    /// Any unmatched subject is an error.
    #[default]
    Strict,
    /// Unmatched subjects are dropped and returned as warnings.
    Lenient,
}

const PHENOTYPE_HEADER: [&str; 6] = ["SUB_ID", "SITE_ID", "AGE_AT_SCAN", "SEX", "DX_GROUP", "FIQ"];

/// Parse a phenotype CSV with header `SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ`.
pub fn parse_phenotypes(path: impl AsRef<Path>) -> Result<Vec<PhenotypeRecord>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_phenotypes_str(&text, &path.display().to_string())
}

/// Parse phenotype CSV content; `origin` names the source in errors.
pub fn parse_phenotypes_str(text: &str, origin: &str) -> Result<Vec<PhenotypeRecord>> {
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
    check_header(&headers, &PHENOTYPE_HEADER, origin)?;

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let row = row + 2; // 1-based, counting the header line
        let record = record.map_err(|e| Error::Csv {
            path: origin.to_string(),
            source: e,
        })?;
        let subject_id = record[0].trim().to_string();
        if !seen.insert(subject_id.clone()) {
            return Err(Error::DuplicateSubject(subject_id));
        }
        let age: f64 = record[2]
            .trim()
            .parse()
            .ok()
            .filter(|a: &f64| a.is_finite() && *a > 0.0)
            .ok_or_else(|| Error::BadAge {
                row,
                value: record[2].to_string(),
            })?;
        let sex = match record[3].trim() {
            "M" => Sex::M,
            "F" => Sex::F,
            other => {
                return Err(Error::BadSex {
                    row,
                    value: other.to_string(),
                })
            }
        };
        let group = match record[4].trim() {
            "ASD" => Group::Asd,
            "TD" => Group::Td,
            other => {
                return Err(Error::BadGroup {
                    row,
                    value: other.to_string(),
                })
            }
        };
        let fiq_field = record[5].trim();
        let fiq = if fiq_field.is_empty() {
            None
        } else {
            Some(fiq_field.parse::<f64>().map_err(|_| Error::MalformedTable {
                path: origin.to_string(),
                reason: format!("row {row}: bad FIQ value {fiq_field:?}"),
            })?)
        };
        records.push(PhenotypeRecord {
            subject_id,
            site_id: record[1].trim().to_string(),
            age,
            sex,
            group,
            fiq,
        });
    }
    Ok(records)
}

/// Serialize phenotype records back to the canonical CSV form.
pub fn write_phenotypes_string(records: &[PhenotypeRecord]) -> String {
    let mut out = String::from("SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ\n");
    for r in records {
        let sex = match r.sex {
            Sex::M => "M",
            Sex::F => "F",
        };
        let fiq = r.fiq.map(|v| format!("{v}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.subject_id, r.site_id, r.age, sex, r.group, fiq
        ));
    }
    out
}

/// Expected wide-CSV header for a given atlas: `SUB_ID` then 4R measure columns.
pub fn wide_header(atlas: &Atlas) -> Vec<String> {
    let mut header = Vec::with_capacity(1 + 4 * atlas.len());
    header.push("SUB_ID".to_string());
    for region in atlas.regions() {
        for measure in Measure::ALL {
            header.push(format!("{}__{}", region.name, measure.suffix()));
        }
    }
    header
}

/// Parse a wide morphometry CSV against an atlas. The header must match
/// [`wide_header`] exactly; any non-finite cell is an error.
pub fn parse_morphometry_wide(
    path: impl AsRef<Path>,
    atlas: &Atlas,
) -> Result<Vec<MorphometryRecord>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_morphometry_wide_str(&text, atlas, &path.display().to_string())
}

/// Parse wide morphometry CSV content; `origin` names the source in errors.
pub fn parse_morphometry_wide_str(
    text: &str,
    atlas: &Atlas,
    origin: &str,
) -> Result<Vec<MorphometryRecord>> {
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
    let expected = wide_header(atlas);
    if headers.len() != expected.len() {
        return Err(Error::ColumnCount {
            path: origin.to_string(),
            expected: expected.len(),
            found: headers.len(),
        });
    }
    for (i, want) in expected.iter().enumerate() {
        if &headers[i] != want.as_str() {
            return Err(Error::ColumnMismatch {
                path: origin.to_string(),
                index: i,
                expected: want.clone(),
                found: headers[i].to_string(),
            });
        }
    }

    let r = atlas.len();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: origin.to_string(),
            source: e,
        })?;
        let subject_id = record[0].trim().to_string();
        if !seen.insert(subject_id.clone()) {
            return Err(Error::DuplicateSubject(subject_id));
        }
        let mut values = Array2::<f64>::zeros((r, 4));
        for (col, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonFiniteValue {
                subject: subject_id.clone(),
                column: expected[col + 1].clone(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    subject: subject_id.clone(),
                    column: expected[col + 1].clone(),
                });
            }
            values[[col / 4, col % 4]] = v;
        }
        records.push(MorphometryRecord { subject_id, values });
    }
    Ok(records)
}

/// Serialize morphometry records to wide-CSV text. Values use the shortest
/// representation that parses back to the identical double, so
/// parse(write(x)) == x bit for bit.
pub fn write_morphometry_wide_string(records: &[MorphometryRecord], atlas: &Atlas) -> String {
    let mut out = wide_header(atlas).join(",");
    out.push('\n');
    for record in records {
        out.push_str(&record.subject_id);
        for row in 0..atlas.len() {
            for col in 0..4 {
                out.push(',');
                out.push_str(&format!("{}", record.values[[row, col]]));
            }
        }
        out.push('\n');
    }
    out
}

/// Write morphometry records as a wide CSV file.
pub fn write_morphometry_wide(
    records: &[MorphometryRecord],
    atlas: &Atlas,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(write_morphometry_wide_string(records, atlas).as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Columns read from a FreeSurfer stats table, located by the ColHeaders line.
struct StatsColumns {
    struct_name: usize,
    surf_area: usize,
    gray_vol: usize,
    thick_avg: usize,
    mean_curv: usize,
}

fn parse_stats_table(
    text: &str,
    path: &str,
    hemisphere: Hemisphere,
    atlas: &Atlas,
    out: &mut Array2<f64>,
) -> Result<()> {
    // Header comments carry the column names, e.g.
    // # ColHeaders StructName NumVert SurfArea GrayVol ThickAvg ...
    let mut columns: Option<StatsColumns> = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.split_whitespace();
            if parts.next() == Some("ColHeaders") {
                let names: Vec<&str> = parts.collect();
                let find = |name: &str| {
                    names.iter().position(|n| *n == name).ok_or_else(|| {
                        Error::MalformedTable {
                            path: path.to_string(),
                            reason: format!("ColHeaders lacks required column {name}"),
                        }
                    })
                };
                columns = Some(StatsColumns {
                    struct_name: find("StructName")?,
                    surf_area: find("SurfArea")?,
                    gray_vol: find("GrayVol")?,
                    thick_avg: find("ThickAvg")?,
                    mean_curv: find("MeanCurv")?,
                });
            }
        }
    }
    let columns = columns.ok_or_else(|| Error::MalformedTable {
        path: path.to_string(),
        reason: "no ColHeaders comment line".to_string(),
    })?;

    let mut filled = vec![false; atlas.len()];
    let mut data_rows = 0usize;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        data_rows += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let needed = [
            columns.struct_name,
            columns.surf_area,
            columns.gray_vol,
            columns.thick_avg,
            columns.mean_curv,
        ];
        if needed.iter().any(|&i| i >= fields.len()) {
            return Err(Error::MalformedTable {
                path: path.to_string(),
                reason: format!("data row has only {} fields", fields.len()),
            });
        }
        let struct_name = fields[columns.struct_name];
        let region = atlas
            .index_of_struct(hemisphere, struct_name)
            .ok_or_else(|| Error::UnknownStructName {
                path: path.to_string(),
                name: struct_name.to_string(),
            })?;
        let parse = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedTable {
                    path: path.to_string(),
                    reason: format!("bad numeric field {:?} for {struct_name}", fields[i]),
                })
        };
        out[[region, 0]] = parse(columns.surf_area)?;
        out[[region, 1]] = parse(columns.thick_avg)?;
        out[[region, 2]] = parse(columns.gray_vol)?;
        out[[region, 3]] = parse(columns.mean_curv)?;
        filled[region] = true;
    }
    if data_rows == 0 {
        return Err(Error::EmptyTable {
            path: path.to_string(),
        });
    }
    for (i, region) in atlas.regions().iter().enumerate() {
        if region.hemisphere == hemisphere && !filled[i] {
            return Err(Error::MissingRegion {
                path: path.to_string(),
                region: region.name.clone(),
            });
        }
    }
    Ok(())
}

/// Import one subject from a directory holding `lh*.stats` and `rh*.stats`
/// FreeSurfer tables. The directory name becomes the subject id. All atlas
/// regions must be present; unknown StructNames are rejected.
pub fn parse_freesurfer_stats(dir: impl AsRef<Path>, atlas: &Atlas) -> Result<MorphometryRecord> {
    let dir = dir.as_ref();
    let subject_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| dir.display().to_string());

    let mut found: BTreeMap<Hemisphere, std::path::PathBuf> = BTreeMap::new();
    let entries =
        std::fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if !name.ends_with(".stats") {
            continue;
        }
        let hemisphere = if name.starts_with("lh") {
            Hemisphere::L
        } else if name.starts_with("rh") {
            Hemisphere::R
        } else {
            continue;
        };
        if found.insert(hemisphere, entry.path()).is_some() {
            return Err(Error::MalformedTable {
                path: dir.display().to_string(),
                reason: format!("multiple {} stats tables", hemisphere.prefix()),
            });
        }
    }

    let mut values = Array2::<f64>::zeros((atlas.len(), 4));
    for hemisphere in [Hemisphere::L, Hemisphere::R] {
        let path = found.get(&hemisphere).ok_or_else(|| Error::MalformedTable {
            path: dir.display().to_string(),
            reason: format!("no {}*.stats table", hemisphere.prefix()),
        })?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        parse_stats_table(
            &text,
            &path.display().to_string(),
            hemisphere,
            atlas,
            &mut values,
        )?;
    }
    Ok(MorphometryRecord { subject_id, values })
}

/// Import every subject subdirectory under `root`. Parsing runs in parallel;
/// the result is sorted by subject id so the output is schedule-independent.
pub fn parse_freesurfer_root(root: impl AsRef<Path>, atlas: &Atlas) -> Result<Vec<MorphometryRecord>> {
    let root = root.as_ref();
    let mut dirs: Vec<std::path::PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root.display().to_string(), e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    dirs.sort();
    let mut records = dirs
        .par_iter()
        .map(|dir| parse_freesurfer_stats(dir, atlas))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    Ok(records)
}

/// Join phenotypes and morphometry on subject id. Output is sorted by
/// subject id. Returns the dataset plus the list of dropped subject ids
/// (always empty in strict mode).
pub fn build_cohort(
    phenotypes: Vec<PhenotypeRecord>,
    morphometry: Vec<MorphometryRecord>,
    atlas: Atlas,
    mode: JoinMode,
) -> Result<(CohortDataset, Vec<String>)> {
    let pheno_ids: HashSet<&str> = phenotypes.iter().map(|p| p.subject_id.as_str()).collect();
    let morpho_ids: HashSet<&str> = morphometry.iter().map(|m| m.subject_id.as_str()).collect();

    let mut unmatched: Vec<String> = pheno_ids
        .symmetric_difference(&morpho_ids)
        .map(|s| s.to_string())
        .collect();
    unmatched.sort();

    if !unmatched.is_empty() && mode == JoinMode::Strict {
        return Err(Error::UnmatchedSubjects(unmatched));
    }

    let mut morpho_by_id: BTreeMap<String, MorphometryRecord> = morphometry
        .into_iter()
        .map(|m| (m.subject_id.clone(), m))
        .collect();

    let mut joined: Vec<(PhenotypeRecord, MorphometryRecord)> = phenotypes
        .into_iter()
        .filter_map(|p| {
            let m = morpho_by_id.remove(&p.subject_id)?;
            Some((p, m))
        })
        .collect();
    joined.sort_by(|a, b| a.0.subject_id.cmp(&b.0.subject_id));

    if joined.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let (phenotypes, morphometry) = joined.into_iter().unzip();
    Ok((
        CohortDataset {
            atlas,
            phenotypes,
            morphometry,
        },
        unmatched,
    ))
}

fn check_header(headers: &csv::StringRecord, expected: &[&str], origin: &str) -> Result<()> {
    if headers.len() != expected.len() {
        return Err(Error::ColumnCount {
            path: origin.to_string(),
            expected: expected.len(),
            found: headers.len(),
        });
    }
    for (i, want) in expected.iter().enumerate() {
        if &headers[i] != *want {
            return Err(Error::ColumnMismatch {
                path: origin.to_string(),
                index: i,
                expected: want.to_string(),
                found: headers[i].to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_atlas() -> Atlas {
        Atlas::from_csv_str(
            "index,name,hemisphere,lobe\n\
             0,lh_a,L,Frontal\n\
             1,lh_b,L,Parietal\n\
             2,rh_a,R,Frontal\n\
             3,rh_b,R,Parietal\n",
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn phenotype_row_parses() {
        let text = "SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ\n\
                    s1,NYU,9.5,M,ASD,\n\
                    s2,NYU,12.25,F,TD,108.5\n";
        let records = parse_phenotypes_str(text, "toy").unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].age, 9.5);
        assert_eq!(records[0].group, Group::Asd);
        assert_eq!(records[0].fiq, None);
        assert_eq!(records[1].fiq, Some(108.5));
        assert_eq!(records[1].sex, Sex::F);
    }

    #[test]
    fn phenotype_bad_age() {
        let text = "SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ\ns1,NYU,nine,M,ASD,\n";
        match parse_phenotypes_str(text, "toy") {
            Err(Error::BadAge { row: 2, .. }) => {}
            other => panic!("expected BadAge at row 2, got {other:?}"),
        }
    }

    #[test]
    fn phenotype_duplicate_subject() {
        let text = "SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ\n\
                    s1,NYU,9.5,M,ASD,\n\
                    s1,NYU,10.5,M,TD,\n";
        assert!(matches!(
            parse_phenotypes_str(text, "toy"),
            Err(Error::DuplicateSubject(_))
        ));
    }

    #[test]
    fn phenotype_bad_group() {
        let text = "SUB_ID,SITE_ID,AGE_AT_SCAN,SEX,DX_GROUP,FIQ\ns1,NYU,9.5,M,AUT,\n";
        assert!(matches!(
            parse_phenotypes_str(text, "toy"),
            Err(Error::BadGroup { .. })
        ));
    }

    fn toy_wide_csv() -> String {
        let atlas = toy_atlas();
        let mut text = wide_header(&atlas).join(",");
        text.push('\n');
        text.push_str("s1");
        for i in 0..16 {
            text.push_str(&format!(",{}", i as f64 * 0.5 + 1.0));
        }
        text.push('\n');
        text
    }

    #[test]
    fn wide_parse_shapes_and_order() {
        let atlas = toy_atlas();
        let records = parse_morphometry_wide_str(&toy_wide_csv(), &atlas, "toy").unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].values.dim(), (4, 4));
        // row-major fill: region 0 gets the first four values
        assert_eq!(records[0].values[[0, 0]], 1.0);
        assert_eq!(records[0].values[[0, 3]], 2.5);
        assert_eq!(records[0].values[[3, 3]], 8.5);
    }

    #[test]
    fn wide_header_must_match_atlas() {
        let atlas = toy_atlas();
        let mut text = wide_header(&atlas).join(",");
        text = text.replace("lh_b__volume", "lh_b__vol");
        text.push('\n');
        assert!(matches!(
            parse_morphometry_wide_str(&text, &atlas, "toy"),
            Err(Error::ColumnMismatch { index: 7, .. })
        ));

        let short = "SUB_ID,lh_a__area\ns1,1.0\n";
        assert!(matches!(
            parse_morphometry_wide_str(short, &atlas, "toy"),
            Err(Error::ColumnCount { expected: 17, .. })
        ));
    }

    #[test]
    fn wide_rejects_non_finite() {
        let atlas = toy_atlas();
        let text = toy_wide_csv().replace(",1.5,", ",NaN,");
        match parse_morphometry_wide_str(&text, &atlas, "toy") {
            Err(Error::NonFiniteValue { subject, column }) => {
                assert_eq!(subject, "s1");
                assert_eq!(column, "lh_a__thickness");
            }
            other => panic!("expected NonFiniteValue, got {other:?}"),
        }
    }

    #[test]
    fn wide_round_trip_is_identity() {
        let atlas = toy_atlas();
        let records = parse_morphometry_wide_str(&toy_wide_csv(), &atlas, "toy").unwrap();
        let text = write_morphometry_wide_string(&records, &atlas);
        let again = parse_morphometry_wide_str(&text, &atlas, "round-trip").unwrap();
        assert_eq!(records, again);
    }

    fn pheno(id: &str, age: f64, group: Group) -> PhenotypeRecord {
        PhenotypeRecord {
            subject_id: id.to_string(),
            site_id: "X".to_string(),
            age,
            sex: Sex::M,
            group,
            fiq: None,
        }
    }

    fn morpho(id: &str, r: usize) -> MorphometryRecord {
        MorphometryRecord {
            subject_id: id.to_string(),
            values: Array2::zeros((r, 4)),
        }
    }

    #[test]
    fn join_strict_and_lenient() {
        let atlas = toy_atlas();
        let phenos = vec![
            pheno("s1", 9.0, Group::Asd),
            pheno("s2", 9.0, Group::Td),
            pheno("s3", 9.0, Group::Td),
        ];
        let morphs = vec![morpho("s2", 4), morpho("s1", 4)];

        match build_cohort(phenos.clone(), morphs.clone(), atlas.clone(), JoinMode::Strict) {
            Err(Error::UnmatchedSubjects(ids)) => assert_eq!(ids, vec!["s3".to_string()]),
            other => panic!("expected UnmatchedSubjects, got {other:?}"),
        }

        let (dataset, warnings) =
            build_cohort(phenos, morphs, atlas.clone(), JoinMode::Lenient).unwrap();
        assert_eq!(dataset.len(), 2);
        assert_eq!(warnings, vec!["s3".to_string()]);
        // sorted by subject id
        assert_eq!(dataset.phenotypes[0].subject_id, "s1");
        assert_eq!(dataset.morphometry[0].subject_id, "s1");

        let (full, none) = build_cohort(
            vec![pheno("s1", 9.0, Group::Asd)],
            vec![morpho("s1", 4)],
            atlas,
            JoinMode::Strict,
        )
        .unwrap();
        assert_eq!(full.len(), 1);
        assert!(none.is_empty());
    }

    #[test]
    fn join_empty_result() {
        let atlas = toy_atlas();
        assert!(matches!(
            build_cohort(
                vec![pheno("s1", 9.0, Group::Asd)],
                vec![morpho("s2", 4)],
                atlas,
                JoinMode::Lenient,
            ),
            Err(Error::EmptyJoin)
        ));
    }

    const LH_STATS: &str = "\
# Table of FreeSurfer cortical parcellation anatomical statistics
# ColHeaders StructName NumVert SurfArea GrayVol ThickAvg ThickStd MeanCurv GausCurv FoldInd CurvInd
lh_a_struct 100 631.0 1928.0 2.51 0.5 0.135 0.04 10 1.1
lh_b_struct 200 892.0 2519.0 2.74 0.4 0.121 0.03 12 1.4
";

    const RH_STATS: &str = "\
# Table of FreeSurfer cortical parcellation anatomical statistics
# ColHeaders StructName NumVert SurfArea GrayVol ThickAvg ThickStd MeanCurv GausCurv FoldInd CurvInd
rh_a_struct 100 640.0 1890.0 2.48 0.5 0.140 0.04 10 1.1
rh_b_struct 200 901.0 2533.0 2.70 0.4 0.118 0.03 12 1.4
";

    fn stats_atlas() -> Atlas {
        Atlas::from_csv_str(
            "index,name,hemisphere,lobe\n\
             0,lh_lh_a_struct,L,Frontal\n\
             1,lh_lh_b_struct,L,Parietal\n\
             2,rh_rh_a_struct,R,Frontal\n\
             3,rh_rh_b_struct,R,Parietal\n",
            "stats-toy",
        )
        .unwrap()
    }

    #[test]
    fn freesurfer_stats_import() {
        let dir = tempfile::tempdir().unwrap();
        let subject = dir.path().join("sub-01");
        std::fs::create_dir(&subject).unwrap();
        std::fs::write(subject.join("lh.aparc.a2009s.stats"), LH_STATS).unwrap();
        std::fs::write(subject.join("rh.aparc.a2009s.stats"), RH_STATS).unwrap();

        let atlas = stats_atlas();
        let record = parse_freesurfer_stats(&subject, &atlas).unwrap();
        assert_eq!(record.subject_id, "sub-01");
        // columns: area, thickness, volume, meancurv
        assert_eq!(record.values[[0, 0]], 631.0);
        assert_eq!(record.values[[0, 1]], 2.51);
        assert_eq!(record.values[[0, 2]], 1928.0);
        assert_eq!(record.values[[0, 3]], 0.135);
        assert_eq!(record.values[[3, 2]], 2533.0);
    }

    #[test]
    fn freesurfer_stats_missing_region() {
        let dir = tempfile::tempdir().unwrap();
        let subject = dir.path().join("sub-02");
        std::fs::create_dir(&subject).unwrap();
        let truncated: String = LH_STATS.lines().take(3).collect::<Vec<_>>().join("\n");
        std::fs::write(subject.join("lh.stats"), truncated).unwrap();
        std::fs::write(subject.join("rh.stats"), RH_STATS).unwrap();

        match parse_freesurfer_stats(&subject, &stats_atlas()) {
            Err(Error::MissingRegion { region, .. }) => assert_eq!(region, "lh_lh_b_struct"),
            other => panic!("expected MissingRegion, got {other:?}"),
        }
    }

    #[test]
    fn freesurfer_stats_unknown_struct() {
        let dir = tempfile::tempdir().unwrap();
        let subject = dir.path().join("sub-03");
        std::fs::create_dir(&subject).unwrap();
        std::fs::write(
            subject.join("lh.stats"),
            LH_STATS.replace("lh_b_struct", "mystery_struct"),
        )
        .unwrap();
        std::fs::write(subject.join("rh.stats"), RH_STATS).unwrap();

        assert!(matches!(
            parse_freesurfer_stats(&subject, &stats_atlas()),
            Err(Error::UnknownStructName { .. })
        ));
    }

    #[test]
    fn freesurfer_stats_comment_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let subject = dir.path().join("sub-04");
        std::fs::create_dir(&subject).unwrap();
        let comments: String = LH_STATS
            .lines()
            .filter(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        std::fs::write(subject.join("lh.stats"), comments).unwrap();
        std::fs::write(subject.join("rh.stats"), RH_STATS).unwrap();

        assert!(matches!(
            parse_freesurfer_stats(&subject, &stats_atlas()),
            Err(Error::EmptyTable { .. })
        ));
    }
}
