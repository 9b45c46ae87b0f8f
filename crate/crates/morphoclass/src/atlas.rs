//! Region atlas: the parcellation every other stage is aligned to.
//!
//! An [`Atlas`] is an ordered list of cortical regions with a hemisphere and
//! a lobe assignment. The bundled default is the 148-region Destrieux
//! parcellation (74 regions per hemisphere). The lobe column groups regions
//! into seven anatomical categories; since no canonical region-to-lobe table
//! exists for this parcellation, the bundled assignment is an editable
//! reconstruction — swap in your own CSV to override it.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

/// Cortical hemisphere, serialized as `L` / `R` in the atlas CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hemisphere {
    L,
    R,
}

impl Hemisphere {
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "L" => Ok(Hemisphere::L),
            "R" => Ok(Hemisphere::R),
            other => Err(Error::UnknownHemisphere(other.to_string())),
        }
    }

    /// FreeSurfer-style file prefix: `lh` / `rh`.
    pub fn prefix(self) -> &'static str {
        match self {
            Hemisphere::L => "lh",
            Hemisphere::R => "rh",
        }
    }
}

impl fmt::Display for Hemisphere {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hemisphere::L => "L",
            Hemisphere::R => "R",
        })
    }
}

/// The seven lobe categories used for feature attribution tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lobe {
    Frontal,
    Parietal,
    Temporal,
    Occipital,
    Insula,
    Occipitotemporal,
    Limbic,
}

impl Lobe {
    pub const ALL: [Lobe; 7] = [
        Lobe::Frontal,
        Lobe::Parietal,
        Lobe::Temporal,
        Lobe::Occipital,
        Lobe::Insula,
        Lobe::Occipitotemporal,
        Lobe::Limbic,
    ];

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "Frontal" => Ok(Lobe::Frontal),
            "Parietal" => Ok(Lobe::Parietal),
            "Temporal" => Ok(Lobe::Temporal),
            "Occipital" => Ok(Lobe::Occipital),
            "Insula" => Ok(Lobe::Insula),
            "Occipitotemporal" => Ok(Lobe::Occipitotemporal),
            "Limbic" => Ok(Lobe::Limbic),
            other => Err(Error::UnknownLobe(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Lobe::Frontal => "Frontal",
            Lobe::Parietal => "Parietal",
            Lobe::Temporal => "Temporal",
            Lobe::Occipital => "Occipital",
            Lobe::Insula => "Insula",
            Lobe::Occipitotemporal => "Occipitotemporal",
            Lobe::Limbic => "Limbic",
        }
    }
}

impl fmt::Display for Lobe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One parcellation region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub index: usize,
    /// Canonical unique name, e.g. `lh_G_front_sup`.
    pub name: String,
    pub hemisphere: Hemisphere,
    pub lobe: Lobe,
}

impl Region {
    /// The hemisphere-local structure name, i.e. the canonical name with its
    /// `lh_` / `rh_` prefix removed. Matches the StructName column of
    /// FreeSurfer stats tables.
    pub fn struct_name(&self) -> &str {
        self.name
            .strip_prefix("lh_")
            .or_else(|| self.name.strip_prefix("rh_"))
            .unwrap_or(&self.name)
    }
}

/// Ordered region registry. Construction validates all invariants, so a
/// value of this type is always internally consistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atlas {
    regions: Vec<Region>,
    by_name: HashMap<String, usize>,
}

const BUNDLED_DESTRIEUX: &str = include_str!("../data/destrieux_148.csv");

impl Atlas {
    /// Build an atlas from a region list. Regions may arrive in any order;
    /// they are sorted by index. Fails on duplicate indices or names,
    /// non-dense indices, or unbalanced hemispheres.
    pub fn new(mut regions: Vec<Region>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::EmptyAtlas);
        }
        regions.sort_by_key(|r| r.index);
        let mut by_name = HashMap::with_capacity(regions.len());
        let mut left = 0usize;
        for (pos, region) in regions.iter().enumerate() {
            if region.index != pos {
                // After sorting, any gap or repeat shows up as index != position.
                if regions.iter().filter(|r| r.index == region.index).count() > 1 {
                    return Err(Error::DuplicateIndex(region.index));
                }
                return Err(Error::NonDenseIndices {
                    expected: pos,
                    found: region.index,
                });
            }
            if by_name.insert(region.name.clone(), pos).is_some() {
                return Err(Error::DuplicateName(region.name.clone()));
            }
            if region.hemisphere == Hemisphere::L {
                left += 1;
            }
        }
        let right = regions.len() - left;
        if left != right {
            return Err(Error::UnbalancedHemispheres { left, right });
        }
        Ok(Atlas { regions, by_name })
    }

    /// The bundled 148-region Destrieux atlas.
    pub fn bundled_destrieux() -> Atlas {
        Self::from_csv_str(BUNDLED_DESTRIEUX, "<bundled destrieux_148>")
            .expect("bundled atlas is valid")
    }

    /// Load an atlas from a CSV file with header `index,name,hemisphere,lobe`.
    pub fn load(path: impl AsRef<Path>) -> Result<Atlas> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    /// Parse atlas CSV content. `origin` names the source in error messages.
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Atlas> {
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
        let expected = ["index", "name", "hemisphere", "lobe"];
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
        let mut regions = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Csv {
                path: origin.to_string(),
                source: e,
            })?;
            let index: usize = record[0].trim().parse().map_err(|_| Error::MalformedTable {
                path: origin.to_string(),
                reason: format!("bad region index {:?}", &record[0]),
            })?;
            regions.push(Region {
                index,
                name: record[1].trim().to_string(),
                hemisphere: Hemisphere::parse(record[2].trim())?,
                lobe: Lobe::parse(record[3].trim())?,
            });
        }
        Atlas::new(regions)
    }

    /// Serialize back to the canonical CSV form (UTF-8, LF line ends).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("index,name,hemisphere,lobe\n");
        for r in &self.regions {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.index, r.name, r.hemisphere, r.lobe
            ));
        }
        out
    }

    /// SHA-256 of the canonical CSV serialization. Embedded in binary
    /// feature caches so a cache built against a different atlas is refused.
    pub fn sha256(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.to_csv_string().as_bytes());
        hasher.finalize().into()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, index: usize) -> &Region {
        &self.regions[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Look up a region by hemisphere and FreeSurfer StructName, after alias
    /// normalization (older FreeSurfer releases spell some names with `&`).
    pub fn index_of_struct(&self, hemisphere: Hemisphere, struct_name: &str) -> Option<usize> {
        let canonical = format!("{}_{}", hemisphere.prefix(), normalize_struct_name(struct_name));
        self.index_of(&canonical)
    }

    /// Build a toy atlas of `r` regions for tests and synthetic cohorts.
    /// Requires an even `r`; lobes are assigned round-robin.
    pub fn synthetic(r: usize) -> Result<Atlas> {
        if r < 2 || r % 2 != 0 {
            return Err(Error::InvalidParam(format!(
                "synthetic atlas size must be even and >= 2, got {r}"
            )));
        }
        let half = r / 2;
        let regions = (0..r)
            .map(|i| {
                let (hemisphere, local) = if i < half {
                    (Hemisphere::L, i)
                } else {
                    (Hemisphere::R, i - half)
                };
                Region {
                    index: i,
                    name: format!("{}_region_{:03}", hemisphere.prefix(), local),
                    hemisphere,
                    lobe: Lobe::ALL[local % Lobe::ALL.len()],
                }
            })
            .collect();
        Atlas::new(regions)
    }
}

/// Normalize punctuation variants seen in FreeSurfer stats tables to the
/// bundled spelling: `G&S_...` for `G_and_S_...` and `.` for `-`.
pub fn normalize_struct_name(name: &str) -> String {
    let mut n = name.replace("G&S", "G_and_S").replace('&', "_and_");
    if n.contains('.') {
        n = n.replace('.', "-");
    }
    n
}

/// Convenience wrapper used by readers that take a generic source.
pub fn read_to_string(mut reader: impl Read, origin: &str) -> Result<String> {
    let mut buf = String::new();
    reader
        .read_to_string(&mut buf)
        .map_err(|e| Error::io(origin, e))?;
    Ok(buf)
}
