//! Dataset manifests: `image_path,label,lesion_type,mask_path`.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 4] = ["image_path", "label", "lesion_type", "mask_path"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Healthy,
    Diseased,
}

impl ClassLabel {
    /// Class index used by the classifiers; diseased is the positive class.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Healthy => 0,
            ClassLabel::Diseased => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(ClassLabel::Healthy),
            1 => Some(ClassLabel::Diseased),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Healthy => "healthy",
            ClassLabel::Diseased => "diseased",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "healthy" => Ok(ClassLabel::Healthy),
            "diseased" => Ok(ClassLabel::Diseased),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LesionType {
    #[serde(rename = "active")]
    Active,
    #[serde(rename = "inactive")]
    Inactive,
    #[serde(rename = "active/inactive")]
    ActiveInactive,
    #[serde(rename = "none")]
    None,
}

impl LesionType {
    pub fn as_str(self) -> &'static str {
        match self {
            LesionType::Active => "active",
            LesionType::Inactive => "inactive",
            LesionType::ActiveInactive => "active/inactive",
            LesionType::None => "none",
        }
    }
}

impl fmt::Display for LesionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LesionType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "active" => Ok(LesionType::Active),
            "inactive" => Ok(LesionType::Inactive),
            "active/inactive" => Ok(LesionType::ActiveInactive),
            "none" => Ok(LesionType::None),
            _ => Err(format!("unknown lesion type {s:?}")),
        }
    }
}

/// Which records must carry masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ManifestMode {
    #[default]
    Classification,
    /// Diseased records must have a mask.
    Segmentation,
}

/// One manifest row with paths resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image_path: PathBuf,
    pub label: ClassLabel,
    pub lesion_type: LesionType,
    pub mask_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    records: Vec<ManifestRecord>,
    /// Where the records came from.
    pub source: String,
}

fn check_record(rec: &ManifestRecord, mode: ManifestMode) -> std::result::Result<(), String> {
    match (rec.label, rec.lesion_type) {
        (ClassLabel::Healthy, LesionType::None) => {}
        (ClassLabel::Healthy, t) => return Err(format!("healthy record has lesion type {t}")),
        (ClassLabel::Diseased, LesionType::None) => {
            return Err("diseased record has lesion type none".into())
        }
        _ => {}
    }
    if mode == ManifestMode::Segmentation && rec.label == ClassLabel::Diseased && rec.mask_path.is_none() {
        return Err("diseased record without mask_path".into());
    }
    if !rec.image_path.is_file() {
        return Err(format!("image {} does not exist", rec.image_path.display()));
    }
    if let Some(m) = &rec.mask_path {
        if !m.is_file() {
            return Err(format!("mask {} does not exist", m.display()));
        }
    }
    Ok(())
}

impl DatasetManifest {
    /// Validates the records; row numbers in errors are 1-based.
    pub fn new(records: Vec<ManifestRecord>, source: impl Into<String>, mode: ManifestMode) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, rec) in records.iter().enumerate() {
            let row = i + 1;
            if !seen.insert(rec.image_path.clone()) {
                return Err(Error::ManifestRow {
                    row,
                    message: format!("duplicate image path {}", rec.image_path.display()),
                });
            }
            check_record(rec, mode).map_err(|message| Error::ManifestRow { row, message })?;
        }
        Ok(Self {
            records,
            source: source.into(),
        })
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.label.index()).collect()
    }

    /// Diseased records only, as used by the segmentation benchmark.
    pub fn diseased(&self) -> Self {
        Self {
            records: self
                .records
                .iter()
                .filter(|r| r.label == ClassLabel::Diseased)
                .cloned()
                .collect(),
            source: self.source.clone(),
        }
    }

    /// Writes the manifest with paths relative to the directory of `path`
    /// where possible.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        if !base.as_os_str().is_empty() {
            std::fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
        }
        let rel = |p: &Path| -> Result<String> {
            let shown = p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned();
            if shown.contains(',') || shown.contains('\n') {
                return Err(Error::Manifest(format!("path {shown:?} contains a separator")));
            }
            Ok(shown)
        };
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Never)
            .from_path(path)
            .map_err(|e| csv_io(path, e))?;
        w.write_record(MANIFEST_HEADER)?;
        for r in &self.records {
            let mask = match &r.mask_path {
                Some(m) => rel(m)?,
                None => String::new(),
            };
            w.write_record([
                rel(&r.image_path)?,
                r.label.to_string(),
                r.lesion_type.to_string(),
                mask,
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Manifest(format!("{other:?}")),
    }
}

/// Reads and validates a manifest CSV. Relative paths are taken relative to
/// the manifest's directory. Quoted fields are not supported, so a path
/// containing a comma makes its row malformed.
pub fn load_manifest(path: impl AsRef<Path>, mode: ManifestMode) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .quoting(false)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;

    let header = reader.headers()?.clone();
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    if header != MANIFEST_HEADER {
        return Err(Error::Manifest(format!(
            "expected header {:?}, found {header:?}",
            MANIFEST_HEADER.join(",")
        )));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let bad = |message: String| Error::ManifestRow { row: row_no, message };
        if row.len() != MANIFEST_HEADER.len() {
            return Err(bad(format!(
                "expected {} fields, found {}",
                MANIFEST_HEADER.len(),
                row.len()
            )));
        }
        let field = |j: usize| row[j].trim();
        if field(0).is_empty() {
            return Err(bad("empty image_path".into()));
        }
        let label: ClassLabel = field(1).parse().map_err(bad)?;
        let lesion_type: LesionType = field(2).parse().map_err(bad)?;
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        records.push(ManifestRecord {
            image_path: resolve(field(0)),
            label,
            lesion_type,
            mask_path: (!field(3).is_empty()).then(|| resolve(field(3))),
        });
    }
    DatasetManifest::new(records, path.display().to_string(), mode)
}
