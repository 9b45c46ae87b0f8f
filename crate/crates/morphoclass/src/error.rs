use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("atlas: duplicate region index {0}")]
    DuplicateIndex(usize),
    #[error("atlas: duplicate region name {0:?}")]
    DuplicateName(String),
    #[error("atlas: indices are not dense 0..R-1 (expected {expected}, found {found})")]
    NonDenseIndices { expected: usize, found: usize },
    #[error("atlas: unknown hemisphere token {0:?} (expected L or R)")]
    UnknownHemisphere(String),
    #[error("atlas: unknown lobe token {0:?}")]
    UnknownLobe(String),
    #[error("atlas: hemisphere counts are unbalanced ({left} L vs {right} R)")]
    UnbalancedHemispheres { left: usize, right: usize },
    #[error("atlas: empty region list")]
    EmptyAtlas,
    #[error("phenotypes row {row}: cannot parse age {value:?}")]
    BadAge { row: usize, value: String },
    #[error("phenotypes row {row}: unknown sex token {value:?} (expected M or F)")]
    BadSex { row: usize, value: String },
    #[error("phenotypes row {row}: unknown group token {value:?} (expected ASD or TD)")]
    BadGroup { row: usize, value: String },
    #[error("duplicate subject id {0:?}")]
    DuplicateSubject(String),
    #[error("{path}: header mismatch at column {index}: expected {expected:?}, found {found:?}")]
    ColumnMismatch {
        path: String,
        index: usize,
        expected: String,
        found: String,
    },
    #[error("{path}: expected {expected} columns, found {found}")]
    ColumnCount {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value for subject {subject:?} in column {column:?}")]
    NonFiniteValue { subject: String, column: String },
    #[error("stats table {path}: atlas region {region:?} is missing")]
    MissingRegion { path: String, region: String },
    #[error("stats table {path}: StructName {name:?} is not an atlas region")]
    UnknownStructName { path: String, name: String },
    #[error("stats table {path}: {reason}")]
    MalformedTable { path: String, reason: String },
    #[error("stats table {path}: no data rows")]
    EmptyTable { path: String },
    #[error("cohort join: subjects present in only one input: {0:?}")]
    UnmatchedSubjects(Vec<String>),
    #[error("cohort join produced no subjects")]
    EmptyJoin,
    #[error("standardizer: fit mask selects no subjects")]
    EmptyMask,
    #[error("standardizer: need at least 2 subjects to fit, got {0}")]
    InsufficientSubjects(usize),
    #[error("atlas shape mismatch: params fitted for R={expected}, data has R={found}")]
    AtlasMismatch { expected: usize, found: usize },
    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),
    #[error("t-test: group {group:?} has {n} subjects, need at least 2")]
    GroupTooSmall { group: String, n: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature matrix has no columns")]
    EmptyFeatureSet,
    #[error("no features passed selection (alpha = {alpha})")]
    NoFeaturesSelected { alpha: f64 },
    #[error("gini: class counts sum to zero")]
    ZeroCounts,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("feature row has {found} values, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("class {group:?} is too small to place one subject on each side of the split")]
    ClassTooSmall { group: String },
    #[error("split requires a non-degenerate train fraction, got {0}")]
    BadTrainFraction(f64),
    #[error("edge ranking requires MCF descriptors, found {0}")]
    NotMcf(&'static str),
    #[error("cached matrix was built against a different atlas")]
    CacheInvalid,
    #[error("cache file {path}: {reason}")]
    BadCache { path: String, reason: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// True for errors caused by the content of user-supplied data, as
    /// opposed to configuration or runtime failures. The CLI maps these
    /// to a dedicated exit code.
    pub fn is_data_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Json(_) | Error::InvalidParam(_) | Error::Stage { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
