use thiserror::Error;

/// Errors produced by the toolkit's loaders, validators, and operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed vocabulary document: {0}")]
    MalformedVocab(String),

    #[error("malformed merges document (line {line}): {message}")]
    MalformedMerges { line: usize, message: String },

    #[error("unknown merge operand {operand:?} (line {line})")]
    UnknownMergeOperand { operand: String, line: usize },

    #[error("merge product {product:?} missing from vocabulary (line {line})")]
    MergeProductMissing { product: String, line: usize },

    #[error("duplicate merge pair {pair:?} (line {line})")]
    DuplicateMerge { pair: String, line: usize },

    #[error("duplicate id {id} assigned to more than one token")]
    DuplicateTokenId { id: u32 },

    #[error("vocabulary is missing the single-byte token for 0x{byte:02x}")]
    MissingByteToken { byte: u8 },

    #[error("unknown token id {0}")]
    UnknownTokenId(u32),

    #[error("invalid codepoint ranges: {0}")]
    InvalidRanges(String),

    #[error("id map is not a dense 0..n renumbering: {0}")]
    IdMapNotDense(String),

    #[error("id map references row {row} but the matrix has {rows} rows")]
    EmbeddingRowOutOfRange { row: u32, rows: u32 },

    #[error("malformed embedding file: {0}")]
    MalformedEmbedding(String),

    #[error("malformed id map (line {line}): {message}")]
    MalformedIdMap { line: usize, message: String },

    #[error("length mismatch: expected {expected} characters, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid syllable {input:?}: {message}")]
    InvalidSyllable { input: String, message: String },

    #[error("malformed pinyin table (line {line}): {message}")]
    MalformedPinyinTable { line: usize, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty selection: no records matched")]
    EmptySelection,

    #[error("invalid n-gram order {0}: expected 2..=5")]
    InvalidOrder(usize),

    #[error("invalid smoothing constant: {0}")]
    InvalidAlpha(String),

    #[error("invalid interpolation weights: {0}")]
    InvalidLambdas(String),

    #[error("empty text")]
    EmptyText,

    #[error("malformed language model file: {0}")]
    MalformedLm(String),

    #[error("invalid channel error rate {0}: expected 0 <= epsilon < 1")]
    InvalidEpsilon(f64),

    #[error("invalid beam width 0: expected >= 1")]
    InvalidBeamWidth,

    #[error("malformed dataset (line {line}): {message}")]
    MalformedDataset { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
