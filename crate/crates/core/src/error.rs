use thiserror::Error;

/// Errors surfaced by the construction and its certification suite.
///
/// `ConstructionSoundness` is fatal by design: once any law of the
/// construction fails, every downstream enclosure would be meaningless,
/// so builders abort instead of continuing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shell index {k} out of range (max shell {max})")]
    ShellOutOfRange { k: usize, max: usize },

    #[error("index {index} out of range for shell {k}")]
    IndexOutOfRange { index: i64, k: usize },

    #[error("invalid growth policy: {0}")]
    InvalidPolicy(String),

    #[error("{law} violated{}: {detail}", at.map(|k| format!(" at k={k}")).unwrap_or_default())]
    ConstructionSoundness {
        /// Short law tag, e.g. "(xy)" or "(bound)", as printed by `check`.
        law: &'static str,
        at: Option<usize>,
        detail: String,
    },

    #[error("insufficient precision: {0}")]
    Precision(String),

    #[error("state too shallow: need {needed}, have depth {depth}")]
    DepthExhausted { needed: String, depth: usize },

    #[error("no coprime pair within the search box (t_max={t_max})")]
    BoxNotFound { t_max: u64 },

    #[error("state format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("malformed state: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn soundness(law: &'static str, at: impl Into<Option<usize>>, detail: impl Into<String>) -> Self {
        Error::ConstructionSoundness {
            law,
            at: at.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
