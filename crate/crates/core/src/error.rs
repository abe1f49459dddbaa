use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scene-set or fixture file could not be parsed.
    #[error("parse error{}: {message}", frame_suffix(*.frame))]
    Parse {
        frame: Option<usize>,
        message: String,
    },

    /// A value violates a type invariant. `field` names the offending field.
    #[error("validation error{}: {field}: {message}", frame_suffix(*.frame))]
    Validation {
        frame: Option<usize>,
        field: String,
        message: String,
    },

    #[error("dataset contains no radar points")]
    EmptyDataset,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("detection {detection} lies inside box {box_index} which has no 3D height")]
    MissingAnnotation { detection: usize, box_index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

fn frame_suffix(frame: Option<usize>) -> String {
    match frame {
        Some(i) => format!(" in frame {i}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            frame: None,
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a frame index to parse and validation errors.
    pub fn in_frame(self, index: usize) -> Self {
        match self {
            Error::Parse { message, .. } => Error::Parse {
                frame: Some(index),
                message,
            },
            Error::Validation { field, message, .. } => Error::Validation {
                frame: Some(index),
                field,
                message,
            },
            other => other,
        }
    }

    /// True for errors caused by invalid input data rather than I/O or config.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation { .. }
                | Error::EmptyDataset
                | Error::Domain(_)
                | Error::ShapeMismatch(_)
                | Error::NonFinite(_)
                | Error::MissingAnnotation { .. }
        )
    }
}
