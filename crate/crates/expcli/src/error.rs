use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ExpError>;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    #[error("config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },

    #[error("data error: {0}")]
    Data(hm_core::Error),

    #[error("{0}")]
    Runtime(hm_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExpError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 2 config, 3 data, 4 budget or runtime.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config { .. } | Self::ConfigFile { .. } => 2,
            Self::Data(_) => 3,
            Self::Runtime(_) | Self::Output { .. } => 4,
        }
    }
}

impl From<hm_core::Error> for ExpError {
    fn from(e: hm_core::Error) -> Self {
        Self::Runtime(e)
    }
}

pub(crate) trait DataContext<T> {
    fn data_err(self) -> Result<T>;
}

impl<T> DataContext<T> for hm_core::Result<T> {
    fn data_err(self) -> Result<T> {
        self.map_err(ExpError::Data)
    }
}
