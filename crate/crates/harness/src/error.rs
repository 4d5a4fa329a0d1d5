use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] hypersens_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    /// Results or design files that parse but break the table contract.
    #[error("data error: {0}")]
    Data(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    /// 2 configuration, 3 data or contract, 4 IO.
    pub fn exit_code(&self) -> i32 {
        use hypersens_core::Error as E;
        match self {
            HarnessError::Config(_) | HarnessError::Core(E::Config(_)) => 2,
            HarnessError::Io { .. } | HarnessError::Core(E::Io(_)) => 4,
            _ => 3,
        }
    }
}

pub(crate) fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn csv_at(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |e| {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(source) => HarnessError::Io {
                    path: path.to_path_buf(),
                    source,
                },
                _ => unreachable!(),
            }
        } else {
            HarnessError::Data(format!("{}: {e}", path.display()))
        }
    }
}
