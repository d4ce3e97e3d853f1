//! Subcommand implementations.

pub mod block;
pub mod dcd_sweep;
pub mod gradcheck;
pub mod overhead_report;
pub mod qram_fit;
pub mod tomo_sweep;

/// Command failure split by exit-code contract: validation errors exit 1,
/// runtime errors exit 2.
#[derive(Debug)]
pub enum CmdError {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CmdError {
    fn from(e: E) -> Self {
        CmdError::Runtime(e.into())
    }
}

pub type CmdResult<T> = std::result::Result<T, CmdError>;

/// Marks an error as a validation failure (bad config, bad flags, bad input
/// shape).
pub fn invalid<E: Into<anyhow::Error>>(e: E) -> CmdError {
    CmdError::Validation(e.into())
}

pub fn invalid_msg(msg: impl Into<String>) -> CmdError {
    CmdError::Validation(anyhow::anyhow!(msg.into()))
}

/// Builds the bounded-size worker pool for `--jobs`.
pub fn thread_pool(jobs: usize) -> CmdResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CmdError::Runtime(e.into()))
}
