//! 2-D pose-graph SLAM with ambiguous odometry and switchable loop closures:
//! dataset I/O, factor construction, a synthetic generator, and the
//! scheduled incremental smoother behind the `hybridfg` binary.

mod dataset;
mod factors;
mod output;
mod smoother;
mod synthetic;

use std::path::{Path, PathBuf};

pub use dataset::{format_dataset, parse_dataset, parse_dataset_str, write_dataset, DatasetEntry, Motion};
pub use factors::{build_factor, build_loop_factor, build_motion_factor, motion_pose, LOOP_OUTLIER_VARIANCE};
pub use output::{emit_results, format_history, format_modes, format_timing, format_trajectory, OutputPaths};
pub use smoother::{run, Checkpoint, ModeEstimate, RunConfig, RunError, RunResult, Smoother, UpdateRecord};
pub use synthetic::{generate, SyntheticConfig, SyntheticDataset};

use crate::key::Key;

pub fn pose_key(index: u64) -> Key {
    Key::symbol('x', index)
}

/// Mode of the ambiguous odometry at dataset entry `entry`.
pub fn motion_key(entry: u64) -> Key {
    Key::symbol('m', entry)
}

/// Inlier/outlier switch of the loop closure at dataset entry `entry`.
pub fn loop_key(entry: u64) -> Key {
    Key::symbol('l', entry)
}

#[derive(Debug, thiserror::Error)]
pub enum SlamError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Solver(#[from] crate::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("optimization diverged")]
    Diverged,
}

impl SlamError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SlamError::Io { path: path.to_path_buf(), source }
    }

    /// Bad files or settings, as opposed to solver failures.
    pub fn is_input_error(&self) -> bool {
        matches!(self, SlamError::Io { .. } | SlamError::Parse { .. } | SlamError::Config(_))
    }
}
