use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::smoother::{Checkpoint, ModeEstimate, RunResult, UpdateRecord};
use super::SlamError;
use crate::nonlinear::Pose2;

/// Files written by [`emit_results`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputPaths {
    pub trajectory: PathBuf,
    pub modes: PathBuf,
    pub timing: PathBuf,
    pub history: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            trajectory: dir.join("trajectory.txt"),
            modes: dir.join("modes.txt"),
            timing: dir.join("timing.csv"),
            history: dir.join("history.txt"),
        }
    }
}

fn pose_line(s: &mut String, prefix: &str, k: u64, p: &Pose2<f64>) {
    writeln!(s, "{prefix}{k} {:.9} {:.9} {:.9}", p.x(), p.y(), p.theta()).expect("writing to a String");
}

/// `POSE <k> <x> <y> <theta>` per pose.
pub fn format_trajectory(poses: &[(u64, Pose2<f64>)]) -> String {
    let mut s = String::new();
    for (k, p) in poses {
        pose_line(&mut s, "POSE ", *k, p);
    }
    s
}

/// `MODE <key> <value> <marginal>` per discrete mode.
pub fn format_modes(modes: &[ModeEstimate]) -> String {
    let mut s = String::new();
    for m in modes {
        writeln!(s, "MODE {} {} {:.9}", m.key, m.value, m.marginal).expect("writing to a String");
    }
    s
}

pub fn format_timing(rows: &[UpdateRecord]) -> String {
    let mut s = String::from("step,num_factors,num_hypotheses,millis\n");
    for r in rows {
        writeln!(s, "{},{},{},{:.3}", r.step, r.num_factors, r.num_hypotheses, r.millis).expect("writing to a String");
    }
    s
}

/// MAP estimate at every elimination checkpoint, one block per checkpoint.
pub fn format_history(history: &[Checkpoint]) -> String {
    let mut s = String::new();
    for c in history {
        writeln!(s, "CHECKPOINT {} {} {} {}", c.step, c.hypotheses_before_prune, c.hypotheses, c.relinearized as u8)
            .expect("writing to a String");
        for (k, p) in &c.poses {
            pose_line(&mut s, "POSE ", *k, p);
        }
        for (k, v) in c.modes.iter() {
            writeln!(s, "MODE {k} {v}").expect("writing to a String");
        }
    }
    s
}

fn write(path: &Path, text: String) -> Result<(), SlamError> {
    std::fs::write(path, text).map_err(|e| SlamError::io(path, e))
}

pub fn emit_results(result: &RunResult, paths: &OutputPaths) -> Result<(), SlamError> {
    write(&paths.trajectory, format_trajectory(&result.poses()))?;
    write(&paths.modes, format_modes(&result.modes))?;
    write(&paths.timing, format_timing(&result.timing))?;
    write(&paths.history, format_history(&result.history))
}
