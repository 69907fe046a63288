use super::dataset::{DatasetEntry, Motion};
use super::{loop_key, motion_key, pose_key};
use crate::discrete::DiscreteKey;
use crate::error::{Error, Result};
use crate::gaussian::NoiseModel;
use crate::nonlinear::{BetweenResidual, HybridNonlinearFactor, NonlinearFactor, NonlinearGraphFactor, Pose2};

/// Covariance of the "loop rejected" leaf, applied isotropically.
pub const LOOP_OUTLIER_VARIANCE: f64 = 10.0;

pub fn motion_pose(m: &Motion) -> Pose2<f64> {
    Pose2::new(m[0], m[1], m[2])
}

fn between(from: u64, to: u64, m: &Motion, noise: NoiseModel<f64>) -> Result<NonlinearFactor<f64>> {
    NonlinearFactor::new(BetweenResidual::new(pose_key(from), pose_key(to), motion_pose(m)), noise)
}

/// Odometry factor for dataset entry `index`: a plain between-factor for a
/// single hypothesis, otherwise one leaf per hypothesis sharing the noise.
pub fn build_motion_factor(entry: &DatasetEntry, index: u64) -> Result<NonlinearGraphFactor<f64>> {
    let DatasetEntry::Odometry { from, to, hypotheses, sigma_xy, sigma_theta } = entry else {
        return Err(Error::InvalidStructure("build_motion_factor needs an odometry entry".into()));
    };
    let noise = NoiseModel::diagonal(&[*sigma_xy, *sigma_xy, *sigma_theta])?;
    if let [single] = hypotheses.as_slice() {
        return Ok(between(*from, *to, single, noise)?.into());
    }
    let key = DiscreteKey::new(motion_key(index), hypotheses.len())?;
    let leaves = hypotheses.iter().map(|h| between(*from, *to, h, noise.clone())).collect::<Result<_>>()?;
    Ok(HybridNonlinearFactor::from_components(&[key], leaves)?.into())
}

/// Switchable loop closure for dataset entry `index`: mode 1 uses the
/// measured noise, mode 0 the loose isotropic outlier model.
pub fn build_loop_factor(entry: &DatasetEntry, index: u64) -> Result<NonlinearGraphFactor<f64>> {
    let DatasetEntry::LoopClosure { from, to, measured, sigma_xy, sigma_theta } = entry else {
        return Err(Error::InvalidStructure("build_loop_factor needs a loop-closure entry".into()));
    };
    let outlier = NoiseModel::isotropic(3, LOOP_OUTLIER_VARIANCE.sqrt())?;
    let inlier = NoiseModel::diagonal(&[*sigma_xy, *sigma_xy, *sigma_theta])?;
    let leaves = vec![between(*from, *to, measured, outlier)?, between(*from, *to, measured, inlier)?];
    Ok(HybridNonlinearFactor::from_components(&[DiscreteKey::binary(loop_key(index))], leaves)?.into())
}

pub fn build_factor(entry: &DatasetEntry, index: u64) -> Result<NonlinearGraphFactor<f64>> {
    match entry {
        DatasetEntry::Odometry { .. } => build_motion_factor(entry, index),
        DatasetEntry::LoopClosure { .. } => build_loop_factor(entry, index),
    }
}
