//! Square-loop trajectories with ambiguous odometry and true loop closures,
//! generated together with their ground truth.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{DatasetEntry, Motion};
use super::{loop_key, motion_key};
use crate::key::Key;
use crate::nonlinear::Pose2;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    /// Unit steps per side of the square.
    pub side: u64,
    pub laps: u64,
    /// Ambiguous odometry entries placed before each loop closure.
    pub ambiguities: Vec<usize>,
    /// Forward offset of the decoy hypothesis, meters.
    pub decoy_offset: f64,
    pub sigma_xy: f64,
    pub sigma_theta: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            side: 5,
            laps: 5,
            ambiguities: vec![3, 2, 3, 2],
            decoy_offset: 0.5,
            sigma_xy: 0.01,
            sigma_theta: 0.002,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub entries: Vec<DatasetEntry>,
    pub truth: Vec<Pose2<f64>>,
    /// Correct value of every discrete mode.
    pub modes: BTreeMap<Key, usize>,
}

/// Generates the dataset.
///
/// The robot drives `laps` times around a square of `side` unit steps,
/// turning left at each corner. A loop closure links each pose `side - 1`
/// steps into a lap to the same place one lap later. Ambiguous entries for
/// loop `i` are drawn among the first `side + 1` steps of its span, where
/// the heading is east or north, so that decoys never cancel out.
pub fn generate(config: &SyntheticConfig) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lap = 4 * config.side;
    let n = lap * config.laps;
    let xy = Normal::new(0.0, config.sigma_xy).expect("positive sigma");
    let th = Normal::new(0.0, config.sigma_theta).expect("positive sigma");

    let step = |k: u64| Pose2::new(1.0, 0.0, if (k + 1).is_multiple_of(config.side) { FRAC_PI_2 } else { 0.0 });
    let mut truth = vec![Pose2::identity()];
    for k in 0..n - 1 {
        truth.push(truth[k as usize].compose(&step(k)));
    }

    let first = config.side - 1;
    let loop_ends: Vec<u64> = (1..config.laps).map(|i| first + i * lap).collect();
    let mut ambiguous = BTreeMap::new();
    for (span, &count) in config.ambiguities.iter().enumerate().take(loop_ends.len()) {
        let start = first + span as u64 * lap;
        let candidates = (config.side + 1) as usize;
        for i in sample(&mut rng, candidates, count.min(candidates)) {
            ambiguous.insert(start + i as u64, rng.random_range(0..2usize));
        }
    }

    let noisy = |p: Pose2<f64>, rng: &mut ChaCha8Rng| -> Motion {
        [p.x() + xy.sample(rng), p.y() + xy.sample(rng), p.theta() + th.sample(rng)]
    };
    let mut entries = Vec::new();
    let mut modes = BTreeMap::new();
    for k in 0..n - 1 {
        let measured = noisy(step(k), &mut rng);
        let hypotheses = match ambiguous.get(&k) {
            Some(&correct) => {
                let decoy = [measured[0] + config.decoy_offset, measured[1], measured[2]];
                modes.insert(motion_key(entries.len() as u64), correct);
                if correct == 0 {
                    vec![measured, decoy]
                } else {
                    vec![decoy, measured]
                }
            }
            None => vec![measured],
        };
        entries.push(DatasetEntry::Odometry {
            from: k,
            to: k + 1,
            hypotheses,
            sigma_xy: config.sigma_xy,
            sigma_theta: config.sigma_theta,
        });
        if loop_ends.contains(&(k + 1)) {
            let (i, j) = (k + 1 - lap, k + 1);
            let rel = truth[i as usize].between(&truth[j as usize]);
            modes.insert(loop_key(entries.len() as u64), 1);
            entries.push(DatasetEntry::LoopClosure {
                from: i,
                to: j,
                measured: noisy(rel, &mut rng),
                sigma_xy: config.sigma_xy,
                sigma_theta: config.sigma_theta,
            });
        }
    }
    SyntheticDataset { entries, truth, modes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let d = generate(&SyntheticConfig::default());
        assert_eq!(d.truth.len(), 100);
        let loops = d.entries.iter().filter(|e| matches!(e, DatasetEntry::LoopClosure { .. })).count();
        let ambiguous =
            d.entries.iter().filter(|e| matches!(e, DatasetEntry::Odometry { .. }) && e.is_hybrid()).count();
        assert_eq!((loops, ambiguous), (4, 10));
        assert_eq!(d.modes.len(), 14);
        assert!(d.truth[20].local(&Pose2::identity()).amax() < 1e-12);
        assert!(d.truth[99].local(&Pose2::new(0.0, 1.0, -FRAC_PI_2)).amax() < 1e-12);
    }

    #[test]
    fn seed_determines_dataset() {
        let a = generate(&SyntheticConfig::default());
        let b = generate(&SyntheticConfig::default());
        let c = generate(&SyntheticConfig { seed: 1, ..Default::default() });
        assert_eq!(a.entries, b.entries);
        assert_ne!(a.entries, c.entries);
    }
}
