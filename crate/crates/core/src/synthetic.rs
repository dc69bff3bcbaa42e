//! Synthetic depth clips of a moving blob in front of a distant wall, for
//! smoke tests, benchmarks and the end-to-end check.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depth_io::{
    build_manifest, format_sample_id, write_sequence, DatasetManifest, DepthSequence, Frame,
    LabelMapping, SampleId,
};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Motion {
    TranslateUp,
    TranslateRight,
    Expand,
}

impl Motion {
    pub const ALL: [Motion; 3] = [Motion::TranslateUp, Motion::TranslateRight, Motion::Expand];

    /// 1-based action id.
    pub fn action_id(&self) -> u32 {
        *self as u32 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub subjects: u32,
    pub examples_per_subject: u32,
    /// Depth of the background wall; keep it outside the segmentation band.
    pub wall_depth: u32,
    /// Per-frame wobble of the blob centre, in pixels.
    pub center_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            width: 32,
            height: 32,
            frames: 16,
            subjects: 10,
            examples_per_subject: 2,
            wall_depth: 4000,
            center_jitter: 0.1,
            seed: 0,
        }
    }
}

/// One clip. Blob size, depth, start point and speed vary with the rng.
pub fn generate_sequence(motion: Motion, spec: &SyntheticSpec, rng: &mut impl Rng) -> DepthSequence {
    let (w, h) = (spec.width as f64, spec.height as f64);
    let steps = (spec.frames.max(2) - 1) as f64;
    let base_depth = rng.random_range(1400.0..2200.0);
    let bulge = rng.random_range(80.0..200.0);
    let r0 = rng.random_range(0.12..0.18) * w.min(h);
    let travel = rng.random_range(0.3..0.45);
    let (mut cx, mut cy) = (
        w * rng.random_range(0.35..0.65),
        h * rng.random_range(0.35..0.65),
    );
    let (mut vx, mut vy, mut grow) = (0.0, 0.0, 0.0);
    match motion {
        Motion::TranslateUp => {
            cy = h * rng.random_range(0.65..0.75);
            vy = -travel * h / steps;
        }
        Motion::TranslateRight => {
            cx = w * rng.random_range(0.25..0.35);
            vx = travel * w / steps;
        }
        Motion::Expand => {
            grow = rng.random_range(1.2..1.8) * r0 / steps;
        }
    }

    let frames = (0..spec.frames)
        .map(|t| {
            let t = t as f64;
            let j = spec.center_jitter;
            let (bx, by) = (
                cx + vx * t + rng.random_range(-j..=j),
                cy + vy * t + rng.random_range(-j..=j),
            );
            let r = r0 + grow * t;
            let mut data = vec![spec.wall_depth; spec.width * spec.height];
            for v in 0..spec.height {
                for u in 0..spec.width {
                    let d2 = ((u as f64 - bx).powi(2) + (v as f64 - by).powi(2)) / (r * r);
                    if d2 <= 1.0 {
                        let z = base_depth - bulge * (1.0 - d2).sqrt() + rng.random_range(-5.0..5.0);
                        data[v * spec.width + u] = z.round() as u32;
                    }
                }
            }
            Frame::new(spec.width, spec.height, data).expect("frame size matches spec")
        })
        .collect();
    DepthSequence::new(frames).expect("at least one frame")
}

/// Writes `subjects × examples × 3` clips into `dir` using the standard file
/// names and returns the identity-mapped manifest.
pub fn generate_dataset(dir: &Path, spec: &SyntheticSpec) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for motion in Motion::ALL {
        for subject in 1..=spec.subjects {
            for example in 1..=spec.examples_per_subject {
                let seq = generate_sequence(motion, spec, &mut rng);
                let id = SampleId::new(motion.action_id(), subject, example)?;
                write_sequence(&seq, &dir.join(format_sample_id(&id)))?;
            }
        }
    }
    build_manifest(dir, &LabelMapping::Identity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_moves_up() {
        let spec = SyntheticSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = generate_sequence(Motion::TranslateUp, &spec, &mut rng);
        let centroid_v = |f: &Frame| {
            let (mut s, mut n) = (0.0, 0.0);
            for (i, &d) in f.data().iter().enumerate() {
                if d < spec.wall_depth {
                    s += (i / spec.width) as f64;
                    n += 1.0;
                }
            }
            s / n
        };
        let first = centroid_v(&seq.frames()[0]);
        let last = centroid_v(seq.frames().last().unwrap());
        assert!(last < first - 5.0, "{first} -> {last}");
    }

    #[test]
    fn dataset_layout() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            subjects: 2,
            examples_per_subject: 1,
            frames: 4,
            ..SyntheticSpec::default()
        };
        let m = generate_dataset(dir.path(), &spec).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(m.class_count(), 3);
    }
}
