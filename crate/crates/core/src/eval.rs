//! Late fusion of class scores and cross-subject evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{featurize, Classifier, ScoreVector};
use crate::config::PipelineConfig;
use crate::depth_io::{read_sequence, DatasetManifest, DepthSequence, SampleId};
use crate::diagnostics::Diagnostic;
use crate::encode::{center_crop, encode};
use crate::error::{Error, Result};
use crate::hdmm::{extract_hdmm, TemporalScale};
use crate::par;
use crate::projection::ViewPlane;

/// Per-class arithmetic mean. Each class's values are summed in sorted order
/// so the result does not depend on input order.
fn mean(scores: &[&ScoreVector]) -> Result<ScoreVector> {
    let first = scores.first().ok_or(Error::EmptyFusion)?;
    let k = first.class_count();
    if let Some(bad) = scores.iter().find(|s| s.class_count() != k) {
        return Err(Error::ClassCountMismatch {
            expected: k,
            got: bad.class_count(),
        });
    }
    let mut out = Vec::with_capacity(k);
    let mut column = Vec::with_capacity(scores.len());
    for c in 0..k {
        column.clear();
        column.extend(scores.iter().map(|s| s.as_slice()[c]));
        column.sort_by(f64::total_cmp);
        out.push(column.iter().sum::<f64>() / scores.len() as f64);
    }
    ScoreVector::new(out)
}

/// Average of one plane's scores over the temporal scales it was scored at.
pub fn fuse_scales(scores: &[ScoreVector]) -> Result<ScoreVector> {
    mean(&scores.iter().collect::<Vec<_>>())
}

/// Average of the three per-plane scores; each plane must appear exactly once.
pub fn fuse_planes(scores: &[(ViewPlane, ScoreVector)]) -> Result<ScoreVector> {
    let mut by_plane: [Option<&ScoreVector>; 3] = [None; 3];
    for (plane, s) in scores {
        if by_plane[plane.index()].replace(s).is_some() {
            return Err(Error::MissingPlane(format!("plane {plane} given twice")));
        }
    }
    let found: Vec<&ScoreVector> = by_plane.iter().flatten().copied().collect();
    if found.len() != 3 {
        let missing: Vec<&str> = ViewPlane::ALL
            .iter()
            .filter(|p| by_plane[p.index()].is_none())
            .map(ViewPlane::tag)
            .collect();
        return Err(Error::MissingPlane(format!("missing {}", missing.join(", "))));
    }
    mean(&found)
}

/// One trained model per projection plane.
#[derive(Debug, Clone)]
pub struct PlaneModels<C> {
    models: [C; 3],
}

impl<C: Classifier> PlaneModels<C> {
    pub fn new(front: C, side: C, top: C) -> Result<Self> {
        let k = front.class_count();
        let dim = front.feature_dim();
        for m in [&side, &top] {
            if m.class_count() != k {
                return Err(Error::ClassCountMismatch {
                    expected: k,
                    got: m.class_count(),
                });
            }
            if m.feature_dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "plane models disagree on feature length: {dim} vs {}",
                    m.feature_dim()
                )));
            }
        }
        Ok(PlaneModels {
            models: [front, side, top],
        })
    }

    pub fn get(&self, plane: ViewPlane) -> &C {
        &self.models[plane.index()]
    }

    pub fn class_count(&self) -> usize {
        self.models[0].class_count()
    }
}

#[derive(Debug, Clone)]
pub struct SamplePrediction {
    pub scores: ScoreVector,
    /// Scale-fused score of each plane.
    pub per_plane: Vec<(ViewPlane, ScoreVector)>,
    /// Plane-fused score at each usable scale.
    pub per_scale: Vec<(TemporalScale, ScoreVector)>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Scores an unrotated sequence: every usable scale's map is encoded,
/// center-cropped and classified by its plane's model, then scores are
/// averaged over scales per plane and over the three planes.
pub fn predict_sample<C: Classifier>(
    seq: &DepthSequence,
    models: &PlaneModels<C>,
    scales: &[TemporalScale],
    cfg: &PipelineConfig,
) -> Result<SamplePrediction> {
    let ex = extract_hdmm(seq, None, scales, cfg.weight_params(), cfg)?;
    let scored = par::map(&ex.maps, |map| -> Result<_> {
        let img = center_crop(&encode(map, cfg.canvas)?, cfg.crop)?;
        let x = featurize(&img, cfg.feature_side);
        Ok((map.plane, map.scale, models.get(map.plane).predict(&x)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut per_plane = Vec::with_capacity(3);
    for plane in ViewPlane::ALL {
        let s: Vec<ScoreVector> = scored
            .iter()
            .filter(|(p, _, _)| *p == plane)
            .map(|(_, _, s)| s.clone())
            .collect();
        per_plane.push((plane, fuse_scales(&s)?));
    }
    let mut per_scale = Vec::new();
    for scale in ex.scales() {
        let s: Vec<(ViewPlane, ScoreVector)> = scored
            .iter()
            .filter(|(_, n, _)| *n == scale)
            .map(|(p, _, s)| (*p, s.clone()))
            .collect();
        per_scale.push((scale, fuse_planes(&s)?));
    }
    Ok(SamplePrediction {
        scores: fuse_planes(&per_plane)?,
        per_plane,
        per_scale,
        diagnostics: ex.diagnostics,
    })
}

/// Rows are true classes, columns predicted classes (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn tally(pairs: impl IntoIterator<Item = (usize, usize)>, classes: usize) -> Result<Self> {
        let mut counts = vec![vec![0u64; classes]; classes];
        for (t, p) in pairs {
            if t >= classes || p >= classes {
                return Err(Error::LabelOutOfRange {
                    label: t.max(p),
                    classes,
                });
            }
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.trace() as f64 / n as f64,
        }
    }

    /// `None` for classes with no test samples.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub sample: String,
    pub label: u32,
    pub predicted: u32,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub sample: String,
    pub label: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// Accuracy using one plane's (scale-fused) score alone.
    pub plane: BTreeMap<String, f64>,
    /// Accuracy using one scale's (plane-fused) score alone, over the samples
    /// where that scale was usable.
    pub scale: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub scales: Vec<usize>,
    pub weighted: bool,
    pub gamma: f64,
    pub delta: f64,
    pub depth_band: [u32; 2],
    pub depth_bins: usize,
    pub canvas: usize,
    pub crop: usize,
    pub feature_side: usize,
}

pub const REPORT_SCHEMA: &str = "hdmm-eval-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub accuracy: f64,
    pub correct: u64,
    pub evaluated: u64,
    pub failed: u64,
    /// Class labels (1-based) in confusion-matrix order.
    pub labels: Vec<u32>,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub confusion: ConfusionMatrix,
    pub breakdown: Breakdown,
    pub settings: EvalSettings,
    pub samples: Vec<SampleRow>,
    pub errors: Vec<ErrorRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Scored {
    id: SampleId,
    label: u32,
    outcome: Result<SamplePrediction>,
}

/// Runs [`predict_sample`] on every test entry. Samples whose extraction
/// fails become error rows and are left out of the accuracy denominator.
/// The report is the same whatever the entry order or thread count.
pub fn evaluate<C: Classifier>(
    test: &DatasetManifest,
    models: &PlaneModels<C>,
    scales: &[TemporalScale],
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidParam("test set is empty".into()));
    }
    let k = models.class_count();
    if test.class_count() as usize > k {
        return Err(Error::ClassCountMismatch {
            expected: k,
            got: test.class_count() as usize,
        });
    }
    let scored = par::map(test.entries(), |e| Scored {
        id: e.id,
        label: e.label,
        outcome: read_sequence(&e.path).and_then(|seq| predict_sample(&seq, models, scales, cfg)),
    });
    let mut results: Vec<(SampleId, u32, SamplePrediction)> = Vec::new();
    let mut errors = Vec::new();
    for s in scored {
        match s.outcome {
            Ok(p) => results.push((s.id, s.label, p)),
            Err(e @ Error::DimensionMismatch(_)) | Err(e @ Error::ClassCountMismatch { .. }) => {
                return Err(e)
            }
            Err(e) => errors.push(ErrorRow {
                sample: s.id.to_string(),
                label: s.label,
                error: e.to_string(),
            }),
        }
    }
    results.sort_by_key(|r| r.0);
    errors.sort_by(|a, b| a.sample.cmp(&b.sample));
    let preds: Vec<(usize, usize)> = results
        .iter()
        .map(|(_, label, p)| (*label as usize - 1, p.scores.argmax()))
        .collect();
    report_from(&results, &preds, errors, k, scales, cfg)
}

fn report_from(
    results: &[(SampleId, u32, SamplePrediction)],
    preds: &[(usize, usize)],
    errors: Vec<ErrorRow>,
    k: usize,
    scales: &[TemporalScale],
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    let confusion = ConfusionMatrix::tally(preds.iter().copied(), k)?;

    let mut plane = BTreeMap::new();
    for p in ViewPlane::ALL {
        let pairs = results.iter().map(|(_, label, sp)| {
            (*label as usize - 1, sp.per_plane[p.index()].1.argmax())
        });
        plane.insert(p.tag().to_string(), ConfusionMatrix::tally(pairs, k)?.accuracy());
    }
    let mut scale = BTreeMap::new();
    for s in scales {
        let pairs: Vec<(usize, usize)> = results
            .iter()
            .filter_map(|(_, label, sp)| {
                sp.per_scale
                    .iter()
                    .find(|(n, _)| n == s)
                    .map(|(_, v)| (*label as usize - 1, v.argmax()))
            })
            .collect();
        if !pairs.is_empty() {
            scale.insert(s.to_string(), ConfusionMatrix::tally(pairs, k)?.accuracy());
        }
    }

    Ok(EvalReport {
        schema: REPORT_SCHEMA.to_string(),
        accuracy: confusion.accuracy(),
        correct: confusion.trace(),
        evaluated: confusion.total(),
        failed: errors.len() as u64,
        labels: (1..=k as u32).collect(),
        per_class_accuracy: confusion.per_class_accuracy(),
        confusion,
        breakdown: Breakdown { plane, scale },
        settings: EvalSettings {
            scales: scales.iter().map(|s| s.get()).collect(),
            weighted: cfg.weighted,
            gamma: cfg.gamma,
            delta: cfg.delta,
            depth_band: cfg.depth_band,
            depth_bins: cfg.depth_bins,
            canvas: cfg.canvas,
            crop: cfg.crop,
            feature_side: cfg.feature_side,
        },
        samples: results
            .iter()
            .zip(preds)
            .map(|((id, label, sp), &(_, p))| SampleRow {
                sample: id.to_string(),
                label: *label,
                predicted: p as u32 + 1,
                scores: sp.scores.as_slice().to_vec(),
            })
            .collect(),
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn scale_fusion_by_hand() {
        assert_eq!(fuse_scales(&[sv(&[0.3, 0.7])]).unwrap(), sv(&[0.3, 0.7]));
        let f = fuse_scales(&[sv(&[0.2, 0.8]), sv(&[0.6, 0.4])]).unwrap();
        // 0.6 is not representable; the mean of the two doubles lands one ulp above it
        for (got, want) in f.as_slice().iter().zip([0.4, 0.6]) {
            assert!((got - want).abs() <= f64::EPSILON, "{got} vs {want}");
        }
        assert!(matches!(fuse_scales(&[]), Err(Error::EmptyFusion)));
        assert!(matches!(
            fuse_scales(&[sv(&[1.0]), sv(&[0.5, 0.5])]),
            Err(Error::ClassCountMismatch { .. })
        ));
    }

    #[test]
    fn plane_fusion_by_hand() {
        let a = sv(&[1.0, 0.0]);
        let b = sv(&[0.0, 1.0]);
        let c = sv(&[0.5, 0.5]);
        let fwd = fuse_planes(&[
            (ViewPlane::Front, a.clone()),
            (ViewPlane::Side, b.clone()),
            (ViewPlane::Top, c.clone()),
        ])
        .unwrap();
        assert_eq!(fwd.as_slice(), &[0.5, 0.5]);
        let rev = fuse_planes(&[
            (ViewPlane::Top, a.clone()),
            (ViewPlane::Front, c.clone()),
            (ViewPlane::Side, b.clone()),
        ])
        .unwrap();
        assert_eq!(fwd, rev);
        let same = fuse_planes(&[
            (ViewPlane::Front, a.clone()),
            (ViewPlane::Side, a.clone()),
            (ViewPlane::Top, a.clone()),
        ])
        .unwrap();
        assert_eq!(same, a);
        assert!(matches!(
            fuse_planes(&[(ViewPlane::Front, a.clone()), (ViewPlane::Side, b)]),
            Err(Error::MissingPlane(_))
        ));
        assert!(matches!(
            fuse_planes(&[
                (ViewPlane::Front, a.clone()),
                (ViewPlane::Front, a.clone()),
                (ViewPlane::Top, a)
            ]),
            Err(Error::MissingPlane(_))
        ));
    }

    #[test]
    fn confusion_by_hand() {
        // (true, predicted), 3 classes, 6 samples
        let pairs = [(0, 0), (0, 1), (1, 1), (2, 2), (2, 0), (1, 1)];
        let m = ConfusionMatrix::tally(pairs, 3).unwrap();
        assert_eq!(m.counts(), &[vec![1, 1, 0], vec![0, 2, 0], vec![1, 0, 1]]);
        assert_eq!(m.trace(), 4);
        assert_eq!(m.accuracy(), 4.0 / 6.0);
        assert_eq!(m.per_class_accuracy(), vec![Some(0.5), Some(1.0), Some(0.5)]);
        let perfect = ConfusionMatrix::tally([(0, 0), (1, 1)], 3).unwrap();
        assert_eq!(perfect.accuracy(), 1.0);
        assert_eq!(perfect.per_class_accuracy()[2], None);
        assert!(ConfusionMatrix::tally([(0, 3)], 3).is_err());
    }

    fn arb_simplex(k: usize) -> impl Strategy<Value = ScoreVector> {
        proptest::collection::vec(0.001..1.0f64, k).prop_map(|v| {
            let s: f64 = v.iter().sum();
            ScoreVector::new(v.iter().map(|x| x / s).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn fusion_stays_on_simplex(v in proptest::collection::vec(arb_simplex(4), 1..6)) {
            let f = fuse_scales(&v).unwrap();
            let sum: f64 = f.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(f.as_slice().iter().all(|&x| x >= 0.0));
            let mut rev = v.clone();
            rev.reverse();
            prop_assert_eq!(fuse_scales(&rev).unwrap(), f);
        }
    }
}
