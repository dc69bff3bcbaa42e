//! JSON sidecar files written next to extracted images and trained models.

use std::collections::{BTreeMap, BTreeSet};

use hdmm_core::classify::TrainConfig;
use hdmm_core::PipelineConfig;
use serde::{Deserialize, Serialize};

pub const EXTRACT_FILE: &str = "extract.json";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MODELS_FILE: &str = "models.json";

pub fn model_file(plane: hdmm_core::projection::ViewPlane) -> String {
    format!("plane_{plane}.model")
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FailedSample {
    pub sample: String,
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractMeta {
    pub schema: String,
    pub config: PipelineConfig,
    pub samples: usize,
    pub images: usize,
    pub failed: Vec<FailedSample>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlaneMeta {
    pub file: String,
    pub examples: usize,
    pub final_loss: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelsMeta {
    pub schema: String,
    pub class_count: usize,
    pub feature_dim: usize,
    /// Extraction and encoding settings the images were made with.
    pub config: PipelineConfig,
    pub train: TrainConfig,
    pub split: String,
    /// Action ids that each label stood for in the training manifest.
    pub actions: BTreeMap<u32, BTreeSet<u32>>,
    pub planes: BTreeMap<String, PlaneMeta>,
}
