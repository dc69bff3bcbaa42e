use std::path::PathBuf;

use hdmm_core::classify::SoftmaxModel;
use hdmm_core::depth_io::{build_manifest, split, DatasetManifest, LabelMapping};
use hdmm_core::eval::{evaluate, PlaneModels};
use hdmm_core::projection::ViewPlane;

use crate::failure::{read_json, Failure};
use crate::meta::{model_file, ModelsMeta, MODELS_FILE};
use crate::{ScaleList, SplitArg};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory searched recursively for depth files.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory written by `hdmm train`.
    #[arg(long)]
    pub models: PathBuf,
    /// Scales to fuse at test time (default: the training settings).
    #[arg(long)]
    pub scales: Option<ScaleList>,
    /// Where to write the JSON report (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Label-mapping file, as given to extract.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Evaluate only the test side of this split.
    #[arg(long)]
    pub split: Option<SplitArg>,
}

/// Labels are rebuilt from the input directory, so check they mean the same
/// actions they meant when the models were trained.
fn check_labels(test: &DatasetManifest, meta: &ModelsMeta) -> Result<(), Failure> {
    for e in test.entries() {
        let known = meta.actions.get(&e.label).is_some_and(|a| a.contains(&e.id.action));
        if !known {
            return Err(Failure::Data(format!(
                "{}: label {} does not match the training labels {:?}; pass the same --mapping and input layout used for training",
                e.id, e.label, meta.actions
            )));
        }
    }
    Ok(())
}

pub fn run(args: Args) -> Result<(), Failure> {
    let meta: ModelsMeta = read_json(&args.models.join(MODELS_FILE))?;
    let mut cfg = meta.config.clone();
    if let Some(s) = &args.scales {
        cfg.scales = s.0.clone();
    }
    cfg.validate()?;
    let scales = cfg.temporal_scales()?;

    let load = |plane: ViewPlane| SoftmaxModel::load(&args.models.join(model_file(plane)));
    let models = PlaneModels::new(load(ViewPlane::Front)?, load(ViewPlane::Side)?, load(ViewPlane::Top)?)?;

    let mapping = match &args.mapping {
        Some(p) => LabelMapping::load(p)?,
        None => LabelMapping::Identity,
    };
    let all = build_manifest(&args.input, &mapping)?;
    let test = match &args.split {
        Some(s) => split(&all, &s.rule)?.test,
        None => all,
    };
    check_labels(&test, &meta)?;

    let report = evaluate(&test, &models, &scales, &cfg)?;
    let json = report.to_json();
    match &args.report {
        Some(path) => {
            std::fs::write(path, json + "\n").map_err(|e| Failure::io(path, e))?;
            println!(
                "accuracy {:.4} ({}/{}), {} failed; report written to {}",
                report.accuracy,
                report.correct,
                report.evaluated,
                report.failed,
                path.display()
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}
