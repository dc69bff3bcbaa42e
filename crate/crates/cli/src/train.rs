use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use hdmm_core::classify::{featurize, train_logged, TrainConfig};
use hdmm_core::depth_io::{read_manifest_csv, split, DatasetManifest, SampleId};
use hdmm_core::encode::{augment, item_seed, parse_image_file_name, AugmentSpec, Provenance, PseudoRgbImage};
use hdmm_core::projection::ViewPlane;
use hdmm_core::{par, PipelineConfig};

use crate::failure::{read_json, write_json, Failure};
use crate::meta::{model_file, ExtractMeta, ModelsMeta, PlaneMeta, EXTRACT_FILE, MODELS_FILE};
use crate::SplitArg;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory of PNGs written by `hdmm extract`.
    #[arg(long)]
    pub images: PathBuf,
    /// Manifest CSV with the sample labels (extract writes one).
    #[arg(long)]
    pub manifest: PathBuf,
    /// `odd-train` or `train=1,3;test=2,4`.
    #[arg(long, default_value = "odd-train")]
    pub split: SplitArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Settings the images were made with (default: the images' extract.json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

fn pipeline_config(args: &Args) -> Result<PipelineConfig, Failure> {
    if let Some(p) = &args.config {
        return Ok(PipelineConfig::load(p)?);
    }
    let sidecar = args.images.join(EXTRACT_FILE);
    if sidecar.is_file() {
        let meta: ExtractMeta = read_json(&sidecar)?;
        meta.config.validate()?;
        return Ok(meta.config);
    }
    log::info!("no {EXTRACT_FILE} in {}; using default settings", args.images.display());
    Ok(PipelineConfig::default())
}

/// Training images whose sample is in `train`, in file-name order.
fn select_images(dir: &Path, train: &DatasetManifest) -> Result<Vec<(PathBuf, Provenance, u32)>, Failure> {
    let listing = std::fs::read_dir(dir).map_err(|e| Failure::io(dir, e))?;
    let mut picked = Vec::new();
    for entry in listing {
        let path = entry.map_err(|e| Failure::io(dir, e))?.path();
        let Some(name) = path.file_name().map(|n| n.to_string_lossy().into_owned()) else {
            continue;
        };
        if !name.ends_with(".png") {
            continue;
        }
        let Ok(prov) = parse_image_file_name(&name) else {
            log::warn!("skipping {name}: not an extracted motion-map image");
            continue;
        };
        let Some(label) = prov.sample.and_then(|s| train.label_of(&s)) else {
            continue;
        };
        picked.push((path, prov, label));
    }
    picked.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(picked)
}

/// Folds the rounded angles into the per-item seed so each view of a sample
/// gets its own augmentation draw.
fn angle_key(p: &Provenance) -> usize {
    let t = (p.angles.theta.round() as i64 + 512) as usize;
    let b = (p.angles.beta.round() as i64 + 512) as usize;
    t * 1024 + b
}

fn action_table(m: &DatasetManifest) -> BTreeMap<u32, BTreeSet<u32>> {
    let mut t: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in m.entries() {
        t.entry(e.label).or_default().insert(e.id.action);
    }
    t
}

pub fn run(args: Args) -> Result<(), Failure> {
    let cfg = pipeline_config(&args)?;
    let mut tc = TrainConfig {
        seed: args.seed,
        ..TrainConfig::default()
    };
    if let Some(e) = args.epochs {
        tc.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        tc.learning_rate = lr;
    }
    if let Some(b) = args.batch_size {
        tc.batch_size = b;
    }
    tc.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let manifest = read_manifest_csv(&args.manifest)?;
    let parts = split(&manifest, &args.split.rule)?;
    if parts.train.is_empty() {
        return Err(Failure::Data(format!("split {} leaves no training samples", args.split.text)));
    }

    let picked = select_images(&args.images, &parts.train)?;
    if picked.is_empty() {
        return Err(Failure::Data(format!(
            "no images in {} belong to the training split",
            args.images.display()
        )));
    }
    log::info!("featurizing {} training images", picked.len());
    let featurized = par::map(&picked, |(path, prov, label)| -> hdmm_core::Result<_> {
        let img = PseudoRgbImage::load_png(path)?;
        let sample: SampleId = prov.sample.expect("selected images carry a sample id");
        let spec = AugmentSpec {
            crop: cfg.crop,
            seed: item_seed(args.seed, sample, angle_key(prov), prov.scale, prov.plane),
            ..AugmentSpec::default()
        };
        let x = featurize(&augment(&img, &spec)?, cfg.feature_side);
        Ok((prov.plane, x, *label as usize - 1))
    });

    let mut per_plane: [Vec<(Vec<f64>, usize)>; 3] = Default::default();
    for r in featurized {
        let (plane, x, y) = r?;
        per_plane[plane.index()].push((x, y));
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let k = manifest.class_count() as usize;
    let mut planes = BTreeMap::new();
    for plane in ViewPlane::ALL {
        let examples = &per_plane[plane.index()];
        log::info!("training plane {plane} on {} examples", examples.len());
        let model = train_logged(examples, k, &tc, |epoch, loss| {
            log::debug!("plane {plane} epoch {epoch}: loss {loss:.6}");
        })?;
        let file = model_file(plane);
        model.save(&args.out.join(&file))?;
        println!("plane {plane}: {} examples, final loss {:.6}", examples.len(), model.final_loss());
        planes.insert(
            plane.to_string(),
            PlaneMeta {
                file,
                examples: examples.len(),
                final_loss: model.final_loss(),
            },
        );
    }

    let meta = ModelsMeta {
        schema: "hdmm-models/1".into(),
        class_count: k,
        feature_dim: 3 * cfg.feature_side * cfg.feature_side,
        config: cfg,
        train: tc,
        split: args.split.text.clone(),
        actions: action_table(&manifest),
        planes,
    };
    write_json(&args.out.join(MODELS_FILE), &meta)?;
    println!("models written to {}", args.out.display());
    Ok(())
}
