use std::path::{Path, PathBuf};

use hdmm_core::depth_io::{build_manifest, read_sequence, write_manifest_csv, LabelMapping, ManifestEntry};
use hdmm_core::encode::{encode, image_file_name, Provenance};
use hdmm_core::geometry::Progression;
use hdmm_core::hdmm::extract_grid;
use hdmm_core::{par, PipelineConfig};

use crate::failure::{write_json, Failure};
use crate::meta::{ExtractMeta, FailedSample, EXTRACT_FILE, MANIFEST_FILE};
use crate::ScaleList;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Directory searched recursively for `aXXX_sXXX_eXXX_depth.bin` files.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for PNGs, manifest.csv and extract.json.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML settings; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label-mapping file for merged datasets (default: identity).
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long)]
    pub scales: Option<ScaleList>,
    /// Also render every view of the rotation grid.
    #[arg(long)]
    pub rotate: bool,
    /// Rotation about the vertical axis, `start:step:end` in degrees.
    #[arg(long, allow_hyphen_values = true, requires = "rotate")]
    pub theta: Option<Progression>,
    /// Rotation about the horizontal axis, `start:step:end` in degrees.
    #[arg(long, allow_hyphen_values = true, requires = "rotate")]
    pub beta: Option<Progression>,
    /// Use the recency-weighted accumulation.
    #[arg(long, conflicts_with = "unweighted")]
    pub weighted: bool,
    /// Use the plain sum of frame differences.
    #[arg(long)]
    pub unweighted: bool,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

impl Args {
    fn pipeline_config(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = &self.scales {
            cfg.scales = s.0.clone();
        }
        if self.rotate {
            cfg.rotate = true;
        }
        if let Some(t) = self.theta {
            cfg.theta_grid = t;
        }
        if let Some(b) = self.beta {
            cfg.beta_grid = b;
        }
        if self.weighted {
            cfg.weighted = true;
        }
        if self.unweighted {
            cfg.weighted = false;
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(d) = self.delta {
            cfg.delta = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn extract_one(entry: &ManifestEntry, out: &Path, cfg: &PipelineConfig) -> hdmm_core::Result<usize> {
    let seq = read_sequence(&entry.path)?;
    let scales = cfg.temporal_scales()?;
    let views = extract_grid(&seq, &cfg.angles(), &scales, cfg.weight_params(), cfg)?;
    let mut written = 0;
    for view in &views {
        for map in &view.maps {
            let mut img = encode(map, cfg.canvas)?;
            let provenance = Provenance {
                sample: Some(entry.id),
                plane: map.plane,
                scale: map.scale,
                angles: view.angles,
            };
            img.provenance = Some(provenance);
            img.save_png(&out.join(image_file_name(&provenance)))?;
            written += 1;
        }
    }
    Ok(written)
}

pub fn run(args: Args) -> Result<(), Failure> {
    let cfg = args.pipeline_config()?;
    let mapping = match &args.mapping {
        Some(p) => LabelMapping::load(p)?,
        None => LabelMapping::Identity,
    };
    let manifest = build_manifest(&args.input, &mapping)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;

    let results = par::map(manifest.entries(), |e| extract_one(e, &args.out, &cfg));
    let mut images = 0;
    let mut failed = Vec::new();
    for (entry, r) in manifest.entries().iter().zip(results) {
        match r {
            Ok(n) => images += n,
            Err(e) => {
                log::warn!("{}: {e}", entry.id);
                failed.push(FailedSample {
                    sample: entry.id.to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    if failed.len() == manifest.len() {
        return Err(Failure::Data(format!(
            "no sample could be extracted (first error: {})",
            failed[0].error
        )));
    }

    write_manifest_csv(&manifest, &args.out.join(MANIFEST_FILE))?;
    let meta = ExtractMeta {
        schema: "hdmm-extract/1".into(),
        config: cfg,
        samples: manifest.len(),
        images,
        failed,
    };
    write_json(&args.out.join(EXTRACT_FILE), &meta)?;
    println!(
        "extracted {images} images from {} samples ({} failed) into {}",
        manifest.len() - meta.failed.len(),
        meta.failed.len(),
        args.out.display()
    );
    Ok(())
}
