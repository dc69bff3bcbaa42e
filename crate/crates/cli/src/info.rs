use std::io::Read;
use std::path::PathBuf;

use hdmm_core::classify::{SoftmaxModel, MODEL_MAGIC, MODEL_VERSION};
use hdmm_core::depth_io::{parse_sample_id, read_header};
use hdmm_core::encode::PseudoRgbImage;
use serde_json::json;

use crate::failure::Failure;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// A depth file, a `.model` file or an extracted PNG.
    pub file: PathBuf,
}

pub fn run(args: Args) -> Result<(), Failure> {
    let path = &args.file;
    let mut magic = [0u8; 8];
    let head = std::fs::File::open(path)
        .and_then(|mut f| f.read(&mut magic))
        .map_err(|e| Failure::io(path, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();

    let out = if head == 8 && &magic == MODEL_MAGIC {
        let m = SoftmaxModel::load(path)?;
        json!({
            "kind": "model",
            "version": MODEL_VERSION,
            "classes": m.bias().len(),
            "feature_dim": m.weights().len() / m.bias().len().max(1),
            "final_loss": m.final_loss(),
        })
    } else if name.to_ascii_lowercase().ends_with(".png") {
        let img = PseudoRgbImage::load_png(path)?;
        json!({
            "kind": "image",
            "width": img.width(),
            "height": img.height(),
            "provenance": img.provenance,
        })
    } else {
        let h = read_header(path)?;
        let actual = std::fs::metadata(path).map_err(|e| Failure::io(path, e))?.len();
        if actual != h.file_len() {
            return Err(Failure::Data(format!(
                "{}: header promises {} bytes, file has {actual}",
                path.display(),
                h.file_len()
            )));
        }
        json!({
            "kind": "depth",
            "frames": h.frames,
            "width": h.width,
            "height": h.height,
            "bytes": actual,
            "sample": parse_sample_id(&name).ok(),
        })
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("json values serialize"));
    Ok(())
}
