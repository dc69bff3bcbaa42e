//! Pseudo-RGB encoding of motion maps and training-time augmentation.
//!
//! Colormap (normalized value `v` in `[0, 1]`, each channel clamped to
//! `[0, 1]` then scaled by 255 and rounded):
//!
//! ```text
//! R = 1.5 - 4|v - 0.25|    G = 1.5 - 4|v - 0.5|    B = 1.5 - 4|v - 0.75|
//! ```
//!
//! so small motion energy renders red and large renders blue.

use std::path::Path;

use image::imageops::{self, FilterType};
use image::{ImageBuffer, Luma, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::depth_io::{read_sequence, DatasetManifest, ManifestEntry, SampleId};
use crate::diagnostics::Diagnostic;
use crate::error::{Error, Result};
use crate::geometry::Angles;
use crate::hdmm::{extract_grid, MotionMap, TemporalScale};
use crate::par;
use crate::projection::ViewPlane;

/// Where an encoded image came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sample: Option<SampleId>,
    pub plane: ViewPlane,
    pub scale: TemporalScale,
    pub angles: Angles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRgbImage {
    pub pixels: RgbImage,
    pub provenance: Option<Provenance>,
}

impl PseudoRgbImage {
    pub fn width(&self) -> usize {
        self.pixels.width() as usize
    }

    pub fn height(&self) -> usize {
        self.pixels.height() as usize
    }

    /// Writes an 8-bit RGB PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.pixels
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
    }

    /// Loads a PNG, recovering provenance from the file name when it follows
    /// [`image_file_name`].
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?
            .into_rgb8();
        let provenance = path
            .file_name()
            .and_then(|n| parse_image_file_name(&n.to_string_lossy()).ok());
        Ok(PseudoRgbImage {
            pixels: img,
            provenance,
        })
    }
}

/// `aXXX_sXXX_eXXX_<plane>_nNN_th±TT_be±BB.png`, angles rounded to degrees.
pub fn image_file_name(p: &Provenance) -> String {
    let stem = p.sample.map(|s| s.stem()).unwrap_or_else(|| "a000_s000_e000".into());
    format!(
        "{stem}_{}_n{:02}_th{:+03}_be{:+03}.png",
        p.plane,
        p.scale.get(),
        p.angles.theta.round() as i64,
        p.angles.beta.round() as i64
    )
}

pub fn parse_image_file_name(name: &str) -> Result<Provenance> {
    let bad = |segment: &'static str| Error::SampleName {
        name: name.to_string(),
        segment,
    };
    let (sample, rest) = SampleId::parse_stem(name)?;
    let rest = rest.strip_suffix(".png").ok_or_else(|| bad("suffix"))?;
    let parts: Vec<&str> = rest.split('_').collect();
    let ["", plane, n, th, be] = parts[..] else {
        return Err(bad("provenance"));
    };
    let plane: ViewPlane = plane.parse().map_err(|_| bad("plane"))?;
    let scale = n
        .strip_prefix('n')
        .and_then(|v| v.parse::<usize>().ok())
        .and_then(|v| TemporalScale::new(v).ok())
        .ok_or_else(|| bad("scale"))?;
    let angle = |s: &str, prefix: &str, segment| {
        s.strip_prefix(prefix)
            .and_then(|v| v.parse::<i64>().ok())
            .map(|v| v as f64)
            .ok_or_else(|| bad(segment))
    };
    Ok(Provenance {
        sample: Some(sample),
        plane,
        scale,
        angles: Angles {
            theta: angle(th, "th", "theta")?,
            beta: angle(be, "be", "beta")?,
        },
    })
}

fn channel(v: f64, center: f64) -> u8 {
    let x = (1.5 - 4.0 * (v - center).abs()).clamp(0.0, 1.0);
    (x * 255.0).round() as u8
}

/// Jet-style colormap for `v` in `[0, 1]`.
pub fn colormap(v: f64) -> [u8; 3] {
    let v = v.clamp(0.0, 1.0);
    [channel(v, 0.25), channel(v, 0.5), channel(v, 0.75)]
}

/// Min-max normalizes a map (a constant map becomes all zeros), resizes it
/// bilinearly to `canvas × canvas` and applies [`colormap`].
pub fn encode(map: &MotionMap, canvas: usize) -> Result<PseudoRgbImage> {
    let (rows, cols) = (map.dims.rows, map.dims.cols);
    if rows == 0 || cols == 0 || map.data.len() != rows * cols {
        return Err(Error::EmptyGrid);
    }
    if canvas == 0 {
        return Err(Error::InvalidParam("canvas must be positive".into()));
    }
    let (lo, hi) = map
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let normalized: Vec<f32> = map
        .data
        .iter()
        .map(|&v| if span > 0.0 { ((v - lo) / span) as f32 } else { 0.0 })
        .collect();
    let field: ImageBuffer<Luma<f32>, Vec<f32>> =
        ImageBuffer::from_raw(cols as u32, rows as u32, normalized).ok_or(Error::EmptyGrid)?;
    let c = canvas as u32;
    let field = if (cols, rows) == (canvas, canvas) {
        field
    } else {
        imageops::resize(&field, c, c, FilterType::Triangle)
    };
    let pixels = RgbImage::from_fn(c, c, |x, y| image::Rgb(colormap(field.get_pixel(x, y)[0] as f64)));
    Ok(PseudoRgbImage {
        pixels,
        provenance: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub crop: usize,
    pub flip: bool,
    /// Per-channel offsets are drawn from `[-jitter, jitter]`.
    pub jitter: u8,
    pub seed: u64,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            crop: 224,
            flip: true,
            jitter: 10,
            seed: 0,
        }
    }
}

impl AugmentSpec {
    /// Full-size crop with nothing random: augment becomes the identity.
    pub fn identity(size: usize) -> Self {
        AugmentSpec {
            crop: size,
            flip: false,
            jitter: 0,
            seed: 0,
        }
    }
}

/// Offsets a crop window may start at so that it stays inside the image and
/// its center stays in the middle half of the axis.
fn crop_offsets(extent: usize, crop: usize) -> (usize, usize) {
    let (e, c) = (extent as f64, crop as f64);
    let lo = (e / 4.0 - c / 2.0).ceil().max(0.0) as usize;
    let hi = ((3.0 * e / 4.0 - c / 2.0).floor() as usize).min(extent - crop);
    if lo > hi {
        let mid = (extent - crop) / 2;
        (mid, mid)
    } else {
        (lo, hi)
    }
}

fn check_crop(img: &PseudoRgbImage, crop: usize) -> Result<()> {
    if crop == 0 || crop > img.width() || crop > img.height() {
        return Err(Error::CropTooLarge {
            crop,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(())
}

pub fn center_crop(img: &PseudoRgbImage, crop: usize) -> Result<PseudoRgbImage> {
    check_crop(img, crop)?;
    let x = (img.width() - crop) / 2;
    let y = (img.height() - crop) / 2;
    let c = crop as u32;
    Ok(PseudoRgbImage {
        pixels: imageops::crop_imm(&img.pixels, x as u32, y as u32, c, c).to_image(),
        provenance: img.provenance,
    })
}

/// Random near-center crop, optional horizontal flip (p = 0.5) and uniform
/// per-channel jitter. Deterministic for a given seed.
pub fn augment(img: &PseudoRgbImage, spec: &AugmentSpec) -> Result<PseudoRgbImage> {
    check_crop(img, spec.crop)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (xlo, xhi) = crop_offsets(img.width(), spec.crop);
    let (ylo, yhi) = crop_offsets(img.height(), spec.crop);
    let x = rng.random_range(xlo..=xhi) as u32;
    let y = rng.random_range(ylo..=yhi) as u32;
    let flip = spec.flip && rng.random_bool(0.5);
    let j = spec.jitter as i32;
    let shift: [i32; 3] = std::array::from_fn(|_| rng.random_range(-j..=j));

    let c = spec.crop as u32;
    let mut out = imageops::crop_imm(&img.pixels, x, y, c, c).to_image();
    if flip {
        imageops::flip_horizontal_in_place(&mut out);
    }
    if shift != [0; 3] {
        for px in out.pixels_mut() {
            for (v, s) in px.0.iter_mut().zip(shift) {
                *v = (*v as i32 + s).clamp(0, 255) as u8;
            }
        }
    }
    Ok(PseudoRgbImage {
        pixels: out,
        provenance: img.provenance,
    })
}

/// Deterministic per-item seed from the item's identity and a global seed.
pub fn item_seed(global: u64, sample: SampleId, angle_index: usize, scale: TemporalScale, plane: ViewPlane) -> u64 {
    let mut h = global ^ 0x9E37_79B9_7F4A_7C15;
    for v in [
        sample.action as u64,
        sample.subject as u64,
        sample.example as u64,
        angle_index as u64,
        scale.get() as u64,
        plane.index() as u64,
    ] {
        h = splitmix(h ^ v.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct TrainingItem {
    pub image: PseudoRgbImage,
    /// Manifest label, `1..=class_count`.
    pub label: u32,
    pub plane: ViewPlane,
}

/// Everything one sample contributed to the training stream.
#[derive(Debug)]
pub struct SampleItems {
    pub sample: SampleId,
    pub items: Result<Vec<TrainingItem>>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Lazily yields, sample by sample, one augmented image per
/// (rotation × usable scale × plane). A failing sample is reported in its
/// [`SampleItems`] and the stream moves on.
pub struct TrainingStream<'a> {
    entries: std::slice::Iter<'a, ManifestEntry>,
    grid: &'a [Angles],
    scales: &'a [TemporalScale],
    spec: AugmentSpec,
    cfg: &'a PipelineConfig,
}

pub fn enumerate_training_set<'a>(
    manifest: &'a DatasetManifest,
    grid: &'a [Angles],
    scales: &'a [TemporalScale],
    spec: AugmentSpec,
    cfg: &'a PipelineConfig,
) -> TrainingStream<'a> {
    TrainingStream {
        entries: manifest.entries().iter(),
        grid,
        scales,
        spec,
        cfg,
    }
}

impl TrainingStream<'_> {
    fn sample_items(&self, entry: &ManifestEntry) -> Result<(Vec<TrainingItem>, Vec<Diagnostic>)> {
        let seq = read_sequence(&entry.path)?;
        let extractions = extract_grid(
            &seq,
            self.grid,
            self.scales,
            self.cfg.weight_params(),
            self.cfg,
        )?;
        let mut diags = Vec::new();
        let mut jobs = Vec::new();
        for (ai, ex) in extractions.iter().enumerate() {
            for d in &ex.diagnostics {
                if !diags.contains(d) {
                    diags.push(d.clone());
                }
            }
            for map in &ex.maps {
                jobs.push((ai, ex.angles, map));
            }
        }
        let items = par::map(&jobs, |&(ai, angles, map)| -> Result<TrainingItem> {
            let mut img = encode(map, self.cfg.canvas)?;
            img.provenance = Some(Provenance {
                sample: Some(entry.id),
                plane: map.plane,
                scale: map.scale,
                angles,
            });
            let spec = AugmentSpec {
                seed: item_seed(self.spec.seed, entry.id, ai, map.scale, map.plane),
                ..self.spec
            };
            Ok(TrainingItem {
                image: augment(&img, &spec)?,
                label: entry.label,
                plane: map.plane,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok((items, diags))
    }
}

impl Iterator for TrainingStream<'_> {
    type Item = SampleItems;

    fn next(&mut self) -> Option<SampleItems> {
        let entry = self.entries.next()?;
        let (items, diagnostics) = match self.sample_items(entry) {
            Ok((items, diags)) => (Ok(items), diags),
            Err(e) => {
                let d = Diagnostic::SampleFailed {
                    sample: entry.id.to_string(),
                    reason: e.to_string(),
                };
                log::warn!("{d}");
                (Err(e), vec![d])
            }
        };
        Some(SampleItems {
            sample: entry.id,
            items,
            diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::GridDims;
    use proptest::prelude::*;

    fn motion(rows: usize, cols: usize, data: Vec<f64>) -> MotionMap {
        MotionMap {
            plane: ViewPlane::Front,
            scale: TemporalScale::new(1).unwrap(),
            dims: GridDims::new(rows, cols),
            data,
            frames_used: 1,
        }
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), [128, 0, 0]);
        assert_eq!(colormap(0.5), [128, 255, 128]);
        assert_eq!(colormap(1.0), [0, 0, 128]);
        assert_eq!(colormap(0.25), [255, 128, 0]);
    }

    #[test]
    fn colormap_shifts_from_red_to_blue() {
        let mut prev = colormap(0.0);
        for i in 1..=1000 {
            let v = i as f64 / 1000.0;
            let c = colormap(v);
            // the jet ramps rise at the ends, so monotonicity holds past the peaks
            if v >= 0.25 {
                assert!(c[0] <= prev[0], "R rose at {v}");
            }
            if v <= 0.75 {
                assert!(c[2] >= prev[2], "B fell at {v}");
            }
            if v < 0.5 {
                assert!(c[0] > c[2], "not red-dominant at {v}");
            } else if v > 0.5 {
                assert!(c[2] > c[0], "not blue-dominant at {v}");
            }
            prev = c;
        }
    }

    #[test]
    fn constant_map_is_uniform_red_end() {
        let img = encode(&motion(3, 5, vec![7.0; 15]), 16).unwrap();
        assert_eq!(img.width(), 16);
        assert!(img.pixels.pixels().all(|p| p.0 == colormap(0.0)));
    }

    #[test]
    fn canvas_sized_map_hits_table_entries() {
        let m = 40.0;
        let data = vec![0.0, 0.5 * m, m, 0.0];
        let img = encode(&motion(2, 2, data), 2).unwrap();
        assert_eq!(img.pixels.get_pixel(0, 0).0, colormap(0.0));
        assert_eq!(img.pixels.get_pixel(1, 0).0, colormap(0.5));
        assert_eq!(img.pixels.get_pixel(0, 1).0, colormap(1.0));
    }

    #[test]
    fn two_valued_map_encodes_red_and_blue() {
        let data: Vec<f64> = (0..64).map(|i| if i < 32 { 0.0 } else { 5.0 }).collect();
        let img = encode(&motion(8, 8, data), 8).unwrap();
        assert_eq!(img.pixels.get_pixel(0, 0).0, colormap(0.0));
        assert_eq!(img.pixels.get_pixel(0, 7).0, colormap(1.0));
        assert!(encode(&motion(0, 8, vec![]), 8).is_err());
    }

    #[test]
    fn identity_augment() {
        let img = encode(&motion(4, 4, (0..16).map(f64::from).collect()), 32).unwrap();
        assert_eq!(augment(&img, &AugmentSpec::identity(32)).unwrap(), img);
        let spec = AugmentSpec { crop: 33, ..AugmentSpec::identity(32) };
        assert!(matches!(augment(&img, &spec), Err(Error::CropTooLarge { .. })));
    }

    #[test]
    fn same_seed_same_output() {
        let img = encode(&motion(4, 4, (0..16).map(f64::from).collect()), 256).unwrap();
        let spec = AugmentSpec { seed: 99, ..AugmentSpec::default() };
        assert_eq!(augment(&img, &spec).unwrap(), augment(&img, &spec).unwrap());
    }

    #[test]
    fn crop_window_stays_near_center() {
        let (lo, hi) = crop_offsets(256, 224);
        assert_eq!((lo, hi), (0, 32));
        // tag each pixel with its coordinates so the window can be recovered
        let src = RgbImage::from_fn(256, 256, |x, y| image::Rgb([x as u8, y as u8, 0]));
        let img = PseudoRgbImage { pixels: src, provenance: None };
        for seed in 0..1000 {
            let spec = AugmentSpec { crop: 224, flip: false, jitter: 0, seed };
            let out = augment(&img, &spec).unwrap();
            assert_eq!((out.width(), out.height()), (224, 224));
            let p = out.pixels.get_pixel(0, 0).0;
            let (x0, y0) = (p[0] as usize, p[1] as usize);
            assert!(x0 + 224 <= 256 && y0 + 224 <= 256);
            let (cx, cy) = (x0 as f64 + 112.0, y0 as f64 + 112.0);
            assert!((64.0..=192.0).contains(&cx) && (64.0..=192.0).contains(&cy));
        }
    }

    #[test]
    fn file_names_round_trip() {
        let p = Provenance {
            sample: Some(SampleId::new(12, 5, 2).unwrap()),
            plane: ViewPlane::Side,
            scale: TemporalScale::new(5).unwrap(),
            angles: Angles { theta: -30.0, beta: 5.0 },
        };
        let name = image_file_name(&p);
        assert_eq!(name, "a012_s005_e002_s_n05_th-30_be+05.png");
        assert_eq!(parse_image_file_name(&name).unwrap(), p);
        assert!(parse_image_file_name("a012_s005_e002_x_n05_th-30_be+05.png").is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = encode(&motion(4, 4, (0..16).map(f64::from).collect()), 20).unwrap();
        img.provenance = Some(Provenance {
            sample: Some(SampleId::new(1, 2, 3).unwrap()),
            plane: ViewPlane::Top,
            scale: TemporalScale::new(1).unwrap(),
            angles: Angles::ZERO,
        });
        let path = dir.path().join(image_file_name(img.provenance.as_ref().unwrap()));
        img.save_png(&path).unwrap();
        assert_eq!(PseudoRgbImage::load_png(&path).unwrap(), img);
    }

    proptest! {
        #[test]
        fn encode_ignores_affine_rescaling(
            data in proptest::collection::vec(0.0..1000.0f64, 36),
            alpha in 0.1..50.0f64,
            c in -100.0..100.0f64,
        ) {
            let a = encode(&motion(6, 6, data.clone()), 6).unwrap();
            let scaled: Vec<f64> = data.iter().map(|v| alpha * v + c).collect();
            let b = encode(&motion(6, 6, scaled), 6).unwrap();
            for (pa, pb) in a.pixels.pixels().zip(b.pixels.pixels()) {
                for k in 0..3 {
                    prop_assert!((pa.0[k] as i32 - pb.0[k] as i32).abs() <= 1);
                }
            }
        }

        #[test]
        fn encode_dims_and_range(data in proptest::collection::vec(0.0..10.0f64, 12), canvas in 1usize..40) {
            let img = encode(&motion(3, 4, data), canvas).unwrap();
            prop_assert_eq!((img.width(), img.height()), (canvas, canvas));
        }
    }
}
