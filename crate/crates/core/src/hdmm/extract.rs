use crate::config::PipelineConfig;
use crate::depth_io::DepthSequence;
use crate::diagnostics::{self, Diagnostic};
use crate::error::{Error, Result};
use crate::geometry::{depth_to_cloud, rotate_cloud, Angles, Intrinsics, PivotMode, PointCloud, RotationParams};
use crate::par;
use crate::projection::{
    project, segment_foreground, to_view_coordinates, Bounds, GridDims, ViewPlane,
};

use super::accumulate::{accumulate, accumulate_weighted, MotionMap, TemporalScale, WeightParams};

/// Motion maps for one rotation of one sequence, ordered by scale then plane
/// (front, side, top).
#[derive(Debug, Clone)]
pub struct Extraction {
    pub angles: Angles,
    pub maps: Vec<MotionMap>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Extraction {
    pub fn scales(&self) -> Vec<TemporalScale> {
        let mut s: Vec<TemporalScale> = self.maps.iter().map(|m| m.scale).collect();
        s.dedup();
        s
    }
}

/// Segmented clouds, one per frame, in the camera frame.
struct Prepared {
    intr: Intrinsics,
    clouds: Vec<PointCloud>,
    pivot_z: f64,
}

fn prepare(seq: &DepthSequence, cfg: &PipelineConfig) -> Result<Prepared> {
    let intr = cfg
        .intrinsics
        .unwrap_or_else(|| Intrinsics::for_resolution(seq.width(), seq.height()));
    let [z_min, z_max] = cfg.depth_band;
    let clouds = par::map(seq.frames(), |f| {
        depth_to_cloud(&segment_foreground(f, z_min, z_max), &intr)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pivot_z = pivot_depth(&clouds, cfg.pivot);
    Ok(Prepared {
        intr,
        clouds,
        pivot_z,
    })
}

/// Pivot depth for a sequence's clouds. The median mode uses the first frame
/// with any foreground and falls back to 1 mm for an empty sequence, where the
/// rotation has nothing to move.
pub fn pivot_depth(clouds: &[PointCloud], mode: PivotMode) -> f64 {
    match mode {
        PivotMode::Fixed(z) => z,
        PivotMode::MedianForeground => clouds
            .iter()
            .find_map(PointCloud::median_depth)
            .unwrap_or(1.0),
    }
}

fn view_clouds(prep: &Prepared, angles: Angles) -> Result<Vec<PointCloud>> {
    let params = RotationParams::new(angles.theta, angles.beta, prep.pivot_z)?;
    Ok(par::map(&prep.clouds, |c| {
        if params.is_identity() {
            return to_view_coordinates(c, &prep.intr);
        }
        let rotated = rotate_cloud(c, &params);
        // points rotated behind the camera have no view position
        let mut front = PointCloud::default();
        for (p, &px) in rotated.points.iter().zip(&rotated.pixels) {
            if p.z > 0.0 {
                front.points.push(*p);
                front.pixels.push(px);
            }
        }
        to_view_coordinates(&front, &prep.intr)
    }))
}

fn depth_range(view: &[PointCloud], expansion: f64) -> (f64, f64) {
    let all = view.iter().flat_map(|c| c.points.iter());
    match Bounds::enclosing(all) {
        None => (0.0, 1.0),
        Some((lo, hi)) => {
            let span = hi.z - lo.z;
            let pad = if span > 0.0 {
                expansion * span
            } else {
                (expansion * hi.z).max(1.0)
            };
            (lo.z - pad, hi.z + pad)
        }
    }
}

fn plane_dims(plane: ViewPlane, intr: &Intrinsics, depth_bins: usize) -> GridDims {
    match plane {
        ViewPlane::Front => GridDims::new(intr.height, intr.width),
        ViewPlane::Side => GridDims::new(intr.height, depth_bins),
        ViewPlane::Top => GridDims::new(depth_bins, intr.width),
    }
}

fn maps_for_view(
    views: &[PointCloud],
    angles: Angles,
    bounds: &Bounds,
    intr: &Intrinsics,
    scales: &[TemporalScale],
    weights: Option<WeightParams>,
    cfg: &PipelineConfig,
) -> Result<Extraction> {
    let frames = views.len();
    let mut diags = Vec::new();
    let usable: Vec<TemporalScale> = scales
        .iter()
        .copied()
        .filter(|s| {
            let ok = frames > s.get();
            if !ok {
                diags.push(Diagnostic::ScaleSkipped {
                    scale: s.get(),
                    frames,
                });
            }
            ok
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::AllScalesEmpty { frames });
    }

    let per_plane = par::map(&ViewPlane::ALL, |&plane| -> Result<_> {
        let dims = plane_dims(plane, intr, cfg.depth_bins);
        let projected = views
            .iter()
            .map(|c| project(c, plane, bounds, dims))
            .collect::<Result<Vec<_>>>()?;
        let dropped: usize = projected.iter().map(|m| m.dropped).sum();
        let maps = usable
            .iter()
            .map(|&s| match weights {
                Some(w) => accumulate_weighted(&projected, s, w),
                None => accumulate(&projected, s),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((maps, dropped))
    });

    let mut by_plane = Vec::with_capacity(3);
    for (plane, r) in ViewPlane::ALL.iter().zip(per_plane) {
        let (maps, dropped) = r?;
        if dropped > 0 {
            diags.push(Diagnostic::PointsDropped {
                plane: *plane,
                count: dropped,
            });
        }
        by_plane.push(maps.into_iter());
    }
    let mut maps = Vec::with_capacity(usable.len() * 3);
    for _ in &usable {
        for it in by_plane.iter_mut() {
            maps.extend(it.next());
        }
    }
    diagnostics::emit(&diags);
    Ok(Extraction {
        angles,
        maps,
        diagnostics: diags,
    })
}

/// Extracts motion maps for several rotations of one sequence. Each rotation
/// gets the depth range of its own foreground, so a view extracted here is
/// identical to the same view extracted alone by [`extract_hdmm`].
pub fn extract_grid(
    seq: &DepthSequence,
    grid: &[Angles],
    scales: &[TemporalScale],
    weights: Option<WeightParams>,
    cfg: &PipelineConfig,
) -> Result<Vec<Extraction>> {
    if grid.is_empty() {
        return Err(Error::InvalidParam("empty rotation grid".into()));
    }
    if seq.frame_count() < 2 || scales.iter().all(|s| seq.frame_count() <= s.get()) {
        return Err(Error::AllScalesEmpty {
            frames: seq.frame_count(),
        });
    }
    let prep = prepare(seq, cfg)?;
    let views = par::map(grid, |&a| view_clouds(&prep, a))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    par::map_range(grid.len(), |i| {
        let (z_lo, z_hi) = depth_range(&views[i], cfg.bounds_expansion);
        let bounds = Bounds::image_volume(&prep.intr, z_lo, z_hi)?;
        maps_for_view(&views[i], grid[i], &bounds, &prep.intr, scales, weights, cfg)
    })
    .into_iter()
    .collect()
}

/// Motion maps for a single view: three per usable scale. Scales longer than
/// the sequence are skipped with a diagnostic.
pub fn extract_hdmm(
    seq: &DepthSequence,
    rotation: Option<Angles>,
    scales: &[TemporalScale],
    weights: Option<WeightParams>,
    cfg: &PipelineConfig,
) -> Result<Extraction> {
    let angles = rotation.unwrap_or(Angles::ZERO);
    Ok(extract_grid(seq, &[angles], scales, weights, cfg)?
        .pop()
        .expect("one extraction per angle"))
}
