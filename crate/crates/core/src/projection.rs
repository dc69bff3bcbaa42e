//! Depth-band segmentation and front/side/top projections.
//!
//! Each plane is a regular grid over two axes of a bounding box; the third
//! axis is stored as the cell value, shifted so the box's lower bound maps to
//! zero. The value nearest the viewer wins (smallest Z for front, smallest X
//! for side, smallest Y for top). Empty cells hold 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::depth_io::Frame;
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewPlane {
    #[serde(rename = "f")]
    Front,
    #[serde(rename = "s")]
    Side,
    #[serde(rename = "t")]
    Top,
}

impl ViewPlane {
    pub const ALL: [ViewPlane; 3] = [ViewPlane::Front, ViewPlane::Side, ViewPlane::Top];

    pub fn tag(&self) -> &'static str {
        match self {
            ViewPlane::Front => "f",
            ViewPlane::Side => "s",
            ViewPlane::Top => "t",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ViewPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ViewPlane {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" => Ok(ViewPlane::Front),
            "s" => Ok(ViewPlane::Side),
            "t" => Ok(ViewPlane::Top),
            _ => Err(Error::InvalidParam(format!("unknown plane {s:?}"))),
        }
    }
}

/// Axis-aligned box, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point3,
    pub max: Point3,
}

impl Bounds {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        let ok = [(min.x, max.x), (min.y, max.y), (min.z, max.z)]
            .iter()
            .all(|&(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
        if !ok {
            return Err(Error::InvalidParam(format!(
                "degenerate bounds {min:?}..{max:?}"
            )));
        }
        Ok(Bounds { min, max })
    }

    /// The smallest box holding every point, `None` for no points.
    pub fn enclosing<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Option<(Point3, Point3)> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
            )
        }))
    }

    /// The box in view coordinates (see [`to_view_coordinates`]) covering the
    /// whole image, one unit per pixel, with depth in `[z_lo, z_hi]`.
    pub fn image_volume(intr: &Intrinsics, z_lo: f64, z_hi: f64) -> Result<Self> {
        Bounds::new(
            Point3::new(
                -intr.cx - 0.5,
                intr.cy - intr.height as f64 + 0.5,
                z_lo,
            ),
            Point3::new(intr.width as f64 - intr.cx - 0.5, intr.cy + 0.5, z_hi),
        )
    }
}

/// Maps camera-frame points to `(f·X/Z, f·Y/Z, Z)`: pixel offsets from the
/// principal point (Y up) plus metric depth. Binning these over
/// [`Bounds::image_volume`] puts the front plane on the source pixel grid.
pub fn to_view_coordinates(cloud: &PointCloud, intr: &Intrinsics) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .map(|p| Point3::new(intr.focal * p.x / p.z, intr.focal * p.y / p.z, p.z))
            .collect(),
        pixels: cloud.pixels.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

impl GridDims {
    pub fn new(rows: usize, cols: usize) -> Self {
        GridDims { rows, cols }
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }
}

/// One projected frame. Row 0 is the top of the view.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedMap {
    pub plane: ViewPlane,
    pub dims: GridDims,
    pub data: Vec<f64>,
    /// Units per cell along the column axis, row axis and value axis origin.
    pub col_bin: f64,
    pub row_bin: f64,
    pub value_origin: f64,
    /// Points that fell outside the bounds.
    pub dropped: usize,
}

impl ProjectedMap {
    pub fn zeros(plane: ViewPlane, dims: GridDims) -> Self {
        ProjectedMap {
            plane,
            dims,
            data: vec![0.0; dims.cells()],
            col_bin: 1.0,
            row_bin: 1.0,
            value_origin: 0.0,
            dropped: 0,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dims.cols + col]
    }

    pub fn nonzero(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Zeroes every pixel outside `[z_min, z_max]`.
pub fn segment_foreground(frame: &Frame, z_min: u32, z_max: u32) -> Frame {
    debug_assert!(z_min < z_max);
    let mut out = frame.clone();
    for d in out.data_mut() {
        if *d < z_min || *d > z_max {
            *d = 0;
        }
    }
    out
}

/// (column axis, row axis, value axis) for a plane; `true` flips the row
/// axis so larger coordinates land on row 0.
fn plane_axes(plane: ViewPlane) -> (usize, usize, usize, bool) {
    match plane {
        ViewPlane::Front => (0, 1, 2, true),
        ViewPlane::Side => (2, 1, 0, true),
        ViewPlane::Top => (0, 2, 1, false),
    }
}

fn coord(p: &Point3, axis: usize) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

fn bin(value: f64, lo: f64, hi: f64, n: usize) -> Option<usize> {
    if !(value >= lo && value <= hi) {
        return None;
    }
    let i = ((value - lo) / (hi - lo) * n as f64).floor() as usize;
    Some(i.min(n - 1))
}

pub fn project(
    cloud: &PointCloud,
    plane: ViewPlane,
    bounds: &Bounds,
    dims: GridDims,
) -> Result<ProjectedMap> {
    if dims.rows == 0 || dims.cols == 0 {
        return Err(Error::InvalidParam(format!("grid {dims:?} is empty")));
    }
    let (ca, ra, va, flip_rows) = plane_axes(plane);
    let (clo, chi) = (coord(&bounds.min, ca), coord(&bounds.max, ca));
    let (rlo, rhi) = (coord(&bounds.min, ra), coord(&bounds.max, ra));
    let (vlo, vhi) = (coord(&bounds.min, va), coord(&bounds.max, va));

    let mut map = ProjectedMap::zeros(plane, dims);
    map.col_bin = (chi - clo) / dims.cols as f64;
    map.row_bin = (rhi - rlo) / dims.rows as f64;
    map.value_origin = vlo;
    for p in &cloud.points {
        let value = coord(p, va);
        let cell = bin(coord(p, ca), clo, chi, dims.cols).zip(bin(coord(p, ra), rlo, rhi, dims.rows));
        let Some((col, row)) = cell.filter(|_| value >= vlo && value <= vhi) else {
            map.dropped += 1;
            continue;
        };
        let row = if flip_rows { dims.rows - 1 - row } else { row };
        let shifted = value - vlo;
        let slot = &mut map.data[row * dims.cols + col];
        if *slot == 0.0 || shifted < *slot {
            *slot = shifted;
        }
    }
    Ok(map)
}
