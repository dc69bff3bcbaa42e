//! Pinhole back-projection, the camera-around-subject rotation and z-buffered
//! reprojection.
//!
//! Camera frame: X to the right, Y up, Z along the optical axis, all in
//! millimeters. Pixel `(u, v)` has `v` growing downwards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::depth_io::Frame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Points together with the index of the source pixel each came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub pixels: Vec<usize>,
}

impl PointCloud {
    pub fn from_points(points: Vec<Point3>) -> Self {
        let pixels = (0..points.len()).collect();
        PointCloud { points, pixels }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Median Z of the cloud, `None` when empty.
    pub fn median_depth(&self) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let mut z: Vec<f64> = self.points.iter().map(|p| p.z).collect();
        z.sort_by(f64::total_cmp);
        let mid = z.len() / 2;
        Some(if z.len() % 2 == 1 {
            z[mid]
        } else {
            0.5 * (z[mid - 1] + z[mid])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(focal: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let ok = focal.is_finite()
            && focal > 0.0
            && (0.0..width as f64).contains(&cx)
            && (0.0..height as f64).contains(&cy);
        if !ok {
            return Err(Error::InvalidParam(format!(
                "intrinsics f={focal} c=({cx}, {cy}) for {width}x{height}"
            )));
        }
        Ok(Intrinsics {
            focal,
            cx,
            cy,
            width,
            height,
        })
    }

    /// 580 px focal length at 640 columns, scaled to `width`; centered principal point.
    pub fn for_resolution(width: usize, height: usize) -> Self {
        Intrinsics {
            focal: 580.0 * width as f64 / 640.0,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::DimensionMismatch(format!(
                "frame is {}x{}, intrinsics are for {}x{}",
                frame.width(),
                frame.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

/// Camera rotation about the subject: `theta` and `beta` in degrees, pivot
/// depth in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationParams {
    pub theta: f64,
    pub beta: f64,
    pub pivot_z: f64,
}

impl RotationParams {
    pub fn new(theta: f64, beta: f64, pivot_z: f64) -> Result<Self> {
        if !(pivot_z.is_finite() && pivot_z > 0.0 && theta.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "rotation theta={theta} beta={beta} pivot={pivot_z}"
            )));
        }
        Ok(RotationParams {
            theta,
            beta,
            pivot_z,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.theta == 0.0 && self.beta == 0.0
    }
}

/// An angle pair from a rotation grid, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub beta: f64,
}

impl Angles {
    pub const ZERO: Angles = Angles {
        theta: 0.0,
        beta: 0.0,
    };
}

/// Applies `R_y · R_z · [X, Y, Z, 1]^T` with the pivot depth in the
/// translation column. `R_z` acts on (X, Z) by `beta`, then `R_y` on (Y, Z)
/// by `theta`.
pub fn rotate_point(p: &Point3, params: &RotationParams) -> Point3 {
    let zc = params.pivot_z;
    let (sb, cb) = params.beta.to_radians().sin_cos();
    let (st, ct) = params.theta.to_radians().sin_cos();

    let x1 = cb * p.x + sb * p.z - zc * sb;
    let y1 = p.y;
    let z1 = -sb * p.x + cb * p.z + zc * (1.0 - cb);

    Point3 {
        x: x1,
        y: ct * y1 - st * z1 + zc * st,
        z: st * y1 + ct * z1 + zc * (1.0 - ct),
    }
}

pub fn rotate_cloud(cloud: &PointCloud, params: &RotationParams) -> PointCloud {
    PointCloud {
        points: cloud
            .points
            .iter()
            .map(|p| rotate_point(p, params))
            .collect(),
        pixels: cloud.pixels.clone(),
    }
}

/// Back-projects every non-zero pixel.
pub fn depth_to_cloud(frame: &Frame, intr: &Intrinsics) -> Result<PointCloud> {
    intr.check_frame(frame)?;
    let mut cloud = PointCloud::default();
    for (idx, &d) in frame.data().iter().enumerate() {
        if d == 0 {
            continue;
        }
        let (u, v) = ((idx % frame.width()) as f64, (idx / frame.width()) as f64);
        let z = d as f64;
        cloud.points.push(Point3 {
            x: (u - intr.cx) * z / intr.focal,
            y: (intr.cy - v) * z / intr.focal,
            z,
        });
        cloud.pixels.push(idx);
    }
    Ok(cloud)
}

/// Renders a cloud back into a depth frame, keeping the nearest Z per pixel.
/// Points behind the camera or off-screen are dropped.
pub fn cloud_to_depth(cloud: &PointCloud, intr: &Intrinsics) -> Frame {
    let mut frame = Frame::zeros(intr.width, intr.height);
    for p in &cloud.points {
        // also rejects NaN depths
        if p.z.is_nan() || p.z <= 0.0 {
            continue;
        }
        let u = (intr.focal * p.x / p.z + intr.cx).round();
        let v = (intr.cy - intr.focal * p.y / p.z).round();
        if u < 0.0 || v < 0.0 || u >= intr.width as f64 || v >= intr.height as f64 {
            continue;
        }
        let z = p.z.round().min(u32::MAX as f64) as u32;
        if z == 0 {
            continue;
        }
        let (u, v) = (u as usize, v as usize);
        let cur = frame.get(u, v);
        if cur == 0 || z < cur {
            frame.set(u, v, z);
        }
    }
    frame
}

/// Inclusive arithmetic progression `start:step:end` in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Progression {
    start: f64,
    step: f64,
    end: f64,
}

impl Progression {
    pub fn new(start: f64, step: f64, end: f64) -> Result<Self> {
        let bad = |why: &str| Error::InvalidParam(format!("progression {start}:{step}:{end} {why}"));
        if !(start.is_finite() && step.is_finite() && end.is_finite()) {
            return Err(bad("is not finite"));
        }
        if start != end {
            if step <= 0.0 || end < start {
                return Err(bad("must step upwards"));
            }
            let count = (end - start) / step;
            if (count - count.round()).abs() > 1e-9 {
                return Err(bad("does not land on its end point"));
            }
        } else if step <= 0.0 {
            return Err(bad("needs a positive step"));
        }
        Ok(Progression { start, step, end })
    }

    /// A single value.
    pub fn single(value: f64) -> Self {
        Progression {
            start: value,
            step: 1.0,
            end: value,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step).round() as usize + 1;
        (0..count)
            .map(|i| {
                if i + 1 == count {
                    self.end
                } else {
                    self.start + i as f64 * self.step
                }
            })
            .collect()
    }
}

impl FromStr for Progression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidParam(format!("bad progression {s:?}")))
        };
        match parts[..] {
            [v] => Ok(Progression::single(num(v)?)),
            [a, b, c] => Progression::new(num(a)?, num(b)?, num(c)?),
            _ => Err(Error::InvalidParam(format!(
                "progression {s:?} is not start:step:end"
            ))),
        }
    }
}

impl fmt::Display for Progression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.step, self.end)
    }
}

impl TryFrom<String> for Progression {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Progression> for String {
    fn from(p: Progression) -> String {
        p.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationGrid {
    pub theta: Progression,
    pub beta: Progression,
}

impl Default for RotationGrid {
    fn default() -> Self {
        RotationGrid {
            theta: Progression {
                start: -30.0,
                step: 15.0,
                end: 30.0,
            },
            beta: Progression {
                start: -5.0,
                step: 5.0,
                end: 5.0,
            },
        }
    }
}

impl RotationGrid {
    /// Only the unrotated view.
    pub fn identity() -> Self {
        RotationGrid {
            theta: Progression::single(0.0),
            beta: Progression::single(0.0),
        }
    }
}

/// Cartesian product of the two progressions, theta outer, beta inner.
pub fn rotation_grid(grid: &RotationGrid) -> Vec<Angles> {
    let betas = grid.beta.values();
    grid.theta
        .values()
        .into_iter()
        .flat_map(|theta| betas.iter().map(move |&beta| Angles { theta, beta }))
        .collect()
}

/// How the rotation pivot depth is chosen for a sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PivotMode {
    /// Median depth of the first frame's foreground.
    #[default]
    MedianForeground,
    Fixed(f64),
}
