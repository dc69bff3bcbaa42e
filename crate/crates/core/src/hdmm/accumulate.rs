use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{GridDims, ProjectedMap, ViewPlane};

/// Frame stride `n >= 1` between compared frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TemporalScale(usize);

impl TemporalScale {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("temporal scale must be >= 1".into()));
        }
        Ok(TemporalScale(n))
    }

    pub fn get(&self) -> usize {
        self.0
    }

    /// `1..=max`.
    pub fn up_to(max: usize) -> Vec<TemporalScale> {
        (1..=max).map(TemporalScale).collect()
    }

    /// Parses `1,5,21`.
    pub fn parse_list(text: &str) -> Result<Vec<TemporalScale>> {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParam(format!("bad scale {s:?}")))
                    .and_then(TemporalScale::new)
            })
            .collect()
    }
}

impl TryFrom<usize> for TemporalScale {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        TemporalScale::new(n)
    }
}

impl From<TemporalScale> for usize {
    fn from(s: TemporalScale) -> usize {
        s.0
    }
}

impl fmt::Display for TemporalScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `H_t = gamma * |map_t - map_{t-1}| + delta * H_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub gamma: f64,
    pub delta: f64,
}

impl WeightParams {
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        for v in [gamma, delta] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "weights must be finite and positive, got gamma={gamma} delta={delta}"
                )));
            }
        }
        Ok(WeightParams { gamma, delta })
    }
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            gamma: 0.99,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionMap {
    pub plane: ViewPlane,
    pub scale: TemporalScale,
    pub dims: GridDims,
    pub data: Vec<f64>,
    /// Number of frame differences accumulated.
    pub frames_used: usize,
}

impl MotionMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dims.cols + col]
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// 1-based `(current, previous)` frame pairs `((t-1)n+1, (t-2)n+1)` for
/// `t = 2..=b`, `b` the largest index with `(b-1)n+1 <= N`.
pub fn subsample_indices(frames: usize, scale: TemporalScale) -> Result<Vec<(usize, usize)>> {
    let n = scale.0;
    if frames < n + 1 {
        return Err(Error::EmptyScale { frames, scale: n });
    }
    let b = (frames - 1) / n + 1;
    Ok((2..=b).map(|t| ((t - 1) * n + 1, (t - 2) * n + 1)).collect())
}

fn check_maps(maps: &[ProjectedMap]) -> Result<(ViewPlane, GridDims)> {
    let first = maps.first().ok_or(Error::EmptyScale { frames: 0, scale: 1 })?;
    for (i, m) in maps.iter().enumerate() {
        if m.plane != first.plane || m.dims != first.dims || m.data.len() != first.dims.cells() {
            return Err(Error::DimensionMismatch(format!(
                "map {i} is {} {:?}, expected {} {:?}",
                m.plane, m.dims, first.plane, first.dims
            )));
        }
    }
    Ok((first.plane, first.dims))
}

fn fold_pairs(
    maps: &[ProjectedMap],
    scale: TemporalScale,
    mut step: impl FnMut(&mut [f64], &[f64], &[f64]),
) -> Result<MotionMap> {
    let (plane, dims) = check_maps(maps)?;
    let pairs = subsample_indices(maps.len(), scale)?;
    let mut acc = vec![0.0; dims.cells()];
    for &(cur, prev) in &pairs {
        step(&mut acc, &maps[cur - 1].data, &maps[prev - 1].data);
    }
    Ok(MotionMap {
        plane,
        scale,
        dims,
        data: acc,
        frames_used: pairs.len(),
    })
}

/// Sum of absolute differences over the sub-sampled frame pairs, unthresholded.
pub fn accumulate(maps: &[ProjectedMap], scale: TemporalScale) -> Result<MotionMap> {
    fold_pairs(maps, scale, |acc, cur, prev| {
        for ((a, c), p) in acc.iter_mut().zip(cur).zip(prev) {
            *a += (c - p).abs();
        }
    })
}

/// The weighted recursion over the same pairs, starting from a zero map.
pub fn accumulate_weighted(
    maps: &[ProjectedMap],
    scale: TemporalScale,
    weights: WeightParams,
) -> Result<MotionMap> {
    let WeightParams { gamma, delta } = weights;
    fold_pairs(maps, scale, |acc, cur, prev| {
        for ((a, c), p) in acc.iter_mut().zip(cur).zip(prev) {
            *a = gamma * (c - p).abs() + delta * *a;
        }
    })
}
