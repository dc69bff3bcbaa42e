//! Pipeline settings, loadable from TOML. Every key is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_grid, Angles, Intrinsics, PivotMode, Progression, RotationGrid};
use crate::hdmm::{TemporalScale, WeightParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct PipelineConfig {
    /// Camera model; derived from the frame size when absent.
    pub intrinsics: Option<Intrinsics>,
    pub pivot: PivotMode,
    /// Foreground depth band `[z_min, z_max]` in millimeters.
    pub depth_band: [u32; 2],
    /// Depth bins along the Z axis of the side and top planes.
    pub depth_bins: usize,
    pub bounds_expansion: f64,

    pub scales: Vec<usize>,
    pub weighted: bool,
    pub gamma: f64,
    pub delta: f64,

    pub rotate: bool,
    pub theta_grid: Progression,
    pub beta_grid: Progression,

    pub canvas: usize,
    pub crop: usize,
    pub feature_side: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let grid = RotationGrid::default();
        let w = WeightParams::default();
        PipelineConfig {
            intrinsics: None,
            pivot: PivotMode::MedianForeground,
            depth_band: [400, 3000],
            depth_bins: 320,
            bounds_expansion: 0.05,
            scales: vec![1],
            weighted: true,
            gamma: w.gamma,
            delta: w.delta,
            rotate: false,
            theta_grid: grid.theta,
            beta_grid: grid.beta,
            canvas: 256,
            crop: 224,
            feature_side: 32,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.depth_band;
        let bad = |m: String| Err(Error::Config(m));
        if lo >= hi {
            return bad(format!("depth band {lo}..{hi} is empty"));
        }
        if self.depth_bins == 0 || self.canvas == 0 || self.feature_side == 0 {
            return bad("grid sizes must be positive".into());
        }
        if self.crop == 0 || self.crop > self.canvas {
            return bad(format!("crop {} must be in 1..={}", self.crop, self.canvas));
        }
        if !(self.bounds_expansion >= 0.0 && self.bounds_expansion.is_finite()) {
            return bad("bounds expansion must be >= 0".into());
        }
        self.temporal_scales()?;
        WeightParams::new(self.gamma, self.delta)?;
        Ok(())
    }

    pub fn temporal_scales(&self) -> Result<Vec<TemporalScale>> {
        if self.scales.is_empty() {
            return Err(Error::Config("scale list is empty".into()));
        }
        self.scales.iter().map(|&n| TemporalScale::new(n)).collect()
    }

    /// `None` selects the plain sum.
    pub fn weight_params(&self) -> Option<WeightParams> {
        self.weighted.then_some(WeightParams {
            gamma: self.gamma,
            delta: self.delta,
        })
    }

    /// The configured grid, or just the unrotated view when rotation is off.
    pub fn angles(&self) -> Vec<Angles> {
        if self.rotate {
            rotation_grid(&RotationGrid {
                theta: self.theta_grid,
                beta: self.beta_grid,
            })
        } else {
            vec![Angles::ZERO]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert!(text.contains("theta-grid = \"-30:15:30\""));
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_and_validation() {
        let cfg: PipelineConfig = toml::from_str(
            "scales = [1, 5]\nrotate = true\nbeta-grid = \"0\"\npivot = { fixed = 1500.0 }\n",
        )
        .unwrap();
        assert_eq!(cfg.angles().len(), 5);
        assert_eq!(cfg.pivot, PivotMode::Fixed(1500.0));
        cfg.validate().unwrap();
        let bad = PipelineConfig {
            crop: 300,
            ..PipelineConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(toml::from_str::<PipelineConfig>("no-such-key = 1").is_err());
    }
}
