//! Non-fatal conditions reported alongside successful results.

use std::fmt;

use crate::projection::ViewPlane;

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// One side of a train/test split came out empty.
    EmptySplitSide { side: &'static str },
    /// A temporal scale was longer than the sequence and was skipped.
    ScaleSkipped { scale: usize, frames: usize },
    /// Points fell outside the projection bounds.
    PointsDropped { plane: ViewPlane, count: usize },
    /// A sample failed and was left out of a stream or report.
    SampleFailed { sample: String, reason: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptySplitSide { side } => write!(f, "{side} split is empty"),
            Diagnostic::ScaleSkipped { scale, frames } => {
                write!(f, "scale {scale} skipped: only {frames} frames")
            }
            Diagnostic::PointsDropped { plane, count } => {
                write!(f, "{count} points outside {plane} bounds dropped")
            }
            Diagnostic::SampleFailed { sample, reason } => write!(f, "{sample} failed: {reason}"),
        }
    }
}

/// Logs each entry. Points leaving the frame are routine for rotated views,
/// so those go to info; the rest are warnings.
pub(crate) fn emit(diags: &[Diagnostic]) {
    for d in diags {
        match d {
            Diagnostic::PointsDropped { .. } => log::info!("{d}"),
            _ => log::warn!("{d}"),
        }
    }
}
