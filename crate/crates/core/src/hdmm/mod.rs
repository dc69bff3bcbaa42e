//! Hierarchical depth motion maps: sub-sampled motion-energy accumulation,
//! its weighted recursion, and full extraction from a depth sequence.

mod accumulate;
mod extract;

pub use accumulate::{
    accumulate, accumulate_weighted, subsample_indices, MotionMap, TemporalScale, WeightParams,
};
pub use extract::{extract_grid, extract_hdmm, pivot_depth, Extraction};
