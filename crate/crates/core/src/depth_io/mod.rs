//! Depth-sequence files, the `aXXX_sXXX_eXXX_depth.bin` naming convention,
//! and dataset manifests with cross-subject splits.

mod manifest;
mod sample_id;
mod sequence;

pub use manifest::{
    build_manifest, read_manifest_csv, split, write_manifest_csv, DatasetManifest, LabelMapping,
    ManifestEntry, Split, SplitRule,
};
pub use sample_id::{format_sample_id, parse_sample_id, SampleId};
pub use sequence::{
    decode_sequence, encode_sequence, read_header, read_sequence, write_sequence, DepthSequence,
    Frame, SequenceHeader, HEADER_BYTES,
};
