use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Size of the `N, width, height` header in bytes.
pub const HEADER_BYTES: usize = 12;

/// One row-major depth image in millimeters. Zero means no return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u32>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "frame must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} frame needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Frame {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }

    pub fn get(&self, u: usize, v: usize) -> u32 {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, depth: u32) {
        self.data[v * self.width + u] = depth;
    }
}

/// An ordered, non-empty list of equally sized depth frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthSequence {
    width: usize,
    height: usize,
    frames: Vec<Frame>,
}

impl DepthSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames.first().ok_or(Error::ZeroFrames)?;
        let (width, height) = (first.width, first.height);
        if let Some(bad) = frames
            .iter()
            .position(|f| f.width != width || f.height != height)
        {
            return Err(Error::DimensionMismatch(format!(
                "frame {bad} is {}x{}, sequence is {width}x{height}",
                frames[bad].width, frames[bad].height
            )));
        }
        Ok(DepthSequence {
            width,
            height,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceHeader {
    pub frames: u32,
    pub width: u32,
    pub height: u32,
}

impl SequenceHeader {
    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Truncated {
                expected: HEADER_BYTES as u64,
                found: bytes.len() as u64,
            });
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
        let header = SequenceHeader {
            frames: word(0),
            width: word(1),
            height: word(2),
        };
        if header.frames == 0 {
            return Err(Error::ZeroFrames);
        }
        if header.width == 0 || header.height == 0 {
            return Err(Error::BadHeader(format!(
                "zero frame dimension {}x{}",
                header.width, header.height
            )));
        }
        Ok(header)
    }

    /// Total file size implied by the header.
    pub fn file_len(&self) -> u64 {
        HEADER_BYTES as u64
            + 4 * self.frames as u64 * self.width as u64 * self.height as u64
    }
}

/// Reads only the header of a depth file.
pub fn read_header(path: &Path) -> Result<SequenceHeader> {
    use std::io::Read;
    let mut buf = Vec::with_capacity(HEADER_BYTES);
    fs::File::open(path)
        .and_then(|f| f.take(HEADER_BYTES as u64).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    SequenceHeader::parse(&buf)
}

/// Decodes the little-endian `N, width, height` + `u32` payload layout.
pub fn decode_sequence(bytes: &[u8]) -> Result<DepthSequence> {
    let header = SequenceHeader::parse(bytes)?;
    let expected = header.file_len();
    let found = bytes.len() as u64;
    if found < expected {
        return Err(Error::Truncated { expected, found });
    }
    if found > expected {
        return Err(Error::SizeMismatch { expected, found });
    }
    let (w, h) = (header.width as usize, header.height as usize);
    let frames = bytes[HEADER_BYTES..]
        .chunks_exact(4 * w * h)
        .map(|chunk| {
            let data = chunk
                .chunks_exact(4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Frame {
                width: w,
                height: h,
                data,
            }
        })
        .collect();
    DepthSequence::new(frames)
}

pub fn encode_sequence(seq: &DepthSequence) -> Vec<u8> {
    let words = seq.frame_count() * seq.width * seq.height;
    let mut out = Vec::with_capacity(HEADER_BYTES + 4 * words);
    for v in [seq.frame_count(), seq.width, seq.height] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for frame in &seq.frames {
        for d in &frame.data {
            out.extend_from_slice(&d.to_le_bytes());
        }
    }
    out
}

pub fn read_sequence(path: &Path) -> Result<DepthSequence> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_sequence(&bytes)
}

pub fn write_sequence(seq: &DepthSequence, path: &Path) -> Result<()> {
    fs::write(path, encode_sequence(seq)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(n: u32, w: u32, h: u32) -> Vec<u8> {
        [n, w, h].iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn decodes_two_frames_of_sixteen() {
        let mut bytes = header(2, 4, 4);
        for i in 0..32u32 {
            bytes.extend_from_slice(&(i * 10).to_le_bytes());
        }
        let seq = decode_sequence(&bytes).unwrap();
        assert_eq!(seq.frame_count(), 2);
        assert_eq!(seq.frames()[0].data().len(), 16);
        assert_eq!(seq.frames()[1].get(3, 3), 310);
        assert_eq!(encode_sequence(&seq), bytes);
    }

    #[test]
    fn one_word_short_is_truncated() {
        let mut bytes = header(2, 4, 4);
        bytes.extend(std::iter::repeat_n(0u8, 31 * 4));
        assert!(matches!(
            decode_sequence(&bytes),
            Err(Error::Truncated {
                expected: 140,
                found: 136
            })
        ));
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(decode_sequence(&[0; 5]), Err(Error::Truncated { .. })));
        assert!(matches!(
            decode_sequence(&header(0, 4, 4)),
            Err(Error::ZeroFrames)
        ));
        assert!(matches!(
            decode_sequence(&header(1, 0, 4)),
            Err(Error::BadHeader(_))
        ));
        let mut long = header(1, 1, 1);
        long.extend_from_slice(&[0; 8]);
        assert!(matches!(
            decode_sequence(&long),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn single_small_frame_layout() {
        let seq = DepthSequence::new(vec![Frame::new(2, 2, vec![5, 0, 7, 9]).unwrap()]).unwrap();
        let bytes = encode_sequence(&seq);
        assert_eq!(bytes.len(), HEADER_BYTES + 16);
        assert_eq!(&bytes[..12], header(1, 2, 2).as_slice());
        assert_eq!(&bytes[12..16], &5u32.to_le_bytes());
        assert_eq!(&bytes[24..28], &9u32.to_le_bytes());
    }

    #[test]
    fn empty_frame_list_rejected() {
        assert!(matches!(DepthSequence::new(vec![]), Err(Error::ZeroFrames)));
    }

    #[test]
    fn mismatched_frames_rejected() {
        let r = DepthSequence::new(vec![Frame::zeros(2, 2), Frame::zeros(3, 2)]);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        assert!(Frame::new(2, 2, vec![1, 2, 3]).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let seq = DepthSequence::new(vec![Frame::zeros(1, 1)]).unwrap();
        let r = write_sequence(&seq, Path::new("/nonexistent-dir/x/y.bin"));
        assert!(matches!(r, Err(Error::Io { .. })));
    }
}
