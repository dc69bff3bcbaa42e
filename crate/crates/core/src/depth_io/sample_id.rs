use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Action, subject and example ids carried by a depth file name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleId {
    pub action: u32,
    pub subject: u32,
    pub example: u32,
}

impl SampleId {
    pub fn new(action: u32, subject: u32, example: u32) -> Result<Self> {
        let id = SampleId {
            action,
            subject,
            example,
        };
        for (v, segment) in [(action, "action"), (subject, "subject"), (example, "example")] {
            if v == 0 || v > 999 {
                return Err(Error::SampleName {
                    name: id.stem(),
                    segment,
                });
            }
        }
        Ok(id)
    }

    /// `aXXX_sXXX_eXXX`, shared by depth files and exported images.
    pub fn stem(&self) -> String {
        format!(
            "a{:03}_s{:03}_e{:03}",
            self.action, self.subject, self.example
        )
    }

    /// Parses the leading `aXXX_sXXX_eXXX` of `name`, returning the id and
    /// the unparsed remainder (starting after the example digits).
    pub(crate) fn parse_stem(name: &str) -> Result<(SampleId, &str)> {
        let mut rest = name;
        let mut vals = [0u32; 3];
        for (i, (prefix, segment)) in [('a', "action"), ('s', "subject"), ('e', "example")]
            .into_iter()
            .enumerate()
        {
            let bad = || Error::SampleName {
                name: name.to_string(),
                segment,
            };
            if i > 0 {
                rest = rest.strip_prefix('_').ok_or_else(bad)?;
            }
            rest = rest.strip_prefix(prefix).ok_or_else(bad)?;
            let digits = rest.get(..3).ok_or_else(bad)?;
            if !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            vals[i] = digits.parse().map_err(|_| bad())?;
            if vals[i] == 0 {
                return Err(bad());
            }
            rest = &rest[3..];
        }
        Ok((
            SampleId {
                action: vals[0],
                subject: vals[1],
                example: vals[2],
            },
            rest,
        ))
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem())
    }
}

const DEPTH_SUFFIX: &str = "_depth.bin";

/// Parses `aXXX_sXXX_eXXX_depth.bin` (exactly three digits per segment).
pub fn parse_sample_id(filename: &str) -> Result<SampleId> {
    let (id, rest) = SampleId::parse_stem(filename)?;
    if rest != DEPTH_SUFFIX {
        return Err(Error::SampleName {
            name: filename.to_string(),
            segment: "suffix",
        });
    }
    Ok(id)
}

pub fn format_sample_id(id: &SampleId) -> String {
    format!("{}{DEPTH_SUFFIX}", id.stem())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_convention() {
        let id = parse_sample_id("a012_s005_e002_depth.bin").unwrap();
        assert_eq!((id.action, id.subject, id.example), (12, 5, 2));
        let id = parse_sample_id("a001_s001_e001_depth.bin").unwrap();
        assert_eq!((id.action, id.subject, id.example), (1, 1, 1));
    }

    #[test]
    fn names_the_bad_segment() {
        match parse_sample_id("a12_s5_depth.bin") {
            Err(Error::SampleName { segment, .. }) => assert_eq!(segment, "action"),
            other => panic!("{other:?}"),
        }
        match parse_sample_id("a012_s005_depth.bin") {
            Err(Error::SampleName { segment, .. }) => assert_eq!(segment, "example"),
            other => panic!("{other:?}"),
        }
        match parse_sample_id("a012_s005_e002_rgb.bin") {
            Err(Error::SampleName { segment, .. }) => assert_eq!(segment, "suffix"),
            other => panic!("{other:?}"),
        }
        assert!(parse_sample_id("a000_s001_e001_depth.bin").is_err());
    }

    proptest! {
        #[test]
        fn codec_round_trips(a in 1u32..1000, s in 1u32..1000, e in 1u32..1000) {
            let id = SampleId::new(a, s, e).unwrap();
            let name = format_sample_id(&id);
            prop_assert_eq!(parse_sample_id(&name).unwrap(), id);
            prop_assert_eq!(format_sample_id(&parse_sample_id(&name).unwrap()), name);
        }
    }
}
