//! JSON shapes shared by the library and the CLI.
//!
//! Complex numbers are `[re, im]`, maps are `[a, b, c, d]` of such pairs and
//! the point at infinity is the string `"inf"`. Non-finite reals are written
//! as `"inf"` / `"-inf"` / `"nan"` since JSON has no literal for them.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::disk::Disk;
use crate::moebius::{ExtComplex, MoebiusMap, C64};

pub const GROUP_FILE_VERSION: u32 = 1;

pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

pub mod ext_f64 {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtRepr {
    Finite([f64; 2]),
    Inf(String),
}

impl Serialize for ExtComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtComplex::Finite(z) => [z.re, z.im].serialize(s),
            ExtComplex::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtComplex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match ExtRepr::deserialize(d)? {
            ExtRepr::Finite([re, im]) => Ok(ExtComplex::from_re_im(re, im)),
            ExtRepr::Inf(s) if s == "inf" => Ok(ExtComplex::Infinity),
            ExtRepr::Inf(s) => Err(D::Error::custom(format!("expected [re, im] or \"inf\", got {s:?}"))),
        }
    }
}

impl Serialize for MoebiusMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let e = self.entries();
        [[e[0].re, e[0].im], [e[1].re, e[1].im], [e[2].re, e[2].im], [e[3].re, e[3].im]].serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let e = <[[f64; 2]; 4]>::deserialize(d)?;
        let z = |p: [f64; 2]| C64::new(p[0], p[1]);
        MoebiusMap::new(z(e[0]), z(e[1]), z(e[2]), z(e[3])).map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// On-disk description of a group: generators plus an optional disk system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    pub version: u32,
    pub generators: Vec<MoebiusMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disks: Option<Vec<Disk>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Debug, thiserror::Error)]
pub enum GroupFileError {
    #[error("invalid group file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported group file version {0} (expected {GROUP_FILE_VERSION})")]
    Version(u32),
    #[error("group file has no generators")]
    Empty,
}

impl GroupFile {
    pub fn new(generators: Vec<MoebiusMap>, disks: Option<Vec<Disk>>) -> Self {
        GroupFile { version: GROUP_FILE_VERSION, generators, disks, metadata: None }
    }

    pub fn from_json(text: &str) -> Result<Self, GroupFileError> {
        let f: GroupFile = serde_json::from_str(text)?;
        if f.version != GROUP_FILE_VERSION {
            return Err(GroupFileError::Version(f.version));
        }
        if f.generators.is_empty() {
            return Err(GroupFileError::Empty);
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group file serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_round_trips_bitwise() {
        let m =
            MoebiusMap::new(C64::new(0.1, 2.0 / 3.0), C64::new(-5.0, 1e-17), C64::new(1.0, 0.0), C64::new(0.3, -7.25))
                .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: MoebiusMap = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn infinity_is_a_string() {
        assert_eq!(serde_json::to_string(&ExtComplex::Infinity).unwrap(), "\"inf\"");
        let z: ExtComplex = serde_json::from_str("[1.5,-2]").unwrap();
        assert_eq!(z, ExtComplex::from_re_im(1.5, -2.0));
        assert!(serde_json::from_str::<ExtComplex>("\"nope\"").is_err());
    }

    #[test]
    fn group_file_version_checked() {
        let text = r#"{"version":2,"generators":[[[2,0],[3,0],[1,0],[2,0]]]}"#;
        assert!(matches!(GroupFile::from_json(text), Err(GroupFileError::Version(2))));
        let text = r#"{"version":1,"generators":[[[2,0],[3,0],[1,0],[2,0]]]}"#;
        let f = GroupFile::from_json(text).unwrap();
        assert_eq!(f.generators.len(), 1);
        assert_eq!(GroupFile::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn singular_map_rejected() {
        let text = r#"{"version":1,"generators":[[[1,0],[1,0],[1,0],[1,0]]]}"#;
        assert!(GroupFile::from_json(text).is_err());
    }
}
