use std::fmt;
use std::io::Read;
use std::path::Path;

use schottky_core::{GroupFile, HalfSpacePoint};

/// Anything wrong with the input itself; the binary exits with status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn read_text(path: &str) -> Result<String, InputError> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut text).map_err(|e| InputError(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(Path::new(path)).map_err(|e| InputError(format!("reading {path}: {e}")))?;
    }
    Ok(text)
}

pub fn read_group(path: &str) -> Result<GroupFile, InputError> {
    let text = read_text(path)?;
    let name = if path == "-" { "stdin" } else { path };
    GroupFile::from_json(&text).map_err(|e| InputError(format!("{name}: {e}")))
}

/// Parses `re,im,t`.
pub fn parse_basepoint(s: &str) -> Result<HalfSpacePoint, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [re, im, t] = parts.as_slice() else {
        return Err(format!("expected re,im,t, got {s:?}"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    HalfSpacePoint::new(schottky_core::C64::new(num(re)?, num(im)?), num(t)?).map_err(|e| e.to_string())
}
