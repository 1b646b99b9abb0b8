use serde::{Deserialize, Serialize};

use super::{ResidueFrame, ANGLE_SLOTS};
use crate::categorical_flow::NUM_TYPES;
use crate::error::{Error, Result};
use crate::geometry::{canonical_angle, Rotation, Vec3};

/// Orthonormality tolerance applied to rotations read from JSON.
pub const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    x: [f64; 3],
    o: [f64; 9],
    chi: Vec<Option<f64>>,
    c: usize,
    #[serde(default)]
    chain: String,
    #[serde(default)]
    resnum: i32,
}

impl From<&ResidueFrame> for FrameRecord {
    fn from(f: &ResidueFrame) -> Self {
        FrameRecord {
            x: [f.x.x, f.x.y, f.x.z],
            o: f.o.to_row_major(),
            chi: f.chi.to_vec(),
            c: f.c,
            chain: f.chain.clone(),
            resnum: f.resnum,
        }
    }
}

fn schema(path: String, message: impl Into<String>) -> Error {
    Error::Schema {
        path,
        message: message.into(),
    }
}

impl FrameRecord {
    fn into_frame(self, path: &str) -> Result<ResidueFrame> {
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(schema(format!("{path}.x"), "non-finite coordinate"));
        }
        let o = Rotation::from_row_major(&self.o, ROTATION_TOL)
            .map_err(|_| schema(format!("{path}.o"), "not a proper rotation"))?;
        if self.chi.len() > ANGLE_SLOTS {
            return Err(schema(
                format!("{path}.chi"),
                format!("at most {ANGLE_SLOTS} angles, got {}", self.chi.len()),
            ));
        }
        let mut chi = [None; ANGLE_SLOTS];
        for (s, v) in self.chi.iter().enumerate() {
            chi[s] = match v {
                Some(a) if !a.is_finite() => return Err(schema(format!("{path}.chi[{s}]"), "non-finite angle")),
                Some(a) => Some(canonical_angle(*a)),
                None => None,
            };
        }
        if !(1..=NUM_TYPES).contains(&self.c) {
            return Err(schema(
                format!("{path}.c"),
                format!("class {} outside 1..={NUM_TYPES}", self.c),
            ));
        }
        Ok(ResidueFrame {
            x: Vec3::from(self.x),
            o,
            chi,
            c: self.c,
            chain: self.chain,
            resnum: self.resnum,
        })
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner().to_string())
    })
}

fn records(frames: &[ResidueFrame]) -> Vec<FrameRecord> {
    frames.iter().map(FrameRecord::from).collect()
}

/// Serializes frames as a JSON list. Angles keep all five slots, `null` for
/// absent ones; numbers print in shortest round-trip form.
pub fn frames_to_json(frames: &[ResidueFrame]) -> String {
    serde_json::to_string_pretty(&records(frames)).expect("frame records always serialize")
}

/// Reads a JSON frame list. Angles outside `[0, 2π)` are wrapped; rotations
/// must be orthonormal within 1e-9.
pub fn frames_from_json(text: &str) -> Result<Vec<ResidueFrame>> {
    let raw: Vec<FrameRecord> = parse(text)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| r.into_frame(&format!("[{i}]")))
        .collect()
}

pub fn dataset_to_json(peptides: &[Vec<ResidueFrame>]) -> String {
    let raw: Vec<Vec<FrameRecord>> = peptides.iter().map(|p| records(p)).collect();
    serde_json::to_string(&raw).expect("frame records always serialize")
}

/// Reads a list of peptides, each a frame list.
pub fn dataset_from_json(text: &str) -> Result<Vec<Vec<ResidueFrame>>> {
    let raw: Vec<Vec<FrameRecord>> = parse(text)?;
    raw.into_iter()
        .enumerate()
        .map(|(p, pep)| {
            pep.into_iter()
                .enumerate()
                .map(|(i, r)| r.into_frame(&format!("[{p}][{i}]")))
                .collect()
        })
        .collect()
}
