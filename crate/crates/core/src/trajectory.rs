//! Trajectory dumps: one JSON object per line per flow state, plus CSV
//! summaries of the angle mixtures and orientations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::categorical_flow::SimplexParams;
use crate::denoiser::{FlowState, PeptidePrediction, ResidueState};
use crate::error::{Error, Result};
use crate::gaussian_flow::GaussianParams;
use crate::geometry::{Rotation, Vec3};
use crate::gmm_flow::GmmParams;
use crate::ingest::ANGLE_SLOTS;

const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidueRecord {
    mu: [f64; 3],
    rho: f64,
    t_rot: [f64; 9],
    types: Vec<f64>,
    angles: Vec<GmmParams>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    step: usize,
    t: f64,
    residues: Vec<ResidueRecord>,
}

fn record(step: usize, s: &FlowState) -> StateRecord {
    StateRecord {
        step,
        t: s.t,
        residues: s
            .residues
            .iter()
            .map(|r| ResidueRecord {
                mu: [r.pos.mu.x, r.pos.mu.y, r.pos.mu.z],
                rho: r.pos.rho,
                t_rot: r.t_rot.to_row_major(),
                types: r.types.probs().to_vec(),
                angles: r.angles.clone(),
            })
            .collect(),
    }
}

/// Writes `{step, t, residues}` per line, step 0 first.
pub fn write_trajectory_jsonl<W: Write>(mut w: W, trajectory: &[FlowState]) -> Result<()> {
    for (step, s) in trajectory.iter().enumerate() {
        serde_json::to_writer(&mut w, &record(step, s))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn schema(path: String, message: impl Into<String>) -> Error {
    Error::Schema {
        path,
        message: message.into(),
    }
}

/// Reads a dump written by [`write_trajectory_jsonl`]; blank lines are
/// ignored. Error paths are prefixed with the 1-based line number.
pub fn read_trajectory_jsonl(text: &str) -> Result<Vec<FlowState>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |p: &str| format!("line {}{p}", lineno + 1);
        let de = &mut serde_json::Deserializer::from_str(line);
        let rec: StateRecord = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(at(&format!(" {path}")), e.into_inner().to_string())
        })?;
        let residues = rec
            .residues
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let here = |field: &str| at(&format!(" residues[{i}].{field}"));
                let t_rot = Rotation::from_row_major(&r.t_rot, ROTATION_TOL)
                    .map_err(|_| schema(here("t_rot"), "not a proper rotation"))?;
                let types = SimplexParams::new(r.types).map_err(|e| schema(here("types"), e.to_string()))?;
                if r.angles.len() != ANGLE_SLOTS {
                    return Err(schema(here("angles"), format!("expected {ANGLE_SLOTS} mixtures")));
                }
                if !(r.rho > 0.0) {
                    return Err(schema(here("rho"), "precision must be positive"));
                }
                Ok(ResidueState {
                    pos: GaussianParams {
                        mu: Vec3::from(r.mu),
                        rho: r.rho,
                    },
                    t_rot,
                    types,
                    angles: r.angles,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(FlowState { residues, t: rec.t });
    }
    Ok(out)
}

/// `step,t,residue,slot,component,mu,rho,pi` for every mixture component.
pub fn write_angle_summary_csv<W: Write>(w: W, trajectory: &[FlowState]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["step", "t", "residue", "slot", "component", "mu", "rho", "pi"])?;
    for (step, s) in trajectory.iter().enumerate() {
        for (r, res) in s.residues.iter().enumerate() {
            for (slot, g) in res.angles.iter().enumerate() {
                for (k, c) in g.components().iter().enumerate() {
                    wtr.write_record([
                        step.to_string(),
                        s.t.to_string(),
                        r.to_string(),
                        slot.to_string(),
                        k.to_string(),
                        c.mu.to_string(),
                        c.rho.to_string(),
                        c.pi.to_string(),
                    ])?;
                }
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// `step,t,residue,geodesic`; the geodesic to the target orientation is
/// left empty when no target is known.
pub fn write_rotation_summary_csv<W: Write>(
    w: W,
    trajectory: &[FlowState],
    target: Option<&PeptidePrediction>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["step", "t", "residue", "geodesic"])?;
    for (step, s) in trajectory.iter().enumerate() {
        for (r, res) in s.residues.iter().enumerate() {
            let d = target
                .and_then(|p| p.residues.get(r))
                .map(|p| res.t_rot.geodesic(&p.o_hat).to_string())
                .unwrap_or_default();
            wtr.write_record([step.to_string(), s.t.to_string(), r.to_string(), d])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
