//! Conversion between atomic coordinates and residue frames.
//!
//! A residue frame is the Cα position, an orientation built from the N, Cα
//! and C atoms, up to five torsions (ψ, χ1..χ4) and the residue type.

mod frames;
mod json;
mod pdb;

pub use frames::{build_frames, chi_atoms, idealized_atoms, FrameBuild};
pub use json::{dataset_from_json, dataset_to_json, frames_from_json, frames_to_json};
pub use pdb::{atoms_to_pdb, parse_pdb, AtomRecord, PdbParse};

use crate::geometry::{Rotation, Vec3};

/// Number of torsion slots per residue.
pub const ANGLE_SLOTS: usize = 5;
/// Slot names, in storage order.
pub const SLOT_NAMES: [&str; ANGLE_SLOTS] = ["psi", "chi1", "chi2", "chi3", "chi4"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueFrame {
    /// Cα position.
    pub x: Vec3,
    pub o: Rotation,
    /// ψ followed by χ1..χ4; `None` marks an absent torsion.
    pub chi: [Option<f64>; ANGLE_SLOTS],
    /// Residue type, 1-based.
    pub c: usize,
    pub chain: String,
    pub resnum: i32,
}

impl ResidueFrame {
    pub fn present_angles(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.chi.iter().enumerate().filter_map(|(i, a)| a.map(|v| (i, v)))
    }
}
