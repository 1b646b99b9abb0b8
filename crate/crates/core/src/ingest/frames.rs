use std::collections::HashMap;
use std::f64::consts::PI;

use log::warn;

use super::pdb::AtomRecord;
use super::{ResidueFrame, ANGLE_SLOTS};
use crate::categorical_flow::{class_from_three_letter, three_letter};
use crate::error::Result;
use crate::geometry::{canonical_angle, dihedral, Rotation, Vec3};

/// Longest C(i)–N(i+1) distance treated as a peptide bond, in Å.
const PEPTIDE_BOND_MAX: f64 = 2.0;

/// Atom quadruples defining χ1..χ4 for each residue type.
pub fn chi_atoms(res_name: &str) -> &'static [[&'static str; 4]] {
    const CHI1: [&str; 4] = ["N", "CA", "CB", "CG"];
    const CHI2: [&str; 4] = ["CA", "CB", "CG", "CD"];
    match res_name {
        "ARG" => &[CHI1, CHI2, ["CB", "CG", "CD", "NE"], ["CG", "CD", "NE", "CZ"]],
        "ASN" | "ASP" => &[CHI1, ["CA", "CB", "CG", "OD1"]],
        "CYS" => &[["N", "CA", "CB", "SG"]],
        "GLN" | "GLU" => &[CHI1, CHI2, ["CB", "CG", "CD", "OE1"]],
        "HIS" => &[CHI1, ["CA", "CB", "CG", "ND1"]],
        "ILE" => &[["N", "CA", "CB", "CG1"], ["CA", "CB", "CG1", "CD1"]],
        "LEU" => &[CHI1, ["CA", "CB", "CG", "CD1"]],
        "LYS" => &[CHI1, CHI2, ["CB", "CG", "CD", "CE"], ["CG", "CD", "CE", "NZ"]],
        "MET" => &[CHI1, ["CA", "CB", "CG", "SD"], ["CB", "CG", "SD", "CE"]],
        "PHE" | "TRP" | "TYR" => &[CHI1, ["CA", "CB", "CG", "CD1"]],
        "PRO" => &[CHI1, CHI2],
        "SER" => &[["N", "CA", "CB", "OG"]],
        "THR" => &[["N", "CA", "CB", "OG1"]],
        "VAL" => &[["N", "CA", "CB", "CG1"]],
        _ => &[],
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameBuild {
    pub frames: Vec<ResidueFrame>,
    pub warnings: Vec<String>,
}

struct Residue<'a> {
    name: &'a str,
    chain: &'a str,
    seq: i32,
    atoms: HashMap<&'a str, Vec3>,
}

fn group_residues(atoms: &[AtomRecord]) -> Vec<Residue<'_>> {
    let mut out: Vec<Residue> = Vec::new();
    let mut key: Option<(&str, i32, char)> = None;
    for a in atoms {
        let k = (a.chain.as_str(), a.res_seq, a.icode);
        if key != Some(k) {
            key = Some(k);
            out.push(Residue {
                name: &a.res_name,
                chain: &a.chain,
                seq: a.res_seq,
                atoms: HashMap::new(),
            });
        }
        // first occurrence wins for duplicated names
        out.last_mut().unwrap().atoms.entry(a.name.as_str()).or_insert(a.pos);
    }
    out
}

/// Gram–Schmidt frame: e1 along C−Cα, e2 from N−Cα, e3 = e1 × e2.
fn backbone_frame(n: &Vec3, ca: &Vec3, c: &Vec3) -> Option<Rotation> {
    let e1 = (c - ca).try_normalize(1e-10)?;
    let v = n - ca;
    let e2 = (v - e1 * e1.dot(&v)).try_normalize(1e-10)?;
    let e3 = e1.cross(&e2);
    Some(Rotation::from_columns_unchecked(e1, e2, e3))
}

/// Builds residue frames from ATOM records. Residues missing N, CA or C and
/// non-canonical residues are dropped with a warning. ψ uses the next
/// residue's N when it is peptide bonded and falls back to the carbonyl
/// oxygen otherwise.
pub fn build_frames(atoms: &[AtomRecord]) -> FrameBuild {
    let residues = group_residues(atoms);
    let mut out = FrameBuild::default();
    let warn_push = |out: &mut FrameBuild, msg: String| {
        warn!("{msg}");
        out.warnings.push(msg);
    };
    for (idx, r) in residues.iter().enumerate() {
        let Some(class) = class_from_three_letter(r.name) else {
            warn_push(
                &mut out,
                format!("{}{} {}: non-canonical residue dropped", r.chain, r.seq, r.name),
            );
            continue;
        };
        let (Some(n), Some(ca), Some(c)) = (r.atoms.get("N"), r.atoms.get("CA"), r.atoms.get("C")) else {
            warn_push(
                &mut out,
                format!("{}{} {}: missing backbone atom", r.chain, r.seq, r.name),
            );
            continue;
        };
        let Some(o) = backbone_frame(n, ca, c) else {
            warn_push(
                &mut out,
                format!("{}{} {}: degenerate backbone", r.chain, r.seq, r.name),
            );
            continue;
        };

        let mut chi = [None; ANGLE_SLOTS];
        let next_n = residues
            .get(idx + 1)
            .filter(|next| next.chain == r.chain)
            .and_then(|next| next.atoms.get("N"))
            .filter(|nn| (*nn - c).norm() < PEPTIDE_BOND_MAX);
        chi[0] = match (next_n, r.atoms.get("O")) {
            (Some(nn), _) => dihedral(n, ca, c, nn).ok(),
            (None, Some(ox)) => dihedral(n, ca, c, ox).ok().map(|d| canonical_angle(d - PI)),
            (None, None) => None,
        };
        for (slot, quad) in chi_atoms(r.name).iter().enumerate() {
            let pts: Option<Vec<&Vec3>> = quad.iter().map(|name| r.atoms.get(name)).collect();
            chi[slot + 1] = pts.and_then(|p| dihedral(p[0], p[1], p[2], p[3]).ok());
        }

        out.frames.push(ResidueFrame {
            x: *ca,
            o,
            chi,
            c: class,
            chain: r.chain.to_string(),
            resnum: r.seq,
        });
    }
    out
}

/// Places `d` so that |cd| = `len`, angle(b, c, d) = `angle` and
/// dihedral(a, b, c, d) = `torsion`.
fn place(a: &Vec3, b: &Vec3, c: &Vec3, len: f64, angle: f64, torsion: f64) -> Vec3 {
    let bc = (c - b).normalize();
    let n = (b - a).cross(&bc).normalize();
    let m = n.cross(&bc);
    let d_local = Vec3::new(
        -len * angle.cos(),
        len * angle.sin() * torsion.cos(),
        len * angle.sin() * torsion.sin(),
    );
    c + bc * d_local.x + m * d_local.y + n * d_local.z
}

const CA_C: f64 = 1.525;
const N_CA: f64 = 1.458;
const N_CA_C: f64 = 111.2;
const C_O: f64 = 1.231;
const CA_C_O: f64 = 120.5;
const SIDE_BOND: f64 = 1.53;
const SIDE_ANGLE: f64 = 110.5;
const CB_TORSION: f64 = -122.55;

/// Idealized backbone, carbonyl oxygen and χ-defining side-chain atoms for
/// each frame. Only used to exercise the frame round trip, so bond lengths
/// and angles are generic. Side-chain placement stops at the first absent χ
/// slot. Callers wanting ψ recovered from the oxygen must keep consecutive
/// frames farther apart than a peptide bond.
pub fn idealized_atoms(frames: &[ResidueFrame]) -> Result<Vec<AtomRecord>> {
    let mut out = Vec::new();
    for f in frames {
        let res_name = three_letter(f.c)
            .ok_or_else(|| crate::Error::InvalidParameter(format!("residue class {} out of range", f.c)))?;
        let ang = N_CA_C.to_radians();
        let ca = f.x;
        let c = ca + f.o.apply(&Vec3::new(CA_C, 0.0, 0.0));
        let n = ca + f.o.apply(&Vec3::new(N_CA * ang.cos(), N_CA * ang.sin(), 0.0));
        let mut placed: Vec<(&str, Vec3)> = vec![("N", n), ("CA", ca), ("C", c)];
        if let Some(psi) = f.chi[0] {
            placed.push(("O", place(&n, &ca, &c, C_O, CA_C_O.to_radians(), psi + PI)));
        }
        let quads = chi_atoms(res_name);
        if !quads.is_empty() {
            placed.push((
                "CB",
                place(&c, &n, &ca, SIDE_BOND, SIDE_ANGLE.to_radians(), CB_TORSION.to_radians()),
            ));
        }
        for (slot, quad) in quads.iter().enumerate() {
            let Some(torsion) = f.chi[slot + 1] else { break };
            let find = |name: &str| placed.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
            let (Some(a), Some(b), Some(cc)) = (find(quad[0]), find(quad[1]), find(quad[2])) else {
                break;
            };
            placed.push((quad[3], place(&a, &b, &cc, SIDE_BOND, SIDE_ANGLE.to_radians(), torsion)));
        }
        out.extend(placed.into_iter().map(|(name, pos)| AtomRecord {
            name: name.to_string(),
            res_name: res_name.to_string(),
            chain: f.chain.clone(),
            res_seq: f.resnum,
            icode: ' ',
            pos,
            occupancy: 1.0,
            altloc: ' ',
        }));
    }
    Ok(out)
}
