use std::fmt::Write as _;

use log::warn;

use crate::geometry::Vec3;

/// One ATOM record.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomRecord {
    pub name: String,
    pub res_name: String,
    pub chain: String,
    pub res_seq: i32,
    pub icode: char,
    pub pos: Vec3,
    pub occupancy: f64,
    pub altloc: char,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PdbParse {
    pub atoms: Vec<AtomRecord>,
    pub warnings: Vec<String>,
}

/// Byte-column field, 1-based inclusive, trimmed. `None` when the line is
/// too short or the range does not fall on character boundaries.
fn field(line: &str, from: usize, to: usize) -> Option<&str> {
    let end = to.min(line.len());
    if from > end {
        return None;
    }
    line.get(from - 1..end).map(str::trim)
}

fn parse_atom_line(line: &str) -> Result<Option<AtomRecord>, String> {
    if line.len() < 54 {
        return Err("line shorter than coordinate columns".into());
    }
    let altloc = line[16..17].chars().next().unwrap_or(' ');
    if altloc != ' ' && altloc != 'A' {
        return Ok(None);
    }
    let num = |from, to, what: &str| -> Result<f64, String> {
        field(line, from, to)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("bad {what} field"))
    };
    let x = num(31, 38, "x")?;
    let y = num(39, 46, "y")?;
    let z = num(47, 54, "z")?;
    let occupancy = match field(line, 55, 60) {
        Some(s) if !s.is_empty() => s.parse::<f64>().map_err(|_| "bad occupancy field".to_string())?,
        _ => 1.0,
    };
    let res_seq = field(line, 23, 26)
        .and_then(|s| s.parse::<i32>().ok())
        .ok_or("bad residue sequence number")?;
    let name = field(line, 13, 16).ok_or("missing atom name")?;
    if name.is_empty() {
        return Err("missing atom name".into());
    }
    Ok(Some(AtomRecord {
        name: name.to_string(),
        res_name: field(line, 18, 20).unwrap_or("").to_string(),
        chain: field(line, 22, 22).unwrap_or("").to_string(),
        res_seq,
        icode: line[26..27].chars().next().unwrap_or(' '),
        pos: Vec3::new(x, y, z),
        occupancy,
        altloc,
    }))
}

/// Parses fixed-column ATOM records. Malformed lines are skipped with a
/// warning; alternate locations other than blank or 'A' are dropped. Parsing
/// stops at the first ENDMDL.
pub fn parse_pdb(text: &str) -> PdbParse {
    let mut out = PdbParse::default();
    for (lineno, line) in text.lines().enumerate() {
        if line.starts_with("ENDMDL") {
            break;
        }
        if !line.starts_with("ATOM  ") {
            continue;
        }
        if !line.is_char_boundary(16) || !line.is_char_boundary(17) || !line.is_char_boundary(27) {
            let msg = format!("line {}: non-ASCII fixed columns", lineno + 1);
            warn!("{msg}");
            out.warnings.push(msg);
            continue;
        }
        match parse_atom_line(line) {
            Ok(Some(a)) => out.atoms.push(a),
            Ok(None) => {}
            Err(e) => {
                let msg = format!("line {}: {e}", lineno + 1);
                warn!("{msg}");
                out.warnings.push(msg);
            }
        }
    }
    out
}

/// Renders atoms as ATOM records (no HETATM, no CONECT).
pub fn atoms_to_pdb(atoms: &[AtomRecord]) -> String {
    let mut s = String::new();
    for (i, a) in atoms.iter().enumerate() {
        // four-character names start in column 13, shorter ones in column 14
        let name = if a.name.len() >= 4 {
            a.name.clone()
        } else {
            format!(" {:<3}", a.name)
        };
        let element = a.name.chars().next().unwrap_or(' ');
        let _ = writeln!(
            s,
            "ATOM  {:>5} {:<4}{}{:>3} {:1}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
            (i + 1) % 100_000,
            name,
            a.altloc,
            a.res_name,
            a.chain,
            a.res_seq,
            a.icode,
            a.pos.x,
            a.pos.y,
            a.pos.z,
            a.occupancy,
            0.0,
            element
        );
    }
    s.push_str("END\n");
    s
}
