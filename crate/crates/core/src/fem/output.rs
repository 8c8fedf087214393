//! VTK legacy and CSV writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{Problem, SolutionState};
use crate::geometry::ElementClass;
use crate::Error;

/// Classification code written to VTK: 1 and 2 for pure phases, 3 for cut elements.
pub fn class_code(class: &ElementClass) -> u8 {
    match class {
        ElementClass::Phase1 => 1,
        ElementClass::Phase2 => 2,
        ElementClass::Cut { .. } => 3,
    }
}

/// Legacy ASCII unstructured grid with nodal displacement and per-element
/// classification, phase-2 fraction, von Mises stress and plastic strain.
pub fn vtk_string(problem: &Problem, state: &SolutionState) -> String {
    let mesh = &problem.mesh;
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "lamfem {} load {}", problem.method, state.load);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for x in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", x[0], x[1]);
    }
    let ne = mesh.n_elements();
    let _ = writeln!(s, "CELLS {} {}", ne, 5 * ne);
    for el in &mesh.elements {
        let _ = writeln!(s, "4 {} {} {} {}", el[0], el[1], el[2], el[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        let _ = writeln!(s, "9");
    }
    let _ = writeln!(s, "POINT_DATA {}", mesh.n_nodes());
    let _ = writeln!(s, "VECTORS displacement double");
    for n in 0..mesh.n_nodes() {
        let _ = writeln!(s, "{} {} 0", state.u[2 * n], state.u[2 * n + 1]);
    }
    let _ = writeln!(s, "CELL_DATA {ne}");
    let _ = writeln!(s, "SCALARS classification int 1\nLOOKUP_TABLE default");
    for c in &problem.classes {
        let _ = writeln!(s, "{}", class_code(c));
    }
    let _ = writeln!(s, "SCALARS eta double 1\nLOOKUP_TABLE default");
    for c in &problem.classes {
        let eta = match c {
            ElementClass::Phase1 => 0.0,
            ElementClass::Phase2 => 1.0,
            ElementClass::Cut { eta, .. } => *eta,
        };
        let _ = writeln!(s, "{eta}");
    }
    let _ = writeln!(s, "SCALARS von_mises double 1\nLOOKUP_TABLE default");
    for f in &state.fields {
        let _ = writeln!(s, "{}", f.von_mises);
    }
    let _ = writeln!(s, "SCALARS plastic_strain double 1\nLOOKUP_TABLE default");
    for f in &state.fields {
        let _ = writeln!(s, "{}", f.gamma);
    }
    s
}

pub fn write_vtk(path: &Path, problem: &Problem, state: &SolutionState) -> Result<(), Error> {
    std::fs::write(path, vtk_string(problem, state))?;
    Ok(())
}

/// Writes a header line and comma-separated rows. Values use Rust's shortest
/// round-trip formatting, so equal numbers give identical bytes.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), Error> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}
