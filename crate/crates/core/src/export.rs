//! Field export on the P1 vertex set: legacy VTK and CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dofmap::DofMap;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::FieldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Vtk,
    Csv,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Vtk => "vtk",
            ExportFormat::Csv => "csv",
        }
    }
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vtk" => Ok(ExportFormat::Vtk),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(Error::config("export", format!("unknown format `{other}` (expected vtk or csv)"))),
        }
    }
}

// `-0` would make an all-zero field print differently from `0`
fn num(v: f64) -> f64 {
    v + 0.0
}

fn check(dofmap: &DofMap, mesh: &Mesh, state: &FieldState) -> Result<()> {
    let nv = mesh.vertices.len();
    if dofmap.n_vertices != nv || state.u.len() != dofmap.n_u() || [&state.xi, &state.eta, &state.p].iter().any(|f| f.len() != nv) {
        return Err(Error::Dimension(format!("field state does not match a mesh with {nv} vertices")));
    }
    Ok(())
}

/// ASCII legacy-VTK unstructured grid. P2 displacement is sampled at the
/// vertices, where it equals its nodal coefficients.
pub fn vtk_string(mesh: &Mesh, dofmap: &DofMap, state: &FieldState) -> Result<String> {
    check(dofmap, mesh, state)?;
    let (u1, u2) = (state.u_component(dofmap, 0), state.u_component(dofmap, 1));
    let nv = mesh.vertices.len();
    let nt = mesh.triangles.len();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "poroelastic fields at t = {}", state.t);
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {nv} double");
    for [x, y] in &mesh.vertices {
        let _ = writeln!(out, "{} {} 0", num(*x), num(*y));
    }
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "5");
    }
    let _ = writeln!(out, "POINT_DATA {nv}");
    let _ = writeln!(out, "VECTORS u double");
    for v in 0..nv {
        let _ = writeln!(out, "{} {} 0", num(u1[v]), num(u2[v]));
    }
    for (name, field) in [("p", &state.p), ("xi", &state.xi), ("eta", &state.eta)] {
        let _ = writeln!(out, "SCALARS {name} double 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for v in field {
            let _ = writeln!(out, "{}", num(*v));
        }
    }
    Ok(out)
}

/// `x,y,u1,u2,p` per vertex.
pub fn csv_string(mesh: &Mesh, dofmap: &DofMap, state: &FieldState) -> Result<String> {
    check(dofmap, mesh, state)?;
    let (u1, u2) = (state.u_component(dofmap, 0), state.u_component(dofmap, 1));
    let mut out = String::from("x,y,u1,u2,p\n");
    for (v, [x, y]) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", num(*x), num(*y), num(u1[v]), num(u2[v]), num(state.p[v]));
    }
    Ok(out)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.<ext>` into `dir` for each format and returns the paths.
pub fn export_fields(
    dir: &Path,
    stem: &str,
    formats: &[ExportFormat],
    mesh: &Mesh,
    dofmap: &DofMap,
    state: &FieldState,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for &format in formats {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        let text = match format {
            ExportFormat::Vtk => vtk_string(mesh, dofmap, state)?,
            ExportFormat::Csv => csv_string(mesh, dofmap, state)?,
        };
        write_file(&path, &text)?;
        written.push(path);
    }
    Ok(written)
}
