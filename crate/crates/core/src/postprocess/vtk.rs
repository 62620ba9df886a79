use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fespaces::{CVec3, FEField};
use crate::mesh::{Mesh, Vec3};

/// One complex vector per cell of the exported mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkField {
    pub name: String,
    pub values: Vec<CVec3>,
}

/// Field values at the cell centroids of `mesh`. A field on a submesh is
/// extended by zero through `parent_cell`.
pub fn cell_values(field: &FEField, mesh: &Mesh, parent_cell: Option<&[usize]>) -> Result<Vec<CVec3>> {
    let centroid = [Vec3::new(0.25, 0.25, 0.25)];
    let own = field.space().mesh();
    let mut out = vec![CVec3::zeros(); mesh.n_cells()];
    match parent_cell {
        None => {
            if own.n_cells() != mesh.n_cells() {
                return Err(invalid("field does not live on the exported mesh"));
            }
            for (c, v) in out.iter_mut().enumerate() {
                *v = field.eval(c, &centroid)?.values[0];
            }
        }
        Some(parents) => {
            if parents.len() != own.n_cells() || parents.iter().any(|&p| p >= mesh.n_cells()) {
                return Err(invalid("parent cell map does not match the field's mesh"));
            }
            for (sc, &pc) in parents.iter().enumerate() {
                out[pc] = field.eval(sc, &centroid)?.values[0];
            }
        }
    }
    Ok(out)
}

/// Legacy ASCII unstructured grid with per-cell arrays `<name>_real`,
/// `<name>_imag` (vectors) and `<name>_abs` (scalar magnitude).
pub fn write_vtk(mut w: impl Write, mesh: &Mesh, fields: &[VtkField]) -> Result<()> {
    let nc = mesh.n_cells();
    if let Some(f) = fields.iter().find(|f| f.values.len() != nc) {
        return Err(invalid(format!("field {} has {} values for {nc} cells", f.name, f.values.len())));
    }
    if let Some(f) = fields.iter().find(|f| f.name.is_empty() || f.name.contains(char::is_whitespace)) {
        return Err(invalid(format!("invalid VTK array name {:?}", f.name)));
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "nhdfem output")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
    }
    writeln!(w, "CELLS {nc} {}", 5 * nc)?;
    for c in mesh.cells() {
        writeln!(w, "4 {} {} {} {}", c[0], c[1], c[2], c[3])?;
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    for _ in 0..nc {
        writeln!(w, "10")?;
    }
    if !fields.is_empty() {
        writeln!(w, "CELL_DATA {nc}")?;
        for f in fields {
            for (suffix, part) in [("real", 0), ("imag", 1)] {
                writeln!(w, "VECTORS {}_{suffix} double", f.name)?;
                let pick = |z: Complex64| if part == 0 { z.re } else { z.im };
                for v in &f.values {
                    writeln!(w, "{:.17e} {:.17e} {:.17e}", pick(v.x), pick(v.y), pick(v.z))?;
                }
            }
            writeln!(w, "SCALARS {}_abs double 1", f.name)?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in &f.values {
                writeln!(w, "{:.17e}", v.norm())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_vtk(path: &Path, mesh: &Mesh, fields: &[VtkField]) -> Result<()> {
    let file = File::create(path)?;
    write_vtk(BufWriter::new(file), mesh, fields)
}
