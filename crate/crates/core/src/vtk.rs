//! Legacy ASCII VTK POLYDATA writer for triangle meshes with vertex fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::TriangleMesh;
use crate::recovery::SurfaceField;
use crate::{Error, Result};

pub fn polydata_string(
    mesh: &TriangleMesh,
    fields: &[&SurfaceField],
    title: &str,
) -> Result<String> {
    for f in fields {
        if f.values.len() != mesh.vertex_count() {
            return Err(Error::Field(format!(
                "field '{}' has {} values for {} vertices",
                f.name,
                f.values.len(),
                mesh.vertex_count()
            )));
        }
    }
    let mut s = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(
        s,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET POLYDATA"
    );
    let _ = writeln!(s, "POINTS {} double", mesh.vertex_count());
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    let nt = mesh.triangle_count();
    let _ = writeln!(s, "POLYGONS {} {}", nt, 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.vertex_count());
        for f in fields {
            let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
            for v in &f.values {
                let _ = writeln!(s, "{v}");
            }
        }
    }
    Ok(s)
}

pub fn write_polydata(
    path: impl AsRef<Path>,
    mesh: &TriangleMesh,
    fields: &[&SurfaceField],
    title: &str,
) -> Result<()> {
    let path = path.as_ref();
    let text = polydata_string(mesh, fields, title)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
