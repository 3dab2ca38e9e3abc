//! Legacy ASCII VTK (DataFile version 2.0) export of cell-centered
//! velocity/pressure fields on a triangle mesh, for external viewers.

use std::io::{self, Write};

use crate::mesh::Mesh;

/// Write an UNSTRUCTURED_GRID file: mesh points (z = 0), triangle cells
/// (VTK type 5), and per-cell VECTORS `velocity` / SCALARS `pressure`.
pub fn write_vtk(
    out: &mut dyn Write,
    title: &str,
    mesh: &Mesh,
    velocity: &[[f64; 2]],
    pressure: &[f64],
) -> io::Result<()> {
    assert_eq!(velocity.len(), mesh.n_triangles(), "one velocity per cell");
    assert_eq!(pressure.len(), mesh.n_triangles(), "one pressure per cell");
    writeln!(out, "# vtk DataFile Version 2.0")?;
    // The title line must be a single line; keep it short and plain.
    writeln!(out, "{}", title.lines().next().unwrap_or("fields"))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;

    writeln!(out, "POINTS {} double", mesh.n_vertices())?;
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        // 17 significant digits round-trip f64 exactly, so integral
        // quantities recomputed from the file (e.g. the pressure mean)
        // match the in-memory fields.
        writeln!(out, "{:.16e} {:.16e} 0.0", p[0], p[1])?;
    }

    let nt = mesh.n_triangles();
    writeln!(out, "CELLS {} {}", nt, 4 * nt)?;
    for t in 0..nt {
        let tri = mesh.triangle(t);
        writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }

    writeln!(out, "CELL_DATA {nt}")?;
    writeln!(out, "VECTORS velocity double")?;
    for v in velocity {
        writeln!(out, "{:.16e} {:.16e} 0.0", v[0], v[1])?;
    }
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for p in pressure {
        writeln!(out, "{:.16e}", p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Diagonal;

    fn emit(mesh: &Mesh, velocity: &[[f64; 2]], pressure: &[f64]) -> String {
        let mut buf = Vec::new();
        write_vtk(&mut buf, "test fields", mesh, velocity, pressure).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_and_section_counts() {
        let mesh = Mesh::unit_square(2, Diagonal::NorthEast).unwrap();
        let nt = mesh.n_triangles();
        let text = emit(&mesh, &vec![[1.0, 2.0]; nt], &vec![0.5; nt]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 2.0");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        assert_eq!(lines[4], format!("POINTS {} double", mesh.n_vertices()));
        assert!(text.contains(&format!("CELLS {} {}", nt, 4 * nt)));
        assert!(text.contains(&format!("CELL_TYPES {nt}")));
        assert!(text.contains(&format!("CELL_DATA {nt}")));
        assert!(text.contains("VECTORS velocity double"));
        assert!(text.contains("SCALARS pressure double 1"));
        // every point line carries z = 0
        let start = 5;
        for line in &lines[start..start + mesh.n_vertices()] {
            assert!(line.ends_with(" 0.0"));
        }
    }

    #[test]
    fn zero_fields_emit_zeros() {
        let mesh = Mesh::unit_square(2, Diagonal::NorthEast).unwrap();
        let nt = mesh.n_triangles();
        let text = emit(&mesh, &vec![[0.0, 0.0]; nt], &vec![0.0; nt]);
        let after = text.split("VECTORS velocity double\n").nth(1).unwrap();
        for line in after.lines().take(nt) {
            for token in line.split_whitespace() {
                assert_eq!(token.parse::<f64>().unwrap(), 0.0);
            }
        }
        let after = text.split("LOOKUP_TABLE default\n").nth(1).unwrap();
        for line in after.lines().take(nt) {
            assert_eq!(line.parse::<f64>().unwrap(), 0.0);
        }
    }

    #[test]
    fn cell_connectivity_is_in_range() {
        let mesh = Mesh::unit_square(3, Diagonal::NorthWest).unwrap();
        let nt = mesh.n_triangles();
        let text = emit(&mesh, &vec![[0.0, 0.0]; nt], &vec![0.0; nt]);
        let cells = text
            .split(&format!("CELLS {} {}", nt, 4 * nt))
            .nth(1)
            .unwrap()
            .lines()
            .skip(1)
            .take(nt);
        for line in cells {
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            assert_eq!(ids[0], 3);
            assert!(ids[1..].iter().all(|&v| v < mesh.n_vertices()));
        }
    }
}
