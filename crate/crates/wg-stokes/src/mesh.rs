//! Conforming triangular meshes: construction, refinement, Triangle-format
//! import/export, and the per-triangle geometry used by the element kernels.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vec2::{cross2, dist, rot_cw, scale, sub, Vec2};

/// Relative area threshold below which a triangle counts as degenerate.
const DEGENERATE_REL_AREA: f64 = 1e-14;

/// Which way the diagonal of each structured grid cell runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonal {
    /// Diagonal from the lower-left to the upper-right cell corner.
    NorthEast,
    /// Diagonal from the lower-right to the upper-left cell corner.
    NorthWest,
}

/// An undirected mesh edge. `vertices` is stored with the lower vertex id
/// first; the global unit tangent points from `vertices[0]` to
/// `vertices[1]` and the global unit normal is the tangent rotated by -90
/// degrees.
#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    /// Adjacent triangles; boundary edges have exactly one.
    pub tri: [usize; 2],
    pub n_tri: usize,
    /// Index of this edge within its class (interior or boundary).
    pub compact: usize,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.n_tri == 1
    }
}

/// Per-triangle link to one of its edges. `sign` is +1 when the global
/// edge normal coincides with this triangle's outward normal, -1 otherwise.
#[derive(Debug, Clone, Copy)]
pub struct TriEdge {
    pub edge: usize,
    pub sign: f64,
}

/// A conforming triangulation of a polygonal domain.
///
/// Triangles are stored counterclockwise. Local edge `i` of a triangle is
/// the edge opposite local vertex `i`.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    tri_edges: Vec<[TriEdge; 3]>,
    boundary_vertex: Vec<bool>,
    n_interior_edges: usize,
    n_boundary_edges: usize,
}

impl Mesh {
    /// Build a mesh from raw vertex and (1-based-agnostic, already 0-based)
    /// triangle data, deriving edges and incidence. Triangles with negative
    /// signed area are reoriented; degenerate ones are rejected.
    pub fn from_raw(vertices: Vec<Vec2>, mut triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidMesh("empty vertex or triangle list".into()));
        }
        for p in &vertices {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
            }
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let bbox_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let area_tol = DEGENERATE_REL_AREA * bbox_area.max(f64::MIN_POSITIVE);

        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v}, but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let two_area = cross2(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if two_area < 0.0 {
                tri.swap(1, 2);
            }
            if two_area.abs() * 0.5 <= area_tol {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is degenerate (area {:.3e})",
                    two_area.abs() * 0.5
                )));
            }
        }

        // Discover edges in deterministic triangle-sweep order.
        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[TriEdge { edge: 0, sign: 0.0 }; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = [a.min(b), a.max(b)];
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: key,
                        tri: [usize::MAX; 2],
                        n_tri: 0,
                        compact: usize::MAX,
                    });
                    edges.len() - 1
                });
                let e = &mut edges[id];
                if e.n_tri == 2 {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        key[0], key[1]
                    )));
                }
                e.tri[e.n_tri] = t;
                e.n_tri += 1;
                // Outward normal of a ccw triangle edge is the ccw edge
                // direction rotated by -90 degrees; compare with the global
                // normal convention (lower id -> higher id, rotated -90).
                let sign = if a < b { 1.0 } else { -1.0 };
                tri_edges[t][i] = TriEdge { edge: id, sign };
            }
        }

        let mut boundary_vertex = vec![false; vertices.len()];
        let mut n_interior = 0;
        let mut n_boundary = 0;
        for e in &mut edges {
            if e.is_boundary() {
                e.compact = n_boundary;
                n_boundary += 1;
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            } else {
                e.compact = n_interior;
                n_interior += 1;
            }
        }

        let mut used = vec![false; vertices.len()];
        for tri in &triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any triangle")));
        }

        Ok(Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            boundary_vertex,
            n_interior_edges: n_interior,
            n_boundary_edges: n_boundary,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.n_interior_edges
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.n_boundary_edges
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.boundary_vertex.iter().filter(|&&b| !b).count()
    }

    pub fn vertex(&self, v: usize) -> Vec2 {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tri_edges(&self, t: usize) -> &[TriEdge; 3] {
        &self.tri_edges[t]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Unit tangent of the global edge orientation (lower id -> higher id).
    pub fn edge_tangent(&self, e: usize) -> Vec2 {
        let [a, b] = self.edges[e].vertices;
        let d = sub(self.vertices[b], self.vertices[a]);
        scale(1.0 / dist(self.vertices[a], self.vertices[b]), d)
    }

    /// Global unit normal: tangent rotated by -90 degrees.
    pub fn edge_normal(&self, e: usize) -> Vec2 {
        rot_cw(self.edge_tangent(e))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_midpoint(&self, e: usize) -> Vec2 {
        let [a, b] = self.edges[e].vertices;
        scale(0.5, crate::vec2::add(self.vertices[a], self.vertices[b]))
    }

    /// Euler defect `E + 1 - V - T`; zero exactly when the triangulated
    /// domain is simply connected, and equal to the number of holes for a
    /// connected domain with holes.
    pub fn euler_defect(&self) -> i64 {
        self.n_edges() as i64 + 1 - self.n_vertices() as i64 - self.n_triangles() as i64
    }

    pub fn is_simply_connected(&self) -> bool {
        self.euler_defect() == 0
    }

    /// Geometry bundle for triangle `t`. Local edge `i` (opposite vertex
    /// `i`) matches `tri_edges(t)[i]`.
    pub fn tri_geometry(&self, t: usize) -> TriGeometry {
        let [a, b, c] = self.triangles[t];
        TriGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.tri_geometry(t).diameter())
            .fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.tri_geometry(t).diameter())
            .fold(f64::INFINITY, f64::min)
    }

    /// One sweep of uniform red refinement: every triangle is split into
    /// four congruent children through its edge midpoints.
    pub fn refine_uniform(&self) -> Mesh {
        let nv = self.n_vertices();
        let mut vertices = self.vertices.clone();
        vertices.extend((0..self.n_edges()).map(|e| self.edge_midpoint(e)));

        let mid = |t: usize, i: usize| nv + self.tri_edges[t][i].edge;
        let mut triangles = Vec::with_capacity(4 * self.n_triangles());
        for t in 0..self.n_triangles() {
            let [v0, v1, v2] = self.triangles[t];
            let (m0, m1, m2) = (mid(t, 0), mid(t, 1), mid(t, 2)); // m_i opposite v_i
            triangles.push([v0, m2, m1]);
            triangles.push([m2, v1, m0]);
            triangles.push([m1, m0, v2]);
            triangles.push([m0, m1, m2]);
        }
        Mesh::from_raw(vertices, triangles).expect("refinement preserves validity")
    }

    /// Structured mesh of an axis-aligned rectangle with `nx` by `ny` cells,
    /// each split along the requested diagonal. `keep` filters cells by
    /// their center, which is how the L-shaped step domain is produced.
    pub fn rectangle_masked(
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nx: usize,
        ny: usize,
        diagonal: Diagonal,
        keep: impl Fn(Vec2) -> bool,
    ) -> Result<Mesh> {
        if nx == 0 || ny == 0 || !(x1 > x0) || !(y1 > y0) {
            return Err(Error::InvalidArgument("rectangle mesh needs positive extent and cell counts".into()));
        }
        let gx = |i: usize| x0 + (x1 - x0) * i as f64 / nx as f64;
        let gy = |j: usize| y0 + (y1 - y0) * j as f64 / ny as f64;

        let mut vid = vec![usize::MAX; (nx + 1) * (ny + 1)];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let grid = |i: usize, j: usize| j * (nx + 1) + i;

        for j in 0..ny {
            for i in 0..nx {
                let center = [0.5 * (gx(i) + gx(i + 1)), 0.5 * (gy(j) + gy(j + 1))];
                if !keep(center) {
                    continue;
                }
                let corners = [grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1)];
                let mut ids = [0usize; 4];
                for (k, &g) in corners.iter().enumerate() {
                    if vid[g] == usize::MAX {
                        vid[g] = vertices.len();
                        let (ii, jj) = (g % (nx + 1), g / (nx + 1));
                        vertices.push([gx(ii), gy(jj)]);
                    }
                    ids[k] = vid[g];
                }
                let [sw, se, ne, nw] = ids;
                match diagonal {
                    Diagonal::NorthEast => {
                        triangles.push([sw, se, ne]);
                        triangles.push([sw, ne, nw]);
                    }
                    Diagonal::NorthWest => {
                        triangles.push([sw, se, nw]);
                        triangles.push([se, ne, nw]);
                    }
                }
            }
        }
        Mesh::from_raw(vertices, triangles)
    }

    /// Structured mesh of a rectangle.
    pub fn rectangle(
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nx: usize,
        ny: usize,
        diagonal: Diagonal,
    ) -> Result<Mesh> {
        Mesh::rectangle_masked(x0, x1, y0, y1, nx, ny, diagonal, |_| true)
    }

    /// Uniform mesh of the unit square with `n` cells per side.
    pub fn unit_square(n: usize, diagonal: Diagonal) -> Result<Mesh> {
        Mesh::rectangle(0.0, 1.0, 0.0, 1.0, n, n, diagonal)
    }

    /// Parse a Triangle-format `.node` / `.ele` pair (1-based vertex ids).
    pub fn import_triangle(node_text: &str, ele_text: &str) -> Result<Mesh> {
        let node_rows = data_rows(node_text);
        let (header, vertex_rows) = node_rows
            .split_first()
            .ok_or_else(|| Error::MeshImport("empty .node file".into()))?;
        let n_vertices: usize = parse_field(&header[..], 0, ".node header vertex count")?;
        let dim: usize = parse_field(&header[..], 1, ".node header dimension")?;
        if dim != 2 {
            return Err(Error::MeshImport(format!(".node dimension must be 2, found {dim}")));
        }
        if vertex_rows.len() != n_vertices {
            return Err(Error::MeshImport(format!(
                ".node header promises {n_vertices} vertices but {} rows follow",
                vertex_rows.len()
            )));
        }

        let mut id_map: HashMap<usize, usize> = HashMap::new();
        let mut vertices = Vec::with_capacity(n_vertices);
        for row in vertex_rows {
            let id: usize = parse_field(row, 0, ".node vertex id")?;
            if id == 0 {
                return Err(Error::MeshImport("vertex id 0 in 1-based .node file".into()));
            }
            let x: f64 = parse_field(row, 1, ".node x coordinate")?;
            let y: f64 = parse_field(row, 2, ".node y coordinate")?;
            if id_map.insert(id, vertices.len()).is_some() {
                return Err(Error::MeshImport(format!("duplicate vertex id {id}")));
            }
            vertices.push([x, y]);
        }

        let ele_rows = data_rows(ele_text);
        let (header, tri_rows) = ele_rows
            .split_first()
            .ok_or_else(|| Error::MeshImport("empty .ele file".into()))?;
        let n_triangles: usize = parse_field(&header[..], 0, ".ele header triangle count")?;
        let nodes_per: usize = parse_field(&header[..], 1, ".ele header nodes per triangle")?;
        if nodes_per != 3 {
            return Err(Error::MeshImport(format!(
                "only linear triangles are supported, .ele declares {nodes_per} nodes per element"
            )));
        }
        if tri_rows.len() != n_triangles {
            return Err(Error::MeshImport(format!(
                ".ele header promises {n_triangles} triangles but {} rows follow",
                tri_rows.len()
            )));
        }

        let mut triangles = Vec::with_capacity(n_triangles);
        for row in tri_rows {
            let mut tri = [0usize; 3];
            for k in 0..3 {
                let id: usize = parse_field(row, k + 1, ".ele vertex reference")?;
                tri[k] = *id_map.get(&id).ok_or_else(|| {
                    Error::MeshImport(format!("triangle references unknown vertex id {id}"))
                })?;
            }
            triangles.push(tri);
        }

        Mesh::from_raw(vertices, triangles)
    }

    /// Serialize to Triangle-format `.node` text (1-based ids, boundary
    /// markers in the last column).
    pub fn export_node(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} 2 0 1", self.n_vertices());
        for (i, p) in self.vertices.iter().enumerate() {
            let marker = i32::from(self.boundary_vertex[i]);
            let _ = writeln!(out, "{} {:.17e} {:.17e} {}", i + 1, p[0], p[1], marker);
        }
        out
    }

    /// Serialize to Triangle-format `.ele` text (1-based ids).
    pub fn export_ele(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} 3 0", self.n_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{} {} {} {}", t + 1, tri[0] + 1, tri[1] + 1, tri[2] + 1);
        }
        out
    }

    /// Mesh statistics as a JSON object (counts, Euler defect, element sizes).
    pub fn stats_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.n_vertices(),
            "triangles": self.n_triangles(),
            "edges": self.n_edges(),
            "interior_edges": self.n_interior_edges(),
            "boundary_edges": self.n_boundary_edges(),
            "interior_vertices": self.n_interior_vertices(),
            "euler_defect": self.euler_defect(),
            "h_min": self.h_min(),
            "h_max": self.h_max(),
        })
    }
}

/// Split a Triangle-format file into whitespace-token rows, dropping blank
/// lines and `#` comments.
fn data_rows(text: &str) -> Vec<Vec<&str>> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .filter(|line| !line.trim().is_empty())
        .map(|line| line.split_whitespace().collect())
        .collect()
}

fn parse_field<T: std::str::FromStr>(row: &[&str], idx: usize, what: &str) -> Result<T> {
    row.get(idx)
        .ok_or_else(|| Error::MeshImport(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::MeshImport(format!("malformed {what}: {:?}", row.get(idx).unwrap())))
}

/// Geometry of a single counterclockwise triangle, precomputed for the
/// element kernels. Local edge `i` is opposite vertex `i`.
#[derive(Debug, Clone)]
pub struct TriGeometry {
    pub vertices: [Vec2; 3],
    pub area: f64,
    pub centroid: Vec2,
    /// Edge lengths, local ordering.
    pub lengths: [f64; 3],
    /// Outward unit normals, local ordering.
    pub normals: [Vec2; 3],
    /// Stabilization-free scaling constant of the lowest-order weak
    /// gradient: `C_T = 2|T| / int_T |x - x_T|^2 = 72 / (a^2 + b^2 + c^2)`.
    pub c_t: f64,
}

impl TriGeometry {
    pub fn new(vertices: [Vec2; 3]) -> TriGeometry {
        let [a, b, c] = vertices;
        let area = 0.5 * cross2(a, b, c);
        assert!(area > 0.0, "triangle must be counterclockwise and non-degenerate");
        let centroid = [
            (a[0] + b[0] + c[0]) / 3.0,
            (a[1] + b[1] + c[1]) / 3.0,
        ];
        let mut lengths = [0.0; 3];
        let mut normals = [[0.0; 2]; 3];
        let mut sum_sq = 0.0;
        for i in 0..3 {
            let p = vertices[(i + 1) % 3];
            let q = vertices[(i + 2) % 3];
            let len = dist(p, q);
            lengths[i] = len;
            sum_sq += len * len;
            // Edge traversed ccw is p -> q; outward normal is that
            // direction rotated by -90 degrees.
            normals[i] = scale(1.0 / len, rot_cw(sub(q, p)));
        }
        TriGeometry {
            vertices,
            area,
            centroid,
            lengths,
            normals,
            c_t: 72.0 / sum_sq,
        }
    }

    pub fn diameter(&self) -> f64 {
        self.lengths.iter().cloned().fold(0.0, f64::max)
    }

    /// Endpoints of local edge `e` (the edge opposite vertex `e`), in ccw
    /// traversal order.
    pub fn vertices_of_edge(&self, e: usize) -> [Vec2; 2] {
        [self.vertices[(e + 1) % 3], self.vertices[(e + 2) % 3]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_quadrature;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_right_triangle_geometry() {
        let g = TriGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_relative_eq!(g.area, 0.5);
        assert_relative_eq!(g.centroid[0], 1.0 / 3.0);
        assert_relative_eq!(g.centroid[1], 1.0 / 3.0);
        // Edge 0 is the hypotenuse, outward normal (1,1)/sqrt(2).
        assert_relative_eq!(g.lengths[0], 2.0_f64.sqrt());
        let s = 1.0 / 2.0_f64.sqrt();
        assert_relative_eq!(g.normals[0][0], s);
        assert_relative_eq!(g.normals[0][1], s);
        assert_relative_eq!(g.normals[1][0], -1.0);
        assert_relative_eq!(g.normals[1][1], 0.0);
        assert_relative_eq!(g.normals[2][0], 0.0);
        assert_relative_eq!(g.normals[2][1], -1.0);
        // a^2 + b^2 + c^2 = 2 + 1 + 1 = 4, so C_T = 18.
        assert_relative_eq!(g.c_t, 18.0);
    }

    #[test]
    fn unit_square_counts() {
        let mesh = Mesh::unit_square(4, Diagonal::NorthEast).unwrap();
        assert_eq!(mesh.n_vertices(), 25);
        assert_eq!(mesh.n_triangles(), 32);
        assert_eq!(mesh.n_edges(), 56);
        assert_eq!(mesh.n_boundary_edges(), 16);
        assert_eq!(mesh.n_interior_edges(), 40);
        assert_eq!(mesh.euler_defect(), 0);
        assert_relative_eq!(mesh.h_max(), 2.0_f64.sqrt() / 4.0, max_relative = 1e-15);
        let total: f64 = (0..mesh.n_triangles()).map(|t| mesh.tri_geometry(t).area).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn refinement_quadruples_triangles() {
        let mesh = Mesh::unit_square(2, Diagonal::NorthWest).unwrap();
        let fine = mesh.refine_uniform();
        assert_eq!(fine.n_triangles(), 4 * mesh.n_triangles());
        assert_eq!(fine.n_vertices(), mesh.n_vertices() + mesh.n_edges());
        assert_relative_eq!(fine.h_max(), 0.5 * mesh.h_max(), max_relative = 1e-15);
        assert!(fine.is_simply_connected());
        let total: f64 = (0..fine.n_triangles()).map(|t| fine.tri_geometry(t).area).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn edge_signs_consistent_with_outward_normals() {
        let mesh = Mesh::unit_square(3, Diagonal::NorthEast).unwrap().refine_uniform();
        for t in 0..mesh.n_triangles() {
            let g = mesh.tri_geometry(t);
            for (i, te) in mesh.tri_edges(t).iter().enumerate() {
                let global = mesh.edge_normal(te.edge);
                for k in 0..2 {
                    assert_relative_eq!(te.sign * global[k], g.normals[i][k], epsilon = 1e-14);
                }
            }
        }
        // Interior edges see opposite signs from their two triangles.
        for e in 0..mesh.n_edges() {
            let edge = mesh.edge(e);
            if edge.is_boundary() {
                continue;
            }
            let mut signs = Vec::new();
            for &t in &edge.tri[..2] {
                for te in mesh.tri_edges(t) {
                    if te.edge == e {
                        signs.push(te.sign);
                    }
                }
            }
            assert_eq!(signs.len(), 2);
            assert_eq!(signs[0] * signs[1], -1.0);
        }
    }

    #[test]
    fn import_export_round_trip() {
        let mesh = Mesh::unit_square(3, Diagonal::NorthWest).unwrap();
        let node = mesh.export_node();
        let ele = mesh.export_ele();
        let back = Mesh::import_triangle(&node, &ele).unwrap();
        assert_eq!(back.n_vertices(), mesh.n_vertices());
        assert_eq!(back.n_triangles(), mesh.n_triangles());
        assert_eq!(back.n_edges(), mesh.n_edges());
        for v in 0..mesh.n_vertices() {
            assert_eq!(back.vertex(v), mesh.vertex(v));
        }
        for t in 0..mesh.n_triangles() {
            assert_eq!(back.triangle(t), mesh.triangle(t));
        }
    }

    #[test]
    fn import_rejects_zero_vertex_id() {
        let node = "3 2 0 0\n0 0.0 0.0\n1 1.0 0.0\n2 0.0 1.0\n";
        let ele = "1 3 0\n1 0 1 2\n";
        let err = Mesh::import_triangle(node, ele).unwrap_err();
        assert!(err.to_string().contains("vertex id 0"));
    }

    #[test]
    fn import_rejects_degenerate_triangle() {
        let node = "4 2 0 0\n1 0 0\n2 1 0\n3 2 0\n4 0 1\n";
        let ele = "2 3 0\n1 1 2 3\n2 1 2 4\n"; // first triangle is collinear
        let err = Mesh::import_triangle(node, ele).unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn import_rejects_nonmanifold_edge() {
        let node = "5 2 0 0\n1 0 0\n2 1 0\n3 0 1\n4 0 -1\n5 2 1\n";
        // Three triangles all share edge (1,2).
        let ele = "3 3 0\n1 1 2 3\n2 1 2 4\n3 1 2 5\n";
        let err = Mesh::import_triangle(node, ele).unwrap_err();
        assert!(err.to_string().contains("more than two"));
    }

    #[test]
    fn import_reorients_clockwise_triangles() {
        let node = "3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n";
        let ele = "1 3 0\n1 1 3 2\n"; // clockwise
        let mesh = Mesh::import_triangle(node, ele).unwrap();
        let g = mesh.tri_geometry(0);
        assert!(g.area > 0.0);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let node = "# a comment\n3 2 0 0\n\n1 0 0 # trailing\n2 1 0\n3 0 1\n";
        let ele = "1 3 0\n1 1 2 3\n";
        assert!(Mesh::import_triangle(node, ele).is_ok());
    }

    #[test]
    fn step_domain_mask() {
        // (-2,8) x (-1,1) without [-2,0] x [-1,0]; n = cells per unit length.
        let n = 2;
        let mesh = Mesh::rectangle_masked(
            -2.0,
            8.0,
            -1.0,
            1.0,
            10 * n,
            2 * n,
            Diagonal::NorthEast,
            |c| !(c[0] < 0.0 && c[1] < 0.0),
        )
        .unwrap();
        let total: f64 = (0..mesh.n_triangles()).map(|t| mesh.tri_geometry(t).area).sum();
        assert_relative_eq!(total, 18.0, max_relative = 1e-12);
        assert_eq!(mesh.euler_defect(), 0);
    }

    proptest! {
        /// C_T closed form against its defining integral, random triangles.
        #[test]
        fn c_t_matches_second_moment(
            ax in -2.0..2.0f64, ay in -2.0..2.0f64,
            bx in -2.0..2.0f64, by in -2.0..2.0f64,
            cx in -2.0..2.0f64, cy in -2.0..2.0f64,
        ) {
            let two_area = cross2([ax, ay], [bx, by], [cx, cy]);
            prop_assume!(two_area.abs() > 1e-2);
            let verts = if two_area > 0.0 {
                [[ax, ay], [bx, by], [cx, cy]]
            } else {
                [[ax, ay], [cx, cy], [bx, by]]
            };
            let g = TriGeometry::new(verts);
            let (xc, yc) = (g.centroid[0], g.centroid[1]);
            let second = triangle_quadrature(&g, 2, |x, y| {
                (x - xc).powi(2) + (y - yc).powi(2)
            });
            prop_assert!((g.c_t - 2.0 * g.area / second).abs() <= 1e-10 * g.c_t.abs());
        }
    }
}
