//! Minimal legacy-VTK reader shared by the integration tests. It handles
//! exactly the subset the solver writes: ASCII unstructured grids with one
//! cell vector field and one cell scalar field.

#![allow(dead_code)]

pub struct Vtk {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u32>,
    pub velocity: Vec<[f64; 3]>,
    pub pressure: Vec<f64>,
}

impl Vtk {
    pub fn cell_centroid(&self, t: usize) -> [f64; 2] {
        let vs = &self.cells[t];
        let mut c = [0.0, 0.0];
        for &v in vs {
            c[0] += self.points[v][0];
            c[1] += self.points[v][1];
        }
        [c[0] / vs.len() as f64, c[1] / vs.len() as f64]
    }

    pub fn cell_area(&self, t: usize) -> f64 {
        let [a, b, c] = [
            self.points[self.cells[t][0]],
            self.points[self.cells[t][1]],
            self.points[self.cells[t][2]],
        ];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }
}

/// Parse the writer's dialect, validating the structural invariants as we
/// go. Panics with a description on any malformation (tests want the noise).
pub fn parse_vtk(text: &str) -> Vtk {
    let mut lines = text.lines();
    let mut next = |what: &str| -> &str {
        lines.next().unwrap_or_else(|| panic!("truncated before {what}"))
    };

    assert_eq!(next("header"), "# vtk DataFile Version 2.0", "version line");
    let title = next("title").to_string();
    assert_eq!(next("format"), "ASCII", "format line");
    assert_eq!(next("dataset"), "DATASET UNSTRUCTURED_GRID", "dataset line");

    let points_head = next("POINTS");
    let np: usize = field(points_head, 1, "POINTS count");
    assert!(points_head.starts_with("POINTS ") && points_head.ends_with(" double"));
    let mut points = Vec::with_capacity(np);
    for i in 0..np {
        let nums = floats(next("point"), 3, &format!("point {i}"));
        points.push([nums[0], nums[1], nums[2]]);
    }

    let cells_head = next("CELLS");
    let nc: usize = field(cells_head, 1, "CELLS count");
    let total: usize = field(cells_head, 2, "CELLS total");
    let mut cells = Vec::with_capacity(nc);
    let mut counted = 0;
    for i in 0..nc {
        let nums: Vec<usize> = next("cell")
            .split_whitespace()
            .map(|s| s.parse().unwrap_or_else(|_| panic!("cell {i}: bad index")))
            .collect();
        assert_eq!(nums[0] + 1, nums.len(), "cell {i}: length prefix");
        counted += nums.len();
        let verts: Vec<usize> = nums[1..].to_vec();
        for &v in &verts {
            assert!(v < np, "cell {i}: vertex {v} out of range");
        }
        cells.push(verts);
    }
    assert_eq!(counted, total, "CELLS total count");

    let types_head = next("CELL_TYPES");
    let nt: usize = field(types_head, 1, "CELL_TYPES count");
    assert_eq!(nt, nc, "CELL_TYPES count matches CELLS");
    let cell_types: Vec<u32> = (0..nt)
        .map(|i| field(next("cell type"), 0, &format!("cell type {i}")) as u32)
        .collect();

    let data_head = next("CELL_DATA");
    let nd: usize = field(data_head, 1, "CELL_DATA count");
    assert_eq!(nd, nc, "CELL_DATA count matches CELLS");

    assert_eq!(next("VECTORS"), "VECTORS velocity double", "vector header");
    let mut velocity = Vec::with_capacity(nc);
    for i in 0..nc {
        let nums = floats(next("velocity"), 3, &format!("velocity {i}"));
        velocity.push([nums[0], nums[1], nums[2]]);
    }

    assert_eq!(next("SCALARS"), "SCALARS pressure double 1", "scalar header");
    assert_eq!(next("LOOKUP_TABLE"), "LOOKUP_TABLE default", "lookup table");
    let pressure: Vec<f64> = (0..nc)
        .map(|i| floats(next("pressure"), 1, &format!("pressure {i}"))[0])
        .collect();

    assert!(lines.all(|l| l.trim().is_empty()), "trailing content");
    Vtk { title, points, cells, cell_types, velocity, pressure }
}

fn field(line: &str, idx: usize, what: &str) -> usize {
    line.split_whitespace()
        .nth(idx)
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("{what}: bad line {line:?}"))
}

fn floats(line: &str, n: usize, what: &str) -> Vec<f64> {
    let nums: Vec<f64> = line
        .split_whitespace()
        .map(|s| s.parse().unwrap_or_else(|_| panic!("{what}: bad number {s:?}")))
        .collect();
    assert_eq!(nums.len(), n, "{what}: expected {n} numbers in {line:?}");
    nums
}
