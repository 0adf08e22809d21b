//! Structured simplicial meshes of intervals and axis-aligned rectangles.
//!
//! Boundary conditions are homogeneous Neumann throughout, so a mesh carries
//! no boundary markers. Element geometry (measure and barycentric gradients)
//! is computed once at construction; P1 gradients are element-wise constant.

use crate::error::{Error, Result};

/// Measure and constant barycentric-basis gradients of one element.
///
/// In 1D only the first two gradients are meaningful and their `y`
/// component is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry {
    pub measure: f64,
    pub grads: [[f64; 2]; 3],
}

/// Tensor-grid layout retained from the structured constructors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridShape {
    Interval { n: usize },
    Rect { nx: usize, ny: usize },
    Unstructured,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
    shape: GridShape,
}

fn grid_coord(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64) / (n as f64)
    }
}

/// Uniform partition of `[a, b]` into `n` intervals.
pub fn build_interval_mesh(a: f64, b: f64, n: usize) -> Result<Mesh> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::InvalidMesh(format!("interval [{a}, {b}] is empty")));
    }
    if n == 0 {
        return Err(Error::InvalidMesh("interval needs at least one element".into()));
    }
    let vertices = (0..=n).map(|i| [grid_coord(a, b, i, n), 0.0]).collect();
    let elements = (0..n).map(|i| [i, i + 1, usize::MAX]).collect();
    Mesh::new(1, vertices, elements, GridShape::Interval { n })
}

/// Tensor grid on `[x0, x1] x [y0, y1]`, each cell split along the
/// lower-left to upper-right diagonal into two counterclockwise triangles.
///
/// Vertex `(i, j)` has index `j * (nx + 1) + i`.
pub fn build_rect_mesh(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x0 >= x1 || y0 >= y1 {
        return Err(Error::InvalidMesh(format!(
            "box [{x0}, {x1}] x [{y0}, {y1}] is degenerate"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh("rectangle needs at least one subdivision per axis".into()));
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = grid_coord(y0, y1, j, ny);
        for i in 0..=nx {
            vertices.push([grid_coord(x0, x1, i, nx), y]);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (ll, lr, ur, ul) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            elements.push([ll, lr, ur]);
            elements.push([ll, ur, ul]);
        }
    }
    Mesh::new(2, vertices, elements, GridShape::Rect { nx, ny })
}

fn compute_geometry(dim: usize, v: &[[f64; 2]], el: &[usize; 3]) -> Result<ElementGeometry> {
    if dim == 1 {
        let h = v[el[1]][0] - v[el[0]][0];
        if h.is_nan() || h <= 0.0 {
            return Err(Error::InvalidMesh(format!("interval element {el:?} has length {h}")));
        }
        return Ok(ElementGeometry {
            measure: h,
            grads: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]],
        });
    }
    let [p0, p1, p2] = [v[el[0]], v[el[1]], v[el[2]]];
    let (e1, e2) = ([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if det.is_nan() || det <= 0.0 {
        return Err(Error::InvalidMesh(format!("triangle {el:?} has signed area {}", det / 2.0)));
    }
    // Rows of the inverse Jacobian are the gradients of lambda_1 and lambda_2.
    let g1 = [e2[1] / det, -e2[0] / det];
    let g2 = [-e1[1] / det, e1[0] / det];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    Ok(ElementGeometry { measure: det / 2.0, grads: [g0, g1, g2] })
}

impl Mesh {
    /// Mesh from explicit vertices and elements (2 vertex indices per
    /// element in 1D, 3 counterclockwise ones in 2D).
    pub fn from_parts(dim: usize, vertices: Vec<[f64; 2]>, elements: Vec<Vec<usize>>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh(format!("dimension {dim} is not supported")));
        }
        let mut packed = Vec::with_capacity(elements.len());
        for el in &elements {
            if el.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!("element {el:?} needs {} vertices", dim + 1)));
            }
            let mut p = [usize::MAX; 3];
            p[..el.len()].copy_from_slice(el);
            packed.push(p);
        }
        Self::new(dim, vertices, packed, GridShape::Unstructured)
    }

    fn new(dim: usize, vertices: Vec<[f64; 2]>, elements: Vec<[usize; 3]>, shape: GridShape) -> Result<Self> {
        let nv = vertices.len();
        let mut geometry = Vec::with_capacity(elements.len());
        for el in &elements {
            let nodes = &el[..dim + 1];
            if nodes.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("element {el:?} references a missing vertex")));
            }
            if (0..nodes.len()).any(|a| nodes[a + 1..].contains(&nodes[a])) {
                return Err(Error::InvalidMesh(format!("element {el:?} repeats a vertex")));
            }
            geometry.push(compute_geometry(dim, &vertices, el)?);
        }
        Ok(Self { dim, vertices, elements, geometry, shape })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vertices per element: 2 for intervals, 3 for triangles.
    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> [f64; 2] {
        self.vertices[i]
    }

    /// Vertex indices of element `e`.
    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e][..self.dim + 1]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.elements.iter().map(move |el| &el[..self.dim + 1])
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    /// Measure of element `e` and the per-vertex gradients of its barycentric basis.
    pub fn element_geometry(&self, e: usize) -> ElementGeometry {
        self.geometry[e]
    }

    pub fn total_measure(&self) -> f64 {
        self.geometry.iter().map(|g| g.measure).sum()
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        self.elements()
            .flat_map(|el| {
                let n = el.len();
                (0..n).flat_map(move |a| (a + 1..n).map(move |b| (el[a], el[b])))
            })
            .map(|(a, b)| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max)
    }
}
