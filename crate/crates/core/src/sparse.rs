//! Compressed-row sparse matrices on the vertex graph of a mesh and a
//! Jacobi-preconditioned conjugate gradient solver.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Sparsity pattern shared by all operators assembled on one mesh.
///
/// Besides the CSR index arrays it stores, for every element, the CSR slot
/// of each local `(a, b)` pair so that assembly is a plain scatter.
#[derive(Debug)]
pub struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    nodes_per_element: usize,
    element_slots: Vec<usize>,
}

impl Pattern {
    pub fn from_mesh(mesh: &Mesh) -> Arc<Self> {
        let n = mesh.num_vertices();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for el in mesh.elements() {
            for &a in el {
                cols[a].extend_from_slice(el);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for c in &mut cols {
            c.sort_unstable();
            c.dedup();
            col_idx.extend_from_slice(c);
            row_ptr.push(col_idx.len());
        }
        let k = mesh.nodes_per_element();
        let mut element_slots = Vec::with_capacity(mesh.num_elements() * k * k);
        for el in mesh.elements() {
            for &a in el {
                let row = &col_idx[row_ptr[a]..row_ptr[a + 1]];
                for &b in el {
                    let pos = row.binary_search(&b).expect("pattern holds every element pair");
                    element_slots.push(row_ptr[a] + pos);
                }
            }
        }
        Arc::new(Self { n, row_ptr, col_idx, nodes_per_element: k, element_slots })
    }

    /// Pattern holding the given (sorted, deduplicated) column lists; it has
    /// no element slot map.
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Arc<Self> {
        let n = rows.len();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        for mut c in rows {
            c.sort_unstable();
            c.dedup();
            assert!(c.iter().all(|&j| j < n), "column index out of range");
            col_idx.extend(c);
            row_ptr.push(col_idx.len());
        }
        Arc::new(Self { n, row_ptr, col_idx, nodes_per_element: 0, element_slots: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// CSR slots of element `e`, row-major over local vertex pairs.
    pub fn element_slots(&self, e: usize) -> &[usize] {
        let k2 = self.nodes_per_element * self.nodes_per_element;
        &self.element_slots[e * k2..(e + 1) * k2]
    }
}

/// Symmetric sparse matrix in compressed row layout.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Stores the nonzero entries of a dense square matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let cols = rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, _)| j).collect())
            .collect();
        let pattern = Pattern::from_rows(cols);
        let mut values = Vec::with_capacity(pattern.nnz());
        for (i, r) in rows.iter().enumerate() {
            values.extend(pattern.col_idx[pattern.row_ptr[i]..pattern.row_ptr[i + 1]].iter().map(|&j| r[j]));
        }
        Self { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Entry `(i, j)`, zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.pattern.row_ptr[i], self.pattern.row_ptr[i + 1]);
        match self.pattern.col_idx[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.pattern.row_ptr[i], self.pattern.row_ptr[i + 1]);
        self.pattern.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Adds a dense element block through the element's slot map.
    pub fn add_element_block(&mut self, e: usize, block: &[f64]) {
        let slots = self.pattern.element_slots(e);
        debug_assert_eq!(slots.len(), block.len());
        for (&s, &v) in slots.iter().zip(block) {
            self.values[s] += v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`; both must have the same sparsity pattern.
    pub fn axpy(&mut self, a: f64, other: &SparseMatrix) {
        let same = Arc::ptr_eq(&self.pattern, &other.pattern)
            || (self.pattern.row_ptr == other.pattern.row_ptr && self.pattern.col_idx == other.pattern.col_idx);
        assert!(same, "axpy needs matching sparsity patterns");
        for (v, &o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &*self.pattern;
        for (i, yi) in y.iter_mut().enumerate().take(p.n) {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let p = &*self.pattern;
        let mut total = 0.0;
        for i in 0..p.n {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            total += x[i] * s;
        }
        total
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim()).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of a converged conjugate gradient solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for SPD `A`, starting from `x = 0`.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    solve_spd_into(a, b, &mut x, tol, max_iter)?;
    Ok(x)
}

/// Jacobi-preconditioned CG from the initial guess in `x`, stopping at
/// `||b - A x|| <= tol * ||b||`.
pub fn solve_spd_into(a: &SparseMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = norm(&r) / b_norm;
    if rel <= tol {
        return Ok(SolveStats { iterations: 0, relative_residual: rel });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            return Err(Error::LinearSolver { iterations: it, residual: rel });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok(SolveStats { iterations: it, relative_residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::LinearSolver { iterations: max_iter, residual: rel })
}
