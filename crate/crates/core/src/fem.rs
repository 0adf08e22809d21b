//! P1 assembly of the operators of the implicit scheme: stiffness,
//! mobility-weighted consistent mass, and the secant-slope load vector.

use std::ops::{Deref, DerefMut};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{ModelParams, PotentialSpec};
use crate::quadrature::{element_rule, QuadratureRule};
use crate::sparse::{Pattern, SparseMatrix};

pub const DEFAULT_QUAD_DEGREE: usize = 4;

/// Nodal coefficients of a continuous piecewise-linear function.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField(Vec<f64>);

impl NodalField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        check_len(mesh, &values)?;
        Ok(Self(values))
    }

    pub fn constant(mesh: &Mesh, value: f64) -> Self {
        Self(vec![value; mesh.num_vertices()])
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self(mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for NodalField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for NodalField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub(crate) fn check_len(mesh: &Mesh, values: &[f64]) -> Result<()> {
    if values.len() == mesh.num_vertices() {
        Ok(())
    } else {
        Err(Error::FieldSize { expected: mesh.num_vertices(), found: values.len() })
    }
}

/// `(1 + delta_ab) / ((d + 1)(d + 2))`: the consistent P1 mass per unit measure.
fn mass_coefficient(dim: usize, a: usize, b: usize) -> f64 {
    let denom = ((dim + 1) * (dim + 2)) as f64;
    if a == b {
        2.0 / denom
    } else {
        1.0 / denom
    }
}

pub(crate) fn stiffness_into(mesh: &Mesh, k: &mut SparseMatrix) {
    let n = mesh.nodes_per_element();
    let mut block = [0.0; 9];
    for e in 0..mesh.num_elements() {
        let g = mesh.element_geometry(e);
        for a in 0..n {
            for b in 0..n {
                let (ga, gb) = (g.grads[a], g.grads[b]);
                block[a * n + b] = g.measure * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
        k.add_element_block(e, &block[..n * n]);
    }
}

pub(crate) fn weighted_mass_into(mesh: &Mesh, weights: &[f64], m: &mut SparseMatrix) {
    let n = mesh.nodes_per_element();
    let dim = mesh.dim();
    let mut block = [0.0; 9];
    for (e, &w) in weights.iter().enumerate() {
        let scale = w * mesh.element_geometry(e).measure;
        for a in 0..n {
            for b in 0..n {
                block[a * n + b] = scale * mass_coefficient(dim, a, b);
            }
        }
        m.add_element_block(e, &block[..n * n]);
    }
}

/// `K_ij = int grad phi_i . grad phi_j`.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    assemble_stiffness_on(mesh, Pattern::from_mesh(mesh))
}

pub fn assemble_stiffness_on(mesh: &Mesh, pattern: Arc<Pattern>) -> SparseMatrix {
    let mut k = SparseMatrix::zeros(pattern);
    stiffness_into(mesh, &mut k);
    k
}

/// `M_ij = int w phi_i phi_j` for element-wise constant `w > 0`.
pub fn assemble_weighted_mass(mesh: &Mesh, weights: &[f64]) -> Result<SparseMatrix> {
    assemble_weighted_mass_on(mesh, Pattern::from_mesh(mesh), weights)
}

pub fn assemble_weighted_mass_on(mesh: &Mesh, pattern: Arc<Pattern>, weights: &[f64]) -> Result<SparseMatrix> {
    if weights.len() != mesh.num_elements() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} elements",
            weights.len(),
            mesh.num_elements()
        )));
    }
    if let Some((e, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter(format!("mass weight {w} on element {e} is not positive")));
    }
    let mut m = SparseMatrix::zeros(pattern);
    weighted_mass_into(mesh, weights, &mut m);
    Ok(m)
}

/// Consistent mass matrix (unit weight).
pub fn assemble_mass(mesh: &Mesh) -> SparseMatrix {
    let ones = vec![1.0; mesh.num_elements()];
    assemble_weighted_mass(mesh, &ones).expect("unit weights are valid")
}

/// Constant gradient of the P1 function `s` on element `e`.
#[inline]
pub fn element_gradient(mesh: &Mesh, s: &[f64], e: usize) -> [f64; 2] {
    let g = mesh.element_geometry(e);
    let mut out = [0.0; 2];
    for (a, &v) in mesh.element(e).iter().enumerate() {
        out[0] += g.grads[a][0] * s[v];
        out[1] += g.grads[a][1] * s[v];
    }
    out
}

pub fn gradient_norms(mesh: &Mesh, s: &[f64]) -> Vec<f64> {
    (0..mesh.num_elements())
        .map(|e| {
            let g = element_gradient(mesh, s, e);
            g[0].hypot(g[1])
        })
        .collect()
}

pub(crate) fn secant_load_into(
    mesh: &Mesh,
    rule: &QuadratureRule,
    s: &[f64],
    s_prev: &[f64],
    potential: &PotentialSpec,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let n = mesh.nodes_per_element();
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element(e);
        let mut sv = [0.0; 3];
        let mut pv = [0.0; 3];
        for a in 0..n {
            sv[a] = s[nodes[a]];
            pv[a] = s_prev[nodes[a]];
        }
        let mut local = [0.0; 3];
        for (lam, &w) in rule.points.iter().zip(&rule.weights) {
            let (mut sq, mut pq) = (0.0, 0.0);
            for a in 0..n {
                sq += lam[a] * sv[a];
                pq += lam[a] * pv[a];
            }
            let f = w * potential.secant_slope(sq, pq);
            for a in 0..n {
                local[a] += f * lam[a];
            }
        }
        let meas = mesh.element_geometry(e).measure;
        for a in 0..n {
            out[nodes[a]] += meas * local[a];
        }
    }
}

/// `b_i = int D(S, S_prev) phi_i` with the secant slope of `potential`.
pub fn assemble_secant_load(
    mesh: &Mesh,
    s: &[f64],
    s_prev: &[f64],
    potential: &PotentialSpec,
    quad_degree: usize,
) -> Result<Vec<f64>> {
    check_len(mesh, s)?;
    check_len(mesh, s_prev)?;
    let rule = element_rule(mesh.dim(), quad_degree);
    let mut out = vec![0.0; mesh.num_vertices()];
    secant_load_into(mesh, &rule, s, s_prev, potential, &mut out);
    Ok(out)
}

pub(crate) fn potential_integral(mesh: &Mesh, rule: &QuadratureRule, s: &[f64], potential: &PotentialSpec) -> f64 {
    let n = mesh.nodes_per_element();
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let nodes = mesh.element(e);
        let mut local = 0.0;
        for (lam, &w) in rule.points.iter().zip(&rule.weights) {
            let sq: f64 = (0..n).map(|a| lam[a] * s[nodes[a]]).sum();
            local += w * potential.value(sq);
        }
        total += mesh.element_geometry(e).measure * local;
    }
    total
}

pub(crate) fn gradient_energy(mesh: &Mesh, s: &[f64]) -> f64 {
    (0..mesh.num_elements())
        .map(|e| {
            let g = element_gradient(mesh, s, e);
            mesh.element_geometry(e).measure * (g[0] * g[0] + g[1] * g[1])
        })
        .sum()
}

/// `E(S) = int alpha/2 |grad S|^2 + beta d(S)`.
pub fn energy(mesh: &Mesh, s: &[f64], p: &ModelParams, quad_degree: usize) -> Result<f64> {
    check_len(mesh, s)?;
    let rule = element_rule(mesh.dim(), quad_degree);
    Ok(0.5 * p.alpha * gradient_energy(mesh, s) + p.beta * potential_integral(mesh, &rule, s, &p.potential))
}

pub fn l2_norm(mesh: &Mesh, s: &[f64]) -> f64 {
    assemble_mass(mesh).quadratic_form(s).max(0.0).sqrt()
}

pub fn h1_seminorm(mesh: &Mesh, s: &[f64]) -> f64 {
    gradient_energy(mesh, s).sqrt()
}
