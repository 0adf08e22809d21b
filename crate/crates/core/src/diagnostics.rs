//! Observables of the interface evolution: phase area, level-set curves,
//! front position and speed, and the sharp-interface reference laws.
//!
//! Vertices whose value equals the level are classified as above it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{GridShape, Mesh};
use crate::model::double_well;
use crate::quadrature::gauss_legendre;

/// Level set of a P1 field: polyline segments in 2D, crossing points in 1D.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterfaceCurve {
    pub segments: Vec<[[f64; 2]; 2]>,
    pub points: Vec<f64>,
}

impl InterfaceCurve {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(|[p, q]| (p[0] - q[0]).hypot(p[1] - q[1])).sum()
    }
}

/// Sharp-interface circle shrinking by curvature with `r' = -c sqrt(lambda) / r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpInterfaceCircle {
    pub r0: f64,
    pub c_const: f64,
    pub lambda: f64,
}

impl SharpInterfaceCircle {
    /// `dA/dt = -2 pi c sqrt(lambda)` before extinction.
    pub fn area_rate(&self) -> f64 {
        -2.0 * PI * self.c_const * self.lambda.sqrt()
    }

    pub fn extinction_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * self.c_const * self.lambda.sqrt())
    }

    pub fn area(&self, t: f64) -> f64 {
        (PI * self.r0 * self.r0 + self.area_rate() * t).max(0.0)
    }
}

pub fn circle_reference_area(t: f64, reference: &SharpInterfaceCircle) -> f64 {
    reference.area(t)
}

/// Measure of `{f >= level}` on a simplex whose linear function takes
/// `values` at the vertices, as a fraction of the simplex measure.
fn superlevel_fraction(values: &[f64], level: f64) -> f64 {
    match *values {
        [a, b] => {
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            if lo >= level {
                1.0
            } else if hi < level {
                0.0
            } else {
                (hi - level) / (hi - lo)
            }
        }
        [a, b, c] => {
            let above = [a >= level, b >= level, c >= level];
            let count = above.iter().filter(|&&x| x).count();
            match count {
                3 => 1.0,
                0 => 0.0,
                1 => {
                    let i = above.iter().position(|&x| x).unwrap();
                    let top = values[i];
                    let (p, q) = (values[(i + 1) % 3], values[(i + 2) % 3]);
                    (top - level) * (top - level) / ((top - p) * (top - q))
                }
                _ => {
                    let i = above.iter().position(|&x| !x).unwrap();
                    let bottom = values[i];
                    let (p, q) = (values[(i + 1) % 3], values[(i + 2) % 3]);
                    1.0 - (level - bottom) * (level - bottom) / ((p - bottom) * (q - bottom))
                }
            }
        }
        _ => unreachable!("elements have two or three vertices"),
    }
}

/// Exact measure of the super-level set `{S_h >= level}` of the P1 interpolant.
pub fn phase_area(mesh: &Mesh, s: &[f64], level: f64) -> f64 {
    let mut vals = [0.0; 3];
    let n = mesh.nodes_per_element();
    (0..mesh.num_elements())
        .map(|e| {
            for (a, &v) in mesh.element(e).iter().enumerate() {
                vals[a] = s[v];
            }
            mesh.element_geometry(e).measure * superlevel_fraction(&vals[..n], level)
        })
        .sum()
}

fn edge_crossing(p: [f64; 2], q: [f64; 2], fp: f64, fq: f64, level: f64) -> [f64; 2] {
    let t = (level - fp) / (fq - fp);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Level set `{S_h = level}` by marching triangles (2D) or inverse linear
/// interpolation (1D). Zero-length segments from vertex ties are dropped.
pub fn extract_interface(mesh: &Mesh, s: &[f64], level: f64) -> InterfaceCurve {
    let mut curve = InterfaceCurve::default();
    for el in mesh.elements() {
        let above: Vec<bool> = el.iter().map(|&v| s[v] >= level).collect();
        if above.iter().all(|&a| a) || above.iter().all(|&a| !a) {
            continue;
        }
        if el.len() == 2 {
            let (p, q) = (mesh.vertex(el[0]), mesh.vertex(el[1]));
            curve.points.push(edge_crossing(p, q, s[el[0]], s[el[1]], level)[0]);
            continue;
        }
        let mut pts = Vec::with_capacity(2);
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            if above[a] != above[b] {
                let (va, vb) = (el[a], el[b]);
                pts.push(edge_crossing(mesh.vertex(va), mesh.vertex(vb), s[va], s[vb], level));
            }
        }
        if let [p, q] = pts[..] {
            if p != q {
                curve.segments.push([p, q]);
            }
        }
    }
    curve
}

/// Rightmost crossing of `level` on a 1D mesh.
pub fn front_position_1d(mesh: &Mesh, s: &[f64], level: f64) -> Option<f64> {
    extract_interface(mesh, s, level).points.into_iter().reduce(f64::max)
}

/// Rightmost crossing of `level` along each grid row of a structured 2D mesh.
pub fn row_front_positions(mesh: &Mesh, s: &[f64], level: f64) -> Option<Vec<Option<f64>>> {
    let GridShape::Rect { nx, ny } = mesh.shape() else {
        return None;
    };
    let rows = (0..=ny)
        .map(|j| {
            let base = j * (nx + 1);
            (0..nx)
                .filter_map(|i| {
                    let (a, b) = (base + i, base + i + 1);
                    let (fa, fb) = (s[a], s[b]);
                    ((fa >= level) != (fb >= level))
                        .then(|| edge_crossing(mesh.vertex(a), mesh.vertex(b), fa, fb, level)[0])
                })
                .reduce(f64::max)
        })
        .collect();
    Some(rows)
}

/// Largest spread `max_j S(i, j) - min_j S(i, j)` over the grid columns of a
/// structured 2D mesh.
pub fn max_column_variation(mesh: &Mesh, s: &[f64]) -> Option<f64> {
    let GridShape::Rect { nx, ny } = mesh.shape() else {
        return None;
    };
    let worst = (0..=nx)
        .map(|i| {
            let col = (0..=ny).map(|j| s[j * (nx + 1) + i]);
            let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi - lo
        })
        .fold(0.0, f64::max);
    Some(worst)
}

/// Ordinary least-squares slope of `positions` against `times`.
pub fn estimate_front_speed(times: &[f64], positions: &[f64]) -> Result<f64> {
    let n = times.len().min(positions.len());
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let (t, x) = (&times[..n], &positions[..n]);
    let tm = t.iter().sum::<f64>() / n as f64;
    let xm = x.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (ti, xi) in t.iter().zip(x) {
        sxy += (ti - tm) * (xi - xm);
        sxx += (ti - tm) * (ti - tm);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("sample times are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Least-squares slope after discarding the leading `skip_fraction` of samples.
pub fn estimate_front_speed_windowed(times: &[f64], positions: &[f64], skip_fraction: f64) -> Result<f64> {
    let n = times.len().min(positions.len());
    let skip = ((n as f64) * skip_fraction.clamp(0.0, 1.0)).floor() as usize;
    estimate_front_speed(&times[skip..n], &positions[skip..n])
}

/// Default share of leading samples skipped by [`estimate_front_speed_windowed`].
pub const DEFAULT_SKIP_FRACTION: f64 = 0.1;

/// `c = int_0^1 sqrt(2 psi(S)) dS` by Gauss-Legendre quadrature.
pub fn wave_speed_constant(points: usize) -> f64 {
    let (x, w) = gauss_legendre(points.max(1));
    x.iter()
        .zip(&w)
        .map(|(&t, &wt)| {
            let s = 0.5 * (t + 1.0);
            0.5 * wt * (2.0 * double_well(s)).sqrt()
        })
        .sum()
}
