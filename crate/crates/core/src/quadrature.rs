//! Element quadrature in barycentric coordinates.
//!
//! Weights are normalised to sum to one, so an element integral is
//! `measure * sum(w_q * f(x_q))`.

use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on an interval, exact for polynomials of the given degree.
pub fn interval_rule(degree: usize) -> QuadratureRule {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    let points = x.iter().map(|&t| {
        let s = 0.5 * (t + 1.0);
        [1.0 - s, s, 0.0]
    });
    QuadratureRule {
        points: points.collect(),
        weights: w.iter().map(|w| 0.5 * w).collect(),
        degree: 2 * n - 1,
    }
}

/// Symmetric triangle rules up to degree 4 (centroid, 3-point, 6-point);
/// collapsed Gauss-Legendre products above that.
pub fn triangle_rule(degree: usize) -> QuadratureRule {
    match degree {
        0 | 1 => QuadratureRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            degree: 1,
        },
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            QuadratureRule {
                points: vec![[a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 3.0; 3],
                degree: 2,
            }
        }
        3 | 4 => {
            let s10 = 10f64.sqrt();
            let r = (38.0 - 44.0 * (0.4f64).sqrt()).sqrt();
            let a1 = (8.0 - s10 + r) / 18.0;
            let a2 = (8.0 - s10 - r) / 18.0;
            let q = (213125.0 - 53320.0 * s10).sqrt();
            let w1 = (620.0 + q) / 3720.0;
            let w2 = (620.0 - q) / 3720.0;
            let mut points = Vec::with_capacity(6);
            let mut weights = Vec::with_capacity(6);
            for (a, w) in [(a1, w1), (a2, w2)] {
                let b = 1.0 - 2.0 * a;
                points.extend([[b, a, a], [a, b, a], [a, a, b]]);
                weights.extend([w; 3]);
            }
            QuadratureRule { points, weights, degree: 4 }
        }
        _ => collapsed_rule(degree),
    }
}

/// Duffy-collapsed tensor Gauss rule; the Jacobian adds one degree in the
/// collapsed direction.
fn collapsed_rule(degree: usize) -> QuadratureRule {
    let n = degree.div_ceil(2) + 1;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&xu, &wu) in x.iter().zip(&w) {
        let u = 0.5 * (xu + 1.0);
        for (&xv, &wv) in x.iter().zip(&w) {
            let v = 0.5 * (xv + 1.0);
            let (l1, l2) = (u, (1.0 - u) * v);
            points.push([1.0 - l1 - l2, l1, l2]);
            // Reference area 1/2 is normalised away: 2 * (1/4) * (1 - u).
            weights.push(0.5 * wu * wv * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, degree: 2 * n - 2 }
}

/// Rule for elements of the given spatial dimension.
pub fn element_rule(dim: usize, degree: usize) -> QuadratureRule {
    match dim {
        1 => interval_rule(degree),
        _ => triangle_rule(degree),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    // Exact integral over the reference triangle, normalised by its area.
    fn bary_moment(a: u32, b: u32, c: u32) -> f64 {
        2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)
    }

    #[test]
    fn gauss_legendre_three_point() {
        let (x, w) = gauss_legendre(3);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - r).abs() < 1e-15);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn interval_rules_exact_to_degree() {
        for deg in 0..12 {
            let rule = interval_rule(deg);
            assert!(rule.degree >= deg);
            for p in 0..=deg as i32 {
                let q: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| w * x[1].powi(p)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "deg {deg} p {p}");
            }
        }
    }

    #[test]
    fn default_rules_have_documented_sizes() {
        assert_eq!(interval_rule(4).points.len(), 3);
        assert_eq!(triangle_rule(4).points.len(), 6);
    }

    #[test]
    fn triangle_rules_exact_to_degree() {
        for deg in 1..=12 {
            let rule = triangle_rule(deg);
            assert!(rule.degree >= deg);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let c = deg as u32 - a - b;
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                        .sum();
                    assert!((q - bary_moment(a, b, c)).abs() < 1e-14, "deg {deg} ({a},{b},{c})");
                }
            }
        }
    }
}
