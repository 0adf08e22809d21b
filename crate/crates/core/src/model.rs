//! The unified gradient-flow model
//!
//! ```text
//! c(|grad S|) dS/dt = div(alpha grad S) - beta d'(S)
//! ```
//!
//! with homogeneous Neumann data, energy `E(S) = int alpha/2 |grad S|^2 + beta d(S)`,
//! the double-well-plus-force potential `d(S) = 4 S^2 (1 - S)^2 + C S` and
//! either a constant or a clamped inverse-gradient mobility.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MobilitySpec {
    /// `c(x) = value`.
    Constant(f64),
    /// `c(x) = 1 / max(delta, min(1/delta, x))`.
    InverseClamped { delta: f64 },
}

/// `d(s) = psi(s) + force_slope * s` with the fixed well `psi(s) = 4 s^2 (1 - s)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    pub force_slope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub mobility: MobilitySpec,
    pub potential: PotentialSpec,
}

pub const DEFAULT_DELTA: f64 = 1e-2;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl MobilitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MobilitySpec::Constant(v) => require_positive("constant mobility", v),
            MobilitySpec::InverseClamped { delta } => {
                if delta > 0.0 && delta <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("clamp delta must lie in (0, 1], got {delta}")))
                }
            }
        }
    }

    /// Mobility at gradient magnitude `x >= 0`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            MobilitySpec::Constant(v) => v,
            MobilitySpec::InverseClamped { delta } => 1.0 / x.min(1.0 / delta).max(delta),
        }
    }

    /// Bounds `(lower, upper)` with `lower <= c(x) <= upper` for all `x >= 0`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            MobilitySpec::Constant(v) => (v, v),
            MobilitySpec::InverseClamped { delta } => (delta, 1.0 / delta),
        }
    }
}

pub fn mobility_value(m: &MobilitySpec, x: f64) -> f64 {
    m.value(x)
}

pub fn double_well(s: f64) -> f64 {
    let t = s * (1.0 - s);
    4.0 * t * t
}

impl PotentialSpec {
    pub fn value(&self, s: f64) -> f64 {
        double_well(s) + self.force_slope * s
    }

    pub fn derivative(&self, s: f64) -> f64 {
        8.0 * s * (1.0 - s) * (1.0 - 2.0 * s) + self.force_slope
    }

    pub fn second_derivative(&self, s: f64) -> f64 {
        8.0 * (6.0 * s * s - 6.0 * s + 1.0)
    }

    /// Difference quotient `(d(s) - d(s_prev)) / (s - s_prev)` in its expanded
    /// polynomial form, which equals `d'(s)` when the arguments coincide.
    #[inline]
    pub fn secant_slope(&self, s: f64, s_prev: f64) -> f64 {
        let q = s_prev - 1.0;
        4.0 * (s * s * s + s * s * (s_prev - 2.0) + s * q * q + s_prev * q * q) + self.force_slope
    }
}

pub fn potential_value(p: &PotentialSpec, s: f64) -> f64 {
    p.value(s)
}

pub fn potential_derivative(p: &PotentialSpec, s: f64) -> f64 {
    p.derivative(s)
}

pub fn secant_slope(p: &PotentialSpec, s: f64, s_prev: f64) -> f64 {
    p.secant_slope(s, s_prev)
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("alpha", self.alpha)?;
        require_positive("beta", self.beta)?;
        self.mobility.validate()?;
        if !self.potential.force_slope.is_finite() {
            return Err(Error::InvalidParameter("force slope must be finite".into()));
        }
        Ok(())
    }
}

/// Generalised Allen-Cahn equation with regularisation `mu`, interface
/// parameter `lambda`, wave-speed constant `c_const` and force `F(S) = C S`.
///
/// The stored force slope is `sqrt(mu) * C` so that `beta * d` reproduces the
/// `F` term of the Allen-Cahn energy.
pub fn allen_cahn_params(mu: f64, lambda: f64, c_const: f64, force_slope: f64) -> Result<ModelParams> {
    require_positive("mu", mu)?;
    require_positive("lambda", lambda)?;
    require_positive("c", c_const)?;
    let p = ModelParams {
        alpha: mu.sqrt() * lambda,
        beta: 1.0 / mu.sqrt(),
        mobility: MobilitySpec::Constant((mu * lambda).sqrt() / c_const),
        potential: PotentialSpec { force_slope: mu.sqrt() * force_slope },
    };
    p.validate()?;
    Ok(p)
}

/// Hybrid model: `alpha = nu`, `beta = 1`, mobility `1/|grad S|` clamped to `[delta, 1/delta]`.
pub fn hybrid_params(nu: f64, delta: f64, force_slope: f64) -> Result<ModelParams> {
    require_positive("nu", nu)?;
    let p = ModelParams {
        alpha: nu,
        beta: 1.0,
        mobility: MobilitySpec::InverseClamped { delta },
        potential: PotentialSpec { force_slope },
    };
    p.validate()?;
    Ok(p)
}

/// Observed coefficient bounds on sampled ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub mobility_lower: f64,
    pub mobility_upper: f64,
    pub potential_min: f64,
    pub potential_argmin: f64,
    /// Witness `(slope, offset)` with `d(s) >= slope * |s| - offset` on the samples.
    pub growth: (f64, f64),
    pub max_abs_second_derivative: f64,
    pub mobility_positive: bool,
    pub potential_nonnegative: bool,
}

impl AssumptionReport {
    pub fn holds(&self) -> bool {
        self.mobility_positive && self.potential_nonnegative && self.growth.0 > 0.0
    }
}

fn sample(range: (f64, f64), samples: usize) -> impl Iterator<Item = f64> {
    let n = samples.max(2);
    (0..n).map(move |i| {
        if i + 1 == n {
            range.1
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    })
}

/// Samples the mobility on `x_range` and the potential on `s_range`.
///
/// Advisory only: the quartic potential violates the global growth and
/// curvature bounds, which are needed only on attained values.
pub fn validate_assumptions(
    p: &ModelParams,
    s_range: (f64, f64),
    x_range: (f64, f64),
    samples: usize,
) -> AssumptionReport {
    let (mut c_lo, mut c_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in sample(x_range, samples) {
        let c = p.mobility.value(x.max(0.0));
        c_lo = c_lo.min(c);
        c_hi = c_hi.max(c);
    }

    let pot = &p.potential;
    let ss: Vec<f64> = sample(s_range, samples).collect();
    let (mut d_min, mut arg) = (f64::INFINITY, ss[0]);
    let mut d2_max = 0.0f64;
    for &s in &ss {
        let d = pot.value(s);
        if d < d_min {
            d_min = d;
            arg = s;
        }
        d2_max = d2_max.max(pot.second_derivative(s).abs());
    }

    // Half the mean growth towards the farthest sample, then the smallest
    // offset making the linear lower bound hold on every sample.
    let far = ss.iter().copied().fold(0.0f64, |a, s| if s.abs() > a.abs() { s } else { a });
    let slope = if far != 0.0 { ((pot.value(far) - d_min) / (2.0 * far.abs())).max(0.0) } else { 0.0 };
    let offset = ss.iter().map(|&s| slope * s.abs() - pot.value(s)).fold(0.0f64, f64::max);

    AssumptionReport {
        mobility_lower: c_lo,
        mobility_upper: c_hi,
        potential_min: d_min,
        potential_argmin: arg,
        growth: (slope, offset),
        max_abs_second_derivative: d2_max,
        mobility_positive: c_lo > 0.0,
        potential_nonnegative: d_min >= 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C_QUAD: f64 = 0.4714;

    #[test]
    fn allen_cahn_mapping() {
        let p = allen_cahn_params(0.1, 0.1, C_QUAD, 0.0).unwrap();
        assert!((p.alpha - 0.031623).abs() < 1e-6);
        assert!((p.beta - 3.16228).abs() < 1e-5);
        assert!((p.mobility.value(0.0) - 0.21213).abs() < 1e-5);
    }

    #[test]
    fn allen_cahn_unit_case() {
        let p = allen_cahn_params(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!((p.alpha, p.beta), (1.0, 1.0));
        assert_eq!(p.mobility, MobilitySpec::Constant(1.0));
    }

    #[test]
    fn allen_cahn_force_scaling() {
        let p = allen_cahn_params(0.1, 0.1, C_QUAD, 0.5).unwrap();
        assert!((p.potential.force_slope - 0.15811).abs() < 1e-5);
    }

    #[test]
    fn allen_cahn_rejects_nonpositive() {
        assert!(allen_cahn_params(0.0, 0.1, C_QUAD, 0.0).is_err());
        assert!(allen_cahn_params(0.1, -0.1, C_QUAD, 0.0).is_err());
        assert!(allen_cahn_params(0.1, 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn hybrid_mapping_and_clamp() {
        let p = hybrid_params(0.1, 0.01, 0.0).unwrap();
        assert_eq!((p.alpha, p.beta), (0.1, 1.0));
        assert_eq!(p.mobility.value(0.5), 2.0);
        assert_eq!(p.mobility.value(0.0), 100.0);
        assert_eq!(p.mobility.value(1000.0), 0.01);
    }

    #[test]
    fn hybrid_degenerate_band() {
        let p = hybrid_params(0.1, 1.0, 0.0).unwrap();
        for x in [0.0, 0.3, 1.0, 7.0, 1e9] {
            assert_eq!(p.mobility.value(x), 1.0);
        }
    }

    #[test]
    fn hybrid_rejects_delta() {
        assert!(hybrid_params(0.1, 0.0, 0.0).is_err());
        assert!(hybrid_params(0.1, 1.5, 0.0).is_err());
        assert!(hybrid_params(0.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn potential_values() {
        let c = 0.3;
        let p = PotentialSpec { force_slope: c };
        assert_eq!(p.value(0.0), 0.0);
        assert_eq!(p.value(1.0), c);
        assert_eq!(p.value(0.5), 0.25 + c / 2.0);
        assert_eq!(p.derivative(0.5), c);
    }

    #[test]
    fn secant_examples() {
        let p = PotentialSpec { force_slope: 0.0 };
        assert_eq!(p.secant_slope(1.0, 0.0), 0.0);
        assert_eq!(p.secant_slope(0.5, 0.5), 0.0);
        let raw = (p.value(0.7) - p.value(0.3)) / 0.4;
        assert!((p.secant_slope(0.7, 0.3) - raw).abs() < 1e-14);
    }

    #[test]
    fn constant_mobility() {
        let m = MobilitySpec::Constant(0.21213);
        assert_eq!(m.value(0.0), 0.21213);
        assert_eq!(m.value(12.0), 0.21213);
    }

    #[test]
    fn assumptions_constant_mobility() {
        let p = allen_cahn_params(0.1, 0.1, C_QUAD, 0.0).unwrap();
        let r = validate_assumptions(&p, (-1.0, 2.0), (0.0, 50.0), 301);
        assert_eq!(r.mobility_lower, r.mobility_upper);
        assert!((r.mobility_lower - 0.21213).abs() < 1e-5);
    }

    #[test]
    fn assumptions_double_well() {
        let p = hybrid_params(0.1, 0.01, 0.0).unwrap();
        let r = validate_assumptions(&p, (-1.0, 2.0), (0.0, 10.0), 301);
        assert_eq!(r.potential_min, 0.0);
        assert!(r.potential_argmin == 0.0 || r.potential_argmin == 1.0);
        assert!(r.potential_nonnegative && r.mobility_positive);
        assert_eq!((r.mobility_lower, r.mobility_upper), (0.1, 100.0));
        let (slope, offset) = r.growth;
        assert!(slope > 0.0);
        for i in 0..=300 {
            let s = -1.0 + 3.0 * i as f64 / 300.0;
            assert!(p.potential.value(s) >= slope * s.abs() - offset - 1e-12);
        }

        let r01 = validate_assumptions(&p, (0.0, 1.0), (0.0, 1.0), 101);
        assert_eq!(r01.max_abs_second_derivative, 8.0);
    }

    #[test]
    fn assumptions_flag_negative_potential() {
        let p = hybrid_params(0.1, 0.01, 0.5).unwrap();
        let r = validate_assumptions(&p, (-1.0, 2.0), (0.0, 1.0), 301);
        assert!(!r.potential_nonnegative);
        assert!(!r.holds());
    }

    proptest! {
        #[test]
        fn secant_symmetric(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -2.0f64..2.0) {
            let p = PotentialSpec { force_slope: c };
            let (x, y) = (p.secant_slope(a, b), p.secant_slope(b, a));
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }

        #[test]
        fn secant_diagonal_is_derivative(a in -3.0f64..3.0, c in -2.0f64..2.0) {
            let p = PotentialSpec { force_slope: c };
            let (x, y) = (p.secant_slope(a, a), p.derivative(a));
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }

        #[test]
        fn secant_matches_raw_quotient(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            prop_assume!((a - b).abs() >= 1e-6);
            let p = PotentialSpec { force_slope: c };
            let raw = (p.value(a) - p.value(b)) / (a - b);
            // Cancellation in the raw quotient loses digits as |a - b| shrinks.
            let scale = (1.0 + p.value(a).abs() + p.value(b).abs()) / (a - b).abs();
            prop_assert!((p.secant_slope(a, b) - raw).abs() <= 1e-12 * scale.max(1.0));
        }

        #[test]
        fn clamp_bounds(delta in 1e-3f64..=1.0, x in 0.0f64..1e4) {
            let m = MobilitySpec::InverseClamped { delta };
            let c = m.value(x);
            prop_assert!(c >= delta * (1.0 - 1e-15) && c <= (1.0 / delta) * (1.0 + 1e-15));
            if x >= delta && x <= 1.0 / delta {
                prop_assert_eq!(c, 1.0 / x);
            }
        }
    }

    #[test]
    fn derivative_matches_central_differences() {
        let p = PotentialSpec { force_slope: 0.37 };
        for step in [1e-2, 5e-3] {
            let mut worst: f64 = 0.0;
            for i in 0..=300 {
                let s = -1.0 + 3.0 * i as f64 / 300.0;
                let fd = (p.value(s + step) - p.value(s - step)) / (2.0 * step);
                worst = worst.max((fd - p.derivative(s)).abs());
            }
            // The third derivative is bounded by 144 on [-1, 2].
            assert!(worst <= 200.0 * step * step / 6.0 + 1e-10, "step {step}: {worst}");
        }
    }
}
