//! Implicit time stepping with the secant treatment of the potential.
//!
//! Each step solves
//!
//! ```text
//! (c(|grad S^{n-1}|) (S^n - S^{n-1}) / tau, v) + alpha (grad S^n, grad v)
//!     + beta (D(S^n, S^{n-1}), v) = 0
//! ```
//!
//! by the stabilised fixed-point iteration
//!
//! ```text
//! (M_c / tau + alpha K + gamma M) S^{n,k}
//!     = M_c S^{n-1} / tau - beta L(S^{n,k-1}, S^{n-1}) + gamma M S^{n,k-1}
//! ```
//!
//! where `M_c` is the mass matrix weighted by the mobility frozen at
//! `S^{n-1}` and `L` the secant load. The system matrix is assembled once per
//! step and reused across sweeps. A converged step satisfies the discrete
//! dissipation identity
//!
//! ```text
//! E(S^n) - E(S^{n-1}) = -tau (c dS, dS) - alpha/2 |grad(S^n - S^{n-1})|^2,   dS = (S^n - S^{n-1}) / tau
//! ```
//!
//! up to solver tolerances.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    check_len, gradient_energy, potential_integral, secant_load_into, stiffness_into, weighted_mass_into,
    NodalField, DEFAULT_QUAD_DEGREE,
};
use crate::mesh::Mesh;
use crate::model::ModelParams;
use crate::quadrature::{element_rule, QuadratureRule};
use crate::sparse::{solve_spd_into, Pattern, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub tau: f64,
    /// Stabilisation weight; `None` uses the model's `beta`.
    pub gamma: Option<f64>,
    /// Bound on the L2 norm of the difference of consecutive sweeps.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    /// Relative residual for the conjugate gradient solve.
    pub lin_tol: f64,
    pub lin_max_iter: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            gamma: None,
            fp_tol: 1e-10,
            fp_max_iter: 100,
            lin_tol: 1e-12,
            lin_max_iter: 1000,
        }
    }
}

impl StepConfig {
    pub fn with_tau(tau: f64) -> Self {
        Self { tau, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tau", self.tau)?;
        positive("fp_tol", self.fp_tol)?;
        positive("lin_tol", self.lin_tol)?;
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {g}")));
            }
        }
        if self.fp_max_iter == 0 || self.lin_max_iter == 0 {
            return Err(Error::InvalidParameter("iteration limits must be at least 1".into()));
        }
        Ok(())
    }

    pub fn gamma_for(&self, p: &ModelParams) -> f64 {
        self.gamma.unwrap_or(p.beta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub fp_iterations: usize,
    pub converged: bool,
    pub energy_before: f64,
    pub energy_after: f64,
    pub dissipation_identity_residual: f64,
    /// `||S^{n,k} - S^{n,k-1}||_{L2}` for every sweep.
    pub sweep_residuals: Vec<f64>,
    pub linear_iterations: usize,
}

/// Reusable state for stepping one model on one mesh.
pub struct Stepper<'m> {
    mesh: &'m Mesh,
    params: ModelParams,
    cfg: StepConfig,
    gamma: f64,
    rule: QuadratureRule,
    stiffness: SparseMatrix,
    mass: SparseMatrix,
    mobility_mass: SparseMatrix,
    system: SparseMatrix,
    weights: Vec<f64>,
    rhs_fixed: Vec<f64>,
    rhs: Vec<f64>,
    load: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'m> Stepper<'m> {
    pub fn new(mesh: &'m Mesh, params: ModelParams, cfg: StepConfig) -> Result<Self> {
        Self::with_quadrature(mesh, params, cfg, DEFAULT_QUAD_DEGREE)
    }

    pub fn with_quadrature(mesh: &'m Mesh, params: ModelParams, cfg: StepConfig, quad_degree: usize) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        if quad_degree < 4 {
            return Err(Error::InvalidParameter(format!("quadrature degree {quad_degree} is below 4")));
        }
        let pattern: Arc<Pattern> = Pattern::from_mesh(mesh);
        let mut stiffness = SparseMatrix::zeros(pattern.clone());
        stiffness_into(mesh, &mut stiffness);
        let mut mass = SparseMatrix::zeros(pattern.clone());
        weighted_mass_into(mesh, &vec![1.0; mesh.num_elements()], &mut mass);
        let n = mesh.num_vertices();
        Ok(Self {
            mesh,
            params,
            cfg,
            gamma: cfg.gamma_for(&params),
            rule: element_rule(mesh.dim(), quad_degree),
            stiffness,
            mass,
            mobility_mass: SparseMatrix::zeros(pattern.clone()),
            system: SparseMatrix::zeros(pattern),
            weights: vec![0.0; mesh.num_elements()],
            rhs_fixed: vec![0.0; n],
            rhs: vec![0.0; n],
            load: vec![0.0; n],
            scratch: vec![0.0; n],
        })
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn energy(&self, s: &[f64]) -> f64 {
        0.5 * self.params.alpha * gradient_energy(self.mesh, s)
            + self.params.beta * potential_integral(self.mesh, &self.rule, s, &self.params.potential)
    }

    /// Mobility weights frozen at `s_prev` and the mass matrix they induce.
    fn freeze_mobility(&mut self, s_prev: &[f64]) {
        for (e, w) in self.weights.iter_mut().enumerate() {
            let g = crate::fem::element_gradient(self.mesh, s_prev, e);
            *w = self.params.mobility.value(g[0].hypot(g[1]));
        }
        self.mobility_mass.values_mut().iter_mut().for_each(|v| *v = 0.0);
        weighted_mass_into(self.mesh, &self.weights, &mut self.mobility_mass);
    }

    fn dissipation_terms(&mut self, s_new: &[f64], s_prev: &[f64]) -> f64 {
        let d: Vec<f64> = s_new.iter().zip(s_prev).map(|(a, b)| a - b).collect();
        self.mobility_mass.quadratic_form(&d) / self.cfg.tau + 0.5 * self.params.alpha * self.stiffness.quadratic_form(&d)
    }

    /// One step of the scheme from `s_prev`.
    pub fn step(&mut self, s_prev: &[f64]) -> Result<(NodalField, StepReport)> {
        let e_prev = self.energy(s_prev);
        self.step_from(s_prev, e_prev)
    }

    /// Same as [`Stepper::step`] with the energy of `s_prev` already known.
    pub fn step_from(&mut self, s_prev: &[f64], energy_before: f64) -> Result<(NodalField, StepReport)> {
        check_len(self.mesh, s_prev)?;
        let tau = self.cfg.tau;
        let (alpha, beta, gamma) = (self.params.alpha, self.params.beta, self.gamma);

        self.freeze_mobility(s_prev);
        self.system.values_mut().copy_from_slice(self.mobility_mass.values());
        self.system.scale(1.0 / tau);
        self.system.axpy(alpha, &self.stiffness);
        self.system.axpy(gamma, &self.mass);

        self.mobility_mass.mul_vec_into(s_prev, &mut self.rhs_fixed);
        self.rhs_fixed.iter_mut().for_each(|v| *v /= tau);

        let mut current = s_prev.to_vec();
        let mut next = s_prev.to_vec();
        let mut sweep_residuals = Vec::new();
        let mut linear_iterations = 0;
        let potential = self.params.potential;
        loop {
            secant_load_into(self.mesh, &self.rule, &current, s_prev, &potential, &mut self.load);
            self.mass.mul_vec_into(&current, &mut self.scratch);
            for i in 0..self.rhs.len() {
                self.rhs[i] = self.rhs_fixed[i] - beta * self.load[i] + gamma * self.scratch[i];
            }
            let stats = solve_spd_into(&self.system, &self.rhs, &mut next, self.cfg.lin_tol, self.cfg.lin_max_iter)?;
            linear_iterations += stats.iterations;

            for i in 0..self.scratch.len() {
                self.scratch[i] = next[i] - current[i];
            }
            let residual = self.mass.quadratic_form(&self.scratch).max(0.0).sqrt();
            sweep_residuals.push(residual);
            std::mem::swap(&mut current, &mut next);
            next.copy_from_slice(&current);

            if residual <= self.cfg.fp_tol {
                break;
            }
            if sweep_residuals.len() >= self.cfg.fp_max_iter || !residual.is_finite() {
                return Err(Error::FixedPoint { iterations: sweep_residuals.len(), residual });
            }
        }

        let energy_after = self.energy(&current);
        let dissipation = self.dissipation_terms(&current, s_prev);
        let report = StepReport {
            fp_iterations: sweep_residuals.len(),
            converged: true,
            energy_before,
            energy_after,
            dissipation_identity_residual: (energy_after - energy_before + dissipation).abs(),
            sweep_residuals,
            linear_iterations,
        };
        Ok((NodalField::new(self.mesh, current)?, report))
    }

    /// Applies `n_steps` steps, calling `observer(n, t_n, S^n, report)` after each.
    pub fn advance<F>(&mut self, s0: &NodalField, n_steps: usize, mut observer: F) -> Result<NodalField>
    where
        F: FnMut(usize, f64, &NodalField, &StepReport),
    {
        check_len(self.mesh, s0)?;
        let mut state = s0.clone();
        let mut e = self.energy(&state);
        for n in 1..=n_steps {
            let (next, report) =
                self.step_from(&state, e).map_err(|source| Error::Step { step: n, source: Box::new(source) })?;
            e = report.energy_after;
            observer(n, n as f64 * self.cfg.tau, &next, &report);
            state = next;
        }
        Ok(state)
    }

    /// `|E(S^n) - E(S^{n-1}) + tau (c dS, dS) + alpha/2 |grad(S^n - S^{n-1})|^2|`.
    pub fn dissipation_identity_residual(&mut self, s_new: &[f64], s_prev: &[f64]) -> Result<f64> {
        check_len(self.mesh, s_new)?;
        check_len(self.mesh, s_prev)?;
        self.freeze_mobility(s_prev);
        let delta = self.energy(s_new) - self.energy(s_prev);
        Ok((delta + self.dissipation_terms(s_new, s_prev)).abs())
    }
}

pub fn fixed_point_step(
    mesh: &Mesh,
    s_prev: &NodalField,
    p: &ModelParams,
    cfg: &StepConfig,
) -> Result<(NodalField, StepReport)> {
    Stepper::new(mesh, *p, *cfg)?.step(s_prev)
}

pub fn advance<F>(
    mesh: &Mesh,
    s0: &NodalField,
    p: &ModelParams,
    cfg: &StepConfig,
    n_steps: usize,
    observer: F,
) -> Result<NodalField>
where
    F: FnMut(usize, f64, &NodalField, &StepReport),
{
    Stepper::new(mesh, *p, *cfg)?.advance(s0, n_steps, observer)
}

pub fn dissipation_identity_residual(
    mesh: &Mesh,
    s_new: &[f64],
    s_prev: &[f64],
    p: &ModelParams,
    tau: f64,
) -> Result<f64> {
    Stepper::new(mesh, *p, StepConfig::with_tau(tau))?.dissipation_identity_residual(s_new, s_prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_secant_load, assemble_stiffness, assemble_weighted_mass, gradient_norms};
    use crate::mesh::{build_interval_mesh, build_rect_mesh};
    use crate::model::{allen_cahn_params, hybrid_params};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn ac() -> ModelParams {
        allen_cahn_params(0.1, 0.1, 2f64.sqrt() / 3.0, 0.0).unwrap()
    }

    #[test]
    fn zero_state_is_fixed_in_one_sweep() {
        let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let s0 = NodalField::constant(&mesh, 0.0);
        let (s1, rep) = fixed_point_step(&mesh, &s0, &ac(), &StepConfig::default()).unwrap();
        assert_eq!(rep.fp_iterations, 1);
        assert!(s1.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn half_state_is_preserved() {
        let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let s0 = NodalField::constant(&mesh, 0.5);
        for tau in [1e-3, 0.1] {
            for p in [ac(), hybrid_params(0.1, 0.01, 0.0).unwrap()] {
                let (s1, _) = fixed_point_step(&mesh, &s0, &p, &StepConfig::with_tau(tau)).unwrap();
                assert!(s1.iter().all(|v| (v - 0.5).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn step_solves_the_nonlinear_system() {
        // Substitute the result back into the scheme's residual.
        let mesh = build_interval_mesh(0.0, 1.0, 2).unwrap();
        let s_prev = NodalField::new(&mesh, vec![0.0, 1.0, 0.0]).unwrap();
        let cfg = StepConfig::with_tau(1e-3);
        for p in [ac(), hybrid_params(0.1, 0.01, 0.3).unwrap()] {
            let (s, _) = fixed_point_step(&mesh, &s_prev, &p, &cfg).unwrap();
            let w: Vec<f64> = gradient_norms(&mesh, &s_prev).iter().map(|g| p.mobility.value(*g)).collect();
            let mc = assemble_weighted_mass(&mesh, &w).unwrap();
            let k = assemble_stiffness(&mesh);
            let load = assemble_secant_load(&mesh, &s, &s_prev, &p.potential, 4).unwrap();
            let d: Vec<f64> = s.iter().zip(s_prev.iter()).map(|(a, b)| (a - b) / cfg.tau).collect();
            let r1 = mc.mul_vec(&d);
            let r2 = k.mul_vec(&s);
            let res: Vec<f64> = (0..3).map(|i| r1[i] + p.alpha * r2[i] + p.beta * load[i]).collect();
            let norm = crate::sparse::norm(&res);
            assert!(norm <= 10.0 * cfg.fp_tol / cfg.tau, "residual {norm}");
        }
    }

    #[test]
    fn advance_zero_steps_is_identity() {
        let mesh = build_interval_mesh(-1.0, 1.0, 8).unwrap();
        let s0 = NodalField::interpolate(&mesh, |p| (p[0] > 0.0) as u8 as f64);
        let mut calls = 0;
        let out = advance(&mesh, &s0, &ac(), &StepConfig::default(), 0, |_, _, _, _| calls += 1).unwrap();
        assert_eq!(out, s0);
        assert_eq!(calls, 0);
    }

    #[test]
    fn pure_phase_is_an_equilibrium() {
        let mesh = build_rect_mesh(-1.0, 1.0, -1.0, 1.0, 6, 6).unwrap();
        for v in [0.0, 1.0] {
            let s0 = NodalField::constant(&mesh, v);
            let out = advance(&mesh, &s0, &ac(), &StepConfig::default(), 5, |_, _, s, _| {
                assert!(s.iter().all(|x| *x == v));
            })
            .unwrap();
            assert!(out.iter().all(|x| *x == v));
        }
    }

    #[test]
    fn observer_called_in_order() {
        let mesh = build_interval_mesh(-3.0, 3.0, 60).unwrap();
        let s0 = NodalField::interpolate(&mesh, |p| (p[0].abs() <= 1.5) as u8 as f64);
        let cfg = StepConfig::with_tau(1e-3);
        let mut seen = Vec::new();
        let mut energies = vec![];
        advance(&mesh, &s0, &ac(), &cfg, 20, |n, t, _, r| {
            seen.push((n, t));
            energies.push((r.energy_before, r.energy_after));
        })
        .unwrap();
        assert_eq!(seen.len(), 20);
        for (k, (n, t)) in seen.iter().enumerate() {
            assert_eq!(*n, k + 1);
            assert_eq!(*t, (k + 1) as f64 * 1e-3);
        }
        for w in energies.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }

    #[test]
    fn dissipation_residual_exact_for_identical_states() {
        let mesh = build_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let s = NodalField::interpolate(&mesh, |p| p[0] * p[1]);
        let r = dissipation_identity_residual(&mesh, &s, &s, &ac(), 1e-3).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn dissipation_residual_tight_and_sensitive() {
        let mesh = build_rect_mesh(-1.5, 1.5, -1.5, 1.5, 16, 16).unwrap();
        let s0 = NodalField::interpolate(&mesh, |p| (p[0] * p[0] + p[1] * p[1] < 1.0) as u8 as f64);
        let cfg = StepConfig { fp_tol: 1e-12, lin_tol: 1e-12, ..StepConfig::default() };
        for p in [ac(), hybrid_params(0.1, 0.01, 0.0).unwrap()] {
            let (s1, rep) = fixed_point_step(&mesh, &s0, &p, &cfg).unwrap();
            let r = dissipation_identity_residual(&mesh, &s1, &s0, &p, cfg.tau).unwrap();
            assert!((r - rep.dissipation_identity_residual).abs() < 1e-12);
            assert!(r <= 1e-8 * rep.energy_before.abs(), "residual {r} energy {}", rep.energy_before);

            let mut rng = StdRng::seed_from_u64(1);
            let noisy: Vec<f64> = s1.iter().map(|v| v + rng.gen_range(-1e-3..1e-3)).collect();
            let rn = dissipation_identity_residual(&mesh, &noisy, &s0, &p, cfg.tau).unwrap();
            assert!(rn > r);
        }
    }

    #[test]
    fn energy_decreases_and_sweeps_contract() {
        let mesh = build_rect_mesh(-3.0, 3.0, -3.0, 3.0, 24, 24).unwrap();
        let s0 = NodalField::interpolate(&mesh, |p| (p[0] * p[0] + p[1] * p[1] < 2.25) as u8 as f64);
        let cfg = StepConfig::default();
        for p in [ac(), hybrid_params(0.1, 0.01, 0.0).unwrap()] {
            advance(&mesh, &s0, &p, &cfg, 50, |n, _, _, r| {
                let slack = 1e-8 * r.energy_before.abs().max(1.0);
                assert!(r.energy_after <= r.energy_before + slack, "step {n}");
                for w in r.sweep_residuals[1..].windows(2) {
                    assert!(w[1] < w[0], "step {n}: {:?}", r.sweep_residuals);
                }
            })
            .unwrap();
        }
    }

    #[test]
    fn reports_fixed_point_failure() {
        let mesh = build_interval_mesh(-3.0, 3.0, 30).unwrap();
        let s0 = NodalField::interpolate(&mesh, |p| (p[0].abs() <= 1.5) as u8 as f64);
        let cfg = StepConfig { fp_max_iter: 1, ..StepConfig::default() };
        let err = advance(&mesh, &s0, &ac(), &cfg, 3, |_, _, _, _| {}).unwrap_err();
        match err {
            Error::Step { step, source } => {
                assert_eq!(step, 1);
                assert!(matches!(*source, Error::FixedPoint { iterations: 1, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let mesh = build_interval_mesh(0.0, 1.0, 4).unwrap();
        let bad = [
            StepConfig { tau: 0.0, ..StepConfig::default() },
            StepConfig { gamma: Some(-1.0), ..StepConfig::default() },
            StepConfig { fp_tol: 0.0, ..StepConfig::default() },
            StepConfig { fp_max_iter: 0, ..StepConfig::default() },
        ];
        for cfg in bad {
            assert!(Stepper::new(&mesh, ac(), cfg).is_err());
        }
    }

    #[test]
    fn mass_helper_consistency() {
        let mesh = build_interval_mesh(0.0, 2.0, 4).unwrap();
        let st = Stepper::new(&mesh, ac(), StepConfig::default()).unwrap();
        let m = assemble_mass(&mesh);
        assert_eq!(st.mass.values(), m.values());
    }
}
