//! Step-size-free ascent on `U_s` and an Armijo ascent on the unitary group.
//!
//! Each outer iteration of [`optimize_us`] projects the Euclidean gradient onto
//! the tangent space, eigendecomposes the real symmetric coordinate `R` to get
//! the geodesic frame `Q_R = Q V_R`, then optimizes the diagonal phases of
//! `Q_R diag(e^{j φ}) Q_R^T` one coordinate at a time. There is no step size:
//! the phases are chosen directly. The sweep starts from `φ = 0`, which
//! reproduces the current iterate, and only accepts improvements, so the
//! objective never decreases.

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, re_inner, unitarity_residual, CMat};
use crate::manifold::{project_tangent, GeodesicFrame, TangentDirection, UPoint, UsPoint, DRIFT_GUARD};

/// A smooth real objective over square complex matrices.
///
/// `euclid_grad` follows the conjugate-Wirtinger convention used for
/// log-det rates: the directional derivative of `value` along `B` is
/// `2 Re tr(J^H B)`.
pub trait Objective {
    fn value(&self, u: &CMat) -> f64;

    fn euclid_grad(&self, u: &CMat) -> CMat;

    /// Restriction of the objective to the phases of a geodesic frame.
    ///
    /// The default samples `value` directly; objectives with a closed-form
    /// per-phase maximizer override this.
    fn phase_model<'a>(&'a self, frame: &'a GeodesicFrame, phases: &[f64]) -> Box<dyn PhaseModel + 'a> {
        Box::new(SampledPhaseModel::new(self, frame, phases))
    }
}

/// The objective as a function of the phases `φ` of `Q_R diag(e^{j φ}) Q_R^T`.
pub trait PhaseModel {
    fn phases(&self) -> &[f64];

    /// Objective at the current phases.
    fn value(&self) -> f64;

    /// Objective with phase `m` replaced by `phase`, all others unchanged.
    fn value_with(&self, m: usize, phase: f64) -> f64;

    fn set_phase(&mut self, m: usize, phase: f64);

    /// Exact maximizer over phase `m`, if the objective has one in closed form.
    fn best_phase(&self, _m: usize) -> Option<f64> {
        None
    }
}

/// Generic [`PhaseModel`] that evaluates the objective on the full matrix.
pub struct SampledPhaseModel<'a, O: ?Sized> {
    objective: &'a O,
    frame: &'a GeodesicFrame,
    phases: Vec<f64>,
    current: CMat,
}

impl<'a, O: Objective + ?Sized> SampledPhaseModel<'a, O> {
    pub fn new(objective: &'a O, frame: &'a GeodesicFrame, phases: &[f64]) -> Self {
        Self { objective, frame, phases: phases.to_vec(), current: frame.matrix_at(phases) }
    }

    fn matrix_with(&self, m: usize, phase: f64) -> CMat {
        // rank-one change of column m
        let q = self.frame.basis().column(m);
        let delta = Complex64::from_polar(1.0, phase) - Complex64::from_polar(1.0, self.phases[m]);
        &self.current + (q * q.transpose()) * delta
    }
}

impl<O: Objective + ?Sized> PhaseModel for SampledPhaseModel<'_, O> {
    fn phases(&self) -> &[f64] {
        &self.phases
    }

    fn value(&self) -> f64 {
        self.objective.value(&self.current)
    }

    fn value_with(&self, m: usize, phase: f64) -> f64 {
        self.objective.value(&self.matrix_with(m, phase))
    }

    fn set_phase(&mut self, m: usize, phase: f64) {
        self.current = self.matrix_with(m, phase);
        self.phases[m] = phase;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Stop once `|F_k - F_{k-1}| < epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Passes over all phases per outer iteration.
    pub sweeps_per_iter: usize,
    /// Grid size of the scalar search used without a closed-form phase update.
    pub fallback_grid: usize,
    /// Finite-difference check of the gradient at the starting point.
    pub check_gradient: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3, max_iters: 100, sweeps_per_iter: 1, fallback_grid: 360, check_gradient: false }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 || self.sweeps_per_iter == 0 || self.fallback_grid < 3 {
            return Err(Error::InvalidInput(
                "max_iters and sweeps_per_iter must be >= 1 and fallback_grid >= 3".into(),
            ));
        }
        Ok(())
    }
}

/// Armijo backtracking constants for [`optimize_u_armijo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoParams {
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_increase: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self { initial_step: 1.0, contraction: 0.5, sufficient_increase: 1e-4, max_backtracks: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    /// Objective after the iteration.
    pub value: f64,
    /// Norm of the tangent direction the iteration started from.
    pub grad_norm: f64,
    pub wall_ms: f64,
    /// Phase sweeps (geodesic method) or backtracking steps (Armijo).
    pub inner_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub initial_value: f64,
    pub records: Vec<IterRecord>,
    pub status: Status,
    /// Riemannian gradient norm at the returned point.
    pub final_grad_norm: f64,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// `F_0, F_1, ..., F_K`.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(self.initial_value).chain(self.records.iter().map(|r| r.value)).collect()
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(self.initial_value, |r| r.value)
    }

    pub fn is_monotone(&self) -> bool {
        self.values().windows(2).all(|w| w[1] >= w[0])
    }

    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Maximizes a 2π-periodic function: uniform grid over (-π, π], then a
/// golden-section refinement around the best grid point.
pub fn maximize_periodic(f: impl Fn(f64) -> f64, grid: usize) -> (f64, f64) {
    use std::f64::consts::PI;
    let step = 2.0 * PI / grid as f64;
    let (mut best_x, mut best_f) = (PI, f(PI));
    for i in 1..grid {
        let x = -PI + step * i as f64;
        let v = f(x);
        if v > best_f {
            best_x = x;
            best_f = v;
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_x - step, best_x + step);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let (x, v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if v > best_f {
        (wrap_phase(x), v)
    } else {
        (best_x, best_f)
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Result of [`phase_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub phases: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
}

/// Coordinate ascent over the frame phases, ascending index, each coordinate
/// maximized with the others held at their latest values. A coordinate update
/// is kept only if it strictly improves the objective.
pub fn phase_sweep<O: Objective + ?Sized>(
    objective: &O,
    frame: &GeodesicFrame,
    theta0: &[f64],
    cfg: &OptimizerConfig,
) -> SweepOutcome {
    let mut model = objective.phase_model(frame, theta0);
    let mut current = model.value();
    let n = theta0.len();
    let mut sweeps = 0;
    for _ in 0..cfg.sweeps_per_iter {
        sweeps += 1;
        let start = current;
        for m in 0..n {
            let candidate = match model.best_phase(m) {
                Some(phi) => phi,
                None => maximize_periodic(|phi| model.value_with(m, phi), cfg.fallback_grid).0,
            };
            let v = model.value_with(m, candidate);
            if v > current {
                model.set_phase(m, candidate);
                current = v;
            }
        }
        if current - start < cfg.epsilon * 1e-3 {
            break;
        }
    }
    SweepOutcome { phases: model.phases().to_vec(), value: current, sweeps }
}

/// Finite-difference audit of an objective's gradient along one tangent direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Compares `2 Re tr(J^H B)` with a central difference along the geodesic
/// through `point` with unit-norm initial velocity `B = j Q R Q^T`.
/// The step is `1e-6 ||U||_F`.
pub fn check_gradient<O: Objective + ?Sized>(
    objective: &O,
    point: &UsPoint,
    dir: &TangentDirection,
) -> Result<GradientCheck> {
    let norm = dir.norm();
    if norm == 0.0 {
        return Err(Error::InvalidInput("gradient check needs a nonzero direction".into()));
    }
    let unit = TangentDirection::new(dir.r() / norm)?;
    let b = unit.embed(point)?;
    let analytic = 2.0 * re_inner(&objective.euclid_grad(point.u()), &b);

    let frame = GeodesicFrame::new(point, &unit)?;
    let h = 1e-6 * point.u().norm();
    let plus = objective.value(&frame.matrix_at(&scaled(frame.theta(), h)));
    let minus = objective.value(&frame.matrix_at(&scaled(frame.theta(), -h)));
    let numeric = (plus - minus) / (2.0 * h);

    let scale = analytic.abs().max(numeric.abs()).max(f64::MIN_POSITIVE);
    Ok(GradientCheck { analytic, numeric, rel_err: (analytic - numeric).abs() / scale })
}

fn scaled(theta: &[f64], mu: f64) -> Vec<f64> {
    theta.iter().map(|t| t * mu).collect()
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// The geodesic phase ascent on `U_s`.
///
/// Returns the final point and a trace whose values never decrease. Reaching
/// `max_iters` is reported through [`Status::MaxIters`], not as an error.
pub fn optimize_us<O: Objective + ?Sized>(
    objective: &O,
    start: &UsPoint,
    cfg: &OptimizerConfig,
) -> Result<(UsPoint, IterationTrace)> {
    cfg.validate()?;
    let n = start.dim();
    if cfg.check_gradient {
        audit_gradient(objective, start)?;
    }

    let mut point = start.clone();
    let initial_value = objective.value(point.u());
    let mut f_prev = initial_value;
    let mut records = Vec::new();
    let mut status = Status::MaxIters;

    for k in 1..=cfg.max_iters {
        let t0 = Instant::now();
        let grad = objective.euclid_grad(point.u());
        let dir = project_tangent(&point, &grad)?;
        let frame = GeodesicFrame::new(&point, &dir)?;
        let sweep = phase_sweep(objective, &frame, &vec![0.0; n], cfg);
        let candidate = frame.point_at(&sweep.phases)?.guarded()?;
        let f_new = objective.value(candidate.u());

        // a rounding-level decrease means no further progress is possible
        let improved = f_new >= f_prev;
        let value = if improved { f_new } else { f_prev };
        if improved {
            point = candidate;
        }
        records.push(IterRecord { k, value, grad_norm: dir.norm(), wall_ms: ms_since(t0), inner_steps: sweep.sweeps });
        let done = !improved || (value - f_prev).abs() < cfg.epsilon;
        f_prev = value;
        if done {
            status = Status::Converged;
            break;
        }
    }

    let final_grad_norm = project_tangent(&point, &objective.euclid_grad(point.u()))?.norm();
    Ok((point, IterationTrace { initial_value, records, status, final_grad_norm }))
}

fn audit_gradient<O: Objective + ?Sized>(objective: &O, point: &UsPoint) -> Result<()> {
    let n = point.dim();
    let r = crate::sample::symmetric_rmat(n, &mut crate::sample::rng(0x5eed));
    let check = check_gradient(objective, point, &TangentDirection::new(r)?)?;
    if check.rel_err > 1e-5 {
        return Err(Error::Contract(format!(
            "gradient inconsistent with objective: analytic {:.6e}, finite difference {:.6e}",
            check.analytic, check.numeric
        )));
    }
    Ok(())
}

/// Riemannian gradient ascent on the unitary group with Armijo backtracking
/// along `U exp(t S)`, `S = (U^H J - J^H U) / 2`.
pub fn optimize_u_armijo<O: Objective + ?Sized>(
    objective: &O,
    start: &UPoint,
    cfg: &OptimizerConfig,
    armijo: &ArmijoParams,
) -> Result<(UPoint, IterationTrace)> {
    cfg.validate()?;
    let mut point = start.clone();
    let initial_value = objective.value(point.u());
    let mut f_prev = initial_value;
    let mut records = Vec::new();
    let mut status = Status::MaxIters;

    for k in 1..=cfg.max_iters {
        let t0 = Instant::now();
        let s = point.project_tangent(&objective.euclid_grad(point.u()))?;
        let s_norm = s.norm();
        // directional derivative along U S is 2 ||S||^2
        let slope = 2.0 * s_norm * s_norm;
        if slope == 0.0 {
            records.push(IterRecord { k, value: f_prev, grad_norm: 0.0, wall_ms: ms_since(t0), inner_steps: 0 });
            status = Status::Converged;
            break;
        }

        let mut step = armijo.initial_step;
        let mut accepted = None;
        let mut backtracks = 0;
        loop {
            let cand = point.geodesic(&s, step)?;
            let f_cand = objective.value(cand.u());
            if f_cand >= f_prev + armijo.sufficient_increase * step * slope {
                accepted = Some((cand, f_cand));
                break;
            }
            if backtracks == armijo.max_backtracks {
                break;
            }
            backtracks += 1;
            step *= armijo.contraction;
        }

        let Some((cand, f_new)) = accepted else {
            records.push(IterRecord { k, value: f_prev, grad_norm: s_norm, wall_ms: ms_since(t0), inner_steps: backtracks });
            status = Status::LineSearchFailed;
            break;
        };
        point = if unitarity_residual(cand.u()) > DRIFT_GUARD { reunitarize(&cand)? } else { cand };
        records.push(IterRecord { k, value: f_new, grad_norm: s_norm, wall_ms: ms_since(t0), inner_steps: backtracks });
        let done = (f_new - f_prev).abs() < cfg.epsilon;
        f_prev = f_new;
        if done {
            status = Status::Converged;
            break;
        }
    }

    let final_grad_norm = point.project_tangent(&objective.euclid_grad(point.u()))?.norm();
    Ok((point, IterationTrace { initial_value, records, status, final_grad_norm }))
}

/// Nearest unitary `F G^H` from the SVD.
fn reunitarize(p: &UPoint) -> Result<UPoint> {
    let s = crate::linalg::svd(p.u())?;
    UPoint::new(&s.f * s.g.adjoint())
}

/// `f(U) = Re(tr U)`; handy for analytic checks (maximum at `U = I`).
#[derive(Debug, Clone, Copy, Default)]
pub struct RealTrace;

impl Objective for RealTrace {
    fn value(&self, u: &CMat) -> f64 {
        u.trace().re
    }

    fn euclid_grad(&self, u: &CMat) -> CMat {
        CMat::identity(u.nrows(), u.ncols()) * c(0.5, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{rng, symmetric_rmat};

    struct Constant;

    impl Objective for Constant {
        fn value(&self, _u: &CMat) -> f64 {
            2.5
        }
        fn euclid_grad(&self, u: &CMat) -> CMat {
            CMat::zeros(u.nrows(), u.ncols())
        }
    }

    /// Phase surrogate `Σ cos(φ_m - a_m)`; only the phase model matters.
    struct Separable(Vec<f64>);

    struct SeparableModel<'a> {
        targets: &'a [f64],
        phases: Vec<f64>,
    }

    impl PhaseModel for SeparableModel<'_> {
        fn phases(&self) -> &[f64] {
            &self.phases
        }
        fn value(&self) -> f64 {
            self.phases.iter().zip(self.targets).map(|(p, a)| (p - a).cos()).sum()
        }
        fn value_with(&self, m: usize, phase: f64) -> f64 {
            let mut p = self.phases.clone();
            p[m] = phase;
            p.iter().zip(self.targets).map(|(p, a)| (p - a).cos()).sum()
        }
        fn set_phase(&mut self, m: usize, phase: f64) {
            self.phases[m] = phase;
        }
    }

    impl Objective for Separable {
        fn value(&self, _u: &CMat) -> f64 {
            0.0
        }
        fn euclid_grad(&self, u: &CMat) -> CMat {
            CMat::zeros(u.nrows(), u.ncols())
        }
        fn phase_model<'a>(&'a self, _frame: &'a GeodesicFrame, phases: &[f64]) -> Box<dyn PhaseModel + 'a> {
            Box::new(SeparableModel { targets: &self.0, phases: phases.to_vec() })
        }
    }

    #[test]
    fn wrap_phase_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_phase(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn periodic_search_finds_cosine_peak() {
        for a in [-3.0, -1.2, 0.0, 0.7, 3.1] {
            let (x, v) = maximize_periodic(|x: f64| (x - a).cos(), 360);
            assert!((wrap_phase(x - a)).abs() < 1e-6, "a = {a}, x = {x}");
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_objective_stops_after_one_iteration() {
        let u0 = UsPoint::random(4, 3).unwrap();
        let (u, trace) = optimize_us(&Constant, &u0, &OptimizerConfig::default()).unwrap();
        assert_eq!(trace.iterations(), 1);
        assert!(trace.converged());
        assert!((u.u() - u0.u()).norm() < 1e-12);
    }

    #[test]
    fn sweep_on_flat_objective_keeps_start() {
        let u0 = UsPoint::random(3, 3).unwrap();
        let fr = GeodesicFrame::new(&u0, &TangentDirection::new(symmetric_rmat(3, &mut rng(1))).unwrap()).unwrap();
        let theta0 = [0.3, -0.2, 1.0];
        let out = phase_sweep(&Constant, &fr, &theta0, &OptimizerConfig::default());
        assert_eq!(out.phases, theta0.to_vec());
    }

    #[test]
    fn sweep_on_separable_objective_hits_targets() {
        let targets = vec![0.4, -2.0, 2.9, -0.1];
        let obj = Separable(targets.clone());
        let fr = GeodesicFrame::from_parts(CMat::identity(4, 4), vec![0.0; 4]).unwrap();
        let out = phase_sweep(&obj, &fr, &[0.0; 4], &OptimizerConfig::default());
        for (p, a) in out.phases.iter().zip(&targets) {
            assert!(wrap_phase(p - a).abs() < 2.0 * std::f64::consts::PI / 360.0);
        }
    }

    #[test]
    fn scalar_real_part_converges_to_one() {
        for seed in 0..10 {
            let u0 = UsPoint::random(1, seed).unwrap();
            let (u, trace) = optimize_us(&RealTrace, &u0, &OptimizerConfig::default()).unwrap();
            assert!((u.u()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-3, "seed {seed}");
            assert!(trace.is_monotone());
            assert!(trace.final_grad_norm < 1e-4, "stationarity {}", trace.final_grad_norm);
        }
    }

    #[test]
    fn real_trace_gradient_is_consistent() {
        let p = UsPoint::random(4, 8).unwrap();
        let d = TangentDirection::new(symmetric_rmat(4, &mut rng(9))).unwrap();
        let chk = check_gradient(&RealTrace, &p, &d).unwrap();
        assert!(chk.rel_err < 1e-6, "{chk:?}");
    }

    #[test]
    fn gradient_audit_catches_wrong_gradient() {
        struct Wrong;
        impl Objective for Wrong {
            fn value(&self, u: &CMat) -> f64 {
                u.trace().re
            }
            fn euclid_grad(&self, u: &CMat) -> CMat {
                CMat::identity(u.nrows(), u.ncols()) * c(0.0, 3.0)
            }
        }
        let cfg = OptimizerConfig { check_gradient: true, ..Default::default() };
        let u0 = UsPoint::random(3, 1).unwrap();
        assert!(matches!(optimize_us(&Wrong, &u0, &cfg), Err(Error::Contract(_))));
        assert!(optimize_us(&RealTrace, &u0, &cfg).is_ok());
    }

    #[test]
    fn armijo_zero_gradient_returns_start() {
        let u0 = UPoint::random(3, 2).unwrap();
        let (u, trace) = optimize_u_armijo(&Constant, &u0, &OptimizerConfig::default(), &ArmijoParams::default()).unwrap();
        assert_eq!(trace.iterations(), 1);
        assert!(trace.converged());
        assert_eq!(u.u(), u0.u());
    }

    #[test]
    fn armijo_scalar_converges_to_one() {
        let cfg = OptimizerConfig { epsilon: 1e-10, ..Default::default() };
        for seed in 0..5 {
            let u0 = UPoint::random(1, seed).unwrap();
            let (u, trace) = optimize_u_armijo(&RealTrace, &u0, &cfg, &ArmijoParams::default()).unwrap();
            assert!((u.u()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-3, "seed {seed}: {}", u.u()[(0, 0)]);
            assert!(trace.is_monotone());
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { max_iters: 0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig::default().validate().is_ok());
    }
}
