//! Rate maximization for a MIMO link assisted by a fully connected BD-RIS.
//!
//! The equivalent channel is `H_eq = H_d + F Θ G^H` with `Θ` unitary and
//! symmetric (`M x M`). The objective is `ln det(I + ρ H_eq H_eq^H)` in nats,
//! with Euclidean gradient `J = ρ F^H E^{-1} H_eq G`, `E = I + ρ H_eq H_eq^H`.
//!
//! Along a geodesic frame the channel is `H_d + Σ_m e^{j φ_m} u_m w_m^T` with
//! `u_m = F q_m`, `w_m = G^* q_m`. Holding all but one phase fixed leaves a
//! rank-two update of a Hermitian matrix, so by the determinant lemma
//!
//! ```text
//! ln det E(φ) = ln det M + ln(|1 + α e^{jφ}|² - κ)
//! ```
//!
//! and the maximizer is `φ = -arg α` (see [`SinglePhase`]).

use nalgebra::{Cholesky, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, ensure_finite, CMat};
use crate::manifold::{retract, GeodesicFrame, UPoint, UsPoint};
use crate::optimizer::{self, ArmijoParams, IterationTrace, Objective, OptimizerConfig, PhaseModel};
use crate::sample::{self, gaussian_cmat};

pub type CVec = DVector<Complex64>;

/// Geometry and link budget of one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nt: usize,
    pub nr: usize,
    /// Number of BD-RIS elements.
    pub m: usize,
    pub tx_pos: [f64; 3],
    pub rx_pos: [f64; 3],
    pub ris_pos: [f64; 3],
    /// Rician K-factor (linear) of both RIS links.
    pub k_rician: f64,
    pub alpha_ris: f64,
    pub alpha_direct: f64,
    /// Transmit SNR `P / σ²` (linear), before path loss.
    pub rho: f64,
    /// Path loss at 1 m, dB.
    pub pl0_db: f64,
    pub direct_blocked: bool,
}

impl Scenario {
    /// 4x4 link, Tx at (0,0,1.5), Rx at (50,0,1.5), BD-RIS at (50,3,3), K = 3,
    /// RIS exponent 2, direct exponent 3.75, 30 dB reference loss, 110 dB SNR.
    pub fn reference(m: usize) -> Self {
        Self {
            nt: 4,
            nr: 4,
            m,
            tx_pos: [0.0, 0.0, 1.5],
            rx_pos: [50.0, 0.0, 1.5],
            ris_pos: [50.0, 3.0, 3.0],
            k_rician: 3.0,
            alpha_ris: 2.0,
            alpha_direct: 3.75,
            rho: db_to_linear(110.0),
            pl0_db: 30.0,
            direct_blocked: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt == 0 || self.nr == 0 || self.m == 0 {
            return Err(Error::InvalidInput("antenna and element counts must be >= 1".into()));
        }
        if !(self.rho > 0.0) || !(self.alpha_ris > 0.0) || !(self.alpha_direct > 0.0) {
            return Err(Error::InvalidInput("rho and path-loss exponents must be positive".into()));
        }
        if !(self.k_rician >= 0.0) {
            return Err(Error::InvalidInput("Rician factor must be nonnegative".into()));
        }
        Ok(())
    }

    /// `(Tx-RIS, RIS-Rx, Tx-Rx)` distances in meters.
    pub fn distances(&self) -> (f64, f64, f64) {
        (
            distance(&self.tx_pos, &self.ris_pos),
            distance(&self.ris_pos, &self.rx_pos),
            distance(&self.tx_pos, &self.rx_pos),
        )
    }

    /// Linear power gain `10^{-pl0/10} d^{-α}`.
    pub fn path_gain(&self, d: f64, alpha: f64) -> f64 {
        db_to_linear(-self.pl0_db) * d.powf(-alpha)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn unit(from: &[f64; 3], to: &[f64; 3]) -> Result<[f64; 3]> {
    let d = distance(from, to);
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("coincident node positions {from:?}")));
    }
    Ok([(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d])
}

/// Tx and Rx arrays lie along the y axis; the RIS elements along the x axis.
const TERMINAL_AXIS: [f64; 3] = [0.0, 1.0, 0.0];
const RIS_AXIS: [f64; 3] = [1.0, 0.0, 0.0];

/// Half-wavelength ULA response toward unit direction `dir`.
fn steering(n: usize, axis: &[f64; 3], dir: &[f64; 3]) -> CVec {
    let cos = axis[0] * dir[0] + axis[1] * dir[1] + axis[2] * dir[2];
    CVec::from_fn(n, |k, _| Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 * cos))
}

/// Rank-one LOS matrix from node `a` (departure, `n_a` elements) to node `b`
/// (arrival, `n_b` elements); shape `n_b x n_a`.
fn los(n_b: usize, axis_b: &[f64; 3], n_a: usize, axis_a: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> Result<CMat> {
    let ab = unit(a, b)?;
    let ba = [-ab[0], -ab[1], -ab[2]];
    Ok(steering(n_b, axis_b, &ba) * steering(n_a, axis_a, &ab).adjoint())
}

/// The three channel matrices of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Direct link, `N_r x N_t`.
    pub hd: CMat,
    /// RIS to Rx, `N_r x M`.
    pub f: CMat,
    /// Tx to RIS, `N_t x M` (the link itself is `G^H`).
    pub g: CMat,
}

impl ChannelSet {
    pub fn new(hd: CMat, f: CMat, g: CMat) -> Result<Self> {
        let (nr, nt) = hd.shape();
        if f.nrows() != nr || g.nrows() != nt || f.ncols() != g.ncols() {
            return Err(Error::Dimension(format!(
                "inconsistent channels: Hd {:?}, F {:?}, G {:?}",
                hd.shape(),
                f.shape(),
                g.shape()
            )));
        }
        ensure_finite(&hd, "direct channel")?;
        ensure_finite(&f, "RIS-Rx channel")?;
        ensure_finite(&g, "Tx-RIS channel")?;
        Ok(Self { hd, f, g })
    }

    pub fn nr(&self) -> usize {
        self.hd.nrows()
    }

    pub fn nt(&self) -> usize {
        self.hd.ncols()
    }

    pub fn m(&self) -> usize {
        self.f.ncols()
    }

    pub fn direct_is_zero(&self) -> bool {
        self.hd.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    /// Same channels with the direct link removed.
    pub fn blocked(&self) -> Self {
        Self { hd: CMat::zeros(self.nr(), self.nt()), ..self.clone() }
    }
}

/// Draws one realization: Rician RIS links, Rayleigh direct link.
/// Deterministic per `(scenario, seed)`.
pub fn gen_channels(sc: &Scenario, seed: u64) -> Result<ChannelSet> {
    sc.validate()?;
    let (d_tr, d_rr, d_td) = sc.distances();
    let mut rng = sample::rng(seed);

    let los_weight = (sc.k_rician / (sc.k_rician + 1.0)).sqrt();
    let nlos_weight = (1.0 / (sc.k_rician + 1.0)).sqrt();
    let rician = |los: CMat, nlos: CMat, gain: f64| (los * c(los_weight, 0.0) + nlos * c(nlos_weight, 0.0)) * c(gain.sqrt(), 0.0);

    let f_los = los(sc.nr, &TERMINAL_AXIS, sc.m, &RIS_AXIS, &sc.ris_pos, &sc.rx_pos)?;
    let f = rician(f_los, gaussian_cmat(sc.nr, sc.m, &mut rng), sc.path_gain(d_rr, sc.alpha_ris));

    // physical Tx -> RIS link is M x Nt; G stores its Hermitian
    let t_los = los(sc.m, &RIS_AXIS, sc.nt, &TERMINAL_AXIS, &sc.tx_pos, &sc.ris_pos)?;
    let g = rician(t_los.adjoint(), gaussian_cmat(sc.nt, sc.m, &mut rng), sc.path_gain(d_tr, sc.alpha_ris));

    if !(d_td > 0.0) {
        return Err(Error::InvalidInput("Tx and Rx positions coincide".into()));
    }
    let hd_nlos = gaussian_cmat(sc.nr, sc.nt, &mut rng);
    let hd = if sc.direct_blocked {
        CMat::zeros(sc.nr, sc.nt)
    } else {
        hd_nlos * c(sc.path_gain(d_td, sc.alpha_direct).sqrt(), 0.0)
    };
    ChannelSet::new(hd, f, g)
}

/// `ln det` of a Hermitian positive definite matrix.
fn log_det_hpd(e: &CMat) -> f64 {
    match Cholesky::new(e.clone()) {
        Some(ch) => 2.0 * ch.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>(),
        None => {
            // only reachable for badly scaled inputs; the spectrum is still >= 1 in exact arithmetic
            let eig = crate::linalg::eig_hermitian(e).expect("Hermitian eigensolver");
            eig.values.iter().map(|l| l.max(f64::MIN_POSITIVE).ln()).sum()
        }
    }
}

/// `I + ρ H H^H`.
fn gram_plus_identity(h: &CMat, rho: f64) -> CMat {
    let nr = h.nrows();
    let mut e = h * h.adjoint() * c(rho, 0.0);
    for i in 0..nr {
        e[(i, i)] += c(1.0, 0.0);
    }
    // exact Hermitian symmetry for the factorization
    (&e + e.adjoint()) * c(0.5, 0.0)
}

/// Achievable-rate objective `ln det(I + ρ H_eq H_eq^H)`.
#[derive(Debug, Clone)]
pub struct RateObjective {
    channels: ChannelSet,
    rho: f64,
}

impl RateObjective {
    pub fn new(channels: ChannelSet, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidInput(format!("rho must be positive and finite, got {rho}")));
        }
        Ok(Self { channels, rho })
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    fn check_theta(&self, theta: &CMat) -> Result<()> {
        let m = self.channels.m();
        if theta.shape() != (m, m) {
            return Err(Error::Dimension(format!("BD-RIS matrix must be {m}x{m}, got {:?}", theta.shape())));
        }
        ensure_finite(theta, "BD-RIS matrix")
    }

    fn h_eq_unchecked(&self, theta: &CMat) -> CMat {
        &self.channels.hd + &self.channels.f * theta * self.channels.g.adjoint()
    }

    /// `H_d + F Θ G^H`.
    pub fn h_eq(&self, theta: &CMat) -> Result<CMat> {
        self.check_theta(theta)?;
        Ok(self.h_eq_unchecked(theta))
    }

    /// Rate in nats, via Cholesky of `I + ρ H_eq H_eq^H`.
    pub fn rate(&self, theta: &CMat) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.value(theta))
    }

    pub fn rate_bits(&self, theta: &CMat) -> Result<f64> {
        Ok(self.rate(theta)? / std::f64::consts::LN_2)
    }

    /// Rate of an arbitrary equivalent channel.
    pub fn rate_of_channel(&self, h: &CMat) -> f64 {
        log_det_hpd(&gram_plus_identity(h, self.rho))
    }

    /// `ρ F^H E^{-1} H_eq G`, with `E^{-1}` applied through Cholesky solves.
    pub fn gradient(&self, theta: &CMat) -> Result<CMat> {
        self.check_theta(theta)?;
        Ok(self.euclid_grad(theta))
    }

    /// Closed-form maximizer of phase `m` with the other phases held fixed.
    pub fn best_phase(&self, frame: &GeodesicFrame, phases: &[f64], m: usize) -> Result<f64> {
        if m >= frame.dim() || phases.len() != frame.dim() || frame.dim() != self.channels.m() {
            return Err(Error::Dimension("phase index or frame size out of range".into()));
        }
        let model = RatePhaseModel::new(self, frame, phases);
        model.single_phase(m).map(|sp| sp.argmax().unwrap_or(phases[m]))
    }
}

impl Objective for RateObjective {
    fn value(&self, theta: &CMat) -> f64 {
        self.rate_of_channel(&self.h_eq_unchecked(theta))
    }

    fn euclid_grad(&self, theta: &CMat) -> CMat {
        let h = self.h_eq_unchecked(theta);
        let e = gram_plus_identity(&h, self.rho);
        let e_inv_h = match Cholesky::new(e.clone()) {
            Some(ch) => ch.solve(&h),
            None => e.lu().solve(&h).expect("I + ρ H H^H is nonsingular"),
        };
        self.channels.f.adjoint() * e_inv_h * &self.channels.g * c(self.rho, 0.0)
    }

    fn phase_model<'a>(&'a self, frame: &'a GeodesicFrame, phases: &[f64]) -> Box<dyn PhaseModel + 'a> {
        Box::new(RatePhaseModel::new(self, frame, phases))
    }
}

/// One-phase subproblem `ln det E(φ) = ln det M + ln(|1 + α e^{jφ}|² - κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhase {
    pub alpha: Complex64,
    pub kappa: f64,
    /// `ln det M`.
    pub log_det_base: f64,
}

impl SinglePhase {
    /// Subproblem for `H(φ) = C + e^{jφ} u w^T`.
    pub fn new(c_mat: &CMat, u: &CVec, w: &CVec, rho: f64) -> Result<Self> {
        let nr = c_mat.nrows();
        if u.len() != nr || w.len() != c_mat.ncols() {
            return Err(Error::Dimension("rank-one factors do not match the channel".into()));
        }
        let w_sq = w.norm_squared();
        let mut base = (c_mat * c_mat.adjoint() + u * u.adjoint() * c(w_sq, 0.0)) * c(rho, 0.0);
        for i in 0..nr {
            base[(i, i)] += c(1.0, 0.0);
        }
        let base = (&base + base.adjoint()) * c(0.5, 0.0);
        let chol: Cholesky<Complex64, Dyn> = Cholesky::new(base)
            .ok_or_else(|| Error::Numerical("single-phase base matrix is not positive definite".into()))?;
        let c_tilde = c_mat * w.conjugate() * c(rho, 0.0);
        let m_inv_u = chol.solve(u);
        let m_inv_c = chol.solve(&c_tilde);
        let alpha = c_tilde.dotc(&m_inv_u);
        let kappa = c_tilde.dotc(&m_inv_c).re * u.dotc(&m_inv_u).re;
        let log_det_base = 2.0 * chol.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>();
        Ok(Self { alpha, kappa, log_det_base })
    }

    /// `|1 + α e^{jφ}|² - κ`, i.e. `det E(φ) / det M`; positive for every φ.
    pub fn gain(&self, phi: f64) -> f64 {
        (c(1.0, 0.0) + self.alpha * Complex64::from_polar(1.0, phi)).norm_sqr() - self.kappa
    }

    pub fn log_det_at(&self, phi: f64) -> f64 {
        self.log_det_base + self.gain(phi).ln()
    }

    /// `-arg α`, or `None` when the objective is flat in φ.
    pub fn argmax(&self) -> Option<f64> {
        (self.alpha.norm() >= 1e-14).then(|| optimizer::wrap_phase(-self.alpha.arg()))
    }
}

/// Phase model that keeps `H_eq` up to date with rank-one corrections.
struct RatePhaseModel<'a> {
    objective: &'a RateObjective,
    /// Columns of `F Q_R`.
    u: CMat,
    /// Columns of `G^* Q_R`.
    w: CMat,
    phases: Vec<f64>,
    h: CMat,
}

impl<'a> RatePhaseModel<'a> {
    fn new(objective: &'a RateObjective, frame: &GeodesicFrame, phases: &[f64]) -> Self {
        let ch = objective.channels();
        let u = &ch.f * frame.basis();
        let w = ch.g.conjugate() * frame.basis();
        let rot: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let h = &ch.hd + crate::linalg::scale_columns(&u, &rot) * w.transpose();
        Self { objective, u, w, phases: phases.to_vec(), h }
    }

    fn rank_one(&self, m: usize, coeff: Complex64) -> CMat {
        self.u.column(m) * self.w.column(m).transpose() * coeff
    }

    fn single_phase(&self, m: usize) -> Result<SinglePhase> {
        let rest = &self.h - self.rank_one(m, Complex64::from_polar(1.0, self.phases[m]));
        SinglePhase::new(&rest, &self.u.column(m).into_owned(), &self.w.column(m).into_owned(), self.objective.rho)
    }
}

impl PhaseModel for RatePhaseModel<'_> {
    fn phases(&self) -> &[f64] {
        &self.phases
    }

    fn value(&self) -> f64 {
        self.objective.rate_of_channel(&self.h)
    }

    fn value_with(&self, m: usize, phase: f64) -> f64 {
        let delta = Complex64::from_polar(1.0, phase) - Complex64::from_polar(1.0, self.phases[m]);
        self.objective.rate_of_channel(&(&self.h + self.rank_one(m, delta)))
    }

    fn set_phase(&mut self, m: usize, phase: f64) {
        let delta = Complex64::from_polar(1.0, phase) - Complex64::from_polar(1.0, self.phases[m]);
        self.h += self.rank_one(m, delta);
        self.phases[m] = phase;
    }

    fn best_phase(&self, m: usize) -> Option<f64> {
        let sp = self.single_phase(m).ok()?;
        let phi = sp.argmax().unwrap_or(self.phases[m]);
        debug_assert!(sp.gain(phi) > 0.0, "determinant ratio must stay positive");
        Some(phi)
    }
}

/// Low-cost baseline: `Π(F^H H_d G + (F^H H_d G)^T)`. Needs a direct link.
pub fn low_cost_bdris(ch: &ChannelSet) -> Result<UsPoint> {
    if ch.direct_is_zero() {
        return Err(Error::Inapplicable("low-cost design needs an unblocked direct link".into()));
    }
    let a = ch.f.adjoint() * &ch.hd * &ch.g;
    Ok(retract(&(&a + a.transpose()))?.point)
}

/// Baseline that ignores symmetry: Armijo ascent on the unitary group, then
/// the retraction `Π(Θ_u + Θ_u^T)`.
pub fn mo_u_proj_baseline(
    objective: &RateObjective,
    start: &UPoint,
    cfg: &OptimizerConfig,
    armijo: &ArmijoParams,
) -> Result<(UsPoint, IterationTrace)> {
    let (theta_u, trace) = optimizer::optimize_u_armijo(objective, start, cfg, armijo)?;
    let t = theta_u.u();
    let point = retract(&(t + t.transpose()))?.point;
    Ok((point, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::rng;

    fn scalar(z: Complex64) -> CMat {
        CMat::from_element(1, 1, z)
    }

    fn random_channels(nr: usize, nt: usize, m: usize, seed: u64) -> ChannelSet {
        let mut g = rng(seed);
        ChannelSet::new(gaussian_cmat(nr, nt, &mut g), gaussian_cmat(nr, m, &mut g), gaussian_cmat(nt, m, &mut g)).unwrap()
    }

    #[test]
    fn reference_distances() {
        let (a, b, d) = Scenario::reference(8).distances();
        assert!((a - (50f64.powi(2) + 9.0 + 2.25).sqrt()).abs() < 1e-12);
        assert!((a - 50.112).abs() < 1e-3);
        assert!((b - 3.354).abs() < 1e-3);
        assert_eq!(d, 50.0);
    }

    #[test]
    fn blocked_direct_link_is_exactly_zero() {
        let sc = Scenario { direct_blocked: true, ..Scenario::reference(8) };
        let ch = gen_channels(&sc, 3).unwrap();
        assert!(ch.direct_is_zero());
        assert_eq!(ch.f.shape(), (4, 8));
        assert_eq!(ch.g.shape(), (4, 8));
    }

    #[test]
    fn rician_limit_is_line_of_sight() {
        let sc = Scenario { k_rician: 1e12, ..Scenario::reference(6) };
        let ch = gen_channels(&sc, 1).unwrap();
        let (_, d_rr, _) = sc.distances();
        let los_f = los(sc.nr, &TERMINAL_AXIS, sc.m, &RIS_AXIS, &sc.ris_pos, &sc.rx_pos).unwrap()
            * c(sc.path_gain(d_rr, sc.alpha_ris).sqrt(), 0.0);
        assert!((&ch.f - &los_f).norm() < 1e-5 * los_f.norm());
    }

    #[test]
    fn channels_are_deterministic_and_coincident_nodes_fail() {
        let sc = Scenario::reference(4);
        assert_eq!(gen_channels(&sc, 5).unwrap(), gen_channels(&sc, 5).unwrap());
        assert_ne!(gen_channels(&sc, 5).unwrap(), gen_channels(&sc, 6).unwrap());
        let bad = Scenario { ris_pos: sc.rx_pos, ..sc };
        assert!(gen_channels(&bad, 1).is_err());
    }

    #[test]
    fn h_eq_trivial_cases() {
        let mut g = rng(2);
        let hd = gaussian_cmat(2, 2, &mut g);
        let ch = ChannelSet::new(hd.clone(), CMat::zeros(2, 3), gaussian_cmat(2, 3, &mut g)).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        assert_eq!(obj.h_eq(&CMat::identity(3, 3)).unwrap(), hd);

        let one = scalar(c(1.0, 0.0));
        let ch = ChannelSet::new(scalar(c(0.0, 0.0)), one.clone(), one).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        let z = Complex64::from_polar(1.0, 0.7);
        assert!((obj.h_eq(&scalar(z)).unwrap()[(0, 0)] - z).norm() < 1e-15);
        assert!(matches!(obj.h_eq(&CMat::identity(2, 2)), Err(Error::Dimension(_))));
    }

    #[test]
    fn h_eq_matches_triple_loop() {
        let ch = random_channels(2, 2, 3, 4);
        let theta = UsPoint::random(3, 4).unwrap().into_matrix();
        let obj = RateObjective::new(ch.clone(), 1.0).unwrap();
        let h = obj.h_eq(&theta).unwrap();
        for r in 0..2 {
            for t in 0..2 {
                let mut acc = ch.hd[(r, t)];
                for a in 0..3 {
                    for b in 0..3 {
                        acc += ch.f[(r, a)] * theta[(a, b)] * ch.g[(t, b)].conj();
                    }
                }
                assert!((acc - h[(r, t)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rate_trivial_and_spectral() {
        let ch = ChannelSet::new(CMat::zeros(2, 2), CMat::zeros(2, 3), CMat::zeros(2, 3)).unwrap();
        let obj = RateObjective::new(ch, 10.0).unwrap();
        assert_eq!(obj.rate(&CMat::identity(3, 3)).unwrap(), 0.0);

        let ch = ChannelSet::new(scalar(c(0.0, 0.0)), scalar(c(1.0, 0.0)), scalar(c(1.0, 0.0))).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        assert!((obj.rate(&scalar(c(1.0, 0.0))).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((obj.rate_bits(&scalar(c(1.0, 0.0))).unwrap() - 1.0).abs() < 1e-15);

        let ch = random_channels(4, 4, 6, 9);
        let obj = RateObjective::new(ch, 3.0).unwrap();
        let theta = UsPoint::random(6, 1).unwrap().into_matrix();
        let h = obj.h_eq(&theta).unwrap();
        let eig = crate::linalg::eig_hermitian(&(&h * h.adjoint())).unwrap();
        let oracle: f64 = eig.values.iter().map(|l| (1.0 + 3.0 * l).ln()).sum();
        assert!((obj.rate(&theta).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn rate_rejects_bad_inputs() {
        let mut hd = CMat::zeros(1, 1);
        hd[(0, 0)] = c(f64::NAN, 0.0);
        assert!(ChannelSet::new(hd, CMat::zeros(1, 1), CMat::zeros(1, 1)).is_err());
        let ch = random_channels(2, 2, 2, 1);
        assert!(RateObjective::new(ch.clone(), 0.0).is_err());
        let obj = RateObjective::new(ch, 1.0).unwrap();
        let mut theta = CMat::identity(2, 2);
        theta[(0, 1)] = c(f64::INFINITY, 0.0);
        assert!(obj.rate(&theta).is_err());
    }

    #[test]
    fn gradient_trivial_cases() {
        let mut g = rng(3);
        let ch = ChannelSet::new(gaussian_cmat(2, 2, &mut g), CMat::zeros(2, 4), gaussian_cmat(2, 4, &mut g)).unwrap();
        let obj = RateObjective::new(ch, 2.0).unwrap();
        assert_eq!(obj.gradient(&CMat::identity(4, 4)).unwrap(), CMat::zeros(4, 4));

        let ch = ChannelSet::new(scalar(c(0.0, 0.0)), scalar(c(1.0, 0.0)), scalar(c(1.0, 0.0))).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        let z = Complex64::from_polar(1.0, -1.1);
        assert!((obj.gradient(&scalar(z)).unwrap()[(0, 0)] - z / 2.0).norm() < 1e-15);
    }

    #[test]
    fn gradient_matches_retracted_finite_differences() {
        // (f(Π(Θ + hΔ)) - f(Π(Θ - hΔ))) / 2h along tangent Δ versus 2 Re tr(J^H Δ)
        let obj = RateObjective::new(random_channels(4, 4, 8, 12), 1.0).unwrap();
        let point = UsPoint::random(8, 2).unwrap();
        let j = obj.gradient(point.u()).unwrap();
        let mut g = rng(13);
        for _ in 0..20 {
            let r = crate::sample::symmetric_rmat(8, &mut g);
            let r = &r / r.norm();
            let delta = crate::manifold::TangentDirection::new(r).unwrap().embed(&point).unwrap();
            let h = 1e-6 * point.u().norm();
            let plus = retract(&(point.u() + &delta * c(h, 0.0))).unwrap().point;
            let minus = retract(&(point.u() - &delta * c(h, 0.0))).unwrap().point;
            let numeric = (obj.rate(plus.u()).unwrap() - obj.rate(minus.u()).unwrap()) / (2.0 * h);
            let analytic = 2.0 * crate::linalg::re_inner(&j, &delta);
            assert!((numeric - analytic).abs() < 1e-5 * analytic.abs().max(numeric.abs()), "{numeric} vs {analytic}");
        }
    }

    #[test]
    fn single_phase_matches_direct_log_det() {
        let mut g = rng(40);
        let rho = 2.0;
        let cm = gaussian_cmat(4, 4, &mut g);
        let u = CVec::from_fn(4, |_, _| sample::complex_gaussian(&mut g));
        let w = CVec::from_fn(4, |_, _| sample::complex_gaussian(&mut g));
        let sp = SinglePhase::new(&cm, &u, &w, rho).unwrap();
        for k in 0..16 {
            let phi = -3.0 + 0.4 * k as f64;
            let h = &cm + &u * w.transpose() * Complex64::from_polar(1.0, phi);
            let direct = log_det_hpd(&gram_plus_identity(&h, rho));
            assert!(sp.gain(phi) > 0.0);
            assert!((sp.log_det_at(phi) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn per_phase_annihilated_column_keeps_phase() {
        // F = 0: every column of F Q_R vanishes
        let mut g = rng(1);
        let ch = ChannelSet::new(gaussian_cmat(2, 2, &mut g), CMat::zeros(2, 3), gaussian_cmat(2, 3, &mut g)).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        let p = UsPoint::random(3, 1).unwrap();
        let fr = GeodesicFrame::from_parts(p.q().clone(), vec![0.0; 3]).unwrap();
        let phases = [0.3, -1.0, 2.0];
        for m in 0..3 {
            assert_eq!(obj.best_phase(&fr, &phases, m).unwrap(), phases[m]);
        }
    }

    #[test]
    fn per_phase_single_element_aligns() {
        // u = w = 1, no direct link: α = ρ‖w‖²... real positive, so φ = 0
        let one = scalar(c(1.0, 0.0));
        let ch = ChannelSet::new(scalar(c(0.0, 0.0)), one.clone(), one.clone()).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        let fr = GeodesicFrame::from_parts(one, vec![0.0]).unwrap();
        let phi = obj.best_phase(&fr, &[1.2], 0).unwrap();
        // with a single element the rate is phase-independent; α = 0 keeps the phase
        assert_eq!(phi, 1.2);

        // with a direct path the element must align its phase with it
        let ch = ChannelSet::new(scalar(c(1.0, 0.0)), scalar(c(1.0, 0.0)), scalar(c(1.0, 0.0))).unwrap();
        let obj = RateObjective::new(ch, 1.0).unwrap();
        let fr = GeodesicFrame::from_parts(scalar(c(1.0, 0.0)), vec![0.0]).unwrap();
        let phi = obj.best_phase(&fr, &[1.2], 0).unwrap();
        assert!(phi.abs() < 1e-12, "phi = {phi}");
    }

    #[test]
    fn per_phase_matches_grid_search() {
        let obj = RateObjective::new(random_channels(4, 4, 8, 21), 1.5).unwrap();
        let p = UsPoint::random(8, 22).unwrap();
        let fr = GeodesicFrame::from_parts(p.q().clone(), vec![0.0; 8]).unwrap();
        let phases: Vec<f64> = (0..8).map(|k| 0.37 * k as f64 - 1.0).collect();
        let model = RatePhaseModel::new(&obj, &fr, &phases);
        for m in 0..8 {
            let best = obj.best_phase(&fr, &phases, m).unwrap();
            let (mut grid_x, mut grid_v) = (0.0, f64::NEG_INFINITY);
            for i in 0..3601 {
                let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / 3600.0;
                let v = model.value_with(m, x);
                if v > grid_v {
                    grid_x = x;
                    grid_v = v;
                }
            }
            let at_best = model.value_with(m, best);
            assert!(at_best >= grid_v - 1e-8, "m = {m}");
            assert!(optimizer::wrap_phase(best - grid_x).abs() < 2e-3, "m = {m}: {best} vs {grid_x}");
        }
    }

    #[test]
    fn low_cost_scalar_and_blocked() {
        let (f, h, g) = (c(0.3, -0.8), c(-1.1, 0.4), c(0.5, 0.9));
        let ch = ChannelSet::new(scalar(h), scalar(f), scalar(g)).unwrap();
        let p = low_cost_bdris(&ch).unwrap();
        let expected = Complex64::from_polar(1.0, (f.conj() * h * g).arg());
        assert!((p.u()[(0, 0)] - expected).norm() < 1e-12);
        assert!(matches!(low_cost_bdris(&ch.blocked()), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn mo_u_proj_without_ris_keeps_direct_rate() {
        let mut g = rng(5);
        let ch = ChannelSet::new(gaussian_cmat(2, 2, &mut g), CMat::zeros(2, 4), gaussian_cmat(2, 4, &mut g)).unwrap();
        let obj = RateObjective::new(ch.clone(), 4.0).unwrap();
        let (p, _) = mo_u_proj_baseline(&obj, &UPoint::random(4, 1).unwrap(), &OptimizerConfig::default(), &ArmijoParams::default()).unwrap();
        assert!((obj.rate(p.u()).unwrap() - obj.rate_of_channel(&ch.hd)).abs() < 1e-12);
    }
}
