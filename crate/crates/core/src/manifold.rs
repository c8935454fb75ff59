//! Geometry of the unitary symmetric manifold `U_s = {U : U U^H = I, U = U^T}`.
//!
//! Points carry a Takagi factor `Q` with `U = Q Q^T`. Tangent vectors at `U`
//! are `B = j Q R Q^T` for real symmetric `R`, and the geodesic leaving `U`
//! along `B` is `Q_R diag(e^{j θ μ}) Q_R^T` where `R = V_R diag(θ) V_R^T` and
//! `Q_R = Q V_R`. Walking a geodesic is therefore a matter of rotating the
//! phases of a diagonal matrix.
//!
//! The metric is the real part of the ambient trace inner product.
//! [`UPoint`] covers the plain unitary group, used by the baseline.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, complexify, ensure_finite, ensure_square, expm_skew_hermitian, scale_columns,
    symmetry_residual, unitarity_residual, CMat, RMat,
};
use crate::sample;

/// Residual above which a cached Takagi factor is recomputed from scratch.
pub const DRIFT_GUARD: f64 = 1e-8;

/// Tolerance used when validating a point handed in from outside.
const POINT_TOL: f64 = 1e-8;

/// A point on `U_s` together with a Takagi factor.
#[derive(Debug, Clone)]
pub struct UsPoint {
    u: CMat,
    q: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResiduals {
    /// `||U U^H - I||`
    pub unitarity: f64,
    /// `||U - U^T||`
    pub symmetry: f64,
    /// `||Q Q^T - U||`
    pub factorization: f64,
    /// `||Q Q^H - I||`
    pub factor_unitarity: f64,
}

impl PointResiduals {
    pub fn max(&self) -> f64 {
        self.unitarity.max(self.symmetry).max(self.factorization).max(self.factor_unitarity)
    }
}

fn symmetric_product(q: &CMat) -> CMat {
    let u = q * q.transpose();
    (&u + u.transpose()) * c(0.5, 0.0)
}

impl UsPoint {
    /// Builds `U = Q Q^T` from a unitary `Q`.
    pub fn from_factor(q: CMat) -> Result<Self> {
        ensure_square(q.nrows(), q.ncols(), "Takagi factor")?;
        ensure_finite(&q, "Takagi factor")?;
        let resid = unitarity_residual(&q);
        if resid > POINT_TOL {
            return Err(Error::Contract(format!("Takagi factor is not unitary ({resid:.3e})")));
        }
        Ok(Self { u: symmetric_product(&q), q })
    }

    /// Factorizes a unitary symmetric matrix. The stored `U` is `Q Q^T`.
    pub fn from_matrix(u: &CMat) -> Result<Self> {
        ensure_square(u.nrows(), u.ncols(), "manifold point")?;
        ensure_finite(u, "manifold point")?;
        let unit = unitarity_residual(u);
        let sym = symmetry_residual(u);
        if unit > POINT_TOL || sym > POINT_TOL {
            return Err(Error::Contract(format!(
                "matrix is not unitary symmetric (unitarity {unit:.3e}, symmetry {sym:.3e})"
            )));
        }
        let t = linalg::takagi(u)?;
        Self::from_factor(t.q)
    }

    pub fn identity(n: usize) -> Self {
        Self { u: CMat::identity(n, n), q: CMat::identity(n, n) }
    }

    /// `Q_0 Q_0^T` with `Q_0` Haar-distributed; deterministic per seed.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("manifold dimension must be at least 1".into()));
        }
        let q = sample::haar_unitary(n, &mut sample::rng(seed));
        Ok(Self { u: symmetric_product(&q), q })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn into_matrix(self) -> CMat {
        self.u
    }

    pub fn residuals(&self) -> PointResiduals {
        PointResiduals {
            unitarity: unitarity_residual(&self.u),
            symmetry: symmetry_residual(&self.u),
            factorization: (&self.q * self.q.transpose() - &self.u).norm(),
            factor_unitarity: unitarity_residual(&self.q),
        }
    }

    /// Re-derives the Takagi factor from `U` (after re-projecting `U` onto `U_s`).
    pub fn refreshed(&self) -> Result<Self> {
        let sym = (&self.u + self.u.transpose()) * c(0.5, 0.0);
        Ok(retract(&sym)?.point)
    }

    /// Returns `self`, or a refreshed copy if residuals exceed [`DRIFT_GUARD`].
    pub fn guarded(self) -> Result<Self> {
        if self.residuals().max() > DRIFT_GUARD {
            self.refreshed()
        } else {
            Ok(self)
        }
    }
}

/// Tangent vector `j Q R Q^T`, stored as its real symmetric coordinate `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection {
    r: RMat,
}

impl TangentDirection {
    /// Stores `(R + R^T) / 2`.
    pub fn new(r: RMat) -> Result<Self> {
        ensure_square(r.nrows(), r.ncols(), "tangent coordinate")?;
        let sym = (&r + r.transpose()) * 0.5;
        Ok(Self { r: sym })
    }

    pub fn zero(n: usize) -> Self {
        Self { r: RMat::zeros(n, n) }
    }

    pub fn r(&self) -> &RMat {
        &self.r
    }

    pub fn norm(&self) -> f64 {
        self.r.norm()
    }

    /// Ambient tangent matrix `B = j Q R Q^T` at `point`.
    pub fn embed(&self, point: &UsPoint) -> Result<CMat> {
        if self.r.nrows() != point.dim() {
            return Err(Error::Dimension(format!(
                "tangent of size {} at point of size {}",
                self.r.nrows(),
                point.dim()
            )));
        }
        let q = point.q();
        Ok(q * complexify(&self.r) * q.transpose() * c(0.0, 1.0))
    }
}

/// Orthogonal projection of an ambient matrix onto `T_U U_s`:
/// `R = Imag(Q^H (J + J^T) Q^* / 2)`.
pub fn project_tangent(point: &UsPoint, j: &CMat) -> Result<TangentDirection> {
    if j.nrows() != point.dim() || j.ncols() != point.dim() {
        return Err(Error::Dimension(format!(
            "gradient is {}x{}, point is {}x{}",
            j.nrows(),
            j.ncols(),
            point.dim(),
            point.dim()
        )));
    }
    let q = point.q();
    let k = q.adjoint() * (j + j.transpose()) * q.conjugate() * c(0.5, 0.0);
    TangentDirection::new(k.map(|z| z.im))
}

/// Eigen-frame of a geodesic: `Q_R = Q V_R` and the phases `θ` with `R = V_R diag(θ) V_R^T`.
#[derive(Debug, Clone)]
pub struct GeodesicFrame {
    qr: CMat,
    theta: Vec<f64>,
}

impl GeodesicFrame {
    pub fn new(point: &UsPoint, dir: &TangentDirection) -> Result<Self> {
        if dir.r().nrows() != point.dim() {
            return Err(Error::Dimension("tangent and point sizes differ".into()));
        }
        let eig = linalg::eig_real_symmetric(dir.r())?;
        Ok(Self { qr: point.q() * complexify(&eig.vectors), theta: eig.values })
    }

    /// Frame from an explicit unitary `Q_R` and phases.
    pub fn from_parts(qr: CMat, theta: Vec<f64>) -> Result<Self> {
        ensure_square(qr.nrows(), qr.ncols(), "frame basis")?;
        if theta.len() != qr.nrows() {
            return Err(Error::Dimension("one phase per frame column required".into()));
        }
        Ok(Self { qr, theta })
    }

    pub fn dim(&self) -> usize {
        self.qr.nrows()
    }

    pub fn basis(&self) -> &CMat {
        &self.qr
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `Q_R diag(e^{j φ}) Q_R^T`, with Takagi factor `Q_R diag(e^{j φ / 2})`.
    pub fn point_at(&self, phases: &[f64]) -> Result<UsPoint> {
        if phases.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} phases for a frame of size {}",
                phases.len(),
                self.dim()
            )));
        }
        let halves: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p / 2.0)).collect();
        let q = scale_columns(&self.qr, &halves);
        Ok(UsPoint { u: symmetric_product(&q), q })
    }

    /// Point reached after step `mu` along the geodesic (`φ = θ μ`).
    pub fn point_at_step(&self, mu: f64) -> Result<UsPoint> {
        let phases: Vec<f64> = self.theta.iter().map(|t| t * mu).collect();
        self.point_at(&phases)
    }

    /// Only `U` at the given phases, without forming the factor.
    pub fn matrix_at(&self, phases: &[f64]) -> CMat {
        let rot: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        scale_columns(&self.qr, &rot) * self.qr.transpose()
    }
}

/// Outcome of [`retract`].
#[derive(Debug, Clone)]
pub struct Retraction {
    pub point: UsPoint,
    /// Smallest singular value fell below `1e-12 σ_1`; the nearest point may not be unique.
    pub near_singular: bool,
}

/// Nearest unitary symmetric matrix to a complex symmetric `A`: `Q Q^T` from `A = Q Σ Q^T`.
pub fn retract(a: &CMat) -> Result<Retraction> {
    let t = linalg::takagi(a)?;
    let top = t.sigma.first().copied().unwrap_or(0.0);
    let bottom = t.sigma.last().copied().unwrap_or(0.0);
    let near_singular = !(bottom > 1e-12 * top);
    Ok(Retraction { point: UsPoint::from_factor(t.q)?, near_singular })
}

/// A point on the unitary group.
#[derive(Debug, Clone)]
pub struct UPoint {
    u: CMat,
}

impl UPoint {
    pub fn new(u: CMat) -> Result<Self> {
        ensure_square(u.nrows(), u.ncols(), "unitary point")?;
        ensure_finite(&u, "unitary point")?;
        let resid = unitarity_residual(&u);
        if resid > POINT_TOL {
            return Err(Error::Contract(format!("matrix is not unitary ({resid:.3e})")));
        }
        Ok(Self { u })
    }

    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("manifold dimension must be at least 1".into()));
        }
        Ok(Self { u: sample::haar_unitary(n, &mut sample::rng(seed)) })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn into_matrix(self) -> CMat {
        self.u
    }

    /// Skew-Hermitian `S = (U^H J - J^H U) / 2`; the projection of `J` onto `T_U U` is `U S`.
    pub fn project_tangent(&self, j: &CMat) -> Result<CMat> {
        if j.shape() != self.u.shape() {
            return Err(Error::Dimension("gradient and point sizes differ".into()));
        }
        let m = self.u.adjoint() * j;
        Ok((&m - m.adjoint()) * c(0.5, 0.0))
    }

    /// `U exp(μ S)`.
    pub fn geodesic(&self, s: &CMat, mu: f64) -> Result<UPoint> {
        if s.shape() != self.u.shape() {
            return Err(Error::Dimension("direction and point sizes differ".into()));
        }
        let e = expm_skew_hermitian(&(s * c(mu, 0.0)))?;
        Ok(UPoint { u: &self.u * e })
    }
}

impl From<UsPoint> for UPoint {
    fn from(p: UsPoint) -> Self {
        UPoint { u: p.u }
    }
}
