//! Dense complex linear-algebra kernels.
//!
//! Everything here is a pure function over `nalgebra` matrices. Contracts are
//! phrased as Frobenius residual bounds, so the backends (nalgebra's
//! Golub-Kahan SVD and tridiagonal QR eigen-solvers) can be swapped freely.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

const MAX_SWEEPS: usize = 10_000;

/// Library-level tolerances. `Default` is tuned for double precision at n <= 256.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative asymmetry `||A - A^T|| / max(1, ||A||)` accepted by [`takagi`].
    pub takagi_symmetry: f64,
    /// Relative asymmetry accepted by [`eig_real_symmetric`].
    pub real_symmetry: f64,
    /// Relative skewness defect accepted by [`expm_skew_hermitian`].
    pub skew_hermitian: f64,
    /// Singular values closer than this (relative to the largest) share a block.
    pub singular_gap: f64,
    /// Unitarity residual above which a Takagi factor is rejected.
    pub factor_unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            takagi_symmetry: 1e-8,
            real_symmetry: 1e-10,
            skew_hermitian: 1e-10,
            singular_gap: 1e-8,
            factor_unitarity: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Left singular vectors.
    pub f: CMat,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors (`A = F diag(sigma) G^H`).
    pub g: CMat,
}

#[derive(Debug, Clone)]
pub struct TakagiFactors {
    /// Unitary factor with `A = Q diag(sigma) Q^T`.
    pub q: CMat,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RealSymEig {
    pub vectors: RMat,
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub vectors: CMat,
    pub values: Vec<f64>,
}

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real part of the trace inner product, `Re tr(A^H B)`.
pub fn re_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn fro(a: &CMat) -> f64 {
    a.norm()
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(a: &CMat, what: &str) -> Result<()> {
    if is_finite(a) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_square(rows: usize, cols: usize, what: &str) -> Result<()> {
    if rows == cols {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what} must be square, got {rows}x{cols}")))
    }
}

/// Embeds a real matrix as a complex one.
pub fn complexify(a: &RMat) -> CMat {
    a.map(|x| c(x, 0.0))
}

/// `||A A^H - I||_F`.
pub fn unitarity_residual(a: &CMat) -> f64 {
    let n = a.nrows();
    (a * a.adjoint() - CMat::identity(n, n)).norm()
}

/// `||A - A^T||_F`.
pub fn symmetry_residual(a: &CMat) -> f64 {
    (a - a.transpose()).norm()
}

/// Scales column `k` of `a` by `scale[k]`.
pub fn scale_columns(a: &CMat, scale: &[Complex64]) -> CMat {
    let mut out = a.clone();
    for (k, s) in scale.iter().enumerate() {
        for z in out.column_mut(k).iter_mut() {
            *z *= s;
        }
    }
    out
}

/// Singular value decomposition of a square complex matrix, values descending.
pub fn svd(a: &CMat) -> Result<SvdFactors> {
    ensure_square(a.nrows(), a.ncols(), "svd input")?;
    ensure_finite(a, "svd input")?;
    let n = a.nrows();
    let dec = SVD::try_new(a.clone(), true, true, f64::EPSILON, MAX_SWEEPS).ok_or_else(|| {
        Error::Numerical(format!("SVD did not converge within {MAX_SWEEPS} sweeps (n={n})"))
    })?;
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let mut f = CMat::zeros(n, n);
    let mut g = CMat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        f.set_column(dst, &u.column(src));
        // row `src` of V^H is the conjugate of column `src` of V
        g.set_column(dst, &v_t.row(src).adjoint());
        sigma.push(dec.singular_values[src].max(0.0));
    }
    Ok(SvdFactors { f, sigma, g })
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues descending.
pub fn eig_real_symmetric(r: &RMat) -> Result<RealSymEig> {
    eig_real_symmetric_with(r, &Tolerances::default())
}

pub fn eig_real_symmetric_with(r: &RMat, tol: &Tolerances) -> Result<RealSymEig> {
    ensure_square(r.nrows(), r.ncols(), "symmetric eigen input")?;
    if !r.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("symmetric eigen input has non-finite entries".into()));
    }
    let asym = (r - r.transpose()).norm();
    if asym > tol.real_symmetry * r.norm().max(1.0) {
        return Err(Error::Contract(format!("matrix is not symmetric (||R - R^T|| = {asym:.3e})")));
    }
    let n = r.nrows();
    let sym = (r + r.transpose()) * 0.5;
    let dec = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS).ok_or_else(|| {
        Error::Numerical(format!("symmetric eigensolver did not converge (n={n})"))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| dec.eigenvalues[j].total_cmp(&dec.eigenvalues[i]));
    let mut vectors = RMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &dec.eigenvectors.column(src));
        values.push(dec.eigenvalues[src]);
    }
    Ok(RealSymEig { vectors, values })
}

/// Eigendecomposition of a Hermitian matrix (the input is Hermitianized first).
pub fn eig_hermitian(h: &CMat) -> Result<HermitianEig> {
    ensure_square(h.nrows(), h.ncols(), "Hermitian eigen input")?;
    let n = h.nrows();
    let herm = (h + h.adjoint()) * c(0.5, 0.0);
    let dec = SymmetricEigen::try_new(herm, f64::EPSILON, MAX_SWEEPS).ok_or_else(|| {
        Error::Numerical(format!("Hermitian eigensolver did not converge (n={n})"))
    })?;
    Ok(HermitianEig {
        vectors: dec.eigenvectors,
        values: dec.eigenvalues.iter().copied().collect(),
    })
}

/// `exp(S)` for skew-Hermitian `S`, evaluated as `W diag(e^{j d}) W^H` from the
/// Hermitian eigendecomposition `-jS = W diag(d) W^H`.
pub fn expm_skew_hermitian(s: &CMat) -> Result<CMat> {
    expm_skew_hermitian_with(s, &Tolerances::default())
}

pub fn expm_skew_hermitian_with(s: &CMat, tol: &Tolerances) -> Result<CMat> {
    ensure_square(s.nrows(), s.ncols(), "exponent")?;
    ensure_finite(s, "exponent")?;
    let defect = (s + s.adjoint()).norm();
    if defect > tol.skew_hermitian * s.norm().max(1.0) {
        return Err(Error::Contract(format!(
            "exponent is not skew-Hermitian (||S + S^H|| = {defect:.3e})"
        )));
    }
    let h = s * c(0.0, -1.0);
    let eig = eig_hermitian(&h)?;
    let phases: Vec<Complex64> = eig.values.iter().map(|&d| Complex64::from_polar(1.0, d)).collect();
    Ok(scale_columns(&eig.vectors, &phases) * eig.vectors.adjoint())
}

/// Takagi factorization `A = Q diag(sigma) Q^T` of a complex symmetric matrix.
///
/// Built from the SVD `A = F Σ G^H` as `Q = F (F^H G*)^{1/2}`. For a symmetric
/// `A`, `W = F^H G*` is block diagonal over groups of equal singular values and
/// each block with nonzero singular value is unitary and symmetric. Such a block
/// is `V diag(d) V^T` with `V` real orthogonal (its real and imaginary parts
/// commute), which gives a symmetric principal square root. Blocks belonging to
/// zero singular values do not enter the reconstruction and keep `F`'s columns.
pub fn takagi(a: &CMat) -> Result<TakagiFactors> {
    takagi_with(a, &Tolerances::default())
}

pub fn takagi_with(a: &CMat, tol: &Tolerances) -> Result<TakagiFactors> {
    ensure_square(a.nrows(), a.ncols(), "Takagi input")?;
    ensure_finite(a, "Takagi input")?;
    let n = a.nrows();
    let asym = symmetry_residual(a);
    if asym > tol.takagi_symmetry * fro(a).max(1.0) {
        return Err(Error::Contract(format!(
            "Takagi input is not symmetric (||A - A^T|| = {asym:.3e})"
        )));
    }
    let sym = (a + a.transpose()) * c(0.5, 0.0);
    let SvdFactors { f, sigma, g } = svd(&sym)?;
    let w = f.adjoint() * g.conjugate();

    let top = sigma.first().copied().unwrap_or(0.0);
    let mut root = CMat::identity(n, n);
    for (start, end) in singular_groups(&sigma, tol.singular_gap) {
        // exact-zero blocks contribute nothing to Q Σ Q^T
        if sigma[start] <= f64::EPSILON * top * n as f64 || top == 0.0 {
            continue;
        }
        let block = w.view((start, start), (end - start, end - start)).into_owned();
        let block_root = symmetric_unitary_sqrt(&block)?;
        root.view_mut((start, start), (end - start, end - start)).copy_from(&block_root);
    }
    let q = f * root;

    let resid = unitarity_residual(&q);
    if resid > tol.factor_unitarity {
        return Err(Error::Numerical(format!(
            "Takagi factor lost unitarity (||QQ^H - I|| = {resid:.3e})"
        )));
    }
    Ok(TakagiFactors { q, sigma })
}

/// Half-open index ranges of singular values within `gap * sigma_1` of their neighbour.
fn singular_groups(sigma: &[f64], gap: f64) -> Vec<(usize, usize)> {
    let scale = sigma.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut groups = Vec::new();
    let mut start = 0;
    for k in 1..=sigma.len() {
        if k == sigma.len() || sigma[k - 1] - sigma[k] > gap * scale {
            groups.push((start, k));
            start = k;
        }
    }
    groups
}

/// Principal square root of a (nearly) unitary symmetric matrix, returned
/// symmetric. Eigenphases are halved from (-π, π] into (-π/2, π/2].
fn symmetric_unitary_sqrt(w: &CMat) -> Result<CMat> {
    let k = w.nrows();
    if k == 1 {
        let z = w[(0, 0)];
        return Ok(CMat::from_element(1, 1, Complex64::from_polar(1.0, z.arg() / 2.0)));
    }
    let sym = (w + w.transpose()) * c(0.5, 0.0);
    let re = sym.map(|z| z.re);
    let im = sym.map(|z| z.im);

    // A generic real combination of the commuting parts separates every
    // joint eigenspace; keep whichever mixing weight diagonalizes best.
    let mut best: Option<(f64, RMat)> = None;
    for weight in [0.754_877_666_246_692_8, -1.324_717_957_244_746, 2.618_033_988_749_895] {
        let mix = &re + &im * weight;
        let v = eig_real_symmetric(&((&mix + mix.transpose()) * 0.5))?.vectors;
        let vc = complexify(&v);
        let d = vc.transpose() * &sym * &vc;
        let off = off_diagonal_norm(&d);
        if best.as_ref().is_none_or(|(b, _)| off < *b) {
            best = Some((off, v));
        }
        if off <= 1e-12 * k as f64 {
            break;
        }
    }
    let (_, v) = best.expect("at least one mixing weight tried");
    let vc = complexify(&v);
    let d = vc.transpose() * &sym * &vc;
    let halves: Vec<Complex64> =
        (0..k).map(|i| Complex64::from_polar(1.0, d[(i, i)].arg() / 2.0)).collect();
    Ok(scale_columns(&vc, &halves) * vc.transpose())
}

fn off_diagonal_norm(d: &CMat) -> f64 {
    let diag: f64 = d.diagonal().iter().map(|z| z.norm_sqr()).sum();
    (d.norm_squared() - diag).max(0.0).sqrt()
}
