//! Dense complex linear algebra used by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`. All
//! comparisons are relative: to the Frobenius norm of the operand, or to
//! the largest singular value for rank decisions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical thresholds shared by the whole toolkit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Tolerances {
    /// Relative tolerance for operator identities.
    pub eq: f64,
    /// Spectral floor: smallest / largest eigenvalue must exceed this.
    pub pd: f64,
    /// Relative asymmetry accepted before symmetrizing.
    pub herm: f64,
    /// Singular values below `rank * sigma_max` count as zero.
    pub rank: f64,
    /// Relative reconstruction error of eigendecompositions.
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq: 1e-10,
            pd: 1e-12,
            herm: 1e-12,
            rank: 1e-10,
            eig: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn with_eq(eq: f64) -> Self {
        Tolerances {
            eq,
            ..Tolerances::default()
        }
    }
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn ensure_square(m: &CMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`, zero when both vanish.
pub fn relative_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `‖m − I‖_F / ‖I‖_F` for square `m`.
pub fn identity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    (m - CMatrix::identity(n, n)).norm() / (n as f64).sqrt()
}

pub fn relative_asymmetry(m: &CMatrix) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        0.0
    } else {
        (m - m.adjoint()).norm() / scale
    }
}

/// Spectral decomposition `M = Q diag(λ) Q†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `Q diag(f(λ)) Q†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * q.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

pub fn herm_eig(m: &CMatrix, tol: &Tolerances) -> Result<HermitianEig> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let asymmetry = relative_asymmetry(m);
    if asymmetry > tol.herm {
        return Err(Error::NotHermitian { asymmetry });
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HermFn {
    Inverse,
    Sqrt,
    InvSqrt,
}

/// Applies `f` on the spectrum of a Hermitian positive-definite matrix.
pub fn herm_func(m: &CMatrix, f: HermFn, tol: &Tolerances) -> Result<CMatrix> {
    let eig = herm_eig(m, tol)?;
    let (lo, hi) = (eig.min(), eig.max());
    let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(hi > 0.0 && ratio > tol.pd) {
        return Err(Error::NotPositiveDefinite { ratio });
    }
    let g: fn(f64) -> f64 = match f {
        HermFn::Inverse => |x| 1.0 / x,
        HermFn::Sqrt => f64::sqrt,
        HermFn::InvSqrt => |x| 1.0 / x.sqrt(),
    };
    let out = eig.map(g);
    Ok((&out + out.adjoint()).scale(0.5))
}

/// Singular values sorted in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn numerical_rank(m: &CMatrix, tol_rank: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > tol_rank * top).count(),
        _ => 0,
    }
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `σ_max / σ_min` over all min(rows, cols) singular values.
pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Orthogonal projector onto the numerical range (column space) of `m`.
pub fn range_projector(m: &CMatrix, tol_rank: f64) -> Result<CMatrix> {
    ensure_finite(m)?;
    let rows = m.nrows();
    if m.is_empty() {
        return Ok(CMatrix::zeros(rows, rows));
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut p = CMatrix::zeros(rows, rows);
    if top == 0.0 {
        return Ok(p);
    }
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s > tol_rank * top {
            let col = u.column(j);
            p += col * col.adjoint();
        }
    }
    Ok(p)
}

/// Moore–Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pseudo_inverse(m: &CMatrix, tol_rank: f64) -> Result<CMatrix> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(CMatrix::zeros(m.ncols(), m.nrows()));
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol_rank * top;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for (j, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            out += (v_t.row(j).adjoint() * u.column(j).adjoint()).unscale(s);
        }
    }
    Ok(out)
}

pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    loop {
        let g = random_gaussian(n, 1, rng);
        let norm = g.norm();
        if norm > 1e-300 {
            return CVector::from_column_slice((g / Complex64::from(norm)).as_slice());
        }
    }
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase-fixed `R`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = random_gaussian(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Hermitian matrix `(G + G†)/2`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = random_gaussian(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}
