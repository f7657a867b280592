//! g-frames as ordered families of block matrices `Λ_j : ℂⁿ → ℂ^{d_j}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, herm_eig, herm_func, identity_deviation, numerical_rank, CMatrix, CVector, HermFn,
    Tolerances, ONE, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GFrame {
    hilbert_dim: usize,
    blocks: Vec<CMatrix>,
}

/// Analysis operator `T f = (Λ_0 f, Λ_1 f, ...)` as one stacked matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedOperator {
    pub matrix: CMatrix,
    /// Start row of each block; `offsets[0] == 0`.
    pub offsets: Vec<usize>,
}

impl StackedOperator {
    pub fn apply(&self, f: &CVector) -> CVector {
        &self.matrix * f
    }

    pub fn synthesis(&self) -> CMatrix {
        self.matrix.adjoint()
    }

    /// Rows of block `j` within a vector of the stacked space.
    pub fn block_range(&self, j: usize) -> std::ops::Range<usize> {
        let end = self
            .offsets
            .get(j + 1)
            .copied()
            .unwrap_or(self.matrix.nrows());
        self.offsets[j]..end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub is_frame: bool,
    pub is_tight: bool,
    pub is_parseval: bool,
}

impl FrameBounds {
    pub fn from_extremes(lower: f64, upper: f64, tol: &Tolerances) -> Self {
        let lower = lower.max(0.0);
        let upper = upper.max(lower);
        let is_frame = upper > 0.0 && lower > tol.pd * upper;
        let is_tight = (upper - lower).abs() <= tol.eq * upper;
        let is_parseval = is_tight && (lower - 1.0).abs() <= tol.eq;
        FrameBounds {
            lower,
            upper,
            is_frame,
            is_tight,
            is_parseval,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub is_bessel: bool,
    pub is_frame: bool,
    pub is_complete: bool,
    pub is_orthonormal_set: bool,
    pub is_on_basis: bool,
    pub is_riesz_basis: bool,
}

impl GFrame {
    pub fn new(hilbert_dim: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if hilbert_dim == 0 {
            return Err(Error::InvalidFrame("hilbert_dim must be positive".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidFrame("at least one block is required".into()));
        }
        for (j, b) in blocks.iter().enumerate() {
            if b.ncols() != hilbert_dim {
                return Err(Error::InvalidFrame(format!(
                    "block {j} has {} columns, expected {hilbert_dim}",
                    b.ncols()
                )));
            }
            if b.nrows() == 0 {
                return Err(Error::InvalidFrame(format!("block {j} has no rows")));
            }
            linalg::ensure_finite(b)?;
        }
        Ok(GFrame {
            hilbert_dim,
            blocks,
        })
    }

    /// Ordinary vector frame `{u_i}` viewed as the g-frame `f ↦ ⟨u_i, f⟩`.
    pub fn from_vectors(hilbert_dim: usize, vectors: &[CVector]) -> Result<Self> {
        let blocks = vectors
            .iter()
            .map(|u| {
                if u.len() != hilbert_dim {
                    return Err(Error::DimensionMismatch(format!(
                        "vector of length {} in a {hilbert_dim}-dimensional space",
                        u.len()
                    )));
                }
                Ok(CMatrix::from_fn(1, hilbert_dim, |_, c| u[c].conj()))
            })
            .collect::<Result<Vec<_>>>()?;
        GFrame::new(hilbert_dim, blocks)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &CMatrix {
        &self.blocks[j]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    /// Dimension of the stacked space `⊕ ℂ^{d_j}`.
    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    fn map_blocks(&self, f: impl Fn(&CMatrix) -> CMatrix) -> GFrame {
        GFrame {
            hilbert_dim: self.hilbert_dim,
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> GFrame {
        self.map_blocks(|b| b * c)
    }

    /// `{Λ_j X}` for a square `X`.
    pub fn compose(&self, x: &CMatrix) -> Result<GFrame> {
        let n = self.hilbert_dim;
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, expected {n}x{n}",
                x.nrows(),
                x.ncols()
            )));
        }
        linalg::ensure_finite(x)?;
        Ok(self.map_blocks(|b| b * x))
    }

    pub fn same_shape(&self, other: &GFrame) -> bool {
        self.hilbert_dim == other.hilbert_dim && self.block_dims() == other.block_dims()
    }

    pub fn ensure_same_shape(&self, other: &GFrame) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "n={} dims={:?} vs n={} dims={:?}",
                self.hilbert_dim,
                self.block_dims(),
                other.hilbert_dim,
                other.block_dims()
            )))
        }
    }

    /// `max_j ‖Λ_j − Γ_j‖_F`; frames must share a shape.
    pub fn block_distance(&self, other: &GFrame) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `Σ_j ‖Λ_j f‖²`.
    pub fn energy(&self, f: &CVector) -> f64 {
        self.blocks.iter().map(|b| (b * f).norm_squared()).sum()
    }

    pub fn analysis(&self) -> StackedOperator {
        let rows = self.total_dim();
        let mut matrix = CMatrix::zeros(rows, self.hilbert_dim);
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut start = 0;
        for b in &self.blocks {
            offsets.push(start);
            matrix.rows_mut(start, b.nrows()).copy_from(b);
            start += b.nrows();
        }
        StackedOperator { matrix, offsets }
    }

    /// `S = Σ_j Λ_j† Λ_j`, symmetrized.
    pub fn frame_operator(&self) -> CMatrix {
        let n = self.hilbert_dim;
        let mut s = CMatrix::zeros(n, n);
        for b in &self.blocks {
            s.gemm_ad(ONE, b, b, ONE);
        }
        (&s + s.adjoint()).scale(0.5)
    }

    /// Optimal bounds: the spectral extremes of the frame operator.
    pub fn bounds(&self, tol: &Tolerances) -> FrameBounds {
        let eig = herm_eig(&self.frame_operator(), tol)
            .expect("frame operator of a valid family is finite and Hermitian");
        FrameBounds::from_extremes(eig.min(), eig.max(), tol)
    }

    fn require_frame(&self, tol: &Tolerances) -> Result<()> {
        let b = self.bounds(tol);
        if b.is_frame {
            Ok(())
        } else {
            Err(Error::NotAFrame {
                lower: b.lower,
                upper: b.upper,
            })
        }
    }

    fn frame_operator_power(&self, f: HermFn, tol: &Tolerances) -> Result<CMatrix> {
        self.require_frame(tol)?;
        herm_func(&self.frame_operator(), f, tol).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => {
                let b = self.bounds(tol);
                Error::NotAFrame {
                    lower: b.lower,
                    upper: b.upper,
                }
            }
            other => other,
        })
    }

    /// `{Λ_j S⁻¹}`.
    pub fn canonical_dual(&self, tol: &Tolerances) -> Result<GFrame> {
        let s_inv = self.frame_operator_power(HermFn::Inverse, tol)?;
        Ok(self.map_blocks(|b| b * &s_inv))
    }

    /// `{Λ_j S^{-1/2}}`, always a Parseval g-frame.
    pub fn parseval_transform(&self, tol: &Tolerances) -> Result<GFrame> {
        let s_isqrt = self.frame_operator_power(HermFn::InvSqrt, tol)?;
        Ok(self.map_blocks(|b| b * &s_isqrt))
    }

    /// Largest `‖Λ_j Λ_k† − δ_jk I‖_F` over all block pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, bj) in self.blocks.iter().enumerate() {
            for (k, bk) in self.blocks.iter().enumerate() {
                let mut g = bj * bk.adjoint();
                if j == k {
                    for i in 0..g.nrows() {
                        g[(i, i)] -= ONE;
                    }
                }
                worst = worst.max(g.norm());
            }
        }
        worst
    }

    /// Square-case test for a g-on basis: `Σd_j = n` and `Λ_jΛ_k† = δ_jk I`.
    ///
    /// A square analysis operator with `T T† = I` is unitary, so this is
    /// equivalent to `classify().is_on_basis` without the rank computation.
    pub fn is_gon_basis(&self, tol: &Tolerances) -> bool {
        self.total_dim() == self.hilbert_dim && self.orthonormality_defect() <= tol.eq
    }

    pub fn classify(&self, tol: &Tolerances) -> Classification {
        let t = self.analysis();
        let rank = numerical_rank(&t.matrix, tol.rank);
        let bounds = self.bounds(tol);
        let is_bessel = true;
        let is_complete = rank == self.hilbert_dim;
        let is_frame = is_bessel && is_complete && bounds.is_frame;
        let is_riesz_basis = is_frame && rank == self.total_dim();
        let is_orthonormal_set = self.orthonormality_defect() <= tol.eq;
        let is_on_basis = is_riesz_basis
            && is_orthonormal_set
            && identity_deviation(&self.frame_operator()) <= tol.eq;
        Classification {
            is_bessel,
            is_frame,
            is_complete,
            is_orthonormal_set,
            is_on_basis,
            is_riesz_basis,
        }
    }

    /// `u_k^{(j)} = Λ_j† e_k^{(j)}` for the standard basis of each block space.
    pub fn induce_vector_frame(&self) -> Vec<CVector> {
        self.blocks
            .iter()
            .flat_map(|b| {
                let adj = b.adjoint();
                (0..adj.ncols())
                    .map(move |k| adj.column(k).into_owned())
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// `‖T_G† T_F − I‖_F / √n`.
pub fn dual_pair_deviation(f: &GFrame, g: &GFrame) -> Result<f64> {
    f.ensure_same_shape(g)?;
    let tf = f.analysis().matrix;
    let tg = g.analysis().matrix;
    Ok(identity_deviation(&(tg.adjoint() * tf)))
}

/// Whether `Σ_j Γ_j† Λ_j = I`. Symmetric in its arguments.
pub fn check_dual_pair(f: &GFrame, g: &GFrame, tol: &Tolerances) -> Result<bool> {
    Ok(dual_pair_deviation(f, g)? <= tol.eq)
}

/// Largest `‖Γ_k Λ_j† − δ_jk I‖_F`.
pub fn biorthogonality_defect(f: &GFrame, g: &GFrame) -> Result<f64> {
    f.ensure_same_shape(g)?;
    let mut worst: f64 = 0.0;
    for (j, fj) in f.blocks().iter().enumerate() {
        for (k, gk) in g.blocks().iter().enumerate() {
            let mut m = gk * fj.adjoint();
            if j == k {
                for i in 0..m.nrows() {
                    m[(i, i)] -= ONE;
                }
            }
            worst = worst.max(m.norm());
        }
    }
    Ok(worst)
}

pub fn check_biorthogonal(f: &GFrame, g: &GFrame, tol: &Tolerances) -> Result<bool> {
    Ok(biorthogonality_defect(f, g)? <= tol.eq)
}

/// Coordinate-slicing g-on basis, optionally composed with a unitary rotation.
pub fn make_gon_basis(
    n: usize,
    dims: &[usize],
    rotation: Option<&CMatrix>,
    tol: &Tolerances,
) -> Result<GFrame> {
    let total: usize = dims.iter().sum();
    if total != n {
        return Err(Error::DimensionMismatch(format!(
            "block dimensions sum to {total}, expected {n}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidFrame("block dimensions must be positive".into()));
    }
    if let Some(q) = rotation {
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "rotation is {}x{}, expected {n}x{n}",
                q.nrows(),
                q.ncols()
            )));
        }
        linalg::ensure_finite(q)?;
        let deviation = identity_deviation(&(q.adjoint() * q));
        if deviation > tol.eq {
            return Err(Error::NotUnitary { deviation });
        }
    }
    let mut blocks = Vec::with_capacity(dims.len());
    let mut start = 0;
    for &d in dims {
        let block = match rotation {
            Some(q) => q.rows(start, d).into_owned(),
            None => CMatrix::from_fn(d, n, |r, c| if c == start + r { ONE } else { ZERO }),
        };
        blocks.push(block);
        start += d;
    }
    GFrame::new(n, blocks)
}

/// `{θ_j X}` for a g-on basis `θ` and invertible `X`.
pub fn make_griesz(gon: &GFrame, x: &CMatrix, tol: &Tolerances) -> Result<GFrame> {
    if !gon.is_gon_basis(tol) {
        return Err(Error::NotOnBasis);
    }
    let n = gon.hilbert_dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, expected {n}x{n}",
            x.nrows(),
            x.ncols()
        )));
    }
    linalg::ensure_finite(x)?;
    let condition = linalg::condition_number(x);
    if !(condition < 1.0 / tol.pd) {
        return Err(Error::Singular { condition });
    }
    gon.compose(x)
}
