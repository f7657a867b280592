//! Alternate duals, similarity, and the extremal properties of the canonical dual.

use crate::error::{Error, Result};
use crate::frame::{dual_pair_deviation, GFrame};
use crate::linalg::{
    self, herm_eig, numerical_rank, pseudo_inverse, range_projector, relative_difference, CMatrix,
    CVector, Tolerances,
};

/// Frobenius tolerance on the difference of two range projectors. Two SVDs
/// compound their error, so this is looser than `Tolerances::eq`.
pub const SIMILARITY_TOL: f64 = 1e-8;

/// Ingredients of a non-canonical dual `Γ_j = Λ̃_j + F_j g₀†`.
///
/// `kernel_vector` is a unit vector of the stacked space orthogonal to the
/// range of the analysis operator; `F_j` is its `j`-th block slice. The
/// rank-one correction `f ↦ ⟨g₀, f⟩ F_j` is invisible to `Σ_j Γ_j† Λ_j`
/// because `T† F = 0`.
#[derive(Debug, Clone)]
pub struct AlternateDualRecipe {
    pub base_frame: GFrame,
    pub canonical_dual: GFrame,
    pub kernel_vector: CVector,
    pub probe_vector: CVector,
}

impl AlternateDualRecipe {
    pub fn new(frame: &GFrame, probe: &CVector, seed: u64, tol: &Tolerances) -> Result<Self> {
        let n = frame.hilbert_dim();
        if probe.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "probe has length {}, expected {n}",
                probe.len()
            )));
        }
        if !probe.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if probe.norm() == 0.0 {
            return Err(Error::ZeroProbe);
        }
        let class = frame.classify(tol);
        if !class.is_frame {
            let b = frame.bounds(tol);
            return Err(Error::NotAFrame {
                lower: b.lower,
                upper: b.upper,
            });
        }
        if class.is_riesz_basis {
            return Err(Error::IsRieszBasis);
        }
        let t = frame.analysis().matrix;
        let kernel_dim = t.nrows() - numerical_rank(&t, tol.rank);
        if kernel_dim == 0 {
            return Err(Error::IsRieszBasis);
        }
        // ker(T†) is the bottom eigenspace of T T†.
        let eig = herm_eig(&(&t * t.adjoint()), tol)?;
        let pick = (seed % kernel_dim as u64) as usize;
        let kernel_vector = normalize_phase(eig.eigenvectors.column(pick).into_owned());

        let leak = (t.adjoint() * &kernel_vector).norm();
        if leak > tol.eq * t.norm().max(1.0) {
            return Err(Error::IsRieszBasis);
        }
        Ok(AlternateDualRecipe {
            base_frame: frame.clone(),
            canonical_dual: frame.canonical_dual(tol)?,
            kernel_vector,
            probe_vector: probe.clone(),
        })
    }

    /// The slice `F_j` of the kernel vector belonging to block `j`.
    pub fn kernel_slice(&self, j: usize) -> CVector {
        let t = self.base_frame.analysis();
        self.kernel_vector.rows_range(t.block_range(j)).into_owned()
    }

    pub fn dual(&self) -> GFrame {
        let g_adj = self.probe_vector.adjoint();
        let blocks = self
            .canonical_dual
            .blocks()
            .iter()
            .enumerate()
            .map(|(j, b)| b + self.kernel_slice(j) * &g_adj)
            .collect();
        GFrame::new(self.base_frame.hilbert_dim(), blocks).expect("same shape as the base frame")
    }
}

/// Unit vector re-phased so its first non-negligible entry is real positive.
fn normalize_phase(mut v: CVector) -> CVector {
    let norm = v.norm();
    if norm == 0.0 {
        return v;
    }
    v.unscale_mut(norm);
    let threshold = 1e-12;
    if let Some(z) = v.iter().copied().find(|z| z.norm() > threshold) {
        let phase = z.conj() / z.norm();
        v *= phase;
    }
    v
}

/// A dual of `frame` different from the canonical one.
///
/// Fails with `IsRieszBasis` when the dual is unique and with `ZeroProbe`
/// when `probe` vanishes. `seed` chooses among kernel directions when
/// `ker T†` has dimension above one.
pub fn construct_alternate_dual(
    frame: &GFrame,
    probe: &CVector,
    seed: u64,
    tol: &Tolerances,
) -> Result<GFrame> {
    Ok(AlternateDualRecipe::new(frame, probe, seed, tol)?.dual())
}

/// The invertible `X` with `F_j = G_j X` for all `j`, if the analysis
/// operators share a range.
pub fn check_similar(f: &GFrame, g: &GFrame, tol: &Tolerances) -> Result<Option<CMatrix>> {
    f.ensure_same_shape(g)?;
    let tf = f.analysis().matrix;
    let tg = g.analysis().matrix;
    let threshold = SIMILARITY_TOL.max(tol.eq);
    let pf = range_projector(&tf, tol.rank)?;
    let pg = range_projector(&tg, tol.rank)?;
    if (pf - pg).norm() > threshold {
        return Ok(None);
    }
    let x = pseudo_inverse(&tg, tol.rank)? * &tf;
    if (&tg * &x - &tf).norm() > threshold * tf.norm().max(f64::MIN_POSITIVE) {
        return Ok(None);
    }
    if !(linalg::condition_number(&x) < 1.0 / tol.pd) {
        return Ok(None);
    }
    Ok(Some(x))
}

/// `(‖T_Λ̃ f‖², ‖T_G f − T_Λ̃ f‖², ‖T_G f‖²)`; the first two sum to the third.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormDecomposition {
    pub canonical: f64,
    pub difference: f64,
    pub dual: f64,
}

fn require_dual(frame: &GFrame, candidate: &GFrame, tol: &Tolerances) -> Result<()> {
    let deviation = dual_pair_deviation(frame, candidate)?;
    if deviation <= tol.eq {
        Ok(())
    } else {
        Err(Error::NotADual { deviation })
    }
}

pub fn dual_norm_decomposition(
    frame: &GFrame,
    dual: &GFrame,
    f: &CVector,
    tol: &Tolerances,
) -> Result<NormDecomposition> {
    require_dual(frame, dual, tol)?;
    if f.len() != frame.hilbert_dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, expected {}",
            f.len(),
            frame.hilbert_dim()
        )));
    }
    let canonical = frame.canonical_dual(tol)?.analysis().apply(f);
    let other = dual.analysis().apply(f);
    Ok(NormDecomposition {
        canonical: canonical.norm_squared(),
        difference: (&other - &canonical).norm_squared(),
        dual: other.norm_squared(),
    })
}

/// Relative gap `‖T_Θ†T_Θ − T_Θ†T_G‖ / max(‖T_Θ†T_Θ‖, ‖T_Θ†T_G‖)`.
pub fn gram_gap(frame: &GFrame, theta: &GFrame, other: &GFrame, tol: &Tolerances) -> Result<f64> {
    require_dual(frame, theta, tol)?;
    require_dual(frame, other, tol)?;
    let tt = theta.analysis().matrix;
    let tg = other.analysis().matrix;
    let self_gram = tt.adjoint() * &tt;
    let cross = tt.adjoint() * tg;
    Ok(relative_difference(&self_gram, &cross))
}

/// Whether `T_Θ†T_Θ = T_Θ†T_G`. Holds for every dual `G` exactly when `Θ`
/// is the canonical dual.
pub fn gram_characterization(
    frame: &GFrame,
    theta: &GFrame,
    other: &GFrame,
    tol: &Tolerances,
) -> Result<bool> {
    Ok(gram_gap(frame, theta, other, tol)? <= tol.eq)
}
