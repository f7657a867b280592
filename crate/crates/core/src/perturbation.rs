//! Stability of the g-frame property under perturbation of the blocks.
//!
//! The "optimal M" of the two-sided closeness condition
//! `Σ‖(Λ_i − Θ_i) f‖² ≤ M·min(Σ‖Λ_i f‖², Σ‖Θ_i f‖²)` is the larger of two
//! generalized eigenvalues, each computed by whitening the denominator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::GFrame;
use crate::linalg::{
    herm_eig, herm_func, random_unit_vector, spectral_norm, CMatrix, CVector, HermFn, Tolerances,
};

/// Largest `λ` with `N v = λ D v` for Hermitian `N ≥ 0` and `D > 0`, with
/// a maximizing vector `v` of unit norm.
pub fn generalized_max_eig(
    numerator: &CMatrix,
    denominator: &CMatrix,
    tol: &Tolerances,
) -> Result<(f64, CVector)> {
    let w = herm_func(denominator, HermFn::InvSqrt, tol)?;
    let whitened = &w * numerator * &w;
    let eig = herm_eig(&((&whitened + whitened.adjoint()).scale(0.5)), tol)?;
    let top = eig.eigenvalues.len() - 1;
    let v = &w * eig.eigenvectors.column(top);
    let norm = v.norm();
    Ok((eig.max().max(0.0), v.unscale(norm)))
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub m_lambda: f64,
    pub m_theta: f64,
    pub m_opt: f64,
    /// `A / (2M + 2)` with `A` the lower bound of the reference frame.
    pub guaranteed_lower: f64,
    /// `2B(M + 1)` with `B` the upper bound of the reference frame.
    pub guaranteed_upper: f64,
    pub actual_lower: f64,
    pub actual_upper: f64,
    #[serde(skip)]
    pub maximizer: CVector,
}

impl PerturbationReport {
    pub fn lower_guarantee_holds(&self, tol: &Tolerances) -> bool {
        self.actual_lower >= self.guaranteed_lower - tol.eq * self.guaranteed_lower.max(1.0)
    }

    pub fn upper_guarantee_holds(&self, tol: &Tolerances) -> bool {
        self.actual_upper <= self.guaranteed_upper + tol.eq * self.guaranteed_upper.max(1.0)
    }
}

fn difference_gram(f: &GFrame, g: &GFrame) -> Result<CMatrix> {
    f.ensure_same_shape(g)?;
    let d = f.analysis().matrix - g.analysis().matrix;
    let gram = d.adjoint() * &d;
    Ok((&gram + gram.adjoint()).scale(0.5))
}

fn require_frame(frame: &GFrame, tol: &Tolerances) -> Result<crate::FrameBounds> {
    let b = frame.bounds(tol);
    if b.is_frame {
        Ok(b)
    } else {
        Err(Error::NotAFrame {
            lower: b.lower,
            upper: b.upper,
        })
    }
}

/// `Σ‖(Λ_i − Θ_i) f‖² / min(Σ‖Λ_i f‖², Σ‖Θ_i f‖²)` at a single vector.
pub fn closeness_ratio(f: &GFrame, g: &GFrame, v: &CVector) -> f64 {
    let diff: f64 = f
        .blocks()
        .iter()
        .zip(g.blocks())
        .map(|(a, b)| ((a - b) * v).norm_squared())
        .sum();
    let denom = f.energy(v).min(g.energy(v));
    if denom > 0.0 {
        diff / denom
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Smallest `M` in the two-sided closeness condition, with the implied
/// bounds for `g`.
pub fn optimal_m(f: &GFrame, g: &GFrame, tol: &Tolerances) -> Result<PerturbationReport> {
    let bf = require_frame(f, tol)?;
    let bg = require_frame(g, tol)?;
    let dd = difference_gram(f, g)?;
    let (m_lambda, v_lambda) = generalized_max_eig(&dd, &f.frame_operator(), tol)?;
    let (m_theta, v_theta) = generalized_max_eig(&dd, &g.frame_operator(), tol)?;
    let (m_opt, maximizer) = if m_lambda >= m_theta {
        (m_lambda, v_lambda)
    } else {
        (m_theta, v_theta)
    };
    Ok(PerturbationReport {
        m_lambda,
        m_theta,
        m_opt,
        guaranteed_lower: bf.lower / (2.0 * m_opt + 2.0),
        guaranteed_upper: 2.0 * bf.upper * (m_opt + 1.0),
        actual_lower: bg.lower,
        actual_upper: bg.upper,
        maximizer,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneSidedReport {
    /// Smallest `M` with `Σ‖(Λ_i − Θ_i) f‖² ≤ M Σ‖Θ_i f‖²`.
    pub m3: f64,
    /// `A / (2 M3 + 2)`.
    pub lower_bound: f64,
    pub actual_lower: f64,
    pub theta_is_frame: bool,
}

/// One-sided constant measured against `g` only. `g` need not be known to
/// be a frame; a singular frame operator of `g` is reported, not guessed.
pub fn one_sided_m(f: &GFrame, g: &GFrame, tol: &Tolerances) -> Result<OneSidedReport> {
    let bf = require_frame(f, tol)?;
    let dd = difference_gram(f, g)?;
    let sg = g.frame_operator();
    let (m3, _) = generalized_max_eig(&dd, &sg, tol).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::DegenerateTheta,
        other => other,
    })?;
    Ok(OneSidedReport {
        m3,
        lower_bound: bf.lower / (2.0 * m3 + 2.0),
        actual_lower: g.bounds(tol).lower,
        theta_is_frame: g.classify(tol).is_frame,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplingOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions {
            samples: 10_000,
            seed: 0,
        }
    }
}

/// Outcome of the closeness test `‖f − Vf‖ ≤ m‖f‖ + n‖Vf‖` with
/// `V = Σ Λ_i† Θ_i`.
#[derive(Debug, Clone, Serialize)]
pub struct GavrutaReport {
    pub m: f64,
    pub n: f64,
    pub b1: f64,
    pub b2: f64,
    #[serde(skip)]
    pub v: CMatrix,
    pub norm_v: f64,
    /// `√(B1·B2)`.
    pub norm_v_bound: f64,
    pub sigma_max_i_minus_v: f64,
    pub sigma_max_i_minus_w: f64,
    /// `(1/B1)·((1 − m)/(1 + n))²`.
    pub theta_lower_guarantee: f64,
    pub theta_lower_actual: f64,
    /// `(1/B2)·(1 − m)²`, only when `n = 0` and `m ≥ 0`.
    pub lambda_lower_guarantee: Option<f64>,
    pub lambda_lower_actual: f64,
    /// Largest observed `(‖(I−V)f‖ − n‖Vf‖)/‖f‖`.
    pub premise_sup: f64,
}

impl GavrutaReport {
    pub fn norm_bound_holds(&self) -> bool {
        self.norm_v <= self.norm_v_bound + 1e-9
    }

    pub fn theta_bound_holds(&self, tol: &Tolerances) -> bool {
        self.theta_lower_actual >= self.theta_lower_guarantee * (1.0 - tol.eq) - tol.eq
    }

    pub fn lambda_bound_holds(&self, tol: &Tolerances) -> bool {
        match self.lambda_lower_guarantee {
            Some(g) => self.lambda_lower_actual >= g * (1.0 - tol.eq) - tol.eq,
            None => true,
        }
    }
}

fn witness(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Checks the closeness premise for Bessel families `f` (bound `B1`) and
/// `g` (bound `B2`) and, when it holds, the lower bounds it guarantees.
///
/// With `n = 0` the premise is exactly `σ_max(I − V) ≤ m`. Otherwise it is
/// probed on the right singular vectors of `I − V` and `samples` seeded
/// random vectors; one violating vector refutes it.
pub fn gavruta_check(
    f: &GFrame,
    g: &GFrame,
    m: f64,
    n: f64,
    sampling: &SamplingOptions,
    tol: &Tolerances,
) -> Result<GavrutaReport> {
    if !(m < 1.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("m = {m} must be finite and < 1")));
    }
    if !(n > -1.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("n = {n} must be finite and > -1")));
    }
    f.ensure_same_shape(g)?;
    let dim = f.hilbert_dim();
    let bf = f.bounds(tol);
    let bg = g.bounds(tol);
    let (b1, b2) = (bf.upper, bg.upper);

    let v = f.analysis().matrix.adjoint() * g.analysis().matrix;
    let i_minus_v = CMatrix::identity(dim, dim) - &v;
    let svd = i_minus_v.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let (top_index, sigma_max) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    let w = v.adjoint();
    let sigma_max_w = spectral_norm(&(CMatrix::identity(dim, dim) - &w));

    let slack = tol.eq * (1.0 + m.abs() + n.abs() * spectral_norm(&v));
    let excess_at = |x: &CVector| -> f64 {
        let norm = x.norm();
        ((&i_minus_v * x).norm() - n * (&v * x).norm()) / norm
    };

    let mut premise_sup = f64::NEG_INFINITY;
    let refute = |x: CVector, sup: &mut f64| -> Result<()> {
        let e = excess_at(&x);
        *sup = sup.max(e);
        if e > m + slack {
            Err(Error::PremiseNotVerifiable {
                excess: e - m,
                witness: witness(&x),
            })
        } else {
            Ok(())
        }
    };

    if n == 0.0 {
        let top = v_t.row(top_index).adjoint();
        refute(top, &mut premise_sup)?;
    } else {
        for i in 0..v_t.nrows() {
            refute(v_t.row(i).adjoint(), &mut premise_sup)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        for _ in 0..sampling.samples {
            refute(random_unit_vector(dim, &mut rng), &mut premise_sup)?;
        }
    }

    let norm_v = spectral_norm(&v);
    let lambda_lower_guarantee = if n == 0.0 && m >= 0.0 {
        Some((1.0 - m).powi(2) / b2)
    } else {
        None
    };
    Ok(GavrutaReport {
        m,
        n,
        b1,
        b2,
        v,
        norm_v,
        norm_v_bound: (b1 * b2).sqrt(),
        sigma_max_i_minus_v: sigma_max,
        sigma_max_i_minus_w: sigma_max_w,
        theta_lower_guarantee: ((1.0 - m) / (1.0 + n)).powi(2) / b1,
        theta_lower_actual: bg.lower,
        lambda_lower_guarantee,
        lambda_lower_actual: bf.lower,
        premise_sup,
    })
}
