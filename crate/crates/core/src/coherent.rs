//! Two-index g-coherent states on a truncated Fock space.
//!
//! A g-on basis `θ` with `L` blocks of common dimension `K` yields the
//! orthonormal basis `t_k^{(l)} = θ_l† e_k^{(l)}` of `ℂ^{K·L}`. Coherent
//! states are Gaussian-weighted double power series over that basis; the
//! ladder operators lower `k` and `l` respectively.
//!
//! Truncation keeps levels `k < K`, `l < L`. States are renormalized and
//! carry the discarded probability mass (`truncation_defect`). The raising
//! operators send the top level to zero, so the canonical commutation
//! relation only holds on interior levels.

use num_complex::Complex64;
use serde::Serialize;

use crate::check::Check;
use crate::duality::check_similar;
use crate::error::{Error, Result};
use crate::frame::GFrame;
use crate::linalg::{
    condition_number, herm_func, identity_deviation, relative_difference, CMatrix, CVector,
    HermFn, Tolerances,
};
use crate::quadrature::GaussLaguerre;

pub const DEFAULT_DEFECT_MAX: f64 = 1e-8;
pub const UNCERTAINTY_DEFECT_MAX: f64 = 1e-10;

/// `P(N ≥ m)` for `N ~ Poisson(x)`: the mass a cutoff at `m` levels discards.
pub fn poisson_tail(x: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if (m as f64) <= x {
        // Tail is O(1): complement of the head.
        let mut term = (-x).exp();
        let mut head = 0.0;
        for k in 0..m {
            if k > 0 {
                term *= x / k as f64;
            }
            head += term;
        }
        return (1.0 - head).max(0.0);
    }
    let log_fact: f64 = (1..=m).map(|i| (i as f64).ln()).sum();
    let mut term = (-x + m as f64 * x.ln() - log_fact).exp();
    let mut sum = 0.0;
    let mut k = m;
    while term > 0.0 {
        sum += term;
        k += 1;
        term *= x / k as f64;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Probability mass of the coherent state `(z, w)` outside `k < K, l < L`.
pub fn truncation_defect(z: Complex64, w: Complex64, levels: usize, blocks: usize) -> f64 {
    let qz = poisson_tail(z.norm_sqr(), levels);
    let qw = poisson_tail(w.norm_sqr(), blocks);
    qz + qw - qz * qw
}

/// Smallest cutoff `m` with `poisson_tail(x, m) ≤ limit`.
pub fn required_levels(x: f64, limit: f64) -> usize {
    let mut m = 1;
    while poisson_tail(x, m) > limit {
        m += 1;
    }
    m
}

/// `(z^k / √k!)_{k<K}` without the Gaussian factor.
pub fn series_coefficients(z: Complex64, levels: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(levels);
    let mut c = Complex64::new(1.0, 0.0);
    for k in 0..levels {
        if k > 0 {
            c = c * z / (k as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Exact norm of `aΦ − zΦ` for the renormalized truncated state: only the
/// top level `K − 1` fails to shift, leaving `|z|·|ĉ_{K−1}|` with `ĉ` the
/// normalized series coefficients.
pub fn eigen_residual(z: Complex64, levels: usize) -> f64 {
    let c = series_coefficients(z, levels);
    let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    z.norm() * c[levels - 1].norm() / norm
}

fn too_severe(z: Complex64, w: Complex64, levels: usize, blocks: usize, limit: f64) -> Error {
    Error::TruncationTooSevere {
        defect: truncation_defect(z, w, levels, blocks),
        limit,
        required_k: required_levels(z.norm_sqr(), limit / 2.0).max(levels),
        required_l: required_levels(w.norm_sqr(), limit / 2.0).max(blocks),
    }
}

/// A g-on basis arranged as the truncated two-index Fock space.
#[derive(Debug, Clone)]
pub struct FockStructure {
    levels: usize,
    blocks: usize,
    basis: CMatrix,
    source: GFrame,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherentState {
    pub z: [f64; 2],
    pub w: [f64; 2],
    #[serde(skip)]
    pub vector: CVector,
    pub truncation_defect: f64,
    /// `N(z,w)²·Σ|coefficient|²` before renormalization.
    pub mass: f64,
}

/// Lowering operators in the first (`a`) and second (`b`) Fock index.
#[derive(Debug, Clone)]
pub struct LadderPair {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl LadderPair {
    pub fn commutator_norm(&self) -> f64 {
        (&self.a * &self.b - &self.b * &self.a).norm()
    }
}

impl FockStructure {
    /// Requires a g-on basis whose `L` blocks all have `K` rows.
    pub fn new(gon: &GFrame, tol: &Tolerances) -> Result<Self> {
        if !gon.is_gon_basis(tol) {
            return Err(Error::NotOnBasis);
        }
        let dims = gon.block_dims();
        let levels = dims[0];
        if dims.iter().any(|&d| d != levels) {
            return Err(Error::NonUniformBlocks);
        }
        // Column l·K + k of T† is θ_l† e_k.
        let basis = gon.analysis().synthesis();
        Ok(FockStructure {
            levels,
            blocks: dims.len(),
            basis,
            source: gon.clone(),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn dim(&self) -> usize {
        self.levels * self.blocks
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn source(&self) -> &GFrame {
        &self.source
    }

    pub fn index(&self, k: usize, l: usize) -> usize {
        l * self.levels + k
    }

    pub fn column(&self, k: usize, l: usize) -> CVector {
        self.basis.column(self.index(k, l)).into_owned()
    }

    /// `z^k w^l / √(k! l!)` laid out by `index(k, l)`.
    pub fn coefficients(&self, z: Complex64, w: Complex64) -> CVector {
        let cz = series_coefficients(z, self.levels);
        let cw = series_coefficients(w, self.blocks);
        CVector::from_fn(self.dim(), |i, _| cz[i % self.levels] * cw[i / self.levels])
    }

    pub fn defect(&self, z: Complex64, w: Complex64) -> f64 {
        truncation_defect(z, w, self.levels, self.blocks)
    }

    /// Renormalized `N(z,w) Σ_{k,l} z^k w^l/√(k!l!) t_k^{(l)}`.
    pub fn coherent_state(&self, z: Complex64, w: Complex64, defect_max: f64) -> Result<CoherentState> {
        let defect = self.defect(z, w);
        if !(defect <= defect_max) {
            return Err(too_severe(z, w, self.levels, self.blocks, defect_max));
        }
        let gauss = (-(z.norm_sqr() + w.norm_sqr()) / 2.0).exp();
        let cz = series_coefficients(z, self.levels);
        let cw = series_coefficients(w, self.blocks);
        let mut vector = CVector::zeros(self.dim());
        for (l, &wl) in cw.iter().enumerate() {
            for (k, &zk) in cz.iter().enumerate() {
                vector.axpy(zk * wl * gauss, &self.basis.column(self.index(k, l)), Complex64::new(1.0, 0.0));
            }
        }
        let mass = vector.norm_squared();
        let norm = mass.sqrt();
        vector.unscale_mut(norm);
        Ok(CoherentState {
            z: [z.re, z.im],
            w: [w.re, w.im],
            vector,
            truncation_defect: defect,
            mass,
        })
    }

    /// The same state assembled as `e^{-|w|²/2} Σ_l w^l/√l! θ_l† χ_l(z)`
    /// with `χ_l(z)` the standard coherent state of block `l`.
    pub fn coherent_state_factorized(&self, z: Complex64, w: Complex64, defect_max: f64) -> Result<CVector> {
        let defect = self.defect(z, w);
        if !(defect <= defect_max) {
            return Err(too_severe(z, w, self.levels, self.blocks, defect_max));
        }
        let chi: CVector = CVector::from_iterator(
            self.levels,
            series_coefficients(z, self.levels)
                .into_iter()
                .map(|c| c * (-z.norm_sqr() / 2.0).exp()),
        );
        let cw = series_coefficients(w, self.blocks);
        let gw = (-w.norm_sqr() / 2.0).exp();
        let mut out = CVector::zeros(self.dim());
        for (l, theta) in self.source.blocks().iter().enumerate() {
            out += theta.adjoint() * &chi * (cw[l] * gw);
        }
        let norm = out.norm();
        Ok(out.unscale(norm))
    }

    pub fn ladder_ops(&self) -> LadderPair {
        let n = self.dim();
        // B·A_c: column (k, l) of the lowered basis is √k t_{k−1}^{(l)}.
        let mut lowered_k = CMatrix::zeros(n, n);
        let mut lowered_l = CMatrix::zeros(n, n);
        for l in 0..self.blocks {
            for k in 0..self.levels {
                let col = self.index(k, l);
                if k > 0 {
                    let src = self.basis.column(self.index(k - 1, l)) * Complex64::from((k as f64).sqrt());
                    lowered_k.set_column(col, &src);
                }
                if l > 0 {
                    let src = self.basis.column(self.index(k, l - 1)) * Complex64::from((l as f64).sqrt());
                    lowered_l.set_column(col, &src);
                }
            }
        }
        let b_adj = self.basis.adjoint();
        LadderPair {
            a: lowered_k * &b_adj,
            b: lowered_l * b_adj,
        }
    }

    /// `‖[a, a†] − I‖_F` restricted to levels `k ≤ K − 2` (all `l`).
    pub fn ccr_interior_defect(&self, ladder: &LadderPair) -> f64 {
        let comm = &ladder.a * ladder.a.adjoint() - ladder.a.adjoint() * &ladder.a;
        let interior: Vec<usize> = (0..self.blocks)
            .flat_map(|l| (0..self.levels.saturating_sub(1)).map(move |k| (k, l)))
            .map(|(k, l)| self.index(k, l))
            .collect();
        let cols = CMatrix::from_fn(self.dim(), interior.len(), |r, c| self.basis[(r, interior[c])]);
        let restricted = cols.adjoint() * comm * &cols;
        identity_deviation(&restricted) * (interior.len() as f64).sqrt()
    }

    /// `(1/π²)∫∫ |Φ⟩⟨Φ| dz dw` for unnormalized states, by Gauss–Laguerre in
    /// `|z|²`, `|w|²` and uniform angular grids.
    pub fn quadrature_identity(&self, radial: usize, angular: usize) -> Result<CMatrix> {
        bi_quadrature(&self.basis, &self.basis, self.levels, self.blocks, radial, angular)
    }

    /// `(Δq_a·Δp_a, Δq_b·Δp_b)` for the coherent state `(z, w)`.
    pub fn uncertainty_product(&self, z: Complex64, w: Complex64) -> Result<(f64, f64)> {
        if self.levels < 2 || self.blocks < 2 {
            // With a single level the lowering operator vanishes.
            return Err(Error::TruncationTooSevere {
                defect: self.defect(z, w),
                limit: UNCERTAINTY_DEFECT_MAX,
                required_k: required_levels(z.norm_sqr(), UNCERTAINTY_DEFECT_MAX / 2.0)
                    .max(self.levels)
                    .max(2),
                required_l: required_levels(w.norm_sqr(), UNCERTAINTY_DEFECT_MAX / 2.0)
                    .max(self.blocks)
                    .max(2),
            });
        }
        let phi = self.coherent_state(z, w, UNCERTAINTY_DEFECT_MAX)?.vector;
        let first = |v: &CVector, raise: bool| self.ladder_action(v, true, raise);
        let second = |v: &CVector, raise: bool| self.ladder_action(v, false, raise);
        Ok((uncertainty(&first, &phi), uncertainty(&second, &phi)))
    }

    /// `a v`, `a† v` (first index) or `b v`, `b† v` (second index) as shifts
    /// in coefficient space; avoids forming the `n × n` ladder matrices.
    pub fn ladder_action(&self, v: &CVector, first: bool, raise: bool) -> CVector {
        let coeffs = self.basis.ad_mul(v);
        let mut shifted = CVector::zeros(self.dim());
        for l in 0..self.blocks {
            for k in 0..self.levels {
                let (src, factor) = match (first, raise) {
                    (true, false) if k + 1 < self.levels => (self.index(k + 1, l), (k + 1) as f64),
                    (true, true) if k > 0 => (self.index(k - 1, l), k as f64),
                    (false, false) if l + 1 < self.blocks => (self.index(k, l + 1), (l + 1) as f64),
                    (false, true) if l > 0 => (self.index(k, l - 1), l as f64),
                    _ => continue,
                };
                shifted[self.index(k, l)] = coeffs[src] * factor.sqrt();
            }
        }
        &self.basis * shifted
    }
}

/// `Δq·Δp` for `q = (c + c†)/√2`, `p = (c − c†)/(√2 i)` given the action of `c`.
fn uncertainty(act: &dyn Fn(&CVector, bool) -> CVector, phi: &CVector) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = |v: &CVector| (act(v, false) + act(v, true)).scale(s);
    let p = |v: &CVector| (act(v, false) - act(v, true)) * Complex64::new(0.0, -s);
    let spread = |x: &dyn Fn(&CVector) -> CVector| {
        let xphi = x(phi);
        let mean = phi.dotc(&xphi).re;
        let second = xphi.norm_squared();
        (second - mean * mean).max(0.0).sqrt()
    };
    spread(&q) * spread(&p)
}

/// Node counts at which the truncated integrand is integrated exactly.
pub fn quadrature_thresholds(levels: usize, blocks: usize) -> (usize, usize) {
    let radial = levels.max(blocks);
    let angular = (2 * levels - 1).max(2 * blocks - 1);
    (radial, angular)
}

/// `(1/π²)∫∫ (L c(z,w)) (R c(z,w))† e^{-|z|²-|w|²} dz dw` where `c` holds the
/// series coefficients and `L`, `R` map coefficient space into `ℂⁿ`.
pub fn bi_quadrature(
    left: &CMatrix,
    right: &CMatrix,
    levels: usize,
    blocks: usize,
    radial: usize,
    angular: usize,
) -> Result<CMatrix> {
    let (need_radial, need_angular) = quadrature_thresholds(levels, blocks);
    if radial < need_radial || angular < need_angular {
        return Err(Error::InsufficientNodes {
            required_radial: need_radial,
            required_angular: need_angular,
        });
    }
    let rule = GaussLaguerre::new(radial);
    // (1/π)∫_ℂ g(z) e^{-|z|²} dz = Σ_i w_i (1/N) Σ_j g(√u_i e^{2πij/N}).
    let mut nodes: Vec<(Complex64, f64)> = Vec::with_capacity(radial * angular);
    for (&u, &weight) in rule.nodes.iter().zip(&rule.weights) {
        for j in 0..angular {
            let phase = 2.0 * std::f64::consts::PI * j as f64 / angular as f64;
            nodes.push((Complex64::from_polar(u.sqrt(), phase), weight / angular as f64));
        }
    }
    let dim = levels * blocks;
    let coeffs_z: Vec<Vec<Complex64>> = nodes.iter().map(|(z, _)| series_coefficients(*z, levels)).collect();
    let coeffs_w: Vec<Vec<Complex64>> = nodes.iter().map(|(w, _)| series_coefficients(*w, blocks)).collect();
    let mut moment = CMatrix::zeros(dim, dim);
    let mut c = CVector::zeros(dim);
    for (iz, (_, wz)) in nodes.iter().enumerate() {
        for (iw, (_, ww)) in nodes.iter().enumerate() {
            for i in 0..dim {
                c[i] = coeffs_z[iz][i % levels] * coeffs_w[iw][i / levels];
            }
            moment.ger(Complex64::from(wz * ww), &c, &c.map(|x| x.conj()), Complex64::from(1.0));
        }
    }
    Ok(left * moment * right.adjoint())
}

/// Vectors attached to one label `(z, w)` by a g-Riesz basis `Λ = θX`.
#[derive(Debug, Clone)]
pub struct BiCoherentStates {
    /// Coherent state of the underlying g-on basis.
    pub theta: CoherentState,
    /// Series over `u_k^{(l)} = Λ_l† e_k = X† t_k^{(l)}`.
    pub phi_lambda: CVector,
    /// Series over `v_k^{(l)} = Λ̃_l† e_k = S⁻¹X† t_k^{(l)}`.
    pub phi_dual: CVector,
    /// Series over `p_k^{(l)} = X⁻¹ t_k^{(l)}`.
    pub phi_up: CVector,
}

/// Transformed bases and ladder operators of a g-Riesz basis `Λ_j = θ_j X`.
#[derive(Debug, Clone)]
pub struct BiCoherentSystem {
    pub fock: FockStructure,
    pub x: CMatrix,
    pub x_inv: CMatrix,
    pub frame_operator: CMatrix,
    pub frame_operator_inv: CMatrix,
    pub u_basis: CMatrix,
    pub v_basis: CMatrix,
    pub p_basis: CMatrix,
    pub ladder: LadderPair,
    /// `X† a (X†)⁻¹` and its `b` analogue.
    pub lambda_ops: LadderPair,
    /// `S⁻¹X† a (X†)⁻¹ S`.
    pub dual_ops: LadderPair,
    /// `X⁻¹ a X`.
    pub up_ops: LadderPair,
}

impl BiCoherentSystem {
    /// Recovers the polar factorization `X = S^{1/2}`, `θ = Λ S^{-1/2}`.
    pub fn new(riesz: &GFrame, tol: &Tolerances) -> Result<Self> {
        let class = riesz.classify(tol);
        if !class.is_riesz_basis {
            return Err(Error::NotRieszBasis);
        }
        let dims = riesz.block_dims();
        if dims.iter().any(|&d| d != dims[0]) {
            return Err(Error::NonUniformBlocks);
        }
        let gon = riesz.parseval_transform(tol)?;
        let x = check_similar(riesz, &gon, tol)?.ok_or(Error::NotRieszBasis)?;
        Self::with_factorization(&gon, &x, tol)
    }

    /// Uses an explicit factorization `Λ_j = θ_j X`.
    pub fn with_factorization(gon: &GFrame, x: &CMatrix, tol: &Tolerances) -> Result<Self> {
        let fock = FockStructure::new(gon, tol)?;
        let n = fock.dim();
        if x.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "factor is {}x{}, expected {n}x{n}",
                x.nrows(),
                x.ncols()
            )));
        }
        let condition = condition_number(x);
        if !(condition < 1.0 / tol.pd) {
            return Err(Error::Singular { condition });
        }
        let x_inv = x.clone().try_inverse().ok_or(Error::Singular { condition })?;
        let x_adj = x.adjoint();
        let x_adj_inv = x_inv.adjoint();
        let s = {
            let s = &x_adj * x;
            (&s + s.adjoint()).scale(0.5)
        };
        let s_inv = herm_func(&s, HermFn::Inverse, tol)?;

        let t = fock.basis();
        let u_basis = &x_adj * t;
        let v_basis = &s_inv * &x_adj * t;
        let p_basis = &x_inv * t;

        let ladder = fock.ladder_ops();
        let conj = |left: &CMatrix, right: &CMatrix| LadderPair {
            a: left * &ladder.a * right,
            b: left * &ladder.b * right,
        };
        let lambda_ops = conj(&x_adj, &x_adj_inv);
        let dual_ops = conj(&(&s_inv * &x_adj), &(&x_adj_inv * &s));
        let up_ops = conj(&x_inv, x);
        Ok(BiCoherentSystem {
            fock,
            x: x.clone(),
            x_inv,
            frame_operator: s,
            frame_operator_inv: s_inv,
            u_basis,
            v_basis,
            p_basis,
            ladder,
            lambda_ops,
            dual_ops,
            up_ops,
        })
    }

    pub fn condition(&self) -> f64 {
        condition_number(&self.x)
    }

    /// The three transformed states, each summed over its own basis with
    /// the renormalized coefficients of `Φ_θ(z, w)`.
    pub fn states(&self, z: Complex64, w: Complex64, defect_max: f64) -> Result<BiCoherentStates> {
        let theta = self.fock.coherent_state(z, w, defect_max)?;
        let norm = theta.mass.sqrt();
        let gauss = (-(z.norm_sqr() + w.norm_sqr()) / 2.0).exp();
        let coef = self.fock.coefficients(z, w) * Complex64::from(gauss / norm);
        Ok(BiCoherentStates {
            phi_lambda: &self.u_basis * &coef,
            phi_dual: &self.v_basis * &coef,
            phi_up: &self.p_basis * &coef,
            theta,
        })
    }

    /// `(1/π²)∫∫|Φ_Λ⟩⟨Φ_Λ̃|` and `(1/π²)∫∫|Φ_Λ⟩⟨Φ_Λ↑|`.
    pub fn bi_resolutions(&self, radial: usize, angular: usize) -> Result<(CMatrix, CMatrix)> {
        let (k, l) = (self.fock.levels(), self.fock.blocks());
        Ok((
            bi_quadrature(&self.u_basis, &self.v_basis, k, l, radial, angular)?,
            bi_quadrature(&self.u_basis, &self.p_basis, k, l, radial, angular)?,
        ))
    }

    /// Every identity relating the three families at one label `(z, w)`.
    pub fn verify(
        &self,
        z: Complex64,
        w: Complex64,
        radial: usize,
        angular: usize,
        tol: &Tolerances,
    ) -> Result<Vec<Check>> {
        let st = self.states(z, w, DEFAULT_DEFECT_MAX)?;
        let cond = self.condition();
        let (k_max, l_max) = (self.fock.levels(), self.fock.blocks());
        let mut checks = Vec::new();

        let inner = st.phi_lambda.dotc(&st.phi_up);
        checks.push(Check::at_most("inner_lambda_up_is_one", (inner - Complex64::from(1.0)).norm(), tol.eq * cond));
        checks.push(Check::at_most(
            "phi_up_equals_phi_dual",
            (&st.phi_up - &st.phi_dual).norm(),
            tol.eq * cond,
        ));
        checks.push(Check::at_most(
            "dual_basis_equals_up_basis",
            relative_difference(&self.v_basis, &self.p_basis),
            tol.eq * cond,
        ));
        let x_adj = self.x.adjoint();
        checks.push(Check::at_most(
            "s_xinv_equals_x_adjoint",
            relative_difference(&(&self.frame_operator * &self.x_inv), &x_adj),
            tol.eq * cond,
        ));
        checks.push(Check::at_most(
            "a_lambda_equals_a_up",
            relative_difference(&self.lambda_ops.a, &self.up_ops.a),
            tol.eq * cond,
        ));
        checks.push(Check::at_most(
            "a_dual_equals_a_up",
            relative_difference(&self.dual_ops.a, &self.up_ops.a),
            tol.eq * cond * cond,
        ));

        let mut lowering: f64 = 0.0;
        for l in 0..l_max {
            for k in 0..k_max {
                let col = self.fock.index(k, l);
                let sk = Complex64::from((k as f64).sqrt());
                for (ops, basis) in [(&self.lambda_ops, &self.u_basis), (&self.dual_ops, &self.v_basis)] {
                    let image = &ops.a * basis.column(col);
                    let expect = if k > 0 {
                        basis.column(self.fock.index(k - 1, l)) * sk
                    } else {
                        CVector::zeros(basis.nrows())
                    };
                    lowering = lowering.max((image - expect).norm() / basis.column(col).norm());
                }
            }
        }
        checks.push(Check::at_most("lowering_actions", lowering, tol.eq * cond * cond * (k_max as f64).sqrt()));

        let res_z = eigen_residual(z, k_max);
        let res_w = eigen_residual(w, l_max);
        let slack = tol.eq * cond * cond * (1.0 + z.norm() + w.norm());
        for (name, ops, phi) in [
            ("eigen_lambda", &self.lambda_ops, &st.phi_lambda),
            ("eigen_dual", &self.dual_ops, &st.phi_dual),
            ("eigen_up", &self.up_ops, &st.phi_up),
        ] {
            let ra = (&ops.a * phi - phi * z).norm() / phi.norm();
            let rb = (&ops.b * phi - phi * w).norm() / phi.norm();
            checks.push(Check::at_most(format!("{name}_a"), ra, cond * res_z + slack));
            checks.push(Check::at_most(format!("{name}_b"), rb, cond * res_w + slack));
        }

        let (dual_res, up_res) = self.bi_resolutions(radial, angular)?;
        let quad_tol = QUADRATURE_TOL * cond * cond;
        checks.push(Check::at_most("bi_resolution_dual", identity_deviation(&dual_res), quad_tol));
        checks.push(Check::at_most("bi_resolution_up", identity_deviation(&up_res), quad_tol));
        Ok(checks)
    }
}

/// Default tolerance of the quadrature resolution of identity.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// All three families and their ladder operators at one label.
#[derive(Debug, Clone)]
pub struct BiCoherentFamily {
    pub system: BiCoherentSystem,
    pub states: BiCoherentStates,
}

pub fn bicoherent_family(riesz: &GFrame, z: Complex64, w: Complex64, tol: &Tolerances) -> Result<BiCoherentFamily> {
    let system = BiCoherentSystem::new(riesz, tol)?;
    let states = system.states(z, w, DEFAULT_DEFECT_MAX)?;
    Ok(BiCoherentFamily { system, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{mercedes, random_gon, random_griesz};
    use crate::frame::{make_gon_basis, make_griesz};
    use crate::linalg::{random_unitary, ONE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn coordinate_fock(k: usize, l: usize) -> FockStructure {
        let tol = Tolerances::default();
        let gon = make_gon_basis(k * l, &vec![k; l], None, &tol).unwrap();
        FockStructure::new(&gon, &tol).unwrap()
    }

    fn rotated_fock(k: usize, l: usize, seed: u64) -> FockStructure {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gon = random_gon(&vec![k; l], &mut rng);
        FockStructure::new(&gon, &Tolerances::default()).unwrap()
    }

    #[test]
    fn poisson_tail_matches_direct_sums() {
        for &x in &[0.0f64, 0.25, 1.0, 4.0, 9.0, 36.0] {
            for m in 0..60usize {
                // Oracle: explicit e^{-x} x^k / k! built from powers and factorials.
                let term = |k: usize| {
                    let mut t = (-x).exp();
                    for i in 1..=k {
                        t *= x / i as f64;
                    }
                    t
                };
                let head: f64 = (0..m).map(term).sum();
                let tail_sum: f64 = (m..m + 400).map(term).sum();
                let got = poisson_tail(x, m);
                let expect = if tail_sum < 0.5 { tail_sum } else { 1.0 - head };
                assert!(
                    (got - expect).abs() <= 1e-13 * expect.max(1e-300) + 1e-15,
                    "x={x} m={m}: {got} vs {expect}"
                );
            }
        }
        assert_eq!(poisson_tail(0.0, 3), 0.0);
        assert_eq!(poisson_tail(2.0, 0), 1.0);
    }

    #[test]
    fn fock_structure_examples() {
        let fs = coordinate_fock(2, 2);
        assert_eq!(fs.basis(), &CMatrix::identity(4, 4));
        assert_eq!(fs.index(1, 1), 3);

        let fs = rotated_fock(3, 3, 17);
        let gram = fs.basis().adjoint() * fs.basis();
        assert!(identity_deviation(&gram) * 3.0 <= 1e-10);

        // θ_j f = Σ_k ⟨t_k^{(j)}, f⟩ e_k.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = crate::linalg::random_unit_vector(9, &mut rng);
        for j in 0..3 {
            let direct = fs.source().block(j) * &f;
            let via_basis = CVector::from_fn(3, |k, _| fs.column(k, j).dotc(&f));
            assert!((direct - via_basis).norm() < 1e-12);
        }

        let tol = Tolerances::default();
        assert_eq!(FockStructure::new(&mercedes(), &tol).unwrap_err(), Error::NotOnBasis);
        let uneven = make_gon_basis(3, &[2, 1], None, &tol).unwrap();
        assert_eq!(FockStructure::new(&uneven, &tol).unwrap_err(), Error::NonUniformBlocks);
    }

    #[test]
    fn vacuum_state() {
        let fs = rotated_fock(3, 2, 4);
        let st = fs.coherent_state(ZERO_C, ZERO_C, DEFAULT_DEFECT_MAX).unwrap();
        assert!((st.vector - fs.column(0, 0)).norm() < 1e-15);
        assert_eq!(st.truncation_defect, 0.0);
    }

    const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn single_mode_series() {
        let fs = coordinate_fock(30, 2);
        let st = fs.coherent_state(c(1.0, 0.0), ZERO_C, DEFAULT_DEFECT_MAX).unwrap();
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            let expect = (-0.5f64).exp() / fact.sqrt();
            assert!((st.vector[fs.index(k, 0)] - Complex64::from(expect)).norm() < 1e-15);
            assert_eq!(st.vector[fs.index(k, 1)], ZERO_C);
        }
        assert!((st.vector.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn severe_truncation_is_rejected() {
        let fs = coordinate_fock(10, 1);
        match fs.coherent_state(c(6.0, 0.0), ZERO_C, DEFAULT_DEFECT_MAX) {
            Err(Error::TruncationTooSevere { required_k, defect, .. }) => {
                assert!(defect > 0.5);
                assert!(poisson_tail(36.0, required_k) <= DEFAULT_DEFECT_MAX / 2.0);
                assert!(poisson_tail(36.0, required_k - 1) > DEFAULT_DEFECT_MAX / 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mass_and_two_forms_agree() {
        let fs = rotated_fock(12, 10, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut tested = 0;
        while tested < 20 {
            let z = c(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let w = c(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            if fs.defect(z, w) > DEFAULT_DEFECT_MAX {
                continue;
            }
            let st = fs.coherent_state(z, w, DEFAULT_DEFECT_MAX).unwrap();
            assert!((st.vector.norm() - 1.0).abs() < 1e-10);
            assert!((st.mass - (1.0 - st.truncation_defect)).abs() < 1e-12);
            let factorized = fs.coherent_state_factorized(z, w, DEFAULT_DEFECT_MAX).unwrap();
            assert!((factorized - &st.vector).norm() < 1e-12);
            tested += 1;
        }
    }

    #[test]
    fn ladder_structure() {
        let fs = rotated_fock(4, 3, 9);
        let ops = fs.ladder_ops();
        for l in 0..3 {
            assert!((&ops.a * fs.column(0, l)).norm() < 1e-14);
        }
        for k in 0..4 {
            assert!((&ops.b * fs.column(k, 0)).norm() < 1e-14);
        }
        assert!(ops.commutator_norm() <= 1e-12);
        assert!(fs.ccr_interior_defect(&ops) <= 1e-12);
        // The top level breaks the commutation relation.
        let comm = &ops.a * ops.a.adjoint() - ops.a.adjoint() * &ops.a;
        assert!((identity_deviation(&comm)) > 0.1);
        // Exact action on the basis.
        let image = &ops.a * fs.column(2, 1);
        assert!((image - fs.column(1, 1) * Complex64::from(2f64.sqrt())).norm() < 1e-13);
        let image = &ops.b * fs.column(3, 2);
        assert!((image - fs.column(3, 1) * Complex64::from(2f64.sqrt())).norm() < 1e-13);
    }

    #[test]
    fn eigen_relations() {
        let fs = coordinate_fock(25, 2);
        let ops = fs.ladder_ops();
        let vac = fs.coherent_state(ZERO_C, ZERO_C, DEFAULT_DEFECT_MAX).unwrap();
        assert_eq!((&ops.a * &vac.vector).norm(), 0.0);

        let z = c(0.5, 0.0);
        let st = fs.coherent_state(z, ZERO_C, DEFAULT_DEFECT_MAX).unwrap();
        let residual = (&ops.a * &st.vector - &st.vector * z).norm();
        assert!(residual <= 1e-10);
        // Series oracle: the only surviving term is z·ĉ_{K−1} t_{K−1}.
        let mut fact = 1.0;
        for k in 1..25 {
            fact *= k as f64;
        }
        let tail = 0.5f64.powi(25) / fact.sqrt();
        let norm: f64 = (0..25)
            .map(|k: i32| {
                let f: f64 = (1..=k).map(f64::from).product();
                0.25f64.powi(k) / f
            })
            .sum::<f64>()
            .sqrt();
        assert!((eigen_residual(z, 25) - tail / norm).abs() <= 1e-12 * tail / norm);
        assert!((residual - tail / norm).abs() <= 1e-15);

        // A tighter truncation makes the residual visible and still exact.
        let fs = rotated_fock(6, 3, 10);
        let ops = fs.ladder_ops();
        let (z, w) = (c(0.3, 0.2), c(-0.2, 0.1));
        let st = fs.coherent_state(z, w, 1e-3).unwrap();
        let ra = (&ops.a * &st.vector - &st.vector * z).norm();
        let rb = (&ops.b * &st.vector - &st.vector * w).norm();
        assert!((ra - eigen_residual(z, 6)).abs() <= 1e-13);
        assert!((rb - eigen_residual(w, 3)).abs() <= 1e-13);
    }

    /// `(1/π)∫_ℂ e^{-|z|²} z^k z̄^m dz` by a composite midpoint rule in
    /// polar coordinates: no Laguerre nodes involved.
    fn moment_oracle(k: i32, m: i32) -> Complex64 {
        let (nr, nphi, rmax) = (20000, 16, 9.0);
        let dr = rmax / nr as f64;
        let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..nr {
            let r = (i as f64 + 0.5) * dr;
            let radial = (-r * r).exp() * r.powi(k + m) * r * dr;
            for j in 0..nphi {
                let phi = j as f64 * dphi;
                acc += Complex64::from_polar(1.0, (k - m) as f64 * phi) * radial * dphi;
            }
        }
        acc / std::f64::consts::PI
    }

    #[test]
    fn moments_oracle_agrees_with_rule() {
        let fact = [1.0, 1.0, 2.0, 6.0];
        for k in 0..3 {
            for m in 0..3 {
                let expect = if k == m { fact[k as usize] } else { 0.0 };
                assert!((moment_oracle(k, m) - Complex64::from(expect)).norm() < 1e-7);
            }
        }
        // The quadrature moment matrix in coefficient space is diagonal
        // with entries k!/k! = 1 per level.
        let coeff = bi_quadrature(&CMatrix::identity(3, 3), &CMatrix::identity(3, 3), 3, 1, 3, 5).unwrap();
        assert!(identity_deviation(&coeff) < 1e-13);
    }

    #[test]
    fn quadrature_examples() {
        let fs = coordinate_fock(1, 1);
        let q = fs.quadrature_identity(1, 1).unwrap();
        assert!((q[(0, 0)] - ONE).norm() < 1e-14);

        let fs = rotated_fock(3, 3, 11);
        let q = fs.quadrature_identity(4, 7).unwrap();
        assert!((q - CMatrix::identity(9, 9)).norm() <= 1e-10);

        match fs.quadrature_identity(4, 3) {
            Err(Error::InsufficientNodes { required_radial, required_angular }) => {
                assert_eq!((required_radial, required_angular), (3, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uncertainty_examples() {
        let fs = rotated_fock(6, 4, 12);
        let (a, b) = fs.uncertainty_product(ZERO_C, ZERO_C).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);

        let fs = coordinate_fock(40, 40);
        let (a, b) = fs.uncertainty_product(c(1.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((a - 0.5).abs() < 1e-8 && (b - 0.5).abs() < 1e-8, "{a} {b}");

        let fs = coordinate_fock(10, 2);
        assert!(matches!(
            fs.uncertainty_product(c(4.0, 0.0), ZERO_C),
            Err(Error::TruncationTooSevere { .. })
        ));
        let fs = coordinate_fock(1, 4);
        assert!(matches!(
            fs.uncertainty_product(ZERO_C, ZERO_C),
            Err(Error::TruncationTooSevere { required_k: 2, .. })
        ));
    }

    #[test]
    fn bicoherent_trivial_factor() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let gon = random_gon(&[7; 7], &mut rng);
        let sys = BiCoherentSystem::with_factorization(&gon, &CMatrix::identity(49, 49), &tol).unwrap();
        let st = sys.states(c(0.4, -0.2), c(0.1, 0.3), DEFAULT_DEFECT_MAX).unwrap();
        for v in [&st.phi_lambda, &st.phi_dual, &st.phi_up] {
            assert!((v - &st.theta.vector).norm() < 1e-14);
        }
        assert!(sys.verify(c(0.4, -0.2), c(0.1, 0.3), 7, 13, &tol).unwrap().iter().all(|c| c.passed));
    }

    #[test]
    fn bicoherent_diagonal_factor() {
        let tol = Tolerances::default();
        let gon = make_gon_basis(4, &[2, 2], None, &tol).unwrap();
        let x = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::from(2.0),
            ONE,
            ONE,
            ONE,
        ]));
        let sys = BiCoherentSystem::with_factorization(&gon, &x, &tol).unwrap();
        assert!((&sys.u_basis - x.adjoint() * sys.fock.basis()).norm() < 1e-15);
        // Direct-sum oracle Σ_{k,l} u_k^{(l)} (v_k^{(l)})† = X† S⁻¹ X = I.
        let direct = &sys.u_basis * sys.v_basis.adjoint();
        assert!(identity_deviation(&direct) < 1e-15);
        let (dual_res, up_res) = sys.bi_resolutions(2, 3).unwrap();
        assert!(identity_deviation(&dual_res) <= 1e-9);
        assert!(identity_deviation(&up_res) <= 1e-9);
        assert!((&sys.frame_operator * &sys.x_inv - x.adjoint()).norm() < 1e-15);
        // X†a(X†)⁻¹ and X⁻¹aX differ as soon as X is not unitary:
        // on t_1^{(0)} = e_1 they give 2·e_0 and e_0/2.
        let e1 = sys.fock.column(1, 0);
        let lam = &sys.lambda_ops.a * &e1;
        let up = &sys.up_ops.a * &e1;
        assert!((lam[0] - Complex64::from(2.0)).norm() < 1e-15);
        assert!((up[0] - Complex64::from(0.5)).norm() < 1e-15);
        assert!(relative_difference(&sys.dual_ops.a, &sys.up_ops.a) < 1e-15);
    }

    #[test]
    fn bicoherent_from_riesz_frame() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let riesz = random_griesz(&[7; 7], 5.0, &mut rng);
        let fam = bicoherent_family(&riesz, c(0.3, 0.1), c(-0.2, 0.2), &tol).unwrap();
        let sys = &fam.system;
        // The polar factor is S^{1/2}.
        let s_half = herm_func(&riesz.frame_operator(), HermFn::Sqrt, &tol).unwrap();
        assert!(relative_difference(&sys.x, &s_half) < 1e-10);
        // u_k^{(l)} = Λ_l† e_k does not depend on the factorization.
        let t = riesz.analysis().synthesis();
        assert!(relative_difference(&sys.u_basis, &t) < 1e-10);
        let st = &fam.states;
        assert!((st.phi_lambda.dotc(&st.phi_up) - ONE).norm() < 1e-10);
        assert!((&st.phi_up - &st.phi_dual).norm() < 1e-10);

        assert_eq!(
            BiCoherentSystem::new(&mercedes(), &tol).unwrap_err(),
            Error::NotRieszBasis
        );
        let q = random_unitary(3, &mut rng);
        let uneven = make_gon_basis(3, &[2, 1], Some(&q), &tol).unwrap();
        let uneven = make_griesz(&uneven, &(CMatrix::identity(3, 3) * Complex64::from(2.0)), &tol).unwrap();
        assert_eq!(BiCoherentSystem::new(&uneven, &tol).unwrap_err(), Error::NonUniformBlocks);
    }
}
