//! Reference families and seeded random generators.

use num_complex::Complex64;
use rand::Rng;

use crate::frame::{make_gon_basis, make_griesz, GFrame};
use crate::linalg::{random_gaussian, random_unitary, CMatrix, Tolerances};

/// Three unit vectors at 120° in ℂ², as 1×2 blocks. Tight with bound 3/2.
pub fn mercedes() -> GFrame {
    let h = 3f64.sqrt() / 2.0;
    let rows = [[1.0, 0.0], [-0.5, h], [-0.5, -h]];
    let blocks = rows
        .iter()
        .map(|r| {
            CMatrix::from_row_slice(1, 2, &[Complex64::from(r[0]), Complex64::from(r[1])])
        })
        .collect();
    GFrame::new(2, blocks).expect("static family is valid")
}

/// Mercedes frame rotated in the real plane by `angle` radians.
pub fn rotated_mercedes(angle: f64) -> GFrame {
    let (s, c) = angle.sin_cos();
    let rot = CMatrix::from_row_slice(
        2,
        2,
        &[c.into(), (-s).into(), s.into(), c.into()],
    );
    mercedes().compose(&rot).expect("2x2 rotation")
}

/// Gaussian blocks of the given row dimensions.
pub fn random_family<R: Rng + ?Sized>(n: usize, dims: &[usize], rng: &mut R) -> GFrame {
    let blocks = dims.iter().map(|&d| random_gaussian(d, n, rng)).collect();
    GFrame::new(n, blocks).expect("positive dimensions")
}

/// Random block dimensions for `blocks` blocks summing to at least `n + extra`.
pub fn random_dims<R: Rng + ?Sized>(n: usize, blocks: usize, extra: usize, rng: &mut R) -> Vec<usize> {
    let blocks = blocks.max(1);
    let mut dims = vec![1usize; blocks];
    let target = (n + extra).max(blocks);
    let mut total = blocks;
    while total < target {
        let j = rng.random_range(0..blocks);
        dims[j] += 1;
        total += 1;
    }
    dims
}

/// Random partition of `n` into exactly `blocks` positive parts.
pub fn random_partition<R: Rng + ?Sized>(n: usize, blocks: usize, rng: &mut R) -> Vec<usize> {
    assert!(blocks >= 1 && blocks <= n, "need 1 <= blocks <= n");
    let mut dims = vec![1usize; blocks];
    for _ in blocks..n {
        let j = rng.random_range(0..blocks);
        dims[j] += 1;
    }
    dims
}

/// Overcomplete Gaussian g-frame: `Σd_j = n + extra` with `extra ≥ 1`.
pub fn random_overcomplete<R: Rng + ?Sized>(n: usize, blocks: usize, extra: usize, rng: &mut R) -> GFrame {
    let dims = random_dims(n, blocks, extra.max(1), rng);
    random_family(n, &dims, rng)
}

/// Haar-rotated g-on basis with the given partition.
pub fn random_gon<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> GFrame {
    let n: usize = dims.iter().sum();
    let q = random_unitary(n, rng);
    make_gon_basis(n, dims, Some(&q), &Tolerances::default()).expect("unitary rotation")
}

/// Invertible `X = U diag(σ) V†` with singular values log-spaced in `[1, cond]`.
pub fn random_invertible<R: Rng + ?Sized>(n: usize, cond: f64, rng: &mut R) -> CMatrix {
    let u = random_unitary(n, rng);
    let v = random_unitary(n, rng);
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        d[(i, i)] = Complex64::from(cond.powf(t));
    }
    u * d * v.adjoint()
}

/// g-Riesz basis `θ X` with a random g-on basis and `cond(X) = cond`.
pub fn random_griesz<R: Rng + ?Sized>(dims: &[usize], cond: f64, rng: &mut R) -> GFrame {
    let gon = random_gon(dims, rng);
    let x = random_invertible(gon.hilbert_dim(), cond, rng);
    make_griesz(&gon, &x, &Tolerances::default()).expect("well-conditioned X")
}
