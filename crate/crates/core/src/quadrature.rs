//! Gauss–Laguerre rules for `∫₀^∞ e^{-u} p(u) du`.

use nalgebra::DMatrix;

/// Nodes and weights of the `n`-point rule; exact for polynomials of
/// degree `≤ 2n − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Golub–Welsch: eigenvalues of the Jacobi matrix with diagonal
    /// `2i + 1` and off-diagonal `i + 1`; weights are the squared first
    /// eigenvector components.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a quadrature rule needs at least one node");
        let jacobi = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                (2 * i + 1) as f64
            } else if i.abs_diff(j) == 1 {
                i.max(j) as f64
            } else {
                0.0
            }
        });
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussLaguerre {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
