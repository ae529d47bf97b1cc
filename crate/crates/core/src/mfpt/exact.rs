use nalgebra::DMatrix;

use super::{MfptError, MfptTable};
use crate::graph::Graph;
use crate::spectral::CentralityVector;

pub const DEFAULT_DENSE_CAP: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    pub dense_cap: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { dense_cap: DEFAULT_DENSE_CAP }
    }
}

/// All mean first passage times via the fundamental matrix.
///
/// With `u = π / ‖π‖₁`, `Z = (I − W + 1uᵀ)⁻¹` is a generalized inverse of
/// `I − W` for any such `u`, so the stationary vector is recovered exactly
/// as `uᵀZ` even when `pi` carries power-method error, and
/// `M = (I − Z + 11ᵀ diag(Z)) diag(1/π)`.
pub fn mfpt_exact(
    g: &Graph,
    pi: &CentralityVector,
    opts: ExactOptions,
) -> Result<MfptTable, MfptError> {
    let n = g.node_count();
    if n > opts.dense_cap {
        return Err(MfptError::DenseCapExceeded { n, cap: opts.dense_cap });
    }
    if pi.len() != n {
        return Err(MfptError::DimensionMismatch { graph: n, pi: pi.len() });
    }
    let mass: f64 = pi.values.iter().sum();
    let u: Vec<f64> = pi.values.iter().map(|v| v / mass).collect();

    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, j, w) in g.edges() {
        a[(i, j)] -= w;
    }
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += u[j];
        }
    }
    let mut z = a.clone().lu().try_inverse().ok_or(MfptError::Singular)?;
    // One step of iterative refinement: Z ← Z + Z(I − AZ).
    let mut r = -(&a * &z);
    for i in 0..n {
        r[(i, i)] += 1.0;
    }
    z += &z * r;

    let stationary: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| u[i] * z[(i, j)]).sum::<f64>())
        .collect();
    if stationary.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(MfptError::Singular);
    }

    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                1.0 / stationary[j]
            } else {
                (z[(j, j)] - z[(i, j)]) / stationary[j]
            };
        }
    }
    Ok(MfptTable::exact(n, values))
}
