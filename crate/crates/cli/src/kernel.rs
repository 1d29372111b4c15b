//! Gauge-invariant subspace by exact diagonalization.

use gauge_peps_core::lattice::{LatticeState, Layout};
use gauge_peps_core::linalg::{SparseMatrix, C64};
use nalgebra::{DMatrix, DVector};

use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelCheck {
    pub dim: usize,
    /// Dimension of the common kernel of every Gauss generator.
    pub kernel_dim: usize,
    /// `‖(1 − P) ψ‖ / ‖ψ‖` with `P` the projector onto that kernel.
    pub residual: f64,
}

/// `K = Σ_{x,a} G_a(x)† G_a(x)`, whose kernel is the physical sector.
pub fn gauss_penalty(layout: &Layout) -> CliResult<SparseMatrix> {
    let n = layout.dim() as usize;
    let mut total = SparseMatrix::from_triplets(n, n, Vec::new());
    for x in 0..layout.geometry().site_count() {
        for generator in layout.gauss_generators(x)? {
            let g = layout.sum_matrix(&generator)?;
            total = total.add(&g.adjoint().matmul(&g));
        }
    }
    Ok(total)
}

/// Diagonalizes `K` densely and projects `state` onto eigenvectors whose
/// eigenvalue exceeds `threshold`.
pub fn kernel_membership(layout: &Layout, state: &LatticeState, threshold: f64) -> CliResult<KernelCheck> {
    let k = gauss_penalty(layout)?;
    let n = k.rows();
    let mut dense = DMatrix::<C64>::zeros(n, n);
    for (r, c, v) in k.triplets() {
        dense[(r, c)] += v;
    }
    let eigen = dense.symmetric_eigen();
    let psi = DVector::from_column_slice(state.amplitudes());
    let mut outside = 0.0;
    let mut kernel_dim = 0;
    for (i, &lambda) in eigen.eigenvalues.iter().enumerate() {
        if lambda.abs() < threshold {
            kernel_dim += 1;
        } else {
            outside += eigen.eigenvectors.column(i).dotc(&psi).norm_sqr();
        }
    }
    Ok(KernelCheck { dim: n, kernel_dim, residual: outside.sqrt() / state.norm() })
}
