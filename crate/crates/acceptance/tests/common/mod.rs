//! Dense truncated-Fock helpers shared by the integration tests.

#![allow(dead_code)]

use casimir_work::C64;
use nalgebra::DMatrix;

/// `e^{-iτV}` for `V = c_n a†a + c a†² + c* a²` on `dim` Fock states.
pub fn single_mode_unitary(cn: f64, cp: C64, tau: f64, dim: usize) -> DMatrix<C64> {
    let mut v = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim {
        v[(n, n)] = C64::new(cn * n as f64, 0.0);
        if n + 2 < dim {
            let amp = (((n + 1) * (n + 2)) as f64).sqrt();
            v[(n + 2, n)] = cp * amp;
            v[(n, n + 2)] = cp.conj() * amp;
        }
    }
    let eig = v.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -tau * l).exp()));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `Tr[U e^{-x a†a}]`.
pub fn thermal_trace(u: &DMatrix<C64>, x: f64) -> C64 {
    (0..u.nrows()).map(|n| u[(n, n)] * (-x * n as f64).exp()).sum()
}
