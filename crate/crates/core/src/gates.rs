//! Standard gate matrices. Two-qubit matrices use the basis `|a b⟩` with the
//! first listed site as the high bit.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;

use crate::pauli::PauliOp;

const O: C64 = C64::new(0.0, 0.0);
const L: C64 = C64::new(1.0, 0.0);

pub fn hadamard() -> Matrix2<C64> {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Matrix2::new(h, h, h, -h)
}

pub fn phase_s() -> Matrix2<C64> {
    Matrix2::new(L, O, O, C64::new(0.0, 1.0))
}

/// `diag(1, e^{-iπ/4})`.
pub fn t_gate() -> Matrix2<C64> {
    Matrix2::new(L, O, O, C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4))
}

pub fn cnot() -> Matrix4<C64> {
    Matrix4::new(
        L, O, O, O, //
        O, L, O, O, //
        O, O, O, L, //
        O, O, L, O,
    )
}

/// `exp(-i θ σ / 2)` for a Pauli axis σ.
pub fn rotation(axis: PauliOp, theta: f64) -> Matrix2<C64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::identity() * C64::new(c, 0.0) - axis.matrix() * C64::new(0.0, s)
}

pub fn is_unitary2(u: &Matrix2<C64>, tol: f64) -> bool {
    (u.adjoint() * u - Matrix2::identity()).camax() <= tol
}
