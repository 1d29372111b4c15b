//! SU(2) in the Euler-angle parameterization.
//!
//! States `|j m⟩` of one irrep are indexed by `k = m + j`, so `m` ascends
//! with the index. `D^j(α, β, γ) = exp(−iαJ_z) exp(−iβJ_y) exp(−iγJ_z)` with
//! Condon–Shortley phases.

use core::f64::consts::PI;

use num_traits::Float;

use crate::linalg::{wrap, CMatrix, C64, I, ZERO};

pub const FOUR_PI: f64 = 4.0 * PI;

/// Euler angles of an SU(2) element, `α, γ ∈ [0, 4π)` and `β ∈ [0, π]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Euler {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Euler {
    pub const IDENTITY: Euler = Euler { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha: wrap(alpha, FOUR_PI), beta, gamma: wrap(gamma, FOUR_PI) }
    }
}

fn factorial(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Small Wigner matrix element `d^j_{m'm}(β)` for doubled arguments.
pub fn small_d(tj: i64, tmp: i64, tm: i64, beta: f64) -> f64 {
    let j_plus_mp = (tj + tmp) / 2;
    let j_minus_mp = (tj - tmp) / 2;
    let j_plus_m = (tj + tm) / 2;
    let j_minus_m = (tj - tm) / 2;
    let mp_minus_m = (tmp - tm) / 2;
    let root = Float::sqrt(factorial(j_plus_mp) * factorial(j_minus_mp) * factorial(j_plus_m) * factorial(j_minus_m));
    let (c, s) = (Float::cos(beta / 2.0), Float::sin(beta / 2.0));
    let k_min = 0.max(-mp_minus_m);
    let k_max = j_plus_m.min(j_minus_mp);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let sign = if (k + mp_minus_m) % 2 == 0 { 1.0 } else { -1.0 };
        let den = factorial(j_plus_m - k) * factorial(k) * factorial(j_minus_mp - k) * factorial(k + mp_minus_m);
        let cos_pow = (tj - 2 * k - mp_minus_m) as i32;
        let sin_pow = (2 * k + mp_minus_m) as i32;
        sum += sign / den * Float::powi(c, cos_pow) * Float::powi(s, sin_pow);
    }
    root * sum
}

/// `D^j(g)` for doubled spin `tj`, basis ascending in `m`.
pub fn wigner_d(tj: u32, g: &Euler) -> CMatrix {
    let tj = tj as i64;
    let dim = (tj + 1) as usize;
    CMatrix::from_fn(dim, dim, |r, c| {
        let tmp = 2 * r as i64 - tj;
        let tm = 2 * c as i64 - tj;
        let phase = -(tmp as f64) * g.alpha / 2.0 - (tm as f64) * g.gamma / 2.0;
        C64::from_polar(small_d(tj, tmp, tm, g.beta), phase)
    })
}

/// Spin matrices `(J_x, J_y, J_z)` for doubled spin `tj`.
pub fn spin_matrices(tj: u32) -> [CMatrix; 3] {
    let dim = tj as usize + 1;
    let j = tj as f64 / 2.0;
    let m_of = |k: usize| k as f64 - j;
    let mut raise = CMatrix::zeros(dim, dim);
    for k in 0..dim.saturating_sub(1) {
        let m = m_of(k);
        raise[(k + 1, k)] = C64::new(Float::sqrt(j * (j + 1.0) - m * (m + 1.0)), 0.0);
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower).scale(C64::new(0.5, 0.0));
    let jy = (&raise - &lower).scale(C64::new(0.0, -0.5));
    let jz = CMatrix::diag(&(0..dim).map(|k| C64::new(m_of(k), 0.0)).collect::<alloc::vec::Vec<_>>());
    [jx, jy, jz]
}

/// Euler angles of the element whose spin-½ matrix (ascending basis) is `u`.
pub fn euler_from_spin_half(u: &CMatrix) -> Euler {
    // u = [[e^{iS} c, e^{iΔ} s], [−e^{−iΔ} s, e^{−iS} c]] with S = (α+γ)/2, Δ = (α−γ)/2
    let (u00, u10) = (u[(0, 0)], u[(1, 0)]);
    let beta = 2.0 * Float::atan2(u10.norm(), u00.norm());
    let sum = u00.arg();
    let diff = -(-u10).arg();
    Euler::new(sum + diff, beta, sum - diff)
}

pub fn compose(a: &Euler, b: &Euler) -> Euler {
    euler_from_spin_half(&wigner_d(1, a).matmul(&wigner_d(1, b)))
}

pub fn inverse(g: &Euler) -> Euler {
    euler_from_spin_half(&wigner_d(1, g).adjoint())
}

/// The element `exp(i q·σ/2)`, so that `D^j` of it equals `exp(i q·J^j)`.
pub fn element_from_parameters(q: [f64; 3]) -> Euler {
    let [jx, jy, jz] = spin_matrices(1);
    let generator = &(&jx.scale(C64::new(q[0], 0.0)) + &jy.scale(C64::new(q[1], 0.0))) + &jz.scale(C64::new(q[2], 0.0));
    euler_from_spin_half(&generator.scale(I).expm())
}

/// Whether two Euler triples describe the same SU(2) element.
pub fn same_element(a: &Euler, b: &Euler) -> bool {
    let diff = &wigner_d(1, a) - &wigner_d(1, b);
    diff.as_slice().iter().all(|z| (*z - ZERO).norm() < 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_half_rotation_about_y() {
        let beta = 1.1;
        let d = wigner_d(1, &Euler::new(0.0, beta, 0.0));
        let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
        // ascending basis (−½, +½); the descending display is [[c, −s], [s, c]]
        let expected = CMatrix::from_rows(&[&[C64::new(c, 0.0), C64::new(s, 0.0)], &[C64::new(-s, 0.0), C64::new(c, 0.0)]]);
        assert!((&d - &expected).frobenius_norm() < 1e-15);
        let [_, jy, _] = spin_matrices(1);
        let numeric = jy.scale(C64::new(0.0, -beta)).expm();
        assert!((&d - &numeric).frobenius_norm() < 1e-14);
    }

    #[test]
    fn wigner_d_matches_generator_exponentials() {
        let g = Euler::new(0.3, 2.2, 5.1);
        for tj in 0..5 {
            let [_, jy, jz] = spin_matrices(tj);
            let expected = jz
                .scale(C64::new(0.0, -g.alpha))
                .expm()
                .matmul(&jy.scale(C64::new(0.0, -g.beta)).expm())
                .matmul(&jz.scale(C64::new(0.0, -g.gamma)).expm());
            assert!((&wigner_d(tj, &g) - &expected).frobenius_norm() < 1e-12, "tj={tj}");
        }
    }

    #[test]
    fn spin_algebra() {
        for tj in 0..5 {
            let [jx, jy, jz] = spin_matrices(tj);
            let lhs = jx.commutator(&jy);
            assert!((&lhs - &jz.scale(I)).frobenius_norm() < 1e-13);
            let j = tj as f64 / 2.0;
            let casimir = &(&jx.matmul(&jx) + &jy.matmul(&jy)) + &jz.matmul(&jz);
            let expected = CMatrix::identity(tj as usize + 1).scale(C64::new(j * (j + 1.0), 0.0));
            assert!((&casimir - &expected).frobenius_norm() < 1e-13);
        }
    }

    #[test]
    fn parameters_exponentiate_generators() {
        let q = [0.4, -1.3, 2.0];
        let g = element_from_parameters(q);
        for tj in 0..5 {
            let [jx, jy, jz] = spin_matrices(tj);
            let gen = &(&jx.scale(C64::new(q[0], 0.0)) + &jy.scale(C64::new(q[1], 0.0))) + &jz.scale(C64::new(q[2], 0.0));
            assert!((&wigner_d(tj, &g) - &gen.scale(I).expm()).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn composition_and_inverse() {
        let a = Euler::new(1.0, 0.5, 3.9);
        let b = Euler::new(5.5, 2.9, 0.2);
        let ab = compose(&a, &b);
        for tj in 0..5 {
            let lhs = wigner_d(tj, &ab);
            let rhs = wigner_d(tj, &a).matmul(&wigner_d(tj, &b));
            assert!((&lhs - &rhs).frobenius_norm() < 1e-12);
        }
        assert!(same_element(&compose(&a, &inverse(&a)), &Euler::IDENTITY));
    }
}
