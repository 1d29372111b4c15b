//! The symmetric group on three letters.
//!
//! Elements are permutations of `{0, 1, 2}` in the fixed order
//! `e, (01), (02), (12), (012), (021)`; products act right to left,
//! `(g·h)(i) = g(h(i))`.

use num_traits::Float;

use crate::linalg::{CMatrix, C64};

pub const ORDER: usize = 6;

/// Images `[p(0), p(1), p(2)]` of each element.
pub const PERMUTATIONS: [[usize; 3]; ORDER] = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum S3Irrep {
    Trivial,
    Sign,
    Standard,
}

impl S3Irrep {
    pub const ALL: [S3Irrep; 3] = [S3Irrep::Trivial, S3Irrep::Sign, S3Irrep::Standard];

    pub fn dim(self) -> usize {
        match self {
            S3Irrep::Standard => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            S3Irrep::Trivial => "trivial",
            S3Irrep::Sign => "sign",
            S3Irrep::Standard => "standard",
        }
    }
}

fn index_of(p: [usize; 3]) -> usize {
    PERMUTATIONS.iter().position(|q| *q == p).expect("every permutation of three letters is listed")
}

pub fn compose(a: usize, b: usize) -> usize {
    let (pa, pb) = (PERMUTATIONS[a], PERMUTATIONS[b]);
    index_of([pa[pb[0]], pa[pb[1]], pa[pb[2]]])
}

pub fn inverse(a: usize) -> usize {
    let p = PERMUTATIONS[a];
    let mut inv = [0; 3];
    for (i, &pi) in p.iter().enumerate() {
        inv[pi] = i;
    }
    index_of(inv)
}

fn sign(a: usize) -> f64 {
    let p = PERMUTATIONS[a];
    let inversions = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Representation matrix; the standard irrep acts on the orthonormal basis
/// `(1,−1,0)/√2, (1,1,−2)/√6` of the sum-zero plane.
pub fn matrix(irrep: S3Irrep, a: usize) -> CMatrix {
    match irrep {
        S3Irrep::Trivial => CMatrix::identity(1),
        S3Irrep::Sign => CMatrix::diag(&[C64::new(sign(a), 0.0)]),
        S3Irrep::Standard => {
            let r2 = Float::sqrt(2.0);
            let r6 = Float::sqrt(6.0);
            let basis = [[1.0 / r2, -1.0 / r2, 0.0], [1.0 / r6, 1.0 / r6, -2.0 / r6]];
            let p = PERMUTATIONS[a];
            CMatrix::from_fn(2, 2, |r, c| {
                // (P v_c)_i = v_c[p⁻¹(i)], projected on v_r
                let mut moved = [0.0; 3];
                for (i, &pi) in p.iter().enumerate() {
                    moved[pi] = basis[c][i];
                }
                C64::new((0..3).map(|i| basis[r][i] * moved[i]).sum(), 0.0)
            })
        }
    }
}

/// Irreps contained in `a ⊗ b`, each with multiplicity one.
pub fn fusion(a: S3Irrep, b: S3Irrep) -> alloc::vec::Vec<S3Irrep> {
    use S3Irrep::*;
    match (a, b) {
        (Trivial, x) | (x, Trivial) => alloc::vec![x],
        (Sign, Sign) => alloc::vec![Trivial],
        (Sign, Standard) | (Standard, Sign) => alloc::vec![Standard],
        (Standard, Standard) => alloc::vec![Trivial, Sign, Standard],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplication_table_is_a_group() {
        for a in 0..ORDER {
            assert_eq!(compose(a, 0), a);
            assert_eq!(compose(0, a), a);
            assert_eq!(compose(a, inverse(a)), 0);
            for b in 0..ORDER {
                for c in 0..ORDER {
                    assert_eq!(compose(compose(a, b), c), compose(a, compose(b, c)));
                }
            }
        }
    }

    #[test]
    fn characters_match_table() {
        // classes: e | transpositions | 3-cycles
        let expected = [(S3Irrep::Trivial, [1.0, 1.0, 1.0]), (S3Irrep::Sign, [1.0, -1.0, 1.0]), (S3Irrep::Standard, [2.0, 0.0, -1.0])];
        let class = |a: usize| match a {
            0 => 0,
            1..=3 => 1,
            _ => 2,
        };
        for (irrep, chars) in expected {
            for a in 0..ORDER {
                let tr = matrix(irrep, a).trace();
                assert!((tr.re - chars[class(a)]).abs() < 1e-15 && tr.im == 0.0);
            }
        }
    }

    #[test]
    fn standard_irrep_is_homomorphic() {
        for a in 0..ORDER {
            for b in 0..ORDER {
                let lhs = matrix(S3Irrep::Standard, compose(a, b));
                let rhs = matrix(S3Irrep::Standard, a).matmul(&matrix(S3Irrep::Standard, b));
                assert!((&lhs - &rhs).frobenius_norm() < 1e-15);
            }
        }
    }
}
