//! Seeded random instances for the property suites and tests.
//!
//! All generators take the RNG explicitly; shard seeds are derived with
//! [`shard_seed`] so parallel runs are reproducible regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::operator::{c, CMatrix, CVector, DensityMatrix, HermitianOperator, QuantumChannel, C64};

pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer over (base, tag, index).
pub fn shard_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Haar-random unitary (QR of a Ginibre matrix with the phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    isometry(rng, dim, dim)
}

/// Haar-random isometry `rows × cols` with `rows ≥ cols`.
pub fn isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols);
    let qr = ginibre(rng, rows, cols).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    let g = ginibre(rng, dim, 1);
    let n = g.norm();
    g.column(0).into_owned() / c(n)
}

/// `G G† / Tr` with `G` of shape `dim × rank`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, dim, rank.max(1));
    let m = &g * g.adjoint();
    let op = HermitianOperator::from_matrix_unchecked(m);
    let tr = op.trace();
    DensityMatrix::from_op_unchecked(op.scale(1.0 / tr))
}

/// Full-rank state mixed with a little of the maximally mixed state so the
/// smallest eigenvalue stays away from zero.
pub fn random_faithful_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    random_density(rng, dim, dim).regularized(0.05)
}

/// Strictly positive operator with spectrum spread over a few decades.
pub fn random_positive<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let u = haar_unitary(rng, dim);
    let diag: Vec<f64> = (0..dim)
        .map(|_| 10f64.powf(rng.random_range(-1.5..1.5)))
        .collect();
    HermitianOperator::from_real_diagonal(&diag).conjugate_by(&u)
}

/// PSD operator of the given rank with entries of order one.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, rank);
    HermitianOperator::from_matrix_unchecked(&g * g.adjoint()).scale(1.0 / dim as f64)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = ginibre(rng, dim, dim);
    HermitianOperator::from_matrix_unchecked(g)
}

/// Random CPTP map via a Haar isometry `d_in → d_out ⊗ C^kraus_count`.
pub fn random_channel<R: Rng + ?Sized>(
    rng: &mut R,
    d_in: usize,
    d_out: usize,
    kraus_count: usize,
) -> QuantumChannel {
    let v = isometry(rng, d_out * kraus_count, d_in);
    let kraus = (0..kraus_count)
        .map(|k| v.rows(k * d_out, d_out).into_owned())
        .collect();
    QuantumChannel::new(kraus).expect("isometry blocks are trace preserving")
}

/// Flat Dirichlet sample.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Diagonal (commuting) state with a Dirichlet spectrum floored away from zero.
pub fn random_diagonal_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let p = random_probability(rng, dim);
    let q: Vec<f64> = p.iter().map(|v| 0.95 * v + 0.05 / dim as f64).collect();
    DensityMatrix::from_op_unchecked(HermitianOperator::from_real_diagonal(&q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::apply_channel;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(7);
        let u = haar_unitary(&mut r, 4);
        let e = (&u.adjoint() * &u) - CMatrix::identity(4, 4);
        assert!(e.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn random_channel_preserves_trace() {
        let mut r = rng(3);
        let ch = random_channel(&mut r, 3, 2, 4);
        let rho = random_density(&mut r, 3, 3);
        let out = apply_channel(&ch, &rho).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!(out.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = random_density(&mut rng(11), 3, 2);
        let b = random_density(&mut rng(11), 3, 2);
        assert_eq!(a, b);
        assert_ne!(shard_seed(1, 2, 3), shard_seed(1, 2, 4));
    }
}
