//! Generalized quantum depolarizing semigroups, weighted `L_p` norms and the
//! reverse-hypercontractivity check for their tensor products.
//!
//! Tensor-product maps are applied slot by slot. A slot map is
//! `X ↦ e^{-t} X + (1 − e^{-t}) I_i ⊗ Tr_i[(w_i ⊗ I) X]`, where the weight
//! `w_i` is the invariant state for a depolarizing semigroup and the identity
//! for the trace smoother `Ψ_t`. The superoperator matrix is never built.

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::operator::{
    c, compose, digits, matrix_power, tensor_all, CMatrix, DensityMatrix, HermitianOperator, C64,
    CLIP,
};

/// Depolarizing semigroup with invariant state `σ`:
/// `Φ_t(X) = e^{-t} X + (1 − e^{-t}) Tr[σX] I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gqds {
    sigma: DensityMatrix,
}

impl Gqds {
    pub fn new(sigma: DensityMatrix) -> Self {
        Self { sigma }
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Generator `L(X) = X − Tr[σX] I`, so that `Φ_t = e^{-tL}`.
    pub fn generator(&self, x: &HermitianOperator) -> HermitianOperator {
        x.shift(-self.sigma.trace_product(x))
    }

    /// True when the invariant state is faithful (needed for the norms).
    pub fn is_faithful(&self) -> bool {
        self.sigma.min_eigenvalue() > CLIP
    }
}

fn check_time(t: f64) -> Result<()> {
    check_range("t", t, t >= 0.0, "[0, ∞)")
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Heisenberg-picture action `Φ_t(X)`.
pub fn heisenberg_apply(g: &Gqds, t: f64, x: &HermitianOperator) -> Result<HermitianOperator> {
    check_time(t)?;
    check_dim(g.dim(), x.dim())?;
    let decay = (-t).exp();
    let mean = g.sigma.trace_product(x);
    Ok(x.scale(decay).shift((1.0 - decay) * mean))
}

/// Schrödinger-picture action `Φ*_t(ρ) = e^{-t} ρ + (1 − e^{-t}) σ`.
pub fn schrodinger_apply(g: &Gqds, t: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
    check_time(t)?;
    check_dim(g.dim(), rho.dim())?;
    let decay = (-t).exp();
    Ok(DensityMatrix::from_op_unchecked(
        rho.scale(decay).add(&g.sigma.scale(1.0 - decay)),
    ))
}

/// Weighted (pseudo-)norm `‖X‖_{p,σ} = (Tr|σ^{1/2p} X σ^{1/2p}|^p)^{1/p}`.
///
/// `σ` must be full rank; for `p < 0`, `X` must be strictly positive.
pub fn weighted_lp_norm(x: &HermitianOperator, sigma: &DensityMatrix, p: f64) -> Result<f64> {
    check_range("p", p, p != 0.0, "ℝ \\ {0}")?;
    check_dim(sigma.dim(), x.dim())?;
    let smin = sigma.min_eigenvalue();
    if smin <= CLIP {
        return Err(Error::Singular(smin));
    }
    if p < 0.0 {
        let xmin = x.min_eigenvalue();
        if xmin <= CLIP {
            return Err(Error::Singular(xmin));
        }
    }
    let w = matrix_power(sigma, 1.0 / (2.0 * p))?;
    let y = x.sandwich(&w);
    let sum: f64 = y.eigenvalues().iter().map(|v| v.abs().powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// Tensor product `⊗_i Φ_{t,x_i}` of depolarizing semigroups.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductGqds {
    factors: Vec<Gqds>,
}

impl ProductGqds {
    pub fn new(factors: Vec<Gqds>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Malformed("product semigroup needs a factor".into()));
        }
        Ok(Self { factors })
    }

    pub fn from_states(states: &[DensityMatrix]) -> Result<Self> {
        Self::new(states.iter().cloned().map(Gqds::new).collect())
    }

    pub fn factors(&self) -> &[Gqds] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Gqds::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// `⊗_i σ_i`.
    pub fn invariant_state(&self) -> DensityMatrix {
        let ops: Vec<&HermitianOperator> = self.factors.iter().map(|g| g.sigma.as_operator()).collect();
        DensityMatrix::from_op_unchecked(tensor_all(&ops))
    }
}

/// One slot map with weight `w` (`None` = plain trace).
fn apply_slot(x: &CMatrix, dims: &[usize], slot: usize, decay: f64, w: Option<&CMatrix>) -> CMatrix {
    let d = x.nrows();
    let di = dims[slot];
    let mut out = x * c(decay);
    let mix = c(1.0 - decay);
    let mut da = vec![0usize; dims.len()];
    let mut db = vec![0usize; dims.len()];
    for a in 0..d {
        digits(a, dims, &mut da);
        for b in 0..d {
            digits(b, dims, &mut db);
            if da[slot] != db[slot] {
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..di {
                da[slot] = k;
                let row = compose(&da, dims);
                match w {
                    Some(w) => {
                        for l in 0..di {
                            db[slot] = l;
                            acc += w[(l, k)] * x[(row, compose(&db, dims))];
                        }
                    }
                    None => {
                        db[slot] = k;
                        acc += x[(row, compose(&db, dims))];
                    }
                }
            }
            // restore digits for the outer loops
            digits(a, dims, &mut da);
            digits(b, dims, &mut db);
            out[(a, b)] += mix * acc;
        }
    }
    out
}

/// `Φ_{t,x^n}(X)` for `X` on `⊗_i H_i`.
pub fn product_apply(pg: &ProductGqds, t: f64, x: &HermitianOperator) -> Result<HermitianOperator> {
    check_time(t)?;
    check_dim(pg.dim(), x.dim())?;
    let dims = pg.dims();
    let decay = (-t).exp();
    let mut m = x.matrix().clone();
    for (slot, g) in pg.factors.iter().enumerate() {
        m = apply_slot(&m, &dims, slot, decay, Some(g.sigma.matrix()));
    }
    Ok(HermitianOperator::from_matrix_unchecked(m))
}

/// Trace smoother `Ψ_t(T) = e^{-t} T + (1 − e^{-t}) Tr[T] I` on one factor.
pub fn trace_smoother_apply(t: f64, x: &HermitianOperator) -> Result<HermitianOperator> {
    check_time(t)?;
    let decay = (-t).exp();
    Ok(x.scale(decay).shift((1.0 - decay) * x.trace()))
}

/// `Ψ_t^{⊗n}(X)` for `X` on `⊗_i C^{dims[i]}`.
pub fn trace_smoother_product_apply(dims: &[usize], t: f64, x: &HermitianOperator) -> Result<HermitianOperator> {
    check_time(t)?;
    check_dim(dims.iter().product(), x.dim())?;
    let decay = (-t).exp();
    let mut m = x.matrix().clone();
    for slot in 0..dims.len() {
        m = apply_slot(&m, dims, slot, decay, None);
    }
    Ok(HermitianOperator::from_matrix_unchecked(m))
}

/// Scalar `(e^{-t} + d(1 − e^{-t}))^n` with `Ψ_t^{⊗n}(I) = scalar · I`.
pub fn smoothed_identity_scale(t: f64, d: usize, n: usize) -> f64 {
    let decay = (-t).exp();
    (decay + d as f64 * (1.0 - decay)).powi(n as i32)
}

/// Smallest time at which the reverse-hypercontractive inequality is claimed:
/// `ln((p−1)/(q−1))`.
pub fn rhc_threshold(p: f64, q: f64) -> f64 {
    ((p - 1.0) / (q - 1.0)).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhcOutcome {
    /// `‖Φ_{t,x^n}(G)‖_{p, ρ^{x^n}}`
    pub lhs: f64,
    /// `‖G‖_{q, ρ^{x^n}}`
    pub rhs: f64,
    /// `lhs − rhs`; the inequality asserts this is ≥ 0.
    pub margin: f64,
}

/// Both sides of `‖Φ_{t,x^n}(G)‖_p ≥ ‖G‖_q` for `p ≤ q < 1`, `p, q ≠ 0` and
/// `t ≥ ln((p−1)/(q−1))`. Times below the threshold are a precondition error.
pub fn rhc_check(pg: &ProductGqds, g_n: &HermitianOperator, p: f64, q: f64, t: f64) -> Result<RhcOutcome> {
    check_range("p", p, p < 1.0 && p != 0.0, "(−∞, 1) \\ {0}")?;
    check_range("q", q, q < 1.0 && q != 0.0, "(−∞, 1) \\ {0}")?;
    if p > q {
        return Err(Error::Precondition(format!("p = {p} exceeds q = {q}")));
    }
    check_time(t)?;
    let threshold = rhc_threshold(p, q);
    if t < threshold - 1e-12 {
        return Err(Error::Precondition(format!(
            "t = {t} is below the threshold ln((p−1)/(q−1)) = {threshold}"
        )));
    }
    let gmin = g_n.min_eigenvalue();
    if gmin <= CLIP {
        return Err(Error::Singular(gmin));
    }
    let weight = pg.invariant_state();
    let evolved = product_apply(pg, t, g_n)?;
    let lhs = weighted_lp_norm(&evolved, &weight, p)?;
    let rhs = weighted_lp_norm(g_n, &weight, q)?;
    Ok(RhcOutcome {
        lhs,
        rhs,
        margin: lhs - rhs,
    })
}

/// Minimum eigenvalue of `Ψ_t^{⊗n}(X) − Φ_{t,x^n}(X)`; non-negative for PSD
/// `X` because every factor state satisfies `ρ ≤ I`.
pub fn positivity_gap_check(pg: &ProductGqds, t: f64, x: &HermitianOperator) -> Result<f64> {
    let smoothed = trace_smoother_product_apply(&pg.dims(), t, x)?;
    let evolved = product_apply(pg, t, x)?;
    Ok(smoothed.sub(&evolved).min_eigenvalue())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::tensor;
    use crate::random::{random_faithful_density, random_hermitian, random_positive, rng};

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_probabilities(p).unwrap()
    }

    #[test]
    fn heisenberg_limits() {
        let g = Gqds::new(diag(&[0.3, 0.7]));
        let x = random_hermitian(&mut rng(1), 2);
        assert!(heisenberg_apply(&g, 0.0, &x).unwrap().max_abs_diff(&x) < 1e-15);
        let fixed = HermitianOperator::identity(2).scale(g.sigma().trace_product(&x));
        let far = heisenberg_apply(&g, 50.0, &x).unwrap();
        assert!(far.max_abs_diff(&fixed) <= 1e-20 * fixed.matrix().norm().max(1.0) + 1e-20 * x.matrix().norm() * 1e2);
        let unit = heisenberg_apply(&g, 0.8, &HermitianOperator::identity(2)).unwrap();
        assert!(unit.max_abs_diff(&HermitianOperator::identity(2)) < 1e-15);
        assert!(heisenberg_apply(&g, -0.1, &x).is_err());
    }

    #[test]
    fn generator_matches_derivative() {
        let mut r = rng(5);
        let g = Gqds::new(random_faithful_density(&mut r, 3));
        let x = random_hermitian(&mut r, 3);
        let h = 1e-6;
        let fd = heisenberg_apply(&g, h, &x).unwrap().sub(&x).scale(1.0 / h);
        assert!(fd.add(&g.generator(&x)).max_abs_diff(&HermitianOperator::zeros(3)) < 1e-5);
    }

    #[test]
    fn schrodinger_fixed_point() {
        let s = diag(&[0.1, 0.9]);
        let g = Gqds::new(s.clone());
        assert!(schrodinger_apply(&g, 2.3, &s).unwrap().max_abs_diff(&s) < 1e-15);
        let r = diag(&[0.6, 0.4]);
        assert!(schrodinger_apply(&g, 0.0, &r).unwrap().max_abs_diff(&r) < 1e-15);
    }

    #[test]
    fn norm_examples() {
        let s = DensityMatrix::maximally_mixed(2);
        let x = HermitianOperator::from_real_diagonal(&[2.0, 1.0]);
        let n = weighted_lp_norm(&x, &s, 2.0).unwrap();
        assert!((n - 2.5f64.sqrt()).abs() < 1e-14);
        assert!((n - 1.58114).abs() < 1e-5);
        let s = diag(&[0.2, 0.8]);
        for p in [-0.9, -0.3, 0.4, 1.0, 2.0] {
            let one = weighted_lp_norm(&HermitianOperator::identity(2), &s, p).unwrap();
            assert!((one - 1.0).abs() < 1e-13, "p = {p}: {one}");
        }
        assert!(weighted_lp_norm(&x, &s, 0.0).is_err());
        let singular = HermitianOperator::from_real_diagonal(&[1.0, 0.0]);
        assert!(matches!(weighted_lp_norm(&singular, &s, -0.5), Err(Error::Singular(_))));
    }

    #[test]
    fn p_one_norm_is_expectation() {
        let mut r = rng(9);
        let s = random_faithful_density(&mut r, 3);
        let x = random_positive(&mut r, 3);
        let n = weighted_lp_norm(&x, &s, 1.0).unwrap();
        assert!((n - s.trace_product(&x)).abs() < 1e-12);
    }

    #[test]
    fn product_apply_factorizes() {
        let mut r = rng(2);
        let s1 = random_faithful_density(&mut r, 2);
        let s2 = random_faithful_density(&mut r, 3);
        let pg = ProductGqds::from_states(&[s1.clone(), s2.clone()]).unwrap();
        let x1 = random_hermitian(&mut r, 2);
        let x2 = random_hermitian(&mut r, 3);
        let t = 0.7;
        let lhs = product_apply(&pg, t, &tensor(&x1, &x2)).unwrap();
        let rhs = tensor(
            &heisenberg_apply(&Gqds::new(s1), t, &x1).unwrap(),
            &heisenberg_apply(&Gqds::new(s2), t, &x2).unwrap(),
        );
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn single_factor_product_reduces() {
        let mut r = rng(4);
        let s = random_faithful_density(&mut r, 3);
        let x = random_hermitian(&mut r, 3);
        let pg = ProductGqds::from_states(std::slice::from_ref(&s)).unwrap();
        let a = product_apply(&pg, 0.4, &x).unwrap();
        let b = heisenberg_apply(&Gqds::new(s), 0.4, &x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
        assert!(ProductGqds::new(vec![]).is_err());
    }

    #[test]
    fn rhc_identity_and_p_equals_q() {
        let mut r = rng(6);
        let pg = ProductGqds::from_states(&[random_faithful_density(&mut r, 2), random_faithful_density(&mut r, 2)]).unwrap();
        let out = rhc_check(&pg, &HermitianOperator::identity(4), -0.5, 0.5, 3f64.ln()).unwrap();
        assert!((out.lhs - 1.0).abs() < 1e-12 && (out.rhs - 1.0).abs() < 1e-12);
        let g = random_positive(&mut r, 4);
        let same = rhc_check(&pg, &g, 0.5, 0.5, 0.0).unwrap();
        assert!(same.margin.abs() < 1e-12);
    }

    #[test]
    fn rhc_rejects_short_times() {
        let pg = ProductGqds::from_states(&[diag(&[0.5, 0.5])]).unwrap();
        let err = rhc_check(&pg, &HermitianOperator::identity(2), -0.5, 0.5, 1.0).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(rhc_check(&pg, &HermitianOperator::identity(2), 0.5, -0.5, 3.0).is_err());
    }

    #[test]
    fn positivity_gap_examples() {
        let pg = ProductGqds::from_states(&[diag(&[0.3, 0.7])]).unwrap();
        let x = random_positive(&mut rng(3), 2);
        assert!(positivity_gap_check(&pg, 0.0, &x).unwrap().abs() < 1e-14);
        let t = 0.9;
        let gap = positivity_gap_check(&pg, t, &HermitianOperator::identity(2)).unwrap();
        assert!((gap - (1.0 - (-t).exp()) * 1.0).abs() < 1e-14);
        let pg3 = ProductGqds::from_states(&[DensityMatrix::basis(3, 0)]).unwrap();
        let gap3 = positivity_gap_check(&pg3, t, &HermitianOperator::identity(3)).unwrap();
        assert!((gap3 - (1.0 - (-t).exp()) * 2.0).abs() < 1e-14);
    }

    #[test]
    fn smoothed_identity_matches_operator() {
        let dims = [2, 2];
        let out = trace_smoother_product_apply(&dims, 0.6, &HermitianOperator::identity(4)).unwrap();
        let s = smoothed_identity_scale(0.6, 2, 2);
        assert!(out.max_abs_diff(&HermitianOperator::identity(4).scale(s)) < 1e-13);
        assert!(trace_smoother_apply(0.6, &HermitianOperator::identity(2)).unwrap().max_abs_diff(&HermitianOperator::identity(2).scale(smoothed_identity_scale(0.6, 2, 1))) < 1e-14);
    }
}
