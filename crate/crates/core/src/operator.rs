//! Dense finite-dimensional operator algebra.
//!
//! Everything here works on `nalgebra` complex matrices. [`HermitianOperator`]
//! is the carrier for observables, POVM elements and states; [`DensityMatrix`]
//! adds the state invariants; [`QuantumChannel`] is a CPTP map in Kraus form.
//! Tensor factors are ordered so that the first factor is the most significant
//! index, matching `kronecker`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{check_range, Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Max-abs entrywise Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-PSD_TOL` count as non-negative.
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POVM_TOL: f64 = 1e-9;
pub const TRACE_PRESERVING_TOL: f64 = 1e-8;
/// Eigenvalues below this are treated as exact zeros before powers and logs.
pub const CLIP: f64 = 1e-12;

pub(crate) fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Spectral decomposition `A = V diag(values) V†`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    /// `V diag(f(values)) V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let w = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        HermitianOperator::from_matrix_unchecked(&scaled * self.vectors.adjoint())
    }

    pub fn vector(&self, j: usize) -> CVector {
        self.vectors.column(j).into_owned()
    }
}

/// Dense complex square matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    /// Validates squareness and Hermiticity (within [`HERMITIAN_TOL`]), then
    /// stores the exactly Hermitian part.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let dev = hermitian_deviation(&mat);
        if !(dev <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::from_matrix_unchecked(mat))
    }

    /// Symmetrizes `(M + M†)/2` without checking; for results that are
    /// Hermitian by construction up to rounding.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        let adj = mat.adjoint();
        Self {
            mat: (mat + adj) * c(0.5),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = c(d);
        }
        Self { mat }
    }

    /// `|v⟩⟨v|` (not normalized).
    pub fn outer(v: &CVector) -> Self {
        Self::from_matrix_unchecked(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Re Tr[A B]`, which is the exact trace for Hermitian `A`, `B`.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.mat[(i, j)] * other.mat[(j, i)]).re;
            }
        }
        acc
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.mat * v)[(0, 0)].re
    }

    pub fn eigh(&self) -> Eigen {
        let n = self.dim();
        if n == 0 {
            return Eigen {
                values: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let se = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &se.eigenvectors.column(src));
        }
        Eigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Applies `f` to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        self.eigh().reconstruct(f)
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        Self {
            mat: &self.mat * c(s),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// `A + s·I`.
    pub fn shift(&self, s: f64) -> HermitianOperator {
        let mut mat = self.mat.clone();
        for i in 0..self.dim() {
            mat[(i, i)] += c(s);
        }
        Self { mat }
    }

    /// `M A M†` for any (possibly rectangular) `M`.
    pub fn conjugate_by(&self, m: &CMatrix) -> HermitianOperator {
        Self::from_matrix_unchecked(m * &self.mat * m.adjoint())
    }

    /// `B A B` for Hermitian `B`.
    pub fn sandwich(&self, outer: &HermitianOperator) -> HermitianOperator {
        Self::from_matrix_unchecked(&outer.mat * &self.mat * &outer.mat)
    }

    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    /// Schatten-1 norm.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|v| v.abs()).sum()
    }
}

/// Positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::InvalidTrace(tr));
        }
        let min = op.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { op })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::new(mat)?)
    }

    /// Skips validation; for states that are valid by construction.
    pub(crate) fn from_op_unchecked(op: HermitianOperator) -> Self {
        Self { op }
    }

    /// `|ψ⟩⟨ψ|/⟨ψ|ψ⟩`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm2 = psi.norm_squared();
        if !(norm2 > 0.0) {
            return Err(Error::Malformed("zero state vector".into()));
        }
        Ok(Self {
            op: HermitianOperator::outer(psi).scale(1.0 / norm2),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self {
            op: HermitianOperator::from_real_diagonal(&diag),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: HermitianOperator::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        check_distribution(probs, TRACE_TOL)?;
        Ok(Self {
            op: HermitianOperator::from_real_diagonal(probs),
        })
    }

    /// Convex combination `∑ w_i ρ_i`.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::Malformed(
                "mixture needs one weight per state".into(),
            ));
        }
        check_distribution(weights, TRACE_TOL)?;
        let d = states[0].dim();
        let mut acc = CMatrix::zeros(d, d);
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.dim(),
                });
            }
            acc += s.matrix() * c(*w);
        }
        Ok(Self {
            op: HermitianOperator::from_matrix_unchecked(acc),
        })
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_operator(self) -> HermitianOperator {
        self.op
    }

    /// `(1-ε)ρ + ε I/d`.
    pub fn regularized(&self, eps: f64) -> DensityMatrix {
        let d = self.dim() as f64;
        Self {
            op: self.op.scale(1.0 - eps).shift(eps / d),
        }
    }
}

impl Deref for DensityMatrix {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.op
    }
}

/// Checks a probability vector: entries ≥ -tol and sum within tol of 1.
pub fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some(bad) = p.iter().find(|&&v| !(v >= -tol) || !v.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {bad}")));
    }
    let s: f64 = p.iter().sum();
    if !((s - 1.0).abs() <= tol) {
        return Err(Error::InvalidDistribution(format!("sum {s}")));
    }
    Ok(())
}

/// Positive-operator valued measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(elements: Vec<HermitianOperator>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::Malformed("empty POVM".into()))?;
        let d = first.dim();
        let mut sum = CMatrix::zeros(d, d);
        for e in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.dim(),
                });
            }
            let min = e.min_eigenvalue();
            if min < -PSD_TOL {
                return Err(Error::NotPositive(min));
            }
            sum += e.matrix();
        }
        let dev = max_abs(&(sum - CMatrix::identity(d, d)));
        if !(dev <= POVM_TOL) {
            return Err(Error::IncompletePovm(dev));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// `Tr[ρ Π_i]` for every outcome.
    pub fn probabilities(&self, rho: &HermitianOperator) -> Vec<f64> {
        self.elements.iter().map(|e| e.trace_product(rho)).collect()
    }
}

/// CPTP map `ρ ↦ ∑ K_i ρ K_i†`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
    d_in: usize,
    d_out: usize,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Malformed("empty Kraus list".into()))?;
        let (d_out, d_in) = first.shape();
        let mut sum = CMatrix::zeros(d_in, d_in);
        for k in &kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::Malformed(format!(
                    "Kraus operator of shape {:?}, expected {:?}",
                    k.shape(),
                    (d_out, d_in)
                )));
            }
            sum += k.adjoint() * k;
        }
        let dev = max_abs(&(sum - CMatrix::identity(d_in, d_in)));
        if !(dev <= TRACE_PRESERVING_TOL) {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self { kraus, d_in, d_out })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![CMatrix::identity(dim, dim)],
            d_in: dim,
            d_out: dim,
        }
    }

    /// Constant channel `ρ ↦ σ` with Kraus operators `√s_k |e_k⟩⟨j|`.
    pub fn replacer(sigma: &DensityMatrix, d_in: usize) -> Self {
        let eig = sigma.eigh();
        let d_out = sigma.dim();
        let mut kraus = Vec::new();
        for (k, &s) in eig.values.iter().enumerate() {
            if s <= CLIP {
                continue;
            }
            let col = eig.vector(k) * c(s.sqrt());
            for j in 0..d_in {
                let mut m = CMatrix::zeros(d_out, d_in);
                m.set_column(j, &col);
                kraus.push(m);
            }
        }
        Self { kraus, d_in, d_out }
    }

    /// `ρ ↦ (1-λ)ρ + λσ`.
    pub fn depolarizing_to(sigma: &DensityMatrix, lambda: f64) -> Result<Self> {
        check_range("lambda", lambda, (0.0..=1.0).contains(&lambda), "[0, 1]")?;
        let d = sigma.dim();
        let mut kraus = vec![CMatrix::identity(d, d) * c((1.0 - lambda).sqrt())];
        kraus.extend(
            Self::replacer(sigma, d)
                .kraus
                .into_iter()
                .map(|k| k * c(lambda.sqrt())),
        );
        Ok(Self {
            kraus,
            d_in: d,
            d_out: d,
        })
    }

    /// Kraus decomposition of a Choi operator `J = ∑ |i⟩⟨j| ⊗ N(|i⟩⟨j|)`
    /// (input factor first). Eigenvalues below [`CLIP`] are dropped.
    pub fn from_choi(choi: &HermitianOperator, d_in: usize, d_out: usize) -> Result<Self> {
        if choi.dim() != d_in * d_out {
            return Err(Error::DimensionMismatch {
                expected: d_in * d_out,
                got: choi.dim(),
            });
        }
        let eig = choi.eigh();
        let mut kraus = Vec::new();
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam <= CLIP {
                continue;
            }
            let v = eig.vector(k);
            let s = lam.sqrt();
            let mut m = CMatrix::zeros(d_out, d_in);
            for i in 0..d_in {
                for o in 0..d_out {
                    m[(o, i)] = v[i * d_out + o] * s;
                }
            }
            kraus.push(m);
        }
        if kraus.is_empty() {
            return Err(Error::Malformed("zero Choi operator".into()));
        }
        Self::new(kraus)
    }

    pub fn choi(&self) -> HermitianOperator {
        let d = self.d_in * self.d_out;
        let mut j = CMatrix::zeros(d, d);
        for k in &self.kraus {
            // vec(K) with input index most significant
            let mut v = CVector::zeros(d);
            for i in 0..self.d_in {
                for o in 0..self.d_out {
                    v[i * self.d_out + o] = k[(o, i)];
                }
            }
            j += &v * v.adjoint();
        }
        HermitianOperator::from_matrix_unchecked(j)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Rank of the Choi operator (minimal number of Kraus operators).
    pub fn kraus_rank(&self) -> usize {
        let eig = self.choi().eigenvalues();
        let top = eig.last().copied().unwrap_or(0.0).max(1.0);
        eig.iter().filter(|&&v| v > 1e-9 * top).count()
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator {
        mat: a.mat.kronecker(&b.mat),
    }
}

/// `⊗_i ops[i]`.
pub fn tensor_all(ops: &[&HermitianOperator]) -> HermitianOperator {
    let mut acc = HermitianOperator::identity(1);
    for op in ops {
        acc = tensor(&acc, op);
    }
    acc
}

pub fn tensor_states(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_op_unchecked(tensor(a, b))
}

/// Splits a flat index into mixed-radix digits (first factor most significant).
pub(crate) fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

pub(crate) fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits
        .iter()
        .zip(dims)
        .fold(0, |acc, (&d, &n)| acc * n + d)
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != total || dims.contains(&0) {
        return Err(Error::DimensionMismatch {
            expected: total,
            got: prod,
        });
    }
    Ok(())
}

/// Partial trace of a general square matrix over the factors not in `keep`.
pub(crate) fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_dims(m.nrows(), dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Malformed(format!(
            "keep index out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    let n = dims.len();
    let mut full = vec![0usize; n];
    let mut kd = vec![0usize; kept.len()];
    let mut td = vec![0usize; traced.len()];
    // map (kept index, traced index) → full index
    let mut index = vec![0usize; dk * dt];
    for a in 0..dk {
        digits(a, &kept_dims, &mut kd);
        for t in 0..dt {
            digits(t, &traced_dims, &mut td);
            for (slot, &k) in kept.iter().enumerate() {
                full[k] = kd[slot];
            }
            for (slot, &k) in traced.iter().enumerate() {
                full[k] = td[slot];
            }
            index[a * dt + t] = compose(&full, dims);
        }
    }
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                acc += m[(index[a * dt + t], index[b * dt + t])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reduced operator on the factors listed in `keep` (in increasing order).
pub fn partial_trace(
    rho: &HermitianOperator,
    dims: &[usize],
    keep: &[usize],
) -> Result<HermitianOperator> {
    Ok(HermitianOperator::from_matrix_unchecked(partial_trace_matrix(
        &rho.mat, dims, keep,
    )?))
}

/// Reduced state; trace is preserved so the result is again a state.
pub fn reduce_state(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_op_unchecked(partial_trace(
        rho, dims, keep,
    )?))
}

/// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
pub fn permute_factors(
    op: &HermitianOperator,
    dims: &[usize],
    perm: &[usize],
) -> Result<HermitianOperator> {
    check_dims(op.dim(), dims)?;
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::Malformed("not a permutation".into()));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let d = op.dim();
    let mut src = vec![0usize; dims.len()];
    let mut dst = vec![0usize; dims.len()];
    let mut map = vec![0usize; d];
    for (i, slot) in map.iter_mut().enumerate() {
        digits(i, &new_dims, &mut dst);
        for (k, &p) in perm.iter().enumerate() {
            src[p] = dst[k];
        }
        *slot = compose(&src, dims);
    }
    let mut out = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = op.mat[(map[i], map[j])];
        }
    }
    Ok(HermitianOperator { mat: out })
}

/// Fractional power through the spectrum. Eigenvalues below [`CLIP`] are
/// zeroed (for `r = 0` the result is the support projector); negative powers
/// need a strictly positive operator.
pub fn matrix_power(a: &HermitianOperator, r: f64) -> Result<HermitianOperator> {
    check_range("r", r, true, "finite reals")?;
    let eig = a.eigh();
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    if r < 0.0 && min <= CLIP {
        return Err(Error::Singular(min));
    }
    Ok(eig.reconstruct(|v| if v <= CLIP { 0.0 } else { v.powf(r) }))
}

/// `∑_i K_i ρ K_i†`.
pub fn apply_channel(n: &QuantumChannel, rho: &HermitianOperator) -> Result<HermitianOperator> {
    if rho.dim() != n.d_in {
        return Err(Error::DimensionMismatch {
            expected: n.d_in,
            got: rho.dim(),
        });
    }
    let mut acc = CMatrix::zeros(n.d_out, n.d_out);
    for k in &n.kraus {
        acc += k * &rho.mat * k.adjoint();
    }
    Ok(HermitianOperator::from_matrix_unchecked(acc))
}

pub fn apply_channel_state(n: &QuantumChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_op_unchecked(apply_channel(n, rho)?))
}

/// Both sides of the Araki-Lieb-Thirring inequality:
/// `Tr[b^{r/2} a^r b^{r/2}] ≤ Tr[(b^{1/2} a b^{1/2})^r]` for `r ∈ [0,1]`.
pub fn alt_check(a: &HermitianOperator, b: &HermitianOperator, r: f64) -> Result<(f64, f64)> {
    check_range("r", r, (0.0..=1.0).contains(&r), "[0, 1]")?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let a_r = matrix_power(a, r)?;
    let b_half_r = matrix_power(b, r / 2.0)?;
    let lhs = a_r.sandwich(&b_half_r).trace();
    let b_half = matrix_power(b, 0.5)?;
    let inner = a.sandwich(&b_half);
    // clip rounding negatives of the PSD product
    let rhs = inner
        .eigenvalues()
        .iter()
        .map(|&v| if v <= CLIP { 0.0 } else { v.powf(r) })
        .sum();
    Ok((lhs, rhs))
}
