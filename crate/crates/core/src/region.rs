//! Classical-quantum degraded broadcast channels, the joint states
//! `ω_UXBC = ∑ p(x) ρ_U^x ⊗ |x⟩⟨x| ⊗ ρ_BC^x`, and the boundary
//! `F(t) = sup{ I(X;B|U) : I(U;C) ≥ t }` with its Lagrangian dual
//! `v(μ) = sup{ I(X;B|U) + μ I(U;C) }`.
//!
//! Every reported boundary value is the objective of an explicit witness, so
//! it is a lower bound on the supremum. The default search uses a classical
//! auxiliary register with `|U| = |X|`, where both objectives reduce to Holevo
//! quantities:
//! `I(X;B|U) = ∑_u p(u) χ_B(p(·|u))` and
//! `I(U;C) = χ_C(p_X) − ∑_u p(u) χ_C(p(·|u))`.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropic::{entropy_of_spectrum, vn_entropy};
use crate::error::{check_range, Error, Result};
use crate::operator::{
    apply_channel, c, partial_trace, partial_trace_matrix, permute_factors, tensor, CMatrix,
    CVector, DensityMatrix, HermitianOperator, QuantumChannel, C64, TRACE_TOL,
};
use crate::random::{ginibre, random_probability, rng, shard_seed};

/// A map `x ↦ ρ_BC^x` with the `B` factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct CqBroadcastChannel {
    labels: Vec<String>,
    states: Vec<DensityMatrix>,
    b_states: Vec<DensityMatrix>,
    c_states: Vec<DensityMatrix>,
    d_b: usize,
    d_c: usize,
}

impl CqBroadcastChannel {
    pub fn new(labels: Vec<String>, states: Vec<DensityMatrix>, d_b: usize, d_c: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Malformed("channel needs at least one input".into()));
        }
        if labels.len() != states.len() {
            return Err(Error::Malformed(format!(
                "{} labels for {} states",
                labels.len(),
                states.len()
            )));
        }
        if d_b == 0 || d_c == 0 {
            return Err(Error::Malformed("output dimensions must be positive".into()));
        }
        let mut b_states = Vec::with_capacity(states.len());
        let mut c_states = Vec::with_capacity(states.len());
        for s in &states {
            if s.dim() != d_b * d_c {
                return Err(Error::DimensionMismatch {
                    expected: d_b * d_c,
                    got: s.dim(),
                });
            }
            b_states.push(DensityMatrix::from_op_unchecked(partial_trace(s, &[d_b, d_c], &[0])?));
            c_states.push(DensityMatrix::from_op_unchecked(partial_trace(s, &[d_b, d_c], &[1])?));
        }
        Ok(Self {
            labels,
            states,
            b_states,
            c_states,
            d_b,
            d_c,
        })
    }

    /// Inputs labelled `0, 1, …`.
    pub fn from_states(states: Vec<DensityMatrix>, d_b: usize, d_c: usize) -> Result<Self> {
        let labels = (0..states.len()).map(|i| i.to_string()).collect();
        Self::new(labels, states, d_b, d_c)
    }

    /// `ρ_BC^x = ρ_B^x ⊗ N(ρ_B^x)`: degraded through `N` by construction.
    pub fn degraded_product(b_states: &[DensityMatrix], n: &QuantumChannel) -> Result<Self> {
        let d_b = n.d_in();
        let d_c = n.d_out();
        let states = b_states
            .iter()
            .map(|b| {
                let cst = apply_channel(n, b)?;
                Ok(DensityMatrix::from_op_unchecked(tensor(b, &cst)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_states(states, d_b, d_c)
    }

    /// Classical cascade `X → Y → Z` embedded diagonally, with rows of
    /// `p_y_given_x` and `p_z_given_y` indexed by the conditioning symbol.
    pub fn classical_cascade(p_y_given_x: &[Vec<f64>], p_z_given_y: &[Vec<f64>]) -> Result<Self> {
        let d_b = p_z_given_y.len();
        let d_c = p_z_given_y.first().map_or(0, Vec::len);
        let mut states = Vec::with_capacity(p_y_given_x.len());
        for row in p_y_given_x {
            if row.len() != d_b {
                return Err(Error::DimensionMismatch {
                    expected: d_b,
                    got: row.len(),
                });
            }
            let mut diag = vec![0.0; d_b * d_c];
            for (y, &py) in row.iter().enumerate() {
                if p_z_given_y[y].len() != d_c {
                    return Err(Error::DimensionMismatch {
                        expected: d_c,
                        got: p_z_given_y[y].len(),
                    });
                }
                for (z, &pz) in p_z_given_y[y].iter().enumerate() {
                    diag[y * d_c + z] = py * pz;
                }
            }
            states.push(DensityMatrix::from_probabilities(&diag)?);
        }
        Self::from_states(states, d_b, d_c)
    }

    /// One bit delivered perfectly to both receivers.
    pub fn noiseless_bit() -> Self {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        Self::classical_cascade(&id, &id).expect("identity cascade is valid")
    }

    /// Binary symmetric channel with crossover `p1` to `B`, followed by a
    /// second binary symmetric channel with crossover `p2` to `C`.
    pub fn bsc_cascade(p1: f64, p2: f64) -> Result<Self> {
        let bsc = |p: f64| vec![vec![1.0 - p, p], vec![p, 1.0 - p]];
        Self::classical_cascade(&bsc(p1), &bsc(p2))
    }

    /// Every input produces the same state.
    pub fn constant(state: DensityMatrix, d_b: usize, d_c: usize, alphabet: usize) -> Result<Self> {
        Self::from_states(vec![state; alphabet], d_b, d_c)
    }

    /// Exchanges the roles of the two receivers.
    pub fn swapped(&self) -> Self {
        let states = self
            .states
            .iter()
            .map(|s| {
                DensityMatrix::from_op_unchecked(
                    permute_factors(s, &[self.d_b, self.d_c], &[1, 0]).expect("bipartite dims"),
                )
            })
            .collect();
        Self::new(self.labels.clone(), states, self.d_c, self.d_b).expect("swap keeps validity")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn b_states(&self) -> &[DensityMatrix] {
        &self.b_states
    }

    pub fn c_states(&self) -> &[DensityMatrix] {
        &self.c_states
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn alphabet_size(&self) -> usize {
        self.states.len()
    }
}

// ---------------------------------------------------------------------------
// Degradedness
// ---------------------------------------------------------------------------

pub const DEGRADED_TOL: f64 = 1e-6;
pub const DEGRADED_MAX_ITERS: usize = 2000;

#[derive(Clone, Debug)]
pub struct DegradedReport {
    /// Best CPTP map found (exactly trace preserving).
    pub channel: QuantumChannel,
    /// `max_x ‖N(ρ_B^x) − ρ_C^x‖₁` for that map.
    pub residual: f64,
    pub degraded: bool,
    pub iterations: usize,
}

/// `max_x ‖N(ρ_B^x) − ρ_C^x‖₁`.
pub fn degradation_residual(ch: &CqBroadcastChannel, n: &QuantumChannel) -> Result<f64> {
    if n.d_in() != ch.d_b || n.d_out() != ch.d_c {
        return Err(Error::DimensionMismatch {
            expected: ch.d_b * ch.d_c,
            got: n.d_in() * n.d_out(),
        });
    }
    let mut worst = 0.0_f64;
    for (b, cst) in ch.b_states.iter().zip(&ch.c_states) {
        worst = worst.max(apply_channel(n, b)?.sub(cst).trace_norm());
    }
    Ok(worst)
}

/// Searches for `N^{B→C}` with `N(ρ_B^x) = ρ_C^x`. See [`check_degraded_with`].
pub fn check_degraded(ch: &CqBroadcastChannel, tol: f64) -> Result<DegradedReport> {
    check_degraded_with(ch, tol, &[])
}

/// Like [`check_degraded`], trying the supplied maps (and the identity and
/// replacer maps where they apply) before the Choi-matrix projection search.
///
/// The search alternates between the affine set of Hermitian Choi matrices
/// that are trace preserving and reproduce every `ρ_C^x`, and the PSD cone,
/// with Dykstra's correction on the cone step. The final iterate is rescaled
/// to be exactly trace preserving before its residual is measured.
pub fn check_degraded_with(
    ch: &CqBroadcastChannel,
    tol: f64,
    hints: &[QuantumChannel],
) -> Result<DegradedReport> {
    check_range("tol", tol, tol > 0.0, "(0, ∞)")?;
    let (d_in, d_out) = (ch.d_b, ch.d_c);
    let mut best: Option<(QuantumChannel, f64)> = None;
    let consider = |n: QuantumChannel, best: &mut Option<(QuantumChannel, f64)>| -> Result<()> {
        let r = degradation_residual(ch, &n)?;
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            *best = Some((n, r));
        }
        Ok(())
    };
    for h in hints {
        if h.d_in() == d_in && h.d_out() == d_out {
            consider(h.clone(), &mut best)?;
        }
    }
    if d_in == d_out {
        consider(QuantumChannel::identity(d_in), &mut best)?;
    }
    consider(QuantumChannel::replacer(&ch.c_states[0], d_in), &mut best)?;
    if let Some((n, r)) = &best {
        if *r <= tol {
            return Ok(DegradedReport {
                channel: n.clone(),
                residual: *r,
                degraded: true,
                iterations: 0,
            });
        }
    }

    let (found, iterations) = choi_projection_search(ch, tol)?;
    if let Some(n) = found {
        consider(n, &mut best)?;
    }
    let (channel, residual) = best.expect("replacer candidate always present");
    Ok(DegradedReport {
        degraded: residual <= tol,
        channel,
        residual,
        iterations,
    })
}

fn choi_projection_search(ch: &CqBroadcastChannel, tol: f64) -> Result<(Option<QuantumChannel>, usize)> {
    let (d_in, d_out) = (ch.d_b, ch.d_c);
    let dd = d_in * d_out;
    let nvar = dd * dd;
    let rows = d_in * d_in + ch.alphabet_size() * d_out * d_out;
    let mut a = CMatrix::zeros(rows, nvar);
    let mut rhs = CVector::zeros(rows);
    let mut r = 0;
    // trace preservation: Tr N(|i⟩⟨j|) = δ_ij
    for i in 0..d_in {
        for j in 0..d_in {
            for o in 0..d_out {
                a[(r, (i * d_out + o) * dd + j * d_out + o)] = c(1.0);
            }
            rhs[r] = c(if i == j { 1.0 } else { 0.0 });
            r += 1;
        }
    }
    // data: N(ρ_B^x) = ρ_C^x
    for (b, cst) in ch.b_states.iter().zip(&ch.c_states) {
        for o in 0..d_out {
            for o2 in 0..d_out {
                for i in 0..d_in {
                    for j in 0..d_in {
                        a[(r, (i * d_out + o) * dd + j * d_out + o2)] = b.matrix()[(i, j)];
                    }
                }
                rhs[r] = cst.matrix()[(o, o2)];
                r += 1;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let pinv = svd
        .pseudo_inverse(smax * 1e-10)
        .map_err(|e| Error::Malformed(e.to_string()))?;

    let to_vec = |m: &CMatrix| CVector::from_iterator(nvar, m.transpose().iter().copied());
    let to_mat = |v: &CVector| CMatrix::from_row_slice(dd, dd, v.as_slice());
    let project_affine = |v: &CVector| -> CVector { v - &pinv * (&a * v - &rhs) };
    let project_psd = |v: &CVector| -> CVector {
        let h = HermitianOperator::from_matrix_unchecked(to_mat(v));
        to_vec(h.eigh().reconstruct(|l| l.max(0.0)).matrix())
    };

    let mut x = to_vec(&(CMatrix::identity(dd, dd) * c(1.0 / d_out as f64)));
    let mut q = CVector::zeros(nvar);
    let mut best: Option<(QuantumChannel, f64)> = None;
    let mut iterations = 0;
    for it in 1..=DEGRADED_MAX_ITERS {
        iterations = it;
        let y = project_affine(&x);
        let z = &y + &q;
        let next = project_psd(&z);
        q = z - &next;
        let change = (&next - &x).norm();
        x = next;
        if it % 10 == 0 || change < 1e-14 {
            if let Some(n) = finish_choi(&to_mat(&x), d_in, d_out) {
                let res = degradation_residual(ch, &n)?;
                if best.as_ref().is_none_or(|(_, b)| res < *b) {
                    best = Some((n, res));
                }
                if res <= tol * 1e-2 {
                    break;
                }
            }
            if change < 1e-14 {
                break;
            }
        }
    }
    if best.as_ref().is_none_or(|(_, b)| *b > tol * 1e-2) {
        // projections crawl when the feasible set touches the cone boundary;
        // finish with a factorized least-squares solve
        let start = HermitianOperator::from_matrix_unchecked(to_mat(&x));
        let root = start.eigh().reconstruct(|l| l.max(0.0).sqrt()).into_matrix();
        if let Some(j) = factorized_polish(&a, &rhs, root) {
            if let Some(n) = finish_choi(&j, d_in, d_out) {
                let res = degradation_residual(ch, &n)?;
                if best.as_ref().is_none_or(|(_, b)| res < *b) {
                    best = Some((n, res));
                }
            }
        }
    }
    Ok((best.map(|(n, _)| n), iterations))
}

/// Levenberg-Marquardt on `‖A vec(V V†) − b‖²` over square `V`, which keeps
/// the Choi matrix PSD by construction.
fn factorized_polish(a: &CMatrix, rhs: &CVector, v0: CMatrix) -> Option<CMatrix> {
    use nalgebra::{DMatrix, DVector};
    let dd = v0.nrows();
    let m = a.nrows();
    let np = 2 * dd * dd;
    let residual = |v: &CMatrix| -> DVector<f64> {
        let j = v * v.adjoint();
        let vec = CVector::from_iterator(dd * dd, j.transpose().iter().copied());
        let r = a * vec - rhs;
        DVector::from_iterator(2 * m, r.iter().map(|z| z.re).chain(r.iter().map(|z| z.im)))
    };
    let jacobian = |v: &CMatrix| -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(2 * m, np);
        for aa in 0..dd {
            for b in 0..dd {
                for (part, unit) in [(0, C64::new(1.0, 0.0)), (1, C64::new(0.0, 1.0))] {
                    let col = 2 * (aa * dd + b) + part;
                    let mut acc = CVector::zeros(m);
                    // d(VV†)[aa, s] = unit · conj(V[s, b]); d(VV†)[r, aa] = conj(unit) · V[r, b]
                    for s in 0..dd {
                        acc += a.column(aa * dd + s) * (unit * v[(s, b)].conj());
                    }
                    for r in 0..dd {
                        acc += a.column(r * dd + aa) * (unit.conj() * v[(r, b)]);
                    }
                    for k in 0..m {
                        jac[(k, col)] = acc[k].re;
                        jac[(m + k, col)] = acc[k].im;
                    }
                }
            }
        }
        jac
    };
    let mut v = v0;
    let mut r = residual(&v);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..300 {
        if cost < 1e-28 {
            break;
        }
        let jac = jacobian(&v);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..20 {
            let mut h = jtj.clone();
            for i in 0..np {
                h[(i, i)] += lambda * (jtj[(i, i)] + 1e-12);
            }
            let step = h.cholesky()?.solve(&(-&g));
            let trial = CMatrix::from_fn(dd, dd, |i, j| {
                let k = 2 * (i * dd + j);
                v[(i, j)] + C64::new(step[k], step[k + 1])
            });
            let rt = residual(&trial);
            let ct = rt.norm_squared();
            if ct < cost {
                v = trial;
                r = rt;
                cost = ct;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Some(&v * v.adjoint())
}

/// Rescales a PSD Choi matrix to be exactly trace preserving:
/// `J ↦ (M^{-1/2} ⊗ I) J (M^{-1/2} ⊗ I)` with `M = Tr_out J`.
fn finish_choi(j: &CMatrix, d_in: usize, d_out: usize) -> Option<QuantumChannel> {
    let mut h = HermitianOperator::from_matrix_unchecked(j.clone());
    let mut m = HermitianOperator::from_matrix_unchecked(partial_trace_matrix(h.matrix(), &[d_in, d_out], &[0]).ok()?);
    if m.min_eigenvalue() < 1e-10 {
        let dd = d_in * d_out;
        h = h.scale(1.0 - 1e-9).add(&HermitianOperator::identity(dd).scale(1e-9 / d_out as f64));
        m = HermitianOperator::from_matrix_unchecked(partial_trace_matrix(h.matrix(), &[d_in, d_out], &[0]).ok()?);
    }
    let inv_sqrt = m.eigh().reconstruct(|l| 1.0 / l.max(1e-300).sqrt());
    let k = inv_sqrt.matrix().kronecker(&CMatrix::identity(d_out, d_out));
    let fixed = HermitianOperator::from_matrix_unchecked(&k * h.matrix() * &k);
    QuantumChannel::from_choi(&fixed, d_in, d_out).ok()
}

// ---------------------------------------------------------------------------
// Joint states
// ---------------------------------------------------------------------------

/// Largest auxiliary dimension considered: `min{|X|, d_B² + d_C² − 1}`.
pub fn max_aux_dim(alphabet: usize, d_b: usize, d_c: usize) -> usize {
    alphabet.min(d_b * d_b + d_c * d_c - 1).max(1)
}

/// `ω_UXBC = ∑_x p(x) ρ_U^x ⊗ |x⟩⟨x| ⊗ ρ_BC^x`, stored blockwise over `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    weights: Vec<f64>,
    u_states: Vec<DensityMatrix>,
    bc_states: Vec<DensityMatrix>,
    b_states: Vec<DensityMatrix>,
    c_states: Vec<DensityMatrix>,
    d_u: usize,
    d_b: usize,
    d_c: usize,
}

pub fn build_joint_state(
    p_x: &[f64],
    u_states: Vec<DensityMatrix>,
    ch: &CqBroadcastChannel,
) -> Result<JointState> {
    let nx = ch.alphabet_size();
    if p_x.len() != nx || u_states.len() != nx {
        return Err(Error::DimensionMismatch {
            expected: nx,
            got: if p_x.len() != nx { p_x.len() } else { u_states.len() },
        });
    }
    crate::operator::check_distribution(p_x, TRACE_TOL)?;
    let d_u = u_states[0].dim();
    if let Some(bad) = u_states.iter().find(|s| s.dim() != d_u) {
        return Err(Error::DimensionMismatch {
            expected: d_u,
            got: bad.dim(),
        });
    }
    let bound = max_aux_dim(nx, ch.d_b, ch.d_c);
    if d_u > bound {
        return Err(Error::SizeLimit(format!(
            "auxiliary dimension {d_u} exceeds min(|X|, d_B² + d_C² − 1) = {bound}"
        )));
    }
    Ok(JointState {
        weights: p_x.to_vec(),
        u_states,
        bc_states: ch.states.clone(),
        b_states: ch.b_states.clone(),
        c_states: ch.c_states.clone(),
        d_u,
        d_b: ch.d_b,
        d_c: ch.d_c,
    })
}

fn weighted_sum<'a>(weights: &[f64], ops: impl Iterator<Item = HermitianOperator> + 'a, dim: usize) -> DensityMatrix {
    let mut acc = CMatrix::zeros(dim, dim);
    for (w, op) in weights.iter().zip(ops) {
        if *w != 0.0 {
            acc += op.matrix() * c(*w);
        }
    }
    DensityMatrix::from_op_unchecked(HermitianOperator::from_matrix_unchecked(acc))
}

impl JointState {
    pub fn alphabet_size(&self) -> usize {
        self.weights.len()
    }

    pub fn d_u(&self) -> usize {
        self.d_u
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn u_states(&self) -> &[DensityMatrix] {
        &self.u_states
    }

    pub fn omega_u(&self) -> DensityMatrix {
        weighted_sum(&self.weights, self.u_states.iter().map(|u| (**u).clone()), self.d_u)
    }

    pub fn omega_b(&self) -> DensityMatrix {
        weighted_sum(&self.weights, self.b_states.iter().map(|b| (**b).clone()), self.d_b)
    }

    pub fn omega_c(&self) -> DensityMatrix {
        weighted_sum(&self.weights, self.c_states.iter().map(|s| (**s).clone()), self.d_c)
    }

    /// `ω_UB`, factor order `[U, B]`.
    pub fn omega_ub(&self) -> DensityMatrix {
        let ops = self.u_states.iter().zip(&self.b_states).map(|(u, b)| tensor(u, b));
        weighted_sum(&self.weights, ops, self.d_u * self.d_b)
    }

    /// `ω_UC`, factor order `[U, C]`.
    pub fn omega_uc(&self) -> DensityMatrix {
        let ops = self.u_states.iter().zip(&self.c_states).map(|(u, s)| tensor(u, s));
        weighted_sum(&self.weights, ops, self.d_u * self.d_c)
    }

    /// `ω_XUB`, block diagonal in `x`, factor order `[X, U, B]`.
    pub fn omega_xub(&self) -> DensityMatrix {
        let block = self.d_u * self.d_b;
        let nx = self.alphabet_size();
        let mut m = CMatrix::zeros(nx * block, nx * block);
        for (x, (u, b)) in self.u_states.iter().zip(&self.b_states).enumerate() {
            let blk = tensor(u, b).into_matrix() * c(self.weights[x]);
            m.view_mut((x * block, x * block), (block, block)).copy_from(&blk);
        }
        DensityMatrix::from_op_unchecked(HermitianOperator::from_matrix_unchecked(m))
    }

    /// Full `ω_UXBC`, factor order `[U, X, B, C]`.
    pub fn omega_uxbc(&self) -> DensityMatrix {
        let nx = self.alphabet_size();
        let dim = self.d_u * nx * self.d_b * self.d_c;
        let ops = (0..nx).map(|x| {
            let proj = DensityMatrix::basis(nx, x);
            tensor(&tensor(&self.u_states[x], &proj), &self.bc_states[x])
        });
        weighted_sum(&self.weights, ops, dim)
    }
}

/// `(I(X;B|U)_ω, I(U;C)_ω)` in nats.
///
/// Uses `I(X;B|U) = S(UB) − S(U) − ∑_x p(x) S(ρ_B^x)`, valid because `UB` is a
/// product state on each `x` block.
pub fn region_objectives(omega: &JointState) -> (f64, f64) {
    let s_u = vn_entropy(&omega.omega_u());
    let s_ub = vn_entropy(&omega.omega_ub());
    let cond: f64 = omega
        .weights
        .iter()
        .zip(&omega.b_states)
        .map(|(w, b)| w * vn_entropy(b))
        .sum();
    let i_xb_u = s_ub - s_u - cond;
    let i_uc = s_u + vn_entropy(&omega.omega_c()) - vn_entropy(&omega.omega_uc());
    (i_xb_u, i_uc)
}

// ---------------------------------------------------------------------------
// Classical-auxiliary optimization
// ---------------------------------------------------------------------------

/// Holevo quantity of a fixed ensemble as a function of the prior.
struct HolevoTable {
    states: Vec<DensityMatrix>,
    entropies: Vec<f64>,
}

impl HolevoTable {
    fn new(states: &[DensityMatrix]) -> Self {
        Self {
            entropies: states.iter().map(vn_entropy).collect(),
            states: states.to_vec(),
        }
    }

    fn average(&self, q: &[f64]) -> HermitianOperator {
        let d = self.states[0].dim();
        let mut acc = CMatrix::zeros(d, d);
        for (w, s) in q.iter().zip(&self.states) {
            if *w != 0.0 {
                acc += s.matrix() * c(*w);
            }
        }
        HermitianOperator::from_matrix_unchecked(acc)
    }

    fn cond(&self, q: &[f64]) -> f64 {
        q.iter().zip(&self.entropies).map(|(w, s)| w * s).sum()
    }

    fn value(&self, q: &[f64]) -> f64 {
        entropy_of_spectrum(&self.average(q).eigenvalues()) - self.cond(q)
    }

    /// Value and gradient `∂χ/∂q_x = −Tr[ρ_x ln ρ̄] − S(ρ_x) − 1`.
    fn value_grad(&self, q: &[f64]) -> (f64, Vec<f64>) {
        let eig = self.average(q).eigh();
        let value = entropy_of_spectrum(&eig.values) - self.cond(q);
        let log = eig.reconstruct(|l| l.max(1e-300).ln());
        let grad = self
            .states
            .iter()
            .zip(&self.entropies)
            .map(|(s, e)| -s.trace_product(&log) - e - 1.0)
            .collect();
        (value, grad)
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

type Blocks = Vec<Vec<f64>>;

/// Projected gradient ascent over a product of simplices with Armijo
/// backtracking. Returns the final point and its value.
fn simplex_ascent(start: Blocks, eval: impl Fn(&Blocks) -> (f64, Blocks), max_iters: usize) -> (Blocks, f64) {
    let mut x = start;
    for b in x.iter_mut() {
        project_simplex(b);
    }
    let (mut fx, mut g) = eval(&x);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let mut accepted = false;
        while step > 1e-14 {
            let mut trial = x.clone();
            for (tb, gb) in trial.iter_mut().zip(&g) {
                for (t, gi) in tb.iter_mut().zip(gb) {
                    *t += step * gi;
                }
                project_simplex(tb);
            }
            let dir: f64 = trial
                .iter()
                .zip(&x)
                .zip(&g)
                .map(|((tb, xb), gb)| tb.iter().zip(xb).zip(gb).map(|((t, xi), gi)| (t - xi) * gi).sum::<f64>())
                .sum();
            if dir <= 1e-16 {
                return (x, fx);
            }
            let (ft, gt) = eval(&trial);
            if ft >= fx + 1e-4 * dir {
                let gain = ft - fx;
                x = trial;
                fx = ft;
                g = gt;
                step = (step * 2.0).min(1e4);
                accepted = true;
                if gain < 1e-14 {
                    return (x, fx);
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, fx)
}

/// Maximum of the Holevo quantity over priors: `(value, prior)`.
pub fn holevo_capacity(states: &[DensityMatrix]) -> (f64, Vec<f64>) {
    let table = HolevoTable::new(states);
    let n = states.len();
    let start = vec![vec![1.0 / n as f64; n]];
    let (p, v) = simplex_ascent(
        start,
        |b| {
            let (v, g) = table.value_grad(&b[0]);
            (v, vec![g])
        },
        2000,
    );
    let mut best = (v, p[0].clone());
    // vertices catch ensembles where a single input already wins
    for x in 0..n {
        let mut e = vec![0.0; n];
        e[x] = 1.0;
        let v = table.value(&e);
        if v > best.0 {
            best = (v, e);
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
enum Goal {
    /// `I(X;B|U) + μ I(U;C)`
    Lagrange(f64),
    /// `I(X;B|U) − w (t − I(U;C))_+²`
    Penalty { t: f64, w: f64 },
}

impl Goal {
    fn combine(self, ib: f64, ic: f64) -> (f64, f64, f64) {
        match self {
            Goal::Lagrange(mu) => (ib + mu * ic, 1.0, mu),
            Goal::Penalty { t, w } => {
                let gap = (t - ic).max(0.0);
                (ib - w * gap * gap, 1.0, 2.0 * w * gap)
            }
        }
    }
}

/// Classical auxiliary: block 0 is `p(u)`, block `1 + u` is `p(x|u)`.
struct ClassicalProblem {
    b: HolevoTable,
    c: HolevoTable,
    nu: usize,
    nx: usize,
}

fn marginal(a: &Blocks) -> Vec<f64> {
    let nx = a[1].len();
    let mut pbar = vec![0.0; nx];
    for (pu, q) in a[0].iter().zip(&a[1..]) {
        for (acc, qx) in pbar.iter_mut().zip(q) {
            *acc += pu * qx;
        }
    }
    pbar
}

impl ClassicalProblem {
    fn values(&self, a: &Blocks) -> (f64, f64) {
        let pbar = marginal(a);
        let mut ib = 0.0;
        let mut ic = self.c.value(&pbar);
        for (pu, q) in a[0].iter().zip(&a[1..]) {
            if *pu > 0.0 {
                ib += pu * self.b.value(q);
                ic -= pu * self.c.value(q);
            }
        }
        (ib, ic)
    }

    fn eval(&self, a: &Blocks, goal: Goal) -> (f64, Blocks) {
        let pbar = marginal(a);
        let (chi_bar, g_bar) = self.c.value_grad(&pbar);
        let mut ib = 0.0;
        let mut ic = chi_bar;
        let mut gib: Blocks = vec![vec![0.0; self.nu]];
        let mut gic: Blocks = vec![vec![0.0; self.nu]];
        for (u, (pu, q)) in a[0].iter().zip(&a[1..]).enumerate() {
            let (vb, gb) = self.b.value_grad(q);
            let (vc, gc) = self.c.value_grad(q);
            ib += pu * vb;
            ic -= pu * vc;
            gib[0][u] = vb;
            gic[0][u] = g_bar.iter().zip(q).map(|(g, qx)| g * qx).sum::<f64>() - vc;
            gib.push(gb.iter().map(|g| pu * g).collect());
            gic.push(g_bar.iter().zip(&gc).map(|(gbar, g)| pu * (gbar - g)).collect());
        }
        let (value, wb, wc) = goal.combine(ib, ic);
        let grad = gib
            .iter()
            .zip(&gic)
            .map(|(xb, xc)| xb.iter().zip(xc).map(|(b, cc)| wb * b + wc * cc).collect())
            .collect();
        (value, grad)
    }

    fn ascend(&self, start: Blocks, goal: Goal, max_iters: usize) -> Blocks {
        simplex_ascent(start, |a| self.eval(a, goal), max_iters).0
    }

    fn unit(&self, k: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.nx];
        e[k % self.nx] = 1.0;
        e
    }

    /// `U` a copy of `X` under prior `p`.
    fn copy_aux(&self, p: &[f64]) -> Blocks {
        let mut a = vec![vec![0.0; self.nu]];
        for (u, pu) in a[0].iter_mut().enumerate() {
            *pu = if u < self.nx { p[u] } else { 0.0 };
        }
        // when |U| < |X| merge the tail into the last symbol
        if self.nu < self.nx {
            let tail: f64 = p[self.nu - 1..].iter().sum();
            a[0][self.nu - 1] = tail;
        }
        for u in 0..self.nu {
            if self.nu < self.nx && u == self.nu - 1 {
                let tail: f64 = p[u..].iter().sum();
                let mut q = vec![0.0; self.nx];
                for x in u..self.nx {
                    q[x] = if tail > 0.0 { p[x] / tail } else { 1.0 / (self.nx - u) as f64 };
                }
                a.push(q);
            } else {
                a.push(self.unit(u));
            }
        }
        a
    }

    /// Trivial `U` with input prior `p`.
    fn trivial_aux(&self, p: &[f64]) -> Blocks {
        let mut a = vec![vec![0.0; self.nu]];
        a[0][0] = 1.0;
        a.push(p.to_vec());
        for u in 1..self.nu {
            a.push(self.unit(u));
        }
        a
    }

    /// `p(x|u) = (1 − β) δ_{xu} + β p_ref(x)` with `p(u) = p_ref(u)`.
    fn blend_aux(&self, p: &[f64], beta: f64) -> Blocks {
        let mut a = self.copy_aux(p);
        for q in a[1..].iter_mut() {
            for (qx, px) in q.iter_mut().zip(p) {
                *qx = (1.0 - beta) * *qx + beta * px;
            }
        }
        a
    }

    fn witness(&self, a: &Blocks, ch: &CqBroadcastChannel) -> Result<JointState> {
        let pbar = marginal(a);
        let total: f64 = pbar.iter().sum();
        let pbar: Vec<f64> = pbar.iter().map(|v| v / total).collect();
        let u_states = (0..self.nx)
            .map(|x| {
                if pbar[x] <= 1e-300 {
                    return DensityMatrix::basis(self.nu, 0);
                }
                let mut diag: Vec<f64> = (0..self.nu).map(|u| a[0][u] * a[1 + u][x] / (pbar[x] * total)).collect();
                let s: f64 = diag.iter().sum();
                diag.iter_mut().for_each(|v| *v /= s);
                DensityMatrix::from_op_unchecked(HermitianOperator::from_real_diagonal(&diag))
            })
            .collect();
        build_joint_state(&pbar, u_states, ch)
    }
}

fn mix_blocks(a: &Blocks, b: &Blocks, lambda: f64) -> Blocks {
    a.iter()
        .zip(b)
        .map(|(xa, xb)| xa.iter().zip(xb).map(|(u, v)| (1.0 - lambda) * u + lambda * v).collect())
        .collect()
}

/// Grid resolution of the exhaustive binary search.
pub const GRID_RESOLUTION: usize = 64;
/// Slack allowed on the constraint `I(U;C) ≥ t` when filtering witnesses.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Optimizer-noise allowance for the single-letter audits.
pub const OPTIMIZER_TOL: f64 = 2e-3;
/// Chord deficit tolerated on a computed boundary; witnesses undershoot the
/// true envelope by a few 1e-6 at worst.
pub const CONCAVITY_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
struct CloudPoint {
    ib: f64,
    ic: f64,
    aux: Blocks,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionOptions {
    pub seed: u64,
    /// Random multi-starts on top of the structured starting points.
    pub starts: usize,
    pub max_iters: usize,
    /// Exhaustive classical grid (binary inputs only).
    pub exhaustive_grid: bool,
    /// Also search quantum auxiliary states.
    pub quantum_u: bool,
    pub quantum_starts: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        Self {
            seed: 0x5EED,
            starts: 6,
            max_iters: 400,
            exhaustive_grid: true,
            quantum_u: false,
            quantum_starts: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegionPoint {
    pub t: f64,
    /// Best `I(X;B|U)` found subject to `I(U;C) ≥ t`.
    pub f_value: f64,
    pub i_xb_u: f64,
    pub i_uc: f64,
    /// Set when the exhaustive classical grid contributed a feasible witness.
    pub certified_lower: bool,
    pub witness: JointState,
}

#[derive(Clone, Debug)]
pub struct LagrangePoint {
    pub mu: f64,
    /// Best `I(X;B|U) + μ I(U;C)` over every witness the solver found.
    pub value: f64,
    pub i_xb_u: f64,
    pub i_uc: f64,
    pub witness: JointState,
}

/// Dual description of the region: `v(μ)` on a grid together with the two
/// single-letter maxima.
#[derive(Clone, Debug)]
pub struct RegionEnvelope {
    pub points: Vec<LagrangePoint>,
    /// `sup I(X;B|U)`, attained with a trivial auxiliary.
    pub max_i_xb_u: f64,
    /// `sup I(U;C)`, attained with `U` a copy of `X`.
    pub max_i_uc: f64,
    pub certified_lower: bool,
}

impl RegionEnvelope {
    /// `max_w { I_w(X;B|U) + μ I_w(U;C) }` over the stored witnesses; convex
    /// and non-decreasing in `μ`.
    pub fn value_at(&self, mu: f64) -> f64 {
        self.points
            .iter()
            .map(|p| p.i_xb_u + mu * p.i_uc)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Dual estimate `min_μ { v(μ) − μ t }` over the grid.
    pub fn dual_f(&self, t: f64) -> f64 {
        self.points
            .iter()
            .map(|p| p.value - p.mu * t)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `{0} ∪ logspace(1e-3, 1e3, 61)`.
pub fn default_mu_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..61).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 60.0)))
        .collect()
}

/// Shared precomputation for boundary queries on one channel.
pub struct RegionSolver<'a> {
    ch: &'a CqBroadcastChannel,
    opts: RegionOptions,
    problem: ClassicalProblem,
    front: Option<Vec<CloudPoint>>,
    cap_b: (f64, Vec<f64>),
    cap_c: (f64, Vec<f64>),
}

impl<'a> RegionSolver<'a> {
    pub fn new(ch: &'a CqBroadcastChannel, opts: RegionOptions) -> Self {
        let nx = ch.alphabet_size();
        let nu = max_aux_dim(nx, ch.d_b, ch.d_c);
        let problem = ClassicalProblem {
            b: HolevoTable::new(&ch.b_states),
            c: HolevoTable::new(&ch.c_states),
            nu,
            nx,
        };
        let cap_b = holevo_capacity(&ch.b_states);
        let cap_c = holevo_capacity(&ch.c_states);
        let front = (opts.exhaustive_grid && nx == 2 && nu == 2).then(|| binary_front(&problem));
        Self {
            ch,
            opts,
            problem,
            front,
            cap_b,
            cap_c,
        }
    }

    pub fn capacity_b(&self) -> f64 {
        self.cap_b.0
    }

    pub fn capacity_c(&self) -> f64 {
        self.cap_c.0
    }

    pub fn has_exhaustive_grid(&self) -> bool {
        self.front.is_some()
    }

    fn starts(&self) -> Vec<Blocks> {
        let pr = &self.problem;
        let uniform = vec![1.0 / pr.nx as f64; pr.nx];
        let mut s = vec![
            pr.trivial_aux(&self.cap_b.1),
            pr.copy_aux(&self.cap_c.1),
            pr.copy_aux(&uniform),
        ];
        for beta in [0.1, 0.3, 0.6] {
            s.push(pr.blend_aux(&uniform, beta));
            s.push(pr.blend_aux(&self.cap_c.1, beta));
        }
        for k in 0..self.opts.starts {
            let mut r = rng(shard_seed(self.opts.seed, 0x5247, k as u64));
            let mut a = vec![random_probability(&mut r, pr.nu)];
            for _ in 0..pr.nu {
                a.push(random_probability(&mut r, pr.nx));
            }
            s.push(a);
        }
        s
    }

    /// Lower bound on `F(t)` from the best feasible witness found.
    pub fn f_of_t(&self, t: f64) -> Result<RegionPoint> {
        check_range("t", t, t >= 0.0, "[0, ∞)")?;
        let cap = self.cap_c.0;
        if t > cap + FEASIBILITY_TOL {
            return Err(Error::Infeasible(format!(
                "t = {t} exceeds the largest attainable I(U;C) = {cap}"
            )));
        }
        let pr = &self.problem;
        let feasible = |ic: f64| ic >= t - FEASIBILITY_TOL;
        let anchor = pr.copy_aux(&self.cap_c.1);
        let mut cands: Vec<Blocks> = vec![anchor.clone()];
        let mut certified = false;
        let mut seeds = self.starts();
        if let Some(front) = &self.front {
            if let Some(p) = front.iter().filter(|p| feasible(p.ic)).max_by(|a, b| a.ib.total_cmp(&b.ib)) {
                certified = true;
                cands.push(p.aux.clone());
                seeds.push(p.aux.clone());
            }
        }
        let weights: Vec<f64> = (0..8).map(|k| 10f64.powf(1.0 + 4.0 * k as f64 / 7.0)).collect();
        let refined: Vec<Blocks> = seeds
            .into_iter()
            .map(|mut a| {
                for &w in &weights {
                    a = pr.ascend(a, Goal::Penalty { t, w }, self.opts.max_iters);
                }
                a
            })
            .collect();
        for a in refined {
            let (_, ic) = pr.values(&a);
            if feasible(ic) {
                cands.push(a);
                continue;
            }
            // pull toward the max-I(U;C) witness until the constraint holds
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if feasible(pr.values(&mix_blocks(&a, &anchor, mid)).1) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            cands.push(mix_blocks(&a, &anchor, hi));
        }
        let mut best: Option<(f64, JointState)> = None;
        for a in cands {
            let w = pr.witness(&a, self.ch)?;
            let (ib, ic) = region_objectives(&w);
            if feasible(ic) && best.as_ref().is_none_or(|(b, _)| ib > *b) {
                best = Some((ib, w));
            }
        }
        if self.opts.quantum_u {
            if let Some((ib, w)) = self.quantum_search(Goal::Penalty { t, w: 1e4 }, best.as_ref().map(|b| &b.1)) {
                let (_, ic) = region_objectives(&w);
                if feasible(ic) && best.as_ref().is_none_or(|(b, _)| ib > *b) {
                    best = Some((ib, w));
                }
            }
        }
        let (_, witness) = best.ok_or_else(|| Error::Infeasible(format!("no witness with I(U;C) ≥ {t}")))?;
        let (i_xb_u, i_uc) = region_objectives(&witness);
        Ok(RegionPoint {
            t,
            f_value: i_xb_u,
            i_xb_u,
            i_uc,
            certified_lower: certified,
            witness,
        })
    }

    /// Best witness for `I(X;B|U) + μ I(U;C)` from this solver's own search.
    fn lagrange_witness(&self, mu: f64) -> Result<JointState> {
        check_range("mu", mu, mu >= 0.0, "[0, ∞)")?;
        let pr = &self.problem;
        let mut seeds = self.starts();
        if let Some(front) = &self.front {
            if let Some(p) = front.iter().max_by(|a, b| (a.ib + mu * a.ic).total_cmp(&(b.ib + mu * b.ic))) {
                seeds.push(p.aux.clone());
            }
        }
        let mut best: Option<(f64, JointState)> = None;
        for a in seeds {
            let a = pr.ascend(a, Goal::Lagrange(mu), self.opts.max_iters);
            let w = pr.witness(&a, self.ch)?;
            let (ib, ic) = region_objectives(&w);
            let v = ib + mu * ic;
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, w));
            }
        }
        if self.opts.quantum_u {
            if let Some((_, w)) = self.quantum_search(Goal::Lagrange(mu), best.as_ref().map(|b| &b.1)) {
                let (ib, ic) = region_objectives(&w);
                if best.as_ref().is_none_or(|(b, _)| ib + mu * ic > *b) {
                    best = Some((ib + mu * ic, w));
                }
            }
        }
        Ok(best.expect("at least one start").1)
    }

    /// Dual sweep over `mu_grid`. Each reported value is the maximum over all
    /// witnesses found at any grid point, so `v` is convex and monotone.
    pub fn envelope(&self, mu_grid: &[f64]) -> Result<RegionEnvelope> {
        let witnesses: Vec<JointState> = mu_grid
            .par_iter()
            .map(|&mu| self.lagrange_witness(mu))
            .collect::<Result<_>>()?;
        let mut pool: Vec<(f64, f64, JointState)> = witnesses
            .into_iter()
            .map(|w| {
                let (ib, ic) = region_objectives(&w);
                (ib, ic, w)
            })
            .collect();
        if let Some(front) = &self.front {
            for p in front {
                let w = self.problem.witness(&p.aux, self.ch)?;
                let (ib, ic) = region_objectives(&w);
                pool.push((ib, ic, w));
            }
        }
        let points = mu_grid
            .iter()
            .map(|&mu| {
                let (ib, ic, w) = pool
                    .iter()
                    .max_by(|a, b| (a.0 + mu * a.1).total_cmp(&(b.0 + mu * b.1)))
                    .expect("nonempty pool");
                LagrangePoint {
                    mu,
                    value: ib + mu * ic,
                    i_xb_u: *ib,
                    i_uc: *ic,
                    witness: w.clone(),
                }
            })
            .collect();
        Ok(RegionEnvelope {
            points,
            max_i_xb_u: self.cap_b.0,
            max_i_uc: self.cap_c.0,
            certified_lower: self.front.is_some(),
        })
    }

    /// `F(t)` on each grid value, in order; infeasible values are errors.
    pub fn boundary(&self, t_grid: &[f64]) -> Vec<Result<RegionPoint>> {
        t_grid.par_iter().map(|&t| self.f_of_t(t)).collect()
    }

    /// Finite-difference ascent over quantum auxiliary states
    /// `ρ_U^x = G_x G_x† / Tr` and a softmax prior.
    fn quantum_search(&self, goal: Goal, warm: Option<&JointState>) -> Option<(f64, JointState)> {
        let nx = self.problem.nx;
        let du = self.problem.nu;
        let per = 2 * du * du;
        let dim = nx + nx * per;
        let decode = |theta: &[f64]| -> Option<JointState> {
            let m = theta[..nx].iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let e: Vec<f64> = theta[..nx].iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            let p: Vec<f64> = e.iter().map(|v| v / s).collect();
            let us = (0..nx)
                .map(|x| {
                    let off = nx + x * per;
                    let g = CMatrix::from_fn(du, du, |i, j| {
                        let k = off + 2 * (i * du + j);
                        C64::new(theta[k], theta[k + 1])
                    });
                    let op = HermitianOperator::from_matrix_unchecked(&g * g.adjoint());
                    let tr = op.trace().max(1e-300);
                    DensityMatrix::from_op_unchecked(op.scale(1.0 / tr))
                })
                .collect();
            build_joint_state(&p, us, self.ch).ok()
        };
        let score = |theta: &[f64]| -> f64 {
            decode(theta).map_or(f64::NEG_INFINITY, |w| {
                let (ib, ic) = region_objectives(&w);
                goal.combine(ib, ic).0
            })
        };
        let mut starts: Vec<Vec<f64>> = Vec::new();
        if let Some(w) = warm {
            let mut th = vec![0.0; dim];
            for x in 0..nx {
                th[x] = w.weights[x].max(1e-12).ln();
                let root = crate::operator::matrix_power(&w.u_states[x], 0.5).ok()?;
                for i in 0..du {
                    for j in 0..du {
                        let z = root.matrix()[(i, j)];
                        let k = nx + x * per + 2 * (i * du + j);
                        th[k] = z.re;
                        th[k + 1] = z.im;
                    }
                }
            }
            starts.push(th);
        }
        for k in 0..self.opts.quantum_starts {
            let mut r = rng(shard_seed(self.opts.seed, 0x5155, k as u64));
            let mut th = vec![0.0; dim];
            for x in 0..nx {
                let g = ginibre(&mut r, du, du);
                for (idx, z) in g.transpose().iter().enumerate() {
                    th[nx + x * per + 2 * idx] = z.re;
                    th[nx + x * per + 2 * idx + 1] = z.im;
                }
            }
            starts.push(th);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mut th in starts {
            let mut f = score(&th);
            let mut step = 0.1;
            for _ in 0..150 {
                let h = 1e-6;
                let grad: Vec<f64> = (0..dim)
                    .map(|k| {
                        let mut a = th.clone();
                        let mut b = th.clone();
                        a[k] += h;
                        b[k] -= h;
                        (score(&a) - score(&b)) / (2.0 * h)
                    })
                    .collect();
                let gn: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if !gn.is_finite() || gn < 1e-10 {
                    break;
                }
                let mut moved = false;
                while step > 1e-10 {
                    let trial: Vec<f64> = th.iter().zip(&grad).map(|(t, g)| t + step * g / gn).collect();
                    let ft = score(&trial);
                    if ft > f {
                        th = trial;
                        f = ft;
                        step *= 1.5;
                        moved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            if best.as_ref().is_none_or(|(b, _)| f > *b) {
                best = Some((f, th));
            }
        }
        let (_, th) = best?;
        let w = decode(&th)?;
        let (ib, _) = region_objectives(&w);
        Some((ib, w))
    }
}

/// Pareto front of the exhaustive grid over binary auxiliaries:
/// `p(u) = (w, 1 − w)`, `p(x|u=0) = (a, 1 − a)`, `p(x|u=1) = (b, 1 − b)`,
/// each on the `1/64` lattice. The marginal then lies on the `1/64²` lattice,
/// so every Holevo value needed is tabulated once.
fn binary_front(pr: &ClassicalProblem) -> Vec<CloudPoint> {
    let r = GRID_RESOLUTION;
    let fine = r * r;
    let q = |k: usize, n: usize| {
        let a = k as f64 / n as f64;
        [a, 1.0 - a]
    };
    let chi_b: Vec<f64> = (0..=r).map(|k| pr.b.value(&q(k, r))).collect();
    let chi_c: Vec<f64> = (0..=r).map(|k| pr.c.value(&q(k, r))).collect();
    let chi_c_fine: Vec<f64> = (0..=fine).into_par_iter().map(|k| pr.c.value(&q(k, fine))).collect();
    let mut cloud: Vec<(f64, f64, usize, usize, usize)> = Vec::with_capacity((r + 1).pow(3));
    for i in 0..=r {
        let w = i as f64 / r as f64;
        for ja in 0..=r {
            for jb in ja..=r {
                let ib = w * chi_b[ja] + (1.0 - w) * chi_b[jb];
                let k = i * ja + (r - i) * jb;
                let ic = chi_c_fine[k] - w * chi_c[ja] - (1.0 - w) * chi_c[jb];
                cloud.push((ib, ic, i, ja, jb));
            }
        }
    }
    cloud.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.total_cmp(&a.0)));
    let mut front = Vec::new();
    let mut best_ib = f64::NEG_INFINITY;
    for (ib, ic, i, ja, jb) in cloud {
        if ib > best_ib + 1e-15 {
            best_ib = ib;
            let w = i as f64 / r as f64;
            front.push(CloudPoint {
                ib,
                ic,
                aux: vec![vec![w, 1.0 - w], q(ja, r).to_vec(), q(jb, r).to_vec()],
            });
        }
    }
    front
}

/// One-shot `F(t)`; prefer [`RegionSolver`] for several queries.
pub fn f_of_t(ch: &CqBroadcastChannel, t: f64, opts: &RegionOptions) -> Result<RegionPoint> {
    RegionSolver::new(ch, opts.clone()).f_of_t(t)
}

/// `v(μ)` for each `μ` in the grid.
pub fn lagrangian_boundary(ch: &CqBroadcastChannel, mu_grid: &[f64], opts: &RegionOptions) -> Result<Vec<LagrangePoint>> {
    if let Some(&bad) = mu_grid.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
        return Err(Error::OutOfRange {
            name: "mu",
            value: bad,
            range: "[0, ∞)",
        });
    }
    Ok(RegionSolver::new(ch, opts.clone()).envelope(mu_grid)?.points)
}

/// Envelope on the default `μ` grid.
pub fn region_envelope(ch: &CqBroadcastChannel, opts: &RegionOptions) -> Result<RegionEnvelope> {
    RegionSolver::new(ch, opts.clone()).envelope(&default_mu_grid())
}

// ---------------------------------------------------------------------------
// Concavity audit
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityViolation {
    pub t: f64,
    /// Chord value minus `F(t)`; positive means a dip below the chord.
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub triples_checked: usize,
    pub worst_deficit: f64,
    pub violations: Vec<ConcavityViolation>,
    pub concave: bool,
}

/// Chord test on every consecutive triple of `(t, F(t))` points.
pub fn concavity_audit(points: &[(f64, f64)], tol: f64) -> ConcavityReport {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut violations = Vec::new();
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for w in pts.windows(3) {
        let [(t0, f0), (t1, f1), (t2, f2)] = [w[0], w[1], w[2]];
        if t2 <= t0 {
            continue;
        }
        checked += 1;
        let lambda = (t2 - t1) / (t2 - t0);
        let chord = lambda * f0 + (1.0 - lambda) * f2;
        let deficit = chord - f1;
        worst = worst.max(deficit);
        if deficit > tol {
            violations.push(ConcavityViolation { t: t1, deficit });
        }
    }
    ConcavityReport {
        triples_checked: checked,
        worst_deficit: worst,
        concave: violations.is_empty(),
        violations,
    }
}
