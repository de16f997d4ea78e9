//! Entropies, divergences and information quantities, all in nats.

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::operator::{
    c, matrix_power, partial_trace, CMatrix, DensityMatrix, HermitianOperator, CLIP, PSD_TOL,
};
use crate::random::{haar_unitary, rng};
use crate::region::JointState;

/// `−∑ λ ln λ` over a spectrum, with `0 ln 0 = 0`.
pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&v| v > CLIP)
        .map(|&v| -v * v.ln())
        .sum()
}

/// Shannon entropy of a probability vector (nats).
pub fn shannon_entropy(p: &[f64]) -> f64 {
    entropy_of_spectrum(p)
}

/// Binary entropy `h(ε)` in nats.
pub fn binary_entropy(eps: f64) -> f64 {
    shannon_entropy(&[eps, 1.0 - eps])
}

/// Von Neumann entropy `−Tr ρ ln ρ`.
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues()).max(0.0)
}

/// Holevo quantity `S(∑ p_x ρ_x) − ∑ p_x S(ρ_x)`.
pub fn holevo_information(weights: &[f64], states: &[DensityMatrix]) -> Result<f64> {
    let avg = DensityMatrix::mixture(weights, states)?;
    let cond: f64 = weights
        .iter()
        .zip(states)
        .map(|(w, s)| w * vn_entropy(s))
        .sum();
    Ok(vn_entropy(&avg) - cond)
}

fn same_dim(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

fn require_psd(sigma: &HermitianOperator) -> Result<crate::operator::Eigen> {
    let eig = sigma.eigh();
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    Ok(eig)
}

/// Quantum relative entropy `Tr ρ(ln ρ − ln σ)`, or `+∞` when the support of
/// `ρ` is not contained in the support of `σ`.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &HermitianOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    let s_eig = require_psd(sigma)?;
    // Tr ρ ln σ = ∑_j ln s_j ⟨s_j|ρ|s_j⟩; weight of ρ on ker σ forces +∞.
    let mut cross = 0.0;
    let mut kernel_weight = 0.0;
    for (j, &s) in s_eig.values.iter().enumerate() {
        let w = rho.expectation(&s_eig.vector(j));
        if s <= CLIP {
            kernel_weight += w.max(0.0);
        } else {
            cross += w * s.ln();
        }
    }
    if kernel_weight > 1e-10 {
        return Ok(f64::INFINITY);
    }
    Ok(-vn_entropy(rho) - cross)
}

/// `Tr[ρ^α σ^{1−α}]`.
pub fn petz_quasi_entropy(rho: &DensityMatrix, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    same_dim(rho, sigma)?;
    require_psd(sigma)?;
    let ra = matrix_power(rho, alpha)?;
    let sb = matrix_power(sigma, 1.0 - alpha)?;
    Ok(ra.trace_product(&sb))
}

/// Petz–Rényi relative entropy of order `α ∈ (0,1)`.
pub fn renyi_rel_entropy(rho: &DensityMatrix, sigma: &HermitianOperator, alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "(0, 1)")?;
    let q = petz_quasi_entropy(rho, sigma, alpha)?;
    if q <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(q.ln() / (alpha - 1.0))
}

/// Search settings for [`measured_renyi`].
#[derive(Clone, Debug)]
pub struct MeasuredRenyiOptions {
    /// Haar-random starting bases on top of the structured candidates.
    pub restarts: usize,
    pub seed: u64,
    /// A refinement sweep that improves the objective by less than this stops.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for MeasuredRenyiOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            seed: 0x5eed,
            tolerance: 1e-9,
            max_sweeps: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeasuredRenyiResult {
    /// `D^P_α` in nats.
    pub value: f64,
    /// The minimized `∑ (Tr P_i ρ)^α (Tr P_i σ)^{1−α}`.
    pub q_value: f64,
    /// Rank-one projectors of the best basis found.
    pub optimal_basis: Vec<HermitianOperator>,
    pub converged: bool,
}

struct BasisSearch<'a> {
    rho: &'a CMatrix,
    sigma: &'a CMatrix,
    alpha: f64,
}

fn power_mean(a: f64, b: f64, alpha: f64) -> f64 {
    let a = a.max(0.0);
    let b = b.max(0.0);
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a.powf(alpha) * b.powf(1.0 - alpha)
    }
}

impl BasisSearch<'_> {
    fn quad(m: &CMatrix, u: &CMatrix, i: usize, j: usize) -> nalgebra::Complex<f64> {
        let ui = u.column(i);
        let uj = u.column(j);
        (ui.adjoint() * m * uj)[(0, 0)]
    }

    fn objective(&self, u: &CMatrix) -> f64 {
        (0..u.ncols())
            .map(|i| {
                power_mean(
                    Self::quad(self.rho, u, i, i).re,
                    Self::quad(self.sigma, u, i, i).re,
                    self.alpha,
                )
            })
            .sum()
    }

    /// Optimal rotation of columns `i`, `j` within their span. The pair
    /// objective is concave in the Bloch coordinates, so the minimum lies on the
    /// great circle spanned by the two Bloch vectors; a 1-D search suffices.
    fn rotate_pair(&self, u: &mut CMatrix, i: usize, j: usize) -> f64 {
        let r00 = Self::quad(self.rho, u, i, i).re;
        let r11 = Self::quad(self.rho, u, j, j).re;
        let r01 = Self::quad(self.rho, u, i, j);
        let s00 = Self::quad(self.sigma, u, i, i).re;
        let s11 = Self::quad(self.sigma, u, j, j).re;
        let s01 = Self::quad(self.sigma, u, i, j);
        let a0 = 0.5 * (r00 + r11);
        let b0 = 0.5 * (s00 + s11);
        let av = [0.5 * (r00 - r11), r01.re, -r01.im];
        let bv = [0.5 * (s00 - s11), s01.re, -s01.im];
        let alpha = self.alpha;
        let pair = |n: &[f64; 3]| {
            let x = n[0] * av[0] + n[1] * av[1] + n[2] * av[2];
            let y = n[0] * bv[0] + n[1] * bv[1] + n[2] * bv[2];
            power_mean(a0 + x, b0 + y, alpha) + power_mean(a0 - x, b0 - y, alpha)
        };
        let current = pair(&[1.0, 0.0, 0.0]);

        // orthonormal frame of span{av, bv}
        let norm = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let na = norm(&av);
        let nb = norm(&bv);
        let (e1, e2) = if na < 1e-300 && nb < 1e-300 {
            return current;
        } else {
            let base = if na >= nb { av } else { bv };
            let other = if na >= nb { bv } else { av };
            let nbase = norm(&base);
            let e1 = [base[0] / nbase, base[1] / nbase, base[2] / nbase];
            let dot = other[0] * e1[0] + other[1] * e1[1] + other[2] * e1[2];
            let mut w = [
                other[0] - dot * e1[0],
                other[1] - dot * e1[1],
                other[2] - dot * e1[2],
            ];
            let nw = norm(&w);
            if nw < 1e-12 * norm(&other).max(1e-300) {
                // collinear: any unit vector orthogonal to e1
                let t = if e1[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let d = t[0] * e1[0] + t[1] * e1[1] + t[2] * e1[2];
                w = [t[0] - d * e1[0], t[1] - d * e1[1], t[2] - d * e1[2]];
            }
            let nw = norm(&w);
            (e1, [w[0] / nw, w[1] / nw, w[2] / nw])
        };
        let dir = |psi: f64| {
            let (s, co) = psi.sin_cos();
            [
                co * e1[0] + s * e2[0],
                co * e1[1] + s * e2[1],
                co * e1[2] + s * e2[2],
            ]
        };
        let f = |psi: f64| pair(&dir(psi));
        // n and −n give the same pair objective: search ψ ∈ [0, π).
        let grid = 48;
        let step = std::f64::consts::PI / grid as f64;
        let (mut best_psi, mut best) = (0.0, f(0.0));
        for k in 1..grid {
            let psi = k as f64 * step;
            let v = f(psi);
            if v < best {
                best = v;
                best_psi = psi;
            }
        }
        // golden-section refinement on the bracketing cell
        let (mut lo, mut hi) = (best_psi - step, best_psi + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..60 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = f(x2);
            }
        }
        let (psi, val) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
        let (psi, val) = if val < best { (psi, val) } else { (best_psi, best) };
        if val >= current {
            return current;
        }
        let n = dir(psi);
        // n = (cos 2θ, sin 2θ cos φ, sin 2θ sin φ)
        let theta = 0.5 * n[0].clamp(-1.0, 1.0).acos();
        let phi = n[2].atan2(n[1]);
        let (st, ct) = theta.sin_cos();
        let e_iphi = nalgebra::Complex::from_polar(1.0, phi);
        let ui = u.column(i).into_owned();
        let uj = u.column(j).into_owned();
        let new_i = &ui * c(ct) + &uj * (e_iphi * st);
        let new_j = &ui * (-e_iphi.conj() * st) + &uj * c(ct);
        u.set_column(i, &new_i);
        u.set_column(j, &new_j);
        val
    }

    fn refine(&self, u: &mut CMatrix, tol: f64, max_sweeps: usize) -> (f64, bool) {
        let d = u.ncols();
        let mut value = self.objective(u);
        for _ in 0..max_sweeps {
            let before = value;
            for i in 0..d {
                for j in (i + 1)..d {
                    self.rotate_pair(u, i, j);
                }
            }
            // re-orthonormalize to stop drift
            let q = u.clone().qr().q();
            *u = q;
            value = self.objective(u);
            if before - value < tol {
                return (value, true);
            }
        }
        (value, false)
    }
}

/// Projectively measured Rényi divergence `D^P_α(ρ‖σ)`, `α ∈ (0,1)`.
///
/// Minimizes `∑_i (Tr P_i ρ)^α (Tr P_i σ)^{1−α}` over rank-one orthonormal
/// bases. Candidate bases: eigenbases of `ρ`, `σ` and a generic combination
/// `ρ + πσ`, the eigenbasis of the operator geometric mean `σ^{-1} # ρ`, and
/// `opts.restarts` Haar-random bases; each is refined by Givens-rotation
/// coordinate descent. The returned value is an upper bound on the infimum
/// of the quasi-entropy, hence a lower bound on `D^P_α`.
pub fn measured_renyi(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    alpha: f64,
    opts: &MeasuredRenyiOptions,
) -> Result<MeasuredRenyiResult> {
    check_range("alpha", alpha, alpha > 0.0 && alpha < 1.0, "(0, 1)")?;
    same_dim(rho, sigma)?;
    let s_eig = sigma.eigh();
    let min = s_eig.values[0];
    if min <= CLIP {
        return Err(Error::NotPositive(min));
    }
    let d = rho.dim();
    let search = BasisSearch {
        rho: rho.matrix(),
        sigma: sigma.matrix(),
        alpha,
    };

    let mut candidates: Vec<CMatrix> = vec![rho.eigh().vectors, s_eig.vectors.clone()];
    candidates.push(rho.add(&sigma.scale(std::f64::consts::PI)).eigh().vectors);
    let sig_half = matrix_power(sigma, 0.5)?;
    let sig_mhalf = matrix_power(sigma, -0.5)?;
    let mid = matrix_power(&rho.sandwich(&sig_half), 0.5)?;
    candidates.push(mid.sandwich(&sig_mhalf).eigh().vectors);
    let mut r = rng(opts.seed);
    for _ in 0..opts.restarts {
        candidates.push(haar_unitary(&mut r, d));
    }

    let mut best: Option<(f64, CMatrix, bool)> = None;
    for mut u in candidates {
        let (value, conv) = search.refine(&mut u, opts.tolerance, opts.max_sweeps);
        if best.as_ref().is_none_or(|(b, _, _)| value < *b) {
            best = Some((value, u, conv));
        }
    }
    let (q, u, converged) = best.expect("at least one candidate");
    let value = if q <= 0.0 {
        f64::INFINITY
    } else {
        q.ln() / (alpha - 1.0)
    };
    let optimal_basis = (0..d)
        .map(|i| HermitianOperator::outer(&u.column(i).into_owned()))
        .collect();
    Ok(MeasuredRenyiResult {
        value,
        q_value: q,
        optimal_basis,
        converged,
    })
}

/// Settings for [`variational_q`].
#[derive(Clone, Debug)]
pub struct VariationalOptions {
    pub max_iters: usize,
    /// Stop when a step improves the log-objective by less than this.
    pub tolerance: f64,
    /// Regularization weight applied to singular inputs.
    pub regularization: f64,
    pub measured: MeasuredRenyiOptions,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tolerance: 1e-15,
            regularization: 1e-9,
            measured: MeasuredRenyiOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VariationalResult {
    /// Best value of `(Tr ρG)^p (Tr σG^{p̂})^{1−p}` found.
    pub value: f64,
    pub g: HermitianOperator,
    pub iterations: usize,
}

/// Hölder conjugate `p̂ = (1 − 1/p)^{-1}`.
pub fn holder_conjugate(p: f64) -> f64 {
    1.0 / (1.0 - 1.0 / p)
}

/// `(Tr ρG)^p (Tr σ G^{p̂})^{1−p}` at a given `G > 0`.
pub fn variational_objective(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    p: f64,
    g: &HermitianOperator,
) -> Result<f64> {
    check_range("p", p, p > 0.0 && p < 0.5, "(0, 1/2)")?;
    same_dim(rho, sigma)?;
    same_dim(rho, g)?;
    let gp = matrix_power(g, holder_conjugate(p))?;
    let t1 = rho.trace_product(g);
    let t2 = sigma.trace_product(&gp);
    Ok(t1.powf(p) * t2.powf(1.0 - p))
}

fn faithful(rho: &DensityMatrix, eps: f64) -> DensityMatrix {
    if rho.min_eigenvalue() <= CLIP {
        rho.regularized(eps)
    } else {
        rho.clone()
    }
}

/// Log-objective and its gradient at `G = exp(H)` via divided differences.
fn log_objective_and_gradient(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    p: f64,
    h: &HermitianOperator,
) -> (f64, HermitianOperator) {
    let ph = holder_conjugate(p);
    let eig = h.eigh();
    let d = h.dim();
    let v = &eig.vectors;
    let rt = v.adjoint() * rho.matrix() * v;
    let st = v.adjoint() * sigma.matrix() * v;
    let hv = &eig.values;
    let divided = |f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, k: usize, l: usize| {
        let (a, b) = (hv[k], hv[l]);
        if (a - b).abs() < 1e-9 * (1.0 + a.abs()) {
            df(0.5 * (a + b))
        } else {
            (f(a) - f(b)) / (a - b)
        }
    };
    let f1 = |x: f64| x.exp();
    let f2 = move |x: f64| (ph * x).exp();
    let df2 = move |x: f64| ph * (ph * x).exp();
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for k in 0..d {
        t1 += rt[(k, k)].re * f1(hv[k]);
        t2 += st[(k, k)].re * f2(hv[k]);
    }
    let mut grad = CMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let g1 = divided(&f1, &f1, k, l);
            let g2 = divided(&f2, &df2, k, l);
            grad[(k, l)] = rt[(k, l)] * c(p * g1 / t1) + st[(k, l)] * c((1.0 - p) * g2 / t2);
        }
    }
    let grad = HermitianOperator::from_matrix_unchecked(v * grad * v.adjoint());
    let value = p * t1.ln() + (1.0 - p) * t2.ln();
    (value, grad)
}

fn log_objective(rho: &HermitianOperator, sigma: &HermitianOperator, p: f64, h: &HermitianOperator) -> f64 {
    let ph = holder_conjugate(p);
    let eig = h.eigh();
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for (k, &hk) in eig.values.iter().enumerate() {
        let vk = eig.vector(k);
        t1 += rho.expectation(&vk) * hk.exp();
        t2 += sigma.expectation(&vk) * (ph * hk).exp();
    }
    p * t1.ln() + (1.0 - p) * t2.ln()
}

/// Variational estimate of `Q^P_p(ρ‖σ) = inf_{G>0} (Tr ρG)^p (Tr σG^{p̂})^{1−p}`
/// for `p ∈ (0, 1/2)`.
///
/// `G = exp(H)` starts at the classical optimum on the measured-Rényi basis,
/// `G = ∑ (b_i/a_i)^{1−p} P_i`, and is improved by gradient descent with
/// Barzilai–Borwein steps and Armijo backtracking. Singular inputs are mixed
/// with `I/d` at weight `opts.regularization` first.
pub fn variational_q(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    p: f64,
    opts: &VariationalOptions,
) -> Result<VariationalResult> {
    check_range("p", p, p > 0.0 && p < 0.5, "(0, 1/2)")?;
    same_dim(rho, sigma)?;
    let rho_r = faithful(rho, opts.regularization);
    let sigma_r = faithful(sigma, opts.regularization);
    let warm = measured_renyi(&rho_r, &sigma_r, p, &opts.measured)?;
    let d = rho.dim();
    let mut h = HermitianOperator::zeros(d);
    for proj in &warm.optimal_basis {
        let a = proj.trace_product(&rho_r).max(1e-300);
        let b = proj.trace_product(&sigma_r).max(1e-300);
        h = h.add(&proj.scale((1.0 - p) * (b / a).ln()));
    }

    let (mut value, mut grad) = log_objective_and_gradient(&rho_r, &sigma_r, p, &h);
    let mut step = 1.0;
    let mut prev: Option<(HermitianOperator, HermitianOperator)> = None;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it;
        let gnorm2 = grad.trace_product(&grad);
        if gnorm2 < 1e-24 {
            break;
        }
        if let Some((h_prev, g_prev)) = &prev {
            let s = h.sub(h_prev);
            let y = grad.sub(g_prev);
            let sy = s.trace_product(&y);
            if sy > 1e-300 {
                step = (s.trace_product(&s) / sy).clamp(1e-8, 1e4);
            }
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let cand = h.sub(&grad.scale(t));
            let v = log_objective(&rho_r, &sigma_r, p, &cand);
            if v.is_finite() && v <= value - 1e-4 * t * gnorm2 {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        let improvement = value - v;
        prev = Some((h, grad));
        h = cand;
        let (nv, ng) = log_objective_and_gradient(&rho_r, &sigma_r, p, &h);
        value = nv;
        grad = ng;
        debug_assert!((nv - v).abs() < 1e-9);
        if improvement < opts.tolerance {
            break;
        }
    }
    let value = value.exp().min(warm.q_value);
    let g = h.map_spectrum(f64::exp);
    Ok(VariationalResult {
        value,
        g,
        iterations,
    })
}

fn bipartite(rho: &DensityMatrix, dims: [usize; 2]) -> Result<(DensityMatrix, DensityMatrix)> {
    let a = partial_trace(rho, &dims, &[0])?;
    let b = partial_trace(rho, &dims, &[1])?;
    Ok((
        DensityMatrix::from_op_unchecked(a),
        DensityMatrix::from_op_unchecked(b),
    ))
}

/// `I(A;B) = D(ρ_AB ‖ ρ_A ⊗ ρ_B)`, evaluated as `S(A) + S(B) − S(AB)`.
pub fn mutual_info(rho_ab: &DensityMatrix, dims: [usize; 2]) -> Result<f64> {
    let (a, b) = bipartite(rho_ab, dims)?;
    Ok(vn_entropy(&a) + vn_entropy(&b) - vn_entropy(rho_ab))
}

/// `H(A|B) = −D(ρ_AB ‖ I_A ⊗ ρ_B)`, evaluated as `S(AB) − S(B)`.
pub fn cond_entropy(rho_ab: &DensityMatrix, dims: [usize; 2]) -> Result<f64> {
    let (_, b) = bipartite(rho_ab, dims)?;
    Ok(vn_entropy(rho_ab) - vn_entropy(&b))
}

/// Which classical register is conditioned on in [`cond_mutual_info_cq`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pivot {
    /// `I(X;B|U)`.
    U,
    /// `I(U;B|X)`, zero for every joint state since `U − X − B`.
    X,
}

/// Conditional mutual information of the `UXB` reduction of a joint state,
/// computed by the chain rule from two [`mutual_info`] evaluations on the
/// materialized block states.
pub fn cond_mutual_info_cq(omega: &JointState, pivot: Pivot) -> Result<f64> {
    let nx = omega.alphabet_size();
    let du = omega.d_u();
    let db = omega.d_b();
    let xub = omega.omega_xub();
    let joint = mutual_info(&xub, [nx * du, db])?;
    let dims = [nx, du, db];
    let sub = match pivot {
        Pivot::U => DensityMatrix::from_op_unchecked(partial_trace(&xub, &dims, &[1, 2])?),
        Pivot::X => {
            let xb = partial_trace(&xub, &dims, &[0, 2])?;
            DensityMatrix::from_op_unchecked(xb)
        }
    };
    let sub_dims = match pivot {
        Pivot::U => [du, db],
        Pivot::X => [nx, db],
    };
    Ok(joint - mutual_info(&sub, sub_dims)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{tensor_states, CVector};

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_probabilities(p).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!(vn_entropy(&DensityMatrix::basis(3, 1)).abs() < 1e-15);
        assert!((vn_entropy(&DensityMatrix::maximally_mixed(4)) - 4f64.ln()).abs() < 1e-14);
        // h(0.25) = −0.25 ln 0.25 − 0.75 ln 0.75
        let h = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((vn_entropy(&diag(&[0.25, 0.75])) - h).abs() < 1e-14);
        assert!((h - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn relative_entropy_examples() {
        let r = diag(&[0.3, 0.7]);
        assert!(rel_entropy(&r, &r).unwrap().abs() < 1e-14);
        let inf = rel_entropy(&DensityMatrix::basis(2, 0), &DensityMatrix::basis(2, 1)).unwrap();
        assert!(inf.is_infinite());
        let kl = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        let d = rel_entropy(&diag(&[0.5, 0.5]), &diag(&[0.25, 0.75])).unwrap();
        assert!((d - kl).abs() < 1e-14);
        assert!((kl - 0.14384).abs() < 1e-5);
    }

    #[test]
    fn support_test_catches_nonorthogonal_kernel_overlap() {
        // ρ = |+⟩⟨+| is not supported in span{|0⟩} even though ⟨+|σ|+⟩ > 0.
        let mut plus = CVector::zeros(2);
        plus[0] = c(1.0);
        plus[1] = c(1.0);
        let rho = DensityMatrix::pure(&plus).unwrap();
        assert!(rel_entropy(&rho, &DensityMatrix::basis(2, 0)).unwrap().is_infinite());
    }

    #[test]
    fn renyi_examples() {
        let r = diag(&[0.2, 0.3, 0.5]);
        assert!(renyi_rel_entropy(&r, &r, 0.4).unwrap().abs() < 1e-14);
        assert!(renyi_rel_entropy(&r, &r, 1.0).is_err());
        assert!(renyi_rel_entropy(&r, &r, 0.0).is_err());
    }

    #[test]
    fn measured_renyi_identical_states() {
        let r = diag(&[0.2, 0.8]);
        let m = measured_renyi(&r, &r, 0.5, &MeasuredRenyiOptions::default()).unwrap();
        assert!(m.value.abs() < 1e-12);
        assert!(m.converged);
    }

    #[test]
    fn measured_renyi_rejects_singular_sigma() {
        let r = diag(&[0.2, 0.8]);
        let s = diag(&[1.0, 0.0]);
        assert!(matches!(
            measured_renyi(&r, &s, 0.5, &MeasuredRenyiOptions::default()),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn variational_identical_maximally_mixed() {
        let r = DensityMatrix::maximally_mixed(3);
        let v = variational_q(&r, &r, 0.3, &VariationalOptions::default()).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
        let at_identity = variational_objective(&r, &r, 0.3, &HermitianOperator::identity(3)).unwrap();
        assert!((at_identity - 1.0).abs() < 1e-14);
        assert!(variational_q(&r, &r, 0.5, &VariationalOptions::default()).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let prod = tensor_states(&diag(&[0.3, 0.7]), &diag(&[0.6, 0.4]));
        assert!(mutual_info(&prod, [2, 2]).unwrap().abs() < 1e-14);
        let mut psi = CVector::zeros(4);
        psi[0] = c(1.0);
        psi[3] = c(1.0);
        let bell = DensityMatrix::pure(&psi).unwrap();
        assert!((mutual_info(&bell, [2, 2]).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((cond_entropy(&bell, [2, 2]).unwrap() + 2f64.ln()).abs() < 1e-12);
        let a = diag(&[0.3, 0.7]);
        let ce = cond_entropy(&tensor_states(&a, &diag(&[0.5, 0.5])), [2, 2]).unwrap();
        assert!((ce - vn_entropy(&a)).abs() < 1e-14);
        assert!(mutual_info(&bell, [3, 2]).is_err());
    }

    #[test]
    fn binary_entropy_half() {
        assert!((binary_entropy(0.5) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
    }
}
