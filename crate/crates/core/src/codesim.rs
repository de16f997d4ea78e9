//! Finite-blocklength broadcast codes: error criteria, square-root decoding,
//! code mutual information and the desk-scale audits of the converse bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::converse::{error_floor, fano_bound, strong_converse_exponent, ExponentOutcome};
use crate::entropic::{rel_entropy, vn_entropy};
use crate::error::{Error, Result};
use crate::operator::{
    c, check_distribution, matrix_power, permute_factors, tensor_all, CMatrix, CVector, DensityMatrix,
    HermitianOperator, Povm, QuantumChannel, CLIP, TRACE_TOL,
};
use crate::random::{haar_unitary, rng, shard_seed, SuiteRng};
use crate::region::{CqBroadcastChannel, RegionEnvelope, OPTIMIZER_TOL};

/// Largest blocklength handled densely.
pub const MAX_BLOCKLENGTH: usize = 6;
/// Largest Hilbert-space dimension handled densely.
pub const MAX_DENSE_DIM: usize = 64;
/// Largest codeword-table count enumerated exhaustively.
pub const EXHAUSTIVE_TABLES: usize = 4096;
/// Slack tolerance on the Fano-type inequality.
pub const FANO_SLACK_TOL: f64 = 1e-9;
/// Improvement steps of the projective local-search decoder.
pub const LOCAL_SEARCH_STEPS: usize = 200;

fn check_size(n: usize, d: usize) -> Result<usize> {
    if n == 0 || n > MAX_BLOCKLENGTH {
        return Err(Error::SizeLimit(format!("blocklength {n} outside 1..={MAX_BLOCKLENGTH}")));
    }
    let dim = d.checked_pow(n as u32).filter(|&v| v <= MAX_DENSE_DIM);
    dim.ok_or_else(|| Error::SizeLimit(format!("{d}^{n} exceeds the dense limit {MAX_DENSE_DIM}")))
}

/// Encoder table `(m, k) ↦ x^n(m, k)` with a distribution `q` on `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BroadcastCode {
    pub n: usize,
    pub m_size: usize,
    pub k_size: usize,
    /// Row `m * k_size + k` holds `x^n(m, k)`.
    pub codewords: Vec<Vec<usize>>,
    pub q: Vec<f64>,
}

impl BroadcastCode {
    pub fn new(n: usize, m_size: usize, k_size: usize, codewords: Vec<Vec<usize>>, q: Vec<f64>, alphabet: usize) -> Result<Self> {
        if n == 0 || m_size == 0 || k_size == 0 {
            return Err(Error::Malformed("blocklength and message sets must be nonempty".into()));
        }
        if codewords.len() != m_size * k_size {
            return Err(Error::Malformed(format!(
                "{} codewords for {m_size}×{k_size} messages",
                codewords.len()
            )));
        }
        for w in &codewords {
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: w.len() });
            }
            if let Some(&x) = w.iter().find(|&&x| x >= alphabet) {
                return Err(Error::Malformed(format!("symbol {x} outside alphabet of size {alphabet}")));
            }
        }
        if q.len() != k_size {
            return Err(Error::DimensionMismatch { expected: k_size, got: q.len() });
        }
        check_distribution(&q, TRACE_TOL)?;
        Ok(Self { n, m_size, k_size, codewords, q })
    }

    /// Code with uniform `q`, as used for broadcast transmission.
    pub fn uniform(n: usize, m_size: usize, k_size: usize, codewords: Vec<Vec<usize>>, alphabet: usize) -> Result<Self> {
        Self::new(n, m_size, k_size, codewords, vec![1.0 / k_size as f64; k_size], alphabet)
    }

    pub fn codeword(&self, m: usize, k: usize) -> &[usize] {
        &self.codewords[m * self.k_size + k]
    }

    /// Weight `q(k) / |M|` of the pair `(m, k)`.
    pub fn weight(&self, _m: usize, k: usize) -> f64 {
        self.q[k] / self.m_size as f64
    }

    pub fn rate_b(&self) -> f64 {
        (self.m_size as f64).ln() / self.n as f64
    }

    pub fn rate_c(&self) -> f64 {
        (self.k_size as f64).ln() / self.n as f64
    }
}

/// `⊗_i ρ^{x_i}`.
pub fn product_state(states: &[DensityMatrix], word: &[usize]) -> DensityMatrix {
    let ops: Vec<&HermitianOperator> = word.iter().map(|&x| states[x].as_operator()).collect();
    DensityMatrix::from_op_unchecked(tensor_all(&ops))
}

#[derive(Clone, Debug)]
pub struct DecoderPair {
    pub pi_b: Povm,
    pub pi_c: Povm,
}

/// Square-root measurement `Π_m = S^{-1/2} w_m ρ_m S^{-1/2}` with
/// `S = ∑ w_m ρ_m`; the part of the identity outside `supp S` is shared
/// equally so the elements sum to the identity.
pub fn pgm_decoder(states: &[DensityMatrix], weights: &[f64]) -> Result<Povm> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(Error::Malformed("one weight per state required".into()));
    }
    let d = states[0].dim();
    let mut s = CMatrix::zeros(d, d);
    for (w, r) in weights.iter().zip(states) {
        if r.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: r.dim() });
        }
        s += r.matrix() * c(*w);
    }
    let s = HermitianOperator::from_matrix_unchecked(s);
    let eig = s.eigh();
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cut = CLIP.max(top * 1e-12);
    let inv_root = eig.reconstruct(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let support = eig.reconstruct(|l| if l > cut { 1.0 } else { 0.0 });
    let rest = HermitianOperator::identity(d).sub(&support).scale(1.0 / states.len() as f64);
    let elements = weights
        .iter()
        .zip(states)
        .map(|(w, r)| r.sandwich(&inv_root).scale(*w).add(&rest))
        .collect();
    Povm::new(elements)
}

/// Per-(m,k) success probabilities with the weights `q(k)/|M|`.
fn criteria(success: &[f64], weights: &[f64]) -> CriterionTriple {
    let min = success.iter().copied().fold(f64::INFINITY, f64::min);
    let avg: f64 = success.iter().zip(weights).map(|(s, w)| s * w).sum();
    let geo = if success.iter().zip(weights).any(|(s, w)| *s <= 0.0 && *w > 0.0) {
        0.0
    } else {
        success
            .iter()
            .zip(weights)
            .map(|(s, w)| w * s.ln())
            .sum::<f64>()
            .exp()
    };
    CriterionTriple { min, geo, avg }
}

/// Worst-case, geometric-mean and average success of one side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriterionTriple {
    pub min: f64,
    pub geo: f64,
    pub avg: f64,
}

impl CriterionTriple {
    /// `min ≤ geo ≤ avg` up to `tol`.
    pub fn ordered(&self, tol: f64) -> bool {
        self.min <= self.geo + tol && self.geo <= self.avg + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorStats {
    pub p_max: f64,
    pub p_avg: f64,
    /// `∏ Tr[ρ_{B^n}^{x^n(m,k)} Π^m]^{q(k)/|M|}`.
    pub geo_avg_success: f64,
    pub b: CriterionTriple,
    pub c: CriterionTriple,
    pub joint: CriterionTriple,
}

impl ErrorStats {
    /// Ordering on all three sides plus the marginal-versus-joint bound.
    pub fn consistent(&self, tol: f64) -> bool {
        self.b.ordered(tol)
            && self.c.ordered(tol)
            && self.joint.ordered(tol)
            && self.b.min + tol >= self.joint.min
            && self.c.min + tol >= self.joint.min
    }
}

/// B-side success `Tr[ρ_{B^n}^{x^n(m,k)} Π^m]` for every `(m, k)`.
pub fn b_success(ch_b: &[DensityMatrix], code: &BroadcastCode, pi_b: &Povm) -> Result<Vec<f64>> {
    let d = ch_b[0].dim();
    let dim = check_size(code.n, d)?;
    if pi_b.len() != code.m_size || pi_b.dim() != dim {
        return Err(Error::DimensionMismatch { expected: code.m_size, got: pi_b.len() });
    }
    let mut out = Vec::with_capacity(code.m_size * code.k_size);
    for m in 0..code.m_size {
        for k in 0..code.k_size {
            out.push(product_state(ch_b, code.codeword(m, k)).trace_product(&pi_b.elements()[m]));
        }
    }
    Ok(out)
}

/// C-side success `Tr[ρ_{C^n}^{x^n(m,k)} Π^k]` for every `(m, k)`.
pub fn c_success(ch_c: &[DensityMatrix], code: &BroadcastCode, pi_c: &Povm) -> Result<Vec<f64>> {
    let d = ch_c[0].dim();
    let dim = check_size(code.n, d)?;
    if pi_c.len() != code.k_size || pi_c.dim() != dim {
        return Err(Error::DimensionMismatch { expected: code.k_size, got: pi_c.len() });
    }
    let mut out = Vec::with_capacity(code.m_size * code.k_size);
    for m in 0..code.m_size {
        for k in 0..code.k_size {
            out.push(product_state(ch_c, code.codeword(m, k)).trace_product(&pi_c.elements()[k]));
        }
    }
    Ok(out)
}

fn joint_success(ch: &CqBroadcastChannel, code: &BroadcastCode, dec: &DecoderPair, b: &[f64]) -> Result<Vec<f64>> {
    if code.k_size == 1 {
        // the C decoder is then the trivial measurement {I}
        return Ok(b.to_vec());
    }
    let n = code.n;
    let (db, dc) = (ch.d_b(), ch.d_c());
    check_size(n, db * dc)?;
    let dims: Vec<usize> = (0..n).flat_map(|_| [db, dc]).collect();
    // B1 C1 B2 C2 … → B1 … Bn C1 … Cn
    let perm: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    let mut out = Vec::with_capacity(code.m_size * code.k_size);
    for m in 0..code.m_size {
        for k in 0..code.k_size {
            let rho = product_state(ch.states(), code.codeword(m, k));
            let rho = permute_factors(&rho, &dims, &perm)?;
            let pi = crate::operator::tensor(&dec.pi_b.elements()[m], &dec.pi_c.elements()[k]);
            out.push(rho.trace_product(&pi));
        }
    }
    Ok(out)
}

/// Error probabilities of a broadcast code under all three criteria.
pub fn error_stats(ch: &CqBroadcastChannel, code: &BroadcastCode, dec: &DecoderPair) -> Result<ErrorStats> {
    let weights: Vec<f64> = (0..code.m_size)
        .flat_map(|m| (0..code.k_size).map(move |k| (m, k)))
        .map(|(m, k)| code.weight(m, k))
        .collect();
    let sb = b_success(ch.b_states(), code, &dec.pi_b)?;
    let sc = c_success(ch.c_states(), code, &dec.pi_c)?;
    let sj = joint_success(ch, code, dec, &sb)?;
    let b = criteria(&sb, &weights);
    let joint = criteria(&sj, &weights);
    Ok(ErrorStats {
        p_max: 1.0 - joint.min,
        p_avg: 1.0 - joint.avg,
        geo_avg_success: b.geo,
        b,
        c: criteria(&sc, &weights),
        joint,
    })
}

/// Block state `ρ_{MKB^n}` of a code on one receiver.
#[derive(Clone, Debug)]
pub struct CodeStateEnsemble {
    pub m_size: usize,
    pub k_size: usize,
    pub q: Vec<f64>,
    /// Row `m * k_size + k` holds `ρ^{x^n(m,k)}`.
    pub codeword_states: Vec<DensityMatrix>,
}

impl CodeStateEnsemble {
    pub fn new(states: &[DensityMatrix], code: &BroadcastCode) -> Result<Self> {
        check_size(code.n, states[0].dim())?;
        Ok(Self {
            m_size: code.m_size,
            k_size: code.k_size,
            q: code.q.clone(),
            codeword_states: code.codewords.iter().map(|w| product_state(states, w)).collect(),
        })
    }

    fn mix(&self, pairs: impl Iterator<Item = (f64, usize)>) -> DensityMatrix {
        let d = self.codeword_states[0].dim();
        let mut acc = CMatrix::zeros(d, d);
        for (w, idx) in pairs {
            acc += self.codeword_states[idx].matrix() * c(w);
        }
        DensityMatrix::from_op_unchecked(HermitianOperator::from_matrix_unchecked(acc))
    }

    /// `ρ^m = ∑_k q(k) ρ^{x^n(m,k)}`.
    pub fn message_states(&self) -> Vec<DensityMatrix> {
        (0..self.m_size)
            .map(|m| self.mix((0..self.k_size).map(|k| (self.q[k], m * self.k_size + k))))
            .collect()
    }

    /// `ρ^k = (1/|M|) ∑_m ρ^{x^n(m,k)}`.
    pub fn side_states(&self) -> Vec<DensityMatrix> {
        let inv = 1.0 / self.m_size as f64;
        (0..self.k_size)
            .map(|k| self.mix((0..self.m_size).map(|m| (inv, m * self.k_size + k))))
            .collect()
    }
}

fn block_mutual_info(weights: &[f64], states: &[DensityMatrix]) -> f64 {
    let d = states[0].dim();
    let mut acc = CMatrix::zeros(d, d);
    let mut cond = 0.0;
    for (w, s) in weights.iter().zip(states) {
        acc += s.matrix() * c(*w);
        cond += w * vn_entropy(s);
    }
    let avg = DensityMatrix::from_op_unchecked(HermitianOperator::from_matrix_unchecked(acc));
    (vn_entropy(&avg) - cond).max(0.0)
}

/// `I(M;B^n) = S(ρ_{B^n}) − (1/|M|) ∑_m S(ρ^m)`.
pub fn code_mutual_info(ens: &CodeStateEnsemble) -> f64 {
    let w = vec![1.0 / ens.m_size as f64; ens.m_size];
    block_mutual_info(&w, &ens.message_states())
}

/// `(1/|M|) ∑_m D(ρ^m ‖ ρ_{B^n})`, equal to [`code_mutual_info`].
pub fn code_mutual_info_divergence(ens: &CodeStateEnsemble) -> Result<f64> {
    let msgs = ens.message_states();
    let w = vec![1.0 / ens.m_size as f64; ens.m_size];
    let avg = DensityMatrix::mixture(&w, &msgs)?;
    let mut acc = 0.0;
    for m in &msgs {
        acc += rel_entropy(m, &avg)? / ens.m_size as f64;
    }
    Ok(acc)
}

/// `I(K;C^n)` with `K ~ q` and `M` uniform.
pub fn side_mutual_info(ens: &CodeStateEnsemble) -> f64 {
    block_mutual_info(&ens.q, &ens.side_states())
}

// ---------------------------------------------------------------------------
// Decoders for the audits
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderStrategy {
    Pgm,
    /// Projective decoder improved by random Givens rotations and reassignments.
    LocalSearch,
}

/// Square-root decoders on both sides: `Π_B` for `ρ^m` with weights `1/|M|`,
/// `Π_C` for `ρ^k` with weights `q(k)`.
pub fn pgm_pair(ch: &CqBroadcastChannel, code: &BroadcastCode) -> Result<DecoderPair> {
    let eb = CodeStateEnsemble::new(ch.b_states(), code)?;
    let ec = CodeStateEnsemble::new(ch.c_states(), code)?;
    Ok(DecoderPair {
        pi_b: pgm_decoder(&eb.message_states(), &vec![1.0 / code.m_size as f64; code.m_size])?,
        pi_c: pgm_decoder(&ec.side_states(), &code.q)?,
    })
}

/// `∑ w ln s`; the log of the weighted geometric mean.
fn log_geo(success: &[f64], weights: &[f64]) -> f64 {
    success
        .iter()
        .zip(weights)
        .map(|(s, w)| if *w > 0.0 { w * s.max(0.0).ln() } else { 0.0 })
        .sum()
}

/// Projective B-side decoder maximizing the weighted geometric success by
/// local search, seeded from the eigenbasis of the square-root measurement.
pub fn local_search_decoder(ch_b: &[DensityMatrix], code: &BroadcastCode, steps: usize, rng: &mut SuiteRng) -> Result<Povm> {
    let d = check_size(code.n, ch_b[0].dim())?;
    let states: Vec<DensityMatrix> = code.codewords.iter().map(|w| product_state(ch_b, w)).collect();
    let owner: Vec<usize> = (0..code.m_size).flat_map(|m| std::iter::repeat_n(m, code.k_size)).collect();
    let weights: Vec<f64> = (0..code.m_size)
        .flat_map(|m| (0..code.k_size).map(move |k| (m, k)))
        .map(|(m, k)| code.weight(m, k))
        .collect();

    // basis from a generic combination of the PGM elements
    let ens = CodeStateEnsemble::new(ch_b, code)?;
    let pgm = pgm_decoder(&ens.message_states(), &vec![1.0 / code.m_size as f64; code.m_size])?;
    let mut mix = HermitianOperator::zeros(d);
    for (m, e) in pgm.elements().iter().enumerate() {
        mix = mix.add(&e.scale(1.0 + m as f64 * 0.618_033_988_7));
    }
    let eig = mix.eigh();
    let mut basis: CMatrix = eig.vectors.clone();

    let overlaps = |basis: &CMatrix| -> Vec<Vec<f64>> {
        (0..d)
            .map(|j| {
                let v: CVector = basis.column(j).into_owned();
                states.iter().map(|s| s.expectation(&v)).collect()
            })
            .collect()
    };
    let score = |ov: &[Vec<f64>], assign: &[usize]| -> f64 {
        let mut succ = vec![0.0; states.len()];
        for (j, row) in ov.iter().enumerate() {
            for (idx, s) in succ.iter_mut().enumerate() {
                if owner[idx] == assign[j] {
                    *s += row[idx];
                }
            }
        }
        log_geo(&succ, &weights)
    };
    let best_assign = |ov: &[Vec<f64>]| -> Vec<usize> {
        // give each vector to the message whose codewords it overlaps most
        ov.iter()
            .map(|row| {
                (0..code.m_size)
                    .max_by(|&a, &b| {
                        let sa: f64 = (0..code.k_size).map(|k| row[a * code.k_size + k]).sum();
                        let sb: f64 = (0..code.k_size).map(|k| row[b * code.k_size + k]).sum();
                        sa.total_cmp(&sb)
                    })
                    .unwrap_or(0)
            })
            .collect()
    };
    let mut ov = overlaps(&basis);
    let mut assign = best_assign(&ov);
    let mut best = score(&ov, &assign);
    for step in 0..steps {
        if step % 4 == 3 {
            let j = rng.random_range(0..d);
            let m = rng.random_range(0..code.m_size);
            let old = assign[j];
            assign[j] = m;
            let s = score(&ov, &assign);
            if s > best {
                best = s;
            } else {
                assign[j] = old;
            }
            continue;
        }
        if d < 2 {
            continue;
        }
        let i = rng.random_range(0..d);
        let mut j = rng.random_range(0..d - 1);
        if j >= i {
            j += 1;
        }
        let scale = 0.5 / (1.0 + step as f64 / 50.0);
        let theta = rng.random_range(-scale..scale);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let (ct, st) = (theta.cos(), theta.sin());
        let e = crate::operator::C64::from_polar(st, phi);
        let mut trial = basis.clone();
        for r in 0..d {
            let (a, b) = (basis[(r, i)], basis[(r, j)]);
            trial[(r, i)] = a * ct - b * e.conj();
            trial[(r, j)] = a * e + b * ct;
        }
        let mut tov = ov.clone();
        for col in [i, j] {
            let v: CVector = trial.column(col).into_owned();
            tov[col] = states.iter().map(|s| s.expectation(&v)).collect();
        }
        let s = score(&tov, &assign);
        if s > best {
            best = s;
            basis = trial;
            ov = tov;
        }
    }
    let elements = (0..code.m_size)
        .map(|m| {
            let mut p = CMatrix::zeros(d, d);
            for (j, &a) in assign.iter().enumerate() {
                if a == m {
                    let v = basis.column(j);
                    p += v * v.adjoint();
                }
            }
            HermitianOperator::from_matrix_unchecked(p)
        })
        .collect();
    Povm::new(elements)
}

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanoRecord {
    pub codewords: Vec<Vec<usize>>,
    pub decoder: DecoderStrategy,
    pub epsilon: f64,
    /// `ln|M|`
    pub lhs: f64,
    /// Right side of the Fano-type inequality; absent when `ε = 1`.
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    pub criteria: CriterionTriple,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanoAuditReport {
    pub n: usize,
    pub m_size: usize,
    pub k_size: usize,
    pub exhaustive: bool,
    pub codes_checked: usize,
    pub violations: usize,
    pub ordering_violations: usize,
    pub min_slack: f64,
    pub records: Vec<FanoRecord>,
}

fn table_from_index(mut idx: usize, alphabet: usize, rows: usize, n: usize) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0; n]; rows];
    for row in table.iter_mut() {
        for x in row.iter_mut() {
            *x = idx % alphabet;
            idx /= alphabet;
        }
    }
    table
}

/// Checks `ln|M| ≤ I(M;B^n) + 2√(n d_B ln(1/(1−ε))) + ln(1/(1−ε))` with
/// `1 − ε` the weighted geometric success, for every codeword table (or a
/// seeded sample when there are more than [`EXHAUSTIVE_TABLES`]).
pub fn fano_audit(
    ch_b: &[DensityMatrix],
    n: usize,
    m_size: usize,
    k_size: usize,
    strategies: &[DecoderStrategy],
    seed: u64,
) -> Result<FanoAuditReport> {
    let alphabet = ch_b.len();
    let d = ch_b[0].dim();
    check_size(n, d)?;
    let rows = m_size * k_size;
    let total = (alphabet as f64).powi((n * rows) as i32);
    let exhaustive = total <= EXHAUSTIVE_TABLES as f64;
    let count = if exhaustive { total as usize } else { EXHAUSTIVE_TABLES };
    let records: Vec<Vec<FanoRecord>> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<Vec<FanoRecord>> {
            let mut r = rng(shard_seed(seed, 0xFA70, i as u64));
            let table = if exhaustive {
                table_from_index(i, alphabet, rows, n)
            } else {
                (0..rows).map(|_| (0..n).map(|_| r.random_range(0..alphabet)).collect()).collect()
            };
            let code = BroadcastCode::uniform(n, m_size, k_size, table, alphabet)?;
            let ens = CodeStateEnsemble::new(ch_b, &code)?;
            let mi = code_mutual_info(&ens);
            let weights: Vec<f64> = (0..rows).map(|idx| code.weight(idx / k_size, idx % k_size)).collect();
            strategies
                .iter()
                .map(|&strategy| {
                    let pi = match strategy {
                        DecoderStrategy::Pgm => pgm_decoder(&ens.message_states(), &vec![1.0 / m_size as f64; m_size])?,
                        DecoderStrategy::LocalSearch => local_search_decoder(ch_b, &code, LOCAL_SEARCH_STEPS, &mut r)?,
                    };
                    let succ = b_success(ch_b, &code, &pi)?;
                    let crit = criteria(&succ, &weights);
                    let eps = (1.0 - crit.geo).max(0.0);
                    let lhs = (m_size as f64).ln();
                    let rhs = if crit.geo <= 0.0 {
                        None
                    } else if eps <= 1e-15 {
                        // zero-error limit: both correction terms vanish
                        Some(mi)
                    } else {
                        Some(fano_bound(n, eps, d, mi)?)
                    };
                    Ok(FanoRecord {
                        codewords: code.codewords.clone(),
                        decoder: strategy,
                        epsilon: eps,
                        lhs,
                        slack: rhs.map(|v| v - lhs),
                        rhs,
                        criteria: crit,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<FanoRecord> = records.into_iter().flatten().collect();
    let violations = records.iter().filter(|r| r.slack.is_some_and(|s| s < -FANO_SLACK_TOL)).count();
    let ordering_violations = records.iter().filter(|r| !r.criteria.ordered(1e-12)).count();
    let min_slack = records.iter().filter_map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(FanoAuditReport {
        n,
        m_size,
        k_size,
        exhaustive,
        codes_checked: count,
        violations,
        ordering_violations,
        min_slack,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleLetterRecord {
    pub codewords: Vec<Vec<usize>>,
    pub i_m_bn: f64,
    pub bound_b: f64,
    pub i_k_cn: f64,
    pub bound_c: f64,
    pub holds: bool,
}

/// `I(M;B^n) ≤ n sup I(X;B|U) + tol` and `I(K;C^n) ≤ n sup I(U;C) + tol`.
pub fn single_letter_audit(ch: &CqBroadcastChannel, code: &BroadcastCode, envelope: &RegionEnvelope) -> Result<SingleLetterRecord> {
    let eb = CodeStateEnsemble::new(ch.b_states(), code)?;
    let ec = CodeStateEnsemble::new(ch.c_states(), code)?;
    let n = code.n as f64;
    let i_m_bn = code_mutual_info(&eb);
    let i_k_cn = side_mutual_info(&ec);
    let bound_b = n * envelope.max_i_xb_u;
    let bound_c = n * envelope.max_i_uc;
    Ok(SingleLetterRecord {
        codewords: code.codewords.clone(),
        holds: i_m_bn <= bound_b + OPTIMIZER_TOL && i_k_cn <= bound_c + OPTIMIZER_TOL,
        i_m_bn,
        bound_b,
        i_k_cn,
        bound_c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongConverseRow {
    pub n: usize,
    pub m_size: usize,
    pub k_size: usize,
    pub candidates: usize,
    /// Largest `1 − p_max` found.
    pub best_success: f64,
    /// `e^{−n f}`
    pub bound: f64,
    pub holds: bool,
    pub ordering_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongConverseReport {
    pub rb: f64,
    pub rc: f64,
    pub exponent: ExponentOutcome,
    pub rows: Vec<StrongConverseRow>,
    pub violations: usize,
}

/// Success `1 − p_max` of a code under square-root decoding together with
/// the criterion-ordering verdict.
///
/// Without a second message (`|K| = 1`) the C decoder is trivial and the
/// joint criterion equals the B one, so only the B side is evaluated from
/// the factors `ρ = VV†` in `cache` (indexed by the word read in base
/// `|X|`): `Tr[ρ_m Π_m] = w_m ‖V_m† S^{-1/2} V_m‖²_F`.
fn pgm_min_success(ch: &CqBroadcastChannel, code: &BroadcastCode, cache: Option<&[CMatrix]>) -> Result<(f64, bool)> {
    match cache {
        Some(words) if code.k_size == 1 => {
            let a = ch.alphabet_size();
            let factors: Vec<&CMatrix> = code
                .codewords
                .iter()
                .map(|w| &words[w.iter().fold(0, |acc, &x| acc * a + x)])
                .collect();
            let w = 1.0 / code.m_size as f64;
            let d = factors[0].nrows();
            let mut s = CMatrix::zeros(d, d);
            for v in &factors {
                s += *v * v.adjoint() * c(w);
            }
            let eig = HermitianOperator::from_matrix_unchecked(s).eigh();
            let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
            let cut = CLIP.max(top * 1e-12);
            let inv_root = eig.reconstruct(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
            let succ: Vec<f64> = factors
                .iter()
                .map(|v| w * (v.adjoint() * inv_root.matrix() * *v).norm_squared())
                .collect();
            let crit = criteria(&succ, &vec![w; code.m_size]);
            Ok((crit.min, crit.ordered(1e-12)))
        }
        _ => {
            let dec = pgm_pair(ch, code)?;
            let stats = error_stats(ch, code, &dec)?;
            Ok((stats.joint.min, stats.consistent(1e-12)))
        }
    }
}

/// `V` with `ρ = VV†`, keeping eigenvalues above the clip threshold.
fn state_factor(rho: &DensityMatrix) -> CMatrix {
    let eig = rho.eigh();
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > CLIP).collect();
    let mut v = CMatrix::zeros(rho.dim(), keep.len().max(1));
    for (col, &i) in keep.iter().enumerate() {
        v.set_column(col, &(eig.vectors.column(i) * c(eig.values[i].sqrt())));
    }
    v
}

/// Factors of `ρ_B^{x^n}` for every word, in base-`|X|` order.
fn all_word_factors(ch_b: &[DensityMatrix], n: usize) -> Vec<CMatrix> {
    let letters: Vec<CMatrix> = ch_b.iter().map(state_factor).collect();
    let mut words = vec![CMatrix::from_element(1, 1, c(1.0))];
    for _ in 0..n {
        words = words.iter().flat_map(|w| letters.iter().map(move |l| w.kronecker(l))).collect();
    }
    words
}

/// Searches codes at rates `(rb, rc)` for each blocklength and compares the
/// best success found with `e^{−n f}`.
pub fn strong_converse_audit(
    ch: &CqBroadcastChannel,
    rb: f64,
    rc: f64,
    n_list: &[usize],
    budget: usize,
    seed: u64,
    envelope: &RegionEnvelope,
) -> Result<StrongConverseReport> {
    let exponent = strong_converse_exponent(rb, rc, ch.d_b(), ch.d_c(), envelope);
    let f = match &exponent {
        ExponentOutcome::Outside(p) => p.f,
        ExponentOutcome::InsideRegion { .. } => 0.0,
    };
    let alphabet = ch.alphabet_size();
    let mut rows = Vec::new();
    for &n in n_list {
        let m_size = ((n as f64 * rb).exp() - 1e-9).ceil().max(1.0) as usize;
        let k_size = ((n as f64 * rc).exp() - 1e-9).ceil().max(1.0) as usize;
        let rows_needed = m_size * k_size;
        let random_share = budget / 2;
        let cache = (k_size == 1 && alphabet.pow(n as u32) <= EXHAUSTIVE_TABLES)
            .then(|| check_size(n, ch.d_b()).map(|_| all_word_factors(ch.b_states(), n)))
            .transpose()?;
        let evaluate = |table: Vec<Vec<usize>>| -> Result<(f64, bool, Vec<Vec<usize>>)> {
            let code = BroadcastCode::uniform(n, m_size, k_size, table, alphabet)?;
            let (s, ok) = pgm_min_success(ch, &code, cache.as_deref())?;
            Ok((s, ok, code.codewords))
        };
        let random: Vec<(f64, bool, Vec<Vec<usize>>)> = (0..random_share.max(1))
            .into_par_iter()
            .map(|i| {
                let mut r = rng(shard_seed(seed, n as u64, i as u64));
                let table = (0..rows_needed).map(|_| (0..n).map(|_| r.random_range(0..alphabet)).collect()).collect();
                evaluate(table)
            })
            .collect::<Result<_>>()?;
        let mut ordering_ok = random.iter().all(|r| r.1);
        let (mut best, _, mut table) = random
            .into_iter()
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one candidate");
        let mut used = random_share.max(1);
        // greedy single-symbol moves from the best random table
        let mut r = rng(shard_seed(seed, 0x6EED ^ n as u64, 0));
        while used < budget {
            let mut t = table.clone();
            let row = r.random_range(0..rows_needed);
            let pos = r.random_range(0..n);
            t[row][pos] = r.random_range(0..alphabet);
            let (s, ok, t) = evaluate(t)?;
            ordering_ok &= ok;
            used += 1;
            if s > best {
                best = s;
                table = t;
            }
        }
        // a locally improved decoder on the final table
        if k_size == 1 {
            let code = BroadcastCode::uniform(n, m_size, k_size, table.clone(), alphabet)?;
            if let Ok(pi) = local_search_decoder(ch.b_states(), &code, LOCAL_SEARCH_STEPS, &mut r) {
                let s = b_success(ch.b_states(), &code, &pi)?;
                best = best.max(s.iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
        let bound = 1.0 - error_floor(n as f64, f);
        rows.push(StrongConverseRow {
            n,
            m_size,
            k_size,
            candidates: used,
            best_success: best,
            bound,
            holds: best <= bound + 1e-9,
            ordering_ok,
        });
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(StrongConverseReport { rb, rc, exponent, rows, violations })
}

/// `ρ^0 = |0⟩⟨0|`, `ρ^1 = |ψ⟩⟨ψ|` with `|⟨0|ψ⟩|² = overlap`.
pub fn binary_pure_states(overlap: f64) -> Vec<DensityMatrix> {
    let mut psi = CVector::zeros(2);
    psi[0] = c(overlap.sqrt());
    psi[1] = c((1.0 - overlap).sqrt());
    vec![DensityMatrix::basis(2, 0), DensityMatrix::pure(&psi).expect("unit vector")]
}

/// Pure-state qubit channel to `B`, degraded to `C` by depolarizing with
/// strength `lambda`.
pub fn pure_state_dbc(overlap: f64, lambda: f64) -> Result<CqBroadcastChannel> {
    let n = QuantumChannel::depolarizing_to(&DensityMatrix::maximally_mixed(2), lambda)?;
    CqBroadcastChannel::degraded_product(&binary_pure_states(overlap), &n)
}

/// Random codeword table with `rows` rows.
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, rows: usize, n: usize, alphabet: usize) -> Vec<Vec<usize>> {
    (0..rows).map(|_| (0..n).map(|_| rng.random_range(0..alphabet)).collect()).collect()
}

/// Random unitary rotation of every state; keeps channels generic in tests.
pub fn rotate_states<R: Rng + ?Sized>(rng: &mut R, states: &[DensityMatrix]) -> Vec<DensityMatrix> {
    let u = haar_unitary(rng, states[0].dim());
    states
        .iter()
        .map(|s| DensityMatrix::from_op_unchecked(s.conjugate_by(&u)))
        .collect()
}

/// `ρ^{1/2}` helper used by the audits' oracles.
pub fn sqrt_state(rho: &DensityMatrix) -> Result<HermitianOperator> {
    matrix_power(rho, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{region_envelope, RegionOptions};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn perfect_code() {
        let ch = CqBroadcastChannel::noiseless_bit();
        let code = BroadcastCode::uniform(1, 2, 1, vec![vec![0], vec![1]], 2).unwrap();
        let dec = pgm_pair(&ch, &code).unwrap();
        let s = error_stats(&ch, &code, &dec).unwrap();
        assert!(s.p_max.abs() < 1e-12 && s.p_avg.abs() < 1e-12 && (s.geo_avg_success - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_guess_decoder() {
        let ch = pure_state_dbc(0.3, 0.2).unwrap();
        let code = BroadcastCode::uniform(1, 3, 1, vec![vec![0], vec![1], vec![0]], 2).unwrap();
        let guess = Povm::new(vec![HermitianOperator::identity(2).scale(1.0 / 3.0); 3]).unwrap();
        let dec = DecoderPair {
            pi_b: guess,
            pi_c: Povm::new(vec![HermitianOperator::identity(2)]).unwrap(),
        };
        let s = error_stats(&ch, &code, &dec).unwrap();
        assert!((s.geo_avg_success - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.p_max - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_code_criterion_ordering() {
        let ch = pure_state_dbc(0.4, 0.3).unwrap();
        let mut r = rng(12);
        for _ in 0..20 {
            let code = BroadcastCode::uniform(2, 2, 2, random_table(&mut r, 4, 2, 2), 2).unwrap();
            let s = error_stats(&ch, &code, &pgm_pair(&ch, &code).unwrap()).unwrap();
            assert!(s.consistent(1e-12), "{s:?}");
        }
    }

    #[test]
    fn pgm_examples() {
        let states = vec![DensityMatrix::basis(3, 0), DensityMatrix::basis(3, 2)];
        let p = pgm_decoder(&states, &[0.5, 0.5]).unwrap();
        assert!(p.elements()[0].trace_product(&states[0]) > 1.0 - 1e-12);
        let same = vec![DensityMatrix::maximally_mixed(2); 2];
        let p = pgm_decoder(&same, &[0.3, 0.7]).unwrap();
        assert!(p.elements()[0].max_abs_diff(&HermitianOperator::identity(2).scale(0.3)) < 1e-12);
        // two pure qubits with |⟨a|b⟩|² = 0.5: success (1 + √(1 − 0.5))/2 each
        let pure = binary_pure_states(0.5);
        let p = pgm_decoder(&pure, &[0.5, 0.5]).unwrap();
        let expect = 0.5 * (1.0 + (1.0 - 0.5f64).sqrt());
        for (e, s) in p.elements().iter().zip(&pure) {
            assert!((e.trace_product(s) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mutual_info_examples() {
        let ch = binary_pure_states(0.3);
        let same = BroadcastCode::uniform(2, 2, 1, vec![vec![0, 1], vec![0, 1]], 2).unwrap();
        assert!(code_mutual_info(&CodeStateEnsemble::new(&ch, &same).unwrap()).abs() < 1e-12);
        let orth = vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)];
        let code = BroadcastCode::uniform(1, 2, 1, vec![vec![0], vec![1]], 2).unwrap();
        assert!((code_mutual_info(&CodeStateEnsemble::new(&orth, &code).unwrap()) - LN2).abs() < 1e-12);
        let mut r = rng(3);
        let code = BroadcastCode::uniform(2, 3, 2, random_table(&mut r, 6, 2, 2), 2).unwrap();
        let ens = CodeStateEnsemble::new(&ch, &code).unwrap();
        let a = code_mutual_info(&ens);
        assert!((a - code_mutual_info_divergence(&ens).unwrap()).abs() < 1e-10);
        assert!(a <= (3f64).ln().min(2.0 * LN2) + 1e-12);
        assert!(CodeStateEnsemble::new(&ch, &BroadcastCode::uniform(7, 1, 1, vec![vec![0; 7]], 2).unwrap()).is_err());
    }

    #[test]
    fn fano_audit_binary_n1() {
        let rep = fano_audit(&binary_pure_states(0.3), 1, 2, 2, &[DecoderStrategy::Pgm], 1).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.codes_checked, 16);
        assert_eq!(rep.violations, 0);
        let single = fano_audit(&binary_pure_states(0.3), 1, 1, 2, &[DecoderStrategy::Pgm], 1).unwrap();
        assert!(single.min_slack >= 0.0);
    }

    #[test]
    fn slack_shrinks_with_distinguishability() {
        let slack = |overlap: f64| {
            let ch = binary_pure_states(overlap);
            let code = BroadcastCode::uniform(1, 2, 1, vec![vec![0], vec![1]], 2).unwrap();
            let ens = CodeStateEnsemble::new(&ch, &code).unwrap();
            let p = pgm_decoder(&ens.message_states(), &[0.5, 0.5]).unwrap();
            let s = b_success(&ch, &code, &p).unwrap();
            let geo = (s[0] * s[1]).sqrt();
            fano_bound(1, 1.0 - geo, 2, code_mutual_info(&ens)).unwrap() - LN2
        };
        assert!(slack(0.2) < slack(0.6) && slack(0.05) < slack(0.2));
    }

    #[test]
    fn local_search_is_a_projective_povm() {
        let ch = binary_pure_states(0.4);
        let code = BroadcastCode::uniform(2, 2, 1, vec![vec![0, 0], vec![1, 1]], 2).unwrap();
        let p = local_search_decoder(&ch, &code, 100, &mut rng(4)).unwrap();
        for e in p.elements() {
            let sq = HermitianOperator::from_matrix_unchecked(e.matrix() * e.matrix());
            assert!(sq.max_abs_diff(e) < 1e-10);
        }
    }

    #[test]
    fn single_letter_on_noiseless_bit() {
        let ch = CqBroadcastChannel::noiseless_bit();
        let env = region_envelope(&ch, &RegionOptions::default()).unwrap();
        let mut r = rng(5);
        for _ in 0..5 {
            let code = BroadcastCode::uniform(2, 2, 2, random_table(&mut r, 4, 2, 2), 2).unwrap();
            let rec = single_letter_audit(&ch, &code, &env).unwrap();
            assert!(rec.holds && rec.i_m_bn <= 2.0 * LN2 + 1e-12);
        }
    }

    #[test]
    fn over_capacity_audit_small() {
        let ch = pure_state_dbc(0.2, 0.3).unwrap();
        let env = region_envelope(&ch, &RegionOptions::default()).unwrap();
        let rep = strong_converse_audit(&ch, LN2 + 0.3, 0.0, &[1, 2], 60, 9, &env).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(matches!(rep.exponent, ExponentOutcome::Outside(_)));
        for row in &rep.rows {
            // counting bound d^n/|M|
            assert!(row.best_success <= 2f64.powi(row.n as i32) / row.m_size as f64 + 1e-12);
        }
    }
}
