//! Closed-form converse bounds: the second-order Fano-type inequality, its
//! optimal smoothing time, the per-rate bounds for a degraded broadcast
//! channel, the classical Fano comparison and the strong converse exponent.

use serde::Serialize;

use crate::entropic::binary_entropy;
use crate::error::{check_range, Result};
use crate::region::{CqBroadcastChannel, RegionEnvelope};

fn check_eps_open(eps: f64) -> Result<()> {
    check_range("eps", eps, eps > 0.0 && eps < 1.0, "(0, 1)")
}

fn check_n(n: f64) -> Result<()> {
    check_range("n", n, n >= 1.0, "[1, ∞)")
}

/// `ln(1/(1−ε))`, computed without cancellation for small `ε`.
fn log_inv(eps: f64) -> f64 {
    -(-eps).ln_1p()
}

/// Upper bound on `ln|M|` for codes whose weighted geometric success is at
/// least `1 − ε`:
/// `I + 2√(n d ln(1/(1−ε))) + ln(1/(1−ε))`.
pub fn fano_bound(n: usize, eps: f64, d: usize, mutual_info: f64) -> Result<f64> {
    fano_bound_real(n as f64, eps, d, mutual_info)
}

/// [`fano_bound`] for blocklengths beyond `usize` arithmetic comfort.
pub fn fano_bound_real(n: f64, eps: f64, d: usize, mutual_info: f64) -> Result<f64> {
    check_eps_open(eps)?;
    check_n(n)?;
    let l = log_inv(eps);
    Ok(mutual_info + 2.0 * (n * d as f64 * l).sqrt() + l)
}

/// Minimizer `t* = √(ln(1/(1−ε)) / (d n))` of [`fano_bound_at_t`].
pub fn optimal_t(eps: f64, d: usize, n: usize) -> Result<f64> {
    check_eps_open(eps)?;
    check_n(n as f64)?;
    Ok((log_inv(eps) / (d as f64 * n as f64)).sqrt())
}

/// Bound before optimizing the smoothing time:
/// `I + d n t + (1 + 1/t) ln(1/(1−ε))`.
pub fn fano_bound_at_t(n: usize, eps: f64, d: usize, mutual_info: f64, t: f64) -> Result<f64> {
    check_eps_open(eps)?;
    check_n(n as f64)?;
    check_range("t", t, t > 0.0, "(0, ∞)")?;
    let l = log_inv(eps);
    Ok(mutual_info + d as f64 * n as f64 * t + (1.0 + 1.0 / t) * l)
}

/// Usual Fano form `(I + h(ε)) / (1 − ε)`.
pub fn classical_fano(eps: f64, mutual_info: f64) -> Result<f64> {
    check_range("eps", eps, (0.0..1.0).contains(&eps), "[0, 1)")?;
    Ok((mutual_info + binary_entropy(eps)) / (1.0 - eps))
}

/// Per-channel-use correction `2√((d/n) ln(1/(1−ε))) + (1/n) ln(1/(1−ε))`.
pub fn second_order_correction(n: f64, eps: f64, d: usize) -> Result<f64> {
    check_eps_open(eps)?;
    check_n(n)?;
    let l = log_inv(eps);
    Ok(2.0 * (d as f64 / n * l).sqrt() + l / n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentParams {
    pub mu_star: f64,
    pub gamma: f64,
    pub eta: f64,
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExponentOutcome {
    /// `rb + μ rc ≤ v(μ)` at every grid point.
    InsideRegion { max_gamma: f64 },
    Outside(ExponentParams),
}

/// `f = (√((√d_B + √d_C)² + η) − √d_B − √d_C)²`, the positive root of the
/// quadratic in the proof of the exponential strong converse, squared.
pub fn exponent_f(eta: f64, d_b: usize, d_c: usize) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    let s = (d_b as f64).sqrt() + (d_c as f64).sqrt();
    // (√(s² + η) − s)² = η² / (√(s² + η) + s)², stable for small η
    let root = eta / ((s * s + eta).sqrt() + s);
    root * root
}

/// Finds `μ*` maximizing `γ(μ) = rb + μ rc − v(μ)` over the envelope grid and
/// converts a positive `γ` into the exponent `f`.
///
/// Envelope values are witness-based lower bounds on `v`, so `γ` and `f` can
/// only be overestimated; `envelope.certified_lower` records how the values
/// were obtained.
pub fn strong_converse_exponent(rb: f64, rc: f64, d_b: usize, d_c: usize, envelope: &RegionEnvelope) -> ExponentOutcome {
    let (mu_star, gamma) = envelope
        .points
        .iter()
        .map(|p| (p.mu, rb + p.mu * rc - p.value))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if gamma <= 0.0 {
        return ExponentOutcome::InsideRegion { max_gamma: gamma };
    }
    let eta = gamma / (1.0 + mu_star);
    ExponentOutcome::Outside(ExponentParams {
        mu_star,
        gamma,
        eta,
        f: exponent_f(eta, d_b, d_c),
    })
}

/// Lower bound `1 − e^{−n f}` on the maximal error probability.
pub fn error_floor(n: f64, f: f64) -> f64 {
    -(-n * f).exp_m1()
}

/// A common-message rate is carried as extra private rate for the weaker receiver.
pub fn merge_common_rate(common: f64, rc: f64) -> f64 {
    common + rc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleLetter {
    pub i_xb_u: f64,
    pub i_uc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePair {
    pub rb: f64,
    pub rc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: f64,
    pub epsilon: f64,
    pub d_b: usize,
    pub d_c: usize,
    pub single_letter: SingleLetter,
    pub rb_bound: f64,
    pub rc_bound: f64,
    /// Set when the envelope came from the exhaustive classical grid.
    pub certified_lower: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rates: Option<RatePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentOutcome>,
    /// `1 − e^{−n f}` when the rate pair lies outside the region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_floor: Option<f64>,
}

/// Second-order rate bounds at blocklength `n` and maximal error `ε`.
pub fn second_order_bounds(n: f64, eps: f64, ch: &CqBroadcastChannel, envelope: &RegionEnvelope) -> Result<BoundReport> {
    let d_b = ch.d_b();
    let d_c = ch.d_c();
    let rb_bound = envelope.max_i_xb_u + second_order_correction(n, eps, d_b)?;
    let rc_bound = envelope.max_i_uc + second_order_correction(n, eps, d_c)?;
    Ok(BoundReport {
        n,
        epsilon: eps,
        d_b,
        d_c,
        single_letter: SingleLetter {
            i_xb_u: envelope.max_i_xb_u,
            i_uc: envelope.max_i_uc,
        },
        rb_bound,
        rc_bound,
        certified_lower: envelope.certified_lower,
        rates: None,
        exponent: None,
        error_floor: None,
    })
}

impl BoundReport {
    /// Attaches the exponent analysis for a rate pair.
    pub fn with_rates(mut self, rb: f64, rc: f64, envelope: &RegionEnvelope) -> Self {
        let outcome = strong_converse_exponent(rb, rc, self.d_b, self.d_c, envelope);
        if let ExponentOutcome::Outside(p) = &outcome {
            self.error_floor = Some(error_floor(self.n, p.f));
        }
        self.rates = Some(RatePair { rb, rc });
        self.exponent = Some(outcome);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DensityMatrix;
    use crate::region::{LagrangePoint, RegionSolver, RegionOptions};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn fano_examples() {
        let b = fano_bound(1, 0.5, 2, 0.0).unwrap();
        assert!((b - (2.0 * (2.0 * LN2).sqrt() + LN2)).abs() < 1e-14);
        assert!((b - 3.0479).abs() < 1e-4);
        assert!((fano_bound(10, 1e-12, 3, 1.5).unwrap() - 1.5).abs() < 1e-4);
        assert!(fano_bound(1, 0.0, 2, 0.0).is_err());
        assert!(fano_bound(1, 1.0, 2, 0.0).is_err());
    }

    #[test]
    fn fano_is_monotone() {
        let mut last = 0.0;
        for n in 1..20 {
            let v = fano_bound(n, 0.3, 2, 0.0).unwrap();
            assert!(v > last);
            last = v;
        }
        assert!(fano_bound(3, 0.3, 4, 0.0).unwrap() > fano_bound(3, 0.3, 2, 0.0).unwrap());
        assert!(fano_bound(3, 0.6, 2, 0.0).unwrap() > fano_bound(3, 0.3, 2, 0.0).unwrap());
    }

    #[test]
    fn optimal_time_examples() {
        let eps = 1.0 - (-1.0f64).exp();
        assert!((optimal_t(eps, 1, 1).unwrap() - 1.0).abs() < 1e-14);
        assert!((optimal_t(eps, 4, 4).unwrap() - 0.25).abs() < 1e-14);
        for (eps, d, n) in [(0.1, 2, 5), (0.7, 3, 1), (0.01, 4, 100)] {
            let t = optimal_t(eps, d, n).unwrap();
            let at = fano_bound_at_t(n, eps, d, 0.4, t).unwrap();
            assert!((at - fano_bound(n, eps, d, 0.4).unwrap()).abs() < 1e-12);
            assert!(fano_bound_at_t(n, eps, d, 0.4, 1.3 * t).unwrap() >= at);
        }
    }

    #[test]
    fn classical_fano_examples() {
        assert_eq!(classical_fano(0.0, 0.7).unwrap(), 0.7);
        assert!((classical_fano(0.5, 0.0).unwrap() - 2.0 * LN2).abs() < 1e-14);
        assert!(classical_fano(1.0, 0.0).is_err());
        // for long blocks the second-order bound beats the 1/(1−ε) blow-up
        let eps = 0.5;
        let mi = |n: usize| 0.6 * n as f64;
        let n = 1000;
        assert!(fano_bound(n, eps, 2, mi(n)).unwrap() < classical_fano(eps, mi(n)).unwrap());
    }

    #[test]
    fn exponent_examples() {
        let f = exponent_f(1.0, 2, 2);
        let expect = (3.0 - 2.0 * 2f64.sqrt()).powi(2);
        assert!((f - expect).abs() < 1e-15);
        assert!((f - 0.0294372515).abs() < 1e-10);
        assert_eq!(exponent_f(0.0, 2, 2), 0.0);
        assert!(exponent_f(1e-9, 2, 2) < 1e-18);
        let mut last = 0.0;
        for k in 1..=50 {
            let v = exponent_f(k as f64 * 0.1, 2, 3);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn quadratic_holds_with_equality_at_the_floor() {
        let (db, dc, n, mu, gamma) = (2.0f64, 3.0f64, 7.0f64, 0.4f64, 0.9f64);
        let f = exponent_f(gamma / (1.0 + mu), 2, 3);
        let eps = error_floor(n, f);
        let x = (-(1.0 - eps).ln()).sqrt();
        let q = (1.0 + mu) * x * x + 2.0 * (1.0 + mu) * ((n * db).sqrt() + (n * dc).sqrt()) * x - n * gamma;
        assert!(q.abs() < 1e-9, "{q}");
    }

    fn flat_envelope(v: f64, i_b: f64, i_c: f64) -> RegionEnvelope {
        let w = RegionSolver::new(
            &CqBroadcastChannel::noiseless_bit(),
            RegionOptions { starts: 0, ..RegionOptions::default() },
        )
        .f_of_t(0.0)
        .unwrap()
        .witness;
        RegionEnvelope {
            points: crate::region::default_mu_grid()
                .into_iter()
                .map(|mu| LagrangePoint {
                    mu,
                    value: v + mu * i_c,
                    i_xb_u: i_b,
                    i_uc: i_c,
                    witness: w.clone(),
                })
                .collect(),
            max_i_xb_u: i_b,
            max_i_uc: i_c,
            certified_lower: false,
        }
    }

    #[test]
    fn second_order_bound_examples() {
        let ch = CqBroadcastChannel::noiseless_bit();
        let env = flat_envelope(LN2, LN2, LN2);
        let r = second_order_bounds(100.0, 0.1, &ch, &env).unwrap();
        let l = (10.0f64 / 9.0).ln();
        let expect = LN2 + 2.0 * (0.02 * l).sqrt() + 0.01 * l;
        assert!((r.rb_bound - expect).abs() < 1e-14);
        // shares one formula with the Fano-type bound
        let via_fano = fano_bound(100, 0.1, 2, 100.0 * LN2).unwrap() / 100.0;
        assert!((r.rb_bound - via_fano).abs() < 1e-13);
        let big = second_order_bounds(1e9, 0.1, &ch, &env).unwrap();
        assert!(big.rb_bound - LN2 < 1e-3 && big.rc_bound - LN2 < 1e-3);

        let useless = CqBroadcastChannel::constant(DensityMatrix::maximally_mixed(4), 2, 2, 2).unwrap();
        let zero = flat_envelope(0.0, 0.0, 0.0);
        let r = second_order_bounds(10.0, 0.2, &useless, &zero).unwrap();
        assert!((r.rb_bound - second_order_correction(10.0, 0.2, 2).unwrap()).abs() < 1e-15);
        assert!(second_order_bounds(10.0, 1.0, &useless, &zero).is_err());
    }

    #[test]
    fn exponent_inside_and_outside() {
        let env = flat_envelope(LN2, LN2, LN2);
        assert!(matches!(
            strong_converse_exponent(0.3, 0.2, 2, 2, &env),
            ExponentOutcome::InsideRegion { .. }
        ));
        match strong_converse_exponent(LN2 + 0.3, 0.0, 2, 2, &env) {
            ExponentOutcome::Outside(p) => {
                assert_eq!(p.mu_star, 0.0);
                assert!((p.gamma - 0.3).abs() < 1e-14 && (p.eta - 0.3).abs() < 1e-14);
                assert!(p.f > 0.0);
                let f1 = error_floor(1.0, p.f);
                assert!(f1 > 0.0 && f1 < 1.0 && error_floor(5.0, p.f) > f1);
            }
            other => panic!("expected outside, got {other:?}"),
        }
        assert_eq!(merge_common_rate(0.1, 0.2), 0.1 + 0.2);
    }
}
