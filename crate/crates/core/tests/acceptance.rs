//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cqbl_core::suites::{
    alt_suite, converse_suite, dpi_suite, fano_suite, region_suite, rhc_suite, CheckStat, SuiteSummary,
};

const SEED: u64 = 2024;

struct Gate {
    failed: usize,
}

impl Gate {
    fn line(&mut self, id: usize, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} [{id}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn stat<'a>(s: &'a SuiteSummary, name: &str) -> Option<&'a CheckStat> {
    s.check(name)
}

/// Check present with at least `count` instances and no violations.
fn clean(s: &SuiteSummary, name: &str, count: usize) -> bool {
    stat(s, name).is_some_and(|c| c.count >= count && c.violations == 0)
}

fn worst(s: &SuiteSummary, name: &str) -> f64 {
    stat(s, name).and_then(|c| c.worst_slack).unwrap_or(f64::NAN)
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };

    let (alt, dt) = timed(|| alt_suite(SEED, 1000).expect("alt suite"));
    gate.line(
        1,
        "ALT suite",
        clean(&alt, "alt", 1000) && clean(&alt, "alt_commuting_equality", 100) && dt < Duration::from_secs(10),
        format!(
            "1000 random + 100 commuting, worst slack {:.3e}, worst equality gap {:.3e}, {:.2?}",
            worst(&alt, "alt"),
            -worst(&alt, "alt_commuting_equality"),
            dt
        ),
    );

    let (rhc, dt) = timed(|| rhc_suite(SEED, 500).expect("rhc suite"));
    gate.line(
        2,
        "reverse hypercontractivity",
        clean(&rhc, "rhc_margin", 1000)
            && clean(&rhc, "positivity_gap", 1000)
            && clean(&rhc, "below_threshold_refused", 500)
            && dt < Duration::from_secs(60),
        format!(
            "500 operators at t* and t*+0.5, worst relative margin {:.3e}, {} sub-threshold refusals, {:.2?}",
            worst(&rhc, "rhc_margin"),
            rhc.precondition_rejections,
            dt
        ),
    );

    let (dpi, dt) = timed(|| dpi_suite(SEED, 500).expect("dpi suite"));
    let oracles = ["oracle_relative_entropy", "oracle_petz_renyi", "oracle_measured_renyi", "oracle_variational_q"];
    gate.line(
        3,
        "divergence oracles",
        oracles.iter().all(|o| clean(&dpi, o, 200))
            && clean(&dpi, "measured_below_petz", 200)
            && clean(&dpi, "dpi_relative_entropy", 500)
            && clean(&dpi, "dpi_petz_renyi", 500),
        format!(
            "oracle errors ≤ {:.1e}, measured-vs-Petz slack ≥ {:.3e}, DPI slack ≥ {:.3e}, {:.2?}",
            oracles.iter().map(|o| -worst(&dpi, o)).fold(0.0, f64::max),
            worst(&dpi, "measured_below_petz"),
            worst(&dpi, "dpi_relative_entropy").min(worst(&dpi, "dpi_petz_renyi")),
            dt
        ),
    );

    let (region, dt) = timed(|| region_suite(SEED).expect("region suite"));
    gate.line(
        4,
        "region oracle",
        clean(&region, "noiseless_bit_boundary", 17)
            && clean(&region, "bsc_cascade_boundary", 17)
            && clean(&region, "noiseless_bit_concavity", 1)
            && clean(&region, "bsc_cascade_concavity", 1)
            && dt < Duration::from_secs(300),
        format!(
            "max error noiseless {:.3e}, cascade {:.3e}, chord deficit ≤ {:.1e}, {:.2?}",
            region.metrics["noiseless_bit_max_error"].as_f64().unwrap_or(f64::NAN),
            region.metrics["bsc_cascade_max_error"].as_f64().unwrap_or(f64::NAN),
            -worst(&region, "noiseless_bit_concavity").min(worst(&region, "bsc_cascade_concavity")),
            dt
        ),
    );

    let (fano, dt) = timed(|| fano_suite(SEED).expect("fano suite"));
    gate.line(
        5,
        "Fano-type audit",
        clean(&fano, "fano_inequality", 1)
            && fano.metrics["exhaustive"].as_bool() == Some(true)
            && dt < Duration::from_secs(300),
        format!(
            "{} codeword tables exhaustive, min slack {:.6}, {:.2?}",
            fano.metrics["codes"],
            fano.metrics["min_slack"].as_f64().unwrap_or(f64::NAN),
            dt
        ),
    );

    let (conv, dt) = timed(|| converse_suite(SEED, 200).expect("converse suite"));
    gate.line(
        6,
        "single-letterization audit",
        clean(&conv, "single_letter_b", 200) && clean(&conv, "single_letter_c", 200),
        format!(
            "200 codes at n = 2, slack B ≥ {:.4}, C ≥ {:.4}",
            worst(&conv, "single_letter_b"),
            worst(&conv, "single_letter_c")
        ),
    );

    gate.line(
        7,
        "exponent formula",
        clean(&conv, "exponent_value", 1)
            && clean(&conv, "exponent_monotone", 49)
            && clean(&conv, "strong_converse", 5)
            && clean(&conv, "over_capacity_outside", 1),
        format!(
            "f(1) = {:.12}, search slack ≥ {:.3e} over n = 1..5, {:.2?}",
            conv.metrics["f_eta_one"].as_f64().unwrap_or(f64::NAN),
            worst(&conv, "strong_converse"),
            dt
        ),
    );

    let orderings = [stat(&fano, "criterion_ordering"), stat(&conv, "criterion_ordering")];
    let evaluated: usize = orderings.iter().flatten().map(|c| c.count).sum();
    gate.line(
        8,
        "criterion ordering",
        orderings.iter().all(|c| c.is_some_and(|c| c.violations == 0 && c.count > 0)),
        format!("min ≤ geo ≤ avg on {evaluated} evaluated codes"),
    );

    if gate.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
