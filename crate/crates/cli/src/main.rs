use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cqbl_core::channel_spec::load_spec;
use cqbl_core::codesim::{fano_audit, single_letter_audit, BroadcastCode, DecoderStrategy};
use cqbl_core::converse::{second_order_bounds, ExponentOutcome};
use cqbl_core::region::{
    check_degraded_with, concavity_audit, default_mu_grid, CqBroadcastChannel, RegionOptions, RegionSolver,
    DEGRADED_TOL,
};
use cqbl_core::suites::{configure_threads, run_suite, Suite};
use cqbl_core::Error;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Parser)]
#[command(name = "cqbl", version, about = "Converse bounds for classical-quantum degraded broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a CPTP map taking every B output to the matching C output.
    CheckDegraded {
        spec: PathBuf,
        /// Largest accepted trace-norm residual.
        #[arg(long, default_value_t = DEGRADED_TOL)]
        tol: f64,
    },
    /// Boundary F(t) of the entropic region as CSV.
    Region {
        spec: PathBuf,
        /// Number of evenly spaced points on [0, C_C], or a comma-separated list of t values.
        #[arg(long, default_value = "17")]
        t_grid: String,
        /// Also search quantum auxiliary states.
        #[arg(long)]
        quantum_u: bool,
        /// Print rates in bits; grid values stay in nats.
        #[arg(long)]
        bits: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Second-order rate bounds and, for a rate pair, the strong converse exponent.
    Bound {
        spec: PathBuf,
        /// Blocklength.
        #[arg(long)]
        n: f64,
        /// Maximal error probability in (0, 1).
        #[arg(long)]
        eps: f64,
        #[arg(long, requires = "rate_rc")]
        rate_rb: Option<f64>,
        #[arg(long, requires = "rate_rb")]
        rate_rc: Option<f64>,
        #[arg(long)]
        bits: bool,
    },
    /// Run the randomized certification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Overrides each suite's default trial count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fano-type and single-letter audits of small codes on a spec channel.
    Audit {
        spec: PathBuf,
        /// Blocklength.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m_size: usize,
        #[arg(long, default_value_t = 1)]
        k_size: usize,
        #[arg(long, value_enum, default_value_t = DecoderArg::Both)]
        decoder: DecoderArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-code summary CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Alt,
    Rhc,
    Dpi,
    Fano,
    Region,
    Converse,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Alt => Suite::Alt,
            SuiteArg::Rhc => Suite::Rhc,
            SuiteArg::Dpi => Suite::Dpi,
            SuiteArg::Fano => Suite::Fano,
            SuiteArg::Region => Suite::Region,
            SuiteArg::Converse => Suite::Converse,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Pgm,
    Local,
    Both,
}

/// Exit code plus message for the failure paths.
enum Failure {
    /// Ran to completion and found a violation or infeasibility.
    Negative(String),
    /// Bad input or an internal error.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Twelve significant digits, `.` decimal separator, no locale.
fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, v);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" { "0".into() } else { s }
    } else {
        format!("{v:.11e}")
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(spec: &Path) -> std::result::Result<(CqBroadcastChannel, Option<cqbl_core::operator::QuantumChannel>), Failure> {
    let spec = load_spec(spec)?;
    let ch = spec.channel()?;
    Ok((ch, spec.declared_map()?))
}

fn cmd_check_degraded(spec: &Path, tol: f64) -> CmdResult {
    let (ch, map) = load(spec)?;
    let hints: Vec<_> = map.into_iter().collect();
    let rep = check_degraded_with(&ch, tol, &hints)?;
    println!("residual {}", sig12(rep.residual));
    println!("kraus_rank {}", rep.channel.kraus_rank());
    println!("degraded {}", rep.degraded);
    if rep.degraded {
        Ok(())
    } else {
        Err(Failure::Negative(format!("no degrading map within {tol}")))
    }
}

fn parse_grid(spec: &str, top: f64) -> std::result::Result<Vec<f64>, Failure> {
    let bad = |s: &str| Failure::Usage(format!("bad --t-grid entry {s:?}"));
    if spec.contains(',') {
        return spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad(s))).collect();
    }
    let k: usize = spec.trim().parse().map_err(|_| bad(spec))?;
    Ok(match k {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..k).map(|i| top * i as f64 / (k - 1) as f64).collect(),
    })
}

fn cmd_region(spec: &Path, grid: &str, quantum_u: bool, bits: bool, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let (ch, _) = load(spec)?;
    let mut opts = RegionOptions { quantum_u, ..Default::default() };
    if let Some(s) = seed {
        opts.seed = s;
    }
    let solver = RegionSolver::new(&ch, opts);
    let t_grid = parse_grid(grid, solver.capacity_c())?;
    let unit = if bits { 1.0 / LN2 } else { 1.0 };
    let mut csv = String::from("t,F_t,certified,i_xb_u,i_uc\n");
    let mut curve = Vec::new();
    for (t, res) in t_grid.iter().zip(solver.boundary(&t_grid)) {
        match res {
            Ok(p) => {
                curve.push((p.t, p.f_value));
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    sig12(p.t * unit),
                    sig12(p.f_value * unit),
                    p.certified_lower,
                    sig12(p.i_xb_u * unit),
                    sig12(p.i_uc * unit)
                );
            }
            Err(Error::Infeasible(msg)) => eprintln!("warning: skipping t = {t}: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    let rep = concavity_audit(&curve, cqbl_core::region::CONCAVITY_TOL);
    let _ = writeln!(
        csv,
        "# concavity {} triples={} worst_deficit={}",
        if rep.concave { "pass" } else { "fail" },
        rep.triples_checked,
        sig12(rep.worst_deficit * unit)
    );
    write_or_print(out, &csv)
}

fn scale_keys(v: &mut Value, keys: &[&str], factor: f64) {
    if let Value::Object(map) = v {
        for (k, x) in map.iter_mut() {
            if keys.contains(&k.as_str()) {
                if let Some(f) = x.as_f64() {
                    *x = json!(f * factor);
                }
            } else {
                scale_keys(x, keys, factor);
            }
        }
    }
}

fn cmd_bound(spec: &Path, n: f64, eps: f64, rates: Option<(f64, f64)>, bits: bool) -> CmdResult {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Failure::Usage(format!("--eps must lie in (0, 1), got {eps}")));
    }
    if !(n >= 1.0) {
        return Err(Failure::Usage(format!("--n must be at least 1, got {n}")));
    }
    let (ch, _) = load(spec)?;
    let env = RegionSolver::new(&ch, RegionOptions::default()).envelope(&default_mu_grid())?;
    let mut report = second_order_bounds(n, eps, &ch, &env)?;
    if let Some((rb, rc)) = rates {
        report = report.with_rates(rb, rc, &env);
    }
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    let unit = if bits { "bits" } else { "nats" };
    if bits {
        scale_keys(&mut doc, &["i_xb_u", "i_uc", "rb_bound", "rc_bound", "rb", "rc"], 1.0 / LN2);
    }
    doc["unit"] = json!(unit);
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    let status = match &report.exponent {
        None => "none".to_string(),
        Some(ExponentOutcome::InsideRegion { .. }) => "inside_region".into(),
        Some(ExponentOutcome::Outside(p)) => format!("outside f={}", sig12(p.f)),
    };
    let k = if bits { 1.0 / LN2 } else { 1.0 };
    eprintln!(
        "n,eps,rb_bound,rc_bound,exponent,error_floor\n{},{},{},{},{},{}",
        sig12(n),
        sig12(eps),
        sig12(report.rb_bound * k),
        sig12(report.rc_bound * k),
        status,
        report.error_floor.map_or(String::new(), sig12)
    );
    Ok(())
}

fn cmd_verify(suite: Suite, seed: u64, trials: Option<usize>, out: Option<&Path>) -> CmdResult {
    let summaries = run_suite(suite, seed, trials)?;
    let violations: usize = summaries.iter().map(|s| s.violations).sum();
    let doc = json!({"seed": seed, "violations": violations, "suites": summaries});
    write_or_print(out, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    for s in &summaries {
        eprintln!("{}: {} violations", s.suite, s.violations);
    }
    if violations == 0 {
        Ok(())
    } else {
        Err(Failure::Negative(format!("{violations} violations")))
    }
}

fn cmd_audit(spec: &Path, n: usize, m_size: usize, k_size: usize, decoder: DecoderArg, seed: u64, csv: Option<&Path>) -> CmdResult {
    let (ch, _) = load(spec)?;
    let strategies: &[DecoderStrategy] = match decoder {
        DecoderArg::Pgm => &[DecoderStrategy::Pgm],
        DecoderArg::Local => &[DecoderStrategy::LocalSearch],
        DecoderArg::Both => &[DecoderStrategy::Pgm, DecoderStrategy::LocalSearch],
    };
    let fano = fano_audit(ch.b_states(), n, m_size, k_size, strategies, seed)?;
    let env = RegionSolver::new(&ch, RegionOptions { seed, ..Default::default() }).envelope(&default_mu_grid())?;
    let mut single = Vec::new();
    for rec in fano.records.iter().step_by(strategies.len()) {
        let code = BroadcastCode::uniform(n, m_size, k_size, rec.codewords.clone(), ch.alphabet_size())?;
        single.push(single_letter_audit(&ch, &code, &env)?);
    }
    let single_violations = single.iter().filter(|r| !r.holds).count();
    let doc = json!({
        "fano": fano,
        "single_letter": {"codes": single.len(), "violations": single_violations, "records": single},
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    if let Some(path) = csv {
        let mut text = String::from("index,decoder,epsilon,lhs,rhs,slack\n");
        for (i, r) in fano.records.iter().enumerate() {
            let dec = match r.decoder {
                DecoderStrategy::Pgm => "pgm",
                DecoderStrategy::LocalSearch => "local",
            };
            let opt = |v: Option<f64>| v.map_or(String::new(), sig12);
            let _ = writeln!(text, "{i},{dec},{},{},{},{}", sig12(r.epsilon), sig12(r.lhs), opt(r.rhs), opt(r.slack));
        }
        write_or_print(Some(path), &text)?;
    }
    eprintln!(
        "fano: {} codes, {} violations, min slack {}; single-letter: {} violations",
        fano.codes_checked,
        fano.violations,
        sig12(fano.min_slack),
        single_violations
    );
    if fano.violations + fano.ordering_violations + single_violations == 0 {
        Ok(())
    } else {
        Err(Failure::Negative("audit found violations".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    configure_threads();
    let res = match cli.command {
        Command::CheckDegraded { spec, tol } => cmd_check_degraded(&spec, tol),
        Command::Region { spec, t_grid, quantum_u, bits, seed, out } => {
            cmd_region(&spec, &t_grid, quantum_u, bits, seed, out.as_deref())
        }
        Command::Bound { spec, n, eps, rate_rb, rate_rc, bits } => {
            cmd_bound(&spec, n, eps, rate_rb.zip(rate_rc), bits)
        }
        Command::Verify { suite, seed, trials, out } => cmd_verify(suite.into(), seed, trials, out.as_deref()),
        Command::Audit { spec, n, m_size, k_size, decoder, seed, csv } => {
            cmd_audit(&spec, n, m_size, k_size, decoder, seed, csv.as_deref())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(std::f64::consts::LN_2), "0.69314718056");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(1234.5678901234), "1234.56789012");
        assert_eq!(sig12(1e-9), "1.00000000000e-9");
    }
}
