//! The three subcommands, separated from argument parsing so they can be tested directly.

use std::fmt::Write as _;
use std::path::Path;

use maxeig_core::distributions::{
    conductance_pdf, eval_cdf, eval_pdf, fixed_trace_cdf, fixed_trace_pdf, FixedTraceLaw,
};
use maxeig_core::montecarlo::{
    cdf_upper_cutoff, ks_test, sample_conductance, sample_fixed_trace_largest,
    sample_wishart_largest, KsOutcome, PiecewiseFloatEval, TabulatedCdf, WishartMethod,
};
use maxeig_core::{compute_all_tables, CoefficientTable, EnsembleParams, Error};
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::tablefile::{Provenance, TableFile};
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Pdf,
    Cdf,
    FtPdf,
    FtCdf,
    Conductance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Exact,
    Mc,
    All,
}

/// Parses `12`, `-0.25`, `3/8` exactly.
pub fn parse_rational(s: &str) -> CliResult<Rational> {
    let bad = || CliError::Usage(format!("not a decimal or fraction: {s:?}"));
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: Integer = num.trim().parse().map_err(|_| bad())?;
        let den: Integer = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational::from((num, den)));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty()
        || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: Integer = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = Integer::from(Integer::u_pow_u(10, frac.len() as u32));
    let value = Rational::from((digits, scale));
    Ok(if negative { -value } else { value })
}

/// `lo:hi:steps`, `steps` equal intervals, so `steps + 1` points including both ends.
pub fn parse_grid(spec: &str) -> CliResult<Vec<Rational>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(CliError::Usage(format!(
            "grid must be lo:hi:steps, got {spec:?}"
        )));
    };
    let (lo, hi) = (parse_rational(lo)?, parse_rational(hi)?);
    let steps: u32 = steps.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "grid steps must be a non-negative integer, got {steps:?}"
        ))
    })?;
    if hi < lo {
        return Err(CliError::Usage(format!(
            "grid upper end {hi} is below {lo}"
        )));
    }
    if steps == 0 {
        return Ok(vec![lo]);
    }
    let width = Rational::from(&hi - &lo);
    Ok((0..=steps)
        .map(|i| &lo + (&width * Rational::from((i, steps))))
        .collect())
}

/// `digits` significant decimal digits, `0` for zero.
pub fn format_float(value: &Float, digits: u32) -> String {
    if value.is_zero() {
        return "0".into();
    }
    value.to_string_radix(10, Some(digits as usize))
}

/// Exact decimal when the expansion terminates, otherwise `digits` significant digits.
fn format_rational(x: &Rational, digits: u32) -> String {
    let mut den = x.denom().clone();
    let twos = den.remove_factor_mut(&Integer::from(2));
    let fives = den.remove_factor_mut(&Integer::from(5));
    if den != 1 {
        return format_float(&Float::with_val(bits_for(digits), x), digits);
    }
    let places = twos.max(fives);
    if places == 0 {
        return x.numer().to_string();
    }
    let scaled = Integer::from(x.numer().abs_ref()) * Integer::from(Integer::u_pow_u(10, places))
        / x.denom();
    let text = format!(
        "{:0>width$}",
        scaled.to_string(),
        width = places as usize + 1
    );
    let (int, frac) = text.split_at(text.len() - places as usize);
    let sign = if *x < 0 { "-" } else { "" };
    format!("{sign}{int}.{frac}")
}

fn bits_for(digits: u32) -> u32 {
    (digits as f64 / std::f64::consts::LOG10_2).ceil() as u32 + 16
}

pub struct CoeffsSummary {
    pub file: TableFile,
    pub report: String,
}

/// Computes a table, checks it, and renders a human-readable summary.
pub fn coeffs(n: u32, a: u32, beta: u32) -> CliResult<CoeffsSummary> {
    let params = EnsembleParams::new(n, a, beta)?;
    let out = compute_all_tables(&params)?;
    let table = out.table();
    let mut report = String::new();
    let counts = table.term_counts();
    let _ = writeln!(report, "n={n} a={a} beta={beta} gamma={}", params.gamma());
    let _ = writeln!(
        report,
        "terms: P {} (formula {}), Q {} (formula {})",
        counts.pdf_terms,
        params.pdf_term_formula(),
        counts.cdf_terms,
        params.cdf_term_formula()
    );
    for check in &table.check_invariants().checks {
        let verdict = if check.passed { "pass" } else { "FAIL" };
        let _ = writeln!(report, "{verdict} {}: {}", check.name, check.detail);
    }
    let _ = writeln!(
        report,
        "wall time {:.3}s, peak {} terms, max {} coefficient bits",
        out.stats.elapsed.as_secs_f64(),
        out.stats.peak_terms,
        out.stats.max_coeff_bits
    );
    Ok(CoeffsSummary {
        file: TableFile::from_table(table, Provenance::from_stats(&out.stats)),
        report,
    })
}

/// Loads a table file and refuses tables that fail their identities.
pub fn load_table(path: &Path) -> CliResult<CoefficientTable> {
    let table = TableFile::read(path)?.to_table()?;
    let report = table.check_invariants();
    if let Some(f) = report.failures().next() {
        return Err(
            Error::Consistency(format!("{}: {} {}", path.display(), f.name, f.detail)).into(),
        );
    }
    Ok(table)
}

/// Conductance channel counts and symmetry class.
#[derive(Clone, Copy, Debug, Default)]
pub struct Leads {
    pub n1: Option<u32>,
    pub n2: Option<u32>,
    pub beta: Option<u32>,
}

impl Leads {
    fn require(&self) -> CliResult<(u32, u32, u32)> {
        match (self.n1, self.n2, self.beta) {
            (Some(n1), Some(n2), Some(beta)) => Ok((n1, n2, beta)),
            _ => Err(CliError::Usage(
                "conductance needs --n1, --n2 and --beta".into(),
            )),
        }
    }
}

/// CSV `x,value` of the requested quantity on the grid.
pub fn eval(
    table: Option<&CoefficientTable>,
    what: Quantity,
    leads: Leads,
    grid: &[Rational],
    digits: u32,
) -> CliResult<String> {
    let need_table = || table.ok_or_else(|| CliError::Usage("this quantity needs --table".into()));
    let bits = bits_for(digits);
    let values: Vec<Float> = match what {
        Quantity::Pdf | Quantity::Cdf => {
            let t = need_table()?;
            grid.iter()
                .map(|x| match what {
                    Quantity::Pdf => eval_pdf(t, x, digits),
                    _ => eval_cdf(t, x, digits),
                })
                .collect::<Result<_, _>>()?
        }
        Quantity::FtPdf | Quantity::FtCdf => {
            let t = need_table()?;
            let law = match what {
                Quantity::FtPdf => fixed_trace_pdf(t)?,
                _ => fixed_trace_cdf(t)?,
            };
            match (law, what) {
                (FixedTraceLaw::Piecewise(p), _) => grid.iter().map(|y| p.eval_float(y, digits)).collect(),
                (FixedTraceLaw::PointMassAtOne, Quantity::FtCdf) => grid
                    .iter()
                    .map(|y| Float::with_val(bits, if *y >= 1 { 1 } else { 0 }))
                    .collect(),
                (FixedTraceLaw::PointMassAtOne, _) => {
                    return Err(Error::Domain(
                        "n = 1: the fixed-trace eigenvalue is the point mass y = 1, which has no density".into(),
                    )
                    .into())
                }
            }
        }
        Quantity::Conductance => {
            let (n1, n2, beta) = leads.require()?;
            let pdf = conductance_pdf(n1, n2, beta)?;
            grid.iter().map(|g| pdf.eval_float(g, digits)).collect()
        }
    };
    let mut csv = String::from("x,value\n");
    for (x, v) in grid.iter().zip(&values) {
        let _ = writeln!(
            csv,
            "{},{}",
            format_rational(x, digits),
            format_float(v, digits)
        );
    }
    Ok(csv)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub scope: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl VerifyReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(CheckRecord {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialise")
    }
}

/// Ensemble and lead parameters for `verify`; missing ones select the default suite.
#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyTarget {
    pub n: Option<u32>,
    pub a: Option<u32>,
    pub beta: Option<u32>,
    pub n1: Option<u32>,
    pub n2: Option<u32>,
}

impl VerifyTarget {
    fn ensemble(&self) -> CliResult<Option<(u32, u32, u32)>> {
        match (self.n, self.a, self.beta) {
            (Some(n), Some(a), Some(beta)) => Ok(Some((n, a, beta))),
            (None, None, _) => Ok(None),
            _ => Err(CliError::Usage(
                "ensemble checks need all of --n, --a and --beta".into(),
            )),
        }
    }

    fn leads(&self) -> CliResult<Option<(u32, u32, u32)>> {
        match (self.n1, self.n2, self.beta) {
            (Some(n1), Some(n2), Some(beta)) => Ok(Some((n1, n2, beta))),
            (None, None, _) => Ok(None),
            _ => Err(CliError::Usage(
                "conductance checks need all of --n1, --n2 and --beta".into(),
            )),
        }
    }
}

/// Grid for `verify exact` without explicit parameters.
const EXACT_GRID: (u32, u32, u32) = (6, 4, 4);

fn exact_checks(report: &mut VerifyReport, n: u32, a: u32, beta: u32) -> CliResult<()> {
    let params = EnsembleParams::new(n, a, beta)?;
    let tag = format!("({n},{a},{beta})");
    let out = match compute_all_tables(&params) {
        Ok(out) => out,
        Err(Error::Consistency(msg)) => {
            report.push(format!("{tag} recursion"), false, msg);
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    for t in &out.tables {
        let dim = t.params().n();
        for check in t.check_invariants().checks {
            if dim == n || !check.passed {
                report.push(
                    format!("({dim},{a},{beta}) {}", check.name),
                    check.passed,
                    check.detail,
                );
            }
        }
    }
    let t = out.table();
    let c = t.term_counts();
    report.push(
        format!("{tag} term_counts"),
        c.pdf_terms == params.pdf_term_formula() && c.cdf_terms == params.cdf_term_formula(),
        format!(
            "P {} terms (formula {}), Q {} terms (formula {})",
            c.pdf_terms,
            params.pdf_term_formula(),
            c.cdf_terms,
            params.cdf_term_formula()
        ),
    );
    if n > 1 {
        let pdf = fixed_trace_pdf(t)?;
        let cdf = fixed_trace_cdf(t)?;
        let (pdf, cdf) = (
            pdf.piecewise().expect("n > 1"),
            cdf.piecewise().expect("n > 1"),
        );
        let mass = pdf.integrate_exact();
        let (lo, hi) = (
            cdf.eval(&Rational::from((1, n))),
            cdf.eval(&Rational::from(1)),
        );
        report.push(
            format!("{tag} fixed_trace_normalisation"),
            mass == 1 && lo == 0 && hi == 1,
            format!("int P_F = {mass}, Q_F(1/n) = {lo}, Q_F(1) = {hi}"),
        );
    }
    let file = TableFile::from_table(t, Provenance::from_stats(&out.stats));
    let back = TableFile::from_json(&file.to_json())?.to_table()?;
    report.push(
        format!("{tag} table_roundtrip"),
        &back == t,
        "serialise, parse, compare exactly",
    );
    Ok(())
}

fn ks_detail(ks: &KsOutcome, sampler: &str, count: usize, seed: u64) -> String {
    format!(
        "D = {:.6}, threshold {:.6}, {count} samples from {sampler}, seed {seed}",
        ks.statistic, ks.threshold
    )
}

fn mc_ensemble(
    report: &mut VerifyReport,
    n: u32,
    a: u32,
    beta: u32,
    samples: usize,
    seed: u64,
) -> CliResult<()> {
    let params = EnsembleParams::new(n, a, beta)?;
    let t = compute_all_tables(&params)?.into_table();
    let tag = format!("({n},{a},{beta})");
    let hi = cdf_upper_cutoff(t.cdf(), 2.0 * (n + a + 1) as f64, 1e-12);
    let table = TabulatedCdf::from_exppoly(t.cdf(), t.pdf(), hi, 4000);
    let batch = sample_wishart_largest(&params, samples, seed, WishartMethod::Auto)?;
    let ks = ks_test(&batch, |x| table.eval(x))?;
    report.push(
        format!("{tag} largest_eigenvalue_ks"),
        ks.passed && table.max_midpoint_error < 1e-6,
        ks_detail(&ks, batch.sampler.as_str(), samples, seed),
    );
    if n > 1 {
        let law = fixed_trace_cdf(&t)?;
        let eval = PiecewiseFloatEval::new(law.piecewise().expect("n > 1"), 0.0, 1.0);
        let fseed = seed.wrapping_add(1);
        let batch = sample_fixed_trace_largest(&params, samples, fseed, WishartMethod::Auto)?;
        let ks = ks_test(&batch, |y| eval.eval(y))?;
        report.push(
            format!("{tag} fixed_trace_ks"),
            ks.passed,
            ks_detail(&ks, batch.sampler.as_str(), samples, fseed),
        );
    }
    Ok(())
}

fn mc_conductance(
    report: &mut VerifyReport,
    n1: u32,
    n2: u32,
    beta: u32,
    samples: usize,
    seed: u64,
) -> CliResult<()> {
    let cdf = conductance_pdf(n1, n2, beta)?.cumulative();
    let eval = PiecewiseFloatEval::new(&cdf, 0.0, 1.0);
    let batch = sample_conductance(n1, n2, beta, samples, seed)?;
    let ks = ks_test(&batch, |g| eval.eval(g))?;
    report.push(
        format!("conductance beta={beta} {n1}x{n2} ks"),
        ks.passed,
        ks_detail(&ks, batch.sampler.as_str(), samples, seed),
    );
    Ok(())
}

/// Runs the exact and/or Monte Carlo suites; failures are report content.
pub fn verify(
    scope: Scope,
    target: VerifyTarget,
    samples: usize,
    seed: u64,
) -> CliResult<VerifyReport> {
    let ensemble = target.ensemble()?;
    let leads = target.leads()?;
    let mut report = VerifyReport {
        scope: match scope {
            Scope::Exact => "exact",
            Scope::Mc => "mc",
            Scope::All => "all",
        }
        .into(),
        passed: true,
        checks: Vec::new(),
    };
    if matches!(scope, Scope::Exact | Scope::All) {
        match ensemble {
            Some((n, a, beta)) => exact_checks(&mut report, n, a, beta)?,
            None if leads.is_none() => {
                let (n, a_max, b_max) = EXACT_GRID;
                for beta in 1..=b_max {
                    for a in 0..=a_max {
                        exact_checks(&mut report, n, a, beta)?;
                    }
                }
            }
            None => {}
        }
        if let Some((n1, n2, beta)) = leads {
            let pdf = conductance_pdf(n1, n2, beta)?;
            let mass = pdf.integrate_exact();
            report.push(
                format!("conductance beta={beta} {n1}x{n2} normalisation"),
                mass == 1,
                format!("int P_g = {mass}"),
            );
        }
    }
    if matches!(scope, Scope::Mc | Scope::All) {
        if ensemble.is_none() && leads.is_none() {
            mc_ensemble(&mut report, 2, 0, 2, samples, seed)?;
            mc_conductance(&mut report, 2, 3, 2, samples, seed.wrapping_add(2))?;
        }
        if let Some((n, a, beta)) = ensemble {
            mc_ensemble(&mut report, n, a, beta, samples, seed)?;
        }
        if let Some((n1, n2, beta)) = leads {
            mc_conductance(&mut report, n1, n2, beta, samples, seed.wrapping_add(2))?;
        }
    }
    Ok(report)
}
