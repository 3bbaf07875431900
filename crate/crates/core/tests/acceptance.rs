//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every tolerance and sample size used below is pinned in the constants.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use maxeig_core::distributions::{
    conductance_cdf, conductance_pdf, fixed_trace_cdf, fixed_trace_pdf, FixedTraceLaw,
};
use maxeig_core::montecarlo::{
    cdf_upper_cutoff, ks_test, sample_conductance, sample_fixed_trace_largest,
    sample_wishart_largest, PiecewiseFloatEval, TabulatedCdf, WishartMethod,
};
use maxeig_core::{compute_all_tables, compute_tables, EnsembleParams, Error, ExpPoly};
use rug::Rational;

/// Exact-suite grid: `n <= 6`, `a <= 4`, `1 <= beta <= 4`.
const GRID_N: u32 = 6;
const GRID_A: u32 = 4;
const GRID_BETA: u32 = 4;

/// Oracle grid: `n <= 3`, `a <= 3`, `beta in {1, 2}`.
const ORACLE_N: u32 = 3;
const ORACLE_A: u32 = 3;
const ORACLE_BETAS: [u32; 2] = [1, 2];

/// Monte Carlo sample size per comparison.
const MC_SAMPLES: usize = 100_000;
/// KS pass threshold.
const KS_THRESHOLD: f64 = 0.01;
/// Interpolation error allowed in the tabulated unrestricted CDF.
const TABLE_MAX_ERROR: f64 = 1e-6;
/// Tail mass beyond the tabulated range.
const TABLE_TAIL: f64 = 1e-12;
const TABLE_SEGMENTS: usize = 4000;

/// Largest-eigenvalue figure: `n = 10`, `a = 15`, `beta = 1..4`.
const FIG1: (u32, u32) = (10, 15);
/// Conductance figure: three channel pairs for each `beta`.
const FIG2_BETAS: [u32; 3] = [1, 2, 4];
const FIG2_CHANNELS: [(u32, u32); 3] = [(1, 2), (2, 3), (3, 6)];

const PERF_PARAMS: (u32, u32, u32) = (10, 15, 4);
const PERF_LIMIT: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn params(n: u32, a: u32, beta: u32) -> EnsembleParams {
    EnsembleParams::new(n, a, beta).expect("valid parameters")
}

fn as_map(f: &ExpPoly) -> BTreeMap<(u32, u32), Rational> {
    f.terms().map(|(j, k, c)| ((j, k), c.clone())).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exact_identities() -> Outcome {
    let mut tables = 0;
    for beta in 1..=GRID_BETA {
        for a in 0..=GRID_A {
            let out = compute_all_tables(&params(GRID_N, a, beta)).map_err(|e| e.to_string())?;
            for t in &out.tables {
                let report = t.check_invariants();
                if let Some(f) = report.failures().next() {
                    let p = t.params();
                    return Err(format!(
                        "({}, {}, {}): {} {}",
                        p.n(),
                        p.a(),
                        p.beta(),
                        f.name,
                        f.detail
                    ));
                }
                tables += 1;
            }
        }
    }
    Ok(format!(
        "{tables} tables, 6 identities each, zero tolerance"
    ))
}

fn term_counts() -> Outcome {
    let t = compute_tables(&params(5, 5, 2)).map_err(|e| e.to_string())?;
    let c = t.term_counts();
    ensure((c.pdf_terms, c.cdf_terms) == (95, 121), || {
        format!("(5,5,2) gave {}/{} terms", c.pdf_terms, c.cdf_terms)
    })?;
    for beta in 1..=GRID_BETA {
        for a in 0..=GRID_A {
            let out = compute_all_tables(&params(GRID_N, a, beta)).map_err(|e| e.to_string())?;
            for t in &out.tables {
                let (c, p) = (t.term_counts(), t.params());
                ensure(
                    c.pdf_terms == p.pdf_term_formula() && c.cdf_terms == p.cdf_term_formula(),
                    || format!("({}, {}, {}): {c:?}", p.n(), p.a(), p.beta()),
                )?;
            }
        }
    }
    Ok(format!(
        "(5,5,2) has {}/{} terms; formulas hold on the grid",
        c.pdf_terms, c.cdf_terms
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut cases = 0;
    for beta in ORACLE_BETAS {
        for n in 1..=ORACLE_N {
            for a in 0..=ORACLE_A {
                let t = compute_tables(&params(n, a, beta)).map_err(|e| e.to_string())?;
                let (cdf, _) = common::brute_force_cdf(n, a, beta);
                ensure(as_map(t.cdf()) == cdf, || {
                    format!("Q differs at ({n}, {a}, {beta})")
                })?;
                ensure(as_map(t.pdf()) == common::derivative(&cdf, beta), || {
                    format!("P differs at ({n}, {a}, {beta})")
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases equal coefficient by coefficient"))
}

fn closed_form() -> Outcome {
    let t = compute_tables(&params(2, 0, 2)).map_err(|e| e.to_string())?;
    let expected: BTreeMap<(u32, u32), Rational> =
        [((0, 0), 1), ((1, 0), -2), ((1, 2), -1), ((2, 0), 1)]
            .into_iter()
            .map(|(key, c)| (key, Rational::from(c)))
            .collect();
    let got = as_map(t.cdf());
    ensure(got == expected, || format!("Q(x) = {}", t.cdf()))?;
    Ok("Q(x) = 1 - (x^2 + 2) e^{-x} + e^{-2x}".into())
}

fn normalization() -> Outcome {
    let mut laws = 0;
    for beta in 1..=GRID_BETA {
        for a in 0..=GRID_A {
            let out = compute_all_tables(&params(GRID_N, a, beta)).map_err(|e| e.to_string())?;
            for t in &out.tables {
                let n = t.params().n();
                let (pdf, cdf) = (
                    fixed_trace_pdf(t).map_err(|e| e.to_string())?,
                    fixed_trace_cdf(t).map_err(|e| e.to_string())?,
                );
                let tag = format!("({n}, {a}, {beta})");
                match (pdf, cdf) {
                    (FixedTraceLaw::PointMassAtOne, FixedTraceLaw::PointMassAtOne) if n == 1 => {}
                    (FixedTraceLaw::Piecewise(pdf), FixedTraceLaw::Piecewise(cdf)) if n > 1 => {
                        ensure(pdf.integrate_exact() == 1, || {
                            format!("{tag}: mass {}", pdf.integrate_exact())
                        })?;
                        ensure(cdf.eval(&Rational::from((1, n))) == 0, || {
                            format!("{tag}: Q_F(1/n) != 0")
                        })?;
                        ensure(cdf.eval(&Rational::from(1)) == 1, || {
                            format!("{tag}: Q_F(1) != 1")
                        })?;
                    }
                    _ => return Err(format!("{tag}: unexpected fixed-trace law shape")),
                }
                laws += 1;
            }
        }
    }
    for beta in FIG2_BETAS {
        for (n1, n2) in FIG2_CHANNELS {
            let pdf = conductance_pdf(n1, n2, beta).map_err(|e| e.to_string())?;
            ensure(pdf.integrate_exact() == 1, || {
                format!(
                    "conductance beta={beta} {n1}x{n2}: mass {}",
                    pdf.integrate_exact()
                )
            })?;
            laws += 1;
        }
    }
    Ok(format!("{laws} laws integrate to exactly 1"))
}

fn figure_one() -> Outcome {
    let (n, a) = FIG1;
    let mut lines = Vec::new();
    let mut worst = 0.0f64;
    for beta in 1..=4 {
        let start = Instant::now();
        let t = compute_tables(&params(n, a, beta)).map_err(|e| e.to_string())?;
        let hi = cdf_upper_cutoff(t.cdf(), 4.0 * (n + a) as f64, TABLE_TAIL);
        let table = TabulatedCdf::from_exppoly(t.cdf(), t.pdf(), hi, TABLE_SEGMENTS);
        ensure(table.max_midpoint_error < TABLE_MAX_ERROR, || {
            format!(
                "beta={beta}: CDF table error {:e}",
                table.max_midpoint_error
            )
        })?;
        let seed = 1000 + beta as u64;
        let batch = sample_wishart_largest(t.params(), MC_SAMPLES, seed, WishartMethod::Auto)
            .map_err(|e| e.to_string())?;
        let ks = ks_test(&batch, |x| table.eval(x)).map_err(|e| e.to_string())?;

        let law = fixed_trace_cdf(&t).map_err(|e| e.to_string())?;
        let ft = PiecewiseFloatEval::new(law.piecewise().ok_or("n > 1")?, 0.0, 1.0);
        let ft_batch =
            sample_fixed_trace_largest(t.params(), MC_SAMPLES, seed + 100, WishartMethod::Auto)
                .map_err(|e| e.to_string())?;
        let ft_ks = ks_test(&ft_batch, |y| ft.eval(y)).map_err(|e| e.to_string())?;

        worst = worst.max(ks.statistic).max(ft_ks.statistic);
        lines.push(format!(
            "beta={beta} [{}] D={:.5} D_F={:.5} ({:.1}s)",
            batch.sampler.as_str(),
            ks.statistic,
            ft_ks.statistic,
            start.elapsed().as_secs_f64()
        ));
        ensure(
            ks.statistic < KS_THRESHOLD && ft_ks.statistic < KS_THRESHOLD,
            || lines.join("; "),
        )?;
    }
    Ok(format!(
        "max D {worst:.5} < {KS_THRESHOLD}; {}",
        lines.join("; ")
    ))
}

fn figure_two() -> Outcome {
    let mut lines = Vec::new();
    let mut worst = 0.0f64;
    for beta in FIG2_BETAS {
        for (i, (n1, n2)) in FIG2_CHANNELS.into_iter().enumerate() {
            let cdf = conductance_cdf(n1, n2, beta).map_err(|e| e.to_string())?;
            let eval = PiecewiseFloatEval::new(&cdf, 0.0, 1.0);
            let seed = 2000 + 10 * beta as u64 + i as u64;
            let batch =
                sample_conductance(n1, n2, beta, MC_SAMPLES, seed).map_err(|e| e.to_string())?;
            let ks = ks_test(&batch, |g| eval.eval(g)).map_err(|e| e.to_string())?;
            worst = worst.max(ks.statistic);
            lines.push(format!("beta={beta} {n1}x{n2} D={:.5}", ks.statistic));
            ensure(ks.statistic < KS_THRESHOLD, || lines.join("; "))?;
        }
    }
    Ok(format!(
        "max D {worst:.5} < {KS_THRESHOLD}; {}",
        lines.join("; ")
    ))
}

fn degenerate_conductance() -> Outcome {
    for (n1, n2, beta) in [(1, 1, 2), (1, 2, 1)] {
        let pdf = conductance_pdf(n1, n2, beta).map_err(|e| e.to_string())?;
        let (lo, hi) = pdf.support();
        ensure(
            *lo == 0 && *hi == 1 && pdf.pieces() == [vec![Rational::from(1)]],
            || format!("beta={beta} {n1}x{n2}: {:?}", pdf.pieces()),
        )?;
    }
    match conductance_pdf(1, 1, 1) {
        Err(Error::Unsupported(msg)) if msg.contains("differ by an odd integer") => {}
        other => return Err(format!("beta=1 1x1 gave {other:?}")),
    }
    Ok("beta=2 1x1 and beta=1 1x2 are 1 on [0,1]; beta=1 1x1 rejected".into())
}

fn performance() -> Outcome {
    let (n, a, beta) = PERF_PARAMS;
    let p = params(n, a, beta);
    let start = Instant::now();
    let out = compute_all_tables(&p).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let c = out.table().term_counts();
    ensure(elapsed < PERF_LIMIT, || format!("took {elapsed:?}"))?;
    ensure(
        c.pdf_terms == p.pdf_term_formula() && c.cdf_terms == p.cdf_term_formula(),
        || format!("{c:?} vs {}/{}", p.pdf_term_formula(), p.cdf_term_formula()),
    )?;
    Ok(format!(
        "{:.2}s; {}/{} terms as predicted; peak {} terms, {} coefficient bits",
        elapsed.as_secs_f64(),
        c.pdf_terms,
        c.cdf_terms,
        out.stats.peak_terms,
        out.stats.max_coeff_bits
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "exact identity suite (n<=6, a<=4, beta<=4)",
            exact_identities,
        ),
        ("term-count reproduction", term_counts),
        ("brute-force oracle equivalence", oracle_equivalence),
        ("closed-form spot check (2,0,2)", closed_form),
        ("fixed-trace and conductance normalization", normalization),
        ("largest-eigenvalue Monte Carlo (n=10, a=15)", figure_one),
        ("conductance Monte Carlo", figure_two),
        ("degenerate conductance laws", degenerate_conductance),
        ("performance envelope (10,15,4)", performance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
