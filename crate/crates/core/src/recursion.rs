//! Coefficient tables of the largest-eigenvalue PDF `P(x)` and CDF `Q(x)` for
//! the Wishart-Laguerre ensemble with weight `x^a e^{-beta x / 2}` and
//! eigenvalue repulsion `|x_k - x_j|^beta`, for integers `a >= 0`, `beta >= 1`.
//!
//! The engine works with the generalised Selberg function
//!
//! ```text
//! L_{p,nu}^{(alpha)}(x) = p!(nu-p)!/nu! int_{[0,x]^nu} prod_l t_l^a e^{-lambda t_l} (x - t_l)^alpha
//!                         * prod_{j<k} |t_k - t_j|^{2 lambda} * e_p(x - t_1, ..., x - t_nu)
//! ```
//!
//! (`lambda = beta/2`, `e_p` the elementary symmetric polynomial). One step of
//! the differential-difference recurrence moves `p -> p + 1`; a full sweep turns
//! `L_{0,nu}^{(alpha)}` into `L_{0,nu}^{(alpha+1)}`. Once `alpha` reaches `beta`,
//! multiplying by the weight in a fresh variable and integrating it over `[0, x]`
//! adds one eigenvalue. Everything stays inside [`ExpPoly`].

use std::time::{Duration, Instant};

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::exppoly::{laplace_moment, ExpPoly};
use crate::special::{binomial, gamma_half, SqrtPiMultiple};

/// A validated `(n, a, beta)` triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleParams {
    n: u32,
    a: u32,
    beta: u32,
    gamma: u64,
    lambda: Rational,
}

impl EnsembleParams {
    pub fn new(n: u32, a: u32, beta: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter(
                "matrix dimension n must be positive".into(),
            ));
        }
        if beta == 0 {
            return Err(Error::Parameter(
                "Dyson index beta must be a positive integer".into(),
            ));
        }
        let (n64, a64, b64) = (n as u64, a as u64, beta as u64);
        let twice_gamma = n64 * (2 * a64 + b64 * (n64 - 1) + 2);
        assert!(twice_gamma % 2 == 0, "gamma must be integral");
        Ok(EnsembleParams {
            n,
            a,
            beta,
            gamma: twice_gamma / 2,
            lambda: Rational::from((beta, 2)),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    /// `gamma = n [a + beta (n - 1)/2 + 1]`, the total homogeneity degree.
    pub fn gamma(&self) -> u64 {
        self.gamma
    }

    /// `lambda = beta / 2`, the rate unit of every exponential.
    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    /// The same `(a, beta)` at another dimension.
    pub fn with_dimension(&self, n: u32) -> Result<Self> {
        Self::new(n, self.a, self.beta)
    }

    /// Highest power of `x` that can multiply `e^{-j beta x/2}` in `P` or `Q`.
    pub fn degree_bound(&self, j: u32) -> u64 {
        assert!(j <= self.n);
        let (j, n) = (j as u64, self.n as u64);
        j * self.a as u64 + j * (n - j) * self.beta as u64
    }

    /// `(n/6)[(n^2 - 1) beta + 3(n - 1) a + 6]`: coefficient slots in `P`.
    pub fn pdf_term_formula(&self) -> u64 {
        let (n, a, b) = (self.n as u64, self.a as u64, self.beta as u64);
        n * ((n * n - 1) * b + 3 * (n - 1) * a + 6) / 6
    }

    /// `(n+1)/6 [n^2 beta + n(3a - beta) + 6]`: coefficient slots in `Q`.
    pub fn cdf_term_formula(&self) -> u64 {
        let (n, a, b) = (self.n as i64, self.a as i64, self.beta as i64);
        ((n + 1) * (n * n * b + n * (3 * a - b) + 6) / 6) as u64
    }

    /// The normalisation `W` of the joint eigenvalue density,
    /// `(2/beta)^gamma prod_{j<n} Gamma(beta(j+1)/2 + 1) Gamma(beta j/2 + a + 1) / Gamma(beta/2 + 1)`.
    pub fn partition_function(&self) -> SqrtPiMultiple {
        let (a, b) = (self.a as u64, self.beta as u64);
        let mut w = SqrtPiMultiple::rational(Rational::from((2, self.beta)).pow(self.gamma as i32));
        for j in 0..self.n as u64 {
            w = w * gamma_half(b * (j + 1) + 2) * gamma_half(b * j + 2 * a + 2) / gamma_half(b + 2);
        }
        w
    }
}

/// Position inside one `p`-sweep of the recurrence.
#[derive(Clone, Debug)]
pub struct RecursionState {
    pub nu: u32,
    pub alpha: u32,
    pub p: u32,
    /// `L_{p-1,nu}^{(alpha)}`; ignored at `p = 0`.
    pub prev: ExpPoly,
    /// `L_{p,nu}^{(alpha)}`.
    pub curr: ExpPoly,
}

/// One step `L_{p,nu} -> L_{p+1,nu}`:
///
/// ```text
/// lambda(nu-p) L_{p+1} = [lambda(nu-p) x + B_p] L_p + x L_p' - D_p x L_{p-1},
/// B_p = (p - nu)[a + alpha + 1 + lambda(nu - p - 1)],   D_p = p[lambda(nu - p) + alpha + 1].
/// ```
pub fn recurrence_step(state: &RecursionState, params: &EnsembleParams) -> Result<ExpPoly> {
    let (nu, p, alpha) = (state.nu, state.p, state.alpha);
    if p >= nu {
        return Err(Error::Contract(format!(
            "recurrence runs for p < nu only (p = {p}, nu = {nu})"
        )));
    }
    let lambda = params.lambda();
    let lead = Rational::from(lambda * (nu - p));
    let b_p = Rational::from(lambda * (nu - p - 1)) + (params.a() + alpha + 1);
    let b_p = -b_p * (nu - p);
    let d_p = (Rational::from(lambda * (nu - p)) + (alpha + 1)) * p;

    let inv = Rational::from(lead.recip_ref());
    let mut out = ExpPoly::zero(lambda.clone());
    out.add_scaled_shifted(&state.curr, &Rational::from(1), 1, 0)?;
    out.add_scaled_shifted(&state.curr, &Rational::from(&b_p * &inv), 0, 0)?;
    out.add_scaled_shifted(&state.curr.differentiate(), &inv, 1, 0)?;
    if p > 0 {
        out.add_scaled_shifted(&state.prev, &(-(d_p * &inv)), 1, 0)?;
    }
    Ok(out)
}

/// `L_{0,nu}^{(alpha)} -> L_{0,nu}^{(alpha+1)}` via a full `p`-sweep.
pub fn raise_alpha(l0: &ExpPoly, nu: u32, alpha: u32, params: &EnsembleParams) -> Result<ExpPoly> {
    let mut state = RecursionState {
        nu,
        alpha,
        p: 0,
        prev: ExpPoly::zero(params.lambda().clone()),
        curr: l0.clone(),
    };
    while state.p < nu {
        let next = recurrence_step(&state, params)?;
        state.prev = std::mem::replace(&mut state.curr, next);
        state.p += 1;
    }
    Ok(state.curr)
}

/// `L_{0,nu+1}^{(0)}(x) = (nu+1) int_0^x t^a e^{-lambda t} L_{0,nu}^{(beta)}(t) dt`.
///
/// The new variable is the largest of the `nu + 1`, so the ordered integral
/// times `nu + 1` is the unordered one. `nu = 0` with `l_full = 1` seeds the
/// recursion with the one-eigenvalue integral.
pub fn extend_nu(l_full: &ExpPoly, nu: u32, params: &EnsembleParams) -> ExpPoly {
    weighted_integrand(l_full, nu + 1, params).integrate_from_zero()
}

fn weighted_integrand(l_full: &ExpPoly, dim: u32, params: &EnsembleParams) -> ExpPoly {
    l_full
        .mul_monomial(params.a(), 1)
        .scale(&Rational::from(dim))
}

/// Size telemetry for one run of the engine.
#[derive(Clone, Debug, Default)]
pub struct RecursionStats {
    pub peak_terms: usize,
    pub max_coeff_bits: u32,
    pub recurrence_steps: usize,
    pub elapsed: Duration,
}

impl RecursionStats {
    fn observe(&mut self, f: &ExpPoly) {
        self.peak_terms = self.peak_terms.max(f.len());
        self.max_coeff_bits = self.max_coeff_bits.max(f.max_coeff_bits());
    }
}

/// Normalised `P` and `Q` for one parameter triple:
/// `P(x) = sum_{j>=1} e^{-j beta x/2} sum_k c_jk x^k`,
/// `Q(x) = sum_{j>=0} e^{-j beta x/2} sum_k d_jk x^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientTable {
    params: EnsembleParams,
    pdf: ExpPoly,
    cdf: ExpPoly,
}

impl CoefficientTable {
    /// Assembles a table without checking it; see [`CoefficientTable::check_invariants`].
    pub fn from_parts(params: EnsembleParams, pdf: ExpPoly, cdf: ExpPoly) -> Result<Self> {
        if pdf.rate() != params.lambda() || cdf.rate() != params.lambda() {
            return Err(Error::Parameter(
                "table rate unit differs from beta/2".into(),
            ));
        }
        Ok(CoefficientTable { params, pdf, cdf })
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn pdf(&self) -> &ExpPoly {
        &self.pdf
    }

    pub fn cdf(&self) -> &ExpPoly {
        &self.cdf
    }

    pub fn c(&self, j: u32, k: u32) -> Rational {
        self.pdf.coeff(j, k).cloned().unwrap_or_default()
    }

    pub fn d(&self, j: u32, k: u32) -> Rational {
        self.cdf.coeff(j, k).cloned().unwrap_or_default()
    }

    /// Terms of the expanded `P` and `Q`, counted per block from the lowest
    /// admissible power (`a` for `P`, `0` for `Q`) up to the highest power present.
    pub fn term_counts(&self) -> TermCounts {
        let slots = |f: &ExpPoly, lo: u32| -> u64 {
            f.decays()
                .into_iter()
                .map(|j| {
                    let (_, hi) = f.power_range(j).expect("present block");
                    (hi + 1).saturating_sub(lo) as u64
                })
                .sum()
        };
        TermCounts {
            pdf_terms: slots(&self.pdf, self.params.a()),
            cdf_terms: slots(&self.cdf, 0),
            pdf_nonzero: self.pdf.len(),
            cdf_nonzero: self.cdf.len(),
        }
    }

    /// Runs every exact identity a correct table satisfies.
    pub fn check_invariants(&self) -> InvariantReport {
        let params = &self.params;
        let (n, a) = (params.n(), params.a());
        let mut checks = Vec::new();

        let d00 = self.d(0, 0);
        checks.push(IdentityCheck::new(
            "d00_is_one",
            d00 == 1,
            format!("d_00 = {d00}"),
        ));

        let q0: Rational = (0..=n).map(|j| self.d(j, 0)).sum();
        checks.push(IdentityCheck::new(
            "cdf_vanishes_at_zero",
            q0 == 0,
            format!("Q(0) = {q0}"),
        ));

        if params.beta().is_multiple_of(2) {
            let bad: Vec<u32> = (0..=n)
                .filter(|&j| {
                    let mut expected = Rational::from(binomial(n as u64, j as u64));
                    if j % 2 == 1 {
                        expected = -expected;
                    }
                    self.d(j, 0) != expected
                })
                .collect();
            checks.push(IdentityCheck::new(
                "even_beta_constant_terms",
                bad.is_empty(),
                format!("d_j0 = (-1)^j C(n,j) fails for j in {bad:?}"),
            ));
        }

        let mut violations = Vec::new();
        for (j, k, _) in self.pdf.terms() {
            if j == 0 || j > n || k < a || k as u64 > params.degree_bound(j) {
                violations.push(format!("c[{j},{k}]"));
            }
        }
        for (j, k, _) in self.cdf.terms() {
            if j > n || k as u64 > params.degree_bound(j) {
                violations.push(format!("d[{j},{k}]"));
            }
        }
        checks.push(IdentityCheck::new(
            "degree_bounds",
            violations.is_empty(),
            format!("out-of-range coefficients: {violations:?}"),
        ));

        let derivative_ok = self.cdf.differentiate() == self.pdf;
        checks.push(IdentityCheck::new(
            "pdf_is_cdf_derivative",
            derivative_ok,
            "dQ/dx differs from P".to_string(),
        ));

        let mass: Rational = self
            .pdf
            .terms()
            .map(|(j, k, c)| {
                if j == 0 {
                    // a non-decaying block has no finite integral; flagged by degree_bounds
                    Rational::new()
                } else {
                    laplace_moment(k, &Rational::from(params.lambda() * j)) * c
                }
            })
            .sum();
        checks.push(IdentityCheck::new(
            "pdf_total_mass",
            mass == 1,
            format!("int_0^inf P = {mass}"),
        ));

        InvariantReport { checks }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermCounts {
    pub pdf_terms: u64,
    pub cdf_terms: u64,
    pub pdf_nonzero: usize,
    pub cdf_nonzero: usize,
}

#[derive(Clone, Debug)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl IdentityCheck {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        IdentityCheck {
            name,
            passed,
            detail,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub checks: Vec<IdentityCheck>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn into_result(self) -> Result<Self> {
        if let Some(f) = self.failures().next() {
            return Err(Error::Consistency(format!("{}: {}", f.name, f.detail)));
        }
        Ok(self)
    }
}

/// Output of one engine run: a table for every dimension `1..=n`.
#[derive(Clone, Debug)]
pub struct RecursionOutput {
    pub tables: Vec<CoefficientTable>,
    pub stats: RecursionStats,
}

impl RecursionOutput {
    /// The table at the requested dimension.
    pub fn table(&self) -> &CoefficientTable {
        self.tables.last().expect("at least one dimension")
    }

    pub fn into_table(mut self) -> CoefficientTable {
        self.tables.pop().expect("at least one dimension")
    }
}

/// Normalises an unnormalised `(P, Q)` pair by `Q(infinity)` and checks it.
fn finish_table(params: EnsembleParams, pdf: ExpPoly, cdf: ExpPoly) -> Result<CoefficientTable> {
    let total = cdf
        .coeff(0, 0)
        .cloned()
        .ok_or_else(|| Error::Consistency("unnormalised Q has no constant term".into()))?;
    let expected = params.partition_function();
    match expected.as_rational() {
        Some(w) if *w != total => {
            return Err(Error::Consistency(format!(
                "Q(infinity) = {total} but the partition function is {w} (n={}, a={}, beta={})",
                params.n(),
                params.a(),
                params.beta()
            )))
        }
        Some(_) => {}
        None => {
            let digits_bits = 700;
            let w = expected.to_float(digits_bits);
            let rel = (rug::Float::with_val(digits_bits, &w - &total) / &w).abs();
            if rel > 1e-190 {
                return Err(Error::Consistency(format!(
                    "Q(infinity) = {total} disagrees with the partition function {expected}"
                )));
            }
        }
    }
    let inv = Rational::from(total.recip_ref());
    let table = CoefficientTable {
        params,
        pdf: pdf.scale(&inv),
        cdf: cdf.scale(&inv),
    };
    table.check_invariants().into_result()?;
    Ok(table)
}

/// Runs the full recursion for `params`, returning tables for all dimensions
/// up to `params.n()`.
pub fn compute_all_tables(params: &EnsembleParams) -> Result<RecursionOutput> {
    let start = Instant::now();
    let mut stats = RecursionStats::default();
    let mut tables = Vec::with_capacity(params.n() as usize);
    let rate = params.lambda().clone();

    // L_{0,nu}^{(beta)} for the current nu; the empty product at nu = 0.
    let mut full = ExpPoly::constant(rate, Rational::from(1));
    for nu in 0..params.n() {
        let dim = nu + 1;
        let pdf = weighted_integrand(&full, dim, params);
        let cdf = pdf.integrate_from_zero();
        stats.observe(&pdf);
        stats.observe(&cdf);
        tables.push(finish_table(params.with_dimension(dim)?, pdf, cdf.clone())?);

        if dim == params.n() {
            break;
        }
        let mut l = cdf;
        for alpha in 0..params.beta() {
            l = raise_alpha(&l, dim, alpha, params)?;
            stats.recurrence_steps += dim as usize;
            stats.observe(&l);
        }
        full = l;
    }
    stats.elapsed = start.elapsed();
    Ok(RecursionOutput { tables, stats })
}

pub fn compute_tables(params: &EnsembleParams) -> Result<CoefficientTable> {
    Ok(compute_all_tables(params)?.into_table())
}

/// `(-1)^j C(n, j)` as an integer.
pub fn signed_binomial(n: u32, j: u32) -> Integer {
    let b = binomial(n as u64, j as u64);
    if j % 2 == 1 {
        -b
    } else {
        b
    }
}
