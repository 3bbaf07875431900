//! Closed-form laws built from a [`CoefficientTable`]: the largest-eigenvalue
//! PDF/CDF of the unrestricted ensemble, the largest-eigenvalue PDF/CDF of the
//! fixed-trace ensemble, and the Landauer conductance density.
//!
//! Because `gamma` is an integer, the fixed-trace and conductance laws are
//! exact piecewise polynomials with rational coefficients, breaking at
//! `y = 1/j` and `g = j` respectively.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::recursion::{compute_tables, CoefficientTable, EnsembleParams};
use crate::special::{binomial, factorial, gamma_half};

/// Dense polynomial coefficients, lowest power first, no trailing zeros.
pub type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(|c| *c == 0) {
        p.pop();
    }
    p
}

fn add_into(acc: &mut Poly, other: &[Rational]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), Rational::new());
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

fn horner(p: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::new();
    for c in p.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

fn derivative(p: &[Rational]) -> Poly {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| Rational::from(c * k as u32))
            .collect(),
    )
}

/// Antiderivative vanishing at zero.
fn antiderivative(p: &[Rational]) -> Poly {
    let mut out = vec![Rational::new()];
    out.extend(
        p.iter()
            .enumerate()
            .map(|(k, c)| Rational::from(c / (k as u32 + 1))),
    );
    trim(out)
}

/// A function that is polynomial on each `[b_i, b_{i+1})` (the last piece is
/// closed at the top of the support) and constant outside the support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewisePoly {
    breakpoints: Vec<Rational>,
    pieces: Vec<Poly>,
    below: Rational,
    above: Rational,
}

impl PiecewisePoly {
    pub fn new(breakpoints: Vec<Rational>, pieces: Vec<Poly>) -> Result<Self> {
        Self::with_tails(breakpoints, pieces, Rational::new(), Rational::new())
    }

    /// As [`PiecewisePoly::new`], with constant values left and right of the support.
    pub fn with_tails(
        breakpoints: Vec<Rational>,
        pieces: Vec<Poly>,
        below: Rational,
        above: Rational,
    ) -> Result<Self> {
        if breakpoints.len() != pieces.len() + 1 || pieces.is_empty() {
            return Err(Error::Parameter(format!(
                "{} breakpoints cannot bound {} pieces",
                breakpoints.len(),
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "breakpoints must increase strictly".into(),
            ));
        }
        Ok(PiecewisePoly {
            breakpoints,
            pieces: pieces.into_iter().map(trim).collect(),
            below,
            above,
        })
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn support(&self) -> (&Rational, &Rational) {
        (
            &self.breakpoints[0],
            self.breakpoints.last().expect("nonempty"),
        )
    }

    pub fn degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// Index of the piece owning `y`, or `None` outside the support.
    pub fn piece_index(&self, y: &Rational) -> Option<usize> {
        let (lo, hi) = self.support();
        if y < lo || y > hi {
            return None;
        }
        let i = self.breakpoints.partition_point(|b| b <= y);
        Some((i - 1).min(self.pieces.len() - 1))
    }

    pub fn eval(&self, y: &Rational) -> Rational {
        match self.piece_index(y) {
            Some(i) => horner(&self.pieces[i], y),
            None if y < self.support().0 => self.below.clone(),
            None => self.above.clone(),
        }
    }

    pub fn eval_f64(&self, y: f64) -> f64 {
        let y = Rational::from_f64(y).expect("finite argument");
        self.eval(&y).to_f64()
    }

    /// Value at `y` rounded to `digits` significant decimal digits.
    pub fn eval_float(&self, y: &Rational, digits: u32) -> Float {
        let bits = (digits as f64 / std::f64::consts::LOG10_2).ceil() as u32 + 8;
        Float::with_val(bits, self.eval(y))
    }

    /// Exact integral over the support.
    pub fn integrate_exact(&self) -> Rational {
        self.pieces
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(p, w)| {
                let f = antiderivative(p);
                horner(&f, &w[1]) - horner(&f, &w[0])
            })
            .sum()
    }

    pub fn derivative(&self) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| derivative(p)).collect(),
            below: Rational::new(),
            above: Rational::new(),
        }
    }

    /// The running integral from the bottom of the support, continuous across
    /// breakpoints; equals [`PiecewisePoly::integrate_exact`] above the support.
    pub fn cumulative(&self) -> PiecewisePoly {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        let mut carried = Rational::new();
        for (p, w) in self.pieces.iter().zip(self.breakpoints.windows(2)) {
            let mut f = antiderivative(p);
            let shift = &carried - horner(&f, &w[0]);
            if f.is_empty() {
                f.push(Rational::new());
            }
            f[0] += shift;
            carried = horner(&f, &w[1]);
            pieces.push(trim(f));
        }
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces,
            below: Rational::new(),
            above: carried,
        }
    }

    /// `right limit - left limit` at every interior breakpoint.
    pub fn jumps(&self) -> Vec<Rational> {
        (1..self.pieces.len())
            .map(|i| {
                let b = &self.breakpoints[i];
                horner(&self.pieces[i], b) - horner(&self.pieces[i - 1], b)
            })
            .collect()
    }
}

/// A fixed-trace largest-eigenvalue law.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixedTraceLaw {
    /// `n = 1`: the single eigenvalue equals the trace, so all mass sits at `y = 1`.
    PointMassAtOne,
    Piecewise(PiecewisePoly),
}

impl FixedTraceLaw {
    pub fn piecewise(&self) -> Option<&PiecewisePoly> {
        match self {
            FixedTraceLaw::Piecewise(p) => Some(p),
            FixedTraceLaw::PointMassAtOne => None,
        }
    }
}

fn check_domain(x: &Rational) -> Result<()> {
    if *x < 0 {
        return Err(Error::Domain(format!(
            "largest eigenvalue laws are supported on x >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Largest-eigenvalue density `P(x)` at `digits` decimal digits.
pub fn eval_pdf(table: &CoefficientTable, x: &Rational, digits: u32) -> Result<Float> {
    check_domain(x)?;
    table.pdf().evaluate(x, digits)
}

/// Largest-eigenvalue distribution function `Q(x)` at `digits` decimal digits.
pub fn eval_cdf(table: &CoefficientTable, x: &Rational, digits: u32) -> Result<Float> {
    check_domain(x)?;
    table.cdf().evaluate(x, digits)
}

/// `Gamma(gamma) / Gamma(gamma - shift)`, or zero when `gamma - shift` is a pole.
fn gamma_ratio(gamma: u64, shift: u64) -> Integer {
    if shift >= gamma {
        return Integer::new();
    }
    factorial((gamma - 1) as u32) / factorial((gamma - shift - 1) as u32)
}

/// `coeff * y^k * (1 - j y)^e` expanded in powers of `y`, added into `acc`.
fn add_scaled_binomial(acc: &mut Poly, coeff: &Rational, k: u64, j: u64, e: u64) {
    let len = (k + e + 1) as usize;
    if acc.len() < len {
        acc.resize(len, Rational::new());
    }
    let minus_j = -Integer::from(j);
    let mut jpow = Integer::from(1);
    for i in 0..=e {
        if i > 0 {
            jpow *= &minus_j;
            if jpow == 0 {
                break;
            }
        }
        let c = binomial(e, i) * &jpow;
        acc[(k + i) as usize] += Rational::from(coeff * c);
    }
}

/// `coeff * (g - j)^e` expanded in powers of `g`, added into `acc`.
fn add_scaled_shifted_power(acc: &mut Poly, coeff: &Rational, j: u64, e: u64) {
    let len = (e + 1) as usize;
    if acc.len() < len {
        acc.resize(len, Rational::new());
    }
    let minus_j = -Integer::from(j);
    for i in 0..=e {
        // g^i (-j)^{e-i} C(e, i)
        let c = binomial(e, i) * Integer::from((&minus_j).pow((e - i) as u32));
        acc[i as usize] += Rational::from(coeff * c);
    }
}

/// Which unrestricted coefficients feed a fixed-trace law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FixedTraceKind {
    Density,
    Distribution,
}

/// Polynomial contribution of decay block `j`:
/// density terms `(2/beta) Gamma(gamma)/Gamma(gamma-k-1) c_jk (2y/beta)^k (1-jy)^{gamma-k-2}`,
/// distribution terms `Gamma(gamma)/Gamma(gamma-k) d_jk (2y/beta)^k (1-jy)^{gamma-k-1}`.
fn fixed_trace_block(table: &CoefficientTable, kind: FixedTraceKind, j: u32) -> Result<Poly> {
    let params = table.params();
    let gamma = params.gamma();
    let inv_lambda = Rational::from(params.lambda().recip_ref());
    let (source, shift) = match kind {
        FixedTraceKind::Density => (table.pdf(), 1u64),
        FixedTraceKind::Distribution => (table.cdf(), 0u64),
    };
    let mut acc = Poly::new();
    for (jj, k, coeff) in source.terms() {
        if jj != j {
            continue;
        }
        let k = k as u64;
        // n >= 2 here, where k <= ja + j(n-j)beta <= gamma - 2 on any valid table
        if k + shift + 1 > gamma && *coeff != 0 {
            return Err(Error::Consistency(format!(
                "negative exponent gamma-k-{} in the fixed-trace law (gamma={gamma}, k={k})",
                shift + 1
            )));
        }
        let ratio = gamma_ratio(gamma, k + shift);
        if ratio == 0 {
            continue;
        }
        let mut c = inv_lambda.clone().pow(k as i32) * ratio * coeff;
        if kind == FixedTraceKind::Density {
            c *= &inv_lambda;
        }
        add_scaled_binomial(&mut acc, &c, k, j as u64, gamma - k - shift - 1);
    }
    Ok(trim(acc))
}

/// Sum of the fixed-trace blocks `j = 0..=max_active`: the law on the
/// interval where exactly those step functions are switched on.
pub fn fixed_trace_active_sum(
    table: &CoefficientTable,
    density: bool,
    max_active: u32,
) -> Result<Poly> {
    let kind = if density {
        FixedTraceKind::Density
    } else {
        FixedTraceKind::Distribution
    };
    let mut acc = Poly::new();
    for j in 0..=max_active.min(table.params().n()) {
        add_into(&mut acc, &fixed_trace_block(table, kind, j)?);
    }
    Ok(trim(acc))
}

fn fixed_trace_law(table: &CoefficientTable, kind: FixedTraceKind) -> Result<FixedTraceLaw> {
    let n = table.params().n();
    if n == 1 {
        return Ok(FixedTraceLaw::PointMassAtOne);
    }
    let density = kind == FixedTraceKind::Density;
    let blocks: Vec<Poly> = (0..=n)
        .map(|j| fixed_trace_block(table, kind, j))
        .collect::<Result<_>>()?;

    // Every step function is on below y = 1/n, where the law must vanish.
    let mut all = Poly::new();
    for b in &blocks {
        add_into(&mut all, b);
    }
    if !trim(all).is_empty() {
        return Err(Error::Consistency(
            "fixed-trace law does not vanish below y = 1/n".into(),
        ));
    }

    // Breakpoints 1/n < 1/(n-1) < ... < 1/2 < 1; on [1/(i+1), 1/i) blocks j <= i are on.
    let breakpoints: Vec<Rational> = (1..=n).rev().map(|j| Rational::from((1, j))).collect();
    let mut pieces = Vec::with_capacity(n as usize - 1);
    let mut acc = Poly::new();
    let mut by_active = Vec::new();
    for b in &blocks[..n as usize] {
        add_into(&mut acc, b);
        by_active.push(trim(acc.clone()));
    }
    for i in (1..n).rev() {
        pieces.push(by_active[i as usize].clone());
    }
    let above = if density {
        Rational::new()
    } else {
        Rational::from(1)
    };
    Ok(FixedTraceLaw::Piecewise(PiecewisePoly::with_tails(
        breakpoints,
        pieces,
        Rational::new(),
        above,
    )?))
}

/// Density of the largest eigenvalue of the fixed-trace ensemble on `[1/n, 1]`.
pub fn fixed_trace_pdf(table: &CoefficientTable) -> Result<FixedTraceLaw> {
    fixed_trace_law(table, FixedTraceKind::Density)
}

/// Distribution function of the largest fixed-trace eigenvalue; 0 below
/// `1/n` and 1 from `y = 1` on.
pub fn fixed_trace_cdf(table: &CoefficientTable) -> Result<FixedTraceLaw> {
    fixed_trace_law(table, FixedTraceKind::Distribution)
}

/// Channel counts of a two-lead cavity and the Jacobi parameters they induce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConductanceSetup {
    pub n1: u32,
    pub n2: u32,
    pub beta: u32,
    params: EnsembleParams,
}

impl ConductanceSetup {
    /// `n = min(n1, n2)`, `m = max(n1, n2)`, `a = beta (m - n + 1)/2 - 1`.
    pub fn new(n1: u32, n2: u32, beta: u32) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Parameter(
                "both leads need at least one channel".into(),
            ));
        }
        if !matches!(beta, 1 | 2 | 4) {
            return Err(Error::Parameter(format!(
                "circular ensembles exist for beta in {{1, 2, 4}}, got {beta}"
            )));
        }
        let (n, m) = (n1.min(n2), n1.max(n2));
        let twice_a = beta as i64 * (m - n + 1) as i64 - 2;
        if twice_a < 0 || twice_a % 2 != 0 {
            return Err(Error::Unsupported(format!(
                "a = {twice_a}/2 is not a non-negative integer; for beta = 1 \
                 the channel numbers must differ by an odd integer (|n1 - n2| = {})",
                m - n
            )));
        }
        let params = EnsembleParams::new(n, (twice_a / 2) as u32, beta)?;
        Ok(ConductanceSetup {
            n1,
            n2,
            beta,
            params,
        })
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    /// `K = prod_{l<n} Gamma(a + beta(n + l - 1)/2 + 2) / Gamma(beta l/2 + 1)`.
    pub fn k_constant(&self) -> Result<Rational> {
        let p = &self.params;
        let (n, a, b) = (p.n() as u64, p.a() as u64, p.beta() as u64);
        let mut k = crate::special::SqrtPiMultiple::one();
        for l in 0..n {
            k = k * gamma_half(2 * a + b * (n + l - 1) + 4) / gamma_half(b * l + 2);
        }
        k.as_rational()
            .cloned()
            .ok_or_else(|| Error::Consistency(format!("conductance constant {k} is not rational")))
    }
}

/// Exact Landauer conductance density on `[0, n]` for the given leads.
pub fn conductance_pdf(n1: u32, n2: u32, beta: u32) -> Result<PiecewisePoly> {
    let setup = ConductanceSetup::new(n1, n2, beta)?;
    let table = compute_tables(setup.params())?;
    conductance_pdf_from_table(&setup, &table)
}

/// `P_g(g) = K sum_j Theta(g - j) sum_k d_jk / Gamma(gamma - k) (2/beta)^k (g - j)^{gamma-k-1}`.
pub fn conductance_pdf_from_table(
    setup: &ConductanceSetup,
    table: &CoefficientTable,
) -> Result<PiecewisePoly> {
    if table.params() != setup.params() {
        return Err(Error::Parameter(
            "coefficient table does not match the lead configuration".into(),
        ));
    }
    let params = setup.params();
    let (n, gamma) = (params.n(), params.gamma());
    let k_const = setup.k_constant()?;
    let inv_lambda = Rational::from(params.lambda().recip_ref());

    let mut blocks: Vec<Poly> = vec![Poly::new(); n as usize + 1];
    for (j, k, d) in table.cdf().terms() {
        let k = k as u64;
        if k >= gamma {
            continue; // 1/Gamma at a pole
        }
        let c = inv_lambda.clone().pow(k as i32) * &k_const * d
            / Rational::from(factorial((gamma - k - 1) as u32));
        add_scaled_shifted_power(&mut blocks[j as usize], &c, j as u64, gamma - k - 1);
    }

    let mut acc = Poly::new();
    let mut pieces = Vec::with_capacity(n as usize);
    for (j, b) in blocks.iter().enumerate() {
        add_into(&mut acc, b);
        if j < n as usize {
            pieces.push(trim(acc.clone()));
        }
    }
    if !trim(acc).is_empty() {
        return Err(Error::Consistency(
            "conductance density does not vanish for g > n".into(),
        ));
    }
    let breakpoints = (0..=n).map(Rational::from).collect();
    PiecewisePoly::new(breakpoints, pieces)
}

/// Distribution function of the conductance.
pub fn conductance_cdf(n1: u32, n2: u32, beta: u32) -> Result<PiecewisePoly> {
    Ok(conductance_pdf(n1, n2, beta)?.cumulative())
}

/// `(K / Gamma(gamma)) g^{gamma-1} Q_F(1/g)`, the conductance density via the
/// fixed-trace distribution function.
pub fn conductance_via_fixed_trace(
    setup: &ConductanceSetup,
    table: &CoefficientTable,
    g: &Rational,
) -> Result<Rational> {
    if *g <= 0 {
        return Err(Error::Domain("conductance must be positive here".into()));
    }
    let gamma = setup.params().gamma();
    let inv_g = Rational::from(g.recip_ref());
    let q_f = match fixed_trace_cdf(table)? {
        FixedTraceLaw::PointMassAtOne => match inv_g.cmp(&Rational::from(1)) {
            Ordering::Less => Rational::new(),
            _ => Rational::from(1),
        },
        FixedTraceLaw::Piecewise(p) => p.eval(&inv_g),
    };
    Ok(
        setup.k_constant()? / Rational::from(factorial((gamma - 1) as u32))
            * Rational::from(g.pow(gamma as i32 - 1))
            * q_f,
    )
}
