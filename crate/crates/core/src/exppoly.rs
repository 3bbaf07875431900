//! Exact exponential-polynomials in one variable,
//! `f(x) = sum_j exp(-j * rate * x) * sum_k q_jk x^k`, with rational `q_jk`.
//!
//! Every intermediate function of the largest-eigenvalue recursion lives in
//! this class, which is closed under the handful of operations below. Terms
//! are stored sparsely keyed by `(j, k)`; zero coefficients are never stored,
//! so structural equality is mathematical equality.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::special::factorial;

/// Minimum working precision accepted by [`ExpPoly::evaluate`].
pub const MIN_PRECISION_DIGITS: u32 = 16;

/// Extra working bits spent recovering from cancellation, for a target of `bits`.
pub fn cancellation_budget(bits: u32) -> u32 {
    (8 * bits).max(4096)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpPoly {
    rate: Rational,
    terms: BTreeMap<(u32, u32), Rational>,
}

impl ExpPoly {
    pub fn zero(rate: Rational) -> Self {
        assert!(rate > 0, "rate unit must be positive");
        ExpPoly {
            rate,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(rate: Rational, value: Rational) -> Self {
        Self::term(rate, 0, 0, value)
    }

    /// The single term `coeff * x^power * exp(-decay * rate * x)`.
    pub fn term(rate: Rational, decay: u32, power: u32, coeff: Rational) -> Self {
        let mut f = Self::zero(rate);
        if coeff != 0 {
            f.terms.insert((decay, power), coeff);
        }
        f
    }

    /// Builds from `((decay, power), coeff)` triples; repeated keys are summed.
    pub fn from_terms<I>(rate: Rational, terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), Rational)>,
    {
        let mut f = Self::zero(rate);
        for (key, c) in terms {
            f.accumulate(key, c);
        }
        f
    }

    pub fn rate(&self) -> &Rational {
        &self.rate
    }

    /// Nonzero terms as `(decay, power, coeff)`, ordered by decay then power.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &Rational)> + '_ {
        self.terms.iter().map(|(&(j, k), c)| (j, k, c))
    }

    pub fn coeff(&self, decay: u32, power: u32) -> Option<&Rational> {
        self.terms.get(&(decay, power))
    }

    /// Number of nonzero terms; see [`ExpPoly::is_zero`] for emptiness.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Distinct decay indices present, increasing.
    pub fn decays(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.terms.keys().map(|&(j, _)| j).collect();
        out.dedup();
        out
    }

    /// Lowest and highest power of `x` in the block with the given decay index.
    pub fn power_range(&self, decay: u32) -> Option<(u32, u32)> {
        let mut block = self.terms.range((decay, 0)..=(decay, u32::MAX));
        let lo = block.next().map(|(&(_, k), _)| k)?;
        let hi = block.next_back().map(|(&(_, k), _)| k).unwrap_or(lo);
        Some((lo, hi))
    }

    /// Largest bit length among all numerators and denominators.
    pub fn max_coeff_bits(&self) -> u32 {
        self.terms
            .values()
            .map(|c| {
                c.numer()
                    .significant_bits()
                    .max(c.denom().significant_bits())
            })
            .max()
            .unwrap_or(0)
    }

    fn check_rate(&self, other: &ExpPoly) -> Result<()> {
        if self.rate != other.rate {
            return Err(Error::Parameter(format!(
                "mismatched rate units {} and {}",
                self.rate, other.rate
            )));
        }
        Ok(())
    }

    fn accumulate(&mut self, key: (u32, u32), value: Rational) {
        if value == 0 {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(e) => {
                e.insert(value);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += value;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    /// `self += factor * x^power * exp(-decay * rate * x) * other`.
    pub fn add_scaled_shifted(
        &mut self,
        other: &ExpPoly,
        factor: &Rational,
        power: u32,
        decay: u32,
    ) -> Result<()> {
        self.check_rate(other)?;
        if *factor == 0 {
            return Ok(());
        }
        for (&(j, k), c) in &other.terms {
            self.accumulate((j + decay, k + power), Rational::from(factor * c));
        }
        Ok(())
    }

    pub fn add(&self, other: &ExpPoly) -> Result<ExpPoly> {
        let mut out = self.clone();
        out.add_scaled_shifted(other, &Rational::from(1), 0, 0)?;
        Ok(out)
    }

    pub fn sub(&self, other: &ExpPoly) -> Result<ExpPoly> {
        let mut out = self.clone();
        out.add_scaled_shifted(other, &Rational::from(-1), 0, 0)?;
        Ok(out)
    }

    pub fn scale(&self, factor: &Rational) -> ExpPoly {
        if *factor == 0 {
            return Self::zero(self.rate.clone());
        }
        ExpPoly {
            rate: self.rate.clone(),
            terms: self
                .terms
                .iter()
                .map(|(&key, c)| (key, Rational::from(factor * c)))
                .collect(),
        }
    }

    /// `x^power * exp(-decay * rate * x) * f(x)`.
    pub fn mul_monomial(&self, power: u32, decay: u32) -> ExpPoly {
        ExpPoly {
            rate: self.rate.clone(),
            terms: self
                .terms
                .iter()
                .map(|(&(j, k), c)| ((j + decay, k + power), c.clone()))
                .collect(),
        }
    }

    pub fn differentiate(&self) -> ExpPoly {
        let mut out = Self::zero(self.rate.clone());
        for (&(j, k), c) in &self.terms {
            if k > 0 {
                out.accumulate((j, k - 1), Rational::from(c * k));
            }
            if j > 0 {
                let mu = Rational::from(&self.rate * j);
                out.accumulate((j, k), -(mu * c));
            }
        }
        out
    }

    /// `F(x) = int_0^x f(s) ds`.
    ///
    /// For a decaying term with `mu = j * rate`,
    /// `int_0^x s^k e^{-mu s} ds = k!/mu^{k+1} [1 - e^{-mu x} sum_{r<=k} (mu x)^r / r!]`;
    /// the non-decaying block uses the power rule.
    pub fn integrate_from_zero(&self) -> ExpPoly {
        let mut out = Self::zero(self.rate.clone());
        for (&(j, k), c) in &self.terms {
            if j == 0 {
                out.accumulate((0, k + 1), Rational::from(c / (k + 1)));
                continue;
            }
            let mu = Rational::from(&self.rate * j);
            // t_r = c k! / (r! mu^{k+1-r}), generated downward from t_k = c / mu.
            let mut t = Rational::from(c / &mu);
            for r in (0..=k).rev() {
                out.accumulate((j, r), -t.clone());
                if r > 0 {
                    t *= r;
                    t /= &mu;
                }
            }
            out.accumulate((0, 0), t);
        }
        out
    }

    /// Digits used by [`ExpPoly::evaluate_default`]: at least 64, and twice
    /// the decimal length of the largest stored numerator or denominator.
    pub fn default_precision_digits(&self) -> u32 {
        let digits = (self.max_coeff_bits() as f64 * std::f64::consts::LOG10_2).ceil() as u32 + 1;
        64.max(2 * digits)
    }

    /// Numeric value at `x` to `digits` significant digits, and in any case
    /// with absolute error below `10^(-digits/2)`.
    ///
    /// Each polynomial block is summed exactly in rational arithmetic; only the
    /// exponentials are approximated. The working precision starts wide enough
    /// for the largest block and grows while cancellation leaves fewer correct
    /// bits than requested, by at most [`cancellation_budget`]; a value still
    /// unresolved at that point is smaller than the error bound and returned as 0.
    pub fn evaluate(&self, x: &Rational, digits: u32) -> Result<Float> {
        self.evaluator().evaluate(x, digits)
    }

    pub fn evaluate_default(&self, x: &Rational) -> Float {
        self.evaluate(x, self.default_precision_digits())
            .expect("default precision is above the minimum")
    }

    /// Precomputes integer forms of each block for repeated evaluation.
    pub fn evaluator(&self) -> ExpPolyEvaluator {
        let mut blocks = Vec::new();
        for decay in self.decays() {
            let (_, hi) = self.power_range(decay).expect("block is nonempty");
            let block: Vec<(u32, &Rational)> = self
                .terms
                .range((decay, 0)..=(decay, hi))
                .map(|(&(_, k), c)| (k, c))
                .collect();
            let mut denom = Integer::from(1);
            for (_, c) in &block {
                denom.lcm_mut(c.denom());
            }
            let mut numers = vec![Integer::new(); hi as usize + 1];
            for (k, c) in block {
                numers[k as usize] = Integer::from(&denom / c.denom()) * c.numer();
            }
            blocks.push(Block {
                decay,
                denom,
                numers,
            });
        }
        ExpPolyEvaluator {
            rate: self.rate.clone(),
            blocks,
            default_digits: self.default_precision_digits(),
        }
    }
}

struct Block {
    decay: u32,
    denom: Integer,
    numers: Vec<Integer>,
}

impl Block {
    /// Exact block polynomial at `x`.
    fn value(&self, x: &Rational) -> Rational {
        let (u, v) = (x.numer(), x.denom());
        let deg = self.numers.len() - 1;
        let mut acc = self.numers[deg].clone();
        let mut vpow = Integer::from(1);
        for k in (0..deg).rev() {
            vpow *= v;
            acc *= u;
            acc += Integer::from(&self.numers[k] * &vpow);
        }
        Rational::from((acc, Integer::from(&self.denom * &vpow)))
    }
}

/// A compiled [`ExpPoly`] for fast repeated evaluation.
pub struct ExpPolyEvaluator {
    rate: Rational,
    blocks: Vec<Block>,
    default_digits: u32,
}

fn log2_magnitude(q: &Rational) -> i64 {
    if *q == 0 {
        return i64::MIN / 4;
    }
    q.numer().significant_bits() as i64 - q.denom().significant_bits() as i64 + 1
}

impl ExpPolyEvaluator {
    pub fn default_precision_digits(&self) -> u32 {
        self.default_digits
    }

    pub fn evaluate(&self, x: &Rational, digits: u32) -> Result<Float> {
        if digits < MIN_PRECISION_DIGITS {
            return Err(Error::Parameter(format!(
                "precision of {digits} digits is below the minimum of {MIN_PRECISION_DIGITS}"
            )));
        }
        let bits = (digits as f64 / std::f64::consts::LOG10_2).ceil() as u32 + 16;
        let parts: Vec<(Rational, Rational)> = self
            .blocks
            .iter()
            .map(|b| {
                let arg = Rational::from(&self.rate * b.decay) * x;
                (b.value(x), arg)
            })
            .collect();
        let headroom = parts
            .iter()
            .map(|(v, arg)| log2_magnitude(v).max(0) + log2_magnitude(arg).max(0))
            .max()
            .unwrap_or(0);
        // log2 of the largest |v e^{-arg}|: the rounding error of the sum is
        // a small multiple of this times 2^-work.
        let largest = parts
            .iter()
            .filter(|(v, _)| *v != 0)
            .map(|(v, arg)| {
                log2_magnitude(v) - (arg.to_f64() * std::f64::consts::LOG2_E).floor() as i64
            })
            .max();
        let Some(largest) = largest else {
            return Ok(Float::with_val(bits, 0));
        };
        let slack = 64 - (parts.len() as u64).leading_zeros() as i64 + 4;
        let base = bits + headroom as u32 + 64;
        let cap = base + cancellation_budget(bits);
        let mut work = base;
        loop {
            let sum = self.sum_at(&parts, work);
            if parts.iter().all(|(v, arg)| *v == 0 || *arg == 0) {
                return Ok(Float::with_val(bits, sum));
            }
            // bits of the result that are certainly correct
            let exp = sum.get_exp().map(i64::from).unwrap_or(i64::MIN / 4);
            let good = exp - (largest - work as i64 + slack);
            if good >= bits as i64 {
                return Ok(Float::with_val(bits, sum));
            }
            if work >= cap {
                // |f(x)| is below the rounding bound; report it as zero rather than noise
                let value = if good > 0 { sum } else { Float::new(bits) };
                return Ok(Float::with_val(bits, value));
            }
            let deficit = (bits as i64 - good).max(64) as u32;
            work = work.saturating_add(deficit).min(cap);
        }
    }

    fn sum_at(&self, parts: &[(Rational, Rational)], work: u32) -> Float {
        let mut exact = Rational::new();
        let mut sum = Float::with_val(work, 0);
        for (value, arg) in parts {
            if *value == 0 {
                continue;
            }
            if *arg == 0 {
                exact += value;
            } else {
                let e = (-Float::with_val(work, arg)).exp();
                sum += e * value;
            }
        }
        sum += &exact;
        sum
    }

    pub fn evaluate_default(&self, x: &Rational) -> Float {
        self.evaluate(x, self.default_digits)
            .expect("default precision is above the minimum")
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(j, k), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            match k {
                0 => {}
                1 => write!(f, "*x")?,
                _ => write!(f, "*x^{k}")?,
            }
            if j > 0 {
                write!(f, "*exp(-{}*x)", Rational::from(&self.rate * j))?;
            }
        }
        Ok(())
    }
}

/// `k! / mu^{k+1}`: the value of `int_0^inf s^k e^{-mu s} ds`.
pub fn laplace_moment(k: u32, mu: &Rational) -> Rational {
    Rational::from(factorial(k)) / Rational::from(rug::ops::Pow::pow(mu, k as i32 + 1))
}
