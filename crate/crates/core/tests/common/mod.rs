//! Independent reference computations shared by the integration tests.
//!
//! The oracle expands the joint eigenvalue density directly: the weight
//! `x_i^a e^{-beta x_i/2}` times the multivariate polynomial
//! `prod_{i<j} (x_j - x_i)^beta`, integrated one variable at a time with the
//! elementary rule for `int_0^y t^k e^{-mu t} dt`. It shares no code with the
//! recursion engine.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Monomial `prod_i x_i^{e_i} e^{-lambda m_i x_i}` over the eigenvalues plus a
/// final slot for the upper limit `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Monomial {
    exps: Vec<u32>,
    decays: Vec<u32>,
}

type Multi = BTreeMap<Monomial, Rational>;

fn add_term(acc: &mut Multi, key: Monomial, c: Rational) {
    if c == 0 {
        return;
    }
    let entry = acc.entry(key.clone()).or_default();
    *entry += c;
    if *entry == 0 {
        acc.remove(&key);
    }
}

fn fact(k: u32) -> Integer {
    Integer::from(Integer::factorial(k))
}

/// `prod_{i<j} (x_j - x_i)^beta` over `n` variables (plus an idle `x` slot).
fn vandermonde_power(n: usize, beta: u32) -> Multi {
    let mut poly = Multi::new();
    poly.insert(
        Monomial {
            exps: vec![0; n + 1],
            decays: vec![0; n + 1],
        },
        Rational::from(1),
    );
    for i in 0..n {
        for j in i + 1..n {
            for _ in 0..beta {
                let mut next = Multi::new();
                for (m, c) in &poly {
                    let mut up = m.clone();
                    up.exps[j] += 1;
                    add_term(&mut next, up, c.clone());
                    let mut down = m.clone();
                    down.exps[i] += 1;
                    add_term(&mut next, down, Rational::from(-c));
                }
                poly = next;
            }
        }
    }
    poly
}

/// Integrates variable `var` over `[0, x_target]`.
fn integrate(poly: &Multi, var: usize, target: usize, lambda: &Rational) -> Multi {
    let mut out = Multi::new();
    for (m, c) in poly {
        let (k, d) = (m.exps[var], m.decays[var]);
        let mut base = m.clone();
        base.exps[var] = 0;
        base.decays[var] = 0;
        if d == 0 {
            let mut t = base;
            t.exps[target] += k + 1;
            add_term(&mut out, t, Rational::from(c / (k + 1)));
            continue;
        }
        // k!/mu^{k+1} [1 - e^{-mu y} sum_{r<=k} (mu y)^r / r!]
        let mu = Rational::from(lambda * d);
        let front = Rational::from(c * fact(k)) / Rational::from((&mu).pow(k + 1));
        add_term(&mut out, base.clone(), front.clone());
        for r in 0..=k {
            let mut t = base.clone();
            t.exps[target] += r;
            t.decays[target] += d;
            let coeff = -(&front * Rational::from((&mu).pow(r))) / fact(r);
            add_term(&mut out, t, coeff);
        }
    }
    out
}

/// Unnormalised `int_{[0,x]^n} prod_i w(x_i) |Delta|^beta` as `(decay j, power k) -> coeff`
/// for `e^{-j beta x/2} x^k`.
///
/// Odd `beta`: `n!` times the ordered region `x_1 < ... < x_n < x`, where
/// `|Delta|^beta = prod_{i<j} (x_j - x_i)^beta`. Even `beta`: the cube directly.
pub fn brute_force_cdf_unnormalised(n: u32, a: u32, beta: u32) -> BTreeMap<(u32, u32), Rational> {
    let n = n as usize;
    let lambda = Rational::from((beta, 2));
    let mut poly = vandermonde_power(n, beta);
    poly = poly
        .into_iter()
        .map(|(mut m, c)| {
            for i in 0..n {
                m.exps[i] += a;
                m.decays[i] = 1;
            }
            (m, c)
        })
        .collect();
    let ordered = beta % 2 == 1;
    for var in 0..n {
        let target = if ordered { var + 1 } else { n };
        poly = integrate(&poly, var, target, &lambda);
    }
    let scale = if ordered {
        fact(n as u32)
    } else {
        Integer::from(1)
    };
    let mut out = BTreeMap::new();
    for (m, c) in poly {
        let entry: &mut Rational = out.entry((m.decays[n], m.exps[n])).or_default();
        *entry += Rational::from(&c * &scale);
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Normalised CDF coefficients and the normaliser `Q(infinity)`.
pub fn brute_force_cdf(n: u32, a: u32, beta: u32) -> (BTreeMap<(u32, u32), Rational>, Rational) {
    let raw = brute_force_cdf_unnormalised(n, a, beta);
    let total = raw.get(&(0, 0)).cloned().expect("constant term");
    let inv = Rational::from(total.recip_ref());
    let normalised = raw.into_iter().map(|(key, c)| (key, c * &inv)).collect();
    (normalised, total)
}

/// `d/dx` of `sum c_jk x^k e^{-j lambda x}`.
pub fn derivative(f: &BTreeMap<(u32, u32), Rational>, beta: u32) -> BTreeMap<(u32, u32), Rational> {
    let lambda = Rational::from((beta, 2));
    let mut out: BTreeMap<(u32, u32), Rational> = BTreeMap::new();
    for (&(j, k), c) in f {
        if k > 0 {
            *out.entry((j, k - 1)).or_default() += Rational::from(c * k);
        }
        if j > 0 {
            *out.entry((j, k)).or_default() -= Rational::from(c * &lambda) * j;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Tanh-sinh quadrature of `f` over `[0, x]` at `prec` bits.
pub fn tanh_sinh<F: Fn(&Float) -> Float>(f: F, x: &Float, prec: u32, levels: u32) -> Float {
    let half = Float::with_val(prec, x / 2u32);
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let half_pi = Float::with_val(prec, &pi / 2u32);
    let h = Float::with_val(prec, Float::i_exp(1, -(levels as i32)));
    let mut sum = Float::with_val(prec, 0);
    let limit = 6i64 << levels;
    for i in -limit..=limit {
        let t = Float::with_val(prec, &h * i);
        let s = Float::with_val(prec, &half_pi * t.clone().sinh());
        let u = Float::with_val(prec, s.clone().tanh());
        let w =
            Float::with_val(prec, &half_pi * t.cosh()) / Float::with_val(prec, s.cosh().square());
        if w.is_zero() || (Float::with_val(prec, 1 - u.clone().abs())).is_zero() {
            continue;
        }
        let node = Float::with_val(prec, &half * Float::with_val(prec, 1 + &u));
        sum += w * f(&node);
    }
    sum * h * half
}
