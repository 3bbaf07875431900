//! Stochastic cross-checks: largest eigenvalues of Wishart-Laguerre matrices
//! (dense Gaussian and bidiagonal beta-models), their trace-normalised
//! versions, and Landauer conductances of circular-ensemble scattering
//! matrices, plus Kolmogorov-Smirnov tests against the exact laws.
//!
//! Draws are split into fixed-size chunks, each with its own ChaCha stream
//! derived from the master seed, so results do not depend on thread count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use rug::{Float, Rational};

use crate::distributions::PiecewisePoly;
use crate::error::{Error, Result};
use crate::exppoly::ExpPoly;
use crate::recursion::EnsembleParams;

/// Draws per independent random stream.
const CHUNK: usize = 2048;

/// `c(alpha)` of the asymptotic KS critical value `c / sqrt(N)` at alpha ~ 0.01.
pub const KS_COEFFICIENT: f64 = 1.63;

/// Tolerance for the per-sample scattering-matrix identities.
pub const SMATRIX_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SamplerId {
    WishartDenseB1,
    WishartDenseB2,
    WishartDenseB4,
    LaguerreBidiagonal,
    FixedTraceScaled,
    SmatrixCoe,
    SmatrixCue,
    SmatrixCse,
}

impl SamplerId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerId::WishartDenseB1 => "wishart_dense_b1",
            SamplerId::WishartDenseB2 => "wishart_dense_b2",
            SamplerId::WishartDenseB4 => "wishart_dense_b4",
            SamplerId::LaguerreBidiagonal => "laguerre_bidiagonal_general_b",
            SamplerId::FixedTraceScaled => "fixed_trace_scaled",
            SamplerId::SmatrixCoe => "smatrix_coe",
            SamplerId::SmatrixCue => "smatrix_cue",
            SamplerId::SmatrixCse => "smatrix_cse",
        }
    }
}

/// Monte Carlo draws with enough provenance to regenerate them.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub sampler: SamplerId,
    pub seed: u64,
    pub count: usize,
}

/// How Wishart-Laguerre eigenvalues are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WishartMethod {
    /// `G G^dagger` with Gaussian real/complex/quaternion `G`; needs beta in {1, 2, 4}
    /// and an integer column count.
    Dense,
    /// Tridiagonal beta-Laguerre model with chi-distributed entries; any integer beta.
    Bidiagonal,
    /// Dense when possible, otherwise bidiagonal.
    Auto,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for chunk `index` of the stream seeded by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(1))))
}

fn parallel_draws<F>(count: usize, seed: u64, draw: F) -> Result<Vec<f64>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len)
                .map(|_| draw(&mut rng))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::Parameter("sample count must be positive".into()));
    }
    Ok(())
}

/// Column count `m` with `a = beta (m - n + 1)/2 - 1`, when it is an integer.
pub fn dense_columns(params: &EnsembleParams) -> Option<u32> {
    let twice = 2 * (params.a() + 1);
    if !matches!(params.beta(), 1 | 2 | 4) || !twice.is_multiple_of(params.beta()) {
        return None;
    }
    Some(twice / params.beta() + params.n() - 1)
}

fn resolve_method(
    params: &EnsembleParams,
    method: WishartMethod,
) -> Result<(WishartMethod, SamplerId)> {
    let dense_id = match params.beta() {
        1 => Some(SamplerId::WishartDenseB1),
        2 => Some(SamplerId::WishartDenseB2),
        4 => Some(SamplerId::WishartDenseB4),
        _ => None,
    };
    let dense_ok = dense_id.is_some() && dense_columns(params).is_some();
    match method {
        WishartMethod::Dense if !dense_ok => Err(Error::Parameter(format!(
            "no Gaussian matrix model has beta = {} and a = {}; use the bidiagonal sampler",
            params.beta(),
            params.a()
        ))),
        WishartMethod::Dense => Ok((WishartMethod::Dense, dense_id.unwrap())),
        WishartMethod::Auto if dense_ok => Ok((WishartMethod::Dense, dense_id.unwrap())),
        _ => Ok((WishartMethod::Bidiagonal, SamplerId::LaguerreBidiagonal)),
    }
}

fn gaussian_complex(rng: &mut ChaCha8Rng, sd: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Largest eigenvalue and trace of `G G^dagger` for an `n x m` Gaussian `G`
/// whose real components have variance `1/beta`.
fn dense_draw(n: usize, m: usize, beta: u32, rng: &mut ChaCha8Rng) -> (f64, f64) {
    match beta {
        1 => {
            let g = DMatrix::<f64>::from_fn(n, m, |_, _| rng.sample(StandardNormal));
            let w = &g * g.transpose();
            let ev = w.symmetric_eigenvalues();
            (ev.max(), w.trace())
        }
        2 => {
            let sd = 0.5f64.sqrt();
            let g = DMatrix::<Complex64>::from_fn(n, m, |_, _| gaussian_complex(rng, sd));
            let w = &g * g.adjoint();
            let ev = w.symmetric_eigenvalues();
            (ev.max(), w.trace().re)
        }
        4 => {
            // quaternion q0 + q1 i + q2 j + q3 k as [[q0 + i q1, q2 + i q3], [-q2 + i q3, q0 - i q1]]
            let sd = 0.5;
            let mut g = DMatrix::<Complex64>::zeros(2 * n, 2 * m);
            for r in 0..n {
                for c in 0..m {
                    let u = gaussian_complex(rng, sd);
                    let v = gaussian_complex(rng, sd);
                    g[(2 * r, 2 * c)] = u;
                    g[(2 * r, 2 * c + 1)] = v;
                    g[(2 * r + 1, 2 * c)] = -v.conj();
                    g[(2 * r + 1, 2 * c + 1)] = u.conj();
                }
            }
            let w = &g * g.adjoint();
            let ev = w.symmetric_eigenvalues();
            (ev.max(), w.trace().re / 2.0)
        }
        _ => unreachable!("dense sampling is only defined for beta in {{1, 2, 4}}"),
    }
}

fn chi(dof: f64, rng: &mut ChaCha8Rng) -> f64 {
    ChiSquared::new(dof)
        .expect("positive degrees of freedom")
        .sample(rng)
        .sqrt()
}

/// Largest eigenvalue and trace from the bidiagonal model `B B^T / beta`,
/// `B` lower bidiagonal with diagonal `chi_{2a + 2 + beta(n-i)}` and
/// subdiagonal `chi_{beta(n-i)}`, `i = 1..n`.
fn bidiagonal_draw(n: usize, a: u32, beta: u32, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let b = beta as f64;
    let diag: Vec<f64> = (1..=n)
        .map(|i| chi(2.0 * a as f64 + 2.0 + b * (n - i) as f64, rng))
        .collect();
    let sub: Vec<f64> = (1..n).map(|i| chi(b * (n - i) as f64, rng)).collect();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let lower = if i > 0 { sub[i - 1] } else { 0.0 };
        t[(i, i)] = (diag[i] * diag[i] + lower * lower) / b;
        if i + 1 < n {
            let off = diag[i] * sub[i] / b;
            t[(i, i + 1)] = off;
            t[(i + 1, i)] = off;
        }
    }
    let ev = t.symmetric_eigenvalues();
    (ev.max(), t.trace())
}

fn wishart_draws(
    params: &EnsembleParams,
    count: usize,
    seed: u64,
    method: WishartMethod,
    scaled: bool,
) -> Result<(Vec<f64>, SamplerId)> {
    check_count(count)?;
    let (method, id) = resolve_method(params, method)?;
    let (n, a, beta) = (params.n() as usize, params.a(), params.beta());
    let m = dense_columns(params).unwrap_or(0) as usize;
    let values = parallel_draws(count, seed, |rng| {
        let (largest, trace) = match method {
            WishartMethod::Dense => dense_draw(n, m, beta, rng),
            _ => bidiagonal_draw(n, a, beta, rng),
        };
        Ok(if scaled {
            if n == 1 {
                1.0
            } else {
                largest / trace
            }
        } else {
            largest
        })
    })?;
    Ok((values, id))
}

/// Largest eigenvalues of the unrestricted ensemble.
pub fn sample_wishart_largest(
    params: &EnsembleParams,
    count: usize,
    seed: u64,
    method: WishartMethod,
) -> Result<SampleBatch> {
    let (values, sampler) = wishart_draws(params, count, seed, method, false)?;
    Ok(SampleBatch {
        values,
        sampler,
        seed,
        count,
    })
}

/// Largest eigenvalue divided by the trace; the fixed-trace largest eigenvalue.
pub fn sample_fixed_trace_largest(
    params: &EnsembleParams,
    count: usize,
    seed: u64,
    method: WishartMethod,
) -> Result<SampleBatch> {
    let (values, _) = wishart_draws(params, count, seed, method, true)?;
    Ok(SampleBatch {
        values,
        sampler: SamplerId::FixedTraceScaled,
        seed,
        count,
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<Complex64> {
    let normal = Normal::new(0.0, 0.5f64.sqrt()).expect("valid deviation");
    let z = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// `J = I (x) [[0, 1], [-1, 0]]`, the symplectic unit of quaternion duality.
fn symplectic_unit(quaternion_dim: usize) -> DMatrix<Complex64> {
    let mut j = DMatrix::<Complex64>::zeros(2 * quaternion_dim, 2 * quaternion_dim);
    for i in 0..quaternion_dim {
        j[(2 * i, 2 * i + 1)] = Complex64::new(1.0, 0.0);
        j[(2 * i + 1, 2 * i)] = Complex64::new(-1.0, 0.0);
    }
    j
}

/// Quaternion dual `J U^T J^T`.
fn quaternion_dual(u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let j = symplectic_unit(u.nrows() / 2);
    &j * u.transpose() * j.transpose()
}

/// Scattering matrix on `channels` channels from the circular ensemble of
/// index `beta`: COE `U^T U`, CUE `U`, CSE `U^D U` (a `2 channels` square complex
/// matrix of 2x2 quaternion blocks).
pub fn sample_smatrix<R: Rng>(
    channels: usize,
    beta: u32,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    match beta {
        1 => {
            let u = haar_unitary(channels, rng);
            Ok(u.transpose() * u)
        }
        2 => Ok(haar_unitary(channels, rng)),
        4 => {
            let u = haar_unitary(2 * channels, rng);
            Ok(quaternion_dual(&u) * u)
        }
        _ => Err(Error::Parameter(format!(
            "no circular ensemble with beta = {beta}"
        ))),
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Worst deviation from unitarity and from the ensemble's symmetry
/// (`S = S^T` for COE, `S = S^D` for CSE).
pub fn smatrix_defects(s: &DMatrix<Complex64>, beta: u32) -> (f64, f64) {
    let dim = s.nrows();
    let unitarity = max_abs(&(s * s.adjoint() - DMatrix::<Complex64>::identity(dim, dim)));
    let symmetry = match beta {
        1 => max_abs(&(s - s.transpose())),
        4 => max_abs(&(s - quaternion_dual(s))),
        _ => 0.0,
    };
    (unitarity, symmetry)
}

/// Conductance computed two ways: `tr(P1 S P2 S^dagger)` with the lead
/// projectors, and the sum of eigenvalues of `t^dagger t`. Also returns the
/// transmission eigenvalues (each quaternion pair counted once for `beta = 4`).
pub fn conductance_forms(
    s: &DMatrix<Complex64>,
    n1: usize,
    n2: usize,
    beta: u32,
) -> (f64, f64, Vec<f64>) {
    let width = if beta == 4 { 2 } else { 1 };
    let (r1, r2) = (width * n1, width * n2);
    let dim = r1 + r2;
    let p1 = DMatrix::<Complex64>::from_fn(dim, dim, |i, j| {
        Complex64::new(if i == j && i < r1 { 1.0 } else { 0.0 }, 0.0)
    });
    let p2 = DMatrix::<Complex64>::identity(dim, dim) - &p1;
    let projected = (&p1 * s * &p2 * s.adjoint()).trace().re / width as f64;

    let t = s.view((0, r1), (r1, r2)).into_owned();
    let tt = t.adjoint() * &t;
    let mut eig: Vec<f64> = tt.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    let sum: f64 = eig.iter().sum::<f64>() / width as f64;
    let n = n1.min(n2);
    let transmissions: Vec<f64> = eig.into_iter().step_by(width).take(n).collect();
    (projected, sum, transmissions)
}

/// Landauer conductances of random cavities with `n1` and `n2` lead channels.
///
/// Every sampled `S` is checked for unitarity and its ensemble symmetry, and
/// the two conductance formulas must agree, all to [`SMATRIX_TOLERANCE`].
pub fn sample_conductance(
    n1: u32,
    n2: u32,
    beta: u32,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    check_count(count)?;
    if !matches!(beta, 1 | 2 | 4) {
        return Err(Error::Parameter(format!(
            "no circular ensemble with beta = {beta}"
        )));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::Parameter(
            "both leads need at least one channel".into(),
        ));
    }
    let sampler = match beta {
        1 => SamplerId::SmatrixCoe,
        2 => SamplerId::SmatrixCue,
        _ => SamplerId::SmatrixCse,
    };
    let (n1, n2) = (n1 as usize, n2 as usize);
    let values = parallel_draws(count, seed, |rng| {
        let s = sample_smatrix(n1 + n2, beta, rng)?;
        let (unitarity, symmetry) = smatrix_defects(&s, beta);
        if unitarity > SMATRIX_TOLERANCE || symmetry > SMATRIX_TOLERANCE {
            return Err(Error::Consistency(format!(
                "scattering matrix defect: unitarity {unitarity:e}, symmetry {symmetry:e}"
            )));
        }
        let (projected, summed, _) = conductance_forms(&s, n1, n2, beta);
        if (projected - summed).abs() > SMATRIX_TOLERANCE {
            return Err(Error::Consistency(format!(
                "conductance forms disagree: {projected} vs {summed}"
            )));
        }
        Ok(projected)
    })?;
    Ok(SampleBatch {
        values,
        sampler,
        seed,
        count,
    })
}

/// Result of a Kolmogorov-Smirnov comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl KsOutcome {
    fn new(statistic: f64, threshold: f64) -> Self {
        KsOutcome {
            statistic,
            threshold,
            passed: statistic < threshold,
        }
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("samples are finite"));
    v
}

/// One-sample KS test; passes iff `sup |F_emp - F| < 1.63 / sqrt(N)`.
pub fn ks_test<F>(batch: &SampleBatch, cdf: F) -> Result<KsOutcome>
where
    F: Fn(f64) -> f64 + Sync,
{
    let xs = sorted(&batch.values);
    if xs.is_empty() {
        return Err(Error::Parameter("empty sample batch".into()));
    }
    if xs.len() < 100 {
        return Err(Error::Parameter(format!(
            "KS test needs at least 100 samples, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let statistic = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
        })
        .reduce(|| 0.0, f64::max);
    Ok(KsOutcome::new(statistic, KS_COEFFICIENT / n.sqrt()))
}

/// Two-sample KS test at the same level; threshold `1.63 sqrt((N + M)/(N M))`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("empty sample batch".into()));
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(KsOutcome::new(
        d,
        KS_COEFFICIENT * ((nf + mf) / (nf * mf)).sqrt(),
    ))
}

/// A smooth distribution function sampled exactly at nodes and interpolated
/// by cubic Hermite segments using the exact density as slopes.
#[derive(Clone, Debug)]
pub struct TabulatedCdf {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// Largest difference from the exact function seen at segment midpoints.
    pub max_midpoint_error: f64,
}

impl TabulatedCdf {
    /// Tabulates `exact(x) -> (F(x), F'(x))` on `segments` equal pieces of
    /// `[lo, hi]`; below `lo` the value is 0, above `hi` it is 1.
    pub fn new<E>(lo: f64, hi: f64, segments: usize, exact: E) -> Self
    where
        E: Fn(&Rational) -> (f64, f64) + Sync,
    {
        assert!(hi > lo && segments > 0);
        let h = (hi - lo) / segments as f64;
        let nodes: Vec<f64> = (0..=segments).map(|i| lo + h * i as f64).collect();
        let exact_at = |x: f64| exact(&Rational::from_f64(x).expect("finite node"));
        let samples: Vec<(f64, f64)> = nodes.par_iter().map(|&x| exact_at(x)).collect();
        let mut table = TabulatedCdf {
            nodes,
            values: samples.iter().map(|s| s.0).collect(),
            slopes: samples.iter().map(|s| s.1).collect(),
            max_midpoint_error: 0.0,
        };
        table.max_midpoint_error = (0..segments)
            .into_par_iter()
            .map(|i| {
                let mid = 0.5 * (table.nodes[i] + table.nodes[i + 1]);
                (table.eval(mid) - exact_at(mid).0).abs()
            })
            .reduce(|| 0.0, f64::max);
        table
    }

    /// Tabulates a largest-eigenvalue CDF `Q` with density `P` on `[0, hi]`.
    pub fn from_exppoly(cdf: &ExpPoly, pdf: &ExpPoly, hi: f64, segments: usize) -> Self {
        let (qe, pe) = (cdf.evaluator(), pdf.evaluator());
        let digits = qe
            .default_precision_digits()
            .max(pe.default_precision_digits());
        Self::new(0.0, hi, segments, |x| {
            (
                qe.evaluate(x, digits).expect("valid precision").to_f64(),
                pe.evaluate(x, digits).expect("valid precision").to_f64(),
            )
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = (self.nodes[0], *self.nodes.last().expect("nonempty"));
        if x <= lo {
            return self.values[0];
        }
        if x >= hi {
            return 1.0;
        }
        let h = self.nodes[1] - self.nodes[0];
        let i = (((x - lo) / h) as usize).min(self.nodes.len() - 2);
        let t = (x - self.nodes[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
}

/// Smallest `x` on a doubling ladder from `start` with `1 - Q(x) < tail`.
pub fn cdf_upper_cutoff(cdf: &ExpPoly, start: f64, tail: f64) -> f64 {
    let eval = cdf.evaluator();
    let digits = eval.default_precision_digits();
    let mut x = start.max(1.0);
    loop {
        let q = eval
            .evaluate(&Rational::from_f64(x).expect("finite"), digits)
            .expect("valid precision");
        if 1.0 - q.to_f64() < tail {
            return x;
        }
        x *= 1.25;
    }
}

/// Floating-point evaluator for an exact [`PiecewisePoly`] on its support,
/// with working precision wide enough to absorb cancellation in the expanded
/// monomial coefficients.
pub struct PiecewiseFloatEval {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<Float>>,
    below: f64,
    above: f64,
    prec: u32,
}

impl PiecewiseFloatEval {
    pub fn new(p: &PiecewisePoly, below: f64, above: f64) -> Self {
        let (lo, hi) = p.support();
        let scale = lo
            .clone()
            .abs()
            .max(hi.clone().abs())
            .max(Rational::from(1));
        let scale_bits = scale.to_f64().log2().ceil() as i64;
        let mut mag = 0i64;
        for piece in p.pieces() {
            for (k, c) in piece.iter().enumerate() {
                if *c != 0 {
                    let bits = c.numer().significant_bits() as i64
                        - c.denom().significant_bits() as i64
                        + 1;
                    mag = mag.max(bits + k as i64 * scale_bits);
                }
            }
        }
        let prec = (mag.max(0) as u32) + 64 + 16;
        PiecewiseFloatEval {
            breakpoints: p.breakpoints().iter().map(|b| b.to_f64()).collect(),
            pieces: p
                .pieces()
                .iter()
                .map(|piece| piece.iter().map(|c| Float::with_val(prec, c)).collect())
                .collect(),
            below,
            above,
            prec,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (lo, hi) = (
            self.breakpoints[0],
            *self.breakpoints.last().expect("nonempty"),
        );
        if y < lo {
            return self.below;
        }
        if y > hi {
            return self.above;
        }
        let i = self
            .breakpoints
            .partition_point(|&b| b <= y)
            .clamp(1, self.pieces.len())
            - 1;
        let x = Float::with_val(self.prec, y);
        let mut acc = Float::with_val(self.prec, 0);
        for c in self.pieces[i].iter().rev() {
            acc *= &x;
            acc += c;
        }
        acc.to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, a: u32, beta: u32) -> EnsembleParams {
        EnsembleParams::new(n, a, beta).unwrap()
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = params(3, 1, 2);
        let a = sample_wishart_largest(&p, 5000, 7, WishartMethod::Dense).unwrap();
        let b = sample_wishart_largest(&p, 5000, 7, WishartMethod::Dense).unwrap();
        assert_eq!(a, b);
        let c = sample_wishart_largest(&p, 5000, 8, WishartMethod::Dense).unwrap();
        assert_ne!(a.values, c.values);
        let s1 = sample_conductance(2, 3, 4, 300, 11).unwrap();
        let s2 = sample_conductance(2, 3, 4, 300, 11).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn single_exponential_eigenvalue() {
        let p = params(1, 0, 2);
        let batch = sample_wishart_largest(&p, 100_000, 1, WishartMethod::Dense).unwrap();
        assert_eq!(batch.sampler, SamplerId::WishartDenseB2);
        let ks = ks_test(&batch, |x| 1.0 - (-x).exp()).unwrap();
        assert!(ks.statistic < 0.01, "{ks:?}");
    }

    #[test]
    fn dense_sampler_rejects_odd_shapes() {
        let p = params(3, 1, 3);
        assert!(matches!(
            sample_wishart_largest(&p, 10, 0, WishartMethod::Dense),
            Err(Error::Parameter(_))
        ));
        let auto = sample_wishart_largest(&p, 10, 0, WishartMethod::Auto).unwrap();
        assert_eq!(auto.sampler, SamplerId::LaguerreBidiagonal);
        // beta = 2 always has integer m; beta = 4 needs a odd
        assert_eq!(dense_columns(&params(3, 2, 2)), Some(5));
        assert_eq!(dense_columns(&params(3, 2, 4)), None);
        assert_eq!(dense_columns(&params(10, 15, 4)), Some(17));
        assert_eq!(dense_columns(&params(10, 15, 1)), Some(41));
    }

    #[test]
    fn fixed_trace_samples_stay_in_range() {
        let one =
            sample_fixed_trace_largest(&params(1, 3, 2), 200, 3, WishartMethod::Auto).unwrap();
        assert!(one.values.iter().all(|&y| y == 1.0));
        let p = params(4, 1, 3);
        let batch = sample_fixed_trace_largest(&p, 2000, 3, WishartMethod::Auto).unwrap();
        assert!(batch
            .values
            .iter()
            .all(|&y| (0.25 - 1e-12..=1.0).contains(&y)));
    }

    #[test]
    fn scattering_matrices_are_unitary_with_ensemble_symmetry() {
        let mut rng = substream(5, 0);
        for beta in [1, 2, 4] {
            for channels in [2, 3, 5] {
                let s = sample_smatrix(channels, beta, &mut rng).unwrap();
                let (u, sym) = smatrix_defects(&s, beta);
                assert!(u < 1e-12 && sym < 1e-12, "beta={beta}: {u:e} {sym:e}");
            }
        }
        // a generic Haar unitary is neither symmetric nor self-dual
        let u = haar_unitary(4, &mut rng);
        assert!(smatrix_defects(&u, 1).1 > 1e-3);
        assert!(smatrix_defects(&u, 4).1 > 1e-3);
    }

    #[test]
    fn conductance_forms_agree_and_transmissions_are_probabilities() {
        let mut rng = substream(9, 0);
        for beta in [1, 2, 4] {
            for (n1, n2) in [(1, 2), (2, 2), (3, 1)] {
                let s = sample_smatrix(n1 + n2, beta, &mut rng).unwrap();
                let (proj, sum, ts) = conductance_forms(&s, n1, n2, beta);
                assert!((proj - sum).abs() < 1e-12);
                assert_eq!(ts.len(), n1.min(n2));
                assert!(ts.iter().all(|&t| (-1e-12..=1.0 + 1e-12).contains(&t)));
                assert!((ts.iter().sum::<f64>() - proj).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conductance_samples_respect_channel_bound() {
        for beta in [1, 2, 4] {
            let batch = sample_conductance(2, 3, beta, 500, 21).unwrap();
            assert!(batch
                .values
                .iter()
                .all(|&g| (-1e-12..=2.0 + 1e-12).contains(&g)));
        }
        let uniform = sample_conductance(1, 1, 2, 100_000, 4).unwrap();
        let ks = ks_test(&uniform, |g| g.clamp(0.0, 1.0)).unwrap();
        assert!(ks.statistic < 0.01 && ks.passed);
    }

    #[test]
    fn ks_calibration_and_power() {
        // inverse-transform draws from Exp(1)
        let mut rng = substream(124, 0);
        let values: Vec<f64> = (0..10_000)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let batch = SampleBatch {
            values: values.clone(),
            sampler: SamplerId::WishartDenseB2,
            seed: 123,
            count: 10_000,
        };
        let ok = ks_test(&batch, |x| 1.0 - (-x).exp()).unwrap();
        assert!(ok.passed, "{ok:?}");
        let shifted = SampleBatch {
            values: values.iter().map(|x| x + 0.5).collect(),
            ..batch.clone()
        };
        assert!(!ks_test(&shifted, |x| 1.0 - (-x).exp()).unwrap().passed);
        let tiny = SampleBatch {
            values: vec![1.0; 50],
            ..batch.clone()
        };
        assert!(ks_test(&tiny, |x| x).is_err());
        let empty = SampleBatch {
            values: vec![],
            ..batch
        };
        assert!(ks_test(&empty, |x| x).is_err());
    }

    #[test]
    fn two_sample_ks_detects_shift() {
        let mut rng = substream(77, 0);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &b).unwrap().passed);
        let c: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
        assert!(!ks_two_sample(&a, &c).unwrap().passed);
    }

    #[test]
    fn hermite_table_reproduces_smooth_cdf() {
        let table = TabulatedCdf::new(0.0, 30.0, 400, |x| {
            let x = x.to_f64();
            (1.0 - (-x).exp(), (-x).exp())
        });
        assert!(table.max_midpoint_error < 1e-7);
        for x in [0.01, 0.7, 3.3, 12.0, 29.9] {
            assert!((table.eval(x) - (1.0 - (-x).exp())).abs() < 1e-7);
        }
        assert_eq!(table.eval(-1.0), 0.0);
        assert_eq!(table.eval(31.0), 1.0);
    }
}
