//! Weighted symmetric NMF with entropic row sparsity: factorizes the
//! self-similarity matrix as `S ≈ B W Bᵀ` with non-negative `B` (unlabeled
//! vowel activations, rows on the simplex) and `W` (latent vowel subspace).

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::Real;

/// Factorization rank from the number of distinct lyric vowel classes:
/// `K = L' + offset`.
pub fn choose_k(l_prime: usize, offset: isize) -> Result<usize> {
    let k = l_prime as isize + offset;
    if k < 1 {
        return Err(Error::invalid(
            "k_offset",
            format!("K = {l_prime} + {offset} must be at least 1"),
        ));
    }
    Ok(k as usize)
}

/// Real branches of Lambert's W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambertBranch {
    /// W₀, defined for x ≥ -1/e.
    Zero,
    /// W₋₁, defined for -1/e ≤ x < 0.
    MinusOne,
}

/// Lambert's W: the solution of `w·e^w = x` on the requested branch,
/// accurate to `|w e^w - x| <= 1e-12 · max(1, |x|)` in double precision.
pub fn lambert_w<T: Real>(x: T, branch: LambertBranch) -> Result<T> {
    let branch_point = T::cst(-std::f64::consts::E.recip());
    let slack = T::cst(1e-3) * T::epsilon();
    if x < branch_point - slack {
        return Err(Error::invalid("x", format!("{x} below -1/e")));
    }
    let ex1 = T::cst(std::f64::consts::E) * x + T::one();
    if ex1 <= T::zero() {
        return Ok(-T::one());
    }
    let p = (T::cst(2.0) * ex1).sqrt();

    match branch {
        LambertBranch::Zero => {
            if p < T::cst(1e-4) {
                return Ok(branch_series(p));
            }
            let w0 = if x > T::cst(std::f64::consts::E) {
                let l = x.ln();
                l - l.ln()
            } else if x >= T::zero() {
                (T::one() + x).ln()
            } else if x > T::cst(-0.25) {
                x * (T::one() - x)
            } else {
                branch_series(p)
            };
            Ok(halley(x, w0))
        }
        LambertBranch::MinusOne => {
            if x >= T::zero() {
                return Err(Error::invalid("x", format!("{x} not in [-1/e, 0)")));
            }
            Ok(lambert_wm1_log((-x).ln()))
        }
    }
}

/// Lower Lambert branch parameterized by `t = ln(-x)`: solves
/// `w + ln(-w) = t` for `w <= -1`. Working in log space keeps the solver
/// exact even where `x` itself would underflow.
pub fn lambert_wm1_log<T: Real>(t: T) -> T {
    let t = t.min(-T::one());
    // p² = 2(1 - e^(t+1)) near the branch point.
    let p2 = -T::cst(2.0) * (t + T::one()).exp_m1();
    let p = p2.max(T::zero()).sqrt();
    if p < T::cst(1e-4) {
        return branch_series(-p);
    }
    let mut w = if t > T::cst(-5.0) {
        branch_series(-p)
    } else {
        t - (-t).ln()
    };
    // Newton on g(w) = w + ln(-w) - t; g' = (w+1)/w > 0 below -1.
    let floor = -T::one() - p / T::cst(4.0);
    w = w.min(floor);
    for _ in 0..80 {
        let g = w + (-w).ln() - t;
        let gp = (w + T::one()) / w;
        if gp == T::zero() || !gp.is_finite() {
            break;
        }
        let dw = g / gp;
        w = (w - dw).min(floor);
        if dw.abs() <= T::epsilon() * (T::one() + w.abs()) {
            break;
        }
    }
    w
}

/// Series around the branch point: W = -1 + p - p²/3 + 11p³/72 - 43p⁴/540,
/// with p negated for the lower branch.
fn branch_series<T: Real>(p: T) -> T {
    let p2 = p * p;
    let p3 = p2 * p;
    let p4 = p3 * p;
    -T::one() + p - p2 / T::cst(3.0) + T::cst(11.0 / 72.0) * p3 - T::cst(43.0 / 540.0) * p4
}

fn halley<T: Real>(x: T, mut w: T) -> T {
    for _ in 0..60 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == T::zero() {
            break;
        }
        let wp1 = w + T::one();
        let denom = ew * wp1 - (w + T::cst(2.0)) * f / (T::cst(2.0) * wp1);
        if denom == T::zero() || !denom.is_finite() {
            break;
        }
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= T::epsilon() * (T::one() + w.abs()) {
            break;
        }
    }
    w
}

#[derive(Debug, Clone)]
pub struct WsnmfConfig<T> {
    pub k: usize,
    /// Entropic sparsity weight ℓ; 0 reduces sparsification to plain row
    /// normalization.
    pub sparsity: T,
    pub epsilon: T,
    pub max_iter: usize,
    pub rng_seed: u64,
    pub init_low: T,
    pub init_high: T,
    /// Stop when the relative objective change over `tol_window` iterations
    /// falls below this.
    pub rel_tol: T,
    pub tol_window: usize,
    /// Audit flag: run the W update with its printed (dimensionally
    /// inconsistent) numerator, which only type-checks when K = N.
    pub eq10_as_printed: bool,
}

impl<T: Real> WsnmfConfig<T> {
    pub fn new(k: usize) -> Self {
        WsnmfConfig {
            k,
            sparsity: T::cst(3e-3),
            epsilon: T::cst(1e-9),
            max_iter: 5000,
            rng_seed: 0,
            init_low: T::cst(1e-4),
            init_high: T::one(),
            rel_tol: T::cst(1e-8),
            tol_window: 10,
            eq10_as_printed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization<T> {
    pub b: Array2<T>,
    pub w: Array2<T>,
    /// ‖S − B W Bᵀ‖_F² after each iteration.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Rows that fell back to plain normalization because the entropic
    /// transform was infeasible.
    pub sparsify_fallbacks: usize,
}

fn check_shapes<T: Real>(s: &Array2<T>, b: &Array2<T>, w: &Array2<T>) -> Result<()> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::shape("wsnmf", "square S", format!("{:?}", s.dim())));
    }
    if b.nrows() != n {
        return Err(Error::shape(
            "wsnmf",
            format!("B with {n} rows"),
            format!("{:?}", b.dim()),
        ));
    }
    let k = b.ncols();
    if w.dim() != (k, k) {
        return Err(Error::shape(
            "wsnmf",
            format!("W of {k}x{k}"),
            format!("{:?}", w.dim()),
        ));
    }
    Ok(())
}

/// Multiplicative W update: `W ⊗ (BᵀSB) ⊘ (BᵀB W BᵀB + ε)`.
///
/// The printed numerator (WᵀBW) is dimensionally inconsistent for K ≠ N;
/// the `as_printed` audit path computes it literally and therefore only
/// accepts square B.
pub fn update_w<T: Real>(
    s: &Array2<T>,
    b: &Array2<T>,
    w: &Array2<T>,
    epsilon: T,
    as_printed: bool,
) -> Result<Array2<T>> {
    check_shapes(s, b, w)?;
    let btb = b.t().dot(b);
    let numerator = if as_printed {
        if b.nrows() != b.ncols() {
            return Err(Error::shape(
                "update_w(as printed)",
                "square B (the printed numerator WᵀBW only type-checks for K = N)",
                format!("{:?}", b.dim()),
            ));
        }
        w.t().dot(b).dot(w)
    } else {
        b.t().dot(s).dot(b)
    };
    let denominator = btb.dot(w).dot(&btb);
    let mut out = w.clone();
    ndarray::Zip::from(&mut out)
        .and(&numerator)
        .and(&denominator)
        .for_each(|o, &n_, &d| *o = *o * n_ / (d + epsilon));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("update_w", "produced NaN"));
    }
    Ok(out)
}

/// Multiplicative B update: `B ⊗ (0.5 + 0.5·(SBW) ⊘ (B W BᵀB W + ε))`.
pub fn update_b<T: Real>(
    s: &Array2<T>,
    b: &Array2<T>,
    w: &Array2<T>,
    epsilon: T,
) -> Result<Array2<T>> {
    check_shapes(s, b, w)?;
    let bw = b.dot(w);
    let numerator = s.dot(&bw);
    let btb = b.t().dot(b);
    let denominator = bw.dot(&btb).dot(w);
    let half = T::cst(0.5);
    let mut out = b.clone();
    ndarray::Zip::from(&mut out)
        .and(&numerator)
        .and(&denominator)
        .for_each(|o, &n_, &d| *o *= half + half * n_ / (d + epsilon));
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("update_b", "produced NaN"));
    }
    Ok(out)
}

/// Outcome of [`sparsify_rows`].
#[derive(Debug, Clone)]
pub struct SparsifyOutcome<T> {
    pub b: Array2<T>,
    /// Rows where the Lambert transform was infeasible and plain
    /// normalization was used instead.
    pub fallbacks: usize,
}

/// Entropic sparsification: each row becomes
/// `(-b/ℓ) / W₋₁(-b · e^(1 + ρ/ℓ) / ℓ)` with the per-row multiplier ρ
/// solved by bisection so the row sums to 1. With ℓ = 0 this is plain row
/// normalization; all-zero rows become uniform.
pub fn sparsify_rows<T: Real>(b_tilde: &Array2<T>, sparsity: T) -> Result<SparsifyOutcome<T>> {
    if sparsity < T::zero() {
        return Err(Error::invalid("sparsity", "must be non-negative".to_string()));
    }
    let k = b_tilde.ncols();
    let mut out = b_tilde.clone();
    let mut fallbacks = 0;
    for mut row in out.rows_mut() {
        let slice: Vec<T> = row.iter().copied().collect();
        let (new_row, fell_back) = sparsify_row(&slice, sparsity, k);
        for (dst, v) in row.iter_mut().zip(new_row) {
            *dst = v;
        }
        if fell_back {
            fallbacks += 1;
        }
    }
    Ok(SparsifyOutcome { b: out, fallbacks })
}

fn normalize_row<T: Real>(row: &[T], k: usize) -> Vec<T> {
    let sum: T = row.iter().copied().sum();
    if sum > T::zero() {
        row.iter().map(|&v| v / sum).collect()
    } else {
        vec![T::one() / T::cst(k as f64); k]
    }
}

fn sparsify_row<T: Real>(row: &[T], ell: T, k: usize) -> (Vec<T>, bool) {
    let sum: T = row.iter().copied().sum();
    if sum <= T::zero() {
        return (vec![T::one() / T::cst(k as f64); k], false);
    }
    if ell == T::zero() {
        return (normalize_row(row, k), false);
    }
    let bmax = row.iter().copied().fold(T::zero(), T::max);
    // Largest ρ keeping every Lambert log-argument at or below -1.
    let rho_max = -ell * (T::cst(2.0) + (bmax / ell).ln());

    // The Lambert argument is -(b/ℓ)·e^(1+ρ/ℓ); its log form
    // ln(b/ℓ) + 1 + ρ/ℓ never under- or overflows.
    let theta = |rho: T| -> Vec<T> {
        row.iter()
            .map(|&b| {
                if b <= T::zero() {
                    return T::zero();
                }
                let t = (b / ell).ln() + T::one() + rho / ell;
                let w = lambert_wm1_log(t.min(-T::one()));
                (b / ell) / (-w)
            })
            .collect()
    };
    let sum_at = |rho: T| theta(rho).iter().copied().sum::<T>();

    if sum_at(rho_max) < T::one() {
        // Even the flattest feasible transform cannot reach sum 1.
        return (normalize_row(row, k), true);
    }

    let hi = rho_max;
    let mut lo = rho_max - ell;
    let mut expansions = 0;
    while sum_at(lo) >= T::one() {
        let step = (hi - lo) * T::cst(2.0);
        lo = rho_max - step;
        expansions += 1;
        if expansions > 200 {
            return (normalize_row(row, k), true);
        }
    }

    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = (lo + hi) / T::cst(2.0);
        if mid == lo || mid == hi {
            break;
        }
        if sum_at(mid) >= T::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (theta(hi), false)
}

/// ‖S − B W Bᵀ‖_F².
pub fn objective<T: Real>(s: &Array2<T>, b: &Array2<T>, w: &Array2<T>) -> T {
    let approx = b.dot(w).dot(&b.t());
    ndarray::Zip::from(s)
        .and(&approx)
        .fold(T::zero(), |acc, &x, &y| acc + (x - y) * (x - y))
}

/// Same objective from the cached K×K contractions:
/// `‖S‖² − 2·tr(G W) + tr(Wᵀ M W M)` with `G = BᵀSB`, `M = BᵀB`.
/// Avoids re-forming the N×N approximation inside the iteration loop.
fn objective_from_parts<T: Real>(ssq: T, g: &Array2<T>, m: &Array2<T>, w: &Array2<T>) -> T {
    let k = w.nrows();
    let mut cross = T::zero();
    for i in 0..k {
        for j in 0..k {
            cross += g[[i, j]] * w[[j, i]];
        }
    }
    let p = w.t().dot(&m.dot(w)); // Wᵀ M W
    let mut quad = T::zero();
    for i in 0..k {
        for j in 0..k {
            quad += p[[i, j]] * m[[j, i]];
        }
    }
    ssq - T::cst(2.0) * cross + quad
}

fn validate_ssm<T: Real>(s: &Array2<T>) -> Result<()> {
    let n = s.nrows();
    if s.ncols() != n || n == 0 {
        return Err(Error::shape("factorize", "non-empty square S", format!("{:?}", s.dim())));
    }
    let tol = T::cst(1e-9);
    for i in 0..n {
        for j in 0..n {
            let v = s[[i, j]];
            if !v.is_finite() || v < -tol || v > T::one() + tol {
                return Err(Error::invalid(
                    "ssm",
                    format!("entry ({i},{j}) = {v} outside [0, 1]"),
                ));
            }
            if (v - s[[j, i]]).abs() > tol {
                return Err(Error::invalid("ssm", format!("not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Run the factorization from a seeded uniform random initialization in
/// `[init_low, init_high]`.
pub fn factorize<T: Real>(s: &Array2<T>, config: &WsnmfConfig<T>) -> Result<Factorization<T>> {
    validate_ssm(s)?;
    let n = s.nrows();
    let k = config.k;
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1".to_string()));
    }
    let lo = config.init_low.as_f64();
    let hi = config.init_high.as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let uniform = |rng: &mut ChaCha8Rng| T::cst(lo + (hi - lo) * rng.gen::<f64>());
    let b0 = Array2::from_shape_fn((n, k), |_| uniform(&mut rng));
    let w0 = Array2::from_shape_fn((k, k), |_| uniform(&mut rng));
    factorize_from(s, config, b0, w0)
}

/// Run the factorization from an explicit initialization.
pub fn factorize_from<T: Real>(
    s: &Array2<T>,
    config: &WsnmfConfig<T>,
    b0: Array2<T>,
    w0: Array2<T>,
) -> Result<Factorization<T>> {
    validate_ssm(s)?;
    check_shapes(s, &b0, &w0)?;
    let mut b = b0;
    let mut w = w0;
    let mut trace: Vec<T> = Vec::new();
    let mut fallbacks = 0;
    let mut converged = false;
    let mut iterations = 0;

    // The N²K product S·B dominates the iteration; computed once per
    // iteration it serves the W update, the B update, and (carried across
    // the sparsify step) the objective.
    let ssq: T = s.iter().map(|&v| v * v).sum();
    let half = T::cst(0.5);
    let mut sb = s.dot(&b);
    for iter in 0..config.max_iter {
        iterations = iter + 1;

        if config.eq10_as_printed {
            w = update_w(s, &b, &w, config.epsilon, true)?;
        } else {
            let btb = b.t().dot(&b);
            let num_w = b.t().dot(&sb);
            let den_w = btb.dot(&w).dot(&btb);
            ndarray::Zip::from(&mut w)
                .and(&num_w)
                .and(&den_w)
                .for_each(|o, &n_, &d| *o = *o * n_ / (d + config.epsilon));
        }

        let btb = b.t().dot(&b);
        let bw = b.dot(&w);
        let num_b = sb.dot(&w);
        let den_b = bw.dot(&btb).dot(&w);
        let mut b_tilde = b.clone();
        ndarray::Zip::from(&mut b_tilde)
            .and(&num_b)
            .and(&den_b)
            .for_each(|o, &n_, &d| *o = *o * (half + half * n_ / (d + config.epsilon)));
        if b_tilde.iter().any(|v| !v.is_finite()) || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("factorize", "update produced NaN"));
        }

        let outcome = sparsify_rows(&b_tilde, config.sparsity)?;
        b = outcome.b;
        fallbacks += outcome.fallbacks;

        debug_assert!(b.iter().all(|&v| v >= T::zero()));
        debug_assert!(w.iter().all(|&v| v >= T::zero()));

        sb = s.dot(&b);
        let g = b.t().dot(&sb);
        let m = b.t().dot(&b);
        let obj = objective_from_parts(ssq, &g, &m, &w);
        if !obj.is_finite() {
            return Err(Error::numerical("factorize", "objective diverged"));
        }
        trace.push(obj);
        if iter >= config.tol_window {
            let past = trace[iter - config.tol_window];
            let denom = past.max(T::cst(1e-30));
            if ((past - obj) / denom).abs() < config.rel_tol {
                converged = true;
                break;
            }
        }
    }

    Ok(Factorization {
        b,
        w,
        objective_trace: trace,
        iterations,
        converged,
        sparsify_fallbacks: fallbacks,
    })
}
