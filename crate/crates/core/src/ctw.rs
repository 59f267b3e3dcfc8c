//! Canonical time warping: alternating CCA spatial projection and DTW
//! temporal alignment between the lyric vowel matrix and the acoustic
//! activation matrix, initialized by uniform time warping.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::eigh_generalized;
use crate::num::Real;

/// Correspondence between rows of two sequences over a hypothetical time
/// axis: column `t` pairs row `steps[t].0` of the first sequence with row
/// `steps[t].1` of the second (0-indexed).
///
/// DTW produces a strict monotone path (each step advances one or both
/// rows); UTW initialization produces a generalized correspondence whose
/// columns may repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarpPath {
    pub steps: Vec<(usize, usize)>,
}

impl WarpPath {
    /// Length of the hypothetical time axis (H).
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Logical mapping matrices `Q_a` (M×H) and `Q_b` (N×H); each column
    /// holds exactly one 1.
    pub fn mapping_matrices<T: Real>(&self, m: usize, n: usize) -> (Array2<T>, Array2<T>) {
        let h = self.steps.len();
        let mut q_a = Array2::zeros((m, h));
        let mut q_b = Array2::zeros((n, h));
        for (t, &(i, j)) in self.steps.iter().enumerate() {
            q_a[[i, t]] = T::one();
            q_b[[j, t]] = T::one();
        }
        (q_a, q_b)
    }

    /// M×N logical correspondence: `Q[m, n] = 1` iff row m and frame n share
    /// a hypothetical time step.
    pub fn correspondence(&self, m: usize, n: usize) -> Array2<u8> {
        let mut q = Array2::zeros((m, n));
        for &(i, j) in &self.steps {
            q[[i, j]] = 1;
        }
        q
    }

    /// First frame of the second sequence assigned to row `row` of the
    /// first.
    pub fn first_frame(&self, row: usize) -> Option<usize> {
        self.steps.iter().find(|&&(i, _)| i == row).map(|&(_, j)| j)
    }

    /// Last frame of the second sequence assigned to row `row`.
    pub fn last_frame(&self, row: usize) -> Option<usize> {
        self.steps.iter().rev().find(|&&(i, _)| i == row).map(|&(_, j)| j)
    }

    /// Strict DTW path validity: starts (0,0), ends (M-1, N-1), each step
    /// advances one or both indices by exactly 1.
    pub fn is_valid_path(&self, m: usize, n: usize) -> bool {
        if self.steps.first() != Some(&(0, 0)) || self.steps.last() != Some(&(m - 1, n - 1)) {
            return false;
        }
        self.steps.windows(2).all(|w| {
            let di = w[1].0 - w[0].0;
            let dj = w[1].1 - w[0].1;
            di <= 1 && dj <= 1 && di + dj >= 1
        })
    }
}

/// Thresholded product of explicit mapping matrices: `Q_a Q_bᵀ > 0`.
pub fn correspondence_product<T: Real>(q_a: &Array2<T>, q_b: &Array2<T>) -> Result<Array2<u8>> {
    if q_a.ncols() != q_b.ncols() {
        return Err(Error::shape(
            "correspondence",
            format!("H = {}", q_a.ncols()),
            format!("H = {}", q_b.ncols()),
        ));
    }
    let prod = q_a.dot(&q_b.t());
    Ok(prod.mapv(|v| u8::from(v > T::zero())))
}

/// Squared Euclidean DTW over the step set {(1,0), (0,1), (1,1)}.
/// Ties in the backtrack prefer (1,1), then (1,0).
pub fn dtw<T: Real>(x: &ArrayView2<T>, y: &ArrayView2<T>) -> Result<(WarpPath, T)> {
    let (m, d) = x.dim();
    let (n, d2) = y.dim();
    if d != d2 {
        return Err(Error::shape("dtw", format!("dimension {d}"), format!("dimension {d2}")));
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("dtw", "empty sequence".to_string()));
    }

    let local = |i: usize, j: usize| -> T {
        x.row(i)
            .iter()
            .zip(y.row(j).iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum()
    };

    let mut acc = Array2::from_elem((m, n), T::infinity());
    acc[[0, 0]] = local(0, 0);
    for j in 1..n {
        acc[[0, j]] = acc[[0, j - 1]] + local(0, j);
    }
    for i in 1..m {
        acc[[i, 0]] = acc[[i - 1, 0]] + local(i, 0);
        for j in 1..n {
            let best = acc[[i - 1, j - 1]].min(acc[[i - 1, j]]).min(acc[[i, j - 1]]);
            acc[[i, j]] = best + local(i, j);
        }
    }

    let mut steps = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m - 1, n - 1);
    steps.push((i, j));
    while i > 0 || j > 0 {
        if i == 0 {
            j -= 1;
        } else if j == 0 {
            i -= 1;
        } else {
            let diag = acc[[i - 1, j - 1]];
            let up = acc[[i - 1, j]];
            let left = acc[[i, j - 1]];
            if diag <= up && diag <= left {
                i -= 1;
                j -= 1;
            } else if up <= left {
                i -= 1;
            } else {
                j -= 1;
            }
        }
        steps.push((i, j));
    }
    steps.reverse();
    let cost = acc[[m - 1, n - 1]];
    Ok((WarpPath { steps }, cost))
}

/// Uniform time warping: both sequences stretched onto a hypothetical axis
/// of length `H = ceil(rho * max(M, N))`, column `t` (1-based) mapping to
/// rows `ceil(t*M/H)` and `ceil(t*N/H)`.
pub fn utw_init(m: usize, n: usize, rho: f64) -> Result<WarpPath> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("utw", "empty sequence".to_string()));
    }
    if rho < 1.0 {
        return Err(Error::invalid("rho", format!("{rho} must be at least 1")));
    }
    let h = (rho * m.max(n) as f64).ceil() as usize;
    let steps = (1..=h)
        .map(|t| {
            let a = (t * m).div_ceil(h);
            let b = (t * n).div_ceil(h);
            (a - 1, b - 1)
        })
        .collect();
    Ok(WarpPath { steps })
}

/// Paired CCA projections with their canonical correlations.
#[derive(Debug, Clone)]
pub struct ProjectionPair<T> {
    /// Z×L projection of the first view.
    pub v_a: Array2<T>,
    /// Z×K projection of the second view.
    pub v_b: Array2<T>,
    /// Canonical correlations, descending.
    pub correlations: Vec<T>,
    /// Fraction of the positive eigenvalue mass the kept dimensions carry.
    pub energy_kept: T,
}

impl<T: Real> ProjectionPair<T> {
    pub fn z(&self) -> usize {
        self.v_a.nrows()
    }
}

/// Canonical correlation analysis on two views with equal row counts,
/// solved as the block generalized symmetric eigenproblem
/// `[0, C_ab; C_abᵀ, 0] v = λ [C_aa, 0; 0, C_bb] v` with a trace-scaled
/// ridge on the diagonal blocks. Keeps the smallest Z whose cumulative
/// correlation mass reaches `varsigma`.
pub fn cca<T: Real>(
    a_bar: &ArrayView2<T>,
    b_bar: &ArrayView2<T>,
    varsigma: T,
    ridge: T,
) -> Result<ProjectionPair<T>> {
    let (h, l) = a_bar.dim();
    let (h2, k) = b_bar.dim();
    if h != h2 {
        return Err(Error::shape("cca", format!("{h} rows"), format!("{h2} rows")));
    }
    if h < 2 {
        return Err(Error::invalid("cca", format!("needs at least 2 rows, got {h}")));
    }
    if !(varsigma > T::zero() && varsigma <= T::one()) {
        return Err(Error::invalid("varsigma", "must lie in (0, 1]".to_string()));
    }

    let c_ab = a_bar.t().dot(b_bar);
    let mut c_aa = a_bar.t().dot(a_bar);
    let mut c_bb = b_bar.t().dot(b_bar);
    let tr_a = c_aa.diag().sum();
    let tr_b = c_bb.diag().sum();
    if tr_a <= T::zero() || tr_b <= T::zero() {
        return Err(Error::numerical("cca", "zero covariance block"));
    }
    let ridge_a = ridge * tr_a / T::cst(l as f64);
    let ridge_b = ridge * tr_b / T::cst(k as f64);
    for i in 0..l {
        c_aa[[i, i]] += ridge_a;
    }
    for i in 0..k {
        c_bb[[i, i]] += ridge_b;
    }

    let dim = l + k;
    let mut lhs = Array2::zeros((dim, dim));
    let mut rhs = Array2::zeros((dim, dim));
    for i in 0..l {
        for j in 0..k {
            lhs[[i, l + j]] = c_ab[[i, j]];
            lhs[[l + j, i]] = c_ab[[i, j]];
        }
    }
    for i in 0..l {
        for j in 0..l {
            rhs[[i, j]] = c_aa[[i, j]];
        }
    }
    for i in 0..k {
        for j in 0..k {
            rhs[[l + i, l + j]] = c_bb[[i, j]];
        }
    }

    let (values, vectors) = eigh_generalized(&lhs.view(), &rhs.view())?;

    // Eigenvalues come in ± pairs; the positive ones are the canonical
    // correlations, at most min(L, K) of them.
    let max_z = l.min(k);
    let tiny = T::cst(1e-12);
    let mut kept: Vec<(T, usize)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > tiny)
        .map(|(i, &v)| (v, i))
        .take(max_z)
        .collect();
    kept.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    if kept.is_empty() {
        return Err(Error::numerical("cca", "no positive canonical correlations"));
    }
    let total: T = kept.iter().map(|&(v, _)| v).sum();
    let mut z = kept.len();
    let mut cum = T::zero();
    for (idx, &(v, _)) in kept.iter().enumerate() {
        cum += v;
        if cum >= varsigma * total {
            z = idx + 1;
            break;
        }
    }
    let energy_kept = kept.iter().take(z).map(|&(v, _)| v).sum::<T>() / total;

    let cap = T::one() + T::cst(1e-8);
    let mut v_a = Array2::zeros((z, l));
    let mut v_b = Array2::zeros((z, k));
    let mut correlations = Vec::with_capacity(z);
    for (row, &(value, col)) in kept.iter().take(z).enumerate() {
        correlations.push(value.min(cap));
        for i in 0..l {
            v_a[[row, i]] = vectors[[i, col]];
        }
        for i in 0..k {
            v_b[[row, i]] = vectors[[l + i, col]];
        }
    }

    Ok(ProjectionPair {
        v_a,
        v_b,
        correlations,
        energy_kept,
    })
}

#[derive(Debug, Clone)]
pub struct CtwConfig<T> {
    /// Fraction of correlation energy the CCA projections keep (ς).
    pub varsigma: T,
    /// UTW over-sampling factor (ϱ).
    pub rho: f64,
    /// CCA ridge (η), scaled by block trace.
    pub eta: T,
    pub max_cycles: usize,
    /// Stop when |J(t) - J(t-1)| falls below this.
    pub tol: T,
}

impl<T: Real> Default for CtwConfig<T> {
    fn default() -> Self {
        CtwConfig {
            varsigma: T::cst(0.95),
            rho: 1.1,
            eta: T::cst(1e-6),
            max_cycles: 50,
            tol: T::cst(1e-4),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CtwResult<T> {
    pub path: WarpPath,
    pub projections: ProjectionPair<T>,
    /// J_ctw after each complete CCA+DTW cycle; non-increasing.
    pub j_trace: Vec<T>,
    pub cycles: usize,
    pub converged: bool,
}

/// Rows of `mat` gathered along one side of a warp.
fn warped_view<T: Real>(mat: &ArrayView2<T>, rows: impl Iterator<Item = usize>) -> Array2<T> {
    let cols = mat.ncols();
    let idx: Vec<usize> = rows.collect();
    let mut out = Array2::zeros((idx.len(), cols));
    for (t, &r) in idx.iter().enumerate() {
        out.row_mut(t).assign(&mat.row(r));
    }
    out
}

/// Align `a` (M×L) to `b` (N×K): initialize warps by UTW, then alternate
/// CCA on the warped views with DTW on the projected sequences until J_ctw
/// converges. A cycle that would raise J is rejected and terminates the
/// loop, so the reported trace is non-increasing.
pub fn ctw_align<T: Real>(
    a: &ArrayView2<T>,
    b: &ArrayView2<T>,
    config: &CtwConfig<T>,
) -> Result<CtwResult<T>> {
    let (m, _l) = a.dim();
    let (n, _k) = b.dim();
    if m < 2 || n < 2 {
        return Err(Error::invalid(
            "ctw",
            format!("needs at least 2 rows on each side, got {m} and {n}"),
        ));
    }
    let mut warp = utw_init(m, n, config.rho)?;
    let mut best: Option<(ProjectionPair<T>, WarpPath, T)> = None;
    let mut j_trace = Vec::new();
    let mut converged = false;
    let mut cycles = 0;

    for _cycle in 0..config.max_cycles.max(1) {
        let a_bar = warped_view(a, warp.steps.iter().map(|&(i, _)| i));
        let b_bar = warped_view(b, warp.steps.iter().map(|&(_, j)| j));
        let proj = cca(&a_bar.view(), &b_bar.view(), config.varsigma, config.eta)?;

        let xa = a.dot(&proj.v_a.t());
        let yb = b.dot(&proj.v_b.t());
        let (path, cost) = dtw(&xa.view(), &yb.view())?;

        let j_prev = best.as_ref().map(|&(_, _, j)| j);
        if let Some(jp) = j_prev {
            if cost > jp {
                // CCA re-normalized against the new warp in a way that did
                // not pay off; keep the previous solution.
                break;
            }
        }
        cycles += 1;
        j_trace.push(cost);
        let done = j_prev.is_some_and(|jp| (jp - cost).abs() < config.tol);
        warp = path.clone();
        best = Some((proj, path, cost));
        if done {
            converged = true;
            break;
        }
    }

    let (projections, path, _) = best.ok_or_else(|| Error::numerical("ctw", "no cycle completed"))?;
    Ok(CtwResult {
        path,
        projections,
        j_trace,
        cycles,
        converged,
    })
}
