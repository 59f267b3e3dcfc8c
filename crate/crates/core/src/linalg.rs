//! Dense linear-algebra kernels: symmetric Jacobi eigendecomposition,
//! Cholesky, one-sided Jacobi SVD, and a randomized truncated SVD for the
//! large spectrogram matrices the separation module works on.

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Real;

/// Frobenius norm.
pub fn frobenius_norm<T: Real>(a: &ArrayView2<T>) -> T {
    a.iter().map(|&v| v * v).sum::<T>().sqrt()
}

/// Largest singular value, estimated by power iteration on `aᵀa`.
pub fn spectral_norm<T: Real>(a: &ArrayView2<T>, rng: &mut impl Rng) -> T {
    let (m, n) = a.dim();
    if m == 0 || n == 0 {
        return T::zero();
    }
    let mut v = Array1::from_shape_fn(n, |_| T::cst(rng.gen::<f64>() - 0.5));
    let mut norm = T::zero();
    for _ in 0..100 {
        let av = a.dot(&v);
        let atav = a.t().dot(&av);
        let new_norm = atav.iter().map(|&x| x * x).sum::<T>().sqrt();
        if new_norm == T::zero() {
            return T::zero();
        }
        v = atav.mapv(|x| x / new_norm);
        let prev = norm;
        norm = new_norm;
        if (norm - prev).abs() <= T::cst(1e-12) * norm {
            break;
        }
    }
    a.dot(&v).iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Symmetric eigendecomposition: Householder tridiagonalization followed by
/// the implicit-shift QL iteration (the classic EISPACK tred2/tql2 pair).
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns of an orthogonal matrix.
pub fn eigh<T: Real>(a: &ArrayView2<T>) -> Result<(Array1<T>, Array2<T>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape("eigh", "square matrix", format!("{}x{}", n, a.ncols())));
    }
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    // Flat row-major working copy of the eigenvector accumulator.
    let mut v: Vec<T> = a.iter().copied().collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let mut vecs = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vecs[[k, dst]] = v[k * n + src];
        }
    }
    Ok((values, vecs))
}

/// Householder reduction of a symmetric matrix (flat row-major in `v`) to
/// tridiagonal form, accumulating the transformations in `v`.
fn tred2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = T::zero();
                v[j * n + i] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }

            for j in 0..i {
                let f = d[j];
                v[j * n + i] = f;
                let mut g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k * n + j] = v[k * n + j] - (f * e[k] + g * d[k]);
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = T::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] = v[k * n + j] - g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = T::zero();
    }
    v[(n - 1) * n + n - 1] = T::one();
    e[0] = T::zero();
}

/// Implicit-shift QL iteration on the tridiagonal form produced by
/// [`tred2`], accumulating eigenvectors in `v`.
fn tql2<T: Real>(v: &mut [T], d: &mut [T], e: &mut [T], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    let two = T::cst(2.0);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m >= n {
            m = n - 1;
        }

        if m > l {
            for iter in 0.. {
                if iter > 60 {
                    return Err(Error::numerical("eigh", "QL iteration did not converge"));
                }
                // Implicit shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                // QL sweep.
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Cholesky factorization `a = l lᵀ` with `l` lower triangular.
/// Fails when the matrix is not positive definite.
pub fn cholesky<T: Real>(a: &ArrayView2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape("cholesky", "square matrix", format!("{}x{}", n, a.ncols())));
    }
    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= T::zero() {
                    return Err(Error::numerical("cholesky", "matrix not positive definite"));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve `l x = b` column-wise for lower-triangular `l`.
fn solve_lower<T: Real>(l: &Array2<T>, b: &ArrayView2<T>) -> Array2<T> {
    let n = l.nrows();
    let cols = b.ncols();
    let mut x = b.to_owned();
    for c in 0..cols {
        for i in 0..n {
            let mut v = x[[i, c]];
            for k in 0..i {
                v -= l[[i, k]] * x[[k, c]];
            }
            x[[i, c]] = v / l[[i, i]];
        }
    }
    x
}

/// Solve `lᵀ x = b` column-wise for lower-triangular `l`.
fn solve_lower_transpose<T: Real>(l: &Array2<T>, b: &ArrayView2<T>) -> Array2<T> {
    let n = l.nrows();
    let cols = b.ncols();
    let mut x = b.to_owned();
    for c in 0..cols {
        for i in (0..n).rev() {
            let mut v = x[[i, c]];
            for k in (i + 1)..n {
                v -= l[[k, i]] * x[[k, c]];
            }
            x[[i, c]] = v / l[[i, i]];
        }
    }
    x
}

/// Generalized symmetric-definite eigenproblem `a v = λ b v` with `b`
/// positive definite, reduced through the Cholesky factor of `b`.
///
/// Returns eigenvalues descending and eigenvectors as columns, normalized so
/// that `vᵀ b v = I`.
pub fn eigh_generalized<T: Real>(
    a: &ArrayView2<T>,
    b: &ArrayView2<T>,
) -> Result<(Array1<T>, Array2<T>)> {
    if a.dim() != b.dim() {
        return Err(Error::shape(
            "eigh_generalized",
            format!("{:?}", a.dim()),
            format!("{:?}", b.dim()),
        ));
    }
    let l = cholesky(b)?;
    // c = l⁻¹ a l⁻ᵀ, assembled as l⁻¹ (l⁻¹ a)ᵀ since a is symmetric.
    let z = solve_lower(&l, a);
    let c = solve_lower(&l, &z.t());
    let (values, u) = eigh(&c.view())?;
    let vecs = solve_lower_transpose(&l, &u.view());
    Ok((values, vecs))
}

/// Thin SVD `a = u diag(s) vᵀ` by one-sided Jacobi, singular values
/// descending. Columns of `u` for zero singular values are zero.
pub fn svd<T: Real>(a: &ArrayView2<T>) -> Result<(Array2<T>, Array1<T>, Array2<T>)> {
    let (m, n) = a.dim();
    if m >= n {
        svd_tall(a)
    } else {
        let (u, s_, v) = svd_tall(&a.t())?;
        Ok((v, s_, u))
    }
}

/// Thin SVD through the eigendecomposition of the Gram matrix `aᵀa`
/// (or `aaᵀ` for wide inputs). Much faster than one-sided Jacobi when one
/// dimension dominates; squares the condition number, so small singular
/// values lose accuracy — adequate for singular value thresholding.
pub fn svd_via_gram<T: Real>(a: &ArrayView2<T>) -> Result<(Array2<T>, Array1<T>, Array2<T>)> {
    let (m, n) = a.dim();
    if m < n {
        let (u, s_, v) = svd_via_gram(&a.t())?;
        return Ok((v, s_, u));
    }
    let gram = a.t().dot(a);
    let (lambda, v) = eigh(&gram.view())?;
    let s_: Array1<T> = lambda.mapv(|l| l.max(T::zero()).sqrt());
    let top = s_[0];
    let cutoff = top * T::epsilon().sqrt();
    let mut u = a.dot(&v);
    for (j, mut col) in u.columns_mut().into_iter().enumerate() {
        if s_[j] > cutoff {
            let inv = T::one() / s_[j];
            col.mapv_inplace(|x| x * inv);
        } else {
            col.fill(T::zero());
        }
    }
    Ok((u, s_, v))
}

fn svd_tall<T: Real>(a: &ArrayView2<T>) -> Result<(Array2<T>, Array1<T>, Array2<T>)> {
    let (m, n) = a.dim();
    let mut work = a.to_owned();
    let mut v = Array2::eye(n);
    let eps = T::epsilon() * T::cst(n as f64);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..m {
                    let ap = work[[i, p]];
                    let aq = work[[i, q]];
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::cst(2.0) * gamma);
                let t = if zeta >= T::zero() {
                    T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
                } else {
                    -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s_ = c * t;
                for i in 0..m {
                    let ap = work[[i, p]];
                    let aq = work[[i, q]];
                    work[[i, p]] = c * ap - s_ * aq;
                    work[[i, q]] = s_ * ap + c * aq;
                }
                for i in 0..n {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s_ * vq;
                    v[[i, q]] = s_ * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<(T, usize)> = (0..n)
        .map(|j| {
            let norm = work.column(j).iter().map(|&x| x * x).sum::<T>().sqrt();
            (norm, j)
        })
        .collect();
    sigma.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = Array2::zeros((m, n));
    let mut s_out = Array1::zeros(n);
    let mut v_out = Array2::zeros((n, n));
    for (dst, &(norm, src)) in sigma.iter().enumerate() {
        s_out[dst] = norm;
        v_out.column_mut(dst).assign(&v.column(src));
        if norm > T::zero() {
            let col = work.column(src).mapv(|x| x / norm);
            u.column_mut(dst).assign(&col);
        }
    }
    Ok((u, s_out, v_out))
}

/// Orthonormalize the columns of `a` in place with two rounds of modified
/// Gram-Schmidt. Near-zero columns are zeroed.
fn orthonormalize<T: Real>(a: &mut Array2<T>) {
    let (_, n) = a.dim();
    for _round in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let dot = a.column(k).dot(&a.column(j));
                let prev = a.column(k).to_owned();
                let mut col = a.column_mut(j);
                col.zip_mut_with(&prev, |x, &p| *x -= dot * p);
            }
            let norm = a.column(j).iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm > T::cst(1e-30) {
                a.column_mut(j).mapv_inplace(|x| x / norm);
            } else {
                a.column_mut(j).fill(T::zero());
            }
        }
    }
}

/// Randomized truncated SVD with subspace (power) iteration.
///
/// Returns at most `rank` triplets; accurate when the spectrum past `rank`
/// decays, which is how the separation solver sizes it.
pub fn randomized_svd<T: Real>(
    a: &ArrayView2<T>,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    rng: &mut impl Rng,
) -> Result<(Array2<T>, Array1<T>, Array2<T>)> {
    let (m, n) = a.dim();
    let target = (rank + oversample).min(m.min(n));
    if target == 0 {
        return Err(Error::invalid("rank", "randomized_svd needs rank >= 1".to_string()));
    }
    if target >= m.min(n) {
        let (u, s_, v) = svd(a)?;
        let r = rank.min(s_.len());
        return Ok((
            u.slice(s![.., ..r]).to_owned(),
            s_.slice(s![..r]).to_owned(),
            v.slice(s![.., ..r]).to_owned(),
        ));
    }

    let omega = Array2::from_shape_fn((n, target), |_| T::cst(gauss(rng)));
    let mut q = a.dot(&omega);
    orthonormalize(&mut q);
    for _ in 0..power_iters {
        let mut z = a.t().dot(&q);
        orthonormalize(&mut z);
        q = a.dot(&z);
        orthonormalize(&mut q);
    }
    let b = q.t().dot(a); // target×n
    let (ub, s_, vb) = svd(&b.view())?;
    let u = q.dot(&ub);
    let r = rank.min(s_.len());
    Ok((
        u.slice(s![.., ..r]).to_owned(),
        s_.slice(s![..r]).to_owned(),
        vb.slice(s![.., ..r]).to_owned(),
    ))
}

/// Standard normal sample by Box-Muller, keeping rand's core API the only
/// randomness dependency.
pub fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> Array2<f64> {
        let a = Array2::from_shape_fn((n, n), |_| rng.gen::<f64>() - 0.5);
        (&a + &a.t()).mapv(|v| v * 0.5)
    }

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_sym(8, &mut rng);
        let (vals, vecs) = eigh(&a.view()).unwrap();
        let lam = Array2::from_diag(&vals);
        let rec = vecs.dot(&lam).dot(&vecs.t());
        for (x, y) in a.iter().zip(rec.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
        // descending order
        for w in vals.as_slice().unwrap().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn eigh_orthonormal_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_sym(6, &mut rng);
        let (_, vecs) = eigh(&a.view()).unwrap();
        let gram = vecs.t().dot(&vecs);
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[[i, j]], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cholesky_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Array2::from_shape_fn((5, 4), |_| rng.gen::<f64>());
        let spd = a.dot(&a.t()) + Array2::<f64>::eye(5) * 0.5;
        let l = cholesky(&spd.view()).unwrap();
        let rec = l.dot(&l.t());
        for (x, y) in spd.iter().zip(rec.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = ndarray::array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a.view()).is_err());
    }

    #[test]
    fn svd_reconstructs_tall_and_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &(m, n) in &[(9usize, 5usize), (5, 9), (6, 6)] {
            let a = Array2::from_shape_fn((m, n), |_| rng.gen::<f64>() - 0.3);
            let (u, s_, v) = svd(&a.view()).unwrap();
            let rec = u.dot(&Array2::from_diag(&s_)).dot(&v.t());
            for (x, y) in a.iter().zip(rec.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
            for w in s_.as_slice().unwrap().windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_matches_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Array2::from_shape_fn((7, 4), |_| rng.gen::<f64>());
        let (_, s_, _) = svd(&a.view()).unwrap();
        let gram = a.t().dot(&a);
        let (vals, _) = eigh(&gram.view()).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(s_[i] * s_[i], vals[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn svd_via_gram_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Array2::from_shape_fn((30, 8), |_| rng.gen::<f64>() - 0.4);
        let (_, s_jacobi, _) = svd(&a.view()).unwrap();
        let (u, s_gram, v) = svd_via_gram(&a.view()).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(s_gram[i], s_jacobi[i], epsilon = 1e-8 * s_jacobi[0]);
        }
        let rec = u.dot(&Array2::from_diag(&s_gram)).dot(&v.t());
        for (x, y) in a.iter().zip(rec.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
        // Wide input goes through the transposed path.
        let b = Array2::from_shape_fn((5, 12), |_| rng.gen::<f64>());
        let (u, s_, v) = svd_via_gram(&b.view()).unwrap();
        let rec = u.dot(&Array2::from_diag(&s_)).dot(&v.t());
        for (x, y) in b.iter().zip(rec.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
    }

    #[test]
    fn randomized_svd_recovers_low_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = Array2::from_shape_fn((40, 3), |_| rng.gen::<f64>() - 0.5);
        let v = Array2::from_shape_fn((30, 3), |_| rng.gen::<f64>() - 0.5);
        let a = u.dot(&v.t());
        let (ur, sr, vr) = randomized_svd(&a.view(), 3, 8, 2, &mut rng).unwrap();
        let rec = ur.dot(&Array2::from_diag(&sr)).dot(&vr.t());
        let err = frobenius_norm(&(&a - &rec).view()) / frobenius_norm(&a.view());
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn generalized_eigh_solves_pencil() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_sym(5, &mut rng);
        let c = Array2::from_shape_fn((5, 5), |_| rng.gen::<f64>());
        let b = c.dot(&c.t()) + Array2::<f64>::eye(5);
        let (vals, vecs) = eigh_generalized(&a.view(), &b.view()).unwrap();
        for j in 0..5 {
            let v = vecs.column(j).to_owned();
            let av = a.dot(&v);
            let bv = b.dot(&v).mapv(|x| x * vals[j]);
            for (x, y) in av.iter().zip(bv.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
        // b-orthonormality
        let g = vecs.t().dot(&b).dot(&vecs);
        for i in 0..5 {
            assert_abs_diff_eq!(g[[i, i]], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Array2::from_shape_fn((12, 7), |_| rng.gen::<f64>() - 0.5);
        let (_, s_, _) = svd(&a.view()).unwrap();
        let est = spectral_norm(&a.view(), &mut rng);
        assert_abs_diff_eq!(est, s_[0], epsilon = 1e-6 * s_[0]);
    }

    #[test]
    fn works_at_f32() {
        let a = ndarray::array![[2.0f32, 1.0], [1.0, 2.0]];
        let (vals, _) = eigh(&a.view()).unwrap();
        assert_abs_diff_eq!(vals[0], 3.0f32, epsilon = 1e-5);
        assert_abs_diff_eq!(vals[1], 1.0f32, epsilon = 1e-5);
    }
}
