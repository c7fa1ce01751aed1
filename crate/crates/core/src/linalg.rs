//! Thin wrappers over nalgebra for the small complex decompositions used
//! throughout the crate.

use crate::real::{creal, czero, real};
use crate::{CMat, CVec, Cx, Error, Real, Result};

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Returns `(eigenvalues, eigenvectors)` with eigenvectors
/// as columns matching the eigenvalue order.
pub fn hermitian_eigen_desc<T: Real>(mat: CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = mat.nrows();
    let se = nalgebra::SymmetricEigen::new(mat);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        se.eigenvalues[b]
            .partial_cmp(&se.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<T> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::<T>::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Eigenvalues of a general (non-Hermitian) complex matrix via the complex
/// Schur form.
pub fn eigenvalues<T: Real>(mat: CMat<T>) -> Result<Vec<Cx<T>>> {
    let n = mat.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eps = T::default_epsilon();
    let schur = mat
        .try_schur(eps, 10_000)
        .ok_or_else(|| Error::Degenerate("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv<T: Real>(mat: &CMat<T>, rel_tol: T) -> Result<CMat<T>> {
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(T::zero(), T::max);
    let cut = smax * rel_tol;
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Degenerate("SVD without U".into()))?;
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Degenerate("SVD without V^H".into()))?;
    let k = svd.singular_values.len();
    let mut sinv = CMat::<T>::zeros(k, k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cut && s > T::zero() {
            sinv[(i, i)] = creal(T::one() / s);
        }
    }
    Ok(vt.adjoint() * sinv * u.adjoint())
}

/// Numerical rank of a matrix from its singular values, relative cutoff.
pub fn numerical_rank<T: Real>(mat: &CMat<T>, rel_tol: T) -> usize {
    let svd = mat.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(T::zero(), T::max);
    if smax <= T::zero() {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > smax * rel_tol)
        .count()
}

/// Least-squares solution of `A x = b` through the SVD.
pub fn lstsq<T: Real>(a: &CMat<T>, b: &CVec<T>) -> Result<CVec<T>> {
    if a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "lstsq: A is {}x{}, b has length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let svd = a.clone().svd(true, true);
    svd.solve(b, real(1e-13))
        .map_err(|e| Error::Degenerate(format!("lstsq solve failed: {e}")))
}

/// Rank-`k` truncation `U_k S_k V_k^H` of a matrix.
pub fn rank_truncate<T: Real>(mat: &CMat<T>, k: usize) -> Result<CMat<T>> {
    let svd = mat.clone().svd(true, true);
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Degenerate("SVD without U".into()))?;
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Degenerate("SVD without V^H".into()))?;
    let k = k.min(svd.singular_values.len());
    let mut out = CMat::<T>::zeros(mat.nrows(), mat.ncols());
    for i in 0..k {
        let ui = u.column(i);
        let vi = vt.row(i);
        let s = creal(svd.singular_values[i]);
        // out += s * u_i v_i
        for c in 0..mat.ncols() {
            for r in 0..mat.nrows() {
                out[(r, c)] += s * ui[r] * vi[c];
            }
        }
    }
    Ok(out)
}

/// Vandermonde matrix with `rows` rows: `V[k][l] = poles[l]^k`.
pub fn vandermonde<T: Real>(poles: &[Cx<T>], rows: usize) -> CMat<T> {
    let mut v = CMat::<T>::zeros(rows, poles.len());
    for (l, &z) in poles.iter().enumerate() {
        let mut p = crate::real::cone::<T>();
        for k in 0..rows {
            v[(k, l)] = p;
            p *= z;
        }
    }
    v
}

/// Frobenius norm of the difference, relative to the norm of `reference`.
pub fn rel_err<T: Real>(value: &CMat<T>, reference: &CMat<T>) -> T {
    let denom = reference.norm();
    if denom == T::zero() {
        value.norm()
    } else {
        (value - reference).norm() / denom
    }
}

/// Check that every entry of a matrix is finite.
pub fn all_finite<T: Real>(mat: &CMat<T>) -> bool {
    mat.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[allow(dead_code)]
fn unused<T: Real>() -> Cx<T> {
    czero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::expj;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn hermitian_eigen_sorted_and_consistent() {
        let m = CMat::<f64>::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.3, 0.4),
                c(0.0, -0.1),
                c(0.3, -0.4),
                c(1.0, 0.0),
                c(0.2, 0.0),
                c(0.0, 0.1),
                c(0.2, 0.0),
                c(5.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen_desc(m.clone());
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        for i in 0..3 {
            let v = vecs.column(i).into_owned();
            let resid = (&m * &v - &v * creal(vals[i])).norm();
            assert!(resid < 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn eigenvalues_match_trace() {
        let m = CMat::<f64>::from_row_slice(
            2,
            2,
            &[c(0.1, 0.2), c(1.0, 0.0), c(0.0, -0.5), c(0.4, 0.0)],
        );
        let ev = eigenvalues(m.clone()).unwrap();
        let sum: Cx<f64> = ev.iter().sum();
        let tr = m[(0, 0)] + m[(1, 1)];
        assert!((sum - tr).norm() < 1e-12);
    }

    #[test]
    fn pinv_recovers_identity_on_full_rank() {
        let m = CMat::<f64>::from_fn(5, 2, |i, j| expj(0.3 * i as f64 + 1.1 * j as f64));
        let p = pinv(&m, 1e-12).unwrap();
        let eye = &p * &m;
        assert!((eye - CMat::<f64>::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn vandermonde_powers() {
        let poles = [expj(0.2_f64), expj(-0.4)];
        let v = vandermonde(&poles, 4);
        assert!((v[(3, 1)] - expj(-1.2)).norm() < 1e-12);
    }
}
