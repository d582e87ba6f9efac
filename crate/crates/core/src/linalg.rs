//! Dense linear-algebra helpers.
//!
//! The leading singular triple of a large square matrix is computed by
//! Golub–Kahan–Lanczos bidiagonalization with full reorthogonalization and
//! explicit restarts. Matrices of order `n <= DENSE_SVD_MAX` go through a
//! dense SVD instead.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const DENSE_SVD_MAX: usize = 200;

/// Relative residual accepted for a Ritz triple.
pub const SINGULAR_TOL: f64 = 1e-10;

const MAX_KRYLOV: usize = 160;
const MAX_RESTARTS: usize = 60;

#[derive(Clone, Debug)]
pub struct SingularTriple {
    pub sigma: f64,
    /// Unit left singular vector (`M r = sigma * l`).
    pub left: DVector<f64>,
    /// Unit right singular vector.
    pub right: DVector<f64>,
    /// Matrix-vector products spent (0 for the dense path).
    pub matvecs: usize,
}

/// Leading singular triple of `m`.
pub fn top_singular(m: &DMatrix<f64>) -> Result<SingularTriple> {
    if m.nrows() <= DENSE_SVD_MAX && m.ncols() <= DENSE_SVD_MAX {
        top_singular_dense(m)
    } else {
        top_singular_lanczos(m, SINGULAR_TOL)
    }
}

pub fn top_singular_dense(m: &DMatrix<f64>) -> Result<SingularTriple> {
    if m.is_empty() {
        return Err(Error::Parameter("empty matrix".into()));
    }
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("dense SVD did not return vectors".into())),
    };
    let k = svd.singular_values.imax();
    Ok(SingularTriple {
        sigma: svd.singular_values[k],
        left: u.column(k).into_owned(),
        right: vt.row(k).transpose(),
        matvecs: 0,
    })
}

fn orthogonalize(x: &mut DVector<f64>, basis: &[DVector<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(x);
            x.axpy(-c, b, 1.0);
        }
    }
}

/// Top triple of the upper bidiagonal matrix with diagonal `alpha` and
/// superdiagonal `beta` (length `alpha.len() - 1`).
fn bidiag_top(alpha: &[f64], beta: &[f64]) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let k = alpha.len();
    let mut b = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        b[(i, i)] = alpha[i];
        if i + 1 < k {
            b[(i, i + 1)] = beta[i];
        }
    }
    let t = top_singular_dense(&b)?;
    Ok((t.sigma, t.left, t.right))
}

/// Golub–Kahan–Lanczos with full reorthogonalization.
///
/// Converges when the residual `‖Mᵀ l − σ r‖` drops below `tol * σ`.
pub fn top_singular_lanczos(m: &DMatrix<f64>, tol: f64) -> Result<SingularTriple> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter("empty matrix".into()));
    }
    let max_k = MAX_KRYLOV.min(rows).min(cols);
    // fixed start so the solver is a deterministic function of its input
    let mut start_rng = rng_from_seed(0x005E_ED0F_1A2C_20E5);
    let mut start = DVector::<f64>::from_fn(cols, |_, _| start_rng.sample(StandardNormal));
    let mut matvecs = 0usize;
    let mut last_resid = f64::NAN;

    for _restart in 0..=MAX_RESTARTS {
        let nrm = start.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::Numerical("Lanczos start vector degenerate".into()));
        }
        let mut vs: Vec<DVector<f64>> = vec![start.unscale(nrm)];
        let mut us: Vec<DVector<f64>> = Vec::new();
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();

        for j in 0..max_k {
            let mut u = m * &vs[j];
            matvecs += 1;
            if j > 0 {
                u.axpy(-betas[j - 1], &us[j - 1], 1.0);
            }
            orthogonalize(&mut u, &us);
            let alpha = u.norm();
            if !alpha.is_finite() {
                return Err(Error::Numerical("non-finite value in Lanczos step".into()));
            }
            if alpha <= f64::EPSILON * 1e3 * (1.0 + alphas.iter().cloned().fold(0.0, f64::max)) {
                // Krylov space exhausted: M v_j lies in span(U)
                if alphas.is_empty() {
                    // M annihilates the start vector; fall back to dense
                    return top_singular_dense(m).map(|mut t| {
                        t.matvecs = matvecs;
                        t
                    });
                }
                // the bidiagonal gains a zero diagonal entry below the last beta
                let mut closed = alphas.clone();
                closed.push(0.0);
                let (s, y, x) = bidiag_top(&closed, &betas)?;
                return Ok(assemble(s, &y, &x, &us, &vs, matvecs));
            }
            u.unscale_mut(alpha);
            us.push(u);
            alphas.push(alpha);

            let mut w = m.tr_mul(&us[j]);
            matvecs += 1;
            w.axpy(-alpha, &vs[j], 1.0);
            orthogonalize(&mut w, &vs);
            let beta = w.norm();

            let (s, y, x) = bidiag_top(&alphas, &betas)?;
            let resid = beta * y[y.len() - 1].abs();
            last_resid = resid / s.max(f64::MIN_POSITIVE);
            if resid <= tol * s || beta <= f64::EPSILON * s {
                return Ok(assemble(s, &y, &x, &us, &vs, matvecs));
            }
            if j + 1 == max_k {
                // restart from the current Ritz vector
                let mut r = DVector::<f64>::zeros(cols);
                for (c, v) in x.iter().zip(vs.iter()) {
                    r.axpy(*c, v, 1.0);
                }
                start = r;
                break;
            }
            betas.push(beta);
            vs.push(w.unscale(beta));
        }
    }
    Err(Error::Numerical(format!(
        "leading singular pair did not converge after {matvecs} products (relative residual {last_resid:.3e})"
    )))
}

fn assemble(
    s: f64,
    y: &DVector<f64>,
    x: &DVector<f64>,
    us: &[DVector<f64>],
    vs: &[DVector<f64>],
    matvecs: usize,
) -> SingularTriple {
    let n_left = us[0].len();
    let n_right = vs[0].len();
    let mut left = DVector::<f64>::zeros(n_left);
    for (c, u) in y.iter().zip(us) {
        left.axpy(*c, u, 1.0);
    }
    let mut right = DVector::<f64>::zeros(n_right);
    for (c, v) in x.iter().zip(vs) {
        right.axpy(*c, v, 1.0);
    }
    let ln = left.norm();
    let rn = right.norm();
    SingularTriple {
        sigma: s,
        left: left.unscale(ln),
        right: right.unscale(rn),
        matvecs,
    }
}

pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(top_singular(m)?.sigma)
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::<f64>::zeros(m.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest absolute off-diagonal entry.
pub fn max_abs_offdiag(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                best = best.max(m[(i, j)].abs());
            }
        }
    }
    best
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)].to_bits() == m[(j, i)].to_bits()))
}

/// Copy of the principal submatrix on `idx` (in the given order).
pub fn principal_submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}
