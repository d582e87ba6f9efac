//! Linear assignment on the final AMP iterates.

use nalgebra::DMatrix;

use crate::amp::{AmpIterate, SeedPair};
use crate::error::{param, Error, Result};
use crate::model::Permutation;

/// `score[i,j] = ⟨hᵢ, ℓⱼ⟩` with the vertex labels of rows and columns.
#[derive(Clone, Debug)]
pub struct AssignmentProblem {
    pub score: DMatrix<f64>,
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
}

pub fn build_scores(it: &AmpIterate) -> Result<AssignmentProblem> {
    if it.h.ncols() != it.l.ncols() || it.h.ncols() == 0 {
        return param(format!(
            "final iterates missing or mismatched: h {:?}, ℓ {:?}",
            it.h.shape(),
            it.l.shape()
        ));
    }
    let score = &it.h * it.l.transpose();
    if !score.iter().all(|x| x.is_finite()) {
        return Err(Error::Numerical("non-finite assignment score".into()));
    }
    Ok(AssignmentProblem {
        score,
        row_labels: it.rows_a.clone(),
        col_labels: it.rows_b.clone(),
    })
}

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// potentials). Returns `assignment[row] = col`.
pub fn hungarian_min(cost: &DMatrix<f64>) -> Result<Vec<usize>> {
    let m = cost.nrows();
    if cost.ncols() != m {
        return param(format!("assignment needs a square matrix, got {:?}", cost.shape()));
    }
    if !cost.iter().all(|x| x.is_finite()) {
        return param("assignment costs must be finite");
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if j1 == 0 {
                return Err(Error::Internal("assignment search found no free column".into()));
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; m];
    for j in 1..=m {
        assignment[p[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// `σ` maximizing `Σᵢ score[i, σ(i)]`, as row → column positions.
pub fn solve_lap(p: &AssignmentProblem) -> Result<Vec<usize>> {
    hungarian_min(&(-&p.score))
}

pub fn assignment_value(score: &DMatrix<f64>, sigma: &[usize]) -> f64 {
    sigma.iter().enumerate().map(|(i, &j)| score[(i, j)]).sum()
}

/// `π(u_k) = v_k` on seeds and `π(row_labels[i]) = col_labels[σ(i)]` elsewhere.
pub fn assemble_pi(seeds: &SeedPair, p: &AssignmentProblem, sigma: &[usize]) -> Result<Permutation> {
    let n = seeds.len() + p.row_labels.len();
    if sigma.len() != p.row_labels.len() || p.col_labels.len() != p.row_labels.len() {
        return Err(Error::Internal("assignment size does not match labels".into()));
    }
    let mut pi = vec![usize::MAX; n];
    for (&u, &v) in seeds.u_seq.iter().zip(&seeds.v_seq) {
        pi[u] = v;
    }
    for (i, &j) in sigma.iter().enumerate() {
        let u = p.row_labels[i];
        if pi[u] != usize::MAX {
            return Err(Error::Internal(format!("vertex {u} assigned twice")));
        }
        pi[u] = p.col_labels[j];
    }
    Permutation::from_vec(pi).map_err(|e| Error::Internal(format!("assembled map is not a permutation: {e}")))
}
