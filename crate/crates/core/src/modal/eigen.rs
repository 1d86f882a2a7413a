//! Cyclic Jacobi eigensolver for dense symmetric matrices.

/// Sweeps stop once the off-diagonal Frobenius norm falls below this
/// fraction of the full norm, or stops shrinking.
const RELATIVE_OFF_TOLERANCE: f64 = 1e-15;
const MAX_SWEEPS: usize = 100;

pub struct SymmetricEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column `i` (stored as row `i`) is the unit eigenvector of `values[i]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
    /// Final off-diagonal norm relative to the matrix norm.
    pub relative_off: f64,
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Eigen-decomposition of the row-major symmetric `n × n` matrix `a`.
pub fn jacobi(mut a: Vec<f64>, n: usize) -> SymmetricEigen {
    assert_eq!(a.len(), n * n);
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut off = off_norm(&a, n);
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS && off > RELATIVE_OFF_TOLERANCE * norm {
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                // rotation angle zeroing a[p][q] (Golub & Van Loan, sym.schur2)
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        let next = off_norm(&a, n);
        if next >= off {
            off = next;
            break;
        }
        off = next;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    SymmetricEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: order
            .iter()
            .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
            .collect(),
        sweeps,
        relative_off: if norm > 0.0 { off / norm } else { 0.0 },
    }
}
