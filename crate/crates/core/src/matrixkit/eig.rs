use super::{CMat, LinalgError, Result, C64};

/// Eigen-decomposition `A = V·diag(values)·Vᴴ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMat,
}

/// Cyclic complex Jacobi eigen-solver for Hermitian matrices.
pub fn hermitian_eig(a: &CMat) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch("eigen-decomposition needs a square matrix".into()));
    }
    let defect = a.hermitian_defect();
    if defect > 1e-10 {
        return Err(LinalgError::NotHermitian(defect));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = CMat::identity(n);
    let scale = m.fro_norm();
    let max_sweeps = 100 * n.max(1);
    let mut converged = n <= 1 || scale == 0.0;
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g <= 1e-300 || g <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / g;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let zeta = (aqq - app) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // J = [[c, s·e^{iφ}], [−s·e^{−iφ}, c]] on the (p, q) plane.
                let sp = phase * s;
                let sp_conj = sp.conj();
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c - sp_conj * mkq;
                    m[(k, q)] = sp * mkp + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c - sp * mqk;
                    m[(q, k)] = sp_conj * mpk + mqk * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - sp_conj * vkq;
                    v[(k, q)] = sp * vkp + vkq * c;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::ConvergenceFailure(max_sweeps));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Principal (positive semidefinite) square root of a Hermitian PSD matrix.
///
/// Eigenvalues within `1e-12·λ_max` below zero are clamped to zero; anything
/// more negative is reported as [`LinalgError::NotPositiveDefinite`].
pub fn hermitian_sqrt(a: &CMat) -> Result<CMat> {
    let eig = hermitian_eig(a)?;
    let lmax = eig.values.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let mut roots = Vec::with_capacity(eig.values.len());
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam < -1e-12 * lmax.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::NotPositiveDefinite { index: i, pivot: lam });
        }
        roots.push(lam.max(0.0).sqrt());
    }
    let v = &eig.vectors;
    let n = a.rows();
    let scaled = CMat::from_fn(n, n, |i, j| v[(i, j)] * roots[j]);
    Ok(scaled.mul_adjoint(v).hermitian_part())
}
