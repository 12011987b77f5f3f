use super::{CMat, LinalgError, Result, C64};

/// Thin singular value decomposition `A = U·diag(sigma)·Vᴴ`.
///
/// For an `m×n` input with `k = min(m, n)`, `u` is `m×k`, `v` is `n×k`, both
/// with orthonormal columns, and `sigma` is sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    /// `U·diag(σ)·Vᴴ`.
    pub fn reconstruct(&self) -> CMat {
        let u = &self.u;
        let scaled = CMat::from_fn(u.rows(), u.cols(), |i, j| u[(i, j)] * self.sigma[j]);
        scaled.mul_adjoint(&self.v)
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &CMat) -> Result<Svd> {
    if !a.is_finite() {
        return Err(LinalgError::NonFinite { row: 0, col: 0 });
    }
    if a.rows() < a.cols() {
        let t = svd_tall(&a.adjoint())?;
        return Ok(Svd { u: t.v, sigma: t.sigma, v: t.u });
    }
    svd_tall(a)
}

fn svd_tall(a: &CMat) -> Result<Svd> {
    let (m, n) = a.shape();
    // Columns stored contiguously: g[j] is column j of the working matrix.
    let mut g: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<C64>> =
        (0..n).map(|j| (0..n).map(|i| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    let max_sweeps = 100 * m.max(n).max(1);
    let eps = 1e-15;
    let mut converged = n <= 1;
    let mut sweeps = 0;
    while !converged {
        if sweeps == max_sweeps {
            return Err(LinalgError::ConvergenceFailure(max_sweeps));
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = g[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = g[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = g[p].iter().zip(&g[q]).map(|(x, y)| x.conj() * y).sum();
                let gabs = gamma.norm();
                if gabs == 0.0 || gabs <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let phase = gamma / gabs;
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = phase * s;
                let sp_conj = sp.conj();
                rotate(&mut g, p, q, c, sp, sp_conj);
                rotate(&mut v, p, q, c, sp, sp_conj);
            }
        }
    }

    let mut sigma: Vec<f64> = g.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    sigma = order.iter().map(|&i| sigma[i]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let tiny = smax * (m.max(n) as f64) * f64::EPSILON;

    let mut ucols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for (rank, &idx) in order.iter().enumerate() {
        let s = sigma[rank];
        if s > tiny && s > 0.0 {
            ucols.push(g[idx].iter().map(|z| z / s).collect());
        } else {
            ucols.push(Vec::new());
        }
    }
    complete_orthonormal(&mut ucols, m);

    let u = CMat::from_fn(m, n, |i, j| ucols[j][i]);
    let vm = CMat::from_fn(n, n, |i, j| v[order[j]][i]);
    Ok(Svd { u, sigma, v: vm })
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, sp: C64, sp_conj: C64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = xp * c - sp_conj * yq;
        *y = sp * xp + yq * c;
    }
}

/// Fills empty columns with unit vectors orthogonal to the filled ones
/// (modified Gram-Schmidt against the standard basis).
fn complete_orthonormal(cols: &mut [Vec<C64>], m: usize) {
    let mut basis = 0;
    for j in 0..cols.len() {
        if !cols[j].is_empty() {
            continue;
        }
        loop {
            assert!(basis < m, "cannot complete orthonormal set");
            let mut cand: Vec<C64> = (0..m).map(|i| C64::new(if i == basis { 1.0 } else { 0.0 }, 0.0)).collect();
            basis += 1;
            for _ in 0..2 {
                for other in cols.iter().filter(|c| !c.is_empty()) {
                    let proj: C64 = other.iter().zip(&cand).map(|(o, x)| o.conj() * x).sum();
                    for (x, o) in cand.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                cols[j] = cand.iter().map(|z| z / norm).collect();
                break;
            }
        }
    }
}
