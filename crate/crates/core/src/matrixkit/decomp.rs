use super::{CMat, LinalgError, Result, C64};

/// Relative asymmetry tolerated before a matrix is rejected as non-Hermitian.
const HERMITIAN_TOL: f64 = 1e-10;

/// Condition number (1-norm) beyond which a general solve is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

fn require_square(a: &CMat, what: &str) -> Result<usize> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{what} needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

/// Lower-triangular Cholesky factor `L` with `L·Lᴴ = R`.
pub fn cholesky_lower(r: &CMat) -> Result<CMat> {
    let n = require_square(r, "cholesky")?;
    let defect = r.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian(defect));
    }
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = r[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = r[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Forward substitution: solves `L·X = Y` for lower-triangular `L`.
pub fn solve_lower(l: &CMat, y: &CMat) -> Result<CMat> {
    let n = require_square(l, "triangular solve")?;
    if y.rows() != n {
        return Err(LinalgError::DimensionMismatch(format!("triangular solve: {n}x{n} against {} rows", y.rows())));
    }
    let m = y.cols();
    let mut x = y.clone();
    for i in 0..n {
        let d = l[(i, i)];
        if d.norm() == 0.0 {
            return Err(LinalgError::Singular { cond: f64::INFINITY });
        }
        for k in 0..i {
            let lik = l[(i, k)];
            if lik.norm_sqr() == 0.0 {
                continue;
            }
            for c in 0..m {
                let v = x[(k, c)];
                x[(i, c)] -= lik * v;
            }
        }
        for c in 0..m {
            x[(i, c)] /= d;
        }
    }
    Ok(x)
}

/// Back substitution: solves `U·X = Y` for upper-triangular `U`.
pub fn solve_upper(u: &CMat, y: &CMat) -> Result<CMat> {
    let n = require_square(u, "triangular solve")?;
    if y.rows() != n {
        return Err(LinalgError::DimensionMismatch(format!("triangular solve: {n}x{n} against {} rows", y.rows())));
    }
    let m = y.cols();
    let mut x = y.clone();
    for i in (0..n).rev() {
        let d = u[(i, i)];
        if d.norm() == 0.0 {
            return Err(LinalgError::Singular { cond: f64::INFINITY });
        }
        for k in i + 1..n {
            let uik = u[(i, k)];
            if uik.norm_sqr() == 0.0 {
                continue;
            }
            for c in 0..m {
                let v = x[(k, c)];
                x[(i, c)] -= uik * v;
            }
        }
        for c in 0..m {
            x[(i, c)] /= d;
        }
    }
    Ok(x)
}

/// Solves `A·X = Y` for Hermitian positive-definite `A` via Cholesky.
pub fn hermitian_solve(a: &CMat, y: &CMat) -> Result<CMat> {
    let l = cholesky_lower(a)?;
    if y.rows() != a.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "hermitian solve: {}x{} against {} rows",
            a.rows(),
            a.cols(),
            y.rows()
        )));
    }
    let z = solve_lower(&l, y)?;
    solve_upper(&l.adjoint(), &z)
}

struct Lu {
    lu: CMat,
    perm: Vec<usize>,
}

fn lu_factor(a: &CMat) -> Result<Lu> {
    let n = require_square(a, "LU")?;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| lu[(i, k)].norm().total_cmp(&lu[(j, k)].norm())).unwrap_or(k);
        if lu[(p, k)].norm() == 0.0 {
            return Err(LinalgError::Singular { cond: f64::INFINITY });
        }
        if p != k {
            perm.swap(p, k);
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / pivot;
            lu[(i, k)] = f;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
        }
    }
    Ok(Lu { lu, perm })
}

impl Lu {
    fn solve(&self, y: &CMat) -> CMat {
        let n = self.lu.rows();
        let m = y.cols();
        let mut x = CMat::from_fn(n, m, |i, j| y[(self.perm[i], j)]);
        for i in 0..n {
            for k in 0..i {
                let f = self.lu[(i, k)];
                for c in 0..m {
                    let v = x[(k, c)];
                    x[(i, c)] -= f * v;
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu[(i, k)];
                for c in 0..m {
                    let v = x[(k, c)];
                    x[(i, c)] -= f * v;
                }
            }
            let d = self.lu[(i, i)];
            for c in 0..m {
                x[(i, c)] /= d;
            }
        }
        x
    }
}

/// General inverse by partial-pivoting LU. Fails with [`LinalgError::Singular`]
/// when the 1-norm condition number exceeds [`MAX_CONDITION`].
pub fn inverse(a: &CMat) -> Result<CMat> {
    let lu = lu_factor(a)?;
    let inv = lu.solve(&CMat::identity(a.rows()));
    let cond = a.norm_one() * inv.norm_one();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(LinalgError::Singular { cond });
    }
    Ok(inv)
}

/// General solve `A·X = Y`, with the same singularity criterion as [`inverse`].
pub fn solve(a: &CMat, y: &CMat) -> Result<CMat> {
    if y.rows() != a.rows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "solve: {}x{} against {} rows",
            a.rows(),
            a.cols(),
            y.rows()
        )));
    }
    Ok(&inverse(a)? * y)
}
