//! Small dense complex linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Reciprocal condition estimates below this value are treated as singular.
pub const RCOND_MIN: f64 = 1e-13;

pub const J: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`] for an `n x n` matrix.
pub fn unvec(v: &[Complex64], n: usize) -> Result<CMat> {
    if v.len() != n * n {
        return Err(Error::ShapeMismatch(format!(
            "cannot reshape a length-{} vector into {n}x{n}",
            v.len()
        )));
    }
    Ok(CMat::from_column_slice(n, n, v))
}

pub fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = b` by partially pivoted LU and rejects systems whose
/// reciprocal 1-norm condition number falls below [`RCOND_MIN`].
pub fn solve_checked(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "solve of {}x{} system with {}x{} right-hand side",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let anorm = norm1(a);
    if anorm == 0.0 {
        return Err(Error::SingularNetwork { rcond: 0.0 });
    }
    let lu = a.clone().lu();
    let inv_cols = lu
        .solve(&CMat::identity(n, n))
        .ok_or(Error::SingularNetwork { rcond: 0.0 })?;
    let rcond = 1.0 / (anorm * norm1(&inv_cols));
    if !rcond.is_finite() || rcond < RCOND_MIN {
        return Err(Error::SingularNetwork {
            rcond: if rcond.is_finite() { rcond } else { 0.0 },
        });
    }
    lu.solve(b).ok_or(Error::SingularNetwork { rcond })
}

/// Solves a Hermitian positive definite system, falling back to LU when the
/// Cholesky factorization breaks down.
pub fn solve_hermitian(a: CMat, b: &CVec) -> Option<CVec> {
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(b)),
        None => a.lu().solve(b),
    }
}

pub fn symmetrize(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)]) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Replaces `m` by `(m + m^H) / 2`.
pub fn symmetrize_hermitian(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_and_unvec_are_inverse() {
        let m = CMat::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        let v = vec_of(&m);
        assert_eq!(v[1], c(1.0, 0.0));
        assert_eq!(v[3], c(0.0, 1.0));
        assert_eq!(unvec(v.as_slice(), 3).unwrap(), m);
        assert!(unvec(v.as_slice(), 2).is_err());
    }

    #[test]
    fn solve_rejects_singular_systems() {
        let a = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let b = CMat::identity(2, 2);
        assert!(matches!(solve_checked(&a, &b), Err(Error::SingularNetwork { .. })));
    }

    #[test]
    fn solve_matches_known_solution() {
        let a = CMat::from_row_slice(2, 2, &[c(2.0, 1.0), c(0.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)]);
        let x = CMat::from_row_slice(2, 1, &[c(1.0, -1.0), c(0.5, 2.0)]);
        let b = &a * &x;
        let got = solve_checked(&a, &b).unwrap();
        assert!((got - x).norm() < 1e-14);
    }
}
