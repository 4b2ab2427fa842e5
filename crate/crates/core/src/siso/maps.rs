//! The bilinear constraint `(y0 I + Y_g) Phi_g = y0 I - Y_g` written as a
//! linear map of either the scattering or the admittance unknowns.

use nalgebra::DMatrix;

use crate::architecture::MappingMatrices;
use crate::error::{Error, Result};
use crate::linalg::{c, dot_h, norm_sq, solve_hermitian, vec_of, CMat, CVec, Complex64};

fn real_to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|v| c(v, 0.0))
}

/// `C_g = (I (x) (y0 I + Y_g)) P` and `c_g = vec(y0 I - Y_g)` for components
/// `ybar_g` in siemens; `P` is the fully-connected packing of `Phi_g`.
pub fn build_c_map(
    ybar_g: &[Complex64],
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    y0: f64,
) -> Result<(CMat, CVec)> {
    let n = maps.mbar();
    let y = maps.block(ybar_g)?;
    let eye = CMat::identity(n, n);
    let a = &eye * c(y0, 0.0) + &y;
    let cm = eye.kronecker(&a) * real_to_complex(&group_maps.p);
    Ok((cm, vec_of(&(&eye * c(y0, 0.0) - y))))
}

/// `D_g = ((Phi_g + I)^T (x) I) B P` and `d_g = y0 vec(I - Phi_g)` for the packed
/// scattering block `phibar_g`.
pub fn build_d_map(
    phibar_g: &[Complex64],
    maps: &MappingMatrices,
    group_maps: &MappingMatrices,
    y0: f64,
) -> Result<(CMat, CVec)> {
    if group_maps.mbar() != maps.mbar() {
        return Err(Error::ShapeMismatch("group sizes differ".into()));
    }
    let n = maps.mbar();
    let phi = group_maps.unpack(phibar_g)?;
    let eye = CMat::identity(n, n);
    let d = (&phi + &eye).transpose().kronecker(&eye) * real_to_complex(&(&maps.b * &maps.p));
    Ok((d, vec_of(&((&eye - phi) * c(y0, 0.0)))))
}

/// Components up to this count are solved by a dense factorization.
const DENSE_LIMIT: usize = 6;

/// Normal-equation operator `rho1 D^H D + rho2 I` of the admittance update in
/// normalized units, applied without forming `D`.
pub struct YbarOperator<'a> {
    maps: &'a MappingMatrices,
    a: CMat,
    w: CMat,
    rho1: f64,
    rho2: f64,
}

impl<'a> YbarOperator<'a> {
    /// `phi` is the current scattering block.
    pub fn new(maps: &'a MappingMatrices, phi: &CMat, rho1: f64, rho2: f64) -> Self {
        let n = phi.nrows();
        let a = phi + CMat::identity(n, n);
        let w = &a * a.adjoint();
        Self { maps, a, w, rho1, rho2 }
    }

    /// `D x`, as a matrix: `Y(x) (Phi + I)`.
    pub fn forward(&self, x: &[Complex64]) -> Result<CMat> {
        Ok(self.maps.block(x)? * &self.a)
    }

    /// `D^H v` for `v = vec(m)`.
    pub fn adjoint(&self, m: &CMat) -> Vec<Complex64> {
        self.maps.block_adjoint(&(m * self.a.adjoint()))
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let yw = self.maps.block(x)? * &self.w;
        let mut out = self.maps.block_adjoint(&yw);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = *o * self.rho1 + xi * self.rho2;
        }
        Ok(out)
    }

    fn dense(&self) -> Result<CMat> {
        let u = self.maps.u;
        let mut m = CMat::zeros(u, u);
        let mut e = vec![c(0.0, 0.0); u];
        for k in 0..u {
            e[k] = c(1.0, 0.0);
            let col = self.apply(&e)?;
            m.column_mut(k).copy_from_slice(&col);
            e[k] = c(0.0, 0.0);
        }
        Ok(m)
    }

    fn solve_dense(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let m = self.dense()?;
        solve_hermitian(m, &CVec::from_column_slice(rhs))
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| Error::SingularSubproblem("admittance update".into()))
    }

    /// Solves the normal equations, warm-started at `x0`.
    pub fn solve(&self, rhs: &[Complex64], x0: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.maps.u <= DENSE_LIMIT {
            return self.solve_dense(rhs);
        }
        let max_iter = 2 * self.maps.u + 20;
        match conjugate_gradient(|x| self.apply(x), rhs, x0.to_vec(), 1e-12, max_iter)? {
            Some(x) => Ok(x),
            None => self.solve_dense(rhs),
        }
    }
}

/// Conjugate gradients for a Hermitian positive definite operator. Returns
/// `None` when the relative residual does not reach `tol` within `max_iter`.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    b: &[Complex64],
    mut x: Vec<Complex64>,
    tol: f64,
    max_iter: usize,
) -> Result<Option<Vec<Complex64>>> {
    let bnorm = norm_sq(b).sqrt();
    if bnorm == 0.0 {
        return Ok(Some(vec![c(0.0, 0.0); b.len()]));
    }
    let ax = apply(&x)?;
    let mut r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rs = norm_sq(&r);
    for _ in 0..max_iter {
        if rs.sqrt() <= tol * bnorm {
            return Ok(Some(x));
        }
        let ap = apply(&p)?;
        let curv = dot_h(&p, &ap).re;
        if !(curv > 0.0) {
            return Ok(None);
        }
        let alpha = rs / curv;
        for i in 0..x.len() {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rs_new = norm_sq(&r);
        let beta = rs_new / rs;
        for i in 0..p.len() {
            p[i] = r[i] + p[i] * beta;
        }
        rs = rs_new;
    }
    Ok((rs.sqrt() <= tol * bnorm).then_some(x))
}
