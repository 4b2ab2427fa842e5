use crate::architecture::{ArchitectureSpec, MappingMatrices};
use crate::channel::SisoChannels;
use crate::error::{Error, Result};
use crate::linalg::{unvec, CMat, CVec, Complex64};
use crate::network::ScatteringMatrix;

use super::effective_channel;

/// `F = (h_IT h_IT^H)^T (x) (h_RI h_RI^H)` and `l = h_RT (conj(h_IT) (x) h_RI)`,
/// so that `|h|^2 = vec(Phi)^H F vec(Phi) + 2 Re{l^H vec(Phi)} + |h_RT|^2`.
pub fn build_quadratic_terms(ch: &SisoChannels) -> (CMat, CVec) {
    let h_it = ch.h_it.map(|z| z.conj());
    let a = h_it.kronecker(&ch.h_ri);
    let hit = &ch.h_it * ch.h_it.adjoint();
    let hri = &ch.h_ri * ch.h_ri.adjoint();
    let f = hit.transpose().kronecker(&hri);
    (f, a * ch.h_rt)
}

/// Linearization of the received power at `vec(Phi_t)` restricted to the
/// free entries of each symmetric diagonal block.
pub fn mm_surrogate(
    f: &CMat,
    phitilde_t: &CVec,
    l: &CVec,
    spec: &ArchitectureSpec,
) -> Result<Vec<Complex64>> {
    let m = spec.m;
    if f.nrows() != m * m || phitilde_t.len() != m * m || l.len() != m * m {
        return Err(Error::ShapeMismatch("quadratic terms do not match the architecture".into()));
    }
    let grad = unvec((f * phitilde_t + l).as_slice(), m)?;
    Ok(pack_blocks(&grad, spec))
}

fn pack_blocks(full: &CMat, spec: &ArchitectureSpec) -> Vec<Complex64> {
    let maps = MappingMatrices::new(&spec.as_group());
    let n = spec.mbar;
    let mut out = Vec::with_capacity(spec.groups() * maps.u);
    for g in 0..spec.groups() {
        let blk = full.view((g * n, g * n), (n, n)).into_owned();
        out.extend(maps.pack_adjoint(&blk));
    }
    out
}

/// The same linearization computed from `h (h_RI h_IT^H)` without forming `F`.
pub(crate) fn surrogate_from_channel(
    ch: &SisoChannels,
    phi: &ScatteringMatrix,
    group_maps: &MappingMatrices,
) -> Result<Vec<Complex64>> {
    let h = effective_channel(ch, phi)?;
    let n = phi.block_size();
    let mut out = Vec::with_capacity(phi.groups() * group_maps.u);
    for g in 0..phi.groups() {
        let s = g * n;
        let ri = ch.h_ri.rows(s, n);
        let it = ch.h_it.rows(s, n);
        let blk = ri * it.adjoint() * h;
        out.extend(group_maps.pack_adjoint(&blk));
    }
    Ok(out)
}
