//! Admittance and scattering descriptions of a block-diagonal reciprocal
//! network, and the conversions between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_checked, symmetrize, CMat, Complex64};

/// Relative tolerance used when validating block symmetry.
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CharacteristicAdmittance(f64);

impl CharacteristicAdmittance {
    pub fn new(y0: f64) -> Result<Self> {
        if y0 > 0.0 && y0.is_finite() {
            Ok(Self(y0))
        } else {
            Err(Error::InvalidParameter(format!(
                "characteristic admittance must be positive, got {y0}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for CharacteristicAdmittance {
    fn default() -> Self {
        Self(1.0 / 50.0)
    }
}

impl TryFrom<f64> for CharacteristicAdmittance {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CharacteristicAdmittance> for f64 {
    fn from(v: CharacteristicAdmittance) -> f64 {
        v.0
    }
}

fn check_block_structure(m: &CMat, block_size: usize, what: &str) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::ShapeMismatch(format!("{what} must be square")));
    }
    if block_size == 0 || !n.is_multiple_of(block_size) {
        return Err(Error::ShapeMismatch(format!(
            "block size {block_size} does not divide dimension {n}"
        )));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for j in 0..n {
        for i in 0..n {
            let same_block = i / block_size == j / block_size;
            if !same_block && m[(i, j)] != Complex64::new(0.0, 0.0) {
                return Err(Error::ShapeMismatch(format!(
                    "{what} has a nonzero off-block entry at ({i}, {j})"
                )));
            }
            if same_block && (m[(i, j)] - m[(j, i)]).norm() > SYMMETRY_TOL * scale.max(1e-300) {
                return Err(Error::ShapeMismatch(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn block_of(m: &CMat, block_size: usize, g: usize) -> CMat {
    let s = g * block_size;
    m.view((s, s), (block_size, block_size)).into_owned()
}

/// Places square blocks along the diagonal of a zero matrix.
pub fn block_diagonal(blocks: &[CMat]) -> Result<CMat> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty block list".into()))?;
    let mbar = first.nrows();
    if blocks.iter().any(|b| b.nrows() != mbar || b.ncols() != mbar) {
        return Err(Error::ShapeMismatch(
            "blocks must all be square with the same size".into(),
        ));
    }
    let n = mbar * blocks.len();
    let mut out = CMat::zeros(n, n);
    for (g, b) in blocks.iter().enumerate() {
        out.view_mut((g * mbar, g * mbar), (mbar, mbar)).copy_from(b);
    }
    Ok(out)
}

/// Block-diagonal symmetric admittance matrix, in siemens.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    entries: CMat,
    block_size: usize,
}

impl AdmittanceMatrix {
    pub fn new(entries: CMat, block_size: usize) -> Result<Self> {
        check_block_structure(&entries, block_size, "admittance matrix")?;
        Ok(Self { entries, block_size })
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn groups(&self) -> usize {
        self.entries.nrows() / self.block_size
    }

    pub fn block(&self, g: usize) -> CMat {
        block_of(&self.entries, self.block_size, g)
    }
}

/// Block-diagonal symmetric scattering matrix, dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    entries: CMat,
    block_size: usize,
}

impl ScatteringMatrix {
    pub fn new(entries: CMat, block_size: usize) -> Result<Self> {
        check_block_structure(&entries, block_size, "scattering matrix")?;
        Ok(Self { entries, block_size })
    }

    pub fn from_blocks(blocks: &[CMat]) -> Result<Self> {
        let entries = block_diagonal(blocks)?;
        let block_size = blocks[0].nrows();
        Self::new(entries, block_size)
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn groups(&self) -> usize {
        self.entries.nrows() / self.block_size
    }

    pub fn block(&self, g: usize) -> CMat {
        block_of(&self.entries, self.block_size, g)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// `(sI + X)^{-1} (sI - X)`, symmetrized.
fn cayley(x: &CMat, s: f64) -> Result<CMat> {
    let n = x.nrows();
    let eye = CMat::identity(n, n) * Complex64::new(s, 0.0);
    let mut out = solve_checked(&(&eye + x), &(&eye - x))?;
    symmetrize(&mut out);
    Ok(out)
}

/// Scattering block of a single admittance block.
pub fn scattering_block(y: &CMat, y0: f64) -> Result<CMat> {
    cayley(y, y0)
}

/// Admittance block of a single scattering block.
pub fn admittance_block(phi: &CMat, y0: f64) -> Result<CMat> {
    Ok(cayley(phi, 1.0)? * Complex64::new(y0, 0.0))
}

pub fn admittance_to_scattering(
    y: &AdmittanceMatrix,
    y0: CharacteristicAdmittance,
) -> Result<ScatteringMatrix> {
    let blocks = (0..y.groups())
        .map(|g| scattering_block(&y.block(g), y0.value()))
        .collect::<Result<Vec<_>>>()?;
    ScatteringMatrix::from_blocks(&blocks)
}

pub fn scattering_to_admittance(
    phi: &ScatteringMatrix,
    y0: CharacteristicAdmittance,
) -> Result<AdmittanceMatrix> {
    let blocks = (0..phi.groups())
        .map(|g| admittance_block(&phi.block(g), y0.value()))
        .collect::<Result<Vec<_>>>()?;
    assemble_block_diagonal(&blocks)
}

pub fn assemble_block_diagonal(blocks: &[CMat]) -> Result<AdmittanceMatrix> {
    let entries = block_diagonal(blocks)?;
    AdmittanceMatrix::new(entries, blocks[0].nrows())
}
