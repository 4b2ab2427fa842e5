//! BD-RIS topologies and the linear maps from the free admittance components
//! of a group to its admittance block.
//!
//! Vectorization is column-major throughout: entry `(i, j)` of an `n x n`
//! matrix sits at index `i + j n`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, Complex64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Group,
    ForestTridiagonal,
    ForestArrowhead,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Group => "group",
            Topology::ForestTridiagonal => "forest_tridiagonal",
            Topology::ForestArrowhead => "forest_arrowhead",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub m: usize,
    pub mbar: usize,
    pub topology: Topology,
    /// Hub port of each arrowhead group, 1-based.
    pub arrowhead_port: usize,
}

impl ArchitectureSpec {
    pub fn new(m: usize, mbar: usize, topology: Topology) -> Result<Self> {
        let spec = Self { m, mbar, topology, arrowhead_port: 1 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn group(m: usize, mbar: usize) -> Result<Self> {
        Self::new(m, mbar, Topology::Group)
    }

    pub fn with_arrowhead_port(self, port: usize) -> Result<Self> {
        let spec = Self { arrowhead_port: port, ..self };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mbar == 0 || self.m == 0 || !self.m.is_multiple_of(self.mbar) {
            return Err(Error::InvalidParameter(format!(
                "group size {} must divide element count {}",
                self.mbar, self.m
            )));
        }
        if self.arrowhead_port == 0 || self.arrowhead_port > self.mbar {
            return Err(Error::InvalidParameter(format!(
                "arrowhead port {} outside 1..={}",
                self.arrowhead_port, self.mbar
            )));
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.m / self.mbar
    }

    /// Number of tunable components per group.
    pub fn u(&self) -> usize {
        match self.topology {
            Topology::Group => self.mbar * (self.mbar + 1) / 2,
            _ => 2 * self.mbar - 1,
        }
    }

    /// The fully-connected group spec with the same element count and group
    /// size; its mapping packs the free entries of a symmetric block.
    pub fn as_group(&self) -> Self {
        Self { topology: Topology::Group, arrowhead_port: 1, ..*self }
    }
}

/// Upper-triangular `(row, col)` positions, 0-based, of each free component
/// in packing order.
pub fn free_positions(spec: &ArchitectureSpec) -> Vec<(usize, usize)> {
    let n = spec.mbar;
    match spec.topology {
        Topology::Group => (0..n).flat_map(|r| (r..n).map(move |c| (r, c))).collect(),
        Topology::ForestTridiagonal => (0..2 * n - 1).map(|k| (k / 2, k.div_ceil(2))).collect(),
        Topology::ForestArrowhead => {
            let h = spec.arrowhead_port - 1;
            let spokes = (0..n).map(|j| (h.min(j), h.max(j)));
            let rest = (0..n).filter(|&i| i != h).map(|i| (i, i));
            spokes.chain(rest).collect()
        }
    }
}

/// `B` with `vec(Y_g) = B vec(Ybar_g)`: off-diagonal entries negate, diagonal
/// entries are row sums.
pub fn build_b(mbar: usize) -> DMatrix<f64> {
    let n = mbar;
    let mut b = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            if i == j {
                for k in 0..n {
                    b[(i + i * n, i + k * n)] = 1.0;
                }
            } else {
                b[(i + j * n, i + j * n)] = -1.0;
            }
        }
    }
    b
}

/// `P` with `vec(Ybar_g) = P ybar_g`.
pub fn build_p(spec: &ArchitectureSpec) -> DMatrix<f64> {
    let n = spec.mbar;
    let pos = free_positions(spec);
    let mut p = DMatrix::zeros(n * n, pos.len());
    for (k, &(r, c)) in pos.iter().enumerate() {
        p[(r + c * n, k)] = 1.0;
        p[(c + r * n, k)] = 1.0;
    }
    p
}

/// Pairs of ports, 1-based, that are not connected within a group.
pub fn interconnect_set(spec: &ArchitectureSpec) -> BTreeSet<(usize, usize)> {
    let n = spec.mbar;
    let c = spec.arrowhead_port;
    let pairs = (1..=n).flat_map(|i| (1..=n).map(move |j| (i, j)));
    pairs
        .filter(|&(i, j)| match spec.topology {
            Topology::Group => false,
            Topology::ForestTridiagonal => i.abs_diff(j) > 1,
            Topology::ForestArrowhead => i != c && j != c && i != j,
        })
        .collect()
}

pub fn circuit_complexity(spec: &ArchitectureSpec) -> usize {
    spec.groups() * spec.u()
}

/// `unvec(B P ybar_g)` by explicit matrix products.
pub fn ybar_to_block(b: &DMatrix<f64>, p: &DMatrix<f64>, ybar_g: &[Complex64]) -> Result<CMat> {
    if ybar_g.len() != p.ncols() || b.ncols() != p.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "ybar of length {} does not match P with {} columns",
            ybar_g.len(),
            p.ncols()
        )));
    }
    let n = (b.nrows() as f64).sqrt().round() as usize;
    let bp = (b * p).map(|v| Complex64::new(v, 0.0));
    let v = bp * nalgebra::DVector::from_column_slice(ybar_g);
    crate::linalg::unvec(v.as_slice(), n)
}

/// Cached `B`, `P` and the component layout of one architecture.
#[derive(Debug, Clone)]
pub struct MappingMatrices {
    pub b: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub u: usize,
    mbar: usize,
    positions: Vec<(usize, usize)>,
}

impl MappingMatrices {
    pub fn new(spec: &ArchitectureSpec) -> Self {
        Self {
            b: build_b(spec.mbar),
            p: build_p(spec),
            u: spec.u(),
            mbar: spec.mbar,
            positions: free_positions(spec),
        }
    }

    pub fn mbar(&self) -> usize {
        self.mbar
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    /// Symmetric matrix whose free entries are `v`, i.e. `unvec(P v)`.
    pub fn unpack(&self, v: &[Complex64]) -> Result<CMat> {
        self.check_len(v)?;
        let mut m = CMat::zeros(self.mbar, self.mbar);
        for (&(r, c), &x) in self.positions.iter().zip(v) {
            m[(r, c)] = x;
            m[(c, r)] = x;
        }
        Ok(m)
    }

    /// `P^T vec(m)`: sums the two mirrored entries of each off-diagonal slot.
    pub fn pack_adjoint(&self, m: &CMat) -> Vec<Complex64> {
        self.positions
            .iter()
            .map(|&(r, c)| if r == c { m[(r, r)] } else { m[(r, c)] + m[(c, r)] })
            .collect()
    }

    /// Free entries of a symmetric matrix.
    pub fn pack(&self, m: &CMat) -> Vec<Complex64> {
        self.positions.iter().map(|&(r, c)| m[(r, c)]).collect()
    }

    /// `unvec(B P ybar_g)` without forming the products.
    pub fn block(&self, ybar_g: &[Complex64]) -> Result<CMat> {
        let ybar = self.unpack(ybar_g)?;
        let n = self.mbar;
        let mut y = -ybar.clone();
        for i in 0..n {
            y[(i, i)] = ybar.row(i).iter().sum();
        }
        Ok(y)
    }

    /// `P^T B^T vec(m)`, the adjoint of [`MappingMatrices::block`] with
    /// respect to the real bilinear pairing.
    pub fn block_adjoint(&self, m: &CMat) -> Vec<Complex64> {
        self.positions
            .iter()
            .map(|&(r, c)| {
                if r == c {
                    m[(r, r)]
                } else {
                    m[(r, r)] + m[(c, c)] - m[(r, c)] - m[(c, r)]
                }
            })
            .collect()
    }

    /// Free components that produce the admittance block `y`: off-diagonal
    /// components are negated entries and diagonal components are row sums.
    pub fn components_of_block(&self, y: &CMat) -> Vec<Complex64> {
        self.positions
            .iter()
            .map(|&(r, c)| if r == c { y.row(r).iter().sum() } else { -y[(r, c)] })
            .collect()
    }

    fn check_len(&self, v: &[Complex64]) -> Result<()> {
        if v.len() == self.u {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "expected {} free components, got {}",
                self.u,
                v.len()
            )))
        }
    }
}
