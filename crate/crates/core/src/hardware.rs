//! The per-component feasible set together with the reference admittance
//! used to normalize it.

use crate::architecture::{ArchitectureSpec, MappingMatrices};
use crate::circuit::{arc_of_params, capacitance_of_theta, CircuitParams, FeasibleSet};
use crate::error::Result;
use crate::linalg::{CMat, Complex64};
use crate::network::{admittance_block, scattering_block, CharacteristicAdmittance, ScatteringMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hardware {
    /// Feasible set in siemens.
    pub set: FeasibleSet,
    pub y0: CharacteristicAdmittance,
    pub circuit: Option<CircuitParams>,
}

impl Hardware {
    pub fn from_circuit(p: &CircuitParams, y0: CharacteristicAdmittance) -> Result<Self> {
        Ok(Self { set: FeasibleSet::Arc(arc_of_params(p)?), y0, circuit: Some(*p) })
    }

    /// Lossless components with unbounded susceptance.
    pub fn lossless(y0: CharacteristicAdmittance) -> Self {
        Self { set: FeasibleSet::ImaginaryAxis, y0, circuit: None }
    }

    /// Feasible set in units of `y0`.
    pub fn normalized_set(&self) -> FeasibleSet {
        self.set.scaled(1.0 / self.y0.value())
    }
}

/// Scattering matrix of stacked normalized components.
pub fn scattering_of_components(
    ybar: &[Complex64],
    spec: &ArchitectureSpec,
    maps: &MappingMatrices,
) -> Result<ScatteringMatrix> {
    let blocks = ybar
        .chunks_exact(maps.u)
        .take(spec.groups())
        .map(|v| scattering_block(&maps.block(v)?, 1.0))
        .collect::<Result<Vec<CMat>>>()?;
    ScatteringMatrix::from_blocks(&blocks)
}

/// Free components, in siemens, realized by a scattering matrix.
pub fn components_of_scattering(
    phi: &ScatteringMatrix,
    maps: &MappingMatrices,
    y0: CharacteristicAdmittance,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(phi.groups() * maps.u);
    for g in 0..phi.groups() {
        let y = admittance_block(&phi.block(g), y0.value())?;
        out.extend(maps.components_of_block(&y));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub group: usize,
    /// 0-based port pair inside the group.
    pub row: usize,
    pub col: usize,
    pub admittance: Complex64,
    /// Arc angle and capacitance, when the set is a circuit arc.
    pub theta: Option<f64>,
    pub capacitance: Option<f64>,
}

/// Recovers every tunable component of `phi` with its control value.
pub fn component_report(
    phi: &ScatteringMatrix,
    spec: &ArchitectureSpec,
    hw: &Hardware,
) -> Result<Vec<ComponentReport>> {
    let maps = MappingMatrices::new(spec);
    let ys = components_of_scattering(phi, &maps, hw.y0)?;
    let mut out = Vec::with_capacity(ys.len());
    for (i, &y) in ys.iter().enumerate() {
        let (g, k) = (i / maps.u, i % maps.u);
        let (row, col) = maps.positions()[k];
        let (theta, capacitance) = match (&hw.set, &hw.circuit) {
            (FeasibleSet::Arc(arc), Some(p)) => {
                let (_, th) = arc.residual(y);
                let th = th.clamp(arc.theta_min(), arc.theta_max());
                (Some(th), Some(capacitance_of_theta(p, arc, th)?))
            }
            _ => (None, None),
        };
        out.push(ComponentReport { group: g, row, col, admittance: y, theta, capacitance });
    }
    Ok(out)
}

/// Largest arc residual of the components realized by `phi`: the relative
/// radial distance and the angular excess beyond the arc ends.
pub fn feasibility_residual(
    phi: &ScatteringMatrix,
    spec: &ArchitectureSpec,
    hw: &Hardware,
) -> Result<(f64, f64)> {
    let maps = MappingMatrices::new(spec);
    let ys = components_of_scattering(phi, &maps, hw.y0)?;
    let mut radial: f64 = 0.0;
    let mut angular: f64 = 0.0;
    for y in ys {
        match &hw.set {
            FeasibleSet::Arc(arc) => {
                let (r, th) = arc.residual(y);
                radial = radial.max(r);
                angular = angular.max(arc.theta_min() - th).max(th - arc.theta_max());
            }
            FeasibleSet::ImaginaryAxis => {
                radial = radial.max(y.re.abs() / y.norm().max(hw.y0.value()));
            }
        }
    }
    Ok((radial, angular.max(0.0)))
}
