//! Lumped varactor model of one tunable admittance and the arc of admittance
//! values it can reach.
//!
//! The circle `alpha + beta e^{j theta}` passes through the lossless anchor
//! point `alpha - beta = -j/(omega L1)` at `theta = pi`. Internally every arc
//! point is addressed by the offset `eps = theta - pi`, for which
//! `Y(eps) = -j/(omega L1) + 2 beta sin^2(eps/2) - j beta sin(eps)`.
//! This keeps points accurate when `beta` is huge (tiny resistance) and the
//! reachable offsets are tiny.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, Complex64, J};

const MONOTONE_SAMPLES: usize = 256;
const THETA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitParams {
    /// Series resistance, ohms.
    pub r: f64,
    /// Shunt inductance, henries.
    pub l1: f64,
    /// Series inductance, henries.
    pub l2: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// Operating frequency, hertz.
    pub f: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            r: 1.0,
            l1: 6e-9,
            l2: 0.7e-9,
            c_min: 0.35e-12,
            c_max: 3.20e-12,
            f: 2.4e9,
        }
    }
}

impl CircuitParams {
    pub fn with_r(self, r: f64) -> Self {
        Self { r, ..self }
    }

    pub fn with_l1(self, l1: f64) -> Self {
        Self { l1, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r >= 0.0
            && self.r.is_finite()
            && self.l1 > 0.0
            && self.l2 > 0.0
            && self.c_min > 0.0
            && self.c_min <= self.c_max
            && self.c_max.is_finite()
            && self.f > 0.0
            && self.f.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid circuit parameters {self:?}")))
        }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f
    }

    /// Net series reactance `omega L2 - 1/(omega C)`, ohms.
    pub fn reactance(&self, cap: f64) -> f64 {
        let w = self.omega();
        w * self.l2 - 1.0 / (w * cap)
    }

    fn check_capacitance(&self, cap: f64) -> Result<()> {
        if cap >= self.c_min && cap <= self.c_max {
            Ok(())
        } else {
            Err(Error::OutOfRangeCapacitance { c: cap, min: self.c_min, max: self.c_max })
        }
    }

    /// Arc offset `theta - pi` reached at capacitance `cap`.
    fn offset_of_capacitance(&self, cap: f64) -> f64 {
        -2.0 * self.r.atan2(-self.reactance(cap))
    }
}

/// `1/(j omega L1) + 1/(j omega L2 + 1/(j omega C) + R)`, siemens.
pub fn admittance_of_capacitance(p: &CircuitParams, cap: f64) -> Result<Complex64> {
    p.validate()?;
    p.check_capacitance(cap)?;
    let w = p.omega();
    let shunt = 1.0 / (J * w * p.l1);
    let series = J * w * p.l2 + 1.0 / (J * w * cap) + p.r;
    Ok(shunt + 1.0 / series)
}

/// The same admittance with conductance and susceptance written out
/// separately.
pub fn admittance_separated(p: &CircuitParams, cap: f64) -> Result<Complex64> {
    p.validate()?;
    p.check_capacitance(cap)?;
    let x = p.reactance(cap);
    let den = p.r * p.r + x * x;
    Ok(c(p.r / den, -1.0 / (p.omega() * p.l1) - x / den))
}

/// Feasible segment of the admittance circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmittanceArc {
    alpha: Complex64,
    beta: f64,
    eps_lo: f64,
    eps_hi: f64,
}

impl AdmittanceArc {
    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta_min(&self) -> f64 {
        PI + self.eps_lo
    }

    pub fn theta_max(&self) -> f64 {
        PI + self.eps_hi
    }

    pub fn theta_mid(&self) -> f64 {
        PI + self.eps_mid()
    }

    fn eps_mid(&self) -> f64 {
        0.5 * (self.eps_lo + self.eps_hi)
    }

    fn anchor(&self) -> Complex64 {
        c(0.0, self.alpha.im)
    }

    /// The same arc with admittances multiplied by `s`, e.g. `1/y0` to work
    /// in normalized units.
    pub fn scaled(&self, s: f64) -> Self {
        Self { alpha: self.alpha * s, beta: self.beta * s, ..*self }
    }

    /// Range of the offset `theta - pi`. Near `theta = pi` the offset keeps
    /// full precision where `theta` itself does not.
    pub fn offset_range(&self) -> (f64, f64) {
        (self.eps_lo, self.eps_hi)
    }

    /// Arc point at angle `pi + eps`.
    pub fn point_at_offset(&self, eps: f64) -> Complex64 {
        let h = (0.5 * eps).sin();
        self.anchor() + c(2.0 * self.beta * h * h, -self.beta * eps.sin())
    }

    /// `alpha + beta e^{j theta}`.
    pub fn point(&self, theta: f64) -> Complex64 {
        self.point_at_offset(theta - PI)
    }

    pub fn midpoint(&self) -> Complex64 {
        self.point_at_offset(self.eps_mid())
    }

    /// Offset of the radial direction from `alpha` through `w`, on the branch
    /// centered at the arc midpoint. `None` when `w` is the center.
    fn radial_offset(&self, w: Complex64) -> Option<f64> {
        let d = w - self.anchor();
        let v = c(self.beta - d.re, -d.im);
        if v.re == 0.0 && v.im == 0.0 {
            return None;
        }
        let mid = self.eps_mid();
        let mut e = v.arg() - mid;
        e -= 2.0 * PI * ((e + PI) / (2.0 * PI)).floor();
        Some(mid + e)
    }

    fn project_offset(&self, w: Complex64) -> f64 {
        match self.radial_offset(w) {
            Some(e) => e.clamp(self.eps_lo, self.eps_hi),
            None => self.eps_mid(),
        }
    }

    /// Closest arc point to `w` and its angle.
    pub fn project(&self, w: Complex64) -> (f64, Complex64) {
        let e = self.project_offset(w);
        (PI + e, self.point_at_offset(e))
    }

    pub fn project_value(&self, w: Complex64) -> Complex64 {
        self.point_at_offset(self.project_offset(w))
    }

    /// Relative distance of `y` from the circle and its angle on the branch
    /// used by [`AdmittanceArc::project`].
    pub fn residual(&self, y: Complex64) -> (f64, f64) {
        let d = y - self.anchor();
        let v = c(self.beta - d.re, -d.im);
        let radial = (v.norm() - self.beta).abs() / self.beta;
        let theta = PI + self.radial_offset(y).unwrap_or(self.eps_mid());
        (radial, theta)
    }

    /// Whether `y` lies on the arc within a relative radial tolerance and an
    /// absolute angular slack.
    pub fn contains(&self, y: Complex64, radial_tol: f64, angle_tol: f64) -> bool {
        let (radial, theta) = self.residual(y);
        radial <= radial_tol
            && theta >= self.theta_min() - angle_tol
            && theta <= self.theta_max() + angle_tol
    }
}

pub fn arc_of_params(p: &CircuitParams) -> Result<AdmittanceArc> {
    p.validate()?;
    if p.r == 0.0 {
        return Err(Error::ZeroResistance);
    }
    let beta = 1.0 / (2.0 * p.r);
    let alpha = c(beta, -1.0 / (p.omega() * p.l1));
    let e0 = p.offset_of_capacitance(p.c_min);
    let e1 = p.offset_of_capacitance(p.c_max);
    let arc = AdmittanceArc { alpha, beta, eps_lo: e0.min(e1), eps_hi: e0.max(e1) };

    // Sample the measured angle of Y(C) - alpha and require strict monotonicity.
    if p.c_max > p.c_min {
        let offsets = (0..MONOTONE_SAMPLES)
            .map(|i| {
                let t = i as f64 / (MONOTONE_SAMPLES - 1) as f64;
                let y = admittance_of_capacitance(p, p.c_min + t * (p.c_max - p.c_min))?;
                arc.radial_offset(y).ok_or(Error::NonMonotoneArc)
            })
            .collect::<Result<Vec<_>>>()?;
        let increasing = offsets.windows(2).all(|w| w[1] > w[0]);
        let decreasing = offsets.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::NonMonotoneArc);
        }
    }
    Ok(arc)
}

/// Capacitance that realizes the arc point at angle `theta`.
pub fn capacitance_of_theta(p: &CircuitParams, arc: &AdmittanceArc, theta: f64) -> Result<f64> {
    p.validate()?;
    let slack = THETA_SLACK * theta.abs().max(1.0);
    if !(theta >= arc.theta_min() - slack && theta <= arc.theta_max() + slack) {
        return Err(Error::OutOfRangeTheta { theta, min: arc.theta_min(), max: arc.theta_max() });
    }
    let eps = (theta - PI).clamp(arc.eps_lo, arc.eps_hi);
    let x = p.r / (0.5 * eps).tan();
    let w = p.omega();
    let cap = 1.0 / (w * (w * p.l2 - x));
    Ok(cap.clamp(p.c_min, p.c_max))
}

/// Per-component feasible set used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleSet {
    Arc(AdmittanceArc),
    /// Every purely imaginary admittance (lossless, unbounded capacitance).
    ImaginaryAxis,
}

impl FeasibleSet {
    pub fn project(&self, w: Complex64) -> Complex64 {
        match self {
            FeasibleSet::Arc(a) => a.project_value(w),
            FeasibleSet::ImaginaryAxis => c(0.0, w.im),
        }
    }

    pub fn midpoint(&self) -> Complex64 {
        match self {
            FeasibleSet::Arc(a) => a.midpoint(),
            FeasibleSet::ImaginaryAxis => c(0.0, 0.0),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            FeasibleSet::Arc(a) => FeasibleSet::Arc(a.scaled(s)),
            FeasibleSet::ImaginaryAxis => FeasibleSet::ImaginaryAxis,
        }
    }

    pub fn contains(&self, y: Complex64, radial_tol: f64, angle_tol: f64) -> bool {
        match self {
            FeasibleSet::Arc(a) => a.contains(y, radial_tol, angle_tol),
            FeasibleSet::ImaginaryAxis => y.re.abs() <= radial_tol * y.norm().max(1.0),
        }
    }
}

/// Writes `n` capacitance-uniform samples of the feasible arc as CSV.
pub fn write_arc_csv<W: Write>(p: &CircuitParams, n: usize, mut out: W) -> Result<()> {
    let arc = arc_of_params(p)?;
    writeln!(out, "theta,re_siemens,im_siemens,capacitance_farads")?;
    for i in 0..n {
        let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
        let cap = p.c_min + t * (p.c_max - p.c_min);
        let y = admittance_of_capacitance(p, cap)?;
        let (_, theta) = arc.residual(y);
        writeln!(out, "{theta},{},{},{cap}", y.re, y.im)?;
    }
    Ok(())
}
