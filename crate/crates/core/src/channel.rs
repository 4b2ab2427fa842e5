//! Pathloss-scaled Rayleigh and Rician channel draws.
//!
//! Every realization owns a ChaCha20 stream seeded through
//! `ChaCha20Rng::seed_from_u64(seed)`. Complex Gaussian entries are drawn in
//! column-major order, real part first, so realizations can be regenerated by
//! any implementation of the same generator.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, Complex64};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Meters.
    pub distance: f64,
    pub exponent: f64,
    pub zeta0_db: f64,
    /// Reference distance, meters.
    pub d0: f64,
}

/// Linear power gain `zeta0 (d/d0)^-exponent`.
pub fn pathloss(link: &LinkParams) -> Result<f64> {
    if !(link.distance > 0.0 && link.d0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "link distances must be positive: {link:?}"
        )));
    }
    Ok(db_to_linear(link.zeta0_db) * (link.distance / link.d0).powf(-link.exponent))
}

fn cn(rng: &mut impl Rng, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(s * re, s * im)
}

/// I.i.d. circularly-symmetric complex Gaussian entries with variance `pl`.
pub fn draw_rayleigh(rows: usize, cols: usize, pl: f64, rng: &mut impl Rng) -> CMat {
    let data: Vec<_> = (0..rows * cols).map(|_| cn(rng, pl)).collect();
    CMat::from_vec(rows, cols, data)
}

/// Rician entries with an all-ones line-of-sight component.
pub fn draw_rician(rows: usize, cols: usize, pl: f64, kappa_db: f64, rng: &mut impl Rng) -> CMat {
    let kappa = db_to_linear(kappa_db);
    let los = (kappa / (1.0 + kappa)).sqrt();
    let nlos = (1.0 / (1.0 + kappa)).sqrt();
    let scale = pl.sqrt();
    let data: Vec<_> = (0..rows * cols)
        .map(|_| (c(los, 0.0) + cn(rng, 1.0) * nlos) * scale)
        .collect();
    CMat::from_vec(rows, cols, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosModel {
    AllOnes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub zeta0_db: f64,
    pub d0: f64,
    pub d_rt: f64,
    pub d_ri: f64,
    pub d_it: f64,
    pub eps_rt: f64,
    pub eps_ri: f64,
    pub eps_it: f64,
    pub kappa_ri_db: f64,
    pub kappa_it_db: f64,
    pub noise_dbm: f64,
    /// Per-user noise overrides for multi-user runs, dBm.
    pub noise_dbm_per_user: Option<Vec<f64>>,
    pub los: LosModel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            zeta0_db: -30.0,
            d0: 1.0,
            d_rt: 52.0,
            d_ri: 2.5,
            d_it: 50.0,
            eps_rt: 3.8,
            eps_ri: 2.2,
            eps_it: 2.5,
            kappa_ri_db: 2.0,
            kappa_it_db: 2.0,
            noise_dbm: -80.0,
            noise_dbm_per_user: None,
            los: LosModel::AllOnes,
        }
    }
}

impl ChannelConfig {
    fn link(&self, distance: f64, exponent: f64) -> LinkParams {
        LinkParams { distance, exponent, zeta0_db: self.zeta0_db, d0: self.d0 }
    }

    pub fn pathloss_rt(&self) -> Result<f64> {
        pathloss(&self.link(self.d_rt, self.eps_rt))
    }

    pub fn pathloss_ri(&self) -> Result<f64> {
        pathloss(&self.link(self.d_ri, self.eps_ri))
    }

    pub fn pathloss_it(&self) -> Result<f64> {
        pathloss(&self.link(self.d_it, self.eps_it))
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }

    pub fn noise_watts_per_user(&self, k: usize) -> Result<Vec<f64>> {
        match &self.noise_dbm_per_user {
            None => Ok(vec![self.noise_watts(); k]),
            Some(v) if v.len() == k => Ok(v.iter().map(|&d| dbm_to_watts(d)).collect()),
            Some(v) => Err(Error::Config(format!(
                "noise_dbm_per_user has {} entries for {k} users",
                v.len()
            ))),
        }
    }
}

pub fn rng_for(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SisoChannels {
    pub h_rt: Complex64,
    pub h_ri: CVec,
    pub h_it: CVec,
}

impl SisoChannels {
    pub fn m(&self) -> usize {
        self.h_ri.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.h_ri.len() != self.h_it.len() {
            return Err(Error::ShapeMismatch(format!(
                "h_ri has {} entries but h_it has {}",
                self.h_ri.len(),
                self.h_it.len()
            )));
        }
        let finite = self.h_rt.is_finite()
            && self.h_ri.iter().chain(self.h_it.iter()).all(|z| z.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("channel entries must be finite".into()));
        }
        Ok(())
    }
}

/// Draws RT (Rayleigh), then RI and IT (Rician) for `m` RIS elements.
pub fn generate_siso(cfg: &ChannelConfig, m: usize, seed: u64) -> Result<SisoChannels> {
    if m == 0 {
        return Err(Error::Config("element count must be positive".into()));
    }
    let mut rng = rng_for(seed);
    let h_rt = draw_rayleigh(1, 1, cfg.pathloss_rt()?, &mut rng)[(0, 0)];
    let h_ri = draw_rician(m, 1, cfg.pathloss_ri()?, cfg.kappa_ri_db, &mut rng).column(0).into_owned();
    let h_it = draw_rician(m, 1, cfg.pathloss_it()?, cfg.kappa_it_db, &mut rng).column(0).into_owned();
    Ok(SisoChannels { h_rt, h_ri, h_it })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuMisoChannels {
    /// Direct transmitter-to-user channels, one `N`-vector per user.
    pub h_rt: Vec<CVec>,
    /// RIS-to-user channels, one `M`-vector per user.
    pub h_ri: Vec<CVec>,
    /// Transmitter-to-RIS channel, `M x N`.
    pub h_it: CMat,
    /// Noise power per user, watts.
    pub sigma2: Vec<f64>,
}

impl MuMisoChannels {
    pub fn users(&self) -> usize {
        self.h_rt.len()
    }

    pub fn antennas(&self) -> usize {
        self.h_it.ncols()
    }

    pub fn m(&self) -> usize {
        self.h_it.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, k) = (self.m(), self.antennas(), self.users());
        let ok = self.h_ri.len() == k
            && self.sigma2.len() == k
            && self.h_rt.iter().all(|h| h.len() == n)
            && self.h_ri.iter().all(|h| h.len() == m);
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("inconsistent multi-user channel dimensions".into()))
        }
    }
}

/// Draws all RT channels, then all RI channels, then the shared IT matrix.
pub fn generate_mumiso(cfg: &ChannelConfig, m: usize, n: usize, k: usize, seed: u64) -> Result<MuMisoChannels> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::Config(format!("invalid dimensions M={m}, N={n}, K={k}")));
    }
    let sigma2 = cfg.noise_watts_per_user(k)?;
    let mut rng = rng_for(seed);
    let pl_rt = cfg.pathloss_rt()?;
    let pl_ri = cfg.pathloss_ri()?;
    let h_rt = (0..k).map(|_| draw_rayleigh(n, 1, pl_rt, &mut rng).column(0).into_owned()).collect();
    let h_ri = (0..k)
        .map(|_| draw_rician(m, 1, pl_ri, cfg.kappa_ri_db, &mut rng).column(0).into_owned())
        .collect();
    let h_it = draw_rician(m, n, cfg.pathloss_it()?, cfg.kappa_it_db, &mut rng);
    Ok(MuMisoChannels { h_rt, h_ri, h_it, sigma2 })
}

fn dump_rows<W: Write>(out: &mut W, link: &str, k: usize, m: &CMat) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            writeln!(out, "{link},{k},{i},{j},{},{}", z.re, z.im)?;
        }
    }
    Ok(())
}

const DUMP_HEADER: &str = "link,k,row,col,re,im";

pub fn write_siso_csv<W: Write>(ch: &SisoChannels, mut out: W) -> Result<()> {
    writeln!(out, "{DUMP_HEADER}")?;
    dump_rows(&mut out, "rt", 0, &CMat::from_element(1, 1, ch.h_rt))?;
    dump_rows(&mut out, "ri", 0, &CMat::from_column_slice(ch.m(), 1, ch.h_ri.as_slice()))?;
    dump_rows(&mut out, "it", 0, &CMat::from_column_slice(ch.m(), 1, ch.h_it.as_slice()))?;
    Ok(())
}

pub fn write_mumiso_csv<W: Write>(ch: &MuMisoChannels, mut out: W) -> Result<()> {
    writeln!(out, "{DUMP_HEADER}")?;
    for (k, h) in ch.h_rt.iter().enumerate() {
        dump_rows(&mut out, "rt", k, &CMat::from_column_slice(h.len(), 1, h.as_slice()))?;
    }
    for (k, h) in ch.h_ri.iter().enumerate() {
        dump_rows(&mut out, "ri", k, &CMat::from_column_slice(h.len(), 1, h.as_slice()))?;
    }
    dump_rows(&mut out, "it", 0, &ch.h_it)?;
    Ok(())
}
