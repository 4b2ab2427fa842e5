//! Monte-Carlo experiment runner: configuration, sweeps, aggregation and CSV
//! output.
//!
//! Realization `i` of every sweep point uses the channel drawn from seed
//! `base_seed + i`, so all architectures and algorithms are compared on the
//! same channels.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::architecture::{circuit_complexity, ArchitectureSpec, Topology};
use crate::channel::{dbm_to_watts, generate_mumiso, generate_siso, ChannelConfig};
use crate::circuit::{write_arc_csv, CircuitParams};
use crate::error::{Error, Result};
use crate::hardware::Hardware;
use crate::mumiso::{bcd_solve, BcdConfig};
use crate::network::CharacteristicAdmittance;
use crate::siso::{
    low_complexity_solve, mm_admm_multistart, mm_admm_solve, received_power_and_rate, siso_upper_bound, Init,
    LowComplexityConfig, MmAdmmConfig, MultiStartConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Siso,
    Mumiso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    MmAdmm,
    MmAdmmMultistart,
    LowComplexity,
    Bcd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MmAdmm => "mm_admm",
            Algorithm::MmAdmmMultistart => "mm_admm_multistart",
            Algorithm::LowComplexity => "low_complexity",
            Algorithm::Bcd => "bcd",
        }
    }

    fn system(self) -> System {
        match self {
            Algorithm::Bcd => System::Mumiso,
            _ => System::Siso,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: System,
    /// Number of RIS elements.
    pub m: usize,
    pub mbar: Vec<usize>,
    /// Transmit antennas (multi-user only).
    pub n: usize,
    /// Users (multi-user only).
    pub k: usize,
    pub topologies: Vec<Topology>,
    pub algorithms: Vec<Algorithm>,
    pub r_ohm: Vec<f64>,
    pub l1_henry: Vec<f64>,
    pub p_dbm: Vec<f64>,
    /// Varactor circuit; `r` and `l1` are replaced by the sweep values.
    pub circuit: CircuitParams,
    pub y0_siemens: f64,
    pub channel: ChannelConfig,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
    pub mm_admm: MmAdmmConfig,
    pub mm_admm_init: Init,
    pub multistart: MultiStartConfig,
    pub low_complexity: LowComplexityConfig,
    pub bcd: BcdConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: System::Siso,
            m: 8,
            mbar: vec![1, 2, 4, 8],
            n: 4,
            k: 4,
            topologies: vec![Topology::Group],
            algorithms: vec![Algorithm::MmAdmm],
            r_ohm: vec![1e-9, 1.0, 2.0, 3.0],
            l1_henry: vec![6e-9],
            p_dbm: vec![20.0],
            circuit: CircuitParams::default(),
            y0_siemens: CharacteristicAdmittance::default().value(),
            channel: ChannelConfig::default(),
            n_realizations: 20,
            base_seed: 0,
            output: None,
            mm_admm: MmAdmmConfig::default(),
            mm_admm_init: Init::default(),
            multistart: MultiStartConfig::default(),
            low_complexity: LowComplexityConfig::default(),
            bcd: BcdConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Defaults of a multi-user sweep.
    pub fn mumiso_defaults() -> Self {
        Self { system: System::Mumiso, algorithms: vec![Algorithm::Bcd], ..Self::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("field `{name}`: {msg}")));
        for (name, empty) in [
            ("mbar", self.mbar.is_empty()),
            ("topologies", self.topologies.is_empty()),
            ("algorithms", self.algorithms.is_empty()),
            ("r_ohm", self.r_ohm.is_empty()),
            ("l1_henry", self.l1_henry.is_empty()),
            ("p_dbm", self.p_dbm.is_empty()),
        ] {
            if empty {
                return field(name, "must not be empty".into());
            }
        }
        if self.m == 0 {
            return field("m", "must be positive".into());
        }
        if let Some(&b) = self.mbar.iter().find(|&&b| b == 0 || !self.m.is_multiple_of(b)) {
            return field("mbar", format!("group size {b} does not divide m = {}", self.m));
        }
        if let Some(a) = self.algorithms.iter().find(|a| a.system() != self.system) {
            return field("algorithms", format!("`{}` does not apply to {:?}", a.name(), self.system));
        }
        if self.system == System::Mumiso && (self.n == 0 || self.k == 0) {
            return field("n, k", "antennas and users must be positive".into());
        }
        if self.n_realizations == 0 {
            return field("n_realizations", "must be at least 1".into());
        }
        if let Some(r) = self.r_ohm.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return field("r_ohm", format!("resistance {r} must be positive"));
        }
        if self.p_dbm.iter().any(|p| !p.is_finite()) {
            return field("p_dbm", "powers must be finite".into());
        }
        let wrap = |name: &'static str| move |e: Error| Error::Config(format!("field `{name}`: {e}"));
        CharacteristicAdmittance::new(self.y0_siemens).map_err(wrap("y0_siemens"))?;
        for &l1 in &self.l1_henry {
            CircuitParams { l1, ..self.circuit }.validate().map_err(wrap("l1_henry"))?;
        }
        if self.system == System::Mumiso {
            self.channel.noise_watts_per_user(self.k).map_err(wrap("channel"))?;
        }
        self.mm_admm.validate().map_err(wrap("mm_admm"))?;
        self.bcd.validate().map_err(wrap("bcd"))?;
        Ok(())
    }

    /// Sweep points in output order.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &topology in &self.topologies {
                for &mbar in &self.mbar {
                    for &r_ohm in &self.r_ohm {
                        for &l1_henry in &self.l1_henry {
                            for &p_dbm in &self.p_dbm {
                                out.push(SweepPoint { algorithm, topology, mbar, r_ohm, l1_henry, p_dbm });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn hardware(&self, pt: &SweepPoint) -> Result<Hardware> {
        let p = CircuitParams { r: pt.r_ohm, l1: pt.l1_henry, ..self.circuit };
        Hardware::from_circuit(&p, CharacteristicAdmittance::new(self.y0_siemens)?)
    }

    fn spec(&self, pt: &SweepPoint) -> Result<ArchitectureSpec> {
        ArchitectureSpec::new(self.m, pt.mbar, pt.topology)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub algorithm: Algorithm,
    pub topology: Topology,
    pub mbar: usize,
    pub r_ohm: f64,
    pub l1_henry: f64,
    pub p_dbm: f64,
}

/// Outcome of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub point: usize,
    pub realization: usize,
    pub seed: u64,
    pub rate_bits: f64,
    /// Outer (or BCD) iterations.
    pub iterations: usize,
    pub wall_seconds: f64,
    /// Rate of the single-user upper bound; `None` for multi-user runs.
    pub upper_bound_bits: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub point: SweepPoint,
    pub n_realizations: usize,
    pub mean_rate: f64,
    pub stderr: f64,
    pub mean_iterations: f64,
    pub mean_wall_seconds: f64,
    pub upper_bound: Option<f64>,
    pub circuit_complexity: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    /// Per-solve outcomes sorted by point and realization.
    pub realizations: Vec<Realization>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation over `sqrt(n)`; zero for a single sample.
fn standard_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mu = mean(v);
    let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}

/// Mean and standard-error rows recomputed from per-realization outcomes.
pub fn aggregate(cfg: &ExperimentConfig, realizations: &[Realization]) -> Result<Vec<ResultRow>> {
    let points = cfg.points();
    let mut rows = Vec::with_capacity(points.len());
    for (i, pt) in points.iter().enumerate() {
        let rs: Vec<&Realization> = realizations.iter().filter(|r| r.point == i).collect();
        if rs.is_empty() {
            return Err(Error::Config(format!("no realizations for sweep point {i}")));
        }
        let rates: Vec<f64> = rs.iter().map(|r| r.rate_bits).collect();
        let ub: Vec<f64> = rs.iter().filter_map(|r| r.upper_bound_bits).collect();
        rows.push(ResultRow {
            point: *pt,
            n_realizations: rs.len(),
            mean_rate: mean(&rates),
            stderr: standard_error(&rates),
            mean_iterations: mean(&rs.iter().map(|r| r.iterations as f64).collect::<Vec<_>>()),
            mean_wall_seconds: mean(&rs.iter().map(|r| r.wall_seconds).collect::<Vec<_>>()),
            upper_bound: (!ub.is_empty()).then(|| mean(&ub)),
            circuit_complexity: circuit_complexity(&cfg.spec(pt)?),
        });
    }
    Ok(rows)
}

fn solve_one(cfg: &ExperimentConfig, pt: &SweepPoint, point: usize, realization: usize) -> Result<Realization> {
    let seed = cfg.base_seed.wrapping_add(realization as u64);
    let spec = cfg.spec(pt)?;
    let hw = cfg.hardware(pt)?;
    let p = dbm_to_watts(pt.p_dbm);
    let start = Instant::now();
    let (rate_bits, iterations, upper_bound_bits) = match pt.algorithm {
        Algorithm::Bcd => {
            let ch = generate_mumiso(&cfg.channel, cfg.m, cfg.n, cfg.k, seed)?;
            let sol = bcd_solve(&ch, &spec, &hw, &cfg.bcd, p)?;
            (sol.trace.final_rate(), sol.trace.iterations(), None)
        }
        algo => {
            let ch = generate_siso(&cfg.channel, cfg.m, seed)?;
            let (phi, trace) = match algo {
                Algorithm::MmAdmm => mm_admm_solve(&ch, &spec, &hw, &cfg.mm_admm, &cfg.mm_admm_init)?,
                Algorithm::MmAdmmMultistart => {
                    let ms = MultiStartConfig { seed, ..cfg.multistart.clone() };
                    mm_admm_multistart(&ch, &spec, &hw, &cfg.mm_admm, &ms)?
                }
                _ => low_complexity_solve(&ch, &spec, &hw, &cfg.low_complexity, &Init::ArcMidpoint)?,
            };
            let sigma2 = cfg.channel.noise_watts();
            let (_, rate) = received_power_and_rate(&ch, &phi, p, sigma2)?;
            let ub = (1.0 + p * siso_upper_bound(&ch, &spec) / sigma2).log2();
            let iters = if algo == Algorithm::LowComplexity { trace.ls_residual.len() } else { trace.outer_iterations() };
            (rate, iters, Some(ub))
        }
    };
    Ok(Realization {
        point,
        realization,
        seed,
        rate_bits,
        iterations,
        wall_seconds: start.elapsed().as_secs_f64(),
        upper_bound_bits,
    })
}

/// Runs every sweep point on every realization, in parallel on the current
/// rayon pool. The result does not depend on the number of threads apart from
/// the wall times.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let points = cfg.points();
    let jobs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.n_realizations).map(move |r| (p, r))).collect();
    let mut realizations = jobs
        .par_iter()
        .map(|&(p, r)| solve_one(cfg, &points[p], p, r))
        .collect::<Result<Vec<_>>>()?;
    realizations.sort_by_key(|r| (r.point, r.realization));
    let rows = aggregate(cfg, &realizations)?;
    Ok(ExperimentResults { rows, realizations })
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    RateVsR,
    RateVsMbar,
    RateVsP,
    RateVsL1,
    ComplexityTradeoff,
}

impl FigureKind {
    pub const ALL: [FigureKind; 5] = [
        FigureKind::RateVsR,
        FigureKind::RateVsMbar,
        FigureKind::RateVsP,
        FigureKind::RateVsL1,
        FigureKind::ComplexityTradeoff,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            FigureKind::RateVsR => "rate_vs_R.csv",
            FigureKind::RateVsMbar => "rate_vs_mbar.csv",
            FigureKind::RateVsP => "rate_vs_P.csv",
            FigureKind::RateVsL1 => "rate_vs_L1.csv",
            FigureKind::ComplexityTradeoff => "complexity_tradeoff.csv",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            FigureKind::RateVsR => "R_ohm,topology,mbar,algo,mean_rate,stderr,upper_bound",
            FigureKind::RateVsMbar => "mbar,topology,R_ohm,algo,mean_rate,stderr,upper_bound",
            FigureKind::RateVsP => "P_dbm,topology,mbar,R_ohm,algo,mean_rate,stderr,upper_bound",
            FigureKind::RateVsL1 => "L1_henry,topology,mbar,R_ohm,algo,mean_rate,stderr,upper_bound",
            FigureKind::ComplexityTradeoff => "circuit_complexity,topology,mbar,R_ohm,algo,mean_rate,stderr",
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one figure's data. Rows keep their sweep order; the columns that
/// are not on the x axis identify the curve.
pub fn emit_figure_data<W: Write>(rows: &[ResultRow], kind: FigureKind, mut out: W) -> Result<()> {
    writeln!(out, "{}", kind.header())?;
    for r in rows {
        let pt = &r.point;
        let (topo, algo) = (pt.topology.name(), pt.algorithm.name());
        let line = match kind {
            FigureKind::RateVsR => format!(
                "{},{topo},{},{algo},{},{},{}",
                pt.r_ohm, pt.mbar, r.mean_rate, r.stderr, opt(r.upper_bound)
            ),
            FigureKind::RateVsMbar => format!(
                "{},{topo},{},{algo},{},{},{}",
                pt.mbar, pt.r_ohm, r.mean_rate, r.stderr, opt(r.upper_bound)
            ),
            FigureKind::RateVsP => format!(
                "{},{topo},{},{},{algo},{},{},{}",
                pt.p_dbm, pt.mbar, pt.r_ohm, r.mean_rate, r.stderr, opt(r.upper_bound)
            ),
            FigureKind::RateVsL1 => format!(
                "{},{topo},{},{},{algo},{},{},{}",
                pt.l1_henry, pt.mbar, pt.r_ohm, r.mean_rate, r.stderr, opt(r.upper_bound)
            ),
            FigureKind::ComplexityTradeoff => format!(
                "{},{topo},{},{},{algo},{},{}",
                r.circuit_complexity, pt.mbar, pt.r_ohm, r.mean_rate, r.stderr
            ),
        };
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub const RESULTS_HEADER: &str = "system,algo,topology,mbar,R_ohm,L1_henry,P_dbm,n_realizations,mean_rate,stderr,mean_iterations,mean_wall_seconds,upper_bound,circuit_complexity";

/// Full result table. Wall times are left empty unless `timing` is set, so
/// that untimed tables are reproducible byte for byte.
pub fn write_results_csv<W: Write>(system: System, rows: &[ResultRow], timing: bool, mut out: W) -> Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    let sys = match system {
        System::Siso => "siso",
        System::Mumiso => "mumiso",
    };
    for r in rows {
        let pt = &r.point;
        writeln!(
            out,
            "{sys},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            pt.algorithm.name(),
            pt.topology.name(),
            pt.mbar,
            pt.r_ohm,
            pt.l1_henry,
            pt.p_dbm,
            r.n_realizations,
            r.mean_rate,
            r.stderr,
            r.mean_iterations,
            if timing { r.mean_wall_seconds.to_string() } else { String::new() },
            opt(r.upper_bound),
            r.circuit_complexity
        )?;
    }
    Ok(())
}

pub const REALIZATIONS_HEADER: &str = "point,realization,seed,rate_bits,iterations,wall_seconds,upper_bound_bits";

pub fn write_realizations_csv<W: Write>(realizations: &[Realization], timing: bool, mut out: W) -> Result<()> {
    writeln!(out, "{REALIZATIONS_HEADER}")?;
    for r in realizations {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.point,
            r.realization,
            r.seed,
            r.rate_bits,
            r.iterations,
            if timing { r.wall_seconds.to_string() } else { String::new() },
            opt(r.upper_bound_bits)
        )?;
    }
    Ok(())
}

/// Admittance arcs for every resistance and shunt inductance of the sweep.
pub fn arc_table(cfg: &ExperimentConfig, samples: usize) -> Result<String> {
    let mut out = String::from("R_ohm,L1_henry,theta,re_siemens,im_siemens,capacitance_farads\n");
    for &l1 in &cfg.l1_henry {
        for &r in &cfg.r_ohm {
            let mut buf = Vec::new();
            write_arc_csv(&CircuitParams { r, l1, ..cfg.circuit }, samples, &mut buf)?;
            let text = String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))?;
            for line in text.lines().skip(1) {
                let _ = writeln!(out, "{r},{l1},{line}");
            }
        }
    }
    Ok(out)
}

/// Iteration trace of one solve.
#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    pub point: SweepPoint,
    /// File name that identifies the point.
    pub name: String,
    pub csv: String,
}

/// Traces of every sweep point on the first realization.
pub fn convergence_traces(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceTrace>> {
    cfg.validate()?;
    cfg.points()
        .par_iter()
        .map(|pt| {
            let spec = cfg.spec(pt)?;
            let hw = cfg.hardware(pt)?;
            let seed = cfg.base_seed;
            let mut buf = Vec::new();
            match pt.algorithm {
                Algorithm::Bcd => {
                    let ch = generate_mumiso(&cfg.channel, cfg.m, cfg.n, cfg.k, seed)?;
                    bcd_solve(&ch, &spec, &hw, &cfg.bcd, dbm_to_watts(pt.p_dbm))?.trace.write_csv(&mut buf)?;
                }
                algo => {
                    let ch = generate_siso(&cfg.channel, cfg.m, seed)?;
                    let (_, trace) = match algo {
                        Algorithm::LowComplexity => low_complexity_solve(&ch, &spec, &hw, &cfg.low_complexity, &Init::ArcMidpoint)?,
                        _ => mm_admm_solve(&ch, &spec, &hw, &cfg.mm_admm, &cfg.mm_admm_init)?,
                    };
                    trace.write_csv(&mut buf)?;
                }
            }
            let name = format!(
                "convergence_{}_{}_mbar{}_R{}_L{}_P{}.csv",
                pt.algorithm.name(),
                pt.topology.name(),
                pt.mbar,
                pt.r_ohm,
                pt.l1_henry,
                pt.p_dbm
            );
            Ok(ConvergenceTrace { point: *pt, name, csv: String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))? })
        })
        .collect()
}

pub const TIMING_HEADER: &str = "point,realization,wall_seconds";

/// Per-solve wall times.
pub fn write_timing_csv<W: Write>(realizations: &[Realization], mut out: W) -> Result<()> {
    writeln!(out, "{TIMING_HEADER}")?;
    for r in realizations {
        writeln!(out, "{},{},{}", r.point, r.realization, r.wall_seconds)?;
    }
    Ok(())
}

/// Writes the result table, the per-realization dump, the wall times and
/// every figure file into `dir`, returning the written paths. Everything
/// except `timing.csv` is reproducible byte for byte.
pub fn write_outputs(cfg: &ExperimentConfig, results: &ExperimentResults, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let path = dir.join("results.csv");
    write_results_csv(cfg.system, &results.rows, false, std::fs::File::create(&path)?)?;
    paths.push(path);
    let path = dir.join("realizations.csv");
    write_realizations_csv(&results.realizations, false, std::fs::File::create(&path)?)?;
    paths.push(path);
    let path = dir.join("timing.csv");
    write_timing_csv(&results.realizations, std::fs::File::create(&path)?)?;
    paths.push(path);
    for kind in FigureKind::ALL {
        let path = dir.join(kind.file_name());
        emit_figure_data(&results.rows, kind, std::fs::File::create(&path)?)?;
        paths.push(path);
    }
    Ok(paths)
}
