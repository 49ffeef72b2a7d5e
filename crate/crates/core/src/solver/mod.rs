//! Projection methods for the faced moment feasibility problem: find `S`
//! PSD with `<A_t, S> = b_t`.

mod certificate;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moment::FacedProblem;
use crate::numlin::{psd_project, smat, svec};

pub use certificate::{
    aux_certificate, certificate_for_constraints, facial_reduce_further, AuxOutcome,
    FacialCertificate,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dr,
    Map,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dr" => Ok(Self::Dr),
            "map" => Ok(Self::Map),
            _ => Err(Error::Config(format!("unknown solver `{s}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dr => "dr",
            Self::Map => "map",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Start from `init_scale * I`; `None` picks `1 / trace(A_1)`.
    pub init_scale: Option<f64>,
    /// Keep an iteration record every this many steps.
    pub log_every: usize,
    pub seed: u64,
    /// End the run once the residual stops improving instead of running to
    /// `max_iter`.
    pub stop_on_stagnation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Dr,
            residual_tol: 1e-12,
            max_iter: 100_000,
            init_scale: None,
            log_every: 10,
            seed: 0,
            stop_on_stagnation: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub cosine: f64,
    pub psd_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    pub final_residual: f64,
    pub cosine_history: Vec<f64>,
    pub log: Vec<IterationRecord>,
    pub wall_seconds: f64,
    pub psd_seconds: f64,
    pub converged: bool,
    /// The residual moved by less than 0.1% over the last 5000 iterations.
    pub stagnated: bool,
}

impl SolveReport {
    /// Report for a problem that needed no iterations.
    pub fn trivial(method: Method) -> Self {
        SolveReport {
            method,
            iterations: 0,
            final_residual: 0.0,
            cosine_history: Vec::new(),
            log: Vec::new(),
            wall_seconds: 0.0,
            psd_seconds: 0.0,
            converged: true,
            stagnated: false,
        }
    }
}

const STAGNATION_WINDOW: usize = 5000;

/// Angle data between consecutive steps `mid - prev` and `next - mid`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// One of the steps vanished; `value` is reported as 0.
    pub degenerate: bool,
}

pub fn cosine(prev: &DMatrix<f64>, mid: &DMatrix<f64>, next: &DMatrix<f64>) -> Cosine {
    let a = mid - prev;
    let b = next - mid;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 || !(na * nb).is_normal() {
        return Cosine {
            value: 0.0,
            degenerate: true,
        };
    }
    Cosine {
        value: (a.dot(&b).abs() / (na * nb)).min(1.0),
        degenerate: false,
    }
}

fn check_tol(cfg: &SolverConfig) -> Result<()> {
    if !(cfg.residual_tol > 0.0) {
        return Err(Error::Config("residual tolerance must be positive".into()));
    }
    if cfg.max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    Ok(())
}

/// `alpha I` with `alpha = 1 / trace(A_1)` unless configured otherwise.
pub fn default_start(fp: &FacedProblem, cfg: &SolverConfig) -> DMatrix<f64> {
    let s = fp.side();
    let alpha = cfg.init_scale.unwrap_or_else(|| {
        let t = fp.normalization_trace();
        if t > 0.0 {
            1.0 / t
        } else {
            1.0
        }
    });
    DMatrix::identity(s, s) * alpha
}

/// Random PSD start `G G^T`, scaled to satisfy the normalisation.
pub fn random_start(fp: &FacedProblem, seed: u64) -> DMatrix<f64> {
    let s = fp.side();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: DMatrix<f64> = DMatrix::from_fn(s, s, |_, _| StandardNormal.sample(&mut rng));
    let x: DMatrix<f64> = &g * g.transpose();
    let f0 = fp.face.row(0).transpose();
    let w = (f0.transpose() * &x * &f0)[(0, 0)];
    if w > 0.0 {
        x / w
    } else {
        x / s as f64
    }
}

struct Tracker {
    log_every: usize,
    start: Instant,
    psd: f64,
    cosines: Vec<f64>,
    residuals: Vec<f64>,
    log: Vec<IterationRecord>,
}

impl Tracker {
    fn new(log_every: usize) -> Self {
        Self {
            log_every: log_every.max(1),
            start: Instant::now(),
            psd: 0.0,
            cosines: Vec::new(),
            residuals: Vec::new(),
            log: Vec::new(),
        }
    }

    fn psd(&mut self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let t = Instant::now();
        let p = psd_project(m);
        self.psd += t.elapsed().as_secs_f64();
        p
    }

    fn record(&mut self, it: usize, residual: f64, cos: Cosine, last: bool) {
        self.cosines.push(cos.value);
        self.residuals.push(residual);
        if it.is_multiple_of(self.log_every) || last {
            self.log.push(IterationRecord {
                iteration: it,
                residual,
                cosine: cos.value,
                psd_seconds: self.psd,
            });
        }
    }

    /// The best residual did not halve over the last window.
    fn stalled(&self) -> bool {
        let n = self.residuals.len();
        if n <= STAGNATION_WINDOW {
            return false;
        }
        let best = |k: usize| self.residuals[..k].iter().copied().fold(f64::INFINITY, f64::min);
        best(n) > 0.5 * best(n - STAGNATION_WINDOW)
    }

    fn finish(self, method: Method, converged: bool) -> SolveReport {
        let iterations = self.residuals.len();
        let final_residual = self.residuals.last().copied().unwrap_or(f64::INFINITY);
        let stagnated = iterations > STAGNATION_WINDOW && {
            let old = self.residuals[iterations - 1 - STAGNATION_WINDOW];
            old > 0.0 && ((old - final_residual) / old).abs() < 1e-3
        };
        SolveReport {
            method,
            iterations,
            final_residual,
            cosine_history: self.cosines,
            log: self.log,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            psd_seconds: self.psd,
            converged,
            stagnated,
        }
    }
}

fn check_start(fp: &FacedProblem, start: &DMatrix<f64>) -> Result<()> {
    let s = fp.side();
    if start.shape() != (s, s) {
        return Err(Error::Dimension(format!(
            "start point is {}x{}, face side is {s}",
            start.nrows(),
            start.ncols()
        )));
    }
    Ok(())
}

/// Douglas-Rachford splitting between the affine constraints and the PSD
/// cone. Returns the PSD iterate.
pub fn dr_solve_from(
    fp: &FacedProblem,
    cfg: &SolverConfig,
    start: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, SolveReport)> {
    check_tol(cfg)?;
    check_start(fp, start)?;
    let proj = &fp.projector;
    let mut tr = Tracker::new(cfg.log_every);
    let mut pc = start.clone();
    let mut r_psd = pc.clone();
    let mut p_psd = pc.clone();
    let mut converged = false;
    for it in 1..=cfg.max_iter {
        let p_l = smat(&proj.project(&svec(&r_psd)))?;
        let r_l = &p_l * 2.0 - &r_psd;
        let pc_old = pc;
        pc = (&pc_old + &r_l) * 0.5;
        p_psd = tr.psd(&pc)?;
        let res = proj.residual(&svec(&p_psd));
        if !res.is_finite() {
            return Err(Error::NonFinite("Douglas-Rachford iterate"));
        }
        converged = res <= cfg.residual_tol;
        let stop = converged || it == cfg.max_iter;
        tr.record(it, res, cosine(&pc_old, &r_psd, &r_l), stop);
        if converged || (cfg.stop_on_stagnation && it % 1000 == 0 && tr.stalled()) {
            break;
        }
        r_psd = &p_psd * 2.0 - &pc;
    }
    Ok((p_psd, tr.finish(Method::Dr, converged)))
}

/// Alternating projections between the affine set and the PSD cone.
pub fn map_solve_from(
    fp: &FacedProblem,
    cfg: &SolverConfig,
    start: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, SolveReport)> {
    check_tol(cfg)?;
    check_start(fp, start)?;
    let proj = &fp.projector;
    let mut tr = Tracker::new(cfg.log_every);
    let mut pc = start.clone();
    let mut converged = false;
    for it in 1..=cfg.max_iter {
        let p_l = smat(&proj.project(&svec(&pc)))?;
        let p_psd = tr.psd(&p_l)?;
        let res = proj.residual(&svec(&p_psd));
        if !res.is_finite() {
            return Err(Error::NonFinite("alternating projection iterate"));
        }
        converged = res <= cfg.residual_tol;
        tr.record(it, res, cosine(&pc, &p_l, &p_psd), converged || it == cfg.max_iter);
        pc = p_psd;
        if converged || (cfg.stop_on_stagnation && it % 1000 == 0 && tr.stalled()) {
            break;
        }
    }
    Ok((pc, tr.finish(Method::Map, converged)))
}

pub fn dr_solve(fp: &FacedProblem, cfg: &SolverConfig) -> Result<(DMatrix<f64>, SolveReport)> {
    dr_solve_from(fp, cfg, &default_start(fp, cfg))
}

pub fn map_solve(fp: &FacedProblem, cfg: &SolverConfig) -> Result<(DMatrix<f64>, SolveReport)> {
    map_solve_from(fp, cfg, &default_start(fp, cfg))
}

/// Runs the configured method from `start`.
pub fn solve_from(
    fp: &FacedProblem,
    cfg: &SolverConfig,
    start: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, SolveReport)> {
    match cfg.method {
        Method::Dr => dr_solve_from(fp, cfg, start),
        Method::Map => map_solve_from(fp, cfg, start),
    }
}

pub fn solve(fp: &FacedProblem, cfg: &SolverConfig) -> Result<(DMatrix<f64>, SolveReport)> {
    solve_from(fp, cfg, &default_start(fp, cfg))
}

/// `||b - L svec(S)||` for a candidate solution.
pub fn residual(fp: &FacedProblem, s: &DMatrix<f64>) -> f64 {
    fp.projector.residual(&svec(s))
}
