//! The outer loop: involutive form, faced moment solve, kernel extraction,
//! repeated until the moment matrix adds nothing to the involutive kernel.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gif::{gif, CoordPolicy, GifConfig, GifReport};
use crate::moment::{build_structure, facial_reduce_first, lift_and_extract, FacedProblem, MomentSolution};
use crate::numlin::ToleranceConfig;
use crate::polysys::{apply_coordinate_change, monomial_count, random_orthogonal, PolySystem, Polynomial};
use crate::solver::{
    aux_certificate, default_start, facial_reduce_further, random_start, residual, solve_from, SolveReport,
    SolverConfig,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tol: ToleranceConfig,
    pub solver: SolverConfig,
    pub max_k: u32,
    pub coord: CoordPolicy,
    /// Extra solves from random PSD starts; the highest-rank lift wins.
    pub restarts: usize,
    /// Further facial reductions attempted per round.
    pub max_fr: usize,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tol: ToleranceConfig::default(),
            solver: SolverConfig::default(),
            max_k: 10,
            coord: CoordPolicy::Auto,
            restarts: 0,
            max_fr: 2,
            max_rounds: 10,
            seed: 7,
        }
    }
}

impl PipelineConfig {
    pub fn gif_config(&self) -> GifConfig {
        GifConfig {
            tol: self.tol,
            max_k: self.max_k,
            coord: self.coord,
            seed: self.seed,
            ..GifConfig::default()
        }
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            residual_tol: self.tol.residual_tol,
            ..self.solver.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuxSummary {
    pub found: bool,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub gif: GifReport,
    /// Generators of the involutive form, in the input coordinates.
    pub gif_generators: PolySystem,
    pub kernel_dim: usize,
    pub moment_side_full: usize,
    pub moment_side_reduced: usize,
    /// Sizes of every face built, in order; the first equals `moment_side_reduced`.
    pub faces: Vec<usize>,
    /// Side of the face the accepted solution lives on.
    pub solved_side: usize,
    /// Smaller faces whose solve could not reach the tolerance; their
    /// iterates warm-started the solve on the face finally used.
    pub abandoned_faces: usize,
    /// The solves on those faces, smallest face first.
    pub abandoned_solves: Vec<SolveReport>,
    pub eta: usize,
    pub m: usize,
    pub aux: Vec<AuxSummary>,
    pub solve: SolveReport,
    pub solution: MomentSolution,
    pub rank: usize,
    pub new_generators: PolySystem,
    pub new_generator_count: usize,
    pub reduction_factor: (usize, usize),
    /// The round was redone after a random orthogonal change of coordinates.
    pub coordinate_retry: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    RankEqualsDim,
    RoundCap,
    SolverFailure,
}

#[derive(Clone, Debug)]
pub struct RadicalReport {
    pub input: PolySystem,
    pub rounds: Vec<RoundRecord>,
    pub final_generators: PolySystem,
    pub terminated: bool,
    pub reason: TerminationReason,
}

struct Solved {
    solution: MomentSolution,
    report: SolveReport,
}

fn solve_with_restarts(
    fp: &FacedProblem,
    cfg: &PipelineConfig,
    warm: Option<DMatrix<f64>>,
    relaxed: bool,
) -> Result<Solved> {
    let base = cfg.solver_config();
    let scfg = if relaxed {
        // Aim only for what the face allows; the coarser face finishes the job.
        SolverConfig {
            residual_tol: base.residual_tol.max(2.0 * fp.projector.inconsistency()),
            stop_on_stagnation: true,
            ..base
        }
    } else {
        base
    };
    let tol = cfg.tol.svd_rel_tol;
    let first = warm.unwrap_or_else(|| default_start(fp, &scfg));
    let starts: Vec<DMatrix<f64>> = std::iter::once(first)
        .chain((0..cfg.restarts).map(|r| random_start(fp, cfg.seed.wrapping_add(1 + r as u64))))
        .collect();
    let runs: Vec<Result<Solved>> = starts
        .par_iter()
        .map(|x0| {
            let (x, report) = solve_from(fp, &scfg, x0)?;
            let solution = lift_and_extract(fp, &x, tol)?;
            Ok(Solved { solution, report })
        })
        .collect();
    let mut runs: Vec<Solved> = runs.into_iter().collect::<Result<_>>()?;
    // The mean of feasible points is feasible and its range contains each of
    // theirs, so it is a better generic point than any single run.
    let converged: Vec<&Solved> = runs.iter().filter(|r| r.report.converged).collect();
    if converged.len() > 1 {
        let k = converged.len() as f64;
        let mean = converged
            .iter()
            .fold(DMatrix::zeros(fp.side(), fp.side()), |acc, r| acc + &r.solution.reduced)
            / k;
        let mut report = converged[0].report.clone();
        report.final_residual = residual(fp, &mean);
        report.converged = report.final_residual <= scfg.residual_tol;
        report.wall_seconds = converged.iter().map(|r| r.report.wall_seconds).sum();
        report.psd_seconds = converged.iter().map(|r| r.report.psd_seconds).sum();
        let solution = lift_and_extract(fp, &mean, tol)?;
        runs.push(Solved { solution, report });
    }
    let mut best: Option<Solved> = None;
    for run in runs {
        let better = match &best {
            None => true,
            Some(b) => match (run.report.converged, b.report.converged) {
                (true, false) => true,
                (false, true) => false,
                _ => run.solution.rank > b.solution.rank,
            },
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

fn run_round(q: &PolySystem, cfg: &PipelineConfig) -> Result<RoundRecord> {
    let tol = cfg.tol.svd_rel_tol;
    let g = gif(q, &cfg.gif_config())?;
    let state = &g.output;
    let n = q.nvars();
    let d = state.dim();
    let degree = state.degree();
    let full = monomial_count(n, degree) as usize;
    let structure = Arc::new(build_structure(n, degree)?);
    let b = state.rowspace().matrix().clone();
    let m = b.ncols();
    let first = facial_reduce_first(structure, &b, tol)?;
    let eta = first.eta();

    if d == 0 {
        // 1 lies in the ideal, so the variety is empty and there is no point to
        // solve for.
        let solution = lift_and_extract(&first, &DMatrix::zeros(0, 0), tol)?;
        let one = PolySystem::new(n, vec![Polynomial::constant(n, 1.0)])?;
        return Ok(RoundRecord {
            gif_generators: one.clone(),
            kernel_dim: 0,
            moment_side_full: full,
            moment_side_reduced: full - m,
            abandoned_faces: 0,
            abandoned_solves: Vec::new(),
            faces: first.chain.clone(),
            solved_side: 0,
            eta,
            m,
            aux: Vec::new(),
            rank: 0,
            new_generator_count: 1,
            new_generators: one,
            reduction_factor: (full, full - m),
            solve: SolveReport::trivial(cfg.solver.method),
            solution,
            coordinate_retry: false,
            gif: g,
        });
    }

    let mut faces = vec![first];
    let mut aux = Vec::new();
    let aux_cfg = cfg.solver_config();
    for _ in 0..cfg.max_fr {
        let cur = faces.last().unwrap();
        if cur.side() <= 1 {
            break;
        }
        let out = aux_certificate(cur, &aux_cfg, tol)?;
        aux.push(AuxSummary {
            found: out.certificate.is_some(),
            residual: out.residual,
            iterations: out.iterations,
        });
        let Some(cert) = out.certificate else { break };
        match facial_reduce_further(cur, &cert, tol) {
            Ok(next) => faces.push(next),
            Err(Error::EmptyNullSpace) => break,
            Err(e) => return Err(e),
        }
    }

    // A certificate is only accurate to its residual, so the smallest face can
    // miss the feasible set by a hair and the constraints on it become slightly
    // inconsistent. The iterate found there is still of maximal rank and nearly
    // feasible: use it to warm-start the next coarser face.
    let mut chosen: Option<(usize, Solved)> = None;
    let mut abandoned_solves = Vec::new();
    for idx in (0..faces.len()).rev() {
        let warm = chosen.as_ref().map(|(prev, s): &(usize, Solved)| {
            let w = faces[idx].face.transpose() * &faces[*prev].face;
            &w * &s.solution.reduced * w.transpose()
        });
        let solved = solve_with_restarts(&faces[idx], cfg, warm, idx > 0)?;
        let ok = solved.report.converged && solved.report.final_residual <= cfg.tol.residual_tol;
        if let Some((_, prev)) = chosen.take() {
            abandoned_solves.push(prev.report);
        }
        chosen = Some((idx, solved));
        if ok {
            break;
        }
    }
    let (idx, solved) = chosen.expect("at least one face");
    let sides: Vec<usize> = faces.last().expect("first face").chain.clone();
    let solved_side = faces[idx].side();
    let rank = solved.solution.rank;
    let new_generators = solved.solution.kernel_polys.clone();
    Ok(RoundRecord {
        gif_generators: state.generators(),
        kernel_dim: d,
        moment_side_full: full,
        moment_side_reduced: full - m,
        abandoned_faces: faces.len() - 1 - idx,
        abandoned_solves,
        faces: sides,
        solved_side,
        eta,
        m,
        aux,
        rank,
        new_generator_count: new_generators.len(),
        new_generators,
        reduction_factor: (full, full - m),
        solve: solved.report,
        solution: solved.solution,
        coordinate_retry: false,
        gif: g,
    })
}

fn rotate_back(p: &PolySystem, t: &DMatrix<f64>) -> Result<PolySystem> {
    apply_coordinate_change(p, &t.transpose())
}

/// Runs the round in rotated coordinates and maps the generators back.
fn run_round_rotated(q: &PolySystem, cfg: &PipelineConfig, seed: u64) -> Result<RoundRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_orthogonal(q.nvars(), &mut rng);
    let rotated = apply_coordinate_change(q, &t)?;
    let mut rec = run_round(&rotated, cfg)?;
    rec.gif_generators = rotated_state_generators(&rec.gif_generators, &t, cfg)?;
    rec.new_generators = rotated_state_generators(&rec.new_generators, &t, cfg)?;
    rec.new_generator_count = rec.new_generators.len();
    rec.coordinate_retry = true;
    Ok(rec)
}

fn rotated_state_generators(p: &PolySystem, t: &DMatrix<f64>, cfg: &PipelineConfig) -> Result<PolySystem> {
    let back = rotate_back(p, t)?;
    if back.is_empty() {
        return Ok(back);
    }
    let degree = back.degree();
    Ok(crate::gif::KernelState::from_system(&back, degree, cfg.tol.svd_rel_tol)?.generators())
}

/// Generators of the real radical of `<P>`, up to the numerical tolerances.
pub fn gif_m(p: &PolySystem, cfg: &PipelineConfig) -> Result<RadicalReport> {
    if p.is_zero() {
        return Err(Error::ZeroSystem);
    }
    cfg.tol.validate()?;
    let mut q = p.clone();
    let mut rounds = Vec::new();
    for round in 0..cfg.max_rounds {
        let mut rec = run_round(&q, cfg)?;
        if !rec.solve.converged {
            let seed = cfg.seed.wrapping_add(1000 + round as u64);
            match run_round_rotated(&q, cfg, seed) {
                Ok(r) if r.solve.converged => rec = r,
                _ => {
                    let final_generators = rec.gif_generators.clone();
                    rounds.push(rec);
                    return Ok(RadicalReport {
                        input: p.clone(),
                        rounds,
                        final_generators,
                        terminated: false,
                        reason: TerminationReason::SolverFailure,
                    });
                }
            }
        }
        let done = rec.rank == rec.kernel_dim;
        let next = if done {
            rec.gif_generators.clone()
        } else {
            rec.new_generators.clone()
        };
        rounds.push(rec);
        if done {
            return Ok(RadicalReport {
                input: p.clone(),
                rounds,
                final_generators: next,
                terminated: true,
                reason: TerminationReason::RankEqualsDim,
            });
        }
        q = next;
    }
    Ok(RadicalReport {
        input: p.clone(),
        final_generators: q,
        rounds,
        terminated: false,
        reason: TerminationReason::RoundCap,
    })
}

#[derive(Clone, Debug)]
pub struct PerPolynomialReport {
    pub parts: Vec<RadicalReport>,
    pub combined: RadicalReport,
}

/// Runs the loop on every input polynomial separately, then on the union of
/// the results.
pub fn gif_m_per_polynomial(p: &PolySystem, cfg: &PipelineConfig) -> Result<PerPolynomialReport> {
    let n = p.nvars();
    let parts: Vec<RadicalReport> = p
        .polys()
        .par_iter()
        .filter(|f| !f.is_zero())
        .map(|f| gif_m(&PolySystem::new(n, vec![f.clone()])?, cfg))
        .collect::<Result<_>>()?;
    let mut union = PolySystem::new(n, vec![])?;
    for part in &parts {
        for g in part.final_generators.polys() {
            union.push(g.clone())?;
        }
    }
    let combined = gif_m(&union, cfg)?;
    Ok(PerPolynomialReport { parts, combined })
}

/// `1 + x + ... + x^d`.
pub fn geometric_polynomial(d: u32) -> Polynomial {
    let x = Polynomial::var(1, 0);
    let mut p = Polynomial::constant(1, 1.0);
    for k in 1..=d {
        p = &p + &x.pow(k);
    }
    p
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: u32,
    pub seconds: f64,
    pub iterations: usize,
    pub residual: f64,
    pub generator_error: f64,
    #[serde(skip)]
    pub failure: Option<String>,
}

/// Max-coefficient distance between the normalised result and `x + 1`;
/// infinite unless the result is a single linear polynomial.
pub fn linear_generator_error(g: &PolySystem) -> f64 {
    if g.len() != 1 || g.polys()[0].degree() != Some(1) {
        return f64::INFINITY;
    }
    let q = g.polys()[0].normalized();
    let expected = &Polynomial::var(1, 0) + &Polynomial::constant(1, 1.0);
    (&q - &expected).max_abs_coeff()
}

/// Runs the loop on `1 + x + ... + x^d` for every odd `d <= d_max`.
pub fn bench_geometric(d_max: u32, cfg: &PipelineConfig) -> Result<Vec<BenchRow>> {
    if d_max.is_multiple_of(2) {
        return Err(Error::Config(format!("d_max must be odd, got {d_max}")));
    }
    let ds: Vec<u32> = (1..=d_max).step_by(2).collect();
    let rows = ds
        .par_iter()
        .map(|&d| {
            let t = Instant::now();
            let sys = PolySystem::new(1, vec![geometric_polynomial(d)]).expect("univariate");
            match gif_m(&sys, cfg) {
                Ok(rep) => BenchRow {
                    d,
                    seconds: t.elapsed().as_secs_f64(),
                    iterations: rep.rounds.iter().map(|r| r.solve.iterations).sum(),
                    residual: rep
                        .rounds
                        .iter()
                        .map(|r| r.solve.final_residual)
                        .fold(0.0, f64::max),
                    generator_error: linear_generator_error(&rep.final_generators),
                    failure: (!rep.terminated).then(|| format!("{:?}", rep.reason)),
                },
                Err(e) => BenchRow {
                    d,
                    seconds: t.elapsed().as_secs_f64(),
                    iterations: 0,
                    residual: f64::NAN,
                    generator_error: f64::INFINITY,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_bench_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
