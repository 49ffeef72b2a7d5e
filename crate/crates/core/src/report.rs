//! Serialisable views of pipeline results.

use serde::Serialize;

use crate::gif::GifReport;
use crate::pipeline::{RadicalReport, RoundRecord, TerminationReason};
use crate::polysys::{format_polynomial, PolySystem};

fn strings(p: &PolySystem) -> Vec<String> {
    p.polys().iter().map(format_polynomial).collect()
}

#[derive(Serialize)]
pub struct GifJson {
    pub k: u32,
    pub l: u32,
    pub degree: u32,
    pub kernel_dim: usize,
}

impl From<&GifReport> for GifJson {
    fn from(g: &GifReport) -> Self {
        Self {
            k: g.prolongations,
            l: g.projections,
            degree: g.output.degree(),
            kernel_dim: g.output.dim(),
        }
    }
}

#[derive(Serialize)]
pub struct MomentJson {
    pub full_side: usize,
    pub faces: Vec<usize>,
    pub eta: usize,
    pub m: usize,
}

#[derive(Serialize)]
pub struct SolveJson {
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Serialize)]
pub struct RoundJson {
    pub gif: GifJson,
    pub moment: MomentJson,
    pub solve: SolveJson,
    pub rank: usize,
    pub new_generators: Vec<String>,
}

impl From<&RoundRecord> for RoundJson {
    fn from(r: &RoundRecord) -> Self {
        Self {
            gif: (&r.gif).into(),
            moment: MomentJson {
                full_side: r.moment_side_full,
                faces: r.faces.clone(),
                eta: r.eta,
                m: r.m,
            },
            solve: SolveJson {
                method: r.solve.method.to_string(),
                iterations: r.solve.iterations,
                residual: r.solve.final_residual,
                seconds: r.solve.wall_seconds,
            },
            rank: r.rank,
            new_generators: strings(&r.new_generators),
        }
    }
}

#[derive(Serialize)]
pub struct RadicalJson {
    pub input: Vec<String>,
    pub rounds: Vec<RoundJson>,
    pub final_generators: Vec<String>,
    pub terminated: bool,
    pub reason: TerminationReason,
}

impl From<&RadicalReport> for RadicalJson {
    fn from(r: &RadicalReport) -> Self {
        Self {
            input: strings(&r.input),
            rounds: r.rounds.iter().map(Into::into).collect(),
            final_generators: strings(&r.final_generators),
            terminated: r.terminated,
            reason: r.reason,
        }
    }
}

pub fn to_json(r: &RadicalReport) -> String {
    serde_json::to_string_pretty(&RadicalJson::from(r)).expect("report serialises")
}

fn reason_text(r: TerminationReason) -> &'static str {
    match r {
        TerminationReason::RankEqualsDim => "rank equals kernel dimension",
        TerminationReason::RoundCap => "round cap reached",
        TerminationReason::SolverFailure => "solver did not converge",
    }
}

pub fn to_text(r: &RadicalReport) -> String {
    let mut s = String::new();
    for (i, rd) in r.rounds.iter().enumerate() {
        let faces: Vec<String> = rd.faces.iter().map(usize::to_string).collect();
        s += &format!(
            "round {}: gif k={} l={} degree={} kernel_dim={}{}\n",
            i + 1,
            rd.gif.prolongations,
            rd.gif.projections,
            rd.gif.output.degree(),
            rd.kernel_dim,
            if rd.gif.coordinate_change.is_some() { " (rotated)" } else { "" }
        );
        s += &format!(
            "  moment {}/{} faces [{}] eta={}\n",
            rd.reduction_factor.0,
            rd.reduction_factor.1,
            faces.join(", "),
            rd.eta
        );
        s += &format!(
            "  {} {} iterations residual {:.3e} in {:.3}s{}\n",
            rd.solve.method,
            rd.solve.iterations,
            rd.solve.final_residual,
            rd.solve.wall_seconds,
            if rd.solve.converged { "" } else { " (not converged)" }
        );
        if rd.abandoned_faces > 0 {
            let its: usize = rd.abandoned_solves.iter().map(|r| r.iterations).sum();
            s += &format!(
                "  warm start from {} smaller face(s), {} iterations there\n",
                rd.abandoned_faces, its
            );
        }
        s += &format!("  rank {} new generators {}\n", rd.rank, rd.new_generator_count);
    }
    s += &format!("{}\n", reason_text(r.reason));
    for g in strings(&r.final_generators) {
        s += &format!("{g}\n");
    }
    s
}
