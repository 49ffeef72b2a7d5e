use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SolverConfig;
use crate::error::{Error, Result};
use crate::moment::FacedProblem;
use crate::numlin::{psd_project, smat, svec, svec_len};

/// Aim well below the acceptance level: a face cut from a loose certificate
/// leaves the reduced problem barely feasible.
const TARGET: f64 = 1e-15;
const ACCEPT: f64 = 1e-9;
const WINDOW: usize = 3000;

/// `Z = sum_t y_t A_t` PSD with `trace Z = 1` and `y_1 = 0`: the moment
/// matrix must be orthogonal to `Z`, so it lives on the null space of `Z`.
#[derive(Clone, Debug)]
pub struct FacialCertificate {
    pub y: DVector<f64>,
    pub z: DMatrix<f64>,
    /// `|b^T y|`, zero by construction.
    pub objective: f64,
    pub residual: f64,
    /// Orthonormal basis of the numerical null space of `Z`.
    pub null_basis: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct AuxOutcome {
    pub certificate: Option<FacialCertificate>,
    pub residual: f64,
    pub iterations: usize,
}

impl AuxOutcome {
    fn none(residual: f64, iterations: usize) -> Self {
        Self {
            certificate: None,
            residual,
            iterations,
        }
    }
}

/// Looks for a certificate that the current face is too large. Solved by
/// Douglas-Rachford between `{z in span(svec A_t, t >= 2) : <svec I, z> = 1}`
/// and the PSD cone. `None` means the problem looks strictly feasible.
pub fn aux_certificate(fp: &FacedProblem, cfg: &SolverConfig, tol: f64) -> Result<AuxOutcome> {
    certificate_for_constraints(&fp.l, fp.side(), cfg, tol)
}

/// Same search for an arbitrary constraint matrix whose row `t` is
/// `svec(A_t)`, row 0 being the normalisation (right-hand side `e_1`).
pub fn certificate_for_constraints(
    l: &DMatrix<f64>,
    s: usize,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<AuxOutcome> {
    let eta = l.nrows();
    if l.ncols() != svec_len(s) {
        return Err(Error::Dimension(format!(
            "constraint rows have length {}, side {s} needs {}",
            l.ncols(),
            svec_len(s)
        )));
    }
    if eta < 2 || s == 0 {
        return Ok(AuxOutcome::none(f64::INFINITY, 0));
    }
    let a = l.rows(1, eta - 1).transpose();
    let svd = a.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return Ok(AuxOutcome::none(f64::INFINITY, 0));
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > tol * smax).collect();
    let q = u.select_columns(&keep);
    let e = svec(&DMatrix::identity(s, s));
    let w = &q * (q.transpose() * &e);
    let ww = w.norm_squared();
    if ww < 1e-20 {
        return Ok(AuxOutcome::none(f64::INFINITY, 0));
    }
    let proj = |z: &DVector<f64>| -> DVector<f64> {
        let x = &q * (q.transpose() * z);
        let c = (1.0 - w.dot(&x)) / ww;
        x + &w * c
    };

    let mut pc = DMatrix::identity(s, s) / s as f64;
    let mut r_psd = pc.clone();
    let mut best = f64::INFINITY;
    let mut best_z = pc.clone();
    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let p_l = smat(&proj(&svec(&r_psd)))?;
        let r_l = &p_l * 2.0 - &r_psd;
        pc = (&pc + &r_l) * 0.5;
        let z = psd_project(&pc)?;
        let zv = svec(&z);
        let res = (proj(&zv) - &zv).norm();
        if !res.is_finite() {
            return Err(Error::NonFinite("certificate iterate"));
        }
        if res < best {
            best = res;
            best_z = z.clone();
        }
        history.push(best);
        if best <= TARGET {
            break;
        }
        if it > WINDOW && best > 0.5 * history[it - 1 - WINDOW] {
            break;
        }
        r_psd = &z * 2.0 - &pc;
    }
    if best > ACCEPT {
        return Ok(AuxOutcome::none(best, iterations));
    }

    // Snap to the affine set and recover the multipliers.
    let zv = proj(&svec(&best_z));
    let coords = q.transpose() * &zv;
    let mut y: DVector<f64> = DVector::zeros(eta);
    for (k, &i) in keep.iter().enumerate() {
        let c = coords[k] / sv[i];
        for t in 0..eta - 1 {
            y[t + 1] += vt[(i, t)] * c;
        }
    }
    let z = smat(&zv)?;
    if z.norm() < 1e-6 {
        return Ok(AuxOutcome::none(best, iterations));
    }
    let eig = SymmetricEigen::new(z.clone());
    let lmax = eig.eigenvalues.max();
    let null: Vec<usize> = (0..s).filter(|&i| eig.eigenvalues[i] <= tol * lmax).collect();
    let null_basis = eig.eigenvectors.select_columns(&null);
    Ok(AuxOutcome {
        certificate: Some(FacialCertificate {
            objective: y[0].abs(),
            y,
            z,
            residual: best,
            null_basis,
        }),
        residual: best,
        iterations,
    })
}

/// Restricts the problem to the null space of the certificate.
pub fn facial_reduce_further(
    fp: &FacedProblem,
    cert: &FacialCertificate,
    tol: f64,
) -> Result<FacedProblem> {
    let w = &cert.null_basis;
    if w.ncols() == 0 || w.ncols() >= fp.side() {
        return Err(Error::EmptyNullSpace);
    }
    fp.restrict(w, tol)
}
