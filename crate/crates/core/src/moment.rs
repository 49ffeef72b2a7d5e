//! Moment matrix structure on a monomial basis and the faces of the PSD cone
//! it is restricted to.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gif::KernelState;
use crate::numlin::{
    orthonormal_complement, rank_kernel, svec_len, LeastNormProjector, SubspaceBasis,
};
use crate::polysys::{coefficient_matrix, monomial_count, Monomial, MonomialBasis, PolySystem};

/// How a linear constraint on the moment matrix arises.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representative {
    /// `M[0,0] = 1`.
    Normalization,
    /// `M[i,j] = M[g,h]`, `(g,h)` being the first cell with the same monomial.
    Tie { i: usize, j: usize, g: usize, h: usize },
}

/// Hankel-type structure of the moment matrix indexed by monomials of
/// degree at most `d`.
#[derive(Clone, Debug)]
pub struct MomentStructure {
    pub n: usize,
    pub d: u32,
    pub side: usize,
    /// Distinct monomials `b_i b_j` in order of first appearance.
    pub moments: Vec<Monomial>,
    /// Moment index of every upper-triangle cell, row by row.
    pub cell_moment: Vec<usize>,
    pub reps: Vec<Representative>,
}

impl MomentStructure {
    /// Number of constraints: one normalisation plus one tie per repeated cell.
    pub fn eta(&self) -> usize {
        self.reps.len()
    }

    pub fn basis(&self) -> MonomialBasis {
        MonomialBasis::new(self.n, self.d)
    }

    /// Dense `A_t` (side x side).
    pub fn rep_matrix(&self, t: usize) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.side, self.side);
        let mut sym = |i: usize, j: usize, v: f64| {
            a[(i, j)] += 0.5 * v;
            a[(j, i)] += 0.5 * v;
        };
        match self.reps[t] {
            Representative::Normalization => sym(0, 0, 1.0),
            Representative::Tie { i, j, g, h } => {
                sym(i, j, 1.0);
                sym(g, h, -1.0);
            }
        }
        a
    }
}

/// Largest moment matrix side `build_structure` accepts.
pub const MAX_SIDE: usize = 1000;

pub fn build_structure(n: usize, d: u32) -> Result<MomentStructure> {
    let size = monomial_count(n, d);
    if size > MAX_SIDE as u128 {
        return Err(Error::MemoryCap {
            size,
            cap: MAX_SIDE,
        });
    }
    let basis = MonomialBasis::new(n, d);
    let side = basis.len();
    let mut first: HashMap<Monomial, (usize, usize, usize)> = HashMap::new();
    let mut moments = Vec::new();
    let mut cell_moment = Vec::with_capacity(svec_len(side));
    let mut reps = vec![Representative::Normalization];
    for i in 0..side {
        for j in i..side {
            let m = basis.get(i).mul(basis.get(j));
            match first.get(&m) {
                Some(&(id, g, h)) => {
                    cell_moment.push(id);
                    reps.push(Representative::Tie { i, j, g, h });
                }
                None => {
                    let id = moments.len();
                    first.insert(m.clone(), (id, i, j));
                    moments.push(m);
                    cell_moment.push(id);
                }
            }
        }
    }
    debug_assert_eq!(moments.len() as u128, monomial_count(n, 2 * d));
    Ok(MomentStructure {
        n,
        d,
        side,
        moments,
        cell_moment,
        reps,
    })
}

/// Orthonormal basis of the span of the coefficient vectors of `q` in the
/// basis of degree `d`.
pub fn assemble_b(q: &PolySystem, d: u32, tol: f64) -> Result<DMatrix<f64>> {
    if q.is_zero() {
        return Err(Error::ZeroSystem);
    }
    let cm = coefficient_matrix(q, d)?;
    Ok(rank_kernel(&cm.matrix, tol)?.rowspace.into_matrix())
}

/// Moment feasibility problem restricted to the face `F S F^T`.
#[derive(Clone, Debug)]
pub struct FacedProblem {
    pub structure: Arc<MomentStructure>,
    /// Orthonormal basis of the kernel constraints' span `B`.
    pub b: DMatrix<f64>,
    /// Composite face basis (`N x side`), orthonormal columns.
    pub face: DMatrix<f64>,
    /// Face sizes after each reduction, starting with the first one.
    pub chain: Vec<usize>,
    /// Row `t` is `svec(F^T A_t F)`.
    pub l: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub projector: LeastNormProjector,
}

fn sym_outer_svec(u: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
    let r2 = std::f64::consts::SQRT_2;
    let s = u.len();
    let mut k = 0;
    for a in 0..s {
        out[k] += scale * u[a] * v[a];
        k += 1;
        for b in a + 1..s {
            out[k] += scale * r2 * 0.5 * (u[a] * v[b] + u[b] * v[a]);
            k += 1;
        }
    }
}

impl FacedProblem {
    pub fn new(
        structure: Arc<MomentStructure>,
        b: DMatrix<f64>,
        face: DMatrix<f64>,
        chain: Vec<usize>,
        tol: f64,
    ) -> Result<Self> {
        let side = face.ncols();
        let p = svec_len(side);
        let eta = structure.eta();
        let rows: Vec<Vec<f64>> = (0..face.nrows())
            .map(|i| face.row(i).iter().copied().collect())
            .collect();
        let mut l = DMatrix::zeros(eta, p);
        let mut buf = vec![0.0; p];
        for (t, rep) in structure.reps.iter().enumerate() {
            buf.iter_mut().for_each(|v| *v = 0.0);
            match *rep {
                Representative::Normalization => sym_outer_svec(&rows[0], &rows[0], 1.0, &mut buf),
                Representative::Tie { i, j, g, h } => {
                    sym_outer_svec(&rows[i], &rows[j], 1.0, &mut buf);
                    sym_outer_svec(&rows[g], &rows[h], -1.0, &mut buf);
                }
            }
            for (k, &v) in buf.iter().enumerate() {
                l[(t, k)] = v;
            }
        }
        let mut rhs = DVector::zeros(eta);
        rhs[0] = 1.0;
        let projector = LeastNormProjector::new(&l, &rhs, tol)?;
        Ok(Self {
            structure,
            b,
            face,
            chain,
            l,
            rhs,
            projector,
        })
    }

    pub fn side(&self) -> usize {
        self.face.ncols()
    }

    pub fn eta(&self) -> usize {
        self.structure.eta()
    }

    /// `F^T A_t F`.
    pub fn reduced_rep(&self, t: usize) -> DMatrix<f64> {
        self.face.transpose() * self.structure.rep_matrix(t) * &self.face
    }

    /// `trace(F^T A_1 F)`, the squared weight of the constant monomial on the face.
    pub fn normalization_trace(&self) -> f64 {
        self.face.row(0).norm_squared()
    }

    pub fn lift(&self, reduced: &DMatrix<f64>) -> DMatrix<f64> {
        &self.face * reduced * self.face.transpose()
    }

    /// The same problem on the sub-face spanned by `w` (`side x side'`).
    pub fn restrict(&self, w: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let face = &self.face * w;
        let mut chain = self.chain.clone();
        chain.push(face.ncols());
        Self::new(self.structure.clone(), self.b.clone(), face, chain, tol)
    }
}

/// First reduction: the moment matrix must vanish on `span(B)`, so it lives
/// on the face spanned by the complement `V`.
pub fn facial_reduce_first(
    structure: Arc<MomentStructure>,
    b: &DMatrix<f64>,
    tol: f64,
) -> Result<FacedProblem> {
    if b.nrows() != structure.side {
        return Err(Error::Dimension(format!(
            "B has {} rows, moment matrix side is {}",
            b.nrows(),
            structure.side
        )));
    }
    let v = orthonormal_complement(b, tol)?;
    let chain = vec![v.ncols()];
    FacedProblem::new(structure, b.clone(), v, chain, tol)
}

#[derive(Clone, Debug)]
pub struct MomentSolution {
    pub reduced: DMatrix<f64>,
    pub full: DMatrix<f64>,
    pub rank: usize,
    pub kernel: SubspaceBasis,
    /// Polynomials whose coefficient vectors span `ker M`.
    pub kernel_polys: PolySystem,
    /// `M[0,0]` differs from 1, so the point is not a valid moment matrix.
    pub degenerate: bool,
}

const LIFT_CHECK: f64 = 1e-8;

/// Lifts a reduced solution and reads off the new generators from its kernel.
pub fn lift_and_extract(fp: &FacedProblem, reduced: &DMatrix<f64>, tol: f64) -> Result<MomentSolution> {
    let full = fp.lift(reduced);
    let scale = full.norm().max(1.0);
    let residual = (fp.b.transpose() * &full).norm();
    if residual > LIFT_CHECK * scale {
        return Err(Error::Inconsistent { residual });
    }
    let rk = rank_kernel(&full, tol)?;
    let st = fp.structure.as_ref();
    let state = KernelState::from_rows(st.n, st.d, &rk.kernel.matrix().transpose(), tol)?;
    Ok(MomentSolution {
        degenerate: (full[(0, 0)] - 1.0).abs() > 1e-6,
        reduced: reduced.clone(),
        full,
        rank: rk.rank,
        kernel: rk.kernel,
        kernel_polys: state.generators(),
    })
}
