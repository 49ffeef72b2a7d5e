//! Dense linear algebra kernels: rank decisions, subspaces, PSD projection,
//! least-norm affine projection and symmetric vectorisation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Singular values below `svd_rel_tol * sigma_max` count as zero.
    pub svd_rel_tol: f64,
    /// Target residual for the moment feasibility solve.
    pub residual_tol: f64,
    /// Tolerance for subspace containment tests.
    pub containment_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            svd_rel_tol: 1e-10,
            residual_tol: 1e-12,
            containment_tol: 1e-8,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("svd_rel_tol", self.svd_rel_tol),
            ("residual_tol", self.residual_tol),
            ("containment_tol", self.containment_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// Matrix with orthonormal columns spanning a subspace of `R^ambient`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Caller guarantees orthonormal columns.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    /// Orthonormal basis for the column span of `a`.
    pub fn span_of(a: &DMatrix<f64>, tol: f64) -> Result<Self> {
        Ok(rank_kernel(&a.transpose(), tol)?.rowspace)
    }

    pub fn empty(ambient: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient, ambient),
        }
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.basis
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }
}

/// Result of a rank-revealing SVD of an `m x N` matrix.
#[derive(Clone, Debug)]
pub struct RankKernel {
    pub rank: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// Orthonormal basis of the row space (`N x rank`).
    pub rowspace: SubspaceBasis,
    /// Orthonormal basis of the null space (`N x (N - rank)`).
    pub kernel: SubspaceBasis,
}

fn check_finite(a: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Numerical rank with threshold `tol * sigma_max`, together with
/// orthonormal bases of the row space and the null space.
pub fn rank_kernel(a: &DMatrix<f64>, tol: f64) -> Result<RankKernel> {
    check_finite(a, "matrix passed to rank_kernel")?;
    let (m, n) = a.shape();
    if n == 0 {
        return Ok(RankKernel {
            rank: 0,
            singular_values: vec![],
            rowspace: SubspaceBasis::empty(0),
            kernel: SubspaceBasis::empty(0),
        });
    }
    if m == 0 || a.iter().all(|&v| v == 0.0) {
        return Ok(RankKernel {
            rank: 0,
            singular_values: vec![0.0; m.min(n)],
            rowspace: SubspaceBasis::empty(n),
            kernel: SubspaceBasis::full(n),
        });
    }
    // Thin SVD only yields min(m, n) right vectors, so pad wide matrices.
    let padded;
    let work = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        padded = p;
        &padded
    } else {
        a
    };
    let svd = work.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let smax = s[order[0]];
    let rank = order.iter().filter(|&&i| s[i] > tol * smax).count();
    let mut row = DMatrix::zeros(n, rank);
    let mut ker = DMatrix::zeros(n, n - rank);
    for (k, &i) in order.iter().enumerate() {
        let col = vt.row(i).transpose();
        if k < rank {
            row.set_column(k, &col);
        } else {
            ker.set_column(k - rank, &col);
        }
    }
    let singular_values = order.iter().take(m.min(n)).map(|&i| s[i]).collect();
    Ok(RankKernel {
        rank,
        singular_values,
        rowspace: SubspaceBasis::from_orthonormal(row),
        kernel: SubspaceBasis::from_orthonormal(ker),
    })
}

/// Rank of `a` counting singular values above an absolute threshold.
pub fn rank_abs(a: &DMatrix<f64>, threshold: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    a.clone()
        .singular_values()
        .iter()
        .filter(|&&s| s > threshold)
        .count()
}

/// Orthonormal basis of the complement of `span(B)`, for `B` with full
/// column rank.
pub fn orthonormal_complement(b: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if b.ncols() == 0 {
        return Ok(DMatrix::identity(b.nrows(), b.nrows()));
    }
    let rk = rank_kernel(&b.transpose(), tol)?;
    if rk.rank < b.ncols() {
        return Err(Error::RankDeficient {
            rank: rk.rank,
            cols: b.ncols(),
        });
    }
    Ok(rk.kernel.into_matrix())
}

/// Nearest PSD matrix in Frobenius norm, with the eigenvalues of the
/// symmetrised input.
pub fn psd_project_eig(s: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_finite(s, "matrix passed to psd_project")?;
    if s.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "psd_project expects a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.is_empty() {
        return Ok((s.clone(), DVector::zeros(0)));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut v = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let w = l.max(0.0).sqrt();
        v.column_mut(j).scale_mut(w);
    }
    Ok((&v * v.transpose(), eig.eigenvalues))
}

pub fn psd_project(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    psd_project_eig(s).map(|(p, _)| p)
}

pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Packs the upper triangle row by row, off-diagonal entries scaled by
/// `sqrt 2` so that `<svec X, svec Y> = trace(X Y)`.
pub fn svec(s: &DMatrix<f64>) -> DVector<f64> {
    let n = s.nrows();
    let r2 = std::f64::consts::SQRT_2;
    let mut v = DVector::zeros(svec_len(n));
    let mut k = 0;
    for i in 0..n {
        v[k] = s[(i, i)];
        k += 1;
        for j in i + 1..n {
            v[k] = r2 * 0.5 * (s[(i, j)] + s[(j, i)]);
            k += 1;
        }
    }
    v
}

pub fn side_of_svec(len: usize) -> Result<usize> {
    let side = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    for s in side.saturating_sub(1)..=side + 1 {
        if svec_len(s) == len {
            return Ok(s);
        }
    }
    Err(Error::NotTriangular { len })
}

pub fn smat(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = side_of_svec(v.len())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut s = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        s[(i, i)] = v[k];
        k += 1;
        for j in i + 1..n {
            let x = h * v[k];
            s[(i, j)] = x;
            s[(j, i)] = x;
            k += 1;
        }
    }
    Ok(s)
}

/// Cached projector onto `{p : L p = b}` (least squares when inconsistent).
/// `L` is replaced by its compact SVD, which drops redundant rows.
#[derive(Clone, Debug)]
pub struct LeastNormProjector {
    w: DMatrix<f64>,
    sigma: DVector<f64>,
    target: DVector<f64>,
    bc: DVector<f64>,
    perp: f64,
    rows: usize,
}

impl LeastNormProjector {
    pub fn new(l: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<Self> {
        check_finite(l, "constraint matrix")?;
        if l.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} rows, right-hand side {}",
                l.nrows(),
                b.len()
            )));
        }
        let p = l.ncols();
        if l.nrows() == 0 || p == 0 || l.iter().all(|&v| v == 0.0) {
            return Ok(Self {
                w: DMatrix::zeros(p, 0),
                sigma: DVector::zeros(0),
                target: DVector::zeros(0),
                bc: DVector::zeros(0),
                perp: b.norm(),
                rows: l.nrows(),
            });
        }
        // Work with L^T when it is wide so the SVD stays thin.
        let svd = l.transpose().svd(true, true);
        let wfull = svd.u.expect("u requested");
        let ufull = svd.v_t.expect("v requested").transpose();
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
        let smax = s[order[0]];
        let keep: Vec<usize> = order.into_iter().filter(|&i| s[i] > tol * smax).collect();
        let r = keep.len();
        let mut w = DMatrix::zeros(p, r);
        let mut u = DMatrix::zeros(l.nrows(), r);
        let mut sigma = DVector::zeros(r);
        for (k, &i) in keep.iter().enumerate() {
            w.set_column(k, &wfull.column(i));
            u.set_column(k, &ufull.column(i));
            sigma[k] = s[i];
        }
        let bc = u.transpose() * b;
        let perp = (b - &u * &bc).norm();
        let target = bc.component_div(&sigma);
        Ok(Self {
            w,
            sigma,
            target,
            bc,
            perp,
            rows: l.nrows(),
        })
    }

    /// Number of independent constraints kept.
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Constraints discarded as linearly dependent.
    pub fn dropped(&self) -> usize {
        self.rows - self.rank()
    }

    /// Distance of `b` from the range of `L`; zero for a consistent system.
    pub fn inconsistency(&self) -> f64 {
        self.perp
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let c = &self.target - self.w.transpose() * x;
        x + &self.w * c
    }

    /// `||b - L x||`.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        let r = &self.bc - (self.w.transpose() * x).component_mul(&self.sigma);
        (r.norm_squared() + self.perp * self.perp).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct LeastNormUpdate {
    pub point: DVector<f64>,
    pub residual: f64,
    /// False when `b` is not in the range of `L` up to `residual_tol`.
    pub feasible: bool,
}

/// `p + L^+ (b - L p)`, the nearest point of the affine set to `p`.
pub fn least_norm_update(
    l: &DMatrix<f64>,
    p: &DVector<f64>,
    b: &DVector<f64>,
    tol: &ToleranceConfig,
) -> Result<LeastNormUpdate> {
    if l.ncols() != p.len() {
        return Err(Error::Dimension(format!(
            "constraint matrix has {} columns, point has length {}",
            l.ncols(),
            p.len()
        )));
    }
    let proj = LeastNormProjector::new(l, b, tol.svd_rel_tol)?;
    let point = proj.project(p);
    let residual = proj.residual(&point);
    Ok(LeastNormUpdate {
        point,
        residual,
        feasible: residual <= tol.residual_tol.max(1e-10 * b.norm()),
    })
}

/// Whether every column of orthonormal `a` lies in `span(b)` up to `tol`.
pub fn subspace_contained(a: &SubspaceBasis, b: &SubspaceBasis, tol: f64) -> bool {
    if a.dim() == 0 {
        return true;
    }
    if a.ambient() != b.ambient() {
        return false;
    }
    let bm = b.matrix();
    let r = a.matrix() - bm * (bm.transpose() * a.matrix());
    r.column_iter().all(|c| c.norm() <= tol)
}
