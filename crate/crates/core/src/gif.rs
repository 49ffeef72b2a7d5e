//! Geometric involutive form: prolongation, projection, the Cartan test on
//! the symbol and the completion loop.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numlin::{rank_abs, rank_kernel, subspace_contained, SubspaceBasis, ToleranceConfig};
use crate::polysys::{
    apply_coordinate_change, grevlex_position, monomial_count, random_orthogonal, Monomial,
    MonomialBasis, PolySystem, Polynomial,
};

/// Coefficients smaller than this (after normalisation) are dropped from
/// reported generators.
const GENERATOR_CHOP: f64 = 1e-14;

/// Kernel of a coefficient matrix at a fixed degree, with its orthogonal
/// complement (the span of the coefficient rows).
#[derive(Clone, Debug)]
pub struct KernelState {
    n: usize,
    degree: u32,
    kernel: SubspaceBasis,
    rowspace: SubspaceBasis,
}

impl KernelState {
    /// State spanned by coefficient rows given in the basis of degree `degree`.
    pub fn from_rows(n: usize, degree: u32, rows: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let rk = rank_kernel(rows, tol)?;
        let size = monomial_count(n, degree) as usize;
        let (kernel, rowspace) = if rows.ncols() == 0 {
            (SubspaceBasis::full(size), SubspaceBasis::empty(size))
        } else {
            (rk.kernel, rk.rowspace)
        };
        Ok(Self {
            n,
            degree,
            kernel,
            rowspace,
        })
    }

    pub fn from_system(p: &PolySystem, degree: u32, tol: f64) -> Result<Self> {
        let cm = crate::polysys::coefficient_matrix(p, degree)?;
        Self::from_rows(p.nvars(), degree, &cm.matrix, tol)
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Dimension of the kernel.
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn ambient(&self) -> usize {
        self.kernel.ambient()
    }

    pub fn kernel(&self) -> &SubspaceBasis {
        &self.kernel
    }

    pub fn rowspace(&self) -> &SubspaceBasis {
        &self.rowspace
    }

    pub fn basis(&self) -> MonomialBasis {
        MonomialBasis::new(self.n, self.degree)
    }

    pub fn generators(&self) -> PolySystem {
        generators(self)
    }
}

/// Readable generators of the row space: reduced row echelon form with the
/// highest monomials as pivots, each scaled so its largest coefficient is `+1`.
pub fn generators(s: &KernelState) -> PolySystem {
    let basis = s.basis();
    let rows = rref_desc(&s.rowspace.matrix().transpose());
    let polys = rows
        .row_iter()
        .map(|r| {
            let v: Vec<f64> = r.iter().copied().collect();
            let lead = v.iter().rev().copied().fold(0.0f64, |a, c| if c.abs() > a.abs() { c } else { a });
            let coeffs: Vec<f64> = v
                .iter()
                .map(|&c| {
                    let c = c / lead;
                    if c.abs() < GENERATOR_CHOP {
                        0.0
                    } else {
                        c
                    }
                })
                .collect();
            Polynomial::from_coefficients(&basis, &coeffs)
        })
        .collect();
    PolySystem::new(s.n, polys).expect("generators share the state's variables")
}

/// Gauss-Jordan elimination scanning columns from last to first.
fn rref_desc(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = a.clone();
    let (rows, cols) = m.shape();
    let scale = m.amax();
    if rows == 0 || scale == 0.0 {
        return m;
    }
    let mut r = 0;
    for c in (0..cols).rev() {
        if r == rows {
            break;
        }
        let (piv, val) = (r..rows)
            .map(|i| (i, m[(i, c)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if val <= 1e-10 * scale {
            continue;
        }
        m.swap_rows(r, piv);
        let p = m[(r, c)];
        m.row_mut(r).scale_mut(1.0 / p);
        let pivot_row = m.row(r).clone_owned();
        for i in 0..rows {
            if i != r {
                let f = m[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        m[(i, j)] -= f * pivot_row[j];
                    }
                }
            }
        }
        r += 1;
    }
    m.rows(0, r).clone_owned()
}

/// Multiplies every row (a polynomial of degree at most `q`) by all
/// monomials of degree at most `k`.
pub fn prolong_rows(rows: &DMatrix<f64>, n: usize, q: u32, k: u32) -> Result<DMatrix<f64>> {
    let src = MonomialBasis::new(n, q);
    let shifts = MonomialBasis::new(n, k);
    let out_len = monomial_count(n, q + k) as usize;
    let mut out = DMatrix::zeros(rows.nrows() * shifts.len(), out_len);
    let mut targets = vec![0usize; src.len()];
    for (a, alpha) in shifts.monomials().iter().enumerate() {
        for (j, m) in src.monomials().iter().enumerate() {
            targets[j] = grevlex_position(&m.mul(alpha), q + k)?;
        }
        for i in 0..rows.nrows() {
            let r = a * rows.nrows() + i;
            for (j, &t) in targets.iter().enumerate() {
                out[(r, t)] = rows[(i, j)];
            }
        }
    }
    Ok(out)
}

fn check_cap(n: usize, degree: u32, cap: usize) -> Result<()> {
    let size = monomial_count(n, degree);
    if size > cap as u128 {
        return Err(Error::MemoryCap { size, cap });
    }
    Ok(())
}

/// State of `D^k P`: all products `x^a p` of degree at most `deg P + k`.
pub fn prolong(p: &PolySystem, k: u32, cfg: &GifConfig) -> Result<KernelState> {
    let n = p.nvars();
    let top = p.degree() + k;
    check_cap(n, top, cfg.max_monomials)?;
    let basis = MonomialBasis::new(n, top);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for poly in p.polys() {
        let Some(dp) = poly.degree() else { continue };
        let shifts = MonomialBasis::new(n, top - dp);
        for alpha in shifts.monomials() {
            let row = poly
                .terms()
                .map(|(m, c)| Ok((basis.position(&m.mul(alpha))?, c)))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
    }
    let mut c = DMatrix::zeros(rows.len(), basis.len());
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            c[(i, j)] = v;
        }
    }
    KernelState::from_rows(n, top, &c, cfg.tol.svd_rel_tol)
}

/// `pi^l S`: the kernel restricted to monomials of degree at most `deg S - l`.
pub fn project(s: &KernelState, l: u32, tol: f64) -> Result<KernelState> {
    if l > s.degree {
        return Err(Error::DegreeTooLow {
            requested: s.degree.saturating_sub(l),
            system: s.degree,
        });
    }
    let degree = s.degree - l;
    let size = monomial_count(s.n, degree) as usize;
    if s.dim() == 0 {
        return Ok(KernelState {
            n: s.n,
            degree,
            kernel: SubspaceBasis::empty(size),
            rowspace: SubspaceBasis::full(size),
        });
    }
    let truncated = s.kernel.matrix().rows(0, size).clone_owned();
    let rk = rank_kernel(&truncated.transpose(), tol)?;
    Ok(KernelState {
        n: s.n,
        degree,
        kernel: rk.rowspace,
        rowspace: rk.kernel,
    })
}

/// Cartan characters of the symbol and the data of the involutivity test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolProfile {
    /// `betas[k - 1]` is the number of class-`k` pivots.
    pub betas: Vec<usize>,
    pub weighted_sum: usize,
    pub symbol_rank: usize,
    pub prolonged_rank: usize,
    pub involutive: bool,
}

/// Cartan test on the top-degree part of the generators of `s`.
pub fn symbol_profile(s: &KernelState, tol: f64) -> Result<SymbolProfile> {
    let n = s.n;
    let d = s.degree;
    let vacuous = SymbolProfile {
        betas: vec![0; n],
        weighted_sum: 0,
        symbol_rank: 0,
        prolonged_rank: 0,
        involutive: true,
    };
    if d == 0 || s.rowspace.dim() == 0 {
        return Ok(vacuous);
    }
    let start = monomial_count(n, d - 1) as usize;
    let size = monomial_count(n, d) as usize;
    let g = s.rowspace.matrix().transpose();
    let top = g.columns(start, size - start).clone_owned();
    let smax = top.amax().max(0.0);
    if smax == 0.0 {
        return Ok(vacuous);
    }
    let sv = top.clone().singular_values();
    let smax = sv.max();
    // The rows of `g` are orthonormal, so a symbol this small is numerically
    // absent.
    if smax <= tol {
        return Ok(vacuous);
    }
    let thr = tol * smax;
    let basis = MonomialBasis::new(n, d);
    let classes: Vec<usize> = (start..size)
        .map(|i| basis.get(i).reverse_class().expect("top-degree monomial"))
        .collect();
    let mut betas = vec![0; n];
    let mut prev = 0;
    for k in (1..=n).rev() {
        let cols: Vec<usize> = (0..classes.len()).filter(|&j| classes[j] >= k).collect();
        let r = rank_abs(&top.select_columns(&cols), thr);
        betas[k - 1] = r.saturating_sub(prev);
        prev = r;
    }
    let weighted_sum = betas.iter().enumerate().map(|(i, b)| (i + 1) * b).sum();

    let rk = rank_kernel(&top, tol)?;
    let symbol_rank = rk.rank;
    let basis1 = MonomialBasis::new(n, d + 1);
    let start1 = size;
    let top1 = basis1.len() - start1;
    let sym = rk.rowspace.matrix();
    let mut prolonged = DMatrix::zeros(n * symbol_rank, top1);
    for i in 0..n {
        let xi = Monomial::var(n, i);
        for j in 0..size - start {
            let t = basis1.position(&basis.get(start + j).mul(&xi))? - start1;
            for r in 0..symbol_rank {
                prolonged[(i * symbol_rank + r, t)] = sym[(j, r)];
            }
        }
    }
    let prolonged_rank = rank_kernel(&prolonged, tol)?.rank;
    Ok(SymbolProfile {
        involutive: weighted_sum == prolonged_rank,
        betas,
        weighted_sum,
        symbol_rank,
        prolonged_rank,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordPolicy {
    /// Original coordinates first, a random orthogonal change if that stalls.
    Auto,
    Always,
    Never,
}

impl std::str::FromStr for CoordPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "always" => Ok(Self::Always),
            "never" => Ok(Self::Never),
            _ => Err(Error::Config(format!("unknown coordinate policy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GifConfig {
    pub tol: ToleranceConfig,
    /// Largest number of prolongations attempted.
    pub max_k: u32,
    pub coord: CoordPolicy,
    /// In `auto` mode, switch coordinates when nothing is found by this `k`.
    pub auto_switch_k: u32,
    pub seed: u64,
    pub max_monomials: usize,
}

impl Default for GifConfig {
    fn default() -> Self {
        Self {
            tol: ToleranceConfig::default(),
            max_k: 10,
            coord: CoordPolicy::Auto,
            auto_switch_k: 3,
            seed: 7,
            max_monomials: 20_000,
        }
    }
}

/// One `(k, l)` pair examined by the completion loop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GifStep {
    pub k: u32,
    pub l: u32,
    pub degree: u32,
    pub dim: usize,
    pub dim_next: usize,
    pub involutive_symbol: bool,
    pub preserves_ideal: bool,
}

#[derive(Clone, Debug)]
pub struct GifReport {
    pub output: KernelState,
    pub prolongations: u32,
    pub projections: u32,
    pub steps: Vec<GifStep>,
    /// Orthogonal `T` with `P(T y)` handled when the original coordinates failed.
    pub coordinate_change: Option<DMatrix<f64>>,
}

impl GifReport {
    pub fn candidates_examined(&self) -> usize {
        self.steps.len()
    }
}

/// Whether `pi^l D^k P` passes the dimension test and the Cartan test.
pub fn is_projectively_involutive(p: &PolySystem, k: u32, l: u32, cfg: &GifConfig) -> Result<bool> {
    let dk = prolong(p, k, cfg)?;
    let dk1 = prolong(p, k + 1, cfg)?;
    let tol = cfg.tol.svd_rel_tol;
    let r = project(&dk, l, tol)?;
    let r1 = project(&dk1, l + 1, tol)?;
    Ok(r.dim() == r1.dim() && symbol_profile(&r, tol)?.involutive)
}

/// Smallest `k` for which the symbol of `D^k P` passes the Cartan test.
pub fn cartan_prolongations(p: &PolySystem, max_k: u32, cfg: &GifConfig) -> Result<Option<u32>> {
    for k in 0..=max_k {
        let s = prolong(p, k, cfg)?;
        if symbol_profile(&s, cfg.tol.svd_rel_tol)?.involutive {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn search(p: &PolySystem, max_k: u32, cfg: &GifConfig) -> Result<Option<GifReport>> {
    let tol = cfg.tol.svd_rel_tol;
    let d = p.degree();
    let n = p.nvars();
    let mut steps = Vec::new();
    let mut dk = prolong(p, 0, cfg)?;
    for k in 0..=max_k {
        let dk1 = prolong(p, k + 1, cfg)?;
        let mut best: Option<(u32, KernelState)> = None;
        for l in 0..=d + k {
            let r = project(&dk, l, tol)?;
            let r1 = project(&dk1, l + 1, tol)?;
            let mut step = GifStep {
                k,
                l,
                degree: r.degree,
                dim: r.dim(),
                dim_next: r1.dim(),
                involutive_symbol: false,
                preserves_ideal: false,
            };
            if r.dim() == r1.dim() {
                step.involutive_symbol = symbol_profile(&r, tol)?.involutive;
            }
            if step.involutive_symbol {
                step.preserves_ideal = l == 0 || {
                    let rows = r.rowspace.matrix().transpose();
                    let back = prolong_rows(&rows, n, r.degree, l)?;
                    let st = KernelState::from_rows(n, d + k, &back, tol)?;
                    subspace_contained(&st.kernel, &dk.kernel, cfg.tol.containment_tol)
                };
            }
            if step.involutive_symbol && step.preserves_ideal {
                best = Some((l, r));
            }
            steps.push(step);
        }
        if let Some((l, output)) = best {
            return Ok(Some(GifReport {
                output,
                prolongations: k,
                projections: l,
                steps,
                coordinate_change: None,
            }));
        }
        dk = dk1;
    }
    Ok(None)
}

fn search_rotated(p: &PolySystem, cfg: &GifConfig) -> Result<Option<GifReport>> {
    let n = p.nvars();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = random_orthogonal(n, &mut rng);
    let rotated = apply_coordinate_change(p, &t)?;
    let Some(mut rep) = search(&rotated, cfg.max_k, cfg)? else {
        return Ok(None);
    };
    let back = apply_coordinate_change(&rep.output.generators(), &t.transpose())?;
    let degree = rep.output.degree;
    rep.output = KernelState::from_system(&back, degree, cfg.tol.svd_rel_tol)?;
    rep.coordinate_change = Some(t);
    Ok(Some(rep))
}

/// Completes `P` to a projectively involutive form that generates the same
/// ideal, choosing the lowest-degree candidate.
pub fn gif(p: &PolySystem, cfg: &GifConfig) -> Result<GifReport> {
    if p.is_zero() {
        return Err(Error::ZeroSystem);
    }
    cfg.tol.validate()?;
    let found = match cfg.coord {
        CoordPolicy::Never => search(p, cfg.max_k, cfg)?,
        CoordPolicy::Always => search_rotated(p, cfg)?,
        CoordPolicy::Auto => match search(p, cfg.auto_switch_k.min(cfg.max_k), cfg)? {
            Some(r) => Some(r),
            None => search_rotated(p, cfg)?,
        },
    };
    found.ok_or(Error::NonTermination {
        max_k: cfg.max_k as usize,
    })
}
