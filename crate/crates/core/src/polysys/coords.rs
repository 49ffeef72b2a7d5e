use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{PolySystem, Polynomial};
use crate::error::{Error, Result};

const MAX_CONDITION: f64 = 1e8;

/// Substitutes `x -> T x`, i.e. returns `p(T x)` for every member.
pub fn apply_coordinate_change(p: &PolySystem, t: &DMatrix<f64>) -> Result<PolySystem> {
    let n = p.nvars();
    if t.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "coordinate change is {}x{}, system has {n} variables",
            t.nrows(),
            t.ncols()
        )));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coordinate change"));
    }
    let sv = t.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularTransform { condition });
    }

    let forms: Vec<Polynomial> = (0..n)
        .map(|i| {
            let mut l = Polynomial::zero(n);
            for j in 0..n {
                l = &l + &Polynomial::var(n, j).scale(t[(i, j)]);
            }
            l
        })
        .collect();
    let deg = p.degree() as usize;
    let powers: Vec<Vec<Polynomial>> = forms
        .iter()
        .map(|l| {
            let mut v = vec![Polynomial::constant(n, 1.0)];
            for k in 0..deg {
                let next = &v[k] * l;
                v.push(next);
            }
            v
        })
        .collect();

    let polys = p
        .polys()
        .iter()
        .map(|poly| {
            let mut out = Polynomial::zero(n);
            for (m, c) in poly.terms() {
                let mut prod = Polynomial::constant(n, c);
                for (i, &a) in m.exponents().iter().enumerate() {
                    if a > 0 {
                        prod = &prod * &powers[i][a as usize];
                    }
                }
                out = &out + &prod;
            }
            out
        })
        .collect();
    PolySystem::new(n, polys)
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
