#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use realrad::numlin::rank_kernel;
use realrad::polysys::{coefficient_matrix, parse_system, PolySystem, Polynomial};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn load(name: &str) -> PolySystem {
    let text = std::fs::read_to_string(data_path(name)).expect("data file");
    parse_system(&text).expect("parse data file")
}

pub fn poly(n: usize, text: &str) -> Polynomial {
    let sys = parse_system(&format!("vars: {n}\n{text}")).unwrap();
    sys.polys()[0].clone()
}

pub fn system(n: usize, lines: &[&str]) -> PolySystem {
    parse_system(&format!("vars: {n}\n{}", lines.join("\n"))).unwrap()
}

/// Distance of the normalised coefficient vector of `target` from the span of
/// the coefficient rows of `gens`, both taken at degree `d`.
pub fn span_distance(gens: &PolySystem, target: &Polynomial, d: u32) -> f64 {
    let n = gens.nvars();
    let t = PolySystem::new(n, vec![target.clone()]).unwrap();
    let tv = coefficient_matrix(&t, d).unwrap().matrix.row(0).transpose();
    let tv = &tv / tv.norm();
    if gens.is_empty() {
        return tv.norm();
    }
    let g = coefficient_matrix(gens, d).unwrap().matrix;
    let rs = rank_kernel(&g, 1e-10).unwrap().rowspace;
    (&tv - rs.project(&tv)).norm()
}

/// Largest coefficient difference after normalising both polynomials.
pub fn normalized_error(a: &Polynomial, b: &Polynomial) -> f64 {
    let a = a.normalized();
    let b = b.normalized();
    let diff = &a - &b;
    diff.max_abs_coeff()
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_symmetric<R: Rng>(side: usize, rng: &mut R) -> DMatrix<f64> {
    let a = random_matrix(side, side, rng);
    (&a + a.transpose()) * 0.5
}

pub fn random_vector<R: Rng>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-1.0..1.0))
}

/// Cyclic Jacobi eigendecomposition, independent of the library's eigensolver.
pub fn jacobi_eigen(s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = s.nrows();
    let mut a = s.clone();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    (DVector::from_fn(n, |i, _| a[(i, i)]), v)
}

/// Negative eigenvalues zeroed, assembled from the Jacobi decomposition.
pub fn brute_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let (l, v) = jacobi_eigen(s);
    let n = s.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        if l[k] > 0.0 {
            let c = v.column(k);
            out += l[k] * c * c.transpose();
        }
    }
    out
}
