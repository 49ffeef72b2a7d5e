use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use super::{Monomial, MonomialBasis};
use crate::error::{Error, Result};

/// Sparse real polynomial. Exact zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::term(Monomial::one(n), c)
    }

    pub fn term(m: Monomial, c: f64) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    /// The variable `x_i` with a 0-based index.
    pub fn var(n: usize, i: usize) -> Self {
        Self::term(Monomial::var(n, i), 1.0)
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(n: usize, terms: I) -> Result<Self> {
        let mut p = Self::zero(n);
        for (m, c) in terms {
            if m.nvars() != n {
                return Err(Error::VariableCount {
                    expected: n,
                    got: m.nvars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Builds a polynomial from its coefficient vector in `basis`.
    pub fn from_coefficients(basis: &MonomialBasis, coeffs: &[f64]) -> Self {
        let mut p = Self::zero(basis.nvars());
        for (m, &c) in basis.monomials().iter().zip(coeffs) {
            if c != 0.0 {
                p.terms.insert(m.clone(), c);
            }
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero(self.n);
        for (m, c) in self.terms() {
            p.add_term(m.clone(), c * s);
        }
        p
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(k, &c)| (k.mul(m), c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.n, 1.0);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms().map(|(m, c)| c * m.eval(x)).sum()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max)
    }

    /// Rescales so the coefficient of largest magnitude becomes `+1`.
    pub fn normalized(&self) -> Self {
        let lead = self
            .terms()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(_, c)| c);
        match lead {
            Some(c) => self.scale(1.0 / c),
            None => self.clone(),
        }
    }

    /// Terms ordered for display: highest degree first, basis order inside a block.
    fn display_terms(&self) -> Vec<(&Monomial, f64)> {
        let mut t: Vec<_> = self.terms().collect();
        t.sort_by(|a, b| {
            b.0.degree()
                .cmp(&a.0.degree())
                .then_with(|| b.0.exponents().cmp(a.0.exponents()))
        });
        t
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (m, c) in rhs.terms() {
            p.add_term(m.clone(), c);
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (m, c) in rhs.terms() {
            p.add_term(m.clone(), -c);
        }
        p
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut p = Polynomial::zero(self.n);
        for (a, ca) in self.terms() {
            for (b, cb) in rhs.terms() {
                p.add_term(a.mul(b), ca * cb);
            }
        }
        p
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial { (&self).$f(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

/// Shortest representation that parses back to the same double.
pub(crate) fn format_coefficient(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{c}")
    } else {
        format!("{c:e}")
    }
}

/// Renders a polynomial in the input grammar. Reparsing gives the same
/// coefficients bit for bit.
pub fn format_polynomial(p: &Polynomial) -> String {
    let terms = p.display_terms();
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut s = String::new();
    for (k, (m, c)) in terms.into_iter().enumerate() {
        let neg = c < 0.0;
        match (k, neg) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        let a = c.abs();
        if m.degree() == 0 {
            s.push_str(&format_coefficient(a));
        } else if a == 1.0 {
            s.push_str(&m.to_string());
        } else {
            s.push_str(&format_coefficient(a));
            s.push('*');
            s.push_str(&m.to_string());
        }
    }
    s
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_polynomial(self))
    }
}

/// Finite ordered list of polynomials over the same variables.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    n: usize,
    polys: Vec<Polynomial>,
}

impl PolySystem {
    pub fn new(n: usize, polys: Vec<Polynomial>) -> Result<Self> {
        if let Some(p) = polys.iter().find(|p| p.nvars() != n) {
            return Err(Error::VariableCount {
                expected: n,
                got: p.nvars(),
            });
        }
        Ok(Self { n, polys })
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn into_polys(self) -> Vec<Polynomial> {
        self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Maximum degree over the nonzero members, `0` if there are none.
    pub fn degree(&self) -> u32 {
        self.polys.iter().filter_map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.polys.iter().all(Polynomial::is_zero)
    }

    pub fn push(&mut self, p: Polynomial) -> Result<()> {
        if p.nvars() != self.n {
            return Err(Error::VariableCount {
                expected: self.n,
                got: p.nvars(),
            });
        }
        self.polys.push(p);
        Ok(())
    }
}

/// Row `i` holds the coefficients of the `i`-th polynomial in `basis`.
#[derive(Clone, Debug)]
pub struct CoefficientMatrix {
    pub basis: MonomialBasis,
    pub matrix: DMatrix<f64>,
}

pub fn coefficient_matrix(p: &PolySystem, d: u32) -> Result<CoefficientMatrix> {
    if d < p.degree() {
        return Err(Error::DegreeTooLow {
            requested: d,
            system: p.degree(),
        });
    }
    let basis = MonomialBasis::new(p.nvars(), d);
    let mut matrix = DMatrix::zeros(p.len(), basis.len());
    for (i, poly) in p.polys().iter().enumerate() {
        for (m, c) in poly.terms() {
            matrix[(i, basis.position(m)?)] = c;
        }
    }
    Ok(CoefficientMatrix { basis, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Polynomial {
        Polynomial::var(2, i)
    }

    #[test]
    fn arithmetic_and_degree() {
        let p = &(&x(0) * &x(0)) - &Polynomial::constant(2, 2.0);
        assert_eq!(p.degree(), Some(2));
        let q = &p - &p;
        assert!(q.is_zero());
        assert_eq!(q.degree(), None);
        assert!(p.eval(&[2f64.sqrt(), 0.0]).abs() < 1e-15);
    }

    #[test]
    fn matrix_rows() {
        let p = &(&x(0) * &x(1)) + &x(1).scale(3.0);
        let sys = PolySystem::new(2, vec![p]).unwrap();
        let cm = coefficient_matrix(&sys, 2).unwrap();
        assert_eq!(cm.matrix.shape(), (1, 6));
        assert_eq!(cm.matrix[(0, 2)], 3.0);
        assert_eq!(cm.matrix[(0, 4)], 1.0);
        assert!(matches!(
            coefficient_matrix(&sys, 1),
            Err(Error::DegreeTooLow { .. })
        ));
        let empty = PolySystem::new(2, vec![]).unwrap();
        assert_eq!(coefficient_matrix(&empty, 2).unwrap().matrix.shape(), (0, 6));
    }

    #[test]
    fn formatting() {
        let p = &(&x(0).pow(2).scale(-1.0) + &x(1).scale(2.5)) - &Polynomial::constant(2, 1.0);
        assert_eq!(format_polynomial(&p), "-x1^2 + 2.5*x2 - 1");
        assert_eq!(format_polynomial(&Polynomial::zero(3)), "0");
        assert_eq!(format_coefficient(1e-7), "1e-7");
    }

    #[test]
    fn normalize_sign() {
        let p = &x(0).pow(2) - &Polynomial::constant(2, 2f64.sqrt());
        let q = p.normalized();
        assert_eq!(q.coeff(&Monomial::one(2)), 1.0);
        assert!((q.coeff(&Monomial::new(vec![2, 0])) + 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }
}
