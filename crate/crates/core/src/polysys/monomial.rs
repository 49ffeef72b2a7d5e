use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponent vector `x1^a1 ... xn^an`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Self { exps }
    }

    pub fn one(n: usize) -> Self {
        Self { exps: vec![0; n] }
    }

    /// The monomial `x_i` (0-based index).
    pub fn var(n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        Self { exps }
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Smallest 1-based index of a variable present in the monomial.
    /// `None` for the constant monomial.
    pub fn class(&self) -> Option<usize> {
        self.exps.iter().position(|&a| a != 0).map(|i| i + 1)
    }

    /// Class counted from the last variable: `n + 1 - max{j : a_j != 0}`.
    /// This is the ordering that agrees with grevlex and is the one the
    /// Cartan test uses.
    pub fn reverse_class(&self) -> Option<usize> {
        let n = self.exps.len();
        self.exps.iter().rposition(|&a| a != 0).map(|j| n - j)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.nvars(), other.nvars());
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &a) in self.exps.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if a == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, a)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}
