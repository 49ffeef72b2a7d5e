use std::collections::HashMap;

use super::Monomial;
use crate::error::{Error, Result};

/// `C(n + d, d)`, the number of monomials in `n` variables of degree at most `d`.
/// Saturates at `u128::MAX`.
pub fn monomial_count(n: usize, d: u32) -> u128 {
    binomial((n as u128) + d as u128, d as u128)
}

fn binomial(top: u128, k: u128) -> u128 {
    if k > top {
        return 0;
    }
    let k = k.min(top - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        // c * (top - k + i) / i stays integral at every step
        c = match c.checked_mul(top - k + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    c
}

/// Number of exponent vectors of length `k` summing to exactly `s`.
fn compositions(s: u32, k: usize) -> u128 {
    if k == 0 {
        return u128::from(s == 0);
    }
    binomial(s as u128 + k as u128 - 1, k as u128 - 1)
}

/// Position of `m` in the ordering used throughout: ascending total degree,
/// lex-descending exponent vectors inside each degree block.
pub fn grevlex_position(m: &Monomial, basis_degree: u32) -> Result<usize> {
    let deg = m.degree();
    if deg > basis_degree {
        return Err(Error::OutOfBasis {
            degree: deg,
            basis_degree,
        });
    }
    let n = m.nvars();
    let mut pos: u128 = if deg == 0 { 0 } else { monomial_count(n, deg - 1) };
    let e = m.exponents();
    let mut rem = deg;
    for i in 0..n.saturating_sub(1) {
        let tail = n - i - 1;
        for v in e[i] + 1..=rem {
            pos += compositions(rem - v, tail);
        }
        rem -= e[i];
    }
    usize::try_from(pos).map_err(|_| Error::MemoryCap {
        size: pos,
        cap: usize::MAX,
    })
}

fn push_block(n: usize, deg: u32, prefix: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if prefix.len() + 1 == n {
        prefix.push(deg);
        out.push(Monomial::new(prefix.clone()));
        prefix.pop();
        return;
    }
    for a in (0..=deg).rev() {
        prefix.push(a);
        push_block(n, deg - a, prefix, out);
        prefix.pop();
    }
}

/// Ordered list of all monomials of degree at most `degree`.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n: usize,
    degree: u32,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, degree: u32) -> Self {
        let mut monomials = Vec::new();
        if n == 0 {
            monomials.push(Monomial::one(0));
        } else {
            for deg in 0..=degree {
                push_block(n, deg, &mut Vec::with_capacity(n), &mut monomials);
            }
        }
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        Self {
            n,
            degree,
            monomials,
            index,
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn get(&self, i: usize) -> &Monomial {
        &self.monomials[i]
    }

    pub fn position(&self, m: &Monomial) -> Result<usize> {
        self.index.get(m).copied().ok_or(Error::OutOfBasis {
            degree: m.degree(),
            basis_degree: self.degree,
        })
    }

    /// Index of the first monomial of degree `deg`.
    pub fn block_start(&self, deg: u32) -> usize {
        if deg == 0 {
            0
        } else {
            monomial_count(self.n, deg - 1) as usize
        }
    }
}
