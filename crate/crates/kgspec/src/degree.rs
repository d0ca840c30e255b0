//! Degrees in N^k: componentwise order, join, and arithmetic.

use std::fmt;
use std::ops::{Add, Index};

/// An element of N^k, the degree of a path in a k-graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Degree(Vec<usize>);

impl Degree {
    pub fn new(entries: Vec<usize>) -> Self {
        Degree(entries)
    }

    /// The zero degree of rank k.
    pub fn zero(rank: usize) -> Self {
        Degree(vec![0; rank])
    }

    /// The standard basis vector e_i (colors are 1-based).
    pub fn unit(rank: usize, color: usize) -> Self {
        debug_assert!(color >= 1 && color <= rank);
        let mut v = vec![0; rank];
        v[color - 1] = 1;
        Degree(v)
    }

    /// The square degree (s, ..., s).
    pub fn square(rank: usize, s: usize) -> Self {
        Degree(vec![s; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &Degree) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise maximum m ∨ n.
    pub fn join(&self, other: &Degree) -> Degree {
        Degree(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        )
    }

    /// Componentwise difference; requires other ≤ self.
    pub fn sub(&self, other: &Degree) -> Degree {
        debug_assert!(other.le(self));
        Degree(self.0.iter().zip(&other.0).map(|(&a, &b)| a - b).collect())
    }

    /// Componentwise difference truncated at zero.
    pub fn saturating_sub(&self, other: &Degree) -> Degree {
        Degree(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.saturating_sub(b))
                .collect(),
        )
    }

    pub fn scale(&self, s: usize) -> Degree {
        Degree(self.0.iter().map(|&a| a * s).collect())
    }

    pub fn max_entry(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn min_entry(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }
}

impl Add<&Degree> for &Degree {
    type Output = Degree;
    fn add(self, rhs: &Degree) -> Degree {
        Degree(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl Index<usize> for Degree {
    type Output = usize;
    /// 0-based component access.
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

impl fmt::Debug for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strs: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", strs.join(","))
    }
}
