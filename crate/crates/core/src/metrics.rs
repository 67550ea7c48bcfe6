//! Distance functions between equal-dimension non-negative sparse vectors.
//!
//! Cosine is the primary metric; Euclidean, Manhattan, Chebyshev, Canberra
//! and Hamming are available for comparison. All accumulation is done in
//! f64.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::SparseVector;

/// The supported distance functions. Selected by the exact lowercase name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cosine,
    Euclidean,
    Manhattan,
    Chebyshev,
    Canberra,
    Hamming,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Cosine,
        Metric::Euclidean,
        Metric::Manhattan,
        Metric::Chebyshev,
        Metric::Canberra,
        Metric::Hamming,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Chebyshev => "chebyshev",
            Metric::Canberra => "canberra",
            Metric::Hamming => "hamming",
        }
    }

    /// Computes this metric's distance between `a` and `b`.
    pub fn distance(self, a: &SparseVector, b: &SparseVector) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        match self {
            Metric::Cosine => cosine_distance_checked(a, b),
            Metric::Euclidean => Ok(merge_fold(a, b, 0.0, |acc, x, y| {
                let d = x - y;
                acc + d * d
            })
            .sqrt()),
            Metric::Manhattan => Ok(merge_fold(a, b, 0.0, |acc, x, y| acc + (x - y).abs())),
            Metric::Chebyshev => Ok(merge_fold(a, b, 0.0, |acc, x, y| acc.max((x - y).abs()))),
            Metric::Canberra => Ok(merge_fold(a, b, 0.0, |acc, x, y| {
                // Coordinates where both sides are 0 never reach this fold;
                // the 0/0 term is 0 by convention.
                acc + (x - y).abs() / (x.abs() + y.abs())
            })),
            Metric::Hamming => Ok(merge_fold(a, b, 0.0, |acc, x, y| {
                if x == y {
                    acc
                } else {
                    acc + 1.0
                }
            })),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "chebyshev" => Ok(Metric::Chebyshev),
            "canberra" => Ok(Metric::Canberra),
            "hamming" => Ok(Metric::Hamming),
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }
}

/// Folds over the union of stored coordinates of two equal-dimension sparse
/// vectors in ascending index order; absent coordinates enter as 0.
fn merge_fold<F>(a: &SparseVector, b: &SparseVector, init: f64, mut f: F) -> f64
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let (xs, ys) = (a.entries(), b.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = init;
    while i < xs.len() && j < ys.len() {
        let (xi, xv) = xs[i];
        let (yj, yv) = ys[j];
        acc = match xi.cmp(&yj) {
            std::cmp::Ordering::Less => {
                i += 1;
                f(acc, xv, 0.0)
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                f(acc, 0.0, yv)
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                f(acc, xv, yv)
            }
        };
    }
    while i < xs.len() {
        acc = f(acc, xs[i].1, 0.0);
        i += 1;
    }
    while j < ys.len() {
        acc = f(acc, 0.0, ys[j].1);
        j += 1;
    }
    acc
}

fn cosine_distance_checked(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mut dot = 0.0;
    {
        let (xs, ys) = (a.entries(), b.entries());
        let (mut i, mut j) = (0, 0);
        while i < xs.len() && j < ys.len() {
            match xs[i].0.cmp(&ys[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += xs[i].1 * ys[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    let norm2_a: f64 = a.entries().iter().map(|&(_, v)| v * v).sum();
    let norm2_b: f64 = b.entries().iter().map(|&(_, v)| v * v).sum();
    // One sqrt over the product, not a product of sqrts: identical vectors
    // then divide dot by sqrt(dot * dot) == dot and report exactly 0.
    // Non-negative inputs keep cos in [0, 1]; clamp any rounding spill.
    Ok((1.0 - dot / (norm2_a * norm2_b).sqrt()).max(0.0))
}

/// Cosine distance, `1 - cos(angle)`, in [0, 1] for non-negative vectors.
pub fn cosine_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    Metric::Cosine.distance(a, b)
}

pub fn euclidean_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    Metric::Euclidean.distance(a, b)
}

pub fn manhattan_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    Metric::Manhattan.distance(a, b)
}

pub fn chebyshev_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    Metric::Chebyshev.distance(a, b)
}

pub fn canberra_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    Metric::Canberra.distance(a, b)
}

/// Number of coordinates whose stored values differ, compared exactly.
pub fn hamming_distance(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    Metric::Hamming.distance(a, b)
}
