//! Positional-encoding generators.
//!
//! Encodings are declared as channels: a kind plus the stream offset the
//! values are added at. Bounded kinds (one-hot, almost-orthogonal) carry a
//! maximum length `N` and reject positions beyond it, surfacing the
//! uniform/nonuniform distinction as data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PosEncKind {
    /// Width 0; a placeholder carrying no positional signal.
    None,
    /// 1/i.
    InversePosition,
    /// i/n.
    LengthRatio,
    /// Listed powers of i, e.g. `[1, 2]` for (i, i²).
    RawPowers { exponents: Vec<u32> },
    /// (−1)^i.
    Alternating,
    /// Interleaved cos/sin pairs with the given base.
    Sinusoidal { base: f64, dim: usize },
    /// e_i up to a maximum length.
    OneHot { max_len: usize },
    /// Seeded sample from {±1/√dim}^dim, one vector per position up to
    /// `max_len`. The stored seed reproduces the family exactly.
    AlmostOrthogonal { max_len: usize, dim: usize, seed: u64 },
    /// Constant 1 (a bias channel).
    ConstantOne,
}

impl PosEncKind {
    pub fn width(&self) -> usize {
        match self {
            PosEncKind::None => 0,
            PosEncKind::InversePosition
            | PosEncKind::LengthRatio
            | PosEncKind::Alternating
            | PosEncKind::ConstantOne => 1,
            PosEncKind::RawPowers { exponents } => exponents.len(),
            PosEncKind::Sinusoidal { dim, .. } => *dim,
            PosEncKind::OneHot { max_len } => *max_len,
            PosEncKind::AlmostOrthogonal { dim, .. } => *dim,
        }
    }

    pub fn max_len(&self) -> Option<usize> {
        match self {
            PosEncKind::OneHot { max_len } | PosEncKind::AlmostOrthogonal { max_len, .. } => {
                Some(*max_len)
            }
            _ => None,
        }
    }
}

/// A positional-encoding channel: where in the stream the kind's values
/// land.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosEncChannel {
    #[serde(flatten)]
    pub kind: PosEncKind,
    pub offset: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PosEncError {
    #[error("position {i} outside 1..={n}")]
    PositionOutOfRange { i: usize, n: usize },
    #[error("length {n} exceeds maximum {max} for bounded encoding")]
    LengthBound { n: usize, max: usize },
    #[error("sinusoidal dimension {0} must be even and ≥ 2")]
    OddSinusoidalDim(usize),
}

/// The encoding vector for position `i` of a length-`n` sequence
/// (1-based, `1 ≤ i ≤ n`).
pub fn positional_encoding<S: Scalar>(
    kind: &PosEncKind,
    n: usize,
    i: usize,
) -> Result<Vec<S>, PosEncError> {
    if i < 1 || i > n {
        return Err(PosEncError::PositionOutOfRange { i, n });
    }
    if let Some(max) = kind.max_len() {
        if n > max {
            return Err(PosEncError::LengthBound { n, max });
        }
    }
    Ok(match kind {
        PosEncKind::None => Vec::new(),
        PosEncKind::InversePosition => vec![S::one() / S::of(i as f64)],
        PosEncKind::LengthRatio => vec![S::of(i as f64) / S::of(n as f64)],
        PosEncKind::RawPowers { exponents } => exponents
            .iter()
            .map(|&e| S::of((i as f64).powi(e as i32)))
            .collect(),
        PosEncKind::Alternating => vec![if i % 2 == 0 { S::one() } else { -S::one() }],
        PosEncKind::Sinusoidal { base, dim } => {
            if dim % 2 != 0 || *dim == 0 {
                return Err(PosEncError::OddSinusoidalDim(*dim));
            }
            sinusoidal(*base, *dim, i)
        }
        PosEncKind::OneHot { max_len } => {
            let mut v = vec![S::zero(); *max_len];
            v[i - 1] = S::one();
            v
        }
        PosEncKind::AlmostOrthogonal { max_len, dim, seed } => {
            let fam = ao_vectors::<S>(*max_len, *dim, *seed);
            fam[i - 1].clone()
        }
        PosEncKind::ConstantOne => vec![S::one()],
    })
}

/// The full `n × width` table for a kind; generates seeded families once.
pub fn pos_matrix<S: Scalar>(kind: &PosEncKind, n: usize) -> Result<Vec<Vec<S>>, PosEncError> {
    if let Some(max) = kind.max_len() {
        if n > max {
            return Err(PosEncError::LengthBound { n, max });
        }
    }
    if let PosEncKind::AlmostOrthogonal { max_len, dim, seed } = kind {
        let mut fam = ao_vectors::<S>(*max_len, *dim, *seed);
        fam.truncate(n);
        return Ok(fam);
    }
    (1..=n).map(|i| positional_encoding(kind, n, i)).collect()
}

/// Interleaved sinusoidal encoding: entry `2c` is cos(i / base^{2c/dim}),
/// entry `2c+1` is sin of the same angle. Exposed with `i ≥ 0` so the raw
/// formula can be checked directly.
pub fn sinusoidal<S: Scalar>(base: f64, dim: usize, i: usize) -> Vec<S> {
    let mut v = Vec::with_capacity(dim);
    for c in 0..dim / 2 {
        let angle = i as f64 / base.powf(2.0 * c as f64 / dim as f64);
        v.push(S::of(angle.cos()));
        v.push(S::of(angle.sin()));
    }
    v
}

/// Deterministic sample of `count` vectors from {±1/√dim}^dim. This is the
/// raw generator; verification against the almost-orthogonality bounds (and
/// reseeding on failure) lives with the attention recipes.
pub fn ao_vectors<S: Scalar>(count: usize, dim: usize, seed: u64) -> Vec<Vec<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = S::one() / S::of((dim as f64).sqrt());
    (0..count)
        .map(|_| (0..dim).map(|_| if rng.gen::<bool>() { unit } else { -unit }).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_at_three() {
        let v: Vec<f64> = positional_encoding(&PosEncKind::Alternating, 5, 3).unwrap();
        assert_eq!(v, vec![-1.0]);
    }

    #[test]
    fn length_ratio_half() {
        let v: Vec<f64> = positional_encoding(&PosEncKind::LengthRatio, 4, 2).unwrap();
        assert_eq!(v, vec![0.5]);
    }

    #[test]
    fn sinusoidal_at_zero_is_cos_sin() {
        let v: Vec<f64> = sinusoidal(10000.0, 2, 0);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn one_hot_bound_enforced() {
        let r: Result<Vec<f64>, _> = positional_encoding(&PosEncKind::OneHot { max_len: 4 }, 5, 2);
        assert_eq!(r.unwrap_err(), PosEncError::LengthBound { n: 5, max: 4 });
    }

    #[test]
    fn ao_vectors_deterministic() {
        let a: Vec<Vec<f64>> = ao_vectors(4, 16, 7);
        let b: Vec<Vec<f64>> = ao_vectors(4, 16, 7);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|x| x.abs() == 0.25));
    }

    #[test]
    fn raw_powers() {
        let v: Vec<f64> =
            positional_encoding(&PosEncKind::RawPowers { exponents: vec![1, 2] }, 8, 3).unwrap();
        assert_eq!(v, vec![3.0, 9.0]);
    }
}
