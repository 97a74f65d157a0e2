//! Feed-forward recipe builders.
//!
//! Each builder emits an [`FfnSpec`] whose forward pass realizes its target
//! function exactly on the documented domain, with two exceptions that are
//! approximate by nature: multiplication (cubic error bound) and the
//! comparators (exact outside a declared gray band).

use thiserror::Error;

use crate::la::Mat;
use crate::model::{Activation, FfnSpec};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum FfnBuildError {
    #[error("epsilon must be > 0, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("delta must be > 0, got {0}")]
    NonPositiveDelta(f64),
    #[error("boolean arity {0} outside 1..=16")]
    ArityTooLarge(usize),
    #[error("boolean table length {found} does not match 2^{arity}")]
    TableSizeMismatch { arity: usize, found: usize },
    #[error("knot xs must be strictly increasing")]
    KnotsNotIncreasing,
    #[error("need at least 2 knot points, got {0}")]
    TooFewKnots(usize),
    #[error("cancel-residual requires a square FFN, got {d_in}→{d_out}")]
    NotSquare { d_in: usize, d_out: usize },
    #[error("multiplication requires a GELU activation")]
    MulNeedsGelu,
    #[error("scale constant must be finite")]
    NonFiniteScale,
}

/// `ReLU(x) − ReLU(−x) = x` stacked d times; hidden width 2d.
pub fn build_identity<S: Scalar>(d: usize) -> FfnSpec<S> {
    let id = Mat::identity(d);
    let neg = id.scaled(-S::one());
    FfnSpec::new(
        Mat::vstack(&[&id, &neg]),
        vec![S::zero(); 2 * d],
        Mat::hstack(&[&id, &neg]),
        vec![S::zero(); d],
    )
}

/// The all-zero FFN: with a residual connection, `x + zero(x) = x`.
pub fn build_zero<S: Scalar>(d: usize) -> FfnSpec<S> {
    FfnSpec::new(Mat::zeros(1, d), vec![S::zero()], Mat::zeros(d, 1), vec![S::zero(); d])
}

/// Wraps `f : ℝ^d → ℝ^d` so that `f'(x) + x = f(x)`: the emitted FFN
/// cancels the residual connection it is used with. Hidden width grows by
/// 2d.
pub fn build_cancel_residual<S: Scalar>(f: &FfnSpec<S>) -> Result<FfnSpec<S>, FfnBuildError> {
    let d = f.d_in();
    if f.d_out() != d {
        return Err(FfnBuildError::NotSquare { d_in: d, d_out: f.d_out() });
    }
    let id = Mat::identity(d);
    let neg = id.scaled(-S::one());
    let mut b1 = f.b1.clone();
    b1.extend(std::iter::repeat(S::zero()).take(2 * d));
    Ok(FfnSpec {
        w1: Mat::vstack(&[&f.w1, &id, &neg]),
        b1,
        w2: Mat::hstack(&[&f.w2, &neg, &id]),
        b2: f.b2.clone(),
        activation: f.activation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// Exact min/max of two numbers: `x − ReLU(x−y)` resp. `x + ReLU(y−x)`.
pub fn build_minmax<S: Scalar>(kind: Extremum) -> FfnSpec<S> {
    let one = S::one();
    let (third_row, third_out) = match kind {
        Extremum::Min => (vec![one, -one], -one),
        Extremum::Max => (vec![-one, one], one),
    };
    FfnSpec::new(
        Mat::from_rows(&[vec![one, S::zero()], vec![-one, S::zero()], third_row]).unwrap(),
        vec![S::zero(); 3],
        Mat::row_vec(&[one, -one, third_out]),
        vec![S::zero()],
    )
}

/// Exact `x + y`.
pub fn build_add<S: Scalar>() -> FfnSpec<S> {
    let o = S::one();
    let z = S::zero();
    FfnSpec::new(
        Mat::from_rows(&[vec![o, z], vec![-o, z], vec![z, o], vec![z, -o]]).unwrap(),
        vec![z; 4],
        Mat::row_vec(&[o, -o, o, -o]),
        vec![z],
    )
}

/// Exact `x − y`: addition with the second input routed through −1.
pub fn build_sub<S: Scalar>() -> FfnSpec<S> {
    let o = S::one();
    let z = S::zero();
    FfnSpec::new(
        Mat::from_rows(&[vec![o, z], vec![-o, z], vec![z, -o], vec![z, o]]).unwrap(),
        vec![z; 4],
        Mat::row_vec(&[o, -o, o, -o]),
        vec![z],
    )
}

/// Exact `c·x`: the identity recipe postmultiplied by `c`.
pub fn build_scale<S: Scalar>(c: S) -> Result<FfnSpec<S>, FfnBuildError> {
    if !c.is_finite() {
        return Err(FfnBuildError::NonFiniteScale);
    }
    let mut f = build_identity(1);
    f.w2 = f.w2.scaled(c);
    Ok(f)
}

/// Approximate product via the quadratic part of GELU:
/// √(π/2)·(GELU(x+y) − GELU(x) − GELU(y)) = xy + ε(x,y) with
/// |ε(x,y)| ≤ ¼(|x|+|y|)³.
pub fn build_mul<S: Scalar>(activation: Activation) -> Result<FfnSpec<S>, FfnBuildError> {
    if activation == Activation::Relu {
        return Err(FfnBuildError::MulNeedsGelu);
    }
    let o = S::one();
    let z = S::zero();
    let c = S::of((std::f64::consts::PI / 2.0).sqrt());
    Ok(FfnSpec {
        w1: Mat::from_rows(&[vec![o, o], vec![o, z], vec![z, o]]).unwrap(),
        b1: vec![z; 3],
        w2: Mat::row_vec(&[c, -c, -c]),
        b2: vec![z],
        activation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    /// 0 for x ≤ 0, 1 for x ≥ ε.
    Gt,
    /// 0 for x ≤ −ε, 1 for x ≥ 0.
    Ge,
    /// 1 at x = 0, 0 for |x| ≥ ε.
    Eq,
}

/// Fixed-tolerance comparator against zero. Inputs inside the open gray
/// band of width ε are interpolated linearly and are to be avoided.
pub fn build_comparator<S: Scalar>(kind: Comparator, eps: S) -> Result<FfnSpec<S>, FfnBuildError> {
    build_comparator_shifted(kind, eps, S::zero())
}

/// Comparator applied to `x − shift` (the bias-shifted form used by the
/// first-position predicate and the sharpening rounder).
pub fn build_comparator_shifted<S: Scalar>(
    kind: Comparator,
    eps: S,
    shift: S,
) -> Result<FfnSpec<S>, FfnBuildError> {
    if !(eps > S::zero()) {
        return Err(FfnBuildError::NonPositiveEpsilon(eps.to_f64().unwrap_or(f64::NAN)));
    }
    let o = S::one();
    let inv = o / eps;
    let s = shift;
    Ok(match kind {
        Comparator::Gt => FfnSpec::new(
            Mat::from_rows(&[vec![o], vec![o]]).unwrap(),
            vec![-s, -s - eps],
            Mat::row_vec(&[inv, -inv]),
            vec![S::zero()],
        ),
        Comparator::Ge => FfnSpec::new(
            Mat::from_rows(&[vec![o], vec![o]]).unwrap(),
            vec![eps - s, -s],
            Mat::row_vec(&[inv, -inv]),
            vec![S::zero()],
        ),
        Comparator::Eq => FfnSpec::new(
            Mat::from_rows(&[vec![o], vec![o], vec![o]]).unwrap(),
            vec![eps - s, -s, -eps - s],
            Mat::row_vec(&[inv, -(inv + inv), inv]),
            vec![S::zero()],
        ),
    })
}

/// ε-parameterized comparator taking `(x, ε)` and returning 0 or ε (values
/// ≥ ε count as "true").
pub fn build_comparator_param<S: Scalar>(kind: Comparator) -> FfnSpec<S> {
    let o = S::one();
    let z = S::zero();
    match kind {
        Comparator::Gt => FfnSpec::new(
            Mat::from_rows(&[vec![o, z], vec![o, -o]]).unwrap(),
            vec![z; 2],
            Mat::row_vec(&[o, -o]),
            vec![z],
        ),
        Comparator::Ge => FfnSpec::new(
            Mat::from_rows(&[vec![o, o], vec![o, z]]).unwrap(),
            vec![z; 2],
            Mat::row_vec(&[o, -o]),
            vec![z],
        ),
        Comparator::Eq => FfnSpec::new(
            Mat::from_rows(&[vec![o, o], vec![o, z], vec![o, -o]]).unwrap(),
            vec![z; 3],
            Mat::row_vec(&[o, -(o + o), o]),
            vec![z],
        ),
    }
}

/// Truth table of an m-ary Boolean function. `values[k]` is φ at the
/// assignment whose bits, most significant first, are the variables
/// x₁ … x_m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanTable {
    pub arity: usize,
    pub values: Vec<bool>,
}

impl BooleanTable {
    pub fn new(arity: usize, values: Vec<bool>) -> Result<Self, FfnBuildError> {
        if arity == 0 || arity > 16 {
            return Err(FfnBuildError::ArityTooLarge(arity));
        }
        if values.len() != 1 << arity {
            return Err(FfnBuildError::TableSizeMismatch { arity, found: values.len() });
        }
        Ok(BooleanTable { arity, values })
    }

    pub fn from_fn(arity: usize, phi: impl Fn(&[bool]) -> bool) -> Result<Self, FfnBuildError> {
        if arity == 0 || arity > 16 {
            return Err(FfnBuildError::ArityTooLarge(arity));
        }
        let values = (0..1usize << arity)
            .map(|k| {
                let bits: Vec<bool> = (0..arity).map(|j| (k >> (arity - 1 - j)) & 1 == 1).collect();
                phi(&bits)
            })
            .collect();
        Ok(BooleanTable { arity, values })
    }

    pub fn assignment(&self, k: usize) -> Vec<bool> {
        (0..self.arity).map(|j| (k >> (self.arity - 1 - j)) & 1 == 1).collect()
    }
}

/// Packs an arbitrary Boolean function into one FFN: hidden unit k fires
/// exactly on assignment ξ_k via the ±1 dot-product test, and the output
/// layer sums φ(ξ_k) over the firing unit. Exact on {0,1}^m inputs;
/// hidden width 2^m.
pub fn build_boolean<S: Scalar>(table: &BooleanTable) -> Result<FfnSpec<S>, FfnBuildError> {
    let m = table.arity;
    let rows = 1usize << m;
    let mut w1 = Mat::zeros(rows, m);
    let mut b1 = Vec::with_capacity(rows);
    for k in 0..rows {
        let assignment = table.assignment(k);
        let ones = assignment.iter().filter(|&&b| b).count();
        for (j, &bit) in assignment.iter().enumerate() {
            w1[(k, j)] = if bit { S::one() } else { -S::one() };
        }
        b1.push(S::of(1.0 - ones as f64));
    }
    let w2 = Mat::row_vec(
        &table.values.iter().map(|&v| if v { S::one() } else { S::zero() }).collect::<Vec<_>>(),
    );
    Ok(FfnSpec::new(w1, b1, w2, vec![S::zero()]))
}

/// `if(p, x, y)` for p ∈ {0,1} and x, y ∈ [0,1]:
/// `ReLU(p + x − 1) + ReLU(y − p)`. Inputs outside the contract give
/// unspecified output; compose with [`build_clip`] to enforce bounds.
pub fn build_conditional<S: Scalar>() -> FfnSpec<S> {
    let o = S::one();
    let z = S::zero();
    FfnSpec::new(
        Mat::from_rows(&[vec![o, o, z], vec![-o, z, o]]).unwrap(),
        vec![-o, z],
        Mat::row_vec(&[o, o]),
        vec![z],
    )
}

/// Knot representation of a univariate CPWL function: strictly increasing
/// xs with the first and last points lying inside the two unbounded pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CpwlKnots<S> {
    pub xs: Vec<S>,
    pub ys: Vec<S>,
}

impl<S: Scalar> CpwlKnots<S> {
    pub fn new(xs: Vec<S>, ys: Vec<S>) -> Result<Self, FfnBuildError> {
        if xs.len() < 2 {
            return Err(FfnBuildError::TooFewKnots(xs.len()));
        }
        if xs.len() != ys.len() {
            return Err(FfnBuildError::TableSizeMismatch { arity: xs.len(), found: ys.len() });
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(FfnBuildError::KnotsNotIncreasing);
        }
        Ok(CpwlKnots { xs, ys })
    }

    pub fn pieces(&self) -> usize {
        self.xs.len() - 1
    }

    fn slopes(&self) -> Vec<S> {
        (0..self.pieces())
            .map(|k| (self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]))
            .collect()
    }

    /// Direct piecewise evaluation, used as the independent oracle in
    /// differential tests.
    pub fn eval(&self, x: S) -> S {
        let m = self.slopes();
        let n = self.pieces();
        // Pieces extend to infinity on both ends.
        let k = if x <= self.xs[1] {
            0
        } else {
            (1..n).rev().find(|&k| x >= self.xs[k]).unwrap_or(0)
        };
        self.ys[k] + m[k] * (x - self.xs[k])
    }
}

/// Knot interpolation as one FFN:
/// `f(x) = y₁ + m₁(x−x₁) + Σ_k (m_k − m_{k−1})·ReLU(x − x_k)`;
/// hidden width = pieces + 1.
pub fn build_cpwl<S: Scalar>(knots: &CpwlKnots<S>) -> Result<FfnSpec<S>, FfnBuildError> {
    let n = knots.pieces();
    let m = knots.slopes();
    if m.iter().any(|s| !s.is_finite()) {
        return Err(FfnBuildError::KnotsNotIncreasing);
    }
    let mut w1 = Mat::zeros(n + 1, 1);
    let mut b1 = vec![S::zero(); n + 1];
    let mut w2row = vec![S::zero(); n + 1];
    w1[(0, 0)] = -S::one();
    w2row[0] = -m[0];
    w1[(1, 0)] = S::one();
    w2row[1] = m[0];
    for k in 1..n {
        w1[(k + 1, 0)] = S::one();
        b1[k + 1] = -knots.xs[k];
        w2row[k + 1] = m[k] - m[k - 1];
    }
    let b2 = knots.ys[0] - m[0] * knots.xs[0];
    Ok(FfnSpec::new(w1, b1, Mat::row_vec(&w2row), vec![b2]))
}

/// Clips to ±δ: `ReLU(x+δ) − ReLU(x−δ) − δ`.
pub fn build_clip<S: Scalar>(delta: S) -> Result<FfnSpec<S>, FfnBuildError> {
    if !(delta > S::zero()) {
        return Err(FfnBuildError::NonPositiveDelta(delta.to_f64().unwrap_or(f64::NAN)));
    }
    let o = S::one();
    Ok(FfnSpec::new(
        Mat::from_rows(&[vec![o], vec![o]]).unwrap(),
        vec![delta, -delta],
        Mat::row_vec(&[o, -o]),
        vec![-delta],
    ))
}
