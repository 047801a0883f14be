//! Strong typicality of sequence pairs.
//!
//! Sequences are slices of symbol indices. For multi-user inputs the `x`
//! sequence carries the flattened product symbol of every position, so one
//! code path serves both single and multiple access channels.

use num_bigint::BigInt;
use num_rational::BigRational;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::channel::MacChannel;
use crate::error::{Error, Result};
use crate::infotheory::JointPmf;

/// Exact joint type of a pair of sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalJoint {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalJoint {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.cols + y]
    }

    pub fn row_count(&self, x: usize) -> u64 {
        self.counts[x * self.cols..(x + 1) * self.cols].iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn frequencies(&self) -> Result<JointPmf> {
        let n = self.n as f64;
        JointPmf::new(self.rows, self.cols, self.counts.iter().map(|c| *c as f64 / n).collect())
    }

    pub fn rational_frequencies(&self) -> Vec<BigRational> {
        let n = BigInt::from(self.n);
        self.counts.iter().map(|c| BigRational::new(BigInt::from(*c), n.clone())).collect()
    }
}

/// Counts each `(x_i, y_i)` over alphabets of sizes `rows × cols`.
pub fn empirical_joint(xs: &[usize], ys: &[usize], rows: usize, cols: usize) -> Result<EmpiricalJoint> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.is_empty() {
        return Err(Error::InvalidParameter("empty sequences have no type".into()));
    }
    let mut counts = vec![0u64; rows * cols];
    for (&x, &y) in xs.iter().zip(ys) {
        if x >= rows {
            return Err(Error::SymbolOutOfRange { symbol: x, alphabet: rows });
        }
        if y >= cols {
            return Err(Error::SymbolOutOfRange { symbol: y, alphabet: cols });
        }
        counts[x * cols + y] += 1;
    }
    Ok(EmpiricalJoint { rows, cols, counts, n: xs.len() as u64 })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("typicality tolerance {eps} must be positive")))
    }
}

/// Joint type within `eps` of `q` in every cell, with no mass on `q`-null cells.
pub fn type_is_typical(t: &EmpiricalJoint, q: &JointPmf, eps: f64) -> Result<bool> {
    check_eps(eps)?;
    if t.rows != q.rows() || t.cols != q.cols() {
        return Err(Error::DimensionMismatch { expected: q.rows() * q.cols(), found: t.rows * t.cols });
    }
    let n = t.n as f64;
    // compared on the count scale so that integral boundaries stay exact
    Ok(t.counts.iter().zip(q.probs()).all(|(&c, &p)| {
        if p == 0.0 {
            c == 0
        } else {
            (c as f64 - n * p).abs() <= n * eps
        }
    }))
}

/// Membership of `(xs, ys)` in the jointly typical set of `q`.
pub fn jointly_typical(xs: &[usize], ys: &[usize], q: &JointPmf, eps: f64) -> Result<bool> {
    let t = empirical_joint(xs, ys, q.rows(), q.cols())?;
    type_is_typical(&t, q, eps)
}

/// Exact-arithmetic variant for rational `q` (row-major) and tolerance.
pub fn jointly_typical_exact(t: &EmpiricalJoint, q: &[BigRational], eps: &BigRational) -> Result<bool> {
    if q.len() != t.counts.len() {
        return Err(Error::DimensionMismatch { expected: q.len(), found: t.counts.len() });
    }
    if *eps <= BigRational::from_integer(0.into()) {
        return Err(Error::InvalidParameter("typicality tolerance must be positive".into()));
    }
    let zero = BigRational::from_integer(0.into());
    Ok(t.rational_frequencies().iter().zip(q).all(|(f, p)| {
        if *p == zero {
            *f == zero
        } else {
            let d = f - p;
            (if d < zero { -d } else { d }) <= *eps
        }
    }))
}

/// Membership of `ys` in the conditionally typical set of `xs` under `w`:
/// every cell satisfies `|N(x,y) - W(y|x) N(x)| ≤ n eps` and `W`-null
/// transitions never occur.
pub fn conditionally_typical(ys: &[usize], xs: &[usize], w: &MacChannel, eps: f64) -> Result<bool> {
    check_eps(eps)?;
    let flat = w.flat();
    let t = empirical_joint(xs, ys, flat.input_size(), flat.output_size())?;
    let n = t.n as f64;
    for x in 0..t.rows {
        let nx = t.row_count(x) as f64;
        for y in 0..t.cols {
            let c = t.count(x, y);
            let p = flat.get(x, y);
            if p == 0.0 {
                if c > 0 {
                    return Ok(false);
                }
            } else if (c as f64 - p * nx).abs() > n * eps {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Vanishing tolerance schedule `eps(n) = c · n^(-1/3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsSchedule {
    pub c: f64,
}

impl EpsSchedule {
    pub fn at(&self, n: usize) -> f64 {
        self.c * (n as f64).powf(-1.0 / 3.0)
    }

    /// Chooses `c` so that an i.i.d. pair of length `n` drawn from `q` fails
    /// the joint test with probability about `delta` at most: a two-sided
    /// normal tail per non-null cell, Bonferroni over the cells.
    pub fn calibrate(q: &JointPmf, n: usize, delta: f64) -> Result<Self> {
        if n == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("cannot calibrate with n = {n}, delta = {delta}")));
        }
        let cells = q.probs().iter().filter(|p| **p > 0.0).count().max(1);
        let z = Normal::standard().inverse_cdf(1.0 - delta / (2.0 * cells as f64));
        let spread = q.probs().iter().map(|p| (p * (1.0 - p)).sqrt()).fold(0.0, f64::max);
        let eps = z * spread / (n as f64).sqrt();
        Ok(EpsSchedule { c: eps * (n as f64).cbrt() })
    }
}
