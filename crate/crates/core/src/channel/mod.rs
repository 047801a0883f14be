//! Discrete memoryless channels: point-to-point, multiple-access and
//! broadcast, with sampling and the non-redundancy analysis.
//!
//! Product alphabets are flattened lexicographically with the first
//! coordinate varying slowest: for input sizes `(k_1, …, k_L)` the tuple
//! `(x_1, …, x_L)` sits at row `Σ_ℓ x_ℓ · Π_{j>ℓ} k_j`. Broadcast outputs are
//! flattened the same way.

mod file;
mod redundancy;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::infotheory::{JointPmf, Pmf, PMF_TOLERANCE};

pub use file::{ChannelFile, ChannelKind};
pub use redundancy::{
    injectivity_check, mac_non_redundancy, non_redundancy_check, prop2_consistency, RedundancyReport,
    RedundancyWitness, LP_TOLERANCE, REDUNDANCY_THRESHOLD, SINGULAR_VALUE_THRESHOLD,
};

/// Row-stochastic transition matrix `W(y|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    input_size: usize,
    output_size: usize,
    rows: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let input_size = rows.len();
        let output_size = rows.first().map_or(0, Vec::len);
        if input_size == 0 || output_size == 0 {
            return Err(Error::InvalidDistribution("channel needs at least one input and one output".into()));
        }
        let mut flat = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch { expected: output_size, found: row.len() });
            }
            let row = Pmf::new(row).map_err(|e| Error::InvalidDistribution(format!("row {x}: {e}")))?;
            flat.extend_from_slice(row.probs());
        }
        Ok(Dmc { input_size, output_size, rows: flat, exact: None })
    }

    /// Exact channel; each row must sum to exactly one.
    pub fn from_rationals(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let input_size = rows.len();
        let output_size = rows.first().map_or(0, Vec::len);
        if input_size == 0 || output_size == 0 {
            return Err(Error::InvalidDistribution("channel needs at least one input and one output".into()));
        }
        let mut exact = Vec::with_capacity(input_size * output_size);
        for (x, row) in rows.into_iter().enumerate() {
            if row.len() != output_size {
                return Err(Error::DimensionMismatch { expected: output_size, found: row.len() });
            }
            if row.iter().any(|v| *v < BigRational::zero()) {
                return Err(Error::InvalidDistribution(format!("row {x} has a negative entry")));
            }
            let total: BigRational = row.iter().sum();
            if !total.is_one() {
                return Err(Error::InvalidDistribution(format!("row {x} sums to {total}, not 1")));
            }
            exact.extend(row);
        }
        let rows = exact.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(Dmc { input_size, output_size, rows, exact: Some(exact) })
    }

    pub fn identity(size: usize) -> Result<Self> {
        Dmc::new((0..size).map(|x| (0..size).map(|y| if x == y { 1.0 } else { 0.0 }).collect()).collect())
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.output_size..(x + 1) * self.output_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.output_size)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.output_size + y]
    }

    pub fn exact_rows(&self) -> Option<Vec<&[BigRational]>> {
        self.exact.as_ref().map(|e| e.chunks(self.output_size).collect())
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `W ∘ p = Σ_x p(x) W_x`.
    pub fn push_forward(&self, p: &Pmf) -> Result<Pmf> {
        if p.len() != self.input_size {
            return Err(Error::DimensionMismatch { expected: self.input_size, found: p.len() });
        }
        Pmf::new(self.mix_rows(p.probs()))
    }

    pub(crate) fn mix_rows(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_size];
        for (w, row) in weights.iter().zip(self.rows()) {
            if *w != 0.0 {
                for (o, r) in out.iter_mut().zip(row) {
                    *o += w * r;
                }
            }
        }
        out
    }

    /// `p(x) W(y|x)` as a joint over inputs × outputs.
    pub fn joint(&self, p: &Pmf) -> Result<JointPmf> {
        if p.len() != self.input_size {
            return Err(Error::DimensionMismatch { expected: self.input_size, found: p.len() });
        }
        let probs = self
            .rows()
            .zip(p.probs())
            .flat_map(|(row, px)| row.iter().map(move |w| px * w))
            .collect();
        JointPmf::new(self.input_size, self.output_size, probs)
    }

    /// One memoryless channel use.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Result<usize> {
        if x >= self.input_size {
            return Err(Error::SymbolOutOfRange { symbol: x, alphabet: self.input_size });
        }
        Ok(sample_index(self.row(x), rng))
    }

    pub fn sample_sequence<R: Rng + ?Sized>(&self, xs: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        xs.iter().map(|x| self.sample(*x, rng)).collect()
    }
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Multiple-access channel with `L` inputs, stored as a point-to-point
/// channel over the flattened product input alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MacChannel {
    input_sizes: Vec<usize>,
    flat: Dmc,
}

impl MacChannel {
    pub fn new(input_sizes: Vec<usize>, flat: Dmc) -> Result<Self> {
        if input_sizes.is_empty() || input_sizes.len() > 16 || input_sizes.contains(&0) {
            return Err(Error::InvalidParameter("a MAC needs between 1 and 16 nonempty inputs".into()));
        }
        let product: usize = input_sizes.iter().product();
        if product != flat.input_size() {
            return Err(Error::DimensionMismatch { expected: product, found: flat.input_size() });
        }
        Ok(MacChannel { input_sizes, flat })
    }

    pub fn users(&self) -> usize {
        self.input_sizes.len()
    }

    pub fn input_sizes(&self) -> &[usize] {
        &self.input_sizes
    }

    pub fn output_size(&self) -> usize {
        self.flat.output_size()
    }

    pub fn flat(&self) -> &Dmc {
        &self.flat
    }

    pub fn product_size(&self) -> usize {
        self.flat.input_size()
    }

    pub fn index_of(&self, symbols: &[usize]) -> Result<usize> {
        flatten_index(&self.input_sizes, symbols)
    }

    pub fn symbols_of(&self, index: usize) -> Vec<usize> {
        unflatten_index(&self.input_sizes, index)
    }

    /// Symbol of user `user` inside the flattened tuple `index`.
    pub fn user_symbol(&self, index: usize, user: usize) -> usize {
        let stride: usize = self.input_sizes[user + 1..].iter().product();
        index / stride % self.input_sizes[user]
    }
}

pub(crate) fn flatten_index(sizes: &[usize], symbols: &[usize]) -> Result<usize> {
    if symbols.len() != sizes.len() {
        return Err(Error::DimensionMismatch { expected: sizes.len(), found: symbols.len() });
    }
    let mut idx = 0;
    for (s, k) in symbols.iter().zip(sizes) {
        if s >= k {
            return Err(Error::SymbolOutOfRange { symbol: *s, alphabet: *k });
        }
        idx = idx * k + s;
    }
    Ok(idx)
}

pub(crate) fn unflatten_index(sizes: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, k) in out.iter_mut().zip(sizes).rev() {
        *slot = index % k;
        index /= k;
    }
    out
}

/// Broadcast channel `p(y_1, …, y_B | x)`; the joint output is flattened
/// with `y_1` slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastChannel {
    output_sizes: Vec<usize>,
    flat: Dmc,
}

impl BroadcastChannel {
    pub fn new(output_sizes: Vec<usize>, flat: Dmc) -> Result<Self> {
        if output_sizes.is_empty() || output_sizes.contains(&0) {
            return Err(Error::InvalidParameter("a broadcast channel needs at least one nonempty output".into()));
        }
        let product: usize = output_sizes.iter().product();
        if product != flat.output_size() {
            return Err(Error::DimensionMismatch { expected: product, found: flat.output_size() });
        }
        Ok(BroadcastChannel { output_sizes, flat })
    }

    /// Conditionally independent outputs, one per component channel.
    pub fn product(components: &[Dmc]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("no component channels".into()))?;
        let input_size = first.input_size();
        if let Some(c) = components.iter().find(|c| c.input_size() != input_size) {
            return Err(Error::DimensionMismatch { expected: input_size, found: c.input_size() });
        }
        let output_sizes: Vec<usize> = components.iter().map(Dmc::output_size).collect();
        let total: usize = output_sizes.iter().product();
        let outputs: Vec<Vec<usize>> = (0..total).map(|y| unflatten_index(&output_sizes, y)).collect();
        let flat = if components.iter().all(Dmc::is_exact) {
            // exact components give an exact product
            let exact: Vec<Vec<&[BigRational]>> = components.iter().map(|c| c.exact_rows().expect("exact")).collect();
            let rows = (0..input_size)
                .map(|x| {
                    outputs
                        .iter()
                        .map(|ys| ys.iter().zip(&exact).fold(BigRational::one(), |acc, (yb, rows)| acc * &rows[x][*yb]))
                        .collect()
                })
                .collect();
            Dmc::from_rationals(rows)?
        } else {
            let rows = (0..input_size)
                .map(|x| outputs.iter().map(|ys| ys.iter().zip(components).map(|(yb, c)| c.get(x, *yb)).product()).collect())
                .collect();
            Dmc::new(rows)?
        };
        BroadcastChannel::new(output_sizes, flat)
    }

    pub fn input_size(&self) -> usize {
        self.flat.input_size()
    }

    pub fn receivers(&self) -> usize {
        self.output_sizes.len()
    }

    pub fn output_sizes(&self) -> &[usize] {
        &self.output_sizes
    }

    pub fn flat(&self) -> &Dmc {
        &self.flat
    }

    /// Splits a flattened joint output into per-receiver symbols.
    pub fn split_output(&self, y: usize) -> Vec<usize> {
        unflatten_index(&self.output_sizes, y)
    }

    /// `W^{(b)} = p(y_b | x)` for a zero-based receiver index.
    pub fn marginal(&self, b: usize) -> Result<Dmc> {
        if b >= self.receivers() {
            return Err(Error::IndexOutOfRange { index: b, len: self.receivers() });
        }
        let size_b = self.output_sizes[b];
        let mut rows = vec![vec![0.0; size_b]; self.input_size()];
        for (x, row) in rows.iter_mut().enumerate() {
            for y in 0..self.flat.output_size() {
                row[self.split_output(y)[b]] += self.flat.get(x, y);
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() <= PMF_TOLERANCE {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
        Dmc::new(rows)
    }
}

/// Free-function form of [`BroadcastChannel::marginal`].
pub fn marginal(b: usize, bc: &BroadcastChannel) -> Result<Dmc> {
    bc.marginal(b)
}

/// Frequently used channels, in exact form.
pub mod catalog {
    use super::*;
    use num_bigint::BigInt;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn exact(rows: &[&[(i64, i64)]]) -> Dmc {
        Dmc::from_rationals(rows.iter().map(|r| r.iter().map(|(n, d)| q(*n, *d)).collect()).collect())
            .expect("catalog channels are stochastic")
    }

    /// Four inputs, three outputs; non-redundant but not injective.
    pub fn polytope_counterexample() -> Dmc {
        exact(&[
            &[(1, 1), (0, 1), (0, 1)],
            &[(1, 2), (1, 2), (0, 1)],
            &[(1, 2), (0, 1), (1, 2)],
            &[(0, 1), (1, 2), (1, 2)],
        ])
    }

    /// Two-user binary MAC: `(0,0) ↦ (1/4, 3/4)`, every other pair ↦ `(1/2, 1/2)`.
    pub fn two_user_mac() -> MacChannel {
        let flat = exact(&[&[(1, 4), (3, 4)], &[(1, 2), (1, 2)], &[(1, 2), (1, 2)], &[(1, 2), (1, 2)]]);
        MacChannel::new(vec![2, 2], flat).expect("sizes match")
    }

    /// The MAC above with the first user's input frozen at 0.
    pub fn first_input_frozen() -> Dmc {
        exact(&[&[(1, 4), (3, 4)], &[(1, 2), (1, 2)]])
    }

    /// The MAC above with the second user's input frozen at 0.
    pub fn second_input_frozen() -> Dmc {
        exact(&[&[(1, 4), (3, 4)], &[(1, 2), (1, 2)]])
    }
}
