//! Information measures over finite alphabets and the analytic bounds used
//! to pick hash output lengths and certify concealment.
//!
//! All logarithms are base 2. Wherever a term of the form `0 · log 0` or
//! `0 / 0` appears it evaluates to 0.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Probability vector over `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Builds a distribution, renormalizing drift below [`PMF_TOLERANCE`]
    /// and rejecting anything further off.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("mass {total} differs from 1")));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Pmf { probs })
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be non-negative with positive sum".into()));
        }
        Pmf::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        Ok(Pmf { probs: vec![1.0 / size as f64; size] })
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        if at >= size {
            return Err(Error::SymbolOutOfRange { symbol: at, alphabet: size });
        }
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Ok(Pmf { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize) -> f64 {
        self.probs[x]
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Pmf, lambda: f64) -> Result<Pmf> {
        check_same_len(self.len(), other.len())?;
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("mixing weight {lambda} outside [0,1]")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
            .collect();
        Pmf::new(probs)
    }

    /// Kronecker product; the first factor is the slowest-varying index.
    pub fn product(&self, other: &Pmf) -> Pmf {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for p in &self.probs {
            for q in &other.probs {
                probs.push(p * q);
            }
        }
        Pmf { probs }
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }
}

/// Non-negative function on `rows × cols`, row-major. Either a probability
/// distribution or a flagged subnormalized weight function.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
    subnormalized: bool,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        Self::build(rows, cols, probs, false)
    }

    pub fn new_subnormalized(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        Self::build(rows, cols, probs, true)
    }

    fn build(rows: usize, cols: usize, mut probs: Vec<f64>, subnormalized: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        check_same_len(rows * cols, probs.len())?;
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is negative or not finite")));
        }
        let total: f64 = probs.iter().sum();
        if subnormalized {
            if total > 1.0 + PMF_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("subnormalized mass {total} exceeds 1")));
            }
        } else {
            if (total - 1.0).abs() > PMF_TOLERANCE {
                return Err(Error::InvalidDistribution(format!("mass {total} differs from 1")));
            }
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(JointPmf { rows, cols, probs, subnormalized })
    }

    /// `p(x) q(z)`.
    pub fn independent(px: &Pmf, qz: &Pmf) -> JointPmf {
        let probs = px.product(qz).probs;
        JointPmf { rows: px.len(), cols: qz.len(), probs, subnormalized: false }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.probs[x * self.cols + z]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.cols];
        for row in self.probs.chunks(self.cols) {
            for (acc, p) in m.iter_mut().zip(row) {
                *acc += p;
            }
        }
        m
    }

    /// The row marginal as a distribution (normalized joints only).
    pub fn x_marginal(&self) -> Result<Pmf> {
        if self.subnormalized {
            return Err(Error::Subnormalized);
        }
        Pmf::new(self.row_marginal())
    }

    pub fn z_marginal(&self) -> Result<Pmf> {
        if self.subnormalized {
            return Err(Error::Subnormalized);
        }
        Pmf::new(self.col_marginal())
    }

    /// Tensor power of a normalized joint: `(x_1..x_k, z_1..z_k)` with the
    /// first copy slowest. Used for small block-length experiments.
    pub fn tensor_power(&self, k: u32) -> JointPmf {
        let mut acc = JointPmf { rows: 1, cols: 1, probs: vec![1.0], subnormalized: self.subnormalized };
        for _ in 0..k {
            let rows = acc.rows * self.rows;
            let cols = acc.cols * self.cols;
            let mut probs = vec![0.0; rows * cols];
            for xa in 0..acc.rows {
                for za in 0..acc.cols {
                    let a = acc.get(xa, za);
                    for xb in 0..self.rows {
                        for zb in 0..self.cols {
                            probs[(xa * self.rows + xb) * cols + za * self.cols + zb] = a * self.get(xb, zb);
                        }
                    }
                }
            }
            acc = JointPmf { rows, cols, probs, subnormalized: self.subnormalized };
        }
        acc
    }
}

/// `-Σ p log p` over raw weights, `0 log 0 = 0`.
pub(crate) fn entropy_of(weights: &[f64]) -> f64 {
    weights.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum()
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(&p.probs)
}

/// `H(X|Z) = H(X,Z) - H(Z)`.
pub fn conditional_entropy(j: &JointPmf) -> Result<f64> {
    if j.subnormalized {
        return Err(Error::Subnormalized);
    }
    Ok((entropy_of(&j.probs) - entropy_of(&j.col_marginal())).max(0.0))
}

pub fn mutual_information(j: &JointPmf) -> Result<f64> {
    if j.subnormalized {
        return Err(Error::Subnormalized);
    }
    let mi = entropy_of(&j.row_marginal()) + entropy_of(&j.col_marginal()) - entropy_of(&j.probs);
    Ok(mi.max(0.0))
}

/// Half the ℓ1 distance.
pub fn variational_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    check_same_len(p.len(), q.len())?;
    Ok(half_l1(&p.probs, &q.probs))
}

pub(crate) fn half_l1(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `-log max_{x, z ∈ supp(qz)} w(x,z) / qz(z)`.
///
/// The support of `qz` must contain the support of the z-marginal of `w`;
/// this is checked rather than assumed.
pub fn conditional_min_entropy(w: &JointPmf, qz: &Pmf) -> Result<f64> {
    check_same_len(w.cols, qz.len())?;
    if qz.support_size() == 0 {
        return Err(Error::InvalidDistribution("reference distribution has empty support".into()));
    }
    for (z, mass) in w.col_marginal().iter().enumerate() {
        if *mass > 0.0 && qz.get(z) == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "output {z} carries mass but lies outside the reference support"
            )));
        }
    }
    let mut best = 0.0_f64;
    for x in 0..w.rows {
        for z in 0..w.cols {
            let q = qz.get(z);
            if q > 0.0 {
                best = best.max(w.get(x, z) / q);
            }
        }
    }
    if best == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-best.log2())
}

/// A subset of users `{0, …, L-1}` encoded as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(l: usize) -> Subset {
        Subset(((1u64 << l) - 1) as u32)
    }

    pub fn singleton(user: usize) -> Subset {
        Subset(1 << user)
    }

    pub fn from_users(users: impl IntoIterator<Item = usize>) -> Subset {
        Subset(users.into_iter().fold(0, |m, u| m | (1 << u)))
    }

    pub fn contains(self, user: usize) -> bool {
        self.0 >> user & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn users(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |u| self.contains(*u))
    }

    /// Every subset of `{0..l}`, including the empty set, in mask order.
    pub fn all(l: usize) -> impl Iterator<Item = Subset> {
        (0..(1u32 << l)).map(Subset)
    }

    pub fn nonempty(l: usize) -> impl Iterator<Item = Subset> {
        (1..(1u32 << l)).map(Subset)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let users: Vec<String> = self.users().map(|u| (u + 1).to_string()).collect();
        write!(f, "{{{}}}", users.join(","))
    }
}

/// Bit lengths `r_T` for every nonempty subset of `L` users.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    users: usize,
    values: BTreeMap<Subset, f64>,
}

impl RateVector {
    /// `r_T = Σ_{ℓ∈T} r_ℓ`.
    pub fn from_user_rates(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() || rates.len() > 16 {
            return Err(Error::InvalidParameter(format!("{} users not supported", rates.len())));
        }
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::InvalidParameter("rates must be finite and non-negative".into()));
        }
        let values = Subset::nonempty(rates.len()).map(|t| (t, t.users().map(|u| rates[u]).sum())).collect();
        Ok(RateVector { users: rates.len(), values })
    }

    /// Arbitrary per-subset values, e.g. a single term for a lone user.
    pub fn from_subsets(users: usize, values: BTreeMap<Subset, f64>) -> Result<Self> {
        if values.keys().any(|t| t.is_empty() || !t.is_subset_of(Subset::full(users))) {
            return Err(Error::InvalidParameter("subsets must be nonempty and within the user set".into()));
        }
        Ok(RateVector { users, values })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, t: Subset) -> Option<f64> {
        self.values.get(&t).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Subset, f64)> + '_ {
        self.values.iter().map(|(t, r)| (*t, *r))
    }
}

/// `log2` of the distributed leftover-hash distance bound
/// `sqrt(Σ_T 2^{r_T - hmin(T)})`, evaluated in the log domain.
pub fn lhl_bound_log2(r: &RateVector, hmin: &BTreeMap<Subset, f64>) -> Result<f64> {
    let mut exponents = Vec::new();
    for (t, rate) in r.iter() {
        let h = hmin
            .get(&t)
            .ok_or_else(|| Error::InvalidParameter(format!("no min-entropy given for subset {t}")))?;
        exponents.push(rate - h);
    }
    if exponents.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let top = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = exponents.iter().map(|e| (e - top).exp2()).sum();
    Ok(0.5 * (top + sum.log2()))
}

/// `sqrt(Σ_{T≠∅} 2^{r_T - hmin(T)})`. Not clamped: values above 1 are vacuous.
pub fn lhl_bound(r: &RateVector, hmin: &BTreeMap<Subset, f64>) -> Result<f64> {
    Ok(lhl_bound_log2(r, hmin)?.exp2())
}

/// Per-symbol min-entropy loss from smoothing an i.i.d. source of length
/// `nbar` over an alphabet of `alphabet_size` (for the joint inputs of a
/// subset), with `users` parties and smoothing distance `eps`:
/// `log(|X_T| + 3) · sqrt((2 / nbar) (L + log(1/eps)))`.
pub fn smoothing_defect(nbar: usize, alphabet_size: usize, users: usize, eps: f64) -> Result<f64> {
    if nbar == 0 || alphabet_size == 0 {
        return Err(Error::InvalidParameter("block length and alphabet size must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("smoothing distance {eps} outside (0,1)")));
    }
    Ok(smoothing_defect_log2_eps(nbar, alphabet_size, users, -eps.log2()))
}

/// Same as [`smoothing_defect`] with `log2(1/eps)` supplied directly, so that
/// distances below `f64::MIN_POSITIVE` stay representable.
pub(crate) fn smoothing_defect_log2_eps(nbar: usize, alphabet_size: usize, users: usize, log2_inv_eps: f64) -> f64 {
    ((alphabet_size + 3) as f64).log2() * ((2.0 / nbar as f64) * (users as f64 + log2_inv_eps)).sqrt()
}

/// Upper bound on `I(X;Y)` from the distance `v = V(p_XY, p_X p_Y)`:
/// `v log(|X| / v)`, valid for `|X| ≥ 4`; `v = 0` maps to 0.
pub fn mi_from_distance(v: f64, alphabet_size: u64) -> Result<f64> {
    if alphabet_size < 4 {
        return Err(Error::InvalidParameter(format!("alphabet size {alphabet_size} below 4")));
    }
    mi_from_distance_log2(v, (alphabet_size as f64).log2())
}

/// [`mi_from_distance`] with the alphabet size given as `log2 |X|`, for
/// alphabets such as `{0,1}^r` with large `r`.
pub fn mi_from_distance_log2(v: f64, log2_alphabet: f64) -> Result<f64> {
    if log2_alphabet < 2.0 {
        return Err(Error::InvalidParameter(format!("alphabet of 2^{log2_alphabet} symbols is below 4")));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("distance {v} outside [0,1]")));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok(v * (log2_alphabet - v.log2()))
}

fn check_same_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w1_uniform_joint() -> JointPmf {
        JointPmf::new(2, 2, vec![0.125, 0.375, 0.25, 0.25]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::uniform(2).unwrap()), 1.0);
        assert_eq!(entropy(&Pmf::point_mass(3, 1).unwrap()), 0.0);
        let p = Pmf::new(vec![0.375, 0.625]).unwrap();
        assert!((entropy(&p) - 0.954_434_002_924_965).abs() < 1e-12);
    }

    #[test]
    fn pmf_rejects_mass_leak() {
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-14]).is_ok());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
    }

    #[test]
    fn conditional_entropy_examples() {
        let h = conditional_entropy(&w1_uniform_joint()).unwrap();
        assert!((h - 0.951_205_059_304_601).abs() < 1e-12, "{h}");

        let px = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let qz = Pmf::new(vec![0.6, 0.4]).unwrap();
        let j = JointPmf::independent(&px, &qz);
        assert!((conditional_entropy(&j).unwrap() - entropy(&px)).abs() < 1e-12);

        let copy = JointPmf::new(2, 2, vec![0.3, 0.0, 0.0, 0.7]).unwrap();
        assert!(conditional_entropy(&copy).unwrap().abs() < 1e-12);

        let sub = JointPmf::new_subnormalized(1, 2, vec![0.2, 0.3]).unwrap();
        assert!(matches!(conditional_entropy(&sub), Err(Error::Subnormalized)));
    }

    #[test]
    fn variational_distance_examples() {
        let p = Pmf::new(vec![0.5, 0.5]).unwrap();
        let q = Pmf::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(variational_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(variational_distance(&p, &q).unwrap(), 0.25);
        let a = Pmf::point_mass(2, 0).unwrap();
        let b = Pmf::point_mass(2, 1).unwrap();
        assert_eq!(variational_distance(&a, &b).unwrap(), 1.0);
        assert!(variational_distance(&p, &Pmf::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn min_entropy_of_uniform_independent_source() {
        let m = 3;
        let px = Pmf::uniform(1 << m).unwrap();
        let qz = Pmf::new(vec![0.1, 0.9]).unwrap();
        let w = JointPmf::independent(&px, &qz);
        assert!((conditional_min_entropy(&w, &qz).unwrap() - m as f64).abs() < 1e-12);
    }

    #[test]
    fn min_entropy_of_copy_is_zero() {
        let w = JointPmf::new(2, 2, vec![0.4, 0.0, 0.0, 0.6]).unwrap();
        let qz = w.z_marginal().unwrap();
        assert!(conditional_min_entropy(&w, &qz).unwrap().abs() < 1e-12);
    }

    #[test]
    fn min_entropy_of_two_copies_matches_enumeration() {
        let w = w1_uniform_joint().tensor_power(2);
        let qz = w.z_marginal().unwrap();
        // Brute force over the 16 cells of the two-letter product.
        let single = w1_uniform_joint();
        let py = single.col_marginal();
        let mut best = 0.0_f64;
        for x1 in 0..2 {
            for x2 in 0..2 {
                for y1 in 0..2 {
                    for y2 in 0..2 {
                        let ratio = single.get(x1, y1) * single.get(x2, y2) / (py[y1] * py[y2]);
                        best = best.max(ratio);
                    }
                }
            }
        }
        let expected = -best.log2();
        assert!((expected - (9.0_f64 / 4.0).log2()).abs() < 1e-12);
        assert!((conditional_min_entropy(&w, &qz).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn min_entropy_requires_support_inclusion() {
        let w = JointPmf::new(1, 2, vec![0.5, 0.5]).unwrap();
        let qz = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(conditional_min_entropy(&w, &qz).is_err());
    }

    #[test]
    fn lhl_bound_examples() {
        let single = |r: f64, h: f64| {
            let rv = RateVector::from_user_rates(&[r]).unwrap();
            let hmin = BTreeMap::from([(Subset(1), h)]);
            lhl_bound(&rv, &hmin).unwrap()
        };
        assert!((single(100.0, 100.0) - 1.0).abs() < 1e-15);
        assert!((single(80.0, 100.0) - 2f64.powi(-10)).abs() < 1e-18);

        let rv = RateVector::from_user_rates(&[10.0, 20.0]).unwrap();
        let hmin = BTreeMap::from([(Subset(1), 30.0), (Subset(2), 40.0), (Subset(3), 48.0)]);
        let got = lhl_bound(&rv, &hmin).unwrap();
        let want = (2f64.powi(-20) + 2f64.powi(-20) + 2f64.powi(-18)).sqrt();
        assert!(((got - want) / want).abs() < 1e-15, "{got} vs {want}");
    }

    #[test]
    fn lhl_bound_needs_every_subset() {
        let rv = RateVector::from_user_rates(&[1.0, 1.0]).unwrap();
        let hmin = BTreeMap::from([(Subset(1), 3.0)]);
        assert!(lhl_bound(&rv, &hmin).is_err());
    }

    #[test]
    fn smoothing_defect_examples() {
        let eps = 2f64.powi(-10);
        let d = smoothing_defect(10_000, 2, 1, eps).unwrap();
        let want = 5f64.log2() * ((2.0f64 / 1e4) * 11.0).sqrt();
        assert!((d - want).abs() < 1e-15);
        assert!((d - 0.108_908_081_294_365).abs() < 1e-12);
        // with the example parameters the value at 1e8 is still 1.09e-3; the
        // limit check uses eps = 1/2
        assert!(smoothing_defect(100_000_000, 2, 1, 0.5).unwrap() < 1e-3);
        assert!(smoothing_defect(100_000_000, 2, 1, eps).unwrap() < 1.1e-3);
        let halved = smoothing_defect(20_000, 2, 1, eps).unwrap();
        assert!((d / halved - 2f64.sqrt()).abs() < 1e-12);
        assert!(smoothing_defect(10, 2, 1, 0.0).is_err());
        assert!(smoothing_defect(10, 2, 1, 1.0).is_err());
    }

    #[test]
    fn mi_from_distance_examples() {
        assert_eq!(mi_from_distance(0.0, 4).unwrap(), 0.0);
        assert_eq!(mi_from_distance(1.0, 4).unwrap(), 2.0);
        assert!(mi_from_distance(0.5, 3).is_err());
        let big = mi_from_distance_log2(2f64.powi(-38), 1_500.0).unwrap();
        assert!(big < 1e-8);
    }

    #[test]
    fn subset_helpers() {
        let t = Subset::from_users([0, 2]);
        assert_eq!(t.len(), 2);
        assert!(t.contains(2) && !t.contains(1));
        assert_eq!(t.to_string(), "{1,3}");
        assert_eq!(Subset::nonempty(3).count(), 7);
        assert!(Subset::singleton(0).is_subset_of(t));
    }

    fn pmf_strategy(k: usize) -> impl Strategy<Value = Pmf> {
        prop::collection::vec(0.001f64..1.0, k).prop_map(|w| Pmf::from_weights(&w).unwrap())
    }

    proptest! {
        #[test]
        fn entropy_is_concave(p in pmf_strategy(5), q in pmf_strategy(5), lambda in 0.0f64..=1.0) {
            let mix = p.mix(&q, lambda).unwrap();
            prop_assert!(entropy(&mix) >= lambda * entropy(&p) + (1.0 - lambda) * entropy(&q) - 1e-9);
        }

        #[test]
        fn conditional_entropy_is_bounded(w in prop::collection::vec(0.0f64..1.0, 12)) {
            prop_assume!(w.iter().sum::<f64>() > 0.0);
            let total: f64 = w.iter().sum();
            let j = JointPmf::new(3, 4, w.iter().map(|x| x / total).collect()).unwrap();
            let h = conditional_entropy(&j).unwrap();
            prop_assert!(h >= -1e-12);
            prop_assert!(h <= entropy(&j.x_marginal().unwrap()) + 1e-12);
        }

        #[test]
        fn variational_distance_is_a_metric(p in pmf_strategy(4), q in pmf_strategy(4), r in pmf_strategy(4)) {
            let pq = variational_distance(&p, &q).unwrap();
            prop_assert_eq!(pq, variational_distance(&q, &p).unwrap());
            let pr = variational_distance(&p, &r).unwrap();
            let rq = variational_distance(&r, &q).unwrap();
            prop_assert!(pq <= pr + rq + 1e-12);
        }

        #[test]
        fn min_entropy_bounded_by_marginal_guessing(px in pmf_strategy(4), qz in pmf_strategy(3)) {
            let w = JointPmf::independent(&px, &qz);
            let hmin = conditional_min_entropy(&w, &qz).unwrap();
            let max_cell = px.probs().iter().cloned().fold(0.0, f64::max);
            prop_assert!(hmin <= -max_cell.log2() + 1e-12);
        }
    }
}
