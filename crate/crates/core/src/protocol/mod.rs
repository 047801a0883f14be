//! Commit/reveal schemes over noisy channels and their attack harnesses.
//!
//! Each run has the same three-round shape: the bidders' sequences go over
//! the channel, the verifier sends challenge hashes `G`, and the bidders
//! answer with a challenge set `S` and tag `T`, then with an extractor `F`
//! and pad `E = a ⊕ F(X̄)`. At reveal the verifier checks (i) typicality of
//! the claimed sequences with its channel output, (ii) the tag and (iii) the
//! pad.
//!
//! Randomness is split by role. A run seed feeds one ChaCha20 stream per
//! role (see [`Role`]), and Monte Carlo trial `t` uses the run seed
//! [`trial_seed`]`(master, t)`, so trials are independent of scheduling.

mod attack;
mod broadcast;
mod mac;
mod transcript;

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{entropy_set_function, InputDistribution};
use crate::channel::{mac_non_redundancy, MacChannel};
use crate::error::{Error, Result};
use crate::hashing::{BitString, SymbolCodec};
use crate::infotheory::{lhl_bound_log2, mi_from_distance_log2, smoothing_defect_log2_eps, JointPmf, RateVector, Subset};
use crate::typicality::EpsSchedule;

pub use attack::{
    binding_attack, concealment_probe, honest_trials, AttackReport, BindingStrategy, ConcealmentReport, FlipRegion,
    TrialOutcome,
};
pub use broadcast::{broadcast_trials, select_broadcast_rate, BroadcastBidderState, BroadcastProtocol, BroadcastView, VerifierChallenge};
pub use mac::{BidderState, BidderView, MacProtocol, RevealClaim, VerifierView};
pub use transcript::{BroadcastTranscript, EncodedSequence, MacTranscript, SCHEMA_VERSION};

/// Target probability that an honest run fails the typicality test.
pub const HONEST_FAILURE_TARGET: f64 = 1e-3;

/// Wilson score interval at 95%.
pub const WILSON_Z: f64 = 1.96;

/// Pseudorandom stream identifiers within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Channel,
    Verifier,
    Bidder(usize),
    /// Shared randomness of colluding bidders drawing a joint input.
    Coalition,
    Messages,
    Attacker,
    /// The verifiers' reveal-time choice of the adjudicating verifier.
    Adjudication,
}

impl Role {
    fn stream(self) -> u64 {
        match self {
            Role::Channel => 0,
            Role::Verifier => 1,
            Role::Bidder(l) => 2 + l as u64,
            Role::Coalition => 1000,
            Role::Messages => 1001,
            Role::Attacker => 1002,
            Role::Adjudication => 1003,
        }
    }
}

pub fn role_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(role.stream());
    rng
}

/// Run seed of trial `trial` under `master` (SplitMix64 finalizer).
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Block length.
    pub n: usize,
    /// Challenge fraction; each challenge set has `⌊μn⌋` positions.
    pub mu: f64,
    /// Tag fraction; each tag has `⌊ηn⌋` bits.
    pub eta: f64,
    /// Typicality tolerance.
    pub eps: f64,
    /// Security level `s` in bits.
    pub security: u32,
}

impl ProtocolParams {
    pub const DEFAULT_MU: f64 = 0.1;
    pub const DEFAULT_ETA: f64 = 0.02;
    pub const DEFAULT_SECURITY: u32 = 40;

    pub fn new(n: usize, eps: f64) -> Self {
        ProtocolParams { n, mu: Self::DEFAULT_MU, eta: Self::DEFAULT_ETA, eps, security: Self::DEFAULT_SECURITY }
    }

    /// Default parameters with the calibrated tolerance for `targets`.
    pub fn calibrated(n: usize, targets: &[JointPmf]) -> Result<Self> {
        Ok(Self::new(n, calibrated_eps(targets, n)?))
    }

    pub fn challenge_size(&self) -> usize {
        (self.mu * self.n as f64 + 1e-9).floor() as usize
    }

    pub fn tag_bits(&self) -> usize {
        (self.eta * self.n as f64 + 1e-9).floor() as usize
    }

    /// Smallest possible `n̄` once `users` challenge sets are removed.
    pub fn worst_case_nbar(&self, users: usize) -> usize {
        self.n - (users * self.challenge_size()).min(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("block length must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta < self.mu && self.mu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < eta < mu < 1, got eta = {}, mu = {}",
                self.eta, self.mu
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("typicality tolerance {} must be positive", self.eps)));
        }
        if self.challenge_size() == 0 || self.challenge_size() >= self.n {
            return Err(Error::InvalidParameter(format!(
                "challenge size floor(mu n) = {} must lie in [1, n)",
                self.challenge_size()
            )));
        }
        if self.security > 1000 {
            return Err(Error::InvalidParameter(format!("security level {} is unreasonably large", self.security)));
        }
        Ok(())
    }
}

/// Tolerance at length `n` such that each of the typicality tests against
/// `targets` fails on honest data with probability about
/// [`HONEST_FAILURE_TARGET`]`/|targets|`.
pub fn calibrated_eps(targets: &[JointPmf], n: usize) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::InvalidParameter("no typicality targets".into()));
    }
    let delta = HONEST_FAILURE_TARGET / targets.len() as f64;
    targets
        .iter()
        .map(|q| EpsSchedule::calibrate(q, n, delta).map(|s| s.at(n)))
        .try_fold(0.0, |acc: f64, e| e.map(|e| acc.max(e)))
}

/// Outcome of the three reveal tests for one bidder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealVerdict {
    pub typical: bool,
    pub tag_ok: bool,
    pub pad_ok: bool,
}

impl RevealVerdict {
    pub fn accepted(&self) -> bool {
        self.typical && self.tag_ok && self.pad_ok
    }
}

/// Integer hash output lengths and the bounds they were chosen against.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSelection {
    pub rates: Vec<usize>,
    /// Worst-case retained length the budgets were computed at.
    pub nbar: usize,
    /// `H(X_T|Y)` for every nonempty `T`.
    pub entropies: BTreeMap<Subset, f64>,
    /// `n̄ H(X_T|Y) − n̄ δ_T(n̄) − 2s` for every nonempty `T`.
    pub budgets: BTreeMap<Subset, f64>,
    pub diagnostics: Vec<String>,
}

impl RateSelection {
    pub fn sum_rate(&self) -> usize {
        self.rates.iter().sum()
    }

    /// `n̄ H(X_T|Y) − n̄ δ_T(n̄)`, the smoothed min-entropy available to `T`.
    pub fn min_entropy_floor(&self, t: Subset, security: u32) -> f64 {
        self.budgets[&t] + 2.0 * security as f64
    }
}

/// Budgets `n̄ H(X_T|Y) − n̄ δ_T(n̄) − 2s` at the worst-case `n̄`. The
/// smoothing distance is `2^{-(s+1)}`, so that `2ε` plus the hashing term
/// stays below `2^L · 2^{-s}` whenever every rate respects its budget.
fn rate_budgets(m: &MacChannel, p: &InputDistribution, params: &ProtocolParams) -> Result<RateSelection> {
    params.validate()?;
    let l = m.users();
    let f = entropy_set_function(m, p)?;
    let nbar = params.worst_case_nbar(l);
    let s = params.security as f64;
    let mut entropies = BTreeMap::new();
    let mut budgets = BTreeMap::new();
    for t in Subset::nonempty(l) {
        let h = f.get(t);
        let alphabet: usize = t.users().map(|u| m.input_sizes()[u]).product();
        let budget = if nbar == 0 {
            f64::NEG_INFINITY
        } else {
            let delta = smoothing_defect_log2_eps(nbar, alphabet, l, s + 1.0);
            nbar as f64 * (h - delta) - 2.0 * s
        };
        entropies.insert(t, h);
        budgets.insert(t, budget);
    }
    Ok(RateSelection { rates: vec![0; l], nbar, entropies, budgets, diagnostics: Vec::new() })
}

/// Largest integer rates with `r_T ≤ budget(T)` for every `T`: an equal
/// water level first, then a greedy top-up in user order.
pub fn select_rates(m: &MacChannel, p: &InputDistribution, params: &ProtocolParams) -> Result<RateSelection> {
    let mut sel = rate_budgets(m, p, params)?;
    let l = m.users();
    if !mac_non_redundancy(m).non_redundant {
        sel.diagnostics.push("channel is redundant: typicality cannot bind every input".into());
    }
    let level = sel.budgets.iter().map(|(t, b)| b / t.len() as f64).fold(f64::INFINITY, f64::min);
    if !(level >= 0.0) {
        sel.diagnostics.push(format!("budget infeasible at n = {} and s = {}: all rates 0", params.n, params.security));
    }
    let mut rates = vec![if level >= 1.0 { level.floor() as usize } else { 0 }; l];
    for u in 0..l {
        let slack = sel
            .budgets
            .iter()
            .filter(|(t, _)| t.contains(u))
            .map(|(t, b)| b - t.users().map(|v| rates[v] as f64).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        if slack >= 1.0 {
            rates[u] += slack.floor() as usize;
        }
    }
    sel.rates = rates;
    Ok(sel)
}

/// Every nonempty `T` with positive rate stays within its budget.
fn check_rates(sel: &RateSelection, rates: &[usize]) -> Result<()> {
    if rates.len() != sel.rates.len() {
        return Err(Error::DimensionMismatch { expected: sel.rates.len(), found: rates.len() });
    }
    for (t, budget) in &sel.budgets {
        let r: usize = t.users().map(|u| rates[u]).sum();
        if r > 0 && r as f64 > *budget {
            return Err(Error::RateAboveBudget { subset: t.to_string(), rate: r as f64, budget: *budget });
        }
    }
    Ok(())
}

/// Certified leakage for rates within budget: the distance
/// `2ε + sqrt(Σ_T 2^{r_T − hmin(T)})` from uniform of the extracted keys,
/// and the corresponding bound on the information it conveys.
pub(crate) fn certified_leakage(sel: &RateSelection, rates: &[usize], security: u32) -> Result<(f64, f64)> {
    let r_total: usize = rates.iter().sum();
    if r_total == 0 {
        return Ok((0.0, 0.0));
    }
    let rv = RateVector::from_user_rates(&rates.iter().map(|r| *r as f64).collect::<Vec<_>>())?;
    let hmin: BTreeMap<Subset, f64> = sel.budgets.keys().map(|t| (*t, sel.min_entropy_floor(*t, security))).collect();
    let smoothing = 2f64.powi(-(security as i32));
    let distance = (smoothing + 2f64.powf(lhl_bound_log2(&rv, &hmin)?)).min(1.0);
    let bits = mi_from_distance_log2(distance, r_total.max(2) as f64)?;
    Ok((distance, bits))
}

/// Uniform random `bits`-bit message.
pub fn random_message<R: Rng + ?Sized>(bits: usize, rng: &mut R) -> BitString {
    BitString::random(bits, rng)
}

fn sample_positions<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut s = index::sample(rng, n, k).into_vec();
    s.sort_unstable();
    s
}

fn complement(n: usize, sets: &[&[usize]]) -> Vec<usize> {
    let mut taken = vec![false; n];
    for s in sets {
        for i in *s {
            taken[*i] = true;
        }
    }
    (0..n).filter(|i| !taken[*i]).collect()
}

fn pick(xs: &[usize], positions: &[usize]) -> Vec<usize> {
    positions.iter().map(|i| xs[*i]).collect()
}

fn check_sequence(xs: &[usize], n: usize, alphabet: usize, who: &str) -> Result<()> {
    if xs.len() != n {
        return Err(Error::MalformedClaim(format!("{who}: sequence of length {} where {n} was committed", xs.len())));
    }
    if let Some(x) = xs.iter().find(|x| **x >= alphabet) {
        return Err(Error::MalformedClaim(format!("{who}: symbol {x} outside alphabet of size {alphabet}")));
    }
    Ok(())
}

fn codec_for(alphabet: usize, who: &str) -> Result<SymbolCodec> {
    if alphabet < 2 {
        return Err(Error::InvalidParameter(format!("{who} has a one-symbol alphabet and cannot commit")));
    }
    SymbolCodec::new(alphabet)
}
