//! Monte Carlo harnesses: honest runs, binding attacks and the concealment
//! distinguisher.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::{random_message, role_rng, trial_seed, wilson_interval, MacProtocol, RevealClaim, Role, VerifierView};
use crate::capacity::Collusion;
use crate::error::{Error, Result};
use crate::hashing::BitString;
use crate::infotheory::mi_from_distance_log2;

/// Where a flip attack places its flipped positions, relative to bidder 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipRegion {
    /// Inside the bidder's own challenge set.
    Challenge,
    /// One position in the challenge set, the rest among the retained positions.
    Straddle,
    /// Only positions outside every challenge set. These feed the extractor
    /// but not the tag.
    Retained,
    /// Uniform over all `n` positions.
    Anywhere,
}

/// How the cheating bidder builds the sequence it reveals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingStrategy {
    /// A fresh sequence from the input law. In colluding mode the whole
    /// tuple is redrawn, otherwise only bidder 1's sequence.
    Resample,
    /// Redraws only the retained positions, keeping the tag valid.
    ResampleRetained,
    /// Changes `k` symbols of the committed sequence of bidder 1.
    FlipK { k: usize, region: FlipRegion },
}

impl fmt::Display for FlipRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlipRegion::Challenge => "challenge",
            FlipRegion::Straddle => "straddle",
            FlipRegion::Retained => "retained",
            FlipRegion::Anywhere => "anywhere",
        })
    }
}

impl fmt::Display for BindingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BindingStrategy::Resample => f.write_str("resample"),
            BindingStrategy::ResampleRetained => f.write_str("resample-retained"),
            BindingStrategy::FlipK { k, region } => write!(f, "flip:{k}:{region}"),
        }
    }
}

impl FromStr for BindingStrategy {
    type Err = Error;

    /// Parses `resample`, `resample-retained` or `flip:K[:REGION]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown attack '{s}' (resample, resample-retained, flip:K[:REGION])"));
        match s {
            "resample" => return Ok(BindingStrategy::Resample),
            "resample-retained" => return Ok(BindingStrategy::ResampleRetained),
            _ => {}
        }
        let mut parts = s.split(':');
        if parts.next() != Some("flip") {
            return Err(bad());
        }
        let k = parts.next().and_then(|k| k.parse().ok()).ok_or_else(bad)?;
        let region = match parts.next() {
            None | Some("anywhere") => FlipRegion::Anywhere,
            Some("challenge") => FlipRegion::Challenge,
            Some("straddle") => FlipRegion::Straddle,
            Some("retained") => FlipRegion::Retained,
            Some(_) => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(BindingStrategy::FlipK { k, region })
    }
}

/// Reveal outcome of one trial, for the bidder under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub accepted: bool,
    pub typical: bool,
    pub tag_ok: bool,
    pub pad_ok: bool,
    /// Honest runs: every bidder accepted. Attacks: bidder 1 was accepted on
    /// a message other than the committed one.
    pub success: bool,
    /// Hamming distance between the published pads and the committed
    /// messages, i.e. the weight of the extracted key.
    pub statistic: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub strategy: String,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub outcomes: Vec<TrialOutcome>,
}

impl AttackReport {
    pub(crate) fn from_outcomes(strategy: String, outcomes: Vec<TrialOutcome>) -> Self {
        let trials = outcomes.len();
        let successes = outcomes.iter().filter(|o| o.success).count();
        let (wilson_low, wilson_high) = wilson_interval(successes, trials);
        let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        AttackReport { strategy, trials, successes, rate, wilson_low, wilson_high, outcomes }
    }
}

fn draw_messages(protocol: &MacProtocol, seed: u64) -> Vec<BitString> {
    let mut rng = role_rng(seed, Role::Messages);
    protocol.rates().iter().map(|r| random_message(*r, &mut rng)).collect()
}

pub(crate) fn run_trials<T: Send>(trials: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    crate::install(|| (0..trials as u64).into_par_iter().map(&f).collect())
}

/// Honest commit/reveal runs with uniform messages.
pub fn honest_trials(protocol: &MacProtocol, trials: usize, master: u64) -> Result<AttackReport> {
    let outcomes = run_trials(trials, |t| {
        let seed = trial_seed(master, t);
        let messages = draw_messages(protocol, seed);
        let (states, view) = protocol.commit(&messages, seed)?;
        let verdicts = protocol.reveal(&view, &RevealClaim::honest(&states))?;
        let all = |f: fn(&super::RevealVerdict) -> bool| verdicts.iter().all(f);
        let accepted = all(|v| v.accepted());
        Ok(TrialOutcome {
            accepted,
            typical: all(|v| v.typical),
            tag_ok: all(|v| v.tag_ok),
            pad_ok: all(|v| v.pad_ok),
            success: accepted,
            statistic: statistic(&view, &concat(&messages))?,
        })
    })?;
    Ok(AttackReport::from_outcomes("honest".into(), outcomes))
}

fn positions<R: Rng + ?Sized>(pool: &[usize], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > pool.len() {
        return Err(Error::InvalidParameter(format!("cannot flip {k} positions out of {}", pool.len())));
    }
    Ok(index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect())
}

/// The sequences the cheating coalition reveals.
fn forge<R: Rng + ?Sized>(
    protocol: &MacProtocol,
    strategy: BindingStrategy,
    view: &VerifierView,
    honest: &[Vec<usize>],
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let n = view.n;
    let mut claimed = honest.to_vec();
    let fresh = |rng: &mut R| match protocol.mode() {
        Collusion::Colluding => protocol.draw_joint(n, rng),
        Collusion::NonColluding => {
            let mut s = honest.to_vec();
            s[0] = protocol.draw_user(0, n, rng);
            s
        }
    };
    match strategy {
        BindingStrategy::Resample => claimed = fresh(rng),
        BindingStrategy::ResampleRetained => {
            let redrawn = fresh(rng);
            for i in view.retained_positions() {
                for (c, r) in claimed.iter_mut().zip(&redrawn) {
                    c[i] = r[i];
                }
            }
        }
        BindingStrategy::FlipK { k, region } => {
            let challenge = &view.bidders[0].challenge;
            let retained = view.retained_positions();
            let chosen = match region {
                FlipRegion::Challenge => positions(challenge, k, rng)?,
                FlipRegion::Retained => positions(&retained, k, rng)?,
                FlipRegion::Anywhere => positions(&(0..n).collect::<Vec<_>>(), k, rng)?,
                FlipRegion::Straddle => {
                    if k == 0 {
                        return Err(Error::InvalidParameter("a straddling flip needs k ≥ 1".into()));
                    }
                    let mut p = positions(challenge, 1, rng)?;
                    p.extend(positions(&retained, k - 1, rng)?);
                    p
                }
            };
            let alphabet = protocol.channel().input_sizes()[0];
            for i in chosen {
                // uniform over the other symbols
                let shift = rng.gen_range(1..alphabet);
                claimed[0][i] = (claimed[0][i] + shift) % alphabet;
            }
        }
    }
    Ok(claimed)
}

/// Bidder 1 (with help from the others in colluding mode) commits honestly,
/// then tries to open to a different message. Each bidder claims the message
/// its revealed sequence opens to; when that equals the committed message,
/// bidder 1 flips a bit of its claim, which then fails the pad test.
pub fn binding_attack(
    protocol: &MacProtocol,
    strategy: BindingStrategy,
    trials: usize,
    master: u64,
) -> Result<AttackReport> {
    let r0 = protocol.rates()[0];
    let outcomes = run_trials(trials, |t| {
        let seed = trial_seed(master, t);
        let committed = draw_messages(protocol, seed);
        let (states, view) = protocol.commit(&committed, seed)?;
        let honest: Vec<Vec<usize>> = states.iter().map(|s| s.sequence.clone()).collect();
        let mut rng = role_rng(seed, Role::Attacker);
        let sequences = forge(protocol, strategy, &view, &honest, &mut rng)?;
        let mut messages = (0..protocol.users())
            .map(|b| protocol.opened_message(&view, b, &sequences[b]))
            .collect::<Result<Vec<_>>>()?;
        if r0 > 0 && messages[0] == states[0].message {
            messages[0].flip(0);
        }
        let differs = messages[0] != states[0].message;
        let v = protocol.reveal(&view, &RevealClaim { sequences, messages })?[0];
        Ok(TrialOutcome {
            accepted: v.accepted(),
            typical: v.typical,
            tag_ok: v.tag_ok,
            pad_ok: v.pad_ok,
            success: r0 > 0 && v.accepted() && differs,
            statistic: statistic(&view, &concat(&committed))?,
        })
    })?;
    Ok(AttackReport::from_outcomes(strategy.to_string(), outcomes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcealmentReport {
    /// Certified statistical distance of the pads from uniform.
    pub certified_distance: f64,
    /// Certified leakage in bits.
    pub certified_bits: f64,
    /// `mi_from_distance(2^L 2^{-s}, 2^{r_L})`, the target the rate
    /// selection aims for.
    pub reference_bits: f64,
    /// `(TPR − FPR) / 2` of the threshold rule on the held-out pairs.
    pub advantage: f64,
    pub threshold: usize,
    /// True when the rule guesses `a′` for statistics at or above the threshold.
    pub above: bool,
    pub trials: usize,
    /// Statistic under `a` and under `a′`, per test pair.
    pub statistics: Vec<(usize, usize)>,
}

/// Hamming distance between the published pads and the concatenation of `a`.
fn statistic(view: &VerifierView, a: &BitString) -> Result<usize> {
    view.pads().hamming_distance(a)
}

pub(crate) fn concat(messages: &[BitString]) -> BitString {
    let mut out = BitString::zeros(0);
    for m in messages {
        out.extend(m);
    }
    out
}

fn paired_statistics(
    protocol: &MacProtocol,
    a: &[BitString],
    a_prime: &[BitString],
    trials: usize,
    master: u64,
) -> Result<Vec<(usize, usize)>> {
    let reference = concat(a);
    run_trials(trials, |t| {
        let (_, v0) = protocol.commit(a, trial_seed(master, 2 * t))?;
        let (_, v1) = protocol.commit(a_prime, trial_seed(master, 2 * t + 1))?;
        Ok((statistic(&v0, &reference)?, statistic(&v1, &reference)?))
    })
}

/// `(TPR − FPR) / 2` of "guess `a′` when the statistic is on the `above` side of `threshold`".
fn rule_advantage(stats: &[(usize, usize)], threshold: usize, above: bool) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    let says = |s: usize| if above { s >= threshold } else { s < threshold };
    let fp = stats.iter().filter(|(s, _)| says(*s)).count() as f64;
    let tp = stats.iter().filter(|(_, s)| says(*s)).count() as f64;
    (tp - fp) / (2.0 * stats.len() as f64)
}

/// Honest-but-curious verifier game between message tuples `a` and `a′`.
///
/// The threshold rule is fitted on `trials` calibration pairs drawn under an
/// independent master seed and then scored on `trials` fresh pairs, so under
/// perfect concealment the reported advantage is centred on zero.
pub fn concealment_probe(
    protocol: &MacProtocol,
    a: &[BitString],
    a_prime: &[BitString],
    trials: usize,
    master: u64,
) -> Result<ConcealmentReport> {
    if a == a_prime {
        return Err(Error::InvalidParameter("the two message tuples must differ".into()));
    }
    let (certified_distance, certified_bits) = protocol.certified_leakage()?;
    let r_total: usize = protocol.rates().iter().sum();
    let reference_bits = if r_total == 0 {
        0.0
    } else {
        let users = protocol.users() as i32;
        let d = 2f64.powi(users - protocol.params().security as i32).min(1.0);
        mi_from_distance_log2(d, r_total.max(2) as f64)?
    };

    let calibration = paired_statistics(protocol, a, a_prime, trials, !master)?;
    let mut best = (f64::NEG_INFINITY, 0, true);
    for threshold in 0..=r_total + 1 {
        for above in [true, false] {
            let adv = rule_advantage(&calibration, threshold, above);
            if adv > best.0 {
                best = (adv, threshold, above);
            }
        }
    }
    let (_, threshold, above) = best;
    let statistics = paired_statistics(protocol, a, a_prime, trials, master)?;
    Ok(ConcealmentReport {
        certified_distance,
        certified_bits,
        reference_bits,
        advantage: rule_advantage(&statistics, threshold, above),
        threshold,
        above,
        trials,
        statistics,
    })
}
