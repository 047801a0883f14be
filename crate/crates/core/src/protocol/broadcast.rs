//! The single-bidder broadcast scheme with verifier dropout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attack::run_trials;
use super::{
    check_sequence, codec_for, complement, pick, random_message, role_rng, sample_positions, trial_seed, AttackReport,
    ProtocolParams, RevealVerdict, Role, TrialOutcome,
};
use crate::channel::{sample_index, BroadcastChannel, Dmc};
use crate::error::{Error, Result};
use crate::hashing::{BitString, LinearHash, SymbolCodec};
use crate::infotheory::{smoothing_defect_log2_eps, JointPmf, Pmf};
use crate::typicality::jointly_typical;

/// Per-verifier challenge: hash `G_b` and the tag `T_b` the bidder returned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierChallenge {
    pub g: LinearHash,
    pub tag: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroadcastView {
    pub n: usize,
    pub nbar: usize,
    /// One output sequence per verifier.
    pub ys: Vec<Vec<usize>>,
    pub challenge: Vec<usize>,
    pub verifiers: Vec<VerifierChallenge>,
    pub f: LinearHash,
    pub pad: BitString,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastBidderState {
    pub message: BitString,
    pub sequence: Vec<usize>,
    pub challenge: Vec<usize>,
    pub retained: Vec<usize>,
    pub f: LinearHash,
}

/// Largest rate with `r ≤ n̄ H(X|Y_b) − n̄ δ(n̄) − 2s` for every verifier `b`,
/// together with that budget.
pub fn select_broadcast_rate(bc: &BroadcastChannel, p: &Pmf, params: &ProtocolParams) -> Result<(usize, f64)> {
    params.validate()?;
    let nbar = params.n - params.challenge_size();
    let s = params.security as f64;
    let delta = smoothing_defect_log2_eps(nbar, bc.input_size(), 1, s + 1.0);
    let mut budget = f64::INFINITY;
    for b in 0..bc.receivers() {
        let h = crate::capacity::equivocation(&bc.marginal(b)?, p)?;
        budget = budget.min(nbar as f64 * (h - delta) - 2.0 * s);
    }
    Ok((if budget >= 1.0 { budget.floor() as usize } else { 0 }, budget))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastProtocol {
    channel: BroadcastChannel,
    input: Pmf,
    params: ProtocolParams,
    rate: usize,
    budget: f64,
    codec: SymbolCodec,
    marginals: Vec<Dmc>,
    targets: Vec<JointPmf>,
}

impl BroadcastProtocol {
    pub fn new(channel: BroadcastChannel, input: Pmf, params: ProtocolParams, rate: usize) -> Result<Self> {
        params.validate()?;
        if input.len() != channel.input_size() {
            return Err(Error::DimensionMismatch { expected: channel.input_size(), found: input.len() });
        }
        let (_, budget) = select_broadcast_rate(&channel, &input, &params)?;
        if rate > 0 && rate as f64 > budget {
            return Err(Error::RateAboveBudget { subset: "{1}".into(), rate: rate as f64, budget });
        }
        let codec = codec_for(channel.input_size(), "the bidder")?;
        let marginals = (0..channel.receivers()).map(|b| channel.marginal(b)).collect::<Result<Vec<_>>>()?;
        let targets = Self::typicality_targets(&channel, &input)?;
        Ok(BroadcastProtocol { channel, input, params, rate, budget, codec, marginals, targets })
    }

    pub fn with_selected_rate(channel: BroadcastChannel, input: Pmf, params: ProtocolParams) -> Result<Self> {
        let (rate, _) = select_broadcast_rate(&channel, &input, &params)?;
        Self::new(channel, input, params, rate)
    }

    /// `q_{X Y_b}` for every verifier `b`.
    pub fn typicality_targets(channel: &BroadcastChannel, input: &Pmf) -> Result<Vec<JointPmf>> {
        (0..channel.receivers()).map(|b| channel.marginal(b)?.joint(input)).collect()
    }

    pub fn channel(&self) -> &BroadcastChannel {
        &self.channel
    }

    pub fn input(&self) -> &Pmf {
        &self.input
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn verifiers(&self) -> usize {
        self.channel.receivers()
    }

    pub fn draw_input<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        (0..len).map(|_| sample_index(self.input.probs(), rng)).collect()
    }

    /// Commit phase. Every verifier takes part; dropout only matters at reveal.
    pub fn commit(&self, message: &BitString, seed: u64) -> Result<(BroadcastBidderState, BroadcastView)> {
        if message.len() != self.rate {
            return Err(Error::DimensionMismatch { expected: self.rate, found: message.len() });
        }
        let n = self.params.n;
        let mut bidder = role_rng(seed, Role::Bidder(0));
        let sequence = self.draw_input(n, &mut bidder);
        let mut channel_rng = role_rng(seed, Role::Channel);
        let joint: Vec<Vec<usize>> = sequence
            .iter()
            .map(|x| Ok(self.channel.split_output(self.channel.flat().sample(*x, &mut channel_rng)?)))
            .collect::<Result<_>>()?;
        let ys: Vec<Vec<usize>> = (0..self.verifiers()).map(|b| joint.iter().map(|y| y[b]).collect()).collect();

        let mut verifier = role_rng(seed, Role::Verifier);
        let k = self.params.challenge_size();
        let gs = (0..self.verifiers())
            .map(|_| LinearHash::draw(&mut verifier, k * self.codec.width(), self.params.tag_bits()))
            .collect::<Result<Vec<_>>>()?;

        let challenge = sample_positions(&mut bidder, n, k);
        let challenged = self.codec.encode(&pick(&sequence, &challenge))?;
        let verifiers = gs
            .into_iter()
            .map(|g| Ok(VerifierChallenge { tag: g.eval(&challenged)?, g }))
            .collect::<Result<Vec<_>>>()?;

        let keep = complement(n, &[&challenge]);
        let retained = pick(&sequence, &keep);
        let f = LinearHash::draw(&mut bidder, keep.len() * self.codec.width(), self.rate)?;
        let pad = message.xor(&f.eval(&self.codec.encode(&retained)?)?)?;
        let view = BroadcastView { n, nbar: keep.len(), ys, challenge: challenge.clone(), verifiers, f: f.clone(), pad };
        let state = BroadcastBidderState { message: message.clone(), sequence, challenge, retained, f };
        Ok((state, view))
    }

    /// Uniform choice of the adjudicating verifier among those still present.
    pub fn choose_verifier<R: Rng + ?Sized>(available: &[usize], rng: &mut R) -> Result<usize> {
        if available.is_empty() {
            return Err(Error::InvalidParameter("no verifier left to adjudicate".into()));
        }
        Ok(available[rng.gen_range(0..available.len())])
    }

    pub fn check_view(&self, view: &BroadcastView) -> Result<()> {
        let n = self.params.n;
        let k = self.params.challenge_size();
        let w = self.codec.width();
        let shape_ok = view.n == n
            && view.ys.len() == self.verifiers()
            && view.ys.iter().zip(self.channel.output_sizes()).all(|(y, m)| y.len() == n && y.iter().all(|s| s < m))
            && view.challenge.len() == k
            && view.challenge.windows(2).all(|p| p[0] < p[1])
            && view.challenge.last().is_some_and(|i| *i < n)
            && view.nbar == n - k
            && view.verifiers.len() == self.verifiers()
            && view.verifiers.iter().all(|v| {
                v.g.input_len() == k * w && v.g.output_len() == self.params.tag_bits() && v.tag.len() == v.g.output_len()
            })
            && view.f.input_len() == view.nbar * w
            && view.f.output_len() == self.rate
            && view.pad.len() == self.rate;
        if shape_ok {
            Ok(())
        } else {
            Err(Error::MalformedClaim("view does not match the protocol dimensions".into()))
        }
    }

    /// Reveal adjudicated by verifier `b_star`, which must be in `available`.
    pub fn reveal(
        &self,
        view: &BroadcastView,
        sequence: &[usize],
        message: &BitString,
        available: &[usize],
        b_star: usize,
    ) -> Result<RevealVerdict> {
        self.check_view(view)?;
        if available.is_empty() {
            return Err(Error::InvalidParameter("no verifier left to adjudicate".into()));
        }
        if let Some(b) = available.iter().find(|b| **b >= self.verifiers()) {
            return Err(Error::IndexOutOfRange { index: *b, len: self.verifiers() });
        }
        if !available.contains(&b_star) {
            return Err(Error::InvalidParameter(format!("verifier {} is not available", b_star + 1)));
        }
        check_sequence(sequence, view.n, self.channel.input_size(), "the bidder")?;
        if message.len() != self.rate {
            return Err(Error::MalformedClaim(format!("message of {} bits, committed rate {}", message.len(), self.rate)));
        }
        let typical = jointly_typical(sequence, &view.ys[b_star], &self.targets[b_star], self.params.eps)?;
        let v = &view.verifiers[b_star];
        let tag_ok = v.g.eval(&self.codec.encode(&pick(sequence, &view.challenge))?)? == v.tag;
        let keep = complement(view.n, &[&view.challenge]);
        let pad_ok = view.pad.xor(&view.f.eval(&self.codec.encode(&pick(sequence, &keep))?)?)? == *message;
        Ok(RevealVerdict { typical, tag_ok, pad_ok })
    }

    pub fn marginal(&self, b: usize) -> &Dmc {
        &self.marginals[b]
    }
}

/// Monte Carlo reveals with the adjudicating verifier drawn uniformly from
/// `available`. A dishonest bidder reveals its true sequence with one message
/// bit flipped; `success` then means it was accepted.
pub fn broadcast_trials(
    protocol: &BroadcastProtocol,
    trials: usize,
    master: u64,
    available: &[usize],
    dishonest: bool,
) -> Result<AttackReport> {
    if available.is_empty() {
        return Err(Error::InvalidParameter("no verifier left to adjudicate".into()));
    }
    if dishonest && protocol.rate() == 0 {
        return Err(Error::InvalidParameter("a zero-rate commitment has no message to lie about".into()));
    }
    let outcomes = run_trials(trials, |t| {
        let seed = trial_seed(master, t);
        let message = random_message(protocol.rate(), &mut role_rng(seed, Role::Messages));
        let (state, view) = protocol.commit(&message, seed)?;
        let b_star = BroadcastProtocol::choose_verifier(available, &mut role_rng(seed, Role::Adjudication))?;
        let mut claimed = message.clone();
        if dishonest {
            claimed.flip(0);
        }
        let v = protocol.reveal(&view, &state.sequence, &claimed, available, b_star)?;
        Ok(TrialOutcome {
            accepted: v.accepted(),
            typical: v.typical,
            tag_ok: v.tag_ok,
            pad_ok: v.pad_ok,
            success: v.accepted(),
            statistic: view.pad.hamming_distance(&message)?,
        })
    })?;
    let name = if dishonest { "broadcast-dishonest" } else { "broadcast-honest" };
    Ok(AttackReport::from_outcomes(name.into(), outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{Collusion, Constraint, InputDistribution};
    use crate::channel::{catalog, MacChannel};
    use crate::protocol::{calibrated_eps, random_message, trial_seed, MacProtocol, RevealClaim};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn twin(n: usize) -> BroadcastProtocol {
        let w1 = catalog::first_input_frozen();
        let bc = BroadcastChannel::product(&[w1.clone(), w1]).unwrap();
        let p = Pmf::uniform(2).unwrap();
        let eps = calibrated_eps(&BroadcastProtocol::typicality_targets(&bc, &p).unwrap(), n).unwrap();
        BroadcastProtocol::with_selected_rate(bc, p, ProtocolParams::new(n, eps)).unwrap()
    }

    #[test]
    fn single_verifier_matches_point_to_point_mac() {
        let w1 = catalog::first_input_frozen();
        let p = Pmf::uniform(2).unwrap();
        let params = ProtocolParams::new(1000, 0.05);
        let bc = BroadcastProtocol::with_selected_rate(BroadcastChannel::product(std::slice::from_ref(&w1)).unwrap(), p.clone(), params)
            .unwrap();
        let mac = MacChannel::new(vec![2], w1).unwrap();
        let input = InputDistribution::product(&[p]).unwrap();
        let pp = MacProtocol::new(mac, input, Collusion::NonColluding, params, vec![bc.rate()]).unwrap();
        let msg = random_message(bc.rate(), &mut ChaCha20Rng::seed_from_u64(1));
        let (bs, bv) = bc.commit(&msg, 77).unwrap();
        let (ms, mv) = pp.commit(&[msg], 77).unwrap();
        assert_eq!(bs.sequence, ms[0].sequence);
        assert_eq!(bv.ys[0], mv.y);
        assert_eq!(bv.challenge, mv.bidders[0].challenge);
        assert_eq!(bv.verifiers[0].g, mv.bidders[0].g);
        assert_eq!(bv.verifiers[0].tag, mv.bidders[0].tag);
        assert_eq!(bv.f, mv.bidders[0].f);
        assert_eq!(bv.pad, mv.bidders[0].pad);
        let a = bc.reveal(&bv, &bs.sequence, &bs.message, &[0], 0).unwrap();
        let b = pp.reveal(&mv, &RevealClaim::honest(&ms)).unwrap();
        assert_eq!(a, b[0]);
    }

    #[test]
    fn honest_reveal_passes_hash_checks_at_every_verifier() {
        let p = twin(2000);
        assert!(p.rate() > 0);
        let msg = random_message(p.rate(), &mut ChaCha20Rng::seed_from_u64(2));
        let (s, v) = p.commit(&msg, 3).unwrap();
        for b in 0..2 {
            let verdict = p.reveal(&v, &s.sequence, &s.message, &[0, 1], b).unwrap();
            assert!(verdict.tag_ok && verdict.pad_ok);
        }
    }

    #[test]
    fn dishonest_message_is_rejected_everywhere() {
        let p = twin(1000);
        for t in 0..20 {
            let seed = trial_seed(4, t);
            let msg = random_message(p.rate(), &mut role_rng(seed, Role::Messages));
            let (s, v) = p.commit(&msg, seed).unwrap();
            let mut lie = s.message.clone();
            lie.flip(t as usize % p.rate());
            for b in 0..2 {
                assert!(!p.reveal(&v, &s.sequence, &lie, &[b], b).unwrap().accepted());
            }
        }
    }

    #[test]
    fn reveal_requires_an_available_verifier() {
        let p = twin(500);
        let msg = BitString::zeros(p.rate());
        let (s, v) = p.commit(&msg, 5).unwrap();
        assert!(p.reveal(&v, &s.sequence, &msg, &[], 0).is_err());
        assert!(p.reveal(&v, &s.sequence, &msg, &[1], 0).is_err());
        assert!(p.reveal(&v, &s.sequence, &msg, &[2], 2).is_err());
        assert!(BroadcastProtocol::choose_verifier(&[], &mut ChaCha20Rng::seed_from_u64(0)).is_err());
        let picks: std::collections::BTreeSet<usize> =
            (0..50).map(|i| BroadcastProtocol::choose_verifier(&[0, 1], &mut ChaCha20Rng::seed_from_u64(i)).unwrap()).collect();
        assert_eq!(picks.len(), 2);
    }

    #[test]
    fn trials_by_single_survivors() {
        let p = twin(1000);
        let liar = broadcast_trials(&p, 30, 1, &[1], true).unwrap();
        assert_eq!(liar.successes, 0);
        assert!(liar.outcomes.iter().all(|o| !o.pad_ok && o.tag_ok));
        let honest = broadcast_trials(&p, 30, 1, &[0, 1], false).unwrap();
        assert!(honest.outcomes.iter().all(|o| o.tag_ok && o.pad_ok));
        assert!(broadcast_trials(&p, 1, 1, &[], false).is_err());
    }

    #[test]
    fn rate_is_refused_above_budget() {
        let w1 = catalog::first_input_frozen();
        let bc = BroadcastChannel::product(&[w1.clone(), Dmc::identity(2).unwrap()]).unwrap();
        let p = Pmf::uniform(2).unwrap();
        let params = ProtocolParams::new(2000, 0.05);
        // a noiseless verifier leaves nothing to extract
        assert_eq!(select_broadcast_rate(&bc, &p, &params).unwrap().0, 0);
        assert!(matches!(BroadcastProtocol::new(bc, p, params, 10), Err(Error::RateAboveBudget { .. })));
        let _ = Constraint::Joint;
    }
}
