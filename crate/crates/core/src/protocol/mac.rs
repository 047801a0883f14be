//! The multiple-access scheme.

use serde::{Deserialize, Serialize};

use super::{
    check_rates, check_sequence, codec_for, complement, pick, rate_budgets, role_rng, sample_positions,
    ProtocolParams, RateSelection, RevealVerdict, Role,
};
use crate::capacity::{Collusion, InputDistribution};
use crate::channel::{sample_index, MacChannel};
use crate::error::{Error, Result};
use crate::hashing::{BitString, LinearHash, SymbolCodec};
use crate::infotheory::JointPmf;
use crate::typicality::jointly_typical;

/// Everything a bidder holds after committing.
#[derive(Debug, Clone, PartialEq)]
pub struct BidderState {
    pub message: BitString,
    pub sequence: Vec<usize>,
    /// Sorted challenge positions.
    pub challenge: Vec<usize>,
    /// The sequence outside every bidder's challenge set.
    pub retained: Vec<usize>,
    pub g: LinearHash,
    pub f: LinearHash,
}

/// What the verifier learns about one bidder during the commit phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidderView {
    pub g: LinearHash,
    pub challenge: Vec<usize>,
    pub tag: BitString,
    pub f: LinearHash,
    pub pad: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierView {
    pub n: usize,
    pub nbar: usize,
    pub y: Vec<usize>,
    pub bidders: Vec<BidderView>,
}

impl VerifierView {
    /// Positions outside every challenge set, in increasing order.
    pub fn retained_positions(&self) -> Vec<usize> {
        let sets: Vec<&[usize]> = self.bidders.iter().map(|b| b.challenge.as_slice()).collect();
        complement(self.n, &sets)
    }

    /// All pads concatenated in bidder order.
    pub fn pads(&self) -> BitString {
        let mut out = BitString::zeros(0);
        for b in &self.bidders {
            out.extend(&b.pad);
        }
        out
    }
}

/// Sequences and messages disclosed at reveal, one per bidder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevealClaim {
    pub sequences: Vec<Vec<usize>>,
    pub messages: Vec<BitString>,
}

impl RevealClaim {
    pub fn honest(states: &[BidderState]) -> Self {
        RevealClaim {
            sequences: states.iter().map(|s| s.sequence.clone()).collect(),
            messages: states.iter().map(|s| s.message.clone()).collect(),
        }
    }
}

/// A configured multiple-access scheme: channel, input law, collusion
/// model, parameters and per-bidder rates.
#[derive(Debug, Clone, PartialEq)]
pub struct MacProtocol {
    channel: MacChannel,
    input: InputDistribution,
    mode: Collusion,
    params: ProtocolParams,
    rates: Vec<usize>,
    selection: RateSelection,
    codecs: Vec<SymbolCodec>,
    targets: Vec<JointPmf>,
}

impl MacProtocol {
    /// Refuses rates above the budgets that [`super::select_rates`] enforces.
    pub fn new(
        channel: MacChannel,
        input: InputDistribution,
        mode: Collusion,
        params: ProtocolParams,
        rates: Vec<usize>,
    ) -> Result<Self> {
        params.validate()?;
        if input.sizes() != channel.input_sizes() {
            return Err(Error::DimensionMismatch { expected: channel.product_size(), found: input.joint_pmf().len() });
        }
        if mode == Collusion::NonColluding {
            InputDistribution::flagged_product(input.sizes().to_vec(), input.joint_pmf().clone())?;
        }
        let selection = rate_budgets(&channel, &input, &params)?;
        check_rates(&selection, &rates)?;
        let codecs = channel
            .input_sizes()
            .iter()
            .enumerate()
            .map(|(l, k)| codec_for(*k, &format!("bidder {}", l + 1)))
            .collect::<Result<Vec<_>>>()?;
        if params.tag_bits() > params.challenge_size() {
            return Err(Error::InvalidParameter("tag longer than the challenged input".into()));
        }
        let targets = Self::typicality_targets(&channel, &input, mode)?;
        Ok(MacProtocol { channel, input, mode, params, rates, selection, codecs, targets })
    }

    /// Builds the scheme with rates from [`super::select_rates`].
    pub fn with_selected_rates(
        channel: MacChannel,
        input: InputDistribution,
        mode: Collusion,
        params: ProtocolParams,
    ) -> Result<(Self, RateSelection)> {
        let sel = super::select_rates(&channel, &input, &params)?;
        let protocol = MacProtocol::new(channel, input, mode, params, sel.rates.clone())?;
        Ok((protocol, sel))
    }

    /// Laws the verifier tests typicality against: one joint law when
    /// colluding, one `q_{X_ℓ Y}` per bidder otherwise.
    pub fn typicality_targets(channel: &MacChannel, input: &InputDistribution, mode: Collusion) -> Result<Vec<JointPmf>> {
        match mode {
            Collusion::Colluding => Ok(vec![channel.flat().joint(input.joint_pmf())?]),
            Collusion::NonColluding => (0..channel.users()).map(|l| user_joint(channel, input, l)).collect(),
        }
    }

    pub fn channel(&self) -> &MacChannel {
        &self.channel
    }

    pub fn input(&self) -> &InputDistribution {
        &self.input
    }

    pub fn mode(&self) -> Collusion {
        self.mode
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn rates(&self) -> &[usize] {
        &self.rates
    }

    pub fn users(&self) -> usize {
        self.channel.users()
    }

    pub fn codec(&self, user: usize) -> SymbolCodec {
        self.codecs[user]
    }

    pub fn selection(&self) -> &RateSelection {
        &self.selection
    }

    /// Certified `(distance, bits)` bound on what the commit reveals.
    pub fn certified_leakage(&self) -> Result<(f64, f64)> {
        super::certified_leakage(&self.selection, &self.rates, self.params.security)
    }

    /// Draws a fresh input tuple sequence for all bidders from the input law.
    pub(crate) fn draw_joint<R: rand::Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<Vec<usize>> {
        let flat: Vec<usize> = (0..len).map(|_| sample_index(self.input.joint_pmf().probs(), rng)).collect();
        self.split(&flat)
    }

    pub(crate) fn draw_user<R: rand::Rng + ?Sized>(&self, user: usize, len: usize, rng: &mut R) -> Vec<usize> {
        let marginal = self.input.marginal(user);
        (0..len).map(|_| sample_index(marginal.probs(), rng)).collect()
    }

    fn split(&self, flat: &[usize]) -> Vec<Vec<usize>> {
        (0..self.users()).map(|l| flat.iter().map(|x| self.channel.user_symbol(*x, l)).collect()).collect()
    }

    fn flatten(&self, sequences: &[Vec<usize>]) -> Result<Vec<usize>> {
        (0..self.params.n)
            .map(|i| {
                let symbols: Vec<usize> = sequences.iter().map(|s| s[i]).collect();
                self.channel.index_of(&symbols)
            })
            .collect()
    }

    /// Runs the commit phase under run seed `seed`.
    pub fn commit(&self, messages: &[BitString], seed: u64) -> Result<(Vec<BidderState>, VerifierView)> {
        let l = self.users();
        let n = self.params.n;
        if messages.len() != l {
            return Err(Error::DimensionMismatch { expected: l, found: messages.len() });
        }
        for (m, r) in messages.iter().zip(&self.rates) {
            if m.len() != *r {
                return Err(Error::DimensionMismatch { expected: *r, found: m.len() });
            }
        }
        let mut bidder_rngs: Vec<_> = (0..l).map(|b| role_rng(seed, Role::Bidder(b))).collect();

        // the bidders' inputs go over the channel
        let sequences = match self.mode {
            Collusion::Colluding => self.draw_joint(n, &mut role_rng(seed, Role::Coalition)),
            Collusion::NonColluding => (0..l).map(|b| self.draw_user(b, n, &mut bidder_rngs[b])).collect(),
        };
        let flat = self.flatten(&sequences)?;
        let y = self.channel.flat().sample_sequence(&flat, &mut role_rng(seed, Role::Channel))?;

        // the verifier picks the challenge hashes
        let mut verifier = role_rng(seed, Role::Verifier);
        let k = self.params.challenge_size();
        let gs = (0..l)
            .map(|b| LinearHash::draw(&mut verifier, k * self.codecs[b].width(), self.params.tag_bits()))
            .collect::<Result<Vec<_>>>()?;

        // challenge sets and tags
        let challenges: Vec<Vec<usize>> = bidder_rngs.iter_mut().map(|rng| sample_positions(rng, n, k)).collect();
        let tags = (0..l)
            .map(|b| gs[b].eval(&self.codecs[b].encode(&pick(&sequences[b], &challenges[b]))?))
            .collect::<Result<Vec<_>>>()?;

        // extractors and pads over the positions nobody challenged
        let sets: Vec<&[usize]> = challenges.iter().map(Vec::as_slice).collect();
        let keep = complement(n, &sets);
        let nbar = keep.len();
        let mut states = Vec::with_capacity(l);
        let mut views = Vec::with_capacity(l);
        for b in 0..l {
            let retained = pick(&sequences[b], &keep);
            let f = LinearHash::draw(&mut bidder_rngs[b], nbar * self.codecs[b].width(), self.rates[b])?;
            let pad = messages[b].xor(&f.eval(&self.codecs[b].encode(&retained)?)?)?;
            views.push(BidderView {
                g: gs[b].clone(),
                challenge: challenges[b].clone(),
                tag: tags[b].clone(),
                f: f.clone(),
                pad,
            });
            states.push(BidderState {
                message: messages[b].clone(),
                sequence: sequences[b].clone(),
                challenge: challenges[b].clone(),
                retained,
                g: gs[b].clone(),
                f,
            });
        }
        Ok((states, VerifierView { n, nbar, y, bidders: views }))
    }

    /// Checks that `view` has the shape this scheme produces.
    pub fn check_view(&self, view: &VerifierView) -> Result<()> {
        let l = self.users();
        let n = self.params.n;
        if view.n != n || view.y.len() != n || view.bidders.len() != l {
            return Err(Error::MalformedClaim("view does not match the protocol dimensions".into()));
        }
        if view.y.iter().any(|y| *y >= self.channel.output_size()) {
            return Err(Error::MalformedClaim("channel output outside the output alphabet".into()));
        }
        if view.retained_positions().len() != view.nbar {
            return Err(Error::MalformedClaim("retained length disagrees with the challenge sets".into()));
        }
        let k = self.params.challenge_size();
        for (b, v) in view.bidders.iter().enumerate() {
            let w = self.codecs[b].width();
            let sorted = v.challenge.windows(2).all(|p| p[0] < p[1]);
            if v.challenge.len() != k || !sorted || v.challenge.last().is_some_and(|i| *i >= n) {
                return Err(Error::MalformedClaim(format!("bidder {}: bad challenge set", b + 1)));
            }
            if v.g.input_len() != k * w || v.g.output_len() != self.params.tag_bits() || v.tag.len() != v.g.output_len() {
                return Err(Error::MalformedClaim(format!("bidder {}: challenge hash shape", b + 1)));
            }
            if v.f.input_len() != view.nbar * w || v.f.output_len() != self.rates[b] || v.pad.len() != self.rates[b] {
                return Err(Error::MalformedClaim(format!("bidder {}: extractor shape", b + 1)));
            }
        }
        Ok(())
    }

    /// Runs the three reveal tests for every bidder.
    pub fn reveal(&self, view: &VerifierView, claim: &RevealClaim) -> Result<Vec<RevealVerdict>> {
        self.check_view(view)?;
        let l = self.users();
        if claim.sequences.len() != l || claim.messages.len() != l {
            return Err(Error::MalformedClaim(format!("claim must cover all {l} bidders")));
        }
        for b in 0..l {
            check_sequence(&claim.sequences[b], view.n, self.channel.input_sizes()[b], &format!("bidder {}", b + 1))?;
            if claim.messages[b].len() != self.rates[b] {
                return Err(Error::MalformedClaim(format!(
                    "bidder {}: message of {} bits, committed rate {}",
                    b + 1,
                    claim.messages[b].len(),
                    self.rates[b]
                )));
            }
        }
        let eps = self.params.eps;
        let joint_typical = match self.mode {
            Collusion::Colluding => Some(jointly_typical(&self.flatten(&claim.sequences)?, &view.y, &self.targets[0], eps)?),
            Collusion::NonColluding => None,
        };
        let keep = view.retained_positions();
        (0..l)
            .map(|b| {
                let v = &view.bidders[b];
                let xs = &claim.sequences[b];
                let typical = match joint_typical {
                    Some(t) => t,
                    None => jointly_typical(xs, &view.y, &self.targets[b], eps)?,
                };
                let tag_ok = v.g.eval(&self.codecs[b].encode(&pick(xs, &v.challenge))?)? == v.tag;
                let extracted = v.f.eval(&self.codecs[b].encode(&pick(xs, &keep))?)?;
                let pad_ok = v.pad.xor(&extracted)? == claim.messages[b];
                Ok(RevealVerdict { typical, tag_ok, pad_ok })
            })
            .collect()
    }

    /// `E_ℓ ⊕ F_ℓ(x̄_ℓ)`: the message a claimed sequence would open to.
    pub fn opened_message(&self, view: &VerifierView, user: usize, sequence: &[usize]) -> Result<BitString> {
        let v = &view.bidders[user];
        let retained = pick(sequence, &view.retained_positions());
        v.pad.xor(&v.f.eval(&self.codecs[user].encode(&retained)?)?)
    }
}

/// `q_{X_ℓ Y}` under the input law.
fn user_joint(channel: &MacChannel, input: &InputDistribution, user: usize) -> Result<JointPmf> {
    let k = channel.input_sizes()[user];
    let ny = channel.output_size();
    let mut probs = vec![0.0; k * ny];
    for x in 0..channel.product_size() {
        let px = input.joint_pmf().get(x);
        let a = channel.user_symbol(x, user);
        for (y, w) in channel.flat().row(x).iter().enumerate() {
            probs[a * ny + y] += px * w;
        }
    }
    JointPmf::new(k, ny, probs)
}
