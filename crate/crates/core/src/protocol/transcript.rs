//! JSON transcripts that replay bit-exactly through reveal.

use serde::{Deserialize, Serialize};

use super::{BroadcastProtocol, BroadcastView, MacProtocol, ProtocolParams, RevealClaim, RevealVerdict, VerifierChallenge};
use super::{BidderView, VerifierView};
use crate::capacity::{Collusion, InputDistribution};
use crate::channel::{ChannelFile, ChannelKind};
use crate::error::{Error, Result};
use crate::hashing::{BitString, LinearHash, SymbolCodec};
use crate::infotheory::Pmf;

pub const SCHEMA_VERSION: u32 = 1;

/// The hard-coded round structure of every run.
const ROUNDS: [&str; 4] = ["channel:X->Y", "verifier:G", "bidder:S,T", "bidder:F,E"];

/// A symbol sequence packed at `⌈log2 alphabet⌉` bits per symbol, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodedSequence {
    pub alphabet: usize,
    pub len: usize,
    pub hex: String,
}

impl EncodedSequence {
    pub fn encode(symbols: &[usize], alphabet: usize) -> Result<Self> {
        let bits = SymbolCodec::new(alphabet)?.encode(symbols)?;
        Ok(EncodedSequence { alphabet, len: symbols.len(), hex: bits.to_hex() })
    }

    pub fn decode(&self) -> Result<Vec<usize>> {
        let codec = SymbolCodec::new(self.alphabet)?;
        if codec.width() == 0 {
            return Ok(vec![0; self.len]);
        }
        codec.decode(&BitString::from_hex(&self.hex, self.len * codec.width())?)
    }
}

fn rounds() -> Vec<String> {
    ROUNDS.iter().map(|r| r.to_string()).collect()
}

fn check_header(schema_version: u32, kind: &str, expected: &str, rounds: &[String]) -> Result<()> {
    if schema_version != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema version {schema_version}")));
    }
    if kind != expected {
        return Err(Error::Parse(format!("expected a {expected} transcript, found {kind}")));
    }
    if rounds != ROUNDS {
        return Err(Error::Parse("unexpected round structure".into()));
    }
    Ok(())
}

fn parse_mode(s: &str) -> Result<Collusion> {
    match s {
        "colluding" => Ok(Collusion::Colluding),
        "non-colluding" => Ok(Collusion::NonColluding),
        _ => Err(Error::Parse(format!("unknown mode '{s}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacClaimRecord {
    pub sequences: Vec<EncodedSequence>,
    pub messages: Vec<BitString>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacTranscript {
    pub schema_version: u32,
    pub kind: String,
    pub version: String,
    pub rounds: Vec<String>,
    pub mode: String,
    pub params: ProtocolParams,
    pub rates: Vec<usize>,
    pub channel: ChannelFile,
    /// Joint input law over the lexicographic product alphabet.
    pub input: Vec<f64>,
    pub y: EncodedSequence,
    pub nbar: usize,
    pub bidders: Vec<BidderView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<MacClaimRecord>,
}

impl MacTranscript {
    pub fn record(protocol: &MacProtocol, view: &VerifierView, claim: Option<&RevealClaim>) -> Result<Self> {
        let m = protocol.channel();
        let claim = claim
            .map(|c| {
                let sequences = c
                    .sequences
                    .iter()
                    .zip(m.input_sizes())
                    .map(|(s, k)| EncodedSequence::encode(s, *k))
                    .collect::<Result<_>>()?;
                Ok::<_, Error>(MacClaimRecord { sequences, messages: c.messages.clone() })
            })
            .transpose()?;
        Ok(MacTranscript {
            schema_version: SCHEMA_VERSION,
            kind: "mac".into(),
            version: crate::VERSION.into(),
            rounds: rounds(),
            mode: protocol.mode().to_string(),
            params: *protocol.params(),
            rates: protocol.rates().to_vec(),
            channel: ChannelFile::from_dmc(m.flat(), m.input_sizes().to_vec(), vec![m.output_size()]),
            input: protocol.input().joint_pmf().probs().to_vec(),
            y: EncodedSequence::encode(&view.y, m.output_size())?,
            nbar: view.nbar,
            bidders: view.bidders.clone(),
            claim,
        })
    }

    /// Rebuilds the scheme the transcript was produced by.
    pub fn protocol(&self) -> Result<MacProtocol> {
        check_header(self.schema_version, &self.kind, "mac", &self.rounds)?;
        let mode = parse_mode(&self.mode)?;
        let channel = self.channel.to_channel()?.as_mac().ok_or_else(|| Error::Parse("not a MAC channel".into()))?;
        let sizes = channel.input_sizes().to_vec();
        let pmf = Pmf::new(self.input.clone())?;
        let input = match mode {
            Collusion::Colluding => InputDistribution::joint(sizes, pmf)?,
            Collusion::NonColluding => InputDistribution::flagged_product(sizes, pmf)?,
        };
        MacProtocol::new(channel, input, mode, self.params, self.rates.clone())
    }

    pub fn view(&self) -> Result<VerifierView> {
        Ok(VerifierView { n: self.params.n, nbar: self.nbar, y: self.y.decode()?, bidders: self.bidders.clone() })
    }

    pub fn claim(&self) -> Result<Option<RevealClaim>> {
        self.claim
            .as_ref()
            .map(|c| {
                let sequences = c.sequences.iter().map(EncodedSequence::decode).collect::<Result<_>>()?;
                Ok(RevealClaim { sequences, messages: c.messages.clone() })
            })
            .transpose()
    }

    /// Re-runs the reveal tests on the recorded claim.
    pub fn replay(&self) -> Result<Vec<RevealVerdict>> {
        let claim = self.claim()?.ok_or_else(|| Error::Parse("transcript has no reveal claim".into()))?;
        self.protocol()?.reveal(&self.view()?, &claim)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastClaimRecord {
    pub sequence: EncodedSequence,
    pub message: BitString,
    pub available: Vec<usize>,
    pub b_star: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastTranscript {
    pub schema_version: u32,
    pub kind: String,
    pub version: String,
    pub rounds: Vec<String>,
    pub params: ProtocolParams,
    pub rate: usize,
    pub channel: ChannelFile,
    pub input: Vec<f64>,
    pub ys: Vec<EncodedSequence>,
    pub nbar: usize,
    pub challenge: Vec<usize>,
    pub verifiers: Vec<VerifierChallenge>,
    pub f: LinearHash,
    pub pad: BitString,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<BroadcastClaimRecord>,
}

impl BroadcastTranscript {
    pub fn record(
        protocol: &BroadcastProtocol,
        view: &BroadcastView,
        claim: Option<(&[usize], &BitString, &[usize], usize)>,
    ) -> Result<Self> {
        let bc = protocol.channel();
        let claim = claim
            .map(|(x, a, available, b_star)| {
                Ok::<_, Error>(BroadcastClaimRecord {
                    sequence: EncodedSequence::encode(x, bc.input_size())?,
                    message: a.clone(),
                    available: available.to_vec(),
                    b_star,
                })
            })
            .transpose()?;
        Ok(BroadcastTranscript {
            schema_version: SCHEMA_VERSION,
            kind: "broadcast".into(),
            version: crate::VERSION.into(),
            rounds: rounds(),
            params: *protocol.params(),
            rate: protocol.rate(),
            channel: ChannelFile::from_dmc(bc.flat(), vec![bc.input_size()], bc.output_sizes().to_vec()),
            input: protocol.input().probs().to_vec(),
            ys: view
                .ys
                .iter()
                .zip(bc.output_sizes())
                .map(|(y, k)| EncodedSequence::encode(y, *k))
                .collect::<Result<_>>()?,
            nbar: view.nbar,
            challenge: view.challenge.clone(),
            verifiers: view.verifiers.clone(),
            f: view.f.clone(),
            pad: view.pad.clone(),
            claim,
        })
    }

    pub fn protocol(&self) -> Result<BroadcastProtocol> {
        check_header(self.schema_version, &self.kind, "broadcast", &self.rounds)?;
        let bc = match self.channel.to_channel()? {
            ChannelKind::Broadcast(b) => b,
            other => other.as_broadcast().ok_or_else(|| Error::Parse("not a broadcast channel".into()))?,
        };
        BroadcastProtocol::new(bc, Pmf::new(self.input.clone())?, self.params, self.rate)
    }

    pub fn view(&self) -> Result<BroadcastView> {
        Ok(BroadcastView {
            n: self.params.n,
            nbar: self.nbar,
            ys: self.ys.iter().map(EncodedSequence::decode).collect::<Result<_>>()?,
            challenge: self.challenge.clone(),
            verifiers: self.verifiers.clone(),
            f: self.f.clone(),
            pad: self.pad.clone(),
        })
    }

    pub fn replay(&self) -> Result<RevealVerdict> {
        let c = self.claim.as_ref().ok_or_else(|| Error::Parse("transcript has no reveal claim".into()))?;
        self.protocol()?.reveal(&self.view()?, &c.sequence.decode()?, &c.message, &c.available, c.b_star)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }
}
