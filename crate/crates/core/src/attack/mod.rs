//! Offline attacks against captured transcripts.
//!
//! Cost is counted in MD5 invocations; XORs are free. All three engines
//! walk the dictionary in order and stop at the first candidate that
//! verifies, so the reported count is "evaluations until first match".
//!
//! - [`baseline_dictionary_attack`]: the classic EAP-MD5 attack. Everything
//!   but the password is on the wire, so each guess costs one hash.
//! - [`hardened_challenge_bruteforce`]: for each guess, searches the whole
//!   (reduced) challenge space for one that reproduces the captured
//!   `Request`, then checks the response.
//! - [`hardened_transcript_probe`]: unmasks `C` from the captured `Request`
//!   with the guessed password and checks `MD5(C ⊕ TimeStamp)` against the
//!   captured response. One hash per guess, no challenge search.

mod search;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::crypto::{
    md5_digest, pad_password, widen_id, widen_timestamp, xor128, Block, Challenge, Digest128,
    IdByte, Password, Timestamp,
};
use crate::harness::Transcript;
use crate::protocol::{baseline_response, make_response, Message, ProtocolVariant};

pub use self::search::{search, SearchResult};

pub const DEFAULT_ENTROPY_CAP: u32 = 24;

/// Ordered candidate passwords. Order matters: cost is measured up to the
/// first match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    words: Vec<Password>,
}

impl Dictionary {
    pub fn new(words: Vec<Password>) -> Self {
        Self { words }
    }

    pub fn words(&self) -> &[Password] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of the first occurrence of `p`.
    pub fn position(&self, p: &Password) -> Option<usize> {
        self.words.iter().position(|w| w == p)
    }
}

impl FromIterator<Password> for Dictionary {
    fn from_iter<I: IntoIterator<Item = Password>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    BaselineDictionary,
    HardenedChallengeBruteForce,
    HardenedTranscriptProbe,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::BaselineDictionary => "dictionary",
            Strategy::HardenedChallengeBruteForce => "challenge-bruteforce",
            Strategy::HardenedTranscriptProbe => "transcript-probe",
        }
    }

    pub fn target_variant(self) -> ProtocolVariant {
        match self {
            Strategy::BaselineDictionary => ProtocolVariant::Baseline,
            _ => ProtocolVariant::Hardened,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dictionary" => Ok(Strategy::BaselineDictionary),
            "challenge-bruteforce" => Ok(Strategy::HardenedChallengeBruteForce),
            "transcript-probe" => Ok(Strategy::HardenedTranscriptProbe),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackReport {
    pub strategy: Strategy,
    pub found: Option<Password>,
    /// Dictionary index of `found`.
    pub index: Option<usize>,
    pub hash_evaluations: u64,
    pub elapsed_millis: u64,
    pub entropy_bits: Option<u32>,
}

pub const CSV_HEADER: &str = "strategy,found,index,hash_evaluations,elapsed_millis,entropy_bits";

impl AttackReport {
    /// Single-line `key=value` record.
    pub fn to_record(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".to_owned());
        format!(
            "strategy={} found={} index={} password_hex={} hash_evaluations={} elapsed_millis={} entropy_bits={}",
            self.strategy,
            self.found.is_some(),
            opt(self.index.map(|i| i.to_string())),
            opt(self.found.as_ref().map(|p| hex::encode(p.as_bytes()))),
            self.hash_evaluations,
            self.elapsed_millis,
            opt(self.entropy_bits.map(|b| b.to_string())),
        )
    }

    /// CSV row matching [`CSV_HEADER`]; absent values are empty fields.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.strategy,
            self.found.is_some(),
            self.index.map(|i| i.to_string()).unwrap_or_default(),
            self.hash_evaluations,
            self.elapsed_millis,
            self.entropy_bits.map(|b| b.to_string()).unwrap_or_default(),
        )
    }

    /// Same outcome, ignoring wall-clock time.
    pub fn same_result(&self, other: &AttackReport) -> bool {
        self.strategy == other.strategy
            && self.found == other.found
            && self.index == other.index
            && self.hash_evaluations == other.hash_evaluations
            && self.entropy_bits == other.entropy_bits
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("{strategy} needs a {expected} transcript, got {got}")]
    VariantMismatch {
        strategy: Strategy,
        expected: ProtocolVariant,
        got: ProtocolVariant,
    },
    #[error("transcript has no {0} message")]
    MissingMessage(&'static str),
    #[error("challenge entropy {bits} is outside 1..={cap}")]
    EntropyOutOfRange { bits: u32, cap: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackOptions {
    /// Worker threads. Results do not depend on this.
    pub jobs: usize,
    /// Largest challenge entropy the brute force will attempt.
    pub entropy_cap: u32,
}

impl Default for AttackOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            entropy_cap: DEFAULT_ENTROPY_CAP,
        }
    }
}

/// Values a baseline eavesdropper holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineTarget {
    pub id_plus1: IdByte,
    pub challenge: Challenge,
    pub digest: Digest128,
}

/// Values a hardened-variant eavesdropper holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardenedTarget {
    pub id: IdByte,
    pub request: Block,
    pub digest: Digest128,
    pub timestamp: Timestamp,
}

fn require_variant(
    t: &Transcript,
    strategy: Strategy,
) -> Result<(), AttackError> {
    let expected = strategy.target_variant();
    if t.variant != expected {
        return Err(AttackError::VariantMismatch {
            strategy,
            expected,
            got: t.variant,
        });
    }
    Ok(())
}

impl BaselineTarget {
    pub fn from_transcript(t: &Transcript) -> Result<Self, AttackError> {
        require_variant(t, Strategy::BaselineDictionary)?;
        let (id_plus1, challenge) = t
            .messages()
            .find_map(|m| match m {
                Message::ChallengePlain {
                    id_plus1,
                    challenge,
                } => Some((*id_plus1, *challenge)),
                _ => None,
            })
            .ok_or(AttackError::MissingMessage("ChallengePlain"))?;
        let digest = t
            .messages()
            .find_map(|m| match m {
                Message::BaselineResponse { digest } => Some(*digest),
                _ => None,
            })
            .ok_or(AttackError::MissingMessage("BaselineResponse"))?;
        Ok(Self {
            id_plus1,
            challenge,
            digest,
        })
    }
}

impl HardenedTarget {
    pub fn from_transcript(t: &Transcript, strategy: Strategy) -> Result<Self, AttackError> {
        require_variant(t, strategy)?;
        let (id, request) = t
            .messages()
            .find_map(|m| match m {
                Message::ChallengeMasked { id, request } => Some((*id, *request)),
                _ => None,
            })
            .ok_or(AttackError::MissingMessage("ChallengeMasked"))?;
        let (digest, timestamp) = t
            .messages()
            .find_map(|m| match m {
                Message::HardenedResponse { digest, timestamp } => Some((*digest, *timestamp)),
                _ => None,
            })
            .ok_or(AttackError::MissingMessage("HardenedResponse"))?;
        Ok(Self {
            id,
            request,
            digest,
            timestamp,
        })
    }
}

fn report(
    strategy: Strategy,
    d: &Dictionary,
    started: Instant,
    result: SearchResult,
    entropy_bits: Option<u32>,
) -> AttackReport {
    AttackReport {
        strategy,
        found: result.index.map(|i| d.words()[i].clone()),
        index: result.index,
        hash_evaluations: result.evaluations,
        elapsed_millis: started.elapsed().as_millis() as u64,
        entropy_bits,
    }
}

/// One candidate against a baseline capture: a single hash.
pub fn check_baseline_candidate(target: &BaselineTarget, p: &Password) -> (bool, u64) {
    let hit = baseline_response(target.id_plus1, p, &target.challenge) == target.digest;
    (hit, 1)
}

/// One candidate against a hardened capture, searching challenges
/// `0..2^entropy_bits` in ascending order.
///
/// Each challenge costs one hash to form `MD5(ID ⊕ Challenge) ⊕ p`; a
/// challenge that reproduces the captured `Request` costs one more hash to
/// check the response.
pub fn check_bruteforce_candidate(
    target: &HardenedTarget,
    entropy_bits: u32,
    p: &Password,
) -> (bool, u64) {
    let mask = pad_password(p);
    let id = widen_id(target.id);
    let ts = widen_timestamp(target.timestamp);
    let space: u128 = 1u128 << entropy_bits;
    let mut evaluations = 0u64;
    for value in 0..space {
        let challenge = Challenge::from_u128(value);
        let c = md5_digest(&xor128(&id, challenge.as_bytes()));
        evaluations += 1;
        if xor128(c.as_bytes(), &mask) != target.request {
            continue;
        }
        evaluations += 1;
        if md5_digest(&xor128(c.as_bytes(), &ts)) == target.digest {
            return (true, evaluations);
        }
    }
    (false, evaluations)
}

/// One candidate against a hardened capture using only wire values.
pub fn check_probe_candidate(target: &HardenedTarget, p: &Password) -> (bool, u64) {
    let c = Digest128(xor128(&target.request, &pad_password(p)));
    (make_response(&c, target.timestamp) == target.digest, 1)
}

pub fn baseline_dictionary_attack(
    t: &Transcript,
    d: &Dictionary,
    opts: &AttackOptions,
) -> Result<AttackReport, AttackError> {
    let started = Instant::now();
    let target = BaselineTarget::from_transcript(t)?;
    let result = search(d.words(), opts.jobs, |p| check_baseline_candidate(&target, p));
    Ok(report(Strategy::BaselineDictionary, d, started, result, None))
}

pub fn hardened_challenge_bruteforce(
    t: &Transcript,
    d: &Dictionary,
    entropy_bits: u32,
    opts: &AttackOptions,
) -> Result<AttackReport, AttackError> {
    let started = Instant::now();
    let cap = opts.entropy_cap.min(127);
    if entropy_bits == 0 || entropy_bits > cap {
        return Err(AttackError::EntropyOutOfRange {
            bits: entropy_bits,
            cap,
        });
    }
    let target = HardenedTarget::from_transcript(t, Strategy::HardenedChallengeBruteForce)?;
    let result = search(d.words(), opts.jobs, |p| {
        check_bruteforce_candidate(&target, entropy_bits, p)
    });
    Ok(report(
        Strategy::HardenedChallengeBruteForce,
        d,
        started,
        result,
        Some(entropy_bits),
    ))
}

pub fn hardened_transcript_probe(
    t: &Transcript,
    d: &Dictionary,
    opts: &AttackOptions,
) -> Result<AttackReport, AttackError> {
    let started = Instant::now();
    let target = HardenedTarget::from_transcript(t, Strategy::HardenedTranscriptProbe)?;
    let result = search(d.words(), opts.jobs, |p| check_probe_candidate(&target, p));
    Ok(report(Strategy::HardenedTranscriptProbe, d, started, result, None))
}

/// Dispatches on `strategy`. `entropy_bits` is required for the brute force
/// and ignored otherwise.
pub fn run_attack(
    strategy: Strategy,
    t: &Transcript,
    d: &Dictionary,
    entropy_bits: Option<u32>,
    opts: &AttackOptions,
) -> Result<AttackReport, AttackError> {
    match strategy {
        Strategy::BaselineDictionary => baseline_dictionary_attack(t, d, opts),
        Strategy::HardenedChallengeBruteForce => {
            let bits = entropy_bits.unwrap_or(0);
            hardened_challenge_bruteforce(t, d, bits, opts)
        }
        Strategy::HardenedTranscriptProbe => hardened_transcript_probe(t, d, opts),
    }
}
