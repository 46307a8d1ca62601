//! In-memory session runner.
//!
//! Messages are encoded to bytes on every hop and decoded on delivery, so
//! the simulated links carry exactly what a socket would. A [`Wiretap`] sees
//! every frame on both links before it is delivered.

use std::collections::VecDeque;

use thiserror::Error;

use crate::actors::{
    Applicant, Authenticator, Credentials, Decision, Hop, ProtocolError, Server, ServerContext,
    Side,
};
use crate::crypto::{ChallengeSource, CryptoError, IdByte, Timestamp};
use crate::protocol::{decode_message, encode_message, DecodeError, Message, ProtocolVariant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub hop: Hop,
    pub message: Message,
    pub capture_time: Timestamp,
}

/// Everything a passive eavesdropper on both links saw, in causal order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub variant: ProtocolVariant,
    pub entries: Vec<TranscriptEntry>,
}

/// Entries in a complete session: `Start` on both links, the identity
/// request on one, then identity, challenge, response and verdict on both.
pub const COMPLETE_SESSION_ENTRIES: usize = 11;

impl Transcript {
    pub fn new(variant: ProtocolVariant) -> Self {
        Self {
            variant,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter().map(|e| &e.message)
    }

    pub fn on_hop(&self, hop: Hop) -> impl Iterator<Item = &Message> {
        self.entries
            .iter()
            .filter(move |e| e.hop == hop)
            .map(|e| &e.message)
    }

    /// Encoded frames in capture order.
    pub fn wire_bytes(&self) -> Vec<Vec<u8>> {
        self.messages().map(encode_message).collect()
    }

    /// Verdict the server sent, if the capture got that far.
    pub fn verdict(&self) -> Option<bool> {
        self.on_hop(Hop::ServerToAuth).find_map(|m| match m {
            Message::Verdict { accept } => Some(*accept),
            _ => None,
        })
    }
}

/// Passive observer of link traffic.
pub trait Wiretap {
    fn capture(&mut self, hop: Hop, message: &Message, at: Timestamp);
}

impl Wiretap for Transcript {
    fn capture(&mut self, hop: Hop, message: &Message, at: Timestamp) {
        self.entries.push(TranscriptEntry {
            hop,
            message: message.clone(),
            capture_time: at,
        });
    }
}

/// A tap that records nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTap;

impl Wiretap for NoTap {
    fn capture(&mut self, _: Hop, _: &Message, _: Timestamp) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub variant: ProtocolVariant,
    /// Challenge entropy; 128 outside of attack experiments.
    pub entropy_bits: u32,
    pub rng_seed: u64,
    /// ID the authenticator assigns to this session.
    pub id: IdByte,
}

impl SessionConfig {
    pub fn new(variant: ProtocolVariant, rng_seed: u64) -> Self {
        Self {
            variant,
            entropy_bits: 128,
            rng_seed,
            id: IdByte(1),
        }
    }

    pub fn challenge_source(&self) -> Result<ChallengeSource, CryptoError> {
        ChallengeSource::new(self.entropy_bits, Some(self.rng_seed))
    }
}

#[derive(Debug, Error)]
pub enum SessionFailure {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Config(#[from] CryptoError),
    #[error("session ended without a verdict")]
    NoVerdict,
}

/// A failed session together with whatever the tap captured before it failed.
#[derive(Debug, Error)]
#[error("session failed after {} captured messages: {failure}", partial.len())]
pub struct SessionError {
    pub failure: SessionFailure,
    pub partial: Transcript,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionOutcome {
    pub verdict: bool,
    pub decision: Option<Decision>,
    pub transcript: Transcript,
}

/// Frames exchanged in a session, returned by the untranscribed runner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireRecord {
    pub verdict: bool,
    pub decision: Option<Decision>,
    pub frames: Vec<(Hop, Vec<u8>)>,
}

/// Runs one session to completion, capturing both links.
pub fn run_session(
    config: &SessionConfig,
    credentials: &Credentials,
    ctx: &ServerContext<'_>,
) -> Result<SessionOutcome, SessionError> {
    let mut transcript = Transcript::new(config.variant);
    match drive(config, credentials, ctx, &mut transcript) {
        Ok(w) => Ok(SessionOutcome {
            verdict: w.verdict,
            decision: w.decision,
            transcript,
        }),
        Err(failure) => Err(SessionError {
            failure,
            partial: transcript,
        }),
    }
}

/// Runs one session with a caller-supplied tap.
pub fn run_session_with_tap(
    config: &SessionConfig,
    credentials: &Credentials,
    ctx: &ServerContext<'_>,
    tap: &mut dyn Wiretap,
) -> Result<WireRecord, SessionFailure> {
    drive(config, credentials, ctx, tap)
}

fn drive(
    config: &SessionConfig,
    credentials: &Credentials,
    ctx: &ServerContext<'_>,
    tap: &mut dyn Wiretap,
) -> Result<WireRecord, SessionFailure> {
    let mut applicant = Applicant::new(config.variant, credentials.clone());
    let mut relay = Authenticator::new(config.id);
    let mut server = Server::new(config.variant, config.challenge_source()?);

    let mut in_flight: VecDeque<(Hop, Vec<u8>)> = VecDeque::new();
    let mut frames = Vec::new();

    if let Some(m) = applicant.step(None, ctx.clock)? {
        in_flight.push_back((Hop::ApplicantToAuth, encode_message(&m)));
    }

    while let Some((hop, bytes)) = in_flight.pop_front() {
        let message = decode_message(&bytes)?;
        tap.capture(hop, &message, ctx.clock.now());
        frames.push((hop, bytes));

        match hop {
            Hop::ApplicantToAuth | Hop::ServerToAuth => {
                let from = if hop == Hop::ApplicantToAuth {
                    Side::Applicant
                } else {
                    Side::Server
                };
                for (next, m) in relay.on_message(from, &message)? {
                    in_flight.push_back((next, encode_message(&m)));
                }
            }
            Hop::AuthToServer => {
                if let Some(m) = server.step(&message, ctx)? {
                    in_flight.push_back((Hop::ServerToAuth, encode_message(&m)));
                }
            }
            Hop::AuthToApplicant => {
                if let Some(m) = applicant.step(Some(&message), ctx.clock)? {
                    in_flight.push_back((Hop::ApplicantToAuth, encode_message(&m)));
                }
            }
        }
    }

    let verdict = applicant.verdict().ok_or(SessionFailure::NoVerdict)?;
    Ok(WireRecord {
        verdict,
        decision: server.decision(),
        frames,
    })
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("transcript has no applicant {0} to replay")]
    Incomplete(&'static str),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOutcome {
    pub verdict: bool,
    pub decision: Option<Decision>,
}

/// Re-delivers the applicant's captured messages, unchanged, to a fresh
/// server session sharing `ctx` with the original.
///
/// `challenges` is the new session's nonce source. Passing a source seeded
/// like the original session's makes the server reissue the same challenge,
/// which isolates the freshness defence from the nonce itself.
pub fn replay_session(
    original: &Transcript,
    ctx: &ServerContext<'_>,
    challenges: ChallengeSource,
) -> Result<ReplayOutcome, ReplayError> {
    let sent: Vec<&Message> = original.on_hop(Hop::ApplicantToAuth).collect();
    let start = sent
        .iter()
        .find(|m| matches!(m, Message::Start))
        .ok_or(ReplayError::Incomplete("start request"))?;
    let identity = sent
        .iter()
        .find(|m| matches!(m, Message::IdentityResponse { .. }))
        .ok_or(ReplayError::Incomplete("identity response"))?;
    let response = sent
        .iter()
        .find(|m| {
            matches!(
                m,
                Message::BaselineResponse { .. } | Message::HardenedResponse { .. }
            )
        })
        .ok_or(ReplayError::Incomplete("challenge response"))?;

    let mut server = Server::new(original.variant, challenges);
    for m in [start, identity, response] {
        // An unknown user or mismatch ends the session early with a verdict.
        if server.verdict().is_some() {
            break;
        }
        server.step(m, ctx)?;
    }
    Ok(ReplayOutcome {
        verdict: server.verdict().unwrap_or(false),
        decision: server.decision(),
    })
}
