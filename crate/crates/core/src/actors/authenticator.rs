use crate::crypto::IdByte;
use crate::protocol::{decode_message, encode_message, Message};

use super::{Hop, Phase, ProtocolError, Role};

/// Which neighbour the authenticator is waiting on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Applicant,
    Server,
}

/// Pass-through relay. It originates exactly one message of its own, the
/// `IdentityRequest` carrying the session ID, and forwards everything else.
#[derive(Debug, Clone)]
pub struct Authenticator {
    id: IdByte,
    phase: Phase,
    awaiting: Option<Side>,
}

impl Authenticator {
    pub fn new(id: IdByte) -> Self {
        Self {
            id,
            phase: Phase::Idle,
            awaiting: Some(Side::Applicant),
        }
    }

    pub fn id(&self) -> IdByte {
        self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// `None` once the verdict has been relayed.
    pub fn awaiting(&self) -> Option<Side> {
        self.awaiting
    }

    /// Handles a message arriving from `from` and returns what to send, in
    /// order, tagged with the hop each message takes.
    pub fn on_message(
        &mut self,
        from: Side,
        incoming: &Message,
    ) -> Result<Vec<(Hop, Message)>, ProtocolError> {
        if self.phase == Phase::Aborted {
            return Err(ProtocolError::Aborted {
                role: Role::Authenticator,
            });
        }
        let Some(expected) = self.awaiting else {
            self.phase = Phase::Aborted;
            return Err(ProtocolError::Unexpected {
                role: Role::Authenticator,
                phase: Phase::Done,
                got: incoming.kind(),
            });
        };
        if from != expected {
            self.phase = Phase::Aborted;
            return Err(ProtocolError::WrongSide {
                role: Role::Authenticator,
                expected,
            });
        }

        let out = match (from, incoming) {
            (Side::Applicant, Message::Start) if self.phase == Phase::Idle => {
                self.phase = Phase::AwaitIdentity;
                vec![
                    (Hop::AuthToServer, authenticator_forward(incoming, Hop::AuthToServer)),
                    (Hop::AuthToApplicant, Message::IdentityRequest { id: self.id }),
                ]
            }
            (Side::Applicant, Message::Start) => {
                let phase = std::mem::replace(&mut self.phase, Phase::Aborted);
                return Err(ProtocolError::Unexpected {
                    role: Role::Authenticator,
                    phase,
                    got: "Start",
                });
            }
            (Side::Applicant, m) => {
                self.phase = match m {
                    Message::IdentityResponse { .. } => Phase::AwaitChallenge,
                    _ => Phase::AwaitVerdict,
                };
                self.awaiting = Some(Side::Server);
                vec![(Hop::AuthToServer, authenticator_forward(m, Hop::AuthToServer))]
            }
            (Side::Server, m) => {
                if matches!(m, Message::Verdict { .. }) {
                    self.phase = Phase::Done;
                    self.awaiting = None;
                } else {
                    self.phase = Phase::AwaitResponse;
                    self.awaiting = Some(Side::Applicant);
                }
                vec![(Hop::AuthToApplicant, authenticator_forward(m, Hop::AuthToApplicant))]
            }
        };
        Ok(out)
    }
}

/// Relays `m` across `hop`. The content is unchanged; only the framing is
/// rebuilt, so the result is byte-identical after encoding.
pub fn authenticator_forward(m: &Message, _hop: Hop) -> Message {
    decode_message(&encode_message(m)).expect("re-encoding a valid message cannot fail")
}
