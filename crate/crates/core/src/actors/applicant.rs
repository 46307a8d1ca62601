use crate::clock::Clock;
use crate::crypto::{Challenge, IdByte};
use crate::protocol::{
    baseline_response, make_response, recover_c, Message, ProtocolVariant, Username,
};

use super::{Credentials, Phase, ProtocolError, Role};

/// The supplicant. Drives the session: it speaks first and the session
/// ends when it records a verdict.
#[derive(Debug, Clone)]
pub struct Applicant {
    variant: ProtocolVariant,
    phase: Phase,
    credentials: Credentials,
    id: Option<IdByte>,
    /// Set only in the baseline variant; the hardened applicant never sees it.
    challenge: Option<Challenge>,
    verdict: Option<bool>,
}

impl Applicant {
    pub fn new(variant: ProtocolVariant, credentials: Credentials) -> Self {
        Self {
            variant,
            phase: Phase::Idle,
            credentials,
            id: None,
            challenge: None,
            verdict: None,
        }
    }

    pub fn variant(&self) -> ProtocolVariant {
        self.variant
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn id(&self) -> Option<IdByte> {
        self.id
    }

    pub fn challenge(&self) -> Option<&Challenge> {
        self.challenge.as_ref()
    }

    pub fn username(&self) -> &Username {
        &self.credentials.username
    }

    pub fn verdict(&self) -> Option<bool> {
        self.verdict
    }

    /// Advances by one message. `None` is only valid from `Idle` and
    /// produces the `Start` request.
    pub fn step(
        &mut self,
        incoming: Option<&Message>,
        clock: &dyn Clock,
    ) -> Result<Option<Message>, ProtocolError> {
        let result = self.transition(incoming, clock);
        if result.is_err() {
            self.phase = Phase::Aborted;
        }
        result
    }

    fn transition(
        &mut self,
        incoming: Option<&Message>,
        clock: &dyn Clock,
    ) -> Result<Option<Message>, ProtocolError> {
        let unexpected = |phase, got| ProtocolError::Unexpected {
            role: Role::Applicant,
            phase,
            got,
        };

        match (self.phase, incoming) {
            (Phase::Aborted, _) => Err(ProtocolError::Aborted {
                role: Role::Applicant,
            }),
            (Phase::Idle, None) => {
                self.phase = Phase::AwaitIdentity;
                Ok(Some(Message::Start))
            }
            (phase, None) => Err(unexpected(phase, "nothing")),

            (Phase::AwaitIdentity, Some(Message::IdentityRequest { id })) => {
                self.id = Some(*id);
                self.phase = Phase::AwaitChallenge;
                Ok(Some(Message::IdentityResponse {
                    id: *id,
                    username: self.credentials.username.clone(),
                }))
            }

            (
                Phase::AwaitChallenge,
                Some(Message::ChallengePlain {
                    id_plus1,
                    challenge,
                }),
            ) if self.variant == ProtocolVariant::Baseline => {
                let expected = self.id.expect("id set before challenge").increment();
                if *id_plus1 != expected {
                    return Err(ProtocolError::IdMismatch {
                        role: Role::Applicant,
                        expected,
                        got: *id_plus1,
                    });
                }
                self.challenge = Some(*challenge);
                self.phase = Phase::AwaitVerdict;
                let digest = baseline_response(*id_plus1, &self.credentials.password, challenge);
                Ok(Some(Message::BaselineResponse { digest }))
            }

            (Phase::AwaitChallenge, Some(Message::ChallengeMasked { id, request }))
                if self.variant == ProtocolVariant::Hardened =>
            {
                let expected = self.id.expect("id set before challenge");
                if *id != expected {
                    return Err(ProtocolError::IdMismatch {
                        role: Role::Applicant,
                        expected,
                        got: *id,
                    });
                }
                let c = recover_c(request, &self.credentials.password);
                let timestamp = clock.now();
                self.phase = Phase::AwaitVerdict;
                Ok(Some(Message::HardenedResponse {
                    digest: make_response(&c, timestamp),
                    timestamp,
                }))
            }

            // The server may reject right after the identity step.
            (Phase::AwaitChallenge | Phase::AwaitVerdict, Some(Message::Verdict { accept })) => {
                self.verdict = Some(*accept);
                self.phase = Phase::Done;
                Ok(None)
            }

            (phase, Some(m)) => Err(unexpected(phase, m.kind())),
        }
    }
}
