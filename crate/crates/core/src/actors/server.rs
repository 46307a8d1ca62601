use crate::clock::Clock;
use crate::crypto::{Challenge, ChallengeSource, IdByte};
use crate::protocol::{
    baseline_response, make_request, server_expected_response, Message, ProtocolVariant,
    Username,
};

use super::{FreshnessOutcome, FreshnessPolicy, Phase, ProtocolError, Role, UserDatabase};

/// Shared, long-lived server resources borrowed by each session.
#[derive(Clone, Copy)]
pub struct ServerContext<'a> {
    pub db: &'a UserDatabase,
    pub policy: &'a FreshnessPolicy,
    pub clock: &'a dyn Clock,
}

/// Why the server rendered its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    UnknownUser,
    Accepted,
    DigestMismatch,
    StaleTimestamp,
    ReplayedTimestamp,
}

impl Decision {
    pub fn accepted(self) -> bool {
        self == Decision::Accepted
    }
}

/// One server-side session.
#[derive(Debug, Clone)]
pub struct Server {
    variant: ProtocolVariant,
    phase: Phase,
    challenges: ChallengeSource,
    id: Option<IdByte>,
    username: Option<Username>,
    challenge: Option<Challenge>,
    decision: Option<Decision>,
}

impl Server {
    pub fn new(variant: ProtocolVariant, challenges: ChallengeSource) -> Self {
        Self {
            variant,
            phase: Phase::Idle,
            challenges,
            id: None,
            username: None,
            challenge: None,
            decision: None,
        }
    }

    pub fn variant(&self) -> ProtocolVariant {
        self.variant
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn challenge(&self) -> Option<&Challenge> {
        self.challenge.as_ref()
    }

    pub fn decision(&self) -> Option<Decision> {
        self.decision
    }

    pub fn verdict(&self) -> Option<bool> {
        self.decision.map(Decision::accepted)
    }

    pub fn step(
        &mut self,
        incoming: &Message,
        ctx: &ServerContext<'_>,
    ) -> Result<Option<Message>, ProtocolError> {
        let result = self.transition(incoming, ctx);
        if result.is_err() {
            self.phase = Phase::Aborted;
        }
        result
    }

    fn finish(&mut self, decision: Decision) -> Option<Message> {
        self.decision = Some(decision);
        self.phase = Phase::Done;
        Some(Message::Verdict {
            accept: decision.accepted(),
        })
    }

    fn transition(
        &mut self,
        incoming: &Message,
        ctx: &ServerContext<'_>,
    ) -> Result<Option<Message>, ProtocolError> {
        match (self.phase, incoming) {
            (Phase::Aborted, _) => Err(ProtocolError::Aborted { role: Role::Server }),

            // The relay announces the session; the ID arrives with the identity.
            (Phase::Idle, Message::Start) => {
                self.phase = Phase::AwaitIdentity;
                Ok(None)
            }

            (Phase::AwaitIdentity, Message::IdentityResponse { id, username }) => {
                let Some(password) = ctx.db.lookup(username) else {
                    return Ok(self.finish(Decision::UnknownUser));
                };
                let challenge = self.challenges.next_challenge();
                self.id = Some(*id);
                self.username = Some(username.clone());
                self.challenge = Some(challenge);
                self.phase = Phase::AwaitResponse;
                let out = match self.variant {
                    ProtocolVariant::Baseline => Message::ChallengePlain {
                        id_plus1: id.increment(),
                        challenge,
                    },
                    ProtocolVariant::Hardened => Message::ChallengeMasked {
                        id: *id,
                        request: make_request(*id, &challenge, password),
                    },
                };
                Ok(Some(out))
            }

            (Phase::AwaitResponse, Message::BaselineResponse { digest })
                if self.variant == ProtocolVariant::Baseline =>
            {
                let (id, username, challenge) = self.material();
                let decision = match ctx.db.lookup(&username) {
                    Some(pw) if baseline_response(id.increment(), pw, &challenge) == *digest => {
                        Decision::Accepted
                    }
                    Some(_) => Decision::DigestMismatch,
                    None => Decision::UnknownUser,
                };
                Ok(self.finish(decision))
            }

            (Phase::AwaitResponse, Message::HardenedResponse { digest, timestamp })
                if self.variant == ProtocolVariant::Hardened =>
            {
                let (id, username, challenge) = self.material();
                let now = ctx.clock.now();
                let outcome = ctx.policy.admit(&username, *timestamp, now, || {
                    server_expected_response(id, &challenge, *timestamp) == *digest
                });
                let decision = match outcome {
                    FreshnessOutcome::Accepted => Decision::Accepted,
                    FreshnessOutcome::Stale => Decision::StaleTimestamp,
                    FreshnessOutcome::Replayed => Decision::ReplayedTimestamp,
                    FreshnessOutcome::Mismatch => Decision::DigestMismatch,
                };
                Ok(self.finish(decision))
            }

            (phase, m) => Err(ProtocolError::Unexpected {
                role: Role::Server,
                phase,
                got: m.kind(),
            }),
        }
    }

    fn material(&self) -> (IdByte, Username, Challenge) {
        (
            self.id.expect("id recorded with challenge"),
            self.username.clone().expect("username recorded with challenge"),
            self.challenge.expect("challenge issued"),
        )
    }
}
