//! The three parties of the handshake as explicit state machines.
//!
//! Each actor is fed one message at a time and answers with the messages it
//! emits. Nothing here performs I/O; the harness and the socket demo move the
//! messages.

mod applicant;
mod authenticator;
mod freshness;
mod server;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::crypto::{IdByte, Password};
use crate::protocol::Username;

pub use self::applicant::Applicant;
pub use self::authenticator::{authenticator_forward, Authenticator, Side};
pub use self::freshness::{FreshnessOutcome, FreshnessPolicy, DEFAULT_WINDOW_MILLIS};
pub use self::server::{Decision, Server, ServerContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Applicant,
    Authenticator,
    Server,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Applicant => "applicant",
            Role::Authenticator => "authenticator",
            Role::Server => "server",
        })
    }
}

/// Position of an actor in the step sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    AwaitIdentity,
    AwaitChallenge,
    AwaitResponse,
    AwaitVerdict,
    Done,
    Aborted,
}

/// A link hop. Messages on the wire always cross exactly one hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    ApplicantToAuth,
    AuthToServer,
    ServerToAuth,
    AuthToApplicant,
}

impl Hop {
    pub const ALL: [Hop; 4] = [
        Hop::ApplicantToAuth,
        Hop::AuthToServer,
        Hop::ServerToAuth,
        Hop::AuthToApplicant,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Hop::ApplicantToAuth => "applicant-auth",
            Hop::AuthToServer => "auth-server",
            Hop::ServerToAuth => "server-auth",
            Hop::AuthToApplicant => "auth-applicant",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Hop> {
        Hop::ALL.into_iter().find(|h| h.tag() == tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("{role} in phase {phase:?} cannot accept {got}")]
    Unexpected {
        role: Role,
        phase: Phase,
        got: &'static str,
    },
    #[error("{role} expected a message from the {expected:?} side")]
    WrongSide { role: Role, expected: Side },
    #[error("{role} expected ID {expected:?}, got {got:?}")]
    IdMismatch {
        role: Role,
        expected: IdByte,
        got: IdByte,
    },
    #[error("{role} session already aborted")]
    Aborted { role: Role },
}

/// What the applicant knows about itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credentials {
    pub username: Username,
    pub password: Password,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub username: Username,
    pub password: Password,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate username {0}")]
pub struct DuplicateUser(pub Username);

/// The server's username → password table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserDatabase {
    records: BTreeMap<Username, Password>,
    pub source_path: Option<PathBuf>,
}

impl UserDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(
        records: impl IntoIterator<Item = UserRecord>,
    ) -> Result<Self, DuplicateUser> {
        let mut db = Self::new();
        for r in records {
            db.insert(r)?;
        }
        Ok(db)
    }

    pub fn insert(&mut self, record: UserRecord) -> Result<(), DuplicateUser> {
        if self.records.contains_key(&record.username) {
            return Err(DuplicateUser(record.username));
        }
        self.records.insert(record.username, record.password);
        Ok(())
    }

    pub fn lookup(&self, username: &Username) -> Option<&Password> {
        self.records.get(username)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = UserRecord> + '_ {
        self.records.iter().map(|(u, p)| UserRecord {
            username: u.clone(),
            password: p.clone(),
        })
    }
}
