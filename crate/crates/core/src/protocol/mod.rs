//! Message vocabulary and the stateless computations of both variants.
//!
//! Baseline (EAP-MD5 core): the server sends `ID+1` and the challenge in the
//! clear and the applicant answers `MD5(ID+1 ‖ password ‖ challenge)`.
//!
//! Hardened: the server never sends the challenge. It sends
//!
//! ```text
//! Request  = MD5(ID ⊕ Challenge) ⊕ Password
//! ```
//!
//! and the applicant unmasks `C = Request ⊕ Password`, then answers
//! `Response = MD5(C ⊕ TimeStamp)` together with the timestamp. The server
//! recomputes `C' = MD5(ID ⊕ Challenge)` and `Response' = MD5(C' ⊕ TimeStamp)`.

mod codec;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::crypto::{
    md5_digest, pad_password, widen_id, widen_timestamp, xor128, Block, Challenge, Digest128,
    IdByte, Md5, Password, Timestamp,
};

pub use self::codec::{
    decode_message, encode_message, read_frame, read_message, write_message, DecodeError,
    WireError, HEADER_LEN,
};

pub const USERNAME_MAX_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolVariant {
    Baseline,
    Hardened,
}

impl ProtocolVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolVariant::Baseline => "baseline",
            ProtocolVariant::Hardened => "hardened",
        }
    }
}

impl fmt::Display for ProtocolVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown protocol variant {0:?} (expected baseline or hardened)")]
pub struct UnknownVariant(pub String);

impl FromStr for ProtocolVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(ProtocolVariant::Baseline),
            "hardened" => Ok(ProtocolVariant::Hardened),
            other => Err(UnknownVariant(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("username must be 1..={USERNAME_MAX_LEN} bytes, got {0}")]
pub struct UsernameLength(pub usize);

/// Non-empty identity string of at most 64 bytes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Username(Vec<u8>);

impl Username {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, UsernameLength> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > USERNAME_MAX_LEN {
            return Err(UsernameLength(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Username {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Username({:?})", String::from_utf8_lossy(&self.0))
    }
}

impl fmt::Display for Username {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

/// A protocol unit. Both variants share this vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Start,
    IdentityRequest {
        id: IdByte,
    },
    IdentityResponse {
        id: IdByte,
        username: Username,
    },
    /// Baseline step 5: challenge travels in the clear.
    ChallengePlain {
        id_plus1: IdByte,
        challenge: Challenge,
    },
    /// Hardened step 5: only the masked `Request` travels.
    ChallengeMasked {
        id: IdByte,
        request: Block,
    },
    BaselineResponse {
        digest: Digest128,
    },
    HardenedResponse {
        digest: Digest128,
        timestamp: Timestamp,
    },
    Verdict {
        accept: bool,
    },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Start => "Start",
            Message::IdentityRequest { .. } => "IdentityRequest",
            Message::IdentityResponse { .. } => "IdentityResponse",
            Message::ChallengePlain { .. } => "ChallengePlain",
            Message::ChallengeMasked { .. } => "ChallengeMasked",
            Message::BaselineResponse { .. } => "BaselineResponse",
            Message::HardenedResponse { .. } => "HardenedResponse",
            Message::Verdict { .. } => "Verdict",
        }
    }
}

/// `MD5(ID+1 ‖ password ‖ challenge)`, the password unpadded.
pub fn baseline_response(id_plus1: IdByte, password: &Password, challenge: &Challenge) -> Digest128 {
    let mut ctx = Md5::new();
    ctx.update(&[id_plus1.0]);
    ctx.update(password.as_bytes());
    ctx.update(challenge.as_bytes());
    Digest128(ctx.finalize())
}

/// `MD5(ID ⊕ Challenge)`, the unmasked inner value `C`.
pub fn inner_digest(id: IdByte, challenge: &Challenge) -> Digest128 {
    md5_digest(&xor128(&widen_id(id), challenge.as_bytes()))
}

/// `Request = MD5(ID ⊕ Challenge) ⊕ Password`
pub fn make_request(id: IdByte, challenge: &Challenge, password: &Password) -> Block {
    xor128(inner_digest(id, challenge).as_bytes(), &pad_password(password))
}

/// `C = Request ⊕ Password`
pub fn recover_c(request: &Block, password: &Password) -> Digest128 {
    Digest128(xor128(request, &pad_password(password)))
}

/// `Response = MD5(C ⊕ TimeStamp)`
pub fn make_response(c: &Digest128, t: Timestamp) -> Digest128 {
    md5_digest(&xor128(c.as_bytes(), &widen_timestamp(t)))
}

/// `Response' = MD5(MD5(ID ⊕ Challenge) ⊕ TimeStamp)`
pub fn server_expected_response(id: IdByte, challenge: &Challenge, t: Timestamp) -> Digest128 {
    make_response(&inner_digest(id, challenge), t)
}
