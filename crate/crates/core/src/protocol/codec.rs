//! Wire format: `tag (1) ‖ payload length (2, big-endian) ‖ payload`.
//!
//! | tag  | message          | payload                               |
//! |------|------------------|---------------------------------------|
//! | 0x01 | Start            | empty                                 |
//! | 0x02 | IdentityRequest  | id                                    |
//! | 0x03 | IdentityResponse | id ‖ username (1..=64 bytes)          |
//! | 0x04 | ChallengePlain   | id+1 ‖ challenge (16)                 |
//! | 0x05 | ChallengeMasked  | id ‖ request (16)                     |
//! | 0x06 | BaselineResponse | digest (16)                           |
//! | 0x07 | HardenedResponse | digest (16) ‖ timestamp (8, BE)       |
//! | 0x08 | Verdict          | 0x00 reject / 0x01 accept             |

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{Message, Username, USERNAME_MAX_LEN};
use crate::crypto::{Challenge, Digest128, IdByte, Timestamp};

pub const HEADER_LEN: usize = 3;

const TAG_START: u8 = 0x01;
const TAG_IDENTITY_REQUEST: u8 = 0x02;
const TAG_IDENTITY_RESPONSE: u8 = 0x03;
const TAG_CHALLENGE_PLAIN: u8 = 0x04;
const TAG_CHALLENGE_MASKED: u8 = 0x05;
const TAG_BASELINE_RESPONSE: u8 = 0x06;
const TAG_HARDENED_RESPONSE: u8 = 0x07;
const TAG_VERDICT: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("frame truncated: need {needed} bytes, have {got}")]
    Truncated { needed: usize, got: usize },
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("{kind} payload must be {expected} bytes, got {got}")]
    PayloadLength {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("username must be 1..={USERNAME_MAX_LEN} bytes, got {0}")]
    UsernameLength(usize),
    #[error("verdict byte must be 0x00 or 0x01, got 0x{0:02x}")]
    BadVerdict(u8),
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

fn tag_and_payload(m: &Message) -> (u8, Vec<u8>) {
    match m {
        Message::Start => (TAG_START, Vec::new()),
        Message::IdentityRequest { id } => (TAG_IDENTITY_REQUEST, vec![id.0]),
        Message::IdentityResponse { id, username } => {
            let mut p = Vec::with_capacity(1 + username.as_bytes().len());
            p.push(id.0);
            p.extend_from_slice(username.as_bytes());
            (TAG_IDENTITY_RESPONSE, p)
        }
        Message::ChallengePlain {
            id_plus1,
            challenge,
        } => {
            let mut p = Vec::with_capacity(17);
            p.push(id_plus1.0);
            p.extend_from_slice(challenge.as_bytes());
            (TAG_CHALLENGE_PLAIN, p)
        }
        Message::ChallengeMasked { id, request } => {
            let mut p = Vec::with_capacity(17);
            p.push(id.0);
            p.extend_from_slice(request);
            (TAG_CHALLENGE_MASKED, p)
        }
        Message::BaselineResponse { digest } => (TAG_BASELINE_RESPONSE, digest.0.to_vec()),
        Message::HardenedResponse { digest, timestamp } => {
            let mut p = Vec::with_capacity(24);
            p.extend_from_slice(digest.as_bytes());
            p.extend_from_slice(&timestamp.0.to_be_bytes());
            (TAG_HARDENED_RESPONSE, p)
        }
        Message::Verdict { accept } => (TAG_VERDICT, vec![u8::from(*accept)]),
    }
}

pub fn encode_message(m: &Message) -> Vec<u8> {
    let (tag, payload) = tag_and_payload(m);
    // Largest payload is 65 bytes, far below the u16 limit.
    let len = u16::try_from(payload.len()).expect("payload fits u16");
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.push(tag);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&payload);
    out
}

fn exact<const N: usize>(kind: &'static str, payload: &[u8]) -> Result<[u8; N], DecodeError> {
    payload.try_into().map_err(|_| DecodeError::PayloadLength {
        kind,
        expected: N,
        got: payload.len(),
    })
}

fn decode_payload(tag: u8, payload: &[u8]) -> Result<Message, DecodeError> {
    let msg = match tag {
        TAG_START => {
            exact::<0>("Start", payload)?;
            Message::Start
        }
        TAG_IDENTITY_REQUEST => {
            let [id] = exact::<1>("IdentityRequest", payload)?;
            Message::IdentityRequest { id: IdByte(id) }
        }
        TAG_IDENTITY_RESPONSE => {
            let (&id, name) = payload.split_first().ok_or(DecodeError::PayloadLength {
                kind: "IdentityResponse",
                expected: 2,
                got: 0,
            })?;
            let username =
                Username::new(name).map_err(|e| DecodeError::UsernameLength(e.0))?;
            Message::IdentityResponse {
                id: IdByte(id),
                username,
            }
        }
        TAG_CHALLENGE_PLAIN => {
            let p = exact::<17>("ChallengePlain", payload)?;
            Message::ChallengePlain {
                id_plus1: IdByte(p[0]),
                challenge: Challenge(p[1..].try_into().expect("16 bytes")),
            }
        }
        TAG_CHALLENGE_MASKED => {
            let p = exact::<17>("ChallengeMasked", payload)?;
            Message::ChallengeMasked {
                id: IdByte(p[0]),
                request: p[1..].try_into().expect("16 bytes"),
            }
        }
        TAG_BASELINE_RESPONSE => Message::BaselineResponse {
            digest: Digest128(exact::<16>("BaselineResponse", payload)?),
        },
        TAG_HARDENED_RESPONSE => {
            let p = exact::<24>("HardenedResponse", payload)?;
            Message::HardenedResponse {
                digest: Digest128(p[..16].try_into().expect("16 bytes")),
                timestamp: Timestamp(u64::from_be_bytes(p[16..].try_into().expect("8 bytes"))),
            }
        }
        TAG_VERDICT => match exact::<1>("Verdict", payload)? {
            [0x00] => Message::Verdict { accept: false },
            [0x01] => Message::Verdict { accept: true },
            [b] => return Err(DecodeError::BadVerdict(b)),
        },
        other => return Err(DecodeError::UnknownTag(other)),
    };
    Ok(msg)
}

/// Decodes exactly one frame; trailing bytes are an error.
pub fn decode_message(bytes: &[u8]) -> Result<Message, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated {
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let len = usize::from(u16::from_be_bytes([bytes[1], bytes[2]]));
    let total = HEADER_LEN + len;
    if bytes.len() < total {
        return Err(DecodeError::Truncated {
            needed: total,
            got: bytes.len(),
        });
    }
    if bytes.len() > total {
        return Err(DecodeError::TrailingBytes(bytes.len() - total));
    }
    decode_payload(bytes[0], &bytes[HEADER_LEN..])
}

/// Reads one raw frame (header included) from a stream.
pub fn read_frame<R: Read + ?Sized>(r: &mut R) -> io::Result<Vec<u8>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    let len = usize::from(u16::from_be_bytes([header[1], header[2]]));
    let mut frame = vec![0u8; HEADER_LEN + len];
    frame[..HEADER_LEN].copy_from_slice(&header);
    r.read_exact(&mut frame[HEADER_LEN..])?;
    Ok(frame)
}

pub fn read_message<R: Read + ?Sized>(r: &mut R) -> Result<Message, WireError> {
    let frame = read_frame(r)?;
    Ok(decode_message(&frame)?)
}

pub fn write_message<W: Write + ?Sized>(w: &mut W, m: &Message) -> io::Result<()> {
    w.write_all(&encode_message(m))?;
    w.flush()
}
