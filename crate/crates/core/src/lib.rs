//! A laboratory for the EAP-MD5 challenge–response handshake and a
//! masked-challenge, timestamped variant of it.
//!
//! - [`crypto`]: MD5, 128-bit XOR and the operand widening rules.
//! - [`protocol`]: message vocabulary, wire codec, per-variant computations.
//! - [`actors`]: applicant, authenticator and server state machines.
//! - [`harness`]: in-memory session runner with a passive wiretap.
//! - [`netdemo`]: the same actors over loopback TCP.
//! - [`attack`]: offline attacks on captured transcripts.
//! - [`experiment`]: the entropy sweep behind the cost comparison.
//! - [`storage`]: user database, wordlist and transcript files.

pub mod actors;
pub mod attack;
pub mod clock;
pub mod crypto;
pub mod experiment;
pub mod harness;
pub mod netdemo;
pub mod protocol;
pub mod storage;
