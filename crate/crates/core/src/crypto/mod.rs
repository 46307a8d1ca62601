//! Byte-level primitives shared by both handshake variants.
//!
//! Every value that enters an XOR is widened to a 128-bit [`Block`] first:
//!
//! | value       | widening                                        |
//! |-------------|-------------------------------------------------|
//! | ID byte     | zero block with the ID in byte 15               |
//! | password    | first 16 bytes, or zero-padded to 16            |
//! | timestamp   | 8 zero bytes then big-endian milliseconds       |

mod md5;

use std::fmt;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use self::md5::Md5;

/// A 128-bit operand of the XOR and hash steps.
pub type Block = [u8; 16];

pub const PASSWORD_MAX_LEN: usize = 64;
/// Recommended minimum password length for EAP-MD5 deployments.
pub const PASSWORD_RECOMMENDED_LEN: usize = 16;
pub const MAX_ENTROPY_BITS: u32 = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("password must be 1..={PASSWORD_MAX_LEN} bytes, got {0}")]
    PasswordLength(usize),
    #[error("challenge entropy must be 1..={MAX_ENTROPY_BITS} bits, got {0}")]
    EntropyBits(u32),
}

/// 16-byte MD5 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Digest128(pub Block);

impl Digest128 {
    pub fn as_bytes(&self) -> &Block {
        &self.0
    }
}

impl fmt::Debug for Digest128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest128({})", hex::encode(self.0))
    }
}

impl fmt::Display for Digest128 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

/// Server nonce. Always 16 bytes on the wire; reduced-entropy challenges
/// simply have their high bytes zeroed by the generator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Challenge(pub Block);

impl Challenge {
    pub fn as_bytes(&self) -> &Block {
        &self.0
    }

    /// The challenge whose big-endian integer value is `value`.
    pub fn from_u128(value: u128) -> Self {
        Self(value.to_be_bytes())
    }

    pub fn to_u128(self) -> u128 {
        u128::from_be_bytes(self.0)
    }
}

impl fmt::Debug for Challenge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Challenge({})", hex::encode(self.0))
    }
}

/// One-byte session identifier picked by the authenticator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct IdByte(pub u8);

impl IdByte {
    /// `ID+1`, wrapping at 256.
    pub fn increment(self) -> Self {
        Self(self.0.wrapping_add(1))
    }
}

/// A password: 1 to 64 arbitrary bytes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Password(Vec<u8>);

impl Password {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self, CryptoError> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > PASSWORD_MAX_LEN {
            return Err(CryptoError::PasswordLength(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shorter passwords are accepted but should be flagged to the operator.
    pub fn meets_length_recommendation(&self) -> bool {
        self.0.len() >= PASSWORD_RECOMMENDED_LEN
    }
}

impl fmt::Debug for Password {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Password({})", hex::encode(&self.0))
    }
}

/// Milliseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn millis(self) -> u64 {
        self.0
    }

    pub fn abs_diff(self, other: Timestamp) -> u64 {
        self.0.abs_diff(other.0)
    }
}

pub fn md5_digest(input: &[u8]) -> Digest128 {
    Digest128(md5::md5(input))
}

pub fn xor128(a: &Block, b: &Block) -> Block {
    let mut out = [0u8; 16];
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x ^ y;
    }
    out
}

pub fn widen_id(id: IdByte) -> Block {
    let mut out = [0u8; 16];
    out[15] = id.0;
    out
}

pub fn pad_password(password: &Password) -> Block {
    let mut out = [0u8; 16];
    let bytes = password.as_bytes();
    let n = bytes.len().min(16);
    out[..n].copy_from_slice(&bytes[..n]);
    out
}

pub fn widen_timestamp(t: Timestamp) -> Block {
    let mut out = [0u8; 16];
    out[8..].copy_from_slice(&t.0.to_be_bytes());
    out
}

pub fn increment_id(id: IdByte) -> IdByte {
    id.increment()
}

/// Mask keeping the low `bits` bits of a 128-bit value.
fn entropy_mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

/// Draws challenges uniformly from `0..2^entropy_bits`.
///
/// Production sessions use 128 bits. Smaller widths exist so that an
/// exhaustive challenge search fits on a desk.
#[derive(Debug, Clone)]
pub struct ChallengeSource {
    rng: ChaCha8Rng,
    entropy_bits: u32,
}

impl ChallengeSource {
    pub fn new(entropy_bits: u32, seed: Option<u64>) -> Result<Self, CryptoError> {
        check_entropy(entropy_bits)?;
        let rng = match seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_entropy(),
        };
        Ok(Self { rng, entropy_bits })
    }

    pub fn entropy_bits(&self) -> u32 {
        self.entropy_bits
    }

    pub fn next_challenge(&mut self) -> Challenge {
        generate_challenge_with(self.entropy_bits, &mut self.rng)
    }
}

fn check_entropy(bits: u32) -> Result<(), CryptoError> {
    if (1..=MAX_ENTROPY_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(CryptoError::EntropyBits(bits))
    }
}

/// Draws a single challenge with the given entropy from `rng`.
///
/// Panics if `entropy_bits` is outside `1..=128`; use [`generate_challenge`]
/// for a checked variant.
pub fn generate_challenge_with<R: RngCore + ?Sized>(entropy_bits: u32, rng: &mut R) -> Challenge {
    assert!((1..=MAX_ENTROPY_BITS).contains(&entropy_bits));
    let mut raw = [0u8; 16];
    rng.fill_bytes(&mut raw);
    Challenge::from_u128(u128::from_be_bytes(raw) & entropy_mask(entropy_bits))
}

/// Checked one-off challenge draw. With a seed the result is reproducible.
pub fn generate_challenge(entropy_bits: u32, seed: Option<u64>) -> Result<Challenge, CryptoError> {
    Ok(ChallengeSource::new(entropy_bits, seed)?.next_challenge())
}
