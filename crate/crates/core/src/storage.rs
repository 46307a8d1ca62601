//! Text file formats.
//!
//! User database, one record per line:
//!
//! ```text
//! # comment
//! alice:30313233343536373839616263646566
//! ```
//!
//! Wordlist: one candidate per line, `#` lines and blank lines skipped.
//!
//! Transcript:
//!
//! ```text
//! EAPLAB1 hardened 11
//! applicant-auth 1700000000000 010000
//! ...
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::actors::{Hop, UserDatabase, UserRecord};
use crate::attack::Dictionary;
use crate::crypto::{Password, Timestamp};
use crate::harness::{Transcript, TranscriptEntry};
use crate::protocol::{decode_message, encode_message, ProtocolVariant, Username};

pub const TRANSCRIPT_MAGIC: &str = "EAPLAB1";

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("transcript header declares {declared} entries, found {found}")]
    EntryCount { declared: usize, found: usize },
}

fn line_err(line: usize, reason: impl Into<String>) -> StorageError {
    StorageError::Line {
        line,
        reason: reason.into(),
    }
}

fn read(path: &Path) -> Result<String, StorageError> {
    fs::read_to_string(path).map_err(|source| StorageError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), StorageError> {
    fs::write(path, text).map_err(|source| StorageError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Numbered lines with a trailing `\r` removed.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

fn skippable(line: &str) -> bool {
    line.is_empty() || line.starts_with('#')
}

pub fn parse_user_db(text: &str) -> Result<UserDatabase, StorageError> {
    let mut db = UserDatabase::new();
    for (n, line) in lines(text) {
        if skippable(line.trim()) {
            continue;
        }
        let (name, hex_pw) = line
            .rsplit_once(':')
            .ok_or_else(|| line_err(n, "expected username:hex-password"))?;
        if name.contains(':') {
            return Err(line_err(n, format!("username {name:?} contains ':'")));
        }
        let username = Username::new(name.as_bytes()).map_err(|e| line_err(n, e.to_string()))?;
        let bytes = hex::decode(hex_pw.trim())
            .map_err(|e| line_err(n, format!("password is not hex: {e}")))?;
        let password = Password::new(bytes).map_err(|e| line_err(n, e.to_string()))?;
        db.insert(UserRecord { username, password })
            .map_err(|e| line_err(n, e.to_string()))?;
    }
    Ok(db)
}

pub fn format_user_db(db: &UserDatabase) -> String {
    let mut out = String::new();
    for r in db.records() {
        out.push_str(&String::from_utf8_lossy(r.username.as_bytes()));
        out.push(':');
        out.push_str(&hex::encode(r.password.as_bytes()));
        out.push('\n');
    }
    out
}

pub fn load_user_db(path: impl AsRef<Path>) -> Result<UserDatabase, StorageError> {
    let path = path.as_ref();
    let mut db = parse_user_db(&read(path)?)?;
    db.source_path = Some(path.to_owned());
    Ok(db)
}

/// Usernames that are not valid UTF-8 are written lossily.
pub fn save_user_db(db: &UserDatabase, path: impl AsRef<Path>) -> Result<(), StorageError> {
    write(path.as_ref(), &format_user_db(db))
}

pub fn parse_wordlist(text: &str) -> Result<Dictionary, StorageError> {
    let mut words = Vec::new();
    for (n, line) in lines(text) {
        if skippable(line) {
            continue;
        }
        words.push(Password::new(line.as_bytes()).map_err(|e| line_err(n, e.to_string()))?);
    }
    Ok(Dictionary::new(words))
}

pub fn load_wordlist(path: impl AsRef<Path>) -> Result<Dictionary, StorageError> {
    parse_wordlist(&read(path.as_ref())?)
}

/// Candidates must be UTF-8 without newlines to survive a round trip.
pub fn format_wordlist(dict: &Dictionary) -> String {
    let mut out = String::new();
    for w in dict.words() {
        out.push_str(&String::from_utf8_lossy(w.as_bytes()));
        out.push('\n');
    }
    out
}

pub fn save_wordlist(dict: &Dictionary, path: impl AsRef<Path>) -> Result<(), StorageError> {
    write(path.as_ref(), &format_wordlist(dict))
}

pub fn format_transcript(t: &Transcript) -> String {
    let mut out = format!("{TRANSCRIPT_MAGIC} {} {}\n", t.variant, t.entries.len());
    for e in &t.entries {
        let _ = writeln!(
            out,
            "{} {} {}",
            e.hop.tag(),
            e.capture_time.millis(),
            hex::encode(encode_message(&e.message))
        );
    }
    out
}

pub fn parse_transcript(text: &str) -> Result<Transcript, StorageError> {
    let mut it = lines(text);
    let (n, header) = it.next().ok_or_else(|| line_err(1, "empty transcript"))?;
    let fields: Vec<&str> = header.split(' ').collect();
    let [magic, variant, count] = fields[..] else {
        return Err(line_err(n, "header must be `EAPLAB1 <variant> <entry-count>`"));
    };
    if magic != TRANSCRIPT_MAGIC {
        return Err(line_err(n, format!("bad magic {magic:?}")));
    }
    let variant: ProtocolVariant = variant.parse().map_err(|e: crate::protocol::UnknownVariant| {
        line_err(n, e.to_string())
    })?;
    let declared: usize = count
        .parse()
        .map_err(|_| line_err(n, format!("bad entry count {count:?}")))?;

    let mut entries = Vec::with_capacity(declared);
    for (n, line) in it {
        let fields: Vec<&str> = line.split(' ').collect();
        let [hop, millis, frame] = fields[..] else {
            return Err(line_err(n, "entry must be `<hop> <millis> <hex>`"));
        };
        let hop = Hop::from_tag(hop).ok_or_else(|| line_err(n, format!("unknown hop {hop:?}")))?;
        let millis: u64 = millis
            .parse()
            .map_err(|_| line_err(n, format!("bad capture time {millis:?}")))?;
        let bytes = hex::decode(frame).map_err(|e| line_err(n, format!("bad hex: {e}")))?;
        let message = decode_message(&bytes).map_err(|e| line_err(n, e.to_string()))?;
        entries.push(TranscriptEntry {
            hop,
            message,
            capture_time: Timestamp(millis),
        });
    }
    if entries.len() != declared {
        return Err(StorageError::EntryCount {
            declared,
            found: entries.len(),
        });
    }
    Ok(Transcript { variant, entries })
}

pub fn save_transcript(t: &Transcript, path: impl AsRef<Path>) -> Result<(), StorageError> {
    write(path.as_ref(), &format_transcript(t))
}

pub fn load_transcript(path: impl AsRef<Path>) -> Result<Transcript, StorageError> {
    parse_transcript(&read(path.as_ref())?)
}
