//! The three actors as TCP services speaking the framed wire format.
//!
//! One session per connection. The applicant connects to the authenticator,
//! which opens a fresh upstream connection to the server for each session
//! and relays frames in both directions.

use std::fmt;
use std::io;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::thread;

use thiserror::Error;

use crate::actors::{
    Applicant, Authenticator, Credentials, FreshnessPolicy, Hop, Phase, ProtocolError, Server,
    ServerContext, Side, UserDatabase,
};
use crate::clock::Clock;
use crate::crypto::{ChallengeSource, CryptoError, IdByte};
use crate::harness::{Transcript, Wiretap};
use crate::protocol::{
    decode_message, read_frame, read_message, write_message, ProtocolVariant, WireError,
};
use crate::storage::{save_transcript, StorageError};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub host: String,
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid endpoint {input:?}: {reason}")]
pub struct EndpointError {
    pub input: String,
    pub reason: &'static str,
}

impl Endpoint {
    pub fn new(host: impl Into<String>, port: u16) -> Result<Self, EndpointError> {
        let host = host.into();
        if port == 0 {
            return Err(EndpointError {
                input: format!("{host}:{port}"),
                reason: "port must be 1..=65535",
            });
        }
        Ok(Self { host, port })
    }
}

impl FromStr for Endpoint {
    type Err = EndpointError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| EndpointError {
            input: s.to_owned(),
            reason,
        };
        let (host, port) = s.rsplit_once(':').ok_or_else(|| err("expected host:port"))?;
        if host.is_empty() {
            return Err(err("empty host"));
        }
        let port: u16 = port.parse().map_err(|_| err("port must be 1..=65535"))?;
        Endpoint::new(host, port).map_err(|_| err("port must be 1..=65535"))
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.host, self.port)
    }
}

impl ToSocketAddrs for Endpoint {
    type Iter = std::vec::IntoIter<std::net::SocketAddr>;

    fn to_socket_addrs(&self) -> io::Result<Self::Iter> {
        (self.host.as_str(), self.port).to_socket_addrs()
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("wire: {0}")]
    Wire(#[from] WireError),
    #[error("protocol: {0}")]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Config(#[from] CryptoError),
    #[error("transcript mirror: {0}")]
    Mirror(#[from] StorageError),
    #[error("connection closed before a verdict")]
    NoVerdict,
}

impl From<crate::protocol::DecodeError> for NetError {
    fn from(e: crate::protocol::DecodeError) -> Self {
        NetError::Wire(WireError::Decode(e))
    }
}

pub fn bind(endpoint: &Endpoint) -> Result<TcpListener, NetError> {
    Ok(TcpListener::bind(endpoint)?)
}

#[derive(Clone)]
pub struct ServerConfig {
    pub variant: ProtocolVariant,
    pub entropy_bits: u32,
    /// Session `n` (in accept order) draws challenges from seed `seed + n`.
    pub seed: u64,
    pub db: Arc<UserDatabase>,
    pub policy: Arc<FreshnessPolicy>,
    pub clock: Arc<dyn Clock>,
    /// Stop accepting after this many connections; `None` runs forever.
    pub max_sessions: Option<usize>,
}

#[derive(Clone)]
pub struct AuthenticatorConfig {
    pub variant: ProtocolVariant,
    pub upstream: Endpoint,
    /// ID for the first session; later sessions count up from it.
    pub first_id: IdByte,
    /// Written after every completed session, replacing the previous one.
    pub mirror: Option<PathBuf>,
    pub clock: Arc<dyn Clock>,
    pub max_sessions: Option<usize>,
}

#[derive(Clone)]
pub struct ApplicantConfig {
    pub variant: ProtocolVariant,
    pub upstream: Endpoint,
    pub credentials: Credentials,
    pub clock: Arc<dyn Clock>,
}

/// Accepts connections and hands each to `handle` on its own thread.
/// Returns after `max` connections have been accepted and handled.
fn accept_loop<F>(listener: &TcpListener, max: Option<usize>, handle: F) -> io::Result<()>
where
    F: Fn(usize, TcpStream) + Send + Sync + 'static,
{
    let handle = Arc::new(handle);
    let mut workers = Vec::new();
    for n in 0.. {
        if max.is_some_and(|m| n >= m) {
            break;
        }
        let (stream, peer) = listener.accept()?;
        log::debug!("session {n} from {peer}");
        let handle = Arc::clone(&handle);
        workers.push(thread::spawn(move || handle(n, stream)));
        workers.retain(|w| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

/// Runs the server role on `listener`.
pub fn serve_server(listener: &TcpListener, config: ServerConfig) -> io::Result<()> {
    let max = config.max_sessions;
    accept_loop(listener, max, move |n, stream| {
        if let Err(e) = server_session(n, stream, &config) {
            log::error!("server session {n}: {e}");
        }
    })
}

fn server_session(n: usize, mut stream: TcpStream, config: &ServerConfig) -> Result<(), NetError> {
    let challenges =
        ChallengeSource::new(config.entropy_bits, Some(config.seed.wrapping_add(n as u64)))?;
    let mut session = Server::new(config.variant, challenges);
    let ctx = ServerContext {
        db: &config.db,
        policy: &config.policy,
        clock: config.clock.as_ref(),
    };
    while session.phase() != Phase::Done {
        let incoming = read_message(&mut stream)?;
        if let Some(out) = session.step(&incoming, &ctx)? {
            write_message(&mut stream, &out)?;
        }
    }
    log::info!("server session {n}: {:?}", session.decision());
    Ok(())
}

/// Runs the authenticator role on `listener`.
pub fn serve_authenticator(listener: &TcpListener, config: AuthenticatorConfig) -> io::Result<()> {
    let max = config.max_sessions;
    accept_loop(listener, max, move |n, stream| {
        match relay_session(n, stream, &config) {
            Ok(t) => log::info!("relayed session {n}: {} frames", t.len()),
            Err(e) => log::error!("relay session {n}: {e}"),
        }
    })
}

fn relay_session(
    n: usize,
    mut applicant: TcpStream,
    config: &AuthenticatorConfig,
) -> Result<Transcript, NetError> {
    let mut server = TcpStream::connect(&config.upstream)?;
    let id = IdByte(config.first_id.0.wrapping_add(n as u8));
    let mut relay = Authenticator::new(id);
    let mut transcript = Transcript::new(config.variant);

    while let Some(side) = relay.awaiting() {
        let (source, hop) = match side {
            Side::Applicant => (&mut applicant, Hop::ApplicantToAuth),
            Side::Server => (&mut server, Hop::ServerToAuth),
        };
        let frame = read_frame(source)?;
        let incoming = decode_message(&frame)?;
        transcript.capture(hop, &incoming, config.clock.now());
        for (out_hop, out) in relay.on_message(side, &incoming)? {
            transcript.capture(out_hop, &out, config.clock.now());
            let dest = match out_hop {
                Hop::AuthToServer => &mut server,
                _ => &mut applicant,
            };
            write_message(dest, &out)?;
        }
    }

    if let Some(path) = &config.mirror {
        save_transcript(&transcript, path)?;
    }
    Ok(transcript)
}

/// Connects to the authenticator and runs one session as the applicant.
pub fn run_applicant(config: &ApplicantConfig) -> Result<bool, NetError> {
    let mut stream = TcpStream::connect(&config.upstream)?;
    let mut applicant = Applicant::new(config.variant, config.credentials.clone());
    let clock = config.clock.as_ref();
    if let Some(start) = applicant.step(None, clock)? {
        write_message(&mut stream, &start)?;
    }
    while applicant.phase() != Phase::Done {
        let incoming = match read_message(&mut stream) {
            Err(WireError::Io(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(NetError::NoVerdict)
            }
            other => other?,
        };
        if let Some(out) = applicant.step(Some(&incoming), clock)? {
            write_message(&mut stream, &out)?;
        }
    }
    applicant.verdict().ok_or(NetError::NoVerdict)
}
