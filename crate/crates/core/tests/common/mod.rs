//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::net::TcpListener;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use eaplab_core::actors::{
    Credentials, FreshnessPolicy, ServerContext, UserDatabase, UserRecord,
};
use eaplab_core::clock::{Clock, SimClock};
use eaplab_core::crypto::{IdByte, Password, Timestamp};
use eaplab_core::harness::{run_session, SessionConfig, SessionOutcome, Transcript};
use eaplab_core::netdemo::{
    run_applicant, serve_authenticator, serve_server, ApplicantConfig, AuthenticatorConfig,
    Endpoint, ServerConfig,
};
use eaplab_core::protocol::{ProtocolVariant, Username};
use eaplab_core::storage::load_transcript;
use rand::Rng;

pub const T0: u64 = 1_700_000_000_000;

pub fn user(name: &str, password: &[u8]) -> (Credentials, UserRecord) {
    let username = Username::new(name.as_bytes()).unwrap();
    let password = Password::new(password.to_vec()).unwrap();
    (
        Credentials {
            username: username.clone(),
            password: password.clone(),
        },
        UserRecord { username, password },
    )
}

pub fn db_of(records: impl IntoIterator<Item = UserRecord>) -> UserDatabase {
    UserDatabase::from_records(records).unwrap()
}

pub fn random_bytes(rng: &mut impl Rng, min: usize, max: usize) -> Vec<u8> {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| rng.gen()).collect()
}

/// Runs `config` in memory against a one-user database and a fixed clock.
pub fn honest_session(
    config: &SessionConfig,
    creds: &Credentials,
    stored: &Password,
    now: u64,
) -> SessionOutcome {
    let db = db_of([UserRecord {
        username: creds.username.clone(),
        password: stored.clone(),
    }]);
    let policy = FreshnessPolicy::default();
    let clock = SimClock::new(Timestamp(now));
    let ctx = ServerContext {
        db: &db,
        policy: &policy,
        clock: &clock,
    };
    run_session(config, creds, &ctx).unwrap()
}

/// One session over loopback TCP: a server, an authenticator mirroring to
/// `mirror`, and an applicant, all on `clock`. Returns the applicant's
/// verdict and the authenticator's capture.
#[allow(clippy::too_many_arguments)]
pub fn loopback_session(
    variant: ProtocolVariant,
    seed: u64,
    id: IdByte,
    creds: &Credentials,
    db: Arc<UserDatabase>,
    policy: Arc<FreshnessPolicy>,
    clock: Arc<SimClock>,
    mirror: &Path,
) -> (bool, Transcript) {
    let server_l = TcpListener::bind("127.0.0.1:0").unwrap();
    let auth_l = TcpListener::bind("127.0.0.1:0").unwrap();
    let server_ep = Endpoint::new("127.0.0.1", server_l.local_addr().unwrap().port()).unwrap();
    let auth_ep = Endpoint::new("127.0.0.1", auth_l.local_addr().unwrap().port()).unwrap();
    let clock_dyn: Arc<dyn Clock> = clock;

    let server_cfg = ServerConfig {
        variant,
        entropy_bits: 128,
        seed,
        db,
        policy,
        clock: Arc::clone(&clock_dyn),
        max_sessions: Some(1),
    };
    let auth_cfg = AuthenticatorConfig {
        variant,
        upstream: server_ep,
        first_id: id,
        mirror: Some(mirror.to_path_buf()),
        clock: Arc::clone(&clock_dyn),
        max_sessions: Some(1),
    };
    let s = thread::spawn(move || serve_server(&server_l, server_cfg).unwrap());
    let a = thread::spawn(move || serve_authenticator(&auth_l, auth_cfg).unwrap());

    let verdict = run_applicant(&ApplicantConfig {
        variant,
        upstream: auth_ep,
        credentials: creds.clone(),
        clock: clock_dyn,
    })
    .unwrap();
    a.join().unwrap();
    s.join().unwrap();
    (verdict, load_transcript(mirror).unwrap())
}

/// True if `needle` occurs anywhere inside `haystack`.
pub fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}
