use std::fs::OpenOptions;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use eaplab_core::actors::{Credentials, FreshnessPolicy, ServerContext, DEFAULT_WINDOW_MILLIS};
use eaplab_core::attack::{run_attack, AttackOptions, Strategy, CSV_HEADER, DEFAULT_ENTROPY_CAP};
use eaplab_core::clock::{Clock, SimClock, SystemClock};
use eaplab_core::crypto::{ChallengeSource, IdByte, Password, Timestamp};
use eaplab_core::experiment::{
    generate_dictionary, log2_ratio_slope, run_trial, summarize, SweepConfig, SWEEP_CSV_HEADER,
};
use eaplab_core::harness::{replay_session, run_session, SessionConfig};
use eaplab_core::netdemo::{
    run_applicant, serve_authenticator, serve_server, ApplicantConfig, AuthenticatorConfig,
    Endpoint, ServerConfig,
};
use eaplab_core::protocol::{ProtocolVariant, Username};
use eaplab_core::storage::{load_transcript, load_user_db, load_wordlist, save_transcript};

/// Simulated start time used whenever a seed is given without `--clock-ms`.
const DEFAULT_SIM_CLOCK_MS: u64 = 1_700_000_000_000;

#[derive(Parser)]
#[command(name = "eaplab", version, about = "EAP-MD5 handshake laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one in-memory session and print the verdict.
    Run(RunArgs),
    /// Attack a captured transcript with a wordlist.
    Attack(AttackArgs),
    /// Run a session, then replay the applicant's messages to a fresh server session.
    Replay(ReplayArgs),
    /// Cost sweep over challenge entropies; writes one CSV row per (entropy, trial).
    Sweep(SweepArgs),
    /// Run one role of the TCP demo.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Baseline,
    Hardened,
}

impl From<Variant> for ProtocolVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Baseline => ProtocolVariant::Baseline,
            Variant::Hardened => ProtocolVariant::Hardened,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Dictionary,
    ChallengeBruteforce,
    TranscriptProbe,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Dictionary => Strategy::BaselineDictionary,
            StrategyArg::ChallengeBruteforce => Strategy::HardenedChallengeBruteForce,
            StrategyArg::TranscriptProbe => Strategy::HardenedTranscriptProbe,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Applicant,
    Authenticator,
    Server,
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long, value_enum)]
    variant: Variant,
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    user: String,
    #[arg(long)]
    password_hex: String,
    /// Seeds the challenge source. With a seed the clock is simulated too.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated clock start in Unix milliseconds.
    #[arg(long)]
    clock_ms: Option<u64>,
    #[arg(long, default_value_t = 128)]
    entropy_bits: u32,
    #[arg(long, default_value_t = DEFAULT_WINDOW_MILLIS)]
    window_ms: u64,
    /// Session ID chosen by the authenticator.
    #[arg(long, default_value_t = 1)]
    id: u8,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Save the captured transcript here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long)]
    wordlist: PathBuf,
    #[arg(long, value_enum, default_value = "dictionary")]
    strategy: StrategyArg,
    /// Challenge entropy the captured session used (brute force only).
    #[arg(long)]
    entropy_bits: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_ENTROPY_CAP)]
    entropy_cap: u32,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Append the report as a CSV row.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Advance the clock this much before replaying.
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
    /// Also save the original transcript.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Dictionary to plant passwords in; generated from the seed if absent.
    #[arg(long)]
    wordlist: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    dict_size: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [6, 8, 10, 12])]
    entropy_bits: Vec<u32>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value_t = DEFAULT_ENTROPY_CAP)]
    entropy_cap: u32,
    /// CSV output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, value_enum)]
    role: Role,
    #[arg(long, value_enum)]
    variant: Variant,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 0)]
    port: u16,
    /// Next hop: the server for the authenticator, the authenticator for the applicant.
    #[arg(long)]
    upstream: Option<Endpoint>,
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long)]
    user: Option<String>,
    #[arg(long)]
    password_hex: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    entropy_bits: u32,
    #[arg(long, default_value_t = DEFAULT_WINDOW_MILLIS)]
    window_ms: u64,
    #[arg(long, default_value_t = 1)]
    id: u8,
    /// Authenticator: mirror each session to this transcript file.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Exit after this many sessions.
    #[arg(long)]
    sessions: Option<usize>,
}

fn parse_credentials(user: &str, password_hex: &str) -> Result<Credentials> {
    let username = Username::new(user.as_bytes()).context("--user")?;
    let bytes = hex::decode(password_hex).context("--password-hex is not hex")?;
    let password = Password::new(bytes).context("--password-hex")?;
    if !password.meets_length_recommendation() {
        log::warn!(
            "password is {} bytes; at least 16 is recommended",
            password.len()
        );
    }
    Ok(Credentials { username, password })
}

fn window(ms: u64) -> Result<u64> {
    if ms == 0 {
        bail!("--window-ms must be positive");
    }
    Ok(ms)
}

struct Prepared {
    config: SessionConfig,
    credentials: Credentials,
    db: eaplab_core::actors::UserDatabase,
    policy: FreshnessPolicy,
    clock: Box<dyn ClockExt>,
}

/// A clock that can also be advanced, when it is simulated.
trait ClockExt: Clock {
    fn advance(&self, _millis: u64) -> bool {
        false
    }
}

impl ClockExt for SystemClock {}

impl ClockExt for SimClock {
    fn advance(&self, millis: u64) -> bool {
        SimClock::advance(self, millis);
        true
    }
}

fn prepare(args: &SessionArgs) -> Result<Prepared> {
    let db = load_user_db(&args.db)?;
    let credentials = parse_credentials(&args.user, &args.password_hex)?;
    let clock: Box<dyn ClockExt> = match (args.seed, args.clock_ms) {
        (_, Some(ms)) => Box::new(SimClock::new(Timestamp(ms))),
        (Some(_), None) => Box::new(SimClock::new(Timestamp(DEFAULT_SIM_CLOCK_MS))),
        (None, None) => Box::new(SystemClock),
    };
    let config = SessionConfig {
        variant: args.variant.into(),
        entropy_bits: args.entropy_bits,
        rng_seed: args.seed.unwrap_or_else(rand::random),
        id: IdByte(args.id),
    };
    config.challenge_source().context("--entropy-bits")?;
    Ok(Prepared {
        config,
        credentials,
        db,
        policy: FreshnessPolicy::new(window(args.window_ms)?),
        clock,
    })
}

fn verdict_word(v: bool) -> &'static str {
    if v {
        "accept"
    } else {
        "reject"
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let p = prepare(&args.session)?;
    let ctx = ServerContext {
        db: &p.db,
        policy: &p.policy,
        clock: p.clock.as_ref(),
    };
    let outcome = run_session(&p.config, &p.credentials, &ctx)?;
    println!(
        "variant={} verdict={} decision={:?} messages={}",
        p.config.variant,
        verdict_word(outcome.verdict),
        outcome.decision,
        outcome.transcript.len()
    );
    if let Some(out) = &args.out {
        save_transcript(&outcome.transcript, out)?;
    }
    Ok(if outcome.verdict {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(f, "{header}")?;
    }
    for r in rows {
        writeln!(f, "{r}")?;
    }
    Ok(())
}

fn cmd_attack(args: AttackArgs) -> Result<ExitCode> {
    let transcript = load_transcript(&args.transcript)
        ?;
    let dict = load_wordlist(&args.wordlist)
        ?;
    let strategy: Strategy = args.strategy.into();
    if strategy == Strategy::HardenedChallengeBruteForce && args.entropy_bits.is_none() {
        bail!("--strategy challenge-bruteforce needs --entropy-bits");
    }
    let opts = AttackOptions {
        jobs: args.jobs.max(1),
        entropy_cap: args.entropy_cap,
    };
    let report = run_attack(strategy, &transcript, &dict, args.entropy_bits, &opts)?;
    println!("{}", report.to_record());
    if strategy == Strategy::HardenedChallengeBruteForce {
        // A plain dictionary attack reaching the same position costs one hash per word.
        let dictionary_cost = report.index.map_or(dict.len(), |i| i + 1).max(1) as f64;
        println!(
            "dictionary_equivalent_evaluations={} ratio={:.2}",
            dictionary_cost,
            report.hash_evaluations as f64 / dictionary_cost
        );
    }
    if let Some(out) = &args.out {
        append_csv(out, CSV_HEADER, &[report.to_csv_row()])?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode> {
    let p = prepare(&args.session)?;
    let ctx = ServerContext {
        db: &p.db,
        policy: &p.policy,
        clock: p.clock.as_ref(),
    };
    let original = run_session(&p.config, &p.credentials, &ctx)?;
    if let Some(out) = &args.out {
        save_transcript(&original.transcript, out)?;
    }
    if args.delay_ms > 0 && !p.clock.advance(args.delay_ms) {
        std::thread::sleep(std::time::Duration::from_millis(args.delay_ms));
    }
    let replay = replay_session(&original.transcript, &ctx, p.config.challenge_source()?)?;
    println!(
        "variant={} original={} replay={} replay_decision={:?}",
        p.config.variant,
        verdict_word(original.verdict),
        verdict_word(replay.verdict),
        replay.decision
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    for &b in &args.entropy_bits {
        if b == 0 || b > args.entropy_cap {
            bail!("--entropy-bits {b} outside 1..={}", args.entropy_cap);
        }
    }
    let dictionary = match &args.wordlist {
        Some(p) => load_wordlist(p)?,
        None => generate_dictionary(args.dict_size, args.seed),
    };
    let config = SweepConfig {
        entropy_bits: args.entropy_bits.clone(),
        trials: args.trials,
        seed: args.seed,
        dictionary,
        options: AttackOptions {
            jobs: args.jobs.max(1),
            entropy_cap: args.entropy_cap,
        },
    };

    let mut rows = Vec::new();
    for &bits in &config.entropy_bits {
        for trial in 0..config.trials {
            rows.push(run_trial(&config, bits, trial)?);
        }
        log::info!("entropy {bits}: {} trials done", config.trials);
    }
    let csv: Vec<String> = rows.iter().map(|r| r.to_csv_row()).collect();
    match &args.out {
        Some(out) => {
            let mut text = format!("{SWEEP_CSV_HEADER}\n");
            for r in &csv {
                text.push_str(r);
                text.push('\n');
            }
            std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
        }
        None => {
            println!("{SWEEP_CSV_HEADER}");
            for r in &csv {
                println!("{r}");
            }
        }
    }

    let summaries = summarize(&rows);
    for s in &summaries {
        eprintln!(
            "entropy_bits={} trials={} mean_dictionary={:.1} mean_bruteforce={:.1} mean_probe={:.1} log2_ratio={:.3}",
            s.entropy_bits, s.trials, s.mean_baseline, s.mean_bruteforce, s.mean_probe, s.log2_ratio()
        );
    }
    if let Some(slope) = log2_ratio_slope(&summaries) {
        eprintln!("log2_ratio_slope={slope:.4}");
    }
    Ok(ExitCode::SUCCESS)
}

/// Port 0 picks a free port; the bound address is printed on stdout.
fn listen(host: &str, port: u16) -> Result<TcpListener> {
    TcpListener::bind((host, port)).with_context(|| format!("binding {host}:{port}"))
}

fn cmd_serve(args: ServeArgs) -> Result<ExitCode> {
    let variant: ProtocolVariant = args.variant.into();
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    match args.role {
        Role::Server => {
            let db_path = args.db.as_ref().context("server role needs --db")?;
            let db = load_user_db(db_path)
                ?;
            ChallengeSource::new(args.entropy_bits, None).context("--entropy-bits")?;
            let listener = listen(&args.host, args.port)?;
            println!("listening {}", listener.local_addr()?);
            std::io::stdout().flush()?;
            serve_server(
                &listener,
                ServerConfig {
                    variant,
                    entropy_bits: args.entropy_bits,
                    seed: args.seed,
                    db: Arc::new(db),
                    policy: Arc::new(FreshnessPolicy::new(window(args.window_ms)?)),
                    clock,
                    max_sessions: args.sessions,
                },
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Role::Authenticator => {
            let upstream = args
                .upstream
                .clone()
                .context("authenticator role needs --upstream (the server)")?;
            let listener = listen(&args.host, args.port)?;
            println!("listening {}", listener.local_addr()?);
            std::io::stdout().flush()?;
            serve_authenticator(
                &listener,
                AuthenticatorConfig {
                    variant,
                    upstream,
                    first_id: IdByte(args.id),
                    mirror: args.transcript.clone(),
                    clock,
                    max_sessions: args.sessions,
                },
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Role::Applicant => {
            let upstream = args
                .upstream
                .clone()
                .context("applicant role needs --upstream (the authenticator)")?;
            let user = args.user.as_deref().context("applicant role needs --user")?;
            let pw = args
                .password_hex
                .as_deref()
                .context("applicant role needs --password-hex")?;
            let verdict = run_applicant(&ApplicantConfig {
                variant,
                upstream,
                credentials: parse_credentials(user, pw)?,
                clock,
            })?;
            println!("verdict={}", verdict_word(verdict));
            Ok(if verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
