//! Scaled-entropy cost sweep.
//!
//! Each trial plants the victim's password at a random position of a fixed
//! dictionary, captures one baseline and one hardened session, and runs
//! every attack on the captures. Comparing mean costs across challenge
//! widths shows how much the challenge search multiplies the per-guess cost.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::actors::{Credentials, FreshnessPolicy, ServerContext, UserDatabase, UserRecord};
use crate::attack::{
    baseline_dictionary_attack, hardened_challenge_bruteforce, hardened_transcript_probe,
    AttackError, AttackOptions, AttackReport, Dictionary,
};
use crate::clock::SimClock;
use crate::crypto::{IdByte, Password, Timestamp};
use crate::harness::{run_session, SessionConfig, SessionError, Transcript};
use crate::protocol::{ProtocolVariant, Username};

pub const SWEEP_CSV_HEADER: &str =
    "entropy_bits,trial,index,baseline_evaluations,bruteforce_evaluations,probe_evaluations";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// `n` distinct printable 16-byte candidates.
pub fn generate_dictionary(n: usize, seed: u64) -> Dictionary {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let w: Vec<u8> = (0..16)
            .map(|_| *ALPHABET.choose(&mut rng).expect("non-empty alphabet"))
            .collect();
        if seen.insert(w.clone()) {
            words.push(Password::new(w).expect("16 bytes"));
        }
    }
    Dictionary::new(words)
}

/// An honest capture of one session for a single-user database.
#[derive(Debug, Clone)]
pub struct Capture {
    pub transcript: Transcript,
    pub config: SessionConfig,
}

/// Runs an honest session for `password` and returns the capture.
pub fn capture_session(
    variant: ProtocolVariant,
    password: &Password,
    entropy_bits: u32,
    rng: &mut impl Rng,
) -> Result<Capture, ExperimentError> {
    let username = Username::new(format!("user{:08x}", rng.gen::<u32>())).expect("short name");
    let creds = Credentials {
        username: username.clone(),
        password: password.clone(),
    };
    let db = UserDatabase::from_records([UserRecord {
        username,
        password: password.clone(),
    }])
    .expect("single record");
    let policy = FreshnessPolicy::default();
    let clock = SimClock::new(Timestamp(rng.gen_range(1_600_000_000_000..1_900_000_000_000)));
    let ctx = ServerContext {
        db: &db,
        policy: &policy,
        clock: &clock,
    };
    let config = SessionConfig {
        variant,
        entropy_bits,
        rng_seed: rng.gen(),
        id: IdByte(rng.gen()),
    };
    let outcome = run_session(&config, &creds, &ctx)?;
    debug_assert!(outcome.verdict);
    Ok(Capture {
        transcript: outcome.transcript,
        config,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub entropy_bits: u32,
    pub trial: usize,
    /// Where the password was planted.
    pub index: usize,
    pub baseline: AttackReport,
    pub bruteforce: AttackReport,
    pub probe: AttackReport,
}

impl SweepRow {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.entropy_bits,
            self.trial,
            self.index,
            self.baseline.hash_evaluations,
            self.bruteforce.hash_evaluations,
            self.probe.hash_evaluations
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub entropy_bits: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub dictionary: Dictionary,
    pub options: AttackOptions,
}

fn trial_rng(seed: u64, bits: u32, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(bits) << 32 | trial as u64);
    rng
}

/// Runs one trial at `bits` of challenge entropy.
pub fn run_trial(
    config: &SweepConfig,
    bits: u32,
    trial: usize,
) -> Result<SweepRow, ExperimentError> {
    let d = &config.dictionary;
    if d.is_empty() {
        return Err(ExperimentError::EmptyDictionary);
    }
    let mut rng = trial_rng(config.seed, bits, trial);
    // Plant at the first occurrence so the expected match index is exact.
    let index = loop {
        let k = rng.gen_range(0..d.len());
        if d.position(&d.words()[k]) == Some(k) {
            break k;
        }
    };
    let password = d.words()[index].clone();

    let baseline = capture_session(ProtocolVariant::Baseline, &password, 128, &mut rng)?;
    let hardened = capture_session(ProtocolVariant::Hardened, &password, bits, &mut rng)?;
    let opts = &config.options;
    Ok(SweepRow {
        entropy_bits: bits,
        trial,
        index,
        baseline: baseline_dictionary_attack(&baseline.transcript, d, opts)?,
        bruteforce: hardened_challenge_bruteforce(&hardened.transcript, d, bits, opts)?,
        probe: hardened_transcript_probe(&hardened.transcript, d, opts)?,
    })
}

/// Runs every (entropy, trial) pair in order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut rows = Vec::with_capacity(config.entropy_bits.len() * config.trials);
    for &bits in &config.entropy_bits {
        for trial in 0..config.trials {
            rows.push(run_trial(config, bits, trial)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySummary {
    pub entropy_bits: u32,
    pub trials: usize,
    pub mean_baseline: f64,
    pub mean_bruteforce: f64,
    pub mean_probe: f64,
}

impl EntropySummary {
    pub fn log2_ratio(&self) -> f64 {
        (self.mean_bruteforce / self.mean_baseline).log2()
    }
}

/// Per-entropy means, in order of first appearance.
pub fn summarize(rows: &[SweepRow]) -> Vec<EntropySummary> {
    let mut order: Vec<u32> = Vec::new();
    for r in rows {
        if !order.contains(&r.entropy_bits) {
            order.push(r.entropy_bits);
        }
    }
    order
        .into_iter()
        .map(|bits| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.entropy_bits == bits).collect();
            let n = group.len() as f64;
            let mean = |f: fn(&SweepRow) -> u64| group.iter().map(|r| f(r) as f64).sum::<f64>() / n;
            EntropySummary {
                entropy_bits: bits,
                trials: group.len(),
                mean_baseline: mean(|r| r.baseline.hash_evaluations),
                mean_bruteforce: mean(|r| r.bruteforce.hash_evaluations),
                mean_probe: mean(|r| r.probe.hash_evaluations),
            }
        })
        .collect()
}

/// Least-squares slope of `y` on `x`. `None` for fewer than two distinct `x`.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Slope of `log2(mean bruteforce / mean baseline)` against entropy bits.
pub fn log2_ratio_slope(summaries: &[EntropySummary]) -> Option<f64> {
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .map(|s| (f64::from(s.entropy_bits), s.log2_ratio()))
        .collect();
    ols_slope(&points)
}
