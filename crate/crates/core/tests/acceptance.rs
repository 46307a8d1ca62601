//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

mod common;

use std::cell::Cell;
use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::{any, prop_assert_eq};
use proptest::collection::vec;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eaplab_core::actors::{
    Credentials, Decision, FreshnessPolicy, ServerContext, UserRecord, DEFAULT_WINDOW_MILLIS,
};
use eaplab_core::attack::{
    baseline_dictionary_attack, hardened_transcript_probe, run_attack, AttackOptions,
    AttackReport, Dictionary, Strategy,
};
use eaplab_core::clock::SimClock;
use eaplab_core::crypto::{md5_digest, Challenge, IdByte, Password, Timestamp};
use eaplab_core::experiment::{
    capture_session, generate_dictionary, log2_ratio_slope, run_sweep, summarize, SweepConfig,
};
use eaplab_core::harness::{replay_session, run_session, SessionConfig, Transcript};
use eaplab_core::protocol::{
    encode_message, make_request, make_response, recover_c, server_expected_response, Message,
    ProtocolVariant, Username,
};

use common::{contains, db_of, honest_session, loopback_session, random_bytes, T0};

/// Independent reference computations built on the `md5` crate.
mod oracle {
    pub fn md5(data: &[u8]) -> [u8; 16] {
        md5::compute(data).0
    }

    fn xor(a: [u8; 16], b: [u8; 16]) -> [u8; 16] {
        std::array::from_fn(|i| a[i] ^ b[i])
    }

    pub fn id_block(id: u8) -> [u8; 16] {
        let mut b = [0; 16];
        b[15] = id;
        b
    }

    pub fn pad(pw: &[u8]) -> [u8; 16] {
        let mut b = [0; 16];
        let n = pw.len().min(16);
        b[..n].copy_from_slice(&pw[..n]);
        b
    }

    pub fn ts_block(t: u64) -> [u8; 16] {
        let mut b = [0; 16];
        b[8..].copy_from_slice(&t.to_be_bytes());
        b
    }

    pub fn baseline(id_plus1: u8, pw: &[u8], challenge: &[u8; 16]) -> [u8; 16] {
        let mut input = vec![id_plus1];
        input.extend_from_slice(pw);
        input.extend_from_slice(challenge);
        md5(&input)
    }

    pub fn inner(id: u8, challenge: [u8; 16]) -> [u8; 16] {
        md5(&xor(id_block(id), challenge))
    }

    pub fn request(id: u8, challenge: [u8; 16], pw: &[u8]) -> [u8; 16] {
        xor(inner(id, challenge), pad(pw))
    }

    pub fn response(id: u8, challenge: [u8; 16], t: u64) -> [u8; 16] {
        md5(&xor(inner(id, challenge), ts_block(t)))
    }

    /// First dictionary index whose baseline response matches, and the hashes spent.
    pub fn dictionary(
        words: &[Vec<u8>],
        id_plus1: u8,
        challenge: &[u8; 16],
        target: &[u8; 16],
    ) -> (Option<usize>, u64) {
        for (i, w) in words.iter().enumerate() {
            if baseline(id_plus1, w, challenge) == *target {
                return (Some(i), i as u64 + 1);
            }
        }
        (None, words.len() as u64)
    }
}

/// A hardened capture plus the challenge its server drew.
struct Evidence {
    challenge: [u8; 16],
    frames: Vec<Vec<u8>>,
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn random_credentials(rng: &mut ChaCha8Rng) -> Credentials {
    Credentials {
        username: Username::new(random_bytes(rng, 1, 64)).unwrap(),
        password: Password::new(random_bytes(rng, 1, 64)).unwrap(),
    }
}

/// A password that differs from `p` in one of the bytes the hardened
/// variant actually uses.
fn wrong_password(p: &Password, rng: &mut ChaCha8Rng) -> Password {
    let mut bytes = p.as_bytes().to_vec();
    let i = rng.gen_range(0..bytes.len().min(16));
    bytes[i] ^= rng.gen_range(1..=255u8);
    Password::new(bytes).unwrap()
}

fn random_config(variant: ProtocolVariant, rng: &mut ChaCha8Rng) -> SessionConfig {
    SessionConfig {
        id: IdByte(rng.gen()),
        ..SessionConfig::new(variant, rng.gen())
    }
}

/// Checks the masked request against the oracle and records the capture.
fn record_hardened(config: &SessionConfig, password: &Password, t: &Transcript, out: &mut Vec<Evidence>) {
    assert_eq!(t.variant, ProtocolVariant::Hardened);
    let challenge = config.challenge_source().unwrap().next_challenge().0;
    let request = t
        .messages()
        .find_map(|m| match m {
            Message::ChallengeMasked { id, request } => Some((*id, *request)),
            _ => None,
        })
        .expect("masked challenge in transcript");
    assert_eq!(request.0, config.id);
    assert_eq!(
        request.1,
        oracle::request(config.id.0, challenge, password.as_bytes()),
        "recomputed challenge does not explain the transcript"
    );
    out.push(Evidence {
        challenge,
        frames: t.wire_bytes(),
    });
}

fn c1_md5_vectors() -> Outcome {
    const VECTORS: [(&str, &str); 7] = [
        ("", "d41d8cd98f00b204e9800998ecf8427e"),
        ("a", "0cc175b9c0f1b6a831c399e269772661"),
        ("abc", "900150983cd24fb0d6963f7d28e17f72"),
        ("message digest", "f96b697d7cb7938d525a2f31aaf161d0"),
        ("abcdefghijklmnopqrstuvwxyz", "c3fcd3d76192e4007dfb496cca67e13b"),
        (
            "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789",
            "d174ab98d277d9f5a5611c2c9f419d9f",
        ),
        (
            "12345678901234567890123456789012345678901234567890123456789012345678901234567890",
            "57edf4a22be3c955ac49da2e2107b67a",
        ),
    ];
    let passed = VECTORS
        .iter()
        .filter(|(input, want)| hex::encode(md5_digest(input.as_bytes()).0) == *want)
        .count();
    outcome(passed == 7, format!("{passed}/7 vectors bit-exact"))
}

fn c2_honest_completeness(evidence: &mut Vec<Evidence>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut accepted = 0;
    let mut rejected = 0;
    for variant in [ProtocolVariant::Baseline, ProtocolVariant::Hardened] {
        for _ in 0..1000 {
            let creds = random_credentials(&mut rng);
            let cfg = random_config(variant, &mut rng);
            let now = rng.gen_range(T0..T0 * 2);
            let out = honest_session(&cfg, &creds, &creds.password, now);
            if out.verdict && out.decision == Some(Decision::Accepted) {
                accepted += 1;
            }
            if variant == ProtocolVariant::Hardened {
                record_hardened(&cfg, &creds.password, &out.transcript, evidence);
            }
        }
        for _ in 0..1000 {
            let creds = random_credentials(&mut rng);
            let stored = wrong_password(&creds.password, &mut rng);
            let cfg = random_config(variant, &mut rng);
            let now = rng.gen_range(T0..T0 * 2);
            let out = honest_session(&cfg, &creds, &stored, now);
            if !out.verdict && out.decision == Some(Decision::DigestMismatch) {
                rejected += 1;
            }
            if variant == ProtocolVariant::Hardened {
                // The server masked with the stored password, not the applicant's.
                record_hardened(&cfg, &stored, &out.transcript, evidence);
            }
        }
    }
    outcome(
        accepted == 2000 && rejected == 2000,
        format!("{accepted}/2000 honest accepted, {rejected}/2000 wrong-password rejected"),
    )
}

fn c3_completion_identity(evidence: &mut Vec<Evidence>) -> Outcome {
    let cases = Cell::new(0u32);
    let frames = std::cell::RefCell::new(Vec::new());
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (any::<u8>(), any::<[u8; 16]>(), vec(any::<u8>(), 1..=64), any::<u64>());
    let result = runner.run(&strategy, |(id, ch, pw, t)| {
        cases.set(cases.get() + 1);
        let password = Password::new(pw.clone()).unwrap();
        let challenge = Challenge(ch);
        let request = make_request(IdByte(id), &challenge, &password);
        let c = recover_c(&request, &password);
        let response = make_response(&c, Timestamp(t));
        let expected = server_expected_response(IdByte(id), &challenge, Timestamp(t));
        prop_assert_eq!(response, expected);
        prop_assert_eq!(request, oracle::request(id, ch, &pw));
        prop_assert_eq!(c.0, oracle::inner(id, ch));
        prop_assert_eq!(response.0, oracle::response(id, ch, t));
        let wire = [
            encode_message(&Message::ChallengeMasked {
                id: IdByte(id),
                request,
            }),
            encode_message(&Message::HardenedResponse {
                digest: response,
                timestamp: Timestamp(t),
            }),
        ];
        frames.borrow_mut().push(Evidence {
            challenge: ch,
            frames: wire.to_vec(),
        });
        Ok(())
    });
    evidence.extend(frames.into_inner());
    let n = cases.get();
    match result {
        Ok(()) => outcome(n >= 10_000, format!("{n} tuples, 0 failures")),
        Err(e) => outcome(false, format!("after {n} tuples: {e}")),
    }
}

/// 1000 distinct printable candidates of varied length.
fn random_dictionary(rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(1000);
    while words.len() < 1000 {
        let n = rng.gen_range(4..=24);
        let w: Vec<u8> = (0..n).map(|_| rng.gen_range(b'!'..=b'~')).collect();
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn c4_dictionary_oracle(evidence: &mut Vec<Evidence>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut good = 0;
    let mut first_bad = None;
    for trial in 0..200 {
        let words = random_dictionary(&mut rng);
        let dict: Dictionary = words.iter().map(|w| Password::new(w.clone()).unwrap()).collect();
        let k = rng.gen_range(0..words.len());
        let password = dict.words()[k].clone();

        let base = capture_session(ProtocolVariant::Baseline, &password, 128, &mut rng).unwrap();
        let report = baseline_dictionary_attack(&base.transcript, &dict, &AttackOptions::default())
            .unwrap();
        let (id_plus1, challenge) = base
            .transcript
            .messages()
            .find_map(|m| match m {
                Message::ChallengePlain { id_plus1, challenge } => Some((*id_plus1, *challenge)),
                _ => None,
            })
            .unwrap();
        let target = base
            .transcript
            .messages()
            .find_map(|m| match m {
                Message::BaselineResponse { digest } => Some(digest.0),
                _ => None,
            })
            .unwrap();
        let (oracle_index, oracle_cost) = oracle::dictionary(&words, id_plus1.0, &challenge.0, &target);

        let ok = report.found.is_some()
            && report.index == Some(k)
            && report.hash_evaluations == k as u64 + 1
            && oracle_index == Some(k)
            && oracle_cost == report.hash_evaluations;
        if ok {
            good += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!(
                "trial {trial}: k={k} engine={:?}/{} oracle={oracle_index:?}/{oracle_cost}",
                report.index, report.hash_evaluations
            ));
        }

        let hard = capture_session(ProtocolVariant::Hardened, &password, 128, &mut rng).unwrap();
        record_hardened(&hard.config, &password, &hard.transcript, evidence);
    }
    let mut detail = format!("{good}/200 transcripts: found at k with k+1 hashes, oracle agrees");
    if let Some(b) = first_bad {
        detail.push_str(&format!("; first mismatch {b}"));
    }
    outcome(good == 200, detail)
}

fn c5_masking(evidence: &[Evidence]) -> Outcome {
    let mut leaks = 0;
    let mut frames = 0;
    for e in evidence {
        for f in &e.frames {
            frames += 1;
            if contains(f, &e.challenge) {
                leaks += 1;
            }
        }
    }
    outcome(
        leaks == 0 && !evidence.is_empty(),
        format!(
            "{} hardened captures, {frames} frames, {leaks} contain the plaintext challenge",
            evidence.len()
        ),
    )
}

fn c6_sweep() -> Outcome {
    let config = SweepConfig {
        entropy_bits: vec![6, 8, 10, 12],
        trials: 50,
        seed: 0xC6,
        dictionary: generate_dictionary(1000, 0xC6),
        options: AttackOptions::default(),
    };
    let rows = run_sweep(&config).unwrap();
    let all_found = rows
        .iter()
        .all(|r| r.bruteforce.index == Some(r.index) && r.baseline.index == Some(r.index));
    let summaries = summarize(&rows);
    let slope = log2_ratio_slope(&summaries).unwrap();
    let ratios: Vec<String> = summaries
        .iter()
        .map(|s| format!("{}b:{:.3}", s.entropy_bits, s.log2_ratio()))
        .collect();
    outcome(
        all_found && (slope - 1.0).abs() <= 0.2,
        format!(
            "slope {slope:.4} over 4x50 trials; log2 ratios [{}]",
            ratios.join(" ")
        ),
    )
}

fn c7_replay() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut fresh_rejected = 0;
    let mut stale_rejected = 0;
    let mut baseline_accepted = 0;
    for _ in 0..100 {
        for (variant, delay) in [
            (ProtocolVariant::Hardened, 0),
            (ProtocolVariant::Hardened, DEFAULT_WINDOW_MILLIS + 1),
            (ProtocolVariant::Baseline, 0),
        ] {
            let creds = random_credentials(&mut rng);
            let cfg = random_config(variant, &mut rng);
            let db = db_of([UserRecord {
                username: creds.username.clone(),
                password: creds.password.clone(),
            }]);
            let policy = FreshnessPolicy::default();
            let clock = SimClock::new(Timestamp(rng.gen_range(T0..T0 * 2)));
            let ctx = ServerContext {
                db: &db,
                policy: &policy,
                clock: &clock,
            };
            let original = run_session(&cfg, &creds, &ctx).unwrap();
            assert!(original.verdict);
            clock.advance(delay);
            let replay =
                replay_session(&original.transcript, &ctx, cfg.challenge_source().unwrap()).unwrap();
            match (variant, delay) {
                (ProtocolVariant::Hardened, 0) => fresh_rejected += usize::from(!replay.verdict),
                (ProtocolVariant::Hardened, _) => stale_rejected += usize::from(!replay.verdict),
                (ProtocolVariant::Baseline, _) => baseline_accepted += usize::from(replay.verdict),
            }
        }
    }
    outcome(
        fresh_rejected == 100 && stale_rejected == 100 && baseline_accepted == 100,
        format!(
            "hardened rejected {fresh_rejected}/100 within window, {stale_rejected}/100 stale; baseline accepted {baseline_accepted}/100"
        ),
    )
}

fn probe_run(seed: u64) -> Vec<(usize, AttackReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dict = generate_dictionary(1000, seed);
    (0..100)
        .map(|_| {
            let k = rng.gen_range(0..dict.len());
            let cap = capture_session(ProtocolVariant::Hardened, &dict.words()[k], 128, &mut rng)
                .unwrap();
            let report =
                hardened_transcript_probe(&cap.transcript, &dict, &AttackOptions::default())
                    .unwrap();
            (k, report)
        })
        .collect()
}

fn c8_probe() -> Outcome {
    let a = probe_run(0xC8);
    let b = probe_run(0xC8);
    let deterministic = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1.same_result(&y.1));
    let found = a.iter().filter(|(_, r)| r.found.is_some()).count();
    let at_k = a
        .iter()
        .filter(|(k, r)| r.index == Some(*k) && r.hash_evaluations == *k as u64 + 1)
        .count();
    let total: u64 = a.iter().map(|(_, r)| r.hash_evaluations).sum();
    outcome(
        deterministic,
        format!(
            "deterministic={deterministic}; recovered {found}/100 passwords at 128-bit challenges, {at_k}/100 with exactly k+1 hashes, mean {:.1} hashes per transcript",
            total as f64 / a.len() as f64
        ),
    )
}

fn c9_transport() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mirror = dir.path().join("mirror.txt");
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let mut same = 0;
    let mut n = 0;
    for variant in [ProtocolVariant::Baseline, ProtocolVariant::Hardened] {
        for i in 0..10 {
            let creds = random_credentials(&mut rng);
            let stored = if i % 4 == 3 {
                wrong_password(&creds.password, &mut rng)
            } else {
                creds.password.clone()
            };
            let record = UserRecord {
                username: creds.username.clone(),
                password: stored.clone(),
            };
            let cfg = random_config(variant, &mut rng);
            let now = rng.gen_range(T0..T0 * 2);
            let (net_verdict, net) = loopback_session(
                variant,
                cfg.rng_seed,
                cfg.id,
                &creds,
                Arc::new(db_of([record])),
                Arc::new(FreshnessPolicy::default()),
                Arc::new(SimClock::new(Timestamp(now))),
                &mirror,
            );
            let mem = honest_session(&cfg, &creds, &stored, now);
            n += 1;
            if net.wire_bytes() == mem.transcript.wire_bytes()
                && net == mem.transcript
                && net_verdict == mem.verdict
                && net_verdict == (i % 4 != 3)
            {
                same += 1;
            }
        }
    }
    outcome(
        same == n,
        format!("{same}/{n} loopback sessions byte- and verdict-identical to in-memory runs"),
    )
}

fn c10_parallel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA);
    let dict = generate_dictionary(200, 0xCA);
    let mut same = 0;
    for i in 0..50 {
        let strategy = [
            Strategy::BaselineDictionary,
            Strategy::HardenedChallengeBruteForce,
            Strategy::HardenedTranscriptProbe,
        ][i % 3];
        let bits = rng.gen_range(4..=7);
        let password = if rng.gen_bool(0.2) {
            Password::new(b"not in the dictionary".to_vec()).unwrap()
        } else {
            dict.words()[rng.gen_range(0..dict.len())].clone()
        };
        let (capture_bits, attack_bits) = match strategy {
            Strategy::HardenedChallengeBruteForce => (bits, Some(bits)),
            _ => (128, None),
        };
        let cap = capture_session(strategy.target_variant(), &password, capture_bits, &mut rng)
            .unwrap();
        let run = |jobs| {
            let opts = AttackOptions {
                jobs,
                ..AttackOptions::default()
            };
            run_attack(strategy, &cap.transcript, &dict, attack_bits, &opts).unwrap()
        };
        if run(1).same_result(&run(8)) {
            same += 1;
        }
    }
    outcome(same == 50, format!("{same}/50 instances identical for 1 and 8 jobs"))
}

struct Criterion<'a> {
    number: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: Box<dyn FnOnce() -> Outcome + 'a>,
}

fn main() -> ExitCode {
    let mut evidence = Vec::new();
    let mut results = Vec::new();
    {
        let ev = std::cell::RefCell::new(&mut evidence);
        let criteria: Vec<Criterion> = vec![
            Criterion {
                number: 1,
                name: "md5 conformance",
                limit: Some(Duration::from_secs(1)),
                run: Box::new(c1_md5_vectors),
            },
            Criterion {
                number: 2,
                name: "honest completeness",
                limit: Some(Duration::from_secs(10)),
                run: Box::new(|| c2_honest_completeness(&mut ev.borrow_mut())),
            },
            Criterion {
                number: 3,
                name: "completion identity",
                limit: None,
                run: Box::new(|| c3_completion_identity(&mut ev.borrow_mut())),
            },
            Criterion {
                number: 4,
                name: "dictionary attack oracle equivalence",
                limit: Some(Duration::from_secs(30)),
                run: Box::new(|| c4_dictionary_oracle(&mut ev.borrow_mut())),
            },
            Criterion {
                number: 5,
                name: "challenge masking",
                limit: None,
                run: Box::new(|| c5_masking(&ev.borrow())),
            },
            Criterion {
                number: 6,
                name: "scaled entropy sweep",
                limit: Some(Duration::from_secs(300)),
                run: Box::new(c6_sweep),
            },
            Criterion {
                number: 7,
                name: "replay",
                limit: Some(Duration::from_secs(5)),
                run: Box::new(c7_replay),
            },
            Criterion {
                number: 8,
                name: "transcript probe report",
                limit: None,
                run: Box::new(c8_probe),
            },
            Criterion {
                number: 9,
                name: "transport equivalence",
                limit: None,
                run: Box::new(c9_transport),
            },
            Criterion {
                number: 10,
                name: "parallel determinism",
                limit: None,
                run: Box::new(c10_parallel),
            },
        ];
        for c in criteria {
            let start = Instant::now();
            let out = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            });
            let elapsed = start.elapsed();
            let in_time = c.limit.is_none_or(|l| elapsed < l);
            let limit = c
                .limit
                .map_or(String::new(), |l| format!(" (limit {} s)", l.as_secs()));
            let pass = out.ok && in_time;
            println!(
                "[{}] {:>2} {}: {} in {:.2} s{}",
                if pass { "PASS" } else { "FAIL" },
                c.number,
                c.name,
                out.detail,
                elapsed.as_secs_f64(),
                limit
            );
            results.push(pass);
        }
    }
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
