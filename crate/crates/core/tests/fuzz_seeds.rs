//! Replays the checked-in fuzz corpus through the fuzz properties, plus
//! deterministic byte-level mutations of every seed.

#[path = "../../../fuzz/src/checks.rs"]
mod checks;

use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGETS: [&str; 8] = [
    "tokenize",
    "parse_query",
    "parse_pattern",
    "split_statements",
    "run_query",
    "ingest_csv",
    "ingest_xes",
    "ingest_config",
];

/// Same dispatch as the fuzz binaries; text targets skip non-UTF-8 input.
fn run(target: &str, data: &[u8]) {
    let text = std::str::from_utf8(data);
    match (target, text) {
        ("ingest_csv", _) => checks::ingest_csv_input(data),
        ("ingest_xes", _) => checks::ingest_xes_input(data),
        (_, Err(_)) => {}
        ("tokenize", Ok(t)) => checks::tokenize_input(t),
        ("parse_query", Ok(t)) => checks::parse_query_input(t),
        ("parse_pattern", Ok(t)) => checks::parse_pattern_input(t),
        ("split_statements", Ok(t)) => checks::split_statements_input(t),
        ("run_query", Ok(t)) => checks::run_query_input(t),
        ("ingest_config", Ok(t)) => checks::ingest_config_input(t),
        (other, _) => panic!("unknown target {other}"),
    }
}

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.into_iter().map(|p| fs::read(p).unwrap()).collect()
}

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    let mut data = seed.to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        let pos = if data.is_empty() { 0 } else { rng.gen_range(0..data.len()) };
        match rng.gen_range(0..4) {
            0 if !data.is_empty() => data[pos] = rng.gen(),
            1 if !data.is_empty() => {
                data.remove(pos);
            }
            2 => {
                const ALPHABET: &[u8] = b"();'\"~>^$*|,\n\t-0123456789aENOTANY";
                let b = ALPHABET[rng.gen_range(0..ALPHABET.len())];
                data.insert(pos, b);
            }
            _ if !data.is_empty() => {
                let end = rng.gen_range(pos..data.len());
                let chunk = data[pos..=end].to_vec();
                data.splice(pos..pos, chunk);
            }
            _ => {}
        }
    }
    data
}

#[test]
fn corpus_seeds_hold_the_fuzz_properties() {
    for name in TARGETS {
        let seeds = seeds(name);
        assert!(!seeds.is_empty(), "no seeds for {name}");
        for seed in &seeds {
            run(name, seed);
        }
    }
}

#[test]
fn mutated_seeds_hold_the_fuzz_properties() {
    // SIGNAL_FUZZ_ROUNDS raises the mutation count for a longer local run.
    let rounds = std::env::var("SIGNAL_FUZZ_ROUNDS").ok().and_then(|v| v.parse().ok()).unwrap_or(150);
    let mut rng = ChaCha8Rng::seed_from_u64(0xF022);
    for name in TARGETS {
        for seed in seeds(name) {
            for _ in 0..rounds {
                let data = mutate(&mut rng, &seed);
                run(name, &data);
            }
        }
    }
}
