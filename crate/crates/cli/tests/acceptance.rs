//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Expected values come from oracles written here,
//! independent of the engine's own reference code.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::*;
use http_body_util::BodyExt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use signal_cli::http::{router, AppState};
use signal_core::ingest::{ingest_csv, CsvIngestConfig};
use signal_core::parser::{parse_pattern, tokenize, Pattern};
use signal_core::pattern::{brute_force_match, compile, match_case, BehaviourBitmap, Bitmap, CaseTrace};
use signal_core::store::{Attribute, Catalog, EventLog, Schema};
use signal_core::{Engine, Level, ScalarType, Value};
use tower::ServiceExt;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let checks: [Criterion; 10] = [
        ("golden queries on the support-ticket log", golden_queries),
        ("pattern automaton equals window oracle", pattern_oracle),
        ("pattern operator examples", operator_examples),
        ("universal quantification via negation", universal_via_negation),
        ("desugaring identities", desugar_identities),
        ("type system rejections", type_rejections),
        ("optimizer soundness and plan shape", optimizer_soundness),
        ("CSV flatten round trip", csv_round_trip),
        ("desk-scale performance", performance),
        ("HTTP contract", http_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({detail}; {elapsed:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({elapsed:.2}s)", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn case_ids(engine: &Engine, query: &str, log: Option<&str>) -> Result<Vec<String>, String> {
    let table = engine.query(query, log).map_err(|e| format!("{query}: {e}"))?;
    Ok(table.rows.iter().map(|r| r[0].to_string()).collect())
}

fn golden_queries() -> Check {
    let start = Instant::now();
    // Oracle: read the support-ticket log by hand; cycle time is max minus min end_time.
    let mut times: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    for line in SUPPORT_LOG.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        times.entry(cells[0]).or_default().push(cells[4].parse().unwrap());
    }
    let cycles: Vec<(String, i64)> = times
        .iter()
        .map(|(id, t)| (id.to_string(), t.iter().max().unwrap() - t.iter().min().unwrap()))
        .collect();
    ensure!(
        cycles == [("1001".into(), 133451244), ("1002".into(), 266966516)],
        "hand-computed cycle times {cycles:?}"
    );
    let avg = cycles.iter().map(|c| c.1).sum::<i64>() / cycles.len() as i64;

    let engine = support_engine();
    for q in [REOPENED, CLOSED_BLOCKED, CLOSED_WHILE_BLOCKED] {
        let ids = case_ids(&engine, q, Some("support"))?;
        ensure!(ids == ["1002"], "{q:?} returned {ids:?}");
    }
    let table = engine.query(CYCLE_TIME, Some("support")).map_err(|e| e.to_string())?;
    ensure!(table.columns[0].ty == ScalarType::Duration, "cycle time typed {}", table.columns[0].ty);
    ensure!(table.rows == [[Value::Duration(avg)]], "cycle time {:?}, expected {avg}", table.rows);
    let per_case = engine
        .query("SELECT case_id, (SELECT LAST(end_time) - FIRST(end_time)) FROM THIS_PROCESS", Some("support"))
        .map_err(|e| e.to_string())?;
    let got: Vec<(String, Value)> = per_case.rows.iter().map(|r| (r[0].to_string(), r[1].clone())).collect();
    let want: Vec<(String, Value)> = cycles.iter().map(|(id, c)| (id.clone(), Value::Duration(*c))).collect();
    ensure!(got == want, "per-case cycle times {got:?}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("avg {avg} ms"))
}

// ---- pattern generation and the window oracle ----

const NAMES: [&str; 3] = ["a", "b", "c"];

fn atom(rng: &mut ChaCha8Rng) -> Pattern {
    if rng.gen_bool(0.2) {
        Pattern::Any
    } else {
        Pattern::Behaviour { name: NAMES[rng.gen_range(0..3)].into(), quoted: false, span: Default::default() }
    }
}

/// A single-event class of depth at most `depth`.
fn class(rng: &mut ChaCha8Rng, depth: usize) -> Pattern {
    if depth <= 1 || rng.gen_bool(0.5) {
        return atom(rng);
    }
    if rng.gen_bool(0.5) {
        Pattern::Not(Box::new(class(rng, depth - 1)))
    } else {
        let n = rng.gen_range(2..=3);
        Pattern::Alternation((0..n).map(|_| class(rng, depth - 1)).collect())
    }
}

/// An unanchored pattern of depth at most `depth`.
fn body(rng: &mut ChaCha8Rng, depth: usize) -> Pattern {
    if depth <= 1 || rng.gen_bool(0.2) {
        return atom(rng);
    }
    let d = depth - 1;
    let pair = |rng: &mut ChaCha8Rng| (Box::new(body(rng, d)), Box::new(body(rng, d)));
    match rng.gen_range(0..6) {
        0 => {
            let (a, b) = pair(rng);
            Pattern::DirectlyFollows(a, b)
        }
        1 => {
            let (a, b) = pair(rng);
            Pattern::EventuallyFollows(a, b)
        }
        2 => {
            let (a, b) = pair(rng);
            Pattern::Concat(a, b)
        }
        3 => Pattern::Alternation((0..rng.gen_range(2..=3)).map(|_| body(rng, d)).collect()),
        4 => Pattern::Repeat(Box::new(body(rng, d))),
        _ => Pattern::Not(Box::new(class(rng, d))),
    }
}

fn random_pattern(rng: &mut ChaCha8Rng) -> Pattern {
    let (start, end) = (rng.gen_bool(0.25), rng.gen_bool(0.25));
    if start || end {
        Pattern::Anchored { start, end, inner: Box::new(body(rng, 3)), span: Default::default() }
    } else {
        body(rng, 4)
    }
}

/// `bits[behaviour][position]`
fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<Vec<bool>> {
    (0..3).map(|_| (0..len).map(|_| rng.gen_bool(0.4)).collect()).collect()
}

fn bitmap(bits: &[Vec<bool>]) -> BehaviourBitmap {
    BehaviourBitmap::new(bits.iter().map(|b| Bitmap::from_bools(b.iter().copied())).collect())
}

fn member(p: &Pattern, bits: &[Vec<bool>], pos: usize) -> bool {
    match p {
        Pattern::Behaviour { name, .. } => bits[NAMES.iter().position(|n| n == name).unwrap()][pos],
        Pattern::Any => true,
        Pattern::Not(inner) => !member(inner, bits, pos),
        Pattern::Alternation(items) => items.iter().any(|q| member(q, bits, pos)),
        other => panic!("not a class: {other}"),
    }
}

type Windows = Vec<Vec<bool>>;

fn compose(a: &Windows, b: &Windows) -> Windows {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in i..n {
            if a[i][k] {
                for j in k..n {
                    out[i][j] |= b[k][j];
                }
            }
        }
    }
    out
}

/// `w[i][j]`: the pattern derives exactly the events `i..j`.
fn windows(p: &Pattern, bits: &[Vec<bool>], len: usize) -> Windows {
    let n = len + 1;
    let single = |keep: &dyn Fn(usize) -> bool| {
        let mut w = vec![vec![false; n]; n];
        for i in 0..len {
            w[i][i + 1] = keep(i);
        }
        w
    };
    match p {
        Pattern::Behaviour { .. } | Pattern::Any | Pattern::Not(_) => single(&|i| member(p, bits, i)),
        Pattern::Literal { .. } => panic!("literal in generated pattern"),
        Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) => {
            compose(&windows(a, bits, len), &windows(b, bits, len))
        }
        Pattern::EventuallyFollows(a, b) => {
            let wb = windows(b, bits, len);
            // gap[k][j]: b derives some m..j with m >= k
            let mut gap = vec![vec![false; n]; n];
            for k in (0..n).rev() {
                for j in 0..n {
                    gap[k][j] = wb[k][j] || (k + 1 < n && gap[k + 1][j]);
                }
            }
            compose(&windows(a, bits, len), &gap)
        }
        Pattern::Alternation(items) => {
            let mut w = vec![vec![false; n]; n];
            for q in items {
                let wq = windows(q, bits, len);
                for i in 0..n {
                    for j in 0..n {
                        w[i][j] |= wq[i][j];
                    }
                }
            }
            w
        }
        Pattern::Repeat(inner) => {
            let step = windows(inner, bits, len);
            let mut w: Windows = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
            loop {
                let next = compose(&w, &step);
                let mut changed = false;
                for i in 0..n {
                    for j in 0..n {
                        if next[i][j] && !w[i][j] {
                            w[i][j] = true;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    return w;
                }
            }
        }
        Pattern::Anchored { start, end, inner, .. } => {
            let mut w = windows(inner, bits, len);
            for (i, row) in w.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell &= (!start || i == 0) && (!end || j == len);
                }
            }
            w
        }
    }
}

fn oracle_match(p: &Pattern, bits: &[Vec<bool>], len: usize) -> bool {
    windows(p, bits, len).iter().flatten().any(|&x| x)
}

fn reparse(p: &Pattern) -> Result<Pattern, String> {
    let text = p.to_string();
    let tokens = tokenize(&text).map_err(|e| format!("{text}: {e}"))?;
    parse_pattern(&tokens).map_err(|e| format!("{text}: {e}"))
}

fn automaton_match(p: &Pattern, bits: &[Vec<bool>], len: usize) -> Result<bool, String> {
    let names: Vec<String> = NAMES.iter().map(|s| s.to_string()).collect();
    let compiled = compile(p, &names).map_err(|e| format!("{p}: {e}"))?;
    Ok(match_case(&compiled, CaseTrace::new(0, len), &bitmap(bits)))
}

fn tally(p: &Pattern, seen: &mut BTreeSet<&'static str>) {
    match p {
        Pattern::Behaviour { .. } | Pattern::Literal { .. } => {}
        Pattern::Any => {
            seen.insert("ANY");
        }
        Pattern::Not(q) => {
            seen.insert("NOT");
            tally(q, seen);
        }
        Pattern::Concat(a, b) | Pattern::DirectlyFollows(a, b) => {
            seen.insert("->");
            tally(a, seen);
            tally(b, seen);
        }
        Pattern::EventuallyFollows(a, b) => {
            seen.insert("~>");
            tally(a, seen);
            tally(b, seen);
        }
        Pattern::Alternation(items) => {
            seen.insert("|");
            items.iter().for_each(|q| tally(q, seen));
        }
        Pattern::Repeat(q) => {
            seen.insert("*");
            tally(q, seen);
        }
        Pattern::Anchored { start, end, inner, .. } => {
            if *start {
                seen.insert("^");
            }
            if *end {
                seen.insert("$");
            }
            tally(inner, seen);
        }
    }
}

fn pattern_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5167_4e41);
    let names: Vec<String> = NAMES.iter().map(|s| s.to_string()).collect();
    let mut seen = BTreeSet::new();
    let (mut positives, instances) = (0, 10_000);
    for i in 0..instances {
        let p = random_pattern(&mut rng);
        ensure!(p.depth() <= 4, "generator produced depth {}", p.depth());
        tally(&p, &mut seen);
        let len = rng.gen_range(1..=10);
        let bits = random_bits(&mut rng, len);
        let expected = oracle_match(&p, &bits, len);
        let parsed = reparse(&p)?;
        let got = automaton_match(&parsed, &bits, len)?;
        let reference = brute_force_match(&p, &names, CaseTrace::new(0, len), &bitmap(&bits))
            .map_err(|e| e.to_string())?;
        ensure!(
            got == expected && reference == expected,
            "instance {i}: {p} on {bits:?}: automaton {got}, reference {reference}, oracle {expected}"
        );
        positives += expected as usize;
    }
    ensure!(seen.len() == 8, "operators covered: {seen:?}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{instances} instances, {positives} matching, 0 discrepancies"))
}

// ---- logs of letter traces, queried end to end ----

/// One case per trace; each character is one event named by it.
fn letters_log(log_id: &str, traces: &[String]) -> EventLog {
    let schema = Schema::new(
        vec![Attribute::new("case_id", ScalarType::String)],
        vec![Attribute::new("event_name", ScalarType::String), Attribute::new("end_time", ScalarType::Timestamp)],
    )
    .unwrap();
    let mut log = EventLog::new(log_id, schema);
    for (c, trace) in traces.iter().enumerate() {
        let events = trace
            .chars()
            .enumerate()
            .map(|(i, ch)| vec![Value::string(ch.to_string()), Value::Timestamp(1_000 * c as i64 + i as i64)])
            .collect();
        log.append_case_rows(vec![Value::string(format!("t{c}"))], events).unwrap();
    }
    log
}

fn engine_with(logs: Vec<EventLog>) -> Engine {
    let catalog = Arc::new(Catalog::new());
    for log in logs {
        catalog.register(log).unwrap();
    }
    Engine::new(catalog)
}

fn pattern_query(log: &str, pattern: &str) -> String {
    format!(
        "SELECT case_id FROM {log} BEHAVIOUR (event_name = 'a') AS a BEHAVIOUR (event_name = 'b') AS b \
         WHERE MATCHES ({pattern})"
    )
}

fn operator_examples() -> Check {
    // (pattern, matching trace, minimally perturbed trace); x is neither a nor b.
    let rows = [
        ("a ~> b", "xaxbx", "bxa"),
        ("a -> b", "xabx", "axb"),
        ("a ANY b", "xaxbx", "xabx"),
        ("a NOT b", "ax", "ab"),
        ("a ANY* b", "axxxb", "bxxa"),
        ("^ a", "axx", "xax"),
        ("a $", "xxa", "xax"),
        ("^ (a | b)", "bxa", "xab"),
    ];
    let mut checked = 0;
    for (pattern, yes, no) in rows {
        let engine = engine_with(vec![letters_log("t2", &[yes.to_string(), no.to_string()])]);
        let ids = case_ids(&engine, &pattern_query("t2", pattern), None)?;
        ensure!(ids == ["t0"], "{pattern}: matched {ids:?} of [{yes}, {no}]");
        checked += 2;
    }
    Ok(format!("{checked} traces"))
}

fn random_letters(rng: &mut ChaCha8Rng, alphabet: &[char]) -> String {
    let len = rng.gen_range(1..=10);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn universal_via_negation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let traces: Vec<String> = (0..1000).map(|_| random_letters(&mut rng, &['a', 'b', 'c'])).collect();
    let expected: Vec<String> = traces
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let t = t.as_bytes();
            (0..t.len()).all(|i| t[i] != b'a' || t.get(i + 1) == Some(&b'b'))
        })
        .map(|(c, _)| format!("t{c}"))
        .collect();
    let engine = engine_with(vec![letters_log("u", &traces)]);
    let got = case_ids(&engine, &pattern_query("u", "(^ (NOT a | (a b))* $)"), None)?;
    ensure!(got == expected, "{} matched, scan says {}", got.len(), expected.len());
    Ok(format!("1000 traces, {} universal", expected.len()))
}

fn desugar_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut agree = 0;
    for i in 0..1000 {
        let len = rng.gen_range(1..=10);
        let bits = random_bits(&mut rng, len);
        // Plain atoms against a direct scan, then random operands.
        let (a, b) = (&bits[0], &bits[1]);
        let eventually = (0..len).any(|i| a[i] && (i + 1..len).any(|j| b[j]));
        let directly = (0..len.saturating_sub(1)).any(|i| a[i] && b[i + 1]);
        let pairs = [
            ("a ~> b".to_string(), "a ANY* b".to_string(), Some(eventually)),
            ("a -> b".to_string(), "a b".to_string(), Some(directly)),
            {
                let (p, q) = (body(&mut rng, 2), body(&mut rng, 2));
                (format!("({p}) ~> ({q})"), format!("({p}) ANY* ({q})"), None)
            },
            {
                let (p, q) = (body(&mut rng, 2), body(&mut rng, 2));
                (format!("({p}) -> ({q})"), format!("({p}) ({q})"), None)
            },
        ];
        for (sugar, plain, scan) in pairs {
            let parse = |t: &str| -> Result<Pattern, String> {
                parse_pattern(&tokenize(t).map_err(|e| e.to_string())?).map_err(|e| format!("{t}: {e}"))
            };
            let left = automaton_match(&parse(&sugar)?, &bits, len)?;
            let right = automaton_match(&parse(&plain)?, &bits, len)?;
            ensure!(left == right, "instance {i}: {sugar} gave {left}, {plain} gave {right} on {bits:?}");
            if let Some(s) = scan {
                ensure!(left == s, "instance {i}: {sugar} gave {left}, scan says {s} on {bits:?}");
            }
            agree += 1;
        }
    }
    Ok(format!("{agree} comparisons"))
}

fn type_rejections() -> Check {
    let engine = support_engine();
    let cases = [
        ("SELECT end_time FROM support", "LevelError"),
        ("SELECT (SELECT end_time) FROM support", "NonAggregatedSubquery"),
        ("SELECT 'a' + 1 FROM support", "TypeError"),
    ];
    for (q, code) in cases {
        match engine.query(q, None) {
            Ok(t) => return Err(format!("{q} succeeded with {} rows", t.rows.len())),
            Err(e) => ensure!(e.code() == code, "{q}: got {}, expected {code}", e.code()),
        }
    }
    Ok("3 codes".into())
}

fn optimizer_soundness() -> Check {
    let engine = support_engine();
    let queries = [
        REOPENED,
        CLOSED_BLOCKED,
        CLOSED_WHILE_BLOCKED,
        CYCLE_TIME,
        "SELECT case_id, (SELECT FIRST(event_name)), (SELECT LAST(\"status\")) FROM THIS_PROCESS ORDER BY case_id DESC LIMIT 1",
        "SELECT final_status, COUNT(*) FROM THIS_PROCESS GROUP BY final_status",
        "SELECT event_name, COUNT(*) FROM FLATTEN(THIS_PROCESS) GROUP BY event_name ORDER BY event_name",
    ];
    for q in queries {
        let fast = engine.run(q, Some("support"), true).map_err(|e| format!("{q}: {e}"))?;
        let slow = engine.run(q, Some("support"), false).map_err(|e| format!("{q}: {e}"))?;
        ensure!(fast.table == slow.table, "{q}: optimized {:?} vs {:?}", fast.table.rows, slow.table.rows);
    }
    let limited = engine.plan("SELECT case_id FROM support LIMIT 1", None, true).map_err(|e| e.to_string())?;
    let ops = limited.operators();
    let pos = |name: &str| ops.iter().position(|o| *o == name);
    ensure!(
        matches!((pos("ProjectExec"), pos("LimitExec")), (Some(p), Some(l)) if l > p),
        "LIMIT is not below the projection: {ops:?}"
    );
    let fast = engine.run(CYCLE_TIME, Some("support"), true).map_err(|e| e.to_string())?;
    let slow = engine.run(CYCLE_TIME, Some("support"), false).map_err(|e| e.to_string())?;
    let text = fast.plan.to_string();
    ensure!(text.contains("positional"), "FIRST/LAST not positional:\n{text}");
    ensure!(fast.stats.end_time_sorts == 0, "positional plan sorted {} cases", fast.stats.end_time_sorts);
    ensure!(slow.stats.end_time_sorts > 0, "sort counter never moves");
    Ok(format!("{} queries", queries.len()))
}

// ---- CSV round trip ----

fn random_value(rng: &mut ChaCha8Rng, ty: ScalarType, nullable: bool) -> Value {
    if nullable && rng.gen_bool(0.15) {
        return Value::Null;
    }
    match ty {
        ScalarType::Boolean => Value::Boolean(rng.gen()),
        ScalarType::Number => match rng.gen_range(0..3) {
            0 => Value::Number(rng.gen_range(-1000..1000) as f64),
            1 => Value::Number(rng.gen_range(-1e6..1e6)),
            _ => Value::Number(rng.gen::<f64>() * 10f64.powi(rng.gen_range(-20..20))),
        },
        ScalarType::String => {
            let pieces = ["x", "Open ticket", "a,b", "say \"hi\"", "line\nbreak", "42", "true", " pad ", "é"];
            let n = rng.gen_range(1..=3);
            Value::string((0..n).map(|_| *pieces.choose(rng).unwrap()).collect::<String>())
        }
        ScalarType::Timestamp => Value::Timestamp(rng.gen_range(0..2_000_000_000_000)),
        ScalarType::Duration => Value::Duration(rng.gen_range(-1_000_000_000..1_000_000_000)),
    }
}

const TYPES: [ScalarType; 5] =
    [ScalarType::Boolean, ScalarType::Number, ScalarType::String, ScalarType::Timestamp, ScalarType::Duration];

fn random_log(rng: &mut ChaCha8Rng, log_id: &str) -> (EventLog, CsvIngestConfig) {
    let mut config = CsvIngestConfig::default();
    let mut case_attrs = vec![Attribute::new("case_id", ScalarType::String)];
    let mut event_attrs =
        vec![Attribute::new("event_name", ScalarType::String), Attribute::new("end_time", ScalarType::Timestamp)];
    for k in 0..rng.gen_range(0..4) {
        let (name, ty) = (format!("case_attr_{k}"), *TYPES.choose(rng).unwrap());
        config = config.with_level(&name, Level::Case).with_type(&name, ty);
        case_attrs.push(Attribute::new(name, ty));
    }
    for k in 0..rng.gen_range(0..4) {
        let (name, ty) = (format!("event_attr_{k}"), *TYPES.choose(rng).unwrap());
        config = config.with_level(&name, Level::Event).with_type(&name, ty);
        event_attrs.push(Attribute::new(name, ty));
    }
    let schema = Schema::new(case_attrs.clone(), event_attrs.clone()).unwrap();
    let mut log = EventLog::new(log_id, schema);
    for c in 0..rng.gen_range(1..=20) {
        let mut case_row = vec![Value::string(format!("case-{c}"))];
        case_row.extend(case_attrs[1..].iter().map(|a| random_value(rng, a.ty, true)));
        let events = (0..rng.gen_range(1..=8))
            .map(|_| {
                let mut row = vec![
                    Value::string(*["A", "B", "C, D"].choose(rng).unwrap()),
                    Value::Timestamp(rng.gen_range(0..50)),
                ];
                row.extend(event_attrs[2..].iter().map(|a| random_value(rng, a.ty, true)));
                row
            })
            .collect();
        log.append_case_rows(case_row, events).unwrap();
    }
    (log, config)
}

fn csv_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut events = 0;
    for round in 0..100 {
        let (log, config) = random_log(&mut rng, "orig");
        let csv = log.flatten().to_csv(b',');
        let back = ingest_csv(csv.as_bytes(), &config, "orig").map_err(|e| format!("round {round}: {e}\n{csv}"))?;
        ensure!(back.schema() == log.schema(), "round {round}: schema {:?} vs {:?}", back.schema(), log.schema());
        ensure!(back.offsets() == log.offsets(), "round {round}: offsets differ");
        let (a, b) = (log.flatten(), back.flatten());
        ensure!(a == b, "round {round}: rows differ\n{csv}");
        events += log.event_count();
    }
    Ok(format!("100 logs, {events} events"))
}

// ---- performance ----

const ACTIVITIES: [&str; 5] = ["Open ticket", "Assign ticket", "Close ticket", "Escalate", "Comment"];

/// The log plus how many cases contain a `Close ticket` later followed by
/// an `Open ticket`.
fn synthetic_log(cases: usize, per_case: usize) -> (EventLog, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let schema = Schema::new(
        vec![Attribute::new("case_id", ScalarType::String)],
        vec![
            Attribute::new("event_name", ScalarType::String),
            Attribute::new("end_time", ScalarType::Timestamp),
            Attribute::new("status", ScalarType::String),
        ],
    )
    .unwrap();
    let mut log = EventLog::new("perf", schema);
    let mut reopened = 0;
    for c in 0..cases {
        let mut t = 1_600_000_000_000 + rng.gen_range(0..1_000_000_000i64);
        let mut names = Vec::with_capacity(per_case);
        let events = (0..per_case)
            .map(|_| {
                t += rng.gen_range(1..10_000_000);
                let name = *ACTIVITIES.choose(&mut rng).unwrap();
                names.push(name);
                vec![Value::string(name), Value::Timestamp(t), Value::string(["open", "blocked"][rng.gen_range(0..2)])]
            })
            .collect();
        log.append_case_rows(vec![Value::string(format!("c{c}"))], events).unwrap();
        let close = names.iter().position(|n| *n == "Close ticket");
        if close.is_some_and(|i| names[i + 1..].contains(&"Open ticket")) {
            reopened += 1;
        }
    }
    (log, reopened)
}

fn performance() -> Check {
    let build = Instant::now();
    let (log, reopened) = synthetic_log(100_000, 10);
    ensure!(log.event_count() == 1_000_000, "built {} events", log.event_count());
    // Oracle cycle times straight from the stored columns.
    let offsets = log.offsets().to_vec();
    let end = log.schema().end_time_index();
    let times: Vec<i64> = log
        .event_column(end)
        .iter()
        .map(|v| match v {
            Value::Timestamp(t) => t,
            other => panic!("end_time holds {other:?}"),
        })
        .collect();
    let total: i128 = (0..offsets.len() - 1)
        .map(|c| {
            let span = &times[offsets[c]..offsets[c + 1]];
            (span.iter().max().unwrap() - span.iter().min().unwrap()) as i128
        })
        .sum();
    let cases = (offsets.len() - 1) as i128;
    let build_time = build.elapsed();
    let engine = engine_with(vec![log]);

    let t = Instant::now();
    let out = engine.run(CYCLE_TIME, Some("perf"), true).map_err(|e| e.to_string())?;
    let avg_time = t.elapsed();
    let Value::Duration(avg) = out.table.rows[0][0] else {
        return Err(format!("cycle time {:?}", out.table.rows));
    };
    // Half-away-from-zero rounding of the exact mean; all spans are positive.
    let expected = ((2 * total + cases) / (2 * cases)) as i64;
    ensure!(avg == expected, "avg {avg}, expected {expected}");
    ensure!(out.stats.end_time_sorts == 0, "{} per-case sorts", out.stats.end_time_sorts);
    ensure!(avg_time < Duration::from_secs(5), "cycle time query took {avg_time:?}");

    let t = Instant::now();
    let ids = case_ids(&engine, REOPENED, Some("perf"))?;
    let pattern_time = t.elapsed();
    ensure!(ids.len() == reopened, "pattern matched {} cases, scan says {reopened}", ids.len());
    ensure!(pattern_time < Duration::from_secs(10), "pattern query took {pattern_time:?}");
    Ok(format!(
        "build {:.2}s, avg {:.3}s, pattern {:.3}s, 0 sorts",
        build_time.as_secs_f64(),
        avg_time.as_secs_f64(),
        pattern_time.as_secs_f64()
    ))
}

// ---- HTTP ----

fn http_contract() -> Check {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let app = router(Arc::new(AppState::new(support_engine())));
        let library = support_engine();
        let post = |body: Json| {
            let app = app.clone();
            async move {
                let req = Request::post("/signal/queries")
                    .header("content-type", "application/json")
                    .body(Body::from(body.to_string()))
                    .unwrap();
                let resp = app.oneshot(req).await.unwrap();
                let status = resp.status();
                let bytes = resp.into_body().collect().await.unwrap().to_bytes();
                (status, String::from_utf8(bytes.to_vec()).unwrap())
            }
        };
        for q in [REOPENED, CLOSED_WHILE_BLOCKED, CYCLE_TIME] {
            let expected = library.query(q, Some("support")).map_err(|e| e.to_string())?.to_json();
            for _ in 0..2 {
                let (status, body) = post(json!({"query": q, "logId": "support"})).await;
                ensure!(status == StatusCode::OK, "{q}: status {status}");
                ensure!(body == expected, "{q}: body {body} differs from {expected}");
            }
        }
        let bad = "SELECT case_id FROM support WHERE";
        let (status, body) = post(json!({"query": bad})).await;
        ensure!(status == StatusCode::BAD_REQUEST, "malformed query: status {status}");
        let doc: Json = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        let expected = library.query(bad, None).unwrap_err().diagnostic();
        ensure!(doc["error"]["code"] == expected.code.as_str(), "code {}", doc["error"]["code"]);
        let span = expected.span.ok_or("library diagnostic has no span")?;
        ensure!(
            doc["error"]["span"] == json!({"start": span.start, "end": span.end}),
            "span {}",
            doc["error"]["span"]
        );
        Ok(format!("3 queries byte-identical, malformed -> 400 {}", expected.code))
    })
}
