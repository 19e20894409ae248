//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gimli_sifa::attack::{
    attack_bit, bit_sei, chi_squared, curve, rank_of, sei, AttackOptions, DistributionCounts,
};
use gimli_sifa::cli::seeded_key;
use gimli_sifa::depend::{
    oracle_bit, reduce_layout, target_window, trace, BitRef, Target, WindowBit,
};
use gimli_sifa::fault::{
    build_fdt, collect_ineffective, count_ineffective, estimate_fdt, ineffectiveness_rate,
    CollectOptions, FaultModel, FaultSpec, TraceSet,
};
use gimli_sifa::gimli::kat::{check_vector, parse_kat};
use gimli_sifa::gimli::{Key, Nonce, Row, SpBoxVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OFFICIAL: SpBoxVariant = SpBoxVariant::Official;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn window(round: u32) -> Vec<WindowBit> {
    target_window(&Target::new(round, Row::B, 0, 0), 8, OFFICIAL).unwrap()
}

fn campaign(model: FaultModel, round: u32, n: usize, seed: u64) -> (Key, TraceSet) {
    let key = seeded_key(seed);
    let spec = FaultSpec::at_target(model, 8, &Target::new(round, Row::B, 0, 0)).unwrap();
    let set = collect_ineffective(&key, &spec, n, seed, &CollectOptions::default()).unwrap();
    (key, set)
}

fn c1_kat() -> Outcome {
    let t = Instant::now();
    let path = format!(
        "{}/tests/data/LWC_AEAD_KAT_256_128.txt",
        env!("CARGO_MANIFEST_DIR")
    );
    let vectors = parse_kat(&std::fs::read_to_string(path).unwrap()).unwrap();
    let passed = vectors.iter().filter(|v| check_vector(v).passed()).count();
    let el = t.elapsed();
    outcome(
        passed == vectors.len() && !vectors.is_empty() && el < Duration::from_secs(10),
        format!(
            "{passed}/{} vectors (encrypt and decrypt) in {} (limit 10 s)",
            vectors.len(),
            secs(el)
        ),
    )
}

fn c2_fdt() -> Outcome {
    let q = |x: f64| x / 4.0;
    let h = |x: f64| x / 2.0;
    let n = |x: f64| x / 9.0;
    let tables: [(FaultModel, [[f64; 4]; 4]); 6] = [
        (
            FaultModel::RandomOr,
            [
                [q(1.), q(1.), q(1.), q(1.)],
                [0., h(1.), 0., h(1.)],
                [0., 0., h(1.), h(1.)],
                [0., 0., 0., 1.],
            ],
        ),
        (
            FaultModel::RandomAnd,
            [
                [1., 0., 0., 0.],
                [h(1.), h(1.), 0., 0.],
                [h(1.), 0., h(1.), 0.],
                [q(1.), q(1.), q(1.), q(1.)],
            ],
        ),
        (FaultModel::StuckAt0, [[1., 0., 0., 0.]; 4]),
        (
            FaultModel::BIASED_BITFLIP,
            [[n(4.), n(2.), n(2.), n(1.)]; 4],
        ),
        (FaultModel::RandomFault, [[q(1.); 4]; 4]),
        (
            FaultModel::BitFlip,
            [
                [0., 0., 0., 1.],
                [0., 0., 1., 0.],
                [0., 1., 0., 0.],
                [1., 0., 0., 0.],
            ],
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut exact_max = 0.0f64;
    let mut est_max = 0.0f64;
    for (model, table) in &tables {
        let exact = build_fdt(model, 2).unwrap();
        let est = estimate_fdt(model, 2, 100_000, &mut rng).unwrap();
        for (s, row) in table.iter().enumerate() {
            for (t, &want) in row.iter().enumerate() {
                exact_max = exact_max.max((exact.get(s, t) - want).abs());
                est_max = est_max.max((est.get(s, t) - want).abs());
            }
        }
    }
    outcome(
        exact_max <= 1e-12 && est_max <= 0.01,
        format!("six w=2 tables: max exact deviation {exact_max:.1e} (tol 1e-12), max estimate deviation {est_max:.4} at 1e5 samples (tol 0.01)"),
    )
}

fn c3_rates() -> Outcome {
    const TRIALS: u64 = 1_000_000;
    let t = Instant::now();
    let key = seeded_key(3);
    let base = Target::new(22, Row::B, 0, 0);
    let mut analytic_ok = true;
    let mut checked = 0;
    let mut failures = Vec::new();
    let cases = [
        (FaultModel::StuckAt0, 0.5),
        (FaultModel::RandomFault, 0.5),
        (FaultModel::BIASED_BITFLIP, 0.5),
        (FaultModel::RandomAnd, 0.75),
        (FaultModel::RandomOr, 0.75),
    ];
    for (model, per_bit) in cases {
        for w in [1u32, 4, 8, 16, 32] {
            let expected = f64::powi(per_bit, w as i32);
            let rate = if w <= 16 {
                ineffectiveness_rate(&build_fdt(&model, w).unwrap())
            } else {
                model.analytic_rate(w)
            };
            if (rate - expected).abs() > 1e-12 * expected
                || (model.analytic_rate(w) - expected).abs() > 1e-12 * expected
            {
                analytic_ok = false;
                failures.push(format!("{model} w={w} analytic {rate}"));
            }
            if expected < 1e-4 {
                continue;
            }
            checked += 1;
            let spec = FaultSpec::at_target(model, w, &base).unwrap();
            let k = count_ineffective(&key, &spec, TRIALS, 100 + w as u64, OFFICIAL).unwrap();
            let sigma = (expected * (1.0 - expected) / TRIALS as f64).sqrt();
            let emp = k as f64 / TRIALS as f64;
            if (emp - expected).abs() > 3.0 * sigma {
                failures.push(format!(
                    "{model} w={w} empirical {emp} vs {expected} (3σ {:.2e})",
                    3.0 * sigma
                ));
            }
        }
    }
    let el = t.elapsed();
    outcome(
        analytic_ok && failures.is_empty() && el < Duration::from_secs(120),
        format!(
            "25 analytic rates exact; {checked} empirical rates at 1e6 trials within 3σ; {} failures{}; {} (limit 2 min)",
            failures.len(),
            if failures.is_empty() { String::new() } else { format!(" [{}]", failures.join("; ")) },
            secs(el)
        ),
    )
}

fn flip(key: &mut Key, nonce: &mut Nonce, r: BitRef) {
    match r {
        BitRef::Key { word, bit } => key.0[word as usize] ^= 1 << bit,
        BitRef::Nonce { word, bit } => nonce.0[word as usize] ^= 1 << bit,
        BitRef::Constant { .. } => unreachable!(),
    }
}

fn c4_tracer() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inputs: Vec<BitRef> = (0..8)
        .flat_map(|w| (0..32).map(move |b| BitRef::key(w, b)))
        .chain((0..4).flat_map(|w| (0..32).map(move |b| BitRef::nonce(w, b))))
        .collect();
    let mut mismatches = 0u64;
    let mut sensitive = 0u64;
    let mut evaluations = 0u64;
    for round in [23, 22, 21] {
        let bits: Vec<_> = window(round)
            .into_iter()
            .map(|b| {
                let leaves = b.expr.leaves();
                let untraced: Vec<BitRef> = inputs
                    .iter()
                    .copied()
                    .filter(|r| !leaves.contains(r))
                    .collect();
                (b, untraced)
            })
            .collect();
        for _ in 0..10_000 {
            let (k, n) = (Key(rng.random()), Nonce(rng.random()));
            for (b, untraced) in &bits {
                let truth = oracle_bit(&k, &n, &b.target, OFFICIAL);
                evaluations += 1;
                if b.expr.eval(&k, &n) != truth
                    || b.layout.evaluate(b.layout.induced(&k), &n) != truth
                {
                    mismatches += 1;
                }
                let (mut k2, mut n2) = (k, n);
                flip(
                    &mut k2,
                    &mut n2,
                    untraced[rng.random_range(0..untraced.len())],
                );
                if oracle_bit(&k2, &n2, &b.target, OFFICIAL) != truth {
                    sensitive += 1;
                }
            }
        }
    }
    let el = t.elapsed();
    outcome(
        mismatches == 0 && sensitive == 0 && el < Duration::from_secs(60),
        format!(
            "{evaluations} bit evaluations (1e4 pairs x 8 bits x rounds 23/22/21): {mismatches} mismatches, {sensitive} untraced flips changed the bit; {} (limit 1 min)",
            secs(el)
        ),
    )
}

fn c5_counts() -> Outcome {
    let expected_keybits = [(23, 2), (22, 11), (21, 37), (20, 168)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (r, want) in expected_keybits {
        let got = trace(&Target::b07(r), OFFICIAL).unwrap().key_bits().len();
        ok &= got == want;
        parts.push(format!("r={r} n_keybits {got} (expected {want})"));
    }
    for (r, want) in [(22, 6), (21, 22)] {
        let got = reduce_layout(&trace(&Target::b07(r), OFFICIAL).unwrap()).parameter_count();
        ok &= got == want;
        parts.push(format!("r={r} parameters {got} (expected {want})"));
    }
    outcome(ok, parts.join(", "))
}

struct Round22 {
    hinted: usize,
    plain: usize,
    separation_violations: usize,
    recovered_campaigns: usize,
    elapsed: Duration,
}

fn run_round22() -> Round22 {
    let t = Instant::now();
    let bit = &window(22)[7];
    let hint = AttackOptions {
        bias_hint: Some(false),
        ..AttackOptions::default()
    };
    let (mut hinted, mut plain, mut violations, mut recovered) = (0, 0, 0, 0);
    for seed in 1..=20 {
        let (key, set) = campaign(FaultModel::BIASED_BITFLIP, 22, 360, seed);
        let truth = bit.layout.induced(&key);
        if attack_bit(bit, &set.nonces, &hint).unwrap().top() == truth {
            hinted += 1;
        }
        if attack_bit(bit, &set.nonces, &AttackOptions::default())
            .unwrap()
            .top()
            == truth
        {
            plain += 1;
        }
        let points = curve(bit, &set.nonces, truth, 10, &hint).unwrap();
        let stable_from = points
            .iter()
            .rposition(|p| p.top != truth.0)
            .map_or(0, |i| i + 1);
        if stable_from < points.len() {
            recovered += 1;
            violations += points[stable_from..]
                .iter()
                .filter(|p| p.sei_correct < p.sei_best_wrong)
                .count();
        }
    }
    Round22 {
        hinted,
        plain,
        separation_violations: violations,
        recovered_campaigns: recovered,
        elapsed: t.elapsed(),
    }
}

fn c6_round22(r: &Round22) -> Outcome {
    outcome(
        r.hinted * 100 >= 80 * 20 && r.elapsed < Duration::from_secs(300),
        format!(
            "b^22_0,7 all 6 parameters recovered from 360 traces in {}/20 campaigns with the bias hint (need >= 16); {}/20 without hint; {} for all 20 (limit 5 min)",
            r.hinted,
            r.plain,
            secs(r.elapsed)
        ),
    )
}

fn c7_round21() -> Outcome {
    let bit = &window(21)[7];
    let mut hits = 0;
    let mut slowest = Duration::ZERO;
    let mut ties = Vec::new();
    for seed in 1..=5 {
        let t = Instant::now();
        let (key, set) = campaign(FaultModel::BIASED_BITFLIP, 21, 340, seed);
        let truth = bit.layout.induced(&key);
        let report = attack_bit(bit, &set.nonces, &AttackOptions::default()).unwrap();
        slowest = slowest.max(t.elapsed());
        let hit = report.in_best_set(truth) && report.tie_count() <= 3;
        hits += usize::from(hit);
        ties.push(format!(
            "{}{}",
            report.tie_count(),
            if report.in_best_set(truth) {
                ""
            } else {
                "(truth outside)"
            }
        ));
    }
    outcome(
        hits * 100 >= 80 * 5 && slowest < Duration::from_secs(1800),
        format!(
            "b^21_0,7 (2^22 hypotheses, 340 traces): truth in a tie set of size <= 3 in {hits}/5 campaigns (need >= 4); tie sizes [{}]; slowest campaign {} (limit 30 min)",
            ties.join(", "),
            secs(slowest)
        ),
    )
}

fn c8_separation(r: &Round22) -> Outcome {
    let bit = &window(22)[7];
    let space = (1u64 << bit.layout.parameter_count()) - 1;
    let mut normalized = Vec::new();
    for seed in 101..=120 {
        let (key, set) = campaign(FaultModel::RandomFault, 22, 360, seed);
        let rank = rank_of(
            bit,
            &set.nonces,
            bit.layout.induced(&key),
            &AttackOptions::default(),
        )
        .unwrap();
        normalized.push((rank - 1) as f64 / space as f64);
    }
    let mean = normalized.iter().sum::<f64>() / normalized.len() as f64;
    let band = 3.0 * (1.0f64 / 12.0).sqrt() / (normalized.len() as f64).sqrt();
    let uniform = (mean - 0.5).abs() <= band;
    outcome(
        r.separation_violations == 0 && r.recovered_campaigns > 0 && uniform,
        format!(
            "sei_correct >= sei_best_wrong beyond the recovery point in {} recovered campaigns ({} violations); random-fault mean normalized true rank {mean:.3} over 20 campaigns (0.5 ± {band:.3})",
            r.recovered_campaigns, r.separation_violations
        ),
    )
}

fn c9_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let size = 1usize << rng.random_range(1..=8);
        let bins: Vec<u64> = (0..size).map(|_| rng.random_range(0..1000)).collect();
        let counts = DistributionCounts::new(bins);
        if counts.total() == 0 {
            continue;
        }
        let chi = chi_squared(&counts, &vec![1.0 / size as f64; size]).unwrap();
        let rhs = size as f64 * counts.total() as f64 * sei(&counts).unwrap();
        let scale = chi.abs().max(rhs.abs());
        if scale > 0.0 {
            worst = worst.max((chi - rhs).abs() / scale);
        }
    }
    let mut uniform_zero = true;
    for size in [2usize, 4, 16, 256] {
        for c in [1u64, 7, 1000] {
            uniform_zero &= sei(&DistributionCounts::new(vec![c; size])).unwrap() == 0.0;
        }
    }
    uniform_zero &= bit_sei(50, 100) == 0.0;
    outcome(
        worst <= 1e-10 && uniform_zero,
        format!("max relative error of chi2 vs |S| N SEI over 1e3 vectors {worst:.1e} (tol 1e-10); SEI of uniform counts exactly 0: {uniform_zero}"),
    )
}

fn cli(args: &[&str], threads: &str, dir: &Path) -> Vec<u8> {
    let o = Command::new(env!("CARGO_BIN_EXE_gimli-sifa"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .current_dir(dir)
        .output()
        .unwrap();
    let mut bytes = o.stdout;
    bytes.extend(o.status.code().unwrap_or(-1).to_le_bytes());
    for f in [
        "traces.txt",
        "rank.csv",
        "rank.advantage.csv",
        "rank.sei.csv",
    ] {
        if let Ok(b) = std::fs::read(dir.join(f)) {
            bytes.extend(b);
        }
    }
    bytes
}

fn c10_determinism() -> Outcome {
    let kat = format!(
        "{}/tests/data/LWC_AEAD_KAT_256_128.txt",
        env!("CARGO_MANIFEST_DIR")
    );
    let commands: Vec<Vec<&str>> = vec![
        vec!["kat", &kat],
        vec![
            "ineff-rate",
            "--width",
            "1,4,8",
            "--target",
            "200",
            "--seed",
            "5",
        ],
        vec!["histogram", "--trials", "50000", "--seed", "6"],
        vec![
            "collect",
            "--target",
            "120",
            "--seed",
            "7",
            "--out",
            "traces.txt",
        ],
        vec![
            "attack",
            "traces.txt",
            "--key",
            "random",
            "--step",
            "20",
            "--out",
            "rank.csv",
        ],
        vec!["attack", "traces.txt", "--bias-hint", "zero"],
        vec!["depmap", "--round", "21", "--expr"],
    ];
    let mut identical = 0;
    let mut differing = Vec::new();
    let runs: Vec<(&str, tempfile::TempDir)> = ["1", "4", "4"]
        .into_iter()
        .map(|t| (t, tempfile::tempdir().unwrap()))
        .collect();
    for cmd in &commands {
        let outputs: Vec<Vec<u8>> = runs.iter().map(|(t, d)| cli(cmd, t, d.path())).collect();
        if outputs.windows(2).all(|w| w[0] == w[1]) {
            identical += 1;
        } else {
            differing.push(cmd[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!(
            "{identical}/{} commands byte-identical across reruns and RAYON_NUM_THREADS 1/4{}",
            commands.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(" (differs: {})", differing.join(", "))
            }
        ),
    )
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "KAT fidelity", c1_kat()),
        (2, "FDT tables", c2_fdt()),
        (3, "ineffectiveness rates", c3_rates()),
        (4, "tracer soundness/completeness", c4_tracer()),
        (5, "structural counts", c5_counts()),
    ];
    let r22 = run_round22();
    results.push((6, "round-22 attack", c6_round22(&r22)));
    results.push((7, "round-21 attack", c7_round21()));
    results.push((8, "SEI separation", c8_separation(&r22)));
    results.push((9, "distinguisher identities", c9_identities()));
    results.push((10, "determinism", c10_determinism()));

    let mut failed = 0;
    for (i, name, o) in &results {
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {i:>2} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
