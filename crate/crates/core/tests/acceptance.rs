//! Acceptance suite: one check per criterion, each reporting a single
//! `PASS`/`FAIL` line with the measured value and its pinned tolerance.
//!
//! Oracles here are written independently of the library: formulas are
//! evaluated with plain loops over the raw inputs, correlations by brute
//! force over pairs. Run with `cargo test --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scorepoint::analysis::simulation::{simulate, SimulationConfig, DEFAULT_SIMULATION_SEED};
use scorepoint::analysis::{kendall, noise_robustness, spearman, ScoreTable, DEFAULT_SIGMA_GRID};
use scorepoint::judge::MockJudge;
use scorepoint::metrics::{
    assess_alignment, assess_conflicts, bleu, coarse3, compute_merge, compute_pcp, compute_wpa, parse_alignment_output,
    parse_penalty_output, rouge_l, MergeConfig,
};
use scorepoint::pipeline::{MetricName, Pipeline, Study};
use scorepoint::points::{generate_points, parse_points, PointGenOptions};
use scorepoint::star::{stratified_select, StarConfig, StratifiedRanking};
use scorepoint::template::PromptTemplate;
use scorepoint::{Alignment, PenaltyAssessment, PointAssessment, ScoringPoint};

// Tolerances, pinned.
const FORMULA_TOL: f64 = 1e-12;
const ROUGE_TOL: f64 = 1e-9;
const BASELINE_SELF_TOL: f64 = 1e-12;
const FORMULA_BUDGET: Duration = Duration::from_secs(1);
const FUZZ_BUDGET: Duration = Duration::from_secs(30);
const E2E_BUDGET: Duration = Duration::from_secs(10);

type Outcome = Result<String, String>;

/// Runs one criterion and writes its verdict line. Writes go straight to the
/// stderr handle rather than through `eprintln!`, so the lines survive the
/// test harness's output capture.
fn report(id: u32, title: &str, check: impl FnOnce() -> Outcome) {
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let line = match &outcome {
        Ok(detail) => format!("criterion {id:>2} PASS {title}: {detail}"),
        Err(detail) => format!("criterion {id:>2} FAIL {title}: {detail}"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(detail) = outcome {
        panic!("criterion {id} failed: {detail}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

#[test]
fn c01_formula_oracles() {
    report(1, "WPA/PCP match direct loop evaluation", || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let n = rng.random_range(1..=20usize);
            let w: Vec<i64> = (0..n).map(|_| rng.random_range(1..=3)).collect();
            let m: Vec<f64> = (0..n).map(|_| [0.0, 0.5, 1.0][rng.random_range(0..3)]).collect();
            let p: Vec<f64> = (0..n).map(|_| [0.0, 1.0][rng.random_range(0..2)]).collect();

            let (mut num_m, mut num_p, mut den) = (0.0, 0.0, 0.0);
            for i in 0..n {
                num_m += m[i] * w[i] as f64;
                num_p += p[i] * w[i] as f64;
                den += w[i] as f64;
            }

            let points: Vec<ScoringPoint> =
                (0..n).map(|i| ScoringPoint::new(i as u32 + 1, format!("p{i}"), w[i]).unwrap()).collect();
            let align: Vec<PointAssessment> =
                (0..n).map(|i| PointAssessment::new(i as u32 + 1, Alignment::from_value(m[i]).unwrap(), "")).collect();
            let pen: Vec<PenaltyAssessment> = (0..n)
                .map(|i| {
                    PenaltyAssessment::new(i as u32 + 1, scorepoint::domain::Penalty::from_value(p[i]).unwrap(), "")
                })
                .collect();
            let wpa = compute_wpa(&points, &align).map_err(|e| e.to_string())?;
            let pcp = compute_pcp(&points, &pen).map_err(|e| e.to_string())?;
            worst = worst.max((wpa - num_m / den).abs()).max((pcp - num_p / den).abs());
        }
        let elapsed = start.elapsed();
        ensure(worst <= FORMULA_TOL, || format!("max deviation {worst:e} > {FORMULA_TOL:e}"))?;
        ensure(elapsed < FORMULA_BUDGET, || format!("took {elapsed:?}, budget {FORMULA_BUDGET:?}"))?;
        Ok(format!("1000 configs, max |Δ| = {worst:e} (tol {FORMULA_TOL:e}), {elapsed:?} (budget {FORMULA_BUDGET:?})"))
    });
}

#[test]
fn c02_merge_exactness() {
    report(2, "merge is bit-exact", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lambda = MergeConfig::new(0.2).map_err(|e| e.to_string())?;
        let zero = MergeConfig::new(0.0).map_err(|e| e.to_string())?;
        let one = MergeConfig::new(1.0).map_err(|e| e.to_string())?;
        for k in 0..1000 {
            let (c, w): (f64, f64) = (rng.random(), rng.random());
            let got = compute_merge(c, w, &lambda).map_err(|e| e.to_string())?;
            let want = 0.2 * c + 0.8 * w;
            ensure(got.to_bits() == want.to_bits(), || format!("pair {k}: {got:?} != {want:?}"))?;
            ensure(compute_merge(c, w, &zero).map_err(|e| e.to_string())?.to_bits() == w.to_bits(), || {
                format!("lambda 0 identity broken at pair {k}")
            })?;
            ensure(compute_merge(c, w, &one).map_err(|e| e.to_string())?.to_bits() == c.to_bits(), || {
                format!("lambda 1 identity broken at pair {k}")
            })?;
        }
        Ok("1000 pairs bit-identical to 0.2c + 0.8w; lambda 0 and 1 identities hold".into())
    });
}

#[test]
fn c03_star_indices() {
    report(3, "stratified selection indices", || {
        let cfg = StarConfig::default();
        ensure(cfg.num_groups == 3 && cfg.expected_candidates == 10, || "unexpected defaults".into())?;
        let one = stratified_select(10, &cfg, 1).map_err(|e| e.to_string())?;
        let two = stratified_select(10, &cfg, 2).map_err(|e| e.to_string())?;
        ensure(one == [0, 4, 8] && two == [1, 5, 9], || format!("got {one:?} and {two:?}"))?;
        Ok(format!("N=10 L=3: n=1 -> {one:?}, n=2 -> {two:?}"))
    });
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// `1 − 6Σd²/(n(n²−1))`, as one rounding of an integer ratio.
fn spearman_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as i64;
    let d2: i64 = a.iter().zip(b).map(|(&x, &y)| (x as i64 - y as i64).pow(2)).sum();
    let den = n * (n * n - 1);
    (den - 6 * d2) as f64 / den as f64
}

/// `(concordant − discordant) / C(n, 2)` by enumerating pairs.
fn kendall_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((a[i] as i64 - a[j] as i64) * (b[i] as i64 - b[j] as i64)).signum();
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

#[test]
fn c04_correlation_kernels() {
    report(4, "correlation kernels against brute force", || {
        let mut pairs = 0usize;
        for n in 3..=6 {
            let perms = permutations(n);
            for a in &perms {
                let x: Vec<f64> = a.iter().map(|&v| v as f64).collect();
                for b in &perms {
                    let y: Vec<f64> = b.iter().map(|&v| v as f64).collect();
                    let rho = spearman(&x, &y).map_err(|e| e.to_string())?;
                    let tau = kendall(&x, &y).map_err(|e| e.to_string())?;
                    let (ro, to) = (spearman_oracle(a, b), kendall_oracle(a, b));
                    ensure(rho == ro && tau == to, || format!("{a:?} vs {b:?}: rho {rho} / {ro}, tau {tau} / {to}"))?;
                    pairs += 1;
                }
            }
            let id: Vec<f64> = (0..n).map(|v| v as f64).collect();
            let rev: Vec<f64> = id.iter().rev().copied().collect();
            ensure(spearman(&id, &id) == Ok(1.0) && kendall(&id, &id) == Ok(1.0), || format!("identity n={n}"))?;
            ensure(spearman(&id, &rev) == Ok(-1.0) && kendall(&id, &rev) == Ok(-1.0), || format!("reversal n={n}"))?;
        }
        let (x, y) = ([1.0, 3.0, 2.0], [1.0, 2.0, 3.0]);
        let rho = spearman(&x, &y).map_err(|e| e.to_string())?;
        let tau = kendall(&x, &y).map_err(|e| e.to_string())?;
        ensure(rho == 0.5 && tau == 1.0 / 3.0, || format!("(1,3,2)/(1,2,3): rho {rho}, tau {tau}"))?;
        Ok(format!("{pairs} permutation pairs exact; (1,3,2)/(1,2,3) -> rho {rho}, tau {tau}"))
    });
}

const FRAGMENTS: [&str; 16] = [
    "- [[",
    "]]",
    " | ((",
    "))",
    "3",
    "0.5",
    "{",
    "}",
    "\"point-wise scores\"",
    "\"point-wise penalty scores\"",
    ":",
    ",",
    "\"match_scores\"",
    "\"penalty_scores\"",
    "\"1\"",
    "\n",
];

/// Raw bytes, spliced grammar tokens, or a valid prompt example output with a few
/// random byte edits, chosen by `i % 3`.
fn fuzz_input(rng: &mut ChaCha8Rng, i: usize) -> String {
    let len = rng.random_range(0..200);
    match i % 3 {
        0 => {
            let mut bytes = vec![0u8; len];
            rng.fill_bytes(&mut bytes);
            String::from_utf8_lossy(&bytes).into_owned()
        }
        1 => (0..len / 4).map(|_| FRAGMENTS[rng.random_range(0..FRAGMENTS.len())]).collect(),
        _ => {
            let seed = [PROMPT_EXAMPLE_POINTS, PROMPT_EXAMPLE_WPA, PROMPT_EXAMPLE_PCP][rng.random_range(0..3)];
            let mut bytes = seed.as_bytes().to_vec();
            for _ in 0..rng.random_range(0..4) {
                let at = rng.random_range(0..bytes.len());
                match rng.random_range(0..3) {
                    0 => bytes[at] = rng.random(),
                    1 => {
                        bytes.remove(at);
                    }
                    _ => bytes.insert(at, rng.random()),
                }
            }
            String::from_utf8_lossy(&bytes).into_owned()
        }
    }
}

#[test]
fn c05_grammar_totality() {
    report(5, "parsers are total on random input", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let points: Vec<ScoringPoint> = (1..=3).map(|i| ScoringPoint::new(i, format!("p{i}"), 2).unwrap()).collect();
        let start = Instant::now();
        let (mut ok, mut err) = (0usize, 0usize);
        for i in 0..100_000 {
            let raw = fuzz_input(&mut rng, i);
            let results = catch_unwind(AssertUnwindSafe(|| {
                [
                    parse_points(&raw).is_ok(),
                    parse_alignment_output(&raw, &points).is_ok(),
                    parse_penalty_output(&raw, &points).is_ok(),
                ]
            }))
            .map_err(|_| format!("panic on input {raw:?}"))?;
            for r in results {
                if r {
                    ok += 1;
                } else {
                    err += 1;
                }
            }
        }
        let elapsed = start.elapsed();
        ensure(elapsed < FUZZ_BUDGET, || format!("took {elapsed:?}, budget {FUZZ_BUDGET:?}"))?;
        Ok(format!("1e5 inputs x 3 parsers, 0 panics ({ok} parsed, {err} structured errors), {elapsed:?} (budget {FUZZ_BUDGET:?})"))
    });
}

// Example outputs shown in the shipped prompts, completed where they elide entries.
const PROMPT_EXAMPLE_POINTS: &str = "    - [[Text of first scoring point]] | ((3))\n    - [[Text of second scoring point]] | ((2))\n    - [[Text of third scoring point]] | ((1))\n";
const PROMPT_EXAMPLE_WPA: &str = r#"{
        "point-wise scores": {
            "1": {
                "match_scores": 0.5 ,
                "explanation": "Justification for the assigned matching score",
                },
            "2": {
                "match_scores": 0 ,
                "explanation": "Justification for the assigned matching score",
                },
            "3": {
                "match_scores": 1 ,
                "explanation": "Justification for the assigned matching score",
                }
            }
        }"#;
const PROMPT_EXAMPLE_PCP: &str = r#"{
        "point-wise penalty scores": {
            "1": {
                "penalty_scores": 0,
                "explanation": "Justification for the assigned penalty score",
                },
            "2": {
                "penalty_scores": 1,
                "explanation": "Justification for the assigned penalty score",
                },
            "3": {
                "penalty_scores": 0,
                "explanation": "Justification for the assigned penalty score",
                }
            }
     }"#;
const PROMPT_EXAMPLE_COARSE3: &str = r#"    {
        "reason": "Explain which key information from the reference answer is covered, partially covered, or missing in the generated answer",
        "rating": 0.5
    }"#;

#[test]
fn c06_grammar_fidelity() {
    report(6, "templates carry the output anchors and prompt example outputs parse", || {
        for (t, anchor) in [
            (PromptTemplate::points(), "[[Text of first scoring point]] | ((3))"),
            (PromptTemplate::wpa(), "point-wise scores"),
            (PromptTemplate::pcp(), "point-wise penalty scores"),
            (PromptTemplate::coarse3(), "\"rating\""),
        ] {
            ensure(t.body.contains(anchor), || format!("template {} lacks {anchor:?}", t.name))?;
        }
        let judge = MockJudge::scripted(
            0,
            [
                ("points:*", PROMPT_EXAMPLE_POINTS),
                ("wpa:*", PROMPT_EXAMPLE_WPA),
                ("pcp:*", PROMPT_EXAMPLE_PCP),
                ("coarse3:*", PROMPT_EXAMPLE_COARSE3),
            ],
        );
        let e = |e: &dyn std::fmt::Display| e.to_string();
        let points = generate_points(&judge, &PromptTemplate::points(), "Q", "A", &PointGenOptions::default())
            .map_err(|x| e(&x))?;
        let got: Vec<(&str, u8)> = points.iter().map(|p| (p.text.as_str(), p.weight)).collect();
        ensure(
            got == [
                ("Text of first scoring point", 3),
                ("Text of second scoring point", 2),
                ("Text of third scoring point", 1),
            ],
            || format!("points {got:?}"),
        )?;
        let align = assess_alignment(&judge, &PromptTemplate::wpa(), "Q", &points, "R", 0).map_err(|x| e(&x))?;
        let m: Vec<Alignment> = align.iter().map(|a| a.alignment).collect();
        ensure(m == [Alignment::Partial, Alignment::None, Alignment::Full], || format!("alignment {m:?}"))?;
        let pen = assess_conflicts(&judge, &PromptTemplate::pcp(), "Q", "A", &points, "R", 0).map_err(|x| e(&x))?;
        let p: Vec<f64> = pen.iter().map(|a| a.penalty.value()).collect();
        ensure(p == [0.0, 1.0, 0.0], || format!("penalties {p:?}"))?;
        let (rating, _) = coarse3(&judge, &PromptTemplate::coarse3(), "Q", "A", "R", 0).map_err(|x| e(&x))?;
        ensure(rating == 0.5, || format!("rating {rating}"))?;
        // WPA = (0.5·3 + 0·2 + 1·1) / 6; PCP = 2 / 6.
        let wpa = compute_wpa(&points, &align).map_err(|x| e(&x))?;
        let pcp = compute_pcp(&points, &pen).map_err(|x| e(&x))?;
        ensure((wpa - 2.5 / 6.0).abs() <= FORMULA_TOL && (pcp - 2.0 / 6.0).abs() <= FORMULA_TOL, || {
            format!("wpa {wpa}, pcp {pcp}")
        })?;
        Ok(format!(
            "4 anchors present; weights [3,2,1], m [0.5,0,1], p [0,1,0], rating 0.5, WPA {wpa:.4}, PCP {pcp:.4}"
        ))
    });
}

fn run_full_pipeline(data: &Path, out: &Path, seed: u64) -> Result<(), String> {
    let mut p = Pipeline::open(common::mock_config(data, out, seed)).map_err(|e| e.to_string())?;
    let stages = [p.extract_points(), p.evaluate(&MetricName::ALL), p.star()];
    for s in stages {
        let s = s.map_err(|e| e.to_string())?;
        ensure(s.failures.is_empty(), || format!("{} failures: {:?}", s.stage, s.failures))?;
    }
    p.analyze(&[Study::Correlation, Study::Noise, Study::Errors]).map_err(|e| e.to_string())?;
    Ok(())
}

fn report_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir.join("reports"))
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

#[test]
fn c07_end_to_end_determinism() {
    report(7, "mock pipeline reports are byte-identical across runs", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = common::write_fixture(dir.path());
        let start = Instant::now();
        run_full_pipeline(&data, &dir.path().join("a"), 42)?;
        run_full_pipeline(&data, &dir.path().join("b"), 42)?;
        let elapsed = start.elapsed();
        let (a, b) = (report_files(&dir.path().join("a")), report_files(&dir.path().join("b")));
        ensure(a.len() >= 9, || format!("only {} report files: {:?}", a.len(), a.keys().collect::<Vec<_>>()))?;
        ensure(a == b, || {
            let diff: Vec<_> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            format!("reports differ: {diff:?}")
        })?;
        ensure(elapsed < E2E_BUDGET, || format!("took {elapsed:?}, budget {E2E_BUDGET:?}"))?;
        Ok(format!(
            "5 instances x 10 responses, {} identical report files, two runs in {elapsed:?} (budget {E2E_BUDGET:?})",
            a.len()
        ))
    });
}

#[test]
fn c08_ablation_direction() {
    report(8, "WPA out-correlates a coarse three-level judge in simulation", || {
        let cfg = SimulationConfig::default();
        ensure(cfg.instances == 200 && cfg.seed == DEFAULT_SIMULATION_SEED, || format!("{cfg:?}"))?;
        let r = simulate(&cfg).map_err(|e| e.to_string())?;
        let wpa = r.wpa.mean_spearman.ok_or("WPA mean undefined")?;
        let c3 = r.coarse3.mean_spearman.ok_or("coarse3 mean undefined")?;
        ensure(wpa > c3, || format!("WPA {wpa:.4} <= coarse3 {c3:.4}"))?;
        Ok(format!("seed {}: mean Spearman WPA {wpa:.4} > coarse3 {c3:.4}", cfg.seed))
    });
}

fn labelled(n_inst: usize, scores: impl Fn(usize, usize) -> f64) -> (ScoreTable, Vec<StratifiedRanking>) {
    let mut table = ScoreTable::new();
    let mut labels = Vec::new();
    for i in 0..n_inst {
        let id = format!("i{i}");
        let models: Vec<String> = (0..3).map(|m| format!("m{m}")).collect();
        for (m, name) in models.iter().enumerate() {
            table.entry(id.clone()).or_default().insert(name.clone(), scores(i, m));
        }
        labels.push(StratifiedRanking {
            instance_id: id,
            offset: 1,
            selected_model_ids: models,
            selected_indices: vec![0, 4, 8],
        });
    }
    (table, labels)
}

#[test]
fn c09_noise_curve() {
    report(9, "noise curve anchors", || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy: Vec<f64> = (0..60).map(|_| rng.random()).collect();
        let (table, labels) = labelled(20, |i, m| noisy[i * 3 + m]);
        let random = noise_robustness("random", &table, &labels, &DEFAULT_SIGMA_GRID, 7).map_err(|e| e.to_string())?;
        // Wide gaps: normalized scores 0, 0.5, 1 in every set.
        let (table, labels) = labelled(20, |_, m| [1.0, 0.5, 0.0][m]);
        let wide = noise_robustness("wide", &table, &labels, &DEFAULT_SIGMA_GRID, 7).map_err(|e| e.to_string())?;
        let grid_len = DEFAULT_SIGMA_GRID.len();
        ensure(
            grid_len == 7 && random.mean_kendall_vs_original.len() == 7 && wide.mean_kendall_vs_original.len() == 7,
            || "curve length is not 7".into(),
        )?;
        ensure(DEFAULT_SIGMA_GRID[0] == 0.0 && DEFAULT_SIGMA_GRID[1] == 0.01, || {
            format!("grid {DEFAULT_SIGMA_GRID:?}")
        })?;
        let (r0, w0, w1) =
            (random.mean_kendall_vs_original[0], wide.mean_kendall_vs_original[0], wide.mean_kendall_vs_original[1]);
        ensure(r0 == 1.0 && w0 == 1.0, || format!("sigma 0: random {r0}, wide {w0}"))?;
        ensure(w1 == 1.0, || format!("wide-gap fixture at sigma 0.01: {w1}"))?;
        Ok(format!("sigma 0 -> {r0} (random) / {w0} (wide); wide at 0.01 -> {w1}; grid {DEFAULT_SIGMA_GRID:?}"))
    });
}

#[test]
fn c10_token_baselines() {
    report(10, "token baselines", || {
        let s = "the quick brown fox jumps over the lazy dog";
        let (b, r) = (bleu(s, s, 4), rouge_l(s, s));
        ensure((b - 1.0).abs() <= BASELINE_SELF_TOL && (r - 1.0).abs() <= BASELINE_SELF_TOL, || {
            format!("self-match bleu {b}, rouge_l {r}")
        })?;
        let got = rouge_l("a b c d", "a c d");
        ensure((got - 6.0 / 7.0).abs() <= ROUGE_TOL, || format!("ROUGE-L {got} vs 6/7"))?;
        Ok(format!(
            "self BLEU {b}, self ROUGE-L {r}, ROUGE-L(\"a b c d\",\"a c d\") = {got:.12} (6/7 +/- {ROUGE_TOL:e})"
        ))
    });
}
