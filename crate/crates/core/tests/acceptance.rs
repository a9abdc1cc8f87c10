//! Acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so every verdict is printed even when
//! everything passes. Exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use anytime_bn::abstraction::{build_apn, Partition, PolicyKind, Superstate, WeightingPolicy};
use anytime_bn::anytime::{abstract_iter, AnytimeConfig, AnytimeTrace, Control};
use anytime_bn::bench::{bench_policies, mean_error_by_granularity, BenchConfig};
use anytime_bn::inference::{evaluate_exact, marginals_by_enumeration};
use anytime_bn::io::{read_network, write_network};
use anytime_bn::models::{gen_commuter, gen_traffic, ParamStyle, TrafficConfig};
use anytime_bn::network::{Evidence, Network};
use anytime_bn::scoring::{log_score, relscore, spread};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{median, random_evidence, random_network};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn scored_run(net: &Network, evidence: &Evidence, max_iterations: Option<usize>) -> AnytimeTrace {
    let exact = evaluate_exact(net, evidence).unwrap();
    let config = AnytimeConfig {
        score_against: Some(exact),
        max_iterations,
        ..Default::default()
    };
    abstract_iter(net, evidence, &config, |_| Control::Continue).unwrap()
}

fn styles() -> [(&'static str, ParamStyle); 3] {
    [
        ("uniform", ParamStyle::Uniform),
        ("skewed", ParamStyle::skewed()),
        ("deterministic", ParamStyle::deterministic()),
    ]
}

fn convergence() -> Verdict {
    let mut runs = 0;
    for (label, style) in styles() {
        for seed in 1..=5 {
            let net = gen_commuter(8, style, seed).unwrap();
            // observe leave-home at its most likely state so the evidence is possible
            let lh = net.index_of("LH").unwrap();
            let prior = &net.cpt(lh).rows[0];
            let mode = (0..prior.len()).fold(0, |b, i| if prior[i] > prior[b] { i } else { b });
            for evidence in [Evidence::new(), Evidence::new().with(lh, mode)] {
                let trace = scored_run(&net, &evidence, None);
                check(
                    trace.records.len() == 8,
                    format!("{label} seed {seed}: {} iterations", trace.records.len()),
                )?;
                let last = trace.last().avg_relscore.unwrap();
                check(
                    (last - 1.0).abs() <= 1e-9,
                    format!("{label} seed {seed}: final avg_relscore {last}"),
                )?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs, 8 iterations each, final avg_relscore within 1e-9 of 1"))
}

fn bench(prior: [f64; 2]) -> Vec<anytime_bn::bench::BenchRow> {
    bench_policies(&BenchConfig {
        trials: 100,
        states: 64,
        root_prior: prior,
        seed: 7,
    })
    .unwrap()
}

fn cf_exactness() -> Verdict {
    let rows = bench([0.5, 0.5]);
    let cf: Vec<_> = rows.iter().filter(|r| r.policy == PolicyKind::Cf.as_str()).collect();
    check(cf.len() == 100 * 64, format!("{} CF rows", cf.len()))?;
    let worst = cf.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    check(worst <= 1e-12, format!("worst CF relative error {worst:e}"))?;
    Ok(format!("100 chains x 64 granularities, worst CF relative error {worst:.1e}"))
}

fn policy_ordering() -> Verdict {
    let gap = |prior: [f64; 2]| -> Result<f64, String> {
        let rows = bench(prior);
        let avg = mean_error_by_granularity(&rows, PolicyKind::Average);
        let cf = mean_error_by_granularity(&rows, PolicyKind::Cf);
        for (g, (a, c)) in avg.iter().zip(&cf).enumerate() {
            check(c <= a, format!("prior {prior:?}: CF {c} > average {a} at granularity {}", g + 1))?;
        }
        Ok(avg.iter().zip(&cf).map(|(a, c)| a - c).sum::<f64>() / avg.len() as f64)
    };
    let uniform = gap([0.5, 0.5])?;
    let skewed = gap([0.9, 0.1])?;
    check(
        skewed < uniform,
        format!("mean gap with skewed prior {skewed:.4e} is not below uniform {uniform:.4e}"),
    )?;
    Ok(format!(
        "CF <= average at every granularity; mean gap {uniform:.4e} (0.5,0.5) > {skewed:.4e} (0.9,0.1)"
    ))
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let net = random_network(&mut rng, 6, 4);
        let evidence = random_evidence(&mut rng, &net, 2);
        let ve = evaluate_exact(&net, &evidence).unwrap();
        let en = marginals_by_enumeration(&net, &evidence).unwrap();
        let d = ve.max_abs_diff(&en).unwrap();
        check(d <= 1e-9, format!("network {i}: difference {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("50 random networks, worst difference {worst:.1e}"))
}

fn identity_abstraction() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..20 {
        let net = random_network(&mut rng, 6, 4);
        let evidence = random_evidence(&mut rng, &net, 2);
        let opn = evaluate_exact(&net, &evidence).unwrap();
        for policy in [WeightingPolicy::Average, WeightingPolicy::Cf] {
            let apn = build_apn(&net, &Partition::elementary(&net), &policy).unwrap();
            check(
                apn.network.cpts() == net.cpts(),
                format!("network {i}, {}: CPTs differ", policy.kind()),
            )?;
            let m = evaluate_exact(&apn.network, &evidence).unwrap();
            check(
                m.probs == opn.probs,
                format!("network {i}, {}: marginals differ", policy.kind()),
            )?;
        }
    }
    Ok("20 random networks, CPTs and marginals identical under average and cf".into())
}

fn distribution(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64], 2..=max_len).prop_filter_map(
        "all-zero draw",
        |raw| {
            let total: f64 = raw.iter().sum();
            (total > 0.0).then(|| raw.iter().map(|x| x / total).collect())
        },
    )
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|m| {
        let d = || {
            prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0..1.0f64], m).prop_filter_map(
                "all-zero draw",
                |raw| {
                    let total: f64 = raw.iter().sum();
                    (total > 0.0).then(|| raw.iter().map(|x| x / total).collect::<Vec<f64>>())
                },
            )
        };
        (d(), d())
    })
}

fn partition_of(m: usize, cuts: &[bool]) -> Vec<Superstate> {
    let mut blocks = Vec::new();
    let mut lo = 0;
    for (i, &cut) in cuts.iter().enumerate().take(m) {
        if i == m - 1 || cut {
            blocks.push(Superstate::new(lo, i));
            lo = i + 1;
        }
    }
    blocks
}

fn scoring_properties() -> Verdict {
    const CASES: u32 = 10_000;
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&pair(), |(o, a)| {
            let so = log_score(&o, &o).unwrap();
            let sa = log_score(&o, &a).unwrap();
            prop_assert!(sa <= so + 1e-12, "score(a) {} > score(o) {}", sa, so);
            let l1: f64 = o.iter().zip(&a).map(|(x, y)| (x - y).abs()).sum();
            if l1 > 1e-3 {
                prop_assert!(sa < so, "distinct distributions scored equal");
            }
            let r = relscore(&o, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert_eq!(relscore(&o, &o).unwrap(), 1.0);
            let m = o.len();
            let uniform = vec![1.0 / m as f64; m];
            let expected = so / -(m as f64).ln();
            prop_assert!((relscore(&o, &uniform).unwrap() - expected).abs() <= 1e-12);
            Ok(())
        })
        .map_err(|e| format!("gibbs/relscore: {e}"))?;
    runner
        .run(
            &(2usize..=16).prop_flat_map(|m| {
                (prop::collection::vec(any::<bool>(), m), distribution(m)).prop_map(move |(c, d)| (m, c, d))
            }),
            |(m, cuts, dist)| {
                let blocks = partition_of(m, &cuts);
                let mass: Vec<f64> = blocks.iter().enumerate().map(|(i, _)| dist[i % dist.len()]).collect();
                let out = spread(&mass, &blocks).unwrap();
                prop_assert_eq!(out.len(), m);
                for (s, &p) in blocks.iter().zip(&mass) {
                    let got: f64 = s.states().map(|k| out[k]).sum();
                    prop_assert!((got - p).abs() <= 1e-12);
                }
                let total: f64 = mass.iter().sum();
                prop_assert!((out.iter().sum::<f64>() - total).abs() <= 1e-12);
                Ok(())
            },
        )
        .map_err(|e| format!("spread: {e}"))?;
    Ok(format!("{CASES} cases each for Gibbs/relscore and spread properties"))
}

fn median_curve(traces: &[AnytimeTrace]) -> Result<Vec<f64>, String> {
    let len = traces[0].records.len();
    check(
        traces.iter().all(|t| t.records.len() == len),
        "runs have different iteration counts",
    )?;
    Ok((0..len)
        .map(|i| {
            let mut v: Vec<f64> = traces.iter().map(|t| t.records[i].avg_relscore.unwrap()).collect();
            median(&mut v)
        })
        .collect())
}

fn improvement_shape() -> Verdict {
    let mut report = Vec::new();
    let families: [(&str, Vec<Network>); 2] = [
        (
            "commuter",
            (1..=20).map(|s| gen_commuter(8, ParamStyle::Uniform, s).unwrap()).collect(),
        ),
        (
            "traffic",
            (1..=10)
                .map(|s| gen_traffic(&TrafficConfig::new(3, 8, 0.1, s)).unwrap())
                .collect(),
        ),
    ];
    for (label, nets) in families {
        let traces: Vec<AnytimeTrace> = nets.iter().map(|n| scored_run(n, &Evidence::new(), None)).collect();
        for (i, t) in traces.iter().enumerate() {
            let last = t.last().avg_relscore.unwrap();
            check((last - 1.0).abs() <= 1e-9, format!("{label} run {i}: final {last}"))?;
        }
        let curve = median_curve(&traces)?;
        for w in curve.windows(2) {
            check(w[1] >= w[0], format!("{label}: median drops {} -> {}", w[0], w[1]))?;
        }
        let shown: Vec<String> = curve.iter().map(|x| format!("{x:.3}")).collect();
        report.push(format!("{label} median [{}]", shown.join(" ")));
    }
    Ok(report.join("; "))
}

fn cost_growth() -> Verdict {
    let mut times = Vec::new();
    for k in [2, 4, 6, 8] {
        let net = gen_commuter(k, ParamStyle::Uniform, 1).unwrap();
        let mut reps: Vec<f64> = (0..5)
            .map(|_| {
                let t = Instant::now();
                evaluate_exact(&net, &Evidence::new()).unwrap();
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.push(median(&mut reps));
    }
    let shown: Vec<String> = times.iter().map(|t| format!("{:.3}ms", t * 1e3)).collect();
    for w in times.windows(2) {
        check(w[1] > w[0], format!("not strictly increasing: {}", shown.join(" ")))?;
    }
    Ok(format!("median times for 2/4/6/8 states: {}", shown.join(" ")))
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_anytime-bn"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    check(
        out.status.success(),
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    for i in 0..2 {
        cli(&["gen", "commuter", "--states", "6", "--style", "skewed", "--seed", "3", "--out", &p(&format!("c{i}.json"))])?;
        cli(&[
            "anytime",
            &p("c0.json"),
            "--evidence",
            "LH=s2",
            "--policy",
            "cf",
            "--strategy",
            "skew",
            "--score",
            "--fixed-clock",
            "--out",
            &p(&format!("run{i}")),
        ])?;
        cli(&["bench-policies", "--trials", "5", "--states", "16", "--root-prior", "0.9,0.1", "--seed", "7", "--out", &p(&format!("b{i}.csv"))])?;
    }
    for (a, b) in [
        ("c0.json", "c1.json"),
        ("run0/summary.csv", "run1/summary.csv"),
        ("run0/nodes.csv", "run1/nodes.csv"),
        ("b0.csv", "b1.csv"),
    ] {
        check(read(&dir.path().join(a)) == read(&dir.path().join(b)), format!("{a} and {b} differ"))?;
    }

    let nets = [
        std::fs::read_to_string(dir.path().join("c0.json")).unwrap(),
        write_network(&gen_traffic(&TrafficConfig::new(3, 8, 0.1, 2)).unwrap()),
    ];
    for text in &nets {
        let (net, _) = read_network(text).unwrap();
        check(&write_network(&net) == text, "write -> read -> write changed the document")?;
    }
    Ok("generated network, summary.csv, nodes.csv and bench CSV byte-identical; network round trip byte-identical".into())
}

fn uniform_initial_fit() -> Verdict {
    let initial = |style: ParamStyle| -> Vec<f64> {
        (1..=20)
            .map(|s| {
                let net = gen_commuter(8, style, s).unwrap();
                scored_run(&net, &Evidence::new(), Some(0)).records[0].avg_relscore.unwrap()
            })
            .collect()
    };
    let u = median(&mut initial(ParamStyle::Uniform));
    let d = median(&mut initial(ParamStyle::deterministic()));
    check(u >= d, format!("uniform median {u:.4} < deterministic median {d:.4}"))?;
    Ok(format!("iteration-0 median avg_relscore: uniform {u:.4} >= deterministic {d:.4}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("convergence to exact", convergence),
        ("cf exactness on the chain", cf_exactness),
        ("policy ordering", policy_ordering),
        ("oracle equivalence", oracle_equivalence),
        ("identity abstraction", identity_abstraction),
        ("scoring properties", scoring_properties),
        ("anytime improvement shape", improvement_shape),
        ("cost growth direction", cost_growth),
        ("determinism", determinism),
        ("uniform initial fit", uniform_initial_fit),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({secs:.2}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({secs:.2}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
