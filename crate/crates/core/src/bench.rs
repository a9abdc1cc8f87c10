//! Weighting-policy comparison on random three-node chains.
//!
//! Each trial draws a chain `a -> b -> c`, keeps `a` and `c` elementary and
//! refines `b` from one superstate down to its elementary states, splitting
//! the most probable superstate each step. At every granularity the abstract
//! `Pr(c = c0)` is compared with the enumeration oracle.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::abstraction::{
    build_apn, select_splits, Partition, PolicyKind, SplitStrategy, Superstate, WeightingPolicy,
};
use crate::error::Result;
use crate::inference::{evaluate_exact, marginals_by_enumeration};
use crate::models::{gen_chain, ParamStyle};
use crate::network::{Evidence, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub trials: usize,
    pub states: usize,
    pub root_prior: [f64; 2],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub trial: usize,
    pub granularity: usize,
    pub policy: String,
    pub rel_error: f64,
}

/// Per-trial seed derived from the run seed by a splitmix64 step, so trials
/// are independent of each other and of evaluation order.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed
        .wrapping_add((trial as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn bench_chain(config: &BenchConfig, trial: usize) -> Result<Network> {
    gen_chain(
        config.states,
        config.root_prior,
        ParamStyle::Uniform,
        trial_seed(config.seed, trial),
    )
}

/// `(granularity of b, relative error of Pr(c0))` from one superstate to
/// fully elementary.
pub fn refine_chain(net: &Network, policy: &WeightingPolicy) -> Result<Vec<(usize, f64)>> {
    let oracle = marginals_by_enumeration(net, &Evidence::new())?.probs[2][0];
    let b = 1;
    let blocks: Vec<Vec<Superstate>> = Partition::elementary(net)
        .counts()
        .iter()
        .enumerate()
        .map(|(v, &m)| {
            if v == b {
                vec![Superstate::new(0, m - 1)]
            } else {
                (0..m).map(|i| Superstate::new(i, i)).collect()
            }
        })
        .collect();
    let mut partition = Partition::from_blocks(net, blocks)?;
    let mut out = Vec::with_capacity(net.cardinality(b));
    loop {
        let apn = build_apn(net, &partition, policy)?;
        let m = evaluate_exact(&apn.network, &Evidence::new())?;
        let approx = m.probs[2][0];
        out.push((partition.blocks(b).len(), (approx - oracle).abs() / oracle));
        let splits = select_splits(&m, &partition, SplitStrategy::PerNode, net);
        let Some(&(var, pos)) = splits.first() else { break };
        partition = partition.split(net, var, pos)?;
    }
    Ok(out)
}

pub fn bench_policies(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for trial in 0..config.trials {
        let net = bench_chain(config, trial)?;
        for policy in [WeightingPolicy::Average, WeightingPolicy::Cf] {
            let kind: PolicyKind = policy.kind();
            for (granularity, rel_error) in refine_chain(&net, &policy)? {
                rows.push(BenchRow {
                    trial,
                    granularity,
                    policy: kind.to_string(),
                    rel_error,
                });
            }
        }
    }
    Ok(rows)
}

/// Mean relative error per granularity for one policy, indexed by
/// granularity - 1.
pub fn mean_error_by_granularity(rows: &[BenchRow], policy: PolicyKind) -> Vec<f64> {
    let max = rows.iter().map(|r| r.granularity).max().unwrap_or(0);
    let mut sum = vec![0.0; max];
    let mut count = vec![0usize; max];
    for r in rows.iter().filter(|r| r.policy == policy.as_str()) {
        sum[r.granularity - 1] += r.rel_error;
        count[r.granularity - 1] += 1;
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect()
}

pub fn write_bench<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    if rows.is_empty() {
        w.write_record(["trial", "granularity", "policy", "rel_error"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
