//! The anytime refinement loop.
//!
//! Iteration 0 evaluates the network with one superstate per variable. Each
//! later iteration splits superstates chosen from the previous marginals,
//! rebuilds the abstract network from the original one, and evaluates it
//! again. The loop stops when every state is elementary, when the iteration
//! cap or time budget is reached, or when the sink asks it to. Budgets are
//! checked between iterations only; a running evaluation is never aborted.

use std::fmt;
use std::time::{Duration, Instant};

use crate::abstraction::{
    build_apn, map_evidence, select_splits, Partition, PolicyKind, SplitStrategy,
    WeightingPolicy,
};
use crate::error::Result;
use crate::inference::{evaluate_exact_with, EngineOptions};
use crate::network::{Evidence, MarginalSet, Network};
use crate::scoring::{mean_excluding, per_variable_relscores};

/// Source of elapsed time for iteration records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    #[default]
    Wall,
    /// Elapsed time is the iteration index in milliseconds and evaluation
    /// time is zero, so traces are byte-for-byte reproducible.
    Fixed,
}

#[derive(Debug, Clone)]
pub struct AnytimeConfig {
    pub policy: WeightingPolicy,
    pub strategy: SplitStrategy,
    /// Highest iteration index to run (iteration 0 always runs).
    pub max_iterations: Option<usize>,
    pub budget: Option<Duration>,
    /// Exact marginals to score each iteration against.
    pub score_against: Option<MarginalSet>,
    pub exclude_evidence: bool,
    pub engine: EngineOptions,
    pub clock: ClockMode,
}

impl Default for AnytimeConfig {
    fn default() -> Self {
        AnytimeConfig {
            policy: WeightingPolicy::Average,
            strategy: SplitStrategy::PerNode,
            max_iterations: None,
            budget: None,
            score_against: None,
            exclude_evidence: true,
            engine: EngineOptions::default(),
            clock: ClockMode::Wall,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub partition: Partition,
    pub marginals: MarginalSet,
    /// Since the start of the run, including network construction.
    pub elapsed: Duration,
    /// Evaluation of this iteration's abstract network alone.
    pub eval_time: Duration,
    pub relscores: Option<Vec<f64>>,
    pub avg_relscore: Option<f64>,
    pub states_per_variable: Vec<usize>,
}

impl IterationRecord {
    pub fn total_superstates(&self) -> usize {
        self.states_per_variable.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    FullyRefined,
    Budget,
    IterationCap,
    Interrupted,
    /// The engine failed on a later iteration; the trace ends with the last
    /// good record.
    EngineError(String),
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::FullyRefined => "fully-refined",
            Termination::Budget => "budget",
            Termination::IterationCap => "iteration-cap",
            Termination::Interrupted => "interrupted",
            Termination::EngineError(_) => "engine-error",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::EngineError(msg) => write!(f, "engine-error: {msg}"),
            other => f.write_str(other.as_str()),
        }
    }
}

/// What the sink wants after seeing a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub policy: PolicyKind,
    pub strategy: SplitStrategy,
    pub max_iterations: Option<usize>,
    pub budget: Option<Duration>,
}

impl AnytimeTrace {
    /// The latest completed answer.
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("trace always holds iteration 0")
    }
}

/// Runs the refinement loop, calling `sink` once per completed iteration.
///
/// Errors from iteration 0 are returned; errors from later iterations end the
/// run with [`Termination::EngineError`] and keep the records so far.
pub fn abstract_iter<F>(
    net: &Network,
    evidence: &Evidence,
    config: &AnytimeConfig,
    mut sink: F,
) -> Result<AnytimeTrace>
where
    F: FnMut(&IterationRecord) -> Control,
{
    net.check_evidence(evidence)?;
    let start = Instant::now();
    let mut partition = Partition::initial(net);
    let mut records: Vec<IterationRecord> = Vec::new();

    let termination = loop {
        let iteration = records.len();
        let record = match evaluate_iteration(net, evidence, config, &partition, iteration, start) {
            Ok(r) => r,
            Err(e) if iteration == 0 => return Err(e),
            Err(e) => break Termination::EngineError(e.to_string()),
        };
        let control = sink(&record);
        let marginals_for_split = record.marginals.clone();
        records.push(record);

        if partition.is_fully_elementary() {
            break Termination::FullyRefined;
        }
        if control == Control::Stop {
            break Termination::Interrupted;
        }
        if config.max_iterations.is_some_and(|cap| iteration >= cap) {
            break Termination::IterationCap;
        }
        if let Some(budget) = config.budget {
            if elapsed(config.clock, start, iteration) >= budget {
                break Termination::Budget;
            }
        }

        let splits = select_splits(&marginals_for_split, &partition, config.strategy, net);
        // at most one split per variable, so positions stay valid
        for (var, pos) in splits {
            partition = partition.split(net, var, pos)?;
        }
    };

    Ok(AnytimeTrace {
        records,
        termination,
        policy: config.policy.kind(),
        strategy: config.strategy,
        max_iterations: config.max_iterations,
        budget: config.budget,
    })
}

fn elapsed(clock: ClockMode, start: Instant, iteration: usize) -> Duration {
    match clock {
        ClockMode::Wall => start.elapsed(),
        ClockMode::Fixed => Duration::from_millis(iteration as u64),
    }
}

fn evaluate_iteration(
    net: &Network,
    evidence: &Evidence,
    config: &AnytimeConfig,
    partition: &Partition,
    iteration: usize,
    start: Instant,
) -> Result<IterationRecord> {
    let apn = build_apn(net, partition, &config.policy)?;
    let abstract_evidence = map_evidence(evidence, partition);
    let eval_start = Instant::now();
    let marginals = evaluate_exact_with(&apn.network, &abstract_evidence, &config.engine)?;
    let eval_time = match config.clock {
        ClockMode::Wall => eval_start.elapsed(),
        ClockMode::Fixed => Duration::ZERO,
    };

    let (relscores, avg_relscore) = match &config.score_against {
        Some(exact) => {
            let scores = per_variable_relscores(exact, &marginals, partition)?;
            let avg = mean_excluding(&scores, &exact.evidence, config.exclude_evidence);
            (Some(scores), Some(avg))
        }
        None => (None, None),
    };

    Ok(IterationRecord {
        iteration,
        partition: partition.clone(),
        marginals,
        elapsed: elapsed(config.clock, start, iteration),
        eval_time,
        relscores,
        avg_relscore,
        states_per_variable: partition.counts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::evaluate_exact;
    use crate::network::{Cpt, Variable};

    fn binary_pair() -> Network {
        Network::new(
            "pair",
            vec![
                Variable::with_indexed_states("a", 2),
                Variable::with_indexed_states("b", 2),
            ],
            vec![
                Cpt::prior(vec![0.3, 0.7]),
                Cpt::new(vec!["a".into()], vec![vec![0.5, 0.5], vec![0.2, 0.8]]),
            ],
        )
        .unwrap()
    }

    fn uniform_chain(m: usize) -> Network {
        let row: Vec<f64> = (1..=m).map(|i| i as f64).collect();
        let total: f64 = row.iter().sum();
        let row: Vec<f64> = row.iter().map(|x| x / total).collect();
        Network::new(
            "c",
            vec![
                Variable::with_indexed_states("x", m),
                Variable::with_indexed_states("y", m),
            ],
            vec![
                Cpt::prior(row.clone()),
                Cpt::new(vec!["x".into()], vec![row; m]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn binary_network_refines_in_one_step() {
        let net = binary_pair();
        let trace = abstract_iter(&net, &Evidence::new(), &AnytimeConfig::default(), |_| {
            Control::Continue
        })
        .unwrap();
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.termination, Termination::FullyRefined);
        let exact = evaluate_exact(&net, &Evidence::new()).unwrap();
        assert!(trace.last().marginals.max_abs_diff(&exact).unwrap() < 1e-12);
    }

    #[test]
    fn iteration_cap_counts_from_zero() {
        let net = uniform_chain(8);
        let config = AnytimeConfig {
            max_iterations: Some(3),
            ..Default::default()
        };
        let trace = abstract_iter(&net, &Evidence::new(), &config, |_| Control::Continue).unwrap();
        assert_eq!(trace.records.len(), 4);
        assert_eq!(trace.termination, Termination::IterationCap);
        assert_eq!(trace.last().states_per_variable, vec![4, 4]);
    }

    #[test]
    fn sink_sees_every_record_in_order_and_can_stop() {
        let net = uniform_chain(8);
        let mut seen = Vec::new();
        let trace = abstract_iter(&net, &Evidence::new(), &AnytimeConfig::default(), |r| {
            seen.push(r.iteration);
            if r.iteration == 2 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2]);
        assert_eq!(trace.termination, Termination::Interrupted);
    }

    #[test]
    fn zero_budget_still_returns_iteration_zero() {
        let net = uniform_chain(8);
        let config = AnytimeConfig {
            budget: Some(Duration::ZERO),
            ..Default::default()
        };
        let trace = abstract_iter(&net, &Evidence::new(), &config, |_| Control::Continue).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.termination, Termination::Budget);
    }

    #[test]
    fn fixed_clock_budget_counts_iterations() {
        let net = uniform_chain(8);
        let config = AnytimeConfig {
            budget: Some(Duration::from_millis(2)),
            clock: ClockMode::Fixed,
            ..Default::default()
        };
        let trace = abstract_iter(&net, &Evidence::new(), &config, |_| Control::Continue).unwrap();
        assert_eq!(trace.records.len(), 3);
        assert_eq!(trace.records[2].elapsed, Duration::from_millis(2));
    }

    #[test]
    fn single_global_adds_one_superstate_per_iteration() {
        let net = uniform_chain(4);
        let config = AnytimeConfig {
            strategy: SplitStrategy::SingleGlobal,
            ..Default::default()
        };
        let trace = abstract_iter(&net, &Evidence::new(), &config, |_| Control::Continue).unwrap();
        // 2 superstates initially, 8 at the end: 7 records
        assert_eq!(trace.records.len(), 7);
        for w in trace.records.windows(2) {
            assert_eq!(w[1].total_superstates(), w[0].total_superstates() + 1);
        }
    }

    #[test]
    fn evidence_refines_with_scores() {
        let net = uniform_chain(8);
        let ev = Evidence::new().with(0, 5);
        let exact = evaluate_exact(&net, &ev).unwrap();
        let config = AnytimeConfig {
            score_against: Some(exact),
            ..Default::default()
        };
        let trace = abstract_iter(&net, &ev, &config, |_| Control::Continue).unwrap();
        assert_eq!(trace.records.len(), 8);
        assert!((trace.last().avg_relscore.unwrap() - 1.0).abs() < 1e-9);
        for r in &trace.records {
            assert!(r.marginals.evidence[0]);
        }
    }
}
