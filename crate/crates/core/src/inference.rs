//! Exact marginals: brute-force joint enumeration (the testing oracle) and
//! variable elimination (the engine).

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::network::{row_index, Evidence, MarginalSet, Network};

/// Largest joint state space the enumeration oracle will walk.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// Default cap on the number of entries in an intermediate elimination factor.
pub const DEFAULT_MAX_FACTOR_SIZE: f64 = 1e8;

/// Unnormalized joint over every elementary configuration, in declaration
/// order with the first variable varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub cardinalities: Vec<usize>,
    pub probs: Vec<f64>,
    /// Sum of all entries, i.e. `Pr(evidence)`.
    pub evidence_probability: f64,
}

impl JointTable {
    /// Decodes a flat index into per-variable states.
    pub fn configuration(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cardinalities.len()];
        for (slot, &card) in out.iter_mut().zip(&self.cardinalities).rev() {
            *slot = index % card;
            index /= card;
        }
        out
    }

    pub fn index(&self, configuration: &[usize]) -> usize {
        row_index(configuration, self.cardinalities.iter().copied())
    }
}

pub fn enumerate_joint(net: &Network, evidence: &Evidence) -> Result<JointTable> {
    net.check_evidence(evidence)?;
    let size = net.joint_size();
    if size > ENUMERATION_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let cards = net.cardinalities();
    let n = cards.len();
    let total = size as usize;
    let mut probs = vec![0.0; total];
    let mut config = vec![0usize; n];
    let mut parent_states = Vec::new();

    for slot in probs.iter_mut() {
        let consistent = evidence.iter().all(|(&v, &s)| config[v] == s);
        if consistent {
            let mut p = 1.0;
            for var in 0..n {
                parent_states.clear();
                parent_states.extend(net.parents(var).iter().map(|&q| config[q]));
                p *= net.probability(var, config[var], &parent_states);
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
        }
        // odometer, last variable fastest
        for d in (0..n).rev() {
            config[d] += 1;
            if config[d] < cards[d] {
                break;
            }
            config[d] = 0;
        }
    }

    let evidence_probability: f64 = probs.iter().sum();
    if evidence_probability <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok(JointTable {
        cardinalities: cards,
        probs,
        evidence_probability,
    })
}

pub fn marginals_by_enumeration(net: &Network, evidence: &Evidence) -> Result<MarginalSet> {
    let joint = enumerate_joint(net, evidence)?;
    let n = net.len();
    let mut probs: Vec<Vec<f64>> = joint.cardinalities.iter().map(|&c| vec![0.0; c]).collect();
    let mut config = vec![0usize; n];
    for &p in &joint.probs {
        if p != 0.0 {
            for (var, &s) in config.iter().enumerate() {
                probs[var][s] += p;
            }
        }
        for d in (0..n).rev() {
            config[d] += 1;
            if config[d] < joint.cardinalities[d] {
                break;
            }
            config[d] = 0;
        }
    }
    for row in probs.iter_mut() {
        for x in row.iter_mut() {
            *x /= joint.evidence_probability;
        }
    }
    Ok(finish(net, evidence, probs))
}

fn finish(net: &Network, evidence: &Evidence, mut probs: Vec<Vec<f64>>) -> MarginalSet {
    let mut flags = vec![false; net.len()];
    for (&v, &s) in evidence.iter() {
        flags[v] = true;
        probs[v] = vec![0.0; net.cardinality(v)];
        probs[v][s] = 1.0;
    }
    MarginalSet {
        names: net.variables().iter().map(|v| v.name.clone()).collect(),
        probs,
        evidence: flags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub max_factor_size: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            max_factor_size: DEFAULT_MAX_FACTOR_SIZE,
        }
    }
}

/// Exact conditional marginals of every variable by variable elimination.
pub fn evaluate_exact(net: &Network, evidence: &Evidence) -> Result<MarginalSet> {
    evaluate_exact_with(net, evidence, &EngineOptions::default())
}

pub fn evaluate_exact_with(
    net: &Network,
    evidence: &Evidence,
    options: &EngineOptions,
) -> Result<MarginalSet> {
    net.check_evidence(evidence)?;
    let factors: Vec<Factor> = (0..net.len())
        .map(|v| Factor::from_cpt(net, v, evidence))
        .collect();
    let n = net.len();
    let mut probs: Vec<Vec<f64>> = (0..n).map(|v| vec![0.0; net.cardinality(v)]).collect();

    let mut any_query = false;
    for q in 0..n {
        if evidence.contains(q) {
            continue;
        }
        any_query = true;
        let f = eliminate_all_but(net, &factors, evidence, Some(q), options)?;
        let z: f64 = f.values.iter().sum();
        if !(z > 0.0) {
            return Err(Error::ZeroProbabilityEvidence);
        }
        probs[q] = f.values.iter().map(|x| x / z).collect();
    }
    if !any_query {
        let f = eliminate_all_but(net, &factors, evidence, None, options)?;
        if !(f.values.iter().sum::<f64>() > 0.0) {
            return Err(Error::ZeroProbabilityEvidence);
        }
    }
    Ok(finish(net, evidence, probs))
}

/// Runs elimination over the ancestral closure of the query and the evidence
/// variables, leaving a factor over the query alone (or a scalar).
fn eliminate_all_but(
    net: &Network,
    factors: &[Factor],
    evidence: &Evidence,
    query: Option<usize>,
    options: &EngineOptions,
) -> Result<Factor> {
    // Barren descendants sum to one and can be dropped.
    let mut relevant = vec![false; net.len()];
    let mut stack: Vec<usize> = evidence.iter().map(|(&v, _)| v).collect();
    stack.extend(query);
    while let Some(v) = stack.pop() {
        if !relevant[v] {
            relevant[v] = true;
            stack.extend_from_slice(net.parents(v));
        }
    }

    let mut pool: Vec<Factor> = (0..net.len())
        .filter(|&v| relevant[v])
        .map(|v| factors[v].clone())
        .collect();
    let mut remaining: BTreeSet<usize> = (0..net.len())
        .filter(|&v| relevant[v] && !evidence.contains(v) && Some(v) != query)
        .collect();

    while !remaining.is_empty() {
        let var = min_degree_choice(&pool, &remaining);
        remaining.remove(&var);
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            pool.into_iter().partition(|f| f.vars.contains(&var));
        pool = without;
        let refs: Vec<&Factor> = with.iter().collect();
        pool.push(product_sum_out(&refs, Some(var), options)?);
    }
    let refs: Vec<&Factor> = pool.iter().collect();
    product_sum_out(&refs, None, options)
}

/// Variable with the fewest neighbours in the current interaction graph,
/// lowest declaration index on ties.
fn min_degree_choice(pool: &[Factor], candidates: &BTreeSet<usize>) -> usize {
    let mut best = None;
    let mut best_degree = usize::MAX;
    for &v in candidates {
        let mut neighbours = BTreeSet::new();
        for f in pool.iter().filter(|f| f.vars.contains(&v)) {
            neighbours.extend(f.vars.iter().copied().filter(|&u| u != v));
        }
        if neighbours.len() < best_degree {
            best_degree = neighbours.len();
            best = Some(v);
        }
    }
    best.expect("candidate set is non-empty")
}

/// A table over a sorted set of variables, last variable varying fastest.
#[derive(Debug, Clone, PartialEq)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    /// The CPT of `var` with evidence variables fixed and removed from scope.
    fn from_cpt(net: &Network, var: usize, evidence: &Evidence) -> Factor {
        let mut family: Vec<usize> = net.parents(var).to_vec();
        family.push(var);
        let mut vars: Vec<usize> = family
            .iter()
            .copied()
            .filter(|&v| !evidence.contains(v))
            .collect();
        vars.sort_unstable();
        let cards: Vec<usize> = vars.iter().map(|&v| net.cardinality(v)).collect();
        let size: usize = cards.iter().product();

        let mut full = vec![0usize; net.len()];
        for (&v, &s) in evidence.iter() {
            full[v] = s;
        }
        let mut assignment = vec![0usize; vars.len()];
        let mut parent_states = Vec::with_capacity(family.len());
        let mut values = Vec::with_capacity(size);
        for _ in 0..size {
            for (&v, &s) in vars.iter().zip(&assignment) {
                full[v] = s;
            }
            parent_states.clear();
            parent_states.extend(net.parents(var).iter().map(|&p| full[p]));
            values.push(net.probability(var, full[var], &parent_states));
            for d in (0..vars.len()).rev() {
                assignment[d] += 1;
                if assignment[d] < cards[d] {
                    break;
                }
                assignment[d] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for d in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.cards[d + 1];
        }
        strides
    }
}

/// Multiplies the factors together and sums out `eliminate` in one pass.
fn product_sum_out(
    factors: &[&Factor],
    eliminate: Option<usize>,
    options: &EngineOptions,
) -> Result<Factor> {
    let mut scope = BTreeSet::new();
    let mut card_of = std::collections::BTreeMap::new();
    for f in factors {
        for (&v, &c) in f.vars.iter().zip(&f.cards) {
            scope.insert(v);
            card_of.insert(v, c);
        }
    }
    let full_size: f64 = scope.iter().map(|v| card_of[v] as f64).product();
    if full_size > options.max_factor_size {
        return Err(Error::FactorTooLarge {
            size: full_size,
            limit: options.max_factor_size,
        });
    }

    let out_vars: Vec<usize> = scope
        .iter()
        .copied()
        .filter(|&v| Some(v) != eliminate)
        .collect();
    let out_cards: Vec<usize> = out_vars.iter().map(|v| card_of[v]).collect();
    let out_size: usize = out_cards.iter().product();

    // Per factor: stride of each output variable and of the eliminated one.
    let strides: Vec<Vec<usize>> = factors.iter().map(|f| f.strides()).collect();
    let stride_in = |fi: usize, v: usize| -> usize {
        factors[fi]
            .vars
            .iter()
            .position(|&u| u == v)
            .map_or(0, |k| strides[fi][k])
    };
    let out_strides: Vec<Vec<usize>> = (0..factors.len())
        .map(|fi| out_vars.iter().map(|&v| stride_in(fi, v)).collect())
        .collect();
    let (elim_card, elim_strides): (usize, Vec<usize>) = match eliminate {
        Some(v) => (
            card_of.get(&v).copied().unwrap_or(1),
            (0..factors.len()).map(|fi| stride_in(fi, v)).collect(),
        ),
        None => (1, vec![0; factors.len()]),
    };

    let mut values = Vec::with_capacity(out_size);
    let mut offsets = vec![0usize; factors.len()];
    let mut assignment = vec![0usize; out_vars.len()];
    for _ in 0..out_size {
        let mut acc = 0.0;
        for e in 0..elim_card {
            let mut p = 1.0;
            for (fi, f) in factors.iter().enumerate() {
                p *= f.values[offsets[fi] + e * elim_strides[fi]];
            }
            acc += p;
        }
        values.push(acc);

        for d in (0..out_vars.len()).rev() {
            assignment[d] += 1;
            if assignment[d] < out_cards[d] {
                for (fi, off) in offsets.iter_mut().enumerate() {
                    *off += out_strides[fi][d];
                }
                break;
            }
            for (fi, off) in offsets.iter_mut().enumerate() {
                *off -= out_strides[fi][d] * (out_cards[d] - 1);
            }
            assignment[d] = 0;
        }
    }
    Ok(Factor {
        vars: out_vars,
        cards: out_cards,
        values,
    })
}
