//! State-space abstraction: partitions of each variable's ordered elementary
//! states into contiguous superstates, construction of abstract networks from
//! the original one, and the split rule used to refine them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::inference::{marginals_by_enumeration, ENUMERATION_LIMIT};
use crate::network::{Cpt, Evidence, MarginalSet, Network, Variable};

/// Inclusive range `[lo, hi]` of 0-based elementary state indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Superstate {
    pub lo: usize,
    pub hi: usize,
}

impl Superstate {
    pub fn new(lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi);
        Superstate { lo, hi }
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_elementary(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, state: usize) -> bool {
        self.lo <= state && state <= self.hi
    }

    pub fn states(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    /// Halves at `k = floor((lo + hi - 1) / 2)`; the left half gets the
    /// smaller share when the width is odd.
    pub fn halves(&self) -> Option<(Superstate, Superstate)> {
        if self.is_elementary() {
            return None;
        }
        let k = (self.lo + self.hi - 1) / 2;
        Some((Superstate::new(self.lo, k), Superstate::new(k + 1, self.hi)))
    }
}

impl fmt::Display for Superstate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lo, self.hi)
    }
}

/// Per-variable ordered cover of elementary states by superstates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<Superstate>>,
}

impl Partition {
    /// One superstate per variable.
    pub fn initial(net: &Network) -> Self {
        Partition {
            blocks: net
                .cardinalities()
                .into_iter()
                .map(|m| vec![Superstate::new(0, m - 1)])
                .collect(),
        }
    }

    pub fn elementary(net: &Network) -> Self {
        Partition {
            blocks: net
                .cardinalities()
                .into_iter()
                .map(|m| (0..m).map(|i| Superstate::new(i, i)).collect())
                .collect(),
        }
    }

    /// Builds a partition from explicit blocks, checking contiguity and cover.
    pub fn from_blocks(net: &Network, blocks: Vec<Vec<Superstate>>) -> Result<Self> {
        let p = Partition { blocks };
        p.check(net)?;
        Ok(p)
    }

    pub fn check(&self, net: &Network) -> Result<()> {
        if self.blocks.len() != net.len() {
            return Err(Error::PartitionMismatch(format!(
                "{} variables in partition, {} in network",
                self.blocks.len(),
                net.len()
            )));
        }
        for (var, blocks) in self.blocks.iter().enumerate() {
            let m = net.cardinality(var);
            let mut next = 0;
            for s in blocks {
                if s.lo != next || s.hi < s.lo || s.hi >= m {
                    return Err(Error::PartitionMismatch(format!(
                        "superstates of `{}` do not tile [0, {}]",
                        net.variable(var).name,
                        m - 1
                    )));
                }
                next = s.hi + 1;
            }
            if next != m {
                return Err(Error::PartitionMismatch(format!(
                    "superstates of `{}` do not cover all {m} states",
                    net.variable(var).name
                )));
            }
        }
        Ok(())
    }

    pub fn blocks(&self, var: usize) -> &[Superstate] {
        &self.blocks[var]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn total_superstates(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn is_fully_elementary(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(Superstate::is_elementary))
    }

    pub fn is_variable_elementary(&self, var: usize) -> bool {
        self.blocks[var].iter().all(Superstate::is_elementary)
    }

    /// Position of the superstate containing `state`.
    pub fn containing(&self, var: usize, state: usize) -> Option<usize> {
        self.blocks[var].iter().position(|s| s.contains(state))
    }

    /// Elementary state -> superstate position lookup for one variable.
    pub fn state_map(&self, var: usize) -> Vec<usize> {
        let mut map = Vec::new();
        for (pos, s) in self.blocks[var].iter().enumerate() {
            map.extend(std::iter::repeat_n(pos, s.width()));
        }
        map
    }

    /// Replaces superstate `index` of `var` by its two halves.
    pub fn split(&self, net: &Network, var: usize, index: usize) -> Result<Partition> {
        let target = self.blocks.get(var).and_then(|b| b.get(index)).ok_or_else(|| {
            Error::PartitionMismatch(format!("no superstate {index} for variable #{var}"))
        })?;
        let (left, right) = target.halves().ok_or_else(|| Error::ElementaryState {
            variable: net.variable(var).name.clone(),
            index: target.lo,
        })?;
        let mut out = self.clone();
        out.blocks[var].splice(index..=index, [left, right]);
        Ok(out)
    }
}

/// How elementary parent states are weighted when collapsing them into a
/// superstate.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightingPolicy {
    /// Uniform weights.
    Average,
    /// Each state's conditional probability averaged over its parents'
    /// configurations.
    Cf,
    /// True prior marginals of the original network.
    ExactMarginal(Arc<Vec<Vec<f64>>>),
}

impl WeightingPolicy {
    /// Computes the prior marginals by enumeration; fails when the joint
    /// state space exceeds the oracle guard.
    pub fn exact_marginal(net: &Network) -> Result<Self> {
        if net.joint_size() > ENUMERATION_LIMIT {
            return Err(Error::StateSpaceTooLarge {
                size: net.joint_size(),
                limit: ENUMERATION_LIMIT,
            });
        }
        let m = marginals_by_enumeration(net, &Evidence::new())?;
        Ok(WeightingPolicy::ExactMarginal(Arc::new(m.probs)))
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            WeightingPolicy::Average => PolicyKind::Average,
            WeightingPolicy::Cf => PolicyKind::Cf,
            WeightingPolicy::ExactMarginal(_) => PolicyKind::ExactMarginal,
        }
    }

    /// Unnormalized weight of every elementary state of `var`.
    fn weights(&self, net: &Network, var: usize) -> Vec<f64> {
        match self {
            WeightingPolicy::Average => vec![1.0; net.cardinality(var)],
            WeightingPolicy::Cf => cf_weights(net, var),
            WeightingPolicy::ExactMarginal(m) => m[var].clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Average,
    Cf,
    ExactMarginal,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Average => "average",
            PolicyKind::Cf => "cf",
            PolicyKind::ExactMarginal => "exact",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mean of the variable's CPT rows over all elementary parent
/// configurations; the prior itself for a root.
pub fn cf_weights(net: &Network, var: usize) -> Vec<f64> {
    let rows = &net.cpt(var).rows;
    let mut w = vec![0.0; net.cardinality(var)];
    for row in rows {
        for (acc, p) in w.iter_mut().zip(row) {
            *acc += p;
        }
    }
    let r = rows.len() as f64;
    w.iter_mut().for_each(|x| *x /= r);
    w
}

/// A network over superstates together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractNetwork {
    pub network: Network,
    pub partition: Partition,
    pub policy: PolicyKind,
    pub source: String,
}

/// Builds the abstract network for `partition`.
///
/// For a child superstate `S` and parent superstate configuration
/// `T = (T1, .., Tr)`:
///
/// `Pr(S | T) = sum_{y in T1 x .. x Tr} prod_l w_l(y_l) * sum_{x in S} Pr(x | y)`
///
/// with each parent's policy weights renormalized inside its own superstate,
/// falling back to uniform weights where they are all zero. Roots keep their
/// exact superstate mass.
pub fn build_apn(
    net: &Network,
    partition: &Partition,
    policy: &WeightingPolicy,
) -> Result<AbstractNetwork> {
    partition.check(net)?;
    let n = net.len();

    // Normalized weight of each elementary state within its superstate.
    let local_weights: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let raw = policy.weights(net, v);
            let mut out = vec![0.0; raw.len()];
            for s in partition.blocks(v) {
                let total: f64 = s.states().map(|i| raw[i]).sum();
                for i in s.states() {
                    out[i] = if total > 0.0 {
                        raw[i] / total
                    } else {
                        1.0 / s.width() as f64
                    };
                }
            }
            out
        })
        .collect();
    let state_maps: Vec<Vec<usize>> = (0..n).map(|v| partition.state_map(v)).collect();

    let mut variables = Vec::with_capacity(n);
    let mut cpts = Vec::with_capacity(n);
    for var in 0..n {
        let source = net.variable(var);
        let child_map = &state_maps[var];
        let child_count = partition.blocks(var).len();
        let parents = net.parents(var);
        let abstract_rows: usize = parents.iter().map(|&p| partition.blocks(p).len()).product();
        let mut rows = vec![vec![0.0; child_count]; abstract_rows];

        let mut config = vec![0usize; parents.len()];
        for elementary_row in &net.cpt(var).rows {
            let mut weight = 1.0;
            let mut target = 0;
            for (&p, &s) in parents.iter().zip(&config) {
                weight *= local_weights[p][s];
                target = target * partition.blocks(p).len() + state_maps[p][s];
            }
            if weight != 0.0 {
                let row = &mut rows[target];
                for (x, &pr) in elementary_row.iter().enumerate() {
                    row[child_map[x]] += weight * pr;
                }
            }
            for d in (0..parents.len()).rev() {
                config[d] += 1;
                if config[d] < net.cardinality(parents[d]) {
                    break;
                }
                config[d] = 0;
            }
        }
        // summed round-off can overshoot 1 by an ulp
        rows.iter_mut().flatten().for_each(|x| *x = x.min(1.0));

        let states = partition
            .blocks(var)
            .iter()
            .map(|s| {
                if s.is_elementary() {
                    source.states[s.lo].clone()
                } else {
                    format!("{}..{}", source.states[s.lo], source.states[s.hi])
                }
            })
            .collect();
        variables.push(Variable {
            name: source.name.clone(),
            states,
            bounds: source.bounds,
        });
        cpts.push(Cpt::new(net.cpt(var).parents.clone(), rows));
    }

    // Single-state variables are legal inside an abstraction, so build the
    // network without the m >= 2 check that applies to user input.
    let network = Network::abstracted(net.name().to_string(), variables, cpts)?;
    Ok(AbstractNetwork {
        network,
        partition: partition.clone(),
        policy: policy.kind(),
        source: net.name().to_string(),
    })
}

/// Replaces each elementary evidence index by the position of its superstate.
pub fn map_evidence(evidence: &Evidence, partition: &Partition) -> Evidence {
    let mut out = Evidence::new();
    for (&var, &state) in evidence.iter() {
        let pos = partition
            .containing(var, state)
            .expect("partition covers every elementary state");
        out.insert(var, pos);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitStrategy {
    /// Most probable non-elementary superstate of every variable.
    PerNode,
    /// The single most probable non-elementary superstate overall.
    SingleGlobal,
    /// Per variable, probability discounted by how even the CPT mass inside
    /// the superstate is. Experimental.
    Skew,
}

impl SplitStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            SplitStrategy::PerNode => "per-node",
            SplitStrategy::SingleGlobal => "single",
            SplitStrategy::Skew => "skew",
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Chooses which superstates to split next. Returns `(variable, position)`
/// pairs in variable order; empty once every state is elementary.
///
/// `opn` is consulted only by [`SplitStrategy::Skew`].
pub fn select_splits(
    apn_marginals: &MarginalSet,
    partition: &Partition,
    strategy: SplitStrategy,
    opn: &Network,
) -> Vec<(usize, usize)> {
    let cf: Vec<Vec<f64>> = if strategy == SplitStrategy::Skew {
        (0..opn.len()).map(|v| cf_weights(opn, v)).collect()
    } else {
        Vec::new()
    };
    let score = |var: usize, pos: usize| -> f64 {
        let p = apn_marginals.probs[var][pos];
        match strategy {
            SplitStrategy::PerNode | SplitStrategy::SingleGlobal => p,
            SplitStrategy::Skew => p * (1.0 - normalized_entropy(&cf[var], partition.blocks(var)[pos])),
        }
    };

    // Best per variable; strict `>` keeps the smaller lo on ties.
    let per_variable: Vec<Option<(usize, f64)>> = (0..partition.len())
        .map(|var| {
            let mut best: Option<(usize, f64)> = None;
            for (pos, s) in partition.blocks(var).iter().enumerate() {
                if s.is_elementary() {
                    continue;
                }
                let sc = score(var, pos);
                if best.is_none_or(|(_, b)| sc > b) {
                    best = Some((pos, sc));
                }
            }
            best
        })
        .collect();

    match strategy {
        SplitStrategy::PerNode | SplitStrategy::Skew => per_variable
            .iter()
            .enumerate()
            .filter_map(|(var, b)| b.map(|(pos, _)| (var, pos)))
            .collect(),
        SplitStrategy::SingleGlobal => {
            let mut best: Option<(usize, usize, f64)> = None;
            for (var, b) in per_variable.iter().enumerate() {
                if let Some((pos, sc)) = *b {
                    if best.is_none_or(|(_, _, bs)| sc > bs) {
                        best = Some((var, pos, sc));
                    }
                }
            }
            best.map(|(v, p, _)| vec![(v, p)]).unwrap_or_default()
        }
    }
}

/// Entropy of the weights restricted to `s`, divided by `ln(width)`.
/// Zero mass counts as maximally even.
fn normalized_entropy(weights: &[f64], s: Superstate) -> f64 {
    let total: f64 = s.states().map(|i| weights[i]).sum();
    if !(total > 0.0) {
        return 1.0;
    }
    let h: f64 = s
        .states()
        .map(|i| weights[i] / total)
        .filter(|&q| q > 0.0)
        .map(|q| -q * q.ln())
        .sum();
    (h / (s.width() as f64).ln()).clamp(0.0, 1.0)
}
