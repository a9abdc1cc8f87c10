//! Discrete Bayesian networks: variables with ordered elementary states,
//! conditional probability tables, evidence and marginal results.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result, Violation};

/// Rows whose sum is off by at most this much are renormalized with a warning.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Deviations at or below this are floating-point noise and left untouched,
/// which keeps validation idempotent.
const ROW_SUM_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    /// Ordered elementary state labels.
    pub states: Vec<String>,
    /// Real interval whose equal subintervals the states stand for.
    pub bounds: Option<(f64, f64)>,
}

impl Variable {
    pub fn new(name: impl Into<String>, states: Vec<String>) -> Self {
        Variable {
            name: name.into(),
            states,
            bounds: None,
        }
    }

    /// A variable with states `s0..s{n-1}`.
    pub fn with_indexed_states(name: impl Into<String>, n: usize) -> Self {
        Self::new(name, (0..n).map(|i| format!("s{i}")).collect())
    }

    pub fn bounded(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    /// Midpoint of elementary bin `i` when bounds are present.
    pub fn bin_midpoint(&self, i: usize) -> Option<f64> {
        let (lo, hi) = self.bounds?;
        let width = (hi - lo) / self.cardinality() as f64;
        Some(lo + width * (i as f64 + 0.5))
    }
}

/// Conditional probability table. Rows enumerate parent configurations with
/// the first parent varying slowest and the last fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(parents: Vec<String>, rows: Vec<Vec<f64>>) -> Self {
        Cpt { parents, rows }
    }

    pub fn prior(row: Vec<f64>) -> Self {
        Cpt {
            parents: Vec::new(),
            rows: vec![row],
        }
    }
}

/// Unvalidated network content, as read from a document or assembled by a
/// generator. `cpts[i]` belongs to `variables[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDraft {
    pub name: String,
    pub variables: Vec<Variable>,
    pub cpts: Vec<Cpt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenormalizedRow {
    pub variable: String,
    pub row: usize,
    pub sum: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    /// Topological order by name; empty when validation failed.
    pub order: Vec<String>,
    pub warnings: Vec<RenormalizedRow>,
    pub errors: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks a draft and renormalizes rows that are within tolerance of summing
/// to one. Every violation found is reported, not just the first.
pub fn validate_network(draft: &mut NetworkDraft) -> ValidationReport {
    validate_with(draft, 2)
}

fn validate_with(draft: &mut NetworkDraft, min_states: usize) -> ValidationReport {
    let mut report = ValidationReport::default();
    let errors = &mut report.errors;

    let mut index = HashMap::new();
    for (i, v) in draft.variables.iter().enumerate() {
        if index.insert(v.name.as_str(), i).is_some() {
            errors.push(Violation::DuplicateVariable {
                variable: v.name.clone(),
            });
        }
        if v.states.len() < min_states {
            errors.push(Violation::TooFewStates {
                variable: v.name.clone(),
                count: v.states.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for s in &v.states {
            if !seen.insert(s.as_str()) {
                errors.push(Violation::DuplicateState {
                    variable: v.name.clone(),
                    label: s.clone(),
                });
            }
        }
        if let Some((lo, hi)) = v.bounds {
            if !(lo < hi) {
                errors.push(Violation::InvalidBounds {
                    variable: v.name.clone(),
                    lo,
                    hi,
                });
            }
        }
    }
    if draft.cpts.len() < draft.variables.len() {
        for v in &draft.variables[draft.cpts.len()..] {
            errors.push(Violation::MissingCpt {
                variable: v.name.clone(),
            });
        }
    }

    // Parent resolution.
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); draft.variables.len()];
    let mut resolved = true;
    for (i, (v, cpt)) in draft.variables.iter().zip(&draft.cpts).enumerate() {
        let mut seen = BTreeSet::new();
        for p in &cpt.parents {
            match index.get(p.as_str()) {
                Some(&j) => parents[i].push(j),
                None => {
                    resolved = false;
                    errors.push(Violation::UnknownParent {
                        variable: v.name.clone(),
                        parent: p.clone(),
                    });
                }
            }
            if !seen.insert(p.as_str()) {
                errors.push(Violation::DuplicateParent {
                    variable: v.name.clone(),
                    parent: p.clone(),
                });
            }
        }
    }

    let order = if resolved && draft.cpts.len() == draft.variables.len() {
        match topological_order(&parents) {
            Ok(order) => Some(order),
            Err(stuck) => {
                errors.push(Violation::Cycle {
                    variables: stuck
                        .into_iter()
                        .map(|i| draft.variables[i].name.clone())
                        .collect(),
                });
                None
            }
        }
    } else {
        None
    };

    // Table dimensions and row sums.
    if resolved {
        for (i, v) in draft.variables.iter().enumerate() {
            let Some(cpt) = draft.cpts.get_mut(i) else { continue };
            let expected_rows: usize = parents[i]
                .iter()
                .map(|&p| draft.variables[p].states.len())
                .product();
            if cpt.rows.len() != expected_rows {
                errors.push(Violation::DimensionMismatch {
                    variable: v.name.clone(),
                    detail: format!("expected {expected_rows} rows, found {}", cpt.rows.len()),
                });
                continue;
            }
            for (r, row) in cpt.rows.iter_mut().enumerate() {
                if row.len() != v.states.len() {
                    errors.push(Violation::DimensionMismatch {
                        variable: v.name.clone(),
                        detail: format!(
                            "row {r} has {} entries, expected {}",
                            row.len(),
                            v.states.len()
                        ),
                    });
                    continue;
                }
                if let Some(&bad) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                    errors.push(Violation::EntryOutOfRange {
                        variable: v.name.clone(),
                        row: r,
                        value: bad,
                    });
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    errors.push(Violation::RowSum {
                        variable: v.name.clone(),
                        row: r,
                        sum,
                    });
                } else if (sum - 1.0).abs() > ROW_SUM_NOISE {
                    row.iter_mut().for_each(|x| *x /= sum);
                    report.warnings.push(RenormalizedRow {
                        variable: v.name.clone(),
                        row: r,
                        sum,
                    });
                }
            }
        }
    }

    if report.errors.is_empty() {
        if let Some(order) = order {
            report.order = order
                .into_iter()
                .map(|i| draft.variables[i].name.clone())
                .collect();
        }
    }
    report
}

/// Kahn's algorithm, preferring the earliest-declared ready variable.
/// On a cycle, returns the variables that could not be ordered.
fn topological_order(parents: &[Vec<usize>]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

/// A validated network. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    parents: Vec<Vec<usize>>,
    order: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Network {
    pub fn new(name: impl Into<String>, variables: Vec<Variable>, cpts: Vec<Cpt>) -> Result<Self> {
        Self::from_draft(NetworkDraft {
            name: name.into(),
            variables,
            cpts,
        })
        .map(|(net, _)| net)
    }

    /// Validates the draft and returns the network together with the report.
    pub fn from_draft(draft: NetworkDraft) -> Result<(Self, ValidationReport)> {
        Self::build(draft, 2)
    }

    /// Like [`Network::new`] but admits single-state variables, which arise
    /// when a whole state space is collapsed into one superstate.
    pub(crate) fn abstracted(
        name: String,
        variables: Vec<Variable>,
        cpts: Vec<Cpt>,
    ) -> Result<Self> {
        Self::build(
            NetworkDraft {
                name,
                variables,
                cpts,
            },
            1,
        )
        .map(|(net, _)| net)
    }

    fn build(mut draft: NetworkDraft, min_states: usize) -> Result<(Self, ValidationReport)> {
        let report = validate_with(&mut draft, min_states);
        if !report.is_valid() {
            return Err(Error::InvalidNetwork(report.errors));
        }
        let index: HashMap<String, usize> = draft
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let parents = draft
            .cpts
            .iter()
            .map(|c| c.parents.iter().map(|p| index[p]).collect())
            .collect();
        let order = report.order.iter().map(|n| index[n]).collect();
        let net = Network {
            name: draft.name,
            variables: draft.variables,
            cpts: draft.cpts,
            parents,
            order,
            index,
        };
        Ok((net, report))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, i: usize) -> &Variable {
        &self.variables[i]
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    /// Parent indices of variable `i`, in CPT order.
    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require_index(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn cardinality(&self, i: usize) -> usize {
        self.variables[i].states.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::cardinality).collect()
    }

    /// Number of elementary parent configurations of variable `i`.
    pub fn parent_configurations(&self, i: usize) -> usize {
        self.parents[i].iter().map(|&p| self.cardinality(p)).product()
    }

    /// `Pr(state | parent configuration)` where `parent_states` is in CPT order.
    pub fn probability(&self, i: usize, state: usize, parent_states: &[usize]) -> f64 {
        let row = row_index(
            parent_states,
            self.parents[i].iter().map(|&p| self.cardinality(p)),
        );
        self.cpts[i].rows[row][state]
    }

    /// Product of all cardinalities, as a float so huge nets do not overflow.
    pub fn joint_size(&self) -> f64 {
        self.variables
            .iter()
            .map(|v| v.cardinality() as f64)
            .product()
    }

    /// Returns a draft copy that can be edited and revalidated.
    pub fn to_draft(&self) -> NetworkDraft {
        NetworkDraft {
            name: self.name.clone(),
            variables: self.variables.clone(),
            cpts: self.cpts.clone(),
        }
    }

    pub fn check_evidence(&self, evidence: &Evidence) -> Result<()> {
        for (&var, &state) in evidence.iter() {
            if var >= self.len() {
                return Err(Error::UnknownVariable(format!("#{var}")));
            }
            let cardinality = self.cardinality(var);
            if state >= cardinality {
                return Err(Error::EvidenceOutOfRange {
                    variable: self.variables[var].name.clone(),
                    index: state,
                    cardinality,
                });
            }
        }
        Ok(())
    }
}

/// Mixed-radix index with the first digit most significant.
pub(crate) fn row_index(digits: &[usize], radices: impl IntoIterator<Item = usize>) -> usize {
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, r)| acc * r + d)
}

/// Observed elementary (or, inside an abstract network, superstate) indices
/// keyed by variable position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<usize, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: usize, state: usize) -> Self {
        self.assignments.insert(var, state);
        self
    }

    pub fn insert(&mut self, var: usize, state: usize) -> Option<usize> {
        self.assignments.insert(var, state)
    }

    /// Builds evidence from `(variable name, state index)` pairs.
    pub fn from_indices<'a>(
        net: &Network,
        pairs: impl IntoIterator<Item = (&'a str, usize)>,
    ) -> Result<Self> {
        let mut ev = Evidence::new();
        for (name, state) in pairs {
            let var = net.require_index(name)?;
            ev.insert(var, state);
        }
        net.check_evidence(&ev)?;
        Ok(ev)
    }

    /// Builds evidence from `(variable name, state label)` pairs.
    pub fn from_labels<'a>(
        net: &Network,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut ev = Evidence::new();
        for (name, label) in pairs {
            let var = net.require_index(name)?;
            let state = net.variable(var).state_index(label).ok_or_else(|| {
                Error::UnknownState {
                    variable: name.to_string(),
                    label: label.to_string(),
                }
            })?;
            ev.insert(var, state);
        }
        Ok(ev)
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.assignments.contains_key(&var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &usize)> {
        self.assignments.iter()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Per-variable conditional marginals given some evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    pub names: Vec<String>,
    pub probs: Vec<Vec<f64>>,
    pub evidence: Vec<bool>,
}

impl MarginalSet {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.probs[i].as_slice())
    }

    /// Largest absolute per-entry difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &MarginalSet) -> Option<f64> {
        if self.probs.len() != other.probs.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.probs.iter().zip(&other.probs) {
            if a.len() != b.len() {
                return None;
            }
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).abs());
            }
        }
        Some(worst)
    }
}
