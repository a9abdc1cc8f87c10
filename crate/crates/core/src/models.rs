//! Seeded generators for the experimental model families: the commuter day
//! planner, the multistage traffic-flow chain and the three-node chain used
//! for comparing weighting policies.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{Cpt, Network, Variable};

pub const DEFAULT_SKEW: f64 = 5.0;
pub const DEFAULT_DETERMINISTIC_FRACTION: f64 = 0.5;

/// How random CPT rows are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamStyle {
    /// Independent unit draws, normalized.
    Uniform,
    /// Unit draws raised to the power `gamma`, normalized.
    Skewed(f64),
    /// With probability `p` a point mass on a random state, otherwise
    /// `Skewed(gamma)`.
    DeterministicHeavy(f64, f64),
}

impl ParamStyle {
    pub fn skewed() -> Self {
        ParamStyle::Skewed(DEFAULT_SKEW)
    }

    pub fn deterministic() -> Self {
        ParamStyle::DeterministicHeavy(DEFAULT_DETERMINISTIC_FRACTION, DEFAULT_SKEW)
    }

    fn check(&self) -> Result<()> {
        let (p, gamma) = match *self {
            ParamStyle::Uniform => (0.0, 1.0),
            ParamStyle::Skewed(g) => (0.0, g),
            ParamStyle::DeterministicHeavy(p, g) => (p, g),
        };
        if !(gamma >= 1.0) || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "style needs gamma >= 1 and p in [0, 1], got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Deterministic random source for a seed.
pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One random probability row of length `m`.
pub fn sample_cpt_row<R: Rng + ?Sized>(style: ParamStyle, m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("row length {m} < 2")));
    }
    style.check()?;
    let gamma = match style {
        ParamStyle::Uniform => 1.0,
        ParamStyle::Skewed(g) => g,
        ParamStyle::DeterministicHeavy(p, g) => {
            // p = 0 draws no coin, so the style reduces exactly to Skewed
            if p > 0.0 && rng.gen::<f64>() < p {
                let k = rng.gen_range(0..m);
                let mut row = vec![0.0; m];
                row[k] = 1.0;
                return Ok(row);
            }
            g
        }
    };
    loop {
        // gen::<f64>() is in [0, 1); an all-zero row would be unusable
        let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powf(gamma)).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return Ok(normalize(raw, total));
        }
    }
}

fn normalize(raw: Vec<f64>, total: f64) -> Vec<f64> {
    let mut row: Vec<f64> = raw.into_iter().map(|x| x / total).collect();
    // push the last few ulps of round-off onto the largest entry
    let residual = 1.0 - row.iter().sum::<f64>();
    if residual != 0.0 {
        let (imax, _) = row
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
        row[imax] = (row[imax] + residual).clamp(0.0, 1.0);
    }
    row
}

/// Gaussian bump over bin midpoints; `sd == 0` is a point mass on the
/// nearest bin (lower bin on ties).
pub fn discretized_row(mean: f64, sd: f64, bins: &[f64]) -> Vec<f64> {
    let mut row = vec![0.0; bins.len()];
    if bins.is_empty() {
        return row;
    }
    let nearest = || {
        let mut best = 0;
        for (i, &x) in bins.iter().enumerate() {
            if (x - mean).abs() < (bins[best] - mean).abs() {
                best = i;
            }
        }
        best
    };
    if sd <= 0.0 {
        row[nearest()] = 1.0;
        return row;
    }
    // shift by the peak so far tails do not all underflow to zero
    let peak = bins
        .iter()
        .map(|&x| (x - mean).powi(2))
        .fold(f64::INFINITY, f64::min);
    for (p, &x) in row.iter_mut().zip(bins) {
        *p = (-((x - mean).powi(2) - peak) / (2.0 * sd * sd)).exp();
    }
    let total: f64 = row.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        row.iter_mut().for_each(|p| *p = 0.0);
        row[nearest()] = 1.0;
        return row;
    }
    normalize(row, total)
}

/// Midpoints of `n` equal bins over `[lo, hi]`.
pub fn bin_midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let w = (hi - lo) / n as f64;
    (0..n).map(|i| lo + w * (i as f64 + 0.5)).collect()
}

/// Index of the bin of `[lo, hi]` containing `x`, clamped to the range.
pub fn bin_of(x: f64, lo: f64, hi: f64, n: usize) -> usize {
    let w = (hi - lo) / n as f64;
    let k = ((x - lo) / w).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

fn point_mass(n: usize, k: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    row[k] = 1.0;
    row
}

/// `a -> b -> c` with binary `a` and `c`; every non-root row is drawn with
/// `style`. The root prior is embedded as given.
pub fn gen_chain(n_states_b: usize, root_prior: [f64; 2], style: ParamStyle, seed: u64) -> Result<Network> {
    if n_states_b < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain needs at least 2 states for b, got {n_states_b}"
        )));
    }
    let mut rng = rng_for(seed);
    let b_rows = (0..2)
        .map(|_| sample_cpt_row(style, n_states_b, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let c_rows = (0..n_states_b)
        .map(|_| sample_cpt_row(style, 2, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Network::new(
        format!("chain-{n_states_b}-seed{seed}"),
        vec![
            Variable::with_indexed_states("a", 2),
            Variable::with_indexed_states("b", n_states_b),
            Variable::with_indexed_states("c", 2),
        ],
        vec![
            Cpt::prior(root_prior.to_vec()),
            Cpt::new(vec!["a".into()], b_rows),
            Cpt::new(vec!["b".into()], c_rows),
        ],
    )
}

/// Interval bounds used by the commuter model. Sum nodes derive their own.
#[derive(Debug, Clone, PartialEq)]
pub struct CommuterConfig {
    pub n_states: usize,
    pub style: ParamStyle,
    pub seed: u64,
    pub leave_home: (f64, f64),
    pub go_to_work: (f64, f64),
    pub work_load: (f64, f64),
    pub go_home: (f64, f64),
    pub value: (f64, f64),
}

impl CommuterConfig {
    pub fn new(n_states: usize, style: ParamStyle, seed: u64) -> Self {
        CommuterConfig {
            n_states,
            style,
            seed,
            leave_home: (6.0, 8.0),
            go_to_work: (0.25, 1.25),
            work_load: (7.0, 8.0),
            go_home: (0.25, 1.5),
            value: (0.0, 1.0),
        }
    }
}

/// Variable names of the commuter model, in declaration order.
pub const COMMUTER_VARIABLES: [&str; 12] = [
    "LH", "GW", "AW", "WL", "FW", "GH", "AH", "V1", "V2", "V3", "V4", "VAL",
];

pub fn gen_commuter(n_states: usize, style: ParamStyle, seed: u64) -> Result<Network> {
    gen_commuter_with(&CommuterConfig::new(n_states, style, seed))
}

/// Leave home, go to work, arrive at work, work load, finish work, go home,
/// arrive home, four sub-values and the overall value. Arrival and finish
/// times are deterministic sums of their parents.
pub fn gen_commuter_with(config: &CommuterConfig) -> Result<Network> {
    let n = config.n_states;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 states, got {n}")));
    }
    config.style.check()?;
    let mut rng = rng_for(config.seed);
    let add = |a: (f64, f64), b: (f64, f64)| (a.0 + b.0, a.1 + b.1);
    let lh = config.leave_home;
    let gw = config.go_to_work;
    let aw = add(lh, gw);
    let wl = config.work_load;
    let fw = add(aw, wl);
    let gh = config.go_home;
    let ah = add(fw, gh);
    let val = config.value;

    let bounds = [lh, gw, aw, wl, fw, gh, ah, val, val, val, val, val];
    let parents: [&[&str]; 12] = [
        &[],
        &["LH"],
        &["LH", "GW"],
        &["AW"],
        &["AW", "WL"],
        &["FW"],
        &["FW", "GH"],
        &["LH"],
        &["AW"],
        &["FW"],
        &["AH"],
        &["V1", "V2", "V3", "V4"],
    ];

    let mut variables = Vec::new();
    let mut cpts = Vec::new();
    for (i, name) in COMMUTER_VARIABLES.iter().enumerate() {
        let (lo, hi) = bounds[i];
        variables.push(Variable::with_indexed_states(*name, n).bounded(lo, hi));
        let parent_names: Vec<String> = parents[i].iter().map(|s| s.to_string()).collect();
        let rows = match *name {
            "AW" => sum_rows(&[lh, gw], aw, n),
            "FW" => sum_rows(&[aw, wl], fw, n),
            "AH" => sum_rows(&[fw, gh], ah, n),
            _ => {
                let count = n.pow(parents[i].len() as u32);
                (0..count)
                    .map(|_| sample_cpt_row(config.style, n, &mut rng))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        cpts.push(Cpt::new(parent_names, rows));
    }
    Network::new(
        format!("commuter-{n}-seed{}", config.seed),
        variables,
        cpts,
    )
}

/// Point-mass rows placing the child in the bin containing the sum of the
/// parents' bin midpoints.
fn sum_rows(parents: &[(f64, f64)], child: (f64, f64), n: usize) -> Vec<Vec<f64>> {
    let mids: Vec<Vec<f64>> = parents.iter().map(|&(lo, hi)| bin_midpoints(lo, hi, n)).collect();
    let count = n.pow(parents.len() as u32);
    let mut rows = Vec::with_capacity(count);
    let mut config = vec![0usize; parents.len()];
    for _ in 0..count {
        let total: f64 = config.iter().zip(&mids).map(|(&k, m)| m[k]).sum();
        rows.push(point_mass(n, bin_of(total, child.0, child.1, n)));
        for d in (0..config.len()).rev() {
            config[d] += 1;
            if config[d] < n {
                break;
            }
            config[d] = 0;
        }
    }
    rows
}

/// Multistage traffic model built on flow = speed x concentration.
///
/// Stage `s` has concentration `K{s}` and flow `Q{s}`, both depending on the
/// arrival time `T{s}`, speed `U{s}` depending on both, and the next arrival
/// time `T{s+1} = T{s} + distance / U{s}`. `sd` is a fraction of each child
/// variable's range.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub stages: usize,
    pub states_per_node: usize,
    pub sd: f64,
    pub seed: u64,
    /// Range of the first arrival time.
    pub start_time: (f64, f64),
    pub concentration: (f64, f64),
    pub speed: (f64, f64),
    pub stage_distance: f64,
    /// Period of the daily swing in concentration and flow.
    pub period: f64,
    /// Relative amplitude of that swing around the middle of the range.
    pub amplitude: f64,
}

impl TrafficConfig {
    pub fn new(stages: usize, states_per_node: usize, sd: f64, seed: u64) -> Self {
        TrafficConfig {
            stages,
            states_per_node,
            sd,
            seed,
            start_time: (0.0, 1.0),
            concentration: (10.0, 100.0),
            speed: (0.5, 2.0),
            stage_distance: 1.0,
            period: 2.0,
            amplitude: 0.4,
        }
    }

    pub fn flow(&self) -> (f64, f64) {
        (
            self.speed.0 * self.concentration.0,
            self.speed.1 * self.concentration.1,
        )
    }
}

pub fn gen_traffic(config: &TrafficConfig) -> Result<Network> {
    let n = config.states_per_node;
    if config.stages < 1 || n < 2 || !(config.sd >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "traffic model needs stages >= 1, states >= 2, sd >= 0; got {}, {}, {}",
            config.stages, n, config.sd
        )));
    }
    let mut rng = rng_for(config.seed);
    let k_range = config.concentration;
    let q_range = config.flow();
    let u_range = config.speed;
    let k_mids = bin_midpoints(k_range.0, k_range.1, n);
    let q_mids = bin_midpoints(q_range.0, q_range.1, n);
    let u_mids = bin_midpoints(u_range.0, u_range.1, n);
    let width = |r: (f64, f64)| r.1 - r.0;

    let mut variables = vec![Variable::with_indexed_states("T1", n).bounded(config.start_time.0, config.start_time.1)];
    let mut cpts = vec![Cpt::prior(sample_cpt_row(ParamStyle::Uniform, n, &mut rng)?)];
    let mut t_range = config.start_time;

    for s in 1..=config.stages {
        let k_phase = rng.gen::<f64>() * 2.0 * PI;
        let q_phase = rng.gen::<f64>() * 2.0 * PI;
        let t_mids = bin_midpoints(t_range.0, t_range.1, n);
        let (t, k, q, u, next) = (
            format!("T{s}"),
            format!("K{s}"),
            format!("Q{s}"),
            format!("U{s}"),
            format!("T{}", s + 1),
        );
        let swing = |range: (f64, f64), phase: f64, time: f64| {
            let mid = 0.5 * (range.0 + range.1);
            mid + config.amplitude * width(range) * (2.0 * PI * time / config.period + phase).sin()
        };

        let k_rows = t_mids
            .iter()
            .map(|&time| discretized_row(swing(k_range, k_phase, time), config.sd * width(k_range), &k_mids))
            .collect();
        let q_rows = t_mids
            .iter()
            .map(|&time| discretized_row(swing(q_range, q_phase, time), config.sd * width(q_range), &q_mids))
            .collect();
        let mut u_rows = Vec::with_capacity(n * n);
        for &kk in &k_mids {
            for &qq in &q_mids {
                let speed = (qq / kk).clamp(u_range.0, u_range.1);
                u_rows.push(discretized_row(speed, config.sd * width(u_range), &u_mids));
            }
        }
        let next_range = (
            t_range.0 + config.stage_distance / u_range.1,
            t_range.1 + config.stage_distance / u_range.0,
        );
        let mut t_rows = Vec::with_capacity(n * n);
        for &time in &t_mids {
            for &speed in &u_mids {
                let arrival = time + config.stage_distance / speed;
                t_rows.push(point_mass(n, bin_of(arrival, next_range.0, next_range.1, n)));
            }
        }

        variables.push(Variable::with_indexed_states(&k, n).bounded(k_range.0, k_range.1));
        cpts.push(Cpt::new(vec![t.clone()], k_rows));
        variables.push(Variable::with_indexed_states(&q, n).bounded(q_range.0, q_range.1));
        cpts.push(Cpt::new(vec![t.clone()], q_rows));
        variables.push(Variable::with_indexed_states(&u, n).bounded(u_range.0, u_range.1));
        cpts.push(Cpt::new(vec![k, q], u_rows));
        variables.push(Variable::with_indexed_states(&next, n).bounded(next_range.0, next_range.1));
        cpts.push(Cpt::new(vec![t, u], t_rows));
        t_range = next_range;
    }

    Network::new(
        format!("traffic-{}x{n}-sd{}-seed{}", config.stages, config.sd, config.seed),
        variables,
        cpts,
    )
}
