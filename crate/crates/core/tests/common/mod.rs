#![allow(dead_code)]

use anytime_bn::network::{Cpt, Evidence, Network, Variable};
use rand::Rng;

/// Random DAG over `2..=max_vars` variables with `2..=max_states` states each.
/// Each earlier variable becomes a parent with probability one half, capped
/// at three parents. Rows are strictly positive.
pub fn random_network<R: Rng>(rng: &mut R, max_vars: usize, max_states: usize) -> Network {
    let n = rng.gen_range(2..=max_vars);
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_states)).collect();
    let mut variables = Vec::with_capacity(n);
    let mut cpts = Vec::with_capacity(n);
    for v in 0..n {
        variables.push(Variable::with_indexed_states(format!("x{v}"), cards[v]));
        let mut parents = Vec::new();
        for p in 0..v {
            if parents.len() < 3 && rng.gen_bool(0.5) {
                parents.push(p);
            }
        }
        let configs: usize = parents.iter().map(|&p| cards[p]).product();
        let rows = (0..configs).map(|_| random_row(rng, cards[v])).collect();
        cpts.push(Cpt::new(parents.iter().map(|p| format!("x{p}")).collect(), rows));
    }
    // declaration order is shuffled so it no longer matches a topological order
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let variables = perm.iter().map(|&i| variables[i].clone()).collect();
    let cpts = perm.iter().map(|&i| cpts[i].clone()).collect();
    Network::new("random", variables, cpts).expect("generated network is valid")
}

pub fn random_row<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut row: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let residual = 1.0 - row.iter().sum::<f64>();
    row[0] += residual;
    row
}

/// Up to `max` observed variables, each at a random state.
pub fn random_evidence<R: Rng>(rng: &mut R, net: &Network, max: usize) -> Evidence {
    let mut ev = Evidence::new();
    for _ in 0..rng.gen_range(0..=max) {
        let v = rng.gen_range(0..net.len());
        ev.insert(v, rng.gen_range(0..net.cardinality(v)));
    }
    ev
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
