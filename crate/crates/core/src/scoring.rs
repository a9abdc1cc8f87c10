//! Quality of an abstract answer against the exact one: superstate mass is
//! spread uniformly over its elementary states and compared with the
//! logarithmic scoring rule.

use crate::abstraction::{Partition, Superstate};
use crate::error::{Error, Result};
use crate::network::MarginalSet;

/// `a_k = a_S / |S|` for every elementary `k` in superstate `S`.
pub fn spread(superstate_dist: &[f64], blocks: &[Superstate]) -> Result<Vec<f64>> {
    if superstate_dist.len() != blocks.len() {
        return Err(Error::LengthMismatch {
            expected: blocks.len(),
            got: superstate_dist.len(),
        });
    }
    let mut out = Vec::with_capacity(blocks.last().map_or(0, |s| s.hi + 1));
    for (&mass, s) in superstate_dist.iter().zip(blocks) {
        let w = s.width() as f64;
        out.extend(std::iter::repeat_n(mass / w, s.width()));
    }
    Ok(out)
}

/// `sum_i o_i ln a_i`, with `0 ln 0 = 0`. Negative infinity when some
/// `o_i > 0` meets `a_i = 0`.
pub fn log_score(o: &[f64], a: &[f64]) -> Result<f64> {
    if o.len() != a.len() {
        return Err(Error::LengthMismatch {
            expected: o.len(),
            got: a.len(),
        });
    }
    let mut score = 0.0;
    for (&oi, &ai) in o.iter().zip(a) {
        if oi > 0.0 {
            if ai <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            score += oi * ai.ln();
        }
    }
    Ok(score)
}

/// `score(o) / score(a)`, in `[0, 1]` with 1 meaning exact.
///
/// The ratio is taken this way round because both scores are non-positive
/// and `score(a) <= score(o)`. Degenerate cases: 1 when both scores are 0,
/// 0 when only `score(o)` is 0, and 0 when `score(a)` is negative infinity.
pub fn relscore(o: &[f64], a: &[f64]) -> Result<f64> {
    let so = log_score(o, o)?;
    let sa = log_score(o, a)?;
    if sa == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if sa == 0.0 {
        // a is a point mass wherever o has support, so o is too.
        return Ok(if so == 0.0 { 1.0 } else { 0.0 });
    }
    if so == 0.0 {
        return Ok(0.0);
    }
    Ok((so / sa).clamp(0.0, 1.0))
}

/// Relative score of every variable after spreading the abstract marginals.
pub fn per_variable_relscores(
    exact: &MarginalSet,
    approx: &MarginalSet,
    partition: &Partition,
) -> Result<Vec<f64>> {
    if exact.len() != approx.len() || exact.len() != partition.len() {
        return Err(Error::LengthMismatch {
            expected: exact.len(),
            got: approx.len().min(partition.len()),
        });
    }
    (0..exact.len())
        .map(|v| {
            let a = spread(&approx.probs[v], partition.blocks(v))?;
            relscore(&exact.probs[v], &a)
        })
        .collect()
}

/// Unweighted mean of the per-variable relative scores, optionally leaving out
/// evidence variables. Returns 1 when nothing is left to score.
pub fn avg_relscore(
    exact: &MarginalSet,
    approx: &MarginalSet,
    partition: &Partition,
    exclude_evidence: bool,
) -> Result<f64> {
    let scores = per_variable_relscores(exact, approx, partition)?;
    Ok(mean_excluding(&scores, &exact.evidence, exclude_evidence))
}

pub(crate) fn mean_excluding(scores: &[f64], evidence: &[bool], exclude_evidence: bool) -> f64 {
    let kept: Vec<f64> = scores
        .iter()
        .zip(evidence)
        .filter(|(_, &e)| !(exclude_evidence && e))
        .map(|(&s, _)| s)
        .collect();
    if kept.is_empty() {
        1.0
    } else {
        kept.iter().sum::<f64>() / kept.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Cpt, Network, Variable};

    const LN_HALF: f64 = -std::f64::consts::LN_2;

    #[test]
    fn spread_divides_by_width() {
        let a = spread(&[0.8, 0.2], &[Superstate::new(0, 3), Superstate::new(4, 4)]).unwrap();
        assert_eq!(a, vec![0.2, 0.2, 0.2, 0.2, 0.2]);
        let a = spread(&[0.6, 0.4], &[Superstate::new(0, 1), Superstate::new(2, 2)]).unwrap();
        assert_eq!(a, vec![0.3, 0.3, 0.4]);
        let id = [0.1, 0.2, 0.7];
        let blocks: Vec<_> = (0..3).map(|i| Superstate::new(i, i)).collect();
        assert_eq!(spread(&id, &blocks).unwrap(), id.to_vec());
        assert!(spread(&[1.0], &blocks).is_err());
    }

    #[test]
    fn log_score_examples() {
        assert!((log_score(&[0.5, 0.5], &[0.5, 0.5]).unwrap() - LN_HALF).abs() < 1e-15);
        assert_eq!(log_score(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!((log_score(&[0.75, 0.25], &[0.5, 0.5]).unwrap() - LN_HALF).abs() < 1e-15);
        assert_eq!(
            log_score(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(log_score(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn relscore_examples() {
        assert_eq!(relscore(&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]).unwrap(), 1.0);
        let expect = (0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln()) / LN_HALF;
        let got = relscore(&[0.75, 0.25], &[0.5, 0.5]).unwrap();
        assert!((got - expect).abs() < 1e-15);
        assert!((got - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn relscore_degenerate_conventions() {
        assert_eq!(relscore(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(relscore(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(relscore(&[0.5, 0.5], &[0.0, 1.0]).unwrap(), 0.0);
    }

    fn set(probs: Vec<Vec<f64>>, evidence: Vec<bool>) -> MarginalSet {
        MarginalSet {
            names: (0..probs.len()).map(|i| format!("v{i}")).collect(),
            probs,
            evidence,
        }
    }

    #[test]
    fn average_over_variables() {
        let net = Network::new(
            "n",
            vec![
                Variable::with_indexed_states("x", 2),
                Variable::with_indexed_states("y", 2),
                Variable::with_indexed_states("z", 2),
            ],
            vec![Cpt::prior(vec![0.5, 0.5]); 3],
        )
        .unwrap();
        let p = Partition::elementary(&net);
        let exact = set(
            vec![vec![0.5, 0.5], vec![0.75, 0.25], vec![1.0, 0.0]],
            vec![false, false, true],
        );
        let approx = set(
            vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![false, false, true],
        );
        let r = per_variable_relscores(&exact, &approx, &p).unwrap();
        assert_eq!(r[0], 1.0);
        assert_eq!(r[2], 0.0);
        let avg = avg_relscore(&exact, &approx, &p, true).unwrap();
        assert!((avg - (1.0 + r[1]) / 2.0).abs() < 1e-15);
        let all = avg_relscore(&exact, &approx, &p, false).unwrap();
        assert!((all - (1.0 + r[1]) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mean_of_two() {
        assert!((mean_excluding(&[0.8, 1.0], &[false, false], true) - 0.9).abs() < 1e-15);
        assert_eq!(mean_excluding(&[1.0, 1.0, 1.0], &[false; 3], true), 1.0);
    }
}
