//! Mean-field consensus map for i.i.d. uniform populations, and entropy of
//! sampling probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Agent;
use crate::simulate::Fractions;

/// A point of the mean-field dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub c: f64,
    pub x: f64,
}

fn check_unit(name: &str, c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(invalid(format!("{name} = {c} is outside [0, 1]")));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(invalid(format!("x must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// Closed-form consensus update with `sigma, phi ~ U(0, 1)` independent.
///
/// Quadratic `-2Xc^2 + (2X + 1/2)c + 1/2 - X` on `[0, 1/2]`, linear
/// `c/2 + (1 - X)/2` above. For `x >= 1/2` the lower branch is evaluated
/// with the sampling probabilities clamped to `[0, 1]`, which pins `F(0) = 0`.
pub fn meanfield_map(c: f64, x: f64) -> Result<f64> {
    check_unit("c", c)?;
    check_x(x)?;
    Ok(if c <= 0.5 {
        if x < 0.5 {
            -2.0 * x * c * c + (2.0 * x + 0.5) * c + 0.5 - x
        } else {
            let p_policy = (2.0 * x * c).min(1.0);
            let p_leader = (1.0 - 2.0 * x * (1.0 - c)).max(0.0);
            let p_stick = 1.0 - p_policy - p_leader;
            p_policy * 0.5 * c + p_stick * c + p_leader * 0.5 * (1.0 + c)
        }
    } else {
        0.5 * c + (1.0 - x) / 2.0
    })
}

/// Upper-branch expectation keeping the dependence between the leader
/// credibility and the sampling threshold:
/// `c/2 + 1/2 - X/2 - X(2c - 1)^2 / 6`. Valid for `c > 1/2`, `x <= 1/2`.
pub fn upper_branch_with_covariance(c: f64, x: f64) -> Result<f64> {
    check_unit("c", c)?;
    if !(0.0..=0.5).contains(&x) {
        return Err(invalid(format!("x = {x} is outside [0, 1/2]")));
    }
    let d = 2.0 * c - 1.0;
    Ok(0.5 * c + 0.5 - 0.5 * x - x * d * d / 6.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldRun {
    /// `c_0, c_1, ...` including the starting value.
    pub trajectory: Vec<f64>,
    /// `None` when `max_iter` ran out first.
    pub limit: Option<f64>,
}

/// Fixed-point iteration of [`meanfield_map`], stopping once `|c_k - c_{k-1}| < tol`.
pub fn iterate_meanfield(c0: f64, x: f64, tol: f64, max_iter: usize) -> Result<MeanFieldRun> {
    check_unit("c0", c0)?;
    if !(tol > 0.0) {
        return Err(invalid("tol must be positive"));
    }
    let mut trajectory = vec![c0];
    let mut c = c0;
    for _ in 0..max_iter {
        let next = meanfield_map(c, x)?;
        trajectory.push(next);
        if (next - c).abs() < tol {
            return Ok(MeanFieldRun { trajectory, limit: Some(next) });
        }
        c = next;
    }
    Ok(MeanFieldRun { trajectory, limit: None })
}

/// Probability that each agent samples the policymaker when `sigma ~ U(0, 1)`.
pub fn sampling_probabilities(agents: &[Agent], c: f64, x: f64) -> Result<Vec<f64>> {
    check_unit("c", c)?;
    check_x(x)?;
    Ok(agents
        .iter()
        .map(|a| {
            let t = if c <= 0.5 {
                2.0 * x * c
            } else {
                let phi = a.phi_leader;
                2.0 * x * (phi + c - 2.0 * phi * c)
            };
            t.clamp(0.0, 1.0)
        })
        .collect())
}

/// Expected share of each choice at prior `c` when `sigma, phi ~ U(0, 1)`.
pub fn meanfield_fractions(c: f64, x: f64) -> Result<Fractions> {
    check_unit("c", c)?;
    check_x(x)?;
    Ok(if c <= 0.5 {
        let policymaker = (2.0 * x * c).min(1.0);
        let leader = (1.0 - 2.0 * x * (1.0 - c)).max(0.0);
        Fractions { policymaker, stick: (1.0 - policymaker - leader).max(0.0), leader }
    } else {
        // E_phi min(1, a(phi)) with a linear from 2Xc at phi = 0 to 2X(1 - c) at phi = 1
        let (lo, hi) = {
            let (a0, a1) = (2.0 * x * c, 2.0 * x * (1.0 - c));
            (a0.min(a1), a0.max(a1))
        };
        let policymaker = if hi <= 1.0 {
            (lo + hi) / 2.0
        } else if lo >= 1.0 {
            1.0
        } else {
            let below = (1.0 - lo) / (hi - lo);
            below * (lo + 1.0) / 2.0 + (1.0 - below)
        };
        Fractions { policymaker, stick: 0.0, leader: 1.0 - policymaker }
    })
}

/// Entropy (natural log) of `p` after normalizing it to sum one; `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(invalid(format!("entries must be finite and non-negative, got {v}")));
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("entropy needs at least one positive entry"));
    }
    Ok(-p
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| {
            let q = v / total;
            q * q.ln()
        })
        .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn map_values() {
        assert!((meanfield_map(0.0, 0.4).unwrap() - 0.1).abs() < 1e-15);
        assert!((meanfield_map(0.5, 0.4).unwrap() - 0.55).abs() < 1e-15);
        for x in [0.1, 0.25, 0.4] {
            assert!((meanfield_map(1.0 - x, x).unwrap() - (1.0 - x)).abs() < 1e-15);
        }
        assert_eq!(meanfield_map(0.0, 0.6).unwrap(), 0.0);
        assert_eq!(meanfield_map(0.0, 0.5).unwrap(), 0.0);
        assert!(meanfield_map(1.2, 0.4).is_err());
        assert!(meanfield_map(-0.1, 0.4).is_err());
    }

    #[test]
    fn clamped_lower_branch_matches_closed_form_below_half() {
        for k in 0..=50 {
            let c = k as f64 / 100.0;
            let x = 0.3;
            let p_policy = 2.0 * x * c;
            let p_leader = 1.0 - 2.0 * x * (1.0 - c);
            let direct = p_policy * 0.5 * c + (1.0 - p_policy - p_leader) * c + p_leader * 0.5 * (1.0 + c);
            assert!((direct - meanfield_map(c, x).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn iteration_examples() {
        let run = iterate_meanfield(0.0, 0.4, 1e-12, 500).unwrap();
        let t = &run.trajectory;
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 0.1).abs() < 1e-15);
        assert!((t[2] - 0.222).abs() < 1e-15);
        assert!((t[3] - 0.3491728).abs() < 1e-12);
        assert!((run.limit.unwrap() - 0.6).abs() < 1e-9);

        let run = iterate_meanfield(0.0, 0.6, 1e-12, 500).unwrap();
        assert_eq!(run.limit, Some(0.0));
        assert_eq!(run.trajectory, vec![0.0, 0.0]);

        let run = iterate_meanfield(0.0, 0.0, 1e-12, 500).unwrap();
        assert_eq!(run.trajectory[1], 0.5);
        assert!((run.limit.unwrap() - 1.0).abs() < 1e-9);

        let run = iterate_meanfield(0.0, 0.4, 1e-12, 3).unwrap();
        assert_eq!(run.limit, None);
        assert_eq!(run.trajectory.len(), 4);
    }

    #[test]
    fn covariance_branch_fixed_point() {
        // fixed point of the exact upper branch at X = 1/4 is sqrt(3) - 1
        let c = 3f64.sqrt() - 1.0;
        assert!((upper_branch_with_covariance(c, 0.25).unwrap() - c).abs() < 1e-15);
    }

    #[test]
    fn sampling_examples() {
        let a = |phi| Agent::new(0, 0, 0.5, phi);
        let agents = [a(0.1), a(0.5), a(0.9)];
        assert!(sampling_probabilities(&agents, 0.25, 0.4)
            .unwrap()
            .iter()
            .all(|p| (p - 0.2).abs() < 1e-15));
        assert_eq!(sampling_probabilities(&agents, 0.0, 0.4).unwrap(), vec![0.0; 3]);
        let p = sampling_probabilities(&[a(0.5)], 0.75, 0.4).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(shannon_entropy(&[0.0, 0.0]).is_err());
        assert!(shannon_entropy(&[0.5, -0.1]).is_err());
        // unnormalized input is rescaled first
        assert!((shannon_entropy(&[0.2, 0.2]).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fractions_examples() {
        let f = meanfield_fractions(0.25, 0.4).unwrap();
        assert!((f.policymaker - 0.2).abs() < 1e-15);
        assert!((f.leader - 0.4).abs() < 1e-15);
        assert!((f.stick - 0.4).abs() < 1e-15);
        let f = meanfield_fractions(0.75, 0.4).unwrap();
        assert!((f.policymaker - 0.4).abs() < 1e-15);
        assert_eq!(f.stick, 0.0);
        // 2Xc = 1.05 and 2X(1 - c) = 0.35: policymaker wherever phi < 13/14
        let f = meanfield_fractions(0.75, 0.7).unwrap();
        let below = 0.65 / 0.7;
        assert!((f.policymaker - (below * 0.675 + (1.0 - below))).abs() < 1e-12);
    }

    #[test]
    fn fractions_match_a_large_sample() {
        use crate::consensus::WeightVector;
        use crate::decisions::choose_diverse;
        use crate::model::{generate_population, DistributionSpec, ModelParams};
        use crate::simulate::polarization_fractions;
        let u = DistributionSpec::IidUniformOpenUnit;
        let pop = generate_population(200_000, 1, &u, &u, 9).unwrap();
        let n = pop.len();
        let w = WeightVector::single_group(vec![1.0 / n as f64; n]).unwrap();
        for (c, x) in [(0.2, 0.3), (0.5, 0.45), (0.8, 0.25), (0.6, 0.8)] {
            let params = ModelParams::new(x, 0.0).unwrap();
            let d: Vec<_> = pop.agents.iter().map(|a| choose_diverse(a, c, &params)).collect();
            let got = polarization_fractions(&d, &w)[0];
            let want = meanfield_fractions(c, x).unwrap();
            assert!((got.policymaker - want.policymaker).abs() < 0.005, "{c} {x}: {got:?} vs {want:?}");
            assert!((got.leader - want.leader).abs() < 0.005, "{c} {x}: {got:?} vs {want:?}");
        }
    }

    proptest! {
        #[test]
        fn lower_branch_increasing(x in 0.001f64..0.4999, a in 0.0f64..0.5, b in 0.0f64..0.5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(meanfield_map(lo, x).unwrap() < meanfield_map(hi, x).unwrap());
        }

        #[test]
        fn iterates_rise_below_limit(x in 0.001f64..0.4999) {
            let run = iterate_meanfield(0.0, x, 1e-12, 10_000).unwrap();
            for w in run.trajectory.windows(2) {
                prop_assert!(w[1] >= w[0]);
                prop_assert!(w[1] <= 1.0 - x + 1e-15);
            }
        }

        #[test]
        fn upper_branch_fixed_point_is_one_minus_x(x in 0.0f64..0.5) {
            let c = 1.0 - x;
            prop_assert!((meanfield_map(c, x).unwrap() - c).abs() < 1e-15);
        }

        #[test]
        fn fractions_sum_to_one(c in 0.0f64..=1.0, x in 0.0f64..2.0) {
            let f = meanfield_fractions(c, x).unwrap();
            prop_assert!((f.policymaker + f.stick + f.leader - 1.0).abs() < 1e-12);
            prop_assert!(f.policymaker >= 0.0 && f.stick >= 0.0 && f.leader >= 0.0);
        }

        #[test]
        fn entropy_at_most_log_n(p in proptest::collection::vec(0.0f64..1.0, 1..60)) {
            prop_assume!(p.iter().any(|v| *v > 0.0));
            prop_assert!(shannon_entropy(&p).unwrap() <= (p.len() as f64).ln() + 1e-12);
        }
    }
}
