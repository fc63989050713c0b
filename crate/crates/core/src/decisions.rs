//! Per-agent signal choice under both information regimes.

use serde::{Deserialize, Serialize};

use crate::model::{Agent, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Choice {
    SampleLeader,
    SamplePolicymaker,
    StickToPrior,
}

impl Choice {
    pub const ALL: [Choice; 3] = [Choice::SampleLeader, Choice::SamplePolicymaker, Choice::StickToPrior];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub choice: Choice,
    /// Chosen belief `mu_hat`.
    pub chosen_belief: f64,
}

impl Decision {
    /// Probability of acting on the hate state, equal to the chosen belief.
    pub fn act_probability(&self) -> f64 {
        self.chosen_belief
    }
}

/// Chosen belief in the diverse regime: trust `phi` in the leader and
/// `1 - phi` in the policymaker, the rest on the prior `c_prev`.
pub fn diverse_belief(choice: Choice, phi: f64, c_prev: f64) -> f64 {
    match choice {
        Choice::SampleLeader => phi + (1.0 - phi) * c_prev,
        Choice::SamplePolicymaker => phi * c_prev,
        Choice::StickToPrior => c_prev,
    }
}

/// Psychological payoff `v = 2 lambda (s - 1/2)` of the sampled source.
fn psychological(choice: Choice, phi: f64) -> f64 {
    match choice {
        Choice::SampleLeader => phi,
        Choice::SamplePolicymaker => -(1.0 - phi),
        Choice::StickToPrior => 0.0,
    }
}

/// `X - 2 X mu_hat + sigma v` with the diverse-regime chosen belief.
pub fn expected_utility(choice: Choice, agent: &Agent, c_prev: f64, params: &ModelParams) -> f64 {
    let mu = diverse_belief(choice, agent.phi_leader, c_prev);
    utility(mu, choice, agent, params)
}

/// Utility when the leader's message replaces the prior outright (`mu_hat = phi`).
/// Only leader and stick are meaningful in this regime.
pub fn dictator_utility(choice: Choice, agent: &Agent, c_prev: f64, params: &ModelParams) -> f64 {
    let mu = match choice {
        Choice::SampleLeader => agent.phi_leader,
        _ => c_prev,
    };
    let choice = if choice == Choice::SampleLeader { choice } else { Choice::StickToPrior };
    utility(mu, choice, agent, params)
}

fn utility(mu: f64, choice: Choice, agent: &Agent, params: &ModelParams) -> f64 {
    let x = params.chi;
    x - 2.0 * x * mu + agent.sigma * psychological(choice, agent.phi_leader)
}

/// Only the leader's signal exists. Period zero starts from prior 0.
pub fn choose_dictator(agent: &Agent, c_prev: f64, params: &ModelParams, is_period_zero: bool) -> Decision {
    let x = params.chi;
    let (sigma, phi) = (agent.sigma, agent.phi_leader);
    let adopt = if is_period_zero {
        sigma > 2.0 * x
    } else {
        phi > c_prev && sigma > 2.0 * x * (phi - c_prev) / phi
    };
    if adopt {
        Decision { choice: Choice::SampleLeader, chosen_belief: phi }
    } else {
        let prior = if is_period_zero { 0.0 } else { c_prev };
        Decision { choice: Choice::StickToPrior, chosen_belief: prior }
    }
}

/// Leader, policymaker or prior, by the threshold rule.
pub fn choose_diverse(agent: &Agent, c_prev: f64, params: &ModelParams) -> Decision {
    let choice = diverse_choice(agent.sigma, agent.phi_leader, c_prev, params.chi);
    Decision { choice, chosen_belief: diverse_belief(choice, agent.phi_leader, c_prev) }
}

pub(crate) fn diverse_choice(sigma: f64, phi: f64, c: f64, x: f64) -> Choice {
    if c <= 0.5 {
        let gamma = 2.0 * x * c;
        let alpha = 2.0 * x * (1.0 - c);
        if sigma <= gamma {
            Choice::SamplePolicymaker
        } else if sigma <= alpha {
            Choice::StickToPrior
        } else {
            Choice::SampleLeader
        }
    } else {
        let beta = 2.0 * x * (c + phi - 2.0 * phi * c);
        if sigma <= beta {
            Choice::SamplePolicymaker
        } else {
            Choice::SampleLeader
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(x: f64) -> ModelParams {
        ModelParams::new(x, 0.0).unwrap()
    }

    fn agent(sigma: f64, phi: f64) -> Agent {
        Agent::new(0, 0, sigma, phi)
    }

    #[test]
    fn worked_example_utilities() {
        let a = agent(0.1, 0.2);
        let p = params(0.4);
        assert!((expected_utility(Choice::StickToPrior, &a, 0.0, &p) - 0.4).abs() < 1e-15);
        // 0.4 - 0.8 * 0.2 + 0.1 * 0.2
        assert!((expected_utility(Choice::SampleLeader, &a, 0.0, &p) - 0.26).abs() < 1e-15);
    }

    #[test]
    fn zero_sigma_leaves_only_instrumental_term() {
        let a = agent(0.0, 0.3);
        let p = params(0.4);
        for ch in Choice::ALL {
            let mu = diverse_belief(ch, 0.3, 0.2);
            assert_eq!(expected_utility(ch, &a, 0.2, &p), 0.4 - 0.8 * mu);
        }
    }

    #[test]
    fn dictator_examples() {
        let p = params(0.4);
        let d = choose_dictator(&agent(0.9, 0.5), 0.0, &p, true);
        assert_eq!(d, Decision { choice: Choice::SampleLeader, chosen_belief: 0.5 });
        let d = choose_dictator(&agent(0.1, 0.2), 0.0, &p, true);
        assert_eq!(d, Decision { choice: Choice::StickToPrior, chosen_belief: 0.0 });
        let d = choose_dictator(&agent(0.9, 0.8), 0.5104, &p, false);
        assert_eq!(d, Decision { choice: Choice::SampleLeader, chosen_belief: 0.8 });
        // phi below the consensus: never adopt
        let d = choose_dictator(&agent(0.99, 0.5), 0.6, &p, false);
        assert_eq!(d, Decision { choice: Choice::StickToPrior, chosen_belief: 0.6 });
    }

    #[test]
    fn diverse_examples() {
        let p = params(0.4);
        let d = choose_diverse(&agent(0.3, 0.6), 0.2, &p);
        assert_eq!(d.choice, Choice::StickToPrior);
        assert_eq!(d.chosen_belief, 0.2);
        let d = choose_diverse(&agent(0.3, 0.6), 0.6, &p);
        assert_eq!(d.choice, Choice::SamplePolicymaker);
        assert!((d.chosen_belief - 0.36).abs() < 1e-15);
        let d = choose_diverse(&agent(0.9, 0.6), 0.6, &p);
        assert_eq!(d.choice, Choice::SampleLeader);
        assert!((d.chosen_belief - 0.84).abs() < 1e-15);
        assert_eq!(d.act_probability(), d.chosen_belief);
    }

    #[test]
    fn ties_follow_weak_policymaker_strict_leader() {
        let p = params(0.25);
        // gamma = 2 * 0.25 * 0.5 = 0.25 at c = 1/2, lower branch
        assert_eq!(choose_diverse(&agent(0.25, 0.3), 0.5, &p).choice, Choice::SamplePolicymaker);
        // alpha = 0.5 * (1 - 0.25) = 0.375
        assert_eq!(choose_diverse(&agent(0.375, 0.3), 0.25, &p).choice, Choice::StickToPrior);
        assert_eq!(choose_dictator(&agent(0.5, 0.3), 0.0, &p, true).choice, Choice::StickToPrior);
    }

    proptest! {
        #[test]
        fn diverse_choice_maximizes_utility(
            sigma in 0.001f64..0.999, phi in 0.001f64..0.999,
            c in 0.0f64..=1.0, x in 0.01f64..1.0,
        ) {
            let a = agent(sigma, phi);
            let p = params(x);
            let d = choose_diverse(&a, c, &p);
            let best = expected_utility(d.choice, &a, c, &p);
            for alt in Choice::ALL {
                prop_assert!(best >= expected_utility(alt, &a, c, &p) - 1e-12);
            }
        }

        #[test]
        fn dictator_choice_maximizes_utility_when_leader_is_above_consensus(
            sigma in 0.001f64..0.999, phi in 0.001f64..0.999,
            frac in 0.0f64..1.0, x in 0.01f64..1.0, zero in any::<bool>(),
        ) {
            let a = agent(sigma, phi);
            let p = params(x);
            let c = if zero { 0.0 } else { frac * phi };
            let d = choose_dictator(&a, c, &p, zero);
            let best = dictator_utility(d.choice, &a, c, &p);
            for alt in [Choice::SampleLeader, Choice::StickToPrior] {
                prop_assert!(best >= dictator_utility(alt, &a, c, &p) - 1e-12);
            }
        }

        #[test]
        fn lower_branch_orders_policymaker_stick_leader(
            phi in 0.001f64..0.999, c in 0.0f64..=0.5, x in 0.01f64..1.0,
        ) {
            let p = params(x);
            let rank = |ch: Choice| match ch {
                Choice::SamplePolicymaker => 0,
                Choice::StickToPrior => 1,
                Choice::SampleLeader => 2,
            };
            let mut last = 0;
            for k in 1..=1000 {
                let sigma = k as f64 / 1000.0;
                let r = rank(choose_diverse(&agent(sigma, phi), c, &p).choice);
                prop_assert!(r >= last);
                last = r;
            }
        }

        #[test]
        fn above_half_nobody_sticks(
            sigma in 0.001f64..0.999, phi in 0.001f64..0.999,
            c in 0.5000001f64..=1.0, x in 0.01f64..1.0,
        ) {
            prop_assert_ne!(choose_diverse(&agent(sigma, phi), c, &params(x)).choice, Choice::StickToPrior);
        }

        #[test]
        fn dictator_never_lowers_beliefs(
            sigma in 0.001f64..0.999, phi in 0.001f64..0.999,
            c in 0.0f64..1.0, x in 0.01f64..1.0,
        ) {
            let d = choose_dictator(&agent(sigma, phi), c, &params(x), false);
            prop_assert!(d.chosen_belief >= c);
        }
    }
}
