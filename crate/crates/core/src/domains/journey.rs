use rand::RngCore;

use super::*;
use crate::pddl::Cond;
use crate::simulator::World;

pub(super) const PDDL: &str = include_str!("../../domains/journey/domain.pddl");

/// Operations a customer may need. Profile parameter `weight-<op>` sets the
/// relative chance of each.
const OPERATIONS: [&str; 10] = [
    "check-balance",
    "view-statement",
    "update-address",
    "change-password",
    "set-alert",
    "pay-bill",
    "quick-pay",
    "transfer",
    "deposit-check",
    "redeem-points",
];

fn profile(label: &str, pga: f64, weights: &[(&str, f64)]) -> BehaviorProfile {
    let mut p = BehaviorProfile::new(label, "journey/customer", &[("probability-goal-appears", pga)]);
    for (op, v) in weights {
        p.params.insert(format!("weight-{op}"), *v);
    }
    p
}

pub(super) fn bundle(domain: DomainModel) -> DomainBundle {
    // one usage mix for both classes; only how often they log in differs
    let usual = [
        ("check-balance", 6.0),
        ("view-statement", 2.0),
        ("quick-pay", 2.0),
        ("transfer", 2.0),
        ("pay-bill", 1.0),
        ("set-alert", 1.0),
        ("deposit-check", 1.0),
        ("redeem-points", 1.0),
        ("update-address", 0.5),
        ("change-password", 0.5),
    ];
    DomainBundle {
        name: "journey",
        domain_pddl: PDDL,
        obs_model: ObservationModel::full(&domain),
        domain,
        problem_params: Params::new(),
        problem_generator: generate,
        profiles: vec![profile("active", 0.8, &usual), profile("non-active", 0.01, &usual)],
    }
}

pub(super) fn digital_bundle(domain: DomainModel) -> DomainBundle {
    let digital = [
        ("quick-pay", 5.0),
        ("transfer", 4.0),
        ("set-alert", 3.0),
        ("check-balance", 3.0),
        ("redeem-points", 2.0),
        ("change-password", 1.0),
        ("pay-bill", 0.5),
        ("view-statement", 0.5),
        ("deposit-check", 0.5),
        ("update-address", 0.5),
    ];
    let traditional = [
        ("pay-bill", 5.0),
        ("deposit-check", 4.0),
        ("view-statement", 3.0),
        ("update-address", 3.0),
        ("check-balance", 2.0),
        ("change-password", 1.0),
        ("quick-pay", 0.5),
        ("transfer", 0.5),
        ("set-alert", 0.5),
    ];
    DomainBundle {
        name: "digital-journey",
        domain_pddl: PDDL,
        obs_model: ObservationModel::full(&domain),
        domain,
        problem_params: Params::new(),
        problem_generator: generate,
        profiles: vec![profile("digital", 0.8, &digital), profile("traditional", 0.8, &traditional)],
    }
}

fn generate(dom: &DomainModel, _: &Params, rng: &mut dyn RngCore) -> ProblemModel {
    let mut init = State::new();
    init.atoms.insert(Atom::new("holds", &["cust1", "acc1"]));
    init.atoms.insert(Atom::new("holds", &["cust1", "acc2"]));
    init.atoms.insert(Atom::new("device-trusted", &["cust1"]));
    init.fluents.insert(Atom::new("balance", &["acc1"]), 400.0 + 50.0 * rng.gen_range(0..8) as f64);
    init.fluents.insert(Atom::new("balance", &["acc2"]), 100.0 + 50.0 * rng.gen_range(0..4) as f64);
    init.fluents.insert(Atom::new("points", &["cust1"]), 0.0);
    problem(
        dom,
        vec![obj("cust1", "customer"), obj("acc1", "account"), obj("acc2", "account")],
        init,
    )
}

/// Logs in from time to time to take care of one or two needs, then logs
/// out. How often and which needs depend on the profile parameters.
///
/// The app forgets a device after `device-trust-steps` idle steps (default
/// 10); the next session then starts by confirming a one-time code.
pub(super) struct Customer;

impl GoalGenerator for Customer {
    fn generate(&self, params: &Params, w: &mut World<'_>, rng: &mut dyn RngCore) {
        let (Some(c), accounts) = (w.objects_of("customer").first().cloned(), w.objects_of("account")) else {
            return;
        };
        let pga = param(params, "probability-goal-appears", 1.0);
        let trust_steps = param(params, "device-trust-steps", 10.0);
        if !w.memory.contains_key("idle-steps") {
            // time since the last session, drawn from the customer's own usage rate
            let mut before = 0.0;
            while before < trust_steps && !chance(rng, pga) {
                before += 1.0;
            }
            w.memory.insert("idle-steps".into(), before - 1.0);
        }
        let idle = w.goals_met() && !w.state.holds(&Atom::new("logged-in", &[&c]));
        let away = w.memory.get_mut("idle-steps").expect("initialized above");
        *away = if idle { *away + 1.0 } else { 0.0 };
        if *away >= trust_steps {
            w.state.atoms.remove(&Atom::new("device-trusted", &[&c]));
        }
        if !w.goals_met() || !chance(rng, param(params, "probability-goal-appears", 1.0)) {
            return;
        }
        if accounts.len() < 2 {
            return;
        }
        let points = w.state.fluents.get(&Atom::new("points", &[&c])).copied().unwrap_or(0.0);
        let mut weights: Vec<f64> = OPERATIONS
            .iter()
            .map(|op| param(params, &format!("weight-{op}"), 0.0))
            .collect();
        if points < 3.0 {
            weights[9] = 0.0;
        }
        let wanted = if chance(rng, 0.5) { 1 } else { 2 };
        let mut needs = Vec::new();
        for _ in 0..wanted {
            let Some(i) = super::weighted(rng, &weights) else { break };
            weights[i] = 0.0;
            // the first account is the customer's main one
            let a = if chance(rng, 0.75) { accounts[0].clone() } else { pick(rng, &accounts[1..]).clone() };
            let other = accounts.iter().find(|x| **x != a).cloned().unwrap_or_else(|| a.clone());
            let flag = match OPERATIONS[i] {
                "check-balance" => Atom::new("balance-checked", &[&a]),
                "view-statement" => Atom::new("statement-viewed", &[&a]),
                "update-address" => Atom::new("address-updated", &[&c]),
                "change-password" => Atom::new("password-changed", &[&c]),
                "set-alert" => Atom::new("alert-set", &[&a]),
                "pay-bill" => Atom::new("bill-paid", &[&a]),
                "quick-pay" => Atom::new("quick-paid", &[&a]),
                "transfer" => Atom::new("transferred", &[&a, &other]),
                "deposit-check" => Atom::new("check-deposited", &[&a]),
                _ => Atom::new("points-redeemed", &[&c]),
            };
            w.state.atoms.remove(&flag);
            needs.push(Cond::pos(flag));
        }
        if needs.is_empty() {
            return;
        }
        needs.push(Cond::neg(Atom::new("logged-in", &[&c])));
        w.goals = needs;
    }
}
