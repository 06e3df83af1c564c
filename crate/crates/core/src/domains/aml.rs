use rand::RngCore;

use super::*;
use crate::pddl::{CmpOp, Cond, Expr};
use crate::simulator::World;

pub(super) const PDDL: &str = include_str!("../../domains/aml-mini/domain.pddl");

const OPERATIONS: [&str; 6] = ["payroll", "buy-card", "withdraw", "transfer", "deposit-cash", "buy-cash"];

fn profile(label: &str, generator: &str, weights: &[f64; 6]) -> BehaviorProfile {
    let mut p = BehaviorProfile::new(label, generator, &[("probability-goal-appears", 1.0)]);
    for (op, w) in OPERATIONS.iter().zip(weights) {
        p.params.insert(format!("weight-{op}"), *w);
    }
    p
}

pub(super) fn bundle(domain: DomainModel) -> DomainBundle {
    DomainBundle {
        name: "aml-mini",
        domain_pddl: PDDL,
        obs_model: ObservationModel::hiding(
            &domain,
            &["get-job", "commit-crime", "launder", "buy-item-cash"],
            &["employed", "criminal", "owns-item", "cash", "dirty-cash"],
        ),
        domain,
        problem_params: Params::new(),
        problem_generator: generate,
        profiles: vec![
            profile("regular", "aml/regular", &[4.0, 3.0, 2.0, 1.0, 0.0, 0.0]),
            profile("launderer", "aml/launderer", &[0.5, 0.0, 1.0, 3.0, 4.0, 2.0]),
        ],
    }
}

fn generate(dom: &DomainModel, _: &Params, rng: &mut dyn RngCore) -> ProblemModel {
    let mut init = State::new();
    for a in ["acc1", "acc2"] {
        init.fluents.insert(Atom::new("balance", &[a]), 0.0);
    }
    init.fluents.insert(Atom::new("cash", &["p1"]), 0.0);
    init.fluents.insert(Atom::new("dirty-cash", &["p1"]), 0.0);
    let mut objects = vec![obj("p1", "person"), obj("acc1", "account"), obj("acc2", "account")];
    for (i, base) in [40.0, 300.0, 800.0].into_iter().enumerate() {
        let item = format!("item{}", i + 1);
        init.fluents.insert(Atom::new("price", &[&item]), base + 10.0 * rng.gen_range(0..5) as f64);
        objects.push(obj(&item, "item"));
    }
    problem(dom, objects, init)
}

/// A bank customer. The criminal variant funds its operations with
/// laundered cash instead of a salary.
pub(super) struct Customer {
    pub criminal: bool,
}

impl GoalGenerator for Customer {
    fn generate(&self, params: &Params, w: &mut World<'_>, rng: &mut dyn RngCore) {
        let (Some(p), accounts, items) = (
            w.objects_of("person").first().cloned(),
            w.objects_of("account"),
            w.objects_of("item"),
        ) else {
            return;
        };
        if accounts.len() < 2 || items.is_empty() {
            return;
        }
        let criminal = Atom::new("criminal", &[&p]);
        if self.criminal && !w.state.holds(&criminal) {
            w.state.atoms.insert(criminal);
        }
        if !w.goals_met() || !chance(rng, param(params, "probability-goal-appears", 1.0)) {
            return;
        }

        let main = &accounts[0];
        let has_main = Atom::new("has-account", &[&p, main]);
        if !w.state.holds(&has_main) {
            let first = if self.criminal { "cash-deposited" } else { "payroll-received" };
            let flag = Atom::new(first, &[main]);
            w.state.atoms.remove(&flag);
            w.goals = vec![Cond::pos(has_main), Cond::pos(flag)];
            return;
        }

        let weights: Vec<f64> = OPERATIONS
            .iter()
            .map(|op| param(params, &format!("weight-{op}"), 0.0))
            .collect();
        let Some(i) = weighted(rng, &weights) else { return };
        let (from, to) = if self.criminal && chance(rng, 0.5) {
            (&accounts[1], &accounts[0])
        } else {
            (&accounts[0], &accounts[1])
        };
        let item = pick(rng, &items).clone();
        let mut goals = Vec::new();
        let flag = match OPERATIONS[i] {
            "payroll" => Atom::new("payroll-received", &[main]),
            "buy-card" => {
                w.state.atoms.remove(&Atom::new("owns-item", &[&p, &item]));
                Atom::new("card-purchase", &[main, &item])
            }
            "withdraw" => Atom::new("withdrawn", &[main]),
            "transfer" => Atom::new("transferred", &[from, to]),
            "deposit-cash" => Atom::new("cash-deposited", &[from]),
            _ => {
                // paid in cash: no account may lose money
                for a in &accounts {
                    let bal = Atom::new("balance", &[a]);
                    if let Some(v) = w.state.fluents.get(&bal) {
                        goals.push(Cond::Cmp(CmpOp::Ge, Expr::Fluent(bal), Expr::Num(*v)));
                    }
                }
                Atom::new("owns-item", &[&p, &item])
            }
        };
        w.state.atoms.remove(&flag);
        goals.push(Cond::pos(flag));
        w.goals = goals;
    }
}
