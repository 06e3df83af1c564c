use rand::RngCore;

use super::*;
use crate::pddl::Cond;
use crate::simulator::World;

pub(super) const PDDL: &str = include_str!("../../domains/terrorist/domain.pddl");

pub(super) fn bundle(domain: DomainModel) -> DomainBundle {
    DomainBundle {
        name: "terrorist",
        domain_pddl: PDDL,
        obs_model: ObservationModel::full(&domain),
        domain,
        problem_params: [("grid-size".to_owned(), 5.0)].into_iter().collect(),
        problem_generator: generate,
        profiles: vec![
            BehaviorProfile::new(
                "regular",
                "terrorist/regular",
                &[
                    ("probability-goal-appears", 1.0),
                    ("drop-probability", 0.2),
                    ("notice-probability", 0.5),
                ],
            ),
            BehaviorProfile::new(
                "terrorist",
                "terrorist/terrorist",
                &[("probability-goal-appears", 1.0), ("drop-probability", 0.4)],
            ),
        ],
    }
}

fn generate(dom: &DomainModel, params: &Params, rng: &mut dyn RngCore) -> ProblemModel {
    let n = param(params, "grid-size", 5.0).max(2.0) as usize;
    let (cells, mut atoms) = grid("c", n, n, "adjacent");
    let start = pick(rng, &cells);
    atoms.insert(Atom::new("at", &["p1", start]));
    atoms.insert(Atom::new("holding", &["p1", "k1"]));
    let mut objects = vec![obj("p1", "person"), obj("k1", "knapsack")];
    objects.extend(cells.iter().map(|c| obj(c, "cell")));
    problem(dom, objects, State { atoms, fluents: Default::default() })
}

/// Walks to random cells. Drops the knapsack now and then; with `recovers`
/// it eventually notices and goes back for it.
pub(super) struct Walker {
    pub recovers: bool,
}

impl GoalGenerator for Walker {
    fn generate(&self, params: &Params, w: &mut World<'_>, rng: &mut dyn RngCore) {
        let (Some(person), Some(knapsack)) = (
            w.objects_of("person").first().cloned(),
            w.objects_of("knapsack").first().cloned(),
        ) else {
            return;
        };
        let idle = w.goals_met();
        let holding = Atom::new("holding", &[&person, &knapsack]);
        let is_knapsack_goal = |g: &Cond<Atom>| matches!(g, Cond::Lit { atom, .. } if *atom == holding);
        let wants_drop = w.goals.contains(&Cond::neg(holding.clone()));

        if w.state.holds(&holding) && !wants_drop && chance(rng, param(params, "drop-probability", 0.2)) {
            w.goals.retain(|g| !is_knapsack_goal(g));
            w.goals.push(Cond::neg(holding.clone()));
        } else if self.recovers
            && wants_drop
            && !w.state.holds(&holding)
            && chance(rng, param(params, "notice-probability", 0.5))
        {
            w.goals.retain(|g| !is_knapsack_goal(g));
            w.goals.push(Cond::pos(holding.clone()));
        }

        if idle && chance(rng, param(params, "probability-goal-appears", 1.0)) {
            let here = w
                .state
                .atoms
                .iter()
                .find(|a| &*a.name == "at" && a.args[0] == person)
                .map(|a| a.args[1].clone());
            let cells: Vec<Sym> = w
                .objects_of("cell")
                .into_iter()
                .filter(|c| Some(c) != here.as_ref())
                .collect();
            if cells.is_empty() {
                return;
            }
            let target = pick(rng, &cells).clone();
            w.goals.retain(|g| matches!(g, Cond::Lit { atom, .. } if &*atom.name != "at"));
            w.goals.push(Cond::pos(Atom::new("at", &[&person, &target])));
        }
    }
}
