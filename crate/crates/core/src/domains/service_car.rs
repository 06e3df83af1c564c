use rand::RngCore;

use super::*;
use crate::pddl::Cond;
use crate::simulator::World;

pub(super) const PDDL: &str = include_str!("../../domains/service-car/domain.pddl");

pub(super) fn bundle(domain: DomainModel) -> DomainBundle {
    let mut obs_model = ObservationModel::hiding(&domain, &[], &["owns", "has-passenger"]);
    for (schema, alias) in [
        ("board-service", "board"),
        ("board-private", "board"),
        ("debark-service", "debark"),
        ("debark-private", "debark"),
    ] {
        obs_model.aliases.insert(schema.into(), alias.into());
    }
    DomainBundle {
        name: "service-car",
        domain_pddl: PDDL,
        obs_model,
        domain,
        problem_params: [("rows".to_owned(), 2.0), ("cols".to_owned(), 6.0)].into_iter().collect(),
        problem_generator: generate,
        profiles: vec![
            BehaviorProfile::new("service", "service-car/service", &[("probability-goal-appears", 0.6)]),
            BehaviorProfile::new("private", "service-car/private", &[("probability-goal-appears", 0.2)]),
        ],
    }
}

fn generate(dom: &DomainModel, params: &Params, rng: &mut dyn RngCore) -> ProblemModel {
    let rows = param(params, "rows", 3.0).max(1.0) as usize;
    let cols = param(params, "cols", 4.0).max(2.0) as usize;
    let (segments, mut atoms) = grid("s", rows, cols, "connected");
    atoms.insert(Atom::new("vehicle-at", &["car1", pick(rng, &segments)]));
    atoms.insert(Atom::new("stopped", &["car1"]));
    atoms.insert(Atom::new("person-at", &["person1", pick(rng, &segments)]));
    let mut objects = vec![obj("car1", "vehicle"), obj("person1", "person")];
    objects.extend(segments.iter().map(|s| obj(s, "segment")));
    problem(dom, objects, State { atoms, fluents: Default::default() })
}

fn location(w: &World<'_>, person: &Sym) -> Option<Sym> {
    w.state
        .atoms
        .iter()
        .find(|a| &*a.name == "person-at" && a.args[0] == *person)
        .map(|a| a.args[1].clone())
}

/// A goal to bring `person` from where they stand to another segment.
fn ride(w: &mut World<'_>, person: &Sym, rng: &mut dyn RngCore) {
    let Some(from) = location(w, person) else {
        return;
    };
    let targets: Vec<Sym> = w.objects_of("segment").into_iter().filter(|s| *s != from).collect();
    if targets.is_empty() {
        return;
    }
    let to = pick(rng, &targets).clone();
    w.goals = vec![Cond::pos(Atom::new("person-at", &[person, &to]))];
}

/// Picks up clients who appear around the city, one at a time.
pub(super) struct Service;

impl GoalGenerator for Service {
    fn generate(&self, params: &Params, w: &mut World<'_>, rng: &mut dyn RngCore) {
        if !w.goals_met() || !chance(rng, param(params, "probability-goal-appears", 0.6)) {
            return;
        }
        let segments = w.objects_of("segment");
        let at = pick(rng, &segments).clone();
        let client = w.fresh_object("client", "person");
        w.state.atoms.insert(Atom::new("person-at", &[&client, &at]));
        ride(w, &client, rng);
    }
}

/// Drives its owner around now and then.
pub(super) struct Private;

impl GoalGenerator for Private {
    fn generate(&self, params: &Params, w: &mut World<'_>, rng: &mut dyn RngCore) {
        let (Some(owner), Some(car)) = (
            w.objects_of("person").first().cloned(),
            w.objects_of("vehicle").first().cloned(),
        ) else {
            return;
        };
        let owns = Atom::new("owns", &[&owner, &car]);
        if !w.state.holds(&owns) {
            w.state.atoms.insert(owns);
        }
        if w.goals_met() && chance(rng, param(params, "probability-goal-appears", 0.2)) {
            ride(w, &owner, rng);
        }
    }
}
