//! Shipped benchmark domains: PDDL models, problem generators, behavior
//! profiles and observation defaults.
//!
//! | bundle            | classes                  | hidden from the observer                 |
//! |-------------------|--------------------------|------------------------------------------|
//! | `terrorist`       | regular, terrorist       | nothing                                  |
//! | `service-car`     | service, private         | ownership, passenger presence            |
//! | `journey`         | active, non-active       | nothing                                  |
//! | `digital-journey` | digital, traditional     | nothing                                  |
//! | `aml-mini`        | regular, launderer       | job, crime, laundering, cash purchases   |

mod aml;
mod journey;
mod service_car;
mod terrorist;

use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pddl::{parse_domain, Atom, DomainModel, ProblemModel, State, Sym, TypedObject};
use crate::simulator::{BehaviorProfile, GoalGenerator, ObservationModel, Params};

pub const BUNDLE_NAMES: [&str; 5] = ["terrorist", "service-car", "journey", "digital-journey", "aml-mini"];

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unknown domain `{0}` (expected one of: {list})", list = BUNDLE_NAMES.join(", "))]
    Unknown(String),
    #[error("shipped domain `{0}` failed to parse: {1}")]
    Parse(&'static str, crate::pddl::PddlError),
}

pub type ProblemGenerator = fn(&DomainModel, &Params, &mut dyn RngCore) -> ProblemModel;

/// A domain together with everything needed to simulate two behavior
/// classes in it.
#[derive(Clone)]
pub struct DomainBundle {
    pub name: &'static str,
    pub domain_pddl: &'static str,
    pub domain: DomainModel,
    pub problem_params: Params,
    pub problem_generator: ProblemGenerator,
    pub profiles: Vec<BehaviorProfile>,
    pub obs_model: ObservationModel,
}

impl DomainBundle {
    pub fn generate_problem(&self, seed: u64) -> ProblemModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (self.problem_generator)(&self.domain, &self.problem_params, &mut rng)
    }

    pub fn profile(&self, label: &str) -> Option<&BehaviorProfile> {
        self.profiles.iter().find(|p| p.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.label.as_str()).collect()
    }
}

pub fn get_bundle(name: &str) -> Result<DomainBundle, DomainError> {
    let (pddl, build): (&'static str, fn(DomainModel) -> DomainBundle) = match name {
        "terrorist" => (terrorist::PDDL, terrorist::bundle),
        "service-car" => (service_car::PDDL, service_car::bundle),
        "journey" => (journey::PDDL, journey::bundle),
        "digital-journey" => (journey::PDDL, journey::digital_bundle),
        "aml-mini" => (aml::PDDL, aml::bundle),
        _ => return Err(DomainError::Unknown(name.to_owned())),
    };
    let dom = parse_domain(pddl).map_err(|e| DomainError::Parse(pddl_name(name), e))?;
    Ok(build(dom))
}

fn pddl_name(name: &str) -> &'static str {
    BUNDLE_NAMES.iter().find(|n| **n == name).copied().unwrap_or("?")
}

/// Looks up a registered goal generator by id.
pub fn generator(id: &str) -> Option<&'static dyn GoalGenerator> {
    Some(match id {
        "terrorist/regular" => &terrorist::Walker { recovers: true },
        "terrorist/terrorist" => &terrorist::Walker { recovers: false },
        "service-car/service" => &service_car::Service,
        "service-car/private" => &service_car::Private,
        "journey/customer" => &journey::Customer,
        "aml/regular" => &aml::Customer { criminal: false },
        "aml/launderer" => &aml::Customer { criminal: true },
        _ => return None,
    })
}

pub fn generator_ids() -> [&'static str; 7] {
    [
        "terrorist/regular",
        "terrorist/terrorist",
        "service-car/service",
        "service-car/private",
        "journey/customer",
        "aml/regular",
        "aml/launderer",
    ]
}

fn param(params: &Params, name: &str, default: f64) -> f64 {
    params.get(name).copied().unwrap_or(default)
}

fn chance(rng: &mut dyn RngCore, p: f64) -> bool {
    rng.gen::<f64>() < p
}

fn pick<'a, T>(rng: &mut dyn RngCore, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

/// Index drawn with probability proportional to `weights`; `None` when all
/// weights are zero.
fn weighted(rng: &mut dyn RngCore, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return Some(i);
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0)
}

fn obj(name: &str, ty: &str) -> TypedObject {
    TypedObject {
        name: Sym::from(name),
        ty: Sym::from(ty),
    }
}

fn problem(dom: &DomainModel, objects: Vec<TypedObject>, init: State) -> ProblemModel {
    ProblemModel {
        name: Sym::from(format!("{}-problem", dom.name).as_str()),
        domain_name: dom.name.clone(),
        objects,
        init,
        goals: vec![],
    }
}

/// Cells named `<prefix>-<row>-<col>` joined to their four neighbours in
/// both directions.
fn grid(prefix: &str, rows: usize, cols: usize, edge: &str) -> (Vec<Sym>, BTreeSet<Atom>) {
    let name = |r: usize, c: usize| format!("{prefix}-{r}-{c}");
    let mut cells = Vec::new();
    let mut atoms = BTreeSet::new();
    for r in 1..=rows {
        for c in 1..=cols {
            cells.push(Sym::from(name(r, c).as_str()));
            let mut link = |r2: usize, c2: usize| {
                atoms.insert(Atom::new(edge, &[&name(r, c), &name(r2, c2)]));
                atoms.insert(Atom::new(edge, &[&name(r2, c2), &name(r, c)]));
            };
            if r < rows {
                link(r + 1, c);
            }
            if c < cols {
                link(r, c + 1);
            }
        }
    }
    (cells, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{plan, PlannerConfig};

    #[test]
    fn every_bundle_loads_with_two_profiles() {
        for name in BUNDLE_NAMES {
            let b = get_bundle(name).unwrap();
            assert_eq!(b.profiles.len(), 2, "{name}");
            assert_ne!(b.profiles[0].label, b.profiles[1].label);
            for p in &b.profiles {
                assert!(generator(&p.generator).is_some(), "{}", p.generator);
                p.validate().unwrap();
            }
            let prob = b.generate_problem(1);
            assert_eq!(prob.domain_name, b.domain.name);
        }
        assert!(matches!(get_bundle("chess"), Err(DomainError::Unknown(_))));
    }

    #[test]
    fn terrorist_shape() {
        let b = get_bundle("terrorist").unwrap();
        assert_eq!(b.domain.actions.len(), 3);
        assert_eq!(b.domain.predicates.len(), 4);
        assert_eq!(b.obs_model, ObservationModel::full(&b.domain));
    }

    #[test]
    fn service_car_shape() {
        let b = get_bundle("service-car").unwrap();
        assert_eq!(b.domain.actions.len(), 7);
        assert_eq!(b.domain.predicates.len(), 7);
        let hidden: Vec<_> = b
            .domain
            .predicates
            .iter()
            .filter(|p| !b.obs_model.observable_predicates.contains(&*p.name))
            .map(|p| p.name.to_string())
            .collect();
        assert_eq!(hidden, vec!["owns", "has-passenger"]);
        assert_eq!(b.profile("service").unwrap().param("probability-goal-appears", 0.0), 0.6);
        assert_eq!(b.profile("private").unwrap().param("probability-goal-appears", 0.0), 0.2);
        let segs = b.generate_problem(0).objects.iter().filter(|o| &*o.ty == "segment").count();
        assert_eq!(segs, 12);
    }

    #[test]
    fn weighted_choice_respects_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert_eq!(weighted(&mut rng, &[0.0, 2.0, 0.0]), Some(1));
        }
        assert_eq!(weighted(&mut rng, &[0.0]), None);
    }

    #[test]
    fn grid_links_neighbours_both_ways() {
        let (cells, atoms) = grid("c", 2, 3, "adjacent");
        assert_eq!(cells.len(), 6);
        // 2 rows x 2 horizontal + 3 vertical edges, both directions
        assert_eq!(atoms.len(), 2 * (2 * 2 + 3));
    }

    #[test]
    fn generated_problems_are_planable_with_an_empty_goal() {
        for name in BUNDLE_NAMES {
            let b = get_bundle(name).unwrap();
            let p = b.generate_problem(7);
            assert!(plan(&b.domain, &p, &PlannerConfig::default()).unwrap().is_empty());
        }
    }
}
