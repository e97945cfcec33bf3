#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use dor_core::capacity::{pair_count, Capacity2Additive};
use dor_core::fit::{Family, FitItem, FitRequest};
use dor_core::instance::{
    CriterionFile, DiscountSpec, FacilityFile, InstanceFile, LocationFile, PairFile, PlacementRef, PrecedenceFile,
    SynergyFile,
};
use dor_core::objective::{Normalization, ObjectiveSpec};
use dor_core::plan::{Assignment, Plan};
use dor_core::spacetime::{check_feasible, evaluate_plan, ScenarioSpec};
use dor_core::{Cents, PlanningInstance};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn ecovillage() -> PlanningInstance {
    PlanningInstance::from_json(&std::fs::read_to_string(fixture("ecovillage.json")).unwrap()).unwrap()
}

pub fn designed_plans() -> BTreeMap<String, Plan> {
    serde_json::from_str(&std::fs::read_to_string(fixture("ecovillage-iteration1.json")).unwrap()).unwrap()
}

pub const DIDACTIC: [(&str, [f64; 3], f64); 6] = [
    ("P1", [80.0, 50.0, 75.0], 51.0),
    ("P2", [60.0, 60.0, 60.0], 35.0),
    ("P3", [60.0, 80.0, 50.0], 37.0),
    ("P4", [70.0, 60.0, 70.0], 46.0),
    ("P5", [50.0, 70.0, 60.0], 31.0),
    ("P6", [90.0, 50.0, 40.0], 44.0),
];

pub fn didactic_request(family: Family) -> FitRequest {
    let items = DIDACTIC
        .iter()
        .map(|(id, g, _)| FitItem {
            id: id.to_string(),
            contributions: g.to_vec(),
            flags: vec![],
        })
        .collect();
    let scores = DIDACTIC.iter().map(|(id, _, nu)| (id.to_string(), *nu)).collect();
    let mut req = FitRequest::new(family, items, scores);
    if family == Family::Piecewise {
        req.breakpoints = vec![vec![0.0, 50.0, 75.0, 100.0]; 3];
        req.total = 100.0;
    }
    req
}

/// `min_{k ≥ 0} Σ |u_i − k ν_i|`: a weighted median of `u_i / ν_i`.
pub fn best_multiplicative_error(u: &[f64], nu: &[f64]) -> f64 {
    let mut candidates: Vec<f64> = u.iter().zip(nu).filter(|(_, &n)| n > 0.0).map(|(u, n)| (u / n).max(0.0)).collect();
    candidates.push(0.0);
    candidates
        .iter()
        .map(|&k| u.iter().zip(nu).map(|(u, n)| (u - k * n).abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// `min_{k ≥ 0, k0} Σ |u_i − k ν_i − k0|`: an optimal L1 line passes
/// through two points, or is flat through one.
pub fn best_affine_error(u: &[f64], nu: &[f64]) -> f64 {
    let err = |k: f64, k0: f64| u.iter().zip(nu).map(|(u, n)| (u - k * n - k0).abs()).sum::<f64>();
    let mut best = f64::INFINITY;
    for i in 0..u.len() {
        best = best.min(err(0.0, u[i]));
        for j in 0..u.len() {
            if nu[i] != nu[j] {
                let k = (u[j] - u[i]) / (nu[j] - nu[i]);
                if k >= 0.0 {
                    best = best.min(err(k, u[i] - k * nu[i]));
                }
            }
        }
    }
    best
}

/// Coarse-to-fine search over the weight simplex of the didactic weighted
/// sum, with the scaling solved exactly for each weight vector.
pub fn ws_grid_oracle(affine: bool) -> f64 {
    let nu: Vec<f64> = DIDACTIC.iter().map(|d| d.2).collect();
    let error = |w1: f64, w2: f64| {
        let w3 = 1.0 - w1 - w2;
        let u: Vec<f64> = DIDACTIC.iter().map(|d| w1 * d.1[0] + w2 * d.1[1] + w3 * d.1[2]).collect();
        if affine {
            best_affine_error(&u, &nu)
        } else {
            best_multiplicative_error(&u, &nu)
        }
    };
    let mut seeds = Vec::new();
    let n = 100;
    for a in 0..=n {
        for b in 0..=n - a {
            let (w1, w2) = (a as f64 / n as f64, b as f64 / n as f64);
            seeds.push((error(w1, w2), w1, w2));
        }
    }
    seeds.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = f64::INFINITY;
    let directions: Vec<(f64, f64)> = (0..24)
        .map(|a| {
            let t = a as f64 * std::f64::consts::PI / 12.0;
            (t.cos(), t.sin())
        })
        .collect();
    for &(_, mut w1, mut w2) in seeds.iter().take(40) {
        let mut step = 1.0 / n as f64;
        let mut e = error(w1, w2);
        while step > 1e-9 {
            let mut improved = true;
            while improved {
                improved = false;
                for &(d1, d2) in &directions {
                    let (c1, c2) = (w1 + d1 * step, w2 + d2 * step);
                    if c1 < 0.0 || c2 < 0.0 || c1 + c2 > 1.0 {
                        continue;
                    }
                    let ce = error(c1, c2);
                    if ce < e - 1e-15 {
                        (w1, w2, e) = (c1, c2, ce);
                        improved = true;
                    }
                }
            }
            step /= 4.0;
        }
        best = best.min(e);
    }
    best
}

/// Reference marginal values for the didactic piecewise fit.
pub const REFERENCE_MARGINALS: [[f64; 4]; 3] = [
    [0.0, 31.48, 47.22, 64.81],
    [0.0, 0.0, 0.10, 0.20],
    [0.0, 0.0, 14.81, 14.81],
];

/// The didactic Choquet reference capacity: `w1 .52, w2 .08, w3 .10, w23 .31`.
pub fn reference_capacity() -> Capacity2Additive {
    Capacity2Additive {
        singletons: vec![0.52, 0.08, 0.10],
        pairs: vec![0.0, 0.0, 0.31],
        bonus: vec![],
    }
}

/// Random capacity with total 1 that is monotone, with negative pair
/// weights mixed in.
pub fn random_capacity(rng: &mut impl Rng, m: usize, bonus: bool) -> Capacity2Additive {
    loop {
        let singletons: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let pairs: Vec<f64> = (0..pair_count(m)).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let b = if bonus { vec![rng.gen_range(0.0..0.3)] } else { vec![] };
        let mut cap = Capacity2Additive {
            singletons,
            pairs,
            bonus: b,
        };
        let total = cap.total();
        if total <= 0.1 {
            continue;
        }
        for x in cap.singletons.iter_mut().chain(cap.pairs.iter_mut()).chain(cap.bonus.iter_mut()) {
            *x /= total;
        }
        if cap.validate(1e-9).is_ok() {
            return cap;
        }
    }
}

pub struct RandomCase {
    pub instance: PlanningInstance,
    pub scenario: ScenarioSpec,
    pub binaries: usize,
}

/// Small instance with exclusions, precedences, synergies and a weighted
/// sum or Choquet objective; at most 20 assignment binaries.
pub fn random_case(rng: &mut impl Rng, index: usize) -> RandomCase {
    let m = rng.gen_range(2..=3);
    let periods = rng.gen_range(2..=3);
    let mut nf;
    let mut locs;
    loop {
        nf = rng.gen_range(2..=5);
        locs = (0..nf).map(|_| rng.gen_range(1..=2)).collect::<Vec<usize>>();
        if locs.iter().sum::<usize>() * periods <= 20 {
            break;
        }
    }
    let criteria: Vec<String> = (0..m).map(|j| format!("c{j}")).collect();
    let facilities: Vec<FacilityFile> = (0..nf)
        .map(|i| FacilityFile {
            id: format!("F{i}"),
            label: String::new(),
            locations: (0..locs[i])
                .map(|l| LocationFile {
                    id: format!("l{}", l + 1),
                    label: String::new(),
                    cost: Cents(rng.gen_range(1..=60) * 100_000),
                    evaluations: criteria.iter().map(|c| (c.clone(), rng.gen_range(0..=100) as f64)).collect(),
                    buildings: vec![["A", "B", "C"][rng.gen_range(0..3)].to_string()],
                })
                .collect(),
        })
        .collect();
    let pick = |rng: &mut dyn rand::RngCore| {
        let i = rng.gen_range(0..nf);
        PlacementRef {
            facility: format!("F{i}"),
            location: format!("l{}", rng.gen_range(0..locs[i]) + 1),
        }
    };
    let mut exclusions = Vec::new();
    let mut synergies = Vec::new();
    let mut precedences = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let (a, b) = (pick(rng), pick(rng));
        if a.facility != b.facility {
            exclusions.push(PairFile { a, b });
        }
    }
    for k in 0..rng.gen_range(0..=2) {
        let (a, b) = (pick(rng), pick(rng));
        if a.facility != b.facility {
            synergies.push(SynergyFile {
                id: format!("s{k}"),
                a,
                b,
                boost: rng.gen_range(0.05..0.5),
            });
        }
    }
    if rng.gen_bool(0.4) {
        let mut ids: Vec<usize> = (0..nf).collect();
        ids.shuffle(rng);
        precedences.push(PrecedenceFile {
            earlier: format!("F{}", ids[0]),
            later: format!("F{}", ids[1]),
        });
    }
    let budget: Vec<Cents> = (0..periods).map(|_| Cents(rng.gen_range(0..=80) * 100_000)).collect();
    let discount = if rng.gen_bool(0.5) {
        DiscountSpec::Base { base: 1.1 }
    } else {
        let mut v = vec![1.0];
        for _ in 1..periods {
            let last = *v.last().unwrap();
            v.push(last * rng.gen_range(0.5..1.0));
        }
        DiscountSpec::Factors(v)
    };
    let normalization = rng.gen_bool(0.5).then(|| Normalization {
        lower: (0..m).map(|_| rng.gen_range(0.0..50.0)).collect(),
        upper: (0..m).map(|_| rng.gen_range(100.0..400.0)).collect(),
    });
    let objective = if index % 3 == 0 {
        let mut w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        ObjectiveSpec::WeightedSum {
            weights: w,
            normalization,
        }
    } else {
        let bonus = rng.gen_bool(0.5);
        let mut cap = random_capacity(rng, m, bonus);
        // Make sure negative pair weights are exercised.
        if index % 3 == 1 && cap.pairs.iter().all(|&p| p >= 0.0) {
            cap = loop {
                let bonus = !cap.bonus.is_empty();
                let c = random_capacity(rng, m, bonus);
                if c.pairs.iter().any(|&p| p < 0.0) {
                    break c;
                }
            };
        }
        ObjectiveSpec::Choquet {
            capacity: cap,
            normalization,
        }
    };
    let file = InstanceFile {
        name: format!("random{index}"),
        criteria: criteria
            .iter()
            .map(|c| CriterionFile {
                id: c.clone(),
                label: String::new(),
            })
            .collect(),
        periods,
        discount,
        budgets: BTreeMap::from([("B".to_string(), budget)]),
        facilities,
        exclusions,
        precedences,
        synergies,
        objectives: BTreeMap::from([("U".to_string(), objective)]),
    };
    let instance = PlanningInstance::try_from(file).expect("random instance is valid");
    let binaries = locs.iter().sum::<usize>() * periods;
    let scenario = ScenarioSpec::new(
        format!("random{index}"),
        "B",
        dor_core::spacetime::ObjectiveRef::Named("U".into()),
        true,
    );
    RandomCase {
        instance,
        scenario,
        binaries,
    }
}

/// Best objective over every plan that activates each facility at most
/// once, by exhaustive enumeration.
pub fn enumerate_best(inst: &PlanningInstance, sc: &ScenarioSpec) -> Option<(f64, Plan)> {
    let options: Vec<Vec<Option<Assignment>>> = inst
        .facilities
        .iter()
        .map(|f| {
            let mut v = vec![None];
            for l in &f.locations {
                for t in 0..inst.periods() {
                    v.push(Some(Assignment::new(f.id.clone(), l.id.clone(), t)));
                }
            }
            v
        })
        .collect();
    let mut best: Option<(f64, Plan)> = None;
    let mut idx = vec![0usize; options.len()];
    loop {
        let plan = Plan::manual(
            idx.iter()
                .zip(&options)
                .filter_map(|(&i, o)| o[i].clone())
                .collect(),
        );
        if check_feasible(inst, sc, &plan).unwrap().is_empty() {
            let v = evaluate_plan(inst, sc, &plan).unwrap();
            if best.as_ref().map_or(true, |(b, _)| v > *b) {
                best = Some((v, plan));
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The ecovillage instance cut down to five facilities and two periods.
pub fn ecovillage_truncation() -> PlanningInstance {
    let mut file = ecovillage().to_file();
    let keep = ["KIT-WWO", "REF-WWO", "KIT-GUE", "DIN-GUE", "TAI-LAB"];
    file.facilities.retain(|f| keep.contains(&f.id.as_str()));
    file.periods = 2;
    for b in file.budgets.values_mut() {
        b.truncate(2);
    }
    let on = |r: &PlacementRef| keep.contains(&r.facility.as_str());
    file.exclusions.retain(|e| on(&e.a) && on(&e.b));
    file.synergies.retain(|s| on(&s.a) && on(&s.b));
    file.precedences.clear();
    PlanningInstance::try_from(file).unwrap()
}

// ---------------------------------------------------------------------------
// Case study session

use dor_core::fit::NormalizationMode;
use dor_core::instance::PlacementRef as Ref;
use dor_core::session::{FitSpec, MergeDirective, NamedPlan, RankInput, Session};
use dor_core::spacetime::{ExtraConstraint, ObjectiveRef};
use dor_core::CardRanking;

pub fn card_ranking(classes: &[&str], blanks: &[u32], zero_gap: u32) -> CardRanking {
    CardRanking {
        classes: classes.iter().map(|c| vec![c.to_string()]).collect(),
        blanks: blanks.to_vec(),
        zero_gap,
    }
}

/// B1/B2 × w1..w5 × synergy on/off.
pub fn initial_grid() -> Vec<ScenarioSpec> {
    let mut grid = Vec::new();
    for b in ["B1", "B2"] {
        for w in 1..=5 {
            for syn in [true, false] {
                let id = format!("{b}-w{w}-{}", if syn { "syn" } else { "nosyn" });
                grid.push(ScenarioSpec::new(id, b, ObjectiveRef::Named(format!("w{w}")), syn));
            }
        }
    }
    grid
}

pub fn import_designed_plans(s: &mut Session) -> usize {
    let plans = designed_plans().into_iter().map(|(id, plan)| NamedPlan { id, plan }).collect();
    s.import(plans).unwrap().number
}

pub fn rank_designed_plans(s: &mut Session, iteration: usize) {
    let input = |name: &str, r| RankInput {
        name: name.into(),
        ranking: Some(r),
        merge: None,
    };
    s.rank(iteration, input("R50", card_ranking(&["x8", "x7", "x5", "x6"], &[3, 2, 5], 2)))
        .unwrap();
    s.rank(iteration, input("R100", card_ranking(&["x3", "x4", "x2", "x1"], &[0, 2, 3], 5)))
        .unwrap();
    s.rank(
        iteration,
        RankInput {
            name: "RTot".into(),
            ranking: None,
            merge: Some(MergeDirective {
                lower: "R50".into(),
                upper: "R100".into(),
                bridge: 7,
            }),
        },
    )
    .unwrap();
}

pub fn choquet_spec(ranking: &str) -> FitSpec {
    let mut spec = FitSpec::new(ranking, dor_core::Family::Choquet);
    spec.normalization = NormalizationMode::MinMax;
    spec.syn = true;
    spec
}

pub fn base_rules() -> Vec<ExtraConstraint> {
    vec![
        ExtraConstraint::RequireAnyOf {
            facilities: vec!["KIT-WWO".into(), "KIT-GUE".into()],
            by_period: None,
        },
        ExtraConstraint::Precedence {
            earlier: "TAI-LAB".into(),
            later: "RES-WWO".into(),
        },
        ExtraConstraint::Precedence {
            earlier: "TAI-LAB".into(),
            later: "WOO-LAB".into(),
        },
    ]
}

/// Scenarios driven by the three fitted capacities, plus the residence
/// variant on R_Tot.
pub fn second_grid() -> Vec<ScenarioSpec> {
    let mut grid = Vec::new();
    for b in ["B1", "B2"] {
        for r in ["R50", "R100", "RTot"] {
            let mut sc = ScenarioSpec::new(format!("{b}-w{r}"), b, ObjectiveRef::Named(format!("w{r}")), true);
            sc.constraints = base_rules();
            grid.push(sc);
        }
        let mut sc = ScenarioSpec::new(format!("{b}-wRTot-res"), b, ObjectiveRef::Named("wRTot".into()), true);
        sc.constraints = base_rules();
        sc.constraints.push(ExtraConstraint::RequireAnyOf {
            facilities: vec!["RES-WWO".into(), "ROM-GUE".into()],
            by_period: None,
        });
        grid.push(sc);
    }
    grid
}

pub fn third_grid() -> Vec<ScenarioSpec> {
    let mut a = ScenarioSpec::new("B1-forbid", "B1", ObjectiveRef::Named("wRTot".into()), true);
    a.constraints = base_rules();
    a.constraints.push(ExtraConstraint::ForbidPair {
        a: Ref {
            facility: "WOO-LAB".into(),
            location: "l1".into(),
        },
        b: Ref {
            facility: "ROM-REC".into(),
            location: "l1".into(),
        },
    });
    let mut b = ScenarioSpec::new("B1-two", "B1", ObjectiveRef::Named("wRTot".into()), true);
    b.constraints = base_rules();
    b.constraints.push(ExtraConstraint::MinTwoPerBuilding);
    vec![a, b]
}
