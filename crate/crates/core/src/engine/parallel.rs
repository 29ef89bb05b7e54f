//! Optional multi-worker execution.
//!
//! Each region is owned by exactly one worker; products aimed at a region
//! another worker owns are delivered through that region's inbox and merged
//! by the owner before its next attempt there. Workers interleave freely, so
//! runs are NOT deterministic and are excluded from acceptance checks. The
//! sequential engine in the parent module is the reference semantics.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::multiset::{Multiset, Object};
use crate::rule::Target;
use crate::system::{MembraneSystem, RegionId};

/// Final state of a parallel run. Emission order across workers is not
/// meaningful, so emitted objects are returned sorted.
pub struct ParallelOutcome {
    pub system: MembraneSystem,
    pub emitted: Vec<Object>,
    pub attempts: u64,
}

/// Runs `budget` attempts split over `workers` threads.
pub fn run_parallel(
    system: MembraneSystem,
    seed: u64,
    budget: u64,
    workers: usize,
) -> ParallelOutcome {
    let workers = workers.max(1).min(system.regions().len().max(1));
    let inboxes: Vec<Mutex<Multiset>> = (0..system.regions().len())
        .map(|_| Mutex::new(Multiset::new()))
        .collect();
    let environment = Mutex::new((Multiset::new(), Vec::<Object>::new()));

    // region ids per worker, round-robin
    let ownership: Vec<Vec<RegionId>> = (0..workers)
        .map(|w| {
            (0..system.regions().len())
                .filter(|i| i % workers == w)
                .map(RegionId)
                .collect()
        })
        .collect();

    let mut contents_after: Vec<BTreeMap<RegionId, Multiset>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (worker, owned) in ownership.iter().enumerate() {
            let system = &system;
            let inboxes = &inboxes;
            let environment = &environment;
            let share = budget / workers as u64
                + if (worker as u64) < budget % workers as u64 { 1 } else { 0 };
            handles.push(scope.spawn(move || {
                worker_loop(system, owned, inboxes, environment, seed, worker as u64, share)
            }));
        }
        for handle in handles {
            contents_after.push(handle.join().expect("worker panicked"));
        }
    });

    let mut merged = system;
    for map in contents_after {
        for (id, contents) in map {
            merged.region_mut(id).contents = contents;
        }
    }
    // leftover undelivered inbox contents belong to their region
    for (i, inbox) in inboxes.into_iter().enumerate() {
        let inbox = inbox.into_inner().expect("inbox poisoned");
        merged.region_mut(RegionId(i)).contents.insert_all(&inbox);
    }
    let (env, mut emitted) = environment.into_inner().expect("environment poisoned");
    merged.environment.insert_all(&env);
    emitted.sort();
    ParallelOutcome { system: merged, emitted, attempts: budget }
}

fn worker_loop(
    system: &MembraneSystem,
    owned: &[RegionId],
    inboxes: &[Mutex<Multiset>],
    environment: &Mutex<(Multiset, Vec<Object>)>,
    seed: u64,
    worker: u64,
    budget: u64,
) -> BTreeMap<RegionId, Multiset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (worker.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
    let mut contents: BTreeMap<RegionId, Multiset> = owned
        .iter()
        .map(|&id| (id, system.region(id).contents.clone()))
        .collect();
    if owned.is_empty() {
        return contents;
    }

    for _ in 0..budget {
        let region = owned[rng.random_range(0..owned.len())];
        {
            let mut inbox = inboxes[region.0].lock().expect("inbox poisoned");
            if !inbox.is_empty() {
                contents.get_mut(&region).expect("owned").insert_all(&inbox);
                *inbox = Multiset::new();
            }
        }
        attempt_local(system, region, &mut contents, inboxes, environment, &mut rng);
    }
    contents
}

fn attempt_local(
    system: &MembraneSystem,
    region: RegionId,
    contents: &mut BTreeMap<RegionId, Multiset>,
    inboxes: &[Mutex<Multiset>],
    environment: &Mutex<(Multiset, Vec<Object>)>,
    rng: &mut ChaCha8Rng,
) {
    let region_ref = system.region(region);
    let pool_size = region_ref.rules.size();
    if pool_size == 0 {
        return;
    }
    let rule = {
        let idx = if pool_size == 1 { 0 } else { rng.random_range(0..pool_size) };
        match region_ref.rules.nth_copy(idx) {
            Object::Rule(rule) => rule.as_ref().clone(),
            Object::Symbol(_) => unreachable!("rule pools hold rule objects only"),
        }
    };

    let local = contents.get_mut(&region).expect("owned region");
    if !sample_matches(local, &rule.lhs, rng) {
        return;
    }
    local.remove_all(&rule.lhs);

    for (products, target) in &rule.rhs {
        if products.is_empty() {
            continue;
        }
        let destination = match target {
            Target::Here => Some(region),
            Target::Out => region_ref.parent,
            Target::In(label) => region_ref
                .children
                .iter()
                .copied()
                .find(|&child| system.region(child).label == *label),
            Target::Link(None) => match region_ref.links.len() {
                0 => None,
                1 => Some(region_ref.links[0].1),
                n => Some(region_ref.links[rng.random_range(0..n)].1),
            },
            Target::Link(Some(label)) => region_ref
                .links
                .iter()
                .find(|(l, _)| l.as_deref() == Some(label))
                .map(|&(_, to)| to),
        };
        match destination {
            Some(dest) => match contents.get_mut(&dest) {
                Some(local_dest) => local_dest.insert_all(products),
                None => inboxes[dest.0]
                    .lock()
                    .expect("inbox poisoned")
                    .insert_all(products),
            },
            None if matches!(target, Target::Out) => {
                let mut env = environment.lock().expect("environment poisoned");
                env.0.insert_all(products);
                for obj in products.iter_copies() {
                    env.1.push(obj.clone());
                }
            }
            None => {} // unresolvable target: validation rejects these up front
        }
    }
}

fn sample_matches(contents: &Multiset, lhs: &Multiset, rng: &mut ChaCha8Rng) -> bool {
    let need = lhs.size();
    if contents.size() < need {
        return false;
    }
    let mut pool = contents.clone();
    let mut taken = Multiset::new();
    let mut remaining = pool.size();
    for _ in 0..need {
        let idx = if remaining == 1 { 0 } else { rng.random_range(0..remaining) };
        let obj = pool.nth_copy(idx).clone();
        pool.remove(&obj, 1);
        remaining -= 1;
        taken.insert(obj.clone(), 1);
        if taken.count(&obj) > lhs.count(&obj) {
            return false;
        }
    }
    taken == *lhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::four_membrane_demo;

    #[test]
    fn parallel_run_preserves_count_balance() {
        // the demo rule b c -> H a nets -1 per firing; it fires at most once
        let sys = four_membrane_demo();
        let before = sys.total_count();
        let outcome = run_parallel(sys, 11, 500, 2);
        let after = outcome.system.total_count();
        assert!(after == before || after == before - 1);
    }

    #[test]
    fn parallel_run_reaches_the_demo_fixpoint() {
        let outcome = run_parallel(four_membrane_demo(), 5, 2000, 4);
        let region2 = outcome.system.region_by_label("2").unwrap();
        assert_eq!(region2.contents, Multiset::from_symbols([("a", 1), ("b", 1)]));
    }
}
