//! Brute-force reference solvers and random instances shared by the
//! integration tests. Nothing here calls into the solvers under test.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slmakespan::model::{Instance, Slot};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_clients: usize,
    pub max_helpers: usize,
    pub max_duration: Slot,
    pub unit_demand: bool,
    /// Probability of dropping a client-helper edge.
    pub sparsity: f64,
}

/// A random instance; capacities may or may not admit a feasible assignment.
pub fn random_instance(rng: &mut ChaCha8Rng, shape: Shape) -> Instance {
    let nj = rng.gen_range(1..=shape.max_clients as u64) as usize;
    let ni = rng.gen_range(1..=shape.max_helpers as u64) as usize;
    let md = shape.max_duration;
    let mut draw = |lo: Slot| rng.gen_range(lo..=md);
    let release: Vec<Slot> = (0..nj).map(|_| draw(0)).collect();
    let delay: Vec<Slot> = (0..nj).map(|_| draw(0)).collect();
    let tail: Vec<Slot> = (0..nj).map(|_| draw(0)).collect();
    let t2: Vec<Vec<Slot>> = (0..nj).map(|_| (0..ni).map(|_| draw(1)).collect()).collect();
    let t4: Vec<Vec<Slot>> = (0..nj).map(|_| (0..ni).map(|_| draw(1)).collect()).collect();
    let demand: Vec<u64> = if shape.unit_demand {
        vec![1; nj]
    } else {
        (0..nj).map(|_| rng.gen_range(1..=3)).collect()
    };
    let total: u64 = demand.iter().sum();
    let capacity: Vec<u64> = (0..ni)
        .map(|_| rng.gen_range(total.div_ceil(2 * ni as u64)..=total.div_ceil(ni as u64) + 3))
        .collect();
    let mut edges = Vec::new();
    for j in 0..nj {
        let keep: Vec<usize> = (0..ni).filter(|_| !rng.gen_bool(shape.sparsity)).collect();
        if keep.is_empty() {
            edges.push((j, rng.gen_range(0..ni as u64) as usize));
        } else {
            edges.extend(keep.into_iter().map(|i| (j, i)));
        }
    }
    Instance::builder(nj, ni)
        .edges(edges)
        .capacity(capacity)
        .demand(demand)
        .release(release)
        .t3_delay(delay)
        .t5_time(tail)
        .t2_time(t2)
        .t4_time(t4)
        .build()
        .expect("every client keeps an edge")
}

/// Calls `f` on every adjacency- and memory-feasible assignment.
pub fn for_each_assignment(inst: &Instance, mut f: impl FnMut(&[usize])) {
    fn rec(inst: &Instance, j: usize, residual: &mut [u64], cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if j == inst.num_clients() {
            f(cur);
            return;
        }
        for i in inst.helpers() {
            let d = inst.demand(j);
            if inst.is_edge(j, i) && residual[i] >= d {
                residual[i] -= d;
                cur.push(i);
                rec(inst, j + 1, residual, cur, f);
                cur.pop();
                residual[i] += d;
            }
        }
    }
    let mut residual = inst.capacities().to_vec();
    rec(inst, 0, &mut residual, &mut Vec::new(), &mut f);
}

/// Minimum over feasible assignments of the maximum `sum p*` per helper.
pub fn brute_min_max_load(inst: &Instance) -> Option<Slot> {
    let mut best = None;
    for_each_assignment(inst, |a| {
        let mut loads = vec![0; inst.num_helpers()];
        for (j, &i) in a.iter().enumerate() {
            loads[i] += inst.t2(j, i) + inst.t4(j, i);
        }
        let m = loads.into_iter().max().unwrap_or(0);
        best = Some(best.map_or(m, |b: Slot| b.min(m)));
    });
    best
}

/// Best non-preemptive makespan on one helper, by trying every task order
/// (each client's T2 before its T4) with earliest starts.
pub fn brute_single_helper(inst: &Instance, helper: usize, clients: &[usize]) -> Slot {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        inst: &Instance,
        helper: usize,
        clients: &[usize],
        t: Slot,
        t2_end: &mut Vec<Option<Slot>>,
        done: &mut Vec<bool>,
        worst: Slot,
        best: &mut Slot,
    ) {
        let mut any = false;
        for k in 0..clients.len() {
            let j = clients[k];
            if done[k] {
                continue;
            }
            any = true;
            match t2_end[k] {
                None => {
                    let start = t.max(inst.release(j));
                    t2_end[k] = Some(start + inst.t2(j, helper));
                    rec(inst, helper, clients, start + inst.t2(j, helper), t2_end, done, worst, best);
                    t2_end[k] = None;
                }
                Some(e) => {
                    let start = t.max(e + inst.t3_delay(j));
                    let end = start + inst.t4(j, helper);
                    done[k] = true;
                    rec(inst, helper, clients, end, t2_end, done, worst.max(end + inst.t5(j)), best);
                    done[k] = false;
                }
            }
        }
        if !any {
            *best = (*best).min(worst);
        }
    }
    let mut best = Slot::MAX;
    rec(
        inst,
        helper,
        clients,
        0,
        &mut vec![None; clients.len()],
        &mut vec![false; clients.len()],
        0,
        &mut best,
    );
    if clients.is_empty() {
        0
    } else {
        best
    }
}

/// Exact optimum by enumerating assignments and task orders.
pub fn brute_opt(inst: &Instance) -> Option<Slot> {
    let mut best = None;
    for_each_assignment(inst, |a| {
        let m = inst
            .helpers()
            .map(|i| {
                let clients: Vec<usize> = (0..a.len()).filter(|&j| a[j] == i).collect();
                brute_single_helper(inst, i, &clients)
            })
            .max()
            .unwrap_or(0);
        best = Some(best.map_or(m, |b: Slot| b.min(m)));
    });
    best
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}
