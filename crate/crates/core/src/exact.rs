//! Exact searches: the min-max load assignment used by EquiD and a
//! brute-force makespan oracle for small instances.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{Assignment, Instance, Interval, Schedule, Slot, TaskKind};
use crate::scheduler::{schedule_algorithm1, schedule_fcfs};

/// Limits on an exponential search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    max_nodes: u64,
    time_limit: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("search budgets must be positive")]
pub struct InvalidBudget;

impl SearchBudget {
    pub fn new(max_nodes: u64, time_limit_ms: u64) -> Result<Self, InvalidBudget> {
        if max_nodes == 0 || time_limit_ms == 0 {
            return Err(InvalidBudget);
        }
        Ok(Self {
            max_nodes,
            time_limit: Duration::from_millis(time_limit_ms),
        })
    }

    pub fn max_nodes(&self) -> u64 {
        self.max_nodes
    }

    pub fn time_limit(&self) -> Duration {
        self.time_limit
    }
}

impl Default for SearchBudget {
    /// A hundred million nodes or ten seconds.
    fn default() -> Self {
        Self {
            max_nodes: 100_000_000,
            time_limit: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("no feasible client-helper assignment exists")]
    Infeasible,
    #[error("search budget exhausted before any feasible solution was found")]
    BudgetExhausted,
}

/// A search result; `optimal` is false when the budget ran out and `value`
/// is the best incumbent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solved<T> {
    pub value: T,
    pub optimal: bool,
    pub nodes: u64,
}

struct Meter {
    nodes: u64,
    max_nodes: u64,
    deadline: Instant,
    exhausted: bool,
}

impl Meter {
    fn new(budget: &SearchBudget) -> Self {
        Self {
            nodes: 0,
            max_nodes: budget.max_nodes,
            deadline: Instant::now() + budget.time_limit,
            exhausted: false,
        }
    }

    /// Counts a node; false once the budget is spent.
    #[inline]
    fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.nodes += 1;
        if self.nodes > self.max_nodes || (self.nodes.is_multiple_of(1024) && Instant::now() >= self.deadline) {
            self.exhausted = true;
        }
        !self.exhausted
    }
}

/// Assignment minimizing the maximum helper load `sum (p_ij + p'_ij)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquidAssignment {
    pub assignment: Assignment,
    pub max_load: Slot,
}

struct LoadSearch<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    /// Candidate helpers per client by increasing `p*`, then index.
    candidates: Vec<Vec<usize>>,
    helper_class: Vec<usize>,
    min_combined: Vec<Slot>,
    /// Per helper, `sum_j min_combined_j / sum_j p*_ij` over adjacent clients.
    inv_slowness: Vec<f64>,
    loads: Vec<Slot>,
    residual: Vec<u64>,
    helper_of: Vec<usize>,
    best: Option<(Slot, Vec<usize>)>,
    meter: Meter,
}

impl LoadSearch<'_> {
    fn incumbent(&self) -> Slot {
        self.best.as_ref().map_or(Slot::MAX, |b| b.0)
    }

    fn offer(&mut self, helper_of: Vec<usize>) {
        let max = Assignment::new(helper_of.clone()).max_load(self.inst);
        if max < self.incumbent() {
            self.best = Some((max, helper_of));
        }
    }

    /// List assignment in `order`, each client to the helper where it would
    /// finish first.
    fn greedy(&self, order: &[usize]) -> Option<Vec<usize>> {
        let inst = self.inst;
        let mut loads = vec![0; inst.num_helpers()];
        let mut residual = inst.capacities().to_vec();
        let mut helper_of = vec![0; inst.num_clients()];
        for &j in order {
            let d = inst.demand(j);
            let i = self.candidates[j]
                .iter()
                .copied()
                .filter(|&i| residual[i] >= d)
                .min_by_key(|&i| (loads[i] + inst.combined(j, i), inst.combined(j, i), i))?;
            loads[i] += inst.combined(j, i);
            residual[i] -= d;
            helper_of[j] = i;
        }
        Some(helper_of)
    }

    /// Moves and swaps off the most loaded helper while the maximum drops.
    fn improve(&self, helper_of: &mut [usize]) {
        let inst = self.inst;
        let mut loads = Assignment::new(helper_of.to_vec()).loads(inst);
        let mut residual: Vec<u64> = inst.capacities().to_vec();
        for j in inst.clients() {
            residual[helper_of[j]] -= inst.demand(j);
        }
        'outer: loop {
            let max = loads.iter().copied().max().unwrap_or(0);
            let top = loads.iter().position(|&l| l == max).unwrap_or(0);
            for j in inst.clients().filter(|&j| helper_of[j] == top) {
                let (pj, dj) = (inst.combined(j, top), inst.demand(j));
                for &h in &self.candidates[j] {
                    if h == top {
                        continue;
                    }
                    let ph = inst.combined(j, h);
                    if residual[h] >= dj && loads[h] + ph < max && loads[top] - pj < max {
                        loads[top] -= pj;
                        loads[h] += ph;
                        residual[top] += dj;
                        residual[h] -= dj;
                        helper_of[j] = h;
                        continue 'outer;
                    }
                    for k in inst.clients().filter(|&k| helper_of[k] == h) {
                        let dk = inst.demand(k);
                        if !inst.is_edge(k, top)
                            || residual[h] + dk < dj
                            || residual[top] + dj < dk
                        {
                            continue;
                        }
                        let new_top = loads[top] - pj + inst.combined(k, top);
                        let new_h = loads[h] - inst.combined(k, h) + ph;
                        if new_top.max(new_h) < max {
                            loads[top] = new_top;
                            loads[h] = new_h;
                            residual[top] = residual[top] + dj - dk;
                            residual[h] = residual[h] + dk - dj;
                            helper_of[j] = h;
                            helper_of[k] = top;
                            continue 'outer;
                        }
                    }
                }
            }
            break;
        }
    }

    fn seed_incumbent(&mut self) {
        let mut lpt: Vec<usize> = self.inst.clients().collect();
        lpt.sort_by_key(|&j| (std::cmp::Reverse(self.min_combined[j]), j));
        for order in [self.order.clone(), lpt] {
            if let Some(mut helper_of) = self.greedy(&order) {
                self.improve(&mut helper_of);
                self.offer(helper_of);
            }
        }
    }

    fn lower_bound(&self, depth: usize, current_max: Slot) -> Option<Slot> {
        let inst = self.inst;
        let rest = &self.order[depth..];
        let demand: u64 = rest.iter().map(|&j| inst.demand(j)).sum();
        if demand > self.residual.iter().sum::<u64>() {
            return None;
        }
        let mut lb = current_max;
        let mut total: Slot = self.loads.iter().sum();
        for &j in rest {
            let d = inst.demand(j);
            let finish = self.candidates[j]
                .iter()
                .filter(|&&i| self.residual[i] >= d)
                .map(|&i| self.loads[i] + inst.combined(j, i))
                .min()?;
            lb = lb.max(finish);
            total += self.min_combined[j];
        }
        let ni = inst.num_helpers() as Slot;
        let lb = lb.max(total.div_ceil(ni));
        if lb < self.incumbent() && !self.fits_fractionally(rest, self.incumbent() - 1) {
            return None;
        }
        Some(lb)
    }

    /// Necessary condition for finishing with max load at most `target`.
    ///
    /// For any helper weights `u`, a feasible completion satisfies
    /// `sum_j min_i u_i p*_ij <= sum_i u_i room_i`, the minimum taken over
    /// helpers that still fit client `j`. Two weightings are checked:
    /// `u_i = 1 / room_i` and `u_i = 1 / slowness_i`.
    fn fits_fractionally(&self, rest: &[usize], target: Slot) -> bool {
        let inst = self.inst;
        let room: Vec<Option<Slot>> = self.loads.iter().map(|&l| target.checked_sub(l)).collect();
        let inv_room: Vec<f64> = room
            .iter()
            .map(|r| match r {
                Some(r) if *r > 0 => 1.0 / *r as f64,
                _ => 0.0,
            })
            .collect();
        let weightings: [&[f64]; 2] = [&inv_room, &self.inv_slowness];
        weightings.iter().all(|u| {
            let budget: f64 = inst
                .helpers()
                .filter_map(|i| room[i].map(|r| u[i] * r as f64))
                .sum();
            let mut used = 0.0;
            for &j in rest {
                let d = inst.demand(j);
                let share = self.candidates[j]
                    .iter()
                    .filter(|&&i| self.residual[i] >= d && room[i].is_some_and(|r| inst.combined(j, i) <= r))
                    .map(|&i| u[i] * inst.combined(j, i) as f64)
                    .fold(f64::INFINITY, f64::min);
                used += share;
                if used > budget * (1.0 + 1e-12) + 1e-9 {
                    return false;
                }
            }
            true
        })
    }

    fn dfs(&mut self, depth: usize, current_max: Slot) {
        if !self.meter.tick() {
            return;
        }
        if depth == self.order.len() {
            if current_max < self.incumbent() {
                self.best = Some((current_max, self.helper_of.clone()));
            }
            return;
        }
        match self.lower_bound(depth, current_max) {
            Some(lb) if lb < self.incumbent() => {}
            _ => return,
        }
        let j = self.order[depth];
        let d = self.inst.demand(j);
        let mut tried: Vec<usize> = Vec::new();
        for k in 0..self.candidates[j].len() {
            let i = self.candidates[j][k];
            if self.residual[i] < d {
                continue;
            }
            let symmetric = tried.iter().any(|&h| {
                self.helper_class[h] == self.helper_class[i]
                    && self.loads[h] == self.loads[i]
                    && self.residual[h] == self.residual[i]
            });
            if symmetric {
                continue;
            }
            tried.push(i);
            let p = self.inst.combined(j, i);
            self.loads[i] += p;
            self.residual[i] -= d;
            self.helper_of[j] = i;
            let next_max = current_max.max(self.loads[i]);
            if next_max < self.incumbent() {
                self.dfs(depth + 1, next_max);
            }
            self.loads[i] -= p;
            self.residual[i] += d;
            if self.meter.exhausted {
                return;
            }
        }
    }
}

/// Helpers that are interchangeable: same capacity, adjacency and work.
fn helper_classes(inst: &Instance) -> Vec<usize> {
    let signature = |i: usize| {
        let column: Vec<Option<(Slot, Slot)>> = inst
            .clients()
            .map(|j| inst.is_edge(j, i).then(|| (inst.t2(j, i), inst.t4(j, i))))
            .collect();
        (inst.capacity(i), column)
    };
    let sigs: Vec<_> = inst.helpers().map(signature).collect();
    inst.helpers()
        .map(|i| (0..=i).find(|&h| sigs[h] == sigs[i]).expect("i matches itself"))
        .collect()
}

/// Branch-and-bound for `min_Y max_i sum_{j in Z_Y(i)} (p_ij + p'_ij)` over
/// feasible assignments (adjacency and memory demands).
///
/// Clients are branched in decreasing demand order and helpers tried in
/// increasing `p*` order; subtrees are cut by the incumbent, by residual
/// capacity, and by a per-client earliest-finish bound.
pub fn equid_assign(instance: &Instance, budget: &SearchBudget) -> Result<Solved<EquidAssignment>, SearchError> {
    let inst = instance;
    let mut candidates: Vec<Vec<usize>> = inst.clients().map(|j| inst.neighbors(j).collect()).collect();
    for (j, c) in candidates.iter_mut().enumerate() {
        c.sort_by_key(|&i| (inst.combined(j, i), i));
    }
    let min_combined: Vec<Slot> = inst
        .clients()
        .map(|j| candidates[j].iter().map(|&i| inst.combined(j, i)).min().unwrap_or(0))
        .collect();
    let mut order: Vec<usize> = inst.clients().collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(inst.demand(j)), std::cmp::Reverse(min_combined[j]), j));

    let mut search = LoadSearch {
        inst,
        order,
        candidates,
        helper_class: helper_classes(inst),
        inv_slowness: inst
            .helpers()
            .map(|i| {
                let adjacent = inst.clients().filter(|&j| inst.is_edge(j, i));
                let (fast, own) = adjacent.fold((0, 0), |(f, o), j| (f + min_combined[j], o + inst.combined(j, i)));
                if own == 0 {
                    1.0
                } else {
                    fast as f64 / own as f64
                }
            })
            .collect(),
        min_combined,
        loads: vec![0; inst.num_helpers()],
        residual: inst.capacities().to_vec(),
        helper_of: vec![0; inst.num_clients()],
        best: None,
        meter: Meter::new(budget),
    };
    search.seed_incumbent();
    search.dfs(0, 0);

    let optimal = !search.meter.exhausted;
    let nodes = search.meter.nodes;
    match search.best {
        Some((max_load, helper_of)) => Ok(Solved {
            value: EquidAssignment {
                assignment: Assignment::new(helper_of),
                max_load,
            },
            optimal,
            nodes,
        }),
        None if optimal => Err(SearchError::Infeasible),
        None => Err(SearchError::BudgetExhausted),
    }
}

type Task = (usize, TaskKind);

/// Earliest-start realization of a task order on one helper.
///
/// Returns the intervals and the `(client, completion)` pairs.
pub fn realize_order(instance: &Instance, helper: usize, order: &[Task]) -> (Vec<Interval>, Vec<(usize, Slot)>) {
    let mut t2_end: HashMap<usize, Slot> = HashMap::new();
    let mut intervals = Vec::with_capacity(order.len());
    let mut completions = Vec::new();
    let mut t: Slot = 0;
    for &(j, kind) in order {
        let (ready, duration) = match kind {
            TaskKind::T2 => (instance.release(j), instance.t2(j, helper)),
            TaskKind::T4 => (
                t2_end.get(&j).map_or(0, |&e| e + instance.t3_delay(j)),
                instance.t4(j, helper),
            ),
        };
        let start = t.max(ready);
        t = start + duration;
        intervals.push(Interval {
            helper,
            client: j,
            kind,
            start,
            end: t,
        });
        match kind {
            TaskKind::T2 => {
                t2_end.insert(j, t);
            }
            TaskKind::T4 => completions.push((j, t + instance.t5(j))),
        }
    }
    (intervals, completions)
}

/// Exact non-preemptive single-helper sequencing by depth-first search.
///
/// Only active orders are explored: a task is skipped when another
/// available task could run entirely before it starts. Among clients with
/// identical parameters, T2s are taken in index order.
struct SequenceSearch<'a> {
    inst: &'a Instance,
    helper: usize,
    clients: Vec<usize>,
    /// Index (into `clients`) of the previous identical client, if any.
    twin_before: Vec<Option<usize>>,
    t2_done: Vec<bool>,
    t4_done: Vec<bool>,
    ready4: Vec<Slot>,
    order: Vec<Task>,
    best: Slot,
    best_order: Option<Vec<Task>>,
    mask2: u64,
    mask4: u64,
    /// Explored states per (T2 done, T4 done) sets: time, running
    /// makespan and T4-ready times of the in-flight clients.
    seen: HashMap<(u64, u64), Vec<SeenState>>,
    seen_len: usize,
}

type SeenState = (Slot, Slot, Vec<Slot>);

const SEEN_CAPACITY: usize = 1 << 21;
const SEEN_PER_KEY: usize = 16;

impl SequenceSearch<'_> {
    /// True when an explored state with the same task sets is at least as
    /// good in every coordinate; otherwise records this state.
    fn dominated(&mut self, t: Slot, current_max: Slot) -> bool {
        let in_flight: Vec<Slot> = (0..self.clients.len())
            .filter(|&k| self.t2_done[k] && !self.t4_done[k])
            .map(|k| self.ready4[k])
            .collect();
        let entry = self.seen.entry((self.mask2, self.mask4)).or_default();
        let covers = |(ot, om, or): &(Slot, Slot, Vec<Slot>)| {
            *ot <= t && *om <= current_max && or.iter().zip(&in_flight).all(|(a, b)| a <= b)
        };
        if entry.iter().any(covers) {
            return true;
        }
        if self.seen_len < SEEN_CAPACITY {
            let before = entry.len();
            entry.retain(|(ot, om, or)| {
                !(t <= *ot && current_max <= *om && in_flight.iter().zip(or).all(|(a, b)| a <= b))
            });
            self.seen_len -= before - entry.len();
            if entry.len() >= SEEN_PER_KEY {
                entry.remove(0);
                self.seen_len -= 1;
            }
            entry.push((t, current_max, in_flight));
            self.seen_len += 1;
        }
        false
    }

    fn params(&self, k: usize) -> (Slot, Slot, Slot, Slot, Slot) {
        let (j, i) = (self.clients[k], self.helper);
        (
            self.inst.release(j),
            self.inst.t2(j, i),
            self.inst.t3_delay(j),
            self.inst.t4(j, i),
            self.inst.t5(j),
        )
    }

    fn lower_bound(&self, t: Slot, current_max: Slot) -> Slot {
        let mut lb = current_max;
        let mut work: Slot = 0;
        let mut earliest = Slot::MAX;
        let mut min_tail = Slot::MAX;
        for k in 0..self.clients.len() {
            if self.t4_done[k] {
                continue;
            }
            let (r, p, l, q, tail) = self.params(k);
            let chain = if self.t2_done[k] {
                earliest = earliest.min(self.ready4[k]);
                t.max(self.ready4[k]) + q + tail
            } else {
                earliest = earliest.min(r);
                work += p;
                t.max(r) + p + l + q + tail
            };
            work += q;
            min_tail = min_tail.min(tail);
            lb = lb.max(chain);
        }
        if min_tail != Slot::MAX {
            lb = lb.max(t.max(earliest) + work + min_tail);
        }
        lb
    }

    fn dfs(&mut self, t: Slot, current_max: Slot, remaining: usize, meter: &mut Meter) {
        if !meter.tick() {
            return;
        }
        if remaining == 0 {
            if current_max < self.best {
                self.best = current_max;
                self.best_order = Some(self.order.clone());
            }
            return;
        }
        if self.lower_bound(t, current_max) >= self.best || self.dominated(t, current_max) {
            return;
        }

        // (start, end, kind, k) of every available task
        let mut avail: Vec<(Slot, Slot, TaskKind, usize)> = Vec::new();
        for k in 0..self.clients.len() {
            let (r, p, _, q, _) = self.params(k);
            if !self.t2_done[k] {
                if self.twin_before[k].is_some_and(|b| !self.t2_done[b]) {
                    continue;
                }
                let s = t.max(r);
                avail.push((s, s + p, TaskKind::T2, k));
            } else if !self.t4_done[k] {
                let s = t.max(self.ready4[k]);
                avail.push((s, s + q, TaskKind::T4, k));
            }
        }
        avail.sort_by_key(|&(s, e, kind, k)| (s, e, kind, k));

        for idx in 0..avail.len() {
            let (start, end, kind, k) = avail[idx];
            let dominated = avail.iter().enumerate().any(|(o, &(_, oe, okind, ok))| {
                o != idx && (oe < start || (oe == start && (oe, okind, ok) < (end, kind, k)))
            });
            if dominated {
                continue;
            }
            let j = self.clients[k];
            self.order.push((j, kind));
            match kind {
                TaskKind::T2 => {
                    self.t2_done[k] = true;
                    self.mask2 |= 1 << k;
                    self.ready4[k] = end + self.inst.t3_delay(j);
                    self.dfs(end, current_max, remaining - 1, meter);
                    self.t2_done[k] = false;
                    self.mask2 &= !(1 << k);
                }
                TaskKind::T4 => {
                    self.t4_done[k] = true;
                    self.mask4 |= 1 << k;
                    let c = end + self.inst.t5(j);
                    self.dfs(end, current_max.max(c), remaining - 1, meter);
                    self.t4_done[k] = false;
                    self.mask4 &= !(1 << k);
                }
            }
            self.order.pop();
            if meter.exhausted {
                return;
            }
        }
    }
}

/// Optimal order of one helper's clients if its makespan is below `cutoff`.
fn best_sequence(
    inst: &Instance,
    helper: usize,
    clients: &[usize],
    cutoff: Slot,
    meter: &mut Meter,
) -> Option<(Slot, Vec<Task>)> {
    if clients.is_empty() {
        return (cutoff > 0).then(|| (0, Vec::new()));
    }
    let params = |j: usize| {
        (
            inst.release(j),
            inst.t2(j, helper),
            inst.t3_delay(j),
            inst.t4(j, helper),
            inst.t5(j),
        )
    };
    let twin_before = (0..clients.len())
        .map(|k| (0..k).rev().find(|&b| params(clients[b]) == params(clients[k])))
        .collect();

    // Seed with both list schedules restricted to this helper.
    let mut best = cutoff;
    let mut best_order = None;
    let sub = restrict(inst, helper, clients);
    let a = Assignment::new(vec![0; clients.len()]);
    for s in [schedule_algorithm1(&sub, &a), schedule_fcfs(&sub, &a)].into_iter().flatten() {
        if s.makespan < best {
            best = s.makespan;
            best_order = Some(s.timeline(0).iter().map(|iv| (clients[iv.client], iv.kind)).collect());
        }
    }

    let mut search = SequenceSearch {
        inst,
        helper,
        clients: clients.to_vec(),
        twin_before,
        t2_done: vec![false; clients.len()],
        t4_done: vec![false; clients.len()],
        ready4: vec![0; clients.len()],
        order: Vec::with_capacity(2 * clients.len()),
        best,
        best_order,
        mask2: 0,
        mask4: 0,
        seen: HashMap::new(),
        seen_len: 0,
    };
    search.dfs(0, 0, 2 * clients.len(), meter);
    search.best_order.map(|o| (search.best, o))
}

/// Single-helper sub-instance holding `clients` in order.
fn restrict(inst: &Instance, helper: usize, clients: &[usize]) -> Instance {
    let pick = |f: &dyn Fn(usize) -> Slot| clients.iter().map(|&j| f(j)).collect::<Vec<_>>();
    Instance::builder(clients.len(), 1)
        .release(pick(&|j| inst.release(j)))
        .t2_per_client(pick(&|j| inst.t2(j, helper)))
        .t3_delay(pick(&|j| inst.t3_delay(j)))
        .t4_per_client(pick(&|j| inst.t4(j, helper)))
        .t5_time(pick(&|j| inst.t5(j)))
        .capacity(vec![clients.len() as u64])
        .build()
        .expect("restriction of a valid instance")
}

/// Optimal non-preemptive assignment and schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSolution {
    pub makespan: Slot,
    pub assignment: Assignment,
    pub schedule: Schedule,
}

enum Memo {
    Exact(Slot, Vec<Task>),
    AtLeast(Slot),
}

struct Oracle<'a> {
    inst: &'a Instance,
    helper_of: Vec<usize>,
    residual: Vec<u64>,
    memo: HashMap<(usize, u64), Memo>,
    best: Slot,
    best_solution: Option<(Vec<usize>, Vec<Vec<Task>>)>,
    meter: Meter,
}

impl Oracle<'_> {
    fn helper_value(&mut self, helper: usize, mask: u64, cutoff: Slot) -> Option<(Slot, Vec<Task>)> {
        match self.memo.get(&(helper, mask)) {
            Some(Memo::Exact(v, order)) => return (*v < cutoff).then(|| (*v, order.clone())),
            Some(Memo::AtLeast(b)) if *b >= cutoff => return None,
            _ => {}
        }
        let clients: Vec<usize> = (0..self.inst.num_clients()).filter(|&j| mask >> j & 1 == 1).collect();
        let found = best_sequence(self.inst, helper, &clients, cutoff, &mut self.meter);
        if self.meter.exhausted {
            return found;
        }
        let entry = match &found {
            Some((v, order)) => Memo::Exact(*v, order.clone()),
            None => Memo::AtLeast(cutoff),
        };
        self.memo.insert((helper, mask), entry);
        found
    }

    fn leaf(&mut self) {
        let ni = self.inst.num_helpers();
        let mut masks = vec![0u64; ni];
        for (j, &i) in self.helper_of.iter().enumerate() {
            masks[i] |= 1 << j;
        }
        let mut helpers: Vec<usize> = (0..ni).collect();
        helpers.sort_by_key(|&i| (std::cmp::Reverse(masks[i].count_ones()), i));
        let mut orders = vec![Vec::new(); ni];
        let mut value = 0;
        for i in helpers {
            match self.helper_value(i, masks[i], self.best) {
                Some((v, order)) => {
                    value = value.max(v);
                    orders[i] = order;
                }
                None => return,
            }
        }
        if value < self.best {
            self.best = value;
            self.best_solution = Some((self.helper_of.clone(), orders));
        }
    }

    fn dfs(&mut self, j: usize, chain_bound: Slot) {
        if !self.meter.tick() {
            return;
        }
        if chain_bound >= self.best {
            return;
        }
        if j == self.inst.num_clients() {
            self.leaf();
            return;
        }
        let d = self.inst.demand(j);
        for i in self.inst.neighbors(j).collect::<Vec<_>>() {
            if self.residual[i] < d {
                continue;
            }
            self.residual[i] -= d;
            self.helper_of[j] = i;
            self.dfs(j + 1, chain_bound.max(self.inst.chain_length(j, i)));
            self.residual[i] += d;
            if self.meter.exhausted {
                return;
            }
        }
    }
}

/// Minimum makespan over all feasible assignments and all non-preemptive
/// helper schedules, with a witness.
///
/// Assignments are enumerated in lexicographic order and helpers solved
/// independently (memoized per client set); ties keep the lexicographically
/// smallest assignment. Limited to 64 clients and meant for a handful.
pub fn oracle_opt(instance: &Instance, budget: &SearchBudget) -> Result<Solved<OracleSolution>, SearchError> {
    assert!(instance.num_clients() <= 64, "oracle supports at most 64 clients");
    let mut oracle = Oracle {
        inst: instance,
        helper_of: vec![0; instance.num_clients()],
        residual: instance.capacities().to_vec(),
        memo: HashMap::new(),
        best: Slot::MAX,
        best_solution: None,
        meter: Meter::new(budget),
    };
    oracle.dfs(0, 0);

    let optimal = !oracle.meter.exhausted;
    let nodes = oracle.meter.nodes;
    let Some((helper_of, orders)) = oracle.best_solution else {
        return Err(if optimal {
            SearchError::Infeasible
        } else {
            SearchError::BudgetExhausted
        });
    };
    let mut intervals = Vec::new();
    let mut completion = vec![0; instance.num_clients()];
    for (i, order) in orders.iter().enumerate() {
        let (ivs, done) = realize_order(instance, i, order);
        intervals.extend(ivs);
        for (j, c) in done {
            completion[j] = c;
        }
    }
    let schedule = Schedule::new(intervals, completion);
    debug_assert_eq!(schedule.makespan, oracle.best);
    Ok(Solved {
        value: OracleSolution {
            makespan: schedule.makespan,
            assignment: Assignment::new(helper_of),
            schedule,
        },
        optimal,
        nodes,
    })
}

/// Optimal single-helper makespan of `clients` on `helper`, searched
/// exhaustively. Exposed for cross-checking.
pub fn single_helper_optimum(instance: &Instance, helper: usize, clients: &[usize]) -> Slot {
    let mut meter = Meter::new(&SearchBudget {
        max_nodes: u64::MAX,
        time_limit: Duration::from_secs(3600),
    });
    best_sequence(instance, helper, clients, Slot::MAX, &mut meter).map_or(0, |b| b.0)
}
