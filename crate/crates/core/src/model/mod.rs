//! Problem data: instances, client-helper assignments and helper schedules.
//!
//! Clients and helpers are 0-based internally. Every external surface
//! (file formats, violation messages, CSV) uses 1-based indices.

mod format;
mod schedule;

use std::fmt;

use thiserror::Error;

pub use format::{
    read_instance, read_schedule_file, write_instance, write_schedule_file, FormatError,
    ScheduleFile,
};
pub use schedule::{
    compute_makespan, validate_schedule, Interval, MakespanError, Schedule, ScheduleViolation,
    TaskKind,
};

/// Time is measured in integral slots.
pub type Slot = u64;

/// Errors raised while constructing an [`Instance`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("an instance needs at least one helper")]
    NoHelpers,
    #[error("`{field}` has length {found}, expected {expected}")]
    Length {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("edge ({client},{helper}) is out of range")]
    EdgeOutOfRange { client: usize, helper: usize },
    #[error("client {client} has no incident edge")]
    IsolatedClient { client: usize },
}

/// A split learning batch instance.
///
/// The bipartite graph is stored as a dense client-major adjacency table;
/// T2/T4 durations for non-edges are kept at zero and never read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    num_clients: usize,
    num_helpers: usize,
    adjacent: Vec<bool>,
    capacity: Vec<u64>,
    demand: Vec<u64>,
    release: Vec<Slot>,
    t2_time: Vec<Slot>,
    t3_delay: Vec<Slot>,
    t4_time: Vec<Slot>,
    t5_time: Vec<Slot>,
}

impl Instance {
    pub fn builder(num_clients: usize, num_helpers: usize) -> InstanceBuilder {
        InstanceBuilder::new(num_clients, num_helpers)
    }

    pub fn num_clients(&self) -> usize {
        self.num_clients
    }

    pub fn num_helpers(&self) -> usize {
        self.num_helpers
    }

    pub fn clients(&self) -> std::ops::Range<usize> {
        0..self.num_clients
    }

    pub fn helpers(&self) -> std::ops::Range<usize> {
        0..self.num_helpers
    }

    #[inline]
    fn idx(&self, client: usize, helper: usize) -> usize {
        client * self.num_helpers + helper
    }

    #[inline]
    pub fn is_edge(&self, client: usize, helper: usize) -> bool {
        self.adjacent[self.idx(client, helper)]
    }

    /// Helpers adjacent to `client`, in increasing index order.
    pub fn neighbors(&self, client: usize) -> impl Iterator<Item = usize> + '_ {
        self.helpers().filter(move |&i| self.is_edge(client, i))
    }

    pub fn is_complete(&self) -> bool {
        self.adjacent.iter().all(|&a| a)
    }

    pub fn capacity(&self, helper: usize) -> u64 {
        self.capacity[helper]
    }

    pub fn demand(&self, client: usize) -> u64 {
        self.demand[client]
    }

    pub fn release(&self, client: usize) -> Slot {
        self.release[client]
    }

    pub fn t2(&self, client: usize, helper: usize) -> Slot {
        self.t2_time[self.idx(client, helper)]
    }

    pub fn t3_delay(&self, client: usize) -> Slot {
        self.t3_delay[client]
    }

    pub fn t4(&self, client: usize, helper: usize) -> Slot {
        self.t4_time[self.idx(client, helper)]
    }

    pub fn t5(&self, client: usize) -> Slot {
        self.t5_time[client]
    }

    /// Combined helper work `p_ij + p'_ij` of a client on a helper.
    pub fn combined(&self, client: usize, helper: usize) -> Slot {
        self.t2(client, helper) + self.t4(client, helper)
    }

    /// Length of the full T1..T5 chain of `client` when served by `helper`.
    pub fn chain_length(&self, client: usize, helper: usize) -> Slot {
        self.release(client)
            + self.t2(client, helper)
            + self.t3_delay(client)
            + self.t4(client, helper)
            + self.t5(client)
    }

    pub fn has_unit_demands(&self) -> bool {
        self.demand.iter().all(|&d| d == 1)
    }

    pub fn max_release(&self) -> Slot {
        self.release.iter().copied().max().unwrap_or(0)
    }

    pub fn max_delay(&self) -> Slot {
        self.t3_delay.iter().copied().max().unwrap_or(0)
    }

    pub fn max_t5(&self) -> Slot {
        self.t5_time.iter().copied().max().unwrap_or(0)
    }

    pub fn capacities(&self) -> &[u64] {
        &self.capacity
    }

    pub fn demands(&self) -> &[u64] {
        &self.demand
    }
}

/// Incremental constructor for [`Instance`].
///
/// Defaults: complete bipartite graph, unit demands, capacity `num_clients`
/// on every helper, all durations zero.
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    num_clients: usize,
    num_helpers: usize,
    edges: Option<Vec<(usize, usize)>>,
    capacity: Vec<u64>,
    demand: Vec<u64>,
    release: Vec<Slot>,
    t2_time: Vec<Vec<Slot>>,
    t3_delay: Vec<Slot>,
    t4_time: Vec<Vec<Slot>>,
    t5_time: Vec<Slot>,
}

impl InstanceBuilder {
    pub fn new(num_clients: usize, num_helpers: usize) -> Self {
        Self {
            num_clients,
            num_helpers,
            edges: None,
            capacity: vec![num_clients as u64; num_helpers],
            demand: vec![1; num_clients],
            release: vec![0; num_clients],
            t2_time: vec![vec![0; num_helpers]; num_clients],
            t3_delay: vec![0; num_clients],
            t4_time: vec![vec![0; num_helpers]; num_clients],
            t5_time: vec![0; num_clients],
        }
    }

    /// Restricts the graph to the given 0-based `(client, helper)` pairs.
    pub fn edges(mut self, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        self.edges = Some(edges.into_iter().collect());
        self
    }

    pub fn capacity(mut self, capacity: Vec<u64>) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn demand(mut self, demand: Vec<u64>) -> Self {
        self.demand = demand;
        self
    }

    pub fn release(mut self, release: Vec<Slot>) -> Self {
        self.release = release;
        self
    }

    pub fn t3_delay(mut self, delay: Vec<Slot>) -> Self {
        self.t3_delay = delay;
        self
    }

    pub fn t5_time(mut self, t5: Vec<Slot>) -> Self {
        self.t5_time = t5;
        self
    }

    /// T2 durations as a client-major `J x I` table.
    pub fn t2_time(mut self, table: Vec<Vec<Slot>>) -> Self {
        self.t2_time = table;
        self
    }

    /// T4 durations as a client-major `J x I` table.
    pub fn t4_time(mut self, table: Vec<Vec<Slot>>) -> Self {
        self.t4_time = table;
        self
    }

    /// Same T2 duration of each client on every helper.
    pub fn t2_per_client(mut self, per_client: Vec<Slot>) -> Self {
        let width = self.num_helpers;
        self.t2_time = per_client.into_iter().map(|p| vec![p; width]).collect();
        self
    }

    /// Same T4 duration of each client on every helper.
    pub fn t4_per_client(mut self, per_client: Vec<Slot>) -> Self {
        let width = self.num_helpers;
        self.t4_time = per_client.into_iter().map(|p| vec![p; width]).collect();
        self
    }

    pub fn build(self) -> Result<Instance, InstanceError> {
        let (j, i) = (self.num_clients, self.num_helpers);
        if i == 0 {
            return Err(InstanceError::NoHelpers);
        }
        check_len("capacity", &self.capacity, i)?;
        check_len("demand", &self.demand, j)?;
        check_len("release", &self.release, j)?;
        check_len("t3_delay", &self.t3_delay, j)?;
        check_len("t5_time", &self.t5_time, j)?;
        check_len("t2_time", &self.t2_time, j)?;
        check_len("t4_time", &self.t4_time, j)?;
        for row in &self.t2_time {
            check_len("t2_time row", row, i)?;
        }
        for row in &self.t4_time {
            check_len("t4_time row", row, i)?;
        }

        let adjacent = match &self.edges {
            None => vec![true; j * i],
            Some(edges) => {
                let mut adj = vec![false; j * i];
                for &(c, h) in edges {
                    if c >= j || h >= i {
                        return Err(InstanceError::EdgeOutOfRange {
                            client: c + 1,
                            helper: h + 1,
                        });
                    }
                    adj[c * i + h] = true;
                }
                adj
            }
        };
        if let Some(c) = (0..j).find(|&c| !adjacent[c * i..(c + 1) * i].iter().any(|&a| a)) {
            return Err(InstanceError::IsolatedClient { client: c + 1 });
        }

        let flatten = |table: Vec<Vec<Slot>>| -> Vec<Slot> {
            table
                .into_iter()
                .flatten()
                .zip(&adjacent)
                .map(|(p, &a)| if a { p } else { 0 })
                .collect()
        };
        Ok(Instance {
            num_clients: j,
            num_helpers: i,
            t2_time: flatten(self.t2_time),
            t4_time: flatten(self.t4_time),
            adjacent,
            capacity: self.capacity,
            demand: self.demand,
            release: self.release,
            t3_delay: self.t3_delay,
            t5_time: self.t5_time,
        })
    }
}

fn check_len<T>(field: &'static str, v: &[T], expected: usize) -> Result<(), InstanceError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(InstanceError::Length {
            field,
            expected,
            found: v.len(),
        })
    }
}

/// A client-helper assignment `Y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    helper_of: Vec<usize>,
}

impl Assignment {
    pub fn new(helper_of: Vec<usize>) -> Self {
        Self { helper_of }
    }

    pub fn helper_of(&self, client: usize) -> usize {
        self.helper_of[client]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.helper_of
    }

    pub fn num_clients(&self) -> usize {
        self.helper_of.len()
    }

    /// The client set `Z_Y(helper)` in increasing client order.
    pub fn clients_of(&self, helper: usize) -> Vec<usize> {
        self.helper_of
            .iter()
            .enumerate()
            .filter_map(|(j, &h)| (h == helper).then_some(j))
            .collect()
    }

    /// Per-helper sum of combined T2+T4 work.
    pub fn loads(&self, instance: &Instance) -> Vec<Slot> {
        let mut loads = vec![0; instance.num_helpers()];
        for (j, &i) in self.helper_of.iter().enumerate() {
            loads[i] += instance.combined(j, i);
        }
        loads
    }

    pub fn max_load(&self, instance: &Instance) -> Slot {
        self.loads(instance).into_iter().max().unwrap_or(0)
    }

    /// Per-helper number of assigned clients.
    pub fn counts(&self, num_helpers: usize) -> Vec<usize> {
        let mut counts = vec![0; num_helpers];
        for &i in &self.helper_of {
            counts[i] += 1;
        }
        counts
    }

    /// Per-helper sum of client memory demands.
    pub fn memory_use(&self, instance: &Instance) -> Vec<u64> {
        let mut used = vec![0; instance.num_helpers()];
        for (j, &i) in self.helper_of.iter().enumerate() {
            used[i] += instance.demand(j);
        }
        used
    }
}

/// A failed feasibility constraint of an assignment. Indices are 0-based;
/// `Display` renders them 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignmentViolation {
    ClientCount { expected: usize, found: usize },
    UnknownHelper { client: usize, helper: usize },
    NotAdjacent { client: usize, helper: usize },
    OverCapacity { helper: usize, load: u64, capacity: u64 },
}

impl fmt::Display for AssignmentViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::ClientCount { expected, found } => {
                write!(f, "assignment covers {found} clients, instance has {expected}")
            }
            Self::UnknownHelper { client, helper } => {
                write!(f, "client {} mapped to unknown helper {}", client + 1, helper + 1)
            }
            Self::NotAdjacent { client, helper } => {
                write!(f, "client {} is not adjacent to helper {}", client + 1, helper + 1)
            }
            Self::OverCapacity {
                helper,
                load,
                capacity,
            } => write!(f, "helper {} load {load} > {capacity}", helper + 1),
        }
    }
}

/// Checks adjacency and memory capacity of `assignment`, listing every violation.
pub fn validate_assignment(
    instance: &Instance,
    assignment: &Assignment,
) -> Result<(), Vec<AssignmentViolation>> {
    if assignment.num_clients() != instance.num_clients() {
        return Err(vec![AssignmentViolation::ClientCount {
            expected: instance.num_clients(),
            found: assignment.num_clients(),
        }]);
    }
    let mut violations = Vec::new();
    let mut used = vec![0u64; instance.num_helpers()];
    for (client, &helper) in assignment.as_slice().iter().enumerate() {
        if helper >= instance.num_helpers() {
            violations.push(AssignmentViolation::UnknownHelper { client, helper });
            continue;
        }
        if !instance.is_edge(client, helper) {
            violations.push(AssignmentViolation::NotAdjacent { client, helper });
        }
        used[helper] += instance.demand(client);
    }
    for (helper, &load) in used.iter().enumerate() {
        let capacity = instance.capacity(helper);
        if load > capacity {
            violations.push(AssignmentViolation::OverCapacity {
                helper,
                load,
                capacity,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
