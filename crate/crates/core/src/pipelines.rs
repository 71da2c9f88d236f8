//! End-to-end methods: assignment followed by a helper schedule.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::exact::{equid_assign, oracle_opt, SearchBudget, SearchError};
use crate::gapcc::{gapcc_assign, GapError};
use crate::model::{Assignment, Instance, Schedule, Slot};
use crate::scheduler::{schedule_algorithm1, schedule_fcfs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Approx5,
    Equid,
    EdFcfs,
    Bg,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Approx5, Method::Equid, Method::EdFcfs, Method::Bg, Method::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::Approx5 => "approx5",
            Method::Equid => "equid",
            Method::EdFcfs => "ed-fcfs",
            Method::Bg => "bg",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method {0:?} (expected approx5, equid, ed-fcfs, bg or oracle)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Ok,
    AssignmentFailed,
    BudgetExhausted,
    /// The method does not apply to this instance (approx5 on non-unit demands).
    Rejected,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::AssignmentFailed => "assignment-failed",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::Rejected => "rejected",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            RunStatus::Ok,
            RunStatus::AssignmentFailed,
            RunStatus::BudgetExhausted,
            RunStatus::Rejected,
        ]
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

/// Outcome of one method on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    /// Present iff the status is `Ok` or `BudgetExhausted`.
    pub makespan: Option<Slot>,
    pub wall_time_ms: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub assignment: Assignment,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub report: RunReport,
    pub solution: Option<Solution>,
    /// The certified GAPcc target `T*` (approx5 only).
    pub certified_target: Option<Slot>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("the 5-approximation requires unit demands; client {client} has demand {demand}")]
    NonUnitDemand { client: usize, demand: u64 },
    #[error(transparent)]
    Gap(#[from] GapError),
}

fn finish(method: Method, started: Instant, outcome: Option<(Solution, bool)>) -> MethodRun {
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    let (status, makespan, solution) = match outcome {
        Some((sol, true)) => (RunStatus::Ok, Some(sol.schedule.makespan), Some(sol)),
        Some((sol, false)) => (RunStatus::BudgetExhausted, Some(sol.schedule.makespan), Some(sol)),
        None => (RunStatus::AssignmentFailed, None, None),
    };
    MethodRun {
        report: RunReport {
            method,
            makespan,
            wall_time_ms,
            status,
        },
        solution,
        certified_target: None,
    }
}

fn scheduled(
    instance: &Instance,
    assignment: Assignment,
    scheduler: fn(&Instance, &Assignment) -> Result<Schedule, crate::scheduler::InfeasibleAssignment>,
) -> Solution {
    let schedule = scheduler(instance, &assignment).expect("assignment was produced feasible");
    Solution { assignment, schedule }
}

/// GAPcc 2-approximate assignment followed by the straggler-aware schedule.
pub fn run_approx5(instance: &Instance) -> Result<MethodRun, PipelineError> {
    if let Some(j) = instance.clients().find(|&j| instance.demand(j) != 1) {
        return Err(PipelineError::NonUnitDemand {
            client: j + 1,
            demand: instance.demand(j),
        });
    }
    let started = Instant::now();
    let gap = match gapcc_assign(instance) {
        Ok(g) => g,
        Err(GapError::NoFeasibleAssignment) => return Ok(finish(Method::Approx5, started, None)),
        Err(e) => return Err(e.into()),
    };
    let sol = scheduled(instance, gap.assignment, schedule_algorithm1);
    let mut run = finish(Method::Approx5, started, Some((sol, true)));
    run.certified_target = Some(gap.certified_target);
    Ok(run)
}

fn equid_then(
    method: Method,
    instance: &Instance,
    budget: &SearchBudget,
    scheduler: fn(&Instance, &Assignment) -> Result<Schedule, crate::scheduler::InfeasibleAssignment>,
) -> MethodRun {
    let started = Instant::now();
    let outcome = match equid_assign(instance, budget) {
        Ok(solved) => Some((scheduled(instance, solved.value.assignment, scheduler), solved.optimal)),
        Err(SearchError::Infeasible | SearchError::BudgetExhausted) => None,
    };
    finish(method, started, outcome)
}

/// Min-max load assignment followed by the straggler-aware schedule.
pub fn run_equid(instance: &Instance, budget: &SearchBudget) -> MethodRun {
    equid_then(Method::Equid, instance, budget, schedule_algorithm1)
}

/// Min-max load assignment followed by a FCFS schedule.
pub fn run_ed_fcfs(instance: &Instance, budget: &SearchBudget) -> MethodRun {
    equid_then(Method::EdFcfs, instance, budget, schedule_fcfs)
}

/// Balanced-greedy assignment: each client in index order goes to the
/// adjacent helper with the fewest clients among those with enough residual
/// memory (lowest index on ties). `None` when some client finds no helper.
pub fn balanced_greedy_assign(instance: &Instance) -> Option<Assignment> {
    let mut counts = vec![0usize; instance.num_helpers()];
    let mut residual = instance.capacities().to_vec();
    let mut helper_of = Vec::with_capacity(instance.num_clients());
    for j in instance.clients() {
        let d = instance.demand(j);
        let i = instance
            .neighbors(j)
            .filter(|&i| residual[i] >= d)
            .min_by_key(|&i| (counts[i], i))?;
        counts[i] += 1;
        residual[i] -= d;
        helper_of.push(i);
    }
    Some(Assignment::new(helper_of))
}

/// Balanced-greedy assignment followed by a FCFS schedule.
pub fn run_bg(instance: &Instance) -> MethodRun {
    let started = Instant::now();
    let outcome = balanced_greedy_assign(instance).map(|a| (scheduled(instance, a, schedule_fcfs), true));
    finish(Method::Bg, started, outcome)
}

/// The exact non-preemptive optimum as a method.
pub fn run_oracle(instance: &Instance, budget: &SearchBudget) -> MethodRun {
    let started = Instant::now();
    let outcome = oracle_opt(instance, budget).ok().map(|solved| {
        let sol = solved.value;
        (
            Solution {
                assignment: sol.assignment,
                schedule: sol.schedule,
            },
            solved.optimal,
        )
    });
    finish(Method::Oracle, started, outcome)
}

/// Runs any method; approx5 on non-unit demands yields a `Rejected` report.
pub fn run_method(method: Method, instance: &Instance, budget: &SearchBudget) -> MethodRun {
    match method {
        Method::Approx5 => run_approx5(instance).unwrap_or(MethodRun {
            report: RunReport {
                method,
                makespan: None,
                wall_time_ms: 0.0,
                status: RunStatus::Rejected,
            },
            solution: None,
            certified_target: None,
        }),
        Method::Equid => run_equid(instance, budget),
        Method::EdFcfs => run_ed_fcfs(instance, budget),
        Method::Bg => run_bg(instance),
        Method::Oracle => run_oracle(instance, budget),
    }
}
