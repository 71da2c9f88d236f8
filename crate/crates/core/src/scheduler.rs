//! Helper-side list schedulers for a fixed client-helper assignment.
//!
//! Both policies run every helper independently and never preempt.

use thiserror::Error;

use crate::model::{validate_assignment, Assignment, AssignmentViolation, Instance, Interval, Schedule, Slot, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("infeasible assignment: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InfeasibleAssignment(pub Vec<AssignmentViolation>);

/// Idle time of one helper under [`schedule_algorithm1`], split by what was
/// still pending while the helper waited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdleTrace {
    /// Idle slots while some T2 was still unscheduled.
    pub waiting_on_t2: Slot,
    /// Idle slots after the last T2 while some T4 was unscheduled.
    pub waiting_on_t4: Slot,
}

/// Straggler-aware list schedule.
///
/// Per helper, pending T2s are kept ordered by decreasing T3 delay and
/// pending T4s by decreasing T5 time (ties by client index). A released T2
/// always takes precedence; otherwise the first ready T4 runs. When nothing
/// is ready, time jumps to the earliest release or T4-ready time.
pub fn schedule_algorithm1(instance: &Instance, a: &Assignment) -> Result<Schedule, InfeasibleAssignment> {
    schedule_algorithm1_traced(instance, a).map(|(s, _)| s)
}

/// [`schedule_algorithm1`] plus the per-helper idle accounting.
pub fn schedule_algorithm1_traced(
    instance: &Instance,
    a: &Assignment,
) -> Result<(Schedule, Vec<IdleTrace>), InfeasibleAssignment> {
    validate_assignment(instance, a).map_err(InfeasibleAssignment)?;
    let mut intervals = Vec::with_capacity(2 * instance.num_clients());
    let mut completion = vec![0; instance.num_clients()];
    let mut traces = Vec::with_capacity(instance.num_helpers());
    for helper in instance.helpers() {
        let trace = straggler_first(instance, helper, &a.clients_of(helper), &mut intervals, &mut completion);
        debug_assert!(trace.waiting_on_t2 <= instance.max_release());
        debug_assert!(trace.waiting_on_t4 <= instance.max_delay());
        traces.push(trace);
    }
    Ok((Schedule::new(intervals, completion), traces))
}

fn straggler_first(
    instance: &Instance,
    helper: usize,
    clients: &[usize],
    intervals: &mut Vec<Interval>,
    completion: &mut [Slot],
) -> IdleTrace {
    let mut q2 = clients.to_vec();
    q2.sort_by_key(|&j| (std::cmp::Reverse(instance.t3_delay(j)), j));
    let mut q4 = clients.to_vec();
    q4.sort_by_key(|&j| (std::cmp::Reverse(instance.t5(j)), j));
    // earliest T4 start; None until the client's T2 has run
    let mut ready4: Vec<Option<Slot>> = vec![None; instance.num_clients()];

    let mut trace = IdleTrace::default();
    let mut t: Slot = 0;
    while !q2.is_empty() || !q4.is_empty() {
        let min_release = q2.iter().map(|&j| instance.release(j)).min();
        let min_ready4 = q4.iter().filter_map(|&j| ready4[j]).min();
        let next = match (min_release, min_ready4) {
            (Some(r), Some(w)) => r.min(w),
            (Some(r), None) => r,
            (None, Some(w)) => w,
            (None, None) => unreachable!("pending T4s without a pending T2 all have ready times"),
        };
        if next > t {
            if q2.is_empty() {
                trace.waiting_on_t4 += next - t;
            } else {
                trace.waiting_on_t2 += next - t;
            }
            t = next;
        }

        if let Some(pos) = q2.iter().position(|&j| instance.release(j) <= t) {
            let j = q2.remove(pos);
            let end = t + instance.t2(j, helper);
            intervals.push(Interval {
                helper,
                client: j,
                kind: TaskKind::T2,
                start: t,
                end,
            });
            t = end;
            ready4[j] = Some(t + instance.t3_delay(j));
        } else {
            let pos = q4
                .iter()
                .position(|&j| ready4[j].is_some_and(|w| w <= t))
                .expect("time advanced to a ready task");
            let j = q4.remove(pos);
            let end = t + instance.t4(j, helper);
            intervals.push(Interval {
                helper,
                client: j,
                kind: TaskKind::T4,
                start: t,
                end,
            });
            t = end;
            completion[j] = t + instance.t5(j);
        }
    }
    trace
}

/// First-come-first-serve: each helper runs the pending task with the
/// earliest ready time (T2 before T4 on ties, then client index).
pub fn schedule_fcfs(instance: &Instance, a: &Assignment) -> Result<Schedule, InfeasibleAssignment> {
    validate_assignment(instance, a).map_err(InfeasibleAssignment)?;
    let mut intervals = Vec::with_capacity(2 * instance.num_clients());
    let mut completion = vec![0; instance.num_clients()];
    for helper in instance.helpers() {
        // (ready, kind, client)
        let mut pending: Vec<(Slot, TaskKind, usize)> = a
            .clients_of(helper)
            .into_iter()
            .map(|j| (instance.release(j), TaskKind::T2, j))
            .collect();
        let mut t: Slot = 0;
        while let Some(pos) = (0..pending.len()).min_by_key(|&k| pending[k]) {
            let (ready, kind, j) = pending.swap_remove(pos);
            t = t.max(ready);
            let duration = match kind {
                TaskKind::T2 => instance.t2(j, helper),
                TaskKind::T4 => instance.t4(j, helper),
            };
            intervals.push(Interval {
                helper,
                client: j,
                kind,
                start: t,
                end: t + duration,
            });
            t += duration;
            match kind {
                TaskKind::T2 => pending.push((t + instance.t3_delay(j), TaskKind::T4, j)),
                TaskKind::T4 => completion[j] = t + instance.t5(j),
            }
        }
    }
    Ok(Schedule::new(intervals, completion))
}
