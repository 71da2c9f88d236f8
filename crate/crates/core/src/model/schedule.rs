use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate_assignment, Assignment, AssignmentViolation, Instance, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    T2,
    T4,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::T2 => "T2",
            TaskKind::T4 => "T4",
        })
    }
}

/// Processing of (part of) a helper-side task over slots `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub helper: usize,
    pub client: usize,
    pub kind: TaskKind,
    pub start: Slot,
    pub end: Slot,
}

impl Interval {
    pub fn len(&self) -> Slot {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Helper timelines plus the stated per-client completion times.
///
/// Fields are public so externally produced (possibly broken) schedules can
/// be represented and checked with [`validate_schedule`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub intervals: Vec<Interval>,
    pub completion: Vec<Slot>,
    pub makespan: Slot,
}

impl Schedule {
    /// Builds a schedule whose makespan is the maximum completion time.
    pub fn new(intervals: Vec<Interval>, completion: Vec<Slot>) -> Self {
        let makespan = completion.iter().copied().max().unwrap_or(0);
        Self {
            intervals,
            completion,
            makespan,
        }
    }

    /// Intervals of one helper ordered by start slot.
    pub fn timeline(&self, helper: usize) -> Vec<Interval> {
        let mut v: Vec<Interval> = self
            .intervals
            .iter()
            .filter(|iv| iv.helper == helper)
            .copied()
            .collect();
        v.sort_by_key(|iv| (iv.start, iv.end, iv.client, iv.kind));
        v
    }

    /// True when some task is split over more than one interval.
    pub fn is_preemptive(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.intervals
            .iter()
            .any(|iv| !seen.insert((iv.client, iv.kind)))
    }

    /// The assignment implied by the first interval of each client, if every
    /// client has at least one interval.
    pub fn implied_assignment(&self, num_clients: usize) -> Option<Assignment> {
        let mut helper_of = vec![None; num_clients];
        for iv in &self.intervals {
            if iv.client < num_clients && helper_of[iv.client].is_none() {
                helper_of[iv.client] = Some(iv.helper);
            }
        }
        helper_of
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .map(Assignment::new)
    }
}

/// A broken schedule invariant. Indices are 0-based; `Display` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleViolation {
    CompletionCount {
        expected: usize,
        found: usize,
    },
    OutOfRange {
        interval: usize,
    },
    Reversed {
        interval: usize,
    },
    WrongHelper {
        client: usize,
        kind: TaskKind,
        helper: usize,
        assigned: usize,
    },
    MissingTask {
        client: usize,
        kind: TaskKind,
    },
    Duration {
        client: usize,
        kind: TaskKind,
        scheduled: Slot,
        required: Slot,
    },
    BeforeRelease {
        client: usize,
        start: Slot,
        release: Slot,
    },
    BeforeDelay {
        client: usize,
        start: Slot,
        earliest: Slot,
    },
    Overlap {
        helper: usize,
        first: (usize, TaskKind),
        second: (usize, TaskKind),
    },
    Completion {
        client: usize,
        stated: Slot,
        actual: Slot,
    },
    Makespan {
        stated: Slot,
        actual: Slot,
    },
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScheduleViolation::*;
        match *self {
            CompletionCount { expected, found } => {
                write!(f, "{found} completion times for {expected} clients")
            }
            OutOfRange { interval } => write!(f, "interval #{} names an unknown client or helper", interval + 1),
            Reversed { interval } => write!(f, "interval #{} ends before it starts", interval + 1),
            WrongHelper {
                client,
                kind,
                helper,
                assigned,
            } => write!(
                f,
                "{kind} of client {} runs on helper {} but the client is assigned to helper {}",
                client + 1,
                helper + 1,
                assigned + 1
            ),
            MissingTask { client, kind } => write!(f, "{kind} of client {} is not scheduled", client + 1),
            Duration {
                client,
                kind,
                scheduled,
                required,
            } => write!(
                f,
                "{kind} of client {} gets {scheduled} slots, needs {required}",
                client + 1
            ),
            BeforeRelease {
                client,
                start,
                release,
            } => write!(
                f,
                "T2 of client {} starts at {start} before release {release}",
                client + 1
            ),
            BeforeDelay {
                client,
                start,
                earliest,
            } => write!(
                f,
                "T4 of client {} starts at {start} before T2-end + delay = {earliest}",
                client + 1
            ),
            Overlap {
                helper,
                first,
                second,
            } => write!(
                f,
                "helper {} runs {} of client {} and {} of client {} at the same time",
                helper + 1,
                first.1,
                first.0 + 1,
                second.1,
                second.0 + 1
            ),
            Completion {
                client,
                stated,
                actual,
            } => write!(
                f,
                "client {} completion stated {stated}, actual {actual}",
                client + 1
            ),
            Makespan { stated, actual } => write!(f, "makespan stated {stated}, actual {actual}"),
        }
    }
}

#[derive(Default, Clone, Copy)]
struct TaskSpan {
    pieces: usize,
    total: Slot,
    first_start: Slot,
    last_end: Slot,
}

impl TaskSpan {
    fn add(&mut self, iv: &Interval) {
        if self.pieces == 0 {
            self.first_start = iv.start;
            self.last_end = iv.end;
        } else {
            self.first_start = self.first_start.min(iv.start);
            self.last_end = self.last_end.max(iv.end);
        }
        self.pieces += 1;
        self.total += iv.len();
    }
}

/// Checks every schedule invariant against `instance` and `assignment`.
///
/// Tasks may be split into several intervals; the pieces must add up to
/// the task duration and all T4 pieces must start after the last T2 piece
/// ends plus the client's delay.
pub fn validate_schedule(
    instance: &Instance,
    assignment: &Assignment,
    schedule: &Schedule,
) -> Result<(), Vec<ScheduleViolation>> {
    use ScheduleViolation::*;

    let (nj, ni) = (instance.num_clients(), instance.num_helpers());
    let mut violations = Vec::new();
    if schedule.completion.len() != nj {
        violations.push(CompletionCount {
            expected: nj,
            found: schedule.completion.len(),
        });
    }

    let mut spans = vec![[TaskSpan::default(); 2]; nj];
    for (idx, iv) in schedule.intervals.iter().enumerate() {
        if iv.client >= nj || iv.helper >= ni {
            violations.push(OutOfRange { interval: idx });
            continue;
        }
        if iv.end < iv.start {
            violations.push(Reversed { interval: idx });
            continue;
        }
        let assigned = assignment.helper_of(iv.client);
        if iv.helper != assigned {
            violations.push(WrongHelper {
                client: iv.client,
                kind: iv.kind,
                helper: iv.helper,
                assigned,
            });
        }
        spans[iv.client][iv.kind as usize].add(iv);
        if iv.kind == TaskKind::T2 && iv.start < instance.release(iv.client) {
            violations.push(BeforeRelease {
                client: iv.client,
                start: iv.start,
                release: instance.release(iv.client),
            });
        }
    }

    let mut actual_completion = vec![0; nj];
    for j in 0..nj {
        let helper = assignment.helper_of(j);
        let [t2, t4] = spans[j];
        for (kind, span, required) in [
            (TaskKind::T2, t2, instance.t2(j, helper)),
            (TaskKind::T4, t4, instance.t4(j, helper)),
        ] {
            if span.pieces == 0 {
                violations.push(MissingTask { client: j, kind });
            } else if span.total != required {
                violations.push(Duration {
                    client: j,
                    kind,
                    scheduled: span.total,
                    required,
                });
            }
        }
        if t2.pieces > 0 && t4.pieces > 0 {
            let earliest = t2.last_end + instance.t3_delay(j);
            if t4.first_start < earliest {
                violations.push(BeforeDelay {
                    client: j,
                    start: t4.first_start,
                    earliest,
                });
            }
        }
        if t4.pieces > 0 {
            actual_completion[j] = t4.last_end + instance.t5(j);
            if let Some(&stated) = schedule.completion.get(j) {
                if stated != actual_completion[j] {
                    violations.push(Completion {
                        client: j,
                        stated,
                        actual: actual_completion[j],
                    });
                }
            }
        }
    }

    for helper in 0..ni {
        let timeline: Vec<&Interval> = schedule
            .intervals
            .iter()
            .filter(|iv| iv.helper == helper && iv.client < nj && !iv.is_empty() && iv.end >= iv.start)
            .collect();
        let mut sorted = timeline;
        sorted.sort_by_key(|iv| (iv.start, iv.end));
        let mut frontier: Option<&Interval> = None;
        for iv in sorted {
            if let Some(prev) = frontier {
                if iv.start < prev.end {
                    violations.push(Overlap {
                        helper,
                        first: (prev.client, prev.kind),
                        second: (iv.client, iv.kind),
                    });
                }
                if iv.end > prev.end {
                    frontier = Some(iv);
                }
            } else {
                frontier = Some(iv);
            }
        }
    }

    let actual = actual_completion.iter().copied().max().unwrap_or(0);
    if actual != schedule.makespan {
        violations.push(Makespan {
            stated: schedule.makespan,
            actual,
        });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MakespanError {
    #[error("schedule does not cover every client")]
    Incomplete,
    #[error("infeasible assignment: {}", join(.0))]
    Assignment(Vec<AssignmentViolation>),
    #[error("invalid schedule: {}", join(.0))]
    Schedule(Vec<ScheduleViolation>),
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Makespan `max_j c_j` of a schedule, after validating it against the
/// assignment it implies.
pub fn compute_makespan(instance: &Instance, schedule: &Schedule) -> Result<Slot, MakespanError> {
    if instance.num_clients() == 0 {
        return if schedule.intervals.is_empty() {
            Ok(0)
        } else {
            Err(MakespanError::Schedule(vec![ScheduleViolation::OutOfRange { interval: 0 }]))
        };
    }
    let assignment = schedule
        .implied_assignment(instance.num_clients())
        .ok_or(MakespanError::Incomplete)?;
    validate_assignment(instance, &assignment).map_err(MakespanError::Assignment)?;
    validate_schedule(instance, &assignment, schedule).map_err(MakespanError::Schedule)?;
    Ok(schedule.completion.iter().copied().max().unwrap_or(0))
}
