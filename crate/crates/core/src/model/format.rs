//! JSON instance and schedule files (1-based indices).
//!
//! ```json
//! {
//!   "clients": 2, "helpers": 2,
//!   "edges": "complete",
//!   "capacity": [1, 2],
//!   "demand": [1, 2],
//!   "release": [0, 0],
//!   "t3_delay": [5, 0],
//!   "t5_time": [0, 0],
//!   "t2_time": [[1, 1], [1, 1]],
//!   "t4_time": [[1, 1], [1, 1]]
//! }
//! ```
//!
//! `edges` is either `"complete"` or a list of `[client, helper]` pairs.
//! Table entries of non-edges are ignored and may be `null`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Assignment, Instance, InstanceError, Interval, Schedule, Slot, TaskKind};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}` is negative ({value})")]
    Negative { field: String, value: i64 },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("missing duration for edge ({client},{helper}) in `{table}`")]
    MissingDuration {
        table: &'static str,
        client: usize,
        helper: usize,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return FormatError::Io(e.into());
        }
        FormatError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum EdgeList {
    Keyword(String),
    Pairs(Vec<[i64; 2]>),
}

fn complete_edges() -> EdgeList {
    EdgeList::Keyword("complete".into())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    clients: i64,
    helpers: i64,
    /// Defaults to the complete bipartite graph.
    #[serde(default = "complete_edges")]
    edges: EdgeList,
    capacity: Vec<i64>,
    demand: Vec<i64>,
    release: Vec<i64>,
    t3_delay: Vec<i64>,
    t5_time: Vec<i64>,
    t2_time: Vec<Vec<Option<i64>>>,
    t4_time: Vec<Vec<Option<i64>>>,
}

fn non_negative(field: impl FnOnce() -> String, value: i64) -> Result<u64, FormatError> {
    u64::try_from(value).map_err(|_| FormatError::Negative {
        field: field(),
        value,
    })
}

fn vector(name: &str, values: &[i64], expected: usize) -> Result<Vec<u64>, FormatError> {
    if values.len() != expected {
        return Err(FormatError::Field {
            field: name.to_string(),
            message: format!("expected {expected} entries, found {}", values.len()),
        });
    }
    values
        .iter()
        .enumerate()
        .map(|(k, &v)| non_negative(|| format!("{name}[{}]", k + 1), v))
        .collect()
}

fn table(
    name: &'static str,
    rows: &[Vec<Option<i64>>],
    adjacency: &[Vec<bool>],
) -> Result<Vec<Vec<u64>>, FormatError> {
    if rows.len() != adjacency.len() {
        return Err(FormatError::Field {
            field: name.to_string(),
            message: format!("expected {} rows, found {}", adjacency.len(), rows.len()),
        });
    }
    let mut out = Vec::with_capacity(rows.len());
    for (j, (row, adj)) in rows.iter().zip(adjacency).enumerate() {
        if row.len() > adj.len() {
            return Err(FormatError::Field {
                field: format!("{name}[{}]", j + 1),
                message: format!("expected at most {} entries, found {}", adj.len(), row.len()),
            });
        }
        let mut parsed = vec![0; adj.len()];
        for (i, &is_edge) in adj.iter().enumerate() {
            match row.get(i).copied().flatten() {
                Some(v) => {
                    let v = non_negative(|| format!("{name}[{}][{}]", j + 1, i + 1), v)?;
                    if is_edge {
                        parsed[i] = v;
                    }
                }
                None if is_edge => {
                    return Err(FormatError::MissingDuration {
                        table: name,
                        client: j + 1,
                        helper: i + 1,
                    })
                }
                None => {}
            }
        }
        out.push(parsed);
    }
    Ok(out)
}

impl InstanceDoc {
    fn into_instance(self) -> Result<Instance, FormatError> {
        let nj = non_negative(|| "clients".into(), self.clients)? as usize;
        let ni = non_negative(|| "helpers".into(), self.helpers)? as usize;
        let mut adjacency = vec![vec![false; ni]; nj];
        match &self.edges {
            EdgeList::Keyword(k) if k == "complete" => {
                adjacency.iter_mut().for_each(|row| row.fill(true));
            }
            EdgeList::Keyword(k) => {
                return Err(FormatError::Field {
                    field: "edges".into(),
                    message: format!("unknown keyword {k:?}, expected \"complete\" or a list of pairs"),
                })
            }
            EdgeList::Pairs(pairs) => {
                for (k, &[j, i]) in pairs.iter().enumerate() {
                    if j < 1 || i < 1 || j as usize > nj || i as usize > ni {
                        return Err(FormatError::Field {
                            field: format!("edges[{}]", k + 1),
                            message: format!("pair [{j},{i}] out of range"),
                        });
                    }
                    adjacency[j as usize - 1][i as usize - 1] = true;
                }
            }
        }
        let t2 = table("t2_time", &self.t2_time, &adjacency)?;
        let t4 = table("t4_time", &self.t4_time, &adjacency)?;
        let edges: Vec<(usize, usize)> = adjacency
            .iter()
            .enumerate()
            .flat_map(|(j, row)| {
                row.iter()
                    .enumerate()
                    .filter_map(move |(i, &a)| a.then_some((j, i)))
            })
            .collect();
        Ok(Instance::builder(nj, ni)
            .edges(edges)
            .capacity(vector("capacity", &self.capacity, ni)?)
            .demand(vector("demand", &self.demand, nj)?)
            .release(vector("release", &self.release, nj)?)
            .t3_delay(vector("t3_delay", &self.t3_delay, nj)?)
            .t5_time(vector("t5_time", &self.t5_time, nj)?)
            .t2_time(t2)
            .t4_time(t4)
            .build()?)
    }

    fn from_instance(inst: &Instance) -> Self {
        let signed = |v: u64| v as i64;
        let edges = if inst.is_complete() {
            EdgeList::Keyword("complete".into())
        } else {
            EdgeList::Pairs(
                inst.clients()
                    .flat_map(|j| inst.neighbors(j).map(move |i| [j as i64 + 1, i as i64 + 1]))
                    .collect(),
            )
        };
        let tab = |f: &dyn Fn(usize, usize) -> Slot| -> Vec<Vec<Option<i64>>> {
            inst.clients()
                .map(|j| {
                    inst.helpers()
                        .map(|i| inst.is_edge(j, i).then(|| signed(f(j, i))))
                        .collect()
                })
                .collect()
        };
        let per_client = |f: &dyn Fn(usize) -> u64| inst.clients().map(|j| signed(f(j))).collect();
        InstanceDoc {
            clients: inst.num_clients() as i64,
            helpers: inst.num_helpers() as i64,
            edges,
            capacity: inst.capacities().iter().map(|&m| signed(m)).collect(),
            demand: per_client(&|j| inst.demand(j)),
            release: per_client(&|j| inst.release(j)),
            t3_delay: per_client(&|j| inst.t3_delay(j)),
            t5_time: per_client(&|j| inst.t5(j)),
            t2_time: tab(&|j, i| inst.t2(j, i)),
            t4_time: tab(&|j, i| inst.t4(j, i)),
        }
    }
}

impl Instance {
    pub fn from_json_str(s: &str) -> Result<Instance, FormatError> {
        serde_json::from_str::<InstanceDoc>(s)?.into_instance()
    }

    pub fn from_reader(r: impl Read) -> Result<Instance, FormatError> {
        serde_json::from_reader::<_, InstanceDoc>(r)?.into_instance()
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&InstanceDoc::from_instance(self))
            .expect("instance documents always serialize");
        s.push('\n');
        s
    }
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, FormatError> {
    let text = std::fs::read_to_string(path)?;
    Instance::from_json_str(&text)
}

pub fn write_instance(path: impl AsRef<Path>, instance: &Instance) -> Result<(), FormatError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(instance.to_json_string().as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct IntervalDoc {
    helper: usize,
    client: usize,
    task: TaskKind,
    start: Slot,
    end: Slot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ScheduleDoc {
    assignment: Vec<usize>,
    intervals: Vec<IntervalDoc>,
    completion: Vec<Slot>,
    makespan: Slot,
}

/// An assignment together with a schedule, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleFile {
    pub assignment: Assignment,
    pub schedule: Schedule,
}

impl ScheduleFile {
    pub fn to_json_string(&self) -> String {
        let doc = ScheduleDoc {
            assignment: self.assignment.as_slice().iter().map(|h| h + 1).collect(),
            intervals: self
                .schedule
                .intervals
                .iter()
                .map(|iv| IntervalDoc {
                    helper: iv.helper + 1,
                    client: iv.client + 1,
                    task: iv.kind,
                    start: iv.start,
                    end: iv.end,
                })
                .collect(),
            completion: self.schedule.completion.clone(),
            makespan: self.schedule.makespan,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("schedule documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Self, FormatError> {
        let doc: ScheduleDoc = serde_json::from_str(s)?;
        let one_based = |field: String, v: usize| {
            v.checked_sub(1).ok_or(FormatError::Field {
                field,
                message: "indices are 1-based".into(),
            })
        };
        let assignment = doc
            .assignment
            .iter()
            .enumerate()
            .map(|(k, &h)| one_based(format!("assignment[{}]", k + 1), h))
            .collect::<Result<Vec<_>, _>>()?;
        let intervals = doc
            .intervals
            .iter()
            .enumerate()
            .map(|(k, iv)| {
                Ok(Interval {
                    helper: one_based(format!("intervals[{}].helper", k + 1), iv.helper)?,
                    client: one_based(format!("intervals[{}].client", k + 1), iv.client)?,
                    kind: iv.task,
                    start: iv.start,
                    end: iv.end,
                })
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(ScheduleFile {
            assignment: Assignment::new(assignment),
            schedule: Schedule {
                intervals,
                completion: doc.completion,
                makespan: doc.makespan,
            },
        })
    }
}

pub fn read_schedule_file(path: impl AsRef<Path>) -> Result<ScheduleFile, FormatError> {
    ScheduleFile::from_json_str(&std::fs::read_to_string(path)?)
}

pub fn write_schedule_file(path: impl AsRef<Path>, file: &ScheduleFile) -> Result<(), FormatError> {
    std::fs::write(path, file.to_json_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "clients": 2, "helpers": 2, "edges": [[1,1],[2,1],[2,2]],
        "capacity": [1, 2], "demand": [1, 2],
        "release": [0, 1], "t3_delay": [5, 0], "t5_time": [0, 2],
        "t2_time": [[1, null], [2, 3]],
        "t4_time": [[1, null], [1, 4]]
    }"#;

    #[test]
    fn parses_and_roundtrips() {
        let inst = Instance::from_json_str(SMALL).unwrap();
        assert!(!inst.is_edge(0, 1));
        assert_eq!(inst.t2(1, 1), 3);
        assert_eq!(inst.combined(1, 1), 7);
        let again = Instance::from_json_str(&inst.to_json_string()).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn negative_duration_names_field() {
        let bad = SMALL.replace("[2, 3]", "[2, -3]");
        let err = Instance::from_json_str(&bad).unwrap_err();
        assert!(matches!(err, FormatError::Negative { ref field, value: -3 } if field == "t2_time[2][2]"));
        assert_eq!(err.to_string(), "field `t2_time[2][2]` is negative (-3)");
    }

    #[test]
    fn missing_edge_duration() {
        let bad = SMALL.replace("[1, 4]", "[1, null]");
        let err = Instance::from_json_str(&bad).unwrap_err();
        assert_eq!(err.to_string(), "missing duration for edge (2,2) in `t4_time`");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = Instance::from_json_str("{\n \"clients\": 2,\n oops }").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn isolated_client_in_file() {
        let bad = SMALL.replace("[[1,1],[2,1],[2,2]]", "[[2,1],[2,2]]");
        let err = Instance::from_json_str(&bad).unwrap_err();
        assert!(matches!(err, FormatError::Instance(InstanceError::IsolatedClient { client: 1 })));
    }

    #[test]
    fn schedule_file_roundtrip() {
        let file = ScheduleFile {
            assignment: Assignment::new(vec![0, 1]),
            schedule: Schedule::new(
                vec![Interval {
                    helper: 1,
                    client: 1,
                    kind: TaskKind::T4,
                    start: 3,
                    end: 5,
                }],
                vec![0, 7],
            ),
        };
        let text = file.to_json_string();
        assert!(text.contains("\"task\": \"T4\""));
        assert_eq!(ScheduleFile::from_json_str(&text).unwrap(), file);
    }
}
