//! 2-approximation for generalized assignment with cardinality caps.
//!
//! Minimizes the maximum helper load `sum p*_ij` over client-helper
//! assignments that respect adjacency and allow at most `M_i` clients on
//! helper `i`, where `p*_ij = p_ij + p'_ij`. The fractional relaxation at a
//! candidate target `T` is solved as an LP and rounded by filling unit slots
//! per helper in non-increasing `p*` order and matching clients to slots.

use thiserror::Error;

use crate::lp::{lp_solve, LinearProgram, LpError, LpStatus, Relation};
use crate::model::{Assignment, Instance, Slot};

/// Tolerance for checking fractional invariants coming out of the LP.
const FRACTION_TOLERANCE: f64 = 1e-6;
/// Overlaps of a client's mass with a slot below this are ignored.
const SLOT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GapError {
    #[error("no feasible client-helper assignment exists under cardinality and adjacency constraints")]
    NoFeasibleAssignment,
    #[error("fractional assignment is invalid: {0}")]
    InvalidFraction(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A fractional solution of the relaxation at load target `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssignment {
    num_helpers: usize,
    /// Client-major `J x I` values in `[0, 1]`.
    x: Vec<f64>,
    pub target: Slot,
}

impl FractionalAssignment {
    pub fn new(num_clients: usize, num_helpers: usize, x: Vec<f64>, target: Slot) -> Result<Self, GapError> {
        if x.len() != num_clients * num_helpers {
            return Err(GapError::InvalidFraction(format!(
                "{} values for {num_clients} clients and {num_helpers} helpers",
                x.len()
            )));
        }
        Ok(Self { num_helpers, x, target })
    }

    /// Wraps an integral assignment.
    pub fn from_assignment(instance: &Instance, a: &Assignment, target: Slot) -> Self {
        let ni = instance.num_helpers();
        let mut x = vec![0.0; instance.num_clients() * ni];
        for j in instance.clients() {
            x[j * ni + a.helper_of(j)] = 1.0;
        }
        Self { num_helpers: ni, x, target }
    }

    pub fn x(&self, client: usize, helper: usize) -> f64 {
        self.x[client * self.num_helpers + helper]
    }

    /// Checks the relaxation constraints against `instance`.
    pub fn check(&self, instance: &Instance) -> Result<(), GapError> {
        let bad = |msg: String| Err(GapError::InvalidFraction(msg));
        if self.x.len() != instance.num_clients() * instance.num_helpers() {
            return bad("shape does not match the instance".into());
        }
        let tol = FRACTION_TOLERANCE;
        for j in instance.clients() {
            let mut total = 0.0;
            for i in instance.helpers() {
                let v = self.x(j, i);
                if !(-tol..=1.0 + tol).contains(&v) {
                    return bad(format!("x[{},{}] = {v} outside [0,1]", j + 1, i + 1));
                }
                if v > tol && (!instance.is_edge(j, i) || instance.combined(j, i) > self.target) {
                    return bad(format!("x[{},{}] = {v} on a forbidden pair", j + 1, i + 1));
                }
                total += v;
            }
            if (total - 1.0).abs() > tol {
                return bad(format!("client {} is covered {total} times", j + 1));
            }
        }
        for i in instance.helpers() {
            let count: f64 = instance.clients().map(|j| self.x(j, i)).sum();
            if count > instance.capacity(i) as f64 + tol {
                return bad(format!("helper {} receives {count} > {} clients", i + 1, instance.capacity(i)));
            }
            let load: f64 = instance
                .clients()
                .map(|j| self.x(j, i) * instance.combined(j, i) as f64)
                .sum();
            if load > self.target as f64 * (1.0 + tol) + tol {
                return bad(format!("helper {} load {load} > target {}", i + 1, self.target));
            }
        }
        Ok(())
    }
}

/// Solves the relaxation at load target `target`; `None` means infeasible.
pub fn lp_feasible(instance: &Instance, target: Slot) -> Result<Option<FractionalAssignment>, GapError> {
    let (nj, ni) = (instance.num_clients(), instance.num_helpers());
    let mut vars = Vec::new();
    for j in 0..nj {
        let before = vars.len();
        vars.extend(
            instance
                .neighbors(j)
                .filter(|&i| instance.combined(j, i) <= target)
                .map(|i| (j, i)),
        );
        if vars.len() == before {
            return Ok(None);
        }
    }

    let mut lp = LinearProgram::new(vars.len());
    for v in 0..vars.len() {
        lp.set_bounds(v, 0.0, 1.0)?;
    }
    for j in 0..nj {
        let row = vars.iter().map(|&(c, _)| if c == j { 1.0 } else { 0.0 }).collect();
        lp.add_constraint(row, Relation::Eq, 1.0)?;
    }
    for i in 0..ni {
        let row = vars.iter().map(|&(_, h)| if h == i { 1.0 } else { 0.0 }).collect();
        lp.add_constraint(row, Relation::Le, instance.capacity(i) as f64)?;
        let row = vars
            .iter()
            .map(|&(c, h)| if h == i { instance.combined(c, h) as f64 } else { 0.0 })
            .collect();
        lp.add_constraint(row, Relation::Le, target as f64)?;
    }

    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut x = vec![0.0; nj * ni];
    for (&(j, i), v) in vars.iter().zip(sol.values.expect("optimal solutions carry values")) {
        x[j * ni + i] = v;
    }
    let fa = FractionalAssignment::new(nj, ni, x, target)?;
    fa.check(instance)?;
    Ok(Some(fa))
}

/// Rounds a fractional solution to an integral assignment with at most
/// `M_i` clients per helper and load at most `target + max p*` per helper.
pub fn round_assignment(fa: &FractionalAssignment, instance: &Instance) -> Result<Assignment, GapError> {
    fa.check(instance)?;
    let slots = SlotGraph::build(fa, instance);
    slots
        .match_clients(SLOT_EPSILON)
        .or_else(|| slots.match_clients(0.0))
        .map(Assignment::new)
        .ok_or_else(|| GapError::InvalidFraction("no client-slot matching exists".into()))
}

struct SlotGraph {
    /// Helper of each slot.
    slot_helper: Vec<usize>,
    /// Per client: (slot, overlap mass), in slot order.
    edges: Vec<Vec<(usize, f64)>>,
}

impl SlotGraph {
    fn build(fa: &FractionalAssignment, instance: &Instance) -> Self {
        let mut slot_helper = Vec::new();
        let mut edges = vec![Vec::new(); instance.num_clients()];
        for i in instance.helpers() {
            if instance.capacity(i) == 0 {
                continue;
            }
            let mut support: Vec<(usize, f64)> = instance
                .clients()
                .filter(|&j| instance.is_edge(j, i) && instance.combined(j, i) <= fa.target)
                .map(|j| (j, fa.x(j, i)))
                .filter(|&(_, v)| v > 0.0)
                .collect();
            support.sort_by(|a, b| {
                instance
                    .combined(b.0, i)
                    .cmp(&instance.combined(a.0, i))
                    .then(a.0.cmp(&b.0))
            });
            let mass: f64 = support.iter().map(|s| s.1).sum();
            let count = ((mass - FRACTION_TOLERANCE).ceil().max(1.0) as u64).min(instance.capacity(i)) as usize;
            if support.is_empty() {
                continue;
            }
            let first = slot_helper.len();
            slot_helper.extend(std::iter::repeat_n(i, count));
            let mut cum = 0.0;
            for (j, v) in support {
                let (lo, hi) = (cum, cum + v);
                let mut k = lo.floor() as usize;
                while (k as f64) < hi {
                    let overlap = hi.min(k as f64 + 1.0) - lo.max(k as f64);
                    let slot = first + k.min(count - 1);
                    match edges[j].last_mut() {
                        Some((s, m)) if *s == slot => *m += overlap,
                        _ => edges[j].push((slot, overlap)),
                    }
                    k += 1;
                }
                cum = hi;
            }
        }
        Self { slot_helper, edges }
    }

    /// Maximum bipartite matching by augmenting paths, clients in index order.
    fn match_clients(&self, min_overlap: f64) -> Option<Vec<usize>> {
        let adj: Vec<Vec<usize>> = self
            .edges
            .iter()
            .map(|e| e.iter().filter(|&&(_, m)| m > min_overlap).map(|&(s, _)| s).collect())
            .collect();
        let mut slot_owner: Vec<Option<usize>> = vec![None; self.slot_helper.len()];
        for j in 0..adj.len() {
            let mut visited = vec![false; self.slot_helper.len()];
            if !augment(j, &adj, &mut slot_owner, &mut visited) {
                return None;
            }
        }
        let mut helper_of = vec![usize::MAX; adj.len()];
        for (slot, owner) in slot_owner.iter().enumerate() {
            if let Some(j) = owner {
                helper_of[*j] = self.slot_helper[slot];
            }
        }
        Some(helper_of)
    }
}

fn augment(j: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    for &s in &adj[j] {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let free = match owner[s] {
            None => true,
            Some(other) => augment(other, adj, owner, visited),
        };
        if free {
            owner[s] = Some(j);
            return true;
        }
    }
    false
}

/// Result of [`gapcc_assign`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapAssignment {
    pub assignment: Assignment,
    /// Least integral target with a feasible relaxation; a lower bound on
    /// the optimal maximum load.
    pub certified_target: Slot,
}

/// Binary search for the least feasible target, then rounding at it.
///
/// Demands are ignored: helper `i` may receive up to `M_i` clients.
pub fn gapcc_assign(instance: &Instance) -> Result<GapAssignment, GapError> {
    let upper: Slot = instance
        .clients()
        .map(|j| instance.neighbors(j).map(|i| instance.combined(j, i)).max().unwrap_or(0))
        .sum();
    let Some(mut best) = lp_feasible(instance, upper)? else {
        return Err(GapError::NoFeasibleAssignment);
    };
    // Every client needs at least one pair with p* <= T.
    let mut lo = instance
        .clients()
        .map(|j| instance.neighbors(j).map(|i| instance.combined(j, i)).min().unwrap_or(0))
        .max()
        .unwrap_or(0);
    let mut hi = upper;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match lp_feasible(instance, mid)? {
            Some(fa) => {
                hi = mid;
                best = fa;
            }
            None => lo = mid + 1,
        }
    }
    if best.target != hi {
        best = lp_feasible(instance, hi)?.ok_or(GapError::NoFeasibleAssignment)?;
    }
    let assignment = round_assignment(&best, instance)?;
    Ok(GapAssignment {
        assignment,
        certified_target: hi,
    })
}
