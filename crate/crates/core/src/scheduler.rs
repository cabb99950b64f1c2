//! Start-time assignment under earliness/tardiness costs and slot capacity.
//!
//! Each order i has a due date d_i and a predicted duration ŷ_i. Starting i
//! at slot t costs
//!
//! ```text
//! c_early · max(0, (d_i − t) − ŷ_i) + c_tardy · max(0, ŷ_i − (d_i − t))
//! ```
//!
//! subject to: every order starts exactly once, and the number of orders in
//! progress at any slot t (an order started at t occupies t..t+ceil(ŷ)−1,
//! with a one-slot floor) stays within the per-slot capacity K_t. Capacity
//! is enforced for slots 1..=T; a footprint may run past the horizon.
//!
//! Two exact solvers: brute-force enumeration (the oracle for tests) and a
//! best-first branch-and-bound that assigns orders in due-date order with a
//! capacity-relaxed completion bound.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: usize,
    /// Due slot, 1-based.
    pub due: u32,
    /// Predicted throughput time in days; enters the cost un-rounded.
    pub predicted: f64,
    /// Realized throughput time; evaluation-only.
    pub realized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingInstance {
    pub orders: Vec<Order>,
    /// Number of available slots T; starts range over 1..=T.
    pub horizon: u32,
    /// Per-slot capacity, `capacity[t-1]` for slot t; length T.
    pub capacity: Vec<u32>,
    pub cost_early: f64,
    pub cost_tardy: f64,
}

/// Start-slot assignment, one entry per order (1-based slots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub start_slot: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub schedule: Schedule,
    pub objective: f64,
    /// True when the search proved optimality within its limits.
    pub optimal: bool,
    pub nodes_explored: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub node_cap: u64,
    pub time_cap: Option<Duration>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            node_cap: 2_000_000,
            time_cap: None,
        }
    }
}

impl SchedulingInstance {
    /// Horizon rule used when none is given: max dᵢ + ceil(max ŷᵢ) + 5.
    pub fn default_horizon(dues: &[u32], predicted: &[f64]) -> u32 {
        let max_due = dues.iter().copied().max().unwrap_or(1);
        let max_pred = predicted.iter().cloned().fold(0.0f64, f64::max);
        max_due + max_pred.max(0.0).ceil() as u32 + 5
    }

    pub fn with_uniform_capacity(
        orders: Vec<Order>,
        horizon: u32,
        capacity: u32,
        cost_early: f64,
        cost_tardy: f64,
    ) -> Self {
        SchedulingInstance {
            orders,
            horizon,
            capacity: vec![capacity; horizon as usize],
            cost_early,
            cost_tardy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.orders.is_empty() {
            return Err(Error::EmptyData("instance has no orders"));
        }
        if self.capacity.len() != self.horizon as usize {
            return Err(Error::DimensionMismatch {
                context: "capacity vector",
                expected: self.horizon as usize,
                got: self.capacity.len(),
            });
        }
        if self.cost_early < 0.0 || self.cost_tardy < 0.0 {
            return Err(Error::InvalidConfig("cost rates must be nonnegative".into()));
        }
        for o in &self.orders {
            if o.due < 1 {
                return Err(Error::InvalidConfig(format!(
                    "order {} has due date 0",
                    o.id
                )));
            }
            if o.due > self.horizon {
                return Err(Error::InvalidConfig(format!(
                    "order {} due {} beyond horizon {}",
                    o.id, o.due, self.horizon
                )));
            }
            if !(o.predicted >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "order {} has negative or NaN prediction",
                    o.id
                )));
            }
        }
        Ok(())
    }

    /// Slot footprint length: ceil of the predicted duration, floored at 1.
    pub fn duration_slots(&self, i: usize) -> u32 {
        duration_slots(self.orders[i].predicted)
    }
}

pub fn duration_slots(duration: f64) -> u32 {
    (duration.ceil() as u32).max(1)
}

/// Stable selection of the k orders with the earliest due dates (ties by
/// original position). Returns all orders when k >= m.
pub fn top_k_by_due_date(orders: &[Order], k: usize) -> Vec<Order> {
    let mut idx: Vec<usize> = (0..orders.len()).collect();
    idx.sort_by_key(|&i| (orders[i].due, i));
    idx.truncate(k);
    idx.sort_unstable();
    idx.into_iter().map(|i| orders[i]).collect()
}

/// Cost of starting order i at slot t.
pub fn start_cost(inst: &SchedulingInstance, i: usize, t: u32) -> f64 {
    let o = &inst.orders[i];
    let slack = (o.due as f64 - t as f64) - o.predicted;
    inst.cost_early * slack.max(0.0) + inst.cost_tardy * (-slack).max(0.0)
}

/// Number of orders in progress at slot t: start ≤ t < start + duration.
pub fn occupancy(schedule: &Schedule, durations: &[u32], t: u32) -> u32 {
    schedule
        .start_slot
        .iter()
        .zip(durations)
        .filter(|&(&s, &dur)| s <= t && t < s + dur)
        .count() as u32
}

/// Verifies the capacity constraint under predicted durations.
pub fn check_feasible(inst: &SchedulingInstance, schedule: &Schedule) -> Result<()> {
    if schedule.start_slot.len() != inst.orders.len() {
        return Err(Error::DimensionMismatch {
            context: "schedule length",
            expected: inst.orders.len(),
            got: schedule.start_slot.len(),
        });
    }
    let durations: Vec<u32> = (0..inst.orders.len())
        .map(|i| inst.duration_slots(i))
        .collect();
    for (i, &s) in schedule.start_slot.iter().enumerate() {
        if s < 1 || s > inst.horizon {
            return Err(Error::InvalidConfig(format!(
                "order {} starts at slot {s} outside 1..={}",
                inst.orders[i].id, inst.horizon
            )));
        }
    }
    for t in 1..=inst.horizon {
        let occ = occupancy(schedule, &durations, t);
        if occ > inst.capacity[(t - 1) as usize] {
            return Err(Error::Infeasible(format!(
                "occupancy {occ} exceeds capacity {} at slot {t}",
                inst.capacity[(t - 1) as usize]
            )));
        }
    }
    Ok(())
}

/// Total earliness/tardiness cost of a schedule against realized times.
pub fn realized_cost(
    schedule: &Schedule,
    realized: &[f64],
    due_dates: &[u32],
    cost_early: f64,
    cost_tardy: f64,
) -> f64 {
    schedule
        .start_slot
        .iter()
        .zip(realized)
        .zip(due_dates)
        .map(|((&t, &y), &d)| {
            let slack = (d as f64 - t as f64) - y;
            cost_early * slack.max(0.0) + cost_tardy * (-slack).max(0.0)
        })
        .sum()
}

const BRUTE_FORCE_GUARD: f64 = 1e7;

/// Exhaustive enumeration of feasible assignments; ties broken
/// lexicographically by start vector. Guarded by T^m <= 1e7.
pub fn solve_bruteforce(inst: &SchedulingInstance) -> Result<(Schedule, f64)> {
    inst.validate()?;
    let m = inst.orders.len();
    let t = inst.horizon as f64;
    let size = t.powi(m as i32);
    if size > BRUTE_FORCE_GUARD {
        return Err(Error::SizeGuard {
            size,
            guard: BRUTE_FORCE_GUARD,
        });
    }
    let durations: Vec<u32> = (0..m).map(|i| inst.duration_slots(i)).collect();
    let mut occ = vec![0u32; inst.horizon as usize + 1];
    let mut current = vec![0u32; m];
    let mut best: Option<(Vec<u32>, f64)> = None;

    fn recurse(
        inst: &SchedulingInstance,
        durations: &[u32],
        depth: usize,
        cost_so_far: f64,
        occ: &mut Vec<u32>,
        current: &mut Vec<u32>,
        best: &mut Option<(Vec<u32>, f64)>,
    ) {
        let m = inst.orders.len();
        if depth == m {
            match best {
                Some((_, b)) if cost_so_far >= *b => {}
                _ => *best = Some((current.clone(), cost_so_far)),
            }
            return;
        }
        for t in 1..=inst.horizon {
            let dur = durations[depth];
            let end = (t + dur - 1).min(inst.horizon);
            let fits = (t..=end).all(|s| occ[s as usize] < inst.capacity[(s - 1) as usize]);
            if !fits {
                continue;
            }
            for s in t..=end {
                occ[s as usize] += 1;
            }
            current[depth] = t;
            recurse(
                inst,
                durations,
                depth + 1,
                cost_so_far + start_cost(inst, depth, t),
                occ,
                current,
                best,
            );
            for s in t..=end {
                occ[s as usize] -= 1;
            }
        }
    }

    recurse(inst, &durations, 0, 0.0, &mut occ, &mut current, &mut best);
    match best {
        Some((starts, objective)) => Ok((Schedule { start_slot: starts }, objective)),
        None => Err(Error::Infeasible("no feasible assignment exists".into())),
    }
}

/// Branch order: due date ascending, original position as tie-break.
fn branch_order(inst: &SchedulingInstance) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..inst.orders.len()).collect();
    idx.sort_by_key(|&i| (inst.orders[i].due, i));
    idx
}

struct SearchContext<'a> {
    inst: &'a SchedulingInstance,
    /// Orders in branch order; element k = original index.
    order_of: Vec<usize>,
    durations: Vec<u32>,
    /// costs[k][t-1]: start cost of the k-th branched order at slot t.
    costs: Vec<Vec<f64>>,
    /// Candidate slots per branched order, cheapest first (ties: earliest).
    candidates: Vec<Vec<u32>>,
    /// suffix_min[k] = Σ_{j >= k} min_t costs[j][t] (capacity-relaxed).
    suffix_min: Vec<f64>,
}

impl<'a> SearchContext<'a> {
    fn new(inst: &'a SchedulingInstance) -> Self {
        let order_of = branch_order(inst);
        let t_max = inst.horizon;
        let mut costs = Vec::with_capacity(order_of.len());
        let mut candidates = Vec::with_capacity(order_of.len());
        for &i in &order_of {
            let row: Vec<f64> = (1..=t_max).map(|t| start_cost(inst, i, t)).collect();
            let mut slots: Vec<u32> = (1..=t_max).collect();
            slots.sort_by(|&a, &b| {
                row[(a - 1) as usize]
                    .total_cmp(&row[(b - 1) as usize])
                    .then(a.cmp(&b))
            });
            costs.push(row);
            candidates.push(slots);
        }
        let mut suffix_min = vec![0.0; order_of.len() + 1];
        for k in (0..order_of.len()).rev() {
            let min = costs[k].iter().cloned().fold(f64::INFINITY, f64::min);
            suffix_min[k] = suffix_min[k + 1] + min;
        }
        let durations = order_of
            .iter()
            .map(|&i| duration_slots(inst.orders[i].predicted))
            .collect();
        SearchContext {
            inst,
            order_of,
            durations,
            costs,
            candidates,
            suffix_min,
        }
    }

    fn footprint_fits(&self, occ: &[u16], t: u32, dur: u32) -> bool {
        let end = (t + dur - 1).min(self.inst.horizon);
        (t..=end).all(|s| (occ[(s - 1) as usize] as u32) < self.inst.capacity[(s - 1) as usize])
    }

    fn place(&self, occ: &mut [u16], t: u32, dur: u32) {
        let end = (t + dur - 1).min(self.inst.horizon);
        for s in t..=end {
            occ[(s - 1) as usize] += 1;
        }
    }

    /// Greedy incumbent: in branch order, cheapest feasible slot.
    fn greedy(&self) -> Option<(Vec<u32>, f64)> {
        let mut occ = vec![0u16; self.inst.horizon as usize];
        let mut starts = vec![0u32; self.order_of.len()];
        let mut cost = 0.0;
        for k in 0..self.order_of.len() {
            let dur = self.durations[k];
            let slot = self.candidates[k]
                .iter()
                .copied()
                .find(|&t| self.footprint_fits(&occ, t, dur))?;
            self.place(&mut occ, slot, dur);
            starts[k] = slot;
            cost += self.costs[k][(slot - 1) as usize];
        }
        Some((starts, cost))
    }
}

struct Node {
    bound: f64,
    cost: f64,
    depth: usize,
    seq: u64,
    starts: Vec<u32>,
    occ: Vec<u16>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Node {}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; reverse so the smallest bound pops
        // first, deeper nodes first on ties, then insertion order.
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first branch-and-bound. Assigns orders in due-date order; the lower
/// bound is the accumulated cost plus each unassigned order's cheapest slot
/// ignoring capacity. The incumbent starts from the greedy heuristic.
/// Returns the proven optimum when the search exhausts within limits, else
/// the best incumbent with `optimal = false`.
pub fn solve_branch_and_bound(
    inst: &SchedulingInstance,
    limits: SolveLimits,
) -> Result<SolveOutcome> {
    inst.validate()?;
    // Cheap necessary condition; search still detects residual infeasibility.
    let total_capacity: u64 = inst.capacity.iter().map(|&k| k as u64).sum();
    if total_capacity < inst.orders.len() as u64 {
        return Err(Error::Infeasible(format!(
            "total capacity {total_capacity} cannot host {} starts",
            inst.orders.len()
        )));
    }
    let ctx = SearchContext::new(inst);
    let m = ctx.order_of.len();
    let start_time = Instant::now();

    let mut incumbent: Option<(Vec<u32>, f64)> = ctx.greedy();
    let mut incumbent_cost = incumbent.as_ref().map_or(f64::INFINITY, |(_, c)| *c);

    let mut heap = std::collections::BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(Node {
        bound: ctx.suffix_min[0],
        cost: 0.0,
        depth: 0,
        seq,
        starts: Vec::new(),
        occ: vec![0u16; inst.horizon as usize],
    });
    let push_cap = limits.node_cap.saturating_mul(8).max(1 << 20);
    let mut pushed = 1u64;
    let mut explored = 0u64;
    let mut proven = false;

    loop {
        let Some(node) = heap.pop() else {
            // Frontier exhausted: the incumbent (if any) is optimal.
            proven = true;
            break;
        };
        if node.bound >= incumbent_cost - 1e-12 {
            // Heap minimum can no longer improve on the incumbent.
            proven = true;
            break;
        }
        explored += 1;
        if explored > limits.node_cap
            || pushed > push_cap
            || limits
                .time_cap
                .map_or(false, |cap| start_time.elapsed() > cap)
        {
            explored -= 1;
            break;
        }
        if node.depth == m {
            if node.cost < incumbent_cost {
                incumbent_cost = node.cost;
                incumbent = Some((node.starts.clone(), node.cost));
            }
            continue;
        }
        let k = node.depth;
        let dur = ctx.durations[k];
        for &t in &ctx.candidates[k] {
            let c = ctx.costs[k][(t - 1) as usize];
            let child_bound = node.cost + c + ctx.suffix_min[k + 1];
            if child_bound >= incumbent_cost - 1e-12 {
                // Candidates are cost-sorted; later ones only get worse.
                break;
            }
            if !ctx.footprint_fits(&node.occ, t, dur) {
                continue;
            }
            let mut occ = node.occ.clone();
            ctx.place(&mut occ, t, dur);
            let mut starts = node.starts.clone();
            starts.push(t);
            seq += 1;
            pushed += 1;
            heap.push(Node {
                bound: child_bound,
                cost: node.cost + c,
                depth: k + 1,
                seq,
                starts,
                occ,
            });
        }
    }

    match incumbent {
        None => Err(Error::Infeasible(
            "no feasible schedule found by search".into(),
        )),
        Some((starts_branch_order, objective)) => {
            let mut start_slot = vec![0u32; m];
            for (k, &orig) in ctx.order_of.iter().enumerate() {
                start_slot[orig] = starts_branch_order[k];
            }
            Ok(SolveOutcome {
                schedule: Schedule { start_slot },
                objective,
                optimal: proven,
                nodes_explored: explored,
            })
        }
    }
}

/// Instance with predictions replaced by realized throughput times.
/// Requires every order to carry a realized value.
pub fn oracle_instance(inst: &SchedulingInstance) -> Result<SchedulingInstance> {
    let orders: Result<Vec<Order>> = inst
        .orders
        .iter()
        .map(|o| {
            let realized = o.realized.ok_or(Error::EmptyData(
                "oracle scheduling needs realized throughput times",
            ))?;
            Ok(Order {
                predicted: realized,
                ..*o
            })
        })
        .collect();
    Ok(SchedulingInstance {
        orders: orders?,
        horizon: inst.horizon,
        capacity: inst.capacity.clone(),
        cost_early: inst.cost_early,
        cost_tardy: inst.cost_tardy,
    })
}

/// Solves with ŷ := realized y; the realized cost of this schedule is the
/// reference floor against which prediction-driven schedules are compared.
pub fn oracle_schedule(inst: &SchedulingInstance, limits: SolveLimits) -> Result<SolveOutcome> {
    solve_branch_and_bound(&oracle_instance(inst)?, limits)
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    horizon: Option<u32>,
    capacity: Option<Vec<u32>>,
    capacity_uniform: Option<u32>,
    cost_early: f64,
    cost_tardy: f64,
    #[serde(rename = "order")]
    orders: Vec<Order>,
}

/// Reads a scheduling instance from structured text (TOML). Either a full
/// per-slot `capacity` list or `capacity_uniform` must be present; the
/// horizon defaults to max due + ceil(max predicted) + 5.
pub fn load_instance(path: &Path) -> Result<SchedulingInstance> {
    let body =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: InstanceFile = toml::from_str(&body)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let dues: Vec<u32> = file.orders.iter().map(|o| o.due).collect();
    let preds: Vec<f64> = file.orders.iter().map(|o| o.predicted).collect();
    let horizon = file
        .horizon
        .unwrap_or_else(|| SchedulingInstance::default_horizon(&dues, &preds));
    let capacity = match (file.capacity, file.capacity_uniform) {
        (Some(v), _) => v,
        (None, Some(k)) => vec![k; horizon as usize],
        (None, None) => {
            return Err(Error::parse(
                path.display().to_string(),
                "need `capacity` or `capacity_uniform`",
            ))
        }
    };
    let inst = SchedulingInstance {
        orders: file.orders,
        horizon,
        capacity,
        cost_early: file.cost_early,
        cost_tardy: file.cost_tardy,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn save_instance(inst: &SchedulingInstance, path: &Path) -> Result<()> {
    let file = InstanceFile {
        horizon: Some(inst.horizon),
        capacity: Some(inst.capacity.clone()),
        capacity_uniform: None,
        cost_early: inst.cost_early,
        cost_tardy: inst.cost_tardy,
        orders: inst.orders.clone(),
    };
    let body = toml::to_string_pretty(&file)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Schedule as structured text: objective, optimality flag, per-order rows.
pub fn format_schedule_text(inst: &SchedulingInstance, outcome: &SolveOutcome) -> String {
    let mut s = format!(
        "objective = {}\noptimal = {}\n",
        outcome.objective, outcome.optimal
    );
    for (i, o) in inst.orders.iter().enumerate() {
        s.push_str(&format!(
            "order {{ id = {}, start = {}, cost = {} }}\n",
            o.id,
            outcome.schedule.start_slot[i],
            start_cost(inst, i, outcome.schedule.start_slot[i]),
        ));
    }
    s
}

/// Schedule as CSV: id, start slot, start cost.
pub fn write_schedule_csv(
    inst: &SchedulingInstance,
    outcome: &SolveOutcome,
    path: &Path,
) -> Result<()> {
    let mut body = String::from("id,start,cost\n");
    for (i, o) in inst.orders.iter().enumerate() {
        body.push_str(&format!(
            "{},{},{}\n",
            o.id,
            outcome.schedule.start_slot[i],
            start_cost(inst, i, outcome.schedule.start_slot[i])
        ));
    }
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(id: usize, due: u32, predicted: f64) -> Order {
        Order {
            id,
            due,
            predicted,
            realized: None,
        }
    }

    fn uniform(orders: Vec<Order>, horizon: u32, k: u32) -> SchedulingInstance {
        SchedulingInstance::with_uniform_capacity(orders, horizon, k, 1.0, 1.0)
    }

    #[test]
    fn top_k_returns_all_when_small() {
        let orders = vec![order(0, 3, 1.0), order(1, 1, 1.0), order(2, 2, 1.0)];
        let picked = top_k_by_due_date(&orders, 100);
        assert_eq!(picked.len(), 3);
    }

    #[test]
    fn top_k_selects_earliest_dues() {
        let orders = vec![order(0, 5, 1.0), order(1, 2, 1.0), order(2, 9, 1.0)];
        let picked = top_k_by_due_date(&orders, 2);
        assert_eq!(picked.iter().map(|o| o.id).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn top_k_breaks_ties_by_position() {
        let orders = vec![order(7, 2, 1.0), order(8, 2, 1.0)];
        let picked = top_k_by_due_date(&orders, 1);
        assert_eq!(picked[0].id, 7);
    }

    #[test]
    fn start_cost_examples() {
        let inst = uniform(vec![order(0, 10, 7.0)], 12, 1);
        assert_eq!(start_cost(&inst, 0, 3), 0.0);
        assert_eq!(start_cost(&inst, 0, 1), 2.0);
        let mut pricier = inst.clone();
        pricier.cost_tardy = 2.0;
        assert_eq!(start_cost(&pricier, 0, 6), 6.0);
    }

    #[test]
    fn occupancy_footprint_uses_ceiling() {
        let schedule = Schedule {
            start_slot: vec![3],
        };
        let durations = [duration_slots(2.4)];
        assert_eq!(durations[0], 3);
        assert_eq!(occupancy(&schedule, &durations, 2), 0);
        assert_eq!(occupancy(&schedule, &durations, 3), 1);
        assert_eq!(occupancy(&schedule, &durations, 4), 1);
        assert_eq!(occupancy(&schedule, &durations, 5), 1);
        assert_eq!(occupancy(&schedule, &durations, 6), 0);
    }

    #[test]
    fn occupancy_empty_schedule() {
        let schedule = Schedule { start_slot: vec![] };
        assert_eq!(occupancy(&schedule, &[], 4), 0);
    }

    #[test]
    fn occupancy_counts_parallel_orders() {
        let schedule = Schedule {
            start_slot: vec![2, 2],
        };
        assert_eq!(occupancy(&schedule, &[1, 1], 2), 2);
    }

    #[test]
    fn bruteforce_single_order_picks_cheapest_slot() {
        let inst = uniform(vec![order(0, 5, 2.0)], 8, 1);
        let (schedule, obj) = solve_bruteforce(&inst).unwrap();
        assert_eq!(schedule.start_slot, vec![3]);
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn bruteforce_two_identical_orders_split_slots() {
        // Both want slot 3 (due 4, duration 1); K=1 forces one to move by 1.
        let inst = uniform(vec![order(0, 4, 1.0), order(1, 4, 1.0)], 4, 1);
        let (schedule, obj) = solve_bruteforce(&inst).unwrap();
        assert_eq!(obj, 1.0);
        // Lexicographically smallest optimum: order 0 at 2, order 1 at 3.
        assert_eq!(schedule.start_slot, vec![2, 3]);
    }

    #[test]
    fn bruteforce_reports_infeasible() {
        let mut inst = uniform(vec![order(0, 2, 1.0), order(1, 2, 1.0)], 2, 1);
        inst.capacity[1] = 0; // only slot 1 usable, two unit orders
        assert!(matches!(solve_bruteforce(&inst), Err(Error::Infeasible(_))));
    }

    #[test]
    fn bruteforce_size_guard() {
        let orders: Vec<Order> = (0..20).map(|i| order(i, 10, 1.0)).collect();
        let inst = uniform(orders, 12, 20);
        assert!(matches!(
            solve_bruteforce(&inst),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn bnb_matches_bruteforce_on_small_instances() {
        // A handful of fixed shapes; the randomized sweep lives in the
        // integration tests.
        let cases = vec![
            uniform(
                vec![order(0, 3, 2.0), order(1, 5, 1.5), order(2, 2, 4.0)],
                7,
                1,
            ),
            uniform(
                vec![order(0, 4, 1.0), order(1, 4, 1.0), order(2, 4, 1.0)],
                6,
                2,
            ),
            uniform(vec![order(0, 2, 3.0), order(1, 6, 2.0)], 8, 1),
        ];
        for inst in cases {
            let (_, expected) = solve_bruteforce(&inst).unwrap();
            let outcome = solve_branch_and_bound(&inst, SolveLimits::default()).unwrap();
            assert!(outcome.optimal);
            assert!(
                (outcome.objective - expected).abs() < 1e-9,
                "bnb {} vs brute {}",
                outcome.objective,
                expected
            );
            check_feasible(&inst, &outcome.schedule).unwrap();
        }
    }

    #[test]
    fn bnb_relaxed_capacity_hits_individual_minima() {
        let orders: Vec<Order> = (0..12)
            .map(|i| order(i, 4 + (i as u32 % 5), 1.0 + i as f64 * 0.3))
            .collect();
        let m = orders.len() as u32;
        let inst = SchedulingInstance::with_uniform_capacity(orders, 20, m, 1.0, 1.0);
        let outcome = solve_branch_and_bound(&inst, SolveLimits::default()).unwrap();
        assert!(outcome.optimal);
        let expected: f64 = (0..inst.orders.len())
            .map(|i| {
                (1..=inst.horizon)
                    .map(|t| start_cost(&inst, i, t))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum();
        assert!((outcome.objective - expected).abs() < 1e-9);
    }

    #[test]
    fn bnb_node_cap_one_returns_greedy_incumbent() {
        let inst = uniform(vec![order(0, 4, 1.0), order(1, 4, 1.0)], 4, 1);
        let limits = SolveLimits {
            node_cap: 1,
            time_cap: None,
        };
        let outcome = solve_branch_and_bound(&inst, limits).unwrap();
        assert!(!outcome.optimal);
        // Greedy in due-date order: order 0 takes its cheapest slot 3,
        // order 1 then pays 1 at slot 2.
        assert_eq!(outcome.objective, 1.0);
        check_feasible(&inst, &outcome.schedule).unwrap();
    }

    #[test]
    fn bnb_detects_infeasibility() {
        let mut inst = uniform(vec![order(0, 2, 1.0), order(1, 2, 1.0)], 2, 1);
        inst.capacity[1] = 0;
        assert!(matches!(
            solve_branch_and_bound(&inst, SolveLimits::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn realized_cost_examples() {
        // Exactly on time: start 2, y 8, due 10.
        let s = Schedule {
            start_slot: vec![2],
        };
        assert_eq!(realized_cost(&s, &[8.0], &[10], 1.0, 1.0), 0.0);
        // Three days late.
        assert_eq!(realized_cost(&s, &[11.0], &[10], 1.0, 1.0), 3.0);
        // Early at rate 2.
        assert_eq!(realized_cost(&s, &[5.0], &[10], 2.0, 1.0), 6.0);
    }

    #[test]
    fn oracle_equals_solver_objective_when_predictions_true() {
        let orders = vec![
            Order {
                id: 0,
                due: 5,
                predicted: 2.0,
                realized: Some(2.0),
            },
            Order {
                id: 1,
                due: 3,
                predicted: 1.0,
                realized: Some(1.0),
            },
        ];
        let inst = uniform(orders, 8, 2);
        let outcome = solve_branch_and_bound(&inst, SolveLimits::default()).unwrap();
        let oracle = oracle_schedule(&inst, SolveLimits::default()).unwrap();
        assert_eq!(outcome.objective, oracle.objective);
        let realized: Vec<f64> = inst.orders.iter().map(|o| o.realized.unwrap()).collect();
        let dues: Vec<u32> = inst.orders.iter().map(|o| o.due).collect();
        let rc = realized_cost(&oracle.schedule, &realized, &dues, 1.0, 1.0);
        assert!((rc - oracle.objective).abs() < 1e-9);
    }

    #[test]
    fn oracle_requires_realized_values() {
        let inst = uniform(vec![order(0, 3, 1.0)], 5, 1);
        assert!(oracle_schedule(&inst, SolveLimits::default()).is_err());
    }

    #[test]
    fn instance_file_roundtrip() {
        let inst = SchedulingInstance {
            orders: vec![
                Order {
                    id: 0,
                    due: 5,
                    predicted: 2.5,
                    realized: Some(3.0),
                },
                Order {
                    id: 1,
                    due: 3,
                    predicted: 1.0,
                    realized: None,
                },
            ],
            horizon: 9,
            capacity: vec![2; 9],
            cost_early: 1.0,
            cost_tardy: 2.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.toml");
        save_instance(&inst, &path).unwrap();
        let back = load_instance(&path).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn schedule_csv_written() {
        let inst = uniform(vec![order(0, 5, 2.0)], 8, 1);
        let outcome = solve_branch_and_bound(&inst, SolveLimits::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schedule.csv");
        write_schedule_csv(&inst, &outcome, &path).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("id,start,cost\n"));
        assert!(body.lines().count() == 2);
    }
}
