//! Space-time A* over `(cell, half-tick)` nodes against the shared ledger.
//!
//! Cost is arrival time, so `g` is the node's half-tick and the heuristic is
//! straight-line distance divided by the top speed (the cardinal rate: the
//! 1.5x diagonal surcharge makes diagonals the slower gait per meter).
//! The heuristic is consistent, so the first pop of the goal cell is
//! optimal. Ties break on deeper time first, then cell order, keeping the
//! search fully deterministic.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::hash::BuildHasherDefault;

use super::grid::{kind_of, Cell, GridSpec, DIRECTIONS};
use super::reservation::{PackedHasher, PlanStep, ReservationTable};
use crate::error::{Error, Result};
use crate::planner::grid::MoveKind;

/// Search cutoffs: how far ahead (in half-ticks) a plan may reach and how
/// many expansions to spend before declaring failure.
#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub horizon: u32,
    pub node_budget: usize,
}

impl SearchLimits {
    pub fn for_grid(grid: &GridSpec) -> Self {
        SearchLimits {
            horizon: 24 * grid.cells.max(8),
            node_budget: 400_000,
        }
    }
}

#[derive(PartialEq)]
struct OpenNode {
    f: f64,
    t: u32,
    cell: Cell,
}

impl Eq for OpenNode {}

impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the maximum: invert f so the smallest estimate
        // wins, preferring deeper (later-t) nodes on ties
        other
            .f
            .total_cmp(&self.f)
            .then(self.t.cmp(&other.t))
            .then(other.cell.x.cmp(&self.cell.x))
            .then(other.cell.y.cmp(&self.cell.y))
    }
}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[inline]
fn state_key(t: u32, cell: Cell) -> u64 {
    ((t as u64) << 28) | ((cell.y as u64) << 14) | (cell.x as u64)
}

type FastSet = HashSet<u64, BuildHasherDefault<PackedHasher>>;
type FastMap<V> = HashMap<u64, V, BuildHasherDefault<PackedHasher>>;

/// Outcome counters, reported alongside the path for cost accounting.
#[derive(Clone, Copy, Debug, Default)]
pub struct SearchStats {
    pub expanded: u64,
}

/// Is a one-half-tick wait at `cell` starting at `t` compatible with every
/// committed plan?
pub fn wait_is_legal(table: &ReservationTable, agent: usize, t: u32, cell: Cell) -> bool {
    table.free_for(agent, t + 1, cell) && table.cone_free_for(agent, t + 1, cell)
}

fn move_is_legal(
    table: &ReservationTable,
    grid: &GridSpec,
    agent: usize,
    src: Cell,
    dst: Cell,
    dir: (i32, i32),
    t: u32,
    cost: u32,
) -> bool {
    let arrive = t + cost;
    // arrival cell free and outside every active cone
    if !table.free_for(agent, arrive, dst) || !table.cone_free_for(agent, arrive, dst) {
        return false;
    }
    // the mover keeps its source cell mid-transit and must not sit inside
    // another mover's cone there
    for tau in (t + 1)..arrive {
        if !table.free_for(agent, tau, src) || !table.cone_free_for(agent, tau, src) {
            return false;
        }
    }
    // the mover's own cone must be clear of committed occupants while it
    // moves forward
    for tau in t..arrive {
        for &off in table.cone().offsets(dir) {
            if let Some(c) = grid.wrap(Cell::new(src.x + off.0, src.y + off.1)) {
                if !table.free_for(agent, tau, c) {
                    return false;
                }
            }
        }
    }
    true
}

/// Plan a path for one agent from `(start, start_time)` to `goal cell`,
/// avoiding every reservation already in the ledger. Returns the node
/// sequence including the start node. The caller commits it.
pub fn plan_path(
    agent: usize,
    start: Cell,
    goal: Cell,
    start_time: u32,
    table: &ReservationTable,
    grid: &GridSpec,
    limits: SearchLimits,
    stats: &mut SearchStats,
) -> Result<Vec<PlanStep>> {
    if !grid.contains(start) || !grid.contains(goal) {
        return Err(Error::invalid("start or goal outside the grid"));
    }
    if let Some(other) = table.occupant(start_time, start) {
        if other != agent {
            return Err(Error::invalid(format!(
                "start cell reserved by agent {other} at t = {start_time}"
            )));
        }
    }

    // half-ticks per cell width at cardinal speed
    let h = |cell: Cell| 2.0 * grid.center_distance(cell, goal) / grid.cell_width;

    let mut open = BinaryHeap::new();
    let mut closed = FastSet::default();
    let mut parents: FastMap<(u64, MoveKind)> = FastMap::default();
    open.push(OpenNode {
        f: start_time as f64 + h(start),
        t: start_time,
        cell: start,
    });

    let mut expanded = 0usize;
    while let Some(node) = open.pop() {
        let key = state_key(node.t, node.cell);
        if !closed.insert(key) {
            continue;
        }
        if node.cell == goal {
            stats.expanded += expanded as u64;
            return Ok(reconstruct(agent, start, start_time, node.t, node.cell, &parents));
        }
        expanded += 1;
        if expanded > limits.node_budget {
            break;
        }

        let mut push = |t: u32, cell: Cell, kind: MoveKind, parents: &mut FastMap<(u64, MoveKind)>, open: &mut BinaryHeap<OpenNode>| {
            let child = state_key(t, cell);
            if closed.contains(&child) {
                return;
            }
            parents.entry(child).or_insert((key, kind));
            open.push(OpenNode {
                f: t as f64 + h(cell),
                t,
                cell,
            });
        };

        // wait one half-tick
        if node.t + 1 - start_time <= limits.horizon
            && wait_is_legal(table, agent, node.t, node.cell)
        {
            push(node.t + 1, node.cell, MoveKind::Wait, &mut parents, &mut open);
        }

        for dir in DIRECTIONS {
            let Some(dst) = grid.neighbor(node.cell, dir) else {
                continue;
            };
            let kind = kind_of(dir);
            let cost = kind.cost();
            if node.t + cost - start_time > limits.horizon {
                continue;
            }
            if move_is_legal(table, grid, agent, node.cell, dst, dir, node.t, cost) {
                push(node.t + cost, dst, kind, &mut parents, &mut open);
            }
        }
    }

    stats.expanded += expanded as u64;
    Err(Error::PlanFailure(format!(
        "agent {agent}: no path to {goal:?} within horizon {} ({expanded} nodes expanded)",
        limits.horizon
    )))
}

fn reconstruct(
    agent: usize,
    start: Cell,
    start_time: u32,
    goal_t: u32,
    goal_cell: Cell,
    parents: &FastMap<(u64, MoveKind)>,
) -> Vec<PlanStep> {
    let _ = agent;
    let mut steps = Vec::new();
    let mut t = goal_t;
    let mut cell = goal_cell;
    loop {
        let key = state_key(t, cell);
        if t == start_time && cell == start {
            steps.push(PlanStep {
                t,
                cell,
                kind: MoveKind::Wait,
            });
            break;
        }
        let (parent_key, kind) = parents[&key];
        steps.push(PlanStep { t, cell, kind });
        t = (parent_key >> 28) as u32;
        cell = Cell::new((parent_key & 0x3fff) as i32, ((parent_key >> 14) & 0x3fff) as i32);
    }
    steps.reverse();
    steps
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn empty_table(grid: GridSpec, starts: &[Cell]) -> ReservationTable {
        ReservationTable::new(grid, 2.0, 2.0 * PI / 3.0, starts).unwrap()
    }

    #[test]
    fn straight_line_is_three_cardinal_steps() {
        let grid = GridSpec::new(40.0, 1.33, true).unwrap();
        let table = empty_table(grid, &[Cell::new(0, 0)]);
        let mut stats = SearchStats::default();
        let steps = plan_path(
            0,
            Cell::new(0, 0),
            Cell::new(3, 0),
            0,
            &table,
            &grid,
            SearchLimits::for_grid(&grid),
            &mut stats,
        )
        .unwrap();
        assert_eq!(steps.len(), 4);
        // arrival after 3 timestep units = 6 half-ticks
        assert_eq!(steps.last().unwrap().t, 6);
        assert!(steps[1..].iter().all(|s| s.kind == MoveKind::Cardinal));
    }

    #[test]
    fn diagonal_route_costs_one_and_a_half_units_per_step() {
        let grid = GridSpec::new(40.0, 1.33, true).unwrap();
        let table = empty_table(grid, &[Cell::new(0, 0)]);
        let mut stats = SearchStats::default();
        let steps = plan_path(
            0,
            Cell::new(0, 0),
            Cell::new(2, 2),
            0,
            &table,
            &grid,
            SearchLimits::for_grid(&grid),
            &mut stats,
        )
        .unwrap();
        assert_eq!(steps.len(), 3);
        assert_eq!(steps.last().unwrap().t, 6); // 2 diagonals * 1.5 units
        assert!(steps[1..].iter().all(|s| s.kind == MoveKind::Diagonal));
    }

    #[test]
    fn start_reserved_by_other_agent_is_invalid() {
        let grid = GridSpec::new(10.0, 1.0, false).unwrap();
        let table = empty_table(grid, &[Cell::new(0, 0), Cell::new(1, 1)]);
        let mut stats = SearchStats::default();
        let err = plan_path(
            0,
            Cell::new(1, 1),
            Cell::new(5, 5),
            0,
            &table,
            &grid,
            SearchLimits::for_grid(&grid),
            &mut stats,
        );
        assert!(err.is_err());
    }

    #[test]
    fn planner_waits_out_a_crossing_agent() {
        let grid = GridSpec::new(10.0, 1.0, false).unwrap();
        let mut table = empty_table(grid, &[Cell::new(0, 0), Cell::new(2, 2)]);
        // agent 0 cuts vertically through (2, y) while agent 1 wants to move
        // east along y = 2
        let mut stats = SearchStats::default();
        let limits = SearchLimits::for_grid(&grid);
        let steps = plan_path(0, Cell::new(0, 0), Cell::new(4, 4), 0, &table, &grid, limits, &mut stats)
            .unwrap();
        table.commit(0, &steps);
        let steps2 =
            plan_path(1, Cell::new(2, 2), Cell::new(6, 2), 0, &table, &grid, limits, &mut stats)
                .unwrap();
        // agent 1 found something; every node respects the ledger
        table.commit(1, &steps2);
        let report = super::super::validate::validate_plans(&table, &grid, 2.0, 2.0 * PI / 3.0);
        assert!(report.violations.is_empty(), "{report:?}");
    }

    #[test]
    fn unreachable_goal_fails_within_horizon() {
        let grid = GridSpec::new(6.0, 1.0, false).unwrap();
        // box the agent in completely with parked neighbors
        let starts: Vec<Cell> = vec![
            Cell::new(1, 1),
            Cell::new(0, 0),
            Cell::new(1, 0),
            Cell::new(2, 0),
            Cell::new(0, 1),
            Cell::new(2, 1),
            Cell::new(0, 2),
            Cell::new(1, 2),
            Cell::new(2, 2),
        ];
        let mut table = empty_table(grid, &starts);
        // parked agents never move: extend their occupancy far out with waits
        for agent in 1..9 {
            let here = table.last_node(agent).cell;
            let mut nodes = vec![table.last_node(agent)];
            nodes.push(PlanStep {
                t: 500,
                cell: here,
                kind: MoveKind::Wait,
            });
            table.commit(agent, &nodes);
        }
        let mut stats = SearchStats::default();
        let limits = SearchLimits {
            horizon: 400,
            node_budget: 100_000,
        };
        let err = plan_path(0, Cell::new(1, 1), Cell::new(5, 5), 0, &table, &grid, limits, &mut stats);
        assert!(matches!(err, Err(Error::PlanFailure(_))));
    }
}
