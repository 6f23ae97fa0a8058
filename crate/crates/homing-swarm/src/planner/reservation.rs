//! Shared space-time reservation ledger.
//!
//! Each agent's committed itinerary is a list of nodes `(t, cell, kind)`
//! where `kind` records the move that produced the node. Derived indexes
//! answer the two questions the planner asks at every expansion: who
//! occupies `(t, cell)`, and whose active move-cone covers `(t, cell)`.
//!
//! Occupancy semantics: between consecutive nodes the agent occupies the
//! source cell (it has not finished the move), and it occupies the arrival
//! cell at the arrival half-tick. No occupancy is recorded past an agent's
//! final node; the lifelong loop replans exactly when a plan runs out, and
//! the wait-in-place/forced-replan rule resolves the rare conflict that a
//! finished plan's silence permits.
//!
//! Commits are recorded as given: legality is the searcher's job, and the
//! independent validator audits the result. That split is what lets tests
//! hand-build illegal tables.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use super::grid::{Cell, GridCone, GridSpec, MoveKind};
use crate::error::{Error, Result};

/// One itinerary node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanStep {
    /// Arrival time, in half-ticks.
    pub t: u32,
    pub cell: Cell,
    /// How the agent reached this node (the first node of an itinerary is
    /// recorded as a wait).
    pub kind: MoveKind,
}

/// Keys are already well-mixed packed integers; this hasher just finishes
/// them with a splitmix round instead of running SipHash.
#[derive(Default)]
pub struct PackedHasher {
    state: u64,
}

impl Hasher for PackedHasher {
    fn finish(&self) -> u64 {
        self.state
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, n: u64) {
        let mut z = self.state ^ n ^ 0x9e37_79b9_7f4a_7c15;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        self.state = z ^ (z >> 31);
    }

    fn write_u32(&mut self, n: u32) {
        self.write_u64(n as u64);
    }

    fn write_usize(&mut self, n: usize) {
        self.write_u64(n as u64);
    }
}

type FastMap<V> = HashMap<u64, V, BuildHasherDefault<PackedHasher>>;

#[inline]
fn key(t: u32, cell: Cell) -> u64 {
    debug_assert!(cell.x >= 0 && cell.y >= 0);
    ((t as u64) << 28) | ((cell.y as u64) << 14) | (cell.x as u64)
}

pub struct ReservationTable {
    grid: GridSpec,
    cone: GridCone,
    occupancy: FastMap<usize>,
    cones: FastMap<Vec<usize>>,
    itineraries: Vec<Vec<PlanStep>>,
}

impl ReservationTable {
    pub fn new(grid: GridSpec, r: f64, gamma: f64, starts: &[Cell]) -> Result<Self> {
        grid.validate_sensing(r)?;
        let cone = GridCone::new(&grid, r, gamma);
        let mut table = ReservationTable {
            grid,
            cone,
            occupancy: HashMap::default(),
            cones: HashMap::default(),
            itineraries: Vec::with_capacity(starts.len()),
        };
        for (agent, &start) in starts.iter().enumerate() {
            if !grid.contains(start) {
                return Err(Error::invalid(format!("start cell {start:?} outside grid")));
            }
            if let Some(prev) = table.occupancy.insert(key(0, start), agent) {
                return Err(Error::invalid(format!(
                    "agents {prev} and {agent} share start cell {start:?}"
                )));
            }
            table.itineraries.push(vec![PlanStep {
                t: 0,
                cell: start,
                kind: MoveKind::Wait,
            }]);
        }
        Ok(table)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cone(&self) -> &GridCone {
        &self.cone
    }

    pub fn agent_count(&self) -> usize {
        self.itineraries.len()
    }

    pub fn itinerary(&self, agent: usize) -> &[PlanStep] {
        &self.itineraries[agent]
    }

    pub fn last_node(&self, agent: usize) -> PlanStep {
        *self.itineraries[agent].last().expect("itineraries are never empty")
    }

    #[inline]
    pub fn occupant(&self, t: u32, cell: Cell) -> Option<usize> {
        self.occupancy.get(&key(t, cell)).copied()
    }

    /// Agents whose committed move-cone covers `(t, cell)`.
    #[inline]
    pub fn cone_holders(&self, t: u32, cell: Cell) -> &[usize] {
        self.cones.get(&key(t, cell)).map_or(&[], Vec::as_slice)
    }

    /// True when no agent other than `agent` occupies `(t, cell)`.
    #[inline]
    pub fn free_for(&self, agent: usize, t: u32, cell: Cell) -> bool {
        self.occupant(t, cell).map_or(true, |a| a == agent)
    }

    /// True when no other agent's move-cone covers `(t, cell)`.
    #[inline]
    pub fn cone_free_for(&self, agent: usize, t: u32, cell: Cell) -> bool {
        self.cone_holders(t, cell).iter().all(|&a| a == agent)
    }

    /// The agent's cell at time `t` (clamped to its itinerary ends).
    pub fn position_at(&self, agent: usize, t: u32) -> Cell {
        let nodes = &self.itineraries[agent];
        match nodes.binary_search_by_key(&t, |n| n.t) {
            Ok(i) => nodes[i].cell,
            Err(0) => nodes[0].cell,
            Err(i) => nodes[i - 1].cell,
        }
    }

    /// Index of the last node at or before `t`.
    pub fn node_covering(&self, agent: usize, t: u32) -> usize {
        let nodes = &self.itineraries[agent];
        match nodes.binary_search_by_key(&t, |n| n.t) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// Minimal-image unit direction from `a` to adjacent cell `b`.
    pub fn direction_between(&self, a: Cell, b: Cell) -> (i32, i32) {
        let n = self.grid.cells as i32;
        let wrap = |mut d: i32| {
            if self.grid.periodic {
                if d > n / 2 {
                    d -= n;
                } else if d < -(n / 2) {
                    d += n;
                }
            }
            d
        };
        let d = (wrap(b.x - a.x), wrap(b.y - a.y));
        debug_assert!(d.0.abs() <= 1 && d.1.abs() <= 1, "nodes not adjacent: {a:?} -> {b:?}");
        d
    }

    /// Append `steps` to an agent's itinerary and index the reservations.
    ///
    /// `steps[0]` must sit on the agent's current final cell; a first node
    /// later than the final node's time records an implicit wait bridge.
    pub fn commit(&mut self, agent: usize, steps: &[PlanStep]) {
        if steps.is_empty() {
            return;
        }
        let last = self.last_node(agent);
        assert_eq!(
            steps[0].cell, last.cell,
            "agent {agent} plan does not start on its current cell"
        );
        assert!(steps[0].t >= last.t, "agent {agent} plan starts in its own past");

        // bridge a gap with an implicit wait in place
        if steps[0].t > last.t {
            let bridge = PlanStep {
                t: steps[0].t,
                cell: last.cell,
                kind: MoveKind::Wait,
            };
            self.index_segment(agent, last, bridge);
            self.itineraries[agent].push(bridge);
        }

        let mut prev = *self.itineraries[agent].last().unwrap();
        for &step in &steps[1..] {
            self.index_segment(agent, prev, step);
            self.itineraries[agent].push(step);
            prev = step;
        }
    }

    /// Drop every node after `node_index`, releasing its reservations.
    /// Returns the new final node.
    pub fn truncate_to(&mut self, agent: usize, node_index: usize) -> PlanStep {
        let nodes = self.itineraries[agent].clone();
        for k in (node_index + 1)..nodes.len() {
            self.unindex_segment(agent, nodes[k - 1], nodes[k]);
        }
        self.itineraries[agent].truncate(node_index + 1);
        self.last_node(agent)
    }

    fn index_segment(&mut self, agent: usize, from: PlanStep, to: PlanStep) {
        // the agent keeps its source cell until the arrival instant
        for t in (from.t + 1)..to.t {
            self.occupancy.insert(key(t, from.cell), agent);
        }
        self.occupancy.insert(key(to.t, to.cell), agent);
        if to.cell != from.cell {
            let dir = self.direction_between(from.cell, to.cell);
            for t in from.t..to.t {
                for &off in self.cone.offsets(dir) {
                    if let Some(c) = self
                        .grid
                        .wrap(Cell::new(from.cell.x + off.0, from.cell.y + off.1))
                    {
                        self.cones.entry(key(t, c)).or_default().push(agent);
                    }
                }
            }
        }
    }

    fn unindex_segment(&mut self, agent: usize, from: PlanStep, to: PlanStep) {
        for t in (from.t + 1)..to.t {
            self.remove_occupancy(agent, t, from.cell);
        }
        self.remove_occupancy(agent, to.t, to.cell);
        if to.cell != from.cell {
            let dir = self.direction_between(from.cell, to.cell);
            for t in from.t..to.t {
                for &off in self.cone.offsets(dir) {
                    if let Some(c) = self
                        .grid
                        .wrap(Cell::new(from.cell.x + off.0, from.cell.y + off.1))
                    {
                        if let Some(holders) = self.cones.get_mut(&key(t, c)) {
                            if let Some(pos) = holders.iter().position(|&a| a == agent) {
                                holders.swap_remove(pos);
                            }
                            if holders.is_empty() {
                                self.cones.remove(&key(t, c));
                            }
                        }
                    }
                }
            }
        }
    }

    fn remove_occupancy(&mut self, agent: usize, t: u32, cell: Cell) {
        if self.occupant(t, cell) == Some(agent) {
            self.occupancy.remove(&key(t, cell));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn table_with(starts: &[Cell]) -> ReservationTable {
        let grid = GridSpec::new(10.0, 1.0, false).unwrap();
        ReservationTable::new(grid, 2.0, 2.0 * PI / 3.0, starts).unwrap()
    }

    fn step(t: u32, x: i32, y: i32, kind: MoveKind) -> PlanStep {
        PlanStep {
            t,
            cell: Cell::new(x, y),
            kind,
        }
    }

    #[test]
    fn duplicate_starts_rejected() {
        let grid = GridSpec::new(10.0, 1.0, false).unwrap();
        let starts = [Cell::new(1, 1), Cell::new(1, 1)];
        assert!(ReservationTable::new(grid, 2.0, 2.0 * PI / 3.0, &starts).is_err());
    }

    #[test]
    fn commit_indexes_transit_occupancy() {
        let mut table = table_with(&[Cell::new(0, 0)]);
        table.commit(
            0,
            &[
                step(0, 0, 0, MoveKind::Wait),
                step(2, 1, 0, MoveKind::Cardinal),
                step(5, 2, 1, MoveKind::Diagonal),
            ],
        );
        // source held through each transit, arrival at the end
        assert_eq!(table.occupant(0, Cell::new(0, 0)), Some(0));
        assert_eq!(table.occupant(1, Cell::new(0, 0)), Some(0));
        assert_eq!(table.occupant(2, Cell::new(1, 0)), Some(0));
        assert_eq!(table.occupant(3, Cell::new(1, 0)), Some(0));
        assert_eq!(table.occupant(4, Cell::new(1, 0)), Some(0));
        assert_eq!(table.occupant(5, Cell::new(2, 1)), Some(0));
        assert_eq!(table.occupant(6, Cell::new(2, 1)), None);
        // the eastward move's cone covers the destination during transit
        assert_eq!(table.cone_holders(0, Cell::new(1, 0)), &[0]);
        assert_eq!(table.cone_holders(1, Cell::new(1, 1)), &[0]);
        assert_eq!(table.cone_holders(2, Cell::new(1, 0)), &[]);
        assert_eq!(table.position_at(0, 3), Cell::new(1, 0));
        assert_eq!(table.position_at(0, 99), Cell::new(2, 1));
    }

    #[test]
    fn truncate_releases_reservations() {
        let mut table = table_with(&[Cell::new(0, 0)]);
        table.commit(
            0,
            &[
                step(0, 0, 0, MoveKind::Wait),
                step(2, 1, 0, MoveKind::Cardinal),
                step(4, 2, 0, MoveKind::Cardinal),
            ],
        );
        let last = table.truncate_to(0, 1);
        assert_eq!(last, step(2, 1, 0, MoveKind::Cardinal));
        assert_eq!(table.occupant(4, Cell::new(2, 0)), None);
        assert_eq!(table.occupant(3, Cell::new(1, 0)), None);
        assert_eq!(table.occupant(2, Cell::new(1, 0)), Some(0));
        assert_eq!(table.cone_holders(2, Cell::new(2, 0)), &[]);
    }

    #[test]
    fn commit_bridges_time_gaps_with_waits() {
        let mut table = table_with(&[Cell::new(3, 3)]);
        table.commit(
            0,
            &[
                step(4, 3, 3, MoveKind::Wait),
                step(6, 4, 3, MoveKind::Cardinal),
            ],
        );
        // bridge keeps the cell occupied across the gap
        for t in 0..=5 {
            assert_eq!(table.occupant(t, Cell::new(3, 3)), Some(0), "t = {t}");
        }
        assert_eq!(table.occupant(6, Cell::new(4, 3)), Some(0));
    }

    #[test]
    fn direction_wraps_on_periodic_grids() {
        let grid = GridSpec::new(10.0, 1.0, true).unwrap();
        let table = ReservationTable::new(grid, 2.0, 2.0 * PI / 3.0, &[Cell::new(0, 0)]).unwrap();
        assert_eq!(
            table.direction_between(Cell::new(0, 0), Cell::new(9, 0)),
            (-1, 0)
        );
        assert_eq!(
            table.direction_between(Cell::new(9, 9), Cell::new(0, 0)),
            (1, 1)
        );
    }
}
