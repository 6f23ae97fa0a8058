//! Grid discretization for the cooperative planner.
//!
//! The arena is cut into square cells; agents sit on cell centers and move
//! between 8-neighbors. Times are integer half-ticks so that the 1.5x
//! diagonal cost stays exact: a cardinal move costs 2 half-ticks, a
//! diagonal 3, a wait 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Half-ticks for one cardinal move (one full planner timestep).
pub const CARDINAL_COST: u32 = 2;
/// Half-ticks for one diagonal move (1.5 timesteps).
pub const DIAGONAL_COST: u32 = 3;
/// Half-ticks for one wait.
pub const WAIT_COST: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    Cardinal,
    Diagonal,
    Wait,
}

impl MoveKind {
    pub fn cost(self) -> u32 {
        match self {
            MoveKind::Cardinal => CARDINAL_COST,
            MoveKind::Diagonal => DIAGONAL_COST,
            MoveKind::Wait => WAIT_COST,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MoveKind::Cardinal => "cardinal",
            MoveKind::Diagonal => "diagonal",
            MoveKind::Wait => "wait",
        }
    }
}

/// The eight move directions, cardinals first.
pub const DIRECTIONS: [(i32, i32); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

pub fn kind_of(direction: (i32, i32)) -> MoveKind {
    if direction.0 != 0 && direction.1 != 0 {
        MoveKind::Diagonal
    } else {
        MoveKind::Cardinal
    }
}

/// Arena discretization.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub l: f64,
    pub cell_width: f64,
    /// cells per side
    pub cells: u32,
    pub periodic: bool,
}

impl GridSpec {
    /// Rounds `l / cell_width` to a whole number of cells and stores the
    /// exact resulting width (the preset's nominal 1.33 becomes 40/30).
    pub fn new(l: f64, cell_width: f64, periodic: bool) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid(format!("arena side must be > 0, got {l}")));
        }
        if !(cell_width.is_finite() && cell_width > 0.0 && cell_width < l) {
            return Err(Error::invalid(format!(
                "cell width must lie in (0, l), got {cell_width}"
            )));
        }
        let cells = (l / cell_width).round().max(2.0) as u32;
        Ok(GridSpec {
            l,
            cell_width: l / cells as f64,
            cells,
            periodic,
        })
    }

    /// A cell must see all 8 neighbor centers within sensing range `r`; the
    /// farthest is the diagonal at `cell_width * sqrt 2`.
    pub fn validate_sensing(&self, r: f64) -> Result<()> {
        let diagonal = self.cell_width * std::f64::consts::SQRT_2;
        if diagonal > r {
            return Err(Error::invalid(format!(
                "cell width {} too coarse: diagonal neighbor at {diagonal:.4} exceeds sensing range {r}",
                self.cell_width
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as u32) < self.cells && (c.y as u32) < self.cells
    }

    /// Canonicalize a possibly out-of-range cell; `None` when off a
    /// non-periodic grid.
    #[inline]
    pub fn wrap(&self, c: Cell) -> Option<Cell> {
        if self.periodic {
            let n = self.cells as i32;
            Some(Cell::new(c.x.rem_euclid(n), c.y.rem_euclid(n)))
        } else {
            self.contains(c).then_some(c)
        }
    }

    #[inline]
    pub fn neighbor(&self, c: Cell, direction: (i32, i32)) -> Option<Cell> {
        self.wrap(Cell::new(c.x + direction.0, c.y + direction.1))
    }

    pub fn cell_center(&self, c: Cell) -> Point2 {
        Point2::new(
            (c.x as f64 + 0.5) * self.cell_width,
            (c.y as f64 + 0.5) * self.cell_width,
        )
    }

    /// Minimal-image Euclidean distance between cell centers.
    pub fn center_distance(&self, a: Cell, b: Cell) -> f64 {
        let n = self.cells as i32;
        let mut dx = (b.x - a.x).abs();
        let mut dy = (b.y - a.y).abs();
        if self.periodic {
            dx = dx.min(n - dx);
            dy = dy.min(n - dy);
        }
        self.cell_width * ((dx * dx + dy * dy) as f64).sqrt()
    }
}

/// Per-direction sensing-cone footprint on the 8-neighborhood: the neighbor
/// offsets whose centers fall inside a cone of angle `gamma` and radius `r`
/// pointed along the move direction.
#[derive(Clone, Debug)]
pub struct GridCone {
    offsets: [Vec<(i32, i32)>; 8],
}

impl GridCone {
    pub fn new(grid: &GridSpec, r: f64, gamma: f64) -> Self {
        let mut offsets: [Vec<(i32, i32)>; 8] = Default::default();
        for (slot, dir) in offsets.iter_mut().zip(DIRECTIONS) {
            let dir_angle = (dir.1 as f64).atan2(dir.0 as f64);
            for off in DIRECTIONS {
                let dist = grid.cell_width * ((off.0 * off.0 + off.1 * off.1) as f64).sqrt();
                if dist > r {
                    continue;
                }
                let angle = (off.1 as f64).atan2(off.0 as f64);
                let offset = crate::geometry::angle_diff(angle, dir_angle).abs();
                if offset <= gamma / 2.0 + 1e-9 {
                    slot.push(off);
                }
            }
        }
        GridCone { offsets }
    }

    pub fn direction_index(direction: (i32, i32)) -> usize {
        DIRECTIONS
            .iter()
            .position(|&d| d == direction)
            .expect("not a unit grid direction")
    }

    /// Neighbor offsets covered by the cone when moving along `direction`.
    pub fn offsets(&self, direction: (i32, i32)) -> &[(i32, i32)] {
        &self.offsets[Self::direction_index(direction)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig4_grid() -> GridSpec {
        GridSpec::new(40.0, 1.33, true).unwrap()
    }

    #[test]
    fn preset_grid_snaps_to_thirty_cells() {
        let g = fig4_grid();
        assert_eq!(g.cells, 30);
        assert!((g.cell_width - 40.0 / 30.0).abs() < 1e-12);
        g.validate_sensing(2.0).unwrap();
    }

    #[test]
    fn sensing_validation_rejects_coarse_grids() {
        let g = GridSpec::new(40.0, 4.0, true).unwrap();
        assert!(g.validate_sensing(2.0).is_err());
    }

    #[test]
    fn wrap_is_toroidal_only_when_periodic() {
        let g = fig4_grid();
        assert_eq!(g.wrap(Cell::new(-1, 5)), Some(Cell::new(29, 5)));
        assert_eq!(g.wrap(Cell::new(30, 0)), Some(Cell::new(0, 0)));
        let open = GridSpec::new(10.0, 1.0, false).unwrap();
        assert_eq!(open.wrap(Cell::new(-1, 5)), None);
        assert_eq!(open.wrap(Cell::new(3, 4)), Some(Cell::new(3, 4)));
    }

    #[test]
    fn cone_covers_three_cells_at_two_thirds_pi() {
        let g = fig4_grid();
        let cone = GridCone::new(&g, 2.0, 2.0 * PI / 3.0);
        // east: the forward cell plus both flanking diagonals
        let east = cone.offsets((1, 0));
        assert_eq!(east.len(), 3);
        assert!(east.contains(&(1, 0)) && east.contains(&(1, 1)) && east.contains(&(1, -1)));
        // diagonal: forward diagonal plus both flanking cardinals
        let ne = cone.offsets((1, 1));
        assert_eq!(ne.len(), 3);
        assert!(ne.contains(&(1, 1)) && ne.contains(&(1, 0)) && ne.contains(&(0, 1)));
    }

    #[test]
    fn cone_narrows_and_widens_with_gamma()
    {
        let g = fig4_grid();
        let narrow = GridCone::new(&g, 2.0, PI / 3.0);
        assert_eq!(narrow.offsets((1, 0)), &[(1, 0)]);
        let wide = GridCone::new(&g, 2.0, 2.0 * PI);
        assert_eq!(wide.offsets((1, 0)).len(), 8);
    }

    #[test]
    fn center_distance_wraps() {
        let g = fig4_grid();
        let d = g.center_distance(Cell::new(0, 0), Cell::new(29, 0));
        assert!((d - g.cell_width).abs() < 1e-12);
    }
}
