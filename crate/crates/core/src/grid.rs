//! Toroidal grid addressing.
//!
//! Every cell of an `m x m` torus owns one generator/discriminator pair. A
//! cell's neighborhood is the cell itself plus its West, North, East and South
//! neighbors, always listed in that order so the center sits at index 0.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of cells in a neighborhood.
pub const NEIGHBORHOOD_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridCoord {
    pub row: usize,
    pub col: usize,
}

impl GridCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    grid_dim: usize,
}

impl GridConfig {
    pub fn new(grid_dim: usize) -> Result<Self> {
        if grid_dim == 0 {
            return Err(Error::domain("grid dimension must be at least 1"));
        }
        Ok(Self { grid_dim })
    }

    pub fn grid_dim(&self) -> usize {
        self.grid_dim
    }

    pub fn neighborhood_size(&self) -> usize {
        NEIGHBORHOOD_SIZE
    }

    /// One generator/discriminator pair per cell.
    pub fn population_size(&self) -> usize {
        self.grid_dim * self.grid_dim
    }

    pub fn contains(&self, c: GridCoord) -> bool {
        c.row < self.grid_dim && c.col < self.grid_dim
    }

    pub fn check(&self, c: GridCoord) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "coordinate {c} outside {0}x{0} grid",
                self.grid_dim
            )))
        }
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = GridCoord> + '_ {
        let m = self.grid_dim;
        (0..m * m).map(move |i| GridCoord::new(i / m, i % m))
    }

    pub fn index_of(&self, c: GridCoord) -> usize {
        c.row * self.grid_dim + c.col
    }
}

/// `[center, west, north, east, south]` with wraparound on both axes.
pub fn neighborhood(center: GridCoord, cfg: &GridConfig) -> Result<[GridCoord; NEIGHBORHOOD_SIZE]> {
    cfg.check(center)?;
    let m = cfg.grid_dim;
    let GridCoord { row, col } = center;
    let left = (col + m - 1) % m;
    let right = (col + 1) % m;
    let up = (row + m - 1) % m;
    let down = (row + 1) % m;
    Ok([
        center,
        GridCoord::new(row, left),
        GridCoord::new(up, col),
        GridCoord::new(row, right),
        GridCoord::new(down, col),
    ])
}

/// Cells whose neighborhood contains `center`, i.e. the cells that will see
/// an update published by `center`.
pub fn overlap_listeners(center: GridCoord, cfg: &GridConfig) -> Result<BTreeSet<GridCoord>> {
    cfg.check(center)?;
    let mut out = BTreeSet::new();
    for cell in cfg.cells() {
        if neighborhood(cell, cfg)?.contains(&center) {
            out.insert(cell);
        }
    }
    Ok(out)
}
