//! Latest-value slots through which cells publish their center networks.

use std::sync::Arc;

use arc_swap::ArcSwapOption;
use serde::{Deserialize, Serialize};

use crate::coev::Individual;
use crate::error::{Error, Result};
use crate::grid::{GridConfig, GridCoord};

/// A cell's center pair as of the end of epoch `epoch` (0 = initial networks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSnapshot<G, D> {
    pub cell: GridCoord,
    pub generator: Individual<G>,
    pub discriminator: Individual<D>,
    pub epoch: u64,
}

/// One slot per cell. Reads are wait-free and always observe a whole
/// snapshot; each slot is written only by its owning cell.
pub struct SnapshotBoard<G, D> {
    grid: GridConfig,
    slots: Vec<ArcSwapOption<CellSnapshot<G, D>>>,
}

impl<G, D> SnapshotBoard<G, D> {
    pub fn new(grid: GridConfig) -> Self {
        let slots = (0..grid.population_size()).map(|_| ArcSwapOption::empty()).collect();
        Self { grid, slots }
    }

    pub fn grid(&self) -> &GridConfig {
        &self.grid
    }

    /// Stamps must start at 0 and grow by exactly one per publication.
    pub fn publish(&self, snapshot: CellSnapshot<G, D>) -> Result<()> {
        self.grid.check(snapshot.cell)?;
        let slot = &self.slots[self.grid.index_of(snapshot.cell)];
        let expected = slot.load().as_ref().map_or(0, |s| s.epoch + 1);
        if snapshot.epoch != expected {
            return Err(Error::Runtime(format!(
                "cell {} published epoch {} after {}",
                snapshot.cell,
                snapshot.epoch,
                expected as i128 - 1
            )));
        }
        slot.store(Some(Arc::new(snapshot)));
        Ok(())
    }

    pub fn read(&self, cell: GridCoord) -> Result<Option<Arc<CellSnapshot<G, D>>>> {
        self.grid.check(cell)?;
        Ok(self.slots[self.grid.index_of(cell)].load_full())
    }
}
