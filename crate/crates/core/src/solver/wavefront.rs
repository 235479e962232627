//! Tiled anti-diagonal schedule.
//!
//! Cell `(i+1, j+1)` depends only on `(i+1, j)`, `(i, j+1)` and `(i, j)`, so
//! all tiles on one tile anti-diagonal are independent once the previous
//! anti-diagonals are done. Inside a tile cells are filled row by row. Every
//! cell is computed by the same expression as in the sequential sweep, so the
//! result does not depend on the schedule or the thread count.

use rayon::prelude::*;

use super::{update_cell, DiscreteField, ForcingGrid, SolveOptions};

pub(super) const TILE: usize = 64;

#[derive(Clone, Copy)]
struct GridPtr {
    ptr: *mut f64,
    row: usize,
    width: usize,
}

// Tiles on one anti-diagonal write disjoint cells and only read cells
// finished on earlier anti-diagonals.
unsafe impl Send for GridPtr {}
unsafe impl Sync for GridPtr {}

impl GridPtr {
    /// # Safety
    /// `(i, j)` must be in bounds and not concurrently written.
    #[inline]
    unsafe fn cell<'a>(self, i: usize, j: usize) -> &'a [f64] {
        std::slice::from_raw_parts(self.ptr.add(i * self.row + j * self.width), self.width)
    }

    /// # Safety
    /// `(i, j)` must be in bounds and owned by the caller's tile.
    #[inline]
    unsafe fn cell_mut<'a>(self, i: usize, j: usize) -> &'a mut [f64] {
        std::slice::from_raw_parts_mut(self.ptr.add(i * self.row + j * self.width), self.width)
    }
}

pub(super) fn fill(field: &mut DiscreteField, forcing: Option<&ForcingGrid>, opts: &SolveOptions) {
    let (m, n, width) = (field.m, field.n, field.width);
    if m == 0 || n == 0 {
        return;
    }
    let grid = GridPtr {
        ptr: field.data.as_mut_ptr(),
        row: (n + 1) * width,
        width,
    };
    // interior cells (i+1, j+1) with 0 ≤ i < m, 0 ≤ j < n
    let tiles_m = m.div_ceil(TILE);
    let tiles_n = n.div_ceil(TILE);
    for diag in 0..tiles_m + tiles_n - 1 {
        let lo = diag.saturating_sub(tiles_n - 1);
        let hi = diag.min(tiles_m - 1);
        (lo..=hi).into_par_iter().for_each(|ti| {
            let tj = diag - ti;
            for i in ti * TILE..((ti + 1) * TILE).min(m) {
                for j in tj * TILE..((tj + 1) * TILE).min(n) {
                    // SAFETY: (i+1, j+1) belongs to this tile; its three
                    // inputs lie in this tile (already written) or in tiles
                    // of earlier anti-diagonals.
                    unsafe {
                        update_cell(
                            grid.cell(i + 1, j),
                            grid.cell(i, j + 1),
                            grid.cell(i, j),
                            forcing.map(|f| f.get(i, j)),
                            opts,
                            grid.cell_mut(i + 1, j + 1),
                        );
                    }
                }
            }
        });
    }
}
