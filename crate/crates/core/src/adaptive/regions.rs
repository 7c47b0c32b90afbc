//! Square online regions of 2x2 coarse cells grouped by anchor parity.

use faer::Mat;
use rayon::prelude::*;

use crate::adaptive::residual::ResidualBlock;
use crate::error::{Error, Result};
use crate::grid::{CellId, CoarseGrid};
use crate::offline::MultiscaleProblem;

pub const NUM_GROUPS: usize = 4;

/// Region made of the four coarse cells around interior coarse node `anchor`.
#[derive(Debug, Clone)]
pub struct OnlineRegion {
    pub anchor: (usize, usize),
    /// Zero-based parity group: (odd, odd), (even, odd), (odd, even), (even, even).
    pub group: usize,
    pub coarse_cells: [usize; 4],
    /// The cross of coarse edges meeting at the anchor, ascending.
    pub coarse_edges: [usize; 4],
    /// Neighborhood indices of `coarse_edges`.
    pub neighborhoods: [usize; 4],
}

impl OnlineRegion {
    pub fn fine_cells(&self, coarse: &CoarseGrid) -> Vec<CellId> {
        let mut cells: Vec<CellId> = self.coarse_cells.iter().flat_map(|&c| coarse.block_cells(c)).collect();
        cells.sort_unstable();
        cells
    }
}

pub fn parity_group(i: usize, j: usize) -> usize {
    match (i % 2, j % 2) {
        (1, 1) => 0,
        (0, 1) => 1,
        (1, 0) => 2,
        _ => 3,
    }
}

/// All regions, ordered by group and then by anchor `(j, i)`.
pub fn build_online_regions(coarse: &CoarseGrid) -> Result<Vec<OnlineRegion>> {
    let n = coarse.n();
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "coarse cells per side for online regions",
            value: n.to_string(),
            range: ">= 2".into(),
        });
    }
    let mut regions = Vec::with_capacity((n - 1) * (n - 1));
    for j in 1..n {
        for i in 1..n {
            let mut coarse_edges = [
                coarse.x_edge(i - 1, j),
                coarse.x_edge(i, j),
                coarse.y_edge(i, j - 1),
                coarse.y_edge(i, j),
            ];
            coarse_edges.sort_unstable();
            let neighborhoods = coarse_edges.map(|e| {
                coarse
                    .neighborhood_index(e)
                    .expect("edges around an interior node are interior")
            });
            regions.push(OnlineRegion {
                anchor: (i, j),
                group: parity_group(i, j),
                coarse_cells: [
                    coarse.cell(i - 1, j - 1),
                    coarse.cell(i, j - 1),
                    coarse.cell(i - 1, j),
                    coarse.cell(i, j),
                ],
                coarse_edges,
                neighborhoods,
            });
        }
    }
    regions.sort_by_key(|r| r.group);
    Ok(regions)
}

/// Residual block spanned by the snapshots of a region's four neighborhoods.
pub fn region_block(problem: &MultiscaleProblem, region: &OnlineRegion) -> Result<ResidualBlock> {
    let locals: Vec<_> = region
        .neighborhoods
        .iter()
        .map(|&k| &problem.snapshots.local[k])
        .collect();
    let mut support: Vec<usize> = locals.iter().flat_map(|ls| ls.support.iter().copied()).collect();
    support.sort_unstable();
    support.dedup();
    let cols: usize = locals.iter().map(|ls| ls.len()).sum();
    let mut values = Mat::<f64>::zeros(support.len(), cols);
    let mut offset = 0;
    for ls in &locals {
        for (row, dof) in ls.support.iter().enumerate() {
            let target = support.binary_search(dof).expect("support is a union");
            for k in 0..ls.len() {
                values[(target, offset + k)] = ls.values[(row, k)];
            }
        }
        offset += ls.len();
    }
    ResidualBlock::new(support, values, &problem.system.matrix)
}

/// Regions together with their residual blocks.
pub struct OnlineRegions {
    pub regions: Vec<OnlineRegion>,
    pub blocks: Vec<ResidualBlock>,
}

impl OnlineRegions {
    pub fn build(problem: &MultiscaleProblem) -> Result<Self> {
        let regions = build_online_regions(&problem.coarse)?;
        let blocks = regions
            .par_iter()
            .map(|r| region_block(problem, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { regions, blocks })
    }

    pub fn group_members(&self, group: usize) -> Vec<usize> {
        (0..self.regions.len())
            .filter(|&k| self.regions[k].group == group)
            .collect()
    }
}
