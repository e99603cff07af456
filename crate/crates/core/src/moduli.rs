//! The moduli space of semi-stable rank-2 lattices of covolume 1 and
//! quadrature against its hyperbolic measure.
//!
//! The space is the region D1 = { tau = x + iy : |x| <= 1/2, x^2 + y^2 >= 1,
//! y <= 1 } carrying dmu = dx dy / y^2, with total volume pi/3 - 1.  Grids
//! are nested: level k splits every level-(k-1) cell in two per axis, so the
//! difference between consecutive levels doubles as the quadrature error
//! estimate.  The rank-1 moduli space is a single point of weight 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::lattice::Rank2Tau;
use crate::num::quad::GaussRule;
use crate::{par, Result};

/// Hyperbolic volume of D1: pi/3 - 1.
pub const VOLUME_D1: f64 = std::f64::consts::FRAC_PI_3 - 1.0;

/// One quadrature node: a moduli point and its positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub tau: Rank2Tau,
    pub weight: f64,
}

/// Nested quadrature grids over the moduli space.
///
/// `levels[k]` holds the complete node set of refinement level `k + 1`; the
/// integrators evaluate the finest two levels to report a value and a
/// two-level error estimate.
#[derive(Debug, Clone)]
pub struct ModuliGrid {
    rank: u8,
    scheme: String,
    levels: Vec<Vec<Node>>,
}

/// Nodes per cell edge of the tensor Gauss rule.
const CELL_RULE: usize = 4;

/// Serialized node row of the CSV interchange format.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x: f64,
    y: f64,
    weight: f64,
    level: u32,
}

impl ModuliGrid {
    /// The rank-1 moduli space: one point of weight 1.
    ///
    /// The weight is pinned by the residue of the completed rank-1 zeta at
    /// s = 1.  The stored tau is a placeholder handed to integrands that
    /// ignore it.
    pub fn rank1() -> Self {
        ModuliGrid {
            rank: 1,
            scheme: "point".into(),
            levels: vec![vec![Node { tau: Rank2Tau::new(0.0, 1.0), weight: 1.0 }]],
        }
    }

    /// Lattice rank of the underlying moduli space.
    pub fn rank(&self) -> u8 {
        self.rank
    }

    /// Scheme identifier the grid was built with.
    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    /// Number of refinement levels.
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    /// Nodes of the finest level.
    pub fn finest(&self) -> &[Node] {
        self.levels.last().expect("grids always hold at least one level")
    }

    /// Nodes of the coarsest level.
    pub fn coarsest(&self) -> &[Node] {
        self.levels.first().expect("grids always hold at least one level")
    }

    /// Nodes of refinement level `level` (1-based).
    pub fn level_nodes(&self, level: usize) -> &[Node] {
        &self.levels[level - 1]
    }

    /// Writes all levels as CSV with columns x, y, weight, level.
    pub fn save_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for (k, nodes) in self.levels.iter().enumerate() {
            for node in nodes {
                w.serialize(CsvRow {
                    x: node.tau.x,
                    y: node.tau.y,
                    weight: node.weight,
                    level: (k + 1) as u32,
                })?;
            }
        }
        w.flush().map_err(Error::Io)?;
        Ok(())
    }

    /// Reads a grid written by [`ModuliGrid::save_csv`].
    ///
    /// Levels must be contiguous from 1 and every node must lie in D1 with a
    /// positive weight.
    pub fn load_csv(path: &std::path::Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut levels: Vec<Vec<Node>> = Vec::new();
        for row in r.deserialize() {
            let row: CsvRow = row?;
            if row.level == 0 || row.level as usize > levels.len() + 1 {
                return Err(Error::domain(format!(
                    "grid CSV levels must be contiguous from 1, got level {}",
                    row.level
                )));
            }
            if row.level as usize == levels.len() + 1 {
                levels.push(Vec::new());
            }
            let tau = Rank2Tau::new(row.x, row.y);
            if !tau.contains_d1() {
                return Err(Error::domain(format!(
                    "grid node ({}, {}) lies outside the moduli region",
                    row.x, row.y
                )));
            }
            if !(row.weight > 0.0) {
                return Err(Error::domain(format!(
                    "grid node ({}, {}) has non-positive weight {}",
                    row.x, row.y, row.weight
                )));
            }
            levels[row.level as usize - 1].push(Node { tau, weight: row.weight });
        }
        if levels.is_empty() {
            return Err(Error::domain("grid CSV holds no nodes"));
        }
        Ok(ModuliGrid { rank: 2, scheme: "csv".into(), levels })
    }
}

/// Lower boundary of the moduli region above `x`: the unit arc.
fn y_lo(x: f64) -> f64 {
    (1.0 - x * x).sqrt()
}

/// Builds nested tensor-Gauss grids over the rank-2 moduli space.
///
/// Level k covers the region with 4*2^(k-1) cells across x and 2^(k-1)
/// across the arc-to-roof direction, each carrying a 4x4 Gauss rule.  Cell
/// edges at level k+1 bisect those at level k, so the levels nest.  The
/// only supported rule id is "gauss4".
pub fn build_grid(levels: u32, rule: &str) -> Result<ModuliGrid> {
    if levels < 1 {
        return Err(Error::domain("grid needs at least one level"));
    }
    if rule != "gauss4" {
        return Err(Error::domain(format!("unknown grid rule '{rule}'")));
    }
    // Level 5 already holds ~1.3e5 finest-level nodes; deeper refinement is
    // desk-scale hostile and beyond what the two-level error model needs.
    if levels > 8 {
        return Err(Error::resource(format!(
            "grid refinement depth {levels} exceeds the supported maximum of 8"
        )));
    }
    let rule4 = GaussRule::new(CELL_RULE);
    let mut out = Vec::with_capacity(levels as usize);
    for k in 1..=levels {
        let nx = 4usize << (k - 1);
        let ny = 1usize << (k - 1);
        let cells: Vec<(usize, usize)> = (0..nx)
            .flat_map(|i| (0..ny).map(move |j| (i, j)))
            .collect();
        let per_cell = par::map_indexed(cells.len(), |c| {
            let (i, j) = cells[c];
            let xa = -0.5 + i as f64 / nx as f64;
            let xb = -0.5 + (i + 1) as f64 / nx as f64;
            let va = j as f64 / ny as f64;
            let vb = (j + 1) as f64 / ny as f64;
            let mut nodes = Vec::with_capacity(CELL_RULE * CELL_RULE);
            for (x, wx) in rule4.mapped(xa, xb) {
                let floor = y_lo(x);
                let height = 1.0 - floor;
                for (v, wv) in rule4.mapped(va, vb) {
                    let y = floor + v * height;
                    // The (x, v) -> (x, y) map has Jacobian `height`, and
                    // the measure contributes 1/y^2.
                    let weight = wx * wv * height / (y * y);
                    nodes.push(Node { tau: Rank2Tau::new(x, y), weight });
                }
            }
            nodes
        });
        out.push(per_cell.into_iter().flatten().collect());
    }
    Ok(ModuliGrid { rank: 2, scheme: "gauss4".into(), levels: out })
}

/// Integrates `f` against dmu over the moduli space.
///
/// Returns the finest-level sum and the absolute difference to the previous
/// level as the error estimate (infinite when only one level exists).  Node
/// evaluations run in parallel; the reduction order is fixed, so the result
/// is bit-identical across worker counts.
pub fn integrate_moduli<F>(f: F, grid: &ModuliGrid) -> Result<(Complex64, f64)>
where
    F: Fn(&Rank2Tau) -> Complex64 + Sync + Send,
{
    let sum_level = |nodes: &[Node]| -> Result<Complex64> {
        let vals = par::map_indexed(nodes.len(), |i| {
            let node = &nodes[i];
            node.weight * f(&node.tau)
        });
        for (i, v) in vals.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                let t = nodes[i].tau;
                return Err(Error::numeric(format!(
                    "integrand not finite at node (x = {}, y = {})",
                    t.x, t.y
                )));
            }
        }
        Ok(par::sum_c64(&vals))
    };
    let fine = sum_level(grid.finest())?;
    let err = if grid.levels() >= 2 {
        let coarse = sum_level(grid.level_nodes(grid.levels() - 1))?;
        (fine - coarse).norm()
    } else {
        f64::INFINITY
    };
    Ok((fine, err))
}

/// Volume of the moduli space measured by the grid.
///
/// Rank 1 returns exactly 1; rank 2 integrates the constant function and
/// approaches pi/3 - 1 under refinement.
pub fn volume_m1(grid: &ModuliGrid) -> f64 {
    if grid.rank() == 1 {
        return 1.0;
    }
    let one = |_: &Rank2Tau| Complex64::new(1.0, 0.0);
    integrate_moduli(one, grid)
        .expect("constant integrand is finite")
        .0
        .re
}
