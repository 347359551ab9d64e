//! Expressivity reports (coverage, QD-score, per-cell elites, descriptor
//! histograms), heatmap export, and lineage queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Individual, IndividualId, Origin};
use crate::partition::{cell_of_uniform, CellIndex, GridSpec};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const HISTOGRAM_BINS: usize = 10;
/// Written in heatmap CSV cells that hold no elite.
pub const MISSING_MARKER: &str = "NA";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("heatmaps need at least 2 dimensions, map has {0}")]
    TooFewDimensions(usize),
    #[error("axis {axis} out of range for a {dims}-dimensional map")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("heatmap axes must differ (both {0})")]
    SameAxis(usize),
    #[error("unknown individual {0}")]
    UnknownIndividual(IndividualId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell: CellIndex,
    pub fitness: f64,
    pub elite_id: IndividualId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub dimension: usize,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressivityReport {
    pub schema_version: u32,
    pub generation: u64,
    pub evaluations: u64,
    pub resolutions: Vec<usize>,
    pub total_cells: usize,
    pub filled_cells: usize,
    pub coverage: f64,
    pub qd_score: f64,
    pub best_fitness: Option<f64>,
    /// True when cells come from projecting a population onto a reference
    /// grid rather than from the search's own feature map.
    pub projected: bool,
    pub cells: Vec<CellRecord>,
    pub histograms: Vec<Histogram>,
}

impl ExpressivityReport {
    /// Assembles a report; `cells` must hold at most one record per cell and
    /// `descriptors` are the elites' descriptors used for the histograms.
    pub fn build<'a, I>(
        generation: u64,
        evaluations: u64,
        resolutions: Vec<usize>,
        projected: bool,
        mut cells: Vec<CellRecord>,
        descriptors: I,
        bounds: &[(f64, f64)],
    ) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        cells.sort_by(|a, b| a.cell.cmp(&b.cell));
        let total_cells: usize = resolutions.iter().product();
        let filled_cells = cells.len();
        let qd_score = cells.iter().map(|c| c.fitness).sum();
        let best_fitness = cells.iter().map(|c| c.fitness).max_by(f64::total_cmp);
        let mut histograms: Vec<Histogram> = bounds
            .iter()
            .enumerate()
            .map(|(dimension, &(lo, hi))| Histogram {
                dimension,
                lo,
                hi,
                counts: vec![0; HISTOGRAM_BINS],
            })
            .collect();
        for d in descriptors {
            for (h, &v) in histograms.iter_mut().zip(d) {
                let scaled = ((v - h.lo) / (h.hi - h.lo) * HISTOGRAM_BINS as f64).floor();
                let bin = if scaled <= 0.0 {
                    0
                } else {
                    (scaled as usize).min(HISTOGRAM_BINS - 1)
                };
                h.counts[bin] += 1;
            }
        }
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            generation,
            evaluations,
            resolutions,
            total_cells,
            filled_cells,
            coverage: if total_cells == 0 {
                0.0
            } else {
                filled_cells as f64 / total_cells as f64
            },
            qd_score,
            best_fitness,
            projected,
            cells,
            histograms,
        }
    }

    pub fn fitness_of(&self, cell: &CellIndex) -> Option<f64> {
        self.cells
            .binary_search_by(|c| c.cell.cmp(cell))
            .ok()
            .map(|i| self.cells[i].fitness)
    }

    /// Per-cell table as CSV: one coordinate column per dimension, then
    /// fitness and elite id.
    pub fn cells_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.resolutions.len() {
            let _ = write!(out, "c{i},");
        }
        out.push_str("fitness,elite_id\n");
        for c in &self.cells {
            for v in c.cell.coords() {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{:?},{}", c.fitness, c.elite_id);
        }
        out
    }
}

/// Best member per cell of a uniform reference grid. Ties keep the member
/// seen first.
pub fn project<'a, G: 'a, I>(members: I, grid: &GridSpec) -> Vec<CellRecord>
where
    I: IntoIterator<Item = &'a Individual<G>>,
{
    let mut best: BTreeMap<CellIndex, CellRecord> = BTreeMap::new();
    for ind in members {
        let Ok(cell) = cell_of_uniform(ind.descriptor(), grid) else {
            continue;
        };
        match best.get(&cell) {
            Some(rec) if rec.fitness >= ind.fitness() => {}
            _ => {
                best.insert(
                    cell.clone(),
                    CellRecord {
                        cell,
                        fitness: ind.fitness(),
                        elite_id: ind.id,
                    },
                );
            }
        }
    }
    best.into_values().collect()
}

/// Best fitness over two chosen axes, other dimensions collapsed by max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub axes: (usize, usize),
    pub rows: usize,
    pub cols: usize,
    /// `values[row][col]`; `None` marks an empty fiber.
    pub values: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.values {
            let line: Vec<String> = row
                .iter()
                .map(|v| match v {
                    Some(f) => format!("{f:?}"),
                    None => MISSING_MARKER.to_string(),
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn heatmap_export(
    report: &ExpressivityReport,
    axis_a: usize,
    axis_b: usize,
) -> Result<Heatmap, AnalysisError> {
    let dims = report.resolutions.len();
    if dims < 2 {
        return Err(AnalysisError::TooFewDimensions(dims));
    }
    for axis in [axis_a, axis_b] {
        if axis >= dims {
            return Err(AnalysisError::AxisOutOfRange { axis, dims });
        }
    }
    if axis_a == axis_b {
        return Err(AnalysisError::SameAxis(axis_a));
    }
    let (rows, cols) = (report.resolutions[axis_a], report.resolutions[axis_b]);
    let mut values = vec![vec![None; cols]; rows];
    for rec in &report.cells {
        let (r, c) = (rec.cell.coords()[axis_a], rec.cell.coords()[axis_b]);
        let slot: &mut Option<f64> = &mut values[r][c];
        *slot = Some(slot.map_or(rec.fitness, |v: f64| v.max(rec.fitness)));
    }
    Ok(Heatmap {
        axes: (axis_a, axis_b),
        rows,
        cols,
        values,
    })
}

/// One individual's place in the family tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageNode {
    pub id: IndividualId,
    pub parents: Vec<IndividualId>,
    pub origin: Origin,
    pub birth_generation: u64,
    pub fitness: f64,
    pub feasible: bool,
}

impl LineageNode {
    pub fn of<G>(ind: &Individual<G>) -> Self {
        Self {
            id: ind.id,
            parents: ind.parents.clone(),
            origin: ind.origin(),
            birth_generation: ind.birth_generation,
            fitness: ind.fitness(),
            feasible: ind.is_feasible(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEdge {
    pub child: IndividualId,
    pub parent: IndividualId,
    pub operation: Origin,
}

/// Ancestor closure of one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageTree {
    pub root: IndividualId,
    pub nodes: BTreeMap<IndividualId, LineageNode>,
    pub edges: Vec<LineageEdge>,
}

impl LineageTree {
    /// Generation-0 seeds reached from the root.
    pub fn seeds(&self) -> Vec<IndividualId> {
        self.nodes
            .values()
            .filter(|n| n.parents.is_empty())
            .map(|n| n.id)
            .collect()
    }
}

pub fn lineage_trace<F>(id: IndividualId, lookup: F) -> Result<LineageTree, AnalysisError>
where
    F: Fn(IndividualId) -> Option<LineageNode>,
{
    let mut nodes = BTreeMap::new();
    let mut edges = Vec::new();
    let mut stack = vec![id];
    while let Some(current) = stack.pop() {
        if nodes.contains_key(&current) {
            continue;
        }
        let node = lookup(current).ok_or(AnalysisError::UnknownIndividual(current))?;
        for &p in &node.parents {
            edges.push(LineageEdge {
                child: current,
                parent: p,
                operation: node.origin,
            });
            stack.push(p);
        }
        nodes.insert(current, node);
    }
    Ok(LineageTree {
        root: id,
        nodes,
        edges,
    })
}

/// Individuals that are ancestors of (or equal to) every id in `ids`.
pub fn common_ancestors<F>(
    ids: &[IndividualId],
    lookup: F,
) -> Result<BTreeSet<IndividualId>, AnalysisError>
where
    F: Fn(IndividualId) -> Option<LineageNode>,
{
    let mut common: Option<BTreeSet<IndividualId>> = None;
    for &id in ids {
        let tree = lineage_trace(id, &lookup)?;
        let set: BTreeSet<IndividualId> = tree.nodes.keys().copied().collect();
        common = Some(match common {
            None => set,
            Some(c) => c.intersection(&set).copied().collect(),
        });
    }
    Ok(common.unwrap_or_default())
}
