//! Reference bulk-bitwise workloads: bitmap-index queries, image
//! segmentation, and clique-star listing over adjacency bitmaps.
//!
//! Each workload fixes an expression template, the total result volume, and
//! the operand count per result page. [`build`] compiles the template with
//! the real planner, so the fused-sense chain the timing model sees is
//! exactly the chain the functional simulator executes:
//!
//! - `bmi`: "users active every day for `m` months" — an AND over `d` daily
//!   activity bitmaps, `d` = days(`m`); chains of ceil(d/48) fused senses.
//! - `ims`: color segmentation — an AND of three per-channel match vectors
//!   co-located in one block; a single fused sense.
//! - `kcs`: clique stars — AND of the `k` members' adjacency vectors, OR the
//!   clique's own vector; one two-group fused sense while the members fit a
//!   block, ceil(k/48) + 1 senses beyond that.

use crate::expr::Expr;
use crate::geometry::ChipGeometry;
use crate::planner::{self, Placement, Plan, PlanError};
use crate::system::{evaluate, RunMetrics, SystemKind, WorkloadVolume};
use crate::timing::{PowerParams, TimingParams};
use serde::{Deserialize, Serialize};

/// Average Gregorian month length keeps month counts calendar-faithful.
pub fn days_in_months(months: u32) -> u32 {
    (months as f64 * 365.25 / 12.0).floor() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "workload", rename_all = "lowercase")]
pub enum WorkloadSpec {
    Bmi { users: u64, months: u32 },
    Ims { images: u64 },
    Kcs { vertices: u64, cliques: u64, k: u32 },
}

impl WorkloadSpec {
    pub fn name(self) -> &'static str {
        match self {
            WorkloadSpec::Bmi { .. } => "bmi",
            WorkloadSpec::Ims { .. } => "ims",
            WorkloadSpec::Kcs { .. } => "kcs",
        }
    }

    /// The swept parameter (months, images, clique size).
    pub fn param(self) -> u64 {
        match self {
            WorkloadSpec::Bmi { months, .. } => months as u64,
            WorkloadSpec::Ims { images } => images,
            WorkloadSpec::Kcs { k, .. } => k as u64,
        }
    }

    /// Expression template for one result page.
    pub fn expr(self) -> Expr {
        match self {
            WorkloadSpec::Bmi { months, .. } => {
                let d = days_in_months(months).max(1);
                Expr::And((0..d).map(|i| Expr::var(&format!("day{i}"))).collect())
            }
            WorkloadSpec::Ims { .. } => {
                Expr::And(vec![Expr::var("y"), Expr::var("u"), Expr::var("v")])
            }
            WorkloadSpec::Kcs { k, .. } => {
                let members = Expr::And(
                    (0..k.max(1)).map(|i| Expr::var(&format!("adj{i}"))).collect(),
                );
                Expr::Or(vec![members, Expr::var("clique")])
            }
        }
    }

    /// Result pages across the whole job.
    pub fn result_pages(self, geometry: &ChipGeometry) -> u64 {
        let bl = geometry.bitlines as u64;
        match self {
            WorkloadSpec::Bmi { users, .. } => users.div_ceil(bl),
            WorkloadSpec::Ims { images } => (images * 800 * 600 * 4).div_ceil(bl),
            WorkloadSpec::Kcs { vertices, cliques, .. } => vertices.div_ceil(bl) * cliques,
        }
    }

    /// The nine sweep points the reference evaluation uses.
    pub fn reference_points() -> Vec<WorkloadSpec> {
        let mut pts = Vec::new();
        for months in [1, 12, 36] {
            pts.push(WorkloadSpec::Bmi { users: 800_000_000, months });
        }
        for images in [4096, 8192] {
            pts.push(WorkloadSpec::Ims { images });
        }
        for k in [8, 16, 32, 64] {
            pts.push(WorkloadSpec::Kcs { vertices: 32_000_000, cliques: 1024, k });
        }
        pts
    }
}

/// A workload bound to a geometry: its per-page plan and whole-job volume.
#[derive(Debug, Clone)]
pub struct Workload {
    pub spec: WorkloadSpec,
    pub expr: Expr,
    pub placement: Placement,
    pub plan: Plan,
    pub volume: WorkloadVolume,
}

/// Compiles the workload's expression template and derives the volume
/// description the system models consume.
pub fn build(spec: WorkloadSpec, geometry: &ChipGeometry) -> Result<Workload, PlanError> {
    let expr = spec.expr();
    let placement = Placement::for_expr(&expr, geometry)?;
    let plan = planner::compile(&expr, &placement)?;
    let operands_per_page = expr.vars().len() as u64;
    let result_pages = spec.result_pages(geometry);
    let volume = WorkloadVolume {
        result_pages,
        operand_pages: result_pages * operands_per_page,
        single_wl_senses: operands_per_page as u32,
        multi_wl_frames: plan.frame_shapes(),
        latch_xor_ops: plan.stats().latch_xors as u32,
    };
    Ok(Workload { spec, expr, placement, plan, volume })
}

/// One CSV row of the evaluation sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub workload: &'static str,
    pub param: u64,
    pub system: &'static str,
    #[serde(flatten)]
    pub metrics: RunMetrics,
}

/// Evaluates every (point, system) pair at one geometry.
pub fn run_points(
    points: &[WorkloadSpec],
    systems: &[SystemKind],
    geometry: &ChipGeometry,
    timing: &TimingParams,
    power: &PowerParams,
) -> Result<Vec<RunRecord>, PlanError> {
    let mut rows = Vec::new();
    for &spec in points {
        let wl = build(spec, geometry)?;
        for &system in systems {
            rows.push(RunRecord {
                workload: spec.name(),
                param: spec.param(),
                system: system.label(),
                metrics: evaluate(&wl.volume, system, geometry, timing, power),
            });
        }
    }
    Ok(rows)
}

pub fn geometric_mean(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    (xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64).exp()
}
