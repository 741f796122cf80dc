//! Stage-wise continuation in `s` with blow-up detection.

use std::io::Write;

use rayon::prelude::*;
use tic_grid::{weighted_holder_norm, FlowField, NormForm, SlicePlane, TriTimeGrid, WeightSpec};
use tic_linear::{march_levels, DatumFn};

use crate::march::{initial_field, march_levels_nonlinear, validate};
use crate::newton::{SliceContext, SolverOptions};
use crate::{NonlinearError, Nonlinearity};

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    /// s-steps per stage.
    pub stage_steps: usize,
    /// Stage norms above this value count as blow-up.
    pub norm_cap: f64,
    pub norm: WeightSpec,
}

impl ContinuationOptions {
    pub fn new(d: usize, stage_steps: usize) -> Self {
        Self { stage_steps, norm_cap: 1e6, norm: WeightSpec::default_for(d) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageLog {
    pub stage: usize,
    pub s_start: f64,
    pub s_end: f64,
    /// Plain `(2 + alpha)` norm of the stage strip, sup over t-slices.
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    pub solution: FlowField,
    pub stages: Vec<StageLog>,
}

impl ContinuationReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), NonlinearError> {
        write_stages(&self.stages, w)
    }
}

pub fn write_stages<W: Write>(stages: &[StageLog], w: W) -> Result<(), NonlinearError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["stage", "s_start", "s_end", "norm"])?;
    for st in stages {
        wr.write_record([
            st.stage.to_string(),
            format!("{:.16e}", st.s_start),
            format!("{:.16e}", st.s_end),
            format!("{:.16e}", st.norm),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Norm of the part of `field` with s-index between `k_a` and `k_b` (either order).
pub fn strip_norm(field: &FlowField, k_a: usize, k_b: usize, spec: &WeightSpec) -> f64 {
    let grid = field.grid();
    let (lo, hi) = (k_a.min(k_b), k_a.max(k_b));
    let m = field.m();
    let nn = grid.space().len();
    let order = 2.0 + spec.alpha();
    (0..=grid.steps())
        .into_par_iter()
        .map(|it| {
            let ks: Vec<usize> = grid.s_range(it).filter(|k| (lo..=hi).contains(k)).collect();
            if ks.is_empty() {
                return 0.0;
            }
            let s_nodes: Vec<f64> = ks.iter().map(|&k| grid.time(k)).collect();
            let mut values = Vec::with_capacity(ks.len() * nn * m);
            for &k in &ks {
                values.extend_from_slice(field.slice(it, k));
            }
            let plane = SlicePlane { space: grid.space(), s_nodes: &s_nodes, m, values: &values };
            weighted_holder_norm(plane, NormForm::Plain, spec, order).unwrap_or(f64::INFINITY)
        })
        .reduce(|| 0.0, f64::max)
}

/// Marches stage by stage, logging each stage norm and stopping at the first sign of blow-up:
/// Newton failure, a non-finite value, or a stage norm above the cap.
pub fn continue_solution(
    f: &dyn Nonlinearity,
    g: &DatumFn,
    grid: &TriTimeGrid,
    solver: &SolverOptions,
    opts: &ContinuationOptions,
) -> Result<ContinuationReport, NonlinearError> {
    validate(f, grid)?;
    if opts.stage_steps == 0 {
        return Err(NonlinearError::InvalidParameter("stage_steps must be positive".into()));
    }
    let ctx = SliceContext::new(f, grid.space(), solver);
    let mut field = initial_field(g, grid, f.m());
    let (_, levels) = march_levels(grid);
    let mut stages = Vec::new();
    for (stage, chunk) in levels.chunks(opts.stage_steps).enumerate() {
        let (k_start, k_end) = (chunk[0].0, chunk[chunk.len() - 1].1);
        let (s_start, s_end) = (grid.time(k_start), grid.time(k_end));
        match march_levels_nonlinear(&ctx, grid, &mut field, chunk, None) {
            Ok(_) => {}
            Err(NonlinearError::NewtonDivergence { is, .. }) | Err(NonlinearError::NanDetected { is, .. }) => {
                return Err(NonlinearError::BlowUp {
                    stage,
                    s: grid.time(is),
                    reason: "implicit step has no bounded solution".into(),
                    log: stages,
                });
            }
            Err(e) => return Err(e),
        }
        let norm = strip_norm(&field, k_start, k_end, &opts.norm);
        stages.push(StageLog { stage, s_start, s_end, norm });
        if !(norm <= opts.norm_cap) {
            return Err(NonlinearError::BlowUp {
                stage,
                s: s_end,
                reason: format!("stage norm {norm:e} exceeds cap {:e}", opts.norm_cap),
                log: stages,
            });
        }
    }
    Ok(ContinuationReport { solution: field, stages })
}
