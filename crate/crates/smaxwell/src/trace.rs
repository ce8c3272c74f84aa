//! Per-iteration and per-sweep records with CSV export.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub fn push(&mut self, iter: usize, objective: f64, grad_norm: f64, step: f64) {
        self.rows.push(TraceRow {
            iter,
            objective,
            grad_norm,
            step,
        });
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,objective,grad_norm,step\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.iter, r.objective, r.grad_norm, r.step
            );
        }
        out
    }
}

/// One mountain-pass sweep: the path maximum, the gradient there, and the
/// scalars needed by the boundedness diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub sweep: usize,
    pub path_max: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub maximizer_index: usize,
    pub u_d_norm: f64,
    pub superlinearity_excess: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MountainPassTrace {
    pub rows: Vec<SweepRow>,
}

impl MountainPassTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "sweep,path_max,grad_norm,step,maximizer_index,u_d_norm,superlinearity_excess\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.sweep,
                r.path_max,
                r.grad_norm,
                r.step,
                r.maximizer_index,
                r.u_d_norm,
                r.superlinearity_excess
            );
        }
        out
    }
}
