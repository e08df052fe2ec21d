//! Closed-form time-to-precision sweeps.
//!
//! A sweep holds the base experiment's constants (radius, Lipschitz
//! constants, tree depth, delay, eigengap) fixed and varies one axis,
//! reporting the accounting time each algorithm needs to reach the target
//! accuracy. No simulation runs; the numbers are the exact accounting
//! identities for the derived iteration counts.

use serde::Serialize;

use nsdo::drs::DrsConfig;
use nsdo::harness::{drs_time_accounting, mspd_time_accounting, naive_time_accounting};

use crate::{ConfigError, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    Dimension,
    Eigengap,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name {
            "epsilon" => Ok(SweepAxis::Epsilon),
            "dimension" => Ok(SweepAxis::Dimension),
            "eigengap" => Ok(SweepAxis::Eigengap),
            other => Err(crate::field_err(
                "axis",
                format!("unknown sweep axis `{other}`; expected epsilon | dimension | eigengap"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Dimension => "dimension",
            SweepAxis::Eigengap => "eigengap",
        }
    }
}

/// One sweep row: time-to-ε for each algorithm at this axis value, with
/// the communication/computation split for the two optimal methods.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub naive_time: f64,
    pub drs_time: f64,
    pub drs_comm_time: f64,
    pub drs_comp_time: f64,
    pub mspd_time: f64,
    pub mspd_comm_time: f64,
    pub mspd_comp_time: f64,
}

/// Computes the sweep table for the given axis values.
pub fn sweep_table(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRow>, ConfigError> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(crate::field_err("values", "axis values must be positive"));
    }
    let inst = crate::instantiate(config, true)?;
    let radius = inst.problem.radius;
    let lipschitz_global = inst.problem.lipschitz_global;
    let lipschitz_local = inst.problem.lipschitz_local_avg();
    let depth = inst.network.spanning_tree()?.max_depth();
    let tau = inst.network.tau();
    let base_gamma = inst.gossip.eigengap()?;
    let base_epsilon = config.epsilon;
    let base_dimension = inst.problem.dimension;

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let (epsilon, dimension, gamma) = match axis {
            SweepAxis::Epsilon => (value, base_dimension, base_gamma),
            SweepAxis::Dimension => (base_epsilon, value.round() as usize, base_gamma),
            SweepAxis::Eigengap => (base_epsilon, base_dimension, value),
        };
        if matches!(axis, SweepAxis::Eigengap) && gamma > 1.0 {
            return Err(crate::field_err("values", "eigengap values must be in (0, 1]"));
        }

        let naive_iters = ((radius * lipschitz_global / epsilon).powi(2)).ceil().max(1.0) as usize;
        let naive_time = naive_time_accounting(naive_iters, depth, tau);

        let drs = DrsConfig::from_target_accuracy(
            epsilon,
            radius,
            lipschitz_global,
            dimension.max(1),
            0,
        )?;
        let drs_comm_time = drs.iterations as f64 * 2.0 * depth as f64 * tau;
        let drs_comp_time = (drs.iterations * drs.samples_per_node) as f64;
        let drs_time = drs_time_accounting(drs.iterations, drs.samples_per_node, depth, tau);

        let gossip_steps = ((1.0 / gamma.sqrt()).floor() as usize).max(1);
        let outer = ((4.0 * radius * lipschitz_local / epsilon).ceil() as usize).max(1);
        let mspd_comm_time = (outer * gossip_steps) as f64 * tau;
        let mspd_comp_time = (outer * outer) as f64;
        let mspd_time = mspd_time_accounting(outer, gossip_steps, outer, tau);

        rows.push(SweepRow {
            value,
            naive_time,
            drs_time,
            drs_comm_time,
            drs_comp_time,
            mspd_time,
            mspd_comm_time,
            mspd_comp_time,
        });
    }
    Ok(rows)
}

/// CSV rendering with one row per axis value.
pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{},naive_time,drs_time,drs_comm_time,drs_comp_time,mspd_time,mspd_comm_time,mspd_comp_time\n",
        axis.name()
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.value,
            r.naive_time,
            r.drs_time,
            r.drs_comm_time,
            r.drs_comp_time,
            r.mspd_time,
            r.mspd_comm_time,
            r.mspd_comp_time
        ));
    }
    out
}
