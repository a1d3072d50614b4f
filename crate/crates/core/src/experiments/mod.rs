//! Scenario builders and study drivers.
//!
//! Every study is deterministic in its seed. Independent runs inside a study
//! (loads, assignments, samples) go through rayon and are reduced in input
//! order, so the thread count never changes a result.

mod canonical;
mod cross;
mod fim;
mod nhop;

use std::io::Write;

use crate::error::Result;
use crate::sim::{MacParams, SimResult};

pub use canonical::{
    build_canonical_chain, default_loads, saturation_sweep, write_sweep_csv, CanonicalChainSpec, SweepPoint,
    CANONICAL_SIGNATURES,
};
pub use cross::{
    chain_class, conditional_interaction, cross_chain_study, write_cross_csv, ChainClass, ConditionalTable,
    CrossChainParams, CrossChainReport, CrossSample,
};
pub use fim::{flow_in_middle, flow_in_middle_links, write_fim_csv, FlowInMiddle};
pub use nhop::{
    all_assignments, nhop_study, realize_assignment, single_ht_assignments, write_nhop_csv, Assignment, NhopRow,
};

/// One `(x, series, y)` triple for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub series: String,
    pub y: f64,
}

impl PlotPoint {
    pub fn new(x: f64, series: impl Into<String>, y: f64) -> Self {
        Self {
            x,
            series: series.into(),
            y,
        }
    }
}

pub fn write_plot_data<W: Write>(points: &[PlotPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "series", "y"])?;
    for p in points {
        w.write_record([p.x.to_string(), p.series.clone(), p.y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Airtime lost by one flow, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LostCapacity {
    /// Data frames that were sent but not acknowledged.
    pub retransmission_s: f64,
    /// Queue-dropped packets, one nominal data frame each.
    pub queue_drop_s: f64,
}

/// Lost airtime per flow of a finished run.
pub fn lost_capacity(result: &SimResult, mac: &MacParams) -> Vec<LostCapacity> {
    let frame_s = mac.data_frame_us() * 1e-6;
    result
        .flows
        .iter()
        .map(|f| {
            let failed: u64 = f.hops.iter().map(|h| h.attempts - h.acked - h.in_flight).sum();
            LostCapacity {
                retransmission_s: failed as f64 * frame_s,
                queue_drop_s: f.queue_drops as f64 * frame_s,
            }
        })
        .collect()
}
