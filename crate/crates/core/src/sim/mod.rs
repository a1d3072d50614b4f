//! Discrete-event simulation of CSMA/CA (DCF basic access, no RTS/CTS) over
//! deterministic two-ray power with SINR/capture reception.
//!
//! One run is a single sequential event loop. Events at the same instant are
//! ordered with transmission ends first, then by scheduling order, so results
//! are bit-identical for a given scenario and seed.

mod engine;
pub mod reception;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::geom::{NodeId, Point};
use crate::rf::RadioConfig;

pub use reception::{resolve_reception, Interval, Time};

/// DCF timing and queueing parameters. Durations in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacParams {
    pub slot_time: f64,
    pub sifs: f64,
    pub difs: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u32,
    /// bits per second
    pub data_rate: f64,
    /// bytes
    pub payload_size: u32,
    pub phy_overhead: f64,
    pub ack_duration: f64,
    pub queue_capacity: usize,
}

impl Default for MacParams {
    /// 6 Mb/s OFDM timing.
    fn default() -> Self {
        Self {
            slot_time: 9.0,
            sifs: 16.0,
            difs: 34.0,
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 7,
            data_rate: 6.0e6,
            payload_size: 1500,
            phy_overhead: 20.0,
            ack_duration: 44.0,
            queue_capacity: 50,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        let is_window = |w: u32| (w + 1).is_power_of_two();
        if !(is_window(self.cw_min) && is_window(self.cw_max) && self.cw_min < self.cw_max) {
            return Err(Error::Config(format!(
                "contention windows must be 2^k-1 with cw_min < cw_max, got {} and {}",
                self.cw_min, self.cw_max
            )));
        }
        if self.retry_limit < 1 {
            return Err(Error::Config("retry_limit must be at least 1".into()));
        }
        for (name, v) in [
            ("slot_time", self.slot_time),
            ("sifs", self.sifs),
            ("difs", self.difs),
            ("data_rate", self.data_rate),
            ("phy_overhead", self.phy_overhead),
            ("ack_duration", self.ack_duration),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.payload_size == 0 || self.queue_capacity == 0 {
            return Err(Error::Config("payload_size and queue_capacity must be positive".into()));
        }
        Ok(())
    }

    pub fn payload_bits(&self) -> f64 {
        self.payload_size as f64 * 8.0
    }

    /// Airtime of one data frame in microseconds.
    pub fn data_frame_us(&self) -> f64 {
        self.phy_overhead + self.payload_bits() / self.data_rate * 1e6
    }

    /// Closed-form saturated single-link throughput in bits/s, with the mean
    /// backoff of cw_min/2 slots.
    pub fn single_link_capacity(&self) -> f64 {
        let cycle_us = self.difs
            + self.cw_min as f64 / 2.0 * self.slot_time
            + self.data_frame_us()
            + self.sifs
            + self.ack_duration;
        self.payload_bits() / (cycle_us * 1e-6)
    }

    /// CBR packet rate for a load normalized to [`Self::single_link_capacity`].
    pub fn packets_per_second(&self, normalized_load: f64) -> f64 {
        normalized_load * self.single_link_capacity() / self.payload_bits()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Traffic {
    /// Periodic arrivals at this many packets per second, with a seeded random phase.
    Cbr { packets_per_second: f64 },
    /// The source always has a packet of this flow queued.
    Saturated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub chain: Chain,
    pub traffic: Traffic,
}

/// Node positions plus the flows to run over them. Chain node ids index into
/// `positions`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub positions: Vec<Point>,
    pub flows: Vec<Flow>,
}

impl Scenario {
    /// One flow over a chain whose node ids are 0..=n in path order.
    pub fn single(chain: &Chain, traffic: Traffic) -> Self {
        let relabeled =
            Chain::new((0..chain.nodes().len()).collect(), chain.positions().to_vec()).expect("source chain was valid");
        Self {
            positions: chain.positions().to_vec(),
            flows: vec![Flow {
                chain: relabeled,
                traffic,
            }],
        }
    }

    /// Several chains with disjoint node sets, each keeping its own positions.
    pub fn disjoint(chains: &[(Chain, Traffic)]) -> Self {
        let mut positions = Vec::new();
        let mut flows = Vec::new();
        for (chain, traffic) in chains {
            let offset = positions.len();
            positions.extend_from_slice(chain.positions());
            let nodes = (offset..offset + chain.nodes().len()).collect();
            flows.push(Flow {
                chain: Chain::new(nodes, chain.positions().to_vec()).expect("source chain was valid"),
                traffic: *traffic,
            });
        }
        Self { positions, flows }
    }

    pub fn validate(&self, cfg: &RadioConfig) -> Result<()> {
        if self.positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::Scenario("non-finite node position".into()));
        }
        for (f, flow) in self.flows.iter().enumerate() {
            for &n in flow.chain.nodes() {
                if n >= self.positions.len() {
                    return Err(Error::Scenario(format!("flow {f} references unknown node {n}")));
                }
            }
            for hop in flow.chain.hops() {
                let (a, b) = (self.positions[hop.src], self.positions[hop.dst]);
                if cfg.power_between(&a, &b) < cfg.rx_threshold {
                    return Err(Error::Scenario(format!(
                        "flow {f}: hop {hop} ({:.1} m) is not decodable in isolation",
                        a.distance(&b)
                    )));
                }
            }
            if let Traffic::Cbr { packets_per_second } = flow.traffic {
                if !(packets_per_second > 0.0 && packets_per_second.is_finite()) {
                    return Err(Error::Scenario(format!("flow {f}: CBR rate must be positive")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub duration_s: f64,
    pub seed: u64,
    /// Keep a per-event log and per-frame records.
    pub record_events: bool,
    /// Keep the full signal timeline of every intended reception.
    pub record_receptions: bool,
}

impl RunOptions {
    pub fn new(duration_s: f64, seed: u64) -> Self {
        Self {
            duration_s,
            seed,
            record_events: false,
            record_receptions: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LinkStats {
    pub src: NodeId,
    pub dst: NodeId,
    /// Data frames transmitted.
    pub attempts: u64,
    pub acked: u64,
    /// Data frames whose ACK never arrived.
    pub collision_losses: u64,
    pub retry_drops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct HopStats {
    pub attempts: u64,
    pub acked: u64,
    pub collision_losses: u64,
    pub retry_drops: u64,
    /// Distinct packets decoded by this hop's receiver.
    pub delivered: u64,
    /// Data frames sent whose outcome was still pending at the end.
    pub in_flight: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FlowStats {
    pub generated: u64,
    pub delivered: u64,
    pub queue_drops: u64,
    /// Retry-limit drops of packets the next node had not already received.
    pub retry_losses: u64,
    /// Live packets still queued somewhere along the chain at the end.
    pub in_network: u64,
    pub hops: Vec<HopStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct NodeStats {
    pub queue_drops: u64,
    /// Nanoseconds this node spent transmitting (data and ACK).
    pub tx_time: Time,
    /// Nanoseconds this node sensed the medium busy.
    pub busy_time: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    Data,
    Ack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameOutcome {
    Acked,
    CollisionLoss,
    RetryLimitDrop,
    /// Captured by its receiver despite overlapping interference.
    CaptureWin,
    /// Decoded cleanly (ACK frames).
    Received,
    /// ACK frame not decoded.
    Lost,
    InFlight,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub kind: FrameKind,
    pub flow: usize,
    /// Source sequence number of the packet carried (data) or acknowledged.
    pub packet: u64,
    pub hop: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub start: Time,
    pub end: Time,
    pub outcome: FrameOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEvent {
    pub time: Time,
    pub node: NodeId,
    pub event: &'static str,
    pub frame_id: u64,
    pub outcome: &'static str,
}

/// Everything needed to re-derive one reception decision offline.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptionRecord {
    pub frame_id: u64,
    pub receiver: NodeId,
    pub start: Time,
    pub end: Time,
    pub power: f64,
    pub overlapping: Vec<Interval>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimResult {
    pub duration_s: f64,
    pub mac: Option<MacParams>,
    pub links: Vec<LinkStats>,
    pub nodes: Vec<NodeStats>,
    pub flows: Vec<FlowStats>,
    pub frames: Vec<FrameRecord>,
    pub events: Vec<LogEvent>,
    pub receptions: Vec<ReceptionRecord>,
}

impl SimResult {
    pub fn link(&self, src: NodeId, dst: NodeId) -> Option<&LinkStats> {
        self.links.iter().find(|l| l.src == src && l.dst == dst)
    }

    pub fn write_event_log<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_us", "node", "event", "frame_id", "outcome"])?;
        for e in &self.events {
            w.write_record([
                format!("{:.3}", e.time as f64 / 1000.0),
                e.node.to_string(),
                e.event.to_string(),
                e.frame_id.to_string(),
                e.outcome.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_links_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for l in &self.links {
            w.serialize(l)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one simulation.
pub fn run(scenario: &Scenario, mac: &MacParams, cfg: &RadioConfig, opts: &RunOptions) -> Result<SimResult> {
    mac.validate()?;
    cfg.validate()?;
    scenario.validate(cfg)?;
    if !(opts.duration_s > 0.0 && opts.duration_s.is_finite()) {
        return Err(Error::Scenario(format!(
            "duration must be positive, got {}",
            opts.duration_s
        )));
    }
    Ok(engine::Engine::new(scenario, mac, cfg, opts).run())
}

/// End-to-end goodput of `flow` in bits/s.
pub fn throughput(result: &SimResult, flow: usize) -> Result<f64> {
    if !(result.duration_s > 0.0) {
        return Err(Error::Domain("zero-length run".into()));
    }
    let stats = result
        .flows
        .get(flow)
        .ok_or_else(|| Error::Domain(format!("result has no flow {flow}")))?;
    let bits = result.mac.unwrap_or_default().payload_bits();
    Ok(stats.delivered as f64 * bits / result.duration_s)
}

/// Failed data-frame transmissions along the flow per delivered packet, in
/// percent. Frames still awaiting their outcome at the end are not counted.
/// `None` when nothing was delivered.
pub fn drop_percentage(result: &SimResult, flow: usize) -> Option<f64> {
    let stats = result.flows.get(flow)?;
    if stats.delivered == 0 {
        return None;
    }
    let failed: u64 = stats.hops.iter().map(|h| h.attempts - h.acked - h.in_flight).sum();
    Some(100.0 * failed as f64 / stats.delivered as f64)
}
