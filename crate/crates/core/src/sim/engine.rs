use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reception::{Interval, Time};
use super::{
    FlowStats, FrameKind, FrameOutcome, FrameRecord, HopStats, LinkStats, LogEvent, MacParams, NodeStats,
    ReceptionRecord, RunOptions, Scenario, SimResult, Traffic,
};
use crate::geom::NodeId;
use crate::rf::RadioConfig;

fn us_to_ns(us: f64) -> Time {
    (us * 1000.0).round() as Time
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    flow: usize,
    seq: u64,
    /// Index of the hop this node forwards the packet on.
    hop: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mac {
    Idle,
    /// Waiting to transmit the head-of-line packet. `countdown_from` is the
    /// instant slot countdown (re)starts after DIFS; `None` while frozen.
    Contending {
        remaining: u32,
        countdown_from: Option<Time>,
    },
    SendingData,
    AwaitingAck {
        frame: u64,
    },
}

#[derive(Debug, Clone, Copy)]
struct Lock {
    tx: usize,
    start: Time,
    ok: bool,
    /// Some other signal overlapped the frame.
    contested: bool,
}

#[derive(Debug)]
struct Node {
    queue: VecDeque<Packet>,
    cw: u32,
    retries: u32,
    mac: Mac,
    /// Bumped to invalidate pending backoff and ACK-timeout events.
    timer_gen: u64,
    tx: Option<usize>,
    lock: Option<Lock>,
    busy: bool,
    busy_since: Time,
    stats: NodeStats,
}

#[derive(Debug, Clone, Copy)]
enum TxKind {
    Data { packet: Packet },
    Ack { data_frame: u64, packet: Packet },
}

#[derive(Debug, Clone, Copy)]
struct Tx {
    frame_id: u64,
    node: NodeId,
    to: NodeId,
    start: Time,
    end: Time,
    kind: TxKind,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    TxEnd {
        tx: usize,
    },
    Arrival {
        flow: usize,
    },
    BackoffDone {
        node: NodeId,
        gen: u64,
    },
    SendAck {
        node: NodeId,
        to: NodeId,
        data_frame: u64,
        packet: Packet,
    },
    AckTimeout {
        node: NodeId,
        gen: u64,
    },
}

impl Event {
    /// Transmissions ending at an instant are retired before anything else
    /// happens at that instant.
    fn class(&self) -> u8 {
        match self {
            Event::TxEnd { .. } => 0,
            _ => 1,
        }
    }
}

pub(super) struct Engine<'a> {
    scenario: &'a Scenario,
    cfg: RadioConfig,
    mac: MacParams,
    opts: RunOptions,
    end: Time,
    slot: Time,
    sifs: Time,
    difs: Time,
    data_ns: Time,
    ack_ns: Time,
    ack_timeout: Time,
    power: Vec<Vec<f64>>,
    nodes: Vec<Node>,
    txs: Vec<Tx>,
    active: Vec<usize>,
    queue: BinaryHeap<Reverse<(Time, u8, u64, usize)>>,
    events: Vec<Event>,
    seq: u64,
    rng: ChaCha8Rng,
    flows: Vec<FlowStats>,
    /// Highest chain position that has received each packet, per flow.
    reached: Vec<Vec<usize>>,
    next_seq: Vec<u64>,
    links: HashMap<(NodeId, NodeId), LinkStats>,
    frame_records: Vec<FrameRecord>,
    frame_index: HashMap<u64, usize>,
    log: Vec<LogEvent>,
    receptions: Vec<ReceptionRecord>,
    next_frame: u64,
    now: Time,
}

impl<'a> Engine<'a> {
    pub(super) fn new(scenario: &'a Scenario, mac: &MacParams, cfg: &RadioConfig, opts: &RunOptions) -> Self {
        let n = scenario.positions.len();
        let power = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            cfg.power_between(&scenario.positions[i], &scenario.positions[j])
                        }
                    })
                    .collect()
            })
            .collect();
        let nodes = (0..n)
            .map(|_| Node {
                queue: VecDeque::new(),
                cw: mac.cw_min,
                retries: 0,
                mac: Mac::Idle,
                timer_gen: 0,
                tx: None,
                lock: None,
                busy: false,
                busy_since: 0,
                stats: NodeStats::default(),
            })
            .collect();
        let flows = scenario
            .flows
            .iter()
            .map(|f| FlowStats {
                hops: vec![HopStats::default(); f.chain.hop_count()],
                ..Default::default()
            })
            .collect();
        let slot = us_to_ns(mac.slot_time);
        let sifs = us_to_ns(mac.sifs);
        let ack_ns = us_to_ns(mac.ack_duration);
        Self {
            scenario,
            cfg: *cfg,
            mac: *mac,
            opts: *opts,
            end: (opts.duration_s * 1e9).round() as Time,
            slot,
            sifs,
            difs: us_to_ns(mac.difs),
            data_ns: us_to_ns(mac.data_frame_us()),
            ack_ns,
            ack_timeout: sifs + ack_ns + slot,
            power,
            nodes,
            txs: Vec::new(),
            active: Vec::new(),
            queue: BinaryHeap::new(),
            events: Vec::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            flows,
            reached: vec![Vec::new(); scenario.flows.len()],
            next_seq: vec![0; scenario.flows.len()],
            links: HashMap::new(),
            frame_records: Vec::new(),
            frame_index: HashMap::new(),
            log: Vec::new(),
            receptions: Vec::new(),
            next_frame: 0,
            now: 0,
        }
    }

    fn schedule(&mut self, at: Time, ev: Event) {
        let idx = self.events.len();
        self.events.push(ev);
        self.queue.push(Reverse((at, ev.class(), self.seq, idx)));
        self.seq += 1;
    }

    fn log(&mut self, node: NodeId, event: &'static str, frame_id: u64, outcome: &'static str) {
        if self.opts.record_events {
            self.log.push(LogEvent {
                time: self.now,
                node,
                event,
                frame_id,
                outcome,
            });
        }
    }

    pub(super) fn run(mut self) -> SimResult {
        for f in 0..self.scenario.flows.len() {
            match self.scenario.flows[f].traffic {
                Traffic::Cbr { packets_per_second } => {
                    let interval = 1e9 / packets_per_second;
                    let phase = (self.rng.gen::<f64>() * interval) as Time;
                    self.schedule(phase, Event::Arrival { flow: f });
                }
                Traffic::Saturated => {
                    let src = self.scenario.flows[f].chain.source();
                    self.generate(f);
                    self.kick(src);
                }
            }
        }
        while let Some(Reverse((at, _, _, idx))) = self.queue.pop() {
            if at >= self.end {
                break;
            }
            self.now = at;
            let ev = self.events[idx];
            self.handle(ev);
        }
        self.now = self.end;
        self.finish()
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::Arrival { flow } => {
                if let Traffic::Cbr { packets_per_second } = self.scenario.flows[flow].traffic {
                    let next = self.now + (1e9 / packets_per_second).round().max(1.0) as Time;
                    self.schedule(next, Event::Arrival { flow });
                }
                let src = self.scenario.flows[flow].chain.source();
                self.generate(flow);
                self.kick(src);
            }
            Event::BackoffDone { node, gen } => {
                let n = &self.nodes[node];
                if n.timer_gen != gen {
                    return;
                }
                if let Mac::Contending { .. } = n.mac {
                    if n.tx.is_some() {
                        // still sending an ACK: contend again once it ends
                        self.nodes[node].mac = Mac::Contending {
                            remaining: 0,
                            countdown_from: None,
                        };
                        return;
                    }
                    let packet = *n.queue.front().expect("contending without a packet");
                    self.nodes[node].mac = Mac::SendingData;
                    let to = self.next_node(packet);
                    let hop = &mut self.flows[packet.flow].hops[packet.hop];
                    hop.attempts += 1;
                    self.links
                        .entry((node, to))
                        .or_insert(LinkStats {
                            src: node,
                            dst: to,
                            ..Default::default()
                        })
                        .attempts += 1;
                    self.start_tx(node, to, self.data_ns, TxKind::Data { packet });
                }
            }
            Event::TxEnd { tx } => self.end_tx(tx),
            Event::SendAck {
                node,
                to,
                data_frame,
                packet,
            } => {
                if self.nodes[node].tx.is_none() {
                    self.start_tx(node, to, self.ack_ns, TxKind::Ack { data_frame, packet });
                }
            }
            Event::AckTimeout { node, gen } => {
                let n = &self.nodes[node];
                if n.timer_gen != gen {
                    return;
                }
                if let Mac::AwaitingAck { frame } = n.mac {
                    self.ack_failed(node, frame);
                }
            }
        }
    }

    fn next_node(&self, p: Packet) -> NodeId {
        self.scenario.flows[p.flow].chain.nodes()[p.hop + 1]
    }

    /// Creates a packet at the flow's source.
    fn generate(&mut self, flow: usize) {
        let seq = self.next_seq[flow];
        self.next_seq[flow] += 1;
        self.reached[flow].push(0);
        self.flows[flow].generated += 1;
        let src = self.scenario.flows[flow].chain.source();
        self.enqueue(src, Packet { flow, seq, hop: 0 });
    }

    fn enqueue(&mut self, node: NodeId, p: Packet) {
        if self.nodes[node].queue.len() >= self.mac.queue_capacity {
            self.nodes[node].stats.queue_drops += 1;
            self.flows[p.flow].queue_drops += 1;
            self.log(node, "queue_drop", p.seq, "QueueDrop");
        } else {
            self.nodes[node].queue.push_back(p);
        }
    }

    /// Keeps saturated sources backlogged after their head-of-line leaves.
    fn refill(&mut self, node: NodeId) {
        for f in 0..self.scenario.flows.len() {
            let flow = &self.scenario.flows[f];
            if flow.traffic == Traffic::Saturated
                && flow.chain.source() == node
                && !self.nodes[node].queue.iter().any(|p| p.flow == f && p.hop == 0)
            {
                self.generate(f);
            }
        }
    }

    /// Starts contention if the node is idle with a queued packet.
    fn kick(&mut self, node: NodeId) {
        let n = &mut self.nodes[node];
        if n.mac != Mac::Idle || n.queue.is_empty() {
            return;
        }
        let remaining = self.rng.gen_range(0..=n.cw);
        n.mac = Mac::Contending {
            remaining,
            countdown_from: None,
        };
        if !n.busy {
            self.resume_countdown(node);
        }
    }

    fn resume_countdown(&mut self, node: NodeId) {
        let now = self.now;
        let n = &mut self.nodes[node];
        if let Mac::Contending {
            remaining,
            countdown_from: None,
        } = n.mac
        {
            let from = now + self.difs;
            n.mac = Mac::Contending {
                remaining,
                countdown_from: Some(from),
            };
            n.timer_gen += 1;
            let gen = n.timer_gen;
            self.schedule(from + remaining as Time * self.slot, Event::BackoffDone { node, gen });
        }
    }

    fn freeze_countdown(&mut self, node: NodeId) {
        let now = self.now;
        let slot = self.slot;
        let n = &mut self.nodes[node];
        if let Mac::Contending {
            remaining,
            countdown_from: Some(from),
        } = n.mac
        {
            let expiry = from + remaining as Time * slot;
            if now >= expiry {
                // expires in this very instant: transmits in the same slot
                return;
            }
            let elapsed = if now > from { ((now - from) / slot) as u32 } else { 0 };
            n.mac = Mac::Contending {
                remaining: remaining - elapsed.min(remaining),
                countdown_from: None,
            };
            n.timer_gen += 1;
        }
    }

    fn sensed_power(&self, node: NodeId) -> f64 {
        self.active
            .iter()
            .map(|&t| self.txs[t].node)
            .filter(|&src| src != node)
            .map(|src| self.power[src][node])
            .sum()
    }

    fn update_sensing(&mut self) {
        for node in 0..self.nodes.len() {
            let busy = self.nodes[node].tx.is_some() || self.sensed_power(node) >= self.cfg.cs_threshold;
            let was = self.nodes[node].busy;
            if busy == was {
                continue;
            }
            self.nodes[node].busy = busy;
            if busy {
                self.nodes[node].busy_since = self.now;
                self.freeze_countdown(node);
            } else {
                let n = &mut self.nodes[node];
                n.stats.busy_time += self.now - n.busy_since;
                self.resume_countdown(node);
            }
        }
    }

    fn interference_at(&self, node: NodeId, except_tx: usize) -> f64 {
        self.active
            .iter()
            .filter(|&&t| t != except_tx)
            .map(|&t| self.txs[t].node)
            .map(|src| {
                if src == node {
                    f64::INFINITY
                } else {
                    self.power[src][node]
                }
            })
            .sum()
    }

    fn start_tx(&mut self, node: NodeId, to: NodeId, duration: Time, kind: TxKind) {
        let now = self.now;
        let frame_id = self.next_frame;
        self.next_frame += 1;
        let id = self.txs.len();
        let tx = Tx {
            frame_id,
            node,
            to,
            start: now,
            end: now + duration,
            kind,
        };
        self.txs.push(tx);
        self.active.push(id);
        self.nodes[node].tx = Some(id);
        self.nodes[node].stats.tx_time += duration;
        self.schedule(tx.end, Event::TxEnd { tx: id });

        let (event, packet) = match kind {
            TxKind::Data { packet } => ("data_start", packet),
            TxKind::Ack { packet, .. } => ("ack_start", packet),
        };
        self.log(node, event, frame_id, "");
        if self.opts.record_events {
            self.frame_index.insert(frame_id, self.frame_records.len());
            self.frame_records.push(FrameRecord {
                frame_id,
                kind: match kind {
                    TxKind::Data { .. } => FrameKind::Data,
                    TxKind::Ack { .. } => FrameKind::Ack,
                },
                flow: packet.flow,
                packet: packet.seq,
                hop: packet.hop,
                src: node,
                dst: to,
                start: tx.start,
                end: tx.end,
                outcome: FrameOutcome::InFlight,
            });
        }

        // a transmitting node loses whatever it was receiving
        if let Some(lock) = self.nodes[node].lock.as_mut() {
            lock.ok = false;
        }
        // new interference at every other locked receiver
        for q in 0..self.nodes.len() {
            if q == node || q == to {
                continue;
            }
            if let Some(lock) = self.nodes[q].lock {
                if self.power[node][q] > self.cfg.noise_floor {
                    self.nodes[q].lock.as_mut().unwrap().contested = true;
                }
                if lock.ok {
                    let signal = self.power[self.txs[lock.tx].node][q];
                    if signal / (self.cfg.noise_floor + self.interference_at(q, lock.tx)) < self.cfg.capture_sinr {
                        self.nodes[q].lock.as_mut().unwrap().ok = false;
                    }
                }
            }
        }
        // the intended receiver
        let signal = self.power[node][to];
        let receiver = &self.nodes[to];
        let held = receiver.lock.filter(|l| l.start < now);
        let deaf: f64 = self
            .active
            .iter()
            .map(|&t| &self.txs[t])
            .filter(|t| t.start < now)
            .map(|t| {
                if t.node == to {
                    f64::INFINITY
                } else {
                    self.power[t.node][to]
                }
            })
            .sum();
        let sinr = signal / (self.cfg.noise_floor + self.interference_at(to, id));
        let lockable = receiver.tx.is_none()
            && held.is_none()
            && deaf < self.cfg.cs_threshold
            && signal >= self.cfg.rx_threshold
            && sinr >= self.cfg.capture_sinr;
        if lockable {
            // a same-instant lock cannot survive this stronger frame
            let contested = self.interference_at(to, id) > self.cfg.noise_floor;
            self.nodes[to].lock = Some(Lock {
                tx: id,
                start: now,
                ok: true,
                contested,
            });
        } else if let Some(lock) = self.nodes[to].lock {
            let s = self.power[self.txs[lock.tx].node][to];
            let i = self.interference_at(to, lock.tx);
            let survives = lock.ok && s / (self.cfg.noise_floor + i) >= self.cfg.capture_sinr;
            self.nodes[to].lock = Some(Lock {
                ok: survives,
                contested: true,
                ..lock
            });
        }
        self.update_sensing();
    }

    fn end_tx(&mut self, id: usize) {
        let tx = self.txs[id];
        self.active.retain(|&t| t != id);
        self.nodes[tx.node].tx = None;
        let (received, contested) = match self.nodes[tx.to].lock {
            Some(lock) if lock.tx == id => {
                self.nodes[tx.to].lock = None;
                (lock.ok, lock.contested)
            }
            _ => (false, false),
        };
        if self.opts.record_receptions {
            self.record_reception(&tx, received);
        }
        match tx.kind {
            TxKind::Data { packet } => {
                self.log(
                    tx.node,
                    "data_end",
                    tx.frame_id,
                    if received { "rx_ok" } else { "rx_fail" },
                );
                self.nodes[tx.node].mac = Mac::AwaitingAck { frame: tx.frame_id };
                self.nodes[tx.node].timer_gen += 1;
                let gen = self.nodes[tx.node].timer_gen;
                self.schedule(self.now + self.ack_timeout, Event::AckTimeout { node: tx.node, gen });
                if received {
                    if contested {
                        self.set_outcome(tx.frame_id, FrameOutcome::CaptureWin);
                    }
                    self.deliver(tx.to, packet);
                    self.schedule(
                        self.now + self.sifs,
                        Event::SendAck {
                            node: tx.to,
                            to: tx.node,
                            data_frame: tx.frame_id,
                            packet,
                        },
                    );
                }
            }
            TxKind::Ack { data_frame, packet } => {
                self.log(
                    tx.node,
                    "ack_end",
                    tx.frame_id,
                    if received { "rx_ok" } else { "rx_fail" },
                );
                self.set_outcome(
                    tx.frame_id,
                    if received {
                        FrameOutcome::Received
                    } else {
                        FrameOutcome::Lost
                    },
                );
                if received && self.nodes[tx.to].mac == (Mac::AwaitingAck { frame: data_frame }) {
                    self.ack_succeeded(tx.to, data_frame, packet);
                }
            }
        }
        self.update_sensing();
    }

    fn set_outcome(&mut self, frame_id: u64, outcome: FrameOutcome) {
        if let Some(&i) = self.frame_index.get(&frame_id) {
            let rec = &mut self.frame_records[i];
            // keep a capture win when the ACK later arrives
            if !(rec.outcome == FrameOutcome::CaptureWin && outcome == FrameOutcome::Acked) {
                rec.outcome = outcome;
            }
        }
    }

    fn deliver(&mut self, node: NodeId, packet: Packet) {
        let position = packet.hop + 1;
        let reached = &mut self.reached[packet.flow][packet.seq as usize];
        if *reached >= position {
            return;
        }
        *reached = position;
        self.flows[packet.flow].hops[packet.hop].delivered += 1;
        let chain = &self.scenario.flows[packet.flow].chain;
        if position == chain.hop_count() {
            self.flows[packet.flow].delivered += 1;
        } else {
            self.enqueue(
                node,
                Packet {
                    hop: position,
                    ..packet
                },
            );
            self.kick(node);
        }
    }

    fn ack_succeeded(&mut self, node: NodeId, data_frame: u64, packet: Packet) {
        let to = self.next_node(packet);
        self.flows[packet.flow].hops[packet.hop].acked += 1;
        self.links.get_mut(&(node, to)).expect("link has attempts").acked += 1;
        self.set_outcome(data_frame, FrameOutcome::Acked);
        self.log(node, "ack_rx", data_frame, "Acked");
        self.finish_head(node);
    }

    fn ack_failed(&mut self, node: NodeId, data_frame: u64) {
        let packet = *self.nodes[node].queue.front().expect("awaiting ACK without a packet");
        let to = self.next_node(packet);
        self.flows[packet.flow].hops[packet.hop].collision_losses += 1;
        self.links
            .get_mut(&(node, to))
            .expect("link has attempts")
            .collision_losses += 1;
        let n = &mut self.nodes[node];
        n.retries += 1;
        if n.retries > self.mac.retry_limit {
            self.flows[packet.flow].hops[packet.hop].retry_drops += 1;
            self.links.get_mut(&(node, to)).unwrap().retry_drops += 1;
            if self.reached[packet.flow][packet.seq as usize] <= packet.hop {
                self.flows[packet.flow].retry_losses += 1;
            }
            self.set_outcome(data_frame, FrameOutcome::RetryLimitDrop);
            self.log(node, "retry_drop", data_frame, "RetryLimitDrop");
            self.finish_head(node);
        } else {
            n.cw = (n.cw * 2 + 1).min(self.mac.cw_max);
            n.mac = Mac::Idle;
            self.set_outcome(data_frame, FrameOutcome::CollisionLoss);
            self.log(node, "ack_timeout", data_frame, "CollisionLoss");
            self.kick(node);
        }
    }

    /// Head-of-line packet leaves the node (acknowledged or dropped).
    fn finish_head(&mut self, node: NodeId) {
        let n = &mut self.nodes[node];
        n.queue.pop_front();
        n.cw = self.mac.cw_min;
        n.retries = 0;
        n.mac = Mac::Idle;
        n.timer_gen += 1;
        self.refill(node);
        self.kick(node);
    }

    fn record_reception(&mut self, tx: &Tx, success: bool) {
        let receiver = tx.to;
        let longest = self.data_ns.max(self.ack_ns);
        let overlapping = self
            .txs
            .iter()
            .rev()
            .take_while(|o| o.start + longest > tx.start)
            .filter(|o| o.frame_id != tx.frame_id && o.start < tx.end && o.end > tx.start)
            .map(|o| Interval {
                power: if o.node == receiver {
                    f64::INFINITY
                } else {
                    self.power[o.node][receiver]
                },
                start: o.start,
                end: o.end,
            })
            .collect();
        self.receptions.push(ReceptionRecord {
            frame_id: tx.frame_id,
            receiver,
            start: tx.start,
            end: tx.end,
            power: self.power[tx.node][receiver],
            overlapping,
            success,
        });
    }

    fn finish(mut self) -> SimResult {
        let end = self.end;
        for node in 0..self.nodes.len() {
            let n = &mut self.nodes[node];
            if n.busy {
                n.stats.busy_time += end - n.busy_since;
            }
            if matches!(n.mac, Mac::SendingData | Mac::AwaitingAck { .. }) {
                let p = *n.queue.front().expect("in-flight frame has a packet");
                self.flows[p.flow].hops[p.hop].in_flight += 1;
            }
        }
        for n in &self.nodes {
            for p in &n.queue {
                if self.reached[p.flow][p.seq as usize] <= p.hop {
                    self.flows[p.flow].in_network += 1;
                }
            }
        }
        let mut links: Vec<LinkStats> = self.links.into_values().collect();
        links.sort_by_key(|l| (l.src, l.dst));
        SimResult {
            duration_s: self.opts.duration_s,
            mac: Some(self.mac),
            links,
            nodes: self.nodes.iter().map(|n| n.stats).collect(),
            flows: self.flows,
            frames: self.frame_records,
            events: self.log,
            receptions: self.receptions,
        }
    }
}
