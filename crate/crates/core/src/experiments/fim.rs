use std::io::Write;

use crate::chain::Chain;
use crate::error::Result;
use crate::geom::Point;
use crate::rf::RadioConfig;
use crate::sim::{run, throughput, MacParams, RunOptions, Scenario, Traffic};

/// Saturated throughputs (bits/s) in the three-link starvation topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowInMiddle {
    pub outer_a: f64,
    pub middle: f64,
    pub outer_c: f64,
    pub isolated_a: f64,
    pub isolated_c: f64,
    /// Middle link with only outer link A present.
    pub middle_with_a_only: f64,
    pub a_with_middle_only: f64,
}

/// Links A, B (middle) and C as three parallel 200 m links 400 m apart. The
/// outer senders are 800 m apart and never sense each other; each is 400 m
/// from the middle sender and hears the middle receiver's ACKs, and vice versa.
pub fn flow_in_middle_links() -> [Chain; 3] {
    let link = |a: (f64, f64), b: (f64, f64)| {
        Chain::new(vec![0, 1], vec![Point::new(a.0, a.1), Point::new(b.0, b.1)]).expect("distinct endpoints")
    };
    [
        link((0.0, 0.0), (0.0, 200.0)),
        link((400.0, 0.0), (400.0, 200.0)),
        link((800.0, 0.0), (800.0, 200.0)),
    ]
}

pub fn flow_in_middle(duration_s: f64, seed: u64, mac: &MacParams, cfg: &RadioConfig) -> Result<FlowInMiddle> {
    let [a, b, c] = flow_in_middle_links();
    let opts = RunOptions::new(duration_s, seed);
    let sat = |ch: &Chain| (ch.clone(), Traffic::Saturated);
    let all = run(&Scenario::disjoint(&[sat(&a), sat(&b), sat(&c)]), mac, cfg, &opts)?;
    let alone_a = run(&Scenario::disjoint(&[sat(&a)]), mac, cfg, &opts)?;
    let alone_c = run(&Scenario::disjoint(&[sat(&c)]), mac, cfg, &opts)?;
    let pair = run(&Scenario::disjoint(&[sat(&a), sat(&b)]), mac, cfg, &opts)?;
    Ok(FlowInMiddle {
        outer_a: throughput(&all, 0)?,
        middle: throughput(&all, 1)?,
        outer_c: throughput(&all, 2)?,
        isolated_a: throughput(&alone_a, 0)?,
        isolated_c: throughput(&alone_c, 0)?,
        middle_with_a_only: throughput(&pair, 1)?,
        a_with_middle_only: throughput(&pair, 0)?,
    })
}

/// `case,link,throughput_bps`.
pub fn write_fim_csv<W: Write>(r: &FlowInMiddle, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["case", "link", "throughput_bps"])?;
    for (case, link, v) in [
        ("all", "A", r.outer_a),
        ("all", "B", r.middle),
        ("all", "C", r.outer_c),
        ("isolated", "A", r.isolated_a),
        ("isolated", "C", r.isolated_c),
        ("without_C", "A", r.a_with_middle_only),
        ("without_C", "B", r.middle_with_a_only),
    ] {
        w.write_record([case.to_string(), link.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::{channel_state, ChannelState};

    #[test]
    fn topology_couplings() {
        let cfg = RadioConfig::default();
        let [a, b, c] = flow_in_middle_links();
        let s = |ch: &Chain| ch.positions()[0];
        assert_eq!(channel_state(&s(&a), &s(&c), &cfg), ChannelState::Negligible);
        assert_eq!(channel_state(&s(&a), &s(&b), &cfg), ChannelState::CarrierSense);
        assert_eq!(channel_state(&s(&c), &s(&b), &cfg), ChannelState::CarrierSense);
    }

    #[test]
    fn middle_link_starves() {
        let cfg = RadioConfig::default();
        let r = flow_in_middle(10.0, 1, &MacParams::default(), &cfg).unwrap();
        assert!(r.middle < 0.2 * r.outer_a && r.middle < 0.2 * r.outer_c, "{r:?}");
        assert!((r.outer_a - r.isolated_a).abs() / r.isolated_a < 0.1, "{r:?}");
        assert!((r.outer_c - r.isolated_c).abs() / r.isolated_c < 0.1, "{r:?}");
        let share = r.middle_with_a_only / r.isolated_a;
        assert!((share - 0.5).abs() < 0.05, "{share}");
    }
}
