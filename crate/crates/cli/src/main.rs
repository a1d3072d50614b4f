use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wchain::census::census;
use wchain::classify::{classify_all, write_pairs_csv, PairKind};
use wchain::config::{parse_config, ScenarioConfig, StudyName};
use wchain::experiments::{
    all_assignments, build_canonical_chain, cross_chain_study, flow_in_middle, nhop_study, saturation_sweep,
    single_ht_assignments, write_cross_csv, write_fim_csv, write_nhop_csv, write_plot_data, write_sweep_csv,
    Assignment, CrossChainParams, PlotPoint,
};
use wchain::sim::{drop_percentage, run, throughput, RunOptions, Scenario, Traffic};
use wchain::topology::{generate_uniform, read_links_csv, Deployment};
use wchain::Chain;

const OUT_ENV: &str = "WCHAIN_OUT_DIR";

/// Self-interference studies of multi-hop wireless chains.
#[derive(Parser)]
#[command(name = "wchain", version)]
struct Cli {
    /// Scenario file; its study name must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; beats WCHAIN_OUT_DIR and the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent samples.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    study: Study,
}

#[derive(Subcommand)]
enum Study {
    /// Categorize every pair of links in a deployment.
    Classify {
        /// Node CSV with `id,x,y`.
        #[arg(long)]
        positions: Option<String>,
        /// Link CSV with `src,dst`.
        #[arg(long)]
        links: Option<String>,
    },
    /// Signature frequencies of routed chains.
    Census {
        #[command(flatten)]
        arena: ArenaArgs,
        /// Carrier-sense ranges in meters.
        #[arg(long, value_delimiter = ',')]
        cs: Option<Vec<f64>>,
        #[arg(long)]
        hops: Option<usize>,
    },
    /// Simulate one chain and report per-hop statistics.
    RunChain {
        /// Canonical signature of the chain.
        #[arg(long)]
        signature: Option<String>,
        /// Node CSV whose ids, in order, form the chain.
        #[arg(long)]
        positions: Option<String>,
        /// Normalized CBR load; 0 saturates the source.
        #[arg(long)]
        load: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Also write the per-event log.
        #[arg(long)]
        event_log: bool,
    },
    /// Throughput and drop percentage of the canonical chains against load.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        signatures: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        loads: Option<Vec<f64>>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Longer chains with prescribed interaction categories.
    Nhop {
        #[arg(long)]
        hops: Option<usize>,
        /// `all`, `single-ht` or dash-separated categories such as `SC-HT`.
        #[arg(long, value_delimiter = ',')]
        assignments: Option<Vec<String>>,
        /// Normalized CBR loads; none saturates the source.
        #[arg(long, value_delimiter = ',')]
        loads: Option<Vec<f64>>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Interactions between pairs of routed chains.
    CrossChain {
        #[command(flatten)]
        arena: ArenaArgs,
        /// Chain class pairs such as `SC/HT`.
        #[arg(long, value_delimiter = ',')]
        pairs: Option<Vec<String>>,
        #[arg(long)]
        samples: Option<usize>,
        /// Simulated seconds per sample; 0 skips simulation.
        #[arg(long)]
        duration: Option<f64>,
        /// Also accept chain pairs with no interacting link pair.
        #[arg(long)]
        any_pairs: bool,
    },
    /// Three saturated links with the middle one sensing both others.
    FlowInMiddle {
        #[arg(long)]
        duration: Option<f64>,
    },
}

#[derive(Args)]
struct ArenaArgs {
    /// Deployment sizes.
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
}

impl Study {
    fn name(&self) -> StudyName {
        match self {
            Study::Classify { .. } => StudyName::Classify,
            Study::Census { .. } => StudyName::Census,
            Study::RunChain { .. } => StudyName::RunChain,
            Study::Sweep { .. } => StudyName::Sweep,
            Study::Nhop { .. } => StudyName::Nhop,
            Study::CrossChain { .. } => StudyName::CrossChain,
            Study::FlowInMiddle { .. } => StudyName::FlowInMiddle,
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_arena(cfg: &mut ScenarioConfig, a: ArenaArgs) {
    set(&mut cfg.study.nodes, a.nodes);
    set(&mut cfg.study.width_m, a.width);
    set(&mut cfg.study.height_m, a.height);
}

/// Folds command-line flags into the configuration.
fn resolve(cli: Cli) -> Result<ScenarioConfig> {
    let name = cli.study.name();
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ScenarioConfig::defaults(name),
    };
    if cfg.study.name != name {
        bail!(
            "config describes a {} study but the subcommand is {}",
            cfg.study.name.as_str(),
            name.as_str()
        );
    }
    set(&mut cfg.seed, cli.seed);
    if let Ok(dir) = std::env::var(OUT_ENV) {
        if !dir.is_empty() {
            cfg.output.dir = dir;
        }
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    let s = &mut cfg.study;
    match cli.study {
        Study::Classify { positions, links } => {
            set(&mut s.positions_file, positions);
            set(&mut s.links_file, links);
        }
        Study::Census { arena, cs, hops } => {
            set(&mut s.cs_ranges_m, cs);
            set(&mut s.hops, hops);
            apply_arena(&mut cfg, arena);
        }
        Study::RunChain {
            signature,
            positions,
            load,
            duration,
            event_log,
        } => {
            set(&mut s.signatures, signature.map(|x| vec![x]));
            set(&mut s.positions_file, positions);
            set(&mut s.load, load);
            set(&mut s.duration_s, duration);
            cfg.output.event_log |= event_log;
        }
        Study::Sweep {
            signatures,
            loads,
            duration,
        } => {
            set(&mut s.signatures, signatures);
            set(&mut s.loads, loads);
            set(&mut s.duration_s, duration);
        }
        Study::Nhop {
            hops,
            assignments,
            loads,
            duration,
        } => {
            set(&mut s.hops, hops);
            set(&mut s.assignments, assignments);
            set(&mut s.loads, loads);
            set(&mut s.duration_s, duration);
        }
        Study::CrossChain {
            arena,
            pairs,
            samples,
            duration,
            any_pairs,
        } => {
            s.require_interaction &= !any_pairs;
            set(&mut s.class_pairs, pairs);
            set(&mut s.samples, samples);
            set(&mut s.duration_s, duration);
            apply_arena(&mut cfg, arena);
        }
        Study::FlowInMiddle { duration } => set(&mut s.duration_s, duration),
    }
    // flags bypass the file validation, so the merged result goes through it again
    Ok(wchain::config::parse_config_str(&cfg.echo())?)
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn create(cfg: &ScenarioConfig) -> Result<Self> {
        let dir = Path::new(&cfg.output.dir).join(format!("{}-seed{}", cfg.study.name.as_str(), cfg.seed));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("config.toml"), cfg.echo())?;
        Ok(Self { dir })
    }

    fn write(&self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> wchain::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn plot(&self, points: &[PlotPoint]) -> Result<()> {
        self.write("plot_data.csv", |w| write_plot_data(points, w))
    }
}

fn read_deployment(path: &str) -> Result<Deployment> {
    if path.is_empty() {
        bail!("a positions file is required");
    }
    let f = File::open(path).with_context(|| format!("opening {path}"))?;
    Deployment::read_csv(f).with_context(|| format!("reading {path}"))
}

fn parse_assignments(cfg: &ScenarioConfig) -> Result<Vec<Assignment>> {
    let n = cfg.study.hops;
    let mut out = Vec::new();
    for a in &cfg.study.assignments {
        match a.as_str() {
            "all" => out.extend(all_assignments(n)),
            "single-ht" => out.extend(single_ht_assignments(n)),
            _ => out.push(
                a.split('-')
                    .map(|k| PairKind::parse(k).with_context(|| format!("unknown category '{k}' in assignment '{a}'")))
                    .collect::<Result<_>>()?,
            ),
        }
    }
    Ok(out)
}

fn classify(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let dep = read_deployment(&cfg.study.positions_file)?;
    if cfg.study.links_file.is_empty() {
        bail!("a links file is required");
    }
    let f = File::open(&cfg.study.links_file).with_context(|| format!("opening {}", cfg.study.links_file))?;
    let links = read_links_csv(&dep, f)?;
    let rows = classify_all(&links, &cfg.radio);
    out.write("classify.csv", |w| write_pairs_csv(w, &rows))?;
    println!("{} link pairs classified", rows.len());
    Ok(())
}

fn run_census(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    use rayon::prelude::*;
    let s = &cfg.study;
    let tables = s
        .nodes
        .par_iter()
        .map(|&n| {
            let dep = generate_uniform(s.width_m, s.height_m, n, cfg.seed)?;
            census(&dep, s.hops, &s.cs_ranges_m, &cfg.radio)
        })
        .collect::<wchain::Result<Vec<_>>>()?;
    let mut merged = tables[0].clone();
    for t in &tables[1..] {
        merged.rows.extend(t.rows.iter().cloned());
        merged.chains.extend(t.chains.iter().copied());
        merged.empty |= t.empty;
    }
    out.write("census.csv", |w| merged.write_csv(w))?;
    let points: Vec<PlotPoint> = merged
        .rows
        .iter()
        .map(|r| PlotPoint::new(r.cs_range, format!("n{} {}", r.n_nodes, r.signature), r.probability))
        .collect();
    out.plot(&points)?;
    for (t, n) in tables.iter().zip(&s.nodes) {
        for &cs in &s.cs_ranges_m {
            println!("n={n} cs={cs} top: {}", t.top(cs, 3).join(", "));
        }
    }
    if merged.empty {
        eprintln!("warning: some deployments had no {}-hop route", s.hops);
    }
    Ok(())
}

fn run_chain(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let s = &cfg.study;
    let (label, chain) = if s.positions_file.is_empty() {
        let sig = s.signatures.first().context("no signature configured")?;
        (sig.clone(), build_canonical_chain(sig, &cfg.radio)?.chain)
    } else {
        let dep = read_deployment(&s.positions_file)?;
        let ids: Vec<usize> = (0..dep.len()).collect();
        let pos = ids.iter().map(|&i| dep.position(i)).collect();
        ("positions".to_string(), Chain::checked(ids, pos, &cfg.radio)?)
    };
    let traffic = if s.load > 0.0 {
        Traffic::Cbr {
            packets_per_second: cfg.mac.packets_per_second(s.load),
        }
    } else {
        Traffic::Saturated
    };
    let mut opts = RunOptions::new(s.duration_s, cfg.seed);
    opts.record_events = cfg.output.event_log;
    let r = run(&Scenario::single(&chain, traffic), &cfg.mac, &cfg.radio, &opts)?;
    let bits = cfg.mac.payload_bits();
    let hops = chain.hops();
    out.write("run_chain.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "hop",
            "src",
            "dst",
            "length_m",
            "attempts",
            "acked",
            "collision_losses",
            "retry_drops",
            "throughput_bps",
        ])?;
        for (i, (h, st)) in hops.iter().zip(&r.flows[0].hops).enumerate() {
            c.write_record([
                (i + 1).to_string(),
                h.src.to_string(),
                h.dst.to_string(),
                h.length().to_string(),
                st.attempts.to_string(),
                st.acked.to_string(),
                st.collision_losses.to_string(),
                st.retry_drops.to_string(),
                (st.delivered as f64 * bits / s.duration_s).to_string(),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    if cfg.output.event_log {
        out.write("events.csv", |w| r.write_event_log(w))?;
    }
    let points: Vec<PlotPoint> = r.flows[0]
        .hops
        .iter()
        .enumerate()
        .map(|(i, st)| PlotPoint::new((i + 1) as f64, label.clone(), st.delivered as f64 * bits / s.duration_s))
        .collect();
    out.plot(&points)?;
    let drop = drop_percentage(&r, 0)
        .map(|d| format!("{d:.1}%"))
        .unwrap_or_else(|| "n/a".into());
    println!("{label}: throughput {:.0} b/s, drop {drop}", throughput(&r, 0)?);
    Ok(())
}

fn sweep(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let s = &cfg.study;
    let mut curves = Vec::new();
    for sig in &s.signatures {
        let spec = build_canonical_chain(sig, &cfg.radio)?;
        let pts = saturation_sweep(&spec, &s.loads, s.duration_s, cfg.seed, &cfg.mac, &cfg.radio)?;
        curves.push((sig.clone(), pts));
    }
    out.write("sweep.csv", |w| write_sweep_csv(&curves, w))?;
    let mut points = Vec::new();
    for (sig, pts) in &curves {
        for p in pts {
            points.push(PlotPoint::new(p.load, format!("throughput {sig}"), p.throughput_bps));
            if let Some(d) = p.drop_percentage {
                points.push(PlotPoint::new(p.load, format!("drop {sig}"), d));
            }
        }
    }
    out.plot(&points)?;
    for (sig, pts) in &curves {
        let best = pts.iter().map(|p| p.throughput_bps).fold(0.0, f64::max);
        println!("{sig}: peak {best:.0} b/s");
    }
    Ok(())
}

fn nhop(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let s = &cfg.study;
    let assignments = parse_assignments(cfg)?;
    let rows = nhop_study(
        s.hops,
        &assignments,
        &s.loads,
        s.duration_s,
        cfg.seed,
        &cfg.mac,
        &cfg.radio,
    )?;
    out.write("nhop.csv", |w| write_nhop_csv(&rows, w))?;
    let mut points = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let Some(t) = r.throughput_bps else {
            eprintln!("skipped {}: {}", r.assignment, r.skipped.as_deref().unwrap_or(""));
            continue;
        };
        match r.load {
            Some(l) => points.push(PlotPoint::new(l, r.assignment.clone(), t)),
            None => {
                points.push(PlotPoint::new(i as f64, "throughput", t));
                if let Some(d) = r.drop_percentage {
                    points.push(PlotPoint::new(i as f64, "drop", d));
                }
            }
        }
    }
    out.plot(&points)?;
    println!("{} rows", rows.len());
    Ok(())
}

fn cross_chain(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let s = &cfg.study;
    let params = CrossChainParams {
        width: s.width_m,
        height: s.height_m,
        n_nodes: *s.nodes.first().context("no node count configured")?,
        samples: s.samples,
        duration_s: s.duration_s,
        require_interaction: s.require_interaction,
        ..CrossChainParams::default()
    };
    let mut reports = Vec::new();
    for classes in s.class_pairs()? {
        reports.push(cross_chain_study(classes, &params, cfg.seed, &cfg.mac, &cfg.radio)?);
    }
    out.write("cross_chain.csv", |w| write_cross_csv(&reports, w))?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    out.write("cross_summary.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "class1",
            "class2",
            "samples",
            "p_weak1",
            "p_weak2",
            "p_weak_any",
            "p_symmetric_ht",
            "mean_throughput1_bps",
            "mean_throughput2_bps",
        ])?;
        for r in &reports {
            let t = r.mean_throughput_bps;
            c.write_record([
                r.classes.0.to_string(),
                r.classes.1.to_string(),
                r.samples.len().to_string(),
                r.p_weak[0].to_string(),
                r.p_weak[1].to_string(),
                r.p_weak_any.to_string(),
                r.p_symmetric_ht.to_string(),
                fmt(t.map(|t| t[0])),
                fmt(t.map(|t| t[1])),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    let samples: Vec<_> = reports.iter().flat_map(|r| r.samples.iter().cloned()).collect();
    let table = wchain::experiments::conditional_interaction(&samples);
    out.write("conditional.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["self", "cross_NI", "cross_SC", "cross_HTC", "cross_HT"])?;
        for (label, probs) in table.rows() {
            let mut rec = vec![label.to_string()];
            rec.extend(probs.iter().map(|p| fmt(*p)));
            c.write_record(rec)?;
        }
        c.flush()?;
        Ok(())
    })?;
    let mut points = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let series = format!("{}/{}", r.classes.0, r.classes.1);
        points.push(PlotPoint::new(i as f64, format!("p_weak1 {series}"), r.p_weak[0]));
        points.push(PlotPoint::new(i as f64, format!("p_weak2 {series}"), r.p_weak[1]));
    }
    out.plot(&points)?;
    for r in &reports {
        println!(
            "{}/{}: P(weak) {:.3} / {:.3}, symmetric HT {:.3}",
            r.classes.0, r.classes.1, r.p_weak[0], r.p_weak[1], r.p_symmetric_ht
        );
    }
    Ok(())
}

fn fim(cfg: &ScenarioConfig, out: &Outputs) -> Result<()> {
    let r = flow_in_middle(cfg.study.duration_s, cfg.seed, &cfg.mac, &cfg.radio)?;
    out.write("flow_in_middle.csv", |w| write_fim_csv(&r, w))?;
    let points = [
        PlotPoint::new(0.0, "all", r.outer_a),
        PlotPoint::new(1.0, "all", r.middle),
        PlotPoint::new(2.0, "all", r.outer_c),
        PlotPoint::new(0.0, "isolated", r.isolated_a),
        PlotPoint::new(2.0, "isolated", r.isolated_c),
    ];
    out.plot(&points)?;
    println!("A {:.0}  B {:.0}  C {:.0} b/s", r.outer_a, r.middle, r.outer_c);
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    let cfg = resolve(cli)?;
    let out = Outputs::create(&cfg)?;
    match cfg.study.name {
        StudyName::Classify => classify(&cfg, &out)?,
        StudyName::Census => run_census(&cfg, &out)?,
        StudyName::RunChain => run_chain(&cfg, &out)?,
        StudyName::Sweep => sweep(&cfg, &out)?,
        StudyName::Nhop => nhop(&cfg, &out)?,
        StudyName::CrossChain => cross_chain(&cfg, &out)?,
        StudyName::FlowInMiddle => fim(&cfg, &out)?,
    }
    println!("wrote {}", out.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
