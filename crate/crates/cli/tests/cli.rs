use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wchain(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wchain"))
        .args(args)
        .current_dir(dir)
        .env_remove("WCHAIN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn unknown_subcommand_exits_two() {
    let t = tempfile::tempdir().unwrap();
    let o = wchain(t.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn classify_writes_pair_csv() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("nodes.csv"),
        "id,x,y\n0,0,0\n1,200,0\n2,400,0\n3,600,0\n4,800,0\n",
    )
    .unwrap();
    fs::write(t.path().join("links.csv"), "src,dst\n0,1\n1,2\n3,4\n").unwrap();
    let o = wchain(
        t.path(),
        &[
            "classify",
            "--positions",
            "nodes.csv",
            "--links",
            "links.csv",
            "--out",
            "out",
        ],
    );
    ok(&o);
    let csv = fs::read_to_string(t.path().join("out/classify-seed1/classify.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("a_src,a_dst,b_src,b_dst"));
    assert_eq!(lines.len(), 3, "{csv}");
    assert!(lines[1].ends_with(",HTC,HTC"), "{csv}");
    assert!(lines[2].ends_with(",SC,SC"), "{csv}");
}

#[test]
fn missing_positions_is_an_error() {
    let t = tempfile::tempdir().unwrap();
    let o = wchain(t.path(), &["classify", "--out", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("positions"));
}

#[test]
fn census_is_byte_identical_on_rerun() {
    let t = tempfile::tempdir().unwrap();
    let args = [
        "census",
        "--nodes",
        "225",
        "--cs",
        "350,450,550,650",
        "--seed",
        "4",
        "--out",
        "out",
    ];
    ok(&wchain(t.path(), &args));
    let dir = t.path().join("out/census-seed4");
    let first = read_dir_sorted(&dir);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["census.csv", "config.toml", "plot_data.csv"]);
    let csv = String::from_utf8_lossy(&first[0].1).into_owned();
    assert!(csv.starts_with("cs_range,n_nodes,signature,probability\n"));
    for cs in ["350,", "450,", "550,", "650,"] {
        assert!(csv.lines().any(|l| l.starts_with(cs)), "{cs}");
    }
    ok(&wchain(t.path(), &args));
    assert_eq!(read_dir_sorted(&dir), first);
}

#[test]
fn env_var_sets_output_root_and_flag_beats_it() {
    let t = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["flow-in-middle", "--duration", "0.5"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_wchain"))
            .args(&args)
            .current_dir(t.path())
            .env("WCHAIN_OUT_DIR", "from_env")
            .output()
            .unwrap()
    };
    ok(&run(&[]));
    assert!(t
        .path()
        .join("from_env/flow-in-middle-seed1/flow_in_middle.csv")
        .exists());
    ok(&run(&["--out", "from_flag"]));
    assert!(t
        .path()
        .join("from_flag/flow-in-middle-seed1/flow_in_middle.csv")
        .exists());
}

#[test]
fn config_file_and_seed_override() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("s.toml"),
        "seed = 9\n[radio]\ncapture_sinr_db = 10.0\n[study]\nname = \"sweep\"\nsignatures = [\"SC/SC/SC\"]\nloads = [0.1]\nduration_s = 1.0\n[output]\ndir = \"cfg_out\"\n",
    )
    .unwrap();
    ok(&wchain(t.path(), &["sweep", "--config", "s.toml"]));
    let dir = t.path().join("cfg_out/sweep-seed9");
    let echo = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 9"));
    assert!(echo.contains("signatures = [\"SC/SC/SC\"]"));
    assert_eq!(fs::read_to_string(dir.join("sweep.csv")).unwrap().lines().count(), 2);

    ok(&wchain(t.path(), &["sweep", "--config", "s.toml", "--seed", "11"]));
    assert!(t.path().join("cfg_out/sweep-seed11/sweep.csv").exists());

    // the echo reproduces the run
    fs::copy(dir.join("config.toml"), t.path().join("echo.toml")).unwrap();
    let before = fs::read(dir.join("sweep.csv")).unwrap();
    ok(&wchain(t.path(), &["sweep", "--config", "echo.toml"]));
    assert_eq!(fs::read(dir.join("sweep.csv")).unwrap(), before);
}

#[test]
fn config_errors_carry_line_numbers() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("bad.toml"), "[study]\nname = \"sweep\"\nbogus = 1\n").unwrap();
    let o = wchain(t.path(), &["sweep", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("bogus"), "{err}");

    fs::write(t.path().join("other.toml"), "[study]\nname = \"census\"\n").unwrap();
    let o = wchain(t.path(), &["sweep", "--config", "other.toml"]);
    assert!(!o.status.success());
}

#[test]
fn bad_flag_values_are_rejected() {
    let t = tempfile::tempdir().unwrap();
    let o = wchain(t.path(), &["sweep", "--loads", "0.1,-1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wchain(t.path(), &["sweep", "--signatures", "HT/HT/HT", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    let o = wchain(t.path(), &["--jobs", "0", "flow-in-middle"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_chain_and_nhop_outputs() {
    let t = tempfile::tempdir().unwrap();
    ok(&wchain(
        t.path(),
        &[
            "run-chain",
            "--signature",
            "HT/SC/SC",
            "--duration",
            "1",
            "--event-log",
            "--out",
            "o",
        ],
    ));
    let d = t.path().join("o/run-chain-seed1");
    assert_eq!(fs::read_to_string(d.join("run_chain.csv")).unwrap().lines().count(), 5);
    assert!(fs::read_to_string(d.join("events.csv"))
        .unwrap()
        .starts_with("time_us,node,event,frame_id,outcome\n"));

    ok(&wchain(
        t.path(),
        &[
            "--jobs",
            "2",
            "nhop",
            "--hops",
            "5",
            "--assignments",
            "SC-SC,SC-HT",
            "--duration",
            "1",
            "--out",
            "o",
        ],
    ));
    let csv = fs::read_to_string(t.path().join("o/nhop-seed1/nhop.csv")).unwrap();
    assert!(csv.starts_with("assignment,load,hop_lengths,throughput_bps,drop_percentage,skipped\nSC-SC,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn cross_chain_outputs() {
    let t = tempfile::tempdir().unwrap();
    ok(&wchain(
        t.path(),
        &[
            "cross-chain",
            "--pairs",
            "SC/SC",
            "--samples",
            "3",
            "--duration",
            "0",
            "--out",
            "o",
        ],
    ));
    let d = t.path().join("o/cross-chain-seed1");
    for f in [
        "cross_chain.csv",
        "cross_summary.csv",
        "conditional.csv",
        "plot_data.csv",
        "config.toml",
    ] {
        assert!(d.join(f).exists(), "{f}");
    }
    assert_eq!(
        fs::read_to_string(d.join("cross_chain.csv")).unwrap().lines().count(),
        4
    );
}
