//! End-to-end runs of the `veriq` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use veriq::acc::{keygen, Construction};
use veriq::chain::load_params;

fn veriq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_veriq")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const DATA: &str = r#"{"t": 10, "v": [1.5], "w": ["coffee", "shop"]}
{"t": 12, "v": [7.0], "w": ["bar"]}
{"t": 15, "v": [3.2], "w": ["coffee"]}
{"t": 22, "v": [9.9], "w": ["park", "bar"]}
{"t": 30, "v": [0.1], "w": ["museum"]}
{"t": 31, "v": [5.5], "w": ["coffee", "bar"]}
"#;

struct Fixture {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().to_path_buf();
        fs::write(dir.join("data.jsonl"), DATA).unwrap();
        Fixture { _tmp: tmp, dir }
    }

    fn run(&self, args: &[&str]) -> Output {
        veriq(&self.dir, args)
    }

    fn keygen(&self, c: &str, q: &str, out: &str) {
        let o = self.run(&["keygen", c, q, "--seed", "5", "--out", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }

    fn build(&self, params: &str, chain: &str, extra: &[&str]) -> Output {
        let mut args = vec!["build", "--params", params, "--input", "data.jsonl", "--chain", chain, "--dim", "8:0:10"];
        args.extend_from_slice(extra);
        self.run(&args)
    }
}

#[test]
fn keygen_writes_loadable_params_and_refuses_overwrite() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    let loaded = load_params(&f.dir.join("p.bin")).unwrap();
    assert_eq!(loaded.to_bytes(), keygen(Construction::Acc2, 1024, 5).unwrap().0.to_bytes());
    assert_eq!(code(&f.run(&["keygen", "acc2", "1024", "--out", "p.bin"])), 2);
    let o = f.run(&["keygen", "acc1", "1", "--out", "x.bin"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("capacity"));
    assert!(!f.dir.join("x.bin").exists());
}

#[test]
fn build_counts_blocks_and_is_deterministic() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    fs::write(f.dir.join("data.jsonl"), DATA.lines().take(3).collect::<Vec<_>>().join("\n")).unwrap();
    for chain in ["c1", "c2"] {
        let o = f.build("p.bin", chain, &["--block", "count:1"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let o = f.run(&["stats", "--chain", "c1", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["blocks"], 3);
    for name in ["chain.meta", "params.bin", "headers.bin", "blocks/00000003.blk"] {
        assert_eq!(fs::read(f.dir.join("c1").join(name)).unwrap(), fs::read(f.dir.join("c2").join(name)).unwrap(), "{name}");
    }
    assert_ne!(code(&f.build("p.bin", "c1", &[])), 0, "existing chain is not overwritten");
}

#[test]
fn empty_input_gives_genesis_only_chain() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    fs::write(f.dir.join("data.jsonl"), "").unwrap();
    assert_eq!(code(&f.build("p.bin", "c", &[])), 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&f.run(&["stats", "--chain", "c", "--json"]))).unwrap();
    assert_eq!(doc["blocks"], 0);
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    fs::write(f.dir.join("data.jsonl"), "{\"t\":1,\"v\":[1],\"w\":[]}\n{\"t\":2,\"v\":[1],\"w\":\n").unwrap();
    let o = f.build("p.bin", "c", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn query_verify_round_trip_and_rejections() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    assert_eq!(code(&f.build("p.bin", "c", &["--block", "count:2", "--skip-len", "2"])), 0);
    let q = r#"window=[11,30] range=[(1,8)] bool="coffee" OR "bar""#;
    for batched in [false, true] {
        let mut args = vec!["query", "--chain", "c", "-q", q, "--out", "vo.bin", "--results", "r.jsonl"];
        if batched {
            args.push("--batched");
        }
        let o = f.run(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = f.run(&["verify", "--chain", "c", "-q", q, "--results", "r.jsonl", "--vo", "vo.bin"]);
        assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).starts_with("ACCEPT"));
    }
    let results = fs::read_to_string(f.dir.join("r.jsonl")).unwrap();
    assert_eq!(results.lines().count(), 2);

    let json = f.run(&["verify", "--chain", "c", "-q", q, "--results", "r.jsonl", "--vo", "vo.bin", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(doc["accepted"], true);

    let vo = fs::read(f.dir.join("vo.bin")).unwrap();
    fs::write(f.dir.join("short.bin"), &vo[..vo.len() / 2]).unwrap();
    let o = f.run(&["verify", "--chain", "c", "-q", q, "--results", "r.jsonl", "--vo", "short.bin"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("REJECT: gap"), "{}", stderr(&o));

    fs::write(f.dir.join("less.jsonl"), results.lines().next().unwrap()).unwrap();
    let o = f.run(&["verify", "--chain", "c", "-q", q, "--results", "less.jsonl", "--vo", "vo.bin"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("REJECT"));

    let other = r#"window=[11,30] bool="park""#;
    let o = f.run(&["verify", "--chain", "c", "-q", other, "--results", "r.jsonl", "--vo", "vo.bin"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stats_show_larger_ads_with_more_indexes() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    let mut per_block = Vec::new();
    for mode in ["nil", "intra", "both"] {
        assert_eq!(code(&f.build("p.bin", mode, &["--index", mode, "--block", "count:2", "--skip-len", "2"])), 0);
        let doc: serde_json::Value = serde_json::from_str(&stdout(&f.run(&["stats", "--chain", mode, "--json"]))).unwrap();
        per_block.push(doc["ads_bytes_per_block"].as_f64().unwrap());
    }
    assert!(per_block[0] < per_block[1] && per_block[1] < per_block[2], "{per_block:?}");
    let o = f.run(&["stats", "--chain", "both", "-q", r#"window=[0,40] bool="museum""#]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("pairings"));
}

#[test]
fn subscribe_streams_verified_deliveries() {
    let f = Fixture::new();
    f.keygen("acc2", "1024", "p.bin");
    assert_eq!(code(&f.build("p.bin", "c", &["--block", "count:1", "--skip-len", "2"])), 0);
    fs::write(f.dir.join("subs.txt"), "bool=\"coffee\"\n# comment\nrange=[(0,5)] bool=\"bar\" OR \"museum\"\n").unwrap();
    for mode in ["realtime", "lazy"] {
        let o = f.run(&["subscribe", "--chain", "c", "--queries", "subs.txt", "--mode", mode, "--verify", "--out", mode]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).lines().all(|l| l.ends_with("ACCEPT")));
        assert!(fs::read_dir(f.dir.join(mode)).unwrap().count() > 0);
    }
    let o = f.run(&["subscribe", "--chain", "c", "--queries", "subs.txt", "--mode", "realtime"]);
    assert_eq!(stdout(&o).lines().count(), 12);
}

#[test]
fn acc1_chain_and_lazy_rejection() {
    let f = Fixture::new();
    f.keygen("acc1", "256", "p1.bin");
    assert_eq!(code(&f.build("p1.bin", "c", &["--block", "count:2", "--skip-len", "2"])), 0);
    let q = r#"window=[0,40] bool="coffee""#;
    assert_eq!(code(&f.run(&["query", "--chain", "c", "-q", q, "--out", "vo.bin", "--results", "r.jsonl"])), 0);
    assert_eq!(code(&f.run(&["verify", "--chain", "c", "-q", q, "--results", "r.jsonl", "--vo", "vo.bin"])), 0);
    fs::write(f.dir.join("subs.txt"), "bool=\"coffee\"\n").unwrap();
    assert_eq!(code(&f.run(&["subscribe", "--chain", "c", "--queries", "subs.txt", "--mode", "lazy"])), 2);
}

#[test]
fn usage_errors_exit_with_two() {
    let f = Fixture::new();
    assert_eq!(code(&f.run(&["bogus"])), 2);
    assert_eq!(code(&f.run(&["query", "--chain", "missing", "-q", "window=[1,2]"])), 2);
    assert_eq!(code(&f.run(&["keygen", "acc9", "16"])), 2);
}
