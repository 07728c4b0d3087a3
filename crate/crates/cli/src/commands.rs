//! Command implementations: argument plumbing around library calls.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use veriq::acc::{keygen, AccError, Accumulator, Construction};
use veriq::chain::{load_params, BlockPolicy, ChainConfig, ChainError, ChainStore, IndexMode, LightClientFiles};
use veriq::ingest::{cut_blocks, objects_from_jsonl, objects_to_jsonl, parse_jsonl};
use veriq::query::{query_window, QueryOptions, VerificationObject};
use veriq::subscribe::{SubscriptionMode, SubscriptionService};
use veriq::transform::{parse_query, DimSpec, Schema};
use veriq::verify::Verifier;

use crate::{Command, Index, Mode};

/// How a command failed.
pub enum Failure {
    Reject(String),
    Usage(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Reject(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Reject(m) => write!(f, "{m}"),
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn internal(e: impl fmt::Display) -> Failure {
    Failure::Internal(e.to_string())
}

fn chain_failure(e: ChainError) -> Failure {
    match e {
        ChainError::Io(ref io) if io.kind() == std::io::ErrorKind::NotFound => usage(e),
        ChainError::Io(_) | ChainError::Decode { .. } => internal(e),
        _ => usage(e),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn index_mode(i: Index) -> IndexMode {
    match i {
        Index::Nil => IndexMode::Nil,
        Index::Intra => IndexMode::Intra,
        Index::Both => IndexMode::Both,
    }
}

pub fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Keygen { construction, capacity, out, seed } => cmd_keygen(&construction, capacity, &out, seed),
        Command::Build { params, input, chain, block, index, skip_len, dims, salt, difficulty } => {
            let policy = BlockPolicy::parse(&block).ok_or_else(|| usage(format!("bad block policy {block:?}; use count:N or interval:S")))?;
            let schema = Schema { dims: dims.iter().map(|d| DimSpec::parse(d)).collect::<Result<_, _>>().map_err(usage)? };
            cmd_build(&params, &input, &chain, policy, index_mode(index), skip_len, schema, salt.into_bytes(), difficulty)
        }
        Command::Query { chain, query, out, results, index, batched, threads } => {
            cmd_query(&chain, &query, &out, results.as_deref(), QueryOptions { index: index_mode(index), batched, threads })
        }
        Command::Verify { chain, query, results, vo, json } => cmd_verify(&chain, &query, &results, &vo, json),
        Command::Subscribe { chain, queries, mode, threshold, out, verify } => {
            let mode = match mode {
                Mode::Realtime => SubscriptionMode::Realtime,
                Mode::Lazy => SubscriptionMode::Lazy { threshold },
            };
            cmd_subscribe(&chain, &queries, mode, out.as_deref(), verify)
        }
        Command::Stats { chain, query, json } => cmd_stats(&chain, query.as_deref(), json),
    }
}

fn cmd_keygen(construction: &str, capacity: u64, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let c = Construction::parse(construction).ok_or_else(|| usage(format!("unknown construction {construction:?}; use acc1 or acc2")))?;
    if out.exists() {
        return Err(usage(format!("{} exists; refusing to overwrite", out.display())));
    }
    let seed = seed.unwrap_or_else(rand::random);
    let (pp, _trapdoor) = keygen(c, capacity, seed).map_err(|e| match e {
        AccError::InvalidCapacity(_) => usage(e),
        e => internal(e),
    })?;
    write(out, &pp.to_bytes())?;
    println!("wrote {} parameters with capacity {capacity} to {}", c, out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    params: &Path,
    input: &Path,
    dir: &Path,
    policy: BlockPolicy,
    mode: IndexMode,
    skip_len: u8,
    schema: Schema,
    salt: Vec<u8>,
    difficulty: u8,
) -> Result<(), Failure> {
    let pp = load_params(params).map_err(chain_failure)?;
    let mut cfg = ChainConfig::new(pp.construction(), pp.capacity(), schema).with_mode(mode).with_skip_len(skip_len);
    cfg.salt = salt;
    cfg.difficulty = difficulty;
    cfg.block_policy = policy;
    cfg.validate().map_err(usage)?;
    let objects = parse_jsonl(&read_text(input)?, &cfg.schema).map_err(|e| usage(format!("{}: {e}", input.display())))?;
    let n = objects.len();
    let mut store = ChainStore::create(dir, cfg, Arc::new(pp)).map_err(chain_failure)?;
    for block in cut_blocks(objects, policy) {
        store.append(block).map_err(chain_failure)?;
    }
    println!("built {} data blocks from {n} objects in {}", store.chain().tip(), dir.display());
    Ok(())
}

fn cmd_query(dir: &Path, text: &str, out: &Path, results: Option<&Path>, opts: QueryOptions) -> Result<(), Failure> {
    let store = ChainStore::open(dir).map_err(chain_failure)?;
    let chain = store.chain();
    let q = parse_query(text, &chain.config().schema).map_err(usage)?;
    let r = query_window(chain, &q, opts).map_err(usage)?;
    write(out, &r.vo.to_bytes())?;
    let lines = objects_to_jsonl(&r.results);
    match results {
        Some(p) => write(p, lines.as_bytes())?,
        None => print!("{lines}"),
    }
    let s = &r.stats;
    eprintln!(
        "{} results; {} blocks scanned, {} skipped via {} skips; {} proofs ({} batches); VO {} bytes -> {}",
        r.results.len(),
        s.blocks_scanned,
        s.blocks_skipped,
        s.skips_taken,
        s.disjoint_proofs,
        s.batches,
        s.vo_bytes,
        out.display()
    );
    Ok(())
}

fn light_client(dir: &Path) -> Result<(ChainConfig, Accumulator, Vec<veriq::chain::BlockHeader>), Failure> {
    let (config, params, headers) = LightClientFiles::load(dir).map_err(chain_failure)?.into_parts();
    let acc = Accumulator::new(Arc::new(params), &config.salt);
    Ok((config, acc, headers))
}

fn cmd_verify(dir: &Path, text: &str, results: &Path, vo: &Path, as_json: bool) -> Result<(), Failure> {
    let (config, acc, headers) = light_client(dir)?;
    let q = parse_query(text, &config.schema).map_err(usage)?;
    let r = objects_from_jsonl(&read_text(results)?).map_err(|e| usage(format!("{}: {e}", results.display())))?;
    let bytes = read(vo)?;
    let report = match VerificationObject::from_bytes(&bytes) {
        Ok(vo) => Verifier::new(&headers, &config, &acc).verify_window(&q, &r, &vo),
        Err(e) => {
            let msg = if bytes.is_empty() { "REJECT: gap (empty VO)".to_string() } else { format!("REJECT: gap (undecodable VO: {e})") };
            if as_json {
                println!("{}", json!({ "accepted": false, "rejection": { "kind": "gap", "detail": msg } }));
                return Err(Failure::Reject(String::new()));
            }
            return Err(Failure::Reject(msg));
        }
    };
    if as_json {
        println!("{}", report.to_json());
    } else {
        println!("{report}");
    }
    if report.accepted {
        Ok(())
    } else {
        Err(Failure::Reject(String::new()))
    }
}

fn cmd_subscribe(dir: &Path, queries: &Path, mode: SubscriptionMode, out: Option<&Path>, verify: bool) -> Result<(), Failure> {
    let store = ChainStore::open(dir).map_err(chain_failure)?;
    let chain = store.chain();
    let svc = SubscriptionService::new(chain.accumulator().clone(), chain.config().schema.clone(), mode).map_err(usage)?;
    let mut ids = Vec::new();
    for (n, line) in read_text(queries)?.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        ids.push(svc.register(line).map_err(|e| usage(format!("{} line {}: {e}", queries.display(), n + 1)))?);
    }
    if let Some(o) = out {
        fs::create_dir_all(o).map_err(internal)?;
    }
    let headers = chain.headers();
    let verifier = Verifier::new(&headers, chain.config(), chain.accumulator());
    let mut rejected = 0;
    let mut emit = |svc: &SubscriptionService| -> Result<(), Failure> {
        for id in &ids {
            let q = svc.query(*id).expect("registered");
            for d in svc.poll(*id).map_err(internal)? {
                let mut line = format!(
                    "query {id} blocks {}..={}: {} results, VO {} bytes",
                    d.span.0,
                    d.span.1,
                    d.results.len(),
                    d.vo.byte_len()
                );
                if verify {
                    let rep = verifier.verify_span(&q, d.span, &d.results, &d.vo);
                    match rep.rejection {
                        None => line.push_str(", ACCEPT"),
                        Some(r) => {
                            rejected += 1;
                            line.push_str(&format!(", REJECT: {} ({})", r.kind, r.detail));
                        }
                    }
                }
                println!("{line}");
                if let Some(o) = out {
                    write(&o.join(format!("q{id}-{:08}-{:08}.sub", d.span.0, d.span.1)), &d.to_bytes())?;
                }
            }
        }
        Ok(())
    };
    for b in chain.blocks().iter().skip(1) {
        svc.on_block(b).map_err(internal)?;
        emit(&svc)?;
    }
    svc.flush();
    emit(&svc)?;
    let s = svc.stats();
    eprintln!(
        "{} subscriptions over {} blocks: {} deliveries, {} proofs generated for {} uses, {} skip folds",
        ids.len(),
        s.blocks,
        s.deliveries,
        s.proofs_generated,
        s.proofs_used,
        s.skip_merges
    );
    if rejected > 0 {
        return Err(Failure::Reject(format!("{rejected} deliveries rejected")));
    }
    Ok(())
}

fn cmd_stats(dir: &Path, query: Option<&str>, as_json: bool) -> Result<(), Failure> {
    let store = ChainStore::open(dir).map_err(chain_failure)?;
    let chain = store.chain();
    let cfg = chain.config();
    let data = &chain.blocks()[1..];
    let per_block: Vec<(u64, usize, usize)> = data.iter().map(|b| (b.height, b.objects.len(), b.ads_bytes())).collect();
    let total: usize = per_block.iter().map(|b| b.2).sum();
    let objects: usize = per_block.iter().map(|b| b.1).sum();
    let avg = if data.is_empty() { 0.0 } else { total as f64 / data.len() as f64 };

    let mut runs = Vec::new();
    if let Some(text) = query {
        let q = parse_query(text, &cfg.schema).map_err(usage)?;
        let headers = chain.headers();
        let verifier = Verifier::new(&headers, cfg, chain.accumulator());
        for mode in IndexMode::ALL.into_iter().filter(|m| *m <= cfg.mode) {
            for batched in [false, true] {
                if batched && !cfg.construction.supports_aggregation() {
                    continue;
                }
                let r = query_window(chain, &q, QueryOptions::new(mode, batched)).map_err(usage)?;
                let rep = verifier.verify_window(&q, &r.results, &r.vo);
                runs.push(json!({
                    "index": mode.name(),
                    "batched": batched,
                    "results": r.results.len(),
                    "vo_bytes": r.stats.vo_bytes,
                    "proofs": r.stats.disjoint_proofs,
                    "batches": r.stats.batches,
                    "skips": r.stats.skips_taken,
                    "pairing_checks": rep.stats.pairing_checks,
                    "accepted": rep.accepted,
                }));
            }
        }
    }

    if as_json {
        let blocks: Vec<_> = per_block.iter().map(|(h, n, a)| json!({ "height": h, "objects": n, "ads_bytes": a })).collect();
        let doc = json!({
            "construction": cfg.construction.name(),
            "index": cfg.mode.name(),
            "blocks": data.len(),
            "objects": objects,
            "ads_bytes_total": total,
            "ads_bytes_per_block": avg,
            "per_block": blocks,
            "queries": runs,
        });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(internal)?);
        return Ok(());
    }
    println!("construction {}  index {}  skip_len {}", cfg.construction, cfg.mode.name(), cfg.skip_len);
    println!("{} data blocks, {objects} objects, ADS {total} bytes ({avg:.1} bytes/block)", data.len());
    println!("{:>8} {:>8} {:>10}", "height", "objects", "ads_bytes");
    for (h, n, a) in &per_block {
        println!("{h:>8} {n:>8} {a:>10}");
    }
    if !runs.is_empty() {
        println!("{:>6} {:>8} {:>8} {:>10} {:>7} {:>8} {:>6} {:>9}", "index", "batched", "results", "vo_bytes", "proofs", "batches", "skips", "pairings");
        for r in &runs {
            let cell = |k: &str| match &r[k] {
                serde_json::Value::String(s) => s.clone(),
                v => v.to_string(),
            };
            println!(
                "{:>6} {:>8} {:>8} {:>10} {:>7} {:>8} {:>6} {:>9}",
                cell("index"),
                cell("batched"),
                cell("results"),
                cell("vo_bytes"),
                cell("proofs"),
                cell("batches"),
                cell("skips"),
                cell("pairing_checks")
            );
        }
    }
    Ok(())
}
