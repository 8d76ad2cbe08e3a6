//! Command-line front end for the compaction pipeline, the multi-stage
//! TCAM engine, power sweeps, property verification, and synthetic data
//! generation.
//!
//! Exit codes: 0 success, 1 property/verification failure, 2 usage or
//! input error. Diagnostics go to stderr; data goes to files or stdout.

use clap::{Args, Parser, Subcommand};
use mlet::compact::{compact, MinimizedTable};
use mlet::engine::{MstcamEngine, StageConfig};
use mlet::metrics::{measure, minimization_pof, sweep_configs, sweep_stage_configs};
use mlet::report::{render_csv, AggregateReport, Provenance, RunManifest};
use mlet::synth::{generate_table, generate_trace, TableParams};
use mlet::table::{parse_trace, render_trace, Prefix, RoutingTable};
use mlet::trie::LpmTrie;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mlet", version, about = "Power-efficient multi-stage TCAM IP lookup")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a routing table and write the minimized-table file.
    Compact(CompactArgs),
    /// Run one stage configuration over a trace and report power metrics.
    Run(RunArgs),
    /// Measure a family of stage configurations over one table and trace.
    Sweep(SweepArgs),
    /// Run the property suites (oracle equivalence, strict completeness,
    /// refinement monotonicity, update/rebuild equivalence).
    Verify(VerifyArgs),
    /// Generate a synthetic table or trace.
    Gen(GenArgs),
}

#[derive(Args)]
struct CompactArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 32)]
    width: u32,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// Stage widths, e.g. `8,8,8,8`.
    #[arg(long)]
    stages: String,
    #[arg(long, default_value_t = 32)]
    width: u32,
    #[arg(long)]
    strict: bool,
    /// Optional pre-minimized rows; `--table` then supplies the shadow table.
    #[arg(long)]
    minimized: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    /// One of `two-stage`, `three-stage`, `four-stage`, `powers-of-two`,
    /// `explicit` (with repeated `--stages`).
    #[arg(long)]
    mode: String,
    /// Explicit stage lists for `--mode explicit`; repeatable.
    #[arg(long)]
    stages: Vec<String>,
    #[arg(long, default_value_t = 32)]
    width: u32,
    #[arg(long)]
    strict: bool,
    /// CSV output path; an aggregate JSON report lands next to it.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Table file; omitted means a table is generated from `--seed`.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Minimized-table file to check against the table's oracle.
    #[arg(long)]
    minimized: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    width: u32,
    /// Random probe count at widths above 12 (small widths are exhaustive).
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Random insert/withdraw operations for the update suite (0 skips it).
    #[arg(long, default_value_t = 200)]
    ops: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GenArgs {
    /// What to generate: `table` or `trace`.
    kind: String,
    #[arg(long, default_value_t = 32)]
    width: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Entry count (tables).
    #[arg(long, default_value_t = 1000)]
    entries: usize,
    /// Port count (tables).
    #[arg(long, default_value_t = 8)]
    ports: u32,
    /// Fraction of fresh parent entries (tables).
    #[arg(long, default_value_t = 0.4)]
    parent_fraction: f64,
    /// Probability a child keeps its parent's port (tables).
    #[arg(long, default_value_t = 0.5)]
    child_same_port: f64,
    /// Source table (traces).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Address count (traces).
    #[arg(long, default_value_t = 10_000)]
    m: usize,
    /// Fraction of trace addresses drawn from under table prefixes.
    #[arg(long, default_value_t = 0.9)]
    hit_ratio: f64,
}

/// An error carrying its process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
    fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compact(a) => cmd_compact(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn load_table(path: &Path, width: u32) -> Result<RoutingTable, CliError> {
    let text = read_file(path)?;
    RoutingTable::parse(&text, width)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write_manifest(manifest: &RunManifest, primary_output: &Path) -> Result<(), CliError> {
    write_file(&RunManifest::path_for(primary_output), &manifest.to_json())
}

fn cmd_compact(args: CompactArgs) -> Result<(), CliError> {
    let table = load_table(&args.table, args.width)?;
    let minimized = compact(&table, args.strict);
    let pof = minimization_pof(table.len(), minimized.rows.len());
    write_file(&args.out, &minimized.render(args.strict))?;
    let mut manifest = RunManifest::new("compact", args.width, args.strict);
    manifest
        .inputs
        .insert("table".into(), args.table.display().to_string());
    manifest
        .outputs
        .insert("minimized".into(), args.out.display().to_string());
    write_manifest(&manifest, &args.out)?;
    println!(
        "rows {} -> {} (pof {:.2}%)",
        table.len(),
        minimized.rows.len(),
        pof
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let config = StageConfig::parse(&args.stages, args.width)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let table = load_table(&args.table, args.width)?;
    let trace = parse_trace(&read_file(&args.trace)?, args.width)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.trace.display())))?;
    if trace.is_empty() {
        return Err(CliError::usage("trace is empty"));
    }
    let rows_before = table.len();
    let engine = match &args.minimized {
        Some(path) => {
            let (minimized, _) = MinimizedTable::parse(&read_file(path)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            if minimized.width != args.width {
                return Err(CliError::usage(format!(
                    "minimized file width {} does not match --width {}",
                    minimized.width, args.width
                )));
            }
            MstcamEngine::build(&minimized, config, table, args.strict)
        }
        None => MstcamEngine::from_table(table, config, args.strict),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    let started = Instant::now();
    let report = measure(&engine, &trace, false).map_err(|e| CliError::usage(e.to_string()))?;
    let elapsed = started.elapsed();
    let throughput = trace.len() as f64 / elapsed.as_secs_f64().max(1e-9);
    if let Some(path) = &args.report {
        let aggregate = AggregateReport {
            table: Provenance::File {
                path: args.table.display().to_string(),
            },
            trace: Provenance::File {
                path: args.trace.display().to_string(),
            },
            strict: args.strict,
            width: args.width,
            rows_before,
            rows_after: engine.row_count(),
            minimization_pof: minimization_pof(rows_before, engine.row_count()),
            reports: vec![report.clone()],
        };
        write_file(
            path,
            &serde_json::to_string_pretty(&aggregate).expect("report serializes"),
        )?;
        let mut manifest = RunManifest::new("run", args.width, args.strict);
        manifest
            .inputs
            .insert("table".into(), args.table.display().to_string());
        manifest
            .inputs
            .insert("trace".into(), args.trace.display().to_string());
        manifest.stage_configs.push(engine.config().render());
        manifest
            .outputs
            .insert("report".into(), path.display().to_string());
        write_manifest(&manifest, path)?;
    }
    println!(
        "rows {} meps {:.3} pof {:.3}% ({:.0} lookups/s)",
        engine.row_count(),
        report.meps,
        report.pof,
        throughput
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    // validate everything before the first lookup
    let configs: Vec<StageConfig> = if args.mode == "explicit" {
        if args.stages.is_empty() {
            return Err(CliError::usage("--mode explicit requires --stages"));
        }
        args.stages
            .iter()
            .map(|s| StageConfig::parse(s, args.width))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::usage(e.to_string()))?
    } else {
        sweep_configs(&args.mode, args.width).map_err(|e| CliError::usage(e.to_string()))?
    };
    let table = load_table(&args.table, args.width)?;
    let trace = parse_trace(&read_file(&args.trace)?, args.width)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.trace.display())))?;
    if trace.is_empty() {
        return Err(CliError::usage("trace is empty"));
    }
    let rows_before = table.len();
    let minimized = compact(&table, args.strict);
    let reports = sweep_stage_configs(&minimized, &table, &configs, &trace, args.strict, false)
        .map_err(|e| CliError::usage(e.to_string()))?;
    write_file(&args.report, &render_csv(&reports))?;
    let aggregate = AggregateReport {
        table: Provenance::File {
            path: args.table.display().to_string(),
        },
        trace: Provenance::File {
            path: args.trace.display().to_string(),
        },
        strict: args.strict,
        width: args.width,
        rows_before,
        rows_after: minimized.rows.len(),
        minimization_pof: minimization_pof(rows_before, minimized.rows.len()),
        reports: reports.clone(),
    };
    let json_path = args.report.with_extension("json");
    write_file(
        &json_path,
        &serde_json::to_string_pretty(&aggregate).expect("report serializes"),
    )?;
    let mut manifest = RunManifest::new("sweep", args.width, args.strict);
    manifest
        .inputs
        .insert("table".into(), args.table.display().to_string());
    manifest
        .inputs
        .insert("trace".into(), args.trace.display().to_string());
    manifest.stage_configs = configs.iter().map(|c| c.render()).collect();
    manifest
        .outputs
        .insert("csv".into(), args.report.display().to_string());
    manifest
        .outputs
        .insert("json".into(), json_path.display().to_string());
    write_manifest(&manifest, &args.report)?;
    println!(
        "swept {} configs over {} rows, trace length {}",
        reports.len(),
        minimized.rows.len(),
        trace.len()
    );
    Ok(())
}

fn render_address(a: u64, width: u32) -> String {
    (0..width)
        .rev()
        .map(|i| if a >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let width = args.width;
    let table = match &args.table {
        Some(path) => load_table(path, width)?,
        None => {
            let params = TableParams {
                entries: if width <= 12 { 150 } else { 20_000 },
                ports: 6,
                ..TableParams::default_for(width)
            };
            generate_table(&params, args.seed).map_err(|e| CliError::usage(e.to_string()))?
        }
    };
    let exhaustive = width <= 12;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5eed);
    let probes: Vec<u64> = if exhaustive {
        (0..1u64 << width).collect()
    } else {
        (0..args.samples)
            .map(|_| rng.gen::<u64>() & mlet::cube::word_mask(width))
            .collect()
    };
    let oracle = LpmTrie::build(&table);
    let mut failed = false;
    let mut report = |name: &str, counterexample: Option<u64>| {
        match counterexample {
            None => println!("PASS {name}"),
            Some(a) => {
                println!("FAIL {name}: counterexample address {}", render_address(a, width));
                failed = true;
            }
        }
    };

    let mut configs = vec![StageConfig::reference(width)];
    for k in [2u32, 4, 8] {
        if width % k == 0 && width / k >= 1 {
            configs.push(StageConfig::equal_split(width, k).unwrap());
        }
    }
    configs.push(StageConfig::new(vec![1; width as usize], width).unwrap());

    let engines: Vec<MstcamEngine> = configs
        .iter()
        .map(|c| MstcamEngine::from_table(table.clone(), c.clone(), args.strict))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(e.to_string()))?;

    // oracle equivalence across all configs
    let mut cx = None;
    'outer: for e in &engines {
        for &a in &probes {
            let lpm = oracle.lookup(a);
            let got = e.lookup(a).port;
            if lpm.is_some() && got != lpm {
                cx = Some(a);
                break 'outer;
            }
        }
    }
    report("oracle-equivalence", cx);

    // strict completeness
    if args.strict {
        let mut cx = None;
        'souter: for e in &engines {
            for &a in &probes {
                if oracle.lookup(a).is_none() && e.lookup(a).port.is_some() {
                    cx = Some(a);
                    break 'souter;
                }
            }
        }
        report("strict-completeness", cx);
    } else {
        println!("SKIP strict-completeness (run with --strict)");
    }

    // config independence of returned ports
    let mut cx = None;
    'couter: for pair in engines.windows(2) {
        for &a in &probes {
            if pair[0].lookup(a).port != pair[1].lookup(a).port {
                cx = Some(a);
                break 'couter;
            }
        }
    }
    report("config-independence", cx);

    // refinement monotonicity: each listed config refines the previous
    let mut cx = None;
    'router: for pair in engines.windows(2) {
        if !pair[1].config().refines(pair[0].config()) {
            continue;
        }
        for &a in &probes {
            if pair[1].lookup(a).eps > pair[0].lookup(a).eps {
                cx = Some(a);
                break 'router;
            }
        }
    }
    report("refinement-monotonicity", cx);

    // minimized-file check
    if let Some(path) = &args.minimized {
        let (minimized, _) = MinimizedTable::parse(&read_file(path)?)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if minimized.width != width {
            return Err(CliError::usage(format!(
                "minimized file width {} does not match --width {}",
                minimized.width, width
            )));
        }
        let mut cx = None;
        for &a in &probes {
            let lpm = oracle.lookup(a);
            let hits: Vec<u32> = minimized
                .rows
                .iter()
                .filter(|(c, _)| c.matches(a))
                .map(|(_, p)| *p)
                .collect();
            let bad = match lpm {
                Some(k) => hits.is_empty() || hits.iter().any(|p| *p != k),
                None => args.strict && !hits.is_empty(),
            };
            if bad {
                cx = Some(a);
                break;
            }
        }
        report("minimized-file-consistency", cx);
    }

    // update/rebuild equivalence
    if args.ops > 0 {
        let mut e = engines[1 % engines.len()].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0xa11ce);
        let mut cx = None;
        for step in 0..args.ops {
            if rng.gen_bool(0.5) || e.shadow_table().is_empty() {
                let len = rng.gen_range(1..=width);
                let pat = rng.gen::<u64>() & mlet::cube::word_mask(len);
                let _ = e.insert(Prefix::new(pat, len, rng.gen_range(0..6)));
            } else {
                let idx = rng.gen_range(0..e.shadow_table().len());
                let victim = e.shadow_table().entries()[idx];
                e.withdraw(victim.pattern(), victim.length())
                    .map_err(|err| CliError::usage(err.to_string()))?;
            }
            let check_now = step + 1 == args.ops || (step + 1) % 50 == 0;
            if !check_now {
                continue;
            }
            let rebuilt = e
                .rebuild_from_shadow()
                .map_err(|err| CliError::usage(err.to_string()))?;
            for &a in &probes {
                let lpm = e.oracle().lookup(a);
                let live = e.lookup(a).port;
                let fresh = rebuilt.lookup(a).port;
                let bad = match lpm {
                    Some(_) => live != lpm || fresh != lpm,
                    None => args.strict && (live.is_some() || fresh.is_some()),
                };
                if bad {
                    cx = Some(a);
                    break;
                }
            }
            if cx.is_some() {
                break;
            }
        }
        report("update-rebuild-equivalence", cx);
    } else {
        println!("SKIP update-rebuild-equivalence (--ops 0)");
    }

    if failed {
        Err(CliError::failure("one or more properties failed"))
    } else {
        Ok(())
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    match args.kind.as_str() {
        "table" => {
            let params = TableParams {
                width: args.width,
                entries: args.entries,
                ports: args.ports,
                parent_fraction: args.parent_fraction,
                child_same_port: args.child_same_port,
                ..TableParams::default_for(args.width)
            };
            let table =
                generate_table(&params, args.seed).map_err(|e| CliError::usage(e.to_string()))?;
            write_file(&args.out, &table.render())?;
            let mut manifest = RunManifest::new("gen", args.width, false);
            manifest.seed = Some(args.seed);
            manifest.gen_params = Some(params);
            manifest
                .outputs
                .insert("table".into(), args.out.display().to_string());
            write_manifest(&manifest, &args.out)?;
            println!("generated {} entries", table.len());
            Ok(())
        }
        "trace" => {
            let table_path = args
                .table
                .as_ref()
                .ok_or_else(|| CliError::usage("gen trace requires --table"))?;
            let table = load_table(table_path, args.width)?;
            let trace = generate_trace(&table, args.m, args.hit_ratio, args.seed)
                .map_err(|e| CliError::usage(e.to_string()))?;
            write_file(&args.out, &render_trace(&trace, args.width))?;
            let mut manifest = RunManifest::new("gen", args.width, false);
            manifest.seed = Some(args.seed);
            manifest
                .inputs
                .insert("table".into(), table_path.display().to_string());
            let mut outputs = BTreeMap::new();
            outputs.insert("trace".to_string(), args.out.display().to_string());
            manifest.outputs = outputs;
            write_manifest(&manifest, &args.out)?;
            println!("generated {} addresses", trace.len());
            Ok(())
        }
        other => Err(CliError::usage(format!(
            "unknown gen kind {other:?} (expected `table` or `trace`)"
        ))),
    }
}
