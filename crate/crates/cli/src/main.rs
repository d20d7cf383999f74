// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: generate, simulate, verify, benchmark, and export
//! multiplier netlists in reproducible runs.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parameter
//! error. Option precedence is flags > config file > defaults; every source
//! of randomness flows from the single seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use twinmul::blocks::ReductionPolicy;
use twinmul::document;
use twinmul::hdl;
use twinmul::metrics::{
    self, AreaTable, ComparisonReport, DelayTable, WorkloadSpec, DEFAULT_SEED,
};
use twinmul::multipliers::{gen_variant, OperationMode, VariantTag};
use twinmul::netlist::Circuit;
use twinmul::sim::{verify, Simulator, VerifyReport, VerifyStrategy};
use twinmul::vectors;

#[derive(Parser)]
#[command(name = "twinmul", about = "gate-level twin-precision multiplier workbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a multiplier netlist document and print gate counts.
    Gen(GenArgs),
    /// Run a netlist over a stimulus stream, reporting toggle statistics.
    Sim(SimArgs),
    /// Check a design against the wide-integer golden model.
    Verify(VerifyArgs),
    /// Compare designs with area/depth/power proxies.
    Bench(BenchArgs),
    /// Export a netlist as flat structural HDL text.
    Export(ExportArgs),
}

/// Options shared by every subcommand that names or loads a design.
#[derive(Args, Clone, Default)]
struct DesignArgs {
    /// Design variant: hpm-plain | twin-regular | recursive-rca |
    /// recursive-bec-gated.
    #[arg(long)]
    variant: Option<String>,
    /// Operand width in bits (power of two, 4..=64).
    #[arg(long)]
    width: Option<u32>,
    /// Reduction policy: wallace | dadda | hpm-regular.
    #[arg(long)]
    policy: Option<String>,
    /// Load an existing netlist document instead of generating one.
    #[arg(long)]
    netlist: Option<PathBuf>,
    /// JSON config file supplying defaults for the flags above plus seed,
    /// vectors, mode, table paths, and output paths.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Output path for the netlist document (defaults to <name>.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Stimulus file (one `port=hex` line per cycle). Without it, a seeded
    /// uniform workload is generated.
    #[arg(long)]
    vector_file: Option<PathBuf>,
    /// Number of generated vectors when no file is given.
    #[arg(long)]
    vectors: Option<u64>,
    /// Operation mode for generated vectors.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write a per-cycle trace (inputs and outputs) to this path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the toggle summary JSON to this path.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Restrict to one mode (default: every mode the variant supports).
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random case count for widths above 8 (exhaustive below).
    #[arg(long)]
    vectors: Option<u64>,
    /// Write the verification report JSON to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Comma-separated design variants to compare.
    #[arg(long)]
    designs: Option<String>,
    /// Baseline design tag for the percentage columns.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Vectors per workload row.
    #[arg(long)]
    vectors: Option<u64>,
    /// Area table JSON file (default: built-in transistor counts).
    #[arg(long)]
    area_table: Option<PathBuf>,
    /// Delay table JSON file (default: built-in unit delays).
    #[arg(long)]
    delay_table: Option<PathBuf>,
    /// Output path prefix for the report files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format(s): json | text | csv (json and text always written).
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Output path for the HDL text (defaults to <name>.v).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// File-backed defaults; any flag overrides its entry.
#[derive(Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    variant: Option<String>,
    width: Option<u32>,
    policy: Option<String>,
    mode: Option<String>,
    seed: Option<u64>,
    vectors: Option<u64>,
    designs: Option<String>,
    baseline: Option<String>,
    area_table: Option<PathBuf>,
    delay_table: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Option<String>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("bad config {}", p.display()))
        }
    }
}

fn parse_policy(s: &str) -> Result<ReductionPolicy> {
    ReductionPolicy::parse(s)
        .ok_or_else(|| anyhow!("unknown policy '{s}' (wallace | dadda | hpm-regular)"))
}

fn parse_variant(s: &str) -> Result<VariantTag> {
    VariantTag::parse(s).ok_or_else(|| {
        anyhow!("unknown variant '{s}' (hpm-plain | twin-regular | recursive-rca | recursive-bec-gated)")
    })
}

fn parse_mode(s: &str) -> Result<OperationMode> {
    OperationMode::parse(s)
        .ok_or_else(|| anyhow!("unknown mode '{s}' (twin | only-m1 | only-m4 | full)"))
}

/// Resolve the circuit a subcommand works on: an explicit netlist file wins,
/// otherwise generate from variant/width/policy.
fn resolve_circuit(d: &DesignArgs, cfg: &FileConfig) -> Result<Circuit> {
    if let Some(path) = &d.netlist {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read netlist {}", path.display()))?;
        let circuit = if path.extension().is_some_and(|e| e == "v") {
            hdl::parse(&text)?
        } else {
            document::from_json(&text)?
        };
        let report = circuit.validate();
        if !report.is_clean() {
            bail!("netlist {} does not validate:\n{report}", path.display());
        }
        return Ok(circuit);
    }
    let variant = d
        .variant
        .clone()
        .or_else(|| cfg.variant.clone())
        .ok_or_else(|| anyhow!("--variant or --netlist is required"))?;
    let width = d
        .width
        .or(cfg.width)
        .ok_or_else(|| anyhow!("--width is required"))?;
    let policy = d
        .policy
        .clone()
        .or_else(|| cfg.policy.clone())
        .unwrap_or_else(|| "hpm-regular".to_string());
    let circuit = gen_variant(parse_variant(&variant)?, width, parse_policy(&policy)?)?;
    Ok(circuit)
}

fn circuit_variant(circuit: &Circuit) -> Result<VariantTag> {
    parse_variant(&circuit.meta.variant)
        .map_err(|_| anyhow!("netlist variant '{}' is not runnable", circuit.meta.variant))
}

fn default_vectors(width: u32, flag: Option<u64>, cfg: &FileConfig) -> u64 {
    flag.or(cfg.vectors)
        .unwrap_or_else(|| metrics::default_vector_count(width))
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.design.config)?;
    let circuit = resolve_circuit(&args.design, &cfg)?;
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", circuit.meta.name)));
    write_out(&out, &document::to_json(&circuit)?)?;
    println!(
        "wrote {} ({} nets, {} gates, {} register bits)",
        out.display(),
        circuit.net_count,
        circuit.gates.len(),
        circuit.registers.len()
    );
    println!("gate counts by kind:");
    for (kind, count) in circuit.gate_counts() {
        println!("  {:<6} {count}", kind.name());
    }
    for key in ["counters_fa", "counters_ha"] {
        if let Some(v) = circuit.meta.extra.get(key) {
            let label = if key.ends_with("fa") { "(3,2)" } else { "(2,2)" };
            println!("  reduction counters {label}: {v}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sim(args: SimArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.design.config)?;
    let circuit = resolve_circuit(&args.design, &cfg)?;
    let stimuli = match &args.vector_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read vectors {}", path.display()))?;
            vectors::parse_vectors(&circuit, &text)?
        }
        None => {
            let variant = circuit_variant(&circuit)?;
            let mode = match args.mode.clone().or_else(|| cfg.mode.clone()) {
                Some(m) => parse_mode(&m)?,
                None => OperationMode::Full,
            };
            if !variant.supported_modes().contains(&mode) {
                bail!("variant {variant} does not support mode {mode}");
            }
            let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let count = default_vectors(circuit.meta.width, args.vectors, &cfg);
            let spec = WorkloadSpec {
                seed,
                vectors: count,
            };
            metrics::operand_stream(circuit.meta.width, &spec)
                .into_iter()
                .map(|(x, y)| {
                    circuit
                        .input_ports()
                        .map(|p| match p.name.as_str() {
                            "x" => x as u128,
                            "y" => y as u128,
                            "twin" => (mode == OperationMode::Twin) as u128,
                            "mode" => mode.code() as u128,
                            other => panic!("unexpected port {other}"),
                        })
                        .collect()
                })
                .collect()
        }
    };

    let mut sim = Simulator::new(&circuit)?;
    let mut trace = args.trace.as_ref().map(|_| String::new());
    for stim in &stimuli {
        for (i, v) in stim.iter().enumerate() {
            sim.set_input_by_index(i, *v);
        }
        sim.step();
        if let Some(t) = trace.as_mut() {
            t.push_str(&vectors::format_trace_line(&sim, stim));
            t.push('\n');
        }
    }
    if let (Some(path), Some(text)) = (&args.trace, &trace) {
        write_out(path, text)?;
    }
    let summary = metrics::PowerSummary::from(sim.toggle_stats());
    let json = serde_json::to_string_pretty(&summary)?;
    match &args.stats {
        Some(path) => write_out(path, &(json + "\n"))?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.design.config)?;
    let circuit = resolve_circuit(&args.design, &cfg)?;
    let variant = circuit_variant(&circuit)?;
    let width = circuit.meta.width;
    let modes: Vec<OperationMode> = match args.mode.clone().or_else(|| cfg.mode.clone()) {
        Some(m) => vec![parse_mode(&m)?],
        None => variant.supported_modes().to_vec(),
    };
    let strategy = if width <= 8 {
        VerifyStrategy::Exhaustive
    } else {
        VerifyStrategy::Random {
            seed: args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
            cases: default_vectors(width, args.vectors, &cfg),
        }
    };

    let mut reports: Vec<VerifyReport> = Vec::new();
    let mut failed = false;
    for mode in modes {
        let report = verify(&circuit, variant, mode, strategy)?;
        println!(
            "{} {} mode {:<8} {}: {} passes, {} failures",
            variant, width, mode.as_str(), report.strategy, report.passes, report.failures
        );
        if let Some(m) = &report.monitor {
            if !m.is_clean() {
                println!("  monitor violations: {m:?}");
            }
        }
        if let Some(f) = &report.first_failure {
            println!(
                "  first failure: case {} x={:#x} y={:#x} expected {} got {}",
                f.case_index, f.x, f.y, f.expected, f.actual
            );
        }
        failed |= !report.ok();
        reports.push(report);
    }
    if let Some(path) = args.out.or(cfg.out) {
        write_out(&path, &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.design.config)?;
    let width = args
        .design
        .width
        .or(cfg.width)
        .ok_or_else(|| anyhow!("--width is required"))?;
    let policy = parse_policy(
        &args
            .design
            .policy
            .clone()
            .or_else(|| cfg.policy.clone())
            .unwrap_or_else(|| "hpm-regular".to_string()),
    )?;
    let design_list = args
        .designs
        .clone()
        .or_else(|| cfg.designs.clone())
        .unwrap_or_else(|| "twin-regular,recursive-bec-gated".to_string());
    let baseline = args
        .baseline
        .clone()
        .or_else(|| cfg.baseline.clone())
        .unwrap_or_else(|| "twin-regular".to_string());

    let mut circuits = Vec::new();
    for tag in design_list.split(',') {
        circuits.push(gen_variant(parse_variant(tag.trim())?, width, policy)?);
    }
    let refs: Vec<&Circuit> = circuits.iter().collect();

    let area_path = args.area_table.clone().or_else(|| cfg.area_table.clone());
    let area_table = match &area_path {
        Some(p) => AreaTable::from_json(
            &fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        )?,
        None => AreaTable::transistor_counts(),
    };
    let delay_path = args.delay_table.clone().or_else(|| cfg.delay_table.clone());
    let delay_table = match &delay_path {
        Some(p) => DelayTable::from_json(
            &fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?,
        )?,
        None => DelayTable::unit(),
    };
    let table_names = (
        area_path
            .as_ref()
            .map_or("default-transistor-counts".to_string(), |p| {
                p.display().to_string()
            }),
        delay_path
            .as_ref()
            .map_or("default-unit-delay".to_string(), |p| p.display().to_string()),
    );

    let workload = WorkloadSpec {
        seed: args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        vectors: default_vectors(width, args.vectors, &cfg),
    };
    let report: ComparisonReport = metrics::compare(
        &refs,
        &workload,
        &baseline,
        &area_table,
        &delay_table,
        (&table_names.0, &table_names.1),
    )?;

    let prefix = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from(format!("bench_n{width}")));
    let json_path = prefix.with_extension("json");
    let text_path = prefix.with_extension("txt");
    write_out(&json_path, &report.to_json())?;
    write_out(&text_path, &report.to_text())?;
    let format = args.format.or(cfg.format).unwrap_or_default();
    if format == "csv" {
        write_out(&prefix.with_extension("csv"), &report.to_csv())?;
    }
    print!("{}", report.to_text());
    println!("wrote {} and {}", json_path.display(), text_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.design.config)?;
    let circuit = resolve_circuit(&args.design, &cfg)?;
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from(format!("{}.v", circuit.meta.name)));
    write_out(&out, &hdl::emit(&circuit))?;
    println!(
        "wrote {} ({} instances)",
        out.display(),
        circuit.gates.len() + circuit.registers.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Sim(a) => cmd_sim(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
