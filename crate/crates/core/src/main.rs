use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tilenoc::hwconfig::Framing;
use tilenoc::metrics::{
    communication_latency, gen_workload, plan_tdm, run_ablation_unchecked, run_comparison, run_tdm, tiles_from_sim,
    ExperimentOptions, Format, GenOptions, Scheme, TdmPlan,
};
use tilenoc::model::TrafficFlow;
use tilenoc::routing::RoutingOptions;
use tilenoc::schedule::render_slot_table;
use tilenoc::sim::{simulate_baseline, BaselineParams, MetroParams, SimResult};
use tilenoc::traffic::{extract_flows, CommunicationGraph, WorkloadSpec};
use tilenoc::workload_file::WorkloadFile;
use tilenoc::{Error, Result};

#[derive(Parser)]
#[command(name = "tilenoc", version, about = "Traffic scheduling and NoC simulation for tiled DNN accelerators")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Wire widths in bits, comma separated. Defaults to the workload file's list.
    #[arg(long, global = true, value_delimiter = ',')]
    wire_width: Vec<u32>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write reports into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, json or table.
    #[arg(long, global = true, default_value = "table")]
    format: String,
    /// Emit per-flit event lines.
    #[arg(long, global = true)]
    trace: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the flows a workload induces.
    Extract { workload: PathBuf },
    /// Show the route chosen for every flow.
    Route { workload: PathBuf },
    /// Slot-level injection schedule and lateness summary.
    Schedule { workload: PathBuf },
    /// Routing tables and chunk headers.
    EmitConfig { workload: PathBuf },
    /// Simulate one scheme and report per-flow timing.
    Simulate {
        workload: PathBuf,
        #[arg(long, default_value = "tdm")]
        scheme: String,
    },
    /// Sweep wire widths across schemes.
    Compare {
        workload: PathBuf,
        /// Comma-separated subset of tdm,dor,xyyx,romm,mad.
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
    },
    /// Add the scheduled fabric's features one at a time.
    Ablate { workload: PathBuf },
    /// Write a synthetic workload file.
    GenWorkload {
        #[arg(long, default_value_t = 8)]
        width: u16,
        #[arg(long, default_value_t = 8)]
        height: u16,
        #[arg(long, default_value_t = 4)]
        layers: usize,
    },
}

struct Usage(String);

enum Failure {
    Usage(Usage),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Ctx {
    format: Format,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, stem: &str, text: &str) -> Result<()> {
        self.emit_ext(stem, self.format.extension(), text)
    }

    fn emit_ext(&self, stem: &str, ext: &str, text: &str) -> Result<()> {
        match &self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join(format!("{stem}.{ext}")), text)?;
            }
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn single_width(g: &Global, file: &WorkloadFile) -> std::result::Result<u32, Usage> {
    match g.wire_width.as_slice() {
        [] => Ok(file.wire_widths.first().copied().unwrap_or(256)),
        [w] => Ok(*w),
        _ => Err(Usage("this command takes a single --wire-width".into())),
    }
}

fn load(path: &Path, g: &Global) -> std::result::Result<(WorkloadFile, WorkloadSpec, CommunicationGraph), Failure> {
    let file = WorkloadFile::load(path)?;
    let w = single_width(g, &file)?;
    let spec = file.to_spec(w)?;
    let graph = extract_flows(&spec).map_err(Error::from)?;
    Ok((file, spec, graph))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory");
    for r in rows {
        w.write_record(r).expect("in-memory");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn text_rows(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(" ") + "\n";
    for r in rows {
        s.push_str(&r.join(" "));
        s.push('\n');
    }
    s
}

fn rows_out(format: Format, header: &[&str], rows: &[Vec<String>], whole: impl FnOnce() -> String) -> String {
    match format {
        Format::Csv => csv_rows(header, rows),
        Format::Table => text_rows(header, rows),
        Format::Json => whole(),
    }
}

fn nodes(v: &[tilenoc::model::NodeId]) -> String {
    v.iter().map(|n| format!("{}:{}", n.x, n.y)).collect::<Vec<_>>().join(";")
}

fn flow_rows(graph: &CommunicationGraph) -> Vec<Vec<String>> {
    graph
        .flows
        .iter()
        .zip(&graph.tags)
        .map(|(f, t)| {
            vec![
                f.id.to_string(),
                format!("{:?}", f.kind),
                f.volume.to_string(),
                nodes(&f.sources),
                nodes(&f.destinations),
                f.ready_time.to_string(),
                f.qos_deadline.to_string(),
                t.layer.to_string(),
                t.iteration.to_string(),
                t.provenance.as_str().to_string(),
            ]
        })
        .collect()
}

fn timing_rows(flows: &[TrafficFlow], sim: &SimResult) -> Vec<Vec<String>> {
    flows
        .iter()
        .filter_map(|f| sim.flows.get(&f.id).map(|t| (f, t)))
        .map(|(f, t)| {
            vec![
                f.id.to_string(),
                f.ready_time.to_string(),
                t.injection.to_string(),
                t.head_arrival.to_string(),
                t.tail_arrival.to_string(),
                (t.tail_arrival - f.ready_time).to_string(),
                t.flits_injected.to_string(),
                t.flits_ejected.to_string(),
            ]
        })
        .collect()
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let g = &cli.global;
    let format = Format::parse(&g.format).ok_or_else(|| Usage(format!("unknown format `{}`", g.format)))?;
    let ctx = Ctx { format, out: g.out.clone() };
    let opts = ExperimentOptions::with_seed(g.seed);
    let metro = MetroParams { trace: g.trace, ..opts.metro };
    let tdm_routing = RoutingOptions { dual_phase: true, ea: Some(opts.ea) };

    match &cli.cmd {
        Cmd::Extract { workload } => {
            let (_, _, graph) = load(workload, g)?;
            let header = [
                "flow",
                "kind",
                "volume",
                "sources",
                "destinations",
                "ready",
                "deadline",
                "layer",
                "iteration",
                "provenance",
            ];
            ctx.emit("flows", &rows_out(format, &header, &flow_rows(&graph), || json(&graph)))?;
        }
        Cmd::Route { workload } => {
            let (_, spec, graph) = load(workload, g)?;
            let plans =
                plan_tdm(&spec.mesh, &graph.flows, &tdm_routing, Framing::Chunk, metro.mc_bits_per_cycle)?.plans;
            let rows: Vec<Vec<String>> = plans
                .iter()
                .map(|p| {
                    vec![
                        p.flow_id.to_string(),
                        format!("{:?}", p.kind),
                        p.dual_phase.to_string(),
                        format!("{}:{}", p.hub.x, p.hub.y),
                        nodes(&p.phase1_path),
                        p.phase2_tree.edge_count().to_string(),
                        p.channel_traversals().to_string(),
                    ]
                })
                .collect();
            let header = ["flow", "kind", "dual_phase", "hub", "phase1", "tree_edges", "traversals"];
            ctx.emit("routes", &rows_out(format, &header, &rows, || json(&plans)))?;
        }
        Cmd::Schedule { workload } => {
            let (_, spec, graph) = load(workload, g)?;
            let TdmPlan { legs, schedule: s, .. } =
                plan_tdm(&spec.mesh, &graph.flows, &tdm_routing, Framing::Chunk, metro.mc_bits_per_cycle)?;
            let late = s.flows.values().filter(|f| f.lateness > 0).count();
            let summary = format!(
                "flows {} legs {} late {} total_lateness {} makespan {}\n",
                s.flows.len(),
                legs.len(),
                late,
                s.total_lateness(),
                s.makespan()
            );
            let text = match format {
                Format::Json => json(&s),
                Format::Csv => {
                    let rows: Vec<Vec<String>> = s
                        .flows
                        .values()
                        .map(|f| {
                            vec![
                                f.flow_id.to_string(),
                                f.ready.to_string(),
                                f.deadline.to_string(),
                                f.inject.to_string(),
                                f.completion.to_string(),
                                f.lateness.to_string(),
                            ]
                        })
                        .collect();
                    csv_rows(&["flow", "ready", "deadline", "inject", "completion", "lateness"], &rows)
                }
                Format::Table => render_slot_table(&s, &legs) + &summary,
            };
            ctx.emit("schedule", &text)?;
            if format != Format::Table && ctx.out.is_none() {
                eprint!("{summary}");
            }
        }
        Cmd::EmitConfig { workload } => {
            let (_, spec, graph) = load(workload, g)?;
            let TdmPlan { legs, config: cfg, .. } =
                plan_tdm(&spec.mesh, &graph.flows, &tdm_routing, Framing::Chunk, metro.mc_bits_per_cycle)?;
            match format {
                Format::Json => ctx.emit("config", &json(&cfg))?,
                _ => ctx.emit_ext("config", "txt", &cfg.dump(&legs))?,
            }
        }
        Cmd::Simulate { workload, scheme } => {
            let scheme = Scheme::parse(scheme).ok_or_else(|| Usage(format!("unknown scheme `{scheme}`")))?;
            let (_, spec, graph) = load(workload, g)?;
            let sim = match scheme {
                Scheme::Tdm => run_tdm(&spec.mesh, &graph.flows, &tdm_routing, Framing::Chunk, &metro)?.sim,
                Scheme::Baseline(alg) => {
                    let p = BaselineParams { routing: alg, trace: g.trace, ..opts.baseline };
                    simulate_baseline(&spec.mesh, &graph.flows, &p).map_err(Error::from)?
                }
            };
            let tiles = tiles_from_sim(&spec, &graph, &sim);
            let header =
                ["flow", "ready", "injection", "head_arrival", "tail_arrival", "latency", "flits_in", "flits_out"];
            let rows = timing_rows(&graph.flows, &sim);
            let mut text = rows_out(format, &header, &rows, || {
                json(&serde_json::json!({ "flows": sim.flows, "makespan": sim.makespan, "tiles": tiles }))
            });
            if format == Format::Table {
                text.push_str(&format!(
                    "comm_latency {} makespan {} stall {} mean_bounded_ratio {:.6}\n",
                    communication_latency(&graph.flows, &sim),
                    tiles.makespan,
                    tiles.total_stall,
                    tiles.mean_bounded_ratio
                ));
            }
            ctx.emit("simulate", &text)?;
            if g.trace {
                ctx.emit_ext("trace", "txt", &(sim.trace.join("\n") + "\n"))?;
            }
        }
        Cmd::Compare { workload, schemes } => {
            let file = WorkloadFile::load(workload)?;
            let widths = if g.wire_width.is_empty() { file.wire_widths.clone() } else { g.wire_width.clone() };
            let widths = if widths.is_empty() { vec![256] } else { widths };
            let schemes: Vec<Scheme> = if schemes.is_empty() {
                Scheme::ALL.to_vec()
            } else {
                schemes
                    .iter()
                    .map(|s| Scheme::parse(s).ok_or_else(|| Usage(format!("unknown scheme `{s}`"))))
                    .collect::<std::result::Result<_, _>>()?
            };
            let report = run_comparison(&file, &widths, &schemes, &opts)?;
            ctx.emit("compare", &report.render(format))?;
            if ctx.out.is_some() {
                ctx.emit_ext("tiles", "csv", &report.tiles_csv())?;
            }
        }
        Cmd::Ablate { workload } => {
            let file = WorkloadFile::load(workload)?;
            let w = single_width(g, &file)?;
            let report = run_ablation_unchecked(&file, w, &opts)?;
            ctx.emit("ablation", &report.render(format))?;
            report.check_monotone()?;
        }
        Cmd::GenWorkload { width, height, layers } => {
            let widths = if g.wire_width.is_empty() { GenOptions::default().wire_widths } else { g.wire_width.clone() };
            let file = gen_workload(&GenOptions {
                seed: g.seed,
                width: *width,
                height: *height,
                layers: *layers,
                wire_widths: widths,
            });
            file.to_spec(file.wire_widths[0])?;
            ctx.emit_ext("workload", "toml", &file.to_toml())?;
        }
    }
    Ok(())
}
