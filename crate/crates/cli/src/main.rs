mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aigsage_core::aig::{parse_aiger, write_aiger, Aig};
use aigsage_core::ml::{
    load_model, load_model_expecting, save_model, train, Model, ModelConfig, TrainError,
};
use aigsage_core::netgen::{generate, Family};
use aigsage_core::oracle::{run_oracle, CutParams};
use aigsage_core::pipeline::{build_dataset, evaluate, run_learned, Split};
use clap::{Parser, Subcommand};

use manifest::{manifest_path, RunManifest};

#[derive(Parser)]
#[command(
    name = "aigsage",
    version,
    about = "Adder-tree recognition in multiplier AIGs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a multiplier as ASCII AIGER.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        bits: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the adders placed by the generator.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Exact labels and adder tree of an AIG.
    Label {
        #[arg(long)]
        aig: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        adders: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train a model on generated designs, e.g. `csa:2-8,booth:12`.
    Train {
        #[arg(long)]
        train_designs: String,
        /// JSON model configuration; the shallow preset if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Per-node predictions of a trained model.
    Infer {
        #[arg(long)]
        aig: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        repair: bool,
        /// Write the adder tree extracted from the predictions.
        #[arg(long)]
        extract: Option<PathBuf>,
        /// Reject the model unless its configuration equals this one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Score a model against oracle labels on generated designs.
    Eval {
        #[arg(long)]
        test_designs: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        repair: bool,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Oracle against learned runtime over a range of widths.
    Bench {
        #[arg(long)]
        family: Family,
        #[arg(long, value_delimiter = ',')]
        bits_list: Vec<usize>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Runs per measurement; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError {
    code: u8,
    msg: String,
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError {
        code: 2,
        msg: msg.to_string(),
    }
}

fn data(msg: impl std::fmt::Display) -> CliError {
    CliError {
        code: 3,
        msg: msg.to_string(),
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &Path, m: &mut RunManifest) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    m.input(path, &bytes);
    Ok(bytes)
}

fn write(path: &Path, contents: impl AsRef<[u8]>, m: &mut RunManifest) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| data(format!("{}: {e}", path.display())))?;
    m.output(path);
    Ok(())
}

fn read_aig(path: &Path, m: &mut RunManifest) -> Result<Aig> {
    let bytes = read(path, m)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| data(format!("{}: not UTF-8 text", path.display())))?;
    parse_aiger(&text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path, m: &mut RunManifest) -> Result<ModelConfig> {
    let bytes = read(path, m)?;
    serde_json::from_slice(&bytes).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path, expected: Option<&ModelConfig>, m: &mut RunManifest) -> Result<Model> {
    read(path, m)?;
    let model = match expected {
        Some(c) => load_model_expecting(path, c),
        None => load_model(path),
    };
    model.map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Comma-separated `family:bits` or `family:lo-hi` entries.
fn parse_designs(spec: &str) -> Result<Vec<(Family, usize)>> {
    let mut out = Vec::new();
    for entry in spec.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let (fam, bits) = entry
            .split_once(':')
            .ok_or_else(|| usage(format!("design entry {entry:?} is not family:bits")))?;
        let family: Family = fam.parse().map_err(usage)?;
        let num = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad bit width in {entry:?}")))
        };
        let (lo, hi) = match bits.split_once('-') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(bits)?, num(bits)?),
        };
        if lo > hi {
            return Err(usage(format!("empty range in {entry:?}")));
        }
        out.extend((lo..=hi).map(|b| (family, b)));
    }
    if out.is_empty() {
        return Err(usage("no designs given"));
    }
    Ok(out)
}

fn finish(m: &RunManifest, explicit: Option<&Path>, out: &Path) -> Result<()> {
    let path = manifest_path(explicit, out);
    m.write(&path)
        .map_err(|e| data(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            family,
            bits,
            out,
            truth,
            manifest,
        } => {
            let mut m = RunManifest::new("gen");
            m.arg("family", family);
            m.arg("bits", bits);
            let t = Instant::now();
            let (aig, adders) = generate(family, bits).map_err(usage)?;
            m.time("generate_s", t.elapsed().as_secs_f64());
            write(&out, write_aiger(&aig), &mut m)?;
            if let Some(p) = &truth {
                let json = serde_json::to_string_pretty(&adders).expect("adders serialize");
                write(p, json + "\n", &mut m)?;
            }
            finish(&m, manifest.as_deref(), &out)
        }
        Command::Label {
            aig,
            out,
            adders,
            manifest,
        } => {
            let mut m = RunManifest::new("label");
            let g = read_aig(&aig, &mut m)?;
            let t = Instant::now();
            let res = run_oracle(&g, CutParams::default());
            m.time("oracle_s", t.elapsed().as_secs_f64());
            write(&out, res.labels.to_csv(), &mut m)?;
            if let Some(p) = &adders {
                write(p, res.tree.to_json_lines(), &mut m)?;
            }
            eprintln!(
                "{} full adders, {} half adders",
                res.tree.count(aigsage_core::netgen::AdderKind::Full),
                res.tree.count(aigsage_core::netgen::AdderKind::Half)
            );
            finish(&m, manifest.as_deref(), &out)
        }
        Command::Train {
            train_designs,
            config,
            seed,
            out,
            manifest,
        } => {
            let mut m = RunManifest::new("train");
            m.arg("train_designs", &train_designs);
            let designs = parse_designs(&train_designs)?;
            let mut cfg = match &config {
                Some(p) => read_config(p, &mut m)?,
                None => ModelConfig::shallow(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(usage)?;
            m.config = Some(serde_json::to_value(&cfg).expect("config serializes"));
            m.seed = Some(cfg.seed);
            let t = Instant::now();
            let ds = build_dataset(&designs, Split::Train).map_err(usage)?;
            m.time("label_s", t.elapsed().as_secs_f64());
            let t = Instant::now();
            let outcome = train(&ds.training_graphs(), cfg).map_err(|e| match e {
                TrainError::Diverged { .. } => CliError {
                    code: 4,
                    msg: e.to_string(),
                },
                TrainError::Loss(_) => data(e),
                TrainError::Config(_) | TrainError::EmptyDataset => usage(e),
            })?;
            m.time("train_s", t.elapsed().as_secs_f64());
            if let (Some(first), Some(last)) =
                (outcome.loss_trace.first(), outcome.loss_trace.last())
            {
                m.arg("loss_first", first);
                m.arg("loss_last", last);
            }
            save_model(&outcome.model, &out)
                .map_err(|e| data(format!("{}: {e}", out.display())))?;
            m.output(&out);
            finish(&m, manifest.as_deref(), &out)
        }
        Command::Infer {
            aig,
            model,
            out,
            repair,
            extract,
            config,
            manifest,
        } => {
            let mut m = RunManifest::new("infer");
            m.arg("repair", repair);
            let expected = config
                .as_deref()
                .map(|p| read_config(p, &mut m))
                .transpose()?;
            let model = read_model(&model, expected.as_ref(), &mut m)?;
            m.config = Some(serde_json::to_value(&model.config).expect("config serializes"));
            m.seed = Some(model.config.seed);
            let g = read_aig(&aig, &mut m)?;
            let run = run_learned(&g, &model, repair);
            m.time("features_s", run.times.features_s);
            m.time("forward_s", run.times.forward_s);
            m.time("repair_s", run.times.repair_s);
            m.time("extract_s", run.times.extract_s);
            m.time("total_s", run.times.total());
            write(&out, run.predictions.to_labels().to_csv(), &mut m)?;
            if let Some(p) = &extract {
                write(p, run.tree.to_json_lines(), &mut m)?;
            }
            finish(&m, manifest.as_deref(), &out)
        }
        Command::Eval {
            test_designs,
            model,
            out,
            csv,
            repair,
            manifest,
        } => {
            let mut m = RunManifest::new("eval");
            m.arg("test_designs", &test_designs);
            m.arg("repair", repair);
            let designs = parse_designs(&test_designs)?;
            let model = read_model(&model, None, &mut m)?;
            m.config = Some(serde_json::to_value(&model.config).expect("config serializes"));
            let ds = build_dataset(&designs, Split::Test).map_err(usage)?;
            let t = Instant::now();
            let report = evaluate(&model, &ds, Split::Test, repair);
            m.time("evaluate_s", t.elapsed().as_secs_f64());
            for d in &report.designs {
                let acc: Vec<String> = d
                    .tasks
                    .iter()
                    .map(|t| format!("{:.4}", t.accuracy))
                    .collect();
                eprintln!(
                    "{} accuracy {} adder recall {:.4}",
                    d.name,
                    acc.join(" "),
                    d.adders.recall
                );
            }
            write(&out, report.to_json() + "\n", &mut m)?;
            if let Some(p) = &csv {
                write(p, report.to_csv(), &mut m)?;
            }
            finish(&m, manifest.as_deref(), &out)
        }
        Command::Bench {
            family,
            bits_list,
            model,
            out,
            repeats,
            manifest,
        } => {
            let mut m = RunManifest::new("bench");
            m.arg("family", family);
            m.arg("bits_list", &bits_list);
            m.arg("repeats", repeats);
            if bits_list.is_empty() || repeats == 0 {
                return Err(usage("need at least one width and one repeat"));
            }
            let model = read_model(&model, None, &mut m)?;
            m.config = Some(serde_json::to_value(&model.config).expect("config serializes"));
            let mut csv = String::from("family,bits,nodes,edges,oracle_s,learned_s\n");
            for &bits in &bits_list {
                let (g, _) = generate(family, bits).map_err(usage)?;
                let best = |f: &dyn Fn()| {
                    (0..repeats)
                        .map(|_| {
                            let t = Instant::now();
                            f();
                            t.elapsed().as_secs_f64()
                        })
                        .fold(f64::INFINITY, f64::min)
                };
                let oracle_s = best(&|| {
                    std::hint::black_box(run_oracle(&g, CutParams::default()));
                });
                let learned_s = best(&|| {
                    std::hint::black_box(run_learned(&g, &model, true));
                });
                let stats = g.stats();
                writeln!(
                    csv,
                    "{family},{bits},{},{},{oracle_s:.6},{learned_s:.6}",
                    stats.num_nodes, stats.num_edges
                )
                .unwrap();
                eprintln!("{family}{bits}: oracle {oracle_s:.4}s learned {learned_s:.4}s");
            }
            write(&out, csv, &mut m)?;
            finish(&m, manifest.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
