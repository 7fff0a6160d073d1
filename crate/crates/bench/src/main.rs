use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sdp_bench::error::{io_error, BenchError, Result};
use sdp_bench::fetch::{fetch_datasets, FetchAction};
use sdp_bench::scatter::{emit_scatter, export_oversampled, ScatterMode};
use sdp_bench::{ingest, load_config, records, report, run_experiment, write_report, write_run, Protocol};

#[derive(Parser)]
#[command(name = "sdp-bench", version, about = "Defect-prediction benchmark with and without KMFOS oversampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Original,
    Oversampled,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Before,
    After,
}

#[derive(Subcommand)]
enum Command {
    /// Download missing datasets and verify checksums.
    Fetch {
        #[arg(long, default_value = "configs/default.json")]
        config: PathBuf,
    },
    /// Run the cross-validation protocols and write record files.
    Run {
        #[arg(long, default_value = "configs/default.json")]
        config: PathBuf,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolArg>,
        /// Only run this dataset.
        #[arg(long)]
        dataset: Option<String>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render mean/std tables from a records file.
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Output directory; defaults to the records file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Oversample a dataset in its raw feature space and export it as CSV.
    Oversample {
        #[arg(long, default_value = "configs/default.json")]
        config: PathBuf,
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        kn: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit first-two-component scatter data before or after oversampling.
    Scatter {
        #[arg(long, default_value = "configs/default.json")]
        config: PathBuf,
        #[arg(long)]
        dataset: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        kn: Option<usize>,
    },
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Fetch { config } => {
            let cfg = load_config(&config)?;
            for r in fetch_datasets(&cfg)? {
                let action = match r.action {
                    FetchAction::AlreadyPresent => "present",
                    FetchAction::Downloaded => "downloaded",
                };
                let pin = if r.unpinned { " (no pinned digest)" } else { "" };
                println!("{}\t{action}\t{}\t{}{pin}", r.name, r.sha256, r.path.display());
            }
        }
        Command::Run {
            config,
            protocol,
            dataset,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let protocol = match protocol {
                Some(ProtocolArg::Original) => Protocol::Original,
                Some(ProtocolArg::Oversampled) => Protocol::Oversampled,
                Some(ProtocolArg::Both) => Protocol::Both,
                None => cfg.protocol,
            };
            let output = run_experiment(&cfg, protocol, dataset.as_deref())?;
            let dir = out.unwrap_or_else(|| cfg.output_dir());
            for path in write_run(&output, &dir)? {
                println!("wrote {}", path.display());
            }
            if !output.skipped.is_empty() {
                eprintln!("{} task(s) skipped, see skipped.csv", output.skipped.len());
            }
            if !output.records.is_empty() {
                let rendered = report::render_report(&output.records)?;
                write_report(&rendered, &output.records, &dir)?;
                print!("{}", rendered.to_text());
            }
        }
        Command::Report { records: path, out } => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| BenchError::Data(format!("cannot read {}: {e}", path.display())))?;
            let recs = records::records_from_csv(&text)?;
            let rendered = report::render_report(&recs)?;
            let dir = out.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
            for p in write_report(&rendered, &recs, &dir)? {
                println!("wrote {}", p.display());
            }
            print!("{}", rendered.to_text());
        }
        Command::Oversample {
            config,
            dataset,
            k,
            kn,
            out,
        } => {
            let cfg = load_config(&config)?;
            let entry = cfg
                .dataset(&dataset)
                .ok_or_else(|| BenchError::Config(format!("dataset `{dataset}` is not configured")))?;
            sdp_bench::fetch::verify_dataset(&cfg, entry)?;
            let data = ingest::load_dataset(&cfg, entry)?;
            write_file(&out, &export_oversampled(&data, &cfg, k, kn)?)?;
            println!("wrote {}", out.display());
        }
        Command::Scatter {
            config,
            dataset,
            mode,
            out,
            k,
            kn,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.scatter.k = k.unwrap_or(cfg.scatter.k);
            cfg.scatter.kn = kn.unwrap_or(cfg.scatter.kn);
            cfg.validate()?;
            let entry = cfg
                .dataset(&dataset)
                .ok_or_else(|| BenchError::Config(format!("dataset `{dataset}` is not configured")))?;
            sdp_bench::fetch::verify_dataset(&cfg, entry)?;
            let data = ingest::load_dataset(&cfg, entry)?;
            let mode = match mode {
                ModeArg::Before => ScatterMode::Before,
                ModeArg::After => ScatterMode::After,
            };
            let scatter = emit_scatter(&data, &cfg, mode)?;
            write_file(&out, &scatter.csv)?;
            println!(
                "wrote {} ({} rows, {} clean, {} defective)",
                out.display(),
                scatter.rows,
                scatter.label_counts[0],
                scatter.label_counts[1]
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
