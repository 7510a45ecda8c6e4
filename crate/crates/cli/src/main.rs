use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avdim_core::harness::{
    experiment_folds, extract_clips, fold_data, generate_synthetic_dataset, labels_of, run_experiment_on,
    ClipFeatures, EvaluationReport, ExperimentConfig, FeatureCache, FeatureGroup, FoldModels, HarnessError, FOLDS,
};
use avdim_core::cfs::SelectionRecord;
use avdim_core::ingest::{load_manifest, ClipRecord};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avdim", version, about = "Arousal/valence regression for audio-visual clips")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Feature cache directory (overrides AVDIM_CACHE_DIR and the config).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract clip-level features for every clip in the manifest.
    Extract {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write clip statistics as CSV here.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run feature selection on each cross-validation training split.
    Select {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fused")]
        group: GroupArg,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train the LSTM and both SVRs on all clips and save them.
    Train {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fused")]
        group: GroupArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run the four-fold evaluation and write the report.
    Evaluate {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, short, default_value = "report.json")]
        out: PathBuf,
        /// Also write the per-clip prediction CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the result tables of a saved report.
    Compare {
        #[arg(long, short, default_value = "report.json")]
        report: PathBuf,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(short = 'n', long = "clips", default_value_t = 40)]
        n: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum GroupArg {
    Fused,
    Audio,
    Visual,
}

impl From<GroupArg> for FeatureGroup {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Fused => FeatureGroup::Fused,
            GroupArg::Audio => FeatureGroup::Audio,
            GroupArg::Visual => FeatureGroup::Visual,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn load_config(cli: &Cli, manifest: Option<&PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.cache_dir {
        config.cache_dir = Some(dir.clone());
    }
    if let Some(m) = manifest {
        config.manifest_path = m.clone();
    }
    Ok(config)
}

fn load_clips(config: &ExperimentConfig) -> Result<(Vec<ClipRecord>, Vec<ClipFeatures>), HarnessError> {
    let records = load_manifest(&config.manifest_path)?;
    let cache = FeatureCache::resolve(config.cache_dir.as_deref());
    let clips = extract_clips(&records, &config.extraction, &cache)?;
    Ok((records, clips))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Synth { n, out } => {
            let ds = generate_synthetic_dataset(cli.seed.unwrap_or(0), *n, out)?;
            println!("wrote {} clips, manifest {}", ds.records.len(), ds.manifest_path.display());
        }
        Command::Extract { manifest, out } => {
            let config = load_config(&cli, manifest.as_ref())?;
            let (records, clips) = load_clips(&config)?;
            if let Some(out) = out {
                let mut w = csv::Writer::from_writer(Vec::new());
                let names = &clips[0].vector.names;
                let header = std::iter::once("clip_id").chain(names.iter().map(String::as_str));
                w.write_record(header).map_err(|e| HarnessError::Data(e.to_string()))?;
                for (r, c) in records.iter().zip(&clips) {
                    let row = std::iter::once(r.clip_id.clone()).chain(c.vector.values.iter().map(f64::to_string));
                    w.write_record(row).map_err(|e| HarnessError::Data(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| HarnessError::Data(e.to_string()))?;
                write(out, &String::from_utf8_lossy(&bytes))?;
            }
            println!("extracted {} clips, {} clip-level features", clips.len(), clips[0].vector.values.len());
        }
        Command::Select { manifest, group, out } => {
            let config = load_config(&cli, manifest.as_ref())?;
            let (records, clips) = load_clips(&config)?;
            let labels = labels_of(&records);
            let ids: Vec<String> = records.iter().map(|r| r.clip_id.clone()).collect();
            let mut selections = Vec::with_capacity(FOLDS);
            for (f, test_ids) in experiment_folds(&config, &ids).iter().enumerate() {
                let train_idx: Vec<usize> = (0..ids.len()).filter(|&i| !test_ids.contains(&ids[i])).collect();
                let data = fold_data(&clips, &labels, &train_idx, &[], (*group).into(), config.selection_cap)?;
                selections.push(SelectionRecord::new(f, &data.selection));
            }
            let json = serde_json::to_string_pretty(&selections).expect("selections serialize");
            match out {
                Some(path) => write(path, &json)?,
                None => println!("{json}"),
            }
        }
        Command::Train { manifest, group, out } => {
            let config = load_config(&cli, manifest.as_ref())?;
            let (records, clips) = load_clips(&config)?;
            let labels = labels_of(&records);
            let all: Vec<usize> = (0..clips.len()).collect();
            let data = fold_data(&clips, &labels, &all, &[], (*group).into(), config.selection_cap)?;
            let models = FoldModels::fit(&config, &data, &[u64::MAX])?;
            fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
            let save = |name: &str, bytes: Vec<u8>| {
                let path = out.join(name);
                fs::write(&path, bytes).map_err(|e| io_error(&path, e))
            };
            save("lstm.avdm", models.lstm.model.to_bytes())?;
            save("svr_arousal.avsr", models.svr_arousal.model.to_bytes())?;
            save("svr_valence.avsr", models.svr_valence.model.to_bytes())?;
            let selection = SelectionRecord::new(0, &data.selection);
            write(
                &out.join("selection.json"),
                &serde_json::to_string_pretty(&selection).expect("selection serializes"),
            )?;
            println!(
                "trained on {} clips with {} features; models in {}",
                clips.len(),
                data.selection.indices.len(),
                out.display()
            );
        }
        Command::Evaluate { manifest, out, csv } => {
            let config = load_config(&cli, manifest.as_ref())?;
            config.validate()?;
            let (records, clips) = load_clips(&config)?;
            let report = run_experiment_on(&config, &records, &clips)?;
            write(out, &report.to_json())?;
            if let Some(csv) = csv {
                write(csv, &report.to_csv())?;
            }
            print!("{}", report.render_tables());
        }
        Command::Compare { report } => {
            let text = fs::read_to_string(report).map_err(|e| io_error(report, e))?;
            print!("{}", EvaluationReport::from_json(&text)?.render_tables());
        }
    }
    Ok(())
}
