use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dctnet::bankfile::{self, save_banks, BANK_MAGIC};
use dctnet::dct_filters::{dctnet_banks, Basis, FrequencyAxis, ScanPolicy};
use dctnet::featstore::{self, FEATURE_MAGIC};
use dctnet::markov_klt::{compare_klt_dct, MarkovModel};
use dctnet::pca_filters::learn_layered_pca;
use dctnet::pipeline::imageio::{render_filter, write_pgm};
use dctnet::pipeline::{evaluate_manifest, extract_manifest, load_gallery, DatasetManifest, PipelineConfig};
use dctnet::synthetic::SyntheticFaces;
use dctnet::FilterBank64;

#[derive(Parser)]
#[command(name = "dctnet", version, about = "DCT filter-bank face features and rank-1 evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    HorizontalMajor,
    Zigzag,
}

#[derive(Subcommand)]
enum Command {
    /// Build DCT filter banks and write them to a bank file.
    Filters {
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Filters per layer, comma separated; one entry per layer.
        #[arg(long, value_delimiter = ',', default_value = "8,8")]
        p: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Order::HorizontalMajor)]
        order: Order,
        /// Lead each antidiagonal with the row frequency.
        #[arg(long)]
        flip_axis: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also render every filter as a PGM into this directory.
        #[arg(long)]
        emit_pgm: Option<PathBuf>,
        /// Pixels per coefficient in rendered filters.
        #[arg(long, default_value_t = 16)]
        pgm_scale: usize,
    },
    /// Learn PCA filter banks from the gallery images of a manifest.
    LearnPca {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_pgm: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        pgm_scale: usize,
    },
    /// Extract features for every manifest row into a feature-store file.
    Extract {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank-1 identification rates per probe group.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// CSV report path.
        #[arg(long)]
        report: PathBuf,
        /// Also write the aligned text table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Compare Markov-model KLT eigenvectors with DCT bases.
    VerifyKlt {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Exit status is 0 only if min |cos| reaches this value.
        #[arg(long, default_value_t = 0.999)]
        threshold: f64,
    },
    /// Print the header of a bank or feature-store file.
    Inspect { file: PathBuf },
    /// Write a synthetic identification dataset with a manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        subjects: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 10.0)]
        noise: f64,
        #[arg(long, default_value_t = 2)]
        shift: isize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Filters {
            k,
            p,
            order,
            flip_axis,
            out,
            emit_pgm,
            pgm_scale,
        } => {
            let policy = match (order, flip_axis) {
                (Order::Zigzag, _) => ScanPolicy::ZigZag,
                (Order::HorizontalMajor, false) => ScanPolicy::HorizontalMajor(FrequencyAxis::Columns),
                (Order::HorizontalMajor, true) => ScanPolicy::HorizontalMajor(FrequencyAxis::Rows),
            };
            let banks: Vec<FilterBank64> = dctnet_banks(k, &p, policy)?;
            save_banks(&out, &banks).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} layer(s) to {}", banks.len(), out.display());
            describe_banks(&banks);
            if let Some(dir) = emit_pgm {
                emit_filters(&banks, &dir, pgm_scale)?;
            }
        }
        Command::LearnPca {
            config,
            manifest,
            out,
            emit_pgm,
            pgm_scale,
        } => {
            let config = load_config(&config)?;
            let manifest = load_manifest(&manifest)?;
            let gallery = load_gallery::<f64>(&manifest, &config)?;
            let learned = learn_layered_pca(&gallery, config.filters.k, &config.filters.p)?;
            for (l, bank) in learned.iter().enumerate() {
                let shown: Vec<String> = bank.eigenvalues.iter().map(|v| format!("{v:.4}")).collect();
                println!("layer {}: eigenvalues {}", l + 1, shown.join(" "));
            }
            let banks: Vec<FilterBank64> = learned.into_iter().map(|l| l.bank).collect();
            save_banks(&out, &banks).with_context(|| format!("writing {}", out.display()))?;
            println!("learned from {} gallery image(s); wrote {}", gallery.len(), out.display());
            if let Some(dir) = emit_pgm {
                emit_filters(&banks, &dir, pgm_scale)?;
            }
        }
        Command::Extract { config, manifest, out } => {
            let config = load_config(&config)?;
            let manifest = load_manifest(&manifest)?;
            let store = extract_manifest::<f64>(&manifest, &config)?;
            store.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{} feature(s), stage {}, dim {} -> {}",
                store.records.len(),
                store.stage,
                store.dim,
                out.display()
            );
        }
        Command::Evaluate {
            config,
            manifest,
            report,
            table,
        } => {
            let config = load_config(&config)?;
            let manifest = load_manifest(&manifest)?;
            let eval = evaluate_manifest::<f64>(&manifest, &config)?;
            std::fs::write(&report, eval.report.to_csv()).with_context(|| format!("writing {}", report.display()))?;
            let text = eval.report.to_table();
            if let Some(path) = table {
                std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{text}");
            if !eval.failures.is_empty() {
                eprintln!("{} probe image(s) could not be read and were excluded:", eval.failures.len());
                for (path, message) in &eval.failures {
                    eprintln!("  {}: {message}", path.display());
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::VerifyKlt { r, n, csv, threshold } => {
            let model = MarkovModel::new(r, n)?;
            let report = compare_klt_dct(&model)?;
            println!("{report}");
            if let Some(path) = csv {
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut out = BufWriter::new(file);
                report.write_csv(&mut out)?;
                out.flush()?;
            }
            if report.min_cos < threshold {
                println!("FAIL: min |cos| {:.6} < {threshold}", report.min_cos);
                return Ok(ExitCode::FAILURE);
            }
            println!("PASS: min |cos| {:.6} >= {threshold}", report.min_cos);
        }
        Command::Inspect { file } => inspect(&file)?,
        Command::Synth {
            out,
            subjects,
            size,
            noise,
            shift,
            seed,
        } => {
            let defaults = SyntheticFaces::default();
            let synth = SyntheticFaces {
                subjects,
                size,
                noise_sigma: noise,
                shift,
                seed: seed.unwrap_or(defaults.seed),
                ..defaults
            };
            if subjects == 0 || size == 0 || noise.is_nan() || noise < 0.0 {
                bail!("subjects and size must be positive and noise non-negative");
            }
            let manifest = synth.write_to_dir(&out)?;
            println!("wrote {} subject(s) and {}", subjects, manifest.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(path: &Path) -> Result<PipelineConfig> {
    PipelineConfig::load(path).with_context(|| format!("config {}", path.display()))
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    DatasetManifest::load(path).with_context(|| format!("manifest {}", path.display()))
}

fn describe_banks(banks: &[FilterBank64]) {
    for (l, bank) in banks.iter().enumerate() {
        let tags: Vec<String> = bank
            .filters()
            .iter()
            .map(|f| match f.basis {
                Basis::Dct { u, v } => format!("({u},{v})"),
                Basis::Learned { rank } => format!("pc{rank}"),
            })
            .collect();
        println!("layer {}: k={} {} {}", l + 1, bank.size(), bank.policy(), tags.join(" "));
    }
}

fn emit_filters(banks: &[FilterBank64], dir: &Path, scale: usize) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut count = 0;
    for (l, bank) in banks.iter().enumerate() {
        for (i, filter) in bank.filters().iter().enumerate() {
            let tag = match filter.basis {
                Basis::Dct { u, v } => format!("u{u}_v{v}"),
                Basis::Learned { rank } => format!("pc{rank}"),
            };
            let path = dir.join(format!("layer{}_f{:02}_{tag}.pgm", l + 1, i + 1));
            write_pgm(&path, &render_filter(filter, scale))?;
            count += 1;
        }
    }
    println!("rendered {count} filter image(s) into {}", dir.display());
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let mut reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut magic = [0u8; 4];
    reader.read_exact(&mut magic).context("file too short")?;
    let mut input = std::io::Cursor::new(magic).chain(reader);
    if &magic == BANK_MAGIC {
        let header = bankfile::read_header(&mut input)?;
        println!("filter bank file, version {}, {} layer(s)", header.version, header.layers.len());
        for (l, layer) in header.layers.iter().enumerate() {
            println!("  layer {}: k={} p={} policy={}", l + 1, layer.k, layer.p, layer.policy);
        }
    } else if &magic == FEATURE_MAGIC {
        let header = featstore::read_header(&mut input)?;
        println!(
            "feature store, version {}, stage {}, dim {}, {} record(s)",
            header.version, header.stage, header.dim, header.count
        );
    } else {
        bail!("{}: unknown file type (magic {:02x?})", path.display(), magic);
    }
    Ok(())
}
