//! Batch front end for the coded-modulation simulator: constellation
//! inspection, mapping round-trip checks, LLR evaluation on supplied
//! samples, BER sweeps from config files, per-level MI curves and
//! capacity-rule rate plans.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vcm::cm::{capacity_rule_rates, dvbs2_rates, mi_bit_levels};
use vcm::labeling::Mapping;
use vcm::lattices::Lattice;
use vcm::llr::{bicm_ball_llr, exact_maxlog_llr, qam_exact_llr, write_llr_line};
use vcm::sim::{
    constellation_by_name, run_experiment, summary_json, uncoded_ber, BerRecord,
    ExperimentConfig, StopRule,
};
use vcm::vc::VoronoiConstellation;

#[derive(Parser)]
#[command(name = "vcm", about = "Voronoi-constellation coded modulation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a point to the nearest lattice point.
    LatticeQuantize {
        /// Built-in lattice name (Z8, D4, E8R, 8E8, BW16, 2Leech24R, ...)
        #[arg(long)]
        lattice: Option<String>,
        /// Generator matrix file (one row per line) instead of a name.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Comma-separated point coordinates.
        point: String,
    },
    /// Print size, rate and measured energy of a constellation.
    VcInfo {
        /// Catalog name (E8-24, L24-144, ...), <M>-QAM, or TDHQ1/2.
        name: String,
    },
    /// Exhaustive or sampled bit-mapping bijection check (exit 1 on any failure).
    MapRoundtrip {
        #[arg(long)]
        vc: String,
        /// gray | sp | hybrid
        #[arg(long)]
        mapping: String,
        /// Chain name for sp (e8-48-sp, ...) or hybrid exponents (hybrid-p1).
        #[arg(long)]
        chain: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compute LLR frames for symbols read from a file (one per line).
    LlrEval {
        #[arg(long)]
        vc: String,
        /// exact | ball | qam
        #[arg(long, default_value = "ball")]
        engine: String,
        #[arg(long)]
        snr_db: f64,
        #[arg(long)]
        r2: Option<i64>,
        #[arg(long, default_value_t = 20.0)]
        default_r: f64,
        /// Input symbol file; whitespace/comma separated coordinates.
        #[arg(long, name = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a BER sweep from a TOML experiment config.
    BerSweep {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix; writes <out>.csv and <out>.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-level conditional mutual information over an SNR grid.
    MiLevels {
        #[arg(long)]
        constellation: String,
        #[arg(long, default_value = "gray")]
        mapping: String,
        #[arg(long)]
        chain: Option<String>,
        /// Comma-separated SNR grid in dB.
        #[arg(long)]
        snr_db: String,
        #[arg(long, default_value_t = 200_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Capacity-rule code-rate assignment at one SNR point.
    RatePlan {
        #[arg(long)]
        constellation: String,
        #[arg(long, default_value = "sp")]
        mapping: String,
        #[arg(long)]
        chain: Option<String>,
        #[arg(long)]
        snr_db: f64,
        #[arg(long, default_value_t = 400_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Uncoded BER sweep without a config file.
    UncodedBer {
        #[arg(long)]
        constellation: String,
        #[arg(long, default_value = "gray")]
        mapping: String,
        #[arg(long)]
        chain: Option<String>,
        #[arg(long)]
        snr_db: String,
        #[arg(long, default_value_t = 200)]
        target_errors: u64,
        #[arg(long, default_value_t = 10_000_000)]
        max_bits: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn single_thread_pool() {
    // Commands other than ber-sweep run single-threaded.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
}

fn parse_mapping(
    vc: &VoronoiConstellation,
    mapping: &str,
    chain: Option<&str>,
) -> Result<Mapping, Box<dyn std::error::Error>> {
    let cfgish = vcm::sim::ExperimentConfig {
        name: "tmp".into(),
        seed: 0,
        threads: 0,
        constellation: vcm::sim::ConstellationConfig {
            name: vc.name.clone(),
            offset: "half".into(),
        },
        scheme: vcm::sim::SchemeConfig {
            kind: "uncoded".into(),
            mapping: mapping.into(),
            chain: chain.map(|s| s.to_string()),
            code: None,
            codes: vec![],
            interleaver_seed: 1,
            ball_r2: None,
            ball_default: 20.0,
            block_symbols: None,
            max_iterations: 50,
        },
        sweep: vcm::sim::SweepConfig {
            snr_db: vec![0.0],
            target_errors: 1,
            max_bits: 1,
        },
    };
    Ok(cfgish.build_mapping(vc)?)
}

fn parse_point(s: &str) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad coordinate '{t}': {e}").into()))
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Box<dyn std::error::Error>> {
    parse_point(s)
}

fn write_records(
    out: Option<&PathBuf>,
    header_echo: Option<&str>,
    records: &[BerRecord],
) -> std::io::Result<()> {
    println!("{}", BerRecord::CSV_HEADER);
    for r in records {
        println!("{}", r.csv_line());
    }
    if let Some(prefix) = out {
        let csv_path = prefix.with_extension("csv");
        let mut f = std::fs::File::create(&csv_path)?;
        if let Some(echo) = header_echo {
            for line in echo.lines() {
                writeln!(f, "# {line}")?;
            }
        }
        writeln!(f, "{}", BerRecord::CSV_HEADER)?;
        for r in records {
            writeln!(f, "{}", r.csv_line())?;
        }
        eprintln!("wrote {}", csv_path.display());
    }
    Ok(())
}

fn run(cmd: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cmd {
        Command::LatticeQuantize { lattice, matrix, point } => {
            single_thread_pool();
            let lat = match (lattice, matrix) {
                (Some(name), None) => Lattice::by_name(&name)?,
                (None, Some(path)) => Lattice::from_matrix_file(&path)?,
                _ => return Err("give exactly one of --lattice or --matrix".into()),
            };
            let y = parse_point(&point)?;
            if y.len() != lat.n {
                return Err(format!("point has {} coordinates, lattice is {}D", y.len(), lat.n).into());
            }
            let q = lat.quantize(&y);
            let d2: f64 = y.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            let coords: Vec<String> = q.iter().map(|v| format!("{v}")).collect();
            println!("nearest=({}) d2={:.6}", coords.join(","), d2);
            Ok(ExitCode::SUCCESS)
        }
        Command::VcInfo { name } => {
            single_thread_pool();
            let vc = constellation_by_name(&name)?;
            let es = vc.symbol_energy();
            println!(
                "M={} m={} beta={:.3} Es={:.4} n={} shaping={}",
                vc.size(),
                vc.m_bits,
                vc.beta(),
                es,
                vc.n,
                vc.shaping_name()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::MapRoundtrip { vc, mapping, chain, samples, seed } => {
            single_thread_pool();
            let vc = constellation_by_name(&vc)?;
            let map = parse_mapping(&vc, &mapping, chain.as_deref())?;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let exhaustive = vc.m_bits <= 20;
            let mut failures = 0u64;
            let mut checked = 0u64;
            if exhaustive {
                for u in vc.indices()? {
                    let bits = map.index_to_bits(&vc, &u)?;
                    if map.bits_to_index(&vc, &bits)? != u {
                        failures += 1;
                    }
                    checked += 1;
                }
            } else {
                for _ in 0..samples {
                    let u = vc.random_index(&mut rng);
                    let bits = map.index_to_bits(&vc, &u)?;
                    if map.bits_to_index(&vc, &bits)? != u {
                        failures += 1;
                    }
                    checked += 1;
                }
            }
            println!(
                "mapping={} vc={} checked={checked} mode={} failures={failures}",
                map.name(),
                vc.name,
                if exhaustive { "exhaustive" } else { "sampled" }
            );
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::LlrEval { vc, engine, snr_db, r2, default_r, input, out } => {
            single_thread_pool();
            let vc = constellation_by_name(&vc)?;
            let es = vc.symbol_energy();
            let sigma_tot2 = vcm::sim::sigma_tot2_from_snr_db(es, snr_db);
            let sigma2 = vcm::sim::sigma2_per_2d(sigma_tot2, vc.n);
            let text = std::fs::read_to_string(&input)?;
            let mut outf = std::io::BufWriter::new(std::fs::File::create(&out)?);
            let r2 = r2.unwrap_or(match vc.n {
                16 | 24 => vcm::llr::BALL_R2_16D,
                _ => vcm::llr::BALL_R2_8D,
            });
            let mut count = 0usize;
            for (lno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let y = parse_point(line)?;
                if y.len() != vc.n {
                    return Err(format!("line {}: {} coordinates for n = {}", lno + 1, y.len(), vc.n).into());
                }
                let frame = match engine.as_str() {
                    "exact" => exact_maxlog_llr(&vc, &Mapping::Gray, &y, sigma2)?,
                    "ball" => bicm_ball_llr(&vc, &y, sigma2, r2, default_r)?,
                    "qam" => qam_exact_llr(&vc, &y, sigma2)?,
                    other => return Err(format!("unknown engine '{other}'").into()),
                };
                write_llr_line(&mut outf, &frame)?;
                count += 1;
            }
            eprintln!("wrote {count} frames to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::BerSweep { config, out, threads, seed } => {
            if threads > 0 {
                rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
            }
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let records = run_experiment(&cfg)?;
            write_records(out.as_ref(), Some(&cfg.to_toml_string()), &records)?;
            if let Some(prefix) = &out {
                let json_path = prefix.with_extension("json");
                std::fs::write(&json_path, summary_json(&cfg, &records))?;
                eprintln!("wrote {}", json_path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MiLevels { constellation, mapping, chain, snr_db, samples, seed, out } => {
            single_thread_pool();
            let vc = constellation_by_name(&constellation)?;
            let map = parse_mapping(&vc, &mapping, chain.as_deref())?;
            let grid = parse_grid(&snr_db)?;
            let mut lines = vec![format!(
                "snr_db,{}",
                (0..vc.m_bits).map(|k| format!("I{}", k + 1)).collect::<Vec<_>>().join(",")
            )];
            for &snr in &grid {
                let report = mi_bit_levels(&vc, &map, snr, samples, seed)?;
                let vals: Vec<String> =
                    report.per_bit.iter().map(|v| format!("{v:.5}")).collect();
                lines.push(format!("{snr:.4},{}", vals.join(",")));
            }
            let text = lines.join("\n") + "\n";
            match &out {
                Some(path) => {
                    std::fs::write(path, &text)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RatePlan { constellation, mapping, chain, snr_db, samples, seed } => {
            single_thread_pool();
            let vc = constellation_by_name(&constellation)?;
            let map = parse_mapping(&vc, &mapping, chain.as_deref())?;
            let report = mi_bit_levels(&vc, &map, snr_db, samples, seed)?;
            let sums = report.level_sums();
            let coded = map.coded_widths().len();
            let widths: Vec<usize> = report.level_widths[..coded].to_vec();
            let plan = capacity_rule_rates(&widths, &sums[..coded], &dvbs2_rates());
            println!("constellation={} mapping={} snr_db={snr_db}", vc.name, map.name());
            for (i, ((w, mi), rate)) in widths.iter().zip(&sums).zip(&plan).enumerate() {
                let r = match rate {
                    Some(r) => format!("{}/{}", r.numer(), r.denom()),
                    None => "0".into(),
                };
                println!("level={} bits={} mi={:.4} rate={}", i + 1, w, mi, r);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::UncodedBer {
            constellation,
            mapping,
            chain,
            snr_db,
            target_errors,
            max_bits,
            seed,
            out,
        } => {
            single_thread_pool();
            let vc = constellation_by_name(&constellation)?;
            let map = parse_mapping(&vc, &mapping, chain.as_deref())?;
            let grid = parse_grid(&snr_db)?;
            let stop = StopRule { target_errors, max_bits };
            let records = uncoded_ber(&vc, &map, &grid, stop, seed)?;
            write_records(out.as_ref(), None, &records)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
