//! Command-line driver: argument parsing and the five subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::SpecFile;
use crate::diagnostics::{covariance_decay, DecayOptions, LipschitzFn, TestPair};
use crate::empirical::SchemeThresholds;
use crate::error::{Error, Result};
use crate::extremogram::{estimate_extremogram, pa_extremogram_ar1, theoretical_extremogram_ar1, ExtremogramConfig};
use crate::montecarlo::{reference_extremogram, run_experiment};
use crate::normalize::{normalize_hard_threshold, VnChoice};
use crate::output;
use crate::processes::{generate, ModelSpec, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run specification.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `base_seed` from the spec.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicated runs.
    #[arg(long, global = true, env = "CLUSTER_EXT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Parser)]
#[command(name = "cluster-ext", version, about = "Extremogram and cluster-functional simulation toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one path of the configured model.
    Simulate,
    /// Estimate the extremogram of one path (simulated, or read with --input).
    Extremogram {
        /// Series CSV with an `x` column.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the replicated experiment and write results.csv, bands.csv and summary.json.
    Experiment,
    /// Covariance-decay and block-scheme diagnostics.
    Diagnose,
    /// Tabulate the limiting and pre-asymptotic extremograms of the base-b AR(1).
    Theory {
        #[arg(long, default_value_t = 2)]
        b: u32,
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        /// Exceedance probability; defaults to 1/(10 sqrt 2).
        #[arg(long)]
        vn: Option<f64>,
    },
}

impl Common {
    fn load(&self) -> Result<SpecFile> {
        let path = self.spec.as_deref().ok_or_else(|| Error::Config("--spec <path> is required".into()))?;
        let mut spec = SpecFile::load(path)?;
        if let Some(seed) = self.seed {
            spec.experiment.base_seed = seed;
        }
        Ok(spec)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Rows `(h, b^{-h}, rho_n(h))` for `h = 0..=max_lag`.
pub fn theory_table(b: u32, max_lag: usize, v_n: f64) -> Result<Vec<(usize, f64, f64)>> {
    (0..=max_lag)
        .map(|h| Ok((h, theoretical_extremogram_ar1(b, h)?, pa_extremogram_ar1(b, h, v_n)?)))
        .collect()
}

pub fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match cli.command {
        Command::Theory { b, max_lag, vn } => cmd_theory(c, b, max_lag, vn),
        Command::Simulate => cmd_simulate(c),
        Command::Extremogram { ref input } => cmd_extremogram(c, input.as_deref()),
        Command::Experiment => cmd_experiment(c),
        Command::Diagnose => cmd_diagnose(c),
    }
}

fn cmd_theory(c: &Common, b: u32, max_lag: usize, vn: Option<f64>) -> Result<()> {
    let v_n = vn.unwrap_or(1.0 / (10.0 * 2f64.sqrt()));
    let rows = theory_table(b, max_lag, v_n)?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    output::write_theory_csv(&rows, &mut lock)?;
    if let Some(dir) = &c.out {
        std::fs::create_dir_all(dir)?;
        match c.format {
            Format::Csv => output::write_theory_csv(&rows, create(dir, "theory.csv")?)?,
            Format::Json => write_json(
                dir,
                "theory.json",
                &json!({
                    "b": b, "v_n": v_n,
                    "h": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                    "rho": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
                    "rho_pa": rows.iter().map(|r| r.2).collect::<Vec<_>>(),
                }),
            )?,
        }
    }
    Ok(())
}

fn cmd_simulate(c: &Common) -> Result<()> {
    let spec = c.load()?;
    let e = &spec.experiment;
    let ts = generate(&e.model, e.n, e.base_seed)?;
    let dir = c.out_dir()?;
    match c.format {
        Format::Csv => output::write_series_csv(&ts.values, create(&dir, "series.csv")?)?,
        Format::Json => write_json(
            &dir,
            "series.json",
            &json!({"model": e.model, "seed": e.base_seed, "values": ts.values}),
        )?,
    }
    eprintln!("wrote {} values to {}", ts.len(), dir.display());
    Ok(())
}

fn cmd_extremogram(c: &Common, input: Option<&Path>) -> Result<()> {
    let spec = c.load()?;
    let e = &spec.experiment;
    let series = match input {
        Some(path) => TimeSeries {
            values: output::read_series_csv(File::open(path)?)?,
            spec: e.model.clone(),
            seed: e.base_seed,
        },
        None => generate(&e.model, e.n, e.base_seed)?,
    };
    let n = series.len();
    let u = e.u_n()?;
    let vn_choice = if input.is_some() { VnChoice::Empirical } else { VnChoice::Analytic(e.v_n) };
    let ns = normalize_hard_threshold(&series, u, vn_choice)?;
    let scheme = crate::empirical::BlockScheme::new(n, e.block_length, e.small_block_length)?;
    let cfg = ExtremogramConfig::new(e.a.clone(), e.b.clone(), e.max_lag, u, ns.v_n, scheme)?;
    let est = estimate_extremogram(&ns, &cfg)?;
    let pa = match e.model {
        ModelSpec::BaseBAr1 { .. } => reference_extremogram(e).ok().map(|r| r.0),
        _ => None,
    };
    let dir = c.out_dir()?;
    match c.format {
        Format::Csv => output::write_extremogram_csv(&est, pa.as_deref(), ns.v_n, create(&dir, "extremogram.csv")?)?,
        Format::Json => write_json(
            &dir,
            "extremogram.json",
            &json!({"u_n": u, "v_n": ns.v_n, "estimate": est, "rho_pa": pa}),
        )?,
    }
    for l in &est.lags {
        println!("h={:<3} rho_hat={:.6}", l.h, l.rho_hat);
    }
    Ok(())
}

fn cmd_experiment(c: &Common) -> Result<()> {
    let spec = c.load()?;
    let result = run_experiment(&spec.experiment, c.threads)?;
    let dir = c.out_dir()?;
    output::write_results_csv(&result, create(&dir, "results.csv")?)?;
    output::write_bands_csv(&result, create(&dir, "bands.csv")?)?;
    write_json(&dir, "summary.json", &output::summary_json(&result, &spec, c.threads))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "h", "rho_pa", "mean", "band_lo", "band_hi");
    for &h in &result.lags {
        println!(
            "{h:>3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            result.pa[h], result.mean_rho_hat[h], result.band_lo[h], result.band_hi[h]
        );
    }
    Ok(())
}

fn cmd_diagnose(c: &Common) -> Result<()> {
    let spec = c.load()?;
    let e = &spec.experiment;
    let d = &spec.diagnostics;
    let ts = generate(&e.model, d.length, e.base_seed)?;
    let rate = match e.model {
        ModelSpec::BaseBAr1 { b, .. } => 1.0 / f64::from(b),
        ModelSpec::GaussianAr1 { phi } => phi.abs(),
        ModelSpec::CausalLinear { .. } => 0.5,
    };
    let pairs = [
        TestPair::new(LipschitzFn::clipped_identity(), LipschitzFn::clipped_identity()),
        TestPair::new(LipschitzFn::clipped_linear(0.25), LipschitzFn::clipped_linear(0.25)),
    ];
    let lags: Vec<usize> = (1..=d.max_lag).collect();
    let opts = DecayOptions { batches: d.batches, ..DecayOptions::geometric(rate) };
    let reports = covariance_decay(&[&ts.values], &pairs, &lags, &opts)?;
    let scheme = e.scheme()?.check(e.v_n, &SchemeThresholds::default());
    let dir = c.out_dir()?;
    match c.format {
        Format::Csv => output::write_decay_csv(&reports, create(&dir, "diagnostics.csv")?)?,
        Format::Json => write_json(&dir, "diagnostics.json", &json!({"decay": reports, "scheme": scheme}))?,
    }
    for r in &reports {
        println!(
            "{}: fitted rate {}, envelope rate {rate}, all within bound: {}",
            r.pair,
            r.fitted_rate.map_or("n/a".to_string(), |f| format!("{f:.4}")),
            r.all_pass()
        );
    }
    println!("block scheme: sqrt(n v_n)/r_n = {:.4}; problems: {:?}", scheme.sqrt_nv_over_r, scheme.problems);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_table_values() {
        let rows = theory_table(2, 3, 0.05).unwrap();
        let rho: Vec<f64> = rows.iter().map(|r| r.1).collect();
        assert_eq!(rho, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(rows[0].2, 1.0);
        assert!(theory_table(2, 30, 0.05).is_err());
    }

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from(["cluster-ext", "experiment", "--spec", "s.json", "--threads", "4", "--seed", "9"])
            .unwrap();
        assert_eq!(cli.common.threads, Some(4));
        assert_eq!(cli.common.seed, Some(9));
        assert!(matches!(cli.command, Command::Experiment));
        let cli = Cli::try_parse_from(["cluster-ext", "--format", "json", "theory", "--b", "3"]).unwrap();
        assert_eq!(cli.common.format, Format::Json);
        assert!(Cli::try_parse_from(["cluster-ext", "bogus"]).is_err());
    }
}
