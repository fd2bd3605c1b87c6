use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use prolate_enkf::harness::{
    make_phantom, run_experiment, run_on_data, synth_data, write_basis_summary, ExperimentConfig, RunMode, KEYS,
};
use prolate_enkf::pswf::{build_basis, SpectralCutoff};
use prolate_enkf::data::{add_noise, NoiseSpec};
use prolate_enkf::scattering::{FarFieldMatrix, GridSpec};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

/// Inverse medium scattering with disk prolate spheroidal wave functions.
///
/// Every config key can also be given as `--<key> <value>`, e.g. `--M 50`.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Permit synthesizing data on the inversion grid.
    #[arg(long, global = true)]
    allow_inverse_crime: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the PSWF basis and cache it.
    Basis,
    /// Synthesize clean and noisy far-field data for the phantom.
    Synth,
    /// Inverse Born reconstruction.
    InvertBorn {
        /// Far-field file to invert instead of synthesized data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Inverse Born followed by the ensemble Kalman filter.
    Enkf {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// The whole pipeline from phantom to images.
    Full,
}

/// Pulls `--<key> <value>` pairs for config keys out of the arguments.
fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--").filter(|k| *k != "seed" && KEYS.contains(k)) {
            Some(key) => {
                let v = it.next().with_context(|| format!("--{key} needs a value"))?;
                overrides.push((key.to_string(), v));
            }
            None => rest.push(a),
        }
    }
    Ok((rest, overrides))
}

fn load_far_field(path: &Path) -> Result<FarFieldMatrix> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(FarFieldMatrix::read_from(BufReader::new(f))?)
}

fn write_far_field(path: &Path, f: &FarFieldMatrix) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    f.write_to(&mut w)?;
    Ok(())
}

fn report(bundle: &prolate_enkf::harness::OutputBundle) {
    println!("modes: {}", bundle.basis_size);
    if let Some(e) = bundle.inverse_born_error {
        println!("inverse Born relative error: {e:.4e}");
    }
    if let Some(h) = &bundle.history {
        for (i, r) in h.records.iter().enumerate() {
            println!("iteration {:>2}: residual {:.4e}  gamma {:.3e}", i + 1, r.residual, r.gamma);
        }
        if let Some(s) = h.stop {
            println!("stopped: {s}");
        }
    }
    if let Some(e) = bundle.final_error {
        println!("final relative error: {e:.4e}");
    }
    println!("output in {}", bundle.dir.display());
}

fn main() -> Result<()> {
    let (args, overrides) = split_overrides(std::env::args().collect())?;
    let cli = Cli::parse_from(args);
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(&overrides)?;
    if let Some(s) = cli.seed {
        cfg.enkf.seed = s;
    }
    if cli.allow_inverse_crime {
        cfg.allow_inverse_crime = true;
    }
    cfg.validate()?;
    let out = cli.out.as_path();
    fs::create_dir_all(out)?;

    let synthesize = |cfg: &ExperimentConfig| -> Result<(FarFieldMatrix, FarFieldMatrix)> {
        let invert = GridSpec::unit(cfg.grid_invert)?;
        let synth = GridSpec::unit(cfg.grid_synth)?;
        let clean = synth_data(&cfg.phantom, cfg.k, cfg.directions, &synth, &invert, cfg.allow_inverse_crime)?;
        let noisy = add_noise(&clean, NoiseSpec::new(cfg.enkf.delta, cfg.enkf.seed)?)?;
        Ok((clean, noisy))
    };

    match &cli.command {
        Command::Basis => {
            let basis = build_basis(2.0 * cfg.k, SpectralCutoff::new(cfg.eta_fraction)?)?;
            basis.save(out.join("basis.pswf"))?;
            write_basis_summary(&basis, fs::File::create(out.join("basis_summary.txt"))?)?;
            println!("{} modes above eta = {:.6e}", basis.len(), basis.eta());
        }
        Command::Synth => {
            let (clean, noisy) = synthesize(&cfg)?;
            write_far_field(&out.join("farfield.txt"), &clean)?;
            write_far_field(&out.join("farfield_noisy.txt"), &noisy)?;
            fs::write(out.join("manifest.txt"), cfg.to_text())?;
            println!("far field written to {}", out.display());
        }
        Command::InvertBorn { data } | Command::Enkf { data } => {
            let mode = if matches!(cli.command, Command::Enkf { .. }) { RunMode::Enkf } else { RunMode::InverseBorn };
            let bundle = match data {
                Some(path) => {
                    let f = load_far_field(path)?;
                    if (f.k - cfg.k).abs() > 1e-12 * cfg.k || f.len() != cfg.directions {
                        bail!("data file has k = {}, N = {}; config says k = {}, N = {}", f.k, f.len(), cfg.k, cfg.directions);
                    }
                    run_on_data(&cfg, &f, None, mode, out)?
                }
                None => {
                    let (_, noisy) = synthesize(&cfg)?;
                    let truth = make_phantom(&cfg.phantom, &GridSpec::unit(cfg.grid_synth)?)?;
                    run_on_data(&cfg, &noisy, Some(&truth), mode, out)?
                }
            };
            report(&bundle);
        }
        Command::Full => report(&run_experiment(&cfg, out)?),
    }
    Ok(())
}
