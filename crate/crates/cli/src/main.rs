use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pilotphase::airsim::sample_realization;
use pilotphase::complexity::{complexity_breakdown, write_table_csv};
use pilotphase::config::make_frame_plan;
use pilotphase::crlb::{crlb_high_snr, crlb_low_snr, fisher_information, CrlbInput, CrlbProblem};
use pilotphase::harness::{emit, run_sweep, Metric, MetricsRecord, OutputFormat, SweepSpec, SweepValue, SweepVariable};
use pilotphase::rng::TrialStreams;
use pilotphase::{Error, Result, SystemConfig};

#[derive(Parser)]
#[command(name = "pilotphase", about = "Phase-noise MIMO channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over SNR.
    Simulate {
        kind: Kind,
        #[arg(long)]
        config: PathBuf,
        /// `start:stop:step` in dB, inclusive.
        #[arg(long, default_value = "0:40:5")]
        snr: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bounds for a problem JSON, or for a channel drawn from a system config.
    Crlb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operation counts and the comparison table.
    Complexity {
        #[arg(long, default_value_t = 2)]
        nr: usize,
        #[arg(long, default_value_t = 2)]
        nt: usize,
        #[arg(long, default_value_t = 50)]
        lw: usize,
        #[arg(long, default_value_t = 1.0)]
        cm: f64,
        #[arg(long, default_value_t = 100_000)]
        lf: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Mse,
    Ber,
}

fn seed_override(cfg: &mut SystemConfig) -> Result<()> {
    if let Ok(s) = std::env::var("SEED") {
        cfg.master_seed = s.trim().parse().map_err(|_| Error::InvalidConfig(format!("SEED={s:?} is not a u64")))?;
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad range {s:?}, expected start:stop:step"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
    match parts.as_slice() {
        [x] => Ok(vec![*x]),
        [a, b, step] if *step > 0.0 && b >= a => {
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn simulate(kind: Kind, config: &Path, snr: &str, trials: Option<usize>, out: &Path) -> Result<()> {
    let mut base = SystemConfig::from_json_file(config)?;
    seed_override(&mut base)?;
    if let Some(t) = trials {
        base.trials = t;
    }
    let metrics = match kind {
        Kind::Mse => Metric::MSE_SET.to_vec(),
        Kind::Ber => Metric::BER_SET.to_vec(),
    };
    let values = parse_range(snr)?.into_iter().map(SweepValue::Num).collect();
    let spec = SweepSpec::new(base, SweepVariable::SnrDb, values, metrics);
    let records: Vec<MetricsRecord> = run_sweep(&spec, |recs| {
        if let Some(r) = recs.first() {
            eprintln!("snr {} dB done ({:.1} s)", r.sweep_value, r.seconds);
        }
    })?;
    emit(&records, OutputFormat::from_path(out), out)
}

fn load_problem(path: &Path) -> Result<CrlbProblem> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(input) = serde_json::from_str::<CrlbInput>(&text) {
        return Ok(input.into());
    }
    let mut cfg = SystemConfig::from_json_str(&text)?;
    seed_override(&mut cfg)?;
    cfg.validate()?;
    let plan = make_frame_plan(&cfg)?;
    let mut streams = TrialStreams::new(cfg.master_seed, 0, 0);
    let truth = sample_realization(&cfg, &mut streams.channel, &mut streams.phase);
    let col = plan.column(plan.ref_index[0] as i64);
    let psi = truth.psi.column(col).iter().copied().collect();
    Ok(CrlbProblem::new(truth.h, psi, cfg.sigma_n_sq, cfg.sigma_dphi_sq, cfg.sigma_dpsi_sq))
}

fn crlb(config: &Path, out: Option<&Path>) -> Result<()> {
    let p = load_problem(config)?;
    let full = fisher_information(&p)?.crlb;
    let low = crlb_low_snr(&p)?;
    let high = crlb_high_snr(&p).ok();
    let mut w = writer(out)?;
    writeln!(w, "parameter,crlb,crlb_low_snr,crlb_high_snr")?;
    for q in 0..full.len() {
        let h = high.as_ref().map(|v| format!("{:e}", v[q])).unwrap_or_default();
        writeln!(w, "{q},{:e},{:e},{h}", full[q], low[q])?;
    }
    w.flush()?;
    Ok(())
}

fn complexity(nr: usize, nt: usize, lw: usize, cm: f64, lf: usize, out: Option<&Path>) -> Result<()> {
    let c = complexity_breakdown(nr, nt, 10 * nt, 9 * nt, lf, lw, cm)?;
    let mut w = writer(out)?;
    writeln!(w, "step,mul,add")?;
    for (name, m, a) in [
        ("amplitude", c.amp_mul, c.amp_add),
        ("wlls", c.wlls_mul, c.wlls_add),
        ("wiener", c.wiener_mul, c.wiener_add),
        ("channel", c.hhat_mul, c.hhat_add),
    ] {
        writeln!(w, "{name},{m:.6},{a:.6}")?;
    }
    writeln!(w, "total,{:.6},", c.total)?;
    writeln!(w)?;
    write_table_csv(&mut w, lf, cm, &[5, 50])?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { kind, config, snr, trials, out } => simulate(*kind, config, snr, *trials, out),
        Command::Crlb { config, out } => crlb(config, out.as_deref()),
        Command::Complexity { nr, nt, lw, cm, lf, out } => complexity(*nr, *nt, *lw, *cm, *lf, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
