use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use octgrav::bench::{
    accuracy_sweep, accuracy_table, barrier_table, calibrate_peak_flops, counter_sweep, counter_table, dacc_grid,
    scaling_sweep, scaling_table,
};
use octgrav::dynamics::{diagnostics, CostModel, RebuildTuner, Simulation, TunerClock};
use octgrav::galactics::{build_m31, sample_exponential_disk, sample_hernquist, sample_nfw, sample_plummer, MassModel};
use octgrav::galactics::{ComponentSpec, DEFAULT_Q_MIN};
use octgrav::io::{
    fmt, parse_counters_csv, write_atomic, write_snapshot, ClockKind, RunConfig, Table, DIAG_HEADER,
    PHASE_HEADER, SPEEDUP_HEADER,
};
use octgrav::perflab::{bench_barrier, predict_speedup, HardwareRatios};
use octgrav::{Error, GravParams, ParticleSystem, Result};

#[derive(Parser)]
#[command(name = "octgrav", version, about = "Octree gravity: initial conditions, runs and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an initial-condition snapshot.
    Ic(IcArgs),
    /// Advance a snapshot and record phase timings and diagnostics.
    Run(RunArgs),
    /// Accuracy, scaling and counter sweeps.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Predicted speed-up for each row of a counters CSV.
    PredictSpeedup(SpeedupArgs),
    /// Lock-free versus standard barrier cost.
    BenchBarrier(BarrierArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Plummer,
    Hernquist,
    Nfw,
    Disk,
    M31,
}

#[derive(Args)]
struct IcArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Softening stored in the snapshot header.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    eps: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    steps: Option<u64>,
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dacc: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Sweep the MAC tolerance on a Plummer sphere.
    Accuracy {
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated tolerances; default 2^-1 .. 2^-20.
        #[arg(long, value_delimiter = ',')]
        dacc: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        steps: usize,
        #[arg(long, default_value_t = 1.5)]
        peak_ratio: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-phase step times against particle count.
    Scaling {
        #[arg(long, value_delimiter = ',', default_value = "1024,4096,16384,65536")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1.0 / 512.0)]
        dacc: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Instruction counters, predicted speed-up and Flop/s per tolerance.
    Counters {
        #[arg(long, value_enum, default_value = "m31")]
        model: Model,
        #[arg(long, default_value_t = 1 << 17)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        dacc: Vec<f64>,
        #[arg(long, default_value_t = 1.5)]
        peak_ratio: f64,
        /// Fraction of the calibrated peak below which a point is flagged.
        #[arg(long, default_value_t = 0.5)]
        regime_fraction: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpeedupArgs {
    #[arg(long)]
    counters: PathBuf,
    #[arg(long, default_value_t = 1.5)]
    peak_ratio: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BarrierArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    workers: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    phases: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("octgrav: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ic(a) => cmd_ic(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(b) => cmd_bench(b),
        Command::PredictSpeedup(a) => cmd_predict_speedup(a),
        Command::BenchBarrier(a) => cmd_bench_barrier(a),
    }
}

fn generate(model: Model, n: usize, seed: u64) -> Result<ParticleSystem> {
    if n == 0 {
        return Err(Error::InvalidInput("--n must be at least 1".into()));
    }
    match model {
        Model::Plummer => sample_plummer(n, 1.0, 1.0, seed),
        Model::Hernquist => sample_hernquist(n, 1.0, 1.0, seed),
        Model::Nfw => sample_nfw(n, 1.0, 1.0, 20.0, seed),
        Model::Disk => {
            // a disk embedded in a heavier Hernquist halo
            let disk = ComponentSpec::exponential_disk(1.0, 1.0, 0.1, DEFAULT_Q_MIN);
            let halo = ComponentSpec::hernquist(4.0, 3.0);
            let model = MassModel::new(vec![disk, halo]);
            sample_exponential_disk(n, 1.0, 1.0, 0.1, seed, &model)
        }
        Model::M31 => build_m31(n, seed),
    }
}

fn emit(table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => table.write(p),
        None => {
            print!("{}", String::from_utf8_lossy(&table.to_bytes()?));
            Ok(())
        }
    }
}

fn cmd_ic(a: IcArgs) -> Result<()> {
    let sys = generate(a.model, a.n, a.seed)?;
    write_snapshot(&a.out, &sys, 1.0, a.eps)?;
    eprintln!("wrote {} particles to {}", sys.len(), a.out.display());
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.steps {
        cfg.steps = s;
    }
    if let Some(d) = a.dacc {
        cfg.dacc = d;
    }
    cfg.validate()?;
    let bytes = std::fs::read(&a.input)?;
    let snap = octgrav::io::Snapshot::decode(&bytes)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let final_path = a.out_dir.join("final.octf");
    let mut phases = Table::new(&PHASE_HEADER);
    let mut diag = Table::new(&DIAG_HEADER);

    if cfg.steps == 0 {
        write_atomic(&final_path, &bytes)?;
    } else {
        let params = GravParams::new(snap.g, cfg.eps.unwrap_or(snap.eps), cfg.dacc)?;
        let tuner = RebuildTuner::new(cfg.rebuild_min, cfg.rebuild_max, 8)?;
        let mut sim = Simulation::new(snap.to_system()?, params, cfg.step_scheme(), cfg.tree_config(), tuner)?;
        sim.clock = match cfg.tuner_clock {
            ClockKind::Modeled => TunerClock::Modeled(CostModel::default()),
            ClockKind::Wall => TunerClock::Wall,
        };
        let mut diag_row = |step: u64, sim: &Simulation| -> Result<()> {
            let d = diagnostics(&sim.synchronized(), &params)?;
            diag.push(vec![
                step.to_string(),
                fmt(d.total),
                fmt(d.kinetic),
                fmt(d.potential),
                fmt(d.momentum.x),
                fmt(d.momentum.y),
                fmt(d.momentum.z),
            ])
        };
        diag_row(0, &sim)?;
        for step in 1..=cfg.steps {
            let r = sim.step()?;
            let mut row = vec![step.to_string()];
            row.extend(r.timings.as_array().iter().map(|&x| fmt(x)));
            row.push(r.rebuild_interval.to_string());
            phases.push(row)?;
            if step % cfg.diag_interval == 0 || step == cfg.steps {
                diag_row(step, &sim)?;
            }
        }
        write_snapshot(&final_path, &sim.synchronized(), params.g, params.eps)?;
    }
    phases.write(&a.out_dir.join("phases.csv"))?;
    diag.write(&a.out_dir.join("diagnostics.csv"))?;
    write_atomic(&a.out_dir.join("run.cfg"), cfg.to_text().as_bytes())?;
    Ok(())
}

fn cmd_bench(b: BenchCommand) -> Result<()> {
    match b {
        BenchCommand::Accuracy { n, seed, dacc, steps, peak_ratio, out } => {
            let sys = sample_plummer(n, 1.0, 1.0, seed)?;
            let grid = if dacc.is_empty() { dacc_grid(1, 20) } else { dacc };
            let hw = HardwareRatios::new(peak_ratio, HardwareRatios::default().bandwidth_ratio)?;
            let pts = accuracy_sweep(
                &sys,
                &GravParams::default(),
                Default::default(),
                Default::default(),
                &grid,
                steps,
                &hw,
            )?;
            emit(&accuracy_table(&pts)?, out.as_deref())
        }
        BenchCommand::Scaling { n, dacc, seed, steps, out } => {
            emit(&scaling_table(&scaling_sweep(&n, dacc, seed, steps)?)?, out.as_deref())
        }
        BenchCommand::Counters { model, n, seed, dacc, peak_ratio, regime_fraction, out } => {
            let sys = generate(model, n, seed)?;
            let grid = if dacc.is_empty() { dacc_grid(1, 12) } else { dacc };
            let hw = HardwareRatios::new(peak_ratio, HardwareRatios::default().bandwidth_ratio)?;
            let peak = calibrate_peak_flops()?;
            let pts = counter_sweep(&sys, &GravParams::default(), Default::default(), &grid, &hw, peak, regime_fraction)?;
            emit(&counter_table(&pts)?, out.as_deref())
        }
    }
}

fn cmd_predict_speedup(a: SpeedupArgs) -> Result<()> {
    let rows = parse_counters_csv(&std::fs::read_to_string(&a.counters)?)?;
    let hw = HardwareRatios::new(a.peak_ratio, HardwareRatios::default().bandwidth_ratio)?;
    let mut t = Table::new(&SPEEDUP_HEADER);
    for (i, c) in rows.iter().enumerate() {
        let s = predict_speedup(c, &hw).map_err(|_| Error::Parse {
            line: i as u64 + 2,
            msg: "integer and floating-point counts are both zero".into(),
        })?;
        t.push(vec![(i + 1).to_string(), c.integer.to_string(), c.fp_total().to_string(), fmt(s)])?;
    }
    emit(&t, a.out.as_deref())
}

fn cmd_bench_barrier(a: BarrierArgs) -> Result<()> {
    let rows = a.workers.iter().map(|&w| bench_barrier(w, a.phases)).collect::<Result<Vec<_>>>()?;
    emit(&barrier_table(&rows)?, a.out.as_deref())
}
