//! Command-line front end: analytic estimates, Kraus validation, trajectories,
//! ensembles and experiment presets, all written as CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use remote_parity::analytics::optimize_alpha;
use remote_parity::feedback::{FeedbackConfig, FilterMode, InitialState, Picture};
use remote_parity::harness::{
    analytic_table, ensemble_table, event_table, fmt_f64, run_ensemble_with_workers, run_preset,
    run_trajectory, series_table, EnsembleConfig, Preset, PresetOptions, Table, TrajectoryOptions,
    DEFAULT_TRAJECTORIES,
};
use remote_parity::kraus::build_kraus;
use remote_parity::oracle::derive_kraus;
use remote_parity::protocol::{
    phaseflip_counterexample, poisson_pmf, root_channel_demo, xi_from_bitflips, Parity,
    ProbeChannelSpec,
};
use remote_parity::qmath::{CatParams, DecayParams};
use remote_parity::{rng, Error};

const KRAUS_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(
    name = "remote-parity",
    version,
    about = "Loss-tolerant remote parity measurement simulator"
)]
struct Cli {
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Measurement and dephasing rates with the derived estimates (one CSV row).
    Rates,
    /// Measurement count and fidelity estimate (one CSV row; fails outside 1/2 < eta < 1).
    Fmeas,
    /// Probe size maximizing the steady-state feedback fidelity for --eta and --t1-ratio.
    OptimizeAlpha,
    /// Compares the closed-form Kraus operators with the coherent-state derivation.
    ValidateKraus,
    /// One trajectory; per-step observables, plus an optional event log via --events.
    Trajectory,
    /// Ensemble means and standard errors.
    Ensemble,
    /// Experiment preset: fig2a, fig2b, fig3, thyvssim or fbfid.
    Preset { name: String },
    /// Abstract-model reports: xi values, root-of-identity channels, phase-flip counterexample.
    AbstractDemo,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum FilterArg {
    Full,
    Bell,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum PictureArg {
    Schrodinger,
    Heisenberg,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum InitialArg {
    PlusXPlusX,
    BellEPlus,
}

/// Shared flags. A `--config` JSON file uses the same names (snake_case); flags win.
#[derive(Args, Deserialize, Default, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct Settings {
    #[arg(long, global = true)]
    alpha2: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Qubit lifetime in measurement iterations; enables relaxation.
    #[arg(long, global = true)]
    t1_ratio: Option<f64>,
    /// Enable the parity feedback loop (`--feedback false` to force it off).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    feedback: Option<bool>,
    #[arg(long, global = true, value_enum)]
    filter: Option<FilterArg>,
    #[arg(long, global = true, value_enum)]
    picture: Option<PictureArg>,
    #[arg(long, global = true, value_enum)]
    initial: Option<InitialArg>,
    #[arg(long, global = true)]
    record_every: Option<usize>,
    /// Worker threads for ensembles (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Per-step event log for `trajectory`.
    #[arg(long, global = true)]
    events: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

impl Settings {
    /// Field-wise override: values present in `top` win.
    fn over(self, base: Settings) -> Settings {
        Settings {
            alpha2: self.alpha2.or(base.alpha2),
            eta: self.eta.or(base.eta),
            steps: self.steps.or(base.steps),
            trajectories: self.trajectories.or(base.trajectories),
            seed: self.seed.or(base.seed),
            t1_ratio: self.t1_ratio.or(base.t1_ratio),
            feedback: self.feedback.or(base.feedback),
            filter: self.filter.or(base.filter),
            picture: self.picture.or(base.picture),
            initial: self.initial.or(base.initial),
            record_every: self.record_every.or(base.record_every),
            workers: self.workers.or(base.workers),
            output: self.output.or(base.output),
            events: self.events.or(base.events),
            config: self.config,
        }
    }

    fn cat(&self) -> Result<CatParams, Error> {
        CatParams::new(self.alpha2.unwrap_or(2.0), self.eta.unwrap_or(0.75))
    }

    fn decay(&self) -> Result<Option<DecayParams>, Error> {
        self.t1_ratio.map(DecayParams::new).transpose()
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    fn feedback_config(&self) -> Result<FeedbackConfig, Error> {
        let mut cfg = FeedbackConfig::new(self.cat()?, self.steps.unwrap_or(600), self.seed());
        cfg.decay = self.decay()?;
        cfg.filter_mode = match self.filter.unwrap_or(FilterArg::Full) {
            FilterArg::Full => FilterMode::Full,
            FilterArg::Bell => FilterMode::Bell,
        };
        cfg.picture = match self.picture.unwrap_or(PictureArg::Schrodinger) {
            PictureArg::Schrodinger => Picture::Schrodinger,
            PictureArg::Heisenberg => Picture::Heisenberg,
        };
        cfg.initial_state = match self.initial.unwrap_or(InitialArg::PlusXPlusX) {
            InitialArg::PlusXPlusX => InitialState::PlusXPlusX,
            InitialArg::BellEPlus => InitialState::BellEPlus,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Failure classes mapped to exit codes 1 (usage/config) and 2 (numeric).
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Numeric(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Invariant(_) | Error::ImpossibleOutcome { .. } | Error::PipelineOrder(_) => {
                Failure::Numeric(e.into())
            }
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn load_config(path: &Path) -> anyhow::Result<Settings> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(table: &Table, path: Option<&Path>) -> Result<(), Failure> {
    let mut w = open_output(path)?;
    table.write_csv(&mut w)?;
    w.flush().context("flushing output")?;
    Ok(())
}

fn validate_kraus(s: &Settings) -> Result<(), Failure> {
    let points: Vec<(f64, f64)> = match (s.alpha2, s.eta) {
        (None, None) => [0.5, 0.6, 0.75, 0.9, 1.0]
            .iter()
            .flat_map(|&e| [0.25, 1.0, 2.0, 4.0, 8.0].map(|a| (a, e)))
            .collect(),
        _ => vec![(s.alpha2.unwrap_or(2.0), s.eta.unwrap_or(0.75))],
    };
    let mut t = Table::new(&["alpha2", "eta", "max_deviation", "completeness_error"]);
    let mut worst: f64 = 0.0;
    let mut worst_completeness: f64 = 0.0;
    for (a2, eta) in points {
        let cat = CatParams::new(a2, eta)?;
        let closed = build_kraus(cat)?;
        let dev = closed.max_deviation(&derive_kraus(cat)?);
        let comp = closed.completeness_error();
        worst = worst.max(dev);
        worst_completeness = worst_completeness.max(comp);
        t.push_f64(&[a2, eta, dev, comp]);
    }
    emit(&t, s.output.as_deref())?;
    if !(worst <= KRAUS_TOL && worst_completeness <= COMPLETENESS_TOL) {
        return Err(Failure::Numeric(anyhow::anyhow!(
            "Kraus validation failed: deviation {worst:e}, completeness {worst_completeness:e}"
        )));
    }
    Ok(())
}

fn abstract_demo(s: &Settings) -> Result<(), Failure> {
    let mut w = open_output(s.output.as_deref())?;
    let io = |e: io::Error| Failure::Usage(e.into());
    writeln!(w, "# xi from Poisson-distributed bit flips").map_err(io)?;
    writeln!(w, "lambda,xi,expected").map_err(io)?;
    for lambda in [0.1, 0.5, 2.0] {
        let rep = xi_from_bitflips(&poisson_pmf(lambda)?)?;
        let expected = (-lambda as f64).exp() * lambda.cosh();
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(lambda),
            fmt_f64(rep.xi),
            fmt_f64(expected)
        )
        .map_err(io)?;
    }
    writeln!(w, "\n# root-of-identity channels").map_err(io)?;
    writeln!(w, "spec,n_root,parity,n_applied,target_preserved,deviation").map_err(io)?;
    for (name, spec) in [
        ("bit_flip", ProbeChannelSpec::bit_flip(0.3)?),
        ("quarter_phase", ProbeChannelSpec::quarter_phase()?),
    ] {
        for (pname, parity) in [("even", Parity::Even), ("odd", Parity::Odd)] {
            for n in 0..=3 * spec.n_root {
                let rep = root_channel_demo(&spec, parity, n)?;
                writeln!(
                    w,
                    "{name},{},{pname},{n},{},{}",
                    spec.n_root,
                    rep.target_preserved,
                    fmt_f64(rep.deviation)
                )
                .map_err(io)?;
            }
        }
    }
    let pf = phaseflip_counterexample()?;
    writeln!(
        w,
        "\n# phase-flip counterexample: CNOT-probe circuit on (|00>+|11>)/sqrt2"
    )
    .map_err(io)?;
    let fmt_ket = |k: &remote_parity::qmath::Ket4| {
        k.iter()
            .map(|z| format!("{}{:+}i", fmt_f64(z.re), z.im))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(w, "without flip: {}", fmt_ket(&pf.without_flip)).map_err(io)?;
    writeln!(w, "with flip:    {}", fmt_ket(&pf.with_flip)).map_err(io)?;
    writeln!(
        w,
        "concurrence of the unread mixture: {}",
        fmt_f64(pf.mixture_concurrence)
    )
    .map_err(io)?;
    w.flush().map_err(io)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let s = match &cli.settings.config {
        Some(path) => cli.settings.clone().over(load_config(path)?),
        None => cli.settings.clone(),
    };
    let out = s.output.as_deref();
    match cli.command {
        Command::Rates => emit(&analytic_table(s.cat()?, s.decay()?)?, out),
        Command::Fmeas => {
            let cat = s.cat()?;
            let est = remote_parity::analytics::solve_nmeas(cat)?;
            eprintln!("n_meas rounds up to {} measurements", est.n_meas.ceil());
            emit(&analytic_table(cat, s.decay()?)?, out)
        }
        Command::OptimizeAlpha => {
            let eta = s.eta.unwrap_or(0.85);
            let decay = DecayParams::new(s.t1_ratio.unwrap_or(3000.0))?;
            let opt = optimize_alpha(eta, decay)?;
            if opt.at_boundary {
                eprintln!("warning: optimum sits on the edge of the alpha^2 search window");
            }
            emit(
                &analytic_table(CatParams::new(opt.alpha2_opt, eta)?, Some(decay))?,
                out,
            )
        }
        Command::ValidateKraus => validate_kraus(&s),
        Command::Trajectory => {
            let cfg = s.feedback_config()?;
            let ks = build_kraus(cfg.cat)?;
            let opts = TrajectoryOptions {
                feedback: s.feedback.unwrap_or(false),
                record_every: s.record_every.unwrap_or(1),
                window: None,
            };
            let mut r = rng::stream(cfg.seed, 0);
            let res = run_trajectory(&cfg, &ks, &opts, s.events.is_some(), &mut r)?;
            if let Some(path) = s.events.as_deref() {
                emit(&event_table(&res.events), Some(path))?;
            }
            emit(&series_table(opts.record_every, &res.series), out)
        }
        Command::Ensemble => {
            let mut cfg = EnsembleConfig::new(
                s.feedback_config()?,
                s.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
                s.feedback.unwrap_or(false),
            );
            cfg.record_every = s.record_every.unwrap_or(1);
            let res = run_ensemble_with_workers(&cfg, s.workers())?;
            if let Some(path) = out {
                let mut meta = path.as_os_str().to_owned();
                meta.push(".meta.json");
                let json =
                    serde_json::to_string_pretty(&res.meta).context("serializing metadata")?;
                std::fs::write(&meta, json + "\n").context("writing metadata")?;
            }
            emit(&ensemble_table(&res), out)
        }
        Command::Preset { name } => {
            let preset: Preset = name.parse()?;
            let opts = PresetOptions {
                trajectories: s.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
                seed: s.seed(),
                steps: s.steps,
                workers: Some(s.workers()),
            };
            emit(&run_preset(preset, &opts)?, out)
        }
        Command::AbstractDemo => abstract_demo(&s),
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
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("numeric failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
