//! `hbc`: single-point runs, sweeps and link budgets for body-coupled
//! channel scenarios.
//!
//! Exit codes: 0 on success, 2 for invalid input, 1 for runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hbc_core::emit::{self, fmt_sig9, OutputFormat};
use hbc_core::link::{LinkBudget, LinkReport, Modulation};
use hbc_core::presets::{list_presets, load_preset};
use hbc_core::scenario_file::{emit_scenario, load_scenario};
use hbc_core::sweep::{
    closed_form_variant, evaluate, run_link, run_sweep_with, DistanceTarget, Execution,
    ModelChoice, Spacing, SweepAxis, SweepSpec,
};
use hbc_core::{CapName, HbcError, Scenario};

#[derive(Parser)]
#[command(name = "hbc", version, about = "Body-coupled channel models near metallic objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the transfer at a single frequency.
    Run {
        #[command(flatten)]
        source: ScenarioSource,
        /// Frequency, Hz.
        #[arg(long, default_value_t = 5e6)]
        freq: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep one axis and emit a table or plot.
    Sweep(SweepArgs),
    /// Transfer, SNR, capacity and BER at one frequency.
    Link {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long, default_value_t = 5e6)]
        freq: f64,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Also report the metrics for this SNR taken as given, dB.
        #[arg(long, allow_hyphen_values = true)]
        snr_db: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Inspect the preset library.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// Names of available presets.
    List,
    /// Per-position capacitances of a preset, or one position as a
    /// scenario file.
    Show {
        name: String,
        #[arg(long)]
        position: Option<String>,
    },
}

#[derive(Args)]
struct ScenarioSource {
    /// Scenario file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    #[arg(long, requires = "position")]
    preset: Option<String>,
    #[arg(long, requires = "preset")]
    position: Option<String>,
}

impl ScenarioSource {
    fn load(&self) -> hbc_core::Result<Scenario> {
        match (&self.scenario, &self.preset, &self.position) {
            (Some(path), _, _) => load_scenario(path),
            (None, Some(name), Some(pos)) => load_preset(name)?.scenario(pos),
            _ => unreachable!("clap enforces a scenario source"),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::ClosedForm)]
    model: ModelArg,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct BudgetArgs {
    /// Transmit amplitude, V.
    #[arg(long, default_value_t = 1.0)]
    v_tx: f64,
    /// Noise PSD, V²/Hz.
    #[arg(long, default_value_t = 25e-18)]
    n0: f64,
    /// Hz.
    #[arg(long, default_value_t = 5e6)]
    bandwidth: f64,
    /// bit/s; defaults to the bandwidth.
    #[arg(long)]
    bit_rate: Option<f64>,
    /// ook, qpsk or <M>-qam.
    #[arg(long, default_value = "ook")]
    modulation: String,
}

impl BudgetArgs {
    fn budget(&self) -> hbc_core::Result<LinkBudget> {
        let b = LinkBudget {
            v_tx: self.v_tx,
            n0: self.n0,
            bandwidth: self.bandwidth,
            bit_rate: self.bit_rate.unwrap_or(self.bandwidth),
            modulation: Modulation::parse(&self.modulation)?,
        };
        b.validate()?;
        Ok(b)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: ScenarioSource,
    #[arg(long, value_enum, default_value_t = AxisArg::Frequency)]
    axis: AxisArg,
    /// Start of the axis, in SI units (Hz, m, m² or F).
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, value_enum, default_value_t = SpacingArg::Log)]
    spacing: SpacingArg,
    /// Evaluation frequency for non-frequency axes, Hz.
    #[arg(long, default_value_t = 5e6)]
    at: f64,
    /// Capacitance swept by `--axis capacitance`, e.g. c_bm.
    #[arg(long)]
    cap: Option<String>,
    /// Coupling moved by `--axis distance`.
    #[arg(long, value_enum, default_value_t = TargetArg::Body)]
    target: TargetArg,
    /// Plate area of the parallel-plate estimate for distance sweeps, m².
    #[arg(long, default_value_t = 0.5)]
    plate_area: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_r: f64,
    /// Add SNR, capacity and BER columns.
    #[arg(long)]
    link: bool,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Evaluate points in order on one thread.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    ClosedForm,
    Oracle,
    Both,
}

impl From<ModelArg> for ModelChoice {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::ClosedForm => ModelChoice::ClosedForm,
            ModelArg::Oracle => ModelChoice::Oracle,
            ModelArg::Both => ModelChoice::Both,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FormatArg {
    Csv,
    StructuredText,
    SvgPlot,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::StructuredText => OutputFormat::StructuredText,
            FormatArg::SvgPlot => OutputFormat::SvgPlot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Frequency,
    Distance,
    ContactArea,
    Capacitance,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Log,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Body,
    Devices,
    Tx,
    Rx,
}

impl From<TargetArg> for DistanceTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Body => DistanceTarget::Body,
            TargetArg::Devices => DistanceTarget::Devices,
            TargetArg::Tx => DistanceTarget::Tx,
            TargetArg::Rx => DistanceTarget::Rx,
        }
    }
}

/// Validation failures exit with 2, everything else with 1.
enum Failure {
    Core(HbcError),
    Usage(String),
}

impl From<HbcError> for Failure {
    fn from(e: HbcError) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            source,
            freq,
            output,
        } => {
            let scenario = source.load()?;
            scenario.validate()?;
            let model = ModelChoice::from(output.model);
            let p = evaluate(&scenario, freq, model)?;
            let t = p.transfer;
            let text = match output.format {
                FormatArg::Csv => {
                    let mut s = String::from("frequency_hz,re,im,mag_db,phase_deg");
                    let mut row = [freq, t.value.re, t.value.im, t.mag_db(), t.phase_deg()]
                        .map(fmt_sig9)
                        .join(",");
                    if let Some(gap) = p.gap_rel {
                        s.push_str(",gap_rel");
                        row = format!("{row},{}", fmt_sig9(gap));
                    }
                    format!("{s}\n{row}\n")
                }
                FormatArg::StructuredText => json(&serde_json::json!({
                    "model": model,
                    "model_variant": variant(&scenario, model),
                    "frequency_hz": freq,
                    "re": t.value.re,
                    "im": t.value.im,
                    "mag_db": t.mag_db(),
                    "phase_deg": t.phase_deg(),
                    "gap_rel": p.gap_rel,
                })),
                FormatArg::SvgPlot => return Err(no_plot("run")),
            };
            write_out(output.out.as_deref(), &text)
        }
        Command::Sweep(args) => sweep(args),
        Command::Link {
            source,
            freq,
            budget,
            snr_db,
            output,
        } => {
            let scenario = source.load()?;
            let budget = budget.budget()?;
            let model = ModelChoice::from(output.model);
            let computed = run_link(&scenario, &budget, freq, model)?;
            let stated = snr_db
                .map(|db| LinkReport::from_snr_db(db, &budget))
                .transpose()?;
            let reports: Vec<LinkReport> = std::iter::once(computed.report).chain(stated).collect();
            let text = match output.format {
                FormatArg::Csv => {
                    let mut s = String::from("snr_source,transfer_mag,snr_db,capacity_bps,gamma,ber\n");
                    for r in &reports {
                        let source = match r.snr_source {
                            hbc_core::SnrSource::Computed => "computed",
                            hbc_core::SnrSource::Stated => "stated",
                        };
                        let cols = [computed.transfer.magnitude(), r.snr_db, r.capacity, r.gamma, r.ber]
                            .map(fmt_sig9)
                            .join(",");
                        s.push_str(&format!("{source},{cols}\n"));
                    }
                    s
                }
                FormatArg::StructuredText => json(&serde_json::json!({
                    "model": model,
                    "model_variant": variant(&scenario, model),
                    "frequency_hz": freq,
                    "budget": budget,
                    "transfer_mag": computed.transfer.magnitude(),
                    "gap_rel": computed.gap_rel,
                    "reports": reports,
                })),
                FormatArg::SvgPlot => return Err(no_plot("link")),
            };
            write_out(output.out.as_deref(), &text)
        }
        Command::Presets { action } => presets(action),
    }
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let scenario = args.source.load()?;
    let axis = match args.axis {
        AxisArg::Frequency => SweepAxis::Frequency,
        AxisArg::ContactArea => SweepAxis::ContactArea,
        AxisArg::Distance => SweepAxis::Distance {
            target: args.target.into(),
            area: args.plate_area,
            eps_r: args.eps_r,
        },
        AxisArg::Capacitance => {
            let key = args
                .cap
                .as_deref()
                .ok_or_else(|| Failure::Usage("--axis capacitance needs --cap <name>".into()))?;
            let name = CapName::from_key(key).ok_or_else(|| {
                let known: Vec<&str> = CapName::ALL.iter().map(|c| c.key()).collect();
                Failure::Usage(format!("unknown capacitance `{key}`; expected one of {}", known.join(", ")))
            })?;
            SweepAxis::Capacitance { name }
        }
    };
    let spacing = match args.spacing {
        SpacingArg::Log => Spacing::Log,
        SpacingArg::Linear => Spacing::Linear,
    };
    let spec = SweepSpec::new(axis, args.from, args.to, args.points, spacing).at(args.at);
    let budget = if args.link { Some(args.budget.budget()?) } else { None };
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = run_sweep_with(&scenario, &spec, args.output.model.into(), budget.as_ref(), exec)?;
    match &args.output.out {
        Some(path) => Ok(emit::emit(&result, args.output.format.into(), path)?),
        None => write_out(None, &emit::render(&result, args.output.format.into())),
    }
}

fn presets(action: PresetAction) -> Result<(), Failure> {
    match action {
        PresetAction::List => {
            for name in list_presets()? {
                println!("{name}");
            }
            Ok(())
        }
        PresetAction::Show { name, position } => {
            let table = load_preset(&name)?;
            if let Some(pos) = position {
                print!("{}", emit_scenario(&table.scenario(&pos)?));
                return Ok(());
            }
            println!("# {} ({}): {}", table.name, table.kind.as_str(), table.note);
            let header: Vec<String> = CapName::ALL.iter().map(|c| format!("{}_pf", c.key())).collect();
            println!("position,{}", header.join(","));
            for pos in table.positions.keys() {
                let p = table.profile(pos)?;
                let cols: Vec<String> = CapName::ALL
                    .iter()
                    .map(|c| format!("{}", p.get(*c) * 1e12))
                    .collect();
                println!("{pos},{}", cols.join(","));
            }
            Ok(())
        }
    }
}

fn variant(scenario: &Scenario, model: ModelChoice) -> &'static str {
    match model {
        ModelChoice::Oracle => "oracle",
        _ => closed_form_variant(scenario),
    }
}

fn json(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain values serialize");
    s.push('\n');
    s
}

fn no_plot(cmd: &str) -> Failure {
    Failure::Usage(format!("`{cmd}` produces a single point; svg-plot is only available for `sweep`"))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| {
            Failure::Core(HbcError::Io {
                path: p.to_path_buf(),
                source,
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
