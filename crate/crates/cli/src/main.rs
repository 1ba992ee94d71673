//! `iaoqsim` command-line driver.

mod config;
mod error;
mod methods;
mod output;
mod problem;
mod run;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use iaoqsim::simulator::NoiseModel;

use config::{AnsatzChoice, EncodingChoice, ExpansionChoice, Method, MitigationSection, QeomBasis, RunConfig};
use error::CliResult;

#[derive(Parser)]
#[command(name = "iaoqsim", version, about = "IAO active spaces and small-register quantum algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build localized IAOs for a bundle and write their Hamiltonian.
    IaoBuild {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Transform, freeze core and select an active space.
    Fold(tools::FoldArgs),
    /// Run one method on a single input or a grid directory.
    Run(RunArgs),
    /// Run one method over a grid directory.
    Scan(RunArgs),
    /// Measure one- and two-body RDMs of the exact ground state.
    Rdm(tools::RdmArgs),
    /// Fit a curve and report its minimum and dissociation energy.
    AnalyzeFit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "curve")]
        method: String,
        /// Also write the fit as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Readout-error calibration and mitigation on a 2-qubit state.
    MitigateDemo(tools::MitigateArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Method; may instead come from the config file.
    #[arg(value_enum)]
    method: Option<Method>,
    /// TOML or JSON run configuration. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, value_enum)]
    encoding: Option<EncodingChoice>,
    #[arg(long)]
    threads: Option<usize>,
    /// Symmetric readout flip probability.
    #[arg(long)]
    readout_error: Option<f64>,
    /// Readout mitigation with this many shots per calibration circuit.
    #[arg(long)]
    mitigate: Option<usize>,
    #[arg(long, value_enum)]
    ansatz: Option<AnsatzChoice>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    dtau: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    qeom_basis: Option<QeomBasis>,
    #[arg(long, value_enum)]
    expansion: Option<ExpansionChoice>,
    #[arg(long)]
    repeats: Option<usize>,
}

impl RunArgs {
    fn into_config(self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(c.method, self.method.map(Some));
        set!(c.input, self.input.map(Some));
        set!(c.out, self.out.map(Some));
        set!(c.seed, self.seed.map(Some));
        set!(c.shots, self.shots);
        set!(c.encoding, self.encoding.map(Some));
        set!(c.threads, self.threads);
        if let Some(p) = self.readout_error {
            let mut noise = c.noise.take().unwrap_or_default();
            noise.readout = NoiseModel::readout_only(p).readout;
            c.noise = Some(noise);
        }
        set!(c.mitigation, self.mitigate.map(|k| Some(MitigationSection { calibration_shots: k })));
        set!(c.vqe.ansatz, self.ansatz);
        set!(c.vqe.depth, self.depth);
        set!(c.vqe.max_iter, self.max_iter);
        set!(c.qite.dtau, self.dtau);
        set!(c.qite.beta_total, self.beta);
        set!(c.qeom.basis, self.qeom_basis);
        set!(c.vqse.expansion, self.expansion);
        set!(c.vqse.repeats, self.repeats);
        Ok(c)
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::IaoBuild { bundle, out } => tools::iao_build(&bundle, &out),
        Command::Fold(a) => tools::fold(&a),
        Command::Run(a) => run::execute(a.into_config()?, "run", false).map(|_| ()),
        Command::Scan(a) => run::execute(a.into_config()?, "scan", true).map(|_| ()),
        Command::Rdm(a) => tools::rdm(&a),
        Command::AnalyzeFit { csv, method, out } => tools::analyze_fit(&csv, &method, out.as_deref()),
        Command::MitigateDemo(a) => tools::mitigate_demo(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
