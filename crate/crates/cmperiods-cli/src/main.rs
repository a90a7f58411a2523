use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

mod sweeps;
mod tools;

#[derive(Parser)]
#[command(name = "cmperiods", version, about = "Exact toric periods, epsilon factors, theta elements and Iwasawa calculators")]
struct Cli {
    /// Also write the report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form γ_{θ,u} for self-dual λ, with ℓ-unit flags.
    ToricPeriod(sweeps::ToricArgs),
    #[command(subcommand)]
    Verify(Verify),
    /// G(χ,ψ) and the check G(χ)G(χ̄) = χ(-1)q^m.
    Gauss {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: u32,
        /// exponent of χ against the fixed generator of (Z/q^m)^×
        #[arg(long)]
        chi: u64,
    },
    /// ε(1/2, π_λ⊗χ, ψ).
    Epsilon {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: u32,
        #[arg(long, value_parser = sweeps::parse_lambda)]
        lambda: [u64; 3],
        #[arg(long, default_value_t = 0)]
        chi: u64,
    },
    #[command(subcommand)]
    Iwasawa(tools::IwasawaCmd),
    #[command(subcommand)]
    Pollack(tools::PollackCmd),
    #[command(subcommand)]
    Theta(tools::ThetaCmd),
    #[command(subcommand)]
    ValuationCalc(tools::CalcCmd),
    /// Quaternion discriminant D_B for K of discriminant -D_K.
    Discriminant {
        #[arg(long)]
        dk: u64,
    },
    /// Root-number sign ε(λν) for an anticyclotomic twist.
    XiClassify(XiArgs),
}

#[derive(Subcommand)]
enum Verify {
    /// Direct epsilon-sum expansion against the closed γ, every λ × u.
    MasterIdentity(sweeps::VerifyArgs),
    /// Direct F_v(a) against its closed evaluation.
    Bfprime(sweeps::VerifyArgs),
    /// Twisted Gauss-sum reduction, termwise.
    Js(sweeps::VerifyArgs),
}

#[derive(Args)]
struct XiArgs {
    #[arg(long, allow_negative_numbers = true)]
    eps: i8,
    #[arg(long, value_enum)]
    p: Splitting,
    #[arg(long)]
    t_cond: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Splitting {
    Split,
    Inert,
}

/// A report and whether every asserted identity in it held.
pub struct Report {
    pub body: Value,
    pub ok: bool,
}

impl Report {
    pub fn ok(body: Value) -> Self {
        Self { body, ok: true }
    }
}

fn run(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::ToricPeriod(a) => sweeps::toric_period(&a),
        Command::Verify(Verify::MasterIdentity(a)) => sweeps::master_identity(&a),
        Command::Verify(Verify::Bfprime(a)) => sweeps::bfprime(&a),
        Command::Verify(Verify::Js(a)) => sweeps::js(&a),
        Command::Gauss { q, m, chi } => tools::gauss(q, m, chi),
        Command::Epsilon { q, m, lambda, chi } => tools::epsilon(q, m, lambda, chi),
        Command::Iwasawa(c) => tools::iwasawa(c),
        Command::Pollack(c) => tools::pollack(c),
        Command::Theta(c) => tools::theta(c),
        Command::ValuationCalc(c) => tools::calc(c),
        Command::Discriminant { dk } => Ok(Report::ok(json!(cmperiods::characters::quaternion_discriminant(dk)?))),
        Command::XiClassify(a) => {
            let v = cmperiods::characters::xi_classifier(a.eps, matches!(a.p, Splitting::Split), a.t_cond)?;
            Ok(Report::ok(json!(v)))
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(n) = std::env::var("CMPERIODS_THREADS") {
        let n: usize = n.parse().context("CMPERIODS_THREADS must be a positive integer")?;
        if n == 0 {
            bail!("CMPERIODS_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn render(v: &Value) -> String {
    match v {
        Value::Number(_) | Value::Bool(_) => v.to_string(),
        Value::String(s) => s.clone(),
        _ => serde_json::to_string_pretty(v).expect("JSON values serialize"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let result = configure_threads().and_then(|_| run(cli));
    match result {
        Ok(report) => {
            let text = render(&report.body);
            // a closed pipe (`| head`) is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
            if let Some(path) = out {
                if let Err(e) = std::fs::write(&path, format!("{text}\n")) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
