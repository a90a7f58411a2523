//! Single evaluations: Gauss sums, epsilon factors, series, towers and valuation formulas.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Value};

use cmperiods::characters::{HeckeCharLocal, LocalSetting, MultChar};
use cmperiods::iwasawa::{
    cor_val, half_log, interpolation_factor, interpolation_factor_by_eval, mu_lambda, pollack_decompose, rational_to_string,
    thm_b_a, thm_b_b, thm_delta, AlphaSeries, PadicSeries, SeriesFile, Sign,
};
use cmperiods::theta::{
    check_hecke_contract, check_up_eigen, generate_ss_tower, omega_division, pollack_cross_path, project_theta,
    ss_norm_relation_check, stabilize, theta_n, trivial_char_plus, Regime, RingClassTower, TowerFile,
    TowerStructure, TrivialCharCheck,
};

use crate::Report;

fn read_json<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn gauss(q: u64, m: u32, chi: u64) -> Result<Report> {
    let s = LocalSetting::new(q, m)?;
    let chi = MultChar { q, m, exponent: chi % s.phi() };
    let g = s.gauss_sum_q(&chi)?;
    let gb = s.gauss_sum_q(&chi.inverse())?;
    let product = (&g * &gb).as_integer();
    let sign: i128 = if (chi.exponent * (s.phi() / 2)).is_multiple_of(s.phi()) { 1 } else { -1 };
    let expected = sign * s.qm() as i128;
    Ok(Report {
        ok: product == Some(expected),
        body: json!({
            "q": q, "m": m, "chi": chi.exponent, "order": chi.order(),
            "conductor": s.conductor(),
            "gauss_sum": g.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "product_with_conjugate": product.map(|p| p.to_string()),
            "expected": expected.to_string(),
        }),
    })
}

pub fn epsilon(q: u64, m: u32, lambda: [u64; 3], chi: u64) -> Result<Report> {
    let s = LocalSetting::new(q, m)?;
    let lam = HeckeCharLocal { q, m, d: s.d(), exponents: lambda };
    if !s.is_self_dual(&lam) {
        bail!("λ = {lambda:?} is not self-dual");
    }
    let chi = MultChar { q, m, exponent: chi % s.phi() };
    let e = s.epsilon_factor(&lam, &chi)?;
    Ok(Report::ok(json!({
        "q": q, "m": m, "lambda": lambda, "chi": chi.exponent,
        "lambda_theta": s.lambda_theta_sign(&lam)?,
        "root_number": s.root_number(&lam)?,
        "conductor": s.conductor(),
        "epsilon": e.as_integer().map(|v| json!(v.to_string()))
            .unwrap_or_else(|| json!(e.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>())),
    })))
}

#[derive(Subcommand)]
pub enum IwasawaCmd {
    /// μ and λ of a series mod (p^M, T^D).
    MuLambda(SeriesInput),
}

#[derive(Args)]
pub struct SeriesInput {
    /// series file `{p, M, D, mode, coeffs}`
    #[arg(long, conflicts_with = "coeffs")]
    series: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    p: u64,
    #[arg(long, default_value_t = 10)]
    precision: u32,
    #[arg(long, default_value_t = 40)]
    degree: usize,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    coeffs: Vec<i64>,
    /// also evaluate at ζ - 1 for ζ of order p^t
    #[arg(long)]
    zeta: Option<u32>,
}

pub fn iwasawa(cmd: IwasawaCmd) -> Result<Report> {
    let IwasawaCmd::MuLambda(a) = cmd;
    let f = match &a.series {
        Some(path) => PadicSeries::from_file(&read_json::<SeriesFile>(path)?)?,
        None => {
            if a.coeffs.is_empty() {
                bail!("give --series or --coeffs");
            }
            PadicSeries::from_i64(a.p, a.precision, a.degree, &a.coeffs)
        }
    };
    let inv = mu_lambda(&f)?;
    let mut body = json!({ "p": f.p(), "M": f.precision(), "D": f.degree_bound(), "mu": inv.mu, "lambda": inv.lambda });
    if let Some(t) = a.zeta {
        let z = f.eval_at_zeta(t)?;
        body["zeta"] = json!({
            "t": t,
            "valuation": z.valuation.map(|v| rational_to_string(&v)),
            "certified_to": z.certified_to.map(|v| rational_to_string(&v)),
        });
    }
    Ok(Report::ok(body))
}

#[derive(Subcommand)]
pub enum PollackCmd {
    /// Recover Θ^± from Θ_α = a + bα, α² = -p.
    Decompose {
        /// `{p, M, D, a: [..], b: [..]}` with integer strings
        #[arg(long)]
        input: PathBuf,
    },
    /// Build the `Θ_α` input file from integer Θ^+ and Θ^- coefficients.
    Assemble {
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 10)]
        precision: u32,
        #[arg(long, default_value_t = 16)]
        degree: usize,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        plus: Vec<i64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        minus: Vec<i64>,
    },
}

#[derive(Deserialize)]
struct AlphaFile {
    p: u64,
    #[serde(rename = "M")]
    m: u32,
    #[serde(rename = "D")]
    d: usize,
    a: Vec<String>,
    b: Vec<String>,
}

pub fn pollack(cmd: PollackCmd) -> Result<Report> {
    let input = match cmd {
        PollackCmd::Decompose { input } => input,
        PollackCmd::Assemble { p, precision, degree, plus, minus } => {
            let lp = half_log(p, Sign::Plus, precision, degree);
            let lm = half_log(p, Sign::Minus, precision, degree);
            let tp = PadicSeries::from_i64(p, precision, degree, &plus);
            let tm = PadicSeries::from_i64(p, precision, degree, &minus);
            let a = AlphaSeries::assemble(&lp, &lm, &tp, &tm, 1);
            let strings = |v: &[BigRational]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
            return Ok(Report::ok(json!({ "p": p, "M": precision, "D": a.a.len(), "a": strings(&a.a), "b": strings(&a.b) })));
        }
    };
    let f: AlphaFile = read_json(&input)?;
    let parse = |v: &[String]| -> Result<Vec<BigRational>> {
        let mut out: Vec<BigRational> =
            v.iter().map(|s| s.parse::<BigRational>().with_context(|| format!("coefficient {s}"))).collect::<Result<_>>()?;
        out.resize(f.d, BigRational::from_integer(BigInt::from(0)));
        Ok(out)
    };
    let theta_alpha = AlphaSeries { p: f.p, a: parse(&f.a)?, b: parse(&f.b)? };
    let dec = pollack_decompose(&theta_alpha, &theta_alpha.conj(), f.m, f.d)?;
    Ok(Report {
        ok: dec.reconstruction_exact,
        body: json!({
            "theta_plus": dec.theta_plus.to_file(),
            "theta_minus": dec.theta_minus.to_file(),
            "certified_precision": dec.certified_precision,
            "reconstruction_exact": dec.reconstruction_exact,
        }),
    })
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Structure {
    Inert,
    Split,
}

#[derive(Subcommand)]
pub enum ThetaCmd {
    /// Contract checks, ω-division, stabilization and the cross-path reconstruction on one tower.
    Run {
        /// tower file; a seeded tower is generated when omitted
        #[arg(long)]
        tower: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        h: u64,
        #[arg(long, default_value_t = 4)]
        n_max: u32,
        #[arg(long, default_value_t = 6)]
        precision: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "inert")]
        structure: Structure,
        /// write the generated tower here
        #[arg(long)]
        save_tower: Option<PathBuf>,
    },
}

pub fn theta(cmd: ThetaCmd) -> Result<Report> {
    let ThetaCmd::Run { tower, p, h, n_max, precision, seed, structure, save_tower } = cmd;
    let (t, f, precision) = match tower {
        Some(path) => {
            let file: TowerFile = read_json(&path)?;
            let (t, f) = file.to_tower()?;
            (t, f, file.m)
        }
        None => {
            let s = match structure {
                Structure::Inert => TowerStructure::Inert,
                Structure::Split => TowerStructure::Split,
            };
            let t = RingClassTower::new(p, h, n_max, s)?;
            let f = generate_ss_tower(&t, precision, seed);
            (t, f, precision)
        }
    };
    if let Some(path) = save_tower {
        std::fs::write(&path, serde_json::to_string_pretty(&TowerFile::from_tower(&t, &f, precision))?)?;
    }
    check_hecke_contract(&t, &f)?;
    let norm_relation = ss_norm_relation_check(&t, &f).is_ok();
    let division = omega_division(&t, &f)?;
    let trivial = match trivial_char_plus(&t, &f) {
        TrivialCharCheck::Value(v) => json!(v.to_string()),
        TrivialCharCheck::SkippedSplit => json!("skipped: split"),
    };
    let trivial_ok = !matches!(trivial_char_plus(&t, &f), TrivialCharCheck::Value(ref v) if *v != BigInt::from(0));
    let st = stabilize(&t, &f, None, Regime::PCoprimeToN)?;
    let up = check_up_eigen(&t, &st);
    let mut projection = true;
    for n in 1..t.n_max {
        projection &= project_theta(&t, &theta_n(&t, &st, n + 1)?).coeffs == theta_n(&t, &st, n)?.coeffs;
    }
    let cross = if t.structure == TowerStructure::Inert { Some(pollack_cross_path(&t, &f)?) } else { None };
    let cross_ok = cross.as_ref().is_none_or(|rows| rows.iter().all(|r| r.holds));
    let ok = norm_relation && division.compatible && trivial_ok && up && projection && cross_ok;
    Ok(Report {
        ok,
        body: json!({
            "p": t.p, "h": t.h, "n_max": t.n_max, "M": precision,
            "hecke_contract": true,
            "norm_relation": norm_relation,
            "omega_division_compatible": division.compatible,
            "trivial_character_plus": trivial,
            "up_eigenvector": up,
            "projection_compatible": projection,
            "cross_path": cross,
        }),
    })
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SignArg {
    #[value(name = "+")]
    Plus,
    #[value(name = "-")]
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Subcommand)]
pub enum CalcCmd {
    ThmDelta {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u32,
    },
    ThmBA {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u32,
        #[arg(long)]
        t_p: u32,
        #[arg(long, allow_negative_numbers = true)]
        mu: i64,
        #[arg(long, allow_negative_numbers = true)]
        c: i64,
    },
    ThmBB {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u32,
        #[arg(long)]
        t_p: u32,
        #[arg(long, allow_negative_numbers = true)]
        mu: i64,
        #[arg(long, allow_negative_numbers = true)]
        c: i64,
        #[arg(long, allow_negative_numbers = true)]
        eps: i8,
    },
    CorVal {
        #[arg(long, value_enum, allow_hyphen_values = true)]
        sign: SignArg,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u32,
        #[arg(long, allow_negative_numbers = true)]
        mu: i64,
        #[arg(long, allow_negative_numbers = true)]
        lambda: i64,
    },
    /// Valuation of the interpolation factor; `--by-eval` multiplies the Φ-values directly.
    Interpolation {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u32,
        #[arg(long, value_enum, allow_hyphen_values = true)]
        sign: SignArg,
        #[arg(long)]
        by_eval: bool,
    },
}

pub fn calc(cmd: CalcCmd) -> Result<Report> {
    let r = match cmd {
        CalcCmd::ThmDelta { p, t } => thm_delta(p, t)?,
        CalcCmd::ThmBA { p, t, t_p, mu, c } => thm_b_a(p, t, t_p, mu, c)?,
        CalcCmd::ThmBB { p, t, t_p, mu, c, eps } => thm_b_b(p, t, t_p, mu, c, eps)?,
        CalcCmd::CorVal { sign, p, t, mu, lambda } => cor_val(sign.into(), p, t, mu, lambda)?,
        CalcCmd::Interpolation { p, t, sign, by_eval } => {
            if by_eval {
                interpolation_factor_by_eval(p, t, sign.into())?
            } else {
                interpolation_factor(p, t, sign.into())?
            }
        }
    };
    Ok(Report::ok(Value::String(rational_to_string(&r))))
}
