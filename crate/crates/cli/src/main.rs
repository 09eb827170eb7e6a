use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use critlp::verify::selftest::{run_suite, selftest, SelftestReport};
use critlp::verify::{
    lp_eval, verify_exceptional, verify_normal, verify_ordinary, verify_vanishing, FormSpec, RunConfig, SigmaSpec,
    VerificationReport,
};
use critlp::Error;

#[derive(Parser, Debug)]
#[command(name = "critlp", version, about = "Check p-adic L-function identities for critical-slope Eisenstein series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exceptional series E_{2,ℓ}: Stevens-normalized L_p against the ζ_p product.
    VerifyExceptional(Common),
    /// L_p(f_β, σ) ≡ 0 for σ(−1) = −ε(f), plus the support of the opposite-sign symbol.
    VerifyVanishing(Common),
    /// Ratio of the ordinary L_p to its factorization, across σ.
    VerifyOrdinary(Common),
    /// Up-to-unit ratio test for a normal pair (ψ, τ).
    VerifyNormal(Common),
    /// Evaluate a Kubota–Leopoldt L-function at one σ.
    LpEval(LpEvalArgs),
    /// Structural invariant suites and the interpolation sweep.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Output {
    /// Write the JSON report to this path ("-" for stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// TOML file of key = value settings; its values override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record wall-clock times in the report.
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// The prime p (default 5 for verify-normal, 3 otherwise)
    #[arg(long)]
    p: Option<u64>,
    /// ℓ for the exceptional series E_{2,ℓ}.
    #[arg(long)]
    ell: Option<u64>,
    /// ψ as a discriminant ("1" for trivial); selects a normal pair.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    /// τ as a discriminant, paired with --psi
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Weight offset k of E_{k+2,ψ,τ}
    #[arg(long)]
    k: Option<u32>,
    /// Comma-separated s values, used with --a.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    s: Option<Vec<i64>>,
    /// Teichmüller exponent of σ = ω^a⟨z⟩^s.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<i64>,
    /// Explicit σ list as a:s pairs, e.g. 1:2,3:1.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<String>>,
    /// Number of moments M.
    #[arg(long)]
    moments: Option<usize>,
    /// Working precision N.
    #[arg(long)]
    prec: Option<u32>,
    /// Auxiliary T_q constraints.
    #[arg(long)]
    aux: Option<usize>,
    /// Required agreement in digits.
    #[arg(long)]
    required: Option<i64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug, Clone)]
struct LpEvalArgs {
    /// The prime p
    #[arg(long, default_value_t = 5)]
    p: u64,
    /// Character as a discriminant, or "1".
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    nu: String,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    a: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    s: i64,
    #[arg(long, default_value_t = 15)]
    prec: u32,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug, Clone)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Run only this suite.
    #[arg(long)]
    suite: Option<String>,
    #[command(flatten)]
    out: Output,
}

/// Settings accepted from a config file; every present key wins over the flag.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    p: Option<u64>,
    ell: Option<u64>,
    psi: Option<String>,
    tau: Option<String>,
    k: Option<u32>,
    s: Option<Vec<i64>>,
    a: Option<i64>,
    sigma: Option<Vec<String>>,
    moments: Option<usize>,
    prec: Option<u32>,
    aux: Option<usize>,
    required: Option<i64>,
    seed: Option<u64>,
    timings: Option<bool>,
    nu: Option<String>,
}

/// Setup failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PrecisionExhausted(_) => 3,
            Error::Rank { .. } => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn merge(mut c: Common, f: FileConfig) -> Common {
    macro_rules! over {
        ($($field:ident),*) => { $( if f.$field.is_some() { c.$field = f.$field; } )* };
    }
    over!(p, ell, psi, tau, k, s, a, sigma, moments, prec, aux, required);
    if let Some(t) = f.timings {
        c.out.timings = t;
    }
    c
}

fn parse_sigma(text: &str) -> Result<SigmaSpec, Failure> {
    let (a, s) = text
        .split_once(':')
        .ok_or_else(|| config_error(format!("σ '{text}' is not of the form a:s")))?;
    let parse = |x: &str| x.trim().parse::<i64>().map_err(|_| config_error(format!("bad integer in σ '{text}'")));
    Ok(SigmaSpec::new(parse(a)?, parse(s)?))
}

enum Kind {
    Exceptional,
    Vanishing,
    Ordinary,
    Normal,
}

struct Resolved {
    p: u64,
    form: FormSpec,
    sigmas: Vec<SigmaSpec>,
    cfg: RunConfig,
}

fn resolve(kind: &Kind, c: &Common) -> Result<Resolved, Failure> {
    let p = c.p.unwrap_or(match kind {
        Kind::Normal => 5,
        _ => 3,
    });
    let form = match (kind, &c.psi, &c.tau) {
        (Kind::Exceptional, Some(_), _) | (Kind::Exceptional, _, Some(_)) => {
            return Err(config_error("verify-exceptional takes --ell, not characters"))
        }
        (_, None, None) if !matches!(kind, Kind::Normal) => FormSpec::Exceptional { ell: c.ell.unwrap_or(11) },
        (_, psi, tau) => {
            if c.ell.is_some() {
                return Err(config_error("give either --ell or --psi/--tau"));
            }
            FormSpec::Normal {
                psi: psi.clone().unwrap_or_else(|| "-3".into()),
                tau: tau.clone().unwrap_or_else(|| "-4".into()),
                k: c.k.unwrap_or(0),
            }
        }
    };
    let sign = form.data(p, 8).map_err(Failure::from)?.sign();
    // parity of the default σ list
    let parity = match (kind, &form) {
        (Kind::Exceptional, _) => 1,
        (Kind::Vanishing, _) => -sign,
        (Kind::Ordinary, FormSpec::Exceptional { .. }) => -1,
        _ => sign,
    };
    let sigmas = if let Some(list) = &c.sigma {
        list.iter().map(|t| parse_sigma(t)).collect::<Result<Vec<_>, _>>()?
    } else {
        let s_list = c.s.clone().unwrap_or_else(|| match kind {
            Kind::Vanishing => vec![0, 1, 2, 3],
            Kind::Exceptional => vec![1, 2, 3, 4],
            // s = 1 can put ζ_p(σ) at its pole
            _ => vec![2, 3, 4, 5],
        });
        let reps: Vec<i64> = match kind {
            Kind::Exceptional => vec![0],
            _ => (0..p as i64 - 1).filter(|a| if parity == 1 { a % 2 == 0 } else { a % 2 == 1 }).collect(),
        };
        s_list
            .iter()
            .enumerate()
            .map(|(i, &s)| SigmaSpec::new(c.a.unwrap_or(reps[i % reps.len()]), s))
            .collect()
    };
    let mut cfg = RunConfig::defaults_for(p);
    if let Some(m) = c.moments {
        cfg.moments = m;
    }
    if let Some(n) = c.prec {
        cfg.prec = n;
    }
    if let Some(a) = c.aux {
        cfg.hecke_constraints = a;
    }
    cfg.required = c.required;
    cfg.timings = c.out.timings;
    Ok(Resolved { p, form, sigmas, cfg })
}

fn run_verify(kind: Kind, c: Common) -> Result<(VerificationReport, Output), Failure> {
    let file = load_config(c.out.config.as_deref())?;
    let c = merge(c, file);
    let r = resolve(&kind, &c)?;
    let report = match kind {
        Kind::Exceptional => {
            let FormSpec::Exceptional { ell } = r.form else { unreachable!() };
            if r.sigmas.iter().any(|s| s.a.rem_euclid(r.p as i64 - 1) != 0) {
                return Err(config_error("verify-exceptional evaluates at σ = ⟨z⟩^s only"));
            }
            let s: Vec<i64> = r.sigmas.iter().map(|x| x.s).collect();
            verify_exceptional(r.p, ell, &s, &r.cfg)?
        }
        Kind::Vanishing => verify_vanishing(r.p, &r.form, &r.sigmas, &r.cfg)?,
        Kind::Ordinary => verify_ordinary(r.p, &r.form, &r.sigmas, &r.cfg)?,
        Kind::Normal => verify_normal(r.p, &r.form, &r.sigmas, &r.cfg)?,
    };
    Ok((report, c.out))
}

fn emit(json: &str, text: &[String], out: &Output) -> Result<(), Failure> {
    match out.json.as_deref() {
        Some(path) if path == Path::new("-") => println!("{json}"),
        Some(path) => {
            std::fs::write(path, format!("{json}\n")).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            text.iter().for_each(|l| println!("{l}"));
        }
        None => text.iter().for_each(|l| println!("{l}")),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::VerifyExceptional(c) => finish(run_verify(Kind::Exceptional, c)?),
        Command::VerifyVanishing(c) => finish(run_verify(Kind::Vanishing, c)?),
        Command::VerifyOrdinary(c) => finish(run_verify(Kind::Ordinary, c)?),
        Command::VerifyNormal(c) => finish(run_verify(Kind::Normal, c)?),
        Command::LpEval(mut args) => {
            let f = load_config(args.out.config.as_deref())?;
            if let Some(p) = f.p {
                args.p = p;
            }
            if let Some(nu) = f.nu {
                args.nu = nu;
            }
            if let Some(a) = f.a {
                args.a = a;
            }
            if let Some(s) = f.s.and_then(|v| v.first().copied()) {
                args.s = s;
            }
            if let Some(n) = f.prec {
                args.prec = n;
            }
            let rep = lp_eval(args.p, &args.nu, SigmaSpec::new(args.a, args.s), args.prec)?;
            let json = serde_json::to_string_pretty(&rep).expect("report serializes");
            emit(&json, &[rep.text()], &args.out)?;
            Ok(0)
        }
        Command::Selftest(mut args) => {
            let f = load_config(args.out.config.as_deref())?;
            if let Some(seed) = f.seed {
                args.seed = seed;
            }
            if let Some(t) = f.timings {
                args.out.timings = t;
            }
            let rep = match &args.suite {
                Some(name) => SelftestReport {
                    schema_version: critlp::verify::SCHEMA_VERSION,
                    seed: args.seed,
                    suites: vec![run_suite(name, args.seed, args.out.timings)?],
                },
                None => selftest(args.seed, args.out.timings),
            };
            emit(&rep.to_json(), &rep.summary_lines(), &args.out)?;
            Ok(rep.exit_code() as u8)
        }
    }
}

fn finish((report, out): (VerificationReport, Output)) -> Result<u8, Failure> {
    let mut lines = report.summary_lines();
    for s in &report.solves {
        lines.push(format!(
            "solve: level {}, ι = {}, loss {}, trusted digits {}",
            s.level, s.iota_sign, s.loss, s.trusted_digits
        ));
    }
    lines.push(format!("{} passed, {} failed", report.passed, report.failed));
    emit(&report.to_json(), &lines, &out)?;
    Ok(report.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
