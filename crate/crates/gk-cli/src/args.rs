//! Command-line grammar and its textual round trip.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gk::btransform::BMethod;
use gk::cusps::Cusp;
use gk::gaussint::GaussianInt;
use gk::sieve::CoeffFamily;
use num_complex::Complex64;

use crate::literal::{format_complex, parse_complex};

fn gaussian(s: &str) -> Result<GaussianInt, String> {
    s.parse().map_err(|e: gk::GkError| e.to_string())
}

fn cusp(s: &str) -> Result<Cusp, String> {
    s.parse().map_err(|e: gk::GkError| e.to_string())
}

fn complex(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

fn method(s: &str) -> Result<BMethod, String> {
    s.parse().map_err(|e: gk::GkError| e.to_string())
}

fn family(s: &str) -> Result<CoeffFamily, String> {
    s.parse().map_err(|e: gk::GkError| e.to_string())
}

fn threads(s: &str) -> Result<Threads, String> {
    Threads::parse(s)
}

/// Worker count for sweeps and verification suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

impl Threads {
    pub fn parse(s: &str) -> Result<Threads, String> {
        match s.trim() {
            "auto" => Ok(Threads::Auto),
            t => match t.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
                _ => Err(format!("thread count '{s}' must be a positive integer or 'auto'")),
            },
        }
    }

    pub fn count(self) -> usize {
        match self {
            Threads::Auto => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            Threads::Fixed(n) => n,
        }
    }
}

impl std::fmt::Display for Threads {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threads::Auto => write!(f, "auto"),
            Threads::Fixed(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Budget {
    Fast,
    Full,
}

impl Budget {
    pub fn name(self) -> &'static str {
        match self {
            Budget::Fast => "fast",
            Budget::Full => "full",
        }
    }
}

/// Top-level configuration of one run.
#[derive(Clone, Debug, PartialEq, Parser)]
#[command(name = "gk", version, about = "Kloosterman sums, cusps and sum-formula transforms over the Gaussian integers")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (`auto` or a positive integer); GK_THREADS takes precedence.
    #[arg(long, global = true, value_parser = threads, default_value = "auto")]
    pub threads: Threads,
}

#[derive(Clone, Debug, PartialEq, Subcommand)]
pub enum Command {
    /// Cusp classes of Γ₀(q0).
    Cusps(CuspsArgs),
    /// A Kloosterman sum for a pair of cusps.
    Kloosterman(KloostermanArgs),
    /// The diagonal coset sum for a pair of cusps.
    Delta(DeltaArgs),
    /// Bessel functions, the addition formula and Poisson summation.
    Bessel(BesselArgs),
    /// The Bessel transform of the Gaussian test function.
    Btransform(BtransformArgs),
    /// The geometric side of the sum formula.
    Geom(GeomArgs),
    /// Large-sieve sums and their sweeps.
    Sieve(SieveArgs),
    /// Verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct LevelArgs {
    /// Level of the congruence subgroup, e.g. `1+1i`.
    #[arg(long, value_parser = gaussian, default_value = "1", allow_hyphen_values = true)]
    pub q0: GaussianInt,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct CuspPairArgs {
    /// First cusp: `inf` or `u/w`.
    #[arg(long, value_parser = cusp, default_value = "inf", allow_hyphen_values = true)]
    pub a: Cusp,
    /// Second cusp: `inf` or `u/w`.
    #[arg(long, value_parser = cusp, default_value = "inf", allow_hyphen_values = true)]
    pub b: Cusp,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct FreqArgs {
    #[arg(long, value_parser = gaussian, allow_hyphen_values = true)]
    pub w1: GaussianInt,
    #[arg(long, value_parser = gaussian, allow_hyphen_values = true)]
    pub w2: GaussianInt,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct TestFnArgs {
    /// Width of the test function in the order.
    #[arg(long = "P", default_value_t = 2.0)]
    pub p: f64,
    /// Width of the test function along the spectral line.
    #[arg(long = "K", default_value_t = 2.0)]
    pub k: f64,
    /// Half-width of the holomorphy strip.
    #[arg(long, default_value_t = 0.75)]
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct CuspsArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    /// List one representative per class.
    #[arg(long)]
    pub list: bool,
    /// Also count classes by exhaustive equivalence search.
    #[arg(long)]
    pub brute: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KloostermanMethod {
    /// Sum over admissible pairs of residues.
    General,
    /// Same-cusp route in the frame scaling (requires a = b).
    Samecusp,
    /// Split at the primes of q0.
    Factor,
    /// Double-coset enumeration.
    Brute,
    /// Every applicable route, compared.
    All,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct KloostermanArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    #[command(flatten)]
    pub cusps: CuspPairArgs,
    #[command(flatten)]
    pub freq: FreqArgs,
    /// The Gaussian integer C of the modulus c = C·√(v1 v2).
    #[arg(long, value_parser = gaussian, allow_hyphen_values = true)]
    pub c: GaussianInt,
    #[arg(long, value_enum, default_value = "general")]
    pub method: KloostermanMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DeltaMethod {
    Formula,
    Brute,
    All,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct DeltaArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    #[command(flatten)]
    pub cusps: CuspPairArgs,
    #[command(flatten)]
    pub freq: FreqArgs,
    #[arg(long, value_enum, default_value = "formula")]
    pub method: DeltaMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BesselMethod {
    /// J_n(z) for integer n.
    J,
    /// J*_ν(z) = J_ν(z)/(z/2)^ν for complex ν.
    Jstar,
    /// Residual of the addition formula.
    Graf,
    /// Poisson summation for a Gaussian over ℤ[i].
    Poisson,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct BesselArgs {
    #[arg(long, value_enum, default_value = "j")]
    pub method: BesselMethod,
    /// Order (an integer for `j`).
    #[arg(long, value_parser = complex, default_value = "0", allow_hyphen_values = true)]
    pub nu: Complex64,
    /// Argument.
    #[arg(long, value_parser = complex, default_value = "1", allow_hyphen_values = true)]
    pub z: Complex64,
    /// Order p of the addition formula.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub p: i64,
    /// Ratio y of the addition formula.
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
    /// Truncation of the addition series.
    #[arg(long = "M", default_value_t = 60)]
    pub m: i64,
    /// Width t of exp(−t|z|²) for Poisson summation.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub t: f64,
    /// Lattice cutoff for Poisson summation.
    #[arg(long, default_value_t = 12.0)]
    pub cutoff: f64,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct BtransformArgs {
    #[command(flatten)]
    pub test_fn: TestFnArgs,
    /// Argument u of the transform.
    #[arg(long, value_parser = complex, default_value = "1", allow_hyphen_values = true)]
    pub u: Complex64,
    #[arg(long, value_parser = method, default_value = "bessel_1d")]
    pub method: BMethod,
    /// Scale Δ fixing the harmonic truncation of the triple routes.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Truncation of the spectral line.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Report the diagonal term instead of a transform value.
    #[arg(long)]
    pub diagonal: bool,
    /// Run the inversion check on the built-in bump.
    #[arg(long)]
    pub inversion: bool,
    #[arg(long, value_enum, default_value = "fast")]
    pub budget: Budget,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct GeomArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    #[command(flatten)]
    pub cusps: CuspPairArgs,
    #[command(flatten)]
    pub freq: FreqArgs,
    #[command(flatten)]
    pub test_fn: TestFnArgs,
    /// Moduli with |c| ≤ X are summed.
    #[arg(long)]
    pub cutoff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// The three bounds for U over the sweep grid.
    #[value(name = "large_sieve")]
    LargeSieve,
    /// The mean value over residues, harmonics and a t-interval.
    #[value(name = "mean_value")]
    MeanValue,
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct SieveArgs {
    #[command(flatten)]
    pub level: LevelArgs,
    /// Cusp of the sum.
    #[arg(long, value_parser = cusp, default_value = "inf", allow_hyphen_values = true)]
    pub a: Cusp,
    /// The Gaussian integer C of the modulus c = C·v.
    #[arg(long, value_parser = gaussian, default_value = "1", allow_hyphen_values = true)]
    pub c: GaussianInt,
    /// Frequencies satisfy N/2 < |ω|² ≤ N.
    #[arg(long = "N", default_value_t = 25.0)]
    pub n: f64,
    /// Harmonics |m| ≤ M.
    #[arg(long = "M", default_value_t = 0)]
    pub m: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub psi: f64,
    /// Coefficient family: ones, spike, random or twist.
    #[arg(long, value_parser = family, default_value = "random")]
    pub family: CoeffFamily,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Run a sweep instead of a single evaluation.
    #[arg(long, value_enum)]
    pub sweep: Option<SweepKind>,
    #[arg(long, value_enum, default_value = "fast")]
    pub budget: Budget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Gaussint,
    Cusps,
    Kloosterman,
    Bessel,
    Btransform,
    Sieve,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Gaussint => "gaussint",
            Suite::Cusps => "cusps",
            Suite::Kloosterman => "kloosterman",
            Suite::Bessel => "bessel",
            Suite::Btransform => "btransform",
            Suite::Sieve => "sieve",
        }
    }

    pub fn includes(self, module: &str) -> bool {
        self == Suite::All || self.name() == module
    }
}

#[derive(Clone, Debug, PartialEq, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, value_enum, default_value = "fast")]
    pub budget: Budget,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn push(out: &mut Vec<String>, flag: &str, value: impl ToString) {
    out.push(format!("--{flag}"));
    out.push(value.to_string());
}

fn push_real(out: &mut Vec<String>, flag: &str, value: f64) {
    out.push(format!("--{flag}={value:?}"));
}

impl RunConfig {
    /// The argument vector that parses back to this configuration.
    pub fn to_argv(&self) -> Vec<String> {
        let mut a = vec!["gk".to_string()];
        let level = |a: &mut Vec<String>, l: &LevelArgs| push(a, "q0", l.q0);
        let pair = |a: &mut Vec<String>, p: &CuspPairArgs| {
            push(a, "a", p.a);
            push(a, "b", p.b);
        };
        let freq = |a: &mut Vec<String>, f: &FreqArgs| {
            a.push(format!("--w1={}", f.w1));
            a.push(format!("--w2={}", f.w2));
        };
        let test_fn = |a: &mut Vec<String>, t: &TestFnArgs| {
            push_real(a, "P", t.p);
            push_real(a, "K", t.k);
            push_real(a, "sigma", t.sigma);
        };
        match &self.command {
            Command::Cusps(c) => {
                a.push("cusps".into());
                level(&mut a, &c.level);
                if c.list {
                    a.push("--list".into());
                }
                if c.brute {
                    a.push("--brute".into());
                }
            }
            Command::Kloosterman(k) => {
                a.push("kloosterman".into());
                level(&mut a, &k.level);
                pair(&mut a, &k.cusps);
                freq(&mut a, &k.freq);
                a.push(format!("--c={}", k.c));
                push(&mut a, "method", value_name(k.method));
            }
            Command::Delta(d) => {
                a.push("delta".into());
                level(&mut a, &d.level);
                pair(&mut a, &d.cusps);
                freq(&mut a, &d.freq);
                push(&mut a, "method", value_name(d.method));
            }
            Command::Bessel(b) => {
                a.push("bessel".into());
                push(&mut a, "method", value_name(b.method));
                a.push(format!("--nu={}", format_complex(b.nu)));
                a.push(format!("--z={}", format_complex(b.z)));
                a.push(format!("--p={}", b.p));
                push_real(&mut a, "y", b.y);
                a.push(format!("--M={}", b.m));
                push_real(&mut a, "t", b.t);
                push_real(&mut a, "cutoff", b.cutoff);
            }
            Command::Btransform(b) => {
                a.push("btransform".into());
                test_fn(&mut a, &b.test_fn);
                a.push(format!("--u={}", format_complex(b.u)));
                push(&mut a, "method", b.method.name());
                push_real(&mut a, "delta", b.delta);
                if let Some(t) = b.cutoff {
                    push_real(&mut a, "cutoff", t);
                }
                if b.diagonal {
                    a.push("--diagonal".into());
                }
                if b.inversion {
                    a.push("--inversion".into());
                }
                push(&mut a, "budget", b.budget.name());
            }
            Command::Geom(g) => {
                a.push("geom".into());
                level(&mut a, &g.level);
                pair(&mut a, &g.cusps);
                freq(&mut a, &g.freq);
                test_fn(&mut a, &g.test_fn);
                push_real(&mut a, "cutoff", g.cutoff);
            }
            Command::Sieve(s) => {
                a.push("sieve".into());
                level(&mut a, &s.level);
                push(&mut a, "a", s.a);
                a.push(format!("--c={}", s.c));
                push_real(&mut a, "N", s.n);
                push(&mut a, "M", s.m);
                push_real(&mut a, "psi", s.psi);
                let fam = match s.family {
                    CoeffFamily::Twist { .. } => "twist",
                    other => other.name(),
                };
                push(&mut a, "family", fam);
                push(&mut a, "seed", s.seed);
                if let Some(k) = s.sweep {
                    push(&mut a, "sweep", value_name(k));
                }
                push(&mut a, "budget", s.budget.name());
            }
            Command::Verify(v) => {
                a.push("verify".into());
                push(&mut a, "suite", v.suite.name());
                push(&mut a, "budget", v.budget.name());
                push(&mut a, "seed", v.seed);
            }
        }
        push(&mut a, "format", value_name(self.format));
        if let Some(p) = &self.out {
            a.push("--out".into());
            a.push(p.display().to_string());
        }
        push(&mut a, "threads", self.threads);
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(args).unwrap()
    }

    fn round_trip(cfg: &RunConfig) {
        let again = RunConfig::try_parse_from(cfg.to_argv()).unwrap();
        assert_eq!(&again, cfg, "{:?}", cfg.to_argv());
    }

    #[test]
    fn configurations_round_trip() {
        let cases: &[&[&str]] = &[
            &["gk", "cusps", "--q0", "1+1i", "--list"],
            &["gk", "kloosterman", "--q0", "2", "--a", "1/2", "--b", "inf", "--w1", "-1-2i", "--w2", "3i", "--c", "1-1i", "--method", "all"],
            &["gk", "delta", "--q0", "1+1i", "--w1", "1", "--w2", "-1", "--format", "csv"],
            &["gk", "bessel", "--method", "jstar", "--nu", "0.5-0.25i", "--z", "-1.5+2i"],
            &["gk", "btransform", "--P", "1.5", "--K", "3", "--u", "0.1+0.7i", "--method", "triple_series", "--delta", "1.5", "--cutoff", "30"],
            &["gk", "geom", "--w1", "1", "--w2", "1", "--cutoff", "20", "--threads", "3"],
            &["gk", "sieve", "--q0", "2", "--a", "1/2", "--c", "1+1i", "--N", "50", "--M", "4", "--psi", "-0.5", "--family", "twist"],
            &["gk", "sieve", "--sweep", "large_sieve", "--budget", "full", "--out", "/tmp/x.csv"],
            &["gk", "verify", "--suite", "kloosterman", "--budget", "full", "--seed", "9"],
        ];
        for c in cases {
            round_trip(&parse(c));
        }
    }

    #[test]
    fn literal_errors_carry_positions() {
        let err = RunConfig::try_parse_from(["gk", "cusps", "--q0", "1+x"]).unwrap_err().to_string();
        assert!(err.contains("position 2"), "{err}");
        let err = RunConfig::try_parse_from(["gk", "btransform", "--u", "1.5+q"]).unwrap_err().to_string();
        assert!(err.contains("position 4"), "{err}");
    }

    #[test]
    fn suite_is_required_and_nonempty() {
        assert!(RunConfig::try_parse_from(["gk", "verify"]).is_err());
        assert!(RunConfig::try_parse_from(["gk", "verify", "--suite", ""]).is_err());
        assert!(RunConfig::try_parse_from(["gk", "verify", "--suite", "all"]).is_ok());
    }

    #[test]
    fn thread_counts() {
        assert_eq!(Threads::parse("auto").unwrap(), Threads::Auto);
        assert_eq!(Threads::parse("4").unwrap(), Threads::Fixed(4));
        assert!(Threads::parse("0").is_err());
        assert!(Threads::parse("x").is_err());
        assert!(Threads::Auto.count() >= 1);
    }
}
