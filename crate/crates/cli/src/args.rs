use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use majorana_core::bethe::Side;
use majorana_core::model::gamma_ep;
use majorana_core::spectral::Tolerances;
use serde::Serialize;

use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "majorana-pt", version, about = "PT-symmetric Kitaev/SSH chains: spectra, zero modes, Bethe roots, mode census")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Dense spectrum with biorthogonal norms and mode classes
    Spectrum,
    /// Closed-form coalescing zero mode
    ZeroMode,
    /// Roots of the quantization equation
    Bethe,
    /// Mode census (n_I, n_EP, n_S) at one point
    Census,
    /// Census over an (N, mu) grid on the exceptional-point locus
    Sweep,
    /// Run the verification suite
    Verify,
    /// Zero-mode distributions as stacked stem plots
    Plot,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// N-site non-Hermitian SSH chain
    Ssh,
    /// 2N-dimensional Majorana ring
    Ring,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideArg {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaArg {
    Auto,
    Value(f64),
}

impl FromStr for GammaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaArg::Auto);
        }
        s.parse::<f64>()
            .map(GammaArg::Value)
            .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct Options {
    /// Number of sites (even, >= 4)
    #[arg(long = "N", global = true)]
    pub n_sites: Option<usize>,
    /// Inter-cell coupling mu > 0
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Ring hopping amplitude
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Ring pairing amplitude
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Boundary gain/loss, or `auto` for mu^(1 - N/2)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<GammaArg>,
    /// Sizes: `6,8,10` or `start:end:step`
    #[arg(long = "N-grid", global = true)]
    pub n_grid: Option<String>,
    /// Couplings: `0.5,1.5` or `start:end:step`
    #[arg(long = "mu-grid", global = true)]
    pub mu_grid: Option<String>,
    /// Output file (written atomically); standard output if absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long = "tol-residual", global = true)]
    pub tol_residual: Option<f64>,
    #[arg(long = "tol-class", global = true)]
    pub tol_class: Option<f64>,
    #[arg(long = "tol-ep", global = true)]
    pub tol_ep: Option<f64>,
    #[arg(long = "tol-root", global = true)]
    pub tol_root: Option<f64>,
    /// Flat `key = value` file with the same keys as the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    /// Zero mode of h (right) or of its adjoint (left)
    #[arg(long, global = true, value_enum)]
    pub side: Option<SideArg>,
    /// Verification filter: criterion number, name, or `six-site`
    #[arg(long, global = true)]
    pub only: Option<String>,
    /// Include eigenvectors in JSON output
    #[arg(long, global = true)]
    pub vectors: bool,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T, CliError> {
    T::from_str(value, true).map_err(|_| CliError::Usage(format!("config key `{key}`: invalid value `{value}`")))
}

impl Options {
    /// Fills options not given on the command line from `key = value`
    /// lines. Blank lines and `#` comments are skipped.
    pub fn merge_config(&mut self, text: &str) -> Result<(), CliError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim().trim_start_matches("--"), v.trim()))
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
            macro_rules! fill {
                ($field:expr, $parsed:expr) => {
                    if $field.is_none() {
                        $field = Some($parsed);
                    }
                };
            }
            match key {
                "N" => fill!(self.n_sites, parse_value(key, value)?),
                "mu" => fill!(self.mu, parse_value(key, value)?),
                "t" => fill!(self.t, parse_value(key, value)?),
                "delta" => fill!(self.delta, parse_value(key, value)?),
                "gamma" => fill!(self.gamma, value.parse().map_err(CliError::Usage)?),
                "N-grid" => fill!(self.n_grid, value.to_string()),
                "mu-grid" => fill!(self.mu_grid, value.to_string()),
                "out" => fill!(self.out, PathBuf::from(value)),
                "format" => fill!(self.format, parse_enum(key, value)?),
                "tol-residual" => fill!(self.tol_residual, parse_value(key, value)?),
                "tol-class" => fill!(self.tol_class, parse_value(key, value)?),
                "tol-ep" => fill!(self.tol_ep, parse_value(key, value)?),
                "tol-root" => fill!(self.tol_root, parse_value(key, value)?),
                "model" => fill!(self.model, parse_enum(key, value)?),
                "side" => fill!(self.side, parse_enum(key, value)?),
                "only" => fill!(self.only, value.to_string()),
                "vectors" => self.vectors |= parse_value::<bool>(key, value)?,
                _ => return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        Ok(())
    }
}

/// `a,b,c` or inclusive `start:end:step`.
pub fn parse_grid<T>(text: &str) -> Result<Vec<T>, CliError>
where
    T: FromStr + Copy + Into<f64>,
{
    let bad = || CliError::Usage(format!("invalid grid `{text}`"));
    if let Some((start, rest)) = text.split_once(':') {
        let (end, step) = rest.split_once(':').ok_or_else(bad)?;
        let (a, b, h): (f64, f64, f64) = (
            start.trim().parse::<T>().map_err(|_| bad())?.into(),
            end.trim().parse::<T>().map_err(|_| bad())?.into(),
            step.trim().parse::<T>().map_err(|_| bad())?.into(),
        );
        if !(h > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / h + 1e-9).floor() as usize + 1;
        return (0..count)
            .map(|i| format_grid_point(a + i as f64 * h).parse::<T>().map_err(|_| bad()))
            .collect();
    }
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| bad()))
        .collect()
}

/// Rounds away accumulated step error so `0.1:0.3:0.1` yields `0.3`.
fn format_grid_point(x: f64) -> String {
    let r = (x * 1e12).round() / 1e12;
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Fully resolved settings, echoed into every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub mu: f64,
    pub t: f64,
    pub delta: f64,
    /// `auto` or `value`.
    pub gamma_mode: &'static str,
    pub gamma: f64,
    #[serde(rename = "N_grid")]
    pub n_grid: Vec<usize>,
    pub mu_grid: Vec<f64>,
    pub tolerances: Tolerances,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<String>,
    pub vectors: bool,
    #[serde(skip)]
    pub side_value: Side,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn gamma_is_auto(&self) -> bool {
        self.gamma_mode == "auto"
    }
}

fn default_format(command: Command) -> Format {
    match command {
        Command::Verify => Format::Text,
        Command::Plot => Format::Svg,
        _ => Format::Json,
    }
}

pub fn threads_from_env(value: Option<String>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) if v.trim().is_empty() => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("MAJORANA_PT_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn resolve(command: Command, mut opts: Options, threads: Option<usize>) -> Result<RunConfig, CliError> {
    if let Some(path) = opts.config.clone() {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        opts.merge_config(&text)?;
    }
    let plot = command == Command::Plot;
    let n_sites = opts.n_sites.unwrap_or(6);
    let mu = opts.mu.unwrap_or(if plot { 1.5 } else { 2.0 });
    let gamma_arg = opts.gamma.unwrap_or(GammaArg::Auto);
    let (gamma_mode, gamma) = match gamma_arg {
        GammaArg::Auto => ("auto", gamma_ep(mu, n_sites).map_err(|e| CliError::Usage(e.to_string()))?),
        GammaArg::Value(g) => ("value", g),
    };
    let default_n_grid = if plot { "14,22,30" } else { "6:30:2" };
    let n_grid = parse_grid::<u32>(opts.n_grid.as_deref().unwrap_or(default_n_grid))?
        .into_iter()
        .map(|n| n as usize)
        .collect();
    let mu_grid = parse_grid::<f64>(opts.mu_grid.as_deref().unwrap_or("0.3,0.5,0.8,1.5,2,3"))?;
    let mut tolerances = Tolerances::default();
    for (slot, value) in [
        (&mut tolerances.residual, opts.tol_residual),
        (&mut tolerances.class, opts.tol_class),
        (&mut tolerances.ep, opts.tol_ep),
        (&mut tolerances.root, opts.tol_root),
    ] {
        if let Some(v) = value {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("tolerances must be finite and non-negative, got {v}")));
            }
            *slot = v;
        }
    }
    let side_value = match opts.side.unwrap_or(SideArg::Right) {
        SideArg::Right => Side::Right,
        SideArg::Left => Side::Left,
    };
    Ok(RunConfig {
        command,
        model: opts.model.unwrap_or(ModelKind::Ssh),
        n_sites,
        mu,
        t: opts.t.unwrap_or(1.0),
        delta: opts.delta.unwrap_or(1.0),
        gamma_mode,
        gamma,
        n_grid,
        mu_grid,
        tolerances,
        format: opts.format.unwrap_or(default_format(command)),
        side: (command == Command::ZeroMode).then_some(match side_value {
            Side::Right => "right",
            Side::Left => "left",
        }),
        only: opts.only,
        vectors: opts.vectors,
        side_value,
        out: opts.out,
        threads,
    })
}
