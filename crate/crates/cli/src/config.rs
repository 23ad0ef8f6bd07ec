//! Flat `key = value` configuration files.

use std::path::PathBuf;
use std::str::FromStr;

use uzawa_ritz_core::piecewise::{Breakpoints, PiecewiseConstant};
use uzawa_ritz_core::saddle::PerturbationMode;
use uzawa_ritz_core::transport::{InitScheme, TrainConfig};

use crate::CliError;

/// Environment variable that replaces the configured `seed`.
pub const SEED_ENV: &str = "UZAWA_RITZ_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Verify,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// Gaussian operator, random SPD Riesz maps, consistent load.
    Random,
    /// Orthonormal operator with `m = M = 1`.
    Isotropic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seeds: Vec<u64>,
    pub dims: Vec<(usize, usize)>,
    pub problem: ProblemKind,
    /// Step size in units of `1/M²`.
    pub tau: f64,
    /// Absent values default to 0.3 of the admissible budget each.
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub perturbation: PerturbationMode,
    pub alpha: f64,
    pub omega: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seeds: vec![1, 2, 3, 4, 5],
            dims: vec![(8, 5)],
            problem: ProblemKind::Random,
            tau: 1.0,
            delta: None,
            epsilon: None,
            perturbation: PerturbationMode::ErrorAligned,
            alpha: 0.5,
            omega: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub alphas: Vec<f64>,
    pub omegas: Vec<f64>,
    pub taus: Vec<f64>,
    pub mus: Vec<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let tenths: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        SpectrumConfig {
            alphas: tenths.clone(),
            omegas: tenths,
            taus: (0..9).map(|i| 0.1 + 0.225 * i as f64).collect(),
            mus: (1..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub output_dir: PathBuf,
    pub train: TrainConfig,
    pub source_breaks: Vec<f64>,
    pub source_values: Vec<f64>,
    pub sweep_taus: Vec<f64>,
    pub verify: VerifyConfig,
    pub spectrum: SpectrumConfig,
}

pub const DEFAULT_SWEEP_TAUS: [f64; 8] = [0.1, 0.3, 0.5, 0.8, 1.0, 1.5, 1.8, 2.0];

impl CliConfig {
    pub fn new(command: Command) -> Self {
        CliConfig {
            command,
            output_dir: PathBuf::from("."),
            train: TrainConfig::default(),
            source_breaks: Vec::new(),
            source_values: vec![1.0],
            sweep_taus: DEFAULT_SWEEP_TAUS.to_vec(),
            verify: VerifyConfig::default(),
            spectrum: SpectrumConfig::default(),
        }
    }

    pub fn source(&self) -> Result<PiecewiseConstant, CliError> {
        let breaks = Breakpoints::new(self.source_breaks.iter().copied())?;
        Ok(PiecewiseConstant::new(breaks, self.source_values.clone())?)
    }

    /// Replaces `seed` with the value of [`SEED_ENV`] when it is set.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<(), CliError> {
        if let Some(v) = value {
            self.train.seed = v.trim().parse().map_err(|_| CliError::Config {
                line: 0,
                msg: format!("{SEED_ENV} is not an unsigned integer: {v:?}"),
            })?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), String> {
        if self.command == Command::Sweep && self.sweep_taus.is_empty() {
            return Err("sweep_taus must not be empty".into());
        }
        if let Some(&(n, m)) = self.verify.dims.iter().find(|&&(n, m)| m == 0 || n < m) {
            return Err(format!("verify_dims {n}x{m} must satisfy n_V >= m_U >= 1"));
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse()
        .map_err(|_| format!("cannot parse {v:?} as a number"))
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(s.trim())).collect()
}

fn parse_dims(v: &str) -> Result<Vec<(usize, usize)>, String> {
    v.split(',')
        .map(|pair| {
            let (n, m) = pair
                .trim()
                .split_once('x')
                .ok_or_else(|| format!("expected dims like 8x5, got {pair:?}"))?;
            Ok((parse_num(n.trim())?, parse_num(m.trim())?))
        })
        .collect()
}

/// Parses a configuration file. Every error carries its 1-based line number;
/// a missing `command` is reported at line 0.
pub fn parse_config(text: &str) -> Result<CliConfig, CliError> {
    let mut cfg = CliConfig::new(Command::Solve);
    let mut command = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::Config { line, msg };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let t = &mut cfg.train;
        let v = &mut cfg.verify;
        let s = &mut cfg.spectrum;
        let result: Result<(), String> = (|| {
            match key {
                "command" => {
                    command = Some(match value {
                        "solve" => Command::Solve,
                        "sweep" => Command::Sweep,
                        "verify" => Command::Verify,
                        "spectrum" => Command::Spectrum,
                        other => return Err(format!("unknown command {other:?}")),
                    })
                }
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "tau" => t.tau = parse_num(value)?,
                "alpha" => t.alpha = parse_num(value)?,
                "omega" => t.omega = parse_num(value)?,
                "n_r_inner" => t.n_r_inner = parse_num(value)?,
                "n_u_inner" => t.n_u_inner = parse_num(value)?,
                "outer_iters" => t.outer_iters = parse_num(value)?,
                "n_neurons_r" => t.n_neurons_r = parse_num(value)?,
                "n_neurons_u" => t.n_neurons_u = parse_num(value)?,
                "ridge" => t.ridge = parse_num(value)?,
                "seed" => t.seed = parse_num(value)?,
                "init_scheme" => {
                    t.init_scheme = match value {
                        "equispaced-zero" => InitScheme::EquispacedZero,
                        "random-uniform" => InitScheme::RandomUniform,
                        other => return Err(format!("unknown init_scheme {other:?}")),
                    }
                }
                "source_breaks" => cfg.source_breaks = parse_list(value)?,
                "source_values" => cfg.source_values = parse_list(value)?,
                "sweep_taus" => cfg.sweep_taus = parse_list(value)?,
                "verify_seeds" => v.seeds = parse_list(value)?,
                "verify_dims" => v.dims = parse_dims(value)?,
                "verify_problem" => {
                    v.problem = match value {
                        "random" => ProblemKind::Random,
                        "isotropic" => ProblemKind::Isotropic,
                        other => return Err(format!("unknown verify_problem {other:?}")),
                    }
                }
                "verify_tau" => v.tau = parse_num(value)?,
                "verify_delta" => v.delta = Some(parse_num(value)?),
                "verify_epsilon" => v.epsilon = Some(parse_num(value)?),
                "verify_perturbation" => {
                    v.perturbation = match value {
                        "aligned" => PerturbationMode::ErrorAligned,
                        "random" => PerturbationMode::RandomDirection,
                        other => return Err(format!("unknown verify_perturbation {other:?}")),
                    }
                }
                "verify_alpha" => v.alpha = parse_num(value)?,
                "verify_omega" => v.omega = parse_num(value)?,
                "spectrum_alphas" => s.alphas = parse_list(value)?,
                "spectrum_omegas" => s.omegas = parse_list(value)?,
                "spectrum_taus" => s.taus = parse_list(value)?,
                "spectrum_mus" => s.mus = parse_list(value)?,
                other => return Err(format!("unknown key {other:?}")),
            }
            Ok(())
        })();
        result.map_err(err)?;
    }
    cfg.command = command.ok_or(CliError::Config {
        line: 0,
        msg: "missing required key `command`".into(),
    })?;
    cfg.validate()
        .map_err(|msg| CliError::Config { line: 0, msg })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_command_alone() {
        let cfg = parse_config("command = solve\n").unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.train, TrainConfig::default());
        assert_eq!(cfg.train.tau, 0.5);
        assert_eq!(cfg.train.ridge, 1e-10);
        assert_eq!(cfg.train.seed, 42);
        assert_eq!(cfg.sweep_taus, DEFAULT_SWEEP_TAUS);
        assert_eq!(cfg.verify.seeds.len(), 5);
        assert_eq!(cfg.verify.dims, vec![(8, 5)]);
    }

    #[test]
    fn single_override() {
        let cfg = parse_config("command = solve\ntau = 0.3 # smaller step\n").unwrap();
        assert_eq!(cfg.train.tau, 0.3);
        let expected = TrainConfig {
            tau: 0.3,
            ..TrainConfig::default()
        };
        assert_eq!(cfg.train, expected);
    }

    #[test]
    fn malformed_number_names_the_line() {
        let err = parse_config("# header\ncommand = solve\ntau = abc\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config("command = solve\n\nlearning_rate = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn command_is_required() {
        let err = parse_config("tau = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("command"));
    }

    #[test]
    fn lists_and_dims() {
        let cfg = parse_config(
            "command = verify\nverify_dims = 8x5, 12x7\nverify_seeds = 3\nsweep_taus = 0.5, 1\n",
        )
        .unwrap();
        assert_eq!(cfg.verify.dims, vec![(8, 5), (12, 7)]);
        assert_eq!(cfg.verify.seeds, vec![3]);
        assert_eq!(cfg.sweep_taus, vec![0.5, 1.0]);
    }

    #[test]
    fn bad_dims_are_rejected() {
        assert!(parse_config("command = verify\nverify_dims = 4x5\n").is_err());
        assert!(parse_config("command = verify\nverify_dims = 4\n").is_err());
    }

    #[test]
    fn empty_sweep_is_rejected() {
        assert!(parse_config("command = sweep\nsweep_taus =\n").is_err());
    }

    #[test]
    fn seed_override() {
        let mut cfg = parse_config("command = solve\nseed = 1\n").unwrap();
        cfg.apply_seed_override(Some("77")).unwrap();
        assert_eq!(cfg.train.seed, 77);
        assert!(cfg.apply_seed_override(Some("x")).is_err());
        cfg.apply_seed_override(None).unwrap();
        assert_eq!(cfg.train.seed, 77);
    }

    #[test]
    fn piecewise_source() {
        let cfg =
            parse_config("command = solve\nsource_breaks = 0.5\nsource_values = 2, 0\n").unwrap();
        let f = cfg.source().unwrap();
        assert_eq!(f.eval(0.25).unwrap(), 2.0);
        assert_eq!(f.eval(0.75).unwrap(), 0.0);
    }
}
