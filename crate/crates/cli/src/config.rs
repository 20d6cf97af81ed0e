//! Line-oriented `key = value` configuration with command-line overrides.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use prandtl_core::fields::InitialDataSpec;
use prandtl_core::functionals::{Cutoffs, EnergyParams};
use prandtl_core::gevrey::{GevreyWeight, GEVREY_M, P_CORR};
use prandtl_core::linstab::{GrowthConfig, KX_SWEEP};
use prandtl_core::solver::SolverConfig;
use prandtl_core::{GridConfig, SpectralGrid};

use crate::CliError;

/// Subcommands of the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Linstab,
    Verify,
    Diagnose,
    Divergence,
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "simulate" => Self::Simulate,
            "linstab" => Self::Linstab,
            "verify" => Self::Verify,
            "diagnose" => Self::Diagnose,
            "divergence" => Self::Divergence,
            other => return Err(CliError::Usage(format!("unknown command `{other}`"))),
        })
    }
}

/// Output format of the per-sample trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Shear profile used by `linstab`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileChoice {
    Reference,
    Monotone,
    /// Whitespace-separated `y U` table.
    Table(PathBuf),
}

/// Every tunable of every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub data: InitialDataSpec,
    pub solver: SolverConfig,
    pub cutoffs: Cutoffs,
    pub energy: EnergyParams,
    pub alpha: f64,
    pub tau0: f64,
    pub gevrey_m: f64,
    pub p_corr: f64,
    pub profile: ProfileChoice,
    pub kx_list: Vec<usize>,
    pub growth: GrowthConfig,
    pub eta: f64,
    /// Snapshot read by `diagnose`.
    pub snapshot: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            data: InitialDataSpec::default(),
            solver: SolverConfig::default(),
            cutoffs: Cutoffs::default(),
            energy: EnergyParams::default(),
            alpha: 0.1,
            tau0: 1.0,
            gevrey_m: GEVREY_M,
            p_corr: P_CORR,
            profile: ProfileChoice::Reference,
            kx_list: KX_SWEEP.to_vec(),
            growth: GrowthConfig::default(),
            eta: 1e-10,
            snapshot: None,
            output_dir: PathBuf::from("out"),
            seed: prandtl_core::verify::CALIBRATION_SEED,
            format: Format::Csv,
        }
    }
}

/// Recognized keys, in dump order.
pub const KEYS: &[&str] = &[
    "nx",
    "ny",
    "y_max",
    "grading_c",
    "x_period",
    "a0_mean",
    "a0_amp",
    "a0_mode",
    "a0_phase",
    "sigma",
    "delta",
    "gamma",
    "s",
    "monotone",
    "epsilon",
    "n_galerkin",
    "dt",
    "t_end",
    "sample_every",
    "dealias",
    "tau0",
    "gevrey_m",
    "p_corr",
    "j_max",
    "y_window",
    "alpha",
    "chi_r1",
    "chi_r2",
    "psi_edge",
    "y_split",
    "exclusion_band",
    "profile",
    "kx_list",
    "horizon",
    "n_seeds",
    "fit_window",
    "linstab_dt",
    "eta",
    "snapshot",
    "output_dir",
    "seed",
    "format",
];

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}` as a value of `{key}`"))
}

fn flag(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("`{key}` expects true or false, got `{v}`")),
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "nx" => self.grid.nx = num(key, v)?,
            "ny" => self.grid.ny = num(key, v)?,
            "y_max" => self.grid.y_max = num(key, v)?,
            "grading_c" => self.grid.grading = num(key, v)?,
            "x_period" => self.grid.x_period = num(key, v)?,
            "a0_mean" => self.data.a0_mean = num(key, v)?,
            "a0_amp" => self.data.a0_amp = num(key, v)?,
            "a0_mode" => self.data.a0_mode = num(key, v)?,
            "a0_phase" => self.data.a0_phase = num(key, v)?,
            "sigma" => self.data.sigma = num(key, v)?,
            "delta" => self.data.delta = num(key, v)?,
            "gamma" => {
                self.data.gamma = num(key, v)?;
                self.energy.gamma = self.data.gamma;
            }
            "s" => {
                self.data.s = num(key, v)?;
                self.energy.s = self.data.s;
            }
            "monotone" => self.data.monotone = flag(key, v)?,
            "epsilon" => self.solver.epsilon = num(key, v)?,
            "n_galerkin" => self.solver.n_galerkin = num(key, v)?,
            "dt" => self.solver.dt = num(key, v)?,
            "t_end" => self.solver.t_end = num(key, v)?,
            "sample_every" => self.solver.sample_every = num(key, v)?,
            "dealias" => self.solver.dealias = flag(key, v)?,
            "tau0" => self.tau0 = num(key, v)?,
            "gevrey_m" => self.gevrey_m = num(key, v)?,
            "p_corr" => self.p_corr = num(key, v)?,
            "j_max" => self.energy.j_max = num(key, v)?,
            "y_window" => self.energy.y_window = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "chi_r1" => self.cutoffs.chi_r1 = num(key, v)?,
            "chi_r2" => self.cutoffs.chi_r2 = num(key, v)?,
            "psi_edge" => self.cutoffs.psi_edge = num(key, v)?,
            "y_split" => {
                self.cutoffs.y_split = num(key, v)?;
                self.data.y_split = self.cutoffs.y_split;
            }
            "exclusion_band" => self.cutoffs.exclusion_band = num(key, v)?,
            "profile" => {
                self.profile = match v {
                    "reference" => ProfileChoice::Reference,
                    "monotone" => ProfileChoice::Monotone,
                    path => ProfileChoice::Table(PathBuf::from(path)),
                }
            }
            "kx_list" => {
                self.kx_list = v
                    .split(',')
                    .map(|t| num::<usize>(key, t.trim()))
                    .collect::<Result<_, _>>()?
            }
            "horizon" => self.growth.horizon = num(key, v)?,
            "n_seeds" => self.growth.n_seeds = num(key, v)?,
            "fit_window" => self.growth.fit_window = num(key, v)?,
            "linstab_dt" => self.growth.dt = num(key, v)?,
            "eta" => self.eta = num(key, v)?,
            "snapshot" => self.snapshot = (!v.is_empty()).then(|| PathBuf::from(v)),
            "output_dir" => self.output_dir = PathBuf::from(v),
            "seed" => self.seed = num(key, v)?,
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(format!("format must be csv or json, got `{v}`")),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// The textual value of `key`, in a form [`set`](Self::set) reads back exactly.
    pub fn get(&self, key: &str) -> Option<String> {
        let f = |x: f64| format!("{x:e}");
        Some(match key {
            "nx" => self.grid.nx.to_string(),
            "ny" => self.grid.ny.to_string(),
            "y_max" => f(self.grid.y_max),
            "grading_c" => f(self.grid.grading),
            "x_period" => f(self.grid.x_period),
            "a0_mean" => f(self.data.a0_mean),
            "a0_amp" => f(self.data.a0_amp),
            "a0_mode" => self.data.a0_mode.to_string(),
            "a0_phase" => f(self.data.a0_phase),
            "sigma" => f(self.data.sigma),
            "delta" => f(self.data.delta),
            "gamma" => f(self.data.gamma),
            "s" => self.data.s.to_string(),
            "monotone" => self.data.monotone.to_string(),
            "epsilon" => f(self.solver.epsilon),
            "n_galerkin" => self.solver.n_galerkin.to_string(),
            "dt" => f(self.solver.dt),
            "t_end" => f(self.solver.t_end),
            "sample_every" => self.solver.sample_every.to_string(),
            "dealias" => self.solver.dealias.to_string(),
            "tau0" => f(self.tau0),
            "gevrey_m" => f(self.gevrey_m),
            "p_corr" => f(self.p_corr),
            "j_max" => self.energy.j_max.to_string(),
            "y_window" => f(self.energy.y_window),
            "alpha" => f(self.alpha),
            "chi_r1" => f(self.cutoffs.chi_r1),
            "chi_r2" => f(self.cutoffs.chi_r2),
            "psi_edge" => f(self.cutoffs.psi_edge),
            "y_split" => f(self.cutoffs.y_split),
            "exclusion_band" => f(self.cutoffs.exclusion_band),
            "profile" => match &self.profile {
                ProfileChoice::Reference => "reference".into(),
                ProfileChoice::Monotone => "monotone".into(),
                ProfileChoice::Table(p) => p.display().to_string(),
            },
            "kx_list" => self.kx_list.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            "horizon" => f(self.growth.horizon),
            "n_seeds" => self.growth.n_seeds.to_string(),
            "fit_window" => f(self.growth.fit_window),
            "linstab_dt" => f(self.growth.dt),
            "eta" => f(self.eta),
            "snapshot" => self.snapshot.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "output_dir" => self.output_dir.display().to_string(),
            "seed" => self.seed.to_string(),
            "format" => match self.format {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            },
            _ => return None,
        })
    }

    /// Applies a config file body; errors carry the 1-based line number.
    pub fn apply_file(&mut self, body: &str) -> Result<(), CliError> {
        for (n, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config {
                    line: Some(n + 1),
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(k.trim(), v.trim()).map_err(|msg| CliError::Config { line: Some(n + 1), msg })?;
        }
        Ok(())
    }

    /// Every key as `key = value`, one per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let v = self.get(k).expect("listed key");
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Range checks of every module, run before any computation.
    pub fn validate(&self) -> prandtl_core::Result<()> {
        let grid = SpectralGrid::new(&self.grid)?;
        self.data.validate()?;
        self.cutoffs.validate()?;
        self.energy.validate()?;
        GevreyWeight::new(self.tau0, self.gevrey_m, self.p_corr)?;
        if !(self.alpha >= 0.0 && self.alpha <= 1.0) {
            return Err(prandtl_core::Error::Range(format!("alpha = {} must lie in [0, 1]", self.alpha)));
        }
        if !(self.eta == 0.0 || (1e-12..=1e-6).contains(&self.eta)) {
            return Err(prandtl_core::Error::Range(format!(
                "eta = {} must be 0 or lie in [1e-12, 1e-6]",
                self.eta
            )));
        }
        self.growth.validate()?;
        self.solver.validate(&grid)
    }

    /// Checks that every wavenumber of `kx_list` is resolved by the grid.
    pub fn validate_kx(&self) -> prandtl_core::Result<()> {
        if self.kx_list.is_empty() || self.kx_list.iter().any(|&k| k == 0 || k > self.grid.nx / 2) {
            return Err(prandtl_core::Error::Range(format!(
                "kx_list entries must lie in [1, nx/2 = {}]",
                self.grid.nx / 2
            )));
        }
        Ok(())
    }
}

/// A parsed command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: RunConfig,
}

/// Parses `<command> [--config FILE] [--key value]…`; flags override the file.
pub fn parse_args<I: IntoIterator<Item = String>>(args: I) -> Result<Invocation, CliError> {
    let mut it = args.into_iter();
    let command: Command = it
        .next()
        .ok_or_else(|| CliError::Usage("missing command".into()))?
        .parse()?;
    let mut file = None;
    let mut flags = Vec::new();
    while let Some(a) = it.next() {
        let Some(key) = a.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument `{a}`")));
        };
        let value = it
            .next()
            .ok_or_else(|| CliError::Usage(format!("flag --{key} needs a value")))?;
        if key == "config" {
            file = Some(PathBuf::from(value));
        } else {
            flags.push((key.to_string(), value));
        }
    }
    let mut config = RunConfig::default();
    if let Some(path) = file {
        let body = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        config.apply_file(&body)?;
    }
    for (k, v) in flags {
        config.set(&k, &v).map_err(|msg| CliError::Config {
            line: None,
            msg: format!("--{k}: {msg}"),
        })?;
    }
    Ok(Invocation { command, config })
}

/// Usage text with the default of every key.
pub fn help() -> String {
    let mut s = String::from(
        "usage: prandtl-gevrey <simulate|linstab|verify|diagnose|divergence> [--config FILE] [--key value]...\n\n\
         Config files hold one `key = value` per line; `#` starts a comment.\n\
         PRANDTL_THREADS caps the number of worker threads.\n\nkeys and defaults:\n",
    );
    for line in RunConfig::default().dump().lines() {
        let _ = writeln!(s, "  {line}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_file_gives_defaults() {
        let mut c = RunConfig::default();
        c.apply_file("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "nx = 64\n").unwrap();
        let inv = parse_args(args(&["simulate", "--config", p.to_str().unwrap(), "--nx", "128"])).unwrap();
        assert_eq!(inv.config.grid.nx, 128);
        assert_eq!(inv.command, Command::Simulate);
    }

    #[test]
    fn negative_sigma_names_the_constraint() {
        let mut c = RunConfig::default();
        c.apply_file("sigma = -1").unwrap();
        let e = c.validate().unwrap_err();
        assert!(matches!(e, prandtl_core::Error::Range(_)));
        assert!(e.to_string().contains("sigma ≥ gamma + 1/2"), "{e}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut c = RunConfig::default();
        let e = c.apply_file("# header\nnx = 32\nbogus = 1\n").unwrap_err();
        assert_eq!(
            e,
            CliError::Config {
                line: Some(3),
                msg: "unknown key `bogus`".into()
            }
        );
        let e = c.apply_file("\n\nny 12").unwrap_err();
        assert!(matches!(e, CliError::Config { line: Some(3), .. }));
        let e = c.apply_file("dt = fast").unwrap_err();
        assert!(matches!(e, CliError::Config { line: Some(1), .. }));
    }

    #[test]
    fn unknown_flag_and_command_rejected() {
        assert!(matches!(parse_args(args(&["simulate", "--nope", "1"])), Err(CliError::Config { .. })));
        assert!(matches!(parse_args(args(&["fly"])), Err(CliError::Usage(_))));
        assert!(matches!(parse_args(args(&["verify", "--nx"])), Err(CliError::Usage(_))));
    }

    #[test]
    fn every_key_round_trips() {
        let c = RunConfig::default();
        for k in KEYS {
            let mut d = RunConfig::default();
            d.set(k, &c.get(k).unwrap()).unwrap();
            assert_eq!(d, c, "{k}");
        }
        assert_eq!(KEYS.len(), KEYS.iter().collect::<std::collections::BTreeSet<_>>().len());
    }

    proptest! {
        #[test]
        fn dump_parse_round_trip(
            nx_log in 2u32..8,
            eps in 0.0f64..1e-2,
            alpha in 0.0f64..1.0,
            seed in any::<u64>(),
            kx in proptest::collection::vec(1usize..64, 1..6),
            dealias in any::<bool>(),
        ) {
            let mut c = RunConfig::default();
            c.grid.nx = 1 << nx_log;
            c.solver.epsilon = eps;
            c.alpha = alpha;
            c.seed = seed;
            c.kx_list = kx;
            c.solver.dealias = dealias;
            c.profile = ProfileChoice::Table(PathBuf::from("profiles/u.txt"));
            c.format = Format::Json;
            let mut d = RunConfig::default();
            d.apply_file(&c.dump()).unwrap();
            prop_assert_eq!(d, c);
        }
    }
}
