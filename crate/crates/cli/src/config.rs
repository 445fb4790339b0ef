//! Argument surface, config-file merging, and the string forms of families
//! and operators.
//!
//! Every tunable is an `Option` at parse time so a `--config` file (plain
//! `key=value` lines, keyed by the long flag names) can fill whatever the
//! command line left unset; explicit flags always win. Defaults are applied
//! after the merge, in `commands`.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use randmarket_core::operators::{KernelCoefficients, OperatorParams};
use randmarket_core::Family;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "randmarket",
    version,
    about = "Pair-exchange market models: a particle gas and its density-space operators"
)]
pub struct Cli {
    /// Plain-text key=value defaults (keys are the long flag names);
    /// explicit flags take precedence. Unknown keys are ignored.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Drive a density through repeated operator applications and trace
    /// norm, mean, entropy, and distance to the matched equilibrium.
    Iterate(IterateArgs),
    /// Run the particle gas, bin it, and compare against the equilibrium
    /// density the operators predict.
    Simulate(SimulateArgs),
    /// Middle-class statistics of confined equilibria, single point or a
    /// fixed-mean scan over the confinement strength.
    MiddleClass(MiddleClassArgs),
}

#[derive(Args, Debug)]
pub struct IterateArgs {
    /// Initial density: exp:RATE | gamma1 | rect:LO,HI | pareto | truncexp:RATE,CAP
    #[arg(long)]
    pub family: Option<String>,
    /// Operator: T | Tlambda:LAMBDA | Tcap:CAP | TK:EPS
    #[arg(long)]
    pub op: Option<String>,
    /// Number of applications [default: 10]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Grid points [default: 4000]
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Grid upper end [default: 60; 2000 for pareto]
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Entropy decreases beyond this are reported as violations [default: 1e-6]
    #[arg(long)]
    pub slack: Option<f64>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Population size [default: 100000]
    #[arg(long)]
    pub agents: Option<usize>,
    /// Interaction rounds [default: 10000000]
    #[arg(long)]
    pub trades: Option<u64>,
    /// RNG seed; required, so every run is reproducible on purpose
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability a drawn pair actually trades [default: 1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Refuse merges whose pooled stock exceeds this
    #[arg(long)]
    pub cap: Option<f64>,
    /// Starting stock per agent [default: 1]
    #[arg(long)]
    pub init_money: Option<f64>,
    /// Histogram grid points [default: 301]
    #[arg(long)]
    pub hist_n: Option<usize>,
    /// Histogram upper end [default: cap, else 10 * init-money]
    #[arg(long)]
    pub hist_x_max: Option<f64>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MiddleClassArgs {
    /// Equilibrium rate for a single-point report (with --cap); --a also works
    #[arg(long, visible_alias = "a")]
    pub rate: Option<f64>,
    /// Confinement cap for a single-point report (with --rate)
    #[arg(long)]
    pub cap: Option<f64>,
    /// Fixed-mean scan, written as m=MEAN (with --aL)
    #[arg(long)]
    pub scan: Option<String>,
    /// Comma-separated confinement strengths rate*cap, strictly increasing
    #[arg(long = "aL")]
    pub al: Option<String>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Key=value defaults loaded from `--config`.
pub struct ConfigMap(HashMap<String, String>);

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let pairs = randmarket_core::io::read_kv(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (k, v) in pairs {
                map.insert(k, v);
            }
        }
        Ok(Self(map))
    }

    /// Fill `slot` from the config when the flag was absent.
    pub fn fill<T: FromStr>(&self, slot: &mut Option<T>, key: &str) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if slot.is_none() {
            if let Some(raw) = self.0.get(key) {
                *slot = Some(
                    raw.parse()
                        .map_err(|e| anyhow!("config {key}={raw}: {e}"))?,
                );
            }
        }
        Ok(())
    }
}

impl IterateArgs {
    pub fn merge(&mut self, cfg: &ConfigMap) -> Result<()> {
        cfg.fill(&mut self.family, "family")?;
        cfg.fill(&mut self.op, "op")?;
        cfg.fill(&mut self.steps, "steps")?;
        cfg.fill(&mut self.grid_n, "grid-n")?;
        cfg.fill(&mut self.x_max, "x-max")?;
        cfg.fill(&mut self.slack, "slack")?;
        cfg.fill(&mut self.out, "out")?;
        Ok(())
    }
}

impl SimulateArgs {
    pub fn merge(&mut self, cfg: &ConfigMap) -> Result<()> {
        cfg.fill(&mut self.agents, "agents")?;
        cfg.fill(&mut self.trades, "trades")?;
        cfg.fill(&mut self.seed, "seed")?;
        cfg.fill(&mut self.lambda, "lambda")?;
        cfg.fill(&mut self.cap, "cap")?;
        cfg.fill(&mut self.init_money, "init-money")?;
        cfg.fill(&mut self.hist_n, "hist-n")?;
        cfg.fill(&mut self.hist_x_max, "hist-x-max")?;
        cfg.fill(&mut self.out, "out")?;
        Ok(())
    }
}

impl MiddleClassArgs {
    pub fn merge(&mut self, cfg: &ConfigMap) -> Result<()> {
        cfg.fill(&mut self.rate, "rate")?;
        cfg.fill(&mut self.cap, "cap")?;
        cfg.fill(&mut self.scan, "scan")?;
        cfg.fill(&mut self.al, "aL")?;
        cfg.fill(&mut self.out, "out")?;
        Ok(())
    }
}

/// Parse a family string: `exp:RATE`, `gamma1`, `rect:LO,HI`, `pareto`,
/// `truncexp:RATE,CAP`.
pub fn parse_family(s: &str) -> Result<Family> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (s, None),
    };
    let nums = |rest: Option<&str>, count: usize| -> Result<Vec<f64>> {
        let rest = rest.ok_or_else(|| anyhow!("family '{name}' needs {count} parameter(s)"))?;
        let vals: Vec<f64> = rest
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("bad number '{t}' in family '{s}'"))
            })
            .collect::<Result<_>>()?;
        if vals.len() != count {
            bail!(
                "family '{name}' needs {count} parameter(s), got {}",
                vals.len()
            );
        }
        Ok(vals)
    };
    let none = |rest: Option<&str>| -> Result<()> {
        if rest.is_some() {
            bail!("family '{name}' takes no parameters");
        }
        Ok(())
    };
    match name {
        "exp" => {
            let v = nums(rest, 1)?;
            Ok(Family::Exponential { rate: v[0] })
        }
        "gamma1" => {
            none(rest)?;
            Ok(Family::Gamma1)
        }
        "rect" => {
            let v = nums(rest, 2)?;
            Ok(Family::Rectangular { lo: v[0], hi: v[1] })
        }
        "pareto" => {
            none(rest)?;
            Ok(Family::ParetoLike)
        }
        "truncexp" => {
            let v = nums(rest, 2)?;
            Ok(Family::TruncatedExponential { rate: v[0], cap: v[1] })
        }
        other => bail!(
            "unknown family '{other}' (expected exp:RATE, gamma1, rect:LO,HI, pareto, truncexp:RATE,CAP)"
        ),
    }
}

/// Parsed operator request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpSpec {
    Plain,
    Damped(f64),
    Capped(f64),
    Kernel(f64),
}

/// Parse an operator string: `T`, `Tlambda:LAMBDA`, `Tcap:CAP`, `TK:EPS`.
pub fn parse_op(s: &str) -> Result<OpSpec> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (s, None),
    };
    let one = |rest: Option<&str>| -> Result<f64> {
        let rest = rest.ok_or_else(|| anyhow!("operator '{name}' needs a parameter"))?;
        rest.trim()
            .parse::<f64>()
            .map_err(|_| anyhow!("bad number '{rest}' in operator '{s}'"))
    };
    match name {
        "T" => {
            if rest.is_some() {
                bail!("operator 'T' takes no parameters");
            }
            Ok(OpSpec::Plain)
        }
        "Tlambda" => Ok(OpSpec::Damped(one(rest)?)),
        "Tcap" => Ok(OpSpec::Capped(one(rest)?)),
        "TK" => Ok(OpSpec::Kernel(one(rest)?)),
        other => bail!("unknown operator '{other}' (expected T, Tlambda:LAMBDA, Tcap:CAP, TK:EPS)"),
    }
}

impl OpSpec {
    pub fn to_params(self) -> Result<OperatorParams> {
        Ok(match self {
            OpSpec::Plain => OperatorParams::plain(),
            OpSpec::Damped(l) => OperatorParams::damped(l),
            OpSpec::Capped(c) => OperatorParams::capped(c),
            OpSpec::Kernel(eps) => OperatorParams::kernel(KernelCoefficients::solve(2, eps)?),
        })
    }

    pub fn cap(&self) -> Option<f64> {
        match self {
            OpSpec::Capped(c) => Some(*c),
            _ => None,
        }
    }
}
