//! Command-line front end: configuration parsing, dispatch to the
//! simulators and CSV / plot-data output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::classical::{propagate_distribution, ClassicalGameParams, StrategySchedule};
use crate::cpmap::{
    run_density_with_distributions, sample_unitary_trajectory, DEFAULT_DENSITY_BUDGET,
};
use crate::error::{Error, Result};
use crate::kspace::{reconstruct_positions, KGrid, KSpacePropagator, KSpaceState};
use crate::math::{default_coins, su2, CoinSet, Su2Params};
use crate::measurement::{average_trajectories, run_d_measured, run_dc_measured};
use crate::par::Exec;
use crate::quantum_walk::{run_observed, run_with_distributions};
use crate::series::{distribution_csv, fmt_num, CapitalSeries, DistributionSnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Game {
    Classical,
    Quantum,
    Cpmap,
    TrajD,
    TrajDc,
    Kspace,
}

impl Game {
    fn name(self) -> &'static str {
        match self {
            Game::Classical => "classical",
            Game::Quantum => "quantum",
            Game::Cpmap => "cpmap",
            Game::TrajD => "traj-d",
            Game::TrajDc => "traj-dc",
            Game::Kspace => "kspace",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "parrondo",
    version,
    about = "Classical and quantum Parrondo game simulator"
)]
struct Args {
    /// Which game to simulate.
    #[arg(long, value_enum)]
    game: Option<Game>,
    /// Number of steps (default 1000).
    #[arg(long)]
    steps: Option<usize>,
    /// Coin bias offset (default 0.01).
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Classical schedule: A, B, a pattern such as AABB, random or random:<p>.
    #[arg(long)]
    schedule: Option<String>,
    /// Initial strategy register bit.
    #[arg(long)]
    initial_d: Option<usize>,
    /// Initial coin register bit.
    #[arg(long)]
    initial_c: Option<usize>,
    /// Monte Carlo samples (default 5000).
    #[arg(long)]
    samples: Option<usize>,
    /// Base RNG seed (default 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Momentum grid size for the kspace game.
    #[arg(long)]
    k_grid: Option<usize>,
    /// Output CSV file, or directory with --bundle. Stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run every initial state (or every schedule) and write one CSV
    /// each plus `plot.dat` into the --out directory.
    #[arg(long)]
    bundle: bool,
    /// Also write the per-step position distribution (`n,x,probability`).
    #[arg(long)]
    dump_distribution: Option<PathBuf>,
    /// Longest exact density run for cpmap; longer runs sample trajectories.
    #[arg(long)]
    density_budget: Option<usize>,
    /// Override coin A as `theta,alpha,beta`.
    #[arg(long, allow_hyphen_values = true)]
    coin_a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    coin_b0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    coin_b1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    coin_u: Option<String>,
}

/// Validated settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub game: Game,
    pub steps: usize,
    pub epsilon: f64,
    pub schedule: StrategySchedule,
    pub initial_d: usize,
    pub initial_c: usize,
    pub samples: usize,
    pub seed: u64,
    pub k_grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub bundle: bool,
    pub dump_distribution: Option<PathBuf>,
    pub density_budget: usize,
    /// Overrides for `[A, B0, B1, U]`.
    pub coin_overrides: [Option<Su2Params>; 4],
}

impl RunConfig {
    pub fn coins(&self) -> Result<CoinSet> {
        let mut coins = default_coins(self.epsilon)?;
        let slots = [&mut coins.a, &mut coins.b0, &mut coins.b1, &mut coins.u];
        for (slot, over) in slots.into_iter().zip(self.coin_overrides) {
            if let Some(p) = over {
                *slot = su2(p);
            }
        }
        Ok(coins)
    }
}

const KEYS: &[&str] = &[
    "game",
    "steps",
    "epsilon",
    "schedule",
    "initial-d",
    "initial-c",
    "samples",
    "seed",
    "k-grid",
    "out",
    "bundle",
    "dump-distribution",
    "density-budget",
    "coin-a",
    "coin-b0",
    "coin-b1",
    "coin-u",
];

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped; `_` and `-` are interchangeable in keys.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected `key = value`", no + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "config line {}: unknown key `{}`",
                no + 1,
                k.trim()
            )));
        }
        map.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(map)
}

/// Parses command-line arguments (the first element is the program name),
/// merging in the optional config file.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(args)
        .map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    build_config(args)
}

fn value<T: std::str::FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        })
        .transpose()
}

fn parse_su2(text: &str) -> Result<Su2Params> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("coin override `{text}` is not `theta,alpha,beta`")))?;
    match parts.as_slice() {
        [t, a, b] => Su2Params::new(*t, *a, *b),
        _ => Err(Error::Config(format!(
            "coin override `{text}` is not `theta,alpha,beta`"
        ))),
    }
}

fn build_config(args: Args) -> Result<RunConfig> {
    let file =
        match &args.config {
            Some(path) => parse_config_file(&fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?)?,
            None => BTreeMap::new(),
        };
    let game = match args.game {
        Some(g) => g,
        None => match file.get("game") {
            Some(v) => {
                Game::from_str(v, true).map_err(|_| Error::Config(format!("unknown game `{v}`")))?
            }
            None => return Err(Error::Config("missing required option --game".into())),
        },
    };
    let schedule: Option<String> = value(args.schedule, &file, "schedule")?;
    let initial_d: Option<usize> = value(args.initial_d, &file, "initial-d")?;
    let initial_c: Option<usize> = value(args.initial_c, &file, "initial-c")?;
    let samples: Option<usize> = value(args.samples, &file, "samples")?;
    let k_grid: Option<usize> = value(args.k_grid, &file, "k-grid")?;
    let density_budget: Option<usize> = value(args.density_budget, &file, "density-budget")?;
    let bundle = args.bundle || value::<bool>(None, &file, "bundle")?.unwrap_or(false);

    let conflict = |opt: &str| {
        Err(Error::Config(format!(
            "option {opt} does not apply to game {}",
            game.name()
        )))
    };
    if schedule.is_some() && game != Game::Classical {
        return conflict("--schedule");
    }
    if k_grid.is_some() && game != Game::Kspace {
        return conflict("--k-grid");
    }
    if initial_d.is_some() && matches!(game, Game::Classical | Game::Cpmap) {
        return conflict("--initial-d");
    }
    if initial_c.is_some() && game == Game::Classical {
        return conflict("--initial-c");
    }
    if samples.is_some() && !matches!(game, Game::Cpmap | Game::TrajD | Game::TrajDc) {
        return conflict("--samples");
    }
    if density_budget.is_some() && game != Game::Cpmap {
        return conflict("--density-budget");
    }

    let mut coin_overrides = [None; 4];
    for (i, (flag, key)) in [
        (args.coin_a, "coin-a"),
        (args.coin_b0, "coin-b0"),
        (args.coin_b1, "coin-b1"),
        (args.coin_u, "coin-u"),
    ]
    .into_iter()
    .enumerate()
    {
        if let Some(text) = flag.or_else(|| file.get(key).cloned()) {
            coin_overrides[i] = Some(parse_su2(&text)?);
        }
    }
    if game == Game::Classical && coin_overrides.iter().any(Option::is_some) {
        return conflict("--coin-*");
    }

    let cfg = RunConfig {
        game,
        steps: value(args.steps, &file, "steps")?.unwrap_or(1000),
        epsilon: value(args.epsilon, &file, "epsilon")?.unwrap_or(0.01),
        schedule: match schedule {
            Some(s) => s.parse()?,
            None => StrategySchedule::RandomMixture(0.5),
        },
        initial_d: initial_d.unwrap_or(0),
        initial_c: initial_c.unwrap_or(0),
        samples: samples.unwrap_or(5000),
        seed: value(args.seed, &file, "seed")?.unwrap_or(42),
        k_grid,
        out: args.out.or_else(|| file.get("out").map(PathBuf::from)),
        bundle,
        dump_distribution: args
            .dump_distribution
            .or_else(|| file.get("dump-distribution").map(PathBuf::from)),
        density_budget: density_budget.unwrap_or(DEFAULT_DENSITY_BUDGET),
        coin_overrides,
    };
    if cfg.initial_d > 1 || cfg.initial_c > 1 {
        return Err(Error::Config(
            "initial register values must be 0 or 1".into(),
        ));
    }
    if cfg.samples == 0 {
        return Err(Error::Config("--samples must be at least 1".into()));
    }
    if cfg.bundle && cfg.out.is_none() {
        return Err(Error::Config("--bundle needs an --out directory".into()));
    }
    if cfg.bundle && cfg.dump_distribution.is_some() {
        return Err(Error::Config(
            "--dump-distribution is for single runs, not --bundle".into(),
        ));
    }
    if cfg.dump_distribution.is_some() && !matches!(game, Game::Quantum | Game::Cpmap) {
        return conflict("--dump-distribution");
    }
    if game == Game::Classical {
        ClassicalGameParams::with_epsilon(cfg.epsilon)?;
    } else {
        cfg.coins()?;
    }
    if let Some(k) = cfg.k_grid {
        if !KGrid::new(k)?.supports(cfg.steps) {
            return Err(Error::Config(format!(
                "--k-grid {k} is too small for {} steps (needs {})",
                cfg.steps,
                2 * cfg.steps + 3
            )));
        }
    }
    Ok(cfg)
}

/// Aligned whitespace-separated columns `n series1 series2 ...` of expected
/// capital, with a `#` header naming the series.
pub fn emit_plot_data(names: &[&str], series: &[&CapitalSeries]) -> Result<String> {
    if names.len() != series.len() {
        return Err(Error::LengthMismatch {
            expected: names.len(),
            got: series.len(),
        });
    }
    let mut out = String::from("# n");
    for name in names {
        write!(out, " {name}").unwrap();
    }
    out.push('\n');
    let Some(first) = series.first() else {
        return Ok(out);
    };
    for s in series {
        if s.len() != first.len() {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                got: s.len(),
            });
        }
    }
    for (i, row) in first.rows().iter().enumerate() {
        write!(out, "{}", row.n).unwrap();
        for s in series {
            let r = &s.rows()[i];
            if r.n != row.n {
                return Err(Error::Config(format!("series disagree on step at row {i}")));
            }
            write!(out, " {}", fmt_num(r.expected_capital)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Reads back [`emit_plot_data`] output: series names and one row of values
/// (`n` first) per line.
pub fn parse_plot_data(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty plot data".into()))?;
    let names: Vec<String> = header
        .strip_prefix("# n")
        .ok_or_else(|| Error::Config("plot data header must start with `# n`".into()))?
        .split_whitespace()
        .map(String::from)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad number `{v}`")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((names, rows))
}

/// Summary of what a run produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// CSV text when no output path was given.
    pub stdout: Option<String>,
    /// Largest direct-vs-momentum discrepancy in kspace mode.
    pub max_discrepancy: Option<f64>,
}

struct Named {
    name: String,
    series: CapitalSeries,
    csv: String,
}

impl Named {
    fn new(name: impl Into<String>, series: CapitalSeries) -> Self {
        let csv = series.to_csv();
        Named {
            name: name.into(),
            series,
            csv,
        }
    }
}

fn write_file(path: &Path, text: &str, report: &mut RunReport) -> Result<()> {
    fs::write(path, text)?;
    report.files.push(path.to_path_buf());
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    run_with(config, Exec::default())
}

pub fn run_with(config: &RunConfig, exec: Exec) -> Result<RunReport> {
    let mut report = RunReport::default();
    let mut dist: Option<Vec<DistributionSnapshot>> = None;
    let want_dist = config.dump_distribution.is_some();

    let outputs: Vec<Named> = match config.game {
        Game::Classical => {
            let params = ClassicalGameParams::with_epsilon(config.epsilon)?;
            let go = |s: &StrategySchedule| propagate_distribution(&params, s, config.steps, 0);
            if config.bundle {
                [
                    ("always_a", StrategySchedule::AlwaysA),
                    ("always_b", StrategySchedule::AlwaysB),
                    ("aabb", "AABB".parse()?),
                    ("random", StrategySchedule::RandomMixture(0.5)),
                ]
                .iter()
                .map(|(name, s)| Named::new(*name, go(s)))
                .collect()
            } else {
                vec![Named::new("classical", go(&config.schedule))]
            }
        }
        Game::Quantum => {
            let coins = config.coins()?;
            if config.bundle {
                let mut v = Vec::new();
                for d in 0..2 {
                    for c in 0..2 {
                        v.push(Named::new(
                            format!("d{d}_c{c}"),
                            crate::quantum_walk::run(&coins, d, c, config.steps)?,
                        ));
                    }
                }
                v
            } else {
                let (series, snaps) = run_with_distributions(
                    &coins,
                    config.initial_d,
                    config.initial_c,
                    config.steps,
                )?;
                if want_dist {
                    dist = Some(snaps);
                }
                vec![Named::new("quantum", series)]
            }
        }
        Game::Cpmap => {
            let coins = config.coins()?;
            let one =
                |c: usize, keep: bool| -> Result<(CapitalSeries, Vec<DistributionSnapshot>)> {
                    if config.steps <= config.density_budget {
                        run_density_with_distributions(&coins, c, config.steps, keep)
                    } else if keep {
                        Err(Error::Config(format!(
                        "distribution dumps need an exact density run (steps <= density budget {})",
                        config.density_budget
                    )))
                    } else {
                        let f = |seed| sample_unitary_trajectory(&coins, c, config.steps, seed);
                        Ok((
                            crate::measurement::average_trajectories_with(
                                f,
                                config.samples,
                                config.seed,
                                exec,
                            )?,
                            vec![],
                        ))
                    }
                };
            if config.bundle {
                (0..2)
                    .map(|c| Ok(Named::new(format!("c{c}"), one(c, false)?.0)))
                    .collect::<Result<_>>()?
            } else {
                let (series, snaps) = one(config.initial_c, want_dist)?;
                if want_dist {
                    dist = Some(snaps);
                }
                vec![Named::new("cpmap", series)]
            }
        }
        Game::TrajD | Game::TrajDc => {
            let coins = config.coins()?;
            let d = config.initial_d;
            let one = |c: usize| -> Result<CapitalSeries> {
                let (steps, game) = (config.steps, config.game);
                let f = |seed| {
                    Ok(if game == Game::TrajD {
                        run_d_measured(&coins, d, c, steps, seed)?.path
                    } else {
                        run_dc_measured(&coins, d, c, steps, seed)?.path
                    })
                };
                if exec == Exec::default() {
                    average_trajectories(f, config.samples, config.seed)
                } else {
                    crate::measurement::average_trajectories_with(
                        f,
                        config.samples,
                        config.seed,
                        exec,
                    )
                }
            };
            if config.bundle {
                (0..2)
                    .map(|c| Ok(Named::new(format!("d{d}_c{c}"), one(c)?)))
                    .collect::<Result<_>>()?
            } else {
                vec![Named::new(config.game.name(), one(config.initial_c)?)]
            }
        }
        Game::Kspace => {
            let coins = config.coins()?;
            let combos: Vec<(usize, usize)> = if config.bundle {
                vec![(0, 0), (0, 1), (1, 0), (1, 1)]
            } else {
                vec![(config.initial_d, config.initial_c)]
            };
            let grid = match config.k_grid {
                Some(k) => KGrid::new(k)?,
                None => KGrid::for_steps(config.steps),
            };
            let prop = KSpacePropagator::new(&coins, grid, exec);
            let mut v = Vec::new();
            let mut worst = 0.0f64;
            for (d, c) in combos {
                let (csv, series, err) = kspace_compare(&prop, &coins, d, c, config.steps, exec)?;
                worst = worst.max(err);
                v.push(Named {
                    name: format!("d{d}_c{c}"),
                    series,
                    csv,
                });
            }
            report.max_discrepancy = Some(worst);
            v
        }
    };

    if let (Some(path), Some(snaps)) = (&config.dump_distribution, &dist) {
        write_file(path, &distribution_csv(snaps), &mut report)?;
    }

    if config.bundle {
        let dir = config.out.as_ref().expect("validated");
        fs::create_dir_all(dir)?;
        for o in &outputs {
            write_file(&dir.join(format!("{}.csv", o.name)), &o.csv, &mut report)?;
        }
        let names: Vec<&str> = outputs.iter().map(|o| o.name.as_str()).collect();
        let series: Vec<&CapitalSeries> = outputs.iter().map(|o| &o.series).collect();
        write_file(
            &dir.join("plot.dat"),
            &emit_plot_data(&names, &series)?,
            &mut report,
        )?;
    } else {
        let only = &outputs[0];
        match &config.out {
            Some(path) => write_file(path, &only.csv, &mut report)?,
            None => report.stdout = Some(only.csv.clone()),
        }
    }
    Ok(report)
}

/// Steps at which the kspace comparison is recorded.
fn checkpoints(steps: usize) -> Vec<usize> {
    let stride = if steps <= 100 { 1 } else { steps.div_ceil(50) };
    let mut v: Vec<usize> = (0..=steps).step_by(stride).collect();
    if *v.last().unwrap() != steps {
        v.push(steps);
    }
    v
}

/// Direct and momentum-space capital at each checkpoint plus the largest
/// per-site probability discrepancy, as CSV
/// `n,expected_capital_direct,expected_capital_kspace,max_abs_discrepancy`.
fn kspace_compare(
    prop: &KSpacePropagator,
    coins: &CoinSet,
    d: usize,
    c: usize,
    steps: usize,
    exec: Exec,
) -> Result<(String, CapitalSeries, f64)> {
    let marks = checkpoints(steps);
    let mut direct: Vec<Vec<(i64, f64)>> = Vec::with_capacity(marks.len());
    let mut next = 0;
    run_observed(coins, d, c, steps, |st| {
        if next < marks.len() && st.step_count() == marks[next] {
            direct.push(st.position_distribution());
            next += 1;
        }
    })?;

    let grid = prop.grid();
    let mut kst = KSpaceState::initial(d, c, grid);
    let mut csv =
        String::from("n,expected_capital_direct,expected_capital_kspace,max_abs_discrepancy\n");
    let mut series = CapitalSeries::with_capacity(marks.len());
    let mut worst = 0.0f64;
    for (&n, dist) in marks.iter().zip(&direct) {
        let todo = n - kst.step_count();
        prop.advance(&mut kst, todo, exec);
        let ni = n as i64;
        let recon = reconstruct_positions(&kst, grid, -ni..=ni)?;
        let mut err = 0.0f64;
        let (mut cap_k, mut m2_k, mut cap_d) = (0.0, 0.0, 0.0);
        for (x, amps) in &recon {
            let pk: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            let pd = dist.iter().find(|e| e.0 == *x).map_or(0.0, |e| e.1);
            err = err.max((pk - pd).abs());
            cap_k += *x as f64 * pk;
            m2_k += (x * x) as f64 * pk;
            cap_d += *x as f64 * pd;
        }
        worst = worst.max(err);
        writeln!(
            csv,
            "{n},{},{},{}",
            fmt_num(cap_d),
            fmt_num(cap_k),
            fmt_num(err)
        )
        .unwrap();
        series.push(n, cap_k, m2_k);
    }
    Ok((csv, series, worst))
}

/// Entry point used by the binary; returns the process exit status.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let parsed = match Args::try_parse_from(&args) {
        Ok(a) => a,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("{}", e.to_string().lines().next().unwrap_or("usage error"));
            return 2;
        }
    };
    let config = match build_config(parsed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match run(&config) {
        Ok(report) => {
            if let Some(text) = report.stdout {
                print!("{text}");
            }
            if let Some(err) = report.max_discrepancy {
                eprintln!("max abs discrepancy (direct vs k-space): {err:e}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
