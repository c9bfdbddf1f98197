//! Configuration files, scan orchestration and CSV output.
//!
//! A configuration is a flat list of `key = value` lines with `#` comments. Every run
//! expands into an ordered list of parameter points (optional `blocks` outer list times
//! an optional scan axis), evaluates them in parallel and writes one table.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::bath::{BathSpec, Geometry};
use crate::equilibrium::{self, RmaxMode, RmaxOptions};
use crate::error::{Error, Result};
use crate::gaussian::SystemParams;
use crate::markov::{self, MarkovParams};
use crate::qle::{self, EvolutionResult, QleConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    TimeDomain,
    Equilibrium,
    Markov,
    MarkovApprox,
}

impl Solver {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "time_domain" | "timedomain" | "qle" => Some(Solver::TimeDomain),
            "equilibrium" => Some(Solver::Equilibrium),
            "markov" => Some(Solver::Markov),
            "markov_approx" | "markovapprox" => Some(Solver::MarkovApprox),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Solver::TimeDomain => "time_domain",
            Solver::Equilibrium => "equilibrium",
            Solver::Markov => "markov",
            Solver::MarkovApprox => "markov_approx",
        }
    }

    fn is_markov(&self) -> bool {
        matches!(self, Solver::Markov | Solver::MarkovApprox)
    }
}

/// Parameters that can be scanned or blocked over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    R,
    Temperature,
    Kappa,
    Gamma,
    OmegaC,
    S,
    G,
    Omega0,
    OmegaGap,
}

impl Param {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "r" => Some(Param::R),
            "T" | "temperature" => Some(Param::Temperature),
            "kappa" => Some(Param::Kappa),
            "gamma" => Some(Param::Gamma),
            "omega_c" => Some(Param::OmegaC),
            "s" => Some(Param::S),
            "g" => Some(Param::G),
            "omega0" => Some(Param::Omega0),
            "omega_gap" => Some(Param::OmegaGap),
            _ => None,
        }
    }

    /// CSV column name with units.
    pub fn header(&self) -> &'static str {
        match self {
            Param::R => "r[c/Omega0]",
            Param::Temperature => "T[Omega0]",
            Param::Kappa => "kappa[1]",
            Param::Gamma => "gamma[Omega0]",
            Param::OmegaC => "omega_c[Omega0]",
            Param::S => "s[1]",
            Param::G => "g[Omega0^2]",
            Param::Omega0 => "omega0[Omega0]",
            Param::OmegaGap => "omega_gap[Omega0]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanAxis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl ScanAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let x = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * x,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * x).exp(),
                }
            })
            .collect()
    }
}

/// What a time-resolved solver reports for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// E_N at t_max
    Final,
    /// max_t E_N over [0, t_max]
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: Solver,
    pub system: SystemParams,
    pub bath: BathSpec,
    pub qle: QleConfig,
    /// Effective-oscillator coupling of the Markov model; None uses the distance law.
    pub g: Option<f64>,
    /// van Hove frequency of the Markov model; None uses the waveguide gap or Ω0.
    pub omega_vh: Option<f64>,
    pub rmax_mode: RmaxMode,
    pub observable: Observable,
    pub scan: Option<ScanAxis>,
    pub blocks: Option<(Param, Vec<f64>)>,
}

const KEYS: &[&str] = &[
    "solver",
    "geometry",
    "gamma",
    "s",
    "omega_c",
    "T",
    "temperature",
    "omega_gap",
    "background",
    "omega0",
    "r",
    "kappa",
    "n_grid",
    "s_max",
    "t_max",
    "dt",
    "output_dt",
    "auto_revival",
    "g",
    "omega_vh",
    "rmax_mode",
    "observable",
    "scan",
    "scan_min",
    "scan_max",
    "scan_points",
    "scan_spacing",
    "blocks",
    "paper_scale",
];

struct Entry {
    line: usize,
    value: String,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num(e: &Entry, key: &str) -> Result<f64> {
    e.value
        .parse::<f64>()
        .map_err(|_| perr(e.line, format!("{key}: expected a number, found '{}'", e.value)))
}

fn count(e: &Entry, key: &str) -> Result<usize> {
    e.value
        .parse::<usize>()
        .map_err(|_| perr(e.line, format!("{key}: expected a non-negative integer, found '{}'", e.value)))
}

fn flag(e: &Entry, key: &str) -> Result<bool> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(perr(e.line, format!("{key}: expected true or false, found '{}'", e.value))),
    }
}

impl RunConfig {
    /// Parses and validates configuration text.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut entries: Vec<(&str, Entry)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| perr(line, format!("expected 'key = value', found '{content}'")))?;
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS
                .iter()
                .find(|&&known| known == k)
                .ok_or_else(|| perr(line, format!("unknown key '{k}'")))?;
            if v.is_empty() {
                return Err(perr(line, format!("{k}: missing value")));
            }
            let canonical = if *key == "temperature" { "T" } else { key };
            if entries.iter().any(|(seen, _)| *seen == canonical) {
                return Err(perr(line, format!("duplicate key '{k}'")));
            }
            entries.push((canonical, Entry { line, value: v.to_string() }));
        }
        let get = |k: &str| entries.iter().find(|(key, _)| *key == k).map(|(_, e)| e);
        let need = |k: &str| get(k).ok_or_else(|| Error::Validation(format!("missing required key '{k}'")));

        let e = need("solver")?;
        let solver = Solver::parse(&e.value).ok_or_else(|| perr(e.line, format!("unknown solver '{}'", e.value)))?;
        let e = need("geometry")?;
        let geometry =
            Geometry::parse(&e.value).ok_or_else(|| perr(e.line, format!("unknown geometry '{}'", e.value)))?;
        let gamma = num(need("gamma")?, "gamma")?;
        let s = num(need("s")?, "s")?;
        let omega_c = num(need("omega_c")?, "omega_c")?;
        let opt = |k: &str| -> Result<Option<f64>> { get(k).map(|e| num(e, k)).transpose() };
        let temperature = opt("T")?.unwrap_or(0.0);
        let mut bath = match geometry {
            Geometry::Waveguide => {
                let gap = opt("omega_gap")?.ok_or_else(|| Error::Validation("omega_gap > 0 for the waveguide".into()))?;
                BathSpec::waveguide(gamma, s, omega_c, gap, temperature)
            }
            g => {
                let mut b = BathSpec::free(g, gamma, s, omega_c, temperature);
                if let Some(gap) = opt("omega_gap")? {
                    b.gap = gap;
                }
                b
            }
        };
        if let Some(e) = get("background") {
            bath.include_free_background = flag(e, "background")?;
        }
        let system = SystemParams {
            omega0: opt("omega0")?.unwrap_or(1.0),
            r: opt("r")?.unwrap_or(0.1),
            kappa: opt("kappa")?.unwrap_or(1.0),
        };

        let paper = get("paper_scale").map(|e| flag(e, "paper_scale")).transpose()?.unwrap_or(false);
        let mut q = if paper { QleConfig::paper_scale() } else { QleConfig::default() };
        if let Some(e) = get("n_grid") {
            q.n_grid = count(e, "n_grid")?;
        }
        q.s_max = opt("s_max")?.or(q.s_max);
        if let Some(t) = opt("t_max")? {
            q.t_max = t;
        }
        q.dt = opt("dt")?.or(q.dt);
        q.output_dt = opt("output_dt")?.or(q.output_dt);
        if let Some(e) = get("auto_revival") {
            q.auto_revival = flag(e, "auto_revival")?;
        }

        let rmax_mode = match get("rmax_mode") {
            Some(e) => RmaxMode::parse(&e.value).ok_or_else(|| perr(e.line, format!("unknown rmax_mode '{}'", e.value)))?,
            None => RmaxMode::Asymptotic,
        };
        let observable = match get("observable") {
            None => Observable::Final,
            Some(e) => match e.value.as_str() {
                "final" => Observable::Final,
                "max" => Observable::Max,
                other => return Err(perr(e.line, format!("unknown observable '{other}'"))),
            },
        };

        let scan = match get("scan") {
            None => {
                for k in ["scan_min", "scan_max", "scan_points", "scan_spacing"] {
                    if let Some(e) = get(k) {
                        return Err(perr(e.line, format!("{k} given without scan")));
                    }
                }
                None
            }
            Some(e) => {
                let param = Param::parse(&e.value).ok_or_else(|| perr(e.line, format!("cannot scan '{}'", e.value)))?;
                let spacing = match get("scan_spacing") {
                    None => Spacing::Linear,
                    Some(e) => match e.value.as_str() {
                        "lin" | "linear" => Spacing::Linear,
                        "log" => Spacing::Log,
                        other => return Err(perr(e.line, format!("unknown scan_spacing '{other}'"))),
                    },
                };
                Some(ScanAxis {
                    param,
                    min: num(need("scan_min")?, "scan_min")?,
                    max: num(need("scan_max")?, "scan_max")?,
                    points: count(need("scan_points")?, "scan_points")?,
                    spacing,
                })
            }
        };

        let blocks = match get("blocks") {
            None => None,
            Some(e) => {
                let (name, list) = e
                    .value
                    .split_once(':')
                    .ok_or_else(|| perr(e.line, "blocks: expected 'name: v1, v2, ...'"))?;
                let param = Param::parse(name.trim())
                    .ok_or_else(|| perr(e.line, format!("cannot block over '{}'", name.trim())))?;
                let values = list
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| perr(e.line, format!("blocks: expected a number, found '{}'", v.trim())))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Some((param, values))
            }
        };

        let cfg = RunConfig {
            solver,
            system,
            bath,
            qle: q,
            g: opt("g")?,
            omega_vh: opt("omega_vh")?,
            rmax_mode,
            observable,
            scan,
            blocks,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every invariant, including those of each scanned point.
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.bath.validate()?;
        let q = &self.qle;
        if q.n_grid < 2 {
            return Err(Error::Validation("n_grid >= 2".into()));
        }
        if !(q.t_max > 0.0 && q.t_max.is_finite()) {
            return Err(Error::Validation("t_max > 0".into()));
        }
        for (v, name) in [(q.dt, "dt > 0"), (q.output_dt, "output_dt > 0"), (q.s_max, "s_max > 0")] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Validation(name.into()));
                }
            }
        }
        if q.t_max / self.output_dt() > 1e6 {
            return Err(Error::Validation("t_max / output_dt <= 1e6".into()));
        }
        if let Some(g) = self.g {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Validation("g >= 0".into()));
            }
        }
        if let Some(w) = self.omega_vh {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Validation("omega_vh > 0".into()));
            }
        }
        if let Some(axis) = &self.scan {
            if axis.points == 0 {
                return Err(Error::Validation("scan_points >= 1".into()));
            }
            if !(axis.min.is_finite() && axis.max.is_finite()) {
                return Err(Error::Validation("scan range is finite".into()));
            }
            if axis.spacing == Spacing::Log && !(axis.min > 0.0 && axis.max > 0.0) {
                return Err(Error::Validation("scan_min > 0 for log spacing".into()));
            }
            if let Some((p, _)) = &self.blocks {
                if *p == axis.param {
                    return Err(Error::Validation("blocks and scan use different parameters".into()));
                }
            }
        }
        if let Some((_, values)) = &self.blocks {
            if values.is_empty() {
                return Err(Error::Validation("blocks lists at least one value".into()));
            }
        }
        for point in self.points()? {
            point.system.validate()?;
            point.bath.validate()?;
        }
        Ok(())
    }

    /// Full grid resolution: n_grid = 10000 and s_max = 10 omega_c.
    pub fn apply_paper_scale(&mut self) {
        self.qle.n_grid = QleConfig::paper_scale().n_grid;
        self.qle.s_max = None;
    }

    /// Copy with one parameter replaced.
    pub fn with_param(&self, p: Param, v: f64) -> Self {
        let mut c = self.clone();
        match p {
            Param::R => c.system.r = v,
            Param::Temperature => c.bath.temperature = v,
            Param::Kappa => c.system.kappa = v,
            Param::Gamma => c.bath.gamma = v,
            Param::OmegaC => c.bath.omega_c = v,
            Param::S => c.bath.s = v,
            Param::G => c.g = Some(v),
            Param::Omega0 => c.system.omega0 = v,
            Param::OmegaGap => c.bath.gap = v,
        }
        c
    }

    /// Leading columns and configuration of every point, in output order.
    fn expand(&self) -> Vec<(Vec<f64>, RunConfig)> {
        let outer: Vec<(Vec<f64>, RunConfig)> = match &self.blocks {
            None => vec![(Vec::new(), self.clone())],
            Some((p, vals)) => vals.iter().map(|&v| (vec![v], self.with_param(*p, v))).collect(),
        };
        match &self.scan {
            None => outer,
            Some(axis) => outer
                .into_iter()
                .flat_map(|(lead, cfg)| {
                    axis.values()
                        .into_iter()
                        .map(move |v| {
                            let mut l = lead.clone();
                            l.push(v);
                            (l, cfg.with_param(axis.param, v))
                        })
                        .collect::<Vec<_>>()
                })
                .collect(),
        }
    }

    fn points(&self) -> Result<Vec<RunConfig>> {
        Ok(self.expand().into_iter().map(|(_, c)| c).collect())
    }

    fn lead_headers(&self) -> Vec<String> {
        let mut h = Vec::new();
        if let Some((p, _)) = &self.blocks {
            h.push(p.header().to_string());
        }
        if let Some(axis) = &self.scan {
            h.push(axis.param.header().to_string());
        }
        h
    }

    fn markov_params(&self) -> Result<MarkovParams> {
        let w = self.omega_vh.unwrap_or(match self.bath.geometry {
            Geometry::Waveguide => self.bath.gap,
            _ => self.system.omega0,
        });
        MarkovParams::new(self.system, &self.bath, w, self.g)
    }

    fn output_dt(&self) -> f64 {
        self.qle.output_dt.unwrap_or(0.1)
    }

    fn evolve(&self) -> Result<EvolutionResult> {
        match self.solver {
            Solver::TimeDomain => qle::simulate(&self.system, &self.bath, &self.qle),
            Solver::Markov | Solver::MarkovApprox => markov::evolve(
                &self.markov_params()?,
                self.qle.t_max,
                self.output_dt(),
                self.solver == Solver::MarkovApprox,
            ),
            Solver::Equilibrium => Err(Error::Config(
                "the equilibrium solver has no time evolution; use the asymptotic or scan command".into(),
            )),
        }
    }

    fn asymptotic(&self) -> Result<f64> {
        if self.solver.is_markov() {
            markov::asymptotic_negativity(&self.markov_params()?)
        } else {
            equilibrium::asymptotic_negativity(&self.system, &self.bath)
        }
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    RunConfig::parse_str(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// E_N(t) per point
    Evolve,
    /// stationary E_N per point
    Asymptotic,
    /// separability distance per point
    Rmax,
    /// E_N(t) of the effective model per point
    Markov,
    /// one observable per point with the configured solver
    Scan,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "evolve" => Some(Command::Evolve),
            "asymptotic" => Some(Command::Asymptotic),
            "rmax" => Some(Command::Rmax),
            "markov" => Some(Command::Markov),
            "scan" => Some(Command::Scan),
            _ => None,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub values: Vec<f64>,
}

/// Header with units plus rows ordered by block, then scan axis, then time.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub records: Vec<ScanRecord>,
}

const EN: &str = "E_N[bits-base2]";

fn point_rows(cmd: Command, cfg: &RunConfig) -> Result<Vec<Vec<f64>>> {
    match cmd {
        Command::Evolve | Command::Markov => {
            let res = cfg.evolve()?;
            Ok(res.times.iter().zip(&res.log_negativity).map(|(&t, &e)| vec![t, e]).collect())
        }
        Command::Asymptotic => Ok(vec![vec![cfg.asymptotic()?]]),
        Command::Rmax => {
            let opts = RmaxOptions {
                qle: cfg.qle.clone(),
                ..Default::default()
            };
            let r = equilibrium::find_rmax_with(&cfg.system, &cfg.bath, cfg.rmax_mode, &opts)?;
            Ok(vec![vec![r.r_max, if r.non_monotone { 1.0 } else { 0.0 }]])
        }
        Command::Scan => {
            let v = match cfg.solver {
                Solver::Equilibrium => cfg.asymptotic()?,
                _ => {
                    let res = cfg.evolve()?;
                    match cfg.observable {
                        Observable::Final => *res.log_negativity.last().unwrap_or(&0.0),
                        Observable::Max => res.max_log_negativity(),
                    }
                }
            };
            Ok(vec![vec![v]])
        }
    }
}

fn tail_headers(cmd: Command, cfg: &RunConfig) -> Vec<String> {
    let v: Vec<&str> = match cmd {
        Command::Evolve | Command::Markov => vec!["t[1/Omega0]", EN],
        Command::Asymptotic => vec![EN],
        Command::Rmax => vec!["r_max[c/Omega0]", "non_monotone[bool]"],
        Command::Scan => vec![match (cfg.solver, cfg.observable) {
            (Solver::Equilibrium, _) => EN,
            (_, Observable::Final) => "E_N(t_max)[bits-base2]",
            (_, Observable::Max) => "max_t E_N[bits-base2]",
        }],
    };
    v.into_iter().map(String::from).collect()
}

/// Runs a command over every point of the configuration with `jobs` worker threads.
pub fn run(cmd: Command, cfg: &RunConfig, jobs: usize) -> Result<Table> {
    let cfg = match cmd {
        Command::Markov if !cfg.solver.is_markov() => RunConfig {
            solver: Solver::Markov,
            ..cfg.clone()
        },
        _ => cfg.clone(),
    };
    if cmd == Command::Rmax && cfg.solver.is_markov() {
        return Err(Error::Config("rmax needs the time-domain or equilibrium solver".into()));
    }
    let points = cfg.expand();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<Vec<f64>>>> = pool.install(|| {
        points
            .par_iter()
            .map(|(lead, p)| {
                point_rows(cmd, p).map(|rows| {
                    rows.into_iter()
                        .map(|r| lead.iter().copied().chain(r).collect())
                        .collect()
                })
            })
            .collect()
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?.into_iter().map(|values| ScanRecord { values }));
    }
    let mut header = cfg.lead_headers();
    header.extend(tail_headers(cmd, &cfg));
    Ok(Table { header, records })
}

/// Full double precision: 17 significant digits.
fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv_string(table: &Table) -> String {
    let mut out = table.header.join(",");
    out.push('\n');
    for r in &table.records {
        let cells: Vec<String> = r.values.iter().map(|&v| fmt_value(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    if table.records.is_empty() {
        return Err(Error::Validation("at least one record to write".into()));
    }
    std::fs::write(path.as_ref(), to_csv_string(table))
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

pub fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| perr(1, "empty CSV"))?
        .split(',')
        .map(String::from)
        .collect();
    let mut records = Vec::new();
    for (i, l) in lines.enumerate() {
        let values = l
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|_| perr(i + 2, format!("bad number '{c}'"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != header.len() {
            return Err(perr(i + 2, "column count differs from the header"));
        }
        records.push(ScanRecord { values });
    }
    Ok(Table { header, records })
}

/// Bundled figure recipes: (name, command, configuration text).
pub const RECIPES: &[(&str, &str, &str)] = &[
    ("fig1", "evolve", include_str!("../../../docs/recipes/fig1.conf")),
    ("fig2", "rmax", include_str!("../../../docs/recipes/fig2.conf")),
    ("fig3", "asymptotic", include_str!("../../../docs/recipes/fig3.conf")),
    ("fig4", "rmax", include_str!("../../../docs/recipes/fig4.conf")),
    ("fig6", "evolve", include_str!("../../../docs/recipes/fig6.conf")),
    ("fig7", "scan", include_str!("../../../docs/recipes/fig7.conf")),
    ("fig8", "markov", include_str!("../../../docs/recipes/fig8.conf")),
    ("fig9", "markov", include_str!("../../../docs/recipes/fig9.conf")),
    ("fig10", "scan", include_str!("../../../docs/recipes/fig10.conf")),
    ("fig11", "scan", include_str!("../../../docs/recipes/fig11.conf")),
    ("fig12", "asymptotic", include_str!("../../../docs/recipes/fig12.conf")),
    ("fig13", "asymptotic", include_str!("../../../docs/recipes/fig13.conf")),
];

/// Command and configuration text of a bundled recipe.
pub fn recipe(name: &str) -> Option<(Command, &'static str)> {
    RECIPES
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, c, text)| (Command::parse(c).expect("recipe command"), *text))
}
