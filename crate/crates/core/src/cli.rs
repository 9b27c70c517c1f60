//! Command-line front end behind the `mixrec` binary.
//!
//! Every flag may also appear in a `key = value` config file given by
//! `--config`; keys are the flag names without dashes and flags win.
//! Outputs are built in memory and written only after the whole command
//! succeeded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adversarial::{self, build_fooling, FoolingSpec, PointSet, ADVERSARIAL_HEADER};
use crate::domain::{DomainKind, MTypeDomain};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::indexkit::{smoothness_order, MultiIndex, RecoveryParams};
use crate::recovery::{build_reconstruction, build_sample_plan, convergence_sweep, fit_rate, lq_error, sweep_csv, QuadMode, QuadSpec, SweepRow};
use crate::selftest::{self, Fault};
use crate::smoothness::McSpec;

#[derive(Debug, Parser)]
#[command(name = "mixrec", about = "Sampling recovery of mixed derivatives on m-type domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the core identities and print their residuals.
    Selftest,
    /// Write the sample points of the level-r plan.
    Plan(Flags),
    /// Recover one function at level r and report the error.
    Recover(Flags),
    /// Recover one function for r = rmin..rmax and fit the rate.
    Sweep(Flags),
    /// Lower bounds from fooling functions on a point set.
    Adversarial(Flags),
}

/// Raw flag values; parsed together with the config file.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub m: Option<String>,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub rmin: Option<String>,
    #[arg(long)]
    pub rmax: Option<String>,
    #[arg(long)]
    pub function: Option<String>,
    /// panels | montecarlo
    #[arg(long)]
    pub quad: Option<String>,
    #[arg(long = "panel-level")]
    pub panel_level: Option<String>,
    #[arg(long)]
    pub gauss: Option<String>,
    #[arg(long = "n-mc")]
    pub n_mc: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
    /// Point CSV for `adversarial` (header x1,..,xd).
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    /// Gnuplot script path for `sweep`.
    #[arg(long)]
    pub gnuplot: Option<String>,
}

const KEYS: [&str; 21] = [
    "d", "alpha", "p", "q", "theta", "lambda", "m", "domain", "r", "rmin", "rmax", "function", "quad",
    "panel-level", "gauss", "n-mc", "seed", "out", "points", "threads", "gnuplot",
];

impl Flags {
    fn given(&self) -> BTreeMap<&'static str, String> {
        let vals = [
            &self.d, &self.alpha, &self.p, &self.q, &self.theta, &self.lambda, &self.m, &self.domain, &self.r,
            &self.rmin, &self.rmax, &self.function, &self.quad, &self.panel_level, &self.gauss, &self.n_mc,
            &self.seed, &self.out, &self.points, &self.threads, &self.gnuplot,
        ];
        KEYS.iter().zip(vals).filter_map(|(k, v)| v.clone().map(|v| (*k, v))).collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected 'key = value', got '{line}'", i + 1)));
        };
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

/// Validated settings of one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: RecoveryParams,
    pub domain: MTypeDomain,
    pub r: Option<u32>,
    pub rmin: u32,
    pub rmax: u32,
    pub function: TestFunction,
    pub quad: QuadSpec,
    pub mc: McSpec,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub threads: Option<usize>,
    pub gnuplot: Option<PathBuf>,
}

fn real(key: &str, s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| Error::Config(format!("{key}: '{t}' is not a number"))),
    }
}

fn uint<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("{key}: '{}' is not a nonnegative integer", s.trim())))
}

/// Comma list; a single entry is repeated `d` times.
fn list<T: Clone>(key: &str, s: &str, d: usize, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    let v = s.split(',').map(|t| item(key, t)).collect::<Result<Vec<T>>>()?;
    match v.len() {
        1 => Ok(vec![v[0].clone(); d]),
        n if n == d => Ok(v),
        n => Err(Error::Config(format!("{key}: {n} entries for dimension {d}"))),
    }
}

impl RunConfig {
    /// Builds the configuration from merged keys and validates it.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let d = match (get("d"), get("alpha")) {
            (Some(d), _) => uint::<usize>("d", d)?,
            (None, Some(a)) => a.split(',').count(),
            (None, None) => 2,
        };
        if d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        let alpha = list("alpha", get("alpha").unwrap_or("2"), d, real)?;
        let p = real("p", get("p").unwrap_or("2"))?;
        let q = real("q", get("q").unwrap_or("2"))?;
        let theta = real("theta", get("theta").unwrap_or("inf"))?;
        let lambda = MultiIndex::new(list("lambda", get("lambda").unwrap_or("0"), d, uint::<u32>)?);
        let m = match get("m") {
            Some(s) => MultiIndex::new(list("m", s, d, uint::<u32>)?),
            None => smoothness_order(&alpha)?,
        };
        let params = RecoveryParams::new(alpha, p, theta, q, lambda, m)?;
        let kind: DomainKind = get("domain").unwrap_or("cube").parse()?;
        let domain = MTypeDomain::new(kind, params.m.clone());
        let r = get("r").map(|s| uint::<u32>("r", s)).transpose()?;
        let rmin = get("rmin").map(|s| uint::<u32>("rmin", s)).transpose()?.or(r).unwrap_or(3);
        let rmax = get("rmax").map(|s| uint::<u32>("rmax", s)).transpose()?.or(r).unwrap_or(rmin.max(8));
        if rmin < 1 || rmin > rmax {
            return Err(Error::Config(format!("need 1 <= rmin <= rmax, got {rmin}..{rmax}")));
        }
        if let Some(r) = r {
            if r < 1 {
                return Err(Error::Config("r must be at least 1".into()));
            }
        }
        let function: TestFunction = get("function").unwrap_or("prod_sin").parse()?;
        function.check(d, params.lambda.as_slice())?;
        let seed = uint::<u64>("seed", get("seed").unwrap_or("1"))?;
        let n_mc = get("n-mc").map(|s| uint::<usize>("n-mc", s)).transpose()?;
        let mut quad = QuadSpec::default_for(d, q);
        quad.seed = seed;
        match get("quad") {
            None => {}
            Some("panels") => quad.mode = QuadMode::Panels { level: None, gauss: 3 },
            Some("montecarlo") => quad.mode = QuadMode::MonteCarlo { samples: 200_000, seed },
            Some(other) => return Err(Error::Config(format!("quad: '{other}' is not panels | montecarlo"))),
        }
        match &mut quad.mode {
            QuadMode::Panels { level, gauss } => {
                *level = get("panel-level").map(|s| uint::<u32>("panel-level", s)).transpose()?;
                if let Some(g) = get("gauss") {
                    *gauss = uint("gauss", g)?;
                }
                if !(1..=crate::polylag::MAX_NODES).contains(gauss) {
                    return Err(Error::Config(format!("gauss must lie in [1, {}]", crate::polylag::MAX_NODES)));
                }
            }
            QuadMode::MonteCarlo { samples, seed: s } => {
                *s = seed;
                if let Some(n) = n_mc {
                    *samples = n;
                }
            }
        }
        let mc = McSpec { samples: n_mc.unwrap_or(McSpec::default().samples), seed };
        if mc.samples < 100 {
            return Err(Error::Config(format!("n-mc must be at least 100, got {}", mc.samples)));
        }
        let threads = get("threads").map(|s| uint::<usize>("threads", s)).transpose()?;
        if threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(RunConfig {
            params,
            domain,
            r,
            rmin,
            rmax,
            function,
            quad,
            mc,
            seed,
            out: get("out").map(PathBuf::from),
            points: get("points").map(PathBuf::from),
            threads,
            gnuplot: get("gnuplot").map(PathBuf::from),
        })
    }

    /// Merges the config file (if any), the environment and the flags.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut map = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        if let Ok(t) = std::env::var("MIXREC_THREADS") {
            map.entry("threads".into()).or_insert(t);
        }
        for (k, v) in flags.given() {
            map.insert(k.to_string(), v);
        }
        Self::from_map(&map)
    }

    /// `(mrate, crate, beta, E)` of the upper rate.
    pub fn summary(&self) -> String {
        let rate = &self.params.rate;
        let beta: Vec<String> = rate.beta.iter().map(|b| format!("{b}")).collect();
        format!(
            "mrate={} crate={} beta=({}) E={} domain={} m={} lambda={}",
            rate.mrate,
            rate.crate_,
            beta.join(","),
            self.params.log_exponent(),
            self.domain.kind,
            self.params.m,
            self.params.lambda
        )
    }

    fn need_r(&self) -> Result<u32> {
        self.r.ok_or_else(|| Error::Config("this command needs --r".into()))
    }
}

/// Result of a command: files to write, text for stdout, notes for stderr.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(PathBuf, String)>,
    pub notes: Vec<String>,
}

impl Output {
    fn emit(&mut self, target: &Option<PathBuf>, body: String) {
        match target {
            Some(p) => self.files.push((p.clone(), body)),
            None => self.stdout.push_str(&body),
        }
    }
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<Output> {
    let r = cfg.need_r()?;
    let plan = build_sample_plan(&cfg.domain, &cfg.params, r)?;
    let mut out = Output::default();
    out.emit(&cfg.out, plan.to_csv());
    out.notes.push(format!("plan r={r}: {} points; {}", plan.len(), cfg.summary()));
    Ok(out)
}

pub fn cmd_recover(cfg: &RunConfig) -> Result<Output> {
    let r = cfg.need_r()?;
    let f = cfg.function.oracle();
    let lambda = cfg.params.lambda.to_vec();
    let (plan, rec) = build_reconstruction(&cfg.domain, &cfg.params, r, &f)?;
    let rep = lq_error(&rec, &cfg.function.deriv_oracle(&lambda), &cfg.quad, &cfg.domain)?;
    let row = SweepRow {
        r,
        n: plan.len(),
        error: rep.value,
        stderr: rep.stderr,
        quad_mode: cfg.quad.mode.to_string(),
        seed: cfg.quad.seed(),
        warnings: rep.warnings,
    };
    let mut out = Output::default();
    out.notes.extend(row.warnings.iter().cloned());
    out.notes.push(format!("recover {} r={r}: n={} error={:e}; {}", cfg.function, row.n, row.error, cfg.summary()));
    out.emit(&cfg.out, sweep_csv(&[row]));
    Ok(out)
}

/// Gnuplot script drawing `error` against `n` on log-log axes.
pub fn gnuplot_script(csv: &Path) -> String {
    format!(
        "set datafile separator ','\nset logscale xy\nset xlabel 'n'\nset ylabel 'error'\nset key off\nplot '{}' using 2:3 skip 1 with linespoints\n",
        csv.display()
    )
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Output> {
    if cfg.gnuplot.is_some() && cfg.out.is_none() {
        return Err(Error::Config("--gnuplot needs --out for the data file".into()));
    }
    let rows = convergence_sweep(&cfg.domain, &cfg.params, cfg.rmin, cfg.rmax, &cfg.function, &cfg.quad)?;
    let mut out = Output::default();
    for row in &rows {
        out.notes.extend(row.warnings.iter().map(|w| format!("r={}: {w}", row.r)));
    }
    let table: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.error)).collect();
    let e = cfg.params.log_exponent();
    let mut fit_note = format!("sweep {} r={}..{}; {}", cfg.function, cfg.rmin, cfg.rmax, cfg.summary());
    match fit_rate(&table, Some(e)) {
        Ok(fit) => {
            let _ = write!(fit_note, "; slope (free E) {:.4}", fit.free.slope);
            if let Some(fx) = fit.fixed {
                let _ = write!(fit_note, "; slope (E={e}) {:.4}", fx.slope);
            }
        }
        Err(err) => {
            let _ = write!(fit_note, "; no fit: {err}");
        }
    }
    out.notes.push(fit_note);
    out.emit(&cfg.out, sweep_csv(&rows));
    if let (Some(gp), Some(csv)) = (&cfg.gnuplot, &cfg.out) {
        out.files.push((gp.clone(), gnuplot_script(csv)));
    }
    Ok(out)
}

/// Reads a point CSV with header `x1,..,xd`.
pub fn read_points(text: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Config("point file is empty".into()))?;
    let want: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != want {
        return Err(Error::Config(format!("point file header '{header}' should be '{}'", want.join(","))));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v = line
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("point row {}: bad value '{t}'", i + 1))))
                .collect::<Result<Vec<f64>>>()?;
            if v.len() != d {
                return Err(Error::Config(format!("point row {} has {} entries, expected {d}", i + 1, v.len())));
            }
            Ok(v)
        })
        .collect()
}

pub fn cmd_adversarial(cfg: &RunConfig) -> Result<Output> {
    let spec = FoolingSpec { mc: cfg.mc, imax: None, quad: QuadSpec { q: cfg.params.q, ..cfg.quad } };
    let mut body = format!("{ADVERSARIAL_HEADER}\n");
    let mut out = Output::default();
    if let Some(path) = &cfg.points {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read points {}: {e}", path.display())))?;
        let pts = read_points(&text, cfg.params.d)?;
        let res = build_fooling(PointSet::Float(&pts), &cfg.params, &cfg.domain, &spec)?;
        body.push_str(&adversarial::csv_line(&res, pts.len(), cfg.seed));
        body.push('\n');
        out.notes.extend(res.warnings);
        out.notes.push(format!("adversarial on {} points: lower bound {:e}", pts.len(), res.lower_bound));
    } else {
        for r in cfg.rmin..=cfg.rmax {
            let plan = build_sample_plan(&cfg.domain, &cfg.params, r)?;
            let res = build_fooling(PointSet::Exact(&plan.exact), &cfg.params, &cfg.domain, &spec)?;
            body.push_str(&adversarial::csv_line(&res, plan.len(), cfg.seed));
            body.push('\n');
            out.notes.extend(res.warnings);
        }
        out.notes.push(format!("adversarial on plans r={}..{}", cfg.rmin, cfg.rmax));
    }
    out.notes.push(cfg.summary());
    out.emit(&cfg.out, body);
    Ok(out)
}

/// Runs the identity checks; the fault comes from `MIXREC_SELFTEST_FAULT`.
pub fn cmd_selftest() -> Result<(Output, bool)> {
    let fault = match std::env::var("MIXREC_SELFTEST_FAULT") {
        Ok(s) if !s.trim().is_empty() => Some(s.parse::<Fault>()?),
        _ => None,
    };
    let checks = selftest::run(fault)?;
    let mut out = Output::default();
    let mut ok = true;
    for c in &checks {
        let _ = writeln!(out.stdout, "{c}");
        if !c.passed() {
            ok = false;
            out.notes.push(format!("selftest failed: {}/{}", c.module, c.identity));
        }
    }
    Ok((out, ok))
}

fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    for (path, body) in files {
        std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs a parsed command and returns the process exit code: 0 on
/// success, 1 on a failed check or computation, 2 on a usage error.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Selftest => cmd_selftest().map(|(o, ok)| (o, if ok { 0 } else { 1 })),
        Command::Plan(f) | Command::Recover(f) | Command::Sweep(f) | Command::Adversarial(f) => {
            let cfg = match RunConfig::resolve(f) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("mixrec: {e}");
                    return 2;
                }
            };
            let job = || match &cli.command {
                Command::Plan(_) => cmd_plan(&cfg),
                Command::Recover(_) => cmd_recover(&cfg),
                Command::Sweep(_) => cmd_sweep(&cfg),
                _ => cmd_adversarial(&cfg),
            };
            in_pool(cfg.threads, job).and_then(|r| r).map(|o| (o, 0))
        }
    };
    match result {
        Ok((out, code)) => {
            if let Err(e) = write_all(&out.files) {
                eprintln!("mixrec: {e}");
                return 1;
            }
            print!("{}", out.stdout);
            for n in &out.notes {
                eprintln!("{n}");
            }
            code
        }
        Err(e) => {
            eprintln!("mixrec: {e}");
            if matches!(e, Error::Config(_) | Error::Parameter(_)) {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn config_text_parsing() {
        let m = parse_config_text("# comment\nalpha = 2,2\n\ntheta=inf # trailing\nn_mc = 500\n").unwrap();
        assert_eq!(m["alpha"], "2,2");
        assert_eq!(m["theta"], "inf");
        assert_eq!(m["n-mc"], "500");
        assert!(parse_config_text("alpha 2").is_err());
        assert!(parse_config_text("colour = red").is_err());
    }

    #[test]
    fn defaults_and_broadcast() {
        let c = RunConfig::from_map(&map(&[("alpha", "2"), ("d", "3")])).unwrap();
        assert_eq!(c.params.alpha, vec![2.0; 3]);
        assert_eq!(c.params.m, MultiIndex::new(vec![3, 3, 3]));
        assert!(c.params.theta.is_infinite());
        assert_eq!((c.rmin, c.rmax), (3, 8));
        let c = RunConfig::from_map(&map(&[("alpha", "2,2"), ("r", "4")])).unwrap();
        assert_eq!((c.r, c.rmin, c.rmax), (Some(4), 4, 4));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            map(&[("alpha", "0.4"), ("p", "2")]),
            map(&[("alpha", "2,2,2"), ("d", "2")]),
            map(&[("quad", "simpson")]),
            map(&[("rmin", "5"), ("rmax", "3")]),
            map(&[("function", "nope")]),
            map(&[("lambda", "4,0"), ("m", "3,3")]),
            map(&[("threads", "0")]),
            map(&[("domain", "disk")]),
        ] {
            assert!(RunConfig::from_map(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn summary_names_rate_parameters() {
        let c = RunConfig::from_map(&map(&[("alpha", "2,2"), ("lambda", "1,0"), ("m", "3,3")])).unwrap();
        let s = c.summary();
        assert!(s.contains("mrate=1") && s.contains("crate=1") && s.contains("beta=(1,1.5)") && s.contains("E=0"), "{s}");
    }

    #[test]
    fn point_file_reading() {
        let pts = read_points("x1,x2\n0.5,0.25\n0.125,1\n", 2).unwrap();
        assert_eq!(pts, vec![vec![0.5, 0.25], vec![0.125, 1.0]]);
        assert!(read_points("a,b\n1,2\n", 2).is_err());
        assert!(read_points("x1,x2\n1\n", 2).is_err());
    }
}
