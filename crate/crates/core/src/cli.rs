//! Command-line front end: key tables, config files, dispatch and output.
//!
//! Every command reads a flat set of keys. The same key may come from a
//! `key = value` config file or from a `--key` flag; flags win. The resolved
//! set is written at the top of every output, and such a file is accepted by
//! `--config`.

use crate::error::Error;
use crate::expsums::kloosterman;
use crate::lfunc::{balance_check, exponent_scan, load_maass, scan_csv, LFunctionSpec, ScanRecord, ScanResult};
use crate::oscint::{bessel_weighted_k_sum, suppression_ratio, KSumMode};
use crate::pipeline::{i_bound_check, pipeline_suite, poisson_check_s5, AssemblyGrid, PipelineParams};
use crate::report::{SuiteReport, Verdict};
use crate::suites;
use crate::trace::{square_grid, trace_consistency};
use crate::unity::linear_fit;
use clap::{Arg, ArgAction, ArgMatches, Command};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const HEADER_MARK: &str = "# weylscan run";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Charsum,
    Kloosterman,
    Petersson,
    Besselsum,
    Oscint,
    Afe,
    Scan,
    Pipeline,
    All,
}

impl CommandKind {
    pub const ALL: [CommandKind; 9] = [
        CommandKind::Charsum,
        CommandKind::Kloosterman,
        CommandKind::Petersson,
        CommandKind::Besselsum,
        CommandKind::Oscint,
        CommandKind::Afe,
        CommandKind::Scan,
        CommandKind::Pipeline,
        CommandKind::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Charsum => "charsum",
            CommandKind::Kloosterman => "kloosterman",
            CommandKind::Petersson => "petersson",
            CommandKind::Besselsum => "besselsum",
            CommandKind::Oscint => "oscint",
            CommandKind::Afe => "afe",
            CommandKind::Scan => "scan",
            CommandKind::Pipeline => "pipeline",
            CommandKind::All => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    fn about(self) -> &'static str {
        match self {
            CommandKind::Charsum => "complete character sums, twisted factorization and odd-character averages",
            CommandKind::Kloosterman => "Kloosterman sums: symmetry, reality and the Weil bound",
            CommandKind::Petersson => "Petersson trace formula against the level-1 eigenbasis",
            CommandKind::Besselsum => "Bessel-weighted k-sum in direct, kernel and asymptotic modes",
            CommandKind::Oscint => "stationary phase and the second-derivative bound",
            CommandKind::Afe => "central values and balance invariance",
            CommandKind::Scan => "|L(1/2 + it)| over a grid of t",
            CommandKind::Pipeline => "Poisson identity, I and J integrals, off-diagonal assembly",
            CommandKind::All => "every acceptance suite",
        }
    }

    fn keys(self) -> &'static [Key] {
        match self {
            CommandKind::Charsum => {
                const KEYS: &[Key] = &[
                    Key::int("q_max", "13", "largest prime modulus for the twisted sweeps"),
                    Key::int("c_max", "40", "largest modulus for the complete-sum closed form"),
                    Key::int("pair_max", "12", "largest c₁, c₂ for the congruence form"),
                    Key::int("twist_c_max", "20", "largest c in the twisted factorization"),
                ];
                KEYS
            }
            CommandKind::Kloosterman => {
                const KEYS: &[Key] = &[Key::int("c_max", "30", "largest modulus")];
                KEYS
            }
            CommandKind::Petersson => {
                const KEYS: &[Key] = &[
                    Key::int("k", "10", "weight"),
                    Key::int("grid", "5", "m, n ≤ grid"),
                    Key::float("tol", "1e-8", "tolerance on the trace comparison"),
                ];
                KEYS
            }
            CommandKind::Besselsum => {
                const KEYS: &[Key] = &[
                    Key::int("k", "16", "weight scale K"),
                    Key::float("x", "100", "argument x"),
                    Key::float("suppression", "1e6", "required suppression ratio"),
                ];
                KEYS
            }
            CommandKind::Oscint => {
                const KEYS: &[Key] = &[
                    Key::int("n", "10000", "N"),
                    Key::float("t", "1000", "t"),
                    Key::float("k", "10", "K"),
                    Key::float("q", "100", "Q"),
                    Key::int("cases", "200", "size of the random corpus"),
                ];
                KEYS
            }
            CommandKind::Afe => {
                const KEYS: &[Key] = &[
                    Key::text("form", "delta", "delta or maass"),
                    Key::text("coefficients", "", "Maass coefficient file"),
                    Key::float("t", "0", "height"),
                    Key::floats("balances", "0.5,1,2", "balance parameters"),
                    Key::int("n_max", "20000", "coefficients to compute for delta"),
                ];
                KEYS
            }
            CommandKind::Scan => {
                const KEYS: &[Key] = &[
                    Key::text("form", "delta", "delta or maass"),
                    Key::text("coefficients", "", "Maass coefficient file"),
                    Key::float("t_min", "100", "first t"),
                    Key::float("t_max", "1000", "last t"),
                    Key::float("step", "0.5", "grid step"),
                    Key::int("n_max", "20000", "coefficients to compute for delta"),
                    Key::text("plotdata", "", "also write plot data to this path"),
                ];
                KEYS
            }
            CommandKind::Pipeline => {
                const KEYS: &[Key] = &[
                    Key::int("n", "10000", "N"),
                    Key::float("t", "1000", "t"),
                    Key::float("k", "10", "K"),
                    Key::text("q", "", "Q (default N/K²)"),
                    Key::int("m", "1", "m for the Poisson check"),
                    Key::int("c", "3", "c for the Poisson check"),
                    Key::int("poisson_n", "500", "N for the Poisson check"),
                    Key::float("poisson_t", "100", "t for the Poisson check"),
                    Key::int("c_values", "6", "sampled c in the assembly"),
                    Key::int("n_values", "8", "sampled n in the assembly"),
                    Key::int("m_values", "30", "sampled m in the assembly"),
                ];
                KEYS
            }
            CommandKind::All => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Text,
    Floats,
}

#[derive(Debug, Clone, Copy)]
struct Key {
    name: &'static str,
    default: &'static str,
    kind: Kind,
    help: &'static str,
}

impl Key {
    const fn int(name: &'static str, default: &'static str, help: &'static str) -> Self {
        Key { name, default, kind: Kind::Int, help }
    }
    const fn float(name: &'static str, default: &'static str, help: &'static str) -> Self {
        Key { name, default, kind: Kind::Float, help }
    }
    const fn text(name: &'static str, default: &'static str, help: &'static str) -> Self {
        Key { name, default, kind: Kind::Text, help }
    }
    const fn floats(name: &'static str, default: &'static str, help: &'static str) -> Self {
        Key { name, default, kind: Kind::Floats, help }
    }

    fn check(&self, value: &str) -> std::result::Result<(), String> {
        let ok = match self.kind {
            Kind::Int => value.parse::<u64>().is_ok(),
            Kind::Float => value.parse::<f64>().map_or(false, f64::is_finite),
            Kind::Text => true,
            Kind::Floats => value.split(',').all(|v| v.trim().parse::<f64>().map_or(false, f64::is_finite)),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("key `{}`: cannot parse {value:?}", self.name))
        }
    }
}

const COMMON: [Key; 4] = [
    Key::text("output", "", "output path (stdout when empty)"),
    Key::text("format", "json", "csv or json"),
    Key::int("parallelism", "1", "worker threads"),
    Key::int("seed", "20240601", "seed for sampled sweeps"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A fully resolved run: command, typed parameters and output settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: BTreeMap<String, String>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub parallelism: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Key(String),
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> std::result::Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Line {
                line: i + 1,
                message: format!("expected `key = value`, found {line:?}"),
            });
        };
        let key = k.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Line {
                line: i + 1,
                message: format!("bad key {key:?}"),
            });
        }
        out.push((i + 1, key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// The config embedded in an earlier output, or the file itself when it is
/// a plain config file.
pub fn config_source(text: &str) -> std::result::Result<String, ConfigError> {
    if text.starts_with(HEADER_MARK) {
        let body: Vec<&str> = text
            .lines()
            .skip(1)
            .take_while(|l| l.starts_with("# ") && l.contains('='))
            .map(|l| &l[2..])
            .collect();
        return Ok(body.join("\n"));
    }
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Key(format!("JSON output: {e}")))?;
        let cfg = v.get("config").ok_or_else(|| ConfigError::Key("JSON output has no `config`".into()))?;
        let mut lines = Vec::new();
        if let Some(obj) = cfg.get("resolved").and_then(|r| r.as_object()) {
            for (k, v) in obj {
                lines.push(format!("{k} = {}", v.as_str().unwrap_or_default()));
            }
        }
        return Ok(lines.join("\n"));
    }
    Ok(text.to_string())
}

impl RunConfig {
    /// Merge file entries and flag entries (flags override), check every key
    /// against the command's table and fill defaults.
    pub fn resolve(
        command: CommandKind,
        file: &[(usize, String, String)],
        flags: &[(String, String)],
    ) -> std::result::Result<Self, ConfigError> {
        let table: Vec<Key> = COMMON.iter().chain(command.keys()).copied().collect();
        let find = |k: &str| table.iter().find(|key| key.name == k);
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        for (line, k, v) in file {
            if k == "command" {
                if v != command.name() {
                    return Err(ConfigError::Line {
                        line: *line,
                        message: format!("config is for `{v}`, running `{}`", command.name()),
                    });
                }
                continue;
            }
            let key = find(k).ok_or_else(|| ConfigError::Line {
                line: *line,
                message: format!("unknown key `{k}` for `{}`", command.name()),
            })?;
            key.check(v).map_err(|message| ConfigError::Line { line: *line, message })?;
            values.insert(k.clone(), v.clone());
        }
        for (k, v) in flags {
            let key = find(k).ok_or_else(|| ConfigError::Key(format!("unknown key `{k}`")))?;
            key.check(v).map_err(ConfigError::Key)?;
            values.insert(k.clone(), v.clone());
        }
        for key in &table {
            values.entry(key.name.to_string()).or_insert_with(|| {
                if key.name == "format" && command == CommandKind::Scan {
                    "csv".to_string()
                } else {
                    key.default.to_string()
                }
            });
        }
        let format = match values["format"].as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => return Err(ConfigError::Key(format!("key `format`: expected csv or json, got {other:?}"))),
        };
        let parallelism: usize = values["parallelism"].parse().expect("checked");
        if parallelism == 0 {
            return Err(ConfigError::Key("key `parallelism`: must be positive".into()));
        }
        let seed: u64 = values["seed"].parse().expect("checked");
        let output = values.remove("output").unwrap_or_default();
        for k in ["format", "parallelism", "seed"] {
            values.remove(k);
        }
        Ok(RunConfig {
            command,
            params: values,
            output_path: (!output.is_empty()).then(|| PathBuf::from(output)),
            format,
            parallelism,
            seed,
        })
    }

    /// Every key, including the common ones, as written in output headers.
    pub fn resolved_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), self.command.name().to_string()),
            (
                "output".to_string(),
                self.output_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
            (
                "format".to_string(),
                match self.format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                }
                .to_string(),
            ),
            ("parallelism".to_string(), self.parallelism.to_string()),
            ("seed".to_string(), self.seed.to_string()),
        ];
        out.extend(self.params.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    fn header(&self) -> String {
        let mut s = String::from(HEADER_MARK);
        s.push('\n');
        for (k, v) in self.resolved_pairs() {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }

    fn text(&self, k: &str) -> &str {
        self.params.get(k).map(String::as_str).unwrap_or("")
    }
    fn int(&self, k: &str) -> u64 {
        self.text(k).parse().expect("validated at resolve")
    }
    fn float(&self, k: &str) -> f64 {
        self.text(k).parse().expect("validated at resolve")
    }
    fn floats(&self, k: &str) -> Vec<f64> {
        self.text(k).split(',').map(|v| v.trim().parse().expect("validated at resolve")).collect()
    }
}

fn command_line() -> Command {
    let mut app = Command::new("weylscan")
        .about("Numerical experiments with character sums, Bessel sums and L-function scans")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("key = value file, or an earlier output"));
    for key in COMMON {
        app = app.arg(
            Arg::new(key.name)
                .long(key.name)
                .global(true)
                .value_name("VALUE")
                .help(format!("{} [default: {}]", key.help, key.default)),
        );
    }
    for cmd in CommandKind::ALL {
        let mut sub = Command::new(cmd.name()).about(cmd.about());
        for key in cmd.keys() {
            sub = sub.arg(
                Arg::new(key.name)
                    .long(key.name.replace('_', "-"))
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .help(format!("{} [default: {}]", key.help, key.default)),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn flag_pairs(cmd: CommandKind, top: &ArgMatches, sub: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for key in COMMON {
        if let Some(v) = sub.get_one::<String>(key.name).or_else(|| top.get_one::<String>(key.name)) {
            out.push((key.name.to_string(), v.clone()));
        }
    }
    for key in cmd.keys() {
        if let Some(v) = sub.get_one::<String>(key.name) {
            out.push((key.name.to_string(), v.clone()));
        }
    }
    out
}

/// Parse arguments into a resolved config.
pub fn config_from_args<I, T>(args: I) -> std::result::Result<RunConfig, (i32, String)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = command_line().try_get_matches_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        (code, e.render().to_string())
    })?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cmd = CommandKind::parse(name).expect("registered");
    let config_path = sub.get_one::<String>("config").or_else(|| matches.get_one::<String>("config"));
    let file = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| (EXIT_USAGE, format!("{path}: {e}")))?;
            let src = config_source(&text).map_err(|e| (EXIT_USAGE, format!("{path}: {e}")))?;
            parse_config_text(&src).map_err(|e| (EXIT_USAGE, format!("{path}: {e}")))?
        }
        None => Vec::new(),
    };
    RunConfig::resolve(cmd, &file, &flag_pairs(cmd, &matches, sub)).map_err(|e| (EXIT_USAGE, e.to_string()))
}

/// Output of one run: the text to write and the gated verdict.
pub struct RunOutput {
    pub text: String,
    pub report: SuiteReport,
}

#[derive(Serialize)]
struct JsonOutput<'a> {
    config: JsonConfig<'a>,
    summary: Summary,
    report: &'a SuiteReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    records: Option<&'a [ScanRecord]>,
}

#[derive(Serialize)]
struct JsonConfig<'a> {
    run: &'a RunConfig,
    resolved: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn of(r: &SuiteReport) -> Self {
        Summary {
            pass: r.count(Verdict::Pass),
            fail: r.count(Verdict::Fail),
            inconclusive: r.count(Verdict::Inconclusive),
        }
    }
}

fn report_csv(r: &SuiteReport) -> String {
    let mut s = String::from("suite,check,verdict\n");
    for c in &r.checks {
        let _ = writeln!(s, "{},{},{}", r.suite, c.name, c.verdict);
    }
    s
}

fn load_form(cfg: &RunConfig) -> crate::Result<LFunctionSpec> {
    match cfg.text("form") {
        "delta" => Ok(LFunctionSpec::delta(cfg.int("n_max") as usize)),
        "maass" => {
            let path = cfg.text("coefficients");
            if path.is_empty() {
                return Err(Error::InvalidArgument("form = maass needs `coefficients`".into()));
            }
            load_maass(Path::new(path))
        }
        other => Err(Error::InvalidArgument(format!("unknown form {other:?}"))),
    }
}

fn pipeline_params(cfg: &RunConfig) -> crate::Result<PipelineParams> {
    let (n, t, k) = (cfg.int("n"), cfg.float("t"), cfg.float("k"));
    match cfg.text("q") {
        "" => PipelineParams::with_default_q(n, t, k),
        q => {
            let q: f64 = q.parse().map_err(|_| Error::InvalidArgument(format!("q = {q:?}")))?;
            PipelineParams::new(n, t, k, q)
        }
    }
}

#[derive(Serialize)]
struct KloostermanSweep {
    moduli: u64,
    sums: usize,
    max_imaginary: f64,
    max_asymmetry: f64,
    max_weil_ratio: f64,
}

fn kloosterman_report(c_max: u64) -> crate::Result<SuiteReport> {
    use crate::arith::{divisor_count, gcd};
    let mut sweep = KloostermanSweep {
        moduli: c_max,
        sums: 0,
        max_imaginary: 0.0,
        max_asymmetry: 0.0,
        max_weil_ratio: 0.0,
    };
    for c in 1..=c_max {
        let ci = c as i64;
        for m in 0..ci {
            for n in 0..ci {
                let s = kloosterman(m, n, c)?;
                let t = kloosterman(n, m, c)?;
                let g = gcd(gcd(m, n), ci) as f64;
                let weil = divisor_count(c) as f64 * g.sqrt() * (c as f64).sqrt();
                sweep.sums += 1;
                sweep.max_imaginary = sweep.max_imaginary.max(s.im.abs());
                sweep.max_asymmetry = sweep.max_asymmetry.max((s - t).norm());
                sweep.max_weil_ratio = sweep.max_weil_ratio.max(s.norm() / weil);
            }
        }
    }
    let mut r = SuiteReport::new("kloosterman");
    r.push(
        "real_and_symmetric",
        Verdict::from_check(sweep.max_imaginary <= 1e-9 && sweep.max_asymmetry <= 1e-9),
        &sweep,
    );
    r.push("weil_bound", Verdict::from_check(sweep.max_weil_ratio <= 1.0 + 1e-9), &sweep);
    Ok(r)
}

fn execute(cfg: &RunConfig) -> crate::Result<(SuiteReport, Option<ScanResult>)> {
    let mut scan = None;
    let report = match cfg.command {
        CommandKind::Charsum => {
            let primes: Vec<u64> = suites::small_odd_primes()
                .into_iter()
                .chain(crate::arith::primes_up_to(cfg.int("q_max") as usize).into_iter().filter(|&q| q > 13))
                .filter(|&q| q <= cfg.int("q_max"))
                .collect();
            let mut r = SuiteReport::new("charsum");
            r.merge(suites::charsum_suite(cfg.int("c_max"), cfg.int("pair_max"))?);
            r.merge(suites::twisted_suite(&primes, cfg.int("twist_c_max"))?);
            r.merge(suites::average_suite(&primes)?);
            r
        }
        CommandKind::Kloosterman => kloosterman_report(cfg.int("c_max"))?,
        CommandKind::Petersson => {
            let k = cfg.int("k") as u32;
            let rep = trace_consistency(k, &square_grid(cfg.int("grid")), cfg.float("tol"))?;
            let mut r = SuiteReport::new("petersson");
            r.push(&format!("trace_k{k}"), rep.verdict, &rep);
            r
        }
        CommandKind::Besselsum => {
            let (k, x) = (cfg.int("k") as u32, cfg.float("x"));
            let mut r = SuiteReport::new("besselsum");
            let d = bessel_weighted_k_sum(k, x, KSumMode::Direct)?;
            let q = bessel_weighted_k_sum(k, x, KSumMode::Kernel)?;
            let a = bessel_weighted_k_sum(k, x, KSumMode::Asymptotic);
            let gap = (d.value - q.value).norm();
            r.push(
                "direct_vs_kernel",
                Verdict::from_check(gap <= 1e-8),
                &serde_json::json!({ "direct": d, "kernel": q, "gap": gap }),
            );
            match a {
                Ok(a) => {
                    let ok = (a.value - d.value).norm() <= a.abs_error + d.abs_error;
                    r.push("asymptotic", Verdict::from_check(ok), &a);
                }
                Err(e) => r.push("asymptotic", Verdict::Inconclusive, &e.to_string()),
            }
            let s = suppression_ratio(k, cfg.float("suppression"))?;
            r.push("suppression", s.verdict, &s);
            r
        }
        CommandKind::Oscint => {
            let p = PipelineParams::new(cfg.int("n"), cfg.float("t"), cfg.float("k"), cfg.float("q"))?;
            suites::stationary_suite(&p, cfg.seed, cfg.int("cases") as usize)?
        }
        CommandKind::Afe => {
            let spec = load_form(cfg)?;
            let rep = balance_check(&spec, cfg.float("t"), &cfg.floats("balances"))?;
            let mut r = SuiteReport::new("afe");
            r.push("balance_invariance", Verdict::from_check(rep.relative_spread <= 1e-6), &rep);
            r
        }
        CommandKind::Scan => {
            let spec = load_form(cfg)?;
            let res = exponent_scan(&spec, cfg.float("t_min"), cfg.float("t_max"), cfg.float("step"))?;
            let mut r = SuiteReport::new("scan");
            r.push(
                "consistency",
                Verdict::from_check(res.summary.flagged == 0),
                &res.summary,
            );
            let plot = cfg.text("plotdata");
            if !plot.is_empty() {
                let summary = emit_plotdata(&res.records, Path::new(plot))?;
                r.push("plotdata", if summary.fit.is_some() { Verdict::Pass } else { Verdict::Inconclusive }, &summary);
            }
            scan = Some(res);
            r
        }
        CommandKind::Pipeline => {
            let p = pipeline_params(cfg)?;
            let mut r = SuiteReport::new("pipeline");
            let k_small = cfg.float("poisson_t").cbrt().round().max(1.0);
            let pp = PipelineParams::with_default_q(cfg.int("poisson_n"), cfg.float("poisson_t"), k_small)?;
            let pr = poisson_check_s5(cfg.int("m"), cfg.int("c"), &pp, 1e-6)?;
            r.push("poisson_identity", pr.verdict, &pr);
            if pp.t > 0.0 {
                let ib = i_bound_check(cfg.int("m") as f64, 1, cfg.int("c"), &pp)?;
                r.push("i_bound", ib.verdict, &ib);
            }
            let grid = AssemblyGrid {
                c_values: cfg.int("c_values") as usize,
                n_values: cfg.int("n_values") as usize,
                m_values: cfg.int("m_values") as usize,
            };
            r.merge(pipeline_suite(&p, &grid)?);
            r
        }
        CommandKind::All => {
            let mut r = SuiteReport::new("all");
            for (_, _, _, suite) in suites::acceptance(cfg.seed) {
                r.merge(suite()?);
            }
            r
        }
    };
    Ok((report, scan))
}

/// Run a resolved config and render its output.
pub fn run(cfg: &RunConfig) -> crate::Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (report, scan) = pool.install(|| execute(cfg))?;
    let text = match cfg.format {
        Format::Csv => {
            let body = match &scan {
                Some(s) => scan_csv(&s.records),
                None => report_csv(&report),
            };
            format!("{}{}", cfg.header(), body)
        }
        Format::Json => {
            let out = JsonOutput {
                config: JsonConfig {
                    run: cfg,
                    resolved: cfg.resolved_pairs().into_iter().collect(),
                },
                summary: Summary::of(&report),
                report: &report,
                records: scan.as_ref().map(|s| s.records.as_slice()),
            };
            let mut s = serde_json::to_string_pretty(&out).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    Ok(RunOutput { text, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotSummary {
    pub rows: usize,
    pub excluded: usize,
    /// (c for t^{1/3}, c for t^{1/2}) by least squares on the data rows
    pub fit: Option<(f64, f64)>,
}

fn fit_constant(rows: &[&ScanRecord], power: f64) -> f64 {
    let (num, den) = rows.iter().fold((0.0, 0.0), |(n, d), r| {
        let f = r.t.abs().powf(power);
        (n + r.modulus * f, d + f * f)
    });
    num / den
}

/// Two-column (t, |L|) data followed by the reference curves c·t^{1/3} and
/// c·t^{1/2}. Records with flagged consistency gaps are left out and counted.
pub fn emit_plotdata(records: &[ScanRecord], path: &Path) -> crate::Result<PlotSummary> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no records to plot".into()));
    }
    let rows: Vec<&ScanRecord> = records.iter().filter(|r| r.accepted).collect();
    let excluded = records.len() - rows.len();
    let fit = (rows.len() >= 2 && rows.iter().any(|r| r.t != 0.0))
        .then(|| (fit_constant(&rows, 1.0 / 3.0), fit_constant(&rows, 0.5)));
    let mut s = String::new();
    let _ = writeln!(s, "# rows = {}", rows.len());
    let _ = writeln!(s, "# excluded = {excluded}");
    match fit {
        Some((a, b)) => {
            let _ = writeln!(s, "# fit = c*t^(1/3) c={a:.12e}; c*t^(1/2) c={b:.12e}");
        }
        None => {
            let _ = writeln!(s, "# fit = skipped (fewer than two usable rows)");
        }
    }
    let _ = writeln!(s, "# t modulus");
    for r in &rows {
        let _ = writeln!(s, "{} {:.12e}", r.t, r.modulus);
    }
    if let Some((a, b)) = fit {
        for (label, c, power) in [("t^(1/3)", a, 1.0 / 3.0), ("t^(1/2)", b, 0.5)] {
            let _ = writeln!(s, "\n\n# reference c*{label} c={c:.12e}");
            for r in &rows {
                let _ = writeln!(s, "{} {:.12e}", r.t, c * r.t.abs().powf(power));
            }
        }
    }
    std::fs::write(path, s).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(PlotSummary {
        rows: rows.len(),
        excluded,
        fit,
    })
}

/// Slope of log|L| against log t over the accepted records.
pub fn loglog_slope(records: &[ScanRecord]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.accepted && r.t > 0.0 && r.modulus > 0.0)
        .map(|r| (r.t.ln(), r.modulus.ln()))
        .collect();
    linear_fit(&pts).map(|(s, _)| s)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match config_from_args(args) {
        Ok(c) => c,
        Err((code, msg)) => {
            if code == EXIT_PASS {
                print!("{msg}");
            } else {
                eprintln!("{msg}");
            }
            return code;
        }
    };
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::InvalidArgument(_) | Error::Config(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            };
        }
    };
    let written = match &cfg.output_path {
        Some(path) => std::fs::write(path, &out.text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{}", out.text);
            Ok(())
        }
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let s = Summary::of(&out.report);
    eprintln!("{}: {} pass, {} fail, {} inconclusive", cfg.command.name(), s.pass, s.fail, s.inconclusive);
    if s.fail > 0 {
        for c in out.report.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
            eprintln!("  FAIL {}", c.name);
        }
        EXIT_FAIL
    } else {
        EXIT_PASS
    }
}
