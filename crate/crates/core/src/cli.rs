//! Command-line front end: argument and config parsing, dataset loading,
//! report emission (JSON or CSV, 17 significant digits) and exit codes.
//!
//! Exit codes: 0 for PASS or informational output, 1 for FAIL, 2 for input
//! errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance;
use crate::dataset::{resolve, DatasetFile};
use crate::equivariant::{
    anomaly_check, f_function, f_value, index_twist, lefschetz_index, rigidity_scan, signature_rational_with, t_samples,
    EquivariantData, FKind, Precision,
};
use crate::error::{Error, Result};
use crate::genera::{genus_modularity_report, genus_pair, GenusKind, ModelManifold};
use crate::modularity::{jacobi_law_check, jacobi_samples, modular_form_check, tau_samples, Group, JacobiSpec};
use crate::odd_chern::quadrature::CMatrix;
use crate::odd_chern::{degree_c3, transgression_coeffs, transgression_in_ctx, winding_c1, LoopMap, OddChConvention};
use crate::series::ring::rational_to_f64;
use crate::theta::{theta_eval_tol, NumericCtx, ThetaKind, DEFAULT_TOL};
use crate::witten_bundles::{q_bundle_qexp, rank_series, theta_bundle_qexp, RankTable, ThetaBundle, E, MAX_SYMBOLIC_TRUNC, TM, V};

pub const THREADS_ENV: &str = "TOEPLITZ_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "toeplitz-rigidity", version, about = "Theta functions, transgression forms, elliptic genera and fixed-point index functions, with transformation-law checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// JSON file with defaults for the common options.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Validate inputs without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Highest power of q kept (a multiple of 1/2, at least 1).
    #[arg(long, global = true)]
    pub q_trunc: Option<f64>,
    /// Pass/fail tolerance (each subcommand has its own default).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Arithmetic for the signature function: double, double-double or exact.
    #[arg(long, global = true, env = Precision::ENV)]
    pub precision: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a theta function at (v, τ).
    ThetaEval {
        #[arg(long, default_value = "theta")]
        kind: String,
        /// Elliptic variable, as `re,im` or `a+bi`; repeatable.
        #[arg(long, required = true, allow_hyphen_values = true)]
        v: Vec<String>,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    /// q-expansion of a Witten bundle or Q_j(E) as K-theory elements.
    Qexpand {
        /// theta, theta1, theta2, theta3, q1, q2 or q3.
        #[arg(long)]
        bundle: String,
        #[arg(long, default_value_t = 3)]
        rank_tm: i64,
        /// Defaults to the tangent rank.
        #[arg(long)]
        rank_v: Option<i64>,
        #[arg(long, default_value_t = 8)]
        rank_e: i64,
    },
    /// Exact transgression coefficients λ_{j,d} as q-series.
    Transgression {
        #[arg(long)]
        j: usize,
        #[arg(long, default_value_t = 7)]
        degree_cap: u32,
        /// Rank N for the 2^{N/2} prefactor of j = 1.
        #[arg(long)]
        rank_n: Option<i64>,
    },
    /// Winding number ⟨c₁, [S¹]⟩ of a sampled loop.
    Winding {
        /// Loop dataset (JSON or built-in name) or CSV samples.
        input: String,
        /// CSV only: the last row repeats the first.
        #[arg(long)]
        closed_endpoint: bool,
    },
    /// ⟨c₃, [S³]⟩ of a sampled map, relative to the SU(2) identity.
    Degree3 { input: String },
    /// Genus q-series of a model manifold and its modularity report.
    Genus {
        dataset: String,
        /// L, W, Wp, psi1, psi2 or psi3.
        #[arg(long, default_value = "W")]
        which: String,
        #[arg(long, default_value_t = 12)]
        tau_samples: usize,
    },
    /// Anomaly check and F-function q-series of fixed-point data, with the
    /// fixed-point index identity as the verdict.
    Fixedpoint {
        dataset: String,
        /// Comma-separated F-functions (L, W, Wp, dR1, dR2, dR3).
        #[arg(long = "fn", default_value = "L,W,Wp", value_delimiter = ',')]
        functions: Vec<String>,
        #[arg(long, default_value_t = 0.381_966_011_250_105_1)]
        t: f64,
        /// Also evaluate numerically at this τ.
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
    },
    /// Rigidity scan of F-function q-coefficients over t samples.
    RigidityScan {
        dataset: String,
        #[arg(long = "fn", default_value = "W,Wp", value_delimiter = ',')]
        functions: Vec<String>,
        #[arg(long, default_value_t = 20)]
        t_samples: usize,
    },
    /// The signature function f(z) over z samples.
    Signature {
        dataset: String,
        /// Sample points; repeatable. Defaults to a 50-point sweep.
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
        #[arg(long, default_value_t = 50)]
        z_samples: usize,
        /// Start the odd Chern character at c₃ instead of c₁.
        #[arg(long)]
        from_degree_three: bool,
    },
    /// Modular-form law of a transgression coefficient or a genus.
    CheckModular {
        /// lambda1, lambda2, lambda3 or a genus (phiL, phiW, phiWp, psi1..3).
        #[arg(long = "fn")]
        function: String,
        /// Model manifold for genus functions.
        #[arg(long)]
        dataset: Option<String>,
        /// Transgression degree.
        #[arg(long, default_value_t = 7)]
        degree: u32,
        #[arg(long)]
        rank_n: Option<i64>,
        #[arg(long)]
        weight: Option<i64>,
        /// gamma-lower-0-2, gamma-upper-0-2, gamma-theta or sl2z.
        #[arg(long)]
        group: Option<String>,
        #[arg(long, default_value_t = 12)]
        tau_samples: usize,
    },
    /// Jacobi-form laws of an F-function.
    CheckJacobi {
        #[arg(long = "fn", default_value = "fW")]
        function: String,
        #[arg(long)]
        dataset: String,
        /// Defaults to n/2 from the anomaly check.
        #[arg(long)]
        index: Option<f64>,
        #[arg(long)]
        weight: Option<i64>,
        #[arg(long)]
        group: Option<String>,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Comma-separated criterion ids; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Include wall-clock timings (makes the report non-reproducible).
        #[arg(long)]
        timings: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ThetaEval { .. } => "theta-eval",
            Command::Qexpand { .. } => "qexpand",
            Command::Transgression { .. } => "transgression",
            Command::Winding { .. } => "winding",
            Command::Degree3 { .. } => "degree3",
            Command::Genus { .. } => "genus",
            Command::Fixedpoint { .. } => "fixedpoint",
            Command::RigidityScan { .. } => "rigidity-scan",
            Command::Signature { .. } => "signature",
            Command::CheckModular { .. } => "check-modular",
            Command::CheckJacobi { .. } => "check-jacobi",
            Command::Selftest { .. } => "selftest",
        }
    }

    fn inputs(&self) -> Vec<String> {
        match self {
            Command::Winding { input, .. } | Command::Degree3 { input } => vec![input.clone()],
            Command::Genus { dataset, .. }
            | Command::Fixedpoint { dataset, .. }
            | Command::RigidityScan { dataset, .. }
            | Command::Signature { dataset, .. }
            | Command::CheckJacobi { dataset, .. } => vec![dataset.clone()],
            Command::CheckModular { dataset, .. } => dataset.iter().cloned().collect(),
            _ => vec![],
        }
    }

    fn default_q_trunc(&self) -> f64 {
        match self {
            Command::Fixedpoint { .. } => 2.0,
            _ => 3.0,
        }
    }

    fn default_tolerance(&self) -> f64 {
        match self {
            Command::Winding { .. } => 1e-6,
            Command::Degree3 { .. } => 1e-3,
            Command::Signature { .. } | Command::CheckJacobi { .. } => 1e-7,
            Command::Fixedpoint { .. } => 1e-9,
            _ => 1e-8,
        }
    }
}

/// Defaults read from `--config`; command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format: Option<Format>,
    pub q_trunc: Option<f64>,
    pub tolerance: Option<f64>,
    pub threads: Option<usize>,
    pub precision: Option<String>,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<String>,
    pub q_trunc: f64,
    pub tolerance: f64,
    pub format: Format,
    pub precision: Precision,
    pub threads: Option<usize>,
    pub dry_run: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let file = match &cli.common.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Data(format!("{}: {}", p.display(), e)))?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| Error::Data(format!("config {}: {}", p.display(), e)))?
            }
            None => ConfigFile::default(),
        };
        let c = &cli.common;
        let precision = match c.precision.clone().or(file.precision) {
            Some(s) => Precision::parse(&s)?,
            None => Precision::default(),
        };
        let cfg = RunConfig {
            command: cli.command.name().to_string(),
            inputs: cli.command.inputs(),
            q_trunc: c.q_trunc.or(file.q_trunc).unwrap_or_else(|| cli.command.default_q_trunc()),
            tolerance: c.tolerance.or(file.tolerance).unwrap_or_else(|| cli.command.default_tolerance()),
            format: c.format.or(file.format).unwrap_or(Format::Json),
            precision,
            threads: c.threads.or(file.threads),
            dry_run: c.dry_run,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_trunc >= 1.0) || (2.0 * self.q_trunc).fract() != 0.0 {
            return Err(Error::Domain(format!("q-trunc must be a multiple of 1/2 and at least 1, got {}", self.q_trunc)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.threads == Some(0) {
            return Err(Error::Domain("thread count must be at least 1".into()));
        }
        Ok(())
    }

    /// Truncation in half-units: coefficients of `q^{k/2}` for `k < trunc`.
    pub fn half_trunc(&self) -> i64 {
        (2.0 * self.q_trunc) as i64 + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Informational output without a pass/fail claim.
    None,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Fail => 1,
            _ => 0,
        }
    }

    fn label(self) -> Value {
        match self {
            Verdict::Pass => json!("PASS"),
            Verdict::Fail => json!("FAIL"),
            Verdict::None => Value::Null,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

/// A CSV table; `summary` becomes the trailing key/value verdict block.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub struct Report {
    pub verdict: Verdict,
    pub body: Value,
    pub table: Table,
    pub summary: Vec<(String, Cell)>,
}

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        format!("{}", x)
    }
}

/// JSON formatter that pretty-prints and writes every float with 17
/// significant digits.
struct SigFormatter(serde_json::ser::PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for SigFormatter {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }
    fn write_f32<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter(serde_json::ser::PrettyFormatter::new()));
    v.serialize(&mut ser).expect("serializing a JSON value cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

fn cell_string(c: &Cell) -> String {
    match c {
        Cell::F(x) => fmt17(*x),
        Cell::I(k) => k.to_string(),
        Cell::S(s) => s.clone(),
    }
}

fn to_csv_string(command: &str, r: &Report) -> Result<String> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Data(format!("csv output: {}", e));
    if !r.table.headers.is_empty() {
        w.write_record(&r.table.headers).map_err(csv_err)?;
        for row in &r.table.rows {
            w.write_record(row.iter().map(cell_string)).map_err(csv_err)?;
        }
    }
    w.write_record(["key", "value"]).map_err(csv_err)?;
    w.write_record(["command", command]).map_err(csv_err)?;
    let verdict = match r.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::None => "",
    };
    w.write_record(["verdict", verdict]).map_err(csv_err)?;
    for (k, v) in &r.summary {
        w.write_record([k.as_str(), cell_string(v).as_str()]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(format!("csv output: {}", e)))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Complex number as `re,im`, `re` or anything `num_complex` parses (`1-2i`).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once(',') {
        let re = a.trim().parse::<f64>();
        let im = b.trim().parse::<f64>();
        if let (Ok(re), Ok(im)) = (re, im) {
            return Ok(Complex64::new(re, im));
        }
    }
    Complex64::from_str(t).map_err(|_| Error::Domain(format!("cannot parse {:?} as a complex number", s)))
}

fn parse_group(s: &str) -> Result<Group> {
    Group::parse(s)
}

fn load(spec: &str) -> Result<DatasetFile> {
    resolve(spec)
}

fn load_equivariant(spec: &str) -> Result<EquivariantData> {
    Ok(load(spec)?.equivariant()?.clone())
}

fn load_model(spec: &str) -> Result<ModelManifold> {
    Ok(load(spec)?.model()?.clone())
}

/// Loop samples from CSV: one row per node, `2·dim²` numbers (row-major,
/// real and imaginary parts interleaved). A non-numeric first row is taken as
/// a header.
pub fn read_loop_csv(path: &Path) -> Result<Vec<CMatrix>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {}", path.display(), e)))?;
        let nums: std::result::Result<Vec<f64>, _> = rec.iter().filter(|f| !f.is_empty()).map(str::parse::<f64>).collect();
        let nums = match nums {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::Data(format!("{}: row {} is not numeric", path.display(), i + 1))),
        };
        let dim = ((nums.len() / 2) as f64).sqrt().round() as usize;
        if dim == 0 || nums.len() != 2 * dim * dim {
            return Err(Error::Data(format!(
                "{}: row {} has {} numbers, expected 2·dim² for a square matrix",
                path.display(),
                i + 1,
                nums.len()
            )));
        }
        let entries: Vec<Complex64> = nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        out.push(CMatrix::from_row_slice(dim, dim, &entries));
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: no samples", path.display())));
    }
    Ok(out)
}

fn is_csv(input: &str) -> bool {
    input.to_ascii_lowercase().ends_with(".csv")
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn dry(cfg: &RunConfig, extra: Value) -> Report {
    Report {
        verdict: Verdict::None,
        body: json!({ "dry_run": true, "valid": true, "config": cfg, "inputs": extra }),
        table: Table::default(),
        summary: vec![("dry_run".into(), Cell::S("valid".into()))],
    }
}

fn dataset_summary(f: &DatasetFile) -> Value {
    json!({ "schema_version": f.schema_version, "description": f.description })
}

fn theta_eval(cfg: &RunConfig, kind: &str, vs: &[String], tau: &str) -> Result<Report> {
    let kind = ThetaKind::parse(kind)?;
    let tau = parse_complex(tau)?;
    let vs = vs.iter().map(|v| parse_complex(v)).collect::<Result<Vec<_>>>()?;
    NumericCtx::new(tau)?;
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "kind": format!("{:?}", kind), "points": vs.len() })));
    }
    let mut values = Vec::new();
    let mut table = Table { headers: vec!["v_re", "v_im", "tau_re", "tau_im", "re", "im"], rows: vec![] };
    for v in vs {
        let val = theta_eval_tol(kind, v, tau, DEFAULT_TOL)?;
        values.push(json!({ "v": complex_json(v), "value": complex_json(val) }));
        table.rows.push(vec![Cell::F(v.re), Cell::F(v.im), Cell::F(tau.re), Cell::F(tau.im), Cell::F(val.re), Cell::F(val.im)]);
    }
    Ok(Report {
        verdict: Verdict::None,
        body: json!({ "kind": format!("{:?}", kind), "tau": complex_json(tau), "product_tolerance": DEFAULT_TOL, "values": values }),
        table,
        summary: vec![],
    })
}

fn qexpand(cfg: &RunConfig, bundle: &str, rank_tm: i64, rank_v: Option<i64>, rank_e: i64) -> Result<Report> {
    let trunc = cfg.half_trunc();
    if trunc > MAX_SYMBOLIC_TRUNC {
        return Err(Error::Domain(format!("qexpand supports q-trunc up to {}", (MAX_SYMBOLIC_TRUNC - 1) as f64 / 2.0)));
    }
    let rank_v = rank_v.unwrap_or(rank_tm);
    let ranks = RankTable::new(&[(TM, rank_tm), (V, rank_v), (E, rank_e)]);
    let which = bundle.trim().to_ascii_lowercase();
    let theta = match which.as_str() {
        "theta" => Some(ThetaBundle::Flat),
        "theta1" => Some(ThetaBundle::One),
        "theta2" => Some(ThetaBundle::Two),
        "theta3" => Some(ThetaBundle::Three),
        "q1" | "q2" | "q3" => None,
        _ => return Err(Error::Domain(format!("unknown bundle {:?} (theta, theta1..3, q1..3)", bundle))),
    };
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "bundle": which })));
    }
    let series = match theta {
        Some(t) => theta_bundle_qexp(t, TM, V, &ranks, trunc, false)?,
        None => q_bundle_qexp(which[1..].parse().expect("q1..q3"), rank_e, trunc, false)?,
    };
    let rank = rank_series(&series, &ranks)?;
    let mut coeffs = Vec::new();
    let mut table = Table { headers: vec!["half", "q_power", "element", "rank"], rows: vec![] };
    for k in 0..trunc {
        let c = series.coeff(k);
        let r = rank.coeff(k);
        let q_power = format!("{}", k as f64 / 2.0);
        coeffs.push(json!({ "half": k, "q_power": q_power, "element": c.to_string(), "rank": r.to_string() }));
        table.rows.push(vec![Cell::I(k), Cell::S(q_power), Cell::S(c.to_string()), Cell::S(r.to_string())]);
    }
    Ok(Report {
        verdict: Verdict::None,
        body: json!({ "bundle": which, "ranks": { "T": rank_tm, "V": rank_v, "E": rank_e }, "trunc_half_units": trunc, "coefficients": coeffs }),
        table,
        summary: vec![],
    })
}

fn transgression(cfg: &RunConfig, j: usize, degree_cap: u32, rank_n: Option<i64>) -> Result<Report> {
    if !(1..=3).contains(&j) {
        return Err(Error::Domain(format!("j must be 1, 2 or 3, got {}", j)));
    }
    if degree_cap == 0 || degree_cap.is_multiple_of(2) {
        return Err(Error::Domain(format!("degree cap must be odd, got {}", degree_cap)));
    }
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "j": j, "degree_cap": degree_cap })));
    }
    let trunc = cfg.half_trunc();
    let t = transgression_coeffs(j, degree_cap, trunc, rank_n)?;
    let mut entries = BTreeMap::new();
    let mut table = Table { headers: vec!["degree", "half", "exact", "value"], rows: vec![] };
    for (d, s) in &t.entries {
        let mut coeffs = Vec::new();
        for k in 0..trunc {
            let c = s.coeff(k);
            coeffs.push(json!({ "half": k, "exact": c.to_string(), "value": rational_to_f64(&c) }));
            table.rows.push(vec![Cell::I(*d as i64), Cell::I(k), Cell::S(c.to_string()), Cell::F(rational_to_f64(&c))]);
        }
        entries.insert(format!("c{}", d), coeffs);
    }
    Ok(Report {
        verdict: Verdict::None,
        body: json!({ "j": j, "rank_n": rank_n, "trunc_half_units": trunc, "entries": entries }),
        table,
        summary: vec![],
    })
}

fn winding(cfg: &RunConfig, input: &str, closed: bool) -> Result<Report> {
    let l = if is_csv(input) {
        LoopMap::circle_from_samples(read_loop_csv(Path::new(input))?, closed)?
    } else {
        load(input)?.loop_spec()?.build()?
    };
    if !matches!(l, LoopMap::Circle { .. }) {
        return Err(Error::Domain("winding needs a loop on S¹".into()));
    }
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "input": input })));
    }
    let w = winding_c1(&l)?;
    let ok = w.residual < cfg.tolerance;
    Ok(Report {
        verdict: Verdict::from_bool(ok),
        body: json!({ "winding": w, "tolerance": cfg.tolerance }),
        table: Table { headers: vec!["value", "nearest", "residual"], rows: vec![vec![Cell::F(w.value), Cell::I(w.nearest), Cell::F(w.residual)]] },
        summary: vec![("tolerance".into(), Cell::F(cfg.tolerance))],
    })
}

fn degree3(cfg: &RunConfig, input: &str) -> Result<Report> {
    let l = if is_csv(input) {
        let samples = read_loop_csv(Path::new(input))?;
        let n = (samples.len() as f64).cbrt().round() as usize;
        LoopMap::sphere3_from_samples(n, samples)?
    } else {
        load(input)?.loop_spec()?.build()?
    };
    if !matches!(l, LoopMap::Sphere3 { .. }) {
        return Err(Error::Domain("degree3 needs a map on S³".into()));
    }
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "input": input })));
    }
    let d = degree_c3(&l)?;
    let ok = d.residual < cfg.tolerance;
    Ok(Report {
        verdict: Verdict::from_bool(ok),
        body: json!({ "degree": d, "tolerance": cfg.tolerance }),
        table: Table {
            headers: vec!["pairing", "degree", "nearest", "residual"],
            rows: vec![vec![Cell::F(d.pairing), Cell::F(d.degree), Cell::I(d.nearest), Cell::F(d.residual)]],
        },
        summary: vec![("tolerance".into(), Cell::F(cfg.tolerance))],
    })
}

fn genus(cfg: &RunConfig, dataset: &str, which: &str, n_tau: usize) -> Result<Report> {
    let which = GenusKind::parse(which)?;
    let f = load(dataset)?;
    let m = f.model()?.clone();
    check_count("tau samples", n_tau)?;
    if cfg.dry_run {
        return Ok(dry(cfg, dataset_summary(&f)));
    }
    let g = genus_pair(which, &m, cfg.half_trunc())?;
    let r = genus_modularity_report(which, &m, &tau_samples(n_tau))?;
    let verdict = if r.law_expected() { Verdict::from_bool(r.report.passes(cfg.tolerance)) } else { Verdict::None };
    let mut table = Table { headers: vec!["half", "re", "im"], rows: vec![] };
    for (k, c) in g.coefficients.iter().enumerate() {
        table.rows.push(vec![Cell::I(k as i64), Cell::F(c.re), Cell::F(c.im)]);
    }
    let mut notes = Vec::new();
    if !r.law_expected() {
        notes.push(format!("hypotheses not met ({}); the law is reported, not asserted", r.violated.join(", ")));
    }
    Ok(Report {
        verdict,
        summary: vec![
            ("residual".into(), Cell::F(r.report.residual)),
            ("tolerance".into(), Cell::F(cfg.tolerance)),
            ("law_expected".into(), Cell::S(r.law_expected().to_string())),
        ],
        body: json!({ "genus": g, "modularity": r, "tolerance": cfg.tolerance, "notes": notes }),
        table,
    })
}

fn parse_kinds(names: &[String]) -> Result<Vec<FKind>> {
    names.iter().map(|s| FKind::parse(s)).collect()
}

fn check_count(what: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain(format!("{} must be at least 1", what)));
    }
    Ok(())
}

fn fixedpoint(cfg: &RunConfig, dataset: &str, functions: &[String], t: f64, tau: Option<&str>) -> Result<Report> {
    let kinds = parse_kinds(functions)?;
    let f = load(dataset)?;
    let d = f.equivariant()?.clone();
    let tau = tau.map(parse_complex).transpose()?;
    if let Some(tau) = tau {
        NumericCtx::new(tau)?;
    }
    crate::equivariant::check_generator(t)?;
    if cfg.dry_run {
        return Ok(dry(cfg, dataset_summary(&f)));
    }
    let trunc = cfg.half_trunc();
    let anomaly = anomaly_check(&d)?;
    let mut out = Vec::new();
    let mut table = Table { headers: vec!["fn", "half", "re", "im", "index_re", "index_im"], rows: vec![] };
    let mut worst: f64 = 0.0;
    for kind in kinds {
        let s = f_function(kind, &d, t, trunc)?;
        let (twist, odd) = index_twist(kind, &d, trunc)?;
        let ind = lefschetz_index(&d, &twist, odd, t)?;
        let mut coeffs = Vec::new();
        for k in 0..trunc {
            let (a, b) = (s.coeff(k), ind.coeff(k));
            worst = worst.max((a - b).norm() / a.norm().max(1.0));
            coeffs.push(json!({ "half": k, "f": complex_json(a), "index": complex_json(b) }));
            table.rows.push(vec![Cell::S(kind.name()), Cell::I(k), Cell::F(a.re), Cell::F(a.im), Cell::F(b.re), Cell::F(b.im)]);
        }
        let value = tau.map(|tau| f_value(kind, &d, Complex64::new(t, 0.0), tau)).transpose()?;
        out.push(json!({ "fn": kind.name(), "coefficients": coeffs, "value_at_tau": value.map(complex_json) }));
    }
    Ok(Report {
        verdict: Verdict::from_bool(worst < cfg.tolerance),
        summary: vec![("index_residual".into(), Cell::F(worst)), ("tolerance".into(), Cell::F(cfg.tolerance))],
        body: json!({
            "t": t,
            "tau": tau.map(complex_json),
            "trunc_half_units": trunc,
            "anomaly": anomaly,
            "functions": out,
            "index_residual": worst,
            "tolerance": cfg.tolerance,
        }),
        table,
    })
}

fn rigidity(cfg: &RunConfig, dataset: &str, functions: &[String], n_t: usize) -> Result<Report> {
    let kinds = parse_kinds(functions)?;
    check_count("t samples", n_t)?;
    let f = load(dataset)?;
    let d = f.equivariant()?.clone();
    if cfg.dry_run {
        return Ok(dry(cfg, dataset_summary(&f)));
    }
    let ts = t_samples(n_t, 0.02, 0.48, 1e-3);
    let trunc = cfg.half_trunc();
    let anomaly = anomaly_check(&d)?;
    let mut reports = Vec::new();
    let mut table = Table { headers: vec!["fn", "half", "t", "re", "im"], rows: vec![] };
    let mut summary = Vec::new();
    let mut ok = true;
    for kind in kinds {
        let r = rigidity_scan(kind, &d, &ts, trunc, cfg.tolerance)?;
        for k in 0..trunc as usize {
            for (i, t) in r.t_samples.iter().enumerate() {
                let c = r.coefficients[i][k];
                table.rows.push(vec![Cell::S(r.kind.clone()), Cell::I(k as i64), Cell::F(*t), Cell::F(c.re), Cell::F(c.im)]);
            }
        }
        ok &= r.rigid;
        summary.push((format!("max_variation_{}", r.kind), Cell::F(r.max_variation)));
        reports.push(r);
    }
    summary.push(("tolerance".into(), Cell::F(cfg.tolerance)));
    Ok(Report {
        verdict: Verdict::from_bool(ok),
        body: json!({ "anomaly": anomaly, "trunc_half_units": trunc, "tolerance": cfg.tolerance, "scans": reports }),
        table,
        summary,
    })
}

/// The default sweep: the points where cancellation is worst, then a spiral.
pub fn default_z_samples(count: usize) -> Vec<Complex64> {
    let eps = 1e-6;
    let mut zs: Vec<Complex64> = [0.5, 1.0 + eps, 1.0 - eps, 10.0, 1e6].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    zs.truncate(count);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut k = 1;
    while zs.len() < count {
        let r = 0.2 * 50f64.powf((k as f64 * 0.618_033_988_749_895).fract());
        zs.push(Complex64::from_polar(r, golden * k as f64));
        k += 1;
    }
    zs
}

fn signature(cfg: &RunConfig, dataset: &str, zs: &[String], n_z: usize, from_three: bool) -> Result<Report> {
    use rayon::prelude::*;
    let f = load(dataset)?;
    let d = f.equivariant()?.clone();
    let zs = if zs.is_empty() {
        check_count("z samples", n_z)?;
        default_z_samples(n_z)
    } else {
        zs.iter().map(|z| parse_complex(z)).collect::<Result<Vec<_>>>()?
    };
    if cfg.dry_run {
        return Ok(dry(cfg, dataset_summary(&f)));
    }
    let conv = if from_three { OddChConvention::FromDegreeThree } else { OddChConvention::FromDegreeOne };
    let values = zs.par_iter().map(|&z| signature_rational_with(&d, z, conv, cfg.precision)).collect::<Result<Vec<_>>>()?;
    let f0 = values[0];
    let scale = f0.norm().max(1.0);
    let spread = values.iter().map(|v| (v - f0).norm() / scale).fold(0.0, f64::max);
    let mut table = Table { headers: vec!["z_re", "z_im", "re", "im"], rows: vec![] };
    for (z, v) in zs.iter().zip(&values) {
        table.rows.push(vec![Cell::F(z.re), Cell::F(z.im), Cell::F(v.re), Cell::F(v.im)]);
    }
    let points: Vec<Value> = zs.iter().zip(&values).map(|(z, v)| json!({ "z": complex_json(*z), "f": complex_json(*v) })).collect();
    Ok(Report {
        verdict: Verdict::from_bool(spread < cfg.tolerance),
        summary: vec![
            ("value_re".into(), Cell::F(f0.re)),
            ("value_im".into(), Cell::F(f0.im)),
            ("spread".into(), Cell::F(spread)),
            ("tolerance".into(), Cell::F(cfg.tolerance)),
        ],
        body: json!({
            "precision": cfg.precision.name(),
            "convention": if from_three { "from-degree-three" } else { "from-degree-one" },
            "value": complex_json(f0),
            "spread": spread,
            "tolerance": cfg.tolerance,
            "samples": points,
        }),
        table,
    })
}

fn modular_report_table(r: &crate::modularity::ModularReport) -> Table {
    let mut table = Table { headers: vec!["generator", "character_re", "character_im", "spread", "residual", "samples"], rows: vec![] };
    for g in &r.generators {
        let chi = g.character.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        table.rows.push(vec![
            Cell::S(g.word.clone()),
            Cell::F(chi.re),
            Cell::F(chi.im),
            Cell::F(g.character_spread),
            Cell::F(g.residual),
            Cell::I(g.samples as i64),
        ]);
    }
    table
}

#[allow(clippy::too_many_arguments)]
fn check_modular(
    cfg: &RunConfig,
    function: &str,
    dataset: Option<&str>,
    degree: u32,
    rank_n: Option<i64>,
    weight: Option<i64>,
    group: Option<&str>,
    n_tau: usize,
) -> Result<Report> {
    check_count("tau samples", n_tau)?;
    let group = group.map(parse_group).transpose()?;
    let name = function.trim();
    let taus = tau_samples(n_tau);
    if let Some(j) = name.strip_prefix("lambda") {
        let j: usize = j.parse().map_err(|_| Error::Domain(format!("unknown function {:?}", function)))?;
        if !(1..=3).contains(&j) || degree.is_multiple_of(2) {
            return Err(Error::Domain(format!("lambda needs j in 1..=3 and an odd degree, got j = {}, d = {}", j, degree)));
        }
        let weight = weight.unwrap_or((degree as i64 + 1) / 2);
        let group = group.unwrap_or(match j {
            1 => Group::Gamma0Lower2,
            2 => Group::Gamma0Upper2,
            _ => Group::GammaTheta,
        });
        if cfg.dry_run {
            return Ok(dry(cfg, json!({ "fn": name, "weight": weight, "group": group.name() })));
        }
        let r = modular_form_check(|tau| transgression_in_ctx(&NumericCtx::new(tau)?, j, degree, rank_n), weight, group, &taus);
        let mut notes = Vec::new();
        if degree % 4 == 1 {
            notes.push("degrees 4i+1 carry no modularity claim".to_string());
        }
        let verdict = if degree % 4 == 1 { Verdict::None } else { Verdict::from_bool(r.passes(cfg.tolerance) && !r.identically_zero) };
        return Ok(Report {
            verdict,
            table: modular_report_table(&r),
            summary: vec![("residual".into(), Cell::F(r.residual)), ("tolerance".into(), Cell::F(cfg.tolerance))],
            body: json!({ "fn": name, "degree": degree, "report": r, "tolerance": cfg.tolerance, "notes": notes }),
        });
    }
    let which = GenusKind::parse(name)?;
    let dataset = dataset.ok_or_else(|| Error::Domain(format!("{} needs --dataset with a model manifold", name)))?;
    let m = load_model(dataset)?;
    let weight = weight.unwrap_or((m.dim as i64 + 1) / 2);
    let group = group.unwrap_or(which.group());
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "fn": name, "weight": weight, "group": group.name() })));
    }
    let gr = genus_modularity_report(which, &m, &taus)?;
    let r = modular_form_check(|tau| crate::genera::genus_value(which, &m, tau), weight, group, &taus);
    let verdict = if gr.law_expected() { Verdict::from_bool(r.passes(cfg.tolerance) && !r.identically_zero) } else { Verdict::None };
    let notes: Vec<String> = gr.violated.iter().map(|v| format!("hypothesis not met: {}", v)).collect();
    Ok(Report {
        verdict,
        table: modular_report_table(&r),
        summary: vec![("residual".into(), Cell::F(r.residual)), ("tolerance".into(), Cell::F(cfg.tolerance))],
        body: json!({ "fn": which.name(), "report": r, "tolerance": cfg.tolerance, "notes": notes }),
    })
}

fn check_jacobi(
    cfg: &RunConfig,
    function: &str,
    dataset: &str,
    index: Option<f64>,
    weight: Option<i64>,
    group: Option<&str>,
    samples: usize,
) -> Result<Report> {
    let kind = FKind::parse(function)?;
    check_count("samples", samples)?;
    let d = load_equivariant(dataset)?;
    let group = group.map(parse_group).transpose()?.unwrap_or(kind.group());
    let index = match index {
        Some(i) => i,
        None => {
            let n = anomaly_check(&d)?.n.ok_or_else(|| Error::Anomaly("the anomaly n is not well defined; pass --index".into()))?;
            n as f64 / 2.0
        }
    };
    let spec = JacobiSpec { index, weight: weight.unwrap_or(kind.weight(&d)), group, lattice: JacobiSpec::even_lattice() };
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "fn": kind.name(), "spec": spec })));
    }
    let r = jacobi_law_check(|t, tau| f_value(kind, &d, t, tau), &spec, &jacobi_samples(samples));
    let mut notes = Vec::new();
    if r.modular.identically_zero {
        notes.push("the function vanishes on every sample, so the laws hold trivially".to_string());
    }
    let mut table = modular_report_table(&r.modular);
    for l in &r.lattice {
        table.rows.push(vec![
            Cell::S(format!("lattice ({},{})", l.lambda, l.mu)),
            Cell::S(String::new()),
            Cell::S(String::new()),
            Cell::S(String::new()),
            Cell::F(l.residual),
            Cell::I(l.samples as i64),
        ]);
    }
    Ok(Report {
        verdict: Verdict::from_bool(r.passes(cfg.tolerance)),
        table,
        summary: vec![("residual".into(), Cell::F(r.residual())), ("tolerance".into(), Cell::F(cfg.tolerance))],
        body: json!({ "fn": kind.name(), "spec": spec, "report": r, "residual": r.residual(), "tolerance": cfg.tolerance, "notes": notes }),
    })
}

fn selftest(cfg: &RunConfig, only: &[u8], timings: bool) -> Result<Report> {
    let ids: Vec<u8> = if only.is_empty() { acceptance::criteria().into_iter().map(|(id, _)| id).collect() } else { only.to_vec() };
    let known: Vec<u8> = acceptance::criteria().into_iter().map(|(id, _)| id).collect();
    if let Some(bad) = ids.iter().find(|id| !known.contains(id)) {
        return Err(Error::Domain(format!("no acceptance criterion {}", bad)));
    }
    if cfg.dry_run {
        return Ok(dry(cfg, json!({ "criteria": ids })));
    }
    let results = ids.iter().map(|&id| acceptance::run(id)).collect::<Result<Vec<_>>>()?;
    let mut table = Table { headers: vec!["id", "name", "verdict", "residual", "tolerance", "detail"], rows: vec![] };
    let mut items = Vec::new();
    for r in &results {
        eprintln!("{}", r);
        let mut v = serde_json::to_value(r)?;
        if !timings {
            if let Some(o) = v.as_object_mut() {
                o.remove("elapsed_s");
            }
        }
        items.push(v);
        table.rows.push(vec![
            Cell::I(r.id as i64),
            Cell::S(r.name.to_string()),
            Cell::S(if r.passed { "PASS" } else { "FAIL" }.into()),
            Cell::F(r.residual),
            Cell::F(r.tolerance),
            Cell::S(r.detail.clone()),
        ]);
    }
    let passed = results.iter().filter(|r| r.passed).count();
    Ok(Report {
        verdict: Verdict::from_bool(passed == results.len()),
        body: json!({ "criteria": items, "passed": passed, "total": results.len() }),
        table,
        summary: vec![("passed".into(), Cell::I(passed as i64)), ("total".into(), Cell::I(results.len() as i64))],
    })
}

fn dispatch(cli: &Cli, cfg: &RunConfig) -> Result<Report> {
    match &cli.command {
        Command::ThetaEval { kind, v, tau } => theta_eval(cfg, kind, v, tau),
        Command::Qexpand { bundle, rank_tm, rank_v, rank_e } => qexpand(cfg, bundle, *rank_tm, *rank_v, *rank_e),
        Command::Transgression { j, degree_cap, rank_n } => transgression(cfg, *j, *degree_cap, *rank_n),
        Command::Winding { input, closed_endpoint } => winding(cfg, input, *closed_endpoint),
        Command::Degree3 { input } => degree3(cfg, input),
        Command::Genus { dataset, which, tau_samples } => genus(cfg, dataset, which, *tau_samples),
        Command::Fixedpoint { dataset, functions, t, tau } => fixedpoint(cfg, dataset, functions, *t, tau.as_deref()),
        Command::RigidityScan { dataset, functions, t_samples } => rigidity(cfg, dataset, functions, *t_samples),
        Command::Signature { dataset, z, z_samples, from_degree_three } => signature(cfg, dataset, z, *z_samples, *from_degree_three),
        Command::CheckModular { function, dataset, degree, rank_n, weight, group, tau_samples } => check_modular(
            cfg,
            function,
            dataset.as_deref(),
            *degree,
            *rank_n,
            *weight,
            group.as_deref(),
            *tau_samples,
        ),
        Command::CheckJacobi { function, dataset, index, weight, group, samples } => {
            check_jacobi(cfg, function, dataset, *index, *weight, group.as_deref(), *samples)
        }
        Command::Selftest { only, timings } => selftest(cfg, only, *timings),
    }
}

/// Render a report in the configured format.
pub fn render(cfg: &RunConfig, r: &Report) -> Result<String> {
    match cfg.format {
        Format::Json => {
            let mut body = r.body.clone();
            if let Some(o) = body.as_object_mut() {
                let mut head = serde_json::Map::new();
                head.insert("command".into(), json!(cfg.command));
                head.insert("verdict".into(), r.verdict.label());
                head.append(o);
                body = Value::Object(head);
            }
            Ok(to_json_string(&body))
        }
        Format::Csv => to_csv_string(&cfg.command, r),
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) => 1,
        _ => 2,
    }
}

/// Parse, run and print; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            return 2;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {}", e);
            return 2;
        }
    };
    let out = pool.install(|| dispatch(&cli, &cfg)).and_then(|r| Ok((render(&cfg, &r)?, r.verdict)));
    match out {
        Ok((text, verdict)) => {
            let written = match &cli.common.output {
                Some(p) => std::fs::write(p, &text).map_err(|e| format!("{}: {}", p.display(), e)),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {}", e);
                return 2;
            }
            verdict.exit_code()
        }
        Err(e) => {
            eprintln!("error: {}", e);
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.5,-1").unwrap(), Complex64::new(0.5, -1.0));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("1-2i").unwrap(), Complex64::new(1.0, -2.0));
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        let s = to_json_string(&json!({ "x": 1.0 / 3.0 }));
        assert!(s.contains("3.3333333333333331e-1"), "{}", s);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn config_invariants() {
        let cli = Cli::try_parse_from(["x", "selftest", "--q-trunc", "0.5"]).unwrap();
        assert!(RunConfig::from_cli(&cli).is_err());
        let cli = Cli::try_parse_from(["x", "selftest", "--tolerance", "0"]).unwrap();
        assert!(RunConfig::from_cli(&cli).is_err());
        let cli = Cli::try_parse_from(["x", "rigidity-scan", "s3", "--q-trunc", "3"]).unwrap();
        let cfg = RunConfig::from_cli(&cli).unwrap();
        assert_eq!(cfg.half_trunc(), 7);
        assert_eq!(cfg.inputs, vec!["s3".to_string()]);
    }

    #[test]
    fn default_z_sweep_contains_hard_points() {
        let zs = default_z_samples(50);
        assert_eq!(zs.len(), 50);
        for x in [0.5, 1.0 + 1e-6, 1.0 - 1e-6, 10.0, 1e6] {
            assert!(zs.contains(&Complex64::new(x, 0.0)));
        }
    }
}
