//! Monte-Carlo harness: synthetic data generation, the coverage benchmark,
//! and the CSV/JSON formats they write.
//!
//! All randomness derives from one seed. Each (data regime, sample size,
//! repetition) cell draws from its own ChaCha20 stream, so results do not
//! depend on scheduling and the CSV is byte-identical across runs.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::{conf_ev, conf_general, conf_pev, ConfidenceRegion};
use crate::error::{invalid, Error, Result};
use crate::matrix::{centered_covariance, empirical_covariance, PdMatrix, SampleMatrix};
use crate::scm::{generate_benchmark_scm_with, EffectTruth, GeneratorConfig, LinearScm, RegimeTag};

/// Tolerance for "the region contains the true effect".
pub const COVERAGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataRegime {
    General,
    PartialEv,
    Ev,
}

impl DataRegime {
    pub const ALL: [DataRegime; 3] = [DataRegime::General, DataRegime::PartialEv, DataRegime::Ev];

    pub fn name(self) -> &'static str {
        match self {
            DataRegime::General => "general",
            DataRegime::PartialEv => "partial_ev",
            DataRegime::Ev => "ev",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(DataRegime::General),
            "partial_ev" => Ok(DataRegime::PartialEv),
            "ev" => Ok(DataRegime::Ev),
            other => Err(invalid(format!("unknown regime '{other}' (expected general, partial_ev or ev)"))),
        }
    }

    pub fn tag(self, i: usize, j: usize) -> RegimeTag {
        match self {
            DataRegime::General => RegimeTag::General,
            DataRegime::PartialEv => RegimeTag::PartialEv { i, j },
            DataRegime::Ev => RegimeTag::FullEv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GeneralConf,
    PartialEvConf,
    EvConf,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::GeneralConf, Method::PartialEvConf, Method::EvConf];

    pub fn name(self) -> &'static str {
        match self {
            Method::GeneralConf => "general_conf",
            Method::PartialEvConf => "partial_ev_conf",
            Method::EvConf => "ev_conf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "general_conf" => Ok(Method::GeneralConf),
            "partial_ev_conf" => Ok(Method::PartialEvConf),
            "ev_conf" => Ok(Method::EvConf),
            other => Err(invalid(format!(
                "unknown method '{other}' (expected general_conf, partial_ev_conf or ev_conf)"
            ))),
        }
    }

    pub fn region(self, prec: &PdMatrix, n: usize, i: usize, j: usize, alpha: f64) -> Result<ConfidenceRegion> {
        match self {
            Method::GeneralConf => conf_general(prec, n, i, j, alpha),
            Method::PartialEvConf => conf_pev(prec, n, i, j, alpha),
            Method::EvConf => conf_ev(prec, n, i, j, alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub d: usize,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub alpha: f64,
    pub data_regimes: Vec<DataRegime>,
    pub methods: Vec<Method>,
    pub truth: EffectTruth,
    pub i: usize,
    pub j: usize,
    pub seed: u64,
    /// Mean-center data before forming the covariance.
    pub center: bool,
    /// Record wall-clock time per region; otherwise `runtime_ms` is 0.
    pub timing: bool,
    pub generator: GeneratorConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            d: 10,
            ns: vec![100, 1000, 10000],
            reps: 1000,
            alpha: 0.05,
            data_regimes: DataRegime::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            truth: EffectTruth::Nonzero,
            i: 0,
            j: 1,
            seed: 0,
            center: false,
            timing: false,
            generator: GeneratorConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(invalid("d must be at least 3"));
        }
        if self.reps == 0 {
            return Err(invalid("reps must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        if self.i == self.j || self.i >= self.d || self.j >= self.d {
            return Err(invalid("need distinct query nodes below d"));
        }
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(invalid("need at least one positive sample size"));
        }
        if self.reps >= 1 << 24 || self.ns.iter().any(|&n| n >= 1 << 24) {
            return Err(invalid("reps and sample sizes must stay below 2^24"));
        }
        Ok(())
    }
}

/// Stream of the ChaCha20 generator used for one benchmark cell.
pub fn stream_id(regime: DataRegime, n: usize, rep: usize) -> u64 {
    ((regime as u64) << 48) | ((n as u64) << 24) | rep as u64
}

/// Draws the model and data for one cell.
pub fn draw_dataset(
    config: &BenchmarkConfig,
    regime: DataRegime,
    n: usize,
    rep: usize,
) -> Result<(LinearScm, SampleMatrix)> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(stream_id(regime, n, rep));
    let tag = regime.tag(config.i, config.j);
    let scm = generate_benchmark_scm_with(config.d, tag, config.truth, config.i, config.j, &config.generator, &mut rng)?;
    let data = scm.sample_with(n, &mut rng)?;
    Ok((scm, data))
}

pub fn covariance(data: &SampleMatrix, center: bool) -> Result<PdMatrix> {
    if center {
        centered_covariance(data)
    } else {
        empirical_covariance(data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub rep: usize,
    pub n: usize,
    pub data_regime: DataRegime,
    pub method: Method,
    pub true_effect: f64,
    pub covered: bool,
    pub width: f64,
    pub contains_zero: bool,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub data_regime: DataRegime,
    pub method: Method,
    pub n: usize,
    pub reps: usize,
    pub failed: usize,
    pub coverage: f64,
    pub mean_width: f64,
    pub zero_proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub config: BenchmarkConfig,
    pub cells: Vec<CellSummary>,
}

impl BenchmarkSummary {
    pub fn cell(&self, regime: DataRegime, method: Method, n: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.data_regime == regime && c.method == method && c.n == n)
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutput {
    /// Sorted by (data regime, method, n, rep).
    pub rows: Vec<BenchRow>,
    pub summary: BenchmarkSummary,
}

struct Failure {
    data_regime: DataRegime,
    method: Method,
    n: usize,
}

pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkOutput> {
    config.validate()?;
    let jobs: Vec<(DataRegime, usize, usize)> = config
        .data_regimes
        .iter()
        .flat_map(|&r| config.ns.iter().flat_map(move |&n| (0..config.reps).map(move |rep| (r, n, rep))))
        .collect();

    let results: Vec<(Vec<BenchRow>, Vec<Failure>)> = jobs
        .par_iter()
        .map(|&(regime, n, rep)| run_cell(config, regime, n, rep))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, f) in results {
        rows.extend(r);
        failures.extend(f);
    }
    rows.sort_by(|a, b| {
        (a.data_regime, a.method, a.n, a.rep).cmp(&(b.data_regime, b.method, b.n, b.rep))
    });
    let summary = summarize(config, &rows, &failures);
    Ok(BenchmarkOutput { rows, summary })
}

fn run_cell(config: &BenchmarkConfig, regime: DataRegime, n: usize, rep: usize) -> Result<(Vec<BenchRow>, Vec<Failure>)> {
    // generation exhaustion is a configuration problem, not a per-rep failure
    let (scm, data) = draw_dataset(config, regime, n, rep)?;
    let truth = scm.true_effect(config.i, config.j);
    let fail_all = || config.methods.iter().map(|&method| Failure { data_regime: regime, method, n }).collect();
    let prec = match covariance(&data, config.center).and_then(|s| s.inverse()) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("{} n={n} rep={rep}: {e}", regime.name());
            return Ok((Vec::new(), fail_all()));
        }
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &method in &config.methods {
        let start = Instant::now();
        match method.region(&prec, n, config.i, config.j, config.alpha) {
            Ok(region) => {
                let runtime_ms = if config.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                rows.push(BenchRow {
                    rep,
                    n,
                    data_regime: regime,
                    method,
                    true_effect: truth,
                    covered: region.contains_within(truth, COVERAGE_TOLERANCE),
                    width: region.width(),
                    contains_zero: region.includes_zero(),
                    runtime_ms,
                });
            }
            Err(e) => {
                log::warn!("{} {} n={n} rep={rep}: {e}", regime.name(), method.name());
                failures.push(Failure { data_regime: regime, method, n });
            }
        }
    }
    Ok((rows, failures))
}

/// Aggregates rows per (data regime, method, n), summing in row order.
pub fn summarize_rows(config: &BenchmarkConfig, rows: &[BenchRow]) -> BenchmarkSummary {
    summarize(config, rows, &[])
}

fn summarize(config: &BenchmarkConfig, rows: &[BenchRow], failures: &[Failure]) -> BenchmarkSummary {
    let mut cells = Vec::new();
    let mut regimes = config.data_regimes.clone();
    regimes.sort();
    let mut methods = config.methods.clone();
    methods.sort();
    let mut ns = config.ns.clone();
    ns.sort();
    for &r in &regimes {
        for &m in &methods {
            for &n in &ns {
                let cell: Vec<&BenchRow> =
                    rows.iter().filter(|x| x.data_regime == r && x.method == m && x.n == n).collect();
                let count = cell.len();
                let mean = |f: &dyn Fn(&BenchRow) -> f64| {
                    if count == 0 {
                        f64::NAN
                    } else {
                        cell.iter().map(|x| f(x)).sum::<f64>() / count as f64
                    }
                };
                cells.push(CellSummary {
                    data_regime: r,
                    method: m,
                    n,
                    reps: count,
                    failed: failures.iter().filter(|f| f.data_regime == r && f.method == m && f.n == n).count(),
                    coverage: mean(&|x| x.covered as u8 as f64),
                    mean_width: mean(&|x| x.width),
                    zero_proportion: mean(&|x| x.contains_zero as u8 as f64),
                });
            }
        }
    }
    BenchmarkSummary { config: config.clone(), cells }
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub const BENCH_HEADER: &str = "rep,n,data_regime,method,true_effect,covered,width,contains_zero,runtime_ms";

pub fn write_rows_csv<W: Write>(mut w: W, rows: &[BenchRow]) -> Result<()> {
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.rep,
            r.n,
            r.data_regime.name(),
            r.method.name(),
            fmt_float(r.true_effect),
            r.covered as u8,
            fmt_float(r.width),
            r.contains_zero as u8,
            fmt_float(r.runtime_ms),
        )?;
    }
    Ok(())
}

/// Parses a benchmark CSV written by [`write_rows_csv`].
pub fn read_rows_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == BENCH_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: format!("expected header '{BENCH_HEADER}'") }),
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let lineno = k + 2;
            let err = |m: &str| Error::Parse { line: lineno, message: m.to_string() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(err("expected 9 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(&format!("bad number '{s}'")));
            let int = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad integer '{s}'")));
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err(&format!("bad flag '{s}'"))),
            };
            Ok(BenchRow {
                rep: int(f[0])?,
                n: int(f[1])?,
                data_regime: DataRegime::parse(f[2]).map_err(|e| err(&e.to_string()))?,
                method: Method::parse(f[3]).map_err(|e| err(&e.to_string()))?,
                true_effect: num(f[4])?,
                covered: flag(f[5])?,
                width: num(f[6])?,
                contains_zero: flag(f[7])?,
                runtime_ms: num(f[8])?,
            })
        })
        .collect()
}

/// Writes `bench.csv` and `summary.json` into `out`.
pub fn write_benchmark(out: &Path, output: &BenchmarkOutput) -> Result<()> {
    fs::create_dir_all(out)?;
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, &output.rows)?;
    fs::write(out.join("bench.csv"), buf)?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&output.summary)? + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub d: usize,
    pub n: usize,
    pub reps: usize,
    pub regime: DataRegime,
    pub truth: EffectTruth,
    pub i: usize,
    pub j: usize,
    pub seed: u64,
    pub generator: GeneratorConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub rep: usize,
    pub file: String,
    pub true_effect: f64,
    pub scm: LinearScm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SimulateConfig,
    pub datasets: Vec<DatasetEntry>,
}

/// Writes one samples CSV per repetition plus `manifest.json` holding the
/// generating models. Repetition `r` uses stream `r` of the seed.
pub fn simulate(config: &SimulateConfig, out: &Path) -> Result<Manifest> {
    let bench = BenchmarkConfig {
        d: config.d,
        ns: vec![config.n],
        reps: config.reps,
        truth: config.truth,
        i: config.i,
        j: config.j,
        seed: config.seed,
        generator: config.generator,
        ..BenchmarkConfig::default()
    };
    bench.validate()?;
    fs::create_dir_all(out)?;
    let mut datasets = Vec::with_capacity(config.reps);
    for rep in 0..config.reps {
        let (scm, data) = draw_dataset(&bench, config.regime, config.n, rep)?;
        let file = format!("data_{rep:04}.csv");
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &data)?;
        fs::write(out.join(&file), buf)?;
        datasets.push(DatasetEntry { rep, file, true_effect: scm.true_effect(config.i, config.j), scm });
    }
    let manifest = Manifest { config: config.clone(), datasets };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn write_samples_csv<W: Write>(mut w: W, data: &SampleMatrix) -> Result<()> {
    let header: Vec<String> = (0..data.d()).map(|k| format!("x{k}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in data.rows() {
        let fields: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Reads an `n × d` numeric CSV. A first line with any non-numeric field is
/// taken as a header. Errors carry 1-based line numbers.
pub fn read_samples_csv(text: &str) -> Result<SampleMatrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse { line: k + 1, message: e.to_string() })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if let Some(w) = width {
                    if vals.len() != w {
                        return Err(Error::Parse {
                            line,
                            message: format!("expected {w} fields, found {}", vals.len()),
                        });
                    }
                }
                if let Some(pos) = vals.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Parse { line, message: format!("field {} is not finite", pos + 1) });
                }
                width = Some(vals.len());
                rows.push(vals);
            }
            Err(_) if k == 0 => {}
            Err(_) => {
                let bad = record.iter().find(|f| f.trim().parse::<f64>().is_err()).unwrap_or("");
                return Err(Error::Parse { line, message: format!("non-numeric field '{bad}'") });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, message: "no data rows".into() });
    }
    SampleMatrix::from_rows(&rows)
}
