//! Command-line batch driver.
//!
//! Settings come from command-line flags, then the JSON config file, then
//! built-in defaults, in that order of precedence. Relative paths inside a
//! config file are resolved against the file's directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::chains::{default_chain, FiniteProcess, ProcessSpec};
use crate::empirical::{gamma_grid, kiefer_from_root};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_path_file, write_draw_log_csv, write_path_csv};
use crate::lift::{lift_path, project};
use crate::marginals::{MarginalSpec, MixedMarginal};
use crate::mixing::{
    block_table, lifted_table, CellPartition, Coefficient, Coefficients, Method, MixingReport,
    MixingRow, WindowCounts,
};
use crate::rng::stream;
use crate::verify::{self, VerifyConfig};

// task indices for rng::stream
const TASK_SIMULATE: u64 = 1;
const TASK_LIFT: u64 = 2;
const TASK_MIXING: u64 = 3;
const TASK_KIEFER: u64 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "unilift",
    version,
    about = "Lift finite-state processes to uniform-marginal processes"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an observed path from the process.
    Simulate(SimulateArgs),
    /// Lift an observed path and check that it projects back.
    Lift(LiftArgs),
    /// Exact, lifted and Monte Carlo mixing coefficients.
    Mixing(MixingArgs),
    /// Covariance of the limiting Kiefer process and sampled replicates.
    Empirical(EmpiricalArgs),
    /// Run the verification suite.
    Verify(ProcessArg),
}

#[derive(Debug, Args)]
pub struct ProcessArg {
    /// Process spec JSON; the default two-state chain when absent.
    #[arg(long)]
    pub process: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    #[arg(long)]
    pub length: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    /// Observed path CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Marginal spec JSON (one object or an array); defaults to the
    /// observed marginals of the process.
    #[arg(long)]
    pub marginals: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MixingArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    /// Comma-separated lags.
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    /// Comma-separated block lengths.
    #[arg(long = "block", value_delimiter = ',')]
    pub block_lengths: Option<Vec<usize>>,
    /// Comma-separated atom-interval refinements.
    #[arg(long = "refine", value_delimiter = ',')]
    pub refinements: Option<Vec<usize>>,
    /// Monte Carlo windows per (n, L); 0 disables.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    /// Equal cells per coordinate for Monte Carlo.
    #[arg(long)]
    pub mc_cells: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmpiricalArgs {
    #[command(flatten)]
    pub process: ProcessArg,
    /// Grid points separated by `;`, coordinates by `,`.
    #[arg(long)]
    pub s_grid: Option<String>,
    /// Comma-separated nondecreasing times.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Fixed series truncation; automatic when absent.
    #[arg(long)]
    pub ntrunc: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
}

/// A spec given inline or as a path to a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarginalsDoc {
    One(MarginalSpec),
    Many(Vec<MarginalSpec>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub length: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSection {
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSection {
    pub lags: Option<Vec<usize>>,
    pub block_lengths: Option<Vec<usize>>,
    pub refinements: Option<Vec<usize>>,
    pub mc_samples: Option<usize>,
    pub mc_cells: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalSection {
    pub s_grid: Option<Vec<Vec<f64>>>,
    pub t_grid: Option<Vec<f64>>,
    pub ntrunc: Option<usize>,
    pub replicates: Option<usize>,
}

/// JSON run configuration. Every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub process: Option<Source<ProcessSpec>>,
    pub marginals: Option<Source<MarginalsDoc>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub lift: LiftSection,
    #[serde(default)]
    pub mixing: MixingSection,
    #[serde(default)]
    pub empirical: EmpiricalSection,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(Source::Path(p)) = cfg.process.as_mut() {
            rebase(p);
        }
        if let Some(Source::Path(p)) = cfg.marginals.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.out.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.lift.input.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub out: PathBuf,
    pub process_spec: Option<ProcessSpec>,
    pub marginals: Option<Vec<MixedMarginal>>,
    pub config: RunConfig,
}

impl Resolved {
    fn new(cli: &Cli, process_flag: Option<&PathBuf>) -> Result<Self> {
        let config = match &cli.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let process_spec = match (process_flag, &config.process) {
            (Some(p), _) => Some(read_json(p)?),
            (None, Some(Source::Path(p))) => Some(read_json(p)?),
            (None, Some(Source::Inline(s))) => Some(s.clone()),
            (None, None) => None,
        };
        let marginals = match &config.marginals {
            Some(Source::Path(p)) => Some(read_json::<MarginalsDoc>(p)?),
            Some(Source::Inline(m)) => Some(m.clone()),
            None => None,
        }
        .map(marginals_from_doc)
        .transpose()?;
        Ok(Self {
            seed: cli.seed.or(config.seed).unwrap_or(verify::DEFAULT_SEED),
            out: cli
                .out
                .clone()
                .or_else(|| config.out.clone())
                .unwrap_or_else(|| PathBuf::from(".")),
            process_spec,
            marginals,
            config,
        })
    }

    pub fn process(&self) -> Result<FiniteProcess> {
        match &self.process_spec {
            Some(s) => FiniteProcess::from_spec(s),
            None => Ok(default_chain()),
        }
    }

    fn output(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        let file = File::create(&path)?;
        Ok((path, BufWriter::new(file)))
    }
}

fn marginals_from_doc(doc: MarginalsDoc) -> Result<Vec<MixedMarginal>> {
    let specs = match doc {
        MarginalsDoc::One(m) => vec![m],
        MarginalsDoc::Many(v) => v,
    };
    specs.into_iter().map(MixedMarginal::try_from).collect()
}

/// Files written by a command plus a short summary for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub success: bool,
}

pub fn cmd_simulate(res: &Resolved, length: Option<usize>) -> Result<Outcome> {
    let proc = res.process()?;
    proc.require_mixing()?;
    let length = length.or(res.config.simulate.length).unwrap_or(1000);
    let mut rng = stream(res.seed, TASK_SIMULATE);
    let path = proc.sample_path(&mut rng, length);
    let (file, w) = res.output("x_path.csv")?;
    write_path_csv(w, "x", proc.dim(), &path.values)?;
    Ok(Outcome {
        files: vec![file],
        summary: format!(
            "simulated {length} steps of a {}-state process",
            proc.n_states()
        ),
        success: true,
    })
}

/// Result of projecting a lifted path back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub rows: usize,
    pub dim: usize,
    pub atom_draws: usize,
    /// `exact`, `within-tolerance` or `failed`.
    pub roundtrip: String,
    pub max_continuous_error: f64,
}

pub const ROUNDTRIP_TOLERANCE: f64 = 1e-12;

pub fn cmd_lift(res: &Resolved, input: Option<&PathBuf>) -> Result<Outcome> {
    let input = input
        .or(res.config.lift.input.as_ref())
        .ok_or_else(|| Error::InvalidArgument("lift needs an input path (--input)".into()))?;
    let (d, x_path) = read_path_file(input)?;
    let marginals = match &res.marginals {
        Some(m) => m.clone(),
        None => res.process()?.observed_marginals()?,
    };
    if marginals.len() != d {
        return Err(Error::DimensionMismatch {
            expected: marginals.len(),
            found: d,
        });
    }
    let mut rng = stream(res.seed, TASK_LIFT);
    let pair = lift_path(&marginals, &x_path, &mut rng)?;
    let back = project(&marginals, &pair.u_path)?;

    let mut exact = true;
    let mut atom_mismatch = false;
    let mut worst = 0.0f64;
    for (x, y) in x_path.iter().zip(&back) {
        for ((m, &a), &b) in marginals.iter().zip(x).zip(y) {
            if a != b {
                exact = false;
                if m.atom_index(a).is_some() {
                    atom_mismatch = true;
                } else {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let roundtrip = if exact {
        "exact"
    } else if !atom_mismatch && worst <= ROUNDTRIP_TOLERANCE {
        "within-tolerance"
    } else {
        "failed"
    };
    let report = LiftReport {
        rows: x_path.len(),
        dim: d,
        atom_draws: pair.draw_log.len(),
        roundtrip: roundtrip.into(),
        max_continuous_error: worst,
    };

    let (u_file, w) = res.output("u_path.csv")?;
    write_path_csv(w, "u", d, &pair.u_path)?;
    let (log_file, w) = res.output("draw_log.csv")?;
    write_draw_log_csv(w, &pair.draw_log)?;
    let (rep_file, mut w) = res.output("lift_report.json")?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(Outcome {
        files: vec![u_file, log_file, rep_file],
        summary: format!("lifted {} rows, roundtrip {roundtrip}", report.rows),
        success: roundtrip != "failed",
    })
}

fn mc_row<R: rand::Rng + ?Sized>(
    proc: &FiniteProcess,
    marginals: &[MixedMarginal],
    n: usize,
    l: usize,
    cells: usize,
    samples: usize,
    rng: &mut R,
) -> Result<MixingRow> {
    let mut counts = WindowCounts::new(CellPartition::equal(proc.dim(), cells)?, n, l)?;
    let len = counts.window_len();
    let mut states = Vec::with_capacity(len);
    let mut x_window = vec![vec![0.0; proc.dim()]; len];
    for _ in 0..samples {
        proc.sample_states_into(rng, len, &mut states);
        for (x, &s) in x_window.iter_mut().zip(&states) {
            x.copy_from_slice(proc.observe(s));
        }
        counts.add_window(&lift_path(marginals, &x_window, rng)?.u_path)?;
    }
    let a = counts.estimate(Coefficient::Alpha, rng)?;
    let b = counts.estimate(Coefficient::Beta, rng)?;
    let f = counts.estimate(Coefficient::Phi, rng)?;
    Ok(MixingRow {
        n,
        block_len: l,
        refinement: cells,
        method: Method::MonteCarlo,
        values: Coefficients {
            alpha: a.value,
            beta: b.value,
            phi: f.value,
        },
        stderr: Some([a.stderr, b.stderr, f.stderr]),
    })
}

pub fn cmd_mixing(res: &Resolved, args: &MixingArgs) -> Result<Outcome> {
    let sec = &res.config.mixing;
    let lags = args
        .lags
        .clone()
        .or(sec.lags.clone())
        .unwrap_or(vec![1, 2, 3, 4, 5]);
    let blocks = args
        .block_lengths
        .clone()
        .or(sec.block_lengths.clone())
        .unwrap_or(vec![1, 2]);
    let refinements = args
        .refinements
        .clone()
        .or(sec.refinements.clone())
        .unwrap_or(vec![1, 2, 3]);
    let mc_samples = args.mc_samples.or(sec.mc_samples).unwrap_or(0);
    let mc_cells = args.mc_cells.or(sec.mc_cells).unwrap_or(3);

    let proc = res.process()?;
    proc.require_mixing()?;
    let marginals = proc.observed_marginals()?;
    let mut rng = stream(res.seed, TASK_MIXING);
    let mut report = MixingReport::default();
    for &l in &blocks {
        for &n in &lags {
            report.rows.push(MixingRow {
                n,
                block_len: l,
                refinement: 0,
                method: Method::Exact,
                values: block_table(&proc, n, l)?.coefficients(),
                stderr: None,
            });
            for &r in &refinements {
                report.rows.push(MixingRow {
                    n,
                    block_len: l,
                    refinement: r,
                    method: Method::LiftedExact,
                    values: lifted_table(&marginals, &proc, n, l, r)?.coefficients(),
                    stderr: None,
                });
            }
            if mc_samples > 0 {
                report.rows.push(mc_row(
                    &proc, &marginals, n, l, mc_cells, mc_samples, &mut rng,
                )?);
            }
        }
    }
    report.sort();
    let violations = report.violations();
    let (file, w) = res.output("mixing.csv")?;
    report.write_csv(w)?;
    let mut summary = format!("{} rows", report.rows.len());
    for v in &violations {
        summary.push_str(&format!("\nviolation: {v}"));
    }
    Ok(Outcome {
        files: vec![file],
        summary,
        success: violations.is_empty(),
    })
}

/// Parses `"a,b;c,d"` into points.
pub fn parse_s_grid(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad grid value {v:?}")))
                })
                .collect()
        })
        .collect()
}

fn default_s_grid(proc: &FiniteProcess) -> Vec<Vec<f64>> {
    proc.symbols().points
}

pub fn cmd_empirical(res: &Resolved, args: &EmpiricalArgs) -> Result<Outcome> {
    let sec = &res.config.empirical;
    let proc = res.process()?;
    proc.require_mixing()?;
    let s_grid = match (&args.s_grid, &sec.s_grid) {
        (Some(text), _) => parse_s_grid(text)?,
        (None, Some(g)) => g.clone(),
        (None, None) => default_s_grid(&proc),
    };
    let t_grid = args
        .t_grid
        .clone()
        .or(sec.t_grid.clone())
        .unwrap_or(vec![0.25, 0.5, 0.75, 1.0]);
    let ntrunc = args.ntrunc.or(sec.ntrunc);
    let replicates = args.replicates.or(sec.replicates).unwrap_or(100);

    let gamma = gamma_grid(&proc, &s_grid, ntrunc)?;
    let root = gamma.root()?;

    let (grid_file, w) = res.output("s_grid.csv")?;
    let mut wtr = csv::Writer::from_writer(w);
    let d = proc.dim();
    let mut header = vec!["i".to_string()];
    header.extend((1..=d).map(|k| format!("s{k}")));
    wtr.write_record(&header)?;
    for (i, s) in s_grid.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(s.iter().map(|&v| fmt_f64(v)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;

    let (gamma_file, w) = res.output("gamma.csv")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["i", "j", "gamma", "tail_bound", "n_trunc"])?;
    for i in 0..s_grid.len() {
        for j in 0..s_grid.len() {
            wtr.write_record([
                i.to_string(),
                j.to_string(),
                fmt_f64(gamma.matrix[(i, j)]),
                fmt_f64(gamma.tail_bound),
                gamma.n_trunc.to_string(),
            ])?;
        }
    }
    wtr.flush()?;

    let mut rng = stream(res.seed, TASK_KIEFER);
    let (kiefer_file, w) = res.output("kiefer_replicates.csv")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["replicate", "i", "t", "value"])?;
    let (sup_file, w) = res.output("kiefer_sup.csv")?;
    let mut sup_wtr = csv::Writer::from_writer(w);
    sup_wtr.write_record(["replicate", "sup_abs"])?;
    for rep in 0..replicates {
        let k = kiefer_from_root(&root, &t_grid, &mut rng)?;
        for i in 0..k.nrows() {
            for (j, &t) in t_grid.iter().enumerate() {
                wtr.write_record([
                    rep.to_string(),
                    i.to_string(),
                    fmt_f64(t),
                    fmt_f64(k[(i, j)]),
                ])?;
            }
        }
        sup_wtr.write_record([rep.to_string(), fmt_f64(k.abs().max())])?;
    }
    wtr.flush()?;
    sup_wtr.flush()?;

    Ok(Outcome {
        files: vec![grid_file, gamma_file, kiefer_file, sup_file],
        summary: format!(
            "gamma on {} points (n_trunc {}, tail bound {:.3e}), {replicates} Kiefer replicates",
            s_grid.len(),
            gamma.n_trunc,
            gamma.tail_bound
        ),
        success: true,
    })
}

pub fn cmd_verify(res: &Resolved) -> Result<Outcome> {
    let cfg = VerifyConfig {
        seed: res.seed,
        process: res.process_spec.clone(),
    };
    let report = verify::run_all(&cfg);
    let (file, mut w) = res.output("verify_report.json")?;
    w.write_all(report.to_json()?.as_bytes())?;
    w.flush()?;
    let summary = report
        .criteria
        .iter()
        .map(|c| {
            format!(
                "{} {:>2} {:<22} value={:.6e} tol={:.3e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.name,
                c.value,
                c.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome {
        files: vec![file],
        summary,
        success: report.passed,
    })
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate(a) => {
            cmd_simulate(&Resolved::new(cli, a.process.process.as_ref())?, a.length)
        }
        Command::Lift(a) => {
            let mut res = Resolved::new(cli, a.process.process.as_ref())?;
            if let Some(p) = &a.marginals {
                res.marginals = Some(marginals_from_doc(read_json(p)?)?);
            }
            cmd_lift(&res, a.input.as_ref())
        }
        Command::Mixing(a) => cmd_mixing(&Resolved::new(cli, a.process.process.as_ref())?, a),
        Command::Empirical(a) => cmd_empirical(&Resolved::new(cli, a.process.process.as_ref())?, a),
        Command::Verify(a) => cmd_verify(&Resolved::new(cli, a.process.as_ref())?),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(out) => {
            // a closed stdout must not turn a finished run into a failure
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{}", out.summary);
            for f in &out.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            if out.success {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
