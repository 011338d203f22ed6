//! The `rex` command line.
//!
//! Exit codes: 0 success, 2 invalid input or usage, 3 oracle failure,
//! 4 budget exhausted or transport lost (partial artifacts written).

use std::fs;
use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::bridge::{serve, Endpoint, RemoteClassifier, ServeOptions};
use crate::domain::{parse_color, Config, Explanation, PixelMask, Region, ResponsibilityMap};
use crate::engine::explain;
use crate::error::{Error, Result};
use crate::extract::{extract_disjoint, rank_pixels};
use crate::io::{load_image, load_mask, save_gray, save_rgb};
use crate::metrics::{
    deletion_curve, explanation_area, insertion_curve, overlap, write_curves_csv, write_metrics_csv, GroundTruthKind,
    GroundTruthMask, MetricsRow,
};
use crate::oracle::{Classifier, Oracle, OracleError, SyntheticClassifier};
use crate::refine::RunStop;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "rex", version, about = "Causal responsibility maps and sufficient explanations for black-box image classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a responsibility map and an explanation for one image.
    Explain(ExplainArgs),
    /// Evaluate a map or explanation artifact.
    Metrics(MetricsArgs),
    /// Serve a builtin model over the wire protocol.
    Serve(ServeArgs),
}

/// Run parameters. Unset flags take their value from `--config-from` when
/// given, otherwise from the defaults.
#[derive(Debug, Args)]
pub struct RunFlags {
    /// Number of random partition iterations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub iterations: Option<u64>,
    /// Smallest superpixel area (pixels) that is still refined.
    #[arg(long = "min-superpixel", value_parser = clap::value_parser!(u64).range(1..))]
    pub min_superpixel: Option<u64>,
    /// Occlusion color as `r,g,b` or a single gray value, in [0, 1].
    #[arg(long = "mask-color")]
    pub mask_color: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Work-queue ordering (only `area`).
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long = "queue-len", value_parser = clap::value_parser!(u64).range(1..))]
    pub queue_len: Option<u64>,
    /// Maximum number of classifier calls.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: Option<u64>,
    /// Pixels added per extraction step.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub chunk: Option<u64>,
    /// Batches for insertion and deletion curves.
    #[arg(long = "insertion-steps", value_parser = clap::value_parser!(u64).range(1..))]
    pub insertion_steps: Option<u64>,
    /// Split point distribution (only `uniform`).
    #[arg(long)]
    pub distribution: Option<String>,
    /// Take unset parameters from the header of a `.rexmap` or `.rxe` artifact.
    #[arg(long = "config-from")]
    pub config_from: Option<PathBuf>,
}

impl RunFlags {
    pub fn resolve(&self) -> Result<Config> {
        let mut cfg = match &self.config_from {
            Some(path) => read_embedded_config(path)?,
            None => Config::default(),
        };
        if let Some(v) = self.iterations {
            cfg.iterations = v as usize;
        }
        if let Some(v) = self.min_superpixel {
            cfg.min_superpixel_px = v as usize;
        }
        if let Some(v) = &self.mask_color {
            cfg.mask_color = parse_color(v)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.strategy {
            cfg.queue_strategy = v.parse()?;
        }
        if let Some(v) = self.queue_len {
            cfg.queue_len = v as usize;
        }
        if let Some(v) = self.budget {
            cfg.call_budget = v;
        }
        if let Some(v) = self.chunk {
            cfg.extraction_chunk = v as usize;
        }
        if let Some(v) = self.insertion_steps {
            cfg.insertion_steps = v as usize;
        }
        if let Some(v) = &self.distribution {
            cfg.distribution = v.parse()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// `builtin:<spec>`, `cmd:<argv>` or `tcp:<host:port>`.
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub run: RunFlags,
    /// Worker threads for the partition iterations.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, default_value = "rex-out")]
    pub out: PathBuf,
    /// Also extract up to this many disjoint explanations.
    #[arg(long)]
    pub disjoint: Option<usize>,
    /// Write one refinement trace line per partition step to `trace.txt`.
    #[arg(long)]
    pub trace: bool,
    /// Per-batch timeout for remote models, in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub model: String,
    /// Responsibility map (`.rexmap` text or `.rxm` binary), for curves.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Explanation (`.rxe`), for area and overlap.
    #[arg(long)]
    pub explanation: Option<PathBuf>,
    /// Comma-separated subset of `area,ins,del,overlap`.
    #[arg(long, default_value = "area,ins,del")]
    pub metrics: String,
    /// Segmentation mask PNG (set pixels are the object).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Occluder rectangle `x,y,w,h` (column, row, width, height).
    #[arg(long)]
    pub occlusion: Option<String>,
    /// Curve steps; defaults to the artifact's embedded setting.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long = "mask-color")]
    pub mask_color: Option<String>,
    /// Metrics CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Curve points CSV path.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long = "image-id")]
    pub image_id: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// `builtin:<spec>` (or a bare builtin spec).
    #[arg(long)]
    pub model: String,
    /// `stdio` or `tcp:<port>`.
    #[arg(long, default_value = "stdio")]
    pub transport: String,
    #[arg(long = "fail-after", hide = true)]
    pub fail_after: Option<usize>,
}

/// Parses arguments and runs, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rex: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Oracle(OracleError::BudgetExhausted { .. }) => EXIT_PARTIAL,
        Error::Oracle(_) => EXIT_ORACLE,
        _ => EXIT_INPUT,
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Explain(a) => run_explain(&a),
        Command::Metrics(a) => run_metrics(&a),
        Command::Serve(a) => run_serve(&a),
    }
}

/// Resolves a `--model` value to a classifier.
pub fn resolve_model(spec: &str, timeout: Duration) -> Result<Arc<dyn Classifier>> {
    if let Some(builtin) = spec.strip_prefix("builtin:") {
        let clf = SyntheticClassifier::parse(builtin).map_err(Error::Config)?;
        return Ok(Arc::new(clf));
    }
    let endpoint = Endpoint::parse(spec).map_err(|e| Error::Config(format!("--model: {e}")))?;
    Ok(Arc::new(RemoteClassifier::connect_with_timeout(&endpoint, timeout)?))
}

fn read_embedded_config(path: &Path) -> Result<Config> {
    let bytes = fs::read(path)?;
    let embedded = if bytes.starts_with(b"RXE1") {
        Explanation::from_rxe(&bytes)?.2
    } else if bytes.starts_with(b"REXMAP") {
        let text = String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?;
        ResponsibilityMap::from_text(&text)?.1
    } else {
        return Err(Error::Format(format!("{}: not a REXMAP or RXE1 artifact", path.display())));
    };
    embedded.ok_or_else(|| Error::Format(format!("{}: no embedded config", path.display())))
}

fn read_map(path: &Path) -> Result<(ResponsibilityMap, Option<Config>)> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"RXM1") {
        Ok((ResponsibilityMap::from_binary(&bytes)?, None))
    } else {
        let text = String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?;
        ResponsibilityMap::from_text(&text)
    }
}

fn run_explain(a: &ExplainArgs) -> Result<i32> {
    let cfg = a.run.resolve()?;
    let x = load_image(&a.image)?;
    let classifier = resolve_model(&a.model, Duration::from_secs(a.timeout))?;
    let oracle = Oracle::from_arc(classifier.clone(), cfg.call_budget);
    let report = explain(&oracle, &x, &cfg, a.jobs)?;
    let (h, w) = x.dims();

    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("map.rexmap"), report.map.to_text(Some(&cfg)))?;
    fs::write(a.out.join("map.rxm"), report.map.to_binary())?;
    save_rgb(&a.out.join("heatmap.png"), h, w, report.map.heatmap_rgb())?;
    if let Some(e) = &report.explanation {
        fs::write(a.out.join("explanation.rxe"), e.to_rxe(h, w, Some(&cfg)))?;
        save_gray(&a.out.join("explanation.png"), h, w, e.mask_image(h, w))?;
    }
    if a.trace {
        let mut text = String::new();
        for (i, run) in report.runs.iter().enumerate() {
            for step in &run.trace {
                text.push_str(&format!("iteration={i} {step}\n"));
            }
        }
        fs::write(a.out.join("trace.txt"), text)?;
    }

    let color = cfg.mask_color.for_channels(x.channels())?;
    let eval = Oracle::from_arc(classifier, u64::MAX);
    let probe = eval.probe(&x, &color);
    if let Some(k) = a.disjoint {
        let explain_probe = oracle.probe(&x, &color);
        let many = extract_disjoint(&explain_probe, &report.map, report.label, &cfg, k)?;
        for (i, e) in many.iter().enumerate() {
            fs::write(a.out.join(format!("explanation-{i}.rxe")), e.to_rxe(h, w, Some(&cfg)))?;
        }
    }
    let curves = report
        .explanation
        .as_ref()
        .map(|_| -> Result<_> {
            Ok((
                insertion_curve(&probe, &report.ranking, report.label, cfg.insertion_steps)?,
                deletion_curve(&probe, &report.ranking, report.label, cfg.insertion_steps)?,
            ))
        })
        .transpose()?;
    let row = MetricsRow {
        image_id: image_id(&a.image, None),
        area: report.explanation.as_ref().map(|e| explanation_area(e, h, w)),
        ins_auc: curves.as_ref().map(|c| c.0.normalized_auc),
        del_auc: curves.as_ref().map(|c| c.1.normalized_auc),
        inside: None,
        outside: None,
        calls: report.ledger.calls_made,
        seconds: report.elapsed.as_secs_f64(),
    };
    write_metrics_csv(fs::File::create(a.out.join("metrics.csv"))?, &[row])?;

    let stop = match &report.stop {
        RunStop::Completed => "completed".to_owned(),
        RunStop::BudgetExhausted => "budget".to_owned(),
        RunStop::Transport(e) => format!("transport ({e})"),
    };
    println!(
        "label={} confidence={} explanation_px={} degenerate={} calls={} cache_hits={} partitions={} stop={}",
        report.label,
        report.confidence,
        report.explanation.as_ref().map_or_else(|| "-".to_owned(), |e| e.len().to_string()),
        report.explanation.as_ref().is_some_and(|e| e.degenerate_empty),
        report.ledger.calls_made,
        report.ledger.cache_hits,
        report.partitions_evaluated(),
        stop
    );
    Ok(if report.stop == RunStop::Completed { EXIT_OK } else { EXIT_PARTIAL })
}

fn image_id(path: &Path, given: Option<&str>) -> String {
    given.map_or_else(
        || path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
        str::to_owned,
    )
}

fn parse_occlusion(s: &str, h: usize, w: usize) -> Result<Region> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("--occlusion `{s}`: {e}")))?;
    let [x, y, rw, rh] = v[..] else {
        return Err(Error::Config(format!("--occlusion `{s}`: expected x,y,w,h")));
    };
    let r = Region::new(y, x, rh, rw);
    if rw == 0 || rh == 0 || r.bottom() > h || r.right() > w {
        return Err(Error::Config(format!("--occlusion `{s}` outside the {h}x{w} image")));
    }
    Ok(r)
}

fn run_metrics(a: &MetricsArgs) -> Result<i32> {
    let x = load_image(&a.image)?;
    let (h, w) = x.dims();
    let wanted: Vec<&str> = a.metrics.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if let Some(bad) = wanted.iter().find(|m| !matches!(**m, "area" | "ins" | "del" | "overlap")) {
        return Err(Error::Config(format!("unknown metric `{bad}`")));
    }
    let has = |m: &str| wanted.contains(&m);

    let map = a.map.as_deref().map(read_map).transpose()?;
    let explanation = a
        .explanation
        .as_deref()
        .map(|p| -> Result<_> { Explanation::from_rxe(&fs::read(p)?) })
        .transpose()?;
    for (dims, what) in map
        .iter()
        .map(|(m, _)| (m.dims(), "map"))
        .chain(explanation.iter().map(|(_, d, _)| (*d, "explanation")))
    {
        if dims != (h, w) {
            return Err(Error::DimensionMismatch {
                expected: format!("{h}x{w} {what}"),
                actual: format!("{}x{}", dims.0, dims.1),
            });
        }
    }
    let embedded = map
        .as_ref()
        .and_then(|(_, c)| c.clone())
        .or_else(|| explanation.as_ref().and_then(|(_, _, c)| c.clone()))
        .unwrap_or_default();
    let color = match &a.mask_color {
        Some(c) => parse_color(c)?,
        None => embedded.mask_color.clone(),
    }
    .for_channels(x.channels())?;
    let steps = a.steps.unwrap_or(embedded.insertion_steps).max(1);

    let classifier = resolve_model(&a.model, Duration::from_secs(a.timeout))?;
    let oracle = Oracle::from_arc(classifier, u64::MAX);
    let probe = oracle.probe(&x, &color);
    let label = match &explanation {
        Some((e, _, _)) => e.label,
        None => probe.original()?.label,
    };

    let need_map = || {
        map.as_ref()
            .map(|(m, _)| m)
            .ok_or_else(|| Error::Config("curve metrics need --map".to_owned()))
    };
    let need_expl = || {
        explanation
            .as_ref()
            .map(|(e, _, _)| e)
            .ok_or_else(|| Error::Config("area and overlap need --explanation".to_owned()))
    };
    let started = std::time::Instant::now();
    let ranking = if has("ins") || has("del") { Some(rank_pixels(need_map()?)?) } else { None };
    let ins = match (&ranking, has("ins")) {
        (Some(r), true) => Some(insertion_curve(&probe, r, label, steps)?),
        _ => None,
    };
    let del = match (&ranking, has("del")) {
        (Some(r), true) => Some(deletion_curve(&probe, r, label, steps)?),
        _ => None,
    };
    let area = if has("area") { Some(explanation_area(need_expl()?, h, w)) } else { None };
    let ov = if has("overlap") {
        let truth = match (&a.mask, &a.occlusion) {
            (Some(p), None) => GroundTruthMask {
                kind: GroundTruthKind::Segmentation,
                pixels: load_mask(p, h, w)?,
            },
            (None, Some(s)) => GroundTruthMask {
                kind: GroundTruthKind::Occlusion,
                pixels: PixelMask::from_regions(h, w, &[parse_occlusion(s, h, w)?]),
            },
            _ => return Err(Error::Config("overlap needs exactly one of --mask or --occlusion".to_owned())),
        };
        overlap(need_expl()?, &truth)?
    } else {
        None
    };
    for c in ins.iter().chain(del.iter()) {
        if c.step_like {
            eprintln!("rex: classifier reports hard labels only; curves are step functions");
        }
        if !c.normalized {
            eprintln!("rex: base confidence is 0; curves are not normalized");
        }
    }

    let row = MetricsRow {
        image_id: image_id(&a.image, a.image_id.as_deref()),
        area,
        ins_auc: ins.as_ref().map(|c| c.normalized_auc),
        del_auc: del.as_ref().map(|c| c.normalized_auc),
        inside: ov.map(|o| o.inside),
        outside: ov.map(|o| o.outside),
        calls: oracle.ledger().calls_made(),
        seconds: started.elapsed().as_secs_f64(),
    };
    match &a.out {
        Some(p) => write_metrics_csv(fs::File::create(p)?, &[row])?,
        None => write_metrics_csv(io::stdout().lock(), &[row])?,
    }
    if let Some(p) = &a.curves {
        let mut named = Vec::new();
        if let Some(c) = &ins {
            named.push(("insertion", c));
        }
        if let Some(c) = &del {
            named.push(("deletion", c));
        }
        write_curves_csv(fs::File::create(p)?, &named)?;
    }
    Ok(EXIT_OK)
}

fn run_serve(a: &ServeArgs) -> Result<i32> {
    let spec = a.model.strip_prefix("builtin:").unwrap_or(&a.model);
    let clf = SyntheticClassifier::parse(spec).map_err(Error::Config)?;
    let opts = ServeOptions {
        fail_after: a.fail_after,
        ..ServeOptions::new(clf.classes())
    };
    if a.transport == "stdio" {
        let stdin = io::stdin().lock();
        let mut stdout = io::stdout().lock();
        serve(&clf, &opts, stdin, &mut stdout)?;
        stdout.flush()?;
        return Ok(EXIT_OK);
    }
    let port = a
        .transport
        .strip_prefix("tcp:")
        .ok_or_else(|| Error::Config(format!("--transport `{}`: expected stdio or tcp:<port>", a.transport)))?;
    let listener = TcpListener::bind(format!("127.0.0.1:{port}"))?;
    eprintln!("rex: serving on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = stream?;
        let reader = BufReader::new(stream.try_clone()?);
        if let Err(e) = serve(&clf, &opts, reader, stream) {
            eprintln!("rex: connection ended: {e}");
        }
    }
    Ok(EXIT_OK)
}
