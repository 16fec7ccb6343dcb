//! Command-line front end for the `sgcc` binary.
//!
//! Every flag may also be set in a TOML file passed with `--config`, using the
//! flag name as key (`ctu-size = 64`). Flags win over the file, the file wins
//! over built-in defaults.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::codec::{
    encode_sequence, generate_clip, read_raw_luma, read_sequence, write_raw_luma, write_sequence, ClipKind,
    CostProfile, EncoderConfig, GopStructure, Plane, ProxySequence, QpSchedule,
};
use crate::error::{Error, Result};
use crate::eval::{
    control_error_report, ctu_weights, emit_curves, ew_psnr, psnr, report_stem, ControlErrorReport, CurvePoint,
    EwPsnrSeries, PsnrSeries,
};
use crate::io::{format_saliency, read_saliency, saliency_sequence, write_atomic};
use crate::pipeline::{
    fit_params, frame_qps, plan_sequence, simulate, FrameRow, PlannedFrame, SimulationInput, SimulationSummary,
    TrainingClip,
};
use crate::solver::{read_plans, write_plans, FramePlan, MixStrategy, MixTable};
use crate::types::{ControlPlan, FrameLayout, ModelParams, SaliencyMap, DEFAULT_CTU_SIZE};

#[derive(Debug, Parser)]
#[command(name = "sgcc", version, about = "Saliency-guided decoding complexity control")]
pub struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by the subcommands.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Common {
    #[arg(long, global = true)]
    pub width: Option<usize>,
    #[arg(long, global = true)]
    pub height: Option<usize>,
    #[arg(long, global = true)]
    pub frames: Option<usize>,
    #[arg(long, global = true)]
    pub ctu_size: Option<usize>,
    #[arg(long, global = true)]
    pub gop: Option<usize>,
    #[arg(long, global = true)]
    pub intra_period: Option<usize>,
    /// Base QP; hierarchy layer `l` is coded at QP + l.
    #[arg(long, global = true)]
    pub qp: Option<u8>,
    /// Target reductions, comma separated fractions.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default)]
    pub targets: Vec<f64>,
    /// Saliency CSV: `frame,w_0,...,w_{N-1}` per line.
    #[arg(long, global = true)]
    pub saliency: Option<PathBuf>,
    /// Model parameters JSON.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Plan files written by `plan`, comma separated; `--targets`, when
    /// given, pairs with them in order.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(default)]
    pub plans: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Record planning wall-clock time per frame.
    #[arg(long, global = true)]
    #[serde(default)]
    pub wallclock: bool,
    /// Operation weight profile JSON.
    #[arg(long, global = true)]
    pub cost_profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamsInit {
    Table3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic clip with its saliency maps.
    Gen {
        #[arg(long, default_value = "gradient")]
        clip: ClipKind,
        /// Also write the proxy bitstream.
        #[arg(long)]
        encode: bool,
    },
    /// Fit model parameters on proxy-codec training data.
    Fit {
        /// Synthetic clip kinds to train on.
        #[arg(long, value_delimiter = ',')]
        clips: Vec<ClipKind>,
        /// Raw luma training videos; saliency defaults to `<stem>_saliency.csv`.
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Write fixed constants instead of fitting.
        #[arg(long)]
        params_init: Option<ParamsInit>,
    },
    /// Precompute the MC mix table for one frame size.
    Table {
        /// CTU count; defaults to the layout's.
        #[arg(long)]
        ctus: Option<usize>,
    },
    /// Plan every frame for each target.
    Plan {
        /// Proxy bitstream supplying layout, GOP and frame QPs.
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Use a precomputed mix table instead of live branch-and-bound.
        #[arg(long)]
        table: bool,
    },
    /// Decode with and without plans and report what changed.
    Simulate {
        /// Synthetic source clip.
        #[arg(long)]
        clip: Option<ClipKind>,
        /// Raw luma source video.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Proxy bitstream of the source; encoded on the fly when absent.
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Attention maps for the weighted PSNR; defaults to the saliency.
        #[arg(long)]
        attention: Option<PathBuf>,
        /// Sequence name used in report file names.
        #[arg(long)]
        name: Option<String>,
        /// Write the planned decode as raw luma.
        #[arg(long)]
        decoded: bool,
    },
    /// PSNR and weighted PSNR between two raw luma videos.
    Evaluate {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Collect simulation reports into one curve table.
    Curves {
        /// Report JSON files written by `simulate`.
        #[arg(long, required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
    },
}

/// Resolved settings after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub width: usize,
    pub height: usize,
    pub frames: Option<usize>,
    pub ctu_size: usize,
    pub gop: usize,
    pub intra_period: usize,
    pub qp: u8,
    pub targets: Vec<f64>,
    pub saliency: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub plans: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub wallclock: bool,
    pub profile: CostProfile,
}

pub const DEFAULT_WIDTH: usize = 416;
pub const DEFAULT_HEIGHT: usize = 240;
pub const DEFAULT_FRAMES: usize = 17;

fn existing(p: Option<PathBuf>) -> Result<Option<PathBuf>> {
    match p {
        Some(p) if !p.exists() => Err(Error::validation(format!("{} does not exist", p.display()))),
        p => Ok(p),
    }
}

impl RunConfig {
    pub fn resolve(flags: Common, file: Common) -> Result<Self> {
        let pick = |a: Vec<f64>, b: Vec<f64>| if a.is_empty() { b } else { a };
        let targets = pick(flags.targets, file.targets);
        if let Some(t) = targets.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::validation(format!("target {t} must lie in [0, 1)")));
        }
        let plans = if flags.plans.is_empty() { file.plans } else { flags.plans };
        for p in &plans {
            existing(Some(p.clone()))?;
        }
        let profile = match existing(flags.cost_profile.or(file.cost_profile))? {
            Some(p) => CostProfile::from_json(&fs::read_to_string(p)?)?,
            None => CostProfile::default(),
        };
        Ok(RunConfig {
            width: flags.width.or(file.width).unwrap_or(DEFAULT_WIDTH),
            height: flags.height.or(file.height).unwrap_or(DEFAULT_HEIGHT),
            frames: flags.frames.or(file.frames),
            ctu_size: flags.ctu_size.or(file.ctu_size).unwrap_or(DEFAULT_CTU_SIZE),
            gop: flags.gop.or(file.gop).unwrap_or(8),
            intra_period: flags.intra_period.or(file.intra_period).unwrap_or(32),
            qp: flags.qp.or(file.qp).unwrap_or(32),
            targets,
            saliency: existing(flags.saliency.or(file.saliency))?,
            params: existing(flags.params.or(file.params))?,
            plans,
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            seed: flags.seed.or(file.seed).unwrap_or(1),
            wallclock: flags.wallclock || file.wallclock,
            profile,
        })
    }

    pub fn layout(&self) -> Result<FrameLayout> {
        FrameLayout::new(self.width, self.height, self.ctu_size)
    }

    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            ctu_size: self.ctu_size,
            gop_size: self.gop,
            intra_period: self.intra_period,
            ..EncoderConfig::with_qp(self.qp)
        }
    }

    fn load_params(&self) -> Result<ModelParams> {
        match &self.params {
            Some(p) => ModelParams::from_json(&fs::read_to_string(p)?),
            None => Err(Error::validation("--params is required")),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one parsed command; returns the paths written, one line each.
pub fn run(cli: Cli) -> Result<Vec<String>> {
    let file = match &cli.config {
        Some(p) => toml::from_str(&fs::read_to_string(p)?)
            .map_err(|e| Error::Format {
                what: "config file",
                detail: e.to_string(),
            })?,
        None => Common::default(),
    };
    let cfg = RunConfig::resolve(cli.common, file)?;
    let mut written = Vec::new();
    match cli.command {
        Command::Gen { clip, encode } => cmd_gen(&cfg, clip, encode, &mut written)?,
        Command::Fit {
            clips,
            input,
            params_init,
        } => cmd_fit(&cfg, &clips, &input, params_init, &mut written)?,
        Command::Table { ctus } => cmd_table(&cfg, ctus, &mut written)?,
        Command::Plan { sequence, table } => cmd_plan(&cfg, sequence.as_deref(), table, &mut written)?,
        Command::Simulate {
            clip,
            input,
            sequence,
            attention,
            name,
            decoded,
        } => {
            let src = SourceArgs {
                clip,
                input,
                sequence,
                attention,
                name,
            };
            cmd_simulate(&cfg, &src, decoded, &mut written)?
        }
        Command::Evaluate { reference, test } => cmd_evaluate(&cfg, &reference, &test, &mut written)?,
        Command::Curves { runs } => cmd_curves(&cfg, &runs, &mut written)?,
    }
    Ok(written)
}

fn put(path: PathBuf, bytes: &[u8], written: &mut Vec<String>) -> Result<()> {
    write_atomic(&path, bytes)?;
    written.push(path.display().to_string());
    Ok(())
}

fn indexed(maps: &[SaliencyMap]) -> Vec<(usize, SaliencyMap)> {
    maps.iter().cloned().enumerate().collect()
}

fn sibling_saliency(video: &Path) -> PathBuf {
    let stem = video.file_stem().unwrap_or_default().to_string_lossy();
    video.with_file_name(format!("{stem}_saliency.csv"))
}

fn load_video(cfg: &RunConfig, video: &Path, saliency: Option<&Path>) -> Result<(Vec<Plane>, Vec<SaliencyMap>)> {
    let frames = read_raw_luma(video, cfg.width, cfg.height, cfg.frames)?;
    let sal_path = saliency.map_or_else(|| sibling_saliency(video), Path::to_path_buf);
    let maps = read_saliency(&sal_path, cfg.layout()?)?;
    let sal = saliency_sequence(maps, Some(frames.len()))?;
    Ok((frames, sal))
}

fn cmd_gen(cfg: &RunConfig, kind: ClipKind, encode: bool, written: &mut Vec<String>) -> Result<()> {
    let layout = cfg.layout()?;
    let clip = generate_clip(kind, &layout, cfg.frames.unwrap_or(DEFAULT_FRAMES), cfg.seed)?;
    let name = kind.name();
    let yuv = cfg.out(&format!("{name}.yuv"));
    write_raw_luma(&yuv, &clip.frames)?;
    written.push(yuv.display().to_string());
    put(
        cfg.out(&format!("{name}_saliency.csv")),
        format_saliency(&indexed(&clip.saliency)).as_bytes(),
        written,
    )?;
    if encode {
        let seq = encode_sequence(&clip.frames, &cfg.encoder())?;
        let p = cfg.out(&format!("{name}.pseq"));
        write_sequence(&p, &seq)?;
        written.push(p.display().to_string());
    }
    Ok(())
}

fn cmd_fit(
    cfg: &RunConfig,
    kinds: &[ClipKind],
    inputs: &[PathBuf],
    init: Option<ParamsInit>,
    written: &mut Vec<String>,
) -> Result<()> {
    if init == Some(ParamsInit::Table3) {
        return put(cfg.out("params.json"), ModelParams::table3().to_json()?.as_bytes(), written);
    }
    if inputs.len() > 1 && cfg.saliency.is_some() {
        return Err(Error::validation("--saliency applies to a single --input"));
    }
    let layout = cfg.layout()?;
    let kinds = if kinds.is_empty() && inputs.is_empty() {
        vec![ClipKind::Gradient, ClipKind::Texture]
    } else {
        kinds.to_vec()
    };
    let mut clips = Vec::new();
    for (i, &kind) in kinds.iter().enumerate() {
        let c = generate_clip(kind, &layout, cfg.frames.unwrap_or(DEFAULT_FRAMES), cfg.seed + i as u64)?;
        clips.push(TrainingClip {
            name: kind.name().into(),
            frames: c.frames,
            saliency: c.saliency,
        });
    }
    for path in inputs {
        let (frames, saliency) = load_video(cfg, path, cfg.saliency.as_deref())?;
        clips.push(TrainingClip {
            name: path.display().to_string(),
            frames,
            saliency,
        });
    }
    let (params, report) = fit_params(&clips, &cfg.encoder(), &cfg.profile)?;
    put(cfg.out("params.json"), params.to_json()?.as_bytes(), written)?;
    put(
        cfg.out("fit_report.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
        written,
    )
}

fn cmd_table(cfg: &RunConfig, ctus: Option<usize>, written: &mut Vec<String>) -> Result<()> {
    let n = match ctus {
        Some(n) => n,
        None => cfg.layout()?.num_ctus(),
    };
    let params = cfg.load_params()?;
    let table = MixTable::build(n, &params)?;
    put(cfg.out(&format!("mix_table_{n}.json")), table.to_json()?.as_bytes(), written)
}

/// One row of the per-frame planning diagnostics.
#[derive(Debug, Serialize)]
struct DiagnosticsRow {
    frame: usize,
    frame_type: &'static str,
    qp: u8,
    branch: crate::types::Branch,
    threshold_index: Option<usize>,
    budget: Option<usize>,
    n1: Option<usize>,
    n2: Option<usize>,
    n3: Option<usize>,
    predicted: f64,
    intra_capped: bool,
    planning_us: Option<f64>,
}

fn diagnostics_csv(planned: &[PlannedFrame], wallclock: bool) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (k, p) in planned.iter().enumerate() {
        let d = &p.diagnostics;
        w.serialize(DiagnosticsRow {
            frame: k,
            frame_type: if p.intra { "I" } else { "B" },
            qp: p.qp,
            branch: d.branch,
            threshold_index: d.threshold_index,
            budget: d.budget,
            n1: d.mix.map(|m| m.n1),
            n2: d.mix.map(|m| m.n2),
            n3: d.mix.map(|m| m.n3),
            predicted: d.predicted_reduction,
            intra_capped: d.intra_capped,
            planning_us: wallclock.then_some(p.elapsed_us),
        })?;
    }
    w.into_inner().map_err(|e| Error::validation(e.to_string()))
}

fn target_tag(t: f64) -> String {
    format!("{}", (t * 100.0).round() as i64)
}

fn cmd_plan(cfg: &RunConfig, sequence: Option<&Path>, use_table: bool, written: &mut Vec<String>) -> Result<()> {
    if cfg.targets.is_empty() {
        return Err(Error::validation("--targets is required"));
    }
    let sal_path = cfg
        .saliency
        .as_deref()
        .ok_or_else(|| Error::validation("--saliency is required"))?;
    let params = cfg.load_params()?;
    let seq = sequence.map(read_sequence).transpose()?;
    let layout = seq.as_ref().map_or_else(|| cfg.layout(), |s| Ok(s.layout))?;
    let frames = seq.as_ref().map(ProxySequence::len).or(cfg.frames);
    let saliency = saliency_sequence(read_saliency(sal_path, layout)?, frames)?;
    let (gop, qps) = match seq {
        Some(s) => (s.gop.clone(), frame_qps(&s)),
        None => {
            let gop = GopStructure::new(saliency.len(), cfg.gop, cfg.intra_period)?;
            let sched = QpSchedule::Base(cfg.qp);
            let qps = gop.frames().iter().map(|f| sched.frame_qp(f.poc, f.layer)).collect();
            (gop, qps)
        }
    };
    let table = if use_table {
        Some(MixTable::build(layout.num_ctus(), &params)?)
    } else {
        None
    };
    let strategy = table.as_ref().map_or(MixStrategy::Live, MixStrategy::Table);
    for &t in &cfg.targets {
        let planned = plan_sequence(&gop, &qps, &saliency, t, &params, strategy)?;
        let plans: Vec<FramePlan> = planned.iter().enumerate().map(|(k, p)| FramePlan::new(k, &p.plan)).collect();
        let path = cfg.out(&format!("plans_{}.json", target_tag(t)));
        write_plans(&path, &plans)?;
        written.push(path.display().to_string());
        put(
            cfg.out(&format!("plans_{}_diagnostics.csv", target_tag(t))),
            &diagnostics_csv(&planned, cfg.wallclock)?,
            written,
        )?;
    }
    Ok(())
}

/// Where `simulate` takes its source pictures and bitstream from.
#[derive(Debug, Clone, Default)]
pub struct SourceArgs {
    pub clip: Option<ClipKind>,
    pub input: Option<PathBuf>,
    pub sequence: Option<PathBuf>,
    pub attention: Option<PathBuf>,
    pub name: Option<String>,
}

/// Per-frame report row; `planning_us` appears only with `--wallclock`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    #[serde(flatten)]
    pub frame: FrameRow,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planning_us: Option<f64>,
}

/// Contents of `<sequence>_<qp>_<target>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub summary: SimulationSummary,
    pub frames: Vec<ReportRow>,
}

#[derive(Debug, Serialize)]
struct ControlErrorFile<'a> {
    sequence: &'a str,
    targets: &'a [f64],
    achieved: &'a [f64],
    #[serde(flatten)]
    report: ControlErrorReport,
}

struct Run {
    tag: String,
    target: Option<f64>,
    plans: Vec<ControlPlan>,
    timing: Option<Vec<f64>>,
}

fn csv_rows(rows: &[ReportRow], wallclock: bool) -> Result<Vec<u8>> {
    // Flattened structs cannot go through csv's serde path, so columns are
    // written explicitly.
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "poc",
        "frame_type",
        "qp",
        "predicted",
        "achieved",
        "psnr_reference",
        "psnr_planned",
        "delta_psnr",
        "delta_ew_psnr",
        "propagation_drop",
    ];
    if wallclock {
        header.push("planning_us");
    }
    w.write_record(&header)?;
    for r in rows {
        let f = &r.frame;
        let mut rec = vec![
            f.poc.to_string(),
            f.frame_type.clone(),
            f.qp.to_string(),
            f.predicted.to_string(),
            f.achieved.to_string(),
            f.psnr_reference.to_string(),
            f.psnr_planned.to_string(),
            f.delta_psnr.to_string(),
            f.delta_ew_psnr.map(|v| v.to_string()).unwrap_or_default(),
            f.propagation_drop.to_string(),
        ];
        if wallclock {
            rec.push(r.planning_us.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::validation(e.to_string()))
}

fn cmd_simulate(cfg: &RunConfig, src: &SourceArgs, decoded: bool, written: &mut Vec<String>) -> Result<()> {
    let (default_name, source, saliency) = match (&src.clip, &src.input) {
        (Some(kind), None) => {
            let c = generate_clip(*kind, &cfg.layout()?, cfg.frames.unwrap_or(DEFAULT_FRAMES), cfg.seed)?;
            (kind.name().to_string(), c.frames, c.saliency)
        }
        (None, Some(path)) => {
            let (frames, sal) = load_video(cfg, path, cfg.saliency.as_deref())?;
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            (stem, frames, sal)
        }
        _ => return Err(Error::validation("simulate needs exactly one of --clip or --input")),
    };
    let name = src.name.clone().unwrap_or(default_name);
    let seq = match existing(src.sequence.clone())? {
        Some(p) => read_sequence(&p)?,
        None => encode_sequence(&source, &cfg.encoder())?,
    };
    if seq.len() != source.len() || seq.layout.width() != source[0].width() || seq.layout.height() != source[0].height()
    {
        return Err(Error::validation("bitstream does not match the source video"));
    }
    let attention = match existing(src.attention.clone())? {
        Some(p) => saliency_sequence(read_saliency(&p, seq.layout)?, Some(seq.len()))?,
        None => saliency.clone(),
    };
    let n = seq.layout.num_ctus();

    let mut runs = Vec::new();
    if !cfg.plans.is_empty() {
        if !cfg.targets.is_empty() && cfg.targets.len() != cfg.plans.len() {
            return Err(Error::validation(format!(
                "{} plan files for {} targets; give one target per plan file or none",
                cfg.plans.len(),
                cfg.targets.len()
            )));
        }
        for (k, p) in cfg.plans.iter().enumerate() {
            let fp = read_plans(p)?;
            let plans: Vec<ControlPlan> = fp.iter().map(FramePlan::to_plan).collect();
            let tag = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            runs.push(Run {
                tag,
                target: cfg.targets.get(k).copied(),
                plans,
                timing: None,
            });
        }
    } else if !cfg.targets.is_empty() {
        let params = cfg.load_params()?;
        for &t in &cfg.targets {
            let planned = plan_sequence(&seq.gop, &frame_qps(&seq), &saliency, t, &params, MixStrategy::Live)?;
            runs.push(Run {
                tag: target_tag(t),
                target: Some(t),
                timing: Some(planned.iter().map(|p| p.elapsed_us).collect()),
                plans: planned.into_iter().map(|p| p.plan).collect(),
            });
        }
    } else {
        runs.push(Run {
            tag: "none".into(),
            target: None,
            plans: vec![ControlPlan::identity(n); seq.len()],
            timing: None,
        });
    }

    let input = SimulationInput {
        name: &name,
        seq: &seq,
        source: &source,
        attention: &attention,
        profile: &cfg.profile,
    };
    let qp = seq.frames[0].qp;
    let mut reference = None;
    let (mut targets, mut achieved) = (Vec::new(), Vec::new());
    for run in runs {
        let sim = simulate(&input, &run.plans, run.target, reference.as_ref())?;
        let stem = match run.target {
            Some(t) => report_stem(&name, qp, t),
            None => format!("{name}_{qp}_{}", run.tag),
        };
        let rows: Vec<ReportRow> = sim
            .frames
            .iter()
            .enumerate()
            .map(|(k, f)| ReportRow {
                frame: f.clone(),
                planning_us: if cfg.wallclock {
                    run.timing.as_ref().map(|t| t[k])
                } else {
                    None
                },
            })
            .collect();
        put(cfg.out(&format!("{stem}.csv")), &csv_rows(&rows, cfg.wallclock)?, written)?;
        let report = SimulationReport {
            summary: sim.summary.clone(),
            frames: rows,
        };
        put(
            cfg.out(&format!("{stem}.json")),
            serde_json::to_string_pretty(&report)?.as_bytes(),
            written,
        )?;
        if decoded {
            let p = cfg.out(&format!("{stem}.yuv"));
            write_raw_luma(&p, &sim.planned.frames)?;
            written.push(p.display().to_string());
        }
        if let Some(t) = run.target {
            targets.push(t);
            achieved.push(sim.summary.achieved);
        }
        reference = Some(sim.reference);
    }
    if !targets.is_empty() && targets.iter().all(|&t| t > 0.0) {
        let file = ControlErrorFile {
            sequence: &name,
            targets: &targets,
            achieved: &achieved,
            report: control_error_report(&targets, &achieved)?,
        };
        put(
            cfg.out(&format!("{name}_{qp}_control_error.json")),
            serde_json::to_string_pretty(&file)?.as_bytes(),
            written,
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluateFile {
    psnr: PsnrSeries,
    ew_psnr: Option<EwPsnrSeries>,
}

fn cmd_evaluate(cfg: &RunConfig, reference: &Path, test: &Path, written: &mut Vec<String>) -> Result<()> {
    let r = read_raw_luma(reference, cfg.width, cfg.height, cfg.frames)?;
    let t = read_raw_luma(test, cfg.width, cfg.height, cfg.frames)?;
    let p = psnr(&r, &t)?;
    let ew = match &cfg.saliency {
        Some(s) => {
            let maps = saliency_sequence(read_saliency(s, cfg.layout()?)?, Some(r.len()))?;
            Some(ew_psnr(&r, &t, &ctu_weights(&maps))?)
        }
        None => None,
    };
    let mut line = format!("PSNR {:.4} dB", p.mean);
    if let Some(m) = ew.as_ref().and_then(|e| e.mean) {
        let _ = write!(line, ", EW-PSNR {m:.4} dB");
    }
    put(
        cfg.out("evaluate.json"),
        serde_json::to_string_pretty(&EvaluateFile { psnr: p, ew_psnr: ew })?.as_bytes(),
        written,
    )?;
    written.push(line);
    Ok(())
}

fn cmd_curves(cfg: &RunConfig, runs: &[PathBuf], written: &mut Vec<String>) -> Result<()> {
    let mut points = Vec::new();
    for p in runs {
        let report: SimulationReport = serde_json::from_str(&fs::read_to_string(p)?)?;
        let s = report.summary;
        let missing = |what: &str| Error::validation(format!("{}: run has no {what}", p.display()));
        points.push(CurvePoint {
            sequence: s.sequence,
            qp: s.qp,
            target: s.target.ok_or_else(|| missing("target"))?,
            achieved: s.achieved,
            delta_psnr: s.delta_psnr,
            delta_ew_psnr: s.delta_ew_psnr.ok_or_else(|| missing("weighted PSNR"))?,
        });
    }
    put(cfg.out("curves.csv"), emit_curves(&points)?.as_bytes(), written)
}
