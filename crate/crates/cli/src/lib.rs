//! Batch front end: `align`, `filter`, `assign`, `eval` and `simulate`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use colearn::align::{align_dataset, describe, Lexicon, LexiconError};
use colearn::assign::{assign_topk, select_regression_head, Anchor, AssignConfig, AssignMode, CostWeights, LabelRef};
use colearn::eval::evaluate_dataset;
use colearn::model::{detections_to_json, load_dataset, load_detections, BBox, Dataset, DatasetError, Detection, ImageId};
use colearn::pseudo::{
    filter_with_thresholds, trace_to_jsonl, EmConfig, ThresholdConfig, ThresholdState, ThresholdTraceRecord,
};
use colearn::sim::{run_colearning_sim, SimConfig, SimError};

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    /// 0 on success, 1 on runtime failure, 2 on invalid input or flags.
    pub exit_code: i32,
    /// Text for standard output.
    pub summary: String,
    /// Text for standard error.
    pub diagnostics: String,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::Io { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Toml(_) => CliError::Input(e.to_string()),
            SimError::Dataset(d) => d.into(),
            SimError::Ema(_) => CliError::Runtime(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "colearn", version, about = "Pseudo-label curation, assignment, evaluation and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Relabel described ground-truth boxes with canonical classes.
    Align(AlignArgs),
    /// Turn detections into pseudo-labels with score thresholds and class-wise NMS.
    Filter(FilterArgs),
    /// Assign anchors to pseudo-labels by matching cost or static IoU.
    Assign(AssignArgs),
    /// Compute per-class AP@IoU and mAP.
    Eval(EvalArgs),
    /// Run the synthetic teacher-student loop.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct AlignArgs {
    /// Input dataset JSON.
    #[arg(long)]
    dataset: PathBuf,
    /// Lexicon JSON; the bundled lexicon is used when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Output path for the aligned dataset.
    #[arg(long)]
    out: PathBuf,
    /// Output path for the per-record alignment report [default: <out>.report.json].
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Dataset JSON giving classes and images, and detections unless --det is set.
    #[arg(long)]
    dataset: PathBuf,
    /// Detections JSON (array, or object with a "detections" array).
    #[arg(long)]
    det: Option<PathBuf>,
    /// Fixed score threshold for every class.
    #[arg(long, conflicts_with = "dynamic")]
    threshold: Option<f64>,
    /// Fit a per-class two-component score mixture and threshold at its crossover (the default).
    #[arg(long)]
    dynamic: bool,
    /// Lower bound for dynamic thresholds.
    #[arg(long, default_value_t = 0.3)]
    floor: f64,
    /// Upper bound for dynamic thresholds.
    #[arg(long, default_value_t = 0.95)]
    cap: f64,
    /// Threshold for classes whose scores cannot be fitted.
    #[arg(long, default_value_t = 0.9)]
    initial: f64,
    /// Maximum EM iterations per class.
    #[arg(long, default_value_t = 100)]
    em_iters: usize,
    /// EM stops when the log-likelihood gain drops below this.
    #[arg(long, default_value_t = 1e-6)]
    em_tol: f64,
    /// NMS overlap above which the lower-ranked box is suppressed.
    #[arg(long, default_value_t = 0.5)]
    nms_iou: f64,
    /// Output path for the pseudo-labels.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON-lines threshold trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssignArgs {
    /// Dataset JSON giving classes and images.
    #[arg(long)]
    dataset: PathBuf,
    /// Anchors JSON: records with image_id, bbox, scores (array or class map) and optional heads.
    #[arg(long)]
    anchors: PathBuf,
    /// Pseudo-labels JSON (as written by `filter`, or any detections file).
    #[arg(long)]
    labels: PathBuf,
    /// Anchors per pseudo-label in cost_topk mode.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// cost_topk or static_iou.
    #[arg(long, default_value = "cost_topk")]
    mode: AssignMode,
    /// Weight of the classification term.
    #[arg(long, default_value_t = 1.0)]
    w_cls: f64,
    /// Weight of the localization term.
    #[arg(long, default_value_t = 2.0)]
    w_reg: f64,
    /// Overlap for a positive in static_iou mode.
    #[arg(long, default_value_t = 0.5)]
    iou_threshold: f64,
    /// Output path for the assignment.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Ground-truth dataset JSON.
    #[arg(long)]
    gt: PathBuf,
    /// Detections JSON.
    #[arg(long)]
    det: PathBuf,
    /// IoU needed for a true positive.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    /// Output path for the report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulator TOML config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed overriding the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV time series.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the selected command.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => done(0, text, String::new(), Vec::new()),
                _ => done(2, String::new(), text, Vec::new()),
            };
        }
    };
    if let Err(e) = configure_threads() {
        return done(e.code(), String::new(), format!("error: {}\n", e.message()), Vec::new());
    }
    let outcome = match cli.command {
        Command::Align(a) => cmd_align(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Assign(a) => cmd_assign(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match outcome {
        Ok((summary, artifacts)) => done(0, summary, String::new(), artifacts),
        Err(e) => done(e.code(), String::new(), format!("error: {}\n", e.message()), Vec::new()),
    }
}

fn done(exit_code: i32, summary: String, diagnostics: String, artifacts: Vec<PathBuf>) -> CommandResult {
    CommandResult { exit_code, summary, diagnostics, artifacts }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("COLEARN_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("COLEARN_THREADS must be a positive integer, got '{raw}'")))?;
    // The global pool can only be set once per process; later calls keep the first size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Output files staged next to their destinations and renamed into place only
/// once every one of them has been written.
struct Staged {
    files: Vec<(tempfile::NamedTempFile, PathBuf)>,
}

impl Staged {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, path: &Path, contents: &[u8]) -> CliResult<()> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let io = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
        let mut tmp = tempfile::Builder::new().prefix(".colearn-").suffix(".tmp").tempfile_in(dir).map_err(io)?;
        tmp.write_all(contents).map_err(io)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io)?;
        }
        tmp.as_file().sync_all().map_err(io)?;
        self.files.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn add_json(&mut self, path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        self.add(path, text.as_bytes())
    }

    fn commit(self) -> CliResult<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (tmp, dest) in self.files {
            tmp.persist(&dest).map_err(|e| CliError::Runtime(format!("cannot write {}: {}", dest.display(), e.error)))?;
            written.push(dest);
        }
        Ok(written)
    }
}

fn input(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{field}: {message}"))
}

fn check_unit(field: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(input(field, format!("{v} is outside [0,1]")))
    }
}

fn default_report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "aligned".into());
    out.with_file_name(format!("{stem}.report.json"))
}

fn cmd_align(a: AlignArgs) -> CliResult<(String, Vec<PathBuf>)> {
    let dataset = load_dataset(&a.dataset)?;
    let lexicon = match &a.lexicon {
        Some(p) => Lexicon::load(p, dataset.vocabulary.clone())?,
        None => Lexicon::default_lexicon(),
    };
    let (aligned, issues) = align_dataset(&dataset, &lexicon);
    let mut records = Vec::new();
    let mut relabeled = 0usize;
    for (i, (before, after)) in dataset.ground_truth.iter().zip(&aligned.ground_truth).enumerate() {
        let Some(text) = before.description.as_deref() else { continue };
        let mut rec = Map::new();
        rec.insert("record_index".into(), json!(i));
        rec.insert("description".into(), json!(text));
        if let Ok(sd) = describe(text, &lexicon) {
            rec.insert("attr_c".into(), json!(sd.attr_c));
            rec.insert("attr_t".into(), json!(sd.attr_t));
            rec.insert("attr_m".into(), json!(sd.attr_m));
            rec.insert("standardized".into(), json!(sd.text()));
        }
        rec.insert("label_before".into(), json!(dataset.vocabulary.name(before.class_id)));
        rec.insert("label_after".into(), json!(aligned.vocabulary.name(after.class_id)));
        if before.class_id != after.class_id {
            relabeled += 1;
        }
        records.push(Value::Object(rec));
    }
    let described = records.len();
    let report = json!({
        "described": described,
        "relabeled": relabeled,
        "issues": issues,
        "records": records,
    });
    let report_path = a.report.clone().unwrap_or_else(|| default_report_path(&a.out));
    let mut staged = Staged::new();
    staged.add(&a.out, aligned.to_json_string().as_bytes())?;
    staged.add_json(&report_path, &report)?;
    let artifacts = staged.commit()?;
    let summary = format!(
        "aligned {described} described boxes: {relabeled} relabeled, {} issues\nwrote {} and {}\n",
        issues.len(),
        a.out.display(),
        report_path.display()
    );
    Ok((summary, artifacts))
}

fn detections_for(dataset: &Dataset, det: Option<&Path>) -> CliResult<Vec<Detection>> {
    match det {
        Some(p) => Ok(load_detections(p, dataset)?),
        None => dataset
            .detections
            .clone()
            .ok_or_else(|| input("--det", "the dataset has no \"detections\" section; pass --det")),
    }
}

fn cmd_filter(a: FilterArgs) -> CliResult<(String, Vec<PathBuf>)> {
    check_unit("--nms-iou", a.nms_iou)?;
    let dataset = load_dataset(&a.dataset)?;
    let dets = detections_for(&dataset, a.det.as_deref())?;
    let vocab = &dataset.vocabulary;
    let n = vocab.len();

    let (thresholds, raws, n_scores): (Vec<f64>, Vec<Option<f64>>, Vec<usize>) = match a.threshold {
        Some(t) => {
            check_unit("--threshold", t)?;
            let counts = (0..n).map(|c| dets.iter().filter(|d| d.class_id.0 == c).count()).collect();
            (vec![t; n], vec![None; n], counts)
        }
        None => {
            let config = ThresholdConfig {
                floor: a.floor,
                cap: a.cap,
                initial: a.initial,
                smoothing: 0.0,
                window: dets.len().max(4),
                em: EmConfig { max_iters: a.em_iters, tol: a.em_tol },
            };
            let mut state = ThresholdState::new(n, config).map_err(|e| input("thresholds", e))?;
            for d in &dets {
                state.observe(d.class_id, [d.score]);
            }
            let mut raws = vec![None; n];
            for u in state.update() {
                raws[u.class_id.0] = u.raw;
            }
            let counts = (0..n).map(|c| state.window_len(colearn::model::ClassId(c))).collect();
            (state.thresholds().to_vec(), raws, counts)
        }
    };
    let labels = filter_with_thresholds(&dets, &thresholds, a.nms_iou);

    let mut kept = vec![0usize; n];
    for l in &labels {
        kept[l.class_id.0] += 1;
    }
    let threshold_map: Map<String, Value> = vocab.names().iter().zip(&thresholds).map(|(c, t)| (c.clone(), json!(t))).collect();
    let out = json!({
        "iteration": 0,
        "thresholds": threshold_map,
        "labels": detections_to_json(vocab, &labels),
    });
    let mut staged = Staged::new();
    staged.add_json(&a.out, &out)?;
    if let Some(trace) = &a.trace {
        let records: Vec<ThresholdTraceRecord> = (0..n)
            .filter(|&c| n_scores[c] > 0)
            .map(|c| ThresholdTraceRecord {
                iteration: 0,
                class: vocab.names()[c].clone(),
                raw_threshold: raws[c],
                smoothed_threshold: thresholds[c],
                n_scores: n_scores[c],
                kept_count: kept[c],
            })
            .collect();
        staged.add(trace, trace_to_jsonl(&records).as_bytes())?;
    }
    let artifacts = staged.commit()?;
    Ok((format!("kept {} of {} detections\nwrote {}\n", labels.len(), dets.len(), a.out.display()), artifacts))
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: malformed JSON: {e}", path.display())))
}

fn parse_box(v: &Value, loc: &str) -> CliResult<BBox> {
    let arr: [f64; 4] = serde_json::from_value(v.clone()).map_err(|e| input(loc, format!("bbox must be [x,y,w,h]: {e}")))?;
    BBox::try_from(arr).map_err(|e| input(loc, e))
}

/// Anchor records grouped by image, each with its position in the file.
fn load_anchors(path: &Path, dataset: &Dataset) -> CliResult<BTreeMap<ImageId, Vec<(usize, Anchor)>>> {
    let value = read_json(path)?;
    let records = match &value {
        Value::Array(a) => a.as_slice(),
        Value::Object(m) => match m.get("anchors") {
            Some(Value::Array(a)) => a.as_slice(),
            _ => return Err(input("anchors", "expected an array of anchors or an object with an \"anchors\" array")),
        },
        _ => return Err(input("anchors", "expected an array of anchors")),
    };
    let images = dataset.image_map();
    let vocab = &dataset.vocabulary;
    let mut out: BTreeMap<ImageId, Vec<(usize, Anchor)>> = BTreeMap::new();
    for (i, rec) in records.iter().enumerate() {
        let loc = format!("anchors[{i}]");
        let image_id = rec
            .get("image_id")
            .and_then(Value::as_u64)
            .map(ImageId)
            .ok_or_else(|| input(&loc, "missing integer field \"image_id\""))?;
        let image = images.get(&image_id).ok_or_else(|| input(&loc, format!("unknown image_id {image_id}")))?;
        let bbox = parse_box(rec.get("bbox").ok_or_else(|| input(&loc, "missing field \"bbox\""))?, &loc)?;
        if !bbox.within(image.width as f64, image.height as f64) {
            return Err(input(&loc, format!("bbox {:?} exceeds image {image_id} bounds", bbox.to_array())));
        }
        let scores = match rec.get("scores") {
            Some(Value::Array(a)) => {
                if a.len() != vocab.len() {
                    return Err(input(&loc, format!("scores has {} entries, expected {}", a.len(), vocab.len())));
                }
                a.iter()
                    .map(|s| s.as_f64().ok_or_else(|| input(&loc, "scores must be numbers")))
                    .collect::<CliResult<Vec<f64>>>()?
            }
            Some(Value::Object(m)) => {
                let mut s = vec![0.0; vocab.len()];
                for (name, v) in m {
                    let c = vocab.index_of(name).ok_or_else(|| input(&loc, format!("unknown class '{name}' in scores")))?;
                    s[c.0] = v.as_f64().ok_or_else(|| input(&loc, "scores must be numbers"))?;
                }
                s
            }
            _ => return Err(input(&loc, "missing field \"scores\" (array or class map)")),
        };
        let heads = match rec.get("heads") {
            None | Some(Value::Null) => None,
            Some(Value::Array(hs)) => Some(
                hs.iter()
                    .enumerate()
                    .map(|(h, v)| parse_box(v, &format!("{loc}.heads[{h}]")))
                    .collect::<CliResult<Vec<BBox>>>()?,
            ),
            Some(_) => return Err(input(&loc, "heads must be an array of boxes")),
        };
        let anchor = Anchor::new(bbox, scores, heads).map_err(|e| input(&loc, e))?;
        out.entry(image_id).or_default().push((i, anchor));
    }
    Ok(out)
}

fn cmd_assign(a: AssignArgs) -> CliResult<(String, Vec<PathBuf>)> {
    if a.k == 0 {
        return Err(input("--k", "must be at least 1"));
    }
    if !(a.w_cls >= 0.0 && a.w_cls.is_finite()) {
        return Err(input("--w-cls", "must be finite and non-negative"));
    }
    if !(a.w_reg >= 0.0 && a.w_reg.is_finite()) {
        return Err(input("--w-reg", "must be finite and non-negative"));
    }
    check_unit("--iou-threshold", a.iou_threshold)?;
    let dataset = load_dataset(&a.dataset)?;
    let anchors = load_anchors(&a.anchors, &dataset)?;
    let labels = load_detections(&a.labels, &dataset)?;
    let config = AssignConfig {
        k: a.k,
        mode: a.mode,
        weights: CostWeights { cls: a.w_cls, reg: a.w_reg },
        iou_threshold: a.iou_threshold,
    };
    let mut labels_by_image: BTreeMap<ImageId, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        labels_by_image.entry(l.image_id).or_default().push(i);
    }

    let mut records: Vec<(usize, Value)> = Vec::new();
    let mut positives = 0usize;
    for (image_id, group) in &anchors {
        let label_idx = labels_by_image.get(image_id).cloned().unwrap_or_default();
        let local_labels: Vec<Detection> = label_idx.iter().map(|&i| labels[i].clone()).collect();
        let local_anchors: Vec<Anchor> = group.iter().map(|(_, a)| a.clone()).collect();
        let assignment = assign_topk(&local_anchors, &local_labels, &config);
        for (j, (anchor_index, anchor)) in group.iter().enumerate() {
            let label = assignment.labels[j];
            let head = match (label, anchor.heads()) {
                (Some(l), Some(_)) => Some(select_regression_head(anchor, &local_labels[l]).expect("anchor has heads")),
                _ => None,
            };
            let label_ref = match label {
                Some(l) => LabelRef::Label(label_idx[l]),
                None => LabelRef::Background,
            };
            if label.is_some() {
                positives += 1;
            }
            records.push((
                *anchor_index,
                json!({
                    "anchor_index": anchor_index,
                    "image_id": image_id,
                    "label_index": label_ref,
                    "cost": assignment.costs[j],
                    "mode": config.mode,
                    "head": head,
                }),
            ));
        }
    }
    records.sort_by_key(|(i, _)| *i);
    let out = json!({
        "mode": config.mode,
        "k": config.k,
        "weights": config.weights,
        "assignments": records.into_iter().map(|(_, v)| v).collect::<Vec<_>>(),
    });
    let mut staged = Staged::new();
    staged.add_json(&a.out, &out)?;
    let artifacts = staged.commit()?;
    let n_anchors: usize = anchors.values().map(Vec::len).sum();
    Ok((
        format!("{positives} of {n_anchors} anchors assigned to {} labels\nwrote {}\n", labels.len(), a.out.display()),
        artifacts,
    ))
}

fn cmd_eval(a: EvalArgs) -> CliResult<(String, Vec<PathBuf>)> {
    check_unit("--iou", a.iou)?;
    let dataset = load_dataset(&a.gt)?;
    let dets = load_detections(&a.det, &dataset)?;
    let report = evaluate_dataset(&dataset, &dets, a.iou)?;
    let mut staged = Staged::new();
    staged.add_json(&a.out, &report)?;
    let artifacts = staged.commit()?;
    let mut summary = String::new();
    for c in report.per_class.iter().filter(|c| c.ap.is_some()) {
        summary.push_str(&format!("{:<14} AP {:.4}  (gt {}, det {}, tp {})\n", c.class, c.ap.unwrap_or(0.0), c.n_gt, c.n_det, c.n_tp));
    }
    summary.push_str(&format!("mAP {:.4}\nwrote {}\n", report.map, a.out.display()));
    Ok((summary, artifacts))
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<(String, Vec<PathBuf>)> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", p.display())))?;
            SimConfig::from_toml_str(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let report = run_colearning_sim(&cfg)?;
    let mut staged = Staged::new();
    staged.add(&a.out, report.to_json_string().as_bytes())?;
    if let Some(csv_path) = &a.csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in report.time_series() {
            w.serialize(row).map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
        staged.add(csv_path, &bytes)?;
    }
    let artifacts = staged.commit()?;
    let fe = &report.final_eval;
    Ok((
        format!(
            "{} iterations, seed {}\nfinal mAP: teacher {:.4}, student {:.4}, pseudo-labels {:.4}\nwrote {}\n",
            report.iterations.len(),
            cfg.seed,
            fe.teacher.map,
            fe.student.map,
            fe.pseudo_labels.map,
            a.out.display()
        ),
        artifacts,
    ))
}
