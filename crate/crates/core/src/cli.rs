//! Command-line front end: run configuration and the `stats`, `contrast`,
//! `fit`, `classify` and `simulate` commands.
//!
//! Each command is a pure function of its input files and configuration.
//! Outputs are collected in memory and written in one pass at the end, along
//! with the effective configuration (`config.json`).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classifier::{run_experiment_with_posteriors, write_curves_csv, ExperimentConfig, ExperimentMode, ExperimentReport};
use crate::contrast::{confidence_stats, delta_transition, split_by_grade, task_contrast, write_task_contrast_csv, Level};
use crate::error::{Error, Result};
use crate::hypertraps::{fit_mcmc, McmcConfig};
use crate::ingest::{self, Cohort, TaskType};
use crate::matrix::{write_matrix_csv, Matrix};
use crate::seed::derive_seed;
use crate::seqstats::{
    deviation_profile, position_probability_matrix, session_transition_matrix, transition_probability_matrix,
    write_deviation_csv, write_edge_list_csv, write_position_histograms_csv,
};
use crate::svg::{self, ColorScale, ScatterGroup, Series};
use crate::synth::{generate_cohort, write_cohort_files, Scenario};

/// A scenario given inline or as a path to a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(Box<Scenario>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub course: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub grades: Option<PathBuf>,
    pub confidence: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub quantile: Option<f64>,
    pub seed: Option<u64>,
    /// `None` runs both experiment modes.
    pub mode: Option<ExperimentMode>,
    pub holdout_frac: f64,
    /// Chain settings; chain seeds are derived from `seed`.
    pub mcmc: McmcConfig,
    pub scenario: Option<ScenarioSource>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            course: None,
            events: None,
            grades: None,
            confidence: None,
            out: None,
            quantile: None,
            seed: None,
            mode: None,
            holdout_frac: 0.3,
            mcmc: McmcConfig::default(),
            scenario: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile { path: path.to_path_buf() },
            _ => Error::Io(e),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig(format!("missing required setting --{flag}")))
    }

    fn out_dir(&self) -> Result<&Path> {
        Ok(Self::require(&self.out, "out")?.as_path())
    }

    fn quantile(&self) -> Result<f64> {
        let q = *Self::require(&self.quantile, "quantile")?;
        if !(q > 0.0 && q <= 0.5) {
            return Err(Error::InvalidQuantile(q));
        }
        Ok(q)
    }

    fn seed(&self) -> Result<u64> {
        Ok(*Self::require(&self.seed, "seed")?)
    }

    fn load_cohort(&self, need_grades: bool) -> Result<Cohort> {
        let course = ingest::parse_course_spec(Self::require(&self.course, "course")?)?;
        let mut cohort = ingest::parse_events(Self::require(&self.events, "events")?, &course)?;
        match &self.grades {
            Some(path) => cohort = ingest::attach_grades(cohort, path)?,
            None if need_grades => return Err(Error::InvalidConfig("missing required setting --grades".into())),
            None => {}
        }
        if let Some(path) = &self.confidence {
            cohort = ingest::attach_confidence(cohort, path)?;
        }
        Ok(cohort)
    }
}

/// Files produced by a command, written together once the command succeeds.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn text(&mut self, name: &str, text: String) {
        self.add(name, text.into_bytes());
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, text);
        Ok(())
    }

    fn csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    fn matrix<T: std::fmt::Display>(&mut self, name: &str, m: &Matrix<T>, corner: &str) -> Result<()> {
        self.csv(name, |buf| write_matrix_csv(m, corner, buf))
    }

    fn write(self, dir: &Path, config: &RunConfig) -> Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut names = Vec::with_capacity(self.files.len() + 1);
        for (name, bytes) in self.files {
            fs::write(dir.join(&name), bytes)?;
            names.push(name);
        }
        let mut text = serde_json::to_string_pretty(config)?;
        text.push('\n');
        fs::write(dir.join("config.json"), text)?;
        names.push("config.json".into());
        Ok(names)
    }
}

/// Result of a successful command.
#[derive(Debug, Clone, Serialize)]
pub struct CommandSummary {
    pub command: String,
    pub out: PathBuf,
    pub files: Vec<String>,
    pub notices: Vec<String>,
}

fn summary(command: &str, config: &RunConfig, outputs: Outputs, notices: Vec<String>) -> Result<CommandSummary> {
    let dir = config.out_dir()?;
    let files = outputs.write(dir, config)?;
    Ok(CommandSummary {
        command: command.to_string(),
        out: dir.to_path_buf(),
        files,
        notices,
    })
}

/// Position and transition matrices, deviation profiles and their plots.
pub fn cmd_stats(config: &RunConfig) -> Result<CommandSummary> {
    config.out_dir()?;
    let cohort = config.load_cohort(false)?;
    let mut out = Outputs::default();

    let position = position_probability_matrix(&cohort)?;
    let transitions = transition_probability_matrix(&cohort)?;
    let sessions = session_transition_matrix(&cohort)?;

    out.matrix("position_matrix.csv", &position.probabilities, "task")?;
    out.matrix("position_counts.csv", &position.counts, "task")?;
    out.json("position_matrix.json", &position)?;
    out.csv("position_histograms.csv", |b| write_position_histograms_csv(&position, b))?;
    out.matrix("transition_matrix.csv", &transitions.conditional, "task")?;
    out.matrix("transition_joint.csv", &transitions.joint, "task")?;
    out.matrix("transition_counts.csv", &transitions.counts, "task")?;
    out.json("transition_matrix.json", &transitions)?;
    out.csv("transition_edges.csv", |b| write_edge_list_csv(&transitions, b))?;
    out.matrix("session_transition_matrix.csv", &sessions.conditional, "session")?;
    out.matrix("session_transition_counts.csv", &sessions.counts, "session")?;
    out.json("session_transition_matrix.json", &sessions)?;

    let mut ordered: Vec<_> = cohort.active_learners().collect();
    ordered.sort_by(|a, b| {
        let ga = a.grade.unwrap_or(f64::NEG_INFINITY);
        let gb = b.grade.unwrap_or(f64::NEG_INFINITY);
        gb.total_cmp(&ga).then_with(|| a.learner_id.cmp(&b.learner_id))
    });
    let profiles = ordered
        .iter()
        .map(|l| deviation_profile(l, cohort.course()))
        .collect::<Result<Vec<_>>>()?;
    out.csv("deviation_profiles.csv", |b| write_deviation_csv(&profiles, b))?;

    let t = cohort.course().num_tasks();
    out.text(
        "position_heatmap.svg",
        svg::heatmap(
            &position.probabilities,
            ColorScale::linear_for(position.probabilities.as_slice()),
            "Task position probabilities",
            "position in sequence",
            "task",
        ),
    );
    out.text(
        "transition_heatmap.svg",
        svg::heatmap(
            &transitions.conditional,
            ColorScale::log_for(transitions.conditional.as_slice()),
            "Task transition probabilities (log scale)",
            "next task",
            "previous task",
        ),
    );
    out.text(
        "session_heatmap.svg",
        svg::heatmap(
            &sessions.conditional,
            ColorScale::linear_for(sessions.conditional.as_slice()),
            "Session transition probabilities",
            "next session",
            "previous session",
        ),
    );
    let raster: Vec<_> = ordered
        .iter()
        .zip(&profiles)
        .map(|(l, p)| {
            let mut cells: Vec<Option<f64>> = p.values.iter().copied().map(Some).collect();
            cells.resize(t, None);
            (l.learner_id.clone(), l.grade, cells)
        })
        .collect();
    out.text(
        "deviation_raster.svg",
        svg::deviation_raster(&raster, "Deviation from nominal order"),
    );
    summary("stats", config, out, vec![])
}

const TYPE_COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// High versus low performer contrasts.
pub fn cmd_contrast(config: &RunConfig) -> Result<CommandSummary> {
    config.out_dir()?;
    let q = config.quantile()?;
    let cohort = config.load_cohort(true)?;
    let split = split_by_grade(&cohort, q)?;
    let mut out = Outputs::default();
    let mut notices = Vec::new();
    if !split.warnings.is_empty() {
        notices.push(format!("group split warnings: {:?}", split.warnings));
    }
    out.json("split.json", &split)?;

    for (level, name) in [(Level::Task, "task"), (Level::Session, "session")] {
        let d = delta_transition(&cohort, &split, level)?;
        out.matrix(&format!("delta_{name}.csv"), &d.delta, name)?;
        out.matrix(&format!("delta_{name}_positive.csv"), &d.positive, name)?;
        out.matrix(&format!("delta_{name}_negative.csv"), &d.negative, name)?;
        out.text(
            &format!("delta_{name}_heatmap.svg"),
            svg::heatmap(
                &d.delta,
                ColorScale::diverging_for(d.delta.as_slice()),
                &format!("Transition difference, high minus low ({name} level)"),
                &format!("next {name}"),
                &format!("previous {name}"),
            ),
        );
    }

    let contrast = task_contrast(&cohort, &split)?;
    out.csv("task_contrast.csv", |b| write_task_contrast_csv(&contrast, b))?;
    out.json("type_summary.json", &contrast.by_type)?;
    let groups: Vec<ScatterGroup> = TaskType::ALL
        .iter()
        .zip(TYPE_COLORS)
        .map(|(ty, color)| ScatterGroup {
            label: ty.token(),
            color,
            points: contrast
                .tasks
                .iter()
                .filter(|c| c.task_type == *ty)
                .filter_map(|c| c.drank.map(|r| (c.dfreq, r)))
                .collect(),
            summary: contrast
                .by_type
                .iter()
                .find(|s| s.task_type == *ty)
                .and_then(|s| s.dfreq.zip(s.drank))
                .map(|(f, r)| (f.median, r.median, (f.q25, f.q75), (r.q25, r.q75))),
        })
        .collect();
    out.text(
        "contrast_scatter.svg",
        svg::scatter(
            &groups,
            "Task contrast, high minus low performers",
            "difference in completion frequency",
            "difference in mean rank (positive: earlier for high performers)",
        ),
    );

    match confidence_stats(&cohort, &split)? {
        Some(stats) => out.json("confidence_stats.json", &stats)?,
        None => notices.push("no confidence responses; confidence section omitted".into()),
    }
    out.json("contrast_notices.json", &notices)?;
    summary("contrast", config, out, notices)
}

fn experiment_config(config: &RunConfig, mode: ExperimentMode) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        quantile: config.quantile()?,
        mode,
        holdout_frac: config.holdout_frac,
        seed: config.seed()?,
        mcmc: config.mcmc,
    })
}

/// Fits one posterior per grade group on all of its members.
pub fn cmd_fit(config: &RunConfig) -> Result<CommandSummary> {
    config.out_dir()?;
    let q = config.quantile()?;
    let seed = config.seed()?;
    config.mcmc.validate()?;
    let cohort = config.load_cohort(true)?;
    let split = split_by_grade(&cohort, q)?;
    let t = cohort.course().num_tasks();
    let mut out = Outputs::default();
    out.json("split.json", &split)?;
    for (k, (label, ids)) in [("g1", &split.high), ("g2", &split.low)].into_iter().enumerate() {
        let seqs: Vec<_> = ids
            .iter()
            .filter_map(|id| cohort.learner(id))
            .filter(|l| !l.is_empty())
            .map(|l| l.sequence.clone())
            .collect();
        if seqs.len() < 2 {
            return Err(Error::GroupTooSmall {
                group: label.to_string(),
                size: seqs.len(),
            });
        }
        let mcmc = McmcConfig {
            seed: derive_seed(seed, k as u64 + 1),
            ..config.mcmc
        };
        let mut posterior = fit_mcmc(&seqs, t, &mcmc)?;
        posterior.group = label.to_string();
        let mut text = posterior.to_json()?;
        text.push('\n');
        out.text(&format!("posterior_{label}.json"), text);
    }
    summary("fit", config, out, vec![])
}

fn curve_svg(report: &ExperimentReport) -> String {
    let mut series: Vec<Series> = report
        .curves
        .curves
        .iter()
        .map(|c| Series {
            values: &c.values,
            color: if c.true_group == crate::classifier::GroupLabel::G1 { "#1f77b4" } else { "#7f7f7f" },
            width: 1.0,
            dashed: false,
            opacity: 0.5,
        })
        .collect();
    for agg in [&report.curves.g1, &report.curves.g2] {
        series.push(Series {
            values: &agg.mean,
            color: "#ff7f0e",
            width: 2.5,
            dashed: true,
            opacity: 1.0,
        });
        series.push(Series {
            values: &agg.fraction_above_half,
            color: "#2ca02c",
            width: 2.5,
            dashed: true,
            opacity: 1.0,
        });
    }
    let mode = match report.config.mode {
        ExperimentMode::InSample => "in-sample",
        ExperimentMode::Holdout => "holdout",
    };
    svg::line_chart(
        &series,
        &format!("P(high group | first n tasks), {mode}"),
        "tasks completed (n)",
        "probability of high group",
    )
}

/// Prefix classification experiments; runs both modes unless one is configured.
pub fn cmd_classify(config: &RunConfig) -> Result<CommandSummary> {
    config.out_dir()?;
    let modes = match config.mode {
        Some(m) => vec![m],
        None => vec![ExperimentMode::InSample, ExperimentMode::Holdout],
    };
    let exp_configs = modes
        .iter()
        .map(|&m| experiment_config(config, m))
        .collect::<Result<Vec<_>>>()?;
    let cohort = config.load_cohort(true)?;
    let mut out = Outputs::default();
    for exp_config in exp_configs {
        let tag = match exp_config.mode {
            ExperimentMode::InSample => "in_sample",
            ExperimentMode::Holdout => "holdout",
        };
        let experiment = run_experiment_with_posteriors(&cohort, &exp_config)?;
        out.json(&format!("experiment_{tag}.json"), &experiment.report)?;
        out.csv(&format!("curves_{tag}.csv"), |b| write_curves_csv(&experiment.report.curves, b))?;
        out.text(&format!("curves_{tag}.svg"), curve_svg(&experiment.report));
        for (label, posterior) in [("g1", &experiment.posterior_g1), ("g2", &experiment.posterior_g2)] {
            let mut text = posterior.to_json()?;
            text.push('\n');
            out.text(&format!("posterior_{tag}_{label}.json"), text);
        }
    }
    summary("classify", config, out, vec![])
}

/// Writes a synthetic cohort in the ingest CSV formats.
pub fn cmd_simulate(config: &RunConfig) -> Result<CommandSummary> {
    let dir = config.out_dir()?;
    let mut scenario = match RunConfig::require(&config.scenario, "scenario")? {
        ScenarioSource::Inline(s) => (**s).clone(),
        ScenarioSource::Path(p) => {
            let text = fs::read_to_string(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingFile { path: p.clone() },
                _ => Error::Io(e),
            })?;
            Scenario::from_json(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?
        }
    };
    if let Some(seed) = config.seed {
        scenario.seed = seed;
    }
    let synthetic = generate_cohort(&scenario)?;
    write_cohort_files(&synthetic, dir)?;
    let mut out = Outputs::default();
    out.json("scenario.json", &scenario)?;
    let mut s = summary("simulate", config, out, vec![])?;
    let mut files = vec![
        "course.csv".to_string(),
        "events.csv".into(),
        "grades.csv".into(),
        "confidence.csv".into(),
        "labels.csv".into(),
    ];
    files.append(&mut s.files);
    s.files = files;
    Ok(s)
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "taskseq", version, about = "Sequence analytics for task-completion logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Position/transition matrices, deviation profiles and heatmaps.
    Stats(CommonArgs),
    /// High versus low performer contrasts and confidence statistics.
    Contrast(CommonArgs),
    /// Fit one posterior per grade group.
    Fit(CommonArgs),
    /// Prefix classification experiments (in-sample and/or holdout).
    Classify(CommonArgs),
    /// Generate a synthetic cohort from a scenario.
    Simulate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub course: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub grades: Option<PathBuf>,
    #[arg(long)]
    pub confidence: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub quantile: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// in-sample or holdout
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub holdout_frac: Option<f64>,
    /// Scenario JSON file (simulate).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    config.$field = Some(v.clone());
                }
            )*};
        }
        take!(course, events, grades, confidence, out, quantile, seed);
        if let Some(mode) = &self.mode {
            config.mode = Some(mode.parse()?);
        }
        if let Some(f) = self.holdout_frac {
            config.holdout_frac = f;
        }
        if let Some(path) = &self.scenario {
            config.scenario = Some(ScenarioSource::Path(path.clone()));
        }
        Ok(config)
    }
}

pub fn run(cli: &Cli) -> Result<CommandSummary> {
    match &cli.command {
        Command::Stats(a) => cmd_stats(&a.resolve()?),
        Command::Contrast(a) => cmd_contrast(&a.resolve()?),
        Command::Fit(a) => cmd_fit(&a.resolve()?),
        Command::Classify(a) => cmd_classify(&a.resolve()?),
        Command::Simulate(a) => cmd_simulate(&a.resolve()?),
    }
}

/// Outcome of a command-line invocation: exit code plus what goes to stdout and stderr.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses arguments, runs the command and renders the result. Failures are
/// reported as a JSON object `{"error": <kind>, "message": ..., "exit_code": ...}`.
pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Invocation {
                    exit_code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                };
            }
            let body = serde_json::json!({
                "error": "InvalidArguments",
                "message": e.to_string(),
                "exit_code": 2,
            });
            return Invocation {
                exit_code: 2,
                stdout: String::new(),
                stderr: format!("{body}\n"),
            };
        }
    };
    match run(&cli) {
        Ok(summary) => Invocation {
            exit_code: 0,
            stdout: format!("{}\n", serde_json::to_string_pretty(&summary).unwrap_or_default()),
            stderr: String::new(),
        },
        Err(e) => {
            let code = e.class().exit_code();
            let body = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": code,
            });
            Invocation {
                exit_code: code,
                stdout: String::new(),
                stderr: format!("{body}\n"),
            }
        }
    }
}
