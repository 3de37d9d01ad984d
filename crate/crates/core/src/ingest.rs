//! Course layout, learner completion sequences, grades and confidence surveys.
//!
//! Everything here is parsed from plain CSV files and validated up front, so
//! the analysis modules can assume a well-formed [`Cohort`]:
//!
//! - task ids form the contiguous range `1..=T` (the nominal course order);
//! - every learner sequence is duplicate-free and only mentions known tasks;
//! - learner ids are unique.
//!
//! Event logs may contain repeated completions and simultaneous timestamps.
//! Only the earliest completion of each task is kept, and ties on the
//! timestamp are broken by ascending task id. Learners affected by a tie are
//! flagged through [`LearnerRecord::had_ties`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-based task identifier. Task `i` is the `i`-th task of the nominal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl TaskId {
    /// Zero-based index into dense per-task arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        TaskId(index as u32 + 1)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One-based session identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u32);

impl SessionId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Coursework,
    ReadingVideo,
    Quiz,
    #[serde(rename = "gchart")]
    GChart,
    MultiResponsePoll,
    DiscussionPost,
}

impl TaskType {
    pub const ALL: [TaskType; 6] = [
        TaskType::Coursework,
        TaskType::ReadingVideo,
        TaskType::Quiz,
        TaskType::GChart,
        TaskType::MultiResponsePoll,
        TaskType::DiscussionPost,
    ];

    pub fn token(self) -> &'static str {
        match self {
            TaskType::Coursework => "coursework",
            TaskType::ReadingVideo => "reading_video",
            TaskType::Quiz => "quiz",
            TaskType::GChart => "gchart",
            TaskType::MultiResponsePoll => "multi_response_poll",
            TaskType::DiscussionPost => "discussion_post",
        }
    }
}

impl FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskType::ALL
            .into_iter()
            .find(|t| t.token() == s)
            .ok_or_else(|| format!("unknown task type {s:?}"))
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Survey answer for a single task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// "Yes I feel confident I can do this"
    Confident,
    /// "I need to revisit this"
    Revisit,
    /// "I need more support"
    Support,
}

impl Confidence {
    pub fn token(self) -> &'static str {
        match self {
            Confidence::Confident => "confident",
            Confidence::Revisit => "revisit",
            Confidence::Support => "support",
        }
    }
}

impl FromStr for Confidence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "confident" => Ok(Confidence::Confident),
            "revisit" => Ok(Confidence::Revisit),
            "support" => Ok(Confidence::Support),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: TaskId,
    pub session_id: SessionId,
    pub task_type: TaskType,
}

/// The designed course layout: tasks in nominal order with their session and type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CourseSpecRepr", into = "CourseSpecRepr")]
pub struct CourseSpec {
    tasks: Vec<Task>,
    num_sessions: usize,
}

#[derive(Serialize, Deserialize)]
struct CourseSpecRepr {
    num_tasks: usize,
    num_sessions: usize,
    tasks: Vec<Task>,
}

impl TryFrom<CourseSpecRepr> for CourseSpec {
    type Error = Error;

    fn try_from(repr: CourseSpecRepr) -> Result<Self> {
        let spec = CourseSpec::new(repr.tasks)?;
        if spec.num_tasks() != repr.num_tasks || spec.num_sessions() != repr.num_sessions {
            return Err(Error::InvalidConfig(format!(
                "course header says T={}, S={} but tasks imply T={}, S={}",
                repr.num_tasks,
                repr.num_sessions,
                spec.num_tasks(),
                spec.num_sessions()
            )));
        }
        Ok(spec)
    }
}

impl From<CourseSpec> for CourseSpecRepr {
    fn from(spec: CourseSpec) -> Self {
        CourseSpecRepr {
            num_tasks: spec.num_tasks(),
            num_sessions: spec.num_sessions,
            tasks: spec.tasks,
        }
    }
}

impl CourseSpec {
    /// Validates and sorts `tasks` into nominal order.
    pub fn new(mut tasks: Vec<Task>) -> Result<Self> {
        tasks.sort_by_key(|t| t.task_id);
        for (i, task) in tasks.iter().enumerate() {
            if task.task_id != TaskId::from_index(i) {
                return Err(Error::NonContiguousTaskIds {
                    expected: i as u32 + 1,
                });
            }
            if task.session_id.0 == 0 {
                return Err(Error::SessionOrderViolation { task: task.task_id });
            }
            if i > 0 && task.session_id < tasks[i - 1].session_id {
                return Err(Error::SessionOrderViolation { task: task.task_id });
            }
        }
        if tasks.is_empty() {
            return Err(Error::NonContiguousTaskIds { expected: 1 });
        }
        let num_sessions = tasks.last().map(|t| t.session_id.0 as usize).unwrap_or(0);
        Ok(CourseSpec {
            tasks,
            num_sessions,
        })
    }

    /// Course with `sessions` equally sized blocks and task types cycling
    /// through [`TaskType::ALL`].
    pub fn uniform(num_tasks: usize, sessions: usize) -> Result<Self> {
        if num_tasks == 0 || sessions == 0 || sessions > num_tasks {
            return Err(Error::InvalidConfig(format!(
                "cannot lay out {num_tasks} tasks in {sessions} sessions"
            )));
        }
        let tasks = (0..num_tasks)
            .map(|i| Task {
                task_id: TaskId::from_index(i),
                session_id: SessionId((i * sessions / num_tasks) as u32 + 1),
                task_type: TaskType::ALL[i % TaskType::ALL.len()],
            })
            .collect();
        CourseSpec::new(tasks)
    }

    /// `T`
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// `S`
    pub fn num_sessions(&self) -> usize {
        self.num_sessions
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn contains(&self, task: TaskId) -> bool {
        task.0 >= 1 && task.index() < self.tasks.len()
    }

    pub fn task(&self, task: TaskId) -> Option<&Task> {
        if self.contains(task) {
            Some(&self.tasks[task.index()])
        } else {
            None
        }
    }

    /// Session of a task already known to be valid.
    pub fn session_of(&self, task: TaskId) -> SessionId {
        self.tasks[task.index()].session_id
    }

    pub fn type_of(&self, task: TaskId) -> TaskType {
        self.tasks[task.index()].task_type
    }

    pub(crate) fn check_task(&self, task: i64, line: u64) -> Result<TaskId> {
        if task >= 1 && (task as usize) <= self.tasks.len() {
            Ok(TaskId(task as u32))
        } else {
            Err(Error::UnknownTaskId { task, line })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerRecord {
    pub learner_id: String,
    /// Completed tasks in completion order.
    pub sequence: Vec<TaskId>,
    #[serde(default)]
    pub grade: Option<f64>,
    #[serde(default)]
    pub confidence: BTreeMap<TaskId, Confidence>,
    /// Set when two retained completions shared a timestamp.
    #[serde(default)]
    pub had_ties: bool,
}

impl LearnerRecord {
    pub fn new(learner_id: impl Into<String>, sequence: Vec<TaskId>) -> Self {
        LearnerRecord {
            learner_id: learner_id.into(),
            sequence,
            grade: None,
            confidence: BTreeMap::new(),
            had_ties: false,
        }
    }

    /// `n_k`
    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    fn validate(&self, course: &CourseSpec) -> Result<()> {
        let invalid = |reason: String| Error::InvalidSequence {
            id: self.learner_id.clone(),
            reason,
        };
        let mut seen = HashSet::with_capacity(self.sequence.len());
        for &task in &self.sequence {
            if !course.contains(task) {
                return Err(invalid(format!("unknown task {task}")));
            }
            if !seen.insert(task) {
                return Err(invalid(format!("task {task} repeated")));
            }
        }
        if let Some(&task) = self.confidence.keys().find(|t| !course.contains(**t)) {
            return Err(invalid(format!("confidence response for unknown task {task}")));
        }
        if let Some(grade) = self.grade {
            if !(0.0..=100.0).contains(&grade) {
                return Err(Error::GradeOutOfRange {
                    id: self.learner_id.clone(),
                    grade,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDiagnostics {
    /// Confidence rows that replaced an earlier answer for the same (learner, task).
    #[serde(default)]
    pub confidence_overwrites: usize,
}

/// The whole ensemble of learners on one course.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CohortRepr")]
pub struct Cohort {
    course: CourseSpec,
    learners: Vec<LearnerRecord>,
    #[serde(default)]
    diagnostics: IngestDiagnostics,
}

#[derive(Deserialize)]
struct CohortRepr {
    course: CourseSpec,
    learners: Vec<LearnerRecord>,
    #[serde(default)]
    diagnostics: IngestDiagnostics,
}

impl TryFrom<CohortRepr> for Cohort {
    type Error = Error;

    fn try_from(repr: CohortRepr) -> Result<Self> {
        let mut cohort = Cohort::new(repr.course, repr.learners)?;
        cohort.diagnostics = repr.diagnostics;
        Ok(cohort)
    }
}

impl Cohort {
    pub fn new(course: CourseSpec, learners: Vec<LearnerRecord>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(learners.len());
        for learner in &learners {
            if !ids.insert(learner.learner_id.as_str()) {
                return Err(Error::DuplicateLearner {
                    id: learner.learner_id.clone(),
                });
            }
            learner.validate(&course)?;
        }
        Ok(Cohort {
            course,
            learners,
            diagnostics: IngestDiagnostics::default(),
        })
    }

    pub fn course(&self) -> &CourseSpec {
        &self.course
    }

    pub fn learners(&self) -> &[LearnerRecord] {
        &self.learners
    }

    /// `N`
    pub fn len(&self) -> usize {
        self.learners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.learners.is_empty()
    }

    pub fn diagnostics(&self) -> &IngestDiagnostics {
        &self.diagnostics
    }

    pub fn learner(&self, id: &str) -> Option<&LearnerRecord> {
        self.learners.iter().find(|l| l.learner_id == id)
    }

    /// Learners that completed at least one task.
    pub fn active_learners(&self) -> impl Iterator<Item = &LearnerRecord> {
        self.learners.iter().filter(|l| !l.is_empty())
    }

    /// Sub-cohort restricted to `ids`, in the order the ids are given.
    pub fn subset(&self, ids: &[String]) -> Result<Cohort> {
        let index: BTreeMap<&str, &LearnerRecord> = self
            .learners
            .iter()
            .map(|l| (l.learner_id.as_str(), l))
            .collect();
        let learners = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|l| (*l).clone())
                    .ok_or_else(|| Error::UnknownLearner { id: id.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Cohort::new(self.course.clone(), learners)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Cohort> {
        Ok(serde_json::from_str(text)?)
    }

    fn learner_index(&self) -> BTreeMap<String, usize> {
        self.learners
            .iter()
            .enumerate()
            .map(|(i, l)| (l.learner_id.clone(), i))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// CSV readers
// ---------------------------------------------------------------------------

pub const COURSE_HEADER: [&str; 3] = ["task_id", "session_id", "task_type"];
pub const EVENTS_HEADER: [&str; 3] = ["learner_id", "task_id", "timestamp"];
pub const GRADES_HEADER: [&str; 2] = ["learner_id", "grade"];
pub const CONFIDENCE_HEADER: [&str; 3] = ["learner_id", "task_id", "response"];

struct CsvRows {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl CsvRows {
    /// Opens `path` and checks its header. `Ok(None)` for a completely empty file.
    fn open(path: &Path, header: &[&str]) -> Result<Option<CsvRows>> {
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile {
                path: path.to_path_buf(),
            },
            _ => Error::Io(e),
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(file);
        let found = reader.headers()?.clone();
        if found.is_empty() {
            return Ok(None);
        }
        if found.iter().ne(header.iter().copied()) {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: 1,
                reason: format!("expected header {:?}, found {:?}", header.join(","), found),
            });
        }
        Ok(Some(CsvRows {
            path: path.to_path_buf(),
            reader,
        }))
    }

    /// Yields `(line, fields)` for every non-blank data row.
    fn for_each(
        self,
        width: usize,
        mut f: impl FnMut(u64, &csv::StringRecord) -> Result<()>,
    ) -> Result<()> {
        let CsvRows { path, mut reader } = self;
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != width {
                return Err(Error::MalformedRow {
                    path,
                    line,
                    reason: format!("expected {width} fields, found {}", record.len()),
                });
            }
            f(line, &record)?;
        }
        Ok(())
    }
}

fn malformed(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn parse_int(path: &Path, line: u64, field: &str, what: &str) -> Result<i64> {
    field
        .parse::<i64>()
        .map_err(|_| malformed(path, line, format!("{what} {field:?} is not an integer")))
}

/// Reads `task_id,session_id,task_type`.
pub fn parse_course_spec(path: impl AsRef<Path>) -> Result<CourseSpec> {
    let path = path.as_ref();
    let rows = CsvRows::open(path, &COURSE_HEADER)?
        .ok_or_else(|| malformed(path, 1, "missing header"))?;
    let mut tasks = Vec::new();
    let mut seen = HashSet::new();
    rows.for_each(3, |line, rec| {
        let task = parse_int(path, line, &rec[0], "task_id")?;
        let session = parse_int(path, line, &rec[1], "session_id")?;
        if task < 1 || task > u32::MAX as i64 {
            return Err(malformed(path, line, format!("task_id {task} must be positive")));
        }
        if session < 1 || session > u32::MAX as i64 {
            return Err(malformed(path, line, format!("session_id {session} must be positive")));
        }
        let task_type: TaskType = rec[2].parse().map_err(|e: String| malformed(path, line, e))?;
        if !seen.insert(task) {
            return Err(malformed(path, line, format!("task_id {task} listed twice")));
        }
        tasks.push(Task {
            task_id: TaskId(task as u32),
            session_id: SessionId(session as u32),
            task_type,
        });
        Ok(())
    })?;
    CourseSpec::new(tasks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimestampFormat {
    Epoch,
    Iso,
}

/// Nanoseconds since the Unix epoch.
fn parse_timestamp(field: &str, format: TimestampFormat, line: u64) -> Result<i128> {
    let fail = |reason: String| Error::TimestampParseError { line, reason };
    match format {
        TimestampFormat::Epoch => field
            .parse::<i64>()
            .map(|s| s as i128 * 1_000_000_000)
            .map_err(|_| fail(format!("{field:?} is not epoch seconds (file uses epoch seconds)"))),
        TimestampFormat::Iso => {
            if let Ok(dt) = DateTime::parse_from_rfc3339(field) {
                return Ok(dt.timestamp() as i128 * 1_000_000_000 + dt.timestamp_subsec_nanos() as i128);
            }
            for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
                if let Ok(dt) = NaiveDateTime::parse_from_str(field, fmt) {
                    let utc = dt.and_utc();
                    return Ok(utc.timestamp() as i128 * 1_000_000_000
                        + utc.timestamp_subsec_nanos() as i128);
                }
            }
            if let Ok(date) = NaiveDate::parse_from_str(field, "%Y-%m-%d") {
                let utc = date.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
                return Ok(utc.timestamp() as i128 * 1_000_000_000);
            }
            Err(fail(format!("{field:?} is not ISO-8601 (file uses ISO-8601)")))
        }
    }
}

/// Builds the cohort from `learner_id,task_id,timestamp` events.
///
/// Learners are ordered by id. Timestamps are either all integer epoch
/// seconds or all ISO-8601; the first row decides.
pub fn parse_events(path: impl AsRef<Path>, course: &CourseSpec) -> Result<Cohort> {
    let path = path.as_ref();
    let rows = CsvRows::open(path, &EVENTS_HEADER)?
        .ok_or_else(|| malformed(path, 1, "missing header"))?;
    let mut format = None;
    let mut events: BTreeMap<String, Vec<(i128, TaskId)>> = BTreeMap::new();
    rows.for_each(3, |line, rec| {
        let learner = &rec[0];
        if learner.is_empty() {
            return Err(malformed(path, line, "empty learner_id"));
        }
        let task = parse_int(path, line, &rec[1], "task_id")?;
        let task = course.check_task(task, line)?;
        let fmt = *format.get_or_insert(if rec[2].parse::<i64>().is_ok() {
            TimestampFormat::Epoch
        } else {
            TimestampFormat::Iso
        });
        let ts = parse_timestamp(&rec[2], fmt, line)?;
        events.entry(learner.to_string()).or_default().push((ts, task));
        Ok(())
    })?;

    let learners = events
        .into_iter()
        .map(|(id, events)| {
            let (sequence, had_ties) = order_completions(events);
            let mut record = LearnerRecord::new(id, sequence);
            record.had_ties = had_ties;
            record
        })
        .collect();
    Cohort::new(course.clone(), learners)
}

/// Keeps the earliest completion per task and orders by (timestamp, task id).
fn order_completions(events: Vec<(i128, TaskId)>) -> (Vec<TaskId>, bool) {
    let mut first: BTreeMap<TaskId, i128> = BTreeMap::new();
    for (ts, task) in events {
        first
            .entry(task)
            .and_modify(|t| *t = (*t).min(ts))
            .or_insert(ts);
    }
    let mut kept: Vec<(i128, TaskId)> = first.into_iter().map(|(task, ts)| (ts, task)).collect();
    kept.sort_unstable();
    let had_ties = kept.windows(2).any(|w| w[0].0 == w[1].0);
    (kept.into_iter().map(|(_, task)| task).collect(), had_ties)
}

/// Attaches `learner_id,grade` rows. Learners absent from the file keep no grade.
pub fn attach_grades(mut cohort: Cohort, path: impl AsRef<Path>) -> Result<Cohort> {
    let path = path.as_ref();
    let Some(rows) = CsvRows::open(path, &GRADES_HEADER)? else {
        return Ok(cohort);
    };
    let index = cohort.learner_index();
    rows.for_each(2, |line, rec| {
        let id = &rec[0];
        let &i = index
            .get(id)
            .ok_or_else(|| Error::UnknownLearner { id: id.to_string() })?;
        let grade: f64 = rec[1]
            .parse()
            .map_err(|_| malformed(path, line, format!("grade {:?} is not a number", &rec[1])))?;
        if !grade.is_finite() || !(0.0..=100.0).contains(&grade) {
            return Err(Error::GradeOutOfRange {
                id: id.to_string(),
                grade,
            });
        }
        cohort.learners[i].grade = Some(grade);
        Ok(())
    })?;
    Ok(cohort)
}

/// Attaches `learner_id,task_id,response` rows; a later row for the same
/// (learner, task) replaces the earlier one.
pub fn attach_confidence(mut cohort: Cohort, path: impl AsRef<Path>) -> Result<Cohort> {
    let path = path.as_ref();
    let Some(rows) = CsvRows::open(path, &CONFIDENCE_HEADER)? else {
        return Ok(cohort);
    };
    let index = cohort.learner_index();
    let mut overwrites = 0;
    let course = cohort.course.clone();
    rows.for_each(3, |line, rec| {
        let id = &rec[0];
        let &i = index
            .get(id)
            .ok_or_else(|| Error::UnknownLearner { id: id.to_string() })?;
        let task = parse_int(path, line, &rec[1], "task_id")?;
        let task = course.check_task(task, line)?;
        let response: Confidence = rec[2]
            .parse()
            .map_err(|token| Error::UnknownResponse { token, line })?;
        if cohort.learners[i].confidence.insert(task, response).is_some() {
            overwrites += 1;
        }
        Ok(())
    })?;
    cohort.diagnostics.confidence_overwrites += overwrites;
    Ok(cohort)
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

pub fn write_course_csv(course: &CourseSpec, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COURSE_HEADER)?;
    for task in course.tasks() {
        w.write_record([
            task.task_id.to_string(),
            task.session_id.to_string(),
            task.task_type.token().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one event per completion with integer timestamps
/// `base + 60 * position`, which parse back into the same sequences.
pub fn write_events_csv(cohort: &Cohort, base_epoch: i64, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_HEADER)?;
    for learner in cohort.learners() {
        for (pos, task) in learner.sequence.iter().enumerate() {
            w.write_record([
                learner.learner_id.clone(),
                task.to_string(),
                (base_epoch + 60 * pos as i64).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_grades_csv(cohort: &Cohort, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRADES_HEADER)?;
    for learner in cohort.learners() {
        if let Some(grade) = learner.grade {
            w.write_record([learner.learner_id.clone(), grade.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_confidence_csv(cohort: &Cohort, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONFIDENCE_HEADER)?;
    for learner in cohort.learners() {
        for (task, response) in &learner.confidence {
            w.write_record([
                learner.learner_id.clone(),
                task.to_string(),
                response.token().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Task ids that appear in at least one sequence.
pub fn completed_tasks(cohort: &Cohort) -> BTreeSet<TaskId> {
    cohort
        .learners()
        .iter()
        .flat_map(|l| l.sequence.iter().copied())
        .collect()
}
