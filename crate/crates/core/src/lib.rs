//! Sequence analytics for learner task-completion logs.
//!
//! The crate ingests course specifications and completion events, computes
//! position and transition statistics, contrasts high and low performing
//! groups, fits a hypercubic transition model by MCMC and classifies learners
//! from partial sequences. A scenario generator produces synthetic cohorts with
//! known ground truth.

pub mod classifier;
pub mod cli;
pub mod contrast;
pub mod error;
pub mod hypertraps;
pub mod ingest;
pub mod matrix;
pub mod seed;
pub mod seqstats;
pub mod stats;
pub mod svg;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use ingest::{Cohort, Confidence, CourseSpec, LearnerRecord, SessionId, Task, TaskId, TaskType};
pub use matrix::Matrix;
