//! Run every command-line step on a simulated cohort and leave the CSV, JSON
//! and SVG outputs in one directory tree.
//!
//!     cargo run --release --example svg_report -- report

use std::fs;

use taskseq::cli::invoke;

fn step(args: &[&str]) {
    let result = invoke(std::iter::once("taskseq").chain(args.iter().copied()));
    if result.exit_code != 0 {
        eprint!("{}", result.stderr);
        std::process::exit(result.exit_code);
    }
    println!("taskseq {} ok", args[0]);
}

fn main() -> std::io::Result<()> {
    let root = std::env::args().nth(1).unwrap_or_else(|| "report".into());
    fs::create_dir_all(&root)?;
    let p = |name: &str| format!("{root}/{name}");
    fs::write(
        p("scenario.json"),
        r#"{"num_tasks": 15, "num_sessions": 3, "seed": 5, "groups": [
            {"name": "high", "learners": 20, "theta": {"kind": "nominal_chain", "strength": 3, "start": 3},
             "grade": {"min": 70, "max": 95}, "dropout": {"min_length": 8, "stop_prob": 0.1},
             "confidence": {"confident": 0.7, "revisit": 0.2, "support": 0.1}},
            {"name": "low", "learners": 20, "theta": {"kind": "zero"},
             "grade": {"min": 20, "max": 50}, "dropout": {"min_length": 4, "stop_prob": 0.2},
             "confidence": {"confident": 0.4, "revisit": 0.4, "support": 0.2}}]}"#,
    )?;
    fs::write(
        p("run.json"),
        r#"{"quantile": 0.25, "seed": 3, "holdout_frac": 0.3,
            "mcmc": {"chain_length": 100000, "burn_in": 25000, "thinning": 500, "proposal_sd": 0.3, "prior_sd": 1.0}}"#,
    )?;

    step(&["simulate", "--scenario", &p("scenario.json"), "--out", &p("data")]);
    let data = [
        "--course", &p("data/course.csv"),
        "--events", &p("data/events.csv"),
        "--grades", &p("data/grades.csv"),
        "--confidence", &p("data/confidence.csv"),
        "--config", &p("run.json"),
    ]
    .map(String::from);
    let with = |cmd: &str, extra: &[&str]| {
        let mut args: Vec<&str> = vec![cmd];
        args.extend(data.iter().map(String::as_str));
        args.extend(extra);
        step(&args);
    };
    with("stats", &["--out", &p("stats")]);
    with("contrast", &["--out", &p("contrast")]);
    with("classify", &["--quantile", "0.5", "--out", &p("classify")]);
    println!("open {root}/stats/position_heatmap.svg and friends");
    Ok(())
}
