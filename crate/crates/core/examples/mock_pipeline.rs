//! Runs every pipeline stage offline against the prompt-driven mock judge and
//! prints the resulting summary.
//!
//! cargo run --example mock_pipeline

use scorepoint::dataset::{write_dataset, Record};
use scorepoint::pipeline::{JudgeBackend, MetricName, Pipeline, RunConfig, Study};
use scorepoint::{GeneratedResponse, Instance, TaskType};

fn record(i: usize) -> Record {
    let facts = [
        "The library opens at eight on weekdays.",
        "Members may borrow ten books at once.",
        "Late returns cost fifty cents per day.",
        "The reading room is closed on Sundays.",
    ];
    let responses = (0..10)
        .map(|k| {
            let kept: Vec<&str> = facts.iter().copied().skip(k % 4).take(4 - k / 3).collect();
            GeneratedResponse::new(format!("model-{k}"), format!("{} Thanks for asking.", kept.join(" ")))
        })
        .collect();
    Record {
        instance: Instance {
            id: format!("library-{i}"),
            dataset: "faq".into(),
            domain: "library".into(),
            task_type: TaskType::QuestionAnswering,
            context: String::new(),
            question: format!("What are the library rules? (variant {i})"),
            reference_answer: facts.join(" "),
        },
        responses,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let dataset = dir.path().join("dataset.jsonl");
    write_dataset(&dataset, &(0..3).map(record).collect::<Vec<_>>())?;

    let cfg = RunConfig {
        dataset: Some(dataset),
        out_dir: dir.path().join("run"),
        judge_backend: JudgeBackend::Mock,
        seed: 7,
        ..RunConfig::default()
    };
    let mut p = Pipeline::open(cfg)?;
    for report in [p.extract_points()?, p.evaluate(&MetricName::ALL)?, p.star()?] {
        println!("{:<15} processed {:>2}, failures {}", report.stage, report.processed, report.failures.len());
    }
    p.analyze(&[Study::Correlation, Study::Noise, Study::Errors])?;
    println!("\n{}", std::fs::read_to_string(p.report()?)?);
    Ok(())
}
