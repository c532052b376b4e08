//! Stratified pseudo-labels: one judge ranking of ten responses, subsampled
//! at a fixed offset inside each of three groups.
//!
//! cargo run --example star_rankings

use scorepoint::judge::MockJudge;
use scorepoint::star::{build_pseudo_labels, presentation_order, stratified_select, StarConfig};
use scorepoint::template::PromptTemplate;
use scorepoint::{GeneratedResponse, Instance, TaskType};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = StarConfig::default();
    for n in [1, 2] {
        println!("N=10, L=3, offset {n}: indices {:?}", stratified_select(10, &cfg, n)?);
    }
    println!("N=9,  L=3, offset 1: indices {:?}", stratified_select(9, &cfg, 1)?);

    let instance = Instance {
        id: "museum".into(),
        dataset: "demo".into(),
        domain: "travel".into(),
        task_type: TaskType::QuestionAnswering,
        context: String::new(),
        question: "What should visitors know about the museum?".into(),
        reference_answer: "Entry is free on Fridays. The sculpture hall reopened in May. Guided tours start hourly."
            .into(),
    };
    let sentences: Vec<&str> = instance.reference_answer.split_inclusive(". ").collect();
    // Response k repeats the first (10 - k) * 3 / 10 reference sentences.
    let responses: Vec<GeneratedResponse> = (0..10)
        .map(|k| {
            let keep = ((10 - k) * sentences.len()).div_ceil(10);
            GeneratedResponse::new(format!("m{k}"), format!("{} Enjoy the visit, {k}.", sentences[..keep].concat()))
        })
        .collect();

    println!("\nprompt order (seeded shuffle): {:?}", presentation_order(cfg.seed, &instance.id, responses.len()));
    let judge = MockJudge::echo(0);
    for label in build_pseudo_labels(&judge, &PromptTemplate::rank(), &instance, &responses, &cfg)? {
        println!(
            "offset {}: {:?} at sorted positions {:?}",
            label.offset, label.selected_model_ids, label.selected_indices
        );
    }
    println!("judge calls: {}", judge.calls());
    Ok(())
}
