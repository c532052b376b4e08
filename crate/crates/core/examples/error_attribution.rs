//! Attributes every not fully covered scoring point to an error type and
//! aggregates the shares per model.
//!
//! cargo run --example error_attribution

use scorepoint::analysis::{
    classify_error, error_by_alignment, error_distribution, error_records, ErrorClassifier, GroupBy,
};
use scorepoint::{Alignment, InstanceEvaluation, PointAssessment};

fn evaluation(model: &str, judged: &[(Alignment, &str)]) -> InstanceEvaluation {
    let mut e = InstanceEvaluation::new("review-1", model);
    e.point_assessments =
        Some(judged.iter().enumerate().map(|(i, (a, text))| PointAssessment::new(i as u32 + 1, *a, *text)).collect());
    e
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (text, alignment) in [
        ("The response omits the parking price entirely.", Alignment::None),
        ("Mentions breakfast only vaguely and indirectly.", Alignment::Partial),
        ("Says checkout is at 10 but the reference says 11.", Alignment::Partial),
        ("Talks about the city museum, which is unrelated.", Alignment::None),
    ] {
        println!("{:<55} -> {}", text, classify_error(text, alignment)?.as_str());
    }

    let classifier = ErrorClassifier::default();
    let mut records = error_records(
        &evaluation(
            "model-a",
            &[
                (Alignment::Full, "covered"),
                (Alignment::None, "does not mention the pool"),
                (Alignment::Partial, "only partially describes the room"),
            ],
        ),
        "reviews",
        &classifier,
    );
    records.extend(error_records(
        &evaluation(
            "model-b",
            &[(Alignment::None, "missing the location"), (Alignment::None, "the rate given is wrong")],
        ),
        "reviews",
        &classifier,
    ));

    println!("\nshare of error types per model:");
    for (model, shares) in error_distribution(&records, GroupBy::Model) {
        let row: Vec<String> = shares.iter().map(|(t, p)| format!("{} {:.2}", t.as_str(), p)).collect();
        println!("  {model}: {}", row.join(", "));
    }
    println!("\ncounts by (error type, alignment):");
    for ((t, a), n) in error_by_alignment(&records) {
        println!("  {:<22} {:>3} -> {n}", t.as_str(), a.value());
    }
    Ok(())
}
