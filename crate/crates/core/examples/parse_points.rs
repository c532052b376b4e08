//! Renders the point-generation prompt and parses a judge's bracketed answer,
//! including the errors a malformed answer produces.
//!
//! cargo run --example parse_points

use scorepoint::points::{format_points, parse_points, render_points_prompt, serialize_for_prompt};
use scorepoint::template::PromptTemplate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prompt = render_points_prompt(
        &PromptTemplate::points(),
        "How was the stay?",
        "The room was clean. Staff were friendly. Parking was expensive.",
    )?;
    println!("prompt has {} lines; tail:\n{}", prompt.lines().count(), tail(&prompt, 4));

    let answer =
        "- [[The room was clean]] | ((3))\n- [[Staff were friendly]] | ((2))\n- [[Parking was expensive]] | ((1))";
    let points = parse_points(answer)?;
    println!("parsed:\n{}", format_points(&points));
    println!("as shown to the assessment prompts:\n{}", serialize_for_prompt(&points));

    for bad in ["- [[Clean room]] | ((4))", "- [[Clean room | ((3))", "no points at all"] {
        println!("{bad:?} -> {}", parse_points(bad).unwrap_err());
    }
    Ok(())
}

fn tail(s: &str, n: usize) -> String {
    let lines: Vec<&str> = s.lines().collect();
    lines[lines.len().saturating_sub(n)..].join("\n")
}
