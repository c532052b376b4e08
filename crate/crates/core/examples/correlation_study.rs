//! Instance-level Spearman and Kendall correlation of metric scores with
//! stratified pseudo-rankings, including how undefined sets are reported.
//!
//! cargo run --example correlation_study

use scorepoint::analysis::{instance_level_correlation, kendall, score_table, spearman};
use scorepoint::star::StratifiedRanking;

fn label(id: &str, models: &[&str]) -> StratifiedRanking {
    StratifiedRanking {
        instance_id: id.into(),
        offset: 1,
        selected_model_ids: models.iter().map(|m| m.to_string()).collect(),
        selected_indices: vec![0, 4, 8],
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("spearman((1,3,2), (1,2,3)) = {}", spearman(&[1.0, 3.0, 2.0], &[1.0, 2.0, 3.0])?);
    println!("kendall ((1,3,2), (1,2,3)) = {:.4}", kendall(&[1.0, 3.0, 2.0], &[1.0, 2.0, 3.0])?);
    println!(
        "ties use average ranks: spearman((1,1,2), (1,2,3)) = {:.4}\n",
        spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0])?
    );

    // Labels list the best-ranked model first.
    let labels = [label("q1", &["a", "b", "c"]), label("q2", &["b", "c", "a"]), label("q3", &["c", "a", "b"])];
    #[rustfmt::skip]
    let wpa = score_table([
        ("q1", "a", 0.9), ("q1", "b", 0.6), ("q1", "c", 0.2),
        ("q2", "a", 0.3), ("q2", "b", 0.8), ("q2", "c", 0.5),
        ("q3", "a", 0.4), ("q3", "b", 0.4), ("q3", "c", 0.4),
    ]);
    #[rustfmt::skip]
    let pcp = score_table([
        ("q1", "a", 0.0), ("q1", "b", 0.2), ("q1", "c", 0.5),
        ("q2", "a", 0.1), ("q2", "b", 0.0), ("q2", "c", 0.3),
        ("q3", "a", 0.0), ("q3", "b", 0.4), ("q3", "c", 0.0),
    ]);

    for (name, table, higher_is_better) in [("WPA", &wpa, true), ("PCP", &pcp, false)] {
        let r = instance_level_correlation(name, table, &labels, higher_is_better)?;
        println!(
            "{name}: mean Spearman {:?}, mean Kendall {:?} over {} sets ({} undefined)",
            r.mean_spearman.map(|v| (v * 1e4).round() / 1e4),
            r.mean_kendall.map(|v| (v * 1e4).round() / 1e4),
            r.sample_count,
            r.excluded_spearman
        );
    }
    Ok(())
}
