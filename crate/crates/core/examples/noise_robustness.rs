//! Kendall agreement between noisy and noiseless scores as Gaussian noise
//! grows, for a well-separated and a tightly packed metric.
//!
//! cargo run --example noise_robustness

use scorepoint::analysis::{noise_robustness, score_table, DEFAULT_SIGMA_GRID};
use scorepoint::star::StratifiedRanking;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ids: Vec<String> = (0..50).map(|i| format!("q{i}")).collect();
    let labels: Vec<StratifiedRanking> = ids
        .iter()
        .map(|id| StratifiedRanking {
            instance_id: id.clone(),
            offset: 1,
            selected_model_ids: vec!["a".into(), "b".into(), "c".into()],
            selected_indices: vec![0, 4, 8],
        })
        .collect();
    let spread = score_table(
        ids.iter().flat_map(|id| [(id.as_str(), "a", 1.0), (id.as_str(), "b", 0.5), (id.as_str(), "c", 0.0)]),
    );
    // One outlier stretches the normalization so the other sets sit close together.
    let packed = score_table(ids.iter().enumerate().flat_map(|(i, id)| {
        let top = if i == 0 { 10.0 } else { 0.06 };
        [(id.as_str(), "a", top), (id.as_str(), "b", 0.03), (id.as_str(), "c", 0.0)]
    }));

    println!("sigma     {}", DEFAULT_SIGMA_GRID.map(|s| format!("{s:>7}")).join(""));
    for (name, table) in [("spread", &spread), ("packed", &packed)] {
        let curve = noise_robustness(name, table, &labels, &DEFAULT_SIGMA_GRID, 42)?;
        let row: String = curve.mean_kendall_vs_original.iter().map(|t| format!("{:>7.3}", t + 0.0)).collect();
        println!("{name:<10}{row}");
    }
    Ok(())
}
