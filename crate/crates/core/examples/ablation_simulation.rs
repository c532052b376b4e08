//! Simulated comparison of point-wise scoring against a coarse three-level
//! judge, plus the scale and weight ablation helpers.
//!
//! cargo run --example ablation_simulation [seed]

use scorepoint::analysis::simulation::{simulate, SimulationConfig};
use scorepoint::analysis::{disturb_weights, scale_reduce, WeightMode};
use scorepoint::ScoringPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = SimulationConfig::default();
    if let Some(seed) = std::env::args().nth(1) {
        cfg.seed = seed.parse()?;
    }
    let r = simulate(&cfg)?;
    println!("{} instances x {} responses, seed {}", cfg.instances, cfg.responses, cfg.seed);
    for c in [&r.wpa, &r.wpa_equal_weights, &r.coarse3] {
        println!(
            "  {:<20} mean Spearman {:.4}  mean Kendall {:.4}",
            c.metric_name,
            c.mean_spearman.unwrap_or(f64::NAN),
            c.mean_kendall.unwrap_or(f64::NAN)
        );
    }

    println!("\ntwo-level scale reduction:");
    for v in [0.0, 0.5, 1.0] {
        println!("  coarse3 {v} -> {}", scale_reduce("coarse3", v)?);
    }
    for v in 1..=5 {
        println!("  coarse5 {v} -> {}", scale_reduce("coarse5", v as f64)?);
    }

    let points: Vec<ScoringPoint> =
        (1..=6).map(|i| ScoringPoint::new(i, format!("point {i}"), 3)).collect::<Result<_, _>>()?;
    for mode in [WeightMode::Equal, WeightMode::Random] {
        let w: Vec<u8> = disturb_weights(&points, mode, cfg.seed)?.iter().map(|p| p.weight).collect();
        println!("{mode:?} weights: {w:?}");
    }
    Ok(())
}
