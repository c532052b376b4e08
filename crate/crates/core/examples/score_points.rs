//! Weighted point-wise alignment, conflict penalty and their merge with a
//! holistic rating, computed from judgements given by hand.
//!
//! cargo run --example score_points

use scorepoint::domain::Penalty;
use scorepoint::metrics::{compute_merge, compute_pcp, compute_wpa, MergeConfig};
use scorepoint::{Alignment, PenaltyAssessment, PointAssessment, ScoringPoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let points = vec![
        ScoringPoint::new(1, "Rooms are clean and quiet", 3)?,
        ScoringPoint::new(2, "Breakfast is good value", 2)?,
        ScoringPoint::new(3, "Parking is expensive", 1)?,
    ];
    let alignment = vec![
        PointAssessment::new(1, Alignment::Full, "states both cleanliness and quiet"),
        PointAssessment::new(2, Alignment::Partial, "mentions breakfast, not its price"),
        PointAssessment::new(3, Alignment::None, "parking is not discussed"),
    ];
    let penalties = vec![
        PenaltyAssessment::new(1, Penalty::Clear, ""),
        PenaltyAssessment::new(2, Penalty::Clear, ""),
        PenaltyAssessment::new(3, Penalty::Conflict, "claims parking is free"),
    ];

    let wpa = compute_wpa(&points, &alignment)?;
    let pcp = compute_pcp(&points, &penalties)?;
    let coarse = 0.5;
    let merged = compute_merge(coarse, wpa, &MergeConfig::default())?;

    println!("WPA   = (1*3 + 0.5*2 + 0*1) / 6 = {wpa:.4}");
    println!("PCP   = (0*3 + 0*2 + 1*1) / 6 = {pcp:.4}  (lower is better)");
    println!("Merge = 0.2*{coarse} + 0.8*WPA    = {merged:.4}");
    Ok(())
}
