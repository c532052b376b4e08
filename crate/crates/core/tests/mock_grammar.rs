//! The prompt-driven mock must answer every shipped template with output the
//! corresponding parser accepts, and do so deterministically.

mod common;

use scorepoint::judge::{Judge, MockJudge};
use scorepoint::metrics::{assess_alignment, assess_conflicts, coarse3};
use scorepoint::points::{generate_points, optimize_prompt, PointGenOptions};
use scorepoint::star::{build_pseudo_labels, StarConfig};
use scorepoint::template::PromptTemplate;
use scorepoint::ScoringPoint;

#[test]
fn echo_answers_parse_under_every_grammar() {
    let judge = MockJudge::echo(11);
    for r in common::fixture_records() {
        let inst = &r.instance;
        // Zero parse retries: the first answer must already be well formed.
        let opts = PointGenOptions { parse_retries: 0, ..PointGenOptions::default() };
        let points =
            generate_points(&judge, &PromptTemplate::points(), &inst.question, &inst.reference_answer, &opts).unwrap();
        assert_eq!(points[0].weight, 3);
        for resp in &r.responses {
            let a = assess_alignment(&judge, &PromptTemplate::wpa(), &inst.question, &points, &resp.text, 0).unwrap();
            assert_eq!(a.len(), points.len());
            let p = assess_conflicts(
                &judge,
                &PromptTemplate::pcp(),
                &inst.question,
                &inst.reference_answer,
                &points,
                &resp.text,
                0,
            )
            .unwrap();
            assert_eq!(p.len(), points.len());
            let (rating, _) =
                coarse3(&judge, &PromptTemplate::coarse3(), &inst.question, &inst.reference_answer, &resp.text, 0)
                    .unwrap();
            assert!([0.0, 0.5, 1.0].contains(&rating));
        }
        let cfg = StarConfig { parse_retries: 0, ..StarConfig::default() };
        let labels = build_pseudo_labels(&judge, &PromptTemplate::rank(), inst, &r.responses, &cfg).unwrap();
        assert_eq!(labels.len(), 2);
    }
}

#[test]
fn full_coverage_ranks_first() {
    let judge = MockJudge::echo(0);
    let mut r = common::fixture_records().remove(0);
    for (k, resp) in r.responses.iter_mut().enumerate() {
        let text = if k == 7 { r.instance.reference_answer.clone() } else { format!("Unrelated remark number {k}.") };
        *resp = scorepoint::GeneratedResponse::new(resp.model_id.clone(), text);
    }
    let cfg = StarConfig::default();
    let labels = build_pseudo_labels(&judge, &PromptTemplate::rank(), &r.instance, &r.responses, &cfg).unwrap();
    let first = labels.iter().find(|l| l.offset == 1).unwrap();
    assert_eq!(first.selected_model_ids[0], "model-7");
}

#[test]
fn prompt_optimization_returns_the_base_prompt_with_guidance() {
    let judge = MockJudge::echo(0);
    let base = PromptTemplate::points();
    let originals = vec![ScoringPoint::new(1, "too granular", 1).unwrap()];
    let corrections = vec![ScoringPoint::new(1, "merged aspect", 2).unwrap()];
    let improved = optimize_prompt(
        &judge,
        &PromptTemplate::prompt_optim(),
        &base,
        "Q",
        "A",
        &originals,
        &corrections,
        &["Merge clauses about the same aspect.".to_owned()],
    )
    .unwrap();
    assert_eq!(improved.name, "points-optim");
    assert!(improved.body.contains("[[Text of first scoring point]] | ((3))"));
    assert!(improved.body.contains("Merge clauses about the same aspect."));
}

#[test]
fn echo_is_deterministic_per_seed() {
    let a = MockJudge::echo(5);
    let b = MockJudge::echo(5);
    for r in common::fixture_records().iter().take(2) {
        for j in [&a, &b] {
            generate_points(
                j as &dyn Judge,
                &PromptTemplate::points(),
                &r.instance.question,
                &r.instance.reference_answer,
                &PointGenOptions::default(),
            )
            .unwrap();
        }
    }
    assert_eq!(a.transcript(), b.transcript());
}
