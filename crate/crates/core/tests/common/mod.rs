#![allow(dead_code)]

use std::path::{Path, PathBuf};

use scorepoint::dataset::{write_dataset, Record};
use scorepoint::pipeline::{JudgeBackend, RunConfig};
use scorepoint::{GeneratedResponse, Instance, TaskType};

const TOPICS: [(&str, [&str; 4]); 5] = [
    (
        "hotel",
        [
            "The rooms were spotless and quietly located away from traffic.",
            "Breakfast offered fresh pastries and strong coffee every morning.",
            "Front desk staff resolved a billing mistake within minutes.",
            "Parking cost twenty dollars per night and filled quickly.",
        ],
    ),
    (
        "rover",
        [
            "The rover landed inside Jezero crater in February.",
            "Its drill collected rock cores sealed in titanium tubes.",
            "A small helicopter completed dozens of flights above the valley.",
            "Engineers extended the mission after the primary phase ended.",
        ],
    ),
    (
        "bakery",
        [
            "Sourdough rises slowly because wild yeast ferments the dough.",
            "Bakers feed the starter flour and water daily.",
            "Long fermentation develops sour flavour and an open crumb.",
            "Steam in the oven keeps the crust thin and glossy.",
        ],
    ),
    (
        "transit",
        [
            "The council approved a new tram line through the harbour district.",
            "Construction begins next spring and lasts three years.",
            "Tickets will share the existing bus fare system.",
            "Residents raised concerns about noise during night works.",
        ],
    ),
    (
        "forest",
        [
            "Controlled burns reduce dry undergrowth before summer.",
            "Rangers schedule burns only during calm humid weather.",
            "Ash returns minerals that help seedlings establish.",
            "Smoke advisories warn nearby towns a day in advance.",
        ],
    ),
];

const FILLER: [&str; 4] = [
    "Overall it was a reasonable experience.",
    "Several unrelated details were also discussed at length.",
    "Opinions about the weather varied widely.",
    "Some people preferred a different option entirely.",
];

/// Five instances with ten responses each. Response `k` keeps a different
/// subset of the reference sentences so mock scores spread out.
pub fn fixture_records() -> Vec<Record> {
    TOPICS
        .iter()
        .enumerate()
        .map(|(i, (topic, sentences))| {
            let reference = sentences.join(" ");
            let responses = (0..10)
                .map(|k| {
                    let mut parts: Vec<&str> = sentences
                        .iter()
                        .enumerate()
                        .filter(|(s, _)| (k + s + i) % 10 < 10 - k)
                        .map(|(_, t)| *t)
                        .take(4usize.saturating_sub(k / 3))
                        .collect();
                    parts.push(FILLER[(k + i) % FILLER.len()]);
                    if k % 2 == 1 {
                        parts.push(FILLER[(k + i + 1) % FILLER.len()]);
                    }
                    GeneratedResponse::new(format!("model-{k}"), parts.join(" "))
                })
                .collect();
            Record {
                instance: Instance {
                    id: format!("{topic}-{i}"),
                    dataset: if i % 2 == 0 { "reviews".into() } else { "news".into() },
                    domain: (*topic).into(),
                    task_type: TaskType::Summarization,
                    context: String::new(),
                    question: format!("Summarize the key facts about the {topic}."),
                    reference_answer: reference,
                },
                responses,
            }
        })
        .collect()
}

pub fn write_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("dataset.jsonl");
    write_dataset(&path, &fixture_records()).expect("write dataset");
    path
}

/// Mock-backed configuration writing its run directory under `dir`.
pub fn mock_config(dataset: &Path, out: &Path, seed: u64) -> RunConfig {
    RunConfig {
        dataset: Some(dataset.to_owned()),
        out_dir: out.to_owned(),
        seed,
        judge_backend: JudgeBackend::Mock,
        ..RunConfig::default()
    }
}
