#![allow(dead_code)]

pub mod oracle;

use debunk_core::data::{Claim, Label, SentenceUnit, SourceDocument, SourceKind};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (true claim, false claim with a substituted key entity, supporting sentences)
pub const TOPICS: [(&str, &str, [&str; 3]); 10] = [
    (
        "The virus spreads mainly through respiratory droplets.",
        "The virus spreads mainly through mobile networks.",
        [
            "The virus spreads mainly through respiratory droplets produced when an infected person coughs.",
            "Respiratory droplets from infected people carry the virus to others nearby.",
            "Studies confirm the virus spreads through close contact and respiratory droplets.",
        ],
    ),
    (
        "Washing hands with soap removes the virus.",
        "Washing hands with bleach removes the virus.",
        [
            "Washing hands with soap and water removes the virus from the skin.",
            "Soap breaks the outer layer of the virus, so washing hands removes it.",
            "Health agencies recommend washing hands with soap for twenty seconds.",
        ],
    ),
    (
        "Masks reduce the spread of infection in crowded places.",
        "Garlic reduces the spread of infection in crowded places.",
        [
            "Wearing masks reduces the spread of infection in crowded places.",
            "Masks block droplets and reduce the spread of infection indoors.",
            "In crowded places, masks were linked to fewer cases of infection.",
        ],
    ),
    (
        "Fever and dry cough are common symptoms of the disease.",
        "Hair loss and hiccups are common symptoms of the disease.",
        [
            "The most common symptoms of the disease are fever, tiredness and dry cough.",
            "Patients with the disease often report fever and a dry cough.",
            "Fever and dry cough are common early symptoms of the disease.",
        ],
    ),
    (
        "Older adults face a higher risk of severe illness.",
        "Newborn kittens face a higher risk of severe illness.",
        [
            "Older adults face a higher risk of severe illness and hospitalization.",
            "The risk of severe illness rises with age, so older adults are most affected.",
            "People with chronic conditions and older adults face a higher risk.",
        ],
    ),
    (
        "Vaccines train the immune system to recognize the virus.",
        "Sunlight trains the immune system to recognize the virus.",
        [
            "Vaccines train the immune system to recognize the virus and fight it.",
            "After vaccination the immune system can recognize the virus quickly.",
            "Vaccines work by teaching the immune system to recognize a virus.",
        ],
    ),
    (
        "Hospitals use ventilators for patients with severe pneumonia.",
        "Hospitals use hairdryers for patients with severe pneumonia.",
        [
            "Hospitals use ventilators for patients with severe pneumonia who cannot breathe.",
            "Patients with severe pneumonia may need ventilators in intensive care.",
            "Many hospitals ran short of ventilators for patients with pneumonia.",
        ],
    ),
    (
        "The incubation period usually lasts about five days.",
        "The incubation period usually lasts about nine months.",
        [
            "The incubation period usually lasts about five days after exposure.",
            "Most estimates put the incubation period at about five days.",
            "Symptoms usually appear within the incubation period of two to fourteen days.",
        ],
    ),
    (
        "Antibiotics do not work against viral infections.",
        "Chloroquine always works against viral infections.",
        [
            "Antibiotics do not work against viral infections, only bacterial ones.",
            "Doctors warn that antibiotics do not work against viruses.",
            "Using antibiotics against viral infections does not help patients.",
        ],
    ),
    (
        "Physical distancing lowers the number of new cases.",
        "Drinking alcohol lowers the number of new cases.",
        [
            "Physical distancing lowers the number of new cases in a community.",
            "Regions that adopted physical distancing saw the number of new cases fall.",
            "Keeping physical distance lowers transmission and new cases.",
        ],
    ),
];

const NOISE: [&str; 6] = [
    "Drinking hot water cures the virus, according to a social media post.",
    "Can the virus survive on packages?",
    "A viral post said garlic protects against infection.",
    "The weather was mild across the region this week.",
    "Local markets reopened after the holiday season.",
    "Is it safe to travel during the outbreak?",
];

fn doc(id: &str, text: String) -> SourceDocument {
    SourceDocument {
        doc_id: id.to_string(),
        text,
        source_kind: SourceKind::Scholarly,
        speaker: None,
    }
}

/// Claims for the first `topics` topics: a True then a False claim each.
pub fn claims(topics: usize) -> Vec<Claim> {
    TOPICS[..topics]
        .iter()
        .enumerate()
        .flat_map(|(i, (t, f, _))| {
            [
                Claim::new(format!("t{i:02}"), *t).with_label(Label::True),
                Claim::new(format!("f{i:02}"), *f).with_label(Label::False),
            ]
        })
        .collect()
}

pub fn corpus(topics: usize) -> Vec<SourceDocument> {
    let mut docs: Vec<SourceDocument> = TOPICS[..topics]
        .iter()
        .enumerate()
        .map(|(i, (_, _, sentences))| doc(&format!("topic{i:02}"), sentences.join(" ")))
        .collect();
    docs.push(doc("noise", NOISE.join(" ")));
    docs
}

/// Corpus where each false claim also appears verbatim, as a quotation would.
pub fn corpus_with_false_quotes(topics: usize) -> Vec<SourceDocument> {
    let mut docs = corpus(topics);
    for (i, (_, f, _)) in TOPICS[..topics].iter().enumerate() {
        docs.push(doc(&format!("quote{i:02}"), f.to_string()));
    }
    docs
}

/// Corpus where each false claim circulates as a social-media repost.
pub fn corpus_with_viral_posts(topics: usize) -> Vec<SourceDocument> {
    let mut docs = corpus(topics);
    for (i, (_, f, _)) in TOPICS[..topics].iter().enumerate() {
        let body = f.trim_end_matches('.');
        docs.push(doc(&format!("post{i:02}"), format!("{body}, according to a social media post.")));
    }
    docs
}

const WORDS: [&str; 60] = [
    "virus", "cell", "immune", "mask", "droplet", "patient", "doctor", "hospital", "study",
    "vaccine", "spread", "risk", "fever", "cough", "lung", "air", "water", "soap", "hand",
    "contact", "surface", "test", "case", "death", "rate", "age", "child", "adult", "city",
    "region", "report", "data", "model", "trial", "dose", "drug", "effect", "symptom", "day",
    "week", "infection", "disease", "health", "care", "worker", "home", "school", "travel",
    "border", "policy", "distance", "crowd", "event", "sample", "antibody", "protein",
    "genome", "strain", "variant", "wave",
];

fn zipf_word(rng: &mut ChaCha8Rng) -> &'static str {
    // squares the uniform draw to favour low ranks
    let u: f64 = rng.random();
    WORDS[((u * u) * WORDS.len() as f64) as usize % WORDS.len()]
}

pub fn random_sentence(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(4..14);
    (0..len).map(|_| zipf_word(rng)).collect::<Vec<_>>().join(" ")
}

pub fn random_sentences(n: usize, seed: u64) -> Vec<SentenceUnit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| SentenceUnit {
            doc_id: format!("doc{:04}", i / 5),
            sent_index: i % 5,
            text: random_sentence(&mut rng),
            speaker: None,
        })
        .collect()
}

const SUBJECTS: [&str; 8] = ["the virus", "the vaccine", "a mask", "the patient", "the doctor", "the study", "the hospital", "the test"];
const VERBS: [&str; 8] = ["reduces", "spreads", "protects", "detects", "treats", "requires", "prevents", "measures"];
const OBJECTS: [&str; 8] = ["the infection", "severe illness", "new cases", "the fever", "the risk", "the symptoms", "the droplets", "the antibodies"];
const ADJUNCTS: [&str; 6] = ["in crowded places", "after exposure", "in older adults", "within five days", "at home", "in most cases"];

/// Template-generated evidence sentences.
pub fn templated_sentences(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            format!(
                "{} {} {} {}.",
                SUBJECTS.choose(&mut rng).unwrap(),
                VERBS.choose(&mut rng).unwrap(),
                OBJECTS.choose(&mut rng).unwrap(),
                ADJUNCTS.choose(&mut rng).unwrap()
            )
        })
        .collect()
}
