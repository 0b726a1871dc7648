//! Deterministic demo data: a social-science corpus for the mock library, a
//! 20-user contact graph, and a script of annotations that includes a
//! three-hop forward chain.

use scholarlib_core::rng::SplitMix64;
use scholarlib_core::{DcRecord, Error as CoreError, Store, Timestamp, UserProfile};
use serde::{Deserialize, Serialize};

pub const CORPUS_SIZE: usize = 200;
pub const FIXTURE_USERS: u32 = 20;
pub const FIXTURE_EDGE_PROB: f64 = 0.15;

struct Topic {
    keyword: &'static str,
    phrases: &'static [&'static str],
    subjects: [&'static str; 2],
}

const TOPICS: &[Topic] = &[
    Topic {
        keyword: "violence",
        phrases: &["Violence", "Domestic violence", "Youth violence", "Violence prevention"],
        subjects: ["Gewalt", "Aggression"],
    },
    Topic {
        keyword: "masculinity",
        phrases: &["Masculinity", "Men and fatherhood", "Male identity"],
        subjects: ["Männlichkeit", "Geschlechterrolle"],
    },
    Topic {
        keyword: "migration",
        phrases: &["Migration", "Integration of migrants", "Labour migration"],
        subjects: ["Migration", "Integration"],
    },
    Topic {
        keyword: "labour market",
        phrases: &["Labour market", "Unemployment", "Precarious work"],
        subjects: ["Arbeitsmarkt", "Arbeitslosigkeit"],
    },
    Topic {
        keyword: "education",
        phrases: &["School performance", "Educational inequality", "Higher education"],
        subjects: ["Bildung", "Schule"],
    },
    Topic {
        keyword: "family",
        phrases: &["Family structures", "Parenting", "Divorce"],
        subjects: ["Familie", "Elternschaft"],
    },
    Topic {
        keyword: "youth",
        phrases: &["Youth culture", "Adolescence", "Youth unemployment"],
        subjects: ["Jugend", "Jugendkultur"],
    },
    Topic {
        keyword: "elections",
        phrases: &["Voting behaviour", "Party identification", "Elections"],
        subjects: ["Wahlverhalten", "Politik"],
    },
    Topic {
        keyword: "religion",
        phrases: &["Religiosity", "Secularization", "Religious communities"],
        subjects: ["Religion", "Säkularisierung"],
    },
    Topic {
        keyword: "health",
        phrases: &["Health inequality", "Mental health", "Health care"],
        subjects: ["Gesundheit", "Ungleichheit"],
    },
];

const PLACES: &[&str] =
    &["Germany", "Cologne", "Berlin", "Europe", "East Germany", "Bavaria", "the Netherlands", "Poland"];
const AUTHORS: &[&str] = &[
    "Müller, Anna", "Schmidt, Jonas", "Weber, Lena", "Fischer, Paul", "Becker, Mia", "Hoffmann, Felix",
    "Schulz, Clara", "Koch, Lukas", "Richter, Emma", "Wolf, David",
];
const NAMES: &[&str] = &[
    "Ada", "Ben", "Cem", "Dana", "Eli", "Fay", "Gus", "Hana", "Ivo", "Jule", "Kai", "Lia", "Max",
    "Nia", "Ole", "Pia", "Quin", "Rosa", "Sven", "Tara",
];

/// One scripted annotation. Documents are named by their corpus identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ScriptOp {
    Comment { user: String, doc: String, text: String },
    Rate { user: String, doc: String, value: i64 },
    File { user: String, doc: String, folder: String },
    /// `parent` is the script index of an earlier forward.
    Forward { from: String, to: String, doc: String, parent: Option<usize> },
}

impl ScriptOp {
    fn doc(&self) -> &str {
        match self {
            ScriptOp::Comment { doc, .. }
            | ScriptOp::Rate { doc, .. }
            | ScriptOp::File { doc, .. }
            | ScriptOp::Forward { doc, .. } => doc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub seed: u64,
    pub corpus: Vec<DcRecord>,
    pub users: Vec<UserProfile>,
    pub edge_prob: f64,
    /// Edges added on top of the random graph so the forward chain exists.
    pub extra_edges: Vec<(String, String)>,
    pub script: Vec<ScriptOp>,
}

fn pick<'a, T>(rng: &mut SplitMix64, xs: &'a [T]) -> &'a T {
    &xs[rng.below(xs.len() as u64) as usize]
}

/// The corpus alone: 200 records, 20 per topic, every violence record
/// carrying the subject "Gewalt".
pub fn make_corpus(seed: u64) -> Vec<DcRecord> {
    let mut rng = SplitMix64::new(seed ^ 0x5C0_1A12);
    (0..CORPUS_SIZE)
        .map(|i| {
            let topic = &TOPICS[i % TOPICS.len()];
            let phrase = *pick(&mut rng, topic.phrases);
            let place = *pick(&mut rng, PLACES);
            let secondary = rng
                .chance(0.35)
                .then(|| &TOPICS[(i % TOPICS.len() + 1 + rng.below(TOPICS.len() as u64 - 1) as usize) % TOPICS.len()]);
            let mut subjects = vec![topic.subjects[0].to_string()];
            if rng.chance(0.5) {
                subjects.push(topic.subjects[1].to_string());
            }
            let title = match secondary {
                Some(other) => {
                    subjects.push(other.subjects[0].to_string());
                    format!("{phrase} and {} in {place}", pick(&mut rng, other.phrases).to_lowercase())
                }
                None => format!("{phrase} in {place}"),
            };
            let mut r = DcRecord::new(format!("sowi-{:04}", i + 1), title);
            r.creators = (0..1 + rng.below(3)).map(|_| pick(&mut rng, AUTHORS).to_string()).collect();
            r.creators.dedup();
            r.date = Some(format!("{}", 1985 + rng.below(28)));
            r.subjects = subjects;
            r.description = Some(format!(
                "Empirical study of {} based on survey data from {place}.",
                phrase.to_lowercase()
            ));
            r.doc_type = Some(pick(&mut rng, &["article", "book", "report"]).to_string());
            r.language = Some(pick(&mut rng, &["de", "en"]).to_string());
            r.link = Some(format!("http://dl.example.org/record/sowi-{:04}", i + 1));
            scholarlib_core::validate_record(r.into()).expect("generated records are valid")
        })
        .collect()
}

impl Fixture {
    pub fn generate(seed: u64) -> Fixture {
        Self::with_params(seed, FIXTURE_USERS, FIXTURE_EDGE_PROB).expect("default fixture parameters are valid")
    }

    /// A fixture with a custom graph size. At least four users are needed
    /// for the forward chain.
    pub fn with_params(seed: u64, n_users: u32, edge_prob: f64) -> Result<Fixture, CoreError> {
        if n_users < 4 {
            return Err(CoreError::InvalidParams("a fixture needs at least 4 users".into()));
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(CoreError::InvalidParams(format!("edge_prob {edge_prob} not in [0, 1]")));
        }
        let corpus = make_corpus(seed);
        let mut rng = SplitMix64::new(seed ^ 0x0F1C_70E5);
        let users: Vec<UserProfile> = (0..n_users)
            .map(|i| {
                let interests: Vec<&str> = if i == 0 {
                    vec!["violence research"]
                } else {
                    (0..1 + rng.below(2)).map(|_| pick(&mut rng, TOPICS).keyword).collect()
                };
                let mut p = UserProfile::new(format!("u{i}")).with_interests(interests);
                p.display_name = NAMES[i as usize % NAMES.len()].to_string();
                p.sns_origin = "mock-sns".into();
                p
            })
            .collect();

        let u = |i: u32| format!("u{i}");
        let extra_edges = vec![(u(0), u(1)), (u(1), u(2)), (u(2), u(3))];

        let violence: Vec<&str> =
            corpus.iter().step_by(TOPICS.len()).map(|r| r.identifier.as_str()).collect();
        let d0 = violence[0].to_string();
        let d1 = violence[1].to_string();
        let mut script = vec![
            ScriptOp::Forward { from: u(0), to: u(1), doc: d0.clone(), parent: None },
            ScriptOp::Forward { from: u(1), to: u(2), doc: d0.clone(), parent: Some(0) },
            ScriptOp::Forward { from: u(2), to: u(3), doc: d0.clone(), parent: Some(1) },
            ScriptOp::File { user: u(0), doc: d0.clone(), folder: "men".into() },
            ScriptOp::File { user: u(1), doc: d0.clone(), folder: "reading".into() },
            ScriptOp::Comment {
                user: u(1),
                doc: d0.clone(),
                text: "Landmark study on violence and masculinity.".into(),
            },
            ScriptOp::Rate { user: u(0), doc: d0.clone(), value: 5 },
            ScriptOp::Rate { user: u(1), doc: d0, value: 4 },
            ScriptOp::Comment { user: u(2), doc: d1.clone(), text: "Useful survey design.".into() },
            ScriptOp::Rate { user: u(3), doc: d1, value: 2 },
        ];
        let comments = ["Worth reading.", "Sample is small.", "Good literature review.", "Relevant for my project."];
        for _ in 0..20 {
            let user = u(rng.below(n_users as u64) as u32);
            let doc = pick(&mut rng, &corpus).identifier.clone();
            script.push(match rng.below(3) {
                0 => ScriptOp::Comment { user, doc, text: pick(&mut rng, &comments).to_string() },
                1 => ScriptOp::Rate { user, doc, value: 1 + rng.below(5) as i64 },
                _ => ScriptOp::File { user, doc, folder: pick(&mut rng, &["men", "thesis", "later"]).to_string() },
            });
        }
        Ok(Fixture { seed, corpus, users, edge_prob, extra_edges, script })
    }

    /// Load the graph and the scripted annotations into `store`. `dl_name`
    /// must already be registered; scripted documents are interned under it.
    /// Timestamps start at `start` and advance one second per operation.
    pub fn apply(&self, store: &mut Store, dl_name: &str, start: Timestamp) -> Result<(), CoreError> {
        self.apply_graph(store)?;
        let mut forwards: Vec<Option<String>> = Vec::with_capacity(self.script.len());
        for (i, op) in self.script.iter().enumerate() {
            let record = self
                .corpus
                .iter()
                .find(|r| r.identifier == op.doc())
                .ok_or_else(|| CoreError::InvalidParams(format!("script names unknown doc {}", op.doc())))?;
            let item = store.intern_item(record.clone(), dl_name)?.item_id;
            let now = Timestamp(start.0 + 1000 * i as i64);
            let id = match op {
                ScriptOp::Comment { user, text, .. } => store.add_comment(user, &item, text, now).map(|_| None)?,
                ScriptOp::Rate { user, value, .. } => store.add_rating(user, &item, *value, now).map(|_| None)?,
                ScriptOp::File { user, folder, .. } => store.add_to_library(user, &item, folder, now).map(|_| None)?,
                ScriptOp::Forward { from, to, parent, .. } => {
                    let parent = parent.and_then(|p| forwards.get(p).cloned().flatten());
                    Some(store.forward_item(from, to, &item, parent.as_deref(), now)?.annotation_id)
                }
            };
            forwards.push(id);
        }
        Ok(())
    }

    /// Users, the seeded random graph and the chain edges only.
    pub fn apply_graph(&self, store: &mut Store) -> Result<(), CoreError> {
        store.generate_mock_graph(self.users.len() as u32, self.edge_prob, self.seed)?;
        for p in &self.users {
            store.upsert_user(p.clone())?;
        }
        store.load_edges(&self.extra_edges)
    }
}
