//! Seeded synthetic corpora in the dataset schema, and noisy prediction runs
//! derived from a gold standard.
//!
//! Votes follow a two-stage model. Each item draws a latent truth for every
//! task; each annotator then reports that truth with probability `agreement`
//! and otherwise votes uniformly at random. An annotator who votes NO on
//! Task 1 votes "-" on Tasks 2 and 3.

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gold::GoldStandard;
use crate::ingest::{AgeGroup, AnnotatedItem, Annotations, Dataset, Gender, Lang, Run, Vote};
use crate::taxonomy::{Category, SoftAssignment, TaskId};

const TASK2_LABELS: [Category; 3] = [Category::Direct, Category::Reported, Category::Judgemental];
const TASK3_LABELS: [Category; 5] = [
    Category::IdeologicalInequality,
    Category::StereotypingDominance,
    Category::Objectification,
    Category::SexualViolence,
    Category::MisogynyNonSexualViolence,
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub items: usize,
    pub annotators: u32,
    /// Probability that an annotator reports the latent truth.
    pub agreement: f64,
    /// Share of Spanish items.
    pub lang_mix: f64,
    /// Probability of an UNKNOWN vote on Tasks 2 and 3.
    pub unknown_rate: f64,
    /// Share of items whose latent Task 1 truth is YES.
    pub sexist_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            items: 200,
            annotators: 6,
            agreement: 0.7,
            lang_mix: 0.5,
            unknown_rate: 0.0,
            sexist_rate: 0.45,
            seed: 42,
        }
    }
}

fn random_label_set(rng: &mut ChaCha8Rng) -> Vec<Category> {
    let size = if rng.random_bool(0.7) { 1 } else { 2 };
    let mut picked: Vec<usize> = sample(rng, TASK3_LABELS.len(), size).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| TASK3_LABELS[i]).collect()
}

pub fn generate(cfg: &SynthConfig) -> Dataset {
    assert!(cfg.items >= 1 && cfg.annotators >= 1, "counts must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.annotators as usize;
    let mut items = Vec::with_capacity(cfg.items);
    for i in 0..cfg.items {
        let lang = if rng.random_bool(cfg.lang_mix.clamp(0.0, 1.0)) { Lang::Es } else { Lang::En };
        let truth_sexist = rng.random_bool(cfg.sexist_rate.clamp(0.0, 1.0));
        let truth_t2 = TASK2_LABELS[rng.random_range(0..TASK2_LABELS.len())];
        let truth_t3 = random_label_set(&mut rng);

        let mut a = Annotations {
            number_annotators: cfg.annotators,
            annotators: (1..=n).map(|j| format!("Annotator_{j}")).collect(),
            gender_annotators: Vec::with_capacity(n),
            age_annotators: Vec::with_capacity(n),
            labels_task1: Vec::with_capacity(n),
            labels_task2: Vec::with_capacity(n),
            labels_task3: Vec::with_capacity(n),
        };
        for _ in 0..n {
            a.gender_annotators.push(if rng.random_bool(0.5) { Gender::F } else { Gender::M });
            a.age_annotators.push(match rng.random_range(0..3) {
                0 => AgeGroup::From18To22,
                1 => AgeGroup::From23To45,
                _ => AgeGroup::Over46,
            });
            let faithful = rng.random::<f64>() < cfg.agreement;
            let says_yes = if faithful { truth_sexist } else { rng.random_bool(0.5) };
            a.labels_task1.push(Vote::Label(if says_yes { Category::Yes } else { Category::No }));
            if !says_yes {
                a.labels_task2.push(Vote::NoneVote);
                a.labels_task3.push(vec![Vote::NoneVote]);
                continue;
            }
            let t2 = if rng.random::<f64>() < cfg.unknown_rate {
                Vote::Unknown
            } else if truth_sexist && rng.random::<f64>() < cfg.agreement {
                Vote::Label(truth_t2)
            } else {
                Vote::Label(TASK2_LABELS[rng.random_range(0..TASK2_LABELS.len())])
            };
            a.labels_task2.push(t2);
            let t3 = if rng.random::<f64>() < cfg.unknown_rate {
                vec![Vote::Unknown]
            } else if truth_sexist && rng.random::<f64>() < cfg.agreement {
                truth_t3.iter().copied().map(Vote::Label).collect()
            } else {
                random_label_set(&mut rng).into_iter().map(Vote::Label).collect()
            };
            a.labels_task3.push(t3);
        }
        let split = match lang {
            Lang::En => "TRAIN_EN",
            Lang::Es => "TRAIN_ES",
        };
        items.push(AnnotatedItem {
            id_exist: (100_001 + i).to_string(),
            lang,
            tweet: format!("synthetic tweet {}", i + 1),
            split: split.into(),
            annotations: Some(a),
        });
    }
    Dataset {
        items,
        source_path: format!("synthetic:seed={}", cfg.seed),
    }
}

/// A random valid assignment for `task`: a normalized vector of uniforms for
/// single-label tasks, independent uniforms for Task 3.
pub fn random_assignment(task: TaskId, rng: &mut impl Rng) -> SoftAssignment {
    let mut values: Vec<f64> = (0..task.arity()).map(|_| rng.random::<f64>()).collect();
    if !task.is_multilabel() {
        let sum: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= sum);
    }
    SoftAssignment::with_tolerance(task, values, 1e-9).expect("normalized uniforms are valid")
}

/// Soft run mixing gold with noise: `(1 - noise) * gold + noise * random`.
pub fn perturbed_run(gold: &GoldStandard, noise: f64, seed: u64, name: &str) -> Run {
    let noise = noise.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items: IndexMap<String, SoftAssignment> = gold
        .soft
        .iter()
        .map(|(id, g)| {
            let r = random_assignment(gold.task, &mut rng);
            let mut values: Vec<f64> = g
                .values()
                .iter()
                .zip(r.values())
                .map(|(a, b)| ((1.0 - noise) * a + noise * b).clamp(0.0, 1.0))
                .collect();
            if !gold.task.is_multilabel() {
                let sum: f64 = values.iter().sum();
                values.iter_mut().for_each(|v| *v /= sum);
            }
            let a = SoftAssignment::new(gold.task, values).expect("mixture of valid assignments");
            (id.clone(), a)
        })
        .collect();
    Run::soft(name, gold.task, items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gold::{derive_soft_gold, HardeningRule};
    use crate::ingest::{dataset_to_string, parse_dataset};

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SynthConfig::default();
        assert_eq!(dataset_to_string(&generate(&cfg)), dataset_to_string(&generate(&cfg)));
        let other = SynthConfig { seed: 43, ..cfg.clone() };
        assert_ne!(dataset_to_string(&generate(&cfg)), dataset_to_string(&generate(&other)));
    }

    #[test]
    fn output_passes_validation() {
        let cfg = SynthConfig {
            unknown_rate: 0.1,
            ..SynthConfig::default()
        };
        let ds = generate(&cfg);
        let again = parse_dataset(&dataset_to_string(&ds), "mem").unwrap();
        assert_eq!(again.items, ds.items);
    }

    #[test]
    fn full_agreement_is_unanimous() {
        let ds = generate(&SynthConfig {
            agreement: 1.0,
            items: 50,
            ..SynthConfig::default()
        });
        for task in TaskId::ALL {
            let g = derive_soft_gold(&ds, task);
            for a in g.soft.values() {
                assert!(a.values().iter().all(|&v| v == 0.0 || v == 1.0), "{task}: {a:?}");
            }
        }
    }

    #[test]
    fn no_votes_propagate_downstream() {
        let ds = generate(&SynthConfig::default());
        for item in &ds.items {
            let a = item.annotations.as_ref().unwrap();
            for j in 0..a.labels_task1.len() {
                if a.labels_task1[j] == Vote::Label(Category::No) {
                    assert_eq!(a.labels_task2[j], Vote::NoneVote);
                    assert_eq!(a.labels_task3[j], vec![Vote::NoneVote]);
                }
            }
        }
    }

    #[test]
    fn perturbed_runs_are_valid() {
        let ds = generate(&SynthConfig::default());
        for task in TaskId::ALL {
            let g = GoldStandard::from_dataset(&ds, task, &HardeningRule::default());
            let r = perturbed_run(&g, 0.4, 9, "p");
            assert_eq!(r.len(), g.len());
        }
    }
}
