use disagree_core::ingest::{load_run, parse_run, run_to_string, save_run, Run};
use disagree_core::{HardAssignment, SoftAssignment, TaskId};
use indexmap::IndexMap;
use proptest::prelude::*;

fn task() -> impl Strategy<Value = TaskId> {
    prop_oneof![Just(TaskId::Task1), Just(TaskId::Task2), Just(TaskId::Task3)]
}

fn soft_values(task: TaskId) -> BoxedStrategy<Vec<f64>> {
    let m = task.arity();
    if task.is_multilabel() {
        prop::collection::vec(0.0f64..=1.0, m).boxed()
    } else {
        prop::collection::vec(0.0f64..1.0, m)
            .prop_filter("non-zero", |v| v.iter().sum::<f64>() > 0.0)
            .prop_map(|v| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect()
            })
            .boxed()
    }
}

fn run() -> impl Strategy<Value = Run> {
    (task(), any::<bool>(), 0usize..40).prop_flat_map(|(t, soft, len)| {
        let ids = prop::collection::hash_set("[a-z0-9]{1,8}", len);
        if soft {
            (ids, prop::collection::vec(soft_values(t), len))
                .prop_map(move |(ids, vals)| {
                    let items: IndexMap<String, SoftAssignment> = ids
                        .into_iter()
                        .zip(vals)
                        .map(|(id, v)| (id, SoftAssignment::new(t, v).unwrap()))
                        .collect();
                    Run::soft("random", t, items)
                })
                .boxed()
        } else {
            let label = if t.is_multilabel() {
                prop::collection::btree_set(1usize..t.arity(), 1..3)
                    .prop_map(|s| s.into_iter().collect::<Vec<_>>())
                    .boxed()
            } else {
                (0..t.arity()).prop_map(|i| vec![i]).boxed()
            };
            (ids, prop::collection::vec(label, len))
                .prop_map(move |(ids, labels)| {
                    let items: IndexMap<String, HardAssignment> = ids
                        .into_iter()
                        .zip(labels)
                        .map(|(id, l)| (id, HardAssignment::from_indices(t, l).unwrap()))
                        .collect();
                    Run::hard("random", t, items)
                })
                .boxed()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_round_trip_is_identity(r in run()) {
        let back = parse_run(&run_to_string(&r), r.task, "other").unwrap();
        prop_assert_eq!(back, r);
    }
}

#[test]
fn file_round_trip_preserves_order_and_bits() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let items: IndexMap<String, SoftAssignment> = (0..100)
        .rev()
        .map(|i| {
            let x = (i as f64 * 0.013_7).fract();
            (format!("id{i}"), SoftAssignment::new(TaskId::Task1, vec![x, 1.0 - x]).unwrap())
        })
        .collect();
    let r = Run::soft("hundred", TaskId::Task1, items);
    save_run(&r, &path).unwrap();
    let back = load_run(&path, TaskId::Task1).unwrap();
    assert_eq!(back, r);
    for (a, b) in back.as_soft().unwrap().values().zip(r.as_soft().unwrap().values()) {
        assert_eq!(a.values()[0].to_bits(), b.values()[0].to_bits());
    }
}
