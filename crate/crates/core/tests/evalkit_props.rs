use std::collections::BTreeSet;

use lemurkit::evalkit::{compare, evaluate, EvalConfig, EvalQuery, EvalReport, EvalSetting};
use lemurkit::vindex::VectorIndex;
use proptest::prelude::*;

#[derive(Debug)]
struct Fixture {
    index: VectorIndex,
    queries: Vec<EvalQuery>,
    held_out: BTreeSet<String>,
}

fn fixture() -> impl Strategy<Value = Fixture> {
    (2usize..=8, 2usize..=60).prop_flat_map(|(d, n)| {
        (
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n),
            prop::collection::vec(prop::collection::vec(-0.8f64..0.8, d), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter_map("degenerate", |(docs, noise, test)| {
                if docs.iter().chain(&noise).any(|v| v.iter().all(|x| x.abs() < 1e-6)) {
                    return None;
                }
                let id = |i: usize| format!("act{i:03}");
                let index = VectorIndex::build(docs.iter().enumerate().map(|(i, v)| (id(i), v.clone()))).ok()?;
                let held_out: BTreeSet<String> = (0..docs.len()).filter(|&i| test[i]).map(id).collect();
                let queries = (0..docs.len())
                    .filter(|&i| test[i])
                    .map(|i| EvalQuery {
                        query_id: format!("q{i}"),
                        vector: docs[i].iter().zip(&noise[i]).map(|(a, b)| a + b).collect(),
                        truth_doc_id: id(i),
                    })
                    .collect();
                Some(Fixture { index, queries, held_out })
            })
    })
}

fn run(f: &Fixture, setting: EvalSetting, ks: &[usize]) -> EvalReport {
    let config = EvalConfig::new(setting, ks.to_vec()).unwrap();
    evaluate(&f.queries, &f.index, &config, Some(&f.held_out)).unwrap().0
}

proptest! {
    #[test]
    fn test_only_never_below_full(f in fixture()) {
        let ks = [1, 2, 3, 5, 10];
        let full = run(&f, EvalSetting::Full, &ks);
        let test_only = run(&f, EvalSetting::TestOnly, &ks);
        prop_assert_eq!(full.excluded, 0);
        prop_assert_eq!(test_only.excluded, 0);
        for k in ks {
            prop_assert!(test_only.acc.get(k).unwrap() >= full.acc.get(k).unwrap());
        }
        for (a, b) in test_only.ranks.iter().zip(&full.ranks) {
            prop_assert!(a <= b);
        }
        let cmp = compare(&full, &full).unwrap();
        prop_assert!(cmp.deltas.iter().all(|d| d.delta == 0.0));
    }

    #[test]
    fn accuracy_is_monotone_and_exact(f in fixture()) {
        let ks = [1, 2, 4, 8, 16, 64];
        let r = run(&f, EvalSetting::Full, &ks);
        let n = r.num_queries;
        let mut prev = 0.0;
        for k in ks {
            let acc = r.acc.get(k).unwrap();
            prop_assert!(acc >= prev && (0.0..=1.0).contains(&acc));
            let hits = r.ranks.iter().filter(|&&rank| rank >= 1 && rank <= k).count();
            let expected = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            prop_assert_eq!(acc, expected);
            prop_assert_eq!(acc == 1.0, n > 0 && r.ranks.iter().all(|&rank| rank >= 1 && rank <= k));
            prev = acc;
        }
    }

    #[test]
    fn reports_are_reproducible(f in fixture()) {
        let a = run(&f, EvalSetting::TestOnly, &[1, 3, 5]).to_json();
        let b = run(&f, EvalSetting::TestOnly, &[1, 3, 5]).to_json();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn truth_outside_the_collection_is_excluded() {
    let index = VectorIndex::build([("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap();
    let queries = vec![
        EvalQuery { query_id: "qa".into(), vector: vec![1.0, 0.1], truth_doc_id: "a".into() },
        EvalQuery { query_id: "qb".into(), vector: vec![0.1, 1.0], truth_doc_id: "b".into() },
        EvalQuery { query_id: "qz".into(), vector: vec![1.0, 1.0], truth_doc_id: "z".into() },
    ];
    let held: BTreeSet<String> = ["a".to_owned()].into();
    let cfg = EvalConfig::new(EvalSetting::TestOnly, vec![1]).unwrap();
    let (report, excluded) = evaluate(&queries, &index, &cfg, Some(&held)).unwrap();
    assert_eq!(excluded, vec!["qb".to_owned(), "qz".to_owned()]);
    assert_eq!((report.num_queries, report.excluded), (1, 2));
    assert_eq!(report.acc.get(1), Some(1.0));
}
