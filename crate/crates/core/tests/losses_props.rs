use lemurkit::losses::{finite_diff_check, grouped_mnr_loss, mnr_loss, EmbeddingMatrix, LossBatch};
use proptest::prelude::*;

const TEMPERATURES: [f64; 3] = [0.05, 0.2, 1.0];

fn matrix(b: usize, d: usize) -> impl Strategy<Value = EmbeddingMatrix> {
    prop::collection::vec(-3.0f64..3.0, b * d)
        .prop_filter("zero row", move |v| v.chunks(d).all(|r| r.iter().any(|x| x.abs() > 1e-3)))
        .prop_map(move |v| EmbeddingMatrix::new(b, d, v).unwrap())
}

fn groups(b: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), b), b).prop_map(|mask| {
        mask.iter()
            .enumerate()
            .map(|(i, row)| (0..row.len()).filter(|&j| j == i || row[j]).collect())
            .collect()
    })
}

fn batch() -> impl Strategy<Value = (LossBatch, Vec<Vec<usize>>)> {
    (1usize..=8, 1usize..=16, prop::sample::select(&TEMPERATURES[..])).prop_flat_map(|(b, d, t)| {
        (matrix(b, d), matrix(b, d), groups(b))
            .prop_map(move |(q, dm, g)| (LossBatch::new(q, dm, t).unwrap(), g))
    })
}

fn permuted(m: &EmbeddingMatrix, perm: &[usize]) -> EmbeddingMatrix {
    let rows: Vec<Vec<f64>> = perm.iter().map(|&i| m.row(i).to_vec()).collect();
    EmbeddingMatrix::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn losses_are_non_negative((b, g) in batch()) {
        prop_assert!(mnr_loss(&b).unwrap().value >= 0.0);
        prop_assert!(grouped_mnr_loss(&b.with_groups(g).unwrap()).unwrap().value >= 0.0);
    }

    #[test]
    fn singleton_groups_reduce_to_plain((b, _) in batch()) {
        let n = b.batch_size();
        let plain = mnr_loss(&b).unwrap().value;
        let grouped = grouped_mnr_loss(&b.with_groups((0..n).map(|i| vec![i]).collect()).unwrap()).unwrap().value;
        prop_assert!((plain - grouped).abs() <= 1e-12);
    }

    #[test]
    fn positive_row_scaling_is_absorbed(
        (b, g) in batch(),
        factors in prop::collection::vec(0.01f64..100.0, 16),
    ) {
        let n = b.batch_size();
        let mut q = b.queries().clone();
        let mut d = b.documents().clone();
        for i in 0..n {
            q.scale_row(i, factors[i]);
            d.scale_row(i, factors[15 - i]);
        }
        let scaled = LossBatch::new(q, d, b.temperature()).unwrap();
        prop_assert!((mnr_loss(&b).unwrap().value - mnr_loss(&scaled).unwrap().value).abs() <= 1e-10);
        let gb = b.with_groups(g.clone()).unwrap();
        let gs = scaled.with_groups(g).unwrap();
        prop_assert!((grouped_mnr_loss(&gb).unwrap().value - grouped_mnr_loss(&gs).unwrap().value).abs() <= 1e-10);
    }

    #[test]
    fn batch_order_is_irrelevant(
        (b, g) in batch(),
        perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let n = b.batch_size();
        let perm: Vec<usize> = perm.into_iter().filter(|&i| i < n).collect();
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let shuffled = LossBatch::new(permuted(b.queries(), &perm), permuted(b.documents(), &perm), b.temperature()).unwrap();
        prop_assert!((mnr_loss(&b).unwrap().value - mnr_loss(&shuffled).unwrap().value).abs() <= 1e-12);
        let g2: Vec<Vec<usize>> = perm.iter().map(|&old| g[old].iter().map(|&j| inverse[j]).collect()).collect();
        let a = grouped_mnr_loss(&b.with_groups(g).unwrap()).unwrap().value;
        let c = grouped_mnr_loss(&shuffled.with_groups(g2).unwrap()).unwrap().value;
        prop_assert!((a - c).abs() <= 1e-12);
    }

    #[test]
    fn gradients_match_central_differences((b, g) in batch()) {
        prop_assert!(finite_diff_check(&b, 1e-5).unwrap() < 1e-4);
        prop_assert!(finite_diff_check(&b.with_groups(g).unwrap(), 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn gradients_are_finite((b, g) in batch()) {
        for out in [mnr_loss(&b).unwrap(), grouped_mnr_loss(&b.with_groups(g).unwrap()).unwrap()] {
            prop_assert!(out.grad_queries.as_slice().iter().chain(out.grad_documents.as_slice()).all(|x| x.is_finite()));
        }
    }
}
