use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use trafsvm_core::arff::{parse_arff, write_arff, Attribute, AttributeKind, Dataset, Instance, Value};
use trafsvm_core::eval::{confusion, summarize, ConfusionMatrix, ErrorSums};
use trafsvm_core::ingest::{merge_batches, parse_capture_csv, write_capture_csv, CaptureBatch, PacketRecord, ParseOptions};
use trafsvm_core::prep::{encode, fit_encoder, split_indices, train_size, FitOptions, SplitSpec};
use trafsvm_core::report::{length_stats, tabulate};

const AWKWARD: &str = "[a-zA-Z0-9 ,'\"%{}\\\\?.\t-]{0,8}";

fn distinct_names(n: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::btree_set(AWKWARD, n..=n).prop_map(|s| s.into_iter().collect())
}

#[derive(Debug, Clone)]
enum Kind {
    Numeric,
    Nominal(Vec<String>),
    Str,
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![
        Just(Kind::Numeric),
        Just(Kind::Str),
        (1usize..5).prop_flat_map(distinct_names).prop_map(Kind::Nominal),
    ]
}

fn cell(k: &Kind) -> BoxedStrategy<Value> {
    let missing = Just(Value::Missing);
    match k {
        Kind::Numeric => prop_oneof![
            1 => missing,
            6 => prop::num::f64::NORMAL.prop_map(Value::Number),
            2 => (-1000i32..1000).prop_map(|i| Value::Number(f64::from(i))),
        ]
        .boxed(),
        Kind::Str => prop_oneof![1 => missing, 4 => AWKWARD.prop_map(Value::Str)].boxed(),
        Kind::Nominal(vals) => prop_oneof![1 => missing, 4 => (0..vals.len()).prop_map(Value::Nominal)].boxed(),
    }
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..5)
        .prop_flat_map(|n| (distinct_names(n), prop::collection::vec(kind(), n), AWKWARD, 0usize..12))
        .prop_flat_map(|(names, kinds, relation, rows)| {
            let row: Vec<BoxedStrategy<Value>> = kinds.iter().map(cell).collect();
            (
                Just(names),
                Just(kinds),
                Just(relation),
                prop::collection::vec(row, rows),
            )
        })
        .prop_map(|(names, kinds, relation, rows)| {
            let attributes = names
                .into_iter()
                .zip(kinds)
                .map(|(name, k)| Attribute {
                    name,
                    kind: match k {
                        Kind::Numeric => AttributeKind::Numeric,
                        Kind::Str => AttributeKind::String,
                        Kind::Nominal(v) => AttributeKind::Nominal(v),
                    },
                })
                .collect();
            let instances = rows.into_iter().map(|values| Instance { values }).collect();
            Dataset::new(relation, attributes, instances, None).unwrap()
        })
}

fn packet() -> impl Strategy<Value = PacketRecord> {
    (
        0u64..1_000_000,
        0u32..100_000_000,
        "[0-9.]{1,15}",
        "[0-9a-f:.]{1,15}",
        "[A-Za-z0-9.]{1,8}",
        1u32..65536,
        "[ -~]{0,30}",
    )
        .prop_map(|(no, micros, source, destination, protocol, length, info)| PacketRecord {
            no,
            time: f64::from(micros) / 1e6,
            source,
            destination,
            protocol,
            length,
            info,
        })
}

fn batch(label: &'static str) -> impl Strategy<Value = CaptureBatch> {
    prop::collection::vec(packet(), 0..20).prop_map(move |records| CaptureBatch {
        label: label.into(),
        records,
        source_files: vec![],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arff_text_round_trips(d in dataset()) {
        let mut buf = Vec::new();
        write_arff(&d, &mut buf).unwrap();
        let back = parse_arff(buf.as_slice()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn capture_csv_round_trips(b in batch("w")) {
        let mut buf = Vec::new();
        write_capture_csv(&b, &mut buf).unwrap();
        let parsed = parse_capture_csv(buf.as_slice(), "mem", "w", &ParseOptions::default()).unwrap();
        prop_assert!(parsed.skipped.is_empty());
        prop_assert_eq!(parsed.batch.records, b.records);
    }

    #[test]
    fn merging_is_associative(a in batch("a"), b in batch("b"), c in batch("c")) {
        let left = merge_batches(vec![merge_batches(vec![a.clone(), b.clone()], "ab").unwrap(), c.clone()], "w").unwrap();
        let right = merge_batches(vec![a.clone(), merge_batches(vec![b.clone(), c.clone()], "bc").unwrap()], "w").unwrap();
        prop_assert_eq!(&left.records, &right.records);
        prop_assert_eq!(left.len(), a.len() + b.len() + c.len());
    }

    #[test]
    fn split_partitions_rows(n in 2usize..500, p in 1.0f64..99.0, shuffle: bool, seed: u64) {
        let s = SplitSpec { train_percent: p, shuffle, seed };
        let expected_train = train_size(n, p);
        prop_assume!(expected_train > 0 && expected_train < n);
        let (train, test) = split_indices(n, &s).unwrap();
        prop_assert_eq!(train.len(), expected_train);
        prop_assert_eq!(train.len() + test.len(), n);
        let all: BTreeSet<usize> = train.iter().chain(&test).copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(all.iter().next_back().copied(), Some(n - 1));
        prop_assert_eq!(split_indices(n, &s).unwrap(), (train, test));
    }

    #[test]
    fn encoder_refit_is_idempotent(rows in prop::collection::vec((0usize..3, 0usize..4, 1u32..2000), 2..40), scale: bool) {
        let d = capture_like(&rows);
        let opts = if scale { FitOptions::scaled() } else { FitOptions::default() };
        let spec = fit_encoder(&d, "Protocol", &opts).unwrap();
        prop_assert_eq!(&fit_encoder(&d, "Protocol", &opts).unwrap(), &spec);
        let once = encode(&d, &spec).unwrap();
        let twice = encode(&d, &spec).unwrap();
        prop_assert_eq!(once.rows().collect::<Vec<_>>(), twice.rows().collect::<Vec<_>>());
        for r in once.rows() {
            prop_assert_eq!(r.len(), spec.dimension());
            if scale {
                prop_assert!(r.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
        let text = spec.to_text();
        let mut lines = text.lines().enumerate();
        prop_assert_eq!(trafsvm_core::EncoderSpec::from_lines(&mut lines).unwrap(), spec);
    }

    #[test]
    fn kappa_ignores_label_order(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200),
        perm in Just((0..4).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let actual: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let predicted: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let priors = vec![0.25; 4];
        let m = confusion(&actual, &predicted, &labels).unwrap();
        let s = summarize(&m, &priors, &m.row_sums()).unwrap();
        let pa: Vec<usize> = actual.iter().map(|&a| perm[a]).collect();
        let pp: Vec<usize> = predicted.iter().map(|&p| perm[p]).collect();
        let pm = confusion(&pa, &pp, &labels).unwrap();
        let ps = summarize(&pm, &priors, &pm.row_sums()).unwrap();
        prop_assert!((s.kappa - ps.kappa).abs() < 1e-12);
        prop_assert_eq!(s.correct, ps.correct);
    }

    #[test]
    fn hard_prediction_errors_match_slotwise_sums(
        pairs in prop::collection::vec((0usize..5, 0usize..5), 1..300),
        weights in prop::collection::vec(0.05f64..1.0, 5),
    ) {
        let k = 5;
        let total: f64 = weights.iter().sum();
        let priors: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let labels: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let actual: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let predicted: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let m = confusion(&actual, &predicted, &labels).unwrap();
        let s = summarize(&m, &priors, &m.row_sums()).unwrap();

        let mut sums = ErrorSums::default();
        for (&a, &p) in actual.iter().zip(&predicted) {
            let mut dist = vec![0.0; k];
            dist[p] = 1.0;
            sums.add(&dist, a, &priors);
        }
        let e = s.incorrect as f64 / s.n as f64;
        prop_assert!((s.mae - sums.mae()).abs() < 1e-12);
        prop_assert!((s.rmse - sums.rmse()).abs() < 1e-12);
        prop_assert!((s.rae - sums.rae()).abs() < 1e-9);
        prop_assert!((s.rrse - sums.rrse()).abs() < 1e-9);
        prop_assert!((s.mae - 2.0 * e / k as f64).abs() < 1e-12);
        prop_assert!((s.rmse - (2.0 * e / k as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn frequency_tables_match_recount(
        rows in prop::collection::vec((0usize..3, 0usize..6, 1u32..2000), 1..80),
        top_k in prop::option::of(1usize..5),
        seed: u64,
    ) {
        let d = capture_like(&rows);
        let t = tabulate(&d, "Destination", top_k).unwrap();
        let mut naive: BTreeMap<String, u64> = BTreeMap::new();
        for (_, dest, _) in &rows {
            *naive.entry(format!("10.0.0.{dest}")).or_default() += 1;
        }
        let mut expected: Vec<(String, u64)> = naive.into_iter().collect();
        expected.sort_by_key(|(v, c)| (std::cmp::Reverse(*c), v.clone()));
        let keep = top_k.unwrap_or(usize::MAX).min(expected.len());
        prop_assert_eq!(&t.entries[..], &expected[..keep]);
        prop_assert_eq!(t.other, expected[keep..].iter().map(|(_, c)| c).sum::<u64>());
        prop_assert_eq!(t.total(), rows.len() as u64);

        let mut shuffled = d.clone();
        shuffle(&mut shuffled.instances, seed);
        prop_assert_eq!(tabulate(&shuffled, "Destination", top_k).unwrap(), t);
    }

    #[test]
    fn length_stats_match_two_pass(values in prop::collection::vec(1u32..65536, 2..300), seed: u64) {
        let rows: Vec<(usize, usize, u32)> = values.iter().map(|&l| (0, 0, l)).collect();
        let d = capture_like(&rows);
        let s = length_stats(&d, "Length").unwrap();
        let xs: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((s.mean - mean).abs() <= 1e-9 * mean.abs());
        prop_assert!((s.stddev - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1.0));
        prop_assert_eq!(s.minimum, xs.iter().copied().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(s.maximum, xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        prop_assert_eq!(s.distinct as usize, values.iter().collect::<BTreeSet<_>>().len());
        prop_assert!(s.minimum <= s.mean && s.mean <= s.maximum);
        prop_assert!(s.stddev <= (s.maximum - s.minimum) / 2.0 * (n / (n - 1.0)).sqrt() + 1e-9);

        let mut shuffled = d.clone();
        shuffle(&mut shuffled.instances, seed);
        let t = length_stats(&shuffled, "Length").unwrap();
        prop_assert!((t.mean - s.mean).abs() <= 1e-9 * s.mean.abs());
        prop_assert!((t.stddev - s.stddev).abs() <= 1e-9 * s.stddev.max(1.0));
    }
}

fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut state = seed | 1;
    for i in (1..items.len()).rev() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        items.swap(i, (state % (i as u64 + 1)) as usize);
    }
}

/// Protocol / Destination / Length dataset from `(protocol, destination, length)` triples.
fn capture_like(rows: &[(usize, usize, u32)]) -> Dataset {
    let protocols = ["TCP", "DNS", "QUIC"];
    let destinations: Vec<String> = (0..6).map(|i| format!("10.0.0.{i}")).collect();
    let instances = rows
        .iter()
        .map(|&(p, d, l)| Instance {
            values: vec![Value::Nominal(d), Value::Nominal(p), Value::Number(f64::from(l))],
        })
        .collect();
    Dataset::new(
        "w",
        vec![
            Attribute::nominal("Destination", destinations),
            Attribute::nominal("Protocol", protocols),
            Attribute::numeric("Length"),
        ],
        instances,
        None,
    )
    .unwrap()
}

#[test]
fn confusion_matrix_dimensions_are_checked() {
    assert!(ConfusionMatrix::from_counts(vec!["a".into()], vec![vec![1, 2]]).is_err());
}
