use aigsage_core::aig::{parse_aiger, Aig, NodeId};
use aigsage_core::ml::{Model, ModelConfig, Predictions};
use aigsage_core::netgen::{generate, AdderKind, Family};
use aigsage_core::oracle::{run_oracle, AdderTree, CutParams, NodeLabels};
use aigsage_core::pipeline::{
    ablate, adder_metrics, build_dataset, evaluate, extract_from_predictions, repair_predictions,
    run_learned, task_metrics, Ablation, DatasetError, Split,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const CLASSES: [usize; 3] = [4, 2, 2];

fn fixture() -> Aig {
    parse_aiger(include_str!("fixtures/csa3_reference.aag")).unwrap()
}

fn designs() -> Vec<Aig> {
    let mut v = vec![fixture()];
    for bits in [2, 4, 7, 12] {
        v.push(generate(Family::Csa, bits).unwrap().0);
        v.push(generate(Family::Booth, bits).unwrap().0);
    }
    v
}

#[test]
fn dataset_splits_are_disjoint() {
    let mut train = build_dataset(&[(Family::Csa, 2), (Family::Csa, 3)], Split::Train).unwrap();
    let test = build_dataset(&[(Family::Csa, 3)], Split::Test).unwrap();
    assert_eq!(
        train.clone().extend(test),
        Err(DatasetError::Duplicate("csa3".into()))
    );
    let test = build_dataset(&[(Family::Booth, 4)], Split::Test).unwrap();
    train.extend(test).unwrap();
    assert_eq!(train.len(), 3);
    assert_eq!(train.training_graphs().len(), 2);
    assert!(train.split(Split::Test).all(|d| d.name == "booth4"));
    for d in train.designs() {
        assert_eq!(d.labels, run_oracle(&d.aig, CutParams::default()).labels);
    }
}

fn root_pairs(t: &AdderTree) -> Vec<(AdderKind, NodeId, NodeId)> {
    let mut v: Vec<_> = t.adders.iter().map(|a| (a.kind, a.sum, a.carry)).collect();
    v.sort();
    v
}

#[test]
fn oracle_perfect_predictions_give_the_oracle_tree() {
    let mut cases = vec![(fixture(), true)];
    for bits in 2..=24 {
        cases.push((generate(Family::Csa, bits).unwrap().0, true));
        // redundant XOR logic in the recoder can expose two equivalent
        // input frames for one half adder; only the roots must agree
        cases.push((generate(Family::Booth, bits).unwrap().0, false));
    }
    for (g, exact) in cases {
        let oracle = run_oracle(&g, CutParams::default());
        let perfect = Predictions::from_labels(&oracle.labels, CLASSES);
        for repair in [false, true] {
            let run = extract_from_predictions(&g, perfect.clone(), repair);
            assert_eq!(root_pairs(&run.tree), root_pairs(&oracle.tree));
            if exact {
                assert!(adder_metrics(&run.tree, &oracle.tree).exact);
            }
            assert_eq!(run.predictions.to_labels(), oracle.labels);
        }
        assert_eq!(repair_predictions(&g, &perfect), perfect);
    }
}

#[test]
fn repair_restores_a_dropped_carry_flag() {
    let g = fixture();
    let oracle = run_oracle(&g, CutParams::default());
    let mut pred = Predictions::from_labels(&oracle.labels, CLASSES);
    assert_eq!(pred.classes[2][10], 1);
    pred.classes[2][10] = 0;
    let raw = extract_from_predictions(&g, pred.clone(), false);
    assert!(!adder_metrics(&raw.tree, &oracle.tree).exact);
    let fixed = extract_from_predictions(&g, pred, true);
    assert!(adder_metrics(&fixed.tree, &oracle.tree).exact);
    assert_eq!(fixed.predictions.classes[2][10], 1);
}

fn noisy(labels: &NodeLabels, g: &Aig, rate: f64, rng: &mut Xoshiro256PlusPlus) -> Predictions {
    let mut p = Predictions::from_labels(labels, CLASSES);
    for id in g.and_ids() {
        for t in 1..3 {
            if rng.random_bool(rate) {
                p.classes[t][id as usize] ^= 1;
            }
        }
    }
    p
}

#[test]
fn repair_does_not_lower_adder_recall() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    for g in designs() {
        let oracle = run_oracle(&g, CutParams::default());
        for rate in [0.01, 0.05, 0.2] {
            let p = noisy(&oracle.labels, &g, rate, &mut rng);
            let raw = extract_from_predictions(&g, p.clone(), false);
            let fixed = extract_from_predictions(&g, p, true);
            let (r0, r1) = (
                adder_metrics(&raw.tree, &oracle.tree).recall,
                adder_metrics(&fixed.tree, &oracle.tree).recall,
            );
            assert!(r1 >= r0, "recall {r1} after repair below {r0}");
        }
    }
}

#[test]
fn untrained_model_runs_end_to_end() {
    let (g, _) = generate(Family::Booth, 6).unwrap();
    for config in [ModelConfig::shallow(), ModelConfig::deep()] {
        let model = Model::new(config).unwrap();
        for repair in [false, true] {
            let run = run_learned(&g, &model, repair);
            assert_eq!(run.predictions.num_nodes(), g.num_ids());
            assert!(run.times.total() >= 0.0);
            for t in 0..3 {
                assert!(run.predictions.classes[t]
                    .iter()
                    .all(|&c| (c as usize) < CLASSES[t]));
            }
        }
    }
}

#[test]
fn metrics_of_exact_predictions() {
    let (g, _) = generate(Family::Csa, 6).unwrap();
    let oracle = run_oracle(&g, CutParams::default());
    for t in 0..3 {
        let m = task_metrics(&g, oracle.labels.task(t), oracle.labels.task(t), CLASSES[t]);
        assert_eq!(m.accuracy, 1.0);
        let ands = g.and_ids().count() as u64;
        assert_eq!(m.confusion.iter().flatten().sum::<u64>(), ands);
        assert!(m
            .classes
            .iter()
            .all(|c| c.precision == 1.0 && c.recall == 1.0));
    }
    let a = adder_metrics(&oracle.tree, &oracle.tree);
    assert!(a.exact && a.recall == 1.0 && a.precision == 1.0 && a.matched == a.oracle);
}

#[test]
fn confusion_counts_by_hand() {
    let g = parse_aiger("aag 5 2 0 1 3\n2\n4\n10\n6 2 4\n8 3 5\n10 7 9\n").unwrap();
    // AND nodes 3, 4, 5
    let truth = [0, 0, 0, 1, 0, 1];
    let pred = [1, 1, 1, 1, 1, 0];
    let m = task_metrics(&g, &truth, &pred, 2);
    assert_eq!(m.confusion, vec![vec![0, 1], vec![1, 1]]);
    assert!((m.accuracy - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(m.classes[1].precision, 0.5);
    assert_eq!(m.classes[1].recall, 0.5);
    assert_eq!(m.classes[0].precision, 0.0);
}

#[test]
fn ablation_reports_cover_the_test_split() {
    let mut ds = build_dataset(&[(Family::Csa, 2), (Family::Csa, 3)], Split::Train).unwrap();
    ds.extend(build_dataset(&[(Family::Csa, 5)], Split::Test).unwrap())
        .unwrap();
    let before: Vec<NodeLabels> = ds.designs().iter().map(|d| d.labels.clone()).collect();
    let mut config = ModelConfig::shallow();
    config.epochs = 3;
    for mode in [
        Ablation::Full,
        Ablation::SingleTask(1),
        Ablation::NoFunctionFeatures,
    ] {
        let r = ablate(&ds, &config, mode).unwrap();
        assert_eq!(r.designs.len(), 1);
        assert_eq!(r.designs[0].name, "csa5");
        assert!(!r.repair);
        assert!(r
            .to_csv()
            .starts_with("design,family,bits,nodes,task,accuracy,runtime_s\n"));
        assert_eq!(r.to_csv().lines().count(), 4);
    }
    let after: Vec<NodeLabels> = ds.designs().iter().map(|d| d.labels.clone()).collect();
    assert_eq!(before, after);
    let model = Model::new(config).unwrap();
    let r = evaluate(&model, &ds, Split::Test, true);
    assert!(r.designs[0].repaired_tasks.is_some());
    let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(json["designs"][0]["bits"], 5);
}
