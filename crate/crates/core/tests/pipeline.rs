use affordance::harness::io::{parse_dispersion_csv, read_reports, CHAIN_HEADER};
use affordance::harness::run::{report_dir, run_matrix_in};
use affordance::harness::{run_single, ExperimentConfig};
use affordance::rwmh::Bias;

#[test]
fn full_matrix_for_one_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.output_dir = dir.path().to_path_buf();
    let outcome = run_matrix_in(&cfg, dir.path(), None).unwrap();
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    assert_eq!(outcome.reports.len(), 93);
    assert_eq!(outcome.aggregate.len(), 3);
    assert!(outcome.aggregate.iter().all(|r| r.runs == 31));

    let reports = read_reports(dir.path()).unwrap();
    assert_eq!(reports.len(), 93);
    for r in &reports {
        assert_eq!(r.chain.len(), cfg.iterations + cfg.burn_in);
        assert_eq!(r.config.to_text(), cfg.to_text());
        assert_eq!(r.metrics.seed, 1);
    }

    let path = dir.path().join("dispersion.csv");
    let before = parse_dispersion_csv(&path, &std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(before.len(), 93);
    report_dir(dir.path()).unwrap();
    let after = parse_dispersion_csv(&path, &std::fs::read_to_string(&path).unwrap()).unwrap();
    let key = |r: &affordance::harness::io::DispersionRow| (r.bias, r.c.to_bits());
    let (mut a, mut b) = (before.clone(), after);
    a.sort_by_key(key);
    b.sort_by_key(key);
    assert_eq!(a, b);
    for row in &before {
        let rep = reports.iter().find(|r| r.bias == row.bias && r.c == row.c).unwrap();
        assert_eq!(rep.metrics.success_count, row.success_count);
        assert_eq!(rep.metrics.dispersion_area, row.dispersion_area);
    }

    let chain = std::fs::read_to_string(dir.path().join("chains/run_impartial_c0.000000_s1.csv")).unwrap();
    assert_eq!(chain.lines().next(), Some(CHAIN_HEADER));
    assert_eq!(chain.lines().count(), 1 + cfg.iterations + cfg.burn_in);
}

#[test]
fn bias_levels_give_different_chains() {
    let cfg = ExperimentConfig::default();
    let imp = run_single(&cfg, Bias::Impartial, 0.05, 4).unwrap();
    let weak = run_single(&cfg, Bias::Weak, 0.05, 4).unwrap();
    assert_ne!(imp.chain_hash, weak.chain_hash);
    assert_eq!(imp.demos, weak.demos);
}

#[test]
fn same_inputs_same_chain() {
    let cfg = ExperimentConfig::default();
    let a = run_single(&cfg, Bias::Strong, 0.12, 9).unwrap();
    let b = run_single(&cfg, Bias::Strong, 0.12, 9).unwrap();
    assert_eq!(a.chain_hash, b.chain_hash);
    assert_eq!(a.metrics.success_count, b.metrics.success_count);
    assert_ne!(a.chain_hash, run_single(&cfg, Bias::Strong, 0.12, 10).unwrap().chain_hash);
}

#[test]
fn counts_add_up() {
    let cfg = ExperimentConfig::default();
    let r = run_single(&cfg, Bias::Weak, 0.05, 2).unwrap();
    let c = &r.counts;
    assert_eq!(c.local + c.dart + c.hold, cfg.iterations);
    assert!(c.local_accepted <= c.local && c.dart_accepted <= c.dart);
    let accepted = r.post_burn_in().iter().filter(|x| x.accepted).count();
    assert_eq!(accepted, c.local_accepted + c.dart_accepted);
    assert!(r.metrics.unique_success_count <= r.metrics.success_count);
}
