use sparsecluster::cluster::{sparse_cluster_splitting, sparse_spectral_cluster};
use sparsecluster::detect::{detection_test, oracle_labels, DetectConfig, Labeler};
use sparsecluster::fps::{default_lambda, SolverConfig};
use sparsecluster::lowdeg::{lowdeg_bound, lowdeg_norm_exact, lowdeg_norm_mc, LowDegParams};
use sparsecluster::model::{misclustering_loss, sample_null, sample_planted, ModelParams};

#[test]
fn both_clusterers_recover_a_strong_signal() {
    let params = ModelParams::new(120, 30, 3, 6.0).unwrap();
    let data = sample_planted(&params, 11).unwrap();
    let truth = data.truth.as_ref().unwrap();

    let cfg = SolverConfig::with_lambda(default_lambda(&params, 2.0).unwrap());
    let spectral = sparse_spectral_cluster(&data, &cfg).unwrap();
    assert!(misclustering_loss(&spectral.zhat, &truth.z).unwrap() < 0.05);
    assert!(spectral
        .support
        .iter()
        .all(|j| truth.theta.support().contains(j)));

    let split = sparse_cluster_splitting(&data, 3, 11).unwrap();
    assert!(misclustering_loss(&split.zhat, &truth.z).unwrap() < 0.05);
    assert!(truth.theta.support().contains(&split.k_hat.unwrap()));
}

#[test]
fn same_seed_same_answer() {
    let params = ModelParams::new(40, 20, 2, 3.0).unwrap();
    let a = sparse_cluster_splitting(&sample_planted(&params, 5).unwrap(), 2, 5).unwrap();
    let b = sparse_cluster_splitting(&sample_planted(&params, 5).unwrap(), 2, 5).unwrap();
    assert_eq!(a.zhat, b.zhat);
    assert_eq!(a.theta_hat, b.theta_hat);
}

#[test]
fn oracle_detection_separates_null_from_planted() {
    let params = ModelParams::new(200, 100, 4, 5.0).unwrap();
    let cfg = DetectConfig::new(1.0, 4, 100, 200).unwrap();
    let oracle: &Labeler = &oracle_labels;
    assert!(!detection_test(&sample_null(&params, 1).unwrap(), oracle, &cfg, 1).unwrap());
    assert!(detection_test(&sample_planted(&params, 2).unwrap(), oracle, &cfg, 2).unwrap());
}

#[test]
fn lowdeg_estimates_agree_on_a_small_instance() {
    let lp = LowDegParams::new(2, 3, 1, 0.2, 3).unwrap();
    let exact = lowdeg_norm_exact(&lp).unwrap().value;
    let mc = lowdeg_norm_mc(&lp, 20_000, 3).unwrap();
    assert!((mc.value - exact).abs() <= 4.0 * mc.std_error + 1e-12);
    assert!(exact <= lowdeg_bound(&lp).unwrap());
}
