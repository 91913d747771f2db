use emc::analysis::{
    build_predictor_error_system, response_rows, small_gain_check, write_response_csv, ModeExposure,
};
use emc::noise_estimator::{tune_by_eigenvalues, EstimatorKind};
use emc::plant::{DesignModelParams, ParamRanges};

#[test]
fn static_design_encircles_at_the_worst_corner() {
    let est = tune_by_eigenvalues(EstimatorKind::Static, 0.03, 0.03, 10).unwrap();
    let ch = build_predictor_error_system(&est, 0.01).unwrap();
    let r = small_gain_check(&ch.attitude, "attitude", ModeExposure::Flexible, &[DesignModelParams::worst_corner()], 100)
        .unwrap();
    assert!(r.corners[0].winding != 0);
    assert!(!r.no_encirclement && !r.small_gain_pass);
}

#[test]
fn rate_channel_meets_the_small_gain_bound() {
    let est = tune_by_eigenvalues(EstimatorKind::Dynamic, 0.03, 0.03, 10).unwrap();
    let ch = build_predictor_error_system(&est, 0.01).unwrap();
    let r = small_gain_check(&ch.rate, "rate", ModeExposure::Rigid, &ParamRanges::uncertainty_box().corners(), 100).unwrap();
    assert!(r.small_gain_pass, "eta = {}", r.eta);
    assert!(r.corners.iter().all(|c| c.v_de_max == 0.0));
    assert_eq!(r.corners.len(), 16);
    assert!((r.predictor_spectral_radius - 0.97).abs() < 1e-7);
}

#[test]
fn response_export_has_provenance_and_all_series() {
    let est = tune_by_eigenvalues(EstimatorKind::Dynamic, 0.03, 0.03, 10).unwrap();
    let ch = build_predictor_error_system(&est, 0.01).unwrap();
    let corners = [DesignModelParams::nominal(), DesignModelParams::worst_corner()];
    let rows = response_rows(&ch.attitude, "attitude", ModeExposure::Flexible, &corners, 10).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("resp.csv");
    write_response_csv(&path, "emc run seed=1 config_sha256=00", &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# emc run seed=1 config_sha256=00\nf_hz,re,im,mag_db,phase_deg,channel,corner_id\n"));
    for series in ["attitude_S", "attitude_V", "attitude_VdE"] {
        assert!(text.lines().any(|l| l.contains(&format!(",{series},"))), "{series}");
    }
    assert_eq!(text.lines().count(), 2 + rows.len());
}
