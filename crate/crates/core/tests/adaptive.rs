use smoothfem::afem::{afem_run, AfemConfig};
use smoothfem::config::{parse_config, RunConfig};
use smoothfem::estimators::EstimatorKind;
use smoothfem::problems::poisson_lshape;

#[test]
fn lshape_run_refines_towards_the_corner() {
    let config = AfemConfig {
        estimator: EstimatorKind::Jacobi,
        max_dofs: 800,
        ..AfemConfig::default()
    };
    let record = afem_run(&poisson_lshape(), &config).map_err(|e| e.error).unwrap();
    let first = record.rows.first().unwrap();
    let last = record.rows.last().unwrap();
    assert!(last.dofs >= 800);
    assert!(last.error < 0.5 * first.error);
    for row in &record.rows {
        assert!(row.effectivity > 0.3 && row.effectivity < 3.0, "{row:?}");
    }
    assert!(record.final_mesh.unwrap().validate().is_empty());
}

#[test]
fn config_text_survives_a_round_trip() {
    let mut config = RunConfig::new("poisson_lshape");
    config.theta = 0.4;
    config.degree = 2;
    config.estimator = EstimatorKind::GaussSeidel;
    let parsed = parse_config(&config.serialize()).unwrap();
    assert_eq!(parsed.serialize(), config.serialize());
}
