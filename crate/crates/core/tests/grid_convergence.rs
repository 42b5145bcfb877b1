use subdiff::density::{estimate_density, l1_distance_values, EstimatorSpec, Grid};
use subdiff::exprparse::CoefficientField;
use subdiff::fpe::{solve_fpe, JumpVariant, SolverSettings, SpatialOperatorConfig, TimeScheme};
use subdiff::levy::SubordinatorSpec;
use subdiff::paths::{run_monte_carlo, SdeModel};

/// L1 gap between the grid solution and the KDE of fixed samples, and the
/// KDE's summed standard error.
fn gap(xs: &[f64], n_x: usize, dt: f64) -> (f64, f64) {
    let grid = Grid::new(-5.0, 5.0, n_x).unwrap();
    let coeffs = CoefficientField::parse("-x", "1", "0").unwrap();
    let op = SpatialOperatorConfig::new(JumpVariant::NoJump, coeffs).unwrap();
    let sub = SubordinatorSpec::stable(0.7).unwrap();
    let settings = SolverSettings::new(dt, 0.5).with_scheme(TimeScheme::Imex);
    let state = solve_fpe(&op, &sub, &grid, &settings).unwrap();
    let kde = estimate_density(xs, &grid, EstimatorSpec::GaussianKde { bandwidth: None }).unwrap();
    let se: f64 = kde.std_errors.as_ref().unwrap().iter().sum::<f64>() * grid.dx();
    (l1_distance_values(&grid, &kde.values, state.last()).unwrap(), se)
}

#[test]
fn refining_the_grid_does_not_widen_the_gap() {
    let coeffs = CoefficientField::parse("-x", "1", "0").unwrap();
    let model = SdeModel::new(coeffs, SubordinatorSpec::stable(0.7).unwrap(), None, 1e-3).unwrap();
    let xs = run_monte_carlo(&model, &[0.5], 20_000, 5, None).unwrap().column(0);
    let (coarse, _) = gap(&xs, 26, 0.01);
    let (fine, se) = gap(&xs, 51, 0.005);
    let (finer, se_finer) = gap(&xs, 101, 0.0025);
    assert!(fine <= coarse + 2.0 * se, "{coarse} -> {fine} (2 SE = {})", 2.0 * se);
    assert!(finer <= fine + 2.0 * se_finer, "{fine} -> {finer} (2 SE = {})", 2.0 * se_finer);
}
