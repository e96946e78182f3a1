use feynkac::fracweights::*;
use feynkac::special::gamma;
use proptest::prelude::*;

mod props;
use props::*;

#[test]
fn graded_pi_weights_match_quadrature() {
    // adaptive quadrature of the defining integral, 30 digits
    let grid = TimeGrid::graded(1.0, 4, 2.0).unwrap();
    let q = pi_q(0.5, &grid, 4).unwrap();
    let want = [1.7059489489833846, 0.7387275476019490, 0.6151648361932759, 0.5732917840549361];
    for (a, b) in q.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn weight_chain_holds_to_ten_thousand() {
    weight_chain(10_001).unwrap();
}

#[test]
fn grunwald_partial_sums_telescope() {
    let (g, tau) = (0.3, 0.05);
    let w = grunwald_weights(g, tau, 200);
    let grid = TimeGrid::uniform(200.0 * tau, 200).unwrap();
    let q = fbdf_q(g, &grid).unwrap().q;
    let mut s = 0.0;
    for n in 0..200 {
        s += w[n];
        assert!((s - q[n]).abs() < 1e-12 * q[0], "n={n}");
    }
}

#[test]
fn caputo_value_of_square() {
    // Caputo derivative of t^2 of order 1/2 at t=1
    let want = 2.0 / gamma(2.5);
    let grid = TimeGrid::uniform(1.0, 512).unwrap();
    let table = pi_q_uniform(0.5, &grid).unwrap();
    let v: Vec<f64> = grid.nodes.iter().map(|t| t * t).collect();
    let got = apply_at(&table, &grid, 0.0, &history(&v), 512, false);
    assert!((got - want).abs() < 5e-4, "{got} vs {want}");
    let v: Vec<f64> = grid.nodes.iter().map(|t| (-t).exp() * t * t).collect();
    let got = apply_at(&table, &grid, 1.0, &history(&v), 512, false);
    assert!((got - (-1.0f64).exp() * want).abs() < 5e-4, "{got}");
}

#[test]
fn substantial_consistency_orders() {
    consistency_orders().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn discrete_positivity(
        v in prop::collection::vec(-10.0f64..10.0, 1..=64),
        g in 0.05f64..0.95,
        pu in prop::sample::select(vec![0.0, 0.7]),
        tau in prop::sample::select(vec![1e-1, 1e-3]),
    ) {
        positivity(&v, g, pu, tau).map_err(TestCaseError::fail)?;
    }
}
