//! Cross-checks of the simplex path against exhaustive vertex enumeration.

use mather_lp::lp::{
    enumerate_vertices_bruteforce, optimal_face_dimension, probe_optimal_face, solve_lp,
    LinearProgram, Projection, DEFAULT_RANK_TOL,
};
use mather_lp::{
    action_objective, build_closed_measure_constraints, DiscreteStateSpace, GridConfig,
    LagrangianSpec, PotentialSpec,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_space() -> DiscreteStateSpace {
    DiscreteStateSpace::new(GridConfig::new(1, 4, 3, 0.25).unwrap()).unwrap()
}

/// Rank by SVD, independent of the complete-pivoting routine in the crate.
fn svd_rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    m.svd(false, false).rank(tol)
}

/// Exact face dimension (on position marginals) from the full vertex list.
fn oracle_face_dimension(space: &DiscreteStateSpace, objective: &[f64]) -> usize {
    let cons = build_closed_measure_constraints(space);
    let verts = enumerate_vertices_bruteforce(&cons).unwrap();
    let value = |v: &Vec<f64>| v.iter().zip(objective).map(|(a, b)| a * b).sum::<f64>();
    let best = verts.iter().map(value).fold(f64::INFINITY, f64::min);
    let marginals: Vec<Vec<f64>> = verts
        .iter()
        .filter(|v| value(v) <= best + 1e-9)
        .map(|v| {
            let mut m = vec![0.0; space.n_positions()];
            for (cell, w) in v.iter().enumerate() {
                m[space.position_of(cell)] += w;
            }
            m
        })
        .collect();
    let diffs: Vec<Vec<f64>> = marginals[1..]
        .iter()
        .map(|m| m.iter().zip(&marginals[0]).map(|(a, b)| a - b).collect())
        .collect();
    svd_rank(&diffs, 1e-9)
}

#[test]
fn constraint_rank_by_elimination() {
    let cons = build_closed_measure_constraints(&small_space());
    assert_eq!(cons.n_vars(), 12);
    assert_eq!(cons.n_rows(), 5);
    assert_eq!(svd_rank(&cons.matrix().to_dense(), 1e-9), 4);
    // balance rows alone have rank n_x − 1; normalization is independent of them
    assert_eq!(svd_rank(&cons.matrix().to_dense()[..4], 1e-9), 3);
}

#[test]
fn random_objectives_match_enumeration() {
    let space = small_space();
    let cons = build_closed_measure_constraints(&space);
    let verts = enumerate_vertices_bruteforce(&cons).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let c: Vec<f64> = (0..cons.n_vars()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let brute = verts
            .iter()
            .map(|v| v.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let lp = LinearProgram::new(c, cons.clone()).unwrap();
        let sol = solve_lp(&lp);
        assert!(sol.is_optimal());
        assert!((sol.value - brute).abs() <= 1e-10);
        assert!(sol.duality_gap() <= 1e-9);
        assert!(cons.equality_residual(&sol.x) <= 1e-10);
        // the reported solution is one of the enumerated vertices
        assert!(verts
            .iter()
            .any(|v| v.iter().zip(&sol.x).all(|(a, b)| (a - b).abs() < 1e-9)));
    }
}

#[test]
fn face_dimension_matches_oracle_for_canonical_potentials() {
    let space = small_space();
    let cases = [
        (PotentialSpec::cosine(&[1], 1.0).unwrap(), 0),
        (PotentialSpec::cosine(&[2], 1.0).unwrap(), 1),
        (PotentialSpec::zero(1), 3),
    ];
    for (v, expected) in cases {
        let spec = LagrangianSpec::mechanical(v);
        let objective = action_objective(&spec, &space).unwrap();
        let oracle = oracle_face_dimension(&space, &objective);
        assert_eq!(oracle, expected);
        let lp = LinearProgram::new(objective, build_closed_measure_constraints(&space)).unwrap();
        let projection = Projection::position_marginal(&space);
        let found = optimal_face_dimension(&lp, &projection, space.n_positions() + 1, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(found, oracle);
    }
}

#[test]
fn face_probe_vertices_are_optimal() {
    let space = DiscreteStateSpace::new(GridConfig::with_velocity_step(1, 16, 5, 0.25).unwrap()).unwrap();
    let spec = LagrangianSpec::mechanical(PotentialSpec::cosine(&[4], 1.0).unwrap());
    let lp = LinearProgram::new(
        action_objective(&spec, &space).unwrap(),
        build_closed_measure_constraints(&space),
    )
    .unwrap();
    let sol = solve_lp(&lp);
    let probe = probe_optimal_face(&lp, &sol, &Projection::position_marginal(&space), 17, 1e-7, 1).unwrap();
    assert!(probe.certified);
    // four maxima of cos(8πx) on the grid
    assert_eq!(probe.dimension, 3);
    for x in &probe.vertices {
        assert!((lp.value_at(x) - sol.value).abs() <= 1e-9);
        assert!(lp.constraints().equality_residual(x) <= 1e-10);
    }
}

#[test]
fn solves_are_deterministic() {
    let space = DiscreteStateSpace::new(GridConfig::with_velocity_step(1, 32, 9, 0.125).unwrap()).unwrap();
    let v = mather_lp::sample_random_potential(1, 17, 4, 1.0).unwrap();
    let spec = LagrangianSpec::mechanical(v)
        .shift_by_cohomology(&mather_lp::CohomologyClass::new(vec![0.3]))
        .unwrap();
    let lp = LinearProgram::new(
        action_objective(&spec, &space).unwrap(),
        build_closed_measure_constraints(&space),
    )
    .unwrap();
    let a = solve_lp(&lp);
    let b = solve_lp(&lp);
    assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    // vertex property: at most rank(A) = n_positions nonzeros
    assert!(a.x.iter().filter(|&&w| w > 0.0).count() <= space.n_positions());
}
