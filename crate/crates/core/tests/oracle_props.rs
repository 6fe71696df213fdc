use nncouple::oracle::{
    psi_population, psi_population_conditional, psi_population_joint, psi_population_kron, psi_population_norm,
    response_covariance, sample_coupled, weighted_norm,
};
use nncouple::{FiniteJoint, Link, MatrixNorm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instances(count: usize, seed: u64) -> Vec<FiniteJoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| FiniteJoint::random_with_z(2 + i % 4, 2 + i % 3, 2 + i % 5, &mut rng))
        .collect()
}

#[test]
fn two_routes_agree() {
    for j in instances(200, 1) {
        let a = psi_population(&j).unwrap();
        let b = psi_population_kron(&j).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        let c = psi_population_norm(&j, MatrixNorm::WeightedFrobenius, Link::Square).unwrap();
        assert!((a - c).abs() < 1e-12);
    }
}

#[test]
fn information_gain_and_bounds() {
    for j in instances(200, 2) {
        let base = psi_population(&j).unwrap();
        let joint = psi_population_joint(&j).unwrap();
        assert!(joint >= base - 1e-12);
        assert!((0.0..=1.0 + 1e-12).contains(&joint));
        let cond = psi_population_conditional(&j).unwrap();
        assert!((-1e-12..=1.0 + 1e-12).contains(&cond), "{cond}");
    }
}

#[test]
fn norms_are_monotone_in_information() {
    for j in instances(200, 3) {
        let p = j.y_marginal();
        let vx = j.covariance_given_x().unwrap();
        let vxz = j.covariance_given_xz().unwrap();
        let vy = response_covariance(&p);
        for norm in [MatrixNorm::WeightedFrobenius, MatrixNorm::WeightedTrace] {
            let (a, b, c) = (weighted_norm(&vx, &p, norm), weighted_norm(&vxz, &p, norm), weighted_norm(&vy, &p, norm));
            assert!(b >= a - 1e-12, "{norm:?}: {b} < {a}");
            assert!(c >= b - 1e-12, "{norm:?}: {c} < {b}");
        }
    }
}

#[test]
fn z_independent_of_everything_adds_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = FiniteJoint::<f64>::random(3, 3, &mut rng);
    let pz = [0.25, 0.75];
    let mut t = vec![0.0; 3 * 2 * 3];
    for x in 0..3 {
        for (z, w) in pz.iter().enumerate() {
            for y in 0..3 {
                t[(x * 2 + z) * 3 + y] = base.prob(x, y) * w;
            }
        }
    }
    let j = FiniteJoint::with_z(t, 3, 2, 3).unwrap();
    assert!(psi_population_conditional(&j).unwrap().abs() < 1e-12);
}

#[test]
fn z_equal_to_y_gives_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = FiniteJoint::<f64>::random(2, 3, &mut rng);
    let mut t = vec![0.0; 2 * 3 * 3];
    for x in 0..2 {
        for y in 0..3 {
            t[(x * 3 + y) * 3 + y] = base.prob(x, y);
        }
    }
    let j = FiniteJoint::with_z(t, 2, 3, 3).unwrap();
    assert!((psi_population_conditional(&j).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn sampled_frequencies_match_epsilon_family() {
    let eps = 0.5;
    let table = [0.0, 1.0 - eps, eps / 2.0, eps / 2.0, 0.0, 0.0];
    let j = FiniteJoint::new(table.to_vec(), 2, 3).unwrap();
    let n = 100_000;
    let (xs, ys) = sample_coupled(&j, n, 42);
    let mut freq = [0usize; 6];
    for (x, y) in xs.iter().zip(&ys) {
        freq[x * 3 + y] += 1;
    }
    for (cell, &expected) in table.iter().enumerate() {
        let got = freq[cell] as f64 / n as f64;
        assert!((got - expected).abs() < 0.01, "cell {cell}: {got} vs {expected}");
        if expected == 0.0 {
            assert_eq!(freq[cell], 0);
        }
    }
}
