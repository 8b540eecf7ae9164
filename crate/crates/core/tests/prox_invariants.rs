mod common;

use std::sync::Arc;

use common::{catalogue, dense, eigenvalues, gaussian_vector, rng};
use fbtn::prox::*;
use nalgebra::{dvector, DVector};
use proptest::prelude::*;

const GAMMAS: [f64; 3] = [0.3, 1.0, 2.5];

fn prox_objective(g: &dyn ProxOracle, x: &DVector<f64>, gamma: f64, w: &DVector<f64>) -> f64 {
    g.g_value(w).unwrap().to_f64() + (w - x).norm_squared() / (2.0 * gamma)
}

#[test]
fn prox_value_matches_g_at_output() {
    for (name, g) in catalogue(1) {
        let mut r = rng(11);
        for &gamma in &GAMMAS {
            for _ in 0..20 {
                let x = gaussian_vector(&mut r, g.dim()) * 2.0;
                let (z, gz) = g.prox(&x, gamma).unwrap();
                let value = g.g_value(&z).unwrap();
                assert!(value.is_finite(), "{name}: prox output outside dom g");
                assert!((value.to_f64() - gz).abs() <= 1e-12 * (1.0 + gz.abs()), "{name}: {gz} vs {value}");
            }
        }
    }
}

#[test]
fn prox_minimizes_against_feasible_competitors() {
    for (name, g) in catalogue(2) {
        let mut r = rng(12);
        for &gamma in &GAMMAS {
            for _ in 0..10 {
                let x = gaussian_vector(&mut r, g.dim()) * 2.0;
                let (z, _) = g.prox(&x, gamma).unwrap();
                let best = prox_objective(g.as_ref(), &x, gamma, &z);
                for _ in 0..10 {
                    let y = gaussian_vector(&mut r, g.dim()) * 3.0;
                    let (w, _) = g.prox(&y, 1.0).unwrap();
                    for t in [1.0, 0.1, 1e-3] {
                        let u = &z * (1.0 - t) + &w * t;
                        let value = prox_objective(g.as_ref(), &x, gamma, &u);
                        assert!(value >= best - 1e-10 * (1.0 + best.abs()), "{name}: {value} < {best} at t = {t}");
                    }
                }
            }
        }
    }
}

#[test]
fn prox_is_firmly_nonexpansive() {
    for (name, g) in catalogue(3) {
        let mut r = rng(13);
        for &gamma in &GAMMAS {
            for _ in 0..30 {
                let x1 = gaussian_vector(&mut r, g.dim()) * 2.0;
                let x2 = gaussian_vector(&mut r, g.dim()) * 2.0;
                let z1 = g.prox(&x1, gamma).unwrap().0;
                let z2 = g.prox(&x2, gamma).unwrap().0;
                let dz = &z1 - &z2;
                assert!(dz.dot(&(&x1 - &x2)) >= dz.norm_squared() - 1e-12, "{name}");
            }
        }
    }
}

#[test]
fn jacobians_are_symmetric_with_spectrum_in_unit_interval() {
    for (name, g) in catalogue(4) {
        let mut r = rng(14);
        for &gamma in &GAMMAS {
            for _ in 0..10 {
                let x = gaussian_vector(&mut r, g.dim()) * 2.0;
                let p = dense(g.dim(), |v| g.jac_vec(&x, gamma, v).unwrap());
                assert!((&p - p.transpose()).amax() <= 1e-12, "{name}: asymmetric Jacobian");
                let ev = eigenvalues(&p);
                assert!(ev[0] >= -1e-12 && ev[ev.len() - 1] <= 1.0 + 1e-12, "{name}: spectrum {ev:?}");
            }
        }
    }
}

#[test]
fn jacobian_matches_directional_differences() {
    let h = 1e-7;
    for (name, g) in catalogue(5) {
        let mut r = rng(15);
        for &gamma in &GAMMAS {
            for _ in 0..10 {
                let x = gaussian_vector(&mut r, g.dim()) * 2.0;
                let v = gaussian_vector(&mut r, g.dim());
                let plus = g.prox(&(&x + &v * h), gamma).unwrap().0;
                let minus = g.prox(&(&x - &v * h), gamma).unwrap().0;
                let fd = (plus - minus) / (2.0 * h);
                let pv = g.jac_vec(&x, gamma, &v).unwrap();
                assert!((&fd - &pv).norm() <= 1e-5 * (1.0 + v.norm()), "{name}: {fd} vs {pv}");
            }
        }
    }
}

#[test]
fn moreau_envelope_lies_between_g_at_prox_and_g() {
    for (name, g) in catalogue(6) {
        let mut r = rng(16);
        for &gamma in &GAMMAS {
            for _ in 0..20 {
                let y = gaussian_vector(&mut r, g.dim()) * 2.0;
                let x = g.prox(&y, 1.0).unwrap().0;
                let gx = g.g_value(&x).unwrap().to_f64();
                let (z, gz) = g.prox(&x, gamma).unwrap();
                let envelope = gz + (&z - &x).norm_squared() / (2.0 * gamma);
                assert!(gz <= envelope + 1e-12 && envelope <= gx + 1e-12 * (1.0 + gx.abs()), "{name}");
            }
        }
    }
}

#[test]
fn fenchel_young_is_tight_at_the_prox() {
    for (name, g) in catalogue(7) {
        if !g.has_conjugate() {
            continue;
        }
        let mut r = rng(17);
        for &gamma in &GAMMAS {
            for _ in 0..20 {
                let x = gaussian_vector(&mut r, g.dim()) * 2.0;
                let (z, gz) = g.prox(&x, gamma).unwrap();
                let y = (&x - &z) / gamma;
                let conj = g.conjugate_value(&y).unwrap().unwrap();
                assert!(conj.is_finite(), "{name}: subgradient outside dom g*");
                let gap = gz + conj.to_f64() - z.dot(&y);
                assert!(gap.abs() <= 1e-9 * (1.0 + x.norm_squared()), "{name}: gap {gap}");
                let other = gaussian_vector(&mut r, g.dim());
                let lower = g.g_value(&g.prox(&other, 1.0).unwrap().0).unwrap().to_f64();
                let w = g.prox(&other, 1.0).unwrap().0;
                assert!(lower + conj.to_f64() >= w.dot(&y) - 1e-9 * (1.0 + x.norm_squared()), "{name}");
            }
        }
    }
}

/// `x = prox_{γg}(x) + γ prox_{g*/γ}(x/γ)` with `g*` given by an independent oracle.
fn check_moreau_identity(g: &dyn ProxOracle, conj: &dyn ProxOracle, gamma: f64, seed: u64) {
    let mut r = rng(seed);
    for _ in 0..50 {
        let x = gaussian_vector(&mut r, g.dim()) * 3.0;
        let z = g.prox(&x, gamma).unwrap().0;
        let y = conj.prox(&(&x / gamma), 1.0 / gamma).unwrap().0;
        let err = (&z + &y * gamma - &x).amax();
        assert!(err <= 1e-12 * (1.0 + x.amax()), "{g:?}: error {err}");
    }
}

#[test]
fn moreau_identity_for_conjugate_pairs() {
    let n = 7;
    for &gamma in &GAMMAS {
        check_moreau_identity(&L1Norm::new(n, 0.6).unwrap(), &SeparableBox::uniform(n, -0.6, 0.6).unwrap(), gamma, 21);
        check_moreau_identity(&LInfNorm::new(n, 0.9).unwrap(), &L1Ball::new(n, 0.9).unwrap(), gamma, 22);
        check_moreau_identity(&EuclideanNorm::new(n, 1.4).unwrap(), &EuclideanBall::new(n, 1.4).unwrap(), gamma, 23);
        check_moreau_identity(&SeparableBox::uniform(n, -0.6, 0.6).unwrap(), &L1Norm::new(n, 0.6).unwrap(), gamma, 24);
    }
    check_moreau_identity(&EuclideanBall::new(n, 2.0).unwrap(), &EuclideanNorm::new(n, 2.0).unwrap(), 1.0, 25);
}

#[test]
fn conjugate_combinator_agrees_with_direct_linf() {
    let n = 5;
    let direct = LInfNorm::new(n, 0.8).unwrap();
    let via_conjugate = MoreauConjugate::new(Arc::new(L1Ball::new(n, 0.8).unwrap())).unwrap();
    let mut r = rng(26);
    for &gamma in &GAMMAS {
        for _ in 0..30 {
            let x = gaussian_vector(&mut r, n) * 2.0;
            let (a, ga) = direct.prox(&x, gamma).unwrap();
            let (b, gb) = via_conjugate.prox(&x, gamma).unwrap();
            assert!((&a - &b).amax() <= 1e-12 && (ga - gb).abs() <= 1e-12);
            let v = gaussian_vector(&mut r, n);
            let pa = direct.jac_vec(&x, gamma, &v).unwrap();
            let pb = via_conjugate.jac_vec(&x, gamma, &v).unwrap();
            assert!((pa - pb).amax() <= 1e-12);
        }
    }
}

#[test]
fn separable_sum_acts_blockwise() {
    let l1: Arc<dyn ProxOracle> = Arc::new(L1Norm::new(2, 0.5).unwrap());
    let simplex: Arc<dyn ProxOracle> = Arc::new(UnitSimplex::new(3).unwrap());
    let sum = SeparableSum::new(vec![(l1.clone(), vec![4, 1]), (simplex.clone(), vec![0, 2, 3])]).unwrap();
    let mut r = rng(27);
    for &gamma in &GAMMAS {
        for _ in 0..20 {
            let x = gaussian_vector(&mut r, 5);
            let v = gaussian_vector(&mut r, 5);
            let (z, gz) = sum.prox(&x, gamma).unwrap();
            let pv = sum.jac_vec(&x, gamma, &v).unwrap();
            let xa = dvector![x[4], x[1]];
            let xb = dvector![x[0], x[2], x[3]];
            let (za, ga) = l1.prox(&xa, gamma).unwrap();
            let (zb, gb) = simplex.prox(&xb, gamma).unwrap();
            let pa = l1.jac_vec(&xa, gamma, &dvector![v[4], v[1]]).unwrap();
            let pb = simplex.jac_vec(&xb, gamma, &dvector![v[0], v[2], v[3]]).unwrap();
            assert_eq!(z, dvector![zb[0], za[1], zb[1], zb[2], za[0]]);
            assert_eq!(pv, dvector![pb[0], pa[1], pb[1], pb[2], pa[0]]);
            assert!((gz - ga - gb).abs() <= 1e-14);
        }
    }
}

/// Minimizes the prox objective over a uniform grid of spacing `h`.
fn grid_argmin(g: &dyn ProxOracle, x: &DVector<f64>, gamma: f64, h: f64, half_width: f64) -> (DVector<f64>, f64) {
    let steps = (half_width / h).round() as i64;
    let mut best = (x.clone(), f64::INFINITY);
    let mut visit = |w: DVector<f64>| {
        let value = prox_objective(g, x, gamma, &w);
        if value < best.1 {
            best = (w, value);
        }
    };
    match g.dim() {
        1 => {
            for i in -steps..=steps {
                visit(dvector![x[0] + i as f64 * h]);
            }
        }
        2 => {
            for i in -steps..=steps {
                for j in -steps..=steps {
                    visit(dvector![x[0] + i as f64 * h, x[1] + j as f64 * h]);
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn low_dimensional_prox_matches_grid_search() {
    let oracles: Vec<Arc<dyn ProxOracle>> = vec![
        Arc::new(L1Norm::new(1, 0.7).unwrap()),
        Arc::new(L1Norm::new(2, 0.7).unwrap()),
        Arc::new(EuclideanNorm::new(2, 0.9).unwrap()),
        Arc::new(LInfNorm::new(2, 0.9).unwrap()),
        Arc::new(GroupNorms::new(2, vec![vec![1], vec![0]], 0.4).unwrap()),
        Arc::new(SeparableBox::new(dvector![-0.5, -1.0], dvector![0.25, 0.5]).unwrap()),
        Arc::new(Halfspace::new(dvector![1.0, 2.0], 0.5).unwrap()),
        Arc::new(EuclideanBall::new(2, 0.8).unwrap()),
        Arc::new(L1Ball::new(2, 0.8).unwrap()),
        Arc::new(SecondOrderCone::new(2).unwrap()),
    ];
    let h = 2e-2;
    let mut r = rng(28);
    for g in &oracles {
        for &gamma in &GAMMAS {
            for _ in 0..2 {
                let x = gaussian_vector(&mut r, g.dim());
                let (z, _) = g.prox(&x, gamma).unwrap();
                let value = prox_objective(g.as_ref(), &x, gamma, &z);
                let (w, grid_value) = grid_argmin(g.as_ref(), &x, gamma, h, 2.5);
                assert!(value <= grid_value + 1e-12, "{g:?}: prox value {value} above grid {grid_value}");
                // The objective is (1/γ)-strongly convex.
                assert!((&z - &w).norm_squared() <= 2.0 * gamma * (grid_value - value) + 1e-12, "{g:?}");
            }
        }
    }
}

#[test]
fn simplex_projection_matches_search_along_the_edge() {
    let g = UnitSimplex::new(2).unwrap();
    let mut r = rng(29);
    for _ in 0..20 {
        let x = gaussian_vector(&mut r, 2) * 2.0;
        let z = g.prox(&x, 1.0).unwrap().0;
        let best = (0..=20_000)
            .map(|i| i as f64 / 20_000.0)
            .map(|t| dvector![t, 1.0 - t])
            .min_by(|a, b| (a - &x).norm().partial_cmp(&(b - &x).norm()).unwrap())
            .unwrap();
        assert!((&z - &best).norm() <= 1e-4);
    }
}

#[test]
fn zero_weight_norms_are_identity() {
    let x = dvector![1.0, -2.0, 0.0];
    let v = dvector![0.3, 0.2, -0.1];
    let oracles: Vec<Box<dyn ProxOracle>> = vec![
        Box::new(L1Norm::new(3, 0.0).unwrap()),
        Box::new(EuclideanNorm::new(3, 0.0).unwrap()),
        Box::new(GroupNorms::new(3, vec![vec![0, 2], vec![1]], 0.0).unwrap()),
        Box::new(LInfNorm::new(3, 0.0).unwrap()),
    ];
    for g in oracles {
        assert_eq!(g.prox(&x, 0.7).unwrap(), (x.clone(), 0.0));
        assert_eq!(g.jac_vec(&x, 0.7, &v).unwrap(), v);
    }
}

fn vec_strategy(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-5.0..5.0f64, n).prop_map(DVector::from_vec)
}

proptest! {
    #[test]
    fn l1_prox_is_coordinatewise_soft_threshold(x in vec_strategy(8), gamma in 0.01..5.0f64, lambda in 0.0..3.0f64) {
        let (z, gz) = L1Norm::new(8, lambda).unwrap().prox(&x, gamma).unwrap();
        for i in 0..8 {
            let t = gamma * lambda;
            let expected = if x[i] > t { x[i] - t } else if x[i] < -t { x[i] + t } else { 0.0 };
            prop_assert!((z[i] - expected).abs() <= 1e-12);
        }
        prop_assert!((gz - lambda * z.lp_norm(1)).abs() <= 1e-10);
    }

    #[test]
    fn projections_are_idempotent(x in vec_strategy(6)) {
        let sets: Vec<Box<dyn ProxOracle>> = vec![
            Box::new(UnitSimplex::new(6).unwrap()),
            Box::new(L1Ball::new(6, 2.0).unwrap()),
            Box::new(EuclideanBall::unit(6)),
            Box::new(SecondOrderCone::new(6).unwrap()),
            Box::new(SeparableBox::uniform(6, -1.0, 2.0).unwrap()),
        ];
        for s in sets {
            let z = s.prox(&x, 1.0).unwrap().0;
            let zz = s.prox(&z, 1.0).unwrap().0;
            prop_assert!((&z - &zz).amax() <= 1e-12, "{:?}", s);
        }
    }

    #[test]
    fn simplex_projection_preserves_order(x in vec_strategy(7)) {
        let (z, _) = project_simplex(&x, 1.0);
        prop_assert!((z.sum() - 1.0).abs() <= 1e-12);
        for i in 0..7 {
            for j in 0..7 {
                if x[i] > x[j] {
                    prop_assert!(z[i] >= z[j]);
                }
            }
        }
    }
}
