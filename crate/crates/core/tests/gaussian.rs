use hisp_core::gaussian::{
    ekf_update, kalman_predict, merge, normal_pdf, prune, GaussianComponent, GaussianMixture,
    LinearMeasurement, MeasurementModel, ObsVector, StateMatrix, StateVector,
};
use hisp_core::sensor::{range_bearing, MotionModel, SensorGrid};
use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;

fn benchmark_grid() -> SensorGrid {
    SensorGrid::new(50.0, 500.0, 15.0, 1f64.to_radians()).unwrap()
}

fn spd(diag: [f64; 4], off: f64) -> StateMatrix {
    let mut m = StateMatrix::from_diagonal(&StateVector::from(diag));
    m[(0, 2)] = off;
    m[(2, 0)] = off;
    m[(1, 3)] = -off;
    m[(3, 1)] = -off;
    m
}

#[test]
fn density_of_four_independent_axes_is_a_product() {
    let mean = StateVector::new(1.0, -2.0, 0.5, 3.0);
    let c = GaussianComponent::new(1.0, mean, StateMatrix::identity());
    let off = StateVector::new(0.3, -1.2, 0.7, 2.0);
    let one_dim = |d: f64| (-0.5 * d * d).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let expected: f64 = off.iter().map(|&d| one_dim(d)).product();
    let got = c.eval(&(mean + off)).unwrap();
    assert!((got / expected - 1.0).abs() < 1e-12);
    assert_eq!(c.scaled(0.0).eval(&mean).unwrap(), 0.0);
}

#[test]
fn constant_velocity_prediction_moves_object_one() {
    let m = MotionModel::constant_velocity(4.0, 0.05, 1.0).unwrap();
    let c = GaussianComponent::new(
        1.0,
        StateVector::new(0.0, 0.0, 1.0, 1.1),
        StateMatrix::identity(),
    );
    let p = kalman_predict(&c, &m.transition, &m.process_noise);
    assert!((p.mean[0] - 4.0).abs() < 1e-12 && (p.mean[1] - 4.4).abs() < 1e-12);
    let f = &m.transition;
    assert!(p.covariance.trace() >= (f * c.covariance * f.transpose()).trace());
    let same = kalman_predict(&c, &StateMatrix::identity(), &StateMatrix::zeros());
    assert_eq!(same, c);
}

// closed-form Bayes for a Gaussian prior observed linearly in Gaussian noise,
// computed in information form as an independent route
#[test]
fn linear_update_matches_information_form_posterior() {
    let prior = GaussianComponent::new(
        0.7,
        StateVector::new(10.0, -5.0, 1.0, 0.5),
        spd([25.0, 16.0, 2.0, 3.0], 1.5),
    );
    let model = LinearMeasurement::position(3.0);
    let z = ObsVector::new(13.0, -2.0);
    let (post, lik) = ekf_update(&prior, &z, &model).unwrap();

    let h = model.h;
    let r_inv = model.noise_covariance().try_inverse().unwrap();
    let p_inv = prior.covariance.try_inverse().unwrap();
    let info = p_inv + h.transpose() * r_inv * h;
    let cov = info.try_inverse().unwrap();
    let mean = cov * (p_inv * prior.mean + h.transpose() * r_inv * z);
    assert!((post.mean - mean).norm() < 1e-9);
    assert!((post.covariance - cov).norm() < 1e-9);

    let s: Matrix2<f64> = h * prior.covariance * h.transpose() + model.noise_covariance();
    let marginal = normal_pdf(&z, &(h * prior.mean), &s).unwrap();
    assert!((lik / (0.7 * marginal) - 1.0).abs() < 1e-12);
    assert_eq!(post.weight, prior.weight);
}

#[test]
fn zero_innovation_keeps_mean_and_contracts_covariance() {
    let prior = GaussianComponent::new(
        1.0,
        StateVector::new(200.0, 100.0, 1.0, -1.0),
        spd([40.0, 40.0, 2.0, 2.0], 0.5),
    );
    let sensor =
        hisp_core::sensor::RangeBearingSensor::new(benchmark_grid(), 6.2, 4.5e-3, 0.5).unwrap();
    let z = range_bearing(&prior.mean, &sensor.grid).unwrap().z;
    let (post, lik) = ekf_update(&prior, &z, &sensor).unwrap();
    assert!((post.mean - prior.mean).norm() < 1e-9);
    let pred = hisp_core::gaussian::PredictedObservation::new(&prior, &sensor).unwrap();
    let peak = normal_pdf(&Vector2::zeros(), &Vector2::zeros(), &pred.innovation_cov).unwrap();
    assert!((lik / peak - 1.0).abs() < 1e-12);
    let diff = prior.covariance - post.covariance;
    assert!(diff.symmetric_eigenvalues().iter().all(|&e| e > -1e-9));
}

#[test]
fn prune_examples() {
    let c = |w| GaussianComponent::new(w, StateVector::zeros(), StateMatrix::identity());
    let m = GaussianMixture::new(vec![c(0.5), c(1e-6)]);
    let (kept, removed) = prune(&m, 1e-5);
    assert_eq!(kept.len(), 1);
    assert!((removed - 1e-6).abs() < 1e-18);
    assert_eq!(prune(&m, 0.0).0, m);
    let heavy = GaussianMixture::new(vec![c(0.3), c(0.4)]);
    assert_eq!(prune(&heavy, 1e-5).0, heavy);
}

#[test]
fn merge_examples() {
    let a = GaussianComponent::new(
        0.3,
        StateVector::new(1.0, 2.0, 0.0, 0.0),
        StateMatrix::identity(),
    );
    let twice = merge(&GaussianMixture::new(vec![a.clone(), a.clone()]), 4.0);
    assert_eq!(twice.len(), 1);
    assert!((twice.components[0].weight - 0.6).abs() < 1e-15);
    assert!((twice.components[0].mean - a.mean).norm() < 1e-12);
    assert!((twice.components[0].covariance - a.covariance).norm() < 1e-12);

    let mut far = a.clone();
    far.mean[0] += 100.0;
    let apart = merge(&GaussianMixture::new(vec![a, far]), 4.0);
    assert_eq!(apart.len(), 2);
}

fn state() -> impl Strategy<Value = StateVector> {
    (
        60.0..480.0f64,
        -std::f64::consts::PI..std::f64::consts::PI,
        -3.0..3.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(r, t, vx, vy)| StateVector::new(r * t.cos(), r * t.sin(), vx, vy))
}

fn component() -> impl Strategy<Value = GaussianComponent> {
    (
        0.0..1.0f64,
        state(),
        1.0..50.0f64,
        0.1..3.0f64,
        -0.5..0.5f64,
    )
        .prop_map(|(w, m, sp, sv, rho)| {
            let mut cov = StateMatrix::from_diagonal(&StateVector::new(sp, sp, sv, sv));
            let off = rho * (sp * sv).sqrt();
            cov[(0, 2)] = off;
            cov[(2, 0)] = off;
            GaussianComponent::new(w, m, cov)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn jacobian_matches_central_differences(x in state()) {
        let grid = benchmark_grid();
        let j = range_bearing(&x, &grid).unwrap().jacobian;
        for col in 0..4 {
            let h = 1e-4 * x[col].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[col] += h;
            xm[col] -= h;
            let zp = range_bearing(&xp, &grid).unwrap().z;
            let zm = range_bearing(&xm, &grid).unwrap().z;
            for row in 0..2 {
                let fd = (zp[row] - zm[row]) / (2.0 * h);
                let scale = j.row(row).amax().max(1e-12);
                prop_assert!((fd - j[(row, col)]).abs() / scale < 1e-6);
            }
        }
    }

    #[test]
    fn merge_preserves_total_weight(comps in prop::collection::vec(component(), 0..12), threshold in 0.0..50.0f64) {
        let m = GaussianMixture::new(comps);
        let merged = merge(&m, threshold);
        let (a, b) = (m.total_weight(), merged.total_weight());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        prop_assert!(merged.len() <= m.len());
        for c in &merged.components {
            prop_assert!(c.check_spd().is_ok());
        }
    }

    #[test]
    fn prediction_never_loses_uncertainty(c in component()) {
        let m = MotionModel::constant_velocity(4.0, 0.05, 1.0).unwrap();
        let p = kalman_predict(&c, &m.transition, &m.process_noise);
        let f = &m.transition;
        prop_assert!(p.covariance.trace() + 1e-9 >= (f * c.covariance * f.transpose()).trace());
        prop_assert_eq!(p.weight, c.weight);
    }
}
