//! Gaussian component algebra.
//!
//! Density evaluation, linear prediction, first-order (extended) Kalman
//! updates and the prune/merge reduction used on every mixture in the crate.
//! States are `[x, y, vx, vy]` in metres and metres per second; observations
//! are two-dimensional.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, SMatrix, SVector, Vector2, Vector4};

use crate::error::{HispError, Result};

pub type StateVector = Vector4<f64>;
pub type StateMatrix = Matrix4<f64>;
pub type ObsVector = Vector2<f64>;
pub type ObsMatrix = Matrix2<f64>;
pub type ObsJacobian = Matrix2x4<f64>;

/// Relative tolerance used when checking covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Log-density of `N(x; mean, cov)` for any fixed dimension.
pub fn log_normal_pdf<const D: usize>(
    x: &SVector<f64, D>,
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> Result<f64> {
    let chol = cov
        .cholesky()
        .ok_or_else(|| HispError::NumericDomain("covariance is not positive definite".into()))?;
    let diff = x - mean;
    let solved = chol.solve(&diff);
    let maha = diff.dot(&solved);
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (maha + log_det + D as f64 * (2.0 * PI).ln()))
}

pub fn normal_pdf<const D: usize>(
    x: &SVector<f64, D>,
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> Result<f64> {
    log_normal_pdf(x, mean, cov).map(f64::exp)
}

pub fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// A weighted Gaussian over the four-dimensional kinematic state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: StateVector, covariance: StateMatrix) -> Self {
        Self {
            weight,
            mean,
            covariance,
        }
    }

    /// `weight × N(point; mean, covariance)`.
    pub fn eval(&self, point: &StateVector) -> Result<f64> {
        if self.weight == 0.0 {
            // still reject a broken covariance
            self.check_spd()?;
            return Ok(0.0);
        }
        Ok(self.weight * normal_pdf(point, &self.mean, &self.covariance)?)
    }

    pub fn check_spd(&self) -> Result<()> {
        let c = &self.covariance;
        let scale = c.abs().max().max(f64::MIN_POSITIVE);
        if (c - c.transpose()).abs().max() > SYMMETRY_TOL * scale {
            return Err(HispError::NumericDomain(
                "covariance is not symmetric".into(),
            ));
        }
        if c.cholesky().is_none() {
            return Err(HispError::NumericDomain(
                "covariance is not positive definite".into(),
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weight: self.weight * factor,
            ..self.clone()
        }
    }

    /// Squared Mahalanobis distance of `point` in this component's metric.
    pub fn mahalanobis2(&self, point: &StateVector) -> Option<f64> {
        let chol = self.covariance.cholesky()?;
        let d = point - self.mean;
        Some(d.dot(&chol.solve(&d)))
    }
}

/// Linear prediction: `mean' = F mean`, `cov' = F cov Fᵀ + Q`.
pub fn kalman_predict(
    component: &GaussianComponent,
    transition: &StateMatrix,
    process_noise: &StateMatrix,
) -> GaussianComponent {
    let mean = transition * component.mean;
    let cov = transition * component.covariance * transition.transpose() + process_noise;
    GaussianComponent {
        weight: component.weight,
        mean,
        covariance: symmetrize(&cov),
    }
}

/// Observation function, its Jacobian and noise.
pub trait MeasurementModel {
    /// `h(state)` and the Jacobian of `h` evaluated at `state`.
    fn observe(&self, state: &StateVector) -> Result<(ObsVector, ObsJacobian)>;

    fn noise_covariance(&self) -> ObsMatrix;

    /// Innovation `z − ẑ`; angular models override this to wrap.
    fn residual(&self, z: &ObsVector, predicted: &ObsVector) -> ObsVector {
        z - predicted
    }
}

/// `z = H x + v` with constant `H` and `R`.
#[derive(Debug, Clone)]
pub struct LinearMeasurement {
    pub h: ObsJacobian,
    pub r: ObsMatrix,
}

impl LinearMeasurement {
    /// Observes the position components directly.
    pub fn position(sigma: f64) -> Self {
        let mut h = ObsJacobian::zeros();
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.0;
        Self {
            h,
            r: ObsMatrix::identity() * sigma * sigma,
        }
    }
}

impl MeasurementModel for LinearMeasurement {
    fn observe(&self, state: &StateVector) -> Result<(ObsVector, ObsJacobian)> {
        Ok((self.h * state, self.h))
    }

    fn noise_covariance(&self) -> ObsMatrix {
        self.r
    }
}

/// Measurement-space prediction of one component, reusable across many
/// candidate observations (gating, then update).
#[derive(Debug, Clone)]
pub struct PredictedObservation {
    pub predicted: ObsVector,
    pub jacobian: ObsJacobian,
    pub innovation_cov: ObsMatrix,
    innovation_inv: ObsMatrix,
    log_norm: f64,
}

impl PredictedObservation {
    pub fn new<M: MeasurementModel + ?Sized>(
        component: &GaussianComponent,
        model: &M,
    ) -> Result<Self> {
        let (predicted, jacobian) = model.observe(&component.mean)?;
        let s = symmetrize(
            &(jacobian * component.covariance * jacobian.transpose() + model.noise_covariance()),
        );
        let chol = s
            .cholesky()
            .ok_or_else(|| HispError::NumericDomain("innovation covariance is singular".into()))?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            predicted,
            jacobian,
            innovation_cov: s,
            innovation_inv: chol.inverse(),
            log_norm: -0.5 * (log_det + 2.0 * (2.0 * PI).ln()),
        })
    }

    /// Squared Mahalanobis distance of a residual.
    pub fn mahalanobis2(&self, residual: &ObsVector) -> f64 {
        residual.dot(&(self.innovation_inv * residual))
    }

    /// `ln N(residual; 0, S)`.
    pub fn log_density(&self, residual: &ObsVector) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis2(residual)
    }

    /// Posterior component for a given residual (weight untouched).
    pub fn update(
        &self,
        component: &GaussianComponent,
        residual: &ObsVector,
        noise: &ObsMatrix,
    ) -> GaussianComponent {
        let pht = component.covariance * self.jacobian.transpose();
        let gain = pht * self.innovation_inv;
        let mean = component.mean + gain * residual;
        // Joseph form keeps the result PSD
        let ikh = StateMatrix::identity() - gain * self.jacobian;
        let cov = ikh * component.covariance * ikh.transpose() + gain * noise * gain.transpose();
        GaussianComponent {
            weight: component.weight,
            mean,
            covariance: symmetrize(&cov),
        }
    }
}

/// First-order EKF update. Returns the updated component (weight unchanged)
/// and `weight × N(z; h(mean), S)`.
pub fn ekf_update<M: MeasurementModel + ?Sized>(
    component: &GaussianComponent,
    z: &ObsVector,
    model: &M,
) -> Result<(GaussianComponent, f64)> {
    let pred = PredictedObservation::new(component, model)?;
    let residual = model.residual(z, &pred.predicted);
    let likelihood = component.weight * pred.log_density(&residual).exp();
    let updated = pred.update(component, &residual, &model.noise_covariance());
    Ok((updated, likelihood))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(component: GaussianComponent) -> Self {
        Self {
            components: vec![component],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for c in &mut self.components {
            c.weight *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// Rescales so the weights sum to `target`; no-op on zero mass.
    pub fn normalized_to(&self, target: f64) -> Self {
        let total = self.total_weight();
        if total > 0.0 {
            self.scaled(target / total)
        } else {
            self.clone()
        }
    }

    pub fn dominant(&self) -> Option<&GaussianComponent> {
        self.components
            .iter()
            .max_by(|a, b| a.weight.total_cmp(&b.weight))
    }

    pub fn eval(&self, point: &StateVector) -> Result<f64> {
        self.components.iter().map(|c| c.eval(point)).sum()
    }

    pub fn predict(&self, transition: &StateMatrix, process_noise: &StateMatrix) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| kalman_predict(c, transition, process_noise))
                .collect(),
        }
    }

    /// Keeps the `max` heaviest components.
    pub fn truncate(&mut self, max: usize) {
        if self.components.len() > max {
            self.components
                .sort_by(|a, b| b.weight.total_cmp(&a.weight));
            self.components.truncate(max);
        }
    }
}

/// Removes components with weight strictly below `threshold`. Returns the
/// reduced mixture and the total weight removed.
pub fn prune(mixture: &GaussianMixture, threshold: f64) -> (GaussianMixture, f64) {
    let mut removed = 0.0;
    let components = mixture
        .components
        .iter()
        .filter(|c| {
            if c.weight < threshold {
                removed += c.weight;
                false
            } else {
                true
            }
        })
        .cloned()
        .collect();
    (GaussianMixture { components }, removed)
}

/// Moment-matched combination of a set of components.
pub fn moment_match(components: &[&GaussianComponent]) -> Option<GaussianComponent> {
    if components.is_empty() {
        return None;
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    let n = components.len() as f64;
    let coef = |c: &GaussianComponent| {
        if total > 0.0 {
            c.weight / total
        } else {
            1.0 / n
        }
    };
    let mean = components
        .iter()
        .fold(StateVector::zeros(), |acc, c| acc + c.mean * coef(c));
    let cov = components.iter().fold(StateMatrix::zeros(), |acc, c| {
        let d = c.mean - mean;
        acc + (c.covariance + d * d.transpose()) * coef(c)
    });
    Some(GaussianComponent {
        weight: total,
        mean,
        covariance: symmetrize(&cov),
    })
}

/// Greedy reduction: repeatedly take the heaviest remaining component and
/// absorb every component whose mean lies within squared Mahalanobis
/// distance `threshold` of it, measured with the heaviest component's
/// covariance.
pub fn merge(mixture: &GaussianMixture, threshold: f64) -> GaussianMixture {
    let mut remaining: Vec<&GaussianComponent> = mixture.components.iter().collect();
    remaining.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    let mut out = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let leader = remaining[0];
        let chol = leader.covariance.cholesky();
        let (group, rest): (Vec<_>, Vec<_>) =
            remaining.into_iter().enumerate().partition(|(i, c)| {
                if *i == 0 {
                    return true;
                }
                let d = c.mean - leader.mean;
                match &chol {
                    Some(ch) => d.dot(&ch.solve(&d)) <= threshold,
                    None => d.norm() == 0.0,
                }
            });
        let group: Vec<&GaussianComponent> = group.into_iter().map(|(_, c)| c).collect();
        if group.len() == 1 {
            out.push(group[0].clone());
        } else if let Some(merged) = moment_match(&group) {
            out.push(merged);
        }
        remaining = rest.into_iter().map(|(_, c)| c).collect();
    }
    GaussianMixture { components: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{SMatrix, SVector};

    fn unit(mean: StateVector) -> GaussianComponent {
        GaussianComponent::new(1.0, mean, StateMatrix::identity())
    }

    #[test]
    fn standard_normal_peak() {
        let v = normal_pdf(
            &SVector::<f64, 1>::new(0.0),
            &SVector::<f64, 1>::new(0.0),
            &SMatrix::<f64, 1, 1>::new(1.0),
        )
        .unwrap();
        assert!((v - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_evaluates_to_zero() {
        let c = GaussianComponent::new(0.0, StateVector::zeros(), StateMatrix::identity());
        assert_eq!(c.eval(&StateVector::new(3.0, 1.0, 0.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn four_dim_identity_factorises() {
        let m = StateVector::new(1.0, -2.0, 0.5, 3.0);
        let off = StateVector::new(0.3, -1.1, 2.0, 0.0);
        let c = unit(m);
        let v = c.eval(&(m + off)).unwrap();
        let per_axis: f64 = off
            .iter()
            .map(|o| (-0.5 * o * o).exp() / (2.0 * PI).sqrt())
            .product();
        assert!((v - per_axis).abs() <= 1e-14 * per_axis);
    }

    #[test]
    fn non_spd_covariance_rejected() {
        let mut cov = StateMatrix::identity();
        cov[(2, 2)] = -1.0;
        let c = GaussianComponent::new(1.0, StateVector::zeros(), cov);
        assert!(matches!(
            c.eval(&StateVector::zeros()),
            Err(HispError::NumericDomain(_))
        ));
        assert!(c.check_spd().is_err());
    }

    #[test]
    fn identity_prediction_is_noop() {
        let c = GaussianComponent::new(
            0.4,
            StateVector::new(1.0, 2.0, 3.0, 4.0),
            StateMatrix::identity() * 2.0,
        );
        let p = kalman_predict(&c, &StateMatrix::identity(), &StateMatrix::zeros());
        assert_eq!(p, c);
    }

    #[test]
    fn constant_velocity_prediction() {
        let mut f = StateMatrix::identity();
        f[(0, 2)] = 4.0;
        f[(1, 3)] = 4.0;
        let c = GaussianComponent::new(
            1.0,
            StateVector::new(0.0, 0.0, 1.0, 1.1),
            StateMatrix::identity(),
        );
        let p = kalman_predict(&c, &f, &StateMatrix::zeros());
        assert!((p.mean[0] - 4.0).abs() < 1e-12);
        assert!((p.mean[1] - 4.4).abs() < 1e-12);
    }

    #[test]
    fn zero_innovation_update() {
        let c = GaussianComponent::new(
            0.7,
            StateVector::new(10.0, -5.0, 1.0, 0.0),
            StateMatrix::identity() * 4.0,
        );
        let model = LinearMeasurement::position(2.0);
        let z = ObsVector::new(10.0, -5.0);
        let (u, lik) = ekf_update(&c, &z, &model).unwrap();
        assert!((u.mean - c.mean).norm() < 1e-12);
        let s = ObsMatrix::identity() * 8.0;
        let expected = 0.7 / (2.0 * PI * s.determinant().sqrt());
        assert!((lik - expected).abs() < 1e-14);
    }

    #[test]
    fn prune_examples() {
        let mk = |w| GaussianComponent::new(w, StateVector::zeros(), StateMatrix::identity());
        let m = GaussianMixture::new(vec![mk(0.5), mk(1e-6)]);
        let (p, removed) = prune(&m, 1e-5);
        assert_eq!(p.len(), 1);
        assert_eq!(removed, 1e-6);
        let (p0, r0) = prune(&m, 0.0);
        assert_eq!(p0, m);
        assert_eq!(r0, 0.0);
        let (p1, _) = prune(&m, 1e-7);
        assert_eq!(p1, m);
    }

    #[test]
    fn merge_identical_components() {
        let c = GaussianComponent::new(
            0.3,
            StateVector::new(1.0, 1.0, 0.0, 0.0),
            StateMatrix::identity(),
        );
        let m = GaussianMixture::new(vec![c.clone(), c.clone()]);
        let out = merge(&m, 4.0);
        assert_eq!(out.len(), 1);
        assert!((out.components[0].weight - 0.6).abs() < 1e-15);
        assert!((out.components[0].mean - c.mean).norm() < 1e-15);
        assert!((out.components[0].covariance - c.covariance).norm() < 1e-15);
    }

    #[test]
    fn merge_far_components_untouched() {
        let m = GaussianMixture::new(vec![
            GaussianComponent::new(0.5, StateVector::zeros(), StateMatrix::identity()),
            GaussianComponent::new(
                0.4,
                StateVector::new(10.0, 0.0, 0.0, 0.0),
                StateMatrix::identity(),
            ),
        ]);
        let out = merge(&m, 4.0);
        assert_eq!(out.len(), 2);
    }
}
