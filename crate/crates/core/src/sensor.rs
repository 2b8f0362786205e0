//! Motion, range-bearing observation, birth and clutter models.
//!
//! The sensor sits at the origin. Observation space is partitioned into
//! polar resolution cells; birth and false alarms are both modelled per
//! cell.

use std::f64::consts::PI;

use crate::error::{HispError, Result};
use crate::gaussian::{
    GaussianComponent, GaussianMixture, MeasurementModel, ObsJacobian, ObsMatrix, ObsVector,
    StateMatrix, StateVector,
};
use crate::hypothesis::ExtendedLaw;

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Constant-velocity motion with discrete white-noise acceleration.
#[derive(Debug, Clone)]
pub struct MotionModel {
    pub dt: f64,
    pub q_var: f64,
    pub p_survival: f64,
    pub transition: StateMatrix,
    pub process_noise: StateMatrix,
}

impl MotionModel {
    pub fn constant_velocity(dt: f64, q_var: f64, p_survival: f64) -> Result<Self> {
        if !(dt > 0.0) || !(q_var >= 0.0) || !(0.0..=1.0).contains(&p_survival) {
            return Err(HispError::Config(format!(
                "motion model needs dt > 0, q_var >= 0, p_s in [0,1] (got {dt}, {q_var}, {p_survival})"
            )));
        }
        let mut f = StateMatrix::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        let (a, b, c) = (dt.powi(4) / 4.0, dt.powi(3) / 2.0, dt * dt);
        let mut q = StateMatrix::zeros();
        for (p, v) in [(0, 2), (1, 3)] {
            q[(p, p)] = a;
            q[(p, v)] = b;
            q[(v, p)] = b;
            q[(v, v)] = c;
        }
        Ok(Self {
            dt,
            q_var,
            p_survival,
            transition: f,
            process_noise: q * q_var,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub range: u32,
    pub bearing: u32,
}

/// Polar resolution-cell grid over `[r_min, r_max] × (−π, π]`.
#[derive(Debug, Clone)]
pub struct SensorGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub cell_dr: f64,
    pub cell_dtheta: f64,
    pub n_range: u32,
    pub n_bearing: u32,
}

fn integral_count(span: f64, step: f64, what: &str) -> Result<u32> {
    let n = span / step;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-6 * rounded {
        return Err(HispError::Config(format!(
            "{what}: span {span} is not an integer number of cells of size {step}"
        )));
    }
    Ok(rounded as u32)
}

impl SensorGrid {
    pub fn new(r_min: f64, r_max: f64, cell_dr: f64, cell_dtheta: f64) -> Result<Self> {
        if !(r_min >= 0.0 && r_max > r_min && cell_dr > 0.0 && cell_dtheta > 0.0) {
            return Err(HispError::Config("invalid sensor grid bounds".into()));
        }
        Ok(Self {
            r_min,
            r_max,
            cell_dr,
            cell_dtheta,
            n_range: integral_count(r_max - r_min, cell_dr, "range")?,
            n_bearing: integral_count(2.0 * PI, cell_dtheta, "bearing")?,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.n_range as usize * self.n_bearing as usize
    }

    pub fn contains_range(&self, r: f64) -> bool {
        r >= self.r_min && r <= self.r_max
    }

    pub fn cell_of(&self, z: &ObsVector) -> Result<CellId> {
        let (r, theta) = (z[0], z[1]);
        if !self.contains_range(r) || !theta.is_finite() {
            return Err(HispError::OutOfBounds {
                range: r,
                bearing: theta,
            });
        }
        let theta = wrap_angle(theta);
        let i = (((r - self.r_min) / self.cell_dr).floor() as u32).min(self.n_range - 1);
        let j = (((theta + PI) / self.cell_dtheta).floor() as u32).min(self.n_bearing - 1);
        Ok(CellId {
            range: i,
            bearing: j,
        })
    }

    /// `(r0, r1, θ0, θ1)` of a cell.
    pub fn cell_bounds(&self, cell: CellId) -> (f64, f64, f64, f64) {
        let r0 = self.r_min + cell.range as f64 * self.cell_dr;
        let t0 = -PI + cell.bearing as f64 * self.cell_dtheta;
        (r0, r0 + self.cell_dr, t0, t0 + self.cell_dtheta)
    }

    /// Representative point of the cell (its centre in range and bearing).
    pub fn cell_center(&self, cell: CellId) -> ObsVector {
        let (r0, r1, t0, t1) = self.cell_bounds(cell);
        ObsVector::new(0.5 * (r0 + r1), wrap_angle(0.5 * (t0 + t1)))
    }

    /// Cartesian area of the cell in m².
    pub fn cell_area(&self, cell: CellId) -> f64 {
        let (r0, r1, _, _) = self.cell_bounds(cell);
        0.5 * (r1 * r1 - r0 * r0) * self.cell_dtheta
    }

    /// Volume of a cell in observation space (m·rad).
    pub fn cell_volume(&self) -> f64 {
        self.cell_dr * self.cell_dtheta
    }

    pub fn surveillance_area(&self) -> f64 {
        PI * (self.r_max * self.r_max - self.r_min * self.r_min)
    }

    pub fn cell_from_index(&self, index: usize) -> CellId {
        CellId {
            range: (index / self.n_bearing as usize) as u32,
            bearing: (index % self.n_bearing as usize) as u32,
        }
    }

    /// Mean and covariance of a point uniformly distributed (by area) over
    /// the cell, in Cartesian coordinates.
    pub fn cell_position_moments(
        &self,
        cell: CellId,
    ) -> (nalgebra::Vector2<f64>, nalgebra::Matrix2<f64>) {
        let (r0, r1, t0, t1) = self.cell_bounds(cell);
        let area = 0.5 * (r1 * r1 - r0 * r0) * (t1 - t0);
        let r3 = (r1.powi(3) - r0.powi(3)) / 3.0;
        let r4 = (r1.powi(4) - r0.powi(4)) / 4.0;
        let ex = r3 * (t1.sin() - t0.sin()) / area;
        let ey = r3 * (t0.cos() - t1.cos()) / area;
        let s2 = ((2.0 * t1).sin() - (2.0 * t0).sin()) / 4.0;
        let exx = r4 * (0.5 * (t1 - t0) + s2) / area;
        let eyy = r4 * (0.5 * (t1 - t0) - s2) / area;
        let exy = r4 * 0.5 * (t1.sin().powi(2) - t0.sin().powi(2)) / area;
        let mean = nalgebra::Vector2::new(ex, ey);
        let cxy = exy - ex * ey;
        let cov = nalgebra::Matrix2::new(exx - ex * ex, cxy, cxy, eyy - ey * ey);
        (mean, cov)
    }
}

/// Result of the range-bearing map at one state.
#[derive(Debug, Clone)]
pub struct RangeBearing {
    pub z: ObsVector,
    pub jacobian: ObsJacobian,
    /// False when the range falls outside `[r_min, r_max]`.
    pub in_region: bool,
}

/// `(r, θ) = (√(x²+y²), atan2(y, x))` with its analytic Jacobian.
pub fn range_bearing(state: &StateVector, grid: &SensorGrid) -> Result<RangeBearing> {
    let (x, y) = (state[0], state[1]);
    let r2 = x * x + y * y;
    if !(r2 > 0.0) {
        return Err(HispError::NumericDomain(
            "range-bearing map undefined at the sensor position".into(),
        ));
    }
    let r = r2.sqrt();
    let mut jac = ObsJacobian::zeros();
    jac[(0, 0)] = x / r;
    jac[(0, 1)] = y / r;
    jac[(1, 0)] = -y / r2;
    jac[(1, 1)] = x / r2;
    Ok(RangeBearing {
        z: ObsVector::new(r, y.atan2(x)),
        jacobian: jac,
        in_region: grid.contains_range(r),
    })
}

/// Range-bearing sensor with constant detection probability inside its
/// region.
#[derive(Debug, Clone)]
pub struct RangeBearingSensor {
    pub grid: SensorGrid,
    pub sigma_r: f64,
    pub sigma_theta: f64,
    pub p_detect: f64,
}

impl RangeBearingSensor {
    pub fn new(grid: SensorGrid, sigma_r: f64, sigma_theta: f64, p_detect: f64) -> Result<Self> {
        if !(sigma_r > 0.0 && sigma_theta > 0.0) || !(0.0..=1.0).contains(&p_detect) {
            return Err(HispError::Config(format!(
                "sensor needs sigma_r, sigma_theta > 0 and p_d in [0,1] (got {sigma_r}, {sigma_theta}, {p_detect})"
            )));
        }
        Ok(Self {
            grid,
            sigma_r,
            sigma_theta,
            p_detect,
        })
    }

    /// Detection probability at a state; zero outside the surveillance region.
    pub fn detection_probability(&self, state: &StateVector) -> f64 {
        let r = (state[0] * state[0] + state[1] * state[1]).sqrt();
        if self.grid.contains_range(r) {
            self.p_detect
        } else {
            0.0
        }
    }

    /// Factor turning an observation-space density into the probability of
    /// an observation in one resolution cell.
    pub fn likelihood_volume(&self) -> f64 {
        self.grid.cell_volume()
    }
}

impl MeasurementModel for RangeBearingSensor {
    fn observe(&self, state: &StateVector) -> Result<(ObsVector, ObsJacobian)> {
        let rb = range_bearing(state, &self.grid)?;
        Ok((rb.z, rb.jacobian))
    }

    fn noise_covariance(&self) -> ObsMatrix {
        ObsMatrix::new(
            self.sigma_r * self.sigma_r,
            0.0,
            0.0,
            self.sigma_theta * self.sigma_theta,
        )
    }

    fn residual(&self, z: &ObsVector, predicted: &ObsVector) -> ObsVector {
        ObsVector::new(z[0] - predicted[0], wrap_angle(z[1] - predicted[1]))
    }
}

/// Births, uniform over the state space with intensity `p_b` per m².
#[derive(Debug, Clone)]
pub struct BirthModel {
    pub p_b: f64,
    pub sigma_v: f64,
}

impl BirthModel {
    pub fn new(p_b: f64, sigma_v: f64) -> Result<Self> {
        if !(p_b >= 0.0) || !(sigma_v > 0.0) {
            return Err(HispError::Config(
                "birth model needs p_b >= 0 and sigma_v > 0".into(),
            ));
        }
        Ok(Self { p_b, sigma_v })
    }

    /// Probability of one newborn in the cell.
    pub fn cell_probability(&self, grid: &SensorGrid, cell: CellId) -> f64 {
        (self.p_b * grid.cell_area(cell)).clamp(0.0, 1.0)
    }

    /// Gaussian moment-matched to the cell of `z` (position) with a
    /// zero-mean velocity prior, carrying weight `weight`.
    pub fn cell_gaussian(&self, grid: &SensorGrid, cell: CellId, weight: f64) -> GaussianComponent {
        let (m, c) = grid.cell_position_moments(cell);
        let mut cov = StateMatrix::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&c);
        let vv = self.sigma_v * self.sigma_v;
        cov[(2, 2)] = vv;
        cov[(3, 3)] = vv;
        GaussianComponent::new(weight, StateVector::new(m[0], m[1], 0.0, 0.0), cov)
    }

    /// Prior law of the newborn representation induced by `z`.
    pub fn birth_law_for(&self, grid: &SensorGrid, z: &ObsVector) -> Result<ExtendedLaw> {
        let cell = grid.cell_of(z)?;
        let beta = self.cell_probability(grid, cell);
        Ok(ExtendedLaw {
            mass_phi: 1.0 - beta,
            mass_psi: 0.0,
            alive: GaussianMixture::single(self.cell_gaussian(grid, cell, beta)),
        })
    }
}

/// Per-cell false alarms.
#[derive(Debug, Clone)]
pub struct ClutterModel {
    pub p_fa: f64,
}

impl ClutterModel {
    pub fn new(p_fa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_fa) {
            return Err(HispError::Config(format!(
                "p_fa must lie in [0,1] (got {p_fa})"
            )));
        }
        Ok(Self { p_fa })
    }

    /// False-alarm probability of the cell holding `z`.
    pub fn clutter_terms(&self, _z: &ObsVector) -> f64 {
        self.p_fa
    }

    pub fn expected_count(&self, grid: &SensorGrid) -> f64 {
        self.p_fa * grid.cell_count() as f64
    }
}

/// Everything the filters need to know about the world.
#[derive(Debug, Clone)]
pub struct Models {
    pub motion: MotionModel,
    pub sensor: RangeBearingSensor,
    pub birth: BirthModel,
    pub clutter: ClutterModel,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benchmark_grid() -> SensorGrid {
        SensorGrid::new(50.0, 500.0, 15.0, PI / 180.0).unwrap()
    }

    #[test]
    fn grid_dimensions() {
        let g = benchmark_grid();
        assert_eq!((g.n_range, g.n_bearing), (30, 360));
        assert_eq!(g.cell_count(), 10800);
        assert!(SensorGrid::new(50.0, 500.0, 14.0, PI / 180.0).is_err());
    }

    #[test]
    fn cell_of_corners_and_bounds() {
        let g = benchmark_grid();
        let c = g.cell_of(&ObsVector::new(50.0, -PI + 1e-9)).unwrap();
        assert_eq!(
            c,
            CellId {
                range: 0,
                bearing: 0
            }
        );
        let top = g.cell_of(&ObsVector::new(500.0, PI)).unwrap();
        assert_eq!(
            top,
            CellId {
                range: 29,
                bearing: 359
            }
        );
        assert!(matches!(
            g.cell_of(&ObsVector::new(49.0, 0.0)),
            Err(HispError::OutOfBounds { .. })
        ));
        assert!(g.cell_of(&ObsVector::new(500.1, 0.0)).is_err());
        let a = g.cell_of(&ObsVector::new(201.0, 0.1001)).unwrap();
        let b = g.cell_of(&ObsVector::new(203.0, 0.1003)).unwrap();
        assert_eq!(a, b);
        let centre = g.cell_center(a);
        assert_eq!(g.cell_of(&centre).unwrap(), a);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(-PI - 0.1) - (PI - 0.1)).abs() < 1e-12);
        assert!((wrap_angle(0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn range_bearing_on_axes() {
        let g = benchmark_grid();
        let rb = range_bearing(&StateVector::new(100.0, 0.0, 1.0, 2.0), &g).unwrap();
        assert!((rb.z - ObsVector::new(100.0, 0.0)).norm() < 1e-12);
        assert!(rb.in_region);
        let rb = range_bearing(&StateVector::new(0.0, 200.0, 0.0, 0.0), &g).unwrap();
        assert!((rb.z - ObsVector::new(200.0, PI / 2.0)).norm() < 1e-12);
        let rb = range_bearing(&StateVector::new(0.0, 20.0, 0.0, 0.0), &g).unwrap();
        assert!(!rb.in_region);
        assert!(range_bearing(&StateVector::zeros(), &g).is_err());
    }

    #[test]
    fn birth_law_masses() {
        let g = benchmark_grid();
        let b = BirthModel::new(1e-6, 1.5).unwrap();
        let law = b.birth_law_for(&g, &ObsVector::new(275.0, 0.4)).unwrap();
        assert_eq!(law.mass_psi, 0.0);
        assert!((law.total_mass() - 1.0).abs() < 1e-15);
        let beta = law.alive.total_weight();
        // cell [275, 290] m, centre 282.5 m
        let expected = 1e-6 * 282.5 * 15.0 * PI / 180.0;
        assert!((beta - expected).abs() < 1e-12 * expected);
        assert!((beta - 7.2e-5).abs() / 7.2e-5 < 0.05);
    }

    #[test]
    fn birth_mean_projects_into_cell() {
        let g = benchmark_grid();
        let b = BirthModel::new(1e-6, 1.5).unwrap();
        for &(r, t) in &[(60.0, -3.1), (275.0, 0.4), (499.0, 2.0), (120.0, PI)] {
            let z = ObsVector::new(r, t);
            let cell = g.cell_of(&z).unwrap();
            let law = b.birth_law_for(&g, &z).unwrap();
            let m = law.alive.components[0].mean;
            let zb = range_bearing(&m, &g).unwrap().z;
            let centre = g.cell_center(cell);
            assert!((zb[0] - centre[0]).abs() <= 0.5 * g.cell_dr);
            assert!(wrap_angle(zb[1] - centre[1]).abs() <= 0.5 * g.cell_dtheta);
        }
    }

    #[test]
    fn clutter_expected_counts() {
        let g = benchmark_grid();
        for (p, mu) in [(1.34e-3, 15.0), (1.54e-2, 167.0), (7.67e-3, 83.0)] {
            let c = ClutterModel::new(p).unwrap();
            assert_eq!(c.clutter_terms(&ObsVector::new(100.0, 0.0)), p);
            let n = c.expected_count(&g);
            assert!((n - mu).abs() / mu < 0.05, "{n} vs {mu}");
        }
        assert!(ClutterModel::new(1.5).is_err());
    }

    #[test]
    fn process_noise_is_psd() {
        let m = MotionModel::constant_velocity(4.0, 0.05, 1.0).unwrap();
        let eig = m.process_noise.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-12));
        assert!(MotionModel::constant_velocity(4.0, 0.05, 1.2).is_err());
    }
}
