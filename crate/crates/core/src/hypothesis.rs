//! Potential individuals and their laws on the extended state space.
//!
//! A law puts mass on three places: the non-existence point (the potential
//! individual was never part of the population), the disappeared point
//! (it existed but left the state space) and the state space itself, where
//! it is a Gaussian mixture.

use std::fmt;

use crate::error::{HispError, Result};
use crate::gaussian::GaussianMixture;

/// Absolute tolerance on the unit-mass invariant of [`ExtendedLaw`].
pub const MASS_TOL: f64 = 1e-9;

/// Identifies one observation: the scan it arrived in and its index there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObsId {
    pub step: u32,
    pub index: u32,
}

impl fmt::Display for ObsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.step, self.index)
    }
}

/// Per-scan association record; `None` is the empty observation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ObservationPath(Vec<Option<ObsId>>);

impl ObservationPath {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// The never-detected path of the given length.
    pub fn all_empty(len: usize) -> Self {
        Self(vec![None; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Option<ObsId>] {
        &self.0
    }

    pub fn extended(&self, entry: Option<ObsId>) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(entry);
        Self(v)
    }

    pub fn last(&self) -> Option<Option<ObsId>> {
        self.0.last().copied()
    }

    pub fn is_never_detected(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }
}

impl fmt::Display for ObservationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match e {
                Some(id) => write!(f, "{id}")?,
                None => write!(f, "-")?,
            }
        }
        write!(f, ")")
    }
}

/// Existence interval `[birth, until]` in scan indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub birth: u32,
    pub until: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndividualKind {
    Propagated,
    Birth(ObsId),
    Clutter(ObsId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialIndividual {
    /// `None` is the empty interval (clutter representations).
    pub interval: Option<Interval>,
    pub path: ObservationPath,
    pub kind: IndividualKind,
}

impl PotentialIndividual {
    /// The representation present before any observation: `({0}, ())`.
    pub fn initial() -> Self {
        Self {
            interval: Some(Interval { birth: 0, until: 0 }),
            path: ObservationPath::new(),
            kind: IndividualKind::Propagated,
        }
    }

    /// Newborn representation for observation `z` at scan `step`.
    pub fn birth(step: u32, z: ObsId) -> Self {
        Self {
            interval: Some(Interval {
                birth: step,
                until: step,
            }),
            path: ObservationPath::all_empty(step.saturating_sub(1) as usize).extended(Some(z)),
            kind: IndividualKind::Birth(z),
        }
    }

    /// False-alarm representation for observation `z` at scan `step`.
    pub fn clutter(step: u32, z: ObsId) -> Self {
        Self {
            interval: None,
            path: ObservationPath::all_empty(step.saturating_sub(1) as usize).extended(Some(z)),
            kind: IndividualKind::Clutter(z),
        }
    }
}

/// Probability law over `{non-existent, disappeared} ∪ X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedLaw {
    pub mass_phi: f64,
    pub mass_psi: f64,
    pub alive: GaussianMixture,
}

impl ExtendedLaw {
    pub fn new(mass_phi: f64, mass_psi: f64, alive: GaussianMixture) -> Result<Self> {
        let law = Self {
            mass_phi,
            mass_psi,
            alive,
        };
        law.validate()?;
        Ok(law)
    }

    /// All mass on the non-existence point.
    pub fn non_existent() -> Self {
        Self {
            mass_phi: 1.0,
            mass_psi: 0.0,
            alive: GaussianMixture::empty(),
        }
    }

    /// Builds a law whose alive part carries `alive.total_weight()` and puts
    /// the rest on the non-existence point.
    pub fn from_alive(alive: GaussianMixture) -> Self {
        let a = alive.total_weight();
        Self {
            mass_phi: (1.0 - a).max(0.0),
            mass_psi: 0.0,
            alive,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_phi + self.mass_psi + self.alive.total_weight()
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |m: f64| (-MASS_TOL..=1.0 + MASS_TOL).contains(&m);
        if !in_unit(self.mass_phi) || !in_unit(self.mass_psi) {
            return Err(HispError::NumericDomain(format!(
                "law masses out of [0,1]: phi={} psi={}",
                self.mass_phi, self.mass_psi
            )));
        }
        if self.alive.components.iter().any(|c| !(c.weight >= 0.0)) {
            return Err(HispError::NumericDomain("negative alive weight".into()));
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(HispError::NumericDomain(format!(
                "law does not sum to one (total {total})"
            )));
        }
        Ok(())
    }
}

/// Probability that the representation is an individual of the population
/// (disappeared or alive).
pub fn individual_probability(law: &ExtendedLaw) -> f64 {
    law.mass_psi + law.alive.total_weight()
}

/// Mass on the state space itself.
pub fn alive_probability(law: &ExtendedLaw) -> f64 {
    law.alive.total_weight()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub id: u64,
    pub individual: PotentialIndividual,
    pub law: ExtendedLaw,
    pub confirmed: bool,
}

impl Hypothesis {
    pub fn alive_probability(&self) -> f64 {
        alive_probability(&self.law)
    }
}

/// Confirmation with hysteresis: confirm above `tau_c`, keep confirmed
/// above `tau_uc`.
pub fn update_confirmation(hypothesis: &Hypothesis, tau_c: f64, tau_uc: f64) -> Hypothesis {
    let p = hypothesis.alive_probability();
    Hypothesis {
        confirmed: p >= tau_c || (hypothesis.confirmed && p >= tau_uc),
        ..hypothesis.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{GaussianComponent, StateMatrix, StateVector};

    fn alive(w: f64) -> GaussianMixture {
        if w == 0.0 {
            return GaussianMixture::empty();
        }
        GaussianMixture::single(GaussianComponent::new(
            w,
            StateVector::zeros(),
            StateMatrix::identity(),
        ))
    }

    fn hyp(p: f64, confirmed: bool) -> Hypothesis {
        Hypothesis {
            id: 0,
            individual: PotentialIndividual::initial(),
            law: ExtendedLaw::from_alive(alive(p)),
            confirmed,
        }
    }

    #[test]
    fn individual_probability_examples() {
        let l = ExtendedLaw::new(1.0, 0.0, alive(0.0)).unwrap();
        assert_eq!(individual_probability(&l), 0.0);
        let l = ExtendedLaw::new(0.0, 0.0, alive(1.0)).unwrap();
        assert_eq!(individual_probability(&l), 1.0);
        let l = ExtendedLaw::new(0.3, 0.1, alive(0.6)).unwrap();
        assert!((individual_probability(&l) - 0.7).abs() < 1e-15);
        assert!((individual_probability(&l) + l.mass_phi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alive_probability_examples() {
        assert_eq!(
            alive_probability(&ExtendedLaw::new(1.0, 0.0, alive(0.0)).unwrap()),
            0.0
        );
        assert_eq!(
            alive_probability(&ExtendedLaw::new(0.0, 1.0, alive(0.0)).unwrap()),
            0.0
        );
        assert_eq!(
            alive_probability(&ExtendedLaw::new(0.2, 0.3, alive(0.5)).unwrap()),
            0.5
        );
    }

    #[test]
    fn invalid_law_rejected() {
        assert!(ExtendedLaw::new(0.5, 0.0, alive(0.6)).is_err());
        assert!(ExtendedLaw::new(-0.1, 0.1, alive(1.0)).is_err());
    }

    #[test]
    fn confirmation_hysteresis() {
        assert!(update_confirmation(&hyp(0.995, false), 0.99, 0.9).confirmed);
        assert!(!update_confirmation(&hyp(0.95, false), 0.99, 0.9).confirmed);
        assert!(update_confirmation(&hyp(0.92, true), 0.99, 0.9).confirmed);
        assert!(!update_confirmation(&hyp(0.85, true), 0.99, 0.9).confirmed);
    }

    #[test]
    fn birth_and_clutter_paths() {
        let z = ObsId { step: 4, index: 2 };
        let b = PotentialIndividual::birth(4, z);
        assert_eq!(b.path.len(), 4);
        assert_eq!(b.path.last(), Some(Some(z)));
        assert!(b.path.entries()[..3].iter().all(Option::is_none));
        assert_eq!(b.interval, Some(Interval { birth: 4, until: 4 }));
        let c = PotentialIndividual::clutter(4, z);
        assert_eq!(c.interval, None);
        assert_eq!(c.path, b.path);
        assert!(ObservationPath::all_empty(3).is_never_detected());
    }
}
