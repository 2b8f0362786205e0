use std::collections::HashSet;

use crate::error::{HispError, Result};
use crate::gaussian::ObsVector;
use crate::hypothesis::ObsId;
use crate::sensor::{CellId, SensorGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub id: ObsId,
    /// `(range [m], bearing [rad])`
    pub z: ObsVector,
    pub cell: CellId,
}

/// One scan's observation set.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub step: u32,
    pub time: f64,
    pub observations: Vec<Observation>,
}

impl Scan {
    /// Numbers the observations in order and assigns their cells.
    pub fn from_measurements(
        step: u32,
        time: f64,
        zs: &[ObsVector],
        grid: &SensorGrid,
    ) -> Result<Self> {
        let observations = zs
            .iter()
            .enumerate()
            .map(|(i, z)| {
                Ok(Observation {
                    id: ObsId {
                        step,
                        index: i as u32,
                    },
                    z: *z,
                    cell: grid.cell_of(z)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            step,
            time,
            observations,
        })
    }

    pub fn empty(step: u32, time: f64) -> Self {
        Self {
            step,
            time,
            observations: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Rejects duplicate ids and observations outside the grid.
    pub fn validate(&self, grid: &SensorGrid) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.observations.len());
        for o in &self.observations {
            if !seen.insert(o.id) {
                return Err(HispError::DuplicateObservation(o.id.to_string()));
            }
            grid.cell_of(&o.z)?;
        }
        Ok(())
    }
}
