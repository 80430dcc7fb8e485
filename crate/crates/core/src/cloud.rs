//! Weighted atom clouds in `C` and `C x C`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Complex;

/// A point type that can carry mass in an [`AtomCloud`].
pub trait CloudPoint: Copy + Send + Sync {
    const DIM: usize;
    /// Coordinates in `C^DIM`, padded with zeros to two entries.
    fn coords(&self) -> [Complex; 2];
}

impl CloudPoint for Complex {
    const DIM: usize = 1;
    fn coords(&self) -> [Complex; 2] {
        [*self, Complex::new(0.0, 0.0)]
    }
}

/// A point `(c, z)` of `C x C`; `depth` records which level `j` of the
/// critical preimage tree produced it (`p_c^j(z) = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPoint {
    pub c: Complex,
    pub z: Complex,
    pub depth: u32,
}

impl CloudPoint for PairPoint {
    const DIM: usize = 2;
    fn coords(&self) -> [Complex; 2] {
        [self.c, self.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weighted<P> {
    pub point: P,
    pub weight: f64,
}

pub type TangencyAtom = Weighted<PairPoint>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CloudError {
    #[error("atom {index} has non-positive or non-finite weight {weight}")]
    BadWeight { index: usize, weight: f64 },
}

/// Finite positive measure given by weighted atoms. Immutable once built;
/// the total mass is cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloud<P> {
    atoms: Vec<Weighted<P>>,
    certified: bool,
    total_mass: f64,
}

pub type PlaneCloud = AtomCloud<Complex>;
pub type PairCloud = AtomCloud<PairPoint>;

impl<P: CloudPoint> AtomCloud<P> {
    pub fn new(atoms: Vec<Weighted<P>>, certified: bool) -> Result<Self, CloudError> {
        if let Some((index, a)) = atoms
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.weight > 0.0 && a.weight.is_finite()))
        {
            return Err(CloudError::BadWeight {
                index,
                weight: a.weight,
            });
        }
        let total_mass = compensated_sum(atoms.iter().map(|a| a.weight));
        Ok(AtomCloud {
            atoms,
            certified,
            total_mass,
        })
    }

    pub fn empty() -> Self {
        AtomCloud {
            atoms: Vec::new(),
            certified: true,
            total_mass: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        P::DIM
    }

    pub fn atoms(&self) -> &[Weighted<P>] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<Weighted<P>> {
        self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `<cloud, f>`, summed sequentially with compensation.
    pub fn integrate<F: Fn(&P) -> f64>(&self, f: F) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight * f(&a.point)))
    }

    /// Largest coordinate modulus over all atoms.
    pub fn radius(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let [x, y] = a.point.coords();
                x.norm().max(y.norm())
            })
            .fold(0.0, f64::max)
    }
}

/// Neumaier summation.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
