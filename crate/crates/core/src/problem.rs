//! Problem data attached to a mesh: per-element permittivity, source
//! density, boundary data per marker, prescribed conductor charges and the
//! stabilization scale.

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;

/// Scalar field of position, e.g. the volume source density.
pub type FieldFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Boundary data indexed by marker id.
pub type MarkerFn = Box<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>;

pub struct ProblemData {
    /// Permittivity per element [F/m], constant within each element.
    pub permittivity: Vec<f64>,
    /// Volume source density rho(x, y) [C/m^3 per unit depth].
    pub source: FieldFn,
    /// Dirichlet potential f^D(marker, x, y) [V].
    pub dirichlet: MarkerFn,
    /// Neumann flux data f^N(marker, x, y).
    pub neumann: MarkerFn,
    /// Prescribed charge per conductor [C per unit depth], index eta-1.
    pub charges: Vec<f64>,
    /// Dimensionless stabilization scale; the per-element parameter is
    /// tau0 / h_k (with the element permittivity applied during assembly).
    pub tau0: f64,
}

impl ProblemData {
    /// Uniform-permittivity problem with zero data, to be filled in.
    pub fn uniform(mesh: &Mesh2D, eps: f64) -> Self {
        ProblemData {
            permittivity: vec![eps; mesh.n_elements()],
            source: Box::new(|_, _| 0.0),
            dirichlet: Box::new(|_, _, _| 0.0),
            neumann: Box::new(|_, _, _| 0.0),
            charges: vec![0.0; mesh.conductor_count],
            tau0: 1.0,
        }
    }

    pub fn validate(&self, mesh: &Mesh2D) -> Result<()> {
        if self.permittivity.len() != mesh.n_elements() {
            return Err(Error::BadProblemData(format!(
                "{} permittivity values for {} elements",
                self.permittivity.len(),
                mesh.n_elements()
            )));
        }
        for (k, &e) in self.permittivity.iter().enumerate() {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::BadProblemData(format!(
                    "permittivity of element {k} is {e}, must be positive"
                )));
            }
        }
        if self.charges.len() != mesh.conductor_count {
            return Err(Error::BadProblemData(format!(
                "{} charges prescribed for {} conductors",
                self.charges.len(),
                mesh.conductor_count
            )));
        }
        if !(self.tau0 > 0.0) {
            return Err(Error::NonPositiveTau(self.tau0));
        }
        Ok(())
    }
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("elements", &self.permittivity.len())
            .field("charges", &self.charges)
            .field("tau0", &self.tau0)
            .finish_non_exhaustive()
    }
}
