//! Built-in, fully specified problem instances with analytic or reference
//! solutions: a coaxial capacitor with a floating tube, manufactured
//! smooth solutions on the unit square, a floating slab with a closed-form
//! solution, and a two-plate floating-conductor arrangement.

use crate::error::{Error, Result};
use crate::mesh::{
    generate_annulus_with_fpc, generate_rect_with_fpc_plates, generate_slab_with_fpc,
    generate_unit_square, Mesh2D, PlateSpec,
};
use crate::problem::{FieldFn, ProblemData};
use crate::{ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
use std::f64::consts::PI;

/// A ready-to-solve problem instance: mesh, data, and whatever reference
/// solution is available for it.
pub struct Scenario {
    pub name: &'static str,
    pub mesh: Mesh2D,
    pub data: ProblemData,
    /// Exact potential, when known in closed form.
    pub exact_phi: Option<FieldFn>,
    /// Exact field components (E_x, E_y), when known.
    pub exact_e: Option<(FieldFn, FieldFn)>,
    /// Exact floating potentials (index eta-1), when known.
    pub exact_conductor_potentials: Option<Vec<f64>>,
}

/// Coaxial capacitor parameters: solid inner conductor of radius `r0` at
/// potential `v0`, floating tube occupying `r2 < r < r3` carrying total
/// charge `q` per unit depth, outer shell at radius `r1` at potential
/// `v1`. Uniform permittivity `eps` in both gaps.
#[derive(Debug, Clone, Copy)]
pub struct CoaxialSpec {
    pub r0: f64,
    pub r2: f64,
    pub r3: f64,
    pub r1: f64,
    pub v0: f64,
    pub v1: f64,
    /// Tube charge [C per unit depth].
    pub q: f64,
    pub eps: f64,
}

impl Default for CoaxialSpec {
    /// Reference geometry: r0 = 0.1 cm, r2 = 0.8 cm, r3 = 1.2 cm,
    /// r1 = 2 cm, V0 = 0, V1 = 10 V, uncharged tube in vacuum.
    fn default() -> Self {
        CoaxialSpec {
            r0: 0.001,
            r2: 0.008,
            r3: 0.012,
            r1: 0.02,
            v0: 0.0,
            v1: 10.0,
            q: 0.0,
            eps: VACUUM_PERMITTIVITY,
        }
    }
}

impl CoaxialSpec {
    /// Set the tube charge in units of the elementary charge per meter
    /// depth, e.g. `with_charge_in_e(-1e10)` for Q = -1e10 e C/m.
    pub fn with_charge_in_e(mut self, n_e: f64) -> Self {
        self.q = n_e * ELEMENTARY_CHARGE;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0 < self.r2 && self.r2 < self.r3 && self.r3 < self.r1) {
            return Err(Error::InvalidGeometry(format!(
                "coaxial radii must satisfy 0 < r0 < r2 < r3 < r1, got {}, {}, {}, {}",
                self.r0, self.r2, self.r3, self.r1
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::BadProblemData(format!(
                "permittivity {} must be positive",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Closed-form solution of the coaxial problem. The potential is
/// `a0 + b0 ln r` in the inner gap, `a1 + b1 ln r` in the outer gap, and
/// the constant `phi_c` on the floating tube.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticCoaxial {
    pub a0: f64,
    pub b0: f64,
    pub a1: f64,
    pub b1: f64,
    /// Floating potential of the tube [V].
    pub phi_c: f64,
    pub r2: f64,
    pub r3: f64,
}

impl AnalyticCoaxial {
    /// Potential at radius r (tube interior maps to the constant phi_c).
    pub fn phi(&self, r: f64) -> f64 {
        if r <= self.r2 {
            self.a0 + self.b0 * r.ln()
        } else if r >= self.r3 {
            self.a1 + self.b1 * r.ln()
        } else {
            self.phi_c
        }
    }

    /// Radial field E_r = -dphi/dr at radius r (zero inside the tube).
    pub fn e_r(&self, r: f64) -> f64 {
        if r <= self.r2 {
            -self.b0 / r
        } else if r >= self.r3 {
            -self.b1 / r
        } else {
            0.0
        }
    }

    /// Cartesian exact potential.
    pub fn phi_xy(&self, x: f64, y: f64) -> f64 {
        self.phi(x.hypot(y))
    }

    /// Cartesian exact field components.
    pub fn e_xy(&self, x: f64, y: f64) -> (f64, f64) {
        let r = x.hypot(y);
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let er = self.e_r(r);
        (er * x / r, er * y / r)
    }
}

/// Solve the coaxial problem in closed form.
///
/// With C20 = ln(r2/r0) and C31 = ln(r3/r1), the logarithmic slopes are
///
/// ```text
/// b1 = (v1 - v0 - C20 * q / (2 pi eps)) / (C20 - C31)
/// b0 = b1 + q / (2 pi eps)
/// ```
///
/// and the offsets follow from the shell potentials: a0 = v0 - b0 ln r0,
/// a1 = v1 - b1 ln r1. The slope relation comes from Gauss's law around
/// the tube; the b1 formula from equating the tube potential approached
/// from both gaps (see the 2x2-oracle test below, which re-derives it
/// with a dense linear solve).
pub fn analytic_coaxial(spec: &CoaxialSpec) -> Result<AnalyticCoaxial> {
    spec.validate()?;
    let c20 = (spec.r2 / spec.r0).ln();
    let c31 = (spec.r3 / spec.r1).ln();
    let denom = c20 - c31;
    if denom.abs() < 1e-14 * (c20.abs() + c31.abs()) {
        return Err(Error::InvalidGeometry(
            "degenerate coaxial geometry: ln(r2/r0) = ln(r3/r1)".into(),
        ));
    }
    let q_over = spec.q / (2.0 * PI * spec.eps);
    let b1 = (spec.v1 - spec.v0 - c20 * q_over) / denom;
    let b0 = b1 + q_over;
    let a0 = spec.v0 - b0 * spec.r0.ln();
    let a1 = spec.v1 - b1 * spec.r1.ln();
    let phi_c = a0 + b0 * spec.r2.ln();
    Ok(AnalyticCoaxial {
        a0,
        b0,
        a1,
        b1,
        phi_c,
        r2: spec.r2,
        r3: spec.r3,
    })
}

/// Discretized coaxial scenario: polygonal circles with `n_azimuthal`
/// segments, `n_radial` layers in each gap.
pub fn coaxial_scenario(
    spec: &CoaxialSpec,
    n_azimuthal: usize,
    n_radial: usize,
) -> Result<Scenario> {
    spec.validate()?;
    let mesh = generate_annulus_with_fpc(
        spec.r0,
        spec.r2,
        spec.r3,
        spec.r1,
        n_azimuthal,
        n_radial,
        n_radial,
    )?;
    let ana = analytic_coaxial(spec)?;
    let mut data = ProblemData::uniform(&mesh, spec.eps);
    let (v0, v1) = (spec.v0, spec.v1);
    data.dirichlet = Box::new(move |m, _, _| if m == 0 { v0 } else { v1 });
    data.charges = vec![spec.q];
    let ana_phi = ana;
    let ana_e = ana;
    Ok(Scenario {
        name: "coaxial",
        mesh,
        data,
        exact_phi: Some(Box::new(move |x, y| ana_phi.phi_xy(x, y))),
        exact_e: Some((
            Box::new(move |x, y| ana_e.e_xy(x, y).0),
            Box::new(move |x, y| ana_e.e_xy(x, y).1),
        )),
        exact_conductor_potentials: Some(vec![ana.phi_c]),
    })
}

/// Manufactured smooth solution on the unit square:
/// phi = sin(pi x) sin(pi y), rho = 2 pi^2 eps sin(pi x) sin(pi y),
/// homogeneous Dirichlet boundary, no conductors.
pub fn manufactured_square(n: usize, eps: f64) -> Result<Scenario> {
    if !(eps > 0.0) {
        return Err(Error::BadProblemData(format!(
            "permittivity {eps} must be positive"
        )));
    }
    let mesh = generate_unit_square(n)?;
    let mut data = ProblemData::uniform(&mesh, eps);
    data.source = Box::new(move |x, y| 2.0 * PI * PI * eps * (PI * x).sin() * (PI * y).sin());
    Ok(Scenario {
        name: "manufactured_square",
        mesh,
        data,
        exact_phi: Some(Box::new(|x, y| (PI * x).sin() * (PI * y).sin())),
        exact_e: Some((
            Box::new(|x, y| -PI * (PI * x).cos() * (PI * y).sin()),
            Box::new(|x, y| -PI * (PI * x).sin() * (PI * y).cos()),
        )),
        exact_conductor_potentials: None,
    })
}

/// Unit square with a full-width floating slab between y = 1/4 and
/// y = 3/4. The exact solution phi = cos(2 pi y) with source
/// rho = eps (2 pi)^2 cos(2 pi y) satisfies the floating-conductor
/// conditions exactly: phi = 0 on both slab surfaces (so the tube
/// potential is 0) and the slab's total charge is -4 pi eps.
/// Bottom and top edges carry Dirichlet data cos(2 pi y) = 1; the sides
/// are zero-flux Neumann by symmetry (E_x = 0).
pub fn slab_scenario(n: usize, eps: f64) -> Result<Scenario> {
    if !(eps > 0.0) {
        return Err(Error::BadProblemData(format!(
            "permittivity {eps} must be positive"
        )));
    }
    if n % 4 != 0 {
        return Err(Error::InvalidGeometry(format!(
            "slab scenario needs n divisible by 4 so the surfaces fall on grid lines, got {n}"
        )));
    }
    let mesh = generate_slab_with_fpc(n, 0.25, 0.75)?;
    let mut data = ProblemData::uniform(&mesh, eps);
    data.source = Box::new(move |_, y| eps * 4.0 * PI * PI * (2.0 * PI * y).cos());
    data.dirichlet = Box::new(|_, _, y| (2.0 * PI * y).cos());
    data.charges = vec![slab_exact_charge(eps)];
    Ok(Scenario {
        name: "slab",
        mesh,
        data,
        exact_phi: Some(Box::new(|_, y| (2.0 * PI * y).cos())),
        exact_e: Some((
            Box::new(|_, _| 0.0),
            Box::new(|_, y| 2.0 * PI * (2.0 * PI * y).sin()),
        )),
        exact_conductor_potentials: Some(vec![0.0]),
    })
}

/// Exact slab charge for [`slab_scenario`]: the outward flux of eps E
/// through both slab surfaces.
pub fn slab_exact_charge(eps: f64) -> f64 {
    -4.0 * PI * eps
}

/// Rectangle 4 x 2 with left edge at 0 V, right edge at 10 V, insulated
/// top and bottom, and two uncharged floating plates. `symmetric` places
/// the plates mirror-symmetrically about x = 2 (so the two floating
/// potentials sum to 10 V); otherwise both plates sit in the left half
/// and the potentials differ. `refine` scales the base 16 x 8 grid.
pub fn two_plate_fpc_scenario(refine: usize, symmetric: bool) -> Result<Scenario> {
    if refine == 0 {
        return Err(Error::InvalidGeometry("refine must be >= 1".into()));
    }
    let plates = if symmetric {
        [
            PlateSpec {
                x0: 1.0,
                y0: 0.75,
                x1: 1.5,
                y1: 1.25,
            },
            PlateSpec {
                x0: 2.5,
                y0: 0.75,
                x1: 3.0,
                y1: 1.25,
            },
        ]
    } else {
        [
            PlateSpec {
                x0: 0.5,
                y0: 0.75,
                x1: 1.0,
                y1: 1.25,
            },
            PlateSpec {
                x0: 1.5,
                y0: 0.75,
                x1: 2.0,
                y1: 1.25,
            },
        ]
    };
    let mesh = generate_rect_with_fpc_plates(4.0, 2.0, 16 * refine, 8 * refine, &plates)?;
    let mut data = ProblemData::uniform(&mesh, VACUUM_PERMITTIVITY);
    data.dirichlet = Box::new(|m, _, _| if m == 0 { 0.0 } else { 10.0 });
    data.charges = vec![0.0, 0.0];
    Ok(Scenario {
        name: "two_plate",
        mesh,
        data,
        exact_phi: None,
        exact_e: None,
        exact_conductor_potentials: None,
    })
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("elements", &self.mesh.n_elements())
            .field("conductors", &self.mesh.conductor_count)
            .field("has_exact", &self.exact_phi.is_some())
            .finish_non_exhaustive()
    }
}
