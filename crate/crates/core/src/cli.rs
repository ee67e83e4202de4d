//! Configuration format and batch drivers behind the `hdg2d` binary.
//!
//! A run is described by one JSON file with top-level keys `scenario`,
//! `mesh`, `order`, `tau0`, `charges`, `outputs` and `solver`; unknown
//! keys are rejected. See the annotated examples under `examples/configs`.

use crate::basis::build_reference_element;
use crate::error::{Error, Result};
use crate::mesh::{load_mesh, Mesh2D};
use crate::output::{
    write_convergence_csv, write_line_csv, write_matrix, write_summary, write_vtk,
    ConductorSummary, ConvergenceRow, DimensionSummary, ErrorSummary, SolverSummary, Summary,
    Timings,
};
use crate::recovery::{conductor_charge, evaluate_line, l2_error_field, l2_error_phi};
use crate::scenarios::{
    coaxial_scenario, manufactured_square, slab_scenario, two_plate_fpc_scenario, CoaxialSpec,
    Scenario,
};
use crate::solver::condition_estimate;
use crate::{assembly, solver, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY};
use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Command-line interface of the `hdg2d` binary.
#[derive(Debug, Parser)]
#[command(name = "hdg2d", version, about = "2D HDG electrostatics solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory receiving all output files (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Also dump the assembled trace matrix as `matrix.txt`.
    #[arg(long, global = true)]
    pub dump_matrix: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one configuration and write its artifacts.
    Solve { config: PathBuf },
    /// Run the configuration at a sequence of mesh refinements and write
    /// a convergence table.
    Convergence { config: PathBuf },
    /// Report dimension counts for a configuration or a mesh file.
    Info {
        path: PathBuf,
        /// Polynomial order assumed when `path` is a raw mesh file.
        #[arg(long, default_value_t = 1)]
        order: usize,
    },
}

fn default_order() -> usize {
    1
}
fn default_tau0() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_samples() -> usize {
    101
}

/// Scenario selection; defaults match the built-in scenario parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    /// Coaxial capacitor with a floating tube.
    Coaxial {
        #[serde(default)]
        r0: Option<f64>,
        #[serde(default)]
        r2: Option<f64>,
        #[serde(default)]
        r3: Option<f64>,
        #[serde(default)]
        r1: Option<f64>,
        #[serde(default)]
        v0: Option<f64>,
        #[serde(default)]
        v1: Option<f64>,
        /// Tube charge [C/m].
        #[serde(default)]
        q: Option<f64>,
        /// Tube charge in units of the elementary charge per meter.
        #[serde(default)]
        q_in_e: Option<f64>,
    },
    /// phi = sin(pi x) sin(pi y) on the unit square.
    ManufacturedSquare {
        #[serde(default)]
        permittivity: Option<f64>,
    },
    /// Floating slab in the unit square with a closed-form solution.
    Slab {
        #[serde(default)]
        permittivity: Option<f64>,
    },
    /// Two floating plates between biased electrodes.
    TwoPlate {
        #[serde(default = "default_true")]
        symmetric: bool,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Base resolution; meaning is per scenario (cells per side, azimuthal
    /// segments, or refinement factor). Defaults to a coarse mesh.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Radial layers per annulus gap (coaxial scenario only).
    #[serde(default)]
    pub radial: Option<usize>,
    /// Number of refinement levels for `convergence` (>= 3).
    #[serde(default)]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub name: String,
    pub from: [f64; 2],
    pub to: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    /// Write `summary.json` (default true).
    #[serde(default = "default_true")]
    pub summary: bool,
    /// Write `field.vtk` (default false).
    #[serde(default)]
    pub vtk: bool,
    /// Line samples, each written as `<name>.csv`.
    #[serde(default)]
    pub lines: Vec<LineConfig>,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            summary: true,
            vtk: false,
            lines: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Also estimate the spectral condition number (extra cost).
    #[serde(default)]
    pub condition_estimate: bool,
}

/// A full run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_tau0")]
    pub tau0: f64,
    /// Conductor charge overrides [C/m], one entry per conductor.
    #[serde(default)]
    pub charges: Option<Vec<f64>>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn cfg_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Parse and validate a configuration file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
    let cfg: Config =
        serde_json::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.order) {
            return Err(cfg_err(
                "order",
                format!("{} outside supported range 1..=6", self.order),
            ));
        }
        if !(self.tau0 > 0.0) {
            return Err(cfg_err("tau0", format!("{} must be positive", self.tau0)));
        }
        if let ScenarioConfig::Coaxial {
            q: Some(_),
            q_in_e: Some(_),
            ..
        } = self.scenario
        {
            return Err(cfg_err("scenario", "give either `q` or `q_in_e`, not both"));
        }
        if let Some(res) = self.mesh.resolution {
            if res == 0 {
                return Err(cfg_err("mesh.resolution", "must be >= 1"));
            }
        }
        for (i, line) in self.outputs.lines.iter().enumerate() {
            if line.samples < 2 {
                return Err(cfg_err(
                    "outputs.lines",
                    format!("line {i} (`{}`) needs at least 2 samples", line.name),
                ));
            }
        }
        Ok(())
    }

    pub fn scenario_name(&self) -> &'static str {
        match self.scenario {
            ScenarioConfig::Coaxial { .. } => "coaxial",
            ScenarioConfig::ManufacturedSquare { .. } => "manufactured_square",
            ScenarioConfig::Slab { .. } => "slab",
            ScenarioConfig::TwoPlate { .. } => "two_plate",
        }
    }

    /// Build the scenario at refinement `level` (resolution doubles per
    /// level), then apply the `tau0` and `charges` settings.
    pub fn build_scenario(&self, level: usize) -> Result<Scenario> {
        let scale = 1usize << level;
        let mut sc = match &self.scenario {
            ScenarioConfig::Coaxial {
                r0,
                r2,
                r3,
                r1,
                v0,
                v1,
                q,
                q_in_e,
            } => {
                let d = CoaxialSpec::default();
                let spec = CoaxialSpec {
                    r0: r0.unwrap_or(d.r0),
                    r2: r2.unwrap_or(d.r2),
                    r3: r3.unwrap_or(d.r3),
                    r1: r1.unwrap_or(d.r1),
                    v0: v0.unwrap_or(d.v0),
                    v1: v1.unwrap_or(d.v1),
                    q: q.unwrap_or_else(|| q_in_e.unwrap_or(0.0) * ELEMENTARY_CHARGE),
                    eps: d.eps,
                };
                let naz = self.mesh.resolution.unwrap_or(16) * scale;
                let nr = self.mesh.radial.unwrap_or(1) * scale;
                coaxial_scenario(&spec, naz, nr)?
            }
            ScenarioConfig::ManufacturedSquare { permittivity } => {
                let n = self.mesh.resolution.unwrap_or(4) * scale;
                manufactured_square(n, permittivity.unwrap_or(VACUUM_PERMITTIVITY))?
            }
            ScenarioConfig::Slab { permittivity } => {
                let n = self.mesh.resolution.unwrap_or(8) * scale;
                slab_scenario(n, permittivity.unwrap_or(VACUUM_PERMITTIVITY))?
            }
            ScenarioConfig::TwoPlate { symmetric } => {
                let refine = self.mesh.resolution.unwrap_or(1) * scale;
                two_plate_fpc_scenario(refine, *symmetric)?
            }
        };
        sc.data.tau0 = self.tau0;
        if let Some(charges) = &self.charges {
            if charges.len() != sc.mesh.conductor_count {
                return Err(cfg_err(
                    "charges",
                    format!(
                        "{} entries for {} conductors",
                        charges.len(),
                        sc.mesh.conductor_count
                    ),
                ));
            }
            if *charges != sc.data.charges {
                // the reference solution was built for the scenario's own
                // charges; an override invalidates it
                sc.exact_phi = None;
                sc.exact_e = None;
                sc.exact_conductor_potentials = None;
            }
            sc.data.charges = charges.clone();
        }
        Ok(sc)
    }
}

/// Representative mesh size: the longest element edge.
pub fn mesh_h(mesh: &Mesh2D) -> f64 {
    let mut h: f64 = 0.0;
    for k in 0..mesh.n_elements() {
        let c = mesh.element_coords(k);
        for i in 0..3 {
            let a = c[i];
            let b = c[(i + 1) % 3];
            h = h.max((b[0] - a[0]).hypot(b[1] - a[1]));
        }
    }
    h
}

struct SolvedRun {
    scenario: Scenario,
    re: crate::basis::RefElement,
    sol: crate::recovery::Solution,
    sys: crate::assembly::GlobalTraceSystem,
    summary: Summary,
}

fn solve_run(cfg: &Config, level: usize, with_kappa: bool) -> Result<SolvedRun> {
    let t_start = Instant::now();
    let sc = cfg.build_scenario(level)?;
    let re = build_reference_element(cfg.order)?;

    let t0 = Instant::now();
    let (sys, locals, dof_map) = assembly::assemble_system(&sc.mesh, &re, &sc.data)?;
    let assemble_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let (trace, report) = solver::solve_spd(&sys)?;
    let solve_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let sol = crate::recovery::recover_local_fields(&locals, &trace, &dof_map, &re, sc.data.tau0)?;
    let recover_s = t0.elapsed().as_secs_f64();

    let kappa = if with_kappa {
        Some(condition_estimate(&sys)?.kappa)
    } else {
        None
    };

    let mut conductors = Vec::new();
    for eta in 1..=sc.mesh.conductor_count {
        conductors.push(ConductorSummary {
            index: eta,
            potential: sol.conductor_potentials[eta - 1],
            charge_prescribed: sc.data.charges[eta - 1],
            charge_computed: conductor_charge(&sc.mesh, &re, &sol, &sc.data, eta)?,
        });
    }

    let errors = sc.exact_phi.as_ref().map(|phi| {
        let phi_l2 = l2_error_phi(&sc.mesh, &re, &sol, phi);
        let field_l2 = sc
            .exact_e
            .as_ref()
            .map(|(ex, ey)| l2_error_field(&sc.mesh, &re, &sol, ex, ey))
            .unwrap_or(f64::NAN);
        let conductor_abs = sc.exact_conductor_potentials.as_ref().map(|exact| {
            exact
                .iter()
                .zip(&sol.conductor_potentials)
                .map(|(e, c)| (e - c).abs())
                .fold(0.0f64, f64::max)
        });
        ErrorSummary {
            phi_l2,
            field_l2,
            conductor_abs,
        }
    });

    let summary = Summary {
        scenario: cfg.scenario_name().into(),
        order: cfg.order,
        tau0: cfg.tau0,
        dimensions: DimensionSummary {
            elements: sc.mesh.n_elements(),
            interior_faces: sc.mesh.n_interior_faces(),
            nodes_per_element: re.n_p,
            nodes_per_face: re.n_fp,
            conductors: sc.mesh.conductor_count,
            trace_dofs: sys.n_dof,
            matrix_nnz: sys.matrix.nnz(),
        },
        solver: SolverSummary {
            method: report.method.to_string(),
            iterations: report.iterations,
            relative_residual: report.relative_residual,
            factor_nnz: report.factor_nnz,
            condition_estimate: kappa,
        },
        conductors,
        errors,
        timings: Timings {
            assemble_s,
            solve_s,
            recover_s,
            total_s: t_start.elapsed().as_secs_f64(),
        },
    };
    Ok(SolvedRun {
        scenario: sc,
        re,
        sol,
        sys,
        summary,
    })
}

/// `solve` command: run one configuration and write its artifacts.
pub fn run_solve(config_path: &Path, cli: &Cli) -> Result<()> {
    let cfg = load_config(config_path)?;
    let run = solve_run(&cfg, 0, cfg.solver.condition_estimate)?;
    std::fs::create_dir_all(&cli.output_dir)?;

    if cfg.outputs.summary {
        write_summary(&cli.output_dir.join("summary.json"), &run.summary)?;
    }
    if cfg.outputs.vtk {
        write_vtk(
            &cli.output_dir.join("field.vtk"),
            &run.scenario.mesh,
            &run.re,
            &run.sol,
        )?;
    }
    for line in &cfg.outputs.lines {
        let samples = evaluate_line(
            &run.scenario.mesh,
            &run.re,
            &run.sol,
            line.from,
            line.to,
            line.samples,
        )?;
        write_line_csv(&cli.output_dir.join(format!("{}.csv", line.name)), &samples)?;
    }
    if cli.dump_matrix {
        write_matrix(&cli.output_dir.join("matrix.txt"), &run.sys.matrix)?;
    }
    if !cli.quiet {
        println!(
            "{}: N_dof = {}, residual = {:.3e}",
            run.summary.scenario, run.summary.dimensions.trace_dofs,
            run.summary.solver.relative_residual
        );
        for c in &run.summary.conductors {
            println!(
                "conductor {}: potential = {:.9} V, charge = {:.6e} C/m",
                c.index, c.potential, c.charge_computed
            );
        }
    }
    Ok(())
}

/// `convergence` command: solve at a geometric sequence of resolutions
/// and write `convergence.csv`.
pub fn run_convergence(config_path: &Path, cli: &Cli) -> Result<()> {
    let cfg = load_config(config_path)?;
    let levels = cfg.mesh.levels.unwrap_or(3);
    if levels < 3 {
        return Err(cfg_err(
            "mesh.levels",
            format!("convergence needs at least 3 refinement levels, got {levels}"),
        ));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let run = solve_run(&cfg, level, false)?;
        let errs = run.summary.errors.as_ref().ok_or_else(|| {
            cfg_err(
                "scenario",
                "convergence needs a scenario with an exact solution",
            )
        })?;
        let h = mesh_h(&run.scenario.mesh);
        let observed_rate = rows
            .last()
            .map(|prev: &ConvergenceRow| (prev.err_phi_l2 / errs.phi_l2).log2());
        let row = ConvergenceRow {
            h,
            dof: run.summary.dimensions.trace_dofs,
            err_phi_l2: errs.phi_l2,
            err_e_l2: errs.field_l2,
            fpc_abs_err: errs.conductor_abs.unwrap_or(0.0),
            observed_rate,
        };
        if !cli.quiet {
            println!(
                "level {level}: h = {:.4e}, dof = {}, err_phi = {:.4e}, err_E = {:.4e}{}",
                row.h,
                row.dof,
                row.err_phi_l2,
                row.err_e_l2,
                row.observed_rate
                    .map(|r| format!(", rate = {r:.2}"))
                    .unwrap_or_default()
            );
        }
        rows.push(row);
    }
    std::fs::create_dir_all(&cli.output_dir)?;
    write_convergence_csv(&cli.output_dir.join("convergence.csv"), &rows)?;
    Ok(())
}

/// Dimension report of the `info` command.
#[derive(Debug, serde::Serialize)]
pub struct InfoReport {
    pub elements: usize,
    pub interior_faces: usize,
    pub order: usize,
    pub nodes_per_element: usize,
    pub nodes_per_face: usize,
    pub conductors: usize,
    pub trace_dofs: usize,
    pub dg_dofs: usize,
    pub ratio: f64,
}

/// Compute the dimension report for a mesh at polynomial order `p`.
pub fn info_report(mesh: &Mesh2D, p: usize) -> Result<InfoReport> {
    let re = build_reference_element(p)?;
    let n_f = mesh.n_interior_faces();
    let n_dof = assembly::trace_dimension(n_f, re.n_fp, mesh.conductor_count);
    let dg = assembly::dg_dimension(mesh.n_elements(), re.n_p);
    Ok(InfoReport {
        elements: mesh.n_elements(),
        interior_faces: n_f,
        order: p,
        nodes_per_element: re.n_p,
        nodes_per_face: re.n_fp,
        conductors: mesh.conductor_count,
        trace_dofs: n_dof,
        dg_dofs: dg,
        ratio: n_dof as f64 / dg as f64,
    })
}

/// `info` command: accepts either a JSON configuration or a mesh file.
pub fn run_info(path: &Path, order: usize, cli: &Cli) -> Result<()> {
    let report = if path.extension().is_some_and(|e| e == "json") {
        let cfg = load_config(path)?;
        let sc = cfg.build_scenario(0)?;
        info_report(&sc.mesh, cfg.order)?
    } else {
        let mesh = load_mesh(path)?;
        info_report(&mesh, order)?
    };
    if !cli.quiet {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
        );
    }
    Ok(())
}

/// Dispatch a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve { config } => run_solve(config, cli),
        Command::Convergence { config } => run_convergence(config, cli),
        Command::Info { path, order } => run_info(path, *order, cli),
    }
}
