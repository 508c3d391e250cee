//! Run configuration: TOML sections for potentials, elasticity, geometry,
//! solver and sweep, with aggregated validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fracsep::geometry::{Polygon, Segment};
use fracsep::harness::{DeltaRule, GridRule, SweepPlan};
use fracsep::sharp::{Domain2D, Rigid};
use fracsep::{
    CDeltaRule, Degradation, Displacement, DoubleWell, ElasticModel, EtaRule, Grid, Phi, PotentialSet,
    SharpGeometry, SharpGeometry1D, SharpGeometry2D, SingleWell, SolverPlan, WidthPolicy,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub potentials: PotentialsConfig,
    #[serde(default)]
    pub elastic: ElasticConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub recover: RecoverConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialsConfig {
    /// quartic | abs_product
    pub double_well: String,
    pub w_scale: f64,
    /// quadratic | linear
    pub single_well: String,
    pub v_scale: f64,
    /// geodesic | linear | one
    pub phi: String,
    pub c_delta_k: f64,
    pub coercivity: f64,
    pub quadrature_nodes: usize,
    pub admissibility_samples: usize,
}

impl Default for PotentialsConfig {
    fn default() -> Self {
        Self {
            double_well: "quartic".into(),
            w_scale: 1.0,
            single_well: "quadratic".into(),
            v_scale: 1.0,
            phi: "geodesic".into(),
            c_delta_k: 1.0,
            coercivity: 4.0,
            quadrature_nodes: 4096,
            admissibility_samples: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElasticConfig {
    pub lame_lambda: f64,
    pub lame_mu: f64,
    /// [xx, yy, xy]; only xx is used in 1D
    pub e0: [f64; 3],
    pub theta: f64,
    /// quadratic | linear
    pub degradation: String,
    /// η = eta_k · δ^eta_p
    pub eta_k: f64,
    pub eta_p: f64,
}

impl Default for ElasticConfig {
    fn default() -> Self {
        let m = ElasticModel::default();
        Self {
            lame_lambda: m.lame_lambda,
            lame_mu: m.lame_mu,
            e0: m.e0,
            theta: 0.0,
            degradation: "quadratic".into(),
            eta_k: m.eta.k,
            eta_p: m.eta.p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub dim: usize,
    /// 1D interval [a, b]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    pub phase_points: Vec<f64>,
    pub crack_points: Vec<f64>,
    /// Whether c = 1 on the leftmost piece.
    pub c_left: bool,
    /// 2D rectangle
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<[f64; 2]>,
    /// Vertices of the phase set A; empty means A = ∅.
    pub phase_polygon: Vec<[f64; 2]>,
    pub cracks: Vec<[[f64; 2]; 2]>,
    pub displacement: DisplacementConfig,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            domain: None,
            phase_points: vec![],
            crack_points: vec![],
            c_left: false,
            origin: None,
            extent: None,
            phase_polygon: vec![],
            cracks: vec![],
            displacement: DisplacementConfig::Zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidConfig {
    pub omega: f64,
    pub b: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisplacementConfig {
    Zero,
    Affine { a: [[f64; 2]; 2], b: [f64; 2] },
    DefaultQuadratic,
    Quadratic { a: [[f64; 2]; 2], hess: [[[f64; 2]; 2]; 2] },
    RigidSides { line: [[f64; 2]; 2], minus: RigidConfig, plus: RigidConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Cells per axis.
    pub cells: usize,
    pub eps: f64,
    /// Defaults to the sweep delta rule applied to eps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub max_outer: usize,
    pub tol_rel_energy: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub step0: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_constraint: Option<f64>,
    pub jitter: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolverPlan::default();
        Self {
            cells: 1024,
            eps: 2f64.powi(-7),
            delta: None,
            max_outer: p.max_outer,
            tol_rel_energy: p.tol_rel_energy,
            cg_tol: p.cg_tol,
            cg_max_iters: p.cg_max_iters,
            step0: p.step0,
            backtrack_factor: p.backtrack_factor,
            armijo_c: p.armijo_c,
            max_backtracks: p.max_backtracks,
            mass_constraint: p.mass_constraint,
            jitter: p.jitter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub eps_schedule: Vec<f64>,
    /// `eps^p` or `k*eps^p`, with p written as a decimal or a fraction.
    pub delta_rule: String,
    pub lambda: f64,
    /// Fixed cells per axis; ignored when `cells_per_eps` is set.
    pub cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells_per_eps: Option<f64>,
    pub min_cells: usize,
    pub max_cells: usize,
    /// enforce | report
    pub width_policy: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eps_schedule: (5..=9).map(|k| 2f64.powi(-k)).collect(),
            delta_rule: "eps^2/3".into(),
            lambda: 1e-4,
            cells: 1 << 14,
            cells_per_eps: None,
            min_cells: 64,
            max_cells: 1 << 20,
            width_policy: "report".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoverConfig {
    pub eps: f64,
    /// Defaults to the sweep delta rule applied to eps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub lambda: f64,
    pub cells: usize,
    /// enforce | report
    pub width_policy: String,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            eps: 2f64.powi(-7),
            delta: None,
            lambda: 1e-4,
            cells: 1024,
            width_policy: "report".into(),
        }
    }
}

/// Everything a run needs, built from a validated configuration.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub potentials: PotentialSet,
    pub elastic: ElasticModel,
    pub geometry: SharpGeometry,
    pub solver: SolverPlan,
    pub solver_grid: Grid,
    pub solver_eps: f64,
    pub solver_delta: f64,
    pub sweep: SweepPlan,
    pub recover_grid: Grid,
    pub recover: fracsep::RecoveryParams,
    pub admissibility_samples: usize,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.resolve()?;
    Ok(cfg)
}

fn width_policy(name: &str, what: &str, errs: &mut Vec<String>) -> WidthPolicy {
    match name {
        "enforce" => WidthPolicy::Enforce,
        "report" => WidthPolicy::Report,
        other => {
            errs.push(format!("{what}.width_policy: unknown policy `{other}` (enforce | report)"));
            WidthPolicy::Report
        }
    }
}

fn grid_for(g: &SharpGeometry, cells: usize) -> fracsep::Result<Grid> {
    match g {
        SharpGeometry::D1(g) => Grid::new_1d(g.domain[0], g.domain[1] - g.domain[0], cells),
        SharpGeometry::D2(g) => Grid::new_2d(g.domain.origin, g.domain.extent, [cells, cells]),
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every field and cross-field constraint, reporting all
    /// violations at once, and builds the library objects.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let mut errs = Vec::new();
        let pc = &self.potentials;

        let w = match pc.double_well.as_str() {
            "quartic" => Some(DoubleWell::Quartic { scale: pc.w_scale }),
            "abs_product" => Some(DoubleWell::AbsProduct { scale: pc.w_scale }),
            other => {
                errs.push(format!("potentials.double_well: unknown built-in `{other}` (quartic | abs_product)"));
                None
            }
        };
        let v = match pc.single_well.as_str() {
            "quadratic" => Some(SingleWell::Quadratic { scale: pc.v_scale }),
            "linear" => Some(SingleWell::Linear { scale: pc.v_scale }),
            other => {
                errs.push(format!("potentials.single_well: unknown built-in `{other}` (quadratic | linear)"));
                None
            }
        };
        let phi = match pc.phi.as_str() {
            "geodesic" => Some(Phi::Geodesic),
            "linear" => Some(Phi::Linear),
            "one" => Some(Phi::One),
            other => {
                errs.push(format!("potentials.phi: unknown built-in `{other}` (geodesic | linear | one)"));
                None
            }
        };
        let ec = &self.elastic;
        if !(0.0..=1.0).contains(&ec.theta) {
            errs.push(format!("elastic.theta must lie in [0,1], got {}", ec.theta));
        }
        let potentials = match (w, v, phi) {
            (Some(w), Some(v), Some(phi)) => PotentialSet::new(w, v, phi, CDeltaRule { k: pc.c_delta_k })
                .and_then(|p| p.with_coercivity(pc.coercivity))
                .and_then(|p| p.with_quadrature_nodes(pc.quadrature_nodes))
                .and_then(|p| if (0.0..=1.0).contains(&ec.theta) { p.with_theta(ec.theta) } else { Ok(p) })
                .map_err(|e| errs.push(format!("potentials: {e}")))
                .ok(),
            _ => None,
        };
        if pc.admissibility_samples < 2 {
            errs.push("potentials.admissibility_samples must be at least 2".into());
        }

        let degradation = match ec.degradation.as_str() {
            "quadratic" => Degradation::Quadratic,
            "linear" => Degradation::Linear,
            other => {
                errs.push(format!("elastic.degradation: unknown built-in `{other}` (quadratic | linear)"));
                Degradation::Quadratic
            }
        };
        let elastic = ElasticModel {
            lame_lambda: ec.lame_lambda,
            lame_mu: ec.lame_mu,
            e0: ec.e0,
            degradation,
            eta: EtaRule { k: ec.eta_k, p: ec.eta_p },
        };
        if let Err(e) = elastic.validate() {
            errs.push(format!("elastic: {e}"));
        }

        let geometry = self.geometry_object(&mut errs);

        let sc = &self.sweep;
        let delta_rule = DeltaRule::parse(&sc.delta_rule)
            .map_err(|e| errs.push(format!("sweep.delta_rule: {e}")))
            .ok();
        let sweep_policy = width_policy(&sc.width_policy, "sweep", &mut errs);
        let grid_rule = match sc.cells_per_eps {
            Some(per_eps) => {
                if !(per_eps > 0.0) || sc.min_cells < 2 || sc.max_cells < sc.min_cells {
                    errs.push("sweep: need cells_per_eps > 0 and 2 <= min_cells <= max_cells".into());
                }
                GridRule::PerEps {
                    per_eps,
                    min: sc.min_cells,
                    max: sc.max_cells,
                }
            }
            None => {
                if sc.cells < 2 {
                    errs.push("sweep.cells must be at least 2".into());
                }
                GridRule::Fixed { cells: sc.cells }
            }
        };

        let so = &self.solver;
        if so.cells < 2 {
            errs.push("solver.cells must be at least 2".into());
        }
        if !(so.eps > 0.0) {
            errs.push(format!("solver.eps must be positive, got {}", so.eps));
        }
        let solver = SolverPlan {
            max_outer: so.max_outer,
            tol_rel_energy: so.tol_rel_energy,
            cg_tol: so.cg_tol,
            cg_max_iters: so.cg_max_iters,
            step0: so.step0,
            backtrack_factor: so.backtrack_factor,
            armijo_c: so.armijo_c,
            max_backtracks: so.max_backtracks,
            mass_constraint: so.mass_constraint,
            seed: self.seed,
            jitter: so.jitter,
        };
        if let Err(e) = solver.validate() {
            errs.push(format!("solver: {e}"));
        }
        let delta_of = |eps: f64, explicit: Option<f64>| explicit.or_else(|| delta_rule.map(|r| r.eval(eps)));
        let solver_delta = delta_of(so.eps, so.delta);
        if let Some(d) = so.delta {
            if !(d > 0.0) {
                errs.push(format!("solver.delta must be positive, got {d}"));
            }
        }

        let rc = &self.recover;
        let recover_policy = width_policy(&rc.width_policy, "recover", &mut errs);
        if !(rc.eps > 0.0) {
            errs.push(format!("recover.eps must be positive, got {}", rc.eps));
        }
        if !(rc.lambda > 0.0 && rc.lambda < 1.0) {
            errs.push(format!("recover.lambda must lie in (0,1), got {}", rc.lambda));
        }
        if rc.cells < 2 {
            errs.push("recover.cells must be at least 2".into());
        }
        let recover_delta = delta_of(rc.eps, rc.delta);

        // cross-field checks that need the geometry
        let mut out = None;
        if let (Some(p), Some(g), Some(rule), Some(sd), Some(rd)) =
            (potentials, geometry, delta_rule, solver_delta, recover_delta)
        {
            let sweep = SweepPlan {
                eps_schedule: sc.eps_schedule.clone(),
                delta_rule: rule,
                lambda: sc.lambda,
                geometry: g.clone(),
                grid_rule,
                width_policy: sweep_policy,
            };
            if let Err(e) = sweep.validate() {
                errs.push(format!("sweep: {e}"));
            }
            let both = g.has_interface_and_crack();
            let width_ok = |eps: f64, delta: f64, lambda: f64| eps / lambda.sqrt() <= lambda * delta;
            if both && sweep_policy == WidthPolicy::Enforce && sc.lambda > 0.0 {
                for &eps in &sc.eps_schedule {
                    let delta = rule.eval(eps);
                    if !width_ok(eps, delta, sc.lambda) {
                        errs.push(format!(
                            "sweep: width condition eps/sqrt(lambda) <= lambda*delta fails at eps = {eps}: {:.3e} > {:.3e}",
                            eps / sc.lambda.sqrt(),
                            sc.lambda * delta
                        ));
                    }
                }
            }
            if both && recover_policy == WidthPolicy::Enforce && !width_ok(rc.eps, rd, rc.lambda) {
                errs.push(format!(
                    "recover: width condition eps/sqrt(lambda) <= lambda*delta fails: {:.3e} > {:.3e}",
                    rc.eps / rc.lambda.sqrt(),
                    rc.lambda * rd
                ));
            }
            let solver_grid = grid_for(&g, so.cells).map_err(|e| errs.push(format!("solver: {e}")));
            let recover_grid = grid_for(&g, rc.cells).map_err(|e| errs.push(format!("recover: {e}")));
            if let (Ok(solver_grid), Ok(recover_grid)) = (solver_grid, recover_grid) {
                out = Some(Resolved {
                    potentials: p,
                    elastic,
                    geometry: g,
                    solver,
                    solver_grid,
                    solver_eps: so.eps,
                    solver_delta: sd,
                    sweep,
                    recover_grid,
                    recover: fracsep::RecoveryParams {
                        eps: rc.eps,
                        delta: rd,
                        lambda: rc.lambda,
                        width_policy: recover_policy,
                    },
                    admissibility_samples: pc.admissibility_samples,
                });
            }
        }
        match out {
            Some(r) if errs.is_empty() => Ok(r),
            _ => Err(ConfigError::Invalid(errs)),
        }
    }

    fn geometry_object(&self, errs: &mut Vec<String>) -> Option<SharpGeometry> {
        let g = &self.geometry;
        match g.dim {
            1 => {
                let mut stray = Vec::new();
                if g.origin.is_some() || g.extent.is_some() {
                    stray.push("origin/extent");
                }
                if !g.phase_polygon.is_empty() {
                    stray.push("phase_polygon");
                }
                if !g.cracks.is_empty() {
                    stray.push("cracks");
                }
                if g.displacement != DisplacementConfig::Zero {
                    stray.push("displacement");
                }
                if !stray.is_empty() {
                    errs.push(format!("geometry: {} only apply to dim = 2", stray.join(", ")));
                }
                let domain = g.domain.unwrap_or([0.0, 1.0]);
                SharpGeometry1D::compatible(
                    domain,
                    g.phase_points.clone(),
                    g.crack_points.clone(),
                    g.c_left,
                    self.elastic.e0[0],
                )
                .map(SharpGeometry::D1)
                .map_err(|e| errs.push(format!("geometry: {e}")))
                .ok()
            }
            2 => {
                if g.domain.is_some() || !g.phase_points.is_empty() || !g.crack_points.is_empty() {
                    errs.push("geometry: domain, phase_points and crack_points only apply to dim = 1".into());
                }
                let domain = Domain2D {
                    origin: g.origin.unwrap_or([0.0, 0.0]),
                    extent: g.extent.unwrap_or([1.0, 1.0]),
                };
                let a = Polygon::new(g.phase_polygon.clone()).map_err(|e| errs.push(format!("geometry.phase_polygon: {e}")));
                let m: Vec<Segment> = g.cracks.iter().map(|s| Segment::new(s[0], s[1])).collect();
                let u = match &g.displacement {
                    DisplacementConfig::Zero => Displacement::Zero,
                    DisplacementConfig::Affine { a, b } => Displacement::Affine { a: *a, b: *b },
                    DisplacementConfig::DefaultQuadratic => Displacement::default_quadratic(),
                    DisplacementConfig::Quadratic { a, hess } => Displacement::Quadratic { a: *a, hess: *hess },
                    DisplacementConfig::RigidSides { line, minus, plus } => Displacement::RigidSides {
                        line: Segment::new(line[0], line[1]),
                        minus: Rigid {
                            omega: minus.omega,
                            b: minus.b,
                        },
                        plus: Rigid {
                            omega: plus.omega,
                            b: plus.b,
                        },
                    },
                };
                let a = a.ok()?;
                SharpGeometry2D::new(domain, a, m, u)
                    .map(SharpGeometry::D2)
                    .map_err(|e| errs.push(format!("geometry: {e}")))
                    .ok()
            }
            d => {
                errs.push(format!("geometry.dim must be 1 or 2, got {d}"));
                None
            }
        }
    }
}
