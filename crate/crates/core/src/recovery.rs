//! Near-optimal one-dimensional transition profiles and the recovery-field
//! construction turning a sharp configuration into a diffuse state.
//!
//! For a well f and width parameter ε the profile is g = ζ⁻¹ with
//! ζ(s) = ∫₀^s ε/√(λ+f(t)) dt, extended by 0 for r < 0 and by 1 beyond ζ(1).
//! It satisfies g′ = √(λ+f(g))/ε on (0, ζ(1)).

use rayon::prelude::*;

use crate::energy::DiffuseState;
use crate::fields::{Grid, ScalarField, VectorField};
use crate::potentials::{PotentialSet, Well};
use crate::quadrature::{gauss5, CumulativeIntegral};
use crate::sharp::SharpGeometry;
use crate::{Error, Result};

/// Number of tabulation intervals of ζ on [0,1].
pub const ZETA_NODES: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileParams {
    pub lambda: f64,
    /// ε for the W-profile, δ for the V-profile.
    pub width: f64,
    pub well: Well,
}

impl ProfileParams {
    pub fn new(lambda: f64, width: f64, well: Well) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::OutOfRange(format!("lambda must lie in (0,1), got {lambda}")));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::OutOfRange(format!("profile width must be positive, got {width}")));
        }
        Ok(Self { lambda, width, well })
    }
}

type Integrand = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tabulated ζ with local Gauss–Legendre refinement and Newton/bisection
/// inversion.
pub struct OptimalProfile {
    params: ProfileParams,
    table: CumulativeIntegral<Integrand>,
}

impl std::fmt::Debug for OptimalProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OptimalProfile")
            .field("params", &self.params)
            .field("width", &self.width())
            .finish()
    }
}

impl OptimalProfile {
    pub fn new(pp: ProfileParams, p: &PotentialSet) -> Self {
        let pot = p.clone();
        let (eps, lambda, well) = (pp.width, pp.lambda, pp.well);
        Self::from_fn(pp, move |t| eps / (lambda + pot.eval(well, t)).sqrt())
    }

    /// Profile for an arbitrary nonnegative well given as ε/√(λ+f).
    fn from_fn(pp: ProfileParams, integrand: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let table = CumulativeIntegral::new(Box::new(integrand) as Integrand, 0.0, 1.0, ZETA_NODES);
        Self { params: pp, table }
    }

    pub fn params(&self) -> ProfileParams {
        self.params
    }

    /// ζ(1), the length of the transition.
    pub fn width(&self) -> f64 {
        self.table.total()
    }

    pub fn zeta(&self, s: f64) -> f64 {
        self.table.eval(s)
    }

    /// g(r): 0 for r < 0, 1 for r > ζ(1), ζ⁻¹(r) in between.
    pub fn g(&self, r: f64) -> f64 {
        if r <= 0.0 || r.is_nan() {
            0.0
        } else if r >= self.width() {
            1.0
        } else {
            self.table.inverse(r)
        }
    }

    /// g′(r) = √(λ + f(g(r)))/ε inside the transition, 0 outside.
    pub fn g_prime(&self, r: f64) -> f64 {
        if r <= 0.0 || r >= self.width() {
            0.0
        } else {
            1.0 / self.table.integrand(self.g(r))
        }
    }
}

/// ζ(s) for the given parameters.
pub fn zeta(pp: &ProfileParams, p: &PotentialSet, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::OutOfRange(format!("s must lie in [0,1], got {s}")));
    }
    Ok(OptimalProfile::new(*pp, p).zeta(s))
}

pub fn g_profile(op: &OptimalProfile, r: f64) -> f64 {
    op.g(r)
}

/// ∫₀^{ζ(1)} (f(g)/ε + ε g′²) dr, evaluated after the substitution r = ζ(s)
/// as ∫₀¹ (2f + λ)/√(λ + f) ds.
pub fn profile_energy_1d(pp: &ProfileParams, p: &PotentialSet) -> f64 {
    profile_energy_for(|s| p.eval(pp.well, s), pp.lambda)
}

/// [`profile_energy_1d`] for an arbitrary nonnegative well `f`.
pub fn profile_energy_for(f: impl Fn(f64) -> f64, lambda: f64) -> f64 {
    let n = ZETA_NODES;
    let h = 1.0 / n as f64;
    (0..n)
        .map(|k| {
            let a = k as f64 * h;
            gauss5(
                |s| {
                    let v = f(s);
                    (2.0 * v + lambda) / (lambda + v).sqrt()
                },
                a,
                a + h,
            )
        })
        .sum()
}

/// Width of an arbitrary well's profile, ∫₀¹ ε/√(λ+f).
pub fn zeta_for(f: impl Fn(f64) -> f64 + Send + Sync + 'static, lambda: f64, eps: f64, s: f64) -> f64 {
    let pp = ProfileParams {
        lambda,
        width: eps,
        well: Well::W,
    };
    OptimalProfile::from_fn(pp, move |t| eps / (lambda + f(t)).sqrt()).zeta(s)
}

/// Smoothstep cutoff 3t² − 2t³ clamped to [0,1].
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidthPolicy {
    /// Fail when ε/√λ > λδ.
    Enforce,
    /// Build anyway and report the violation.
    Report,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryParams {
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    pub width_policy: WidthPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryReport {
    /// ε/√λ
    pub profile_width: f64,
    /// λδ, the half-width of the fully damaged core
    pub plateau: f64,
    /// Whether the width condition applies (a phase boundary and a crack are both present).
    pub width_checked: bool,
    pub width_ok: bool,
    /// ζ(1) of the c-profile and the z-profile
    pub zeta_c: f64,
    pub zeta_z: f64,
}

/// Samples the recovery fields at cell centers:
///
/// - c = 1 − g_ε^W(dist(x, A)), which is 1 on A (W is symmetric under s ↦ 1 − s
///   for every built-in, so the reflected profile equals the W-profile),
/// - z = g_δ^V(dist(x, M) − λδ),
/// - u = u_sharp · ψ(dist(x, M)/(λδ)) with the smoothstep ψ.
pub fn build_recovery(
    geom: &SharpGeometry,
    rp: &RecoveryParams,
    grid: &Grid,
    p: &PotentialSet,
) -> Result<(DiffuseState, RecoveryReport)> {
    geom.validate()?;
    if geom.dim() != grid.dim() {
        return Err(Error::FieldMismatch(format!(
            "{}-dimensional geometry on a {}-dimensional grid",
            geom.dim(),
            grid.dim()
        )));
    }
    if !(rp.delta > 0.0) || !(rp.eps > 0.0) {
        return Err(Error::OutOfRange(format!(
            "eps and delta must be positive, got {} and {}",
            rp.eps, rp.delta
        )));
    }
    let prof_c = OptimalProfile::new(ProfileParams::new(rp.lambda, rp.eps, Well::W)?, p);
    let prof_z = OptimalProfile::new(ProfileParams::new(rp.lambda, rp.delta, Well::V)?, p);
    let profile_width = rp.eps / rp.lambda.sqrt();
    let plateau = rp.lambda * rp.delta;
    let width_checked = geom.has_interface_and_crack();
    let width_ok = profile_width <= plateau;
    let report = RecoveryReport {
        profile_width,
        plateau,
        width_checked,
        width_ok,
        zeta_c: prof_c.width(),
        zeta_z: prof_z.width(),
    };
    if width_checked && !width_ok && rp.width_policy == WidthPolicy::Enforce {
        return Err(Error::WidthCondition { profile_width, plateau });
    }

    let h = grid.spacing()[0].max(if grid.dim() == 2 { grid.spacing()[1] } else { 0.0 });
    let (has_interface, has_crack) = match geom {
        SharpGeometry::D1(g) => (!g.phase_points.is_empty(), !g.crack_points.is_empty()),
        SharpGeometry::D2(g) => (!g.a.is_empty(), !g.m.is_empty()),
    };
    if has_interface && prof_c.width() < 2.0 * h {
        return Err(Error::Unresolved { width: prof_c.width(), h });
    }
    if has_crack && prof_z.width() < 2.0 * h {
        return Err(Error::Unresolved { width: prof_z.width(), h });
    }

    let n = grid.len();
    let cells: Vec<(f64, f64, f64, [f64; 2])> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = grid.center(i);
            let (da, dm, us) = match geom {
                SharpGeometry::D1(g) => (g.phase_distance(x[0]), g.crack_distance(x[0]), [g.u_at(x[0]), 0.0]),
                SharpGeometry::D2(g) => (g.a.distance(x), crate::geometry::segments_distance(&g.m, x), g.u.eval(x)),
            };
            let c = 1.0 - prof_c.g(da);
            let z = prof_z.g(dm - plateau);
            let cut = if dm.is_finite() { smoothstep(dm / plateau) } else { 1.0 };
            (c, z, cut, [us[0] * cut, us[1] * cut])
        })
        .collect();

    let c = ScalarField::new(*grid, cells.iter().map(|v| v.0).collect())?;
    let z = ScalarField::new(*grid, cells.iter().map(|v| v.1).collect())?;
    let comps = (0..grid.dim()).map(|k| cells.iter().map(|v| v.3[k]).collect()).collect();
    let u = VectorField::new(*grid, comps)?;
    Ok((DiffuseState::new(c, u, z, rp.eps, rp.delta)?, report))
}
