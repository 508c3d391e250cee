//! Γ-convergence sweeps over an ε-schedule, CSV reporting, and diagnostics:
//! the geodesic inequality, the level-set selection used for compactness,
//! and the slicing identity.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{diffuse_energy, ElasticModel, EnergyBreakdown};
use crate::fields::{slice_extract, Grid, ScalarField, SliceSource, VectorField};
use crate::potentials::{geodesic_transform, PotentialSet, Well};
use crate::quadrature::{gauss5_mean_nodes, CumulativeIntegral};
use crate::recovery::{build_recovery, RecoveryParams, WidthPolicy};
use crate::sharp::{Displacement, SharpGeometry};
use crate::{Error, Result};

/// δ(ε) = k·ε^p with 0 < p < 1, so that ε/δ → 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaRule {
    pub k: f64,
    pub p: f64,
}

impl DeltaRule {
    pub const SQRT: DeltaRule = DeltaRule { k: 1.0, p: 0.5 };
    pub const TWO_THIRDS: DeltaRule = DeltaRule { k: 1.0, p: 2.0 / 3.0 };

    pub fn eval(&self, eps: f64) -> f64 {
        self.k * eps.powf(self.p)
    }

    /// Parses `eps^a/b`, `eps^x` or `k*eps^...`.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (k, rest) = match t.split_once('*') {
            Some((k, r)) => (
                k.parse::<f64>().map_err(|e| Error::Parse(format!("delta rule factor `{k}`: {e}")))?,
                r,
            ),
            None => (1.0, t.as_str()),
        };
        let exp = rest
            .strip_prefix("eps^")
            .ok_or_else(|| Error::Parse(format!("delta rule `{s}` must look like `eps^p` or `k*eps^p`")))?;
        let p = match exp.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.parse().map_err(|e| Error::Parse(format!("exponent `{exp}`: {e}")))?;
                let b: f64 = b.parse().map_err(|e| Error::Parse(format!("exponent `{exp}`: {e}")))?;
                a / b
            }
            None => exp.parse().map_err(|e| Error::Parse(format!("exponent `{exp}`: {e}")))?,
        };
        let r = Self { k, p };
        r.validate()?;
        Ok(r)
    }

    /// ε/δ must tend to zero and δ must vanish: 0 < p < 1, k > 0.
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(Error::Plan(format!("delta rule factor must be positive, got {}", self.k)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Plan(format!(
                "delta rule exponent {} violates eps/delta -> 0 with delta -> 0 (need 0 < p < 1)",
                self.p
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let exp = if (self.p - 0.5).abs() < 1e-15 {
            "1/2".to_string()
        } else if (self.p - 2.0 / 3.0).abs() < 1e-15 {
            "2/3".to_string()
        } else {
            format!("{}", self.p)
        };
        if self.k == 1.0 {
            write!(f, "eps^{exp}")
        } else {
            write!(f, "{}*eps^{exp}", self.k)
        }
    }
}

/// Cells per axis as a function of ε.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridRule {
    Fixed { cells: usize },
    /// Smallest power of two with at least `per_eps/ε` cells, clamped to [min, max].
    PerEps { per_eps: f64, min: usize, max: usize },
}

impl GridRule {
    pub fn cells(&self, eps: f64) -> usize {
        match *self {
            GridRule::Fixed { cells } => cells,
            GridRule::PerEps { per_eps, min, max } => {
                let want = (per_eps / eps).ceil().max(2.0) as usize;
                want.next_power_of_two().clamp(min, max)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPlan {
    pub eps_schedule: Vec<f64>,
    pub delta_rule: DeltaRule,
    pub lambda: f64,
    pub geometry: SharpGeometry,
    pub grid_rule: GridRule,
    pub width_policy: WidthPolicy,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.delta_rule.validate()?;
        if self.eps_schedule.is_empty() {
            return Err(Error::Plan("eps schedule is empty".into()));
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Plan("eps schedule must be positive".into()));
        }
        for w in self.eps_schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Plan(format!("eps schedule must be strictly decreasing: {} then {}", w[0], w[1])));
            }
            let (r0, r1) = (w[0] / self.delta_rule.eval(w[0]), w[1] / self.delta_rule.eval(w[1]));
            if !(r1 < r0) {
                return Err(Error::Plan(format!("eps/delta must decrease along the schedule: {r0} then {r1}")));
            }
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Plan(format!("lambda must lie in (0,1), got {}", self.lambda)));
        }
        self.geometry.validate()
    }

    pub fn grid_for(&self, eps: f64) -> Result<Grid> {
        let n = self.grid_rule.cells(eps);
        match &self.geometry {
            SharpGeometry::D1(g) => Grid::new_1d(g.domain[0], g.domain[1] - g.domain[0], n),
            SharpGeometry::D2(g) => Grid::new_2d(g.domain.origin, g.domain.extent, [n, n]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    /// Built, but ε/√λ > λδ with both an interface and a crack present.
    WidthViolated,
    Error(String),
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowStatus::Ok => write!(f, "ok"),
            RowStatus::WidthViolated => write!(f, "width_violated"),
            RowStatus::Error(m) => write!(f, "error:{}", m.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub delta: f64,
    pub cells: usize,
    pub energy: Option<EnergyBreakdown>,
    pub e_sharp: f64,
    pub rel_err: Option<f64>,
    pub status: RowStatus,
}

impl SweepRow {
    pub fn eps_over_delta(&self) -> f64 {
        self.eps / self.delta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub e_sharp: EnergyBreakdown,
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str = "eps,delta,e_phase,e_elastic,e_crack,e_total,e_sharp,rel_err,status";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let nan = || "NaN".to_string();
            let (p, e, c, t) = match r.energy {
                Some(b) => (num(b.e_phase), num(b.e_elastic), num(b.e_crack), num(b.e_total)),
                None => (nan(), nan(), nan(), nan()),
            };
            let rel = r.rel_err.map(num).unwrap_or_else(nan);
            let _ = writeln!(
                out,
                "{},{},{p},{e},{c},{t},{},{rel},{}",
                num(r.eps),
                num(r.delta),
                num(r.e_sharp),
                r.status
            );
        }
        out
    }
}

/// (e_total − e_sharp)/max(e_sharp, 1e-12)
pub fn relative_error(e_total: f64, e_sharp: f64) -> f64 {
    (e_total - e_sharp) / e_sharp.max(1e-12)
}

/// Builds the recovery state for every ε, evaluates its energy and compares
/// with the sharp energy. Rows run in parallel and are returned in schedule
/// order; a failing row is recorded and the sweep continues.
pub fn gamma_sweep(plan: &SweepPlan, p: &PotentialSet, m: &ElasticModel) -> Result<SweepTable> {
    plan.validate()?;
    let sharp = plan.geometry.energy(p, m)?;
    let rows = plan
        .eps_schedule
        .par_iter()
        .map(|&eps| {
            let delta = plan.delta_rule.eval(eps);
            let cells = plan.grid_rule.cells(eps);
            let mut row = SweepRow {
                eps,
                delta,
                cells,
                energy: None,
                e_sharp: sharp.e_total,
                rel_err: None,
                status: RowStatus::Ok,
            };
            let run = || -> Result<(EnergyBreakdown, bool)> {
                let grid = plan.grid_for(eps)?;
                let rp = RecoveryParams {
                    eps,
                    delta,
                    lambda: plan.lambda,
                    width_policy: plan.width_policy,
                };
                let (state, rep) = build_recovery(&plan.geometry, &rp, &grid, p)?;
                let e = diffuse_energy(&state, p, m)?;
                Ok((e, rep.width_checked && !rep.width_ok))
            };
            match run() {
                Ok((e, violated)) => {
                    row.energy = Some(e);
                    row.rel_err = Some(relative_error(e.e_total, sharp.e_total));
                    if violated {
                        row.status = RowStatus::WidthViolated;
                    }
                }
                Err(e) => row.status = RowStatus::Error(e.to_string()),
            }
            row
        })
        .collect();
    Ok(SweepTable { e_sharp: sharp, rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Compares the total variation of d_f∘w with ∫(f(w)/ε + ε|w′|²) for the
/// piecewise-linear interpolant of a 1D field between cell centers. Both
/// sides use the same five Gauss nodes on each face, so Young's inequality
/// holds node by node.
pub fn geodesic_inequality_check(w: &ScalarField, f: Well, eps: f64, p: &PotentialSet) -> Result<GeodesicCheck> {
    let g = w.grid();
    if g.dim() != 1 {
        return Err(Error::OutOfRange("geodesic inequality check needs a 1D field".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::OutOfRange(format!("eps must be positive, got {eps}")));
    }
    let h = g.h();
    let cap = p.cap(f);
    let v = w.values();
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..v.len() - 1 {
        let (a, b) = (v[i], v[i + 1]);
        let d = b - a;
        let (mut l, mut r) = (0.0, 0.0);
        for (x, wt) in gauss5_mean_nodes(a, b) {
            let fx = p.eval(f, x).max(0.0);
            l += wt * 2.0 * fx.min(cap).sqrt() * d.abs();
            r += wt * (h * fx / eps + eps * d * d / h);
        }
        lhs += l;
        rhs += r;
    }
    Ok(GeodesicCheck { lhs, rhs, slack: rhs - lhs })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetOptions {
    pub thresholds: usize,
    /// Relative allowance of the perimeter over the coarea bound.
    pub slack: f64,
}

impl Default for LevelSetOptions {
    fn default() -> Self {
        Self {
            thresholds: 257,
            slack: 0.2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetDiagnostic {
    /// Selected level of z, in (1/4, 3/4).
    pub t_star: f64,
    /// The same level in d_V units.
    pub t_tilde_star: f64,
    pub perimeter_estimate: f64,
    /// TV(d_V∘z)/(d_V(3/4) − d_V(1/4))
    pub bound: f64,
    pub tv: f64,
    pub holds: bool,
}

/// Table of d_V on [0,1].
fn d_v_table(p: &PotentialSet) -> CumulativeIntegral<impl Fn(f64) -> f64 + '_> {
    let cap = p.cap_v();
    CumulativeIntegral::new(move |s: f64| 2.0 * p.v(s).min(cap).max(0.0).sqrt(), 0.0, 1.0, 1 << 12)
}

fn for_each_face(g: &Grid, mut f: impl FnMut(usize, usize, f64)) {
    let [nx, ny] = g.cells();
    let s = g.spacing();
    // face measure h^{d-1}: the spacing along the other axis in 2D, 1 in 1D
    let (ax, ay) = if g.dim() == 1 { (1.0, 0.0) } else { (s[1], s[0]) };
    for ix in 0..nx {
        for iy in 0..ny {
            let i = g.index(ix, iy);
            if ix + 1 < nx {
                f(i, g.index(ix + 1, iy), ax);
            }
            if g.dim() == 2 && iy + 1 < ny {
                f(i, g.index(ix, iy + 1), ay);
            }
        }
    }
}

/// Scans levels t of (1/4, 3/4), estimates the perimeter of {z > t} by face
/// counting, and compares the smallest one with the coarea bound.
pub fn compactness_levelset_diagnostic(
    z: &ScalarField,
    p: &PotentialSet,
    opts: &LevelSetOptions,
) -> Result<LevelSetDiagnostic> {
    if let Some(i) = z.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::OutOfRange(format!("z at cell {i} is outside [0,1]")));
    }
    if opts.thresholds < 1 {
        return Err(Error::OutOfRange("need at least one threshold".into()));
    }
    let g = *z.grid();
    let table = d_v_table(p);
    let dz: Vec<f64> = z.values().par_iter().map(|&v| table.eval(v)).collect();
    let mut tv = 0.0;
    for_each_face(&g, |i, j, a| tv += (dz[j] - dz[i]).abs() * a);
    let span = table.eval(0.75) - table.eval(0.25);
    let bound = tv / span;

    let zv = z.values();
    let n = opts.thresholds;
    let levels: Vec<f64> = (0..n).map(|k| 0.25 + 0.5 * (k as f64 + 0.5) / n as f64).collect();
    let perims: Vec<f64> = levels
        .par_iter()
        .map(|&t| {
            let mut per = 0.0;
            for_each_face(&g, |i, j, a| {
                if (zv[i] > t) != (zv[j] > t) {
                    per += a;
                }
            });
            per
        })
        .collect();
    let (k, &per) = perims
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let t_star = levels[k];
    Ok(LevelSetDiagnostic {
        t_star,
        t_tilde_star: geodesic_transform(Well::V, p, t_star),
        perimeter_estimate: per,
        bound,
        tv,
        holds: per <= bound * (1.0 + opts.slack),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicingCheck {
    /// Largest error of the sliced difference quotient against ⟨e(u)ξ, ξ⟩,
    /// relative to max(1, max |⟨e(u)ξ, ξ⟩|).
    pub max_error: f64,
    pub h: f64,
    /// max_error / h
    pub constant: f64,
    pub directions: usize,
}

/// Samples `u` on the grid, slices it along random lines y + tξ and compares
/// the difference quotient of the sliced values with ⟨e(u)ξ, ξ⟩ at the
/// midpoints.
pub fn slicing_identity_check(u: &Displacement, grid: &Grid, directions: usize, seed: u64) -> Result<SlicingCheck> {
    if grid.dim() != 2 {
        return Err(Error::OutOfRange("slicing check needs a 2D grid".into()));
    }
    if directions == 0 {
        return Err(Error::OutOfRange("need at least one direction".into()));
    }
    let field = VectorField::from_fn(*grid, |x| u.eval(x));
    let h = grid.h();
    let o = grid.origin();
    let e = grid.extent();
    let center = [o[0] + 0.5 * e[0], o[1] + 0.5 * e[1]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let xi = [a.cos(), a.sin()];
        let perp = [-xi[1], xi[0]];
        let s = perp[0] * center[0] + perp[1] * center[1] + rng.gen_range(-0.25..0.25) * e[0].min(e[1]);
        let y = [s * perp[0], s * perp[1]];
        let samples = ((e[0].hypot(e[1]) / h).ceil() as usize + 1).max(3);
        let sl = slice_extract(SliceSource::Vector(&field), xi, y, samples)?;
        if sl.missed {
            continue;
        }
        let (tm, dq) = sl.derivative();
        let exact: Vec<f64> = tm
            .iter()
            .map(|&t| {
                let x = [y[0] + t * xi[0], y[1] + t * xi[1]];
                let st = u.strain(x);
                st[0] * xi[0] * xi[0] + 2.0 * st[2] * xi[0] * xi[1] + st[1] * xi[1] * xi[1]
            })
            .collect();
        let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (d, x) in dq.iter().zip(&exact) {
            worst = worst.max((d - x).abs() / scale);
        }
    }
    Ok(SlicingCheck {
        max_error: worst,
        h,
        constant: worst / h,
        directions,
    })
}
