//! Alternating minimization of the diffuse energy over (u, z, c).
//!
//! One outer sweep solves the quadratic u-problem by conjugate gradients,
//! then takes one Armijo-accepted projected descent step in z and one in c.
//! The z- and c-directions are preconditioned by `a·I + b·L` with `L` the
//! Neumann grid Laplacian, which matches the stiffest part of each block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{
    elastic_apply, elastic_weights, mass, project_mass, DiffuseFunctional, DiffuseState, ElasticModel,
    EnergyBreakdown, ElasticWeights,
};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::potentials::PotentialSet;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverPlan {
    pub max_outer: usize,
    /// Stop once the relative energy decrease of a sweep falls below this.
    pub tol_rel_energy: f64,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub step0: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    /// Keep mean(c) = μ₀ when set.
    pub mass_constraint: Option<f64>,
    pub seed: u64,
    /// Amplitude of the initial perturbation of c.
    pub jitter: f64,
}

impl Default for SolverPlan {
    fn default() -> Self {
        Self {
            max_outer: 1000,
            tol_rel_energy: 1e-8,
            cg_tol: 1e-10,
            cg_max_iters: 2000,
            step0: 1.0,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            max_backtracks: 60,
            mass_constraint: None,
            seed: 0,
            jitter: 1e-3,
        }
    }
}

impl SolverPlan {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.max_outer == 0 {
            bad.push("max_outer must be at least 1".to_string());
        }
        for (name, v) in [
            ("tol_rel_energy", self.tol_rel_energy),
            ("cg_tol", self.cg_tol),
            ("step0", self.step0),
        ] {
            if !pos(v) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        if self.cg_max_iters == 0 {
            bad.push("cg_max_iters must be at least 1".into());
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            bad.push(format!("backtrack_factor must lie in (0,1), got {}", self.backtrack_factor));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c <= 0.5) {
            bad.push(format!("armijo_c must lie in (0,1/2], got {}", self.armijo_c));
        }
        if let Some(m) = self.mass_constraint {
            if !m.is_finite() {
                bad.push("mass constraint must be finite".into());
            }
        }
        if !(self.jitter >= 0.0) || !self.jitter.is_finite() {
            bad.push(format!("jitter must be nonnegative, got {}", self.jitter));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Plan(bad.join("; ")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    U,
    Z,
    C,
}

impl Block {
    pub fn name(&self) -> &'static str {
        match self {
            Block::U => "u",
            Block::Z => "z",
            Block::C => "c",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlagKind {
    /// CG hit its iteration cap; the relative residual is attached.
    CgNotConverged(f64),
    /// The u-solve raised the energy and was discarded.
    Reverted,
    /// No step passed the Armijo test.
    NoStep,
    /// The projected gradient vanished; nothing to do.
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockFlag {
    pub block: Block,
    pub kind: FlagKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxOuter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: EnergyBreakdown,
    /// Energy after each completed sweep.
    pub sweeps: Vec<EnergyBreakdown>,
    /// (sweep index, flag) for every block that did not take a regular step.
    pub flags: Vec<(usize, BlockFlag)>,
    pub termination: Termination,
    /// Euclidean norms of the projected gradients at the final state, in the
    /// order c, u, z.
    pub grad_norms: [f64; 3],
    /// mean(c) after each sweep.
    pub mass: Vec<f64>,
}

impl Trajectory {
    pub fn final_energy(&self) -> EnergyBreakdown {
        self.sweeps.last().copied().unwrap_or(self.initial)
    }

    /// Energies with the starting value first.
    pub fn totals(&self) -> Vec<f64> {
        std::iter::once(self.initial.e_total)
            .chain(self.sweeps.iter().map(|e| e.e_total))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,e_phase,e_elastic,e_crack,e_total,mass\n");
        let m0 = self.mass.first().copied().unwrap_or(f64::NAN);
        let rows = std::iter::once((&self.initial, m0)).chain(self.sweeps.iter().zip(self.mass.iter().copied()));
        for (k, (e, m)) in rows.enumerate() {
            out.push_str(&format!(
                "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                e.e_phase, e.e_elastic, e.e_crack, e.e_total, m
            ));
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct CgOutcome {
    converged: bool,
    rel_res: f64,
}

/// Preconditioned CG for `A x = b` starting from `x`.
fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iters: usize,
) -> CgOutcome {
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r0 = norm(&r);
    if r0 == 0.0 {
        return CgOutcome { converged: true, rel_res: 0.0 };
    }
    let mut zv = vec![0.0; n];
    precond(&r, &mut zv);
    let mut p = zv.clone();
    let mut rz = dot(&r, &zv);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm(&r);
        if rn <= tol * r0 {
            return CgOutcome { converged: true, rel_res: rn / r0 };
        }
        precond(&r, &mut zv);
        let rz_new = dot(&r, &zv);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zv[i] + beta * p[i];
        }
    }
    CgOutcome {
        converged: false,
        rel_res: norm(&r) / r0,
    }
}

fn flatten(u: &VectorField) -> Vec<f64> {
    u.comps().iter().flatten().copied().collect()
}

fn unflatten(g: &Grid, v: &[f64]) -> VectorField {
    let n = g.len();
    let comps = v.chunks(n).map(<[f64]>::to_vec).collect();
    VectorField::new(*g, comps).expect("vector shape matches grid")
}

/// Exact solve of the 1D stiffness system for a zero-sum right-hand side:
/// the element fluxes follow by summation, the displacement increments by
/// dividing by the element stiffness. Returns the zero-mean solution.
fn solve_1d_stiffness(g: &Grid, m: &ElasticModel, ew: &ElasticWeights, r: &[f64], out: &mut [f64]) {
    let h = g.spacing()[0];
    let vol = g.cell_volume();
    let q = m.lame_lambda + 2.0 * m.lame_mu;
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let mut flux = 0.0;
    out[0] = 0.0;
    for e in 0..r.len() - 1 {
        flux += r[e] - mean;
        let k = 2.0 * vol * q * ew.w[e] / (h * h);
        out[e + 1] = out[e] - flux / k;
    }
    let shift = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v -= shift);
}

/// Diagonal of the 2D stiffness operator, components stacked.
fn stiffness_diagonal_2d(g: &Grid, m: &ElasticModel, ew: &ElasticWeights) -> Vec<f64> {
    let [nx, ny] = g.cells();
    let s = g.spacing();
    let vol = g.cell_volume();
    let n = g.len();
    let (l, mu) = (m.lame_lambda, m.lame_mu);
    let k0 = (l + 2.0 * mu) / (4.0 * s[0] * s[0]) + mu / (4.0 * s[1] * s[1]);
    let k1 = (l + 2.0 * mu) / (4.0 * s[1] * s[1]) + mu / (4.0 * s[0] * s[0]);
    let mut d = vec![0.0; 2 * n];
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let w = 2.0 * vol * ew.w[i * (ny - 1) + j];
            for c in [g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)] {
                d[c] += w * k0;
                d[n + c] += w * k1;
            }
        }
    }
    d
}

/// Solves ∇_u E = 0 for fixed c and z, warm-started at the current u.
pub fn minimize_u(
    s: &DiffuseState,
    p: &PotentialSet,
    m: &ElasticModel,
    plan: &SolverPlan,
) -> Result<(DiffuseState, Option<BlockFlag>)> {
    let _ = p;
    let g = *s.grid();
    let ew = elastic_weights(s, m);
    if ew.w.is_empty() {
        return Ok((s.clone(), None));
    }
    if let Some(e) = ew.w.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::OutOfRange(format!("elastic weight at element {e} is not positive")));
    }
    let zero_c = ElasticWeights {
        w: ew.w.clone(),
        c: vec![0.0; ew.c.len()],
    };
    let mut tmp = VectorField::zeros(g);
    let mut grad = VectorField::zeros(g);
    let e_old = elastic_apply(&g, m, &ew, &s.u, Some(&mut grad));
    // K u − b at u gives b = K u − grad
    elastic_apply(&g, m, &zero_c, &s.u, Some(&mut tmp));
    let b: Vec<f64> = flatten(&tmp).iter().zip(flatten(&grad)).map(|(k, gr)| k - gr).collect();

    let apply = |x: &[f64], out: &mut [f64]| {
        let mut o = VectorField::zeros(g);
        elastic_apply(&g, m, &zero_c, &unflatten(&g, x), Some(&mut o));
        out.copy_from_slice(&flatten(&o));
    };
    let mut x = flatten(&s.u);
    let outcome = if g.dim() == 1 {
        pcg(
            apply,
            |r, out| solve_1d_stiffness(&g, m, &ew, r, out),
            &b,
            &mut x,
            plan.cg_tol,
            plan.cg_max_iters,
        )
    } else {
        let d = stiffness_diagonal_2d(&g, m, &ew);
        pcg(
            apply,
            |r, out| {
                for i in 0..r.len() {
                    out[i] = r[i] / d[i];
                }
            },
            &b,
            &mut x,
            plan.cg_tol,
            plan.cg_max_iters,
        )
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("displacement after CG".into()));
    }
    let u_new = unflatten(&g, &x);
    let e_new = elastic_apply(&g, m, &ew, &u_new, None);
    if e_new > e_old {
        return Ok((
            s.clone(),
            Some(BlockFlag {
                block: Block::U,
                kind: FlagKind::Reverted,
            }),
        ));
    }
    let mut out = s.clone();
    out.u = u_new;
    let flag = (!outcome.converged).then_some(BlockFlag {
        block: Block::U,
        kind: FlagKind::CgNotConverged(outcome.rel_res),
    });
    Ok((out, flag))
}

/// The Neumann Laplacian weighted by 1/h² per axis, applied to x.
fn laplacian(g: &Grid, x: &[f64], out: &mut [f64]) {
    let [nx, ny] = g.cells();
    let s = g.spacing();
    out.iter_mut().for_each(|v| *v = 0.0);
    for ix in 0..nx {
        for iy in 0..ny {
            let i = g.index(ix, iy);
            if ix + 1 < nx {
                let j = g.index(ix + 1, iy);
                let f = (x[i] - x[j]) / (s[0] * s[0]);
                out[i] += f;
                out[j] -= f;
            }
            if g.dim() == 2 && iy + 1 < ny {
                let j = g.index(ix, iy + 1);
                let f = (x[i] - x[j]) / (s[1] * s[1]);
                out[i] += f;
                out[j] -= f;
            }
        }
    }
}

/// Solves (a·I + b·L) x = r.
fn sobolev_solve(g: &Grid, a: f64, b: f64, r: &[f64]) -> Vec<f64> {
    let n = r.len();
    if g.dim() == 1 {
        // Thomas algorithm
        let h2 = g.spacing()[0].powi(2);
        let off = -b / h2;
        let diag = |i: usize| {
            let deg = if n == 1 { 0.0 } else if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            a + b * deg / h2
        };
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = off / diag(0);
        dp[0] = r[0] / diag(0);
        for i in 1..n {
            let den = diag(i) - off * cp[i - 1];
            cp[i] = off / den;
            dp[i] = (r[i] - off * dp[i - 1]) / den;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        return x;
    }
    let s = g.spacing();
    let dmax = a + b * (4.0 / (s[0] * s[0]) + 4.0 / (s[1] * s[1])) / 2.0;
    let mut x: Vec<f64> = r.iter().map(|v| v / dmax).collect();
    pcg(
        |v, out| {
            laplacian(g, v, out);
            for i in 0..n {
                out[i] = a * v[i] + b * out[i];
            }
        },
        |v, out| {
            for i in 0..n {
                out[i] = v[i] / dmax;
            }
        },
        r,
        &mut x,
        1e-10,
        500,
    );
    x
}

fn project_zero_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

struct LineSearch<'a> {
    f: DiffuseFunctional<'a>,
    plan: &'a SolverPlan,
}

impl LineSearch<'_> {
    /// Armijo backtracking along `dir` from `x0`, mapping each trial through
    /// `project`. Returns the accepted state and its energy.
    fn run(
        &self,
        s: &DiffuseState,
        e0: f64,
        grad: &[f64],
        dir: &[f64],
        block: Block,
        project: impl Fn(f64) -> f64,
    ) -> Result<Option<(DiffuseState, f64)>> {
        let x0 = match block {
            Block::Z => s.z.values(),
            Block::C => s.c.values(),
            Block::U => unreachable!("u is solved directly"),
        };
        let mut alpha = self.plan.step0;
        let mut trial = s.clone();
        for _ in 0..=self.plan.max_backtracks {
            let vals = match block {
                Block::Z => trial.z.values_mut(),
                _ => trial.c.values_mut(),
            };
            let mut slope = 0.0;
            for i in 0..x0.len() {
                vals[i] = project(x0[i] + alpha * dir[i]);
                slope += grad[i] * (vals[i] - x0[i]);
            }
            if slope >= 0.0 {
                alpha *= self.plan.backtrack_factor;
                continue;
            }
            match self.f.energy(&trial) {
                Ok(e) if e.e_total <= e0 + self.plan.armijo_c * slope => return Ok(Some((trial, e.e_total))),
                Ok(_) | Err(Error::NonFinite(_)) => {}
                Err(e) => return Err(e),
            }
            alpha *= self.plan.backtrack_factor;
        }
        Ok(None)
    }
}

/// One projected, preconditioned descent step in z on [0,1].
pub fn minimize_z(
    s: &DiffuseState,
    p: &PotentialSet,
    m: &ElasticModel,
    plan: &SolverPlan,
) -> Result<(DiffuseState, Option<BlockFlag>)> {
    let f = DiffuseFunctional::new(p, m)?;
    let (e, gr) = f.energy_and_gradients(s)?;
    let g = *s.grid();
    let vol = g.cell_volume();
    let z = s.z.values();
    let grad = gr.z.into_values();
    // components pushing out of the box at an active bound are irrelevant
    let free: Vec<bool> = z
        .iter()
        .zip(&grad)
        .map(|(&z, &d)| !((z <= 0.0 && d > 0.0) || (z >= 1.0 && d < 0.0)))
        .collect();
    let pg: f64 = grad.iter().zip(&free).filter(|(_, f)| **f).map(|(d, _)| d * d).sum();
    let flag = |kind| Some(BlockFlag { block: Block::Z, kind });
    if pg == 0.0 {
        return Ok((s.clone(), flag(FlagKind::Stationary)));
    }
    let (a, b) = (2.0 / s.delta, 2.0 * s.delta);
    let scaled: Vec<f64> = grad.iter().map(|v| -v / vol).collect();
    let ls = LineSearch { f, plan };
    let clamp = |v: f64| v.clamp(0.0, 1.0);
    let dir = sobolev_solve(&g, a, b, &scaled);
    if let Some((t, _)) = ls.run(s, e.e_total, &grad, &dir, Block::Z, clamp)? {
        return Ok((t, None));
    }
    // plain projected gradient is always a descent direction
    let dir: Vec<f64> = scaled.iter().map(|v| v / a).collect();
    match ls.run(s, e.e_total, &grad, &dir, Block::Z, clamp)? {
        Some((t, _)) => Ok((t, None)),
        None => Ok((s.clone(), flag(FlagKind::NoStep))),
    }
}

/// One preconditioned descent step in c; with a mass constraint the step
/// has zero mean and the result is re-centered on μ₀.
pub fn minimize_c(
    s: &DiffuseState,
    p: &PotentialSet,
    m: &ElasticModel,
    plan: &SolverPlan,
) -> Result<(DiffuseState, Option<BlockFlag>)> {
    let f = DiffuseFunctional::new(p, m)?;
    let (e, gr) = f.energy_and_gradients(s)?;
    let g = *s.grid();
    let vol = g.cell_volume();
    let mut grad = gr.c.into_values();
    if plan.mass_constraint.is_some() {
        project_zero_mean(&mut grad);
    }
    let flag = |kind| Some(BlockFlag { block: Block::C, kind });
    if grad.iter().all(|v| *v == 0.0) {
        return Ok((s.clone(), flag(FlagKind::Stationary)));
    }
    let e0 = m.e0;
    let misfit = if g.dim() == 1 { m.quad([e0[0], 0.0, 0.0]) } else { m.quad(e0) };
    let (a, b) = (2.0 / s.eps + 2.0 * misfit, 2.0 * s.eps);
    let scaled: Vec<f64> = grad.iter().map(|v| -v / vol).collect();
    let ls = LineSearch { f, plan };
    let mut accepted = None;
    for dir in [sobolev_solve(&g, a, b, &scaled), scaled.iter().map(|v| v / a).collect()] {
        let mut dir = dir;
        if plan.mass_constraint.is_some() {
            project_zero_mean(&mut dir);
        }
        if let Some((t, _)) = ls.run(s, e.e_total, &grad, &dir, Block::C, |v| v)? {
            accepted = Some(t);
            break;
        }
    }
    match accepted {
        Some(mut t) => {
            if let Some(mu0) = plan.mass_constraint {
                t.c = project_mass(&t.c, mu0);
            }
            Ok((t, None))
        }
        None => Ok((s.clone(), flag(FlagKind::NoStep))),
    }
}

/// Low-mode cosine perturbation with max |·| = 1 (before mass projection).
fn cosine_jitter(g: &Grid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const MODES: usize = 8;
    let mut coef = |_: usize| -> Vec<f64> {
        (1..=MODES)
            .map(|k| {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                sign * rng.gen_range(0.5..1.0) / (k * k) as f64
            })
            .collect()
    };
    let ax = coef(0);
    let ay = if g.dim() == 2 { coef(1) } else { vec![0.0; MODES] };
    let o = g.origin();
    let ext = g.extent();
    let mut v: Vec<f64> = (0..g.len())
        .map(|i| {
            let x = g.center(i);
            let (tx, ty) = ((x[0] - o[0]) / ext[0], (x[1] - o[1]) / ext[1]);
            let mut s = 0.0;
            for k in 0..MODES {
                let kf = (k + 1) as f64 * std::f64::consts::PI;
                s += ax[k] * (kf * tx).cos() + ay[k] * (kf * ty).cos();
            }
            s
        })
        .collect();
    let mx = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if mx > 0.0 {
        v.iter_mut().for_each(|x| *x /= mx);
    }
    v
}

/// Default starting state: c = μ₀ (or 1/2) plus a seeded perturbation of
/// amplitude `plan.jitter`, z ≡ 1, u ≡ 0.
pub fn initial_state(grid: Grid, eps: f64, delta: f64, plan: &SolverPlan) -> Result<DiffuseState> {
    plan.validate()?;
    let mu0 = plan.mass_constraint.unwrap_or(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let j = cosine_jitter(&grid, &mut rng);
    let c = ScalarField::new(grid, j.iter().map(|v| mu0 + plan.jitter * v).collect())?;
    let c = project_mass(&c, mu0);
    DiffuseState::new(c, VectorField::zeros(grid), ScalarField::constant(grid, 1.0), eps, delta)
}

fn grad_norms(s: &DiffuseState, f: &DiffuseFunctional<'_>, plan: &SolverPlan) -> Result<[f64; 3]> {
    let (_, g) = f.energy_and_gradients(s)?;
    let mut gc = g.c.into_values();
    if plan.mass_constraint.is_some() {
        project_zero_mean(&mut gc);
    }
    let gz: Vec<f64> = s
        .z
        .values()
        .iter()
        .zip(g.z.values())
        .map(|(&z, &d)| if (z <= 0.0 && d > 0.0) || (z >= 1.0 && d < 0.0) { 0.0 } else { d })
        .collect();
    Ok([norm(&gc), norm(&flatten(&g.u)), norm(&gz)])
}

/// Runs u → z → c sweeps from `s0` until the relative decrease of a sweep
/// drops below `tol_rel_energy` or `max_outer` sweeps have run. z is
/// projected onto [0,1] and, in mass mode, c is shifted onto the constraint
/// before the first sweep.
pub fn alternate(
    s0: &DiffuseState,
    p: &PotentialSet,
    m: &ElasticModel,
    plan: &SolverPlan,
) -> Result<(DiffuseState, Trajectory)> {
    plan.validate()?;
    let f = DiffuseFunctional::new(p, m)?;
    let mut s = s0.clone();
    s.z.values_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    if let Some(mu0) = plan.mass_constraint {
        s.c = project_mass(&s.c, mu0);
    }
    let initial = f.energy(&s)?;
    let mut traj = Trajectory {
        initial,
        sweeps: Vec::new(),
        flags: Vec::new(),
        termination: Termination::MaxOuter,
        grad_norms: [0.0; 3],
        mass: vec![mass(&s.c)],
    };
    let mut e_prev = initial.e_total;
    for k in 0..plan.max_outer {
        for block in [Block::U, Block::Z, Block::C] {
            let (next, flag) = match block {
                Block::U => minimize_u(&s, p, m, plan)?,
                Block::Z => minimize_z(&s, p, m, plan)?,
                Block::C => minimize_c(&s, p, m, plan)?,
            };
            s = next;
            if let Some(fl) = flag {
                traj.flags.push((k, fl));
            }
        }
        let e = f.energy(&s)?;
        traj.sweeps.push(e);
        traj.mass.push(mass(&s.c));
        let dec = e_prev - e.e_total;
        let rel = if e_prev > 0.0 { dec / e_prev } else { 0.0 };
        e_prev = e.e_total;
        if rel < plan.tol_rel_energy {
            traj.termination = Termination::Converged;
            break;
        }
    }
    traj.grad_norms = grad_norms(&s, &f, plan)?;
    Ok((s, traj))
}
