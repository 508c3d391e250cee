//! Discrete diffuse energy
//!
//! ```text
//! E = ∫ φ_δ(z) (W(c)/ε + ε|∇c|²) + ∫ (ψ(z)+η) ℂ(e(u) − c e₀) + ∫ (V(z)/δ + δ|∇z|²)
//! ```
//!
//! on a cell-centered grid, together with its exact gradients.
//!
//! Cell terms (W, V) use the midpoint rule. Dirichlet terms use two-point
//! differences across interior faces, weighted by the face mean of φ_δ(z).
//! The strain is evaluated on interior faces in 1D and at interior vertices
//! from the surrounding 2×2 cells in 2D, with weight and misfit concentration
//! taken as the mean over the adjacent cells.

use crate::fields::{Grid, ScalarField, VectorField};
use crate::potentials::PotentialSet;
use crate::{Error, Result};

/// Elastic degradation ψ(z).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degradation {
    /// ψ(z) = z²
    Quadratic,
    /// ψ(z) = z
    Linear,
}

impl Degradation {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Degradation::Quadratic => z * z,
            Degradation::Linear => z,
        }
    }
    pub fn deriv(&self, z: f64) -> f64 {
        match self {
            Degradation::Quadratic => 2.0 * z,
            Degradation::Linear => 1.0,
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            Degradation::Quadratic => "quadratic",
            Degradation::Linear => "linear",
        }
    }
}

/// η(δ) = k·δ^p with p > 1, so that η/δ → 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaRule {
    pub k: f64,
    pub p: f64,
}

impl EtaRule {
    pub fn eval(&self, delta: f64) -> f64 {
        self.k * delta.powf(self.p)
    }
}

impl Default for EtaRule {
    fn default() -> Self {
        Self { k: 1.0, p: 2.0 }
    }
}

/// Isotropic elasticity ℂξ:ξ = λ(tr ξ)² + 2μ|ξ|² with misfit strain e₀.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticModel {
    pub lame_lambda: f64,
    pub lame_mu: f64,
    /// Misfit strain as [xx, yy, xy]; only xx is used in 1D.
    pub e0: [f64; 3],
    pub degradation: Degradation,
    pub eta: EtaRule,
}

impl Default for ElasticModel {
    /// λ = 0, μ = 1/2 (so ℂξ:ξ = |ξ|²), e₀ = 0, ψ(z) = z², η = δ².
    fn default() -> Self {
        Self {
            lame_lambda: 0.0,
            lame_mu: 0.5,
            e0: [0.0; 3],
            degradation: Degradation::Quadratic,
            eta: EtaRule::default(),
        }
    }
}

impl ElasticModel {
    pub fn with_e0(mut self, e0: [f64; 3]) -> Self {
        self.e0 = e0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !ok(self.lame_mu) || self.lame_mu <= 0.0 {
            return Err(Error::OutOfRange(format!("lame_mu must be positive, got {}", self.lame_mu)));
        }
        if !ok(self.lame_lambda) || self.lame_lambda < 0.0 {
            return Err(Error::OutOfRange(format!(
                "lame_lambda must be nonnegative, got {}",
                self.lame_lambda
            )));
        }
        if self.e0.iter().any(|v| !ok(*v)) {
            return Err(Error::NonFinite("misfit strain e0".into()));
        }
        if !ok(self.eta.k) || self.eta.k <= 0.0 || !ok(self.eta.p) || self.eta.p <= 1.0 {
            return Err(Error::OutOfRange(format!(
                "eta rule needs k > 0 and p > 1, got k = {}, p = {}",
                self.eta.k, self.eta.p
            )));
        }
        Ok(())
    }

    /// ℂξ:ξ for ξ = [xx, yy, xy].
    #[inline]
    pub fn quad(&self, x: [f64; 3]) -> f64 {
        let tr = x[0] + x[1];
        self.lame_lambda * tr * tr + 2.0 * self.lame_mu * (x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2])
    }

    /// Partial derivatives of [`ElasticModel::quad`] in xx, yy, xy.
    #[inline]
    pub fn quad_grad(&self, x: [f64; 3]) -> [f64; 3] {
        let tr = x[0] + x[1];
        let l = 2.0 * self.lame_lambda * tr;
        [
            l + 4.0 * self.lame_mu * x[0],
            l + 4.0 * self.lame_mu * x[1],
            8.0 * self.lame_mu * x[2],
        ]
    }

    fn e0_for(&self, dim: usize) -> [f64; 3] {
        if dim == 1 {
            [self.e0[0], 0.0, 0.0]
        } else {
            self.e0
        }
    }
}

/// The triplet (c, u, z) together with ε and δ.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffuseState {
    pub c: ScalarField,
    pub u: VectorField,
    pub z: ScalarField,
    pub eps: f64,
    pub delta: f64,
}

impl DiffuseState {
    pub fn new(c: ScalarField, u: VectorField, z: ScalarField, eps: f64, delta: f64) -> Result<Self> {
        let s = Self { c, u, z, eps, delta };
        s.validate()?;
        Ok(s)
    }

    /// Constant c and z, zero displacement.
    pub fn uniform(grid: Grid, c: f64, z: f64, eps: f64, delta: f64) -> Result<Self> {
        Self::new(
            ScalarField::constant(grid, c),
            VectorField::zeros(grid),
            ScalarField::constant(grid, z),
            eps,
            delta,
        )
    }

    pub fn grid(&self) -> &Grid {
        self.c.grid()
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.grid() != self.c.grid() || self.z.grid() != self.c.grid() {
            return Err(Error::FieldMismatch("c, u and z must share one grid".into()));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() || !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::OutOfRange(format!(
                "eps and delta must be positive, got {} and {}",
                self.eps, self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub e_phase: f64,
    pub e_elastic: f64,
    pub e_crack: f64,
    pub e_total: f64,
    /// Cells whose z lay outside [0,1] and were clamped for evaluation.
    pub clamped: usize,
}

impl EnergyBreakdown {
    pub fn new(e_phase: f64, e_elastic: f64, e_crack: f64) -> Self {
        Self {
            e_phase,
            e_elastic,
            e_crack,
            e_total: e_phase + e_elastic + e_crack,
            clamped: 0,
        }
    }
}

/// Gradients of the discrete energy with respect to all nodal values.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub c: ScalarField,
    pub u: VectorField,
    pub z: ScalarField,
}

/// Per-element weights of the elastic term: ψ(z)+η and the misfit
/// concentration, one entry per interior face (1D) or vertex (2D).
#[derive(Clone, Debug)]
pub(crate) struct ElasticWeights {
    pub w: Vec<f64>,
    pub c: Vec<f64>,
}

#[inline]
fn clampz(z: f64) -> (f64, bool) {
    if z < 0.0 {
        (0.0, true)
    } else if z > 1.0 {
        (1.0, true)
    } else {
        (z, false)
    }
}

/// Number of strain elements: interior faces (1D) or interior vertices (2D).
pub(crate) fn element_count(g: &Grid) -> usize {
    let [nx, ny] = g.cells();
    if g.dim() == 1 {
        nx - 1
    } else {
        (nx - 1) * (ny - 1)
    }
}

/// Cells surrounding element `e` (2 in 1D, 4 in 2D: (i,j), (i+1,j), (i,j+1), (i+1,j+1)).
#[inline]
fn element_cells(g: &Grid, e: usize) -> ([usize; 4], usize) {
    let [_, ny] = g.cells();
    if g.dim() == 1 {
        ([e, e + 1, 0, 0], 2)
    } else {
        let (i, j) = (e / (ny - 1), e % (ny - 1));
        (
            [g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)],
            4,
        )
    }
}

/// Strain of `u` at element `e` as [xx, yy, xy].
#[inline]
fn element_strain(g: &Grid, u: &VectorField, e: usize) -> [f64; 3] {
    let (cells, _) = element_cells(g, e);
    let s = g.spacing();
    if g.dim() == 1 {
        let u0 = u.comp(0);
        return [(u0[cells[1]] - u0[cells[0]]) / s[0], 0.0, 0.0];
    }
    let [a, b, c, d] = cells;
    let dx = |f: &[f64]| (f[b] + f[d] - f[a] - f[c]) / (2.0 * s[0]);
    let dy = |f: &[f64]| (f[c] + f[d] - f[a] - f[b]) / (2.0 * s[1]);
    let (u0, u1) = (u.comp(0), u.comp(1));
    [dx(u0), dy(u1), 0.5 * (dy(u0) + dx(u1))]
}

pub(crate) fn elastic_weights(s: &DiffuseState, m: &ElasticModel) -> ElasticWeights {
    let g = s.grid();
    let eta = m.eta.eval(s.delta);
    let ne = element_count(g);
    let mut w = Vec::with_capacity(ne);
    let mut c = Vec::with_capacity(ne);
    let (zv, cv) = (s.z.values(), s.c.values());
    for e in 0..ne {
        let (cells, k) = element_cells(g, e);
        let mut ws = 0.0;
        let mut cs = 0.0;
        for &i in &cells[..k] {
            ws += m.degradation.eval(clampz(zv[i]).0);
            cs += cv[i];
        }
        w.push(ws / k as f64 + eta);
        c.push(cs / k as f64);
    }
    ElasticWeights { w, c }
}

/// Elastic energy for fixed weights and its gradient in u. With all misfit
/// concentrations zero the gradient is the stiffness operator applied to u.
pub(crate) fn elastic_apply(
    g: &Grid,
    m: &ElasticModel,
    ew: &ElasticWeights,
    u: &VectorField,
    grad: Option<&mut VectorField>,
) -> f64 {
    let e0 = m.e0_for(g.dim());
    let vol = g.cell_volume();
    let s = g.spacing();
    let ne = element_count(g);
    let mut total = 0.0;
    let mut grad = grad;
    if let Some(gr) = grad.as_deref_mut() {
        for c in gr.comps_mut() {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    for e in 0..ne {
        let eps = element_strain(g, u, e);
        let x = [eps[0] - ew.c[e] * e0[0], eps[1] - ew.c[e] * e0[1], eps[2] - ew.c[e] * e0[2]];
        total += ew.w[e] * m.quad(x);
        if let Some(gr) = grad.as_deref_mut() {
            let sg = m.quad_grad(x);
            let f = vol * ew.w[e];
            let (cells, _) = element_cells(g, e);
            if g.dim() == 1 {
                let t = f * sg[0] / s[0];
                gr.comp_mut(0)[cells[1]] += t;
                gr.comp_mut(0)[cells[0]] -= t;
            } else {
                let [a, b, c, d] = cells;
                // ∂/∂(∂x u0) = σxx, ∂/∂(∂y u1) = σyy, ∂/∂(∂y u0) = ∂/∂(∂x u1) = σxy/2
                let g0x = f * sg[0] / (2.0 * s[0]);
                let g0y = f * 0.5 * sg[2] / (2.0 * s[1]);
                let g1x = f * 0.5 * sg[2] / (2.0 * s[0]);
                let g1y = f * sg[1] / (2.0 * s[1]);
                for (k, gx, gy) in [(0usize, g0x, g0y), (1usize, g1x, g1y)] {
                    let out = gr.comp_mut(k);
                    out[a] += -gx - gy;
                    out[b] += gx - gy;
                    out[c] += -gx + gy;
                    out[d] += gx + gy;
                }
            }
        }
    }
    vol * total
}

/// Interior faces as (cell, neighbor, spacing along the face normal).
fn for_each_face(g: &Grid, mut f: impl FnMut(usize, usize, f64)) {
    let [nx, ny] = g.cells();
    let s = g.spacing();
    for ix in 0..nx {
        for iy in 0..ny {
            let i = g.index(ix, iy);
            if ix + 1 < nx {
                f(i, g.index(ix + 1, iy), s[0]);
            }
            if g.dim() == 2 && iy + 1 < ny {
                f(i, g.index(ix, iy + 1), s[1]);
            }
        }
    }
}

fn nonfinite(what: &str, i: usize, v: f64) -> Error {
    Error::NonFinite(format!("{what} at cell {i}: {v}"))
}

fn assemble(
    s: &DiffuseState,
    p: &PotentialSet,
    m: &ElasticModel,
    want_grad: bool,
) -> Result<(EnergyBreakdown, Option<Gradients>)> {
    s.validate()?;
    let g = *s.grid();
    let n = g.len();
    let vol = g.cell_volume();
    let (eps, delta) = (s.eps, s.delta);
    let cd = p.c_delta(delta);
    let (cv, zv) = (s.c.values(), s.z.values());

    let mut clamped = 0;
    let mut pd = vec![0.0; n];
    let mut dpd = vec![0.0; n];
    let mut zc = vec![0.0; n];
    for i in 0..n {
        let (z, was) = clampz(zv[i]);
        clamped += was as usize;
        zc[i] = z;
        pd[i] = p.phi(z) + cd;
        dpd[i] = if was { 0.0 } else { p.dphi(z) };
    }

    let mut gc = vec![0.0; if want_grad { n } else { 0 }];
    let mut gz = vec![0.0; if want_grad { n } else { 0 }];

    let mut phase = 0.0;
    let mut crack = 0.0;
    for i in 0..n {
        let wc = p.w(cv[i]);
        let vz = p.v(zc[i]);
        let tp = pd[i] * wc / eps;
        let tc = vz / delta;
        if !tp.is_finite() {
            return Err(nonfinite("phase term", i, tp));
        }
        if !tc.is_finite() {
            return Err(nonfinite("crack term", i, tc));
        }
        phase += tp;
        crack += tc;
        if want_grad {
            gc[i] += vol * pd[i] * p.dw(cv[i]) / eps;
            gz[i] += vol * dpd[i] * wc / eps;
            if zv[i] >= 0.0 && zv[i] <= 1.0 {
                gz[i] += vol * p.dv(zc[i]) / delta;
            }
        }
    }

    let mut bad: Option<Error> = None;
    for_each_face(&g, |i, j, h| {
        let dc = (cv[j] - cv[i]) / h;
        let dz = (zv[j] - zv[i]) / h;
        let wf = 0.5 * (pd[i] + pd[j]);
        let tp = wf * eps * dc * dc;
        let tc = delta * dz * dz;
        if bad.is_none() && !(tp.is_finite() && tc.is_finite()) {
            bad = Some(nonfinite("gradient term", i, tp + tc));
        }
        phase += tp;
        crack += tc;
        if want_grad {
            let a = vol * wf * eps * 2.0 * dc / h;
            gc[j] += a;
            gc[i] -= a;
            let b = vol * delta * 2.0 * dz / h;
            gz[j] += b;
            gz[i] -= b;
            let q = vol * 0.5 * eps * dc * dc;
            gz[i] += q * dpd[i];
            gz[j] += q * dpd[j];
        }
    });
    if let Some(e) = bad {
        return Err(e);
    }

    // elastic term
    let ew = elastic_weights(s, m);
    let e0 = m.e0_for(g.dim());
    let mut gu = if want_grad { Some(VectorField::zeros(g)) } else { None };
    let elastic = elastic_apply(&g, m, &ew, &s.u, gu.as_mut());
    if !elastic.is_finite() {
        for e in 0..element_count(&g) {
            let st = element_strain(&g, &s.u, e);
            if !st.iter().all(|v| v.is_finite()) || !ew.w[e].is_finite() {
                let (cells, _) = element_cells(&g, e);
                return Err(nonfinite("elastic term", cells[0], f64::NAN));
            }
        }
        return Err(Error::NonFinite("elastic term".into()));
    }
    if want_grad {
        for e in 0..element_count(&g) {
            let st = element_strain(&g, &s.u, e);
            let x = [st[0] - ew.c[e] * e0[0], st[1] - ew.c[e] * e0[1], st[2] - ew.c[e] * e0[2]];
            let q = m.quad(x);
            let sg = m.quad_grad(x);
            let dc = -(sg[0] * e0[0] + sg[1] * e0[1] + sg[2] * e0[2]);
            let (cells, k) = element_cells(&g, e);
            let kf = k as f64;
            for &i in &cells[..k] {
                gc[i] += vol * ew.w[e] * dc / kf;
                if zv[i] >= 0.0 && zv[i] <= 1.0 {
                    gz[i] += vol * m.degradation.deriv(zc[i]) / kf * q;
                }
            }
        }
    }

    let br = EnergyBreakdown {
        clamped,
        ..EnergyBreakdown::new(vol * phase, elastic, vol * crack)
    };
    let grads = if want_grad {
        Some(Gradients {
            c: ScalarField::new(g, gc)?,
            u: gu.unwrap(),
            z: ScalarField::new(g, gz)?,
        })
    } else {
        None
    };
    Ok((br, grads))
}

/// Evaluates the discrete energy. Works with any built-in potential,
/// including non-differentiable ones.
pub fn diffuse_energy(s: &DiffuseState, p: &PotentialSet, m: &ElasticModel) -> Result<EnergyBreakdown> {
    m.validate()?;
    Ok(assemble(s, p, m, false)?.0)
}

/// Energy together with its gradients. Construction fails when a configured
/// potential has no usable derivative.
#[derive(Clone, Copy, Debug)]
pub struct DiffuseFunctional<'a> {
    pub potentials: &'a PotentialSet,
    pub elastic: &'a ElasticModel,
}

impl<'a> DiffuseFunctional<'a> {
    pub fn new(potentials: &'a PotentialSet, elastic: &'a ElasticModel) -> Result<Self> {
        potentials.is_differentiable().map_err(Error::NotDifferentiable)?;
        elastic.validate()?;
        Ok(Self { potentials, elastic })
    }

    pub fn energy(&self, s: &DiffuseState) -> Result<EnergyBreakdown> {
        Ok(assemble(s, self.potentials, self.elastic, false)?.0)
    }

    pub fn energy_and_gradients(&self, s: &DiffuseState) -> Result<(EnergyBreakdown, Gradients)> {
        let (e, g) = assemble(s, self.potentials, self.elastic, true)?;
        Ok((e, g.expect("gradients requested")))
    }

    pub fn grad_c(&self, s: &DiffuseState) -> Result<ScalarField> {
        Ok(self.energy_and_gradients(s)?.1.c)
    }

    pub fn grad_u(&self, s: &DiffuseState) -> Result<VectorField> {
        Ok(self.energy_and_gradients(s)?.1.u)
    }

    pub fn grad_z(&self, s: &DiffuseState) -> Result<ScalarField> {
        Ok(self.energy_and_gradients(s)?.1.z)
    }
}

/// Mean of c over the domain.
pub fn mass(c: &ScalarField) -> f64 {
    crate::fields::integrate(c) / c.grid().volume()
}

/// Shifts c by the constant μ₀ − mean(c).
pub fn project_mass(c: &ScalarField, mu0: f64) -> ScalarField {
    let shift = mu0 - mass(c);
    let mut out = c.clone();
    out.values_mut().iter_mut().for_each(|v| *v += shift);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{make_default_potentials, surface_density};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(grid: Grid, seed: u64) -> DiffuseState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.len();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..1.2)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let u: Vec<Vec<f64>> = (0..grid.dim())
            .map(|_| (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect())
            .collect();
        DiffuseState::new(
            ScalarField::new(grid, c).unwrap(),
            VectorField::new(grid, u).unwrap(),
            ScalarField::new(grid, z).unwrap(),
            0.1,
            0.2,
        )
        .unwrap()
    }

    #[test]
    fn global_minimizer_has_zero_energy_and_gradient() {
        let p = make_default_potentials();
        let m = ElasticModel::default();
        for dim in [1, 2] {
            let g = Grid::unit(dim, 8).unwrap();
            let s = DiffuseState::uniform(g, 0.0, 1.0, 0.1, 0.1).unwrap();
            let f = DiffuseFunctional::new(&p, &m).unwrap();
            let (e, gr) = f.energy_and_gradients(&s).unwrap();
            assert_eq!(e.e_total, 0.0);
            assert!(gr.c.values().iter().all(|v| *v == 0.0));
            assert!(gr.z.values().iter().all(|v| *v == 0.0));
            assert!(gr.u.comps().iter().flatten().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn matched_misfit_has_zero_energy() {
        let p = make_default_potentials();
        let m = ElasticModel::default().with_e0([1.0, 0.0, 0.0]);
        let g = Grid::unit(1, 32).unwrap();
        let s = DiffuseState::new(
            ScalarField::constant(g, 1.0),
            VectorField::from_fn(g, |x| [x[0], 0.0]),
            ScalarField::constant(g, 1.0),
            0.1,
            0.1,
        )
        .unwrap();
        let e = diffuse_energy(&s, &p, &m).unwrap();
        assert!(e.e_elastic.abs() < 1e-25 && e.e_crack == 0.0 && e.e_phase == 0.0);
    }

    #[test]
    fn components_nonnegative_and_total_consistent() {
        let p = make_default_potentials();
        let m = ElasticModel::default().with_e0([0.3, -0.2, 0.1]);
        for seed in 0..10 {
            let s = random_state(Grid::unit(2, 6).unwrap(), seed);
            let e = diffuse_energy(&s, &p, &m).unwrap();
            assert!(e.e_phase >= 0.0 && e.e_elastic >= 0.0 && e.e_crack >= 0.0);
            assert_eq!(e.e_total, e.e_phase + e.e_elastic + e.e_crack);
        }
    }

    #[test]
    fn nondifferentiable_potential_rejected_at_construction() {
        use crate::potentials::*;
        let p = PotentialSet::new(
            DoubleWell::AbsProduct { scale: 1.0 },
            SingleWell::Quadratic { scale: 1.0 },
            Phi::Geodesic,
            CDeltaRule::default(),
        )
        .unwrap();
        let m = ElasticModel::default();
        assert!(matches!(DiffuseFunctional::new(&p, &m), Err(Error::NotDifferentiable("abs_product"))));
        let s = random_state(Grid::unit(1, 8).unwrap(), 1);
        assert!(diffuse_energy(&s, &p, &m).is_ok());
    }

    fn fd_check(s: &DiffuseState, f: &DiffuseFunctional) -> f64 {
        let (_, gr) = f.energy_and_gradients(s).unwrap();
        let scale = gr
            .c
            .values()
            .iter()
            .chain(gr.z.values())
            .chain(gr.u.comps().iter().flatten())
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .max(1e-12);
        let mut worst = 0.0f64;
        let n = s.grid().len();
        let probe = |st: &DiffuseState| f.energy(st).unwrap().e_total;
        for i in 0..n {
            for block in 0..3 {
                let mut sp = s.clone();
                let mut sm = s.clone();
                let (vp, vm, exact) = match block {
                    0 => (&mut sp.c.values_mut()[i], &mut sm.c.values_mut()[i], gr.c.values()[i]),
                    1 => (&mut sp.z.values_mut()[i], &mut sm.z.values_mut()[i], gr.z.values()[i]),
                    _ => (&mut sp.u.comp_mut(0)[i], &mut sm.u.comp_mut(0)[i], gr.u.comp(0)[i]),
                };
                let h = 1e-6 * (1.0 + vp.abs());
                *vp += h;
                *vm -= h;
                let fd = (probe(&sp) - probe(&sm)) / (2.0 * h);
                worst = worst.max((fd - exact).abs() / scale);
            }
        }
        worst
    }

    #[test]
    fn gradients_match_central_differences_1d() {
        let p = make_default_potentials();
        let m = ElasticModel::default().with_e0([0.7, 0.0, 0.0]);
        let f = DiffuseFunctional::new(&p, &m).unwrap();
        for seed in 0..5 {
            let s = random_state(Grid::unit(1, 64).unwrap(), seed);
            assert!(fd_check(&s, &f) < 1e-5);
        }
    }

    #[test]
    fn gradients_match_central_differences_2d() {
        let p = make_default_potentials();
        let m = ElasticModel {
            lame_lambda: 0.8,
            lame_mu: 0.6,
            e0: [0.4, -0.3, 0.2],
            ..ElasticModel::default()
        };
        let f = DiffuseFunctional::new(&p, &m).unwrap();
        let s = random_state(Grid::unit(2, 6).unwrap(), 9);
        assert!(fd_check(&s, &f) < 1e-5);
        // second displacement component
        let (_, gr) = f.energy_and_gradients(&s).unwrap();
        for i in [0, 7, 20, 35] {
            let mut sp = s.clone();
            let mut sm = s.clone();
            sp.u.comp_mut(1)[i] += 1e-6;
            sm.u.comp_mut(1)[i] -= 1e-6;
            let fd = (f.energy(&sp).unwrap().e_total - f.energy(&sm).unwrap().e_total) / 2e-6;
            assert!((fd - gr.u.comp(1)[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn grad_u_is_affine_in_u() {
        let p = make_default_potentials();
        let m = ElasticModel::default().with_e0([0.5, 0.1, -0.2]);
        let f = DiffuseFunctional::new(&p, &m).unwrap();
        let g = Grid::unit(2, 5).unwrap();
        let s1 = random_state(g, 3);
        let s2 = random_state(g, 4);
        let mut sum = s1.clone();
        for k in 0..2 {
            for (a, b) in sum.u.comp_mut(k).iter_mut().zip(s2.u.comp(k)) {
                *a += b;
            }
        }
        let mut s_2 = s1.clone();
        s_2.u = s2.u.clone();
        let mut zero = s1.clone();
        zero.u = VectorField::zeros(g);
        let (a, b, c, d) = (
            f.grad_u(&sum).unwrap(),
            f.grad_u(&s1).unwrap(),
            f.grad_u(&s_2).unwrap(),
            f.grad_u(&zero).unwrap(),
        );
        for k in 0..2 {
            for i in 0..g.len() {
                let r = b.comp(k)[i] + c.comp(k)[i] - d.comp(k)[i];
                assert!((a.comp(k)[i] - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phase_term_monotone_in_z() {
        let p = make_default_potentials();
        let m = ElasticModel::default();
        for seed in 0..10 {
            let s = random_state(Grid::unit(1, 32).unwrap(), seed);
            let mut t = s.clone();
            t.z.values_mut().iter_mut().for_each(|v| *v = (*v + 0.1).min(1.0));
            let (a, b) = (diffuse_energy(&s, &p, &m).unwrap(), diffuse_energy(&t, &p, &m).unwrap());
            assert!(b.e_phase >= a.e_phase);
        }
    }

    #[test]
    fn undamaged_elastic_energy_scales_with_one_plus_eta() {
        let p = make_default_potentials();
        let m = ElasticModel::default().with_e0([1.0, 0.0, 0.0]);
        let g = Grid::unit(1, 16).unwrap();
        let mut s = random_state(g, 2);
        s.z = ScalarField::constant(g, 1.0);
        let e = diffuse_energy(&s, &p, &m).unwrap().e_elastic;
        // undegraded energy from an independent face loop
        let h = g.h();
        let (u, c) = (s.u.comp(0), s.c.values());
        let mut raw = 0.0;
        for i in 0..15 {
            let x = (u[i + 1] - u[i]) / h - 0.5 * (c[i] + c[i + 1]);
            raw += h * x * x;
        }
        let eta = s.delta * s.delta;
        assert!((e - (1.0 + eta) * raw).abs() < 1e-12 * e.max(1.0));
    }

    #[test]
    fn clamping_is_audited() {
        let p = make_default_potentials();
        let m = ElasticModel::default();
        let g = Grid::unit(1, 8).unwrap();
        let mut s = DiffuseState::uniform(g, 0.0, 1.0, 0.1, 0.1).unwrap();
        s.z.values_mut()[2] = 1.3;
        s.z.values_mut()[5] = -0.1;
        assert_eq!(diffuse_energy(&s, &p, &m).unwrap().clamped, 2);
    }

    #[test]
    fn nonfinite_names_the_cell() {
        let p = make_default_potentials();
        let m = ElasticModel::default();
        let g = Grid::unit(1, 8).unwrap();
        let mut s = DiffuseState::uniform(g, 0.0, 1.0, 0.1, 0.1).unwrap();
        s.c.values_mut()[3] = 1e200;
        let err = diffuse_energy(&s, &p, &m).unwrap_err().to_string();
        assert!(err.contains("cell 3"), "{err}");
    }

    #[test]
    fn mass_and_projection() {
        let g = Grid::unit(2, 8).unwrap();
        let c = ScalarField::constant(g, 0.4);
        assert!((mass(&c) - 0.4).abs() < 1e-15);
        assert!(project_mass(&c, 0.4).values().iter().all(|v| (v - 0.4).abs() < 1e-15));
        let z = ScalarField::constant(g, 0.0);
        assert!(project_mass(&z, 0.3).values().iter().all(|v| (v - 0.3).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = ScalarField::new(g, (0..64).map(|_| rng.gen::<f64>()).collect()).unwrap();
        assert!((mass(&project_mass(&r, 0.5)) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn tanh_like_profile_energy_near_surface_density() {
        // c = optimal W-profile of the λ → 0 limit: c = 1/(1+exp(-x/ε))
        let p = make_default_potentials();
        let m = ElasticModel::default();
        let eps = 1.0 / 256.0;
        let g = Grid::unit(1, 1 << 14).unwrap();
        let c = ScalarField::from_fn(g, |x| 1.0 / (1.0 + (-(x[0] - 0.5) / eps).exp()));
        let s = DiffuseState::new(c, VectorField::zeros(g), ScalarField::constant(g, 1.0), eps, 1e-3).unwrap();
        let e = diffuse_energy(&s, &p, &m).unwrap();
        let target = surface_density(&p).unwrap() * (1.0 + 1e-3);
        assert!((e.e_phase - target).abs() < 1e-3 * target, "{} vs {}", e.e_phase, target);
    }
}
