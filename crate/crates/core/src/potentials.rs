//! Scalar potentials W (double well), V (single well), the interfacial
//! degradation φ, the weight φ_δ = φ + C_δ, geodesic transforms and the
//! surface/fracture densities.

use crate::quadrature::simpson;
use crate::{Error, Result};

/// Double-well potential W with wells at 0 and 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DoubleWell {
    /// `scale · s²(1−s)²`
    Quartic { scale: f64 },
    /// `scale · |s(1−s)|`; continuous but not differentiable at the wells.
    AbsProduct { scale: f64 },
}

impl DoubleWell {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            DoubleWell::Quartic { scale } => scale * (s * (1.0 - s)).powi(2),
            DoubleWell::AbsProduct { scale } => scale * (s * (1.0 - s)).abs(),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match *self {
            DoubleWell::Quartic { scale } => scale * 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
            DoubleWell::AbsProduct { scale } => {
                let p = s * (1.0 - s);
                scale * p.signum() * (1.0 - 2.0 * s)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DoubleWell::Quartic { .. } => "quartic",
            DoubleWell::AbsProduct { .. } => "abs_product",
        }
    }

    pub fn is_differentiable(&self) -> bool {
        matches!(self, DoubleWell::Quartic { .. })
    }
}

/// Single-well potential V vanishing only at 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingleWell {
    /// `scale · (1−s)²`
    Quadratic { scale: f64 },
    /// `scale · (1−s)` on [0,1], `scale · |1−s|` outside
    Linear { scale: f64 },
}

impl SingleWell {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            SingleWell::Quadratic { scale } => scale * (1.0 - s).powi(2),
            SingleWell::Linear { scale } => scale * (1.0 - s).abs(),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match *self {
            SingleWell::Quadratic { scale } => -2.0 * scale * (1.0 - s),
            SingleWell::Linear { scale } => -scale * (1.0 - s).signum(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SingleWell::Quadratic { .. } => "quadratic",
            SingleWell::Linear { .. } => "linear",
        }
    }

    pub fn is_differentiable(&self) -> bool {
        matches!(self, SingleWell::Quadratic { .. })
    }
}

/// Degradation φ of the interfacial density, before the θ offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phi {
    /// `∫₀^m √V / ∫₀¹ √V` for the configured V (`2m − m²` for quadratic V).
    Geodesic,
    /// `m`
    Linear,
    /// `φ ≡ 1`, i.e. no degradation (violates φ(0) = 0).
    One,
}

impl Phi {
    pub fn name(&self) -> &'static str {
        match self {
            Phi::Geodesic => "geodesic",
            Phi::Linear => "linear",
            Phi::One => "one",
        }
    }
}

/// Rule δ ↦ C_δ = k·δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CDeltaRule {
    pub k: f64,
}

impl CDeltaRule {
    pub fn eval(&self, delta: f64) -> f64 {
        self.k * delta
    }
}

impl Default for CDeltaRule {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

/// Selects which potential a profile or transform is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Well {
    W,
    V,
}

const CAP_SAMPLES: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSet {
    w: DoubleWell,
    v: SingleWell,
    phi: Phi,
    theta: f64,
    c_delta: CDeltaRule,
    coercivity: f64,
    quadrature_nodes: usize,
    cap_w: f64,
    cap_v: f64,
}

pub fn make_default_potentials() -> PotentialSet {
    PotentialSet::new(
        DoubleWell::Quartic { scale: 1.0 },
        SingleWell::Quadratic { scale: 1.0 },
        Phi::Geodesic,
        CDeltaRule::default(),
    )
    .expect("default potentials are finite")
}

fn sampled_sup(f: impl Fn(f64) -> f64) -> f64 {
    (0..=CAP_SAMPLES)
        .map(|k| f(k as f64 / CAP_SAMPLES as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

impl PotentialSet {
    pub fn new(w: DoubleWell, v: SingleWell, phi: Phi, c_delta: CDeltaRule) -> Result<Self> {
        let mut p = Self {
            w,
            v,
            phi,
            theta: 0.0,
            c_delta,
            coercivity: 4.0,
            quadrature_nodes: 1 << 12,
            cap_w: 0.0,
            cap_v: 0.0,
        };
        p.refresh_caps()?;
        Ok(p)
    }

    fn refresh_caps(&mut self) -> Result<()> {
        let (w, v) = (self.w, self.v);
        self.cap_w = sampled_sup(|s| w.eval(s));
        self.cap_v = sampled_sup(|s| v.eval(s));
        if !self.cap_w.is_finite() || !self.cap_v.is_finite() {
            return Err(Error::NonFinite("potential cap on [0,1]".into()));
        }
        if !(self.c_delta.k > 0.0) || !self.c_delta.k.is_finite() {
            return Err(Error::OutOfRange(format!(
                "C_delta factor must be positive, got {}",
                self.c_delta.k
            )));
        }
        Ok(())
    }

    /// Offset φ to θ + (1−θ)φ; θ ∈ [0,1].
    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::OutOfRange(format!("theta must lie in [0,1], got {theta}")));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn with_coercivity(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::OutOfRange(format!("coercivity constant must be positive, got {c}")));
        }
        self.coercivity = c;
        Ok(self)
    }

    pub fn with_quadrature_nodes(mut self, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::OutOfRange(format!("quadrature_nodes must be >= 2, got {n}")));
        }
        self.quadrature_nodes = n;
        Ok(self)
    }

    pub fn double_well(&self) -> DoubleWell {
        self.w
    }
    pub fn single_well(&self) -> SingleWell {
        self.v
    }
    pub fn phi_kind(&self) -> Phi {
        self.phi
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn c_delta_rule(&self) -> CDeltaRule {
        self.c_delta
    }
    pub fn coercivity(&self) -> f64 {
        self.coercivity
    }
    pub fn quadrature_nodes(&self) -> usize {
        self.quadrature_nodes
    }
    pub fn cap_w(&self) -> f64 {
        self.cap_w
    }
    pub fn cap_v(&self) -> f64 {
        self.cap_v
    }

    pub fn cap(&self, f: Well) -> f64 {
        match f {
            Well::W => self.cap_w,
            Well::V => self.cap_v,
        }
    }

    pub fn w(&self, s: f64) -> f64 {
        self.w.eval(s)
    }
    pub fn dw(&self, s: f64) -> f64 {
        self.w.deriv(s)
    }
    pub fn v(&self, s: f64) -> f64 {
        self.v.eval(s)
    }
    pub fn dv(&self, s: f64) -> f64 {
        self.v.deriv(s)
    }

    pub fn eval(&self, f: Well, s: f64) -> f64 {
        match f {
            Well::W => self.w(s),
            Well::V => self.v(s),
        }
    }

    fn phi_raw(&self, m: f64) -> f64 {
        match self.phi {
            Phi::Geodesic => match self.v {
                SingleWell::Quadratic { .. } => 2.0 * m - m * m,
                SingleWell::Linear { .. } => 1.0 - (1.0 - m).max(0.0).powf(1.5),
            },
            Phi::Linear => m,
            Phi::One => 1.0,
        }
    }

    fn dphi_raw(&self, m: f64) -> f64 {
        match self.phi {
            Phi::Geodesic => match self.v {
                SingleWell::Quadratic { .. } => 2.0 - 2.0 * m,
                SingleWell::Linear { .. } => 1.5 * (1.0 - m).max(0.0).sqrt(),
            },
            Phi::Linear => 1.0,
            Phi::One => 0.0,
        }
    }

    /// φ(m) including the θ offset.
    pub fn phi(&self, m: f64) -> f64 {
        self.theta + (1.0 - self.theta) * self.phi_raw(m)
    }

    pub fn dphi(&self, m: f64) -> f64 {
        (1.0 - self.theta) * self.dphi_raw(m)
    }

    pub fn c_delta(&self, delta: f64) -> f64 {
        self.c_delta.eval(delta)
    }

    /// True when W, V and φ all have derivatives usable by the gradient code.
    pub fn is_differentiable(&self) -> std::result::Result<(), &'static str> {
        if !self.w.is_differentiable() {
            return Err(self.w.name());
        }
        if !self.v.is_differentiable() {
            return Err(self.v.name());
        }
        Ok(())
    }
}

/// φ_δ(z) = φ(z) + C_δ.
pub fn phi_delta(p: &PotentialSet, delta: f64, z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::OutOfRange(format!("z must lie in [0,1], got {z}")));
    }
    if !(delta > 0.0) {
        return Err(Error::OutOfRange(format!("delta must be positive, got {delta}")));
    }
    Ok(p.phi(z) + p.c_delta(delta))
}

fn checked_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, what: &str) -> Result<f64> {
    let v = simpson(f, a, b, n);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("quadrature of {what}")))
    }
}

/// α_surf = 2∫₀¹√W.
pub fn surface_density(p: &PotentialSet) -> Result<f64> {
    Ok(2.0 * checked_integral(|s| p.w(s).sqrt(), 0.0, 1.0, p.quadrature_nodes, "sqrt(W)")?)
}

/// α_frac = 4∫₀¹√V.
pub fn fracture_density(p: &PotentialSet) -> Result<f64> {
    Ok(4.0 * checked_integral(|s| p.v(s).sqrt(), 0.0, 1.0, p.quadrature_nodes, "sqrt(V)")?)
}

/// d_f(t) = 2∫₀^t √min{f, M} with M the sup of f on [0,1].
pub fn geodesic_transform(f: Well, p: &PotentialSet, t: f64) -> f64 {
    let cap = p.cap(f);
    let g = |s: f64| p.eval(f, s).min(cap).max(0.0).sqrt();
    let n = p.quadrature_nodes;
    let (lo, hi) = if t < 0.0 { (t, 0.0) } else { (0.0, t) };
    // split where the integrand may have a kink: 0, 1 and where f meets the cap
    let mut knots = vec![lo, hi];
    if lo < 1.0 && 1.0 < hi {
        knots.push(1.0);
    }
    for (a, b) in [(lo, 0.0), (1.0, hi)] {
        knots.extend(cap_crossings(|s| p.eval(f, s) - cap, a, b));
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            let panels = ((n as f64 * (w[1] - w[0])).ceil() as usize).max(2);
            total += simpson(g, w[0], w[1], panels);
        }
    }
    2.0 * total.copysign(t)
}

/// Sign changes of `h` on [a, b], located by bisection.
fn cap_crossings(h: impl Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    const SCAN: usize = 64;
    let mut out = Vec::new();
    if !(b > a) {
        return out;
    }
    let x = |k: usize| a + (b - a) * k as f64 / SCAN as f64;
    for k in 0..SCAN {
        let (mut l, mut r) = (x(k), x(k + 1));
        if (h(l) > 0.0) == (h(r) > 0.0) {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (l + r);
            if (h(m) > 0.0) == (h(l) > 0.0) {
                l = m;
            } else {
                r = m;
            }
        }
        out.push(0.5 * (l + r));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest sampled value of the quantity required to be nonnegative
    /// (or positive for strict conditions).
    pub worst_margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub samples: usize,
    pub conditions: Vec<Condition>,
    pub passed: bool,
}

impl AdmissibilityReport {
    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "admissibility ({} samples)", self.samples)?;
        for c in &self.conditions {
            writeln!(
                f,
                "  {:<14} {}  margin {:+.6e}  {}",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.worst_margin,
                c.detail
            )?;
        }
        write!(f, "overall: {}", if self.passed { "pass" } else { "FAIL" })
    }
}

fn condition(name: &'static str, margin: f64, strict: bool, detail: String) -> Condition {
    let passed = margin.is_finite() && if strict { margin > 0.0 } else { margin >= 0.0 };
    Condition {
        name,
        passed,
        worst_margin: margin,
        detail,
    }
}

const ZERO_TOL: f64 = 1e-14;

/// Checks (3.2)–(3.6)-type conditions on sampled grids. Non-finite values
/// mark the affected condition as failed.
pub fn check_admissibility(p: &PotentialSet, m_samples: usize) -> Result<AdmissibilityReport> {
    if m_samples < 2 {
        return Err(Error::OutOfRange(format!("m_samples must be >= 2, got {m_samples}")));
    }
    let n = m_samples;
    let node = |k: usize| k as f64 / (n - 1) as f64;
    let mut out = Vec::new();

    // W vanishes exactly at the wells and is positive elsewhere, sampled on [-1, 2]
    let zeros = p.w(0.0).abs().max(p.w(1.0).abs());
    let mut w_min = f64::INFINITY;
    for k in 0..=4 * (n - 1) {
        let s = -1.0 + 3.0 * k as f64 / (4 * (n - 1)) as f64;
        if (s - 0.0).abs() < 1e-12 || (s - 1.0).abs() < 1e-12 {
            continue;
        }
        w_min = w_min.min(p.w(s));
    }
    let margin = if zeros <= ZERO_TOL { w_min } else { -zeros };
    out.push(condition(
        "W wells",
        margin,
        true,
        format!("|W(0)|,|W(1)| = {zeros:.1e}; min W off wells on [-1,2] = {w_min:.3e}"),
    ));

    // coercivity W(s) >= |s|/C for |s| >= C
    let c = p.coercivity();
    let mut coer = f64::INFINITY;
    for k in 0..n {
        let s = c + 3.0 * c * node(k);
        coer = coer.min(p.w(s) - s / c).min(p.w(-s) - s / c);
    }
    out.push(condition("W coercive", coer, false, format!("C = {c}, sampled |s| in [C, 4C]")));

    // V(1) = 0, V > 0 on [0,1), V nonincreasing
    let v1 = p.v(1.0).abs();
    let mut v_min = f64::INFINITY;
    let mut v_mono = f64::INFINITY;
    for k in 0..n - 1 {
        let (a, b) = (node(k), node(k + 1));
        v_min = v_min.min(p.v(a));
        v_mono = v_mono.min(p.v(a) - p.v(b));
    }
    let margin = if v1 <= ZERO_TOL { v_min } else { -v1 };
    out.push(condition("V well", margin, true, format!("|V(1)| = {v1:.1e}; min V on [0,1) = {v_min:.3e}")));
    out.push(condition("V monotone", v_mono, false, "min of V(m_k) - V(m_k+1)".into()));

    // φ(0) = θ, φ(1) = 1, nondecreasing, positive on (0,1]
    let end_err = (p.phi(0.0) - p.theta()).abs().max((p.phi(1.0) - 1.0).abs());
    let mut phi_min = f64::INFINITY;
    let mut phi_mono = f64::INFINITY;
    for k in 0..n - 1 {
        let (a, b) = (node(k), node(k + 1));
        phi_min = phi_min.min(p.phi(b));
        phi_mono = phi_mono.min(p.phi(b) - p.phi(a));
    }
    let margin = if end_err <= 1e-12 { phi_min } else { -end_err };
    let mut phi_cond = condition(
        "phi",
        margin,
        true,
        format!("endpoint error {end_err:.1e}; min phi on (0,1] = {phi_min:.3e}; min increment = {phi_mono:.3e}"),
    );
    phi_cond.passed &= phi_mono >= -1e-15;
    out.push(phi_cond);

    // ∫√W <= 2∫√V
    let nodes = p.quadrature_nodes();
    let iw = checked_integral(|s| p.w(s).sqrt(), 0.0, 1.0, nodes, "sqrt(W)");
    let iv = checked_integral(|s| p.v(s).sqrt(), 0.0, 1.0, nodes, "sqrt(V)");
    let (iw, iv) = match (iw, iv) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            let msg = a.err().or(b.err()).map(|e| e.to_string()).unwrap_or_default();
            out.push(condition("surface<=frac", f64::NAN, false, msg.clone()));
            out.push(condition("m-balance", f64::NAN, false, msg));
            let passed = false;
            return Ok(AdmissibilityReport { samples: n, conditions: out, passed });
        }
    };
    out.push(condition(
        "surface<=frac",
        2.0 * iv - iw,
        false,
        format!("int sqrt(W) = {iw:.12}, 2 int sqrt(V) = {:.12}", 2.0 * iv),
    ));

    // 2∫_m^1√V + φ(m)∫√W >= ∫√W at every node; ∫_m^1 via a cumulative sweep
    let panels = (nodes / (n - 1)).max(2);
    let mut tail = vec![0.0; n];
    for k in (0..n - 1).rev() {
        tail[k] = tail[k + 1] + simpson(|s| p.v(s).sqrt(), node(k), node(k + 1), panels);
    }
    let mut bal = f64::INFINITY;
    let mut worst_m = 0.0;
    for (k, t) in tail.iter().enumerate() {
        let m = node(k);
        let r = 2.0 * t + (p.phi(m) - 1.0) * iw;
        if r < bal {
            bal = r;
            worst_m = m;
        }
    }
    out.push(condition("m-balance", bal, false, format!("worst at m = {worst_m:.6}")));

    let passed = out.iter().all(|c| c.passed);
    Ok(AdmissibilityReport {
        samples: n,
        conditions: out,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn adaptive_simpson(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(&f, a, b, fa, fm, fb, whole, tol, 40)
    }

    #[test]
    fn default_values() {
        let p = make_default_potentials();
        assert_eq!(p.phi(0.0), 0.0);
        assert_eq!(p.phi(1.0), 1.0);
        assert_eq!(p.phi(0.5), 0.75);
        assert_eq!(p.w(0.5), 1.0 / 16.0);
        assert_eq!(p.cap_w(), 1.0 / 16.0);
        assert_eq!(p.cap_v(), 1.0);
    }

    #[test]
    fn densities_match_closed_forms_and_adaptive_oracle() {
        let p = make_default_potentials();
        let s = surface_density(&p).unwrap();
        let f = fracture_density(&p).unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-10);
        assert!((f - 2.0).abs() < 1e-10);
        let so = 2.0 * adaptive_simpson(|x| p.w(x).sqrt(), 0.0, 1.0, 1e-13);
        assert!((s - so).abs() < 1e-10);
    }

    #[test]
    fn scaled_w_doubles_surface_density() {
        let p = PotentialSet::new(
            DoubleWell::Quartic { scale: 4.0 },
            SingleWell::Quadratic { scale: 1.0 },
            Phi::Geodesic,
            CDeltaRule::default(),
        )
        .unwrap();
        assert!((surface_density(&p).unwrap() - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn geodesic_transform_values() {
        let p = make_default_potentials();
        assert_eq!(geodesic_transform(Well::V, &p, 0.0), 0.0);
        assert!((geodesic_transform(Well::V, &p, 1.0) - 1.0).abs() < 1e-12);
        assert!((geodesic_transform(Well::W, &p, 1.0) - 1.0 / 3.0).abs() < 1e-10);
        // d_V(t) = 2t − t² on [0,1]
        let d = geodesic_transform(Well::V, &p, 0.75) - geodesic_transform(Well::V, &p, 0.25);
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn phi_delta_values() {
        let p = make_default_potentials();
        assert!((phi_delta(&p, 0.1, 1.0).unwrap() - 1.1).abs() < 1e-15);
        assert!((phi_delta(&p, 0.1, 0.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(phi_delta(&p, 1e-300, 0.0).unwrap() < 1e-299);
        assert!(phi_delta(&p, 0.1, 1.5).is_err());
        assert!(phi_delta(&p, 0.1, -0.1).is_err());
    }

    #[test]
    fn admissibility_default_and_broken() {
        let p = make_default_potentials();
        let r = check_admissibility(&p, 1001).unwrap();
        assert!(r.passed, "{r}");
        let m = r.condition("surface<=frac").unwrap().worst_margin;
        assert!((m - 5.0 / 6.0).abs() < 1e-10);

        let broken = PotentialSet::new(
            DoubleWell::Quartic { scale: 1.0 },
            SingleWell::Quadratic { scale: 0.01 },
            Phi::Geodesic,
            CDeltaRule::default(),
        )
        .unwrap();
        let r = check_admissibility(&broken, 1001).unwrap();
        assert!(!r.passed);
        assert!(!r.condition("surface<=frac").unwrap().passed);
    }

    #[test]
    fn phi_one_passes_balance_trivially() {
        let p = PotentialSet::new(
            DoubleWell::Quartic { scale: 1.0 },
            SingleWell::Quadratic { scale: 1.0 },
            Phi::One,
            CDeltaRule::default(),
        )
        .unwrap();
        let r = check_admissibility(&p, 257).unwrap();
        assert!(r.condition("m-balance").unwrap().passed);
        // φ(0) = 1 ≠ 0 is reported
        assert!(!r.condition("phi").unwrap().passed);
    }

    #[test]
    fn theta_mode_offsets_phi() {
        let p = make_default_potentials().with_theta(0.25).unwrap();
        assert_eq!(p.phi(0.0), 0.25);
        assert_eq!(p.phi(1.0), 1.0);
        assert!(check_admissibility(&p, 101).unwrap().passed);
        assert!(make_default_potentials().with_theta(1.5).is_err());
    }

    #[test]
    fn differentiability_flags() {
        let p = PotentialSet::new(
            DoubleWell::AbsProduct { scale: 1.0 },
            SingleWell::Quadratic { scale: 1.0 },
            Phi::Geodesic,
            CDeltaRule::default(),
        )
        .unwrap();
        assert_eq!(p.is_differentiable(), Err("abs_product"));
        assert!(make_default_potentials().is_differentiable().is_ok());
    }

    #[test]
    fn derivatives_match_differences() {
        let p = make_default_potentials();
        for &s in &[0.1, 0.3, 0.77] {
            let h = 1e-6;
            assert!(((p.w(s + h) - p.w(s - h)) / (2.0 * h) - p.dw(s)).abs() < 1e-8);
            assert!(((p.v(s + h) - p.v(s - h)) / (2.0 * h) - p.dv(s)).abs() < 1e-8);
            assert!(((p.phi(s + h) - p.phi(s - h)) / (2.0 * h) - p.dphi(s)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn geodesic_transform_monotone_and_lipschitz(a in -1.5f64..2.5, b in -1.5f64..2.5, v in any::<bool>()) {
            let p = make_default_potentials().with_quadrature_nodes(256).unwrap();
            let f = if v { Well::V } else { Well::W };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let (dl, dh) = (geodesic_transform(f, &p, lo), geodesic_transform(f, &p, hi));
            prop_assert!(dl < dh);
            prop_assert!(dh - dl <= 2.0 * p.cap(f).sqrt() * (hi - lo) * (1.0 + 1e-12));
        }
    }
}
