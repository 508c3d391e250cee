//! One-dimensional quadrature: composite Simpson, Gauss–Legendre panels and a
//! tabulated cumulative integral with local refinement and inversion.

/// Composite Simpson rule on `[a, b]` with `panels` subintervals (rounded up
/// to an even count).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2).div_ceil(2) * 2;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        let v = f(a + k as f64 * h);
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule on `[a, b]` (exact for degree 9).
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Nodes and weights of the five-point rule mapped to `[a, b]`, weights
/// normalized to sum to one.
pub fn gauss5_mean_nodes(a: f64, b: f64) -> [(f64, f64); 5] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(0.0, 0.0); 5];
    for k in 0..5 {
        out[k] = (mid + half * GL5_NODES[k], 0.5 * GL5_WEIGHTS[k]);
    }
    out
}

/// `F(s) = ∫_a^s f` tabulated on a uniform node set, evaluated between nodes
/// by a local Gauss–Legendre panel. The integrand must be positive for
/// [`CumulativeIntegral::inverse`] to be meaningful.
#[derive(Clone, Debug)]
pub struct CumulativeIntegral<F> {
    f: F,
    a: f64,
    b: f64,
    step: f64,
    table: Vec<f64>,
}

impl<F: Fn(f64) -> f64> CumulativeIntegral<F> {
    pub fn new(f: F, a: f64, b: f64, intervals: usize) -> Self {
        let n = intervals.max(1);
        let step = (b - a) / n as f64;
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for k in 0..n {
            let lo = a + k as f64 * step;
            acc += gauss5(&f, lo, lo + step);
            table.push(acc);
        }
        Self { f, a, b, step, table }
    }

    pub fn total(&self) -> f64 {
        *self.table.last().unwrap()
    }

    pub fn integrand(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    fn node(&self, k: usize) -> f64 {
        if k + 1 == self.table.len() {
            self.b
        } else {
            self.a + k as f64 * self.step
        }
    }

    /// `∫_a^s f` for `s` in `[a, b]` (clamped).
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(self.a, self.b);
        let n = self.table.len() - 1;
        let k = (((s - self.a) / self.step).floor() as usize).min(n - 1);
        let lo = self.node(k);
        if s <= lo {
            return self.table[k];
        }
        self.table[k] + gauss5(&self.f, lo, s)
    }

    /// Solves `F(s) = r` for `s` in `[a, b]`. Values of `r` outside
    /// `[0, total]` map to the interval ends.
    pub fn inverse(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return self.a;
        }
        if r >= self.total() {
            return self.b;
        }
        // bracket: largest k with table[k] <= r
        let k = match self
            .table
            .binary_search_by(|v| v.partial_cmp(&r).unwrap())
        {
            Ok(k) => return self.node(k),
            Err(k) => k - 1,
        };
        let mut lo = self.node(k);
        let mut hi = self.node(k + 1);
        let base = self.table[k];
        let target = r - base;
        let local = |s: f64| gauss5(&self.f, self.node(k), s);
        // safeguarded Newton inside the bracketing cell
        let mut s = lo + (hi - lo) * target / (self.table[k + 1] - base);
        for _ in 0..60 {
            let val = local(s) - target;
            if val > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            if val.abs() <= 1e-15 * (1.0 + r.abs()) || hi - lo <= 1e-16 * (1.0 + s.abs()) {
                break;
            }
            let d = self.integrand(s);
            let next = s - val / d;
            s = if d > 0.0 && next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn simpson_rounds_odd_panels_up() {
        let v = simpson(|x| x * x, 0.0, 1.0, 3);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gauss5_exact_on_degree_nine() {
        let v = gauss5(|x| x.powi(9) + x.powi(8), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_inverse_round_trip() {
        let ci = CumulativeIntegral::new(|t: f64| 1.0 / (0.01 + t * t).sqrt(), 0.0, 1.0, 256);
        for &s in &[0.0, 1e-6, 0.123, 0.5, 0.777_7, 1.0] {
            let r = ci.eval(s);
            assert!((ci.inverse(r) - s).abs() < 1e-12, "s = {s}");
        }
        let exact = (1.0f64 / 0.1).asinh();
        assert!((ci.total() - exact).abs() < 1e-12);
    }
}
