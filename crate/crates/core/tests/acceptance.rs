//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//!
//! Runs without the libtest harness so the lines are always visible. The
//! process exits with status 0 unless `FRACSEP_ACCEPTANCE_STRICT=1` is set,
//! in which case any failing criterion makes it exit with status 1.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracsep::geometry::{Polygon, Segment};
use fracsep::harness::{
    compactness_levelset_diagnostic, gamma_sweep, geodesic_inequality_check, slicing_identity_check, DeltaRule,
    GridRule, LevelSetOptions, SweepPlan, SweepTable,
};
use fracsep::potentials::{fracture_density, surface_density};
use fracsep::recovery::{OptimalProfile, ProfileParams};
use fracsep::sharp::{minkowski_content_estimate, Domain2D};
use fracsep::solver::initial_state;
use fracsep::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

fn schedule(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| pow2(-k)).collect()
}

fn last_total(t: &SweepTable) -> f64 {
    t.rows.last().and_then(|r| r.energy).map_or(f64::NAN, |e| e.e_total)
}

fn densities() -> Outcome {
    let p = make_default_potentials();
    let (s, f) = (surface_density(&p).unwrap(), fracture_density(&p).unwrap());
    let (es, ef) = ((s - 1.0 / 3.0).abs(), (f - 2.0).abs());
    Outcome {
        pass: es <= 1e-10 && ef <= 1e-10,
        detail: format!("alpha_surf = {s:.15}, alpha_frac = {f:.15}, errors {es:.1e}, {ef:.1e}"),
    }
}

fn admissibility() -> Outcome {
    let p = make_default_potentials();
    let good = check_admissibility(&p, 10_000).unwrap();
    let weak_v = PotentialSet::new(
        DoubleWell::Quartic { scale: 1.0 },
        SingleWell::Quadratic { scale: 0.01 },
        Phi::Geodesic,
        CDeltaRule::default(),
    )
    .unwrap();
    let bad = check_admissibility(&weak_v, 10_000).unwrap();
    let balance = bad.condition("surface<=frac").map(|c| c.passed);
    let failing: Vec<&str> = bad.conditions.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    Outcome {
        pass: good.passed && balance == Some(false) && !bad.passed,
        detail: format!(
            "default set passes all {} conditions: {}; V/100 fails {:?}",
            good.conditions.len(),
            good.passed,
            failing
        ),
    }
}

fn crack_only() -> Outcome {
    let p = make_default_potentials();
    let m = ElasticModel::default();
    let plan = SweepPlan {
        eps_schedule: schedule(5, 9),
        delta_rule: DeltaRule::TWO_THIRDS,
        lambda: 1e-4,
        geometry: SharpGeometry::D1(SharpGeometry1D::compatible([0.0, 1.0], vec![], vec![0.5], false, 0.0).unwrap()),
        grid_rule: GridRule::Fixed { cells: 1 << 14 },
        width_policy: WidthPolicy::Report,
    };
    let t = gamma_sweep(&plan, &p, &m).unwrap();
    let rel: Vec<f64> = t.rows.iter().map(|r| r.rel_err.unwrap_or(f64::NAN)).collect();
    let final_err = (last_total(&t) - 2.0).abs() / 2.0;
    // signed relative error may not grow by more than 10% of its size
    let monotone = rel.windows(2).all(|w| w[1] <= w[0] + 0.10 * w[0].abs());
    Outcome {
        pass: final_err <= 0.05 && monotone && (t.e_sharp.e_total - 2.0).abs() < 1e-12,
        detail: format!(
            "e_sharp = {}, final e_total = {:.6}, |rel| = {final_err:.2e}, rel_err by row = [{}]",
            t.e_sharp.e_total,
            last_total(&t),
            rel.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn exclusion() -> Outcome {
    let p = make_default_potentials();
    let m = ElasticModel::default();
    let plan = |phase: f64, crack: f64| SweepPlan {
        eps_schedule: schedule(8, 15),
        delta_rule: DeltaRule::SQRT,
        lambda: 1e-4,
        geometry: SharpGeometry::D1(
            SharpGeometry1D::compatible([0.0, 1.0], vec![phase], vec![crack], false, 0.0).unwrap(),
        ),
        grid_rule: GridRule::Fixed { cells: 1 << 20 },
        width_policy: WidthPolicy::Report,
    };
    let co = gamma_sweep(&plan(0.5, 0.5), &p, &m).unwrap();
    let dj = gamma_sweep(&plan(0.75, 0.25), &p, &m).unwrap();
    let (ec, ed) = (last_total(&co), last_total(&dj));
    let seven_thirds = 7.0 / 3.0;
    let near_two = (ec - 2.0).abs() / 2.0;
    let away = (ec - seven_thirds).abs() / seven_thirds;
    let near_73 = (ed - seven_thirds).abs() / seven_thirds;
    Outcome {
        pass: near_two <= 0.05 && away >= 0.12 && near_73 <= 0.05,
        detail: format!(
            "coincident: e_total = {ec:.6} ({:.2}% from 2, {:.2}% from 7/3); disjoint: e_total = {ed:.6} ({:.2}% from 7/3); \
             delta = eps^1/2, eps down to 2^-15, 2^20 cells",
            100.0 * near_two,
            100.0 * away,
            100.0 * near_73
        ),
    }
}

fn crack_2d_geometry() -> SharpGeometry {
    SharpGeometry::D2(
        SharpGeometry2D::new(
            Domain2D::unit(),
            Polygon::rectangle(0.5, 0.0, 1.0, 1.0).unwrap(),
            vec![Segment::new([0.5, 0.25], [0.5, 0.75])],
            Displacement::Zero,
        )
        .unwrap(),
    )
}

fn limsup_2d() -> Outcome {
    let p = make_default_potentials();
    let m = ElasticModel::default();
    let plan = SweepPlan {
        eps_schedule: schedule(5, 7),
        delta_rule: DeltaRule::TWO_THIRDS,
        lambda: 1e-4,
        geometry: crack_2d_geometry(),
        grid_rule: GridRule::Fixed { cells: 1 << 10 },
        width_policy: WidthPolicy::Report,
    };
    let t = gamma_sweep(&plan, &p, &m).unwrap();
    let last = t.rows.last().unwrap();
    let rel = last.rel_err.unwrap_or(f64::NAN);
    let e = last.energy.unwrap_or_default();
    Outcome {
        pass: rel.abs() <= 0.10 && (t.e_sharp.e_total - 7.0 / 6.0).abs() < 1e-12,
        detail: format!(
            "e_sharp = {:.6}, at eps = 2^-7: phase {:.4} crack {:.4} total {:.4}, rel_err = {rel:.4} ({})",
            t.e_sharp.e_total, e.e_phase, e.e_crack, e.e_total, last.status
        ),
    }
}

fn gradient_consistency() -> Outcome {
    let p = make_default_potentials();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::unit(1, 16).unwrap();
        let n = g.len();
        let m = ElasticModel::default().with_e0([rng.gen_range(-1.0..1.0), 0.0, 0.0]);
        let f = DiffuseFunctional::new(&p, &m).unwrap();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..1.2)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let s = DiffuseState::new(
            ScalarField::new(g, c).unwrap(),
            VectorField::new(g, vec![u]).unwrap(),
            ScalarField::new(g, z).unwrap(),
            rng.gen_range(0.05..0.2),
            rng.gen_range(0.1..0.3),
        )
        .unwrap();
        let (_, gr) = f.energy_and_gradients(&s).unwrap();
        let h = 1e-6;
        let blocks: [(&[f64], usize); 3] = [(gr.c.values(), 0), (gr.u.comp(0), 1), (gr.z.values(), 2)];
        for (grad, block) in blocks {
            let scale = grad.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-8);
            for i in 0..n {
                let eval = |d: f64| {
                    let mut t = s.clone();
                    match block {
                        0 => t.c.values_mut()[i] += d,
                        1 => t.u.comp_mut(0)[i] += d,
                        _ => t.z.values_mut()[i] += d,
                    }
                    f.energy(&t).unwrap().e_total
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                worst = worst.max((fd - grad[i]).abs() / scale);
            }
        }
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("max relative error over 50 states and 3 blocks = {worst:.2e}"),
    }
}

fn solver_descent() -> Outcome {
    let p = make_default_potentials();
    let m = ElasticModel::default().with_e0([1.0, 0.0, 0.0]);
    let eps = pow2(-7);
    let plan = SolverPlan {
        mass_constraint: Some(0.5),
        seed: 1,
        ..SolverPlan::default()
    };
    let g = Grid::unit(1, 1 << 12).unwrap();
    let s0 = initial_state(g, eps, eps.powf(2.0 / 3.0), &plan).unwrap();
    let (_, tr) = alternate(&s0, &p, &m, &plan).unwrap();
    let totals = tr.totals();
    let monotone = totals.windows(2).all(|w| w[1] <= w[0] + 10.0 * plan.cg_tol * w[0]);
    let drift = tr.mass.iter().fold(0.0f64, |a, v| a.max((v - 0.5).abs()));
    let best = [false, true]
        .iter()
        .map(|&c_left| {
            SharpGeometry1D::compatible([0.0, 1.0], vec![0.5], vec![], c_left, 1.0)
                .and_then(|gm| SharpGeometry::D1(gm).energy(&p, &m))
                .map(|e| e.e_total)
                .unwrap()
        })
        .fold(f64::INFINITY, f64::min);
    let fin = tr.final_energy().e_total;
    Outcome {
        pass: monotone && drift <= 1e-12 && fin <= 1.25 * best,
        detail: format!(
            "{} sweeps ({:?}), e_total {:.4} -> {fin:.6}, bound {:.6}, monotone: {monotone}, mass drift {drift:.1e}",
            tr.sweeps.len(),
            tr.termination,
            tr.initial.e_total,
            1.25 * best
        ),
    }
}

fn geodesic() -> Outcome {
    let p = make_default_potentials();
    let g = Grid::unit(1, 1024).unwrap();
    let mut min_slack = f64::INFINITY;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(f64, f64, f64)> = (1..=6)
            .map(|k| (rng.gen_range(-1.0..1.0), k as f64 * std::f64::consts::PI, rng.gen_range(0.0..6.3)))
            .collect();
        let base = rng.gen_range(0.0..1.0);
        let w = ScalarField::from_fn(g, |x| base + modes.iter().map(|(a, k, ph)| a * (k * x[0] + ph).sin()).sum::<f64>());
        let eps = rng.gen_range(0.01..0.2);
        let well = if seed % 2 == 0 { Well::W } else { Well::V };
        min_slack = min_slack.min(geodesic_inequality_check(&w, well, eps, &p).unwrap().slack);
    }
    let eps = 0.02;
    let op = OptimalProfile::new(ProfileParams::new(1e-8, eps, Well::W).unwrap(), &p);
    let gf = Grid::unit(1, 1 << 14).unwrap();
    let x0 = 0.5 - 0.5 * op.width();
    let w = ScalarField::from_fn(gf, |x| op.g(x[0] - x0));
    let c = geodesic_inequality_check(&w, Well::W, eps, &p).unwrap();
    let ratio = c.slack / c.rhs;
    Outcome {
        pass: min_slack >= -1e-10 && c.slack >= -1e-10 && ratio <= 1e-3,
        detail: format!("min slack over 100 fields = {min_slack:.3e}; optimal profile slack/rhs = {ratio:.2e}"),
    }
}

fn slicing() -> Outcome {
    let u = Displacement::default_quadratic();
    let a = slicing_identity_check(&u, &Grid::unit(2, 1 << 8).unwrap(), 32, 7).unwrap();
    let b = slicing_identity_check(&u, &Grid::unit(2, 1 << 9).unwrap(), 32, 7).unwrap();
    let ratio = a.max_error / b.max_error;
    Outcome {
        pass: ratio >= 1.7 && b.max_error <= a.constant * b.h,
        detail: format!(
            "error {:.3e} at h = {:.3e} (C = {:.3}), {:.3e} at h = {:.3e} (C = {:.3}), reduction {ratio:.2}x",
            a.max_error, a.h, a.constant, b.max_error, b.h, b.constant
        ),
    }
}

fn compactness() -> Outcome {
    let p = make_default_potentials();
    let eps = pow2(-7);
    let rp = RecoveryParams {
        eps,
        delta: eps.powf(2.0 / 3.0),
        lambda: 1e-4,
        width_policy: WidthPolicy::Report,
    };
    let g = Grid::unit(2, 1 << 10).unwrap();
    let (s, _) = build_recovery(&crack_2d_geometry(), &rp, &g, &p).unwrap();
    let d = compactness_levelset_diagnostic(&s.z, &p, &LevelSetOptions::default()).unwrap();
    let twice = 2.0 * 0.5;
    let dev = (d.perimeter_estimate - twice).abs() / twice;
    Outcome {
        pass: d.holds && dev <= 0.2,
        detail: format!(
            "t* = {:.4}, perimeter {:.4} vs bound {:.4} (x1.2 = {:.4}), {:.1}% from twice the crack length",
            d.t_star,
            d.perimeter_estimate,
            d.bound,
            1.2 * d.bound,
            100.0 * dev
        ),
    }
}

fn minkowski() -> Outcome {
    let seg = [Segment::new([0.25, 0.5], [0.75, 0.5])];
    let len = 0.5;
    let g = Grid::unit(2, 1 << 10).unwrap();
    let h = g.h();
    let mut pass = true;
    let mut parts = Vec::new();
    for r in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
        let est = minkowski_content_estimate(&seg, r, &g).unwrap();
        let center = len + std::f64::consts::PI * r / 2.0;
        let band = 4.0 * h / r * len;
        pass &= (est - center).abs() <= band;
        parts.push(format!("r = 1/{:.0}: {est:.5} (band {center:.5} +- {band:.5})", 1.0 / r));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 11] = [
        ("energy densities", Duration::from_secs(1), densities),
        ("admissibility", Duration::from_secs(1), admissibility),
        ("gamma-limsup, crack only (1D)", Duration::from_secs(30), crack_only),
        ("exclusion mechanism", Duration::from_secs(60), exclusion),
        ("gamma-limsup (2D)", Duration::from_secs(600), limsup_2d),
        ("gradient consistency", Duration::from_secs(30), gradient_consistency),
        ("solver descent", Duration::from_secs(120), solver_descent),
        ("geodesic inequality", Duration::from_secs(10), geodesic),
        ("slicing identity", Duration::from_secs(30), slicing),
        ("compactness level-set diagnostic", Duration::from_secs(60), compactness),
        ("Minkowski content", Duration::from_secs(30), minkowski),
    ];
    let mut failed = Vec::new();
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = run();
        let dt = t0.elapsed();
        let in_time = dt <= *budget;
        let pass = o.pass && in_time;
        if !pass {
            failed.push(k + 1);
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.2}s of {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            dt.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!(
        "acceptance: {} of {} criteria passed{}",
        criteria.len() - failed.len(),
        criteria.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    let strict = std::env::var("FRACSEP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
