//! Subcommand dispatch and artifact emission.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use fracsep::fields::write_dump;
use fracsep::harness::{gamma_sweep, relative_error, RowStatus};
use fracsep::potentials::{fracture_density, surface_density};
use fracsep::{build_recovery, check_admissibility, diffuse_energy, solver, DiffuseState, ScalarField};

use crate::config::{parse_config, ConfigError, Resolved, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Sweep,
    Minimize,
    Recover,
    Sharp,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Sweep => "sweep",
            Command::Minimize => "minimize",
            Command::Recover => "recover",
            Command::Sharp => "sharp",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invariant failed: {0}")]
    Invariant(String),
    #[error(transparent)]
    Library(#[from] fracsep::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub const DEFAULT_OUT: &str = "fracsep-out";

/// Files are written as `name.partial` and renamed once every invariant of
/// the run holds, so a failed run leaves only `.partial` files behind.
struct Artifacts {
    dir: PathBuf,
    pending: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self, RunError> {
        fs::create_dir_all(&dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
        Ok(Self { dir, pending: vec![] })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<(), RunError>,
    ) -> Result<(), RunError> {
        let path = self.dir.join(format!("{name}.partial"));
        let io = |source| RunError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w)?;
        w.flush().map_err(io)?;
        self.pending.push(path);
        Ok(())
    }

    fn write_str(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.dir.join(format!("{name}.partial"));
        self.write(name, |w| {
            w.write_all(text.as_bytes()).map_err(|source| RunError::Io { path, source })
        })
    }

    fn dump(&mut self, name: &str, f: &ScalarField) -> Result<(), RunError> {
        self.write(name, |w| Ok(write_dump(w, f)?))
    }

    fn commit(self) -> Result<Vec<PathBuf>, RunError> {
        let mut done = Vec::new();
        for p in self.pending {
            let fin = p.with_extension("");
            fs::rename(&p, &fin).map_err(|source| RunError::Io { path: p.clone(), source })?;
            done.push(fin);
        }
        Ok(done)
    }
}

/// The effective configuration prefixed with comment lines naming the
/// versions and command; passing it back through `--config` repeats the run.
pub fn manifest(cfg: &RunConfig, command: Command) -> String {
    format!(
        "# fracsep {} / fracsep-cli {}\n# command: {}\n# seed: {}\n{}",
        fracsep::VERSION,
        env!("CARGO_PKG_VERSION"),
        command.name(),
        cfg.seed,
        cfg.to_toml()
    )
}

pub fn load(opts: &RunOptions) -> Result<RunConfig, RunError> {
    let mut cfg = match &opts.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &opts.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

pub fn run(opts: &RunOptions) -> Result<(), RunError> {
    let cfg = load(opts)?;
    let r = cfg.resolve()?;
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut art = Artifacts::new(dir)?;
    art.write_str("manifest.toml", &manifest(&cfg, opts.command))?;
    let say = |s: String| {
        if !opts.quiet {
            println!("{s}");
        }
    };
    let outcome = match opts.command {
        Command::Check => check(&r, &say),
        Command::Sharp => sharp(&r, &say),
        Command::Sweep => sweep(&r, &mut art, &say),
        Command::Minimize => minimize(&r, &mut art, &say),
        Command::Recover => recover(&r, &mut art, &say),
    };
    match outcome {
        Ok(()) => {
            for p in art.commit()? {
                say(format!("wrote {}", p.display()));
            }
            Ok(())
        }
        Err(e) => {
            if let RunError::Invariant(_) = e {
                for p in &art.pending {
                    eprintln!("kept {}", p.display());
                }
            }
            Err(e)
        }
    }
}

fn check(r: &Resolved, say: &dyn Fn(String)) -> Result<(), RunError> {
    let report = check_admissibility(&r.potentials, r.admissibility_samples)?;
    say(report.to_string());
    let surf = surface_density(&r.potentials)?;
    let frac = fracture_density(&r.potentials)?;
    say(format!("alpha_surf = {surf:.12}"));
    say(format!("alpha_frac = {frac:.12}"));
    if !report.passed {
        return Err(RunError::Invariant("potentials are not admissible".into()));
    }
    Ok(())
}

fn print_breakdown(e: &fracsep::EnergyBreakdown, say: &dyn Fn(String)) {
    say(format!("e_phase   = {:.12}", e.e_phase));
    say(format!("e_elastic = {:.12}", e.e_elastic));
    say(format!("e_crack   = {:.12}", e.e_crack));
    say(format!("total     = {:.12}", e.e_total));
}

fn sharp(r: &Resolved, say: &dyn Fn(String)) -> Result<(), RunError> {
    let e = r.geometry.energy(&r.potentials, &r.elastic)?;
    print_breakdown(&e, say);
    if !e.e_total.is_finite() {
        return Err(RunError::Invariant("sharp energy is not finite".into()));
    }
    Ok(())
}

fn sweep(r: &Resolved, art: &mut Artifacts, say: &dyn Fn(String)) -> Result<(), RunError> {
    let table = gamma_sweep(&r.sweep, &r.potentials, &r.elastic)?;
    let csv = table.to_csv();
    art.write_str("sweep.csv", &csv)?;
    say(format!("e_sharp = {:.12}", table.e_sharp.e_total));
    for row in &table.rows {
        let total = row.energy.map_or(f64::NAN, |e| e.e_total);
        say(format!(
            "eps {:.4e}  delta {:.4e}  cells {:>8}  total {:.10}  rel_err {:+.3e}  {}",
            row.eps,
            row.delta,
            row.cells,
            total,
            row.rel_err.unwrap_or(f64::NAN),
            row.status
        ));
    }
    let failed: Vec<String> = table
        .rows
        .iter()
        .filter_map(|row| match &row.status {
            RowStatus::Error(m) => Some(format!("eps {}: {m}", row.eps)),
            _ if row.energy.is_none_or(|e| !e.e_total.is_finite()) => Some(format!("eps {}: energy is not finite", row.eps)),
            _ => None,
        })
        .collect();
    if !failed.is_empty() {
        return Err(RunError::Invariant(failed.join("; ")));
    }
    Ok(())
}

fn dump_state(s: &DiffuseState, art: &mut Artifacts) -> Result<(), RunError> {
    art.dump("c.dump", &s.c)?;
    art.dump("z.dump", &s.z)?;
    let grid = *s.grid();
    let names: &[&str] = if grid.dim() == 1 { &["u.dump"] } else { &["u_x.dump", "u_y.dump"] };
    for (k, name) in names.iter().enumerate() {
        let f = ScalarField::new(grid, s.u.comp(k).to_vec())?;
        art.dump(name, &f)?;
    }
    Ok(())
}

fn minimize(r: &Resolved, art: &mut Artifacts, say: &dyn Fn(String)) -> Result<(), RunError> {
    let s0 = solver::initial_state(r.solver_grid, r.solver_eps, r.solver_delta, &r.solver)?;
    let (s, traj) = solver::alternate(&s0, &r.potentials, &r.elastic, &r.solver)?;
    art.write_str("trajectory.csv", &traj.to_csv())?;
    dump_state(&s, art)?;
    let e = traj.final_energy();
    say(format!(
        "{} sweeps, {:?}, total {:.12} -> {:.12}",
        traj.sweeps.len(),
        traj.termination,
        traj.initial.e_total,
        e.e_total
    ));
    print_breakdown(&e, say);
    let mut counts: Vec<(String, usize, usize)> = Vec::new();
    for (sweep, flag) in &traj.flags {
        let key = format!("{} {:?}", flag.block.name(), flag.kind);
        match counts.iter_mut().find(|(k, _, _)| *k == key) {
            Some(c) => c.1 += 1,
            None => counts.push((key, 1, *sweep)),
        }
    }
    for (key, n, first) in counts {
        say(format!("flag {key}: {n} sweeps, first at sweep {first}"));
    }
    let totals = traj.totals();
    if totals.iter().any(|t| !t.is_finite()) {
        return Err(RunError::Invariant("energy became non-finite".into()));
    }
    if let Some(w) = totals
        .windows(2)
        .position(|w| w[1] > w[0] + 1e-12 * w[0].abs().max(1.0))
    {
        return Err(RunError::Invariant(format!(
            "energy increased at sweep {}: {} -> {}",
            w + 1,
            totals[w],
            totals[w + 1]
        )));
    }
    if let (Some(mu0), Some(&last)) = (r.solver.mass_constraint, traj.mass.last()) {
        if (last - mu0).abs() > 1e-9 * mu0.abs().max(1.0) {
            return Err(RunError::Invariant(format!("mass drifted to {last}, expected {mu0}")));
        }
    }
    Ok(())
}

fn recover(r: &Resolved, art: &mut Artifacts, say: &dyn Fn(String)) -> Result<(), RunError> {
    let (s, rep) = build_recovery(&r.geometry, &r.recover, &r.recover_grid, &r.potentials)?;
    let e = diffuse_energy(&s, &r.potentials, &r.elastic)?;
    let e_sharp = r.geometry.energy(&r.potentials, &r.elastic)?.e_total;
    let rel = relative_error(e.e_total, e_sharp);
    dump_state(&s, art)?;
    art.write_str(
        "energy.csv",
        &format!(
            "e_phase,e_elastic,e_crack,e_total,e_sharp,rel_err,profile_width,plateau,width_ok\n\
             {:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            e.e_phase,
            e.e_elastic,
            e.e_crack,
            e.e_total,
            e_sharp,
            rel,
            rep.profile_width,
            rep.plateau,
            !rep.width_checked || rep.width_ok
        ),
    )?;
    print_breakdown(&e, say);
    say(format!("e_sharp   = {e_sharp:.12}"));
    say(format!("rel_err   = {rel:+.6e}"));
    if rep.width_checked && !rep.width_ok {
        say(format!(
            "width condition violated: eps/sqrt(lambda) = {:.4e} > lambda*delta = {:.4e}",
            rep.profile_width, rep.plateau
        ));
    }
    if !e.e_total.is_finite() {
        return Err(RunError::Invariant("recovery energy is not finite".into()));
    }
    Ok(())
}
