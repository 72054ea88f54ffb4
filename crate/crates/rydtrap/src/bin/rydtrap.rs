//! Command-line front end. Every subcommand writes CSV or JSON to `--out`
//! (stdout by default); failures print a JSON object on stderr and exit
//! with 2 (invalid input) or 3 (numerical failure).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rydtrap::coherence::{self, ClockSurfaces, PathMode, RamseyConfig};
use rydtrap::dressing::{self, Dresser, MultilevelStrategy, StarkModel, SurfaceOptions, EXCITED, GROUND};
use rydtrap::dynamics::{self, AtomSpec, DynamicsError, InitialEnsemble, IntegratorOptions, ModeProfile};
use rydtrap::emission::{self, CavitySpec, EmissionError, Orientation};
use rydtrap::estimates::{self, EstimateError};
use rydtrap::field::{CoefficientTable, FieldError};
use rydtrap::par::WorkerPool;
use rydtrap::presets::{ConfigError, GeometrySource, RunConfig};
use rydtrap::stark::{self, FitOptions, RydbergLevel, StarkBasis, StarkError};
use rydtrap::verify;
use rydtrap::{coherence::CoherenceError, dressing::DressingError, units};

#[derive(Parser, Debug)]
#[command(name = "rydtrap", version, about = "Circular Rydberg atoms in a chip trap")]
struct Cli {
    /// output path, "-" for stdout
    #[arg(long, global = true, default_value = "-")]
    out: String,
    /// worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Stark map of a hydrogenic m-block, as fitted polynomials or raw shifts
    #[command(allow_negative_numbers = true)]
    Stark(StarkArgs),
    /// Field along a line through the trap, or the coefficient table
    #[command(allow_negative_numbers = true)]
    Fieldmap(FieldmapArgs),
    /// Integrate one atom of a thermal ensemble and write its trajectory
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Trapping efficiency against drive frequency
    #[command(allow_negative_numbers = true)]
    ScanOmega(ScanArgs),
    /// 50%-survival temperature
    #[command(allow_negative_numbers = true)]
    Depth(DepthArgs),
    /// Emission rates between two plane mirrors
    #[command(allow_negative_numbers = true)]
    Inhibition(InhibitionArgs),
    /// Microwave-dressing operating point
    #[command(allow_negative_numbers = true)]
    Dress(DressArgs),
    /// Ramsey contrast of a thermal ensemble, with optional echo
    #[command(allow_negative_numbers = true)]
    Ramsey(RamseyArgs),
    /// Blockade and patch-field estimates
    Estimate {
        #[command(subcommand)]
        which: EstimateCmd,
    },
    /// Run acceptance criteria and print a JSON report
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// preset name (trapA, trapB-alpha, trapB-beta) or a coefficient CSV
    #[arg(long, default_value = "trapA")]
    geometry: String,
    /// TOML run configuration; flags given explicitly override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// ensemble size
    #[arg(long)]
    n: Option<usize>,
    /// initial temperature [K]
    #[arg(long)]
    temperature: Option<f64>,
    /// duration [s]
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Debug)]
struct StarkArgs {
    #[arg(long, default_value_t = 49)]
    m: i32,
    /// lowest principal quantum number in the basis
    #[arg(long, default_value_t = 50)]
    n_lowest: u32,
    #[arg(long, default_value_t = 5)]
    manifolds: u32,
    #[arg(long, default_value_t = 200.0)]
    from: f64,
    #[arg(long, default_value_t = 600.0)]
    to: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// write every labelled shift instead of polynomial fits
    #[arg(long)]
    raw: bool,
    /// levels to fit, as n,n1,m triples with m equal to --m, separated by ';'
    #[arg(long, default_value = "50,0,49;51,0,49;51,1,49")]
    levels: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    X,
    Y,
    Z,
}

#[derive(Args, Debug)]
struct FieldmapArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum, default_value = "z")]
    axis: Axis,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// phase of the drive, omega t [rad]
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
    /// print the coefficient CSV of the geometry instead
    #[arg(long)]
    coefficients: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// which member of the ensemble to write
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// also write ensemble efficiency and tilt statistics as JSON here
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    rtol: Option<f64>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    run: RunArgs,
    /// first drive frequency [Hz]
    #[arg(long, default_value_t = 300.0)]
    from: f64,
    #[arg(long, default_value_t = 600.0)]
    to: f64,
    #[arg(long, default_value_t = 10.0)]
    step: f64,
}

#[derive(Args, Debug)]
struct DepthArgs {
    #[command(flatten)]
    run: RunArgs,
    /// lower bracket temperature [K]
    #[arg(long, default_value_t = 0.5e-6)]
    lo: f64,
    #[arg(long, default_value_t = 5e-3)]
    hi: f64,
}

#[derive(Args, Debug)]
struct InhibitionArgs {
    /// mirror spacing [m]
    #[arg(long = "L", default_value_t = 1e-3)]
    l: f64,
    #[arg(long, default_value_t = 6e-3)]
    lambda: f64,
    /// skin depth of the mirrors [m], 0 for perfect conductors
    #[arg(long, default_value_t = 30e-9)]
    skin: f64,
    /// distance of the atom from the lower mirror [m]
    #[arg(long, default_value_t = 120e-6)]
    z: f64,
    /// time-averaged squared tilt, adds gamma_corr to the output
    #[arg(long)]
    theta_sq: Option<f64>,
    /// sweep the spacing: "from,to,points" in metres; writes CSV
    #[arg(long)]
    sweep_l: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum DressMode {
    #[value(name = "two_level", alias = "two-level")]
    TwoLevel,
    Multilevel,
}

#[derive(Args, Debug)]
struct DressArgs {
    #[arg(long, value_enum, default_value = "multilevel")]
    mode: DressMode,
    /// static field of the operating point [V/m]
    #[arg(long = "Ea", default_value_t = 400.0)]
    e_a: f64,
    /// manifolds above n = 50
    #[arg(long = "M", default_value_t = 6)]
    manifolds: u32,
    /// photon offsets on each side
    #[arg(long = "N", default_value_t = 4)]
    photons: u32,
    /// Rabi frequency held fixed while solving for the detuning [Hz]
    #[arg(long, default_value_t = 200e6)]
    rabi: f64,
    /// minimize |Q| over the detuning instead of fixing the Rabi frequency
    #[arg(long)]
    minimize_q: bool,
    /// include dressed lifetimes in a cavity at this height [m]
    #[arg(long)]
    lifetimes_z: Option<f64>,
    /// write the dressed energies on an (E, Omega) grid as CSV
    #[arg(long)]
    surface: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RamseyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// longest free-evolution time [s]
    #[arg(long = "T", default_value_t = 1.0)]
    t_max: f64,
    #[arg(long, default_value_t = 51)]
    points: usize,
    /// echo pulse time [s]; omit for plain Ramsey
    #[arg(long = "Tpi")]
    t_pi: Option<f64>,
    /// phase histogram output (CSV)
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// evaluate both clock energies along the ground-state path
    #[arg(long)]
    shared_path: bool,
    /// distance from the trap centre to the node of the dressing field [m]; "inf" for uniform
    #[arg(long, default_value_t = 1e-2)]
    node: f64,
}

#[derive(Subcommand, Debug)]
enum EstimateCmd {
    #[command(allow_negative_numbers = true)]
    Blockade {
        #[arg(long, default_value_t = 50)]
        n: u32,
        /// interatomic distance [m]
        #[arg(long, default_value_t = 1e-6)]
        r12: f64,
        /// splitting of the doubly excited levels [Hz]
        #[arg(long, default_value_t = 3e9)]
        delta_dd: f64,
    },
    #[command(allow_negative_numbers = true)]
    Patch {
        /// grain size [m]
        #[arg(long, default_value_t = 100e-9)]
        a: f64,
        /// grain voltage [V]; default from the reference gold measurement
        #[arg(long)]
        dv: Option<f64>,
        /// atom-surface distance [m]
        #[arg(long, default_value_t = 120e-6)]
        d: f64,
        /// extent of the atomic motion [m]
        #[arg(long, default_value_t = 5e-6)]
        dr: f64,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// criterion number or name; "all" for the whole suite
    id: String,
    /// full-size ensembles instead of the quick defaults
    #[arg(long)]
    full: bool,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Convergence(String),
    Io(String),
    /// downstream reader went away, e.g. `| head`
    Pipe,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Convergence(_) => 3,
            Failure::Io(_) | Failure::Pipe => 1,
        }
    }

    fn json(&self) -> serde_json::Value {
        let (kind, msg) = match self {
            Failure::Validation(m) => ("validation", m),
            Failure::Convergence(m) => ("convergence", m),
            Failure::Io(m) => ("io", m),
            Failure::Pipe => return json!({ "error": "io", "message": "broken pipe", "exit_code": 1 }),
        };
        json!({ "error": kind, "message": msg, "exit_code": self.code() })
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::Pipe;
        }
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => io.into(),
            k => Failure::Io(format!("{k:?}")),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        if e.io_error_kind() == Some(io::ErrorKind::BrokenPipe) {
            return Failure::Pipe;
        }
        Failure::Io(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<StarkError> for Failure {
    fn from(e: StarkError) -> Self {
        match e {
            StarkError::FitFailure { .. } | StarkError::Labeling { .. } => Failure::Convergence(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<EmissionError> for Failure {
    fn from(e: EmissionError) -> Self {
        match e {
            EmissionError::Convergence(_) | EmissionError::Negative(_) => Failure::Convergence(e.to_string()),
            EmissionError::Stark(s) => s.into(),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<DressingError> for Failure {
    fn from(e: DressingError) -> Self {
        match e {
            DressingError::Stark(s) => s.into(),
            DressingError::Emission(s) => s.into(),
            DressingError::Input(_) => Failure::Validation(e.to_string()),
            _ => Failure::Convergence(e.to_string()),
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Field(f) => f.into(),
            DynamicsError::Input(_) => Failure::Validation(e.to_string()),
            _ => Failure::Convergence(e.to_string()),
        }
    }
}

impl From<CoherenceError> for Failure {
    fn from(e: CoherenceError) -> Self {
        match e {
            CoherenceError::Dynamics(d) => d.into(),
            CoherenceError::Config(_) => Failure::Validation(e.to_string()),
            CoherenceError::Invalid(_) => Failure::Convergence(e.to_string()),
        }
    }
}

impl From<EstimateError> for Failure {
    fn from(e: EstimateError) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn open_out(path: &str) -> Res<Box<dyn Write>> {
    Ok(if path == "-" { Box::new(BufWriter::new(io::stdout().lock())) } else { Box::new(BufWriter::new(File::create(path)?)) })
}

fn write_json<T: Serialize>(out: &str, value: &T) -> Res<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn resolve(run: &RunArgs, cli_workers: usize) -> Res<RunConfig> {
    let mut cfg = match &run.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::for_geometry(&run.geometry)?,
    };
    if run.config.is_some() && run.geometry != "trapA" {
        let g = RunConfig::for_geometry(&run.geometry)?;
        cfg.geometry = g.geometry;
        cfg.table = g.table;
        cfg.drive = g.drive;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(n) = run.n {
        cfg.count = n;
    }
    if let Some(t) = run.temperature {
        cfg.temperature = t;
    }
    if let Some(t) = run.t {
        cfg.duration = t;
    }
    if cli_workers != 0 {
        cfg.workers = cli_workers;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_levels(text: &str) -> Res<Vec<RydbergLevel>> {
    text.split(';')
        .map(|t| {
            let q: Vec<&str> = t.split(',').map(str::trim).collect();
            if q.len() != 3 {
                return Err(bad(format!("level '{t}' must be n,n1,m")));
            }
            let n = q[0].parse().map_err(|_| bad(format!("bad n in '{t}'")))?;
            let n1 = q[1].parse().map_err(|_| bad(format!("bad n1 in '{t}'")))?;
            let m = q[2].parse().map_err(|_| bad(format!("bad m in '{t}'")))?;
            Ok(RydbergLevel::new(n, n1, m)?)
        })
        .collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn cmd_stark(a: &StarkArgs, out: &str) -> Res<()> {
    if a.points < 2 || !(a.to > a.from) {
        return Err(bad("need at least two points and to > from"));
    }
    let basis = StarkBasis::new(a.m, a.n_lowest, a.manifolds)?;
    let fields = linspace(a.from, a.to, a.points);
    let scan = stark::stark_scan(&basis, &fields)?;
    let mut w = open_out(out)?;
    if a.raw {
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(["E", "n", "n1", "m", "shift_hz"])?;
        for (k, e) in scan.fields.iter().enumerate() {
            for (j, l) in scan.labels.iter().enumerate() {
                wtr.write_record(&[e.to_string(), l.n.to_string(), l.n1.to_string(), l.m.to_string(), scan.shifts[k][j].to_string()])?;
            }
        }
        wtr.flush()?;
    } else {
        let mut polys = Vec::new();
        for l in parse_levels(&a.levels)? {
            let s = scan.series(&l).ok_or_else(|| bad(format!("level {l} is not in the basis")))?;
            polys.push(stark::fit_polynomial(l, &s, FitOptions::default())?);
        }
        stark::write_polynomials_csv(&mut w, &polys)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_fieldmap(a: &FieldmapArgs, workers: usize, out: &str) -> Res<()> {
    let cfg = resolve(&a.run, workers)?;
    if a.coefficients {
        let text = match &cfg.geometry {
            GeometrySource::File(p) => std::fs::read_to_string(p)?,
            GeometrySource::Preset(_) => CoefficientTable::raw_text(&cfg.table).ok_or_else(|| bad("no bundled table"))?.to_string(),
        };
        let mut w = open_out(out)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        return Ok(());
    }
    if a.points < 2 {
        return Err(bad("need at least two points"));
    }
    let hp = cfg.potential()?;
    let t = a.phase / cfg.drive.omega;
    let r_max = hp.validity_radius * (1.0 - 1e-9);
    let mut w = open_out(out)?;
    let mut wtr = csv::Writer::from_writer(&mut w);
    wtr.write_record(["s", "x", "y", "z", "V", "Ex", "Ey", "Ez", "E", "theta"])?;
    for s in linspace(-r_max, r_max, a.points) {
        let mut r = [0.0; 3];
        r[a.axis as usize] = s;
        let v = hp.potential(&cfg.drive, r, t)?;
        let f = hp.field(&cfg.drive, r, t)?;
        let row = [s, r[0], r[1], r[2], v, f.evec[0], f.evec[1], f.evec[2], f.modulus, f.theta];
        wtr.write_record(row.iter().map(f64::to_string))?;
    }
    wtr.flush()?;
    drop(wtr);
    w.flush()?;
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, workers: usize, out: &str) -> Res<()> {
    let cfg = resolve(&a.run, workers)?;
    if a.index >= cfg.count {
        return Err(bad(format!("index {} outside an ensemble of {}", a.index, cfg.count)));
    }
    let hp = cfg.potential()?;
    let atom = AtomSpec::bare(cfg.state.alpha_hz());
    let ens = InitialEnsemble::new(cfg.count, cfg.temperature, cfg.seed);
    let mut opts = IntegratorOptions::for_drive(&cfg.drive);
    if let Some(r) = a.rtol {
        opts.rtol = r;
    }
    let traj = dynamics::integrate(&atom, &hp, &cfg.drive, ens.state(a.index), cfg.duration, &opts)?;
    let mut w = open_out(out)?;
    dynamics::write_trajectory_csv(&mut w, &traj)?;
    w.flush()?;
    if let Some(path) = &a.summary {
        let pool = WorkerPool::new(cfg.workers);
        let rep = dynamics::trapping_efficiency(&atom, &hp, &cfg.drive, &ens, cfg.duration, &IntegratorOptions { stride: None, ..opts }, &pool)?;
        write_json(&path.to_string_lossy(), &rep)?;
    }
    Ok(())
}

fn cmd_scan(a: &ScanArgs, workers: usize, out: &str) -> Res<()> {
    let cfg = resolve(&a.run, workers)?;
    if !(a.step > 0.0) || !(a.to >= a.from) || !(a.from > 0.0) {
        return Err(bad("need 0 < from <= to and step > 0"));
    }
    let hp = cfg.potential()?;
    let atom = AtomSpec::bare(cfg.state.alpha_hz());
    let ens = InitialEnsemble::new(cfg.count, cfg.temperature, cfg.seed);
    let pool = WorkerPool::new(cfg.workers);
    let mut w = open_out(out)?;
    let mut wtr = csv::Writer::from_writer(&mut w);
    wtr.write_record(["f_hz", "efficiency", "trapped", "total"])?;
    let steps = ((a.to - a.from) / a.step + 1e-9).floor() as usize;
    for k in 0..=steps {
        let f = a.from + a.step * k as f64;
        let drive = rydtrap::field::DriveSettings { omega: units::TWO_PI * f, ..cfg.drive };
        let opts = IntegratorOptions { stride: None, ..IntegratorOptions::ensemble(&drive) };
        let r = dynamics::trapping_efficiency(&atom, &hp, &drive, &ens, cfg.duration, &opts, &pool)?;
        wtr.write_record(&[f.to_string(), r.fraction.to_string(), r.trapped.to_string(), r.total.to_string()])?;
        wtr.flush()?;
    }
    drop(wtr);
    w.flush()?;
    Ok(())
}

fn cmd_depth(a: &DepthArgs, workers: usize, out: &str) -> Res<()> {
    let cfg = resolve(&a.run, workers)?;
    let hp = cfg.potential()?;
    let atom = AtomSpec::bare(cfg.state.alpha_hz());
    let ens = InitialEnsemble::new(cfg.count, cfg.temperature, cfg.seed);
    let opts = IntegratorOptions { stride: None, ..IntegratorOptions::ensemble(&cfg.drive) };
    let r = dynamics::trap_depth(&atom, &hp, &cfg.drive, &ens, (a.lo, a.hi), cfg.duration, &opts, &WorkerPool::new(cfg.workers))?;
    write_json(out, &r)
}

fn cmd_inhibition(a: &InhibitionArgs, out: &str) -> Res<()> {
    let cav = CavitySpec { l: a.l, z_atom: a.z, lambda: a.lambda, skin_depth: a.skin };
    if let Some(spec) = &a.sweep_l {
        let p: Vec<&str> = spec.split(',').collect();
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("bad sweep value '{s}'")));
        if p.len() != 3 {
            return Err(bad("sweep-l must be from,to,points"));
        }
        let n = parse(p[2])? as usize;
        let mut w = open_out(out)?;
        let mut wtr = csv::Writer::from_writer(&mut w);
        wtr.write_record(["L", "gamma_par", "gamma_perp"])?;
        for l in linspace(parse(p[0])?, parse(p[1])?, n) {
            let c = CavitySpec { l, z_atom: cav.z_atom.min(0.5 * l), ..cav };
            let gp = emission::decay_ratio(&c, Orientation::Parallel)?;
            let gz = emission::decay_ratio(&c, Orientation::Perpendicular)?;
            wtr.write_record(&[l.to_string(), gp.to_string(), gz.to_string()])?;
        }
        wtr.flush()?;
        drop(wtr);
        w.flush()?;
        return Ok(());
    }
    let r = emission::emission_rates(&cav, a.theta_sq.unwrap_or(0.0))?;
    let mut v = json!({ "gamma_par": r.gamma_par, "gamma_perp": r.gamma_perp });
    if a.theta_sq.is_some() {
        v["gamma_corr"] = json!(r.gamma_corr);
    }
    write_json(out, &v)
}

fn cmd_dress(a: &DressArgs, out: &str) -> Res<()> {
    let model = StarkModel::reference()?;
    if a.mode == DressMode::TwoLevel {
        let s = dressing::solve_two_level(&model, a.e_a)?;
        return write_json(out, &json!({ "mode": "two_level", "e_a": a.e_a, "solution": s }));
    }
    let d = Dresser::new(model, a.manifolds, a.photons);
    let strategy = if a.minimize_q { MultilevelStrategy::minimize_q(25e6) } else { MultilevelStrategy::fixed_rabi(a.rabi) };
    let sol = d.solve_multilevel(a.e_a, strategy)?;
    let mut v = json!({
        "mode": "multilevel",
        "manifolds": a.manifolds,
        "photons": a.photons,
        "operating_point": sol.op,
        "expansion": sol.expansion,
        "dispersion_hz": sol.dispersion_hz,
        "dressing_frequency_hz": d.dressing_frequency(&sol.op)?,
    });
    if let Some(z) = a.lifetimes_z {
        let cav = CavitySpec { l: 1e-3, z_atom: z, lambda: 6e-3, skin_depth: 30e-9 };
        v["lifetimes"] = json!([d.dressed_lifetime(&GROUND, &sol.op, &cav)?, d.dressed_lifetime(&EXCITED, &sol.op, &cav)?]);
    }
    if let Some(path) = &a.surface {
        let opts = SurfaceOptions::default();
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["E", "Omega", "E_g", "E_e"])?;
        for e in linspace(sol.op.e_a - opts.field_half_width, sol.op.e_a + opts.field_half_width, opts.grid) {
            for x in linspace(-opts.rabi_rel_half_width, opts.rabi_rel_half_width, opts.grid) {
                let w = sol.op.rabi_hz * (1.0 + x);
                let g = d.level_energy(&GROUND, &sol.op, e, w)?;
                let ex = d.level_energy(&EXCITED, &sol.op, e, w)?;
                wtr.write_record(&[e.to_string(), w.to_string(), g.to_string(), ex.to_string()])?;
            }
        }
        wtr.flush()?;
    }
    write_json(out, &v)
}

fn cmd_ramsey(a: &RamseyArgs, workers: usize, out: &str) -> Res<()> {
    let cfg = resolve(&a.run, workers)?;
    if !(a.t_max > 0.0) || a.points < 2 {
        return Err(bad("need T > 0 and at least two points"));
    }
    if !(a.node > 0.0) {
        return Err(bad("node distance must be positive"));
    }
    let hp = cfg.potential()?;
    let d = Dresser::reference()?;
    let op = d.solve_multilevel(400.0, MultilevelStrategy::fixed_rabi(200e6))?.op;
    let surfaces = ClockSurfaces {
        g: d.fit_surface(&GROUND, &op, SurfaceOptions::default())?,
        e: d.fit_surface(&EXCITED, &op, SurfaceOptions::default())?,
        profile: ModeProfile { node: a.node },
    };
    let ens = InitialEnsemble::new(cfg.count, cfg.temperature, cfg.seed);
    let mut rc = RamseyConfig::new(linspace(0.0, a.t_max, a.points), ens, &cfg.drive);
    rc.t_pi = a.t_pi;
    rc.histogram_time = Some(a.t_pi.unwrap_or(a.t_max));
    if a.shared_path {
        rc.paths = PathMode::Shared;
    }
    let res = coherence::simulate_ramsey(&surfaces, &hp, &cfg.drive, &rc, &WorkerPool::new(cfg.workers))?;
    let mut w = open_out(out)?;
    coherence::write_contrast_csv(&mut w, &res)?;
    w.flush()?;
    if let Some(p) = &a.histogram {
        coherence::write_histogram_csv(File::create(p)?, &res.histogram)?;
    }
    Ok(())
}

fn cmd_estimate(which: &EstimateCmd, out: &str) -> Res<()> {
    match *which {
        EstimateCmd::Blockade { n, r12, delta_dd } => {
            let b = estimates::blockade_shift(&estimates::BlockadeInput { n, r12, delta_dd })?;
            write_json(out, &b)
        }
        EstimateCmd::Patch { a, dv, d, dr } => {
            let input = estimates::PatchInput { a, dv: dv.unwrap_or_else(estimates::gold_grain_voltage), d, dr };
            let p = estimates::patch_field(&input)?;
            write_json(out, &json!({ "input": input, "e_patch": p.e_patch, "de_patch": p.de_patch }))
        }
    }
}

fn cmd_verify(a: &VerifyArgs, workers: usize, out: &str) -> Res<bool> {
    let ids = if a.id == "all" {
        Vec::new()
    } else {
        vec![verify::parse_criterion(&a.id).ok_or_else(|| bad(format!("unknown criterion '{}'", a.id)))?]
    };
    let mode = if a.full { verify::Mode::Full } else { verify::Mode::from_env() };
    let reports = verify::run_selected(&ids, mode, workers);
    let pass = reports.iter().all(|r| r.pass);
    let body = if reports.len() == 1 { serde_json::to_value(&reports[0])? } else { json!({ "pass": pass, "criteria": reports }) };
    write_json(out, &body)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let f = Failure::Validation(e.to_string());
            eprintln!("{}", f.json());
            return ExitCode::from(f.code());
        }
    };
    let out = cli.out.as_str();
    let w = cli.workers;
    let result = match &cli.cmd {
        Cmd::Stark(a) => cmd_stark(a, out),
        Cmd::Fieldmap(a) => cmd_fieldmap(a, w, out),
        Cmd::Simulate(a) => cmd_simulate(a, w, out),
        Cmd::ScanOmega(a) => cmd_scan(a, w, out),
        Cmd::Depth(a) => cmd_depth(a, w, out),
        Cmd::Inhibition(a) => cmd_inhibition(a, out),
        Cmd::Dress(a) => cmd_dress(a, out),
        Cmd::Ramsey(a) => cmd_ramsey(a, w, out),
        Cmd::Estimate { which } => cmd_estimate(which, out),
        Cmd::Verify(a) => match cmd_verify(a, w, out) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) | Err(Failure::Pipe) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(f.code())
        }
    }
}
