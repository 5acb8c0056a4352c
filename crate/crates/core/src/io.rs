//! Field files, run configuration and log emission.
//!
//! SWV1 layout (little-endian): magic `SWVF`, version `u32 = 1`, `Nx, Ny, n`
//! as `u32`, degree `i32`, `Lx, Ly, ε, t` as `f64`, then per-site arrays in
//! row-major order: fluctuation `a` (2), `u` (4n), `φ` (re, im), conformal
//! factor (1). The binary file carries no weights; they are read as all ones.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{ConnectionField, HiggsField, OneForm, SpinorField, TorusLattice};
use crate::quaternion::{Quaternion, Target};
use crate::solver::{
    vortex_initial_guess_for, GaugeFix, IterationRecord, Method, SolveOptions,
};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"SWVF";
pub const VERSION: u32 = 1;

pub fn write_swv<W: Write>(mut w: W, q: &Configuration) -> Result<()> {
    let lat = &q.lattice;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(lat.nx as u32)?;
    w.write_u32::<LittleEndian>(lat.ny as u32)?;
    w.write_u32::<LittleEndian>(q.n() as u32)?;
    w.write_i32::<LittleEndian>(q.degree())?;
    for v in [lat.lx, lat.ly, q.epsilon, q.tau] {
        w.write_f64::<LittleEndian>(v)?;
    }
    for v in site_arrays(q).iter().flatten() {
        w.write_f64::<LittleEndian>(*v)?;
    }
    Ok(())
}

/// The four per-site arrays in file order.
fn site_arrays(q: &Configuration) -> [Vec<f64>; 4] {
    let n = q.n();
    let sites = q.lattice.sites();
    let mut a = Vec::with_capacity(2 * sites);
    let mut u = Vec::with_capacity(4 * n * sites);
    let mut phi = Vec::with_capacity(2 * sites);
    for s in 0..sites {
        a.extend([q.a.fluct.x[s], q.a.fluct.y[s]]);
        for h in q.u.at(s) {
            u.extend(h.to_array());
        }
        phi.extend([q.phi.phi[s].re, q.phi.phi[s].im]);
    }
    [a, u, phi, q.lattice.conformal.clone()]
}

struct Header {
    nx: usize,
    ny: usize,
    n: usize,
    degree: i32,
    lx: f64,
    ly: f64,
    epsilon: f64,
    tau: f64,
}

fn assemble(h: Header, a: &[f64], u: &[f64], phi: &[f64], conformal: Vec<f64>, weights: Option<Vec<i32>>) -> Result<Configuration> {
    let sites = h.nx * h.ny;
    for (name, got, want) in [("a", a.len(), 2 * sites), ("u", u.len(), 4 * h.n * sites), ("phi", phi.len(), 2 * sites)] {
        if got != want {
            return Err(Error::Format(format!("array {name} has {got} values, expected {want}")));
        }
    }
    if h.n == 0 {
        return Err(Error::Format("target dimension n must be at least 1".into()));
    }
    let weights = weights.unwrap_or_else(|| vec![1; h.n]);
    if weights.len() != h.n {
        return Err(Error::Format(format!("{} weights for n = {}", weights.len(), h.n)));
    }
    let lattice = TorusLattice::with_conformal(h.nx, h.ny, h.lx, h.ly, conformal)
        .map_err(|e| Error::Format(e.to_string()))?;
    let fluct = OneForm { x: a.iter().step_by(2).copied().collect(), y: a.iter().skip(1).step_by(2).copied().collect() };
    let values = u.chunks_exact(4).map(|c| Quaternion::from_array([c[0], c[1], c[2], c[3]])).collect();
    let phi = phi.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(Configuration {
        lattice,
        target: Target::new(weights),
        a: ConnectionField { degree: h.degree, fluct },
        u: SpinorField { n: h.n, values },
        phi: HiggsField { phi },
        epsilon: h.epsilon,
        tau: h.tau,
    })
}

pub fn read_swv<R: Read>(mut r: R) -> Result<Configuration> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| Error::Format("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not an SWV1 file".into()));
    }
    let fmt = |e: std::io::Error| Error::Format(format!("truncated file: {e}"));
    let version = r.read_u32::<LittleEndian>().map_err(fmt)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let nx = r.read_u32::<LittleEndian>().map_err(fmt)? as usize;
    let ny = r.read_u32::<LittleEndian>().map_err(fmt)? as usize;
    let n = r.read_u32::<LittleEndian>().map_err(fmt)? as usize;
    let degree = r.read_i32::<LittleEndian>().map_err(fmt)?;
    let mut hd = [0.0; 4];
    for v in hd.iter_mut() {
        *v = r.read_f64::<LittleEndian>().map_err(fmt)?;
    }
    if nx.checked_mul(ny).and_then(|s| s.checked_mul(4 * n + 5)).is_none_or(|len| len > 1 << 31) {
        return Err(Error::Format(format!("implausible dimensions {nx}x{ny}, n = {n}")));
    }
    let sites = nx * ny;
    let mut read = |len: usize| -> Result<Vec<f64>> {
        let mut v = vec![0.0; len];
        r.read_f64_into::<LittleEndian>(&mut v).map_err(fmt)?;
        Ok(v)
    };
    let a = read(2 * sites)?;
    let u = read(4 * n * sites)?;
    let phi = read(2 * sites)?;
    let conformal = read(sites)?;
    let h = Header { nx, ny, n, degree, lx: hd[0], ly: hd[1], epsilon: hd[2], tau: hd[3] };
    assemble(h, &a, &u, &phi, conformal, None)
}

/// The JSON mirror of an SWV1 file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwvJson {
    pub version: u32,
    pub nx: usize,
    pub ny: usize,
    pub n: usize,
    pub degree: i32,
    pub lx: f64,
    pub ly: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub a: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub conformal: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<i32>>,
}

impl SwvJson {
    pub fn from_config(q: &Configuration) -> Self {
        let [a, u, phi, conformal] = site_arrays(q);
        let uniform = q.target.weights.iter().all(|w| *w == 1);
        SwvJson {
            version: VERSION,
            nx: q.lattice.nx,
            ny: q.lattice.ny,
            n: q.n(),
            degree: q.degree(),
            lx: q.lattice.lx,
            ly: q.lattice.ly,
            epsilon: q.epsilon,
            tau: q.tau,
            a,
            u,
            phi,
            conformal,
            weights: (!uniform).then(|| q.target.weights.clone()),
        }
    }

    pub fn into_config(self) -> Result<Configuration> {
        if self.version != VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        let h = Header {
            nx: self.nx,
            ny: self.ny,
            n: self.n,
            degree: self.degree,
            lx: self.lx,
            ly: self.ly,
            epsilon: self.epsilon,
            tau: self.tau,
        };
        assemble(h, &self.a, &self.u, &self.phi, self.conformal, self.weights)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Save as SWV1, or as the JSON mirror when the extension is `.json`.
pub fn save_fields(path: &Path, q: &Configuration) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if is_json(path) {
        serde_json::to_writer(&mut w, &SwvJson::from_config(q))?;
    } else {
        write_swv(&mut w, q)?;
    }
    w.flush()?;
    Ok(())
}

/// Load SWV1 or its JSON mirror (detected by content, not extension).
pub fn load_fields(path: &Path) -> Result<Configuration> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    if bytes.starts_with(MAGIC) {
        read_swv(&bytes[..])
    } else {
        let j: SwvJson = serde_json::from_slice(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        j.into_config()
    }
}

pub const CSV_HEADER: &str = "iter,energy,r1,r2,r3,gauge_defect,wall_ms";

pub fn csv_row(r: &IterationRecord) -> String {
    format!("{},{:e},{:e},{:e},{:e},{:e},{:.3}", r.iter, r.energy, r.r1, r.r2, r.r3, r.gauge_defect, r.wall_ms)
}

pub fn write_history_csv<W: Write>(mut w: W, history: &[IterationRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in history {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

/// Per-site table of a field file: `ix, iy, a_x, a_y, phi_re, phi_im,
/// conformal, u_norm2` followed by the quaternion components of each factor.
pub fn write_fields_csv<W: Write>(mut w: W, q: &Configuration) -> Result<()> {
    let lat = &q.lattice;
    let mut head = String::from("ix,iy,a_x,a_y,phi_re,phi_im,conformal,u_norm2");
    for k in 0..q.n() {
        for c in ["w", "x", "y", "z"] {
            head.push_str(&format!(",u{k}_{c}"));
        }
    }
    writeln!(w, "{head}")?;
    for s in 0..lat.sites() {
        let (ix, iy) = lat.coords(s);
        let u = q.u.at(s);
        let norm2: f64 = u.iter().map(|h| h.norm_sqr()).sum();
        let p = q.phi.phi[s];
        let mut row = format!(
            "{ix},{iy},{:e},{:e},{:e},{:e},{:e},{:e}",
            q.a.fluct.x[s], q.a.fluct.y[s], p.re, p.im, lat.conformal[s], norm2
        );
        for h in u {
            for c in h.to_array() {
                row.push_str(&format!(",{c:e}"));
            }
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

/// Conformal factor of the run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ConformalProfile {
    Flat,
    Bump(f64),
}

/// How the solve is started.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitKind {
    /// Lowest Landau section in the first factor.
    Vortex,
    /// Uniform random fields of size `init_amplitude`.
    Random,
    File(PathBuf),
}

/// Flat `key = value` run description. `#` starts a comment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub conformal: ConformalProfile,
    pub degree: i32,
    pub weights: Vec<i32>,
    pub epsilon: f64,
    pub tau: f64,
    pub solver: SolveOptions,
    pub seed: u64,
    pub init: InitKind,
    pub init_amplitude: f64,
    pub output_dir: PathBuf,
    pub output_prefix: String,
    /// Write a checkpoint every this many iterations, 0 for never.
    pub checkpoint_every: usize,
}

const KEYS: &[&str] = &[
    "nx", "ny", "lx", "ly", "conformal", "degree", "n", "weights", "epsilon", "tau", "method", "tol",
    "max_iter", "gauge_fix", "step", "lm_lambda", "cg_max_iter", "divergence_factor", "epsilon_schedule",
    "penalty_schedule", "min_epsilon_step", "diagnostics", "seed", "init", "init_amplitude", "output_dir",
    "output_prefix", "checkpoint_every",
];

/// A real number, optionally written as a multiple of π (`4pi`, `0.5*pi`, `pi`).
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase().replace(['π'], "pi");
    let v = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let c = if head.is_empty() { 1.0 } else if head == "-" { -1.0 } else { head.parse::<f64>().map_err(|_| bad_number(s))? };
        c * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|_| bad_number(s))?
    };
    if !v.is_finite() {
        return Err(bad_number(s));
    }
    Ok(v)
}

fn bad_number(s: &str) -> Error {
    Error::Config(format!("not a number: '{s}'"))
}

pub fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| item(p.trim())).collect()
}

fn parse_int<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config(format!("{key}: not an integer: '{s}'")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: not a boolean: '{s}'"))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse_in(&text, base)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_in(text, Path::new("."))
    }

    /// Parse and validate. Relative paths are taken relative to `base`.
    pub fn parse_in(text: &str, base: &Path) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim().to_ascii_lowercase();
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
            }
            if kv.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing required key '{k}'")));
        let real = |k: &str, d: f64| get(k).map_or(Ok(d), |v| parse_real(v).map_err(|e| Error::Config(format!("{k}: {e}"))));

        let nx: usize = parse_int("nx", req("nx")?)?;
        let ny: usize = parse_int("ny", get("ny").unwrap_or(req("nx")?))?;
        let lx = real("lx", 1.0)?;
        let ly = real("ly", lx)?;
        let conformal = match get("conformal").unwrap_or("flat").to_ascii_lowercase().as_str() {
            "flat" => ConformalProfile::Flat,
            b if b.starts_with("bump:") => ConformalProfile::Bump(parse_real(&b[5..])?),
            other => return Err(Error::Config(format!("conformal: expected flat or bump:AMP, got '{other}'"))),
        };
        let degree: i32 = parse_int("degree", get("degree").unwrap_or("0"))?;
        let weights = match (get("n"), get("weights")) {
            (_, Some(w)) => parse_list(w, |p| parse_int("weights", p))?,
            (Some(n), None) => vec![1; parse_int::<usize>("n", n)?],
            (None, None) => vec![1],
        };
        if let Some(n) = get("n") {
            if parse_int::<usize>("n", n)? != weights.len() {
                return Err(Error::Config(format!("n = {n} but {} weights given", weights.len())));
            }
        }
        if weights.is_empty() || weights.contains(&0) {
            return Err(Error::Config("weights must be non-empty and non-zero".into()));
        }
        let epsilon = real("epsilon", 1.0)?;
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0,1], got {epsilon}")));
        }
        let tau = real("tau", 0.0)?;

        let d = SolveOptions::default();
        let sched = |k: &str, dv: Vec<f64>| get(k).map_or(Ok(dv), |v| parse_list(v, parse_real));
        let solver = SolveOptions {
            method: get("method").map_or(Ok(d.method), str::parse::<Method>)?,
            tol: real("tol", d.tol)?,
            max_iter: get("max_iter").map_or(Ok(d.max_iter), |v| parse_int("max_iter", v))?,
            gauge_fix: get("gauge_fix").map_or(Ok(d.gauge_fix), str::parse::<GaugeFix>)?,
            step: real("step", d.step)?,
            lm_lambda: real("lm_lambda", d.lm_lambda)?,
            cg_max_iter: get("cg_max_iter").map_or(Ok(d.cg_max_iter), |v| parse_int("cg_max_iter", v))?,
            divergence_factor: real("divergence_factor", d.divergence_factor)?,
            epsilon_schedule: sched("epsilon_schedule", vec![epsilon])?,
            penalty_schedule: sched("penalty_schedule", d.penalty_schedule)?,
            min_epsilon_step: real("min_epsilon_step", d.min_epsilon_step)?,
            diagnostics: get("diagnostics").map_or(Ok(d.diagnostics), |v| parse_bool("diagnostics", v))?,
        };
        solver.validate()?;

        let seed: u64 = parse_int("seed", get("seed").unwrap_or("0"))?;
        let init = match get("init").unwrap_or("vortex") {
            "vortex" => InitKind::Vortex,
            "random" => InitKind::Random,
            f if f.starts_with("file:") => InitKind::File(base.join(f[5..].trim())),
            other => return Err(Error::Config(format!("init: expected vortex, random or file:PATH, got '{other}'"))),
        };
        let init_amplitude = real("init_amplitude", 0.1)?;
        if !(init_amplitude > 0.0) {
            return Err(Error::Config("init_amplitude must be positive".into()));
        }
        let output_dir = base.join(get("output_dir").unwrap_or("."));
        let output_prefix = get("output_prefix").unwrap_or("run").to_string();
        if output_prefix.is_empty() || output_prefix.contains(['/', '\\']) {
            return Err(Error::Config(format!("output_prefix must be a plain file stem, got '{output_prefix}'")));
        }
        let checkpoint_every = parse_int("checkpoint_every", get("checkpoint_every").unwrap_or("0"))?;

        let rc = RunConfig {
            nx,
            ny,
            lx,
            ly,
            conformal,
            degree,
            weights,
            epsilon,
            tau,
            solver,
            seed,
            init,
            init_amplitude,
            output_dir,
            output_prefix,
            checkpoint_every,
        };
        rc.lattice()?;
        Ok(rc)
    }

    pub fn lattice(&self) -> Result<TorusLattice> {
        let lat = match self.conformal {
            ConformalProfile::Flat => TorusLattice::new(self.nx, self.ny, self.lx, self.ly),
            ConformalProfile::Bump(amp) => {
                if !(amp.abs() < 1.0) {
                    return Err(Error::Config(format!("bump amplitude must be below 1 in size, got {amp}")));
                }
                TorusLattice::bump(self.nx, self.ny, self.lx, self.ly, amp)
            }
        };
        lat.map_err(|e| Error::Config(e.to_string()))
    }

    pub fn target(&self) -> Target {
        Target::new(self.weights.clone())
    }

    /// Fails with an IO error if the output directory does not exist.
    pub fn check_output_dir(&self) -> Result<()> {
        if self.output_dir.is_dir() {
            Ok(())
        } else {
            Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("output directory {} does not exist", self.output_dir.display()),
            )))
        }
    }

    pub fn output_path(&self, suffix: &str) -> PathBuf {
        self.output_dir.join(format!("{}{suffix}", self.output_prefix))
    }

    /// The starting configuration, at the first ε of the schedule.
    pub fn initial(&self) -> Result<Configuration> {
        let lat = self.lattice()?;
        let eps = self.solver.epsilon_schedule.first().copied().unwrap_or(self.epsilon);
        let mut q = match &self.init {
            InitKind::Vortex => vortex_initial_guess_for(&lat, self.target(), self.degree, self.tau, eps, self.seed),
            InitKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                Configuration::random(lat, self.target(), self.degree, self.init_amplitude, &mut rng)
            }
            InitKind::File(p) => {
                let q = load_fields(p)?;
                if !q.lattice.same_shape(&lat) || q.degree() != self.degree || q.n() != self.weights.len() {
                    return Err(Error::Config(format!("{} does not match the configured lattice/degree/n", p.display())));
                }
                let mut q = q;
                q.target = self.target();
                q
            }
        };
        q.epsilon = eps;
        q.tau = self.tau;
        Ok(q)
    }
}
