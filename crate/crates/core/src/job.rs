//! Job orchestration and result serialization.
//!
//! A run writes, below the output directory:
//!
//! * `grids/chi{k}_{method}.csv|.bin` response grids
//! * `spectra/{kind}_{method}_tp{q}.csv|.bin` 2D spectra, plus
//!   `variance_{kind}_{method}_tp{q}.csv` under disorder
//! * `polarization_{method}.csv` when a finite-pulse trace is configured
//! * `deviation.json` for `method = both`
//! * `metadata.json` (resolved config, version, seed, exciton energies)
//! * `timing.json` (threads, memory estimate, wall-clock per stage;
//!   excluded from checksums)
//! * `manifest.json` listing every artifact with its SHA-256

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::closed::{evaluate_closed_grid, grid_memory_estimate, ClosedModel};
use crate::config::{Format, JobConfig, Method, ResolvedBath};
use crate::error::{Error, Result};
use crate::exciton::{diagonalize, project_dipoles, SiteSystem};
use crate::grid::{Channel, GridSpec, ResponseGrid};
use crate::qme::{chi_qme, context_for_grid, qme_memory_estimate};
use crate::signal::{
    assemble_polarization, disorder_average, fourier_2d, impulsive_signal, PulseSetup, SignalKind, Spectrum2D,
};
use crate::units::cm_to_rad_fs;

pub const BINARY_MAGIC: &[u8; 4] = b"FWMX";
pub const BINARY_VERSION: u32 = 1;
pub const BINARY_HEADER_LEN: usize = 64;

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub method: Option<Method>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dry_run: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bytes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

/// Closed-form vs master-equation comparison for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDeviation {
    pub channel: usize,
    pub max_abs: f64,
    /// `max|χ_qme − χ_closed| / max|χ_closed|`.
    pub max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub channels: Vec<ChannelDeviation>,
    pub max_abs: f64,
    pub max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub method: Method,
    pub dry_run: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Planned working set; reported for dry runs only since it depends on the worker count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_estimate_bytes: Option<usize>,
    pub artifacts: Vec<Artifact>,
    /// Files whose content varies between identical runs.
    pub volatile: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationSummary>,
}

/// Everything derived from the configuration before any heavy computation.
pub struct Plan {
    pub config: JobConfig,
    pub system: SiteSystem,
    pub bath: ResolvedBath,
    pub spec: GridSpec,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
}

impl Plan {
    pub fn new(config: &JobConfig, opts: &RunOptions) -> Result<Plan> {
        let mut config = config.clone();
        if let Some(m) = opts.method {
            config.method = m;
        }
        if let Some(seed) = opts.seed {
            if let Some(d) = config.disorder.as_mut() {
                d.seed = seed;
            }
        }
        let config = config.resolve()?;
        let system = config.site_system()?;
        let bath = config.resolved_bath(system.n_sites())?;
        if config.method.runs_closed() && bath.diagonal.is_none() {
            return Err(Error::validation(
                "bath.channels",
                "the closed-form method needs every channel operator diagonal in the exciton basis",
            ));
        }
        let spec = config.grid_spec()?;
        let methods = match config.method {
            Method::Both => vec![Method::Closed, Method::Qme],
            m => vec![m],
        };
        // a command-line directory is a location, not a setting, so it is not echoed into metadata
        let out_dir = opts
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(&config.output.directory));
        Ok(Plan {
            config,
            system,
            bath,
            spec,
            methods,
            out_dir,
        })
    }

    /// Largest working set any stage is expected to hold.
    pub fn memory_estimate(&self) -> usize {
        let n = self.system.n_sites();
        let grids = grid_memory_estimate(&self.spec, 4 * self.methods.len());
        // two time signals per method on top of the grids
        let signals = grid_memory_estimate(&self.spec, 2 * self.methods.len());
        let qme = if self.config.method.runs_qme() {
            qme_memory_estimate(&self.spec, n)
        } else {
            0
        };
        grids + signals + qme
    }

    fn carrier_detunings(&self) -> Result<[f64; 3]> {
        let gap = self.system.optical_gap();
        Ok(self.config.carriers_cm()?.map(|c| cm_to_rad_fs(c - gap)))
    }

    /// Spectrum axes: the excitation axis is measured from ω₁ and the
    /// detection axis from the optical gap, both in rad/fs.
    fn axis_origins(&self) -> Result<(f64, f64)> {
        let carriers = self.config.carriers_cm()?;
        Ok((cm_to_rad_fs(carriers[0]), cm_to_rad_fs(self.system.optical_gap())))
    }

    fn planned_artifacts(&self) -> Vec<Artifact> {
        let mut out = Vec::new();
        let formats = &self.config.output.formats;
        let planned = |path: String, kind: &str| Artifact {
            path,
            kind: kind.into(),
            bytes: None,
            sha256: None,
        };
        for m in &self.methods {
            for ch in Channel::ALL {
                for f in formats {
                    out.push(planned(
                        format!("grids/chi{}_{}.{}", ch.index(), m.name(), ext(*f)),
                        "response_grid",
                    ));
                }
            }
        }
        for m in &self.methods {
            for q in 0..self.spec.n_tp() {
                for kind in SignalKind::ALL {
                    for f in formats {
                        out.push(planned(
                            format!("spectra/{}_{}_tp{q}.{}", kind.name(), m.name(), ext(*f)),
                            "spectrum",
                        ));
                    }
                    if self.config.disorder.is_some() {
                        out.push(planned(
                            format!("spectra/variance_{}_{}_tp{q}.csv", kind.name(), m.name()),
                            "spectrum_variance",
                        ));
                    }
                }
            }
        }
        if self.config.pulses.polarization.is_some() {
            for m in &self.methods {
                out.push(planned(format!("polarization_{}.csv", m.name()), "polarization"));
            }
        }
        if self.config.method == Method::Both {
            out.push(planned("deviation.json".into(), "deviation"));
        }
        out.push(planned("metadata.json".into(), "metadata"));
        out
    }
}

fn ext(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Binary => "bin",
    }
}

/// All four response grids of `system` with the given method.
pub fn compute_grids(
    system: &SiteSystem,
    bath: &ResolvedBath,
    polarizations: [[f64; 3]; 4],
    spec: &GridSpec,
    method: Method,
    memory_cap: usize,
) -> Result<Vec<ResponseGrid>> {
    let basis = diagonalize(system)?;
    let dipoles = project_dipoles(&basis, polarizations)?;
    match method {
        Method::Closed => {
            let diag = bath
                .diagonal
                .as_ref()
                .ok_or_else(|| Error::validation("bath.channels", "closed form needs diagonal coupling"))?;
            let model = ClosedModel::new(&basis, diag, &dipoles)?;
            evaluate_closed_grid(&Channel::ALL, spec, &model, memory_cap)
        }
        Method::Qme => {
            let ctx = context_for_grid(
                &basis.energies_rad_fs(),
                bath.channels.clone(),
                &bath.frequencies,
                bath.beta,
                spec,
            )?;
            (1..=4).map(|k| chi_qme(k, spec, &ctx, &dipoles)).collect()
        }
        Method::Both => Err(Error::validation("method", "compute one method at a time")),
    }
}

/// Rephasing and nonrephasing spectra for every population time, ordered
/// `[R(T₀), NR(T₀), R(T₁), …]`.
fn spectra_from_grids(plan: &Plan, grids: &[ResponseGrid]) -> Result<Vec<Spectrum2D>> {
    let (reph, nonreph) = impulsive_signal(grids, 0.0, plan.carrier_detunings()?)?;
    let (exc, det) = plan.axis_origins()?;
    let opts = plan.config.fourier_options(exc, det);
    let mut out = Vec::with_capacity(2 * plan.spec.n_tp());
    for q in 0..plan.spec.n_tp() {
        out.push(fourier_2d(&reph, q, &opts)?);
        out.push(fourier_2d(&nonreph, q, &opts)?);
    }
    Ok(out)
}

pub fn deviation_summary(closed: &[ResponseGrid], qme: &[ResponseGrid]) -> Result<DeviationSummary> {
    let mut channels = Vec::new();
    for (c, q) in closed.iter().zip(qme) {
        let max_abs = c.max_abs_diff(q)?;
        let scale = c.max_abs();
        channels.push(ChannelDeviation {
            channel: c.channel.index(),
            max_abs,
            max_rel: if scale > 0.0 { max_abs / scale } else { max_abs },
        });
    }
    Ok(DeviationSummary {
        max_abs: channels.iter().map(|d| d.max_abs).fold(0.0, f64::max),
        max_rel: channels.iter().map(|d| d.max_rel).fold(0.0, f64::max),
        channels,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Writer {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, rel: &str, kind: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.artifacts.push(Artifact {
            path: rel.into(),
            kind: kind.into(),
            bytes: Some(bytes.len() as u64),
            sha256: Some(sha256_hex(bytes)),
        });
        Ok(())
    }
}

pub fn grid_csv(grid: &ResponseGrid) -> Vec<u8> {
    let spec = &grid.spec;
    let mut s = String::from("tau,Tp,tau_prime,re,im\n");
    for (idx, z) in grid.values.iter().enumerate() {
        let (a, b, c) = spec.unflat(idx);
        s.push_str(&format!("{},{},{},{},{}\n", spec.tau(a), spec.tp(b), spec.tau_prime(c), z.re, z.im));
    }
    s.into_bytes()
}

pub fn spectrum_csv(spectrum: &Spectrum2D) -> Vec<u8> {
    let mut s = String::from("w_tau_prime,w_tau,re,im\n");
    for (i, we) in spectrum.excitation.iter().enumerate() {
        for (j, wd) in spectrum.detection.iter().enumerate() {
            let z = spectrum.get(i, j);
            s.push_str(&format!("{we},{wd},{},{}\n", z.re, z.im));
        }
    }
    s.into_bytes()
}

fn variance_csv(spectrum: &Spectrum2D, variance: &[f64]) -> Vec<u8> {
    let mut s = String::from("w_tau_prime,w_tau,variance\n");
    let n_det = spectrum.detection.len();
    for (i, we) in spectrum.excitation.iter().enumerate() {
        for (j, wd) in spectrum.detection.iter().enumerate() {
            s.push_str(&format!("{we},{wd},{}\n", variance[i * n_det + j]));
        }
    }
    s.into_bytes()
}

/// 64-byte header (magic, version u32, three u64 dimensions, f64 step,
/// zero padding) followed by little-endian interleaved `(re, im)` pairs.
pub fn binary_blob(dims: [u64; 3], step: f64, values: &[num_complex::Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 16 * values.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&step.to_le_bytes());
    out.resize(BINARY_HEADER_LEN, 0);
    for z in values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn grid_binary(grid: &ResponseGrid) -> Vec<u8> {
    let s = &grid.spec;
    binary_blob([s.n_tau as u64, s.n_tp() as u64, s.n_tau_prime as u64], s.dt, &grid.values)
}

/// Spectra use dimensions `(n_exc, n_det, 1)` and the excitation spacing.
fn spectrum_binary(spectrum: &Spectrum2D) -> Vec<u8> {
    binary_blob(
        [spectrum.excitation.len() as u64, spectrum.detection.len() as u64, 1],
        spectrum.spacing().0,
        &spectrum.values,
    )
}

fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'a str,
    config: &'a JobConfig,
    seed: Option<u64>,
    exciton_energies_cm: Vec<f64>,
    optical_gap_cm: f64,
    frequency_unit: &'a str,
    time_unit: &'a str,
}

#[derive(Serialize)]
struct Timing {
    threads: usize,
    memory_estimate_bytes: usize,
    stages: Vec<(String, f64)>,
}

fn stage<T>(timing: &mut Vec<(String, f64)>, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    let secs = start.elapsed().as_secs_f64();
    info!("{name}: {secs:.3} s");
    timing.push((name.to_string(), secs));
    Ok(out)
}

/// Runs the configured pipeline and writes all artifacts.
pub fn run_job(config: &JobConfig, opts: &RunOptions) -> Result<Manifest> {
    let plan = Plan::new(config, opts)?;
    let seed = plan.config.disorder.as_ref().map(|d| d.seed);
    let memory = plan.memory_estimate();
    let cap = plan.config.memory_cap_bytes();
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        method: plan.config.method,
        dry_run: opts.dry_run,
        seed,
        memory_estimate_bytes: opts.dry_run.then_some(memory),
        artifacts: Vec::new(),
        volatile: vec!["timing.json".into()],
        deviation: None,
    };
    fs::create_dir_all(&plan.out_dir)?;
    if opts.dry_run {
        manifest.artifacts = plan.planned_artifacts();
        write_manifest(&plan.out_dir, &manifest)?;
        return Ok(manifest);
    }
    if memory > cap {
        return Err(Error::Resource(format!(
            "estimated working set {memory} bytes exceeds limits.memory_mb ({cap} bytes)"
        )));
    }

    let mut timing = Vec::new();
    let mut w = Writer {
        root: plan.out_dir.clone(),
        artifacts: Vec::new(),
    };
    let formats = plan.config.output.formats.clone();
    let pol = plan.config.pulses.polarizations;

    let mut all_grids = Vec::new();
    for &m in &plan.methods {
        let grids = stage(&mut timing, &format!("response grids ({})", m.name()), || {
            compute_grids(&plan.system, &plan.bath, pol, &plan.spec, m, cap)
        })?;
        for g in &grids {
            for f in &formats {
                let rel = format!("grids/chi{}_{}.{}", g.channel.index(), m.name(), ext(*f));
                match f {
                    Format::Csv => w.put(&rel, "response_grid", &grid_csv(g))?,
                    Format::Binary => w.put(&rel, "response_grid", &grid_binary(g))?,
                }
            }
        }
        all_grids.push((m, grids));
    }

    for (m, grids) in &all_grids {
        let (spectra, variance) = match &plan.config.disorder {
            None => (
                stage(&mut timing, &format!("spectra ({})", m.name()), || spectra_from_grids(&plan, grids))?,
                None,
            ),
            Some(d) => {
                let model = plan.config.disorder_model(d);
                let avg = stage(&mut timing, &format!("disorder average ({})", m.name()), || {
                    disorder_average(&plan.system, &model, |sys| {
                        let g = compute_grids(sys, &plan.bath, pol, &plan.spec, *m, cap)?;
                        spectra_from_grids(&plan, &g)
                    })
                })?;
                (avg.mean, Some(avg.variance))
            }
        };
        for (i, s) in spectra.iter().enumerate() {
            let q = i / 2;
            for f in &formats {
                let rel = format!("spectra/{}_{}_tp{q}.{}", s.kind.name(), m.name(), ext(*f));
                match f {
                    Format::Csv => w.put(&rel, "spectrum", &spectrum_csv(s))?,
                    Format::Binary => w.put(&rel, "spectrum", &spectrum_binary(s))?,
                }
            }
            if let Some(v) = &variance {
                let rel = format!("spectra/variance_{}_{}_tp{q}.csv", s.kind.name(), m.name());
                w.put(&rel, "spectrum_variance", &variance_csv(s, &v[i]))?;
            }
        }
    }

    if let Some(p) = &plan.config.pulses.polarization {
        let setup = PulseSetup {
            carriers: plan.carrier_detunings()?,
            envelopes: plan.config.pulses.envelopes,
            centers: p.centers_fs,
        };
        for (m, grids) in &all_grids {
            let mut s = String::from("t_m,rephasing_re,rephasing_im,nonrephasing_re,nonrephasing_im,signal\n");
            stage(&mut timing, &format!("polarization ({})", m.name()), || {
                for &t in &p.detection_fs {
                    let v = assemble_polarization(grids, 0.0, &setup, t)?;
                    s.push_str(&format!(
                        "{t},{},{},{},{},{}\n",
                        v.rephasing.re,
                        v.rephasing.im,
                        v.nonrephasing.re,
                        v.nonrephasing.im,
                        v.signal()
                    ));
                }
                Ok(())
            })?;
            w.put(&format!("polarization_{}.csv", m.name()), "polarization", s.as_bytes())?;
        }
    }

    if plan.config.method == Method::Both {
        let dev = deviation_summary(&all_grids[0].1, &all_grids[1].1)?;
        info!("closed vs qme: max abs {:.3e}, max rel {:.3e}", dev.max_abs, dev.max_rel);
        w.put("deviation.json", "deviation", &to_json_bytes(&dev)?)?;
        manifest.deviation = Some(dev);
    }

    let basis = diagonalize(&plan.system)?;
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        config: &plan.config,
        seed,
        exciton_energies_cm: basis.energies.iter().map(|e| e + plan.system.reference_energy()).collect(),
        optical_gap_cm: plan.system.optical_gap(),
        frequency_unit: "rad/fs",
        time_unit: "fs",
    };
    w.put("metadata.json", "metadata", &to_json_bytes(&meta)?)?;

    let timing = Timing {
        threads: rayon::current_num_threads(),
        memory_estimate_bytes: memory,
        stages: timing,
    };
    fs::write(plan.out_dir.join("timing.json"), to_json_bytes(&timing)?)?;

    manifest.artifacts = w.artifacts;
    write_manifest(&plan.out_dir, &manifest)?;
    Ok(manifest)
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut f = fs::File::create(dir.join("manifest.json"))?;
    f.write_all(&to_json_bytes(manifest)?)?;
    Ok(())
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::validation("threads", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

/// Oracle value at one point, with the closed form alongside when the bath
/// is diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub channel: usize,
    pub point: [f64; 3],
    pub oracle: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed: Option<[f64; 2]>,
    pub dimension: usize,
}

pub fn run_oracle(config: &JobConfig, k: usize, point: [f64; 3]) -> Result<OracleReport> {
    let config = config.clone().resolve()?;
    let channel = Channel::from_index(k)?;
    let system = config.site_system()?;
    let bath = config.resolved_bath(system.n_sites())?;
    let basis = diagonalize(&system)?;
    let dipoles = project_dipoles(&basis, config.pulses.polarizations)?;
    let energies = basis.energies_rad_fs();
    let oracle = crate::oracle::FockOracle::new(
        &energies,
        &bath.channels,
        &bath.frequencies,
        bath.beta,
        &dipoles,
        config.oracle,
    )?;
    let [tau, tp, tau_prime] = point;
    if point.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::validation("point", "delays must be finite and non-negative"));
    }
    let z = oracle.chi(channel, tau, tp, tau_prime);
    let closed = match &bath.diagonal {
        Some(d) => {
            let c = ClosedModel::new(&basis, d, &dipoles)?.chi(channel, tau, tp, tau_prime);
            Some([c.re, c.im])
        }
        None => None,
    };
    Ok(OracleReport {
        channel: k,
        point,
        oracle: [z.re, z.im],
        closed,
        dimension: oracle.dimension(),
    })
}
