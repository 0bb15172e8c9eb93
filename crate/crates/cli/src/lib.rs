//! Configuration and subcommands of the `mtm-ist` driver.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use mtm_ist::direct::{compute_scattering, detect_spectrum_obstructions, DirectConfig, JostConfig, Verdict};
use mtm_ist::io::{self, Format, Table};
use mtm_ist::lattice::{make_xgrid, truncation_tail, weighted_norms, Potential, Spacing, TailReport};
use mtm_ist::mtmpde::{self, Boundary, EvolverConfig, Splitting};
use mtm_ist::recon::{inverse, roundtrip, InverseConfig, PipelineConfig, RoundtripReport};
use mtm_ist::rhsolve::{solve_rhp_sweep, RhConfig, RhpChart, SolverKind};
use mtm_ist::spectra::{evolve_reflections, reflections_from_scattering};
use mtm_ist::{Error, NormReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_OBSTRUCTED: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Config(String),
    Obstructed(String),
    Tolerance(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Obstructed { .. }) | CliError::Obstructed(_) => EXIT_OBSTRUCTED,
            CliError::Core(_) | CliError::Config(_) => EXIT_FAILURE,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Obstructed(m) => write!(f, "spectrum obstructed: {m}"),
            CliError::Tolerance(v) => write!(f, "tolerance violated: {}", v.join("; ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { half_width: 20.0, n: 4001 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    pub z_max: f64,
    /// Total node count over both half-lines.
    pub nodes: usize,
    pub spacing: Spacing,
    /// Magnus substeps per x cell.
    pub substeps: usize,
    pub solver: SolverKind,
}

impl Default for SpectralSection {
    fn default() -> Self {
        SpectralSection { z_max: 16.0, nodes: 512, spacing: Spacing::Mapped, substeps: 1, solver: SolverKind::Auto }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on the Jost integration error, checked through the chart
    /// defect and the transfer-matrix determinant.
    pub ode_tol: f64,
    pub rh_tol: f64,
    /// Station drift of the Wronskians.
    pub wronskian_tol: f64,
    pub a_threshold: f64,
    /// Allowed `||M(0)₁₁| − 1|`.
    pub gauge_tol: f64,
    /// Relative sup error of a round trip at `T = 0`.
    pub roundtrip_rel: f64,
    /// Relative sup distance to the PDE evolution at `T ≠ 0`.
    pub pde_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_tol: 1e-8,
            rh_tol: 1e-11,
            wronskian_tol: 1e-8,
            a_threshold: 1e-3,
            gauge_tol: 1e-6,
            roundtrip_rel: 1e-3,
            pde_rel: 5e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t: f64,
    /// PDE step; `null` means `dx`.
    pub dt: Option<f64>,
    pub splitting: Splitting,
    pub boundary: Boundary,
    pub output_every: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection { t: 0.0, dt: None, splitting: Splitting::Strang, boundary: Boundary::ZeroPad, output_every: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    /// Potential file (`direct`, `roundtrip`, `pde-check`, `norms`) or
    /// reflection directory (`evolve-spectral`, `inverse`). Without it the
    /// Gaussian datum below is used where a potential is needed.
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl Default for IoSection {
    fn default() -> Self {
        IoSection { input: None, output_dir: PathBuf::from("out"), format: Format::Csv }
    }
}

/// `u = u_amp·e^{−x²}`, `v = v_amp·e^{−x²}` on the configured grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatumSection {
    pub u_amp: f64,
    pub v_amp: f64,
}

impl Default for DatumSection {
    fn default() -> Self {
        DatumSection { u_amp: 0.2, v_amp: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_n: usize,
    pub max_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_n: 1 << 20, max_nodes: 8192 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub spectral: SpectralSection,
    pub tolerances: Tolerances,
    pub time: TimeSection,
    pub io: IoSection,
    pub datum: DatumSection,
    pub limits: Limits,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("ode_tol", t.ode_tol),
            ("rh_tol", t.rh_tol),
            ("wronskian_tol", t.wronskian_tol),
            ("a_threshold", t.a_threshold),
            ("gauge_tol", t.gauge_tol),
            ("roundtrip_rel", t.roundtrip_rel),
            ("pde_rel", t.pde_rel),
        ] {
            if !(v > 0.0) {
                return Err(CliError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        if self.io.output_dir.as_os_str().is_empty() {
            return Err(CliError::Config("output_dir must not be empty".into()));
        }
        if matches!(&self.io.input, Some(p) if p.as_os_str().is_empty()) {
            return Err(CliError::Config("input path must not be empty".into()));
        }
        if self.grid.n < 2 || self.grid.n > self.limits.max_n {
            return Err(CliError::Config(format!("grid.n = {} outside [2, {}]", self.grid.n, self.limits.max_n)));
        }
        if self.spectral.nodes < 4 || self.spectral.nodes > self.limits.max_nodes {
            return Err(CliError::Config(format!(
                "spectral.nodes = {} outside [4, {}]",
                self.spectral.nodes, self.limits.max_nodes
            )));
        }
        if !self.time.t.is_finite() {
            return Err(CliError::Config("time.T must be finite".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            z_max: self.spectral.z_max,
            nodes: self.spectral.nodes,
            spacing: self.spectral.spacing,
            direct: DirectConfig {
                jost: JostConfig { substeps: self.spectral.substeps, ..Default::default() },
                // Abort only on gross drift; the tolerance proper is checked on the report.
                wronskian_tol: self.tolerances.wronskian_tol.max(1e-6),
                ..Default::default()
            },
            inverse: InverseConfig {
                rh: RhConfig { solver: self.spectral.solver, tol: self.tolerances.rh_tol, ..Default::default() },
                gauge_tol: self.tolerances.gauge_tol.max(1e-4),
            },
            a_threshold: self.tolerances.a_threshold,
        }
    }

    /// The input potential, or the configured Gaussian datum.
    pub fn potential(&self) -> CliResult<Potential> {
        match &self.io.input {
            Some(path) => Ok(io::read_potential(path)?),
            None => {
                let g = make_xgrid(self.grid.half_width, self.grid.n)?;
                Ok(Potential::gaussian(g, self.datum.u_amp, self.datum.v_amp))
            }
        }
    }

    fn evolver(&self, dx: f64) -> EvolverConfig {
        EvolverConfig {
            dt: self.time.dt.unwrap_or(dx),
            splitting: self.time.splitting,
            boundary: self.time.boundary,
            output_every: self.time.output_every,
            ..Default::default()
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.io.output_dir.join(name)
    }

    fn ext(&self) -> &'static str {
        match self.io.format {
            Format::Csv => "csv",
            Format::Bin => "bin",
        }
    }

    fn input_dir(&self) -> CliResult<&Path> {
        self.io
            .input
            .as_deref()
            .ok_or_else(|| CliError::Config("this command needs io.input pointing at a reflection directory".into()))
    }
}

/// Create the output directory and echo the effective config into it.
pub fn prepare_output(cfg: &RunConfig) -> CliResult<()> {
    std::fs::create_dir_all(&cfg.io.output_dir)?;
    std::fs::write(cfg.out("effective_config.json"), cfg.to_json() + "\n")?;
    Ok(())
}

/// Scattering and reflection data of the input potential.
pub fn cmd_direct(cfg: &RunConfig) -> CliResult<()> {
    prepare_output(cfg)?;
    let p = cfg.potential()?;
    let pc = cfg.pipeline();
    let ss = compute_scattering(&p, &pc.spectral_grid()?, &pc.direct)?;
    let rep = detect_spectrum_obstructions(&ss, pc.a_threshold);
    io::write_scattering(&cfg.io.output_dir, "scattering", &ss, &rep, cfg.io.format)?;
    if rep.verdict == Verdict::Obstructed {
        return Err(CliError::Obstructed(format!("min |a| = {:e}, winding {}", rep.min_abs_a, rep.winding)));
    }
    let rs = reflections_from_scattering(&ss, pc.a_threshold)?;
    io::write_reflections(&cfg.io.output_dir, "reflections", &rs, cfg.io.format)?;
    Ok(())
}

/// Advance stored reflection data by `time.T`.
pub fn cmd_evolve_spectral(cfg: &RunConfig) -> CliResult<()> {
    let rs = io::read_reflections(cfg.input_dir()?, "reflections")?;
    prepare_output(cfg)?;
    let ev = evolve_reflections(&rs, cfg.time.t);
    io::write_reflections(&cfg.io.output_dir, "reflections", &ev, cfg.io.format)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InverseReport {
    pub t: f64,
    pub gauge_modulus_defect: f64,
    pub max_rh_residual: f64,
    pub seconds: f64,
}

/// Reconstruct `(u, v)` at time `time.T` from stored reflection data.
pub fn cmd_inverse(cfg: &RunConfig) -> CliResult<()> {
    let rs = io::read_reflections(cfg.input_dir()?, "reflections")?;
    prepare_output(cfg)?;
    let grid = make_xgrid(cfg.grid.half_width, cfg.grid.n)?;
    let pc = cfg.pipeline();
    let t0 = Instant::now();
    let rec = inverse(&rs, &grid, cfg.time.t, &pc.inverse)?;
    let seconds = t0.elapsed().as_secs_f64();
    io::write_potential(&cfg.out(&format!("potential.{}", cfg.ext())), &rec.p, cfg.io.format)?;
    let mut gauge = Vec::with_capacity(3 * grid.len());
    for j in 0..grid.len() {
        gauge.extend([grid.x(j), rec.gauge[j], rec.gauge_ii[j]]);
    }
    io::write_table(&cfg.out(&format!("gauge.{}", cfg.ext())), &Table::new(&["x", "gauge_i", "gauge_ii"], gauge), cfg.io.format)?;
    let report = InverseReport {
        t: cfg.time.t,
        gauge_modulus_defect: rec.gauge_modulus_defect.0.max(rec.gauge_modulus_defect.1),
        max_rh_residual: rec.max_residual,
        seconds,
    };
    io::write_json(&cfg.out("inverse_report.json"), &report)?;
    Ok(())
}

/// Moment table of both problems, for debugging a reconstruction.
pub fn cmd_moments(cfg: &RunConfig) -> CliResult<()> {
    let rs = io::read_reflections(cfg.input_dir()?, "reflections")?;
    prepare_output(cfg)?;
    let xs = make_xgrid(cfg.grid.half_width, cfg.grid.n)?.xs();
    let rh = cfg.pipeline().inverse.rh;
    for (chart, name) in [(RhpChart::RhpI, "moments_i.bin"), (RhpChart::RhpII, "moments_ii.bin")] {
        let sols = solve_rhp_sweep(&rs, &xs, cfg.time.t, chart, rh)?;
        io::write_bin(&cfg.out(name), &io::moment_table(&xs, &sols))?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundtripFile {
    pub report: RoundtripReport,
    /// Sup distance to the PDE evolution, relative, for `(u, v)`.
    pub pde_rel_err: Option<(f64, f64)>,
    pub seconds_pde: Option<f64>,
    pub violations: Vec<String>,
}

/// Tolerance checks applied to a round trip. The limit mismatch of `a` at
/// the grid ends is reported but not gated: it is set by `z_max`.
pub fn roundtrip_violations(r: &RoundtripReport, pde: Option<(f64, f64)>, tol: &Tolerances) -> Vec<String> {
    let mut v = Vec::new();
    let mut check = |name: &str, value: f64, bound: f64| {
        if !(value <= bound) {
            v.push(format!("{name} = {value:e} > {bound:e}"));
        }
    };
    check("wronskian drift", r.max_wronskian_drift, tol.wronskian_tol);
    check("determinant defect", r.max_determinant_defect, tol.ode_tol);
    check("chart defect", r.max_chart_defect, tol.ode_tol);
    check("gauge modulus", r.gauge_modulus_defect, tol.gauge_tol);
    check("rh residual", r.max_rh_residual, tol.rh_tol);
    if r.t == 0.0 {
        check("roundtrip u", r.rel_err_u, tol.roundtrip_rel);
        check("roundtrip v", r.rel_err_v, tol.roundtrip_rel);
    }
    if let Some((du, dv)) = pde {
        check("pde u", du, tol.pde_rel);
        check("pde v", dv, tol.pde_rel);
    }
    v
}

/// Direct transform, spectral evolution to `time.T`, inverse transform,
/// optionally compared with the PDE evolution of the same datum.
pub fn cmd_roundtrip(cfg: &RunConfig, cross_check_pde: bool) -> CliResult<()> {
    prepare_output(cfg)?;
    let p0 = cfg.potential()?;
    let out = match roundtrip(&p0, cfg.time.t, &cfg.pipeline()) {
        Err(e @ Error::Obstructed { .. }) => return Err(e.into()),
        other => other?,
    };
    io::write_potential(&cfg.out(&format!("recovered.{}", cfg.ext())), &out.recon.p, cfg.io.format)?;
    let (pde_rel_err, seconds_pde) = if cross_check_pde {
        let t0 = Instant::now();
        let ev = mtmpde::evolve(&p0, cfg.time.t, &cfg.evolver(p0.grid().dx()))?;
        io::write_potential(&cfg.out(&format!("pde.{}", cfg.ext())), &ev.p, cfg.io.format)?;
        (Some(mtmpde::relative_sup_distance(&out.recon.p, &ev.p)), Some(t0.elapsed().as_secs_f64()))
    } else {
        (None, None)
    };
    let violations = roundtrip_violations(&out.report, pde_rel_err, &cfg.tolerances);
    let file = RoundtripFile { report: out.report, pde_rel_err, seconds_pde, violations: violations.clone() };
    io::write_json(&cfg.out("roundtrip_report.json"), &file)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Tolerance(violations))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PdeCheckReport {
    pub t: f64,
    pub max_a_defect: f64,
    pub max_b_phase_defect: f64,
    pub charge_drift: f64,
}

/// Evolve with the PDE, recompute scattering and compare with the
/// spectral prediction: `a` is invariant and `b` turns by
/// `e^{−iT(z+1/z)/2}`.
pub fn cmd_pde_check(cfg: &RunConfig) -> CliResult<PdeCheckReport> {
    prepare_output(cfg)?;
    let p0 = cfg.potential()?;
    let pc = cfg.pipeline();
    let grid = pc.spectral_grid()?;
    let ev = mtmpde::evolve(&p0, cfg.time.t, &cfg.evolver(p0.grid().dx()))?;
    let s0 = compute_scattering(&p0, &grid, &pc.direct)?;
    let s1 = compute_scattering(&ev.p, &grid, &pc.direct)?;
    let mut rows = Vec::with_capacity(4 * grid.len());
    let (mut max_a, mut max_b) = (0.0f64, 0.0f64);
    for k in 0..grid.len() {
        let da = (s1.a[k] - s0.a[k]).norm();
        let expected = s0.bp[k] * C64::from_polar(1.0, -0.5 * cfg.time.t * grid.sum_recip(k));
        let db = if s0.bp[k].norm() >= 1e-4 { (s1.bp[k] / expected).arg().abs() } else { f64::NAN };
        max_a = max_a.max(da);
        if db.is_finite() {
            max_b = max_b.max(db);
        }
        rows.extend([grid.node(k), da, db, s0.bp[k].norm()]);
    }
    io::write_table(
        &cfg.out(&format!("pde_check.{}", cfg.ext())),
        &Table::new(&["z", "a_defect", "b_phase_defect", "abs_b0"], rows),
        cfg.io.format,
    )?;
    let mut diag = Vec::with_capacity(4 * ev.trace.len());
    for r in &ev.trace {
        diag.extend([r.t, r.charge, r.max_u, r.max_v]);
    }
    io::write_table(&cfg.out(&format!("diagnostics.{}", cfg.ext())), &Table::new(&["t", "charge", "max_u", "max_v"], diag), cfg.io.format)?;
    let report = PdeCheckReport { t: cfg.time.t, max_a_defect: max_a, max_b_phase_defect: max_b, charge_drift: mtmpde::charge_drift(&ev.trace) };
    io::write_json(&cfg.out("pde_check.json"), &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormsFile {
    pub u: NormReport,
    pub v: NormReport,
    pub charge: f64,
    pub tail: TailReport,
}

/// Weighted norms and truncation-tail content of the input potential.
pub fn cmd_norms(cfg: &RunConfig) -> CliResult<NormsFile> {
    prepare_output(cfg)?;
    let p = cfg.potential()?;
    let file = NormsFile {
        u: weighted_norms(p.u(), p.grid())?,
        v: weighted_norms(p.v(), p.grid())?,
        charge: p.charge(),
        tail: truncation_tail(&p, 0.1),
    };
    io::write_json(&cfg.out("norms.json"), &file)?;
    Ok(file)
}

/// Write the configured Gaussian datum as a potential file.
pub fn cmd_make_datum(cfg: &RunConfig) -> CliResult<()> {
    prepare_output(cfg)?;
    let g = make_xgrid(cfg.grid.half_width, cfg.grid.n)?;
    let p = Potential::gaussian(g, cfg.datum.u_amp, cfg.datum.v_amp);
    io::write_potential(&cfg.out(&format!("datum.{}", cfg.ext())), &p, cfg.io.format)?;
    Ok(())
}

/// Worker count from the flag, then `MTM_IST_WORKERS`, else rayon's default.
pub fn worker_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("MTM_IST_WORKERS").ok().and_then(|s| s.trim().parse().ok())).filter(|&n| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_json() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn empty_json_gives_defaults() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_json_is_defaulted() {
        let cfg = RunConfig::from_json(r#"{"grid": {"n": 101}, "time": {"T": 1.5}}"#).unwrap();
        assert_eq!(cfg.grid.n, 101);
        assert_eq!(cfg.grid.half_width, 20.0);
        assert_eq!(cfg.time.t, 1.5);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(RunConfig::from_json(r#"{"tolerances": {"rh_tol": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grid": {"n": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"io": {"output_dir": ""}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"spectral": {"nodes": 100000}}"#).is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            CliError::Config("x".into()).exit_code(),
            CliError::Obstructed("x".into()).exit_code(),
            CliError::Tolerance(vec![]).exit_code(),
        ];
        assert_eq!(codes, [EXIT_FAILURE, EXIT_OBSTRUCTED, EXIT_TOLERANCE]);
    }
}
