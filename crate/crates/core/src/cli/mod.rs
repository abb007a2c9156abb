//! The `hillspec` command-line tool.

mod output;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::floquet::{discriminant, FloquetError, MAX_TOL, MIN_TOL};
use crate::potential::{bound_region, check_pt_symmetry, PeriodicPotential, PotentialError};
use crate::spectrum::{
    certify_extremum, default_probe_radius, default_trace_box, find_band_edges, find_critical_points,
    find_interior_extrema, scan_real_line, trace_arc, trace_ray, verify_local_shape, CertificateConfig, NonrealCertificate,
    Rect, Regime, SpectralArc, SpectrumError, Tolerances, TraceConfig, PT_TOL,
};
use output::{cnum, fmt, num};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  invalid command-line usage
  2  malformed potential spec (JSON or expression)
  3  numerical failure (integrator, corrector, order detection)
  4  verification failure (arc count or angle mismatch, potential not PT-symmetric)
  5  I/O error";

/// Points per direction of a spectrum-command trace.
const TRACE_POINTS: usize = 4000;

#[derive(Debug, Parser)]
#[command(
    name = "hillspec",
    version,
    about = "Floquet discriminants and complex band spectra of periodic Schrödinger operators",
    after_help = EXIT_CODES
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate Δ and Δ′ over a real window (or a complex grid with --box).
    Discriminant(CommonArgs),
    /// Real bands, band edges, critical points and traced spectral arcs.
    Spectrum(CommonArgs),
    /// Compare predicted and measured arc directions at the critical points in a box.
    Verify(CommonArgs),
    /// Sweep an amplitude parameter of an expression spec and certify nonreal spectrum.
    ScanFamily(FamilyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window(pub f64, pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Potential spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Real energy window A,B.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Complex box RE_MIN,RE_MAX,IM_MIN,IM_MAX.
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    pub bbox: Option<Rect>,
    /// Grid points per side for complex pre-scans.
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Samples along the real window.
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub ode_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub trace_tol: f64,
    /// Tracer step length.
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    /// Output file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; the default depends on the command.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// START,END,COUNT for the amplitude sweep.
    #[arg(long, value_parser = parse_amplitudes, allow_hyphen_values = true)]
    pub amplitudes: Amplitudes,
    /// Identifier substituted in the expression source.
    #[arg(long, default_value = "A")]
    pub param: String,
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got '{s}'"));
    }
    parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect()
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v = parse_list(s, 2)?;
    if !(v[0] < v[1]) {
        return Err(format!("window must satisfy A < B, got {s}"));
    }
    Ok(Window(v[0], v[1]))
}

fn parse_box(s: &str) -> Result<Rect, String> {
    let v = parse_list(s, 4)?;
    Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

fn parse_amplitudes(s: &str) -> Result<Amplitudes, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected START,END,COUNT, got '{s}'"));
    }
    let start = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let end = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let count = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    if count == 0 || !start.is_finite() || !end.is_finite() {
        return Err(format!("invalid amplitude range '{s}'"));
    }
    Ok(Amplitudes { start, end, count })
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Spec(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        CliError::Spec(e.to_string())
    }
}

impl From<FloquetError> for CliError {
    fn from(e: FloquetError) -> Self {
        match e {
            FloquetError::InvalidTolerance(_) => CliError::Usage(e.to_string()),
            FloquetError::Potential(p) => CliError::Spec(p.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::Floquet(f) => f.into(),
            SpectrumError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            SpectrumError::NotPTSymmetric(_) | SpectrumError::ArcCountMismatch { .. } => CliError::Verification(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

/// Rendered output plus a verification verdict (written before failing).
struct Outcome {
    text: String,
    failure: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, failure: None }
    }
}

fn read_spec(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(args: &CommonArgs) -> Result<PeriodicPotential, CliError> {
    Ok(PeriodicPotential::from_spec_json(&read_spec(&args.spec)?)?)
}

fn tolerances(args: &CommonArgs) -> Result<Tolerances, CliError> {
    if !(MIN_TOL..=MAX_TOL).contains(&args.ode_tol) {
        return Err(CliError::Usage(format!(
            "--ode-tol must lie in [{MIN_TOL:e}, {MAX_TOL:e}], got {}",
            args.ode_tol
        )));
    }
    if !(args.trace_tol > 0.0 && args.trace_tol < 1.0) {
        return Err(CliError::Usage(format!("--trace-tol must lie in (0, 1), got {}", args.trace_tol)));
    }
    if args.samples < 2 || args.grid < 4 {
        return Err(CliError::Usage("--samples must be at least 2 and --grid at least 4".into()));
    }
    Ok(Tolerances {
        ode: args.ode_tol,
        spectral: args.trace_tol,
    })
}

/// Twenty units of energy starting just below the spectral bound.
fn default_window(v: &PeriodicPotential) -> Window {
    let bound = bound_region(v);
    let lo = if bound.re_min.is_finite() { bound.re_min.floor() - 1.0 } else { -1.0 };
    Window(lo, lo + 20.0)
}

fn window_or_default(args: &CommonArgs, v: &PeriodicPotential) -> Window {
    args.window.unwrap_or_else(|| default_window(v))
}

fn box_or_default(args: &CommonArgs, v: &PeriodicPotential, w: Window) -> Rect {
    args.bbox.unwrap_or_else(|| default_trace_box(v, w.1))
}

fn format_of(args: &CommonArgs, default: Format, allowed: &[Format]) -> Result<Format, CliError> {
    let f = args.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(CliError::Usage(format!("format {f:?} is not available for this command")));
    }
    Ok(f)
}

fn rect_json(r: &Rect) -> Value {
    json!([num(r.re_min), num(r.re_max), num(r.im_min), num(r.im_max)])
}

fn cmd_discriminant(args: &CommonArgs) -> Result<Outcome, CliError> {
    let v = load(args)?;
    let tols = tolerances(args)?;
    let format = format_of(args, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;

    if let Some(bbox) = args.bbox {
        if format == Format::Svg {
            return Err(CliError::Usage("svg output of the discriminant needs --window".into()));
        }
        let rows: Vec<(C64, C64, C64)> = bbox
            .grid(args.grid)
            .into_iter()
            .map(|e| discriminant(&v, e, tols.ode).map(|d| (e, d.delta, d.delta_prime)))
            .collect::<Result<_, _>>()?;
        let text = match format {
            Format::Csv => output::csv(
                &["re_e", "im_e", "re_delta", "im_delta", "re_dprime", "im_dprime"],
                rows.iter().map(|(e, d, p)| vec![fmt(e.re), fmt(e.im), fmt(d.re), fmt(d.im), fmt(p.re), fmt(p.im)]),
            ),
            _ => {
                let mut body = Map::new();
                body.insert("period".into(), num(v.period()));
                body.insert("box".into(), rect_json(&bbox));
                body.insert("grid".into(), json!(args.grid.max(2)));
                body.insert(
                    "samples".into(),
                    rows.iter()
                        .map(|(e, d, p)| json!({"e": cnum(*e), "delta": cnum(*d), "delta_prime": cnum(*p)}))
                        .collect(),
                );
                output::to_text(&output::document("discriminant", body))
            }
        };
        return Ok(Outcome::ok(text));
    }

    let w = window_or_default(args, &v);
    let scan = scan_real_line(&v, w.0, w.1, args.samples, &tols)?;
    let text = match format {
        Format::Csv => output::csv(
            &["e", "re_delta", "im_delta", "re_dprime", "im_dprime"],
            scan.samples.iter().map(|s| {
                vec![
                    fmt(s.energy),
                    fmt(s.delta.re),
                    fmt(s.delta.im),
                    fmt(s.delta_prime.re),
                    fmt(s.delta_prime.im),
                ]
            }),
        ),
        Format::Json => {
            let mut body = Map::new();
            body.insert("period".into(), num(v.period()));
            body.insert("window".into(), json!([num(w.0), num(w.1)]));
            body.insert(
                "samples".into(),
                scan.samples
                    .iter()
                    .map(|s| json!({"e": num(s.energy), "delta": cnum(s.delta), "delta_prime": cnum(s.delta_prime)}))
                    .collect(),
            );
            body.insert("bands".into(), scan.bands.iter().map(|&(a, b)| json!([num(a), num(b)])).collect());
            output::to_text(&output::document("discriminant", body))
        }
        _ => discriminant_svg(&scan.samples, w),
    };
    Ok(Outcome::ok(text))
}

fn discriminant_svg(samples: &[crate::spectrum::ScanSample], w: Window) -> String {
    const CLIP: f64 = 2.5;
    let mut plot = svg::Plot::new((w.0, w.1), (-CLIP, CLIP));
    plot.hline(1.0, "gray", true);
    plot.hline(-1.0, "gray", true);
    plot.hline(0.0, "lightgray", false);
    for (part, color) in [(0usize, "black"), (1, "steelblue")] {
        let mut run: Vec<(f64, f64)> = Vec::new();
        for s in samples {
            let y = if part == 0 { s.delta.re } else { s.delta.im };
            if y.abs() <= CLIP {
                run.push((s.energy, y));
            } else {
                plot.polyline(&run, color, 1.5);
                run.clear();
            }
        }
        plot.polyline(&run, color, 1.5);
    }
    plot.finish("discriminant (Re black, Im blue)", "E", "Δ(E)")
}

struct SpectrumRun {
    window: Window,
    bbox: Rect,
    bands: Vec<(f64, f64)>,
    edges: Vec<crate::spectrum::BandEdge>,
    critical: Vec<crate::spectrum::CriticalPoint>,
    arcs: Vec<SpectralArc>,
    skipped: Vec<(C64, String)>,
    pt_symmetric: bool,
    certificates: Vec<NonrealCertificate>,
}

fn is_covered(arcs: &[SpectralArc], e: C64, step: f64) -> bool {
    arcs.iter().any(|a| a.distance_to(e) < 0.25 * step)
}

fn recoverable(e: &SpectrumError) -> bool {
    matches!(
        e,
        SpectrumError::CorrectorDiverged(_) | SpectrumError::SeedNotOnSpectrum(_) | SpectrumError::SeedAtCriticalPoint(_)
    )
}

fn run_spectrum(args: &CommonArgs, v: &PeriodicPotential) -> Result<SpectrumRun, CliError> {
    let tols = tolerances(args)?;
    let window = window_or_default(args, v);
    let bbox = box_or_default(args, v, window);
    let scan = scan_real_line(v, window.0, window.1, args.samples, &tols)?;
    let edges = find_band_edges(v, &bbox, args.grid, &tols)?;
    let critical = find_critical_points(v, &bbox, args.grid, &tols)?;
    let cfg = TraceConfig {
        step: args.step,
        trace_tol: tols.spectral,
        ode_tol: tols.ode,
        max_points: TRACE_POINTS,
        bbox,
    };

    let mut arcs: Vec<SpectralArc> = Vec::new();
    let mut skipped = Vec::new();
    for &(a, b) in &scan.bands {
        let seed = C64::new(0.5 * (a + b), 0.0);
        if !bbox.contains(seed) || is_covered(&arcs, seed, cfg.step) {
            continue;
        }
        match trace_arc(v, seed, &cfg) {
            Ok(arc) => arcs.push(arc),
            Err(e) if recoverable(&e) => skipped.push((seed, e.to_string())),
            Err(e) => return Err(e.into()),
        }
    }
    for cp in critical.iter().filter(|cp| cp.regime != Regime::OffSpectrum) {
        for &angle in &cp.directions {
            let probe = cp.e0 + C64::from_polar(cfg.step, angle);
            if is_covered(&arcs, probe, cfg.step) {
                continue;
            }
            // a point with two germs lies inside a single arc
            let traced = if cp.directions.len() == 2 {
                trace_arc(v, cp.e0 + C64::from_polar(0.5 * cfg.step, angle), &cfg)
            } else {
                trace_ray(v, cp.e0, cp.order_k, angle, &cfg)
            };
            match traced {
                Ok(arc) => arcs.push(arc),
                Err(e) if recoverable(&e) => skipped.push((probe, e.to_string())),
                Err(e) => return Err(e.into()),
            }
        }
    }

    let pt_symmetric = check_pt_symmetry(v, PT_TOL).pt_symmetric;
    let mut certificates = Vec::new();
    if pt_symmetric {
        let cert_cfg = CertificateConfig {
            scan_points: args.samples,
            tols,
            ..CertificateConfig::default()
        };
        for (e0, _) in find_interior_extrema(v, (window.0, window.1), args.samples, &tols)? {
            if let Some(c) = certify_extremum(v, e0, window.1, &cert_cfg)? {
                certificates.push(c);
            }
        }
    }
    Ok(SpectrumRun {
        window,
        bbox,
        bands: scan.bands,
        edges,
        critical,
        arcs,
        skipped,
        pt_symmetric,
        certificates,
    })
}

fn cmd_spectrum(args: &CommonArgs) -> Result<Outcome, CliError> {
    let v = load(args)?;
    let format = format_of(args, Format::Json, &[Format::Csv, Format::Json, Format::Svg])?;
    let run = run_spectrum(args, &v)?;
    let bound = bound_region(&v);
    let text = match format {
        Format::Json => {
            let mut body = Map::new();
            body.insert("period".into(), num(v.period()));
            body.insert("window".into(), json!([num(run.window.0), num(run.window.1)]));
            body.insert("box".into(), rect_json(&run.bbox));
            body.insert(
                "bound".into(),
                json!({"re_min": num(bound.re_min), "im_min": num(bound.im_min), "im_max": num(bound.im_max), "exact": bound.exact}),
            );
            body.insert("bands".into(), run.bands.iter().map(|&(a, b)| json!([num(a), num(b)])).collect());
            body.insert(
                "band_edges".into(),
                run.edges
                    .iter()
                    .map(|b| json!({"e": cnum(b.energy), "label": b.sign.label(), "simple": b.simple}))
                    .collect(),
            );
            body.insert("critical_points".into(), run.critical.iter().map(output::critical_point).collect());
            body.insert("arc_count".into(), json!(run.arcs.len()));
            body.insert("arcs".into(), run.arcs.iter().map(output::arc).collect());
            body.insert(
                "skipped_seeds".into(),
                run.skipped.iter().map(|(e, why)| json!({"e": cnum(*e), "reason": why})).collect(),
            );
            body.insert("pt_symmetric".into(), json!(run.pt_symmetric));
            body.insert("certificates".into(), run.certificates.iter().map(output::certificate).collect());
            output::to_text(&output::document("spectrum", body))
        }
        Format::Csv => output::csv(
            &["arc", "index", "re_e", "im_e", "re_delta"],
            run.arcs.iter().enumerate().flat_map(|(i, a)| {
                a.points
                    .iter()
                    .zip(&a.delta_values)
                    .enumerate()
                    .map(move |(j, (p, d))| vec![i.to_string(), j.to_string(), fmt(p.re), fmt(p.im), fmt(*d)])
            }),
        ),
        _ => spectrum_svg(&run, &bound),
    };
    Ok(Outcome::ok(text))
}

fn spectrum_svg(run: &SpectrumRun, bound: &crate::potential::SpectralBound) -> String {
    let b = run.bbox;
    let mut plot = svg::Plot::new((b.re_min, b.re_max), (b.im_min, b.im_max));
    if bound.re_min.is_finite() && bound.im_min.is_finite() && bound.im_max.is_finite() {
        let thickness = if bound.im_max > bound.im_min { 0.0 } else { 1e-3 * (b.im_max - b.im_min) };
        plot.rect(bound.re_min, b.re_max, bound.im_min - thickness, bound.im_max + thickness, "khaki");
    }
    plot.hline(0.0, "lightgray", false);
    for arc in &run.arcs {
        let pts: Vec<(f64, f64)> = arc.points.iter().map(|p| (p.re, p.im)).collect();
        plot.polyline(&pts, "black", 2.0);
    }
    for e in &run.edges {
        plot.marker(e.energy.re, e.energy.im, e.sign.label(), "crimson");
    }
    for cp in run.critical.iter().filter(|cp| cp.regime == Regime::Interior) {
        plot.marker(cp.e0.re, cp.e0.im, "", "darkgreen");
    }
    for c in &run.certificates {
        for w in &c.witness_points {
            plot.marker(w.re, w.im, "", "royalblue");
        }
    }
    plot.finish("spectrum (strip shaded, P/AP band edges)", "Re E", "Im E")
}

fn angles_text(a: &[f64]) -> String {
    let parts: Vec<String> = a.iter().map(|x| format!("{x:.6}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn cmd_verify(args: &CommonArgs) -> Result<Outcome, CliError> {
    let v = load(args)?;
    let tols = tolerances(args)?;
    let format = format_of(args, Format::Text, &[Format::Text, Format::Json, Format::Csv])?;
    let w = window_or_default(args, &v);
    let bbox = box_or_default(args, &v, w);
    let critical = find_critical_points(&v, &bbox, args.grid, &tols)?;

    struct Row {
        cp: crate::spectrum::CriticalPoint,
        radius: f64,
        measured: Vec<f64>,
        error: f64,
        problem: Option<String>,
    }
    let mut rows = Vec::new();
    for cp in critical {
        let radius = default_probe_radius(cp.e0);
        let row = match verify_local_shape(&v, &cp, radius, &tols) {
            Ok(r) => {
                let problem = (r.max_angle_error > 10.0 * radius)
                    .then(|| format!("angle error {:e} exceeds {:e}", r.max_angle_error, 10.0 * radius));
                Row { cp, radius, measured: r.measured_angles, error: r.max_angle_error, problem }
            }
            Err(e @ SpectrumError::ArcCountMismatch { .. }) => Row {
                cp,
                radius,
                measured: Vec::new(),
                error: f64::NAN,
                problem: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }

    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| r.problem.as_ref().map(|p| format!("at {}: {p}", r.cp.e0)))
        .collect();
    let text = match format {
        Format::Text => {
            let mut s = format!("critical points in box: {}\n", rows.len());
            for r in &rows {
                s.push_str(&format!(
                    "E0 = {} {}  k={}, {}, predicted {}, measured {}, max angle error {:.3e}, {}\n",
                    fmt(r.cp.e0.re),
                    fmt(r.cp.e0.im),
                    r.cp.order_k,
                    output::regime_label(r.cp.regime),
                    angles_text(&r.cp.directions),
                    angles_text(&r.measured),
                    r.error,
                    r.problem.as_deref().unwrap_or("ok")
                ));
            }
            s
        }
        Format::Csv => output::csv(
            &["re_e0", "im_e0", "order", "regime", "predicted", "measured", "max_angle_error", "status"],
            rows.iter().map(|r| {
                let join = |a: &[f64]| a.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(" ");
                vec![
                    fmt(r.cp.e0.re),
                    fmt(r.cp.e0.im),
                    r.cp.order_k.to_string(),
                    output::regime_label(r.cp.regime),
                    join(&r.cp.directions),
                    join(&r.measured),
                    fmt(r.error),
                    if r.problem.is_some() { "fail".into() } else { "ok".into() },
                ]
            }),
        ),
        _ => {
            let mut body = Map::new();
            body.insert("box".into(), rect_json(&bbox));
            body.insert(
                "critical_points".into(),
                rows.iter()
                    .map(|r| {
                        let mut entry = output::critical_point(&r.cp);
                        entry["probe_radius"] = num(r.radius);
                        entry["measured"] = r.measured.iter().map(|&a| num(a)).collect();
                        entry["max_angle_error"] = num(r.error);
                        entry["status"] = json!(r.problem.as_deref().unwrap_or("ok"));
                        entry
                    })
                    .collect(),
            );
            output::to_text(&output::document("verify", body))
        }
    };
    Ok(Outcome {
        text,
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

fn cmd_scan_family(fa: &FamilyArgs) -> Result<Outcome, CliError> {
    let args = &fa.common;
    let tols = tolerances(args)?;
    let format = format_of(args, Format::Csv, &[Format::Csv, Format::Json])?;
    let text = read_spec(&args.spec)?;
    let Amplitudes { start, end, count } = fa.amplitudes;
    let cfg = CertificateConfig {
        scan_points: args.samples,
        tols,
        ..CertificateConfig::default()
    };

    struct Row {
        a: f64,
        pt: bool,
        extrema: Vec<(f64, f64)>,
        certificates: Vec<NonrealCertificate>,
    }
    let mut rows = Vec::new();
    for i in 0..count {
        let a = if count == 1 { start } else { start + (end - start) * i as f64 / (count - 1) as f64 };
        let v = PeriodicPotential::from_spec_json_with_param(&text, &fa.param, a)?;
        let w = window_or_default(args, &v);
        let pt = check_pt_symmetry(&v, PT_TOL).pt_symmetric;
        let mut row = Row { a, pt, extrema: Vec::new(), certificates: Vec::new() };
        if pt {
            row.extrema = find_interior_extrema(&v, (w.0, w.1), args.samples, &tols)?;
            for &(e0, _) in &row.extrema {
                if let Some(c) = certify_extremum(&v, e0, w.1, &cfg)? {
                    row.certificates.push(c);
                }
            }
        }
        rows.push(row);
    }

    let out = match format {
        Format::Csv => output::csv(
            &["amplitude", "pt_symmetric", "extrema", "certificates", "witnesses"],
            rows.iter().map(|r| {
                vec![
                    fmt(r.a),
                    r.pt.to_string(),
                    r.extrema.len().to_string(),
                    r.certificates.len().to_string(),
                    r.certificates.iter().map(|c| c.witness_points.len()).sum::<usize>().to_string(),
                ]
            }),
        ),
        _ => {
            let mut body = Map::new();
            body.insert("parameter".into(), json!(fa.param));
            body.insert(
                "members".into(),
                rows.iter()
                    .map(|r| {
                        json!({
                            "amplitude": num(r.a),
                            "pt_symmetric": r.pt,
                            "extrema": r.extrema.iter().map(|&(e, d)| json!({"e0": num(e), "delta": num(d)})).collect::<Vec<_>>(),
                            "certificates": r.certificates.iter().map(output::certificate).collect::<Vec<_>>(),
                        })
                    })
                    .collect(),
            );
            output::to_text(&output::document("scan-family", body))
        }
    };
    let failure = rows
        .iter()
        .find(|r| !r.pt)
        .map(|r| format!("member {} is not PT-symmetric", fmt(r.a)));
    Ok(Outcome { text: out, failure })
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Runs a parsed command, writing results to `--out` or `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (outcome, out) = match &cli.command {
        Command::Discriminant(a) => (cmd_discriminant(a)?, a.out.as_deref()),
        Command::Spectrum(a) => (cmd_spectrum(a)?, a.out.as_deref()),
        Command::Verify(a) => (cmd_verify(a)?, a.out.as_deref()),
        Command::ScanFamily(f) => (cmd_scan_family(f)?, f.common.out.as_deref()),
    };
    emit(out, &outcome.text, stdout)?;
    match outcome.failure {
        Some(msg) => Err(CliError::Verification(msg)),
        None => Ok(()),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "hillspec: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
