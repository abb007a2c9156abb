//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{PI, TAU};
use std::process::{Command, ExitCode};
use std::time::Instant;

use hillspec::floquet::{
    cauchy_derivatives, delta_only, derivatives_at, discriminant, monodromy, monodromy_integrated, multipliers, MonodromyMatrix,
};
use hillspec::oracle::{oracle_discriminant, OracleKind};
use hillspec::potential::{bound_region, PeriodicPotential};
use hillspec::spectrum::{
    classify_point, default_probe_radius, default_trace_box, detect_nonreal_from_extremum, emanating_directions, find_band_edges,
    find_critical_points, find_interior_extrema, in_spectrum, trace_ray, verify_local_shape, CertificateConfig, EdgeSign,
    Rect, Regime, SpectrumError, Tolerances, TraceConfig, WITNESS_MIN_IM,
};
use hillspec::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn grid_20() -> Vec<C64> {
    Rect::new(-5.0, 5.0, -5.0, 5.0).unwrap().grid(20)
}

fn three_segments() -> PeriodicPotential {
    PeriodicPotential::piecewise(PI, vec![(1.0, c(0.0, 0.0)), (1.0, c(1.0, 1.0)), (PI - 2.0, c(0.0, -0.5))]).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let potentials = [
        ("free", PeriodicPotential::free(PI).unwrap()),
        ("constant i", PeriodicPotential::constant(PI, c(0.0, 1.0)).unwrap()),
        ("3-segment", three_segments()),
    ];
    let mut worst = 0.0f64;
    for (name, v) in &potentials {
        let kind = OracleKind::of(v).ok_or(format!("{name} has no oracle"))?;
        for e in grid_20() {
            let m = monodromy_integrated(v, e, 1e-12).map_err(|err| format!("{name} at {e}: {err}"))?;
            let err = (m.half_trace() - oracle_discriminant(&kind, PI, e)).norm();
            worst = worst.max(err);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("max |Δ - oracle| = {worst:.2e}, {secs:.2}s");
    if worst <= 1e-8 && secs < 10.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// |det(M − ρI)| relative to the size of its terms.
fn eigen_residual(m: &MonodromyMatrix, rho: C64) -> f64 {
    let value = (m.a - rho) * (m.d - rho) - m.b * m.c;
    let scale = m.a.norm() * m.d.norm() + m.b.norm() * m.c.norm() + rho.norm() * (m.a.norm() + m.d.norm()) + rho.norm_sqr();
    value.norm() / scale.max(1.0)
}

fn multiplier_invariant() -> Outcome {
    let potentials = [
        ("free", PeriodicPotential::free(PI).unwrap()),
        ("fourier", PeriodicPotential::fourier(PI, vec![(1, c(0.5, 0.0)), (-1, c(0.0, 0.3))]).unwrap()),
        ("3-segment", three_segments()),
        ("delta comb", PeriodicPotential::delta_comb(PI, c(0.2, 0.0), vec![(1.0, c(1.0, 0.5)), (2.5, c(-0.5, 0.0))]).unwrap()),
        ("i*sin(x)^3", PeriodicPotential::expression(PI, "i*sin(x)^3").unwrap()),
    ];
    let (mut det_worst, mut prod_worst, mut eig_worst) = (0.0f64, 0.0f64, 0.0f64);
    for (name, v) in &potentials {
        for e in grid_20() {
            let m = monodromy(v, e, 1e-12).map_err(|err| format!("{name} at {e}: {err}"))?;
            det_worst = det_worst.max((m.det() - 1.0).norm());
            let dv = discriminant(v, e, 1e-12).map_err(|err| format!("{name} at {e}: {err}"))?;
            let rho = multipliers(&dv);
            prod_worst = prod_worst.max((rho.rho1 * rho.rho2 - 1.0).norm());
            eig_worst = eig_worst.max(eigen_residual(&m, rho.rho1)).max(eigen_residual(&m, rho.rho2));
        }
    }
    let msg = format!("max |det M - 1| = {det_worst:.2e}, max |ρ1ρ2 - 1| = {prod_worst:.2e}, eigen residual {eig_worst:.2e}");
    if det_worst <= 1e-8 && prod_worst <= 1e-8 && eig_worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn membership_equivalence() -> Outcome {
    let tols = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    // (potential, offset of the real half-line its spectrum hugs)
    let potentials = [
        (PeriodicPotential::free(PI).unwrap(), c(0.0, 0.0)),
        (PeriodicPotential::constant(PI, c(0.0, 1.0)).unwrap(), c(0.0, 1.0)),
        (PeriodicPotential::piecewise(PI, vec![(1.0, c(0.0, 0.0)), (1.0, c(2.0, 0.0)), (PI - 2.0, c(-1.0, 0.0))]).unwrap(), c(0.0, 0.0)),
        (PeriodicPotential::expression(TAU, "i*sin(x)").unwrap(), c(0.0, 0.0)),
        (PeriodicPotential::expression(TAU, "i*sin(x)^3").unwrap(), c(0.0, 0.0)),
    ];
    let (total, mut mismatches, mut inside) = (10_000, 0, 0);
    for n in 0..total {
        let (v, offset) = &potentials[n % potentials.len()];
        let e = if n % 2 == 0 {
            c(rng.gen_range(-5.0..25.0), rng.gen_range(-5.0..5.0))
        } else {
            let im = if rng.gen_bool(0.1) { 0.0 } else { 10f64.powf(rng.gen_range(-12.0..-2.0)) };
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            offset + c(rng.gen_range(-1.0..25.0), sign * im)
        };
        match in_spectrum(v, e, &tols) {
            Ok(true) => inside += 1,
            Ok(false) => {}
            Err(SpectrumError::CriteriaMismatch { .. }) => mismatches += 1,
            Err(err) => return Err(format!("at {e}: {err}")),
        }
    }
    let msg = format!("{mismatches} mismatches over {total} energies ({inside} in the spectrum)");
    if mismatches == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Rays from every band edge and non-regular critical point in `bbox`.
fn trace_everything(v: &PeriodicPotential, bbox: Rect, tols: &Tolerances) -> Result<Vec<Vec<C64>>, String> {
    let mut cfg = TraceConfig::new(bbox);
    cfg.max_points = 1500;
    let mut starts = Vec::new();
    for edge in find_band_edges(v, &bbox, 20, tols).map_err(|e| e.to_string())? {
        starts.push(classify_point(v, edge.energy, tols).map_err(|e| e.to_string())?);
    }
    starts.extend(find_critical_points(v, &bbox, 20, tols).map_err(|e| e.to_string())?);
    let mut arcs = Vec::new();
    for cp in starts.iter().filter(|cp| cp.regime != Regime::OffSpectrum) {
        for &angle in &cp.directions {
            match trace_ray(v, cp.e0, cp.order_k, angle, &cfg) {
                Ok(arc) => arcs.push(arc.points),
                Err(SpectrumError::CorrectorDiverged(_) | SpectrumError::SeedNotOnSpectrum(_)) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    Ok(arcs)
}

fn strip_containment() -> Outcome {
    let tols = Tolerances::default();
    let potentials = [
        ("free", PeriodicPotential::free(PI).unwrap()),
        ("constant 2-0.5i", PeriodicPotential::constant(PI, c(2.0, -0.5)).unwrap()),
        ("3-segment", three_segments()),
        ("real 3-segment", PeriodicPotential::piecewise(PI, vec![(1.0, c(0.0, 0.0)), (1.0, c(2.0, 0.0)), (PI - 2.0, c(-1.0, 0.0))]).unwrap()),
    ];
    let (mut points, mut arcs_total, mut violations) = (0usize, 0usize, 0usize);
    for (name, v) in &potentials {
        let bound = bound_region(v);
        if !bound.exact {
            return Err(format!("{name}: bound is not exact"));
        }
        let arcs = trace_everything(v, default_trace_box(v, 15.0), &tols).map_err(|e| format!("{name}: {e}"))?;
        if arcs.is_empty() {
            return Err(format!("{name}: no arcs traced"));
        }
        arcs_total += arcs.len();
        for p in arcs.iter().flatten() {
            points += 1;
            if !bound.contains(*p, 1e-6) {
                violations += 1;
            }
        }
    }
    let msg = format!("{violations} violations over {points} points on {arcs_total} arcs");
    if violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn free_edges() -> Outcome {
    let start = Instant::now();
    let tols = Tolerances::default();
    let free = PeriodicPotential::free(PI).unwrap();
    let bbox = Rect::new(0.5, 9.5, -1.0, 1.0).unwrap();
    let cps = find_critical_points(&free, &bbox, 20, &tols).map_err(|e| e.to_string())?;
    let expected = [(1.0, EdgeSign::AntiPeriodic), (4.0, EdgeSign::Periodic), (9.0, EdgeSign::AntiPeriodic)];
    if cps.len() != expected.len() {
        return Err(format!("found {} critical points", cps.len()));
    }
    let mut worst_gap = 0.0f64;
    for (cp, (e0, sign)) in cps.iter().zip(expected) {
        if (cp.e0 - e0).norm() > 1e-6 || cp.order_k != 2 || cp.regime != Regime::Edge(sign) {
            return Err(format!("unexpected critical point {cp:?}"));
        }
        let report = verify_local_shape(&free, cp, default_probe_radius(cp.e0), &tols).map_err(|e| format!("at {e0}: {e}"))?;
        if report.arcs_found != 2 {
            return Err(format!("{} arcs at {e0}", report.arcs_found));
        }
        let gap = (report.measured_angles[1] - report.measured_angles[0]).rem_euclid(TAU);
        worst_gap = worst_gap.max((gap - PI).abs());
    }
    let d = derivatives_at(&free, c(1.0, 0.0), 2, 0.1, tols.ode).map_err(|e| e.to_string())?;
    let second_err = (d[2] - PI * PI / 4.0).norm();
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("gap error {worst_gap:.2e} rad, |Δ''(1) - π²/4| = {second_err:.2e}, {secs:.2}s");
    if worst_gap <= 1e-2 && second_err <= 1e-6 && secs < 5.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn regular_points() -> Outcome {
    let tols = Tolerances::default();
    let free = PeriodicPotential::free(PI).unwrap();
    let interior = classify_point(&free, c(0.25, 0.0), &tols).map_err(|e| e.to_string())?;
    if interior.order_k != 1 || interior.regime != Regime::Interior {
        return Err(format!("E = 1/4 classified as {interior:?}"));
    }
    let r = verify_local_shape(&free, &interior, default_probe_radius(interior.e0), &tols).map_err(|e| e.to_string())?;
    if r.arcs_found != 2 {
        return Err(format!("{} intersections at E = 1/4", r.arcs_found));
    }
    let gap = ((r.measured_angles[1] - r.measured_angles[0]).rem_euclid(TAU) - PI).abs();
    let edge = classify_point(&free, c(0.0, 0.0), &tols).map_err(|e| e.to_string())?;
    if edge.order_k != 1 || edge.regime != Regime::Edge(EdgeSign::Periodic) {
        return Err(format!("E = 0 classified as {edge:?}"));
    }
    let r0 = verify_local_shape(&free, &edge, default_probe_radius(edge.e0), &tols).map_err(|e| e.to_string())?;
    let msg = format!("E=1/4: 2 intersections, gap error {gap:.2e}; E=0: {} intersection(s)", r0.arcs_found);
    if gap <= 1e-2 && r0.arcs_found == 1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn direction_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for k in 1..=6usize {
        for _ in 0..20 {
            let dk = C64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI));
            for (regime, count, gap) in [
                (Regime::Interior, 2 * k, PI / k as f64),
                (Regime::Edge(EdgeSign::Periodic), k, TAU / k as f64),
                (Regime::Edge(EdgeSign::AntiPeriodic), k, TAU / k as f64),
            ] {
                let dirs = emanating_directions(dk, k, regime);
                if dirs.len() != count {
                    return Err(format!("k={k} {regime:?}: {} directions", dirs.len()));
                }
                for j in 0..count {
                    let next = if j + 1 < count { dirs[j + 1] } else { dirs[0] + TAU };
                    worst = worst.max((next - dirs[j] - gap).abs());
                }
            }
        }
    }
    let msg = format!("max gap error {worst:.2e}");
    if worst <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cubic_sine_sweep() -> Outcome {
    let start = Instant::now();
    let cfg = CertificateConfig::default();
    let window = (-1.0, 8.0);
    let samples = 40;
    let (mut with_extrema, mut witnesses, mut worst_mirror) = (0, 0, 0.0f64);
    for n in 0..samples {
        let a = 0.5 + 9.5 * n as f64 / (samples - 1) as f64;
        let v = PeriodicPotential::expression(TAU, &format!("{a:.17}*i*sin(x)^3")).unwrap();
        let extrema = find_interior_extrema(&v, window, cfg.scan_points, &cfg.tols).map_err(|e| format!("A={a}: {e}"))?;
        if extrema.is_empty() {
            continue;
        }
        with_extrema += 1;
        let certs = detect_nonreal_from_extremum(&v, window, &cfg).map_err(|e| format!("A={a}: {e}"))?;
        if certs.is_empty() {
            return Err(format!("A={a}: {} extrema but no certificate", extrema.len()));
        }
        for cert in &certs {
            for &w in &cert.witness_points {
                if w.im.abs() < WITNESS_MIN_IM || !in_spectrum(&v, w, &cfg.tols).map_err(|e| e.to_string())? {
                    return Err(format!("A={a}: witness {w} fails"));
                }
                let mirror = cert.witness_points.iter().map(|u| (u - w.conj()).norm()).fold(f64::INFINITY, f64::min);
                worst_mirror = worst_mirror.max(mirror);
                witnesses += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "{with_extrema}/{samples} amplitudes with interior extrema, {witnesses} witnesses, mirror error {worst_mirror:.2e}, {secs:.1}s"
    );
    if with_extrema > 0 && worst_mirror <= 1e-6 && secs < 300.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn pt_reality() -> Outcome {
    let potentials = [
        ("i*sin(x)", PeriodicPotential::expression(TAU, "i*sin(x)").unwrap()),
        ("i*sin(x)^3", PeriodicPotential::expression(TAU, "i*sin(x)^3").unwrap()),
        ("cos(2x)+i*sin(2x)/2", PeriodicPotential::expression(PI, "cos(2*x) + 0.5*i*sin(2*x)").unwrap()),
        ("real fourier", PeriodicPotential::fourier(PI, vec![(1, c(0.7, 0.0)), (-1, c(-0.3, 0.0))]).unwrap()),
        ("pt comb", PeriodicPotential::delta_comb(PI, c(0.5, 0.0), vec![(1.0, c(1.0, 1.0)), (PI - 1.0, c(1.0, -1.0))]).unwrap()),
    ];
    let mut worst = 0.0f64;
    for (name, v) in &potentials {
        for j in 0..500 {
            let e = -2.0 + 22.0 * j as f64 / 499.0;
            let d = delta_only(v, c(e, 0.0), 1e-12).map_err(|err| format!("{name}: {err}"))?;
            worst = worst.max(d.im.abs());
        }
    }
    let msg = format!("max |Im Δ| on the real line = {worst:.2e}");
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn derivative_cross_check() -> Outcome {
    let v = PeriodicPotential::expression(TAU, "i*sin(x)").unwrap();
    let tol = 1e-12;
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut fd_worst, mut cauchy_worst) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let e = c(rng.gen_range(-3.0..8.0), rng.gen_range(-2.0..2.0));
        let dv = discriminant(&v, e, tol).map_err(|err| err.to_string())?;
        let plus = delta_only(&v, e + h, tol).map_err(|err| err.to_string())?;
        let minus = delta_only(&v, e - h, tol).map_err(|err| err.to_string())?;
        let fd = (plus - minus) / (2.0 * h);
        let scale = dv.delta_prime.norm().max(1.0);
        fd_worst = fd_worst.max((fd - dv.delta_prime).norm() / scale);
        let cd = cauchy_derivatives(&v, e, 1, 0.1, tol).map_err(|err| err.to_string())?;
        cauchy_worst = cauchy_worst.max((cd.contour_first - dv.delta_prime).norm() / scale);
    }
    let msg = format!("finite differences {fd_worst:.2e}, Cauchy {cauchy_worst:.2e} (relative, floor 1)");
    if fd_worst <= 1e-6 && cauchy_worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cli_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("hillspec-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let spec = dir.join("cubic.json");
    std::fs::write(&spec, format!(r#"{{"period": {TAU:.17}, "type": "expression", "source": "i*sin(x)^3"}}"#)).map_err(|e| e.to_string())?;
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_hillspec"))
            .args(["spectrum", "--spec"])
            .arg(&spec)
            .args(["--window", "-1,5", "--format", "json"])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };
    let (first, second) = (run()?, run()?);
    let _ = std::fs::remove_dir_all(&dir);
    let parsed: serde_json::Value = serde_json::from_slice(&first).map_err(|e| e.to_string())?;
    let arcs = parsed["arc_count"].as_u64().unwrap_or(0);
    let msg = format!("{} bytes, {arcs} arcs, identical: {}", first.len(), first == second);
    if first == second && arcs > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("determinant and multiplier product", multiplier_invariant),
        ("membership criteria agree", membership_equivalence),
        ("arcs inside the bounding strip", strip_containment),
        ("free-potential touching edges", free_edges),
        ("regular interior point and simple edge", regular_points),
        ("emanating direction gaps", direction_formula),
        ("cubic sine family nonreal spectrum", cubic_sine_sweep),
        ("discriminant real on the real line", pt_reality),
        ("derivative cross-validation", derivative_cross_check),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", n + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
