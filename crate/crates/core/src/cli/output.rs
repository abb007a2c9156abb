//! Fixed-format number and record emission shared by the commands.

use num_complex::Complex64 as C64;
use serde_json::{json, Map, Value};

use crate::spectrum::{CriticalPoint, EndpointKind, NonrealCertificate, Regime, SpectralArc};

pub const SCHEMA: &str = "hillspec/1";

/// 17 significant digits, round-trip exact.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Value::Number(fmt(x).parse().expect("formatted float is a JSON number"))
}

pub fn cnum(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn document(command: &str, body: Map<String, Value>) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m.extend(body);
    Value::Object(m)
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn regime_label(r: Regime) -> String {
    match r {
        Regime::Interior => "interior".into(),
        Regime::Edge(s) => format!("edge-{}", s.label()),
        Regime::OffSpectrum => "off-spectrum".into(),
    }
}

pub fn endpoint(kind: &EndpointKind) -> Value {
    match kind {
        EndpointKind::BandEdge(s) => json!({"kind": "band_edge", "label": s.label(), "delta": num(s.value())}),
        EndpointKind::CriticalPoint { e0, order } => json!({"kind": "critical_point", "e0": cnum(*e0), "order": order}),
        EndpointKind::BoxExit => json!({"kind": "box_exit"}),
        EndpointKind::StepLimit => json!({"kind": "step_limit"}),
    }
}

pub fn arc(a: &SpectralArc) -> Value {
    json!({
        "start": endpoint(&a.start_kind),
        "end": endpoint(&a.end_kind),
        "points": a.points.iter().map(|&p| cnum(p)).collect::<Vec<_>>(),
        "delta": a.delta_values.iter().map(|&d| num(d)).collect::<Vec<_>>(),
    })
}

pub fn critical_point(cp: &CriticalPoint) -> Value {
    json!({
        "e0": cnum(cp.e0),
        "order": cp.order_k,
        "delta": cnum(cp.delta_at),
        "regime": regime_label(cp.regime),
        "directions": cp.directions.iter().map(|&d| num(d)).collect::<Vec<_>>(),
    })
}

pub fn certificate(c: &NonrealCertificate) -> Value {
    json!({
        "extremum_e0": num(c.extremum_e0),
        "delta": num(c.delta_at),
        "order": c.order_k,
        "witnesses": c.witness_points.iter().map(|&w| cnum(w)).collect::<Vec<_>>(),
    })
}

/// Comma-separated rows with a header line.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
