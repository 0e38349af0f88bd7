//! Standalone SVG Gantt charts: one band per machine, then one per transbot.

use std::fmt::Write as _;

use crate::model::{Instance, Schedule, StationKind, Time};
use crate::routing::LegCatalog;
use crate::verify::{validate_schedule, Violation};

const LEFT: f64 = 60.0;
const TOP: f64 = 30.0;
const BAND: f64 = 28.0;
const BAR: f64 = 20.0;
const WIDTH: f64 = 900.0;

// one hue per job, cycled
const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn station_label(inst: &Instance, s: crate::model::StationId) -> String {
    match inst.stations().get(s.0).map(|st| st.kind) {
        Some(StationKind::Stocker) => "ST".into(),
        Some(StationKind::Handoff) => "H".into(),
        Some(StationKind::Machine) => inst.station_machine(s).map_or_else(|| s.to_string(), |m| m.to_string()),
        None => s.to_string(),
    }
}

/// Renders a validated schedule. An invalid schedule is refused with its
/// violations. Output depends only on the inputs.
pub fn render_gantt(inst: &Instance, schedule: &Schedule) -> Result<String, Vec<Violation>> {
    let violations = validate_schedule(inst, schedule);
    if !violations.is_empty() {
        return Err(violations);
    }
    let catalog = LegCatalog::new(inst);
    let m = inst.machine_count();
    let v = inst.transbots().len();
    let horizon = schedule.makespan.max(1);
    let scale = WIDTH / horizon as f64;
    let x = |t: Time| LEFT + t as f64 * scale;
    let height = TOP + (m + v) as f64 * BAND + 30.0;
    let total_w = LEFT + WIDTH + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{height:.0}" viewBox="0 0 {total_w:.0} {height:.0}" font-family="sans-serif" font-size="11">"##
    );
    let _ = writeln!(s, r##"<title>{} makespan {}</title>"##, esc(inst.name()), schedule.makespan);
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="white"/>"##);

    let band_y = |row: usize| TOP + row as f64 * BAND;
    let mut labels: Vec<String> = inst.machines().map(|mm| mm.to_string()).collect();
    labels.extend(inst.transbots().iter().map(|b| b.id.to_string()));
    for (row, label) in labels.iter().enumerate() {
        let y = band_y(row);
        let fill = if row < m { "#f4f4f4" } else { "#eaf0f6" };
        let _ = writeln!(
            s,
            r##"<g class="band"><rect x="{LEFT}" y="{y:.1}" width="{WIDTH}" height="{BAND}" fill="{fill}" stroke="#cccccc"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text></g>"##,
            LEFT - 6.0,
            y + BAND / 2.0 + 4.0
        );
    }

    // time axis
    let axis_y = band_y(m + v) + 14.0;
    let step = nice_step(horizon);
    let mut t = 0;
    while t <= horizon {
        let _ = writeln!(s, r##"<text class="tick" x="{:.1}" y="{axis_y:.1}" text-anchor="middle">{t}</text>"##, x(t));
        t += step;
    }

    for (o, a) in schedule.op_assign.iter().enumerate() {
        let op = &inst.operations()[o];
        let color = PALETTE[op.job.0 % PALETTE.len()];
        let y = band_y(a.machine.0) + (BAND - BAR) / 2.0;
        let label = format!("{}.{}", op.job.0 + 1, op.order_index);
        let _ = writeln!(
            s,
            r##"<g class="op"><rect x="{:.2}" y="{y:.1}" width="{:.2}" height="{BAR}" fill="{color}" stroke="black"/><text x="{:.2}" y="{:.1}" text-anchor="middle">{label}</text></g>"##,
            x(a.start),
            (a.end - a.start) as f64 * scale,
            x(a.start) + (a.end - a.start) as f64 * scale / 2.0,
            y + BAR / 2.0 + 4.0
        );
    }

    let mut legs: Vec<(usize, &crate::model::LegAssignment)> = schedule
        .transfer_assign
        .iter()
        .enumerate()
        .flat_map(|(o, ls)| ls.iter().map(move |l| (o, l)))
        .collect();
    legs.sort_by_key(|&(o, l)| (l.transbot, l.start, o));
    for (o, l) in legs {
        let Some(leg) = catalog.leg(l.leg) else { continue };
        let op = &inst.operations()[o];
        let color = PALETTE[op.job.0 % PALETTE.len()];
        let y = band_y(m + l.transbot.0) + (BAND - BAR) / 2.0;
        let label = format!("{}&#8594;{}", station_label(inst, leg.pickup), station_label(inst, leg.dropoff));
        let _ = writeln!(
            s,
            r##"<g class="leg"><rect x="{:.2}" y="{y:.1}" width="{:.2}" height="{BAR}" fill="{color}" fill-opacity="0.45" stroke="black"/><text x="{:.2}" y="{:.1}" text-anchor="middle">{label}</text></g>"##,
            x(l.start),
            (l.end - l.start) as f64 * scale,
            x(l.start) + (l.end - l.start) as f64 * scale / 2.0,
            y + BAR / 2.0 + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn nice_step(horizon: Time) -> Time {
    let raw = (horizon / 10).max(1);
    let mag = 10i64.pow(raw.ilog10());
    [1, 2, 5, 10].iter().map(|k| k * mag).find(|&s| s >= raw).unwrap_or(10 * mag)
}
