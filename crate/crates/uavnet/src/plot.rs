//! Deterministic SVG renderings of run records: an association-colored
//! world snapshot, the training curve with a 100-episode moving average,
//! and the multi-policy sum-rate time series. Renderers are pure functions
//! of the input CSV text; identical input yields identical bytes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::policies::PolicyKind;
use crate::record::{
    parse_f64, parse_u64, split_fields, COMPARISON_HEADER, EPISODES_HEADER, SNAPSHOT_HEADER,
};
use crate::world::{associate, WorldState};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const STATION_PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn policy_color(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::Dqn => "#1f77b4",
        PolicyKind::Exhaustive => "#2ca02c",
        PolicyKind::KMeans => "#ff7f0e",
        PolicyKind::Fixed => "#7f7f7f",
    }
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick label with four significant digits, shortest form.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.3e}").parse().unwrap_or(v);
    format!("{rounded}")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>",
        WIDTH / 2.0
    );
    s
}

fn axes(s: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"#000000\"/>"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#000000\"/>"
    );
    for i in 0..=4 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * i as f64 / 4.0;
        let px = frame.x(fx);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>",
            fmt_coord(px),
            fmt_coord(px),
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            fmt_coord(px),
            y0 + 18.0,
            fmt_tick(fx)
        );
        let fy = frame.y_min + (frame.y_max - frame.y_min) * i as f64 / 4.0;
        let py = frame.y(fy);
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{x0}\" y2=\"{}\" stroke=\"#000000\"/>",
            x0 - 5.0,
            fmt_coord(py),
            fmt_coord(py)
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            x0 - 8.0,
            fmt_coord(py + 4.0),
            fmt_tick(fy)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{y_label}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn polyline(s: &mut String, pts: &[(f64, f64)], color: &str, width: f64, opacity: f64) {
    if pts.is_empty() {
        return;
    }
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(d, "{cmd}{} {} ", fmt_coord(x), fmt_coord(y));
    }
    let _ = writeln!(
        s,
        "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" stroke-opacity=\"{opacity}\"/>",
        d.trim_end()
    );
}

fn check_header(lines: &mut std::str::Lines, expected: &str) -> Result<()> {
    match lines.next() {
        Some(h) if h.trim_end() == expected => Ok(()),
        Some(h) => Err(Error::Parse {
            row: 1,
            msg: format!("expected header {expected:?}, found {h:?}"),
        }),
        None => Err(Error::Parse {
            row: 1,
            msg: "empty file".into(),
        }),
    }
}

/// World snapshot: UEs colored by their (recomputed) serving station, UAVs
/// as triangles, ground stations as squares.
pub fn render_snapshot_svg(csv_text: &str) -> Result<String> {
    let mut lines = csv_text.lines();
    check_header(&mut lines, SNAPSHOT_HEADER)?;
    let mut ues: Vec<(f64, f64)> = Vec::new();
    let mut uavs: Vec<(f64, f64)> = Vec::new();
    let mut gbss: Vec<(f64, f64)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2; // file line number
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 4, row)?;
        let x = parse_f64(f[2], row, "x")?;
        let y = parse_f64(f[3], row, "y")?;
        match f[0] {
            "ue" => ues.push((x, y)),
            "uav" => uavs.push((x, y)),
            "gbs" => gbss.push((x, y)),
            other => {
                return Err(Error::Parse {
                    row,
                    msg: format!("unknown entity kind {other:?}"),
                })
            }
        }
    }
    if ues.is_empty() && uavs.is_empty() && gbss.is_empty() {
        return Err(Error::Config("empty record: no entities to plot".into()));
    }

    let extent = ues
        .iter()
        .chain(&uavs)
        .chain(&gbss)
        .fold(0.0f64, |m, &(x, y)| m.max(x).max(y))
        .max(1.0);
    let state = WorldState {
        ue_positions: ues.clone(),
        uav_positions: uavs.clone(),
        gbs_positions: gbss.clone(),
        altitude_m: 1.0,
        area: (extent, extent),
        time_index: 0,
    };
    let serving = if state.n_stations() > 0 && !ues.is_empty() {
        associate(&state)?.serving
    } else {
        Vec::new()
    };

    let frame = Frame {
        x_min: 0.0,
        x_max: extent,
        y_min: 0.0,
        y_max: extent,
    };
    let mut s = svg_open("World snapshot");
    axes(&mut s, &frame, "x (m)", "y (m)");
    for (i, &(x, y)) in ues.iter().enumerate() {
        let color = serving
            .get(i)
            .map(|&st| STATION_PALETTE[st % STATION_PALETTE.len()])
            .unwrap_or("#000000");
        let _ = writeln!(
            s,
            "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\" fill-opacity=\"0.7\"/>",
            fmt_coord(frame.x(x)),
            fmt_coord(frame.y(y))
        );
    }
    for (i, &(x, y)) in uavs.iter().enumerate() {
        let color = STATION_PALETTE[i % STATION_PALETTE.len()];
        let (cx, cy) = (frame.x(x), frame.y(y));
        let _ = writeln!(
            s,
            "<path d=\"M{} {} L{} {} L{} {} Z\" fill=\"{color}\" stroke=\"#000000\"/>",
            fmt_coord(cx),
            fmt_coord(cy - 8.0),
            fmt_coord(cx - 7.0),
            fmt_coord(cy + 6.0),
            fmt_coord(cx + 7.0),
            fmt_coord(cy + 6.0)
        );
    }
    for (i, &(x, y)) in gbss.iter().enumerate() {
        let color = STATION_PALETTE[(uavs.len() + i) % STATION_PALETTE.len()];
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\" stroke=\"#000000\"/>",
            fmt_coord(frame.x(x) - 6.0),
            fmt_coord(frame.y(y) - 6.0)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Training curve: per-episode mean sum rate plus a 100-episode trailing
/// moving average.
pub fn render_training_svg(csv_text: &str) -> Result<String> {
    let mut lines = csv_text.lines();
    check_header(&mut lines, EPISODES_HEADER)?;
    let mut series: Vec<(u64, f64)> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 4, row)?;
        let episode = parse_u64(f[0], row, "episode")?;
        let rate = parse_f64(f[2], row, "mean_sum_rate_bps")?;
        series.push((episode, rate));
    }
    if series.is_empty() {
        return Err(Error::Config("empty record: no episodes to plot".into()));
    }

    let to_mbps = 1.0e-6;
    let y_min = series.iter().map(|p| p.1).fold(f64::INFINITY, f64::min) * to_mbps;
    let y_max = series.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) * to_mbps;
    let pad = ((y_max - y_min) * 0.05).max(1e-9);
    let frame = Frame {
        x_min: series.first().unwrap().0 as f64,
        x_max: series.last().unwrap().0 as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };
    let mut s = svg_open("Mean sum rate per training episode");
    axes(&mut s, &frame, "episode", "mean sum rate (Mbit/s)");

    let raw: Vec<(f64, f64)> = series
        .iter()
        .map(|&(e, r)| (frame.x(e as f64), frame.y(r * to_mbps)))
        .collect();
    polyline(&mut s, &raw, "#1f77b4", 1.0, 0.35);

    let mut avg_pts = Vec::with_capacity(series.len());
    let mut window_sum = 0.0;
    for i in 0..series.len() {
        window_sum += series[i].1;
        if i >= 100 {
            window_sum -= series[i - 100].1;
        }
        let n = (i + 1).min(100) as f64;
        avg_pts.push((
            frame.x(series[i].0 as f64),
            frame.y(window_sum / n * to_mbps),
        ));
    }
    polyline(&mut s, &avg_pts, "#d62728", 2.0, 1.0);

    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">100-episode moving average</text>",
        WIDTH - 260.0,
        MARGIN_TOP + 14.0
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Multi-policy overlay of sum rate versus time, averaged over seeds.
pub fn render_timeseries_svg(csv_text: &str) -> Result<String> {
    let mut lines = csv_text.lines();
    check_header(&mut lines, COMPARISON_HEADER)?;
    // (policy, t) -> (sum over seeds, count)
    let mut per_policy: Vec<(PolicyKind, Vec<(u64, f64, usize)>)> = PolicyKind::ALL
        .iter()
        .map(|&k| (k, Vec::new()))
        .collect();
    let mut any = false;
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line, 4, row)?;
        let kind = PolicyKind::from_name(f[1]).map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        let t = parse_u64(f[2], row, "t")?;
        let rate = parse_f64(f[3], row, "sum_rate_bps")?;
        let bucket = &mut per_policy
            .iter_mut()
            .find(|(k, _)| *k == kind)
            .unwrap()
            .1;
        match bucket.iter_mut().find(|(bt, _, _)| *bt == t) {
            Some(slot) => {
                slot.1 += rate;
                slot.2 += 1;
            }
            None => bucket.push((t, rate, 1)),
        }
        any = true;
    }
    if !any {
        return Err(Error::Config("empty record: no series to plot".into()));
    }

    let to_mbps = 1.0e-6;
    let mut t_max = 0u64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, bucket) in &per_policy {
        for &(t, sum, n) in bucket {
            let v = sum / n as f64 * to_mbps;
            t_max = t_max.max(t);
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    let pad = ((y_max - y_min) * 0.05).max(1e-9);
    let frame = Frame {
        x_min: 0.0,
        x_max: t_max as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };
    let mut s = svg_open("Sum rate by policy");
    axes(&mut s, &frame, "time instant", "sum rate (Mbit/s)");

    let mut legend_y = MARGIN_TOP + 14.0;
    for (kind, bucket) in &mut per_policy {
        if bucket.is_empty() {
            continue;
        }
        bucket.sort_by_key(|&(t, _, _)| t);
        let pts: Vec<(f64, f64)> = bucket
            .iter()
            .map(|&(t, sum, n)| (frame.x(t as f64), frame.y(sum / n as f64 * to_mbps)))
            .collect();
        let color = policy_color(*kind);
        polyline(&mut s, &pts, color, 1.5, 1.0);
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"18\" height=\"4\" fill=\"{color}\"/>",
            WIDTH - 180.0,
            legend_y - 4.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            WIDTH - 156.0,
            legend_y,
            kind.name()
        );
        legend_y += 18.0;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_renders_marks_colored_by_server() {
        let csv = "kind,index,x,y\nue,0,100,100\nuav,0,110,100\n";
        let svg = render_snapshot_svg(csv).unwrap();
        // One UE circle and one UAV triangle, same palette color.
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<path d=\"M").count(), 1);
        let uav_color = STATION_PALETTE[0];
        assert_eq!(svg.matches(&format!("fill=\"{uav_color}\"")).count(), 2);
    }

    #[test]
    fn snapshot_rejects_empty_and_malformed() {
        assert!(matches!(
            render_snapshot_svg("kind,index,x,y\n"),
            Err(Error::Config(_))
        ));
        let err = render_snapshot_svg("kind,index,x,y\nue,0,1,2\nue,1,oops,4\n").unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(render_snapshot_svg("bogus\n").is_err());
    }

    #[test]
    fn training_curve_is_pure() {
        let mut csv = String::from(EPISODES_HEADER);
        csv.push('\n');
        for e in 0..300 {
            csv.push_str(&format!("{e},dqn,{},{}\n", 1.0e7 + e as f64 * 1000.0, e));
        }
        let a = render_training_svg(&csv).unwrap();
        let b = render_training_svg(&csv).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("moving average"));
        assert!(matches!(
            render_training_svg(&format!("{EPISODES_HEADER}\n")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn timeseries_draws_all_policies() {
        let mut csv = String::from(COMPARISON_HEADER);
        csv.push('\n');
        for policy in ["dqn", "exhaustive", "kmeans", "fixed"] {
            for seed in [1, 2] {
                for t in 0..50 {
                    csv.push_str(&format!("{seed},{policy},{t},{}\n", 2.0e7 + t as f64));
                }
            }
        }
        let svg = render_timeseries_svg(&csv).unwrap();
        for name in ["dqn", "exhaustive", "kmeans", "fixed"] {
            assert!(svg.contains(&format!(">{name}</text>")), "legend missing {name}");
        }
        assert!(render_timeseries_svg(&format!("{COMPARISON_HEADER}\n")).is_err());
    }
}
