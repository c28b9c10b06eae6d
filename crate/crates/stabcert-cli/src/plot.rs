//! Static SVG plots: trajectory norm against its certified envelope, and
//! matching error against the tail bound. Pure text output, log-log axes,
//! no external renderer.

use stabcert::asymptotic::MatchingRow;
use stabcert::Certificate;

use crate::CliError;

pub enum PlotKind {
    NormVsEnvelope,
    MatchingError,
}

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

struct Series {
    label: &'static str,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>, // already in log10 coordinates
}

fn log_points(raw: &[(f64, f64)]) -> Vec<(f64, f64)> {
    raw.iter()
        .filter(|(t, v)| *t > 0.0 && *v > 0.0 && t.is_finite() && v.is_finite())
        .map(|(t, v)| (t.log10(), v.log10()))
        .collect()
}

/// Norm-and-envelope plot from `t,norm` rows and a valid certificate.
pub fn norm_vs_envelope_svg(
    rows: &[(f64, f64)],
    cert: &Certificate,
    timestamp: Option<&str>,
) -> Result<String, CliError> {
    let envelope = cert.envelope_fn().map_err(CliError::from)?;
    let mut env_rows = Vec::with_capacity(rows.len());
    for &(t, _) in rows {
        let e = envelope.eval(t).map_err(CliError::from)?;
        env_rows.push((t, e.value));
    }
    let series = vec![
        Series {
            label: "norm",
            color: "#1f6fb2",
            dashed: false,
            points: log_points(rows),
        },
        Series {
            label: "envelope 1/mu",
            color: "#b2451f",
            dashed: true,
            points: log_points(&env_rows),
        },
    ];
    render("solution norm vs certified envelope", "log10 t", "log10 value", series, timestamp)
}

/// Matching-error plot from `t,error,bound,ratio` rows.
pub fn matching_error_svg(
    rows: &[MatchingRow],
    timestamp: Option<&str>,
) -> Result<String, CliError> {
    let err_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.error)).collect();
    let bound_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.bound)).collect();
    let series = vec![
        Series {
            label: "matching error",
            color: "#1f6fb2",
            dashed: false,
            points: log_points(&err_pts),
        },
        Series {
            label: "tail bound",
            color: "#b2451f",
            dashed: true,
            points: log_points(&bound_pts),
        },
    ];
    render("matching error vs tail bound", "log10 t", "log10 value", series, timestamp)
}

fn render(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: Vec<Series>,
    timestamp: Option<&str>,
) -> Result<String, CliError> {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.len() < 2 {
        return Err(CliError::validation(
            "not enough positive data points for a log-scale plot",
        ));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    // Cap the dynamic range so deep underflow does not flatten the plot.
    y_min = y_min.max(y_max - 40.0);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = move |y: f64| MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    if let Some(ts) = timestamp {
        svg.push_str(&format!("<!-- generated {ts} -->\n"));
    }
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"15\">{title}</text>\n",
        MARGIN_L
    ));

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n"
    ));

    // Decade ticks.
    let x_ticks = decade_ticks(x_min, x_max);
    for t in &x_ticks {
        let x = sx(*t as f64);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n",
            MARGIN_T,
            MARGIN_T + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{t}</text>\n",
            MARGIN_T + plot_h + 18.0
        ));
    }
    let y_ticks = decade_ticks(y_min, y_max);
    for t in &y_ticks {
        let y = sy(*t as f64);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n",
            MARGIN_L,
            MARGIN_L + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{t}</text>\n",
            MARGIN_L - 6.0
        ));
    }

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">{y_label}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));

    // Series.
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let y = y.max(y_min); // clipped, not dropped
            d.push_str(if j == 0 { "M" } else { " L" });
            d.push_str(&format!("{:.2},{:.2}", sx(x), sy(y)));
        }
        let dash = if s.dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash}/>\n",
            s.color
        ));
        // Legend swatch.
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{}\" stroke-width=\"2\"{dash}/>\n",
            MARGIN_L + plot_w - 170.0,
            MARGIN_L + plot_w - 140.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
            MARGIN_L + plot_w - 134.0,
            ly + 4.0,
            s.label
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<i64> {
    let first = lo.ceil() as i64;
    let last = hi.floor() as i64;
    let span = (last - first).max(0) as usize + 1;
    let step = (span / 10).max(1);
    (first..=last).step_by(step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use stabcert::{certify, GammaModel, PerturbationBound};

    #[test]
    fn norm_envelope_svg_contains_two_curves() {
        let gamma = GammaModel::power_law(1.0, 2.0, 0.5).unwrap();
        let cert =
            certify(&gamma, PerturbationBound::new(0.0, 1.0).unwrap(), 0.5, Some(1.0)).unwrap();
        let rows: Vec<(f64, f64)> = (1..=50)
            .map(|i| {
                let t = i as f64;
                (t, 0.4 * cert.envelope(t).unwrap().value)
            })
            .collect();
        let svg = norm_vs_envelope_svg(&rows, &cert, None).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("envelope"));
        assert!(!svg.contains("generated"));
        let with_ts = norm_vs_envelope_svg(&rows, &cert, Some("now")).unwrap();
        assert!(with_ts.contains("<!-- generated now -->"));
    }

    #[test]
    fn too_few_points_is_an_error() {
        let gamma = GammaModel::power_law(1.0, 2.0, 0.5).unwrap();
        let cert =
            certify(&gamma, PerturbationBound::new(0.0, 1.0).unwrap(), 0.5, Some(1.0)).unwrap();
        assert!(norm_vs_envelope_svg(&[(0.0, 1.0)], &cert, None).is_err());
    }
}
