//! Small SVG line chart rendered straight from sweep rows: one line per
//! task size, mean delay against device count. Pure text output so
//! identical sweeps produce identical charts.

use ranslice_core::report::SweepRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

pub fn sweep_chart_svg(rows: &[SweepRow]) -> String {
    let mut sizes: Vec<f64> = rows.iter().map(|r| r.task_size_mb).collect();
    sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sizes.dedup();
    let mut devices: Vec<usize> = rows.iter().map(|r| r.device_count).collect();
    devices.sort_unstable();
    devices.dedup();

    let points: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            r.mean_delay_s
                .map(|d| (r.device_count, r.task_size_mb, d))
        })
        .collect();

    let x_min = devices.first().copied().unwrap_or(0) as f64;
    let x_max = devices.last().copied().unwrap_or(1) as f64;
    let x_span = (x_max - x_min).max(1.0);
    let y_max = points
        .iter()
        .map(|&(_, _, d)| d)
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.1;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |d: f64| MARGIN_LEFT + (d - x_min) / x_span * plot_w;
    let y_of = |v: f64| MARGIN_TOP + plot_h - v / y_max * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h
    ));

    // X ticks at each device count.
    for &d in &devices {
        let x = x_of(d as f64);
        let y = MARGIN_TOP + plot_h;
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            y + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{d}</text>\n",
            y + 20.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">end devices</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    ));

    // Y ticks.
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_LEFT}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.3}</text>\n",
            MARGIN_LEFT - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">mean delay (s)</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    // One polyline per task size.
    for (i, &size) in sizes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut line_points: Vec<(usize, f64)> = points
            .iter()
            .filter(|&&(_, s, _)| s == size)
            .map(|&(d, _, v)| (d, v))
            .collect();
        line_points.sort_by_key(|&(d, _)| d);
        if !line_points.is_empty() {
            let path: Vec<String> = line_points
                .iter()
                .map(|&(d, v)| format!("{},{}", x_of(d as f64), y_of(v)))
                .collect();
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
                path.join(" ")
            ));
            for &(d, v) in &line_points {
                svg.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                    x_of(d as f64),
                    y_of(v)
                ));
            }
        }
        // Legend.
        let ly = MARGIN_TOP + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 18.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{size} MB</text>\n",
            lx + 24.0,
            ly + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
