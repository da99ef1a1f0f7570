use std::fmt::Write;

use gemeit_core::experiments::Showcase;
use gemeit_core::phasespace::WignerMap;
use gemeit_core::signals::PulseSignal;

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 40.0;

/// Input, output and oracle intensities on a shared time axis.
pub fn intensity_plot(show: &Showcase) -> String {
    let traces: [(&PulseSignal, &str, f64); 3] =
        [(&show.input, "#1f77b4", 1.0), (&show.output, "#d62728", 1.0 / show.metrics.efficiency), (&show.target, "#2ca02c", 1.0)];
    let t0 = traces.iter().map(|(s, _, _)| s.grid().t_start()).fold(f64::INFINITY, f64::min);
    let t1 = traces.iter().map(|(s, _, _)| s.grid().t_end()).fold(f64::NEG_INFINITY, f64::max);
    let peak = traces
        .iter()
        .map(|(s, _, k)| s.intensity().into_iter().fold(0.0, f64::max) * k)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut svg = header();
    for (sig, colour, k) in traces {
        let step = (sig.grid().len() / 800).max(1);
        let mut d = String::new();
        for (i, v) in sig.intensity().into_iter().enumerate().step_by(step) {
            let x = PAD + (sig.grid().time(i) - t0) / (t1 - t0) * (W - 2.0 * PAD);
            let y = H - PAD - v * k / peak * (H - 2.0 * PAD);
            let _ = write!(d, "{}{x:.1},{y:.1} ", if d.is_empty() { "M" } else { "L" });
        }
        let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#);
    }
    let _ = writeln!(svg, r#"<text x="{PAD}" y="{}" font-size="12">t (μs): {t0:.2} to {t1:.2}</text>"#, H - 10.0);
    svg.push_str("</svg>\n");
    svg
}

/// Diverging heat map, red positive and blue negative.
pub fn heatmap(map: &WignerMap) -> String {
    let n1 = map.axis1.count;
    let n2 = map.axis2.count;
    let s1 = (n1 / 160).max(1);
    let s2 = (n2 / 160).max(1);
    let peak = map.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let cw = (W - 2.0 * PAD) / n1.div_ceil(s1) as f64;
    let ch = (H - 2.0 * PAD) / n2.div_ceil(s2) as f64;
    let mut svg = header();
    for (ci, i) in (0..n1).step_by(s1).enumerate() {
        for (cj, j) in (0..n2).step_by(s2).enumerate() {
            let v = map.value(i, j) / peak;
            if v.abs() < 0.02 {
                continue;
            }
            let c = (255.0 * (1.0 - v.abs())) as u8;
            let fill = if v > 0.0 { format!("rgb(255,{c},{c})") } else { format!("rgb({c},{c},255)") };
            let x = PAD + ci as f64 * cw;
            let y = H - PAD - (cj + 1) as f64 * ch;
            let _ = writeln!(svg, r#"<rect x="{x:.1}" y="{y:.1}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#, cw + 0.2, ch + 0.2);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}
