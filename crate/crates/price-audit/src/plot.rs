//! Quadrant chart of one assessment as SVG, plus a JSON twin holding the
//! exact points drawn.
//!
//! x is the neighbor's net utility (right is better), y is the relative
//! price gap with cheaper neighbors drawn lower. The target sits at the origin.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use price_audit_core::{OutlierVerdict, PaddingConfig, QuadrantPoint, Strategy, Zone};
use serde::{Deserialize, Serialize};

use crate::pipeline::AssessmentRecord;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub target_id: String,
    pub target_price: f64,
    pub verdict: OutlierVerdict,
    pub strategy: Strategy,
    pub padding: PaddingConfig,
    pub points: Vec<QuadrantPoint>,
}

impl PlotData {
    pub fn of(record: &AssessmentRecord) -> Self {
        Self {
            target_id: record.target_id.clone(),
            target_price: record.target_price,
            verdict: record.decision.verdict,
            strategy: record.decision.strategy,
            padding: record.padding,
            points: record.points.clone(),
        }
    }
}

fn zone_color(z: Zone) -> &'static str {
    match z {
        Zone::Ap => "#d62728",
        Zone::NotAp => "#2ca02c",
        Zone::Tradeoff => "#ff7f0e",
        Zone::Uninformative => "#7f7f7f",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, nu: f64) -> f64 {
        MARGIN + (nu - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    /// Larger rel_gap (cheaper neighbor) maps lower on the page.
    fn py(&self, gap: f64) -> f64 {
        MARGIN + (gap - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn rect(&self, out: &mut String, class: &str, fill: &str, x: (f64, f64), y: (f64, f64)) {
        let (xa, xb) = (self.px(x.0.max(self.x0)), self.px(x.1.min(self.x1)));
        let (ya, yb) = (self.py(y.0.max(self.y0)), self.py(y.1.min(self.y1)));
        if xb > xa && yb > ya {
            let _ = writeln!(
                out,
                r#"<rect class="{class}" x="{xa:.1}" y="{ya:.1}" width="{:.1}" height="{:.1}" fill="{fill}" fill-opacity="0.15"/>"#,
                xb - xa,
                yb - ya
            );
        }
    }
}

pub fn render_svg(data: &PlotData) -> String {
    let up = f64::from(data.padding.utility_padding);
    let pad = data.padding.price_padding;
    let max_nu = data.points.iter().map(|p| p.net_utility.unsigned_abs() as f64).fold(up + 1.0, f64::max) + 1.0;
    let lo = data.points.iter().map(|p| p.rel_gap).fold(-pad.max(0.1), f64::min) - 0.1;
    let hi = data.points.iter().map(|p| p.rel_gap).fold(pad.max(0.1), f64::max) + 0.1;
    let f = Frame { x0: -max_nu, x1: max_nu, y0: lo, y1: hi };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<title>Quadrant chart for {}</title>"#, escape(&data.target_id));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Zone regions, then padding bands on top. Utility is integral, so the
    // worse/similar boundary is drawn half a step below -utility_padding.
    let edge = -up - 0.5;
    f.rect(&mut s, "region-AP", zone_color(Zone::Ap), (edge, f.x1), (pad, f.y1));
    f.rect(&mut s, "region-NOT_AP", zone_color(Zone::NotAp), (f.x0, edge), (f.y0, 0.0));
    f.rect(&mut s, "band-price-padding", "#1f77b4", (f.x0, f.x1), (-pad, pad));
    if up > 0.0 {
        f.rect(&mut s, "band-utility-padding", "#9467bd", (-up, up), (f.y0, f.y1));
    }

    let (ox, oy) = (f.px(0.0), f.py(0.0));
    let _ = writeln!(s, r#"<line x1="{MARGIN}" y1="{oy:.1}" x2="{:.1}" y2="{oy:.1}" stroke="black"/>"#, WIDTH - MARGIN);
    let _ = writeln!(s, r#"<line x1="{ox:.1}" y1="{MARGIN}" x2="{ox:.1}" y2="{:.1}" stroke="black"/>"#, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">net utility of neighbor (worse &lt;- -&gt; better)</text>"#, WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="12" transform="rotate(-90 16 {:.1})" text-anchor="middle">relative price gap (pricier up, cheaper down)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (gap, label) in [(pad, format!("+{:.0}%", pad * 100.0)), (-pad, format!("-{:.0}%", pad * 100.0))] {
        if gap > f.y0 && gap < f.y1 {
            let _ = writeln!(s, r##"<text x="{:.1}" y="{:.1}" font-size="10" fill="#1f77b4">{label}</text>"##, WIDTH - MARGIN + 4.0, f.py(gap) + 3.0);
        }
    }
    let _ = writeln!(s, r#"<circle class="target" cx="{ox:.1}" cy="{oy:.1}" r="6" fill="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11">target {}</text>"#, ox + 8.0, oy - 8.0, escape(&data.target_id));

    for p in &data.points {
        let (x, y) = (f.px(p.net_utility as f64), f.py(p.rel_gap));
        let _ = writeln!(
            s,
            r#"<circle class="point zone-{z}" data-zone="{z}" data-neighbor="{id}" cx="{x:.1}" cy="{y:.1}" r="5" fill="{c}"/>"#,
            z = p.zone.as_str(),
            id = escape(&p.neighbor_id),
            c = zone_color(p.zone)
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, x + 7.0, y + 3.0, escape(&p.neighbor_id));
    }

    let mut legend_y = MARGIN;
    for z in [Zone::Ap, Zone::NotAp, Zone::Tradeoff, Zone::Uninformative] {
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{legend_y:.1}" r="4" fill="{}"/>"#, MARGIN + 6.0, zone_color(z));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, MARGIN + 14.0, legend_y + 3.0, z.as_str());
        legend_y += 14.0;
    }
    let _ = writeln!(
        s,
        r#"<text id="verdict" x="{:.1}" y="30" font-size="16" text-anchor="end" font-weight="bold">Verdict: {} ({})</text>"#,
        WIDTH - MARGIN,
        data.verdict.as_str(),
        data.strategy.as_str()
    );
    s.push_str("</svg>\n");
    s
}

/// The JSON twin sits next to the SVG with a `.json` extension.
pub fn twin_path(svg_path: &Path) -> PathBuf {
    svg_path.with_extension("json")
}

/// Writes the SVG and its twin; returns the twin's path.
pub fn write_plot(record: &AssessmentRecord, svg_path: &Path) -> io::Result<PathBuf> {
    let data = PlotData::of(record);
    std::fs::write(svg_path, render_svg(&data))?;
    let twin = twin_path(svg_path);
    let json = serde_json::to_string_pretty(&data).map_err(io::Error::other)?;
    std::fs::write(&twin, json + "\n")?;
    Ok(twin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mouse_veto_chart() {
        let padding = PaddingConfig::fixed(0.5, 0);
        let data = PlotData {
            target_id: "mouse-150".into(),
            target_price: 150.0,
            verdict: OutlierVerdict::No,
            strategy: Strategy::Veto,
            padding,
            points: vec![QuadrantPoint::new("mouse-180", 150.0, 180.0, -2, &padding)],
        };
        let svg = render_svg(&data);
        assert_eq!(svg.matches(r#"class="point "#).count(), 1);
        assert!(svg.contains(r#"data-zone="NOT_AP""#));
        assert!(svg.contains("Verdict: No (veto)"));
        assert!(svg.contains("band-price-padding"));
        assert!(svg.contains("region-NOT_AP"));
    }

    #[test]
    fn escapes_ids_and_handles_no_points() {
        let data = PlotData {
            target_id: "a<b>&\"c\"".into(),
            target_price: 1.0,
            verdict: OutlierVerdict::Unsure,
            strategy: Strategy::Voting,
            padding: PaddingConfig::fixed(0.3, 1),
            points: vec![],
        };
        let svg = render_svg(&data);
        assert!(svg.contains("a&lt;b&gt;&amp;&quot;c&quot;"));
        assert!(svg.contains("band-utility-padding"));
        assert!(!svg.contains(r#"class="point "#));
    }
}
