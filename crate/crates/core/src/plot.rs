//! Standalone SVG step plots of survival curves.
//!
//! Output is a pure function of the inputs: no timestamps, no random ids.

use std::fmt::Write as _;

use crate::error::{DomainError, Error};
use crate::oracles::LimitCurve;
use crate::rand_dist::DropoutSpec;
use crate::reference::DROPOUT_GROUPS;
use crate::scenarios::{run_scenario, ScenarioConfig};
use crate::survival::{fit_km, CensoringPolicy, KmCurve};

/// Upper bound on path vertices per curve.
pub const MAX_VERTICES: usize = 2000;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555"];

#[derive(Clone, Debug, PartialEq)]
pub enum CurveData {
    /// Right-continuous steps at `times` (value 1 before the first).
    Steps { times: Vec<f64>, survival: Vec<f64> },
    /// A smooth curve sampled on a grid, drawn as a polyline.
    Line { times: Vec<f64>, survival: Vec<f64> },
}

impl From<&KmCurve> for CurveData {
    fn from(c: &KmCurve) -> Self {
        CurveData::Steps {
            times: c.event_times().to_vec(),
            survival: c.survival().to_vec(),
        }
    }
}

impl From<&LimitCurve> for CurveData {
    fn from(c: &LimitCurve) -> Self {
        CurveData::Line {
            times: c.grid.clone(),
            survival: c.survival.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotCurve {
    pub label: String,
    pub data: CurveData,
    pub dashed: bool,
}

impl PlotCurve {
    pub fn km(label: impl Into<String>, curve: &KmCurve) -> Self {
        Self {
            label: label.into(),
            data: curve.into(),
            dashed: false,
        }
    }

    pub fn limit(label: impl Into<String>, curve: &LimitCurve) -> Self {
        Self {
            label: label.into(),
            data: curve.into(),
            dashed: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub curves: Vec<PlotCurve>,
    /// Time axis range, in ams units.
    pub x_range: (f64, f64),
    /// Where to draw the vertical guide (1 ams).
    pub ams_guide: f64,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            curves: Vec::new(),
            x_range: (0.0, 4.0),
            ams_guide: 1.0,
        }
    }

    pub fn with_curve(mut self, c: PlotCurve) -> Self {
        self.curves.push(c);
        self
    }

    fn validate(&self) -> Result<(), DomainError> {
        if self.curves.is_empty() {
            return Err(DomainError::text("curves", "[]", "a plot needs at least one curve"));
        }
        for (i, c) in self.curves.iter().enumerate() {
            if self.curves[..i].iter().any(|o| o.label == c.label) {
                return Err(DomainError::text("label", &c.label, "curve labels must be unique"));
            }
        }
        let (lo, hi) = self.x_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(DomainError::new("x_range", hi - lo, "needs finite lo < hi"));
        }
        Ok(())
    }
}

/// Keeps indices `0, k, 2k, ...` plus the last one, so at most `max` remain.
pub fn downsample_indices(len: usize, max: usize) -> Vec<usize> {
    let max = max.max(2);
    if len <= max {
        return (0..len).collect();
    }
    let stride = (len - 1).div_ceil(max - 1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
}

impl Frame {
    fn px(&self, t: f64) -> f64 {
        let t = t.clamp(self.x0, self.x1);
        MARGIN_LEFT + (t - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, s: f64) -> f64 {
        MARGIN_TOP + (1.0 - s.clamp(0.0, 1.0)) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn path_for(data: &CurveData, f: &Frame) -> String {
    let mut d = String::new();
    match data {
        CurveData::Steps { times, survival } => {
            // two vertices per step, plus the start and the tail
            let keep: Vec<usize> = downsample_indices(times.len(), (MAX_VERTICES - 2) / 2)
                .into_iter()
                .filter(|&i| times[i] <= f.x1)
                .collect();
            let _ = write!(d, "M{:.2},{:.2}", f.px(f.x0), f.py(1.0));
            for i in keep {
                let x = f.px(times[i]);
                let _ = write!(d, " H{x:.2} V{:.2}", f.py(survival[i]));
            }
            let _ = write!(d, " H{:.2}", f.px(f.x1));
        }
        CurveData::Line { times, survival } => {
            for (k, i) in downsample_indices(times.len(), MAX_VERTICES).into_iter().enumerate() {
                let cmd = if k == 0 { 'M' } else { 'L' };
                let _ = write!(d, "{}{:.2},{:.2} ", cmd, f.px(times[i]), f.py(survival[i]));
            }
        }
    }
    d.trim_end().to_string()
}

/// Renders the plot as a standalone SVG document.
pub fn render_svg(spec: &PlotSpec) -> Result<String, DomainError> {
    spec.validate()?;
    let f = Frame {
        x0: spec.x_range.0,
        x1: spec.x_range.1,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        escape(&spec.title)
    );

    // axes and ticks
    let (left, right) = (f.px(f.x0), f.px(f.x1));
    let (top, bottom) = (f.py(1.0), f.py(0.0));
    let _ = writeln!(
        out,
        r#"<path d="M{left:.2},{top:.2} V{bottom:.2} H{right:.2}" fill="none" stroke="black"/>"#
    );
    for k in 0..=10 {
        let s = k as f64 / 10.0;
        let y = f.py(s);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{s:.1}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let span = f.x1 - f.x0;
    let step = [0.25, 0.5, 1.0, 2.0, 5.0, 10.0].into_iter().find(|s| span / s <= 10.0).unwrap_or(span / 10.0);
    let mut t = (f.x0 / step).ceil() * step;
    while t <= f.x1 + 1e-9 {
        let x = f.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 20.0,
            t
        );
        t += step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time (ams)</text>"#,
        (left + right) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">survival probability</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );

    // guides at S = 0.5 and t = 1 ams
    let _ = writeln!(
        out,
        r##"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#999999" stroke-dasharray="4 4"/>"##,
        y = f.py(0.5)
    );
    if spec.ams_guide >= f.x0 && spec.ams_guide <= f.x1 {
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bottom:.2}" stroke="#999999" stroke-dasharray="4 4"/>"##,
            x = f.px(spec.ams_guide)
        );
    }

    for (i, c) in spec.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if c.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            path_for(&c.data, &f)
        );
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let lx = right + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 25.0,
            lx + 30.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// The published figures that can be regenerated from simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureId {
    /// Scenario 1, early dropout (`beta:2,5`), 0/20/40/60% censored.
    F1a,
    /// Scenario 1, uniform dropout.
    F1b,
    /// Scenario 1, late dropout (`beta:5,2`).
    F1c,
    /// Scenario 1 at 40% censored, the three dropout laws.
    F2,
    /// Scenario 2 with a study of 3 ams.
    F3,
}

impl std::str::FromStr for FigureId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1a" => Ok(FigureId::F1a),
            "1b" => Ok(FigureId::F1b),
            "1c" => Ok(FigureId::F1c),
            "2" => Ok(FigureId::F2),
            "3" => Ok(FigureId::F3),
            other => Err(DomainError::text("figure", other, "expected 1a, 1b, 1c, 2 or 3")),
        }
    }
}

fn km_of(cfg: &ScenarioConfig) -> Result<KmCurve, Error> {
    let data = run_scenario(cfg)?;
    Ok(fit_km(&data, CensoringPolicy::AllCensoredEqual)?)
}

/// Simulates the curves of a figure at size `n`.
pub fn figure_spec(fig: FigureId, n: u64, seed: u64) -> Result<PlotSpec, Error> {
    let single = |spec: DropoutSpec, title: &str| -> Result<PlotSpec, Error> {
        let mut plot = PlotSpec::new(format!("Scenario 1, dropout = {title} o Exp(lambda)"));
        for (i, p) in [0.0, 0.2, 0.4, 0.6].into_iter().enumerate() {
            let cfg = ScenarioConfig::scenario1(n, p, spec, seed.wrapping_add(i as u64));
            plot.curves.push(PlotCurve::km(format!("{:.0}% censored", 100.0 * p), &km_of(&cfg)?));
        }
        Ok(plot)
    };
    match fig {
        FigureId::F1a => single(DROPOUT_GROUPS[0].1.spec(), "Beta(2,5)"),
        FigureId::F1b => single(DROPOUT_GROUPS[1].1.spec(), "Uniform"),
        FigureId::F1c => single(DROPOUT_GROUPS[2].1.spec(), "Beta(5,2)"),
        FigureId::F2 => {
            let mut plot = PlotSpec::new("Scenario 1, 40% censored");
            let base = ScenarioConfig::scenario1(n, 0.0, DropoutSpec::UnitUniform, seed);
            plot.curves.push(PlotCurve::km("no censoring", &km_of(&base)?));
            for (i, (_, law)) in DROPOUT_GROUPS.iter().enumerate() {
                let spec = law.spec();
                let cfg = ScenarioConfig::scenario1(n, 0.4, spec, seed.wrapping_add(1 + i as u64));
                plot.curves.push(PlotCurve::km(format!("dropout {spec}"), &km_of(&cfg)?));
            }
            Ok(plot)
        }
        FigureId::F3 => {
            let cfg = ScenarioConfig::scenario2(n, 3.0, seed);
            let data = run_scenario(&cfg)?;
            let pct = 100.0 * data.counts().censored() as f64 / data.len() as f64;
            let curve = fit_km(&data, CensoringPolicy::AllCensoredEqual)?;
            Ok(PlotSpec::new(format!("Scenario 2, study = 3 ams, {pct:.2}% censored"))
                .with_curve(PlotCurve::km("KM estimate", &curve)))
        }
    }
}
