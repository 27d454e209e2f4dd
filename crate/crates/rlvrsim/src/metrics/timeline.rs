//! Execution timelines: one lane per pool plus one per task, rendered as
//! ASCII (one column per time quantum) or a self-contained SVG.

use crate::cluster::PoolId;
use crate::engine::{EventKind, TraceLog};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Rollout,
    Tool,
    Train,
}

impl Phase {
    fn glyph(&self) -> char {
        match self {
            Phase::Rollout => 'R',
            Phase::Tool => 't',
            Phase::Train => 'T',
        }
    }

    fn color(&self) -> &'static str {
        match self {
            Phase::Rollout => "#4878a8",
            Phase::Tool => "#3f9e4d",
            Phase::Train => "#d9632f",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub label: String,
    pub intervals: Vec<(f64, f64, Phase)>,
}

#[derive(Debug, Clone)]
pub struct TimelineModel {
    pub lanes: Vec<Lane>,
    pub horizon: f64,
}

/// Extract phase intervals per pool and per task from the trace.
pub fn build_timeline(trace: &TraceLog, scenario: &Scenario) -> TimelineModel {
    let n = scenario.tasks.len();
    let horizon = trace.horizon;

    let mut task_lanes: Vec<Vec<(f64, f64, Phase)>> = vec![Vec::new(); n];
    let mut seg_open: Vec<Option<f64>> = vec![None; n];
    let mut tool_open: Vec<Option<f64>> = vec![None; n];
    let mut train_open: Vec<Option<f64>> = vec![None; n];

    for r in &trace.records {
        let Some(task) = r.task else { continue };
        let t = r.time;
        match r.kind {
            EventKind::RolloutStarted => seg_open[task] = Some(t),
            EventKind::RolloutSegmentDone => {
                if let Some(s) = seg_open[task].take() {
                    task_lanes[task].push((s, t, Phase::Rollout));
                }
                // A tool call begins here unless this was the final segment;
                // the matching ToolCallDone closes it.
                tool_open[task] = Some(t);
            }
            EventKind::TrajectoryReady => {
                tool_open[task] = None;
            }
            EventKind::ToolCallDone => {
                if let Some(s) = tool_open[task].take() {
                    task_lanes[task].push((s, t, Phase::Tool));
                }
                seg_open[task] = Some(t);
            }
            EventKind::TrainStarted => train_open[task] = Some(t),
            EventKind::TrainDone => {
                if let Some(s) = train_open[task].take() {
                    task_lanes[task].push((s, t, Phase::Train));
                }
            }
            _ => {}
        }
    }
    // Clip work still open at the horizon.
    for task in 0..n {
        if let Some(s) = seg_open[task] {
            task_lanes[task].push((s, horizon, Phase::Rollout));
        }
        if let Some(s) = tool_open[task] {
            task_lanes[task].push((s, horizon, Phase::Tool));
        }
        if let Some(s) = train_open[task] {
            task_lanes[task].push((s, horizon, Phase::Train));
        }
    }

    let phase_union = |phase: Phase| -> Vec<(f64, f64, Phase)> {
        let mut all: Vec<(f64, f64)> = task_lanes
            .iter()
            .flatten()
            .filter(|(_, _, p)| *p == phase)
            .map(|&(s, e, _)| (s, e))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut merged: Vec<(f64, f64, Phase)> = Vec::new();
        for (s, e) in all {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e, phase)),
            }
        }
        merged
    };

    let mut lanes = Vec::new();
    if scenario.collocated() {
        let mut shared = phase_union(Phase::Rollout);
        shared.extend(phase_union(Phase::Train));
        shared.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        lanes.push(Lane {
            label: "pool shared".into(),
            intervals: shared,
        });
    } else {
        lanes.push(Lane {
            label: format!("pool {}", PoolId::Rollout.as_str()),
            intervals: phase_union(Phase::Rollout),
        });
        lanes.push(Lane {
            label: format!("pool {}", PoolId::Train.as_str()),
            intervals: phase_union(Phase::Train),
        });
    }
    lanes.push(Lane {
        label: format!("pool {}", PoolId::Env.as_str()),
        intervals: phase_union(Phase::Tool),
    });
    for (i, spec) in scenario.tasks.iter().enumerate() {
        lanes.push(Lane {
            label: format!("task {}", spec.task_id),
            intervals: std::mem::take(&mut task_lanes[i]),
        });
    }
    TimelineModel { lanes, horizon }
}

/// One character column per `quantum` seconds; training shadows tool calls
/// shadow rollout when a cell holds several phases.
pub fn timeline_ascii(model: &TimelineModel, quantum: Option<f64>) -> String {
    let horizon = model.horizon;
    let q = quantum.unwrap_or_else(|| if horizon > 0.0 { horizon / 80.0 } else { 1.0 });
    let cols = if horizon > 0.0 {
        ((horizon / q).ceil() as usize).max(1)
    } else {
        0
    };
    let label_w = model
        .lanes
        .iter()
        .map(|l| l.label.len())
        .max()
        .unwrap_or(0)
        .max(4);

    let mut out = format!(
        "timeline: horizon {horizon:.3} s, quantum {q:.3} s/column ({cols} columns)\n\
         legend: R rollout, t tool call, T train, . idle\n"
    );
    for lane in &model.lanes {
        let mut cells = vec!['.'; cols];
        for &(s, e, phase) in &lane.intervals {
            if e <= s {
                continue;
            }
            let c0 = ((s / q).floor() as usize).min(cols.saturating_sub(1));
            let c1 = (((e / q).ceil() as usize).max(c0 + 1)).min(cols);
            for cell in cells.iter_mut().take(c1).skip(c0) {
                let g = phase.glyph();
                // Train > tool > rollout precedence inside one cell.
                let rank = |ch: char| match ch {
                    'T' => 3,
                    't' => 2,
                    'R' => 1,
                    _ => 0,
                };
                if rank(g) > rank(*cell) {
                    *cell = g;
                }
            }
        }
        out.push_str(&format!(
            "{:<width$} |{}|\n",
            lane.label,
            cells.iter().collect::<String>(),
            width = label_w
        ));
    }
    out
}

/// Self-contained SVG document (no external styles or scripts).
pub fn timeline_svg(model: &TimelineModel) -> String {
    const WIDTH: f64 = 960.0;
    const LANE_H: f64 = 22.0;
    const LANE_GAP: f64 = 6.0;
    const LEFT: f64 = 170.0;
    const TOP: f64 = 30.0;

    let horizon = model.horizon.max(f64::MIN_POSITIVE);
    let height = TOP + model.lanes.len() as f64 * (LANE_H + LANE_GAP) + 30.0;
    let scale = (WIDTH - LEFT - 10.0) / horizon;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" \
         viewBox=\"0 0 {WIDTH} {height}\" font-family=\"monospace\" font-size=\"11\">\n"
    );
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    // Time axis with five ticks.
    let axis_y = height - 18.0;
    svg.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{axis_y}\" x2=\"{}\" y2=\"{axis_y}\" stroke=\"#555\"/>\n",
        WIDTH - 10.0
    ));
    for i in 0..=5 {
        let t = model.horizon * i as f64 / 5.0;
        let x = LEFT + t * scale;
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{axis_y}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#555\"/>\n",
            axis_y + 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\" fill=\"#333\">{t:.1}s</text>\n",
            axis_y + 15.0
        ));
    }
    for (i, lane) in model.lanes.iter().enumerate() {
        let y = TOP + i as f64 * (LANE_H + LANE_GAP);
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#111\">{}</text>\n",
            LEFT - 8.0,
            y + LANE_H * 0.7,
            lane.label
        ));
        svg.push_str(&format!(
            "  <rect x=\"{LEFT}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{LANE_H}\" \
             fill=\"#f2f2f2\"/>\n",
            WIDTH - LEFT - 10.0
        ));
        for &(s, e, phase) in &lane.intervals {
            if e <= s {
                continue;
            }
            let x = LEFT + s * scale;
            let w = ((e - s) * scale).max(0.5);
            svg.push_str(&format!(
                "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{LANE_H}\" \
                 fill=\"{}\"><title>{:.3}s-{:.3}s</title></rect>\n",
                phase.color(),
                s,
                e
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}
