//! Run artifacts: `trace.csv`, `events.csv`, `summary.toml` and an optional
//! gnuplot script. Every file is written through a temporary sibling and a
//! rename, so readers never see a partial file.

use crate::scenario::{ScenarioConfig, ScenarioFile};
use crate::sim::{summarize, SimTrace, Summary};
use serde::Serialize;
use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::Path;

pub const TRACE_HEADER: &str =
    "t,com_x,com_y,vel_x,vel_y,xi_x,xi_y,cop_x,cop_y,phase,foot_x,foot_y,foot_z,q1_des,q2_des,q3_des,q1,q2,q3,tau1,tau2,tau3";
pub const EVENTS_HEADER: &str = "t,kind,payload";

/// Thirteen significant digits, fixed width exponent.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.rows.len() * 420);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let mut fields = vec![
            num(r.t),
            num(r.com.x),
            num(r.com.y),
            num(r.com_vel.x),
            num(r.com_vel.y),
            num(r.xi.x),
            num(r.xi.y),
            num(r.cop.x),
            num(r.cop.y),
            r.phase.as_str().to_string(),
            num(r.foot.x),
            num(r.foot.y),
            num(r.foot.z),
        ];
        fields.extend(r.q_des.iter().chain(&r.q).chain(&r.tau).map(|v| num(*v)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn events_csv(trace: &SimTrace) -> String {
    let mut out = String::new();
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for e in &trace.events {
        let payload: Vec<String> = e.payload.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect();
        let _ = writeln!(out, "{},{},{}", num(e.t), e.kind, payload.join(";"));
    }
    out
}

#[derive(Serialize)]
struct SummaryRecord {
    balance_lost: bool,
    step_taken: bool,
    steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_position: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    planned_vs_landed_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_plan_vs_landed_angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    planned_duration: Option<f64>,
    final_dcm_offset: f64,
    captured: bool,
    aborted: bool,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    summary: SummaryRecord,
    config: &'a ScenarioFile,
}

/// Summary followed by the fully resolved scenario under `[config]`.
pub fn summary_toml(summary: &Summary, cfg: &ScenarioConfig) -> String {
    let record = SummaryRecord {
        balance_lost: summary.balance_lost,
        step_taken: summary.step_taken,
        steps: summary.steps,
        step_position: summary.step_position.map(|p| [p.x, p.y]),
        planned_vs_landed_angle: summary.planned_vs_landed_angle,
        final_plan_vs_landed_angle: summary.final_plan_vs_landed_angle,
        step_duration: summary.step_duration,
        planned_duration: summary.planned_duration,
        final_dcm_offset: summary.final_dcm_offset,
        captured: summary.captured,
        aborted: summary.aborted,
    };
    toml::to_string(&SummaryFile {
        summary: record,
        config: &cfg.file,
    })
    .expect("summary serializes")
}

/// Plots of the DCM against the CoP and of joint tracking, reading
/// `trace.csv` from the same directory.
pub fn gnuplot_script() -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str("set terminal pngcairo size 1200,800\n");
    s.push_str("set xlabel 't [s]'\n\n");
    s.push_str("set output 'dcm.png'\nset ylabel 'position [m]'\n");
    s.push_str("plot 'trace.csv' using 't':'xi_x' with lines, '' using 't':'cop_x' with lines, \\\n");
    s.push_str("     '' using 't':'xi_y' with lines, '' using 't':'cop_y' with lines\n\n");
    s.push_str("set output 'foot.png'\n");
    s.push_str("plot 'trace.csv' using 't':'foot_x' with lines, '' using 't':'foot_y' with lines, \\\n");
    s.push_str("     '' using 't':'foot_z' with lines\n\n");
    s.push_str("set output 'joints.png'\nset ylabel 'angle [rad]'\n");
    s.push_str("plot for [j in '1 2 3'] 'trace.csv' using 't':'q'.j.'_des' with lines, \\\n");
    s.push_str("     for [j in '1 2 3'] '' using 't':'q'.j with lines\n\n");
    s.push_str("set output 'torques.png'\nset ylabel 'torque [N m]'\n");
    s.push_str("plot for [j in '1 2 3'] 'trace.csv' using 't':'tau'.j with lines\n");
    s
}

pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Write every artifact of one run into `dir` and return its summary.
pub fn write_run(dir: &Path, trace: &SimTrace, cfg: &ScenarioConfig, gnuplot: bool) -> io::Result<Summary> {
    std::fs::create_dir_all(dir)?;
    let summary = summarize(trace);
    write_atomic(&dir.join("trace.csv"), &trace_csv(trace))?;
    write_atomic(&dir.join("events.csv"), &events_csv(trace))?;
    write_atomic(&dir.join("summary.toml"), &summary_toml(&summary, cfg))?;
    if gnuplot {
        write_atomic(&dir.join("plot.gp"), &gnuplot_script())?;
    }
    Ok(summary)
}
