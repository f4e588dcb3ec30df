//! Closed-form figure data: hire shares and hire quality over parameter grids.

use std::path::PathBuf;

use twostage_core::analytic::{
    equal_info_peak, equal_info_quality_curve, evaluate, Branch, ConstraintMode, HireCutoff, PipelineParams,
};

use crate::config::{Config, Resolved};
use crate::error::{usage, CliResult};
use crate::output::{num, opt_num, write_table, OutDir, Table};
use crate::svg::{line_chart, Series};

pub const FIGURE_IDS: [&str; 6] =
    ["ph-vs-theta", "ph-vs-delta", "eqh-vs-theta", "equal-info", "ph-vs-alpha", "ph-vs-theta-by-alpha"];

/// Expands `all` and rejects unknown ids.
pub fn resolve_ids(ids: &[String]) -> CliResult<Vec<&'static str>> {
    let mut out: Vec<&'static str> = Vec::new();
    for id in ids {
        if id == "all" {
            out.extend(FIGURE_IDS);
            continue;
        }
        match FIGURE_IDS.iter().find(|f| **f == id.as_str()) {
            Some(f) => out.push(f),
            None => {
                return Err(usage(format!("unknown figure id `{id}` (expected one of {}, all)", FIGURE_IDS.join(", "))))
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// min, min+step, ..., up to max (inclusive within rounding).
pub fn grid(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || max < min {
        return Err(usage(format!("bad grid: min {min}, max {max}, step {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        return Err(usage("grid has more than 100000 points"));
    }
    Ok((0..=count).map(|i| ((min + i as f64 * step) * 1e10).round() / 1e10).collect())
}

struct Settings {
    base: PipelineParams,
    cutoff: HireCutoff,
    theta_grid: Vec<f64>,
    delta_grid: Vec<f64>,
    alpha_grid: Vec<f64>,
    alpha_values: Vec<f64>,
    theta_s_values: Vec<f64>,
    theta_h_values: Vec<f64>,
    entropy: f64,
}

fn settings(cfg: &Config) -> CliResult<Settings> {
    let base = PipelineParams {
        theta: cfg.f64("theta", 0.4)?,
        theta_s: cfg.f64("theta_s", 0.5)?,
        theta_h: cfg.f64("theta_h", 0.5)?,
        p_a: cfg.f64("p_a", 0.3)?,
        shortlist_rate: cfg.f64("shortlist_rate", 0.15)?,
        finalist_rate: cfg.f64("finalist_rate", 0.2)?,
        ..PipelineParams::default()
    };
    base.validate().map_err(|e| usage(format!("figure parameters: {e}")))?;
    let cutoff = match cfg.choice("hire_cutoff", &["held", "match"])?.as_str() {
        "held" => HireCutoff::HeldAtUnconstrained,
        _ => HireCutoff::MatchHireCount,
    };
    Ok(Settings {
        base,
        cutoff,
        theta_grid: grid(0.0, cfg.f64("theta_max", 0.95)?, cfg.f64("theta_step", 0.05)?)?,
        delta_grid: grid(cfg.f64("delta_min", -0.2)?, cfg.f64("delta_max", 0.2)?, cfg.f64("delta_step", 0.02)?)?,
        alpha_grid: grid(cfg.f64("alpha_min", -0.5)?, cfg.f64("alpha_max", 0.5)?, cfg.f64("alpha_step", 0.05)?)?,
        alpha_values: cfg.list_f64("alpha_values", &[-0.2, -0.1, 0.0, 0.1, 0.2])?,
        theta_s_values: cfg.list_f64("theta_s_values", &[0.3, 0.5, 0.7])?,
        theta_h_values: cfg.list_f64("theta_h_values", &[0.3, 0.5, 0.7])?,
        entropy: cfg.f64("entropy", 0.5)?,
    })
}

/// Both constraint modes at one parameter point; failures become a note.
struct Pair {
    unconstrained: Option<(f64, f64)>,
    constrained: Option<(f64, f64)>,
    note: String,
}

fn both_modes(p: &PipelineParams, cutoff: HireCutoff) -> Pair {
    let mut notes = Vec::new();
    let mut run = |mode: ConstraintMode| match evaluate(p, mode, cutoff) {
        Ok(o) => Some((o.shares.p_h, o.quality)),
        Err(e) => {
            notes.push(format!("{}: {e}", mode.name()));
            None
        }
    };
    let unconstrained = run(ConstraintMode::None);
    let constrained = run(ConstraintMode::EqualSelection);
    Pair { unconstrained, constrained, note: notes.join("; ") }
}

fn ph_cols(pair: &Pair) -> [String; 3] {
    [opt_num(pair.constrained.map(|v| v.0)), opt_num(pair.unconstrained.map(|v| v.0)), pair.note.clone()]
}

struct Figure {
    table: Table,
    title: &'static str,
    x_col: usize,
    /// Column that splits rows into series, if any.
    group_col: Option<usize>,
    y_cols: Vec<usize>,
}

fn ph_vs_theta(s: &Settings) -> Figure {
    let mut t = Table::new("ph-vs-theta", &["theta", "p_h_constrained", "p_h_unconstrained", "note"]);
    for &theta in &s.theta_grid {
        let pair = both_modes(&PipelineParams { theta, ..s.base }, s.cutoff);
        let [c, u, n] = ph_cols(&pair);
        t.push(vec![num(theta), c, u, n]);
    }
    Figure { table: t, title: "Female share of hires vs theta", x_col: 0, group_col: None, y_cols: vec![1, 2] }
}

fn ph_vs_delta(s: &Settings) -> Figure {
    let mut t = Table::new("ph-vs-delta", &["delta", "theta", "p_h_constrained", "p_h_unconstrained", "note"]);
    for &delta in &s.delta_grid {
        let pair = both_modes(&PipelineParams { delta, ..s.base }, s.cutoff);
        let [c, u, n] = ph_cols(&pair);
        t.push(vec![num(delta), num(s.base.theta), c, u, n]);
    }
    Figure { table: t, title: "Female share of hires vs delta", x_col: 0, group_col: None, y_cols: vec![2, 3] }
}

fn eqh_vs_theta(s: &Settings) -> Figure {
    let mut t = Table::new("eqh-vs-theta", &["theta_s", "theta", "eq_h_constrained", "eq_h_unconstrained", "note"]);
    for &theta_s in &s.theta_s_values {
        for &theta in &s.theta_grid {
            let pair = both_modes(&PipelineParams { theta, theta_s, ..s.base }, s.cutoff);
            t.push(vec![
                num(theta_s),
                num(theta),
                opt_num(pair.constrained.map(|v| v.1)),
                opt_num(pair.unconstrained.map(|v| v.1)),
                pair.note,
            ]);
        }
    }
    Figure { table: t, title: "Expected hire quality vs theta", x_col: 1, group_col: Some(0), y_cols: vec![3] }
}

fn equal_info(s: &Settings) -> (Figure, Table) {
    let mut t =
        Table::new("equal-info", &["theta_h", "theta", "theta_s", "eq_h_unconstrained", "eq_h_constrained", "note"]);
    let mut peaks = Table::new("equal-info-peaks", &["theta_h", "theta_peak", "theta_s_peak", "note"]);
    for &theta_h in &s.theta_h_values {
        let base = PipelineParams { theta_h, ..s.base };
        let none =
            equal_info_quality_curve(theta_h, s.entropy, &s.theta_grid, Branch::Plus, &base, ConstraintMode::None);
        let eq = equal_info_quality_curve(
            theta_h,
            s.entropy,
            &s.theta_grid,
            Branch::Plus,
            &base,
            ConstraintMode::EqualSelection,
        );
        for (a, b) in none.iter().zip(&eq) {
            let note = [a.note.as_deref(), b.note.as_deref()].into_iter().flatten().collect::<Vec<_>>().join("; ");
            t.push(vec![num(theta_h), num(a.theta), opt_num(a.theta_s), opt_num(a.quality), opt_num(b.quality), note]);
        }
        match equal_info_peak(theta_h, s.entropy) {
            Ok(theta) => {
                let ts = twostage_core::analytic::equal_info_theta_s(theta, theta_h, s.entropy, Branch::Plus);
                let (ts, note) = match ts {
                    Ok(v) => (num(v), String::new()),
                    Err(e) => (String::new(), e.to_string()),
                };
                peaks.push(vec![num(theta_h), num(theta), ts, note]);
            }
            Err(e) => peaks.push(vec![num(theta_h), String::new(), String::new(), e.to_string()]),
        }
    }
    (
        Figure {
            table: t,
            title: "Hire quality along equal-information pairs",
            x_col: 1,
            group_col: Some(0),
            y_cols: vec![3],
        },
        peaks,
    )
}

fn ph_vs_alpha(s: &Settings) -> Figure {
    let mut t = Table::new("ph-vs-alpha", &["alpha", "theta", "p_h_constrained", "p_h_unconstrained", "note"]);
    for &alpha in &s.alpha_grid {
        let pair = both_modes(&PipelineParams { alpha, ..s.base }, s.cutoff);
        let [c, u, n] = ph_cols(&pair);
        t.push(vec![num(alpha), num(s.base.theta), c, u, n]);
    }
    Figure { table: t, title: "Female share of hires vs alpha", x_col: 0, group_col: None, y_cols: vec![2, 3] }
}

fn ph_vs_theta_by_alpha(s: &Settings) -> Figure {
    let mut t = Table::new("ph-vs-theta-by-alpha", &["alpha", "theta", "p_h_constrained", "p_h_unconstrained", "note"]);
    for &alpha in &s.alpha_values {
        for &theta in &s.theta_grid {
            let pair = both_modes(&PipelineParams { alpha, theta, ..s.base }, s.cutoff);
            let [c, u, n] = ph_cols(&pair);
            t.push(vec![num(alpha), num(theta), c, u, n]);
        }
    }
    Figure { table: t, title: "Female share of hires vs theta by alpha", x_col: 1, group_col: Some(0), y_cols: vec![2] }
}

fn to_svg(f: &Figure) -> String {
    let parse = |s: &str| s.parse::<f64>().unwrap_or(f64::NAN);
    let mut series: Vec<Series> = Vec::new();
    for &y in &f.y_cols {
        match f.group_col {
            None => series.push(Series {
                name: f.table.header[y].clone(),
                points: f.table.rows.iter().map(|r| (parse(&r[f.x_col]), parse(&r[y]))).collect(),
            }),
            Some(g) => {
                for row in &f.table.rows {
                    let name = format!("{} = {}", f.table.header[g], row[g]);
                    let point = (parse(&row[f.x_col]), parse(&row[y]));
                    match series.iter_mut().find(|s| s.name == name) {
                        Some(s) => s.points.push(point),
                        None => series.push(Series { name, points: vec![point] }),
                    }
                }
            }
        }
    }
    let y_label = if f.y_cols.len() == 1 { f.table.header[f.y_cols[0]].as_str() } else { "value" };
    line_chart(f.title, &f.table.header[f.x_col], y_label, &series)
}

/// Writes one CSV (plus sidecar, plus optional SVG) per requested figure.
pub fn run(ids: &[&str], cfg: &Config, seed: u64, out: &OutDir, svg: bool) -> CliResult<Vec<PathBuf>> {
    let s = settings(cfg)?;
    let run: Resolved = cfg.finish("figures", seed)?;
    let mut written = Vec::new();
    for &id in ids {
        let (fig, extra) = match id {
            "ph-vs-theta" => (ph_vs_theta(&s), None),
            "ph-vs-delta" => (ph_vs_delta(&s), None),
            "eqh-vs-theta" => (eqh_vs_theta(&s), None),
            "equal-info" => {
                let (f, peaks) = equal_info(&s);
                (f, Some(peaks))
            }
            "ph-vs-alpha" => (ph_vs_alpha(&s), None),
            "ph-vs-theta-by-alpha" => (ph_vs_theta_by_alpha(&s), None),
            other => return Err(usage(format!("unknown figure id `{other}`"))),
        };
        written.push(write_table(out, id, &fig.table, &run)?);
        if let Some(t) = extra {
            written.push(write_table(out, &t.kind.clone(), &t, &run)?);
        }
        if svg {
            let path = out.path().join(format!("{id}.svg"));
            std::fs::write(&path, to_svg(&fig))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(grid(0.0, 0.2, 0.05).unwrap(), vec![0.0, 0.05, 0.1, 0.15, 0.2]);
        assert_eq!(grid(-0.2, 0.2, 0.1).unwrap(), vec![-0.2, -0.1, 0.0, 0.1, 0.2]);
        assert!(grid(0.0, 1.0, 0.0).is_err());
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn ids() {
        assert_eq!(resolve_ids(&["all".into()]).unwrap().len(), 6);
        assert_eq!(resolve_ids(&["ph-vs-delta".into(), "ph-vs-delta".into()]).unwrap(), vec!["ph-vs-delta"]);
        assert!(resolve_ids(&["fig9".into()]).is_err());
    }
}
