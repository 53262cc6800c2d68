//! Subcommand bodies for the `infsup` binary. Each returns the process exit
//! status: 0 success, 1 input/IO error or failed validation, 2 run stopped
//! at the round cap.

use std::fs;
use std::path::{Path, PathBuf};

use crate::certification::BoundRegistry;
use crate::config::RunConfig;
use crate::error::Result;
use crate::greedy::{run, GridBounds, RunOutcome};
use crate::plot::{heatmap_svg, histogram_svg};
use crate::table::{BoundsRow, BoundsTable};
use crate::truth::TrainSample;
use crate::validation::validate_registry;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ROUND_CAP: i32 = 2;

pub fn bounds_table(xi: &TrainSample, bounds: &GridBounds) -> BoundsTable {
    let eps = bounds.eps();
    BoundsTable::new(
        xi.points()
            .iter()
            .enumerate()
            .map(|(i, mu)| BoundsRow {
                mu: mu.clone(),
                beta_lb: bounds.lb[i],
                beta_ub: bounds.ub[i],
                eps: eps[i],
                beta_truth: None,
            })
            .collect(),
    )
}

/// Writes `bounds.csv`, `bounds_round{k}.csv`, `registry.json` and
/// `report.json` into `dir`.
pub fn write_run_artifacts(dir: &Path, xi: &TrainSample, out: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    bounds_table(xi, &out.bounds).write(&dir.join("bounds.csv"))?;
    for (k, b) in out.round_bounds.iter().enumerate() {
        bounds_table(xi, b).write(&dir.join(format!("bounds_round{}.csv", k + 1)))?;
    }
    out.registry.save(&dir.join("registry.json"))?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&out.report)?)?;
    Ok(())
}

fn run_inner(config: &Path) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let op = cfg.operator()?;
    let xi = cfg.train_sample(&op)?;
    let greedy = cfg.greedy_for(&op)?;
    let out = run(&op, &xi, &greedy, cfg.algorithm)?;
    write_run_artifacts(&cfg.output_dir, &xi, &out)?;
    println!(
        "{} rounds, {} subdomains, max gap {:.6}",
        out.report.rounds.len(),
        out.report.subdomains,
        out.report.max_eps
    );
    if out.report.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "round cap of {} reached with max gap {:.6} above eps_g = {}",
            greedy.max_rounds, out.report.max_eps, greedy.eps_g
        );
        Ok(EXIT_ROUND_CAP)
    }
}

pub fn cmd_run(config: &Path) -> i32 {
    report_errors(run_inner(config))
}

fn validate_inner(registry: &Path, config: &Path, samples: usize, seed: u64) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let op = cfg.operator()?;
    let xi = cfg.train_sample(&op)?;
    let reg = BoundRegistry::load(registry)?;
    if samples == 0 {
        eprintln!("warning: --samples 0 skips the sandwich check");
    }
    let rep = validate_registry(&reg, &op, &xi, samples, seed)?;
    for v in &rep.violations {
        eprintln!("violation: {v}");
    }
    if rep.checked_points > 0 {
        println!(
            "checked {} points; worst lower margin {:.3e}, worst upper margin {:.3e}",
            rep.checked_points, rep.worst_lower_margin, rep.worst_upper_margin
        );
    }
    if rep.passed() {
        println!("validation passed");
        Ok(EXIT_OK)
    } else {
        println!("validation failed: {} violations", rep.violations.len());
        Ok(EXIT_ERROR)
    }
}

pub fn cmd_validate(registry: &Path, config: &Path, samples: usize, seed: u64) -> i32 {
    report_errors(validate_inner(registry, config, samples, seed))
}

fn plot_inner(bounds: &Path, out: &Path) -> Result<i32> {
    let table = BoundsTable::read(bounds)?;
    fs::create_dir_all(out)?;
    fs::write(
        out.join("beta_lb.svg"),
        heatmap_svg(&table, "lower bound", |i| table.rows[i].beta_lb),
    )?;
    fs::write(
        out.join("beta_ub.svg"),
        heatmap_svg(&table, "upper bound", |i| table.rows[i].beta_ub),
    )?;
    let gaps: Vec<f64> = table.rows.iter().map(|r| r.eps).collect();
    fs::write(out.join("gap_histogram.svg"), histogram_svg(&gaps, "relative gap"))?;
    println!("max gap {:.6}", table.max_eps());
    Ok(EXIT_OK)
}

pub fn cmd_plot(bounds: &Path, out: Option<&Path>) -> i32 {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| bounds.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    report_errors(plot_inner(bounds, &dir))
}

fn report_errors(r: Result<i32>) -> i32 {
    r.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })
}
