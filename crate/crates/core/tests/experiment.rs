use ssc_core::cluster::{check_sep_and_trivial, rel_violation, Verdict};
use ssc_core::experiment::{
    coefficient_path, log_space, read_results, run_grid, strip_cells, white_band, Axis2,
    ExperimentGrid, GridBase, GridCellResult,
};
use ssc_core::io::read_coefficients;
use ssc_core::simulate::Model;
use ssc_core::solver::SolveStatus;
use ssc_core::RngSpec;

fn small_grid() -> ExperimentGrid {
    let base = GridBase {
        model: Model::FullyRandom,
        n: 20,
        d: 2,
        l: 3,
        kappa: 4.0,
        sigma: 0.1,
        normalize_noisy: false,
    };
    let mut g = ExperimentGrid::new(base, Axis2::Sigma(vec![0.0, 0.1, 0.3]));
    g.lambda_points = 8;
    g.seeds = 2;
    g.master_seed = 17;
    g
}

#[test]
fn default_lambda_axis_spans_five_decades_around_sqrt_n() {
    let g = ExperimentGrid::new(small_grid().base, Axis2::Sigma(vec![0.0]));
    let axis = g.lambda_axis();
    assert_eq!(axis.len(), 25);
    let s = 20f64.sqrt();
    assert!((axis[0] - s * 1e-2).abs() < 1e-12);
    assert!((axis[24] / (s * 1e3) - 1.0).abs() < 1e-12);
    for w in axis.windows(2) {
        assert!((w[1] / w[0] - 10f64.powf(5.0 / 24.0)).abs() < 1e-9);
    }
    let three = log_space(1.0, 100.0, 3);
    assert_eq!((three[0], three[2]), (1.0, 100.0));
    assert!((three[1] - 10.0).abs() < 1e-12);
}

#[test]
fn results_are_ordered_and_complete() {
    let g = small_grid();
    let cells = run_grid(&g, 2, None).unwrap();
    assert_eq!(cells.len(), 3 * 2 * 8);
    for w in cells.windows(2) {
        assert!(w[0].key() < w[1].key());
    }
    for c in &cells {
        assert_eq!(c.n, 20);
        assert_eq!(c.axis2, "sigma");
        assert_eq!(c.status, SolveStatus::Certified);
        assert!(c.accuracy.is_none());
        match c.verdict {
            Verdict::Trivial => assert!(c.trivial_columns > 0 || c.rel_violation.is_none()),
            Verdict::White => assert_eq!(c.rel_violation, Some(0.0)),
            Verdict::Gray => assert!(c.rel_violation.unwrap() > 0.0),
        }
    }
    // the smallest lambda is below every column's nontrivial threshold
    assert!(cells
        .iter()
        .filter(|c| c.lambda_index == 0)
        .all(|c| c.verdict == Verdict::Trivial));
}

#[test]
fn output_is_independent_of_worker_count() {
    let g = small_grid();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_grid(&g, 1, Some(a.path())).unwrap();
    run_grid(&g, 8, Some(b.path())).unwrap();
    let ra = std::fs::read(a.path().join("results.csv")).unwrap();
    let rb = std::fs::read(b.path().join("results.csv")).unwrap();
    assert_eq!(ra, rb);
    assert!(a.path().join("timings.csv").exists());
    assert!(!a.path().join("partial").exists());
    let parsed = read_results(&a.path().join("results.csv")).unwrap();
    let direct = run_grid(&g, 3, None).unwrap();
    assert_eq!(parsed.len(), direct.len());
    for (p, d) in parsed.iter().zip(&direct) {
        assert_eq!(p.key(), d.key());
        assert_eq!(p.verdict, d.verdict);
        assert_eq!(p.rel_violation, d.rel_violation);
        assert_eq!(p.lambda, d.lambda);
    }
}

#[test]
fn verdicts_are_recomputable_from_kept_coefficients() {
    let mut g = small_grid();
    g.keep_coefficients = true;
    let dir = tempfile::tempdir().unwrap();
    let cells = run_grid(&g, 4, Some(dir.path())).unwrap();
    let mut rng = RngSpec::new(3).rng();
    for _ in 0..10 {
        let cell = &cells[rng.below(cells.len())];
        let c = read_coefficients(&coefficient_path(
            dir.path(),
            cell.axis2_index,
            cell.seed,
            cell.lambda_index,
        ))
        .unwrap();
        let labels = g.strip_dataset(cell.axis2_index, cell.seed).unwrap().labels;
        let sep = check_sep_and_trivial(&c, &labels, g.support_eps_rel).unwrap();
        let rel = rel_violation(&c, &labels, g.support_eps_rel).ok();
        assert_eq!(Verdict::classify(sep.trivial_columns, rel), cell.verdict);
        assert_eq!(rel, cell.rel_violation);
    }
}

fn untimed(mut cells: Vec<GridCellResult>) -> Vec<GridCellResult> {
    cells.iter_mut().for_each(|c| c.runtime_ms = 0);
    cells
}

#[test]
fn interrupted_runs_resume_from_saved_strips() {
    let g = small_grid();
    let dir = tempfile::tempdir().unwrap();
    let full = run_grid(&g, 2, None).unwrap();
    // leave the state an interrupted run would: a marker and one finished strip
    std::fs::create_dir_all(dir.path().join("partial")).unwrap();
    ssc_core::io::write_json(&dir.path().join("in_progress.json"), &g).unwrap();
    let mut strip = strip_cells(&full, 1, 0);
    for c in &mut strip {
        c.iterations = 999_999;
    }
    let saved = serde_json::json!({ "cells": strip, "runtimes_ms": vec![0; strip.len()] });
    std::fs::write(
        dir.path().join("partial/strip-a1-s0.json"),
        saved.to_string(),
    )
    .unwrap();

    let resumed = run_grid(&g, 2, Some(dir.path())).unwrap();
    let reused = strip_cells(&resumed, 1, 0);
    assert!(reused.iter().all(|c| c.iterations == 999_999));
    assert_eq!(
        untimed(strip_cells(&resumed, 0, 0)),
        untimed(strip_cells(&full, 0, 0))
    );
    assert!(!dir.path().join("in_progress.json").exists());

    // a marker for a different grid is ignored
    let mut other = g.clone();
    other.master_seed += 1;
    std::fs::create_dir_all(dir.path().join("partial")).unwrap();
    ssc_core::io::write_json(&dir.path().join("in_progress.json"), &other).unwrap();
    std::fs::write(
        dir.path().join("partial/strip-a1-s0.json"),
        saved.to_string(),
    )
    .unwrap();
    let rerun = run_grid(&g, 2, Some(dir.path())).unwrap();
    assert_eq!(
        untimed(strip_cells(&rerun, 1, 0)),
        untimed(strip_cells(&full, 1, 0))
    );
}

#[test]
fn clustering_reports_accuracy() {
    let mut g = small_grid();
    g.cluster = true;
    g.axis2 = Axis2::Sigma(vec![0.0]);
    g.seeds = 1;
    let cells = run_grid(&g, 1, None).unwrap();
    assert!(cells
        .iter()
        .all(|c| c.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a))));
    assert!(cells
        .iter()
        .filter(|c| c.verdict == Verdict::White)
        .all(|c| c.accuracy == Some(1.0)));
}

#[test]
fn axis_overrides_reach_the_model() {
    let mut g = small_grid();
    g.axis2 = Axis2::L(vec![2, 4]);
    assert_eq!(g.model_spec(1).dims, vec![2; 4]);
    g.axis2 = Axis2::D(vec![1, 3]);
    assert_eq!(g.model_spec(1).dims, vec![3; 3]);
    g.axis2 = Axis2::D(vec![20]);
    assert!(g.validate().is_err());
    let mut g = small_grid();
    g.seeds = 0;
    assert!(g.validate().is_err());
}

#[test]
fn grid_json_uses_defaults() {
    let g: ExperimentGrid = serde_json::from_str(
        r#"{"base": {"n": 100, "d": 4, "L": 3, "kappa": 5}, "axis2": {"kind": "sigma", "values": [0, 0.2]}}"#,
    )
    .unwrap();
    assert_eq!(g.lambda_axis().len(), 25);
    assert_eq!(g.seeds, 1);
    assert_eq!(g.base.model, Model::FullyRandom);
    assert_eq!(g.gray_threshold, 0.1);
}

#[test]
fn white_band_is_the_longest_white_run() {
    let g = small_grid();
    let mut strip = strip_cells(&run_grid(&g, 1, None).unwrap(), 0, 0);
    let pattern = [0, 1, 1, 0, 1, 1, 1, 0];
    for (c, &p) in strip.iter_mut().zip(&pattern) {
        c.verdict = if p == 1 {
            Verdict::White
        } else {
            Verdict::Gray
        };
    }
    assert_eq!(white_band(&strip), Some((4, 6)));
    for c in &mut strip {
        c.verdict = Verdict::Trivial;
    }
    assert_eq!(white_band(&strip), None);
}
