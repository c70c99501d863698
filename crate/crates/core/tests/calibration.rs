mod common;

use common::stable_grid_config;
use lpbf_feedforward::calibration::{
    evaluate_f, normalized_error, read_measured_areas, sweep_f, tune_target, write_measured_areas, AreaSource,
    BulkWindow, VirtualMachine, TARGET_TOLERANCE,
};
use lpbf_feedforward::controller::{run_feedforward, ControlConfig, RunLimit, ThermalContext};
use lpbf_feedforward::meltpool::{area, MeltPoolCoefficients};
use lpbf_feedforward::scanpath::{parse_scanpath, GridConfig, LayerScan, SteppedPyramid};
use lpbf_feedforward::thermal::{BeamParams, MaterialProps};
use proptest::prelude::*;

fn tiny_pyramid() -> SteppedPyramid {
    SteppedPyramid {
        widths_mm: [1.5, 1.0, 0.5],
        vectors_per_step: 6,
        substrate_layers: 2,
        ..SteppedPyramid::default()
    }
}

fn setup(py: &SteppedPyramid, mat: &MaterialProps) -> (ThermalContext, Vec<LayerScan>, BulkWindow) {
    let cfg = stable_grid_config(py.grid_config(&GridConfig::default()), mat);
    let layers = parse_scanpath(&py.to_scanpath_text(), &cfg).unwrap();
    let (ctx, layers) = ThermalContext::prepare(&layers, &cfg, mat.clone(), BeamParams::default()).unwrap();
    let (a, b) = py.bulk_window();
    (ctx, layers, BulkWindow::new(a, b))
}

#[test]
fn error_metric_hand_value() {
    let e = normalized_error(&[1.0, 1.0, 4.0]).unwrap();
    assert!((e - 6f64.sqrt() / 2.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn error_metric_ignores_scale_and_order(
        areas in prop::collection::vec(0.1f64..10.0, 1..40),
        s in 1e-8f64..1e3,
        seed in any::<u64>(),
    ) {
        let e = normalized_error(&areas).unwrap();
        let scaled: Vec<f64> = areas.iter().map(|a| a * s).collect();
        prop_assert!((normalized_error(&scaled).unwrap() - e).abs() <= 1e-12 * (1.0 + e));
        let mut shuffled = areas.clone();
        let n = shuffled.len();
        for i in 0..n {
            shuffled.swap(i, (seed as usize).wrapping_mul(i + 7) % n);
        }
        prop_assert!((normalized_error(&shuffled).unwrap() - e).abs() <= 1e-12 * (1.0 + e));
    }
}

#[test]
fn single_vector_target_inverts_the_cold_plate() {
    let mat = MaterialProps::in718();
    let c = MeltPoolCoefficients::in718();
    let cfg = stable_grid_config(GridConfig::default(), &mat);
    let layers = parse_scanpath("layer 0 z 0.04\nmark 0 0 2 0 1000\n", &cfg).unwrap();
    let (ctx, layers) = ThermalContext::prepare(&layers, &cfg, mat.clone(), BeamParams::default()).unwrap();
    let t = tune_target(&layers, &ctx, &ControlConfig::default(), &c, 220.0, &BulkWindow::new(-1.0, 1.0)).unwrap();
    assert_eq!(t.runs, 1);
    assert_eq!(t.area_target, area(220.0, 1.0, mat.baseplate_temp, &c, &mat).unwrap());
}

#[test]
fn tuned_target_reproduces_nominal_power_and_grows_with_it() {
    let mat = MaterialProps::in718();
    let c = MeltPoolCoefficients::in718();
    let (ctx, layers, window) = setup(&tiny_pyramid(), &mat);
    let cfg = ControlConfig::default();
    let low = tune_target(&layers, &ctx, &cfg, &c, 150.0, &window).unwrap();
    let high = tune_target(&layers, &ctx, &cfg, &c, 300.0, &window).unwrap();
    assert!(high.area_target > low.area_target);

    let s = run_feedforward(&layers, &ctx, &cfg.with_target(high.area_target), &c, None, RunLimit::All).unwrap();
    let ids: Vec<usize> = layers[0].vectors.iter().filter(|v| window.contains(v)).map(|v| v.id).collect();
    assert!(!ids.is_empty());
    let mean = s.mean_power_where(|e| ids.contains(&e.vector_id));
    assert!((mean - 300.0).abs() <= 1e-3 * 300.0);
    assert!((mean - 300.0).abs() <= TARGET_TOLERANCE * 300.0 * (1.0 + 1e-9));
}

#[test]
fn unreachable_nominal_power_is_reported() {
    let mat = MaterialProps::in718();
    let c = MeltPoolCoefficients::in718();
    let (ctx, layers, window) = setup(&tiny_pyramid(), &mat);
    let cfg = ControlConfig::default();
    assert!(tune_target(&layers, &ctx, &cfg, &c, cfg.p_max + 1.0, &window).is_err());
}

#[test]
fn predictions_as_measurements_give_zero_error() {
    let mat = MaterialProps::in718();
    let c = MeltPoolCoefficients::in718();
    let (ctx, layers, window) = setup(&tiny_pyramid(), &mat);
    let run = evaluate_f(2.0, &layers, &ctx, &ControlConfig::default(), &c, 220.0, &window, &AreaSource::Predicted).unwrap();
    assert!(run.schedule.entries.iter().all(|e| !e.clamped));
    assert!(run.epsilon < 1e-9, "{}", run.epsilon);
}

#[test]
fn measured_areas_must_cover_the_schedule() {
    let mat = MaterialProps::in718();
    let c = MeltPoolCoefficients::in718();
    let (ctx, layers, window) = setup(&tiny_pyramid(), &mat);
    let cfg = ControlConfig::default();
    let run = evaluate_f(2.0, &layers, &ctx, &cfg, &c, 220.0, &window, &AreaSource::Predicted).unwrap();

    let mut buf = Vec::new();
    write_measured_areas(&mut buf, &run.schedule, &run.areas).unwrap();
    let measured = read_measured_areas(buf.as_slice()).unwrap();
    let again = evaluate_f(2.0, &layers, &ctx, &cfg, &c, 220.0, &window, &AreaSource::Measured(measured.clone())).unwrap();
    assert!(again.epsilon < 1e-9);

    let mut short = measured;
    short.pop_first();
    assert!(evaluate_f(2.0, &layers, &ctx, &cfg, &c, 220.0, &window, &AreaSource::Measured(short)).is_err());
}

#[test]
fn sweep_recovers_hidden_tuning_factor() {
    let mat = MaterialProps::ss316l();
    let c = MeltPoolCoefficients::ss316l();
    let (ctx, layers, window) = setup(&tiny_pyramid(), &mat);
    let cfg = ControlConfig::default();
    let vm = AreaSource::Virtual(VirtualMachine {
        f_true: 2.5,
        coefficients: c.clone(),
    });
    let grid = [1.5, 2.0, 2.5, 3.0, 3.5];
    let sweep = sweep_f(&grid, &layers, &ctx, &cfg, &c, 290.0, &window, &vm).unwrap();
    assert_eq!(sweep.best_run().f, 2.5);
    let eps: Vec<f64> = sweep.runs.iter().map(|r| r.epsilon).collect();
    assert!(eps[0] > eps[1] && eps[1] > eps[2] && eps[2] < eps[3] && eps[3] < eps[4], "{eps:?}");

    let mut report = Vec::new();
    sweep.write_report(&mut report).unwrap();
    let text = String::from_utf8(report).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next(), Some("f,Ac_target_mm2,epsilon"));
    assert_eq!(lines.count(), grid.len());

    let one = sweep_f(&[3.0], &layers, &ctx, &cfg, &c, 290.0, &window, &vm).unwrap();
    assert_eq!(one.best, 0);
    assert_eq!(one.runs[0], sweep.runs[3]);
}
