use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lpbf_feedforward::calibration::{read_measured_areas, sweep_f, AreaSource, BulkWindow, VirtualMachine};
use lpbf_feedforward::controller::{read_power_table, run_feedforward, simulate_fixed, RunLimit, ThermalContext};
use lpbf_feedforward::meltpool::{calibration_sweep, fit_coefficients, read_tracks, synthesize_tracks, write_tracks, TrackSource};
use lpbf_feedforward::scanpath::{load_scanpath, parse_scanpath, GridConfig, LayerScan, OverhangSlab, SingleTracks, SteppedPyramid};
use lpbf_feedforward::thermal::snapshot::{summary_row, Snapshot, SUMMARY_HEADER};
use lpbf_feedforward::thermal::PartField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{window_m, RunConfig, Setup};
use crate::{Cli, CliError, Command, FixtureKind, FixtureSize};

const RESOLVED_CONFIG: &str = "resolved_config.toml";

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &cli.material {
        cfg.set_material(m);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::FitMeltpool { tracks, source } => fit_meltpool(cfg, out, &tracks, source.as_deref()),
        Command::Schedule { scanpath } => schedule(cfg, out, &scanpath),
        Command::TuneF { scanpath, f_values } => tune_f(cfg, out, scanpath.as_deref(), f_values),
        Command::Simulate { scanpath, powers } => simulate(cfg, out, &scanpath, powers.as_deref()),
        Command::GenFixture { kind, size } => gen_fixture(cfg, out, kind, size),
    }
}

/// Resolves the config, creates the output directory and echoes the
/// resolved config to it and to stdout.
fn start(cfg: RunConfig, out: &Path) -> Result<(RunConfig, Setup), CliError> {
    let (cfg, setup) = cfg.resolve()?;
    fs::create_dir_all(out)?;
    let text = cfg.to_toml();
    fs::write(out.join(RESOLVED_CONFIG), &text)?;
    println!("# resolved configuration\n{text}");
    Ok((cfg, setup))
}

fn require_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{}: no such file", p.display())))
    }
}

fn create(path: PathBuf) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn context(cfg: &RunConfig, setup: &Setup, layers: &[LayerScan]) -> Result<(ThermalContext, Vec<LayerScan>), CliError> {
    if layers.is_empty() {
        return Err(CliError::Config("scan path has no layers".into()));
    }
    let (mut ctx, layers) = ThermalContext::prepare(layers, &setup.grid, setup.material.clone(), setup.beam.clone())?;
    ctx.window_layers = cfg.grid.window_layers;
    ctx.dwell = cfg.dwell.clone();
    Ok((ctx, layers))
}

fn fit_meltpool(cfg: RunConfig, out: &Path, tracks: &Path, source: Option<&str>) -> Result<(), CliError> {
    let only = source
        .map(|s| TrackSource::parse(s).ok_or_else(|| CliError::Config(format!("unknown track source `{s}`"))))
        .transpose()?;
    require_file(tracks)?;
    let (_, setup) = start(cfg, out)?;
    let records = read_tracks(tracks)?;
    let fit = fit_coefficients(&records, &setup.material, only)?;
    fs::write(out.join("fit_report.csv"), fit.report_csv())?;
    print!("{}", fit.summary());
    Ok(())
}

fn schedule(cfg: RunConfig, out: &Path, scanpath: &Path) -> Result<(), CliError> {
    require_file(scanpath)?;
    let (cfg, setup) = start(cfg, out)?;
    let layers = load_scanpath(scanpath, &setup.grid)?;
    let (ctx, layers) = context(&cfg, &setup, &layers)?;
    let s = run_feedforward(&layers, &ctx, &setup.control, &setup.coefficients, None, RunLimit::All)?;

    let mut w = create(out.join("schedule.csv"))?;
    s.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(out.join("layer_power.csv"))?;
    s.write_layer_csv(&mut w)?;
    w.flush()?;
    let clamped = s.entries.iter().filter(|e| e.clamped).count();
    println!(
        "scheduled {} vectors, mean power {:.3} W, {clamped} clamped",
        s.len(),
        s.mean_power_where(|_| true)
    );
    Ok(())
}

fn pyramid(size: &str) -> Result<SteppedPyramid, CliError> {
    match size {
        "full" | "default" => Ok(SteppedPyramid::default()),
        "reduced" => Ok(SteppedPyramid::reduced()),
        "small" => Ok(SteppedPyramid::small()),
        other => Err(CliError::Config(format!("unknown pyramid size `{other}`"))),
    }
}

fn tune_f(mut cfg: RunConfig, out: &Path, scanpath: Option<&Path>, f_values: Option<Vec<f64>>) -> Result<(), CliError> {
    if let Some(f) = f_values {
        cfg.tune.f_values = f;
    }
    if cfg.tune.f_values.is_empty() {
        return Err(CliError::Config("no tuning factor candidates".into()));
    }
    let text = match scanpath {
        Some(p) => {
            require_file(p)?;
            if cfg.tune.bulk_window_mm.is_none() {
                return Err(CliError::Config("tune.bulk_window_mm is required with --scanpath".into()));
            }
            fs::read_to_string(p)?
        }
        None => {
            let py = pyramid(&cfg.tune.pyramid)?;
            let (a, b) = py.bulk_window();
            cfg.tune.bulk_window_mm.get_or_insert([a * 1e3, b * 1e3]);
            cfg = cfg.with_fixture_grid(&py.grid_config(&GridConfig::default()));
            py.to_scanpath_text()
        }
    };
    let (cfg, setup) = start(cfg, out)?;
    let source = match (&cfg.tune.measured_areas, cfg.tune.f_true) {
        (Some(p), _) => {
            require_file(p)?;
            AreaSource::Measured(read_measured_areas(File::open(p)?)?)
        }
        (None, Some(f_true)) => AreaSource::Virtual(VirtualMachine {
            f_true,
            coefficients: setup.coefficients.clone(),
        }),
        (None, None) => {
            return Err(CliError::Config(
                "tune-f needs tune.measured_areas or a virtual machine tune.f_true".into(),
            ))
        }
    };
    let layers = parse_scanpath(&text, &setup.grid)?;
    let (ctx, layers) = context(&cfg, &setup, &layers)?;
    let (a, b) = window_m(cfg.tune.bulk_window_mm.expect("set above"));
    let sweep = sweep_f(
        &cfg.tune.f_values,
        &layers,
        &ctx,
        &setup.control,
        &setup.coefficients,
        setup.control.p_nominal,
        &BulkWindow::new(a, b),
        &source,
    )?;

    let mut w = create(out.join("tuning_report.csv"))?;
    sweep.write_report(&mut w)?;
    w.flush()?;
    let best = sweep.best_run();
    let mut w = create(out.join("best_schedule.csv"))?;
    best.schedule.write_csv(&mut w)?;
    w.flush()?;
    for r in &sweep.runs {
        println!("f = {:<5} target {:.6} mm^2  epsilon {:.6}", r.f, r.area_target * 1e6, r.epsilon);
    }
    println!("best f = {} (epsilon {:.6})", best.f, best.epsilon);
    Ok(())
}

fn simulate(cfg: RunConfig, out: &Path, scanpath: &Path, powers: Option<&Path>) -> Result<(), CliError> {
    require_file(scanpath)?;
    if let Some(p) = powers {
        require_file(p)?;
    }
    let (cfg, setup) = start(cfg, out)?;
    let layers = load_scanpath(scanpath, &setup.grid)?;
    let (ctx, layers) = context(&cfg, &setup, &layers)?;

    let table: Option<BTreeMap<usize, f64>> = powers.map(|p| read_power_table(File::open(p)?)).transpose()?;
    if let Some(t) = &table {
        // Subdivided vectors may be listed under their own id or under the
        // id of the segment they were cut from.
        if let Some(v) = layers
            .iter()
            .flat_map(|l| l.marks())
            .find(|v| !t.contains_key(&v.id) && !t.contains_key(&v.source_id))
        {
            return Err(CliError::Config(format!("no power listed for vector {}", v.id)));
        }
    }
    let power_of = |v: &lpbf_feedforward::scanpath::ScanVector| match &table {
        Some(t) => t.get(&v.id).or_else(|| t.get(&v.source_id)).copied().unwrap_or(f64::NAN),
        None => v.power_nominal,
    };

    let snap_dir = out.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut rows = Vec::new();
    let grid = &ctx.grid;
    let mut observer = |k: usize, part: &PartField| -> lpbf_feedforward::Result<()> {
        let snap = Snapshot::from_part(part, grid, k);
        let mut w = BufWriter::new(File::create(snap_dir.join(format!("layer_{k:04}.bin")))?);
        snap.write_to(&mut w)?;
        w.flush()?;
        rows.push(summary_row(&snap));
        Ok(())
    };
    let s = simulate_fixed(&layers, &ctx, power_of, &setup.coefficients, Some(&mut observer))?;

    let mut w = create(out.join("predicted.csv"))?;
    s.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(out.join("layer_temperature.csv"))?;
    writeln!(w, "# lpbf layer temperature v1")?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in &rows {
        writeln!(w, "{r}")?;
    }
    w.flush()?;
    println!("simulated {} vectors over {} layers", s.len(), rows.len());
    Ok(())
}

fn gen_fixture(mut cfg: RunConfig, out: &Path, kind: FixtureKind, size: FixtureSize) -> Result<(), CliError> {
    let base = GridConfig::default();
    let (name, text) = match kind {
        FixtureKind::SteppedPyramid => {
            let py = match size {
                FixtureSize::Default => SteppedPyramid::default(),
                FixtureSize::Reduced => SteppedPyramid::reduced(),
                FixtureSize::Small => SteppedPyramid::small(),
            };
            let (a, b) = py.bulk_window();
            cfg.tune.bulk_window_mm = Some([a * 1e3, b * 1e3]);
            cfg = cfg.with_fixture_grid(&py.grid_config(&base));
            ("stepped_pyramid", py.to_scanpath_text())
        }
        FixtureKind::OverhangSlab => {
            let slab = match size {
                FixtureSize::Default => OverhangSlab::default(),
                FixtureSize::Small => OverhangSlab::small(),
                FixtureSize::Reduced => {
                    return Err(CliError::Config("overhang-slab comes in default and small sizes".into()))
                }
            };
            cfg = cfg.with_fixture_grid(&slab.grid_config(&base));
            ("overhang_slab", slab.to_scanpath_text())
        }
        FixtureKind::SingleTracks => {
            let t = SingleTracks::default();
            cfg = cfg.with_fixture_grid(&t.grid_config(&base));
            ("single_tracks", t.to_scanpath_text())
        }
        FixtureKind::Tracks => {
            let (cfg, setup) = start(cfg, out)?;
            let noise = Normal::new(0.0, cfg.tracks.noise).map_err(|e| CliError::Config(format!("tracks.noise: {e}")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let records = synthesize_tracks(
                &calibration_sweep(),
                &setup.coefficients,
                &setup.material,
                cfg.tracks.repeats,
                || noise.sample(&mut rng),
            )?;
            let mut w = create(out.join("tracks.csv"))?;
            write_tracks(&mut w, &records)?;
            w.flush()?;
            println!("wrote {} synthetic tracks", records.len());
            return Ok(());
        }
    };
    let (cfg, _) = start(cfg, out)?;
    fs::write(out.join(format!("{name}.scan")), text)?;
    fs::write(out.join(format!("{name}.toml")), cfg.to_toml())?;
    println!("wrote {name}.scan and {name}.toml");
    Ok(())
}
