use std::path::Path;

use serde::Serialize;
use tissuebench_core::harness::{
    evaluate_vision, run_scenario, write_telemetry_csv, ExperimentConfig, RunSummary, TissueSpec,
};
use tissuebench_core::plant::{preset, Preset, TissueModel};
use tissuebench_core::vision::{
    build_dataset, fit_area_regressor, midpoint_records, AreaRegressor, Dataset, DatasetConfig, DatasetRecord,
    PrototypeClassifier,
};
use tissuebench_teleop::ServeConfig;

use crate::args::{
    Cli, Command, CompareArgs, DatasetBuildArgs, DatasetCommand, ProbeArgs, RegressorCommand, RegressorEvalArgs,
    RegressorTrainArgs, RunOptions, ServeArgs, VisionCommand, VisionEvalArgs,
};
use crate::error::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Probe(a) => probe(a),
        Command::Compare(a) => compare(a),
        Command::Dataset(DatasetCommand::Build(a)) => dataset_build(a),
        Command::Regressor(RegressorCommand::Train(a)) => regressor_train(a),
        Command::Regressor(RegressorCommand::Eval(a)) => regressor_eval(a),
        Command::Vision(VisionCommand::Eval(a)) => vision_eval(a),
        Command::Serve(a) => serve(a),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

/// A preset name, or a JSON file with either a contact law or a full preset
/// to calibrate.
fn tissue_spec(arg: &str) -> Result<TissueSpec, CliError> {
    if preset(arg).is_some() {
        return Ok(TissueSpec::Preset(arg.to_string()));
    }
    let path = Path::new(arg);
    if !path.is_file() {
        return Err(CliError::Validation(format!("`{arg}` is neither a tissue preset nor a file")));
    }
    let text = read_input(path)?;
    if let Ok(model) = serde_json::from_str::<TissueModel>(&text) {
        return Ok(TissueSpec::Inline(model));
    }
    match serde_json::from_str::<Preset>(&text) {
        Ok(p) => Ok(TissueSpec::Inline(p.tissue()?)),
        Err(e) => Err(CliError::Validation(format!(
            "{}: expected a contact law or a preset: {e}",
            path.display()
        ))),
    }
}

fn experiment(opts: &RunOptions, tissue: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(p) => ExperimentConfig::from_json(&read_input(p)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(t) = tissue {
        cfg.tissue = tissue_spec(t)?;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(c) = opts.channel {
        cfg.summary_channel = c.into();
    }
    if opts.no_vision {
        cfg.vision.enabled = false;
    }
    Ok(cfg)
}

fn probe(a: ProbeArgs) -> Result<(), CliError> {
    let cfg = experiment(&a.run, a.tissue.as_deref())?;
    let out = run_scenario(&cfg)?;
    write_telemetry_csv(&out.telemetry, &a.out)?;
    print_json(&out.summary);
    Ok(())
}

#[derive(Serialize)]
struct Comparison<'a> {
    a: &'a str,
    b: &'a str,
    summary_a: RunSummary,
    summary_b: RunSummary,
    force_delta_ratio: f64,
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let sa = run_scenario(&experiment(&a.run, Some(&a.a))?)?.summary;
    let sb = run_scenario(&experiment(&a.run, Some(&a.b))?)?.summary;
    let ratio = sb.force_delta_rest_to_probe / sa.force_delta_rest_to_probe;
    if a.json {
        print_json(&Comparison {
            a: &a.a,
            b: &a.b,
            summary_a: sa,
            summary_b: sb,
            force_delta_ratio: ratio,
        });
        return Ok(());
    }
    let rows = [
        ("rest force (N)", sa.rest_force, sb.rest_force),
        ("avg contact force (N)", sa.avg_contact_force, sb.avg_contact_force),
        ("force delta (N)", sa.force_delta_rest_to_probe, sb.force_delta_rest_to_probe),
        ("max force (N)", sa.max_force, sb.max_force),
        ("dwell drift (N)", sa.dwell_force_drift, sb.dwell_force_drift),
        ("first contact (s)", sa.first_contact_s, sb.first_contact_s),
        ("target reached (s)", sa.target_reached_s, sb.target_reached_s),
        ("probe duration (s)", sa.probe_duration, sb.probe_duration),
    ];
    println!("{:<24}{:>12}{:>12}{:>10}", "", a.a, a.b, "b/a");
    for (name, x, y) in rows {
        println!("{name:<24}{x:>12.3}{y:>12.3}{:>10.3}", y / x);
    }
    Ok(())
}

fn dataset_build(a: DatasetBuildArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str(&read_input(p)?).map_err(|e| CliError::Validation(e.to_string()))?,
        None => DatasetConfig::default(),
    };
    cfg.n_base = a.n;
    cfg.seed = a.seed;
    if let Some(aug) = cfg.augmentation.as_mut() {
        aug.seed = a.seed;
    }
    if let Some(f) = &a.format {
        cfg.format = f.parse()?;
    }
    let ds = build_dataset(&cfg, Some(&a.out))?;
    let [train, val, test] = ds.meta.split_sizes;
    println!(
        "{} base frames, {} augmented ({} dropped); split {train}/{val}/{test}; written to {}",
        ds.records.len(),
        ds.meta.augmented_count,
        ds.meta.dropped_variants,
        a.out.display()
    );
    Ok(())
}

fn fit(ds: &Dataset, degree: usize) -> Result<AreaRegressor, CliError> {
    let mut reg = fit_area_regressor(&ds.training_samples(), ds.meta.scale.a0, degree)?;
    let (val, test) = (ds.validation_samples(), ds.test_samples());
    reg.meta.val_n = val.len();
    reg.meta.test_n = test.len();
    reg.meta.val_rmse = (!val.is_empty()).then(|| reg.rmse(&val));
    reg.meta.test_rmse = (!test.is_empty()).then(|| reg.rmse(&test));
    Ok(reg)
}

fn regressor_train(a: RegressorTrainArgs) -> Result<(), CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let reg = fit(&ds, a.degree)?;
    reg.save(&a.out)?;
    print_json(&reg.meta);
    Ok(())
}

#[derive(Serialize)]
struct RegressorScore {
    test_n: usize,
    test_rmse: f64,
    val_n: usize,
    val_rmse: Option<f64>,
}

fn regressor_eval(a: RegressorEvalArgs) -> Result<(), CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let reg = AreaRegressor::load(&a.model)?;
    let (val, test) = (ds.validation_samples(), ds.test_samples());
    if test.is_empty() {
        return Err(CliError::Runtime("dataset has an empty test split".into()));
    }
    print_json(&RegressorScore {
        test_n: test.len(),
        test_rmse: reg.rmse(&test),
        val_n: val.len(),
        val_rmse: (!val.is_empty()).then(|| reg.rmse(&val)),
    });
    Ok(())
}

fn vision_eval(a: VisionEvalArgs) -> Result<(), CliError> {
    let ds = Dataset::load(&a.dataset)?;
    let reg = match &a.model {
        Some(p) => AreaRegressor::load(p)?,
        None => fit(&ds, 1)?,
    };
    let records: Vec<DatasetRecord> = match a.midpoints {
        Some(n) => midpoint_records(n, &ds.meta.config)?,
        None => ds.test_records().into_iter().cloned().collect(),
    };
    let report = evaluate_vision(&records, &ds.meta.scale, &PrototypeClassifier::range_midpoints(), &reg)?;
    print_json(&report);
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => ServeConfig::from_json(&read_input(p)?)?,
        None => ServeConfig::default(),
    };
    if let Some(addr) = a.addr {
        cfg.addr = addr;
    }
    if let Some(t) = &a.tissue {
        cfg.experiment.tissue = tissue_spec(t)?;
    }
    if let Some(s) = a.time_scale {
        cfg.time_scale = s;
    }
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    rt.block_on(tissuebench_teleop::serve(cfg, async {
        let _ = tokio::signal::ctrl_c().await;
    }))?;
    Ok(())
}
