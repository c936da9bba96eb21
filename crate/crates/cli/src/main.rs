mod exit;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flowguard_core::artifact::{ModelArtifact, ModelKind};
use flowguard_core::explain::{explain_class, sample_background, ShapMethod, DEFAULT_BACKGROUND, DEFAULT_PERMUTATIONS};
use flowguard_core::flow_model::{read_dataset, write_dataset, AttackGroup, LabelPolicy, SchemaMode};
use flowguard_core::pipeline::{evaluate, train, TrainConfig};
use flowguard_core::sentinel::{read_events, replay, write_jsonl, MlHook, RuleConfig};
use flowguard_core::synth::{gen_events, gen_flows, GenerationManifest, ScenarioSpec, GENERATOR_VERSION};
use flowguard_core::Dataset;
use serde_json::json;

use exit::CliError;
use manifest::Run;

#[derive(Parser)]
#[command(name = "flowguard", version, about = "Flow-based intrusion detection and automated response")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Overrides every seed in the scenario spec or training config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled flow dataset and an event stream from a scenario spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split, preprocess, fit a model and write the artifact with its reports.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// rf, gbdt, mlp, ens_v1, ens_weighted_fe or ens_v2.
        #[arg(long)]
        model: String,
        /// JSON training config; omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Map unknown raw labels to OTHER instead of failing.
        #[arg(long)]
        fallback_other: bool,
    },
    /// Classification report of a model artifact on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fallback_other: bool,
    },
    /// Shapley attribution for one dataset row, in the model's feature space.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        row: usize,
        #[arg(long, value_enum, default_value = "sampled")]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
        permutations: usize,
        /// Class to explain; defaults to the predicted class.
        #[arg(long)]
        class: Option<AttackGroup>,
        #[arg(long, default_value_t = DEFAULT_BACKGROUND)]
        background: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay an event stream through the sentinel rules.
    Replay {
        #[arg(long)]
        events: PathBuf,
        /// Rule config JSON; omitted fields take defaults.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Optional model artifact consulted for every unsuppressed flow.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate { spec, out } => generate(cli, spec, out),
        Command::Train {
            data,
            model,
            config,
            out,
            fallback_other,
        } => train_cmd(cli, data, model, config.as_deref(), out, policy(*fallback_other)),
        Command::Eval {
            model,
            data,
            out,
            fallback_other,
        } => eval(cli, model, data, out, policy(*fallback_other)),
        Command::Explain {
            model,
            data,
            row,
            method,
            permutations,
            class,
            background,
            out,
        } => explain(cli, model, data, *row, *method, *permutations, *class, *background, out),
        Command::Replay {
            events,
            rules,
            model,
            threshold,
            out,
        } => replay_cmd(cli, events, rules.as_deref(), model.as_deref(), *threshold, out),
    }
}

fn policy(fallback_other: bool) -> LabelPolicy {
    if fallback_other {
        LabelPolicy::FallbackOther
    } else {
        LabelPolicy::Strict
    }
}

fn print(cli: &Cli, human: impl FnOnce() -> String, machine: serde_json::Value) {
    if cli.json {
        println!("{machine}");
    } else {
        println!("{}", human());
    }
}

fn to_json<S: serde::Serialize>(value: &S) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn load_data(run: &mut Run, path: &Path, policy: LabelPolicy) -> Result<Dataset, CliError> {
    let bytes = run.read_input(path)?;
    let (ds, report) = read_dataset(bytes.as_slice(), SchemaMode::Canonical, policy)?;
    if report.rows_dropped > 0 {
        eprintln!("warning: {} rows dropped while loading {}", report.rows_dropped, path.display());
    }
    Ok(ds)
}

fn load_artifact(run: &mut Run, path: &Path) -> Result<ModelArtifact<f64>, CliError> {
    let bytes = run.read_input(path)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::usage(format!("{} is not UTF-8", path.display())))?;
    ModelArtifact::from_json(&text).map_err(|e| match e {
        flowguard_core::Error::Json(j) => CliError::usage(format!("{}: not a model artifact: {j}", path.display())),
        e => e.into(),
    })
}

fn generate(cli: &Cli, spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start("generate", out)?;
    let text = String::from_utf8(run.read_input(spec_path)?)
        .map_err(|_| CliError::usage(format!("{} is not UTF-8", spec_path.display())))?;
    let mut spec = ScenarioSpec::from_json(&text)?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    run.seed(spec.seed);
    run.config(&spec);

    let rows = spec.total_rows();
    if rows > 0 {
        let ds = gen_flows(&spec)?;
        let mut csv = Vec::new();
        write_dataset(&ds, &mut csv)?;
        run.write_output("dataset.csv", &csv)?;
    }
    let events = gen_events(&spec)?;
    let mut lines = Vec::new();
    write_jsonl(&mut lines, &events)?;
    run.write_output("events.jsonl", &lines)?;
    let gm = GenerationManifest {
        generator_version: GENERATOR_VERSION.to_string(),
        spec: spec.clone(),
        seed: spec.seed,
        rows,
        events: events.len(),
    };
    run.write_output("generation.json", &to_json(&gm))?;
    run.finish()?;
    print(
        cli,
        || format!("generated {rows} flows and {} events in {}", events.len(), out.display()),
        json!({"rows": rows, "events": events.len(), "out": out}),
    );
    Ok(())
}

fn train_cmd(
    cli: &Cli,
    data: &Path,
    model: &str,
    config: Option<&Path>,
    out: &Path,
    policy: LabelPolicy,
) -> Result<(), CliError> {
    let kind: ModelKind = model.parse()?;
    let mut run = Run::start("train", out)?;
    let mut cfg = match config {
        Some(path) => {
            let bytes = run.read_input(path)?;
            serde_json::from_slice::<TrainConfig>(&bytes)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    run.seed(cfg.seed);
    run.config(&json!({"model_kind": kind, "train": cfg}));
    let ds = load_data(&mut run, data, policy)?;
    let outcome = train(&ds, kind, &cfg)?;

    let artifact = outcome.artifact.to_json()?;
    run.write_output("model.json", artifact.as_bytes())?;
    if let Some(plan) = &outcome.artifact.preprocess {
        run.write_output("plan.json", plan.to_json()?.as_bytes())?;
    }
    run.write_output("report.json", &to_json(&outcome.report))?;
    run.finish()?;
    let r = &outcome.report;
    print(
        cli,
        || {
            format!(
                "trained {} on {} rows ({} after SMOTE)\nvalidation macro-F1 {:.4}, test macro-F1 {:.4}\n\n{}",
                kind.name(),
                r.n_train,
                r.n_train_resampled,
                r.validation.macro_avg.f1,
                r.test.macro_avg.f1,
                r.test.to_text()
            )
        },
        json!({
            "model_kind": kind,
            "validation_macro_f1": r.validation.macro_avg.f1,
            "test_macro_f1": r.test.macro_avg.f1,
            "weights": r.weights,
            "out": out,
        }),
    );
    Ok(())
}

fn eval(cli: &Cli, model: &Path, data: &Path, out: &Path, policy: LabelPolicy) -> Result<(), CliError> {
    let mut run = Run::start("eval", out)?;
    let artifact = load_artifact(&mut run, model)?;
    let ds = load_data(&mut run, data, policy)?;
    let report = evaluate(&artifact, &ds)?;
    let text = report.to_text();
    run.write_output("report.txt", text.as_bytes())?;
    run.write_output("report.json", &to_json(&report))?;
    run.finish()?;
    print(cli, || text.clone(), serde_json::to_value(&report).expect("serializable"));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn explain(
    cli: &Cli,
    model: &Path,
    data: &Path,
    row: usize,
    method: Method,
    permutations: usize,
    class: Option<AttackGroup>,
    background: usize,
    out: &Path,
) -> Result<(), CliError> {
    let mut run = Run::start("explain", out)?;
    let seed = cli.seed.unwrap_or(0);
    run.seed(seed);
    let artifact = load_artifact(&mut run, model)?;
    let ds = load_data(&mut run, data, LabelPolicy::FallbackOther)?;
    if row >= ds.len() {
        return Err(CliError::usage(format!("row {row} is out of range (dataset has {} rows)", ds.len())));
    }
    let (space, names) = match &artifact.preprocess {
        Some(plan) => (plan.transform(&ds)?, plan.feature_names.clone()),
        None => (ds.clone(), ds.schema.clone()),
    };
    let method = match method {
        Method::Exact => ShapMethod::Exact,
        Method::Sampled => ShapMethod::Sampled,
    };
    run.config(&json!({
        "row": row, "method": method, "permutations": permutations,
        "class": class, "background": background,
    }));
    let bg = sample_background(&space, background, seed)?;
    let e = explain_class(
        &artifact.parameters,
        space.row(row),
        &bg,
        class.map(AttackGroup::code),
        method,
        permutations,
        seed,
    )?;
    let report = e.to_report(&names);
    run.write_output("explanation.json", &to_json(&report))?;
    run.finish()?;
    print(
        cli,
        || {
            let mut order: Vec<usize> = (0..names.len()).collect();
            order.sort_by(|&a, &b| e.phi[b].abs().total_cmp(&e.phi[a].abs()));
            let mut s = format!(
                "class {} at row {row}: f(x) = {:.4}, baseline = {:.4}\n",
                e.class_explained.map_or("?", AttackGroup::name),
                e.fx,
                e.baseline
            );
            for &j in order.iter().take(10) {
                s.push_str(&format!("{:>16} {:+.4} (± {:.4})\n", names[j], e.phi[j], e.stderr[j]));
            }
            s
        },
        report.clone(),
    );
    Ok(())
}

fn replay_cmd(
    cli: &Cli,
    events_path: &Path,
    rules: Option<&Path>,
    model: Option<&Path>,
    threshold: f64,
    out: &Path,
) -> Result<(), CliError> {
    let mut run = Run::start("replay", out)?;
    let cfg = match rules {
        Some(path) => {
            let bytes = run.read_input(path)?;
            let text = String::from_utf8(bytes).map_err(|_| CliError::usage("rules file is not UTF-8"))?;
            RuleConfig::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => RuleConfig::default(),
    };
    run.config(&json!({"rules": cfg, "threshold": threshold, "model": model}));
    let artifact = model.map(|p| load_artifact(&mut run, p)).transpose()?;
    let bytes = run.read_input(events_path)?;
    let events = read_events(bytes.as_slice())?;
    let hook = artifact.as_ref().map(|a| MlHook {
        model: a,
        threshold,
    });
    let output = replay(&events, &cfg, hook)?;

    let mut alerts = Vec::new();
    write_jsonl(&mut alerts, &output.alerts)?;
    run.write_output("alerts.jsonl", &alerts)?;
    let mut bans = Vec::new();
    write_jsonl(&mut bans, &output.bans)?;
    run.write_output("bans.jsonl", &bans)?;
    run.write_output("summary.json", &to_json(&output.summary))?;
    run.write_output("rules.json", cfg.to_json()?.as_bytes())?;
    run.finish()?;
    let s = &output.summary;
    print(
        cli,
        || {
            let mut text = format!(
                "{} events ({} suppressed): {} alerts, {} bans",
                s.events, s.suppressed, s.alerts, s.bans
            );
            for (rule, n) in &s.alerts_by_rule {
                text.push_str(&format!("\n  {rule}: {n}"));
            }
            text
        },
        serde_json::to_value(s).expect("serializable"),
    );
    Ok(())
}
