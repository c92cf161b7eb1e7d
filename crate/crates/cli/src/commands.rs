use std::path::{Path, PathBuf};

use clap::Parser;
use frictionid::control::{overlay_svg, ControllerGains};
use frictionid::metrics::{fit_grid_csv, fit_table_csv, FitReport, STATE_LABELS};
use frictionid::models::{evaluate_model, LinearModel, MotorModel};
use frictionid::motor_sim::{sidecar_path, Dataset, LuGreParams, Provenance};
use frictionid::pipeline::{
    compare_compensators, evaluate_grid, fit_sindyc, identify_lugre, simulate_signals, with_extracted_state,
    ReferenceSpec, RunConfig, SIGNAL_IDS,
};
use frictionid::plot::Plot;
use frictionid::signals::fmt_sig;
use frictionid::sindyc::SindycModel;
use frictionid::tde::extract_internal_state;
use frictionid::{Error, Result};

use crate::{Command, CompensatorChoice, FitMode, ReferenceChoice};

const MODEL_FILES: [(&str, &str); 3] = [("lugre", "lugre.toml"), ("sindyc", "sindyc.txt"), ("linear", "linear.txt")];
const SCRATCH: &str = ".verify";

pub fn run(config: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>, cmd: &Command) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    execute(cfg, cmd)
}

/// Files produced by one command; written together once everything has been
/// computed.
struct Outputs {
    /// words that re-run the command given the stored configuration
    replay: Vec<String>,
    tag: String,
    files: Vec<(String, String, Provenance)>,
}

impl Outputs {
    fn new(replay: &[&str], tag: &str) -> Self {
        Self {
            replay: replay.iter().map(|s| s.to_string()).collect(),
            tag: tag.into(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, rel: impl Into<String>, content: String) {
        self.files.push((rel.into(), content, Provenance::new()));
    }

    fn add_with(&mut self, rel: impl Into<String>, content: String, prov: Provenance) {
        self.files.push((rel.into(), content, prov));
    }

    fn commit(self, cfg: &RunConfig) -> Result<()> {
        let config_rel = format!("configs/{}.toml", self.tag);
        write(&cfg.out.join(&config_rel), &cfg.to_toml())?;
        for (rel, content, mut prov) in self.files {
            prov.set("command", self.replay.join(" "));
            prov.set("config", &config_rel);
            prov.set("seed", cfg.seed);
            let path = cfg.out.join(&rel);
            write(&path, &content)?;
            write(&sidecar_path(&path), &prov.to_text())?;
        }
        Ok(())
    }
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn missing(path: &Path, hint: &str) -> Error {
    Error::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} not found; {hint}", path.display()),
    ))
}

fn load_signal(cfg: &RunConfig, id: &str) -> Result<Dataset> {
    cfg.signals.get(id)?;
    let path = cfg.out.join("data").join(format!("{id}.csv"));
    if !path.exists() {
        return Err(missing(&path, "run `frictionid simulate` first"));
    }
    Dataset::load(&path)
}

fn parse_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|w| !w.is_empty()).map(String::from).collect()
}

fn execute(mut cfg: RunConfig, cmd: &Command) -> Result<()> {
    match cmd {
        Command::Simulate { signal } => {
            cfg.validate()?;
            let ids: Vec<String> = if signal == "all" { SIGNAL_IDS.map(String::from).to_vec() } else { vec![signal.clone()] };
            let mut outs = Outputs::new(&["simulate", "--signal", signal], &format!("simulate-{signal}"));
            let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            for (id, (ds, _)) in ids.iter().zip(simulate_signals(&cfg, &id_refs)?) {
                let t: Vec<f64> = ds.u.times().collect();
                let svg = Plot::new(&format!("Signal ({id})"), "t [s]", "u [V], velocity [rad/s]")
                    .line("u", &t, &ds.u.values)
                    .line("velocity", &t, &ds.xdot.values)
                    .to_svg();
                println!("signal {id}: {} samples, max |u| {:.3} V, max |v| {:.3} rad/s", ds.len(), ds.u.max_abs(), ds.xdot.max_abs());
                outs.add(format!("plots/signal_{id}.svg"), svg);
                outs.add_with(format!("data/{id}.csv"), ds.to_csv(), ds.provenance.clone());
            }
            outs.commit(&cfg)
        }
        Command::Extract { signal, dataset, m, threshold } => {
            if let Some(m) = m {
                cfg.tde.m = *m;
            }
            if let Some(t) = threshold {
                cfg.tde.threshold = *t;
            }
            cfg.validate()?;
            let (ds, name, replay) = match dataset {
                Some(p) => {
                    if !p.exists() {
                        return Err(missing(p, "pass an existing dataset CSV"));
                    }
                    let abs = std::fs::canonicalize(p)?;
                    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
                    let replay = vec!["extract".to_string(), "--dataset".into(), abs.display().to_string()];
                    (Dataset::load(p)?, stem, replay)
                }
                None => (load_signal(&cfg, signal)?, signal.clone(), vec!["extract".into(), "--signal".into(), signal.clone()]),
            };
            let ex = extract_internal_state(&ds.xdot, cfg.tde.m, cfg.tde.threshold)?;
            println!(
                "{name}: selected {} of {} (E <= {}), reconstruction scale {}",
                ex.describe_range(),
                ex.m,
                fmt_sig(cfg.tde.threshold),
                fmt_sig(ex.scale)
            );
            if ex.scale <= 1e-9 * ds.xdot.max_abs() {
                eprintln!("warning: low-energy reconstruction is numerically zero; the signal has no hidden-state content at this embedding");
            }
            let words: Vec<&str> = replay.iter().map(String::as_str).collect();
            let mut outs = Outputs::new(&words, &format!("extract-{name}"));
            let mut prov = Provenance::new();
            prov.set("tde.m", ex.m);
            prov.set("tde.threshold", fmt_sig(ex.threshold));
            prov.set("tde.selection", ex.describe_range());
            prov.set("tde.scale", fmt_sig(ex.scale));
            outs.add_with(format!("extract/{name}_zhat.csv"), ex.z_hat_csv(), prov.clone());
            outs.add_with(format!("extract/{name}_spectrum.csv"), ex.spectrum_csv(), prov);
            outs.add(format!("plots/{name}_spectrum.svg"), ex.spectrum_svg());
            outs.commit(&cfg)
        }
        Command::Fit { mode, min_fit_drop, a, lasso_alpha } => {
            if let Some(v) = min_fit_drop {
                cfg.sindyc.min_fit_drop = *v;
            }
            if let Some(v) = a {
                cfg.sindyc.a = *v;
            }
            if lasso_alpha.is_some() {
                cfg.sindyc.lasso_alpha = *lasso_alpha;
            }
            cfg.validate()?;
            fit(&cfg, *mode)
        }
        Command::Evaluate { models, signals } => {
            cfg.validate()?;
            evaluate(&cfg, models.as_deref(), signals)
        }
        Command::Compensate { compensator, lambda, gains, reference } => {
            if let Some(l) = lambda {
                cfg.control.lambda = *l;
            }
            if let Some(g) = gains {
                let parts: Vec<f64> = parse_list(g)
                    .iter()
                    .map(|p| p.parse::<f64>().map_err(|e| Error::Validation(format!("--gains `{p}`: {e}"))))
                    .collect::<Result<_>>()?;
                let [kp, ki] = parts[..] else {
                    return Err(Error::Validation(format!("--gains expects `kp,ki`, got `{g}`")));
                };
                cfg.control.gains = ControllerGains { kp, ki, ..cfg.control.gains };
            }
            match reference {
                ReferenceChoice::Config => {}
                ReferenceChoice::Sine => cfg.control.reference = ReferenceSpec::Sine { amplitude: 10.0, frequency: 0.5 },
                ReferenceChoice::Step => cfg.control.reference = ReferenceSpec::Step { level: 10.0, t_step: 0.5 },
            }
            cfg.validate()?;
            compensate(&cfg, *compensator)
        }
        Command::Verify => verify(&cfg),
    }
}

fn report_csv(r: &FitReport) -> String {
    fit_grid_csv(std::slice::from_ref(r))
}

fn describe_report(r: &FitReport) -> String {
    let cells: Vec<String> = (0..4)
        .filter_map(|j| r.fit[j].map(|f| format!("{} {:.2}", STATE_LABELS[j], f)))
        .collect();
    format!("{} on ({}): {}", r.model, r.dataset, cells.join(", "))
}

fn fit(cfg: &RunConfig, mode: FitMode) -> Result<()> {
    match mode {
        FitMode::Linear => {
            let train = load_signal(cfg, "a")?;
            let val = load_signal(cfg, "b")?;
            let model = LinearModel::fit(&train)?;
            let report = evaluate_model(&MotorModel::Linear(model), &val, "b")?;
            println!("{}", describe_report(&report));
            let mut outs = Outputs::new(&["fit", "--mode", "linear"], "fit-linear");
            outs.add("models/linear.txt", model.to_text());
            outs.add("reports/fit_linear.csv", report_csv(&report));
            outs.commit(cfg)
        }
        FitMode::Sindyc => {
            let (train, ex) = with_extracted_state(cfg, &load_signal(cfg, "a")?)?;
            let (val, _) = with_extracted_state(cfg, &load_signal(cfg, "b")?)?;
            let fitted = fit_sindyc(cfg, &train, &val, ex.scale)?;
            let model = MotorModel::Sindyc(fitted.model.clone());
            let report = evaluate_model(&model, &val, "b")?;
            println!(
                "sindyc: {} active coefficients, {} removals accepted, extraction {}",
                fitted.model.xi.active_count(),
                fitted.model.training.accepted_removals,
                ex.describe_range()
            );
            println!("{}", describe_report(&report));
            let history: String = fitted.history.iter().map(|s| s.describe() + "\n").collect();
            let mut outs = Outputs::new(&["fit", "--mode", "sindyc"], "fit-sindyc");
            outs.add("models/sindyc.txt", fitted.model.to_text());
            outs.add("reports/sindyc_thresholding.txt", history);
            outs.add("reports/fit_sindyc.csv", report_csv(&report));
            outs.commit(cfg)
        }
        FitMode::Lugre => {
            let id = identify_lugre(cfg, None)?;
            if let Some(w) = &id.init_warning {
                eprintln!("warning: ramp initialisation failed ({w}); refinement started from the configured fallback");
            }
            let p = id.params;
            println!(
                "lugre: alpha0 {} alpha1 {} alpha2 {} v_s {} sigma0 {} sigma1 {}",
                fmt_sig(p.alpha0),
                fmt_sig(p.alpha1),
                fmt_sig(p.alpha2),
                fmt_sig(p.v_s),
                fmt_sig(p.sigma0),
                fmt_sig(p.sigma1)
            );
            println!("static fit: {}", id.static_fit.describe());
            println!("dynamic fit: {}", id.dynamic.result.describe());
            let val = load_signal(cfg, "b")?;
            let report = evaluate_model(&MotorModel::LuGre { motor: cfg.plant.motor, params: p }, &val, "b")?;
            println!("{}", describe_report(&report));
            let mut outs = Outputs::new(&["fit", "--mode", "lugre"], "fit-lugre");
            outs.add("models/lugre.toml", id.to_toml());
            outs.add("reports/lugre_sweep.csv", id.sweep_csv());
            outs.add("reports/lugre_static_trace.csv", id.static_fit.trace_csv());
            outs.add("reports/lugre_dynamic_trace.csv", id.dynamic.result.trace_csv());
            outs.add("reports/fit_lugre.csv", report_csv(&report));
            outs.commit(cfg)
        }
    }
}

fn load_model(cfg: &RunConfig, name: &str) -> Result<Option<MotorModel>> {
    let file = MODEL_FILES.iter().find(|(n, _)| *n == name).map(|(_, f)| *f).ok_or_else(|| {
        Error::Validation(format!("unknown model `{name}`, expected lugre, sindyc or linear"))
    })?;
    let path = cfg.out.join("models").join(file);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    Ok(Some(match name {
        "lugre" => MotorModel::LuGre {
            motor: cfg.plant.motor,
            params: parse_lugre(&text)?,
        },
        "sindyc" => MotorModel::Sindyc(SindycModel::from_text(&text)?),
        _ => MotorModel::Linear(LinearModel::from_text(&text)?),
    }))
}

fn parse_lugre(text: &str) -> Result<LuGreParams> {
    let p: LuGreParams = toml::from_str(text).map_err(|e| Error::Parse(format!("lugre model: {}", e.message())))?;
    p.validate()?;
    Ok(p)
}

fn evaluate(cfg: &RunConfig, models: Option<&str>, signals: &str) -> Result<()> {
    let names: Vec<String> = match models {
        Some(list) => parse_list(list),
        None => MODEL_FILES.iter().map(|(n, _)| n.to_string()).collect(),
    };
    if names.is_empty() {
        return Err(Error::Validation("empty model list".into()));
    }
    let mut loaded = Vec::new();
    for n in &names {
        match load_model(cfg, n)? {
            Some(m) => loaded.push(m),
            None if models.is_some() => {
                return Err(missing(&cfg.out.join("models").join(n), "run `frictionid fit` for it first"));
            }
            None => {}
        }
    }
    if loaded.is_empty() {
        return Err(missing(&cfg.out.join("models"), "no fitted models; run `frictionid fit` first"));
    }
    let ids = parse_list(signals);
    if ids.is_empty() {
        return Err(Error::Validation("empty signal list".into()));
    }
    let mut datasets = Vec::new();
    for id in &ids {
        // the sparse model needs the extracted deformation; every model sees the same samples
        let (ds, _) = with_extracted_state(cfg, &load_signal(cfg, id)?)?;
        datasets.push((id.clone(), ds));
    }
    let cells = evaluate_grid(&loaded, &datasets)?;
    let reports: Vec<FitReport> = cells.iter().map(|c| c.report.clone()).collect();
    for r in &reports {
        println!("{}", describe_report(r));
    }
    let model_arg = loaded.iter().map(|m| m.name()).collect::<Vec<_>>().join(",");
    let signal_arg = ids.join(",");
    let mut outs = Outputs::new(&["evaluate", "--models", &model_arg, "--signals", &signal_arg], "evaluate");
    outs.add("reports/fit_table.csv", fit_table_csv(&reports));
    outs.add("reports/fit_grid.csv", fit_grid_csv(&reports));
    for (id, ds) in &datasets {
        let t: Vec<f64> = ds.xdot.times().collect();
        let mut plot = Plot::new(&format!("Velocity, signal ({id})"), "t [s]", "velocity [rad/s]").line("measured", &t, &ds.xdot.values);
        for c in cells.iter().filter(|c| &c.report.dataset == id) {
            if let Some(v) = &c.velocity {
                plot = plot.line(&format!("{} ({:.2})", c.report.model, c.report.fit_v()), &t, v);
            }
        }
        outs.add(format!("plots/velocity_{id}.svg"), plot.to_svg());
    }
    outs.commit(cfg)
}

fn compensate(cfg: &RunConfig, choice: CompensatorChoice) -> Result<()> {
    let want = |c: CompensatorChoice| choice == c || choice == CompensatorChoice::All;
    let lugre = if want(CompensatorChoice::Lugre) {
        match load_model(cfg, "lugre")? {
            Some(MotorModel::LuGre { params, .. }) => Some(params),
            _ => return Err(missing(&cfg.out.join("models/lugre.toml"), "run `frictionid fit --mode lugre` first")),
        }
    } else {
        None
    };
    let learned = if want(CompensatorChoice::Sindyc) {
        match load_model(cfg, "sindyc")? {
            Some(MotorModel::Sindyc(m)) => Some(m),
            _ => return Err(missing(&cfg.out.join("models/sindyc.txt"), "run `frictionid fit --mode sindyc` first")),
        }
    } else {
        None
    };
    let runs = compare_compensators(cfg, lugre, learned.as_ref())?;
    let choice_arg = match choice {
        CompensatorChoice::None => "none",
        CompensatorChoice::Lugre => "lugre",
        CompensatorChoice::Sindyc => "sindyc",
        CompensatorChoice::All => "all",
    };
    let mut outs = Outputs::new(&["compensate", "--compensator", choice_arg], &format!("compensate-{choice_arg}"));
    let mut summary = String::from("compensator,rms_error,max_abs_error,faults,rise_time,max_shortfall\n");
    let mut line = Vec::new();
    for (name, r) in &runs {
        let step = r.step_metrics();
        summary.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            fmt_sig(r.rms_error),
            fmt_sig(r.max_abs_error),
            r.faults,
            step.rise_time.map_or(String::new(), fmt_sig),
            fmt_sig(step.max_shortfall)
        ));
        line.push(format!("{name} {:.4}", r.rms_error));
        outs.add(format!("control/{name}.csv"), r.to_csv());
    }
    println!("rms tracking error [rad/s]: {}", line.join(", "));
    let refs: Vec<(&str, &_)> = runs.iter().map(|(n, r)| (n.as_str(), r)).collect();
    outs.add("control/summary.csv", summary);
    outs.add("plots/tracking.svg", overlay_svg("Velocity tracking", &refs));
    outs.commit(cfg)
}

#[derive(Debug, Parser)]
#[command(no_binary_name = true)]
struct Replay {
    #[command(subcommand)]
    command: Command,
}

const VERB_ORDER: [&str; 5] = ["simulate", "extract", "fit", "evaluate", "compensate"];

fn collect_sidecars(dir: &Path, root: &Path, acc: &mut Vec<(PathBuf, Provenance)>) -> Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            if path.file_name().and_then(|n| n.to_str()) != Some(SCRATCH) {
                collect_sidecars(&path, root, acc)?;
            }
        } else if let Some(artifact) = path.to_str().and_then(|s| s.strip_suffix(".provenance")) {
            let prov = Provenance::parse(&std::fs::read_to_string(&path)?)?;
            if prov.get("command").is_some() {
                let rel = Path::new(artifact).strip_prefix(root).map_err(|e| Error::Validation(e.to_string()))?;
                acc.push((rel.to_path_buf(), prov));
            }
        }
    }
    Ok(())
}

fn verify(cfg: &RunConfig) -> Result<()> {
    let root = &cfg.out;
    if !root.is_dir() {
        return Err(missing(root, "nothing to verify"));
    }
    let mut artifacts = Vec::new();
    collect_sidecars(root, root, &mut artifacts)?;
    artifacts.sort_by(|a, b| a.0.cmp(&b.0));
    if artifacts.is_empty() {
        return Err(missing(root, "no outputs with provenance sidecars"));
    }
    let mut commands: Vec<(String, String)> = Vec::new();
    for (_, prov) in &artifacts {
        let key = (prov.get("command").unwrap_or_default().to_string(), prov.get("config").unwrap_or_default().to_string());
        if !commands.contains(&key) {
            commands.push(key);
        }
    }
    let rank = |c: &str| VERB_ORDER.iter().position(|v| c.starts_with(v)).unwrap_or(VERB_ORDER.len());
    commands.sort_by_key(|(c, _)| rank(c));

    let scratch = root.join(SCRATCH);
    if scratch.exists() {
        std::fs::remove_dir_all(&scratch)?;
    }
    let result = (|| -> Result<usize> {
        for (command, config) in &commands {
            let mut replay_cfg = RunConfig::load(&root.join(config))?;
            replay_cfg.out = scratch.clone();
            let replay = Replay::try_parse_from(command.split_whitespace())
                .map_err(|e| Error::Parse(format!("recorded command `{command}`: {e}")))?;
            println!("replaying `{command}`");
            execute(replay_cfg, &replay.command)?;
        }
        let mut differing = 0;
        for (rel, _) in &artifacts {
            let original = std::fs::read(root.join(rel))?;
            let same = std::fs::read(scratch.join(rel)).map(|r| r == original).unwrap_or(false);
            if !same {
                differing += 1;
            }
            println!("{} {}", if same { "ok  " } else { "DIFF" }, rel.display());
        }
        Ok(differing)
    })();
    let _ = std::fs::remove_dir_all(&scratch);
    let differing = result?;
    if differing > 0 {
        return Err(Error::Numerical(format!("{differing} of {} outputs differ on recomputation", artifacts.len())));
    }
    println!("all {} outputs reproduced", artifacts.len());
    Ok(())
}
