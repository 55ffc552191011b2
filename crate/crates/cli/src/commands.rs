use std::path::{Path, PathBuf};

use disagree_core::gold::load_gold;
use disagree_core::ingest::{save_dataset, Dataset};
use disagree_core::metrics::{report_table_with, TableFormat};
use disagree_core::synth::{generate, perturbed_run, SynthConfig};
use disagree_core::{
    adjust_run, baseline, harden, load_dataset, load_run, mean_ensemble, save_run, select_best_run, AnnotatorCounts,
    BaselineKind, EvalMode, EvalReport, GoldStandard, HardeningRule, Metric, MetricConfig, Run, RunKind, Snapper,
    TaskId,
};
use indexmap::IndexMap;

use crate::args::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate(a) => validate(a),
        Command::Gold(a) => gold(a),
        Command::Baseline(a) => baseline_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Perturb(a) => perturb(a),
        Command::Adjust(a) => adjust(a),
        Command::Ensemble(a) => ensemble(a),
        Command::Select(a) => select(a),
        Command::Harden(a) => harden_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn rule(threshold: f64) -> Result<HardeningRule> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CliError::Usage(format!("--threshold must be in (0, 1], got {threshold}")));
    }
    Ok(HardeningRule::new(threshold))
}

fn metric_config(threshold: f64) -> Result<MetricConfig> {
    Ok(MetricConfig {
        hardening: rule(threshold)?,
        ..MetricConfig::default()
    })
}

fn mode_of(m: ModeArg) -> EvalMode {
    match m {
        ModeArg::SoftSoft => EvalMode::SoftSoft,
        ModeArg::HardHard => EvalMode::HardHard,
        ModeArg::HardSoft => EvalMode::HardSoft,
    }
}

fn kind_of(k: KindArg) -> RunKind {
    match k {
        KindArg::Soft => RunKind::Soft,
        KindArg::Hard => RunKind::Hard,
    }
}

fn parse_metric(s: &str) -> Result<Metric> {
    s.parse::<Metric>().map_err(CliError::Usage)
}

fn load_runs(paths: &[PathBuf], task: TaskId) -> Result<Vec<Run>> {
    paths.iter().map(|p| Ok(load_run(p, task)?)).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn join_f64(xs: &[f64]) -> String {
    xs.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",")
}

fn annotator_counts(dataset: Option<&Dataset>, annotators: Option<u32>) -> AnnotatorCounts<'_> {
    match dataset {
        Some(ds) => AnnotatorCounts::PerItem {
            dataset: ds,
            fallback: annotators,
        },
        None => AnnotatorCounts::Global(annotators.unwrap_or(disagree_core::adjust::DEFAULT_ANNOTATORS)),
    }
}

fn validate(a: ValidateArgs) -> Result<()> {
    if let Some(path) = a.dataset {
        let ds = load_dataset(&path)?;
        let annotated = ds.items.iter().filter(|i| i.annotations.is_some()).count();
        println!("ok: {} items ({annotated} annotated)", ds.items.len());
    } else if let (Some(path), Some(task)) = (a.run, a.task) {
        let r = load_run(&path, task.into())?;
        println!("ok: run {} ({}, {}, {} items)", r.name, r.task, r.kind().as_str(), r.len());
    }
    Ok(())
}

fn gold(a: GoldArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset)?;
    let g = GoldStandard::from_dataset(&ds, a.task.into(), &rule(a.threshold)?);
    if g.is_empty() {
        return Err(disagree_core::GoldError::EmptyGold.into());
    }
    let run = match a.kind {
        KindArg::Soft => g.soft_run("gold"),
        KindArg::Hard => g.hard_run("gold"),
    };
    save_run(&run, &a.out)?;
    let warnings = a.warnings.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".warnings.json");
        p.into()
    });
    write_text(&warnings, &g.warnings_json())?;
    eprintln!(
        "wrote {} gold items to {} ({} excluded, see {})",
        g.len(),
        a.out.display(),
        g.warnings.len(),
        warnings.display()
    );
    Ok(())
}

fn baseline_cmd(a: BaselineArgs) -> Result<()> {
    let g = load_gold(&a.gold, a.task.into(), &rule(a.threshold)?)?;
    let which = match a.which {
        BaselineArg::Gold => BaselineKind::Gold,
        BaselineArg::Majority => BaselineKind::Majority,
        BaselineArg::Minority => BaselineKind::Minority,
    };
    let run = baseline(&g, which, kind_of(a.kind))?;
    save_run(&run, &a.out)?;
    eprintln!("wrote {} ({} items) to {}", run.name, run.len(), a.out.display());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    if a.items == 0 || a.annotators == 0 {
        return Err(CliError::Usage("--items and --annotators must be positive".into()));
    }
    for (name, v) in [("agreement", a.agreement), ("lang-mix", a.lang_mix), ("unknown-rate", a.unknown_rate)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Usage(format!("--{name} must be in [0, 1], got {v}")));
        }
    }
    let ds = generate(&SynthConfig {
        items: a.items,
        annotators: a.annotators,
        agreement: a.agreement,
        lang_mix: a.lang_mix,
        unknown_rate: a.unknown_rate,
        seed: a.seed,
        ..SynthConfig::default()
    });
    save_dataset(&ds, &a.out)?;
    eprintln!("wrote {} items to {}", ds.items.len(), a.out.display());
    Ok(())
}

fn perturb(a: PerturbArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.noise) {
        return Err(CliError::Usage(format!("--noise must be in [0, 1], got {}", a.noise)));
    }
    let g = load_gold(&a.gold, a.task.into(), &rule(a.threshold)?)?;
    let run = perturbed_run(&g, a.noise, a.seed, &a.name);
    save_run(&run, &a.out)?;
    eprintln!("wrote {} ({} items) to {}", run.name, run.len(), a.out.display());
    Ok(())
}

fn adjust(a: AdjustArgs) -> Result<()> {
    let run = load_run(&a.run, a.task.into())?;
    let ds = a.dataset.as_ref().map(load_dataset).transpose()?;
    let out = adjust_run(&Snapper::default(), &run, annotator_counts(ds.as_ref(), a.annotators))?;
    save_run(&out, &a.out)?;
    eprintln!("wrote {} adjusted items to {}", out.len(), a.out.display());
    Ok(())
}

fn ensemble(a: EnsembleArgs) -> Result<()> {
    let runs = load_runs(&a.runs, a.task.into())?;
    let refs: Vec<&Run> = runs.iter().collect();
    let mut out = mean_ensemble(&refs, a.weights.as_deref())?;
    if let Some(name) = a.name {
        out.name = name;
    }
    save_run(&out, &a.out)?;
    eprintln!("wrote {} ({} items) to {}", out.name, out.len(), a.out.display());
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let task: TaskId = a.task.into();
    let cfg = metric_config(a.threshold)?;
    let metric = parse_metric(&a.metric)?;
    let dev = load_gold(&a.gold, task, &cfg.hardening)?;
    let runs = load_runs(&a.candidates, task)?;
    let refs: Vec<&Run> = runs.iter().collect();
    let sel = select_best_run(&refs, &dev, metric, mode_of(a.mode), &cfg)?;
    let best = &runs[sel.best];
    print_reports(&sel.reports, None, a.format)?;
    eprintln!("selected {} by {}", best.name, metric.label());
    if let Some(out) = a.out {
        save_run(best, &out)?;
    }
    Ok(())
}

fn harden_cmd(a: HardenArgs) -> Result<()> {
    let run = load_run(&a.run, a.task.into())?;
    let out = harden(&run, &rule(a.threshold)?);
    save_run(&out, &a.out)?;
    eprintln!("wrote {} hard items to {}", out.len(), a.out.display());
    Ok(())
}

/// Baseline rows shown next to system runs. Soft modes score soft baselines.
fn baseline_runs(g: &GoldStandard, mode: EvalMode) -> Result<Vec<Run>> {
    let kind = match mode {
        EvalMode::HardHard => RunKind::Hard,
        EvalMode::SoftSoft | EvalMode::HardSoft => RunKind::Soft,
    };
    [BaselineKind::Gold, BaselineKind::Majority, BaselineKind::Minority]
        .into_iter()
        .map(|k| Ok(baseline(g, k, kind)?))
        .collect()
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let task: TaskId = a.task.into();
    let mode = mode_of(a.mode);
    let cfg = metric_config(a.threshold)?;
    let columns = match &a.metrics {
        Some(ids) => {
            let wanted: Vec<Metric> = ids.iter().map(|s| parse_metric(s.trim())).collect::<Result<_>>()?;
            let available = mode.columns(task);
            if let Some(m) = wanted.iter().find(|m| !available.contains(m)) {
                return Err(disagree_core::MetricsError::MetricUnavailable { metric: *m, mode }.into());
            }
            Some(wanted)
        }
        None => None,
    };
    let g = load_gold(&a.gold, task, &cfg.hardening)?;
    let mut runs = if a.with_baselines { baseline_runs(&g, mode)? } else { Vec::new() };
    runs.extend(load_runs(&a.preds, task)?);

    let mut meta = IndexMap::new();
    meta.insert("threshold".to_string(), a.threshold.to_string());
    if let Some(seed) = a.seed {
        meta.insert("seed".into(), seed.to_string());
    }
    if let Some(n) = a.annotators {
        meta.insert("annotators".into(), n.to_string());
    }
    if let Some(w) = &a.weights {
        meta.insert("weights".into(), join_f64(w));
    }

    let mut reports = Vec::with_capacity(runs.len());
    for r in &runs {
        let mut rep = disagree_core::evaluate(r, &g, mode, &cfg)?;
        if let Some(cols) = &columns {
            rep.metrics.retain(|m, _| cols.contains(m));
            rep.normalized.retain(|m, _| cols.contains(m));
        }
        rep.metadata = meta.clone();
        reports.push(rep);
    }
    let text = render(&reports, columns.as_deref(), a.format)?;
    match a.out {
        Some(path) => write_text(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn table_format(f: FormatArg) -> TableFormat {
    match f {
        FormatArg::Markdown => TableFormat::Markdown,
        FormatArg::Tsv | FormatArg::Json => TableFormat::Tsv,
    }
}

/// Table or JSON text for reports sharing one task and mode.
fn render(reports: &[EvalReport], columns: Option<&[Metric]>, format: FormatArg) -> Result<String> {
    if format == FormatArg::Json {
        let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
        s.push('\n');
        return Ok(s);
    }
    let Some(first) = reports.first() else {
        return Ok(String::new());
    };
    let cols = columns.map_or_else(|| first.mode.columns(first.task), <[Metric]>::to_vec);
    Ok(report_table_with(reports, &cols, table_format(format))?)
}

fn print_reports(reports: &[EvalReport], columns: Option<&[Metric]>, format: FormatArg) -> Result<()> {
    print!("{}", render(reports, columns, format)?);
    Ok(())
}

/// Groups by (task, mode) in first-seen order.
fn grouped(reports: Vec<EvalReport>) -> IndexMap<(TaskId, EvalMode), Vec<EvalReport>> {
    let mut groups: IndexMap<(TaskId, EvalMode), Vec<EvalReport>> = IndexMap::new();
    for r in reports {
        groups.entry((r.task, r.mode)).or_default().push(r);
    }
    groups
}

fn render_groups(reports: Vec<EvalReport>, format: FormatArg) -> Result<String> {
    if format == FormatArg::Json {
        return render(&reports, None, format);
    }
    let groups = grouped(reports);
    let mut out = String::new();
    for (i, ((task, mode), reps)) in groups.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# {task} {}\n", mode.as_str()));
        out.push_str(&render(reps, None, format)?);
    }
    Ok(out)
}

fn report(a: ReportArgs) -> Result<()> {
    let mut all = Vec::new();
    for path in &a.reports {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let bad = |e: serde_json::Error| CliError::BadReport {
            path: path.clone(),
            reason: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
        if value.is_array() {
            all.extend(serde_json::from_value::<Vec<EvalReport>>(value).map_err(bad)?);
        } else {
            all.push(serde_json::from_value::<EvalReport>(value).map_err(bad)?);
        }
    }
    print!("{}", render_groups(all, a.format)?);
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let task: TaskId = a.task.into();
    let cfg = metric_config(a.threshold)?;
    let runs = load_runs(&a.runs, task)?;
    let test_gold = load_gold(&a.gold, task, &cfg.hardening)?;

    let mut meta = IndexMap::new();
    meta.insert("variant".to_string(), format!("{:?}", a.variant).to_lowercase());
    meta.insert("threshold".into(), a.threshold.to_string());
    if let Some(seed) = a.seed {
        meta.insert("seed".into(), seed.to_string());
    }
    if let Some(w) = &a.weights {
        meta.insert("weights".into(), join_f64(w));
    }

    let refs: Vec<&Run> = runs.iter().collect();
    let final_run = match a.variant {
        VariantArg::Aiupv1 => {
            let metric = parse_metric(&a.metric)?;
            let mode = if EvalMode::SoftSoft.columns(task).contains(&metric) {
                EvalMode::SoftSoft
            } else {
                EvalMode::HardHard
            };
            let dev = match &a.dev_gold {
                Some(p) => load_gold(p, task, &cfg.hardening)?,
                None => test_gold.clone(),
            };
            let sel = select_best_run(&refs, &dev, metric, mode, &cfg)?;
            meta.insert("selected".into(), runs[sel.best].name.clone());
            meta.insert("selection_metric".into(), metric.id().into());
            runs[sel.best].clone()
        }
        VariantArg::Aiupv2 => mean_ensemble(&refs, a.weights.as_deref())?,
        VariantArg::Aiupv3 => {
            let mean = mean_ensemble(&refs, a.weights.as_deref())?;
            let ds = a.dataset.as_ref().map(load_dataset).transpose()?;
            let counts = annotator_counts(ds.as_ref(), a.annotators);
            let n = match counts {
                AnnotatorCounts::Global(n) => n.to_string(),
                AnnotatorCounts::PerItem { fallback, .. } => {
                    fallback.map_or_else(|| "per-item".to_string(), |n| format!("per-item,fallback={n}"))
                }
            };
            meta.insert("annotators".into(), n);
            adjust_run(&Snapper::default(), &mean, counts)?
        }
    };
    let hard_run = harden(&final_run, &cfg.hardening);

    let mut reports = Vec::new();
    for (mode, run) in [(EvalMode::SoftSoft, &final_run), (EvalMode::HardHard, &hard_run)] {
        if run.kind() == RunKind::Hard && mode == EvalMode::SoftSoft {
            continue;
        }
        if a.with_baselines {
            for b in baseline_runs(&test_gold, mode)? {
                let mut rep = disagree_core::evaluate(&b, &test_gold, mode, &cfg)?;
                rep.metadata = meta.clone();
                reports.push(rep);
            }
        }
        let mut rep = disagree_core::evaluate(run, &test_gold, mode, &cfg)?;
        rep.metadata = meta.clone();
        reports.push(rep);
    }
    print!("{}", render_groups(reports, a.format)?);
    if let Some(p) = &a.out {
        save_run(&final_run, p)?;
    }
    if let Some(p) = &a.hard_out {
        save_run(&hard_run, p)?;
    }
    Ok(())
}
