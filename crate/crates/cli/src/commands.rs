use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde_json::json;

use repodomain_core::corpus::{
    build_dataset, dataset_stats, load_dataset, mark_deprecated, merge_labels, read_label_file, save_dataset,
    DeprecationLexicon, DomainLabel, LabelScheme, RepoRecord, RepoStatus,
};
use repodomain_core::eval::{
    ablation, ablation_csv, ablation_text, confusion_csv, cross_validate, cv_csv, cv_text, fmt_num, metrics_csv,
    metrics_from_confusion, metrics_text, score_predictions, zero_r, AblationBudget, ConfusionMatrix, MetricsReport,
};
use repodomain_core::features::{EmbeddingStore, FittedPipeline, PipelineConfig, TextVectorizerConfig};
use repodomain_core::ingest::{
    fetch_batch, BatchOptions, Cache, CommitRecord, FetchStatus, GithubClient, GoneMarker, HttpTransport, IngestError,
    RawRepo, RepoRef, ResourceKind,
};
use repodomain_core::model::{argmax, load_bundle, save_bundle, search, train, ModelBundle, SearchBudget, TrainConfig};
use repodomain_core::practices::{exclude_outliers, practice_profile, read_profiles, write_profiles, DomainProfile};
use repodomain_core::stats::{
    adoption_csv, domain_comparison_report, ownership_csv, refactoring_csv, standardize, tests_csv, tsne_csv,
    tsne_project, TsneConfig,
};

use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::{
    AblateArgs, BuildArgs, ClassifyArgs, EvalArgs, FetchArgs, Format, GlobalOpts, PracticesArgs, ReportArgs, TrainArgs,
    TsneArgs,
};

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    std::fs::write(path, contents).map_err(CliError::io(path))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))
}

/// One `owner/name` per line; blank lines and `#` comments are skipped.
fn read_repo_list(path: &Path) -> Result<Vec<RepoRef>, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let repo = line
            .parse()
            .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if !out.contains(&repo) {
            out.push(repo);
        }
    }
    Ok(out)
}

fn load_embeddings(path: Option<&PathBuf>) -> Result<Option<EmbeddingStore>, CliError> {
    Ok(match path {
        Some(p) => Some(EmbeddingStore::load(p)?),
        None => None,
    })
}

fn pipeline_config(seed: u64, embeddings: Option<&EmbeddingStore>) -> PipelineConfig {
    let mut pc = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    if let Some(store) = embeddings {
        pc.text = TextVectorizerConfig::PrecomputedEmbedding {
            embedding_dim: store.dim(),
        };
    }
    pc
}

/// Access to repository data: the cache first, the API only when needed.
struct Source<'a> {
    cache: Cache,
    global: &'a GlobalOpts,
    client: OnceLock<Result<GithubClient<HttpTransport>, String>>,
}

impl<'a> Source<'a> {
    fn new(global: &'a GlobalOpts) -> Self {
        Self {
            cache: Cache::new(&global.cache),
            global,
            client: OnceLock::new(),
        }
    }

    fn client(&self) -> Result<&GithubClient<HttpTransport>, IngestError> {
        self.client
            .get_or_init(|| {
                HttpTransport::new()
                    .map(|t| GithubClient::from_env(t).with_max_concurrent(self.global.jobs))
                    .map_err(|e| e.0)
            })
            .as_ref()
            .map_err(|e| IngestError::Transport(e.clone()))
    }

    fn offline_miss(&self, repo: &RepoRef, what: &str) -> CliError {
        CliError::Input(format!("{what} of {repo} not in cache {} and --offline is set", self.cache.root().display()))
    }

    fn repo(&self, repo: &RepoRef) -> Result<RawRepo, CliError> {
        if let Some(raw) = self.cache.get_repo(repo)? {
            return Ok(raw);
        }
        if self.cache.get_gone(repo)?.is_some() {
            return Err(IngestError::NotFound(repo.clone()).into());
        }
        if self.global.offline {
            return Err(self.offline_miss(repo, "metadata"));
        }
        let client = self.client()?;
        self.cache
            .get_or_fetch(repo, ResourceKind::Repo, false, || client.fetch_repo(repo))
            .map_err(|e| self.note_gone(repo, e))
    }

    fn commits(&self, repo: &RepoRef) -> Result<Vec<CommitRecord>, CliError> {
        if let Some(c) = self.cache.get_commits(repo)? {
            return Ok(c);
        }
        if self.global.offline {
            return Err(self.offline_miss(repo, "commit history"));
        }
        let client = self.client()?;
        self.cache
            .get_or_fetch(repo, ResourceKind::Commits, false, || client.fetch_all_commits(repo))
            .map_err(|e| self.note_gone(repo, e))
    }

    fn note_gone(&self, repo: &RepoRef, e: IngestError) -> CliError {
        if matches!(e, IngestError::NotFound(_)) {
            let marker = GoneMarker {
                repo: repo.clone(),
                checked_at: chrono::Utc::now(),
            };
            if let Err(me) = self.cache.mark_gone(&marker) {
                log::warn!("could not record {repo} as gone: {me}");
            }
        }
        e.into()
    }
}

fn failure(repo: &RepoRef, e: &CliError) -> serde_json::Value {
    json!({ "ref": repo.to_string(), "status": "failed", "code": e.code(), "message": e.to_string() })
}

/// Probabilities for one record under a bundle's fitted transforms.
fn predict_one(
    bundle: &ModelBundle,
    pipeline: &FittedPipeline,
    record: &RepoRecord,
    embeddings: Option<&EmbeddingStore>,
) -> Result<Vec<f64>, CliError> {
    let m = pipeline.transform(std::slice::from_ref(record), embeddings)?;
    Ok(bundle.model.predict_proba_row(m.row(0))?)
}

fn bundle_pipeline(bundle: &ModelBundle) -> Result<&FittedPipeline, CliError> {
    bundle
        .pipeline
        .as_ref()
        .ok_or_else(|| CliError::Input("bundle carries no feature pipeline; it cannot score raw records".into()))
}

pub fn fetch(g: &GlobalOpts, a: &FetchArgs) -> Result<(), CliError> {
    if g.offline {
        return Err(CliError::Usage("fetch needs the network; drop --offline".into()));
    }
    let repos = read_repo_list(&a.repos)?;
    let mut manifest = RunManifest::start("fetch", g.seed);
    manifest.input(&a.repos);
    manifest.output(&g.cache);
    manifest.config = json!({ "commits": a.commits, "refresh": a.refresh, "jobs": g.jobs });
    let source = Source::new(g);
    let outcomes = fetch_batch(
        source.client()?,
        &source.cache,
        &repos,
        BatchOptions {
            jobs: g.jobs,
            refresh: a.refresh,
            commits: a.commits,
        },
    );
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &outcomes {
        let key = match &o.status {
            FetchStatus::Fetched => "fetched",
            FetchStatus::Gone => "gone",
            FetchStatus::Failed { code, message } => {
                log::warn!("{}: {code}: {message}", o.repo);
                "failed"
            }
        };
        *tally.entry(key).or_default() += 1;
    }
    manifest.repositories = outcomes
        .iter()
        .map(|o| serde_json::to_value(o).expect("outcome serializes"))
        .collect();
    println!(
        "{} repositories: {} fetched, {} gone, {} failed",
        outcomes.len(),
        tally.get("fetched").unwrap_or(&0),
        tally.get("gone").unwrap_or(&0),
        tally.get("failed").unwrap_or(&0)
    );
    manifest.finish(&RunManifest::path_for(&g.cache, true))
}

pub fn build(g: &GlobalOpts, a: &BuildArgs) -> Result<(), CliError> {
    let cache_dir = a.input.clone().unwrap_or_else(|| g.cache.clone());
    let mut manifest = RunManifest::start("build", g.seed);
    manifest.input(&cache_dir);
    let labels = match &a.labels {
        Some(p) => {
            manifest.input(p);
            Some(read_label_file(p)?)
        }
        None => None,
    };
    let lexicon = DeprecationLexicon::default();
    manifest.config = json!({ "merge": a.merge, "deprecation_phrases": lexicon.phrases() });
    let report = build_dataset(&Cache::new(&cache_dir), labels.as_ref(), &lexicon)?;
    let dataset = if a.merge {
        merge_labels(&report.dataset)?
    } else {
        report.dataset
    };
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_dataset(&dataset, &a.out)?;
    manifest.output(&a.out);
    for r in &report.missing {
        manifest.warnings.push(format!("{r}: labelled but not in cache"));
        manifest.repositories.push(json!({ "ref": r.to_string(), "status": "missing" }));
    }
    for r in &report.deprecated {
        manifest.repositories.push(json!({ "ref": r.to_string(), "status": "deprecated" }));
    }
    print!("{}", dataset_stats(&dataset).to_text());
    if !report.deprecated.is_empty() {
        println!("\nflagged as deprecated (review by hand):");
        for r in &report.deprecated {
            println!("  {r}");
        }
    }
    if !report.missing.is_empty() {
        eprintln!("warning: {} labelled repositories missing from the cache", report.missing.len());
    }
    manifest.finish(&RunManifest::path_for(&a.out, false))
}

pub fn train_command(g: &GlobalOpts, a: &TrainArgs) -> Result<(), CliError> {
    let objective = a.objective.parse().map_err(CliError::Usage)?;
    let mut manifest = RunManifest::start("train", g.seed);
    manifest.input(&a.data);
    let embeddings = load_embeddings(a.embeddings.as_ref())?;
    if let Some(p) = &a.embeddings {
        manifest.input(p);
    }
    let data = load_dataset(&a.data)?.trainable();
    let pc = pipeline_config(g.seed, embeddings.as_ref());
    let (pipeline, matrix) = FittedPipeline::fit(&data.records, &pc, embeddings.as_ref())?;

    let mut search_summary = serde_json::Value::Null;
    let config = if a.budget.is_zero() {
        TrainConfig {
            seed: g.seed,
            ..TrainConfig::default()
        }
    } else {
        let budget = SearchBudget {
            wall_seconds: a.budget.as_secs_f64(),
            max_trials: a.max_trials,
            objective,
            cv_folds: a.folds,
            seed: g.seed,
            smote_k: pc.smote_k,
        };
        let outcome = search(&matrix, &budget)?;
        if outcome.trials.len() < a.max_trials {
            manifest.warnings.push(format!(
                "time budget ended the search after {} of {} trials; rerunning may explore a different number",
                outcome.trials.len(),
                a.max_trials
            ));
        }
        search_summary = json!({
            "budget": budget,
            "trials": outcome.trials.len(),
            "best_score": outcome.best_score,
        });
        outcome.best_config
    };
    let oversampled = pipeline.oversample(matrix)?;
    let model = train(&oversampled, &config)?;
    let importance = model.group_importance();
    let bundle = ModelBundle {
        model,
        pipeline: Some(pipeline),
        class_counts: data.class_counts(),
        provenance: json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": g.seed,
            "records": data.len(),
            "search": search_summary,
        }),
    };
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_bundle(&bundle, &a.out)?;
    manifest.output(&a.out);
    manifest.config = json!({ "pipeline": pc, "train": config, "search": search_summary });

    println!("trained on {} records, {} features", data.len(), oversampled.n_cols());
    println!("classes: {}", bundle.model.classes.iter().map(|c| c.slug()).collect::<Vec<_>>().join(", "));
    if let Some(best) = search_summary.get("best_score") {
        println!("search: {} trials, best {} {}", search_summary["trials"], a.objective, best);
    }
    println!("feature-group importance:");
    for (group, share) in &importance {
        println!("  {:<12} {:>6.1}%", group.name(), share * 100.0);
    }
    manifest.finish(&RunManifest::path_for(&a.out, false))
}

fn read_predictions(path: &Path) -> Result<(Vec<DomainLabel>, Vec<DomainLabel>), CliError> {
    let bad = |detail: String| CliError::Input(format!("{}: {detail}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing `{name}` column")))
    };
    let (t, p) = (col("truth")?, col("predicted")?);
    let (mut truth, mut predicted) = (Vec::new(), Vec::new());
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse = |j: usize| -> Result<DomainLabel, CliError> {
            rec.get(j)
                .unwrap_or("")
                .parse()
                .map_err(|e| bad(format!("line {}: {e}", i + 2)))
        };
        truth.push(parse(t)?);
        predicted.push(parse(p)?);
    }
    if truth.is_empty() {
        return Err(bad("no predictions".into()));
    }
    Ok((truth, predicted))
}

fn print_metrics(g: &GlobalOpts, report: &MetricsReport) {
    match g.format {
        Format::Text => print!("{}", metrics_text(report)),
        Format::Csv => print!("{}", metrics_csv(report)),
    }
}

fn write_metrics_dir(dir: &Path, report: &MetricsReport, manifest: &mut RunManifest) -> Result<(), CliError> {
    create_dir(dir)?;
    for (name, body) in [("confusion.csv", confusion_csv(&report.confusion)), ("metrics.csv", metrics_csv(report))] {
        let p = dir.join(name);
        write_output(&p, &body)?;
        manifest.output(&p);
    }
    Ok(())
}

pub fn eval(g: &GlobalOpts, a: &EvalArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("eval", g.seed);
    let embeddings = load_embeddings(a.embeddings.as_ref())?;
    let mut extra: Vec<(&str, String)> = Vec::new();

    let report = if let Some(pred_path) = &a.predictions {
        manifest.input(pred_path);
        manifest.config = json!({ "mode": "predictions" });
        let (truth, predicted) = read_predictions(pred_path)?;
        let mut classes: Vec<DomainLabel> = truth.iter().chain(&predicted).copied().collect();
        classes.sort();
        classes.dedup();
        let report = metrics_from_confusion(&ConfusionMatrix::from_predictions(&classes, &truth, &predicted))?;
        print_metrics(g, &report);
        report
    } else if let Some(model_path) = &a.model {
        let data_path = a.data.as_ref().expect("clap enforces --data");
        manifest.input(model_path);
        manifest.input(data_path);
        manifest.config = json!({ "mode": "model" });
        let bundle = load_bundle(model_path)?;
        let pipeline = bundle_pipeline(&bundle)?;
        let mut data = load_dataset(data_path)?.trainable();
        if bundle.model.classes.contains(&DomainLabel::ApplicationAndSystemSoftware)
            && data.scheme()? == Some(LabelScheme::Raw)
        {
            manifest.warnings.push("data labels merged to match the model's classes".into());
            data = merge_labels(&data)?;
        }
        let m = pipeline.transform(&data.records, embeddings.as_ref())?;
        let truth = m.require_labels()?.to_vec();
        let probabilities = bundle.model.predict_proba(&m)?;
        let mut classes: Vec<DomainLabel> = bundle.model.classes.iter().chain(&truth).copied().collect();
        classes.sort();
        classes.dedup();
        let mut report = score_predictions(&classes, &truth, &bundle.model.classes, &probabilities)?;
        let train_labels: Vec<DomainLabel> = bundle
            .class_counts
            .iter()
            .flat_map(|(&l, &n)| std::iter::repeat_n(l, n))
            .collect();
        report.zero_r_accuracy = Some(zero_r(&train_labels, &truth)?);
        print_metrics(g, &report);
        report
    } else if let (Some(data_path), Some(folds)) = (&a.data, a.folds) {
        manifest.input(data_path);
        let data = load_dataset(data_path)?;
        let pc = pipeline_config(g.seed, embeddings.as_ref());
        let tc = TrainConfig {
            seed: g.seed,
            ..TrainConfig::default()
        };
        manifest.config = json!({ "mode": "cross_validation", "folds": folds, "pipeline": pc, "train": tc });
        let cv = cross_validate(&data, &pc, &tc, folds, g.seed, embeddings.as_ref())?;
        manifest.warnings.extend(cv.warnings.iter().cloned());
        match g.format {
            Format::Text => print!("{}", cv_text(&cv)),
            Format::Csv => print!("{}", cv_csv(&cv)),
        }
        extra.push(("cv.csv", cv_csv(&cv)));
        cv.pooled
    } else {
        return Err(CliError::Usage(
            "eval needs --predictions, --model with --data, or --data with --folds".into(),
        ));
    };

    if let Some(dir) = &a.out_dir {
        write_metrics_dir(dir, &report, &mut manifest)?;
        for (name, body) in extra {
            let p = dir.join(name);
            write_output(&p, &body)?;
            manifest.output(&p);
        }
        manifest.finish(&RunManifest::path_for(dir, true))?;
    }
    Ok(())
}

pub fn classify(g: &GlobalOpts, a: &ClassifyArgs) -> Result<(), CliError> {
    let mut repos: Vec<RepoRef> = a
        .repo
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, IngestError>>()?;
    if let Some(p) = &a.repos {
        repos.extend(read_repo_list(p)?);
    }
    let bundle = load_bundle(&a.model)?;
    let pipeline = bundle_pipeline(&bundle)?;
    let embeddings = load_embeddings(a.embeddings.as_ref())?;
    let source = Source::new(g);
    let lexicon = DeprecationLexicon::default();
    let classes = &bundle.model.classes;

    let results: Vec<Result<(Vec<f64>, bool), CliError>> = repos
        .par_iter()
        .map(|repo| {
            let record = RepoRecord::from_raw(&source.repo(repo)?, None);
            let deprecated = mark_deprecated(&record, &lexicon).status == RepoStatus::Deprecated;
            Ok((predict_one(&bundle, pipeline, &record, embeddings.as_ref())?, deprecated))
        })
        .collect();

    let mut manifest = RunManifest::start("classify", g.seed);
    manifest.input(&a.model);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["ref".to_string(), "predicted".to_string()];
    header.extend(classes.iter().map(|c| c.slug().to_string()));
    w.write_record(&header).expect("in-memory write");
    let mut first_error = None;
    for (repo, result) in repos.iter().zip(results) {
        match result {
            Ok((p, deprecated)) => {
                let predicted = classes[argmax(&p)];
                let mut row = vec![repo.to_string(), predicted.slug().to_string()];
                row.extend(p.iter().map(|&v| fmt_num(v)));
                w.write_record(&row).expect("in-memory write");
                if g.format == Format::Text {
                    println!("{repo}\t{predicted}");
                    let mut ranked: Vec<(DomainLabel, f64)> = classes.iter().copied().zip(p.iter().copied()).collect();
                    ranked.sort_by(|x, y| y.1.total_cmp(&x.1));
                    for (c, v) in ranked {
                        println!("  {:<36} {:.4}", c.display_name(), v);
                    }
                }
                if deprecated {
                    eprintln!("note: {repo} looks deprecated");
                }
            }
            Err(e) => {
                eprintln!("error[{}]: {repo}: {e}", e.code());
                manifest.repositories.push(failure(repo, &e));
                first_error.get_or_insert(e);
            }
        }
    }
    let table = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output");
    if g.format == Format::Csv {
        print!("{table}");
    }
    if let Some(out) = &a.out {
        write_output(out, &table)?;
        manifest.output(out);
        manifest.finish(&RunManifest::path_for(out, false))?;
    }
    match first_error {
        // one bad repository among many is reported, not fatal
        Some(e) if repos.len() == 1 => Err(e),
        _ => Ok(()),
    }
}

pub fn ablate(g: &GlobalOpts, a: &AblateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("ablate", g.seed);
    manifest.input(&a.data);
    let embeddings = load_embeddings(a.embeddings.as_ref())?;
    let data = load_dataset(&a.data)?;
    let pipeline = pipeline_config(g.seed, embeddings.as_ref());
    let budget = AblationBudget {
        folds: a.folds,
        seed: g.seed,
        search: (!a.budget.is_zero()).then(|| SearchBudget {
            wall_seconds: a.budget.as_secs_f64(),
            max_trials: a.max_trials,
            cv_folds: a.folds,
            seed: g.seed,
            smote_k: pipeline.smote_k,
            ..SearchBudget::default()
        }),
        pipeline,
        train: TrainConfig {
            seed: g.seed,
            ..TrainConfig::default()
        },
    };
    manifest.config = serde_json::to_value(&budget).expect("budget serializes");
    let rows = ablation(&data, &budget, embeddings.as_ref())?;
    for r in &rows {
        manifest.warnings.extend(r.cv.warnings.iter().map(|w| format!("{}: {w}", r.name)));
    }
    match g.format {
        Format::Text => print!("{}", ablation_text(&rows)),
        Format::Csv => print!("{}", ablation_csv(&rows)),
    }
    if let Some(out) = &a.out {
        write_output(out, &ablation_csv(&rows))?;
        manifest.output(out);
        manifest.finish(&RunManifest::path_for(out, false))?;
    }
    Ok(())
}

enum Domains {
    Model(Box<ModelBundle>),
    Labels(BTreeMap<RepoRef, DomainLabel>),
}

impl Domains {
    fn domain_of(&self, repo: &RepoRef, raw: &RawRepo) -> Result<DomainLabel, CliError> {
        match self {
            Domains::Model(bundle) => {
                let p = predict_one(bundle, bundle_pipeline(bundle)?, &RepoRecord::from_raw(raw, None), None)?;
                Ok(bundle.model.classes[argmax(&p)].merged())
            }
            Domains::Labels(map) => map
                .get(repo)
                .map(|l| l.merged())
                .ok_or_else(|| CliError::Input(format!("{repo} has no label"))),
        }
    }
}

pub fn practices(g: &GlobalOpts, a: &PracticesArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("practices", g.seed);
    let domains = match (&a.model, &a.labels) {
        (Some(m), _) => {
            manifest.input(m);
            let bundle = load_bundle(m)?;
            bundle_pipeline(&bundle)?;
            Domains::Model(Box::new(bundle))
        }
        (None, Some(l)) => {
            manifest.input(l);
            Domains::Labels(read_label_file(l)?)
        }
        (None, None) => return Err(CliError::Usage("practices needs --model or --labels".into())),
    };
    let repos = match (&a.repos, &domains) {
        (Some(p), _) => {
            manifest.input(p);
            read_repo_list(p)?
        }
        (None, Domains::Labels(map)) => map.keys().cloned().collect(),
        (None, Domains::Model(_)) => return Err(CliError::Usage("--repos is required with --model".into())),
    };
    manifest.config = json!({ "max_commits": a.max_commits, "jobs": g.jobs });
    let source = Source::new(g);

    let results: Vec<Result<DomainProfile, CliError>> = repos
        .par_iter()
        .map(|repo| {
            let raw = source.repo(repo)?;
            let domain = domains.domain_of(repo, &raw)?;
            let commits = source.commits(repo)?;
            Ok(DomainProfile {
                repo: repo.clone(),
                domain,
                profile: practice_profile(&raw, &commits),
            })
        })
        .collect();
    let mut profiles = Vec::new();
    for (repo, r) in repos.iter().zip(results) {
        match r {
            Ok(p) => profiles.push(p),
            Err(e) => {
                log::warn!("{repo}: {e}");
                manifest.repositories.push(failure(repo, &e));
            }
        }
    }
    let split = exclude_outliers(profiles, |p| p.profile.total_commits, a.max_commits);
    for p in &split.excluded {
        manifest.repositories.push(json!({
            "ref": p.repo.to_string(),
            "status": "excluded",
            "total_commits": p.profile.total_commits,
        }));
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_profiles(&a.out, &split.kept)?;
    manifest.output(&a.out);
    println!(
        "{} profiled, {} excluded above {} commits, {} failed",
        split.kept.len(),
        split.excluded.len(),
        a.max_commits,
        repos.len() - split.kept.len() - split.excluded.len()
    );
    manifest.finish(&RunManifest::path_for(&a.out, false))
}

pub fn report(g: &GlobalOpts, a: &ReportArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("report", g.seed);
    manifest.input(&a.profiles);
    let profiles = read_profiles(&a.profiles)?;
    let report = domain_comparison_report(&profiles);
    manifest.warnings.extend(report.flags.iter().cloned());
    create_dir(&a.out_dir)?;
    for (name, body) in [
        ("adoption.csv", adoption_csv(&report)),
        ("refactoring.csv", refactoring_csv(&report)),
        ("ownership.csv", ownership_csv(&report)),
        ("tests.csv", tests_csv(&report)),
    ] {
        let p = a.out_dir.join(name);
        write_output(&p, &body)?;
        manifest.output(&p);
    }
    match g.format {
        Format::Text => print!("{}", report.text()),
        Format::Csv => print!("{}", tests_csv(&report)),
    }
    manifest.finish(&RunManifest::path_for(&a.out_dir, true))
}

pub fn tsne(g: &GlobalOpts, a: &TsneArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::start("tsne", g.seed);
    manifest.input(&a.profiles);
    let profiles = read_profiles(&a.profiles)?;
    let rows: Vec<Vec<f64>> = profiles.iter().map(|p| p.profile.as_vector().to_vec()).collect();
    let standardized = standardize(&rows)?;
    if !standardized.zero_variance.is_empty() {
        manifest
            .warnings
            .push(format!("zero-variance feature columns {:?} set to 0", standardized.zero_variance));
    }
    let config = TsneConfig {
        perplexity: a.perplexity,
        iterations: a.iterations,
        seed: g.seed,
        ..TsneConfig::default()
    };
    manifest.config = json!({
        "perplexity": config.perplexity,
        "learning_rate": config.learning_rate,
        "iterations": config.iterations,
        "early_exaggeration": config.early_exaggeration,
        "exaggeration_iterations": config.exaggeration_iterations,
    });
    let embedding = tsne_project(&standardized.rows, &config)?;
    let table = tsne_csv(&profiles, &embedding);
    write_output(&a.out, &table)?;
    manifest.output(&a.out);
    match g.format {
        Format::Text => println!("{} points projected, final KL {:.4}", embedding.points.len(), embedding.final_kl),
        Format::Csv => print!("{table}"),
    }
    manifest.finish(&RunManifest::path_for(&a.out, false))
}
