use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_json, write_file, write_json, Dataset, Pipeline, PipelineError, Stamp};
use crate::cohort::io::{read_participants, read_posts, read_ratings, to_jsonl};
use crate::cohort::synth::{generate_cohort, CohortSpec};
use crate::cohort::{
    admit_participant, aggregate_ratings, aggregate_user_days, split_pre_diagnosis, summary_stats, user_day_counts,
    Admission, ExclusionReason, FeatureMatrix, FeatureSet, Participant, Post, SummaryStats, UserDayCounts,
};
use crate::forest::{
    grid_search, repeated_runs, split_train_test, train_forest, BenchmarkConstants, ForestConfig, ForestSummary,
    RunReport, METRIC_NAMES,
};
use crate::imaging::{extract_batch, CascadeModel};
use crate::inference::{
    bayes_factor, fit_logit_mle, log_marginal_laplace, posterior_predictive_pvalue, run_metropolis,
    summarize_posterior, write_draws_csv, BayesFactorResult, FreqFit, LogitData, LogitSpec, PosteriorSummary,
    PpcResult,
};
use crate::stats::{chi2_independence, Chi2Result, ContingencyTable};
use crate::Group;

const FIT_STAGE: u64 = 10;
const CLASSIFY_STAGE: u64 = 20;
pub(crate) const AGREEMENT_STAGE: u64 = 30;

/// Writes a cohort generated from the configured spec (a preset name or a
/// JSON spec file) and the top-level seed.
pub fn synth(p: &Pipeline) -> Result<CohortSpec, PipelineError> {
    let name = &p.config.synth.spec;
    let spec = match CohortSpec::preset(name) {
        Some(s) => s,
        None => read_json::<CohortSpec>(Path::new(name))?,
    };
    let cohort = generate_cohort(&spec, p.config.seed)?;
    let dir = p.config.cohort_dir();
    write_file(&dir.join("participants.jsonl"), to_jsonl(&cohort.participants).as_bytes())?;
    write_file(&dir.join("posts.jsonl"), to_jsonl(&cohort.posts).as_bytes())?;
    write_file(&dir.join("ratings.jsonl"), to_jsonl(&cohort.ratings).as_bytes())?;
    write_json(&dir.join("truth.json"), &cohort.truth)?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractError {
    pub post_id: String,
    pub image_path: Option<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractOutput {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub records: usize,
    /// Posts that already carried features and had no image to process.
    pub precomputed: usize,
    pub errors: usize,
}

/// Adds image features to every post with an `image_path`. Failed photos go
/// to `features/errors.jsonl` and are left out of `features/posts.jsonl`.
pub fn extract(p: &Pipeline) -> Result<ExtractOutput, PipelineError> {
    let cascade_path =
        p.config.extract.cascade.clone().ok_or_else(|| PipelineError::missing(Path::new("extract.cascade"), "not set"))?;
    if !cascade_path.exists() {
        return Err(PipelineError::missing(&cascade_path, "cascade file not found"));
    }
    let cascade = CascadeModel::load(&cascade_path)?;
    let posts_path = p.config.posts_path();
    let posts = read_posts(&posts_path)?;
    let base = p
        .config
        .inputs
        .images_dir
        .clone()
        .unwrap_or_else(|| posts_path.parent().map(Path::to_path_buf).unwrap_or_default());
    let with_image: Vec<(usize, PathBuf)> = posts
        .iter()
        .enumerate()
        .filter_map(|(i, post)| post.image_path.as_ref().map(|ip| (i, base.join(ip))))
        .collect();
    let paths: Vec<PathBuf> = with_image.iter().map(|(_, path)| path.clone()).collect();
    let results = extract_batch(&paths, &cascade, &p.config.extract.detection);
    let mut extracted: BTreeMap<usize, Result<_, String>> = BTreeMap::new();
    for ((i, _), item) in with_image.iter().zip(results) {
        extracted.insert(*i, item.result.map_err(|e| e.to_string()));
    }
    let (mut out, mut errors) = (Vec::new(), Vec::new());
    let mut precomputed = 0;
    for (i, post) in posts.into_iter().enumerate() {
        match extracted.remove(&i) {
            Some(Ok(f)) => out.push(Post { features: Some(f), ..post }),
            Some(Err(error)) => errors.push(ExtractError { post_id: post.post_id, image_path: post.image_path, error }),
            None if post.features.is_some() => {
                precomputed += 1;
                out.push(post);
            }
            None => errors.push(ExtractError {
                post_id: post.post_id,
                image_path: None,
                error: "no image_path and no precomputed features".into(),
            }),
        }
    }
    write_file(&p.out(&["features", "posts.jsonl"]), to_jsonl(&out).as_bytes())?;
    write_file(&p.out(&["features", "errors.jsonl"]), to_jsonl(&errors).as_bytes())?;
    let summary = ExtractOutput { stamp: p.stamp(), records: out.len(), precomputed, errors: errors.len() };
    write_json(&p.out(&["features", "extract.json"]), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub participant_id: String,
    pub reason: ExclusionReason,
}

/// Participants passing the admission rules, plus the ones turned away.
pub(crate) fn admit(participants: &[Participant], posts: &[Post]) -> (Vec<Participant>, Vec<Exclusion>) {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for post in posts {
        *counts.entry(post.participant_id.as_str()).or_default() += 1;
    }
    let mut admitted = Vec::new();
    let mut excluded = Vec::new();
    for person in participants {
        match admit_participant(person, counts.get(person.id.as_str()).copied().unwrap_or(0)) {
            Admission::Admitted => admitted.push(person.clone()),
            Admission::Excluded(reason) => excluded.push(Exclusion { participant_id: person.id.clone(), reason }),
        }
    }
    (admitted, excluded)
}

fn require_both_groups(admitted: &[Participant]) -> Result<(), PipelineError> {
    for g in [Group::Depressed, Group::Healthy] {
        if !admitted.iter().any(|p| p.group == g) {
            return Err(PipelineError::Data(format!("admission left no {} participants", g.label().to_lowercase())));
        }
    }
    Ok(())
}

/// Posts of admitted participants, all of them or only the pre-diagnosis ones.
pub(crate) fn posts_for(dataset: Dataset, posts: &[Post], admitted: &[Participant]) -> Vec<Post> {
    let by_id: BTreeMap<&str, &Participant> = admitted.iter().map(|p| (p.id.as_str(), p)).collect();
    posts
        .iter()
        .filter(|post| match by_id.get(post.participant_id.as_str()) {
            None => false,
            Some(_) if dataset != Dataset::Pre => true,
            Some(person) if person.group == Group::Healthy => true,
            Some(person) => person.diagnosis_date.is_some_and(|d| post.date() < d),
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub posts: SummaryStats,
    pub all_days: UserDayCounts,
    pub pre_days: UserDayCounts,
    pub ratings_days: usize,
    pub excluded: Vec<Exclusion>,
    /// Posts left out of aggregation, by reason.
    pub skipped_posts: BTreeMap<String, usize>,
    pub rated_photos: usize,
    /// Photos with fewer ratings than required, left out of the rating means.
    pub flagged_photos: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateOutput {
    pub summary: DatasetSummary,
    pub all: FeatureMatrix,
    pub pre: FeatureMatrix,
    pub ratings: Option<FeatureMatrix>,
}

/// Applies admission, builds user-days and writes `aggregate/{all,pre,ratings}.csv`
/// with `aggregate/summary.json`.
pub fn aggregate(p: &Pipeline) -> Result<AggregateOutput, PipelineError> {
    let participants = read_participants(&p.config.participants_path())?;
    let posts_path = p.config.featured_posts_path();
    let posts = read_posts(&posts_path)?;
    if posts.is_empty() {
        return Err(PipelineError::Data(format!("{}: no posts", posts_path.display())));
    }
    let (admitted, excluded) = admit(&participants, &posts);
    require_both_groups(&admitted)?;
    let ratings = match p.config.ratings_path() {
        Some(path) => Some(aggregate_ratings(&read_ratings(&path)?)),
        None => None,
    };
    let agg = aggregate_user_days(&posts, &admitted, ratings.as_ref().map(|r| &r.means));
    let pre_days = split_pre_diagnosis(&agg.user_days, &admitted);
    let all = FeatureMatrix::from_user_days(&agg.user_days, FeatureSet::Computational);
    let pre = FeatureMatrix::from_user_days(&pre_days, FeatureSet::Computational);
    let rated = FeatureMatrix::from_user_days(&agg.user_days, FeatureSet::Ratings);
    let rated = (rated.nrows() > 0).then_some(rated);
    let mut skipped_posts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &agg.skipped {
        *skipped_posts.entry(s.reason.clone()).or_default() += 1;
    }
    let admitted_ids: BTreeSet<&str> = admitted.iter().map(|a| a.id.as_str()).collect();
    let kept = posts.iter().filter(|x| admitted_ids.contains(x.participant_id.as_str())).count();
    let dropped = posts.len() - kept;
    if dropped > 0 {
        skipped_posts.insert("participant not admitted".into(), dropped);
    }
    let summary = DatasetSummary {
        stamp: p.stamp(),
        posts: summary_stats(&admitted, &posts),
        all_days: user_day_counts(&agg.user_days),
        pre_days: user_day_counts(&pre_days),
        ratings_days: rated.as_ref().map_or(0, FeatureMatrix::nrows),
        excluded,
        skipped_posts,
        rated_photos: ratings.as_ref().map_or(0, |r| r.means.len()),
        flagged_photos: ratings.as_ref().map_or(0, |r| r.flagged.len()),
    };
    write_file(&p.out(&["aggregate", "all.csv"]), all.to_csv_string().as_bytes())?;
    write_file(&p.out(&["aggregate", "pre.csv"]), pre.to_csv_string().as_bytes())?;
    let ratings_csv = p.out(&["aggregate", "ratings.csv"]);
    match &rated {
        Some(m) => write_file(&ratings_csv, m.to_csv_string().as_bytes())?,
        None if ratings_csv.exists() => {
            std::fs::remove_file(&ratings_csv).map_err(|e| PipelineError::io(&ratings_csv, e))?
        }
        None => {}
    }
    write_json(&p.out(&["aggregate", "summary.json"]), &summary)?;
    Ok(AggregateOutput { summary, all, pre, ratings: rated })
}

pub(crate) fn read_matrix(p: &Pipeline, dataset: Dataset) -> Result<FeatureMatrix, PipelineError> {
    let path = p.out(&["aggregate", &format!("{}.csv", dataset.name())]);
    let file = std::fs::File::open(&path).map_err(|e| PipelineError::io(&path, e))?;
    Ok(FeatureMatrix::read_csv(file, &path.display().to_string())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub dataset: Dataset,
    pub n_obs: usize,
    pub positives: usize,
    /// Coefficients are on the standardized scale; these undo it.
    pub scale: Vec<crate::cohort::ColumnScale>,
    pub frequentist: FreqFit,
    pub posterior: PosteriorSummary,
    pub bayes_factor: BayesFactorResult,
    pub ppc: PpcResult,
    pub mcmc: crate::inference::McmcConfig,
    pub warnings: Vec<String>,
}

/// Frequentist and Bayesian logit on the standardized matrix, with the Bayes
/// factor against an intercept-only model and a posterior predictive check.
/// Writes `fit/<dataset>.json` and `fit/draws_<dataset>.csv`; an R-hat above
/// the configured limit fails with a convergence error after writing.
pub fn fit(p: &Pipeline, dataset: Dataset) -> Result<FitReport, PipelineError> {
    let m = read_matrix(p, dataset)?.standardize()?;
    let data = LogitData::from_matrix(&m);
    let frequentist = fit_logit_mle(&data)?;
    let mut warnings: Vec<String> = frequentist.warning.iter().cloned().collect();
    let spec = LogitSpec::diffuse(data.dim(), p.config.model.prior_precision);
    let seed = p.stage_seed(FIT_STAGE + dataset as u64);
    let mcmc = crate::inference::McmcConfig { seed, ..p.config.mcmc.clone() };
    let chains = run_metropolis(&data, &spec, &mcmc)?;
    let posterior = summarize_posterior(&chains)?;
    let null = data.intercept_only();
    let bf = bayes_factor(
        log_marginal_laplace(&data, &spec)?,
        log_marginal_laplace(&null, &LogitSpec::diffuse(1, p.config.model.prior_precision))?,
    );
    let ppc = posterior_predictive_pvalue(&chains, &data, p.config.model.ppc_replicates, seed ^ 0x5eed)?;
    let bad: Vec<String> = posterior
        .params
        .iter()
        .filter(|s| s.rhat.is_some_and(|r| !(r <= p.config.model.max_rhat)))
        .map(|s| format!("{} (R-hat {:.3})", s.name, s.rhat.unwrap_or(f64::NAN)))
        .collect();
    if !bad.is_empty() {
        warnings.push(format!("R-hat above {}: {}", p.config.model.max_rhat, bad.join(", ")));
    }
    let report = FitReport {
        stamp: p.stamp(),
        dataset,
        n_obs: data.nobs(),
        positives: m.targets.iter().filter(|&&t| t == 1).count(),
        scale: m.scale.clone().unwrap_or_default(),
        frequentist,
        posterior,
        bayes_factor: bf,
        ppc,
        mcmc,
        warnings,
    };
    let mut draws = Vec::new();
    write_draws_csv(&chains, &mut draws)?;
    write_file(&p.out(&["fit", &format!("draws_{}.csv", dataset.name())]), &draws)?;
    write_json(&p.out(&["fit", &format!("{}.json", dataset.name())]), &report)?;
    if !bad.is_empty() {
        return Err(PipelineError::Convergence(format!(
            "{} model: R-hat above {} for {}",
            dataset.title(),
            p.config.model.max_rhat,
            bad.join(", ")
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    /// General-practitioner benchmark, shown for comparison only.
    pub benchmark: f64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub dataset: Dataset,
    pub n_obs: usize,
    pub positives: usize,
    /// `None` when a fixed configuration skipped the search.
    pub grid_size: Option<usize>,
    pub best: ForestConfig,
    pub warnings: Vec<String>,
    pub runs: RunReport,
    pub table: Vec<MetricRow>,
    pub model: ForestSummary,
}

/// Grid search on a stratified training split (or the fixed configuration),
/// then repeated split/train/evaluate runs with the chosen settings.
/// Writes `classify/<dataset>.json`, `runs_<dataset>.csv`, `cv_<dataset>.csv`
/// when searching, and the final model fitted on all rows.
pub fn classify(p: &Pipeline, dataset: Dataset) -> Result<ClassifyReport, PipelineError> {
    if dataset == Dataset::Ratings {
        return Err(PipelineError::Config("classify supports the all and pre datasets".into()));
    }
    let m = read_matrix(p, dataset)?;
    let y = &m.targets;
    let positives = y.iter().filter(|&&t| t == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(PipelineError::Data(format!("{} matrix has a single class", dataset.title())));
    }
    let cfg = &p.config.forest;
    let seed = p.stage_seed(CLASSIFY_STAGE + dataset as u64);
    let mut warnings = Vec::new();
    let (best, grid_size) = match p.config.grid() {
        Some(grid) => {
            let (train, _) = split_train_test(y, cfg.train_fraction, seed)?;
            let xt = m.values.select_rows(&train);
            let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let result = grid_search(&xt, &yt, &grid, cfg.folds, seed, cfg.score)?;
            let mut csv = Vec::new();
            result.write_csv(&mut csv)?;
            write_file(&p.out(&["classify", &format!("cv_{}.csv", dataset.name())]), &csv)?;
            warnings.extend(result.warnings);
            (result.best, Some(grid.len()))
        }
        None => {
            let mut fixed = cfg.fixed;
            warnings.extend(fixed.normalize());
            (fixed, None)
        }
    };
    let runs = repeated_runs(&m.values, y, &best, cfg.runs, cfg.train_fraction, seed)?;
    let share = positives as f64 / y.len() as f64;
    if !(0.4..=0.6).contains(&share) {
        warnings.push(format!(
            "class balance {:.1}% positive: compare accuracy with the {:.1}% majority baseline",
            100.0 * share,
            100.0 * share.max(1.0 - share)
        ));
    }
    let table = METRIC_NAMES
        .iter()
        .zip(BenchmarkConstants::GENERAL_PRACTITIONER.values())
        .zip(&runs.stats)
        .map(|((name, bench), s)| MetricRow { metric: name.to_string(), benchmark: bench, mean: s.mean, sd: s.sd })
        .collect();
    let final_cfg = ForestConfig { seed, ..best };
    let model = train_forest(&m.values, y, &final_cfg, &m.names)?;
    let mut runs_csv = Vec::new();
    runs.write_csv(&mut runs_csv)?;
    write_file(&p.out(&["classify", &format!("runs_{}.csv", dataset.name())]), &runs_csv)?;
    write_file(&p.out(&["classify", &format!("model_{}.json", dataset.name())]), model.to_json()?.as_bytes())?;
    let report = ClassifyReport {
        stamp: p.stamp(),
        dataset,
        n_obs: y.len(),
        positives,
        grid_size,
        best,
        warnings,
        runs,
        table,
        model: model.summary(),
    };
    write_json(&p.out(&["classify", &format!("{}.json", dataset.name())]), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterAnalysis {
    pub table: ContingencyTable,
    pub test: Chi2Result,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub all: FilterAnalysis,
    pub pre: FilterAnalysis,
}

/// Chi-squared test of filter usage by group, over all posts and over the
/// pre-diagnosis posts. Writes `filters/filters.json` and one bar CSV per dataset.
pub fn filters(p: &Pipeline) -> Result<FilterReport, PipelineError> {
    let participants = read_participants(&p.config.participants_path())?;
    let posts = read_posts(&p.config.featured_posts_path())?;
    let (admitted, _) = admit(&participants, &posts);
    require_both_groups(&admitted)?;
    let mut analyses = Vec::new();
    for dataset in [Dataset::All, Dataset::Pre] {
        let subset = posts_for(dataset, &posts, &admitted);
        let names: BTreeSet<&str> = subset.iter().map(|x| x.filter_name.as_str()).collect();
        if names.len() < 2 {
            return Err(PipelineError::Data(format!(
                "{} posts use a single filter category; nothing to compare",
                dataset.title()
            )));
        }
        let table = ContingencyTable::filter_usage(&subset, &admitted)?;
        let test = chi2_independence(&table);
        let mut csv = Vec::new();
        test.write_csv(&table, &mut csv)?;
        write_file(&p.out(&["filters", &format!("bars_{}.csv", dataset.name())]), &csv)?;
        analyses.push(FilterAnalysis { table, test });
    }
    let pre = analyses.pop().expect("two analyses");
    let all = analyses.pop().expect("two analyses");
    let report = FilterReport { stamp: p.stamp(), all, pre };
    write_json(&p.out(&["filters", "filters.json"]), &report)?;
    Ok(report)
}
