use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::commands::{read_matrix, AGREEMENT_STAGE};
use super::{
    read_json, write_file, write_json, ClassifyReport, Dataset, DatasetSummary, FilterReport, FitReport, Pipeline,
    PipelineError, Stamp,
};
use crate::cohort::io::read_ratings;
use crate::cohort::{FeatureMatrix, COMPUTATIONAL_FEATURES, RATING_FEATURES};
use crate::forest::BenchmarkConstants;
use crate::inference::{BayesFactorResult, FreqFit, PosteriorSummary, PpcResult};
use crate::stats::{
    correlation_block, correlation_matrix, interrater_agreement, AgreementReport, CorrelationBlock, CorrelationMatrix,
};

pub const SECTION_NAMES: [&str; 8] = [
    "dataset_summary",
    "bayesian",
    "frequentist",
    "bayes_factors",
    "classifier",
    "filters",
    "correlations",
    "agreement",
];

/// Report content with the configuration hash and seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section<T> {
    pub config_hash: String,
    pub seed: u64,
    pub content: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesEvidence {
    pub bayes_factor: BayesFactorResult,
    pub ppc: PpcResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSection {
    pub all: CorrelationMatrix,
    pub pre: CorrelationMatrix,
    /// Rating means against the computational features, on rated user-days.
    pub ratings_vs_computational: Option<CorrelationBlock>,
    /// Constant columns, left out of the matrices.
    pub dropped_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub dataset_summary: Option<Section<DatasetSummary>>,
    pub bayesian: Option<Section<BTreeMap<Dataset, PosteriorSummary>>>,
    pub frequentist: Option<Section<BTreeMap<Dataset, FreqFit>>>,
    pub bayes_factors: Option<Section<BTreeMap<Dataset, BayesEvidence>>>,
    pub classifier: Option<Section<BTreeMap<Dataset, ClassifyReport>>>,
    pub filters: Option<Section<FilterReport>>,
    pub correlations: Option<Section<CorrelationSection>>,
    pub agreement: Option<Section<AgreementReport>>,
    pub missing: Vec<String>,
    pub warnings: Vec<String>,
}

impl ReportBundle {
    pub fn present(&self) -> Vec<&'static str> {
        let flags = [
            self.dataset_summary.is_some(),
            self.bayesian.is_some(),
            self.frequentist.is_some(),
            self.bayes_factors.is_some(),
            self.classifier.is_some(),
            self.filters.is_some(),
            self.correlations.is_some(),
            self.agreement.is_some(),
        ];
        SECTION_NAMES.iter().zip(flags).filter(|(_, f)| *f).map(|(n, _)| *n).collect()
    }
}

fn section<T>(stamp: &Stamp, content: T) -> Section<T> {
    Section { config_hash: stamp.config_hash.clone(), seed: stamp.seed, content }
}

/// Collects per-dataset artifacts; the section takes the first artifact's
/// stamp and warns if the others disagree.
fn per_dataset<A, T>(
    found: &[(Dataset, A)],
    stamp_of: impl Fn(&A) -> &Stamp,
    pick: impl Fn(&A) -> T,
    name: &str,
    warnings: &mut Vec<String>,
) -> Option<Section<BTreeMap<Dataset, T>>> {
    let (_, first) = found.first()?;
    let s = stamp_of(first);
    if found.iter().any(|(_, a)| stamp_of(a).config_hash != s.config_hash) {
        warnings.push(format!("{name}: artifacts come from different configurations"));
    }
    Some(section(s, found.iter().map(|(d, a)| (*d, pick(a))).collect()))
}

fn optional<T: serde::de::DeserializeOwned>(
    path: &std::path::Path,
    warnings: &mut Vec<String>,
) -> Option<T> {
    if !path.exists() {
        return None;
    }
    match read_json(path) {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(format!("unreadable: {e}"));
            None
        }
    }
}

fn has_spread(m: &FeatureMatrix, name: &str) -> bool {
    m.names.iter().position(|c| c == name).is_some_and(|j| {
        let col = m.values.column(j);
        col.iter().any(|v| *v != col[0])
    })
}

fn correlations(p: &Pipeline, warnings: &mut Vec<String>) -> Result<CorrelationSection, PipelineError> {
    let all = read_matrix(p, Dataset::All)?;
    let pre = read_matrix(p, Dataset::Pre)?;
    let dropped: Vec<String> = COMPUTATIONAL_FEATURES
        .iter()
        .filter(|n| !(has_spread(&all, n) && has_spread(&pre, n)))
        .map(|n| n.to_string())
        .collect();
    let cols: Vec<&str> = COMPUTATIONAL_FEATURES.iter().copied().filter(|n| !dropped.iter().any(|d| d == n)).collect();
    let block = match read_matrix(p, Dataset::Ratings) {
        Ok(rated) => {
            // Pair each rated user-day with its computational features.
            let index: BTreeMap<&str, usize> = all.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            let pairs: Vec<(usize, usize)> =
                rated.ids.iter().enumerate().filter_map(|(i, id)| index.get(id.as_str()).map(|&j| (i, j))).collect();
            let mut names = all.names.clone();
            names.extend(rated.names.iter().cloned());
            let width = names.len();
            let values = nalgebra::DMatrix::from_fn(pairs.len(), width, |r, c| {
                let (ri, ai) = pairs[r];
                if c < all.ncols() {
                    all.values[(ai, c)]
                } else {
                    rated.values[(ri, c - all.ncols())]
                }
            });
            let ids = pairs.iter().map(|&(ri, _)| rated.ids[ri].clone()).collect();
            let targets = pairs.iter().map(|&(ri, _)| rated.targets[ri]).collect();
            let joint = FeatureMatrix::new(ids, names, values, targets)?;
            let block_cols: Vec<&str> = cols.iter().copied().filter(|n| has_spread(&joint, n)).collect();
            match correlation_block(&joint, &RATING_FEATURES, &block_cols) {
                Ok(b) => Some(b),
                Err(e) => {
                    warnings.push(format!("correlations: ratings block skipped: {e}"));
                    None
                }
            }
        }
        Err(PipelineError::Missing { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(CorrelationSection {
        all: correlation_matrix(&all, &cols)?,
        pre: correlation_matrix(&pre, &cols)?,
        ratings_vs_computational: block,
        dropped_columns: dropped,
    })
}

/// Gathers every stage's output into `report/report.json` and
/// `report/report.txt`. Missing inputs leave their section out and are listed.
pub fn report(p: &Pipeline) -> Result<ReportBundle, PipelineError> {
    let mut warnings = Vec::new();
    let summary: Option<DatasetSummary> = optional(&p.out(&["aggregate", "summary.json"]), &mut warnings);
    let dataset_summary = summary.map(|s| section(&s.stamp.clone(), s));

    let fits: Vec<(Dataset, FitReport)> = [Dataset::All, Dataset::Pre, Dataset::Ratings]
        .into_iter()
        .filter_map(|d| optional(&p.out(&["fit", &format!("{}.json", d.name())]), &mut warnings).map(|f| (d, f)))
        .collect();
    let bayesian = per_dataset(&fits, |f| &f.stamp, |f| f.posterior.clone(), "bayesian", &mut warnings);
    let frequentist = per_dataset(&fits, |f| &f.stamp, |f| f.frequentist.clone(), "frequentist", &mut warnings);
    let bayes_factors = per_dataset(
        &fits,
        |f| &f.stamp,
        |f| BayesEvidence { bayes_factor: f.bayes_factor.clone(), ppc: f.ppc.clone() },
        "bayes_factors",
        &mut warnings,
    );
    let runs: Vec<(Dataset, ClassifyReport)> = [Dataset::All, Dataset::Pre]
        .into_iter()
        .filter_map(|d| optional(&p.out(&["classify", &format!("{}.json", d.name())]), &mut warnings).map(|c| (d, c)))
        .collect();
    let classifier = per_dataset(&runs, |c| &c.stamp, Clone::clone, "classifier", &mut warnings);
    let filters = optional::<FilterReport>(&p.out(&["filters", "filters.json"]), &mut warnings)
        .map(|f| section(&f.stamp.clone(), f));

    let stamp = p.stamp();
    let correlations = match correlations(p, &mut warnings) {
        Ok(c) => Some(section(&stamp, c)),
        Err(PipelineError::Missing { .. }) => None,
        Err(e) => {
            warnings.push(format!("correlations: {e}"));
            None
        }
    };
    let agreement = match p.config.ratings_path() {
        Some(path) => match read_ratings(&path)
            .map_err(PipelineError::from)
            .and_then(|r| Ok(interrater_agreement(&r, p.config.agreement.folds, p.stage_seed(AGREEMENT_STAGE))?))
        {
            Ok(a) => Some(section(&stamp, a)),
            Err(e) => {
                warnings.push(format!("agreement: {e}"));
                None
            }
        },
        None => None,
    };

    let mut bundle = ReportBundle {
        stamp,
        dataset_summary,
        bayesian,
        frequentist,
        bayes_factors,
        classifier,
        filters,
        correlations,
        agreement,
        missing: Vec::new(),
        warnings,
    };
    let present = bundle.present();
    bundle.missing = SECTION_NAMES.iter().filter(|n| !present.contains(n)).map(|n| n.to_string()).collect();
    if !bundle.missing.is_empty() {
        bundle.warnings.push(format!("missing sections: {}", bundle.missing.join(", ")));
    }
    write_json(&p.out(&["report", "report.json"]), &bundle)?;
    write_file(&p.out(&["report", "report.txt"]), render_text(&bundle).as_bytes())?;
    Ok(bundle)
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".to_string(), |x| format!("{x:.digits$}"))
}

fn heading(out: &mut String, title: &str, hash: &str, seed: u64) {
    let _ = writeln!(out, "\n== {title} ==  [config {} seed {seed}]", &hash[..hash.len().min(12)]);
}

/// Plain-text rendering of the bundle, one table per section.
pub fn render_text(b: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Report  config {}  seed {}", b.stamp.config_hash, b.stamp.seed);
    if let Some(s) = &b.dataset_summary {
        heading(&mut out, "Dataset summary", &s.config_hash, s.seed);
        let _ = writeln!(out, "{:<10} {:>6} {:>8} {:>9} {:>9} {:>8}", "group", "users", "posts", "mean", "sd", "median");
        for r in &s.content.posts.rows {
            let g = r.group.map_or("Total", |g| g.label());
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>8} {:>9.2} {:>9.2} {:>8.1}",
                g, r.users, r.posts, r.mean_posts, r.sd_posts, r.median_posts
            );
        }
        for (name, c) in [("All-data", &s.content.all_days), ("Pre-diagnosis", &s.content.pre_days)] {
            let _ = writeln!(
                out,
                "{name} user-days: {} ({:.1}% depressed)",
                c.observations,
                100.0 * c.depressed_share
            );
        }
        let _ = writeln!(out, "Excluded participants: {}", s.content.excluded.len());
    }
    if let Some(s) = &b.bayesian {
        heading(&mut out, "Bayesian logistic regression", &s.config_hash, s.seed);
        for (d, post) in &s.content {
            let _ = writeln!(out, "{} model ({} chains x {} draws)", d.title(), post.chains, post.draws_per_chain);
            let _ = writeln!(
                out,
                "{:<16} {:>9} {:>8} {:>8} {:>9} {:>9} {:>6} {:>7}",
                "parameter", "mean", "sd", "odds", "hpd95_lo", "hpd95_hi", "excl", "rhat"
            );
            for q in &post.params {
                let h95 = q.hpd.iter().find(|h| (h.level - 0.95).abs() < 1e-9);
                let _ = writeln!(
                    out,
                    "{:<16} {:>9.4} {:>8.4} {:>8.3} {:>9} {:>9} {:>6} {:>7}",
                    q.name,
                    q.mean,
                    q.sd,
                    q.odds,
                    opt(h95.map(|h| h.lo), 4),
                    opt(h95.map(|h| h.hi), 4),
                    opt(q.exclusion.map(|e| e.level), 2),
                    opt(q.rhat, 3)
                );
            }
        }
    }
    if let Some(s) = &b.frequentist {
        heading(&mut out, "Frequentist logistic regression", &s.config_hash, s.seed);
        for (d, f) in &s.content {
            let _ = writeln!(
                out,
                "{} model: n = {}, log-likelihood {:.3}, pseudo R2 {:.4}, LLR p {:.3e}{}",
                d.title(),
                f.n_obs,
                f.log_likelihood,
                f.pseudo_r2,
                f.llr_p_value,
                if f.converged { "" } else { " (not converged)" }
            );
            let _ = writeln!(
                out,
                "{:<16} {:>9} {:>8} {:>8} {:>9} {:>9} {:>9}",
                "parameter", "coef", "se", "z", "p", "ci_lo", "ci_hi"
            );
            for j in 0..f.names.len() {
                let _ = writeln!(
                    out,
                    "{:<16} {:>9.4} {:>8.4} {:>8.3} {:>9.3e} {:>9.4} {:>9.4}",
                    f.names[j], f.coef[j], f.std_err[j], f.z[j], f.p_value[j], f.ci_low[j], f.ci_high[j]
                );
            }
        }
    }
    if let Some(s) = &b.bayes_factors {
        heading(&mut out, "Bayes factors against the intercept-only model", &s.config_hash, s.seed);
        let _ = writeln!(out, "{:<14} {:>12} {:>12} {:<24} {:>8}", "model", "log K", "K", "evidence", "PPC p");
        for (d, e) in &s.content {
            let _ = writeln!(
                out,
                "{:<14} {:>12.3} {:>12.4e} {:<24} {:>8.3}",
                d.title(),
                e.bayes_factor.log_k,
                e.bayes_factor.k,
                e.bayes_factor.label,
                e.ppc.p_value
            );
        }
    }
    if let Some(s) = &b.classifier {
        heading(&mut out, "Random forest accuracy", &s.config_hash, s.seed);
        let _ = write!(out, "{:<12} {:>9}", "metric", "GP mu");
        for d in s.content.keys() {
            let _ = write!(out, " {:>20}", format!("{} mu (sd)", d.title()));
        }
        let _ = writeln!(out);
        for (k, bench) in BenchmarkConstants::GENERAL_PRACTITIONER.values().iter().enumerate() {
            let name = crate::forest::METRIC_NAMES[k];
            let _ = write!(out, "{name:<12} {bench:>9.3}");
            for c in s.content.values() {
                let st = &c.runs.stats[k];
                let _ = write!(out, " {:>20}", format!("{} ({})", opt(st.mean, 3), opt(st.sd, 3)));
            }
            let _ = writeln!(out);
        }
        for (d, c) in &s.content {
            let depth = c.best.max_depth.map_or("none".to_string(), |v| v.to_string());
            let _ = writeln!(
                out,
                "{}: {} trees, max_depth {depth}, min_samples_split {}, min_samples_leaf {}, max_features {}{}",
                d.title(),
                c.best.n_estimators,
                c.best.min_samples_split,
                c.best.min_samples_leaf,
                c.best.max_features,
                c.grid_size.map_or(" (fixed)".to_string(), |g| format!(" (best of {g})"))
            );
            for w in &c.warnings {
                let _ = writeln!(out, "  note: {w}");
            }
        }
        let _ = writeln!(out, "GP: general practitioners' unassisted diagnostic accuracy, for comparison only.");
    }
    if let Some(s) = &b.filters {
        heading(&mut out, "Filter usage", &s.config_hash, s.seed);
        for (name, a) in [("All-data", &s.content.all), ("Pre-diagnosis", &s.content.pre)] {
            let t = &a.test;
            let _ = writeln!(out, "{name}: chi2 = {:.3}, df = {}, p = {:.3e}", t.statistic, t.df, t.p_value);
            let _ = writeln!(out, "  {:<14} {:>12} {:>12}", "filter", "depressed", "healthy");
            for (i, f) in t.row_labels.iter().enumerate() {
                let _ = writeln!(out, "  {:<14} {:>+12.2} {:>+12.2}", f, t.differences[i][0], t.differences[i][1]);
            }
        }
        let _ = writeln!(out, "(observed minus expected post counts)");
    }
    if let Some(s) = &b.correlations {
        heading(&mut out, "Pearson correlations", &s.config_hash, s.seed);
        for (name, m) in [("All-data", &s.content.all), ("Pre-diagnosis", &s.content.pre)] {
            let _ = writeln!(out, "{name}");
            let _ = write!(out, "{:<16}", "");
            for n in &m.names {
                let _ = write!(out, " {:>7}", &n[..n.len().min(7)]);
            }
            let _ = writeln!(out);
            for (i, row) in m.cells.iter().enumerate() {
                let _ = write!(out, "{:<16}", m.names[i]);
                for c in row {
                    let _ = write!(out, " {:>7.3}", c.r);
                }
                let _ = writeln!(out);
            }
        }
        if let Some(block) = &s.content.ratings_vs_computational {
            let _ = writeln!(out, "Ratings against computational features");
            let _ = write!(out, "{:<16}", "");
            for n in &block.cols {
                let _ = write!(out, " {:>7}", &n[..n.len().min(7)]);
            }
            let _ = writeln!(out);
            for (i, row) in block.cells.iter().enumerate() {
                let _ = write!(out, "{:<16}", block.rows[i]);
                for c in row {
                    let _ = write!(out, " {:>7.3}", c.r);
                }
                let _ = writeln!(out);
            }
        }
        if !s.content.dropped_columns.is_empty() {
            let _ = writeln!(out, "constant columns left out: {}", s.content.dropped_columns.join(", "));
        }
    }
    if let Some(s) = &b.agreement {
        heading(&mut out, "Inter-rater agreement", &s.config_hash, s.seed);
        let a = &s.content;
        let _ = writeln!(out, "{} photos, {} folds, {} photos with fewer than two raters", a.photos, a.folds, a.excluded);
        for c in &a.categories {
            let _ = writeln!(out, "{:<12} r = {:.3}  p = {:.3e}", c.category, c.r, c.p_value);
        }
    }
    if !b.missing.is_empty() || !b.warnings.is_empty() {
        let _ = writeln!(out, "\n== Warnings ==");
        for w in &b.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}
