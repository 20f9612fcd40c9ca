//! The end-to-end pipeline behind the CLI subcommands.
//!
//! `synth` runs: group recoding, budgeted attribute compression, marginal
//! computation, noise planning and addition, consistency and non-negativity,
//! synthesis, and expansion back to the original domain. It writes three
//! artifacts: the synthetic CSV, the noisy-marginal archive, and a manifest
//! recording every parameter so a run can be reproduced bit-exactly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use privtab::consistency::{enforce_consistency, nonneg_consistent};
use privtab::domain::{load_csv, load_domain, Domain};
use privtab::engineering::{
    compress_attribute, expand_compressed, group_recode, indif_matrix, threshold, GroupDecodeMap,
    MarginalConfig, RecodeMap,
};
use privtab::error::{Error, Result};
use privtab::evaluation::{density_score, gini_gender_score, range_query_score, ScoreReport};
use privtab::marginal::{compute_marginal, MarginalRecord, MarginalSchema, MarginalTable};
use privtab::privacy::{add_noise, plan_noise, strategy_stds, NoisePlan, PrivacyParams, Strategy};
use privtab::synthesis::synthesize;

use crate::config::RunConfig;

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("stage {name}: {other}")),
    })
}

/// Paths of the three artifacts written by a synthesis run.
#[derive(Debug, Clone)]
pub struct SynthArtifacts {
    pub synthetic_csv: PathBuf,
    pub marginal_archive: PathBuf,
    pub manifest: PathBuf,
}

#[derive(Debug, Serialize)]
struct StageAccounting {
    k: usize,
    epsilon: f64,
    delta: f64,
    strategy: Strategy,
    per_marginal_std: f64,
    flagged: bool,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool: String,
    version: String,
    data: PathBuf,
    domain: PathBuf,
    config: PathBuf,
    records: usize,
    attributes: usize,
    epsilon: f64,
    delta: f64,
    neighboring: privtab::privacy::Neighboring,
    seed: u64,
    synthesis: privtab::synthesis::SynthesisConfig,
    compress_budget_fraction: f64,
    group_recodes: Vec<Vec<String>>,
    compress_thresholds: BTreeMap<String, f64>,
    compress_stage: Option<StageAccounting>,
    main_stage: StageAccounting,
    marginals: Vec<Vec<String>>,
}

fn schema_from_names(domain: &Domain, names: &[String]) -> Result<MarginalSchema> {
    let attrs: Vec<usize> = names
        .iter()
        .map(|n| {
            domain
                .attr_index(n)
                .ok_or_else(|| Error::InvalidInput(format!("unknown attribute {n:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    MarginalSchema::new(attrs)
}

/// Archive document: the working domain the marginals were published
/// against, plus the noisy tables themselves.
#[derive(Serialize, serde::Deserialize)]
pub struct MarginalArchive {
    pub attrs: Vec<privtab::domain::AttributeSpec>,
    pub marginals: Vec<MarginalRecord>,
}

/// Run the full synthesis pipeline and write the three artifacts into
/// `cfg.out`.
pub fn run_synth(cfg: &RunConfig) -> Result<SynthArtifacts> {
    cfg.validate()?;
    let domain = stage("load_domain", load_domain(&read_file(&cfg.domain)?))?;
    let data_text = read_file(&cfg.data)?;
    let mut dataset = stage("load_csv", load_csv(&data_text, &domain))?;
    let marginal_cfg = stage(
        "marginal_config",
        MarginalConfig::from_json(&read_file(&cfg.config)?),
    )?;
    let original_domain = domain.clone();
    let n = dataset.n();
    let params = PrivacyParams::new(cfg.epsilon, cfg.delta, cfg.neighboring)?;

    // group recoding first: combined attributes may then be compressed or
    // used in marginals under their combined name
    let mut group_decodes: Vec<GroupDecodeMap> = Vec::new();
    for group in &marginal_cfg.group_recode {
        let attrs: Vec<usize> = group
            .iter()
            .map(|n| {
                dataset
                    .domain()
                    .attr_index(n)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown attribute {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (recoded, _, decode) = stage("group_recode", group_recode(&dataset, &attrs))?;
        dataset = recoded;
        group_decodes.push(decode);
    }

    // compression stage: spend a slice of the budget on one-way marginals,
    // threshold them, and recode the dataset into the compressed domain
    let mut recode_maps: Vec<RecodeMap> = Vec::new();
    let mut compress_thresholds = BTreeMap::new();
    let mut compress_accounting = None;
    let main_params = if marginal_cfg.compress.is_empty() {
        params
    } else {
        let (compress_params, main_params) = params.split(cfg.compress_budget_fraction)?;
        let k_c = marginal_cfg.compress.len();
        let plan = stage("plan_noise", plan_noise(&compress_params, k_c))?;
        for (name, spec) in &marginal_cfg.compress {
            let attr = dataset
                .domain()
                .attr_index(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown attribute {name:?}")))?;
            let one_way = compute_marginal(&dataset, &MarginalSchema::new([attr])?)?;
            let noisy = add_noise(&one_way, plan.per_marginal_std, plan.distribution, cfg.seed)?;
            let theta = threshold(spec.rule, plan.per_marginal_std);
            compress_thresholds.insert(name.clone(), theta);
            let map = stage(
                "compress_attribute",
                compress_attribute(&noisy, theta, dataset.domain()),
            )?;
            dataset = map.apply(&dataset)?;
            recode_maps.push(map);
        }
        compress_accounting = Some(StageAccounting {
            k: k_c,
            epsilon: compress_params.epsilon,
            delta: compress_params.delta,
            strategy: plan.strategy,
            per_marginal_std: plan.per_marginal_std,
            flagged: plan.flagged,
        });
        main_params
    };

    // main marginals: compute, plan, noise
    if marginal_cfg.marginals.is_empty() {
        return Err(Error::InvalidInput(
            "marginal config lists no marginals".into(),
        ));
    }
    let working_domain = dataset.domain().clone();
    let schemas: Vec<MarginalSchema> = marginal_cfg
        .marginals
        .iter()
        .map(|names| schema_from_names(&working_domain, names))
        .collect::<Result<_>>()?;
    let k = schemas.len();
    let plan: NoisePlan = stage("plan_noise", plan_noise(&main_params, k))?;
    let mut noisy: Vec<MarginalTable> = schemas
        .iter()
        .map(|s| {
            let table = compute_marginal(&dataset, s)?;
            add_noise(&table, plan.per_marginal_std, plan.distribution, cfg.seed)
        })
        .collect::<Result<_>>()?;

    // archive the marginals exactly as published, before post-processing
    let archive = MarginalArchive {
        attrs: working_domain.attributes().to_vec(),
        marginals: noisy
            .iter()
            .map(|t| MarginalRecord::from_table(t, &working_domain))
            .collect(),
    };

    // post-process into a consistent, non-negative, n-scaled target set
    stage("enforce_consistency", enforce_consistency(&mut noisy).map(|_| ()))?;
    stage("nonneg_consistent", nonneg_consistent(&mut noisy).map(|_| ()))?;
    let targets: Vec<MarginalTable> = noisy
        .iter()
        .map(|t| t.scale_to_total(n as f64))
        .collect::<Result<_>>()?;

    let mut synth = stage(
        "synthesize",
        synthesize(&targets, &working_domain, n, &cfg.synthesis_config()),
    )?;

    // back to the original domain: undo compression, then group recoding
    for map in recode_maps.iter().rev() {
        synth = stage("expand_compressed", expand_compressed(&synth, map, cfg.seed))?;
    }
    for decode in group_decodes.iter().rev() {
        synth = stage("group_decode", decode.decode(&synth))?;
    }
    debug_assert_eq!(synth.domain(), &original_domain);

    let manifest = Manifest {
        tool: "privtab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        data: cfg.data.clone(),
        domain: cfg.domain.clone(),
        config: cfg.config.clone(),
        records: n,
        attributes: original_domain.d(),
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        neighboring: cfg.neighboring,
        seed: cfg.seed,
        synthesis: cfg.synthesis_config(),
        compress_budget_fraction: cfg.compress_budget_fraction,
        group_recodes: marginal_cfg.group_recode.clone(),
        compress_thresholds,
        compress_stage: compress_accounting,
        main_stage: StageAccounting {
            k,
            epsilon: main_params.epsilon,
            delta: main_params.delta,
            strategy: plan.strategy,
            per_marginal_std: plan.per_marginal_std,
            flagged: plan.flagged,
        },
        marginals: marginal_cfg.marginals.clone(),
    };

    std::fs::create_dir_all(&cfg.out).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", cfg.out.display()),
        ))
    })?;
    let artifacts = SynthArtifacts {
        synthetic_csv: cfg.out.join("synthetic.csv"),
        marginal_archive: cfg.out.join("marginals.json"),
        manifest: cfg.out.join("manifest.json"),
    };
    write_file(&artifacts.synthetic_csv, &synth.to_csv_string()?)?;
    write_file(
        &artifacts.marginal_archive,
        &serde_json::to_string_pretty(&archive)?,
    )?;
    write_file(&artifacts.manifest, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(artifacts)
}

/// Evaluation options for `eval`.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub trials: usize,
    pub seed: u64,
    /// City, sex, and income attribute names for the Gini / pay-gap metric.
    pub gini_attrs: Option<(String, String, String)>,
}

/// Score a synthetic CSV against the original; returns the report to emit.
pub fn run_eval(
    orig_path: &Path,
    synth_path: &Path,
    domain_path: &Path,
    opts: &EvalOptions,
) -> Result<ScoreReport> {
    let domain = load_domain(&read_file(domain_path)?)?;
    let orig = load_csv(&read_file(orig_path)?, &domain)?;
    let synth = load_csv(&read_file(synth_path)?, &domain)?;
    let density = density_score(
        &orig,
        &synth,
        opts.trials,
        privtab::evaluation::DEFAULT_ARITY,
        opts.seed,
    )?;
    let range = range_query_score(&orig, &synth, opts.trials, opts.seed)?;
    let (gini_gap, skipped_cities) = match &opts.gini_attrs {
        None => (None, None),
        Some((city, sex, income)) => {
            let resolve = |name: &str| {
                domain
                    .attr_index(name)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown attribute {name:?}")))
            };
            let report = gini_gender_score(
                &orig,
                &synth,
                resolve(city)?,
                resolve(sex)?,
                resolve(income)?,
            )?;
            (Some(report.score), Some(report.skipped_cities))
        }
    };
    Ok(ScoreReport {
        density,
        range,
        gini_gap,
        trials: opts.trials,
        seed: opts.seed,
        skipped_cities,
    })
}

/// CSV table of the five per-marginal noise stds for k = 1..=k_max, plus
/// the chosen strategy per row.
pub fn run_noise_plan(params: &PrivacyParams, k_max: usize) -> Result<String> {
    let mut out = String::from(
        "k,std_lap_basic,std_lap_adv,std_lap_zcdp,std_gauss_adv,std_gauss_zcdp,chosen\n",
    );
    for k in 1..=k_max {
        let stds = strategy_stds(params, k)?;
        let plan = plan_noise(params, k)?;
        let cell = |s: Option<f64>| s.map_or(String::new(), |v| format!("{v}"));
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            k,
            cell(stds[0].1),
            cell(stds[1].1),
            cell(stds[2].1),
            cell(stds[3].1),
            cell(stds[4].1),
            plan.strategy
        ));
    }
    Ok(out)
}

/// CSV of pairwise correlation scores, highest first.
pub fn run_indif(data_path: &Path, domain_path: &Path) -> Result<String> {
    let domain = load_domain(&read_file(domain_path)?)?;
    let dataset = load_csv(&read_file(data_path)?, &domain)?;
    let scores = indif_matrix(&dataset)?;
    let mut out = String::from("attr_a,attr_b,indif\n");
    for s in scores {
        out.push_str(&format!(
            "{},{},{}\n",
            domain.attr(s.pair.0).name,
            domain.attr(s.pair.1).name,
            s.value
        ));
    }
    Ok(out)
}

/// Human-readable dump of a marginal archive.
pub fn run_inspect(archive_path: &Path) -> Result<String> {
    let archive: MarginalArchive = serde_json::from_str(&read_file(archive_path)?)?;
    let mut out = String::new();
    out.push_str(&format!(
        "domain: {} attributes\n",
        archive.attrs.len()
    ));
    for rec in &archive.marginals {
        let cells: usize = rec.sizes.iter().product();
        let total: f64 = rec.counts.iter().sum();
        out.push_str(&format!(
            "marginal {}: {} cells, total {:.3}, noise_std {}\n",
            rec.schema.join("*"),
            cells,
            total,
            rec.noise_std
                .map_or("none".to_string(), |s| format!("{s:.4}")),
        ));
    }
    Ok(out)
}
