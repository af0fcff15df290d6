//! One function per subcommand. Each returns the summary to print; files
//! are only written when the whole command succeeds.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use log::warn;
use profile_fcm::drift::{
    green_progress, membership_trajectory, monthly_profiles, write_drift_report, write_drift_summary, PeriodProfile,
};
use profile_fcm::fcm::{
    check_row, membership_of, read_memberships, read_model, run_fcm, write_memberships, write_model, ClusterModel,
    FuzzyPartition, MembershipTable, ProfileMatrix, RunMetadata,
};
use profile_fcm::ingest::{build_profiles, parse_readings, read_profiles, write_profiles, DailyProfile};
use profile_fcm::tariff::{
    blend_tariff, estimate_bill, rank_households, read_offers, read_usage, write_bills, write_ranking, write_tariffs,
    MEMBERSHIP_SUM_TOLERANCE,
};
use profile_fcm::Matrix;

use crate::config::{optional_input, required, RunConfig};
use crate::output::OutputBatch;
use crate::plot::{clusters_at_or_above, render_centroid_curves, render_membership_bars};
use crate::CliError;

pub const MODEL_FILE: &str = "model.csv";
pub const MEMBERSHIPS_FILE: &str = "memberships.csv";
pub const METADATA_FILE: &str = "run.json";
pub const CENTROID_CURVES_FILE: &str = "centroids_long.csv";
pub const MEMBERSHIP_BARS_FILE: &str = "membership_bars.csv";

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn render<E, F>(write: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), E>,
    CliError: From<E>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn load_profiles(path: &Path) -> Result<Vec<DailyProfile>, CliError> {
    read_profiles(open(path)?).map_err(|e| CliError::from(e).in_file(path))
}

/// Loads `model.csv` and `run.json` from a `cluster` output directory.
pub fn load_model(dir: &Path) -> Result<ClusterModel, CliError> {
    let meta_path = dir.join(METADATA_FILE);
    let model_path = dir.join(MODEL_FILE);
    let text = std::fs::read_to_string(&meta_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", meta_path.display())))?;
    let meta = RunMetadata::from_json(&text).map_err(|e| CliError::Data(e.to_string()).in_file(&meta_path))?;
    read_model(open(&model_path)?, &meta).map_err(|e| CliError::Data(e.to_string()).in_file(&model_path))
}

fn check_model_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    let dir = required(&cfg.model, "model", true)?;
    for name in [MODEL_FILE, METADATA_FILE] {
        if !dir.join(name).exists() {
            return Err(CliError::Usage(format!("--model {} has no {name}", dir.display())));
        }
    }
    Ok(dir)
}

/// readings CSV → profiles CSV for one segment.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<String, CliError> {
    let input = required(&cfg.input, "in", true)?;
    let out = required(&cfg.output, "out", false)?;
    let spec = cfg.segment_spec()?;

    let readings = parse_readings(open(input)?).map_err(|e| CliError::from(e).in_file(input))?;
    let set = build_profiles(&readings, &spec)?;

    let mut batch = OutputBatch::new();
    batch.add(out, render(|w| write_profiles(w, &set.profiles))?);
    batch.commit()?;

    let mut msg = format!(
        "{}: retained {} households, excluded {}",
        spec.segment,
        set.profiles.len(),
        set.excluded.len()
    );
    for e in &set.excluded {
        msg.push_str(&format!("\nexcluded {}: {}", e.household_id, e.reason));
    }
    Ok(msg)
}

/// profiles CSV → model CSV, membership CSV and run metadata in `--out`.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<String, CliError> {
    let input = required(&cfg.input, "in", true)?;
    let out = required(&cfg.output, "out", false)?;
    let fcm = cfg.fcm_config()?;

    let profiles = load_profiles(input)?;
    if let Some(first) = profiles.first() {
        if let Some(other) = profiles.iter().find(|p| p.segment != first.segment) {
            return Err(CliError::Data(format!(
                "{} mixes segments ({} and {})",
                input.display(),
                first.segment,
                other.segment
            )));
        }
    }
    let x = ProfileMatrix::from_profiles(&profiles)?;
    let (model, u) = run_fcm(&x, &fcm)?;
    if !model.converged {
        warn!("FCM stopped after {} iterations without converging", model.iterations);
    }
    if !model.empty_clusters.is_empty() {
        warn!("clusters with no weight: {:?}", model.empty_clusters);
    }

    let table = MembershipTable::new(x.household_ids().to_vec(), &u);
    let meta = RunMetadata::new(&fcm, &model);
    let mut batch = OutputBatch::new();
    batch.add(out.join(MODEL_FILE), render(|w| write_model(w, &model))?);
    batch.add(out.join(MEMBERSHIPS_FILE), render(|w| write_memberships(w, &table))?);
    batch.add(out.join(METADATA_FILE), meta.to_json().into_bytes());
    batch.commit()?;

    Ok(format!(
        "clustered {} households into {} clusters: {} iterations, converged={}, objective={}",
        x.len(),
        fcm.clusters,
        model.iterations,
        model.converged,
        model.objective
    ))
}

/// profiles CSV + saved model → membership CSV.
pub fn cmd_assign(cfg: &RunConfig) -> Result<String, CliError> {
    let dir = check_model_dir(cfg)?;
    let input = required(&cfg.input, "in", true)?;
    let out = required(&cfg.output, "out", false)?;

    let model = load_model(dir)?;
    let profiles = load_profiles(input)?;
    let mut rows = Vec::with_capacity(profiles.len());
    for p in &profiles {
        rows.push(membership_of(&p.values, &model)?);
    }
    let table = MembershipTable {
        household_ids: profiles.iter().map(|p| p.household_id.clone()).collect(),
        memberships: Matrix::from_rows(&rows, model.clusters()).expect("one entry per centroid"),
    };

    let mut batch = OutputBatch::new();
    batch.add(out, render(|w| write_memberships(w, &table))?);
    batch.commit()?;
    Ok(format!(
        "assigned {} profiles against {} clusters",
        profiles.len(),
        model.clusters()
    ))
}

/// Renormalizes each membership row after checking it sums to 1 within the
/// input tolerance.
fn stochastic_rows(table: &MembershipTable) -> Result<FuzzyPartition, CliError> {
    let mut m = table.memberships.clone();
    for k in 0..m.rows() {
        check_row(m.row(k), MEMBERSHIP_SUM_TOLERANCE)
            .map_err(|e| CliError::Data(format!("household {}: {e}", table.household_ids[k])))?;
        let sum: f64 = m.row(k).iter().sum();
        m.row_mut(k).iter_mut().for_each(|v| *v /= sum);
    }
    FuzzyPartition::new(m).map_err(CliError::from)
}

/// memberships CSV + offer set → personal tariffs, plus optional bills and
/// a cluster campaign ranking.
pub fn cmd_tariff(cfg: &RunConfig) -> Result<String, CliError> {
    let input = required(&cfg.input, "in", true)?;
    let offers_path = required(&cfg.offers, "offers", true)?;
    let out = required(&cfg.output, "out", false)?;
    let usage_path = optional_input(&cfg.usage, "usage")?;
    if usage_path.is_some() != cfg.bills.is_some() {
        return Err(CliError::Usage("--usage and --bills go together".into()));
    }
    if cfg.rank_cluster.is_some() != cfg.ranking.is_some() {
        return Err(CliError::Usage("--rank-cluster and --ranking go together".into()));
    }

    let table = read_memberships(open(input)?).map_err(|e| CliError::from(e).in_file(input))?;
    let offers = read_offers(open(offers_path)?).map_err(|e| CliError::from(e).in_file(offers_path))?;

    let mut tariffs = Vec::with_capacity(table.household_ids.len());
    for (id, row) in table.household_ids.iter().zip(table.memberships.iter_rows()) {
        tariffs.push(blend_tariff(&offers, id, row).map_err(|e| CliError::Data(format!("household {id}: {e}")))?);
    }

    let mut batch = OutputBatch::new();
    batch.add(out, render(|w| write_tariffs(w, &tariffs))?);
    let mut msg = format!("blended {} personal tariffs from {} offers", tariffs.len(), offers.clusters());

    if let (Some(usage_path), Some(bills_path)) = (usage_path, cfg.bills.as_deref()) {
        let usage = read_usage(open(usage_path)?).map_err(|e| CliError::from(e).in_file(usage_path))?;
        let by_id: BTreeMap<&str, _> = tariffs.iter().map(|t| (t.household_id.as_str(), t)).collect();
        let mut bills = Vec::with_capacity(usage.len());
        for (id, day) in &usage {
            let tariff = by_id
                .get(id.as_str())
                .ok_or_else(|| CliError::Data(format!("usage for unknown household {id}")))?;
            let amount = estimate_bill(day, tariff).map_err(|e| CliError::Data(format!("household {id}: {e}")))?;
            bills.push((id.clone(), amount));
        }
        batch.add(bills_path, render(|w| write_bills(w, &bills))?);
        msg.push_str(&format!("\nestimated {} bills", bills.len()));
    }

    if let (Some(cluster), Some(ranking_path)) = (cfg.rank_cluster, cfg.ranking.as_deref()) {
        let partition = stochastic_rows(&table)?;
        let ranked = rank_households(
            &partition,
            &table.household_ids,
            cluster,
            cfg.min_membership.unwrap_or(0.0),
        )?;
        batch.add(ranking_path, render(|w| write_ranking(w, &ranked))?);
        msg.push_str(&format!("\nranked {} households for cluster {cluster}", ranked.len()));
    }

    batch.commit()?;
    Ok(msg)
}

/// readings CSV + saved model → per-month drift report toward `--target`.
pub fn cmd_drift(cfg: &RunConfig) -> Result<String, CliError> {
    let dir = check_model_dir(cfg)?;
    let input = required(&cfg.input, "in", true)?;
    let out = required(&cfg.output, "out", false)?;
    let target = cfg.target.ok_or_else(|| CliError::Usage("missing --target".into()))?;
    let spec = cfg.segment_spec()?;

    let model = load_model(dir)?;
    if target >= model.clusters() {
        return Err(CliError::Usage(format!(
            "target cluster {target} out of range for {} clusters",
            model.clusters()
        )));
    }
    let readings = parse_readings(open(input)?).map_err(|e| CliError::from(e).in_file(input))?;
    let (periods, excluded) = monthly_profiles(&readings, &spec)?;

    let mut by_household: BTreeMap<String, Vec<PeriodProfile>> = BTreeMap::new();
    for p in periods {
        by_household.entry(p.household_id.clone()).or_default().push(p);
    }
    let mut reports = Vec::with_capacity(by_household.len());
    for (id, periods) in &by_household {
        let trajectory = membership_trajectory(periods, &model)?;
        reports.push(green_progress(id, &trajectory, target)?);
    }

    let mut batch = OutputBatch::new();
    batch.add(out, render(|w| write_drift_report(w, model.clusters(), &reports))?);
    if let Some(summary) = cfg.summary.as_deref() {
        batch.add(summary, render(|w| write_drift_summary(w, &reports))?);
    }
    batch.commit()?;
    Ok(format!(
        "tracked {} households toward cluster {target} ({}); {} household-months without a complete day",
        reports.len(),
        spec.segment,
        excluded.len()
    ))
}

/// Saved model (+ optional household memberships) → plot-data CSVs in `--out`.
pub fn cmd_export_plot(cfg: &RunConfig) -> Result<String, CliError> {
    let dir = check_model_dir(cfg)?;
    let out = required(&cfg.output, "out", false)?;
    let memberships = optional_input(&cfg.memberships, "memberships")?;
    let threshold = cfg.display_threshold()?;
    if cfg.household.is_some() && memberships.is_none() {
        return Err(CliError::Usage("--household needs --memberships".into()));
    }

    let model = load_model(dir)?;
    let mut batch = OutputBatch::new();
    batch.add(out.join(CENTROID_CURVES_FILE), render_centroid_curves(&model));
    let mut msg = format!("exported {} centroid curves", model.clusters());

    if let Some(path) = memberships {
        let table = read_memberships(open(path)?).map_err(|e| CliError::from(e).in_file(path))?;
        let household = match &cfg.household {
            Some(h) => h.clone(),
            None => table
                .household_ids
                .first()
                .cloned()
                .ok_or_else(|| CliError::Data(format!("{} has no households", path.display())))?,
        };
        let row = table
            .row_of(&household)
            .ok_or_else(|| CliError::Data(format!("household {household} not in {}", path.display())))?;
        batch.add(out.join(MEMBERSHIP_BARS_FILE), render_membership_bars(row));
        msg.push_str(&format!(
            "\nhousehold {household} is a member of {} clusters at or above {threshold}",
            clusters_at_or_above(row, threshold)
        ));
    }
    batch.commit()?;
    Ok(msg)
}
