//! The `snuggle` operator command.
//!
//! Every subcommand writes to a caller-supplied sink so the command can be
//! driven from tests as well as from `main`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use snuggle_core::analytics::{paired_ttest, plan_metrics, stats_report, PairedTTest, StatsReport};
use snuggle_core::pool::PoolMember;
use snuggle_core::seed::{import_seed, SeedCorpus};
use snuggle_core::{Decision, QuestionnaireSchema, RecordId, Store};

#[derive(Debug, Parser)]
#[command(name = "snuggle", version, about = "Operator tooling for the sensemaking service")]
pub struct Cli {
    /// Data directory of the record store.
    #[arg(long, global = true, default_value = "data")]
    pub data_dir: PathBuf,
    /// Machine-readable output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Seed corpus import and export.
    Seed {
        #[command(subcommand)]
        action: SeedAction,
    },
    /// Category tabulation and plan metrics over recommendable records.
    Stats,
    /// Two-tailed paired t-test on two single-column CSV files.
    Ttest { a: PathBuf, b: PathBuf },
    /// Moderation queue.
    Moderate {
        #[command(subcommand)]
        action: ModerateAction,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "snuggle.toml")]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SeedAction {
    Import {
        path: PathBuf,
        /// Accept categories outside the built-in taxonomy.
        #[arg(long)]
        allow_new_categories: bool,
    },
    /// Print recommendable records in seed format.
    Export,
}

#[derive(Debug, Subcommand)]
pub enum ModerateAction {
    List,
    Show { id: String },
    Approve {
        id: String,
        #[arg(long, default_value = "")]
        note: String,
    },
    Reject {
        id: String,
        #[arg(long, default_value = "")]
        note: String,
    },
}

pub fn open_store(dir: &Path) -> Result<Store> {
    Store::open(dir, Arc::new(QuestionnaireSchema::default_schema()))
        .with_context(|| format!("opening store at {}", dir.display()))
}

/// Reads one column of numbers. A non-numeric first row is taken as a header.
pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        let Some(cell) = row.get(0).filter(|c| !c.is_empty()) else { continue };
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if i == 0 => continue,
            _ => bail!("{}: row {}: `{cell}` is not a number", path.display(), i + 1),
        }
    }
    Ok(values)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Seed { action: SeedAction::Import { path, allow_new_categories } } => {
            let store = open_store(&cli.data_dir)?;
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let summary = import_seed(&store, &text, allow_new_categories)?;
            if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
            } else {
                writeln!(out, "imported {} survivors, {} items", summary.survivors, summary.items)?;
                for (category, n) in &summary.categories {
                    writeln!(out, "  {category}: {n}")?;
                }
            }
        }
        Command::Seed { action: SeedAction::Export } => {
            let store = open_store(&cli.data_dir)?;
            let records: Vec<_> = store.records().into_iter().filter(|r| r.is_recommendable()).collect();
            write!(out, "{}", SeedCorpus::from_records(&records).to_ndjson(store.schema()))?;
        }
        Command::Stats => {
            let store = open_store(&cli.data_dir)?;
            let records: Vec<_> = store.records().into_iter().filter(|r| r.is_recommendable()).collect();
            let report = stats_report(&records)?;
            let plans: Vec<_> = records.iter().map(|r| r.plan.clone()).collect();
            let metrics = plan_metrics(&plans)?;
            if cli.json {
                let body = json!({ "report": report, "plan_metrics": metrics });
                writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
            } else {
                write_report(out, &report)?;
                writeln!(
                    out,
                    "plans: {}  distinct stakeholders {:.2} (sd {:.2})  items {:.2} (sd {:.2})",
                    metrics.plans,
                    metrics.distinct_stakeholders.mean,
                    metrics.distinct_stakeholders.sd,
                    metrics.item_count.mean,
                    metrics.item_count.sd,
                )?;
            }
        }
        Command::Ttest { a, b } => {
            let result = paired_ttest(&read_sample(&a)?, &read_sample(&b)?)?;
            if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?;
            } else {
                write_ttest(out, &result)?;
            }
        }
        Command::Moderate { action } => moderate(&cli.data_dir, cli.json, action, out)?,
        Command::Serve { config } => {
            let config = snuggle_api::Config::load(&config)?;
            tokio::runtime::Runtime::new()?
                .block_on(snuggle_api::serve(config))
                .map_err(|e| anyhow::anyhow!(e))?;
        }
    }
    Ok(())
}

fn write_report(out: &mut dyn Write, report: &StatsReport) -> Result<()> {
    writeln!(out, "{} survivors, {} action items", report.survivors, report.total_items)?;
    for s in &report.stakeholders {
        writeln!(out, "{:<28} {:>4} {:>6.2}%", s.category, s.count, s.percentage)?;
        for a in &s.actions {
            writeln!(out, "  {:<40} {:>4} {:>6.2}%", a.category, a.count, a.percentage)?;
        }
    }
    Ok(())
}

fn write_ttest(out: &mut dyn Write, r: &PairedTTest) -> Result<()> {
    writeln!(out, "t = {:.4}, df = {}, p (two-tailed) = {:.4}", r.t, r.df, r.p_two_tailed)?;
    writeln!(out, "a: mean {:.4}, sd {:.4}", r.mean_a, r.sd_a)?;
    writeln!(out, "b: mean {:.4}, sd {:.4}", r.mean_b, r.sd_b)?;
    Ok(())
}

fn moderate(dir: &Path, as_json: bool, action: ModerateAction, out: &mut dyn Write) -> Result<()> {
    let store = open_store(dir)?;
    match action {
        ModerateAction::List => {
            let queue = store.pending_queue();
            if as_json {
                let ids: Vec<_> = queue.iter().map(|r| &r.id).collect();
                writeln!(out, "{}", serde_json::to_string(&ids)?)?;
            } else {
                writeln!(out, "{} pending", queue.len())?;
                for r in &queue {
                    writeln!(out, "{}  {}  {} items", r.id, r.created_at.to_rfc3339(), r.plan.items.len())?;
                }
            }
        }
        ModerateAction::Show { id } => {
            let id = RecordId(id);
            let record = store.get(&id).ok_or(snuggle_core::StoreError::UnknownRecord(id))?;
            // reviewers see the shareable part only
            let body = json!({
                "record_id": record.id,
                "moderation": record.moderation,
                "profile": record.profile.to_labels(store.schema()),
                "items": PoolMember::from_record(&record, String::new()).items,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&body)?)?;
        }
        ModerateAction::Approve { id, note } => decide(&store, id, Decision::Approved, &note, out)?,
        ModerateAction::Reject { id, note } => decide(&store, id, Decision::Rejected, &note, out)?,
    }
    Ok(())
}

fn decide(store: &Store, id: String, decision: Decision, note: &str, out: &mut dyn Write) -> Result<()> {
    let d = store.decide_moderation(&RecordId(id), decision, note)?;
    writeln!(out, "{} {:?}", d.record_id, d.decision)?;
    Ok(())
}
