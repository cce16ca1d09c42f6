use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fairlens", version, about = "Fairness audits for multilingual image-text embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Similarity-gap vs. caption-distance audit over image/caption pairs.
    AuditIndividual(IndividualArgs),
    /// Zero-shot classification followed by the per-language group audit.
    AuditGroup(GroupArgs),
    /// Randomized verification of the fairness bounds.
    VerifyTheory(TheoryArgs),
}

#[derive(Debug, Args)]
pub struct IndividualArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "en")]
    pub lang_a: String,
    #[arg(long, default_value = "de")]
    pub lang_b: String,
    /// Pair every caption set with a shuffled image, using this seed.
    #[arg(long, value_name = "SEED")]
    pub shuffle: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GroupArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Prompt spec (`prompts.json`).
    #[arg(long)]
    pub prompts: PathBuf,
    /// Prompt embeddings, ids of the form `<lang>/<label>`.
    #[arg(long)]
    pub prompt_embeddings: PathBuf,
    /// Languages to evaluate; defaults to every language in the prompt spec.
    #[arg(long, value_delimiter = ',')]
    pub languages: Vec<String>,
    #[arg(long, default_value = "en")]
    pub pivot: String,
    /// Protected-group dimensions to audit; defaults to the whole taxonomy.
    #[arg(long, value_delimiter = ',')]
    pub group_dims: Vec<String>,
    /// Split disparities by the values of this dimension (e.g. `race`).
    #[arg(long)]
    pub stratify_by: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Inclusive dimension range, `MIN-MAX`.
    #[arg(long, default_value = "2-512", value_parser = parse_dims)]
    pub dims: (usize, usize),
    /// Ball radius as a fraction of ‖t‖, `LO-HI` with 0 <= LO < HI < 1.
    #[arg(long, default_value = "0.01-0.99", value_parser = parse_rho)]
    pub rho_range: (f64, f64),
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn split_range(s: &str) -> Result<(&str, &str), String> {
    s.split_once('-').ok_or_else(|| format!("expected MIN-MAX, got `{s}`"))
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = split_range(s)?;
    let lo: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= MIN <= MAX, got {lo}-{hi}"));
    }
    Ok((lo, hi))
}

fn parse_rho(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = split_range(s)?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(0.0 <= lo && lo < hi && hi < 1.0) {
        return Err(format!("need 0 <= LO < HI < 1, got {lo}-{hi}"));
    }
    Ok((lo, hi))
}
