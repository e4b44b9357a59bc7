//! Command-line frontend tying the toolkit modules into reproducible
//! pipelines. Exit codes: 0 ok, 1 data error, 2 usage error.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use sorani_speech::corpus_designer::{
    select_sentences, CandidateSentence, DesignParams,
};
use sorani_speech::diphone_stats::{diphone_counts, DiphoneDistribution, PhoneStreamItem};
use sorani_speech::g2p::g2p;
use sorani_speech::lexicon_builder::{
    build_lexicon, emit_lexicon, extract_frequent_tokens, parse_lexicon, parse_overrides,
    parse_variant_groups, EmitOptions, DEFAULT_VARIANT_GROUPS_TSV,
};
use sorani_speech::ngram_lm::{arpa_export, count_ngrams, estimate, perplexity};
use sorani_speech::normalizer::{
    apply_correction_table, normalize_unicode, parse_correction_table, standardize, tokenize,
    NormalizeOptions, RuleTable, StreamItem, DEFAULT_RULES_TSV,
};
use sorani_speech::pipeline::{
    emit_kaldi_datadir, ManifestEntry, PipelineConfig, UtteranceMeta,
};
use sorani_speech::scorer::{per_topic_report, ScoredUtterance};
use sorani_speech::script_model::ScriptModel;
use sorani_speech::{ConstraintSet, Scalar};

#[derive(Parser)]
#[command(
    name = "sorani-speech",
    version,
    about = "Central Kurdish speech-resource toolkit"
)]
struct Cli {
    /// Key=value configuration file; SORANI_* environment variables
    /// override individual keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize and standardize a text corpus, one sentence per line.
    Normalize {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Convert words (one per line) to phoneme strings.
    G2p {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Di-phone frequency statistics over a normalized corpus.
    Stats {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Select a phonetically balanced sentence set from a pool.
    Design {
        /// Candidate pool, one sentence per line.
        #[arg(long, short)]
        input: PathBuf,
        /// Target di-phone distribution (stats TSV).
        #[arg(long)]
        target: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Build a pronunciation lexicon from a corpus.
    Lexicon {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Optional manual override file (surface TAB keep|drop|replace).
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Estimate a back-off n-gram model and export it as ARPA.
    Lm {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Closed vocabulary: a lexicon file; words outside it map to
        /// the unknown marker.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Optional held-out text to report perplexity on.
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Score hypotheses: TSV utt_id TAB topic TAB ref TAB hyp.
    Score {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Emit a Kaldi data directory from a recording manifest
    /// (TSV audio_path TAB filename_stem TAB transcript).
    KaldiPrep {
        #[arg(long, short)]
        input: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        output: PathBuf,
    },
}

struct Context_ {
    config: PipelineConfig,
    model: &'static ScriptModel,
    rules: RuleTable,
    constraints: ConstraintSet,
    corrections: BTreeMap<String, String>,
}

fn load_context(config_path: Option<&Path>) -> Result<Context_> {
    let mut config = match config_path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    config.apply_env()?;
    let rules = match &config.rules_path {
        Some(p) => RuleTable::parse(&fs::read_to_string(p)?)
            .with_context(|| format!("rule table {}", p))?,
        None => RuleTable::parse(DEFAULT_RULES_TSV)?,
    };
    let constraints = match &config.constraints_path {
        Some(p) => ConstraintSet::parse(&fs::read_to_string(p)?)
            .with_context(|| format!("constraint table {}", p))?,
        None => ConstraintSet::default_set(),
    };
    let corrections = match &config.corrections_path {
        Some(p) => parse_correction_table(&fs::read_to_string(p)?),
        None => BTreeMap::new(),
    };
    Ok(Context_ {
        config,
        model: ScriptModel::shared(),
        rules,
        constraints,
        corrections,
    })
}

/// Write a data artifact plus its `.meta` sidecar carrying the
/// reproducibility header (used for formats that must stay comment-free).
fn write_with_sidecar(path: &Path, data: &str, ctx: &Context_) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, data)?;
    let sidecar = format!("{}.meta", path.display());
    fs::write(sidecar, ctx.config.header())?;
    Ok(())
}

/// Normalize one raw line into a standardized sentence string.
fn normalize_line(ctx: &Context_, raw: &str) -> Result<String> {
    let normalized = normalize_unicode(raw, &NormalizeOptions::default());
    let corrected = if ctx.corrections.is_empty() {
        normalized
    } else {
        apply_correction_table(&normalized, &ctx.corrections)
    };
    let mut stream = tokenize(&corrected);
    for item in &mut stream.items {
        if let StreamItem::Token { text, .. } = item {
            *text = standardize(text, &ctx.rules)?;
        }
    }
    Ok(stream.reconstruct())
}

/// Standardized word tokens of one raw line (pauses dropped).
fn line_tokens(ctx: &Context_, raw: &str) -> Result<Vec<String>> {
    let line = normalize_line(ctx, raw)?;
    Ok(tokenize(&line).tokens().map(|t| t.to_string()).collect())
}

/// Pause-segmented phone stream of one normalized line.
fn line_phones(ctx: &Context_, line: &str) -> Result<Vec<PhoneStreamItem>> {
    let mut stream = Vec::new();
    for item in tokenize(line).items {
        match item {
            StreamItem::Token { text, .. } => {
                let out = g2p(ctx.model, &text, &ctx.constraints)
                    .map_err(|e| anyhow!("word {:?}: {}", text, e))?;
                stream.push(PhoneStreamItem::Segment(out.best.phones));
            }
            StreamItem::Pause { .. } => stream.push(PhoneStreamItem::Pause),
        }
    }
    Ok(stream)
}

fn cmd_normalize(ctx: &Context_, input: &Path, output: &Path) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let mut out = String::new();
    for line in raw.lines() {
        out.push_str(&normalize_line(ctx, line)?);
        out.push('\n');
    }
    write_with_sidecar(output, &out, ctx)
}

fn cmd_g2p(ctx: &Context_, input: &Path, output: &Path) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let emit = EmitOptions {
        merge_ix: ctx.config.merge_ix,
    };
    let mut out = String::new();
    for line in raw.lines() {
        let word = line.trim();
        if word.is_empty() {
            continue;
        }
        let normalized = normalize_unicode(word, &NormalizeOptions::default());
        let standard = standardize(&normalized, &ctx.rules)?;
        let result = g2p(ctx.model, &standard, &ctx.constraints)
            .map_err(|e| anyhow!("word {:?}: {}", word, e))?;
        let phones: Vec<&str> = result
            .best
            .phones
            .iter()
            .map(|p| {
                if emit.merge_ix && p == "ix" {
                    "i"
                } else {
                    p.as_str()
                }
            })
            .collect();
        out.push_str(&format!("{}\t{}\n", word, phones.join(" ")));
    }
    write_with_sidecar(output, &out, ctx)
}

fn cmd_stats(ctx: &Context_, input: &Path, output: &Path) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let mut dist = DiphoneDistribution::new();
    for (idx, line) in raw.lines().enumerate() {
        let normalized = normalize_line(ctx, line)?;
        let stream =
            line_phones(ctx, &normalized).with_context(|| format!("line {}", idx + 1))?;
        let line_dist = diphone_counts(ctx.model, &stream)?;
        dist.merge(&line_dist);
    }
    let body = format!("{}{}", ctx.config.header(), dist.to_tsv());
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(output, body)?;
    Ok(())
}

fn cmd_design(ctx: &Context_, input: &Path, target: &Path, output: &Path) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let target = DiphoneDistribution::parse_tsv(&fs::read_to_string(target)?)?;
    let mut pool = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let normalized = normalize_line(ctx, line)?;
        let id = format!("{:06}", idx + 1);
        pool.push(CandidateSentence::from_text(
            ctx.model,
            &ctx.rules,
            &ctx.constraints,
            &id,
            &normalized,
        )?);
    }
    let params = DesignParams::<Scalar> {
        epsilon: ctx.config.designer_epsilon,
        max_sentences: ctx.config.designer_max_sentences,
    };
    let state = select_sentences(&pool, &target, &params)?;
    let by_id: BTreeMap<&str, &CandidateSentence> =
        pool.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut out = String::new();
    for id in &state.selected {
        out.push_str(&format!("{}\t{}\n", id, by_id[id.as_str()].text));
    }
    write_with_sidecar(output, &out, ctx)?;
    eprintln!(
        "selected {} sentences; coverage {:.4}, divergence {:.6}, {} unreachable target pairs",
        state.selected.len(),
        state.coverage,
        state.divergence,
        state.unreachable.len()
    );
    Ok(())
}

fn cmd_lexicon(
    ctx: &Context_,
    input: &Path,
    output: &Path,
    overrides: Option<&Path>,
) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let mut frequencies: BTreeMap<String, u64> = BTreeMap::new();
    for line in raw.lines() {
        let normalized = normalize_unicode(line, &NormalizeOptions::default());
        let corrected = if ctx.corrections.is_empty() {
            normalized
        } else {
            apply_correction_table(&normalized, &ctx.corrections)
        };
        for token in tokenize(&corrected).tokens() {
            *frequencies.entry(token.to_string()).or_insert(0) += 1;
        }
    }
    let frequent = extract_frequent_tokens(&frequencies, ctx.config.lexicon_k);
    if frequent.short {
        eprintln!(
            "note: corpus has only {} distinct tokens (k = {})",
            frequent.tokens.len(),
            ctx.config.lexicon_k
        );
    }
    let variant_groups = match &ctx.config.variants_path {
        Some(p) => parse_variant_groups(&fs::read_to_string(p)?)?,
        None => parse_variant_groups(DEFAULT_VARIANT_GROUPS_TSV)?,
    };
    // drop shipped groups with no member in this corpus
    let present: BTreeSet<String> = frequent
        .tokens
        .iter()
        .map(|(t, _)| standardize(t, &ctx.rules))
        .collect::<Result<_, _>>()?;
    let variant_groups: BTreeMap<String, Vec<String>> = variant_groups
        .into_iter()
        .filter(|(_, members)| members.iter().any(|m| present.contains(m)))
        .collect();
    let overrides = match overrides {
        Some(p) => parse_overrides(&fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    let build = build_lexicon(
        ctx.model,
        &frequent.tokens,
        &ctx.rules,
        &ctx.constraints,
        &variant_groups,
        &overrides,
    )?;
    for reject in &build.rejects {
        eprintln!("rejected {:?}: {}", reject.token, reject.reason);
    }
    let rendered = emit_lexicon(
        &build.entries,
        EmitOptions {
            merge_ix: ctx.config.merge_ix,
        },
    );
    write_with_sidecar(output, &rendered, ctx)
}

fn cmd_lm(
    ctx: &Context_,
    input: &Path,
    output: &Path,
    vocab: Option<&Path>,
    test: Option<&Path>,
) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let mut sentences: Vec<Vec<String>> = Vec::new();
    for line in raw.lines() {
        let tokens = line_tokens(ctx, line)?;
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    let vocab_set: Option<BTreeSet<String>> = match vocab {
        Some(p) => {
            let entries = parse_lexicon(&fs::read_to_string(p)?)?;
            Some(entries.into_iter().map(|e| e.surface).collect())
        }
        None => None,
    };
    let counts = count_ngrams(&sentences, ctx.config.lm_order, vocab_set.as_ref());
    let model = estimate::<Scalar>(&counts, ctx.config.lm_discount)?;
    write_with_sidecar(output, &arpa_export(&model), ctx)?;
    if let Some(test) = test {
        let raw = fs::read_to_string(test)?;
        let mut held_out = Vec::new();
        for line in raw.lines() {
            let tokens = line_tokens(ctx, line)?;
            if !tokens.is_empty() {
                held_out.push(tokens);
            }
        }
        if held_out.is_empty() {
            bail!("held-out set {:?} has no sentences", test);
        }
        eprintln!("perplexity {}", perplexity(&model, &held_out));
    }
    Ok(())
}

/// Phone tokens for scoring: g2p of each word; a word that cannot be
/// converted contributes its surface as one opaque pseudo-phone so the
/// alignment stays total.
fn scoring_phones(ctx: &Context_, tokens: &[String]) -> Vec<String> {
    let mut phones = Vec::new();
    for token in tokens {
        match g2p(ctx.model, token, &ctx.constraints) {
            Ok(out) => phones.extend(out.best.phones),
            Err(_) => phones.push(token.clone()),
        }
    }
    phones
}

fn cmd_score(ctx: &Context_, input: &Path, output: &Path) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let mut utterances = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            bail!(
                "line {}: expected utt_id<TAB>topic<TAB>ref<TAB>hyp, got {} fields",
                idx + 1,
                fields.len()
            );
        }
        let ref_words = line_tokens(ctx, fields[2])?;
        let hyp_words = line_tokens(ctx, fields[3])?;
        let ref_phones = scoring_phones(ctx, &ref_words);
        let hyp_phones = scoring_phones(ctx, &hyp_words);
        utterances.push(ScoredUtterance {
            utt_id: fields[0].to_string(),
            topic: fields[1].to_string(),
            ref_words,
            hyp_words,
            ref_phones,
            hyp_phones,
        });
    }
    let report = per_topic_report(&utterances)?;
    for topic in &report.unknown_topics {
        eprintln!("warning: unknown topic {:?} binned to other", topic);
    }
    let body = format!("{}{}", ctx.config.header(), report);
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(output, body)?;
    Ok(())
}

fn cmd_kaldi_prep(ctx: &Context_, input: &Path, outdir: &Path) -> Result<()> {
    let raw = fs::read_to_string(input)?;
    let mut manifest = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            bail!(
                "line {}: expected audio_path<TAB>stem<TAB>transcript",
                idx + 1
            );
        }
        let meta = UtteranceMeta::parse(fields[1])
            .map_err(|e| anyhow!("line {}: {}", idx + 1, e))?;
        manifest.push(ManifestEntry {
            audio_path: fields[0].to_string(),
            meta,
            transcript: normalize_line(ctx, fields[2])?,
        });
    }
    emit_kaldi_datadir(&manifest, outdir, &ctx.config.header())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = load_context(cli.config.as_deref())?;
    match &cli.command {
        Command::Normalize { input, output } => cmd_normalize(&ctx, input, output),
        Command::G2p { input, output } => cmd_g2p(&ctx, input, output),
        Command::Stats { input, output } => cmd_stats(&ctx, input, output),
        Command::Design {
            input,
            target,
            output,
        } => cmd_design(&ctx, input, target, output),
        Command::Lexicon {
            input,
            output,
            overrides,
        } => cmd_lexicon(&ctx, input, output, overrides.as_deref()),
        Command::Lm {
            input,
            output,
            vocab,
            test,
        } => cmd_lm(&ctx, input, output, vocab.as_deref(), test.as_deref()),
        Command::Score { input, output } => cmd_score(&ctx, input, output),
        Command::KaldiPrep { input, output } => cmd_kaldi_prep(&ctx, input, output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits 2 on usage errors
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
