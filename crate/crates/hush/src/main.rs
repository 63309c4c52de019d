//! Command-line front end for the privacy-preserving transcription pipeline.
//!
//! Subcommands mirror the pipeline stages: `segment` a recording, `scrub`
//! sensitive segments, `plan` the histogram-hiding noise, `run` the full
//! partition/shuffle/dispatch/reassemble flow, `evaluate` transcripts, and
//! `attack` provider send lists from the adversary's seat.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hush::attack::{next_segment_attack, recovered_tau, reorder_attack, train_ngram};
use hush::client::{HttpClient, MockClient, TranscriptionClient};
use hush::dp::{amplified_params, build_dist, sample_noise_plan, DpParams, NoisePlan};
use hush::dummy::{dummy_word_count, index_corpus, noise_cost, plan_dummies, CostModel, SplitRule};
use hush::eval::{stylometry_distance, topic_distance, extract_topics, wer, wer_tokens};
use hush::orchestrator::{run_pipeline, PartitionManifest, VcMode};
use hush::scrub::{
    detect_entities, flag_segments, roc_curve, write_roc_csv, KeywordList, KeywordSource,
    SensitivityScore,
};
use hush::segment::{Segment, SegmentId, SegmentKind};
use hush::segmentation::{segment as segment_audio, SegmentationConfig};
use hush::text::{estimate_vocabulary, VocabConfig, VocabEntry, Vocabulary};
use hush::wav::{load_wav, write_wav};

#[derive(Parser)]
#[command(
    name = "hush",
    version,
    about = "Privacy-preserving speech transcription pipeline"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClientKind {
    Mock,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum VcModeArg {
    Cloning,
    OneToOne,
    ManyToOne,
}

impl From<VcModeArg> for VcMode {
    fn from(v: VcModeArg) -> Self {
        match v {
            VcModeArg::Cloning => VcMode::Cloning,
            VcModeArg::OneToOne => VcMode::OneToOne,
            VcModeArg::ManyToOne => VcMode::ManyToOne,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Sentence,
    Clause,
}

#[derive(Subcommand)]
enum Cmd {
    /// Split a WAV recording into speech segments (manifest + WAV slices).
    Segment {
        /// Input recording (16-bit PCM WAV, mono or stereo).
        wav: PathBuf,
        /// Output directory for the manifest and per-segment slices.
        #[arg(long, default_value = "segments")]
        out_dir: PathBuf,
        /// Minimum segment duration in seconds (0 disables merging).
        #[arg(long, default_value_t = 1.0)]
        min_segment_s: f64,
        /// Silence threshold in dBFS.
        #[arg(long, default_value_t = -35.0)]
        silence_db: f64,
        /// Minimum silence duration that splits coarse segments, seconds.
        #[arg(long, default_value_t = 0.5)]
        silence_min_s: f64,
        /// Skip writing WAV slices (manifest only).
        #[arg(long)]
        no_slices: bool,
    },
    /// Flag segments whose text phonetically matches sensitive keywords.
    Scrub {
        /// Segment list JSON (with `text` filled in) as written by `run`
        /// inputs or assembled by hand.
        #[arg(long)]
        segments: PathBuf,
        /// Keyword file: one keyword per line, `#` comments.
        #[arg(long)]
        keywords: Option<PathBuf>,
        /// Also auto-detect entities (capitalized spans, numbers) from the
        /// segment texts and add them to the keyword list.
        #[arg(long)]
        entities: bool,
        /// Sensitivity threshold in [0, 1]; higher = stricter matching.
        #[arg(long, default_value_t = 0.8)]
        score: f64,
        /// Output directory for clean.json / flagged.json.
        #[arg(long, default_value = "scrubbed")]
        out_dir: PathBuf,
        /// Ground-truth JSON map {segment id: bool} for ROC computation.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Where to write the ROC curve CSV (requires --truth).
        #[arg(long)]
        roc: Option<PathBuf>,
    },
    /// Estimate a vocabulary and sample the dummy-noise plan.
    Plan {
        /// Global privacy budget ε.
        #[arg(long)]
        epsilon: f64,
        /// Global privacy budget δ.
        #[arg(long)]
        delta: f64,
        /// Histogram indistinguishability radius d.
        #[arg(long)]
        distance: u32,
        /// Number of non-colluding providers N.
        #[arg(long, default_value_t = 1)]
        providers: u32,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pre-built vocabulary JSON [{word, provenance}]. Mutually
        /// exclusive with --transcript.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Transcript to estimate the vocabulary from.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Baseline corpus files for the TF-IDF channel.
        #[arg(long)]
        baseline: Vec<PathBuf>,
        /// Dictionary file (one word per line) for out-of-domain decoys.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// Keyword file of sensitive words to exclude from the vocabulary.
        #[arg(long)]
        keywords: Option<PathBuf>,
        /// Fraction of top-frequency stems kept.
        #[arg(long, default_value_t = 1.0)]
        top_fraction: f64,
        /// TF-IDF threshold (inf disables the channel).
        #[arg(long, default_value_t = f64::INFINITY)]
        tfidf_threshold: f64,
        /// Number of out-of-domain decoy words.
        #[arg(long, default_value_t = 0)]
        decoys: usize,
        /// Where to write the plan JSON.
        #[arg(long, default_value = "plan.json")]
        out: PathBuf,
        /// Where to write the estimated vocabulary JSON.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
    },
    /// Run the pipeline: partition, add dummies, shuffle, dispatch, reassemble.
    Run {
        /// Segment manifest JSON from `segment`.
        #[arg(long)]
        segments: PathBuf,
        /// Noise plan JSON from `plan`.
        #[arg(long)]
        plan: PathBuf,
        /// Vocabulary JSON the plan was built against.
        #[arg(long)]
        vocab: PathBuf,
        /// Text file mined for dummy segments.
        #[arg(long)]
        dummy_corpus: PathBuf,
        /// Max non-stop words per dummy chunk (0 = unlimited).
        #[arg(long, default_value_t = 6)]
        k_max: usize,
        /// Chunking granularity for the dummy corpus.
        #[arg(long, value_enum, default_value_t = SplitArg::Clause)]
        split: SplitArg,
        /// Client implementation.
        #[arg(long, value_enum, default_value_t = ClientKind::Mock)]
        clients: ClientKind,
        /// Transcription endpoint (required for --clients http).
        #[arg(long)]
        endpoint: Option<String>,
        /// Directory of per-segment WAVs named <id>.wav (http clients).
        #[arg(long)]
        audio_dir: Option<PathBuf>,
        /// Oracle JSON map {segment id: text} (mock clients).
        #[arg(long)]
        oracle: Option<PathBuf>,
        /// Mock per-word substitution probability.
        #[arg(long, default_value_t = 0.0)]
        p_sub: f64,
        /// Pipeline seed (drives partition and shuffle).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Voice-conversion mode tag recorded in the manifest.
        #[arg(long, value_enum)]
        vc_mode: Option<VcModeArg>,
        /// Output directory.
        #[arg(long, default_value = "run")]
        out_dir: PathBuf,
    },
    /// Score a hypothesis transcript against a reference.
    Evaluate {
        /// Reference transcript (UTF-8 text).
        #[arg(long)]
        reference: PathBuf,
        /// Hypothesis transcript.
        #[arg(long)]
        hypothesis: PathBuf,
        /// Also extract this many topics per side and report matched topic
        /// distances (each non-empty line is one document).
        #[arg(long)]
        topics: Option<usize>,
        /// Minimum words per extracted topic.
        #[arg(long, default_value_t = 3)]
        topic_words: usize,
        /// Topic extraction iterations.
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        /// Topic extraction seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attack provider send lists: greedy reorder + dummy-selection probe.
    Attack {
        /// Adversary view JSON written by `run` (per-provider id/text lists).
        #[arg(long)]
        view: PathBuf,
        /// Pipeline manifest JSON (ground truth for scoring).
        #[arg(long)]
        manifest: PathBuf,
        /// Auxiliary training corpus for the attacker's language model.
        #[arg(long)]
        train: PathBuf,
        /// n-gram order.
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Add-α smoothing constant.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Flat row of the segmentation manifest.
#[derive(Serialize, Deserialize)]
struct SegmentRow {
    id: String,
    start_s: f64,
    end_s: f64,
    kind: SegmentKind,
}

/// Flat noise-plan file: one row per (partition, word) with the dp snapshot.
#[derive(Serialize, Deserialize)]
struct PlanFile {
    seed: u64,
    params: PlanParams,
    rows: Vec<PlanRow>,
}

#[derive(Serialize, Deserialize)]
struct PlanParams {
    epsilon_eff: f64,
    delta_eff: f64,
    distance: u32,
    providers: u32,
}

#[derive(Serialize, Deserialize)]
struct PlanRow {
    partition: u32,
    word: String,
    count: u64,
}

/// One entry of the adversary's per-provider view: what was sent (by id) and
/// the text the provider produced for it.
#[derive(Serialize, Deserialize)]
struct ViewRow {
    id: String,
    text: String,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))
}

fn load_segment_rows(path: &Path) -> Result<Vec<Segment>> {
    let rows: Vec<SegmentRow> = read_json(path)?;
    rows.iter()
        .map(|r| {
            if r.kind != SegmentKind::True {
                bail!("segment {} in {} is not a speech segment", r.id, path.display());
            }
            Ok(Segment::speech(
                r.id.clone(),
                hush::audio::TimeSpan::new(r.start_s, r.end_s),
            ))
        })
        .collect()
}

fn load_keywords(path: Option<&Path>, source: KeywordSource) -> Result<KeywordList> {
    Ok(match path {
        Some(p) => KeywordList::from_lines(&read_to_string(p)?, source),
        None => KeywordList::new(),
    })
}

fn cmd_segment(
    wav: &Path,
    out_dir: &Path,
    min_segment_s: f64,
    silence_db: f64,
    silence_min_s: f64,
    no_slices: bool,
) -> Result<()> {
    let audio = load_wav(wav).with_context(|| format!("loading {}", wav.display()))?;
    let cfg = SegmentationConfig {
        min_segment_s,
        silence_db,
        silence_min_s,
        ..SegmentationConfig::default()
    };
    let segments = segment_audio(&audio, &cfg)?;
    fs::create_dir_all(out_dir)?;
    let rows: Vec<SegmentRow> = segments
        .iter()
        .map(|s| {
            let span = s.span.expect("speech segments carry spans");
            SegmentRow {
                id: s.id.to_string(),
                start_s: span.start_s,
                end_s: span.end_s,
                kind: s.kind,
            }
        })
        .collect();
    write_json(&out_dir.join("segments.json"), &rows)?;
    if !no_slices {
        for s in &segments {
            let slice = audio.slice(s.span.expect("speech segments carry spans"));
            write_wav(out_dir.join(format!("{}.wav", s.id)), &slice)?;
        }
    }
    println!(
        "{} segments over {:.2} s -> {}",
        segments.len(),
        audio.duration_s(),
        out_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_scrub(
    segments_path: &Path,
    keywords_path: Option<&Path>,
    entities: bool,
    score: f64,
    out_dir: &Path,
    truth_path: Option<&Path>,
    roc_path: Option<&Path>,
) -> Result<()> {
    let segments: Vec<Segment> = read_json(segments_path)?;
    let mut keywords = load_keywords(keywords_path, KeywordSource::UserDefined)?;
    if entities {
        let combined = segments
            .iter()
            .filter_map(|s| s.text.as_deref())
            .collect::<Vec<_>>()
            .join(" ");
        keywords = keywords.merge(&detect_entities(&combined));
    }
    if keywords.is_empty() {
        bail!("no keywords: pass --keywords and/or --entities");
    }
    let threshold = SensitivityScore::new(score)?;
    let (flagged, clean) = flag_segments(&segments, &keywords, threshold);
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("flagged.json"), &flagged)?;
    write_json(&out_dir.join("clean.json"), &clean)?;
    println!(
        "{} flagged for local transcription, {} clean -> {}",
        flagged.len(),
        clean.len(),
        out_dir.display()
    );

    if let Some(roc_out) = roc_path {
        let truth_path =
            truth_path.ok_or_else(|| anyhow::anyhow!("--roc requires --truth"))?;
        let truth_map: BTreeMap<String, bool> = read_json(truth_path)?;
        let truth: Vec<bool> = segments
            .iter()
            .map(|s| {
                truth_map.get(s.id.as_str()).copied().with_context(|| {
                    format!("truth file has no entry for segment {}", s.id)
                })
            })
            .collect::<Result<_>>()?;
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let points = roc_curve(&segments, &truth, &keywords, &grid)?;
        let mut csv = Vec::new();
        write_roc_csv(&points, &mut csv)?;
        fs::write(roc_out, csv).with_context(|| format!("writing {}", roc_out.display()))?;
        println!("ROC curve -> {}", roc_out.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_plan(
    epsilon: f64,
    delta: f64,
    distance: u32,
    providers: u32,
    seed: u64,
    vocab_path: Option<&Path>,
    transcript_path: Option<&Path>,
    baseline: &[PathBuf],
    dictionary: Option<&Path>,
    keywords: Option<&Path>,
    top_fraction: f64,
    tfidf_threshold: f64,
    decoys: usize,
    out: &Path,
    vocab_out: Option<&Path>,
) -> Result<()> {
    let vocab = match (vocab_path, transcript_path) {
        (Some(v), None) => {
            let entries: Vec<VocabEntry> = read_json(v)?;
            Vocabulary::from_entries(entries)?
        }
        (None, Some(t)) => {
            let transcript = read_to_string(t)?;
            let baseline_docs: Vec<String> = baseline
                .iter()
                .map(|p| read_to_string(p))
                .collect::<Result<_>>()?;
            let dict: Vec<String> = match dictionary {
                Some(p) => read_to_string(p)?
                    .lines()
                    .map(|l| l.trim().to_string())
                    .filter(|l| !l.is_empty())
                    .collect(),
                None => Vec::new(),
            };
            let sensitive = load_keywords(keywords, KeywordSource::UserDefined)?.texts();
            let cfg = VocabConfig {
                top_fraction,
                tfidf_threshold,
                out_of_domain: decoys,
                ..VocabConfig::default()
            };
            estimate_vocabulary(&transcript, &baseline_docs, &cfg, &dict, &sensitive, seed)?
        }
        (Some(_), Some(_)) => bail!("--vocab and --transcript are mutually exclusive"),
        (None, None) => bail!("pass --vocab or --transcript"),
    };
    if let Some(vp) = vocab_out {
        write_json(vp, &vocab.entries().to_vec())?;
        println!("{} vocabulary words -> {}", vocab.len(), vp.display());
    }

    let params = DpParams::new(epsilon, delta, distance, providers)?;
    let (eps_eff, delta_eff) = amplified_params(&params);
    let dist = build_dist(eps_eff, delta_eff, distance)?;
    let plan = sample_noise_plan(&dist, vocab.len(), providers, seed);

    let words: Vec<&str> = vocab.words().collect();
    let mut rows = Vec::with_capacity(plan.num_providers() * vocab.len());
    for (p, row) in plan.eta.iter().enumerate() {
        for (w, &count) in row.iter().enumerate() {
            rows.push(PlanRow {
                partition: p as u32,
                word: words[w].to_string(),
                count,
            });
        }
    }
    let file = PlanFile {
        seed,
        params: PlanParams {
            epsilon_eff: eps_eff,
            delta_eff,
            distance,
            providers,
        },
        rows,
    };
    write_json(out, &file)?;
    println!(
        "plan: {} dummy segments across {} providers x {} words (per-provider budget eps={:.4}, delta={:.5}) -> {}",
        plan.total_count(),
        providers,
        vocab.len(),
        eps_eff,
        delta_eff,
        out.display()
    );
    Ok(())
}

fn plan_from_file(file: &PlanFile, vocab: &Vocabulary) -> Result<NoisePlan> {
    let n = file.params.providers as usize;
    let mut eta = vec![vec![0u64; vocab.len()]; n];
    for row in &file.rows {
        let w = vocab
            .position(&row.word)
            .with_context(|| format!("plan word {:?} is not in the vocabulary", row.word))?;
        let p = row.partition as usize;
        if p >= n {
            bail!("plan row names partition {} of {}", row.partition, n);
        }
        eta[p][w] = row.count;
    }
    Ok(NoisePlan {
        eta,
        seed: file.seed,
        eps_eff: file.params.epsilon_eff,
        delta_eff: file.params.delta_eff,
        distance: file.params.distance,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    segments_path: &Path,
    plan_path: &Path,
    vocab_path: &Path,
    dummy_corpus: &Path,
    k_max: usize,
    split: SplitArg,
    clients: ClientKind,
    endpoint: Option<&str>,
    audio_dir: Option<&Path>,
    oracle_path: Option<&Path>,
    p_sub: f64,
    seed: u64,
    vc_mode: Option<VcModeArg>,
    out_dir: &Path,
) -> Result<()> {
    let true_segments = load_segment_rows(segments_path)?;
    let entries: Vec<VocabEntry> = read_json(vocab_path)?;
    let vocab = Vocabulary::from_entries(entries)?;
    let plan_file: PlanFile = read_json(plan_path)?;
    let plan = plan_from_file(&plan_file, &vocab)?;

    let corpus = read_to_string(dummy_corpus)?;
    let rule = match split {
        SplitArg::Sentence => SplitRule::Sentence,
        SplitArg::Clause => SplitRule::Clause,
    };
    let mut index = index_corpus(&corpus, &vocab, k_max, rule);
    let dummies = plan_dummies(&mut index, &plan, &vocab)?;

    let n = plan.num_providers();
    let built: Vec<Box<dyn TranscriptionClient>> = match clients {
        ClientKind::Mock => {
            let oracle_path = oracle_path
                .ok_or_else(|| anyhow::anyhow!("--clients mock requires --oracle"))?;
            let map: BTreeMap<String, String> = read_json(oracle_path)?;
            let oracle: BTreeMap<SegmentId, String> = map
                .into_iter()
                .map(|(k, v)| (SegmentId::new(k), v))
                .collect();
            (0..n)
                .map(|i| {
                    Ok(Box::new(MockClient::new(
                        format!("mock-{i}"),
                        oracle.clone(),
                        p_sub,
                        seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                    )?) as Box<dyn TranscriptionClient>)
                })
                .collect::<Result<_>>()?
        }
        ClientKind::Http => {
            let endpoint =
                endpoint.ok_or_else(|| anyhow::anyhow!("--clients http requires --endpoint"))?;
            let audio_dir = audio_dir
                .ok_or_else(|| anyhow::anyhow!("--clients http requires --audio-dir"))?;
            (0..n)
                .map(|i| {
                    Box::new(HttpClient::new(
                        format!("http-{i}"),
                        endpoint,
                        audio_dir.to_path_buf(),
                    )) as Box<dyn TranscriptionClient>
                })
                .collect()
        }
    };
    let refs: Vec<&dyn TranscriptionClient> = built.iter().map(|b| b.as_ref()).collect();

    let run = run_pipeline(
        &true_segments,
        &dummies,
        &refs,
        &plan,
        seed,
        vc_mode.map(Into::into),
    )?;

    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("manifest.json"), &run.manifest)?;
    fs::write(out_dir.join("transcript.txt"), &run.transcript)?;
    let view: Vec<Vec<ViewRow>> = run
        .send_lists
        .iter()
        .zip(&run.responses)
        .map(|(list, texts)| {
            list.iter()
                .zip(texts)
                .map(|(seg, text)| ViewRow {
                    id: seg.id.to_string(),
                    text: text.clone(),
                })
                .collect()
        })
        .collect();
    write_json(&out_dir.join("adversary_view.json"), &view)?;

    let words = dummy_word_count(dummies.iter().flatten());
    let cost = noise_cost(words, &CostModel::default());
    println!(
        "dispatched {} true + {} dummy segments to {} provider(s); {} dummy words (~${:.2}) -> {}",
        true_segments.len(),
        dummies.iter().map(Vec::len).sum::<usize>(),
        n,
        cost.total_words,
        cost.usd,
        out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    wer: f64,
    reference_words: usize,
    hypothesis_words: usize,
    stylometry_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    topic_distances: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    topic_distance_total: Option<f64>,
}

fn cmd_evaluate(
    reference: &Path,
    hypothesis: &Path,
    topics: Option<usize>,
    topic_words: usize,
    iterations: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let ref_text = read_to_string(reference)?;
    let hyp_text = read_to_string(hypothesis)?;
    let ref_tokens = wer_tokens(&ref_text);
    let hyp_tokens = wer_tokens(&hyp_text);
    let wer_value = wer(&ref_tokens, &hyp_tokens)?;
    let mut report = EvalReport {
        wer: wer_value,
        reference_words: ref_tokens.len(),
        hypothesis_words: hyp_tokens.len(),
        stylometry_distance: stylometry_distance(&ref_text, &hyp_text),
        topic_distances: None,
        topic_distance_total: None,
    };
    if let Some(t) = topics {
        let docs = |text: &str| -> Vec<String> {
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect()
        };
        let ref_topics = extract_topics(&docs(&ref_text), t, topic_words, iterations, seed)?;
        let hyp_topics = extract_topics(&docs(&hyp_text), t, topic_words, iterations, seed)?;
        let matched = topic_distance(&ref_topics, &hyp_topics)?;
        report.topic_distance_total = Some(matched.total());
        report.topic_distances = Some(matched.distances);
    }
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => {
            fs::write(p, &json).with_context(|| format!("writing {}", p.display()))?;
            println!("report -> {}", p.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_attack(
    view_path: &Path,
    manifest_path: &Path,
    train_path: &Path,
    order: usize,
    alpha: f64,
    out: Option<&Path>,
) -> Result<()> {
    let view: Vec<Vec<ViewRow>> = read_json(view_path)?;
    let manifest: PartitionManifest = read_json(manifest_path)?;
    if view.len() != manifest.providers.len() {
        bail!(
            "view covers {} providers, manifest {}",
            view.len(),
            manifest.providers.len()
        );
    }
    let train_text = read_to_string(train_path)?;
    let sequences: Vec<Vec<String>> = train_text
        .lines()
        .map(hush::text::tokenize_surface)
        .filter(|l| !l.is_empty())
        .collect();
    let model = train_ngram(&sequences, order, alpha)?;

    let mut csv = String::from("seed,tau,dummy_selection_rate\n");
    for (row, list) in manifest.providers.iter().zip(&view) {
        let texts: BTreeMap<&str, &str> = list
            .iter()
            .map(|v| (v.id.as_str(), v.text.as_str()))
            .collect();
        // Ground truth: this provider's true segments in original order.
        let mut originals: Vec<(usize, SegmentId)> = row
            .true_positions
            .iter()
            .map(|tp| (tp.original_index, row.send_ids[tp.send_pos].clone()))
            .collect();
        originals.sort_by_key(|(i, _)| *i);
        let original_ids: Vec<SegmentId> = originals.into_iter().map(|(_, id)| id).collect();
        if original_ids.is_empty() || list.len() < 3 {
            continue; // nothing for the adversary to order here
        }

        // Re-ordering attack anchored on the first true segment.
        let anchor = &original_ids[0];
        let anchor_text = texts
            .get(anchor.as_str())
            .copied()
            .with_context(|| format!("view is missing text for {anchor}"))?;
        let pool: Vec<(SegmentId, String)> = list
            .iter()
            .filter(|v| v.id != anchor.as_str())
            .map(|v| (SegmentId::new(v.id.clone()), v.text.clone()))
            .collect();
        let mut chain = vec![anchor.clone()];
        chain.extend(reorder_attack(anchor_text, &pool, &model)?);
        let tau = recovered_tau(&chain, &original_ids)?;

        // Dummy-selection probe: from each known true segment, does the
        // stitched-perplexity argmin land on a dummy?
        let dummy_ids: std::collections::BTreeSet<&str> = row
            .dummy_positions
            .iter()
            .map(|d| d.id.as_str())
            .collect();
        let mut trials = 0u64;
        let mut dummy_hits = 0u64;
        for known in &original_ids {
            let known_text = match texts.get(known.as_str()) {
                Some(t) => *t,
                None => continue,
            };
            let candidates: Vec<(SegmentId, String)> = list
                .iter()
                .filter(|v| v.id != known.as_str())
                .map(|v| (SegmentId::new(v.id.clone()), v.text.clone()))
                .collect();
            if candidates.len() < 2 {
                continue;
            }
            let chosen = next_segment_attack(known_text, &candidates, &model)?;
            trials += 1;
            if dummy_ids.contains(chosen.as_str()) {
                dummy_hits += 1;
            }
        }
        let rate = if trials == 0 {
            0.0
        } else {
            dummy_hits as f64 / trials as f64
        };
        csv.push_str(&format!("{},{tau},{rate}\n", manifest.seed));
    }
    match out {
        Some(p) => {
            fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
            println!("attack results -> {}", p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Segment {
            wav,
            out_dir,
            min_segment_s,
            silence_db,
            silence_min_s,
            no_slices,
        } => cmd_segment(&wav, &out_dir, min_segment_s, silence_db, silence_min_s, no_slices),
        Cmd::Scrub {
            segments,
            keywords,
            entities,
            score,
            out_dir,
            truth,
            roc,
        } => cmd_scrub(
            &segments,
            keywords.as_deref(),
            entities,
            score,
            &out_dir,
            truth.as_deref(),
            roc.as_deref(),
        ),
        Cmd::Plan {
            epsilon,
            delta,
            distance,
            providers,
            seed,
            vocab,
            transcript,
            baseline,
            dictionary,
            keywords,
            top_fraction,
            tfidf_threshold,
            decoys,
            out,
            vocab_out,
        } => cmd_plan(
            epsilon,
            delta,
            distance,
            providers,
            seed,
            vocab.as_deref(),
            transcript.as_deref(),
            &baseline,
            dictionary.as_deref(),
            keywords.as_deref(),
            top_fraction,
            tfidf_threshold,
            decoys,
            &out,
            vocab_out.as_deref(),
        ),
        Cmd::Run {
            segments,
            plan,
            vocab,
            dummy_corpus,
            k_max,
            split,
            clients,
            endpoint,
            audio_dir,
            oracle,
            p_sub,
            seed,
            vc_mode,
            out_dir,
        } => cmd_run(
            &segments,
            &plan,
            &vocab,
            &dummy_corpus,
            k_max,
            split,
            clients,
            endpoint.as_deref(),
            audio_dir.as_deref(),
            oracle.as_deref(),
            p_sub,
            seed,
            vc_mode,
            &out_dir,
        ),
        Cmd::Evaluate {
            reference,
            hypothesis,
            topics,
            topic_words,
            iterations,
            seed,
            out,
        } => cmd_evaluate(
            &reference,
            &hypothesis,
            topics,
            topic_words,
            iterations,
            seed,
            out.as_deref(),
        ),
        Cmd::Attack {
            view,
            manifest,
            train,
            order,
            alpha,
            out,
        } => cmd_attack(&view, &manifest, &train, order, alpha, out.as_deref()),
    }
}
