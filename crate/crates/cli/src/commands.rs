use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use csm::analysis::{analyze, ParameterTrack};
use csm::config::RunConfig;
use csm::container::{TrackContainer, CH_F0, CH_FEATURES, CH_VOICING};
use csm::contf0::{estimate_baseline_contf0, refine_contf0};
use csm::metrics::{evaluate, write_report, MetricReport};
use csm::model::{toy_corpus, track_targets, AcousticModel, EpochLog, Sequence, ToyCorpusConfig};
use csm::signal::wav::{read_wav, wav_bytes};
use csm::signal::SpeechBuffer;
use csm::synthesis::synthesize;
use csm::{Error, Result};

use crate::fsutil::{atomic_write, ensure_dir, list_files, stem};

/// Settings shared by every verb.
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub seed_given: bool,
    pub jobs: usize,
}

impl Context {
    /// Runs `f` over `items` on `jobs` worker threads, keeping input order.
    fn map<T: Sync, R: Send>(
        &self,
        items: &[T],
        f: impl Fn(&T) -> R + Sync + Send,
    ) -> Result<Vec<R>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| {
                Error::Config(format!("cannot start {} worker threads: {e}", self.jobs))
            })?;
        Ok(pool.install(|| items.par_iter().map(f).collect()))
    }
}

fn write_container(path: &Path, c: &TrackContainer) -> Result<()> {
    atomic_write(path, &c.to_bytes())
}

fn write_wav_atomic(path: &Path, buf: &SpeechBuffer) -> Result<()> {
    atomic_write(path, &wav_bytes(buf)?)
}

fn report_text(rows: &[(String, MetricReport)]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_report(&mut buf, rows)?;
    Ok(buf)
}

/// Writes the report to `path`, or standard output when none is given.
fn emit_report(path: Option<&Path>, rows: &[(String, MetricReport)]) -> Result<()> {
    let text = report_text(rows)?;
    match path {
        Some(p) => atomic_write(p, &text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&text)?;
            Ok(())
        }
    }
}

/// Keeps the first error of a batch, tagged with the file it came from.
fn first_error<T>(results: Vec<(String, Result<T>)>) -> Result<Vec<(String, T)>> {
    let mut out = Vec::with_capacity(results.len());
    for (name, r) in results {
        match r {
            Ok(v) => out.push((name, v)),
            Err(e) => return Err(tag(e, &name)),
        }
    }
    Ok(out)
}

fn tag(e: Error, name: &str) -> Error {
    match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{name}: {io}"))),
        Error::Domain(m) => Error::Domain(format!("{name}: {m}")),
        Error::Shape(m) => Error::Shape(format!("{name}: {m}")),
        Error::Degenerate(m) => Error::Degenerate(format!("{name}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{name}: {m}")),
        Error::Format(m) => Error::Format(format!("{name}: {m}")),
        Error::Config(m) => Error::Config(format!("{name}: {m}")),
        Error::Wav(w) => Error::Format(format!("{name}: {w}")),
    }
}

pub fn analyze_cmd(ctx: &Context, input: &Path, output: &Path) -> Result<()> {
    let wave = read_wav(input)?;
    let track = analyze(&wave, &ctx.config.analysis)?;
    write_container(output, &TrackContainer::from_track(&track)?)
}

pub fn refine_f0_cmd(ctx: &Context, input: &Path, output: &Path, text: bool) -> Result<()> {
    let wave = read_wav(input)?;
    let baseline = estimate_baseline_contf0(&wave, &ctx.config.analysis.pitch)?;
    let refined = refine_contf0(&wave, &baseline, &ctx.config.analysis.refine)?;
    if text {
        let mut buf = Vec::new();
        refined.write_text(&mut buf)?;
        return atomic_write(output, &buf);
    }
    let mut c = TrackContainer::new(wave.sample_rate(), refined.frame_hop())?;
    c.insert_column(CH_F0, refined.values())?;
    let voicing: Vec<f64> = refined
        .voicing()
        .iter()
        .map(|v| f64::from(u8::from(*v)))
        .collect();
    c.insert_column(CH_VOICING, &voicing)?;
    write_container(output, &c)
}

pub fn synth_cmd(ctx: &Context, input: &Path, output: &Path) -> Result<()> {
    let track = TrackContainer::load(input)?.to_track()?;
    write_wav_atomic(output, &synthesize(&track, ctx.seed)?)
}

fn copy_synth_one(ctx: &Context, input: &Path, output: &Path) -> Result<MetricReport> {
    let wave = read_wav(input)?;
    let track = analyze(&wave, &ctx.config.analysis)?;
    let synth = synthesize(&track, ctx.seed)?;
    write_wav_atomic(output, &synth)?;
    evaluate(&wave, &synth, false)
}

pub fn copy_synth_cmd(
    ctx: &Context,
    input: &Path,
    output: &Path,
    report: Option<&Path>,
) -> Result<()> {
    let pairs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        ensure_dir(output)?;
        list_files(input, "wav")?
            .into_iter()
            .map(|p| {
                let out = output.join(p.file_name().unwrap());
                (p, out)
            })
            .collect()
    } else {
        vec![(input.to_path_buf(), output.to_path_buf())]
    };
    if pairs.is_empty() {
        return Err(Error::Degenerate(format!(
            "no .wav files in {}",
            input.display()
        )));
    }
    let results = ctx.map(&pairs, |(i, o)| (stem(i), copy_synth_one(ctx, i, o)))?;
    emit_report(report, &first_error(results)?)
}

/// `(name, input sequence, target sequence)` for every paired container.
fn load_training_pairs(features: &Path, targets: &Path) -> Result<Vec<(String, Sequence)>> {
    let feats = list_files(features, "csmt")?;
    let targs = list_files(targets, "csmt")?;
    if feats.is_empty() {
        return Err(Error::Degenerate(format!(
            "no .csmt feature files in {}",
            features.display()
        )));
    }
    let target_names: Vec<String> = targs.iter().map(|p| stem(p)).collect();
    let mut problems = Vec::new();
    let mut out = Vec::new();
    for f in &feats {
        let name = stem(f);
        if !target_names.contains(&name) {
            problems.push(format!("{name} (no target)"));
            continue;
        }
        let x = TrackContainer::load(f)?.require(CH_FEATURES)?.rows_f64();
        let track = TrackContainer::load(&targets.join(format!("{name}.csmt")))?.to_track()?;
        let y = track_targets(&track);
        if x.len() != y.len() {
            problems.push(format!(
                "{name} ({} feature frames, {} target frames)",
                x.len(),
                y.len()
            ));
            continue;
        }
        out.push((name, (x, y)));
    }
    for t in &target_names {
        if !feats.iter().any(|f| &stem(f) == t) {
            problems.push(format!("{t} (no features)"));
        }
    }
    if !problems.is_empty() {
        return Err(Error::Shape(format!(
            "unpaired utterances: {}",
            problems.join(", ")
        )));
    }
    Ok(out)
}

fn loss_log(history: &[EpochLog]) -> String {
    let mut s = String::from("epoch\tlearning_rate\tmomentum\ttrain_loss\theldout_loss\n");
    for e in history {
        let held = e
            .heldout_loss
            .map_or("nan".to_string(), |v| format!("{v:.8}"));
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.8}\t{held}",
            e.epoch, e.learning_rate, e.momentum, e.train_loss
        );
    }
    s
}

pub fn train_cmd(
    ctx: &Context,
    features: &Path,
    targets: &Path,
    model_out: &Path,
    loss_log_path: Option<&Path>,
    heldout: usize,
) -> Result<()> {
    let pairs = load_training_pairs(features, targets)?;
    if heldout >= pairs.len() {
        return Err(Error::Config(format!(
            "cannot hold out {heldout} of {} utterances",
            pairs.len()
        )));
    }
    let (train_set, held_set) = pairs.split_at(pairs.len() - heldout);
    let train_data: Vec<Sequence> = train_set.iter().map(|(_, s)| s.clone()).collect();
    let held_data: Vec<Sequence> = held_set.iter().map(|(_, s)| s.clone()).collect();
    let mut cfg = ctx.config.train.clone();
    if ctx.seed_given {
        cfg.seed = ctx.seed;
    }
    let (model, history) = AcousticModel::train(&train_data, &held_data, &ctx.config.model, &cfg)?;
    let log_path = loss_log_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.loss.tsv", model_out.display())));
    atomic_write(&log_path, loss_log(&history).as_bytes())?;
    atomic_write(model_out, &model.to_bytes())
}

pub fn predict_cmd(ctx: &Context, model: &Path, features: &Path, out_dir: &Path) -> Result<()> {
    let model = AcousticModel::load(model)?;
    let files = list_files(features, "csmt")?;
    if files.is_empty() {
        return Err(Error::Degenerate(format!(
            "no .csmt feature files in {}",
            features.display()
        )));
    }
    ensure_dir(out_dir)?;
    let results = ctx.map(&files, |f| {
        let run = || -> Result<()> {
            let c = TrackContainer::load(f)?;
            let x = c.require(CH_FEATURES)?.rows_f64();
            let track: ParameterTrack = model.predict_track(&x, c.frame_hop(), c.sample_rate())?;
            write_container(
                &out_dir.join(format!("{}.csmt", stem(f))),
                &TrackContainer::from_track(&track)?,
            )
        };
        (stem(f), run())
    })?;
    first_error(results).map(|_| ())
}

pub fn eval_cmd(ctx: &Context, natural: &Path, synth: &Path, report: Option<&Path>) -> Result<()> {
    let files = list_files(natural, "wav")?;
    if files.is_empty() {
        return Err(Error::Degenerate(format!(
            "no .wav files in {}",
            natural.display()
        )));
    }
    let missing: Vec<String> = files
        .iter()
        .map(|f| synth.join(f.file_name().unwrap()))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("missing synthesized counterpart: {}", missing.join(", ")),
        )));
    }
    let results = ctx.map(&files, |f| {
        let run = || {
            evaluate(
                &read_wav(f)?,
                &read_wav(synth.join(f.file_name().unwrap()))?,
                false,
            )
        };
        (stem(f), run())
    })?;
    emit_report(report, &first_error(results)?)
}

/// Writes `features/`, `targets/` and `wav/` for the synthetic toy corpus.
pub fn toy_corpus_cmd(ctx: &Context, out: &Path, n: usize) -> Result<()> {
    let corpus = toy_corpus(&ToyCorpusConfig {
        n_utterances: n,
        seed: ctx.seed,
        ..Default::default()
    })?;
    for sub in ["features", "targets", "wav"] {
        ensure_dir(&out.join(sub))?;
    }
    let results = ctx.map(&corpus, |u| {
        let run = || -> Result<()> {
            let mut f = TrackContainer::new(u.track.sample_rate(), u.track.frame_hop())?;
            f.insert_rows(CH_FEATURES, &u.features)?;
            write_container(&out.join("features").join(format!("{}.csmt", u.name)), &f)?;
            write_container(
                &out.join("targets").join(format!("{}.csmt", u.name)),
                &TrackContainer::from_track(&u.track)?,
            )?;
            write_wav_atomic(
                &out.join("wav").join(format!("{}.wav", u.name)),
                &synthesize(&u.track, ctx.seed)?,
            )
        };
        (u.name.clone(), run())
    })?;
    first_error(results).map(|_| ())
}

pub fn config_cmd(ctx: &Context, output: Option<&Path>) -> Result<()> {
    let text = ctx.config.to_toml()?;
    match output {
        Some(p) => atomic_write(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
