//! Subcommand bodies. Each reads its inputs, writes its outputs and returns
//! a JSON summary for the status line.

use std::path::{Path, PathBuf};

use nse_core::analysis::{adaptation_distance, erd_ers, per_class_distances, tsne, ErdErsParams, Reference, Scope};
use nse_core::audio::{resample, spectral_gate, AudioClip, NoiseReference};
use nse_core::embedding::{column_mean_mask, embed, EmbeddingMatrix};
use nse_core::ica::{fit_ica, reject_components};
use nse_core::signal::{baseline_correct, design_bandpass, design_notch, filtfilt, segment, Domain, EpochSet, EventList, Recording, SosFilter};
use nse_core::spatial::{fit_bank, project, SpatialFilterBank};
use nse_core::synth::{generate, generate_artifact_mixture, to_recording};
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats::{bank, eegb, embeddings, events, ica_model, read_bytes, tables, truth, wav, write_bytes};

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Refuses to write over an input file.
pub fn ensure_distinct(out: &Path, inputs: &[&Path]) -> Result<()> {
    let canon = |p: &Path| std::fs::canonicalize(p).ok();
    if let Some(o) = canon(out) {
        if inputs.iter().any(|i| canon(i).as_ref() == Some(&o)) {
            return Err(Error::Usage(format!("output {} would overwrite an input", out.display())));
        }
    }
    Ok(())
}

/// EEGB recording plus its events, from `events_path` or the sibling
/// `<stem>.events.csv`.
pub struct Labelled {
    pub recording: Recording,
    pub domain: Option<Domain>,
    pub events: EventList,
    pub events_path: PathBuf,
}

pub fn load_labelled(cfg: &PipelineConfig, eegb_path: &Path, events_path: Option<&Path>) -> Result<Labelled> {
    let (recording, domain) = eegb::read(eegb_path)?;
    let events_path = events_path.map_or_else(|| events::default_path(eegb_path), Path::to_path_buf);
    let events = events::read(&events_path, cfg.vocabulary)?;
    Ok(Labelled { recording, domain, events, events_path })
}

fn load_epochs(cfg: &PipelineConfig, eegb_path: &Path, events_path: Option<&Path>, domain: Option<Domain>) -> Result<EpochSet> {
    let l = load_labelled(cfg, eegb_path, events_path)?;
    let domain = domain.or(l.domain).unwrap_or(Domain::Imagined);
    Ok(segment(&l.recording, &l.events, cfg.epoch_seconds, domain)?)
}

pub fn preprocessing_filter(cfg: &PipelineConfig, fs_hz: f64) -> Result<SosFilter> {
    let [lo, hi] = cfg.bandpass_hz;
    let mut chain: Option<SosFilter> = None;
    for &f in &cfg.notch_hz {
        let notch = design_notch(f, cfg.notch_q, fs_hz)?;
        chain = Some(match chain {
            None => notch,
            Some(c) => c.then(&notch)?,
        });
    }
    let bandpass = design_bandpass(cfg.filter_order, lo, hi, fs_hz)?;
    Ok(match chain {
        None => bandpass,
        Some(c) => c.then(&bandpass)?,
    })
}

pub fn synth(cfg: &PipelineConfig, out_dir: &Path) -> Result<Value> {
    let spec = cfg.synth_spec();
    let data = generate(&spec)?;
    let mut outputs = Vec::new();
    for (name, epochs, domain) in [("imagined", &data.imagined, Domain::Imagined), ("spoken", &data.spoken, Domain::Spoken)] {
        let (rec, ev) = to_recording(&spec, epochs, cfg.synth.gap_seconds)?;
        let rec_path = out_dir.join(format!("{name}.eegb"));
        eegb::write(&rec_path, &rec, Some(domain))?;
        let ev_path = events::default_path(&rec_path);
        events::write(&ev_path, &ev)?;
        outputs.push(path_str(&rec_path));
        outputs.push(path_str(&ev_path));
    }
    let truth_path = out_dir.join("ground_truth.json");
    truth::write(&truth_path, &truth::TruthFile::new(&spec, &data.truth))?;
    outputs.push(path_str(&truth_path));
    Ok(json!({
        "outputs": outputs,
        "epochs_per_domain": spec.n_trials(),
        "channels": spec.n_channels,
        "samples_per_epoch": spec.n_samples(),
    }))
}

pub fn synth_artifact(cfg: &PipelineConfig, out_dir: &Path, n_channels: usize, n_sources: usize) -> Result<Value> {
    let mix = generate_artifact_mixture(cfg.seed, n_channels, n_sources)?;
    let paths = [out_dir.join("mixture.eegb"), out_dir.join("references.eegb"), out_dir.join("sources.eegb")];
    eegb::write(&paths[0], &mix.mixed, None)?;
    eegb::write(&paths[1], &mix.references, None)?;
    eegb::write(&paths[2], &mix.sources, None)?;
    let mixing_path = out_dir.join("artifact_truth.json");
    let mixing: Vec<Vec<f64>> = mix.mixing.row_iter().map(|r| r.iter().copied().collect()).collect();
    crate::formats::write_json(&mixing_path, &json!({"version": 1, "seed": cfg.seed, "blink_source": 0, "mixing": mixing}))?;
    let mut outputs: Vec<String> = paths.iter().map(|p| path_str(p)).collect();
    outputs.push(path_str(&mixing_path));
    Ok(json!({"outputs": outputs, "channels": n_channels, "sources": n_sources, "samples": mix.mixed.n_samples()}))
}

pub fn preprocess(cfg: &PipelineConfig, input: &Path, events_path: Option<&Path>, out: &Path) -> Result<Value> {
    ensure_distinct(out, &[input])?;
    let l = load_labelled(cfg, input, events_path)?;
    let fs = l.recording.sample_rate_hz();
    if fs != cfg.fs_hz {
        log::warn!("{}: recording rate {fs} Hz differs from configured {} Hz; designing for the recording", input.display(), cfg.fs_hz);
    }
    let filter = preprocessing_filter(cfg, fs)?;
    let filtered = filtfilt(&filter, &l.recording)?;
    let corrected = baseline_correct(&filtered, &l.events, cfg.baseline_seconds, cfg.epoch_seconds)?;
    eegb::write(out, &corrected, l.domain)?;
    let out_events = events::default_path(out);
    ensure_distinct(&out_events, &[&l.events_path])?;
    events::write(&out_events, &l.events)?;
    Ok(json!({
        "outputs": [path_str(out), path_str(&out_events)],
        "channels": corrected.n_channels(),
        "samples": corrected.n_samples(),
        "events": l.events.len(),
        "filter_sections": filter.sections().len(),
    }))
}

pub fn ica_clean(cfg: &PipelineConfig, input: &Path, references: &Path, out: &Path, model_out: Option<&Path>) -> Result<Value> {
    ensure_distinct(out, &[input, references])?;
    let (rec, domain) = eegb::read(input)?;
    let (refs, _) = eegb::read(references)?;
    let model = fit_ica(&rec, &cfg.ica_options())?;
    let rejection = reject_components(&model, &rec, &refs, cfg.ica.threshold)?;
    eegb::write(out, &rejection.cleaned, domain)?;
    let mut outputs = vec![path_str(out)];
    let in_events = events::default_path(input);
    if in_events.exists() {
        let out_events = events::default_path(out);
        ensure_distinct(&out_events, &[&in_events])?;
        write_bytes(&out_events, &read_bytes(&in_events)?)?;
        outputs.push(path_str(&out_events));
    }
    if let Some(p) = model_out {
        ica_model::write(p, &model)?;
        outputs.push(path_str(p));
    }
    Ok(json!({
        "outputs": outputs,
        "components": model.k(),
        "iterations": model.iterations,
        "rejected": rejection.rejected,
        "max_correlations": rejection.max_correlations,
    }))
}

pub fn csp_fit(cfg: &PipelineConfig, epochs_path: &Path, events_path: Option<&Path>, out: &Path) -> Result<Value> {
    ensure_distinct(out, &[epochs_path])?;
    let epochs = load_epochs(cfg, epochs_path, events_path, None)?;
    let fitted = fit_bank(&epochs, cfg.ridge, cfg.patterns_per_class)?;
    bank::write(out, &fitted)?;
    Ok(json!({
        "outputs": [path_str(out)],
        "n_filters": fitted.n_filters(),
        "n_channels": fitted.n_channels(),
        "classes": fitted.class_ids(),
        "fitted_domain": fitted.fitted_domain().as_str(),
    }))
}

fn masked_rows(ms: &[EmbeddingMatrix]) -> Vec<EmbeddingMatrix> {
    ms.iter()
        .map(|m| EmbeddingMatrix { values: column_mean_mask(m).display_values(), ..m.clone() })
        .collect()
}

pub struct EmbedOutputs<'a> {
    pub out: &'a Path,
    pub csv: Option<&'a Path>,
    pub masked_csv: Option<&'a Path>,
}

pub fn embed_cmd(cfg: &PipelineConfig, epochs_path: &Path, events_path: Option<&Path>, bank_path: &Path, outs: EmbedOutputs<'_>) -> Result<Value> {
    ensure_distinct(outs.out, &[epochs_path, bank_path])?;
    let epochs = load_epochs(cfg, epochs_path, events_path, None)?;
    let fitted = bank::read(bank_path)?;
    let ms = embed(&project(&fitted, &epochs)?, cfg.n_windows, cfg.log_floor)?;
    embeddings::write(outs.out, &ms)?;
    let mut outputs = vec![path_str(outs.out)];
    if let Some(p) = outs.csv {
        write_bytes(p, embeddings::to_csv(&ms).as_bytes())?;
        outputs.push(path_str(p));
    }
    if let Some(p) = outs.masked_csv {
        write_bytes(p, embeddings::to_csv(&masked_rows(&ms)).as_bytes())?;
        outputs.push(path_str(p));
    }
    Ok(json!({"outputs": outputs, "count": ms.len(), "n_windows": cfg.n_windows, "n_filters": fitted.n_filters()}))
}

fn features(ms: &[EmbeddingMatrix]) -> (Vec<f64>, usize) {
    let d = ms.first().map_or(0, |m| m.values.len());
    (ms.iter().flat_map(|m| m.values.iter().copied()).collect(), d)
}

fn run_tsne(cfg: &PipelineConfig, ms: &[EmbeddingMatrix], out: &Path) -> Result<Value> {
    let (x, d) = features(ms);
    let result = tsne(&x, ms.len(), d, &cfg.tsne_params())?;
    write_bytes(out, tables::tsne_csv(ms, &result).as_bytes())?;
    Ok(json!({"points": ms.len(), "kl_initial": result.kl_initial, "kl_final": result.kl_final}))
}

/// Embeddings of both domains through a shared imagined-fitted bank and
/// through per-domain banks.
pub struct AdaptationRun {
    pub shared: Vec<EmbeddingMatrix>,
    pub per_domain: Vec<EmbeddingMatrix>,
    pub shared_distance: f64,
    pub per_domain_distance: f64,
}

pub fn adaptation_run(cfg: &PipelineConfig, imagined: &EpochSet, spoken: &EpochSet) -> Result<AdaptationRun> {
    let imagined_bank = fit_bank(imagined, cfg.ridge, cfg.patterns_per_class)?;
    let spoken_bank = fit_bank(spoken, cfg.ridge, cfg.patterns_per_class)?;
    let embed_with = |b: &SpatialFilterBank, e: &EpochSet| -> Result<Vec<EmbeddingMatrix>> { Ok(embed(&project(b, e)?, cfg.n_windows, cfg.log_floor)?) };
    let imagined_emb = embed_with(&imagined_bank, imagined)?;
    let mut shared = imagined_emb.clone();
    shared.extend(embed_with(&imagined_bank, spoken)?);
    let mut per_domain = imagined_emb;
    per_domain.extend(embed_with(&spoken_bank, spoken)?);
    Ok(AdaptationRun {
        shared_distance: adaptation_distance(&shared)?,
        per_domain_distance: adaptation_distance(&per_domain)?,
        shared,
        per_domain,
    })
}

pub struct AdaptInputs<'a> {
    pub imagined: &'a Path,
    pub spoken: &'a Path,
    pub imagined_events: Option<&'a Path>,
    pub spoken_events: Option<&'a Path>,
}

pub fn adapt_eval(cfg: &PipelineConfig, inputs: AdaptInputs<'_>, out_dir: &Path) -> Result<Value> {
    let imagined = load_epochs(cfg, inputs.imagined, inputs.imagined_events, Some(Domain::Imagined))?;
    let spoken = load_epochs(cfg, inputs.spoken, inputs.spoken_events, Some(Domain::Spoken))?;
    let run = adaptation_run(cfg, &imagined, &spoken)?;
    let shared_csv = out_dir.join("tsne_shared.csv");
    let per_domain_csv = out_dir.join("tsne_per_domain.csv");
    let tsne_shared = run_tsne(cfg, &run.shared, &shared_csv)?;
    let tsne_per_domain = run_tsne(cfg, &run.per_domain, &per_domain_csv)?;
    let per_class = |ms: &[EmbeddingMatrix]| -> Result<Value> {
        Ok(per_class_distances(ms)?.into_iter().map(|(c, d)| (c.to_string(), json!(d))).collect::<serde_json::Map<_, _>>().into())
    };
    let report = json!({
        "version": 1,
        "shared_distance": run.shared_distance,
        "per_domain_distance": run.per_domain_distance,
        "relative_reduction": 1.0 - run.shared_distance / run.per_domain_distance,
        "per_class_shared": per_class(&run.shared)?,
        "per_class_per_domain": per_class(&run.per_domain)?,
        "tsne_shared": tsne_shared,
        "tsne_per_domain": tsne_per_domain,
    });
    let report_path = out_dir.join("adaptation.json");
    crate::formats::write_json(&report_path, &report)?;
    Ok(json!({
        "outputs": [path_str(&shared_csv), path_str(&per_domain_csv), path_str(&report_path)],
        "shared_distance": run.shared_distance,
        "per_domain_distance": run.per_domain_distance,
    }))
}

pub fn erders(cfg: &PipelineConfig, epochs_path: &Path, events_path: Option<&Path>, out: &Path) -> Result<Value> {
    ensure_distinct(out, &[epochs_path])?;
    let epochs = load_epochs(cfg, epochs_path, events_path, None)?;
    let e = &cfg.erders;
    let params = ErdErsParams {
        band_width_hz: e.band_width_hz,
        bin_seconds: e.bin_seconds,
        range_hz: (e.range_hz[0], e.range_hz[1]),
        reference: Reference::FirstBin,
        scope: e.channel.map_or(Scope::Average, Scope::Channel),
    };
    let grid = erd_ers(&epochs, &params)?;
    write_bytes(out, tables::grid_csv(&grid).as_bytes())?;
    let (band, bin) = grid.argmax();
    Ok(json!({
        "outputs": [path_str(out)],
        "bands": grid.bands.len(),
        "time_bins": grid.time_bins.len(),
        "max_band_hz": [grid.bands[band].0, grid.bands[band].1],
        "max_bin_s": [grid.time_bins[bin].0, grid.time_bins[bin].1],
        "max_percent": grid.get(band, bin),
    }))
}

pub fn tsne_cmd(cfg: &PipelineConfig, input: &Path, out: &Path) -> Result<Value> {
    ensure_distinct(out, &[input])?;
    let ms = embeddings::read(input)?;
    let mut summary = run_tsne(cfg, &ms, out)?;
    summary["outputs"] = json!([path_str(out)]);
    Ok(summary)
}

pub fn audio_resample(input: &Path, out: &Path, target_hz: u32, encoding: wav::WavEncoding) -> Result<Value> {
    ensure_distinct(out, &[input])?;
    let clip = wav::read(input)?;
    let resampled = resample(&clip, target_hz)?;
    wav::write(out, &resampled, encoding)?;
    Ok(json!({
        "outputs": [path_str(out)],
        "source_hz": clip.sample_rate_hz(),
        "target_hz": target_hz,
        "samples": resampled.len(),
        "clipped": resampled.clipped(),
    }))
}

pub fn audio_denoise(
    cfg: &PipelineConfig,
    input: &Path,
    profile: Option<&Path>,
    out: &Path,
    target_hz: Option<u32>,
    encoding: wav::WavEncoding,
) -> Result<Value> {
    ensure_distinct(out, &[input])?;
    let at_rate = |clip: AudioClip| -> Result<AudioClip> {
        Ok(match target_hz {
            Some(t) => resample(&clip, t)?,
            None => clip,
        })
    };
    let clip = at_rate(wav::read(input)?)?;
    let profile_clip = profile.map(|p| wav::read(p).and_then(at_rate)).transpose()?;
    let reference = match &profile_clip {
        Some(p) => NoiseReference::Profile(p),
        None => NoiseReference::Percentile { percentile: cfg.audio.percentile, scale: cfg.audio.percentile_scale },
    };
    let cleaned = spectral_gate(&clip, reference, &cfg.gate_params())?;
    wav::write(out, &cleaned, encoding)?;
    Ok(json!({
        "outputs": [path_str(out)],
        "sample_rate_hz": cleaned.sample_rate_hz(),
        "samples": cleaned.len(),
        "energy_in": clip.energy(),
        "energy_out": cleaned.energy(),
        "clipped": cleaned.clipped(),
    }))
}

/// Describes a file by sniffing its contents.
pub fn info(path: &Path) -> Result<Value> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(b"RIFF") {
        let clip = wav::read(path)?;
        return Ok(json!({"format": "wav", "sample_rate_hz": clip.sample_rate_hz(), "samples": clip.len(), "seconds": clip.duration_seconds()}));
    }
    let first_line = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    if let Ok(Value::Object(header)) = serde_json::from_slice::<Value>(first_line) {
        if header.contains_key("layout") {
            let (rec, domain) = eegb::decode(&bytes).map_err(|e| e.at(path))?;
            return Ok(json!({
                "format": "eegb",
                "channels": rec.n_channels(),
                "samples": rec.n_samples(),
                "fs_hz": rec.sample_rate_hz(),
                "domain": domain.map(Domain::as_str),
            }));
        }
        if header.contains_key("n_windows") {
            let ms = embeddings::decode(&bytes).map_err(|e| e.at(path))?;
            let (w, f) = ms.first().map_or((0, 0), |m| (m.n_windows, m.n_filters));
            return Ok(json!({"format": "embeddings", "count": ms.len(), "n_windows": w, "n_filters": f, "shape": format!("{w} x {f}")}));
        }
    }
    if let Ok(Value::Object(doc)) = serde_json::from_slice::<Value>(&bytes) {
        if doc.contains_key("filters") {
            let b = bank::read(path)?;
            return Ok(json!({"format": "bank", "n_filters": b.n_filters(), "n_channels": b.n_channels(), "classes": b.class_ids()}));
        }
        if doc.contains_key("unmixing") {
            let m = ica_model::read(path)?;
            return Ok(json!({"format": "ica", "components": m.k(), "channels": m.n_channels()}));
        }
        if doc.contains_key("directions") {
            let t = truth::read(path)?;
            return Ok(json!({"format": "ground_truth", "classes": t.n_classes, "channels": t.n_channels, "seed": t.seed}));
        }
    }
    if bytes.starts_with(events::HEADER.as_bytes()) {
        let ev = events::decode(&bytes, u32::MAX).map_err(|e| e.at(path))?;
        return Ok(json!({"format": "events", "count": ev.len()}));
    }
    Err(Error::Parse { path: path.to_path_buf(), offset: 0, reason: "unrecognized file format".into() })
}
