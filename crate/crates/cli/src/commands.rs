use std::fs;
use std::path::Path;
use std::thread;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use log::info;
use serde_json::json;

use vibromix::dsp::{ChannelStrip, CombineMode};
use vibromix::fidelity::{fidelity_report, FidelityOptions, FidelityReport, Recording};
use vibromix::io::csv_series::read_force_csv;
use vibromix::io::manifest::SessionManifest;
use vibromix::io::wav::{read_mono_wav, read_tri_wav, read_wav, write_lanes_wav};
use vibromix::io::{load_dataset, read_session, write_session, SessionExtras};
use vibromix::metrics::{trial_report, AccelStream, ForceZcr, TrialOptions};
use vibromix::pipeline::{ChannelConfig, Pipeline, PipelineConfig, RunMode, SourceBinding};
use vibromix::placement::{actuator_report, placement_report, RotationCeiling};
use vibromix::session::{Marker, Session, SessionLog, ToolRecording};
use vibromix::signal::{SampleBlock, SignalKind};
use vibromix::synth::{render_scenario, ScenarioScript};

use crate::{
    FidelityArgs, ModeArg, PipelineArgs, PlacementArgs, RunArgs, ServeArgs, SynthArgs, TrialArgs, ValidateArgs,
    ValidateKind,
};

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Config file, then `--in`, then per-flag overrides.
fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut config = match (&args.config, &args.input) {
        (Some(path), _) => PipelineConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(session)) => {
            let manifest = SessionManifest::load(session)?;
            let mut config = PipelineConfig::new(
                manifest
                    .channels
                    .iter()
                    .filter(|c| c.raw.is_some())
                    .enumerate()
                    .map(|(lane, c)| ChannelConfig {
                        id: c.id.clone(),
                        source: SourceBinding::File {
                            path: session.clone(),
                            lanes: None,
                            tool: None,
                        },
                        strip: ChannelStrip::default(),
                        sink_lane: lane,
                    })
                    .collect(),
            );
            config.rate = manifest.rate;
            config
        }
        (None, None) => bail!("give --config, --in or both"),
    };
    if let (Some(_), Some(session)) = (&args.config, &args.input) {
        for ch in &mut config.channels {
            ch.source = SourceBinding::File {
                path: session.clone(),
                lanes: None,
                tool: None,
            };
        }
    }
    if let Some(rate) = args.rate {
        config.rate = rate;
    }
    if let Some(b) = args.block_size {
        config.block_size = b;
    }
    for ch in &mut config.channels {
        if let Some(mode) = args.mode {
            ch.strip.mode = match mode {
                ModeArg::F0 => CombineMode::F0,
                ModeArg::F1 => CombineMode::F1,
                ModeArg::F3 => CombineMode::F3,
            };
        }
        if let Some(g) = args.gain_db {
            ch.strip.gain_db = g;
        }
        if args.no_filter {
            ch.strip.filter = None;
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn run(args: RunArgs) -> Result<()> {
    let mut config = pipeline_config(&args.pipeline)?;
    // recording is written below together with the lane file
    config.record_path = None;
    let pipeline = Pipeline::build(config)?;
    let latency = pipeline.latency();
    let mode = if args.realtime {
        RunMode::RealTime {
            duration: args.duration,
        }
    } else {
        RunMode::Offline
    };
    let out = pipeline.run(mode)?;

    create_out(&args.out)?;
    let mut session = out.session.clone();
    let mut extras = SessionExtras::default();
    if let Some(input) = &args.pipeline.input {
        let force = input.join("force.csv");
        if force.is_file() {
            session.force = Some(read_force_csv(&force)?.series);
        }
        let events = input.join("events.csv");
        if events.is_file() {
            extras.events_csv = Some(fs::read_to_string(&events)?);
        }
        // output is sample-aligned with the input, so its markers still hold
        let markers: Vec<Marker> = SessionManifest::load(input)?
            .markers
            .into_iter()
            .filter(|m| m.sample_index <= out.log.samples)
            .collect();
        if !markers.is_empty() {
            session.log.markers = markers;
        }
    }
    write_session(&args.out, &session, &extras)?;
    let lanes: Vec<&[f64]> = out.lanes.iter().map(|b| b.samples.as_slice()).collect();
    write_lanes_wav(&lanes, session.rate, &args.out.join("output.wav"))?;
    let summary = json!({
        "latency": latency,
        "latency_samples": latency.total_samples(session.rate),
        "samples": out.log.samples,
        "blocks": out.log.blocks,
        "deadline_misses": out.log.deadline_misses,
        "underruns": out.log.underruns.len(),
    });
    write(&args.out.join("run.json"), &serde_json::to_string_pretty(&summary)?)?;
    println!(
        "processed {} samples in {} blocks; latency {:.3} ms; deadline misses {}",
        out.log.samples,
        out.log.blocks,
        latency.total_s * 1e3,
        out.log.deadline_misses
    );
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let mut config = pipeline_config(&args.pipeline)?;
    config.record_path = args.out.clone().or(config.record_path);
    let mut pipeline = Pipeline::build(config)?;
    pipeline.retain_output(false);
    let handle = pipeline.control();
    let duration = args.duration;
    let worker = thread::Builder::new()
        .name("pipeline".into())
        .spawn(move || pipeline.run(RunMode::RealTime { duration }))?;

    let addr = format!("{}:{}", args.bind, args.port)
        .parse()
        .with_context(|| format!("bad bind address {}:{}", args.bind, args.port))?;
    let runtime = tokio::runtime::Runtime::new()?;
    let served = runtime.block_on({
        let handle = handle.clone();
        let worker = &worker;
        async move {
            let (local, server) = vibromix_service::bind(handle.clone(), addr).await?;
            println!("serving http://{local}/status and ws://{local}/control");
            let stopped = async move {
                while !worker.is_finished() {
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
            };
            tokio::select! {
                r = server => r.map_err(anyhow::Error::from),
                _ = tokio::signal::ctrl_c() => { info!("interrupted"); Ok(()) }
                _ = stopped => Ok(()),
            }
        }
    });
    handle.stop();
    let log = worker.join().expect("pipeline thread panicked")?.log;
    println!(
        "stopped after {} samples; deadline misses {}",
        log.samples, log.deadline_misses
    );
    served
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let text = fs::read_to_string(&args.script).with_context(|| format!("reading {}", args.script.display()))?;
    let mut script = ScenarioScript::from_json(&text)?;
    if let Some(seed) = args.seed {
        script.seed = seed;
    }
    if let Some(rate) = args.rate {
        script.rate = rate;
    }
    let rendered = render_scenario(&script)?;
    create_out(&args.out)?;
    let session = Session {
        rate: rendered.rate,
        tools: rendered
            .tools
            .iter()
            .map(|(id, series)| ToolRecording {
                id: id.clone(),
                raw: Some(series.clone()),
                post: None,
            })
            .collect(),
        force: rendered.force.clone(),
        log: SessionLog {
            rate: rendered.rate,
            samples: rendered.tools.values().next().map_or(0, |s| s.len() as u64),
            markers: rendered
                .markers
                .iter()
                .map(|(name, sample_index)| Marker {
                    name: name.clone(),
                    sample_index: *sample_index,
                })
                .collect(),
            ..SessionLog::default()
        },
    };
    let extras = SessionExtras {
        events_csv: Some(rendered.events_csv()),
        started_at: None,
    };
    write_session(&args.out, &session, &extras)?;
    write(&args.out.join("script.json"), &script.to_json()?)?;
    println!(
        "rendered {} tools, {} events, {:.3} s at {} Hz into {}",
        rendered.tools.len(),
        rendered.events.len(),
        script.duration,
        script.rate,
        args.out.display()
    );
    Ok(())
}

pub fn placement(args: PlacementArgs) -> Result<()> {
    let dataset = load_dataset(&args.manifest)?;
    let ceiling = match args.rotation_ceiling_db {
        Some(db) => RotationCeiling::Absolute { db },
        None => RotationCeiling::RelativeToContact {
            margin_db: args.rotation_margin_db,
        },
    };
    create_out(&args.out)?;
    let mut text = String::new();
    if !dataset.recordings.is_empty() {
        let report = placement_report(&dataset.recordings, ceiling)?;
        write(&args.out.join("snr.csv"), &report.to_csv())?;
        write(&args.out.join("snr_axes.csv"), &report.axes_csv())?;
        write(&args.out.join("snr.json"), &serde_json::to_string_pretty(&report)?)?;
        text.push_str(&report.to_string());
    }
    if !dataset.actuator.is_empty() {
        let report = actuator_report(&dataset.actuator)?;
        write(&args.out.join("energy_ratio.csv"), &report.to_csv())?;
        write(
            &args.out.join("energy_ratio.json"),
            &serde_json::to_string_pretty(&report)?,
        )?;
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&report.to_string());
    }
    if text.is_empty() {
        bail!("{} lists no recordings", args.manifest.display());
    }
    write(&args.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

/// A session directory yields the raw (tool side) or post-chain (handle
/// side) stream of `channel`; a WAV yields its one or three channels.
fn load_recording(path: &Path, channel: &str, handle_side: bool) -> Result<Recording> {
    if path.is_dir() {
        let manifest = SessionManifest::load(path)?;
        let ch = manifest
            .channels
            .iter()
            .find(|c| c.id == channel)
            .with_context(|| format!("{} has no channel {channel:?}", path.display()))?;
        let post = ch.post.as_ref().filter(|_| handle_side);
        return match (post, &ch.raw) {
            (Some(p), _) => Ok(Recording::Mono(read_mono_wav(&path.join(p))?)),
            (None, Some(r)) => Ok(Recording::Tri(read_tri_wav(&path.join(r), SignalKind::Acceleration)?)),
            (None, None) => bail!("{} channel {channel:?} has no streams", path.display()),
        };
    }
    let wav = read_wav(path)?;
    match wav.channels.len() {
        1 => Ok(Recording::Mono(SampleBlock::new(
            wav.channels[0].iter().map(|&v| v as f64).collect(),
            wav.rate as f64,
        ))),
        3 => Ok(Recording::Tri(read_tri_wav(path, SignalKind::Acceleration)?)),
        n => bail!("{}: expected 1 or 3 channels, found {n}", path.display()),
    }
}

pub fn fidelity(args: FidelityArgs) -> Result<()> {
    let channels = if args.channels.is_empty() {
        vec!["left".to_string()]
    } else {
        args.channels.clone()
    };
    let mut reports: Vec<FidelityReport> = Vec::new();
    for channel in &channels {
        let tool = load_recording(&args.tool, channel, false)?;
        let handle = load_recording(&args.handle, channel, true)?;
        let options = FidelityOptions {
            max_lag_s: args.max_lag,
            channel: channel.clone(),
        };
        reports.push(fidelity_report(&tool, &handle, &options).with_context(|| format!("channel {channel}"))?);
    }
    create_out(&args.out)?;
    let mut csv = format!("{}\n", FidelityReport::CSV_HEADER);
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
        println!(
            "{}: r = {:.4}, delay = {:.6} s ({} samples)",
            r.channel, r.r, r.delay_s, r.lag_samples
        );
    }
    write(&args.out.join("fidelity.csv"), &csv)?;
    write(
        &args.out.join("fidelity.json"),
        &serde_json::to_string_pretty(&reports)?,
    )?;
    Ok(())
}

pub fn trial_metrics(args: TrialArgs) -> Result<()> {
    let options = TrialOptions {
        accel_threshold: args.accel_threshold,
        force_threshold: args.force_threshold,
        accel_stream: if args.per_axis {
            AccelStream::PerAxis
        } else {
            AccelStream::Summed
        },
        force_zcr: if args.raw_force_zcr {
            ForceZcr::Raw
        } else {
            ForceZcr::MeanRemoved
        },
    };
    let mut csv = String::new();
    let mut summary = Vec::new();
    for dir in &args.sessions {
        let session = read_session(dir).with_context(|| format!("reading {}", dir.display()))?;
        let metrics = trial_report(&session, &options);
        let trial = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        if csv.is_empty() {
            csv = format!("{}\n", metrics.csv_header());
        }
        csv.push_str(&metrics.csv_row(&trial));
        csv.push('\n');
        for o in &metrics.omissions {
            eprintln!("{trial}: missing {o}");
        }
        summary.push(json!({"trial": trial, "metrics": metrics}));
    }
    create_out(&args.out)?;
    write(&args.out.join("trials.csv"), &csv)?;
    write(&args.out.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    print!("{csv}");
    Ok(())
}

fn guess_kind(path: &Path) -> Result<ValidateKind> {
    if path.is_dir() {
        return Ok(ValidateKind::Session);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(ValidateKind::Dataset),
        Some("json") => {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)
                .with_context(|| format!("{} is not JSON", path.display()))?;
            Ok(if v.get("channels").is_some() {
                ValidateKind::Config
            } else {
                ValidateKind::Script
            })
        }
        _ => bail!("cannot tell what {} is; pass --kind", path.display()),
    }
}

pub fn validate(args: ValidateArgs) -> Result<()> {
    let kind = match args.kind {
        Some(k) => k,
        None => guess_kind(&args.path)?,
    };
    let what = match kind {
        ValidateKind::Config => {
            let config = PipelineConfig::load(&args.path)?;
            config.validate()?;
            for ch in &config.channels {
                if let SourceBinding::File { path, .. } = &ch.source {
                    if !path.exists() {
                        bail!("channel {}: {} does not exist", ch.id, path.display());
                    }
                }
            }
            format!("pipeline config with {} channels", config.channels.len())
        }
        ValidateKind::Script => {
            let script = ScenarioScript::from_json(&fs::read_to_string(&args.path)?)?;
            script.validate()?;
            format!("scenario script with {} events", script.events.len())
        }
        ValidateKind::Session => {
            let manifest = SessionManifest::load(&args.path)?;
            manifest.validate(&args.path)?;
            format!(
                "session with {} channels at {} Hz",
                manifest.channels.len(),
                manifest.rate
            )
        }
        ValidateKind::Dataset => {
            let ds = load_dataset(&args.path)?;
            format!(
                "dataset with {} recordings and {} actuator trials",
                ds.recordings.len(),
                ds.actuator.len()
            )
        }
    };
    println!("{}: valid {what}", args.path.display());
    Ok(())
}
