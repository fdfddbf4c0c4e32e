//! Subcommand implementations behind the thin argument layer.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::config::{write_manifest, RunConfig};
use super::{vlog, CliError};
use crate::analysis::{
    gamma_group, gamma_report, kmeans_1d, retention_cdf, retention_histogram2d, tau_report,
    ClusterModel, Corpus, StatFeature,
};
use crate::audio::{
    compute_log_mel, default_target_frames, load_wav, patch_stats, patchify, MelSpectrogram,
    PatchGrid, PatchStats,
};
use crate::mac::{total_macs, write_mac_table};
use crate::model::{classify_forward, classify_forward_with_ablation, AblationSpec, ForwardOutput};
use crate::pruning::{keep_rate_at_epoch, IntensityGroup, KeepRateSchedule};
use crate::weights::{load_weights, random_init, save_weights, ModelWeights};

/// One input after the frontend pipeline.
pub struct PreparedInput {
    pub stem: String,
    pub grid: PatchGrid,
    pub stats: PatchStats,
}

fn input_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string())
}

/// WAV or spectrogram CSV -> padded, normalized, patchified input.
pub fn prepare_input(path: &Path, rc: &RunConfig) -> Result<PreparedInput, CliError> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mel: MelSpectrogram = if is_csv {
        let file =
            fs::File::open(path).map_err(|e| CliError::Io(format!("`{}`: {e}", path.display())))?;
        MelSpectrogram::from_csv(std::io::BufReader::new(file))?
    } else {
        let wave = load_wav(path)?;
        compute_log_mel(&wave, &rc.frontend)?
    };
    let target = rc
        .target_frames
        .unwrap_or_else(|| default_target_frames(mel.frames()));
    let mel = mel.pad_or_trim(target)?;
    let mel = mel.normalize(rc.norm.mean, rc.norm.std)?;
    let grid = patchify(&mel)?;
    let stats = patch_stats(&grid);
    Ok(PreparedInput {
        stem: input_stem(path),
        grid,
        stats,
    })
}

/// Runs `f` over the inputs on up to `jobs` threads; the result vector
/// keeps input order, so downstream writes are schedule-independent.
fn parallel_map<T, F>(inputs: &[PathBuf], jobs: usize, f: F) -> Vec<Result<T, CliError>>
where
    T: Send,
    F: Fn(&Path) -> Result<T, CliError> + Sync,
{
    let jobs = jobs.max(1).min(inputs.len().max(1));
    let results: Mutex<Vec<Option<Result<T, CliError>>>> =
        Mutex::new((0..inputs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= inputs.len() {
                    break;
                }
                let out = f(&inputs[i]);
                results.lock().expect("poisoned results")[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("poisoned results")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

fn ensure_out_dir(rc: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&rc.out_dir)
        .map_err(|e| CliError::Io(format!("creating `{}`: {e}", rc.out_dir.display())))
}

fn load_model(rc: &RunConfig) -> Result<ModelWeights, CliError> {
    let path = rc
        .weights
        .as_ref()
        .ok_or_else(|| CliError::Config(vec!["weights: no weights file configured".to_string()]))?;
    load_weights(path, &rc.model)
        .map_err(|e| CliError::Io(format!("weights `{}`: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing `{}`: {e}", path.display())))
}

fn require_inputs(inputs: &[PathBuf]) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Usage("no input files given".into()));
    }
    // Outputs are keyed by input stem; colliding stems would overwrite
    // each other's artifacts.
    let mut seen = std::collections::HashSet::new();
    for path in inputs {
        let stem = input_stem(path);
        if !seen.insert(stem.clone()) {
            return Err(CliError::Usage(format!(
                "two inputs share the stem `{stem}`; outputs would collide"
            )));
        }
    }
    Ok(())
}

/// `infer`: logits plus the per-input MAC accounting.
pub fn cmd_infer(rc: &RunConfig, inputs: &[PathBuf]) -> Result<(), CliError> {
    require_inputs(inputs)?;
    rc.validate()?;
    ensure_out_dir(rc)?;
    let weights = load_model(rc)?;
    let results = parallel_map(inputs, rc.jobs, |path| {
        let prepared = prepare_input(path, rc)?;
        let output = classify_forward(
            &prepared.grid,
            &weights,
            &rc.model,
            &rc.prune,
            Some(&prepared.stats),
            &prepared.stem,
        )?;
        Ok((prepared, output))
    });

    let mut logits_csv = Vec::new();
    writeln!(logits_csv, "input,class,logit").expect("vec write");
    let mut mac_csv = Vec::new();
    writeln!(mac_csv, "input,N,keep_rate,total_G").expect("vec write");
    for result in results {
        let (prepared, output): (PreparedInput, ForwardOutput) = result?;
        for (class, logit) in output.logits.iter().enumerate() {
            writeln!(logits_csv, "{},{},{}", prepared.stem, class, logit).expect("vec write");
        }
        let report = total_macs(prepared.grid.len(), &rc.prune, &rc.model);
        writeln!(
            mac_csv,
            "{},{},{},{:.1}",
            prepared.stem,
            prepared.grid.len(),
            rc.prune.keep_rate,
            report.total_g()
        )
        .expect("vec write");
        vlog(&format!(
            "{}: {} tokens, {:.1}G MACs",
            prepared.stem,
            prepared.grid.len(),
            report.total_g()
        ));
    }
    write_file(&rc.out_dir.join("logits.csv"), &logits_csv)?;
    write_file(&rc.out_dir.join("mac.csv"), &mac_csv)?;
    write_manifest(&rc.out_dir, "infer", rc, inputs)?;
    println!("wrote {}", rc.out_dir.join("logits.csv").display());
    println!("wrote {}", rc.out_dir.join("mac.csv").display());
    Ok(())
}

/// `trace`: attention log CSV, prune trace JSON, and patch stats CSV per
/// input, named by input stem.
pub fn cmd_trace(rc: &RunConfig, inputs: &[PathBuf]) -> Result<(), CliError> {
    require_inputs(inputs)?;
    rc.validate()?;
    ensure_out_dir(rc)?;
    let weights = load_model(rc)?;
    let results = parallel_map(inputs, rc.jobs, |path| {
        let prepared = prepare_input(path, rc)?;
        let output = classify_forward(
            &prepared.grid,
            &weights,
            &rc.model,
            &rc.prune,
            Some(&prepared.stats),
            &prepared.stem,
        )?;

        let mut log_csv = Vec::new();
        output
            .log
            .write_csv(&mut log_csv)
            .map_err(|e| CliError::Io(e.to_string()))?;
        write_file(
            &rc.out_dir.join(format!("{}.attn.csv", prepared.stem)),
            &log_csv,
        )?;

        let trace_json = output.trace.to_json()?;
        write_file(
            &rc.out_dir.join(format!("{}.trace.json", prepared.stem)),
            trace_json.as_bytes(),
        )?;

        let mut stats_csv = Vec::new();
        prepared
            .stats
            .write_csv(&mut stats_csv)
            .map_err(|e| CliError::Io(e.to_string()))?;
        write_file(
            &rc.out_dir.join(format!("{}.stats.csv", prepared.stem)),
            &stats_csv,
        )?;
        vlog(&format!(
            "{}: {} log rows, {} prune events",
            prepared.stem,
            output.log.rows.len(),
            output.trace.events.len()
        ));
        Ok(prepared.stem)
    });
    for r in results {
        r?;
    }
    write_manifest(&rc.out_dir, "trace", rc, inputs)?;
    println!("wrote traces to {}", rc.out_dir.display());
    Ok(())
}

/// `mac`: the `N,keep_rate,total_G` cost table.
pub fn cmd_mac(
    rc: &RunConfig,
    token_counts: &[usize],
    keep_rates: &[f64],
    to_file: bool,
) -> Result<(), CliError> {
    rc.validate()?;
    let mut out = Vec::new();
    write_mac_table(
        &mut out,
        token_counts,
        keep_rates,
        &rc.model,
        &rc.prune.locations,
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    print!("{}", String::from_utf8_lossy(&out));
    if to_file {
        ensure_out_dir(rc)?;
        write_file(&rc.out_dir.join("mac.csv"), &out)?;
        write_manifest(&rc.out_dir, "mac", rc, &[])?;
        println!("wrote {}", rc.out_dir.join("mac.csv").display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzeMode {
    Tau,
    Gamma,
    Hist,
    Cdf,
    Cluster,
}

impl AnalyzeMode {
    pub fn parse(s: &str) -> Result<AnalyzeMode, CliError> {
        match s {
            "tau" => Ok(AnalyzeMode::Tau),
            "gamma" => Ok(AnalyzeMode::Gamma),
            "hist" => Ok(AnalyzeMode::Hist),
            "cdf" => Ok(AnalyzeMode::Cdf),
            "cluster" => Ok(AnalyzeMode::Cluster),
            other => Err(CliError::Usage(format!(
                "unknown analyze mode `{other}` (expected tau, gamma, hist, cdf or cluster)"
            ))),
        }
    }
}

fn fit_clusters(corpus: &Corpus, feature: StatFeature) -> Result<ClusterModel, CliError> {
    let values = corpus.pooled_feature(feature);
    Ok(kmeans_1d(&values, 5, feature)?)
}

fn trace_locations(corpus: &Corpus) -> Result<Vec<usize>, CliError> {
    let first = corpus
        .samples
        .first()
        .ok_or_else(|| CliError::Io("empty corpus".into()))?;
    for s in &corpus.samples {
        if s.trace.locations != first.trace.locations {
            return Err(CliError::Config(vec![format!(
                "traces disagree on pruning locations: `{}` has {:?}, `{}` has {:?}",
                first.id, first.trace.locations, s.id, s.trace.locations
            )]));
        }
    }
    Ok(first.trace.locations.clone())
}

/// `analyze`: statistical reports over a directory of trace artifacts.
pub fn cmd_analyze(
    rc: &RunConfig,
    trace_dir: &Path,
    mode: AnalyzeMode,
    feature: StatFeature,
    bins: usize,
    exclude_padding: bool,
) -> Result<(), CliError> {
    let corpus = Corpus::from_dir(trace_dir)?;
    ensure_out_dir(rc)?;
    let cm = fit_clusters(&corpus, feature)?;
    match mode {
        AnalyzeMode::Cluster => {
            let json = serde_json::to_string_pretty(&cm)
                .map_err(|e| CliError::Io(format!("clusters serialization: {e}")))?;
            write_file(&rc.out_dir.join("clusters.json"), json.as_bytes())?;
            println!("wrote {}", rc.out_dir.join("clusters.json").display());
        }
        AnalyzeMode::Tau => {
            let report = tau_report(&corpus, &cm)?;
            let mut csv = Vec::new();
            writeln!(csv, "block,tau").expect("vec write");
            for (block, tau) in &report.rows {
                writeln!(csv, "{block},{tau}").expect("vec write");
            }
            writeln!(csv, "avg,{}", report.average).expect("vec write");
            write_file(&rc.out_dir.join("tau_report.csv"), &csv)?;
            println!("wrote {}", rc.out_dir.join("tau_report.csv").display());
        }
        AnalyzeMode::Gamma => {
            let locations = trace_locations(&corpus)?;
            let report = gamma_report(&corpus, &cm, &locations);
            let mut csv = Vec::new();
            writeln!(csv, "block,cluster,gamma").expect("vec write");
            for cell in &report.cells {
                match cell.gamma {
                    Some(g) => writeln!(csv, "{},{},{}", cell.block, cell.cluster, g),
                    None => writeln!(csv, "{},{},", cell.block, cell.cluster),
                }
                .expect("vec write");
            }
            write_file(&rc.out_dir.join("gamma_report.csv"), &csv)?;
            println!("wrote {}", rc.out_dir.join("gamma_report.csv").display());

            let mut gcsv = Vec::new();
            writeln!(gcsv, "group,Gamma").expect("vec write");
            for group in &report.groups {
                let value = gamma_group(&report, group.index)?;
                writeln!(gcsv, "{},{}", group.index, value).expect("vec write");
            }
            write_file(&rc.out_dir.join("Gamma_report.csv"), &gcsv)?;
            println!("wrote {}", rc.out_dir.join("Gamma_report.csv").display());
        }
        AnalyzeMode::Hist => {
            let (input, retained) = retention_histogram2d(&corpus, bins, exclude_padding)?;
            let mut icsv = Vec::new();
            input
                .write_csv(&mut icsv)
                .map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&rc.out_dir.join("hist2d_input.csv"), &icsv)?;
            let mut rcsv = Vec::new();
            retained
                .write_csv(&mut rcsv)
                .map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&rc.out_dir.join("hist2d_retained.csv"), &rcsv)?;
            println!(
                "wrote {} and {}",
                rc.out_dir.join("hist2d_input.csv").display(),
                rc.out_dir.join("hist2d_retained.csv").display()
            );
        }
        AnalyzeMode::Cdf => {
            let cdf = retention_cdf(&corpus, &cm)?;
            let mut csv = Vec::new();
            cdf.write_csv(&mut csv)
                .map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&rc.out_dir.join("cdf.csv"), &csv)?;
            let json = serde_json::to_string_pretty(&cm)
                .map_err(|e| CliError::Io(format!("clusters serialization: {e}")))?;
            write_file(&rc.out_dir.join("clusters.json"), json.as_bytes())?;
            println!("wrote {}", rc.out_dir.join("cdf.csv").display());
        }
    }
    write_manifest(&rc.out_dir, "analyze", rc, &[trace_dir.to_path_buf()])?;
    Ok(())
}

/// `ablate`: discard an intensity group after one block and report
/// logits plus survivor counts per cluster.
pub fn cmd_ablate(
    rc: &RunConfig,
    inputs: &[PathBuf],
    group: IntensityGroup,
    block: usize,
    clusters_file: Option<&Path>,
) -> Result<(), CliError> {
    require_inputs(inputs)?;
    rc.validate()?;
    if block == 0 || block > rc.model.depth {
        return Err(CliError::Config(vec![format!(
            "ablation block {block} outside 1..={}",
            rc.model.depth
        )]));
    }
    ensure_out_dir(rc)?;
    let weights = load_model(rc)?;

    // Frontend pass first: the cluster model is fitted on the inputs'
    // pooled patch means unless one is supplied.
    let prepared = {
        let results = parallel_map(inputs, rc.jobs, |path| prepare_input(path, rc));
        let mut list = Vec::with_capacity(results.len());
        for r in results {
            list.push(r?);
        }
        list
    };
    let cm: ClusterModel = match clusters_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("`{}`: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Config(vec![format!("clusters `{}`: {e}", path.display())])
            })?
        }
        None => {
            let pooled: Vec<f32> = prepared
                .iter()
                .flat_map(|p| p.stats.means.iter().copied())
                .collect();
            kmeans_1d(&pooled, 5, StatFeature::Mean)?
        }
    };

    let spec = AblationSpec { group, block };
    let mut logits_csv = Vec::new();
    writeln!(logits_csv, "input,class,logit").expect("vec write");
    let mut survivors_csv = Vec::new();
    writeln!(survivors_csv, "input,cluster,count").expect("vec write");
    for p in &prepared {
        let output = classify_forward_with_ablation(
            &p.grid, &weights, &rc.model, &spec, &cm, &p.stats, &p.stem,
        )?;
        for (class, logit) in output.logits.iter().enumerate() {
            writeln!(logits_csv, "{},{},{}", p.stem, class, logit).expect("vec write");
        }
        let survivors = output.trace.final_survivors();
        let mut counts = [0usize; 5];
        for provenance in survivors {
            counts[cm.assign(p.stats.means[provenance]) - 1] += 1;
        }
        for (cluster, count) in counts.iter().enumerate() {
            writeln!(survivors_csv, "{},{},{}", p.stem, cluster + 1, count).expect("vec write");
        }
    }
    write_file(&rc.out_dir.join("logits.csv"), &logits_csv)?;
    write_file(&rc.out_dir.join("survivors.csv"), &survivors_csv)?;
    write_manifest(&rc.out_dir, "ablate", rc, inputs)?;
    println!("wrote {}", rc.out_dir.join("logits.csv").display());
    println!("wrote {}", rc.out_dir.join("survivors.csv").display());
    Ok(())
}

/// `schedule`: the epoch -> keep-rate table.
pub fn cmd_schedule(schedule: &KeepRateSchedule, epochs: usize) -> Result<(), CliError> {
    if !(schedule.target_kr > 0.0 && schedule.target_kr <= 1.0) {
        return Err(CliError::Config(vec![format!(
            "target keep rate {} outside (0, 1]",
            schedule.target_kr
        )]));
    }
    let mut out = String::from("epoch,keep_rate\n");
    for epoch in 0..=epochs {
        out.push_str(&format!(
            "{},{}\n",
            epoch,
            keep_rate_at_epoch(schedule, epoch)
        ));
    }
    print!("{out}");
    Ok(())
}

/// `make-toy-weights`: deterministic random initialization to disk.
pub fn cmd_make_toy_weights(rc: &RunConfig, out_path: &Path) -> Result<(), CliError> {
    rc.validate()?;
    let weights = random_init(&rc.model, rc.seed);
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("creating `{}`: {e}", parent.display())))?;
        }
    }
    save_weights(&weights, out_path)?;
    let entries = weights.to_entries().len();
    println!(
        "wrote {} ({} tensors, seed {})",
        out_path.display(),
        entries,
        rc.seed
    );
    Ok(())
}
