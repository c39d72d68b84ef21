//! Config-driven experiment dispatch. One call = one fresh run directory
//! containing every artifact plus a `run_record.json` whose manifest hashes
//! them all. Identical config + seed reproduces identical artifact bytes.

use std::path::PathBuf;
use std::sync::Arc;

use crate::classifiers::{save_checkpoint, train_reference, DifferentiableClassifier};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_accuracy, multiview_confidence, robustness_table, robustness_table_paired,
    scene_sweep, transfer_diagonal_means, transfer_matrix, Cell, SweepRanges, Table,
};
use crate::experiment::config::{ExperimentConfig, JobKind, SignalSection};
use crate::experiment::record::{now_unix, sha256_hex, RunRecord, RunWriter};
use crate::image::Image;
use crate::renderer::{render_batch, sample_scene_params, save_ply, Camera, Light, TextureBinding};
use crate::rng::SeedTree;
use crate::signals2d::{harden_dataset, mean_confidence_with_patch, train_patch_2d, Patch};
use crate::signals3d::{
    optimize_full_texture, optimize_masked_texture, optimize_patch_3d, SceneTemplate, SignalMode,
    TextureMask, TracePoint, ViewSampling,
};

/// Most view PNG renders a single job emits for inspection.
const RENDER_CAP: usize = 9;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub deceptive: bool,
}

impl Default for CliOverrides {
    fn default() -> Self {
        CliOverrides {
            seed: None,
            out_dir: PathBuf::from("runs"),
            deceptive: false,
        }
    }
}

/// Parse, validate, and execute one experiment. Returns the completed record
/// and the run directory.
pub fn run_experiment(
    config_text: &str,
    expected_kind: Option<JobKind>,
    overrides: &CliOverrides,
) -> Result<(RunRecord, PathBuf)> {
    let mut config = ExperimentConfig::from_toml(config_text)?;
    if let Some(kind) = expected_kind {
        if config.kind != kind {
            return Err(Error::Config(format!(
                "kind: config says '{}' but the subcommand is '{}'",
                config.kind.as_str(),
                kind.as_str()
            )));
        }
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
        if let Some(optim) = &mut config.optim {
            optim.seed = seed;
        }
    }
    if overrides.deceptive {
        flip_mode(&mut config)?;
    }

    let effective = config.to_toml();
    let started = now_unix();
    let hash8: String = sha256_hex(effective.as_bytes())[..8].to_string();
    let writer = create_run_dir(&overrides.out_dir, config.kind.as_str(), started, &hash8)?;
    let dir = writer.dir().to_path_buf();

    let writer = dispatch(&config, writer)?;
    let record = writer.finalize(config.kind.as_str(), config.seed, &effective, started)?;
    Ok((record, dir))
}

fn create_run_dir(out: &std::path::Path, kind: &str, stamp: u64, hash8: &str) -> Result<RunWriter> {
    for attempt in 0..1000 {
        let name = if attempt == 0 {
            format!("{kind}-{stamp}-{hash8}")
        } else {
            format!("{kind}-{stamp}-{hash8}-{attempt}")
        };
        match RunWriter::create(out.join(name)) {
            Ok(w) => return Ok(w),
            Err(Error::Config(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Resource("could not allocate a run directory".into()))
}

/// `--deceptive` toggles the signal mode of 3D jobs.
fn flip_mode(config: &mut ExperimentConfig) -> Result<()> {
    match config.kind {
        JobKind::Texture3d | JobKind::Patch3d | JobKind::Transfer => {}
        other => {
            return Err(Error::Config(format!(
                "--deceptive does not apply to kind '{}'",
                other.as_str()
            )))
        }
    }
    let signal = config
        .signal
        .as_mut()
        .ok_or_else(|| Error::Config("signal: section required for --deceptive".into()))?;
    signal.mode = match signal.mode {
        SignalMode::Assistive { target } => SignalMode::DeceptiveUntargeted { true_label: target },
        SignalMode::DeceptiveUntargeted { true_label } => {
            SignalMode::Assistive { target: true_label }
        }
        SignalMode::DeceptiveTargeted { true_label, .. } => {
            SignalMode::Assistive { target: true_label }
        }
    };
    Ok(())
}

fn dispatch(config: &ExperimentConfig, writer: RunWriter) -> Result<RunWriter> {
    match config.kind {
        JobKind::TrainRef => run_train_ref(config, writer),
        JobKind::Harden => run_harden(config, writer),
        JobKind::AttackEval => run_attack_eval(config, writer),
        JobKind::Patch2d => run_patch2d(config, writer),
        JobKind::Texture3d => run_texture3d(config, writer),
        JobKind::Patch3d => run_patch3d(config, writer),
        JobKind::Sweep => run_sweep(config, writer),
        JobKind::Transfer => run_transfer(config, writer),
        JobKind::Render => run_render(config, writer),
    }
}

/// Emit `summary.txt` plus one CSV per table. Re-emitting the same inputs
/// produces byte-identical files.
pub fn write_report(writer: &mut RunWriter, summary: &[String], tables: &[Table]) -> Result<()> {
    let mut text = String::new();
    for line in summary {
        text.push_str(line);
        text.push('\n');
    }
    writer.write_text("summary.txt", &text)?;
    for table in tables {
        writer.write_text(&format!("tables/{}.csv", table.name), &table.to_csv())?;
    }
    Ok(())
}

fn load_model_for_dataset(
    config: &ExperimentConfig,
    ds: &LabeledDataset,
) -> Result<Arc<dyn DifferentiableClassifier>> {
    let shape = ds
        .get(0)
        .map(|(img, _)| img.shape())
        .ok_or_else(|| Error::Domain("empty dataset".into()))?;
    config.require_model()?.load(shape)
}

fn save_dataset(writer: &mut RunWriter, prefix: &str, ds: &LabeledDataset) -> Result<()> {
    let mut counters = vec![0usize; ds.num_classes()];
    for (img, label) in ds.iter() {
        let idx = counters[*label];
        counters[*label] += 1;
        writer.write_png(&format!("{prefix}/class_{label:03}/{idx:05}.png"), img)?;
    }
    Ok(())
}

fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("iteration,loss,mean_confidence\n");
    for p in trace {
        out.push_str(&format!("{},{:.6},{:.6}\n", p.iteration, p.loss, p.mean_confidence));
    }
    out
}

fn heldout_views(template: &SceneTemplate, seed: u64, count: usize) -> Result<Vec<(Camera, Light)>> {
    let mut rng = SeedTree::new(seed).child_str("heldout").rng();
    sample_scene_params(&mut rng, &template.ranges, count)
}

fn views_table(name: &str, rows: Vec<(String, Vec<Cell>)>) -> Table {
    let cols = rows
        .first()
        .map(|(_, cells)| (1..=cells.len()).map(|i| format!("view{i}")).collect())
        .unwrap_or_default();
    Table {
        name: name.into(),
        row_labels: rows.iter().map(|(l, _)| l.clone()).collect(),
        col_labels: cols,
        cells: rows.into_iter().map(|(_, c)| c).collect(),
    }
}

fn run_train_ref(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let train_section = config
        .train
        .as_ref()
        .ok_or_else(|| Error::Config("train: section required for kind 'train-ref'".into()))?;
    let full = config.require_dataset()?.load(config.seed)?;

    // deterministic per-class tail split for the test metric
    let mut test_idx = Vec::new();
    let mut train_idx = Vec::new();
    if train_section.test_fraction > 0.0 {
        if !(0.0..=0.9).contains(&train_section.test_fraction) {
            return Err(Error::Config("train.test_fraction: must be in [0, 0.9]".into()));
        }
        let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); full.num_classes()];
        for (i, (_, label)) in full.iter().enumerate() {
            per_class[*label].push(i);
        }
        for ids in per_class {
            let n_test = (ids.len() as f64 * train_section.test_fraction).floor() as usize;
            let split = ids.len() - n_test;
            train_idx.extend_from_slice(&ids[..split]);
            test_idx.extend_from_slice(&ids[split..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
    } else {
        train_idx = (0..full.len()).collect();
    }
    let train_ds = full.subset(&train_idx)?;
    let test_ds = if test_idx.is_empty() {
        None
    } else {
        Some(full.subset(&test_idx)?)
    };

    let (model, report) = train_reference(
        &train_ds,
        train_section.image_size,
        train_section.image_size,
        &train_section.options(config.seed),
        test_ds.as_ref(),
    )?;

    let ckpt_path = writer.dir().join("model.ckpt");
    save_checkpoint(&model, &ckpt_path)?;
    writer.register("model.ckpt")?;
    writer.write_text(
        "train_report.json",
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    write_report(
        &mut writer,
        &[
            "kind: train-ref".to_string(),
            format!("model: {}", model.identity()),
            format!("train_items: {}", train_ds.len()),
            format!("test_items: {}", test_ds.map(|d| d.len()).unwrap_or(0)),
            format!("train_accuracy: {:.4}", report.train_accuracy),
            format!(
                "test_accuracy: {}",
                report
                    .test_accuracy
                    .map(|a| format!("{a:.4}"))
                    .unwrap_or_else(|| "n/a".into())
            ),
        ],
        &[],
    )?;
    Ok(writer)
}

fn run_harden(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let ds = config.require_dataset()?.load(config.seed)?;
    let model = load_model_for_dataset(config, &ds)?;
    let optim = config.require_optim()?;

    let before = evaluate_accuracy(model.as_ref(), &ds)?;
    let (hardened, warnings) = harden_dataset(model.as_ref(), &ds, optim)?;
    let after = evaluate_accuracy(model.as_ref(), &hardened)?;
    save_dataset(&mut writer, "hardened", &hardened)?;

    let mut csv = String::from("item,label,warning\n");
    let warn_set: std::collections::BTreeSet<usize> = warnings.iter().copied().collect();
    for (i, (_, label)) in hardened.iter().enumerate() {
        csv.push_str(&format!("{i},{label},{}\n", warn_set.contains(&i)));
    }
    writer.write_text("hardening.csv", &csv)?;
    write_report(
        &mut writer,
        &[
            "kind: harden".to_string(),
            format!("items: {}", hardened.len()),
            format!("warnings: {}", warnings.len()),
            format!(
                "original: accuracy {:.4} mean_confidence {:.4}",
                before.accuracy, before.mean_true_confidence
            ),
            format!(
                "hardened: accuracy {:.4} mean_confidence {:.4}",
                after.accuracy, after.mean_true_confidence
            ),
        ],
        &[],
    )?;
    Ok(writer)
}

fn run_attack_eval(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let attacks = config
        .attacks
        .as_ref()
        .ok_or_else(|| Error::Config("attacks: section required for kind 'attack-eval'".into()))?;
    let ds = config.require_dataset()?.load(config.seed)?;
    let model = load_model_for_dataset(config, &ds)?;

    let table = match &config.paired_dataset {
        Some(paired) => {
            let original = paired.load(config.seed)?;
            robustness_table_paired(model.as_ref(), &ds, &original, attacks)?
        }
        None => robustness_table(model.as_ref(), &ds, attacks)?,
    };
    write_report(
        &mut writer,
        &[
            "kind: attack-eval".to_string(),
            format!("model: {}", model.identity()),
            format!("items: {}", ds.len()),
        ],
        &[table],
    )?;
    Ok(writer)
}

fn patch_sidecar(patch: &Patch, config_hash: &str, seed: u64) -> String {
    serde_json::to_string_pretty(&serde_json::json!({
        "target_label": patch.target_label,
        "height": patch.size().0,
        "width": patch.size().1,
        "config_hash": config_hash,
        "seed": seed,
    }))
    .expect("sidecar serializes")
}

fn run_patch2d(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let section = config
        .patch2d
        .as_ref()
        .ok_or_else(|| Error::Config("patch2d: section required for kind 'patch2d'".into()))?;
    let optim = config.require_optim()?;
    let ds = config.require_dataset()?.load(config.seed)?;
    let model = load_model_for_dataset(config, &ds)?;

    // assistive patches train only on the target class
    let positive_idx: Vec<usize> = ds
        .iter()
        .enumerate()
        .filter(|(_, (_, l))| *l == section.target_label)
        .map(|(i, _)| i)
        .collect();
    if positive_idx.is_empty() {
        return Err(Error::Config(format!(
            "patch2d.target_label: dataset has no items of class {}",
            section.target_label
        )));
    }
    let positives = ds.subset(&positive_idx)?;
    let patch = train_patch_2d(
        model.as_ref(),
        &positives,
        section.target_label,
        &section.train,
        optim,
    )?;

    let with = mean_confidence_with_patch(
        model.as_ref(),
        &positives,
        Some(&patch),
        section.target_label,
        config.seed,
    )?;
    let without = mean_confidence_with_patch(
        model.as_ref(),
        &positives,
        None,
        section.target_label,
        config.seed,
    )?;

    writer.write_png("patch.png", &patch.pixels)?;
    let hash = sha256_hex(config.to_toml().as_bytes());
    writer.write_text("patch.json", &patch_sidecar(&patch, &hash, config.seed))?;
    write_report(
        &mut writer,
        &[
            "kind: patch2d".to_string(),
            format!("target_label: {}", section.target_label),
            format!("positives: {}", positives.len()),
            format!("mean_confidence_with_patch: {with:.4}"),
            format!("mean_confidence_without_patch: {without:.4}"),
        ],
        &[],
    )?;
    Ok(writer)
}

fn sampling_of(signal: &SignalSection) -> Result<ViewSampling> {
    match &signal.fixed_views {
        Some(views) => {
            let built: Vec<(Camera, Light)> = views
                .iter()
                .map(|v| v.build())
                .collect::<Result<_>>()?;
            Ok(ViewSampling::Fixed(built))
        }
        None => Ok(ViewSampling::Fresh),
    }
}

fn write_texture(writer: &mut RunWriter, name: &str, template: &SceneTemplate, texture: &TextureBinding) -> Result<String> {
    match texture {
        TextureBinding::Uv(t) => {
            let rel = format!("{name}.png");
            writer.write_png(&rel, &t.to_image())?;
            Ok(rel)
        }
        TextureBinding::Vertex(v) => {
            let rel = format!("{name}.ply");
            save_ply(&template.mesh, v, &writer.dir().join(&rel))?;
            writer.register(&rel)?;
            Ok(rel)
        }
    }
}

fn run_texture3d(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let signal = config.require_signal()?;
    let template = config.require_scene()?.build()?;
    let model = config.require_model()?.load(template.image_size)?;
    let optim = config.require_optim()?;
    let sampling = sampling_of(signal)?;

    let out = match &signal.mask_png {
        Some(path) => {
            let mask_img = Image::load_png(path)?;
            let tex_res = match &template.texture {
                TextureBinding::Uv(t) => t.resolution(),
                TextureBinding::Vertex(_) => {
                    return Err(Error::Config(
                        "signal.mask_png: masks apply to uv textures only".into(),
                    ))
                }
            };
            if mask_img.shape() != (tex_res, tex_res) {
                return Err(Error::Config(format!(
                    "signal.mask_png: mask {:?} does not match texture {tex_res}x{tex_res}",
                    mask_img.shape()
                )));
            }
            let bits: Vec<bool> = (0..tex_res * tex_res)
                .map(|i| {
                    let (r, c) = (i / tex_res, i % tex_res);
                    (mask_img.get(r, c, 0) + mask_img.get(r, c, 1) + mask_img.get(r, c, 2)) / 3.0
                        > 0.5
                })
                .collect();
            let mask = TextureMask::from_bits(bits)?;
            optimize_masked_texture(
                model.as_ref(),
                &template,
                &mask,
                &signal.mode,
                optim,
                signal.views_per_step,
                &sampling,
            )?
        }
        None => optimize_full_texture(
            model.as_ref(),
            &template,
            &signal.mode,
            optim,
            signal.views_per_step,
            &sampling,
        )?,
    };

    writer.write_text("trace.csv", &trace_csv(&out.trace))?;
    write_texture(&mut writer, "texture", &template, &out.texture)?;

    let held = heldout_views(&template, config.seed, signal.eval_views)?;
    let report_label = signal.mode.report_label();
    let cells = multiview_confidence(model.as_ref(), &template, &out.texture, &held, report_label)?;
    let baseline =
        multiview_confidence(model.as_ref(), &template, &template.texture, &held, report_label)?;
    let table = views_table(
        "heldout",
        vec![("original".into(), baseline), ("optimized".into(), cells.clone())],
    );

    let batch = render_batch(&template.scene_with(&out.texture, &held[..held.len().min(3)]))?;
    for (i, img) in batch.images.iter().enumerate() {
        writer.write_png(&format!("views/view_{i:03}.png"), img)?;
    }

    let final_point = out.trace.last().expect("trace is never empty");
    let mean_heldout: f64 = cells
        .iter()
        .map(|c| match c {
            Cell::Value(v) => *v,
            _ => 0.0,
        })
        .sum::<f64>()
        / cells.len() as f64;
    write_report(
        &mut writer,
        &[
            "kind: texture3d".to_string(),
            format!("model: {}", model.identity()),
            format!("iterations: {}", optim.iterations),
            format!("final_loss: {:.6}", final_point.loss),
            format!("final_mean_confidence: {:.6}", final_point.mean_confidence),
            format!("heldout_mean_confidence: {mean_heldout:.6}"),
        ],
        &[table],
    )?;
    Ok(writer)
}

fn run_patch3d(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let signal = config.require_signal()?;
    let region = config
        .patch_region
        .as_ref()
        .ok_or_else(|| Error::Config("patch_region: section required for kind 'patch3d'".into()))?;
    let template = config.require_scene()?.build()?;
    let model = config.require_model()?.load(template.image_size)?;
    let optim = config.require_optim()?;
    let sampling = sampling_of(signal)?;

    let (patch, texture, trace) = optimize_patch_3d(
        model.as_ref(),
        &template,
        region,
        &signal.mode,
        optim,
        signal.views_per_step,
        &sampling,
    )?;

    writer.write_png("patch.png", &patch.pixels)?;
    let hash = sha256_hex(config.to_toml().as_bytes());
    writer.write_text("patch.json", &patch_sidecar(&patch, &hash, config.seed))?;
    writer.write_text("trace.csv", &trace_csv(&trace))?;
    let patched = TextureBinding::Uv(texture);
    write_texture(&mut writer, "texture", &template, &patched)?;

    let held = heldout_views(&template, config.seed, signal.eval_views)?;
    let label = signal.mode.report_label();
    let baseline =
        multiview_confidence(model.as_ref(), &template, &template.texture, &held, label)?;
    let with_patch = multiview_confidence(model.as_ref(), &template, &patched, &held, label)?;
    let table = views_table(
        "heldout",
        vec![("baseline".into(), baseline), ("patched".into(), with_patch)],
    );
    let preview = &held[..held.len().min(RENDER_CAP)];
    let base_batch = render_batch(&template.scene_with(&template.texture, preview))?;
    let patched_batch = render_batch(&template.scene_with(&patched, preview))?;
    for (i, (b, p)) in base_batch.images.iter().zip(&patched_batch.images).enumerate() {
        writer.write_png(&format!("views/baseline_{i:03}.png"), b)?;
        writer.write_png(&format!("views/patched_{i:03}.png"), p)?;
    }
    write_report(
        &mut writer,
        &[
            "kind: patch3d".to_string(),
            format!("region: {}x{} at ({},{})", region.height, region.width, region.row, region.col),
            format!("final_mean_confidence: {:.6}", trace.last().expect("non-empty").mean_confidence),
        ],
        &[table],
    )?;
    Ok(writer)
}

fn run_sweep(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let section = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep: section required for kind 'sweep'".into()))?;
    let template = config.require_scene()?.build()?;
    let model = config.require_model()?.load(template.image_size)?;
    let lights: Vec<Light> = section
        .lights
        .iter()
        .map(|l| l.build())
        .collect::<Result<_>>()?;
    let ranges = SweepRanges {
        azimuths_deg: section.azimuths_deg.clone(),
        elevations_deg: section.elevations_deg.clone(),
        distances: section.distances.clone(),
        lights: lights.clone(),
        fov_y_deg: section.fov_y_deg,
    };
    let grid = scene_sweep(
        model.as_ref(),
        &template,
        &template.texture,
        &ranges,
        section.true_label,
        section.cell_cap,
    )?;
    // render the first few cells for inspection
    let mut preview = Vec::new();
    for cell in grid.cells.iter().take(RENDER_CAP) {
        preview.push((
            Camera {
                distance: cell.distance,
                azimuth_deg: cell.azimuth_deg,
                elevation_deg: cell.elevation_deg,
                fov_y_deg: section.fov_y_deg,
            },
            lights[cell.light_index],
        ));
    }
    let batch = render_batch(&template.scene_with(&template.texture, &preview))?;
    for (i, img) in batch.images.iter().enumerate() {
        writer.write_png(&format!("views/cell_{i:04}.png"), img)?;
    }
    write_report(
        &mut writer,
        &[
            "kind: sweep".to_string(),
            format!("cells: {}", grid.cells.len()),
            format!("misclassified: {}", grid.misclassified()),
            format!("rendered_previews: {}", preview.len()),
        ],
        &[grid.to_table()],
    )?;
    Ok(writer)
}

fn run_transfer(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let signal = config.require_signal()?;
    let template = config.require_scene()?.build()?;
    let optim = config.require_optim()?;
    let models_cfg = config
        .models
        .as_ref()
        .ok_or_else(|| Error::Config("models: section required for kind 'transfer'".into()))?;
    if models_cfg.len() < 2 {
        return Err(Error::Config("models: transfer needs >= 2 models".into()));
    }
    let sampling = sampling_of(signal)?;

    let mut entries: Vec<(Arc<dyn DifferentiableClassifier>, TextureBinding)> = Vec::new();
    for (i, mc) in models_cfg.iter().enumerate() {
        let model = mc.load(template.image_size)?;
        let out = optimize_full_texture(
            model.as_ref(),
            &template,
            &signal.mode,
            optim,
            signal.views_per_step,
            &sampling,
        )
        .map_err(|e| e.with_context(&format!("model {i}")))?;
        write_texture(&mut writer, &format!("texture_{i}"), &template, &out.texture)?;
        entries.push((model, out.texture));
    }

    let held = heldout_views(&template, config.seed, signal.eval_views)?;
    for (i, (_, texture)) in entries.iter().enumerate() {
        let preview = &held[..held.len().min(RENDER_CAP)];
        let batch = render_batch(&template.scene_with(texture, preview))?;
        for (v, img) in batch.images.iter().enumerate() {
            writer.write_png(&format!("views/texture{i}_view{v:03}.png"), img)?;
        }
    }
    let table = transfer_matrix(&entries, &template, &held, signal.mode.report_label())?;
    let (diag, off) = transfer_diagonal_means(&table, entries.len(), held.len());
    write_report(
        &mut writer,
        &[
            "kind: transfer".to_string(),
            format!("models: {}", entries.len()),
            format!("views: {}", held.len()),
            format!("mean_diagonal_confidence: {diag:.6}"),
            format!("mean_off_diagonal_confidence: {off:.6}"),
        ],
        &[table],
    )?;
    Ok(writer)
}

fn run_render(config: &ExperimentConfig, mut writer: RunWriter) -> Result<RunWriter> {
    let views_cfg = config
        .views
        .as_ref()
        .ok_or_else(|| Error::Config("views: section required for kind 'render'".into()))?;
    if views_cfg.is_empty() {
        return Err(Error::Config("views: need at least one view".into()));
    }
    let template = config.require_scene()?.build()?;
    let views: Vec<(Camera, Light)> = views_cfg
        .iter()
        .map(|v| v.build())
        .collect::<Result<_>>()?;
    let batch = render_batch(&template.scene_with(&template.texture, &views))?;
    for (i, img) in batch.images.iter().enumerate() {
        writer.write_png(&format!("view_{i:03}.png"), img)?;
    }
    write_report(
        &mut writer,
        &[
            "kind: render".to_string(),
            format!("views: {}", views.len()),
            format!(
                "mesh: {} vertices, {} faces",
                template.mesh.vertex_count(),
                template.mesh.face_count()
            ),
        ],
        &[],
    )?;
    Ok(writer)
}
