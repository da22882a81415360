use crate::config::{ExperimentConfig, ModelKind, Target, Variant};
use crate::error::CliError;
use crate::report::{write_scatter_csv, ResultRow, ResultTable};
use crate::store::{grid_to_bytes, read_grid, Manifest, Store};
use dect_core::dicom::{list_private_payloads, parse_dataset};
use dect_core::imaging::{flatten_pairs, resample, DualEnergySlice, ImageGrid, TrainingRow};
use dect_core::metrics::{pearson_r, scatter_pairs, ssim, EvalReport, SsimParams};
use dect_core::models::{
    fit_constrained_blend, fit_ols, fit_rep_tree_detailed, parse_model, predict_linear,
    predict_tree, write_model, SavedModel,
};
use dect_core::phantom::{
    export_dicom_study, export_workstation, generate_slice, import_dicom_study,
    vendor_iodine_map, vendor_monoenergetic,
};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Write phantom slices, vendor-oracle targets and (optionally) DICOM
/// studies under the output directory, with a manifest listing every
/// artifact and its seed.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    cfg.validate()?;
    let store = Store::new(out);
    let mut manifest = Manifest::new(cfg.seed);

    for variant in cfg.all_variants() {
        let spec = cfg.phantom_spec(variant);
        let slice = generate_slice(&spec).map_err(|e| CliError::stage("generate", e))?;
        let seed = spec.seed;

        write_grid_artifact(
            &store,
            &mut manifest,
            &store.slice_low(variant.name()),
            slice.low(),
            "slice-low",
            variant.name(),
            None,
            seed,
        )?;
        write_grid_artifact(
            &store,
            &mut manifest,
            &store.slice_high(variant.name()),
            slice.high(),
            "slice-high",
            variant.name(),
            None,
            seed,
        )?;

        if cfg.dicom.roundtrip {
            // The study hides the second energy plus a synthetic constant
            // correction payload, so discovery sees more than one candidate.
            let correction = ImageGrid::constant(
                spec.width,
                spec.height,
                1.0,
                spec.spacing_x,
                spec.spacing_y,
            )
            .map_err(|e| CliError::stage("generate", e))?;
            let bytes = export_dicom_study(&slice, &[correction])
                .map_err(|e| CliError::stage("generate", e))?;
            let path = store.study(variant.name());
            write_bytes(&path, &bytes)?;
            manifest.record(out, &path, "dicom-study", variant.name(), None, seed, &bytes);
        }

        for target in cfg.targets() {
            match target {
                Target::Monoenergetic { kev } => {
                    let img = vendor_monoenergetic(&slice, kev)
                        .map_err(|e| CliError::stage("generate", e))?;
                    write_grid_artifact(
                        &store,
                        &mut manifest,
                        &store.target(variant.name(), &target.label()),
                        &img,
                        "target",
                        variant.name(),
                        Some(&target.label()),
                        seed,
                    )?;
                }
                Target::Iodine => {
                    let direct = vendor_iodine_map(&slice);
                    write_grid_artifact(
                        &store,
                        &mut manifest,
                        &store.target(variant.name(), &target.label()),
                        &direct,
                        "target",
                        variant.name(),
                        Some(&target.label()),
                        seed,
                    )?;
                    if cfg.uses_workstation() {
                        let export = export_workstation(
                            &direct,
                            Some(cfg.export_transform()),
                            cfg.workstation.out_width,
                            cfg.workstation.out_height,
                        )
                        .map_err(|e| CliError::stage("generate", e))?;
                        write_grid_artifact(
                            &store,
                            &mut manifest,
                            &store.target_export(variant.name(), &target.label()),
                            &export.image,
                            "target-export",
                            variant.name(),
                            Some(&target.label()),
                            seed,
                        )?;
                    }
                }
            }
        }
    }

    manifest
        .write(out)
        .map_err(|e| CliError::stage("generate", e))?;
    Ok(manifest)
}

/// One fitted model and where it went.
#[derive(Debug, Clone)]
pub struct FitSummary {
    pub label: String,
    pub model_path: PathBuf,
    pub log: String,
}

/// Flatten the training slice against each configured target and fit the
/// configured model, serializing models and training logs.
pub fn cmd_fit(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<FitSummary>, CliError> {
    cfg.validate()?;
    let store = Store::new(out);
    let mut manifest = load_manifest(out)?;
    let slice = load_slice(cfg, &store, cfg.train_variant)?;

    let mut summaries = Vec::new();
    for target in cfg.targets() {
        let truth = load_truth(cfg, &store, cfg.train_variant, &target)?;
        let rows =
            flatten_pairs(&slice, &truth).map_err(|e| CliError::stage("fit", e))?;

        let started = Instant::now();
        let (saved, mut log) = fit_model(cfg, &rows)?;
        let elapsed = started.elapsed();

        let label = format!("{}_{}", cfg.model.kind.name(), target.label());
        let mut header = String::new();
        let _ = writeln!(header, "model {label}");
        let _ = writeln!(header, "training rows {}", rows.len());
        let _ = writeln!(header, "wall_time_s {:.3}", elapsed.as_secs_f64());
        log = format!("{header}{log}");

        let model_path = store.model(&label);
        let text = write_model(&saved);
        write_bytes(&model_path, text.as_bytes())?;
        manifest.record(
            out,
            &model_path,
            "model",
            cfg.train_variant.name(),
            Some(&target.label()),
            cfg.seed,
            text.as_bytes(),
        );

        let log_path = store.fit_log(&label);
        write_bytes(&log_path, log.as_bytes())?;
        manifest.record(
            out,
            &log_path,
            "fit-log",
            cfg.train_variant.name(),
            Some(&target.label()),
            cfg.seed,
            log.as_bytes(),
        );

        summaries.push(FitSummary {
            label,
            model_path,
            log,
        });
    }
    manifest.write(out).map_err(|e| CliError::stage("fit", e))?;
    Ok(summaries)
}

fn fit_model(
    cfg: &ExperimentConfig,
    rows: &[TrainingRow],
) -> Result<(SavedModel, String), CliError> {
    let mut log = String::new();
    let saved = match cfg.model.kind {
        ModelKind::Blend => {
            let model = fit_constrained_blend(rows).map_err(|e| CliError::stage("fit", e))?;
            let _ = writeln!(log, "alpha {}", model.alpha());
            SavedModel::Linear(model)
        }
        ModelKind::Ols => {
            let model = fit_ols(rows).map_err(|e| CliError::stage("fit", e))?;
            let _ = writeln!(
                log,
                "coefficients w_low {} w_high {} intercept {}",
                model.w_low, model.w_high, model.intercept
            );
            let rms = residual_rms(rows, |r| model.evaluate(r.low, r.high));
            let std = target_std(rows);
            let _ = writeln!(log, "residual_rms {rms}");
            if std > 0.0 && rms > 0.05 * std {
                let _ = writeln!(
                    log,
                    "warning: residual is large ({:.1}% of the target spread); \
                     the target is likely non-linear in the inputs",
                    100.0 * rms / std
                );
            }
            SavedModel::Linear(model)
        }
        ModelKind::Reptree => {
            let fit = fit_rep_tree_detailed(rows, &cfg.model.reptree.params())
                .map_err(|e| CliError::stage("fit", e))?;
            let _ = writeln!(log, "growing_rows {}", fit.growing_rows);
            let _ = writeln!(log, "pruning_rows {}", fit.pruning_rows);
            let _ = writeln!(
                log,
                "grown nodes {} leaves {} depth {}",
                fit.unpruned.node_count(),
                fit.unpruned.leaf_count(),
                fit.unpruned.depth()
            );
            let _ = writeln!(
                log,
                "pruned nodes {} leaves {} depth {}",
                fit.tree.node_count(),
                fit.tree.leaf_count(),
                fit.tree.depth()
            );
            SavedModel::Tree(fit.tree)
        }
    };
    Ok((saved, log))
}

fn residual_rms(rows: &[TrainingRow], f: impl Fn(&TrainingRow) -> f64) -> f64 {
    let sse: f64 = rows.iter().map(|r| (r.target - f(r)).powi(2)).sum();
    (sse / rows.len() as f64).sqrt()
}

fn target_std(rows: &[TrainingRow]) -> f64 {
    let mean = rows.iter().map(|r| r.target).sum::<f64>() / rows.len() as f64;
    let var = rows.iter().map(|r| (r.target - mean).powi(2)).sum::<f64>() / rows.len() as f64;
    var.sqrt()
}

/// Predict on every evaluation slice, compare against the vendor truth
/// (registering workstation exports back first), and write the result table
/// plus per-slice scatter CSVs. Returns the table and the failing rows under
/// the configured thresholds.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<(ResultTable, Vec<String>), CliError> {
    cfg.validate()?;
    let store = Store::new(out);
    let mut manifest = load_manifest(out)?;

    let mut table = ResultTable::default();
    for target in cfg.targets() {
        let label = format!("{}_{}", cfg.model.kind.name(), target.label());
        let model_path = store.model(&label);
        let text = fs::read_to_string(&model_path).map_err(|e| {
            CliError::stage(
                "evaluate",
                format!("cannot read model {} (run fit first): {e}", model_path.display()),
            )
        })?;
        let saved = parse_model(&text).map_err(|e| CliError::stage("evaluate", e))?;

        for variant in cfg.eval_variants() {
            let slice = load_slice(cfg, &store, variant)?;
            let pred = match &saved {
                SavedModel::Linear(m) => predict_linear(m, &slice),
                SavedModel::Tree(t) => predict_tree(t, &slice),
            };
            let truth = load_truth(cfg, &store, variant, &target)?;
            if !truth.same_shape(&pred) {
                return Err(CliError::stage(
                    "evaluate",
                    format!(
                        "dimension mismatch after registration: truth {}x{} vs prediction {}x{}",
                        truth.width(),
                        truth.height(),
                        pred.width(),
                        pred.height()
                    ),
                ));
            }

            let r = pearson_r(&truth, &pred).map_err(|e| CliError::stage("evaluate", e))?;
            let dynamic_range = cfg
                .ssim
                .dynamic_range
                .unwrap_or_else(|| truth.max() - truth.min());
            let params = SsimParams::with_window(
                cfg.ssim.window,
                cfg.ssim.sigma,
                cfg.ssim.k1,
                cfg.ssim.k2,
                dynamic_range,
            )
            .map_err(|e| CliError::stage("evaluate", e))?;
            let s = ssim(&truth, &pred, &params).map_err(|e| CliError::stage("evaluate", e))?;

            let report = EvalReport::new(r, s, truth.len(), variant.name(), cfg.model.kind.name())
                .map_err(|e| CliError::stage("evaluate", e))?;

            let pairs = scatter_pairs(&truth, &pred, cfg.scatter.max_points, cfg.seed)
                .map_err(|e| CliError::stage("evaluate", e))?;
            let scatter_path = store.scatter(cfg.model.kind.name(), &target.label(), variant.name());
            write_scatter_csv(&scatter_path, &pairs).map_err(|e| CliError::stage("evaluate", e))?;
            let scatter_bytes =
                fs::read(&scatter_path).map_err(|e| CliError::stage("evaluate", e))?;
            manifest.record(
                out,
                &scatter_path,
                "scatter",
                variant.name(),
                Some(&target.label()),
                cfg.seed,
                &scatter_bytes,
            );

            table.push(ResultRow {
                model: cfg.model.kind.name().to_string(),
                target: target.label(),
                report,
            });
        }
    }

    let csv = table.to_csv();
    let csv_path = store.results_csv();
    write_bytes(&csv_path, csv.as_bytes())?;
    manifest.record(out, &csv_path, "results-csv", "", None, cfg.seed, csv.as_bytes());

    let text = table.to_text();
    let text_path = store.results_table();
    write_bytes(&text_path, text.as_bytes())?;
    manifest.record(out, &text_path, "results-table", "", None, cfg.seed, text.as_bytes());

    manifest
        .write(out)
        .map_err(|e| CliError::stage("evaluate", e))?;

    let failing = table.failing(cfg.threshold_r(), cfg.threshold_ssim());
    Ok((table, failing))
}

/// The one-shot pipeline: generate, fit, evaluate. Returns the result table
/// or a threshold failure carrying the failing rows.
pub fn cmd_attack(cfg: &ExperimentConfig, out: &Path) -> Result<ResultTable, CliError> {
    cmd_generate(cfg, out)?;
    cmd_fit(cfg, out)?;
    let (table, failing) = cmd_evaluate(cfg, out)?;
    if !failing.is_empty() {
        return Err(CliError::Thresholds { failing });
    }
    Ok(table)
}

/// Discovery report for a DICOM file: every private payload at or above the
/// size threshold, optionally dumping decoded images next to the listing.
pub fn cmd_extract(
    file: &Path,
    min_bytes: usize,
    dump: Option<&Path>,
) -> Result<String, CliError> {
    let bytes = fs::read(file).map_err(|e| {
        CliError::stage("extract", format!("cannot read {}: {e}", file.display()))
    })?;
    let ds = parse_dataset(&bytes).map_err(|e| CliError::stage("extract", e))?;
    let found = list_private_payloads(&ds, min_bytes);

    let mut out = String::new();
    let _ = writeln!(out, "{}: {} private payload(s) >= {min_bytes} bytes", file.display(), found.len());
    for tag in &found {
        let element = ds.get(*tag).expect("listed tags exist");
        let _ = writeln!(out, "  {tag}  {} bytes", element.length());
    }

    if let Some(dir) = dump {
        let study = import_dicom_study(&bytes).map_err(|e| CliError::stage("extract", e))?;
        let low_path = dir.join("extracted_low.grid");
        crate::store::write_grid(&low_path, &study.low)
            .map_err(|e| CliError::stage("extract", e))?;
        let _ = writeln!(out, "  wrote {}", low_path.display());
        for payload in &study.payloads {
            let name = if payload.label.is_empty() {
                format!("extracted_{:04x}.grid", payload.tag.group)
            } else {
                format!("extracted_{}.grid", payload.label)
            };
            let path = dir.join(name);
            crate::store::write_grid(&path, &payload.image)
                .map_err(|e| CliError::stage("extract", e))?;
            let _ = writeln!(out, "  wrote {}", path.display());
        }
    }
    Ok(out)
}

/// Standalone scatter export from two stored grids.
pub fn cmd_scatter(
    truth: &Path,
    prediction: &Path,
    max_points: usize,
    seed: u64,
    out: &Path,
) -> Result<usize, CliError> {
    let t = read_grid(truth).map_err(|e| CliError::stage("scatter", e))?;
    let p = read_grid(prediction).map_err(|e| CliError::stage("scatter", e))?;
    let pairs = scatter_pairs(&t, &p, max_points, seed).map_err(|e| CliError::stage("scatter", e))?;
    write_scatter_csv(out, &pairs).map_err(|e| CliError::stage("scatter", e))?;
    Ok(pairs.len())
}

// --- shared loading helpers --------------------------------------------------

fn load_manifest(out: &Path) -> Result<Manifest, CliError> {
    Manifest::load(out).map_err(|e| {
        CliError::stage(
            "store",
            format!(
                "cannot read manifest in {} (run generate first): {e}",
                out.display()
            ),
        )
    })
}

/// The dual-energy inputs for a variant: re-extracted from the DICOM study
/// when the round-trip is enabled, otherwise straight from the grid files.
fn load_slice(
    cfg: &ExperimentConfig,
    store: &Store,
    variant: Variant,
) -> Result<DualEnergySlice, CliError> {
    if cfg.dicom.roundtrip {
        let path = store.study(variant.name());
        let bytes = fs::read(&path).map_err(|e| {
            CliError::stage(
                "extract",
                format!("cannot read study {} (run generate first): {e}", path.display()),
            )
        })?;
        let study = import_dicom_study(&bytes).map_err(|e| CliError::stage("extract", e))?;
        let high = study
            .high_energy()
            .ok_or_else(|| CliError::stage("extract", "study carries no high-energy payload"))?
            .image
            .clone();
        DualEnergySlice::new(study.low, high, variant.name())
            .map_err(|e| CliError::stage("extract", e))
    } else {
        let low = read_grid_artifact(&store.slice_low(variant.name()))?;
        let high = read_grid_artifact(&store.slice_high(variant.name()))?;
        DualEnergySlice::new(low, high, variant.name()).map_err(|e| CliError::stage("store", e))
    }
}

/// Ground truth for (variant, target): mono targets live on the acquisition
/// grid; workstation-exported iodine maps are registered back with the
/// configured transform.
fn load_truth(
    cfg: &ExperimentConfig,
    store: &Store,
    variant: Variant,
    target: &Target,
) -> Result<ImageGrid, CliError> {
    match target {
        Target::Monoenergetic { .. } => {
            read_grid_artifact(&store.target(variant.name(), &target.label()))
        }
        Target::Iodine => {
            if cfg.uses_workstation() {
                let exported =
                    read_grid_artifact(&store.target_export(variant.name(), &target.label()))?;
                let registration = cfg.registration_transform()?;
                resample(
                    &exported,
                    &registration,
                    cfg.phantom.width,
                    cfg.phantom.height,
                )
                .map_err(|e| CliError::stage("registration", e))
            } else {
                read_grid_artifact(&store.target(variant.name(), &target.label()))
            }
        }
    }
}

fn read_grid_artifact(path: &Path) -> Result<ImageGrid, CliError> {
    read_grid(path).map_err(|e| {
        CliError::stage(
            "store",
            format!("cannot read {} (run generate first): {e}", path.display()),
        )
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::stage("store", e))?;
    }
    fs::write(path, bytes).map_err(|e| {
        CliError::stage("store", format!("cannot write {}: {e}", path.display()))
    })
}

#[allow(clippy::too_many_arguments)]
fn write_grid_artifact(
    store: &Store,
    manifest: &mut Manifest,
    path: &Path,
    grid: &ImageGrid,
    kind: &str,
    variant: &str,
    target: Option<&str>,
    seed: u64,
) -> Result<(), CliError> {
    let bytes = grid_to_bytes(grid);
    write_bytes(path, &bytes)?;
    manifest.record(store.root(), path, kind, variant, target, seed, &bytes);
    Ok(())
}
