use std::path::{Path, PathBuf};

use docdecomp::harness::corpus::{deskew_corpus, layout_corpus, rotation_corpus, run_pages};
use docdecomp::harness::{parse_page_specs, synth_page, GroundTruth, PageSpec};
use docdecomp::orient::{auto_orient, OrientFlag};
use docdecomp::raster::{load_page, save_image};
use docdecomp::{decompose, DecompositionConfig};

use crate::report::{overlay, save_rgb, to_json, DeskewReport, EvalDoc, RegionsDoc, RunManifest};
use crate::{create_dir, write_file, CliResult, CorpusKind, Failure, Status};

pub fn cmd_decompose(
    input: &Path,
    out: &Path,
    cfg: &DecompositionConfig,
    orient: bool,
    save_crops: bool,
) -> CliResult<Status> {
    let page = load_page(input)?;
    log::info!("{}: {}x{}", input.display(), page.width(), page.height());
    let d = decompose(&page, cfg, orient)?;
    create_dir(out)?;

    let doc = RegionsDoc::from_decomposition(&d);
    write_file(&out.join("regions.json"), to_json(&doc))?;
    save_rgb(&overlay(&d.page, &doc), &out.join("overlay.png"))?;
    if save_crops {
        let dir = out.join("crops");
        create_dir(&dir)?;
        for r in &doc.regions {
            let crop = d.page.crop(r.bbox)?;
            save_image(&crop, dir.join(format!("{:03}_{}.png", r.id, r.label.as_str())))?;
        }
    }

    let mut manifest = RunManifest::new("decompose", input, cfg);
    manifest.layout_thresholds = Some(d.layout_thresholds.clone());
    manifest.label_thresholds = d.label_thresholds.clone();
    manifest.flags = d.flags.clone();
    manifest.timings = Some(d.timings.clone());
    write_file(&out.join("manifest.json"), to_json(&manifest))?;

    log::info!("{} regions", doc.regions.len());
    for f in &d.flags {
        log::warn!("{}: {f:?}", input.display());
    }
    Ok(if d.flags.is_empty() { Status::Success } else { Status::Flagged })
}

pub fn cmd_deskew(input: &Path, out: &Path, cfg: &DecompositionConfig) -> CliResult<Status> {
    let page = load_page(input)?;
    let outcome = auto_orient(&page, cfg);
    create_dir(out)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("page");
    save_image(&outcome.page, out.join(format!("{stem}_deskewed.png")))?;

    let flags: Vec<String> = outcome
        .flags
        .iter()
        .map(|f| match f {
            OrientFlag::NoContent => "no content".to_string(),
            OrientFlag::OrientationUndecidable => "orientation undecidable".to_string(),
        })
        .collect();
    let report = DeskewReport {
        skew_degrees: outcome.skew_degrees(),
        turns_applied: outcome.turns_applied(),
        pixel_ratio_0: outcome.decision.map(|d| d.pixel_ratio_0),
        pixel_ratio_90: outcome.decision.map(|d| d.pixel_ratio_90),
        flags: flags.clone(),
    };
    write_file(&out.join(format!("{stem}_deskew.json")), to_json(&report))?;
    write_file(
        &out.join("manifest.json"),
        to_json(&RunManifest {
            flags: outcome.flags.iter().map(|&f| f.into()).collect(),
            ..RunManifest::new("deskew", input, cfg)
        }),
    )?;
    for f in &flags {
        log::warn!("{}: {f}", input.display());
    }
    Ok(if flags.is_empty() { Status::Success } else { Status::Flagged })
}

pub fn read_specs(path: &Path, seed: Option<u64>) -> CliResult<Vec<PageSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
    let mut specs = parse_page_specs(&text)?;
    if let Some(s) = seed {
        for (i, spec) in specs.iter_mut().enumerate() {
            spec.seed = s.wrapping_add(i as u64);
        }
    }
    Ok(specs)
}

pub fn builtin_corpus(kind: CorpusKind, seed: u64, count: usize) -> Vec<PageSpec> {
    match kind {
        CorpusKind::Deskew => deskew_corpus(seed, count),
        CorpusKind::Rotation => rotation_corpus(seed, count),
        CorpusKind::Layout => layout_corpus(seed, count),
    }
}

pub fn cmd_synth(specs: &[PageSpec], out: &Path) -> CliResult<Status> {
    create_dir(out)?;
    for (i, spec) in specs.iter().enumerate() {
        let (img, truth) = synth_page(spec).map_err(|e| Failure(format!("spec [{i}]: {e}")))?;
        save_image(&img, out.join(format!("page_{i:03}.png")))?;
        write_file(&out.join(format!("truth_{i:03}.json")), to_json(&truth))?;
    }
    log::info!("wrote {} pages to {}", specs.len(), out.display());
    Ok(Status::Success)
}

fn is_page_file(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    name.starts_with("page_") && matches!(ext, "png" | "pgm")
}

fn truth_path(page: &Path) -> PathBuf {
    let stem = page.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    page.with_file_name(format!("truth_{}.json", stem.trim_start_matches("page_")))
}

fn read_truth(path: &Path) -> docdecomp::Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|source| docdecomp::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| docdecomp::Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn cmd_eval(corpus: &Path, out: &Path, cfg: &DecompositionConfig) -> CliResult<Status> {
    let entries = std::fs::read_dir(corpus).map_err(|e| Failure(format!("cannot read {}: {e}", corpus.display())))?;
    let mut pages: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_page_file(p))
        .collect();
    pages.sort();
    if pages.is_empty() {
        return Err(Failure(format!("no pages found in {}", corpus.display())));
    }

    let (with_truth, skipped): (Vec<PathBuf>, Vec<PathBuf>) = pages.into_iter().partition(|p| truth_path(p).is_file());
    for p in &skipped {
        log::warn!("{}: no truth file, skipped", p.display());
    }

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = run_pages(with_truth.len(), workers, cfg, cfg.iou_min, |i| {
        let page = &with_truth[i];
        let err = |e: docdecomp::Error| (0.0, 0, e.to_string());
        let truth = read_truth(&truth_path(page)).map_err(err)?;
        let img = load_page(page).map_err(|e| (truth.skew, truth.turns, e.to_string()))?;
        Ok((img, truth))
    });
    for (p, o) in with_truth.iter().zip(&report.pages) {
        if let Some(e) = &o.error {
            log::warn!("{}: {e}", p.display());
        }
    }

    let name = |p: &PathBuf| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    println!("{}", report.eval.table());
    println!(
        "skew: mean |error| {:.3} deg, max {:.3} deg, within 0.3 deg: {}/{}",
        report.skew.mean_abs_error, report.skew.max_abs_error, report.skew.within_tolerance, report.skew.pages
    );
    println!(
        "rotation: {}/{} correct ({:.2}%), fully corrected {}/{}",
        report.rotation_correct,
        report.pages.len(),
        100.0 * report.rotation_accuracy,
        report.fully_corrected,
        report.pages.len()
    );
    let doc = EvalDoc {
        corpus: corpus.display().to_string(),
        files: with_truth.iter().map(name).collect(),
        skipped: skipped.iter().map(name).collect(),
        report,
    };
    create_dir(out)?;
    write_file(&out.join("report.json"), to_json(&doc))?;
    Ok(Status::Success)
}
