//! Acceptance criteria, one line of output each. Exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use layerdoc::annotation::{mask_to_polygons, rasterize_image, read_cvat_xml, write_cvat_xml, ImageAnnotation};
use layerdoc::evaluation::class_scores;
use layerdoc::pipeline::{read_mask, DatasetManifest};
use layerdoc::samples::{write_sample_catalog, SampleCounts};
use layerdoc::{
    confusion, metrics, plan_page, region_components, render, similarity, Catalog, ClassLabel, ClassMask, PageSpec,
    SynthConfig,
};

use common::*;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

const EXE: &str = env!("CARGO_BIN_EXE_layerdoc");

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(took)
}

/// Histogram similarity: identity, symmetry, range and oracle agreement.
fn c1_similarity() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let (s, g) = (random_histogram(&mut r), random_histogram(&mut r));
        let f = similarity(&s, &g);
        ensure!(similarity(&s, &s) == 1.0, "pair {i}: identity fails");
        ensure!(f == similarity(&g, &s), "pair {i}: asymmetric");
        ensure!((0.0..=1.0).contains(&f), "pair {i}: {f} out of range");
        worst = worst.max((f - similarity_oracle(&s, &g)).abs());
    }
    ensure!(worst <= 1e-12, "max oracle deviation {worst:e}");
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!("10000 pairs, max |f - oracle| = {worst:.1e}, {took:.2?}"))
}

fn plan_many(catalog: &Catalog, config: &SynthConfig, n: u64) -> Result<Vec<PageSpec>, String> {
    (0..n)
        .map(|i| plan_page(catalog, config, i).map_err(|e| format!("page {i}: {e}")))
        .collect()
}

/// Scale interval, image-count interval and count coverage over 1000 pages.
fn c2_aesthetic_params(catalog: &Catalog) -> Outcome {
    let start = Instant::now();
    let specs = plan_many(catalog, &SynthConfig::default(), 1000)?;
    let mut counts = [0u64; 9];
    let mut scales = 0usize;
    for spec in &specs {
        let k = spec.image_count();
        ensure!((1..=8).contains(&k), "{}: {k} images", spec.page_id);
        counts[k] += 1;
        for p in spec.image_placements() {
            ensure!((0.6..=1.0).contains(&p.scale) && p.scale == p.scale_y, "{}: scale {}", spec.page_id, p.scale);
            scales += 1;
        }
    }
    ensure!(counts[1..].iter().all(|&c| c > 0), "unobserved counts: {counts:?}");
    // Chi-square against uniform over 1..=8; 24.32 is the 0.999 quantile at 7 dof.
    let expected = 1000.0 / 8.0;
    let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    ensure!(chi2 < 24.32, "chi-square {chi2:.2} for {counts:?}");
    let took = within(Duration::from_secs(30), start)?;
    Ok(format!("{scales} scales in [0.6,1], counts {:?}, chi2 {chi2:.2}, {took:.2?}", &counts[1..]))
}

fn gating_violations(catalog: &Catalog, specs: &[PageSpec], threshold: f64) -> Result<(usize, usize), String> {
    let (mut checked, mut relaxed) = (0, 0);
    for spec in specs {
        if spec.relaxed_count() > 0 {
            relaxed += 1;
            continue;
        }
        let imgs: Vec<_> = spec.image_placements().map(|p| catalog.get(&p.asset_id).unwrap()).collect();
        for i in 0..imgs.len() {
            for j in 0..i {
                let f = similarity(imgs[i].gray_hist(), imgs[j].gray_hist());
                ensure!(f >= threshold, "{}: images {j},{i} similarity {f} < {threshold}", spec.page_id);
            }
        }
        if imgs.len() > 1 {
            checked += 1;
        }
    }
    Ok((checked, relaxed))
}

/// Every unrelaxed page satisfies the similarity gate pairwise.
fn c3_gating(catalog: &Catalog) -> Outcome {
    let mut notes = Vec::new();
    for threshold in [0.5, 0.9] {
        let config = SynthConfig {
            similarity_threshold: threshold,
            ..SynthConfig::default()
        };
        let specs = plan_many(catalog, &config, 1000)?;
        let (checked, relaxed) = gating_violations(catalog, &specs, threshold)?;
        ensure!(checked > 0, "no multi-image unrelaxed page at threshold {threshold}");
        notes.push(format!("tau {threshold}: {checked} multi-image pages verified, {relaxed} relaxed"));
    }
    Ok(notes.join("; "))
}

/// Rendered masks equal the brute-force top-most placement class.
fn c4_painter(catalog: &Catalog) -> Outcome {
    let start = Instant::now();
    let tiny = tiny_catalog();
    let mut r = rng(4);
    for n in 0..200 {
        let spec = random_spec(&mut r, 64, 64);
        let page = render(&spec, &tiny).map_err(|e| e.to_string())?;
        for y in 0..64 {
            for x in 0..64 {
                let expected = top_class(&spec, x, y);
                ensure!(page.mask.get(x, y) == expected, "spec {n}: pixel ({x},{y})");
            }
        }
    }
    let config = SynthConfig::default();
    for i in 0..20 {
        let spec = plan_page(catalog, &config, i).map_err(|e| e.to_string())?;
        let page = render(&spec, catalog).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            let x = uniform(&mut r, config.page_width as u64) as u32;
            let y = uniform(&mut r, config.page_height as u64) as u32;
            ensure!(page.mask.get(x, y) == top_class(&spec, x, y), "page {i}: pixel ({x},{y})");
        }
    }
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!("200 specs x 4096 px exact, 20 pages x 10000 sampled px, {took:.2?}"))
}

/// Some rendered page has a region that is not a filled rectangle.
fn c5_non_manhattan(catalog: &Catalog) -> Outcome {
    let config = SynthConfig::default();
    let mut witnesses = 0;
    for i in 0..100 {
        let spec = plan_page(catalog, &config, i).map_err(|e| e.to_string())?;
        let page = render(&spec, catalog).map_err(|e| e.to_string())?;
        if region_components(&page.mask).iter().any(|r| !r.is_rectangle()) {
            witnesses += 1;
        }
    }
    ensure!(witnesses > 0, "no non-rectangular region in 100 pages");
    Ok(format!("{witnesses}/100 pages contain a non-rectangular region"))
}

/// Polygon export then rasterization reproduces the mask; XML roundtrips.
fn c6_annotation(catalog: &Catalog) -> Outcome {
    let config = SynthConfig::default();
    let mut min_iou = [1.0f64, 1.0];
    for i in 0..50 {
        let spec = plan_page(catalog, &config, 1000 + i).map_err(|e| e.to_string())?;
        let mask = render(&spec, catalog).map_err(|e| e.to_string())?.mask;
        for (slot, (eps, floor)) in [(0.0, 0.999), (1.5, 0.95)].into_iter().enumerate() {
            let img = ImageAnnotation {
                id: i as u32,
                name: spec.page_id.clone(),
                width: mask.width(),
                height: mask.height(),
                shapes: mask_to_polygons(&mask, eps).shapes,
            };
            let back = rasterize_image(&img);
            for class in ClassLabel::FOREGROUND {
                if let Some(iou) = class_iou(&mask, &back, class) {
                    ensure!(iou >= floor, "page {i} eps {eps} {class}: IoU {iou:.5} < {floor}");
                    min_iou[slot] = min_iou[slot].min(iou);
                }
            }
        }
    }
    let mut r = rng(6);
    for n in 0..500 {
        let doc = random_doc(&mut r);
        let back = read_cvat_xml(&write_cvat_xml(&doc)).map_err(|e| format!("doc {n}: {e}"))?;
        ensure!(back.doc == doc, "doc {n} changed in roundtrip");
    }
    Ok(format!(
        "min IoU {:.5} (eps 0), {:.5} (eps 1.5) over 50 pages; 500 XML docs identical",
        min_iou[0], min_iou[1]
    ))
}

/// Metrics recomputed from per-pixel tp/fp/fn counts.
fn brute_force_check(pred: &ClassMask, truth: &ClassMask) -> Result<(), String> {
    let cm = confusion(pred, truth).map_err(|e| e.to_string())?;
    ensure!(cm.counts == tally(pred, truth), "confusion differs from tally");
    let m = metrics(&cm).map_err(|e| e.to_string())?;
    let (p, t) = (pred.codes(), truth.codes());
    let correct = p.iter().zip(t).filter(|(a, b)| a == b).count();
    ensure!(m.accuracy == correct as f64 / p.len() as f64, "accuracy");
    let mut f1s = Vec::new();
    for class in ClassLabel::FOREGROUND {
        let c = class.code();
        let tp = p.iter().zip(t).filter(|&(&a, &b)| a == c && b == c).count() as f64;
        let fp = p.iter().zip(t).filter(|&(&a, &b)| a == c && b != c).count() as f64;
        let fne = p.iter().zip(t).filter(|&(&a, &b)| a != c && b == c).count() as f64;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fne > 0.0 { tp / (tp + fne) } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let got = class_scores(&cm, class);
        ensure!(
            (got.precision, got.recall, got.f1) == (precision, recall, f1),
            "{class}: {got:?} vs ({precision}, {recall}, {f1})"
        );
        f1s.push(f1);
    }
    ensure!(m.macro_f1 == (f1s[0] + f1s[1] + f1s[2]) / 3.0, "macro f1");
    Ok(())
}

fn two_class_mask(w: u32, h: u32, bits: u32) -> ClassMask {
    let codes = (0..w * h).map(|i| if bits >> i & 1 == 1 { 2 } else { 1 }).collect();
    ClassMask::from_codes(w, h, codes).unwrap()
}

/// Confusion and metrics agree with brute force; perfect accuracy is exact.
fn c7_metrics() -> Outcome {
    // Every pair of 2-class masks on grids of up to 6 pixels.
    let mut pairs = 0u64;
    for (w, h) in [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2)] {
        let n = 1u32 << (w * h);
        for a in 0..n {
            for b in 0..n {
                brute_force_check(&two_class_mask(w, h, a), &two_class_mask(w, h, b))?;
                pairs += 1;
            }
        }
    }
    // Every 2-class 4x4 mask against itself, its complement, a shifted copy
    // and a fixed scrambled mask.
    let scrambled = two_class_mask(4, 4, 0xB5E3);
    for bits in 0..1u32 << 16 {
        let truth = two_class_mask(4, 4, bits);
        for pred in [
            truth.clone(),
            two_class_mask(4, 4, !bits & 0xFFFF),
            two_class_mask(4, 4, (bits << 1 | bits >> 15) & 0xFFFF),
            scrambled.clone(),
        ] {
            brute_force_check(&pred, &truth)?;
            pairs += 1;
        }
        let m = metrics(&confusion(&truth, &truth).unwrap()).unwrap();
        ensure!(m.accuracy == 1.0, "perfect prediction accuracy {}", m.accuracy);
    }
    let mut r = rng(7);
    for _ in 0..1000 {
        let mut random = || ClassMask::from_codes(8, 8, (0..64).map(|_| uniform(&mut r, 4) as u8).collect()).unwrap();
        let (pred, truth) = (random(), random());
        brute_force_check(&pred, &truth)?;
        pairs += 1;
    }
    Ok(format!("{pairs} mask pairs match brute force exactly"))
}

fn synth(catalog: &Path, out: &Path, pages: u64, extra: &[&str]) -> Result<Duration, String> {
    let start = Instant::now();
    let status = Command::new(EXE)
        .args(["synth", "--catalog"])
        .arg(catalog)
        .arg("--out")
        .arg(out)
        .args(["--pages", &pages.to_string(), "--seed", "2024"])
        .args(extra)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure!(status.success(), "synth exited with {status}");
    Ok(start.elapsed())
}

fn load_manifest(dir: &Path) -> Result<DatasetManifest, String> {
    DatasetManifest::load(&dir.join("manifest.json")).map_err(|e| e.to_string())
}

/// Two runs with identical inputs produce identical bytes.
fn c8_determinism(catalog: &Path, work: &Path) -> Outcome {
    let (a, b) = (work.join("det_a"), work.join("det_b"));
    synth(catalog, &a, 10, &[])?;
    synth(catalog, &b, 10, &[])?;
    let files: BTreeSet<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    let files_b: BTreeSet<_> = fs::read_dir(&b).unwrap().map(|e| e.unwrap().file_name()).collect();
    ensure!(files == files_b, "different file sets");
    let mut compared = 0;
    for name in &files {
        if name == "manifest.json" {
            continue;
        }
        ensure!(fs::read(a.join(name)).unwrap() == fs::read(b.join(name)).unwrap(), "{name:?} differs");
        compared += 1;
    }
    let (mut ma, mut mb) = (load_manifest(&a)?, load_manifest(&b)?);
    ma.generated_at = 0;
    mb.generated_at = 0;
    ensure!(ma == mb, "manifests differ beyond the timestamp");
    Ok(format!("{compared} files byte-identical, manifests equal modulo timestamp"))
}

/// 600-page run: time limit plus criteria 2, 3 and 5 on the written output.
fn c9_scaled_protocol(catalog_path: &Path, catalog: &Catalog, work: &Path) -> Outcome {
    let out = work.join("scaled");
    let took = synth(catalog_path, &out, 600, &[])?;
    ensure!(took < Duration::from_secs(600), "600 pages took {took:?}");
    let manifest = load_manifest(&out)?;
    ensure!(manifest.pages.len() == 600, "{} records", manifest.pages.len());

    let mut seen = [false; 9];
    for page in &manifest.pages {
        ensure!((1..=8).contains(&page.placement_count), "{}: {} images", page.page_id, page.placement_count);
        seen[page.placement_count] = true;
        for img in &page.images {
            ensure!((0.6..=1.0).contains(&img.scale), "{}: scale {}", page.page_id, img.scale);
        }
        if page.relaxed_count == 0 {
            for i in 0..page.images.len() {
                for j in 0..i {
                    let a = catalog.get(&page.images[i].asset_id).ok_or("unknown asset")?;
                    let b = catalog.get(&page.images[j].asset_id).ok_or("unknown asset")?;
                    let f = similarity(a.gray_hist(), b.gray_hist());
                    ensure!(f >= 0.5, "{}: similarity {f}", page.page_id);
                }
            }
        }
    }
    ensure!(seen[1..].iter().all(|&s| s), "image counts observed: {seen:?}");

    let witness = manifest.pages.iter().find_map(|page| {
        let mask = read_mask(&out.join(&page.mask_path)).ok()?;
        region_components(&mask).iter().any(|r| !r.is_rectangle()).then(|| page.page_id.clone())
    });
    ensure!(witness.is_some(), "no non-rectangular region in 600 pages");
    Ok(format!("600 pages in {took:.1?}; counts 1-8 seen, scales in range, gating holds, witness {}", witness.unwrap()))
}

/// The ablation flag disables gating and leaves the unit scale interval.
fn c10_ablation(catalog: &Path, work: &Path) -> Outcome {
    let out = work.join("ablation");
    synth(catalog, &out, 50, &["--no-aesthetic"])?;
    let manifest = load_manifest(&out)?;
    ensure!(!manifest.config_snapshot.aesthetic_guidance, "guidance still on");
    let evaluations: u64 = manifest.pages.iter().map(|p| p.similarity_evaluations).sum();
    ensure!(evaluations == 0, "{evaluations} similarity evaluations");
    let outside = manifest
        .pages
        .iter()
        .flat_map(|p| &p.images)
        .flat_map(|img| [img.scale, img.scale_y])
        .filter(|s| !(0.6..=1.0).contains(s))
        .count();
    ensure!(outside > 0, "all scales inside [0.6, 1]");
    Ok(format!("{outside} axis scales outside [0.6,1], 0 similarity evaluations"))
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().expect("temp dir");
    let catalog_path = write_sample_catalog(&work.path().join("catalog"), 0, SampleCounts::default()).expect("catalog");
    let catalog = Catalog::load(&catalog_path).expect("catalog loads");

    let criteria: Vec<(&str, Check)> = vec![
        ("C1 similarity identity/symmetry/range/oracle", Box::new(c1_similarity)),
        ("C2 aesthetic parameter audit", Box::new(|| c2_aesthetic_params(&catalog))),
        ("C3 similarity gating audit", Box::new(|| c3_gating(&catalog))),
        ("C4 painter oracle", Box::new(|| c4_painter(&catalog))),
        ("C5 non-Manhattan witness", Box::new(|| c5_non_manhattan(&catalog))),
        ("C6 annotation roundtrip", Box::new(|| c6_annotation(&catalog))),
        ("C7 metrics oracle", Box::new(c7_metrics)),
        ("C8 end-to-end determinism", Box::new(|| c8_determinism(&catalog_path, work.path()))),
        ("C9 scaled 600-page protocol", Box::new(|| c9_scaled_protocol(&catalog_path, &catalog, work.path()))),
        ("C10 ablation toggle", Box::new(|| c10_ablation(&catalog_path, work.path()))),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {name}: {reason}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
