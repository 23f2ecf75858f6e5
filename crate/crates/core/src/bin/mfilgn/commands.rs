use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mfilgn::config::RunConfig;
use mfilgn::dataset::{
    extract_dataset_features, load_manifest, read_feature_csv, write_feature_csv, DatasetManifest, FeatureMatrix,
};
use mfilgn::eval::{run_trials, summary_text, trials_csv};
use mfilgn::pipeline::extract_features;
use mfilgn::raster::{load_erp, DecodeOptions};
use mfilgn::regression::{grid_search, load_model, save_model, train as svr_train};
use mfilgn::viewport::extract_viewports;
use mfilgn::{Raster64, RegressionModel64};

use crate::args::{EvaluateArgs, ExtractArgs, PredictArgs, TrainArgs, ViewportsArgs};

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| mfilgn::Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| mfilgn::Error::Io { path: dir.to_path_buf(), source: e })?;
    Ok(())
}

fn report_failures(m: &FeatureMatrix) {
    for (id, msg) in &m.failures {
        eprintln!("warning: skipped {id}: {msg}");
    }
}

fn features_for(manifest: &DatasetManifest, cfg: &RunConfig, cache: Option<&Path>, strict: bool) -> Result<FeatureMatrix> {
    let m = extract_dataset_features(manifest, &cfg.features, cache, strict)?;
    report_failures(&m);
    eprintln!(
        "extracted {} of {} images (cache hits {}, misses {})",
        m.rows.len(),
        manifest.len(),
        m.cache_hits,
        m.cache_misses
    );
    if m.rows.is_empty() {
        bail!(mfilgn::Error::Validation("no image could be processed".into()));
    }
    Ok(m)
}

pub fn extract(a: &ExtractArgs) -> Result<()> {
    let cfg = a.features.resolve()?;
    cfg.validate()?;
    let manifest = load_manifest(&a.manifest, a.mos_scale)?;
    let m = features_for(&manifest, &cfg, a.cache_dir.as_deref(), a.strict)?;
    write_file(&a.out, &write_feature_csv(&m.ids, &m.rows)?)?;
    write_file(&sidecar(&a.out), &cfg.canonical_text())?;
    Ok(())
}

/// Scores aligned with the feature rows by id.
fn align_scores(ids: &[String], manifest: &DatasetManifest) -> Result<Vec<f64>> {
    if ids.len() != manifest.len() {
        bail!(mfilgn::Error::Validation(format!(
            "feature file has {} rows but manifest has {} entries",
            ids.len(),
            manifest.len()
        )));
    }
    let by_id: std::collections::HashMap<&str, f64> =
        manifest.entries.iter().map(|e| (e.id.as_str(), e.mos)).collect();
    ids.iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| {
                mfilgn::Error::Validation(format!("feature row `{id}` is not in the manifest")).into()
            })
        })
        .collect()
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut cfg = a.feature_flags.resolve()?;
    a.svr.apply(&mut cfg)?;
    cfg.validate()?;
    let manifest = load_manifest(&a.manifest, a.mos_scale)?;
    let (ids, rows) = read_feature_csv(&a.features)?;
    let scores = align_scores(&ids, &manifest)?;
    let model = if cfg.grid_search {
        let g = grid_search(&rows, &scores, &cfg.svr, cfg.seed)?;
        println!("selected C = {}, gamma = {} (cv rmse {:.6})", g.c, g.gamma, g.cv_rmse);
        g.model
    } else {
        svr_train(&rows, &scores, &cfg.svr)?
    };
    if let Some(t) = model.training {
        if !t.converged {
            eprintln!(
                "warning: solver stopped at the iteration cap ({} iterations, KKT gap {:.3e})",
                t.iterations, t.kkt_gap
            );
        }
    }
    let rate = model.tube_satisfaction(&rows, &scores, 1e-9)?;
    println!("support vectors = {}", model.support_vector_count());
    println!("epsilon-tube satisfaction = {:.4}", rate);
    write_file(&a.model, &save_model(&model))?;
    write_file(&sidecar(&a.model), &cfg.canonical_text())?;
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let cfg = a.feature_flags.resolve()?;
    cfg.validate()?;
    let text = fs::read_to_string(&a.model).map_err(|e| mfilgn::Error::Io { path: a.model.clone(), source: e })?;
    let model: RegressionModel64 = load_model(&text).with_context(|| format!("loading {}", a.model.display()))?;
    let out = if let Some(img_path) = &a.image {
        let img: Raster64 = load_erp(img_path, &DecodeOptions { max_side: cfg.features.max_side })?;
        let f = extract_features(&img, &cfg.features)?;
        format!("{}\n", model.predict(&f)?)
    } else {
        let path = a.features.as_ref().expect("clap enforces one input");
        let (ids, rows) = read_feature_csv(path)?;
        let mut s = String::from("id,score\n");
        for (id, row) in ids.iter().zip(&rows) {
            let q = model.predict(row).with_context(|| format!("row `{id}`"))?;
            let cell = if id.contains([',', '"']) { format!("\"{}\"", id.replace('"', "\"\"")) } else { id.clone() };
            s.push_str(&format!("{cell},{q}\n"));
        }
        s
    };
    match &a.out {
        Some(p) => {
            write_file(p, &out)?;
            write_file(&sidecar(p), &cfg.canonical_text())?;
        }
        None => {
            print!("{out}");
            for line in cfg.canonical_text().lines() {
                eprintln!("# {line}");
            }
        }
    }
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut cfg = a.feature_flags.resolve()?;
    a.svr.apply(&mut cfg)?;
    if let Some(t) = a.trials {
        cfg.set("trials", &t.to_string())?;
    }
    if let Some(s) = a.split {
        cfg.set("split", &s.to_string())?;
    }
    if let Some(m) = &a.split_mode {
        cfg.set("split_mode", m)?;
    }
    cfg.validate()?;
    let manifest = load_manifest(&a.manifest, a.mos_scale)?;
    let (ids, rows) = match &a.features {
        Some(p) => read_feature_csv(p)?,
        None => {
            let m = features_for(&manifest, &cfg, a.cache_dir.as_deref(), a.strict)?;
            (m.ids, m.rows)
        }
    };
    let scores = if a.features.is_some() {
        align_scores(&ids, &manifest)?
    } else {
        let by_id: std::collections::HashMap<&str, f64> =
            manifest.entries.iter().map(|e| (e.id.as_str(), e.mos)).collect();
        ids.iter().map(|i| by_id[i.as_str()]).collect()
    };
    let refs: Option<Vec<String>> = {
        let by_id: std::collections::HashMap<&str, Option<String>> =
            manifest.entries.iter().map(|e| (e.id.as_str(), e.reference.clone())).collect();
        ids.iter().map(|i| by_id.get(i.as_str()).cloned().flatten()).collect()
    };
    let summary = run_trials(&rows, &scores, refs.as_deref(), &cfg.trial_config())?;
    create_dir(&a.out_dir)?;
    let report = summary_text(&summary);
    write_file(&a.out_dir.join("trials.csv"), &trials_csv(&summary))?;
    write_file(&a.out_dir.join("report.txt"), &report)?;
    write_file(&a.out_dir.join("run.config"), &cfg.canonical_text())?;
    print!("{report}");
    Ok(())
}

pub fn viewports(a: &ViewportsArgs) -> Result<()> {
    let cfg = a.feature_flags.resolve()?;
    cfg.validate()?;
    let img: Raster64 = load_erp(&a.image, &DecodeOptions { max_side: cfg.features.max_side })?;
    let set = extract_viewports(&img, &cfg.features.viewports)?;
    create_dir(&a.out_dir)?;
    let mut listing = String::from("index,file,center_longitude,center_latitude,fov,size\n");
    for (i, (spec, r)) in set.specs.iter().zip(&set.rasters).enumerate() {
        let name = format!("viewport_{i:03}.png");
        let path = a.out_dir.join(&name);
        r.to_gray8()
            .save(&path)
            .map_err(|e| mfilgn::Error::Io { path: path.clone(), source: std::io::Error::other(e) })?;
        listing.push_str(&format!(
            "{i},{name},{:?},{:?},{:?},{}\n",
            spec.center_longitude, spec.center_latitude, spec.fov, spec.size
        ));
    }
    write_file(&a.out_dir.join("viewports.csv"), &listing)?;
    write_file(&a.out_dir.join("run.config"), &cfg.canonical_text())?;
    println!("wrote {} viewports to {}", set.count(), a.out_dir.display());
    Ok(())
}
