use std::io::Write as _;
use std::path::{Path, PathBuf};

use liestat::shape::{read_mesh, TriangleMesh};
use liestat::{
    differential_coords, frame_from_pca, global_test, group_mean, local_tests, permutation_test, procrustes_align,
    relative_pose, sample_wrapped_gaussian, CovarianceAtIdentity, GlobalTestReport, GroupDescriptor, LocalTestReport,
    MeanOptions, PermutationConfig, SampleSet,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dataset::{covariance_from_json, element_from_json, element_to_json, weights_from_json, Dataset};
use crate::failure::Failure;
use crate::{DatasetOutputArgs, MeanArgs, PermArgs};

pub const REPORT_SCHEMA: &str = "liestat.report/1";

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::input(format!("cannot write output: {e}")))
        }
    }
}

fn emit_report(path: Option<&Path>, command: &str, config: Value, result: Value) -> Result<(), Failure> {
    let report = json!({
        "schema": REPORT_SCHEMA,
        "command": command,
        "config": config,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("reports are valid JSON");
    text.push('\n');
    emit(path, &text)
}

fn emit_dataset(ds: &Dataset, out: &DatasetOutputArgs) -> Result<(), Failure> {
    let text = if out.jsonl {
        ds.to_jsonl()
    } else {
        let mut t = serde_json::to_string_pretty(&ds.to_json()).expect("datasets are valid JSON");
        t.push('\n');
        t
    };
    emit(out.output.as_deref(), &text)
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: invalid JSON: {e}", path.display())))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn sample_set(path: &Path) -> Result<SampleSet, Failure> {
    let ds = Dataset::read(path)?;
    SampleSet::with_descriptor(ds.group, ds.samples).map_err(|e| Failure::from_lib(&path_str(path), e))
}

fn mean_options(args: &MeanArgs) -> Result<MeanOptions, Failure> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Failure::input(format!("--tol must be positive, got {}", args.tol)));
    }
    if args.max_iter == 0 {
        return Err(Failure::input("--max-iter must be at least 1"));
    }
    Ok(MeanOptions { tol: args.tol, max_iter: args.max_iter })
}

fn perm_config(args: &PermArgs) -> Result<PermutationConfig, Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::input(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if args.permutations == 0 {
        return Err(Failure::input("--permutations must be at least 1"));
    }
    Ok(PermutationConfig {
        n_permutations: args.permutations,
        seed: args.seed,
        statistic: args.statistic.into(),
        mean: mean_options(&args.mean)?,
    })
}

fn perm_config_json(args: &PermArgs, cfg: &PermutationConfig) -> Value {
    json!({
        "a": path_str(&args.a),
        "b": path_str(&args.b),
        "statistic": cfg.statistic.tag(),
        "permutations": cfg.n_permutations,
        "seed": cfg.seed,
        "alpha": args.alpha,
        "tol": cfg.mean.tol,
        "max_iter": cfg.mean.max_iter,
    })
}

pub fn mean(input: &Path, args: &MeanArgs, output: Option<&Path>) -> Result<(), Failure> {
    let opts = mean_options(args)?;
    let samples = sample_set(input)?;
    let r = group_mean(&samples, &opts).map_err(|e| Failure::from_lib(&path_str(input), e))?;
    let config = json!({ "input": path_str(input), "tol": opts.tol, "max_iter": opts.max_iter });
    let result = json!({
        "group": samples.descriptor().to_string(),
        "n": samples.len(),
        "mean": element_to_json(&r.mean),
        "iterations": r.iterations,
        "residual": r.residual,
    });
    emit_report(output, "mean", config, result)
}

pub fn test(args: &PermArgs, output: Option<&Path>) -> Result<(), Failure> {
    let cfg = perm_config(args)?;
    let a = sample_set(&args.a)?;
    let b = sample_set(&args.b)?;
    let r = permutation_test(&a, &b, &cfg)?;
    let result = json!({
        "group": a.descriptor().to_string(),
        "statistic": r.statistic.tag(),
        "m": r.m,
        "n": r.n,
        "baseline": r.baseline,
        "p_value": r.p_value,
        "significant": r.p_value < args.alpha,
        "n_permutations": r.n_permutations,
        "degenerate_count": r.degenerate_count,
    });
    emit_report(output, "test", perm_config_json(args, &cfg), result)
}

fn read_weights(path: Option<&Path>) -> Result<Option<Vec<f64>>, Failure> {
    path.map(|p| weights_from_json(&read_json(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display()))))
        .transpose()
}

fn run_local(args: &PermArgs) -> Result<(PermutationConfig, GroupDescriptor, LocalTestReport), Failure> {
    let cfg = perm_config(args)?;
    let a = sample_set(&args.a)?;
    let b = sample_set(&args.b)?;
    let r = local_tests(&a, &b, &cfg, args.alpha)?;
    Ok((cfg, a.descriptor().clone(), r))
}

fn global_json(g: &GlobalTestReport, alpha: f64) -> Value {
    json!({
        "p_value": g.p_value,
        "significant": g.p_value < alpha,
        "baseline_distance": g.baseline_distance,
        "n_permutations": g.n_permutations,
        "dropped_permutations": g.dropped_permutations,
    })
}

pub fn localtest(
    args: &PermArgs,
    weights: Option<&Path>,
    face_values: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let w = read_weights(weights)?;
    let (cfg, group, r) = run_local(args)?;
    let global = match global_test(&r.stats, w.as_deref()) {
        Ok(g) => global_json(&g, args.alpha),
        Err(e) if e.is_numerical() => json!({ "error": e.to_string() }),
        Err(e) => return Err(Failure::from_lib("global test", e)),
    };
    let rejected: Vec<usize> = (0..r.reject_mask.len()).filter(|&i| r.reject_mask[i]).collect();
    let failures: Vec<Value> =
        r.failures.iter().map(|(i, e)| json!({ "component": i, "error": e.to_string() })).collect();
    let result = json!({
        "group": group.to_string(),
        "statistic": r.statistic.tag(),
        "components": r.p_values.len(),
        "p_values": r.p_values,
        "reject_mask": r.reject_mask,
        "rejected": rejected,
        "degenerate_counts": r.degenerate_counts,
        "failures": failures,
        "global": global,
    });
    if let Some(path) = face_values {
        let text: String =
            r.p_values.iter().map(|p| p.map_or_else(|| "nan\n".to_string(), |p| format!("{p}\n"))).collect();
        emit(Some(path), &text)?;
    }
    let mut config = perm_config_json(args, &cfg);
    config["weights"] = json!(weights.map(path_str));
    emit_report(output, "localtest", config, result)
}

pub fn globaltest(args: &PermArgs, weights: Option<&Path>, output: Option<&Path>) -> Result<(), Failure> {
    let w = read_weights(weights)?;
    let (cfg, group, r) = run_local(args)?;
    let g = global_test(&r.stats, w.as_deref()).map_err(|e| Failure::from_lib("global test", e))?;
    let mut result = global_json(&g, args.alpha);
    result["group"] = json!(group.to_string());
    result["statistic"] = json!(r.statistic.tag());
    result["components"] = json!(r.p_values.len());
    let mut config = perm_config_json(args, &cfg);
    config["weights"] = json!(weights.map(path_str));
    emit_report(output, "globaltest", config, result)
}

pub fn synth(
    group: &str,
    mean: Option<&Path>,
    cov: &Path,
    n: usize,
    seed: u64,
    out: &DatasetOutputArgs,
) -> Result<(), Failure> {
    let desc: GroupDescriptor = group.parse().map_err(|e| Failure::from_lib("--group", e))?;
    let center = match mean {
        Some(p) => {
            element_from_json(&desc, &read_json(p)?).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
        }
        None => desc.identity(),
    };
    let cov_json = read_json(cov)?;
    let matrix =
        covariance_from_json(&desc, &cov_json).map_err(|e| Failure::input(format!("{}: {e}", cov.display())))?;
    let cov_id =
        CovarianceAtIdentity::new(desc.clone(), matrix, 1.0).map_err(|e| Failure::from_lib(&path_str(cov), e))?;
    if n == 0 {
        return Err(Failure::input("--n must be at least 1"));
    }
    let draw = sample_wrapped_gaussian(&center, &cov_id, n, seed)?;
    if draw.rejected > 0 {
        log::warn!("redrew {} tangent samples outside the log domain", draw.rejected);
    }
    let mut ds = Dataset::new(desc.clone(), draw.samples.into_elements());
    ds.generator = Some(json!({
        "command": "synth",
        "group": desc.to_string(),
        "n": n,
        "seed": seed,
        "mean": element_to_json(&center),
        "cov": cov_json,
    }));
    emit_dataset(&ds, out)
}

fn load_mesh(path: &Path) -> Result<TriangleMesh, Failure> {
    read_mesh(path).map_err(|e| Failure::from_lib(&path_str(path), e))
}

fn file_label(p: &Path) -> String {
    p.file_name().map_or_else(|| path_str(p), |f| f.to_string_lossy().into_owned())
}

pub fn pose(meshes: &[PathBuf], out: &DatasetOutputArgs) -> Result<(), Failure> {
    if meshes.len() % 2 == 1 {
        return Err(Failure::input(format!("pose needs mesh pairs, got {} files", meshes.len())));
    }
    // later pairs take their PCA axis signs from the first pair
    let (mut ref_a, mut ref_b) = (None, None);
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for pair in meshes.chunks(2) {
        let (pa, pb) = (&pair[0], &pair[1]);
        let fa = frame_from_pca(&load_mesh(pa)?, ref_a.as_ref()).map_err(|e| Failure::from_lib(&path_str(pa), e))?;
        let fb = frame_from_pca(&load_mesh(pb)?, ref_b.as_ref()).map_err(|e| Failure::from_lib(&path_str(pb), e))?;
        samples.push(relative_pose(&fa, &fb)?);
        labels.push(format!("{}:{}", file_label(pa), file_label(pb)));
        ref_a.get_or_insert(fa);
        ref_b.get_or_insert(fb);
    }
    let mut ds = Dataset::new(GroupDescriptor::SE3, samples);
    ds.labels = Some(labels);
    emit_dataset(&ds, out)
}

pub fn diffcoords(
    reference: &Path,
    targets: &[PathBuf],
    align: bool,
    areas_out: Option<&Path>,
    out: &DatasetOutputArgs,
) -> Result<(), Failure> {
    let reference_mesh = load_mesh(reference)?;
    let samples = targets
        .par_iter()
        .map(|p| {
            let mesh = load_mesh(p)?;
            let ctx = path_str(p);
            let mesh = if align {
                let aligned =
                    procrustes_align(&[reference_mesh.clone(), mesh], 0).map_err(|e| Failure::from_lib(&ctx, e))?;
                aligned.into_iter().nth(1).expect("one aligned target")
            } else {
                mesh
            };
            differential_coords(&reference_mesh, &mesh).map_err(|e| Failure::from_lib(&ctx, e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let group = GroupDescriptor::power(GroupDescriptor::GLPlus(3), reference_mesh.faces().len())?;
    if let Some(path) = areas_out {
        let areas: Vec<f64> = (0..reference_mesh.faces().len()).map(|j| reference_mesh.face_area(j)).collect();
        let mut text = serde_json::to_string(&areas).expect("areas are finite");
        text.push('\n');
        emit(Some(path), &text)?;
    }
    let mut ds = Dataset::new(group, samples);
    ds.labels = Some(targets.iter().map(|p| file_label(p)).collect());
    emit_dataset(&ds, out)
}
