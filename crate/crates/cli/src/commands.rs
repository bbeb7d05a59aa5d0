use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use gbm_fusion::harness::dataset::index_directory;
use gbm_fusion::harness::{
    evaluate_pairs, pair_directories, read_cases_csv, read_labels, read_manifest, render_statistics_table,
    write_cases_csv, DatasetReport, MethodSummary, RankingReport,
};
use gbm_fusion::nifti::{read_volume, write_grid, Datatype};
use gbm_fusion::preprocess::{
    augment_intensity, augment_labels, brain_bounding_box, crop_and_fit, crop_and_fit_labels, sample_augmentation,
    zscore_normalize,
};
use gbm_fusion::{
    average_probabilities, binarize, compose_regions, decompose_regions, et_threshold_relabel, majority_vote,
    staple_regions, EmptyMaskPolicy, LabelVolume, PerRegion, PostprocessConfig, ProbabilityVolume, Prior,
    StapleConfig,
};

use crate::{AugmentArgs, EvaluateArgs, Failure, FuseArgs, FuseMethod, Precision, PreprocessArgs, ReportArgs};

type CmdResult = Result<(), Failure>;

fn file_name(path: &Path) -> anyhow::Result<&std::ffi::OsStr> {
    path.file_name().with_context(|| format!("{}: not a file path", path.display()))
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_labels(path: &Path, labels: &LabelVolume) -> anyhow::Result<()> {
    write_grid(path, &labels.to_grid::<f32>(), Datatype::Uint8).with_context(|| format!("writing {}", path.display()))
}

fn load_labels(path: &Path) -> anyhow::Result<LabelVolume> {
    read_labels(path).with_context(|| format!("reading {}", path.display()))
}

pub fn preprocess(args: PreprocessArgs) -> CmdResult {
    let target: [usize; 3] = args
        .target
        .as_slice()
        .try_into()
        .map_err(|_| Failure::Usage("--target takes exactly three sizes".into()))?;
    if target.contains(&0) {
        return Err(Failure::Usage("--target sizes must be positive".into()));
    }
    let mut modalities = Vec::with_capacity(args.inputs.len());
    for path in &args.inputs {
        let (_, grid) = read_volume::<f32>(path).with_context(|| format!("reading {}", path.display()))?;
        modalities.push(grid);
    }
    let bbox = brain_bounding_box(&modalities).context("locating the brain region")?;
    create_dir(&args.out)?;
    for (path, grid) in args.inputs.iter().zip(&modalities) {
        let mut out = crop_and_fit(grid, &bbox, target)?;
        if !args.no_zscore {
            out = zscore_normalize(&out).with_context(|| format!("normalizing {}", path.display()))?;
        }
        let dest = args.out.join(file_name(path)?);
        write_grid(&dest, &out, Datatype::Float32).with_context(|| format!("writing {}", dest.display()))?;
    }
    if let Some(path) = &args.labels {
        let labels = load_labels(path)?;
        let fitted = crop_and_fit_labels(&labels, &bbox, target)
            .with_context(|| format!("cropping {}", path.display()))?;
        write_labels(&args.out.join(file_name(path)?), &fitted)?;
    }
    println!("box low={:?} high={:?} -> {:?}", bbox.low, bbox.high, target);
    Ok(())
}

pub fn augment(args: AugmentArgs) -> CmdResult {
    let spec = sample_augmentation(args.seed);
    if let (Some(input), Some(out)) = (&args.input, &args.out) {
        let (_, grid) = read_volume::<f32>(input).with_context(|| format!("reading {}", input.display()))?;
        let aug = augment_intensity(&grid, &spec)?;
        write_grid(out, &aug, Datatype::Float32).with_context(|| format!("writing {}", out.display()))?;
    }
    if let (Some(input), Some(out)) = (&args.labels, &args.labels_out) {
        let aug = augment_labels(&load_labels(input)?, &spec)?;
        write_labels(out, &aug)?;
    }
    println!("{}", serde_json::to_string_pretty(&spec).context("serializing augmentation")?);
    Ok(())
}

/// Expands a single parent directory into its method subdirectories.
fn method_dirs(inputs: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    if let [single] = inputs {
        let mut subdirs = Vec::new();
        for entry in fs::read_dir(single).with_context(|| format!("listing {}", single.display()))? {
            let path = entry.with_context(|| format!("listing {}", single.display()))?.path();
            if path.is_dir() {
                subdirs.push(path);
            }
        }
        if !subdirs.is_empty() {
            subdirs.sort();
            return Ok(subdirs);
        }
    }
    Ok(inputs.to_vec())
}

fn mean_fusion(methods: &[LabelVolume]) -> gbm_fusion::Result<LabelVolume> {
    let regions: Vec<_> = methods.iter().map(compose_regions).collect();
    let fused = PerRegion::<()>::default().try_map(|region, _| {
        let maps: Vec<ProbabilityVolume<f64>> =
            regions.iter().map(|r| ProbabilityVolume::from_mask(r.get(region))).collect();
        binarize(&average_probabilities(&maps)?, 0.5)
    })?;
    decompose_regions(&fused.et, &fused.tc, &fused.wt)
}

pub fn fuse(args: FuseArgs) -> CmdResult {
    let method = if args.staple { FuseMethod::Staple } else { args.method };
    let dirs = method_dirs(&args.inputs)?;
    if method == FuseMethod::Staple && dirs.len() < 2 {
        return Err(Failure::Usage(format!("STAPLE needs at least two methods, found {}", dirs.len())));
    }
    let cfg = StapleConfig {
        max_iter: args.staple_max_iter,
        tol: args.staple_tol,
        prior: Prior::MeanDecision,
        ..StapleConfig::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let post = PostprocessConfig {
        et_threshold: args.et_threshold,
    };

    let mut warnings = Vec::new();
    let mut indices = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        indices.push(index_directory(dir, &mut warnings).with_context(|| format!("indexing {}", dir.display()))?);
    }
    let mut cases: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for (id, path) in &indices[0] {
        let paths: Option<Vec<PathBuf>> = indices.iter().map(|ix| ix.get(id).cloned()).collect();
        match paths {
            Some(p) => {
                cases.insert(id.clone(), p);
            }
            None => warnings.push(format!("{}: case {id} missing from some methods, skipped", path.display())),
        }
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if cases.is_empty() {
        return Err(Failure::Data(anyhow::anyhow!("no case is present in every method directory")));
    }
    create_dir(&args.out)?;
    for (id, paths) in &cases {
        let methods = paths.iter().map(|p| load_labels(p)).collect::<anyhow::Result<Vec<_>>>()?;
        let fused = match method {
            FuseMethod::Mean => mean_fusion(&methods),
            FuseMethod::Vote => majority_vote(&methods),
            FuseMethod::Staple => match args.precision {
                Precision::F32 => staple_regions::<f32>(&methods, &cfg),
                Precision::F64 => staple_regions::<f64>(&methods, &cfg),
            },
        }
        .with_context(|| format!("fusing case {id}"))?;
        let fused = et_threshold_relabel(&fused, &post);
        write_labels(&args.out.join(format!("{id}.nii.gz")), &fused)?;
    }
    println!("fused {} case(s) from {} method(s)", cases.len(), dirs.len());
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> CmdResult {
    if !(args.hd95_penalty >= 0.0) {
        return Err(Failure::Usage("--hd95-penalty must be non-negative".into()));
    }
    let policy = EmptyMaskPolicy {
        one_empty_hd95_penalty: args.hd95_penalty,
        ..EmptyMaskPolicy::default()
    };
    let pairs = match (&args.manifest, &args.pred, &args.gt) {
        (Some(manifest), _, _) => read_manifest(manifest).with_context(|| format!("reading {}", manifest.display()))?,
        (None, Some(pred), Some(gt)) => {
            let (pairs, warnings) = pair_directories(pred, gt)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            pairs
        }
        _ => return Err(Failure::Usage("either --manifest or both --pred and --gt are required".into())),
    };
    let cases = evaluate_pairs(&pairs, &policy)?;
    let report = DatasetReport::new(&cases)?;
    create_dir(&args.out)?;

    let mut csv = Vec::new();
    write_cases_csv(&cases, &mut csv)?;
    fs::write(args.out.join("metrics.csv"), csv).context("writing metrics.csv")?;
    write_text(&args.out.join("report.json"), &(report.to_json()? + "\n"))?;
    let table = render_statistics_table(&report.aggregate);
    write_text(&args.out.join("statistics.tsv"), &table)?;
    print!("{table}");
    Ok(())
}

fn parse_report_input(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.into());
            (name, path)
        }
    }
}

pub fn report(args: ReportArgs) -> CmdResult {
    let mut summaries = Vec::new();
    for spec in &args.inputs {
        let (name, path) = parse_report_input(spec);
        if summaries.iter().any(|s: &MethodSummary| s.method_name == name) {
            return Err(Failure::Usage(format!("method name {name} given twice")));
        }
        let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let cases = read_cases_csv(file).with_context(|| format!("reading {}", path.display()))?;
        let agg = gbm_fusion::harness::aggregate(&cases).with_context(|| format!("aggregating {}", path.display()))?;
        summaries.push(MethodSummary::from_report(name, &agg));
    }
    let ranking = RankingReport::new(summaries)?;
    let table = ranking.render_table();
    if let Some(out) = &args.out {
        create_dir(out)?;
        let json = serde_json::to_string_pretty(&ranking).context("serializing ranking")?;
        write_text(&out.join("ranking.json"), &(json + "\n"))?;
        write_text(&out.join("ranking.tsv"), &table)?;
    }
    print!("{table}");
    Ok(())
}
