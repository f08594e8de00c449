use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use holo_core::eval::{embeddings_csv, evaluate as run_eval, EvalOptions};
use holo_core::fourier::{
    cartesian_to_spherical, inverse_sft, inverse_zft, parse_point_clouds, read_signals, sft_grid, write_signals,
    zft_point_cloud, zft_signature, ZftConfig,
};
use holo_core::model::{synthetic_clouds, Checkpoint, ModelConfig, Network, TrainState, SYNTHETIC_CLASSES};
use holo_core::steerable::{DatasetNormalizer, TensorDataset};
use holo_core::Error as CoreError;
use sha2::{Digest, Sha256};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::TransformMode;

/// Settings of `transform`. ZFT needs `n_max` and `r_max`; `labels` fixes
/// the channel order (otherwise labels are taken in order of appearance).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformConfig {
    l_max: usize,
    #[serde(default)]
    n_max: Option<usize>,
    #[serde(default)]
    r_max: Option<f64>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl TransformConfig {
    fn zft(&self) -> CliResult<ZftConfig> {
        let (Some(n_max), Some(r_max)) = (self.n_max, self.r_max) else {
            return Err(CliError::Usage("zft mode needs n_max and r_max in the transform config".into()));
        };
        let cfg = ZftConfig { l_max: self.l_max, n_max, r_max };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn transform(mode: TransformMode, config: &Path, input: &Path, out: &Path) -> CliResult<()> {
    let man = ManifestBuilder::new("transform").input(input);
    let cfg_text = fs::read_to_string(config)?;
    let cfg: TransformConfig = serde_json::from_str(&cfg_text)?;
    let dataset = match mode {
        TransformMode::Zft => {
            let zc = cfg.zft()?;
            let text = fs::read_to_string(input)?;
            let clouds = parse_point_clouds(&text, cfg.labels.as_deref())?;
            if clouds.is_empty() {
                return Err(CoreError::Format(format!("{} holds no point records", input.display())).into());
            }
            let n_labels = clouds[0].1.labels.len();
            let sig = zft_signature(&zc, n_labels)?;
            let mut ids = Vec::with_capacity(clouds.len());
            let mut tensors = Vec::with_capacity(clouds.len());
            for (id, cloud) in &clouds {
                let t = zft_point_cloud(cloud, &zc).map_err(|e| match e {
                    CoreError::OutOfBall { index, r, r_max } => CoreError::Domain(format!(
                        "cloud {id:?}: point {index} lies outside the ball (r = {r}, r_max = {r_max})"
                    )),
                    other => other,
                })?;
                ids.push(id.clone());
                tensors.push(t);
            }
            TensorDataset::new(sig, ids, tensors)?
        }
        TransformMode::Sft => {
            let signals = read_signals(fs::File::open(input)?)?;
            if signals.is_empty() {
                return Err(CoreError::Format(format!("{} holds no signals", input.display())).into());
            }
            let tensors = signals.iter().map(|s| sft_grid(s, cfg.l_max)).collect::<Result<Vec<_>, _>>()?;
            let ids = (0..tensors.len()).map(|i| i.to_string()).collect();
            TensorDataset::new(tensors[0].signature().clone(), ids, tensors)?
        }
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    dataset.save(out)?;
    let hash = hex::encode(Sha256::digest(cfg_text.as_bytes()));
    man.config(config, hash).write(&[out.to_path_buf()], &manifest_path(out))
}

fn load_matching(path: &Path, cfg: &ModelConfig) -> CliResult<TensorDataset> {
    let d = TensorDataset::load(path)?;
    if d.signature != cfg.input_signature {
        return Err(CoreError::Shape(format!(
            "{} has signature {} but the model expects {}",
            path.display(),
            d.signature,
            cfg.input_signature
        ))
        .into());
    }
    Ok(d)
}

fn history_csv(state: &TrainState) -> String {
    let mut s = String::from("epoch,lr,beta,train_total,train_rec,train_kl,val_total,val_rec,val_kl,selectable\n");
    for r in &state.history {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.epoch, r.lr, r.beta, r.train.total, r.train.reconstruction, r.train.kl, r.val.total, r.val.reconstruction, r.val.kl,
            r.selectable
        );
    }
    s
}

pub fn train(config: &Path, train: &Path, val: &Path, out: &Path, resume: Option<&Path>, quiet: bool) -> CliResult<()> {
    let cfg = ModelConfig::from_json(&fs::read_to_string(config)?)?;
    let train_set = load_matching(train, &cfg)?;
    let val_set = load_matching(val, &cfg)?;
    let mut man = ManifestBuilder::new("train").config(config, cfg.hash()).input(train).input(val).seed(cfg.seed);
    let (mut state, normalizer) = match resume {
        Some(p) => {
            let c = Checkpoint::load(p)?;
            if c.meta.config_hash != cfg.hash() {
                return Err(CliError::Usage(format!(
                    "checkpoint {} was written for config hash {}, current config hashes to {}",
                    p.display(),
                    c.meta.config_hash,
                    cfg.hash()
                )));
            }
            if !c.meta.has_optimizer {
                return Err(CliError::Usage(format!("{} is a best-model checkpoint without optimiser state", p.display())));
            }
            let norm = c.meta.normalizer.ok_or_else(|| CliError::Usage("checkpoint lacks its normaliser".into()))?;
            man = man.input(p);
            let mut state = c.state;
            state.net.config = cfg.clone();
            (state, norm)
        }
        None => {
            let net = Network::from_config(cfg.clone())?;
            (TrainState::new(net), DatasetNormalizer::fit(&train_set.tensors)?)
        }
    };
    let tr = normalizer.apply_all(&train_set.tensors);
    let va = normalizer.apply_all(&val_set.tensors);
    ensure_dir(out)?;
    let last = out.join("last.ckpt");
    let best = out.join("best.ckpt");
    let hist = out.join("history.csv");
    if !quiet {
        eprintln!("{} trainable parameters, {} training / {} validation samples", state.net.param_count(), tr.len(), va.len());
    }
    state.train(&tr, &va, |s, rec| {
        if !quiet {
            eprintln!(
                "epoch {:>4}  lr {:.2e}  beta {:.3}  train {:.6}  val {:.6}{}",
                rec.epoch,
                rec.lr,
                rec.beta,
                rec.train.total,
                rec.val.total,
                if s.best.as_ref().is_some_and(|b| b.epoch == rec.epoch) { "  *" } else { "" }
            );
        }
        Checkpoint::from_state(s, Some(normalizer)).save(&last)?;
        Ok(())
    })?;
    Checkpoint::from_state(&state, Some(normalizer)).save(&last)?;
    Checkpoint::best_of(&state, Some(normalizer)).save(&best)?;
    fs::write(&hist, history_csv(&state))?;
    man.write(&[best, last, hist], &out.join("manifest.json"))
}

/// `id,label` rows (an optional `id,label` header is skipped); class names
/// map to indices in sorted order.
fn read_labels(path: &Path, ids: &[String]) -> CliResult<(Vec<usize>, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    let mut map = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == "id,label") {
            continue;
        }
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| CoreError::Parse { line: i + 1, message: "expected `id,label`".into() })?;
        map.insert(id.trim().to_string(), label.trim().to_string());
    }
    let mut names: Vec<String> = map.values().cloned().collect();
    names.sort();
    names.dedup();
    let labels = ids
        .iter()
        .map(|id| {
            let name = map.get(id).ok_or_else(|| CliError::Usage(format!("no label for sample {id:?} in {}", path.display())))?;
            Ok(names.binary_search(name).expect("collected above"))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((labels, names))
}

fn load_model(ckpt: &Path) -> CliResult<(Checkpoint, DatasetNormalizer)> {
    let c = Checkpoint::load(ckpt)?;
    let norm = c.meta.normalizer.unwrap_or(DatasetNormalizer { scale: 1.0 });
    Ok((c, norm))
}

pub fn evaluate(
    ckpt: &Path,
    data: &Path,
    labels: Option<&Path>,
    classify: bool,
    audit: Option<(usize, f64)>,
    seed: u64,
    out: &Path,
) -> CliResult<()> {
    if classify && labels.is_none() {
        return Err(CliError::Usage("classification requested but no --labels file given".into()));
    }
    let (c, norm) = load_model(ckpt)?;
    let net = c.network();
    let d = load_matching(data, &net.config)?;
    let mut man = ManifestBuilder::new("evaluate").config(ckpt, c.meta.config_hash.clone()).input(ckpt).input(data).seed(seed);
    let lab = match labels {
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Usage(format!("label file {} does not exist", p.display())));
            }
            man = man.input(p);
            Some(read_labels(p, &d.ids)?.0)
        }
        None => None,
    };
    let xs = norm.apply_all(&d.tensors);
    let opts = EvalOptions { audit, seed, ..Default::default() };
    let ev = run_eval(net, &d.ids, &xs, lab.as_deref(), &opts)?;
    let report = ev.report;
    ensure_dir(out)?;
    let rp = out.join("report.json");
    let ep = out.join("embeddings.csv");
    let cp = out.join("reconstructions.json");
    TensorDataset::new(net.config.input_signature.clone(), d.ids.clone(), ev.reconstructions.iter().map(|t| norm.invert(t)).collect())?
        .save(&cp)?;
    fs::write(&rp, serde_json::to_string_pretty(&report)? + "\n")?;
    fs::write(&ep, embeddings_csv(&d.ids, lab.as_deref(), &ev.codes))?;
    if let Some(a) = &report.audit {
        if !a.passed {
            eprintln!(
                "equivariance audit failed: drift {:.3e}, frame {:.3e}, decode {:.3e} (tolerance {:.1e})",
                a.invariant_drift, a.frame_residual, a.decode_residual, a.tolerance
            );
        }
    }
    man.write(&[rp, ep, cp], &out.join("manifest.json"))
}

pub fn sample(
    ckpt: &Path,
    n: usize,
    seed: u64,
    sft_bw: Option<usize>,
    zft_grid: Option<usize>,
    zft_config: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let (c, norm) = load_model(ckpt)?;
    let net = c.network();
    let tensors: Vec<_> = net.sample_prior(n, seed)?.iter().map(|t| norm.invert(t)).collect();
    let ids = (0..n).map(|i| format!("sample_{i:05}")).collect();
    let ds = TensorDataset::new(net.config.input_signature.clone(), ids, tensors)?;
    let mut man = ManifestBuilder::new("sample").config(ckpt, c.meta.config_hash.clone()).input(ckpt).seed(seed);
    let grids = match sft_bw {
        Some(bw) => Some(ds.tensors.iter().map(|t| inverse_sft(t, bw)).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let density = match zft_grid {
        Some(g) => {
            let cp = zft_config.ok_or_else(|| CliError::Usage("--zft-grid needs --zft-config".into()))?;
            let tc: TransformConfig = read_json(cp)?;
            man = man.input(cp);
            Some(density_csv(&ds, &tc.zft()?, g)?)
        }
        None => None,
    };
    ensure_dir(out)?;
    let mut outputs = vec![out.join("samples.json")];
    ds.save(&outputs[0])?;
    if let Some(grids) = grids {
        let p = out.join("samples.sphg");
        write_signals(fs::File::create(&p)?, &grids)?;
        outputs.push(p);
    }
    if let Some(d) = density {
        let p = out.join("samples_density.csv");
        fs::write(&p, d)?;
        outputs.push(p);
    }
    man.write(&outputs, &out.join("manifest.json"))
}

/// Inverse-transform densities on the points of a `g^3` grid inside the ball.
fn density_csv(ds: &TensorDataset, zc: &ZftConfig, g: usize) -> CliResult<String> {
    let mut pts = Vec::new();
    let mut xyz = Vec::new();
    for i in 0..g {
        for j in 0..g {
            for k in 0..g {
                let c = |t: usize| zc.r_max * (2.0 * (t as f64 + 0.5) / g as f64 - 1.0);
                let v = [c(i), c(j), c(k)];
                let (r, th, ph) = cartesian_to_spherical(v);
                if r <= zc.r_max {
                    pts.push((r, th, ph));
                    xyz.push(v);
                }
            }
        }
    }
    let mut s = String::from("id,x,y,z,channel,density\n");
    for (id, t) in ds.ids.iter().zip(&ds.tensors) {
        let dens = inverse_zft(t, &pts, zc)?;
        for (v, d) in xyz.iter().zip(&dens) {
            for (ch, val) in d.iter().enumerate() {
                let _ = writeln!(s, "{id},{},{},{},{ch},{val}", v[0], v[1], v[2]);
            }
        }
    }
    Ok(s)
}

pub fn interpolate(ckpt: &Path, data: &Path, a: &str, b: &str, steps: usize, out: &Path) -> CliResult<()> {
    let (c, norm) = load_model(ckpt)?;
    let net = c.network();
    let d = load_matching(data, &net.config)?;
    let get = |id: &str| {
        d.get(id).map(|t| norm.apply(t)).ok_or_else(|| CliError::Usage(format!("sample {id:?} not found in {}", data.display())))
    };
    let (xa, xb) = (get(a)?, get(b)?);
    let path = net.interpolate(&xa, &xb, steps)?;
    let mut csv = String::from("step,t");
    for k in 0..net.config.z {
        let _ = write!(csv, ",z{k}");
    }
    csv.push('\n');
    let mut ids = Vec::new();
    let mut tensors = Vec::new();
    for (i, (t, z, x)) in path.into_iter().enumerate() {
        let _ = write!(csv, "{i},{t}");
        for v in &z {
            let _ = write!(csv, ",{v}");
        }
        csv.push('\n');
        ids.push(format!("step_{i:04}"));
        tensors.push(norm.invert(&x));
    }
    ensure_dir(out)?;
    let tp = out.join("interpolation.json");
    let lp = out.join("latents.csv");
    TensorDataset::new(net.config.input_signature.clone(), ids, tensors)?.save(&tp)?;
    fs::write(&lp, csv)?;
    ManifestBuilder::new("interpolate")
        .config(ckpt, c.meta.config_hash.clone())
        .input(ckpt)
        .input(data)
        .write(&[tp, lp], &out.join("manifest.json"))
}

pub fn params(config: &Path) -> CliResult<()> {
    let cfg = ModelConfig::from_json(&fs::read_to_string(config)?)?;
    let net = Network::from_config(cfg.clone())?;
    println!("input signature: {}", cfg.input_signature);
    println!("encoder degrees: {:?}, channels: {:?}", cfg.degrees_list, cfg.channels_list);
    println!("decoder degrees: {:?}, channels: {:?}", cfg.decoder_degrees(), cfg.decoder_channels());
    println!("trainable parameters: {}", net.param_count());
    Ok(())
}

pub fn synth(n: usize, seed: u64, r_max: f64, out: &Path) -> CliResult<()> {
    if !(r_max > 0.0) {
        return Err(CliError::Usage(format!("r_max must be positive, got {r_max}")));
    }
    let samples = synthetic_clouds(n, seed, r_max)?;
    let mut text = format!("# {n} synthetic clouds, classes: {}\n", SYNTHETIC_CLASSES.join(" "));
    let mut labels = String::from("id,label\n");
    for s in &samples {
        let _ = writeln!(text, "> {}", s.id);
        for (p, v) in s.cloud.points.iter().zip(s.cloud.cartesian()) {
            let _ = writeln!(text, "{} {} {} {} {}", v[0], v[1], v[2], s.cloud.labels[p.channel], p.weight);
        }
        let _ = writeln!(labels, "{},{}", s.id, SYNTHETIC_CLASSES[s.class]);
    }
    ensure_dir(out)?;
    let cp = out.join("clouds.txt");
    let lp = out.join("labels.csv");
    fs::write(&cp, text)?;
    fs::write(&lp, labels)?;
    ManifestBuilder::new("synth").seed(seed).write(&[cp, lp], &out.join("manifest.json"))
}
