//! Bundle persistence: one self-describing flat text file per model, plus
//! the normalizer, a manifest (seed, source-log digest, validation
//! metrics) and a validation-metrics CSV.
//!
//! Floats are written in shortest round-trip form, so a saved model
//! reloads bit-identically and reruns stay byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::Normalizer;
use crate::learners::boosted::{BoostTask, Boosted, BoostedSpec};
use crate::learners::forest::{Forest, ForestSpec};
use crate::learners::ridge::Ridge;
use crate::learners::tree::{MaxFeatures, Node, Tree};
use crate::learners::{ClassifierMetrics, RegressorMetrics};
use crate::models::{ModelBundle, Provenance, ValidationReport};
use crate::util::{read_to_string, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const METRICS_FILE: &str = "validation_metrics.csv";
const FILES: [&str; 5] = [
    "model_a.txt",
    "model_b.txt",
    "model_c.txt",
    "model_d.txt",
    "normalizer_d.txt",
];

fn push_trees(out: &mut String, trees: &[Tree]) {
    for tree in trees {
        out.push_str(&format!("tree {}\n", tree.nodes.len()));
        for node in &tree.nodes {
            match node {
                Node::Split { feature, threshold, left, right } => {
                    out.push_str(&format!("s {feature} {threshold} {left} {right}\n"));
                }
                Node::Leaf { value } => out.push_str(&format!("l {value}\n")),
            }
        }
    }
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    consumed: usize,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        LineReader { lines: text.lines(), consumed: 0 }
    }

    fn next(&mut self) -> Result<&'a str> {
        self.consumed += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::Data(format!("model file truncated at line {}", self.consumed)))
    }
}

fn parse_trees(reader: &mut LineReader, count: usize) -> Result<Vec<Tree>> {
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let header = reader.next()?;
        let n_nodes: usize = header
            .strip_prefix("tree ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Data(format!("bad tree header `{header}`")))?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let line = reader.next()?;
            let mut toks = line.split(' ');
            match toks.next() {
                Some("s") => {
                    let vals: Vec<&str> = toks.collect();
                    if vals.len() != 4 {
                        return Err(Error::Data(format!("bad split node `{line}`")));
                    }
                    nodes.push(Node::Split {
                        feature: parse(vals[0])?,
                        threshold: parse(vals[1])?,
                        left: parse(vals[2])?,
                        right: parse(vals[3])?,
                    });
                }
                Some("l") => {
                    let v = toks.next().ok_or_else(|| Error::Data("bad leaf node".into()))?;
                    nodes.push(Node::Leaf { value: parse(v)? });
                }
                _ => return Err(Error::Data(format!("unknown node line `{line}`"))),
            }
        }
        trees.push(Tree { nodes });
    }
    Ok(trees)
}

fn parse<T: std::str::FromStr>(tok: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Data(format!("cannot parse `{tok}` in model file")))
}

fn header_map(reader: &mut LineReader, until_key: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    loop {
        let line = reader.next()?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("expected key=value, got `{line}`")))?;
        map.insert(k.to_string(), v.to_string());
        if k == until_key {
            return Ok(map);
        }
    }
}

fn get<'m>(map: &'m BTreeMap<String, String>, key: &str) -> Result<&'m str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Data(format!("model file missing key `{key}`")))
}

fn boosted_to_text(m: &Boosted) -> String {
    let algorithm = match m.task {
        BoostTask::Regression => "boosted_regressor",
        BoostTask::Classification => "boosted_classifier",
    };
    let s = &m.spec;
    let mut out = format!(
        "algorithm={algorithm}\nn_estimators={}\nmax_depth={}\nlearning_rate={}\nsubsample={}\ncolsample_bytree={}\nmin_child_weight={}\ngamma={}\nbase_score={}\ntrees={}\n",
        s.n_estimators,
        s.max_depth,
        s.learning_rate,
        s.subsample,
        s.colsample_bytree,
        s.min_child_weight,
        s.gamma,
        m.base_score,
        m.trees.len(),
    );
    push_trees(&mut out, &m.trees);
    out
}

fn boosted_from_text(text: &str) -> Result<Boosted> {
    let mut reader = LineReader::new(text);
    let map = header_map(&mut reader, "trees")?;
    let task = match get(&map, "algorithm")? {
        "boosted_regressor" => BoostTask::Regression,
        "boosted_classifier" => BoostTask::Classification,
        other => return Err(Error::Data(format!("unexpected algorithm `{other}`"))),
    };
    let spec = BoostedSpec {
        n_estimators: parse(get(&map, "n_estimators")?)?,
        max_depth: parse(get(&map, "max_depth")?)?,
        learning_rate: parse(get(&map, "learning_rate")?)?,
        subsample: parse(get(&map, "subsample")?)?,
        colsample_bytree: parse(get(&map, "colsample_bytree")?)?,
        min_child_weight: parse(get(&map, "min_child_weight")?)?,
        gamma: parse(get(&map, "gamma")?)?,
    };
    let n_trees: usize = parse(get(&map, "trees")?)?;
    Ok(Boosted {
        base_score: parse(get(&map, "base_score")?)?,
        trees: parse_trees(&mut reader, n_trees)?,
        learning_rate: spec.learning_rate,
        task,
        spec,
    })
}

fn ridge_to_text(m: &Ridge) -> String {
    let coeffs: Vec<String> = m.coefficients.iter().map(|c| format!("{c}")).collect();
    format!(
        "algorithm=ridge\nalpha={}\nintercept={}\ncoefficients={}\n",
        m.alpha,
        m.intercept,
        coeffs.join(" "),
    )
}

fn ridge_from_text(text: &str) -> Result<Ridge> {
    let mut reader = LineReader::new(text);
    let map = header_map(&mut reader, "coefficients")?;
    if get(&map, "algorithm")? != "ridge" {
        return Err(Error::Data("expected a ridge model file".into()));
    }
    let coefficients: Vec<f64> = get(&map, "coefficients")?
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(parse)
        .collect::<Result<_>>()?;
    Ok(Ridge {
        coefficients,
        intercept: parse(get(&map, "intercept")?)?,
        alpha: parse(get(&map, "alpha")?)?,
    })
}

fn forest_to_text(m: &Forest) -> String {
    let s = &m.spec;
    let depth = s.max_depth.map(|d| d.to_string()).unwrap_or_else(|| "none".into());
    let mut out = format!(
        "algorithm=random_forest\nn_estimators={}\nmax_depth={depth}\nmax_features={}\nmin_samples_leaf={}\nmin_samples_split={}\nseed={}\ntrees={}\n",
        s.n_estimators,
        s.max_features.as_str(),
        s.min_samples_leaf,
        s.min_samples_split,
        m.seed,
        m.trees.len(),
    );
    push_trees(&mut out, &m.trees);
    out
}

fn forest_from_text(text: &str) -> Result<Forest> {
    let mut reader = LineReader::new(text);
    let map = header_map(&mut reader, "trees")?;
    if get(&map, "algorithm")? != "random_forest" {
        return Err(Error::Data("expected a random_forest model file".into()));
    }
    let depth = match get(&map, "max_depth")? {
        "none" => None,
        other => Some(parse(other)?),
    };
    let spec = ForestSpec {
        n_estimators: parse(get(&map, "n_estimators")?)?,
        max_depth: depth,
        max_features: get(&map, "max_features")?.parse::<MaxFeatures>()?,
        min_samples_leaf: parse(get(&map, "min_samples_leaf")?)?,
        min_samples_split: parse(get(&map, "min_samples_split")?)?,
    };
    let n_trees: usize = parse(get(&map, "trees")?)?;
    Ok(Forest {
        trees: parse_trees(&mut reader, n_trees)?,
        spec,
        seed: parse(get(&map, "seed")?)?,
    })
}

fn normalizer_to_text(n: &Normalizer) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
    format!("mins={}\nmaxs={}\n", join(&n.mins), join(&n.maxs))
}

fn normalizer_from_text(text: &str) -> Result<Normalizer> {
    let mut reader = LineReader::new(text);
    let map = header_map(&mut reader, "maxs")?;
    let vec = |key: &str| -> Result<Vec<f64>> {
        get(&map, key)?
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(parse)
            .collect()
    };
    Ok(Normalizer { mins: vec("mins")?, maxs: vec("maxs")? })
}

fn metric_rows(v: &ValidationReport) -> Vec<(String, String, f64)> {
    let cls = |name: &str, m: &ClassifierMetrics| {
        vec![
            (name.to_string(), "accuracy".to_string(), m.accuracy),
            (name.to_string(), "f1".to_string(), m.f1),
            (name.to_string(), "roc_auc".to_string(), m.roc_auc),
            (name.to_string(), "precision_pos".to_string(), m.precision_pos),
            (name.to_string(), "recall_pos".to_string(), m.recall_pos),
        ]
    };
    let reg = |name: &str, m: &RegressorMetrics| {
        vec![
            (name.to_string(), "rmse".to_string(), m.rmse),
            (name.to_string(), "mae".to_string(), m.mae),
            (name.to_string(), "r2".to_string(), m.r2),
        ]
    };
    let mut rows = cls("A", &v.a);
    rows.extend(reg("B", &v.b));
    rows.extend(reg("C", &v.c));
    rows.extend(cls("D", &v.d));
    rows
}

/// Renders the Tables-style validation metrics CSV (`model,metric,value`).
pub fn metrics_csv(v: &ValidationReport) -> String {
    let mut out = String::from("model,metric,value\n");
    for (model, metric, value) in metric_rows(v) {
        out.push_str(&format!("{model},{metric},{value:.6}\n"));
    }
    out
}

fn manifest_to_text(b: &ModelBundle) -> String {
    let mut out = format!(
        "format_version=1\nseed={}\nsource_log_digest={}\nttl_initial={}\n",
        b.provenance.seed, b.provenance.source_log_digest, b.ttl_initial,
    );
    for (model, metric, value) in metric_rows(&b.validation) {
        out.push_str(&format!("metric_{}_{}={value}\n", model.to_lowercase(), metric));
    }
    out
}

fn manifest_parts(text: &str) -> Result<(Provenance, u32, ValidationReport)> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            map.insert(k.to_string(), v.to_string());
        }
    }
    let metric = |key: &str| -> Result<f64> { parse(get(&map, key)?) };
    let cls = |m: &str| -> Result<ClassifierMetrics> {
        Ok(ClassifierMetrics {
            accuracy: metric(&format!("metric_{m}_accuracy"))?,
            f1: metric(&format!("metric_{m}_f1"))?,
            roc_auc: metric(&format!("metric_{m}_roc_auc"))?,
            precision_pos: metric(&format!("metric_{m}_precision_pos"))?,
            recall_pos: metric(&format!("metric_{m}_recall_pos"))?,
        })
    };
    let reg = |m: &str| -> Result<RegressorMetrics> {
        Ok(RegressorMetrics {
            rmse: metric(&format!("metric_{m}_rmse"))?,
            mae: metric(&format!("metric_{m}_mae"))?,
            r2: metric(&format!("metric_{m}_r2"))?,
        })
    };
    Ok((
        Provenance {
            seed: parse(get(&map, "seed")?)?,
            source_log_digest: get(&map, "source_log_digest")?.to_string(),
        },
        parse(get(&map, "ttl_initial")?)?,
        ValidationReport { a: cls("a")?, b: reg("b")?, c: reg("c")?, d: cls("d")? },
    ))
}

/// Writes the bundle directory (four models, normalizer, manifest,
/// validation metrics CSV).
pub fn save_bundle(bundle: &ModelBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("model_a.txt"), &boosted_to_text(&bundle.model_a))?;
    write_atomic(&dir.join("model_b.txt"), &boosted_to_text(&bundle.model_b))?;
    write_atomic(&dir.join("model_c.txt"), &ridge_to_text(&bundle.model_c))?;
    write_atomic(&dir.join("model_d.txt"), &forest_to_text(&bundle.model_d))?;
    write_atomic(&dir.join("normalizer_d.txt"), &normalizer_to_text(&bundle.normalizer_d))?;
    write_atomic(&dir.join(MANIFEST_FILE), &manifest_to_text(bundle))?;
    write_atomic(&dir.join(METRICS_FILE), &metrics_csv(&bundle.validation))
}

/// Loads a bundle directory written by [`save_bundle`].
pub fn load_bundle(dir: &Path) -> Result<ModelBundle> {
    for f in FILES.iter().chain([&MANIFEST_FILE]) {
        if !dir.join(f).exists() {
            return Err(Error::Data(format!(
                "bundle directory {} is missing {f}",
                dir.display()
            )));
        }
    }
    let (provenance, ttl_initial, validation) =
        manifest_parts(&read_to_string(&dir.join(MANIFEST_FILE))?)?;
    Ok(ModelBundle {
        model_a: boosted_from_text(&read_to_string(&dir.join("model_a.txt"))?)?,
        model_b: boosted_from_text(&read_to_string(&dir.join("model_b.txt"))?)?,
        model_c: ridge_from_text(&read_to_string(&dir.join("model_c.txt"))?)?,
        model_d: forest_from_text(&read_to_string(&dir.join("model_d.txt"))?)?,
        normalizer_d: normalizer_from_text(&read_to_string(&dir.join("normalizer_d.txt"))?)?,
        ttl_initial,
        provenance,
        validation,
    })
}
