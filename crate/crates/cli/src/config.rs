//! `key = value` experiment configuration with flag overrides.
//!
//! Lists are comma separated. Blank lines and `#` comments are ignored.
//! Keys use underscores; flags map onto the same keys and always win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Raw key/value pairs, later entries overriding earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "dataset_dir",
    "method",
    "alpha",
    "beta",
    "layers",
    "hidden",
    "dropout",
    "weight_decay",
    "lr",
    "seeds",
    "T",
    "epochs",
    "patience",
    "row_normalize",
    "mlp_layers",
    "init_seed",
    "decay",
];

impl ConfigMap {
    pub fn parse(text: &str, origin: &str) -> Result<ConfigMap> {
        let mut map = ConfigMap::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected key=value", i + 1))?;
            let k = k.trim();
            if !KNOWN_KEYS.contains(&k) {
                bail!("{origin}:{}: unknown key {k:?}", i + 1);
            }
            map.set(k, v.trim());
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<ConfigMap> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        ConfigMap::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("{key} = {v:?}: {e}")))
            .transpose()
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }
}

pub fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow!("{key}: {s:?}: {e}")))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        bail!("{key}: empty list");
    }
    Ok(items)
}

/// Parses `seeds`: a list like `0,1,2` or a range `0..5`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| anyhow!("seeds: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| anyhow!("seeds: {e}"))?;
        if b <= a {
            bail!("seeds: empty range {v:?}");
        }
        return Ok((a..b).collect());
    }
    parse_list("seeds", v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gcn,
    GpcaMlp,
    Gpcanet,
    GcnGpcainit,
}

impl FromStr for Method {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gcn" => Method::Gcn,
            "gpca-mlp" => Method::GpcaMlp,
            "gpcanet" => Method::Gpcanet,
            "gcn-gpcainit" => Method::GcnGpcainit,
            _ => bail!("unknown method {s:?} (gcn, gpca-mlp, gpcanet, gcn-gpcainit)"),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Gcn => "gcn",
            Method::GpcaMlp => "gpca-mlp",
            Method::Gpcanet => "gpcanet",
            Method::GcnGpcainit => "gcn-gpcainit",
        })
    }
}

impl Method {
    /// Learning rate used when none is configured.
    pub fn default_lr(self) -> f64 {
        match self {
            Method::GpcaMlp => 0.1,
            _ => 0.001,
        }
    }

    pub fn uses_graph_layers(self) -> bool {
        self != Method::GpcaMlp
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Method::GpcaMlp | Method::Gpcanet)
    }
}

/// Weight-decay coupling, see [`gpca_core::nn::DecayMode`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decay {
    #[default]
    Decoupled,
    L2,
}

impl FromStr for Decay {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "decoupled" => Decay::Decoupled,
            "l2" => Decay::L2,
            _ => bail!("unknown decay {s:?} (decoupled, l2)"),
        })
    }
}

impl From<Decay> for gpca_core::nn::DecayMode {
    fn from(d: Decay) -> Self {
        match d {
            Decay::Decoupled => gpca_core::nn::DecayMode::Decoupled,
            Decay::L2 => gpca_core::nn::DecayMode::L2,
        }
    }
}

/// Hyperparameter lists; the grid is their Cartesian product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub layers: Vec<usize>,
    pub hidden: Vec<usize>,
    pub dropout: Vec<f64>,
    pub weight_decay: Vec<f64>,
}

impl Grid {
    /// The shared pools for the citation datasets.
    pub fn citation_pools() -> Grid {
        Grid {
            alpha: vec![1.0, 5.0, 10.0, 20.0, 50.0],
            beta: vec![0.0, 0.1, 0.2],
            layers: vec![2, 3, 5, 10, 15],
            hidden: vec![128, 256],
            dropout: vec![0.0, 0.5],
            weight_decay: vec![0.0005, 0.005, 0.05],
        }
    }

    /// `α` pool for a shallow GPCANet of `layers` layers, if one is defined.
    pub fn shallow_gpcanet_alpha(layers: usize) -> Option<Vec<f64>> {
        match layers {
            1 => Some(vec![10.0, 20.0, 30.0]),
            2 => Some(vec![3.0, 5.0, 10.0]),
            3 => Some(vec![1.0, 2.0, 3.0, 5.0]),
            _ => None,
        }
    }
}

/// One point of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub alpha: f64,
    pub beta: f64,
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub weight_decay: f64,
}

/// Fully resolved experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub method: Method,
    pub grid: Grid,
    pub seeds: Vec<u64>,
    #[serde(rename = "T")]
    pub t: usize,
    pub lr: f64,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub row_normalize: bool,
    /// Depth of the MLP head on GPCA embeddings (1 or 2).
    pub mlp_layers: usize,
    /// Seed of the padding generator used when building pretrained weights.
    pub init_seed: u64,
    pub decay: Decay,
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<ExperimentConfig> {
        let method: Method = map.scalar("method")?.unwrap_or(Method::Gcn);
        let pools = Grid::citation_pools();
        let grid = Grid {
            alpha: map.list("alpha")?.unwrap_or(vec![10.0]),
            beta: map.list("beta")?.unwrap_or(vec![0.0]),
            layers: map.list("layers")?.unwrap_or(vec![2]),
            hidden: map.list("hidden")?.unwrap_or(vec![pools.hidden[0]]),
            dropout: map.list("dropout")?.unwrap_or(vec![0.5]),
            weight_decay: map.list("weight_decay")?.unwrap_or(vec![pools.weight_decay[0]]),
        };
        let seeds = match map.get("seeds") {
            Some(v) => parse_seeds(v)?,
            None => (0..5).collect(),
        };
        let cfg = ExperimentConfig {
            dataset_dir: map
                .get("dataset_dir")
                .map(PathBuf::from)
                .ok_or_else(|| anyhow!("dataset_dir is required (--dataset-dir or config)"))?,
            method,
            grid,
            seeds,
            t: map.scalar("T")?.unwrap_or(gpca_core::smoother::DEFAULT_ITERATIONS),
            lr: map.scalar("lr")?.unwrap_or(method.default_lr()),
            epochs: map.scalar("epochs")?.unwrap_or(gpca_core::nn::DEFAULT_EPOCHS),
            patience: map.scalar("patience")?,
            row_normalize: map.scalar("row_normalize")?.unwrap_or(false),
            mlp_layers: map.scalar("mlp_layers")?.unwrap_or(1),
            init_seed: map.scalar("init_seed")?.unwrap_or(0),
            decay: map.scalar("decay")?.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            bail!("seeds must be distinct");
        }
        if self.seeds.is_empty() {
            bail!("at least one seed is required");
        }
        let g = &self.grid;
        if g.alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            bail!("alpha values must be finite and >= 0");
        }
        if g.beta.iter().any(|b| !(0.0..=1.0).contains(b)) {
            bail!("beta values must lie in [0, 1]");
        }
        if g.layers.contains(&0) || g.hidden.contains(&0) {
            bail!("layers and hidden must be >= 1");
        }
        if g.dropout.iter().any(|d| !(0.0..1.0).contains(d)) {
            bail!("dropout values must lie in [0, 1)");
        }
        if g.weight_decay.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            bail!("weight_decay values must be finite and >= 0");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            bail!("lr must be positive");
        }
        if !(1..=2).contains(&self.mlp_layers) {
            bail!("mlp_layers must be 1 or 2");
        }
        if self.epochs == 0 {
            bail!("epochs must be >= 1");
        }
        Ok(())
    }

    /// Grid cells in a fixed order. Axes a method ignores collapse to their
    /// first value.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let alphas = if self.method.uses_alpha() { &g.alpha[..] } else { &g.alpha[..1] };
        let betas = if self.method.uses_alpha() { &g.beta[..] } else { &g.beta[..1] };
        let layers = if self.method.uses_graph_layers() { &g.layers[..] } else { &g.layers[..1] };
        let mut out = Vec::new();
        for &layers in layers {
            for &hidden in &g.hidden {
                for &alpha in alphas {
                    for &beta in betas {
                        for &dropout in &g.dropout {
                            for &weight_decay in &g.weight_decay {
                                out.push(Cell {
                                    alpha,
                                    beta,
                                    layers,
                                    hidden,
                                    dropout,
                                    weight_decay,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut m = ConfigMap::parse(
            "# grid\ndataset_dir = data/cora\nmethod=gpca-mlp\nalpha = 1, 5,10\nseeds=0..3\n",
            "test",
        )
        .unwrap();
        m.set("alpha", "20");
        let c = ExperimentConfig::from_map(&m).unwrap();
        assert_eq!(c.method, Method::GpcaMlp);
        assert_eq!(c.grid.alpha, vec![20.0]);
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert_eq!(c.lr, 0.1);
    }

    #[test]
    fn errors_name_the_line() {
        let e = ConfigMap::parse("alpha=1\nbogus\n", "f.cfg").unwrap_err().to_string();
        assert!(e.contains("f.cfg:2"), "{e}");
        assert!(ConfigMap::parse("colour=red", "f").is_err());
        let mut m = ConfigMap::default();
        m.set("dataset_dir", "x");
        m.set("seeds", "1,1");
        assert!(ExperimentConfig::from_map(&m).is_err());
    }

    #[test]
    fn unused_axes_collapse() {
        let mut m = ConfigMap::default();
        m.set("dataset_dir", "x");
        m.set("method", "gcn");
        m.set("alpha", "1,5,10");
        m.set("layers", "2,3");
        let c = ExperimentConfig::from_map(&m).unwrap();
        assert_eq!(c.cells().len(), 2);
        m.set("method", "gpca-mlp");
        let c = ExperimentConfig::from_map(&m).unwrap();
        assert_eq!(c.cells().len(), 3);
    }
}
