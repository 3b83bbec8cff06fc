use serde::{Deserialize, Serialize};

use crate::cluster::DEFAULT_RESTARTS;
use crate::datagen::{
    gen_gamma, gen_gaussian, gen_ising, gen_negbin, gen_probit, hetero_centers, hetero_covariances,
    sparse_centers, CovSpec, Dataset, LabelMode, RhoSampler,
};
use crate::error::{Error, Result};
use crate::numcore::SeededRng;

/// Data source of one experiment. `n` and `p` are always present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Two isotropic clusters with centers on disjoint `s`-sparse supports,
    /// `‖θ₁ − θ₂‖ = 2·center_scale·α_eff` and
    /// `α_eff = α·(p/n)^alpha_pn_exponent`.
    SparseGaussian {
        n: usize,
        p: usize,
        #[serde(default)]
        s: Option<usize>,
        #[serde(default)]
        s_frac: Option<f64>,
        alpha: f64,
        #[serde(default)]
        alpha_pn_exponent: f64,
        #[serde(default = "one")]
        center_scale: f64,
        #[serde(default)]
        balanced: bool,
    },
    /// Two clusters with swapped diagonal variances on the two halves of
    /// the coordinates.
    HeteroGaussian {
        n: usize,
        p: usize,
        alpha: f64,
        #[serde(default)]
        alpha_pn_exponent: f64,
        #[serde(default = "high_var")]
        high_var: f64,
        #[serde(default = "one")]
        low_var: f64,
        #[serde(default)]
        balanced: bool,
    },
    Ising {
        n: usize,
        p: usize,
    },
    Probit {
        n: usize,
        p: usize,
        #[serde(default = "rho_low")]
        rho_low: f64,
        #[serde(default = "rho_high")]
        rho_high: f64,
    },
    Gamma {
        n: usize,
        p: usize,
    },
    NegBin {
        n: usize,
        p: usize,
    },
}

fn one() -> f64 {
    1.0
}
fn high_var() -> f64 {
    25.0
}
fn rho_low() -> f64 {
    -0.8
}
fn rho_high() -> f64 {
    0.8
}
fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}

impl GeneratorSpec {
    pub fn n(&self) -> usize {
        match *self {
            GeneratorSpec::SparseGaussian { n, .. }
            | GeneratorSpec::HeteroGaussian { n, .. }
            | GeneratorSpec::Ising { n, .. }
            | GeneratorSpec::Probit { n, .. }
            | GeneratorSpec::Gamma { n, .. }
            | GeneratorSpec::NegBin { n, .. } => n,
        }
    }

    pub fn p(&self) -> usize {
        match *self {
            GeneratorSpec::SparseGaussian { p, .. }
            | GeneratorSpec::HeteroGaussian { p, .. }
            | GeneratorSpec::Ising { p, .. }
            | GeneratorSpec::Probit { p, .. }
            | GeneratorSpec::Gamma { p, .. }
            | GeneratorSpec::NegBin { p, .. } => p,
        }
    }

    pub fn k(&self) -> usize {
        2
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(
            self,
            GeneratorSpec::SparseGaussian { .. } | GeneratorSpec::HeteroGaussian { .. }
        )
    }

    fn effective_alpha(alpha: f64, exponent: f64, n: usize, p: usize) -> f64 {
        alpha * (p as f64 / n as f64).powf(exponent)
    }

    fn sparsity(&self) -> Option<usize> {
        match *self {
            GeneratorSpec::SparseGaussian { p, s, s_frac, .. } => {
                s.or_else(|| s_frac.map(|f| (f * p as f64).round() as usize))
            }
            _ => None,
        }
    }

    /// Problems with this spec, empty when it is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (n, p) = (self.n(), self.p());
        if n < 2 {
            out.push(format!("generator.n = {n} must be at least 2"));
        }
        if p < 2 {
            out.push(format!("generator.p = {p} must be at least 2"));
        }
        match *self {
            GeneratorSpec::SparseGaussian {
                s,
                s_frac,
                alpha,
                center_scale,
                alpha_pn_exponent,
                ..
            } => {
                match (s, s_frac) {
                    (Some(_), Some(_)) => out.push("generator: give only one of s and s_frac".into()),
                    (None, None) => out.push("generator: one of s or s_frac is required".into()),
                    _ => {}
                }
                if let Some(s) = self.sparsity() {
                    if s == 0 || 2 * s > p {
                        out.push(format!("generator.s = {s} must satisfy 1 <= s <= p/2"));
                    }
                }
                for (name, v) in [
                    ("alpha", alpha),
                    ("center_scale", center_scale),
                    ("alpha_pn_exponent", alpha_pn_exponent),
                ] {
                    if !v.is_finite() {
                        out.push(format!("generator.{name} must be finite"));
                    }
                }
            }
            GeneratorSpec::HeteroGaussian {
                alpha,
                high_var,
                low_var,
                alpha_pn_exponent,
                ..
            } => {
                if p % 2 != 0 {
                    out.push(format!("generator.p = {p} must be even"));
                }
                if !alpha.is_finite() || !alpha_pn_exponent.is_finite() {
                    out.push("generator.alpha must be finite".into());
                }
                if !(high_var > 0.0) || !(low_var > 0.0) {
                    out.push("generator variances must be positive".into());
                }
            }
            GeneratorSpec::Ising { .. } => {
                if p % 4 != 0 {
                    out.push(format!("generator.p = {p} must be divisible by 4"));
                }
            }
            GeneratorSpec::Probit {
                rho_low, rho_high, ..
            } => {
                if p % 2 != 0 {
                    out.push(format!("generator.p = {p} must be even"));
                }
                if !(rho_low > -1.0 && rho_high < 1.0 && rho_low <= rho_high) {
                    out.push("generator: need -1 < rho_low <= rho_high < 1".into());
                }
            }
            GeneratorSpec::Gamma { .. } | GeneratorSpec::NegBin { .. } => {}
        }
        out
    }

    pub fn generate(&self, rng: &mut SeededRng) -> Result<Dataset> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        match *self {
            GeneratorSpec::SparseGaussian {
                n,
                p,
                alpha,
                alpha_pn_exponent,
                center_scale,
                balanced,
                ..
            } => {
                let a = Self::effective_alpha(alpha, alpha_pn_exponent, n, p);
                let s = self.sparsity().expect("validated");
                let centers = sparse_centers(p, s, a, center_scale)?;
                let covs = vec![CovSpec::identity(p); 2];
                gen_gaussian(n, p, &centers, &covs, &[0.5, 0.5], label_mode(balanced), rng)
            }
            GeneratorSpec::HeteroGaussian {
                n,
                p,
                alpha,
                alpha_pn_exponent,
                high_var,
                low_var,
                balanced,
            } => {
                let a = Self::effective_alpha(alpha, alpha_pn_exponent, n, p);
                let centers = hetero_centers(p, a)?;
                let covs = hetero_covariances(p, high_var, low_var)?;
                gen_gaussian(n, p, &centers, &covs, &[0.5, 0.5], label_mode(balanced), rng)
            }
            GeneratorSpec::Ising { n, p } => gen_ising(n, p, rng),
            GeneratorSpec::Probit {
                n,
                p,
                rho_low,
                rho_high,
            } => {
                let sampler = if rho_low == rho_high {
                    RhoSampler::Fixed { rho: rho_low }
                } else {
                    RhoSampler::Uniform {
                        low: rho_low,
                        high: rho_high,
                    }
                };
                gen_probit(n, p, &sampler, rng)
            }
            GeneratorSpec::Gamma { n, p } => gen_gamma(n, p, rng),
            GeneratorSpec::NegBin { n, p } => gen_negbin(n, p, rng),
        }
    }

    /// Copy with `param` set to `value`.
    pub fn with_param(&self, param: &str, value: f64) -> Result<GeneratorSpec> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Validation(vec![e.to_string()]))?;
        let obj = v.as_object_mut().expect("tagged enum serializes to an object");
        if param == "kind" || !obj.contains_key(param) {
            return Err(Error::Validation(vec![format!(
                "sweep.param '{param}' is not a parameter of this generator"
            )]));
        }
        let number = if value.fract() == 0.0 && value >= 0.0 && value < 9.0e15 {
            serde_json::Value::from(value as u64)
        } else {
            serde_json::Value::from(value)
        };
        obj.insert(param.to_string(), number);
        serde_json::from_value(v).map_err(|e| {
            Error::Validation(vec![format!("sweep value {value} for '{param}': {e}")])
        })
    }
}

fn label_mode(balanced: bool) -> LabelMode {
    if balanced {
        LabelMode::Balanced
    } else {
        LabelMode::Iid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Copo,
    Kmeans,
    /// k-means on the scaled top singular vectors of `Y`.
    Spectral,
    /// k-means on the scaled hollowed-Gram embedding.
    Hollowed,
    BayesOracle,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Copo,
        Method::Kmeans,
        Method::Spectral,
        Method::Hollowed,
        Method::BayesOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Copo => "copo",
            Method::Kmeans => "kmeans",
            Method::Spectral => "spectral",
            Method::Hollowed => "hollowed",
            Method::BayesOracle => "bayes_oracle",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Fixed sub-stream tag, independent of the method list.
    pub(crate) fn stream_tag(self) -> u64 {
        100 + self as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopoSettings {
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    /// Defaults to `max(1, ⌊ln n⌋)`.
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default = "default_min_size")]
    pub min_cluster_size: usize,
    #[serde(default)]
    pub log_det: bool,
}

fn default_ridge() -> f64 {
    1e-6
}
fn default_min_size() -> usize {
    2
}

impl Default for CopoSettings {
    fn default() -> Self {
        CopoSettings {
            ridge: default_ridge(),
            max_iters: None,
            min_cluster_size: default_min_size(),
            log_det: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub raw_csv: Option<String>,
    #[serde(default)]
    pub summary_csv: Option<String>,
    #[serde(default)]
    pub chart_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub generator: GeneratorSpec,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub copo: CopoSettings,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
    /// Fill the `wall_ms` column. Off by default so outputs are reproducible.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Validation(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Io(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    /// One generator per sweep point (a single point without a sweep).
    pub fn points(&self) -> Result<Vec<(Option<f64>, GeneratorSpec)>> {
        match &self.sweep {
            None => Ok(vec![(None, self.generator.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| Ok((Some(v), self.generator.with_param(&s.param, v)?)))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.name.is_empty() {
            problems.push("name must not be empty".to_string());
        }
        if self.replicates == 0 {
            problems.push("replicates must be at least 1".into());
        }
        if self.methods.is_empty() {
            problems.push("methods must list at least one method".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            problems.push("methods contains duplicates".into());
        }
        if self.methods.contains(&Method::BayesOracle) && !self.generator.is_gaussian() {
            problems.push("bayes_oracle needs a Gaussian generator".into());
        }
        if self.kmeans_restarts == 0 {
            problems.push("kmeans_restarts must be at least 1".into());
        }
        if !(self.copo.ridge >= 0.0) || !self.copo.ridge.is_finite() {
            problems.push("copo.ridge must be a finite non-negative number".into());
        }
        if self.copo.max_iters == Some(0) {
            problems.push("copo.max_iters must be at least 1".into());
        }
        if self.copo.min_cluster_size == 0 {
            problems.push("copo.min_cluster_size must be at least 1".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                problems.push("sweep.values must not be empty".into());
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                problems.push("sweep.values must be finite".into());
            }
        }
        match self.points() {
            Ok(points) => {
                for (v, g) in points {
                    for p in g.problems() {
                        match v {
                            Some(v) => problems.push(format!("at sweep value {v}: {p}")),
                            None => problems.push(p),
                        }
                    }
                }
            }
            Err(Error::Validation(p)) => problems.extend(p),
            Err(e) => problems.push(e.to_string()),
        }
        problems.dedup();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "generator": {"kind": "sparse_gaussian", "n": 40, "p": 60, "s": 5, "alpha": 4.0},
        "methods": ["copo", "kmeans"],
        "replicates": 2,
        "base_seed": 7,
        "sweep": {"param": "p", "values": [60, 80]}
    }"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.kmeans_restarts, DEFAULT_RESTARTS);
        assert_eq!(cfg.copo, CopoSettings::default());
        assert!(!cfg.record_timing);
        let pts = cfg.points().unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].1.p(), 80);
    }

    #[test]
    fn unknown_sweep_param_is_reported() {
        let text = MINIMAL.replace("\"param\": \"p\"", "\"param\": \"rho_low\"");
        match ExperimentConfig::from_json(&text) {
            Err(Error::Validation(p)) => assert!(p.iter().any(|m| m.contains("rho_low")), "{p:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists_every_offending_field() {
        let text = MINIMAL
            .replace("\"replicates\": 2", "\"replicates\": 0")
            .replace("\"s\": 5", "\"s\": 50");
        match ExperimentConfig::from_json(&text) {
            Err(Error::Validation(p)) => {
                assert!(p.iter().any(|m| m.contains("replicates")));
                assert!(p.iter().any(|m| m.contains("generator.s")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"base_seed\": 7", "\"base_seed\": 7, \"seed\": 3");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn bayes_needs_gaussian() {
        let text = MINIMAL
            .replace(r#""kind": "sparse_gaussian", "n": 40, "p": 60, "s": 5, "alpha": 4.0"#, r#""kind": "ising", "n": 40, "p": 60"#)
            .replace("[\"copo\", \"kmeans\"]", "[\"bayes_oracle\"]");
        match ExperimentConfig::from_json(&text) {
            Err(Error::Validation(p)) => assert!(p.iter().any(|m| m.contains("bayes_oracle"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fractional_sweep_values_stay_real() {
        let g = GeneratorSpec::SparseGaussian {
            n: 10,
            p: 20,
            s: Some(2),
            s_frac: None,
            alpha: 1.0,
            alpha_pn_exponent: 0.0,
            center_scale: 1.0,
            balanced: false,
        };
        match g.with_param("alpha", 2.5).unwrap() {
            GeneratorSpec::SparseGaussian { alpha, .. } => assert_eq!(alpha, 2.5),
            _ => unreachable!(),
        }
        match g.with_param("alpha", 3.0).unwrap() {
            GeneratorSpec::SparseGaussian { alpha, .. } => assert_eq!(alpha, 3.0),
            _ => unreachable!(),
        }
        assert!(g.with_param("n", 2.5).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_name(m.name()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }
}
