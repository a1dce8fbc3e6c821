use std::path::Path;

use serde::Deserialize;

/// Optional TOML configuration. Every key may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub backend: Option<String>,
    pub rel_gap: Option<f64>,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub jobs: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Solver settings after merging flags, environment, config and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub backend: String,
    pub rel_gap: f64,
    pub time_limit_s: f64,
    pub node_limit: Option<u64>,
    pub jobs: usize,
}

pub struct Layers<'a> {
    pub backend_flag: Option<&'a str>,
    pub backend_env: Option<String>,
    pub gap_flag: Option<f64>,
    pub time_limit_flag: Option<f64>,
    pub jobs_flag: Option<usize>,
    pub config: &'a Config,
}

/// Flags win over `GRIDPACT_SOLVER` (backend only), which wins over the
/// config file, which wins over the defaults.
pub fn resolve(l: Layers<'_>) -> Result<Resolved, String> {
    let backend = l
        .backend_flag
        .map(str::to_string)
        .or(l.backend_env.filter(|s| !s.trim().is_empty()))
        .or_else(|| l.config.solver.backend.clone())
        .unwrap_or_else(|| "bnb".to_string());
    if !gridpact::lp::BACKENDS.contains(&backend.as_str()) {
        return Err(format!(
            "unknown backend `{backend}` (available: {})",
            gridpact::lp::BACKENDS.join(", ")
        ));
    }
    let rel_gap = l.gap_flag.or(l.config.solver.rel_gap).unwrap_or(1e-3);
    if !(rel_gap > 0.0 && rel_gap < 0.5) {
        return Err(format!("gap must lie in (0, 0.5), got {rel_gap}"));
    }
    let time_limit_s = l.time_limit_flag.or(l.config.solver.time_limit_s).unwrap_or(600.0);
    if !(time_limit_s > 0.0) {
        return Err(format!("time limit must be positive, got {time_limit_s}"));
    }
    let jobs = l
        .jobs_flag
        .or(l.config.sweep.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err("jobs must be at least 1".into());
    }
    Ok(Resolved { backend, rel_gap, time_limit_s, node_limit: l.config.solver.node_limit, jobs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers<'a>(cfg: &'a Config) -> Layers<'a> {
        Layers {
            backend_flag: None,
            backend_env: None,
            gap_flag: None,
            time_limit_flag: None,
            jobs_flag: Some(1),
            config: cfg,
        }
    }

    #[test]
    fn defaults_apply_without_any_layer() {
        let cfg = Config::default();
        let r = resolve(layers(&cfg)).unwrap();
        assert_eq!((r.backend.as_str(), r.rel_gap, r.time_limit_s), ("bnb", 1e-3, 600.0));
    }

    #[test]
    fn precedence_is_flag_env_config() {
        let cfg: Config = toml::from_str("[solver]\nbackend = \"bnb\"\nrel_gap = 0.01\n").unwrap();
        let r = resolve(Layers { backend_env: Some("bnb-indicator".into()), ..layers(&cfg) }).unwrap();
        assert_eq!(r.backend, "bnb-indicator");
        assert_eq!(r.rel_gap, 0.01);
        let r = resolve(Layers {
            backend_flag: Some("bnb"),
            backend_env: Some("bnb-indicator".into()),
            gap_flag: Some(0.02),
            ..layers(&cfg)
        })
        .unwrap();
        assert_eq!((r.backend.as_str(), r.rel_gap), ("bnb", 0.02));
    }

    #[test]
    fn bad_values_are_rejected() {
        let cfg: Config = toml::from_str("[solver]\nrel_gap = 0.7\n").unwrap();
        assert!(resolve(layers(&cfg)).is_err());
        let cfg = Config::default();
        assert!(resolve(Layers { backend_flag: Some("cplex"), ..layers(&cfg) }).is_err());
        assert!(toml::from_str::<Config>("[solver]\nbogus = 1\n").is_err());
    }
}
