use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that overrides the port of `listen`.
pub const PORT_ENV: &str = "SNUGGLE_PORT";

const BUNDLED_RESOURCES: &str = include_str!("../config/resources.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("resource list is empty")]
    NoResources,
    #[error("invalid {PORT_ENV}: {0}")]
    Port(String),
    #[error("admin token must not be empty")]
    EmptyToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Fresh card-order seed per session.
    #[default]
    Random,
    /// Every session uses the same seed.
    Fixed(u64),
}

impl SeedPolicy {
    pub fn next_seed(self) -> u64 {
        match self {
            SeedPolicy::Random => rand::random(),
            SeedPolicy::Fixed(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub label: String,
    pub url: String,
    pub description: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub admin_token: String,
    #[serde(default)]
    pub resources_path: Option<PathBuf>,
    /// `"bundled"` or a path to a seed file, imported when the store is empty.
    #[serde(default)]
    pub seed_path: Option<String>,
    #[serde(default)]
    pub rng_seed_policy: SeedPolicy,
    #[serde(default)]
    pub cors_origins: Vec<String>,
}

impl Config {
    /// Reads a TOML config. Relative paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.data_dir = base.join(&config.data_dir);
        config.resources_path = config.resources_path.map(|p| base.join(p));
        config.seed_path = config
            .seed_path
            .map(|s| if s == "bundled" { s } else { base.join(s).to_string_lossy().into_owned() });
        config.apply_env(std::env::var(PORT_ENV).ok().as_deref())?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if config.admin_token.trim().is_empty() {
            return Err(ConfigError::EmptyToken);
        }
        Ok(config)
    }

    pub fn apply_env(&mut self, port: Option<&str>) -> Result<(), ConfigError> {
        if let Some(port) = port {
            let port: u16 = port.parse().map_err(|_| ConfigError::Port(port.to_string()))?;
            self.listen.set_port(port);
        }
        Ok(())
    }

    /// Loads the resource list; an empty list is a startup error.
    pub fn resources(&self) -> Result<Vec<Resource>, ConfigError> {
        let text = match &self.resources_path {
            Some(p) => fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?,
            None => BUNDLED_RESOURCES.to_string(),
        };
        parse_resources(&text)
    }
}

pub fn parse_resources(text: &str) -> Result<Vec<Resource>, ConfigError> {
    if text.trim().is_empty() {
        return Err(ConfigError::NoResources);
    }
    let list: Vec<Resource> = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    if list.is_empty() {
        return Err(ConfigError::NoResources);
    }
    Ok(list)
}

pub fn bundled_resources() -> Vec<Resource> {
    parse_resources(BUNDLED_RESOURCES).expect("bundled resource list is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        listen = "127.0.0.1:8080"
        data_dir = "data"
        admin_token = "t"
    "#;

    #[test]
    fn parses_minimal_and_env_port() {
        let mut c = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(c.rng_seed_policy, SeedPolicy::Random);
        c.apply_env(Some("9090")).unwrap();
        assert_eq!(c.listen.port(), 9090);
        assert!(matches!(c.apply_env(Some("http")), Err(ConfigError::Port(_))));
    }

    #[test]
    fn seed_policy_forms() {
        let c = Config::from_toml(&format!("{MINIMAL}\nrng_seed_policy = {{ fixed = 42 }}")).unwrap();
        assert_eq!(c.rng_seed_policy, SeedPolicy::Fixed(42));
        assert_eq!(c.rng_seed_policy.next_seed(), 42);
    }

    #[test]
    fn bad_configs() {
        assert!(matches!(
            Config::from_toml("listen = \"127.0.0.1:1\"\ndata_dir = \"d\"\nadmin_token = \" \""),
            Err(ConfigError::EmptyToken)
        ));
        assert!(matches!(Config::from_toml(&format!("{MINIMAL}\nbogus = 1")), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn resources_fail_fast_when_empty() {
        assert!(matches!(parse_resources(""), Err(ConfigError::NoResources)));
        assert!(matches!(parse_resources("[]"), Err(ConfigError::NoResources)));
        let bundled = bundled_resources();
        assert!(!bundled.is_empty());
        assert_eq!(bundled[0].label, "Cyber Civil Rights Initiative Helpline");
    }

    #[test]
    fn example_config_parses() {
        let c = Config::from_toml(include_str!("../config/snuggle.toml")).unwrap();
        assert_eq!(c.seed_path.as_deref(), Some("bundled"));
    }
}
