//! Server configuration: a flat `key = value` file plus `EVOFORM_*`
//! environment overrides.
//!
//! ```text
//! port = 8080
//! seed = 42
//! depth = 3
//! population_size = 9
//! ```

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::Path;
use std::time::Duration;

use evoform_core::codec::CodecConfig;
use evoform_core::collaboration::DEFAULT_VISIBILITY_K;
use evoform_core::GaParams;
use ini::Ini;

use crate::error::ConfigError;

pub const ENV_PREFIX: &str = "EVOFORM_";

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub host: IpAddr,
    pub port: u16,
    /// Base seed; room `n` derives its member seeds from it.
    pub seed: u64,
    pub codec: CodecConfig,
    /// Defaults for rooms that do not override them.
    pub params: GaParams,
    pub visibility_k: usize,
    pub mesh: String,
    /// How long a long-poll request waits for the next event.
    pub poll_timeout: Duration,
    pub event_buffer: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            seed: 0,
            codec: CodecConfig::default(),
            params: GaParams::default(),
            visibility_k: DEFAULT_VISIBILITY_K,
            mesh: "sphere".into(),
            poll_timeout: Duration::from_secs(25),
            event_buffer: 1024,
        }
    }
}

impl ServiceConfig {
    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.host, self.port)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut config = Self::default();
        for (section, props) in ini.iter() {
            if let Some(name) = section {
                return Err(ConfigError::UnknownSection(name.to_string()));
            }
            for (key, value) in props.iter() {
                config.set(key, value)?;
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.display().to_string(), e.to_string()))?;
        Self::parse(&text)
    }

    /// Applies every `EVOFORM_<KEY>` pair; keys are matched case-insensitively.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (key, value) in vars {
            if let Some(name) = key.as_ref().strip_prefix(ENV_PREFIX) {
                self.set(&name.to_ascii_lowercase(), value.as_ref())?;
            }
        }
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let bad = || ConfigError::Value {
            key: key.to_string(),
            value: value.to_string(),
        };
        match key {
            "host" => self.host = value.parse().map_err(|_| bad())?,
            "port" => self.port = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "depth" => {
                self.codec =
                    CodecConfig::new(value.parse().map_err(|_| bad())?).map_err(|_| bad())?
            }
            "visibility_k" => self.visibility_k = value.parse().map_err(|_| bad())?,
            "mesh" => self.mesh = value.to_string(),
            "poll_timeout_ms" => {
                self.poll_timeout = Duration::from_millis(value.parse().map_err(|_| bad())?)
            }
            "event_buffer" => self.event_buffer = value.parse().map_err(|_| bad())?,
            k if GaParams::KEYS.contains(&k) => self.params.set(k, value).map_err(|_| bad())?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.visibility_k == 0 {
            return Err(ConfigError::Invalid("visibility_k must be positive".into()));
        }
        if self.event_buffer == 0 {
            return Err(ConfigError::Invalid("event_buffer must be positive".into()));
        }
        Ok(())
    }
}
