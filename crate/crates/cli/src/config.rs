//! Flat `key=value` pipeline configuration. A value given on the command line
//! wins over the config file, which wins over the built-in default. Every
//! resolved setting is recorded so it can be written next to the outputs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Every key a config file may set.
pub const KEYS: &[&str] = &[
    "format",
    "lowercase",
    "stem",
    "stopwords",
    "positional",
    "scale",
    "missing",
    "seed",
    "subsample",
    "lr",
    "epochs",
    "k1",
    "b",
    "lambda",
    "k",
    "sdm",
    "window",
    "metric_k",
    "epsilon",
    "top_k",
    "depth",
    "threads",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{source}:{}: expected key=value", i + 1))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                bail!("{source}:{}: unknown config key `{key}`", i + 1);
            }
            if values
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                bail!("{source}:{}: key `{key}` set twice", i + 1);
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves settings for one command and remembers what it resolved.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    resolved: Vec<(&'static str, String)>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile) -> Self {
        Resolver {
            file,
            resolved: Vec::new(),
        }
    }

    fn lookup<T>(&self, key: &'static str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        debug_assert!(KEYS.contains(&key), "unregistered key {key}");
        self.file
            .raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("config key `{key}`: invalid value `{v}`: {e}"))
            })
            .transpose()
    }

    pub fn get<T>(&mut self, key: &'static str, cli: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match cli {
            Some(v) => v,
            None => self.lookup(key)?.unwrap_or(default),
        };
        self.resolved.push((key, value.to_string()));
        Ok(value)
    }

    /// A switch that can only be turned on from the command line.
    pub fn flag(&mut self, key: &'static str, cli: bool, default: bool) -> Result<bool> {
        self.get(key, cli.then_some(true), default)
    }

    /// A setting without a default; unset values are echoed as `none`.
    pub fn optional<T>(&mut self, key: &'static str, cli: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match cli {
            Some(v) => Some(v),
            None => self.lookup(key)?,
        };
        let shown = value.as_ref().map_or("none".to_string(), T::to_string);
        self.resolved.push((key, shown));
        Ok(value)
    }

    pub fn render(&self) -> String {
        self.resolved
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())
            .with_context(|| format!("cannot write {}", path.display()))
    }

    /// Writes the resolved settings to `<out>.config.txt`.
    pub fn write_beside(&self, out: &Path) -> Result<()> {
        let mut name = out.as_os_str().to_owned();
        name.push(".config.txt");
        self.write(Path::new(&name))
    }
}
