//! Settings resolution. Each subcommand declares its settings once; the
//! macro produces a clap argument struct of optional flags and a resolved
//! struct with defaults. Values are layered defaults < config file < flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

/// Bad flags or configuration. Exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

macro_rules! settings {
    (
        $(#[$am:meta])*
        $args:ident => $resolved:ident {
            $( $(#[$fm:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$am])*
        #[derive(Debug, Clone, Default, clap::Args, serde::Serialize)]
        pub struct $args {
            $(
                $(#[$fm])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        #[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
        #[serde(default)]
        pub struct $resolved {
            $( pub $field: $ty, )*
        }

        impl Default for $resolved {
            fn default() -> Self {
                $resolved { $( $field: $default, )* }
            }
        }
    };
}
pub(crate) use settings;

/// Flat JSON object read from `--config`.
pub fn load_file(path: Option<&Path>) -> anyhow::Result<Map<String, Value>> {
    let Some(path) = path else { return Ok(Map::new()) };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(usage(format!("config {} is not a JSON object", path.display()))),
        Err(e) => Err(usage(format!("config {}: {e}", path.display()))),
    }
}

/// Layer the file and the explicit flags over the defaults of `R`.
pub fn resolve<A: Serialize, R: Serialize + DeserializeOwned + Default>(
    file: &Map<String, Value>,
    flags: &A,
) -> anyhow::Result<R> {
    let Value::Object(mut merged) = serde_json::to_value(R::default())? else {
        unreachable!("settings serialize to objects")
    };
    for (k, v) in file {
        if merged.contains_key(k) {
            merged.insert(k.clone(), v.clone());
        }
    }
    if let Value::Object(f) = serde_json::to_value(flags)? {
        merged.extend(f);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("bad configuration: {e}")))
}

/// An empty path setting means "the conventional file under the output
/// directory".
pub fn or_out(p: &Path, out: &Path, name: &str) -> PathBuf {
    if p.as_os_str().is_empty() {
        out.join(name)
    } else {
        p.to_path_buf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    settings! {
        DemoArgs => Demo {
            epochs: usize = 10,
            lr: f64 = 0.5,
            name: String = "x".into(),
        }
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"epochs": 3, "lr": 0.1, "other": true}"#).unwrap();
        let flags = DemoArgs { lr: Some(0.2), ..Default::default() };
        let d: Demo = resolve(&file, &flags).unwrap();
        assert_eq!((d.epochs, d.lr, d.name.as_str()), (3, 0.2, "x"));
    }

    #[test]
    fn wrong_type_is_a_usage_error() {
        let file: Map<String, Value> = serde_json::from_str(r#"{"epochs": "many"}"#).unwrap();
        let err = resolve::<_, Demo>(&file, &DemoArgs::default()).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
