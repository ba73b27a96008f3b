use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::RunConfig;
use crate::CliError;

/// `# key=value` lines for every config field, keys sorted.
pub fn config_comment(cfg: &RunConfig) -> String {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let mut out = String::new();
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            let shown = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("# {k}={shown}\n"));
        }
    }
    out
}

/// Pretty JSON object with the config under `"config"` followed by the
/// fields of `body`.
pub fn json_with_config<T: Serialize>(cfg: &RunConfig, body: &T) -> Result<String, CliError> {
    let mut root = serde_json::Map::new();
    root.insert("config".into(), serde_json::to_value(cfg).map_err(CliError::internal)?);
    match serde_json::to_value(body).map_err(CliError::internal)? {
        serde_json::Value::Object(fields) => root.extend(fields),
        other => {
            root.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(root)).map_err(CliError::internal)?;
    s.push('\n');
    Ok(s)
}

/// CSV with the config echoed as leading comment lines.
pub fn csv_with_config<R, I>(cfg: &RunConfig, header: &[&str], rows: I) -> Result<String, CliError>
where
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::Writer::from_writer(config_comment(cfg).into_bytes());
    w.write_record(header).map_err(CliError::internal)?;
    for row in rows {
        w.write_record(row).map_err(CliError::internal)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(CliError::internal)
}

/// Writes to `path` through a temporary file in the same directory and a
/// rename, or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes()).map_err(CliError::Io)?;
            out.flush().map_err(CliError::Io)
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::Io)?;
            tmp.write_all(contents.as_bytes()).map_err(CliError::Io)?;
            tmp.as_file().sync_all().map_err(CliError::Io)?;
            tmp.persist(p).map_err(|e| CliError::Io(e.error))?;
            Ok(())
        }
    }
}
