use std::io::Write;
use std::path::Path;

use anyhow::Context;
use mzqkd::config::RunConfig;
use serde::Serialize;

/// Wraps a result with the resolved configuration, both in SI and as given.
pub fn envelope<T: Serialize>(cfg: &RunConfig, result: &T) -> String {
    let doc = serde_json::json!({
        "params": cfg.link_params(),
        "interferometer": cfg.mz_config(),
        "run": cfg,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("output serializes");
    text.push('\n');
    text
}

/// Writes to stdout, or atomically replaces `path`.
pub fn write_output(path: Option<&str>, body: &str) -> anyhow::Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(body.as_bytes())?;
        return Ok(out.flush()?);
    };
    let path = Path::new(path);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(body.as_bytes())?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
