use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use seqsearch::output::{to_json, Artifact, RunManifest};
use seqsearch::Distribution;

use crate::args::Global;
use crate::CliError;

pub fn manifest(command: &str, parameters: serde_json::Value, global: &Global) -> RunManifest {
    let mut m = RunManifest::new(command, parameters);
    m.parallel &= !global.sequential;
    m
}

pub fn with_dist(mut m: RunManifest, d: &Distribution) -> RunManifest {
    m.distribution = serde_json::to_value(d).ok();
    m
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Standalone manifest next to `out`, the only place a timestamp appears.
fn write_manifest(out: &Path, mut m: RunManifest, extra: &[PathBuf]) -> Result<(), CliError> {
    m.outputs = std::iter::once(out.to_path_buf())
        .chain(extra.iter().cloned())
        .map(|p| p.display().to_string())
        .collect();
    m.created_unix = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    let path = sidecar(out);
    std::fs::write(&path, to_json(&m)?).map_err(|e| io_err(&path, e))
}

/// Prints the summary and writes the JSON artifact (manifest plus result) to
/// `--out` or stdout. With stdout output the summary goes to stderr so that
/// stdout stays machine-readable.
pub fn json<T: Serialize>(global: &Global, mut m: RunManifest, result: &T, summary: &str) -> Result<(), CliError> {
    if let Some(out) = &global.out {
        m.outputs = vec![out.display().to_string()];
    }
    let text = to_json(&Artifact {
        manifest: &m,
        result,
    })?;
    match &global.out {
        Some(out) => {
            std::fs::write(out, text).map_err(|e| io_err(out, e))?;
            write_manifest(out, m, &[])?;
            print!("{summary}");
        }
        None => {
            eprint!("{summary}");
            print!("{text}");
        }
    }
    Ok(())
}

/// Writes CSV produced by `body` to `--out` or stdout. `sidecar_json` is
/// written next to the CSV when an output path is given.
pub fn csv<F, S>(global: &Global, m: RunManifest, body: F, sidecar_json: Option<&S>) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> seqsearch::Result<()>,
    S: Serialize,
{
    match &global.out {
        Some(out) => {
            let mut buf = Vec::new();
            body(&mut buf)?;
            std::fs::write(out, buf).map_err(|e| io_err(out, e))?;
            let mut extra = Vec::new();
            if let Some(s) = sidecar_json {
                let p = out.with_extension("json");
                let mut m2 = m.clone();
                m2.outputs = vec![out.display().to_string(), p.display().to_string()];
                std::fs::write(&p, to_json(&Artifact { manifest: &m2, result: s })?).map_err(|e| io_err(&p, e))?;
                extra.push(p);
            }
            write_manifest(out, m, &extra)?;
            println!("wrote {}", out.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush().map_err(|e| io_err(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}
