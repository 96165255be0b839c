//! `key=value` config files. Each key is a long flag name of the subcommand;
//! the entries are spliced in front of the command-line flags so explicit
//! flags win. Run manifests use the same format and can be fed back in.

use std::path::Path;

use crate::CliError;

/// Keys that describe a manifest rather than a flag.
const MANIFEST_KEYS: &[&str] = &["command", "version"];

pub struct ConfigEntry {
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<ConfigEntry>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}:{}: expected key=value, found {line:?}", origin.display(), i + 1))
        })?;
        entries.push(ConfigEntry {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

/// Rewrites `argv` so that the entries of any `--config FILE` appear as flags
/// directly after the subcommand name.
pub fn expand_config_args(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let (path, consumed) = match argv[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (
            argv.get(pos + 1)
                .cloned()
                .ok_or_else(|| CliError::Usage("--config needs a file argument".into()))?,
            2,
        ),
    };
    let path_ref = Path::new(&path);
    let text = std::fs::read_to_string(path_ref)
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let entries = parse_config(&text, path_ref)?;

    let mut rest: Vec<String> = argv.clone();
    rest.drain(pos..pos + consumed);
    let command = rest.get(1).cloned().unwrap_or_default();

    let mut injected = Vec::new();
    for e in entries {
        if MANIFEST_KEYS.contains(&e.key.as_str()) {
            if e.key == "command" && e.value != command {
                return Err(CliError::Usage(format!(
                    "config {path} is for command {:?}, not {command:?}",
                    e.value
                )));
            }
            continue;
        }
        match e.value.as_str() {
            "true" => injected.push(format!("--{}", e.key)),
            "false" => {}
            _ => {
                injected.push(format!("--{}", e.key));
                injected.push(e.value);
            }
        }
    }
    let split = 2.min(rest.len());
    let mut out: Vec<String> = rest[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}
