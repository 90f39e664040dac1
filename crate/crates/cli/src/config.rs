//! Key-value config files.
//!
//! One `key = value` per line; `#` starts a comment. Keys are the long flag
//! names of the subcommand (`max-steps` or `max_steps`). Boolean flags take
//! `true` or `false`. Values from the file are applied after the command line,
//! so they take precedence.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Translates config `text` into command-line arguments.
pub fn config_args(text: &str) -> Result<Vec<OsString>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!("line {}: expected 'key = value', got '{raw}'", i + 1)));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(ConfigError(format!("line {}: invalid key '{key}'", i + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Appends the contents of every `--config FILE` (or `--config=FILE`) found in
/// `argv` to the end of `argv`.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut files = Vec::new();
    let mut it = argv.iter().peekable();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            if let Some(f) = it.peek() {
                files.push(f.to_string_lossy().into_owned());
            }
        } else if let Some(f) = s.strip_prefix("--config=") {
            files.push(f.to_string());
        }
    }
    let mut out = argv;
    for f in files {
        let text = fs::read_to_string(Path::new(&f)).map_err(|e| ConfigError(format!("reading config {f}: {e}")))?;
        out.extend(config_args(&text)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_flags_and_comments() {
        let args = config_args("# study\neps = 1,0.5\nmax_steps=100 # cap\nforce = true\nno-timing = false\n\n").unwrap();
        let args: Vec<String> = args.into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(args, ["--eps", "1,0.5", "--max-steps", "100", "--force"]);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(config_args("eps 1").is_err());
        assert!(config_args("= 1").is_err());
    }
}
