//! Command templates for the external build and conversion adapters.

use std::process::Command;

/// Single-quotes `s` for POSIX `sh`.
pub fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

/// Replaces each `{key}` in `template` with the shell-quoted value.
pub fn render_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), &quote(v));
    }
    out
}

/// Runs `command` under `sh -c`; returns success and stdout followed by stderr.
pub fn run(command: &str) -> std::io::Result<(bool, String)> {
    let out = Command::new("sh").arg("-c").arg(command).output()?;
    let mut log = String::from_utf8_lossy(&out.stdout).into_owned();
    log.push_str(&String::from_utf8_lossy(&out.stderr));
    Ok((out.status.success(), log))
}
