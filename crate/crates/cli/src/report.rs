//! `report.md`: the human-facing record of a run.

use std::fmt::Write as _;
use std::time::Duration;

use sha2::{Digest, Sha256};

use crate::commands::Outcome;
use crate::config::RunConfig;

/// SHA-256 of the canonical resolved config.
pub fn config_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.canonical_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn render(cfg: &RunConfig, outcome: &Outcome, runtime: Duration) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ambigil {}\n", cfg.command.name());
    let _ = writeln!(s, "- ambigil {}, ambigil-core {}", env!("CARGO_PKG_VERSION"), ambigil_core::VERSION);
    let _ = writeln!(s, "- config sha256: `{}`", config_hash(cfg));
    match cfg.seed {
        Some(seed) => {
            let _ = writeln!(s, "- seed: {seed}");
        }
        None => s.push_str("- seed: none\n"),
    }
    let workers = match cfg.workers {
        0 => "all available cores".to_string(),
        1 => "1 (sequential engine)".to_string(),
        k => k.to_string(),
    };
    let _ = writeln!(s, "- workers: {workers}");
    let _ = writeln!(s, "- state cap: {}", cfg.state_cap);
    let _ = writeln!(s, "- runtime: {:.3} s\n", runtime.as_secs_f64());

    s.push_str("## Formulas\n\n");
    for a in &outcome.anchors {
        let _ = writeln!(s, "- {a}");
    }
    s.push_str("\n## Summary\n\n");
    for line in &outcome.summary {
        let _ = writeln!(s, "- {line}");
    }
    let _ = writeln!(
        s,
        "\n## Output\n\n`result.csv`: {} rows with columns {}.\n",
        outcome.table.len(),
        outcome.table.header.iter().map(|h| format!("`{h}`")).collect::<Vec<_>>().join(", ")
    );
    s.push_str("## Resolved config\n\n```json\n");
    s.push_str(&serde_json::to_string_pretty(cfg).expect("config serializes"));
    s.push_str("\n```\n");
    s
}
