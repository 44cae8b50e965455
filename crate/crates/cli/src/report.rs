use std::fmt::Write as _;

use finsler_lab::check::{CheckRecord, Verdict};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: String,
    pub records: Vec<CheckRecord>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub unknown: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub section: String,
    pub seconds: f64,
}

/// Output of every command. Byte-identical across reruns with the same
/// input, seed and version unless timings are requested.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub spec_hash: String,
    pub dim: usize,
    pub seed: u64,
    pub samples: usize,
    pub tolerance_scale: f64,
    pub summary: Summary,
    pub sections: Vec<Section>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub data: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        spec_hash: String,
        dim: usize,
        seed: u64,
        samples: usize,
        tolerance_scale: f64,
    ) -> Report {
        Report {
            tool: "finsler-lab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            spec_hash,
            dim,
            seed,
            samples,
            tolerance_scale,
            summary: Summary::default(),
            sections: Vec::new(),
            data: serde_json::Value::Null,
            timings: None,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, records: Vec<CheckRecord>) {
        for r in &records {
            self.summary.checks += 1;
            match r.verdict {
                Verdict::Pass => self.summary.passed += 1,
                Verdict::Fail => self.summary.failed += 1,
                Verdict::Unknown => self.summary.unknown += 1,
            }
        }
        self.sections.push(Section { name: name.into(), records });
    }

    pub fn all_passed(&self) -> bool {
        self.summary.passed == self.summary.checks
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {}  spec {}",
            self.tool,
            self.version,
            self.command,
            &self.spec_hash[..12.min(self.spec_hash.len())]
        );
        let _ = writeln!(
            s,
            "dim {}  seed {}  samples {}  tol x{}",
            self.dim, self.seed, self.samples, self.tolerance_scale
        );
        for sec in &self.sections {
            let _ = writeln!(s, "\n[{}]", sec.name);
            for r in &sec.records {
                let _ = writeln!(
                    s,
                    "  {:<7} {}  (residual {:.3e}, tol {:.1e}, {} pts; {})",
                    r.verdict.to_string().to_uppercase(),
                    r.name,
                    r.max_residual,
                    r.tolerance,
                    r.points,
                    r.anchor
                );
            }
        }
        if !self.data.is_null() {
            let _ = writeln!(s, "\n{}", serde_json::to_string_pretty(&self.data).expect("data serializes"));
        }
        if let Some(t) = &self.timings {
            let _ = writeln!(s);
            for t in t {
                let _ = writeln!(s, "  {:<12} {:.3} s", t.section, t.seconds);
            }
        }
        let _ = writeln!(
            s,
            "\n{} checks: {} passed, {} failed, {} unknown",
            self.summary.checks, self.summary.passed, self.summary.failed, self.summary.unknown
        );
        s
    }
}
