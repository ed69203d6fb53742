//! Reporting and curve helpers for the acceptance gate in `tests/acceptance.rs`.

use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Collects criterion outcomes and prints each as soon as it is known.
pub struct Report {
    outcomes: Vec<Outcome>,
    started: Instant,
    last: Instant,
}

impl Default for Report {
    fn default() -> Self {
        Self::new()
    }
}

impl Report {
    pub fn new() -> Self {
        let now = Instant::now();
        Self {
            outcomes: Vec::new(),
            started: now,
            last: now,
        }
    }

    pub fn record(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        let detail = detail.into();
        let elapsed = self.last.elapsed().as_secs_f64();
        self.last = Instant::now();
        let mut out = std::io::stdout().lock();
        let _ = writeln!(
            out,
            "{} {name}: {detail} ({elapsed:.1}s)",
            if passed { "PASS" } else { "FAIL" }
        );
        let _ = out.flush();
        self.outcomes.push(Outcome {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    /// Indented supporting detail, printed ahead of the criterion line it backs.
    pub fn note(&self, text: impl AsRef<str>) {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "    {}", text.as_ref());
        let _ = out.flush();
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    /// Prints the summary; returns whether every criterion passed.
    pub fn summarize(&self) -> bool {
        let failed = self.failures();
        println!(
            "acceptance: {} criteria, {} passed, {} failed in {:.1}s",
            self.outcomes.len(),
            self.outcomes.len() - failed.len(),
            failed.len(),
            self.started.elapsed().as_secs_f64()
        );
        for f in &failed {
            println!("  failed: {}", f.name);
        }
        failed.is_empty()
    }
}

/// Interior local minima of `y` as `(index, depth)`, where depth is the drop
/// below the lower of the highest points reached on either side.
pub fn interior_minima(y: &[f64]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] < y[i - 1] && y[i] <= y[i + 1] {
            let left = y[..i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let right = y[i + 1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            out.push((i, left.min(right) - y[i]));
        }
    }
    out
}

/// Linearly interpolated abscissae where `y` changes sign between neighbours.
pub fn zero_crossings(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.windows(2)
        .zip(y.windows(2))
        .filter(|(_, w)| w[0] == 0.0 || (w[0] > 0.0) != (w[1] > 0.0))
        .map(|(xs, ys)| xs[0] + (xs[1] - xs[0]) * ys[0] / (ys[0] - ys[1]))
        .collect()
}
