use std::fmt::Write as _;
use std::time::Duration;

/// Outcome of one reconstruction run.
///
/// `objective_trace[0]` is the objective at the starting point, so the trace
/// has `iterations + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub method: String,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    /// `||A f - y||` at the returned estimate.
    pub data_residual: f64,
    /// `||V f||` at the returned estimate, for flow-constrained runs.
    pub flow_residual: Option<f64>,
    pub wall_time: Duration,
    pub converged: bool,
    /// Solver-specific diagnostics, emitted verbatim in the summary block.
    pub extra: Vec<(String, String)>,
}

impl SolverReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }

    /// Equality ignoring wall time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self {
            wall_time: Duration::ZERO,
            ..r.clone()
        };
        strip(self) == strip(other)
    }

    /// One `iter <k> <objective>` line per trace entry, then a `[summary]`
    /// block of `key=value` lines.
    pub fn to_log(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.objective_trace.iter().enumerate() {
            let _ = writeln!(s, "iter {k} {v:.17e}");
        }
        s.push_str("[summary]\n");
        for (k, v) in self.summary() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn summary(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("method".to_string(), self.method.clone()),
            ("iterations".to_string(), self.iterations.to_string()),
            ("objective".to_string(), format!("{:.17e}", self.final_objective())),
            ("data_residual".to_string(), format!("{:.17e}", self.data_residual)),
        ];
        if let Some(f) = self.flow_residual {
            kv.push(("flow_residual".to_string(), format!("{f:.17e}")));
        }
        kv.push(("converged".to_string(), self.converged.to_string()));
        kv.push(("wall_time_s".to_string(), format!("{:.3}", self.wall_time.as_secs_f64())));
        kv.extend(self.extra.iter().cloned());
        kv
    }
}

/// Reads the `key=value` pairs following `[summary]` in a report log.
pub fn parse_summary(log: &str) -> Vec<(String, String)> {
    log.lines()
        .skip_while(|l| l.trim() != "[summary]")
        .skip(1)
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

/// Monotonic timer that degrades to zero on targets without a clock.
pub(crate) struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}
