use std::fmt::Write as _;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::constraints::PhysicsConstraints;
use super::context::ContextVector;
use crate::sensorgen::{GenerativeModel, SensorKind, CATEGORY_COUNT};

/// Per-category decision counts from one regeneration cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CycleOutcome {
    pub seen: Vec<u64>,
    pub transmitted: Vec<u64>,
}

impl CycleOutcome {
    pub fn new() -> Self {
        Self {
            seen: vec![0; CATEGORY_COUNT],
            transmitted: vec![0; CATEGORY_COUNT],
        }
    }

    pub fn record(&mut self, kind: SensorKind, transmitted: bool) {
        self.seen[kind.index()] += 1;
        if transmitted {
            self.transmitted[kind.index()] += 1;
        }
    }
}

pub struct RuleRequest<'a> {
    pub context: &'a ContextVector,
    /// Oldest first.
    pub history: &'a [CycleOutcome],
    pub constraints: &'a PhysicsConstraints,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

impl RuleRequest<'_> {
    /// The request document sent to external providers.
    pub fn prompt(&self) -> String {
        let c = self.context;
        let mut out = String::new();
        out.push_str("[context]\n");
        let _ = writeln!(out, "s = {}", join(&c.s));
        let _ = writeln!(out, "e = {}", join(&c.e));
        let _ = writeln!(out, "h = {}", join(&c.h));
        let _ = writeln!(out, "p = {}", join(&c.p));
        let _ = writeln!(out, "combined = {}", join(&c.combined));
        out.push_str("\n[constraints]\n");
        for k in SensorKind::ALL {
            let b = self.constraints.get(k);
            let _ = writeln!(
                out,
                "{} unit={} min={} max={} max_rate={} required_transmit={}",
                k.name(),
                k.unit(),
                b.min,
                b.max,
                b.max_rate,
                b.required_transmit
            );
        }
        out.push_str("\n[history]\n");
        for (i, h) in self.history.iter().enumerate() {
            let cells: Vec<String> = SensorKind::ALL
                .iter()
                .filter(|k| h.seen[k.index()] > 0)
                .map(|k| format!("{}={}/{}", k.name(), h.transmitted[k.index()], h.seen[k.index()]))
                .collect();
            let _ = writeln!(out, "cycle -{}: {}", self.history.len() - i, cells.join(" "));
        }
        out.push_str(
            "\n[grammar]\n\
             one rule per line: [id:] WHEN <field><op><literal> [AND ...] THEN <action>\n\
             fields: category location value zscore rate hour gap cross\n\
             comparators: = < > <= >=\n\
             actions: transmit drop aggregate(<n>) escalate\n",
        );
        out
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider timed out after {0:?}")]
    Timeout(Duration),
    #[error("provider i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("provider exited with {0}")]
    Exit(String),
    #[error("http: {0}")]
    Http(String),
}

/// Maps a request document to rule text.
pub trait RuleProvider: Send + Sync {
    fn name(&self) -> &str;
    fn respond(&self, req: &RuleRequest<'_>) -> Result<String, ProviderError>;
}

/// Parameters of the built-in rule policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefaultPolicy {
    /// Threshold at zero context pressure.
    pub z_max: f64,
    pub z_min: f64,
    /// Threshold decrease per unit of pressure.
    pub pressure_gain: f64,
    /// Threshold increase for categories transmitting too often.
    pub noisy_bump: f64,
    pub noisy_fraction: f64,
    /// Below this |z| a reading counts as quiet.
    pub quiet_z: f64,
    pub quiet_variance: f64,
    pub aggregate_n: u32,
    pub cross_z: f64,
}

impl Default for DefaultPolicy {
    fn default() -> Self {
        Self {
            z_max: 4.0,
            z_min: 3.0,
            pressure_gain: 1.5,
            noisy_bump: 0.5,
            noisy_fraction: 0.05,
            quiet_z: 1.0,
            quiet_variance: 1.5,
            aggregate_n: 8,
            cross_z: 2.0,
        }
    }
}

impl DefaultPolicy {
    /// `max(z_min, z_max − gain·clip(pressure, 0, 1))`.
    pub fn base_threshold(&self, ctx: &ContextVector) -> f64 {
        (self.z_max - self.pressure_gain * ctx.pressure().clamp(0.0, 1.0)).max(self.z_min)
    }

    fn noisy(&self, kind: SensorKind, history: &[CycleOutcome]) -> bool {
        let (seen, sent) = history.iter().fold((0u64, 0u64), |(s, t), h| {
            (s + h.seen[kind.index()], t + h.transmitted[kind.index()])
        });
        seen > 0 && sent as f64 / seen as f64 > self.noisy_fraction
    }

    pub fn threshold(&self, kind: SensorKind, req: &RuleRequest<'_>) -> f64 {
        let base = self.base_threshold(req.context);
        if self.noisy(kind, req.history) {
            base + self.noisy_bump
        } else {
            base
        }
    }

    pub fn quiet(&self, kind: SensorKind, ctx: &ContextVector) -> bool {
        ctx.s[kind.index()].abs() < self.quiet_z && ctx.family_variance(kind.family()) < self.quiet_variance
    }

    pub fn render(&self, req: &RuleRequest<'_>) -> String {
        let mut out = String::new();
        for kind in SensorKind::ALL {
            let name = kind.name();
            let bounds = req.constraints.get(kind);
            if bounds.required_transmit {
                let _ = writeln!(out, "alert-{name}: WHEN category={name} AND value>={} THEN escalate", bounds.max);
                let _ = writeln!(out, "floor-{name}: WHEN category={name} THEN transmit");
                continue;
            }
            if kind.is_binary() {
                let _ = writeln!(out, "quiet-{name}: WHEN category={name} THEN aggregate({})", self.aggregate_n);
                continue;
            }
            let z0 = self.threshold(kind, req);
            let _ = writeln!(out, "spike-{name}: WHEN category={name} AND zscore>{z0} THEN transmit");
            let _ = writeln!(
                out,
                "cross-{name}: WHEN category={name} AND cross>=1 AND zscore>{} THEN transmit",
                self.cross_z
            );
            if matches!(kind.model(), GenerativeModel::GaussianDiurnal | GenerativeModel::GaussianStationary) {
                let _ = writeln!(out, "flat-{name}: WHEN category={name} AND rate=0 THEN transmit");
            }
            if self.quiet(kind, req.context) {
                let _ = writeln!(
                    out,
                    "quiet-{name}: WHEN category={name} AND zscore<{} THEN aggregate({})",
                    self.quiet_z, self.aggregate_n
                );
            }
        }
        out
    }
}

/// Rule generation from a fixed policy table; a pure function of the request.
#[derive(Debug, Clone, Default)]
pub struct DeterministicProvider {
    pub policy: DefaultPolicy,
}

impl RuleProvider for DeterministicProvider {
    fn name(&self) -> &str {
        "deterministic"
    }

    fn respond(&self, req: &RuleRequest<'_>) -> Result<String, ProviderError> {
        Ok(self.policy.render(req))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case")]
pub enum ExternalTransport {
    /// Prompt on stdin, rules on stdout.
    Subprocess { command: String, #[serde(default)] args: Vec<String> },
    /// Prompt as a POST body, rules as the response body.
    Http { url: String },
}

/// A provider behind a text request/response protocol.
#[derive(Debug, Clone)]
pub struct ExternalProvider {
    pub name: String,
    pub transport: ExternalTransport,
    pub timeout: Duration,
}

impl ExternalProvider {
    fn run_subprocess(&self, command: &str, args: &[String], prompt: &str) -> Result<String, ProviderError> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let body = prompt.to_string();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(body.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = std::thread::spawn(move || {
            let mut s = String::new();
            stdout.read_to_string(&mut s).map(|_| s)
        });
        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if start.elapsed() >= self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ProviderError::Timeout(self.timeout));
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        let _ = writer.join();
        let text = reader
            .join()
            .map_err(|_| ProviderError::Exit("reader thread panicked".into()))??;
        if !status.success() {
            return Err(ProviderError::Exit(status.to_string()));
        }
        Ok(text)
    }

    fn run_http(&self, url: &str, prompt: &str) -> Result<String, ProviderError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut resp = agent
            .post(url)
            .content_type("text/plain; charset=utf-8")
            .send(prompt)
            .map_err(|e| ProviderError::Http(e.to_string()))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Http(e.to_string()))
    }
}

impl RuleProvider for ExternalProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn respond(&self, req: &RuleRequest<'_>) -> Result<String, ProviderError> {
        let prompt = req.prompt();
        match &self.transport {
            ExternalTransport::Subprocess { command, args } => self.run_subprocess(command, args, &prompt),
            ExternalTransport::Http { url } => self.run_http(url, &prompt),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::context::{ContextWeights, CONTEXT_DIM};

    fn quiet_ctx() -> ContextVector {
        let z = vec![0.0; CONTEXT_DIM];
        ContextVector::from_parts(z.clone(), z.clone(), z.clone(), z, &ContextWeights::default())
    }

    #[test]
    fn threshold_schedule() {
        let p = DefaultPolicy::default();
        assert_eq!(p.base_threshold(&quiet_ctx()), 4.0);
        let mut s = vec![0.0; CONTEXT_DIM];
        s[0] = 10.0;
        let z = vec![0.0; CONTEXT_DIM];
        let hot = ContextVector::from_parts(s, z.clone(), z.clone(), z, &ContextWeights::default());
        assert_eq!(p.base_threshold(&hot), 3.0);
    }

    #[test]
    fn prompt_has_all_blocks() {
        let ctx = quiet_ctx();
        let c = PhysicsConstraints::default();
        let history = [CycleOutcome::new()];
        let req = RuleRequest {
            context: &ctx,
            history: &history,
            constraints: &c,
        };
        let p = req.prompt();
        for block in ["[context]", "[constraints]", "[history]", "[grammar]", "temperature unit=degC"] {
            assert!(p.contains(block), "{block}");
        }
    }

    #[test]
    fn noisy_categories_get_higher_threshold() {
        let ctx = quiet_ctx();
        let c = PhysicsConstraints::default();
        let mut h = CycleOutcome::new();
        for i in 0..100 {
            h.record(SensorKind::Humidity, i < 10);
            h.record(SensorKind::Temperature, i < 2);
        }
        let history = [h];
        let req = RuleRequest {
            context: &ctx,
            history: &history,
            constraints: &c,
        };
        let p = DefaultPolicy::default();
        assert_eq!(p.threshold(SensorKind::Humidity, &req), 4.5);
        assert_eq!(p.threshold(SensorKind::Temperature, &req), 4.0);
    }
}
