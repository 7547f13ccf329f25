//! Batch experiments: strict JSON configs, fixed output filenames, and a
//! manifest with inputs, versions, timings and output checksums.

mod commands;
mod params;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Error;

pub use params::*;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ERROR_FILE: &str = "error.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveRadial,
    SolvePlanar,
    BuildAnsatz,
    AnsatzStudy,
    Excess,
    Density,
    Nodal,
    Levelset,
    Linops,
    VerifyIdentities,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveRadial => "solve-radial",
            Command::SolvePlanar => "solve-planar",
            Command::BuildAnsatz => "build-ansatz",
            Command::AnsatzStudy => "ansatz-study",
            Command::Excess => "excess",
            Command::Density => "density",
            Command::Nodal => "nodal",
            Command::Levelset => "levelset",
            Command::Linops => "linops",
            Command::VerifyIdentities => "verify-identities",
        }
    }
}

/// The on-disk config. `params` is checked against the schema of the
/// invoked command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug)]
pub enum ExperimentError {
    /// Unreadable or schema-violating config, or inputs outside the
    /// preconditions of an operation.
    Validation(Vec<FieldError>),
    /// A numerical method failed.
    Numerical(Error),
    /// Writing outputs failed.
    Output(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Validation(_) => 2,
            ExperimentError::Numerical(_) => 3,
            ExperimentError::Output(_) => 1,
        }
    }

    /// `{"error": {...}}` with the kind, and either field-level messages or
    /// the originating module error.
    pub fn to_json(&self) -> Value {
        let body = match self {
            ExperimentError::Validation(errors) => serde_json::json!({
                "kind": "validation",
                "errors": errors,
            }),
            ExperimentError::Numerical(e) => {
                let mut v = serde_json::json!({
                    "kind": "numerical",
                    "code": e.code(),
                    "message": e.to_string(),
                });
                if let Error::NotConverged { report } | Error::Stagnation { report, .. } = e {
                    let mut r = serde_json::to_value(report).unwrap_or(Value::Null);
                    strip_wall_time(&mut r);
                    v["report"] = r;
                }
                v
            }
            ExperimentError::Output(m) => serde_json::json!({ "kind": "output", "message": m }),
        };
        serde_json::json!({ "error": body })
    }
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentError::Validation(errors) => {
                let parts: Vec<String> = errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect();
                write!(f, "invalid config: {}", parts.join("; "))
            }
            ExperimentError::Numerical(e) => write!(f, "numerical failure: {e}"),
            ExperimentError::Output(m) => write!(f, "output failure: {m}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<Error> for ExperimentError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => ExperimentError::Output(e.to_string()),
            e if e.is_precondition() => ExperimentError::Validation(vec![FieldError::new("params", e.to_string())]),
            e => ExperimentError::Numerical(e),
        }
    }
}

pub type ExperimentResult<T> = std::result::Result<T, ExperimentError>;

fn strip_wall_time(v: &mut Value) {
    if let Some(m) = v.as_object_mut() {
        m.remove("wall_time_s");
    }
}

/// Reads and parses a config file; errors carry the JSON path of the
/// offending field.
pub fn load_config(path: &Path) -> ExperimentResult<(ExperimentConfig, Vec<u8>)> {
    let bytes = fs::read(path)
        .map_err(|e| ExperimentError::Validation(vec![FieldError::new("config", format!("{}: {e}", path.display()))]))?;
    let config = parse_strict(&mut serde_json::Deserializer::from_slice(&bytes), "")?;
    Ok((config, bytes))
}

pub(crate) fn parse_strict<'de, T, D>(de: D, prefix: &str) -> ExperimentResult<T>
where
    T: Deserialize<'de>,
    D: serde::Deserializer<'de>,
    D::Error: std::fmt::Display,
{
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = match (prefix.is_empty(), path.as_str()) {
            (true, p) => p.to_string(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        ExperimentError::Validation(vec![FieldError::new(field, e.into_inner().to_string())])
    })
}

/// Collects the files written by a run together with named stage timings.
pub struct RunContext {
    out: PathBuf,
    seed: u64,
    outputs: Vec<String>,
    timings: Vec<(String, f64)>,
    /// Short human-readable lines for stdout.
    pub messages: Vec<String>,
}

impl RunContext {
    pub fn new(out: impl Into<PathBuf>, seed: u64) -> ExperimentResult<Self> {
        let out = out.into();
        fs::create_dir_all(&out).map_err(|e| ExperimentError::Output(format!("{}: {e}", out.display())))?;
        Ok(Self { out, seed, outputs: vec![], timings: vec![], messages: vec![] })
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn timings(&self) -> &[(String, f64)] {
        &self.timings
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        self.timings.push((name.to_string(), t.elapsed().as_secs_f64()));
        v
    }

    pub fn say(&mut self, line: impl Into<String>) {
        self.messages.push(line.into());
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, name: &str) {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> crate::Result<()>,
    ) -> ExperimentResult<()> {
        let path = self.out.join(name);
        let file = fs::File::create(&path).map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))?;
        w.flush().map_err(|e| ExperimentError::Output(format!("{}: {e}", path.display())))?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> ExperimentResult<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub status: String,
    pub config_path: Option<String>,
    pub config_sha256: Option<String>,
    pub config: Value,
    pub seed: u64,
    pub threads: usize,
    pub versions: Value,
    pub started_at: String,
    pub finished_at: String,
    pub timings_s: Vec<(String, f64)>,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> Value {
    serde_json::json!({
        "vortexlab": env!("CARGO_PKG_VERSION"),
        "snapshot_format": String::from_utf8_lossy(crate::fields::snapshot::MAGIC),
        "manifest_format": 1,
    })
}

impl Manifest {
    /// Checksums every recorded output.
    pub fn outputs_of(ctx: &RunContext) -> ExperimentResult<Vec<OutputEntry>> {
        ctx.outputs
            .iter()
            .map(|name| {
                let bytes = fs::read(ctx.out.join(name)).map_err(|e| ExperimentError::Output(format!("{name}: {e}")))?;
                Ok(OutputEntry { file: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
            })
            .collect()
    }

    pub fn write(&self, out: &Path) -> ExperimentResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| ExperimentError::Output(e.to_string()))?;
        bytes.push(b'\n');
        fs::write(out.join(MANIFEST_FILE), bytes).map_err(|e| ExperimentError::Output(e.to_string()))
    }
}

/// Validates `params` for `command` and executes it, writing outputs
/// through `ctx`. Returns the validated params in canonical form.
pub fn execute(command: Command, params: &Value, ctx: &mut RunContext) -> ExperimentResult<Value> {
    macro_rules! run {
        ($ty:ty, $f:path) => {{
            let p: $ty = parse_strict(params, "params")?;
            let errors = p.validate();
            if !errors.is_empty() {
                return Err(ExperimentError::Validation(errors));
            }
            $f(&p, ctx)?;
            serde_json::to_value(&p).map_err(|e| ExperimentError::Output(e.to_string()))
        }};
    }
    match command {
        Command::SolveRadial => run!(SolveRadialParams, commands::solve_radial),
        Command::SolvePlanar => run!(SolvePlanarParams, commands::solve_planar),
        Command::BuildAnsatz => run!(BuildAnsatzParams, commands::build_ansatz),
        Command::AnsatzStudy => run!(AnsatzStudyParams, commands::ansatz_study),
        Command::Excess => run!(ExcessParams, commands::excess_cmd),
        Command::Density => run!(DensityParams, commands::density),
        Command::Nodal => run!(NodalParams, commands::nodal),
        Command::Levelset => run!(LevelsetParams, commands::levelset),
        Command::Linops => run!(LinopsParams, commands::linops),
        Command::VerifyIdentities => run!(VerifyParams, commands::verify_identities),
    }
}

/// Resolves the thread count: the flag, then `VORTEXLAB_THREADS`, then
/// the number of available cores.
pub fn resolve_threads(flag: Option<usize>) -> ExperimentResult<usize> {
    let bad = |m: String| ExperimentError::Validation(vec![FieldError::new("threads", m)]);
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("VORTEXLAB_THREADS") {
            Ok(s) => s.trim().parse().map_err(|_| bad(format!("VORTEXLAB_THREADS={s:?} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(bad("thread count must be positive".into()));
    }
    Ok(n)
}

pub struct Invocation<'a> {
    pub command: Command,
    pub config_path: &'a Path,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

pub struct Outcome {
    pub out: PathBuf,
    pub messages: Vec<String>,
    pub manifest: Manifest,
}

/// Full run: config, thread pool, command, manifest. On failure after the
/// output directory is known, `error.json` and a manifest with status
/// `"error"` are written there as well.
pub fn run(inv: Invocation<'_>) -> std::result::Result<Outcome, (ExperimentError, Option<PathBuf>)> {
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let (config, bytes) = load_config(inv.config_path).map_err(|e| (e, None))?;
    if let Some(c) = config.command {
        if c != inv.command {
            let e = FieldError::new("command", format!("config is for {}, invoked as {}", c.name(), inv.command.name()));
            return Err((ExperimentError::Validation(vec![e]), None));
        }
    }
    let out = inv.out.clone().or(config.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let threads = resolve_threads(inv.threads).map_err(|e| (e, None))?;
    let mut ctx = RunContext::new(&out, config.seed).map_err(|e| (e, None))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| (ExperimentError::Output(e.to_string()), Some(out.clone())))?;
    let result = pool.install(|| execute(inv.command, &config.params, &mut ctx));
    let mut timings = ctx.timings.clone();
    timings.push(("total".into(), clock.elapsed().as_secs_f64()));
    let status = if result.is_ok() { "ok" } else { "error" };
    if let Err(e) = &result {
        let _ = fs::write(out.join(ERROR_FILE), format!("{}\n", serde_json::to_string_pretty(&e.to_json()).unwrap_or_default()));
        ctx.record(ERROR_FILE);
    }
    let params = match &result {
        Ok(p) => p.clone(),
        Err(_) => config.params.clone(),
    };
    let manifest = Manifest {
        command: inv.command,
        status: status.into(),
        config_path: Some(inv.config_path.display().to_string()),
        config_sha256: Some(sha256_hex(&bytes)),
        config: serde_json::json!({ "seed": config.seed, "params": params }),
        seed: config.seed,
        threads,
        versions: versions(),
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        timings_s: timings,
        outputs: Manifest::outputs_of(&ctx).map_err(|e| (e, Some(out.clone())))?,
    };
    manifest.write(&out).map_err(|e| (e, Some(out.clone())))?;
    match result {
        Ok(_) => Ok(Outcome { out, messages: ctx.messages, manifest }),
        Err(e) => Err((e, Some(out))),
    }
}
