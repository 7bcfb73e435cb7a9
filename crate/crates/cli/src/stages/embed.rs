use std::fs;
use std::path::{Path, PathBuf};

use vsm_actr::dataset::render_prompt;
use vsm_actr::features::{embed_lines, BridgeClient, BridgeEndpoint, EmbeddingProvider, TestEmbedder};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::manifest::write_manifest;
use crate::stages::{
    io_err, load_index, load_problem_sets, require, save_matrix, trace_file, LINE_EMBEDDINGS, PROBLEM_SETS,
    PROMPT_EMBEDDINGS, TRACE_INDEX,
};
use crate::BRIDGE_ENV;

/// Parsed `--provider` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Test,
    Bridge(BridgeEndpoint),
}

impl ProviderSpec {
    /// `test`, `bridge:<endpoint>`, or bare `bridge` with the endpoint taken
    /// from the environment. A set environment variable overrides any
    /// endpoint given on the command line.
    pub fn parse(spec: &str, env_endpoint: Option<&str>) -> Result<Self> {
        let bridge = |endpoint: &str| {
            endpoint
                .parse()
                .map(ProviderSpec::Bridge)
                .map_err(|e| CliError::Config(format!("provider `{spec}`: {e}")))
        };
        match (spec, spec.strip_prefix("bridge:"), env_endpoint) {
            ("test", _, _) => Ok(ProviderSpec::Test),
            (_, Some(_), Some(env)) | ("bridge", None, Some(env)) => bridge(env),
            (_, Some(endpoint), None) => bridge(endpoint),
            ("bridge", None, None) => Err(CliError::Config(format!(
                "provider `bridge` needs an endpoint (bridge:<endpoint> or {BRIDGE_ENV})"
            ))),
            _ => Err(CliError::Config(format!(
                "unknown provider `{spec}` (expected test or bridge:<endpoint>)"
            ))),
        }
    }

    fn connect(&self, cfg: &PipelineConfig, kind: &str) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self {
            ProviderSpec::Test => Box::new(TestEmbedder::with_seed(cfg.embed.dim, cfg.embed.test_seed)),
            ProviderSpec::Bridge(endpoint) => Box::new(
                BridgeClient::connect(endpoint.clone())
                    .map_err(CliError::from_feature)?
                    .with_kind(kind),
            ),
        })
    }
}

/// Embeds every trial's trace lines (in index order) and one prompt per
/// problem set.
pub fn embed(root: &Path, cfg: &PipelineConfig) -> Result<()> {
    let env = std::env::var(BRIDGE_ENV).ok().filter(|v| !v.is_empty());
    let spec = ProviderSpec::parse(&cfg.embed.provider, env.as_deref())?;
    let index = load_index(root)?;
    let sets = load_problem_sets(root)?;

    let mut inputs = vec![PathBuf::from(TRACE_INDEX), PathBuf::from(PROBLEM_SETS)];
    let mut lines = Vec::new();
    let mut current: Option<(String, Vec<String>)> = None;
    for row in &index {
        if current.as_ref().is_none_or(|(id, _)| *id != row.run_id) {
            let rel = trace_file(&row.run_id);
            let path = require(root, &rel.to_string_lossy())?;
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            current = Some((row.run_id.clone(), text.lines().map(str::to_string).collect()));
            inputs.push(rel);
        }
        let (_, run_lines) = current.as_ref().expect("loaded above");
        let span = run_lines.get(row.first_line..row.first_line + row.lines).ok_or_else(|| {
            CliError::Other(format!("{TRACE_INDEX}: {} trial {} points past its trace", row.run_id, row.trial))
        })?;
        lines.extend_from_slice(span);
    }

    let mut provider = spec.connect(cfg, "sentence")?;
    let line_matrix = embed_lines(provider.as_mut(), &lines).map_err(CliError::from_feature)?;
    drop(provider);
    save_matrix(root, LINE_EMBEDDINGS, &line_matrix.to_file())?;

    let prompts: Vec<String> = sets.iter().map(|s| render_prompt(s, cfg.mode)).collect();
    let mut provider = spec.connect(cfg, "prompt_hidden")?;
    let prompt_matrix = embed_lines(provider.as_mut(), &prompts).map_err(CliError::from_feature)?;
    drop(provider);
    save_matrix(root, PROMPT_EMBEDDINGS, &prompt_matrix.to_file().with("mode", cfg.mode.to_string()))?;

    write_manifest(
        root,
        "embed",
        cfg.seed(),
        cfg,
        &inputs,
        &[PathBuf::from(LINE_EMBEDDINGS), PathBuf::from(PROMPT_EMBEDDINGS)],
    )?;
    println!(
        "embedded {} trace lines and {} prompts with {} ({} dims)",
        lines.len(),
        prompts.len(),
        line_matrix.provenance.model,
        line_matrix.matrix.cols()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_specs() {
        assert_eq!(ProviderSpec::parse("test", Some("h:1")).unwrap(), ProviderSpec::Test);
        assert_eq!(
            ProviderSpec::parse("bridge:tcp://a:1", None).unwrap(),
            ProviderSpec::Bridge(BridgeEndpoint::Tcp("a:1".into()))
        );
        assert_eq!(
            ProviderSpec::parse("bridge:tcp://a:1", Some("b:2")).unwrap(),
            ProviderSpec::Bridge(BridgeEndpoint::Tcp("b:2".into()))
        );
        assert_eq!(
            ProviderSpec::parse("bridge", Some("exec:py serve.py")).unwrap(),
            ProviderSpec::Bridge(BridgeEndpoint::Exec(vec!["py".into(), "serve.py".into()]))
        );
        assert!(matches!(ProviderSpec::parse("bridge", None), Err(CliError::Config(_))));
        assert!(matches!(ProviderSpec::parse("magic", None), Err(CliError::Config(_))));
    }
}
