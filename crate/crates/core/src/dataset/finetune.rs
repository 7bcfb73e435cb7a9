use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetError;

/// Hyperparameters for the external low-rank adapter fine-tuning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub learning_rate: f64,
    pub epochs: u32,
    pub batch_size: u32,
    pub weight_decay: f64,
    pub dropout: f64,
    pub grad_accumulation: u32,
    pub max_grad_norm: f64,
    pub test_split: f64,
    pub loss: String,
    pub optimizer: String,
    pub adapter: String,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            learning_rate: 1e-5,
            epochs: 10,
            batch_size: 5,
            weight_decay: 0.01,
            dropout: 0.5,
            grad_accumulation: 2,
            max_grad_norm: 1.0,
            test_split: 0.2,
            loss: "cross-entropy".into(),
            optimizer: "adam".into(),
            adapter: "low-rank".into(),
        }
    }
}

impl fmt::Display for FinetuneConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# fine-tuning hyperparameters, one key=value per line")?;
        writeln!(f, "# gradients accumulate over grad_accumulation batches; clipping at max_grad_norm")?;
        writeln!(f, "learning_rate={:e}", self.learning_rate)?;
        writeln!(f, "epochs={}", self.epochs)?;
        writeln!(f, "batch_size={}", self.batch_size)?;
        writeln!(f, "weight_decay={}", self.weight_decay)?;
        writeln!(f, "dropout={}", self.dropout)?;
        writeln!(f, "grad_accumulation={}", self.grad_accumulation)?;
        writeln!(f, "max_grad_norm={:?}", self.max_grad_norm)?;
        writeln!(f, "test_split={}", self.test_split)?;
        writeln!(f, "loss={}", self.loss)?;
        writeln!(f, "optimizer={}", self.optimizer)?;
        writeln!(f, "adapter={}", self.adapter)
    }
}

/// Writes the default configuration to `path`.
pub fn emit_finetune_config(path: &Path) -> Result<(), DatasetError> {
    fs::write(path, FinetuneConfig::default().to_string())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_values() {
        let text = FinetuneConfig::default().to_string();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(
            lines,
            [
                "learning_rate=1e-5",
                "epochs=10",
                "batch_size=5",
                "weight_decay=0.01",
                "dropout=0.5",
                "grad_accumulation=2",
                "max_grad_norm=1.0",
                "test_split=0.2",
                "loss=cross-entropy",
                "optimizer=adam",
                "adapter=low-rank",
            ]
        );
    }

    #[test]
    fn emit_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.cfg"), dir.path().join("b.cfg"));
        emit_finetune_config(&a).unwrap();
        emit_finetune_config(&b).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }
}
