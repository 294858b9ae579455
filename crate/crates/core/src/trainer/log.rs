use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::format_f64;
use crate::selfexpr::LossBreakdown;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub nmi: Option<f64>,
    pub acc: Option<f64>,
}

/// Fine-tuning history, one record per completed epoch, plus the summed
/// reconstruction loss of every pretraining epoch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub pretrain: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
}

pub const CSV_HEADER: &str = "epoch,ae_loss,selfexpr_loss,lp_loss,universality_loss,diversity_loss,total,nmi,acc";

impl TrainLog {
    pub fn totals(&self) -> Vec<f64> {
        self.epochs.iter().map(|r| r.loss.total).collect()
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.epochs {
            let l = &r.loss;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.epoch,
                format_f64(l.ae_loss),
                format_f64(l.selfexpr_loss),
                format_f64(l.lp_loss),
                format_f64(l.universality_loss),
                format_f64(l.diversity_loss),
                format_f64(l.total),
                opt(r.nmi),
                opt(r.acc),
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses the fine-tuning records back from [`TrainLog::to_csv`] output.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => return Err(parse_err(1, "missing train log header".into())),
        }
        let mut epochs = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(parse_err(i + 1, format!("expected 9 fields, found {}", f.len())));
            }
            let num =
                |s: &str| -> Result<f64> { s.parse().map_err(|_| parse_err(i + 1, format!("not a number: {s:?}"))) };
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            epochs.push(EpochRecord {
                epoch: f[0]
                    .parse()
                    .map_err(|_| parse_err(i + 1, format!("bad epoch {:?}", f[0])))?,
                loss: LossBreakdown {
                    ae_loss: num(f[1])?,
                    selfexpr_loss: num(f[2])?,
                    lp_loss: num(f[3])?,
                    universality_loss: num(f[4])?,
                    diversity_loss: num(f[5])?,
                    total: num(f[6])?,
                },
                nmi: opt(f[7])?,
                acc: opt(f[8])?,
            });
        }
        Ok(Self {
            pretrain: Vec::new(),
            epochs,
        })
    }
}

/// Trailing moving average with window `w` (first value at index `w - 1`).
pub fn moving_average(values: &[f64], w: usize) -> Vec<f64> {
    if w == 0 || values.len() < w {
        return Vec::new();
    }
    values.windows(w).map(|s| s.iter().sum::<f64>() / w as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let log = TrainLog {
            pretrain: vec![],
            epochs: vec![
                EpochRecord {
                    epoch: 0,
                    loss: LossBreakdown {
                        total: 1.0 / 3.0,
                        diversity_loss: -0.1,
                        ..Default::default()
                    },
                    nmi: None,
                    acc: None,
                },
                EpochRecord {
                    epoch: 1,
                    loss: LossBreakdown::default(),
                    nmi: Some(0.5),
                    acc: Some(1.0),
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        log.write_csv(&p).unwrap();
        assert_eq!(TrainLog::read_csv(&p).unwrap(), log);
    }

    #[test]
    fn moving_average_window() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
        assert!(moving_average(&[1.0], 2).is_empty());
    }
}
