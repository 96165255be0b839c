use std::fmt::Write as _;

use crate::model::Estimates;
use crate::numfmt::round_trip;

/// Mean absolute error with the `1/(2n)` normalizer: `(1/2n) Σ_i |ŷ_i - λ₂|`.
/// A global estimate counts as a single term.
pub fn l1_error(estimates: &Estimates, lambda2: f64) -> f64 {
    let e = estimates.as_slice();
    e.iter().map(|y| (y - lambda2).abs()).sum::<f64>() / (2.0 * e.len() as f64)
}

/// `(1/2n) Σ_i (ŷ_i - λ₂)²`, the training loss.
pub fn l2_loss(estimates: &Estimates, lambda2: f64) -> f64 {
    crate::model::squared_loss(estimates, lambda2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-graph training loss over the epoch's updates.
    pub train_l2: f64,
    pub val_l1: f64,
    pub val_l2: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub epochs: Vec<EpochRecord>,
}

pub const METRICS_HEADER: &str = "epoch,train_l2,val_l1,val_l2,wall_time_s";

impl Metrics {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn first(&self) -> Option<&EpochRecord> {
        self.epochs.first()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{METRICS_HEADER}").expect("write to String");
        for r in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch,
                round_trip(r.train_l2),
                round_trip(r.val_l1),
                round_trip(r.val_l2),
                round_trip(r.wall_time_s)
            )
            .expect("write to String");
        }
        out
    }
}

/// One row of a generalization sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub mean_l1: f64,
    pub count: usize,
}

pub const SWEEP_HEADER: &str = "n,mean_l1,count,in_training_range";

/// Sweep CSV; `in_training_range` is 1 for sizes inside `train_range`.
pub fn sweep_csv(rows: &[SweepRow], train_range: (usize, usize)) -> String {
    let mut out = String::new();
    writeln!(out, "{SWEEP_HEADER}").expect("write to String");
    for r in rows {
        let inside = (train_range.0..=train_range.1).contains(&r.n);
        writeln!(out, "{},{},{},{}", r.n, round_trip(r.mean_l1), r.count, u8::from(inside)).expect("write to String");
    }
    out
}
