use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::kde_bias_bound;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Product,
    Fusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Opinion,
    Pdf,
}

/// The densities compared against the reference.
///
/// Declaration order is the column order of the density table and the
/// row order within aggregate groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approximant {
    Kde,
    Sl,
    GaussMc,
    BetaMc,
    GaussAn,
    BetaAn,
}

impl Approximant {
    pub const ALL: [Approximant; 6] = [
        Approximant::Kde,
        Approximant::Sl,
        Approximant::GaussMc,
        Approximant::BetaMc,
        Approximant::GaussAn,
        Approximant::BetaAn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Approximant::Kde => "kde",
            Approximant::Sl => "sl",
            Approximant::GaussMc => "gauss_mc",
            Approximant::BetaMc => "beta_mc",
            Approximant::GaussAn => "gauss_an",
            Approximant::BetaAn => "beta_an",
        }
    }

    pub fn is_analytic(self) -> bool {
        matches!(self, Approximant::GaussAn | Approximant::BetaAn)
    }
}

macro_rules! str_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }
    };
}

str_enum!(Operator { Operator::Product => "product", Operator::Fusion => "fusion" });
str_enum!(Start { Start::Opinion => "opinion", Start::Pdf => "pdf" });

impl fmt::Display for Approximant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approximant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Approximant::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown approximant {s:?}")))
    }
}

/// One approximant's distance in one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub operator: Operator,
    pub start: Start,
    pub n_samples: usize,
    pub l_factors: usize,
    pub rep: usize,
    pub approximant: Approximant,
    pub distance: f64,
    pub stderr: f64,
}

impl RunRecord {
    fn group_key(&self) -> GroupKey {
        GroupKey {
            operator: self.operator,
            start: self.start,
            l_factors: self.l_factors,
            n_samples: self.n_samples,
        }
    }
}

/// Mean and spread of one approximant's distance across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStat {
    pub operator: Operator,
    pub start: Start,
    pub n_samples: usize,
    pub l_factors: usize,
    pub approximant: Approximant,
    pub mean: f64,
    /// Sample std (divisor `reps − 1`); 0 when `reps == 1`.
    pub std: f64,
    pub reps: usize,
    /// Operand rejections plus repetition redraws in this cell.
    pub rejections: usize,
    /// `kde_bias_bound(n_samples) <= 1e-2 ×` the smallest mean in the cell.
    pub bias_gate_ok: bool,
    pub single_rep: bool,
}

/// One experiment cell: every approximant shares operands and seeds here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct GroupKey {
    pub operator: Operator,
    pub start: Start,
    pub l_factors: usize,
    pub n_samples: usize,
}

/// Ratio between the smallest reported distance and the KDE bias bound
/// below which the KDE reference can no longer be trusted.
pub const BIAS_GATE_FACTOR: f64 = 1e-2;

pub fn bias_gate(n_samples: usize, smallest_mean: f64) -> bool {
    kde_bias_bound(n_samples) <= BIAS_GATE_FACTOR * smallest_mean
}

/// Mean and std per (cell, approximant), in a fixed order independent of
/// the order of `records`.
pub fn aggregate_stats(records: &[RunRecord]) -> Result<Vec<AggregateStat>> {
    if records.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.group_key(), a.approximant, a.rep).cmp(&(b.group_key(), b.approximant, b.rep))
    });

    let mut groups: BTreeMap<(GroupKey, Approximant), Vec<f64>> = BTreeMap::new();
    for r in sorted {
        groups
            .entry((r.group_key(), r.approximant))
            .or_default()
            .push(r.distance);
    }

    let mut out: Vec<AggregateStat> = groups
        .into_iter()
        .map(|((key, approximant), d)| {
            let reps = d.len();
            let mean = d.iter().sum::<f64>() / reps as f64;
            let std = if reps > 1 {
                (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (reps - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregateStat {
                operator: key.operator,
                start: key.start,
                n_samples: key.n_samples,
                l_factors: key.l_factors,
                approximant,
                mean,
                std,
                reps,
                rejections: 0,
                bias_gate_ok: true,
                single_rep: reps == 1,
            }
        })
        .collect();

    let mut smallest: BTreeMap<GroupKey, f64> = BTreeMap::new();
    for a in &out {
        let e = smallest.entry(key_of(a)).or_insert(f64::INFINITY);
        *e = e.min(a.mean);
    }
    for a in &mut out {
        a.bias_gate_ok = bias_gate(a.n_samples, smallest[&key_of(a)]);
    }
    Ok(out)
}

pub(crate) fn key_of(a: &AggregateStat) -> GroupKey {
    GroupKey {
        operator: a.operator,
        start: a.start,
        l_factors: a.l_factors,
        n_samples: a.n_samples,
    }
}
