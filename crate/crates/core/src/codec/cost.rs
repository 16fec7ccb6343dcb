//! Deterministic operation counting standing in for decode time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw operation counts of one CTU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CtuCost {
    /// Interpolation multiply-accumulates at MC-computed positions.
    pub mc: u64,
    /// Deblocking operations on segments owned by this CTU.
    pub df: u64,
    /// Nearest-neighbour sample copies.
    pub copy: u64,
    /// Prediction assembly and residual reconstruction.
    pub recon: u64,
    /// Syntax parsing.
    pub parse: u64,
}

impl CtuCost {
    pub fn weighted(&self, p: &CostProfile) -> f64 {
        p.mc * self.mc as f64
            + p.df * self.df as f64
            + p.copy * self.copy as f64
            + p.recon * self.recon as f64
            + p.parse * self.parse as f64
    }

    pub fn add(&mut self, o: &CtuCost) {
        self.mc += o.mc;
        self.df += o.df;
        self.copy += o.copy;
        self.recon += o.recon;
        self.parse += o.parse;
    }
}

/// Per-frame ledger: one entry per CTU plus planning overhead.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameLedger {
    pub ctus: Vec<CtuCost>,
    /// Operations spent planning this frame.
    pub planning: u64,
}

impl FrameLedger {
    pub fn totals(&self) -> CtuCost {
        let mut t = CtuCost::default();
        for c in &self.ctus {
            t.add(c);
        }
        t
    }

    /// Weighted frame cost including planning overhead.
    pub fn cost(&self, p: &CostProfile) -> f64 {
        self.ctus.iter().map(|c| c.weighted(p)).sum::<f64>() + p.planning * self.planning as f64
    }
}

/// Weight of one operation of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostProfile {
    pub mc: f64,
    pub df: f64,
    pub copy: f64,
    pub recon: f64,
    pub parse: f64,
    pub planning: f64,
}

impl Default for CostProfile {
    fn default() -> Self {
        CostProfile {
            mc: 1.2,
            df: 12.0,
            copy: 0.25,
            recon: 6.0,
            parse: 5.0,
            planning: 1.0,
        }
    }
}

impl CostProfile {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mc, self.df, self.copy, self.recon, self.parse, self.planning];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::validation(format!("cost weights must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: CostProfile = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Deterministic operation count of planning one frame of `n` CTUs: a sort
/// of the saliency values plus linear passes for capacity and assignment.
pub fn planning_ops(n: usize) -> u64 {
    let n = n as u64;
    let log = 64 - n.max(1).leading_zeros() as u64;
    n * log + 2 * n + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_cost() {
        let p = CostProfile {
            mc: 1.0,
            df: 2.0,
            copy: 3.0,
            recon: 4.0,
            parse: 5.0,
            planning: 10.0,
        };
        let c = CtuCost {
            mc: 1,
            df: 1,
            copy: 1,
            recon: 1,
            parse: 1,
        };
        let l = FrameLedger {
            ctus: vec![c, c],
            planning: 2,
        };
        assert_eq!(l.cost(&p), 2.0 * 15.0 + 20.0);
        assert_eq!(l.totals().mc, 2);
        assert!(CostProfile::from_json(r#"{"mc":1,"df":-1,"copy":1,"recon":1,"parse":1,"planning":1}"#).is_err());
        assert!(CostProfile::from_json(r#"{"mc":1,"df":1,"copy":1,"recon":1,"parse":1}"#).is_err());
    }

    #[test]
    fn planning_ops_grow() {
        assert_eq!(planning_ops(1), 4);
        assert!(planning_ops(510) > planning_ops(104));
    }
}
