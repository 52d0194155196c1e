//! Yes-fraction time series, shared by the stochastic and ODE solvers.

use std::io::Write;

use crate::error::Result;

/// beta at every slot boundary 0..=T plus the influenced flag of each slot.
/// Row t's flag says whether slot t (the transition from t-1 to t) was
/// influenced; slot 0 has no transition and carries `false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    betas: Vec<f64>,
    influenced: Vec<bool>,
}

impl Trajectory {
    pub fn new(betas: Vec<f64>, influenced: Vec<bool>) -> Self {
        assert_eq!(
            betas.len(),
            influenced.len() + 1,
            "one beta per slot boundary"
        );
        debug_assert!(betas.iter().all(|b| (-1e-9..=1.0 + 1e-9).contains(b)));
        Trajectory { betas, influenced }
    }

    /// Number of slots T.
    pub fn slot_count(&self) -> usize {
        self.influenced.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn influenced_flags(&self) -> &[bool] {
        &self.influenced
    }

    pub fn terminal(&self) -> f64 {
        *self.betas.last().expect("betas never empty")
    }

    /// CSV with columns slot, beta, influenced.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slot", "beta", "influenced"])?;
        for (t, &beta) in self.betas.iter().enumerate() {
            let flag = t > 0 && self.influenced[t - 1];
            w.write_record(&[t.to_string(), beta.to_string(), flag.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
