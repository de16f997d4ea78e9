//! JSON description of a c-q broadcast channel.
//!
//! ```json
//! { "alphabet": ["0", "1"], "d_B": 2, "d_C": 2,
//!   "states": [[[[1.0, 0.0], ...], ...], ...],
//!   "degrading_map": [[[[1.0, 0.0], ...], ...]] }
//! ```
//!
//! Each matrix is a list of rows, each entry a `[re, im]` pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, DensityMatrix, QuantumChannel, C64};
use crate::region::{degradation_residual, CqBroadcastChannel, DEGRADED_TOL};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub alphabet: Vec<String>,
    #[serde(rename = "d_B")]
    pub d_b: usize,
    #[serde(rename = "d_C")]
    pub d_c: usize,
    pub states: Vec<JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrading_map: Option<Vec<JsonMatrix>>,
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if r == 0 || cols == 0 {
        return Err(Error::Malformed("empty matrix".into()));
    }
    if let Some(bad) = rows.iter().find(|row| row.len() != cols) {
        return Err(Error::Malformed(format!("ragged matrix row of length {}", bad.len())));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Malformed("non-finite matrix entry".into()));
    }
    Ok(CMatrix::from_fn(r, cols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

impl ChannelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("channel spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec is always serializable")
    }

    pub fn from_channel(ch: &CqBroadcastChannel, degrading_map: Option<&QuantumChannel>) -> Self {
        Self {
            alphabet: ch.labels().to_vec(),
            d_b: ch.d_b(),
            d_c: ch.d_c(),
            states: ch.states().iter().map(|s| matrix_to_json(s.matrix())).collect(),
            degrading_map: degrading_map.map(|n| n.kraus().iter().map(matrix_to_json).collect()),
        }
    }

    pub fn channel(&self) -> Result<CqBroadcastChannel> {
        let states = self
            .states
            .iter()
            .map(|m| DensityMatrix::from_matrix(matrix_from_json(m)?))
            .collect::<Result<Vec<_>>>()?;
        CqBroadcastChannel::new(self.alphabet.clone(), states, self.d_b, self.d_c)
    }

    pub fn declared_map(&self) -> Result<Option<QuantumChannel>> {
        self.degrading_map
            .as_ref()
            .map(|ks| QuantumChannel::new(ks.iter().map(matrix_from_json).collect::<Result<_>>()?))
            .transpose()
    }

    /// Parses the channel and, if a degrading map is declared, insists that
    /// it reproduces every `ρ_C^x` within [`DEGRADED_TOL`].
    pub fn validate(&self) -> Result<(CqBroadcastChannel, Option<QuantumChannel>)> {
        let ch = self.channel()?;
        let map = self.declared_map()?;
        if let Some(n) = &map {
            if n.d_in() != ch.d_b() || n.d_out() != ch.d_c() {
                return Err(Error::Malformed(format!(
                    "degrading map is {}→{}, channel needs {}→{}",
                    n.d_in(),
                    n.d_out(),
                    ch.d_b(),
                    ch.d_c()
                )));
            }
            let residual = degradation_residual(&ch, n)?;
            if !(residual <= DEGRADED_TOL) {
                return Err(Error::Infeasible(format!("declared degrading map misses by {residual:.3e}")));
            }
        }
        Ok((ch, map))
    }
}

pub fn load_spec(path: &std::path::Path) -> Result<ChannelSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    ChannelSpec::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_density, rng};

    #[test]
    fn round_trip_is_exact() {
        let mut r = rng(8);
        let n = random_channel(&mut r, 2, 2, 2);
        let bs: Vec<_> = (0..3).map(|_| random_density(&mut r, 2, 2)).collect();
        let ch = CqBroadcastChannel::degraded_product(&bs, &n).unwrap();
        let text = ChannelSpec::from_channel(&ch, Some(&n)).to_json();
        let spec = ChannelSpec::from_json(&text).unwrap();
        let (back, map) = spec.validate().unwrap();
        let again = ChannelSpec::from_json(&ChannelSpec::from_channel(&back, map.as_ref()).to_json()).unwrap();
        assert_eq!(again, spec);
        let twice = again.channel().unwrap();
        for (a, b) in back.states().iter().zip(twice.states()) {
            assert_eq!(a.max_abs_diff(b), 0.0);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ChannelSpec::from_json("{not json").is_err());
        let mut spec = ChannelSpec::from_channel(&CqBroadcastChannel::noiseless_bit(), None);
        spec.states[0][0][0] = [0.7, 0.0];
        assert!(spec.channel().is_err());
        let mut spec = ChannelSpec::from_channel(&CqBroadcastChannel::noiseless_bit(), None);
        spec.d_c = 3;
        assert!(spec.channel().is_err());
        // swap map on a copy channel does not degrade it
        let mut spec = ChannelSpec::from_channel(&CqBroadcastChannel::bsc_cascade(0.1, 0.1).unwrap(), None);
        let flip = CMatrix::from_fn(2, 2, |i, j| C64::new(if i != j { 1.0 } else { 0.0 }, 0.0));
        spec.degrading_map = Some(vec![matrix_to_json(&flip)]);
        assert!(matches!(spec.validate(), Err(Error::Infeasible(_))));
    }
}
