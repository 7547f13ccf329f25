use serde::{Deserialize, Serialize};

use super::{covariant_gradient, curvature, FieldConfiguration};
use crate::error::Result;
use crate::grid::{weighted_sum, Region};

/// Energy with its gauge-kinetic, curvature and potential parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySplit {
    pub total: f64,
    pub kinetic: f64,
    pub curvature: f64,
    pub potential: f64,
}

/// Per-node densities `|nabla^A u|^2`, `eps^2 |F|^2`, `(1-|u|^2)^2 / (4 eps^2)`.
pub fn energy_density(config: &FieldConfiguration) -> Result<[Vec<f64>; 3]> {
    let du = covariant_gradient(config)?;
    let f = curvature(config)?;
    let e2 = config.epsilon * config.epsilon;
    let n = config.len();
    let kinetic = (0..n).map(|i| du.iter().map(|d| d[i].norm_sqr()).sum()).collect();
    let curv = f.norm_sqr().into_iter().map(|v| e2 * v).collect();
    let potential = config.u.iter().map(|u| (1.0 - u.norm_sqr()).powi(2) / (4.0 * e2)).collect();
    Ok([kinetic, curv, potential])
}

/// Trapezoidal energy over a region.
pub fn energy(config: &FieldConfiguration, region: &Region) -> Result<EnergySplit> {
    let w = region.weights(&config.grid)?;
    let [k, c, p] = energy_density(config)?;
    let kinetic = weighted_sum(&w, &k);
    let curvature = weighted_sum(&w, &c);
    let potential = weighted_sum(&w, &p);
    Ok(EnergySplit { total: kinetic + curvature + potential, kinetic, curvature, potential })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid::Grid2;

    #[test]
    fn vacuum_has_zero_energy() {
        let g = Grid2::new(3.0, 0.2).unwrap().grid();
        let e = energy(&FieldConfiguration::vacuum(g, 0.7).unwrap(), &Region::All).unwrap();
        assert_eq!(e, EnergySplit::default());
    }

    #[test]
    fn empty_region_is_rejected() {
        let g = Grid2::new(3.0, 0.2).unwrap().grid();
        let cfg = FieldConfiguration::vacuum(g, 1.0).unwrap();
        assert!(matches!(energy(&cfg, &Region::ball(&[50.0, 0.0], 1.0)), Err(Error::EmptyRegion)));
    }
}
