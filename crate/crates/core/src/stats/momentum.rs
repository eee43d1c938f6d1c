use crate::error::{Error, Result};
use crate::field::PolarFields;
use crate::interp::Probe;
use crate::stochastic::ModelParams;

#[derive(Clone, Debug)]
pub struct MomentumSamples {
    pub p: Vec<[f64; 2]>,
    /// Index of the trajectory behind each kept sample.
    pub kept: Vec<usize>,
    /// Samples dropped because their stencil touches a node.
    pub excluded: usize,
}

impl MomentumSamples {
    pub fn component(&self, d: usize) -> Vec<f64> {
        self.p.iter().map(|p| p[d]).collect()
    }
}

/// `p_i = gradS(q_i) + s_i (|lambda|/2) grad ln Omega(q_i)` at each (position, sign).
pub fn momentum_samples(
    positions: &[[f64; 2]],
    signs: &[i8],
    fields: &PolarFields,
    params: &ModelParams,
) -> Result<MomentumSamples> {
    if positions.len() != signs.len() {
        return Err(Error::InvalidParameter("positions and signs differ in length".into()));
    }
    let grid = fields.grid();
    let dims = grid.dims();
    let half = 0.5 * params.lambda_mag_at(fields.time());
    let mut out = MomentumSamples { p: Vec::with_capacity(positions.len()), kept: Vec::new(), excluded: 0 };
    for (i, (q, &s)) in positions.iter().zip(signs).enumerate() {
        let probe = Probe::new(grid, &q[..dims]);
        if probe.touches(fields.node_mask()) {
            out.excluded += 1;
            continue;
        }
        let mut p = [0.0; 2];
        for (d, pd) in p.iter_mut().enumerate().take(dims) {
            *pd = probe.eval(&fields.grad_s()[d]) + s as f64 * half * probe.eval(&fields.grad_ln_omega()[d]);
        }
        out.p.push(p);
        out.kept.push(i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::polar_decompose;
    use crate::grid::{Axis, Boundary, SpatialGrid};
    use crate::schrodinger::{analytic_state, AnalyticState};

    #[test]
    fn ground_state_momentum_is_minus_sign_times_q() {
        let grid = SpatialGrid::line(Axis::centered(20.0, 256).unwrap(), Boundary::Periodic);
        let st = AnalyticState::ShoGround { omega: 1.0, center: 0.0 };
        let f = polar_decompose(&analytic_state(&st, &grid, 1.0, 1.0, 0.0).unwrap(), 1.0).unwrap();
        let params = ModelParams::with_step(1.0, 1e-3);
        let m = momentum_samples(&[[0.7, 0.0], [0.7, 0.0]], &[1, -1], &f, &params).unwrap();
        assert_eq!(m.excluded, 0);
        assert!((m.p[0][0] + 0.7).abs() < 1e-3 && (m.p[1][0] - 0.7).abs() < 1e-3);
        assert!(momentum_samples(&[[0.0, 0.0]], &[], &f, &params).is_err());
    }

    #[test]
    fn samples_next_to_a_node_are_dropped() {
        let grid = SpatialGrid::line(Axis::centered(2.0, 255).unwrap(), Boundary::HardWall);
        let f = polar_decompose(&analytic_state(&AnalyticState::BoxEigenstate { n: 2 }, &grid, 1.0, 1.0, 0.0).unwrap(), 1.0)
            .unwrap();
        let m = momentum_samples(&[[0.0, 0.0], [0.5, 0.0]], &[1, 1], &f, &ModelParams::with_step(1.0, 1e-3)).unwrap();
        assert_eq!((m.excluded, m.kept.clone()), (1, vec![1]));
        assert_eq!(m.component(0).len(), 1);
    }
}
