//! One function per report kind. Each returns its verdicts and a JSON
//! diagnostics block and writes its CSV files through the artifact writer.

use serde_json::json;

use crate::classical::integrate_hamilton;
use crate::error::Result;
use crate::field::{FieldOps, WaveFunction};
use crate::grid::{Axis, SpatialGrid};
use crate::locality::{check_decomposition, check_transition_separability, marginal_invariance_test, MarginalReport, ProductScenario};
use crate::rng::Purpose;
use crate::runner::output::ArtifactWriter;
use crate::runner::scenario::{FieldSourceKind, ReportKind, Resolved};
use crate::runner::RunError;
use crate::schrodinger::{analytic_state, pair_state, propagate, AnalyticState, InitialState, Method, Propagator, PropagatorConfig};
use crate::stats::{
    expectation_compare, fisher_bound, fit_scaling, ks_band, ks_distance, ks_distance_with, momentum_samples, moments,
    uncertainty_product, z_score, BandLevel, CellDensity, Verdict,
};
use crate::stochastic::{
    evolve_ensemble, information_balance_residual, predicted_single_sign_residual, sample_deviations,
    sign_averaged_balance_residual, spatial_balance_residual, state_matches_potential, AnalyticSource, BalanceFrames,
    EnsembleConfig, FieldSource, ModelParams, SolverSource, TrajectoryEnsemble,
};
use crate::system::{AxisPotential, ClassicalSystem};

pub struct ReportOutput {
    pub verdicts: Vec<Verdict>,
    pub diagnostics: serde_json::Value,
}

/// Shared state of one run: the resolved scenario, the artifact writer and
/// the main ensemble once computed.
pub struct Runner<'a> {
    pub res: &'a Resolved,
    pub out: &'a mut ArtifactWriter,
    main: Option<TrajectoryEnsemble>,
}

fn initial_psi(initial: &InitialState, grid: &SpatialGrid, system: &ClassicalSystem, hbar: f64) -> Result<WaveFunction> {
    match initial {
        InitialState::Single(s) => analytic_state(s, grid, hbar, system.masses()[0], 0.0),
        InitialState::Pair(p) => pair_state(p, grid, hbar, [system.masses()[0], system.masses()[1]], 0.0),
    }
}

/// Solver step for a model step: the configured one when it divides `dt`, else `dt` itself.
fn solver_step(dt_solver: f64, dt: f64) -> f64 {
    let r = dt / dt_solver;
    if dt_solver <= dt * (1.0 + 1e-12) && (r - r.round()).abs() < 1e-6 {
        dt_solver
    } else {
        dt
    }
}

fn cell_density(grid: &SpatialGrid, omega: &[f64], d: usize) -> Result<CellDensity> {
    if grid.dims() == 1 {
        CellDensity::from_grid_density(grid.axis(0), omega)
    } else {
        CellDensity::marginal(grid.axes(), omega, d)
    }
}

fn histogram(axis: &Axis, xs: &[f64]) -> Vec<f64> {
    let mut h = vec![0.0; axis.len()];
    let w = 1.0 / (xs.len() as f64 * axis.spacing());
    for &x in xs {
        let j = ((x - axis.origin()) / axis.spacing()).floor().clamp(0.0, (axis.len() - 1) as f64) as usize;
        h[j] += w;
    }
    h
}

fn marginal_density(grid: &SpatialGrid, omega: &[f64], d: usize) -> Vec<f64> {
    let (n0, n1) = grid.shape();
    let dv = grid.cell_volume();
    if grid.dims() == 1 {
        return omega.to_vec();
    }
    if d == 0 {
        (0..n0).map(|i| omega[i * n1..(i + 1) * n1].iter().sum::<f64>() * dv / grid.axis(0).spacing()).collect()
    } else {
        (0..n1).map(|j| (0..n0).map(|i| omega[i * n1 + j]).sum::<f64>() * dv / grid.axis(1).spacing()).collect()
    }
}

fn tag(t: f64) -> String {
    format!("{t:.4}")
}

impl<'a> Runner<'a> {
    pub fn new(res: &'a Resolved, out: &'a mut ArtifactWriter) -> Self {
        Self { res, out, main: None }
    }

    fn source(&self, system: &ClassicalSystem, prop: &PropagatorConfig, hbar: f64) -> Result<Box<dyn FieldSource>> {
        let res = self.res;
        match res.scenario.fields.source {
            FieldSourceKind::Analytic => Ok(Box::new(AnalyticSource::new(res.initial.clone(), &res.grid, system, hbar)?)),
            FieldSourceKind::Solver => {
                let psi0 = initial_psi(&res.initial, &res.grid, system, hbar)?;
                Ok(Box::new(SolverSource::new(psi0, system, hbar, prop)?))
            }
        }
    }

    fn ensemble_config(&self) -> EnsembleConfig {
        let sc = &self.res.scenario;
        let t_end = sc.checkpoints.iter().cloned().fold(0.0, f64::max);
        let mut cfg = EnsembleConfig::new(sc.ensemble_size, sc.seed, t_end);
        cfg.checkpoints = sc.checkpoints.clone();
        cfg.sampling = sc.fields.sampling;
        if sc.reports.contains(&ReportKind::Trajectories) {
            cfg.record_paths = sc.trajectories.paths;
            cfg.record_stride = sc.trajectories.stride;
        }
        cfg
    }

    /// Ensemble of the scenario as written, or with a different model step.
    fn run_ensemble(&self, system: &ClassicalSystem, params: &ModelParams, cfg: &EnsembleConfig) -> Result<TrajectoryEnsemble> {
        let sc = &self.res.scenario;
        let mut prop = sc.propagator.clone();
        prop.dt_solver = solver_step(prop.dt_solver, params.dt);
        let mut src = self.source(system, &prop, self.res.hbar)?;
        evolve_ensemble(src.as_mut(), system.masses(), params, cfg)
    }

    fn main(&mut self) -> Result<&TrajectoryEnsemble> {
        if self.main.is_none() {
            let cfg = self.ensemble_config();
            let ens = self.run_ensemble(&self.res.system, &self.res.scenario.model, &cfg)?;
            self.main = Some(ens);
        }
        Ok(self.main.as_ref().unwrap())
    }

    pub fn run(&mut self, kind: ReportKind) -> std::result::Result<ReportOutput, RunError> {
        match kind {
            ReportKind::DeviationLaw => self.deviation_law(),
            ReportKind::BornRule => self.born_rule(),
            ReportKind::FluctuationScaling => self.fluctuation_scaling(),
            ReportKind::ClassicalLimit => self.classical_limit(),
            ReportKind::InformationBalance => self.information_balance(),
            ReportKind::Uncertainty => self.uncertainty(),
            ReportKind::OperatorAverages => self.operator_averages(),
            ReportKind::Locality => self.locality(),
            ReportKind::SolverCrossValidation => self.cross_validation(),
            ReportKind::Determinism => self.determinism(),
            ReportKind::Trajectories => self.trajectories(),
        }
    }

    fn deviation_law(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let sc = &self.res.scenario;
        let o = &sc.deviation_law;
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        let mut hist = Vec::new();
        let band = ks_band(o.samples, BandLevel::P99);
        for (j, &lam) in o.lambdas.iter().enumerate() {
            let devs = sample_deviations(lam, o.samples, sc.seed.wrapping_add(j as u64), Purpose::Deviation)?;
            let sign_ok = devs.iter().all(|x| x * lam >= 0.0);
            let mags: Vec<f64> = devs.iter().map(|x| x.abs()).collect();
            let target = 0.5 * lam.abs();
            let rate = 1.0 / target;
            let cdf = |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() };
            let mean = moments::mean(&mags);
            let ks = ks_distance_with(&mags, cdf, cdf)?;
            verdicts.push(Verdict::relative(format!("mean_abs_deviation[lambda={lam}]"), mean, target, o.mean_tolerance));
            verdicts.push(Verdict::below(format!("exponential_ks[lambda={lam}]"), ks, band));
            verdicts.push(Verdict::flag(
                format!("deviation_sign[lambda={lam}]"),
                sign_ok,
                "every deviation carries the sign of lambda",
            ));
            rows.push(vec![lam, o.samples as f64, mean, target, ks, band]);
            let top = 6.0 * target;
            let width = top / o.bins as f64;
            let mut counts = vec![0usize; o.bins];
            for &m in &mags {
                if m < top {
                    counts[(m / width) as usize] += 1;
                }
            }
            for (b, c) in counts.iter().enumerate() {
                let lo = b as f64 * width;
                let exact = (cdf(lo + width) - cdf(lo)) / width;
                hist.push(vec![lam, lo, lo + width, *c as f64 / (o.samples as f64 * width), exact]);
            }
        }
        let name = ReportKind::DeviationLaw.name();
        self.out.csv(
            "deviation_law.csv",
            name,
            "mean |dS - dA| and KS distance to the exponential law per lambda",
            &["lambda", "samples", "mean_abs", "expected_mean_abs", "ks", "ks_band_99"],
            rows,
        )?;
        self.out.csv(
            "deviation_histogram.csv",
            name,
            "histogram of |dS - dA| against the exponential density",
            &["lambda", "bin_lo", "bin_hi", "empirical_density", "exponential_density"],
            hist,
        )?;
        Ok(ReportOutput { verdicts, diagnostics: json!({ "samples": o.samples, "ks_band_99": band }) })
    }

    fn ks_table(&self, ens: &TrajectoryEnsemble) -> Result<Vec<(f64, f64)>> {
        ens.checkpoints
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let reference = cell_density(&self.res.grid, c.fields.omega(), 0)?;
                Ok((c.time, ks_distance(&ens.coordinates(k, 0), &reference)?))
            })
            .collect()
    }

    fn born_rule(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let sc = self.res.scenario.clone();
        let grid = self.res.grid.clone();
        let ens = self.main()?.clone();
        let n = ens.len();
        let band = sc.born_rule.band_factor * ks_band(n, BandLevel::P95);
        let base = self.ks_table(&ens)?;
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        for &(t, ks) in &base {
            verdicts.push(Verdict::below(format!("born_ks[t={}]", tag(t)), ks, band));
            rows.push(vec![sc.model.dt, t, ks, band]);
        }
        let mut density = Vec::new();
        let axis = grid.axis(0);
        for (k, c) in ens.checkpoints.iter().enumerate() {
            let h = histogram(axis, &ens.coordinates(k, 0));
            let born = marginal_density(&grid, c.fields.omega(), 0);
            for j in 0..axis.len() {
                density.push(vec![c.time, axis.node(j), h[j], born[j]]);
            }
        }
        let mut refined = Vec::new();
        for &dt in &sc.born_rule.refine_dt {
            let mut params = sc.model.clone();
            let f = dt / sc.model.dt;
            params.dt = dt;
            params.tau_xi *= f;
            params.tau_lambda *= f;
            let mut cfg = self.ensemble_config();
            cfg.record_paths = 0;
            let fine = self.run_ensemble(&self.res.system, &params, &cfg)?;
            let table = self.ks_table(&fine)?;
            for (&(t, coarse), &(_, ks)) in base.iter().zip(&table) {
                verdicts.push(Verdict::at_most(format!("born_ks_refined[dt={dt},t={}]", tag(t)), ks, coarse));
                rows.push(vec![dt, t, ks, band]);
            }
            refined.push(json!({ "dt": dt, "ks": table.iter().map(|x| x.1).collect::<Vec<_>>() }));
        }
        let name = ReportKind::BornRule.name();
        self.out.csv(
            "born_rule.csv",
            name,
            "KS distance of the ensemble against |psi|^2 per model step and checkpoint",
            &["dt", "time", "ks", "band"],
            rows,
        )?;
        self.out.csv(
            "born_density.csv",
            name,
            "ensemble histogram and |psi|^2 marginal along the first axis per checkpoint",
            &["time", "q", "ensemble_density", "born_density"],
            density,
        )?;
        Ok(ReportOutput {
            verdicts,
            diagnostics: json!({
                "n": n,
                "band": band,
                "node_events": ens.total_node_events(),
                "refined": refined,
            }),
        })
    }

    fn fluctuation_scaling(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let sc = &self.res.scenario;
        let o = &sc.fluctuation_scaling;
        let grid = &self.res.grid;
        let mut rms = Vec::with_capacity(o.dts.len());
        let mut rows = Vec::new();
        for &dt in &o.dts {
            let params = ModelParams::with_step(sc.model.lambda_mag, dt);
            let mut cfg = EnsembleConfig::new(o.trajectories, sc.seed, o.horizon);
            cfg.checkpoints = vec![o.horizon];
            cfg.sampling = sc.fields.sampling;
            let model = self.run_ensemble(&self.res.system, &params, &cfg)?;
            cfg.osmotic = false;
            let bohm = self.run_ensemble(&self.res.system, &params, &cfg)?;
            let (a, b) = (&model.checkpoints[0].positions, &bohm.checkpoints[0].positions);
            let mut acc = 0.0;
            for (p, q) in a.iter().zip(b) {
                for d in 0..grid.dims() {
                    let x = grid.axis(d).displacement(q[d], p[d], grid.boundary());
                    acc += x * x;
                }
            }
            let r = (acc / a.len() as f64).sqrt();
            rms.push(r);
            rows.push(vec![dt, o.horizon, r, o.trajectories as f64]);
        }
        let fit = fit_scaling(&o.dts, &rms)?;
        let verdicts = vec![Verdict::within("fluctuation_exponent", fit.exponent, o.exponent, o.tolerance)
            .with_detail(format!("fitted exponent {:.4} +/- {:.4}", fit.exponent, fit.stderr))];
        self.out.csv(
            "fluctuation_scaling.csv",
            ReportKind::FluctuationScaling.name(),
            "RMS distance between model and phase-gradient trajectories at the horizon",
            &["dt", "horizon", "rms_deviation", "trajectories"],
            rows,
        )?;
        Ok(ReportOutput {
            verdicts,
            diagnostics: json!({ "exponent": fit.exponent, "stderr": fit.stderr, "prefactor": fit.prefactor }),
        })
    }

    fn classical_limit(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let sc = self.res.scenario.clone();
        let o = &sc.classical_limit;
        let system = &self.res.system;
        let dims = self.res.grid.dims();
        let horizon = match o.horizon {
            Some(h) => h,
            None => system
                .axis_potentials()
                .iter()
                .find_map(|p| match p {
                    AxisPotential::Harmonic { omega, .. } => Some(2.0 * std::f64::consts::PI / omega),
                    _ => None,
                })
                .expect("validated"),
        };
        let dt = sc.model.dt;
        let stride = ((o.sample_every / dt).round() as usize).max(1);
        let steps = (horizon / dt).round() as usize;
        let mut times: Vec<f64> = (0..=steps).step_by(stride).map(|k| k as f64 * dt).collect();
        if *times.last().unwrap() < steps as f64 * dt {
            times.push(steps as f64 * dt);
        }
        let mut devs = Vec::new();
        let mut rows = Vec::new();
        let mut drift = Vec::new();
        for &scale in &o.scales {
            let params = sc.model.scaled(scale);
            let mut cfg = EnsembleConfig::new(sc.ensemble_size, sc.seed, horizon);
            cfg.checkpoints = times.clone();
            cfg.sampling = sc.fields.sampling;
            let ens = self.run_ensemble(system, &params, &cfg)?;
            let c0 = &ens.checkpoints[0];
            let ms = momentum_samples(&c0.positions, &c0.signs, &c0.fields, &params)?;
            let q0: Vec<f64> = (0..dims).map(|d| moments::mean(&ens.coordinates(0, d))).collect();
            let p0: Vec<f64> = (0..dims).map(|d| moments::mean(&ms.component(d))).collect();
            let oracle = integrate_hamilton(&q0, &p0, system, dt, horizon)?;
            drift.push(oracle.max_energy_drift(system));
            let mut worst: f64 = 0.0;
            for (k, c) in ens.checkpoints.iter().enumerate() {
                let mut dev2 = 0.0;
                let mut row = vec![scale, c.time];
                for d in 0..dims {
                    let m = moments::mean(&ens.coordinates(k, d));
                    let cq = oracle.position_at(c.time, d);
                    dev2 += (m - cq) * (m - cq);
                    if d == 0 {
                        row.push(m);
                        row.push(cq);
                    }
                }
                worst = worst.max(dev2.sqrt());
                rows.push(row);
            }
            devs.push(worst);
        }
        let mut verdicts = Vec::new();
        let monotone = devs.windows(2).all(|w| w[1] < w[0]);
        verdicts.push(Verdict::flag(
            "classical_deviation_monotone",
            monotone,
            format!("max deviation per scale {:?}", devs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()),
        ));
        verdicts.push(Verdict::below(
            format!("classical_deviation[scale={}]", o.scales.last().unwrap()),
            *devs.last().unwrap(),
            o.final_tolerance,
        ));
        self.out.csv(
            "classical_limit.csv",
            ReportKind::ClassicalLimit.name(),
            "ensemble-mean position against the classical trajectory per lambda scale",
            &["scale", "time", "ensemble_mean_q", "classical_q"],
            rows,
        )?;
        Ok(ReportOutput {
            verdicts,
            diagnostics: json!({
                "horizon": horizon,
                "scales": o.scales,
                "max_deviation": devs,
                "oracle_energy_drift": drift,
            }),
        })
    }

    fn information_balance(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let res = self.res;
        let sc = &res.scenario;
        let o = &sc.information_balance;
        let mut states: Vec<(String, InitialState)> = vec![(initial_label(&res.initial), res.initial.clone())];
        for s in &o.extra_states {
            states.push((s.kind().to_string(), InitialState::Single(s.clone())));
        }
        let lambda_is_hbar = (sc.model.lambda_mag - res.hbar).abs() < 1e-12 && sc.model.lambda_windows.is_empty();
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        let mut profile = Vec::new();
        let mut diag = Vec::new();
        for (label, state) in &states {
            for &t in &o.times {
                let base = balance_level(res, state, t, 1, sc.propagator.dt_solver, lambda_is_hbar)?;
                for i in 0..base.grid.len() {
                    if base.residual.bulk[i] {
                        let q = base.grid.position(i);
                        profile.push(vec![t, q[0], q[1], base.residual.values[i]]);
                    }
                }
                let mut levels = Vec::new();
                let ladder_dt = o.refine_from_dt.unwrap_or(sc.propagator.dt_solver);
                for level in 0..=o.refinements {
                    let l = if level == 0 && o.refine_from_dt.is_none() {
                        base.summary()
                    } else {
                        let f = 1usize << level;
                        balance_level(res, state, t, f, ladder_dt / f as f64, false)?.summary()
                    };
                    levels.push(l);
                }
                let name = |what: &str| format!("{what}[{label},t={}]", tag(t));
                let (r0, s0, single0) = (base.residual.max_abs(), base.spatial_max, base.single);
                verdicts.push(Verdict::below(name("sign_averaged_residual"), r0, o.threshold));
                verdicts.push(Verdict::below(name("spatial_residual"), s0, SPATIAL_ROUNDOFF));
                if let Some(d) = single0 {
                    verdicts.push(Verdict::below(name("single_sign_identity"), d, o.threshold));
                }
                for w in levels.windows(2) {
                    let (r_coarse, r_fine) = (w[0].2, w[1].2);
                    let order = (r_coarse / r_fine).log2();
                    let v = if r_coarse < o.floor {
                        Verdict::flag(
                            name("residual_refinement"),
                            r_fine < o.floor,
                            format!("residual at roundoff floor: {r_coarse:.3e} -> {r_fine:.3e} (floor {:.0e})", o.floor),
                        )
                    } else {
                        Verdict::at_least(name("residual_refinement_order"), order, o.min_order)
                            .with_detail(format!("{r_coarse:.3e} -> {r_fine:.3e}, observed order {order:.2}"))
                    };
                    verdicts.push(v);
                }
                rows.push(vec![t, 0.0, base.grid.axis(0).spacing(), base.dt_solver, r0, s0, single0.unwrap_or(f64::NAN)]);
                for (level, (dq, dts, r, s, single)) in levels.iter().enumerate() {
                    rows.push(vec![t, (level + 1) as f64, *dq, *dts, *r, *s, single.unwrap_or(f64::NAN)]);
                }
                diag.push(json!({
                    "state": label,
                    "time": t,
                    "residual": r0,
                    "ladder_residuals": levels.iter().map(|l| l.2).collect::<Vec<_>>(),
                    "spatial": levels.iter().map(|l| l.3).collect::<Vec<_>>(),
                }));
            }
        }
        let name = ReportKind::InformationBalance.name();
        self.out.csv(
            "information_balance.csv",
            name,
            "max bulk residuals per state and time; level 0 is the scenario resolution, levels 1.. the refinement ladder (state order as in the manifest)",
            &["time", "level", "dq", "dt_solver", "sign_averaged_residual", "spatial_residual", "single_sign_identity_gap"],
            rows,
        )?;
        self.out.csv(
            "balance_residual_profile.csv",
            name,
            "pointwise sign-averaged residual on the bulk region, unrefined grid, all states in order",
            &["time", "q0", "q1", "residual"],
            profile,
        )?;
        Ok(ReportOutput { verdicts, diagnostics: json!({ "states": states.iter().map(|s| &s.0).collect::<Vec<_>>(), "checks": diag }) })
    }

    fn uncertainty(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let sc = self.res.scenario.clone();
        let hbar = self.res.hbar;
        let ens = self.main()?;
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        let mut diag = Vec::new();
        for c in &ens.checkpoints {
            let params = &sc.model;
            let ms = momentum_samples(&c.positions, &c.signs, &c.fields, params)?;
            let q: Vec<f64> = ms.kept.iter().map(|&i| c.positions[i][0]).collect();
            let p = ms.component(0);
            let r = uncertainty_product(&q, &p)?;
            let fb = fisher_bound(&c.fields, 0, params.lambda_mag_at(c.time))?;
            let floor = 0.5 * hbar * (1.0 - 3.0 * r.stat_err);
            verdicts.push(
                Verdict::at_least(format!("uncertainty_product[t={}]", tag(c.time)), r.product, floor)
                    .with_detail(format!("{:.5} >= hbar/2 (1 - 3 x {:.2e})", r.product, r.stat_err)),
            );
            if sc.uncertainty.equality {
                verdicts.push(Verdict::relative(
                    format!("uncertainty_equality[t={}]", tag(c.time)),
                    r.product,
                    0.5 * hbar,
                    sc.uncertainty.equality_tolerance,
                ));
            }
            rows.push(vec![c.time, r.n as f64, r.sigma_q, r.sigma_p, r.product, r.stat_err, fb.product, fb.osmotic_bound]);
            diag.push(json!({ "time": c.time, "excluded_at_nodes": ms.excluded, "fisher": fb }));
        }
        self.out.csv(
            "uncertainty.csv",
            ReportKind::Uncertainty.name(),
            "position and model-momentum spreads per checkpoint, with the grid Fisher bound",
            &["time", "n", "sigma_q", "sigma_p", "product", "stat_err", "grid_product", "fisher_bound"],
            rows,
        )?;
        Ok(ReportOutput { verdicts, diagnostics: json!({ "checkpoints": diag }) })
    }

    fn operator_averages(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let sc = self.res.scenario.clone();
        let res = self.res;
        let ens = self.main()?;
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        for c in &ens.checkpoints {
            let Some(psi) = &c.psi else {
                return Err(RunError::Validation(format!("no exact wave function at checkpoint t = {}", c.time)));
            };
            let ms = momentum_samples(&c.positions, &c.signs, &c.fields, &sc.model)?;
            let kept: Vec<[f64; 2]> = ms.kept.iter().map(|&i| c.positions[i]).collect();
            for (k, &obs) in res.observables.iter().enumerate() {
                let cmp = expectation_compare(&kept, &ms.p, psi, &res.system, obs, 0, res.hbar)?;
                // samples without spread (plane waves) agree only to roundoff
                let se = cmp.std_error.max(SPREAD_FLOOR * cmp.operator.abs().max(1.0));
                let z = z_score(cmp.model, cmp.operator, se);
                verdicts.push(Verdict::z(
                    format!("operator_average[{},t={}]", obs.name(), tag(c.time)),
                    cmp.model,
                    cmp.operator,
                    z,
                    sc.operator_averages.z_max,
                ));
                rows.push(vec![c.time, k as f64, cmp.model, cmp.operator, cmp.std_error, z]);
            }
        }
        self.out.csv(
            "operator_averages.csv",
            ReportKind::OperatorAverages.name(),
            "trajectory averages against grid operator averages; observable index follows the scenario list",
            &["time", "observable", "model", "operator", "std_error", "z"],
            rows,
        )?;
        Ok(ReportOutput {
            verdicts,
            diagnostics: json!({ "observables": res.observables.iter().map(|o| o.name()).collect::<Vec<_>>() }),
        })
    }

    fn locality(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let res = self.res;
        let sc = res.scenario.clone();
        let o = sc.locality.clone().expect("validated");
        let pots = res.system.axis_potentials();
        let alt = ClassicalSystem::new(res.system.masses().to_vec(), vec![pots[0].clone(), o.alternative.clone()])?;
        let mut cfg = self.ensemble_config();
        cfg.record_paths = 0;
        let b = self.run_ensemble(&alt, &sc.model, &cfg)?;
        let a = self.main()?;
        let report = marginal_invariance_test(a, &b, res.initial.is_product())?;
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        match &report {
            MarginalReport::Compared { checkpoints } => {
                for c in checkpoints {
                    verdicts.push(Verdict::below(format!("marginal_ks[t={}]", tag(c.time)), c.ks, c.band));
                    rows.push(vec![c.time, c.ks, c.band, c.max_path_difference]);
                }
            }
            MarginalReport::OutOfScope { .. } => {}
        }
        let sep = check_transition_separability(sc.model.lambda_mag, o.separability_samples, sc.seed)?;
        verdicts.push(Verdict::below("deviation_correlation", sep.correlation.abs(), sep.correlation_band));
        for d in 0..2 {
            verdicts.push(Verdict::relative(format!("deviation_marginal_mean[{d}]"), sep.mean_abs[d], 0.5 * sep.lambda.abs(), 0.01));
            verdicts.push(Verdict::below(format!("deviation_marginal_ks[{d}]"), sep.ks[d], sep.ks_band));
        }
        let InitialState::Pair(pair) = &res.initial else { unreachable!("validated") };
        let [s1, s2] = pair.factors();
        let decomposition = if pair.is_product() {
            let sys1 = res.system.factor(0)?;
            let sys2 = res.system.factor(1)?;
            let g1 = SpatialGrid::line(res.grid.axis(0).clone(), res.grid.boundary());
            let g2 = SpatialGrid::line(res.grid.axis(1).clone(), res.grid.boundary());
            let psi1 = analytic_state(s1, &g1, res.hbar, sys1.masses()[0], 0.0)?;
            let psi2 = analytic_state(s2, &g2, res.hbar, sys2.masses()[0], 0.0)?;
            let ps = ProductScenario::new(sys1, sys2, psi1, psi2)?;
            let r = check_decomposition(&ps, o.decomposition_time, res.hbar, &sc.propagator)?;
            verdicts.push(Verdict::below("additivity_defect", r.max_defect(), o.defect_tolerance));
            Some(r)
        } else {
            None
        };
        self.out.csv(
            "locality_marginals.csv",
            ReportKind::Locality.name(),
            "particle-1 two-sample KS between runs with the original and swapped second potential",
            &["time", "ks", "band_99", "max_path_difference"],
            rows,
        )?;
        Ok(ReportOutput {
            verdicts,
            diagnostics: json!({ "marginals": report, "separability": sep, "decomposition": decomposition }),
        })
    }

    fn cross_validation(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let res = self.res;
        let sc = &res.scenario;
        let o = &sc.solver_cross_validation;
        let mut states: Vec<AnalyticState> = match &res.initial {
            InitialState::Single(s) => vec![s.clone()],
            InitialState::Pair(_) => Vec::new(),
        };
        states.extend(o.extra_states.iter().cloned());
        let steps = (o.duration / sc.propagator.dt_solver).round() as usize;
        let mut verdicts = Vec::new();
        let mut rows = Vec::new();
        let mut diag = Vec::new();
        for (k, s) in states.iter().enumerate() {
            let psi0 = analytic_state(s, &res.grid, res.hbar, res.system.masses()[0], 0.0)?;
            let run = |method: Method| {
                let mut cfg = sc.propagator.clone();
                cfg.method = method;
                cfg.steps = steps;
                cfg.record_every = 0;
                propagate(&psi0, &res.system, res.hbar, &cfg)
            };
            let ss = run(Method::SplitStep)?;
            let cn = run(Method::CrankNicolson)?;
            let l2 = ss.last().l2_distance(cn.last());
            let label = s.kind();
            verdicts.push(Verdict::below(format!("split_step_vs_crank_nicolson[{label}]"), l2, o.l2_tolerance));
            verdicts.push(Verdict::below(format!("norm_drift_split_step[{label}]"), ss.norm_drift, o.norm_tolerance));
            verdicts.push(Verdict::below(format!("norm_drift_crank_nicolson[{label}]"), cn.norm_drift, o.norm_tolerance));
            let exact = if state_matches_potential(s, &res.system.axis_potentials()[0]) {
                let e = analytic_state(s, &res.grid, res.hbar, res.system.masses()[0], ss.last().time())?;
                Some((ss.last().l2_distance(&e), cn.last().l2_distance(&e)))
            } else {
                None
            };
            rows.push(vec![
                k as f64,
                ss.last().time(),
                l2,
                ss.norm_drift,
                cn.norm_drift,
                exact.map_or(f64::NAN, |e| e.0),
                exact.map_or(f64::NAN, |e| e.1),
            ]);
            diag.push(json!({
                "state": label,
                "l2": l2,
                "energy_drift": [ss.energy_drift, cn.energy_drift],
                "stability_ratio": cn.stability_ratio,
                "l2_to_closed_form": exact.map(|e| [e.0, e.1]),
            }));
        }
        self.out.csv(
            "solver_cross_validation.csv",
            ReportKind::SolverCrossValidation.name(),
            "split-step against Crank-Nicolson after the same duration; state index follows the manifest",
            &["state", "time", "l2_difference", "norm_drift_split_step", "norm_drift_crank_nicolson", "l2_split_step_exact", "l2_crank_nicolson_exact"],
            rows,
        )?;
        Ok(ReportOutput { verdicts, diagnostics: json!({ "states": diag }) })
    }

    fn determinism(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let threads = self.res.scenario.determinism.threads;
        let mut cfg = self.ensemble_config();
        cfg.record_paths = 0;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Io(format!("thread pool: {e}")))?;
        let system = self.res.system.clone();
        let model = self.res.scenario.model.clone();
        let again = pool.install(|| self.run_ensemble(&system, &model, &cfg))?;
        let first = self.main()?;
        let mut differing = 0usize;
        for (a, b) in first.checkpoints.iter().zip(&again.checkpoints) {
            differing += a
                .positions
                .iter()
                .zip(&b.positions)
                .zip(a.signs.iter().zip(&b.signs))
                .filter(|((p, q), (s, r))| p[0].to_bits() != q[0].to_bits() || p[1].to_bits() != q[1].to_bits() || s != r)
                .count();
        }
        let same = differing == 0 && first.checkpoints.len() == again.checkpoints.len();
        Ok(ReportOutput {
            verdicts: vec![Verdict::flag(
                "bitwise_rerun",
                same,
                format!("{differing} differing trajectory states after rerunning on {threads} threads"),
            )],
            diagnostics: json!({ "threads": threads, "differing": differing }),
        })
    }

    fn trajectories(&mut self) -> std::result::Result<ReportOutput, RunError> {
        let ens = self.main()?.clone();
        let mut rows = Vec::new();
        for p in &ens.paths {
            for (k, t) in p.times.iter().enumerate() {
                rows.push(vec![p.index as f64, *t, p.q[k][0], p.q[k][1], p.signs[k] as f64]);
            }
        }
        let mut points = Vec::new();
        for c in &ens.checkpoints {
            for (i, q) in c.positions.iter().enumerate() {
                points.push(vec![c.time, i as f64, q[0], q[1], c.signs[i] as f64]);
            }
        }
        let name = ReportKind::Trajectories.name();
        self.out.csv("paths.csv", name, "sampled trajectories (q1 is zero on line grids)", &["index", "time", "q0", "q1", "sign"], rows)?;
        self.out.csv(
            "checkpoints.csv",
            name,
            "every trajectory position and current sign at each checkpoint",
            &["time", "index", "q0", "q1", "sign"],
            points,
        )?;
        Ok(ReportOutput {
            verdicts: Vec::new(),
            diagnostics: json!({ "paths": ens.paths.len(), "node_events": ens.total_node_events() }),
        })
    }
}

/// Spatial balance residuals are identities; anything above this is not roundoff.
pub const SPATIAL_ROUNDOFF: f64 = 1e-10;

/// Relative spread below which trajectory samples count as exact.
pub const SPREAD_FLOOR: f64 = 1e-10;

struct BalanceLevel {
    grid: SpatialGrid,
    dt_solver: f64,
    residual: crate::stochastic::BalanceResidual,
    spatial_max: f64,
    single: Option<f64>,
}

impl BalanceLevel {
    fn summary(&self) -> (f64, f64, f64, f64, Option<f64>) {
        (self.grid.axis(0).spacing(), self.dt_solver, self.residual.max_abs(), self.spatial_max, self.single)
    }
}

/// Balance residuals between solver frames at `t` and `t + dt_solver`, on the
/// scenario grid with `f` times the points per axis.
fn balance_level(
    res: &Resolved,
    state: &InitialState,
    t: f64,
    f: usize,
    dt_solver: f64,
    single_sign: bool,
) -> std::result::Result<BalanceLevel, RunError> {
    let sc = &res.scenario;
    let axes: Vec<Axis> =
        res.grid.axes().iter().map(|a| Axis::new(a.origin(), a.extent(), a.len() * f)).collect::<Result<_>>()?;
    let grid = SpatialGrid::new(axes, res.grid.boundary())?;
    let mut cfg = sc.propagator.clone();
    cfg.dt_solver = dt_solver;
    let mut a = initial_psi(state, &grid, &res.system, res.hbar)?;
    let mut prop = Propagator::new(&grid, &res.system, res.hbar, &cfg)?;
    let steps = (t / dt_solver).round() as usize;
    for k in 1..=steps {
        prop.step(&mut a);
        a.set_time(k as f64 * dt_solver);
    }
    let mut b = a.clone();
    prop.step(&mut b);
    b.set_time((steps + 1) as f64 * dt_solver);
    let ops = FieldOps::new(&grid)?;
    let frames = BalanceFrames::new(&ops, &a, &b, res.hbar)?;
    let residual = sign_averaged_balance_residual(&frames, &sc.model, &res.system)?;
    let spatial_max = spatial_balance_residual(&frames.f0, 1, &sc.model)
        .iter()
        .flat_map(|c| c.iter().zip(frames.f0.node_mask()).filter(|(_, n)| !**n).map(|(v, _)| v.abs()))
        .fold(0.0, f64::max);
    let single = if single_sign {
        let plus = information_balance_residual(&frames, 1, &sc.model, &res.system)?;
        let pred = predicted_single_sign_residual(&frames, 1, &res.system)?;
        Some(plus.max_abs_difference(&pred))
    } else {
        None
    };
    Ok(BalanceLevel { grid, dt_solver, residual, spatial_max, single })
}

fn initial_label(s: &InitialState) -> String {
    match s {
        InitialState::Single(a) => a.kind().to_string(),
        InitialState::Pair(p) => {
            let [a, b] = p.factors();
            format!("{}x{}", a.kind(), b.kind())
        }
    }
}
