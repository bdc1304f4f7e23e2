//! Dispatch from a validated config to the solvers.

use std::collections::BTreeMap;

use pairlind::continuum::{
    characteristic, evolve_density, mean_excited, uniform_grid, ContinuumDistribution,
    Representation,
};
use pairlind::ensemble::{
    build_generator, exact_nbody_evolve, factorization_defect, gillespie_decay, EnsembleState,
    MasterMethod, MasterSolution, McConfig, EXPANSION_ERROR_BUDGET,
};
use pairlind::meanfield::{
    dephasing_rate, fit_exponential_rate, integrate, integrate_sampled, richardson_error, Axis,
    ModelKind, ModelSpec, BALL_OVERSHOOT_REJECT,
};
use pairlind::qcore::{bloch_to_density, BlochVector, PairGenerator};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    ContinuumConfig, Experiment, FactorizationConfig, GillespieConfig, HemisphereConfig,
    InitialData, MasterCurveConfig, ModelConfig, ModelName, RateScanConfig, TrajectoryConfig,
};
use crate::output::{Attachment, Cell, Table};
use crate::verify;

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    pub attachments: Vec<Attachment>,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, Value>,
    /// False only when a verification check failed.
    pub passed: bool,
}

impl RunOutput {
    fn new(table: Table) -> Self {
        RunOutput {
            table,
            attachments: Vec::new(),
            tolerances: BTreeMap::new(),
            notes: BTreeMap::new(),
            passed: true,
        }
    }

    fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }

    fn note(mut self, name: &str, value: Value) -> Self {
        self.notes.insert(name.to_string(), value);
        self
    }
}

pub type RunResult = Result<RunOutput, pairlind::Error>;

/// `samples` evenly spaced times from 0 to `t_end`, both included.
pub fn linspace(t_end: f64, samples: usize) -> Vec<f64> {
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|k| {
            if k + 1 == samples {
                t_end
            } else {
                t_end * k as f64 / last
            }
        })
        .collect()
}

fn bloch(u: [f64; 3]) -> Result<BlochVector, pairlind::Error> {
    BlochVector::from_array(u)
}

pub fn model_spec(m: &ModelConfig) -> Result<ModelSpec, pairlind::Error> {
    let kind = match m.kind {
        ModelName::PairDecay => ModelKind::PairDecay,
        ModelName::PairDephasing => ModelKind::PairDephasing {
            theta: m.theta.unwrap_or(f64::NAN),
        },
        ModelName::SingletPurification => ModelKind::SingletPurification,
    };
    ModelSpec::new(kind, m.gamma)
}

fn trajectory(c: &TrajectoryConfig) -> RunResult {
    let model = model_spec(&c.model)?;
    let u0 = bloch(c.u0)?;
    let times = linspace(c.t_end, c.samples);
    let traj = integrate_sampled(&model, &u0, &times, c.dt)?;
    let mut table = Table::new(["t", "u_x", "u_y", "u_z"]);
    for (t, u) in traj.iter() {
        table.push(vec![t.into(), u.x().into(), u.y().into(), u.z().into()]);
    }
    let estimate = richardson_error(&model, &u0, c.t_end, c.dt)?;
    Ok(RunOutput::new(table)
        .tolerance("dt", c.dt)
        .tolerance("ball_overshoot_reject", BALL_OVERSHOOT_REJECT)
        .note("richardson_error_at_t_end", json!(estimate))
        .note("max_norm", json!(traj.max_norm())))
}

/// Initial state for a rate scan: `u_x = transverse` when the ball leaves
/// room, otherwise the largest available `u_x`, never below `pole_offset`,
/// with `u_z` pulled inward to stay on the sphere.
pub fn scan_state(
    uz: f64,
    transverse: f64,
    pole_offset: f64,
) -> Result<BlochVector, pairlind::Error> {
    let room = (1.0 - uz * uz).max(0.0).sqrt();
    if room >= transverse {
        BlochVector::new(transverse, 0.0, uz)
    } else {
        let ux = pole_offset.max(room);
        BlochVector::new(ux, 0.0, uz.signum() * (1.0 - ux * ux).sqrt())
    }
}

fn rate_scan(c: &RateScanConfig) -> RunResult {
    let model = ModelSpec::pair_dephasing(c.theta, c.gamma)?;
    let rows: Vec<Result<Vec<Cell>, pairlind::Error>> = c
        .u_z
        .par_iter()
        .map(|&uz| {
            let u0 = scan_state(uz, c.transverse, c.pole_offset)?;
            let g = dephasing_rate(c.theta, c.gamma, u0.z());
            // Five e-folds, or the whole horizon for (near-)frozen states.
            let t_end = if g > 0.0 {
                (5.0 / g).min(c.t_max)
            } else {
                c.t_max
            };
            let traj = integrate(&model, &u0, t_end, c.dt)?;
            let r = fit_exponential_rate(&traj, Axis::X)?;
            let predicted = r.predicted_rate.unwrap_or(g);
            Ok(vec![
                uz.into(),
                r.fitted_rate.into(),
                predicted.into(),
                r.residual.into(),
            ])
        })
        .collect();
    let mut table = Table::new(["u_z", "fitted_rate", "predicted_rate", "residual"]);
    for row in rows {
        table.push(row?);
    }
    Ok(RunOutput::new(table)
        .tolerance("dt", c.dt)
        .tolerance("pole_offset", c.pole_offset)
        .note("fit_samples", json!(pairlind::meanfield::FIT_SAMPLES))
        .note(
            "fit_window_e_folds",
            json!(pairlind::meanfield::FIT_WINDOW_RATES),
        ))
}

fn hemisphere(c: &HemisphereConfig) -> RunResult {
    let model = ModelSpec::singlet_purification();
    let times = linspace(c.t_end, c.samples);
    let trajs: Vec<_> = c
        .initial_states
        .par_iter()
        .map(|&u| integrate_sampled(&model, &bloch(u)?, &times, c.dt))
        .collect();
    let mut table = Table::new(["state", "t", "u_x", "u_y", "u_z", "purity"]);
    for (k, traj) in trajs.into_iter().enumerate() {
        for (t, u) in traj?.iter() {
            table.push(vec![
                k.into(),
                t.into(),
                u.x().into(),
                u.y().into(),
                u.z().into(),
                u.purity().into(),
            ]);
        }
    }
    Ok(RunOutput::new(table).tolerance("dt", c.dt))
}

/// Mean excited fraction of the continuum limit started fully excited.
fn continuum_survival(gamma_t: f64) -> f64 {
    let p0 = ContinuumDistribution::point_mass(1.0).expect("1 lies in [0, 1]");
    mean_excited(&evolve_density(&p0, gamma_t).expect("time is finite and >= 0"))
}

fn master_curve(c: &MasterCurveConfig) -> RunResult {
    let times = linspace(c.t_end, c.samples);
    let columns: Vec<Result<(Vec<f64>, MasterMethod), pairlind::Error>> = c
        .n_atoms
        .par_iter()
        .map(|&n| {
            let gen = build_generator(n, c.gamma)?;
            let sol = MasterSolution::new(&gen, &EnsembleState::fully_excited(n)?)?;
            Ok((
                times.iter().map(|&t| sol.excited_fraction_at(t)).collect(),
                sol.method(),
            ))
        })
        .collect();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend(c.n_atoms.iter().map(|n| format!("survival_N{n}")));
    header.push("survival_inf".into());
    let mut table = Table::new(header);
    let mut methods = serde_json::Map::new();
    let mut curves = Vec::new();
    for (n, col) in c.n_atoms.iter().zip(columns) {
        let (curve, method) = col?;
        methods.insert(format!("N{n}"), json!(format!("{method:?}")));
        curves.push(curve);
    }
    for (k, &t) in times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(curves.iter().map(|curve| Cell::from(curve[k])));
        row.push(continuum_survival(c.gamma * t).into());
        table.push(row);
    }
    Ok(RunOutput::new(table)
        .tolerance("expansion_error_budget", EXPANSION_ERROR_BUDGET)
        .note("master_methods", Value::Object(methods)))
}

fn gillespie(c: &GillespieConfig) -> RunResult {
    let cfg = McConfig {
        n_atoms: c.n_atoms,
        gamma: c.gamma,
        runs: c.runs,
        seed: c.seed,
        sample_times: c.sample_times.clone(),
    };
    let samples = gillespie_decay(&cfg, c.n_atoms)?;
    let gen = build_generator(c.n_atoms, c.gamma)?;
    let sol = MasterSolution::new(&gen, &EnsembleState::fully_excited(c.n_atoms)?)?;
    let (mean, se) = (samples.mean(), samples.std_error());
    let mut table = Table::new(["t", "mc_mean", "mc_std_error", "master"]);
    for (k, &t) in c.sample_times.iter().enumerate() {
        table.push(vec![
            t.into(),
            mean[k].into(),
            se[k].into(),
            sol.excited_fraction_at(t).into(),
        ]);
    }
    Ok(RunOutput::new(table)
        .note("seed", json!(c.seed))
        .note("runs", json!(c.runs))
        .note("master_method", json!(format!("{:?}", sol.method()))))
}

fn initial_distribution(c: &ContinuumConfig) -> Result<ContinuumDistribution, pairlind::Error> {
    match c.initial {
        InitialData::PointMass { x0 } => ContinuumDistribution::point_mass(x0),
        InitialData::Uniform => {
            ContinuumDistribution::density_from_fn(uniform_grid(c.grid_points), |_| 1.0)
        }
        InitialData::Beta { a, b } => {
            ContinuumDistribution::density_from_fn(uniform_grid(c.grid_points), |x| {
                x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0)
            })
        }
    }
}

/// Largest initial position carrying mass.
fn support_top(p: &ContinuumDistribution) -> f64 {
    match p.representation() {
        Representation::PointMasses(m) => m
            .iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(x, _)| *x)
            .fold(0.0, f64::max),
        Representation::Density { grid, values } => grid
            .iter()
            .zip(values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(x, _)| *x)
            .fold(0.0, f64::max),
    }
}

fn continuum_curve(c: &ContinuumConfig) -> RunResult {
    let p0 = initial_distribution(c)?;
    let top = support_top(&p0);
    let times = linspace(c.t_end, c.samples);
    let rows: Vec<Result<Vec<Cell>, pairlind::Error>> = times
        .par_iter()
        .map(|&t| {
            let p = evolve_density(&p0, t)?;
            Ok(vec![
                t.into(),
                mean_excited(&p).into(),
                characteristic(top, t).into(),
            ])
        })
        .collect();
    let mut table = Table::new(["t", "mean_excited", "support_edge"]);
    for row in rows {
        table.push(row?);
    }
    let mut out = RunOutput::new(table);
    if !c.profile_times.is_empty() {
        let Representation::Density { grid, .. } = p0.representation() else {
            unreachable!("validation restricts profiles to densities")
        };
        let mut header = vec!["x".to_string()];
        header.extend(c.profile_times.iter().map(|t| format!("p_t{t}")));
        let mut profile = Table::new(header);
        let evolved = c
            .profile_times
            .iter()
            .map(|&t| match evolve_density(&p0, t)?.representation() {
                Representation::Density { values, .. } => Ok(values.clone()),
                Representation::PointMasses(_) => unreachable!("densities stay densities"),
            })
            .collect::<Result<Vec<_>, pairlind::Error>>()?;
        for (i, &x) in grid.iter().enumerate() {
            let mut row: Vec<Cell> = vec![x.into()];
            row.extend(evolved.iter().map(|v| Cell::from(v[i])));
            profile.push(row);
        }
        out.attachments.push(Attachment {
            label: "profile".into(),
            table: profile,
        });
    }
    Ok(out
        .tolerance("density_mass", pairlind::continuum::DENSITY_MASS_TOL)
        .note("grid_points", json!(c.grid_points))
        .note("initial_mass", json!(p0.mass())))
}

fn factorization(c: &FactorizationConfig) -> RunResult {
    let u0 = bloch(c.u0)?;
    let gen = PairGenerator::pair_decay(c.gamma)?;
    let rho0 = bloch_to_density(&u0);
    let mf = integrate(&ModelSpec::pair_decay(c.gamma)?, &u0, c.t, c.dt)?
        .last()
        .1;
    let rho_mf = bloch_to_density(&mf);
    let defects: Vec<Result<f64, pairlind::Error>> = c
        .n_atoms
        .par_iter()
        .map(|&n| factorization_defect(&exact_nbody_evolve(n, &gen, &rho0, c.t, c.dt)?, &rho_mf))
        .collect();
    let mut table = Table::new(["n_atoms", "defect"]);
    for (&n, d) in c.n_atoms.iter().zip(defects) {
        table.push(vec![n.into(), d?.into()]);
    }
    Ok(RunOutput::new(table).tolerance("dt", c.dt).note(
        "defect",
        json!("trace distance between the reduced pair state and the mean-field product"),
    ))
}

/// Runs one experiment. Solver errors abort the run; failed verification
/// checks are reported through [`RunOutput::passed`].
pub fn execute(experiment: &Experiment) -> RunResult {
    match experiment {
        Experiment::MeanfieldTrajectory(c) => trajectory(c),
        Experiment::DephasingRateScan(c) => rate_scan(c),
        Experiment::HemisphereScan(c) => hemisphere(c),
        Experiment::MasterCurve(c) => master_curve(c),
        Experiment::GillespieCurve(c) => gillespie(c),
        Experiment::ContinuumCurve(c) => continuum_curve(c),
        Experiment::FactorizationStudy(c) => factorization(c),
        Experiment::VerifySuite => {
            let checks = verify::run_all();
            let passed = checks.iter().all(|c| c.passed);
            let mut out = RunOutput::new(verify::to_table(&checks));
            out.passed = passed;
            Ok(out.note("checks", json!(checks.len())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_both_ends() {
        let t = linspace(10.0, 201);
        assert_eq!(t.len(), 201);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[200], 10.0);
        assert_eq!(t[100], 5.0);
    }

    #[test]
    fn scan_states_at_the_poles_stay_in_the_ball() {
        for uz in [-1.0, 1.0] {
            let u = scan_state(uz, 0.5, 1e-6).unwrap();
            assert_eq!(u.x(), 1e-6);
            assert!(u.norm() <= 1.0);
            assert!((u.z() - uz).abs() < 1e-12);
        }
        let u = scan_state(0.5, 0.5, 1e-6).unwrap();
        assert_eq!(u.to_array(), [0.5, 0.0, 0.5]);
    }

    #[test]
    fn support_top_finds_edge() {
        let p = ContinuumDistribution::point_masses(vec![(0.2, 0.5), (0.9, 0.5)]).unwrap();
        assert_eq!(support_top(&p), 0.9);
    }
}
