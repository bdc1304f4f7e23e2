//! Built-in verification suite behind `pairlind verify`.
//!
//! Each check returns a pass flag and a one-line detail. Timing budgets are
//! enforced but not written to the output table, so a passing run produces
//! the same bytes every time.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::time::Instant;

use pairlind::continuum::{
    characteristic, evolve_density, mean_excited, uniform_grid, ContinuumDistribution,
    Representation, DEFAULT_GRID_POINTS,
};
use pairlind::ensemble::{
    build_generator, evolve_uniformized, exact_nbody_evolve, factorization_defect, gillespie_decay,
    EnsembleState, MasterMethod, MasterSolution, McConfig,
};
use pairlind::meanfield::{
    decay_uz_exact, dephasing_rate, fit_exponential_rate, hemisphere_exact, integrate, model_rhs,
    Axis, ModelSpec, Trajectory,
};
use pairlind::qcore::{
    bloch_derivative, bloch_to_density, meanfield_rhs, pauli, BlochVector, PairGenerator,
    Physicality,
};
use pairlind::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::output::Table;
use crate::run::scan_state;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Worst physicality over every state the suite produces.
struct Audit {
    trace_error: f64,
    min_eigenvalue: f64,
    max_norm: f64,
    states: usize,
}

impl Audit {
    fn matrix(&mut self, p: Physicality) {
        self.trace_error = self.trace_error.max(p.trace_error);
        self.min_eigenvalue = self.min_eigenvalue.min(p.min_eigenvalue);
        self.states += 1;
    }

    fn bloch(&mut self, u: &BlochVector) {
        self.max_norm = self.max_norm.max(u.norm());
        self.matrix(Physicality::of(bloch_to_density(u).matrix()));
    }

    fn trajectory(&mut self, t: &Trajectory) {
        t.states().iter().for_each(|u| self.bloch(u));
    }

    fn probabilities(&mut self, p: &[f64]) {
        let total: f64 = p.iter().sum();
        self.trace_error = self.trace_error.max((total - 1.0).abs());
        self.min_eigenvalue = p.iter().copied().fold(self.min_eigenvalue, f64::min);
        self.states += 1;
    }
}

type Outcome = Result<(bool, String), pairlind::Error>;

fn random_states(seed: u64, count: usize) -> Vec<BlochVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| BlochVector::sample_ball(&mut rng))
        .collect()
}

fn budget(start: Instant, limit_s: f64) -> (bool, String) {
    let s = start.elapsed().as_secs_f64();
    (
        s < limit_s,
        if s < limit_s {
            String::new()
        } else {
            format!("; over the {limit_s} s budget")
        },
    )
}

fn decay_law(a: &mut Audit) -> Outcome {
    let start = Instant::now();
    let traj = integrate(
        &ModelSpec::pair_decay(1.0)?,
        &BlochVector::SOUTH,
        20.0,
        1e-3,
    )?;
    let (fast, note) = budget(start, 1.0);
    a.trajectory(&traj);
    let err = traj
        .iter()
        .map(|(t, u)| (u.z() - decay_uz_exact(-1.0, 1.0, t)).abs())
        .fold(0.0, f64::max);
    Ok((
        err <= 1e-8 && fast,
        format!("max |u_z - exact| = {err:.3e}{note}"),
    ))
}

fn parabolas(a: &mut Audit) -> Outcome {
    let model = ModelSpec::pair_decay(1.0)?;
    let mut worst: f64 = 0.0;
    let states: Vec<_> = random_states(7, 40)
        .into_iter()
        .filter(|u| 1.0 - u.z() >= 1e-3)
        .take(20)
        .collect();
    for u0 in &states {
        let traj = integrate(&model, u0, 20.0, 1e-3)?;
        a.trajectory(&traj);
        let c0 = u0.x() * u0.x() / (1.0 - u0.z());
        for (_, u) in traj.iter() {
            worst = worst.max((u.x() * u.x() / (1.0 - u.z()) - c0).abs());
        }
    }
    Ok((
        worst <= 1e-8 && states.len() == 20,
        format!(
            "max invariant drift {worst:.3e} over {} states",
            states.len()
        ),
    ))
}

fn scan(theta: f64, a: &mut Audit) -> Result<Vec<f64>, pairlind::Error> {
    let model = ModelSpec::pair_dephasing(theta, 1.0)?;
    let mut rates = Vec::new();
    for uz in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let u0 = scan_state(uz, 0.5, 1e-6)?;
        let g = dephasing_rate(theta, 1.0, u0.z());
        let t_end = if g > 0.0 { (5.0 / g).min(40.0) } else { 40.0 };
        let traj = integrate(&model, &u0, t_end, 1e-3)?;
        a.trajectory(&traj);
        rates.push(fit_exponential_rate(&traj, Axis::X)?.fitted_rate);
    }
    Ok(rates)
}

fn dephasing_rates(a: &mut Audit) -> Outcome {
    let quarter = scan(FRAC_PI_4, a)?;
    let err = [-1.0, -0.5, 0.0, 0.5, 1.0]
        .iter()
        .zip(&quarter)
        .map(|(uz, r)| (r - (1.0 + uz) / 2.0).abs())
        .fold(0.0, f64::max);
    let half = scan(FRAC_PI_2, a)?;
    let spread = half.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - half.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((
        err <= 1e-6 && spread <= 1e-9,
        format!("pi/4 rate error {err:.3e}; pi/2 spread {spread:.3e}"),
    ))
}

fn hemisphere(a: &mut Audit) -> Outcome {
    let model = ModelSpec::singlet_purification();
    let (mut err, mut drift): (f64, f64) = (0.0, 0.0);
    let mut dipping = Vec::new();
    for u0 in [[0.0, 0.0, 0.0], [0.6, 0.0, -0.2], [0.3, 0.4, 0.0]] {
        let u0 = BlochVector::from_array(u0)?;
        let traj = integrate(&model, &u0, 20.0, 1e-3)?;
        a.trajectory(&traj);
        let (mut peak, mut dip) = (f64::NEG_INFINITY, 0.0f64);
        for (t, u) in traj.iter() {
            err = err.max((u.vector() - hemisphere_exact(&u0, t).vector()).amax());
            drift = drift
                .max((u.x() - u0.x()).abs())
                .max((u.y() - u0.y()).abs());
            peak = peak.max(u.purity());
            dip = dip.max(peak - u.purity());
        }
        if dip > f64::EPSILON {
            dipping.push(format!(
                "({}, {}, {}) dips {dip:.3e}",
                u0.x(),
                u0.y(),
                u0.z()
            ));
        }
    }
    let purity = if dipping.is_empty() {
        "purity non-decreasing".to_string()
    } else {
        format!("purity decreases: {}", dipping.join(", "))
    };
    Ok((
        err <= 1e-8 && drift < 1e-10 && dipping.is_empty(),
        format!("tanh error {err:.3e}; transverse drift {drift:.3e}; {purity}"),
    ))
}

fn singlet_identity(a: &mut Audit) -> Outcome {
    let gen = PairGenerator::singlet_purification(1.0)?;
    let sz = pauli()[2].clone();
    let mut worst: f64 = 0.0;
    for u in random_states(11, 100) {
        let rho = bloch_to_density(&u);
        a.matrix(rho.physicality());
        let expected = &sz * C64::from(rho.det() / 2.0);
        let diff = meanfield_rhs(&gen, &rho)? - expected;
        worst = worst.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok((
        worst <= 1e-12,
        format!("max deviation from det(rho)/2 sigma_z {worst:.3e}"),
    ))
}

fn spectrum(_: &mut Audit) -> Outcome {
    let mut ok = true;
    for n in [2usize, 4, 10, 100] {
        let gen = build_generator(n, 1.0)?;
        let g = gen.dense();
        let size = g.nrows();
        for j in 0..size {
            ok &= (j + 1..size).all(|i| g[(i, j)] == 0.0);
            ok &= g.column(j).sum() == 0.0;
            ok &= gen.rates()[j] == (j * (2 * j).saturating_sub(1)) as f64 / n as f64;
        }
    }
    Ok((
        ok,
        "triangular; eigenvalues n(2n-1)/N; zero column sums for N = 2, 4, 10, 100".into(),
    ))
}

fn survival(a: &mut Audit) -> Outcome {
    let start = Instant::now();
    let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
    let p0 = ContinuumDistribution::point_mass(1.0)?;
    let mut sup = Vec::new();
    for n in [16usize, 64, 256] {
        let sol =
            MasterSolution::new(&build_generator(n, 1.0)?, &EnsembleState::fully_excited(n)?)?;
        let mut d: f64 = 0.0;
        for &t in &times {
            a.probabilities(sol.state_at(t).probs());
            d = d.max((sol.excited_fraction_at(t) - mean_excited(&evolve_density(&p0, t)?)).abs());
        }
        sup.push(d);
    }
    let (fast, note) = budget(start, 10.0);
    Ok((
        sup[0] > sup[1] && sup[1] > sup[2] && fast,
        format!(
            "sup distances {:.4e}, {:.4e}, {:.4e}{note}",
            sup[0], sup[1], sup[2]
        ),
    ))
}

fn monte_carlo(a: &mut Audit) -> Outcome {
    let start = Instant::now();
    let cfg = McConfig {
        n_atoms: 1000,
        gamma: 1.0,
        runs: 10_000,
        seed: 20_240_601,
        sample_times: vec![0.5, 1.0, 2.0, 5.0],
    };
    let s = gillespie_decay(&cfg, 1000)?;
    let sol = MasterSolution::new(
        &build_generator(1000, 1.0)?,
        &EnsembleState::fully_excited(1000)?,
    )?;
    let (fast, note) = budget(start, 60.0);
    let (mean, se) = (s.mean(), s.std_error());
    let mut worst: f64 = 0.0;
    for (k, &t) in cfg.sample_times.iter().enumerate() {
        a.probabilities(sol.state_at(t).probs());
        worst = worst.max((mean[k] - sol.excited_fraction_at(t)).abs() / se[k]);
    }
    Ok((
        worst <= 3.0 && fast,
        format!("max deviation {worst:.3} standard errors{note}"),
    ))
}

fn factorization(a: &mut Audit) -> Outcome {
    let start = Instant::now();
    let gen = PairGenerator::pair_decay(1.0)?;
    let rho0 = bloch_to_density(&BlochVector::SOUTH);
    let mf = integrate(&ModelSpec::pair_decay(1.0)?, &BlochVector::SOUTH, 1.0, 1e-3)?
        .last()
        .1;
    let rho_mf = bloch_to_density(&mf);
    let mut d = Vec::new();
    for n in [4usize, 6, 8] {
        let rho = exact_nbody_evolve(n, &gen, &rho0, 1.0, 1e-3)?;
        a.matrix(rho.physicality());
        d.push(factorization_defect(&rho, &rho_mf)?);
    }
    let (fast, note) = budget(start, 120.0);
    let ratio = d[0] / d[2];
    Ok((
        d[0] > d[1] && d[1] > d[2] && (1.5..=3.0).contains(&ratio) && fast,
        format!(
            "defects {:.4e}, {:.4e}, {:.4e}; ratio {ratio:.3}{note}",
            d[0], d[1], d[2]
        ),
    ))
}

fn continuum(_: &mut Audit) -> Outcome {
    let delta = ContinuumDistribution::point_mass(1.0)?;
    let mut pos: f64 = 0.0;
    for t in [1.0, 3.0, 10.0] {
        pos = pos.max((mean_excited(&evolve_density(&delta, t)?) - characteristic(1.0, t)).abs());
    }
    let beta = ContinuumDistribution::density_from_fn(uniform_grid(DEFAULT_GRID_POINTS), |x| {
        x.powi(3) * (1.0 - x).powi(3)
    })?;
    let mut mass: f64 = 0.0;
    for t in [0.0, 1.0, 5.0] {
        mass = mass.max((evolve_density(&beta, t)?.mass() - 1.0).abs());
    }
    let spread = ContinuumDistribution::point_masses(vec![(1.0, 0.5), (0.4, 0.5)])?;
    let mut semi: f64 = 0.0;
    for (t1, t2) in [(0.5, 1.5), (1.0, 3.0), (2.5, 7.5)] {
        let a = evolve_density(&evolve_density(&spread, t1)?, t2)?;
        let b = evolve_density(&spread, t1 + t2)?;
        if let (Representation::PointMasses(a), Representation::PointMasses(b)) =
            (a.representation(), b.representation())
        {
            for (p, q) in a.iter().zip(b) {
                semi = semi.max((p.0 - q.0).abs());
            }
        }
    }
    Ok((
        pos <= 1e-14 && mass <= 1e-6 && semi <= 1e-14,
        format!("position {pos:.1e}; mass {mass:.1e}; semigroup {semi:.1e}"),
    ))
}

fn generators(_: &mut Audit) -> Outcome {
    let gens = [
        PairGenerator::pair_decay(1.0)?,
        PairGenerator::pair_dephasing(0.3, 1.0)?,
        PairGenerator::singlet_purification(1.0)?,
    ];
    let trace = gens
        .iter()
        .map(|g| g.trace_annihilation_error())
        .fold(0.0, f64::max);
    let swap = gens.iter().all(|g| g.is_swap_symmetric(1e-12));
    Ok((
        trace <= 1e-12 && swap,
        format!("trace annihilation error {trace:.1e}; swap symmetric {swap}"),
    ))
}

fn routes_agree(_: &mut Audit) -> Outcome {
    let models = [
        ModelSpec::pair_decay(1.3)?,
        ModelSpec::pair_dephasing(0.7, 0.9)?,
        ModelSpec::singlet_purification(),
    ];
    let mut worst: f64 = 0.0;
    for m in &models {
        let gen = m.pair_generator();
        for u in random_states(5, 100) {
            worst = worst.max((model_rhs(m, &u) - bloch_derivative(&gen, &u)).amax());
        }
    }
    Ok((
        worst <= 1e-12,
        format!("closed-form vs partial-trace field {worst:.1e}"),
    ))
}

fn master_routes(_: &mut Audit) -> Outcome {
    let gen = build_generator(16, 1.0)?;
    let p0 = EnsembleState::fully_excited(16)?;
    let sol = MasterSolution::new(&gen, &p0)?;
    let mut worst: f64 = 0.0;
    for t in [0.5, 2.0, 8.0] {
        let a = sol.state_at(t);
        let b = evolve_uniformized(&gen, &p0, t);
        for (x, y) in a.probs().iter().zip(b.probs()) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok((
        sol.method() == MasterMethod::EigenExpansion && worst <= 1e-10,
        format!("eigen-expansion vs uniformization at N = 16: {worst:.1e}"),
    ))
}

fn support_bound(_: &mut Audit) -> Outcome {
    let grid = uniform_grid(1025);
    let p0 = ContinuumDistribution::density_from_fn(grid.clone(), |_| 1.0)?;
    let mut ok = true;
    for t in [0.5, 2.0, 9.0] {
        if let Representation::Density { values, .. } = evolve_density(&p0, t)?.representation() {
            ok &= grid
                .iter()
                .zip(values)
                .all(|(x, v)| *x <= 1.0 / (1.0 + t) || *v == 0.0);
        }
        ok &= (0..100).all(|k| {
            let (a, b) = (k as f64 / 100.0, (k + 1) as f64 / 100.0);
            characteristic(a, t) < characteristic(b, t)
        });
    }
    Ok((
        ok,
        "density vanishes above 1/(1+t); characteristics ordered".into(),
    ))
}

type CheckFn = fn(&mut Audit) -> Outcome;

const CHECKS: [(&str, CheckFn); 14] = [
    ("decay-law", decay_law),
    ("parabolic-trajectories", parabolas),
    ("dephasing-rate-interval", dephasing_rates),
    ("hemisphere-flow", hemisphere),
    ("singlet-identity", singlet_identity),
    ("generator-spectrum", spectrum),
    ("survival-convergence", survival),
    ("monte-carlo-vs-master", monte_carlo),
    ("pair-factorization", factorization),
    ("continuum-exactness", continuum),
    ("generator-structure", generators),
    ("field-routes-agree", routes_agree),
    ("master-routes-agree", master_routes),
    ("continuum-support", support_bound),
];

/// Runs every check in a fixed order; the last entry is the physicality
/// audit over everything produced before it.
pub fn run_all() -> Vec<Check> {
    let mut audit = Audit {
        trace_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_norm: 0.0,
        states: 0,
    };
    let mut out: Vec<Check> = CHECKS
        .iter()
        .map(|(name, f)| match f(&mut audit) {
            Ok((passed, detail)) => Check {
                name,
                passed,
                detail,
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect();
    out.push(Check {
        name: "global-physicality",
        passed: audit.trace_error <= 1e-10
            && audit.min_eigenvalue >= -1e-10
            && audit.max_norm <= 1.0 + 1e-8,
        detail: format!(
            "{} states; |Tr - 1| <= {:.1e}; min eigenvalue {:.1e}; max |u| {}",
            audit.states, audit.trace_error, audit.min_eigenvalue, audit.max_norm
        ),
    });
    out
}

pub fn to_table(checks: &[Check]) -> Table {
    let mut t = Table::new(["check", "passed", "detail"]);
    for c in checks {
        t.push(vec![
            c.name.into(),
            c.passed.into(),
            c.detail.clone().into(),
        ]);
    }
    t
}
