use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqe_basin::circuit::{self, AnsatzSpec, ParameterVector};
use vqe_basin::diagnostics::{
    self as diag, BasinEnsemble, BenchmarkEntry, BenchmarkRow, CsvTable, DisorderScanConfig,
    Ensemble, GradientVarianceRow, InitStrategy, Strategy,
};
use vqe_basin::geometry::{parse_xyz, MolecularGeometry};
use vqe_basin::hamiltonian::{build_chain_model, parse_hamiltonian, QubitHamiltonian};
use vqe_basin::optim::{circuit_basin_hopping, circuit_lbfgs, circuit_spsa, OptimizerReport};
use vqe_basin::precond::{
    adapt_readout, generate_labels, hf_theta, predict, qubit_map_of, train, write_loss_csv,
    PreconditionerModel, TrainingSet,
};

use crate::config::{ChainSection, InitKind, OptimizerKind, RunConfig};
use crate::output::Run;
use crate::CliError;

fn missing(what: &str) -> CliError {
    CliError::Config(format!("missing {what}"))
}

fn require_seed(cfg: &RunConfig) -> Result<u64, CliError> {
    cfg.seed.ok_or_else(|| {
        CliError::Config(
            "this command is stochastic and needs a seed (--seed or `seed = ...`)".into(),
        )
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn chain_geometry(out: &mut Run, chain: &ChainSection) -> Result<MolecularGeometry, CliError> {
    match &chain.xyz {
        Some(path) => Ok(parse_xyz(&out.read(path)?)?),
        None => Ok(MolecularGeometry::linear_chain(
            &chain.element,
            chain.n_atoms,
            chain.spacing,
        )?),
    }
}

fn chain_section(cfg: &RunConfig) -> Result<&ChainSection, CliError> {
    cfg.system
        .as_ref()
        .and_then(|s| s.chain.as_ref())
        .ok_or_else(|| missing("[system.chain]"))
}

fn load_hamiltonian(out: &mut Run, path: &Path) -> Result<QubitHamiltonian, CliError> {
    Ok(parse_hamiltonian(&out.read(path)?)?)
}

fn load_system(cfg: &RunConfig, out: &mut Run) -> Result<QubitHamiltonian, CliError> {
    let sys = cfg.system.as_ref().ok_or_else(|| missing("[system]"))?;
    match (&sys.hamiltonian, &sys.chain) {
        (Some(path), None) => load_hamiltonian(out, path),
        (None, Some(chain)) => {
            let geom = chain_geometry(out, chain)?;
            Ok(build_chain_model(&geom, &chain.params())?)
        }
        _ => Err(CliError::Config(
            "[system] needs exactly one of `hamiltonian` or [system.chain]".into(),
        )),
    }
}

fn ansatz(cfg: &RunConfig, h: &QubitHamiltonian) -> Result<AnsatzSpec, CliError> {
    let a = cfg.ansatz.ok_or_else(|| missing("[ansatz]"))?;
    if let Some(n) = a.n_qubits {
        if n != h.n_qubits() {
            return Err(CliError::Config(format!(
                "[ansatz] n_qubits = {n} but the Hamiltonian has {}",
                h.n_qubits()
            )));
        }
    }
    Ok(AnsatzSpec::new(h.n_qubits(), a.depth)?)
}

fn load_model(out: &mut Run, path: &Path) -> Result<PreconditionerModel, CliError> {
    Ok(PreconditionerModel::from_checkpoint_json(&out.read(path)?)?)
}

fn predicted(
    model: &PreconditionerModel,
    spec: &AnsatzSpec,
    h: &QubitHamiltonian,
) -> Result<Vec<f64>, CliError> {
    let geom =
        h.metadata().geometry.as_ref().ok_or_else(|| {
            CliError::Config("prediction needs a Hamiltonian with a geometry".into())
        })?;
    Ok(predict(model, geom, spec, &qubit_map_of(h)?)?.into_vec())
}

fn initial_angles(
    cfg: &RunConfig,
    out: &mut Run,
    spec: &AnsatzSpec,
    h: &QubitHamiltonian,
) -> Result<Vec<f64>, CliError> {
    let init = cfg.init.clone().unwrap_or_default();
    let theta = match init.kind {
        InitKind::Zeros => vec![0.0; spec.param_count()],
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(require_seed(cfg)?);
            (0..spec.param_count())
                .map(|_| PI - rng.random_range(0.0..2.0 * PI))
                .collect()
        }
        InitKind::Hf => {
            let bits = h
                .metadata()
                .hf_bitstring
                .as_ref()
                .ok_or_else(|| missing("hf_bitstring in the Hamiltonian"))?;
            hf_theta(spec, bits)?.into_vec()
        }
        InitKind::Predict => {
            let path = init
                .checkpoint
                .as_ref()
                .ok_or_else(|| missing("[init] checkpoint"))?;
            let model = load_model(out, path)?;
            predicted(&model, spec, h)?
        }
        InitKind::File => {
            let path = init
                .params
                .as_ref()
                .ok_or_else(|| missing("[init] params"))?;
            let text = out.read(path)?;
            serde_json::from_str::<Vec<f64>>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    spec.check_params(&theta)?;
    Ok(theta)
}

/// Recorded FCI energy, else exact diagonalization.
fn reference_energy(h: &QubitHamiltonian) -> Result<f64, CliError> {
    match h.metadata().energies.fci {
        Some(e) => Ok(e),
        None => Ok(h.ground_state(&Default::default())?.ground_energy),
    }
}

fn energy_table(energy: f64, reference: f64) -> CsvTable {
    let mut t = CsvTable::new(&["energy", "e_ref", "delta_e"]);
    t.push(vec![num(energy), num(reference), num(energy - reference)]);
    t
}

pub fn energy(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let h = load_system(cfg, out)?;
    let spec = ansatz(cfg, &h)?;
    let theta = initial_angles(cfg, out, &spec, &h)?;
    let e = circuit::energy(&spec, &theta, &h)?;
    let reference = reference_energy(&h)?;
    println!(
        "energy = {e:.12} Ha, reference = {reference:.12} Ha, delta = {:.6e} Ha",
        e - reference
    );
    out.write_csv("energy", &energy_table(e, reference))?;
    Ok(())
}

fn trace_table(report: &OptimizerReport) -> CsvTable {
    let mut t = CsvTable::new(&["evaluations", "energy"]);
    for &(n, e) in &report.trace {
        t.push(vec![n.to_string(), num(e)]);
    }
    t
}

pub fn optimize(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let h = load_system(cfg, out)?;
    let spec = ansatz(cfg, &h)?;
    let theta0 = initial_angles(cfg, out, &spec, &h)?;
    let opt = cfg
        .optimizer
        .as_ref()
        .ok_or_else(|| missing("[optimizer]"))?;
    let report = match opt.kind {
        OptimizerKind::Lbfgs => circuit_lbfgs(&spec, &h, &theta0, &cfg.lbfgs.unwrap_or_default())?,
        OptimizerKind::Spsa => {
            let spsa = vqe_basin::optim::SpsaConfig {
                seed: require_seed(cfg)?,
                ..cfg.spsa.unwrap_or_default()
            };
            circuit_spsa(&spec, &h, &theta0, &spsa, opt.shot_noise)?
        }
        OptimizerKind::Basinhopping => {
            let bh = vqe_basin::optim::BasinHoppingConfig {
                seed: require_seed(cfg)?,
                ..cfg.basin_hopping.unwrap_or_default()
            };
            circuit_basin_hopping(&spec, &h, &theta0, &bh)?
        }
    };
    let e = circuit::energy(&spec, report.final_parameters.as_slice(), &h)?;
    let reference = reference_energy(&h)?;
    println!(
        "final energy = {e:.12} Ha, delta = {:.6e} Ha after {} evaluations ({:?})",
        e - reference,
        report.evaluations_used,
        report.termination
    );
    out.write_csv("optimize_trace", &trace_table(&report))?;
    out.write_csv("optimize", &energy_table(e, reference))?;
    let params =
        serde_json::to_string(report.final_parameters.as_slice()).expect("angles serialize");
    out.write_json("optimize_params", &params)?;
    Ok(())
}

pub fn labels(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let seed = require_seed(cfg)?;
    let section = cfg.labels.as_ref().ok_or_else(|| missing("[labels]"))?;
    let mut hs = Vec::new();
    for path in &section.hamiltonians {
        hs.push(load_hamiltonian(out, path)?);
    }
    if !section.xyz.is_empty() {
        let chain = chain_section(cfg)?;
        for path in &section.xyz {
            let geom = parse_xyz(&out.read(path)?)?;
            hs.push(build_chain_model(&geom, &chain.params())?);
        }
    }
    let first = hs
        .first()
        .ok_or_else(|| CliError::Config("[labels] lists no systems".into()))?;
    let spec = ansatz(cfg, first)?;
    let bh = vqe_basin::optim::BasinHoppingConfig {
        seed,
        ..cfg.basin_hopping.unwrap_or_default()
    };
    let (set, failures) = generate_labels(&hs, &spec, &bh)?;
    let mut t = CsvTable::new(&[
        "index",
        "source",
        "target_energy",
        "exact_energy",
        "suspect",
    ]);
    for (i, ex) in set.examples().iter().enumerate() {
        t.push(vec![
            i.to_string(),
            ex.hamiltonian.metadata().source.clone(),
            num(ex.target_energy),
            ex.exact_energy.map(num).unwrap_or_default(),
            ex.suspect.to_string(),
        ]);
    }
    for f in &failures {
        eprintln!("label {} failed: {}", f.index, f.message);
    }
    println!("{} labels, {} failures", set.len(), failures.len());
    out.write_csv("labels", &t)?;
    out.write_json("labels", &set.to_json())?;
    if set.is_empty() {
        return Err(CliError::Numerical("no label could be generated".into()));
    }
    Ok(())
}

fn load_labels(cfg: &RunConfig, out: &mut Run) -> Result<TrainingSet, CliError> {
    let path = cfg
        .precond
        .as_ref()
        .and_then(|p| p.labels.as_ref())
        .ok_or_else(|| missing("[precond] labels"))?;
    Ok(TrainingSet::from_json(&out.read(path)?)?)
}

fn save_training(
    out: &mut Run,
    name: &str,
    outcome: &vqe_basin::precond::TrainOutcome,
) -> Result<(), CliError> {
    let last = outcome.trace.last().map_or(f64::NAN, |l| l.mean_loss);
    println!(
        "final mean loss {last:.6e} after {} epochs",
        outcome.trace.len()
    );
    out.write(
        &format!("{name}_loss_{}.csv", out.seed.unwrap_or(0)),
        &write_loss_csv(&outcome.trace),
    )?;
    out.write_json(
        &format!("{name}_checkpoint"),
        &outcome.model.to_checkpoint_json(),
    )?;
    Ok(())
}

pub fn precond_train(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let seed = require_seed(cfg)?;
    let set = load_labels(cfg, out)?;
    let section = cfg.precond.clone().unwrap_or_default();
    let model = PreconditionerModel::for_dataset(
        &set,
        *set.spec(),
        cfg.features.clone().unwrap_or_default(),
        section.hidden,
        section.model_seed.unwrap_or(seed),
    )?;
    let tc = vqe_basin::precond::TrainConfig {
        seed,
        ..cfg.train.unwrap_or_default()
    };
    let outcome = train(&model, &set, &tc)?;
    save_training(out, "precond_train", &outcome)
}

pub fn precond_adapt(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let seed = require_seed(cfg)?;
    let set = load_labels(cfg, out)?;
    let section = cfg.precond.clone().unwrap_or_default();
    let path = section
        .checkpoint
        .as_ref()
        .ok_or_else(|| missing("[precond] checkpoint"))?;
    let model = load_model(out, path)?;
    let tc = vqe_basin::precond::TrainConfig {
        seed,
        ..cfg.train.unwrap_or_default()
    };
    let outcome = adapt_readout(&model, &set, &tc, &section.frozen_layers)?;
    save_training(out, "precond_adapt", &outcome)
}

pub fn gradvar(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let seed = require_seed(cfg)?;
    let g = cfg.gradvar.clone().unwrap_or_default();
    let mut ensembles = Vec::new();
    for name in &g.ensembles {
        match name.as_str() {
            "uniform_random" => ensembles.push(Ensemble::UniformRandom),
            // Minimum of Z on the middle qubit: the central Ry angle flips it.
            "basin" => {
                let mut centers = Vec::new();
                for &n in &g.sizes {
                    let spec = AnsatzSpec::new(n, g.depth)?;
                    let mut theta = vec![0.0; spec.param_count()];
                    theta[diag::central_parameter(&spec)] = PI;
                    centers.push(BasinEnsemble::isotropic(
                        ParameterVector::new(theta)?,
                        g.sigma2,
                    ));
                }
                ensembles.push(Ensemble::Basin(centers));
            }
            other => return Err(CliError::Config(format!("unknown ensemble `{other}`"))),
        }
    }
    let observable = |n: usize| QubitHamiltonian::from_terms(n, vec![(1.0, format!("Z{}", n / 2))]);
    let rows =
        diag::gradient_variance_scan(&g.sizes, g.depth, observable, &ensembles, g.n_samples, seed)?;
    let uniform: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.ensemble == "uniform_random")
        .map(|r| (r.n_qubits, r.variance))
        .collect();
    if uniform.len() >= 2 {
        println!(
            "uniform ensemble log2-variance slope per qubit: {:.4}",
            diag::log2_slope(&uniform)
        );
    }
    out.write_csv("gradvar", &GradientVarianceRow::table(&rows))?;
    Ok(())
}

pub fn hessian(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let h = load_system(cfg, out)?;
    let spec = ansatz(cfg, &h)?;
    let theta = initial_angles(cfg, out, &spec, &h)?;
    let s = cfg.hessian.clone().unwrap_or_default();
    let spectrum = diag::hessian_spectrum(&spec, &theta, &h, s.tol_neg, s.tol_zero)?;
    println!(
        "{} eigenvalues: {} negative, {} near zero, lowest {:.6e}",
        spectrum.eigenvalues.len(),
        spectrum.n_negative,
        spectrum.n_near_zero,
        spectrum.eigenvalues[0]
    );
    out.write_csv("hessian", &spectrum.to_table())?;
    Ok(())
}

pub fn tails(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let seed = require_seed(cfg)?;
    let t = cfg.tails.clone().unwrap_or_default();
    let chain = chain_section(cfg)?;
    let base = chain_geometry(out, chain)?;
    let params = chain.params();
    let depth = cfg.ansatz.ok_or_else(|| missing("[ansatz]"))?.depth;
    let spec = AnsatzSpec::new(base.len(), depth)?;
    let model;
    let zeros = vec![0.0; spec.param_count()];
    let strategy = match t.strategy.as_str() {
        "random" => InitStrategy::Random,
        "zeros" => InitStrategy::Fixed(&zeros),
        "hf" => InitStrategy::HartreeFock,
        "equivariant" => {
            let path = t
                .checkpoint
                .as_ref()
                .ok_or_else(|| missing("[tails] checkpoint"))?;
            model = load_model(out, path)?;
            InitStrategy::Equivariant(&model)
        }
        other => return Err(DiagUnknown(other).into()),
    };
    let report = diag::init_error_tail(
        &strategy,
        &base,
        |g: &MolecularGeometry| build_chain_model(g, &params),
        &spec,
        t.n_samples,
        t.sigma_pos,
        seed,
        &t.thresholds,
    )?;
    let q = report.stats.quantiles;
    println!(
        "{} samples ({} failed): median {:.3e}, q99 {:.3e}, max {:.3e} Ha",
        report.stats.n,
        report.failures.len(),
        q[0],
        q[2],
        report.stats.max
    );
    let mut samples = CsvTable::new(&["sample", "delta_e"]);
    for (i, d) in report.samples.iter().enumerate() {
        samples.push(vec![i.to_string(), num(*d)]);
    }
    out.write_csv("tails", &report.stats.to_table())?;
    out.write_csv("tails_samples", &samples)?;
    out.write_csv(
        "tails_histogram",
        &diag::tail_histogram(&report.samples, t.bins, t.floor)?,
    )?;
    Ok(())
}

struct DiagUnknown<'a>(&'a str);

impl From<DiagUnknown<'_>> for CliError {
    fn from(u: DiagUnknown<'_>) -> Self {
        CliError::Config(format!("unknown strategy `{}`", u.0))
    }
}

pub fn disorder(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let seed = require_seed(cfg)?;
    let d = cfg.disorder.clone().unwrap_or_default();
    let chain = chain_section(cfg)?;
    let base = chain_geometry(out, chain)?;
    let depth = cfg.ansatz.ok_or_else(|| missing("[ansatz]"))?.depth;
    let spec = AnsatzSpec::new(base.len(), depth)?;
    let strategies = d
        .strategies
        .iter()
        .map(|s| s.parse::<Strategy>())
        .collect::<Result<Vec<_>, _>>()?;
    let model = match &d.checkpoint {
        Some(path) => Some(load_model(out, path)?),
        None => None,
    };
    let scan = DisorderScanConfig {
        sigma_grid: d.sigma_grid,
        strategies,
        budget: d.budget,
        threshold: d.threshold,
        n_trials: d.n_trials,
        seed,
        spsa: cfg.spsa.unwrap_or_default(),
        hybrid_restarts: d.hybrid_restarts,
        restart_sigma: d.restart_sigma,
        shot_noise: d.shot_noise,
    };
    let result = diag::disorder_success_scan(&base, &chain.params(), &spec, model.as_ref(), &scan)?;
    for s in &result.strategies {
        println!(
            "{}: grid-mean success {:.3}",
            s.strategy.name(),
            s.grid_mean()
        );
    }
    out.write_csv("disorder", &result.to_table())?;
    Ok(())
}

pub fn landscape(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let h = load_system(cfg, out)?;
    let spec = ansatz(cfg, &h)?;
    let center = initial_angles(cfg, out, &spec, &h)?;
    let l = cfg.landscape.clone().unwrap_or_default();
    let p = spec.param_count();
    let (d1, d2) = match l.directions {
        Some((a, b)) => {
            if a >= p || b >= p || a == b {
                return Err(CliError::Config(format!(
                    "landscape directions ({a}, {b}) invalid for {p} parameters"
                )));
            }
            let unit = |k: usize| {
                (0..p)
                    .map(|i| if i == k { 1.0 } else { 0.0 })
                    .collect::<Vec<f64>>()
            };
            (unit(a), unit(b))
        }
        None => {
            if p < 2 {
                return Err(CliError::Config(
                    "landscape needs at least two parameters".into(),
                ));
            }
            // Two stiffest modes of the Hessian at the center.
            let (_, vecs) = diag::hessian_eigenpairs(&spec, &center, &h)?;
            (vecs[p - 1].clone(), vecs[p - 2].clone())
        }
    };
    let grid = diag::landscape_grid(
        &spec,
        &center,
        &d1,
        &d2,
        (l.half_range, l.half_range),
        l.resolution,
        &h,
    )?;
    let (a, b, e) = grid.minimum();
    println!(
        "{} points, minimum {e:.10} Ha at ({a:.4}, {b:.4})",
        grid.rows.len()
    );
    out.write_csv("landscape", &grid.to_table())?;
    Ok(())
}

pub fn shots(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let s = cfg.shots.clone().unwrap_or_default();
    let mut t = CsvTable::new(&[
        "variance",
        "epsilon",
        "n_shots",
        "n_steps_discovery",
        "n_steps_local",
        "total_cost",
    ]);
    for &v in &s.variances {
        let c = diag::shot_cost(v, s.epsilon, s.n_steps_discovery, s.n_steps_local)?;
        println!(
            "variance {v} Ha^2: {} shots per evaluation, total {}",
            c.n_shots, c.total_cost
        );
        t.push(vec![
            num(v),
            num(c.epsilon),
            c.n_shots.to_string(),
            c.n_steps_discovery.to_string(),
            c.n_steps_local.to_string(),
            c.total_cost.to_string(),
        ]);
    }
    out.write_csv("shots", &t)?;
    Ok(())
}

pub fn benchmark(cfg: &RunConfig, out: &mut Run) -> Result<(), CliError> {
    let b = cfg
        .benchmark
        .clone()
        .ok_or_else(|| missing("[benchmark]"))?;
    let model = match &b.checkpoint {
        Some(path) => Some(load_model(out, path)?),
        None => None,
    };
    let mut entries = Vec::new();
    for path in &b.hamiltonians {
        let h = load_hamiltonian(out, path)?;
        let spec = AnsatzSpec::new(h.n_qubits(), b.depth)?;
        let name = path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        entries.push(BenchmarkEntry {
            name,
            hamiltonian: h,
            spec,
            parameters: None,
        });
    }
    let rows = diag::benchmark_table(&entries, model.as_ref())?;
    let table = BenchmarkRow::table(&rows);
    print!("{}", table.to_text());
    out.write_csv("benchmark", &table)?;
    Ok(())
}
