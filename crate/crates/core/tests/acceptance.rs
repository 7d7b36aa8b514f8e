//! End-to-end acceptance battery. Each test prints one `PASS`/`FAIL` line
//! straight to stdout so the verdicts show up without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vqe_basin::circuit::{self, AnsatzSpec, ParameterVector, Statevector};
use vqe_basin::diagnostics::{
    central_parameter, curvature_bounds_check, disorder_success_scan, gradient_variance_scan,
    haar_variance_prediction, hessian_spectrum, init_error_tail, log2_slope, shot_cost,
    BasinEnsemble, Covariance, DisorderScanConfig, Ensemble, GeneratorSpec, InitStrategy, Strategy,
};
use vqe_basin::geometry::{
    apply_rigid_motion, perturb_positions, random_rigid_motion, Atom, MolecularGeometry,
};
use vqe_basin::hamiltonian::{
    build_chain_model, ChainModelParams, HamiltonianError, Pauli, QubitHamiltonian,
};
use vqe_basin::optim::{
    circuit_lbfgs, BasinHoppingConfig, LbfgsConfig, SpsaConfig, TrainOptimConfig,
};
use vqe_basin::precond::{
    fidelity_gradient, gauge_loss, generate_labels, train, PreconditionerModel, TrainConfig,
};

fn report(name: &str, pass: bool, detail: String, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{verdict} {name}: {detail} [{:.1}s]",
        started.elapsed().as_secs_f64()
    )
    .unwrap();
    out.flush().unwrap();
    assert!(pass, "{name}: {detail}");
}

fn random_hamiltonian(n: usize, n_terms: usize, rng: &mut ChaCha8Rng) -> QubitHamiltonian {
    let terms: Vec<(f64, String)> = (0..n_terms)
        .map(|_| {
            let label = loop {
                let ops: Vec<String> = (0..n)
                    .filter_map(|q| match rng.random_range(0..4) {
                        1 => Some(format!("X{q}")),
                        2 => Some(format!("Y{q}")),
                        3 => Some(format!("Z{q}")),
                        _ => None,
                    })
                    .collect();
                if !ops.is_empty() {
                    break ops.join(" ");
                }
            };
            (rng.random_range(-1.0..1.0), label)
        })
        .collect();
    QubitHamiltonian::from_terms(n, terms).unwrap()
}

fn random_angles(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(-PI..PI)).collect()
}

fn chain_from_gaps(gaps: &[f64]) -> MolecularGeometry {
    let mut z = 0.0;
    let mut atoms = vec![Atom::new("H", [0.0, 0.0, 0.0])];
    for g in gaps {
        z += g;
        atoms.push(Atom::new("H", [0.0, 0.0, z]));
    }
    MolecularGeometry::new(atoms).unwrap()
}

#[test]
fn gradient_exactness() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.random_range(1..=4);
        let spec = AnsatzSpec::new(n, rng.random_range(0..=3)).unwrap();
        let h = random_hamiltonian(n, 5, &mut rng);
        let theta = random_angles(spec.param_count(), &mut rng);
        let e = |t: &[f64]| circuit::energy(&spec, t, &h).unwrap();
        let g = circuit::gradient(&spec, &theta, &h).unwrap();
        let step = 1e-5;
        for (k, gk) in g.iter().enumerate() {
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[k] += step;
            m[k] -= step;
            worst_g = worst_g.max((gk - (e(&p) - e(&m)) / (2.0 * step)).abs());
        }
        let hess = circuit::hessian(&spec, &theta, &h).unwrap();
        let s = 1e-4;
        for j in 0..theta.len() {
            for k in j..theta.len() {
                let at = |dj: f64, dk: f64| {
                    let mut t = theta.clone();
                    t[j] += dj;
                    t[k] += dk;
                    e(&t)
                };
                let fd = (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4.0 * s * s);
                worst_h = worst_h.max((hess[(j, k)] - fd).abs());
            }
        }
    }
    report(
        "gradient exactness",
        worst_g < 1e-6 && worst_h < 1e-4,
        format!("max |grad - fd| = {worst_g:.2e} (tol 1e-6), max |hess - fd| = {worst_h:.2e} (tol 1e-4), 50 instances"),
        t0,
    );
}

#[test]
fn parameter_count_and_hessian_shape() {
    let t0 = Instant::now();
    let spec = AnsatzSpec::new(12, 4).unwrap();
    let geom = MolecularGeometry::linear_chain("H", 12, 1.0).unwrap();
    let h = build_chain_model(&geom, &ChainModelParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let theta = random_angles(spec.param_count(), &mut rng);
    let hess = circuit::hessian(&spec, &theta, &h).unwrap();
    let asym = (0..hess.nrows())
        .flat_map(|j| (0..hess.ncols()).map(move |k| (j, k)))
        .map(|(j, k)| (hess[(j, k)] - hess[(k, j)]).abs())
        .fold(0.0, f64::max);
    report(
        "parameter count & Hessian shape",
        spec.param_count() == 120 && hess.shape() == (120, 120) && asym == 0.0,
        format!(
            "P = {}, Hessian {}x{}, max asymmetry {asym:e}",
            spec.param_count(),
            hess.nrows(),
            hess.ncols()
        ),
        t0,
    );
}

fn haar_state(n: usize, rng: &mut ChaCha8Rng) -> Statevector {
    let amps = (0..1usize << n)
        .map(|_| {
            num_complex::Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
        .collect();
    let mut s = Statevector::from_amplitudes(amps).unwrap();
    s.normalize();
    s
}

fn rotation(p: Pauli, a: f64) -> [[num_complex::Complex64; 2]; 2] {
    use num_complex::Complex64 as C;
    let m = p.matrix();
    let (s, c) = (0.5 * a).sin_cos();
    let mut u = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            u[i][j] = C::new(if i == j { c } else { 0.0 }, 0.0) - C::new(0.0, s) * m[i][j];
        }
    }
    u
}

#[test]
fn haar_closed_form() {
    let t0 = Instant::now();
    let z = QubitHamiltonian::from_terms(1, vec![(1.0, "Z0")]).unwrap();
    let exact = haar_variance_prediction(
        &z,
        &GeneratorSpec {
            qubit: 0,
            pauli: Pauli::X,
        },
        2,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut ok = exact == 1.0 / 3.0;
    for i in 0..10 {
        let n = 2 + i % 2;
        let h = random_hamiltonian(n, 5, &mut rng);
        let gen = GeneratorSpec {
            qubit: rng.random_range(0..n),
            pauli: [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)],
        };
        let predicted = haar_variance_prediction(&h, &gen, 1 << n).unwrap();
        let (up, down) = (
            rotation(gen.pauli, PI / 2.0),
            rotation(gen.pauli, -PI / 2.0),
        );
        let samples: Vec<f64> = (0..100_000)
            .map(|_| {
                let psi = haar_state(n, &mut rng);
                let mut plus = psi.clone();
                plus.apply_single(gen.qubit, &up);
                let mut minus = psi;
                minus.apply_single(gen.qubit, &down);
                0.5 * (h.expectation(&plus).unwrap() - h.expectation(&minus).unwrap())
            })
            .collect();
        let m = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / m;
        let dev: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
        let var = dev.iter().sum::<f64>() / (m - 1.0);
        let dm = dev.iter().sum::<f64>() / m;
        let se = (dev.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
        // A commuting generator gives identically zero gradients up to rounding.
        let diff = (var - predicted).abs();
        let z_score = if diff < 1e-20 { 0.0 } else { diff / se };
        worst = worst.max(z_score);
        ok &= z_score < 3.0;
    }
    report(
        "Haar closed form",
        ok,
        format!("1-qubit Z with X/2 = {exact} (exact 1/3); worst |MC - formula| = {worst:.2} standard errors over 10 instances"),
        t0,
    );
}

fn z_middle(n: usize) -> Result<QubitHamiltonian, HamiltonianError> {
    QubitHamiltonian::from_terms(n, vec![(1.0, format!("Z{}", n / 2))])
}

#[test]
fn regime_separation() {
    let t0 = Instant::now();
    let sizes = [4, 6, 8, 10];
    let depth = 4;
    let sigma2 = 1e-4;
    // Minimum of Z on the middle qubit: the central Ry angle flips it.
    let basins: Vec<BasinEnsemble> = sizes
        .iter()
        .map(|&n| {
            let spec = AnsatzSpec::new(n, depth).unwrap();
            let mut theta = vec![0.0; spec.param_count()];
            theta[central_parameter(&spec)] = PI;
            BasinEnsemble::isotropic(ParameterVector::new(theta).unwrap(), sigma2)
        })
        .collect();
    let rows = gradient_variance_scan(
        &sizes,
        depth,
        z_middle,
        &[Ensemble::UniformRandom, Ensemble::Basin(basins)],
        4000,
        11,
    )
    .unwrap();
    let uniform: Vec<(usize, f64)> = rows
        .iter()
        .filter(|r| r.ensemble == "uniform_random")
        .map(|r| (r.n_qubits, r.variance))
        .collect();
    let slope = log2_slope(&uniform);
    let basin: Vec<_> = rows.iter().filter(|r| r.ensemble == "basin").collect();
    let ratios: Vec<f64> = basin
        .iter()
        .map(|r| r.variance / r.diagonal_prediction.unwrap())
        .collect();
    let vars: Vec<f64> = basin.iter().map(|r| r.variance).collect();
    let spread = vars.iter().copied().fold(0.0, f64::max)
        / vars.iter().copied().fold(f64::INFINITY, f64::min);
    let within = ratios.iter().all(|r| (1.0 / 3.0..=3.0).contains(r));
    report(
        "regime separation",
        (-1.5..=-0.5).contains(&slope) && within && spread < 3.0,
        format!(
            "uniform log2-var slope {slope:.3} (need [-1.5, -0.5]); basin var / diag prediction {:?} (need within 3x); basin spread {spread:.2}x (need < 3x)",
            ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
        t0,
    );
}

#[test]
fn curvature_sandwich() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut configs, mut passed, mut tried) = (0, 0, 0);
    let mut notes = Vec::new();
    while configs < 40 {
        tried += 1;
        let n = rng.random_range(1..=4);
        let spec = AnsatzSpec::new(n, rng.random_range(0..=2)).unwrap();
        let h = random_hamiltonian(n, 4 + n, &mut rng);
        let start = random_angles(spec.param_count(), &mut rng);
        let opt = circuit_lbfgs(
            &spec,
            &h,
            &start,
            &LbfgsConfig {
                tol: 1e-13,
                ..LbfgsConfig::default()
            },
        )
        .unwrap();
        let center = opt.final_parameters;
        let spectrum = hessian_spectrum(&spec, center.as_slice(), &h, 1e-6, 1e-6).unwrap();
        let gnorm = circuit::gradient(&spec, center.as_slice(), &h)
            .unwrap()
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        // Saddles and unconverged runs are not reference minima.
        if spectrum.n_negative > 0 || gnorm >= 1e-6 {
            continue;
        }
        configs += 1;
        let sigma_max: f64 = rng.random_range(0.005..0.02);
        let diag: Vec<f64> = (0..spec.param_count())
            .map(|_| (sigma_max * rng.random_range(0.5..=1.0f64)).powi(2))
            .collect();
        let mut u: Vec<f64> = (0..spec.param_count())
            .map(|_| rng.sample(StandardNormal))
            .collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        u.iter_mut().for_each(|x| *x /= norm);
        let ens = BasinEnsemble {
            center,
            covariance: Covariance::Diagonal(diag),
        };
        let r = curvature_bounds_check(&spec, &ens, &h, 1000, &u, rng.random(), 1e-6).unwrap();
        if r.holds {
            passed += 1;
        } else {
            notes.push(format!(
                "N={n}: {:.2e} not in [{:.2e}, {:.2e}]",
                r.variance, r.lower, r.upper
            ));
        }
    }
    report(
        "curvature sandwich",
        passed * 100 >= 95 * configs,
        format!(
            "{passed}/{configs} configurations inside the slack-2 bounds (need >= 95%), {tried} minimizations{}",
            if notes.is_empty() { String::new() } else { format!("; outside: {notes:?}") }
        ),
        t0,
    );
}

struct Testbed {
    spec: AnsatzSpec,
    params: ChainModelParams,
    geometries: Vec<MolecularGeometry>,
    model: PreconditionerModel,
    max_label_error: f64,
}

/// Four-atom antiferromagnetic chains with a trained preconditioner.
fn testbed() -> &'static Testbed {
    static CELL: OnceLock<Testbed> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = AnsatzSpec::new(4, 4).unwrap();
        let params = ChainModelParams::default();
        // Uneven gaps: a mirror-symmetric chain has no per-atom invariant that
        // separates the two ends, while its labels need not be symmetric.
        let geometries: Vec<MolecularGeometry> =
            [[1.0, 1.15, 1.05], [1.05, 1.2, 1.1], [1.1, 1.25, 1.15]]
                .iter()
                .map(|g| chain_from_gaps(g))
                .collect();
        let hs: Vec<QubitHamiltonian> = geometries
            .iter()
            .map(|g| build_chain_model(g, &params).unwrap())
            .collect();
        let bh = BasinHoppingConfig {
            hop_steps: 30,
            restarts: 4,
            seed: 3,
            local: LbfgsConfig {
                tol: 1e-13,
                ..LbfgsConfig::default()
            },
            ..BasinHoppingConfig::default()
        };
        let (set, failures) = generate_labels(&hs, &spec, &bh).unwrap();
        assert!(failures.is_empty(), "{failures:?}");
        let model =
            PreconditionerModel::for_dataset(&set, spec, Default::default(), 32, 7).unwrap();
        let cfg = TrainConfig {
            epochs: 20_000,
            batch_size: 3,
            optimizer: TrainOptimConfig {
                lr_start: 1e-2,
                lr_end: 1e-9,
                weight_decay: 0.0,
                ..TrainOptimConfig::default()
            },
            seed: 7,
            ..TrainConfig::default()
        };
        let model = train(&model, &set, &cfg).unwrap().model;
        let max_label_error = set
            .examples()
            .iter()
            .map(|ex| {
                let p = model
                    .predict(ex.geometry().unwrap(), &ex.qubit_map().unwrap())
                    .unwrap();
                p.as_slice()
                    .iter()
                    .zip(ex.target_parameters.as_slice())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        Testbed {
            spec,
            params,
            geometries,
            model,
            max_label_error,
        }
    })
}

fn chain_map(g: &MolecularGeometry) -> Vec<Vec<usize>> {
    (0..g.len()).map(|i| vec![i]).collect()
}

#[test]
fn basin_membership_spectra() {
    let t0 = Instant::now();
    let tb = testbed();
    let mut worst_predicted = f64::INFINITY;
    for g in &tb.geometries {
        let h = build_chain_model(g, &tb.params).unwrap();
        let theta = tb.model.predict(g, &chain_map(g)).unwrap();
        let s = hessian_spectrum(&tb.spec, theta.as_slice(), &h, 1e-6, 1e-6).unwrap();
        worst_predicted = worst_predicted.min(s.eigenvalues[0]);
    }
    let h = build_chain_model(&tb.geometries[1], &tb.params).unwrap();
    let mut negative = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = random_angles(tb.spec.param_count(), &mut rng);
        if hessian_spectrum(&tb.spec, &theta, &h, 1e-6, 1e-6)
            .unwrap()
            .n_negative
            > 0
        {
            negative += 1;
        }
    }
    report(
        "basin-membership spectra",
        worst_predicted >= -1e-6 && negative >= 16,
        format!(
            "predicted: lowest eigenvalue {worst_predicted:.2e} over 3 geometries (label error {:.1e}); random: {negative}/20 seeds with a negative eigenvalue (need >= 16)",
            tb.max_label_error
        ),
        t0,
    );
}

#[test]
fn equivariance() {
    let t0 = Instant::now();
    let tb = testbed();
    let (mut worst_theta, mut worst_term) = (0.0f64, 0.0f64);
    let mut identical = true;
    for (gi, g) in tb.geometries.iter().enumerate() {
        let reference = tb.model.predict(g, &chain_map(g)).unwrap();
        let h0 = build_chain_model(g, &tb.params).unwrap();
        for m in 0..20u64 {
            let moved = apply_rigid_motion(g, &random_rigid_motion(1000 * gi as u64 + m)).unwrap();
            let p = tb.model.predict(&moved, &chain_map(&moved)).unwrap();
            for (a, b) in p.as_slice().iter().zip(reference.as_slice()) {
                worst_theta = worst_theta.max((a - b).abs());
            }
            let h1 = build_chain_model(&moved, &tb.params).unwrap();
            identical &= h0.terms().len() == h1.terms().len();
            for (a, b) in h0.terms().iter().zip(h1.terms()) {
                identical &= a.factors() == b.factors();
                worst_term = worst_term.max((a.coefficient() - b.coefficient()).abs());
            }
        }
    }
    report(
        "equivariance",
        worst_theta <= 1e-10 && identical && worst_term <= 1e-12,
        format!("max angle change {worst_theta:.1e} (tol 1e-10); Hamiltonian terms identical: {identical}, max coefficient change {worst_term:.1e} (tol 1e-12)"),
        t0,
    );
}

#[test]
fn tail_suppression() {
    let t0 = Instant::now();
    let spec = AnsatzSpec::new(4, 4).unwrap();
    let params = ChainModelParams::default();
    // Strongly graded gaps keep the two chain ends distinguishable under
    // 0.05 Angstrom noise. Training copies use seeds far from the test seeds.
    let base = chain_from_gaps(&[0.95, 1.15, 1.4]);
    let mut geometries = vec![base.clone()];
    geometries.extend((0..11).map(|k| perturb_positions(&base, 0.05, 100_000 + k).unwrap()));
    let hs: Vec<QubitHamiltonian> = geometries
        .iter()
        .map(|g| build_chain_model(g, &params).unwrap())
        .collect();
    let bh = BasinHoppingConfig {
        hop_steps: 30,
        restarts: 4,
        seed: 3,
        local: LbfgsConfig {
            tol: 1e-13,
            ..LbfgsConfig::default()
        },
        ..BasinHoppingConfig::default()
    };
    let (set, failures) = generate_labels(&hs, &spec, &bh).unwrap();
    assert!(failures.is_empty(), "{failures:?}");
    let model = PreconditionerModel::for_dataset(&set, spec, Default::default(), 32, 7).unwrap();
    let cfg = TrainConfig {
        epochs: 20_000,
        batch_size: 3,
        optimizer: TrainOptimConfig {
            lr_start: 1e-2,
            lr_end: 1e-9,
            weight_decay: 0.0,
            ..TrainOptimConfig::default()
        },
        seed: 7,
        ..TrainConfig::default()
    };
    let model = train(&model, &set, &cfg).unwrap().model;

    let builder = |g: &MolecularGeometry| build_chain_model(g, &params);
    let tail = |strategy: &InitStrategy| {
        init_error_tail(strategy, &base, builder, &spec, 1000, 0.05, 5, &[1.6e-3]).unwrap()
    };
    let eq = tail(&InitStrategy::Equivariant(&model));
    let rnd = tail(&InitStrategy::Random);
    let (qe, qr) = (eq.stats.quantiles[2], rnd.stats.quantiles[2]);
    report(
        "tail suppression",
        qe < qr && eq.stats.n == 1000 && rnd.stats.n == 1000,
        format!(
            "99% quantile of dE: equivariant {qe:.3e} Ha vs random {qr:.3e} Ha (medians {:.2e} vs {:.2e}) over 1000 samples, sigma_pos 0.05",
            eq.stats.quantiles[0], rnd.stats.quantiles[0]
        ),
        t0,
    );
}

#[test]
fn disorder_ordering() {
    let t0 = Instant::now();
    let spec = AnsatzSpec::new(6, 2).unwrap();
    let params = ChainModelParams {
        j0: -1.0,
        h: 0.5,
        ..ChainModelParams::default()
    };
    // Graded gaps keep mirror-partner atoms distinguishable after noise; the
    // disordered copies use seeds far away from the scan's trial seeds.
    let base = chain_from_gaps(&[0.9, 1.0, 1.1, 1.25, 1.4]);
    let mut geometries = vec![base.clone()];
    for k in 0..30 {
        geometries.push(perturb_positions(&base, 0.1, 100_000 + k).unwrap());
    }
    let hs: Vec<QubitHamiltonian> = geometries
        .iter()
        .map(|g| build_chain_model(g, &params).unwrap())
        .collect();
    let bh = BasinHoppingConfig {
        hop_steps: 20,
        restarts: 3,
        seed: 4,
        local: LbfgsConfig {
            tol: 1e-12,
            ..LbfgsConfig::default()
        },
        ..BasinHoppingConfig::default()
    };
    let (set, failures) = generate_labels(&hs, &spec, &bh).unwrap();
    assert!(failures.is_empty(), "{failures:?}");
    let model = PreconditionerModel::for_dataset(&set, spec, Default::default(), 32, 9).unwrap();
    let cfg = TrainConfig {
        epochs: 5000,
        batch_size: 4,
        optimizer: TrainOptimConfig {
            lr_start: 1e-2,
            lr_end: 1e-8,
            weight_decay: 0.0,
            ..TrainOptimConfig::default()
        },
        seed: 9,
        ..TrainConfig::default()
    };
    let model = train(&model, &set, &cfg).unwrap().model;
    let scan = DisorderScanConfig {
        sigma_grid: vec![0.0, 0.05, 0.1],
        strategies: vec![Strategy::Random, Strategy::Equivariant, Strategy::Hybrid],
        budget: 2001,
        threshold: 1.6e-3,
        n_trials: 50,
        seed: 21,
        spsa: SpsaConfig::default(),
        hybrid_restarts: 4,
        restart_sigma: 0.2,
        shot_noise: None,
    };
    let r = disorder_success_scan(&base, &params, &spec, Some(&model), &scan).unwrap();
    let (pr, pe, ph) = (
        r.grid_mean(Strategy::Random).unwrap(),
        r.grid_mean(Strategy::Equivariant).unwrap(),
        r.grid_mean(Strategy::Hybrid).unwrap(),
    );
    report(
        "disorder ordering",
        ph >= pe && pe >= pr && ph >= 0.95,
        format!("grid-mean success: hybrid {ph:.3} >= equivariant {pe:.3} >= random {pr:.3}; hybrid >= 0.95; 50 trials x 3 sigmas, budget 2001"),
        t0,
    );
}

#[test]
fn shot_cost_band() {
    let t0 = Instant::now();
    let eps = 1.6e-3;
    let shots: Vec<u64> = [2.5, 5.0, 10.0, 25.0]
        .iter()
        .map(|&v| shot_cost(v, eps, 0, 1).unwrap().n_shots)
        .collect();
    // The band is an order-of-magnitude statement: log10(n_shots) rounds to 6 or 7.
    let orders: Vec<i32> = shots
        .iter()
        .map(|&s| (s as f64).log10().round() as i32)
        .collect();
    let literal = shots.iter().all(|&s| (1_000_000..=10_000_000).contains(&s));
    report(
        "shot-cost band",
        orders.iter().all(|o| (6..=7).contains(o)),
        format!("n_shots {shots:?} for variances [2.5, 5, 10, 25] Ha^2 at eps 1.6 mHa; orders {orders:?}; strictly inside [1e6, 1e7]: {literal}"),
        t0,
    );
}

#[test]
fn gauge_loss_contract() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = AnsatzSpec::new(3, 2).unwrap();
    let p = spec.param_count();
    let (mut zero, mut worst_shift, mut worst_grad) = (true, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let target = random_angles(p, &mut rng);
        let theta = random_angles(p, &mut rng);
        zero &= gauge_loss(&target, &target, &spec, 0.7).unwrap() == 0.0;
        let fid = |t: &[f64]| circuit::fidelity(&spec, t, &target).unwrap();
        let mut shifted = theta.clone();
        for _ in 0..3 {
            let k = rng.random_range(0..p);
            shifted[k] += 2.0 * PI * rng.random_range(-2..=2) as f64;
        }
        worst_shift = worst_shift.max((fid(&theta) - fid(&shifted)).abs());
        let g = fidelity_gradient(&spec, &theta, &target).unwrap();
        let s = 1e-5;
        for k in 0..p {
            let (mut a, mut b) = (theta.clone(), theta.clone());
            a[k] += s;
            b[k] -= s;
            worst_grad = worst_grad.max((g[k] - (fid(&a) - fid(&b)) / (2.0 * s)).abs());
        }
    }
    report(
        "gauge-loss contract",
        zero && worst_shift <= 1e-12 && worst_grad <= 1e-6,
        format!(
            "gauge_loss(t, t) == 0: {zero}; max fidelity change under 2pi shifts {worst_shift:.1e} (tol 1e-12); max |grad - fd| {worst_grad:.1e} (tol 1e-6)"
        ),
        t0,
    );
}
