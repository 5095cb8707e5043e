//! Acceptance suite: one integration test per promised behavior, each
//! printing an `ACCEPTANCE <name>: PASS|FAIL (...)` line with the measured
//! numbers. Run with
//!
//! ```text
//! cargo test -p gazsl-cli --test acceptance -- --nocapture
//! ```
//!
//! to see the full checklist. The ablation-ordering test currently fails on
//! one of its three margins; see the "Known gap" section of the README for
//! the measurements behind it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gazsl::autodiff::{Graph, NodeId, Tensor};
use gazsl::data::synthetic::{synthesize_with_means, SyntheticSpec};
use gazsl::data::DatasetBundle;
use gazsl::eval::{
    area_under_curve, average_precision, calibration_grid, classify_batch, gzsl_curve,
    retrieval_map, synthesize_bank, top1_accuracy, NnMode, SucPoint, SynthBank,
    DEFAULT_GRID_POINTS, DENSE_GRID_POINTS,
};
use gazsl::gan::net::{
    bind_discriminator, bind_generator, discriminator_forward_graph, generator_forward_graph,
};
use gazsl::gan::{
    compute_visual_pivots, discriminator_loss, generator_loss, synthesize_features, train_model,
    vp_loss, AblationMode, DiscriminatorParams, GanModel, GeneratorParams, TrainConfig,
};
use gazsl::text::{default_stoplist, encode_corpus, encode_tfidf, porter_stem, Vocabulary};
use gazsl::ClassId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {name}: {verdict} ({detail})");
}

// ---------------------------------------------------------------------------
// Gradient checks: every graph primitive and every training objective against
// central finite differences.
// ---------------------------------------------------------------------------

const FD_TOL: f64 = 1e-4;
/// The gradient penalty differentiates a gradient, so its finite-difference
/// comparison carries an extra order of curvature noise.
const FD_TOL_SECOND_ORDER: f64 = 1e-3;

/// Guarded relative error. The floor in the denominator turns the comparison
/// into an absolute one (at 1e-8 effective) for components smaller than the
/// tolerance itself, where pure relative error would amplify FD roundoff.
fn relative_error(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-4)
}

/// A copy of `t` with element `j` (in row-major order) replaced.
fn bump(t: &Tensor, j: usize, value: f64) -> Tensor {
    let mut values = t.values().to_vec();
    values[j] = value;
    Tensor::new(t.shape().to_vec(), values).unwrap()
}

/// Draw a magnitude in `[lo, hi)` with a random sign. Keeping values away
/// from zero keeps piecewise ops (relu, leaky_relu, recip_or_zero) on one
/// side of their kink for the whole `x +- h` stencil.
fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let mag = rng.random_range(lo..hi);
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, mags: (f64, f64)) -> Tensor {
    let values = (0..rows * cols).map(|_| signed(rng, mags.0, mags.1)).collect();
    Tensor::matrix(rows, cols, values).unwrap()
}

/// Compare reverse-mode gradients against central differences for every
/// element of every input tensor, rebuilding the computation from scratch on
/// each probe. Returns the worst guarded relative error.
fn fd_worst_error(
    xs: &[Tensor],
    grads: &[Tensor],
    eval: &mut dyn FnMut(&[Tensor]) -> f64,
) -> f64 {
    assert_eq!(xs.len(), grads.len(), "one gradient per differentiated input");
    let mut worst = 0.0f64;
    let mut work: Vec<Tensor> = xs.to_vec();
    for i in 0..xs.len() {
        for j in 0..xs[i].values().len() {
            let base = xs[i].values()[j];
            let h = 1e-5 * base.abs().max(1.0);
            work[i] = bump(&xs[i], j, base + h);
            let up = eval(&work);
            work[i] = bump(&xs[i], j, base - h);
            let down = eval(&work);
            work[i] = xs[i].clone();
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(grads[i].values()[j], fd));
        }
    }
    worst
}

type Build = Box<dyn Fn(&mut Graph, &[NodeId]) -> NodeId>;

struct PrimitiveCase {
    name: &'static str,
    shapes: Vec<(usize, usize)>,
    mags: (f64, f64),
    build: Build,
}

fn case(name: &'static str, shapes: &[(usize, usize)], build: Build) -> PrimitiveCase {
    PrimitiveCase {
        name,
        shapes: shapes.to_vec(),
        mags: (0.2, 1.6),
        build,
    }
}

fn primitive_cases() -> Vec<PrimitiveCase> {
    let mut cases = vec![
        case("add", &[(3, 4), (3, 4)], Box::new(|g, x| g.add(x[0], x[1]).unwrap())),
        case("sub", &[(3, 4), (3, 4)], Box::new(|g, x| g.sub(x[0], x[1]).unwrap())),
        case("mul", &[(3, 4), (3, 4)], Box::new(|g, x| g.mul(x[0], x[1]).unwrap())),
        case("neg", &[(3, 4)], Box::new(|g, x| g.neg(x[0]))),
        case("scale", &[(3, 4)], Box::new(|g, x| g.scale(x[0], 1.7))),
        case("add_scalar", &[(3, 4)], Box::new(|g, x| g.add_scalar(x[0], -0.6))),
        case("tanh", &[(3, 4)], Box::new(|g, x| g.tanh(x[0]))),
        case("relu", &[(3, 4)], Box::new(|g, x| g.relu(x[0]))),
        case("leaky_relu", &[(3, 4)], Box::new(|g, x| g.leaky_relu(x[0], 0.2))),
        case("matmul", &[(3, 4), (4, 2)], Box::new(|g, x| g.matmul(x[0], x[1]).unwrap())),
        case("transpose", &[(3, 4)], Box::new(|g, x| g.transpose(x[0]).unwrap())),
        case("sum_all", &[(3, 4)], Box::new(|g, x| g.sum_all(x[0]))),
        case("sum_rows", &[(3, 4)], Box::new(|g, x| g.sum_rows(x[0]).unwrap())),
        case("sum_cols", &[(3, 4)], Box::new(|g, x| g.sum_cols(x[0]).unwrap())),
        case("broadcast_rows", &[(1, 4)], Box::new(|g, x| g.broadcast_rows(x[0], 3).unwrap())),
        case("broadcast_cols", &[(3, 1)], Box::new(|g, x| g.broadcast_cols(x[0], 4).unwrap())),
        case(
            "broadcast_all",
            &[(1, 1)],
            Box::new(|g, x| g.broadcast_all(x[0], &[3, 4]).unwrap()),
        ),
        case("row_l2_norm", &[(3, 4)], Box::new(|g, x| g.row_l2_norm(x[0]).unwrap())),
        case("softmax_rows", &[(3, 4)], Box::new(|g, x| g.softmax_rows(x[0]).unwrap())),
        case("logsumexp_rows", &[(3, 4)], Box::new(|g, x| g.logsumexp_rows(x[0]).unwrap())),
        case(
            "gather_cols",
            &[(3, 5)],
            // A repeated index checks gradient accumulation into one column.
            Box::new(|g, x| g.gather_cols(x[0], &[2, 2, 0]).unwrap()),
        ),
        case(
            "scatter_cols",
            &[(3, 1)],
            Box::new(|g, x| g.scatter_cols(x[0], &[0, 3, 1], 5).unwrap()),
        ),
        case(
            "concat_cols",
            &[(3, 2), (3, 3)],
            Box::new(|g, x| g.concat_cols(x[0], x[1]).unwrap()),
        ),
        case("slice_cols", &[(3, 5)], Box::new(|g, x| g.slice_cols(x[0], 1, 3).unwrap())),
        case("pad_cols", &[(3, 2)], Box::new(|g, x| g.pad_cols(x[0], 2, 6).unwrap())),
        case("mean_all", &[(3, 4)], Box::new(|g, x| g.mean_all(x[0]))),
        case("mean_rows", &[(3, 4)], Box::new(|g, x| g.mean_rows(x[0]).unwrap())),
        case(
            "squared_l2_norm",
            &[(3, 4)],
            Box::new(|g, x| g.squared_l2_norm(x[0]).unwrap()),
        ),
        case(
            "affine",
            &[(3, 4), (4, 2), (1, 2)],
            Box::new(|g, x| g.affine(x[0], x[1], x[2]).unwrap()),
        ),
        case(
            "softmax_cross_entropy",
            &[(3, 4)],
            Box::new(|g, x| g.softmax_cross_entropy(x[0], &[2, 0, 3]).unwrap()),
        ),
    ];
    // recip_or_zero needs a wider berth from its pole at zero.
    cases.push(PrimitiveCase {
        name: "recip_or_zero",
        shapes: vec![(3, 4)],
        mags: (0.4, 1.6),
        build: Box::new(|g, x| g.recip_or_zero(x[0])),
    });
    cases
}

/// Contract an op output with a fixed random cotangent so every output
/// element influences the probed scalar, then compare gradients.
fn check_primitive(case: &PrimitiveCase, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Tensor> = case
        .shapes
        .iter()
        .map(|&(r, c)| random_tensor(&mut rng, r, c, case.mags))
        .collect();
    let out_shape = {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = xs.iter().map(|x| g.input(x.clone())).collect();
        let out = (case.build)(&mut g, &ids);
        g.value(out).shape().to_vec()
    };
    let cot_values: Vec<f64> = (0..out_shape.iter().product::<usize>())
        .map(|_| signed(&mut rng, 0.4, 1.5))
        .collect();
    let cotangent = Tensor::new(out_shape, cot_values).unwrap();

    let scalarize = |g: &mut Graph, out: NodeId| -> NodeId {
        let c = g.input(cotangent.clone());
        let weighted = g.mul(out, c).unwrap();
        g.sum_all(weighted)
    };

    let mut g = Graph::new();
    let ids: Vec<NodeId> = xs.iter().map(|x| g.input(x.clone())).collect();
    let out = (case.build)(&mut g, &ids);
    let loss = scalarize(&mut g, out);
    let grads = g.backward(loss, &ids).unwrap();

    let mut eval = |ts: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let ids: Vec<NodeId> = ts.iter().map(|x| g.input(x.clone())).collect();
        let out = (case.build)(&mut g, &ids);
        let loss = scalarize(&mut g, out);
        g.value(loss).scalar_value().unwrap()
    };
    fd_worst_error(&xs, &grads, &mut eval)
}

/// Finite differences over a named parameter list, pushed back into the
/// parameter struct before each re-evaluation.
fn fd_over_named(
    named: &[(String, Tensor)],
    grads: &[Tensor],
    eval: &mut dyn FnMut(&[(String, Tensor)]) -> f64,
) -> f64 {
    assert_eq!(named.len(), grads.len(), "one gradient per parameter tensor");
    let mut worst = 0.0f64;
    let mut work: Vec<(String, Tensor)> = named.to_vec();
    for i in 0..named.len() {
        for j in 0..named[i].1.values().len() {
            let base = named[i].1.values()[j];
            let h = 1e-5 * base.abs().max(1.0);
            work[i].1 = bump(&named[i].1, j, base + h);
            let up = eval(&work);
            work[i].1 = bump(&named[i].1, j, base - h);
            let down = eval(&work);
            work[i].1 = named[i].1.clone();
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(grads[i].values()[j], fd));
        }
    }
    worst
}

/// Tiny widths so the parameter count stays in the hundreds; the objectives
/// are exactly the ones used in training.
fn tiny_config() -> TrainConfig {
    TrainConfig {
        z_dim: 3,
        d_text: 5,
        h_g: 7,
        h_d: 6,
        ..TrainConfig::default()
    }
}

/// Generator objective (adversarial score plus auxiliary classification)
/// differentiated through the generator parameters, with the discriminator
/// held fixed.
fn generator_objective_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = tiny_config();
    let gen = GeneratorParams::init(6, 4, &cfg, &mut rng);
    let disc = DiscriminatorParams::init(4, 5, &cfg, &mut rng);
    let text = random_tensor(&mut rng, 3, 6, (0.2, 1.2));
    let z = random_tensor(&mut rng, 3, 3, (0.2, 1.2));
    let labels = [2usize, 0, 4];

    let forward = |g: &mut Graph, params: &GeneratorParams| -> NodeId {
        let gn = bind_generator(g, params);
        let dn = bind_discriminator(g, &disc);
        let t = g.input(text.clone());
        let zn = g.input(z.clone());
        let fake = generator_forward_graph(g, &gn, t, zn).unwrap();
        let (score, logits) = discriminator_forward_graph(g, &dn, fake).unwrap();
        generator_loss(g, score, logits, &labels).unwrap()
    };

    let mut g = Graph::new();
    let gn = bind_generator(&mut g, &gen);
    let dn = bind_discriminator(&mut g, &disc);
    let t = g.input(text.clone());
    let zn = g.input(z.clone());
    let fake = generator_forward_graph(&mut g, &gn, t, zn).unwrap();
    let (score, logits) = discriminator_forward_graph(&mut g, &dn, fake).unwrap();
    let loss = generator_loss(&mut g, score, logits, &labels).unwrap();
    let grads = g.backward(loss, &gn.params()).unwrap();

    fd_over_named(&gen.to_named(), &grads, &mut |named| {
        let mut params = gen.clone();
        params.write_back(named);
        let mut g = Graph::new();
        let loss = forward(&mut g, &params);
        g.value(loss).scalar_value().unwrap()
    })
}

/// Visual-pivot regularizer differentiated through the generator parameters.
fn pivot_objective_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = tiny_config();
    let gen = GeneratorParams::init(6, 4, &cfg, &mut rng);
    let text = random_tensor(&mut rng, 4, 6, (0.2, 1.2));
    let z = random_tensor(&mut rng, 4, 3, (0.2, 1.2));
    let feats = random_tensor(&mut rng, 6, 4, (0.2, 1.4));
    let feat_labels: Vec<ClassId> = vec![7, 9, 7, 12, 9, 12];
    let (pivots, missing) = compute_visual_pivots(&feats, &feat_labels, &[7, 9, 12]);
    assert!(missing.is_empty());
    let batch_labels: Vec<ClassId> = vec![7, 12, 9, 7];

    let forward = |g: &mut Graph, params: &GeneratorParams| -> NodeId {
        let gn = bind_generator(g, params);
        let t = g.input(text.clone());
        let zn = g.input(z.clone());
        let fake = generator_forward_graph(g, &gn, t, zn).unwrap();
        vp_loss(g, fake, &batch_labels, &pivots).unwrap()
    };

    let mut g = Graph::new();
    let gn = bind_generator(&mut g, &gen);
    let t = g.input(text.clone());
    let zn = g.input(z.clone());
    let fake = generator_forward_graph(&mut g, &gn, t, zn).unwrap();
    let loss = vp_loss(&mut g, fake, &batch_labels, &pivots).unwrap();
    let grads = g.backward(loss, &gn.params()).unwrap();

    fd_over_named(&gen.to_named(), &grads, &mut |named| {
        let mut params = gen.clone();
        params.write_back(named);
        let mut g = Graph::new();
        let loss = forward(&mut g, &params);
        g.value(loss).scalar_value().unwrap()
    })
}

/// Critic objective differentiated through the discriminator parameters.
/// With `gp_coeff > 0` the penalty term differentiates the interpolates'
/// input gradient, exercising second-order support.
fn critic_objective_error(seed: u64, gp_coeff: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = tiny_config();
    let disc = DiscriminatorParams::init(4, 5, &cfg, &mut rng);
    let real = random_tensor(&mut rng, 3, 4, (0.2, 1.4));
    let fake = random_tensor(&mut rng, 3, 4, (0.2, 1.4));
    let labels = [1usize, 4, 0];
    let eps = [0.3, 0.62, 0.85];

    let forward = |g: &mut Graph, params: &DiscriminatorParams| -> NodeId {
        let dn = bind_discriminator(g, params);
        let r = g.input(real.clone());
        let f = g.input(fake.clone());
        discriminator_loss(g, &dn, r, f, &labels, &eps, gp_coeff).unwrap()
    };

    let mut g = Graph::new();
    let dn = bind_discriminator(&mut g, &disc);
    let r = g.input(real.clone());
    let f = g.input(fake.clone());
    let loss = discriminator_loss(&mut g, &dn, r, f, &labels, &eps, gp_coeff).unwrap();
    let grads = g.backward(loss, &dn.params()).unwrap();

    fd_over_named(&disc.to_named(), &grads, &mut |named| {
        let mut params = disc.clone();
        params.write_back(named);
        let mut g = Graph::new();
        let loss = forward(&mut g, &params);
        g.value(loss).scalar_value().unwrap()
    })
}

#[test]
fn gradients_match_central_finite_differences() {
    let started = Instant::now();
    let mut instances = 0usize;
    let mut worst: (f64, String) = (0.0, String::new());
    let mut failures: Vec<String> = Vec::new();

    let mut record = |label: String, err: f64, tol: f64, instances: &mut usize| {
        *instances += 1;
        if err > worst.0 {
            worst = (err, label.clone());
        }
        if err >= tol {
            failures.push(format!("{label}: rel err {err:.3e} >= {tol:.0e}"));
        }
    };

    for (idx, case) in primitive_cases().iter().enumerate() {
        for seed in 0..4u64 {
            let err = check_primitive(case, idx as u64 * 101 + seed);
            record(format!("{} seed {seed}", case.name), err, FD_TOL, &mut instances);
        }
    }
    for seed in 0..4u64 {
        record(
            format!("generator objective seed {seed}"),
            generator_objective_error(900 + seed),
            FD_TOL,
            &mut instances,
        );
        record(
            format!("pivot regularizer seed {seed}"),
            pivot_objective_error(910 + seed),
            FD_TOL,
            &mut instances,
        );
        record(
            format!("critic objective (no penalty) seed {seed}"),
            critic_objective_error(920 + seed, 0.0),
            FD_TOL,
            &mut instances,
        );
        record(
            format!("critic objective (gradient penalty) seed {seed}"),
            critic_objective_error(930 + seed, 10.0),
            FD_TOL_SECOND_ORDER,
            &mut instances,
        );
    }

    let elapsed = started.elapsed();
    let pass = failures.is_empty() && instances >= 100 && elapsed < Duration::from_secs(120);
    report(
        "gradient checks",
        pass,
        &format!(
            "{instances} instances, worst rel err {:.2e} at {}, {:.1}s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    );
    assert!(instances >= 100, "only {instances} gradient instances checked");
    assert!(
        failures.is_empty(),
        "gradient mismatches:\n{}",
        failures.join("\n")
    );
    assert!(
        elapsed < Duration::from_secs(120),
        "gradient suite took {:.1}s, budget is 120s",
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// Training-dependent checks on the bundled synthetic benchmark.
// ---------------------------------------------------------------------------

/// Unseen-class top-1 accuracy: synthesize a bank from the unseen documents,
/// then nearest-neighbor classify the scaled real unseen rows.
fn unseen_accuracy(bundle: &DatasetBundle, model: &GanModel, mode: NnMode) -> f64 {
    let encoded = encode_corpus(&bundle.documents, &model.seen_classes, &default_stoplist()).unwrap();
    let bank = synthesize_bank(model, &encoded.vectors, &bundle.split.unseen, 60, 1000).unwrap();
    let unseen_set = bundle.split.unseen_set();
    let (raw, truth) = bundle.rows_where(|c| unseen_set.contains(&c));
    let (queries, _) = model.scaler.apply(&raw);
    let predictions = classify_batch(&queries, &bank, mode).unwrap();
    top1_accuracy(&predictions, &truth).unwrap()
}

/// Mean distance between each seen class's generated mean and its training
/// pivot, in the scaled feature space the model trains in.
fn mean_pivot_distance(bundle: &DatasetBundle, model: &GanModel) -> f64 {
    let seen_set = bundle.split.seen_set();
    let (raw, labels) = bundle.rows_where(|c| seen_set.contains(&c));
    let (scaled, _) = model.scaler.apply(&raw);
    let (pivots, _) = compute_visual_pivots(&scaled, &labels, &model.seen_classes);
    let encoded = encode_corpus(&bundle.documents, &model.seen_classes, &default_stoplist()).unwrap();
    let mut total = 0.0;
    for (idx, class) in model.seen_classes.iter().enumerate() {
        let feats =
            synthesize_features(model, &encoded.vectors[class], 60, 2000 + idx as u64).unwrap();
        let mut mean = vec![0.0; feats.cols()];
        for r in 0..feats.rows() {
            for (m, v) in mean.iter_mut().zip(feats.row(r)) {
                *m += v / feats.rows() as f64;
            }
        }
        let pivot = pivots.get(*class).unwrap();
        total += mean
            .iter()
            .zip(pivot)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    }
    total / model.seen_classes.len() as f64
}

fn benchmark_mean_accuracy(bundle: &DatasetBundle, configure: impl Fn(u64) -> TrainConfig) -> f64 {
    let mut sum = 0.0;
    for seed in 0..3u64 {
        let out = train_model(bundle, &configure(seed)).unwrap();
        sum += unseen_accuracy(bundle, &out.model, NnMode::Instance);
    }
    sum / 3.0
}

#[test]
fn objective_ablations_order_unseen_accuracy() {
    let started = Instant::now();
    let (bundle, _) = synthesize_with_means(&SyntheticSpec::default()).unwrap();
    let mut means: BTreeMap<&str, f64> = BTreeMap::new();
    for (name, mode) in [
        ("full", AblationMode::Full),
        ("vp-only", AblationMode::VpOnly),
        ("gan-only", AblationMode::GanOnly),
    ] {
        let mean = benchmark_mean_accuracy(&bundle, |seed| TrainConfig {
            seed,
            ablation: mode,
            ..TrainConfig::synthetic_benchmark()
        });
        means.insert(name, mean);
    }
    let elapsed = started.elapsed();
    let (full, vp, gan) = (means["full"], means["vp-only"], means["gan-only"]);

    let beats_chance = full >= 0.5;
    let beats_gan_only = full - gan >= 0.05;
    let beats_vp_only = full - vp >= 0.05;
    let in_time = elapsed < Duration::from_secs(900);
    report(
        "ablation ordering",
        beats_chance && beats_gan_only && beats_vp_only && in_time,
        &format!(
            "full {full:.4}, vp-only {vp:.4}, gan-only {gan:.4}, 3 seeds, {:.0}s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(
        in_time,
        "ablation sweep took {:.0}s, budget is 900s",
        elapsed.as_secs_f64()
    );
    assert!(beats_chance, "full objective {full:.4} is below 4x chance (0.5)");
    assert!(
        beats_gan_only,
        "full objective leads the GAN-only ablation by only {:+.1}pp, need +5pp",
        (full - gan) * 100.0
    );
    assert!(
        beats_vp_only,
        "full objective leads the pivot-only ablation by {:+.1}pp, short of the \
         required +5pp. The adversarial pair does not add accuracy on top of the \
         pivot regressor at this benchmark scale; every tuning attempt left the \
         margin near zero. See the 'Known gap' section of the README for the \
         measurements.",
        (full - vp) * 100.0
    );
}

#[test]
fn text_reduction_layer_helps_under_heavy_noise() {
    let spec = SyntheticSpec {
        noise_word_rate: 0.8,
        ..SyntheticSpec::default()
    };
    let (bundle, _) = synthesize_with_means(&spec).unwrap();
    let with_fc = benchmark_mean_accuracy(&bundle, |seed| TrainConfig {
        seed,
        use_text_fc: true,
        ..TrainConfig::synthetic_benchmark()
    });
    let without_fc = benchmark_mean_accuracy(&bundle, |seed| TrainConfig {
        seed,
        use_text_fc: false,
        ..TrainConfig::synthetic_benchmark()
    });
    let pass = with_fc >= without_fc;
    report(
        "text reduction layer under noise",
        pass,
        &format!("with {with_fc:.4} >= without {without_fc:.4} at 80% noise words, 3 seeds"),
    );
    assert!(
        pass,
        "text reduction layer hurt on the noisy benchmark: with {with_fc:.4} < without {without_fc:.4}"
    );
}

#[test]
fn generated_class_means_converge_to_visual_pivots() {
    let (bundle, _) = synthesize_with_means(&SyntheticSpec::default()).unwrap();
    let mut drops: Vec<f64> = Vec::new();
    for seed in 0..3u64 {
        let frozen = TrainConfig {
            seed,
            max_loops: 0,
            ..TrainConfig::synthetic_benchmark()
        };
        let initial = train_model(&bundle, &frozen).unwrap();
        let d0 = mean_pivot_distance(&bundle, &initial.model);
        let trained = train_model(
            &bundle,
            &TrainConfig {
                seed,
                ..TrainConfig::synthetic_benchmark()
            },
        )
        .unwrap();
        let d1 = mean_pivot_distance(&bundle, &trained.model);
        drops.push(1.0 - d1 / d0);
    }
    let pass = drops.iter().all(|&d| d >= 0.80);
    report(
        "pivot convergence",
        pass,
        &format!(
            "generated means closed {} of the initial pivot distance (need 80% on each seed)",
            drops
                .iter()
                .map(|d| format!("{:.1}%", d * 100.0))
                .collect::<Vec<_>>()
                .join("/")
        ),
    );
    for (seed, drop) in drops.iter().enumerate() {
        assert!(
            *drop >= 0.80,
            "seed {seed}: generated means closed only {:.1}% of the initial distance",
            drop * 100.0
        );
    }
}

// ---------------------------------------------------------------------------
// Curve area against dense brute-force enumeration.
// ---------------------------------------------------------------------------

struct ToyGzsl {
    bank: SynthBank,
    bank_raw: BTreeMap<ClassId, Tensor>,
    seen_classes: Vec<ClassId>,
    seen_queries: Tensor,
    seen_truth: Vec<ClassId>,
    unseen_queries: Tensor,
    unseen_truth: Vec<ClassId>,
}

impl ToyGzsl {
    /// Eight overlapping uniform clusters, five seen and three unseen, with
    /// per-class query-noise radii so the accuracy transitions spread across
    /// the penalty range and the staircase is rich in both directions.
    fn generate(seed: u64) -> ToyGzsl {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 4usize;
        let classes: Vec<ClassId> = (0..8).collect();
        let seen_classes: Vec<ClassId> = classes[..5].to_vec();
        let centers: BTreeMap<ClassId, Vec<f64>> = classes
            .iter()
            .map(|&c| {
                let center = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                (c, center)
            })
            .collect();
        let radius = |c: ClassId| 0.5 + 0.25 * c as f64;

        let mut bank_raw = BTreeMap::new();
        for &c in &classes {
            let mut values = Vec::with_capacity(30 * dim);
            for _ in 0..30 {
                for d in 0..dim {
                    values.push(centers[&c][d] + rng.random_range(-0.7..0.7));
                }
            }
            bank_raw.insert(c, Tensor::matrix(30, dim, values).unwrap());
        }
        let bank = SynthBank::new(bank_raw.clone()).unwrap();

        let mut draw_queries = |ids: &[ClassId], per_class: usize| {
            let mut values = Vec::new();
            let mut truth = Vec::new();
            for &c in ids {
                let r = radius(c);
                for _ in 0..per_class {
                    for d in 0..dim {
                        values.push(centers[&c][d] + rng.random_range(-r..r));
                    }
                    truth.push(c);
                }
            }
            // One query row per truth label.
            (Tensor::matrix(truth.len(), dim, values).unwrap(), truth)
        };
        let (seen_queries, seen_truth) = draw_queries(&seen_classes, 150);
        let (unseen_queries, unseen_truth) = draw_queries(&classes[5..], 250);

        ToyGzsl {
            bank,
            bank_raw,
            seen_classes,
            seen_queries,
            seen_truth,
            unseen_queries,
            unseen_truth,
        }
    }

    /// Pivot means recomputed from the raw bank tensors, independent of the
    /// implementation's bank bookkeeping.
    fn oracle_pivots(&self) -> Vec<(ClassId, Vec<f64>)> {
        self.bank_raw
            .iter()
            .map(|(&c, t)| {
                let mut mean = vec![0.0; t.cols()];
                for r in 0..t.rows() {
                    for (m, v) in mean.iter_mut().zip(t.row(r)) {
                        *m += v / t.rows() as f64;
                    }
                }
                (c, mean)
            })
            .collect()
    }

    fn score_rows(&self, queries: &Tensor, pivots: &[(ClassId, Vec<f64>)]) -> Vec<Vec<f64>> {
        (0..queries.rows())
            .map(|r| {
                let q = queries.row(r);
                pivots
                    .iter()
                    .map(|(_, p)| {
                        -q.iter()
                            .zip(p)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect()
            })
            .collect()
    }

    /// Independent brute force: recompute pivot scores from the raw bank
    /// tensors, sweep a dense calibration grid, and integrate the resulting
    /// accuracy pairs. Shares only the tie rule (lowest class id) and the
    /// trapezoid convention with the implementation under test.
    fn dense_oracle(&self, points: usize) -> f64 {
        let pivots = self.oracle_pivots();
        let seen: BTreeSet<ClassId> = self.seen_classes.iter().copied().collect();
        let s_scores = self.score_rows(&self.seen_queries, &pivots);
        let u_scores = self.score_rows(&self.unseen_queries, &pivots);

        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in s_scores.iter().chain(&u_scores) {
            for &s in row {
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        let delta = hi - lo;

        let accuracy = |scores: &[Vec<f64>], truth: &[ClassId], lambda: f64| -> f64 {
            let hits = scores
                .iter()
                .zip(truth)
                .filter(|(row, &t)| {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_class = pivots[0].0;
                    for ((c, _), &raw) in pivots.iter().zip(row.iter()) {
                        let s = if seen.contains(c) { raw - lambda } else { raw };
                        if s > best {
                            best = s;
                            best_class = *c;
                        }
                    }
                    best_class == t
                })
                .count();
            hits as f64 / truth.len() as f64
        };

        let mut curve: Vec<(f64, f64)> = (0..points)
            .map(|i| {
                let lambda = -2.0 * delta + 4.0 * delta * i as f64 / (points - 1) as f64;
                (
                    accuracy(&s_scores, &self.seen_truth, lambda),
                    accuracy(&u_scores, &self.unseen_truth, lambda),
                )
            })
            .collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        curve
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }
}

#[test]
fn curve_area_matches_dense_enumeration() {
    // Two-point edge case: the (1,0)-(0,1) diagonal has area exactly 1/2.
    let diagonal = [
        SucPoint {
            lambda: -1.0,
            seen_accuracy: 1.0,
            unseen_accuracy: 0.0,
        },
        SucPoint {
            lambda: 1.0,
            seen_accuracy: 0.0,
            unseen_accuracy: 1.0,
        },
    ];
    assert_eq!(area_under_curve(&diagonal), 0.5);

    let mut detail = vec!["diagonal edge case exactly 0.5".to_string()];
    let mut all_close = true;
    for seed in [11u64, 12, 13] {
        let toy = ToyGzsl::generate(seed);
        let oracle = toy.dense_oracle(DENSE_GRID_POINTS);
        let area_on = |points: usize| -> f64 {
            let grid = calibration_grid(
                &toy.seen_queries,
                &toy.unseen_queries,
                &toy.bank,
                points,
            )
            .unwrap();
            gzsl_curve(
                &toy.seen_queries,
                &toy.seen_truth,
                &toy.unseen_queries,
                &toy.unseen_truth,
                &toy.bank,
                &toy.seen_classes,
                &grid,
            )
            .unwrap()
            .ausuc
        };
        // The verification resolution is what the comparison pins down; the
        // production default is a speed knob whose adequacy is asserted at
        // dataset scale in the CLI suite, so its deviation is only reported.
        let dense_diff = (area_on(DENSE_GRID_POINTS) - oracle).abs();
        let default_drift = (area_on(DEFAULT_GRID_POINTS) - oracle).abs();
        all_close &= dense_diff <= 1e-3;
        detail.push(format!(
            "seed {seed}: dense grid off by {dense_diff:.1e}, default grid drifts {default_drift:.1e}"
        ));
        assert!(
            dense_diff <= 1e-3,
            "seed {seed}: dense-grid area differs from the enumeration by {dense_diff:.2e}"
        );
    }
    report("curve area vs dense enumeration", all_close, &detail.join("; "));
}

// ---------------------------------------------------------------------------
// Retrieval scores against hand-computed values.
// ---------------------------------------------------------------------------

#[test]
fn average_precision_matches_hand_values() {
    // Relevance [1, 0, 1] at k = 3: precisions 1/1 and 2/3 over two relevant
    // items, so exactly 5/6.
    let ap = average_precision(&[true, false, true], 3);
    assert_eq!(ap, (1.0 + 2.0 / 3.0) / 2.0);
    assert!((ap - 5.0 / 6.0).abs() < 1e-15);

    // Perfectly separated clusters retrieve their own class at every cutoff.
    let mut per_class = BTreeMap::new();
    let mut gallery_values = Vec::new();
    let mut labels: Vec<ClassId> = Vec::new();
    for c in 0..3u32 {
        let mut values = Vec::new();
        for i in 0..5 {
            for d in 0..3 {
                let base = if d == c as usize { 10.0 } else { 0.0 };
                values.push(base + 0.01 * i as f64);
            }
        }
        per_class.insert(c as ClassId, Tensor::matrix(5, 3, values).unwrap());
        for i in 0..4 {
            for d in 0..3 {
                let base = if d == c as usize { 10.0 } else { 0.0 };
                gallery_values.push(base - 0.01 * i as f64);
            }
            labels.push(c as ClassId);
        }
    }
    let bank = SynthBank::new(per_class).unwrap();
    let gallery = Tensor::matrix(labels.len(), 3, gallery_values).unwrap();
    let mut maps = Vec::new();
    for ratio in [0.25, 0.5, 1.0] {
        let map = retrieval_map(&bank, &gallery, &labels, ratio).unwrap();
        assert_eq!(map, 1.0, "ratio {ratio}: expected perfect retrieval");
        maps.push(format!("map@{ratio} = {map}"));
    }
    report(
        "retrieval hand values",
        true,
        &format!("AP([1,0,1]@3) = 5/6 exactly, separated clusters: {}", maps.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// Text pipeline against reference fixtures and a hand-computed corpus.
// ---------------------------------------------------------------------------

#[test]
fn text_pipeline_matches_reference_fixtures() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../gazsl/tests/data/porter_fixture.tsv");
    let raw = fs::read_to_string(&fixture).unwrap();
    let mut checked = 0usize;
    for line in raw.lines() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // No trim: the fixture legitimately contains an empty stem ("s").
        let (word, expected) = line
            .split_once('\t')
            .unwrap_or_else(|| panic!("fixture line without a tab: {line:?}"));
        assert_eq!(porter_stem(word), expected, "stem of {word:?}");
        checked += 1;
    }
    assert!(checked >= 100, "only {checked} stemmer fixture pairs");

    // Five-document corpus, small enough to weight by hand. "common" appears
    // in every document, so its idf is ln(5/5) = 0 and it must vanish from
    // every vector. Document frequencies: apple 3, banana 2, cherry 2.
    let doc = |terms: &[&str]| -> Vec<String> { terms.iter().map(|t| t.to_string()).collect() };
    let corpus = vec![
        doc(&["apple", "apple", "common"]),
        doc(&["banana", "common"]),
        doc(&["cherry", "cherry", "cherry", "common"]),
        doc(&["apple", "cherry", "common"]),
        doc(&["banana", "apple", "apple", "common"]),
    ];
    let vocab = Vocabulary::build(&corpus).unwrap();
    assert_eq!(vocab.len(), 4);
    let apple = vocab.index_of("apple").unwrap();
    let banana = vocab.index_of("banana").unwrap();
    let cherry = vocab.index_of("cherry").unwrap();
    let common = vocab.index_of("common").unwrap();

    let ln53 = (5.0f64 / 3.0).ln();
    let ln52 = (5.0f64 / 2.0).ln();
    let mut expect = vec![vec![0.0; 4]; 5];
    // Single-term documents normalize to a unit spike regardless of count.
    expect[0][apple] = 1.0;
    expect[1][banana] = 1.0;
    expect[2][cherry] = 1.0;
    let n3 = (ln53 * ln53 + ln52 * ln52).sqrt();
    expect[3][apple] = ln53 / n3;
    expect[3][cherry] = ln52 / n3;
    let n4 = (4.0 * ln53 * ln53 + ln52 * ln52).sqrt();
    expect[4][apple] = 2.0 * ln53 / n4;
    expect[4][banana] = ln52 / n4;

    for (d, terms) in corpus.iter().enumerate() {
        let dense = encode_tfidf(terms, &vocab).to_dense();
        assert_eq!(dense[common], 0.0, "doc {d}: ubiquitous term must carry no weight");
        for (i, (&got, &want)) in dense.iter().zip(&expect[d]).enumerate() {
            assert!(
                (got - want).abs() < 1e-9,
                "doc {d} term {:?}: {got} vs hand value {want}",
                vocab.term(i)
            );
        }
    }
    assert!(encode_tfidf(&doc(&["common", "common"]), &vocab).is_zero());
    assert!(encode_tfidf(&doc(&["dragonfruit"]), &vocab).is_zero());

    report(
        "text pipeline fixtures",
        true,
        &format!("{checked} stemmer pairs exact, 5-document tf-idf oracle within 1e-9"),
    );
}

// ---------------------------------------------------------------------------
// Training determinism through the real binary.
// ---------------------------------------------------------------------------

/// Blank the wall-clock column of a loss history so two runs of identical
/// arithmetic compare equal; timing is the one column allowed to vary.
fn mask_wall_ms(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            if line.starts_with('#') || line.starts_with("step,") {
                return line.to_string();
            }
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 5 {
                fields[4] = "";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn repeated_training_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let spec = r#"{
        "class_count": 5, "seen_count": 3, "unseen_count": 2,
        "feature_dim": 6, "informative_dims": 6, "samples_per_class": 10,
        "vocab_size": 24, "words_per_class": 8, "noise_word_rate": 0.0,
        "seed": 3
    }"#;
    fs::write(root.join("spec.json"), spec).unwrap();
    let run = r#"{
        "train": {
            "batch_size": 8, "max_loops": 60, "z_dim": 4,
            "d_text": 8, "h_g": 16, "h_d": 16, "seed": 12
        }
    }"#;
    fs::write(root.join("run.json"), run).unwrap();

    let bin = env!("CARGO_BIN_EXE_gazsl");
    let data = root.join("data");
    let status = Command::new(bin)
        .args(["synthdata", "--spec"])
        .arg(root.join("spec.json"))
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let train = |model: &str, losses: &str| {
        let status = Command::new(bin)
            .args(["train", "--config"])
            .arg(root.join("run.json"))
            .arg("--data")
            .arg(&data)
            .arg("--out")
            .arg(root.join(model))
            .arg("--losses")
            .arg(root.join(losses))
            .status()
            .unwrap();
        assert!(status.success());
    };
    train("first.model.json", "first.csv");
    train("second.model.json", "second.csv");

    let first_model = fs::read(root.join("first.model.json")).unwrap();
    let second_model = fs::read(root.join("second.model.json")).unwrap();
    let first_losses = mask_wall_ms(&fs::read_to_string(root.join("first.csv")).unwrap());
    let second_losses = mask_wall_ms(&fs::read_to_string(root.join("second.csv")).unwrap());

    let models_match = first_model == second_model;
    let losses_match = first_losses == second_losses;
    report(
        "training determinism",
        models_match && losses_match,
        "two runs with one seed: model artifacts byte-identical, loss histories \
         identical with the wall-clock column masked",
    );
    assert!(models_match, "model artifacts differ between identical runs");
    assert!(losses_match, "loss histories differ beyond the wall-clock column");
}
