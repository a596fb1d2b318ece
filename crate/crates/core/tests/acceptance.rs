//! Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use whisperconv::cli::{cmd_convert, cmd_prepare, cmd_train, load_config, main_with_args, Init, MODEL_FILE};
use whisperconv::corpus::{prepare_waveform, TrainingExample, TriphoneVocab};
use whisperconv::dsp::{load_wav, mfcc, write_wav, FeatureKind, FeatureSequence, Waveform};
use whisperconv::evaluation::{
    analyze_waveform, bleu, estimate_f0, fit_gmm, gmm_kl_mc, tokenize, wer, AnalysisConfig, GmmModel,
};
use whisperconv::model::{causal_mask, scaled_dot_product_attention, Checkpoint, ModelConfig, ModelParams, Pass};
use whisperconv::numerics::{Graph, Tensor};
use whisperconv::synth::{concat, tone, vowel, Excitation};
use whisperconv::training::{
    aux_frame_accuracy, batch_loss, lr_schedule, model_loss, rmse_loss, train, triphone_xent_loss, Batch, StartFrom,
    TrainRunConfig,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-scale..scale))
}

// ---------------------------------------------------------------- gradients

fn total_loss(config: &ModelConfig, params: &ModelParams, batch: &Batch) -> f64 {
    let mut g = Graph::new();
    let bound = params.bind(&mut g, |_| false);
    let mut pass = Pass::new(&mut g, &bound, config, false, 0);
    let l = model_loss(&mut pass, batch, 1.0).unwrap().total;
    g.value(l).item().unwrap()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut config = ModelConfig::tiny(8, 8, 5);
    config.init_seed = 21;
    assert_eq!((config.k, config.n_heads, config.n_enc_layers, config.n_dec_layers, config.n_aux_layers), (3, 2, 2, 2, 1));
    let mut params = ModelParams::init(&config).map_err(e2s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    // A generic point: at the zero-bias initialisation the first decoder
    // position normalises an exactly zero vector.
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for n in &names {
        for v in params.get_mut(n).unwrap().data_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    let batch = Batch {
        src: uniform(&mut rng, &[2, 3, 8], 1.0),
        tgt: uniform(&mut rng, &[2, 3, 8], 1.0),
        labels: Some(vec![0, 3, 1, 4, 2, 2]),
    };

    let mut g = Graph::new();
    let bound = params.bind(&mut g, |_| true);
    let mut pass = Pass::new(&mut g, &bound, &config, false, 0);
    let total = model_loss(&mut pass, &batch, 1.0).map_err(e2s)?.total;
    let grads = g.backward(total).map_err(e2s)?;
    let analytic: Vec<(String, Tensor)> = bound
        .iter()
        .map(|(n, v)| (n.to_string(), grads.get(v).cloned().unwrap_or_else(|| Tensor::zeros(g.shape(v)))))
        .collect();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut where_ = String::new();
    let mut count = 0usize;
    for (name, a) in &analytic {
        for i in 0..a.len() {
            let orig = params.get(name).unwrap().data()[i];
            params.get_mut(name).unwrap().data_mut()[i] = orig + h;
            let up = total_loss(&config, &params, &batch);
            params.get_mut(name).unwrap().data_mut()[i] = orig - h;
            let down = total_loss(&config, &params, &batch);
            params.get_mut(name).unwrap().data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let an = a.data()[i];
            let rel = (an - numeric).abs() / an.abs().max(numeric.abs()).max(1e-3);
            if rel > worst {
                worst = rel;
                where_ = format!("{name}[{i}]");
            }
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-4 && secs < 30.0,
        format!("{count} parameters, max relative error {worst:.2e} at {where_} (< 1e-4), {secs:.1} s (< 30 s)"),
    )
}

// --------------------------------------------------- attention / layer norm

fn attention_and_norm_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_row: f64 = 0.0;
    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    let mut min_input_var = f64::INFINITY;
    for i in 0..1000 {
        let (b, heads, len, dk) = (rng.gen_range(1..3), rng.gen_range(1..5), rng.gen_range(1..9), rng.gen_range(1..17));
        let scale = rng.gen_range(0.1..5.0);
        let shape = [b, heads, len, dk];
        let mut g = Graph::new();
        let q = g.constant(uniform(&mut rng, &shape, scale));
        let k = g.constant(uniform(&mut rng, &shape, scale));
        let v = g.constant(uniform(&mut rng, &shape, scale));
        let mask = causal_mask(len);
        let out = scaled_dot_product_attention(&mut g, q, k, v, (i % 2 == 0).then_some(&mask)).map_err(e2s)?;
        for row in g.value(out.weights).data().chunks(len) {
            worst_row = worst_row.max((row.iter().sum::<f64>() - 1.0).abs());
        }

        let d = rng.gen_range(8..65);
        let rows = rng.gen_range(1..6);
        let mu = rng.gen_range(-10.0..10.0);
        let sd = rng.gen_range(0.5..5.0);
        let normal = Normal::new(mu, sd).unwrap();
        let x = Tensor::from_fn(&[rows, d], |_| normal.sample(&mut rng));
        for row in x.data().chunks(d) {
            let m = row.iter().sum::<f64>() / d as f64;
            min_input_var = min_input_var.min(row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d as f64);
        }
        let mut g = Graph::new();
        let xv = g.constant(x);
        let gamma = g.constant(Tensor::ones(&[d]));
        let beta = g.constant(Tensor::zeros(&[d]));
        let y = g.layer_norm(xv, gamma, beta, 1e-6).map_err(e2s)?;
        for row in g.value(y).data().chunks(d) {
            let m = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d as f64;
            worst_mean = worst_mean.max(m.abs());
            worst_var = worst_var.max((var - 1.0).abs());
        }
    }
    // attention maps of complete forward passes, aux decoder included
    let config = ModelConfig::tiny(8, 8, 5);
    let params = ModelParams::init(&config).map_err(e2s)?;
    let mut maps = 0;
    for _ in 0..10 {
        let mut g = Graph::new();
        let bound = params.bind(&mut g, |_| false);
        let mut pass = Pass::new(&mut g, &bound, &config, false, 0).capture_attention();
        let x = pass.g.constant(uniform(&mut rng, &[2, 3, 8], 3.0));
        let prev = pass.g.constant(uniform(&mut rng, &[2, 3, 8], 3.0));
        pass.forward(x, prev).map_err(e2s)?;
        let captured = pass.attention.take().unwrap_or_default();
        for w in captured {
            maps += 1;
            for row in g.value(w).data().chunks(3) {
                worst_row = worst_row.max((row.iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    ensure(
        worst_row < 1e-6 && worst_mean < 1e-6 && worst_var < 1e-4 && maps > 0,
        format!(
            "1000 inputs + {maps} model maps: row-sum error {worst_row:.1e}, LN |mean| {worst_mean:.1e}, |var-1| {worst_var:.1e} (min input var {min_input_var:.2})"
        ),
    )
}

// ------------------------------------------------------------------ overfit

fn overfit_oracle() -> Outcome {
    let start = Instant::now();
    let (d, p) = (24, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data: Vec<TrainingExample> = (0..32)
        .map(|i| {
            let src = uniform(&mut rng, &[3, d], 1.0);
            let s = src.data().to_vec();
            let tgt = Tensor::from_fn(&[3, d], |j| (1.5 * s[j] + 0.3 * s[(j + 5) % (3 * d)]).sin());
            TrainingExample {
                src,
                tgt,
                labels: Some((0..3).map(|_| rng.gen_range(0..p)).collect()),
                utterance: format!("u{i}"),
                chunk_index: 0,
            }
        })
        .collect();
    let mut config = ModelConfig::tiny(d, d, p);
    config.n_heads = 4;
    config.p_drop = 0.0;
    config.init_seed = 1;
    let run = TrainRunConfig {
        batch_size: 32,
        epochs: 1000,
        max_steps: Some(500),
        warmup_steps: 100,
        seed: 1,
        ..Default::default()
    };
    let init = ModelParams::init(&config).map_err(e2s)?;
    let l1_0 = batch_loss(&config, &init, &data, 1.0).map_err(e2s)?.l1_rmse;
    let out = train(&data, &config, &run, StartFrom::Scratch, None).map_err(e2s)?;
    let params = &out.checkpoint.params;
    let l1 = batch_loss(&config, params, &data, 1.0).map_err(e2s)?.l1_rmse;
    let acc = aux_frame_accuracy(&config, params, &data).map_err(e2s)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        l1 < 0.1 * l1_0 && acc == 1.0 && secs < 300.0,
        format!(
            "L1 {l1_0:.4} -> {l1:.4} ({:.1}% of initial, < 10%), aux accuracy {:.1}%, {secs:.0} s (< 300 s)",
            100.0 * l1 / l1_0,
            100.0 * acc
        ),
    )
}

// --------------------------------------------------------------- lr schedule

fn lr_closed_form() -> Outcome {
    let (d, w) = (80usize, 4000u64);
    let closed = |s: f64| (d as f64).powf(-0.5) * s.powf(-0.5).min(s * (w as f64).powf(-1.5));
    let mut worst: f64 = 0.0;
    for s in [1u64, 100, 4000, 40000] {
        worst = worst.max((lr_schedule(s, d, w).map_err(e2s)? - closed(s as f64)).abs());
    }
    let peak = lr_schedule(w, d, w).map_err(e2s)?;
    let mut argmax = 1;
    let mut best = 0.0;
    for s in 1..=3 * w {
        let v = lr_schedule(s, d, w).map_err(e2s)?;
        if v > best {
            best = v;
            argmax = s;
        }
    }
    ensure(
        worst <= 1e-12 && argmax == w && best == peak,
        format!("max deviation {worst:.1e} (<= 1e-12) at steps 1/100/4000/40000, argmax step {argmax} (warmup {w})"),
    )
}

// -------------------------------------------------------------- loss forms

fn loss_closed_forms() -> Outcome {
    let mut worst_rmse: f64 = 0.0;
    let mut worst_xent: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (b, k, n) = (rng.gen_range(1..5), rng.gen_range(1..6), rng.gen_range(1..30));
        let c: f64 = rng.gen_range(-3.0..3.0);
        let t = uniform(&mut rng, &[b, k, n], 2.0);
        let y = t.map(|v| v + c);
        let got = rmse_loss(&y, &t).map_err(e2s)?;
        worst_rmse = worst_rmse.max((got - k as f64 * c.abs()).abs());

        let p = rng.gen_range(2..50);
        let fill: f64 = rng.gen_range(-4.0..4.0);
        let logits = Tensor::full(&[b, k, p], fill);
        let labels: Vec<usize> = (0..b * k).map(|_| rng.gen_range(0..p)).collect();
        let got = triphone_xent_loss(&logits, &labels).map_err(e2s)?;
        worst_xent = worst_xent.max((got - k as f64 * (p as f64).ln()).abs());
    }
    ensure(
        worst_rmse <= 1e-12 && worst_xent <= 1e-10,
        format!("rmse vs k|c| {worst_rmse:.1e} (<= 1e-12), uniform xent vs k ln P {worst_xent:.1e} (<= 1e-10)"),
    )
}

// ---------------------------------------------------------------------- KL

fn kl_estimator() -> Outcome {
    let f = GmmModel { weights: vec![1.0], means: vec![0.0], variances: vec![1.0] };
    let g = GmmModel { weights: vec![1.0], means: vec![1.0], variances: vec![1.0] };
    let big = gmm_kl_mc(&f, &g, 1_000_000, 17).map_err(e2s)?;
    let small = gmm_kl_mc(&f, &g, 250_000, 17).map_err(e2s)?;
    let z = (big.value - 0.5).abs() / big.stderr;
    let ratio = small.stderr / big.stderr;
    ensure(
        z <= 3.0 && (ratio - 2.0).abs() <= 0.4,
        format!(
            "KL {:.5} +- {:.5} vs 0.5 ({z:.2} se, <= 3), stderr ratio 2.5e5->1e6 {ratio:.3} (2 +- 20%)",
            big.value, big.stderr
        ),
    )
}

// ---------------------------------------------------------------- formants

fn formant_oracle() -> Outcome {
    let want = [500.0, 1500.0, 2500.0, 3500.0];
    let res = [(500.0, 80.0), (1500.0, 90.0), (2500.0, 100.0), (3500.0, 120.0)];
    let w = vowel(Excitation::Pulses(120.0), &res, 16000, 16000, 0.5).map_err(e2s)?;
    let track = analyze_waveform(&w, &AnalysisConfig::default()).map_err(e2s)?;
    let mut medians = Vec::new();
    for i in 1..=4 {
        let mut v = track.values(i, true);
        if v.is_empty() {
            return Err(format!("no F{i} values"));
        }
        v.sort_by(f64::total_cmp);
        medians.push(v[v.len() / 2]);
    }
    let within = medians.iter().zip(want).all(|(m, w)| (m - w).abs() <= 50.0);
    let increasing = medians.windows(2).all(|p| p[0] < p[1])
        && track.frames.iter().all(|f| {
            let present: Vec<f64> = f.values[1..].iter().flatten().copied().collect();
            present.windows(2).all(|p| p[0] < p[1])
        });
    let t = tone(220.0, 16000, 640, 0.5).map_err(e2s)?;
    let f0 = estimate_f0(&t.samples, 16000, 60.0, 600.0).map_err(e2s)?.unwrap_or(f64::NAN);
    let shown: Vec<String> = medians.iter().map(|m| format!("{m:.0}")).collect();
    ensure(
        within && increasing && (f0 - 220.0).abs() <= 2.0,
        format!("F1-F4 medians [{}] Hz (+-50), increasing {increasing}, 220 Hz tone F0 {f0:.2} Hz (+-2)", shown.join(", ")),
    )
}

// --------------------------------------------------------------------- GMM

fn gmm_em() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = Normal::new(400.0, 60.0).unwrap();
    let b = Normal::new(1200.0, 90.0).unwrap();
    let values: Vec<f64> = (0..10_000)
        .map(|i| if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) })
        .collect();
    let sel = fit_gmm(&values, 1..=8, 4).map_err(e2s)?;
    let m = &sel.best.model;
    let mut means = m.means.clone();
    means.sort_by(f64::total_cmp);
    let mut monotone = true;
    for kg in 1..=8 {
        let fit = whisperconv::evaluation::fit_gmm_fixed(&values, kg, 4).map_err(e2s)?;
        monotone &= fit.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    }
    monotone &= sel.best.log_likelihood.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let ok = m.kg() == 2 && means.len() == 2 && (means[0] - 400.0).abs() <= 10.0 && (means[1] - 1200.0).abs() <= 10.0;
    ensure(
        ok && monotone,
        format!("BIC picked kg={}, means {:.1?} (+-10 Hz), EM log-likelihood monotone for kg 1..8: {monotone}", m.kg(), means),
    )
}

// --------------------------------------------------------- pipeline smoke

const VOWELS: [[(f64, f64); 4]; 4] = [
    [(730.0, 80.0), (1090.0, 90.0), (2440.0, 110.0), (3400.0, 130.0)],
    [(270.0, 60.0), (2290.0, 100.0), (3010.0, 120.0), (3700.0, 140.0)],
    [(530.0, 70.0), (1840.0, 90.0), (2480.0, 110.0), (3500.0, 130.0)],
    [(300.0, 60.0), (870.0, 80.0), (2240.0, 110.0), (3300.0, 130.0)],
];

/// 2 s utterance of four 0.5 s vowels. `shift` scales resonances.
fn utterance(ex: impl Fn(usize) -> Excitation, order: [usize; 4], shift: f64) -> Waveform {
    let parts: Vec<Waveform> = order
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let res: Vec<(f64, f64)> = VOWELS[v].iter().map(|&(f, b)| (f * shift, b)).collect();
            vowel(ex(i), &res, 16000, 8000, 0.5).unwrap()
        })
        .collect();
    concat(&parts, 0).unwrap()
}

fn write_corpus(dir: &Path) -> Result<(), String> {
    let orders = [[0, 1, 2, 3], [2, 3, 0, 1]];
    let mut manifest = String::new();
    for (u, order) in orders.into_iter().enumerate() {
        let whisper = utterance(|i| Excitation::Noise((u * 10 + i) as u64), order, 1.05);
        let natural = utterance(|i| Excitation::Pulses(110.0 + 10.0 * (u + i) as f64), order, 1.0);
        let hyp = utterance(|i| Excitation::Pulses(118.0 + 10.0 * (u + i) as f64), order, 1.03);
        for (sub, w) in [("whisper", &whisper), ("natural", &natural), ("hyp", &hyp)] {
            std::fs::create_dir_all(dir.join(sub)).map_err(e2s)?;
            write_wav(&dir.join(sub).join(format!("u{u}.wav")), w).map_err(e2s)?;
        }
        let prepared = prepare_waveform(&dir.join("whisper").join(format!("u{u}.wav")), -40.0).map_err(e2s)?;
        let frames = mfcc(&prepared, 80, 80).map_err(e2s)?.len();
        let labels: String = (0..frames)
            .map(|t| {
                let v = order[(t * 160 / 8000).min(3)];
                format!("v{v}-{}\n", if t % 50 < 25 { "a" } else { "b" })
            })
            .collect();
        std::fs::write(dir.join(format!("u{u}.lab")), labels).map_err(e2s)?;
        manifest += &format!("u{u}\twhisper/u{u}.wav\tnatural/u{u}.wav\tu{u}.lab\n");
    }
    std::fs::write(dir.join("manifest.tsv"), manifest).map_err(e2s)
}

const SMOKE_SETTINGS: [&str; 8] = [
    "model.n_enc_layers=2",
    "model.n_dec_layers=2",
    "model.n_aux_layers=1",
    "model.tap_layer=1",
    "model.d_ff=160",
    "train.batch_size=32",
    "train.warmup_steps=50",
    "eval.report.n_samples=20000",
];

fn cli(args: &[&str]) -> Result<(), String> {
    let mut full = vec!["whisperconv"];
    full.extend_from_slice(args);
    match main_with_args(full.clone()) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", full[1..].join(" "))),
    }
}

fn pipeline_smoke() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let d = tmp.path();
    write_corpus(d)?;
    let p = |s: &str| d.join(s).to_string_lossy().into_owned();
    let mut common: Vec<String> = vec!["--config".into(), "W2".into(), "--seed".into(), "3".into()];
    for s in SMOKE_SETTINGS {
        common.push("--set".into());
        common.push(s.into());
    }
    let c: Vec<&str> = common.iter().map(String::as_str).collect();
    let run = |sub: &[&str]| -> Result<(), String> {
        let mut a = sub.to_vec();
        a.extend_from_slice(&c);
        cli(&a)
    };
    run(&["prepare", &p("manifest.tsv"), "--out", &p("data")])?;
    run(&["train", &p("data"), "--out", &p("run"), "--set", "train.max_steps=200"])?;
    let ck = Checkpoint::load(&d.join("run").join(MODEL_FILE)).map_err(e2s)?;
    if ck.meta.step != 200 {
        return Err(format!("checkpoint at step {}, expected 200", ck.meta.step));
    }
    run(&["convert", &p("run/model.whlt"), &p("whisper/u0.wav"), "--out", &p("conv/u0.wfea")])?;
    let converted = FeatureSequence::load(&d.join("conv/u0.wfea")).map_err(e2s)?;
    let input_frames = mfcc(&load_wav(&d.join("whisper/u0.wav")).map_err(e2s)?, 80, 80).map_err(e2s)?.len();
    run(&["eval", &p("natural"), &p("hyp"), "--out", &p("eval")])?;
    run(&["eval", &p("natural"), &p("natural"), "--out", &p("self")])?;
    let rows = |dir: &str| -> Result<Vec<(String, f64, f64)>, String> {
        let text = std::fs::read_to_string(d.join(dir).join("kl_report.tsv")).map_err(e2s)?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or_default().split('\t').collect();
        let col = |name: &str| header.iter().position(|h| *h == name).ok_or(format!("no {name} column"));
        let (kl, se) = (col("kl_nats")?, col("stderr")?);
        lines
            .map(|l| {
                let f: Vec<&str> = l.split('\t').collect();
                Ok((f[0].to_string(), f[kl].parse().map_err(e2s)?, f[se].parse().map_err(e2s)?))
            })
            .collect()
    };
    let report = rows("eval")?;
    let selfrep = rows("self")?;
    let names: Vec<&str> = report.iter().map(|r| r.0.as_str()).collect();
    let self_ok = selfrep.len() == 5 && selfrep.iter().all(|(_, kl, se)| kl.abs() <= 3.0 * se.max(f64::MIN_POSITIVE) || *kl == 0.0);
    let secs = start.elapsed().as_secs_f64();
    let kls: Vec<String> = report.iter().map(|r| format!("{:.3}", r.1)).collect();
    ensure(
        names == ["F0", "F1", "F2", "F3", "F4"] && self_ok && converted.len() == input_frames && secs < 600.0,
        format!(
            "report rows {names:?}, KL [{}], self-comparison within 3 se: {self_ok}, converted {}/{} frames, {secs:.0} s (< 600 s)",
            kls.join(", "),
            converted.len(),
            input_frames
        ),
    )
}

// ------------------------------------------------------------- determinism

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let d = tmp.path();
    write_corpus(d)?;
    let mut overrides: Vec<String> = SMOKE_SETTINGS.iter().map(|s| s.to_string()).collect();
    overrides.push("train.max_steps=12".into());
    let mut cfg = load_config(Some("W2"), &overrides).map_err(e2s)?;
    cfg.set_seed(8);
    cmd_prepare(&d.join("manifest.tsv"), &cfg, &d.join("data")).map_err(e2s)?;
    let mut ck_bytes = Vec::new();
    let mut feat_bytes = Vec::new();
    for (i, deterministic) in [(0, true), (1, true), (2, false)] {
        cfg.train.deterministic = deterministic;
        let out = d.join(format!("run{i}"));
        cmd_train(&d.join("data"), &cfg, &Init::Scratch, &out).map_err(e2s)?;
        ck_bytes.push(std::fs::read(out.join(MODEL_FILE)).map_err(e2s)?);
        let f = d.join(format!("conv{i}.wfea"));
        cmd_convert(&out.join(MODEL_FILE), &d.join("whisper/u1.wav"), &f, &cfg).map_err(e2s)?;
        feat_bytes.push(std::fs::read(&f).map_err(e2s)?);
    }
    let same_ck = ck_bytes.windows(2).all(|w| w[0] == w[1]);
    let same_feat = feat_bytes.windows(2).all(|w| w[0] == w[1]);
    ensure(
        same_ck && same_feat,
        format!(
            "3 train+convert runs (2 sequential, 1 threaded): checkpoints identical {same_ck} ({} bytes), features identical {same_feat}",
            ck_bytes[0].len()
        ),
    )
}

// ------------------------------------------------------------- round trips

fn format_roundtrips() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let d = tmp.path();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut ok = true;
    let mut notes = Vec::new();

    for (kind, dim) in [(FeatureKind::Mfcc80, 80), (FeatureKind::Spectral24, 24), (FeatureKind::F0, 1), (FeatureKind::Aperiodic513, 513)] {
        let frames = uniform(&mut rng, &[17, dim], 100.0).round_to_f32();
        let seq = FeatureSequence::new(kind, frames).map_err(e2s)?;
        let p = d.join(format!("{kind}.wfea"));
        seq.save(&p).map_err(e2s)?;
        let back = FeatureSequence::load(&p).map_err(e2s)?;
        let same = back.kind == kind && back.frames.data() == seq.frames.data() && back.to_bytes() == seq.to_bytes();
        ok &= same;
    }
    notes.push(format!("features {}", if ok { "exact" } else { "differ" }));

    let mut vocab = TriphoneVocab::new();
    for i in 0..200 {
        vocab.intern(&format!("p{}-q{}+r{}", i % 7, i % 11, i));
    }
    let vp = d.join("vocab.txt");
    vocab.save(&vp).map_err(e2s)?;
    let vb = TriphoneVocab::load(&vp).map_err(e2s)?;
    let v_ok = vb == vocab && vb.to_text() == std::fs::read_to_string(&vp).map_err(e2s)?;
    ok &= v_ok;
    notes.push(format!("vocab {}", if v_ok { "exact" } else { "differs" }));

    let mut config = ModelConfig::tiny(16, 8, 6);
    config.init_seed = 4;
    let mut ck = Checkpoint::new(config.clone(), ModelParams::init(&config).map_err(e2s)?);
    ck.meta.step = 42;
    ck.meta.src_kind = Some("raw16".into());
    ck.state.insert("adam.m.x".into(), uniform(&mut rng, &[3, 4], 1.0).round_to_f32());
    let cp = d.join("m.whlt");
    ck.save(&cp).map_err(e2s)?;
    let cb = Checkpoint::load(&cp).map_err(e2s)?;
    let c_ok = cb == ck && cb.to_bytes().map_err(e2s)? == std::fs::read(&cp).map_err(e2s)?;
    ok &= c_ok;
    notes.push(format!("checkpoint {}", if c_ok { "exact" } else { "differs" }));

    let samples: Vec<f64> = (0..16000).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = Waveform::new(samples, 22050).map_err(e2s)?;
    let wp = d.join("x.wav");
    write_wav(&wp, &w).map_err(e2s)?;
    let wb = load_wav(&wp).map_err(e2s)?;
    let lsb = 1.0 / 32768.0;
    let err = w.samples.iter().zip(&wb.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let w_ok = wb.sample_rate == 22050 && wb.len() == w.len() && err <= lsb;
    ok &= w_ok;
    notes.push(format!("wav max error {:.2} LSB", err / lsb));
    ensure(ok, notes.join(", "))
}

// ------------------------------------------------------------ metric units

fn metric_units() -> Outcome {
    let toks = |s: &'static str| tokenize(s);
    let cases = [
        (wer(&toks("the cat sat on the mat"), &toks("the cat sat on the mat")).map_err(e2s)?, 0.0),
        (wer(&toks("the cat sat"), &toks("the bat sit")).map_err(e2s)?, 2.0 / 3.0),
        (wer(&toks("a b c d"), &toks("")).map_err(e2s)?, 1.0),
        (bleu(&["the quick brown fox jumps"], &["the quick brown fox jumps"]).map_err(e2s)?, 100.0),
        (bleu(&["the quick brown fox jumps"], &["zebra yak xylophone walrus vole"]).map_err(e2s)?, 0.0),
        (bleu(&["the cat sat on the mat"], &["the cat sat on"]).map_err(e2s)?, 100.0 * (1.0f64 - 6.0 / 4.0).exp()),
    ];
    let worst = cases.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);
    let shown: Vec<String> = cases.iter().map(|(g, _)| format!("{g:.4}")).collect();
    ensure(worst <= 1e-9, format!("wer 0 / 0.667 / 1, bleu 100 / 0 / brevity = [{}], max error {worst:.1e}", shown.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("gradient-correctness", gradient_correctness),
        ("attention-norm-invariants", attention_and_norm_invariants),
        ("overfit-oracle", overfit_oracle),
        ("lr-schedule", lr_closed_form),
        ("loss-closed-forms", loss_closed_forms),
        ("kl-estimator", kl_estimator),
        ("formant-oracle", formant_oracle),
        ("gmm-em", gmm_em),
        ("pipeline-smoke", pipeline_smoke),
        ("determinism", determinism),
        ("format-roundtrips", format_roundtrips),
        ("metric-units", metric_units),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    let total = Instant::now();
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let el = Duration::as_secs_f64(&t.elapsed());
        match result {
            Ok(detail) => println!("PASS {name:<26} {el:>7.1}s  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name:<26} {el:>7.1}s  {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.0} s",
        ran - failed,
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
