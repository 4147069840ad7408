//! Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Every expected value comes from an oracle written here, independent
//! of the library's own code path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use review_sentinel_core::analytics::{ols_fit, pca_fit, standardize, t_sf_two_sided};
use review_sentinel_core::evaluation::{report, roc, sweep_thresholds, ThresholdGrid};
use review_sentinel_core::ingest::{
    filter_products, merge_on_parent_asin, parse_metadata, parse_reviews, Strictness,
};
use review_sentinel_core::model_math::{
    attention, mlm_loss, multi_head, nsp_loss, softmax, total_loss, HeadProjection, LossWeights,
    MaskedBatch,
};
use review_sentinel_core::pipeline::{read_rows, run_pipeline};
use review_sentinel_core::scoring::{score_corpus, LexiconScorer};
use review_sentinel_core::synth::blank_review;
use review_sentinel_core::timeseries::{
    arima_fit, css_objective, heteroskedasticity_h, jarque_bera, ljung_box, pacf, ArimaOrder,
};
use review_sentinel_core::{ConfusionMatrix, Matrix, PipelineConfig};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn within(elapsed: Duration, limit_s: u64, what: &str) -> Check {
    ensure!(
        elapsed < Duration::from_secs(limit_s),
        "{what} took {elapsed:?}, limit {limit_s} s"
    );
    Ok(())
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

// ---------------------------------------------------------------- metrics

/// P(score⁺ > score⁻) with ties counted ½.
fn pair_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            den += 1.0;
            if si > sj {
                num += 1.0;
            } else if si == sj {
                num += 0.5;
            }
        }
    }
    num / den
}

struct Brute {
    weighted: [f64; 3],
    macro_: [f64; 3],
}

/// Weighted and macro precision/recall/F1 recomputed straight from the
/// label and prediction sequences.
fn brute_metrics(truth: &[u8], pred: &[u8]) -> Brute {
    let frac = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut per_class = Vec::new();
    for c in [0u8, 1] {
        let hit = truth
            .iter()
            .zip(pred)
            .filter(|&(&t, &p)| t == c && p == c)
            .count();
        let predicted = pred.iter().filter(|&&p| p == c).count();
        let support = truth.iter().filter(|&&t| t == c).count();
        let p = frac(hit, predicted);
        let r = frac(hit, support);
        let f = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        per_class.push(([p, r, f], support as f64));
    }
    let n = truth.len() as f64;
    let mut weighted = [0.0; 3];
    let mut macro_ = [0.0; 3];
    for m in 0..3 {
        weighted[m] = (per_class[0].0[m] * per_class[0].1 + per_class[1].0[m] * per_class[1].1) / n;
        macro_[m] = (per_class[0].0[m] + per_class[1].0[m]) / 2.0;
    }
    Brute { weighted, macro_ }
}

fn confusion_of(truth: &[u8], pred: &[u8]) -> ConfusionMatrix {
    review_sentinel_core::evaluation::confusion(truth, pred).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let n = rng.random_range(2..=200);
    // coarse scores on half the instances so ties are common
    let coarse = rng.random_bool(0.5);
    let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let scores = labels
        .iter()
        .map(|&l| {
            let s: f64 = if coarse {
                f64::from(rng.random_range(-4i32..=4)) / 4.0
            } else {
                rng.random_range(-1.0..1.0)
            };
            (s + 0.3 * f64::from(l)).clamp(-1.0, 1.0)
        })
        .collect();
    (scores, labels)
}

fn metric_oracles() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for inst in 0..1000 {
        let (scores, labels) = random_instance(&mut rng);
        let auc = roc(&scores, &labels).map_err(|e| e.to_string())?.auc;
        let oracle = pair_auc(&scores, &labels);
        ensure!(
            (auc - oracle).abs() <= 1e-9,
            "instance {inst}: auc {auc} vs pairs {oracle}"
        );

        let t = rng.random_range(-1.0..1.0);
        let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s > t)).collect();
        let rep = report(&confusion_of(&labels, &pred));
        let b = brute_metrics(&labels, &pred);
        let w = [
            rep.weighted_avg.precision,
            rep.weighted_avg.recall,
            rep.weighted_avg.f1,
        ];
        let m = [
            rep.macro_avg.precision,
            rep.macro_avg.recall,
            rep.macro_avg.f1,
        ];
        ensure!(
            w == b.weighted,
            "instance {inst}: weighted {w:?} vs {:?}",
            b.weighted
        );
        ensure!(
            m == b.macro_,
            "instance {inst}: macro {m:?} vs {:?}",
            b.macro_
        );
    }
    within(start.elapsed(), 10, "metric oracles")
}

fn threshold_sweep() -> Check {
    let mut scores = vec![-1.0; 5];
    scores.extend([1.0; 5]);
    let mut labels = vec![0u8; 5];
    labels.extend([1u8; 5]);
    let r =
        sweep_thresholds(&scores, &labels, ThresholdGrid::default()).map_err(|e| e.to_string())?;
    ensure!(
        r.best_threshold == -1.0,
        "best threshold {}",
        r.best_threshold
    );
    ensure!(r.best_f1 == 1.0, "best f1 {}", r.best_f1);

    let grid: Vec<f64> = (0..20).map(|i| -1.0 + i as f64 * 0.1).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for inst in 0..200 {
        let (scores, labels) = random_instance(&mut rng);
        let r = sweep_thresholds(&scores, &labels, ThresholdGrid::default())
            .map_err(|e| e.to_string())?;
        let f1s: Vec<f64> = grid
            .iter()
            .map(|&t| {
                let pred: Vec<u8> = scores.iter().map(|&s| u8::from(s > t)).collect();
                brute_metrics(&labels, &pred).weighted[2]
            })
            .collect();
        let max = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first = f1s.iter().position(|&f| f == max).unwrap();
        ensure!(
            r.best_f1 == max,
            "instance {inst}: best {} vs max {max}",
            r.best_f1
        );
        ensure!(
            (r.best_threshold - grid[first]).abs() < 1e-12,
            "instance {inst}: threshold {} vs first maximiser {}",
            r.best_threshold,
            grid[first]
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- analytics

/// Two-sided Student-t p-value by Simpson integration of the density.
fn t_pvalue_by_integration(t: f64, df: u32) -> f64 {
    // Γ((ν+1)/2)/(√(νπ)Γ(ν/2)) for ν = 10: Γ(5.5) = 4.5·3.5·2.5·1.5·0.5·√π, Γ(5) = 24
    assert_eq!(df, 10);
    let pi = std::f64::consts::PI;
    let gamma_55 = 4.5 * 3.5 * 2.5 * 1.5 * 0.5 * pi.sqrt();
    let c = gamma_55 / ((10.0 * pi).sqrt() * 24.0);
    let f = |x: f64| c * (1.0 + x * x / 10.0).powf(-5.5);
    let n = 20_000;
    let h = t / n as f64;
    let mut s = f(0.0) + f(t);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

fn ols_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for inst in 0..100 {
        let k = rng.random_range(1..=5);
        let n = rng.random_range(k + 5..=50);
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| normal(&mut rng)).collect())
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                1.5 + cols
                    .iter()
                    .enumerate()
                    .map(|(j, c)| (j as f64 - 1.0) * c[i])
                    .sum::<f64>()
                    + normal(&mut rng)
            })
            .collect();
        let x = Matrix::from_columns(&cols).map_err(|e| e.to_string())?;
        let fit = ols_fit(&x, &y, true).map_err(|e| e.to_string())?;

        let design: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                std::iter::once(1.0)
                    .chain(cols.iter().map(|c| c[i]))
                    .collect()
            })
            .collect();
        let p = k + 1;
        let xtx: Vec<Vec<f64>> = (0..p)
            .map(|a| {
                (0..p)
                    .map(|b| design.iter().map(|r| r[a] * r[b]).sum())
                    .collect()
            })
            .collect();
        let xty: Vec<f64> = (0..p)
            .map(|a| design.iter().zip(&y).map(|(r, yi)| r[a] * yi).sum())
            .collect();
        let beta = solve(xtx, xty);
        for (j, (&b, &o)) in fit.coefficients.iter().zip(&beta).enumerate() {
            ensure!(
                (b - o).abs() <= 1e-8 * o.abs().max(1.0),
                "design {inst}: coefficient {j} {b} vs normal equations {o}"
            );
        }
        let scale = n as f64
            * design.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
            * y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for a in 0..p {
            let g: f64 = design
                .iter()
                .zip(&fit.residuals)
                .map(|(r, e)| r[a] * e)
                .sum();
            ensure!(g.abs() <= 1e-8 * scale, "design {inst}: X'r[{a}] = {g}");
        }
    }
    let oracle = t_pvalue_by_integration(2.0, 10);
    let lib = t_sf_two_sided(2.0, 10.0);
    ensure!((oracle - 0.07339).abs() <= 1e-4, "integrated p {oracle}");
    ensure!(
        (lib - oracle).abs() <= 1e-4,
        "library p {lib} vs integrated {oracle}"
    );
    Ok(())
}

fn pca_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, d) = (60, 5);
    let base: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..n).map(|_| normal(&mut rng)).collect())
        .collect();
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..n)
                .map(|i| base[j % 3][i] * (j as f64 + 1.0) + 0.5 * normal(&mut rng) + j as f64)
                .collect()
        })
        .collect();
    let z = standardize(&Matrix::from_columns(&cols).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .z;
    let model = pca_fit(&z, 0.95).map_err(|e| e.to_string())?;
    let total: f64 = model.explained_variance_ratio.iter().sum();
    ensure!((total - 1.0).abs() <= 1e-9, "ratios sum to {total}");
    for a in 0..d {
        for b in 0..d {
            let dot: f64 = (0..d)
                .map(|c| model.components.get(a, c) * model.components.get(b, c))
                .sum();
            let want = if a == b { 1.0 } else { 0.0 };
            ensure!((dot - want).abs() <= 1e-9, "components {a},{b} dot {dot}");
        }
    }
    let scores = model.project(&z, d).map_err(|e| e.to_string())?;
    let back = model.reconstruct(&scores);
    for r in 0..n {
        for c in 0..d {
            let e = (back.get(r, c) - z.get(r, c)).abs();
            ensure!(e <= 1e-8, "reconstruction error {e} at ({r},{c})");
        }
    }

    let t: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let line: Vec<Vec<f64>> = (0..4)
        .map(|j| {
            t.iter()
                .map(|&v| (j as f64 - 1.5) * v + 3.0 * j as f64)
                .collect()
        })
        .collect();
    let z = standardize(&Matrix::from_columns(&line).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .z;
    let model = pca_fit(&z, 0.95).map_err(|e| e.to_string())?;
    ensure!(
        model.explained_variance_ratio[0] >= 0.999,
        "rank-1 first ratio {}",
        model.explained_variance_ratio[0]
    );
    Ok(())
}

// ---------------------------------------------------------------- time series

fn sample_acf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c = |k: usize| {
        x.iter()
            .skip(k)
            .zip(x)
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
    };
    let c0 = c(0);
    (0..=max_lag).map(|k| c(k) / c0).collect()
}

/// φ_kk as the last coefficient of the order-k Yule–Walker system.
fn yule_walker_pacf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let rho = sample_acf(x, max_lag);
    (1..=max_lag)
        .map(|k| {
            let r: Vec<Vec<f64>> = (0..k)
                .map(|i| (0..k).map(|j| rho[i.abs_diff(j)]).collect())
                .collect();
            solve(r, rho[1..=k].to_vec())[k - 1]
        })
        .collect()
}

fn ar1(rng: &mut ChaCha8Rng, phi: f64, n: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(n);
    let mut prev = 0.0;
    for i in 0..n + 100 {
        prev = phi * prev + normal(rng);
        if i >= 100 {
            x.push(prev);
        }
    }
    x
}

fn pacf_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for s in 0..50 {
        let phi = rng.random_range(-0.8..0.8);
        let x = ar1(&mut rng, phi, 300);
        let got = pacf(&x, 20).map_err(|e| e.to_string())?.coefficients;
        let want = yule_walker_pacf(&x, 20);
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            ensure!(
                (g - w).abs() <= 1e-6,
                "series {s} lag {}: {g} vs {w}",
                k + 1
            );
        }
    }
    let x = ar1(&mut ChaCha8Rng::seed_from_u64(50), 0.8, 5000);
    let p = pacf(&x, 20).map_err(|e| e.to_string())?;
    let p1 = p.coefficients[0];
    ensure!((0.75..=0.85).contains(&p1), "AR(1) pacf_1 = {p1}");
    let band = 1.96 / 5000f64.sqrt();
    let inside = p.coefficients[1..]
        .iter()
        .filter(|v| v.abs() <= band)
        .count();
    ensure!(
        inside * 10 >= 19 * 9,
        "only {inside}/19 higher lags inside the band"
    );
    Ok(())
}

fn arma11(seed: u64, phi: f64, theta: f64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x_prev, mut e_prev) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n + 200 {
        let e = normal(&mut rng);
        let x = phi * x_prev + e + theta * e_prev;
        if i >= 200 {
            out.push(x);
        }
        x_prev = x;
        e_prev = e;
    }
    out
}

fn arima_recovery() -> Check {
    let start = Instant::now();
    let order = ArimaOrder::new(1, 0, 1).map_err(|e| e.to_string())?;
    let mut recovered = 0;
    for seed in 0..20 {
        let x = arma11(1000 + seed, 0.5, 0.3, 2000);
        let fit = arima_fit(&x, order).map_err(|e| e.to_string())?;
        if (fit.phi[0] - 0.5).abs() <= 0.1 && (fit.theta[0] - 0.3).abs() <= 0.1 {
            recovered += 1;
        }
        let obj = css_objective(&x, order, &[fit.phi[0], fit.theta[0]]);
        ensure!(
            (obj - fit.css).abs() <= 1e-9 * fit.css,
            "seed {seed}: css {} vs objective {obj}",
            fit.css
        );
        for i in 0..=38 {
            for j in 0..=38 {
                let g = [-0.95 + 0.05 * i as f64, -0.95 + 0.05 * j as f64];
                let v = css_objective(&x, order, &g);
                ensure!(
                    fit.css <= v,
                    "seed {seed}: grid point {g:?} has {v} < {}",
                    fit.css
                );
            }
        }
    }
    ensure!(recovered >= 18, "recovered {recovered}/20");
    within(start.elapsed(), 60, "ARIMA recovery")
}

fn diagnostics() -> Check {
    let mut flat = vec![0.0; 8];
    flat.extend([-1.0, -1.0, 1.0, 1.0]);
    let jb = jarque_bera(&flat).map_err(|e| e.to_string())?;
    ensure!(jb.jb.abs() < 1e-12, "JB = {}", jb.jb);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pass = 0;
    for _ in 0..100 {
        let e: Vec<f64> = (0..500).map(|_| normal(&mut rng)).collect();
        if ljung_box(&e, 10).map_err(|e| e.to_string())?.p_value > 0.05 {
            pass += 1;
        }
    }
    ensure!(pass >= 90, "Ljung-Box p > 0.05 on {pass}/100 iid series");

    let first = [0.3, -1.2, 0.8, 1.1, -0.4];
    let middle = [5.0, -2.0, 0.1, 0.7, 3.3];
    let mut res: Vec<f64> = first.to_vec();
    res.extend(middle);
    res.extend(first.iter().map(|v| 2.0 * v));
    let h = heteroskedasticity_h(&res).map_err(|e| e.to_string())?;
    ensure!(h.h == 4.0, "H = {}", h.h);
    Ok(())
}

// ---------------------------------------------------------------- model math

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn close(a: f64, b: f64, what: &str) -> Check {
    ensure!((a - b).abs() <= 1e-12, "{what}: {a} vs {b}");
    Ok(())
}

fn model_math() -> Check {
    let s = softmax(&[0.0, 0.0]);
    close(s[0], 0.5, "softmax [0,0]")?;
    let s = softmax(&[2f64.ln(), 0.0]);
    close(s[0], 2.0 / 3.0, "softmax [ln2,0]")?;
    close(s[1], 1.0 / 3.0, "softmax [ln2,0]")?;
    let s = softmax(&[1000.0, 1000.0]);
    close(s[0], 0.5, "softmax [1000,1000]")?;

    let err = |e: review_sentinel_core::model_math::ModelMathError| e.to_string();
    close(
        attention(&m(&[&[1.0]]), &m(&[&[1.0]]), &m(&[&[7.0]]))
            .map_err(err)?
            .get(0, 0),
        7.0,
        "single key",
    )?;
    let two =
        attention(&m(&[&[0.4]]), &m(&[&[1.0], &[1.0]]), &m(&[&[1.0], &[3.0]])).map_err(err)?;
    close(two.get(0, 0), 2.0, "identical keys")?;
    let a = attention(
        &m(&[&[1.0, 0.0]]),
        &m(&[&[1.0, 0.0], &[0.0, 1.0]]),
        &m(&[&[1.0], &[0.0]]),
    )
    .map_err(err)?;
    let w = (1.0 / 2f64.sqrt()).exp();
    close(a.get(0, 0), w / (w + 1.0), "scaled dot product")?;

    // one head, identity projections and output → plain self-attention
    let x = m(&[&[0.2, -1.0, 0.5], &[1.5, 0.3, -0.7]]);
    let id = Matrix::identity(3);
    let one = multi_head(
        &x,
        &[HeadProjection {
            w_q: id.clone(),
            w_k: id.clone(),
            w_v: id.clone(),
        }],
        &id,
    )
    .map_err(err)?;
    let plain = attention(&x, &x, &x).map_err(err)?;
    for r in 0..2 {
        for c in 0..3 {
            close(one.get(r, c), plain.get(r, c), "single head")?;
        }
    }
    // two heads against concatenated single-head outputs projected by hand
    let x = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
    let h1 = HeadProjection {
        w_q: Matrix::identity(2),
        w_k: Matrix::identity(2),
        w_v: m(&[&[1.0], &[0.0]]),
    };
    let h2 = HeadProjection {
        w_q: m(&[&[0.5, 0.0], &[0.0, 2.0]]),
        w_k: Matrix::identity(2),
        w_v: m(&[&[0.0], &[1.0]]),
    };
    let w_o = m(&[&[1.0, 2.0], &[-1.0, 0.5]]);
    let out = multi_head(&x, &[h1.clone(), h2.clone()], &w_o).map_err(err)?;
    ensure!(out.cols() == 2, "output width {}", out.cols());
    let head = |h: &HeadProjection| {
        let q = x.matmul(&h.w_q).unwrap();
        let k = x.matmul(&h.w_k).unwrap();
        let v = x.matmul(&h.w_v).unwrap();
        // row-wise softmax(QKᵀ/√2)·V evaluated directly
        (0..3)
            .map(|i| {
                let s: Vec<f64> = (0..3)
                    .map(|j| (0..2).map(|c| q.get(i, c) * k.get(j, c)).sum::<f64>() / 2f64.sqrt())
                    .collect();
                let mx = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = s.iter().map(|v| (v - mx).exp()).collect();
                let z: f64 = e.iter().sum();
                (0..3).map(|j| e[j] / z * v.get(j, 0)).sum::<f64>()
            })
            .collect::<Vec<f64>>()
    };
    let (a1, a2) = (head(&h1), head(&h2));
    for i in 0..3 {
        for c in 0..2 {
            let want = a1[i] * w_o.get(0, c) + a2[i] * w_o.get(1, c);
            close(out.get(i, c), want, "two heads")?;
        }
    }

    let merr = |e: review_sentinel_core::model_math::ModelMathError| e.to_string();
    let sure = MaskedBatch::new(vec![vec![0.0, 1.0, 0.0]], 0.5, 1).map_err(merr)?;
    close(mlm_loss(&sure, &[1]).map_err(merr)?, 0.0, "certain MLM")?;
    let uniform = MaskedBatch::new(vec![vec![0.25; 4]], 0.5, 1).map_err(merr)?;
    close(
        mlm_loss(&uniform, &[2]).map_err(merr)?,
        4f64.ln(),
        "uniform MLM",
    )?;
    let pair = MaskedBatch::new(vec![vec![0.25; 4], vec![0.5, 0.5]], 0.5, 1).map_err(merr)?;
    close(
        mlm_loss(&pair, &[0, 1]).map_err(merr)?,
        4f64.ln() + 2f64.ln(),
        "two masks",
    )?;
    close(nsp_loss(0.5, 0).map_err(merr)?, 2f64.ln(), "NSP y=0")?;
    close(nsp_loss(0.25, 1).map_err(merr)?, 4f64.ln(), "NSP y=1")?;
    ensure!(
        nsp_loss(1.0 - 1e-12, 1).map_err(merr)? < 1e-11,
        "NSP near-certain"
    );
    close(
        total_loss(2.0, 3.0, LossWeights::default()),
        5.0,
        "total (2,3)",
    )?;
    close(
        total_loss(1.7, 0.0, LossWeights::default()),
        1.7,
        "total (x,0)",
    )?;
    close(
        total_loss(1.0, 1.0, LossWeights { mlm: 0.5, nsp: 0.5 }),
        1.0,
        "total halves",
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for inst in 0..1000 {
        let (nq, nk, dk, dv) = (
            rng.random_range(1..=4),
            rng.random_range(1..=5),
            rng.random_range(1..=4),
            rng.random_range(1..=3),
        );
        let mut rand_m = |r: usize, c: usize| {
            Matrix::new(r, c, (0..r * c).map(|_| 3.0 * normal(&mut rng)).collect()).unwrap()
        };
        let (q, k, v) = (rand_m(nq, dk), rand_m(nk, dk), rand_m(nk, dv));
        let out = attention(&q, &k, &v).map_err(err)?;
        for c in 0..dv {
            let col = v.column(c);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for r in 0..nq {
                let o = out.get(r, c);
                ensure!(
                    o >= lo - 1e-12 && o <= hi + 1e-12,
                    "instance {inst}: output {o} outside [{lo}, {hi}]"
                );
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- pipeline

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

fn files_in(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn pipeline_determinism() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let mut cfg = PipelineConfig::default();
        cfg.reviews = Some(corpus_dir().join("reviews.jsonl"));
        cfg.metadata = Some(corpus_dir().join("meta.jsonl"));
        cfg.output_dir = tmp.path().join(run);
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
        outputs.push(files_in(&cfg.output_dir));
    }
    ensure!(!outputs[0].is_empty(), "no artifacts written");
    for ext in ["jsonl", "csv", "svg"] {
        ensure!(
            outputs[0].keys().any(|k| k.ends_with(ext)),
            "no .{ext} artifact"
        );
    }
    ensure!(
        outputs[0].keys().eq(outputs[1].keys()),
        "artifact sets differ"
    );
    for (name, bytes) in &outputs[0] {
        ensure!(outputs[1][name] == *bytes, "{name} differs between runs");
    }

    let (rows, _) = read_rows(&tmp.path().join("a/merged.jsonl"), Strictness::Strict)
        .map_err(|e| e.to_string())?;
    let mut spec = PipelineConfig::default().scorer;
    let scorer = LexiconScorer {
        lexicon: &spec.lexicon.clone(),
        squash: spec.squash,
    };
    spec.workers = 1;
    let serial = score_corpus(rows.clone(), &spec, &scorer).map_err(|e| e.to_string())?;
    spec.workers = 8;
    let parallel = score_corpus(rows, &spec, &scorer).map_err(|e| e.to_string())?;
    ensure!(serial.len() == parallel.len(), "row counts differ");
    for (i, (a, b)) in serial.iter().zip(&parallel).enumerate() {
        ensure!(
            a.sentiment_score == b.sentiment_score,
            "row {i}: {:?} vs {:?}",
            a.sentiment_score,
            b.sentiment_score
        );
    }
    within(start.elapsed(), 30, "pipeline determinism")
}

// ---------------------------------------------------------------- ingest

fn ingest_join() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for corpus in 0..5 {
        let keys: Vec<String> = (0..rng.random_range(5..80))
            .map(|i| format!("P{i}"))
            .collect();
        let review_keys: Vec<String> = (0..1000)
            .map(|_| keys[rng.random_range(0..keys.len())].clone())
            .collect();
        // metadata covers a random subset of keys, some twice, plus unused keys
        let mut meta_keys: Vec<String> = keys
            .iter()
            .filter(|_| rng.random_bool(0.7))
            .cloned()
            .collect();
        let dups: Vec<String> = meta_keys
            .iter()
            .filter(|_| rng.random_bool(0.2))
            .cloned()
            .collect();
        meta_keys.extend(dups);
        meta_keys.extend((0..5).map(|i| format!("X{i}")));

        let reviews: String = review_keys
            .iter()
            .enumerate()
            .map(|(i, k)| {
                format!(
                    "{{\"rating\":{},\"title\":\"t\",\"text\":\"r{i}\",\"images\":[],\"parent_asin\":\"{k}\",\"user_id\":\"u\",\"timestamp\":{},\"verified_purchase\":true,\"helpful_vote\":0}}\n",
                    1 + i % 5,
                    1_500_000_000_000i64 + i as i64 * 1000
                )
            })
            .collect();
        let meta: String = meta_keys
            .iter()
            .enumerate()
            .map(|(i, k)| format!("{{\"parent_asin\":\"{k}\",\"title\":\"m\",\"store\":\"s{i}\",\"price\":1.0}}\n"))
            .collect();
        let reviews = parse_reviews(reviews.as_bytes(), Strictness::Strict)
            .map_err(|e| e.to_string())?
            .records;
        let meta = parse_metadata(meta.as_bytes(), Strictness::Strict)
            .map_err(|e| e.to_string())?
            .records;
        let joined = merge_on_parent_asin(&reviews, &meta).rows;

        let mut oracle = Vec::new();
        for (ri, rk) in review_keys.iter().enumerate() {
            for (mi, mk) in meta_keys.iter().enumerate() {
                if rk == mk {
                    oracle.push((ri, mi));
                    break;
                }
            }
        }
        ensure!(
            joined.len() == oracle.len(),
            "corpus {corpus}: {} joined vs {} by nested loop",
            joined.len(),
            oracle.len()
        );
        for (row, &(ri, mi)) in joined.iter().zip(&oracle) {
            ensure!(
                row.review.text == format!("r{ri}") && row.meta.store == format!("s{mi}"),
                "corpus {corpus}: pairing differs at review {ri}"
            );
        }
    }

    let product = |asin: &str, n: usize, unpriced: usize| -> Vec<_> {
        (0..n)
            .map(|i| {
                let mut r = blank_review("ok");
                r.parent_asin = asin.to_owned();
                r.price = if i < unpriced { None } else { Some(9.99) };
                r
            })
            .collect()
    };
    let kept = filter_products(product("A", 1100, 0), 1100, true);
    ensure!(
        kept.len() == 1100,
        "1100 priced reviews: kept {}",
        kept.len()
    );
    let kept = filter_products(product("B", 1099, 0), 1100, true);
    ensure!(kept.is_empty(), "1099 reviews: kept {}", kept.len());
    let kept = filter_products(product("C", 1100, 1), 1100, true);
    ensure!(
        kept.is_empty(),
        "1100 reviews with one unpriced: kept {}",
        kept.len()
    );
    Ok(())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("metric oracle equivalence", metric_oracles),
        ("threshold sweep", threshold_sweep),
        ("OLS against normal equations", ols_oracle),
        ("PCA properties", pca_properties),
        ("PACF against Yule-Walker", pacf_oracle),
        ("ARIMA parameter recovery", arima_recovery),
        ("residual diagnostics", diagnostics),
        ("attention and loss formulas", model_math),
        ("pipeline determinism", pipeline_determinism),
        ("ingest join and filter", ingest_join),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(()) => println!("PASS {name} ({:.2?})", start.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
