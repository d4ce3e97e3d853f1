//! Gradient check of the linear-layer backward pass against central finite
//! differences, plus the bounded-mode entry-wise error bound.

use super::{invalid_msg, CmdResult};
use crate::config::{derive_seed, GradcheckFile};
use qdl_core::fixed::FixedPointFormat;
use qdl_core::models::{backprop_linear, reference};
use qdl_core::qam::CostTable;
use qdl_core::qlam::{NoiseMode, NoiseModel};
use qdl_core::resource::ResourceLedger;
use qdl_core::rng::RandomSource;
use qdl_core::tensor::RealTensor;

pub struct GradcheckOutcome {
    pub passed: bool,
    pub report: String,
    pub json: serde_json::Value,
}

const EXACT_TOLERANCE: f64 = 1e-5;

fn random_matrix(rows: usize, cols: usize, rng: &mut RandomSource) -> RealTensor {
    RealTensor::new(
        vec![rows, cols],
        (0..rows * cols).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
    )
    .unwrap()
}

pub fn run(
    file: &GradcheckFile,
    base_seed: u64,
    corrupt: Option<(usize, usize)>,
) -> CmdResult<GradcheckOutcome> {
    let gc = &file.gradcheck;
    if gc.dim == 0 || gc.samples == 0 || gc.seeds == 0 {
        return Err(invalid_msg("gradcheck dim, samples, and seeds must be positive"));
    }
    if !(gc.delta > 0.0 && gc.delta < 1.0) {
        return Err(invalid_msg(format!("delta {} outside (0, 1)", gc.delta)));
    }
    if let Some((i, j)) = corrupt {
        if i >= gc.dim || j >= gc.dim {
            return Err(invalid_msg(format!(
                "corrupt index ({i},{j}) outside the {0}x{0} gradient",
                gc.dim
            )));
        }
    }
    let format = FixedPointFormat::new(56, 36).map_err(super::invalid)?;
    let table = CostTable::default();
    let (d, n) = (gc.dim, gc.samples);
    let h = gc.fd_step;

    let mut report = format!(
        "gradcheck: d={d} n={n} delta={} fd_step={h} seeds={}\n",
        gc.delta, gc.seeds
    );
    let mut seeds_json = Vec::new();
    let mut passed = true;
    let mut first_failure: Option<String> = None;

    for si in 0..gc.seeds {
        let mut rng = RandomSource::new(derive_seed(base_seed, &[20, si]));
        let w = random_matrix(d, d, &mut rng);
        let x = random_matrix(d, n, &mut rng);
        // loss L = 0.5 ||W X||^2, so the upstream gradient is dY = W X
        let dy = reference::matmul(&w, &x, None);

        let mut exact_noise = NoiseModel::new(NoiseMode::Exact, 0);
        let mut ledger = ResourceLedger::new();
        let (dx, mut dw) = backprop_linear(
            &w, &x, &dy, gc.delta, format, &table, &mut exact_noise, &mut ledger,
        )?;
        if let Some((i, j)) = corrupt {
            // fault injection: the check must locate this entry
            let bumped = dw.get(&[i, j]) + 1.0;
            dw.set(&[i, j], bumped);
        }

        // central differences of the loss in W and X
        let loss_w = |wm: &RealTensor| {
            let y = reference::matmul(wm, &x, None);
            0.5 * y.data().iter().map(|v| v * v).sum::<f64>()
        };
        let loss_x = |xm: &RealTensor| {
            let y = reference::matmul(&w, xm, None);
            0.5 * y.data().iter().map(|v| v * v).sum::<f64>()
        };
        let mut max_rel = 0.0f64;
        let mut worst = ("dW", 0usize, 0usize);
        for i in 0..d {
            for j in 0..d {
                let mut wp = w.clone();
                wp.set(&[i, j], w.get(&[i, j]) + h);
                let mut wm = w.clone();
                wm.set(&[i, j], w.get(&[i, j]) - h);
                let fd = (loss_w(&wp) - loss_w(&wm)) / (2.0 * h);
                let rel = (dw.get(&[i, j]) - fd).abs() / fd.abs().max(1e-9);
                if rel > max_rel {
                    max_rel = rel;
                    worst = ("dW", i, j);
                }
            }
        }
        for i in 0..d {
            for j in 0..n {
                let mut xp = x.clone();
                xp.set(&[i, j], x.get(&[i, j]) + h);
                let mut xm = x.clone();
                xm.set(&[i, j], x.get(&[i, j]) - h);
                let fd = (loss_x(&xp) - loss_x(&xm)) / (2.0 * h);
                let rel = (dx.get(&[i, j]) - fd).abs() / fd.abs().max(1e-9);
                if rel > max_rel {
                    max_rel = rel;
                    worst = ("dX", i, j);
                }
            }
        }
        let exact_ok = max_rel <= EXACT_TOLERANCE;

        // bounded mode: every dW entry within delta * ||dY_i|| * ||X_j||
        let mut bounded_noise =
            NoiseModel::new(NoiseMode::Bounded, derive_seed(base_seed, &[21, si]));
        let mut ledger_b = ResourceLedger::new();
        let (_, dw_b) = backprop_linear(
            &w, &x, &dy, gc.delta, format, &table, &mut bounded_noise, &mut ledger_b,
        )?;
        let mut violations = 0usize;
        for i in 0..d {
            let dy_norm: f64 = (0..n).map(|t| dy.get(&[i, t]).powi(2)).sum::<f64>().sqrt();
            for j in 0..d {
                let x_norm: f64 = (0..n).map(|t| x.get(&[j, t]).powi(2)).sum::<f64>().sqrt();
                let mut exact_entry = 0.0;
                for t in 0..n {
                    exact_entry += dy.get(&[i, t]) * x.get(&[j, t]);
                }
                if (dw_b.get(&[i, j]) - exact_entry).abs()
                    > gc.delta * dy_norm * x_norm + 1e-12
                {
                    violations += 1;
                }
            }
        }
        let seed_ok = exact_ok && violations == 0;
        if !seed_ok && passed {
            passed = false;
            first_failure = Some(format!(
                "{}[{},{}] relative error {max_rel:.3e}",
                worst.0, worst.1, worst.2
            ));
        }
        report.push_str(&format!(
            "seed {si}: max relative error {max_rel:.3e} at {}[{},{}] (exact), \
             bound violations {violations} (bounded) -> {}\n",
            worst.0,
            worst.1,
            worst.2,
            if seed_ok { "ok" } else { "FAIL" }
        ));
        seeds_json.push(serde_json::json!({
            "seed": si,
            "max_relative_error": max_rel,
            "worst_entry": format!("{}[{},{}]", worst.0, worst.1, worst.2),
            "bounded_violations": violations,
            "ok": seed_ok,
        }));
    }
    report.push_str(&format!(
        "RESULT: {}\n",
        if passed {
            "PASS".to_string()
        } else {
            format!("FAIL ({})", first_failure.unwrap())
        }
    ));
    let json = serde_json::json!({
        "passed": passed,
        "exact_tolerance": EXACT_TOLERANCE,
        "seeds": seeds_json,
    });
    Ok(GradcheckOutcome {
        passed,
        report,
        json,
    })
}
