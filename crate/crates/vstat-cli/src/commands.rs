//! Subcommand implementations. Every artifact goes under the config's
//! `out` directory with a comment header (config hash, seed, version), and
//! every number printed in a summary goes through the same formatter as the
//! CSV cells, so summaries quote files exactly.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use vstat_core::bounds::{self, BoundConstants};
use vstat_core::error::{Error, Result};
use vstat_core::experiments::{
    calibrate_c, dominance_check, scaling_study, EmpiricalTail, ExperimentConfig, Pipeline,
    XGridConfig,
};
use vstat_core::hoeffding;
use vstat_core::kernels::KernelSpec;
use vstat_core::mixing::generate_path;
use vstat_core::numeric::log_spaced;
use vstat_core::report::{
    format_float, series_csv_table, write_json, write_svg, ArtifactMeta, CsvTable, PlotSeries,
};
use vstat_core::rff::{build_expansion, decompose_sign_measure, uniform_error, ApproxBudget};

fn fmt(v: f64) -> String {
    format_float(v)
}

/// Load the config, apply `--set key=value` overrides and the seed flag,
/// then validate.
fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let mut value: serde_json::Value = serde_json::from_str(&text)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::validation("<root>", "config must be a JSON object"))?;
    for entry in overrides {
        let (key, raw) = entry.split_once('=').ok_or_else(|| {
            Error::invalid(format!("override `{entry}` is not KEY=VALUE"))
        })?;
        let parsed = serde_json::from_str::<serde_json::Value>(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        obj.insert(key.to_string(), parsed);
    }
    if let Some(s) = seed {
        obj.insert("seed".into(), serde_json::json!(s));
    }
    let cfg: ExperimentConfig = serde_json::from_value(value)?;
    cfg.validate()?;
    Ok(cfg)
}

fn meta_for(cfg: &ExperimentConfig) -> ArtifactMeta {
    ArtifactMeta::new(&cfg.canonical_json(), cfg.seed)
}

fn out_path(cfg: &ExperimentConfig, file: &str) -> PathBuf {
    cfg.out.join(file)
}

pub fn kernel_info(name: &str, m: usize, d: usize) -> Result<()> {
    let spec = KernelSpec::by_name(name, m, d)?;
    let info = spec.fourier_info()?;
    println!("kernel {name} (m={m}, d={d})");
    println!("  f0(0)              = {}", fmt(spec.base_value_at_zero()));
    println!("  ||fhat||_L1        = {}", fmt(info.l1_norm));
    println!("  positive definite  = {}", spec.pd);
    println!("  shift invariant    = {}", spec.shift_invariant);
    if let Some(l) = spec.lipschitz {
        println!("  lipschitz (per 1-d factor) = {}", fmt(l));
    }
    println!(
        "  fhat(0)            = {}",
        fmt(spec.fourier_transform(&vec![0.0; spec.fourier_dim()])?.re)
    );
    println!("  transform certified analytic = {}", info.certified);
    Ok(())
}

pub fn approx(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, overrides, seed)?;
    let meta = meta_for(&cfg);
    let kernel = cfg.kernel_spec()?;
    let parts = decompose_sign_measure(&kernel)?;
    // a target sup error sizes the expansion by the covering-argument
    // formulas; otherwise the flat feature count D is split by mass
    let budget = match cfg.t {
        Some(t) => {
            let q = cfg.q.unwrap_or(2.0);
            let moment = kernel.fourier_moment(q)?;
            vstat_core::rff::required_sample_size(&vstat_core::rff::BudgetInputs {
                t,
                box_half_width: cfg.box_half_width,
                q,
                moment,
                masses: parts.masses,
                m: kernel.m,
                d: kernel.d,
                multipliers: [1.0; 4],
            })?
        }
        None => ApproxBudget::proportional(cfg.features, &parts.masses)?,
    };
    let seeds = vstat_core::SeedSpec::new(cfg.seed);
    let expansion = build_expansion(
        &kernel,
        &budget,
        seeds.derived_seed(vstat_core::mixing::StreamDomain::Expansion, 0),
    )?;
    let grid_pts = if kernel.m * kernel.d <= 2 { 41 } else { 11 };
    let error = uniform_error(&expansion, &kernel, cfg.box_half_width, grid_pts)?;

    let expansion_path = out_path(&cfg, "expansion.json");
    if let Some(dir) = expansion_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&expansion_path, expansion.to_json())?;
    let summary = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(&cfg.canonical_json())?,
        "kernel": kernel.name(),
        "budget": budget,
        "features": expansion.feature_count(),
        "terms": expansion.terms.len(),
        "masses": expansion.masses,
        "coefficientSum": expansion.coefficient_sum(),
        "coefficientBudget": expansion.coefficient_budget,
        "supError": error,
        "boxHalfWidth": cfg.box_half_width,
        "gridPointsPerAxis": grid_pts,
    });
    write_json(&out_path(&cfg, "approx.json"), &meta, summary)?;

    println!(
        "expansion of {} with counts {:?}",
        kernel.name(),
        budget.counts
    );
    println!("  coefficient sum    = {}", fmt(expansion.coefficient_sum()));
    println!(
        "  coefficient budget = {}",
        fmt(expansion.coefficient_budget)
    );
    println!("  sup error on box   = {}", fmt(error));
    let ok = expansion.coefficient_sum() <= expansion.coefficient_budget + 1e-9;
    println!("  budget check: {}", if ok { "pass" } else { "FAIL" });
    if let Some(t) = cfg.t {
        // one realized draw is measured, not certified
        let within = error <= t;
        println!(
            "  measured error vs target t = {}: {}",
            fmt(t),
            if within { "pass" } else { "FAIL" }
        );
        if !within {
            return Err(Error::Numeric {
                message: "realized sup error exceeded the target t".into(),
                residual: error - t,
            });
        }
    }
    println!("wrote {}", expansion_path.display());
    println!("wrote {}", out_path(&cfg, "approx.json").display());
    if !ok {
        return Err(Error::Numeric {
            message: "expansion exceeded its coefficient budget".into(),
            residual: expansion.coefficient_sum() - expansion.coefficient_budget,
        });
    }
    Ok(())
}

pub fn decompose(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, overrides, seed)?;
    let meta = meta_for(&cfg);
    let kernel = Arc::new(cfg.kernel_spec()?);
    let marginal = cfg.process_spec()?.marginal();
    let draws = cfg.mean_samples.min(20_000);
    let decomp = hoeffding::decompose(kernel.clone(), &marginal, draws, cfg.seed)?;
    let r = cfg.r.unwrap_or(decomp.degeneracy_level);

    // degeneracy diagnostics for every level >= 2 on a small support grid
    let mut degeneracy = Vec::new();
    for p in 2..=decomp.order() {
        let grid: Vec<Vec<Vec<f64>>> = marginal
            .draw_many(5, cfg.seed.wrapping_add(41))
            .into_iter()
            .map(|x| vec![x; p - 1])
            .collect();
        let rep = hoeffding::check_degeneracy(
            decomp.component(p),
            &marginal,
            &grid,
            draws,
            cfg.seed.wrapping_add(42),
            3.0,
        )?;
        degeneracy.push(serde_json::json!({
            "p": p,
            "allPass": rep.all_pass,
            "rows": rep.rows.iter().map(|row| serde_json::json!({
                "estimate": row.estimate,
                "stderr": row.stderr,
                "flagged": row.flagged,
            })).collect::<Vec<_>>(),
        }));
    }
    let mut summary = decomp.to_summary();
    summary["degeneracyChecks"] = serde_json::Value::Array(degeneracy.clone());
    summary["rUsed"] = serde_json::json!(r);
    summary["config"] = serde_json::from_str(&cfg.canonical_json())?;
    write_json(&out_path(&cfg, "decompose.json"), &meta, summary)?;

    println!(
        "decomposition of {} (m={}) under {:?}",
        kernel.name(),
        kernel.m,
        marginal
    );
    println!(
        "  theta = {} (stderr {})",
        fmt(decomp.theta.value),
        fmt(decomp.theta.stderr)
    );
    println!("  detected degeneracy level r = {}", decomp.degeneracy_level);
    println!("  level used (config override wins) = {r}");
    for check in &degeneracy {
        println!(
            "  degeneracy p={}: {}",
            check["p"],
            if check["allPass"].as_bool().unwrap() {
                "pass"
            } else {
                "FLAGGED"
            }
        );
    }
    println!("wrote {}", out_path(&cfg, "decompose.json").display());
    Ok(())
}

pub fn simulate(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, overrides, seed)?;
    let meta = meta_for(&cfg);
    let process = cfg.process_spec()?;
    let n = cfg.n_list[0];
    let path = generate_path(&process, n, cfg.seed)?;

    let mut columns = vec!["index".to_string()];
    for j in 0..path.d {
        columns.push(format!("x{}", j + 1));
    }
    let mut table = CsvTable {
        columns,
        rows: Vec::new(),
    };
    for i in 0..path.n {
        let mut row = vec![i.to_string()];
        row.extend(path.point(i).iter().map(|&v| fmt(v)));
        table.push_row(row);
    }
    let csv_path = out_path(&cfg, "path.csv");
    table.write(&csv_path, &meta)?;

    let mean = path.data.iter().sum::<f64>() / path.data.len() as f64;
    println!("path from {} with n = {n}", process.name());
    println!("  mixing envelope: gamma1 = {}, gamma2 = {}", fmt(process.gamma1), fmt(process.gamma2));
    println!("  provenance: {}", process.provenance);
    println!("  sample mean = {}", fmt(mean));
    println!("  clipped coordinates = {}", path.clipped);
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn bound_constants_for(cfg: &ExperimentConfig, n: usize, p: usize) -> Result<BoundConstants> {
    let kernel = cfg.kernel_spec()?;
    let mixing = cfg.mixing_constants()?;
    let input = cfg.variant_input(&kernel)?;
    Ok(bounds::constants_for(input, p, n, &mixing)?.with_c(cfg.c.unwrap_or(1.0)))
}

fn default_bound_grid() -> Vec<f64> {
    log_spaced(1e-3, 1.0, 30)
}

pub fn bound(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, overrides, seed)?;
    let meta = meta_for(&cfg);
    let n = cfg.n_list[0];
    let p = cfg.p.unwrap_or(cfg.m);
    let bc = bound_constants_for(&cfg, n, p)?;
    let xs = match &cfg.x_grid {
        XGridConfig::Explicit(xs) => xs.clone(),
        XGridConfig::Auto(_) => default_bound_grid(),
    };
    let curve = bounds::TailCurve::new(&bc, &xs)?;

    let mut table = CsvTable::new(&["x", "bound"]);
    for (x, v) in curve.xs.iter().zip(&curve.values) {
        table.push_row(vec![fmt(*x), fmt(*v)]);
    }
    let csv_path = out_path(&cfg, "bound.csv");
    table.write(&csv_path, &meta)?;
    write_json(
        &out_path(&cfg, "bound.json"),
        &meta,
        serde_json::json!({
            "config": serde_json::from_str::<serde_json::Value>(&cfg.canonical_json())?,
            "constants": bc,
            "curve": curve,
        }),
    )?;

    println!("tail-bound constants ({:?}, p = {p}, n = {n})", bc.variant);
    println!("  A = {}", fmt(bc.a));
    println!("  M = {}", fmt(bc.m_const));
    println!("  C = {}", fmt(bc.c));
    println!("wrote {}", csv_path.display());
    println!("wrote {}", out_path(&cfg, "bound.json").display());
    Ok(())
}

/// Shared tail artifact: CSV columns x, phat, wilsonLo, wilsonHi, bound.
fn write_tail_csv(
    path: &Path,
    meta: &ArtifactMeta,
    tail: &EmpiricalTail,
    bc: &BoundConstants,
) -> Result<Vec<f64>> {
    let mut table = CsvTable::new(&["x", "phat", "wilsonLo", "wilsonHi", "bound"]);
    let mut bounds_col = Vec::with_capacity(tail.xs.len());
    for (i, &x) in tail.xs.iter().enumerate() {
        let b = bounds::tail_bound(bc, x)?;
        bounds_col.push(b);
        table.push_row(vec![
            fmt(x),
            fmt(tail.phat[i]),
            fmt(tail.wilson_lo[i]),
            fmt(tail.wilson_hi[i]),
            fmt(b),
        ]);
    }
    table.write(path, meta)?;
    Ok(bounds_col)
}

fn tail_svg(
    path: &Path,
    meta: &ArtifactMeta,
    title: &str,
    tail: &EmpiricalTail,
    bound_values: &[f64],
) -> Result<()> {
    let empirical: Vec<(f64, f64)> = tail
        .xs
        .iter()
        .zip(&tail.phat)
        .map(|(&x, &p)| (x, p.max(1e-6)))
        .collect();
    let bound_pts: Vec<(f64, f64)> = tail
        .xs
        .iter()
        .zip(bound_values)
        .map(|(&x, &b)| (x, b.clamp(1e-6, 10.0)))
        .collect();
    write_svg(
        path,
        meta,
        title,
        "x",
        "P(T_p >= x)",
        &[
            PlotSeries {
                label: "empirical tail",
                points: &empirical,
                color: "steelblue",
            },
            PlotSeries {
                label: "bound",
                points: &bound_pts,
                color: "firebrick",
            },
        ],
        true,
    )
}

pub fn calibrate(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, overrides, seed)?;
    let meta = meta_for(&cfg);
    let p = cfg.p.unwrap_or(cfg.m);
    let n = cfg.n_list[0];
    let pipeline = Pipeline::build(&cfg)?;
    let tail = pipeline.empirical_tail(p, n, cfg.replications, &cfg.x_grid)?;
    let bc = bound_constants_for(&cfg, n, p)?;
    let cal = calibrate_c(&tail, &bc)?;
    let calibrated = bc.with_c(cal.c_star);
    let dom = dominance_check(&tail, &calibrated)?;

    let csv_path = out_path(&cfg, format!("tail-n{n}.csv").as_str());
    let bound_col = write_tail_csv(&csv_path, &meta, &tail, &calibrated)?;
    tail_svg(
        &out_path(&cfg, format!("tail-n{n}.svg").as_str()),
        &meta,
        &format!("empirical tail vs calibrated bound (n={n}, p={p})"),
        &tail,
        &bound_col,
    )?;
    write_json(
        &out_path(&cfg, "calibrate.json"),
        &meta,
        serde_json::json!({
            "config": serde_json::from_str::<serde_json::Value>(&cfg.canonical_json())?,
            "constants": calibrated,
            "calibration": cal,
            "dominance": dom.pass,
            "exceedFraction": tail.exceed_fraction,
        }),
    )?;

    println!("calibration at n = {n}, p = {p}, R = {}", cfg.replications);
    println!("  A  = {}", fmt(calibrated.a));
    println!("  M  = {}", fmt(calibrated.m_const));
    println!("  C* = {}", fmt(cal.c_star));
    match cal.binding_x {
        Some(x) => println!("  binding x = {}", fmt(x)),
        None => println!("  binding x = none (empirical tail identically zero, C capped)"),
    }
    println!(
        "  dominance over empirical tail: {}",
        if dom.pass { "pass" } else { "FAIL" }
    );
    println!(
        "  fraction of paths leaving the box: {}",
        fmt(tail.exceed_fraction)
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", out_path(&cfg, "calibrate.json").display());
    Ok(())
}

pub fn report(config: &Path, overrides: &[String], seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config, overrides, seed)?;
    let meta = meta_for(&cfg);
    let p = cfg.p.unwrap_or(cfg.m);
    let n0 = cfg.n_list[0];
    let pipeline = Pipeline::build(&cfg)?;

    println!(
        "report: kernel {}, process {}, m = {}, p = {p}",
        pipeline.kernel.name(),
        pipeline.process.name(),
        cfg.m
    );
    println!(
        "  expansion: {} features, coefficient sum {} (budget {})",
        pipeline.expansion.feature_count(),
        fmt(pipeline.expansion.coefficient_sum()),
        fmt(pipeline.expansion.coefficient_budget)
    );
    let budget_ok = pipeline.expansion.coefficient_sum()
        <= pipeline.expansion.coefficient_budget + 1e-9;
    println!("  budget check: {}", if budget_ok { "pass" } else { "FAIL" });

    // calibrate on the first n
    let tail0 = pipeline.empirical_tail(p, n0, cfg.replications, &cfg.x_grid)?;
    let bc0 = bound_constants_for(&cfg, n0, p)?;
    let cal = calibrate_c(&tail0, &bc0)?;
    let calibrated0 = bc0.with_c(cal.c_star);
    let bound_col = write_tail_csv(
        &out_path(&cfg, format!("tail-n{n0}.csv").as_str()),
        &meta,
        &tail0,
        &calibrated0,
    )?;
    tail_svg(
        &out_path(&cfg, format!("tail-n{n0}.svg").as_str()),
        &meta,
        &format!("empirical tail vs calibrated bound (n={n0}, p={p})"),
        &tail0,
        &bound_col,
    )?;
    println!(
        "  calibrated C* = {} at n = {n0} (R = {})",
        fmt(cal.c_star),
        cfg.replications
    );

    // prefix series of the first replication, for audit
    let comp = pipeline.component(p)?;
    let path0 = generate_path(
        &pipeline.process,
        n0,
        pipeline
            .seeds
            .derived_seed(vstat_core::mixing::StreamDomain::Replication, 0),
    )?;
    let (series0, _) = vstat_core::vstat::v_features(&comp, &path0)?;
    series_csv_table(&series0).write(&out_path(&cfg, format!("series-n{n0}.csv").as_str()), &meta)?;

    // dominance on the remaining sizes with the same C
    let mut dominance = Vec::new();
    for &n in &cfg.n_list[1..] {
        let fresh = pipeline.empirical_tail(p, n, cfg.replications, &XGridConfig::Auto("auto".into()))?;
        let bc = bound_constants_for(&cfg, n, p)?.with_c(cal.c_star);
        let dom = dominance_check(&fresh, &bc)?;
        let col = write_tail_csv(
            &out_path(&cfg, format!("tail-n{n}.csv").as_str()),
            &meta,
            &fresh,
            &bc,
        )?;
        tail_svg(
            &out_path(&cfg, format!("tail-n{n}.svg").as_str()),
            &meta,
            &format!("fresh tail vs transferred bound (n={n}, p={p})"),
            &fresh,
            &col,
        )?;
        println!(
            "  dominance at n = {n} with transferred C: {}",
            if dom.pass { "pass" } else { "FAIL" }
        );
        dominance.push(serde_json::json!({ "n": n, "pass": dom.pass }));
    }

    // scaling study (needs at least 3 sizes)
    let scaling = if cfg.n_list.len() >= 3 {
        let rep = scaling_study(&pipeline, p, &cfg.n_list, cfg.replications)?;
        let mut table = CsvTable::new(&["n", "medianTp", "scaledMedian"]);
        for row in &rep.rows {
            table.push_row(vec![
                row.n.to_string(),
                fmt(row.median_tp),
                fmt(row.scaled_median),
            ]);
        }
        table.write(&out_path(&cfg, "scaling.csv"), &meta)?;
        println!(
            "  scaling spread max/min of n^(p/2) median(T_p) = {}",
            fmt(rep.spread)
        );
        Some(rep)
    } else {
        None
    };

    write_json(
        &out_path(&cfg, "report.json"),
        &meta,
        serde_json::json!({
            "config": serde_json::from_str::<serde_json::Value>(&cfg.canonical_json())?,
            "constants": calibrated0,
            "calibration": cal,
            "budgetCheck": budget_ok,
            "dominance": dominance,
            "scaling": scaling,
            "exceedFraction": tail0.exceed_fraction,
        }),
    )?;
    println!("wrote {}", out_path(&cfg, "report.json").display());
    Ok(())
}
