// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand.

use crate::io::{
    complete_rows, csv_text, emit, json_text, num, read_circuit, read_evidence, CliError, Header,
    Result,
};
use crate::source::{CorrectionSource, PlanSource};
use crate::{
    AnalyzeArgs, CalibrateArgs, Command, DataArgs, EnergyArgs, EvalArgs, FailureArgs, GenerateArgs,
    GeneratorKind, PlanArgs, PlanCriterion, Query, Resolution, ResolutionArgs, SweepArgs,
    TradeoffArgs, Width,
};
use aaipc::analysis::{delta_det, delta_nondet_mc, kl_bruteforce, map_failure_prob};
use aaipc::circuit::{
    generate_random_deterministic_pc, generate_random_tree_pc, min_positive_value, sample, to_json,
    validate, Evidence,
};
use aaipc::correction::CorrectionTerm;
use aaipc::energy::{required_bits, AaiWidth, EnergyModel};
use aaipc::inference::{as_evidence, compare_queries, mask_evidence};
use aaipc::planner::{plan, rank_sites, tradeoff_curve, Criterion, Strategy};
use aaipc::{Circuit, Evaluator, FloatConfig, MulMode};
use clap::ValueEnum;
use serde_json::json;
use std::path::Path;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { circuit } => cmd_validate(&circuit),
        Command::Generate(a) => cmd_generate(a),
        Command::Sample {
            circuit,
            samples,
            seed,
            out,
        } => {
            let c = read_circuit(&circuit)?;
            let rows = sample(&c, seed, samples)?;
            let mut h = Header::new("sample");
            h.set("circuit", circuit.display())
                .set("samples", samples)
                .set("seed", seed);
            emit(out.as_ref(), &assignments_csv(&h, &c, &as_evidence(&rows)))
        }
        Command::Analyze(a) => cmd_analyze(a),
        Command::Failure(a) => cmd_failure(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Resolution(a) => cmd_resolution(a),
    }
}

fn config(res: &Resolution) -> Result<FloatConfig> {
    Ok(FloatConfig::new(res.exp_bits, res.man_bits)?.with_rounding(res.rounding))
}

fn value_name(v: impl ValueEnum) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn tick(ok: bool) -> &'static str {
    if ok {
        "✓"
    } else {
        "✗"
    }
}

fn cmd_validate(path: &Path) -> Result<()> {
    let c = read_circuit(path)?;
    let r = validate(&c);
    println!(
        "smooth {} decomposable {} deterministic {} ({})",
        tick(r.smooth),
        tick(r.decomposable),
        tick(r.deterministic),
        serde_json::to_value(r.determinism_check)
            .expect("enum serializes")
            .as_str()
            .unwrap_or("")
    );
    println!(
        "variables {} sums {} products {} indicators {} multiplier sites {} ({} weight)",
        c.n_vars(),
        c.n_sums(),
        c.n_products(),
        c.n_indicators(),
        c.n_sites(),
        c.n_weight_sites()
    );
    const SHOWN: usize = 20;
    for v in r.violations.iter().take(SHOWN) {
        println!("violation: unit {}: {}", v.unit.0, v.reason);
    }
    if r.violations.len() > SHOWN {
        println!("... {} more violations", r.violations.len() - SHOWN);
    }
    if r.is_smooth_decomposable() {
        Ok(())
    } else {
        Err(CliError::domain(format!(
            "{}: not smooth and decomposable",
            path.display()
        )))
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let c = match a.kind {
        GeneratorKind::Tree => generate_random_tree_pc(a.seed, a.vars, a.depth, a.fanout)?,
        GeneratorKind::Deterministic => generate_random_deterministic_pc(a.seed, a.vars, a.split)?,
    };
    emit(a.out.as_ref(), &(to_json(&c) + "\n"))
}

fn assignments_csv(h: &Header, c: &Circuit, rows: &[Evidence]) -> String {
    let columns: Vec<String> = (0..c.n_vars()).map(|v| v.to_string()).collect();
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| v.map_or("-1".to_string(), |k| k.to_string()))
                .collect()
        })
        .collect();
    csv_text(h, &columns, &body)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let c = read_circuit(&a.circuit)?;
    let cfg = config(&a.res)?;
    let report = if a.samples > 0 {
        delta_nondet_mc(&c, &cfg, a.samples, a.seed)?
    } else {
        delta_det(&c, &cfg)?
    };
    let mut v = serde_json::to_value(&report).expect("reports serialize");
    if a.kl {
        v["kl_bruteforce"] = json!(kl_bruteforce(&c, &cfg)?);
    }
    let mut h = Header::new("analyze");
    h.set("circuit", a.circuit.display())
        .set("float", cfg)
        .set("samples", a.samples)
        .set("seed", a.seed);
    emit(a.out.as_ref(), &json_text(&h, v))
}

fn cmd_failure(a: FailureArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &k in &a.mults {
        for &de in &a.delta_e {
            let f = map_failure_prob(de as i64, k as usize, a.samples, a.seed)?;
            rows.push(vec![
                de.to_string(),
                k.to_string(),
                a.samples.to_string(),
                num(f.probability),
                num(f.std_error),
            ]);
        }
    }
    let mut h = Header::new("failure");
    h.set("samples", a.samples).set("seed", a.seed);
    let cols = [
        "delta_e",
        "n_mults",
        "n_samples",
        "probability",
        "std_error",
    ];
    emit(a.out.as_ref(), &csv_text(&h, &cols, &rows))
}

fn cmd_plan(a: PlanArgs) -> Result<()> {
    let c = read_circuit(&a.circuit)?;
    let cfg = config(&a.res)?;
    let criterion = match a.criterion {
        PlanCriterion::Det => Criterion::Det,
        PlanCriterion::Dc => Criterion::Dc {
            n_samples: a.samples,
            seed: a.seed,
        },
    };
    let ranked = rank_sites(&c, &cfg, criterion)?;
    let p = plan(&c, &ranked, a.fraction)?;
    let energy = EnergyModel::default().circuit_energy(&c, &cfg, &p)?;
    let mut v = serde_json::to_value(&p).expect("plans serialize");
    v["ranking"] = serde_json::to_value(&ranked).expect("steps serialize");
    v["energy"] = serde_json::to_value(energy).expect("reports serialize");
    let mut h = Header::new("plan");
    h.set("circuit", a.circuit.display())
        .set("float", cfg)
        .set("criterion", value_name(a.criterion))
        .set("fraction", a.fraction);
    if a.criterion == PlanCriterion::Dc {
        h.set("samples", a.samples).set("seed", a.seed);
    }
    emit(a.out.as_ref(), &json_text(&h, v))
}

/// Instances for `query`. Sampled MAP rows hide each variable with the
/// `--hide` chance, using `seed + 1` for the mask.
fn load_data(c: &Circuit, d: &DataArgs, query: Query, h: &mut Header) -> Result<Vec<Evidence>> {
    if let Some(path) = &d.data {
        h.set("data", path.display());
        let rows = read_evidence(path, c.n_vars())?;
        return Ok(match query {
            Query::Mar => as_evidence(&complete_rows(&rows)),
            Query::Map => rows,
        });
    }
    let rows = sample(c, d.seed, d.samples)?;
    Ok(match query {
        Query::Mar => as_evidence(&rows),
        Query::Map => mask_evidence(&rows, d.hide, d.seed.wrapping_add(1))?,
    })
}

fn sample_header(h: &mut Header, d: &DataArgs, queries: &[Query]) {
    if d.data.is_none() {
        h.set("samples", d.samples).set("seed", d.seed);
        if queries.contains(&Query::Map) {
            h.set("hide", d.hide)
                .set("mask_seed", d.seed.wrapping_add(1));
        }
    }
}

fn joined(x: &[usize]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let c = read_circuit(&a.circuit)?;
    let cfg = config(&a.res)?;
    let mut h = Header::new("eval");
    h.set("circuit", a.circuit.display())
        .set("query", value_name(a.query))
        .set("float", cfg)
        .set("plan", &a.plan)
        .set("correction", &a.correction);
    let data = load_data(&c, &a.data, a.query, &mut h)?;
    sample_header(&mut h, &a.data, &[a.query]);
    let p = a.plan.build(&c, &cfg)?;
    let base = Evaluator::baseline(&c);
    let approx = Evaluator::new(&c, cfg, &p)?;
    let (cols, rows): (Vec<&str>, Vec<Vec<String>>) = match a.query {
        Query::Mar => {
            let term = a.correction.build(&c, cfg, &p)?;
            h.set("log2_epsilon", term.log2_epsilon);
            let mut rows = Vec::new();
            for (i, row) in data.iter().enumerate() {
                let x: Vec<usize> = row
                    .iter()
                    .map(|v| v.expect("MAR rows are complete"))
                    .collect();
                let b = base.eval_mar(&x)?;
                let r = approx.eval_mar(&x)?;
                let corrected = r.log2 + term.log2_epsilon;
                rows.push(vec![
                    i.to_string(),
                    joined(&x),
                    num(b.log2),
                    num(r.log2),
                    num(corrected),
                    num((b.log2 - corrected).abs()),
                    r.underflows.to_string(),
                    r.overflows.to_string(),
                ]);
            }
            let cols = vec![
                "instance",
                "state",
                "log2_p64",
                "log2_p",
                "log2_p_corrected",
                "abs_log_error",
                "underflows",
                "overflows",
            ];
            (cols, rows)
        }
        Query::Map => {
            let mut rows = Vec::new();
            for (i, e) in data.iter().enumerate() {
                let b = base.eval_map(e)?;
                let r = approx.eval_map(e)?;
                let ev: Vec<String> = e
                    .iter()
                    .map(|v| v.map_or("-1".into(), |k| k.to_string()))
                    .collect();
                rows.push(vec![
                    i.to_string(),
                    ev.join(" "),
                    joined(&b.assignment),
                    joined(&r.assignment),
                    (b.assignment == r.assignment).to_string(),
                    num(b.log2_value),
                    num(r.log2_value),
                    r.underflows.to_string(),
                    r.overflows.to_string(),
                ]);
            }
            let cols = vec![
                "instance",
                "evidence",
                "map64",
                "map",
                "match",
                "log2_value64",
                "log2_value",
                "underflows",
                "overflows",
            ];
            (cols, rows)
        }
    };
    emit(a.out.as_ref(), &csv_text(&h, &cols, &rows))
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let c = read_circuit(&a.circuit)?;
    let mut modes = a.mode.clone();
    if modes.is_empty() && a.plan.is_empty() {
        modes = vec![MulMode::Exact, MulMode::Aai];
    }
    let plans: Vec<PlanSource> = modes
        .iter()
        .map(|m| match m {
            MulMode::Exact => PlanSource::AllExact,
            MulMode::Aai => PlanSource::AllAai,
        })
        .chain(a.plan.iter().cloned())
        .collect();
    let configs: Vec<FloatConfig> = a
        .exp_bits
        .iter()
        .flat_map(|&e| a.man_bits.iter().map(move |&m| (e, m)))
        .map(|(e, m)| Ok(FloatConfig::new(e, m)?.with_rounding(a.rounding)))
        .collect::<Result<_>>()?;

    let mut h = Header::new("sweep");
    h.set("circuit", a.circuit.display())
        .set("rounding", a.rounding)
        .set("correction", &a.correction);
    let mut data = Vec::new();
    for q in &a.query {
        data.push(load_data(&c, &a.data, *q, &mut Header::new("sweep"))?);
    }
    if let Some(p) = &a.data.data {
        h.set("data", p.display());
    }
    sample_header(&mut h, &a.data, &a.query);

    let model = EnergyModel::default();
    let mut rows = Vec::new();
    for cfg in &configs {
        for src in &plans {
            let p = src.build(&c, cfg)?;
            let energy = model.circuit_energy(&c, cfg, &p)?.normalized;
            for (q, evidence) in a.query.iter().zip(&data) {
                let mut errors = Vec::new();
                let term = match q {
                    Query::Mar => match a.correction.build(&c, *cfg, &p) {
                        Ok(t) => Some(t),
                        Err(e) => {
                            errors.push(format!("correction: {e}"));
                            None
                        }
                    },
                    Query::Map => Some(CorrectionTerm::NONE),
                };
                let metrics = match term {
                    Some(t) => {
                        match compare_queries(&c, evidence, *cfg, &p, Some(t.log2_epsilon)) {
                            Ok(m) => Some(m),
                            Err(e) => {
                                errors.push(e.to_string());
                                None
                            }
                        }
                    }
                    None => None,
                };
                if let Some(m) = &metrics {
                    errors.extend(
                        m.undefined
                            .iter()
                            .map(|u| format!("instance {}: {}", u.instance, u.reason)),
                    );
                }
                let field = |f: &dyn Fn(&aaipc::inference::QueryMetrics) -> String| {
                    metrics.as_ref().map_or(String::new(), f)
                };
                rows.push(vec![
                    cfg.exp_bits.to_string(),
                    cfg.man_bits.to_string(),
                    src.to_string(),
                    value_name(*q),
                    num(energy),
                    match q {
                        Query::Mar => field(&|m| num(m.mean_log_error)),
                        Query::Map => String::new(),
                    },
                    match q {
                        Query::Map => field(&|m| num(m.map_accuracy)),
                        Query::Mar => String::new(),
                    },
                    field(&|m| m.underflow_count.to_string()),
                    field(&|m| m.overflow_count.to_string()),
                    errors.join("; "),
                ]);
            }
        }
    }
    let cols = [
        "E",
        "M",
        "mode",
        "query",
        "energy_normalized",
        "mean_log_error",
        "map_accuracy",
        "underflows",
        "overflows",
        "errors",
    ];
    emit(a.out.as_ref(), &csv_text(&h, &cols, &rows))
}

fn cmd_tradeoff(a: TradeoffArgs) -> Result<()> {
    let c = read_circuit(&a.circuit)?;
    let cfg = config(&a.res)?;
    let mut h = Header::new("tradeoff");
    h.set("circuit", a.circuit.display()).set("float", cfg);
    let data = load_data(&c, &a.data, Query::Mar, &mut h)?;
    sample_header(&mut h, &a.data, &[Query::Mar]);
    let mut strategies = vec![Strategy::Det];
    if a.dc_samples > 0 {
        strategies.push(Strategy::Dc {
            n_samples: a.dc_samples,
            seed: a.data.seed,
        });
    }
    strategies.extend(Strategy::randoms(a.random_plans, a.data.seed));
    h.set("random_plans", a.random_plans)
        .set("random_seed_base", a.data.seed);
    let curve = tradeoff_curve(&c, &cfg, &data, &a.fraction, &strategies)?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|r| {
            vec![
                r.strategy.to_string(),
                r.seed.map_or(String::new(), |s| s.to_string()),
                num(r.fraction),
                num(r.replaced_ratio_of_all_mults),
                num(r.normalized_energy),
                num(r.mean_log_error),
            ]
        })
        .collect();
    let cols = [
        "strategy",
        "seed",
        "fraction",
        "replaced_ratio_of_all_mults",
        "normalized_energy",
        "mean_log_error",
    ];
    emit(a.out.as_ref(), &csv_text(&h, &cols, &rows))
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let c = read_circuit(&a.circuit)?;
    let cfg = config(&a.res)?;
    if matches!(
        a.correction,
        CorrectionSource::None | CorrectionSource::File(_)
    ) {
        return Err(CliError::domain(
            "calibrate needs --correction mc:N:SEED or closed-form",
        ));
    }
    let p = a.plan.build(&c, &cfg)?;
    let term = a.correction.build(&c, cfg, &p)?;
    let mut h = Header::new("calibrate");
    h.set("circuit", a.circuit.display())
        .set("float", cfg)
        .set("plan", &a.plan)
        .set("correction", &a.correction);
    emit(
        a.out.as_ref(),
        &json_text(&h, serde_json::to_value(term).expect("terms serialize")),
    )
}

fn cmd_energy(a: EnergyArgs) -> Result<()> {
    let width = match a.aai_width {
        Width::EPlusM => AaiWidth::ExponentPlusMantissa,
        Width::WithSign => AaiWidth::IncludeSign,
    };
    let model = EnergyModel::default().with_aai_width(width);
    let mut h = Header::new("energy");
    h.set("power_unit", "uW")
        .set(
            "normalized_by",
            format!("exact(11,52)={}uW", model.baseline()),
        )
        .set("aai_width", value_name(a.aai_width));
    let mut rows = Vec::new();
    for &e in &a.exp_bits {
        for &m in &a.man_bits {
            let cell = |mode| {
                (
                    num(model.power(mode, e, m)),
                    num(model.normalized(mode, e, m)),
                )
            };
            let (ep, en) = cell(MulMode::Exact);
            let (ap, an) = cell(MulMode::Aai);
            if a.long {
                rows.push(vec![e.to_string(), m.to_string(), "exact".into(), ep, en]);
                rows.push(vec![e.to_string(), m.to_string(), "aai".into(), ap, an]);
            } else {
                rows.push(vec![e.to_string(), m.to_string(), ep, en, ap, an]);
            }
        }
    }
    let cols: &[&str] = if a.long {
        &["E", "M", "mode", "power_uW", "normalized"]
    } else {
        &[
            "E",
            "M",
            "exact_power_uW",
            "exact_normalized",
            "aai_power_uW",
            "aai_normalized",
        ]
    };
    emit(a.out.as_ref(), &csv_text(&h, cols, &rows))
}

fn cmd_resolution(a: ResolutionArgs) -> Result<()> {
    let mut h = Header::new("resolution");
    let mv = match (&a.circuit, a.mv) {
        (Some(p), _) => {
            h.set("circuit", p.display());
            min_positive_value(&read_circuit(p)?)?
        }
        (None, Some(mv)) => mv,
        (None, None) => unreachable!("clap requires one of --circuit and --mv"),
    };
    h.set("epsilon", a.epsilon);
    let r = required_bits(mv, a.epsilon)?;
    emit(
        a.out.as_ref(),
        &json_text(&h, serde_json::to_value(r).expect("reports serialize")),
    )
}
