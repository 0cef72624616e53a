use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::format::{manifest_comment, render, to_json, Cell, Format, RunManifest, Table};
use super::input::{
    parse_f64_list, parse_k_sweep, parse_n_spec, parse_named_list, parse_values, read_input,
};
use super::{
    CliError, EstimateArgs, ExtractArgs, IntervalArgs, LossArg, OutputArgs, ReproduceArgs,
    RiskArgs, SimulateArgs,
};
use crate::datasets::EXAMPLE_ONE;
use crate::error::Error;
use crate::estimators::{estimate as estimate_one, EstimatorId};
use crate::intervals::{
    equal_tails, hpd_exact, hpd_hpm_calibrated, hpd_hpm_closed_form, IntervalKind,
};
use crate::model::{posterior_coverage, posterior_from, PriorParams};
use crate::records::{extract_upper_records, RecordSummary};
use crate::risk::{
    bayes_risk_linear_weighted, classify_admissible, r1, r1_r2_gap, r2, risk_linear_weighted,
    LinearEstimator, LossWeight,
};
use crate::sim::{run_interval_sim, run_point_sim, SimConfig, SimResult};

type CmdResult = Result<(), CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

fn write_stdout(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write output: {e}")))
}

fn emit(
    output: &OutputArgs,
    manifest: &RunManifest,
    table: &Table,
    out: &mut dyn Write,
) -> CmdResult {
    let mut text = render(output.format, manifest, table)?;
    match &output.out {
        Some(path) => {
            if output.format == Format::Table {
                text.insert_str(0, &manifest_comment(manifest));
            }
            fs::write(path, text).map_err(|e| io_err(path, e))
        }
        None => write_stdout(out, &text),
    }
}

fn load_records(input: &str) -> Result<(Vec<u8>, Vec<f64>, RecordSummary), CliError> {
    let bytes = read_input(input)?;
    let values = parse_values(&bytes)?;
    let summary = extract_upper_records(&values)?;
    Ok((bytes, values, summary))
}

fn record_counts(spec: Option<&str>, summary: &RecordSummary) -> Result<Vec<usize>, CliError> {
    let ns = match spec {
        Some(s) => parse_n_spec(s)?,
        None => (2..=summary.n()).collect(),
    };
    if ns.is_empty() {
        return Err(Error::InsufficientRecords {
            needed: 2,
            found: summary.n(),
        }
        .into());
    }
    for &n in &ns {
        if n < 2 || n > summary.n() {
            return Err(Error::InsufficientRecords {
                needed: n.max(2),
                found: summary.n(),
            }
            .into());
        }
    }
    Ok(ns)
}

pub(super) fn extract(args: ExtractArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (bytes, _, summary) = load_records(&args.input)?;
    if summary.n() < 2 {
        let _ = writeln!(
            err,
            "warning: only one record; the record range is undefined"
        );
    }
    let manifest = RunManifest::new("extract", &bytes).param("input", &args.input);
    let mut table = Table::new(&["k", "time", "value", "range"]);
    let first = summary.values[0];
    for (k, (&v, &t)) in summary.values.iter().zip(&summary.times).enumerate() {
        table.push(vec![
            Cell::Int(k as u64 + 1),
            Cell::Int(t as u64),
            Cell::text(v.to_string()),
            if k == 0 {
                Cell::Empty
            } else {
                Cell::Num(v - first, 10)
            },
        ]);
    }
    emit(&args.output, &manifest, &table, out)
}

pub(super) fn estimate(args: EstimateArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let prior = PriorParams::new(args.a, args.b)?;
    let ids: Vec<EstimatorId> = parse_named_list(&args.estimators)?;
    let (bytes, values, summary) = load_records(&args.input)?;
    let ns = record_counts(args.n.as_deref(), &summary)?;

    let mut manifest = RunManifest::new("estimate", &bytes)
        .param("input", &args.input)
        .param("a", args.a)
        .param("b", args.b)
        .param("estimators", &args.estimators)
        .param(
            "n",
            ns.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param("digits", args.digits);
    if let Some(d) = args.delta_ref {
        manifest = manifest.param("delta_ref", d);
    }

    let columns: &[&'static str] = if args.delta_ref.is_some() {
        &[
            "estimator",
            "n",
            "value",
            "analytic_mean",
            "analytic_variance",
            "analytic_mse",
        ]
    } else {
        &["estimator", "n", "value"]
    };
    let mut table = Table::new(columns);
    let dg = args.digits;
    for &id in &ids {
        for &n in &ns {
            let s = summary.first(n)?;
            let rep = estimate_one(id, &s, &prior, Some(&values), args.delta_ref)?;
            let mut row = vec![
                Cell::text(id.as_str()),
                Cell::Int(n as u64),
                Cell::Num(rep.value, dg),
            ];
            if args.delta_ref.is_some() {
                row.push(Cell::opt(rep.analytic_mean, dg));
                row.push(Cell::opt(rep.analytic_variance, dg));
                row.push(Cell::opt(rep.analytic_mse, dg));
            }
            table.push(row);
        }
    }
    emit(&args.output, &manifest, &table, out)
}

pub(super) fn interval(args: IntervalArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let prior = PriorParams::new(args.a, args.b)?;
    let alphas = parse_f64_list(&args.alpha, "alpha")?;
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(CliError::Usage(format!(
            "alpha must lie in (0, 1), got {a}"
        )));
    }
    let kinds: Vec<IntervalKind> = if args.kind.trim() == "all" {
        IntervalKind::ALL.to_vec()
    } else {
        parse_named_list(&args.kind)?
    };
    let (bytes, _, summary) = load_records(&args.input)?;
    let ns = record_counts(args.n.as_deref(), &summary)?;

    let manifest = RunManifest::new("interval", &bytes)
        .param("input", &args.input)
        .param("a", args.a)
        .param("b", args.b)
        .param("alpha", &args.alpha)
        .param("kind", &args.kind)
        .param(
            "n",
            ns.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param("digits", args.digits);

    let mut table = Table::new(&[
        "n",
        "kind",
        "confidence",
        "lower",
        "upper",
        "length",
        "coverage",
        "note",
    ]);
    let dg = args.digits;
    let mut warned = false;
    for &n in &ns {
        let post = posterior_from(&prior, &summary.first(n)?)?;
        for &kind in &kinds {
            for &alpha in &alphas {
                let mut note = String::new();
                let ci = match kind {
                    IntervalKind::EqualTails => equal_tails(&post, alpha)?,
                    IntervalKind::HpdExact => hpd_exact(&post, alpha)?,
                    IntervalKind::HpdHpm => match hpd_hpm_calibrated(&post, alpha) {
                        Ok(ci) => ci,
                        Err(Error::BracketFailure { detail, .. }) => {
                            if !warned {
                                let _ = writeln!(
                                    err,
                                    "warning: hpd_hpm cannot reach the requested level ({detail}); \
                                     its width is set to the exact HPD length"
                                );
                                warned = true;
                            }
                            note = "uncalibrated: g = hpd_exact length".into();
                            hpd_hpm_closed_form(&post, hpd_exact(&post, alpha)?.length)?
                        }
                        Err(e) => return Err(e.into()),
                    },
                };
                let coverage = posterior_coverage(ci.lower, ci.upper, &post)?;
                table.push(vec![
                    Cell::Int(n as u64),
                    Cell::text(kind.as_str()),
                    Cell::text((1.0 - alpha).to_string()),
                    Cell::Num(ci.lower, dg),
                    Cell::Num(ci.upper, dg),
                    Cell::Num(ci.length, dg),
                    Cell::Num(coverage, dg),
                    Cell::Text(note),
                ]);
            }
        }
    }
    emit(&args.output, &manifest, &table, out)
}

const DEFAULT_SIM_ESTIMATORS: [EstimatorId; 5] = [
    EstimatorId::MleRecords,
    EstimatorId::MleUrr,
    EstimatorId::BayesQuadratic,
    EstimatorId::BayesSquared,
    EstimatorId::BayesAbsolute,
];

fn sim_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = fs::read(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => SimConfig {
            delta_true: 2.0,
            n_records: vec![4, 5, 6, 7],
            reps: 100,
            seed: 0,
            prior: PriorParams { a: 8.0, b: 2.0 },
            estimators: DEFAULT_SIM_ESTIMATORS.to_vec(),
            alpha_list: Vec::new(),
            interval_kinds: vec![IntervalKind::EqualTails, IntervalKind::HpdExact],
        },
    };
    if let Some(d) = args.delta {
        cfg.delta_true = d;
    }
    if let Some(a) = args.a {
        cfg.prior.a = a;
    }
    if let Some(b) = args.b {
        cfg.prior.b = b;
    }
    if let Some(n) = &args.n {
        cfg.n_records = parse_n_spec(n)?;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = &args.estimators {
        cfg.estimators = parse_named_list(e)?;
    }
    if let Some(a) = &args.alpha {
        cfg.alpha_list = parse_f64_list(a, "alpha")?;
    }
    if let Some(k) = &args.kinds {
        cfg.interval_kinds = parse_named_list(k)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn point_table(res: &SimResult, dg: usize) -> Table {
    let mut t = Table::new(&[
        "estimator",
        "n",
        "reps",
        "average_estimate",
        "se_average",
        "empirical_mse",
        "se_mse",
        "analytic_mean",
        "analytic_mse",
    ]);
    for r in &res.point {
        t.push(vec![
            Cell::text(r.estimator.as_str()),
            Cell::Int(r.n as u64),
            Cell::Int(r.reps as u64),
            Cell::Num(r.average_estimate, dg),
            Cell::Num(r.se_average, dg),
            Cell::Num(r.empirical_mse, dg),
            Cell::Num(r.se_mse, dg),
            Cell::opt(r.analytic_mean, dg),
            Cell::opt(r.analytic_mse, dg),
        ]);
    }
    t
}

fn interval_table(res: &SimResult, dg: usize) -> Table {
    let mut t = Table::new(&[
        "kind",
        "n",
        "alpha",
        "reps",
        "empirical_coverage",
        "mean_length",
    ]);
    for r in &res.interval {
        t.push(vec![
            Cell::text(r.kind.as_str()),
            Cell::Int(r.n as u64),
            Cell::text(r.alpha.to_string()),
            Cell::Int(r.reps as u64),
            Cell::Num(r.empirical_coverage, dg),
            Cell::Num(r.mean_length, dg),
        ]);
    }
    t
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub(super) fn simulate(args: SimulateArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let cfg = sim_config(&args)?;
    let cfg_json = serde_json::to_string(&cfg).expect("config serializes");
    let mut manifest = RunManifest::new("simulate", cfg_json.as_bytes())
        .param("delta", cfg.delta_true)
        .param("a", cfg.prior.a)
        .param("b", cfg.prior.b)
        .param(
            "n",
            cfg.n_records
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param("reps", cfg.reps)
        .param(
            "estimators",
            cfg.estimators
                .iter()
                .map(|e| e.as_str())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param(
            "alpha",
            cfg.alpha_list
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param(
            "kinds",
            cfg.interval_kinds
                .iter()
                .map(|k| k.as_str())
                .collect::<Vec<_>>()
                .join(","),
        )
        .param("digits", args.digits);
    manifest.seed = Some(cfg.seed);

    let work = || -> Result<SimResult, Error> {
        let mut res = SimResult::default();
        if !cfg.estimators.is_empty() {
            res.point = run_point_sim(&cfg)?.point;
        }
        if !cfg.alpha_list.is_empty() {
            res.interval = run_interval_sim(&cfg)?.interval;
        }
        Ok(res)
    };
    let res = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let points = point_table(&res, args.digits);
    let intervals = interval_table(&res, args.digits);
    let doc = to_json(&manifest, json!({ "config": cfg, "result": res }));

    match &args.out {
        Some(stem) => {
            let mut written = Vec::new();
            if !res.point.is_empty() {
                let p = with_suffix(stem, ".csv");
                fs::write(&p, points.to_csv(&manifest)?).map_err(|e| io_err(&p, e))?;
                written.push(p);
            }
            if !res.interval.is_empty() {
                let p = with_suffix(stem, ".intervals.csv");
                fs::write(&p, intervals.to_csv(&manifest)?).map_err(|e| io_err(&p, e))?;
                written.push(p);
            }
            let p = with_suffix(stem, ".json");
            fs::write(&p, &doc).map_err(|e| io_err(&p, e))?;
            written.push(p);
            for p in written {
                write_stdout(out, &format!("wrote {}\n", p.display()))?;
            }
            Ok(())
        }
        None => {
            let text = match args.format {
                Format::Json => doc,
                Format::Csv | Format::Table => {
                    let mut parts = Vec::new();
                    for t in [&points, &intervals] {
                        if !t.rows.is_empty() {
                            parts.push(render(args.format, &manifest, t)?);
                        }
                    }
                    parts.join("\n")
                }
            };
            write_stdout(out, &text)
        }
    }
}

pub(super) fn risk(args: RiskArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let dg = args.digits;
    let weight = match args.loss {
        LossArg::Scaled => LossWeight::Scaled,
        LossArg::Unscaled => LossWeight::Unscaled,
    };
    let mut manifest = RunManifest::new("risk", b"").param("loss", weight_name(weight));
    for (key, v) in [
        ("m", args.m),
        ("d", args.d),
        ("delta", args.delta),
        ("a", args.a),
        ("b", args.b),
    ] {
        if let Some(v) = v {
            manifest = manifest.param(key, v);
        }
    }

    if let Some(spec) = &args.k_sweep {
        let n = args.n.unwrap_or(4);
        let b = args.b.unwrap_or(2.0);
        manifest = manifest
            .param("k_sweep", spec)
            .param("per_decade", args.per_decade)
            .param("n", n)
            .param("b", b);
        let mut table = Table::new(&["k", "r1", "r2", "gap", "k_gap"]);
        for k in parse_k_sweep(spec, args.per_decade)? {
            let gap = r1_r2_gap(k, n, b)?;
            table.push(vec![
                Cell::Num(k, dg),
                Cell::Num(r1(k, n, b)?, dg),
                Cell::Num(r2(k, n, b)?, dg),
                Cell::Num(gap, dg),
                Cell::Num(k * gap, dg),
            ]);
        }
        return emit(&args.output, &manifest, &table, out);
    }

    let (Some(m), Some(d), Some(n)) = (args.m, args.d, args.n) else {
        return Err(CliError::Usage(
            "risk needs --m, --d and --n (or --k-sweep)".into(),
        ));
    };
    manifest = manifest.param("n", n);
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be >= 2, got {n}")));
    }
    let est = LinearEstimator::new(m, d);
    let mut table = Table::new(&["quantity", "value"]);
    if let Some(delta) = args.delta {
        let r = risk_linear_weighted(&est, delta, n, weight)?;
        table.push(vec![Cell::text("risk"), Cell::Num(r, dg)]);
    }
    match (args.a, args.b) {
        (Some(a), Some(b)) => {
            let prior = PriorParams::new(a, b)?;
            let r = bayes_risk_linear_weighted(&est, n, &prior, weight)?;
            table.push(vec![Cell::text("bayes_risk"), Cell::Num(r, dg)]);
        }
        (None, None) => {}
        _ => return Err(CliError::Usage("Bayes risk needs both --a and --b".into())),
    }
    table.push(vec![
        Cell::text("classification"),
        Cell::text(classify_admissible(&est, n).as_str()),
    ]);
    emit(&args.output, &manifest, &table, out)
}

fn weight_name(w: LossWeight) -> &'static str {
    match w {
        LossWeight::Scaled => "scaled",
        LossWeight::Unscaled => "unscaled",
    }
}

pub(super) fn reproduce(
    args: ReproduceArgs,
    out: &mut dyn Write,
    _err: &mut dyn Write,
) -> CmdResult {
    let prior = PriorParams::new(args.a, args.b)?;
    let (bytes, values) = match &args.input {
        Some(path) => {
            let bytes = read_input(path)?;
            let values = parse_values(&bytes)?;
            (bytes, values)
        }
        None => {
            let text: String = EXAMPLE_ONE.iter().map(|v| format!("{v}\n")).collect();
            (text.into_bytes(), EXAMPLE_ONE.to_vec())
        }
    };
    let rows = crate::sim::reproduce_table1(&values, &prior)?;
    let manifest = RunManifest::new("reproduce", &bytes)
        .param("table", args.table)
        .param("input", args.input.as_deref().unwrap_or("builtin:example1"))
        .param("a", args.a)
        .param("b", args.b)
        .param("digits", args.digits);

    let mut table = Table::new(&["estimator", "n", "value"]);
    let dg = args.digits;
    type Pick = fn(&crate::sim::Table1Row) -> f64;
    let columns: [(EstimatorId, Pick); 4] = [
        (EstimatorId::MleRecords, |r| r.mle_records),
        (EstimatorId::MleUrr, |r| r.mle_urr),
        (EstimatorId::BayesQuadratic, |r| r.bayes_quadratic),
        (EstimatorId::BayesSquared, |r| r.bayes_squared),
    ];
    for (id, pick) in columns {
        for row in &rows {
            table.push(vec![
                Cell::text(id.as_str()),
                Cell::Int(row.n as u64),
                Cell::Num(pick(row), dg),
            ]);
        }
    }
    emit(&args.output, &manifest, &table, out)
}
