//! One function per subcommand.

use arrivals::lattice_walk::{propagator, walk_moments, StepLaw, MAX_GRID_CELLS};
use arrivals::montecarlo::{
    compare_empirical, sample_walk_endpoints, stopped_histograms, Observation, SimConfig,
};
use arrivals::ness::{continuous_ness_1d, lattice_ness, linspace, rescaling_parameter};
use arrivals::renewal::{count_moments, limit_state_law, state_table, ProcessType, StateTable};
use arrivals::stopped::{geometric_stop_asymptotics, stopped_moments, stopped_pmf_table, StoppedSpec};
use arrivals::{CoeffSeries, ExtendedTime, WaitingLaw};
use serde_json::{json, Map, Value};

use crate::args::{Common, McArgs, NessArgs, RenewalArgs, StoppedArgs, WalkArgs};
use crate::error::CliError;
use crate::output::{number, summary, Sink, Table};

fn sink<'a>(command: &'a str, common: &'a Common) -> Sink<'a> {
    Sink { command, out: common.out.as_deref(), format: common.format }
}

fn numbers(values: &[f64]) -> Value {
    Value::from(values.iter().map(|&v| number(v)).collect::<Vec<_>>())
}

fn state_csv(name: &str, prefix: &str, table: &StateTable) -> Table {
    let mut columns = vec!["t".to_string()];
    columns.extend((0..=table.n_max()).map(|n| format!("{prefix}{n}")));
    let mut out = Table::new(name, columns);
    for t in 0..=table.horizon() {
        let mut row = vec![t as f64];
        row.extend(table.column(t));
        out.push(row);
    }
    out
}

fn moments_csv(name: &str, first: &CoeffSeries, second: &CoeffSeries) -> Table {
    let mut out = Table::new(name, ["t", "mean", "second", "variance"].map(String::from).to_vec());
    for t in 0..=first.horizon() {
        let (m, s) = (first.get(t), second.get(t));
        out.push(vec![t as f64, m, s, s - m * m]);
    }
    out
}

fn process_type_name(kind: ProcessType) -> &'static str {
    match kind {
        ProcessType::TypeI => "type-i",
        ProcessType::Intermediate => "intermediate",
        ProcessType::TypeII => "type-ii",
    }
}

pub fn renewal(args: &RenewalArgs) -> Result<(), CliError> {
    let horizon = args.common.horizon;
    let law = &args.law;
    let sink = sink("renewal", &args.common);
    let (first, second) = count_moments(law, horizon)?;
    if args.summary {
        let limit = limit_state_law(law, horizon.min(50) + 1);
        let mean_h = first.last();
        let mut fields = Map::new();
        fields.insert("law".into(), json!(law.to_string()));
        fields.insert("horizon".into(), json!(horizon));
        fields.insert("defect_mass".into(), number(law.defect_mass()));
        fields.insert("process_type".into(), json!(process_type_name(limit.process_type)));
        fields.insert("mean_waiting_time".into(), law.mean().map_or(Value::Null, number));
        fields.insert("mean_count_at_horizon".into(), number(mean_h));
        fields.insert("variance_count_at_horizon".into(), number(second.last() - mean_h * mean_h));
        let limit_probs = match limit.process_type {
            ProcessType::TypeII => Value::Null,
            _ => numbers(&limit.probs),
        };
        fields.insert("limit_state_law".into(), limit_probs);
        return sink.summary("renewal_summary", &summary("renewal", fields));
    }
    if args.moments {
        sink.table(&moments_csv("renewal_moments", &first, &second))
    } else {
        sink.table(&state_csv("renewal_states", "n", &state_table(law, horizon)))
    }
}

/// `(q, Q_S)` when the stopping law is geometric, possibly defective.
fn geometric_stop(stop: &WaitingLaw) -> Option<(f64, f64)> {
    let (q, mass) = match *stop {
        WaitingLaw::Geometric { p } => (1.0 - p, 1.0),
        WaitingLaw::DefectiveGeometric { mass, p } => (1.0 - p, mass),
        _ => return None,
    };
    (q > 0.0 && q < 1.0).then_some((q, mass))
}

pub fn stopped(args: &StoppedArgs) -> Result<(), CliError> {
    let spec = StoppedSpec::new(args.inner.clone(), args.stop.clone(), args.common.horizon)?;
    let sink = sink("stopped", &args.common);
    if args.summary {
        let m1 = stopped_moments(&spec, 1)?;
        let m2 = stopped_moments(&spec, 2)?;
        let mut fields = Map::new();
        fields.insert("inner".into(), json!(spec.inner().to_string()));
        fields.insert("stop".into(), json!(spec.stop().to_string()));
        fields.insert("horizon".into(), json!(spec.horizon()));
        fields.insert("stop_mass".into(), number(spec.stop().defect_mass()));
        fields.insert("never_stop_prob".into(), number(spec.never_stop_prob()));
        fields.insert("process_type".into(), json!(process_type_name(spec.process_type())));
        fields.insert("mean_at_horizon".into(), number(m1.last()));
        fields.insert("variance_at_horizon".into(), number(m2.last() - m1.last() * m1.last()));
        let (mut mean_inf, mut second_inf, mut var_inf, mut p_inf, mut tail) = (Value::Null, Value::Null, Value::Null, Value::Null, Value::Null);
        if let Some((q, mass)) = geometric_stop(spec.stop()) {
            let asym = geometric_stop_asymptotics(spec.inner(), q, mass)?;
            if let Some(m) = asym.moments {
                mean_inf = number(m.mean);
                second_inf = number(m.second);
                var_inf = number(m.variance);
            }
            p_inf = numbers(&asym.p_inf);
            tail = number(asym.tail_mass);
        }
        fields.insert("mean_inf".into(), mean_inf);
        fields.insert("second_inf".into(), second_inf);
        fields.insert("var_inf".into(), var_inf);
        fields.insert("p_inf".into(), p_inf);
        fields.insert("p_inf_tail_mass".into(), tail);
        return sink.summary("stopped_summary", &summary("stopped", fields));
    }
    if args.moments {
        sink.table(&moments_csv("stopped_moments", &stopped_moments(&spec, 1)?, &stopped_moments(&spec, 2)?))
    } else {
        sink.table(&state_csv("stopped_states", "m", &stopped_pmf_table(&spec)))
    }
}

fn component_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("{prefix}{j}")).collect()
}

fn default_half_width(step: &StepLaw, time: usize) -> usize {
    let want = step.reach() as usize * time;
    let mut fit = 0usize;
    while (2 * (fit + 1) + 1).checked_pow(step.dim() as u32).is_some_and(|c| c <= MAX_GRID_CELLS) && fit < want {
        fit += 1;
    }
    fit
}

pub fn walk(args: &WalkArgs) -> Result<(), CliError> {
    let horizon = args.common.horizon;
    let sink = sink("walk", &args.common);
    let step = &args.step;
    let dim = step.dim();
    let spec = StoppedSpec::new(args.inner.clone(), args.stop.clone(), horizon)?;
    let m1 = stopped_moments(&spec, 1)?;
    let m2 = stopped_moments(&spec, 2)?;
    let wm = walk_moments(step, &m1, &m2)?;
    let msd = |t: usize| wm.second.iter().map(|s| s.get(t)).sum::<f64>();

    if args.summary {
        let mut fields = Map::new();
        fields.insert("inner".into(), json!(spec.inner().to_string()));
        fields.insert("stop".into(), json!(spec.stop().to_string()));
        fields.insert("horizon".into(), json!(horizon));
        fields.insert("step_mean".into(), numbers(step.mean()));
        fields.insert("step_variance".into(), numbers(&step.variance()));
        fields.insert("mean_at_horizon".into(), numbers(&wm.mean.iter().map(|s| s.last()).collect::<Vec<_>>()));
        fields.insert("variance_at_horizon".into(), numbers(&wm.variance.iter().map(|s| s.last()).collect::<Vec<_>>()));
        fields.insert("msd_at_horizon".into(), number(msd(horizon)));
        return sink.summary("walk_summary", &summary("walk", fields));
    }
    if args.propagator {
        let time = args.time.unwrap_or(horizon);
        let table = stopped_pmf_table(&spec.with_horizon(time));
        let half_width = args.half_width.unwrap_or_else(|| default_half_width(step, time));
        let grid = propagator(step, &table.column(time), half_width, ExtendedTime::Finite(time as u64))?;
        let mut columns = component_names("x", dim);
        columns.push("probability".into());
        let mut out = Table::new("walk_propagator", columns);
        for (x, p) in grid.iter().filter(|(_, p)| *p != 0.0) {
            let mut row: Vec<f64> = x.iter().map(|&c| c as f64).collect();
            row.push(p);
            out.push(row);
        }
        return sink.table(&out);
    }
    let mut columns = vec!["t".to_string()];
    columns.extend(component_names("mean_", dim));
    columns.extend(component_names("second_", dim));
    columns.push("msd".into());
    let mut out = Table::new("walk_moments", columns);
    for t in 0..=horizon {
        let mut row = vec![t as f64];
        row.extend(wm.mean.iter().map(|s| s.get(t)));
        row.extend(wm.second.iter().map(|s| s.get(t)));
        row.push(msd(t));
        out.push(row);
    }
    sink.table(&out)
}

pub fn ness(args: &NessArgs) -> Result<(), CliError> {
    let sink = sink("ness", &args.common);
    if let Some(kind) = args.kind {
        if args.ymin.partial_cmp(&args.ymax) != Some(std::cmp::Ordering::Less) || args.points < 2 {
            return Err(CliError::Usage("need ymin < ymax and at least two points".into()));
        }
        let curve = continuous_ness_1d(kind, &linspace(args.ymin, args.ymax, args.points))?;
        if args.summary {
            let mut fields = Map::new();
            fields.insert("kind".into(), json!(kind.label()));
            fields.insert("parameters".into(), serde_json::to_value(kind).map_err(|e| CliError::Io(e.to_string()))?);
            fields.insert("ymin".into(), number(args.ymin));
            fields.insert("ymax".into(), number(args.ymax));
            fields.insert("points".into(), json!(args.points));
            fields.insert("trapezoid_mass".into(), number(curve.trapezoid_mass()));
            return sink.summary("ness_summary", &summary("ness", fields));
        }
        let mut out = Table::new("ness_curve", vec!["y".into(), "density".into()]);
        for (y, d) in curve.y.iter().zip(&curve.density) {
            out.push(vec![*y, *d]);
        }
        return sink.table(&out);
    }
    let (Some(inner), Some(q), Some(step)) = (&args.inner, args.q, &args.step) else {
        return Err(CliError::Usage("give either --kind, or --inner with --q and --step".into()));
    };
    let grid = lattice_ness(step, inner, q, args.half_width)?;
    if args.summary {
        let (mean, second) = grid.moments();
        let mut fields = Map::new();
        fields.insert("inner".into(), json!(inner.to_string()));
        fields.insert("q".into(), number(q));
        fields.insert("half_width".into(), json!(args.half_width));
        fields.insert("mass_in_box".into(), number(grid.mass_in_box()));
        fields.insert("mean_count".into(), number(rescaling_parameter(inner, q)?));
        fields.insert("mean".into(), numbers(&mean));
        fields.insert("second".into(), numbers(&second));
        return sink.summary("ness_summary", &summary("ness", fields));
    }
    let mut columns = component_names("x", step.dim());
    columns.push("probability".into());
    let mut out = Table::new("ness_lattice", columns);
    for (x, p) in grid.iter() {
        let mut row: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        row.push(p);
        out.push(row);
    }
    sink.table(&out)
}

fn parse_observation(raw: Option<&str>, horizon: usize) -> Result<Observation, CliError> {
    let Some(raw) = raw else {
        return Ok(Observation::At(horizon as u64));
    };
    let bad = || CliError::Usage(format!("--observe takes a time or frozen:<cap>, got `{raw}`"));
    match raw.strip_prefix("frozen:") {
        Some(cap) => Ok(Observation::Frozen { cap: cap.parse().map_err(|_| bad())? }),
        None => Ok(Observation::At(raw.parse().map_err(|_| bad())?)),
    }
}

pub fn mc(args: &McArgs) -> Result<(), CliError> {
    let common = &args.common;
    let sink = sink("mc", common);
    let mut cfg = SimConfig::new(common.seed, common.replicas, common.horizon);
    if let Some(w) = common.workers {
        cfg = cfg.with_workers(w);
    }
    cfg.validate()?;

    if let Some(step) = &args.step {
        let obs = parse_observation(args.observe.as_deref(), common.horizon)?;
        let spec = StoppedSpec::new(args.inner.clone(), args.stop.clone(), common.horizon)?;
        let sample = sample_walk_endpoints(step, &spec, &cfg, obs)?;
        let dim = step.dim();
        if args.summary {
            let n = sample.positions.len() as f64;
            let cart: Vec<Vec<f64>> = sample.positions.iter().map(|x| step.embedding().cartesian(x)).collect();
            let mean: Vec<f64> = (0..dim).map(|j| cart.iter().map(|c| c[j]).sum::<f64>() / n).collect();
            let second: Vec<f64> = (0..dim).map(|j| cart.iter().map(|c| c[j] * c[j]).sum::<f64>() / n).collect();
            let mut fields = Map::new();
            fields.insert("config".into(), serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?);
            fields.insert("observation".into(), serde_json::to_value(obs).map_err(|e| CliError::Io(e.to_string()))?);
            fields.insert("samples".into(), json!(sample.positions.len()));
            fields.insert("cap_hits".into(), json!(sample.cap_hits));
            fields.insert("mean".into(), numbers(&mean));
            fields.insert("second".into(), numbers(&second));
            if let Observation::At(t) = obs {
                let exact_spec = spec.with_horizon(t as usize);
                let wm = walk_moments(step, &stopped_moments(&exact_spec, 1)?, &stopped_moments(&exact_spec, 2)?)?;
                fields.insert("exact_mean".into(), numbers(&wm.mean.iter().map(|s| s.last()).collect::<Vec<_>>()));
                fields.insert("exact_second".into(), numbers(&wm.second.iter().map(|s| s.last()).collect::<Vec<_>>()));
            }
            return sink.summary("mc_summary", &summary("mc", fields));
        }
        let mut columns = vec!["index".to_string()];
        columns.extend(component_names("x", dim));
        let mut out = Table::new("mc_endpoints", columns);
        for (i, x) in sample.positions.iter().enumerate() {
            let mut row = vec![i as f64];
            row.extend(x.iter().map(|&c| c as f64));
            out.push(row);
        }
        return sink.table(&out);
    }

    let times: Vec<u64> = if args.times.is_empty() { vec![common.horizon as u64] } else { args.times.clone() };
    let last = *times.iter().max().expect("non-empty");
    let spec = StoppedSpec::new(args.inner.clone(), args.stop.clone(), last as usize)?;
    let counts = stopped_histograms(&spec, &cfg, &times)?;
    if args.summary {
        let exact = stopped_pmf_table(&spec);
        let mut per_time = Vec::new();
        for (&t, hist) in times.iter().zip(&counts) {
            let column = exact.column(t as usize);
            let cmp = compare_empirical(hist, &column)?;
            let n: u64 = hist.iter().sum();
            let mean = hist.iter().enumerate().map(|(m, &c)| m as f64 * c as f64).sum::<f64>() / n as f64;
            let exact_mean: f64 = column.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
            per_time.push(json!({
                "t": t,
                "total_variation": number(cmp.total_variation),
                "ks": number(cmp.ks),
                "chi_square_p": number(cmp.chi_square_p),
                "mean": number(mean),
                "exact_mean": number(exact_mean),
            }));
        }
        let mut fields = Map::new();
        fields.insert("config".into(), serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?);
        fields.insert("inner".into(), json!(spec.inner().to_string()));
        fields.insert("stop".into(), json!(spec.stop().to_string()));
        fields.insert("never_stop_prob".into(), number(spec.never_stop_prob()));
        fields.insert("comparisons".into(), Value::from(per_time));
        return sink.summary("mc_summary", &summary("mc", fields));
    }
    let mut out = Table::new("mc_histograms", ["t", "m", "count", "fraction"].map(String::from).to_vec());
    for (&t, hist) in times.iter().zip(&counts) {
        let total: u64 = hist.iter().sum();
        for (m, &c) in hist.iter().enumerate().filter(|(_, &c)| c > 0) {
            out.push(vec![t as f64, m as f64, c as f64, c as f64 / total as f64]);
        }
    }
    sink.table(&out)
}
