//! Data series behind the figures, one table per figure.

use arrivals::lattice_walk::{triangular_msd, TriangularKind};
use arrivals::ness::{continuous_ness_1d, linspace, NessKind};
use arrivals::stopped::{closed_form_asymptotics, stopped_moments, ClosedFormCase, DbpStopsBernoulli};

use crate::args::FiguresArgs;
use crate::error::CliError;
use crate::output::{Sink, Table};

pub const NAMES: [&str; 8] = ["fig2", "fig3", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

const P0: f64 = 0.7;
const Q: f64 = 0.8;
const STOP_MASSES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const CURVE_PARAMS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

fn grid_over_unit(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn limits_vs_p(name: &str, column: &str, case: impl Fn(f64) -> ClosedFormCase) -> Result<Table, CliError> {
    let mut out = Table::new(name, [column, "mean_inf", "second_inf", "var_inf"].map(String::from).to_vec());
    for p in grid_over_unit(50) {
        let m = closed_form_asymptotics(case(p))?;
        out.push(vec![p, m.mean, m.second, m.variance]);
    }
    Ok(out)
}

fn per_stop_mass(name: &str, horizon: usize, f: impl Fn(&DbpStopsBernoulli, usize) -> Result<Vec<f64>, CliError>) -> Result<Table, CliError> {
    let mut columns = vec!["t".to_string()];
    columns.extend(STOP_MASSES.iter().map(|m| format!("qs_{m}")));
    let series = STOP_MASSES
        .iter()
        .map(|&m| f(&DbpStopsBernoulli::new(P0, Q, m)?, horizon))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Table::new(name, columns);
    for t in 0..=horizon {
        let mut row = vec![t as f64];
        row.extend(series.iter().map(|s| s[t]));
        out.push(row);
    }
    Ok(out)
}

fn curves(name: &str, lo: f64, hi: f64, prefix: &str, kind: impl Fn(f64) -> NessKind) -> Result<Table, CliError> {
    let y = linspace(lo, hi, 401);
    let mut columns = vec!["y".to_string()];
    columns.extend(CURVE_PARAMS.iter().map(|v| format!("{prefix}_{v}")));
    let curves = CURVE_PARAMS
        .iter()
        .map(|&v| continuous_ness_1d(kind(v), &y))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Table::new(name, columns);
    for (i, &yi) in y.iter().enumerate() {
        let mut row = vec![yi];
        row.extend(curves.iter().map(|c| c.density[i]));
        out.push(row);
    }
    Ok(out)
}

/// Builds the table of one figure.
pub fn build(name: &str) -> Result<Table, CliError> {
    match name {
        // Sibuya(0.2) inner process stopped by a Bernoulli process, limits against p
        "fig2" => limits_vs_p(name, "p", |p| ClosedFormCase::BernoulliStopsSibuya { mu: 0.2, p }),
        // E M(t) for several stop masses
        "fig3" => per_stop_mass(name, 200, |m, h| Ok(m.mean_series(h).into_coeffs())),
        // Bernoulli(0.6) inner process stopped by a Bernoulli process, limits against p_S
        "fig5" => limits_vs_p(name, "p_s", |p_stop| ClosedFormCase::BernoulliStopsBernoulli { p: 0.6, p_stop }),
        // Var M(t) for several stop masses
        "fig6" => per_stop_mass(name, 200, |m, h| Ok(m.variance_series(h).into_coeffs())),
        // never-stop probability maximising the variance
        "fig7" => {
            let model = DbpStopsBernoulli::new(P0, Q, 0.5)?;
            let mut out = Table::new(name, vec!["t".into(), "lambda_max".into()]);
            for t in 2..=1000u64 {
                out.push(vec![t as f64, model.lambda_max(t)?]);
            }
            Ok(out)
        }
        // biased triangular-lattice MSD for several stop masses
        "fig8" => per_stop_mass(name, 200, |m, h| {
            let spec = m.spec(h)?;
            let msd = triangular_msd(TriangularKind::Biased, &stopped_moments(&spec, 1)?, &stopped_moments(&spec, 2)?)?;
            Ok(msd.into_coeffs())
        }),
        "fig9" => curves(name, 0.0, 10.0, "a", |a| NessKind::OneSidedExp { a }),
        "fig10" => curves(name, -10.0, 10.0, "b", |b| NessKind::Laplace { b }),
        other => Err(CliError::Usage(format!("unknown figure `{other}`, expected one of {} or all", NAMES.join(", ")))),
    }
}

pub fn run(args: &FiguresArgs) -> Result<(), CliError> {
    let mut names: Vec<&str> = Vec::new();
    for n in &args.names {
        if n == "all" {
            names.extend(NAMES);
        } else if let Some(k) = NAMES.iter().find(|k| **k == n.as_str()) {
            names.push(k);
        } else {
            return Err(CliError::Usage(format!("unknown figure `{n}`, expected one of {} or all", NAMES.join(", "))));
        }
    }
    names.dedup();
    if names.len() > 1 && args.common.out.is_none() {
        return Err(CliError::Usage("several figures need --out <dir>".into()));
    }
    let sink = Sink { command: "figures", out: args.common.out.as_deref(), format: args.common.format };
    for name in names {
        sink.table(&build(name)?)?;
    }
    Ok(())
}
