use std::path::Path;

use probgeom::distinguishability::{max_distinguishable_with, SearchLimits};
use probgeom::geometry::{analyze, extreme_states};
use probgeom::io::{
    matrix_to_json, parse_map, parse_table, serialize_table, vector_to_json, AnyTable, DistinguishabilityExport,
    FactorizationExport, Format, GeometryExport, ParseOptions,
};
use probgeom::quantum::{snap_table, QuantumModel, TRACE_RULE_TOLERANCE};
use probgeom::state_maps::{linearize, Domain, StateSpace};
use probgeom::{factorize_with, rank_of, Basis, FactorizeOptions, Factorization, Field, NumericMode, ProbabilityTable};
use serde_json::{json, Value};

use crate::report::{envelope, render};
use crate::{distinguish_mode, read_input, Cli, Command, Failure, TableFormat};

const SNAP_TOLERANCE: f64 = 1e-9;

pub fn run(cli: &Cli) -> Result<Vec<u8>, Failure> {
    let options = parse_options(cli)?;
    let (mode, tolerance, result) = match &cli.command {
        Command::Qgen { model, table_format } => return qgen(cli, model, *table_format),
        Command::MapApply { source, target, map } | Command::MapLinearize { source, target, map } => {
            let src = load_table(cli, source, options)?;
            let dst = load_table(cli, target, options)?;
            let map_bytes = read_input(map)?;
            let ctx = MapContext { source, target, map };
            match (src, dst) {
                (AnyTable::Exact(s), AnyTable::Exact(t)) => (s.mode(), s.tolerance(), map_command(cli, &ctx, &s, &t, &map_bytes)?),
                (AnyTable::Float(s), AnyTable::Float(t)) => (s.mode(), s.tolerance(), map_command(cli, &ctx, &s, &t, &map_bytes)?),
                _ => {
                    return Err(Failure::validation(format!(
                        "{source} and {target} use different numeric modes; pass --mode"
                    )))
                }
            }
        }
        Command::Validate { table }
        | Command::Rank { table }
        | Command::Factorize { table }
        | Command::Geometry { table }
        | Command::Distinguish { table, .. }
        | Command::RegionCheck { table, .. }
        | Command::FullReport { table, .. } => match load_table(cli, table, options)? {
            AnyTable::Exact(t) => (t.mode(), t.tolerance(), table_command(cli, label(table), &t)?),
            AnyTable::Float(t) => (t.mode(), t.tolerance(), table_command(cli, label(table), &t)?),
        },
    };
    let report = envelope(cli.command.name(), mode.as_str(), tolerance, result);
    Ok(render(&report, cli.format))
}

fn parse_options(cli: &Cli) -> Result<ParseOptions, Failure> {
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(Failure::validation(format!("--tol must be a finite non-negative number, got {tol}")));
        }
    }
    Ok(ParseOptions {
        mode: cli.mode,
        tolerance: cli.tol,
    })
}

fn label(path: &str) -> &str {
    if path == "-" {
        "stdin"
    } else {
        path
    }
}

fn table_format(cli: &Cli, path: &str) -> Format {
    match cli.input_format {
        Some(TableFormat::Csv) => Format::Csv,
        Some(TableFormat::Json) => Format::Json,
        None if Path::new(path).extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
        None => Format::Json,
    }
}

fn load_table(cli: &Cli, path: &str, options: ParseOptions) -> Result<AnyTable, Failure> {
    let bytes = read_input(path)?;
    parse_table(&bytes, table_format(cli, path), options).map_err(|e| Failure::from_error(label(path), e))
}

fn factor<T: Field>(cli: &Cli, ctx: &str, t: &ProbabilityTable<T>) -> Result<Factorization<T>, Failure> {
    let mut basis = Basis::Identity;
    if !cli.basis.is_empty() {
        let idx = cli
            .basis
            .iter()
            .map(|name| {
                t.state_index(name)
                    .ok_or_else(|| Failure::validation(format!("{ctx}: --basis names unknown state '{name}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        basis = Basis::States(idx);
    }
    let options = FactorizeOptions {
        basis,
        rank_threshold: None,
    };
    factorize_with(t, &options).map_err(|e| Failure::from_error(ctx, e))
}

fn summary<T: Field>(t: &ProbabilityTable<T>) -> Value {
    let measurements: Vec<Value> = t
        .layout()
        .measurements()
        .iter()
        .map(|m| json!({"name": m.name, "outcomes": m.outcomes}))
        .collect();
    json!({
        "valid": true,
        "L": t.outcome_count(),
        "M": t.state_count(),
        "states": t.state_names(),
        "measurements": measurements,
    })
}

fn to_value(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("exports are plain JSON")
}

fn table_command<T: Field>(cli: &Cli, ctx: &str, t: &ProbabilityTable<T>) -> Result<Value, Failure> {
    let err = |e| Failure::from_error(ctx, e);
    let names = t.state_names();
    Ok(match &cli.command {
        Command::Validate { .. } => summary(t),
        Command::Rank { .. } => json!({ "K": rank_of(t).map_err(err)? }),
        Command::Factorize { .. } => to_value(FactorizationExport::new(&factor(cli, ctx, t)?)),
        Command::Geometry { .. } => {
            let f = factor(cli, ctx, t)?;
            to_value(GeometryExport::new(&analyze(&f, t.layout()).map_err(err)?, names))
        }
        Command::Distinguish { coarse, .. } => {
            let f = factor(cli, ctx, t)?;
            let z = extreme_states(&f).map_err(err)?.count();
            let report = max_distinguishable_with(t, &f, distinguish_mode(*coarse), SearchLimits::default(), z)
                .map_err(err)?;
            to_value(DistinguishabilityExport::new(&report, t.layout(), names))
        }
        Command::RegionCheck { candidate, .. } => {
            let f = factor(cli, ctx, t)?;
            let geo = analyze(&f, t.layout()).map_err(err)?;
            let coords = candidate
                .split(',')
                .map(|c| {
                    T::parse_text(c).map_err(|e| Failure::validation(format!("--candidate coordinate '{}': {e}", c.trim())))
                })
                .collect::<Result<Vec<T>, _>>()?;
            if coords.len() != geo.rank {
                return Err(Failure::validation(format!(
                    "--candidate has {} coordinates but {ctx} has rank {}",
                    coords.len(),
                    geo.rank
                )));
            }
            let inside = geo.region_contains(&coords).map_err(err)?;
            json!({
                "candidate": vector_to_json(&coords),
                "inside": inside,
                "verdict": if inside { "inside" } else { "outside" },
            })
        }
        Command::FullReport { coarse, .. } => {
            let k = rank_of(t).map_err(err)?;
            let f = factor(cli, ctx, t)?;
            let geo = analyze(&f, t.layout()).map_err(err)?;
            let report = max_distinguishable_with(t, &f, distinguish_mode(*coarse), SearchLimits::default(), geo.z())
                .map_err(err)?;
            json!({
                "summary": {
                    "K": k,
                    "Z": geo.z(),
                    "N": report.n,
                    "chain_holds": report.chain.holds(),
                    "classical": report.classical,
                },
                "validate": summary(t),
                "factorization": to_value(FactorizationExport::new(&f)),
                "geometry": to_value(GeometryExport::new(&geo, names)),
                "distinguishability": to_value(DistinguishabilityExport::new(&report, t.layout(), names)),
            })
        }
        Command::Qgen { .. } | Command::MapApply { .. } | Command::MapLinearize { .. } => {
            unreachable!("handled before table dispatch")
        }
    })
}

struct MapContext<'a> {
    source: &'a str,
    target: &'a str,
    map: &'a str,
}

fn map_command<T: Field>(
    cli: &Cli,
    ctx: &MapContext<'_>,
    src: &ProbabilityTable<T>,
    dst: &ProbabilityTable<T>,
    map_bytes: &[u8],
) -> Result<Value, Failure> {
    let space = |path: &str, t: &ProbabilityTable<T>| {
        let f = factor(cli, label(path), t)?;
        StateSpace::from_factorization(&f, t.layout()).map_err(|e| Failure::from_error(label(path), e))
    };
    let source = space(ctx.source, src)?;
    let target = space(ctx.target, dst)?;
    let spec = parse_map::<T>(map_bytes).map_err(|e| Failure::from_error(label(ctx.map), e))?;
    let domain_json = match &spec.domain {
        Domain::Total => json!("total"),
        Domain::Partial(idx) => json!(idx),
    };
    let f_json = matrix_to_json(&spec.f);
    let g_json = vector_to_json(&spec.g);
    let map = linearize(spec.f, spec.g, &source, &target.n, spec.domain).map_err(|e| Failure::from_error(label(ctx.map), e))?;
    let check = map.check_trivial_constraint();
    let constraint = json!({"holds": check.holds, "residual": check.residual});

    Ok(match &cli.command {
        Command::MapLinearize { .. } => json!({
            "F": f_json,
            "g": g_json,
            "domain": domain_json,
            "C": matrix_to_json(map.c()),
            "trivial_constraint": constraint,
        }),
        Command::MapApply { .. } => {
            let mut images = Vec::new();
            for s in &source.states {
                if !map.domain().contains(s.index.unwrap_or(usize::MAX)) {
                    continue;
                }
                let image = map.apply(s).map_err(|e| Failure::from_error(label(ctx.map), e))?;
                images.push(json!({"state": s.label, "image": vector_to_json(&image.coords)}));
            }
            let violations: Vec<Value> = map
                .positivity_violations(&target.outcomes)
                .map_err(|e| Failure::from_error(label(ctx.map), e))?
                .into_iter()
                .map(|v| json!({"state": v.state, "outcome": v.outcome, "probability": v.probability.to_json()}))
                .collect();
            json!({
                "images": images,
                "trivial_constraint": constraint,
                "positivity_violations": violations,
            })
        }
        _ => unreachable!("only map commands reach here"),
    })
}

fn qgen(cli: &Cli, model_path: &str, format: TableFormat) -> Result<Vec<u8>, Failure> {
    let ctx = label(model_path);
    let bytes = read_input(model_path)?;
    let model = QuantumModel::from_json(&bytes).map_err(|e| Failure::from_error(ctx, e))?;
    let generated = model.generate_table().map_err(|e| Failure::from_error(ctx, e))?;
    if generated.max_trace_deviation > TRACE_RULE_TOLERANCE {
        return Err(Failure::internal(format!(
            "{ctx}: trace rule reproduced within {:e} only",
            generated.max_trace_deviation
        )));
    }
    let format = match format {
        TableFormat::Json => Format::Json,
        TableFormat::Csv => Format::Csv,
    };
    Ok(match cli.mode {
        Some(NumericMode::Exact) => {
            let exact = snap_table(&generated.table, SNAP_TOLERANCE).map_err(|e| Failure::from_error(ctx, e))?;
            serialize_table(&exact, format)
        }
        _ => serialize_table(&generated.table, format),
    })
}
