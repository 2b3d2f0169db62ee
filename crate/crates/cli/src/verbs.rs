//! One function per verb. Each returns the JSON report; its `verdict` field
//! decides the exit code.

use std::path::Path;

use caustyk::cp::ChoiMap;
use caustyk::dsl::{elaborate, parse_type, TypeExpr};
use caustyk::harness::laws::{law_suite, Budget};
use caustyk::harness::{fullness_reconstruct, ProbeScript, Reconstruction};
use caustyk::signalling::{
    bipartite_hom_state, coend_equiv, comb_decompose, equiv_certificate, nonsignalling_test_with, recompose, Cut,
    DecompPair, SeqSplit, SignalError, Signalling, ROUND_TRIP_TOL, SLIDE_TOL,
};
use caustyk::tol::Tolerances;
use caustyk::types::{self, CausObject, TypeError};
use serde_json::{json, Value};

use crate::io::{read_json, read_matrix, Format, MatrixInput};
use crate::CliError;

pub struct Ctx {
    pub format: Format,
    pub seed: u64,
    pub tol: Tolerances,
}

fn parse(text: &str) -> Result<TypeExpr, CliError> {
    parse_type(text).map_err(|e| CliError::Usage(e.to_string()))
}

fn build(e: &TypeExpr) -> Result<CausObject, CliError> {
    elaborate(e).map_err(|e| CliError::Usage(e.to_string()))
}

fn object(text: &str) -> Result<(TypeExpr, CausObject), CliError> {
    let e = parse(text)?;
    let o = build(&e)?;
    Ok((e, o))
}

fn first_order(e: &TypeExpr, role: &str) -> Result<CausObject, CliError> {
    let o = build(e)?;
    if !o.is_first_order() {
        return Err(CliError::Usage(format!("{role} `{e}` must be first-order")));
    }
    Ok(o)
}

pub fn typeinfo(text: &str) -> Result<Value, CliError> {
    let (e, a) = object(text)?;
    let alpha = types::alpha_scalar(&a).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(json!({
        "verdict": true,
        "type": e.to_string(),
        "factor_dims": a.factor_dims(),
        "dim": a.dim(),
        "state_rank": a.state_rank(),
        "effect_rank": a.effect_rank(),
        "first_order": a.is_first_order(),
        "flat_lambda": a.flat_lambda(),
        "alpha": alpha,
    }))
}

pub fn member(ctx: &Ctx, text: &str, file: &Path) -> Result<Value, CliError> {
    let (e, a) = object(text)?;
    let rho = read_matrix(file, ctx.format)?.into_state();
    let m = types::membership(&a, &rho, &ctx.tol).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(json!({
        "verdict": m.member,
        "type": e.to_string(),
        "min_eigenvalue": m.min_eigenvalue,
        "affine_residual": m.affine_residual,
    }))
}

pub fn morphism(ctx: &Ctx, source: &str, target: &str, file: &Path) -> Result<Value, CliError> {
    let (_, a) = object(source)?;
    let (_, b) = object(target)?;
    let f = read_matrix(file, ctx.format)?.into_map(a.factor_dims(), b.factor_dims())?;
    let residual = types::morphism_affine_residual(&f, &a, &b).map_err(|e| CliError::Usage(e.to_string()))?;
    let (verdict, reason) = match types::check_morphism_with(&f, &a, &b, &ctx.tol) {
        Ok(_) => (true, None),
        Err(e @ (TypeError::NotCp { .. } | TypeError::AffineFailure { .. })) => (false, Some(e.to_string())),
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    Ok(json!({
        "verdict": verdict,
        "source": source,
        "target": target,
        "min_eigenvalue": f.min_eigenvalue(),
        "affine_residual": residual,
        "reason": reason,
    }))
}

/// Splits `[P,Q] op [R,S]` into its operator and the four legs.
fn two_homs(e: &TypeExpr) -> Option<(&'static str, [&TypeExpr; 4])> {
    let (op, l, r) = match e {
        TypeExpr::Tensor(l, r) => ("tensor", l, r),
        TypeExpr::Seq(l, r) => ("seq", l, r),
        TypeExpr::Par(l, r) => ("par", l, r),
        _ => return None,
    };
    match (l.as_ref(), r.as_ref()) {
        (TypeExpr::Hom(p, q), TypeExpr::Hom(r, s)) => Some((op, [p.as_ref(), q.as_ref(), r.as_ref(), s.as_ref()])),
        _ => None,
    }
}

fn legs(parts: [&TypeExpr; 4]) -> Result<[usize; 4], CliError> {
    let mut d = [0; 4];
    for (k, p) in parts.iter().enumerate() {
        d[k] = first_order(p, "channel leg")?.dim();
    }
    Ok(d)
}

pub fn signalling(ctx: &Ctx, text: &str, file: &Path) -> Result<Value, CliError> {
    let (e, obj) = object(text)?;
    let (op, parts) = two_homs(&e)
        .ok_or_else(|| CliError::Usage(format!("`{e}` is not a product of two channel types")))?;
    let [p, q, r, s] = legs(parts)?;
    let tau = read_matrix(file, ctx.format)?.into_map(vec![p, r], vec![q, s])?;
    let cut = Cut::leading(&tau, 1, 1);
    let state = bipartite_hom_state(&tau, &cut).map_err(|e| CliError::Usage(e.to_string()))?;
    let m = types::membership(&obj, &state, &ctx.tol).map_err(|e| CliError::Usage(e.to_string()))?;
    let (class, a_to_b, b_to_a) = match nonsignalling_test_with(&tau, &cut, &ctx.tol) {
        Ok(rep) => (Some(rep.class), Some(rep.a_to_b_residual), Some(rep.b_to_a_residual)),
        Err(SignalError::NotCptp { .. }) => (None, None, None),
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let expected = class.is_some_and(|c| match op {
        "tensor" => c == Signalling::Both,
        "seq" => c.is_one_way(),
        _ => true,
    });
    if expected != m.member {
        return Err(CliError::Numerical(format!(
            "membership in `{e}` ({}) disagrees with the marginal tests ({})",
            m.member,
            class.map_or("not a channel", Signalling::as_str)
        )));
    }
    Ok(json!({
        "verdict": m.member,
        "type": e.to_string(),
        "classification": class.map_or("not_a_channel", Signalling::as_str),
        "a_to_b_residual": a_to_b,
        "b_to_a_residual": b_to_a,
        "min_eigenvalue": m.min_eigenvalue,
        "affine_residual": m.affine_residual,
    }))
}

/// `A < B`, `[X, A < B]` or `[X, (A < B) @ X']`.
fn seq_split(e: &TypeExpr) -> Result<(SeqSplit, Option<[&TypeExpr; 4]>), CliError> {
    let bad = || CliError::Usage(format!("`{e}` is not of the form A < B, [X, A < B] or [X, A < B @ X']"));
    let (x, inner, x_out) = match e {
        TypeExpr::Seq(..) => (None, e, None),
        TypeExpr::Hom(x, body) => match body.as_ref() {
            TypeExpr::Seq(..) => (Some(x.as_ref()), body.as_ref(), None),
            TypeExpr::Par(l, r) if matches!(l.as_ref(), TypeExpr::Seq(..)) => {
                (Some(x.as_ref()), l.as_ref(), Some(r.as_ref()))
            }
            _ => return Err(bad()),
        },
        _ => return Err(bad()),
    };
    let TypeExpr::Seq(l, r) = inner else {
        return Err(bad());
    };
    let dims = |b: Option<&TypeExpr>, role| -> Result<Vec<usize>, CliError> {
        match b {
            None => Ok(vec![1]),
            Some(b) => Ok(first_order(b, role)?.factor_dims()),
        }
    };
    let split = SeqSplit::new(dims(x, "input boundary")?, build(l)?, build(r)?, dims(x_out, "output boundary")?);
    let homs = match (x, x_out, l.as_ref(), r.as_ref()) {
        (None, None, TypeExpr::Hom(p, q), TypeExpr::Hom(r, s)) => {
            Some([p.as_ref(), q.as_ref(), r.as_ref(), s.as_ref()])
        }
        _ => None,
    };
    Ok((split, homs))
}

pub fn decompose(ctx: &Ctx, text: &str, file: &Path) -> Result<Value, CliError> {
    let e = parse(text)?;
    let (split, homs) = seq_split(&e)?;
    let input = read_matrix(file, ctx.format)?;
    let dx: usize = split.x.iter().product();
    let out_dims = split.out_dims();
    let dout: usize = out_dims.iter().product();
    let tau = match (&input, homs) {
        (MatrixInput::Choi(c), Some(parts)) if c.in_dim() != dx || c.out_dim() != dout => {
            // a two-party channel read as a state of the two channel types
            let [p, q, r, s] = legs(parts)?;
            let m = input.into_map(vec![p, r], vec![q, s])?;
            let state = bipartite_hom_state(&m, &Cut::leading(&m, 1, 1)).map_err(|e| CliError::Usage(e.to_string()))?;
            ChoiMap::from_state(&state, out_dims.clone()).map_err(|e| CliError::Usage(e.to_string()))?
        }
        _ => input.into_map(split.x.clone(), out_dims.clone())?,
    };
    if tau.min_eigenvalue() < -ctx.tol.psd {
        return Ok(json!({ "verdict": false, "reason": "not_cp", "min_eigenvalue": tau.min_eigenvalue() }));
    }
    match comb_decompose(&tau, &split) {
        Ok(pair) => {
            let back = recompose(&pair).map_err(|e| CliError::Numerical(e.to_string()))?;
            let round_trip = back.distance(&tau);
            if round_trip > ROUND_TRIP_TOL {
                return Err(CliError::Numerical(format!("round trip residual {round_trip:.3e}")));
            }
            Ok(json!({ "verdict": true, "pair": pair, "round_trip": round_trip }))
        }
        Err(SignalError::NotOneWay { residual }) => {
            Ok(json!({ "verdict": false, "reason": "not_one_way", "residual": residual }))
        }
        Err(e @ (SignalError::Inconsistent { .. } | SignalError::Cp(_))) => Err(CliError::Numerical(e.to_string())),
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

fn read_pair(ctx: &Ctx, path: &Path) -> Result<DecompPair, CliError> {
    if ctx.format == Format::Raw {
        return Err(CliError::Usage("decomposition files are JSON only".into()));
    }
    let v = read_json(path)?;
    // accept both a bare pair and the output of `decompose`
    let v = match v.get("pair") {
        Some(p) => p.clone(),
        None => v,
    };
    let pair: DecompPair = serde_json::from_value(v).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    DecompPair::new(pair.rho, pair.sigma).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn equiv(ctx: &Ctx, first: &Path, second: &Path, certificate: bool) -> Result<Value, CliError> {
    let p1 = read_pair(ctx, first)?;
    let p2 = read_pair(ctx, second)?;
    let equivalent = coend_equiv(&p1, &p2).map_err(|e| CliError::Usage(e.to_string()))?;
    let distance = match (recompose(&p1), recompose(&p2)) {
        (Ok(a), Ok(b)) => a.distance(&b),
        (Err(e), _) | (_, Err(e)) => return Err(CliError::Numerical(e.to_string())),
    };
    let mut report = json!({ "verdict": equivalent, "composite_distance": distance });
    if certificate && equivalent {
        let steps = equiv_certificate(&p1, &p2).map_err(|e| CliError::Numerical(e.to_string()))?;
        for (k, s) in steps.iter().enumerate() {
            let r = s.check().map_err(|e| CliError::Numerical(e.to_string()))?;
            if r > SLIDE_TOL || !s.f.is_cptp(&ctx.tol) {
                return Err(CliError::Numerical(format!("certificate step {k} fails (residual {r:.3e})")));
            }
        }
        report["certificate"] = serde_json::to_value(&steps).expect("serializable");
    }
    Ok(report)
}

/// Prints one JSON line per record, then a summary line.
pub fn laws(seed: u64, budget: Budget) -> Result<Value, CliError> {
    let records = law_suite(seed, budget);
    for r in &records {
        println!("{}", serde_json::to_string(r).expect("serializable"));
    }
    let failures = records.iter().filter(|r| !r.pass).count();
    Ok(json!({
        "verdict": failures == 0,
        "seed": seed,
        "budget": budget,
        "records": records.len(),
        "failures": failures,
    }))
}

pub fn reconstruct(ctx: &Ctx, source: &str, target: &str, script: &Path, samples: usize) -> Result<Value, CliError> {
    let (_, a) = object(source)?;
    let (_, b) = object(target)?;
    let script: ProbeScript = serde_json::from_value(read_json(script)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", script.display())))?;
    let bb = script.into_transform(&a, &b).map_err(|e| CliError::Usage(e.to_string()))?;
    let rec = fullness_reconstruct(&bb, ctx.seed, samples).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(match rec {
        Reconstruction::Recovered {
            morphism,
            max_disagreement,
            probes,
        } => json!({
            "verdict": true,
            "morphism": morphism.map(),
            "max_disagreement": max_disagreement,
            "probes": probes,
        }),
        Reconstruction::NotInImage { candidate, reason } => json!({
            "verdict": false,
            "not_in_image": reason,
            "candidate": candidate,
        }),
    })
}
